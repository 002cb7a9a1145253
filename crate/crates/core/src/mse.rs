//! Exact mean-squared interpolation error computed from the covariance.
//!
//! With vertex weights `w_v` summing to one, `X(t) - X_N(t) = sum_v w_v (X(t) - X(t_v))`,
//! so the pointwise MSE is
//!
//! ```text
//! e(t)^2 = sum_v w_v g(t, t_v) - 1/2 sum_v sum_u w_v w_u g(t_v, t_u)
//! ```
//!
//! with `g` the increment variance. This equals
//! `r(t,t) - 2 sum_v w_v r(t,t_v) + sum_vu w_v w_u r(t_v,t_u)` exactly but does
//! not cancel `O(1)` variances against `O(n^-alpha)` errors. The IMSE integrates
//! `e(t)^2` cell by cell with a tensor Gauss rule; cell contributions are
//! reduced by pairwise summation in cell order, so results do not depend on
//! the thread count.

use std::collections::HashMap;

use nalgebra::{Cholesky, DMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::design::Design;
use crate::error::{Error, Result};
use crate::interp::{fill_weights, locate_cell, locate_on_axis};
use crate::kernels::{clamp_nonnegative, CovarianceModel};
use crate::quadrature::{pairwise_sum, QuadratureSpec, TensorRule};

/// Local points of a cell rule with their precomputed vertex weights.
#[derive(Debug, Clone)]
pub struct CellRule {
    rule: TensorRule,
    vertex_weights: Vec<f64>,
}

impl CellRule {
    pub fn new(rule: TensorRule) -> Self {
        let nv = 1usize << rule.dim;
        let mut vertex_weights = vec![0.0; rule.len() * nv];
        for p in 0..rule.len() {
            fill_weights(rule.point(p), &mut vertex_weights[p * nv..(p + 1) * nv]);
        }
        Self {
            rule,
            vertex_weights,
        }
    }

    pub fn integration(spec: &QuadratureSpec, dim: usize) -> Result<Self> {
        Ok(Self::new(TensorRule::new(&spec.rule()?, dim)))
    }

    pub fn scan(points_per_axis: usize, dim: usize) -> Self {
        Self::new(TensorRule::scan_grid(points_per_axis, dim))
    }

    pub fn len(&self) -> usize {
        self.rule.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rule.is_empty()
    }
}

/// Scratch state for one cell: vertex coordinates and their variogram matrix.
struct CellState {
    dim: usize,
    vertices: Vec<f64>,
    gram: Vec<f64>,
    point: Vec<f64>,
    vertex: Vec<f64>,
    diagonal: Vec<f64>,
}

impl CellState {
    fn new(dim: usize) -> Self {
        let nv = 1usize << dim;
        Self {
            dim,
            vertices: vec![0.0; nv * dim],
            gram: vec![0.0; nv * nv],
            point: vec![0.0; dim],
            vertex: vec![0.0; dim],
            diagonal: vec![0.0; dim],
        }
    }

    fn vertex_coords(&self, v: usize) -> &[f64] {
        &self.vertices[v * self.dim..(v + 1) * self.dim]
    }

    /// Loads the cell `[vertex, vertex + diagonal]` from `self.vertex`/`self.diagonal`.
    fn load(&mut self, model: &CovarianceModel) {
        let d = self.dim;
        let nv = 1usize << d;
        for v in 0..nv {
            for m in 0..d {
                let upper = (v >> m) & 1 == 1;
                self.vertices[v * d + m] = if upper {
                    self.vertex[m] + self.diagonal[m]
                } else {
                    self.vertex[m]
                };
            }
        }
        for v in 0..nv {
            self.gram[v * nv + v] = 0.0;
            for u in 0..v {
                let g = model.variogram_unchecked(self.vertex_coords(v), self.vertex_coords(u));
                self.gram[v * nv + u] = g;
                self.gram[u * nv + v] = g;
            }
        }
    }

    /// Raw `e(t)^2` at local coordinate `s` with vertex weights `w`.
    fn mse(&mut self, model: &CovarianceModel, s: &[f64], w: &[f64]) -> f64 {
        let d = self.dim;
        let nv = 1usize << d;
        for m in 0..d {
            self.point[m] = self.vertex[m] + self.diagonal[m] * s[m];
        }
        let mut cross = 0.0;
        let mut quad = 0.0;
        for v in 0..nv {
            let wv = w[v];
            if wv == 0.0 {
                continue;
            }
            let g = model.variogram_unchecked(&self.point, &self.vertices[v * d..(v + 1) * d]);
            cross += wv * g;
            let row = &self.gram[v * nv..(v + 1) * nv];
            let mut inner = 0.0;
            for u in 0..nv {
                inner += w[u] * row[u];
            }
            quad += wv * inner;
        }
        cross - 0.5 * quad
    }

    /// Mean of `e^2` over the cell under `rule`, and the largest value seen on `scan`.
    fn integrate(
        &mut self,
        model: &CovarianceModel,
        rule: &CellRule,
        scan: Option<&CellRule>,
    ) -> Result<(f64, f64)> {
        self.load(model);
        let nv = 1usize << self.dim;
        let mut mean = 0.0;
        for p in 0..rule.len() {
            let w = &rule.vertex_weights[p * nv..(p + 1) * nv];
            let e = clamp_nonnegative(self.mse(model, rule.rule.point(p), w))?;
            mean += rule.rule.weights[p] * e;
        }
        let mut max: f64 = 0.0;
        if let Some(scan) = scan {
            for p in 0..scan.len() {
                let w = &scan.vertex_weights[p * nv..(p + 1) * nv];
                let e = clamp_nonnegative(self.mse(model, scan.rule.point(p), w))?;
                max = max.max(e);
            }
        }
        Ok((mean, max))
    }
}

fn check_dim(model: &CovarianceModel, dim: usize) -> Result<()> {
    if model.dim() != dim {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            got: dim,
        });
    }
    Ok(())
}

/// `E (X(t) - X_N(t))^2` at a single point.
pub fn pointwise_mse(model: &CovarianceModel, design: &Design, t: &[f64]) -> Result<f64> {
    check_dim(model, design.dim())?;
    let loc = locate_cell(design, t)?;
    let mut state = CellState::new(design.dim());
    design.cell_geometry(&loc.index, &mut state.vertex, &mut state.diagonal);
    state.load(model);
    let mut w = vec![0.0; 1 << design.dim()];
    fill_weights(&loc.local, &mut w);
    clamp_nonnegative(state.mse(model, &loc.local, &w))
}

/// `int_{[0,1]^d} e(vertex + diagonal * s)^2 ds` for a single box.
///
/// This is the IMSE of interpolating over `[vertex, vertex + diagonal]`
/// from its `2^d` corners, in local coordinates.
pub fn box_mean_mse(
    model: &CovarianceModel,
    vertex: &[f64],
    diagonal: &[f64],
    quad: &QuadratureSpec,
) -> Result<f64> {
    let d = vertex.len();
    check_dim(model, d)?;
    if diagonal.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: diagonal.len(),
        });
    }
    let rule = CellRule::integration(quad, d)?;
    box_mean_mse_with(model, vertex, diagonal, &rule)
}

pub(crate) fn box_mean_mse_with(
    model: &CovarianceModel,
    vertex: &[f64],
    diagonal: &[f64],
    rule: &CellRule,
) -> Result<f64> {
    let mut state = CellState::new(vertex.len());
    state.vertex.copy_from_slice(vertex);
    state.diagonal.copy_from_slice(diagonal);
    Ok(state.integrate(model, rule, None)?.0)
}

/// Integrated and uniform mean-squared errors of a design.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorReport {
    /// `e_N^2 = int e(t)^2 dt`.
    pub imse_squared: f64,
    pub sample_count: u64,
    pub allocation: Vec<usize>,
    /// Largest pointwise MSE on the scan grid; a lower estimate of the sup.
    pub sup_mse: f64,
    pub quad_order: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cell_contributions: Option<Vec<f64>>,
}

fn scan_points(quad: &QuadratureSpec, cells: usize, dim: usize) -> usize {
    let m = quad.scan_points;
    let per_cell = (quad.scan_cap as f64 / cells.max(1) as f64).powf(1.0 / dim as f64);
    let floor = m.min(3);
    m.min((per_cell.floor() as usize).max(floor))
}

/// `(mean MSE per cell, max scanned MSE per cell)` for every cell, in cell order.
fn cell_pass(
    model: &CovarianceModel,
    design: &Design,
    rule: &CellRule,
    scan: Option<&CellRule>,
) -> Result<Vec<(f64, f64)>> {
    let d = design.dim();
    (0..design.cell_count())
        .into_par_iter()
        .map_init(
            || (CellState::new(d), vec![0usize; d]),
            |(state, index), c| {
                design.cell_index(c, index);
                design.cell_geometry(index, &mut state.vertex, &mut state.diagonal);
                let volume: f64 = state.diagonal.iter().product();
                let (mean, max) = state.integrate(model, rule, scan)?;
                Ok((volume * mean, max))
            },
        )
        .collect()
}

fn run_report(
    model: &CovarianceModel,
    design: &Design,
    quad: &QuadratureSpec,
    keep_cells: bool,
) -> Result<ErrorReport> {
    check_dim(model, design.dim())?;
    let d = design.dim();
    let rule = CellRule::integration(quad, d)?;
    let scan = CellRule::scan(scan_points(quad, design.cell_count(), d), d);
    let cells = cell_pass(model, design, &rule, Some(&scan))?;
    let contributions: Vec<f64> = cells.iter().map(|c| c.0).collect();
    let sup = cells.iter().map(|c| c.1).fold(0.0, f64::max);
    Ok(ErrorReport {
        imse_squared: pairwise_sum(&contributions),
        sample_count: design.sample_count() as u64,
        allocation: design.allocation().n.clone(),
        sup_mse: sup,
        quad_order: quad.order,
        cell_contributions: keep_cells.then_some(contributions),
    })
}

/// Squared IMSE `e_N^2` of the design, plus the sup-scan estimate.
pub fn imse(model: &CovarianceModel, design: &Design, quad: &QuadratureSpec) -> Result<ErrorReport> {
    run_report(model, design, quad, false)
}

/// As [`imse`], keeping the per-cell contributions.
pub fn imse_with_cells(
    model: &CovarianceModel,
    design: &Design,
    quad: &QuadratureSpec,
) -> Result<ErrorReport> {
    run_report(model, design, quad, true)
}

/// Max of the pointwise MSE over `quad.scan_points^d` equispaced points per
/// cell, endpoints included. A lower estimate of `sup_t e(t)^2`.
pub fn sup_mse(model: &CovarianceModel, design: &Design, quad: &QuadratureSpec) -> Result<f64> {
    check_dim(model, design.dim())?;
    quad.validate()?;
    let d = design.dim();
    let scan = CellRule::scan(scan_points(quad, design.cell_count(), d), d);
    let nv = 1usize << d;
    let maxima: Vec<f64> = (0..design.cell_count())
        .into_par_iter()
        .map_init(
            || (CellState::new(d), vec![0usize; d]),
            |(state, index), c| -> Result<f64> {
                design.cell_index(c, index);
                design.cell_geometry(index, &mut state.vertex, &mut state.diagonal);
                state.load(model);
                let mut max: f64 = 0.0;
                for p in 0..scan.len() {
                    let w = &scan.vertex_weights[p * nv..(p + 1) * nv];
                    max = max.max(clamp_nonnegative(state.mse(model, scan.rule.point(p), w))?);
                }
                Ok(max)
            },
        )
        .collect::<Result<_>>()?;
    Ok(maxima.into_iter().fold(0.0, f64::max))
}

/// IMSE at `quad.order` and at twice that order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuadratureCheck {
    pub coarse: f64,
    pub fine: f64,
    pub relative_change: f64,
    /// Set when the change exceeds [`REFINEMENT_THRESHOLD`].
    pub needs_refinement: bool,
}

pub const REFINEMENT_THRESHOLD: f64 = 1e-4;

pub fn quadrature_check(
    model: &CovarianceModel,
    design: &Design,
    quad: &QuadratureSpec,
) -> Result<QuadratureCheck> {
    check_dim(model, design.dim())?;
    let d = design.dim();
    let integrate = |spec: &QuadratureSpec| -> Result<f64> {
        let rule = CellRule::integration(spec, d)?;
        let cells = cell_pass(model, design, &rule, None)?;
        let v: Vec<f64> = cells.iter().map(|c| c.0).collect();
        Ok(pairwise_sum(&v))
    };
    let coarse = integrate(quad)?;
    let fine = integrate(&QuadratureSpec {
        order: quad.order * 2,
        ..*quad
    })?;
    let relative_change = if fine == 0.0 {
        (fine - coarse).abs()
    } else {
        ((fine - coarse) / fine).abs()
    };
    Ok(QuadratureCheck {
        coarse,
        fine,
        relative_change,
        needs_refinement: relative_change > REFINEMENT_THRESHOLD,
    })
}

/// Monte-Carlo settings for [`mc_imse`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, serde::Deserialize)]
#[serde(default)]
pub struct McSpec {
    /// Independent replicates; each draws fresh integration points.
    pub replicates: usize,
    /// Total paths, split evenly over replicates.
    pub paths: usize,
    pub points_per_replicate: usize,
    pub seed: u64,
}

impl Default for McSpec {
    fn default() -> Self {
        Self {
            replicates: 50,
            paths: 10_000,
            points_per_replicate: 64,
            seed: 0x5eed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub replicates: usize,
    pub paths_per_replicate: usize,
}

/// Lower Cholesky factor of `cov`, with diagonal jitter escalated from
/// `1e-12 trace/n` by factors of ten up to `1e-6 trace/n`.
pub fn jittered_cholesky(cov: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = cov.nrows();
    let scale = cov.trace() / n as f64;
    let mut jitter = 1e-12 * scale;
    loop {
        let mut m = cov.clone();
        for i in 0..n {
            m[(i, i)] += jitter;
        }
        if let Some(ch) = Cholesky::new(m) {
            return Ok(ch.l());
        }
        jitter *= 10.0;
        if jitter > 1e-6 * scale * (1.0 + 1e-9) {
            return Err(Error::Factorization(jitter / 10.0));
        }
    }
}

/// Simulation estimate of `e_N^2` with its standard error.
///
/// Each replicate draws uniform points in the cube, simulates the Gaussian
/// field jointly at those points and at the knots of their cells, and
/// averages `(X(t) - X_N(t))^2` over points and paths. The standard error is
/// taken across replicates, so it covers both path and point sampling.
pub fn mc_imse(model: &CovarianceModel, design: &Design, spec: &McSpec) -> Result<McEstimate> {
    check_dim(model, design.dim())?;
    if spec.replicates < 2 || spec.paths < spec.replicates || spec.points_per_replicate == 0 {
        return Err(Error::InvalidArgument(
            "need at least 2 replicates, one path per replicate and one point".into(),
        ));
    }
    let paths = spec.paths / spec.replicates;
    let estimates: Vec<f64> = (0..spec.replicates)
        .into_par_iter()
        .map(|r| replicate(model, design, spec, paths, r as u64))
        .collect::<Result<_>>()?;
    let n = estimates.len() as f64;
    let mean = estimates.iter().sum::<f64>() / n;
    let var = estimates.iter().map(|e| (e - mean) * (e - mean)).sum::<f64>() / (n - 1.0);
    Ok(McEstimate {
        mean,
        std_error: (var / n).sqrt(),
        replicates: spec.replicates,
        paths_per_replicate: paths,
    })
}

fn replicate(
    model: &CovarianceModel,
    design: &Design,
    spec: &McSpec,
    paths: usize,
    stream: u64,
) -> Result<f64> {
    let d = design.dim();
    let nv = 1usize << d;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(stream);

    let points: Vec<Vec<f64>> = (0..spec.points_per_replicate)
        .map(|_| (0..d).map(|_| rng.gen::<f64>()).collect())
        .collect();

    // knots needed by the sampled points, numbered in order of first use
    let mut knot_ids: HashMap<Vec<usize>, usize> = HashMap::new();
    let mut knots: Vec<Vec<f64>> = Vec::new();
    let mut stencils: Vec<(Vec<usize>, Vec<f64>)> = Vec::with_capacity(points.len());
    for t in &points {
        let mut index = Vec::with_capacity(d);
        let mut local = Vec::with_capacity(d);
        for (m, &x) in t.iter().enumerate() {
            let (i, s) = locate_on_axis(design.axis(m), x);
            index.push(i);
            local.push(s);
        }
        let mut w = vec![0.0; nv];
        fill_weights(&local, &mut w);
        let mut ids = Vec::with_capacity(nv);
        for v in 0..nv {
            let knot: Vec<usize> = index
                .iter()
                .enumerate()
                .map(|(m, &i)| i + ((v >> m) & 1))
                .collect();
            let next = knots.len();
            let id = *knot_ids.entry(knot.clone()).or_insert_with(|| {
                knots.push(design.knot(&knot));
                next
            });
            ids.push(id);
        }
        stencils.push((ids, w));
    }

    let k = knots.len();
    let all: Vec<&Vec<f64>> = knots.iter().chain(points.iter()).collect();
    let n = all.len();
    let cov = DMatrix::from_fn(n, n, |a, b| model.covariance_unchecked(all[a], all[b]));
    if cov.trace() == 0.0 {
        return Ok(0.0);
    }
    let l = jittered_cholesky(&cov)?;
    let z = DMatrix::from_fn(n, paths, |_, _| rng.sample::<f64, _>(StandardNormal));
    let x = l * z;

    let mut total = 0.0;
    for path in 0..paths {
        let col = x.column(path);
        for (p, (ids, w)) in stencils.iter().enumerate() {
            let interp: f64 = ids.iter().zip(w).map(|(&id, &wv)| wv * col[id]).sum();
            let err = col[k + p] - interp;
            total += err * err;
        }
    }
    Ok(total / (paths * points.len()) as f64)
}
