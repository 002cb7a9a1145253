//! Asymptotic IMSE constants, optimal rates and uniform-error bounds.
//!
//! For a locally stationary field with scales `c_j` sampled on a cross-regular
//! design with densities `h_j` and grid sizes `n_j`,
//! `e_N^2 ~ sum_j v_j n_j^{-alpha_j}` with
//! `v_j = int c_j(t) b_{alpha_j, l_j}(H_j(t^j)) dt`, where
//! `H_j(t^j) = (1/h_j(t_m))_{m in component j}` and `b_{beta,m}(u)` is the
//! single-cell IMSE of a fractional Brownian field over the box `[0, u]`.

use rayon::prelude::*;
use serde::Serialize;

use crate::design::{harmonic_rate, Allocation, Density};
use crate::error::{Error, Result};
use crate::kernels::{CovarianceModel, Decomposition, Smoothness};
use crate::mse::{box_mean_mse_with, CellRule};
use crate::quadrature::{pairwise_sum, QuadratureSpec, Rule1D, TensorRule};

/// Points of the tabulated integrated scale functions.
pub const SCALE_TABLE: usize = 257;
/// Grid points per axis of the cached `b` table.
pub const B_GRID: usize = 33;
/// Positive floor applied inside `gamma_norm`.
pub const NORM_FLOOR: f64 = 1e-12;

fn check_beta(beta: f64) -> Result<()> {
    if !(beta > 0.0 && beta < 2.0) {
        return Err(Error::InvalidSmoothness(beta));
    }
    Ok(())
}

/// `a_beta = 2/((beta+1)(beta+2)) - 1/6 = b_{beta,1}(1)`.
pub fn a_beta(beta: f64) -> Result<f64> {
    check_beta(beta)?;
    Ok(2.0 / ((beta + 1.0) * (beta + 2.0)) - 1.0 / 6.0)
}

fn check_box(m: usize, u: &[f64]) -> Result<()> {
    if m == 0 || u.len() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            got: u.len(),
        });
    }
    if let Some(x) = u.iter().find(|&&x| !(x > 0.0) || !x.is_finite()) {
        return Err(Error::InvalidArgument(format!("box side {x} is not positive")));
    }
    Ok(())
}

/// `b_{beta,m}(u)`: mean squared MPLI error of `B_{beta,m}` over the box `[0,u]`
/// interpolated from its corners, averaged over the box.
pub fn b_const(beta: f64, m: usize, u: &[f64], quad: &QuadratureSpec) -> Result<f64> {
    check_beta(beta)?;
    check_box(m, u)?;
    let rule = CellRule::integration(quad, m)?;
    b_with(beta, u, &rule)
}

fn b_with(beta: f64, u: &[f64], rule: &CellRule) -> Result<f64> {
    let model = CovarianceModel::fbf(vec![u.len()], vec![beta])?;
    box_mean_mse_with(&model, &vec![0.0; u.len()], u, rule)
}

/// `b_{beta,m}` tabulated on a log-spaced `B_GRID^m` grid over `[lo, hi]^m`,
/// interpolated multilinearly in `(log u, log b)`.
#[derive(Debug, Clone)]
pub struct BTable {
    beta: f64,
    m: usize,
    log_lo: f64,
    log_hi: f64,
    log_b: Vec<f64>,
}

impl BTable {
    pub fn new(beta: f64, m: usize, lo: f64, hi: f64, quad: &QuadratureSpec) -> Result<Self> {
        check_beta(beta)?;
        if m == 0 || m > 4 {
            return Err(Error::InvalidArgument(format!("b table of dimension {m}")));
        }
        check_box(1, &[lo])?;
        if !(hi >= lo) || !hi.is_finite() {
            return Err(Error::InvalidArgument(format!("empty range [{lo}, {hi}]")));
        }
        let rule = CellRule::integration(quad, m)?;
        let log_lo = lo.ln();
        // a degenerate range still needs distinct grid lines
        let log_hi = hi.ln().max(log_lo + 1e-9);
        let g = B_GRID;
        let total = g.pow(m as u32);
        let log_b = (0..total)
            .into_par_iter()
            .map(|idx| {
                let u: Vec<f64> = (0..m)
                    .map(|a| {
                        let i = (idx / g.pow(a as u32)) % g;
                        (log_lo + (log_hi - log_lo) * i as f64 / (g - 1) as f64).exp()
                    })
                    .collect();
                b_with(beta, &u, &rule).map(f64::ln)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            beta,
            m,
            log_lo,
            log_hi,
            log_b,
        })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn eval(&self, u: &[f64]) -> f64 {
        let g = B_GRID;
        let span = self.log_hi - self.log_lo;
        let mut base = 0usize;
        let mut frac = [0.0f64; 16];
        let mut stride = [0usize; 16];
        for a in 0..self.m {
            let pos = ((u[a].ln() - self.log_lo) / span * (g - 1) as f64).clamp(0.0, (g - 1) as f64);
            let k = (pos as usize).min(g - 2);
            frac[a] = pos - k as f64;
            stride[a] = g.pow(a as u32);
            base += k * stride[a];
        }
        let mut acc = 0.0;
        for v in 0..(1usize << self.m) {
            let mut w = 1.0;
            let mut idx = base;
            for a in 0..self.m {
                if (v >> a) & 1 == 1 {
                    w *= frac[a];
                    idx += stride[a];
                } else {
                    w *= 1.0 - frac[a];
                }
            }
            if w != 0.0 {
                acc += w * self.log_b[idx];
            }
        }
        acc.exp()
    }
}

/// How `v_general` evaluates `b` at the quadrature nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, serde::Deserialize)]
pub enum BPrecision {
    /// Interpolate in a cached [`BTable`].
    #[default]
    Cached,
    /// Evaluate `b` at every distinct node tuple.
    Exact,
}

/// Integrated scale `C_j` tabulated at `i / (SCALE_TABLE - 1)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntegratedScale {
    pub values: Vec<f64>,
}

impl IntegratedScale {
    /// Piecewise-linear interpolation of the table.
    pub fn eval(&self, x: f64) -> f64 {
        let segments = self.values.len() - 1;
        let pos = x.clamp(0.0, 1.0) * segments as f64;
        let k = (pos as usize).min(segments - 1);
        let tau = pos - k as f64;
        self.values[k] + tau * (self.values[k + 1] - self.values[k])
    }

    /// The density `h ∝ C^{1/(1+alpha)}` built from the table.
    pub fn density(&self, alpha: f64) -> Result<Density> {
        crate::design::density_from_scale_table(&self.values, alpha)
    }
}

/// `C(x) = int c(t) dt` over all coordinates except `keep`, with `t_keep = x`.
pub fn integrated_scale<F>(scale: F, keep: usize, dim: usize, quad: &QuadratureSpec) -> Result<IntegratedScale>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    if keep >= dim {
        return Err(Error::InvalidArgument(format!(
            "coordinate {keep} outside dimension {dim}"
        )));
    }
    let rest = TensorRule::new(&quad.rule()?, dim - 1);
    let values = (0..SCALE_TABLE)
        .into_par_iter()
        .map(|i| {
            let x = i as f64 / (SCALE_TABLE - 1) as f64;
            let mut t = vec![0.0; dim];
            let terms: Vec<f64> = (0..rest.len())
                .map(|p| {
                    let r = rest.point(p);
                    t[..keep].copy_from_slice(&r[..keep]);
                    t[keep] = x;
                    t[keep + 1..].copy_from_slice(&r[keep..]);
                    rest.weights[p] * scale(&t)
                })
                .collect();
            pairwise_sum(&terms)
        })
        .collect();
    Ok(IntegratedScale { values })
}

/// `C_j` of a model, keeping the last coordinate of component `j`.
pub fn integrated_c(model: &CovarianceModel, j: usize, quad: &QuadratureSpec) -> Result<IntegratedScale> {
    let dec = model.decomposition();
    if j >= dec.components() {
        return Err(Error::InvalidDecomposition(format!(
            "component {j} of {}",
            dec.components()
        )));
    }
    let local = model.local_stationarity().ok_or_else(|| {
        Error::InvalidArgument("model has no local stationarity functions".into())
    })?;
    integrated_scale(|t| local.eval(j, t), dec.last_coordinate(j), dec.dim(), quad)
}

/// One-dimensional rule used for integrals of scale and density functions:
/// Gauss–Legendre on panels aligned with the scale table.
fn line_rule(quad: &QuadratureSpec) -> Result<Rule1D> {
    quad.validate()?;
    Ok(Rule1D::gauss_legendre(quad.order).composite(SCALE_TABLE - 1))
}

/// `||C||_gamma = (int C^gamma)^{1/gamma}`, with `C` floored at [`NORM_FLOOR`].
pub fn gamma_norm<F: Fn(f64) -> f64>(scale: F, gamma: f64, quad: &QuadratureSpec) -> Result<f64> {
    if !(gamma > 0.0) {
        return Err(Error::InvalidArgument(format!("gamma = {gamma}")));
    }
    let rule = line_rule(quad)?;
    Ok(rule
        .integrate(0.0, 1.0, |x| scale(x).max(NORM_FLOOR).powf(gamma))
        .powf(1.0 / gamma))
}

/// `v_j` for component `j` of `decomposition`: tensor quadrature of
/// `c_j(t) b_{alpha, l_j}(H_j(t^j))` over the cube.
pub fn v_general<F>(
    scale: F,
    j: usize,
    density: &Density,
    alpha: f64,
    decomposition: &Decomposition,
    quad: &QuadratureSpec,
    precision: BPrecision,
) -> Result<f64>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    check_beta(alpha)?;
    if j >= decomposition.components() {
        return Err(Error::InvalidDecomposition(format!(
            "component {j} of {}",
            decomposition.components()
        )));
    }
    let d = decomposition.dim();
    let l = decomposition.sizes()[j];
    let range = decomposition.range(j);
    let rule1 = quad.rule()?;
    let rule = TensorRule::new(&rule1, d);

    let integral_of_scale = || {
        let terms: Vec<f64> = (0..rule.len())
            .into_par_iter()
            .map(|p| rule.weights[p] * scale(rule.point(p)))
            .collect();
        pairwise_sum(&terms)
    };
    if density.is_uniform() {
        return Ok(b_const(alpha, l, &vec![1.0; l], quad)? * integral_of_scale());
    }

    // H only takes the values 1/h(x_i) at the 1-D nodes, so b is needed on
    // the q^l node tuples of the component
    let q = rule1.len();
    let inv_h: Vec<f64> = rule1.nodes.iter().map(|&x| 1.0 / density.pdf(x)).collect();
    let tuples = q.pow(l as u32);
    let tuple_u = |idx: usize| -> Vec<f64> {
        (0..l).map(|a| inv_h[(idx / q.pow(a as u32)) % q]).collect()
    };
    let b_nodes: Vec<f64> = match precision {
        BPrecision::Exact => {
            let cell = CellRule::integration(quad, l)?;
            (0..tuples)
                .into_par_iter()
                .map(|idx| b_with(alpha, &tuple_u(idx), &cell))
                .collect::<Result<_>>()?
        }
        BPrecision::Cached => {
            let lo = inv_h.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = inv_h.iter().cloned().fold(0.0, f64::max);
            let table = BTable::new(alpha, l, lo, hi, quad)?;
            (0..tuples).map(|idx| table.eval(&tuple_u(idx))).collect()
        }
    };

    let terms: Vec<f64> = (0..rule.len())
        .into_par_iter()
        .map(|p| {
            let mut idx = 0;
            let mut stride = 1;
            for m in range.clone() {
                idx += ((p / q.pow(m as u32)) % q) * stride;
                stride *= q;
            }
            rule.weights[p] * scale(rule.point(p)) * b_nodes[idx]
        })
        .collect();
    Ok(pairwise_sum(&terms))
}

/// `v_j` for every component of a model, from its local stationarity functions.
pub fn model_constants(
    model: &CovarianceModel,
    densities: &[Density],
    quad: &QuadratureSpec,
    precision: BPrecision,
) -> Result<Vec<f64>> {
    let dec = model.decomposition();
    let sm = model.smoothness();
    if densities.len() != dec.components() {
        return Err(Error::DimensionMismatch {
            expected: dec.components(),
            got: densities.len(),
        });
    }
    let local = model.local_stationarity().ok_or_else(|| {
        Error::InvalidArgument("model has no local stationarity functions".into())
    })?;
    (0..dec.components())
        .map(|j| {
            v_general(
                |t| local.eval(j, t),
                j,
                &densities[j],
                sm.alpha()[j],
                &dec,
                quad,
                precision,
            )
        })
        .collect()
}

fn check_single(l: usize) -> Result<()> {
    if l != 1 {
        return Err(Error::InvalidDecomposition(format!(
            "one-dimensional formula needs l = 1, got {l}"
        )));
    }
    Ok(())
}

fn weighted_scale<F: Fn(f64) -> f64>(scale: F, density: &Density, alpha: f64, quad: &QuadratureSpec) -> Result<f64> {
    let rule = line_rule(quad)?;
    Ok(rule.integrate(0.0, 1.0, |x| scale(x) * density.pdf(x).powf(-alpha)))
}

/// `v_j = a_alpha int C_j h^{-alpha}` for a one-coordinate component.
pub fn v_one_dim<F: Fn(f64) -> f64>(
    scale: F,
    density: &Density,
    alpha: f64,
    l: usize,
    quad: &QuadratureSpec,
) -> Result<f64> {
    check_single(l)?;
    Ok(a_beta(alpha)? * weighted_scale(scale, density, alpha, quad)?)
}

/// Upper constant `w_j = l^{1+alpha/2} (a_alpha + 1/6) int C_j h^{-alpha}`.
pub fn w_const<F: Fn(f64) -> f64>(
    scale: F,
    density: &Density,
    alpha: f64,
    l: usize,
    quad: &QuadratureSpec,
) -> Result<f64> {
    if l == 0 {
        return Err(Error::InvalidDecomposition("empty component".into()));
    }
    let lead = (l as f64).powf(1.0 + alpha / 2.0) * (a_beta(alpha)? + 1.0 / 6.0);
    Ok(lead * weighted_scale(scale, density, alpha, quad)?)
}

/// Constants governing the optimal rate `k kappa^rho N^{-rho}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AsymptoticProfile {
    pub v: Vec<f64>,
    pub rho: f64,
    pub kappa: f64,
    pub sizes: Vec<usize>,
    pub alpha: Vec<f64>,
}

impl AsymptoticProfile {
    pub fn k(&self) -> usize {
        self.v.len()
    }

    /// `k kappa^rho`.
    pub fn optimal_constant(&self) -> f64 {
        self.k() as f64 * self.kappa.powf(self.rho)
    }

    /// `k kappa^rho N^{-rho}`.
    pub fn optimal_bound(&self, n: f64) -> f64 {
        self.optimal_constant() * n.powf(-self.rho)
    }

    /// Exact minimum of `sum_j v_j n_j^{-alpha_j}` over real `n` with
    /// `prod_j n_j^{l_j} = N`, as a multiple of `N^{-rho}`:
    /// `rho^{-1} prod_j w_j^{-rho w_j} kappa^rho` with `w_j = l_j / alpha_j`.
    /// Equals [`Self::optimal_constant`] when all `w_j` coincide and is
    /// smaller otherwise.
    pub fn constrained_minimum_constant(&self) -> f64 {
        let log_w: f64 = (0..self.k())
            .map(|j| {
                let w = self.sizes[j] as f64 / self.alpha[j];
                w * w.ln()
            })
            .sum();
        (-self.rho * log_w).exp() / self.rho * self.kappa.powf(self.rho)
    }

    /// Real grid sizes attaining [`Self::constrained_minimum_constant`].
    pub fn constrained_minimizer(&self, n: f64) -> Vec<f64> {
        // v_j n_j^{-alpha_j} = w_j t for a common t
        let t = self.constrained_minimum_constant() * n.powf(-self.rho) * self.rho;
        (0..self.k())
            .map(|j| {
                let w = self.sizes[j] as f64 / self.alpha[j];
                (self.v[j] / (w * t)).powf(1.0 / self.alpha[j])
            })
            .collect()
    }

    pub fn predicted_imse(&self, allocation: &Allocation) -> Result<f64> {
        predicted_imse(&self.v, &Smoothness::new(self.alpha.clone())?, allocation)
    }
}

pub fn profile(v: &[f64], smoothness: &Smoothness, decomposition: &Decomposition) -> Result<AsymptoticProfile> {
    let k = decomposition.components();
    if v.len() != k || smoothness.alpha().len() != k {
        return Err(Error::DimensionMismatch {
            expected: k,
            got: v.len(),
        });
    }
    if let Some(x) = v.iter().find(|&&x| !(x > 0.0) || !x.is_finite()) {
        return Err(Error::InvalidArgument(format!("constant {x} is not positive")));
    }
    let alpha = smoothness.alpha();
    let sizes = decomposition.sizes();
    let log_kappa: f64 = (0..k).map(|j| sizes[j] as f64 / alpha[j] * v[j].ln()).sum();
    Ok(AsymptoticProfile {
        v: v.to_vec(),
        rho: harmonic_rate(smoothness, decomposition),
        kappa: log_kappa.exp(),
        sizes: sizes.to_vec(),
        alpha: alpha.to_vec(),
    })
}

/// `sum_j v_j n_j^{-alpha_j}`.
pub fn predicted_imse(v: &[f64], smoothness: &Smoothness, allocation: &Allocation) -> Result<f64> {
    let n: Vec<f64> = allocation.n.iter().map(|&x| x as f64).collect();
    predicted_imse_real(v, smoothness, &n)
}

/// [`predicted_imse`] for real-valued grid sizes.
pub fn predicted_imse_real(v: &[f64], smoothness: &Smoothness, n: &[f64]) -> Result<f64> {
    let alpha = smoothness.alpha();
    if v.len() != alpha.len() || n.len() != alpha.len() {
        return Err(Error::DimensionMismatch {
            expected: alpha.len(),
            got: v.len().max(n.len()),
        });
    }
    Ok((0..v.len()).map(|j| v[j] * n[j].powf(-alpha[j])).sum())
}

/// Inputs of the order-0 uniform error bound.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HolderBoundSpec {
    /// Hölder constant `C` of the increment variance.
    pub holder_constant: f64,
    pub alpha: Vec<f64>,
    pub sizes: Vec<usize>,
    /// `D_j = 1 / min h_j`.
    pub d: Vec<f64>,
}

impl HolderBoundSpec {
    pub fn new(
        holder_constant: f64,
        smoothness: &Smoothness,
        decomposition: &Decomposition,
        densities: &[Density],
    ) -> Result<Self> {
        if densities.len() != decomposition.components() {
            return Err(Error::DimensionMismatch {
                expected: decomposition.components(),
                got: densities.len(),
            });
        }
        if !(holder_constant >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "Hölder constant {holder_constant}"
            )));
        }
        Ok(Self {
            holder_constant,
            alpha: smoothness.alpha().to_vec(),
            sizes: decomposition.sizes().to_vec(),
            d: densities.iter().map(|h| 1.0 / h.min_value()).collect(),
        })
    }

    /// `c_j = (2^{-alpha_j} l_j^{1+alpha_j/2} D_j^{alpha_j})^{1/2}`.
    pub fn coefficients(&self) -> Vec<f64> {
        (0..self.alpha.len())
            .map(|j| {
                let a = self.alpha[j];
                (2f64.powf(-a) * (self.sizes[j] as f64).powf(1.0 + a / 2.0) * self.d[j].powf(a)).sqrt()
            })
            .collect()
    }
}

/// `sqrt(C) sum_j c_j n_j^{-alpha_j/2}`, a bound on `sup_t |X(t) - X_N(t)|`
/// in the Hölder sense.
pub fn holder_bound(spec: &HolderBoundSpec, allocation: &Allocation) -> Result<f64> {
    if allocation.n.len() != spec.alpha.len() {
        return Err(Error::DimensionMismatch {
            expected: spec.alpha.len(),
            got: allocation.n.len(),
        });
    }
    let c = spec.coefficients();
    Ok(spec.holder_constant.sqrt()
        * (0..c.len())
            .map(|j| c[j] * (allocation.n[j] as f64).powf(-spec.alpha[j] / 2.0))
            .sum::<f64>())
}
