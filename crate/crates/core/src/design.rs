//! Cross-regular sampling designs.
//!
//! Each coordinate of component `j` carries the knots `t_0 < ... < t_n`
//! solving `H_j(t_i) = i / n_j`, where `H_j` is the CDF of a positive
//! within-component density `h_j`. The grid is the tensor product of the
//! per-coordinate knot vectors.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{Decomposition, Smoothness};
use crate::quadrature::Rule1D;

/// Lower bound applied to normalized density values.
pub const DENSITY_FLOOR: f64 = 1e-9;
/// Segments of the cumulative table used for densities without a CDF.
pub const CDF_SEGMENTS: usize = 4096;
/// Minimum abscissa count of a tabulated density.
pub const MIN_TABLE: usize = 64;
/// Target accuracy of the CDF inversion.
pub const CDF_TOLERANCE: f64 = 1e-12;

pub type DensityFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Within-component knot density on `[0,1]`, normalized to unit mass.
#[derive(Clone)]
pub enum Density {
    Uniform,
    Analytic(AnalyticDensity),
    Tabulated(TabulatedDensity),
}

/// Density given as a function, with an optional closed-form CDF.
#[derive(Clone)]
pub struct AnalyticDensity {
    raw: DensityFn,
    cdf: Option<DensityFn>,
    // pdf(x) = max(raw(x) / raw_mass, DENSITY_FLOOR) / mass
    raw_mass: f64,
    mass: f64,
    // unnormalized cumulative integral of the floored pdf at k / CDF_SEGMENTS
    cumulative: Arc<Vec<f64>>,
    min: f64,
}

/// Piecewise-linear density on a uniform abscissa grid.
#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedDensity {
    values: Vec<f64>,
    cumulative: Vec<f64>,
}

impl fmt::Debug for Density {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Density::Uniform => write!(f, "Uniform"),
            Density::Analytic(a) => write!(
                f,
                "Analytic {{ closed_form_cdf: {}, min: {} }}",
                a.cdf.is_some(),
                a.min
            ),
            Density::Tabulated(t) => write!(f, "Tabulated({} values)", t.values.len()),
        }
    }
}

// graded so that derivative singularities at segment ends (e.g. x^p, p < 1, at 0) integrate accurately
fn segment_rule() -> &'static Rule1D {
    static RULE: std::sync::OnceLock<Rule1D> = std::sync::OnceLock::new();
    RULE.get_or_init(|| Rule1D::gauss_legendre(8).graded(3))
}

impl AnalyticDensity {
    fn new(raw: DensityFn, cdf: Option<DensityFn>) -> Result<Self> {
        let rule = segment_rule();
        let h = 1.0 / CDF_SEGMENTS as f64;
        let check = |x: f64| -> Result<f64> {
            let v = raw(x);
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidDensity(format!("value {v} at {x}")));
            }
            Ok(v)
        };
        let mut raw_mass = 0.0;
        for k in 0..CDF_SEGMENTS {
            let a = k as f64 * h;
            let mut part = 0.0;
            for (x, w) in rule.nodes.iter().zip(&rule.weights) {
                part += w * check(a + h * x)?;
            }
            raw_mass += part * h;
        }
        for k in 0..=CDF_SEGMENTS {
            check(k as f64 * h)?;
        }
        if !(raw_mass > 0.0) {
            return Err(Error::InvalidDensity("density has zero mass".into()));
        }

        let floored = |x: f64| (raw(x) / raw_mass).max(DENSITY_FLOOR);
        let mut cumulative = Vec::with_capacity(CDF_SEGMENTS + 1);
        cumulative.push(0.0);
        let mut acc = 0.0;
        let mut min = f64::INFINITY;
        for k in 0..CDF_SEGMENTS {
            let a = k as f64 * h;
            acc += rule.integrate(a, a + h, floored);
            cumulative.push(acc);
            min = min.min(floored(a));
        }
        min = min.min(floored(1.0));
        let mass = acc;

        if let Some(c) = &cdf {
            let span = c(1.0) - c(0.0);
            if !(span > 0.0) {
                return Err(Error::InvalidDensity("CDF is not increasing".into()));
            }
        }
        Ok(Self {
            raw,
            cdf,
            raw_mass,
            mass,
            cumulative: Arc::new(cumulative),
            min: min / mass,
        })
    }

    fn pdf(&self, x: f64) -> f64 {
        (((self.raw)(x)) / self.raw_mass).max(DENSITY_FLOOR) / self.mass
    }

    fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        if x >= 1.0 {
            return 1.0;
        }
        if let Some(c) = &self.cdf {
            let c0 = c(0.0);
            return (c(x) - c0) / (c(1.0) - c0);
        }
        let h = 1.0 / CDF_SEGMENTS as f64;
        let k = ((x / h) as usize).min(CDF_SEGMENTS - 1);
        let a = k as f64 * h;
        let floored = |y: f64| ((self.raw)(y) / self.raw_mass).max(DENSITY_FLOOR);
        (self.cumulative[k] + segment_rule().integrate(a, x, floored)) / self.mass
    }

    fn quantile(&self, p: f64) -> Result<f64> {
        // bracket from the cumulative table, then safeguarded Newton
        let target = p * self.mass;
        let k = (self.cumulative.partition_point(|&c| c <= target))
            .clamp(1, CDF_SEGMENTS)
            - 1;
        let h = 1.0 / CDF_SEGMENTS as f64;
        let (mut lo, mut hi) = (k as f64 * h, (k + 1) as f64 * h);
        if self.cdf.is_some() {
            // closed-form CDF may disagree slightly with the table; widen
            lo = 0.0;
            hi = 1.0;
        }
        let mut x = 0.5 * (lo + hi);
        for _ in 0..200 {
            let f = self.cdf(x) - p;
            if f.abs() <= CDF_TOLERANCE {
                return Ok(x);
            }
            if f > 0.0 {
                hi = x;
            } else {
                lo = x;
            }
            let step = x - f / self.pdf(x);
            x = if step > lo && step < hi {
                step
            } else {
                0.5 * (lo + hi)
            };
            if hi - lo < 1e-17 {
                return Ok(x);
            }
        }
        Err(Error::CdfInversion(p))
    }
}

impl TabulatedDensity {
    fn new(raw: &[f64]) -> Result<Self> {
        if raw.len() < MIN_TABLE {
            return Err(Error::InvalidDensity(format!(
                "table has {} values, need at least {MIN_TABLE}",
                raw.len()
            )));
        }
        if let Some(v) = raw.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::InvalidDensity(format!("table value {v}")));
        }
        let trapezoid = |v: &[f64]| {
            let h = 1.0 / (v.len() - 1) as f64;
            v.windows(2).map(|w| 0.5 * h * (w[0] + w[1])).sum::<f64>()
        };
        let raw_mass = trapezoid(raw);
        if !(raw_mass > 0.0) {
            return Err(Error::InvalidDensity("density has zero mass".into()));
        }
        let floored: Vec<f64> = raw
            .iter()
            .map(|v| (v / raw_mass).max(DENSITY_FLOOR))
            .collect();
        let mass = trapezoid(&floored);
        let values: Vec<f64> = floored.iter().map(|v| v / mass).collect();
        let h = 1.0 / (values.len() - 1) as f64;
        let mut cumulative = Vec::with_capacity(values.len());
        cumulative.push(0.0);
        let mut acc = 0.0;
        for w in values.windows(2) {
            acc += 0.5 * h * (w[0] + w[1]);
            cumulative.push(acc);
        }
        Ok(Self { values, cumulative })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    fn step(&self) -> f64 {
        1.0 / (self.values.len() - 1) as f64
    }

    fn locate(&self, x: f64) -> (usize, f64) {
        let segments = self.values.len() - 1;
        let pos = x.clamp(0.0, 1.0) * segments as f64;
        let k = (pos as usize).min(segments - 1);
        (k, pos - k as f64)
    }

    fn pdf(&self, x: f64) -> f64 {
        let (k, tau) = self.locate(x);
        self.values[k] + tau * (self.values[k + 1] - self.values[k])
    }

    fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        if x >= 1.0 {
            return 1.0;
        }
        let (k, tau) = self.locate(x);
        let (y0, y1) = (self.values[k], self.values[k + 1]);
        self.cumulative[k] + self.step() * (y0 * tau + 0.5 * (y1 - y0) * tau * tau)
    }

    fn quantile(&self, p: f64) -> f64 {
        // the CDF is piecewise quadratic: solve exactly within the segment
        let total = *self.cumulative.last().unwrap();
        let target = p * total;
        let k = (self.cumulative.partition_point(|&c| c <= target))
            .clamp(1, self.values.len() - 1)
            - 1;
        let (y0, y1) = (self.values[k], self.values[k + 1]);
        let rest = (target - self.cumulative[k]) / self.step();
        let slope = y1 - y0;
        // 0.5 slope tau^2 + y0 tau - rest = 0, stable root
        let tau = if slope.abs() < 1e-300 {
            rest / y0
        } else {
            let disc = (y0 * y0 + 2.0 * slope * rest).max(0.0);
            2.0 * rest / (y0 + disc.sqrt())
        };
        ((k as f64 + tau.clamp(0.0, 1.0)) * self.step()).clamp(0.0, 1.0)
    }
}

impl Density {
    /// Density from a function on `[0,1]`; it is normalized and floored here.
    pub fn analytic<F>(pdf: F) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Ok(Self::Analytic(AnalyticDensity::new(Arc::new(pdf), None)?))
    }

    /// Density with a closed-form CDF, used for inversion.
    pub fn analytic_with_cdf<F, G>(pdf: F, cdf: G) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
        G: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Ok(Self::Analytic(AnalyticDensity::new(
            Arc::new(pdf),
            Some(Arc::new(cdf)),
        )?))
    }

    /// Density tabulated at `i / (len - 1)`, interpolated linearly.
    pub fn tabulated(values: &[f64]) -> Result<Self> {
        Ok(Self::Tabulated(TabulatedDensity::new(values)?))
    }

    pub fn pdf(&self, x: f64) -> f64 {
        match self {
            Density::Uniform => 1.0,
            Density::Analytic(a) => a.pdf(x),
            Density::Tabulated(t) => t.pdf(x),
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match self {
            Density::Uniform => x.clamp(0.0, 1.0),
            Density::Analytic(a) => a.cdf(x),
            Density::Tabulated(t) => t.cdf(x),
        }
    }

    pub fn quantile(&self, p: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::CdfInversion(p));
        }
        match self {
            Density::Uniform => Ok(p),
            Density::Analytic(a) => a.quantile(p),
            Density::Tabulated(t) => Ok(t.quantile(p)),
        }
    }

    /// `min h` over `[0,1]` (sampled for analytic densities).
    pub fn min_value(&self) -> f64 {
        match self {
            Density::Uniform => 1.0,
            Density::Analytic(a) => a.min,
            Density::Tabulated(t) => t.values.iter().cloned().fold(f64::INFINITY, f64::min),
        }
    }

    pub fn is_uniform(&self) -> bool {
        matches!(self, Density::Uniform)
    }

    pub fn to_record(&self, points: usize) -> DensityRecord {
        let points = points.max(MIN_TABLE);
        let abscissa: Vec<f64> = (0..points)
            .map(|i| i as f64 / (points - 1) as f64)
            .collect();
        let values = match self {
            Density::Tabulated(t) if t.values.len() == points => t.values.clone(),
            _ => abscissa.iter().map(|&x| self.pdf(x)).collect(),
        };
        DensityRecord { abscissa, values }
    }

    pub fn from_record(record: &DensityRecord) -> Result<Self> {
        let n = record.abscissa.len();
        if n != record.values.len() {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: record.values.len(),
            });
        }
        if n < 2 {
            return Err(Error::InvalidDensity("fewer than 2 abscissae".into()));
        }
        for (i, &x) in record.abscissa.iter().enumerate() {
            let expected = i as f64 / (n - 1) as f64;
            if (x - expected).abs() > 1e-12 {
                return Err(Error::InvalidDensity(format!(
                    "abscissa {i} = {x} is not on the uniform grid"
                )));
            }
        }
        Self::tabulated(&record.values)
    }
}

/// Plain serialized form of a density.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityRecord {
    pub abscissa: Vec<f64>,
    pub values: Vec<f64>,
}

/// Knots `t_i` with `H(t_i) = i / n`, `t_0 = 0`, `t_n = 1`.
pub fn knots_from_density(density: &Density, n: usize) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::InvalidArgument("grid size must be at least 1".into()));
    }
    let mut knots = Vec::with_capacity(n + 1);
    knots.push(0.0);
    for i in 1..n {
        knots.push(density.quantile(i as f64 / n as f64)?);
    }
    knots.push(1.0);
    if knots.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidDensity(
            "knots are not strictly increasing".into(),
        ));
    }
    Ok(knots)
}

/// Per-component grid sizes `n_j`; each axis of component `j` gets `n_j + 1` knots.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Allocation {
    pub n: Vec<usize>,
}

impl Allocation {
    pub fn new(n: Vec<usize>) -> Result<Self> {
        if n.contains(&0) {
            return Err(Error::InvalidArgument("grid sizes must be positive".into()));
        }
        Ok(Self { n })
    }

    /// Number of knots `prod_j (n_j + 1)^{l_j}`.
    pub fn sample_count(&self, decomposition: &Decomposition) -> u64 {
        self.n
            .iter()
            .zip(decomposition.sizes())
            .map(|(&n, &l)| (n as u64 + 1).saturating_pow(l as u32))
            .fold(1u64, u64::saturating_mul)
    }

    /// Number of cells `prod_j n_j^{l_j}`.
    pub fn cell_count(&self, decomposition: &Decomposition) -> u64 {
        self.n
            .iter()
            .zip(decomposition.sizes())
            .map(|(&n, &l)| (n as u64).saturating_pow(l as u32))
            .fold(1u64, u64::saturating_mul)
    }
}

/// Tensor grid of knots on `[0,1]^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct Design {
    decomposition: Decomposition,
    allocation: Allocation,
    axes: Vec<Vec<f64>>,
}

impl Design {
    /// Knot vector of every coordinate; coordinates of one component share a vector.
    pub fn axes(&self) -> &[Vec<f64>] {
        &self.axes
    }

    pub fn axis(&self, m: usize) -> &[f64] {
        &self.axes[m]
    }

    pub fn decomposition(&self) -> &Decomposition {
        &self.decomposition
    }

    pub fn allocation(&self) -> &Allocation {
        &self.allocation
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    /// Cells per coordinate.
    pub fn cells_per_axis(&self) -> Vec<usize> {
        self.axes.iter().map(|a| a.len() - 1).collect()
    }

    pub fn cell_count(&self) -> usize {
        self.axes.iter().map(|a| a.len() - 1).product()
    }

    pub fn sample_count(&self) -> usize {
        self.axes.iter().map(|a| a.len()).product()
    }

    /// Multi-index of the cell with linear index `linear` (coordinate 0 fastest).
    pub fn cell_index(&self, mut linear: usize, out: &mut [usize]) {
        for (m, slot) in out.iter_mut().enumerate() {
            let n = self.axes[m].len() - 1;
            *slot = linear % n;
            linear /= n;
        }
    }

    /// Lower vertex and diagonal of the cell with multi-index `index`.
    pub fn cell_geometry(&self, index: &[usize], vertex: &mut [f64], diagonal: &mut [f64]) {
        for m in 0..self.axes.len() {
            let a = &self.axes[m];
            vertex[m] = a[index[m]];
            diagonal[m] = a[index[m] + 1] - a[index[m]];
        }
    }

    /// Coordinates of the knot with multi-index `index`.
    pub fn knot(&self, index: &[usize]) -> Vec<f64> {
        index
            .iter()
            .enumerate()
            .map(|(m, &i)| self.axes[m][i])
            .collect()
    }

    pub fn to_record(&self) -> DesignRecord {
        DesignRecord {
            decomposition: self.decomposition.sizes().to_vec(),
            allocation: self.allocation.n.clone(),
            sample_count: self.sample_count() as u64,
            axes: self.axes.clone(),
        }
    }

    pub fn from_record(record: &DesignRecord) -> Result<Self> {
        let decomposition = Decomposition::new(record.decomposition.clone())?;
        let allocation = Allocation::new(record.allocation.clone())?;
        if allocation.n.len() != decomposition.components() {
            return Err(Error::DimensionMismatch {
                expected: decomposition.components(),
                got: allocation.n.len(),
            });
        }
        if record.axes.len() != decomposition.dim() {
            return Err(Error::DimensionMismatch {
                expected: decomposition.dim(),
                got: record.axes.len(),
            });
        }
        for (m, axis) in record.axes.iter().enumerate() {
            let j = decomposition.component_of(m);
            let first = &record.axes[decomposition.range(j).start];
            if axis.len() != allocation.n[j] + 1 {
                return Err(Error::InvalidArgument(format!(
                    "axis {m} has {} knots, expected {}",
                    axis.len(),
                    allocation.n[j] + 1
                )));
            }
            if axis != first {
                return Err(Error::InvalidArgument(format!(
                    "axis {m} differs from the other axes of component {j}"
                )));
            }
            if axis[0] != 0.0
                || *axis.last().unwrap() != 1.0
                || axis.windows(2).any(|w| !(w[0] < w[1]))
            {
                return Err(Error::InvalidArgument(format!(
                    "axis {m} is not a strictly increasing grid from 0 to 1"
                )));
            }
        }
        Ok(Self {
            decomposition,
            allocation,
            axes: record.axes.clone(),
        })
    }
}

/// Plain serialized form of a design.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignRecord {
    pub decomposition: Vec<usize>,
    pub allocation: Vec<usize>,
    pub sample_count: u64,
    pub axes: Vec<Vec<f64>>,
}

/// Grid with knots of component `j` placed by `densities[j]`.
pub fn build_design(
    densities: &[Density],
    allocation: &Allocation,
    decomposition: &Decomposition,
) -> Result<Design> {
    let k = decomposition.components();
    for len in [densities.len(), allocation.n.len()] {
        if len != k {
            return Err(Error::DimensionMismatch {
                expected: k,
                got: len,
            });
        }
    }
    let mut axes = Vec::with_capacity(decomposition.dim());
    for j in 0..k {
        let knots = knots_from_density(&densities[j], allocation.n[j])?;
        for _ in decomposition.range(j) {
            axes.push(knots.clone());
        }
    }
    Ok(Design {
        decomposition: decomposition.clone(),
        allocation: allocation.clone(),
        axes,
    })
}

/// Uniform densities on every component.
pub fn uniform_design(allocation: &Allocation, decomposition: &Decomposition) -> Result<Design> {
    let densities = vec![Density::Uniform; decomposition.components()];
    build_design(&densities, allocation, decomposition)
}

/// Allocation with its real-valued precursor and resulting knot count.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlannedAllocation {
    pub target: f64,
    pub continuous: Vec<f64>,
    pub allocation: Allocation,
    pub sample_count: u64,
}

/// `rho = (sum_j l_j / alpha_j)^{-1}`.
pub fn harmonic_rate(smoothness: &Smoothness, decomposition: &Decomposition) -> f64 {
    1.0 / smoothness
        .alpha()
        .iter()
        .zip(decomposition.sizes())
        .map(|(&a, &l)| l as f64 / a)
        .sum::<f64>()
}

fn check_shapes(smoothness: &Smoothness, decomposition: &Decomposition) -> Result<()> {
    if smoothness.alpha().len() != decomposition.components() {
        return Err(Error::DimensionMismatch {
            expected: decomposition.components(),
            got: smoothness.alpha().len(),
        });
    }
    Ok(())
}

/// Asymptotically optimal intercomponent allocation for a budget of `n_target` knots.
///
/// `n_j = ceil(N^{rho/alpha_j} v_j^{1/alpha_j} / kappa^{rho/alpha_j})` with
/// `kappa = prod_j v_j^{l_j/alpha_j}`. With a single component this reduces
/// to `N^{1/l}`, and the grid size is chosen so that `(n+1)^l` is closest to `N`.
pub fn optimal_allocation(
    v: &[f64],
    smoothness: &Smoothness,
    decomposition: &Decomposition,
    n_target: f64,
) -> Result<PlannedAllocation> {
    check_shapes(smoothness, decomposition)?;
    let k = decomposition.components();
    if v.len() != k {
        return Err(Error::DimensionMismatch {
            expected: k,
            got: v.len(),
        });
    }
    if let Some(bad) = v.iter().find(|&&x| !(x > 0.0) || !x.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "asymptotic constants must be positive, got {bad}"
        )));
    }
    if !(n_target >= 1.0) {
        return Err(Error::BudgetTooSmall {
            n: n_target,
            component: 0,
        });
    }
    let alpha = smoothness.alpha();
    let sizes = decomposition.sizes();

    if k == 1 {
        let root = n_target.powf(1.0 / sizes[0] as f64);
        let n = root.round() - 1.0;
        if n < 1.0 {
            return Err(Error::BudgetTooSmall {
                n: n_target,
                component: 0,
            });
        }
        let allocation = Allocation::new(vec![n as usize])?;
        return Ok(PlannedAllocation {
            target: n_target,
            continuous: vec![root],
            sample_count: allocation.sample_count(decomposition),
            allocation,
        });
    }

    let rho = harmonic_rate(smoothness, decomposition);
    let log_kappa: f64 = (0..k)
        .map(|j| sizes[j] as f64 / alpha[j] * v[j].ln())
        .sum();
    let log_n = n_target.ln();
    let continuous: Vec<f64> = (0..k)
        .map(|j| ((rho * log_n + v[j].ln() - rho * log_kappa) / alpha[j]).exp())
        .collect();
    let mut n = Vec::with_capacity(k);
    for (j, &c) in continuous.iter().enumerate() {
        if c < 0.5 {
            return Err(Error::BudgetTooSmall {
                n: n_target,
                component: j,
            });
        }
        n.push(c.ceil() as usize);
    }
    let allocation = Allocation::new(n)?;
    Ok(PlannedAllocation {
        target: n_target,
        continuous,
        sample_count: allocation.sample_count(decomposition),
        allocation,
    })
}

/// Smoothness class of the Hölder-type rate allocation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum HolderOrder {
    /// Hölder continuous fields; `n_j ~ N^{rho_0 / alpha_j}`.
    Continuous,
    /// Fields with Hölder continuous derivatives; `n_j ~ N^{rho_1 / (2 + alpha_j)}`.
    Differentiable,
}

/// Exponents `e_j` with `n_j ~ N^{e_j}`.
pub fn holder_exponents(
    smoothness: &Smoothness,
    decomposition: &Decomposition,
    order: HolderOrder,
) -> Vec<f64> {
    let shifted: Vec<f64> = smoothness
        .alpha()
        .iter()
        .map(|&a| match order {
            HolderOrder::Continuous => a,
            HolderOrder::Differentiable => 2.0 + a,
        })
        .collect();
    let rate = 1.0
        / shifted
            .iter()
            .zip(decomposition.sizes())
            .map(|(&a, &l)| l as f64 / a)
            .sum::<f64>();
    shifted.iter().map(|&a| rate / a).collect()
}

/// Rate-optimal allocation for the Hölder classes, rounded to nearest.
pub fn holder_allocation(
    smoothness: &Smoothness,
    decomposition: &Decomposition,
    n_target: f64,
    order: HolderOrder,
) -> Result<PlannedAllocation> {
    check_shapes(smoothness, decomposition)?;
    let continuous: Vec<f64> = holder_exponents(smoothness, decomposition, order)
        .iter()
        .map(|&e| n_target.powf(e))
        .collect();
    let mut n = Vec::with_capacity(continuous.len());
    for (j, &c) in continuous.iter().enumerate() {
        if !(c >= 0.5) {
            return Err(Error::BudgetTooSmall {
                n: n_target,
                component: j,
            });
        }
        n.push((c.round() as usize).max(1));
    }
    let allocation = Allocation::new(n)?;
    Ok(PlannedAllocation {
        target: n_target,
        continuous,
        sample_count: allocation.sample_count(decomposition),
        allocation,
    })
}

/// Equal grid sizes with `(n+1)^d` closest to the budget.
pub fn uniform_allocation(decomposition: &Decomposition, n_target: f64) -> Result<PlannedAllocation> {
    if !(n_target >= 1.0) {
        return Err(Error::BudgetTooSmall {
            n: n_target,
            component: 0,
        });
    }
    let root = n_target.powf(1.0 / decomposition.dim() as f64);
    let n = ((root.round() - 1.0).max(1.0)) as usize;
    let allocation = Allocation::new(vec![n; decomposition.components()])?;
    Ok(PlannedAllocation {
        target: n_target,
        continuous: vec![root - 1.0; decomposition.components()],
        sample_count: allocation.sample_count(decomposition),
        allocation,
    })
}

/// Minimizer `h = C^gamma / int C^gamma`, `gamma = 1 / (1 + alpha)`, of
/// `int C h^{-alpha}` for a positive function `C` on `[0,1]`.
pub fn density_from_scale<F>(scale: F, alpha: f64) -> Result<Density>
where
    F: Fn(f64) -> f64 + Send + Sync + 'static,
{
    check_alpha(alpha)?;
    for k in 0..=CDF_SEGMENTS {
        let x = k as f64 / CDF_SEGMENTS as f64;
        let c = scale(x);
        if !(c > 0.0) || !c.is_finite() {
            return Err(Error::InvalidDensity(format!(
                "scale function value {c} at {x} is not positive"
            )));
        }
    }
    let gamma = 1.0 / (1.0 + alpha);
    Density::analytic(move |x| scale(x).powf(gamma))
}

/// Tabulated counterpart of [`density_from_scale`].
pub fn density_from_scale_table(values: &[f64], alpha: f64) -> Result<Density> {
    check_alpha(alpha)?;
    if let Some(c) = values.iter().find(|&&c| !(c > 0.0) || !c.is_finite()) {
        return Err(Error::InvalidDensity(format!(
            "scale value {c} is not positive"
        )));
    }
    let gamma = 1.0 / (1.0 + alpha);
    let powered: Vec<f64> = values.iter().map(|c| c.powf(gamma)).collect();
    Density::tabulated(&powered)
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 2.0) {
        return Err(Error::InvalidSmoothness(alpha));
    }
    Ok(())
}
