//! Convergence sweeps, log-log rate fits and the two worked examples.

use serde::{Deserialize, Serialize};

use crate::asymptotics::{
    a_beta, b_const, integrated_c, model_constants, profile, BPrecision,
};
use crate::design::{
    build_design, holder_allocation, optimal_allocation, uniform_allocation, Allocation, Density,
    HolderOrder, PlannedAllocation,
};
use crate::error::{Error, Result};
use crate::kernels::CovarianceModel;
use crate::mse::imse;
use crate::quadrature::QuadratureSpec;

/// Built-in covariance models addressable from configuration files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum ModelSpec {
    Brownian,
    Fbf { sizes: Vec<usize>, alpha: Vec<f64> },
    DampedExponential,
    Zero { dim: usize },
}

impl ModelSpec {
    pub fn build(&self) -> Result<CovarianceModel> {
        match self {
            Self::Brownian => Ok(CovarianceModel::brownian()),
            Self::Fbf { sizes, alpha } => CovarianceModel::fbf(sizes.clone(), alpha.clone()),
            Self::DampedExponential => Ok(CovarianceModel::DampedExponential),
            Self::Zero { dim } => CovarianceModel::zero(*dim),
        }
    }

    /// The fBf model with `l = (1, 2)`, `alpha = (1/2, 3/2)`.
    pub fn example4() -> Self {
        Self::Fbf {
            sizes: vec![1, 2],
            alpha: vec![0.5, 1.5],
        }
    }
}

/// Within-component knot density.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum DensitySpec {
    Uniform,
    /// `h ∝ intercept + slope * x`.
    Linear { intercept: f64, slope: f64 },
    /// Values on an equispaced grid of `[0,1]`, endpoints included.
    Tabulated { values: Vec<f64> },
    /// `h ∝ C_j^{1/(1+alpha_j)}` from the model's integrated scale of this component.
    FromScale,
}

impl DensitySpec {
    pub fn build(&self, model: &CovarianceModel, j: usize, quad: &QuadratureSpec) -> Result<Density> {
        match self {
            Self::Uniform => Ok(Density::Uniform),
            Self::Linear { intercept, slope } => {
                let (a, b) = (*intercept, *slope);
                if !(a >= 0.0 && a + b >= 0.0 && a + 0.5 * b > 0.0) {
                    return Err(Error::InvalidDensity(format!(
                        "linear density {a} + {b} x is negative or zero"
                    )));
                }
                Density::analytic_with_cdf(move |x| a + b * x, move |x| a * x + 0.5 * b * x * x)
            }
            Self::Tabulated { values } => Density::tabulated(values),
            Self::FromScale => {
                let alpha = model.smoothness().alpha()[j];
                integrated_c(model, j, quad)?.density(alpha)
            }
        }
    }
}

/// How a budget `N` is split into grid sizes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum AllocationStrategy {
    Uniform,
    /// Asymptotically optimal split; `v` defaults to the model constants.
    Optimal {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        v: Option<Vec<f64>>,
    },
    Holder0,
    Holder1,
    /// Explicit grid sizes, one list per sweep point.
    Explicit { allocations: Vec<Vec<usize>> },
}

/// A term `coefficient * N^exponent` removed before fitting.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KnownTerm {
    pub coefficient: f64,
    pub exponent: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub model: ModelSpec,
    /// One per component.
    pub densities: Vec<DensitySpec>,
    pub allocation: AllocationStrategy,
    /// Target budgets, strictly increasing. Ignored for explicit allocations.
    #[serde(default)]
    pub targets: Vec<f64>,
    #[serde(default)]
    pub quadrature: QuadratureSpec,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theory_slope: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub known_term: Option<KnownTerm>,
}

impl SweepConfig {
    pub fn validate(&self) -> Result<CovarianceModel> {
        let model = self.model.build()?;
        let k = model.decomposition().components();
        if self.densities.len() != k {
            return Err(Error::DimensionMismatch {
                expected: k,
                got: self.densities.len(),
            });
        }
        self.quadrature.validate()?;
        match &self.allocation {
            AllocationStrategy::Explicit { allocations } => {
                if allocations.is_empty() {
                    return Err(Error::InvalidArgument("no explicit allocations".into()));
                }
                if let Some(a) = allocations.iter().find(|a| a.len() != k) {
                    return Err(Error::DimensionMismatch {
                        expected: k,
                        got: a.len(),
                    });
                }
            }
            _ => {
                if self.targets.is_empty() {
                    return Err(Error::InvalidArgument("no target budgets".into()));
                }
                if self.targets.windows(2).any(|w| !(w[0] < w[1])) {
                    return Err(Error::InvalidArgument(
                        "target budgets must be strictly increasing".into(),
                    ));
                }
            }
        }
        Ok(model)
    }
}

/// One evaluated design of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepPoint {
    pub target: f64,
    pub allocation: Vec<usize>,
    pub sample_count: u64,
    pub imse_squared: f64,
    pub sup_mse: f64,
}

/// Allocations for every sweep point, in order.
pub fn plan_allocations(
    model: &CovarianceModel,
    densities: &[Density],
    strategy: &AllocationStrategy,
    targets: &[f64],
    quad: &QuadratureSpec,
) -> Result<Vec<PlannedAllocation>> {
    let dec = model.decomposition();
    let sm = model.smoothness();
    match strategy {
        AllocationStrategy::Uniform => targets.iter().map(|&n| uniform_allocation(&dec, n)).collect(),
        AllocationStrategy::Optimal { v } => {
            let v = match v {
                Some(v) => v.clone(),
                None => model_constants(model, densities, quad, BPrecision::Cached)?,
            };
            targets
                .iter()
                .map(|&n| optimal_allocation(&v, &sm, &dec, n))
                .collect()
        }
        AllocationStrategy::Holder0 => targets
            .iter()
            .map(|&n| holder_allocation(&sm, &dec, n, HolderOrder::Continuous))
            .collect(),
        AllocationStrategy::Holder1 => targets
            .iter()
            .map(|&n| holder_allocation(&sm, &dec, n, HolderOrder::Differentiable))
            .collect(),
        AllocationStrategy::Explicit { allocations } => allocations
            .iter()
            .map(|n| {
                let allocation = Allocation::new(n.clone())?;
                let sample_count = allocation.sample_count(&dec);
                Ok(PlannedAllocation {
                    target: sample_count as f64,
                    continuous: n.iter().map(|&x| x as f64).collect(),
                    allocation,
                    sample_count,
                })
            })
            .collect(),
    }
}

/// IMSE of each planned design, in plan order.
pub fn evaluate_plans(
    model: &CovarianceModel,
    densities: &[Density],
    plans: &[PlannedAllocation],
    quad: &QuadratureSpec,
) -> Result<Vec<SweepPoint>> {
    let dec = model.decomposition();
    plans
        .iter()
        .map(|plan| {
            let design = build_design(densities, &plan.allocation, &dec)?;
            let report = imse(model, &design, quad)?;
            Ok(SweepPoint {
                target: plan.target,
                allocation: plan.allocation.n.clone(),
                sample_count: report.sample_count,
                imse_squared: report.imse_squared,
                sup_mse: report.sup_mse,
            })
        })
        .collect()
}

pub fn build_densities(config: &SweepConfig, model: &CovarianceModel) -> Result<Vec<Density>> {
    config
        .densities
        .iter()
        .enumerate()
        .map(|(j, d)| d.build(model, j, &config.quadrature))
        .collect()
}

/// Runs every point of a sweep configuration.
pub fn run_sweep(config: &SweepConfig) -> Result<Vec<SweepPoint>> {
    let model = config.validate()?;
    let densities = build_densities(config, &model)?;
    let plans = plan_allocations(
        &model,
        &densities,
        &config.allocation,
        &config.targets,
        &config.quadrature,
    )?;
    evaluate_plans(&model, &densities, &plans, &config.quadrature)
}

/// Least-squares line through `(log N, log e^2)` over the largest half of the budgets.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitResult {
    pub slope: f64,
    pub intercept: f64,
    /// Indices of the points used, in input order.
    pub used: Vec<usize>,
    /// `log e^2 - (intercept + slope log N)` at the used points.
    pub residuals: Vec<f64>,
}

pub fn fit_loglog(n: &[f64], e: &[f64]) -> Result<FitResult> {
    if n.len() != e.len() {
        return Err(Error::DimensionMismatch {
            expected: n.len(),
            got: e.len(),
        });
    }
    if let Some(bad) = n.iter().chain(e).find(|&&x| !(x > 0.0) || !x.is_finite()) {
        return Err(Error::DegenerateFit(format!("non-positive value {bad}")));
    }
    let mut order: Vec<usize> = (0..n.len()).collect();
    order.sort_by(|&a, &b| n[a].total_cmp(&n[b]));
    let keep = n.len() - n.len() / 2;
    let mut used: Vec<usize> = order[n.len() - keep..].to_vec();
    used.sort_unstable();
    if used.len() < 2 {
        return Err(Error::DegenerateFit("fewer than two points".into()));
    }
    let x: Vec<f64> = used.iter().map(|&i| n[i].ln()).collect();
    let y: Vec<f64> = used.iter().map(|&i| e[i].ln()).collect();
    let m = x.len() as f64;
    let mx = x.iter().sum::<f64>() / m;
    let my = y.iter().sum::<f64>() / m;
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    if !(sxx > 1e-300) {
        return Err(Error::DegenerateFit("all budgets are equal".into()));
    }
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residuals = x.iter().zip(&y).map(|(a, b)| b - intercept - slope * a).collect();
    Ok(FitResult {
        slope,
        intercept,
        used,
        residuals,
    })
}

/// Fit of a sweep against `N_actual`, after removing an optional known term.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepFit {
    pub raw: FitResult,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub adjusted: Option<FitResult>,
    /// `e^2 N^{-theory_slope}` per point when a theory slope is given.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scaled_constants: Option<Vec<f64>>,
}

pub fn fit_sweep(points: &[SweepPoint], theory_slope: Option<f64>, known: Option<KnownTerm>) -> Result<SweepFit> {
    if points.len() < 4 {
        return Err(Error::DegenerateFit(format!(
            "need at least 4 sweep points, got {}",
            points.len()
        )));
    }
    let n: Vec<f64> = points.iter().map(|p| p.sample_count as f64).collect();
    let e: Vec<f64> = points.iter().map(|p| p.imse_squared).collect();
    let raw = fit_loglog(&n, &e)?;
    let adjusted = known
        .map(|t| {
            let rest: Vec<f64> = n
                .iter()
                .zip(&e)
                .map(|(&n, &e)| e - t.coefficient * n.powf(t.exponent))
                .collect();
            fit_loglog(&n, &rest)
        })
        .transpose()?;
    let scaled_constants =
        theory_slope.map(|s| n.iter().zip(&e).map(|(&n, &e)| e * n.powf(-s)).collect());
    Ok(SweepFit {
        raw,
        adjusted,
        scaled_constants,
    })
}

/// Budgets `lo * (hi/lo)^{i/(count-1)}`.
pub fn log_spaced(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![lo];
    }
    (0..count)
        .map(|i| lo * (hi / lo).powf(i as f64 / (count - 1) as f64))
        .collect()
}

/// Constants of the `l = (1,2)`, `alpha = (1/2, 3/2)` fBf example next to
/// their published values.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Example4Report {
    pub a_half: f64,
    pub b_tilde: f64,
    pub rho: f64,
    pub kappa: f64,
    /// `2 kappa^rho`.
    pub optimal_constant: f64,
    /// Exact minimum of `v_1 n_1^{-1/2} + v_2 n_2^{-3/2}` at fixed `n_1 n_2^2`.
    pub constrained_minimum_constant: f64,
    pub reference_a_half: f64,
    pub reference_b_tilde: f64,
    pub reference_rho: f64,
    pub reference_optimal_constant: f64,
}

pub fn reproduce_example4(quad: &QuadratureSpec) -> Result<Example4Report> {
    let model = ModelSpec::example4().build()?;
    let a_half = a_beta(0.5)?;
    let b_tilde = b_const(1.5, 2, &[1.0, 1.0], quad)?;
    let p = profile(&[a_half, b_tilde], &model.smoothness(), &model.decomposition())?;
    Ok(Example4Report {
        a_half,
        b_tilde,
        rho: p.rho,
        kappa: p.kappa,
        optimal_constant: p.optimal_constant(),
        constrained_minimum_constant: p.constrained_minimum_constant(),
        reference_a_half: 0.3667,
        reference_b_tilde: 0.0935,
        reference_rho: 0.3,
        reference_optimal_constant: 0.4245,
    })
}

/// One grid size of the damped-exponential convergence study.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Example5Row {
    pub n: usize,
    pub sample_count: u64,
    pub imse_uniform: f64,
    pub imse_suboptimal: f64,
    /// `N^{1/2} e_N^2`, which tends to `v` as `n` grows.
    pub scaled_uniform: f64,
    pub scaled_suboptimal: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Example5Report {
    pub v_uniform: f64,
    pub v_suboptimal: f64,
    /// `1 - v_suboptimal / v_uniform`.
    pub reduction: f64,
    pub rows: Vec<Example5Row>,
}

pub fn reproduce_example5(grid_sizes: &[usize], quad: &QuadratureSpec) -> Result<Example5Report> {
    let model = CovarianceModel::DampedExponential;
    let dec = model.decomposition();
    let suboptimal = DensitySpec::FromScale.build(&model, 0, quad)?;
    let v_uniform = model_constants(&model, &[Density::Uniform], quad, BPrecision::Cached)?[0];
    let v_suboptimal = model_constants(&model, std::slice::from_ref(&suboptimal), quad, BPrecision::Cached)?[0];
    let mut rows = Vec::with_capacity(grid_sizes.len());
    for &n in grid_sizes {
        let allocation = Allocation::new(vec![n])?;
        let uni = imse(&model, &build_design(&[Density::Uniform], &allocation, &dec)?, quad)?;
        let sub = imse(&model, &build_design(std::slice::from_ref(&suboptimal), &allocation, &dec)?, quad)?;
        let root = (uni.sample_count as f64).sqrt();
        rows.push(Example5Row {
            n,
            sample_count: uni.sample_count,
            imse_uniform: uni.imse_squared,
            imse_suboptimal: sub.imse_squared,
            scaled_uniform: root * uni.imse_squared,
            scaled_suboptimal: root * sub.imse_squared,
        });
    }
    Ok(Example5Report {
        v_uniform,
        v_suboptimal,
        reduction: 1.0 - v_suboptimal / v_uniform,
        rows,
    })
}
