mod config;
mod output;

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use mpli::asymptotics::{a_beta, b_const, model_constants, profile};
use mpli::design::{
    build_design, holder_allocation, holder_exponents, optimal_allocation, uniform_allocation,
    Allocation, Density, HolderOrder,
};
use mpli::experiments::{
    build_densities, evaluate_plans, fit_sweep, plan_allocations, reproduce_example4,
    reproduce_example5, SweepPoint,
};
use mpli::kernels::{gram_spectrum, permutation_defect, stationarity_ratios};
use mpli::mse::mc_imse;
use mpli::quadrature::QuadratureSpec;
use serde::Serialize;

use config::{AsymConfig, DesignConfig, KernelCheckConfig, RunConfig};
use output::{emit, json_bytes, num, write_atomic, Table};

#[derive(Parser)]
#[command(name = "mpli", version, about = "IMSE of piecewise multilinear interpolation of random fields")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output file; stdout when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Gauss–Legendre order, overriding the config.
    #[arg(long, global = true)]
    quad_order: Option<usize>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Seed for Monte-Carlo estimates, overriding the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// IMSE and sup-MSE of each design of a sweep, as CSV.
    Imse,
    /// IMSE sweep with a log-log rate fit; CSV to --out, fit JSON to stdout.
    Sweep {
        /// Where to write the fit JSON instead of stdout.
        #[arg(long)]
        fit_out: Option<PathBuf>,
    },
    /// Asymptotic constants, rates and allocations, as JSON.
    Asym,
    /// Recompute one of the worked examples.
    Reproduce {
        #[arg(long, value_enum)]
        example: Example,
        /// Grid sizes of the convergence study (example 5).
        #[arg(long, value_delimiter = ',', default_value = "4,8,16,32,64")]
        sizes: Vec<usize>,
    },
    /// Knot coordinates of a design, as JSON.
    Design,
    /// Local-stationarity and positive-definiteness diagnostics of a model.
    KernelCheck,
}

#[derive(Clone, Copy, ValueEnum)]
enum Example {
    #[value(name = "4")]
    Four,
    #[value(name = "5")]
    Five,
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(&cli) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

fn run(cli: &Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the thread pool")?;
    }
    match &cli.command {
        Command::Imse => cmd_imse(cli),
        Command::Sweep { fit_out } => cmd_sweep(cli, fit_out.as_deref()),
        Command::Asym => cmd_asym(cli),
        Command::Reproduce { example, sizes } => cmd_reproduce(cli, *example, sizes),
        Command::Design => cmd_design(cli),
        Command::KernelCheck => cmd_kernel_check(cli),
    }
}

fn require_config(cli: &Cli) -> Result<&Path> {
    cli.config
        .as_deref()
        .context("this command needs --config <path>")
}

fn provenance(command: &str, config: &impl Serialize) -> Result<Vec<String>> {
    Ok(vec![
        format!("mpli {} {command}", env!("CARGO_PKG_VERSION")),
        format!("config {}", serde_json::to_string(config)?),
    ])
}

fn load_run(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = config::load_run(require_config(cli)?)?;
    config::override_quadrature(&mut cfg.sweep.quadrature, cli.quad_order);
    if let Some(seed) = cli.seed {
        cfg.sweep.seed = seed;
        if let Some(mc) = cfg.monte_carlo.as_mut() {
            mc.seed = seed;
        }
    }
    Ok(cfg)
}

struct SweepRun {
    points: Vec<SweepPoint>,
    mc: Option<Vec<(f64, f64)>>,
}

fn run_points(cfg: &RunConfig) -> Result<SweepRun> {
    let sweep = &cfg.sweep;
    let model = sweep.validate()?;
    let densities = build_densities(sweep, &model)?;
    let plans = plan_allocations(&model, &densities, &sweep.allocation, &sweep.targets, &sweep.quadrature)?;
    let points = evaluate_plans(&model, &densities, &plans, &sweep.quadrature)?;
    let mc = match &cfg.monte_carlo {
        None => None,
        Some(spec) => Some(
            plans
                .iter()
                .map(|plan| {
                    let design = build_design(&densities, &plan.allocation, &model.decomposition())?;
                    let est = mc_imse(&model, &design, spec)?;
                    Ok((est.mean, est.std_error))
                })
                .collect::<Result<Vec<_>>>()?,
        ),
    };
    Ok(SweepRun { points, mc })
}

/// Columns: N_actual, n_1..n_k, imse2, sup_mse, quad_order, target, log10N,
/// log10e2, then mc_mean, mc_se when Monte-Carlo is configured.
fn sweep_table(command: &str, cfg: &RunConfig, run: &SweepRun) -> Result<Table> {
    let k = run.points.first().map_or(0, |p| p.allocation.len());
    let mut header = vec!["N_actual".to_string()];
    header.extend((1..=k).map(|j| format!("n_{j}")));
    header.extend(
        ["imse2", "sup_mse", "quad_order", "target", "log10N", "log10e2"].map(String::from),
    );
    if run.mc.is_some() {
        header.extend(["mc_mean", "mc_se"].map(String::from));
    }
    let mut table = Table::new(header);
    for line in provenance(command, cfg)? {
        table.note(line);
    }
    for (i, p) in run.points.iter().enumerate() {
        let mut row = vec![p.sample_count.to_string()];
        row.extend(p.allocation.iter().map(|n| n.to_string()));
        row.extend([
            num(p.imse_squared),
            num(p.sup_mse),
            cfg.sweep.quadrature.order.to_string(),
            num(p.target),
            num((p.sample_count as f64).log10()),
            num(p.imse_squared.log10()),
        ]);
        if let Some(mc) = &run.mc {
            row.extend([num(mc[i].0), num(mc[i].1)]);
        }
        table.push(row);
    }
    Ok(table)
}

fn cmd_imse(cli: &Cli) -> Result<()> {
    let cfg = load_run(cli)?;
    let run = run_points(&cfg)?;
    let table = sweep_table("imse", &cfg, &run)?;
    emit(cli.out.as_deref(), &table.to_bytes()?)
}

#[derive(Serialize)]
struct SweepOutput<'a> {
    version: &'static str,
    config: &'a RunConfig,
    fit: mpli::experiments::SweepFit,
}

fn cmd_sweep(cli: &Cli, fit_out: Option<&Path>) -> Result<()> {
    let cfg = load_run(cli)?;
    let run = run_points(&cfg)?;
    let fit = fit_sweep(&run.points, cfg.sweep.theory_slope, cfg.sweep.known_term)?;
    let table = sweep_table("sweep", &cfg, &run)?;
    let Some(out) = cli.out.as_deref() else {
        bail!("sweep needs --out <csv path>");
    };
    let summary = json_bytes(&SweepOutput {
        version: env!("CARGO_PKG_VERSION"),
        config: &cfg,
        fit,
    })?;
    write_atomic(out, &table.to_bytes()?)?;
    emit(fit_out, &summary)
}

#[derive(Serialize)]
struct AllocationRow {
    target: f64,
    optimal: mpli::design::PlannedAllocation,
    uniform: mpli::design::PlannedAllocation,
    holder0: mpli::design::PlannedAllocation,
    holder1: mpli::design::PlannedAllocation,
}

#[derive(Serialize)]
struct AsymOutput {
    version: &'static str,
    config: AsymConfig,
    /// `a_{alpha_j}` per component.
    a_beta: Vec<f64>,
    /// `b_{alpha_j, l_j}(1, ..., 1)` per component.
    b_tilde: Vec<f64>,
    v: Vec<f64>,
    rho: f64,
    kappa: f64,
    optimal_constant: f64,
    constrained_minimum_constant: f64,
    holder0_exponents: Vec<f64>,
    holder1_exponents: Vec<f64>,
    allocations: Vec<AllocationRow>,
}

fn cmd_asym(cli: &Cli) -> Result<()> {
    let mut cfg: AsymConfig = config::load(require_config(cli)?)?;
    config::override_quadrature(&mut cfg.quadrature, cli.quad_order);
    let model = cfg.model.build()?;
    let dec = model.decomposition();
    let sm = model.smoothness();
    if cfg.densities.len() != dec.components() {
        bail!(
            "densities: expected {} entries, got {}",
            dec.components(),
            cfg.densities.len()
        );
    }
    let densities: Vec<Density> = cfg
        .densities
        .iter()
        .enumerate()
        .map(|(j, d)| d.build(&model, j, &cfg.quadrature))
        .collect::<mpli::Result<_>>()?;
    let alpha = sm.alpha().to_vec();
    let a = alpha.iter().map(|&x| a_beta(x)).collect::<mpli::Result<Vec<_>>>()?;
    let b = alpha
        .iter()
        .zip(dec.sizes())
        .map(|(&x, &l)| b_const(x, l, &vec![1.0; l], &cfg.quadrature))
        .collect::<mpli::Result<Vec<_>>>()?;
    let v = match &cfg.v {
        Some(v) => v.clone(),
        None => model_constants(&model, &densities, &cfg.quadrature, cfg.precision)?,
    };
    let p = profile(&v, &sm, &dec)?;
    let allocations = cfg
        .targets
        .iter()
        .map(|&n| {
            Ok(AllocationRow {
                target: n,
                optimal: optimal_allocation(&v, &sm, &dec, n)?,
                uniform: uniform_allocation(&dec, n)?,
                holder0: holder_allocation(&sm, &dec, n, HolderOrder::Continuous)?,
                holder1: holder_allocation(&sm, &dec, n, HolderOrder::Differentiable)?,
            })
        })
        .collect::<mpli::Result<Vec<_>>>()?;
    let out = AsymOutput {
        version: env!("CARGO_PKG_VERSION"),
        a_beta: a,
        b_tilde: b,
        rho: p.rho,
        kappa: p.kappa,
        optimal_constant: p.optimal_constant(),
        constrained_minimum_constant: p.constrained_minimum_constant(),
        holder0_exponents: holder_exponents(&sm, &dec, HolderOrder::Continuous),
        holder1_exponents: holder_exponents(&sm, &dec, HolderOrder::Differentiable),
        v,
        allocations,
        config: cfg,
    };
    emit(cli.out.as_deref(), &json_bytes(&out)?)
}

#[derive(Serialize)]
struct ReproduceOutput<T> {
    version: &'static str,
    quadrature: QuadratureSpec,
    report: T,
}

fn cmd_reproduce(cli: &Cli, example: Example, sizes: &[usize]) -> Result<()> {
    let mut quad = QuadratureSpec::default();
    config::override_quadrature(&mut quad, cli.quad_order);
    match example {
        Example::Four => {
            let report = reproduce_example4(&quad)?;
            emit(
                cli.out.as_deref(),
                &json_bytes(&ReproduceOutput {
                    version: env!("CARGO_PKG_VERSION"),
                    quadrature: quad,
                    report,
                })?,
            )
        }
        Example::Five => {
            let report = reproduce_example5(sizes, &quad)?;
            let mut table = Table::new(
                [
                    "n",
                    "N_actual",
                    "imse2_uniform",
                    "imse2_suboptimal",
                    "scaled_uniform",
                    "scaled_suboptimal",
                    "log10N",
                ]
                .map(String::from)
                .to_vec(),
            );
            table.note(format!("mpli {} reproduce 5", env!("CARGO_PKG_VERSION")));
            table.note(format!("quadrature {}", serde_json::to_string(&quad)?));
            table.note(format!(
                "v_uniform {} v_suboptimal {} reduction {}",
                num(report.v_uniform),
                num(report.v_suboptimal),
                num(report.reduction)
            ));
            for r in &report.rows {
                table.push(vec![
                    r.n.to_string(),
                    r.sample_count.to_string(),
                    num(r.imse_uniform),
                    num(r.imse_suboptimal),
                    num(r.scaled_uniform),
                    num(r.scaled_suboptimal),
                    num((r.sample_count as f64).log10()),
                ]);
            }
            let json = json_bytes(&ReproduceOutput {
                version: env!("CARGO_PKG_VERSION"),
                quadrature: quad,
                report,
            })?;
            match cli.out.as_deref() {
                Some(path) => {
                    write_atomic(&path.with_extension("csv"), &table.to_bytes()?)?;
                    write_atomic(path, &json)
                }
                None => emit(None, &json),
            }
        }
    }
}

fn cmd_design(cli: &Cli) -> Result<()> {
    let mut cfg: DesignConfig = config::load(require_config(cli)?)?;
    config::override_quadrature(&mut cfg.quadrature, cli.quad_order);
    let model = cfg.model.build()?;
    let densities: Vec<Density> = cfg
        .densities
        .iter()
        .enumerate()
        .map(|(j, d)| d.build(&model, j, &cfg.quadrature))
        .collect::<mpli::Result<_>>()?;
    let design = build_design(&densities, &Allocation::new(cfg.allocation.clone())?, &model.decomposition())?;
    emit(cli.out.as_deref(), &json_bytes(&design.to_record())?)
}

#[derive(Serialize)]
struct DirectionSummary {
    direction: usize,
    min_ratio: f64,
    max_ratio: f64,
}

#[derive(Serialize)]
struct KernelReport {
    version: &'static str,
    config: KernelCheckConfig,
    /// Ratio of increment variance to `sum_j c_j ||s^j||^alpha_j` per probe direction.
    stationarity: Option<Vec<DirectionSummary>>,
    /// Largest `|ratio - 1|` over all probes.
    stationarity_defect: Option<f64>,
    gram_min_eigenvalue: f64,
    gram_max_eigenvalue: f64,
    gram_points: usize,
    permutation_defect: Option<f64>,
}

fn cube_grid(m: usize, d: usize) -> Vec<Vec<f64>> {
    let coords: Vec<f64> = (0..m).map(|i| (i as f64 + 0.5) / m as f64).collect();
    let total = m.pow(d as u32);
    (0..total)
        .map(|idx| (0..d).map(|a| coords[(idx / m.pow(a as u32)) % m]).collect())
        .collect()
}

fn cmd_kernel_check(cli: &Cli) -> Result<()> {
    let cfg: KernelCheckConfig = config::load(require_config(cli)?)?;
    let model = cfg.model.build()?;
    let d = model.dim();
    let probes = stationarity_ratios(&model, cfg.step, cfg.probe_grid)?;
    let (stationarity, defect) = match &probes {
        None => (None, None),
        Some(probes) => {
            let dirs = probes.iter().map(|p| p.direction).max().map_or(0, |m| m + 1);
            let summary = (0..dirs)
                .map(|dir| {
                    let r = probes.iter().filter(|p| p.direction == dir).map(|p| p.ratio);
                    DirectionSummary {
                        direction: dir,
                        min_ratio: r.clone().fold(f64::INFINITY, f64::min),
                        max_ratio: r.fold(f64::NEG_INFINITY, f64::max),
                    }
                })
                .collect();
            let defect = probes.iter().map(|p| (p.ratio - 1.0).abs()).fold(0.0, f64::max);
            (Some(summary), Some(defect))
        }
    };
    let points = cube_grid(cfg.spectrum_grid, d);
    let (min, max) = gram_spectrum(&model, &points)?;
    let perm = model
        .local_stationarity()
        .map(|local| permutation_defect(&local, &model.decomposition(), &cube_grid(cfg.probe_grid, d)));
    let report = KernelReport {
        version: env!("CARGO_PKG_VERSION"),
        config: cfg,
        stationarity,
        stationarity_defect: defect,
        gram_min_eigenvalue: min,
        gram_max_eigenvalue: max,
        gram_points: points.len(),
        permutation_defect: perm,
    };
    emit(cli.out.as_deref(), &json_bytes(&report)?)
}
