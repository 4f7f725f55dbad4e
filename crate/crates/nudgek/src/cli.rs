//! Command-line front end: closed-form analysis, tail improvement curves,
//! ATIR sweeps, optimal-depth queries, simulation, and validation, driven by
//! a JSON system description.
//!
//! Exit codes: 0 success, 1 configuration or usage problem, 2 numerical
//! failure, 3 validation verdict FAIL.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use nalgebra::{DMatrix, DVector};
use serde::Deserialize;

use crate::atir;
use crate::fcfs::{self, CurveKind};
use crate::nudge;
use crate::phasetype::{PhaseType, SwapDepth, SystemConfig};
use crate::sim::{self, SimOptions};
use crate::{Error, Result};

/// Service-time description. Shapes are unit-free (the mean comes from the
/// system-level ratio); `ph` gives explicit matrices used exactly as stated.
#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "dist", rename_all = "snake_case", deny_unknown_fields)]
enum DistSpec {
    Expo,
    Erlang {
        phases: usize,
    },
    H2Balanced {
        scv: f64,
    },
    H2Shape {
        scv: f64,
        f: f64,
    },
    Ph {
        alpha: Vec<f64>,
        #[serde(rename = "S")]
        s: Vec<Vec<f64>>,
    },
}

impl DistSpec {
    fn is_raw(&self) -> bool {
        matches!(self, DistSpec::Ph { .. })
    }

    /// Shape variants are built with mean 1; raw matrices keep their scale.
    fn build(&self) -> Result<PhaseType> {
        match self {
            DistSpec::Expo => PhaseType::expo(1.0),
            DistSpec::Erlang { phases } => PhaseType::erlang(*phases, 1.0),
            DistSpec::H2Balanced { scv } => PhaseType::h2_balanced(1.0, *scv),
            DistSpec::H2Shape { scv, f } => PhaseType::h2_shape(1.0, *scv, *f),
            DistSpec::Ph { alpha, s } => {
                let n = alpha.len();
                if s.len() != n || s.iter().any(|row| row.len() != n) {
                    return Err(Error::Config(format!("S must be {n}x{n} to match alpha")));
                }
                PhaseType::new(
                    DVector::from_vec(alpha.clone()),
                    DMatrix::from_row_iterator(n, n, s.iter().flatten().copied()),
                )
            }
        }
    }
}

/// Swap depth in JSON: a number, or the string "inf".
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum SwapDepthSpec {
    Finite(u32),
    Named(String),
}

impl SwapDepthSpec {
    fn depth(&self) -> Result<SwapDepth> {
        match self {
            SwapDepthSpec::Finite(k) => Ok(SwapDepth::Finite(*k)),
            SwapDepthSpec::Named(s) if s == "inf" => Ok(SwapDepth::Infinite),
            SwapDepthSpec::Named(s) => Err(Error::Config(format!(
                "swap depth must be a number or \"inf\", got {s:?}"
            ))),
        }
    }
}

/// JSON system description.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RunConfig {
    lambda: f64,
    p: f64,
    /// E[X₂]/E[X₁]; only for shape distributions (default 1).
    #[serde(default)]
    ratio: Option<f64>,
    type1: DistSpec,
    type2: DistSpec,
    #[serde(rename = "K", default)]
    k: Option<SwapDepthSpec>,
}

impl RunConfig {
    fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    fn depth(&self) -> Result<SwapDepth> {
        self.k
            .as_ref()
            .map_or(Ok(SwapDepth::Finite(0)), SwapDepthSpec::depth)
    }

    fn has_raw(&self) -> bool {
        self.type1.is_raw() || self.type2.is_raw()
    }

    fn build(&self) -> Result<SystemConfig> {
        self.build_with(self.lambda, self.ratio, self.depth()?)
    }

    /// Build at possibly-swept parameters. Raw matrices cannot be rescaled,
    /// so a ratio (from the file or a sweep) is rejected for them.
    fn build_with(&self, lambda: f64, ratio: Option<f64>, k: SwapDepth) -> Result<SystemConfig> {
        let t1 = self.type1.build()?;
        let t2 = self.type2.build()?;
        if self.has_raw() {
            if ratio.is_some() {
                return Err(Error::Config(
                    "ratio cannot rescale explicit ph matrices; drop it and scale S directly"
                        .into(),
                ));
            }
            SystemConfig::new(lambda, self.p, t1, t2, k)
        } else {
            SystemConfig::normalized(lambda, self.p, &t1, &t2, ratio.unwrap_or(1.0), k)
        }
    }
}

/// "A:B:STEP" → inclusive range, guarding the endpoint against float creep.
fn parse_range(text: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = text.split(':').collect();
    let err = || Error::Config(format!("range must be A:B:STEP, got {text:?}"));
    if parts.len() != 3 {
        return Err(err());
    }
    let nums: Vec<f64> = parts
        .iter()
        .map(|p| p.parse::<f64>().map_err(|_| err()))
        .collect::<Result<_>>()?;
    let (a, b, step) = (nums[0], nums[1], nums[2]);
    if !(a.is_finite() && b.is_finite() && step > 0.0 && a <= b) {
        return Err(err());
    }
    let mut out = Vec::new();
    let mut i = 0u64;
    loop {
        let v = a + i as f64 * step;
        if v > b + step * 1e-9 {
            break;
        }
        out.push(v);
        i += 1;
    }
    Ok(out)
}

/// "1,2,inf" → swap depths.
fn parse_depth_list(text: &str) -> Result<Vec<SwapDepth>> {
    text.split(',')
        .map(|tok| {
            let tok = tok.trim();
            if tok == "inf" {
                Ok(SwapDepth::Infinite)
            } else {
                tok.parse::<u32>().map(SwapDepth::Finite).map_err(|_| {
                    Error::Config(format!("swap depth must be a number or inf, got {tok:?}"))
                })
            }
        })
        .collect()
}

/// Geometric grid with both endpoints, for tail curves.
fn geometric_grid(t_min: f64, t_max: f64, points: usize) -> Result<Vec<f64>> {
    if !(t_min.is_finite() && t_min > 0.0 && t_max > t_min) {
        return Err(Error::Config(format!(
            "need 0 < t-min < t-max, got {t_min} and {t_max}"
        )));
    }
    if points < 2 {
        return Err(Error::Config("need at least two grid points".into()));
    }
    let ratio = (t_max / t_min).powf(1.0 / (points - 1) as f64);
    Ok((0..points).map(|i| t_min * ratio.powi(i as i32)).collect())
}

fn fmt_f(x: f64) -> String {
    format!("{x:.16e}")
}

fn write_out(out: Option<&PathBuf>, content: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, content).map_err(Error::from),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

#[derive(Parser)]
#[command(
    name = "nudgek",
    version,
    about = "Analytical engine and simulator for the Nudge-K policy in an M/PH/1 queue"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Closed-form summary: decay rate, tail prefactors, swap probability,
    /// means, ATIR, and the optimal swap depth.
    Analyze {
        #[arg(long)]
        config: PathBuf,
        /// Write the summary here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Tail improvement ratio curve as CSV (t, FCFS and Nudge response
    /// tails, TIR).
    Tir {
        #[arg(long)]
        config: PathBuf,
        /// Swap depths like "1,2,inf"; a k column is prepended when more
        /// than one is given. Default: the config's K.
        #[arg(long)]
        k: Option<String>,
        #[arg(long, default_value_t = 0.01)]
        t_min: f64,
        /// Default: max(20, 12/θ_Z).
        #[arg(long)]
        t_max: Option<f64>,
        #[arg(long, default_value_t = 200)]
        t_points: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// ATIR at K = 1 and at the optimal depth over a grid of utilizations
    /// and mean ratios, as CSV.
    AtirSweep {
        #[arg(long)]
        config: PathBuf,
        /// Utilization sweep "A:B:STEP". Default: the config's lambda.
        #[arg(long)]
        lambda_range: Option<String>,
        /// Mean-ratio sweep "A:B:STEP". Default: the config's ratio.
        #[arg(long)]
        ratio_range: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads (default: all cores).
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Optimal swap depth and its heavy-traffic approximation; with ranges,
    /// a CSV over the swept grid.
    Kopt {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        lambda_range: Option<String>,
        #[arg(long)]
        ratio_range: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Discrete-event simulation with batch-means confidence intervals.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 1_000_000)]
        arrivals: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Write the sampled tail curves here as CSV.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Simulate, then hold the run against the analytical distributions;
    /// exits 3 when the verdict is FAIL.
    Validate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 1_000_000)]
        arrivals: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Write every check as a CSV row here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

pub fn run<I: IntoIterator<Item = String>>(argv: I) -> i32 {
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.cmd) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(cmd: Cmd) -> Result<i32> {
    match cmd {
        Cmd::Analyze { config, out } => {
            let rc = RunConfig::load(&config)?;
            let cfg = rc.build()?;
            write_out(out.as_ref(), &analyze_text(&cfg)?)?;
        }
        Cmd::Tir {
            config,
            k,
            t_min,
            t_max,
            t_points,
            out,
        } => {
            let rc = RunConfig::load(&config)?;
            let cfg = rc.build()?;
            let depths = match k {
                Some(list) => parse_depth_list(&list)?,
                None => vec![cfg.k()],
            };
            let theta = fcfs::spectral(&cfg)?.theta_z;
            let t_max = t_max.unwrap_or_else(|| (12.0 / theta).max(20.0));
            let grid = geometric_grid(t_min, t_max, t_points)?;
            write_out(out.as_ref(), &tir_csv(&cfg, &depths, &grid)?)?;
        }
        Cmd::AtirSweep {
            config,
            lambda_range,
            ratio_range,
            out,
            workers,
        } => {
            let rc = RunConfig::load(&config)?;
            let rows = sweep_rows(&rc, lambda_range.as_deref(), ratio_range.as_deref())?;
            let csv = run_in_pool(workers, || atir_sweep_csv(&rc, &rows))?;
            write_out(out.as_ref(), &csv)?;
        }
        Cmd::Kopt {
            config,
            lambda_range,
            ratio_range,
            out,
        } => {
            let rc = RunConfig::load(&config)?;
            if lambda_range.is_none() && ratio_range.is_none() {
                let cfg = rc.build()?;
                let rep = atir::report(&cfg)?;
                let text = format!(
                    "k_opt            = {}\nheavy_traffic_k  = {}\natir(k_opt)      = {}\natir(1)          = {}\natir(inf)        = {}\n",
                    rep.k_opt,
                    rep.heavy_traffic_k,
                    fmt_f(rep.atir_k_opt),
                    fmt_f(rep.atir_k1),
                    fmt_f(rep.atir_uncapped),
                );
                write_out(out.as_ref(), &text)?;
            } else {
                let rows = sweep_rows(&rc, lambda_range.as_deref(), ratio_range.as_deref())?;
                write_out(out.as_ref(), &kopt_csv(&rc, &rows)?)?;
            }
        }
        Cmd::Simulate {
            config,
            arrivals,
            seed,
            out,
        } => {
            let rc = RunConfig::load(&config)?;
            let cfg = rc.build()?;
            let stats = sim::simulate_with(&cfg, &SimOptions::new(arrivals, seed))?;
            print!("{}", sim_text(&stats));
            if let Some(path) = out {
                fs::write(&path, sim_csv(&stats))?;
            }
        }
        Cmd::Validate {
            config,
            arrivals,
            seed,
            out,
        } => {
            let rc = RunConfig::load(&config)?;
            let cfg = rc.build()?;
            let report = sim::validate(&cfg, &SimOptions::new(arrivals, seed))?;
            print!("{}", validate_text(&report));
            if let Some(path) = out {
                fs::write(&path, validate_csv(&report))?;
            }
            if !report.passed {
                return Ok(3);
            }
        }
    }
    Ok(0)
}

/// Run `f` on a bounded rayon pool when a worker count is given.
fn run_in_pool<T>(workers: Option<usize>, f: impl FnOnce() -> Result<T> + Send) -> Result<T>
where
    T: Send,
{
    match workers {
        None => f(),
        Some(n) => {
            if n == 0 {
                return Err(Error::Config("workers must be at least 1".into()));
            }
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
            pool.install(f)
        }
    }
}

fn analyze_text(cfg: &SystemConfig) -> Result<String> {
    let sp = fcfs::spectral(cfg)?;
    let consts = nudge::tail_constants(cfg)?;
    let fcfs_means = fcfs::means(cfg)?;
    let p_swap = nudge::p_swap(cfg)?;
    let mean_nudge = nudge::mean_response(cfg)?;
    let rep = atir::report(cfg)?;
    let mut s = String::new();
    let mut line = |k: &str, v: String| s.push_str(&format!("{k:<22} = {v}\n"));
    line("lambda", fmt_f(cfg.lambda()));
    line("p", fmt_f(cfg.p()));
    line("mean_ratio", fmt_f(cfg.type2().mean() / cfg.type1().mean()));
    line("K", cfg.k().to_string());
    line("theta_z", fmt_f(sp.theta_z));
    line("c_z", fmt_f(sp.c_z));
    line("c_fcfs", fmt_f(consts.c_fcfs));
    line("c_w1", fmt_f(consts.c_w1));
    line("c_r1", fmt_f(consts.c_r1));
    line("c_w2", fmt_f(consts.c_w2));
    line("c_r2", fmt_f(consts.c_r2));
    line("p_swap", fmt_f(p_swap));
    line("mean_workload", fmt_f(fcfs_means.workload));
    line("mean_response_fcfs", fmt_f(fcfs_means.response));
    line("mean_response", fmt_f(mean_nudge));
    if cfg.p() > 0.0 {
        let w1 = fcfs_means.workload - (1.0 - cfg.p()) / cfg.p() * p_swap * cfg.type2().mean();
        line("mean_wait1", fmt_f(w1));
    }
    if cfg.p() < 1.0 {
        let w2 = fcfs_means.workload + p_swap * cfg.type1().mean();
        line("mean_wait2", fmt_f(w2));
    }
    line("atir_k", fmt_f(atir::atir(cfg, cfg.k())?));
    line("atir_1", fmt_f(rep.atir_k1));
    line("atir_k_opt", fmt_f(rep.atir_k_opt));
    line("atir_inf", fmt_f(rep.atir_uncapped));
    line("k_opt", rep.k_opt.to_string());
    line("heavy_traffic_k", rep.heavy_traffic_k.to_string());
    if let Ok(pos) = atir::positivity_conditions(cfg) {
        line("positivity_lhs", fmt_f(pos.lhs));
        line("positivity_rhs_k1", fmt_f(pos.rhs_k1));
        line("positivity_rhs_all_k", fmt_f(pos.rhs_all_k));
        line("improves_at_k1", pos.holds_k1.to_string());
        line("improves_at_all_k", pos.holds_all_k.to_string());
    }
    Ok(s)
}

fn tir_csv(cfg: &SystemConfig, depths: &[SwapDepth], grid: &[f64]) -> Result<String> {
    let multi = depths.len() > 1;
    let mut s = String::new();
    if multi {
        s.push_str("k,t,ccdf_fcfs,ccdf_nudge,tir\n");
    } else {
        s.push_str("t,ccdf_fcfs,ccdf_nudge,tir\n");
    }
    for &k in depths {
        let curve = nudge::tir_curve(&cfg.with_k(k), grid)?;
        for i in 0..grid.len() {
            if multi {
                s.push_str(&format!(
                    "{k},{},{},{},{}\n",
                    fmt_f(grid[i]),
                    fmt_f(curve.fcfs.value[i]),
                    fmt_f(curve.nudge.value[i]),
                    fmt_f(curve.tir[i]),
                ));
            } else {
                s.push_str(&format!(
                    "{},{},{},{}\n",
                    fmt_f(grid[i]),
                    fmt_f(curve.fcfs.value[i]),
                    fmt_f(curve.nudge.value[i]),
                    fmt_f(curve.tir[i]),
                ));
            }
        }
    }
    Ok(s)
}

/// Cartesian sweep grid in row-major order (λ outer, ratio inner). `None`
/// entries fall back to the file's single values; raw-matrix configs admit
/// a λ sweep but no ratio axis.
fn sweep_rows(
    rc: &RunConfig,
    lambda_range: Option<&str>,
    ratio_range: Option<&str>,
) -> Result<Vec<(f64, Option<f64>)>> {
    let lambdas = match lambda_range {
        Some(r) => parse_range(r)?,
        None => vec![rc.lambda],
    };
    let ratios: Vec<Option<f64>> = match ratio_range {
        Some(r) => parse_range(r)?.into_iter().map(Some).collect(),
        None => vec![rc.ratio],
    };
    let mut rows = Vec::with_capacity(lambdas.len() * ratios.len());
    for &l in &lambdas {
        for &r in &ratios {
            rows.push((l, r));
        }
    }
    Ok(rows)
}

fn atir_sweep_csv(rc: &RunConfig, rows: &[(f64, Option<f64>)]) -> Result<String> {
    use rayon::prelude::*;
    let k = rc.depth()?;
    let lines: Vec<String> = rows
        .par_iter()
        .map(|&(lambda, ratio)| -> Result<String> {
            let cfg = rc.build_with(lambda, ratio, k)?;
            let k_opt = atir::k_opt(&cfg)?;
            let atir_1 = atir::atir(&cfg, SwapDepth::Finite(1))?;
            let atir_opt = atir::atir(&cfg, SwapDepth::Finite(k_opt))?;
            Ok(format!(
                "{},{},{},{},{},{k_opt}\n",
                fmt_f(lambda),
                fmt_f(cfg.type2().mean() / cfg.type1().mean()),
                fmt_f(cfg.p()),
                fmt_f(atir_1),
                fmt_f(atir_opt),
            ))
        })
        .collect::<Result<_>>()?;
    let mut s = String::from("lambda,ratio,p,atir_1,atir_kopt,k_opt\n");
    s.extend(lines);
    Ok(s)
}

fn kopt_csv(rc: &RunConfig, rows: &[(f64, Option<f64>)]) -> Result<String> {
    let k = rc.depth()?;
    let mut s = String::from("lambda,ratio,p,k_opt,heavy_traffic_k\n");
    for &(lambda, ratio) in rows {
        let cfg = rc.build_with(lambda, ratio, k)?;
        s.push_str(&format!(
            "{},{},{},{},{}\n",
            fmt_f(lambda),
            fmt_f(cfg.type2().mean() / cfg.type1().mean()),
            fmt_f(cfg.p()),
            atir::k_opt(&cfg)?,
            atir::heavy_traffic_k(&cfg)?,
        ));
    }
    Ok(s)
}

fn sim_text(stats: &sim::SimStats) -> String {
    let mut s = String::new();
    let mut line = |k: &str, e: sim::Estimate| {
        s.push_str(&format!(
            "{k:<16} = {} +- {} (99% ci)\n",
            fmt_f(e.value),
            fmt_f(e.half_width)
        ));
    };
    line("p_swap", stats.p_swap);
    line("mean_response", stats.mean_response);
    line("mean_wait1", stats.mean_wait1);
    line("mean_wait2", stats.mean_wait2);
    line("mean_response1", stats.mean_response1);
    line("mean_response2", stats.mean_response2);
    s.push_str(&format!(
        "time_avg_workload = {}\narrivals = {} (warmup {}), batches = {}\n",
        fmt_f(stats.time_avg_workload),
        stats.arrivals,
        stats.warmup,
        stats.batches
    ));
    s
}

fn sim_csv(stats: &sim::SimStats) -> String {
    let mut s = String::from("curve,t,estimate,half_width\n");
    let name = |kind: CurveKind| match kind {
        CurveKind::Workload => "workload",
        CurveKind::NudgeWait1 => "wait1",
        CurveKind::NudgeWait2 => "wait2",
        CurveKind::NudgeResponse1 => "response1",
        CurveKind::NudgeResponse2 => "response2",
        CurveKind::FcfsResponse => "response_fcfs",
        CurveKind::NudgeResponse => "response",
    };
    for curve in [
        &stats.workload_ccdf,
        &stats.wait1_ccdf,
        &stats.wait2_ccdf,
        &stats.response1_ccdf,
        &stats.response2_ccdf,
    ] {
        for (i, &t) in curve.t.iter().enumerate() {
            s.push_str(&format!(
                "{},{},{},{}\n",
                name(curve.kind),
                fmt_f(t),
                fmt_f(curve.value[i].value),
                fmt_f(curve.value[i].half_width)
            ));
        }
    }
    for (q, est) in stats.qlen.iter().enumerate() {
        s.push_str(&format!(
            "qlen,{q},{},{}\n",
            fmt_f(est.value),
            fmt_f(est.half_width)
        ));
    }
    s
}

fn validate_text(report: &sim::ValidationReport) -> String {
    let mut s = String::new();
    for c in report.checks.iter().filter(|c| !c.within) {
        s.push_str(&format!(
            "MISS {}: analytic {} vs simulated {} +- {}\n",
            c.name,
            fmt_f(c.analytic),
            fmt_f(c.simulated),
            fmt_f(c.half_width)
        ));
    }
    s.push_str(&format!(
        "{} of {} checks within three half-widths (required {}): {}\n",
        report.within,
        report.checks.len(),
        report.required,
        if report.passed { "PASS" } else { "FAIL" }
    ));
    s
}

fn validate_csv(report: &sim::ValidationReport) -> String {
    let mut s = String::from("check,analytic,simulated,half_width,within\n");
    for c in &report.checks {
        s.push_str(&format!(
            "{},{},{},{},{}\n",
            c.name,
            fmt_f(c.analytic),
            fmt_f(c.simulated),
            fmt_f(c.half_width),
            c.within
        ));
    }
    s
}
