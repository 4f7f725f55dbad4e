//! Discrete-event simulation of the M/PH/1 queue under Nudge-K, with
//! batch-means confidence intervals, and a validation harness that holds the
//! simulator against the analytical distributions.
//!
//! Randomness is split over three decorrelated streams of one generator
//! (interarrival times, job types, service demands), so two runs with the
//! same seed but different swap depths see the identical arrival sequence:
//! policy comparisons are paired, and the workload process must agree
//! exactly.

use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::fcfs::{spectral, workload_ccdf, CurveKind};
use crate::nudge::{mean_response, p_swap, r1_ccdf, r2_ccdf, w1_ccdf, w2_ccdf};
use crate::phasetype::{PhaseType, SwapDepth, SystemConfig};
use crate::{Error, Result};

/// Fewest batches that still give the t-quantile meaning.
pub const MIN_BATCHES: usize = 30;

/// Point estimate with a 99% batch-means confidence half-width.
#[derive(Debug, Clone, Copy)]
pub struct Estimate {
    pub value: f64,
    pub half_width: f64,
}

/// Empirical tail curve on a fixed grid, one estimate per point.
#[derive(Debug, Clone)]
pub struct CcdfEstimate {
    pub kind: CurveKind,
    pub t: Vec<f64>,
    pub value: Vec<Estimate>,
}

/// Simulation controls. `grid` fixes where the tail curves are sampled;
/// when absent, ten points spread over the analytic decay scale are used.
#[derive(Debug, Clone)]
pub struct SimOptions {
    pub arrivals: u64,
    pub seed: u64,
    pub warmup_fraction: f64,
    pub batches: usize,
    pub grid: Option<Vec<f64>>,
    pub qlen_buckets: usize,
}

impl SimOptions {
    pub fn new(arrivals: u64, seed: u64) -> Self {
        SimOptions {
            arrivals,
            seed,
            warmup_fraction: 0.1,
            batches: 50,
            grid: None,
            qlen_buckets: 24,
        }
    }
}

/// Everything measured in one run. Scalar estimates are batch means over
/// jobs grouped by arrival order; the workload time average has no interval
/// attached (it is there for conservation checks, which are paired).
#[derive(Debug, Clone)]
pub struct SimStats {
    pub arrivals: u64,
    pub warmup: u64,
    pub batches: usize,
    pub p_swap: Estimate,
    pub mean_response: Estimate,
    pub mean_wait1: Estimate,
    pub mean_wait2: Estimate,
    pub mean_response1: Estimate,
    pub mean_response2: Estimate,
    pub workload_ccdf: CcdfEstimate,
    pub wait1_ccdf: CcdfEstimate,
    pub wait2_ccdf: CcdfEstimate,
    pub response1_ccdf: CcdfEstimate,
    pub response2_ccdf: CcdfEstimate,
    /// P[q jobs in system] for q = 0, 1, …, seen by arrivals.
    pub qlen: Vec<Estimate>,
    pub time_avg_workload: f64,
}

/// Tables for drawing from PH(α, S) by walking the phase process.
struct PhSampler {
    /// Cumulative initial distribution.
    alpha_cdf: Vec<f64>,
    /// Per phase: total rate out.
    rate: Vec<f64>,
    /// Per phase: cumulative transition distribution over (next phase 0..n,
    /// exit at index n).
    next_cdf: Vec<Vec<f64>>,
}

impl PhSampler {
    fn new(ph: &PhaseType) -> Self {
        let n = ph.order();
        let s = ph.sub_generator();
        let exit = ph.exit_rates();
        let mut alpha_cdf = Vec::with_capacity(n);
        let mut acc = 0.0;
        for i in 0..n {
            acc += ph.alpha()[i];
            alpha_cdf.push(acc);
        }
        let mut rate = Vec::with_capacity(n);
        let mut next_cdf = Vec::with_capacity(n);
        for i in 0..n {
            let r = -s[(i, i)];
            rate.push(r);
            let mut row = Vec::with_capacity(n + 1);
            let mut acc = 0.0;
            for j in 0..n {
                if j != i {
                    acc += s[(i, j)].max(0.0) / r;
                }
                row.push(acc);
            }
            acc += exit[i].max(0.0) / r;
            row.push(acc);
            next_cdf.push(row);
        }
        PhSampler {
            alpha_cdf,
            rate,
            next_cdf,
        }
    }

    fn pick(cdf: &[f64], u: f64) -> usize {
        cdf.iter().position(|&c| u < c).unwrap_or(cdf.len() - 1)
    }

    fn sample(&self, rng: &mut ChaCha12Rng) -> f64 {
        let n = self.rate.len();
        let mut phase = Self::pick(&self.alpha_cdf, rng.random::<f64>());
        let mut total = 0.0;
        loop {
            total += sample_exp(rng, self.rate[phase]);
            let next = Self::pick(&self.next_cdf[phase], rng.random::<f64>());
            if next == n {
                return total;
            }
            phase = next;
        }
    }
}

fn sample_exp(rng: &mut ChaCha12Rng, rate: f64) -> f64 {
    // 1 − U ∈ (0, 1] keeps the logarithm finite.
    -(1.0 - rng.random::<f64>()).ln() / rate
}

struct Job {
    arrive: f64,
    service: f64,
    type1: bool,
    swapped: bool,
    /// Batch by arrival order; −1 while warming up.
    batch: isize,
}

/// Per-batch accumulators; estimates are means over batches.
#[derive(Clone)]
struct Batch {
    arrivals: u64,
    n1: u64,
    n2: u64,
    swapped2: u64,
    wait1_sum: f64,
    wait2_sum: f64,
    resp_sum: f64,
    resp1_sum: f64,
    resp2_sum: f64,
    wl_exceed: Vec<u64>,
    w1_exceed: Vec<u64>,
    w2_exceed: Vec<u64>,
    r1_exceed: Vec<u64>,
    r2_exceed: Vec<u64>,
    qlen: Vec<u64>,
}

impl Batch {
    fn new(grid_len: usize, qlen_buckets: usize) -> Self {
        Batch {
            arrivals: 0,
            n1: 0,
            n2: 0,
            swapped2: 0,
            wait1_sum: 0.0,
            wait2_sum: 0.0,
            resp_sum: 0.0,
            resp1_sum: 0.0,
            resp2_sum: 0.0,
            wl_exceed: vec![0; grid_len],
            w1_exceed: vec![0; grid_len],
            w2_exceed: vec![0; grid_len],
            r1_exceed: vec![0; grid_len],
            r2_exceed: vec![0; grid_len],
            qlen: vec![0; qlen_buckets],
        }
    }
}

/// Mean and 99% half-width over per-batch values, dropping batches whose
/// denominator is zero.
fn batch_estimate(values: impl Iterator<Item = Option<f64>>, t_quantile: f64) -> Estimate {
    let vals: Vec<f64> = values.flatten().collect();
    let b = vals.len();
    if b == 0 {
        return Estimate {
            value: f64::NAN,
            half_width: f64::INFINITY,
        };
    }
    let mean = vals.iter().sum::<f64>() / b as f64;
    if b < 2 {
        return Estimate {
            value: mean,
            half_width: f64::INFINITY,
        };
    }
    let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (b - 1) as f64;
    Estimate {
        value: mean,
        half_width: t_quantile * (var / b as f64).sqrt(),
    }
}

/// Simulate with default warmup, batching, and sampling grid.
pub fn simulate(cfg: &SystemConfig, arrivals: u64, seed: u64) -> Result<SimStats> {
    simulate_with(cfg, &SimOptions::new(arrivals, seed))
}

/// Ten tail-sampling points spread over the analytic decay scale, the last
/// near where the tail has fallen to about e^{−7}.
fn default_sim_grid(cfg: &SystemConfig) -> Result<Vec<f64>> {
    let theta = spectral(cfg)?.theta_z;
    Ok((1..=10).map(|j| 0.7 * j as f64 / theta).collect())
}

pub fn simulate_with(cfg: &SystemConfig, opts: &SimOptions) -> Result<SimStats> {
    if !(cfg.p() > 0.0 && cfg.p() < 1.0) {
        return Err(Error::Config(
            "simulation needs both job types present (0 < p < 1)".into(),
        ));
    }
    if opts.batches < MIN_BATCHES {
        return Err(Error::TooFewBatches {
            min: MIN_BATCHES,
            got: opts.batches,
        });
    }
    if !(opts.warmup_fraction >= 0.0 && opts.warmup_fraction < 1.0) {
        return Err(Error::Config(format!(
            "warmup fraction must be in [0, 1), got {}",
            opts.warmup_fraction
        )));
    }
    let warmup = (opts.arrivals as f64 * opts.warmup_fraction) as u64;
    let measured = opts.arrivals - warmup;
    if measured < (opts.batches as u64) * 20 {
        return Err(Error::Config(format!(
            "{} arrivals leave too few measured jobs for {} batches",
            opts.arrivals, opts.batches
        )));
    }
    let grid = match &opts.grid {
        Some(g) => {
            crate::fcfs::check_grid(g)?;
            g.clone()
        }
        None => default_sim_grid(cfg)?,
    };
    if opts.qlen_buckets == 0 {
        return Err(Error::Config(
            "need at least one queue-length bucket".into(),
        ));
    }

    let mut arrival_rng = ChaCha12Rng::seed_from_u64(opts.seed);
    arrival_rng.set_stream(0);
    let mut type_rng = ChaCha12Rng::seed_from_u64(opts.seed);
    type_rng.set_stream(1);
    let mut service_rng = ChaCha12Rng::seed_from_u64(opts.seed);
    service_rng.set_stream(2);

    let sampler1 = PhSampler::new(cfg.type1());
    let sampler2 = PhSampler::new(cfg.type2());
    let depth = match cfg.k() {
        SwapDepth::Finite(k) => k as usize,
        SwapDepth::Infinite => usize::MAX,
    };

    let mut batches = vec![Batch::new(grid.len(), opts.qlen_buckets); opts.batches];
    let mut queue: VecDeque<Job> = VecDeque::new();
    // Server: job in service and its remaining demand.
    let mut in_service: Option<(Job, f64)> = None;
    let mut now = 0.0_f64;

    // Workload time integral over [first measured arrival, last arrival]:
    // between arrivals the workload drains deterministically at rate 1, so
    // each gap contributes in closed form. The base value is re-summed from
    // the queue at every arrival, so no drift accumulates.
    let mut area = 0.0_f64;
    let mut area_t0: Option<f64> = None;
    let mut area_t_end = 0.0_f64;
    let mut w_after_prev = 0.0_f64;
    let mut t_prev = 0.0_f64;

    macro_rules! record_start {
        ($job:expr) => {
            if $job.batch >= 0 {
                let b = &mut batches[$job.batch as usize];
                let wait = now - $job.arrive;
                if $job.type1 {
                    b.wait1_sum += wait;
                    for (i, &t) in grid.iter().enumerate() {
                        if wait > t {
                            b.w1_exceed[i] += 1;
                        }
                    }
                } else {
                    b.wait2_sum += wait;
                    if $job.swapped {
                        b.swapped2 += 1;
                    }
                    for (i, &t) in grid.iter().enumerate() {
                        if wait > t {
                            b.w2_exceed[i] += 1;
                        }
                    }
                }
            }
        };
    }
    macro_rules! record_departure {
        ($job:expr) => {
            if $job.batch >= 0 {
                let b = &mut batches[$job.batch as usize];
                let resp = now - $job.arrive;
                b.resp_sum += resp;
                let (sum, exceed) = if $job.type1 {
                    (&mut b.resp1_sum, &mut b.r1_exceed)
                } else {
                    (&mut b.resp2_sum, &mut b.r2_exceed)
                };
                *sum += resp;
                for (i, &t) in grid.iter().enumerate() {
                    if resp > t {
                        exceed[i] += 1;
                    }
                }
            }
        };
    }
    // Run the server forward to t_target, completing and starting jobs.
    macro_rules! advance_to {
        ($t_target:expr) => {
            let t_target: f64 = $t_target;
            while let Some((job, rem)) = in_service.take() {
                if now + rem <= t_target {
                    now += rem;
                    record_departure!(job);
                    if let Some(next) = queue.pop_front() {
                        record_start!(next);
                        let r = next.service;
                        in_service = Some((next, r));
                    }
                } else {
                    in_service = Some((job, rem - (t_target - now)));
                    break;
                }
            }
            now = t_target;
        };
    }

    for i in 0..opts.arrivals {
        let gap = sample_exp(&mut arrival_rng, cfg.lambda());
        let t_arr = now + gap;
        advance_to!(t_arr);

        let batch: isize = if i < warmup {
            -1
        } else {
            (((i - warmup) * opts.batches as u64) / measured).min(opts.batches as u64 - 1) as isize
        };

        // State seen by this arrival (Poisson arrivals see time averages).
        let in_system = queue.len() + usize::from(in_service.is_some());
        let workload = in_service.as_ref().map_or(0.0, |(_, rem)| *rem)
            + queue.iter().map(|j| j.service).sum::<f64>();
        if batch >= 0 {
            let b = &mut batches[batch as usize];
            b.arrivals += 1;
            if in_system < opts.qlen_buckets {
                b.qlen[in_system] += 1;
            }
            for (j, &t) in grid.iter().enumerate() {
                if workload > t {
                    b.wl_exceed[j] += 1;
                }
            }
            if area_t0.is_none() {
                area_t0 = Some(t_arr);
            } else {
                let dt = t_arr - t_prev;
                area += if w_after_prev >= dt {
                    (w_after_prev - dt / 2.0) * dt
                } else {
                    w_after_prev * w_after_prev / 2.0
                };
            }
            area_t_end = t_arr;
        }

        let type1 = type_rng.random::<f64>() < cfg.p();
        let service = if type1 {
            sampler1.sample(&mut service_rng)
        } else {
            sampler2.sample(&mut service_rng)
        };
        if batch >= 0 {
            let b = &mut batches[batch as usize];
            if type1 {
                b.n1 += 1;
            } else {
                b.n2 += 1;
            }
        }
        let job = Job {
            arrive: t_arr,
            service,
            type1,
            swapped: false,
            batch,
        };

        if type1 && depth > 0 {
            // Pass unswapped type-2 jobs from the back, at most `depth`,
            // stopping at a type-1 job, an already-swapped job, or the
            // head. Passed jobs are marked: a job is swapped at most once.
            let mut idx = queue.len();
            let mut passes = 0;
            while passes < depth && idx > 0 {
                let cand = &queue[idx - 1];
                if cand.type1 || cand.swapped {
                    break;
                }
                passes += 1;
                idx -= 1;
            }
            for j in idx..queue.len() {
                debug_assert!(!queue[j].type1 && !queue[j].swapped);
                queue[j].swapped = true;
            }
            queue.insert(idx, job);
        } else {
            queue.push_back(job);
        }
        w_after_prev = workload + service;
        t_prev = t_arr;

        if in_service.is_none() {
            debug_assert_eq!(queue.len(), 1);
            let next = queue.pop_front().expect("just inserted");
            record_start!(next);
            let r = next.service;
            in_service = Some((next, r));
        }
    }
    // Drain: every admitted job runs to completion.
    while let Some((job, rem)) = in_service.take() {
        now += rem;
        record_departure!(job);
        if let Some(next) = queue.pop_front() {
            record_start!(next);
            let r = next.service;
            in_service = Some((next, r));
        }
    }
    debug_assert!(queue.is_empty());

    let df = (opts.batches - 1) as f64;
    let tq = StudentsT::new(0.0, 1.0, df)
        .map_err(|e| Error::Config(format!("t-distribution: {e}")))?
        .inverse_cdf(0.995);

    let est = |f: &dyn Fn(&Batch) -> Option<f64>| batch_estimate(batches.iter().map(f), tq);
    let curve = |kind: CurveKind, pick: &dyn Fn(&Batch) -> (&Vec<u64>, u64)| CcdfEstimate {
        kind,
        t: grid.clone(),
        value: (0..grid.len())
            .map(|j| {
                batch_estimate(
                    batches.iter().map(|b| {
                        let (exceed, n) = pick(b);
                        (n > 0).then(|| exceed[j] as f64 / n as f64)
                    }),
                    tq,
                )
            })
            .collect(),
    };

    let stats = SimStats {
        arrivals: opts.arrivals,
        warmup,
        batches: opts.batches,
        p_swap: est(&|b| (b.n2 > 0).then(|| b.swapped2 as f64 / b.n2 as f64)),
        mean_response: est(&|b| {
            let n = b.n1 + b.n2;
            (n > 0).then(|| b.resp_sum / n as f64)
        }),
        mean_wait1: est(&|b| (b.n1 > 0).then(|| b.wait1_sum / b.n1 as f64)),
        mean_wait2: est(&|b| (b.n2 > 0).then(|| b.wait2_sum / b.n2 as f64)),
        mean_response1: est(&|b| (b.n1 > 0).then(|| b.resp1_sum / b.n1 as f64)),
        mean_response2: est(&|b| (b.n2 > 0).then(|| b.resp2_sum / b.n2 as f64)),
        workload_ccdf: curve(CurveKind::Workload, &|b| (&b.wl_exceed, b.arrivals)),
        wait1_ccdf: curve(CurveKind::NudgeWait1, &|b| (&b.w1_exceed, b.n1)),
        wait2_ccdf: curve(CurveKind::NudgeWait2, &|b| (&b.w2_exceed, b.n2)),
        response1_ccdf: curve(CurveKind::NudgeResponse1, &|b| (&b.r1_exceed, b.n1)),
        response2_ccdf: curve(CurveKind::NudgeResponse2, &|b| (&b.r2_exceed, b.n2)),
        qlen: (0..opts.qlen_buckets)
            .map(|q| {
                batch_estimate(
                    batches
                        .iter()
                        .map(|b| (b.arrivals > 0).then(|| b.qlen[q] as f64 / b.arrivals as f64)),
                    tq,
                )
            })
            .collect(),
        time_avg_workload: match area_t0 {
            Some(t0) if area_t_end > t0 => area / (area_t_end - t0),
            _ => f64::NAN,
        },
    };
    Ok(stats)
}

/// One simulated-versus-analytic comparison.
#[derive(Debug, Clone)]
pub struct CheckRow {
    pub name: String,
    pub analytic: f64,
    pub simulated: f64,
    pub half_width: f64,
    pub within: bool,
}

/// Result of holding a simulation against the analytical model: each check
/// asks the analytic value to sit within three half-widths of the estimate,
/// and the run passes when at least 95% of checks do.
#[derive(Debug, Clone)]
pub struct ValidationReport {
    pub checks: Vec<CheckRow>,
    pub within: usize,
    pub required: usize,
    pub passed: bool,
}

fn check(name: String, analytic: f64, est: Estimate) -> CheckRow {
    let within = (analytic - est.value).abs() <= 3.0 * est.half_width + 1e-12;
    CheckRow {
        name,
        analytic,
        simulated: est.value,
        half_width: est.half_width,
        within,
    }
}

/// Compare finished statistics against the analytical curves of `cfg`.
pub(crate) fn compare(stats: &SimStats, cfg: &SystemConfig) -> Result<ValidationReport> {
    let mut checks = Vec::new();
    checks.push(check("p_swap".into(), p_swap(cfg)?, stats.p_swap));
    checks.push(check(
        "mean_response".into(),
        mean_response(cfg)?,
        stats.mean_response,
    ));

    let curves: [(&CcdfEstimate, crate::fcfs::CcdfCurve); 5] = [
        (
            &stats.workload_ccdf,
            workload_ccdf(cfg, &stats.workload_ccdf.t)?,
        ),
        (&stats.wait1_ccdf, w1_ccdf(cfg, &stats.wait1_ccdf.t)?),
        (&stats.wait2_ccdf, w2_ccdf(cfg, &stats.wait2_ccdf.t)?),
        (
            &stats.response1_ccdf,
            r1_ccdf(cfg, &stats.response1_ccdf.t)?,
        ),
        (
            &stats.response2_ccdf,
            r2_ccdf(cfg, &stats.response2_ccdf.t)?,
        ),
    ];
    for (sim, exact) in curves {
        for j in 0..exact.t.len() {
            checks.push(check(
                format!("{:?}[t={:.6}]", sim.kind, exact.t[j]),
                exact.value[j],
                sim.value[j],
            ));
        }
    }
    let within = checks.iter().filter(|c| c.within).count();
    let required = (checks.len() as f64 * 0.95).ceil() as usize;
    Ok(ValidationReport {
        passed: within >= required,
        checks,
        within,
        required,
    })
}

/// Simulate `cfg` and hold the run against its own analytical model.
pub fn validate(cfg: &SystemConfig, opts: &SimOptions) -> Result<ValidationReport> {
    let mut opts = opts.clone();
    if opts.grid.is_none() {
        // The response curves start at 1 for small t; sample where the
        // tails actually discriminate.
        opts.grid = Some(default_sim_grid(cfg)?);
    }
    let stats = simulate_with(cfg, &opts)?;
    compare(&stats, cfg)
}
