//! Asymptotic tail improvement ratio: the t → ∞ limit of the TIR curve,
//! its first difference in K, the optimal swap depth, positivity criteria,
//! and a heavy-traffic approximation of the optimum.
//!
//! Everything here is scalar arithmetic on the three Laplace transforms
//! evaluated at −θ_Z, so any swap depth is cheap; none of the block-matrix
//! machinery of the distribution curves is needed.

use crate::fcfs::spectral;
use crate::phasetype::{SwapDepth, SystemConfig};
use crate::{Error, Result};

/// Class and mixture transforms at −θ_Z plus the two derived weights that
/// the tail algebra runs on.
struct TailWeights {
    theta_z: f64,
    st1: f64,
    st2: f64,
    st: f64,
    /// w₁ = p·S̃₁/S̃: asymptotic share of the FCFS response tail carried by
    /// type-1 jobs.
    w1: f64,
    /// w = (1−p)/S̃ ∈ (0, 1): geometric factor of the pass depth.
    w: f64,
}

fn weights(cfg: &SystemConfig) -> Result<TailWeights> {
    let theta_z = spectral(cfg)?.theta_z;
    let st1 = cfg.type1().laplace(-theta_z)?;
    let st2 = cfg.type2().laplace(-theta_z)?;
    let st = cfg.p() * st1 + (1.0 - cfg.p()) * st2;
    Ok(TailWeights {
        theta_z,
        st1,
        st2,
        st,
        w1: cfg.p() * st1 / st,
        w: (1.0 - cfg.p()) / st,
    })
}

/// ATIR(K) = 1 − lim_{t→∞} P[R_Nudge > t]/P[R_FCFS > t]
///         = w₁(S̃₂−1)·w(1−w^K)/(1−w) − (1−w₁)(S̃₁−1)(1−(1−p)^K).
///
/// Positive means the Nudge-K response tail is asymptotically lighter than
/// the FCFS tail. Degenerate mixes (p ∈ {0, 1}) and K = 0 change nothing
/// and return exactly 0.
pub fn atir(cfg: &SystemConfig, k: SwapDepth) -> Result<f64> {
    if k.is_fcfs() || cfg.p() <= 0.0 || cfg.p() >= 1.0 {
        return Ok(0.0);
    }
    let tw = weights(cfg)?;
    let wk = k.pow_q(tw.w);
    let qk = k.pow_q(1.0 - cfg.p());
    Ok(tw.w1 * (tw.st2 - 1.0) * tw.w * (1.0 - wk) / (1.0 - tw.w)
        - (1.0 - tw.w1) * (tw.st1 - 1.0) * (1.0 - qk))
}

/// ATIR(K+1) − ATIR(K) = w₁(S̃₂−1)w^{K+1} − p(1−w₁)(S̃₁−1)(1−p)^K.
/// The difference changes sign exactly once, which is what makes the
/// optimum a floor expression.
pub fn delta_atir(cfg: &SystemConfig, k: u32) -> Result<f64> {
    if cfg.p() <= 0.0 || cfg.p() >= 1.0 {
        return Ok(0.0);
    }
    let tw = weights(cfg)?;
    Ok(tw.w1 * (tw.st2 - 1.0) * tw.w.powi(k as i32 + 1)
        - cfg.p() * (1.0 - tw.w1) * (tw.st1 - 1.0) * (1.0 - cfg.p()).powi(k as i32))
}

/// Floor of x, stepping down once when x sits on an integer within
/// floating-point slack: there the difference ATIR(x) − ATIR(x−1) is an
/// exact tie and the smaller depth is preferred.
fn guarded_floor(x: f64) -> u32 {
    if x <= 0.0 {
        return 0;
    }
    let n = x.round();
    if (x - n).abs() <= 1e-12 * x.abs().max(1.0) {
        return (n as u32).saturating_sub(1);
    }
    x.floor() as u32
}

/// Swap depth maximizing ATIR:
/// K_opt = ⌊ log(S̃₁(S̃₂−1)/(S̃₂(S̃₁−1))) / log S̃ ⌋, clamped at 0, ties
/// resolved toward the smaller depth.
pub fn k_opt(cfg: &SystemConfig) -> Result<u32> {
    if cfg.p() <= 0.0 || cfg.p() >= 1.0 {
        return Ok(0);
    }
    let tw = weights(cfg)?;
    let ratio = tw.st1 * (tw.st2 - 1.0) / (tw.st2 * (tw.st1 - 1.0));
    Ok(guarded_floor(ratio.ln() / tw.st.ln()))
}

/// Heavy-traffic approximation of the optimal depth:
/// K ≈ ⌊ ln(E[X₂]/E[X₁]) · E[X²] / (2(1−λ)) ⌋, clamped at 0. Sharp as
/// λ → 1 because θ_Z collapses to 2(1−λ)/E[X²] and every transform
/// linearizes.
pub fn heavy_traffic_k(cfg: &SystemConfig) -> Result<u32> {
    if cfg.p() <= 0.0 || cfg.p() >= 1.0 {
        return Ok(0);
    }
    let x = (cfg.type2().mean() / cfg.type1().mean()).ln() * cfg.service_second_moment()
        / (2.0 * (1.0 - cfg.lambda()));
    if !x.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "heavy-traffic depth is not finite (got {x})"
        )));
    }
    Ok(if x <= 0.0 { 0 } else { x.floor() as u32 })
}

/// The two closed positivity criteria on
/// lhs = (1 − 1/S̃₂)/(1 − 1/S̃₁), which compares the class tails after
/// normalizing by their transforms.
pub struct Positivity {
    pub lhs: f64,
    /// Threshold for ATIR(1) > 0: 1 + θ_Z/λ.
    pub rhs_k1: f64,
    /// Threshold for ATIR(K) > 0 at every K ≥ 1: 1 + θ_Z/(λp); the
    /// K-dependent factor (1−(1−p)^K)/(1−w^K) increases to 1, so this is
    /// the binding case.
    pub rhs_all_k: f64,
    pub holds_k1: bool,
    pub holds_all_k: bool,
}

pub fn positivity_conditions(cfg: &SystemConfig) -> Result<Positivity> {
    if cfg.p() <= 0.0 || cfg.p() >= 1.0 {
        return Err(Error::InvalidParameter(
            "positivity criteria need both job types present (0 < p < 1)".into(),
        ));
    }
    let tw = weights(cfg)?;
    let lhs = (1.0 - 1.0 / tw.st2) / (1.0 - 1.0 / tw.st1);
    let rhs_k1 = 1.0 + tw.theta_z / cfg.lambda();
    let rhs_all_k = 1.0 + tw.theta_z / (cfg.lambda() * cfg.p());
    Ok(Positivity {
        lhs,
        rhs_k1,
        rhs_all_k,
        holds_k1: lhs > rhs_k1,
        holds_all_k: lhs > rhs_all_k,
    })
}

/// Whether ATIR(K) > 0, decided by the closed criterion
/// lhs > (1 + θ_Z/(λp))·(1−(1−p)^K)/(1−w^K) rather than by evaluating ATIR.
pub fn positivity_at(cfg: &SystemConfig, k: SwapDepth) -> Result<bool> {
    if k.is_fcfs() || cfg.p() <= 0.0 || cfg.p() >= 1.0 {
        return Ok(false);
    }
    let tw = weights(cfg)?;
    let lhs = (1.0 - 1.0 / tw.st2) / (1.0 - 1.0 / tw.st1);
    let qk = k.pow_q(1.0 - cfg.p());
    let wk = k.pow_q(tw.w);
    let rhs = (1.0 + tw.theta_z / (cfg.lambda() * cfg.p())) * (1.0 - qk) / (1.0 - wk);
    Ok(lhs > rhs)
}

/// Summary of the asymptotic analysis at one system configuration.
pub struct AtirReport {
    pub theta_z: f64,
    pub k_opt: u32,
    pub atir_k1: f64,
    pub atir_k_opt: f64,
    pub atir_uncapped: f64,
    pub heavy_traffic_k: u32,
}

pub fn report(cfg: &SystemConfig) -> Result<AtirReport> {
    let theta_z = spectral(cfg)?.theta_z;
    let k = k_opt(cfg)?;
    Ok(AtirReport {
        theta_z,
        k_opt: k,
        atir_k1: atir(cfg, SwapDepth::Finite(1))?,
        atir_k_opt: atir(cfg, SwapDepth::Finite(k))?,
        atir_uncapped: atir(cfg, SwapDepth::Infinite)?,
        heavy_traffic_k: heavy_traffic_k(cfg)?,
    })
}
