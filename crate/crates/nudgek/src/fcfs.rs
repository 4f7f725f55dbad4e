//! FCFS M/PH/1 baseline: exact stationary workload and response-time tails,
//! their dominant decay data, and means.
//!
//! With unconditional service PH(α, S) and arrival rate λ, the stationary
//! workload has the matrix-exponential form
//!   P[Z > t] = λ α e^{Tt} (−S)^{-1} 1 = λ β e^{Tt} (−T)^{-1} 1,
//! where T = S + λ·1·α and β = (1−λ)α. Both forms are evaluated and must
//! agree to 1e-10; they are linked by (−T)^{-1}1 = (−S)^{-1}1/(1−λ), a
//! Sherman-Morrison identity. The FCFS response time is the workload at
//! arrival plus the job's own service, expressed through the block matrix
//! U = [[T, 1α], [0, S]].

use nalgebra::{DMatrix, DVector};

use crate::numerics::{dominant_decay, mat_exp};
use crate::phasetype::SystemConfig;
use crate::{Error, Result};

/// Agreement required between the two workload forms.
const DUAL_FORM_TOL: f64 = 1e-10;

/// Agreement required for the transform identity S̃(−θ_Z) = (λ+θ_Z)/λ and
/// the two mean-response forms.
const IDENTITY_TOL: f64 = 1e-10;

/// Which distribution a curve tabulates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CurveKind {
    Workload,
    FcfsResponse,
    NudgeWait1,
    NudgeWait2,
    NudgeResponse1,
    NudgeResponse2,
    NudgeResponse,
}

/// A complementary CDF tabulated on a time grid.
#[derive(Debug, Clone)]
pub struct CcdfCurve {
    pub kind: CurveKind,
    pub t: Vec<f64>,
    pub value: Vec<f64>,
}

impl CcdfCurve {
    pub(crate) fn assemble(kind: CurveKind, grid: &[f64], value: Vec<f64>) -> Result<Self> {
        for (t, v) in grid.iter().zip(&value) {
            if !v.is_finite() {
                return Err(Error::Inconsistent(format!(
                    "{kind:?} ccdf is non-finite at t = {t}"
                )));
            }
            if *v < -1e-9 || *v > 1.0 + 1e-9 {
                return Err(Error::Inconsistent(format!(
                    "{kind:?} ccdf out of [0,1] at t = {t}: {v}"
                )));
            }
        }
        let value = value.into_iter().map(|v| v.clamp(0.0, 1.0)).collect();
        Ok(CcdfCurve {
            kind,
            t: grid.to_vec(),
            value,
        })
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }
}

/// Validate a time grid: finite, nonnegative, strictly increasing.
pub(crate) fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::InvalidParameter("empty time grid".into()));
    }
    for pair in grid.windows(2) {
        if pair[1] <= pair[0] {
            return Err(Error::InvalidParameter(format!(
                "time grid is not strictly increasing at {} -> {}",
                pair[0], pair[1]
            )));
        }
    }
    if grid.iter().any(|t| !t.is_finite() || *t < 0.0) {
        return Err(Error::InvalidParameter(
            "time grid has negative or non-finite points".into(),
        ));
    }
    Ok(())
}

/// Default evaluation grid: t = 0 followed by 200 geometrically spaced points
/// from 0.01 out to max(20, 12/θ_Z), far enough that the tail has decayed to
/// roughly e^{-12}.
pub fn default_grid(theta_z: f64) -> Vec<f64> {
    let t_max = (12.0 / theta_z).max(20.0);
    let t_min = 0.01f64;
    let n = 200;
    let step = (t_max / t_min).ln() / (n - 1) as f64;
    let mut grid = Vec::with_capacity(n + 1);
    grid.push(0.0);
    for i in 0..n {
        grid.push(t_min * (step * i as f64).exp());
    }
    grid
}

/// Shared workload-analysis pieces: the mixture representation, the
/// workload-phase generator T = S + λ1α, and the resolvent vectors both
/// ccdf forms need.
pub(crate) struct WorkloadParts {
    pub lambda: f64,
    pub alpha: DVector<f64>,
    pub s: DMatrix<f64>,
    /// T = S + λ·1·α.
    pub t: DMatrix<f64>,
    /// β = (1−λ)·α.
    pub beta: DVector<f64>,
    /// w = (−T)^{-1}·1.
    pub w: DVector<f64>,
    /// z = (−S)^{-1}·1.
    pub z: DVector<f64>,
}

impl WorkloadParts {
    pub fn new(cfg: &SystemConfig) -> Result<Self> {
        let mixture = cfg.mixture();
        let lambda = cfg.lambda();
        let n = mixture.order();
        let alpha = mixture.alpha().clone();
        let s = mixture.sub_generator().clone();
        let ones = DVector::from_element(n, 1.0);
        let t = &s + (&ones * alpha.transpose()) * lambda;
        let beta = &alpha * (1.0 - lambda);
        let w = (-&t)
            .lu()
            .solve(&ones)
            .ok_or_else(|| Error::Singular("workload generator T".into()))?;
        let z = (-&s)
            .lu()
            .solve(&ones)
            .ok_or_else(|| Error::Singular("service sub-generator S".into()))?;
        Ok(WorkloadParts {
            lambda,
            alpha,
            s,
            t,
            beta,
            w,
            z,
        })
    }

    /// Both closed forms of P[Z > t]: (λ α e^{Tt} (−S)^{-1}1, λ β e^{Tt} (−T)^{-1}1).
    pub fn ccdf_forms(&self, t: f64) -> Result<(f64, f64)> {
        let e = mat_exp(&(&self.t * t))?;
        let form_alpha = self.lambda * self.alpha.dot(&(&e * &self.z));
        let form_beta = self.lambda * self.beta.dot(&(&e * &self.w));
        Ok((form_alpha, form_beta))
    }

    /// P[Z > t], with the two forms cross-checked.
    pub fn ccdf(&self, t: f64) -> Result<f64> {
        let (a, b) = self.ccdf_forms(t)?;
        if (a - b).abs() > DUAL_FORM_TOL {
            return Err(Error::Inconsistent(format!(
                "workload ccdf forms disagree at t = {t}: {a} vs {b}"
            )));
        }
        Ok(b)
    }
}

/// Stationary workload tail P[Z > t] on the given grid.
pub fn workload_ccdf(cfg: &SystemConfig, grid: &[f64]) -> Result<CcdfCurve> {
    check_grid(grid)?;
    let parts = WorkloadParts::new(cfg)?;
    let mut value = Vec::with_capacity(grid.len());
    for &t in grid {
        value.push(parts.ccdf(t)?);
    }
    CcdfCurve::assemble(CurveKind::Workload, grid, value)
}

/// Both closed forms of the workload tail at one point, for external
/// cross-checking.
pub fn workload_forms(cfg: &SystemConfig, t: f64) -> Result<(f64, f64)> {
    WorkloadParts::new(cfg)?.ccdf_forms(t)
}

/// Dominant decay data of the workload distribution: P[Z > t] ~ c_Z e^{−θ_Z t}.
pub struct WorkloadSpectral {
    /// Workload decay rate θ_Z; P[Z>t], and every Nudge-K waiting/response
    /// tail, decays at this rate.
    pub theta_z: f64,
    /// Workload tail prefactor c_Z.
    pub c_z: f64,
    /// Right dominant eigenvector of T (nonnegative, unit norm).
    pub u: DVector<f64>,
    /// Left dominant eigenvector of T (nonnegative, v·u = 1).
    pub v: DVector<f64>,
}

/// Extract θ_Z and c_Z from the workload generator T. Verifies
/// 0 < θ_Z < min of the per-type decay rates, and the transform identity
/// S̃(−θ_Z) = (λ+θ_Z)/λ which pins −θ_Z as the relevant zero of
/// λ(S̃(s)−1) = s.
pub fn spectral(cfg: &SystemConfig) -> Result<WorkloadSpectral> {
    let parts = WorkloadParts::new(cfg)?;
    let info = dominant_decay(&parts.t)?;
    let theta_z = info.theta;
    if theta_z <= 0.0 {
        return Err(Error::Unstable(format!(
            "workload decay rate must be positive, got {theta_z}"
        )));
    }
    let mixture = cfg.mixture();
    let service_decay = mixture.decay_rate();
    if theta_z > service_decay * (1.0 + 1e-9) {
        return Err(Error::Inconsistent(format!(
            "workload decay {theta_z} exceeds service decay {service_decay}"
        )));
    }
    let stilde = mixture.laplace(-theta_z)?;
    let expect = (cfg.lambda() + theta_z) / cfg.lambda();
    if (stilde - expect).abs() > IDENTITY_TOL * expect.abs().max(1.0) {
        return Err(Error::Inconsistent(format!(
            "transform identity failed: S(-theta) = {stilde}, (lambda+theta)/lambda = {expect}"
        )));
    }
    let c_z = cfg.lambda() * parts.beta.dot(&info.u) * info.v.dot(&parts.w);
    Ok(WorkloadSpectral {
        theta_z,
        c_z,
        u: info.u,
        v: info.v,
    })
}

/// FCFS response-time tail P[R > t] on the given grid: workload at arrival
/// plus the job's own service, via U = [[T, 1α], [0, S]].
pub fn response_ccdf(cfg: &SystemConfig, grid: &[f64]) -> Result<CcdfCurve> {
    check_grid(grid)?;
    let parts = WorkloadParts::new(cfg)?;
    let n = parts.alpha.len();
    let mut u = DMatrix::<f64>::zeros(2 * n, 2 * n);
    u.view_mut((0, 0), (n, n)).copy_from(&parts.t);
    u.view_mut((0, n), (n, n))
        .copy_from(&(DVector::from_element(n, 1.0) * parts.alpha.transpose()));
    u.view_mut((n, n), (n, n)).copy_from(&parts.s);

    let ones = DVector::from_element(n, 1.0);
    let mut value = Vec::with_capacity(grid.len());
    for &t in grid {
        let e = mat_exp(&(&u * t))?;
        let e11 = e.view((0, 0), (n, n));
        let e12 = e.view((0, n), (n, n));
        let e22 = e.view((n, n), (n, n));
        let idle = (1.0 - parts.lambda) * parts.alpha.dot(&(e22 * &ones));
        let busy =
            parts.lambda * (parts.beta.dot(&(e11 * &parts.w)) + parts.beta.dot(&(e12 * &ones)));
        value.push(idle + busy);
    }
    CcdfCurve::assemble(CurveKind::FcfsResponse, grid, value)
}

/// FCFS response-time tail conditional on the job's class: workload at
/// arrival plus a service drawn from the given distribution.
pub(crate) fn response_ccdf_typed(
    cfg: &SystemConfig,
    service: &crate::phasetype::PhaseType,
    kind: CurveKind,
    grid: &[f64],
) -> Result<CcdfCurve> {
    check_grid(grid)?;
    let parts = WorkloadParts::new(cfg)?;
    let n = parts.alpha.len();
    let ns = service.order();
    let mut u = DMatrix::<f64>::zeros(n + ns, n + ns);
    u.view_mut((0, 0), (n, n)).copy_from(&parts.t);
    u.view_mut((0, n), (n, ns))
        .copy_from(&(DVector::from_element(n, 1.0) * service.alpha().transpose()));
    u.view_mut((n, n), (ns, ns))
        .copy_from(service.sub_generator());

    let ones = DVector::from_element(ns, 1.0);
    let mut value = Vec::with_capacity(grid.len());
    for &t in grid {
        let e = mat_exp(&(&u * t))?;
        let e11 = e.view((0, 0), (n, n));
        let e12 = e.view((0, n), (n, ns));
        let idle_tail = service.ccdf(t)?;
        let idle = (1.0 - parts.lambda) * idle_tail;
        let busy =
            parts.lambda * (parts.beta.dot(&(e11 * &parts.w)) + parts.beta.dot(&(e12 * &ones)));
        value.push(idle + busy);
    }
    CcdfCurve::assemble(kind, grid, value)
}

/// Stationary means under FCFS.
pub struct Means {
    /// E[Z] = λ E[X²] / (2(1−λ)).
    pub workload: f64,
    /// E[R] = 1 + E[Z].
    pub response: f64,
}

/// Mean workload and mean response time, with the matrix form
/// E[R] = 1 + λ β T^{-2} 1 checked against the moment form 1 + λE[X²]/(2(1−λ)).
pub fn means(cfg: &SystemConfig) -> Result<Means> {
    let parts = WorkloadParts::new(cfg)?;
    let lambda = cfg.lambda();
    let workload = lambda * cfg.service_second_moment() / (2.0 * (1.0 - lambda));
    let response = 1.0 + workload;

    let lu = (-&parts.t).lu();
    let y1 = lu
        .solve(&DVector::from_element(parts.alpha.len(), 1.0))
        .ok_or_else(|| Error::Singular("workload generator T".into()))?;
    let y2 = lu
        .solve(&y1)
        .ok_or_else(|| Error::Singular("workload generator T".into()))?;
    let matrix_form = 1.0 + lambda * parts.beta.dot(&y2);
    if (matrix_form - response).abs() > IDENTITY_TOL * response.abs().max(1.0) {
        return Err(Error::Inconsistent(format!(
            "mean response forms disagree: {matrix_form} vs {response}"
        )));
    }
    Ok(Means { workload, response })
}
