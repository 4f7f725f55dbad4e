//! Per-type waiting and response-time analysis under Nudge-K: swap
//! probabilities, exact tail curves for both classes, the queue-length laws
//! behind them, tail prefactors, and the tail improvement ratio curve.
//!
//! The type-2 side follows the tagged-job construction: a tagged type-2
//! arrival is swapped at most once, and whether it is swapped is decided by a
//! pass-counting chain M run jointly with the workload phase process, giving
//! W₂ = Z + swap·X₁ in matrix-exponential form. The type-1 side runs on the
//! matrix-geometric queue-length law of the FCFS queue, reduced by the jobs a
//! type-1 arrival passes; its wait is expressed through the n²-dimensional
//! generator G = Sᵀ⊗I + (s*α)ᵀ⊗R.

use nalgebra::{DMatrix, DVector};

use crate::fcfs::{
    check_grid, response_ccdf, response_ccdf_typed, spectral, CcdfCurve, CurveKind, WorkloadParts,
};
use crate::numerics::{kron, kron_sum, kron_vec, mat_exp, mat_pow, van_loan_integral};
use crate::phasetype::{SwapDepth, SystemConfig};
use crate::{Error, Result};

/// Largest finite swap depth accepted when building distribution curves; the
/// block matrices grow linearly in K, while tail constants and ATIR stay
/// O(1) and accept any K.
pub const MAX_CURVE_SWAP_DEPTH: u32 = 500;

/// Agreement required of internal probability-mass identities.
const MASS_TOL: f64 = 1e-10;

/// Pass-counting chain of a tagged type-2 arrival. While the tagged job
/// waits, each type-2 arrival behind it (rate λ(1−p)) shields it one step
/// further from the back; the first type-1 arrival (rate λp) passes it while
/// fewer than K jobs stand behind. One absorbing state records "swapped";
/// reaching K jobs behind leaks out of the chain (immune, never swapped).
pub enum SwapMatrix {
    /// K = 0: no swap can occur.
    Never,
    /// K ≥ 1: transient states plus one absorbing swap state (index last).
    Chain { m: DMatrix<f64>, absorb: usize },
}

/// Build the chain for the given depth. Finite K yields a (K+1)×(K+1)
/// matrix; K = ∞ collapses to two states because the shield count no longer
/// matters.
pub fn swap_matrix(lambda: f64, p: f64, k: SwapDepth) -> SwapMatrix {
    match k {
        SwapDepth::Finite(0) => SwapMatrix::Never,
        SwapDepth::Finite(k) => {
            let k = k as usize;
            let mut m = DMatrix::<f64>::zeros(k + 1, k + 1);
            for i in 0..k {
                m[(i, i)] = -lambda;
                if i + 1 < k {
                    m[(i, i + 1)] = lambda * (1.0 - p);
                }
                m[(i, k)] = lambda * p;
            }
            SwapMatrix::Chain { m, absorb: k }
        }
        SwapDepth::Infinite => {
            let m = DMatrix::from_row_slice(2, 2, &[-lambda * p, lambda * p, 0.0, 0.0]);
            SwapMatrix::Chain { m, absorb: 1 }
        }
    }
}

/// P[tagged type-2 job is swapped | its workload at arrival is s]: the
/// absorption probability e₁ᵀ e^{Ms} e_absorb.
pub fn swap_prob_given_workload(cfg: &SystemConfig, s: f64) -> Result<f64> {
    if !(s.is_finite() && s >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "workload must be >= 0, got {s}"
        )));
    }
    match swap_matrix(cfg.lambda(), cfg.p(), cfg.k()) {
        SwapMatrix::Never => Ok(0.0),
        SwapMatrix::Chain { m, absorb } => {
            let e = mat_exp(&(m * s))?;
            Ok(e[(0, absorb)].clamp(0.0, 1.0))
        }
    }
}

/// Unconditional swap probability of a type-2 job,
/// p_swap = −λ (β⊗e₁ᵀ)(T ⊕ M)^{-1}(1 ⊗ e_absorb); for K = ∞ it collapses to
/// the closed form λ(1 − β(λpI − T)^{-1}1).
pub fn p_swap(cfg: &SystemConfig) -> Result<f64> {
    let parts = WorkloadParts::new(cfg)?;
    p_swap_with(cfg, &parts)
}

fn p_swap_with(cfg: &SystemConfig, parts: &WorkloadParts) -> Result<f64> {
    if cfg.k() == SwapDepth::Infinite {
        // Uncapped depth: a tagged type-2 job is swapped unless no type-1
        // arrival lands during its workload, so the probability closes to
        // λ(1 − β(λpI − T)^{-1}1).
        let n = parts.alpha.len();
        let a = DMatrix::<f64>::identity(n, n) * (cfg.lambda() * cfg.p()) - &parts.t;
        let y = a
            .lu()
            .solve(&DVector::from_element(n, 1.0))
            .ok_or_else(|| Error::Singular("lambda·p·I − T".into()))?;
        return Ok(cfg.lambda() * (1.0 - parts.beta.dot(&y)));
    }
    match swap_matrix(cfg.lambda(), cfg.p(), cfg.k()) {
        SwapMatrix::Never => Ok(0.0),
        SwapMatrix::Chain { m, absorb } => {
            let dim = m.nrows();
            let tm = kron_sum(&parts.t, &m)?;
            let mut e_absorb = DVector::<f64>::zeros(dim);
            e_absorb[absorb] = 1.0;
            let col = kron_vec(&DVector::from_element(parts.alpha.len(), 1.0), &e_absorb);
            let x = tm
                .lu()
                .solve(&col)
                .ok_or_else(|| Error::Singular("T ⊕ M".into()))?;
            let mut e1 = DVector::<f64>::zeros(dim);
            e1[0] = 1.0;
            let row = kron_vec(&parts.beta, &e1);
            Ok(-cfg.lambda() * row.dot(&x))
        }
    }
}

/// Mean response time under Nudge-K: each swap trades one type-2 service
/// ahead of a type-1 for one type-1 service ahead of a type-2, so
/// E[R] = E[R_FCFS] + (1−p)·p_swap·(E[X₁] − E[X₂]).
pub fn mean_response(cfg: &SystemConfig) -> Result<f64> {
    let fcfs_mean = crate::fcfs::means(cfg)?.response;
    let ps = p_swap(cfg)?;
    Ok(fcfs_mean + (1.0 - cfg.p()) * ps * (cfg.type1().mean() - cfg.type2().mean()))
}

fn check_curve_depth(k: SwapDepth) -> Result<()> {
    if let SwapDepth::Finite(k) = k {
        if k > MAX_CURVE_SWAP_DEPTH {
            return Err(Error::SwapDepthTooLarge(k));
        }
    }
    Ok(())
}

fn require_type1_present(cfg: &SystemConfig) -> Result<()> {
    if cfg.p() <= 0.0 {
        return Err(Error::InvalidParameter(
            "type-1 distributions need p > 0 (no type-1 jobs exist)".into(),
        ));
    }
    Ok(())
}

fn require_type2_present(cfg: &SystemConfig) -> Result<()> {
    if cfg.p() >= 1.0 {
        return Err(Error::InvalidParameter(
            "type-2 distributions need p < 1 (no type-2 jobs exist)".into(),
        ));
    }
    Ok(())
}

/// Waiting-time tail of type-2 jobs: W₂ = Z + swap·X₁, evaluated as
/// P[Z > t] plus a correction integral over the joint workload/pass chain.
pub fn w2_ccdf(cfg: &SystemConfig, grid: &[f64]) -> Result<CcdfCurve> {
    check_grid(grid)?;
    require_type2_present(cfg)?;
    check_curve_depth(cfg.k())?;
    let parts = WorkloadParts::new(cfg)?;
    if cfg.k().is_fcfs() {
        let mut value = Vec::with_capacity(grid.len());
        for &t in grid {
            value.push(parts.ccdf(t)?);
        }
        return CcdfCurve::assemble(CurveKind::NudgeWait2, grid, value);
    }
    let (m, absorb) = match swap_matrix(cfg.lambda(), cfg.p(), cfg.k()) {
        SwapMatrix::Chain { m, absorb } => (m, absorb),
        SwapMatrix::Never => unreachable!("K = 0 handled above"),
    };
    let n = parts.alpha.len();
    let n1 = cfg.type1().order();
    let tm = kron_sum(&parts.t, &m)?;
    let mut e_absorb = DVector::<f64>::zeros(m.nrows());
    e_absorb[absorb] = 1.0;
    let exit_col = kron_vec(&DVector::from_element(n, 1.0), &e_absorb);
    let b12 = &exit_col * cfg.type1().alpha().transpose();
    let s1 = cfg.type1().sub_generator();

    let mut e1 = DVector::<f64>::zeros(m.nrows());
    e1[0] = 1.0;
    let row = kron_vec(&parts.beta, &e1);
    let ones1 = DVector::from_element(n1, 1.0);

    let mut value = Vec::with_capacity(grid.len());
    for &t in grid {
        let base = parts.ccdf(t)?;
        let vl = van_loan_integral(&tm, &b12, s1, t)?;
        value.push(base + cfg.lambda() * row.dot(&(vl * &ones1)));
    }
    CcdfCurve::assemble(CurveKind::NudgeWait2, grid, value)
}

/// Response-time tail of type-2 jobs: R₂ = Z + X₂ + swap·X₁. The first two
/// summands form the class-conditional FCFS response; the swap correction
/// replaces X₂ by X₁+X₂ on the swap event.
pub fn r2_ccdf(cfg: &SystemConfig, grid: &[f64]) -> Result<CcdfCurve> {
    check_grid(grid)?;
    require_type2_present(cfg)?;
    check_curve_depth(cfg.k())?;
    if cfg.k().is_fcfs() {
        return response_ccdf_typed(cfg, cfg.type2(), CurveKind::NudgeResponse2, grid);
    }
    let parts = WorkloadParts::new(cfg)?;
    let fcfs_part = response_ccdf_typed(cfg, cfg.type2(), CurveKind::NudgeResponse2, grid)?;
    let (m, absorb) = match swap_matrix(cfg.lambda(), cfg.p(), cfg.k()) {
        SwapMatrix::Chain { m, absorb } => (m, absorb),
        SwapMatrix::Never => unreachable!("K = 0 handled above"),
    };
    let n = parts.alpha.len();
    let n1 = cfg.type1().order();
    let n2 = cfg.type2().order();
    let nm = n * m.nrows();
    let tm = kron_sum(&parts.t, &m)?;
    let mut e_absorb = DVector::<f64>::zeros(m.nrows());
    e_absorb[absorb] = 1.0;
    let exit_col = kron_vec(&DVector::from_element(n, 1.0), &e_absorb);

    // Upper block-triangular generator of the correction term: the joint
    // workload/pass chain feeds an X₁+X₂ convolution chain on the swap event
    // and subtracts the plain X₂ continuation.
    let dim = nm + n1 + n2;
    let mut u = DMatrix::<f64>::zeros(dim, dim);
    u.view_mut((0, 0), (nm, nm)).copy_from(&tm);
    u.view_mut((0, nm), (nm, n1))
        .copy_from(&(&exit_col * cfg.type1().alpha().transpose()));
    u.view_mut((0, nm + n1), (nm, n2))
        .copy_from(&(-&exit_col * cfg.type2().alpha().transpose()));
    u.view_mut((nm, nm), (n1, n1))
        .copy_from(cfg.type1().sub_generator());
    u.view_mut((nm, nm + n1), (n1, n2))
        .copy_from(&(cfg.type1().exit_rates() * cfg.type2().alpha().transpose()));
    u.view_mut((nm + n1, nm + n1), (n2, n2))
        .copy_from(cfg.type2().sub_generator());

    let mut row = DVector::<f64>::zeros(dim);
    let mut e1 = DVector::<f64>::zeros(m.nrows());
    e1[0] = 1.0;
    let head = kron_vec(&parts.beta, &e1);
    for i in 0..nm {
        row[i] = head[i];
    }
    let mut col = DVector::<f64>::zeros(dim);
    for i in nm..dim {
        col[i] = 1.0;
    }

    let mut value = Vec::with_capacity(grid.len());
    for (i, &t) in grid.iter().enumerate() {
        let e = mat_exp(&(&u * t))?;
        value.push(fcfs_part.value[i] + cfg.lambda() * row.dot(&(&e * &col)));
    }
    CcdfCurve::assemble(CurveKind::NudgeResponse2, grid, value)
}

/// Matrix-geometric queue-length law of the FCFS M/PH/1 queue:
/// P[Q = q, phase] = π₁ R^{q−1} for q ≥ 1 with π₁ = (1−λ)αR and
/// R = −λ(S − λI + λ1α)^{-1}.
pub struct QlenGeometric {
    pub r: DMatrix<f64>,
    /// Row vector π₁, stored as a column.
    pub pi1: DVector<f64>,
}

pub fn fcfs_qlen_geometric(cfg: &SystemConfig) -> Result<QlenGeometric> {
    let parts = WorkloadParts::new(cfg)?;
    let n = parts.alpha.len();
    let shifted = &parts.t - DMatrix::<f64>::identity(n, n) * cfg.lambda();
    let r = shifted
        .lu()
        .solve(&(DMatrix::<f64>::identity(n, n) * (-cfg.lambda())))
        .ok_or_else(|| Error::Singular("T − λI".into()))?;
    let pi1 = r.tr_mul(&parts.alpha) * (1.0 - cfg.lambda());
    Ok(QlenGeometric { r, pi1 })
}

/// Queue-length law seen by a tagged type-1 arrival after nudging, reduced
/// to three boundary row vectors; everything the wait distribution needs.
pub struct ReducedQueueLaw {
    pub r: DMatrix<f64>,
    pub pi1: DVector<f64>,
    /// Weight of levels the arrival ends behind without a leftover partial
    /// pass window.
    pub pi0_1: DVector<f64>,
    /// Weight of the depth-exhausted boundary (empty for K = ∞).
    pub pi1_1: DVector<f64>,
    /// Weight of the type-conditioned boundary created by stopping at a
    /// type-1 job.
    pub pi0_2: DVector<f64>,
}

/// Reduce the FCFS geometric law by the passes of a type-1 arrival under
/// depth K. The three vectors satisfy the mass identity
/// π₀⁽¹⁾1 + (π₁⁽¹⁾ + π₀⁽²⁾)(I−R)^{-1}1 = λ, checked here.
pub fn reduced_qlen(cfg: &SystemConfig) -> Result<ReducedQueueLaw> {
    let QlenGeometric { r, pi1 } = fcfs_qlen_geometric(cfg)?;
    let n = r.nrows();
    let id = DMatrix::<f64>::identity(n, n);
    let q = 1.0 - cfg.p();

    let i_qr_t = (&id - &r * q).transpose();
    let lu_qr = i_qr_t.lu();

    let (pi0_1, pi1_1, pi0_2) = match cfg.k() {
        SwapDepth::Finite(k) => {
            let rk = mat_pow(&r, k);
            let rk1 = &rk * &r;
            let qk = q.powi(k as i32);
            let a = (&id - &rk1 * (qk * q)).tr_mul(&pi1);
            let pi0_1 = lu_qr
                .solve(&a)
                .ok_or_else(|| Error::Singular("I − (1−p)R".into()))?;
            let pi1_1 = rk1.tr_mul(&pi1) * qk;
            let b = (&r * (&id - &rk * qk)).tr_mul(&pi1);
            let pi0_2 = lu_qr
                .solve(&b)
                .ok_or_else(|| Error::Singular("I − (1−p)R".into()))?
                * cfg.p();
            (pi0_1, pi1_1, pi0_2)
        }
        SwapDepth::Infinite => {
            let pi0_1 = lu_qr
                .solve(&pi1)
                .ok_or_else(|| Error::Singular("I − (1−p)R".into()))?;
            let pi1_1 = DVector::<f64>::zeros(n);
            let b = r.tr_mul(&pi1);
            let pi0_2 = lu_qr
                .solve(&b)
                .ok_or_else(|| Error::Singular("I − (1−p)R".into()))?
                * cfg.p();
            (pi0_1, pi1_1, pi0_2)
        }
    };

    // Total mass must be the probability of arriving to a busy system.
    let i_r_t = (&id - &r).transpose();
    let lu_r = i_r_t.lu();
    let ones = DVector::from_element(n, 1.0);
    let geo_sum = |v: &DVector<f64>| -> Result<f64> {
        let x = lu_r
            .solve(v)
            .ok_or_else(|| Error::Singular("I − R".into()))?;
        Ok(x.dot(&ones))
    };
    let mass = pi0_1.dot(&ones) + geo_sum(&pi1_1)? + geo_sum(&pi0_2)?;
    if (mass - cfg.lambda()).abs() > MASS_TOL {
        return Err(Error::Inconsistent(format!(
            "reduced queue-length mass {mass} differs from lambda {}",
            cfg.lambda()
        )));
    }
    Ok(ReducedQueueLaw {
        r,
        pi1,
        pi0_1,
        pi1_1,
        pi0_2,
    })
}

/// Pieces shared by the type-1 wait and response curves.
struct Type1Parts {
    /// G = Sᵀ⊗I + (s*α)ᵀ⊗R, the level/phase generator of the remaining work
    /// ahead of a nudged type-1 arrival.
    g: DMatrix<f64>,
    /// ξ = vec(I).
    xi: DVector<f64>,
    /// ν₁ combined with ξ gives the geometric-level part of the wait tail.
    nu1: DVector<f64>,
    /// Coefficient of e^{St}·1.
    c_ones: DVector<f64>,
    /// Coefficient of e^{St}·h (h = class-indicator column scaled by 1/p).
    c_h: DVector<f64>,
    /// h = [1/p on type-1 phases; 0 on type-2 phases].
    h: DVector<f64>,
    s: DMatrix<f64>,
    n: usize,
}

impl Type1Parts {
    fn new(cfg: &SystemConfig, parts: &WorkloadParts, law: &ReducedQueueLaw) -> Result<Self> {
        let n = parts.alpha.len();
        let id = DMatrix::<f64>::identity(n, n);
        let exit = -(&parts.s * DVector::from_element(n, 1.0));
        let g = kron(&parts.s.transpose(), &id)
            + kron(&(&exit * parts.alpha.transpose()).transpose(), &law.r);
        let xi = DVector::from_column_slice(id.as_slice());

        // Row·R^{-1} computed as the solution of Rᵀx = row; R is
        // nonsingular since −λ(T − λI)^{-1} inverts by construction.
        let r_t = law.r.transpose().lu();
        let pi1_1_rinv = r_t
            .solve(&law.pi1_1)
            .ok_or_else(|| Error::Singular("R".into()))?;
        let pi0_2_rinv = r_t
            .solve(&law.pi0_2)
            .ok_or_else(|| Error::Singular("R".into()))?;

        let i_r_t = (&id - &law.r).transpose();
        let lu_ir = i_r_t.lu();
        let a_geo = lu_ir
            .solve(&(&law.pi1_1 + &law.pi0_2))
            .ok_or_else(|| Error::Singular("I − R".into()))?;
        let a_row = &a_geo + &pi1_1_rinv;

        let n1 = cfg.type1().order();
        let mut h = DVector::<f64>::zeros(n);
        for i in 0..n1 {
            h[i] = 1.0 / cfg.p();
        }

        let nu1 = kron_vec(&DVector::from_element(n, 1.0), &a_row) + kron_vec(&h, &pi0_2_rinv);
        let c_ones = &law.pi0_1 - &pi1_1_rinv;

        Ok(Type1Parts {
            g,
            xi,
            nu1,
            c_ones,
            c_h: pi0_2_rinv,
            h,
            s: parts.s.clone(),
            n,
        })
    }

    /// P[W₁ > t].
    fn wait_tail(&self, t: f64) -> Result<f64> {
        let eg = mat_exp(&(&self.g * t))?;
        let es = mat_exp(&(&self.s * t))?;
        let ones = DVector::from_element(self.n, 1.0);
        let val = self.nu1.dot(&(&eg * &self.xi)) + self.c_ones.dot(&(&es * &ones))
            - self.c_h.dot(&(&es * &self.h));
        Ok(val)
    }
}

/// Waiting-time tail of type-1 jobs under Nudge-K.
pub fn w1_ccdf(cfg: &SystemConfig, grid: &[f64]) -> Result<CcdfCurve> {
    check_grid(grid)?;
    require_type1_present(cfg)?;
    let parts = WorkloadParts::new(cfg)?;
    if cfg.k().is_fcfs() {
        let mut value = Vec::with_capacity(grid.len());
        for &t in grid {
            value.push(parts.ccdf(t)?);
        }
        return CcdfCurve::assemble(CurveKind::NudgeWait1, grid, value);
    }
    let law = reduced_qlen(cfg)?;
    let t1 = Type1Parts::new(cfg, &parts, &law)?;
    let mut value = Vec::with_capacity(grid.len());
    for &t in grid {
        value.push(t1.wait_tail(t)?);
    }
    CcdfCurve::assemble(CurveKind::NudgeWait1, grid, value)
}

/// Response-time tail of type-1 jobs: wait plus own service, each wait
/// component convolved with PH(α₁, S₁) through a Van Loan block.
pub fn r1_ccdf(cfg: &SystemConfig, grid: &[f64]) -> Result<CcdfCurve> {
    check_grid(grid)?;
    require_type1_present(cfg)?;
    if cfg.k().is_fcfs() {
        return response_ccdf_typed(cfg, cfg.type1(), CurveKind::NudgeResponse1, grid);
    }
    let parts = WorkloadParts::new(cfg)?;
    let law = reduced_qlen(cfg)?;
    let t1 = Type1Parts::new(cfg, &parts, &law)?;
    let n = t1.n;
    let n1 = cfg.type1().order();
    let alpha1_t = cfg.type1().alpha().transpose();
    let s1 = cfg.type1().sub_generator();
    let ones1 = DVector::from_element(n1, 1.0);
    let ones = DVector::from_element(n, 1.0);

    // Exit-to-service coupling blocks: −(chain generator)·(chain target
    // vector)·α₁ per wait component.
    let b_g = -(&t1.g * &t1.xi) * &alpha1_t;
    let b_ones = -(&t1.s * &ones) * &alpha1_t;
    let b_h = -(&t1.s * &t1.h) * &alpha1_t;

    let mut value = Vec::with_capacity(grid.len());
    for &t in grid {
        let wait = t1.wait_tail(t)?;
        let idle = (1.0 - cfg.lambda()) * cfg.type1().ccdf(t)?;
        let vg = van_loan_integral(&t1.g, &b_g, s1, t)?;
        let vo = van_loan_integral(&t1.s, &b_ones, s1, t)?;
        let vh = van_loan_integral(&t1.s, &b_h, s1, t)?;
        let conv = t1.nu1.dot(&(&vg * &ones1)) + t1.c_ones.dot(&(&vo * &ones1))
            - t1.c_h.dot(&(&vh * &ones1));
        value.push(wait + idle + conv);
    }
    CcdfCurve::assemble(CurveKind::NudgeResponse1, grid, value)
}

/// Asymptotic tail prefactors: every tail behaves like c·e^{−θ_Z t} with a
/// policy- and class-specific constant c.
pub struct TailConstants {
    pub theta_z: f64,
    pub c_z: f64,
    pub c_fcfs: f64,
    pub c_w1: f64,
    pub c_r1: f64,
    pub c_w2: f64,
    pub c_r2: f64,
}

/// Closed-form tail prefactors at swap depth K. All are scalar functions of
/// c_Z and the class transforms evaluated at −θ_Z.
pub fn tail_constants(cfg: &SystemConfig) -> Result<TailConstants> {
    let sp = spectral(cfg)?;
    let theta = sp.theta_z;
    let st1 = cfg.type1().laplace(-theta)?;
    let st2 = cfg.type2().laplace(-theta)?;
    let st = cfg.p() * st1 + (1.0 - cfg.p()) * st2;
    let p = cfg.p();
    let q = 1.0 - p;
    let w = q / st;

    let wk = cfg.k().pow_q(w);
    let qk = cfg.k().pow_q(q);

    let c_w1 = sp.c_z * wk + sp.c_z * p * (st1 / st) * (1.0 - wk) / (1.0 - w);
    let c_w2 = qk * sp.c_z + (1.0 - qk) * sp.c_z * st1;

    Ok(TailConstants {
        theta_z: theta,
        c_z: sp.c_z,
        c_fcfs: sp.c_z * st,
        c_w1,
        c_r1: c_w1 * st1,
        c_w2,
        c_r2: c_w2 * st2,
    })
}

/// Tail improvement ratio curve: TIR(t) = 1 − P[R_Nudge > t]/P[R_FCFS > t],
/// with the Nudge response mixing both classes by arrival shares.
pub struct TirCurve {
    pub fcfs: CcdfCurve,
    pub nudge: CcdfCurve,
    pub tir: Vec<f64>,
}

pub fn tir_curve(cfg: &SystemConfig, grid: &[f64]) -> Result<TirCurve> {
    check_grid(grid)?;
    require_type1_present(cfg)?;
    require_type2_present(cfg)?;
    let fcfs = response_ccdf(cfg, grid)?;
    let r1 = r1_ccdf(cfg, grid)?;
    let r2 = r2_ccdf(cfg, grid)?;
    let value: Vec<f64> = r1
        .value
        .iter()
        .zip(&r2.value)
        .map(|(a, b)| cfg.p() * a + (1.0 - cfg.p()) * b)
        .collect();
    let nudge = CcdfCurve::assemble(CurveKind::NudgeResponse, grid, value)?;
    let mut tir = Vec::with_capacity(grid.len());
    for i in 0..grid.len() {
        let f = fcfs.value[i];
        if f <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "FCFS response tail underflows at t = {}; shrink the grid",
                grid[i]
            )));
        }
        tir.push(1.0 - nudge.value[i] / f);
    }
    Ok(TirCurve { fcfs, nudge, tir })
}
