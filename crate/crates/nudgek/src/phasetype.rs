//! Phase-type service-time distributions and the two-class system
//! configuration.
//!
//! A phase-type distribution PH(α, S) is the absorption time of a transient
//! Markov chain: α is the initial probability row over n transient phases and
//! S the n×n sub-generator (negative diagonal, nonnegative off-diagonal, row
//! sums ≤ 0, nonsingular). Exit rates are s* = −S·1. Everything downstream
//! works off this pair: moments k!·α(−S)^{-k}1, the Laplace-Stieltjes
//! transform α(sI−S)^{-1}s*, and the tail α e^{St}1.

use crate::numerics::{mat_exp, spectral_abscissa};
use crate::{Error, Result};
use nalgebra::{DMatrix, DVector};

/// Tolerance on sign and normalization constraints of (α, S) inputs.
const STOCHASTIC_TOL: f64 = 1e-12;

/// Tolerance on the unit-mean normalization of a two-class configuration.
const UNIT_MEAN_TOL: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct PhaseType {
    alpha: DVector<f64>,
    s: DMatrix<f64>,
}

impl PhaseType {
    /// Validate and build PH(α, S). α must be a probability vector (no
    /// atom at zero: components sum to 1), S a nonsingular sub-generator.
    pub fn new(alpha: DVector<f64>, s: DMatrix<f64>) -> Result<Self> {
        let n = alpha.len();
        if n == 0 {
            return Err(Error::DimensionMismatch(
                "phase-type needs at least one phase".into(),
            ));
        }
        if s.nrows() != n || s.ncols() != n {
            return Err(Error::DimensionMismatch(format!(
                "alpha has {} phases but S is {}x{}",
                n,
                s.nrows(),
                s.ncols()
            )));
        }
        if alpha.iter().any(|&a| !a.is_finite() || a < -STOCHASTIC_TOL) {
            return Err(Error::NonStochasticAlpha(
                "negative or non-finite component".into(),
            ));
        }
        let total: f64 = alpha.sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::NonStochasticAlpha(format!(
                "components sum to {total}, not 1"
            )));
        }
        if s.iter().any(|&x| !x.is_finite()) {
            return Err(Error::NotSubGenerator("non-finite entry".into()));
        }
        for i in 0..n {
            if s[(i, i)] >= 0.0 {
                return Err(Error::NotSubGenerator(format!(
                    "diagonal entry {i} is not negative"
                )));
            }
            let mut row_sum = 0.0;
            for j in 0..n {
                if i != j && s[(i, j)] < -STOCHASTIC_TOL {
                    return Err(Error::NotSubGenerator(format!(
                        "negative off-diagonal entry at ({i},{j})"
                    )));
                }
                row_sum += s[(i, j)];
            }
            if row_sum > STOCHASTIC_TOL * s[(i, i)].abs().max(1.0) {
                return Err(Error::NotSubGenerator(format!(
                    "row {i} sums to {row_sum} > 0"
                )));
            }
        }
        // Sign pattern plus nonsingularity implies all eigenvalues have
        // negative real part (Gershgorin disks touch the imaginary axis only
        // at the origin), so proper absorption needs no eigensolve.
        if !s.clone().lu().is_invertible() {
            return Err(Error::NotSubGenerator("singular sub-generator".into()));
        }
        Ok(PhaseType { alpha, s })
    }

    /// Exponential with the given mean: one phase at rate 1/mean.
    pub fn expo(mean: f64) -> Result<Self> {
        if !(mean.is_finite() && mean > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "expo mean must be positive, got {mean}"
            )));
        }
        PhaseType::new(
            DVector::from_element(1, 1.0),
            DMatrix::from_element(1, 1, -1.0 / mean),
        )
    }

    /// Erlang with the given number of phases and mean (each phase at rate
    /// phases/mean). Squared coefficient of variation 1/phases.
    pub fn erlang(phases: usize, mean: f64) -> Result<Self> {
        if phases == 0 {
            return Err(Error::InvalidParameter(
                "erlang needs at least one phase".into(),
            ));
        }
        if !(mean.is_finite() && mean > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "erlang mean must be positive, got {mean}"
            )));
        }
        let rate = phases as f64 / mean;
        let mut s = DMatrix::<f64>::zeros(phases, phases);
        for i in 0..phases {
            s[(i, i)] = -rate;
            if i + 1 < phases {
                s[(i, i + 1)] = rate;
            }
        }
        let mut alpha = DVector::<f64>::zeros(phases);
        alpha[0] = 1.0;
        PhaseType::new(alpha, s)
    }

    /// Two-phase hyperexponential with balanced means (p₁/μ₁ = p₂/μ₂),
    /// matching the given mean and squared coefficient of variation ≥ 1.
    pub fn h2_balanced(mean: f64, scv: f64) -> Result<Self> {
        if !(mean.is_finite() && mean > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "h2 mean must be positive, got {mean}"
            )));
        }
        if !(scv.is_finite() && scv >= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "h2_balanced needs scv >= 1, got {scv}"
            )));
        }
        let p1 = 0.5 * (1.0 + ((scv - 1.0) / (scv + 1.0)).sqrt());
        let p2 = 1.0 - p1;
        let mu1 = 2.0 * p1 / mean;
        let mu2 = 2.0 * p2 / mean;
        PhaseType::new(
            DVector::from_vec(vec![p1, p2]),
            DMatrix::from_diagonal(&DVector::from_vec(vec![-mu1, -mu2])),
        )
    }

    /// Two-phase hyperexponential matching mean and scv, with the extra
    /// shape degree of freedom pinned by f: the fraction of the mean carried
    /// by the small-mean phase (α₁·m₁ = f·mean). The phase means solve
    /// m₁² − ((A + (2f−1)·mean)/f)·m₁ + A·mean = 0 with A = (1+scv)·mean/2,
    /// taking the smaller root for m₁ and m₂ = (A − f·m₁)/(1−f).
    pub fn h2_shape(mean: f64, scv: f64, f: f64) -> Result<Self> {
        if !(mean.is_finite() && mean > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "h2 mean must be positive, got {mean}"
            )));
        }
        if !(scv.is_finite() && scv >= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "h2_shape needs scv >= 1, got {scv}"
            )));
        }
        if !(f.is_finite() && 0.0 < f && f < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "h2_shape needs 0 < f < 1, got {f}"
            )));
        }
        let a = 0.5 * (1.0 + scv) * mean;
        let b = (a + (2.0 * f - 1.0) * mean) / f;
        let disc = b * b - 4.0 * a * mean;
        if disc < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "h2_shape has no real solution for scv {scv}, f {f}"
            )));
        }
        let m1 = 0.5 * (b - disc.sqrt());
        let m2 = (a - f * m1) / (1.0 - f);
        if !(m1 > 0.0 && m2 > 0.0 && m1 <= m2 * (1.0 + 1e-12)) {
            return Err(Error::InvalidParameter(format!(
                "h2_shape phase means {m1}, {m2} are not ordered positive"
            )));
        }
        let a1 = f * mean / m1;
        let a2 = (1.0 - f) * mean / m2;
        if !(0.0 <= a1 && a1 <= 1.0 + 1e-12) {
            return Err(Error::InvalidParameter(format!(
                "h2_shape initial probability {a1} out of range"
            )));
        }
        // a1 + a2 = 1 by construction; renormalize the rounding residue.
        let total = a1 + a2;
        PhaseType::new(
            DVector::from_vec(vec![a1 / total, a2 / total]),
            DMatrix::from_diagonal(&DVector::from_vec(vec![-1.0 / m1, -1.0 / m2])),
        )
    }

    /// Mixture: with probability p a draw from ph1, else from ph2.
    pub fn mix(p: f64, ph1: &PhaseType, ph2: &PhaseType) -> Result<Self> {
        if !(p.is_finite() && (0.0..=1.0).contains(&p)) {
            return Err(Error::InvalidParameter(format!(
                "mixture weight must be in [0,1], got {p}"
            )));
        }
        // Degenerate weights collapse to the surviving component so the
        // mixture stays irreducible.
        if p == 0.0 {
            return Ok(ph2.clone());
        }
        if p == 1.0 {
            return Ok(ph1.clone());
        }
        let (n1, n2) = (ph1.order(), ph2.order());
        let mut alpha = DVector::<f64>::zeros(n1 + n2);
        for i in 0..n1 {
            alpha[i] = p * ph1.alpha[i];
        }
        for i in 0..n2 {
            alpha[n1 + i] = (1.0 - p) * ph2.alpha[i];
        }
        let mut s = DMatrix::<f64>::zeros(n1 + n2, n1 + n2);
        s.view_mut((0, 0), (n1, n1)).copy_from(&ph1.s);
        s.view_mut((n1, n1), (n2, n2)).copy_from(&ph2.s);
        PhaseType::new(alpha, s)
    }

    pub fn order(&self) -> usize {
        self.alpha.len()
    }

    pub fn alpha(&self) -> &DVector<f64> {
        &self.alpha
    }

    pub fn sub_generator(&self) -> &DMatrix<f64> {
        &self.s
    }

    /// Exit-rate vector s* = −S·1.
    pub fn exit_rates(&self) -> DVector<f64> {
        -(&self.s * DVector::from_element(self.order(), 1.0))
    }

    /// k-th raw moment E[X^k] = k!·α(−S)^{-k}·1.
    pub fn moment(&self, k: u32) -> f64 {
        let neg_s = -&self.s;
        let lu = neg_s.lu();
        let mut y = DVector::from_element(self.order(), 1.0);
        let mut factorial = 1.0;
        for j in 1..=k {
            y = lu
                .solve(&y)
                .expect("validated sub-generator is nonsingular");
            factorial *= j as f64;
        }
        factorial * self.alpha.dot(&y)
    }

    pub fn mean(&self) -> f64 {
        self.moment(1)
    }

    /// Squared coefficient of variation Var[X]/E[X]².
    pub fn scv(&self) -> f64 {
        let m1 = self.moment(1);
        let m2 = self.moment(2);
        m2 / (m1 * m1) - 1.0
    }

    /// Decay rate of the tail: θ = −max Re eig(S) > 0.
    pub fn decay_rate(&self) -> f64 {
        -spectral_abscissa(&self.s).expect("S is square")
    }

    /// Laplace-Stieltjes transform E[e^{-sX}] = α(sI − S)^{-1}s*. Defined for
    /// all s > −θ where θ is the tail decay rate; other s are rejected since
    /// the resolvent may be singular there.
    pub fn laplace(&self, s: f64) -> Result<f64> {
        if !s.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "laplace needs finite s, got {s}"
            )));
        }
        if s < 0.0 && s <= -self.decay_rate() {
            return Err(Error::SingularResolvent(s));
        }
        let n = self.order();
        let m = DMatrix::<f64>::identity(n, n) * s - &self.s;
        let y = m
            .lu()
            .solve(&self.exit_rates())
            .ok_or(Error::SingularResolvent(s))?;
        Ok(self.alpha.dot(&y))
    }

    /// Tail P[X > t] = α e^{St} 1, clamped to [0, 1] against roundoff.
    pub fn ccdf(&self, t: f64) -> Result<f64> {
        if !(t.is_finite() && t >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "ccdf needs t >= 0, got {t}"
            )));
        }
        let e = mat_exp(&(&self.s * t))?;
        let v = e * DVector::from_element(self.order(), 1.0);
        Ok(self.alpha.dot(&v).clamp(0.0, 1.0))
    }

    /// Same distribution rescaled to the given mean (X' = c·X has S' = S/c).
    pub fn with_mean(&self, mean: f64) -> Result<Self> {
        if !(mean.is_finite() && mean > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "target mean must be positive, got {mean}"
            )));
        }
        let c = mean / self.mean();
        PhaseType::new(self.alpha.clone(), &self.s / c)
    }
}

/// Swap depth K of the Nudge-K policy. Finite(0) is FCFS.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SwapDepth {
    Finite(u32),
    Infinite,
}

impl SwapDepth {
    pub fn is_fcfs(self) -> bool {
        self == SwapDepth::Finite(0)
    }

    /// (1−p)^K, with the convention (1−p)^∞ = 0 for p > 0 and 1 for p = 0.
    pub(crate) fn pow_q(self, q: f64) -> f64 {
        match self {
            SwapDepth::Finite(k) => q.powi(k as i32),
            SwapDepth::Infinite => {
                if q < 1.0 {
                    0.0
                } else {
                    1.0
                }
            }
        }
    }
}

impl std::fmt::Display for SwapDepth {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SwapDepth::Finite(k) => write!(f, "{k}"),
            SwapDepth::Infinite => write!(f, "inf"),
        }
    }
}

/// Two-class M/PH/1 instance under Nudge-K: Poisson(λ) arrivals, type-1 with
/// probability p served as PH(α₁,S₁), type-2 otherwise as PH(α₂,S₂). The
/// mixture mean is normalized to 1, so λ is also the utilization.
#[derive(Debug, Clone)]
pub struct SystemConfig {
    lambda: f64,
    p: f64,
    type1: PhaseType,
    type2: PhaseType,
    k: SwapDepth,
}

impl SystemConfig {
    /// Build from explicitly-scaled service distributions. The mixture mean
    /// p·E[X₁] + (1−p)·E[X₂] must already equal 1.
    pub fn new(
        lambda: f64,
        p: f64,
        type1: PhaseType,
        type2: PhaseType,
        k: SwapDepth,
    ) -> Result<Self> {
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "lambda must be positive, got {lambda}"
            )));
        }
        if !(p.is_finite() && (0.0..=1.0).contains(&p)) {
            return Err(Error::InvalidParameter(format!(
                "p must be in [0,1], got {p}"
            )));
        }
        let mean = p * type1.mean() + (1.0 - p) * type2.mean();
        if (mean - 1.0).abs() > UNIT_MEAN_TOL {
            return Err(Error::InvalidParameter(format!(
                "mixture mean service time is {mean}, must be 1 (rescale or use a ratio)"
            )));
        }
        if lambda >= 1.0 {
            return Err(Error::Unstable(format!(
                "utilization lambda = {lambda} must be < 1"
            )));
        }
        Ok(SystemConfig {
            lambda,
            p,
            type1,
            type2,
            k,
        })
    }

    /// Build from unit-free shapes: rescale so E[X₂]/E[X₁] = ratio and the
    /// mixture mean is exactly 1, i.e. E[X₁] = 1/(p + (1−p)·ratio).
    pub fn normalized(
        lambda: f64,
        p: f64,
        shape1: &PhaseType,
        shape2: &PhaseType,
        ratio: f64,
        k: SwapDepth,
    ) -> Result<Self> {
        if !(ratio.is_finite() && ratio > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "mean ratio must be positive, got {ratio}"
            )));
        }
        if !(p.is_finite() && (0.0..=1.0).contains(&p)) {
            return Err(Error::InvalidParameter(format!(
                "p must be in [0,1], got {p}"
            )));
        }
        let mean1 = 1.0 / (p + (1.0 - p) * ratio);
        SystemConfig::new(
            lambda,
            p,
            shape1.with_mean(mean1)?,
            shape2.with_mean(ratio * mean1)?,
            k,
        )
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn type1(&self) -> &PhaseType {
        &self.type1
    }

    pub fn type2(&self) -> &PhaseType {
        &self.type2
    }

    pub fn k(&self) -> SwapDepth {
        self.k
    }

    /// The unconditional service distribution: the p/(1−p) mixture of the two
    /// classes.
    pub fn mixture(&self) -> PhaseType {
        PhaseType::mix(self.p, &self.type1, &self.type2).expect("components already validated")
    }

    pub fn with_k(&self, k: SwapDepth) -> Self {
        let mut out = self.clone();
        out.k = k;
        out
    }

    /// Second moment of the unconditional service time.
    pub fn service_second_moment(&self) -> f64 {
        self.p * self.type1.moment(2) + (1.0 - self.p) * self.type2.moment(2)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn expo_moments_and_transform() {
        let ph = PhaseType::expo(2.0).unwrap();
        assert!((ph.mean() - 2.0).abs() < 1e-14);
        assert!((ph.moment(2) - 8.0).abs() < 1e-14);
        assert!((ph.scv() - 1.0).abs() < 1e-13);
        // LST of expo(rate 0.5) at s: 0.5/(0.5+s).
        assert!((ph.laplace(1.0).unwrap() - 0.5 / 1.5).abs() < 1e-14);
        // Negative argument stays below the pole: rate 1.5 at s = -0.25
        // gives 1.5/1.25 = 1.2.
        let fast = PhaseType::expo(1.0 / 1.5).unwrap();
        assert!((fast.laplace(-0.25).unwrap() - 1.2).abs() < 1e-12);
    }

    #[test]
    fn laplace_rejects_singular_region() {
        let ph = PhaseType::expo(1.0).unwrap();
        assert!(matches!(ph.laplace(-1.0), Err(Error::SingularResolvent(_))));
        assert!(matches!(ph.laplace(-1.5), Err(Error::SingularResolvent(_))));
        assert!(ph.laplace(-0.99).is_ok());
    }

    #[test]
    fn erlang_tail_matches_poisson_sum() {
        // P[Erlang_k(rate r) > t] = Σ_{j<k} e^{-rt}(rt)^j/j!.
        let ph = PhaseType::erlang(2, 2.0).unwrap();
        let t = 2.0;
        let rt: f64 = 1.0 * t;
        let expect = (-rt).exp() * (1.0 + rt);
        let got = ph.ccdf(t).unwrap();
        assert!((got - expect).abs() < 1e-13, "got {got}, want {expect}");

        let ph5 = PhaseType::erlang(5, 1.0).unwrap();
        let rt: f64 = 5.0 * 0.8;
        let mut acc = 0.0;
        let mut term = (-rt).exp();
        for j in 0..5 {
            acc += term;
            term *= rt / (j + 1) as f64;
        }
        assert!((ph5.ccdf(0.8).unwrap() - acc).abs() < 1e-13);
    }

    #[test]
    fn erlang_moments_match_quadrature() {
        // E[X²] = ∫ 2t·P[X>t] dt, integrated numerically as an independent
        // route; closed form is k(k+1)/r².
        let ph = PhaseType::erlang(5, 1.0).unwrap();
        assert!((ph.moment(2) - 1.2).abs() < 1e-13);
        assert!((ph.scv() - 0.2).abs() < 1e-13);

        let m = 4000;
        let upper = 8.0;
        let h = upper / m as f64;
        let mut acc = 0.0;
        for i in 0..=m {
            let t = i as f64 * h;
            let w = if i == 0 || i == m {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            acc += w * 2.0 * t * ph.ccdf(t).unwrap();
        }
        acc *= h / 3.0;
        assert!((acc - 1.2).abs() < 1e-8, "quadrature {acc}");
    }

    #[test]
    fn h2_balanced_hits_mean_and_scv() {
        let ph = PhaseType::h2_balanced(1.0, 5.0).unwrap();
        assert!((ph.mean() - 1.0).abs() < 1e-13);
        assert!((ph.scv() - 5.0).abs() < 1e-12);
        // Balanced means: p1/mu1 = p2/mu2 = mean/2.
        let p1 = ph.alpha()[0];
        let mu1 = -ph.sub_generator()[(0, 0)];
        assert!((p1 / mu1 - 0.5).abs() < 1e-13);
        assert!((p1 - 0.908248290463863).abs() < 1e-12);
        // scv = 1 degenerates to exponential.
        let e = PhaseType::h2_balanced(2.0, 1.0).unwrap();
        assert!((e.sub_generator()[(0, 0)] - e.sub_generator()[(1, 1)]).abs() < 1e-13);
        assert!(matches!(
            PhaseType::h2_balanced(1.0, 0.5),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn h2_shape_reference_point() {
        // mean 120/106, scv 2, f 0.9: phase means 1.0341, 7.6740 and initial
        // probabilities (0.9852, 0.0148).
        let mean = 1.2 * 100.0 / 106.0;
        let ph = PhaseType::h2_shape(mean, 2.0, 0.9).unwrap();
        assert!((ph.mean() - mean).abs() < 1e-13);
        assert!((ph.scv() - 2.0).abs() < 1e-12);
        let m1 = -1.0 / ph.sub_generator()[(0, 0)];
        let m2 = -1.0 / ph.sub_generator()[(1, 1)];
        assert!((m1 - 1.034).abs() < 5e-4, "m1 = {m1}");
        assert!((m2 - 7.674).abs() < 5e-4, "m2 = {m2}");
        assert!((ph.alpha()[0] - 0.985).abs() < 5e-3);
        assert!((ph.alpha()[1] - 0.015).abs() < 5e-3);
        // The shape fraction: alpha1 * m1 = f * mean.
        assert!((ph.alpha()[0] * m1 - 0.9 * mean).abs() < 1e-12);
    }

    #[test]
    fn h2_shape_matches_mean_scv_over_parameter_range() {
        for &scv in &[1.0, 1.5, 2.0, 5.0, 10.0] {
            for &f in &[0.1, 0.3, 0.5, 0.7, 0.9, 0.99] {
                let ph = match PhaseType::h2_shape(2.5, scv, f) {
                    Ok(ph) => ph,
                    Err(_) => continue,
                };
                assert!((ph.mean() - 2.5).abs() < 1e-12, "scv {scv} f {f}");
                assert!((ph.scv() - scv).abs() < 1e-11, "scv {scv} f {f}");
            }
        }
    }

    #[test]
    fn mix_is_pointwise_mixture() {
        let ph1 = PhaseType::expo(1.0).unwrap();
        let ph2 = PhaseType::erlang(3, 2.0).unwrap();
        let mix = PhaseType::mix(0.3, &ph1, &ph2).unwrap();
        assert_eq!(mix.order(), 4);
        for &t in &[0.0, 0.5, 1.3, 4.0] {
            let direct = 0.3 * ph1.ccdf(t).unwrap() + 0.7 * ph2.ccdf(t).unwrap();
            assert!((mix.ccdf(t).unwrap() - direct).abs() < 1e-13);
        }
        assert!((mix.mean() - (0.3 + 0.7 * 2.0)).abs() < 1e-13);
        let s = 0.8;
        let direct = 0.3 * ph1.laplace(s).unwrap() + 0.7 * ph2.laplace(s).unwrap();
        assert!((mix.laplace(s).unwrap() - direct).abs() < 1e-13);
        // Degenerate weights collapse to one component.
        assert_eq!(PhaseType::mix(0.0, &ph1, &ph2).unwrap().order(), 3);
        assert_eq!(PhaseType::mix(1.0, &ph1, &ph2).unwrap().order(), 1);
    }

    #[test]
    fn laplace_at_zero_is_one_and_derivative_is_mean() {
        for ph in [
            PhaseType::expo(0.7).unwrap(),
            PhaseType::erlang(4, 1.3).unwrap(),
            PhaseType::h2_balanced(1.0, 3.0).unwrap(),
            PhaseType::h2_shape(1.0, 2.0, 0.8).unwrap(),
        ] {
            assert!((ph.laplace(0.0).unwrap() - 1.0).abs() < 1e-12);
            let h = 1e-6;
            let deriv = (ph.laplace(h).unwrap() - ph.laplace(-h).unwrap()) / (2.0 * h);
            assert!((deriv + ph.mean()).abs() < 1e-6);
        }
    }

    #[test]
    fn ccdf_is_monotone_and_bounded() {
        let ph = PhaseType::h2_shape(1.0, 4.0, 0.6).unwrap();
        let mut prev = 1.0;
        for i in 0..60 {
            let t = i as f64 * 0.5;
            let v = ph.ccdf(t).unwrap();
            assert!((0.0..=1.0).contains(&v));
            assert!(v <= prev + 1e-12);
            prev = v;
        }
        assert!((ph.ccdf(0.0).unwrap() - 1.0).abs() < 1e-13);
    }

    #[test]
    fn with_mean_rescales_shape_invariantly() {
        let ph = PhaseType::h2_balanced(1.0, 5.0).unwrap();
        let scaled = ph.with_mean(3.5).unwrap();
        assert!((scaled.mean() - 3.5).abs() < 1e-12);
        assert!((scaled.scv() - 5.0).abs() < 1e-11);
        // Tail scales: P[cX > ct] = P[X > t].
        assert!((scaled.ccdf(3.5 * 0.8).unwrap() - ph.ccdf(0.8).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn rejects_malformed_inputs() {
        // Wrong dimensions.
        assert!(matches!(
            PhaseType::new(DVector::from_vec(vec![1.0]), DMatrix::zeros(2, 2)),
            Err(Error::DimensionMismatch(_))
        ));
        // Alpha does not sum to one.
        assert!(matches!(
            PhaseType::new(DVector::from_vec(vec![0.5, 0.4]), -DMatrix::identity(2, 2)),
            Err(Error::NonStochasticAlpha(_))
        ));
        // Positive off-diagonal is fine; negative is not.
        assert!(matches!(
            PhaseType::new(
                DVector::from_vec(vec![0.5, 0.5]),
                DMatrix::from_row_slice(2, 2, &[-1.0, -0.5, 0.0, -1.0]),
            ),
            Err(Error::NotSubGenerator(_))
        ));
        // Row sums must be <= 0.
        assert!(matches!(
            PhaseType::new(
                DVector::from_vec(vec![0.5, 0.5]),
                DMatrix::from_row_slice(2, 2, &[-1.0, 2.0, 0.0, -1.0]),
            ),
            Err(Error::NotSubGenerator(_))
        ));
        // Generator (row sums zero everywhere) is singular: no absorption.
        assert!(matches!(
            PhaseType::new(
                DVector::from_vec(vec![0.5, 0.5]),
                DMatrix::from_row_slice(2, 2, &[-1.0, 1.0, 1.0, -1.0]),
            ),
            Err(Error::NotSubGenerator(_))
        ));
    }

    #[test]
    fn system_config_normalizes_to_unit_mean() {
        let e = PhaseType::expo(1.0).unwrap();
        let cfg = SystemConfig::normalized(0.75, 0.5, &e, &e, 2.0, SwapDepth::Finite(2)).unwrap();
        assert!((cfg.type1().mean() - 2.0 / 3.0).abs() < 1e-13);
        assert!((cfg.type2().mean() - 4.0 / 3.0).abs() < 1e-13);
        let mix_mean = cfg.mixture().mean();
        assert!((mix_mean - 1.0).abs() < 1e-12);
        assert!((cfg.service_second_moment() - cfg.mixture().moment(2)).abs() < 1e-12);
    }

    #[test]
    fn system_config_rejects_bad_parameters() {
        let e = PhaseType::expo(1.0).unwrap();
        assert!(matches!(
            SystemConfig::normalized(1.0, 0.5, &e, &e, 2.0, SwapDepth::Finite(1)),
            Err(Error::Unstable(_))
        ));
        assert!(matches!(
            SystemConfig::normalized(0.5, 1.5, &e, &e, 2.0, SwapDepth::Finite(1)),
            Err(Error::InvalidParameter(_))
        ));
        assert!(matches!(
            SystemConfig::normalized(0.5, 0.5, &e, &e, -1.0, SwapDepth::Finite(1)),
            Err(Error::InvalidParameter(_))
        ));
        // Explicit distributions with mixture mean != 1 are rejected.
        let long = PhaseType::expo(2.0).unwrap();
        assert!(matches!(
            SystemConfig::new(0.5, 0.5, long.clone(), long, SwapDepth::Finite(1)),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn swap_depth_powers() {
        assert_eq!(SwapDepth::Finite(0).pow_q(0.3), 1.0);
        assert_eq!(SwapDepth::Finite(3).pow_q(0.5), 0.125);
        assert_eq!(SwapDepth::Infinite.pow_q(0.5), 0.0);
        assert_eq!(SwapDepth::Infinite.pow_q(1.0), 1.0);
        // p = 1 makes (1-p)^0 = 1 by convention.
        assert_eq!(SwapDepth::Finite(0).pow_q(0.0), 1.0);
    }
}
