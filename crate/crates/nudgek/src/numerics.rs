//! Dense linear-algebra kernels shared by the analytical modules: matrix
//! exponential, Kronecker product and sum, the Van Loan block-exponential
//! integral, and dominant-eigenvalue extraction for matrices with
//! Perron-Frobenius structure.

use nalgebra::{DMatrix, DVector};

use crate::{Error, Result};

/// Scaling threshold for the degree-13 Padé approximant of the matrix
/// exponential, from Higham's backward-error analysis: for ‖A‖₁ below this
/// value the approximant is accurate to unit roundoff.
const PADE13_THETA: f64 = 5.371920351148152;

/// Coefficients b₀..b₁₃ of the degree-13 Padé numerator.
const PADE13_COEFF: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

/// Matrix 1-norm: maximum absolute column sum.
pub fn norm_1(a: &DMatrix<f64>) -> f64 {
    (0..a.ncols())
        .map(|j| a.column(j).iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Matrix infinity-norm: maximum absolute row sum.
pub fn norm_inf(a: &DMatrix<f64>) -> f64 {
    (0..a.nrows())
        .map(|i| a.row(i).iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Matrix exponential e^A by scaling and squaring with a degree-13 Padé
/// approximant. The input is scaled by 2^{-s} so its 1-norm falls below the
/// Padé threshold, the approximant is evaluated with a single LU solve, and
/// the result is squared s times.
pub fn mat_exp(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    if n != a.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "mat_exp needs a square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    if a.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidParameter(
            "mat_exp input has non-finite entries".into(),
        ));
    }
    if n == 0 {
        return Ok(DMatrix::zeros(0, 0));
    }

    let norm = norm_1(a);
    let s = if norm > PADE13_THETA {
        (norm / PADE13_THETA).log2().ceil() as i32
    } else {
        0
    };
    let a = a * 2f64.powi(-s);

    let b = &PADE13_COEFF;
    let id = DMatrix::<f64>::identity(n, n);
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a2 * &a4;

    let u = &a
        * (&a6 * (b[13] * &a6 + b[11] * &a4 + b[9] * &a2)
            + b[7] * &a6
            + b[5] * &a4
            + b[3] * &a2
            + b[1] * &id);
    let v = &a6 * (b[12] * &a6 + b[10] * &a4 + b[8] * &a2)
        + b[6] * &a6
        + b[4] * &a4
        + b[2] * &a2
        + b[0] * &id;

    let num = &v + &u;
    let den = &v - &u;
    let mut x = den
        .lu()
        .solve(&num)
        .ok_or_else(|| Error::Singular("mat_exp Padé denominator".into()))?;
    for _ in 0..s {
        x = &x * &x;
    }
    Ok(x)
}

/// Kronecker product A ⊗ B.
pub fn kron(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    a.kronecker(b)
}

/// Kronecker product of two vectors: (a ⊗ b)[i·len(b)+j] = a[i]·b[j].
pub fn kron_vec(a: &DVector<f64>, b: &DVector<f64>) -> DVector<f64> {
    let mut out = DVector::zeros(a.len() * b.len());
    for i in 0..a.len() {
        for j in 0..b.len() {
            out[i * b.len() + j] = a[i] * b[j];
        }
    }
    out
}

/// Kronecker sum A ⊕ B = A ⊗ I + I ⊗ B for square A (m×m) and B (n×n).
/// Its exponential factors as e^{A⊕B} = e^A ⊗ e^B.
pub fn kron_sum(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if a.nrows() != a.ncols() || b.nrows() != b.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "kron_sum needs square blocks, got {}x{} and {}x{}",
            a.nrows(),
            a.ncols(),
            b.nrows(),
            b.ncols()
        )));
    }
    let im = DMatrix::<f64>::identity(a.nrows(), a.nrows());
    let in_ = DMatrix::<f64>::identity(b.nrows(), b.nrows());
    Ok(kron(a, &in_) + kron(&im, b))
}

/// Van Loan's block-exponential evaluation of the convolution integral
/// ∫₀ᵗ e^{A₁₁ s} A₁₂ e^{A₂₂ (t−s)} ds: it is the top-right block of
/// exp([[A₁₁, A₁₂], [0, A₂₂]] t).
pub fn van_loan_integral(
    a11: &DMatrix<f64>,
    a12: &DMatrix<f64>,
    a22: &DMatrix<f64>,
    t: f64,
) -> Result<DMatrix<f64>> {
    let m = a11.nrows();
    let n = a22.nrows();
    if a11.ncols() != m || a22.ncols() != n || a12.nrows() != m || a12.ncols() != n {
        return Err(Error::DimensionMismatch(format!(
            "van_loan_integral blocks {}x{}, {}x{}, {}x{} are incompatible",
            a11.nrows(),
            a11.ncols(),
            a12.nrows(),
            a12.ncols(),
            a22.nrows(),
            a22.ncols()
        )));
    }
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "van_loan_integral needs t >= 0, got {t}"
        )));
    }
    let mut big = DMatrix::<f64>::zeros(m + n, m + n);
    big.view_mut((0, 0), (m, m)).copy_from(a11);
    big.view_mut((0, m), (m, n)).copy_from(a12);
    big.view_mut((m, m), (n, n)).copy_from(a22);
    let e = mat_exp(&(big * t))?;
    Ok(e.view((0, m), (m, n)).into_owned())
}

/// Matrix power A^k by repeated squaring.
pub fn mat_pow(a: &DMatrix<f64>, k: u32) -> DMatrix<f64> {
    let n = a.nrows();
    let mut result = DMatrix::<f64>::identity(n, n);
    let mut base = a.clone();
    let mut e = k;
    while e > 0 {
        if e & 1 == 1 {
            result = &result * &base;
        }
        e >>= 1;
        if e > 0 {
            base = &base * &base;
        }
    }
    result
}

/// Dominant-eigenvalue data of a matrix with Perron-Frobenius structure.
pub struct SpectralInfo {
    /// Decay rate θ = −Re λ_max of the dominant eigenvalue.
    pub theta: f64,
    /// Right eigenvector, componentwise nonnegative, unit Euclidean norm.
    pub u: DVector<f64>,
    /// Left eigenvector (stored as a column), componentwise nonnegative,
    /// scaled so v·u = 1.
    pub v: DVector<f64>,
}

/// Largest real part over all eigenvalues (the spectral abscissa).
pub(crate) fn spectral_abscissa(a: &DMatrix<f64>) -> Result<f64> {
    if a.nrows() != a.ncols() {
        return Err(Error::DimensionMismatch(
            "spectral_abscissa needs a square matrix".into(),
        ));
    }
    if a.nrows() == 1 {
        return Ok(a[(0, 0)]);
    }
    let eigs = a.complex_eigenvalues();
    Ok(eigs.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max))
}

/// Extract the dominant eigenvalue −θ and its left/right eigenvectors from a
/// matrix with Perron-Frobenius structure (e.g. an irreducible sub-generator
/// plus a nonnegative rank-one update). The dominant eigenvalue must be real
/// and its eigenvectors nonnegative; complex dominance or a residual above
/// 1e-10·‖A‖∞ is an error.
pub fn dominant_decay(a: &DMatrix<f64>) -> Result<SpectralInfo> {
    let n = a.nrows();
    if n != a.ncols() {
        return Err(Error::DimensionMismatch(
            "dominant_decay needs a square matrix".into(),
        ));
    }
    if n == 0 {
        return Err(Error::DimensionMismatch(
            "dominant_decay needs a nonempty matrix".into(),
        ));
    }
    let scale = norm_inf(a).max(1.0);
    if n == 1 {
        return Ok(SpectralInfo {
            theta: -a[(0, 0)],
            u: DVector::from_element(1, 1.0),
            v: DVector::from_element(1, 1.0),
        });
    }

    let eigs = a.complex_eigenvalues();
    let mut best = 0;
    for i in 1..eigs.len() {
        if eigs[i].re > eigs[best].re {
            best = i;
        }
    }
    let lambda = eigs[best];
    if lambda.im.abs() > 1e-9 * scale {
        return Err(Error::ComplexDominantEigenvalue {
            re: lambda.re,
            im: lambda.im,
        });
    }
    let mu = lambda.re;

    let u = perron_vector(a, mu, scale)?;
    let v = perron_vector(&a.transpose(), mu, scale)?;

    // Rayleigh refinement; residual decides whether the extraction is trusted.
    let vu = v.dot(&u);
    if vu.abs() < 1e-14 {
        return Err(Error::NotConverged(
            "left/right eigenvectors nearly orthogonal".into(),
        ));
    }
    let mu = v.dot(&(a * &u)) / vu;
    let resid = (a * &u - mu * &u).amax();
    if resid > 1e-10 * scale {
        return Err(Error::NotConverged(format!(
            "eigenvector residual {resid:e} exceeds {:e}",
            1e-10 * scale
        )));
    }

    let v = &v / v.dot(&u);
    Ok(SpectralInfo { theta: -mu, u, v })
}

/// Inverse iteration for the eigenvector of eigenvalue mu, sign-fixed and
/// clamped to the nonnegative orthant, normalized to unit Euclidean norm.
fn perron_vector(a: &DMatrix<f64>, mu: f64, scale: f64) -> Result<DVector<f64>> {
    let n = a.nrows();
    let id = DMatrix::<f64>::identity(n, n);
    let mut offset = 1e-13 * scale;

    'shift: for _ in 0..6 {
        let lu = (a - (mu + offset) * &id).lu();
        let mut x = DVector::from_element(n, 1.0 / (n as f64).sqrt());
        for _ in 0..4 {
            let y = match lu.solve(&x) {
                Some(y) if y.iter().all(|c| c.is_finite()) && y.norm() > 0.0 => y,
                _ => {
                    offset *= 16.0;
                    continue 'shift;
                }
            };
            x = &y / y.norm();
        }
        // Fix the overall sign by the largest-magnitude component, then
        // require (near-)nonnegativity: Perron vectors have a constant sign.
        let mut imax = 0;
        for i in 1..n {
            if x[i].abs() > x[imax].abs() {
                imax = i;
            }
        }
        if x[imax] < 0.0 {
            x = -x;
        }
        if x.iter().any(|&c| c < -1e-10) {
            return Err(Error::NotConverged(
                "dominant eigenvector has mixed signs".into(),
            ));
        }
        for c in x.iter_mut() {
            if *c < 0.0 {
                *c = 0.0;
            }
        }
        let norm = x.norm();
        return Ok(x / norm);
    }
    Err(Error::NotConverged(
        "inverse iteration failed to find a usable shift".into(),
    ))
}
