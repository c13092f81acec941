//! Complex dense matrix substrate: norms, Hermitian eigendecompositions,
//! singular values, density matrices and von Neumann entropy.
//!
//! Everything downstream (channels, gaps, contraction rates, entropy bounds)
//! reduces to the handful of primitives in this module. Matrices are dense
//! `nalgebra` matrices over `Complex64`; dimensions of interest are small
//! (N ≤ a few hundred), so no sparse or blocked paths exist.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense N×N complex matrix, the universal carrier for operators, states and
/// Kraus terms.
pub type ComplexMatrix = DMatrix<Complex64>;

/// Dense complex vector (states ψ ∈ C^N).
pub type ComplexVector = DVector<Complex64>;

/// Numerical tolerances used by validation and certification.
///
/// * `tol_herm`  — Hermiticity residual ‖A − A†‖₂
/// * `tol_trace` — deviation of a density-matrix trace from 1
/// * `tol_psd`   — how negative an eigenvalue may be before a state is
///   rejected (round-off produces tiny negative eigenvalues on valid states)
/// * `tol_eig`   — slack for eigenvalue/singular-value assertions
/// * `tol_fix`   — slack for fixed-point and completeness residuals
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Tolerances {
    pub tol_herm: f64,
    pub tol_trace: f64,
    pub tol_psd: f64,
    pub tol_eig: f64,
    pub tol_fix: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        // Double-precision eigensolvers deliver ~1e-12 residuals at these
        // dimensions; an order-of-magnitude margin absorbs conditioning.
        Tolerances {
            tol_herm: 1e-9,
            tol_trace: 1e-9,
            tol_psd: 1e-9,
            tol_eig: 1e-8,
            tol_fix: 1e-7,
        }
    }
}

impl Tolerances {
    pub fn validate(&self) -> Result<()> {
        let all = [
            self.tol_herm,
            self.tol_trace,
            self.tol_psd,
            self.tol_eig,
            self.tol_fix,
        ];
        if all.iter().any(|t| !t.is_finite() || *t < 0.0) {
            return Err(Error::InvalidParameter(
                "tolerances must be finite and nonnegative".into(),
            ));
        }
        Ok(())
    }
}

/// Checks that `a` is square and returns its dimension.
pub fn ensure_square(a: &ComplexMatrix) -> Result<usize> {
    if a.nrows() != a.ncols() {
        return Err(Error::NotSquare {
            rows: a.nrows(),
            cols: a.ncols(),
        });
    }
    Ok(a.nrows())
}

/// Checks that every entry of `a` is finite.
pub fn ensure_finite(a: &ComplexMatrix) -> Result<()> {
    if a.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite)
    }
}

/// N×N identity.
pub fn identity(n: usize) -> ComplexMatrix {
    ComplexMatrix::identity(n, n)
}

/// Hermiticity residual ‖A − A†‖₂.
pub fn hermitian_residual(a: &ComplexMatrix) -> f64 {
    (a - a.adjoint()).norm()
}

/// Hermitian part (A + A†)/2.
pub fn symmetrize(a: &ComplexMatrix) -> ComplexMatrix {
    (a + a.adjoint()).scale(0.5)
}

/// Trace norm ‖A‖₁ = tr (A†A)^{1/2}, the sum of singular values.
pub fn trace_norm(a: &ComplexMatrix) -> Result<f64> {
    ensure_finite(a)?;
    Ok(svd_singular_values(a)?.iter().sum())
}

/// Hilbert–Schmidt (Frobenius) norm ‖A‖₂ = [tr(A†A)]^{1/2}.
pub fn hs_norm(a: &ComplexMatrix) -> f64 {
    a.norm()
}

/// Hilbert–Schmidt inner product ⟨A,B⟩ = tr(A†B).
pub fn hs_inner(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<Complex64> {
    if a.shape() != b.shape() {
        return Err(Error::DimensionMismatch {
            expected: a.nrows(),
            got: b.nrows(),
        });
    }
    // tr(A†B) = Σ_ij conj(A_ij) B_ij
    Ok(a.dotc(b))
}

/// Result of a Hermitian eigendecomposition.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    /// Eigenvalues in ascending order.
    pub eigenvalues: Vec<f64>,
    /// Orthonormal eigenvectors as matrix columns, ordered like `eigenvalues`.
    pub eigenvectors: ComplexMatrix,
    /// ‖A − A†‖₂ of the input before symmetrization.
    pub herm_residual: f64,
}

/// Eigendecomposition of a Hermitian matrix.
///
/// The input is symmetrized to (A + A†)/2 first; the pre-symmetrization
/// residual is recorded and rejected if it exceeds `tol_herm`.
pub fn hermitian_eigendecomposition(
    a: &ComplexMatrix,
    tol: &Tolerances,
) -> Result<HermitianEigen> {
    ensure_square(a)?;
    ensure_finite(a)?;
    let residual = hermitian_residual(a);
    if residual > tol.tol_herm {
        return Err(Error::NotHermitian {
            residual,
            tol: tol.tol_herm,
        });
    }
    let sym = symmetrize(a);
    let eig = nalgebra::SymmetricEigen::try_new(sym, f64::EPSILON, 0)
        .ok_or(Error::DecompositionFailed)?;

    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));

    let eigenvalues: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let eigenvectors =
        ComplexMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);

    Ok(HermitianEigen {
        eigenvalues,
        eigenvectors,
        herm_residual: residual,
    })
}

/// Singular values of `a` in descending order.
pub fn svd_singular_values(a: &ComplexMatrix) -> Result<Vec<f64>> {
    ensure_finite(a)?;
    let svd = a
        .clone()
        .try_svd(false, false, f64::EPSILON, 0)
        .ok_or(Error::DecompositionFailed)?;
    Ok(svd.singular_values.iter().copied().collect())
}

/// Largest singular value (operator norm).
pub fn operator_norm(a: &ComplexMatrix) -> Result<f64> {
    Ok(svd_singular_values(a)?.first().copied().unwrap_or(0.0))
}

/// Eigenvalues of a real square matrix, as complex numbers in no particular
/// order.
///
/// Complexifies the matrix, reduces it to upper Hessenberg form by
/// Householder reflections, and runs single-shift QR iteration with
/// Wilkinson shifts and deflation. nalgebra's real Schur iteration can stall
/// indefinitely on matrices with highly repeated eigenvalues (superoperators
/// of depolarizing channels are exactly that), so the spectra of channel
/// superoperators go through this path.
pub fn real_matrix_eigenvalues(m: &DMatrix<f64>) -> Result<Vec<Complex64>> {
    let n = m.nrows();
    if m.ncols() != n {
        return Err(Error::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    if m.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite);
    }
    let mut a = ComplexMatrix::from_fn(n, n, |i, j| Complex64::new(m[(i, j)], 0.0));
    hessenberg_in_place(&mut a);

    let eps = f64::EPSILON;
    let mut eigenvalues = Vec::with_capacity(n);
    let mut hi = n;
    let mut iters_on_block = 0usize;
    let mut total_iters = 0usize;
    let max_total = 60 * n.max(4);
    while hi > 0 {
        if hi == 1 {
            eigenvalues.push(a[(0, 0)]);
            hi = 0;
            continue;
        }
        let k = hi - 1;
        let denom = a[(k - 1, k - 1)].norm() + a[(k, k)].norm();
        if a[(k, k - 1)].norm() <= eps * denom.max(f64::MIN_POSITIVE) {
            eigenvalues.push(a[(k, k)]);
            hi -= 1;
            iters_on_block = 0;
            continue;
        }

        // Start of the unreduced trailing block.
        let mut lo = k;
        while lo > 0 {
            let d = a[(lo - 1, lo - 1)].norm() + a[(lo, lo)].norm();
            if a[(lo, lo - 1)].norm() <= eps * d.max(f64::MIN_POSITIVE) {
                a[(lo, lo - 1)] = Complex64::new(0.0, 0.0);
                break;
            }
            lo -= 1;
        }

        total_iters += 1;
        iters_on_block += 1;
        if total_iters > max_total {
            return Err(Error::DecompositionFailed);
        }

        // Wilkinson shift: the eigenvalue of the trailing 2×2 closest to the
        // bottom diagonal entry; an occasional exceptional shift breaks
        // symmetric stalls.
        let shift = if iters_on_block.is_multiple_of(16) {
            a[(k, k)] + Complex64::new(a[(k, k - 1)].norm(), 0.0)
        } else {
            let (p, q, r, s) = (a[(k - 1, k - 1)], a[(k - 1, k)], a[(k, k - 1)], a[(k, k)]);
            let mid = (p + s).scale(0.5);
            let disc = ((p - s).scale(0.5).powi(2) + q * r).sqrt();
            let (r1, r2) = (mid + disc, mid - disc);
            if (r1 - s).norm() <= (r2 - s).norm() {
                r1
            } else {
                r2
            }
        };

        let width = hi - lo;
        let mut block = a.view((lo, lo), (width, width)).into_owned();
        for i in 0..width {
            block[(i, i)] -= shift;
        }
        let qr = block.qr();
        let (q, r) = (qr.q(), qr.r());
        let mut next = r * q;
        for i in 0..width {
            next[(i, i)] += shift;
        }
        a.view_mut((lo, lo), (width, width)).copy_from(&next);
    }
    Ok(eigenvalues)
}

/// In-place unitary reduction to upper Hessenberg form.
fn hessenberg_in_place(a: &mut ComplexMatrix) {
    let n = a.nrows();
    for col in 0..n.saturating_sub(2) {
        let m = n - col - 1;
        let mut v: Vec<Complex64> = (0..m).map(|i| a[(col + 1 + i, col)]).collect();
        let norm_x = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm_x <= f64::MIN_POSITIVE {
            continue;
        }
        let x0 = v[0];
        let phase = if x0.norm() > 0.0 {
            x0.unscale(x0.norm())
        } else {
            Complex64::new(1.0, 0.0)
        };
        v[0] += phase.scale(norm_x);
        let vnorm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if vnorm <= f64::MIN_POSITIVE {
            continue;
        }
        for z in v.iter_mut() {
            *z = z.unscale(vnorm);
        }
        // A ← H A with H = I − 2vv† acting on rows col+1.. .
        for j in col..n {
            let mut dot = Complex64::new(0.0, 0.0);
            for i in 0..m {
                dot += v[i].conj() * a[(col + 1 + i, j)];
            }
            let dot = dot.scale(2.0);
            for i in 0..m {
                let correction = v[i] * dot;
                a[(col + 1 + i, j)] -= correction;
            }
        }
        // A ← A H on columns col+1.. .
        for i in 0..n {
            let mut dot = Complex64::new(0.0, 0.0);
            for j in 0..m {
                dot += a[(i, col + 1 + j)] * v[j];
            }
            let dot = dot.scale(2.0);
            for j in 0..m {
                let correction = dot * v[j].conj();
                a[(i, col + 1 + j)] -= correction;
            }
        }
    }
}

/// A positive semidefinite, unit-trace complex matrix.
///
/// The stored matrix is the Hermitian part of the input; validation happens
/// at construction so downstream code can rely on the invariants.
#[derive(Debug, Clone)]
pub struct DensityMatrix {
    mat: ComplexMatrix,
}

impl DensityMatrix {
    /// Validates Hermiticity, unit trace and positivity, then stores the
    /// symmetrized matrix.
    pub fn new(mat: ComplexMatrix, tol: &Tolerances) -> Result<Self> {
        let _n = ensure_square(&mat)?;
        ensure_finite(&mat)?;
        let residual = hermitian_residual(&mat);
        if residual > tol.tol_herm {
            return Err(Error::NotHermitian {
                residual,
                tol: tol.tol_herm,
            });
        }
        let sym = symmetrize(&mat);
        let trace = sym.trace();
        if (trace.re - 1.0).abs() > tol.tol_trace || trace.im.abs() > tol.tol_trace {
            return Err(Error::TraceNotOne {
                trace: trace.re,
                tol: tol.tol_trace,
            });
        }
        let eig = nalgebra::SymmetricEigen::try_new(sym.clone(), f64::EPSILON, 0)
            .ok_or(Error::DecompositionFailed)?;
        let min_eig = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
        if min_eig < -tol.tol_psd {
            return Err(Error::NotPositiveSemidefinite {
                min_eig,
                tol: tol.tol_psd,
            });
        }
        Ok(DensityMatrix { mat: sym })
    }

    /// The maximally mixed state I/N.
    pub fn maximally_mixed(n: usize) -> Self {
        DensityMatrix {
            mat: identity(n).scale(1.0 / n as f64),
        }
    }

    /// Pure state |ψ⟩⟨ψ| from a state vector (normalized internally).
    pub fn pure(psi: &ComplexVector) -> Result<Self> {
        let norm = psi.norm();
        if norm < 1e-300 {
            return Err(Error::InvalidParameter("zero state vector".into()));
        }
        let v = psi.unscale(norm);
        let mat = &v * v.adjoint();
        Ok(DensityMatrix { mat })
    }

    /// Computational basis state |j⟩⟨j| in dimension `n`.
    pub fn basis_state(n: usize, j: usize) -> Result<Self> {
        if j >= n {
            return Err(Error::InvalidParameter(format!(
                "basis index {j} out of range for dimension {n}"
            )));
        }
        let mut psi = ComplexVector::zeros(n);
        psi[j] = Complex64::new(1.0, 0.0);
        DensityMatrix::pure(&psi)
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.mat
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.mat
    }

    /// ‖σ − I/N‖₁, the trace distance to the maximally mixed state.
    pub fn trace_dist_to_mixed(&self) -> Result<f64> {
        let n = self.dim();
        trace_norm(&(&self.mat - identity(n).scale(1.0 / n as f64)))
    }

    /// ‖σ − I/N‖₂², the squared Hilbert–Schmidt distance to I/N.
    pub fn hs_dist_sq_to_mixed(&self) -> f64 {
        let n = self.dim();
        let d = &self.mat - identity(n).scale(1.0 / n as f64);
        let norm = hs_norm(&d);
        norm * norm
    }
}

/// Von Neumann entropy S(σ) = −tr(σ ln σ) in nats.
///
/// Eigenvalues in [−tol_psd, 0) are clamped to 0 (with 0·ln 0 = 0); anything
/// below −tol_psd violates the density-matrix invariants and is rejected.
/// The result lands in [0, ln N].
pub fn von_neumann_entropy(sigma: &DensityMatrix, tol: &Tolerances) -> Result<f64> {
    let eig = hermitian_eigendecomposition(sigma.matrix(), tol)?;
    let mut s = 0.0;
    for &lambda in &eig.eigenvalues {
        if lambda < -tol.tol_psd {
            return Err(Error::NotPositiveSemidefinite {
                min_eig: lambda,
                tol: tol.tol_psd,
            });
        }
        if lambda > 0.0 {
            s -= lambda * lambda.ln();
        }
    }
    let max = (sigma.dim() as f64).ln();
    Ok(s.clamp(0.0, max))
}
