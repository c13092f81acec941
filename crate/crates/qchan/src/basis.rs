//! Orthonormal Hermitian operator basis of M_N.
//!
//! Index 0 is the normalized identity I/√N; the remaining N²−1 elements are
//! HS-normalized generalized Gell-Mann matrices ordered as the symmetric
//! family (E_jk + E_kj)/√2, the antisymmetric family i(E_kj − E_jk)/√2, and
//! the diagonal family, each traceless. At N = 2 this is exactly
//! (I/√2, σ₁/√2, σ₂/√2, σ₃/√2), so the traceless subspace is an explicit
//! coordinate block in every superoperator built on top of it.

use num_complex::Complex64;

use crate::mat::ComplexMatrix;

fn unit(n: usize, r: usize, c: usize) -> ComplexMatrix {
    let mut e = ComplexMatrix::zeros(n, n);
    e[(r, c)] = Complex64::new(1.0, 0.0);
    e
}

/// The full orthonormal Hermitian basis of M_N (N² elements, identity first).
pub fn hermitian_basis(n: usize) -> Vec<ComplexMatrix> {
    assert!(n >= 1, "dimension must be positive");
    let mut basis = Vec::with_capacity(n * n);
    basis.push(ComplexMatrix::identity(n, n).scale(1.0 / (n as f64).sqrt()));

    let inv_sqrt2 = 1.0 / 2f64.sqrt();
    for j in 0..n {
        for k in (j + 1)..n {
            basis.push((unit(n, j, k) + unit(n, k, j)).scale(inv_sqrt2));
        }
    }
    for j in 0..n {
        for k in (j + 1)..n {
            let m = (unit(n, k, j) - unit(n, j, k)) * Complex64::new(0.0, inv_sqrt2);
            basis.push(m);
        }
    }
    for l in 1..n {
        let norm = 1.0 / ((l * (l + 1)) as f64).sqrt();
        let mut d = ComplexMatrix::zeros(n, n);
        for m in 0..l {
            d[(m, m)] = Complex64::new(norm, 0.0);
        }
        d[(l, l)] = Complex64::new(-(l as f64) * norm, 0.0);
        basis.push(d);
    }
    debug_assert_eq!(basis.len(), n * n);
    basis
}

/// Coordinates of `a` in the Hermitian basis: x_k = ⟨B_k, A⟩.
///
/// Real for Hermitian `a`; the imaginary parts are discarded by the caller
/// where that is justified.
pub fn coordinates(basis: &[ComplexMatrix], a: &ComplexMatrix) -> Vec<Complex64> {
    basis.iter().map(|b| b.dotc(a)).collect()
}

/// Reassembles Σ x_k B_k from real coordinates.
pub fn from_real_coordinates(basis: &[ComplexMatrix], x: &[f64]) -> ComplexMatrix {
    let n = basis[0].nrows();
    let mut out = ComplexMatrix::zeros(n, n);
    for (b, &c) in basis.iter().zip(x) {
        out += b.scale(c);
    }
    out
}
