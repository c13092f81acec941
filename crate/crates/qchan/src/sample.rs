//! Seeded random generators for matrices, states and unitaries.
//!
//! Every generator takes an explicit RNG so batch runs can derive
//! per-item seeds deterministically: parallel and serial sweeps agree.

use nalgebra::DVector;
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::basis;
use crate::mat::{ComplexMatrix, ComplexVector, DensityMatrix, Tolerances};

/// Deterministic RNG from a 64-bit seed.
pub fn rng_from(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Derives an independent child seed from a base seed and an index
/// (splitmix64 finalizer), so item `i` of a batch sees the same stream no
/// matter how the batch is scheduled.
pub fn derive_seed(base: u64, index: u64) -> u64 {
    let mut z = base ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn std_normal<R: Rng>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

/// N×N Ginibre matrix: i.i.d. standard complex Gaussian entries.
pub fn ginibre<R: Rng>(n: usize, rng: &mut R) -> ComplexMatrix {
    ComplexMatrix::from_fn(n, n, |_, _| {
        Complex64::new(std_normal(rng), std_normal(rng))
    })
}

/// Haar-random unitary: QR of a Ginibre matrix with the R diagonal phase
/// fixed, which corrects the raw QR distribution to Haar measure.
pub fn haar_unitary<R: Rng>(n: usize, rng: &mut R) -> ComplexMatrix {
    let g = ginibre(n, rng);
    let qr = g.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..n {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 {
            d / d.norm()
        } else {
            Complex64::new(1.0, 0.0)
        };
        for i in 0..n {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// Random pure state |ψ⟩⟨ψ| with ψ uniform on the unit sphere of C^N.
pub fn random_pure<R: Rng>(n: usize, rng: &mut R) -> DensityMatrix {
    DensityMatrix::pure(&random_unit_vector(n, rng)).expect("nonzero Gaussian vector")
}

/// Uniform unit vector in C^N.
pub fn random_unit_vector<R: Rng>(n: usize, rng: &mut R) -> ComplexVector {
    loop {
        let v = DVector::from_fn(n, |_, _| Complex64::new(std_normal(rng), std_normal(rng)));
        let norm = v.norm();
        if norm > 1e-6 {
            return v.unscale(norm);
        }
    }
}

/// Random density matrix GG†/tr(GG†) with G Ginibre (Hilbert–Schmidt
/// ensemble); full rank almost surely.
pub fn random_density<R: Rng>(n: usize, rng: &mut R) -> DensityMatrix {
    let g = ginibre(n, rng);
    let m = &g * g.adjoint();
    let trace = m.trace().re;
    DensityMatrix::new(m.unscale(trace), &Tolerances::default())
        .expect("Wishart matrix is a valid state")
}

/// Random traceless Hermitian matrix: standard Gaussian coefficients on the
/// traceless part of the Hermitian operator basis.
pub fn random_traceless_hermitian<R: Rng>(n: usize, rng: &mut R) -> ComplexMatrix {
    let basis = basis::hermitian_basis(n);
    let coeffs: Vec<f64> = (0..n * n - 1).map(|_| std_normal(rng)).collect();
    let mut out = ComplexMatrix::zeros(n, n);
    for (b, &c) in basis[1..].iter().zip(&coeffs) {
        out += b.scale(c);
    }
    out
}

/// Random probability vector of length `k` (normalized uniforms, bounded
/// away from zero so every component genuinely participates).
pub fn random_probabilities<R: Rng>(k: usize, rng: &mut R) -> Vec<f64> {
    let mut w: Vec<f64> = (0..k).map(|_| 0.05 + rng.random::<f64>()).collect();
    let total: f64 = w.iter().sum();
    for x in &mut w {
        *x /= total;
    }
    w
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mat::hs_norm;

    #[test]
    fn haar_unitary_is_unitary() {
        let mut rng = rng_from(42);
        for n in 2..=5 {
            let u = haar_unitary(n, &mut rng);
            let residual = hs_norm(&(&u * u.adjoint() - ComplexMatrix::identity(n, n)));
            assert!(residual < 1e-12, "UU† residual {residual} at n={n}");
        }
    }

    #[test]
    fn generators_are_deterministic_per_seed() {
        let a = ginibre(3, &mut rng_from(7));
        let b = ginibre(3, &mut rng_from(7));
        assert_eq!(a, b);
        assert_ne!(a, ginibre(3, &mut rng_from(8)));
    }

    #[test]
    fn derive_seed_separates_indices() {
        let s: Vec<u64> = (0..100).map(|i| derive_seed(12345, i)).collect();
        let mut dedup = s.clone();
        dedup.sort_unstable();
        dedup.dedup();
        assert_eq!(dedup.len(), s.len());
    }

    #[test]
    fn traceless_samples_are_traceless_hermitian() {
        let mut rng = rng_from(9);
        for n in 2..=4 {
            let a = random_traceless_hermitian(n, &mut rng);
            assert!(a.trace().norm() < 1e-13);
            assert!(hs_norm(&(&a - a.adjoint())) < 1e-13);
        }
    }

    #[test]
    fn probabilities_sum_to_one() {
        let mut rng = rng_from(1);
        let w = random_probabilities(6, &mut rng);
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(w.iter().all(|&x| x > 0.0));
    }
}
