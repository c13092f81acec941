//! Ergodicity certification and spectral gaps.
//!
//! For a bistochastic channel the composite T∘T̂ is self-adjoint for the
//! Hilbert–Schmidt inner product and fixes the identity, so its spectrum is
//! real and, under ergodicity, contained in [0, 1−γ] ∪ {1}. The gap γ is read
//! off the traceless block of the superoperator product. Ergodicity itself is
//! decided two independent ways and cross-checked: the commutant of the Kraus
//! operators (fixed points of T are exactly the joint commutant when the
//! invariant state is invertible) and the eigenvalue-1 eigenspace of T̂.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::KrausChannel;
use crate::error::{Error, Result};
use crate::mat::{real_matrix_eigenvalues, ComplexMatrix, Tolerances};

/// Relative threshold below which a singular value counts as zero when
/// computing the commutant nullity (scale-invariant rank decision).
pub const RANK_REL_TOL: f64 = 1e-8;

/// Spectral certificate of a bistochastic channel.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectralReport {
    pub is_ergodic: bool,
    /// Dimension of {X : VᵢX = XVᵢ for all i}.
    pub commutant_dim: usize,
    /// Dimension of the eigenvalue-1 eigenspace of T̂.
    pub fixed_space_dim: usize,
    /// γ, the spectral gap of T∘T̂ on traceless matrices.
    pub gap_gamma: f64,
    /// 1−γ, the largest traceless eigenvalue of T∘T̂.
    pub one_minus_gamma: f64,
    /// Largest modulus among eigenvalues of T̂ after removing the simple
    /// eigenvalue 1.
    pub kappa: f64,
    /// Full spectrum of the symmetrized T∘T̂ superoperator, ascending.
    pub eigenvalues_tthat: Vec<f64>,
    /// ‖P − Pᵀ‖₂ of the T∘T̂ matrix before symmetrization (round-off
    /// diagnostic; the composite is self-adjoint in exact arithmetic).
    pub tthat_asymmetry_residual: f64,
}

fn require_bistochastic(ch: &KrausChannel, tol: &Tolerances) -> Result<()> {
    let residual = ch.dual_unitality_residual();
    if residual > tol.tol_fix {
        return Err(Error::NotBistochastic {
            residual,
            tol: tol.tol_fix,
        });
    }
    Ok(())
}

/// Dimension of the joint commutant {X : VᵢX = XVᵢ ∀i}, computed as the
/// nullity of the stacked commutator operator acting on vectorized X.
///
/// Requires a bistochastic channel: the identification of T's fixed points
/// with the commutant needs an invertible invariant state, here I/N.
pub fn commutant_dimension(ch: &KrausChannel, tol: &Tolerances) -> Result<usize> {
    require_bistochastic(ch, tol)?;
    let n = ch.dim();
    let n2 = n * n;
    let eye = ComplexMatrix::identity(n, n);
    let k = ch.kraus_ops().len();

    // Row-major vectorization: vec(VX − XV) = (V⊗I − I⊗Vᵀ)·vec(X).
    let mut stacked = ComplexMatrix::zeros(k * n2, n2);
    for (i, v) in ch.kraus_ops().iter().enumerate() {
        let block = v.kronecker(&eye) - eye.kronecker(&v.transpose());
        stacked.view_mut((i * n2, 0), (n2, n2)).copy_from(&block);
    }
    let svd = stacked
        .try_svd(false, false, f64::EPSILON, 0)
        .ok_or(Error::DecompositionFailed)?;
    let sv_max = svd.singular_values.iter().copied().fold(0.0f64, f64::max);
    let threshold = RANK_REL_TOL * sv_max;
    let rank = svd
        .singular_values
        .iter()
        .filter(|&&s| s > threshold)
        .count();
    Ok(n2 - rank)
}

/// Dimension of the eigenvalue-1 eigenspace of T̂: the number of
/// superoperator eigenvalues within `tol_fix` of 1.
pub fn fixed_space_dimension(ch: &KrausChannel, tol: &Tolerances) -> Result<usize> {
    require_bistochastic(ch, tol)?;
    let sup = ch.superoperator_schrodinger(tol)?;
    let eigs = real_matrix_eigenvalues(sup.matrix())?;
    Ok(eigs
        .iter()
        .filter(|&&l| (l - Complex64::new(1.0, 0.0)).norm() <= tol.tol_fix)
        .count())
}

/// Whether I is, up to scalars, the only fixed point of T̂.
///
/// The commutant-based and eigenspace-based verdicts are both computed; a
/// disagreement is reported as a diagnostic failure rather than resolved by
/// fiat.
pub fn is_ergodic(ch: &KrausChannel, tol: &Tolerances) -> Result<bool> {
    let commutant = commutant_dimension(ch, tol)?;
    let fixed = fixed_space_dimension(ch, tol)?;
    if commutant != fixed {
        return Err(Error::VerdictMismatch(format!(
            "commutant dimension {commutant} vs eigenvalue-1 eigenspace dimension {fixed}"
        )));
    }
    Ok(commutant == 1)
}

/// Largest modulus among eigenvalues of T̂ after removing exactly one
/// eigenvalue at 1.
///
/// If a second eigenvalue lies within `tol_fix` of 1 the channel is declared
/// non-ergodic rather than guessing which one to drop.
pub fn kappa(ch: &KrausChannel, tol: &Tolerances) -> Result<f64> {
    require_bistochastic(ch, tol)?;
    let sup = ch.superoperator_schrodinger(tol)?;
    kappa_of_superoperator(sup.matrix(), tol)
}

fn kappa_of_superoperator(m: &DMatrix<f64>, tol: &Tolerances) -> Result<f64> {
    let eigs = real_matrix_eigenvalues(m)?;
    let one = Complex64::new(1.0, 0.0);
    let closest = (0..eigs.len())
        .min_by(|&i, &j| {
            (eigs[i] - one)
                .norm()
                .total_cmp(&(eigs[j] - one).norm())
        })
        .expect("superoperator has at least one eigenvalue");
    let mut kappa = 0.0f64;
    for (i, l) in eigs.iter().enumerate() {
        if i == closest {
            continue;
        }
        if (l - one).norm() <= tol.tol_fix {
            return Err(Error::NotErgodic {
                reason: format!("eigenvalue {l} duplicates the fixed-point eigenvalue 1"),
            });
        }
        kappa = kappa.max(l.norm());
    }
    Ok(kappa)
}

/// Full spectral analysis of an ergodic bistochastic channel.
///
/// Builds the matrix of T∘T̂ as the superoperator product, symmetrizes it
/// (the composite is HS-self-adjoint; floating-point composition breaks the
/// symmetry at round-off level), and reads γ from the largest eigenvalue of
/// the traceless block. Eigenvalues may poke out of [0,1] by at most
/// `tol_eig`; they are clamped, and anything worse is an invariant violation.
pub fn spectral_gap(ch: &KrausChannel, tol: &Tolerances) -> Result<SpectralReport> {
    require_bistochastic(ch, tol)?;
    let commutant_dim = commutant_dimension(ch, tol)?;
    let fixed_space_dim = fixed_space_dimension(ch, tol)?;
    if commutant_dim != fixed_space_dim {
        return Err(Error::VerdictMismatch(format!(
            "commutant dimension {commutant_dim} vs eigenvalue-1 eigenspace dimension {fixed_space_dim}"
        )));
    }
    if commutant_dim != 1 {
        return Err(Error::NotErgodic {
            reason: format!(
                "fixed-point space has dimension {commutant_dim}; the gap is only defined for ergodic channels"
            ),
        });
    }

    let sup_s = ch.superoperator_schrodinger(tol)?;
    let sup_h = ch.superoperator_heisenberg(tol)?;
    let product = sup_h.matrix() * sup_s.matrix();
    let asymmetry = (&product - product.transpose()).norm();
    let symmetrized = (&product + product.transpose()).scale(0.5);

    let n2 = ch.dim() * ch.dim();
    let block = symmetrized.view((1, 1), (n2 - 1, n2 - 1)).into_owned();
    let block_eigs = nalgebra::SymmetricEigen::try_new(block, f64::EPSILON, 0)
        .ok_or(Error::DecompositionFailed)?
        .eigenvalues;
    let full_eigs = nalgebra::SymmetricEigen::try_new(symmetrized, f64::EPSILON, 0)
        .ok_or(Error::DecompositionFailed)?
        .eigenvalues;

    let clamp = |l: f64| -> Result<f64> {
        if l < -tol.tol_eig || l > 1.0 + tol.tol_eig {
            return Err(Error::VerdictMismatch(format!(
                "T∘T̂ eigenvalue {l} outside [0,1] beyond tolerance"
            )));
        }
        Ok(l.clamp(0.0, 1.0))
    };

    let one_minus_gamma = clamp(
        block_eigs
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max),
    )?;
    let mut eigenvalues_tthat = full_eigs
        .iter()
        .map(|&l| clamp(l))
        .collect::<Result<Vec<f64>>>()?;
    eigenvalues_tthat.sort_by(f64::total_cmp);

    let kappa = kappa_of_superoperator(sup_s.matrix(), tol)?;

    Ok(SpectralReport {
        is_ergodic: true,
        commutant_dim,
        fixed_space_dim,
        gap_gamma: 1.0 - one_minus_gamma,
        one_minus_gamma,
        kappa,
        eigenvalues_tthat,
        tthat_asymmetry_residual: asymmetry,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{make_depolarizing, make_random_unitary_mixture, KrausChannel};

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    fn unitary_conj(u: ComplexMatrix) -> KrausChannel {
        KrausChannel::unitary(u, &tol()).unwrap()
    }

    fn pauli_x() -> ComplexMatrix {
        ComplexMatrix::from_row_slice(
            2,
            2,
            &[
                Complex64::new(0., 0.),
                Complex64::new(1., 0.),
                Complex64::new(1., 0.),
                Complex64::new(0., 0.),
            ],
        )
    }

    fn pauli_z() -> ComplexMatrix {
        ComplexMatrix::from_row_slice(
            2,
            2,
            &[
                Complex64::new(1., 0.),
                Complex64::new(0., 0.),
                Complex64::new(0., 0.),
                Complex64::new(-1., 0.),
            ],
        )
    }

    #[test]
    fn commutant_examples() {
        let id = KrausChannel::identity_channel(2);
        assert_eq!(commutant_dimension(&id, &tol()).unwrap(), 4);

        let dep = make_depolarizing(2, 0.5, &tol()).unwrap();
        assert_eq!(commutant_dimension(&dep, &tol()).unwrap(), 1);

        // diag(1, e^{iθ}) with θ an irrational multiple of π: commutant is
        // the diagonal algebra.
        let theta = std::f64::consts::SQRT_2;
        let u = ComplexMatrix::from_fn(2, 2, |r, c| {
            if r != c {
                Complex64::new(0.0, 0.0)
            } else if r == 0 {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::from_polar(1.0, theta)
            }
        });
        assert_eq!(commutant_dimension(&unitary_conj(u), &tol()).unwrap(), 2);
    }

    #[test]
    fn commutant_requires_bistochastic() {
        // Amplitude damping: trace-preserving but not unital.
        let z = Complex64::new(0.0, 0.0);
        let s = 0.5f64.sqrt();
        let k0 = ComplexMatrix::from_row_slice(
            2,
            2,
            &[Complex64::new(1.0, 0.0), z, z, Complex64::new(s, 0.0)],
        );
        let k1 = ComplexMatrix::from_row_slice(2, 2, &[z, Complex64::new(s, 0.0), z, z]);
        let ad = KrausChannel::new(vec![k0, k1], &tol()).unwrap();
        assert!(matches!(
            commutant_dimension(&ad, &tol()),
            Err(Error::NotBistochastic { .. })
        ));
    }

    #[test]
    fn ergodicity_examples() {
        assert!(!is_ergodic(&KrausChannel::identity_channel(2), &tol()).unwrap());
        let dep = make_depolarizing(2, 0.3, &tol()).unwrap();
        assert!(is_ergodic(&dep, &tol()).unwrap());
        let zconj = unitary_conj(pauli_z());
        assert!(!is_ergodic(&zconj, &tol()).unwrap());
    }

    #[test]
    fn gap_of_depolarizing_is_one_minus_rate_squared() {
        for &(n, p) in &[(2usize, 0.5f64), (3, 0.4)] {
            let dep = make_depolarizing(n, p, &tol()).unwrap();
            let report = spectral_gap(&dep, &tol()).unwrap();
            let expected = 1.0 - (1.0 - p) * (1.0 - p);
            assert!(
                (report.gap_gamma - expected).abs() < 1e-10,
                "N={n} p={p}: gamma {} vs {expected}",
                report.gap_gamma
            );
            assert!((report.gap_gamma + report.one_minus_gamma - 1.0).abs() < 1e-12);
            assert!(report.is_ergodic);
        }
    }

    #[test]
    fn gap_of_near_identity_mixture() {
        let eps = 0.01;
        let mix = KrausChannel::convex_mixture(
            eps,
            &KrausChannel::identity_channel(2),
            &make_depolarizing(2, 1.0, &tol()).unwrap(),
        )
        .unwrap();
        let report = spectral_gap(&mix, &tol()).unwrap();
        let expected = 1.0 - (1.0 - eps) * (1.0 - eps);
        assert!((report.gap_gamma - expected).abs() < 1e-10);
    }

    #[test]
    fn gap_refused_for_non_ergodic() {
        let id = KrausChannel::identity_channel(2);
        assert!(matches!(
            spectral_gap(&id, &tol()),
            Err(Error::NotErgodic { .. })
        ));
    }

    #[test]
    fn kappa_examples() {
        let dep = make_depolarizing(2, 0.5, &tol()).unwrap();
        assert!((kappa(&dep, &tol()).unwrap() - 0.5).abs() < 1e-10);

        // σ₁-conjugation ∘ depolarizing(0.2): spectrum {1, 0.8, −0.8, −0.8}.
        let xconj = unitary_conj(pauli_x());
        let comp = xconj
            .compose(&make_depolarizing(2, 0.2, &tol()).unwrap())
            .unwrap();
        assert!((kappa(&comp, &tol()).unwrap() - 0.8).abs() < 1e-10);

        let dep1 = make_depolarizing(3, 1.0, &tol()).unwrap();
        assert!(kappa(&dep1, &tol()).unwrap().abs() < 1e-10);
    }

    #[test]
    fn kappa_rejects_degenerate_fixed_space() {
        let id = KrausChannel::identity_channel(2);
        assert!(matches!(kappa(&id, &tol()), Err(Error::NotErgodic { .. })));
    }

    #[test]
    fn tthat_spectrum_within_unit_interval() {
        for seed in 0..20u64 {
            let ch = make_random_unitary_mixture(3, 4, seed, &tol()).unwrap();
            if !is_ergodic(&ch, &tol()).unwrap() {
                continue;
            }
            let report = spectral_gap(&ch, &tol()).unwrap();
            for &l in &report.eigenvalues_tthat {
                assert!((-1e-8..=1.0 + 1e-8).contains(&l));
            }
            assert!(report.tthat_asymmetry_residual < 1e-10);
            // Self-adjointness of T∘T̂: largest full eigenvalue is the
            // trivial 1.
            let last = *report.eigenvalues_tthat.last().unwrap();
            assert!((last - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn verdicts_agree_on_random_mixtures() {
        for seed in 0..50u64 {
            let ch = make_random_unitary_mixture(2, 3, seed ^ 0xabc, &tol()).unwrap();
            // is_ergodic errors out on any disagreement, so this loop is the
            // cross-check.
            let _ = is_ergodic(&ch, &tol()).unwrap();
        }
    }

    #[test]
    fn gap_bound_from_contraction_rate_on_depolarizing() {
        // γ ≥ 1 − C with C = 1−p exactly for depolarizing channels.
        for &p in &[0.1, 0.3, 0.5, 0.7, 0.9] {
            let dep = make_depolarizing(2, p, &tol()).unwrap();
            let report = spectral_gap(&dep, &tol()).unwrap();
            let c = 1.0 - p;
            assert!(report.gap_gamma >= 1.0 - c - 1e-8);
            // Self-adjoint channel: the sharper 1−γ ≤ C² also holds.
            assert!(report.one_minus_gamma <= c * c + 1e-8);
            assert!(report.kappa <= c.sqrt() + 1e-8);
        }
    }

    #[test]
    fn identity_has_full_fixed_space() {
        let id = KrausChannel::identity_channel(3);
        assert_eq!(fixed_space_dimension(&id, &tol()).unwrap(), 9);
    }
}
