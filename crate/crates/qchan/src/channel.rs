//! Quantum channels in Kraus form.
//!
//! A channel is a finite list of Kraus operators {Vᵢ} with Σ Vᵢ†Vᵢ = I. The
//! same list presents both pictures at once: the Heisenberg map
//! T(A) = Σ Vᵢ†AVᵢ (unital) and the Schrödinger map T̂(A) = Σ VᵢAVᵢ†
//! (trace-preserving), which are mutual adjoints under ⟨A,B⟩ = tr(A†B).
//!
//! Besides construction and application this module provides the Choi matrix
//! and its inverse (Kraus canonicalization), bistochasticity certification,
//! superoperator matrices over the Hermitian operator basis, tensor products
//! and composition, and two exactly solvable test families (depolarizing,
//! random unitary mixtures).

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::basis::hermitian_basis;
use crate::error::{Error, Result};
use crate::mat::{
    ensure_finite, ensure_square, hermitian_eigendecomposition, hs_norm, identity, ComplexMatrix,
    Tolerances,
};
use crate::sample;

/// A quantum channel presented by its Kraus operators.
#[derive(Debug, Clone)]
pub struct KrausChannel {
    dim: usize,
    kraus: Vec<ComplexMatrix>,
}

/// Structural certificate: complete positivity, trace preservation and
/// bistochasticity, with the residuals that back the verdicts.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChannelCertificate {
    pub is_cptp: bool,
    pub is_bistochastic: bool,
    pub choi_min_eigenvalue: f64,
    /// ‖Σ Vᵢ†Vᵢ − I‖₂ (unitality of T ⇔ trace preservation of T̂).
    pub unitality_residual: f64,
    /// ‖Σ VᵢVᵢ† − I‖₂ (unitality of T̂ ⇔ trace preservation of T).
    pub dual_unitality_residual: f64,
}

impl KrausChannel {
    /// Validates and wraps a Kraus operator list.
    ///
    /// Requires a nonempty list of equal-dimension square finite matrices
    /// with Σ Vᵢ†Vᵢ = I within `tol_fix`.
    pub fn new(kraus: Vec<ComplexMatrix>, tol: &Tolerances) -> Result<Self> {
        if kraus.is_empty() {
            return Err(Error::EmptyKraus);
        }
        let dim = ensure_square(&kraus[0])?;
        for v in &kraus {
            let d = ensure_square(v)?;
            if d != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: d,
                });
            }
            ensure_finite(v)?;
        }
        let ch = KrausChannel { dim, kraus };
        let residual = ch.unitality_residual();
        if residual > tol.tol_fix {
            return Err(Error::NotTracePreserving {
                residual,
                tol: tol.tol_fix,
            });
        }
        Ok(ch)
    }

    /// The identity channel on M_N (single Kraus operator I).
    pub fn identity_channel(n: usize) -> Self {
        KrausChannel {
            dim: n,
            kraus: vec![identity(n)],
        }
    }

    /// Conjugation by a single unitary: T̂(ρ) = UρU†.
    pub fn unitary(u: ComplexMatrix, tol: &Tolerances) -> Result<Self> {
        KrausChannel::new(vec![u], tol)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kraus_ops(&self) -> &[ComplexMatrix] {
        &self.kraus
    }

    /// ‖Σ Vᵢ†Vᵢ − I‖₂.
    pub fn unitality_residual(&self) -> f64 {
        let mut sum = ComplexMatrix::zeros(self.dim, self.dim);
        for v in &self.kraus {
            sum += v.adjoint() * v;
        }
        hs_norm(&(sum - identity(self.dim)))
    }

    /// ‖Σ VᵢVᵢ† − I‖₂.
    pub fn dual_unitality_residual(&self) -> f64 {
        let mut sum = ComplexMatrix::zeros(self.dim, self.dim);
        for v in &self.kraus {
            sum += v * v.adjoint();
        }
        hs_norm(&(sum - identity(self.dim)))
    }

    /// Heisenberg picture: T(A) = Σ Vᵢ†AVᵢ.
    pub fn apply_heisenberg(&self, a: &ComplexMatrix) -> Result<ComplexMatrix> {
        self.check_dim(a)?;
        let mut out = ComplexMatrix::zeros(self.dim, self.dim);
        for v in &self.kraus {
            out += v.adjoint() * a * v;
        }
        Ok(out)
    }

    /// Schrödinger picture: T̂(A) = Σ VᵢAVᵢ†.
    pub fn apply_schrodinger(&self, a: &ComplexMatrix) -> Result<ComplexMatrix> {
        self.check_dim(a)?;
        let mut out = ComplexMatrix::zeros(self.dim, self.dim);
        for v in &self.kraus {
            out += v * a * v.adjoint();
        }
        Ok(out)
    }

    /// |tr[T̂(A)B] − tr[A·T(B)]|, zero in exact arithmetic by duality.
    pub fn duality_residual(&self, a: &ComplexMatrix, b: &ComplexMatrix) -> Result<f64> {
        let lhs = (self.apply_schrodinger(a)? * b).trace();
        let rhs = (a * self.apply_heisenberg(b)?).trace();
        Ok((lhs - rhs).norm())
    }

    /// Choi matrix (T̂ ⊗ id)(Σ_jk E_jk ⊗ E_jk), an N²×N² matrix.
    ///
    /// PSD for any Kraus-presented channel; its partial trace over the first
    /// factor equals I exactly when the channel is trace-preserving.
    pub fn choi_matrix(&self) -> ComplexMatrix {
        let n = self.dim;
        let mut choi = ComplexMatrix::zeros(n * n, n * n);
        for j in 0..n {
            for k in 0..n {
                let mut e = ComplexMatrix::zeros(n, n);
                e[(j, k)] = Complex64::new(1.0, 0.0);
                let img = self
                    .apply_schrodinger(&e)
                    .expect("dimension is consistent by construction");
                choi += img.kronecker(&e);
            }
        }
        choi
    }

    /// Composition: the returned channel applies `inner` first, then `self`,
    /// in the Schrödinger picture. Kraus operators are the pairwise products.
    pub fn compose(&self, inner: &KrausChannel) -> Result<KrausChannel> {
        if self.dim != inner.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: inner.dim,
            });
        }
        let kraus = self
            .kraus
            .iter()
            .flat_map(|a| inner.kraus.iter().map(move |b| a * b))
            .collect();
        Ok(KrausChannel {
            dim: self.dim,
            kraus,
        })
    }

    /// Tensor product channel with Kraus operators {Vᵢ ⊗ Wⱼ}.
    pub fn tensor_product(&self, other: &KrausChannel) -> KrausChannel {
        let kraus: Vec<ComplexMatrix> = self
            .kraus
            .iter()
            .flat_map(|v| other.kraus.iter().map(move |w| v.kronecker(w)))
            .collect();
        KrausChannel {
            dim: self.dim * other.dim,
            kraus,
        }
    }

    /// Convex mixture: T̂ = (1−w)·T̂_a + w·T̂_b, by weighting Kraus lists.
    pub fn convex_mixture(w: f64, a: &KrausChannel, b: &KrausChannel) -> Result<KrausChannel> {
        if !(0.0..=1.0).contains(&w) {
            return Err(Error::InvalidParameter(format!(
                "mixture weight {w} outside [0,1]"
            )));
        }
        if a.dim != b.dim {
            return Err(Error::DimensionMismatch {
                expected: a.dim,
                got: b.dim,
            });
        }
        let mut kraus = Vec::with_capacity(a.kraus.len() + b.kraus.len());
        let (wa, wb) = ((1.0 - w).sqrt(), w.sqrt());
        if wa > 0.0 {
            kraus.extend(a.kraus.iter().map(|v| v.scale(wa)));
        }
        if wb > 0.0 {
            kraus.extend(b.kraus.iter().map(|v| v.scale(wb)));
        }
        Ok(KrausChannel { dim: a.dim, kraus })
    }

    /// Structural certificate with verdicts and residuals.
    pub fn certify(&self, tol: &Tolerances) -> ChannelCertificate {
        let unitality_residual = self.unitality_residual();
        let dual_unitality_residual = self.dual_unitality_residual();
        let choi = self.choi_matrix();
        let choi_min_eigenvalue = hermitian_eigendecomposition(&choi, tol)
            .map(|e| e.eigenvalues.first().copied().unwrap_or(0.0))
            .unwrap_or(f64::NEG_INFINITY);
        let is_cptp =
            choi_min_eigenvalue >= -tol.tol_psd && unitality_residual <= tol.tol_fix;
        let is_bistochastic = is_cptp && dual_unitality_residual <= tol.tol_fix;
        ChannelCertificate {
            is_cptp,
            is_bistochastic,
            choi_min_eigenvalue,
            unitality_residual,
            dual_unitality_residual,
        }
    }

    /// Canonical Kraus presentation (≤ N² operators) via the Choi matrix.
    pub fn canonicalize(&self, tol: &Tolerances) -> Result<KrausChannel> {
        kraus_from_choi(&self.choi_matrix(), tol)
    }

    /// Superoperator matrix of T̂ over the Hermitian operator basis:
    /// matrix[a][b] = ⟨B_a, T̂(B_b)⟩.
    ///
    /// Entries are real because channels preserve Hermiticity; a max
    /// imaginary part beyond `tol_herm` is rejected.
    pub fn superoperator_schrodinger(&self, tol: &Tolerances) -> Result<Superoperator> {
        self.superoperator(tol, true)
    }

    /// Superoperator matrix of T: the transpose relation to T̂ (mutual
    /// adjointness under ⟨·,·⟩) holds entrywise.
    pub fn superoperator_heisenberg(&self, tol: &Tolerances) -> Result<Superoperator> {
        self.superoperator(tol, false)
    }

    fn superoperator(&self, tol: &Tolerances, schrodinger: bool) -> Result<Superoperator> {
        let n = self.dim;
        let basis = hermitian_basis(n);
        let mut matrix = DMatrix::<f64>::zeros(n * n, n * n);
        let mut max_imag = 0.0f64;
        for (b, bb) in basis.iter().enumerate() {
            let img = if schrodinger {
                self.apply_schrodinger(bb)?
            } else {
                self.apply_heisenberg(bb)?
            };
            for (a, ba) in basis.iter().enumerate() {
                let entry = ba.dotc(&img);
                max_imag = max_imag.max(entry.im.abs());
                matrix[(a, b)] = entry.re;
            }
        }
        if max_imag > tol.tol_herm {
            return Err(Error::SuperoperatorNotReal { max_imag });
        }
        Ok(Superoperator {
            dim: n,
            basis,
            matrix,
            max_imag,
        })
    }

    fn check_dim(&self, a: &ComplexMatrix) -> Result<()> {
        let d = ensure_square(a)?;
        if d != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: d,
            });
        }
        Ok(())
    }
}

/// Real matrix of a channel over the Hermitian operator basis
/// (normalized identity first, then the traceless Gell-Mann families).
///
/// For a bistochastic channel the matrix is block diagonal: first row and
/// column (1, 0, …, 0), and the (N²−1)×(N²−1) traceless block carries the
/// whole contraction story.
#[derive(Debug, Clone)]
pub struct Superoperator {
    dim: usize,
    basis: Vec<ComplexMatrix>,
    matrix: DMatrix<f64>,
    max_imag: f64,
}

impl Superoperator {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// The full (N²)×(N²) real matrix.
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// The operator basis the matrix is written in.
    pub fn basis(&self) -> &[ComplexMatrix] {
        &self.basis
    }

    /// Largest imaginary part discarded when the matrix was built.
    pub fn max_imag(&self) -> f64 {
        self.max_imag
    }

    /// The (N²−1)×(N²−1) block acting on traceless Hermitian matrices.
    pub fn traceless_block(&self) -> DMatrix<f64> {
        let m = self.dim * self.dim - 1;
        self.matrix.view((1, 1), (m, m)).into_owned()
    }

    /// ‖M − Mᵀ‖₂; zero exactly when the channel is self-adjoint.
    pub fn symmetry_residual(&self) -> f64 {
        (&self.matrix - self.matrix.transpose()).norm()
    }

    /// Residual of the bistochastic block form: how far the first row and
    /// column are from (1, 0, …, 0).
    pub fn block_form_residual(&self) -> f64 {
        let m = self.dim * self.dim;
        let mut sq = (self.matrix[(0, 0)] - 1.0).powi(2);
        for i in 1..m {
            sq += self.matrix[(0, i)].powi(2) + self.matrix[(i, 0)].powi(2);
        }
        sq.sqrt()
    }
}

/// Partial trace over the first tensor factor of an (nm)×(nm) matrix with
/// first-factor dimension `n`: result is m×m.
pub fn partial_trace_first(c: &ComplexMatrix, n: usize) -> Result<ComplexMatrix> {
    let total = ensure_square(c)?;
    if n == 0 || total % n != 0 {
        return Err(Error::InvalidParameter(format!(
            "cannot split dimension {total} with first factor {n}"
        )));
    }
    let m = total / n;
    let mut out = ComplexMatrix::zeros(m, m);
    for a in 0..n {
        for i in 0..m {
            for j in 0..m {
                out[(i, j)] += c[(a * m + i, a * m + j)];
            }
        }
    }
    Ok(out)
}

/// Reshape a length-N² vector into an N×N matrix, row by row.
///
/// This is the inverse of the vectorization the Choi construction induces:
/// eigenvectors of (T̂ ⊗ id)(Σ E_jk ⊗ E_jk) reshape to Kraus operators in
/// row-major order.
fn unvec_row(v: nalgebra::DVectorView<Complex64>, n: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(n, n, |r, c| v[r * n + c])
}

/// Extracts a canonical Kraus presentation from a Choi matrix.
///
/// Each eigenpair (λ, v) with λ > tol_psd yields the operator √λ·unvec(v);
/// at most N² operators survive. Rejects non-PSD input or a Choi whose
/// partial trace over the first factor is not I (not trace-preserving).
pub fn kraus_from_choi(choi: &ComplexMatrix, tol: &Tolerances) -> Result<KrausChannel> {
    let total = ensure_square(choi)?;
    let n = (total as f64).sqrt().round() as usize;
    if n * n != total {
        return Err(Error::InvalidParameter(format!(
            "Choi dimension {total} is not a perfect square"
        )));
    }
    let eig = hermitian_eigendecomposition(choi, tol)?;
    if let Some(&min) = eig.eigenvalues.first() {
        if min < -tol.tol_psd {
            return Err(Error::NotPositiveSemidefinite {
                min_eig: min,
                tol: tol.tol_psd,
            });
        }
    }
    let pt = partial_trace_first(choi, n)?;
    let pt_residual = hs_norm(&(pt - identity(n)));
    if pt_residual > tol.tol_fix {
        return Err(Error::NotTracePreserving {
            residual: pt_residual,
            tol: tol.tol_fix,
        });
    }
    let mut kraus = Vec::new();
    for (idx, &lambda) in eig.eigenvalues.iter().enumerate() {
        if lambda > tol.tol_psd {
            let v = eig.eigenvectors.column(idx);
            kraus.push(unvec_row(v, n).scale(lambda.sqrt()));
        }
    }
    KrausChannel::new(kraus, tol)
}

/// Depolarizing channel T̂(ρ) = (1−p)ρ + p·tr(ρ)·I/N, presented by the N²
/// Weyl (shift/clock) unitaries with weights (1−p)+p/N² on the identity and
/// p/N² elsewhere. Bistochastic at every N and p.
pub fn make_depolarizing(n: usize, p: f64, tol: &Tolerances) -> Result<KrausChannel> {
    if n < 1 {
        return Err(Error::InvalidParameter("dimension must be ≥ 1".into()));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidParameter(format!(
            "depolarizing probability {p} outside [0,1]"
        )));
    }
    let shift = ComplexMatrix::from_fn(n, n, |r, c| {
        if r == (c + 1) % n {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    let omega = 2.0 * std::f64::consts::PI / n as f64;
    let clock = ComplexMatrix::from_fn(n, n, |r, c| {
        if r == c {
            Complex64::from_polar(1.0, omega * r as f64)
        } else {
            Complex64::new(0.0, 0.0)
        }
    });

    let uniform = p / (n * n) as f64;
    let mut kraus = Vec::new();
    let mut xa = identity(n);
    for a in 0..n {
        let mut w = xa.clone();
        for b in 0..n {
            let weight = if a == 0 && b == 0 {
                (1.0 - p) + uniform
            } else {
                uniform
            };
            if weight > 0.0 {
                kraus.push(w.scale(weight.sqrt()));
            }
            if b + 1 < n {
                w *= &clock;
            }
        }
        if a + 1 < n {
            xa = &shift * xa;
        }
    }
    KrausChannel::new(kraus, tol)
}

/// Random mixture of `k` Haar unitaries with random probability weights:
/// Kraus operators {√pᵢ·Uᵢ}. Bistochastic; deterministic for a fixed seed.
pub fn make_random_unitary_mixture(
    n: usize,
    k: usize,
    seed: u64,
    tol: &Tolerances,
) -> Result<KrausChannel> {
    if n < 1 {
        return Err(Error::InvalidParameter("dimension must be ≥ 1".into()));
    }
    if k < 1 {
        return Err(Error::InvalidParameter(
            "mixture needs at least one unitary".into(),
        ));
    }
    let mut rng = sample::rng_from(seed);
    let weights = sample::random_probabilities(k, &mut rng);
    let kraus = weights
        .iter()
        .map(|w| sample::haar_unitary(n, &mut rng).scale(w.sqrt()))
        .collect();
    KrausChannel::new(kraus, tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mat::{trace_norm, DensityMatrix};
    use crate::sample;
    use proptest::prelude::*;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    fn pauli(k: usize) -> ComplexMatrix {
        let z = Complex64::new(0.0, 0.0);
        let o = Complex64::new(1.0, 0.0);
        let i = Complex64::new(0.0, 1.0);
        match k {
            1 => ComplexMatrix::from_row_slice(2, 2, &[z, o, o, z]),
            2 => ComplexMatrix::from_row_slice(2, 2, &[z, -i, i, z]),
            3 => ComplexMatrix::from_row_slice(2, 2, &[o, z, z, -o]),
            _ => identity(2),
        }
    }

    fn diag(entries: &[f64]) -> ComplexMatrix {
        ComplexMatrix::from_fn(entries.len(), entries.len(), |r, c| {
            if r == c {
                Complex64::new(entries[r], 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
    }

    fn amplitude_damping(eta: f64) -> KrausChannel {
        let z = Complex64::new(0.0, 0.0);
        let k0 = ComplexMatrix::from_row_slice(
            2,
            2,
            &[
                Complex64::new(1.0, 0.0),
                z,
                z,
                Complex64::new((1.0 - eta).sqrt(), 0.0),
            ],
        );
        let k1 = ComplexMatrix::from_row_slice(
            2,
            2,
            &[z, Complex64::new(eta.sqrt(), 0.0), z, z],
        );
        KrausChannel::new(vec![k0, k1], &tol()).unwrap()
    }

    #[test]
    fn rejects_incomplete_kraus_list() {
        let v = diag(&[1.0, 0.0]);
        assert!(matches!(
            KrausChannel::new(vec![v], &tol()),
            Err(Error::NotTracePreserving { .. })
        ));
        assert!(matches!(
            KrausChannel::new(vec![], &tol()),
            Err(Error::EmptyKraus)
        ));
    }

    #[test]
    fn heisenberg_examples() {
        let id = KrausChannel::identity_channel(2);
        let a = pauli(1) + pauli(3).scale(0.5);
        assert!(hs_norm(&(id.apply_heisenberg(&a).unwrap() - &a)) < 1e-14);

        let mut rng = sample::rng_from(2);
        let u = sample::haar_unitary(3, &mut rng);
        let ch = KrausChannel::unitary(u.clone(), &tol()).unwrap();
        let x = sample::random_traceless_hermitian(3, &mut rng);
        let expected = u.adjoint() * &x * &u;
        assert!(hs_norm(&(ch.apply_heisenberg(&x).unwrap() - expected)) < 1e-12);

        let dep = make_depolarizing(2, 0.5, &tol()).unwrap();
        let img = dep.apply_heisenberg(&pauli(3)).unwrap();
        assert!(hs_norm(&(img - pauli(3).scale(0.5))) < 1e-12);
        // Unital.
        assert!(hs_norm(&(dep.apply_heisenberg(&identity(2)).unwrap() - identity(2))) < 1e-12);
    }

    #[test]
    fn schrodinger_examples() {
        let dep1 = make_depolarizing(2, 1.0, &tol()).unwrap();
        let img = dep1.apply_schrodinger(&pauli(3)).unwrap();
        assert!(hs_norm(&img) < 1e-12, "fully depolarizing kills traceless");
        let sigma = diag(&[1.0, 0.0]);
        let img = dep1.apply_schrodinger(&sigma).unwrap();
        assert!(hs_norm(&(img - identity(2).scale(0.5))) < 1e-12);

        let dep = make_depolarizing(2, 0.5, &tol()).unwrap();
        let img = dep.apply_schrodinger(&sigma).unwrap();
        assert!(hs_norm(&(img - diag(&[0.75, 0.25]))) < 1e-12);
    }

    #[test]
    fn duality_examples() {
        let id = KrausChannel::identity_channel(2);
        assert!(id.duality_residual(&pauli(1), &pauli(2)).unwrap() < 1e-14);

        let dep = make_depolarizing(2, 0.3, &tol()).unwrap();
        assert!(dep.duality_residual(&identity(2), &identity(2)).unwrap() < 1e-13);
        assert!(
            dep.duality_residual(&diag(&[1.0, 0.0]), &pauli(1)).unwrap() < 1e-12,
            "duality residual too large"
        );
    }

    #[test]
    fn choi_of_identity_is_rank_one() {
        let id = KrausChannel::identity_channel(2);
        let choi = id.choi_matrix();
        let eig = hermitian_eigendecomposition(&choi, &tol()).unwrap();
        let expected = [0.0, 0.0, 0.0, 2.0];
        for (got, want) in eig.eigenvalues.iter().zip(expected) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn choi_of_fully_depolarizing_is_maximally_mixed() {
        let dep = make_depolarizing(2, 1.0, &tol()).unwrap();
        let choi = dep.choi_matrix();
        assert!(hs_norm(&(choi - identity(4).scale(0.5))) < 1e-12);
    }

    #[test]
    fn choi_matches_rank_one_sum_of_vectorized_kraus() {
        // Independent route: Σᵢ vec(Vᵢ) vec(Vᵢ)† with row-major vec.
        let ch = make_random_unitary_mixture(3, 4, 9, &tol()).unwrap();
        let n = ch.dim();
        let mut direct = ComplexMatrix::zeros(n * n, n * n);
        for v in ch.kraus_ops() {
            let w = nalgebra::DVector::from_fn(n * n, |i, _| v[(i / n, i % n)]);
            direct += &w * w.adjoint();
        }
        assert!(hs_norm(&(ch.choi_matrix() - direct)) < 1e-12);
    }

    #[test]
    fn choi_is_psd_and_unit_partial_trace() {
        let ch = make_random_unitary_mixture(2, 3, 4, &tol()).unwrap();
        let choi = ch.choi_matrix();
        let eig = hermitian_eigendecomposition(&choi, &tol()).unwrap();
        assert!(eig.eigenvalues[0] > -tol().tol_psd);
        let pt = partial_trace_first(&choi, 2).unwrap();
        assert!(hs_norm(&(pt - identity(2))) < 1e-12);
    }

    #[test]
    fn kraus_from_choi_round_trips() {
        // Unitary channel: rank-1 Choi, single reconstructed operator.
        let mut rng = sample::rng_from(21);
        let u = sample::haar_unitary(2, &mut rng);
        let ch = KrausChannel::unitary(u, &tol()).unwrap();
        let rec = kraus_from_choi(&ch.choi_matrix(), &tol()).unwrap();
        assert_eq!(rec.kraus_ops().len(), 1);
        for b in hermitian_basis(2) {
            let d = ch.apply_schrodinger(&b).unwrap() - rec.apply_schrodinger(&b).unwrap();
            assert!(hs_norm(&d) < 1e-9);
        }

        // Depolarizing p=0.5: four operators, action reproduced on a basis.
        let dep = make_depolarizing(2, 0.5, &tol()).unwrap();
        let rec = kraus_from_choi(&dep.choi_matrix(), &tol()).unwrap();
        assert_eq!(rec.kraus_ops().len(), 4);
        for b in hermitian_basis(2) {
            let d = dep.apply_schrodinger(&b).unwrap() - rec.apply_schrodinger(&b).unwrap();
            assert!(hs_norm(&d) < 1e-9);
        }
    }

    #[test]
    fn kraus_from_choi_rejects_bad_input() {
        assert!(kraus_from_choi(&pauli(3), &tol()).is_err());
        // Wrong partial trace: Choi of a non-trace-preserving map.
        let c = identity(4).scale(0.3);
        assert!(matches!(
            kraus_from_choi(&c, &tol()),
            Err(Error::NotTracePreserving { .. })
        ));
    }

    #[test]
    fn certify_examples() {
        let id = KrausChannel::identity_channel(2);
        let cert = id.certify(&tol());
        assert!(cert.is_cptp && cert.is_bistochastic);

        let ad = amplitude_damping(0.5);
        let cert = ad.certify(&tol());
        assert!(cert.is_cptp);
        assert!(!cert.is_bistochastic);
        assert!(cert.dual_unitality_residual > 0.1);

        let mixed = KrausChannel::convex_mixture(
            0.5,
            &KrausChannel::identity_channel(2),
            &KrausChannel::unitary(pauli(1), &tol()).unwrap(),
        )
        .unwrap();
        let cert = mixed.certify(&tol());
        assert!(cert.is_cptp && cert.is_bistochastic);
    }

    #[test]
    fn superoperator_of_depolarizing_is_diagonal() {
        let dep = make_depolarizing(2, 0.3, &tol()).unwrap();
        let sup = dep.superoperator_schrodinger(&tol()).unwrap();
        let expected = DMatrix::<f64>::from_diagonal(&nalgebra::DVector::from_vec(vec![
            1.0, 0.7, 0.7, 0.7,
        ]));
        assert!((sup.matrix() - expected).norm() < 1e-12);
        assert!(sup.block_form_residual() < 1e-12);
    }

    #[test]
    fn superoperator_of_pauli_x_conjugation() {
        let ch = KrausChannel::unitary(pauli(1), &tol()).unwrap();
        let sup = ch.superoperator_schrodinger(&tol()).unwrap();
        let expected = DMatrix::<f64>::from_diagonal(&nalgebra::DVector::from_vec(vec![
            1.0, 1.0, -1.0, -1.0,
        ]));
        assert!((sup.matrix() - expected).norm() < 1e-12);
    }

    #[test]
    fn heisenberg_superoperator_is_transpose() {
        let ch = make_random_unitary_mixture(3, 4, 17, &tol()).unwrap();
        let s = ch.superoperator_schrodinger(&tol()).unwrap();
        let h = ch.superoperator_heisenberg(&tol()).unwrap();
        assert!((h.matrix() - s.matrix().transpose()).norm() < 1e-9);

        let id = KrausChannel::identity_channel(2);
        let s = id.superoperator_schrodinger(&tol()).unwrap();
        assert!((s.matrix() - DMatrix::<f64>::identity(4, 4)).norm() < 1e-13);
    }

    #[test]
    fn tensor_product_acts_factorwise() {
        let id2 = KrausChannel::identity_channel(2);
        let prod = id2.tensor_product(&id2);
        let x = sample::random_traceless_hermitian(4, &mut sample::rng_from(3));
        assert!(hs_norm(&(prod.apply_schrodinger(&x).unwrap() - &x)) < 1e-12);

        let dep = make_depolarizing(2, 0.5, &tol()).unwrap();
        let z3 = pauli(3).kronecker(&pauli(3));
        let p1 = dep.tensor_product(&id2);
        assert!(hs_norm(&(p1.apply_schrodinger(&z3).unwrap() - z3.scale(0.5))) < 1e-12);

        let dep3 = make_depolarizing(2, 0.3, &tol()).unwrap();
        let p2 = dep.tensor_product(&dep3);
        assert!(hs_norm(&(p2.apply_schrodinger(&z3).unwrap() - z3.scale(0.35))) < 1e-12);
    }

    #[test]
    fn depolarizing_matches_affine_form() {
        let dep = make_depolarizing(3, 0.4, &tol()).unwrap();
        let sigma = diag(&[1.0, 0.0, 0.0]);
        let img = dep.apply_schrodinger(&sigma).unwrap();
        let expected = diag(&[0.6 + 0.4 / 3.0, 0.4 / 3.0, 0.4 / 3.0]);
        assert!(hs_norm(&(img - expected)) < 1e-12);

        // p=0 acts as the identity on a basis.
        let dep0 = make_depolarizing(3, 0.0, &tol()).unwrap();
        assert_eq!(dep0.kraus_ops().len(), 1);
        for b in hermitian_basis(3) {
            assert!(hs_norm(&(dep0.apply_schrodinger(&b).unwrap() - &b)) < 1e-12);
        }

        // p=1 maps every state to I/3.
        let dep1 = make_depolarizing(3, 1.0, &tol()).unwrap();
        let mut rng = sample::rng_from(5);
        let sigma = sample::random_density(3, &mut rng);
        let img = dep1.apply_schrodinger(sigma.matrix()).unwrap();
        assert!(hs_norm(&(img - identity(3).scale(1.0 / 3.0))) < 1e-12);
    }

    #[test]
    fn depolarizing_rejects_bad_p() {
        assert!(make_depolarizing(2, 1.5, &tol()).is_err());
        assert!(make_depolarizing(2, -0.1, &tol()).is_err());
    }

    #[test]
    fn unitary_mixture_is_bistochastic_and_deterministic() {
        let a = make_random_unitary_mixture(3, 5, 7, &tol()).unwrap();
        let b = make_random_unitary_mixture(3, 5, 7, &tol()).unwrap();
        for (x, y) in a.kraus_ops().iter().zip(b.kraus_ops()) {
            assert_eq!(x, y, "same seed must give identical Kraus lists");
        }
        let cert = a.certify(&tol());
        assert!(cert.is_bistochastic);
        assert!(cert.dual_unitality_residual < tol().tol_fix);

        // k = 1 is a unitary channel.
        let u = make_random_unitary_mixture(2, 1, 3, &tol()).unwrap();
        assert_eq!(u.kraus_ops().len(), 1);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn trace_norm_never_expands(seed in 0u64..500) {
            let mut rng = sample::rng_from(seed.wrapping_add(400));
            let n = 2 + (seed % 3) as usize;
            let ch = make_random_unitary_mixture(n, 3, seed, &tol()).unwrap();
            let a = sample::random_traceless_hermitian(n, &mut rng)
                + identity(n).scale(0.1);
            let before = trace_norm(&a).unwrap();
            let after = trace_norm(&ch.apply_schrodinger(&a).unwrap()).unwrap();
            prop_assert!(after <= before + tol().tol_fix);
        }

        #[test]
        fn hs_norm_never_expands_for_bistochastic(seed in 0u64..500) {
            let mut rng = sample::rng_from(seed.wrapping_add(900));
            let n = 2 + (seed % 3) as usize;
            let ch = make_random_unitary_mixture(n, 4, seed ^ 0xb1, &tol()).unwrap();
            let a = sample::ginibre(n, &mut rng);
            let a = &a + a.adjoint();
            prop_assert!(hs_norm(&ch.apply_heisenberg(&a).unwrap()) <= hs_norm(&a) + tol().tol_fix);
            prop_assert!(hs_norm(&ch.apply_schrodinger(&a).unwrap()) <= hs_norm(&a) + tol().tol_fix);
        }

        #[test]
        fn duality_residual_is_negligible(seed in 0u64..500) {
            let mut rng = sample::rng_from(seed.wrapping_add(50));
            let n = 2 + (seed % 3) as usize;
            let ch = make_random_unitary_mixture(n, 3, seed ^ 0x7, &tol()).unwrap();
            let a = sample::ginibre(n, &mut rng);
            let b = sample::ginibre(n, &mut rng);
            let scale = 1.0 + hs_norm(&a) * hs_norm(&b);
            prop_assert!(ch.duality_residual(&a, &b).unwrap() <= tol().tol_fix * scale);
        }

        #[test]
        fn composition_superoperator_is_matrix_product(seed in 0u64..200) {
            let a = make_random_unitary_mixture(2, 3, seed, &tol()).unwrap();
            let b = make_depolarizing(2, 0.25, &tol()).unwrap();
            let comp = a.compose(&b).unwrap();
            let ma = a.superoperator_schrodinger(&tol()).unwrap();
            let mb = b.superoperator_schrodinger(&tol()).unwrap();
            let mc = comp.superoperator_schrodinger(&tol()).unwrap();
            prop_assert!((mc.matrix() - ma.matrix() * mb.matrix()).norm() < 1e-9);
        }

        #[test]
        fn entropy_never_decreases_under_bistochastic(seed in 0u64..300) {
            let mut rng = sample::rng_from(seed.wrapping_add(7000));
            let n = 2 + (seed % 2) as usize;
            let ch = make_random_unitary_mixture(n, 4, seed ^ 0x33, &tol()).unwrap();
            let sigma = sample::random_density(n, &mut rng);
            let image = DensityMatrix::new(
                ch.apply_schrodinger(sigma.matrix()).unwrap(),
                &tol(),
            ).unwrap();
            let s0 = crate::mat::von_neumann_entropy(&sigma, &tol()).unwrap();
            let s1 = crate::mat::von_neumann_entropy(&image, &tol()).unwrap();
            prop_assert!(s1 >= s0 - 1e-9);
        }

        #[test]
        fn choi_round_trip_reproduces_action(seed in 0u64..200) {
            let n = 2 + (seed % 2) as usize;
            let ch = make_random_unitary_mixture(n, 3, seed ^ 0x5a, &tol()).unwrap();
            let rec = ch.canonicalize(&tol()).unwrap();
            prop_assert!(rec.kraus_ops().len() <= n * n);
            for b in hermitian_basis(n) {
                let d = ch.apply_schrodinger(&b).unwrap() - rec.apply_schrodinger(&b).unwrap();
                prop_assert!(hs_norm(&d) < 1e-8);
            }
        }
    }
}
