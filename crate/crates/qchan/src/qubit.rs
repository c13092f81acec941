//! Exact Bloch-sphere machinery for qubit channels.
//!
//! A qubit state is ρ = (I + Σ rⱼσⱼ)/2 with ‖r‖ ≤ 1. A bistochastic qubit
//! channel, written over the basis (I/√2, σ₁/√2, σ₂/√2, σ₃/√2), is block
//! diagonal 1 ⊕ M with M real 3×3; the singular values |ξⱼ| of M are the
//! scaling factors of the canonical diagonal form, the contraction rate is
//! C = ‖M‖, and the spectral gap satisfies 1−γ = ‖M‖². This gives the exact
//! path against which the generic optimizer and gap machinery are checked.

use nalgebra::Matrix3;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::KrausChannel;
use crate::error::{Error, Result};
use crate::mat::{ComplexMatrix, DensityMatrix, Tolerances};

/// Bloch coordinates of a qubit state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlochVector {
    pub r1: f64,
    pub r2: f64,
    pub r3: f64,
}

impl BlochVector {
    pub fn norm(&self) -> f64 {
        (self.r1 * self.r1 + self.r2 * self.r2 + self.r3 * self.r3).sqrt()
    }
}

/// Canonical form data of a bistochastic qubit channel: the real 3×3 Bloch
/// block M, its singular values in descending order, and C = ‖M‖.
///
/// The rotations U, V of the full canonical decomposition are not extracted;
/// every quantity downstream (C, γ, the entropy bounds) needs only the
/// singular values.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KingRuskaiForm {
    pub m: [[f64; 3]; 3],
    /// |ξⱼ| descending — the singular values of M.
    pub xi_abs: [f64; 3],
    /// Largest singular value of M: the exact trace-norm contraction rate.
    pub c_exact: f64,
}

fn pauli(k: usize) -> ComplexMatrix {
    let z = Complex64::new(0.0, 0.0);
    let o = Complex64::new(1.0, 0.0);
    let i = Complex64::new(0.0, 1.0);
    match k {
        1 => ComplexMatrix::from_row_slice(2, 2, &[z, o, o, z]),
        2 => ComplexMatrix::from_row_slice(2, 2, &[z, -i, i, z]),
        3 => ComplexMatrix::from_row_slice(2, 2, &[o, z, z, -o]),
        _ => ComplexMatrix::identity(2, 2),
    }
}

/// Bloch coordinates rⱼ = tr(σⱼ·σ) of a qubit state.
pub fn to_bloch(sigma: &DensityMatrix) -> Result<BlochVector> {
    if sigma.dim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            got: sigma.dim(),
        });
    }
    let r = |k: usize| (pauli(k) * sigma.matrix()).trace().re;
    Ok(BlochVector {
        r1: r(1),
        r2: r(2),
        r3: r(3),
    })
}

/// State (I + Σ rⱼσⱼ)/2 from Bloch coordinates with ‖r‖ ≤ 1 + tol_eig.
///
/// Vectors within tolerance outside the closed ball are rescaled onto it so
/// the PSD validation cannot trip on round-off.
pub fn from_bloch(r: &BlochVector, tol: &Tolerances) -> Result<DensityMatrix> {
    let norm = r.norm();
    if norm > 1.0 + tol.tol_eig {
        return Err(Error::InvalidParameter(format!(
            "Bloch vector norm {norm} exceeds 1"
        )));
    }
    let scale = if norm > 1.0 { 1.0 / norm } else { 1.0 };
    let mut mat = ComplexMatrix::identity(2, 2);
    for (k, c) in [(1, r.r1), (2, r.r2), (3, r.r3)] {
        mat += pauli(k).scale(c * scale);
    }
    DensityMatrix::new(mat.scale(0.5), tol)
}

/// Extracts the Bloch block of a bistochastic qubit channel.
///
/// M is the lower-right 3×3 block of T̂ over the Pauli basis; non-bistochastic
/// input (a nonzero first column below the top row) is rejected because the
/// block form requires unitality.
pub fn king_ruskai_form(ch: &KrausChannel, tol: &Tolerances) -> Result<KingRuskaiForm> {
    if ch.dim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            got: ch.dim(),
        });
    }
    let dual_residual = ch.dual_unitality_residual();
    if dual_residual > tol.tol_fix {
        return Err(Error::NotBistochastic {
            residual: dual_residual,
            tol: tol.tol_fix,
        });
    }
    let sup = ch.superoperator_schrodinger(tol)?;
    let full = sup.matrix();
    let mut m = [[0.0; 3]; 3];
    for r in 0..3 {
        for c in 0..3 {
            m[r][c] = full[(r + 1, c + 1)];
        }
    }
    let svd = Matrix3::from_fn(|r, c| m[r][c]).svd(false, false);
    let mut xi_abs = [0.0; 3];
    for (out, s) in xi_abs.iter_mut().zip(svd.singular_values.iter()) {
        *out = *s;
    }
    Ok(KingRuskaiForm {
        m,
        xi_abs,
        c_exact: xi_abs[0],
    })
}

/// Exact spectral gap γ = 1 − C² from the canonical form (1−γ = ‖M‖²).
pub fn qubit_gap_exact(form: &KingRuskaiForm) -> f64 {
    1.0 - form.c_exact * form.c_exact
}
