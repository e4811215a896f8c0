//! Feedback unitaries that undo measurement back-action on the exact state.
//!
//! For the exact state ψ and its post-measurement branch ψ_n, each vector is
//! completed to a basis of eigenvectors of its projector |ψ⟩⟨ψ| using the
//! pattern φ_j = −c_j*|p⟩ + c_p*|j⟩ (pivot p, normally the first component).
//! Both bases are orthonormalized with ψ (resp. ψ_n) held fixed as the first
//! element, and U = Σ_m |φ_m⟩⟨φ̃_m| then maps ψ_n to ψ exactly. For N = 2 the
//! raw completion is already orthonormal and orthonormalization is a no-op.

use crate::error::{Error, Result};
use crate::qmath::{gram_schmidt_anchored, logm_unitary, CMatrix, CVector, StateVector, C64};

/// Below this modulus the first amplitude is not used as the pivot.
pub const PIVOT_THRESHOLD: f64 = 1e-8;

/// Eigenbasis of |ψ⟩⟨ψ| anchored on ψ.
#[derive(Clone, Debug)]
pub struct EigenbasisSet {
    pub anchor: StateVector,
    /// Index whose amplitude plays the role of c₁ in the completion.
    pub pivot: usize,
    /// φ_j for j ≥ 2, before orthonormalization.
    pub raw_completion: Vec<CVector>,
    /// Orthonormalized basis; element 0 is the anchor.
    pub orthonormal: Vec<StateVector>,
}

impl EigenbasisSet {
    /// The orthonormal basis as matrix columns.
    pub fn as_matrix(&self) -> CMatrix {
        let cols: Vec<CVector> = self.orthonormal.iter().map(|v| v.amplitudes().clone()).collect();
        CMatrix::from_columns(&cols)
    }
}

pub fn build_basis(psi: &StateVector) -> Result<EigenbasisSet> {
    let amps = psi.amplitudes();
    let dim = amps.len();
    let pivot = if amps[0].norm() >= PIVOT_THRESHOLD {
        0
    } else {
        amps.iter()
            .enumerate()
            .fold((0, 0.0), |best, (j, a)| if a.norm() > best.1 { (j, a.norm()) } else { best })
            .0
    };
    let raw_completion: Vec<CVector> = (0..dim)
        .filter(|&j| j != pivot)
        .map(|j| {
            let mut v = CVector::zeros(dim);
            v[pivot] = -amps[j].conj();
            v[j] = amps[pivot].conj();
            v
        })
        .collect();
    let mut all = Vec::with_capacity(dim);
    all.push(amps.clone());
    all.extend(raw_completion.iter().cloned());
    let orthonormal = gram_schmidt_anchored(&all)?;
    Ok(EigenbasisSet { anchor: psi.clone(), pivot, raw_completion, orthonormal })
}

/// A feedback unitary, optionally labelled with its cycle and outcome.
#[derive(Clone, Debug)]
pub struct FeedbackUnitary {
    pub matrix: CMatrix,
    pub step: Option<usize>,
    pub outcome: Option<usize>,
}

impl FeedbackUnitary {
    pub fn labelled(mut self, step: usize, outcome: usize) -> Self {
        self.step = Some(step);
        self.outcome = Some(outcome);
        self
    }

    pub fn apply(&self, psi: &StateVector) -> StateVector {
        psi.evolve(&self.matrix)
    }
}

/// Builds U with U|ψ_n⟩ = |ψ⟩, where `psi_exact_post` is the branch of
/// `psi_exact` for the observed outcome. The phase is fixed by
/// ⟨ψ|U|ψ_n⟩ = 1.
pub fn build_feedback(psi_exact: &StateVector, psi_exact_post: &StateVector) -> Result<FeedbackUnitary> {
    if psi_exact.dim() != psi_exact_post.dim() {
        return Err(Error::DimensionMismatch { left: psi_exact.dim(), right: psi_exact_post.dim() });
    }
    let target = build_basis(psi_exact)?.as_matrix();
    let source = build_basis(psi_exact_post)?.as_matrix();
    Ok(FeedbackUnitary { matrix: target * source.adjoint(), step: None, outcome: None })
}

/// M′ = U·M, the measurement-plus-feedback operator. Satisfies
/// M′†M′ = M†M, so {U_n M_n} is again a complete Kraus family.
pub fn compose_effective_kraus(u: &FeedbackUnitary, m: &CMatrix) -> Result<CMatrix> {
    if u.matrix.ncols() != m.nrows() {
        return Err(Error::DimensionMismatch { left: u.matrix.ncols(), right: m.nrows() });
    }
    Ok(&u.matrix * m)
}

/// |⟨ψ|U|ψ_n⟩|; equals one for a correct feedback unitary.
pub fn verify_restore(u: &FeedbackUnitary, psi_exact: &StateVector, psi_exact_post: &StateVector) -> Result<f64> {
    if u.matrix.ncols() != psi_exact_post.dim() || psi_exact.dim() != psi_exact_post.dim() {
        return Err(Error::DimensionMismatch { left: psi_exact.dim(), right: psi_exact_post.dim() });
    }
    Ok(psi_exact.amplitudes().dotc(&(&u.matrix * psi_exact_post.amplitudes())).norm())
}

/// Qubit feedback Hamiltonian in field form,
/// H = b0·1 + bz·σ_z + bx·σ_x − by·σ_y, i.e.
/// [[b0 + bz, bx + i·by], [bx − i·by, b0 − bz]].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FieldComponents {
    pub b0: f64,
    pub bx: f64,
    pub by: f64,
    pub bz: f64,
}

impl FieldComponents {
    fn from_matrix(h: &CMatrix) -> Self {
        let off = h[(0, 1)];
        Self {
            b0: 0.5 * (h[(0, 0)].re + h[(1, 1)].re),
            bx: off.re,
            by: off.im,
            bz: 0.5 * (h[(0, 0)].re - h[(1, 1)].re),
        }
    }

    pub fn scaled(self, s: f64) -> Self {
        Self { b0: self.b0 * s, bx: self.bx * s, by: self.by * s, bz: self.bz * s }
    }
}

/// Ĥ with exp(−iĤ t_F) = U.
#[derive(Clone, Debug)]
pub struct FeedbackHamiltonian {
    pub matrix: CMatrix,
    pub feedback_time: f64,
    /// Present for qubits only.
    pub fields: Option<FieldComponents>,
}

pub fn extract_feedback_hamiltonian(u: &FeedbackUnitary, feedback_time: f64) -> Result<FeedbackHamiltonian> {
    if !(feedback_time > 0.0) {
        return Err(Error::InvalidParameter(format!("feedback time must be positive, got {feedback_time}")));
    }
    let matrix = logm_unitary(&u.matrix)? / C64::from(feedback_time);
    let fields = (matrix.nrows() == 2).then(|| FieldComponents::from_matrix(&matrix));
    Ok(FeedbackHamiltonian { matrix, feedback_time, fields })
}

/// One row of the feedback-field series: fields times t_F at cycle time k·τ.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FieldSample {
    pub time: f64,
    pub outcome: usize,
    pub bx_tf: f64,
    pub by_tf: f64,
    pub bz_tf: f64,
}
