//! Dense complex linear algebra for small Hilbert spaces.
//!
//! Everything here works on `nalgebra` dynamic matrices of `Complex64`; the
//! dimensions of interest are tiny (N ≤ 16) so exactness beats speed. The
//! matrix exponential and the unitary logarithm are both computed from an
//! eigendecomposition, which also makes the logarithm's principal branch
//! explicit. ħ = 1 throughout.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Hermiticity tolerance on ‖A − A†‖_F (scaled by max(1, ‖A‖_F)).
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Normalization tolerance on |‖ψ‖² − 1|.
pub const NORM_TOL: f64 = 1e-12;
/// Unitarity tolerance on ‖U†U − 1‖_F.
pub const UNITARY_TOL: f64 = 1e-10;
/// Tolerance for exp/log round trips.
pub const ROUND_TRIP_TOL: f64 = 1e-9;
/// Residual norm below which Gram-Schmidt declares a vector dependent.
pub const RANK_TOL: f64 = 1e-10;
/// Distance from ±π within which an eigenphase is treated as sitting on the cut.
pub const BRANCH_CUT_TOL: f64 = 1e-9;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn identity(dim: usize) -> CMatrix {
    CMatrix::identity(dim, dim)
}

pub fn pauli_x() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO])
}

pub fn pauli_y() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[ZERO, -I, I, ZERO])
}

pub fn pauli_z() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE])
}

/// |a⟩⟨b|
pub fn outer(a: &CVector, b: &CVector) -> CMatrix {
    a * b.adjoint()
}

pub fn frobenius(a: &CMatrix) -> f64 {
    a.norm()
}

/// ‖A − A†‖_F
pub fn hermiticity_residual(a: &CMatrix) -> f64 {
    (a - a.adjoint()).norm()
}

/// ‖U†U − 1‖_F
pub fn unitarity_residual(u: &CMatrix) -> f64 {
    (u.adjoint() * u - identity(u.nrows())).norm()
}

fn require_square(a: &CMatrix) -> Result<()> {
    if a.nrows() != a.ncols() {
        return Err(Error::DimensionMismatch { left: a.nrows(), right: a.ncols() });
    }
    if a.nrows() == 0 {
        return Err(Error::Empty("matrix"));
    }
    Ok(())
}

pub fn check_hermitian(a: &CMatrix) -> Result<()> {
    require_square(a)?;
    let residual = hermiticity_residual(a);
    if residual > HERMITIAN_TOL * a.norm().max(1.0) {
        return Err(Error::NotHermitian { residual });
    }
    Ok(())
}

pub fn check_unitary(u: &CMatrix) -> Result<()> {
    require_square(u)?;
    let residual = unitarity_residual(u);
    if residual > UNITARY_TOL {
        return Err(Error::NotUnitary { residual });
    }
    Ok(())
}

/// A normalized state vector.
///
/// Construction checks Σ|c_j|² = 1 to within [`NORM_TOL`]; the global phase is
/// kept as given.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector(CVector);

impl StateVector {
    pub fn new(amplitudes: CVector) -> Result<Self> {
        if amplitudes.is_empty() {
            return Err(Error::Empty("state vector"));
        }
        let norm_sqr = amplitudes.norm_squared();
        if (norm_sqr - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized { norm_sqr });
        }
        Ok(Self(amplitudes))
    }

    pub fn from_slice(amplitudes: &[C64]) -> Result<Self> {
        Self::new(CVector::from_column_slice(amplitudes))
    }

    /// Rescales `v` to unit norm.
    pub fn normalize(v: CVector) -> Result<Self> {
        if v.is_empty() {
            return Err(Error::Empty("state vector"));
        }
        let norm = v.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::NotNormalized { norm_sqr: norm * norm });
        }
        Ok(Self(v / C64::from(norm)))
    }

    /// The computational basis state |index⟩.
    pub fn basis(dim: usize, index: usize) -> Self {
        assert!(index < dim, "basis index {index} out of range for dimension {dim}");
        let mut v = CVector::zeros(dim);
        v[index] = ONE;
        Self(v)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.0
    }

    pub fn into_inner(self) -> CVector {
        self.0
    }

    /// ⟨self|other⟩
    pub fn inner(&self, other: &StateVector) -> Result<C64> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch { left: self.dim(), right: other.dim() });
        }
        Ok(self.0.dotc(&other.0))
    }

    /// ⟨ψ|A|ψ⟩, real part (A is expected Hermitian).
    pub fn expectation(&self, op: &CMatrix) -> f64 {
        self.0.dotc(&(op * &self.0)).re
    }

    /// Applies a unitary and renormalizes to remove accumulated rounding.
    pub fn evolve(&self, u: &CMatrix) -> StateVector {
        let v = u * &self.0;
        let norm = v.norm();
        Self(v / C64::from(norm))
    }
}

/// Eigendecomposition H = V diag(λ) V† of a Hermitian matrix.
#[derive(Clone, Debug)]
pub struct SpectralDecomposition {
    eigenvalues: DVector<f64>,
    eigenvectors: CMatrix,
}

impl SpectralDecomposition {
    pub fn new(h: &CMatrix) -> Result<Self> {
        check_hermitian(h)?;
        let hermitian = (h + h.adjoint()).scale(0.5);
        let eig = hermitian.symmetric_eigen();
        Ok(Self { eigenvalues: eig.eigenvalues, eigenvectors: eig.eigenvectors })
    }

    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &CMatrix {
        &self.eigenvectors
    }

    /// exp(−iHt)
    pub fn propagator(&self, t: f64) -> CMatrix {
        let mut scaled = self.eigenvectors.clone();
        for (j, mut col) in scaled.column_iter_mut().enumerate() {
            col *= C64::from_polar(1.0, -self.eigenvalues[j] * t);
        }
        scaled * self.eigenvectors.adjoint()
    }
}

/// exp(−iHt) for Hermitian `h`.
pub fn expm(h: &CMatrix, t: f64) -> Result<CMatrix> {
    Ok(SpectralDecomposition::new(h)?.propagator(t))
}

/// Principal Hermitian logarithm: returns H with exp(−iH) = U and eigenvalues
/// of −H (the eigenphases of U) in (−π, π).
///
/// An eigenphase within [`BRANCH_CUT_TOL`] of ±π is rejected, since the
/// logarithm is not unique there.
pub fn logm_unitary(u: &CMatrix) -> Result<CMatrix> {
    check_unitary(u)?;
    let (q, t) = u.clone().try_schur(f64::EPSILON, 0).ok_or(Error::NoConvergence)?.unpack();
    let dim = u.nrows();
    let mut scaled = q.clone();
    for j in 0..dim {
        let phase = t[(j, j)].arg();
        if std::f64::consts::PI - phase.abs() < BRANCH_CUT_TOL {
            return Err(Error::BranchCut { phase });
        }
        let mut col = scaled.column_mut(j);
        col *= C64::from(-phase);
    }
    let h = scaled * q.adjoint();
    Ok((&h + h.adjoint()).scale(0.5))
}

/// Orthonormalizes `vectors` with classical Gram-Schmidt plus one
/// re-orthogonalization pass.
///
/// The first vector must already be normalized and is returned bit-for-bit
/// unchanged; later vectors need not be normalized. Fails with
/// [`Error::RankDeficient`] when a normalized input loses all but
/// [`RANK_TOL`] of its norm to its predecessors.
pub fn gram_schmidt_anchored(vectors: &[CVector]) -> Result<Vec<StateVector>> {
    let first = vectors.first().ok_or(Error::Empty("vector list"))?;
    let dim = first.len();
    let mut out = vec![StateVector::new(first.clone())?];
    for (index, v) in vectors.iter().enumerate().skip(1) {
        if v.len() != dim {
            return Err(Error::DimensionMismatch { left: dim, right: v.len() });
        }
        let norm = v.norm();
        if norm == 0.0 {
            return Err(Error::RankDeficient { index, residual: 0.0 });
        }
        let mut w = v / C64::from(norm);
        for _pass in 0..2 {
            for q in &out {
                let q = q.amplitudes();
                let proj = q.dotc(&w);
                w -= q * proj;
            }
        }
        let residual = w.norm();
        if residual < RANK_TOL {
            return Err(Error::RankDeficient { index, residual });
        }
        out.push(StateVector(w / C64::from(residual)));
    }
    Ok(out)
}

/// |⟨a|b⟩|², clamped to [0, 1].
pub fn fidelity(a: &StateVector, b: &StateVector) -> Result<f64> {
    Ok(a.inner(b)?.norm_sqr().min(1.0))
}
