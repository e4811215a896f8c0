//! Unsharp measurements: diagonal Kraus families, outcome sampling and
//! post-measurement states.
//!
//! Outcome probabilities follow the usual POVM rule P_n = ⟨ψ|M_n†M_n|ψ⟩,
//! which is what the completeness relation Σ M_n†M_n = 1 guarantees to sum
//! to one. Outcomes are indexed from zero. Measurements take no time.

use rand::Rng;

use crate::error::{Error, Result};
use crate::qmath::{identity, CMatrix, CVector, StateVector, C64};

/// Completeness tolerance on ‖Σ M†M − 1‖_F.
pub const COMPLETENESS_TOL: f64 = 1e-12;
/// Outcomes with probability below this cannot be conditioned on.
pub const MIN_PROBABILITY: f64 = 1e-15;

#[derive(Clone, Debug, PartialEq)]
pub enum MeasurementStrength {
    /// Two-outcome qubit measurement with 0 < p₀ < ½.
    Qubit { p0: f64 },
    /// N-outcome measurement built from a probability vector.
    NLevel { p: Vec<f64> },
}

impl MeasurementStrength {
    /// Δp = 1 − 2p₀ for the qubit family; max_d |p_d − 1/N| otherwise.
    pub fn strength(&self) -> f64 {
        match self {
            MeasurementStrength::Qubit { p0 } => 1.0 - 2.0 * p0,
            MeasurementStrength::NLevel { p } => {
                let uniform = 1.0 / p.len() as f64;
                p.iter().map(|x| (x - uniform).abs()).fold(0.0, f64::max)
            }
        }
    }
}

/// A family of Kraus operators {M_n}. Every family built here is diagonal
/// in the computational basis, and the diagonals are kept alongside the
/// matrices so that applying an operator is a cheap elementwise product.
#[derive(Clone, Debug)]
pub struct KrausFamily {
    dim: usize,
    diagonals: Vec<Vec<f64>>,
    operators: Vec<CMatrix>,
    strength: MeasurementStrength,
}

impl KrausFamily {
    fn from_diagonals(diagonals: Vec<Vec<f64>>, strength: MeasurementStrength) -> Self {
        let dim = diagonals[0].len();
        let operators = diagonals
            .iter()
            .map(|d| CMatrix::from_diagonal(&CVector::from_iterator(dim, d.iter().map(|&x| C64::from(x)))))
            .collect();
        Self { dim, diagonals, operators, strength }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn outcomes(&self) -> usize {
        self.operators.len()
    }

    pub fn operators(&self) -> &[CMatrix] {
        &self.operators
    }

    pub fn operator(&self, n: usize) -> &CMatrix {
        &self.operators[n]
    }

    pub fn strength(&self) -> &MeasurementStrength {
        &self.strength
    }

    /// ‖Σ_n M_n†M_n − 1‖_F
    pub fn completeness_residual(&self) -> f64 {
        let sum = self
            .operators
            .iter()
            .fold(CMatrix::zeros(self.dim, self.dim), |acc, m| acc + m.adjoint() * m);
        (sum - identity(self.dim)).norm()
    }

    /// M_n ψ, unnormalized.
    pub fn apply(&self, n: usize, psi: &StateVector) -> CVector {
        let d = &self.diagonals[n];
        CVector::from_iterator(self.dim, psi.amplitudes().iter().zip(d).map(|(a, &m)| a * m))
    }

    /// P_n = ‖M_n ψ‖² for every outcome.
    pub fn probabilities(&self, psi: &StateVector) -> Result<Vec<f64>> {
        self.check_dim(psi)?;
        Ok(self
            .diagonals
            .iter()
            .map(|d| psi.amplitudes().iter().zip(d).map(|(a, &m)| a.norm_sqr() * m * m).sum())
            .collect())
    }

    fn check_dim(&self, psi: &StateVector) -> Result<()> {
        if psi.dim() != self.dim {
            return Err(Error::DimensionMismatch { left: self.dim, right: psi.dim() });
        }
        Ok(())
    }
}

/// The Kraus operators
/// M₀ = √(1−p₀)|−⟩⟨−| + √p₀|+⟩⟨+|, M₁ = √p₀|−⟩⟨−| + √(1−p₀)|+⟩⟨+|
/// in the basis (|+⟩, |−⟩) of σ_z eigenstates.
pub fn kraus_qubit(p0: f64) -> Result<KrausFamily> {
    if !(p0 > 0.0 && p0 < 0.5) {
        return Err(Error::InvalidStrength(format!("p0 must lie in (0, 0.5), got {p0}")));
    }
    let (weak, strong) = (p0.sqrt(), (1.0 - p0).sqrt());
    Ok(KrausFamily::from_diagonals(
        vec![vec![weak, strong], vec![strong, weak]],
        MeasurementStrength::Qubit { p0 },
    ))
}

/// N-outcome family M_n = Σ_d √p^(n)_d |d⟩⟨d| where p^(n) is `p` cyclically
/// shifted so that outcome n carries p[0] on |n⟩. Every diagonal position
/// sees each p_d exactly once across outcomes, so completeness is exact.
pub fn kraus_nlevel(p: &[f64]) -> Result<KrausFamily> {
    let dim = p.len();
    if dim < 2 {
        return Err(Error::InvalidStrength(format!("need at least two levels, got {dim}")));
    }
    if let Some(bad) = p.iter().find(|&&x| !(x > 0.0 && x < 1.0)) {
        return Err(Error::InvalidStrength(format!("every p_d must lie in (0, 1), got {bad}")));
    }
    let total: f64 = p.iter().sum();
    if (total - 1.0).abs() > COMPLETENESS_TOL {
        return Err(Error::InvalidStrength(format!("probabilities sum to {total}, not 1")));
    }
    let diagonals = (0..dim)
        .map(|n| (0..dim).map(|d| p[(d + dim - n) % dim].sqrt()).collect())
        .collect();
    Ok(KrausFamily::from_diagonals(diagonals, MeasurementStrength::NLevel { p: p.to_vec() }))
}

/// Outcome of a measurement together with the renormalized post-measurement state.
#[derive(Clone, Debug, PartialEq)]
pub struct MeasurementOutcome {
    pub index: usize,
    pub probability: f64,
    pub post_state: StateVector,
}

/// Post-measurement branch for a forced outcome `n`.
pub fn deterministic_branch(family: &KrausFamily, psi: &StateVector, n: usize) -> Result<MeasurementOutcome> {
    family.check_dim(psi)?;
    if n >= family.outcomes() {
        return Err(Error::InvalidParameter(format!(
            "outcome {n} out of range for a {}-outcome family",
            family.outcomes()
        )));
    }
    let v = family.apply(n, psi);
    let probability = v.norm_squared();
    if probability < MIN_PROBABILITY {
        return Err(Error::ImpossibleOutcome { index: n, probability });
    }
    Ok(MeasurementOutcome { index: n, probability, post_state: StateVector::normalize(v)? })
}

/// Samples an outcome with probability P_n and returns the post-measurement state.
///
/// Outcomes with P_n below [`MIN_PROBABILITY`] are excluded from the draw.
pub fn measure<R: Rng + ?Sized>(family: &KrausFamily, psi: &StateVector, rng: &mut R) -> Result<MeasurementOutcome> {
    let probs = family.probabilities(psi)?;
    let allowed: f64 = probs.iter().filter(|&&p| p >= MIN_PROBABILITY).sum();
    let u: f64 = rng.random::<f64>() * allowed;
    let mut acc = 0.0;
    let mut last = None;
    for (n, &p) in probs.iter().enumerate() {
        if p < MIN_PROBABILITY {
            continue;
        }
        acc += p;
        last = Some(n);
        if u < acc {
            return deterministic_branch(family, psi, n);
        }
    }
    match last {
        Some(n) => deterministic_branch(family, psi, n),
        None => Err(Error::ImpossibleOutcome { index: 0, probability: 0.0 }),
    }
}
