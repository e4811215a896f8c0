//! Hamiltonians with noise, and exact / time-ordered propagation.
//!
//! The full Hamiltonian is H(t) = H₀ + Σ_l λ_l(t) H_l. Static noise keeps the
//! λ_l fixed, so a single exponential is exact. Stochastic noise draws each
//! λ_l from a normal distribution once per hold interval; H is then constant
//! on each interval and the product of per-interval exponentials is exact as
//! well. Smooth time dependence (the Gaussian pulse reading of the noise)
//! goes through the midpoint-product rule on a step grid anchored at t = 0.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::qmath::{check_hermitian, expm, identity, CMatrix, SpectralDecomposition, StateVector, C64};
use crate::streams::{Purpose, TrajectorySeed};

/// How the noise amplitudes λ_l(t) behave.
#[derive(Clone, Debug, PartialEq)]
pub enum NoiseProcess {
    None,
    /// Fixed λ_l, one per generator.
    Static { amplitudes: Vec<f64> },
    /// λ_l ~ Normal(μ·Ω, (σ·Ω)²), redrawn every `resample_dt` and held in
    /// between. `mu` and `sigma` are in units of the reference frequency Ω.
    GaussianStochastic { mu: f64, sigma: f64, reference: f64, resample_dt: f64 },
    /// Deterministic λ_l(t) = A·exp(−(t − t_c)²/(2w²)) / (√(2π)·w), the same
    /// for every channel.
    GaussianPulse { center: f64, width: f64, amplitude: f64 },
}

impl NoiseProcess {
    pub fn is_time_dependent(&self) -> bool {
        matches!(self, NoiseProcess::GaussianStochastic { .. } | NoiseProcess::GaussianPulse { .. })
    }

    fn validate(&self, channels: usize) -> Result<()> {
        match self {
            NoiseProcess::None => Ok(()),
            NoiseProcess::Static { amplitudes } => {
                if amplitudes.len() != channels {
                    return Err(Error::DimensionMismatch { left: amplitudes.len(), right: channels });
                }
                if amplitudes.iter().any(|a| !a.is_finite()) {
                    return Err(Error::InvalidParameter("static noise amplitude is not finite".into()));
                }
                Ok(())
            }
            NoiseProcess::GaussianStochastic { mu, sigma, reference, resample_dt } => {
                if !(*sigma >= 0.0) || !mu.is_finite() || !reference.is_finite() {
                    return Err(Error::InvalidParameter(format!(
                        "gaussian noise needs finite μ, Ω and σ ≥ 0 (got μ={mu}, σ={sigma}, Ω={reference})"
                    )));
                }
                if !(*resample_dt > 0.0) {
                    return Err(Error::InvalidParameter(format!("resample_dt must be positive, got {resample_dt}")));
                }
                Ok(())
            }
            NoiseProcess::GaussianPulse { width, .. } => {
                if !(*width > 0.0) {
                    return Err(Error::InvalidParameter(format!("pulse width must be positive, got {width}")));
                }
                Ok(())
            }
        }
    }
}

/// H₀ plus noise generators H_l and the process driving their amplitudes.
#[derive(Clone, Debug)]
pub struct HamiltonianSpec {
    h0: CMatrix,
    generators: Vec<CMatrix>,
    noise: NoiseProcess,
}

impl HamiltonianSpec {
    pub fn new(h0: CMatrix, generators: Vec<CMatrix>, noise: NoiseProcess) -> Result<Self> {
        check_hermitian(&h0)?;
        for g in &generators {
            if g.nrows() != h0.nrows() || g.ncols() != h0.ncols() {
                return Err(Error::DimensionMismatch { left: h0.nrows(), right: g.nrows() });
            }
            check_hermitian(g)?;
        }
        noise.validate(generators.len())?;
        Ok(Self { h0, generators, noise })
    }

    /// A noiseless spec.
    pub fn noiseless(h0: CMatrix) -> Result<Self> {
        Self::new(h0, Vec::new(), NoiseProcess::None)
    }

    pub fn with_noise(&self, noise: NoiseProcess) -> Result<Self> {
        Self::new(self.h0.clone(), self.generators.clone(), noise)
    }

    pub fn dim(&self) -> usize {
        self.h0.nrows()
    }

    pub fn h0(&self) -> &CMatrix {
        &self.h0
    }

    pub fn generators(&self) -> &[CMatrix] {
        &self.generators
    }

    pub fn noise(&self) -> &NoiseProcess {
        &self.noise
    }

    /// H₀ + Σ_l a_l H_l
    pub fn hamiltonian(&self, amplitudes: &[f64]) -> CMatrix {
        let mut h = self.h0.clone();
        for (g, &a) in self.generators.iter().zip(amplitudes) {
            if a != 0.0 {
                h += g * C64::from(a);
            }
        }
        h
    }

    /// The time-independent noisy Hamiltonian, when the noise allows one.
    pub fn static_hamiltonian(&self) -> Option<CMatrix> {
        match &self.noise {
            NoiseProcess::None => Some(self.h0.clone()),
            NoiseProcess::Static { amplitudes } => Some(self.hamiltonian(amplitudes)),
            _ => None,
        }
    }
}

struct Channel {
    rng: ChaCha8Rng,
    samples: Vec<f64>,
}

/// One frozen realization of the noise amplitudes.
///
/// Stochastic samples are drawn lazily in hold-interval order from one stream
/// per channel and cached, so a realization can be queried over any sequence
/// of time windows and always reports the same values.
pub struct NoiseRealization {
    process: NoiseProcess,
    channels: Vec<Channel>,
}

impl NoiseRealization {
    pub fn new(spec: &HamiltonianSpec, seed: TrajectorySeed) -> Self {
        let channels = (0..spec.generators.len())
            .map(|l| Channel { rng: seed.stream(Purpose::Noise(l)), samples: Vec::new() })
            .collect();
        Self { process: spec.noise.clone(), channels }
    }

    /// Amplitude of channel `l` during hold interval `j` (stochastic noise only).
    fn held_sample(&mut self, l: usize, j: usize) -> f64 {
        let NoiseProcess::GaussianStochastic { mu, sigma, reference, .. } = self.process else {
            unreachable!("held samples only exist for stochastic noise")
        };
        let ch = &mut self.channels[l];
        while ch.samples.len() <= j {
            let z: f64 = ch.rng.sample(StandardNormal);
            ch.samples.push(reference * (mu + sigma * z));
        }
        ch.samples[j]
    }

    /// λ_l at time t for every channel.
    pub fn amplitudes_at(&mut self, t: f64) -> Vec<f64> {
        match self.process.clone() {
            NoiseProcess::None => vec![0.0; self.channels.len()],
            NoiseProcess::Static { amplitudes } => amplitudes,
            NoiseProcess::GaussianStochastic { resample_dt, .. } => {
                let j = hold_index(t, resample_dt);
                (0..self.channels.len()).map(|l| self.held_sample(l, j)).collect()
            }
            NoiseProcess::GaussianPulse { center, width, amplitude } => {
                let v = pulse_value(t, center, width, amplitude);
                vec![v; self.channels.len()]
            }
        }
    }

    /// Samples drawn so far for channel `l`.
    pub fn drawn(&self, l: usize) -> &[f64] {
        &self.channels[l].samples
    }
}

fn pulse_value(t: f64, center: f64, width: f64, amplitude: f64) -> f64 {
    let x = (t - center) / width;
    amplitude * (-0.5 * x * x).exp() / ((2.0 * std::f64::consts::PI).sqrt() * width)
}

/// Relative slack used when snapping times onto a grid.
const GRID_SLACK: f64 = 1e-9;

fn hold_index(t: f64, resample_dt: f64) -> usize {
    (t / resample_dt + GRID_SLACK).floor().max(0.0) as usize
}

/// Breakpoints of [t0, t1] on a grid of spacing `dt` anchored at 0.
fn grid_breakpoints(t0: f64, t1: f64, dt: f64) -> Vec<f64> {
    let mut points = vec![t0];
    let mut m = (t0 / dt + GRID_SLACK).floor() + 1.0;
    while m * dt < t1 - GRID_SLACK * dt {
        points.push(m * dt);
        m += 1.0;
    }
    points.push(t1);
    points
}

/// Time-ordered product of midpoint exponentials,
/// ∏ exp(−i H((a+b)/2) (b − a)) over a grid of spacing `step_dt` anchored at 0.
pub fn midpoint_product<F>(mut hamiltonian: F, t0: f64, t1: f64, step_dt: f64) -> Result<CMatrix>
where
    F: FnMut(f64) -> CMatrix,
{
    if !(step_dt > 0.0) {
        return Err(Error::InvalidParameter(format!("step_dt must be positive, got {step_dt}")));
    }
    let points = grid_breakpoints(t0, t1, step_dt);
    let mut u: Option<CMatrix> = None;
    for w in points.windows(2) {
        let (a, b) = (w[0], w[1]);
        let step = expm(&hamiltonian(0.5 * (a + b)), b - a)?;
        u = Some(match u {
            None => step,
            Some(prev) => step * prev,
        });
    }
    Ok(u.expect("at least one step"))
}

/// Integration scheme chosen for a spec.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scheme {
    /// Time-independent H: one exponential.
    EigenExact,
    /// Time-dependent H: ordered product of midpoint exponentials.
    MidpointProduct,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Propagator {
    step_dt: f64,
}

impl Propagator {
    pub fn new(step_dt: f64) -> Result<Self> {
        if !(step_dt > 0.0) || !step_dt.is_finite() {
            return Err(Error::InvalidParameter(format!("step_dt must be positive, got {step_dt}")));
        }
        Ok(Self { step_dt })
    }

    pub fn step_dt(&self) -> f64 {
        self.step_dt
    }

    pub fn scheme(spec: &HamiltonianSpec) -> Scheme {
        if spec.noise.is_time_dependent() {
            Scheme::MidpointProduct
        } else {
            Scheme::EigenExact
        }
    }

    /// exp(−iH₀t)|ψ₀⟩, ignoring any noise.
    pub fn propagate_exact(&self, spec: &HamiltonianSpec, psi0: &StateVector, t: f64) -> Result<StateVector> {
        check_dims(spec, psi0)?;
        if !(t >= 0.0) {
            return Err(Error::InvalidParameter(format!("evolution time must be non-negative, got {t}")));
        }
        Ok(psi0.evolve(&expm(spec.h0(), t)?))
    }

    /// The noisy evolution operator over (t0, t1] for one noise realization.
    pub fn evolution(
        &self,
        spec: &HamiltonianSpec,
        t0: f64,
        t1: f64,
        noise: &mut NoiseRealization,
    ) -> Result<CMatrix> {
        if !(t1 >= t0) {
            return Err(Error::InvalidParameter(format!("t1 = {t1} precedes t0 = {t0}")));
        }
        if let Some(h) = spec.static_hamiltonian() {
            return expm(&h, t1 - t0);
        }
        match spec.noise {
            NoiseProcess::GaussianStochastic { resample_dt, .. } => {
                if self.step_dt > resample_dt * (1.0 + GRID_SLACK) {
                    return Err(Error::UnderResolvedNoise { step_dt: self.step_dt, resample_dt });
                }
                let mut u = identity(spec.dim());
                let mut j = hold_index(t0, resample_dt);
                loop {
                    let a = t0.max(j as f64 * resample_dt);
                    let b = t1.min((j + 1) as f64 * resample_dt);
                    if b - a > GRID_SLACK * resample_dt {
                        // H is constant on the hold interval, so one exponential is exact.
                        let amplitudes = noise.amplitudes_at(0.5 * (a + b));
                        let step = SpectralDecomposition::new(&spec.hamiltonian(&amplitudes))?.propagator(b - a);
                        u = step * u;
                    }
                    if b >= t1 - GRID_SLACK * resample_dt {
                        break;
                    }
                    j += 1;
                }
                Ok(u)
            }
            NoiseProcess::GaussianPulse { .. } => {
                midpoint_product(|t| spec.hamiltonian(&noise.amplitudes_at(t)), t0, t1, self.step_dt)
            }
            NoiseProcess::None | NoiseProcess::Static { .. } => unreachable!(),
        }
    }

    /// Evolves `psi0` from t0 to t1 under the noisy Hamiltonian.
    pub fn propagate_noisy(
        &self,
        spec: &HamiltonianSpec,
        psi0: &StateVector,
        t0: f64,
        t1: f64,
        noise: &mut NoiseRealization,
    ) -> Result<StateVector> {
        check_dims(spec, psi0)?;
        Ok(psi0.evolve(&self.evolution(spec, t0, t1, noise)?))
    }
}

fn check_dims(spec: &HamiltonianSpec, psi: &StateVector) -> Result<()> {
    if spec.dim() != psi.dim() {
        return Err(Error::DimensionMismatch { left: spec.dim(), right: psi.dim() });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qmath::{c, fidelity, pauli_x, pauli_y, pauli_z, CVector};
    use std::f64::consts::PI;

    fn rk4(h: &CMatrix, psi: &CVector, t: f64, steps: usize) -> CVector {
        let dt = t / steps as f64;
        let f = |v: &CVector| (h * v) * C64::new(0.0, -1.0);
        let mut v = psi.clone();
        for _ in 0..steps {
            let k1 = f(&v);
            let k2 = f(&(&v + &k1 * C64::from(dt / 2.0)));
            let k3 = f(&(&v + &k2 * C64::from(dt / 2.0)));
            let k4 = f(&(&v + &k3 * C64::from(dt)));
            v += (k1 + k2 * C64::from(2.0) + k3 * C64::from(2.0) + k4) * C64::from(dt / 6.0);
        }
        v
    }

    fn plus() -> StateVector {
        StateVector::basis(2, 0)
    }

    fn seed() -> TrajectorySeed {
        TrajectorySeed::new(11, 0)
    }

    fn driven(noise: NoiseProcess) -> HamiltonianSpec {
        let h0 = (pauli_x() + pauli_z()) * C64::from(0.5);
        HamiltonianSpec::new(h0, vec![pauli_x() * C64::from(0.5), pauli_z() * C64::from(0.5)], noise).unwrap()
    }

    fn stochastic(resample_dt: f64) -> NoiseProcess {
        NoiseProcess::GaussianStochastic { mu: 0.05, sigma: 0.1, reference: 1.0, resample_dt }
    }

    #[test]
    fn rabi_precession_closed_form() {
        let omega = 1.3;
        let spec = HamiltonianSpec::noiseless(pauli_x() * C64::from(omega / 2.0)).unwrap();
        let p = Propagator::new(0.01).unwrap();
        for &t in &[0.0, 0.4, 1.9, 7.5] {
            let psi = p.propagate_exact(&spec, &plus(), t).unwrap();
            assert!((psi.expectation(&pauli_z()) - (omega * t).cos()).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_time_is_identity() {
        let spec = driven(NoiseProcess::None);
        let psi = Propagator::new(0.1).unwrap().propagate_exact(&spec, &plus(), 0.0).unwrap();
        assert_eq!(psi, plus());
    }

    #[test]
    fn tilted_field_matches_rk4_oracle() {
        let (theta, phi) = (PI / 3.0, PI / 4.0);
        let r = [theta.cos() * phi.cos(), theta.cos() * phi.sin(), theta.sin()];
        let h0 = (pauli_x() * C64::from(r[0]) + pauli_y() * C64::from(r[1]) + pauli_z() * C64::from(r[2]))
            * C64::from(0.5);
        let spec = HamiltonianSpec::noiseless(h0.clone()).unwrap();
        let p = Propagator::new(0.01).unwrap();
        for &t in &[0.5, 3.0, 10.0] {
            let psi = p.propagate_exact(&spec, &plus(), t).unwrap();
            let oracle = rk4(&h0, plus().amplitudes(), t, 20_000);
            assert!((psi.amplitudes() - oracle).norm() < 1e-8);
        }
    }

    #[test]
    fn zero_gaussian_noise_equals_exact() {
        let noise = NoiseProcess::GaussianStochastic { mu: 0.0, sigma: 0.0, reference: 1.0, resample_dt: 0.1 };
        let spec = driven(noise);
        let p = Propagator::new(0.02).unwrap();
        let mut real = NoiseRealization::new(&spec, seed());
        let noisy = p.propagate_noisy(&spec, &plus(), 0.0, 2.0, &mut real).unwrap();
        let exact = p.propagate_exact(&spec, &plus(), 2.0).unwrap();
        assert!((noisy.amplitudes() - exact.amplitudes()).norm() < 1e-12);
    }

    #[test]
    fn static_noise_is_single_exponential() {
        let spec = driven(NoiseProcess::Static { amplitudes: vec![0.07, -0.03] });
        let full = expm(&spec.hamiltonian(&[0.07, -0.03]), 3.3).unwrap();
        for &dt in &[0.5, 0.01] {
            let p = Propagator::new(dt).unwrap();
            let mut real = NoiseRealization::new(&spec, seed());
            let psi = p.propagate_noisy(&spec, &plus(), 1.0, 4.3, &mut real).unwrap();
            assert!((psi.amplitudes() - &full * plus().amplitudes()).norm() < 1e-10);
        }
    }

    #[test]
    fn midpoint_rule_is_second_order_on_pulse_noise() {
        let spec = driven(NoiseProcess::GaussianPulse { center: 1.0, width: 0.4, amplitude: 0.8 });
        let run = |dt: f64| {
            let p = Propagator::new(dt).unwrap();
            let mut real = NoiseRealization::new(&spec, seed());
            p.propagate_noisy(&spec, &plus(), 0.0, 2.0, &mut real).unwrap().into_inner()
        };
        let reference = run(1e-4);
        let e1 = (run(0.05) - &reference).norm();
        let e2 = (run(0.025) - &reference).norm();
        let ratio = e1 / e2;
        assert!((3.5..4.5).contains(&ratio), "error ratio {ratio}");
    }

    #[test]
    fn piecewise_constant_noise_is_step_independent() {
        let spec = driven(stochastic(0.1));
        let run = |dt: f64| {
            let p = Propagator::new(dt).unwrap();
            let mut real = NoiseRealization::new(&spec, seed());
            p.propagate_noisy(&spec, &plus(), 0.0, 3.0, &mut real).unwrap().into_inner()
        };
        assert!((run(0.1) - run(0.01)).norm() < 1e-12);
    }

    #[test]
    fn composition_over_split_window() {
        let spec = driven(stochastic(0.1));
        let p = Propagator::new(0.02).unwrap();
        let mut real = NoiseRealization::new(&spec, seed());
        let mid = p.propagate_noisy(&spec, &plus(), 0.0, 1.0, &mut real).unwrap();
        let split = p.propagate_noisy(&spec, &mid, 1.0, 2.0, &mut real).unwrap();
        let mut fresh = NoiseRealization::new(&spec, seed());
        let whole = p.propagate_noisy(&spec, &plus(), 0.0, 2.0, &mut fresh).unwrap();
        assert!((split.amplitudes() - whole.amplitudes()).norm() < 1e-9);
    }

    #[test]
    fn same_seed_same_noise_and_state() {
        let spec = driven(stochastic(0.05));
        let p = Propagator::new(0.01).unwrap();
        let run = || {
            let mut real = NoiseRealization::new(&spec, seed());
            let psi = p.propagate_noisy(&spec, &plus(), 0.0, 1.0, &mut real).unwrap();
            (psi, real.drawn(0).to_vec(), real.drawn(1).to_vec())
        };
        let (a, na0, na1) = run();
        let (b, nb0, nb1) = run();
        assert_eq!(a, b);
        assert_eq!(na0, nb0);
        assert_eq!(na1, nb1);
        assert_eq!(na0.len(), 20);
        assert_ne!(na0, na1, "channels must use independent streams");
    }

    #[test]
    fn noise_changes_the_trajectory() {
        let spec = driven(stochastic(0.1));
        let p = Propagator::new(0.02).unwrap();
        let mut real = NoiseRealization::new(&spec, seed());
        let noisy = p.propagate_noisy(&spec, &plus(), 0.0, 10.0, &mut real).unwrap();
        let exact = p.propagate_exact(&spec, &plus(), 10.0).unwrap();
        assert!(fidelity(&noisy, &exact).unwrap() < 1.0 - 1e-6);
    }

    #[test]
    fn under_resolved_noise_rejected() {
        let spec = driven(stochastic(0.01));
        let p = Propagator::new(0.02).unwrap();
        let mut real = NoiseRealization::new(&spec, seed());
        assert!(matches!(
            p.propagate_noisy(&spec, &plus(), 0.0, 1.0, &mut real),
            Err(Error::UnderResolvedNoise { .. })
        ));
    }

    #[test]
    fn spec_validation() {
        let bad = CMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
        assert!(HamiltonianSpec::noiseless(bad).is_err());
        let h0 = pauli_z();
        assert!(HamiltonianSpec::new(h0.clone(), vec![pauli_x()], NoiseProcess::Static { amplitudes: vec![] }).is_err());
        let neg = NoiseProcess::GaussianStochastic { mu: 0.0, sigma: -1.0, reference: 1.0, resample_dt: 0.1 };
        assert!(HamiltonianSpec::new(h0.clone(), vec![pauli_x()], neg).is_err());
        let zero_dt = NoiseProcess::GaussianStochastic { mu: 0.0, sigma: 1.0, reference: 1.0, resample_dt: 0.0 };
        assert!(HamiltonianSpec::new(h0, vec![pauli_x()], zero_dt).is_err());
        assert_eq!(Propagator::scheme(&driven(stochastic(0.1))), Scheme::MidpointProduct);
        assert_eq!(Propagator::scheme(&driven(NoiseProcess::None)), Scheme::EigenExact);
    }
}
