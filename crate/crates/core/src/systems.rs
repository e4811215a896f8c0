//! Concrete physical models.
//!
//! * a spin-½ precessing in a tilted magnetic field with static errors in the
//!   Larmor frequency and field direction;
//! * a driven qubit with static offsets in drive and splitting;
//! * two three-level Rydberg atoms (|g⟩, |e⟩, |r⟩) with laser-amplitude noise,
//!   plus a check of the blockaded effective two-level dynamics;
//! * the Ramsey dilation that realises the qubit unsharp measurement on a
//!   nuclear spin through a projectively measured electron spin.
//!
//! Frequencies are angular (rad per unit time). Qubit vectors are ordered
//! (|+⟩, |−⟩), the σ_z eigenstates.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, FRAC_PI_4};

use crate::dynamics::{HamiltonianSpec, NoiseProcess};
use crate::error::{Error, Result};
use crate::measurement::kraus_qubit;
use crate::qmath::{c, expm, identity, pauli_x, pauli_y, pauli_z, CMatrix, CVector, StateVector, C64, ONE, ZERO};

/// Unit vector (cosθ cosφ, cosθ sinφ, sinθ).
pub fn field_direction(theta: f64, phi: f64) -> [f64; 3] {
    [theta.cos() * phi.cos(), theta.cos() * phi.sin(), theta.sin()]
}

/// r̂·σ̂
pub fn sigma_along(r: [f64; 3]) -> CMatrix {
    pauli_x() * C64::from(r[0]) + pauli_y() * C64::from(r[1]) + pauli_z() * C64::from(r[2])
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpinFieldParams {
    pub omega_l: f64,
    pub theta: f64,
    pub phi: f64,
    pub omega_eps: f64,
    pub theta_p: f64,
    pub phi_p: f64,
}

impl SpinFieldParams {
    /// Noise-free parameters: the noisy field equals the ideal one.
    pub fn ideal(omega_l: f64, theta: f64, phi: f64) -> Self {
        Self { omega_l, theta, phi, omega_eps: 0.0, theta_p: theta, phi_p: phi }
    }
}

#[derive(Clone, Debug)]
pub struct SpinModel {
    /// (Ω_L/2) r̂·σ̂
    pub h0: CMatrix,
    /// ((Ω_L + Ω_ε)/2) r̂′·σ̂
    pub h_noisy: CMatrix,
    /// H₀ with the difference H − H₀ attached as one static noise term.
    pub spec: HamiltonianSpec,
}

pub fn spin_hamiltonians(p: &SpinFieldParams) -> Result<SpinModel> {
    let h0 = sigma_along(field_direction(p.theta, p.phi)) * C64::from(p.omega_l / 2.0);
    let h_noisy = sigma_along(field_direction(p.theta_p, p.phi_p)) * C64::from((p.omega_l + p.omega_eps) / 2.0);
    let spec = HamiltonianSpec::new(h0.clone(), vec![&h_noisy - &h0], NoiseProcess::Static { amplitudes: vec![1.0] })?;
    Ok(SpinModel { h0, h_noisy, spec })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DrivenQubitParams {
    pub omega0: f64,
    pub beta0: f64,
    pub d_eps: f64,
    pub d_beta: f64,
}

impl DrivenQubitParams {
    /// Precession frequency √(Ω₀² + β₀²).
    pub fn rabi_frequency(&self) -> f64 {
        self.omega0.hypot(self.beta0)
    }
}

#[derive(Clone, Debug)]
pub struct DrivenQubitModel {
    /// (Ω₀/2)σ_x + (β₀/2)σ_z
    pub h0: CMatrix,
    /// (δε/2)σ_x + (δβ/2)σ_z
    pub h_noise: CMatrix,
    /// Generators σ_x/2 and σ_z/2 with static amplitudes (δε, δβ).
    pub spec: HamiltonianSpec,
}

pub fn driven_qubit_hamiltonians(p: &DrivenQubitParams) -> Result<DrivenQubitModel> {
    let half_x = pauli_x() * C64::from(0.5);
    let half_z = pauli_z() * C64::from(0.5);
    let h0 = &half_x * C64::from(p.omega0) + &half_z * C64::from(p.beta0);
    let h_noise = &half_x * C64::from(p.d_eps) + &half_z * C64::from(p.d_beta);
    let spec = HamiltonianSpec::new(
        h0.clone(),
        vec![half_x, half_z],
        NoiseProcess::Static { amplitudes: vec![p.d_eps, p.d_beta] },
    )?;
    Ok(DrivenQubitModel { h0, h_noise, spec })
}

/// Single-atom levels.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Level {
    G = 0,
    E = 1,
    R = 2,
}

/// Two-atom basis index, ordered
/// |gg⟩, |ge⟩, |eg⟩, |ee⟩, |gr⟩, |er⟩, |rg⟩, |re⟩, |rr⟩.
pub fn pair_index(a: Level, b: Level) -> usize {
    const TABLE: [[usize; 3]; 3] = [[0, 1, 4], [2, 3, 5], [6, 7, 8]];
    TABLE[a as usize][b as usize]
}

const LEVELS: [Level; 3] = [Level::G, Level::E, Level::R];

/// Adds coef·(|to⟩⟨from| ⊗ 1 + 1 ⊗ |to⟩⟨from|) to `h`.
fn add_single_atom_term(h: &mut CMatrix, to: Level, from: Level, coef: C64) {
    for &other in &LEVELS {
        h[(pair_index(to, other), pair_index(from, other))] += coef;
        h[(pair_index(other, to), pair_index(other, from))] += coef;
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RydbergParams {
    pub omega1: f64,
    pub omega2: f64,
    pub delta: f64,
    pub v: f64,
}

impl RydbergParams {
    /// Ω₁Ω₂/Δ
    pub fn omega_eff(&self) -> f64 {
        self.omega1 * self.omega2 / self.delta
    }

    /// Regime problems for the blockaded effective model (not fatal).
    pub fn regime_warnings(&self) -> Vec<String> {
        let mut w = Vec::new();
        let omega_max = self.omega1.abs().max(self.omega2.abs());
        if self.delta.abs() <= 10.0 * omega_max {
            w.push(format!("Δ = {} is not ≫ Ω = {} (adiabatic elimination unreliable)", self.delta, omega_max));
        }
        if self.v.abs() <= 2f64.sqrt() * self.omega_eff().abs() {
            w.push(format!("V = {} is not ≫ √2·Ω_eff = {} (no blockade)", self.v, 2f64.sqrt() * self.omega_eff()));
        }
        w
    }
}

pub fn rydberg_gg() -> StateVector {
    StateVector::basis(9, pair_index(Level::G, Level::G))
}

pub fn rydberg_rr() -> StateVector {
    StateVector::basis(9, pair_index(Level::R, Level::R))
}

/// |T⟩ = (|gr⟩ + |rg⟩)/√2
pub fn rydberg_t() -> StateVector {
    let mut v = CVector::zeros(9);
    v[pair_index(Level::G, Level::R)] = c(FRAC_1_SQRT_2, 0.0);
    v[pair_index(Level::R, Level::G)] = c(FRAC_1_SQRT_2, 0.0);
    StateVector::normalize(v).expect("nonzero")
}

/// Laser-noise generators: ℋ₁ on the g↔e transitions and ℋ₂ on e↔r.
pub fn rydberg_noise_generators() -> [CMatrix; 2] {
    let mut h1 = CMatrix::zeros(9, 9);
    add_single_atom_term(&mut h1, Level::E, Level::G, ONE);
    add_single_atom_term(&mut h1, Level::G, Level::E, ONE);
    let mut h2 = CMatrix::zeros(9, 9);
    add_single_atom_term(&mut h2, Level::R, Level::E, ONE);
    add_single_atom_term(&mut h2, Level::E, Level::R, ONE);
    [h1, h2]
}

/// Interaction-picture two-atom Hamiltonian with the laser-noise generators attached.
pub fn rydberg_hamiltonian(p: &RydbergParams, noise: NoiseProcess) -> Result<HamiltonianSpec> {
    let [h1, h2] = rydberg_noise_generators();
    let mut h = &h1 * C64::from(p.omega1) + &h2 * C64::from(p.omega2);
    add_single_atom_term(&mut h, Level::E, Level::E, C64::from(p.delta));
    let rr = pair_index(Level::R, Level::R);
    h[(rr, rr)] += C64::from(p.v);
    HamiltonianSpec::new(h, vec![h1, h2], noise)
}

/// Full versus blockaded effective dynamics from |gg⟩.
#[derive(Clone, Debug)]
pub struct EffectiveModelReport {
    pub omega_eff: f64,
    /// π/(2√2·Ω_eff)
    pub predicted_peak_time: f64,
    /// Time of the first |T⟩-population maximum of the full dynamics.
    pub observed_peak_time: Option<f64>,
    pub peak_population: f64,
    pub max_rr_population: f64,
    /// Largest probability of finding at least one atom in |e⟩.
    pub max_e_population: f64,
    pub warnings: Vec<String>,
}

impl EffectiveModelReport {
    pub fn peak_time_relative_error(&self) -> f64 {
        self.observed_peak_time
            .map(|t| (t - self.predicted_peak_time).abs() / self.predicted_peak_time)
            .unwrap_or(f64::INFINITY)
    }

    /// Peak time within 5% and |rr⟩ leakage ≤ 0.05.
    pub fn passes(&self) -> bool {
        self.peak_time_relative_error() <= 0.05 && self.max_rr_population <= 0.05
    }
}

/// Evolves |gg⟩ under the noiseless Hamiltonian on `samples` equal steps up
/// to `t_max` and compares with P_T(t) = sin²(√2·Ω_eff·t).
///
/// The first peak is the maximum of P_T over the first excursion above ½,
/// which ignores the small fast wiggles at frequency Δ.
pub fn validate_effective_model(p: &RydbergParams, t_max: f64, samples: usize) -> Result<EffectiveModelReport> {
    if !(t_max > 0.0) || samples == 0 {
        return Err(Error::InvalidParameter("t_max must be positive and samples nonzero".into()));
    }
    let spec = rydberg_hamiltonian(p, NoiseProcess::None)?;
    let dt = t_max / samples as f64;
    let step = expm(spec.h0(), dt)?;
    let t_state = rydberg_t();
    let e_indices: Vec<usize> = LEVELS
        .iter()
        .flat_map(|&a| LEVELS.iter().map(move |&b| (a, b)))
        .filter(|&(a, b)| a == Level::E || b == Level::E)
        .map(|(a, b)| pair_index(a, b))
        .collect();
    let rr = pair_index(Level::R, Level::R);

    let mut psi = rydberg_gg();
    let mut max_rr: f64 = 0.0;
    let mut max_e: f64 = 0.0;
    let mut peak: Option<(f64, f64)> = None;
    let mut in_excursion = false;
    let mut finished = false;
    for k in 0..=samples {
        if k > 0 {
            psi = psi.evolve(&step);
        }
        let t = k as f64 * dt;
        let amps = psi.amplitudes();
        max_rr = max_rr.max(amps[rr].norm_sqr());
        max_e = max_e.max(e_indices.iter().map(|&i| amps[i].norm_sqr()).sum());
        let pt = t_state.inner(&psi)?.norm_sqr();
        if finished {
            continue;
        }
        if pt > 0.5 {
            in_excursion = true;
            if peak.is_none_or(|(_, best)| pt > best) {
                peak = Some((t, pt));
            }
        } else if in_excursion {
            finished = true;
        }
    }
    let omega_eff = p.omega_eff();
    Ok(EffectiveModelReport {
        omega_eff,
        predicted_peak_time: std::f64::consts::PI / (2.0 * 2f64.sqrt() * omega_eff),
        observed_peak_time: peak.map(|(t, _)| t),
        peak_population: peak.map_or(0.0, |(_, v)| v),
        max_rr_population: max_rr,
        max_e_population: max_e,
        warnings: p.regime_warnings(),
    })
}

/// Electron–nuclear Ramsey sequence realising an unsharp nuclear measurement.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DilationParams {
    /// Hyperfine coupling g in H = g S_z I_z + Ω_L I_z.
    pub g: f64,
    pub omega_l: f64,
    /// Free-evolution time between the two π/2 pulses.
    pub t_int: f64,
    /// Larmor offset used to check that noise only changes phases.
    pub omega_eps: f64,
    /// Initial nuclear state a₀|+⟩ + b₀|−⟩.
    pub a0: C64,
    pub b0: C64,
}

impl DilationParams {
    /// Interaction time that yields mixing angle ϑ for coupling g.
    pub fn for_angle(angle: f64, g: f64, omega_l: f64) -> Self {
        Self {
            g,
            omega_l,
            t_int: 4.0 * angle / g,
            omega_eps: 0.05 * omega_l,
            a0: c(0.6, 0.0),
            b0: c(0.0, 0.8),
        }
    }

    /// ϑ = g t / 4. With spin-½ operators (eigenvalues ±½) the two
    /// conditional nuclear propagators differ in phase by g t/2 on |±⟩, and
    /// the induced Kraus operators depend on half of that.
    pub fn mixing_angle(&self) -> f64 {
        self.g * self.t_int / 4.0
    }

    /// p₀ = ½(cosϑ − sinϑ)²
    pub fn p0_equiv(&self) -> f64 {
        let a = self.mixing_angle();
        0.5 * (a.cos() - a.sin()).powi(2)
    }
}

#[derive(Clone, Debug)]
pub struct DilationReport {
    pub mixing_angle: f64,
    pub p0_equiv: f64,
    /// Induced nuclear Kraus operators for electron outcomes α = +1, −1.
    pub kraus: [CMatrix; 2],
    /// Largest distance, after stripping e^{−i(Ω_L I_z t + απ/4)} and a global
    /// phase, between an induced operator and the matching qubit Kraus operator.
    pub kraus_residual: f64,
    /// Largest distance between each induced operator and the closed form
    /// e^{−i(Ω_L I_z t + απ/4)}[cosϑ 1 + 2α sinϑ I_z]/√2, up to a global phase.
    pub closed_form_residual: f64,
    /// ‖Tr_e[M_e U ρ U† M_e] − K ρ_n K†‖ for the initial state, worst outcome.
    pub trace_out_residual: f64,
    /// ‖Σ K†K − 1‖_F
    pub completeness_residual: f64,
    /// Largest change in K†K when Ω_L → Ω_L + Ω_ε.
    pub larmor_shift_residual: f64,
}

fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// Distance between `a` and `b` after removing the best global phase.
fn phase_aligned_distance(a: &CMatrix, b: &CMatrix) -> f64 {
    let overlap = (b.adjoint() * a).trace();
    let phase = if overlap.norm() > 0.0 { overlap / overlap.norm() } else { ONE };
    (a - b * phase).norm()
}

/// ⟨α|_e U |+⟩_e for the composite electron ⊗ nuclear unitary.
fn nuclear_block(u: &CMatrix, alpha_row: usize) -> CMatrix {
    u.view((2 * alpha_row, 0), (2, 2)).into_owned()
}

fn ramsey_unitary(g: f64, omega_l: f64, t: f64) -> Result<CMatrix> {
    let half = C64::from(0.5);
    let (sx, sy, sz) = (pauli_x() * half, pauli_y() * half, pauli_z() * half);
    let iz = pauli_z() * half;
    let id = identity(2);
    let h = kron(&sz, &iz) * C64::from(g) + kron(&id, &iz) * C64::from(omega_l);
    let free = expm(&h, t)?;
    let rx = expm(&kron(&sx, &id), FRAC_PI_2)?;
    let ry = expm(&kron(&sy, &id), FRAC_PI_2)?;
    Ok(rx * free * ry)
}

fn induced_kraus(g: f64, omega_l: f64, t: f64) -> Result<[CMatrix; 2]> {
    let u = ramsey_unitary(g, omega_l, t)?;
    Ok([nuclear_block(&u, 0), nuclear_block(&u, 1)])
}

pub fn ramsey_dilation(p: &DilationParams) -> Result<DilationReport> {
    let angle = p.mixing_angle();
    if !(0.0..FRAC_PI_4).contains(&angle) {
        return Err(Error::InvalidParameter(format!("mixing angle {angle} outside [0, π/4)")));
    }
    let p0 = p.p0_equiv();
    let kraus = induced_kraus(p.g, p.omega_l, p.t_int)?;

    // α = +1 pairs with M₁ (weight √(1−p₀) on |+⟩), α = −1 with M₀.
    let qubit = if p0 < 0.5 {
        let f = kraus_qubit(p0)?;
        [f.operator(1).clone(), f.operator(0).clone()]
    } else {
        let m = identity(2) * C64::from(FRAC_1_SQRT_2);
        [m.clone(), m]
    };
    let iz = pauli_z() * C64::from(0.5);
    let mut kraus_residual: f64 = 0.0;
    let mut closed_form_residual: f64 = 0.0;
    for (row, alpha) in [(0usize, 1.0f64), (1, -1.0)] {
        let phase = |s: f64| C64::from_polar(1.0, -(p.omega_l * s * p.t_int + alpha * FRAC_PI_4));
        let strip = CMatrix::from_diagonal(&CVector::from_column_slice(&[phase(0.5), phase(-0.5)]));
        let stripped = strip.adjoint() * &kraus[row];
        kraus_residual = kraus_residual.max(phase_aligned_distance(&stripped, &qubit[row]));
        let closed = &strip
            * (identity(2) * C64::from(angle.cos()) + &iz * C64::from(2.0 * alpha * angle.sin()))
            / C64::from(2f64.sqrt());
        closed_form_residual = closed_form_residual.max(phase_aligned_distance(&kraus[row], &closed));
    }

    let completeness_residual =
        (kraus[0].adjoint() * &kraus[0] + kraus[1].adjoint() * &kraus[1] - identity(2)).norm();

    let psi_n = StateVector::normalize(CVector::from_column_slice(&[p.a0, p.b0]))?;
    let rho_n = psi_n.amplitudes() * psi_n.amplitudes().adjoint();
    let plus_e = CMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, ZERO]);
    let rho = kron(&plus_e, &rho_n);
    let u = ramsey_unitary(p.g, p.omega_l, p.t_int)?;
    let evolved = &u * rho * u.adjoint();
    let mut trace_out_residual: f64 = 0.0;
    for (row, k) in kraus.iter().enumerate() {
        let mut proj = CMatrix::zeros(2, 2);
        proj[(row, row)] = ONE;
        let me = kron(&proj, &identity(2));
        let full = &me * &evolved * me.adjoint();
        let reduced = full.view((0, 0), (2, 2)) + full.view((2, 2), (2, 2));
        trace_out_residual = trace_out_residual.max((reduced - k * &rho_n * k.adjoint()).norm());
    }

    let shifted = induced_kraus(p.g, p.omega_l + p.omega_eps, p.t_int)?;
    let larmor_shift_residual = kraus
        .iter()
        .zip(&shifted)
        .map(|(a, b)| (a.adjoint() * a - b.adjoint() * b).norm())
        .fold(0.0, f64::max);

    Ok(DilationReport {
        mixing_angle: angle,
        p0_equiv: p0,
        kraus,
        kraus_residual,
        closed_form_residual,
        trace_out_residual,
        completeness_residual,
        larmor_shift_residual,
    })
}
