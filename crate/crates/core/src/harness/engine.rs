//! Single trajectories: the exact reference, the bare noisy state and the
//! measured-and-corrected noisy state, all propagated in lock step.

use crate::dynamics::{HamiltonianSpec, NoiseRealization, Propagator};
use crate::error::{Error, Result};
use crate::feedback::{build_feedback, extract_feedback_hamiltonian, FieldSample};
use crate::measurement::{deterministic_branch, measure, KrausFamily};
use crate::qmath::{expm, fidelity, CMatrix, StateVector};
use crate::streams::{MeasurementStream, TrajectorySeed};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ControlSchedule {
    /// Measurement period τ.
    pub tau: f64,
    /// Number of measurement-feedback cycles.
    pub cycles: usize,
    /// Integrator step for smoothly time-dependent noise.
    pub step_dt: f64,
    pub feedback: bool,
    pub measurement: bool,
}

impl ControlSchedule {
    /// Measurement and feedback on, step τ/50.
    pub fn new(tau: f64, cycles: usize) -> Result<Self> {
        Self { tau, cycles, step_dt: tau / 50.0, feedback: true, measurement: true }.validated()
    }

    pub fn validated(self) -> Result<Self> {
        if !(self.tau > 0.0) || !self.tau.is_finite() {
            return Err(Error::InvalidParameter(format!("tau must be positive, got {}", self.tau)));
        }
        if !(self.step_dt > 0.0) || self.step_dt > self.tau * (1.0 + 1e-12) {
            return Err(Error::InvalidParameter(format!(
                "step_dt must lie in (0, tau], got {} with tau = {}",
                self.step_dt, self.tau
            )));
        }
        Ok(self)
    }

    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.tau
    }

    pub fn total_time(&self) -> f64 {
        self.time(self.cycles)
    }
}

/// ψ_E(t_k) for k = 0..=K.
#[derive(Clone, Debug, PartialEq)]
pub struct ReferenceTrajectory {
    pub times: Vec<f64>,
    pub states: Vec<StateVector>,
}

pub fn run_reference(spec: &HamiltonianSpec, psi0: &StateVector, schedule: &ControlSchedule) -> Result<ReferenceTrajectory> {
    if spec.dim() != psi0.dim() {
        return Err(Error::DimensionMismatch { left: spec.dim(), right: psi0.dim() });
    }
    let step = expm(spec.h0(), schedule.tau)?;
    let mut states = Vec::with_capacity(schedule.cycles + 1);
    states.push(psi0.clone());
    for k in 1..=schedule.cycles {
        let next = states[k - 1].evolve(&step);
        states.push(next);
    }
    Ok(ReferenceTrajectory { times: (0..=schedule.cycles).map(|k| schedule.time(k)).collect(), states })
}

/// Everything a trajectory needs besides its seed.
#[derive(Clone, Debug)]
pub struct Model {
    pub spec: HamiltonianSpec,
    pub psi0: StateVector,
    /// State whose population is reported as F_T·.
    pub target: StateVector,
    /// Observable reported in the sz_* columns.
    pub observable: CMatrix,
    pub family: KrausFamily,
}

/// Metrics at one time t_k.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrajectoryRow {
    pub t: f64,
    /// Sampled outcome at this cycle; `None` at t = 0 or without measurement.
    pub outcome: Option<usize>,
    pub sz_e: f64,
    pub sz_n: f64,
    pub sz_nm: f64,
    pub f_en: f64,
    pub f_em: f64,
    pub f_te: f64,
    pub f_tn: f64,
    pub f_tm: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryRecord {
    pub seed: TrajectorySeed,
    pub rows: Vec<TrajectoryRow>,
    /// 1 − F_EM(t_K)
    pub infidelity: f64,
}

impl TrajectoryRecord {
    pub fn f_em(&self) -> impl Iterator<Item = f64> + '_ {
        self.rows.iter().map(|r| r.f_em)
    }

    /// Mean of F_EM over all recorded times.
    pub fn time_averaged_f_em(&self) -> f64 {
        self.f_em().sum::<f64>() / self.rows.len() as f64
    }
}

fn row(model: &Model, t: f64, outcome: Option<usize>, e: &StateVector, n: &StateVector, nm: &StateVector) -> Result<TrajectoryRow> {
    Ok(TrajectoryRow {
        t,
        outcome,
        sz_e: e.expectation(&model.observable),
        sz_n: n.expectation(&model.observable),
        sz_nm: nm.expectation(&model.observable),
        f_en: fidelity(e, n)?,
        f_em: fidelity(e, nm)?,
        f_te: fidelity(&model.target, e)?,
        f_tn: fidelity(&model.target, n)?,
        f_tm: fidelity(&model.target, nm)?,
    })
}

/// One noisy trajectory with periodic measurement and feedback.
///
/// Per cycle the noisy states are propagated over (t_{k−1}, t_k] with a
/// shared noise realization, the controlled state is measured, and the
/// feedback unitary built from ψ_E(t_k) and its branch for the observed
/// outcome is applied.
pub fn run_trajectory(
    model: &Model,
    reference: &ReferenceTrajectory,
    schedule: &ControlSchedule,
    seed: TrajectorySeed,
) -> Result<TrajectoryRecord> {
    let dim = model.spec.dim();
    for d in [model.psi0.dim(), model.family.dim(), model.target.dim(), model.observable.nrows()] {
        if d != dim {
            return Err(Error::DimensionMismatch { left: dim, right: d });
        }
    }
    if reference.states.len() != schedule.cycles + 1 {
        return Err(Error::DimensionMismatch { left: schedule.cycles + 1, right: reference.states.len() });
    }
    let propagator = Propagator::new(schedule.step_dt)?;
    let mut noise = NoiseRealization::new(&model.spec, seed);
    let mut stream = MeasurementStream::new(seed);

    let mut psi_n = model.psi0.clone();
    let mut psi_nm = model.psi0.clone();
    let mut rows = Vec::with_capacity(schedule.cycles + 1);
    rows.push(row(model, 0.0, None, &reference.states[0], &psi_n, &psi_nm)?);

    for k in 1..=schedule.cycles {
        let (t0, t1) = (schedule.time(k - 1), schedule.time(k));
        let u = propagator.evolution(&model.spec, t0, t1, &mut noise)?;
        psi_n = psi_n.evolve(&u);
        psi_nm = psi_nm.evolve(&u);
        let exact = &reference.states[k];
        let mut outcome = None;
        if schedule.measurement {
            let m = measure(&model.family, &psi_nm, stream.for_cycle(k))?;
            outcome = Some(m.index);
            psi_nm = m.post_state;
            if schedule.feedback {
                let branch = deterministic_branch(&model.family, exact, m.index)?;
                psi_nm = build_feedback(exact, &branch.post_state)?.apply(&psi_nm);
            }
        }
        rows.push(row(model, t1, outcome, exact, &psi_n, &psi_nm)?);
    }
    let infidelity = 1.0 - fidelity(&reference.states[schedule.cycles], &psi_nm)?;
    Ok(TrajectoryRecord { seed, rows, infidelity })
}

/// Feedback fields B·t_F for every cycle and every outcome, from the
/// reference trajectory alone (qubit systems only).
pub fn feedback_fields(model: &Model, reference: &ReferenceTrajectory, feedback_time: f64) -> Result<Vec<FieldSample>> {
    if model.spec.dim() != 2 {
        return Err(Error::InvalidParameter("feedback fields are defined for qubits only".into()));
    }
    let mut out = Vec::new();
    for (k, exact) in reference.states.iter().enumerate().skip(1) {
        for n in 0..model.family.outcomes() {
            let branch = deterministic_branch(&model.family, exact, n)?;
            let u = build_feedback(exact, &branch.post_state)?.labelled(k, n);
            let h = extract_feedback_hamiltonian(&u, feedback_time)?;
            let f = h.fields.expect("qubit").scaled(feedback_time);
            out.push(FieldSample { time: reference.times[k], outcome: n, bx_tf: f.bx, by_tf: f.by, bz_tf: f.bz });
        }
    }
    Ok(out)
}
