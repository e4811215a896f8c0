//! Monte Carlo ensembles and parameter sweeps.
//!
//! Trajectory r of a run uses the seed (master, r); trajectories run in
//! parallel and are reduced in index order, so the thread count never
//! changes a result.

use rayon::prelude::*;

use super::config::{RawConfig, SweepAxis};
use super::engine::{run_reference, run_trajectory, ControlSchedule, Model, ReferenceTrajectory, TrajectoryRecord};
use crate::error::{Error, Result};
use crate::streams::TrajectorySeed;

/// Per-time statistics of F_EM over an ensemble.
#[derive(Clone, Debug, PartialEq)]
pub struct EnsembleSummary {
    /// Sweep coordinates (column label, value) of this point.
    pub axes: Vec<(String, f64)>,
    pub runs: usize,
    pub times: Vec<f64>,
    pub mean_f: Vec<f64>,
    /// Population standard deviation.
    pub std_f: Vec<f64>,
    /// 1 − F_EM(t_K) per trajectory, in trajectory order.
    pub infidelities: Vec<f64>,
}

impl EnsembleSummary {
    pub fn from_records(records: &[TrajectoryRecord]) -> Result<Self> {
        let first = records.first().ok_or(Error::Empty("ensemble"))?;
        let n = records.len() as f64;
        let len = first.rows.len();
        let mut mean_f = vec![0.0; len];
        let mut std_f = vec![0.0; len];
        for (i, (m, s)) in mean_f.iter_mut().zip(std_f.iter_mut()).enumerate() {
            let mean = records.iter().map(|r| r.rows[i].f_em).sum::<f64>() / n;
            let var = records.iter().map(|r| (r.rows[i].f_em - mean).powi(2)).sum::<f64>() / n;
            *m = mean;
            *s = var.sqrt();
        }
        Ok(Self {
            axes: Vec::new(),
            runs: records.len(),
            times: first.rows.iter().map(|r| r.t).collect(),
            mean_f,
            std_f,
            infidelities: records.iter().map(|r| r.infidelity).collect(),
        })
    }

    /// Mean over time of the per-time ensemble mean.
    pub fn time_averaged_mean(&self) -> f64 {
        self.mean_f.iter().sum::<f64>() / self.mean_f.len() as f64
    }

    pub fn final_mean(&self) -> f64 {
        *self.mean_f.last().expect("at least one time")
    }
}

/// Trajectories `0..runs` for the given master seed, in index order.
pub fn run_records(
    model: &Model,
    reference: &ReferenceTrajectory,
    schedule: &ControlSchedule,
    runs: usize,
    master_seed: u64,
) -> Result<Vec<TrajectoryRecord>> {
    (0..runs as u64)
        .into_par_iter()
        .map(|r| run_trajectory(model, reference, schedule, TrajectorySeed::new(master_seed, r)))
        .collect()
}

pub fn run_ensemble(model: &Model, schedule: &ControlSchedule, runs: usize, master_seed: u64) -> Result<EnsembleSummary> {
    if runs == 0 {
        return Err(Error::InvalidParameter("an ensemble needs at least one run".into()));
    }
    let reference = run_reference(&model.spec, &model.psi0, schedule)?;
    EnsembleSummary::from_records(&run_records(model, &reference, schedule, runs, master_seed)?)
}

/// Cartesian product of the axes; the first axis varies slowest.
pub fn sweep_grid(axes: &[SweepAxis]) -> Vec<Vec<(String, f64)>> {
    axes.iter().fold(vec![Vec::new()], |grid, axis| {
        grid.iter()
            .flat_map(|point| {
                axis.values.iter().map(move |&v| {
                    let mut p = point.clone();
                    p.push((axis.path.clone(), v));
                    p
                })
            })
            .collect()
    })
}

/// Switches applied on top of a scenario when running it.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct RunOptions {
    pub runs: Option<usize>,
    pub seed: Option<u64>,
    pub no_feedback: bool,
    pub no_measurement: bool,
}

impl RunOptions {
    pub fn schedule(&self, base: &ControlSchedule) -> ControlSchedule {
        ControlSchedule {
            feedback: base.feedback && !self.no_feedback,
            measurement: base.measurement && !self.no_measurement,
            ..*base
        }
    }
}

/// One summary per sweep point (a single summary without sweep axes).
/// Every point reuses the same trajectory seeds.
pub fn run_sweep(raw: &RawConfig, options: &RunOptions) -> Result<Vec<EnsembleSummary>> {
    let axes = raw.sweep_axes()?;
    let mut out = Vec::new();
    for point in sweep_grid(&axes) {
        let mut cfg = raw.clone();
        for (path, v) in &point {
            cfg.set_value(path, toml::Value::Float(*v))?;
        }
        let scenario = cfg.resolve()?;
        let model = scenario.model()?;
        let schedule = options.schedule(&scenario.schedule);
        let runs = options.runs.unwrap_or(scenario.runs);
        let seed = options.seed.unwrap_or(scenario.seed);
        let mut summary = run_ensemble(&model, &schedule, runs, seed)?;
        summary.axes = point
            .iter()
            .zip(&axes)
            .map(|((_, v), axis)| (axis.label().to_string(), *v))
            .collect();
        out.push(summary);
    }
    Ok(out)
}
