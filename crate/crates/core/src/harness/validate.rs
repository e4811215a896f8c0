//! Self-check suites behind `qtrack validate`.

use std::f64::consts::PI;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::Result;
use crate::feedback::{build_feedback, verify_restore};
use crate::measurement::{deterministic_branch, kraus_nlevel, kraus_qubit, KrausFamily, MIN_PROBABILITY};
use crate::qmath::{unitarity_residual, CVector, StateVector, C64};
use crate::systems::{ramsey_dilation, validate_effective_model, DilationParams, RydbergParams};

#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub label: String,
    pub value: f64,
    pub limit: f64,
}

impl Check {
    fn at_most(label: impl Into<String>, value: f64, limit: f64) -> Self {
        Self { label: label.into(), value, limit }
    }

    pub fn passed(&self) -> bool {
        self.value <= self.limit
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SuiteReport {
    pub name: &'static str,
    pub checks: Vec<Check>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(Check::passed)
    }
}

impl fmt::Display for SuiteReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "[{}] {}", if self.passed() { "PASS" } else { "FAIL" }, self.name)?;
        for c in &self.checks {
            let mark = if c.passed() { "ok  " } else { "FAIL" };
            writeln!(f, "  {mark} {}: {:.3e} (limit {:.1e})", c.label, c.value, c.limit)?;
        }
        Ok(())
    }
}

pub const SUITES: [&str; 4] = ["povm", "feedback", "dilation", "effective"];

/// Normalized state with independent complex Gaussian amplitudes.
pub fn random_state<R: Rng>(dim: usize, rng: &mut R) -> StateVector {
    let v = CVector::from_fn(dim, |_, _| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)));
    StateVector::normalize(v).expect("a Gaussian vector is nonzero")
}

/// Probability vector with every entry in (0, 1).
pub fn random_probabilities<R: Rng>(dim: usize, rng: &mut R) -> Vec<f64> {
    let w: Vec<f64> = (0..dim).map(|_| rng.random_range(0.05..1.0)).collect();
    let total: f64 = w.iter().sum();
    w.iter().map(|x| x / total).collect()
}

pub fn random_family<R: Rng>(dim: usize, rng: &mut R) -> KrausFamily {
    if dim == 2 {
        kraus_qubit(rng.random_range(0.01..0.49)).expect("valid p0")
    } else {
        kraus_nlevel(&random_probabilities(dim, rng)).expect("valid p")
    }
}

pub fn fig3_probabilities() -> Vec<f64> {
    let mut p = vec![1.0 / 18.0; 4];
    p.extend([3.0 / 18.0; 4]);
    p.push(1.0 / 9.0);
    p
}

pub fn povm_suite(seed: u64) -> Result<SuiteReport> {
    let mut checks = Vec::new();
    for p0 in [0.05, 0.2, 0.35, 0.49] {
        checks.push(Check::at_most(format!("qubit p0={p0}"), kraus_qubit(p0)?.completeness_residual(), 1e-12));
    }
    checks.push(Check::at_most("nine-level blocks", kraus_nlevel(&fig3_probabilities())?.completeness_residual(), 1e-12));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let worst = (0..100)
        .map(|_| kraus_nlevel(&random_probabilities(9, &mut rng)).map(|f| f.completeness_residual()))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    checks.push(Check::at_most("100 random nine-level", worst, 1e-12));
    Ok(SuiteReport { name: "povm", checks })
}

/// Unitarity and restore residuals for random states, families and outcomes.
pub fn feedback_suite(seed: u64, samples: usize) -> Result<SuiteReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut checks = Vec::new();
    for dim in 2..=9 {
        let (mut unitarity, mut restore) = (0.0f64, 0.0f64);
        let mut done = 0;
        while done < samples {
            let psi = random_state(dim, &mut rng);
            let family = random_family(dim, &mut rng);
            let n = rng.random_range(0..family.outcomes());
            if family.probabilities(&psi)?[n] < MIN_PROBABILITY {
                continue;
            }
            let branch = deterministic_branch(&family, &psi, n)?;
            let u = build_feedback(&psi, &branch.post_state)?;
            unitarity = unitarity.max(unitarity_residual(&u.matrix));
            restore = restore.max((verify_restore(&u, &psi, &branch.post_state)? - 1.0).abs());
            done += 1;
        }
        checks.push(Check::at_most(format!("N={dim} unitarity"), unitarity, 1e-10));
        checks.push(Check::at_most(format!("N={dim} restore"), restore, 1e-10));
    }
    Ok(SuiteReport { name: "feedback", checks })
}

pub fn dilation_suite() -> Result<SuiteReport> {
    let mut checks = Vec::new();
    for angle in [0.05, 0.32175, 0.7] {
        let r = ramsey_dilation(&DilationParams::for_angle(angle, 1.0, 2.0))?;
        checks.push(Check::at_most(format!("ϑ={angle} kraus"), r.kraus_residual, 1e-10));
        checks.push(Check::at_most(format!("ϑ={angle} trace-out"), r.trace_out_residual, 1e-12));
        checks.push(Check::at_most(format!("ϑ={angle} completeness"), r.completeness_residual, 1e-12));
        checks.push(Check::at_most(format!("ϑ={angle} larmor shift"), r.larmor_shift_residual, 1e-12));
    }
    Ok(SuiteReport { name: "dilation", checks })
}

pub fn effective_suite() -> Result<SuiteReport> {
    let omega = 2.0 * PI * 15.0;
    let p = RydbergParams { omega1: omega, omega2: omega, delta: 2.0 * PI * 740.0, v: omega };
    let r = validate_effective_model(&p, 1.0, 20_000)?;
    Ok(SuiteReport {
        name: "effective",
        checks: vec![
            Check::at_most("peak time relative error", r.peak_time_relative_error(), 0.05),
            Check::at_most("max |rr> population", r.max_rr_population, 0.05),
            Check::at_most("regime warnings", r.warnings.len() as f64, 0.0),
        ],
    })
}

pub fn run_suite(name: &str, seed: u64) -> Option<Result<SuiteReport>> {
    match name {
        "povm" => Some(povm_suite(seed)),
        "feedback" => Some(feedback_suite(seed, 1000)),
        "dilation" => Some(dilation_suite()),
        "effective" => Some(effective_suite()),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suites_pass() {
        assert!(povm_suite(1).unwrap().passed());
        assert!(feedback_suite(1, 20).unwrap().passed());
        assert!(dilation_suite().unwrap().passed());
        assert!(effective_suite().unwrap().passed());
    }

    #[test]
    fn report_formatting() {
        let r = SuiteReport { name: "x", checks: vec![Check::at_most("a", 2.0, 1.0)] };
        assert!(!r.passed());
        assert!(r.to_string().starts_with("[FAIL] x"));
    }
}
