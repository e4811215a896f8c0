//! Scenario files.
//!
//! A scenario is a TOML document with the sections `[system]`, `[noise]`,
//! `[measurement]`, `[schedule]`, `[ensemble]`, `[output]` and `[sweep]`.
//! Numeric entries may be written as expressions over `pi`, the other
//! `[system]` scalars and, outside `[system]`, the schedule values:
//!
//! ```toml
//! [system]
//! kind = "driven_qubit"
//! omega0 = 1.0
//! beta0 = "omega0"
//! d_eps = "0.1 * omega0"
//! d_beta = "0.1 * omega0"
//!
//! [measurement]
//! kind = "qubit"
//! p0 = 0.35
//!
//! [schedule]
//! tau = "2 * pi / sqrt(omega0^2 + beta0^2) / 50"
//! K = 500
//!
//! [sweep]
//! "system.d_eps" = { start = 0, stop = "0.2 * omega0", count = 11 }
//! ```
//!
//! Frequencies are angular. `2π × 15 MHz` is written `2 * pi * 15` with
//! time in microseconds.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use toml::{Table, Value};

use super::engine::{ControlSchedule, Model};
use super::presets;
use crate::dynamics::NoiseProcess;
use crate::error::{Error, Result};
use crate::measurement::{kraus_nlevel, kraus_qubit, KrausFamily};
use crate::qmath::{outer, pauli_z, CMatrix, StateVector};
use crate::systems::{
    driven_qubit_hamiltonians, rydberg_gg, rydberg_hamiltonian, rydberg_t, spin_hamiltonians, DrivenQubitParams,
    RydbergParams, SpinFieldParams,
};

const SECTIONS: [&str; 7] = ["system", "noise", "measurement", "schedule", "ensemble", "output", "sweep"];

fn config_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

/// An unresolved scenario document.
#[derive(Clone, Debug, PartialEq)]
pub struct RawConfig {
    pub name: String,
    table: Table,
}

impl RawConfig {
    pub fn parse(name: &str, text: &str) -> Result<Self> {
        let table: Table = toml::from_str(text).map_err(|e| config_err(format!("{name}: {e}")))?;
        for (section, value) in &table {
            if !SECTIONS.contains(&section.as_str()) {
                return Err(config_err(format!("{name}: unknown section [{section}]")));
            }
            if !value.is_table() {
                return Err(config_err(format!("{name}: [{section}] must be a table")));
            }
        }
        Ok(Self { name: name.to_string(), table })
    }

    /// A preset name or a path to a TOML file.
    pub fn load(scenario: &str) -> Result<Self> {
        if let Some(text) = presets::get(scenario) {
            return Self::parse(scenario, text);
        }
        let path = Path::new(scenario);
        let text = std::fs::read_to_string(path).map_err(|e| {
            config_err(format!("'{scenario}' is neither a preset ({}) nor a readable file: {e}", presets::NAMES.join(", ")))
        })?;
        let name = path.file_stem().and_then(|s| s.to_str()).unwrap_or(scenario);
        Self::parse(name, &text)
    }

    /// Applies `section.key=value`. The value is read as a TOML literal when
    /// possible and otherwise kept as an expression string.
    pub fn set(&mut self, assignment: &str) -> Result<()> {
        let (path, value) = assignment
            .split_once('=')
            .ok_or_else(|| config_err(format!("override '{assignment}' is not of the form section.key=value")))?;
        let value = value.trim();
        let parsed = toml::from_str::<Table>(&format!("v = {value}"))
            .ok()
            .and_then(|mut t| t.remove("v"))
            .unwrap_or_else(|| Value::String(value.to_string()));
        self.set_value(path.trim(), parsed)
    }

    pub fn set_value(&mut self, path: &str, value: Value) -> Result<()> {
        let (section, key) = split_path(path)?;
        if !SECTIONS.contains(&section) || section == "sweep" {
            return Err(config_err(format!("cannot override '{path}'")));
        }
        let entry = self.table.entry(section).or_insert_with(|| Value::Table(Table::new()));
        entry.as_table_mut().expect("sections are tables").insert(key.to_string(), value);
        Ok(())
    }

    /// Replaces the `[sweep]` section by `key=v1,v2,...` (an empty value
    /// clears all axes).
    pub fn set_sweep(&mut self, assignment: &str) -> Result<()> {
        let mut sweep = Table::new();
        if !assignment.trim().is_empty() {
            let (path, values) = assignment
                .split_once('=')
                .ok_or_else(|| config_err(format!("sweep '{assignment}' is not of the form section.key=v1,v2,...")))?;
            let values = values.split(',').map(|v| Value::String(v.trim().to_string())).collect();
            sweep.insert(path.trim().to_string(), Value::Array(values));
        }
        self.table.insert("sweep".into(), Value::Table(sweep));
        Ok(())
    }

    fn section(&self, name: &str) -> Table {
        self.table.get(name).and_then(Value::as_table).cloned().unwrap_or_default()
    }

    /// Evaluated sweep axes, in key order. The grid is their Cartesian product.
    pub fn sweep_axes(&self) -> Result<Vec<SweepAxis>> {
        let scope = self.resolve_scope()?;
        let mut axes = Vec::new();
        for (path, spec) in self.section("sweep") {
            split_path(&path)?;
            let values = match &spec {
                Value::Array(items) => items.iter().map(|v| scope.number(&path, v)).collect::<Result<Vec<_>>>()?,
                Value::Table(t) => {
                    let start = scope.number(&path, t.get("start").ok_or_else(|| config_err(format!("{path}: missing start")))?)?;
                    let stop = scope.number(&path, t.get("stop").ok_or_else(|| config_err(format!("{path}: missing stop")))?)?;
                    let count = t
                        .get("count")
                        .and_then(Value::as_integer)
                        .filter(|&c| c >= 1)
                        .ok_or_else(|| config_err(format!("{path}: count must be a positive integer")))?
                        as usize;
                    if count == 1 {
                        vec![start]
                    } else {
                        (0..count).map(|i| start + (stop - start) * i as f64 / (count - 1) as f64).collect()
                    }
                }
                _ => return Err(config_err(format!("sweep '{path}' must be a list or a {{start, stop, count}} table"))),
            };
            axes.push(SweepAxis { path, values });
        }
        Ok(axes)
    }

    /// Scalars visible to expressions: `pi`, system scalars, schedule scalars.
    fn resolve_scope(&self) -> Result<Scope> {
        let mut scope = Scope::default();
        scope.absorb("system", &self.section("system"), &["kind"])?;
        scope.absorb("schedule", &self.section("schedule"), &["feedback", "measurement"])?;
        Ok(scope)
    }

    pub fn resolve(&self) -> Result<Scenario> {
        let scope = self.resolve_scope()?;
        let system = resolve_system(&self.section("system"), &scope)?;

        let sched = self.section("schedule");
        check_keys("schedule", &sched, &["tau", "K", "step_dt", "resample_dt", "feedback", "measurement", "feedback_time"])?;
        let tau = scope.require("schedule", "tau")?;
        let cycles = scope.require("schedule", "K")?;
        if !(cycles >= 1.0) || cycles.fract() != 0.0 {
            return Err(config_err(format!("schedule.K must be a positive integer, got {cycles}")));
        }
        let schedule = ControlSchedule {
            tau,
            cycles: cycles as usize,
            step_dt: scope.get("schedule.step_dt").unwrap_or(tau / 50.0),
            feedback: flag(&sched, "feedback")?.unwrap_or(true),
            measurement: flag(&sched, "measurement")?.unwrap_or(true),
        }
        .validated()
        .map_err(|e| config_err(e.to_string()))?;
        let resample_dt = scope.get("schedule.resample_dt").unwrap_or(tau / 10.0);
        let feedback_time = scope.get("schedule.feedback_time").unwrap_or(tau / 100.0);

        let noise = resolve_noise(&self.section("noise"), &scope, resample_dt)?;
        let measurement = resolve_measurement(&self.section("measurement"), &scope)?;

        let ens = self.section("ensemble");
        check_keys("ensemble", &ens, &["runs", "seed"])?;
        let runs = integer(&ens, "ensemble.runs")?.unwrap_or(1);
        if runs < 1 {
            return Err(config_err("ensemble.runs must be at least 1"));
        }
        let seed = integer(&ens, "ensemble.seed")?.unwrap_or(0);

        let out = self.section("output");
        check_keys("output", &out, &["path"])?;
        let output = match out.get("path") {
            None => None,
            Some(Value::String(s)) => Some(PathBuf::from(s)),
            Some(_) => return Err(config_err("output.path must be a string")),
        };

        Ok(Scenario {
            name: self.name.clone(),
            system,
            noise,
            measurement,
            schedule,
            feedback_time,
            runs: runs as usize,
            seed,
            output,
        })
    }
}

fn split_path(path: &str) -> Result<(&str, &str)> {
    match path.split_once('.') {
        Some((s, k)) if !s.is_empty() && !k.is_empty() => Ok((s, k)),
        _ => Err(config_err(format!("'{path}' is not of the form section.key"))),
    }
}

fn check_keys(section: &str, table: &Table, allowed: &[&str]) -> Result<()> {
    for key in table.keys() {
        if !allowed.contains(&key.as_str()) {
            return Err(config_err(format!("unknown key {section}.{key} (expected one of {})", allowed.join(", "))));
        }
    }
    Ok(())
}

fn flag(table: &Table, key: &str) -> Result<Option<bool>> {
    match table.get(key) {
        None => Ok(None),
        Some(Value::Boolean(b)) => Ok(Some(*b)),
        Some(_) => Err(config_err(format!("{key} must be true or false"))),
    }
}

fn integer(table: &Table, path: &str) -> Result<Option<u64>> {
    let key = path.split_once('.').map_or(path, |(_, k)| k);
    match table.get(key) {
        None => Ok(None),
        Some(Value::Integer(i)) if *i >= 0 => Ok(Some(*i as u64)),
        Some(_) => Err(config_err(format!("{path} must be a non-negative integer"))),
    }
}

fn kind<'a>(section: &str, table: &'a Table) -> Result<Option<&'a str>> {
    match table.get("kind") {
        None => Ok(None),
        Some(Value::String(s)) => Ok(Some(s.as_str())),
        Some(_) => Err(config_err(format!("{section}.kind must be a string"))),
    }
}

/// Named scalars available to expressions.
#[derive(Clone, Debug, Default)]
struct Scope {
    /// Keyed both as `key` and `section.key`.
    values: BTreeMap<String, f64>,
}

impl Scope {
    fn get(&self, name: &str) -> Option<f64> {
        self.values.get(name).copied()
    }

    fn require(&self, section: &str, key: &str) -> Result<f64> {
        self.get(&format!("{section}.{key}")).ok_or_else(|| config_err(format!("missing {section}.{key}")))
    }

    fn context(&self) -> meval::Context<'static> {
        let mut ctx = meval::Context::new();
        for (k, v) in &self.values {
            if !k.contains('.') {
                ctx.var(k.clone(), *v);
            }
        }
        ctx
    }

    fn number(&self, path: &str, value: &Value) -> Result<f64> {
        let x = match value {
            Value::Integer(i) => *i as f64,
            Value::Float(f) => *f,
            Value::String(s) => {
                let expr: meval::Expr = s.parse().map_err(|e| config_err(format!("{path} = \"{s}\": {e}")))?;
                expr.eval_with_context(self.context()).map_err(|e| config_err(format!("{path} = \"{s}\": {e}")))?
            }
            _ => return Err(config_err(format!("{path} must be a number or an expression"))),
        };
        if !x.is_finite() {
            return Err(config_err(format!("{path} evaluates to {x}")));
        }
        Ok(x)
    }

    /// Evaluates every scalar of a section, in whatever order the references
    /// between them allow.
    fn absorb(&mut self, section: &str, table: &Table, skip: &[&str]) -> Result<()> {
        let mut pending: Vec<(&String, &Value)> =
            table.iter().filter(|(k, v)| !skip.contains(&k.as_str()) && !v.is_array() && !v.is_table()).collect();
        while !pending.is_empty() {
            let mut last_error = None;
            let before = pending.len();
            pending.retain(|(k, v)| match self.number(&format!("{section}.{k}"), v) {
                Ok(x) => {
                    self.values.insert((*k).clone(), x);
                    self.values.insert(format!("{section}.{k}"), x);
                    false
                }
                Err(e) => {
                    last_error = Some(e);
                    true
                }
            });
            if pending.len() == before {
                return Err(last_error.expect("an entry failed"));
            }
        }
        Ok(())
    }
}

fn resolve_system(table: &Table, scope: &Scope) -> Result<SystemConfig> {
    let get = |key: &str| scope.require("system", key);
    match kind("system", table)? {
        Some("spin") => {
            check_keys("system", table, &["kind", "omega_L", "theta", "phi", "omega_eps", "theta_p", "phi_p"])?;
            let (theta, phi) = (get("theta")?, get("phi")?);
            Ok(SystemConfig::Spin(SpinFieldParams {
                omega_l: get("omega_L")?,
                theta,
                phi,
                omega_eps: scope.get("system.omega_eps").unwrap_or(0.0),
                theta_p: scope.get("system.theta_p").unwrap_or(theta),
                phi_p: scope.get("system.phi_p").unwrap_or(phi),
            }))
        }
        Some("driven_qubit") => {
            check_keys("system", table, &["kind", "omega0", "beta0", "d_eps", "d_beta"])?;
            Ok(SystemConfig::DrivenQubit(DrivenQubitParams {
                omega0: get("omega0")?,
                beta0: get("beta0")?,
                d_eps: scope.get("system.d_eps").unwrap_or(0.0),
                d_beta: scope.get("system.d_beta").unwrap_or(0.0),
            }))
        }
        Some("rydberg") => {
            check_keys("system", table, &["kind", "omega1", "omega2", "delta", "V"])?;
            Ok(SystemConfig::Rydberg(RydbergParams {
                omega1: get("omega1")?,
                omega2: get("omega2")?,
                delta: get("delta")?,
                v: get("V")?,
            }))
        }
        Some(other) => Err(config_err(format!("unknown system.kind '{other}' (spin, driven_qubit, rydberg)"))),
        None => Err(config_err("missing system.kind")),
    }
}

fn resolve_noise(table: &Table, scope: &Scope, resample_dt: f64) -> Result<NoiseConfig> {
    let mut local = scope.clone();
    local.absorb("noise", table, &["kind"])?;
    let get = |key: &str| local.require("noise", key);
    match kind("noise", table)? {
        None | Some("model") => {
            check_keys("noise", table, &["kind"])?;
            Ok(NoiseConfig::Model)
        }
        Some("none") => {
            check_keys("noise", table, &["kind"])?;
            Ok(NoiseConfig::None)
        }
        Some("gaussian") => {
            check_keys("noise", table, &["kind", "mu", "sigma", "reference"])?;
            Ok(NoiseConfig::Gaussian { mu: get("mu")?, sigma: get("sigma")?, reference: get("reference")?, resample_dt })
        }
        Some("pulse") => {
            check_keys("noise", table, &["kind", "center", "width", "amplitude"])?;
            Ok(NoiseConfig::Pulse { center: get("center")?, width: get("width")?, amplitude: get("amplitude")? })
        }
        Some(other) => Err(config_err(format!("unknown noise.kind '{other}' (model, none, gaussian, pulse)"))),
    }
}

fn resolve_measurement(table: &Table, scope: &Scope) -> Result<MeasurementConfig> {
    let mut local = scope.clone();
    local.absorb("measurement", table, &["kind"])?;
    let get = |key: &str| local.require("measurement", key);
    match kind("measurement", table)? {
        Some("qubit") => {
            check_keys("measurement", table, &["kind", "p0"])?;
            Ok(MeasurementConfig::Qubit { p0: get("p0")? })
        }
        Some("nlevel") => {
            check_keys("measurement", table, &["kind", "p"])?;
            let items = table
                .get("p")
                .and_then(Value::as_array)
                .ok_or_else(|| config_err("measurement.p must be a list for kind = \"nlevel\""))?;
            let p = items.iter().map(|v| local.number("measurement.p", v)).collect::<Result<Vec<_>>>()?;
            Ok(MeasurementConfig::NLevel { p })
        }
        Some("blocks") => {
            check_keys("measurement", table, &["kind", "p", "p9"])?;
            Ok(MeasurementConfig::Blocks { p: get("p")?, p9: get("p9")? })
        }
        Some(other) => Err(config_err(format!("unknown measurement.kind '{other}' (qubit, nlevel, blocks)"))),
        None => Err(config_err("missing measurement.kind")),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepAxis {
    /// `section.key`
    pub path: String,
    pub values: Vec<f64>,
}

impl SweepAxis {
    /// Column name: the key without its section.
    pub fn label(&self) -> &str {
        self.path.split_once('.').map_or(&self.path, |(_, k)| k)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SystemConfig {
    Spin(SpinFieldParams),
    DrivenQubit(DrivenQubitParams),
    Rydberg(RydbergParams),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum NoiseConfig {
    /// The static errors carried by the system parameters.
    Model,
    None,
    /// Piecewise-constant Gaussian amplitudes on every noise generator.
    Gaussian { mu: f64, sigma: f64, reference: f64, resample_dt: f64 },
    Pulse { center: f64, width: f64, amplitude: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub enum MeasurementConfig {
    Qubit { p0: f64 },
    NLevel { p: Vec<f64> },
    /// Nine levels: p on the first four, (1 − p₉ − 4p)/4 on the next four, p₉ on the last.
    Blocks { p: f64, p9: f64 },
}

impl MeasurementConfig {
    pub fn family(&self) -> Result<KrausFamily> {
        match self {
            MeasurementConfig::Qubit { p0 } => kraus_qubit(*p0),
            MeasurementConfig::NLevel { p } => kraus_nlevel(p),
            MeasurementConfig::Blocks { p, p9 } => {
                let q = (1.0 - p9 - 4.0 * p) / 4.0;
                let mut v = vec![*p; 4];
                v.extend([q; 4]);
                v.push(*p9);
                kraus_nlevel(&v)
            }
        }
    }
}

/// A fully evaluated scenario.
#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub system: SystemConfig,
    pub noise: NoiseConfig,
    pub measurement: MeasurementConfig,
    pub schedule: ControlSchedule,
    /// t_F used when reporting feedback fields.
    pub feedback_time: f64,
    pub runs: usize,
    pub seed: u64,
    pub output: Option<PathBuf>,
}

impl Scenario {
    /// Hamiltonians, initial and target states, observable and Kraus family.
    ///
    /// Qubit systems start in |+⟩, which is also the target; the observable
    /// is σ_z. The Rydberg pair starts in |gg⟩ with target |T⟩ and reports
    /// |T⟩⟨T| − |gg⟩⟨gg|.
    pub fn model(&self) -> Result<Model> {
        let (base, psi0, target, observable) = match &self.system {
            SystemConfig::Spin(p) => {
                let plus = StateVector::basis(2, 0);
                (spin_hamiltonians(p)?.spec, plus.clone(), plus, pauli_z())
            }
            SystemConfig::DrivenQubit(p) => {
                let plus = StateVector::basis(2, 0);
                (driven_qubit_hamiltonians(p)?.spec, plus.clone(), plus, pauli_z())
            }
            SystemConfig::Rydberg(p) => {
                let (gg, t) = (rydberg_gg(), rydberg_t());
                let obs: CMatrix = outer(t.amplitudes(), t.amplitudes()) - outer(gg.amplitudes(), gg.amplitudes());
                (rydberg_hamiltonian(p, NoiseProcess::None)?, gg, t, obs)
            }
        };
        let noise = match self.noise {
            NoiseConfig::Model => base.noise().clone(),
            NoiseConfig::None => NoiseProcess::None,
            NoiseConfig::Gaussian { mu, sigma, reference, resample_dt } => {
                NoiseProcess::GaussianStochastic { mu, sigma, reference, resample_dt }
            }
            NoiseConfig::Pulse { center, width, amplitude } => NoiseProcess::GaussianPulse { center, width, amplitude },
        };
        let spec = base.with_noise(noise)?;
        let family = self.measurement.family()?;
        if family.dim() != spec.dim() {
            return Err(Error::DimensionMismatch { left: spec.dim(), right: family.dim() });
        }
        Ok(Model { spec, psi0, target, observable, family })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    const DRIVEN: &str = r#"
        [system]
        kind = "driven_qubit"
        omega0 = 1.0
        beta0 = "omega0"
        d_eps = "0.1*omega0"
        d_beta = 0.05

        [measurement]
        kind = "qubit"
        p0 = 0.35

        [schedule]
        tau = "2*pi/sqrt(omega0^2 + beta0^2)/50"
        K = 500
    "#;

    #[test]
    fn expressions_and_defaults() {
        let s = RawConfig::parse("t", DRIVEN).unwrap().resolve().unwrap();
        let SystemConfig::DrivenQubit(p) = s.system else { panic!() };
        assert_eq!(p.beta0, 1.0);
        assert!((p.d_eps - 0.1).abs() < 1e-15);
        let tau = 2.0 * PI / 2f64.sqrt() / 50.0;
        assert!((s.schedule.tau - tau).abs() < 1e-15);
        assert!((s.schedule.step_dt - tau / 50.0).abs() < 1e-18);
        assert_eq!(s.schedule.cycles, 500);
        assert!(s.schedule.feedback && s.schedule.measurement);
        assert_eq!(s.noise, NoiseConfig::Model);
        assert_eq!(s.runs, 1);
    }

    #[test]
    fn fractions_are_real_division() {
        let text = DRIVEN.replace("p0 = 0.35", "p0 = \"1/4\"");
        let s = RawConfig::parse("t", &text).unwrap().resolve().unwrap();
        assert_eq!(s.measurement, MeasurementConfig::Qubit { p0: 0.25 });
    }

    #[test]
    fn overrides_take_literals_and_expressions() {
        let mut raw = RawConfig::parse("t", DRIVEN).unwrap();
        raw.set("system.d_beta=0.2*omega0").unwrap();
        raw.set("schedule.feedback=false").unwrap();
        raw.set("schedule.K=3").unwrap();
        let s = raw.resolve().unwrap();
        let SystemConfig::DrivenQubit(p) = s.system else { panic!() };
        assert!((p.d_beta - 0.2).abs() < 1e-15);
        assert!(!s.schedule.feedback);
        assert_eq!(s.schedule.cycles, 3);
    }

    #[test]
    fn bad_input_is_a_config_error() {
        let mut raw = RawConfig::parse("t", DRIVEN).unwrap();
        raw.set("system.colour=1").unwrap();
        assert!(matches!(raw.resolve(), Err(Error::Config(_))));
        assert!(matches!(RawConfig::parse("t", "[bogus]\nx=1"), Err(Error::Config(_))));
        let mut raw = RawConfig::parse("t", DRIVEN).unwrap();
        raw.set("system.d_eps=unknown_symbol*2").unwrap();
        assert!(matches!(raw.resolve(), Err(Error::Config(_))));
        let mut raw = RawConfig::parse("t", DRIVEN).unwrap();
        raw.set("schedule.K=0").unwrap();
        assert!(matches!(raw.resolve(), Err(Error::Config(_))));
        assert!(RawConfig::parse("t", DRIVEN).unwrap().set("nonsense").is_err());
    }

    #[test]
    fn sweep_ranges_and_lists() {
        let text = format!(
            "{DRIVEN}\n[sweep]\n\"system.d_eps\" = {{ start = 0, stop = \"0.1*omega0\", count = 3 }}\n\"measurement.p0\" = [0.1, \"1/4\"]\n"
        );
        let raw = RawConfig::parse("t", &text).unwrap();
        let axes = raw.sweep_axes().unwrap();
        assert_eq!(axes[0].path, "measurement.p0");
        assert_eq!(axes[0].values, vec![0.1, 0.25]);
        assert_eq!(axes[1].label(), "d_eps");
        assert_eq!(axes[1].values, vec![0.0, 0.05, 0.1]);
        let mut raw = raw;
        raw.set_sweep("").unwrap();
        assert!(raw.sweep_axes().unwrap().is_empty());
    }

    #[test]
    fn blocks_family_sums_to_one() {
        let m = MeasurementConfig::Blocks { p: 1.0 / 18.0, p9: 1.0 / 9.0 };
        let f = m.family().unwrap();
        assert_eq!(f.outcomes(), 9);
        assert!(f.completeness_residual() < 1e-15);
    }
}
