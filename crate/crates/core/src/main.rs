use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use qtrack::harness::config::RawConfig;
use qtrack::harness::engine::{feedback_fields, run_reference, run_trajectory};
use qtrack::harness::ensemble::{run_sweep, RunOptions};
use qtrack::harness::{output, presets, validate};
use qtrack::streams::TrajectorySeed;
use qtrack::Error;

#[derive(Parser)]
#[command(name = "qtrack", version, about = "Measurement-feedback control of noisy quantum trajectories")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one trajectory and write its metrics.
    Run {
        #[command(flatten)]
        common: Common,
        /// Trajectory index within the seed's ensemble.
        #[arg(long, default_value_t = 0)]
        trajectory: u64,
    },
    /// Simulate R trajectories per sweep point and write mean/std of F_EM.
    Ensemble {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        runs: Option<usize>,
        /// Replace the scenario's sweep with `section.key=v1,v2,...` (empty to disable).
        #[arg(long)]
        sweep: Option<String>,
    },
    /// Noiseless reference trajectory only.
    Reference {
        #[command(flatten)]
        common: Common,
    },
    /// Feedback fields B·t_F for every cycle and outcome (qubit scenarios).
    Fields {
        #[command(flatten)]
        common: Common,
    },
    /// Run the self-check suites.
    Validate {
        /// Suites to run (povm, feedback, dilation, effective); all by default.
        suites: Vec<String>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Shipped scenarios.
    Scenario {
        #[command(subcommand)]
        action: ScenarioAction,
    },
}

#[derive(Subcommand)]
enum ScenarioAction {
    List,
    /// Print a preset's configuration.
    Show { name: String },
}

#[derive(Args)]
struct Common {
    /// Preset name or path to a TOML scenario.
    #[arg(long)]
    scenario: String,
    #[arg(long)]
    seed: Option<u64>,
    /// Output CSV path; defaults to the scenario's output.path, then stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    no_feedback: bool,
    #[arg(long)]
    no_measurement: bool,
    /// Override a scalar, e.g. `--set measurement.p0=0.1`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

impl Common {
    fn config(&self) -> qtrack::Result<RawConfig> {
        let mut raw = RawConfig::load(&self.scenario)?;
        for o in &self.overrides {
            raw.set(o)?;
        }
        Ok(raw)
    }

    fn options(&self, runs: Option<usize>) -> RunOptions {
        RunOptions { runs, seed: self.seed, no_feedback: self.no_feedback, no_measurement: self.no_measurement }
    }
}

fn emit<F>(out: Option<PathBuf>, write: F) -> qtrack::Result<()>
where
    F: FnOnce(&mut dyn Write) -> qtrack::Result<()>,
{
    match out {
        Some(path) => output::to_path(&path, |w| write(w)),
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            write(&mut lock)
        }
    }
}

fn run(cli: Cli) -> qtrack::Result<bool> {
    match cli.command {
        Command::Run { common, trajectory } => {
            let scenario = common.config()?.resolve()?;
            let model = scenario.model()?;
            let schedule = common.options(None).schedule(&scenario.schedule);
            let reference = run_reference(&model.spec, &model.psi0, &schedule)?;
            let seed = TrajectorySeed::new(common.seed.unwrap_or(scenario.seed), trajectory);
            let record = run_trajectory(&model, &reference, &schedule, seed)?;
            emit(common.out.or(scenario.output), |w| output::write_trajectory(&record, w))?;
        }
        Command::Ensemble { common, runs, sweep } => {
            let mut raw = common.config()?;
            if let Some(s) = &sweep {
                raw.set_sweep(s)?;
            }
            let labels: Vec<String> = raw.sweep_axes()?.iter().map(|a| a.label().to_string()).collect();
            let out = common.out.clone().or(raw.resolve()?.output);
            let summaries = run_sweep(&raw, &common.options(runs))?;
            emit(out, |w| output::write_summaries(&labels, &summaries, w))?;
        }
        Command::Reference { common } => {
            let scenario = common.config()?.resolve()?;
            let model = scenario.model()?;
            let reference = run_reference(&model.spec, &model.psi0, &scenario.schedule)?;
            emit(common.out.or(scenario.output), |w| output::write_reference(&model, &reference, w))?;
        }
        Command::Fields { common } => {
            let scenario = common.config()?.resolve()?;
            let model = scenario.model()?;
            let reference = run_reference(&model.spec, &model.psi0, &scenario.schedule)?;
            let samples = feedback_fields(&model, &reference, scenario.feedback_time)?;
            emit(common.out.or(scenario.output), |w| output::write_fields(&samples, w))?;
        }
        Command::Validate { suites, seed } => {
            let names: Vec<String> =
                if suites.is_empty() { validate::SUITES.iter().map(|s| s.to_string()).collect() } else { suites };
            let mut all = true;
            for name in &names {
                let report = validate::run_suite(name, seed)
                    .ok_or_else(|| Error::Config(format!("unknown suite '{name}' ({})", validate::SUITES.join(", "))))??;
                print!("{report}");
                all &= report.passed();
            }
            return Ok(all);
        }
        Command::Scenario { action } => match action {
            ScenarioAction::List => {
                for name in presets::NAMES {
                    println!("{name:6} {}", presets::summary(name).unwrap_or(""));
                }
            }
            ScenarioAction::Show { name } => {
                let text = presets::get(&name).ok_or_else(|| Error::Config(format!("no preset named '{name}'")))?;
                print!("{text}");
            }
        },
    }
    Ok(true)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(3),
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Config(_)
                | Error::InvalidStrength(_)
                | Error::InvalidParameter(_)
                | Error::UnderResolvedNoise { .. } => ExitCode::from(2),
                _ => ExitCode::FAILURE,
            }
        }
    }
}
