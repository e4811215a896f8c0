use qtrack::harness::config::RawConfig;
use qtrack::harness::engine::{run_reference, run_trajectory, ControlSchedule, Model};
use qtrack::harness::ensemble::{run_ensemble, run_records, EnsembleSummary};
use qtrack::harness::output::{write_summaries, write_trajectory, TRAJECTORY_COLUMNS};
use qtrack::measurement::kraus_qubit;
use qtrack::qmath::{fidelity, StateVector};
use qtrack::streams::TrajectorySeed;

fn preset(name: &str, overrides: &[&str]) -> (Model, ControlSchedule) {
    let mut raw = RawConfig::load(name).unwrap();
    for o in overrides {
        raw.set(o).unwrap();
    }
    let s = raw.resolve().unwrap();
    (s.model().unwrap(), s.schedule)
}

#[test]
fn spin_along_x_matches_closed_form() {
    let (model, schedule) = preset("fig1", &["system.theta=0", "system.phi=0", "system.omega_L=1.3"]);
    let reference = run_reference(&model.spec, &model.psi0, &schedule).unwrap();
    for (t, psi) in reference.times.iter().zip(&reference.states) {
        assert!((psi.expectation(&model.observable) - (1.3 * t).cos()).abs() < 1e-8);
    }
}

#[test]
fn reference_is_deterministic_and_trivial_at_zero_cycles() {
    let (model, schedule) = preset("fig1", &[]);
    let a = run_reference(&model.spec, &model.psi0, &schedule).unwrap();
    let b = run_reference(&model.spec, &model.psi0, &schedule).unwrap();
    assert_eq!(a, b);
    let empty = ControlSchedule { cycles: 0, ..schedule };
    let r = run_reference(&model.spec, &model.psi0, &empty).unwrap();
    assert_eq!(r.states, vec![model.psi0.clone()]);
}

#[test]
fn recorded_infidelity_matches_final_row() {
    let (model, schedule) = preset("fig4", &["system.d_eps=0.07", "system.d_beta=0.02"]);
    let reference = run_reference(&model.spec, &model.psi0, &schedule).unwrap();
    let rec = run_trajectory(&model, &reference, &schedule, TrajectorySeed::new(9, 2)).unwrap();
    assert!((rec.infidelity - (1.0 - rec.rows.last().unwrap().f_em)).abs() <= 1e-12);
    assert_eq!(rec.rows.len(), schedule.cycles + 1);
    for r in &rec.rows {
        for f in [r.f_en, r.f_em, r.f_te, r.f_tn, r.f_tm] {
            assert!((0.0..=1.0).contains(&f));
        }
    }
    assert_eq!(rec.rows[0].outcome, None);
    assert!(rec.rows[1..].iter().all(|r| r.outcome.is_some()));
}

#[test]
fn dimension_mismatch_is_rejected() {
    let (mut model, schedule) = preset("fig1", &[]);
    let reference = run_reference(&model.spec, &model.psi0, &schedule).unwrap();
    model.family = qtrack::measurement::kraus_nlevel(&[0.2, 0.3, 0.5]).unwrap();
    assert!(run_trajectory(&model, &reference, &schedule, TrajectorySeed::new(0, 0)).is_err());
}

#[test]
fn without_measurement_controlled_equals_bare() {
    let (model, schedule) = preset("fig1", &[]);
    let bare = ControlSchedule { measurement: false, ..schedule };
    let reference = run_reference(&model.spec, &model.psi0, &schedule).unwrap();
    let rec = run_trajectory(&model, &reference, &bare, TrajectorySeed::new(0, 0)).unwrap();
    for r in &rec.rows {
        assert_eq!(r.f_en, r.f_em);
        assert_eq!(r.sz_n, r.sz_nm);
        assert_eq!(r.outcome, None);
    }
}

#[test]
fn feedback_beats_measurement_alone() {
    let (model, schedule) = preset("fig1", &[]);
    let reference = run_reference(&model.spec, &model.psi0, &schedule).unwrap();
    let final_median = |s: &ControlSchedule| {
        let mut v: Vec<f64> =
            run_records(&model, &reference, s, 101, 11).unwrap().iter().map(|r| r.rows.last().unwrap().f_em).collect();
        v.sort_by(f64::total_cmp);
        v[50]
    };
    let on = final_median(&schedule);
    let off = final_median(&ControlSchedule { feedback: false, ..schedule });
    assert!(on > off, "feedback on {on}, off {off}");
}

/// With no noise and feedback on, every trajectory stays on the reference,
/// so the outcome at cycle k has the known law P_n = ‖M_n ψ_E(t_k)‖².
#[test]
fn outcome_frequencies_follow_born_rule() {
    let (model, schedule) = preset("fig1", &["system.omega_eps=0", "system.theta_p=theta", "system.phi_p=phi"]);
    let reference = run_reference(&model.spec, &model.psi0, &schedule).unwrap();
    let runs = 400;
    let records = run_records(&model, &reference, &schedule, runs, 12).unwrap();
    let family = kraus_qubit(0.2).unwrap();
    let mut outside = 0;
    for k in 1..=schedule.cycles {
        let p1 = family.probabilities(&reference.states[k]).unwrap()[1];
        let count = records.iter().filter(|r| r.rows[k].outcome == Some(1)).count() as f64;
        let sigma = (runs as f64 * p1 * (1.0 - p1)).sqrt();
        if (count - runs as f64 * p1).abs() > 3.0 * sigma {
            outside += 1;
        }
    }
    // About 0.3% of cycles fall outside 3σ by chance.
    assert!(outside <= 3, "{outside} of {} cycles outside 3σ", schedule.cycles);
}

#[test]
fn single_run_summary_equals_record() {
    let (model, schedule) = preset("fig6", &["measurement.p0=0.2"]);
    let reference = run_reference(&model.spec, &model.psi0, &schedule).unwrap();
    let rec = run_trajectory(&model, &reference, &schedule, TrajectorySeed::new(5, 0)).unwrap();
    let summary = run_ensemble(&model, &schedule, 1, 5).unwrap();
    assert_eq!(summary.mean_f, rec.f_em().collect::<Vec<_>>());
    assert!(summary.std_f.iter().all(|&s| s == 0.0));
    assert_eq!(summary.infidelities, vec![rec.infidelity]);
}

#[test]
fn ensemble_independent_of_thread_count() {
    let (model, schedule) = preset("fig3", &["schedule.K=100"]);
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| run_ensemble(&model, &schedule, 12, 42).unwrap())
    };
    assert_eq!(run(1), run(4));
}

#[test]
fn ensemble_statistics_match_direct_computation() {
    let (model, schedule) = preset("fig4", &["system.d_eps=0.1", "system.d_beta=0.1"]);
    let reference = run_reference(&model.spec, &model.psi0, &schedule).unwrap();
    let recs = run_records(&model, &reference, &schedule, 7, 3).unwrap();
    let s = EnsembleSummary::from_records(&recs).unwrap();
    let k = 60;
    let xs: Vec<f64> = recs.iter().map(|r| r.rows[k].f_em).collect();
    let mean = xs.iter().sum::<f64>() / 7.0;
    let std = (xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / 7.0).sqrt();
    assert!((s.mean_f[k] - mean).abs() < 1e-15);
    assert!((s.std_f[k] - std).abs() < 1e-15);
}

#[test]
fn trajectory_csv_round_trips() {
    let (model, schedule) = preset("fig1", &["schedule.K=40"]);
    let reference = run_reference(&model.spec, &model.psi0, &schedule).unwrap();
    let rec = run_trajectory(&model, &reference, &schedule, TrajectorySeed::new(1, 1)).unwrap();
    let mut buf = Vec::new();
    write_trajectory(&rec, &mut buf).unwrap();
    let mut reader = csv::Reader::from_reader(buf.as_slice());
    assert_eq!(reader.headers().unwrap().iter().collect::<Vec<_>>(), TRAJECTORY_COLUMNS.to_vec());
    let parsed: Vec<csv::StringRecord> = reader.records().map(Result::unwrap).collect();
    assert_eq!(parsed.len(), rec.rows.len());
    for (row, r) in parsed.iter().zip(&rec.rows) {
        let num = |i: usize| row[i].parse::<f64>().unwrap();
        assert_eq!(num(0), r.t);
        assert_eq!(row[1].parse::<usize>().ok(), r.outcome);
        assert_eq!([num(2), num(3), num(4)], [r.sz_e, r.sz_n, r.sz_nm]);
        assert_eq!([num(5), num(6), num(7), num(8), num(9)], [r.f_en, r.f_em, r.f_te, r.f_tn, r.f_tm]);
    }
}

#[test]
fn summary_csv_layout() {
    let (model, schedule) = preset("fig6", &["schedule.K=3"]);
    let mut s = run_ensemble(&model, &schedule, 4, 0).unwrap();
    s.axes = vec![("p0".into(), 0.2)];
    let mut buf = Vec::new();
    write_summaries(&["p0".to_string()], &[s.clone()], &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "p0,t,mean_F,std_F");
    assert_eq!(lines.len(), 5);
    let last: Vec<f64> = lines[4].split(',').map(|x| x.parse().unwrap()).collect();
    assert_eq!(last, vec![0.2, s.times[3], s.mean_f[3], s.std_f[3]]);
}

#[test]
fn rydberg_noiseless_control_is_exact() {
    let (model, schedule) = preset("fig3", &["noise.mu=0", "noise.sigma=0", "schedule.K=300"]);
    assert_eq!(fidelity(&StateVector::basis(9, 0), &model.psi0).unwrap(), 1.0);
    let reference = run_reference(&model.spec, &model.psi0, &schedule).unwrap();
    assert!((reference.times.last().unwrap() - 0.3).abs() < 1e-12);
    let rec = run_trajectory(&model, &reference, &schedule, TrajectorySeed::new(2, 0)).unwrap();
    assert!(rec.f_em().all(|f| (f - 1.0).abs() <= 1e-10));
    assert!(rec.rows.iter().all(|r| r.f_en == r.f_em || (r.f_en - 1.0).abs() <= 1e-10));
}
