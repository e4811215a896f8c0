//! CSV output. Floats are written in the shortest form that parses back to
//! the same value.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use super::engine::{ReferenceTrajectory, TrajectoryRecord, Model};
use super::ensemble::EnsembleSummary;
use crate::error::{Error, Result};
use crate::feedback::FieldSample;

pub const TRAJECTORY_COLUMNS: [&str; 10] = ["t", "outcome", "sz_E", "sz_N", "sz_NM", "F_EN", "F_EM", "F_TE", "F_TN", "F_TM"];
pub const SUMMARY_COLUMNS: [&str; 3] = ["t", "mean_F", "std_F"];
pub const REFERENCE_COLUMNS: [&str; 3] = ["t", "sz_E", "F_TE"];
pub const FIELD_COLUMNS: [&str; 5] = ["t", "outcome", "bx_tF", "by_tF", "bz_tF"];

fn float(x: f64) -> String {
    let mut buf = ryu::Buffer::new();
    buf.format(x).to_string()
}

fn io_err(path: &str, e: impl std::fmt::Display) -> Error {
    Error::Io { path: path.to_string(), message: e.to_string() }
}

fn writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w)
}

fn finish<W: Write>(mut w: csv::Writer<W>) -> Result<()> {
    w.flush().map_err(|e| io_err("<csv>", e))
}

fn row<W: Write, I, S>(w: &mut csv::Writer<W>, fields: I) -> Result<()>
where
    I: IntoIterator<Item = S>,
    S: AsRef<[u8]>,
{
    w.write_record(fields).map_err(|e| io_err("<csv>", e))
}

pub fn write_trajectory<W: Write>(record: &TrajectoryRecord, out: W) -> Result<()> {
    let mut w = writer(out);
    row(&mut w, TRAJECTORY_COLUMNS)?;
    for r in &record.rows {
        let outcome = r.outcome.map(|n| n.to_string()).unwrap_or_default();
        let mut fields = vec![float(r.t), outcome];
        fields.extend([r.sz_e, r.sz_n, r.sz_nm, r.f_en, r.f_em, r.f_te, r.f_tn, r.f_tm].map(float));
        row(&mut w, fields)?;
    }
    finish(w)
}

/// Sweep-axis columns, then t, mean_F, std_F; one row per point and time.
pub fn write_summaries<W: Write>(axis_labels: &[String], summaries: &[EnsembleSummary], out: W) -> Result<()> {
    let mut w = writer(out);
    row(&mut w, axis_labels.iter().map(String::as_str).chain(SUMMARY_COLUMNS))?;
    for s in summaries {
        for i in 0..s.times.len() {
            let mut fields: Vec<String> = s.axes.iter().map(|(_, v)| float(*v)).collect();
            fields.extend([s.times[i], s.mean_f[i], s.std_f[i]].map(float));
            row(&mut w, fields)?;
        }
    }
    finish(w)
}

pub fn write_reference<W: Write>(model: &Model, reference: &ReferenceTrajectory, out: W) -> Result<()> {
    let mut w = writer(out);
    row(&mut w, REFERENCE_COLUMNS)?;
    for (t, psi) in reference.times.iter().zip(&reference.states) {
        let f_te = crate::qmath::fidelity(&model.target, psi)?;
        row(&mut w, [*t, psi.expectation(&model.observable), f_te].map(float))?;
    }
    finish(w)
}

pub fn write_fields<W: Write>(samples: &[FieldSample], out: W) -> Result<()> {
    let mut w = writer(out);
    row(&mut w, FIELD_COLUMNS)?;
    for s in samples {
        row(&mut w, [float(s.time), s.outcome.to_string(), float(s.bx_tf), float(s.by_tf), float(s.bz_tf)])?;
    }
    finish(w)
}

/// Runs `write` against a buffered file at `path`.
pub fn to_path<F>(path: &Path, write: F) -> Result<()>
where
    F: FnOnce(&mut BufWriter<File>) -> Result<()>,
{
    let shown = path.display().to_string();
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| io_err(&shown, e))?;
    }
    let file = File::create(path).map_err(|e| io_err(&shown, e))?;
    let mut buf = BufWriter::new(file);
    write(&mut buf)?;
    buf.flush().map_err(|e| io_err(&shown, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shortest_round_trip_floats() {
        for x in [0.1, 1.0 / 3.0, 1e-300, -2.5e17, 0.0] {
            assert_eq!(float(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(float(0.25), "0.25");
    }

    #[test]
    fn empty_sweep_is_header_only() {
        let mut buf = Vec::new();
        write_summaries(&["p0".to_string()], &[], &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "p0,t,mean_F,std_F\n");
    }

    #[test]
    fn unwritable_path_is_reported() {
        let r = to_path(Path::new("/proc/definitely/not/here.csv"), |_| Ok(()));
        assert!(matches!(r, Err(Error::Io { .. })));
    }
}
