//! CSV output and input. Every file starts with one comment line naming the
//! program version and the digest of the configuration that produced it.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use emitter_core::drive::PulseEnvelope;
use emitter_core::dynamics::Trajectory;
use emitter_core::farfield::{AngularMap, Helicity, Waveform};
use emitter_core::hamiltonian::ModeSpectrum;
use emitter_core::shaping::TargetWaveform;

use crate::error::CliError;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Provenance {
    pub digest: String,
}

impl Provenance {
    pub fn header(&self) -> String {
        format!("# emitter {VERSION} config-digest={}", self.digest)
    }
}

fn writer(path: &Path, prov: &Provenance, columns: &[&str]) -> Result<csv::Writer<BufWriter<File>>, CliError> {
    let mut file = BufWriter::new(File::create(path)?);
    writeln!(file, "{}", prov.header())?;
    let mut w = csv::Writer::from_writer(file);
    w.write_record(columns)?;
    Ok(w)
}

fn row(w: &mut csv::Writer<BufWriter<File>>, values: &[f64]) -> Result<(), CliError> {
    w.write_record(values.iter().map(|v| v.to_string()))?;
    Ok(())
}

pub fn write_waveform(path: &Path, prov: &Provenance, wf: &Waveform) -> Result<(), CliError> {
    let mut w = writer(path, prov, &["u", "flux_plus", "flux_minus", "flux_total", "n_cumulative", "n_stateside"])?;
    for i in 0..wf.len() {
        row(
            &mut w,
            &[wf.u[i], wf.flux[0][i], wf.flux[1][i], wf.flux_total[i], wf.cumulative[i], wf.n_stateside[i]],
        )?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_angular_map(path: &Path, prov: &Provenance, map: &AngularMap) -> Result<(), CliError> {
    let mut w = writer(path, prov, &["theta", "phi", "I_plus", "I_minus", "weight"])?;
    let g = map.grid();
    let (p, m) = (map.values(Helicity::Plus), map.values(Helicity::Minus));
    for d in 0..g.len() {
        let (theta, phi) = g.angles(d);
        row(&mut w, &[theta, phi, p[d], m[d], g.weight(d)])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_spectrum(path: &Path, prov: &Provenance, spec: &ModeSpectrum) -> Result<(), CliError> {
    let mut w = writer(path, prov, &["mode_index", "shift_Delta_m", "rate_Gamma_m", "subradiant_flag"])?;
    let (shifts, rates, sub) = (spec.shifts(), spec.rates(), spec.subradiant());
    for k in 0..spec.len() {
        w.write_record([k.to_string(), shifts[k].to_string(), rates[k].to_string(), u8::from(sub[k]).to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_trajectory(path: &Path, prov: &Provenance, traj: &Trajectory) -> Result<(), CliError> {
    let mut w = writer(
        path,
        prov,
        &["t", "metastable", "excited_minus", "excited_zero", "excited_plus", "norm"],
    )?;
    for p in traj.populations() {
        row(&mut w, &[p.t, p.metastable, p.excited[0], p.excited[1], p.excited[2], p.total()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_envelope(path: &Path, prov: &Provenance, env: &PulseEnvelope) -> Result<(), CliError> {
    let mut w = writer(path, prov, &["t", "f"])?;
    for (t, f) in env.times().iter().zip(env.values()) {
        row(&mut w, &[*t, *f])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_target(path: &Path, prov: &Provenance, target: &TargetWaveform) -> Result<(), CliError> {
    let mut w = writer(path, prov, &["u", "intensity"])?;
    for (u, f) in target.times().iter().zip(target.flux()) {
        row(&mut w, &[*u, *f])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a two-column numeric CSV, skipping `#` comment lines and the
/// column-name row.
pub fn read_two_columns(path: &Path) -> Result<(Vec<f64>, Vec<f64>), CliError> {
    let bad = |msg: String| CliError::Config(format!("{}: {msg}", path.display()));
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| bad(e.to_string()))?;
    let (mut a, mut b) = (Vec::new(), Vec::new());
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        if rec.len() != 2 {
            return Err(bad(format!("row {} has {} columns, expected 2", line + 1, rec.len())));
        }
        let parse = |s: &str| s.parse::<f64>().map_err(|e| bad(format!("row {}: {e}", line + 1)));
        a.push(parse(&rec[0])?);
        b.push(parse(&rec[1])?);
    }
    if a.is_empty() {
        return Err(bad("no data rows".into()));
    }
    Ok((a, b))
}

pub fn read_envelope(path: &Path) -> Result<PulseEnvelope, CliError> {
    let (t, f) = read_two_columns(path)?;
    PulseEnvelope::new(t, f).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

pub fn read_target(path: &Path) -> Result<TargetWaveform, CliError> {
    let (u, i) = read_two_columns(path)?;
    TargetWaveform::new(u, i).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}
