use std::path::{Path, PathBuf};

use emitter_core::dynamics::{
    propagate, propagate_ode, propagate_piecewise, uniform_grid, OutputGrid, Trajectory,
};
use emitter_core::farfield::{angular_map, time_integrated_map, waveform, Helicity};
use emitter_core::hamiltonian::{assemble, excited_modes, AssemblyOptions, EffectiveHamiltonian};
use emitter_core::model::{timed_dicke_state, AmplitudeState, AtomArray};
use emitter_core::oracles::{noninteracting_diagonal_term, noninteracting_intensity, two_atom_rates};
use emitter_core::shaping::{
    design_envelope, validate, AdiabaticModel, AdiabaticReference, CumulativeCurve, DesignOptions,
    TargetWaveform,
};
use emitter_core::drive::{Envelope, LaserDrive};
use emitter_core::model::{Sublevel, Vec3, K0};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::{PropagatorChoice, RunConfig, Shape, TargetSpec};
use crate::error::CliError;
use crate::io::{self, Provenance};

/// One configured run writing into `out`.
pub struct Run<'a> {
    pub cfg: &'a RunConfig,
    pub prov: &'a Provenance,
    pub out: PathBuf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Simulate,
    Angular,
    Modes,
    Shape,
    Validate,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Angular => "angular",
            Command::Modes => "modes",
            Command::Shape => "shape",
            Command::Validate => "validate",
        }
    }
}

/// Runs `cmd`, once per sweep spacing if a sweep is configured. Returns the
/// summary record.
pub fn execute(cmd: Command, cfg: &RunConfig, prov: &Provenance, out: &Path) -> Result<Value, CliError> {
    std::fs::create_dir_all(out)?;
    let mut summary = match &cfg.sweep {
        Some(sweep) if matches!(cmd, Command::Simulate | Command::Angular | Command::Modes) => {
            let runs: Vec<(f64, Result<Value, CliError>)> = sweep
                .spacings
                .par_iter()
                .map(|&d| {
                    let sub = cfg.with_spacing(d);
                    let dir = out.join(format!("d_{d:.3}"));
                    let res = std::fs::create_dir_all(&dir)
                        .map_err(CliError::from)
                        .and_then(|_| run_one(cmd, &Run { cfg: &sub, prov, out: dir }));
                    (d, res)
                })
                .collect();
            let mut list = Vec::new();
            for (d, res) in runs {
                let mut v = res?;
                v["d"] = json!(d);
                v["directory"] = json!(format!("d_{d:.3}"));
                list.push(v);
            }
            json!({ "runs": list })
        }
        _ => run_one(cmd, &Run { cfg, prov, out: out.to_path_buf() })?,
    };
    summary["command"] = json!(cmd.name());
    summary["version"] = json!(io::VERSION);
    summary["config_digest"] = json!(prov.digest);
    Ok(summary)
}

fn run_one(cmd: Command, run: &Run) -> Result<Value, CliError> {
    match cmd {
        Command::Simulate => simulate(run),
        Command::Angular => angular(run),
        Command::Modes => modes(run),
        Command::Shape => shape(run),
        Command::Validate => validate_run(run),
    }
}

struct Setup {
    array: AtomArray,
    drive: LaserDrive,
    h: EffectiveHamiltonian,
    psi0: AmplitudeState,
}

fn setup(cfg: &RunConfig) -> Result<Setup, CliError> {
    let array = cfg.array()?;
    let drive = cfg.laser()?;
    let h = assemble(&array, &drive, &AssemblyOptions::with_sublevels(cfg.sublevels()?))?;
    let psi0 = timed_dicke_state(&array, &cfg.k_gf())?;
    Ok(Setup { array, drive, h, psi0 })
}

fn trajectory(cfg: &RunConfig, s: &Setup) -> Result<Trajectory, CliError> {
    let times = uniform_grid(0.0, cfg.time.t_end, cfg.time.samples);
    let env = &s.drive.envelope;
    Ok(match cfg.time.propagator {
        PropagatorChoice::Auto => propagate(&s.h, env, &s.psi0, &times, &cfg.ode())?,
        PropagatorChoice::Eigen => {
            if env.constant_pieces(0.0, cfg.time.t_end).is_none() {
                return Err(CliError::Config(
                    "time.propagator = \"eigen\" needs a constant or square envelope".into(),
                ));
            }
            propagate_piecewise(&s.h, env, &s.psi0, &times)?
        }
        PropagatorChoice::Ode => {
            propagate_ode(&s.h, env, &s.psi0, cfg.time.t_end, &cfg.ode(), &OutputGrid::Times(times))?
        }
    })
}

fn vec_json(v: &Vec3) -> Value {
    json!([v.x, v.y, v.z])
}

fn simulate(run: &Run) -> Result<Value, CliError> {
    let s = setup(run.cfg)?;
    let traj = trajectory(run.cfg, &s)?;
    let wf = waveform(&traj, &s.array, &run.cfg.grid()?)?;
    io::write_trajectory(&run.out.join("trajectory.csv"), run.prov, &traj)?;
    io::write_waveform(&run.out.join("waveform.csv"), run.prov, &wf)?;
    let peak = wf.flux_total.iter().copied().fold(0.0, f64::max);
    Ok(json!({
        "n_atoms": s.array.len(),
        "k_em": vec_json(&run.cfg.k_em()),
        "n_final": wf.total_photons(),
        "n_stateside_final": wf.n_stateside.last().copied().unwrap_or(0.0),
        "peak_flux": peak,
        "ode_steps": traj.stats().accepted,
    }))
}

fn angular(run: &Run) -> Result<Value, CliError> {
    let s = setup(run.cfg)?;
    let traj = trajectory(run.cfg, &s)?;
    let grid = run.cfg.grid()?;
    let map = match run.cfg.angular.u {
        Some(u) => angular_map(&traj, &s.array, u, &grid)?,
        None => time_integrated_map(&traj, &s.array, &grid)?,
    };
    io::write_angular_map(&run.out.join("angular_map.csv"), run.prov, &map)?;
    let (theta, phi) = grid.angles(map.peak_index());
    let forward = |r: &Vec3| r.z > 0.0;
    let backward = |r: &Vec3| r.z < 0.0;
    let flux = |pred: &dyn Fn(&Vec3) -> bool| -> f64 {
        Helicity::BOTH.iter().map(|&h| map.flux_where(h, pred)).sum()
    };
    Ok(json!({
        "n_atoms": s.array.len(),
        "k_em": vec_json(&run.cfg.k_em()),
        "retarded_time": map.retarded_time(),
        "peak_theta": theta,
        "peak_phi": phi,
        "max_plus": map.max(Helicity::Plus),
        "max_minus": map.max(Helicity::Minus),
        "flux_forward": flux(&forward),
        "flux_backward": flux(&backward),
    }))
}

fn modes(run: &Run) -> Result<Value, CliError> {
    let s = setup(run.cfg)?;
    let spec = excited_modes(&s.h)?;
    io::write_spectrum(&run.out.join("spectrum.csv"), run.prov, &spec)?;
    let rates = spec.rates();
    Ok(json!({
        "n_atoms": s.array.len(),
        "modes": spec.len(),
        "max_rate": spec.max_rate(),
        "min_rate": rates.iter().copied().fold(f64::INFINITY, f64::min),
        "subradiant_modes": spec.subradiant().iter().filter(|&&b| b).count(),
        "condition_estimate": spec.condition_estimate,
    }))
}

fn shape_section(cfg: &RunConfig) -> Result<&Shape, CliError> {
    cfg.shape.as_ref().ok_or_else(|| CliError::Config("this command needs a [shape] section".into()))
}

fn raw_target(spec: &TargetSpec) -> Result<TargetWaveform, CliError> {
    Ok(match spec {
        TargetSpec::Gaussian { center, half_width, t_end, samples } => {
            TargetWaveform::gaussian(uniform_grid(0.0, *t_end, *samples), *center, *half_width, 1.0)?
        }
        TargetSpec::DoubleGaussian { centers, half_width, t_end, samples } => {
            TargetWaveform::double_gaussian(uniform_grid(0.0, *t_end, *samples), *centers, *half_width, 1.0)?
        }
        TargetSpec::File { path } => io::read_target(path)?,
    })
}

/// Constant-drive photon curve n⁰ of the adiabatic model.
fn reference_curve(shape: &Shape, s: &Setup) -> Result<CumulativeCurve, CliError> {
    let model = AdiabaticModel::new(&s.array, &s.drive)?;
    let reference = AdiabaticReference::new(&model, &s.psi0.a, shape.reference_t_end)?;
    let n = (shape.reference_t_end / shape.reference_step).ceil() as usize + 1;
    Ok(reference.curve(&uniform_grid(0.0, shape.reference_t_end, n))?)
}

fn shape(run: &Run) -> Result<Value, CliError> {
    let shape = shape_section(run.cfg)?;
    let s = setup(run.cfg)?;
    let curve = reference_curve(shape, &s)?;
    let target = raw_target(&shape.target)?;
    let designed = design_envelope(&curve, &target, &DesignOptions { photon_fraction: Some(shape.photon_fraction) })?;
    io::write_envelope(&run.out.join("envelope.csv"), run.prov, &designed.envelope)?;
    io::write_target(&run.out.join("target.csv"), run.prov, &designed.target)?;
    let drive = LaserDrive { envelope: Envelope::Sampled(designed.envelope.clone()), ..s.drive.clone() };
    let opts = AssemblyOptions::with_sublevels(run.cfg.sublevels()?);
    let report = validate(&s.array, &drive, &opts, &s.psi0, &designed.target, &run.cfg.grid()?, &run.cfg.ode())?;
    io::write_waveform(&run.out.join("waveform.csv"), run.prov, &report.waveform)?;
    Ok(json!({
        "n_atoms": s.array.len(),
        "reference_photons": curve.final_value(),
        "target_photons": designed.target.total_photons(),
        "photons_emitted": report.photons_emitted,
        "l2_mismatch": report.l2_mismatch,
        "peak_time_error": report.peak_time_error,
    }))
}

fn validate_run(run: &Run) -> Result<Value, CliError> {
    let shape = shape_section(run.cfg)?;
    let s = setup(run.cfg)?;
    if !matches!(s.drive.envelope, Envelope::Sampled(_)) {
        return Err(CliError::Config("validate needs drive.envelope of type \"file\"".into()));
    }
    let curve = reference_curve(shape, &s)?;
    let target = raw_target(&shape.target)?.normalized(shape.photon_fraction * curve.final_value())?;
    let opts = AssemblyOptions::with_sublevels(run.cfg.sublevels()?);
    let report = validate(&s.array, &s.drive, &opts, &s.psi0, &target, &run.cfg.grid()?, &run.cfg.ode())?;
    io::write_waveform(&run.out.join("waveform.csv"), run.prov, &report.waveform)?;
    Ok(json!({
        "n_atoms": s.array.len(),
        "target_photons": target.total_photons(),
        "photons_emitted": report.photons_emitted,
        "l2_mismatch": report.l2_mismatch,
        "peak_time_error": report.peak_time_error,
    }))
}

/// Two-atom symmetric and antisymmetric decay rates.
pub fn oracle_two_atom(separation: f64, orientation: [f64; 3], sublevel: i32) -> Result<Value, CliError> {
    let level = Sublevel::from_m(sublevel).map_err(|e| CliError::Config(e.to_string()))?;
    let (sym, anti) = two_atom_rates(separation, &Vec3::from(orientation), level)
        .map_err(|e| CliError::Config(e.to_string()))?;
    Ok(json!({
        "oracle": "two-atom",
        "separation": separation,
        "orientation": orientation,
        "sublevel": sublevel,
        "gamma_sym": sym,
        "gamma_anti": anti,
    }))
}

/// Forward enhancement of a noninteracting lattice emitting along k₀·`direction`.
pub fn oracle_directed(dims: [usize; 3], d: f64, direction: [f64; 3]) -> Result<Value, CliError> {
    let array = AtomArray::lattice(dims[0], dims[1], dims[2], d).map_err(|e| CliError::Config(e.to_string()))?;
    let dir = Vec3::from(direction);
    if !(dir.norm() > 0.0 && dir.iter().all(|x| x.is_finite())) {
        return Err(CliError::Config("direction must be a nonzero finite vector".into()));
    }
    let k_em = dir.normalize() * K0;
    let r = dir.normalize();
    let mut peak = 0.0;
    let mut single = 0.0;
    for h in Helicity::BOTH {
        peak += noninteracting_intensity(&array, &k_em, &r, 0.0, h)?;
        single += noninteracting_diagonal_term(array.len(), &r, 0.0, h)?;
    }
    Ok(json!({
        "oracle": "directed",
        "n_atoms": array.len(),
        "peak_intensity": peak,
        "diagonal_term": single,
        "enhancement": peak / single,
        "n_squared": (array.len() * array.len()) as f64,
    }))
}
