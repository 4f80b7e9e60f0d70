//! Run configuration: a TOML file with a fixed schema. Unknown keys are
//! rejected so that typos cannot silently fall back to defaults.

use std::path::{Path, PathBuf};

use emitter_core::drive::{Envelope, LaserDrive};
use emitter_core::integrator::OdeOptions;
use emitter_core::model::{AtomArray, Sublevel, SublevelSet, UnitSystem, Vec3, K0};
use emitter_core::quadrature::AngularGrid;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;
use crate::io;

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub lattice: Lattice,
    #[serde(default)]
    pub excitation: Excitation,
    pub drive: Drive,
    pub time: TimeWindow,
    #[serde(default)]
    pub angular: Angular,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub units: Units,
    #[serde(default)]
    pub shape: Option<Shape>,
    #[serde(default)]
    pub sweep: Option<Sweep>,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    /// Reserved; every run is deterministic.
    #[serde(default)]
    pub seed: u64,
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct Lattice {
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
    /// Spacing in units of λ₀.
    pub d: f64,
}

/// Wavevector k_gf of the timed Dicke state stored in the metastable level.
#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct Excitation {
    #[serde(default = "z_axis")]
    pub k_direction: [f64; 3],
    #[serde(default = "k0")]
    pub k_magnitude: f64,
}

fn z_axis() -> [f64; 3] {
    [0.0, 0.0, 1.0]
}

fn k0() -> f64 {
    K0
}

impl Default for Excitation {
    fn default() -> Self {
        Self { k_direction: z_axis(), k_magnitude: K0 }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct Drive {
    /// Peak Rabi frequency Ω_L0 in units of Γ.
    pub omega: f64,
    /// Detuning δ in units of Γ.
    pub delta: f64,
    #[serde(default = "default_envelope")]
    pub envelope: EnvelopeSpec,
    #[serde(default = "plus_one")]
    pub target_sublevel: i32,
    #[serde(default = "all_sublevels")]
    pub sublevels: Vec<i32>,
    #[serde(default)]
    pub k_laser: [f64; 3],
}

fn default_envelope() -> EnvelopeSpec {
    EnvelopeSpec::Constant { level: 1.0 }
}

fn plus_one() -> i32 {
    1
}

fn all_sublevels() -> Vec<i32> {
    vec![-1, 0, 1]
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum EnvelopeSpec {
    Constant {
        #[serde(default = "one")]
        level: f64,
    },
    Square {
        width: f64,
    },
    /// CSV with columns (t, f).
    File {
        path: PathBuf,
    },
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Copy, Debug, Default, Deserialize, Serialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum PropagatorChoice {
    #[default]
    Auto,
    Eigen,
    Ode,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct TimeWindow {
    pub t_end: f64,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default)]
    pub propagator: PropagatorChoice,
}

fn default_samples() -> usize {
    1001
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct Angular {
    #[serde(default = "default_theta")]
    pub n_theta: usize,
    #[serde(default = "default_phi")]
    pub n_phi: usize,
    /// Retarded time of the angular snapshot; omitted for the
    /// time-integrated distribution.
    #[serde(default)]
    pub u: Option<f64>,
}

fn default_theta() -> usize {
    64
}

fn default_phi() -> usize {
    128
}

impl Default for Angular {
    fn default() -> Self {
        Self { n_theta: default_theta(), n_phi: default_phi(), u: None }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    #[serde(default = "default_rtol")]
    pub rtol: f64,
    #[serde(default = "default_atol")]
    pub atol: f64,
}

fn default_rtol() -> f64 {
    1e-8
}

fn default_atol() -> f64 {
    1e-12
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { rtol: default_rtol(), atol: default_atol() }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct Units {
    #[serde(default = "default_c")]
    pub c_tilde: f64,
}

fn default_c() -> f64 {
    UnitSystem::DEFAULT_C_TILDE
}

impl Default for Units {
    fn default() -> Self {
        Self { c_tilde: default_c() }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct Shape {
    pub target: TargetSpec,
    /// Fraction of the constant-drive photon number n⁰(reference_t_end)
    /// carried by the target.
    #[serde(default = "default_fraction")]
    pub photon_fraction: f64,
    #[serde(default = "default_reference_end")]
    pub reference_t_end: f64,
    /// Sampling step of the constant-drive reference curve.
    #[serde(default = "default_reference_step")]
    pub reference_step: f64,
}

fn default_fraction() -> f64 {
    0.99
}

fn default_reference_end() -> f64 {
    400.0
}

fn default_reference_step() -> f64 {
    0.05
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum TargetSpec {
    Gaussian {
        center: f64,
        half_width: f64,
        t_end: f64,
        samples: usize,
    },
    DoubleGaussian {
        centers: [f64; 2],
        half_width: f64,
        t_end: f64,
        samples: usize,
    },
    /// CSV with columns (u, intensity).
    File {
        path: PathBuf,
    },
}

/// Independent runs over several lattice spacings, each in its own
/// subdirectory.
#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub spacings: Vec<f64>,
}

fn config_error(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), CliError> {
    if cond {
        Ok(())
    } else {
        Err(config_error(msg()))
    }
}

fn positive(name: &str, v: f64) -> Result<(), CliError> {
    check(v.is_finite() && v > 0.0, || format!("{name} must be positive and finite, got {v}"))
}

impl RunConfig {
    /// Parses and validates; relative file paths are resolved against
    /// `base_dir`.
    pub fn from_toml(text: &str, base_dir: &Path) -> Result<Self, CliError> {
        let mut cfg: RunConfig = toml::from_str(text).map_err(|e| config_error(e.to_string()))?;
        cfg.resolve_paths(base_dir);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<(Self, String), CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| config_error(format!("cannot read {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Ok((Self::from_toml(&text, base)?, text))
    }

    fn resolve_paths(&mut self, base: &Path) {
        if let EnvelopeSpec::File { path } = &mut self.drive.envelope {
            if path.is_relative() {
                *path = base.join(&*path);
            }
        }
        if let Some(Shape { target: TargetSpec::File { path }, .. }) = &mut self.shape {
            if path.is_relative() {
                *path = base.join(&*path);
            }
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let l = &self.lattice;
        check(l.nx > 0 && l.ny > 0 && l.nz > 0, || {
            format!("lattice.nx, ny, nz must be >= 1, got {}x{}x{}", l.nx, l.ny, l.nz)
        })?;
        positive("lattice.d", l.d)?;
        let e = &self.excitation;
        check(e.k_direction.iter().all(|x| x.is_finite()), || "excitation.k_direction must be finite".into())?;
        check(Vec3::from(e.k_direction).norm() > 0.0, || "excitation.k_direction must be nonzero".into())?;
        check(e.k_magnitude.is_finite() && e.k_magnitude >= 0.0, || {
            format!("excitation.k_magnitude must be >= 0, got {}", e.k_magnitude)
        })?;
        let d = &self.drive;
        check(d.omega.is_finite() && d.omega >= 0.0, || format!("drive.omega must be >= 0, got {}", d.omega))?;
        check(d.delta.is_finite(), || "drive.delta must be finite".into())?;
        check(d.k_laser.iter().all(|x| x.is_finite()), || "drive.k_laser must be finite".into())?;
        match &d.envelope {
            EnvelopeSpec::Constant { level } => {
                check((0.0..=1.0).contains(level), || format!("drive.envelope.level {level} outside [0, 1]"))?
            }
            EnvelopeSpec::Square { width } => positive("drive.envelope.width", *width)?,
            EnvelopeSpec::File { .. } => {}
        }
        let subs = self.sublevels()?;
        let target = Sublevel::from_m(d.target_sublevel)
            .map_err(|_| config_error(format!("drive.target_sublevel must be -1, 0 or 1, got {}", d.target_sublevel)))?;
        check(subs.contains(target), || {
            format!("drive.target_sublevel {} is not among drive.sublevels", d.target_sublevel)
        })?;
        let t = &self.time;
        positive("time.t_end", t.t_end)?;
        check(t.samples >= 2, || format!("time.samples must be >= 2, got {}", t.samples))?;
        let a = &self.angular;
        check(a.n_theta >= 1 && a.n_phi >= 1, || "angular.n_theta and angular.n_phi must be >= 1".into())?;
        if let Some(u) = a.u {
            check(u.is_finite() && (0.0..=t.t_end).contains(&u), || {
                format!("angular.u = {u} outside the simulated window [0, {}]", t.t_end)
            })?;
        }
        positive("tolerances.rtol", self.tolerances.rtol)?;
        positive("tolerances.atol", self.tolerances.atol)?;
        positive("units.c_tilde", self.units.c_tilde)?;
        if let Some(s) = &self.shape {
            check(s.photon_fraction > 0.0 && s.photon_fraction < 1.0, || {
                format!("shape.photon_fraction must lie in (0, 1), got {}", s.photon_fraction)
            })?;
            positive("shape.reference_t_end", s.reference_t_end)?;
            positive("shape.reference_step", s.reference_step)?;
            match &s.target {
                TargetSpec::Gaussian { half_width, t_end, samples, .. }
                | TargetSpec::DoubleGaussian { half_width, t_end, samples, .. } => {
                    positive("shape.target.half_width", *half_width)?;
                    positive("shape.target.t_end", *t_end)?;
                    check(*samples >= 2, || "shape.target.samples must be >= 2".into())?;
                }
                TargetSpec::File { .. } => {}
            }
        }
        if let Some(sw) = &self.sweep {
            check(!sw.spacings.is_empty(), || "sweep.spacings must not be empty".into())?;
            for &d in &sw.spacings {
                positive("sweep.spacings entry", d)?;
            }
        }
        Ok(())
    }

    pub fn sublevels(&self) -> Result<SublevelSet, CliError> {
        let levels = self
            .drive
            .sublevels
            .iter()
            .map(|&m| Sublevel::from_m(m))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|_| config_error(format!("drive.sublevels entries must be -1, 0 or 1, got {:?}", self.drive.sublevels)))?;
        SublevelSet::from_sublevels(&levels).map_err(|e| config_error(format!("drive.sublevels: {e}")))
    }

    pub fn array(&self) -> Result<AtomArray, CliError> {
        let l = &self.lattice;
        AtomArray::lattice(l.nx, l.ny, l.nz, l.d).map_err(|e| config_error(e.to_string()))
    }

    pub fn k_gf(&self) -> Vec3 {
        Vec3::from(self.excitation.k_direction).normalize() * self.excitation.k_magnitude
    }

    /// Emission wavevector k_em = k_gf − k_L.
    pub fn k_em(&self) -> Vec3 {
        self.k_gf() - Vec3::from(self.drive.k_laser)
    }

    pub fn envelope(&self) -> Result<Envelope, CliError> {
        Ok(match &self.drive.envelope {
            EnvelopeSpec::Constant { level } => Envelope::Constant(*level),
            EnvelopeSpec::Square { width } => Envelope::Square { width: *width },
            EnvelopeSpec::File { path } => Envelope::Sampled(io::read_envelope(path)?),
        })
    }

    pub fn laser(&self) -> Result<LaserDrive, CliError> {
        let target = Sublevel::from_m(self.drive.target_sublevel).map_err(|e| config_error(e.to_string()))?;
        Ok(LaserDrive::new(self.drive.omega, self.drive.delta, self.envelope()?)
            .map_err(|e| config_error(e.to_string()))?
            .with_target(target)
            .with_k_laser(Vec3::from(self.drive.k_laser)))
    }

    pub fn grid(&self) -> Result<AngularGrid, CliError> {
        AngularGrid::new(self.angular.n_theta, self.angular.n_phi).map_err(|e| config_error(e.to_string()))
    }

    pub fn ode(&self) -> OdeOptions {
        OdeOptions { rtol: self.tolerances.rtol, atol: self.tolerances.atol, ..OdeOptions::default() }
    }

    /// The same configuration with a different lattice spacing.
    pub fn with_spacing(&self, d: f64) -> Self {
        let mut c = self.clone();
        c.lattice.d = d;
        c.sweep = None;
        c
    }
}

/// SHA-256 of the configuration text, hex encoded.
pub fn digest(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[lattice]
nx = 2
ny = 1
nz = 1
d = 0.3

[drive]
omega = 2.0
delta = 10.0

[time]
t_end = 5.0
"#;

    #[test]
    fn defaults_fill_in() {
        let c = RunConfig::from_toml(MINIMAL, Path::new(".")).unwrap();
        assert_eq!(c.angular.n_theta, 64);
        assert_eq!(c.drive.sublevels, vec![-1, 0, 1]);
        assert!((c.k_em() - Vec3::new(0.0, 0.0, K0)).norm() < 1e-12);
        assert_eq!(c.time.propagator, PropagatorChoice::Auto);
    }

    #[test]
    fn unknown_key_is_named() {
        let text = MINIMAL.replace("delta = 10.0", "delta = 10.0\nomgea = 3.0");
        let err = RunConfig::from_toml(&text, Path::new(".")).unwrap_err();
        assert!(err.to_string().contains("omgea"), "{err}");
    }

    #[test]
    fn target_outside_sublevels_rejected() {
        let text = MINIMAL.replace("delta = 10.0", "delta = 10.0\nsublevels = [0]");
        assert!(RunConfig::from_toml(&text, Path::new(".")).is_err());
    }

    #[test]
    fn envelope_variants_parse() {
        let text = MINIMAL.replace("delta = 10.0", "delta = 10.0\nenvelope = { type = \"square\", width = 0.2 }");
        let c = RunConfig::from_toml(&text, Path::new(".")).unwrap();
        assert!(matches!(c.envelope().unwrap(), Envelope::Square { width } if width == 0.2));
    }

    #[test]
    fn digest_is_stable() {
        assert_eq!(digest("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }
}
