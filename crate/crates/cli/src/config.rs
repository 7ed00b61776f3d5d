//! JSON run configuration.
//!
//! Every optional field has a default, and [`RunConfig::resolve`] fills in
//! anything derived from the rest (tabulated CSV contents, Fock dimension),
//! so the echoed config alone reproduces a run.

use std::path::{Path, PathBuf};

use cspath_core::oracles::default_fock_dim;
use cspath_core::{CoherentLabel, Drive, OscillatorModel, PropagatorQuery, TabulatedDrive, C64};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Complex {
    pub re: f64,
    pub im: f64,
}

impl From<Complex> for C64 {
    fn from(z: Complex) -> Self {
        C64::new(z.re, z.im)
    }
}

impl From<C64> for Complex {
    fn from(z: C64) -> Self {
        Complex { re: z.re, im: z.im }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelConfig,
    pub query: QueryConfig,
    #[serde(default)]
    pub options: Options,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub omega: f64,
    pub drive: DriveConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DriveConfig {
    Constant {
        value: Complex,
    },
    Cosine {
        amplitude: Complex,
        frequency: f64,
        #[serde(default)]
        phase: f64,
    },
    GaussianPulse {
        amplitude: Complex,
        center: f64,
        width: f64,
        #[serde(default)]
        carrier: f64,
    },
    /// Either inline `t`/`f` arrays or a CSV file with header `t,re_f,im_f`.
    Tabulated {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        t: Option<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        f: Option<Vec<Complex>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        csv: Option<PathBuf>,
    },
}

impl DriveConfig {
    pub fn to_drive(&self) -> Result<Drive, CliError> {
        let drive = match self {
            DriveConfig::Constant { value } => Drive::constant((*value).into()),
            DriveConfig::Cosine {
                amplitude,
                frequency,
                phase,
            } => Drive::Cosine {
                amplitude: (*amplitude).into(),
                frequency: *frequency,
                phase: *phase,
            },
            DriveConfig::GaussianPulse {
                amplitude,
                center,
                width,
                carrier,
            } => Drive::GaussianPulse {
                amplitude: (*amplitude).into(),
                center: *center,
                width: *width,
                carrier: *carrier,
            },
            DriveConfig::Tabulated { t: Some(t), f: Some(f), csv: None } => Drive::Tabulated(TabulatedDrive::new(
                t.clone(),
                f.iter().map(|&z| z.into()).collect(),
            )?),
            DriveConfig::Tabulated { .. } => {
                return Err(CliError::Config(
                    "tabulated drive needs either both `t` and `f`, or `csv`, after resolution".into(),
                ))
            }
        };
        drive.validate()?;
        Ok(drive)
    }

    /// Multiplies the drive by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let s = |z: &Complex| Complex {
            re: z.re * factor,
            im: z.im * factor,
        };
        match self {
            DriveConfig::Constant { value } => DriveConfig::Constant { value: s(value) },
            DriveConfig::Cosine {
                amplitude,
                frequency,
                phase,
            } => DriveConfig::Cosine {
                amplitude: s(amplitude),
                frequency: *frequency,
                phase: *phase,
            },
            DriveConfig::GaussianPulse {
                amplitude,
                center,
                width,
                carrier,
            } => DriveConfig::GaussianPulse {
                amplitude: s(amplitude),
                center: *center,
                width: *width,
                carrier: *carrier,
            },
            DriveConfig::Tabulated { t, f, csv } => DriveConfig::Tabulated {
                t: t.clone(),
                f: f.as_ref().map(|f| f.iter().map(s).collect()),
                csv: csv.clone(),
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QueryConfig {
    pub a: Complex,
    pub b: Complex,
    pub tau: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Options {
    /// Tolerance for numerically computed drive integrals and actions.
    pub tol: f64,
    pub seed: u64,
    pub n_grid: usize,
    pub path_samples: usize,
    pub sample_radius: f64,
    pub fd_step: f64,
    /// `None` until resolved; then the dimension actually used.
    pub fock_dim: Option<usize>,
    pub fock_dt: f64,
    pub fock_tail_tol: f64,
    pub fock_norm_tol: f64,
    pub lattice_slices: Vec<usize>,
    pub fock_dt_sweep: Vec<f64>,
    /// Norm-drift tolerance used during the dt sweep, where coarse steps are
    /// expected to drift more.
    pub fock_sweep_norm_tol: f64,
    pub split_points: usize,
    pub thresholds: Thresholds,
}

impl Default for Options {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            seed: 0,
            n_grid: 4096,
            path_samples: 100,
            sample_radius: 3.0,
            fd_step: 1e-4,
            fock_dim: None,
            fock_dt: 1e-4,
            fock_tail_tol: 1e-10,
            fock_norm_tol: 1e-8,
            lattice_slices: (6..=14).map(|k| 1usize << k).collect(),
            fock_dt_sweep: vec![0.04, 0.02, 0.01, 0.005, 0.0025],
            fock_sweep_norm_tol: 1e-5,
            split_points: 5,
            thresholds: Thresholds::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Thresholds {
    pub path_independence: f64,
    pub unitarity: f64,
    pub schrodinger: f64,
    pub closure: f64,
    pub composition: f64,
    pub fock: f64,
    pub identity: f64,
    /// Errors at or below this count as an exact lattice chain.
    pub exact_chain: f64,
    pub lattice_order: [f64; 2],
    pub fock_order: [f64; 2],
    /// Convergence errors below this are rounding noise and left out of
    /// slope fits.
    pub fit_floor: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            path_independence: 1e-9,
            unitarity: 1e-9,
            schrodinger: 1e-7,
            closure: 1e-12,
            composition: 1e-10,
            fock: 1e-6,
            identity: 1e-9,
            exact_chain: 1e-14,
            lattice_order: [0.8, 1.2],
            fock_order: [3.5, 4.5],
            fit_floor: 1e-12,
        }
    }
}

/// Axes of a Cartesian sweep. Missing axes stay at the base config value.
/// Points are ordered with `omega` outermost and `b` innermost.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<Vec<f64>>,
    /// Factor applied to the base drive.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub amplitude: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<Vec<Complex>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<Vec<Complex>>,
}

/// One grid point: the swept values plus the config that reproduces it.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepPoint {
    pub index: usize,
    pub omega: f64,
    pub tau: f64,
    pub amplitude: f64,
    pub a: Complex,
    pub b: Complex,
    pub config: RunConfig,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    /// Loads any tabulated CSV (relative paths against `base_dir`), fills in
    /// the Fock dimension, and checks every domain.
    pub fn resolve(mut self, base_dir: &Path) -> Result<Self, CliError> {
        if let DriveConfig::Tabulated { t, f, csv } = &mut self.model.drive {
            match (t.is_some(), f.is_some(), csv.take()) {
                (false, false, Some(path)) => {
                    let path = if path.is_relative() { base_dir.join(path) } else { path };
                    let (times, values) = read_drive_csv(&path)?;
                    *t = Some(times);
                    *f = Some(values);
                }
                (true, true, None) => {}
                _ => {
                    return Err(CliError::Config(
                        "tabulated drive needs either both `t` and `f`, or `csv` alone".into(),
                    ))
                }
            }
        }
        self.check_domains()?;
        if self.options.fock_dim.is_none() {
            let model = self.model()?;
            let q = self.query()?;
            self.options.fock_dim = Some(default_fock_dim(q.a, &model, q.tau()));
        }
        Ok(self)
    }

    fn check_domains(&self) -> Result<(), CliError> {
        let o = &self.options;
        let positive = [
            ("tol", o.tol),
            ("sample_radius", o.sample_radius),
            ("fd_step", o.fd_step),
            ("fock_dt", o.fock_dt),
            ("fock_tail_tol", o.fock_tail_tol),
            ("fock_norm_tol", o.fock_norm_tol),
            ("fock_sweep_norm_tol", o.fock_sweep_norm_tol),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(CliError::Config(format!("options.{name} must be finite and > 0, got {v}")));
            }
        }
        if o.n_grid < 2 || o.path_samples == 0 || o.split_points == 0 {
            return Err(CliError::Config(
                "options.n_grid must be >= 2, path_samples and split_points >= 1".into(),
            ));
        }
        if o.fock_dim == Some(0) {
            return Err(CliError::Config("options.fock_dim must be >= 1".into()));
        }
        if o.lattice_slices.contains(&0) {
            return Err(CliError::Config("options.lattice_slices entries must be >= 1".into()));
        }
        if o.fock_dt_sweep.iter().any(|&dt| !(dt > 0.0 && dt.is_finite())) {
            return Err(CliError::Config("options.fock_dt_sweep entries must be > 0".into()));
        }
        self.model()?;
        self.query()?;
        if let Some(sweep) = &self.sweep {
            for point in self.sweep_points_of(sweep) {
                point.config.model()?;
                point.config.query()?;
            }
        }
        Ok(())
    }

    pub fn model(&self) -> Result<OscillatorModel, CliError> {
        Ok(OscillatorModel::new(self.model.omega, self.model.drive.to_drive()?)?)
    }

    pub fn query(&self) -> Result<PropagatorQuery, CliError> {
        let a = CoherentLabel::new(self.query.a.into())?;
        let b = CoherentLabel::new(self.query.b.into())?;
        Ok(PropagatorQuery::new(a, b, self.query.tau)?)
    }

    /// Fock dimension after [`RunConfig::resolve`].
    pub fn fock_dim(&self) -> usize {
        self.options.fock_dim.expect("config not resolved")
    }

    /// The grid of a sweep config; a config without `sweep` is a single point.
    pub fn sweep_points(&self) -> Vec<SweepPoint> {
        match &self.sweep {
            Some(sweep) => self.sweep_points_of(sweep),
            None => self.sweep_points_of(&SweepConfig::default()),
        }
    }

    fn sweep_points_of(&self, sweep: &SweepConfig) -> Vec<SweepPoint> {
        let omegas = sweep.omega.clone().unwrap_or_else(|| vec![self.model.omega]);
        let taus = sweep.tau.clone().unwrap_or_else(|| vec![self.query.tau]);
        let amplitudes = sweep.amplitude.clone().unwrap_or_else(|| vec![1.0]);
        let a_values = sweep.a.clone().unwrap_or_else(|| vec![self.query.a]);
        let b_values = sweep.b.clone().unwrap_or_else(|| vec![self.query.b]);
        let mut points = Vec::new();
        for &omega in &omegas {
            for &tau in &taus {
                for &amplitude in &amplitudes {
                    for &a in &a_values {
                        for &b in &b_values {
                            let mut config = self.clone();
                            config.sweep = None;
                            config.model.omega = omega;
                            if amplitude != 1.0 {
                                config.model.drive = config.model.drive.scaled(amplitude);
                            }
                            config.query = QueryConfig { a, b, tau };
                            points.push(SweepPoint {
                                index: points.len(),
                                omega,
                                tau,
                                amplitude,
                                a,
                                b,
                                config,
                            });
                        }
                    }
                }
            }
        }
        points
    }
}

/// Reads a drive table with header `t,re_f,im_f`.
pub fn read_drive_csv(path: &Path) -> Result<(Vec<f64>, Vec<Complex>), CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::Config(format!("cannot read drive table {}: {e}", path.display())))?;
    let header = reader
        .headers()
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?
        .clone();
    if header.iter().collect::<Vec<_>>() != ["t", "re_f", "im_f"] {
        return Err(CliError::Config(format!(
            "{}: expected header `t,re_f,im_f`, found `{}`",
            path.display(),
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut times = Vec::new();
    let mut values = Vec::new();
    for (line, row) in reader.deserialize::<(f64, f64, f64)>().enumerate() {
        let (t, re, im) = row.map_err(|e| CliError::Config(format!("{} row {}: {e}", path.display(), line + 2)))?;
        times.push(t);
        values.push(Complex { re, im });
    }
    Ok((times, values))
}
