//! Experiment configuration, loaded from TOML.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{invalid, Error, Result};
use crate::hamiltonian::HamiltonianOptions;
use crate::propagation::PropagatorConfig;
use crate::protocol::ProtocolOptions;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    AmplitudeScan,
    FreqScan,
    Chirp,
    Otoc,
    ReoptMap,
    Scaling,
    Convergence,
    Calibrate,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 8] = [
        ExperimentKind::AmplitudeScan,
        ExperimentKind::FreqScan,
        ExperimentKind::Chirp,
        ExperimentKind::Otoc,
        ExperimentKind::ReoptMap,
        ExperimentKind::Scaling,
        ExperimentKind::Convergence,
        ExperimentKind::Calibrate,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::AmplitudeScan => "amplitude-scan",
            ExperimentKind::FreqScan => "freq-scan",
            ExperimentKind::Chirp => "chirp",
            ExperimentKind::Otoc => "otoc",
            ExperimentKind::ReoptMap => "reopt-map",
            ExperimentKind::Scaling => "scaling",
            ExperimentKind::Convergence => "convergence",
            ExperimentKind::Calibrate => "calibrate",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == name)
            .ok_or_else(|| invalid(format!("unknown experiment kind '{name}'")))
    }

    /// Default ensemble size.
    pub fn default_n_avg(self) -> usize {
        match self {
            ExperimentKind::Scaling => 50,
            ExperimentKind::ReoptMap => 5,
            ExperimentKind::Calibrate => 3,
            _ => 20,
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A one-dimensional grid: an explicit list or an inclusive `start..=stop` range.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Grid {
    List(Vec<f64>),
    Range { start: f64, stop: f64, step: f64 },
}

impl Grid {
    pub fn range(start: f64, stop: f64, step: f64) -> Self {
        Grid::Range { start, stop, step }
    }

    pub fn values(&self) -> Result<Vec<f64>> {
        let v = match self {
            Grid::List(v) => v.clone(),
            &Grid::Range { start, stop, step } => {
                if !(step > 0.0) || !(stop >= start) {
                    return Err(invalid(format!("bad grid range {start}..={stop} step {step}")));
                }
                let n = ((stop - start) / step + 1e-9).floor() as usize;
                // Multiplying instead of accumulating keeps points exact on decimal grids.
                (0..=n).map(|k| round_grid(start + k as f64 * step)).collect()
            }
        };
        if v.is_empty() || v.iter().any(|x| !x.is_finite()) || v.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(invalid("grid must be non-empty, finite and strictly increasing"));
        }
        Ok(v)
    }
}

fn round_grid(x: f64) -> f64 {
    (x * 1e9).round() / 1e9
}

/// How the protocol operating point `(g*, t*)` is chosen.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "mode")]
pub enum OperatingPoint {
    /// Grid search on an undriven ensemble of `calibration.n_avg` realizations.
    Calibrate,
    Fixed { g: f64, t_star: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CalibrationConfig {
    pub n_avg: usize,
    pub g_grid: Grid,
    pub t_grid: Grid,
}

impl Default for CalibrationConfig {
    fn default() -> Self {
        Self { n_avg: 3, g_grid: Grid::range(8.0, 28.0, 1.0), t_grid: Grid::range(3.0, 14.0, 0.5) }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AmplitudeConfig {
    pub omega: f64,
    pub eps_grid: Grid,
}

impl Default for AmplitudeConfig {
    fn default() -> Self {
        Self { omega: 1.5, eps_grid: Grid::range(0.0, 2.5, 0.25) }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FrequencyConfig {
    pub epsilon: f64,
    pub omega_grid: Grid,
}

impl Default for FrequencyConfig {
    fn default() -> Self {
        Self { epsilon: 0.2, omega_grid: Grid::List(vec![0.05, 0.25, 0.5, 0.75, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0]) }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ChirpConfig {
    pub epsilon: f64,
    pub omega_t: f64,
    pub omega_l: f64,
    /// Readout times `t_R`.
    pub t_grid: Grid,
}

impl Default for ChirpConfig {
    fn default() -> Self {
        Self { epsilon: 0.5, omega_t: 0.5, omega_l: std::f64::consts::PI, t_grid: Grid::range(3.0, 14.0, 0.1) }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OtocConfig {
    pub omega: f64,
    pub eps_list: Vec<f64>,
    pub pairs: Vec<(usize, usize)>,
    pub t_grid: Grid,
    pub plateau_fraction: f64,
}

impl Default for OtocConfig {
    fn default() -> Self {
        Self {
            omega: 1.5,
            eps_list: vec![0.0, 0.2, 0.5],
            pairs: crate::diagnostics::DEFAULT_PAIRS.to_vec(),
            t_grid: Grid::range(0.0, 12.0, 0.1),
            plateau_fraction: crate::diagnostics::DEFAULT_PLATEAU_FRACTION,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ReoptConfig {
    pub eps_list: Vec<f64>,
    pub omega_list: Vec<f64>,
    pub g_grid: Grid,
    pub t_grid: Grid,
}

impl Default for ReoptConfig {
    fn default() -> Self {
        Self {
            eps_list: vec![0.0, 0.5, 1.0, 1.5, 2.0],
            omega_list: vec![0.5, 1.0, 1.5, 2.5],
            g_grid: Grid::range(5.0, 35.0, 1.0),
            t_grid: Grid::range(3.0, 14.0, 0.5),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScalingConfig {
    pub n_list: Vec<usize>,
    /// Per-size ensemble overrides, `[[N, n_avg], ...]`; other sizes use the experiment `n_avg`.
    pub n_avg_overrides: Vec<(usize, usize)>,
    pub epsilon: f64,
    pub omega: f64,
    pub g_grid: Grid,
    pub t_grid: Grid,
    /// Grid steps either side of `t*` searched for the driven peak at `g*`.
    pub repeak_halfwidth: usize,
}

impl Default for ScalingConfig {
    fn default() -> Self {
        Self {
            n_list: vec![10, 12, 14, 16],
            n_avg_overrides: vec![],
            epsilon: 0.2,
            omega: 1.5,
            g_grid: Grid::range(8.0, 28.0, 1.0),
            t_grid: Grid::range(3.0, 24.0, 0.5),
            repeak_halfwidth: 2,
        }
    }
}

impl ScalingConfig {
    pub fn n_avg_for(&self, n: usize, default: usize) -> usize {
        self.n_avg_overrides.iter().find(|(m, _)| *m == n).map_or(default, |&(_, k)| k)
    }
}

/// One convergence test point; `chirp = true` uses the chirp settings with right-only readout drive.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergencePoint {
    pub epsilon: f64,
    #[serde(default)]
    pub omega: f64,
    #[serde(default)]
    pub chirp: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ConvergenceConfig {
    pub dts: Vec<f64>,
    /// Strang step for the reference solution.
    pub reference_dt: f64,
    pub points: Vec<ConvergencePoint>,
}

impl Default for ConvergenceConfig {
    fn default() -> Self {
        let mono = |epsilon, omega| ConvergencePoint { epsilon, omega, chirp: false };
        Self {
            dts: vec![0.05, 0.025, 0.0125],
            reference_dt: 0.0015625,
            points: vec![
                mono(0.0, 0.0),
                mono(0.2, 1.5),
                mono(0.5, 0.5),
                mono(1.5, 1.5),
                mono(0.2, std::f64::consts::PI),
                ConvergencePoint { epsilon: 0.5, omega: 0.0, chirp: true },
            ],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub n: usize,
    pub beta: f64,
    pub j: f64,
    pub base_seed: u64,
    /// Ensemble size; `None` takes the per-experiment default.
    pub n_avg: Option<usize>,
    pub operating_point: OperatingPoint,
    pub hamiltonian: HamiltonianOptions,
    pub protocol: ProtocolOptions,
    pub propagator: PropagatorConfig,
    pub calibration: CalibrationConfig,
    pub amplitude: AmplitudeConfig,
    pub frequency: FrequencyConfig,
    pub chirp: ChirpConfig,
    pub otoc: OtocConfig,
    pub reopt: ReoptConfig,
    pub scaling: ScalingConfig,
    pub convergence: ConvergenceConfig,
    /// Worker threads; 0 uses all cores.
    pub threads: usize,
    pub output_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            n: 12,
            beta: 2.0,
            j: 1.0,
            base_seed: 0,
            n_avg: None,
            operating_point: OperatingPoint::Calibrate,
            hamiltonian: HamiltonianOptions::default(),
            protocol: ProtocolOptions::default(),
            propagator: PropagatorConfig::default(),
            calibration: CalibrationConfig::default(),
            amplitude: AmplitudeConfig::default(),
            frequency: FrequencyConfig::default(),
            chirp: ChirpConfig::default(),
            otoc: OtocConfig::default(),
            reopt: ReoptConfig::default(),
            scaling: ScalingConfig::default(),
            convergence: ConvergenceConfig::default(),
            threads: 0,
            output_dir: PathBuf::from("results"),
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn n_avg(&self, kind: ExperimentKind) -> usize {
        self.n_avg.unwrap_or_else(|| kind.default_n_avg())
    }

    /// Seeds `base_seed + r` for `r < n`.
    pub fn seeds(&self, n: usize) -> Vec<u64> {
        (0..n as u64).map(|r| self.base_seed + r).collect()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !self.n.is_multiple_of(2) || self.n < 4 {
            return bad(format!("N must be even and at least 4, got {}", self.n));
        }
        if !(self.beta >= 0.0) || !(self.j > 0.0) {
            return bad("beta must be non-negative and J positive".into());
        }
        if self.n_avg == Some(0) || self.calibration.n_avg == 0 {
            return bad("ensemble sizes must be at least 1".into());
        }
        if let OperatingPoint::Fixed { g, t_star } = self.operating_point {
            if !g.is_finite() || !(t_star > 0.0) {
                return bad(format!("fixed operating point ({g}, {t_star}) is invalid"));
            }
        }
        self.propagator.validate()?;
        let grids = [
            ("calibration.g_grid", &self.calibration.g_grid),
            ("calibration.t_grid", &self.calibration.t_grid),
            ("amplitude.eps_grid", &self.amplitude.eps_grid),
            ("frequency.omega_grid", &self.frequency.omega_grid),
            ("chirp.t_grid", &self.chirp.t_grid),
            ("otoc.t_grid", &self.otoc.t_grid),
            ("reopt.g_grid", &self.reopt.g_grid),
            ("reopt.t_grid", &self.reopt.t_grid),
            ("scaling.g_grid", &self.scaling.g_grid),
            ("scaling.t_grid", &self.scaling.t_grid),
        ];
        for (name, g) in grids {
            g.values().map_err(|e| Error::Config(format!("{name}: {e}")))?;
        }
        if self.amplitude.eps_grid.values()?.iter().any(|&e| !(0.0..=2.5).contains(&e)) {
            return bad("amplitude.eps_grid must lie in [0, 2.5]".into());
        }
        if self.frequency.omega_grid.values()?.iter().any(|&w| !(0.0..=4.0).contains(&w)) {
            return bad("frequency.omega_grid must lie in [0, 4]".into());
        }
        let eps = &self.otoc.eps_list;
        if eps.first() != Some(&0.0) || eps.windows(2).any(|w| w[1] <= w[0]) {
            return bad("otoc.eps_list must start at 0 and increase".into());
        }
        if self.scaling.n_list.iter().any(|&n| n % 2 != 0 || !(4..=crate::register::RegisterLayout::MAX_N).contains(&n)) {
            return bad("scaling.n_list entries must be even and within the supported range".into());
        }
        if self.convergence.dts.is_empty() || self.convergence.dts.iter().any(|&d| !(d > self.convergence.reference_dt)) {
            return bad("convergence.dts must be non-empty and coarser than reference_dt".into());
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON form, hex encoded.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        let digest = Sha256::digest(json.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}
