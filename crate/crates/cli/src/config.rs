// SPDX-License-Identifier: Apache-2.0

//! TOML experiment configuration. All quantities are SI: rad/s, N, m, s.

use std::f64::consts::FRAC_1_SQRT_2;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use ionprobe::dynamics::time_grid;
use ionprobe::hilbert::{
    product_state, spin_superposition, HilbertSpace, MotionalState, QuantumState, Spin, I, ONE,
};
use ionprobe::models::{Force, ProbeKind, ProbeParams, Spread, HBAR};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KindName {
    Jc,
    Qr,
    Jt,
}

impl From<KindName> for ProbeKind {
    fn from(k: KindName) -> Self {
        match k {
            KindName::Jc => ProbeKind::Jc,
            KindName::Qr => ProbeKind::Qr,
            KindName::Jt => ProbeKind::Jt,
        }
    }
}

/// Which Hamiltonian drives the evolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HamiltonianChoice {
    /// Full lab-frame Hamiltonian with the force term.
    #[default]
    Lab,
    /// Second-order effective Hamiltonian including the residual coupling.
    Effective,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeSection {
    pub kind: KindName,
    pub g: f64,
    pub omega: f64,
    /// Ground-state spread; alternatively give `mass` and `trap_frequency`.
    pub z: Option<f64>,
    pub mass: Option<f64>,
    pub trap_frequency: Option<f64>,
    /// Axial force (JC, QR).
    pub force: Option<f64>,
    /// Transverse force components (JT).
    pub force_x: Option<f64>,
    pub force_y: Option<f64>,
    /// Spin frequency Δ; defaults to g²/2ω.
    pub delta: Option<f64>,
    #[serde(default)]
    pub drive_omega: f64,
    /// Heating rates per mode [1/s].
    #[serde(default)]
    pub heating: Vec<f64>,
    #[serde(default)]
    pub hamiltonian: HamiltonianChoice,
    pub hbar: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpinChoice {
    #[default]
    Up,
    Down,
    /// `c_up|↑⟩ + c_down e^{iφ}|↓⟩`.
    Superposition,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MotionChoice {
    #[default]
    Vacuum,
    Fock,
    Thermal,
}

/// A scalar broadcast to every mode, or one value per mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PerMode {
    One(f64),
    Many(Vec<f64>),
}

impl Default for PerMode {
    fn default() -> Self {
        PerMode::One(0.0)
    }
}

impl PerMode {
    pub fn expand(&self, modes: usize) -> Result<Vec<f64>, CliError> {
        match self {
            PerMode::One(v) => Ok(vec![*v; modes]),
            PerMode::Many(v) if v.len() == modes => Ok(v.clone()),
            PerMode::Many(v) => Err(CliError::Config(format!(
                "expected {modes} per-mode values, got {}",
                v.len()
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSection {
    #[serde(default)]
    pub spin: SpinChoice,
    #[serde(default = "default_amplitude")]
    pub c_up: f64,
    #[serde(default = "default_amplitude")]
    pub c_down: f64,
    #[serde(default)]
    pub phi: f64,
    #[serde(default)]
    pub motion: MotionChoice,
    #[serde(default)]
    pub occupations: Vec<usize>,
    #[serde(default)]
    pub nbar: PerMode,
}

fn default_amplitude() -> f64 {
    FRAC_1_SQRT_2
}

impl Default for InitialSection {
    fn default() -> Self {
        Self {
            spin: SpinChoice::Up,
            c_up: FRAC_1_SQRT_2,
            c_down: FRAC_1_SQRT_2,
            phi: 0.0,
            motion: MotionChoice::Vacuum,
            occupations: Vec::new(),
            nbar: PerMode::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProtocolKind {
    #[default]
    Plain,
    DrivenDd,
    Cpmg,
    Lindblad,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolSection {
    #[serde(default)]
    pub kind: ProtocolKind,
    /// CPMG order n: 2ⁿ base segments over the time window.
    #[serde(default = "default_order")]
    pub order: usize,
    /// Lindblad heating rate Γ for every mode; defaults to `probe.heating`.
    pub gamma: Option<f64>,
}

fn default_order() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSection {
    #[serde(default)]
    pub start: f64,
    pub stop: f64,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceSection {
    /// Fock cutoff shared by all modes.
    pub cutoff: Option<usize>,
    /// Per-mode cutoffs; overrides `cutoff`.
    pub cutoffs: Option<Vec<usize>>,
}

pub const DEFAULT_CUTOFF: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default = "default_dir")]
    pub dir: PathBuf,
    #[serde(default = "default_name")]
    pub name: String,
    #[serde(default = "default_true")]
    pub svg: bool,
}

fn default_dir() -> PathBuf {
    PathBuf::from(".")
}

fn default_name() -> String {
    "signal".into()
}

fn default_true() -> bool {
    true
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            dir: default_dir(),
            name: default_name(),
            svg: true,
        }
    }
}

/// One swept parameter: explicit `values`, or `points` samples from `start`
/// to `stop` (geometric when `log = true`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepParameter {
    pub name: String,
    pub values: Option<Vec<f64>>,
    pub start: Option<f64>,
    pub stop: Option<f64>,
    pub points: Option<usize>,
    #[serde(default)]
    pub log: bool,
}

impl SweepParameter {
    pub fn values(&self) -> Result<Vec<f64>, CliError> {
        let empty = || {
            CliError::Config(format!(
                "sweep parameter '{}' has an empty range",
                self.name
            ))
        };
        if let Some(v) = &self.values {
            if v.is_empty() {
                return Err(empty());
            }
            return Ok(v.clone());
        }
        let (Some(a), Some(b), Some(n)) = (self.start, self.stop, self.points) else {
            return Err(CliError::Config(format!(
                "sweep parameter '{}' needs values or start, stop and points",
                self.name
            )));
        };
        match n {
            0 => Err(empty()),
            1 => Ok(vec![a]),
            _ if self.log => {
                if !(a > 0.0 && b > 0.0) {
                    return Err(CliError::Config(format!(
                        "log sweep of '{}' needs positive bounds",
                        self.name
                    )));
                }
                let (la, lb) = (a.ln(), b.ln());
                Ok((0..n)
                    .map(|k| (la + (lb - la) * k as f64 / (n - 1) as f64).exp())
                    .collect())
            }
            _ => Ok((0..n)
                .map(|k| a + (b - a) * k as f64 / (n - 1) as f64)
                .collect()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    #[serde(default, rename = "parameter")]
    pub parameters: Vec<SweepParameter>,
    #[serde(default)]
    pub metrics: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub probe: ProbeSection,
    #[serde(default)]
    pub initial: InitialSection,
    #[serde(default)]
    pub protocol: ProtocolSection,
    pub time: TimeSection,
    #[serde(default)]
    pub space: SpaceSection,
    #[serde(default)]
    pub output: OutputSection,
    pub sweep: Option<SweepSection>,
}

impl ExperimentConfig {
    pub fn from_path(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn num_modes(&self) -> usize {
        ProbeKind::from(self.probe.kind).num_modes()
    }

    pub fn params(&self) -> Result<ProbeParams, CliError> {
        let p = &self.probe;
        let missing = |what: &str| CliError::Config(format!("[probe] {what} is required"));
        let kind = ProbeKind::from(p.kind);
        let z = p.z.unwrap_or(f64::NAN);
        let mut params = match kind {
            ProbeKind::Jc => {
                ProbeParams::jc(p.g, p.omega, z, p.force.ok_or_else(|| missing("force"))?)
            }
            ProbeKind::Qr => {
                ProbeParams::qr(p.g, p.omega, z, p.force.ok_or_else(|| missing("force"))?)
            }
            ProbeKind::Jt => ProbeParams::jt(
                p.g,
                p.omega,
                z,
                p.force_x.ok_or_else(|| missing("force_x"))?,
                p.force_y.ok_or_else(|| missing("force_y"))?,
            ),
        };
        params.spread = match (p.z, p.mass, p.trap_frequency) {
            (Some(z), None, None) => Spread::Direct(z),
            (None, Some(mass), Some(trap_frequency)) => Spread::Trap {
                mass,
                trap_frequency,
            },
            _ => {
                return Err(CliError::Config(
                    "[probe] give either z or both mass and trap_frequency".into(),
                ))
            }
        };
        if let Some(d) = p.delta {
            params = params.with_delta(d);
        }
        if let Some(h) = p.hbar {
            params.hbar = h;
        } else {
            params.hbar = HBAR;
        }
        if !p.heating.is_empty() {
            params = params.with_heating(p.heating.clone());
        }
        params = params.with_drive(p.drive_omega);
        params.validate()?;
        Ok(params)
    }

    pub fn space(&self) -> Result<HilbertSpace, CliError> {
        let modes = self.num_modes();
        let cutoffs = match (&self.space.cutoffs, self.space.cutoff) {
            (Some(c), _) => c.clone(),
            (None, Some(c)) => vec![c; modes],
            (None, None) => vec![DEFAULT_CUTOFF; modes],
        };
        if cutoffs.len() != modes {
            return Err(CliError::Config(format!(
                "{modes} mode(s) need {modes} cutoff(s), got {}",
                cutoffs.len()
            )));
        }
        Ok(HilbertSpace::new(cutoffs)?)
    }

    pub fn times(&self) -> Result<Vec<f64>, CliError> {
        Ok(time_grid(
            self.time.start,
            self.time.stop,
            self.time.points,
        )?)
    }

    pub fn initial_state(&self, space: &HilbertSpace) -> Result<QuantumState, CliError> {
        let init = &self.initial;
        let modes = space.num_modes();
        let motion = match init.motion {
            MotionChoice::Vacuum => MotionalState::vacuum(space),
            MotionChoice::Fock => {
                let occ = if init.occupations.is_empty() {
                    vec![0; modes]
                } else {
                    init.occupations.clone()
                };
                MotionalState::fock(space, &occ)?
            }
            MotionChoice::Thermal => {
                MotionalState::thermal_product(space, &init.nbar.expand(modes)?)?
            }
        };
        let state = match init.spin {
            SpinChoice::Up => product_state(space, Spin::Up, &motion)?,
            SpinChoice::Down => product_state(space, Spin::Down, &motion)?,
            SpinChoice::Superposition => spin_superposition(
                space,
                ONE * init.c_up,
                ONE * init.c_down * (I * init.phi).exp(),
                &motion,
            )?,
        };
        Ok(state)
    }

    /// Checks everything that can be checked without running a simulation.
    pub fn validate(&self) -> Result<(), CliError> {
        self.params()?;
        let space = self.space()?;
        self.times()?;
        self.initial_state(&space)?;
        if self.protocol.kind == ProtocolKind::Cpmg && self.protocol.order == 0 {
            return Err(CliError::Config("CPMG order must be at least 1".into()));
        }
        if self.protocol.kind == ProtocolKind::DrivenDd && self.probe.drive_omega == 0.0 {
            return Err(CliError::Config(
                "driven_dd protocol needs a nonzero probe.drive_omega".into(),
            ));
        }
        if let Some(g) = self.protocol.gamma {
            if !(g >= 0.0) {
                return Err(CliError::Config(format!("protocol.gamma {g} is negative")));
            }
        }
        if self.output.name.is_empty() || self.output.name.contains(['/', '\\']) {
            return Err(CliError::Config(format!(
                "output name '{}' is not a plain file stem",
                self.output.name
            )));
        }
        Ok(())
    }

    /// Replaces a named parameter; used by sweeps.
    pub fn set(&mut self, name: &str, value: f64) -> Result<(), CliError> {
        let p = &mut self.probe;
        match name {
            "g" => p.g = value,
            "omega" => p.omega = value,
            "z" => p.z = Some(value),
            "force" => p.force = Some(value),
            "force_x" => p.force_x = Some(value),
            "force_y" => p.force_y = Some(value),
            "delta" => p.delta = Some(value),
            "drive_omega" => p.drive_omega = value,
            "heating" => {
                let modes = self.num_modes();
                self.probe.heating = vec![value; modes];
            }
            "nbar" => self.initial.nbar = PerMode::One(value),
            "phi" => self.initial.phi = value,
            "gamma" => self.protocol.gamma = Some(value),
            "stop" => self.time.stop = value,
            "cutoff" => {
                if !(value >= 2.0 && value.fract() == 0.0) {
                    return Err(CliError::Config(format!(
                        "cutoff {value} is not an integer >= 2"
                    )));
                }
                self.space.cutoff = Some(value as usize);
                self.space.cutoffs = None;
            }
            _ => {
                return Err(CliError::Config(format!(
                    "unknown sweep parameter '{name}'; expected one of {}",
                    SWEEPABLE.join(", ")
                )))
            }
        }
        Ok(())
    }
}

pub const SWEEPABLE: [&str; 14] = [
    "g",
    "omega",
    "z",
    "force",
    "force_x",
    "force_y",
    "delta",
    "drive_omega",
    "heating",
    "nbar",
    "phi",
    "gamma",
    "stop",
    "cutoff",
];

/// Resolved force as printed in metadata.
pub fn force_components(params: &ProbeParams) -> Vec<f64> {
    match params.force {
        Force::Axial(f) => vec![f],
        Force::Transverse { x, y } => vec![x, y],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[probe]
kind = "jc"
g = 4e3
omega = 1.7e5
z = 14.5e-9
force = 20e-24

[time]
stop = 0.1
points = 11
"#;

    #[test]
    fn minimal_config_defaults() {
        let c = ExperimentConfig::from_toml(MINIMAL).unwrap();
        c.validate().unwrap();
        assert_eq!(c.space().unwrap().cutoffs(), &[DEFAULT_CUTOFF]);
        assert_eq!(c.protocol.kind, ProtocolKind::Plain);
        assert_eq!(c.output.name, "signal");
        let p = c.params().unwrap();
        assert!((p.delta() - 4e3f64.powi(2) / 3.4e5).abs() < 1e-9);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(ExperimentConfig::from_toml("[probe]\nkind = \"xx\"").is_err());
        let extra = format!("{MINIMAL}\n[space]\ncutof = 3\n");
        assert!(ExperimentConfig::from_toml(&extra).is_err());
        let mut c = ExperimentConfig::from_toml(MINIMAL).unwrap();
        c.time.points = 0;
        assert!(c.validate().is_err());
        let mut c = ExperimentConfig::from_toml(MINIMAL).unwrap();
        c.probe.force = None;
        assert!(c.validate().is_err());
        let mut c = ExperimentConfig::from_toml(MINIMAL).unwrap();
        assert!(c.set("mass", 1.0).is_err());
        assert!(c.set("cutoff", 2.5).is_err());
    }

    #[test]
    fn sweep_ranges() {
        let p = SweepParameter {
            name: "g".into(),
            values: None,
            start: Some(1e3),
            stop: Some(1e4),
            points: Some(3),
            log: true,
        };
        let v = p.values().unwrap();
        assert!((v[1] - 1e3 * 10f64.sqrt()).abs() < 1e-9);
        let empty = SweepParameter {
            values: Some(vec![]),
            ..p.clone()
        };
        assert!(empty.values().is_err());
        let zero = SweepParameter {
            points: Some(0),
            ..p
        };
        assert!(zero.values().is_err());
    }
}
