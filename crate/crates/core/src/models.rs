// SPDX-License-Identifier: Apache-2.0

//! Probe Hamiltonians and the frequencies derived from physical parameters.
//!
//! Units are SI throughout: Hamiltonians are in joules, frequencies in rad/s.
//! Quoted "kHz" values map to rad/s with the same mantissa (4 kHz → 4e3 rad/s).
//! Everything lives in the rotating frame, so the oscillating force enters as
//! a static displacement term.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::hilbert::{HilbertSpace, Operator, SpinOp, I};

/// CODATA 2018 reduced Planck constant [J·s].
pub const HBAR: f64 = 1.054_571_817e-34;

/// Above this g/ω the weak-coupling elimination is questionable.
pub const WEAK_COUPLING_LIMIT: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ProbeKind {
    /// Jaynes-Cummings, axial force.
    Jc,
    /// Quantum Rabi, axial force.
    Qr,
    /// Jahn-Teller E⊗e, transverse force.
    Jt,
}

impl ProbeKind {
    pub fn num_modes(self) -> usize {
        match self {
            ProbeKind::Jc | ProbeKind::Qr => 1,
            ProbeKind::Jt => 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ProbeKind::Jc => "jc",
            ProbeKind::Qr => "qr",
            ProbeKind::Jt => "jt",
        }
    }
}

impl std::str::FromStr for ProbeKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "jc" => Ok(ProbeKind::Jc),
            "qr" => Ok(ProbeKind::Qr),
            "jt" => Ok(ProbeKind::Jt),
            other => Err(Error::InvalidParameter(format!(
                "unknown probe kind '{other}'"
            ))),
        }
    }
}

/// Ground-state wavefunction spread, either given or derived from the trap.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Spread {
    Direct(f64),
    /// `z = √(ħ/2mω_trap)`.
    Trap {
        mass: f64,
        trap_frequency: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Force {
    Axial(f64),
    Transverse { x: f64, y: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeParams {
    pub kind: ProbeKind,
    /// Spin-phonon coupling g [rad/s].
    pub g: f64,
    /// Effective phonon frequency ω [rad/s].
    pub omega: f64,
    /// Effective spin frequency Δ [rad/s]; `None` means g²/2ω.
    pub delta: Option<f64>,
    /// Strong-drive Rabi frequency Ω [rad/s], zero when absent.
    pub drive_omega: f64,
    pub spread: Spread,
    pub force: Force,
    pub hbar: f64,
    /// Heating rates ⟨ṅ⟩ per mode [1/s]; empty when not modelled.
    pub heating: Vec<f64>,
}

impl ProbeParams {
    pub fn jc(g: f64, omega: f64, z: f64, force: f64) -> Self {
        Self {
            kind: ProbeKind::Jc,
            g,
            omega,
            delta: None,
            drive_omega: 0.0,
            spread: Spread::Direct(z),
            force: Force::Axial(force),
            hbar: HBAR,
            heating: Vec::new(),
        }
    }

    pub fn qr(g: f64, omega: f64, z: f64, force: f64) -> Self {
        Self {
            kind: ProbeKind::Qr,
            ..Self::jc(g, omega, z, force)
        }
    }

    pub fn jt(g: f64, omega: f64, z: f64, force_x: f64, force_y: f64) -> Self {
        Self {
            kind: ProbeKind::Jt,
            force: Force::Transverse {
                x: force_x,
                y: force_y,
            },
            ..Self::jc(g, omega, z, 0.0)
        }
    }

    pub fn with_drive(mut self, drive_omega: f64) -> Self {
        self.drive_omega = drive_omega;
        self
    }

    pub fn with_delta(mut self, delta: f64) -> Self {
        self.delta = Some(delta);
        self
    }

    pub fn with_heating(mut self, rates: impl Into<Vec<f64>>) -> Self {
        self.heating = rates.into();
        self
    }

    pub fn with_coupling(mut self, g: f64) -> Self {
        self.g = g;
        self
    }

    pub fn with_force(mut self, force: Force) -> Self {
        self.force = force;
        self
    }

    /// Checks the parameter invariants and warns when g/ω exceeds
    /// [`WEAK_COUPLING_LIMIT`].
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!(
                    "{name} must be positive, got {v}"
                )))
            }
        };
        positive("g", self.g)?;
        positive("omega", self.omega)?;
        positive("hbar", self.hbar)?;
        match self.spread {
            Spread::Direct(z) => positive("z", z)?,
            Spread::Trap {
                mass,
                trap_frequency,
            } => {
                positive("mass", mass)?;
                positive("trap frequency", trap_frequency)?;
            }
        }
        if !self.drive_omega.is_finite() {
            return Err(Error::InvalidParameter(
                "drive Rabi frequency is not finite".into(),
            ));
        }
        if let Some(d) = self.delta {
            if !d.is_finite() {
                return Err(Error::InvalidParameter("delta is not finite".into()));
            }
        }
        match (self.kind, self.force) {
            (ProbeKind::Jt, Force::Transverse { x, y }) if x.is_finite() && y.is_finite() => {}
            (ProbeKind::Jc | ProbeKind::Qr, Force::Axial(f)) if f.is_finite() => {}
            _ => {
                return Err(Error::InvalidParameter(format!(
                    "{} probe needs {} force",
                    self.kind.name(),
                    if self.kind == ProbeKind::Jt {
                        "a finite transverse"
                    } else {
                        "a finite axial"
                    }
                )))
            }
        }
        if let Some(r) = self
            .heating
            .iter()
            .find(|r| !(**r >= 0.0) || !r.is_finite())
        {
            return Err(Error::InvalidParameter(format!(
                "heating rate {r} is negative"
            )));
        }
        if self.coupling_ratio() > WEAK_COUPLING_LIMIT {
            log::warn!(
                "g/ω = {:.3} exceeds the weak-coupling limit {WEAK_COUPLING_LIMIT}",
                self.coupling_ratio()
            );
        }
        Ok(())
    }

    /// Weak-coupling diagnostic g/ω.
    pub fn coupling_ratio(&self) -> f64 {
        self.g / self.omega
    }

    pub fn spread(&self) -> f64 {
        match self.spread {
            Spread::Direct(z) => z,
            Spread::Trap {
                mass,
                trap_frequency,
            } => (self.hbar / (2.0 * mass * trap_frequency)).sqrt(),
        }
    }

    /// Δ, defaulting to g²/2ω.
    pub fn delta(&self) -> f64 {
        self.delta.unwrap_or(self.g * self.g / (2.0 * self.omega))
    }

    /// Shifted spin frequency Δ̃ = Δ − g²/2ω.
    pub fn shifted_delta(&self) -> f64 {
        self.delta() - self.g * self.g / (2.0 * self.omega)
    }

    /// g²/ω, the strength of the residual spin-phonon coupling [rad/s].
    pub fn residual_rate(&self) -> f64 {
        self.g * self.g / self.omega
    }

    pub fn axial_force(&self) -> Result<f64> {
        match self.force {
            Force::Axial(f) => Ok(f),
            Force::Transverse { .. } => Err(Error::IncompatibleModel(
                "an axial force is required".into(),
            )),
        }
    }

    pub fn transverse_force(&self) -> Result<(f64, f64)> {
        match self.force {
            Force::Transverse { x, y } => Ok((x, y)),
            Force::Axial(_) => Err(Error::IncompatibleModel(
                "a transverse force is required".into(),
            )),
        }
    }

    /// Heating rate of `mode`, zero if not given.
    pub fn heating_rate(&self, mode: usize) -> f64 {
        self.heating.get(mode).copied().unwrap_or(0.0)
    }
}

/// Ω_F = g z F / 2ħω.
pub fn rabi_frequency_axial(params: &ProbeParams) -> Result<f64> {
    let f = params.axial_force()?;
    Ok(params.g * params.spread() * f / (2.0 * params.hbar * params.omega))
}

/// Inverse of [`rabi_frequency_axial`].
pub fn axial_force_from_rabi(params: &ProbeParams, omega_f: f64) -> f64 {
    2.0 * params.hbar * params.omega * omega_f / (params.g * params.spread())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransverseForce {
    pub omega_x: f64,
    pub omega_y: f64,
    /// Ω̃ = (g z/ħω)|F⊥|.
    pub omega_rms: f64,
    /// atan2(F_y, F_x); `None` when both components vanish.
    pub xi: Option<f64>,
}

pub fn transverse_force_parameters(params: &ProbeParams) -> Result<TransverseForce> {
    let (fx, fy) = params.transverse_force()?;
    let k = params.g * params.spread() / (params.hbar * params.omega);
    let xi = if fx == 0.0 && fy == 0.0 {
        None
    } else {
        Some(fy.atan2(fx))
    };
    Ok(TransverseForce {
        omega_x: k * fx,
        omega_y: k * fy,
        omega_rms: k * fx.hypot(fy),
        xi,
    })
}

/// |F⊥| from Ω̃, inverse of the rms Rabi frequency map.
pub fn transverse_force_from_rabi(params: &ProbeParams, omega_rms: f64) -> f64 {
    params.hbar * params.omega * omega_rms / (params.g * params.spread())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum HamiltonianKind {
    Jc,
    Qr,
    Jt,
    JcTotal,
    QrTotal,
    JtTotal,
    /// ħΩσ_x.
    Drive,
    ForceAxial,
    Force2d,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EffectiveKind {
    JcEff,
    QrEff,
    JtEff,
}

/// Optional parts of the effective Hamiltonians.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct EffectiveTerms {
    /// Residual spin-phonon coupling of order g²/ω.
    pub residual: bool,
    /// Free-oscillator term and scalar energy offsets, making the operator the
    /// complete second-order canonical-transformation result.
    pub constants: bool,
}

impl EffectiveTerms {
    pub const SPIN_ONLY: Self = Self {
        residual: false,
        constants: false,
    };
    pub const WITH_RESIDUAL: Self = Self {
        residual: true,
        constants: false,
    };
    pub const FULL: Self = Self {
        residual: true,
        constants: true,
    };
}

fn require(params: &ProbeParams, space: &HilbertSpace, kind: ProbeKind) -> Result<()> {
    if params.kind != kind {
        return Err(Error::IncompatibleModel(format!(
            "{} Hamiltonian requested with {} parameters",
            kind.name(),
            params.kind.name()
        )));
    }
    if space.num_modes() != kind.num_modes() {
        return Err(Error::IncompatibleModel(format!(
            "{} model needs {} mode(s), space has {}",
            kind.name(),
            kind.num_modes(),
            space.num_modes()
        )));
    }
    Ok(())
}

/// ħω Σ n̂_k over all modes.
pub fn free_oscillator(params: &ProbeParams, space: &HilbertSpace) -> Result<Operator> {
    let mut h = Operator::zeros(space);
    for k in 0..space.num_modes() {
        h += &Operator::number(space, k)?;
    }
    Ok(h.scale(params.hbar * params.omega))
}

fn jc_coupling(params: &ProbeParams, space: &HilbertSpace) -> Result<Operator> {
    let a = Operator::lowering(space, 0)?;
    let sp = Operator::spin(space, SpinOp::Plus);
    let sm = Operator::spin(space, SpinOp::Minus);
    let c = &(&sm * &a.adjoint()) + &(&sp * &a);
    Ok(c.scale(params.hbar * params.g))
}

fn qr_coupling(params: &ProbeParams, space: &HilbertSpace) -> Result<Operator> {
    let q = Operator::quadrature(space, 0)?;
    Ok((&Operator::spin(space, SpinOp::X) * &q).scale(params.hbar * params.g))
}

fn jt_coupling(params: &ProbeParams, space: &HilbertSpace) -> Result<Operator> {
    let qx = Operator::quadrature(space, 0)?;
    let qy = Operator::quadrature(space, 1)?;
    let c = &(&Operator::spin(space, SpinOp::X) * &qx) + &(&Operator::spin(space, SpinOp::Y) * &qy);
    Ok(c.scale(params.hbar * params.g))
}

/// Spin-phonon coupling part of each lab model (no free or force terms).
pub fn coupling_term(params: &ProbeParams, space: &HilbertSpace) -> Result<Operator> {
    require(params, space, params.kind)?;
    match params.kind {
        ProbeKind::Jc => jc_coupling(params, space),
        ProbeKind::Qr => qr_coupling(params, space),
        ProbeKind::Jt => jt_coupling(params, space),
    }
}

/// Force term `(z/2) Σ F_k (â_k† + â_k)`.
pub fn force_term(params: &ProbeParams, space: &HilbertSpace) -> Result<Operator> {
    let z = params.spread();
    match params.force {
        Force::Axial(f) => {
            if space.num_modes() != 1 {
                return Err(Error::IncompatibleModel(
                    "axial force needs a one-mode space".into(),
                ));
            }
            Ok(Operator::quadrature(space, 0)?.scale(z * f / 2.0))
        }
        Force::Transverse { x, y } => {
            if space.num_modes() != 2 {
                return Err(Error::IncompatibleModel(
                    "transverse force needs a two-mode space".into(),
                ));
            }
            let fx = Operator::quadrature(space, 0)?.scale(z * x / 2.0);
            let fy = Operator::quadrature(space, 1)?.scale(z * y / 2.0);
            Ok(&fx + &fy)
        }
    }
}

pub fn build_lab_hamiltonian(
    kind: HamiltonianKind,
    params: &ProbeParams,
    space: &HilbertSpace,
) -> Result<Operator> {
    params.validate()?;
    use HamiltonianKind as K;
    let h = match kind {
        K::Jc | K::JcTotal => {
            require(params, space, ProbeKind::Jc)?;
            let mut h = free_oscillator(params, space)?;
            h += &Operator::spin(space, SpinOp::Z).scale(params.hbar * params.delta());
            h += &jc_coupling(params, space)?;
            if kind == K::JcTotal {
                h += &force_term(params, space)?;
            }
            h
        }
        K::Qr | K::QrTotal => {
            require(params, space, ProbeKind::Qr)?;
            let mut h = free_oscillator(params, space)?;
            h += &qr_coupling(params, space)?;
            if kind == K::QrTotal {
                h += &force_term(params, space)?;
            }
            h
        }
        K::Jt | K::JtTotal => {
            require(params, space, ProbeKind::Jt)?;
            let mut h = free_oscillator(params, space)?;
            h += &jt_coupling(params, space)?;
            if kind == K::JtTotal {
                h += &force_term(params, space)?;
            }
            h
        }
        K::Drive => Operator::spin(space, SpinOp::X).scale(params.hbar * params.drive_omega),
        K::ForceAxial => {
            params.axial_force()?;
            force_term(params, space)?
        }
        K::Force2d => {
            params.transverse_force()?;
            force_term(params, space)?
        }
    };
    Ok(h)
}

/// The lab Hamiltonian including the force term for the probe kind.
pub fn total_hamiltonian(params: &ProbeParams, space: &HilbertSpace) -> Result<Operator> {
    let kind = match params.kind {
        ProbeKind::Jc => HamiltonianKind::JcTotal,
        ProbeKind::Qr => HamiltonianKind::QrTotal,
        ProbeKind::Jt => HamiltonianKind::JtTotal,
    };
    build_lab_hamiltonian(kind, params, space)
}

/// Residual JC coupling `(ħg²/ω) σ_z n̂` (enters the effective Hamiltonian
/// with a minus sign).
pub fn jc_residual(params: &ProbeParams, space: &HilbertSpace) -> Result<Operator> {
    let n = Operator::number(space, 0)?;
    Ok((&Operator::spin(space, SpinOp::Z) * &n).scale(params.hbar * params.residual_rate()))
}

/// Residual JT coupling `2i(ħg²/ω) σ_z (â_x†â_y − â_x â_y†)`.
pub fn jt_residual(params: &ProbeParams, space: &HilbertSpace) -> Result<Operator> {
    if space.num_modes() != 2 {
        return Err(Error::IncompatibleModel(
            "JT residual needs a two-mode space".into(),
        ));
    }
    let ax = Operator::lowering(space, 0)?;
    let ay = Operator::lowering(space, 1)?;
    let hop = &(&ax.adjoint() * &ay) - &(&ax * &ay.adjoint());
    let c = I * Complex64::from(2.0 * params.hbar * params.residual_rate());
    Ok((&Operator::spin(space, SpinOp::Z) * &hop).scale(c))
}

pub fn build_effective_hamiltonian(
    kind: EffectiveKind,
    params: &ProbeParams,
    space: &HilbertSpace,
    terms: EffectiveTerms,
) -> Result<Operator> {
    params.validate()?;
    let hbar = params.hbar;
    let z = params.spread();
    let sx = Operator::spin(space, SpinOp::X);
    let (mut h, offset) = match kind {
        EffectiveKind::JcEff => {
            require(params, space, ProbeKind::Jc)?;
            let omega_f = rabi_frequency_axial(params)?;
            let f = params.axial_force()?;
            let mut h = &Operator::spin(space, SpinOp::Z).scale(hbar * params.shifted_delta())
                - &sx.scale(hbar * omega_f);
            if terms.residual {
                h = &h - &jc_residual(params, space)?;
            }
            let offset = -hbar * params.residual_rate() / 2.0
                - (z * f).powi(2) / (4.0 * hbar * params.omega);
            (h, offset)
        }
        EffectiveKind::QrEff => {
            require(params, space, ProbeKind::Qr)?;
            let omega_f = rabi_frequency_axial(params)?;
            let f = params.axial_force()?;
            let h = sx.scale(-2.0 * hbar * omega_f);
            let offset =
                -hbar * params.residual_rate() - (z * f).powi(2) / (4.0 * hbar * params.omega);
            (h, offset)
        }
        EffectiveKind::JtEff => {
            require(params, space, ProbeKind::Jt)?;
            let t = transverse_force_parameters(params)?;
            let (fx, fy) = params.transverse_force()?;
            let mut h = &sx.scale(-hbar * t.omega_x)
                - &Operator::spin(space, SpinOp::Y).scale(hbar * t.omega_y);
            if terms.residual {
                h += &jt_residual(params, space)?;
            }
            let offset = -2.0 * hbar * params.residual_rate()
                - z * z * (fx * fx + fy * fy) / (4.0 * hbar * params.omega);
            (h, offset)
        }
    };
    if terms.constants {
        h += &free_oscillator(params, space)?;
        h += &Operator::identity(space).scale(offset);
    }
    Ok(h)
}

/// Reference parameter sets used by the figure runners and tests.
pub mod presets {
    use super::*;

    /// JC probe: g = 4e3, ω = 1.7e5, Δ = g²/2ω, z = 14.5 nm, F = 20 yN,
    /// drive Ω = 1e4 rad/s.
    pub fn axial_jc() -> ProbeParams {
        ProbeParams::jc(4e3, 1.7e5, 14.5e-9, 20e-24).with_drive(1e4)
    }

    /// QR probe with the same coupling, trap and force as [`axial_jc`].
    pub fn axial_qr() -> ProbeParams {
        ProbeParams::qr(4e3, 1.7e5, 14.5e-9, 20e-24)
    }

    /// JT probe: g = 4e3, ω = 1.7e5, z_t = 12 nm, F = (20, 15) yN.
    pub fn transverse_jt() -> ProbeParams {
        ProbeParams::jt(4e3, 1.7e5, 12e-9, 20e-24, 15e-24)
    }

    /// JC sensitivity setting: ω = 1.8e5, g = 4e3, z = 14.5 nm.
    pub fn axial_jc_sensitivity(heating: f64) -> ProbeParams {
        ProbeParams::jc(4e3, 1.8e5, 14.5e-9, 20e-24)
            .with_drive(7e3)
            .with_heating(vec![heating])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{max_abs, Spin, ZERO};

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn rabi_frequency_values() {
        let p = presets::axial_jc();
        // g z F / (2 ħ ω) with ħ = 1.054571817e-34
        let expected = 4e3 * 14.5e-9 * 20e-24 / (2.0 * 1.054_571_817e-34 * 1.7e5);
        let of = rabi_frequency_axial(&p).unwrap();
        assert!(rel(of, expected) < 1e-14);
        assert!((of - 32.35).abs() < 0.01, "{of}");
        let doubled = p.clone().with_force(Force::Axial(40e-24));
        assert!(rel(rabi_frequency_axial(&doubled).unwrap(), 2.0 * of) < 1e-14);
        let zero = p.clone().with_force(Force::Axial(0.0));
        assert_eq!(rabi_frequency_axial(&zero).unwrap(), 0.0);
        assert!(rel(axial_force_from_rabi(&p, of), 20e-24) < 1e-14);
    }

    #[test]
    fn transverse_parameters() {
        let p = presets::transverse_jt();
        let t = transverse_force_parameters(&p).unwrap();
        assert!((t.xi.unwrap() - 0.75f64.atan()).abs() < 1e-15);
        assert!((t.xi.unwrap() - 0.6435).abs() < 1e-4);
        assert!((t.omega_rms - 66.9).abs() < 0.05, "{}", t.omega_rms);
        assert!(rel(t.omega_rms, t.omega_x.hypot(t.omega_y)) < 1e-14);
        assert!(rel(transverse_force_from_rabi(&p, t.omega_rms), 25e-24) < 1e-12);

        let only_x = p
            .clone()
            .with_force(Force::Transverse { x: 20e-24, y: 0.0 });
        let t = transverse_force_parameters(&only_x).unwrap();
        assert_eq!(t.xi, Some(0.0));
        assert_eq!(t.omega_rms, t.omega_x);

        let diag = p
            .clone()
            .with_force(Force::Transverse { x: 3e-24, y: 3e-24 });
        assert!(
            (transverse_force_parameters(&diag).unwrap().xi.unwrap() - std::f64::consts::FRAC_PI_4)
                .abs()
                < 1e-15
        );

        let none = p.with_force(Force::Transverse { x: 0.0, y: 0.0 });
        let t = transverse_force_parameters(&none).unwrap();
        assert_eq!(t.xi, None);
        assert_eq!(t.omega_rms, 0.0);
    }

    #[test]
    fn spread_from_trap() {
        let mut p = presets::axial_jc();
        let m = 40.0 * 1.660_539_066_60e-27;
        let wz = 2.0 * std::f64::consts::PI * 1e6;
        p.spread = Spread::Trap {
            mass: m,
            trap_frequency: wz,
        };
        assert!(rel(p.spread(), (HBAR / (2.0 * m * wz)).sqrt()) < 1e-15);
        assert!(p.validate().is_ok());
    }

    #[test]
    fn validation_errors() {
        assert!(ProbeParams::jc(0.0, 1.0, 1e-9, 0.0).validate().is_err());
        assert!(ProbeParams::jc(1.0, -1.0, 1e-9, 0.0).validate().is_err());
        let mut p = presets::axial_jc();
        p.force = Force::Transverse { x: 1.0, y: 1.0 };
        assert!(p.validate().is_err());
        assert!(presets::axial_jc()
            .with_heating(vec![-1.0])
            .validate()
            .is_err());
        assert!(presets::transverse_jt().validate().is_ok());
    }

    #[test]
    fn jc_without_coupling_is_number_operator() {
        let s = HilbertSpace::single_mode(5).unwrap();
        let p = ProbeParams::jc(1e-9, 1.7e5, 1e-9, 0.0).with_delta(0.0);
        let mut p0 = p.clone();
        p0.g = 1e-300; // effectively zero while keeping g > 0 valid
        let h = build_lab_hamiltonian(HamiltonianKind::Jc, &p0, &s).unwrap();
        let n = Operator::number(&s, 0).unwrap().scale(HBAR * 1.7e5);
        assert!(max_abs(&(h.matrix() - n.matrix())) <= 1e-12 * n.max_abs());
    }

    #[test]
    fn jc_total_matrix_element() {
        let s = HilbertSpace::single_mode(30).unwrap();
        let p = presets::axial_jc();
        let h = build_lab_hamiltonian(HamiltonianKind::JcTotal, &p, &s).unwrap();
        assert!(h.is_hermitian(1e-12));
        let up0 = s.index(Spin::Up, &[0]).unwrap();
        let down1 = s.index(Spin::Down, &[1]).unwrap();
        let el = h.matrix()[(up0, down1)];
        assert!(rel(el.re, HBAR * 4e3) < 1e-14 && el.im == 0.0);
    }

    #[test]
    fn jt_y_coupling_is_imaginary() {
        let s = HilbertSpace::two_mode(4, 4).unwrap();
        let p = presets::transverse_jt();
        let qy = Operator::quadrature(&s, 1).unwrap();
        let block = (&Operator::spin(&s, SpinOp::Y) * &qy).scale(p.hbar * p.g);
        assert!(block.max_abs() > 0.0);
        assert!(block.matrix().iter().all(|z| z.re == 0.0));
        let h = build_lab_hamiltonian(HamiltonianKind::Jt, &p, &s).unwrap();
        assert!(h.is_hermitian(1e-12));
    }

    #[test]
    fn kind_and_space_mismatch() {
        let one = HilbertSpace::single_mode(4).unwrap();
        let two = HilbertSpace::two_mode(4, 4).unwrap();
        let jt = presets::transverse_jt();
        assert!(matches!(
            build_lab_hamiltonian(HamiltonianKind::Jt, &jt, &one),
            Err(Error::IncompatibleModel(_))
        ));
        let jc = presets::axial_jc();
        assert!(build_lab_hamiltonian(HamiltonianKind::Jc, &jc, &two).is_err());
        assert!(build_lab_hamiltonian(HamiltonianKind::Qr, &jc, &one).is_err());
        assert!(build_lab_hamiltonian(HamiltonianKind::Force2d, &jc, &two).is_err());
        assert!(build_effective_hamiltonian(
            EffectiveKind::JtEff,
            &jc,
            &one,
            EffectiveTerms::SPIN_ONLY
        )
        .is_err());
    }

    #[test]
    fn all_builders_hermitian() {
        let one = HilbertSpace::single_mode(8).unwrap();
        let two = HilbertSpace::two_mode(5, 5).unwrap();
        let jc = presets::axial_jc();
        let qr = presets::axial_qr();
        let jt = presets::transverse_jt();
        use HamiltonianKind as K;
        for (k, p, s) in [
            (K::Jc, &jc, &one),
            (K::JcTotal, &jc, &one),
            (K::Drive, &jc, &one),
            (K::ForceAxial, &jc, &one),
            (K::Qr, &qr, &one),
            (K::QrTotal, &qr, &one),
            (K::Jt, &jt, &two),
            (K::JtTotal, &jt, &two),
            (K::Force2d, &jt, &two),
        ] {
            assert!(
                build_lab_hamiltonian(k, p, s).unwrap().is_hermitian(1e-12),
                "{k:?}"
            );
        }
        for terms in [
            EffectiveTerms::SPIN_ONLY,
            EffectiveTerms::WITH_RESIDUAL,
            EffectiveTerms::FULL,
        ] {
            for (k, p, s) in [
                (EffectiveKind::JcEff, &jc, &one),
                (EffectiveKind::QrEff, &qr, &one),
                (EffectiveKind::JtEff, &jt, &two),
            ] {
                assert!(build_effective_hamiltonian(k, p, s, terms)
                    .unwrap()
                    .is_hermitian(1e-12));
            }
        }
    }

    #[test]
    fn jc_effective_with_cancelled_shift() {
        let s = HilbertSpace::single_mode(6).unwrap();
        let p = presets::axial_jc();
        let h =
            build_effective_hamiltonian(EffectiveKind::JcEff, &p, &s, EffectiveTerms::SPIN_ONLY)
                .unwrap();
        let of = rabi_frequency_axial(&p).unwrap();
        let expected = Operator::spin(&s, SpinOp::X).scale(-HBAR * of);
        assert!(max_abs(&(h.matrix() - expected.matrix())) == 0.0);
    }

    #[test]
    fn qr_effective_spectrum() {
        let s = HilbertSpace::single_mode(3).unwrap();
        let p = presets::axial_qr();
        let h =
            build_effective_hamiltonian(EffectiveKind::QrEff, &p, &s, EffectiveTerms::SPIN_ONLY)
                .unwrap();
        let of = rabi_frequency_axial(&p).unwrap();
        let ev = crate::hilbert::hermitian_eigenvalues(h.matrix());
        for (i, e) in ev.iter().enumerate() {
            let expected = if i < 3 {
                -2.0 * HBAR * of
            } else {
                2.0 * HBAR * of
            };
            assert!(rel(*e, expected) < 1e-12);
        }
    }

    #[test]
    fn jt_residual_hermiticity() {
        let s = HilbertSpace::two_mode(4, 4).unwrap();
        let p = presets::transverse_jt();
        let ax = Operator::lowering(&s, 0).unwrap();
        let ay = Operator::lowering(&s, 1).unwrap();
        let hop = &(&ax.adjoint() * &ay) - &(&ax * &ay.adjoint());
        let inner = &Operator::spin(&s, SpinOp::Z) * &hop;
        // anti-Hermitian before the factor i
        assert!(max_abs(&(inner.matrix() + inner.matrix().adjoint())) < 1e-14);
        assert!(inner.max_abs() > 0.0);
        assert!(jt_residual(&p, &s).unwrap().is_hermitian(1e-12));
    }

    #[test]
    fn jt_effective_spin_spectrum() {
        let s = HilbertSpace::two_mode(3, 3).unwrap();
        let p = presets::transverse_jt();
        let h =
            build_effective_hamiltonian(EffectiveKind::JtEff, &p, &s, EffectiveTerms::SPIN_ONLY)
                .unwrap();
        let t = transverse_force_parameters(&p).unwrap();
        let ev = crate::hilbert::hermitian_eigenvalues(h.matrix());
        assert!(rel(ev[0], -HBAR * t.omega_rms) < 1e-12);
        assert!(rel(*ev.last().unwrap(), HBAR * t.omega_rms) < 1e-12);
    }

    #[test]
    fn jc_conserves_excitations_without_force() {
        let s = HilbertSpace::single_mode(12).unwrap();
        let p = presets::axial_jc().with_force(Force::Axial(0.0));
        let h = build_lab_hamiltonian(HamiltonianKind::JcTotal, &p, &s).unwrap();
        let n = Operator::number(&s, 0).unwrap();
        let exc = &n + &Operator::spin(&s, SpinOp::Z).scale(0.5);
        let c = h.commutator(&exc);
        let safe = s.safe_indices(1);
        assert!(max_abs(&c.restrict(&safe)) <= 1e-12 * h.max_abs());
    }

    #[test]
    fn full_jc_effective_differs_by_oscillator_and_constant() {
        let s = HilbertSpace::single_mode(10).unwrap();
        let p = presets::axial_jc().with_delta(300.0);
        let full = build_effective_hamiltonian(EffectiveKind::JcEff, &p, &s, EffectiveTerms::FULL)
            .unwrap();
        let main = build_effective_hamiltonian(
            EffectiveKind::JcEff,
            &p,
            &s,
            EffectiveTerms::WITH_RESIDUAL,
        )
        .unwrap();
        let diff = &(&full - &main) - &free_oscillator(&p, &s).unwrap();
        let c = diff.matrix()[(0, 0)];
        let identity_part = Operator::identity(&s).scale(c);
        assert!(max_abs(&(diff.matrix() - identity_part.matrix())) <= 1e-12 * full.max_abs());
        assert_ne!(c, ZERO);
    }
}
