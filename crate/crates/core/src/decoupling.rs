// SPDX-License-Identifier: Apache-2.0

//! Dynamical decoupling: the sign-flipped continuous drive and the
//! phonon phase-flip recursion.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::dynamics::{PulseElement, PulseSequence, SignalTrace, SpectralPropagator};
use crate::error::{Error, Result};
use crate::hilbert::{
    operator_norm, product_state, restrict, thermal_state, CMatrix, HilbertSpace, Operator,
    QuantumState, Spin, SpinOp,
};
use crate::models::{
    build_effective_hamiltonian, rabi_frequency_axial, total_hamiltonian, EffectiveKind,
    EffectiveTerms, ProbeKind, ProbeParams,
};

/// Compares the residual frequency shift g²/2ω with the drive Ω.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SuppressionCheck {
    pub residual_shift: f64,
    pub drive_omega: f64,
}

impl SuppressionCheck {
    /// `(g²/2ω)/Ω`; infinite without drive.
    pub fn ratio(&self) -> f64 {
        self.residual_shift / self.drive_omega.abs()
    }

    /// Satisfied when the ratio is below `margin` (e.g. 0.1).
    pub fn satisfied(&self, margin: f64) -> bool {
        self.ratio() < margin
    }
}

pub fn suppression_condition(params: &ProbeParams) -> SuppressionCheck {
    SuppressionCheck {
        residual_shift: params.residual_rate() / 2.0,
        drive_omega: params.drive_omega,
    }
}

/// `[Ĥ_T + ħΩσ_x]` for half the time, then `[Ĥ_T − ħΩσ_x]`.
pub fn driven_dd_sequence(
    params: &ProbeParams,
    space: &HilbertSpace,
    total_time: f64,
) -> Result<PulseSequence> {
    if params.drive_omega == 0.0 {
        log::warn!("drive amplitude is zero; the two-segment protocol reduces to plain evolution");
    }
    let (plus, minus) = drive_halves(params, space)?;
    let mut seq = PulseSequence::new(space, params.hbar);
    seq.push_segment(plus, total_time / 2.0)?;
    seq.push_segment(minus, total_time / 2.0)?;
    Ok(seq)
}

fn drive_halves(params: &ProbeParams, space: &HilbertSpace) -> Result<(Operator, Operator)> {
    let h = total_hamiltonian(params, space)?;
    let drive = Operator::spin(space, SpinOp::X).scale(params.hbar * params.drive_omega);
    Ok((&h + &drive, &h - &drive))
}

/// `(ħg²/ω)(e^{2iΩt}|+⟩⟨−| + e^{−2iΩt}|−⟩⟨+|) ⊗ n̂`, which in the σ_z basis is
/// `(ħg²/ω)(cos 2Ωt σ_z + sin 2Ωt σ_y) n̂`.
pub fn residual_in_drive_frame(
    params: &ProbeParams,
    space: &HilbertSpace,
    time: f64,
) -> Result<Operator> {
    if params.kind != ProbeKind::Jc || space.num_modes() != 1 {
        return Err(Error::IncompatibleModel(
            "drive-frame residual is defined for the JC probe".into(),
        ));
    }
    let phase = 2.0 * params.drive_omega * time;
    let spin = &Operator::spin(space, SpinOp::Z).scale(phase.cos())
        + &Operator::spin(space, SpinOp::Y).scale(phase.sin());
    let n = Operator::number(space, 0)?;
    Ok((&spin * &n).scale(params.hbar * params.residual_rate()))
}

/// `R̂_π = exp(iπ n̂_k) = diag((−1)ⁿ)` on mode k.
pub fn phonon_phase_flip(space: &HilbertSpace, mode_index: usize) -> Result<Operator> {
    space.check_mode(mode_index)?;
    let d = space.dim();
    let mut m = CMatrix::zeros(d, d);
    for i in 0..d {
        let (_, occ) = space.label(i);
        m[(i, i)] = Complex64::from(if occ[mode_index] % 2 == 0 { 1.0 } else { -1.0 });
    }
    Operator::from_matrix(space, m)
}

/// `Û_n = R̂_π Û_{n−1} R̂_π Û_{n−1}` with `Û_0` the base sequence.
///
/// In time order each level is `[seq_{n−1}, R̂_π, seq_{n−1}, R̂_π]`, so order n
/// holds 2ⁿ copies of the base and 2ⁿ⁺¹ − 2 kicks.
pub fn cpmg_sequence(
    base: &PulseSequence,
    order: usize,
    flip_mode: usize,
) -> Result<PulseSequence> {
    if order == 0 {
        return Err(Error::InvalidParameter(
            "CPMG order must be at least 1".into(),
        ));
    }
    if base
        .elements()
        .iter()
        .any(|e| matches!(e, PulseElement::Kick { .. }))
    {
        log::debug!("CPMG base sequence already contains kicks");
    }
    let flip = phonon_phase_flip(base.space(), flip_mode)?;
    let mut seq = base.clone();
    for _ in 0..order {
        let prev = seq.clone();
        seq.push_kick(flip.clone())?;
        seq.extend(&prev)?;
        seq.push_kick(flip.clone())?;
    }
    Ok(seq)
}

/// Basis indices whose total phonon number is at most `max_total`.
pub fn low_excitation_indices(space: &HilbertSpace, max_total: usize) -> Vec<usize> {
    (0..space.dim())
        .filter(|&i| space.label(i).1.iter().sum::<usize>() <= max_total)
        .collect()
}

/// Operator-norm distance between the order-n CPMG propagator built on
/// JT_EFF with the residual and the residual-free propagator over the same
/// total time, restricted to total phonon number ≤ `max_total`.
pub fn cpmg_residual_distance(
    params: &ProbeParams,
    space: &HilbertSpace,
    order: usize,
    tau: f64,
    max_total: usize,
) -> Result<f64> {
    let with = build_effective_hamiltonian(
        EffectiveKind::JtEff,
        params,
        space,
        EffectiveTerms::WITH_RESIDUAL,
    )?;
    let without = build_effective_hamiltonian(
        EffectiveKind::JtEff,
        params,
        space,
        EffectiveTerms::SPIN_ONLY,
    )?;
    let base = PulseSequence::constant(&with, tau, params.hbar)?;
    let u = cpmg_sequence(&base, order, 0)?.propagator()?;
    let total = tau * (1u64 << order) as f64;
    let ideal = SpectralPropagator::new(&without, params.hbar)?.unitary(total);
    let idx = low_excitation_indices(space, max_total);
    Ok(operator_norm(&restrict(&(u - ideal), &idx)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DriveProtocol {
    Undriven,
    Driven,
}

impl std::str::FromStr for DriveProtocol {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "undriven" | "plain" => Ok(Self::Undriven),
            "driven" | "driven_dd" => Ok(Self::Driven),
            other => Err(Error::InvalidParameter(format!(
                "unknown drive protocol '{other}'"
            ))),
        }
    }
}

/// `P_↑(t)` under the lab Hamiltonian, either plain or with the sign-flipped
/// drive (each sample runs its own two-half sequence of length t).
pub fn protocol_signal(
    params: &ProbeParams,
    space: &HilbertSpace,
    initial: &QuantumState,
    times: &[f64],
    protocol: DriveProtocol,
) -> Result<SignalTrace> {
    let h = total_hamiltonian(params, space)?;
    drive_protocol_signal(
        &h,
        params.drive_omega,
        params.hbar,
        initial,
        times,
        protocol,
    )
}

/// [`protocol_signal`] for an arbitrary base Hamiltonian `h`; the driven
/// protocol adds `±ħΩσ_x` for the two halves.
pub fn drive_protocol_signal(
    h: &Operator,
    drive_omega: f64,
    hbar: f64,
    initial: &QuantumState,
    times: &[f64],
    protocol: DriveProtocol,
) -> Result<SignalTrace> {
    let space = h.space();
    if initial.space() != space {
        return Err(Error::SpaceMismatch);
    }
    let mut p_up = Vec::with_capacity(times.len());
    let mut tails = Vec::with_capacity(times.len());
    match protocol {
        DriveProtocol::Undriven => {
            let u = SpectralPropagator::new(h, hbar)?;
            for &t in times {
                let s = match initial.amplitudes() {
                    Some(psi) => QuantumState::pure(space, u.apply(t, psi))?,
                    None => initial.transformed(&u.unitary(t)),
                };
                p_up.push(s.spin_up_probability());
                tails.push(s.tail_populations());
            }
        }
        DriveProtocol::Driven => {
            let drive = Operator::spin(space, SpinOp::X).scale(hbar * drive_omega);
            let up = SpectralPropagator::new(&(h + &drive), hbar)?;
            let um = SpectralPropagator::new(&(h - &drive), hbar)?;
            for &t in times {
                let s = match initial.amplitudes() {
                    Some(psi) => {
                        QuantumState::pure(space, um.apply(t / 2.0, &up.apply(t / 2.0, psi)))?
                    }
                    None => initial.transformed(&(um.unitary(t / 2.0) * up.unitary(t / 2.0))),
                };
                p_up.push(s.spin_up_probability());
                tails.push(s.tail_populations());
            }
        }
    }
    let mut trace = SignalTrace::new(times.to_vec(), p_up)?;
    trace.tails = tails;
    Ok(trace
        .with_meta("protocol", format!("{protocol:?}").to_lowercase())
        .with_meta("drive_omega", drive_omega))
}

/// Rabi contrast `S = P_↑(π/Ω_F) − P_↑(π/2Ω_F)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContrastReport {
    pub nbar: f64,
    pub contrast: f64,
}

/// Contrast of the exact JC evolution from `|↑⟩ ⊗ thermal(n̄)`.
pub fn rabi_contrast(
    params: &ProbeParams,
    nbar: f64,
    protocol: DriveProtocol,
    cutoff: usize,
) -> Result<ContrastReport> {
    if params.kind != ProbeKind::Jc {
        return Err(Error::IncompatibleModel(
            "contrast scan uses the JC probe".into(),
        ));
    }
    let omega_f = rabi_frequency_axial(params)?;
    if !(omega_f > 0.0) {
        return Err(Error::InvalidParameter("Ω_F must be positive".into()));
    }
    let space = HilbertSpace::single_mode(cutoff)?;
    let initial = product_state(&space, Spin::Up, &thermal_state(&space, 0, nbar)?)?;
    let t1 = PI / (2.0 * omega_f);
    let t2 = PI / omega_f;
    let trace = protocol_signal(params, &space, &initial, &[t1, t2], protocol)?;
    Ok(ContrastReport {
        nbar,
        contrast: trace.p_up[1] - trace.p_up[0],
    })
}
