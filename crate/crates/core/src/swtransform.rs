// SPDX-License-Identifier: Apache-2.0

//! Numerical checks of the canonical transformations that eliminate the
//! motional degree of freedom.
//!
//! Operators are built on a Fock space padded by [`SW_PADDING`] levels per
//! mode and compared on states at least two levels below the requested
//! cutoff, so that truncation of `e^{±Ŝ}` does not leak into the residuals.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fit::log_log_slope;
use crate::hilbert::{expm, max_abs, operator_norm, restrict, HilbertSpace, Operator, SpinOp, I};
use crate::models::{
    build_effective_hamiltonian, coupling_term, force_term, free_oscillator, EffectiveKind,
    EffectiveTerms, Force, ProbeKind, ProbeParams,
};

/// Extra Fock levels per mode used when conjugating.
pub const SW_PADDING: usize = 6;

/// Anti-Hermitian generator Ŝ with `Ĥ_int + [Ĥ₀, Ŝ] = 0`.
pub fn build_generator(params: &ProbeParams, space: &HilbertSpace) -> Result<Operator> {
    let r = params.coupling_ratio();
    let z = params.spread();
    let disp = |mode: usize| Operator::displacement_generator(space, mode);
    check_modes(params, space)?;
    let s = match (params.kind, params.force) {
        (ProbeKind::Jc, Force::Axial(f)) => {
            let a = Operator::lowering(space, 0)?;
            let sp = Operator::spin(space, SpinOp::Plus);
            let sm = Operator::spin(space, SpinOp::Minus);
            let spin_part = (&(&sp * &a) - &(&sm * &a.adjoint())).scale(r);
            &spin_part + &disp(0)?.scale(z * f / (2.0 * params.hbar * params.omega))
        }
        (ProbeKind::Qr, Force::Axial(f)) => {
            let sx = Operator::spin(space, SpinOp::X);
            let d = disp(0)?;
            &(&sx * &d).scale(r) + &d.scale(z * f / (2.0 * params.hbar * params.omega))
        }
        (ProbeKind::Jt, Force::Transverse { x, y }) => {
            let sx = Operator::spin(space, SpinOp::X);
            let sy = Operator::spin(space, SpinOp::Y);
            let (dx, dy) = (disp(0)?, disp(1)?);
            let k = z / (2.0 * params.hbar * params.omega);
            let mut s = (&(&sx * &dx) + &(&sy * &dy)).scale(r);
            s += &dx.scale(k * x);
            s += &dy.scale(k * y);
            s
        }
        _ => {
            return Err(Error::IncompatibleModel(
                "force direction does not match the probe kind".into(),
            ))
        }
    };
    Ok(s)
}

fn check_modes(params: &ProbeParams, space: &HilbertSpace) -> Result<()> {
    if space.num_modes() != params.kind.num_modes() {
        return Err(Error::IncompatibleModel(format!(
            "{} model needs {} mode(s), space has {}",
            params.kind.name(),
            params.kind.num_modes(),
            space.num_modes()
        )));
    }
    Ok(())
}

/// `(Ĥ₀, Ĥ_int)`: free oscillators, and coupling plus force.
pub fn split_hamiltonian(
    params: &ProbeParams,
    space: &HilbertSpace,
) -> Result<(Operator, Operator)> {
    check_modes(params, space)?;
    let h0 = free_oscillator(params, space)?;
    let hint = &coupling_term(params, space)? + &force_term(params, space)?;
    Ok((h0, hint))
}

/// The lab Hamiltonian the transformation acts on: `Ĥ₀ + Ĥ_int`, plus
/// `ħΔσ_z` for JC.
fn lab_hamiltonian(params: &ProbeParams, space: &HilbertSpace) -> Result<Operator> {
    let (h0, hint) = split_hamiltonian(params, space)?;
    let mut h = &h0 + &hint;
    if params.kind == ProbeKind::Jc {
        h += &Operator::spin(space, SpinOp::Z).scale(params.hbar * params.delta());
    }
    Ok(h)
}

/// `‖A‖` restricted to states at least two levels below every cutoff.
fn safe_norm(op: &Operator) -> f64 {
    let idx = op.space().safe_indices(2);
    operator_norm(&op.restrict(&idx))
}

/// `‖Ĥ_int + [Ĥ₀, Ŝ]‖ / ‖Ĥ_int‖` on the safe subspace.
pub fn first_order_defect(params: &ProbeParams, space: &HilbertSpace) -> Result<f64> {
    let (h0, hint) = split_hamiltonian(params, space)?;
    let s = build_generator(params, space)?;
    let defect = &hint + &h0.commutator(&s);
    Ok(safe_norm(&defect) / safe_norm(&hint))
}

/// `e^{−Ŝ} Ĥ e^{Ŝ}`. Ŝ must be anti-Hermitian, so `e^{−Ŝ} = (e^{Ŝ})†`.
pub fn conjugate(hamiltonian: &Operator, generator: &Operator) -> Result<Operator> {
    if hamiltonian.space() != generator.space() {
        return Err(Error::SpaceMismatch);
    }
    let anti = generator.matrix() + generator.matrix().adjoint();
    if max_abs(&anti) > 1e-12 * generator.max_abs().max(f64::MIN_POSITIVE) {
        return Err(Error::InvalidParameter(
            "generator is not anti-Hermitian".into(),
        ));
    }
    let plus = expm(generator.matrix())?;
    let minus = plus.adjoint();
    Operator::from_matrix(hamiltonian.space(), minus * hamiltonian.matrix() * plus)
}

fn effective_kind(kind: ProbeKind) -> EffectiveKind {
    match kind {
        ProbeKind::Jc => EffectiveKind::JcEff,
        ProbeKind::Qr => EffectiveKind::QrEff,
        ProbeKind::Jt => EffectiveKind::JtEff,
    }
}

/// The third-order term `⅓[[Ĥ_int, Ŝ], Ŝ]` in closed form (zero for QR).
///
/// Both g³ parts carry the coefficient `−4ħg³/3ω²`; for JT this is a third
/// of the value sometimes quoted, which is the full `[[Ĥ_int, Ŝ], Ŝ]`.
pub fn third_order_term(params: &ProbeParams, space: &HilbertSpace) -> Result<Operator> {
    check_modes(params, space)?;
    let (g, w, hbar, z) = (params.g, params.omega, params.hbar, params.spread());
    let c3 = -4.0 * hbar * g.powi(3) / (w * w);
    match (params.kind, params.force) {
        (ProbeKind::Jc, Force::Axial(f)) => {
            let a = Operator::lowering(space, 0)?;
            let ad = a.adjoint();
            let sp = Operator::spin(space, SpinOp::Plus);
            let sm = Operator::spin(space, SpinOp::Minus);
            let sz = Operator::spin(space, SpinOp::Z);
            let force =
                (&sz * &Operator::quadrature(space, 0)?).scale(2.0 * g * g * z * f / (3.0 * w * w));
            let hop = &(&sm * &ad) + &(&sp * &a);
            let nonlinear = &(&sm * &(&(&ad * &ad) * &a)) + &(&sp * &(&(&ad * &a) * &a));
            Ok(&(&force + &hop.scale(c3 / 3.0)) + &nonlinear.scale(c3 / 3.0))
        }
        (ProbeKind::Qr, _) => Ok(Operator::zeros(space)),
        (ProbeKind::Jt, Force::Transverse { x, y }) => {
            let ax = Operator::lowering(space, 0)?;
            let ay = Operator::lowering(space, 1)?;
            let (axd, ayd) = (ax.adjoint(), ay.adjoint());
            let sx = Operator::spin(space, SpinOp::X);
            let sy = Operator::spin(space, SpinOp::Y);
            let sz = Operator::spin(space, SpinOp::Z);
            let id = Operator::identity(space);
            let nx = Operator::number(space, 0)?;
            let ny = Operator::number(space, 1)?;
            let k = 2.0 * g * g * z / (w * w);
            let fy_part = (&sz * &(&ayd - &ay)).scale(I * Complex64::from(k * x));
            let fx_part = (&sz * &(&axd - &ax)).scale(I * Complex64::from(-k * y));
            let qy = &ayd + &ay;
            let qx = &axd + &ax;
            let brace_y = &(&(&qy * &(&id + &nx.scale(2.0))) - &(&(&axd * &axd) * &ay).scale(2.0))
                - &(&(&ax * &ax) * &ayd).scale(2.0);
            let brace_x = &(&(&qx * &(&id + &ny.scale(2.0))) - &(&(&ayd * &ayd) * &ax).scale(2.0))
                - &(&(&ay * &ay) * &axd).scale(2.0);
            let mut h = &fy_part + &fx_part;
            h += &(&sy * &brace_y).scale(c3 / 3.0);
            h += &(&sx * &brace_x).scale(c3 / 3.0);
            Ok(h)
        }
        _ => Err(Error::IncompatibleModel(
            "force direction does not match the probe kind".into(),
        )),
    }
}

/// The complete effective Hamiltonian, optionally with the third-order term.
pub fn effective_full(
    params: &ProbeParams,
    space: &HilbertSpace,
    third_order: bool,
) -> Result<Operator> {
    let mut h = build_effective_hamiltonian(
        effective_kind(params.kind),
        params,
        space,
        EffectiveTerms::FULL,
    )?;
    if third_order {
        h += &third_order_term(params, space)?;
    }
    Ok(h)
}

/// Residual of the transformation at one coupling strength.
#[derive(Debug, Clone, PartialEq)]
pub struct SwReport {
    pub kind: ProbeKind,
    pub g_value: f64,
    /// `‖e^{−Ŝ}Ĥe^{Ŝ} − Ĥ_eff‖` in joules on the compared subspace.
    pub residual_norm: f64,
    /// `residual_norm / ‖Ĥ_int‖` on the same subspace.
    pub relative: f64,
    /// Expected power of g: 3, or 4 with the third-order term included.
    pub predicted_order: u32,
}

/// Conjugates the lab Hamiltonian on a padded space and compares with the
/// full effective form on occupations below `cutoff − 2`.
pub fn sw_residual(params: &ProbeParams, cutoff: usize, third_order: bool) -> Result<SwReport> {
    params.validate()?;
    let padded = HilbertSpace::new(vec![cutoff + SW_PADDING; params.kind.num_modes()])?;
    let h = lab_hamiltonian(params, &padded)?;
    let s = build_generator(params, &padded)?;
    let diff = &conjugate(&h, &s)? - &effective_full(params, &padded, third_order)?;
    let idx = padded.safe_indices(SW_PADDING + 2);
    let (_, hint) = split_hamiltonian(params, &padded)?;
    let residual_norm = operator_norm(&restrict(diff.matrix(), &idx));
    Ok(SwReport {
        kind: params.kind,
        g_value: params.g,
        residual_norm,
        relative: residual_norm / operator_norm(&restrict(hint.matrix(), &idx)),
        predicted_order: if third_order && params.kind != ProbeKind::Qr {
            4
        } else {
            3
        },
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SwScaling {
    pub reports: Vec<SwReport>,
    /// Fitted slope of ln R against ln g.
    pub slope: f64,
    /// Residuals increase strictly with g.
    pub monotonic: bool,
}

/// Residuals over a list of couplings, evaluated in parallel.
pub fn sw_scaling(
    params: &ProbeParams,
    cutoff: usize,
    g_values: &[f64],
    third_order: bool,
) -> Result<SwScaling> {
    if g_values.len() < 2 {
        return Err(Error::InvalidParameter(
            "need at least two coupling values".into(),
        ));
    }
    let reports = g_values
        .par_iter()
        .map(|&g| sw_residual(&params.clone().with_coupling(g), cutoff, third_order))
        .collect::<Result<Vec<_>>>()?;
    let gs: Vec<f64> = reports.iter().map(|r| r.g_value).collect();
    let rs: Vec<f64> = reports.iter().map(|r| r.residual_norm).collect();
    let mut order: Vec<usize> = (0..gs.len()).collect();
    order.sort_by(|&a, &b| gs[a].total_cmp(&gs[b]));
    let monotonic = order.windows(2).all(|w| rs[w[1]] > rs[w[0]]);
    if !monotonic {
        log::warn!("residuals are not monotonic in g: {rs:?}");
    }
    Ok(SwScaling {
        slope: log_log_slope(&gs, &rs),
        reports,
        monotonic,
    })
}

/// `‖[[Ĥ_int, Ŝ], Ŝ]‖ / ‖Ĥ_int‖` on the safe subspace, for any probe.
pub fn double_commutator_norm(params: &ProbeParams, space: &HilbertSpace) -> Result<f64> {
    let (_, hint) = split_hamiltonian(params, space)?;
    let s = build_generator(params, space)?;
    let dc = hint.commutator(&s).commutator(&s);
    Ok(safe_norm(&dc) / safe_norm(&hint))
}

/// [`double_commutator_norm`] restricted to the QR probe, where it vanishes.
pub fn qr_double_commutator_norm(params: &ProbeParams, space: &HilbertSpace) -> Result<f64> {
    if params.kind != ProbeKind::Qr {
        return Err(Error::IncompatibleModel("expected QR parameters".into()));
    }
    double_commutator_norm(params, space)
}
