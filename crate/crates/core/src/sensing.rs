// SPDX-License-Identifier: Apache-2.0

//! Force sensitivity and force estimation from spin-population signals.

use std::f64::consts::{E, PI};

use nalgebra::Vector2;
use num_complex::Complex64;

use crate::dynamics::SignalTrace;
use crate::error::{Error, Result};
use crate::fit::{fit, nyquist, spectral_peaks, FitResult, Sample};
use crate::hilbert::{spin_superposition, HilbertSpace, MotionalState, QuantumState};
use crate::models::{
    axial_force_from_rabi, rabi_frequency_axial, transverse_force_from_rabi, Force, ProbeKind,
    ProbeParams,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Regime {
    ShotNoise,
    HeatingLimited,
    /// Projection-noise propagation through a simulated signal.
    Signal,
}

/// A force sensitivity `F_min√T` in N/√Hz.
#[derive(Debug, Clone, PartialEq)]
pub struct SensitivityReport {
    pub probe_kind: ProbeKind,
    pub regime: Regime,
    pub value: f64,
    /// Interrogation time: the input t, the heating-limited optimum 1/(2γ),
    /// or the best sampled time.
    pub time: f64,
    /// Heating rates used (empty in the shot-noise regime).
    pub heating: Vec<f64>,
}

/// `ħω/(g z)` with the probe-kind factor: 1 for JC, ½ for QR and JT.
fn force_scale(params: &ProbeParams) -> f64 {
    let base = params.hbar * params.omega / (params.g * params.spread());
    match params.kind {
        ProbeKind::Jc => base,
        ProbeKind::Qr | ProbeKind::Jt => base / 2.0,
    }
}

/// `ħω/(g z √t)` (JC), halved for QR and JT.
pub fn shot_noise_sensitivity(params: &ProbeParams, t: f64) -> Result<SensitivityReport> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::InvalidParameter(format!("interrogation time {t}")));
    }
    Ok(SensitivityReport {
        probe_kind: params.kind,
        regime: Regime::ShotNoise,
        value: force_scale(params) / t.sqrt(),
        time: t,
        heating: Vec::new(),
    })
}

/// Total decoherence rate γ, taken equal to the summed heating rates of the
/// probe's modes.
pub fn decoherence_rate(params: &ProbeParams) -> f64 {
    (0..params.kind.num_modes())
        .map(|k| params.heating_rate(k))
        .sum()
}

/// `(ħω/g z)√(2γe)` (JC), halved for QR and JT, at the optimum t = 1/(2γ).
pub fn heating_limited_sensitivity(params: &ProbeParams) -> Result<SensitivityReport> {
    let rates: Vec<f64> = (0..params.kind.num_modes())
        .map(|k| params.heating_rate(k))
        .collect();
    if rates.iter().any(|r| !(*r >= 0.0) || !r.is_finite()) {
        return Err(Error::InvalidParameter(format!("heating rates {rates:?}")));
    }
    let gamma = decoherence_rate(params);
    if gamma <= 0.0 {
        return Err(Error::InvalidParameter(
            "zero heating rate: the shot-noise limit applies".into(),
        ));
    }
    Ok(SensitivityReport {
        probe_kind: params.kind,
        regime: Regime::HeatingLimited,
        value: force_scale(params) * (2.0 * gamma * E).sqrt(),
        time: 1.0 / (2.0 * gamma),
        heating: rates,
    })
}

fn scale_force(params: &ProbeParams, factor: f64) -> ProbeParams {
    let force = match params.force {
        Force::Axial(f) => Force::Axial(f * factor),
        Force::Transverse { x, y } => Force::Transverse {
            x: x * factor,
            y: y * factor,
        },
    };
    params.clone().with_force(force)
}

fn force_magnitude(params: &ProbeParams) -> f64 {
    match params.force {
        Force::Axial(f) => f.abs(),
        Force::Transverse { x, y } => x.hypot(y),
    }
}

/// Relative force step of the central difference.
const FORCE_STEP: f64 = 1e-3;
/// Smallest usable `|∂P/∂ln F|`.
const DERIVATIVE_FLOOR: f64 = 1e-7;

/// Per-sample force resolution `ΔP √τ / |∂P/∂F|` with projection noise
/// `ΔP = √(P(1−P))` and repetition time `τ = t + dead_time`.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalSensitivity {
    pub report: SensitivityReport,
    /// `(t, F_min√T)` for every sample with a usable derivative.
    pub curve: Vec<(f64, f64)>,
}

/// Propagates projection noise through `trace`. `simulate` must reproduce
/// the signal for modified parameters at the same sample times; it is called
/// with the force scaled by `1 ± 10⁻³` for a central difference.
pub fn sensitivity_from_signal<S>(
    trace: &SignalTrace,
    params: &ProbeParams,
    dead_time: f64,
    simulate: S,
) -> Result<SignalSensitivity>
where
    S: Fn(&ProbeParams) -> Result<SignalTrace>,
{
    if trace.is_empty() {
        return Err(Error::InvalidParameter("empty signal trace".into()));
    }
    if !(dead_time >= 0.0) {
        return Err(Error::InvalidParameter(format!("dead time {dead_time}")));
    }
    let f = force_magnitude(params);
    if !(f > 0.0) {
        return Err(Error::InvalidParameter("force must be nonzero".into()));
    }
    let plus = simulate(&scale_force(params, 1.0 + FORCE_STEP))?;
    let minus = simulate(&scale_force(params, 1.0 - FORCE_STEP))?;
    if plus.len() != trace.len() || minus.len() != trace.len() {
        return Err(Error::InvalidParameter(
            "re-simulated trace has a different length".into(),
        ));
    }
    let mut curve = Vec::new();
    for i in 0..trace.len() {
        let t = trace.times[i];
        let dlog = (plus.p_up[i] - minus.p_up[i]) / (2.0 * FORCE_STEP);
        if t <= 0.0 || dlog.abs() < DERIVATIVE_FLOOR {
            continue;
        }
        let p = trace.p_up[i].clamp(0.0, 1.0);
        let noise = (p * (1.0 - p)).sqrt();
        curve.push((t, noise * (t + dead_time).sqrt() * f / dlog.abs()));
    }
    let (time, value) = curve
        .iter()
        .copied()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .ok_or(Error::DerivativeFloor)?;
    Ok(SignalSensitivity {
        report: SensitivityReport {
            probe_kind: params.kind,
            regime: Regime::Signal,
            value,
            time,
            heating: params.heating.clone(),
        },
        curve,
    })
}

/// A fitted force with diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct ForceEstimate {
    /// |F| in newtons.
    pub magnitude: f64,
    /// Direction atan2(F_y, F_x) in (−π, π] (transverse only).
    pub xi: Option<f64>,
    /// Fitted Rabi frequency: Ω_F for axial probes, Ω̃ for JT.
    pub rabi: f64,
    /// Fitted decay rate (axial only).
    pub gamma: Option<f64>,
    pub residual_rms: f64,
    /// One-sigma uncertainties of the two fitted parameters.
    pub sigma: [f64; 2],
    /// Fitted frequency lies close to the Nyquist limit of the sampling.
    pub aliasing_suspected: bool,
    /// ξ came from the null-phase method and is only known modulo π.
    pub xi_mod_pi: bool,
}

fn damped_model(s: &Sample, p: &Vector2<f64>) -> (f64, [f64; 2]) {
    let (w, gamma) = (p[0], p[1]);
    let env = (-gamma * s.t).exp();
    let (sn, cs) = (2.0 * w * s.t).sin_cos();
    (
        0.5 * (1.0 + env * cs),
        [-env * sn * s.t, -0.5 * s.t * env * cs],
    )
}

fn ramsey_model(s: &Sample, p: &Vector2<f64>) -> (f64, [f64; 2]) {
    let (w, xi) = (p[0], p[1]);
    let (a_sn, a_cs) = (xi - s.phi).sin_cos();
    let (sn, cs) = (2.0 * w * s.t).sin_cos();
    (0.5 * (1.0 + a_sn * sn), [a_sn * cs * s.t, 0.5 * a_cs * sn])
}

/// Keeps the lowest-rms fit; fits within a relative 1e-6 rms of each other
/// resolve toward the lower frequency.
fn best_fit(fits: impl IntoIterator<Item = FitResult>) -> Option<FitResult> {
    fits.into_iter()
        .filter(|f| f.converged && f.params[0] > 0.0)
        .fold(None, |best: Option<FitResult>, f| match best {
            None => Some(f),
            Some(b) => {
                let tol = 1e-6 * b.rms.max(f.rms) + 1e-14;
                if f.rms < b.rms - tol
                    || ((f.rms - b.rms).abs() <= tol && f.params[0] < b.params[0])
                {
                    Some(f)
                } else {
                    Some(b)
                }
            }
        })
}

fn signal_spread(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt()
}

/// Frequency seeds for a signal oscillating at `2w`: periodogram peaks plus
/// a few sub-period guesses for short traces.
fn frequency_seeds(times: &[f64], values: &[f64]) -> Vec<f64> {
    let span = times[times.len() - 1] - times[0];
    let mut seeds: Vec<f64> = spectral_peaks(times, values, 4)
        .into_iter()
        .map(|w| w / 2.0)
        .collect();
    for frac in [0.25, 0.5, 1.0] {
        seeds.push(PI * frac / span.max(f64::MIN_POSITIVE));
    }
    seeds
}

/// Least-squares fit of `½[1 + e^{−γt}cos(2Ωt)]`; parameters are (Ω, γ).
pub fn fit_rabi_signal(trace: &SignalTrace) -> Result<FitResult> {
    trace.validate()?;
    if trace.len() < 4 {
        return Err(Error::Estimation("need at least four samples".into()));
    }
    if signal_spread(&trace.p_up) < 1e-6 {
        return Err(Error::Estimation("signal shows no oscillation".into()));
    }
    let samples: Vec<Sample> = trace
        .times
        .iter()
        .zip(&trace.p_up)
        .map(|(&t, &y)| Sample { t, phi: 0.0, y })
        .collect();
    let seeds = frequency_seeds(&trace.times, &trace.p_up);
    best_fit(seeds.iter().flat_map(|&w| {
        [0.0, 1.0 / trace.times[trace.len() - 1].max(1e-300)]
            .map(|g| fit(&samples, damped_model, Vector2::new(w, g)))
    }))
    .ok_or_else(|| Error::Estimation("no fit converged".into()))
}

/// Fits `½[1 + e^{−γt}cos(2Ωt)]` and converts Ω to a force. QR signals
/// oscillate at twice the JC frequency, so Ω = 2Ω_F there.
pub fn estimate_axial_force(trace: &SignalTrace, params: &ProbeParams) -> Result<ForceEstimate> {
    if params.kind == ProbeKind::Jt {
        return Err(Error::IncompatibleModel(
            "axial estimate needs a JC or QR probe".into(),
        ));
    }
    let best = fit_rabi_signal(trace)?;
    let w = best.params[0];
    let omega_f = match params.kind {
        ProbeKind::Qr => w / 2.0,
        _ => w,
    };
    let aliasing_suspected = 2.0 * w > 0.8 * nyquist(&trace.times);
    if aliasing_suspected {
        log::warn!("fitted frequency {w:.4e} rad/s is close to the sampling Nyquist limit");
    }
    Ok(ForceEstimate {
        magnitude: axial_force_from_rabi(params, omega_f).abs(),
        xi: None,
        rabi: omega_f,
        gamma: Some(best.params[1]),
        residual_rms: best.rms,
        sigma: best.sigma,
        aliasing_suspected,
        xi_mod_pi: false,
    })
}

/// A Ramsey signal taken with preparation phase φ.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseTrace {
    pub phi: f64,
    pub trace: SignalTrace,
}

/// `(|↑⟩ + e^{iφ}|↓⟩)/√2 ⊗ vacuum`.
pub fn ramsey_initial_state(space: &HilbertSpace, phi: f64) -> Result<QuantumState> {
    let c = Complex64::from(std::f64::consts::FRAC_1_SQRT_2);
    spin_superposition(
        space,
        c,
        c * Complex64::from_polar(1.0, phi),
        &MotionalState::vacuum(space),
    )
}

/// Wraps an angle into (−π, π].
pub fn wrap_angle(x: f64) -> f64 {
    let y = x.rem_euclid(2.0 * PI);
    if y > PI {
        y - 2.0 * PI
    } else {
        y
    }
}

/// First φ at which `values − ½` changes sign, by linear interpolation.
/// The result identifies ξ only modulo π.
pub fn null_phase(phis: &[f64], values: &[f64]) -> Option<f64> {
    let a: Vec<f64> = values.iter().map(|v| v - 0.5).collect();
    for i in 0..a.len().saturating_sub(1) {
        if a[i] == 0.0 {
            return Some(phis[i]);
        }
        if a[i] * a[i + 1] < 0.0 {
            let frac = a[i] / (a[i] - a[i + 1]);
            return Some(phis[i] + frac * (phis[i + 1] - phis[i]));
        }
    }
    None
}

/// Joint fit of `½[1 + sin(ξ−φ) sin(2Ω̃t)]` over all traces.
pub fn estimate_transverse_force(
    traces: &[PhaseTrace],
    params: &ProbeParams,
) -> Result<ForceEstimate> {
    if params.kind != ProbeKind::Jt {
        return Err(Error::IncompatibleModel(
            "transverse estimate needs the JT probe".into(),
        ));
    }
    let mut phis: Vec<f64> = traces.iter().map(|t| t.phi).collect();
    phis.sort_by(f64::total_cmp);
    phis.dedup();
    let dense = traces.iter().any(|t| t.trace.len() >= 8);
    if phis.len() < 3 && !dense {
        return Err(Error::Estimation(
            "need three distinct phases or a dense time scan".into(),
        ));
    }
    let mut samples = Vec::new();
    for pt in traces {
        pt.trace.validate()?;
        samples.extend(
            pt.trace
                .times
                .iter()
                .zip(&pt.trace.p_up)
                .map(|(&t, &y)| Sample { t, phi: pt.phi, y }),
        );
    }
    if signal_spread(&samples.iter().map(|s| s.y).collect::<Vec<_>>()) < 1e-6 {
        return Err(Error::Estimation(
            "every trace is flat: all phases at the null".into(),
        ));
    }
    let lead = traces
        .iter()
        .filter(|t| t.trace.len() >= 4)
        .max_by(|a, b| signal_spread(&a.trace.p_up).total_cmp(&signal_spread(&b.trace.p_up)))
        .ok_or_else(|| Error::Estimation("no trace with a time scan".into()))?;
    let w_seeds = frequency_seeds(&lead.trace.times, &lead.trace.p_up);
    let best = best_fit(
        w_seeds
            .iter()
            .flat_map(|&w| (0..8).map(move |k| (w, -PI + (k as f64 + 0.5) * PI / 4.0)))
            .map(|(w, xi)| fit(&samples, ramsey_model, Vector2::new(w, xi))),
    )
    .ok_or_else(|| Error::Estimation("no fit converged".into()))?;
    let w = best.params[0];
    let all_times: Vec<f64> = {
        let mut t: Vec<f64> = samples.iter().map(|s| s.t).collect();
        t.sort_by(f64::total_cmp);
        t.dedup();
        t
    };
    let aliasing_suspected = all_times.len() > 1 && 2.0 * w > 0.8 * nyquist(&all_times);
    Ok(ForceEstimate {
        magnitude: transverse_force_from_rabi(params, w).abs(),
        xi: Some(wrap_angle(best.params[1])),
        rabi: w,
        gamma: None,
        residual_rms: best.rms,
        sigma: best.sigma,
        aliasing_suspected,
        xi_mod_pi: phis.len() < 2,
    })
}

/// Convenience inverse of the axial Rabi map for any axial probe.
pub fn axial_rabi(params: &ProbeParams) -> Result<f64> {
    let of = rabi_frequency_axial(params)?;
    Ok(match params.kind {
        ProbeKind::Qr => 2.0 * of,
        _ => of,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{analytic_damped_signal, time_grid};
    use crate::models::{presets, transverse_force_parameters, HBAR};

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn reference_sensitivities() {
        let jc = presets::axial_jc_sensitivity(10.0);
        let h = heating_limited_sensitivity(&jc).unwrap();
        // ħω/(gz) √(2ṅe) evaluated independently
        let oracle = HBAR * 1.8e5 / (4e3 * 14.5e-9) * (2.0 * 10.0 * E).sqrt();
        assert!(rel(h.value, oracle) < 1e-12);
        assert!(rel(h.value, 2.413e-24) < 1e-3);
        assert!((h.time - 0.05).abs() < 1e-15);
        let h1 = heating_limited_sensitivity(&presets::axial_jc_sensitivity(1.0)).unwrap();
        assert!(rel(h1.value, 7.631e-25) < 1e-3);
        assert!((h1.time - 0.5).abs() < 1e-15);
        let s = shot_noise_sensitivity(&jc, 0.02).unwrap();
        assert!(rel(s.value, 2.3142e-24) < 1e-3);
        let s4 = shot_noise_sensitivity(&jc, 0.08).unwrap();
        assert!(rel(s4.value, s.value / 2.0) < 1e-12);
    }

    #[test]
    fn transverse_sensitivities() {
        let jt = ProbeParams::jt(4e3, 1.7e5, 12e-9, 20e-24, 15e-24).with_heating(vec![1.0, 1.0]);
        let h = heating_limited_sensitivity(&jt).unwrap();
        assert!(rel(h.value, 6.158e-25) < 1e-3);
        let s = shot_noise_sensitivity(&jt, 0.02).unwrap();
        assert!(rel(s.value, 1.3205e-24) < 1e-3);
    }

    #[test]
    fn qr_is_half_of_jc() {
        let jc = ProbeParams::jc(4e3, 1.8e5, 14.5e-9, 20e-24).with_heating(vec![3.0]);
        let qr = ProbeParams::qr(4e3, 1.8e5, 14.5e-9, 20e-24).with_heating(vec![3.0]);
        let a = heating_limited_sensitivity(&jc).unwrap().value;
        let b = heating_limited_sensitivity(&qr).unwrap().value;
        assert!(rel(b, a / 2.0) < 1e-12);
    }

    #[test]
    fn heating_limit_is_shot_noise_at_optimum() {
        for &rate in &[0.3, 1.0, 10.0, 55.0] {
            let p = presets::axial_jc_sensitivity(rate);
            let h = heating_limited_sensitivity(&p).unwrap();
            let s = shot_noise_sensitivity(&p, 1.0 / (2.0 * rate)).unwrap();
            assert!(rel(h.value, s.value * E.sqrt()) < 1e-12);
        }
    }

    #[test]
    fn sensitivity_errors() {
        let p = presets::axial_jc_sensitivity(0.0);
        assert!(heating_limited_sensitivity(&p).is_err());
        assert!(shot_noise_sensitivity(&p, 0.0).is_err());
        assert!(shot_noise_sensitivity(&p, -1.0).is_err());
    }

    fn analytic(gamma: f64) -> impl Fn(&ProbeParams) -> Result<SignalTrace> {
        move |p: &ProbeParams| {
            let times = time_grid(0.0, 0.6, 6001).unwrap();
            analytic_damped_signal(rabi_frequency_axial(p)?, gamma, &times)
        }
    }

    #[test]
    fn signal_sensitivity_matches_closed_forms() {
        let p = presets::axial_jc_sensitivity(10.0);
        let ideal = analytic(0.0)(&p).unwrap();
        let r = sensitivity_from_signal(&ideal, &p, 0.0, analytic(0.0)).unwrap();
        let shot = shot_noise_sensitivity(&p, r.report.time).unwrap().value;
        assert!(rel(r.report.value, shot) < 0.02);

        let damped = analytic(10.0)(&p).unwrap();
        let r = sensitivity_from_signal(&damped, &p, 0.0, analytic(10.0)).unwrap();
        let heat = heating_limited_sensitivity(&p).unwrap().value;
        assert!(
            rel(r.report.value, heat) < 0.1,
            "{} vs {heat}",
            r.report.value
        );
        assert!(r.report.value >= heat * (1.0 - 1e-3));
    }

    #[test]
    fn flat_signal_hits_derivative_floor() {
        let p = presets::axial_jc_sensitivity(1.0).with_force(Force::Axial(1e-40));
        let flat = |_: &ProbeParams| SignalTrace::new(vec![0.1, 0.2], vec![1.0, 1.0]);
        let tr = flat(&p).unwrap();
        assert_eq!(
            sensitivity_from_signal(&tr, &p, 0.0, flat).unwrap_err(),
            Error::DerivativeFloor
        );
    }

    #[test]
    fn axial_round_trip() {
        let p = presets::axial_jc();
        let of = rabi_frequency_axial(&p).unwrap();
        let times = time_grid(0.0, 0.2, 401).unwrap();
        let tr = analytic_damped_signal(of, 0.0, &times).unwrap();
        let est = estimate_axial_force(&tr, &p).unwrap();
        assert!(rel(est.magnitude, 20e-24) < 1e-3, "{est:?}");
        assert!(!est.aliasing_suspected);

        let damped = analytic_damped_signal(of, 4.0, &times).unwrap();
        let est = estimate_axial_force(&damped, &p).unwrap();
        assert!(rel(est.magnitude, 20e-24) < 1e-3);
        assert!((est.gamma.unwrap() - 4.0).abs() < 1e-3);

        // half a Rabi period only
        let short = time_grid(0.0, PI / (2.0 * of), 60).unwrap();
        let tr = analytic_damped_signal(of, 0.0, &short).unwrap();
        assert!(rel(estimate_axial_force(&tr, &p).unwrap().magnitude, 20e-24) < 1e-3);
    }

    #[test]
    fn qr_estimate_halves_frequency() {
        let p = presets::axial_qr();
        let of = rabi_frequency_axial(&p).unwrap();
        let times = time_grid(0.0, 0.1, 301).unwrap();
        let tr = analytic_damped_signal(2.0 * of, 0.0, &times).unwrap();
        let est = estimate_axial_force(&tr, &p).unwrap();
        assert!(rel(est.magnitude, 20e-24) < 1e-3);
    }

    #[test]
    fn flat_trace_is_rejected() {
        let p = presets::axial_jc();
        let tr = SignalTrace::new(vec![0.0, 1.0, 2.0, 3.0, 4.0], vec![0.5; 5]).unwrap();
        assert!(matches!(
            estimate_axial_force(&tr, &p),
            Err(Error::Estimation(_))
        ));
    }

    fn synthetic(p: &ProbeParams, phis: &[f64], times: &[f64]) -> Vec<PhaseTrace> {
        let tf = transverse_force_parameters(p).unwrap();
        let xi = tf.xi.unwrap();
        phis.iter()
            .map(|&phi| PhaseTrace {
                phi,
                trace: SignalTrace::new(
                    times.to_vec(),
                    times
                        .iter()
                        .map(|&t| 0.5 * (1.0 + (xi - phi).sin() * (2.0 * tf.omega_rms * t).sin()))
                        .collect(),
                )
                .unwrap(),
            })
            .collect()
    }

    #[test]
    fn transverse_round_trip() {
        let p = presets::transverse_jt();
        let times = time_grid(0.0, 0.06, 121).unwrap();
        let traces = synthetic(&p, &[0.0, 1.0, 2.0, 2.7], &times);
        let est = estimate_transverse_force(&traces, &p).unwrap();
        assert!(rel(est.magnitude, 25e-24) < 5e-3, "{est:?}");
        assert!(rel(est.xi.unwrap(), (15f64).atan2(20.0)) < 5e-3);
    }

    #[test]
    fn null_phase_and_degenerate_scan() {
        let p = presets::transverse_jt();
        let xi = (15f64).atan2(20.0);
        let times = time_grid(0.0, 0.05, 50).unwrap();
        let flat = synthetic(&p, &[xi], &times);
        assert!(flat[0].trace.p_up.iter().all(|v| (v - 0.5).abs() < 1e-15));
        assert!(estimate_transverse_force(&flat, &p).is_err());

        let phis: Vec<f64> = (0..90).map(|k| k as f64 * PI / 90.0).collect();
        let t = 0.01;
        let tf = transverse_force_parameters(&p).unwrap();
        let vals: Vec<f64> = phis
            .iter()
            .map(|&phi| 0.5 * (1.0 + (xi - phi).sin() * (2.0 * tf.omega_rms * t).sin()))
            .collect();
        let phi0 = null_phase(&phis, &vals).unwrap();
        assert!((phi0 - xi).abs() < 1e-3);
    }

    #[test]
    fn wrap_angle_range() {
        assert!((wrap_angle(3.0 * PI) - PI).abs() < 1e-12);
        assert!((wrap_angle(-PI) - PI).abs() < 1e-12);
        assert!((wrap_angle(0.5) - 0.5).abs() < 1e-15);
    }
}
