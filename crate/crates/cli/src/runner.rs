// SPDX-License-Identifier: Apache-2.0

//! Simulation and sweep runners.

use rayon::prelude::*;

use ionprobe::decoupling::{cpmg_sequence, drive_protocol_signal, DriveProtocol};
use ionprobe::dynamics::{evolve, evolve_lindblad, HeatingChannel, PulseSequence, SignalTrace};
use ionprobe::hilbert::{HilbertSpace, Operator};
use ionprobe::models::{
    build_effective_hamiltonian, total_hamiltonian, EffectiveKind, EffectiveTerms, ProbeKind,
    ProbeParams,
};
use ionprobe::sensing::{
    estimate_axial_force, fit_rabi_signal, heating_limited_sensitivity, sensitivity_from_signal,
    shot_noise_sensitivity,
};
use ionprobe::swtransform::sw_residual;

use crate::config::{ExperimentConfig, HamiltonianChoice, ProtocolKind};
use crate::CliError;

fn hamiltonian(
    cfg: &ExperimentConfig,
    params: &ProbeParams,
    space: &HilbertSpace,
) -> Result<Operator, CliError> {
    Ok(match cfg.probe.hamiltonian {
        HamiltonianChoice::Lab => total_hamiltonian(params, space)?,
        HamiltonianChoice::Effective => {
            let kind = match params.kind {
                ProbeKind::Jc => EffectiveKind::JcEff,
                ProbeKind::Qr => EffectiveKind::QrEff,
                ProbeKind::Jt => EffectiveKind::JtEff,
            };
            build_effective_hamiltonian(kind, params, space, EffectiveTerms::WITH_RESIDUAL)?
        }
    })
}

/// Runs the configured protocol with `params` in place of the `[probe]`
/// section, so callers can perturb parameters.
pub fn simulate_with(
    cfg: &ExperimentConfig,
    params: &ProbeParams,
) -> Result<SignalTrace, CliError> {
    let space = cfg.space()?;
    let initial = cfg.initial_state(&space)?;
    let times = cfg.times()?;
    let h = hamiltonian(cfg, params, &space)?;
    let trace = match cfg.protocol.kind {
        ProtocolKind::Plain => drive_protocol_signal(
            &h,
            0.0,
            params.hbar,
            &initial,
            &times,
            DriveProtocol::Undriven,
        )?,
        ProtocolKind::DrivenDd => drive_protocol_signal(
            &h,
            params.drive_omega,
            params.hbar,
            &initial,
            &times,
            DriveProtocol::Driven,
        )?,
        ProtocolKind::Cpmg => {
            let order = cfg.protocol.order;
            let tau = cfg.time.stop / (1u64 << order) as f64;
            let base = PulseSequence::constant(&h, tau, params.hbar)?;
            let seq = cpmg_sequence(&base, order, 0)?;
            evolve(&seq, &initial, &times)?.trace
        }
        ProtocolKind::Lindblad => {
            if cfg.probe.hamiltonian == HamiltonianChoice::Lab {
                log::warn!(
                    "Lindblad evolution of the lab Hamiltonian needs steps far below 1/omega; \
                     consider probe.hamiltonian = \"effective\""
                );
            }
            let channels = (0..space.num_modes())
                .map(|k| {
                    let rate = cfg.protocol.gamma.unwrap_or_else(|| params.heating_rate(k));
                    HeatingChannel::new(k, rate)
                })
                .collect::<Result<Vec<_>, _>>()?;
            evolve_lindblad(&h, &channels, &initial, &times, params.hbar)?.trace
        }
    };
    Ok(trace)
}

pub fn simulate(cfg: &ExperimentConfig) -> Result<SignalTrace, CliError> {
    cfg.validate()?;
    simulate_with(cfg, &cfg.params()?)
}

/// Summary quantities a sweep can report.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    /// Ω_F (JC, QR) or Ω̃ (JT) fitted to the simulated signal.
    OmegaF,
    /// Fitted decay rate of the simulated signal.
    Gamma,
    /// Axial force recovered from the simulated signal.
    ForceEstimate,
    /// max P_↑ − min P_↑ over the time grid.
    Contrast,
    /// Closed-form sensitivity: heating-limited when heating rates are set,
    /// otherwise shot-noise at `time.stop`.
    Sensitivity,
    /// Best projection-noise sensitivity along the simulated signal.
    SignalSensitivity,
    /// Schrieffer-Wolff residual norm in joules at the configured cutoff.
    SwResidual,
    /// Largest top-level population over all modes and samples.
    MaxTail,
}

impl Metric {
    pub const ALL: [(&'static str, Metric); 8] = [
        ("omega_f", Metric::OmegaF),
        ("gamma", Metric::Gamma),
        ("force_estimate", Metric::ForceEstimate),
        ("contrast", Metric::Contrast),
        ("sensitivity", Metric::Sensitivity),
        ("signal_sensitivity", Metric::SignalSensitivity),
        ("sw_residual", Metric::SwResidual),
        ("max_tail", Metric::MaxTail),
    ];

    pub fn parse(name: &str) -> Result<Self, CliError> {
        Self::ALL
            .iter()
            .find(|(n, _)| *n == name)
            .map(|(_, m)| *m)
            .ok_or_else(|| {
                let names: Vec<&str> = Self::ALL.iter().map(|(n, _)| *n).collect();
                CliError::Config(format!(
                    "unknown metric '{name}'; expected one of {}",
                    names.join(", ")
                ))
            })
    }

    fn needs_signal(self) -> bool {
        !matches!(self, Metric::Sensitivity | Metric::SwResidual)
    }
}

fn evaluate(cfg: &ExperimentConfig, metrics: &[Metric]) -> Result<Vec<f64>, CliError> {
    let params = cfg.params()?;
    let trace = if metrics.iter().any(|m| m.needs_signal()) {
        Some(simulate_with(cfg, &params)?)
    } else {
        None
    };
    let fitted = || -> Result<(f64, f64), CliError> {
        let fit = fit_rabi_signal(trace.as_ref().expect("signal"))?;
        let w = fit.params[0];
        let w = if params.kind == ProbeKind::Qr {
            w / 2.0
        } else {
            w
        };
        Ok((w, fit.params[1]))
    };
    metrics
        .iter()
        .map(|m| {
            let value = match m {
                Metric::OmegaF => fitted().map(|f| f.0),
                Metric::Gamma => fitted().map(|f| f.1),
                Metric::ForceEstimate => {
                    estimate_axial_force(trace.as_ref().expect("signal"), &params)
                        .map(|e| e.magnitude)
                        .map_err(CliError::from)
                }
                Metric::Contrast => {
                    let y = &trace.as_ref().expect("signal").p_up;
                    let max = y.iter().cloned().fold(f64::MIN, f64::max);
                    let min = y.iter().cloned().fold(f64::MAX, f64::min);
                    Ok(max - min)
                }
                Metric::Sensitivity => if params.heating.iter().any(|r| *r > 0.0) {
                    heating_limited_sensitivity(&params).map(|r| r.value)
                } else {
                    shot_noise_sensitivity(&params, cfg.time.stop).map(|r| r.value)
                }
                .map_err(CliError::from),
                Metric::SignalSensitivity => {
                    sensitivity_from_signal(trace.as_ref().expect("signal"), &params, 0.0, |q| {
                        simulate_with(cfg, q).map_err(|e| e.into_library())
                    })
                    .map(|s| s.report.value)
                    .map_err(CliError::from)
                }
                Metric::SwResidual => {
                    let cutoff = cfg.space()?.cutoffs()[0];
                    sw_residual(&params, cutoff, false)
                        .map(|r| r.residual_norm)
                        .map_err(CliError::from)
                }
                Metric::MaxTail => Ok(trace
                    .as_ref()
                    .expect("signal")
                    .max_tails()
                    .into_iter()
                    .fold(0.0, f64::max)),
            };
            // a failed metric at one point becomes NaN rather than aborting
            // the whole sweep; configuration errors still abort
            match value {
                Ok(v) => Ok(v),
                Err(CliError::Numerical(msg)) => {
                    log::warn!("metric {m:?} failed: {msg}");
                    Ok(f64::NAN)
                }
                Err(e) => Err(e),
            }
        })
        .collect()
}

/// Result table of a sweep: one row per Cartesian-product point, the first
/// parameter varying slowest.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

pub fn sweep(cfg: &ExperimentConfig) -> Result<SweepTable, CliError> {
    let section = cfg
        .sweep
        .as_ref()
        .ok_or_else(|| CliError::Config("config has no [sweep] section".into()))?;
    if section.parameters.is_empty() {
        return Err(CliError::Config(
            "sweep needs at least one [[sweep.parameter]]".into(),
        ));
    }
    if section.metrics.is_empty() {
        return Err(CliError::Config("sweep needs at least one metric".into()));
    }
    let metrics = section
        .metrics
        .iter()
        .map(|m| Metric::parse(m))
        .collect::<Result<Vec<_>, _>>()?;
    let axes = section
        .parameters
        .iter()
        .map(|p| p.values())
        .collect::<Result<Vec<_>, _>>()?;

    let mut points: Vec<Vec<f64>> = vec![Vec::new()];
    for axis in &axes {
        points = points
            .into_iter()
            .flat_map(|prefix| {
                axis.iter().map(move |&v| {
                    let mut p = prefix.clone();
                    p.push(v);
                    p
                })
            })
            .collect();
    }
    let configs = points
        .iter()
        .map(|point| {
            let mut c = cfg.clone();
            for (param, &v) in section.parameters.iter().zip(point) {
                c.set(&param.name, v)?;
            }
            c.validate()?;
            Ok(c)
        })
        .collect::<Result<Vec<_>, CliError>>()?;

    let results = configs
        .par_iter()
        .map(|c| evaluate(c, &metrics))
        .collect::<Result<Vec<_>, _>>()?;

    let mut columns: Vec<String> = section.parameters.iter().map(|p| p.name.clone()).collect();
    columns.extend(section.metrics.iter().cloned());
    let rows = points
        .into_iter()
        .zip(results)
        .map(|(mut p, r)| {
            p.extend(r);
            p
        })
        .collect();
    Ok(SweepTable { columns, rows })
}
