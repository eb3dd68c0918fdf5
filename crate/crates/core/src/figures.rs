// SPDX-License-Identifier: Apache-2.0

//! Data series behind the reference figures, with parameters from the
//! figure captions.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::decoupling::{protocol_signal, rabi_contrast, DriveProtocol};
use crate::dynamics::{time_grid, SignalTrace, SpectralPropagator};
use crate::error::{Error, Result};
use crate::hilbert::{
    product_state, thermal_state, CVector, HilbertSpace, QuantumState, Spin, ONE, ZERO,
};
use crate::models::{
    build_effective_hamiltonian, presets, rabi_frequency_axial, total_hamiltonian,
    transverse_force_parameters, EffectiveKind, EffectiveTerms, ProbeParams,
};
use crate::sensing::{
    estimate_transverse_force, null_phase, ramsey_initial_state, sensitivity_from_signal,
    shot_noise_sensitivity, PhaseTrace,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Figure {
    Fig1a,
    Fig1b,
    Fig2,
    Fig3,
    Fig4a,
    Fig4b,
}

impl Figure {
    pub const ALL: [Figure; 6] = [
        Figure::Fig1a,
        Figure::Fig1b,
        Figure::Fig2,
        Figure::Fig3,
        Figure::Fig4a,
        Figure::Fig4b,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Figure::Fig1a => "fig1a",
            Figure::Fig1b => "fig1b",
            Figure::Fig2 => "fig2",
            Figure::Fig3 => "fig3",
            Figure::Fig4a => "fig4a",
            Figure::Fig4b => "fig4b",
        }
    }
}

impl fmt::Display for Figure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Figure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Figure::ALL
            .into_iter()
            .find(|f| f.id() == s.to_ascii_lowercase())
            .ok_or_else(|| Error::InvalidParameter(format!("unknown figure '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub name: String,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl Series {
    fn new(name: &str, x: Vec<f64>, y: Vec<f64>) -> Self {
        Self {
            name: name.to_string(),
            x,
            y,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FigureData {
    pub figure: Figure,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
    pub metadata: BTreeMap<String, String>,
}

impl FigureData {
    pub fn series(&self, name: &str) -> Option<&Series> {
        self.series.iter().find(|s| s.name == name)
    }
}

/// Knobs shared by the figure runners.
#[derive(Debug, Clone, PartialEq)]
pub struct FigureOptions {
    /// Fock cutoff for single-mode figures.
    pub cutoff: usize,
    /// Fock cutoff per mode for the two-mode figures.
    pub cutoff_2d: usize,
    /// Samples per time or phase axis.
    pub points: usize,
    /// Trap frequencies of the sensitivity figure.
    pub fig2_omegas: Vec<f64>,
    /// Mean phonon numbers of the contrast scan.
    pub nbars: Vec<f64>,
}

impl Default for FigureOptions {
    fn default() -> Self {
        Self {
            cutoff: 30,
            cutoff_2d: 12,
            points: 201,
            fig2_omegas: vec![1.7e5, 1.8e5, 1.9e5],
            nbars: (0..=12).map(|k| k as f64 * 0.25).collect(),
        }
    }
}

pub fn reproduce(figure: Figure, opts: &FigureOptions) -> Result<FigureData> {
    match figure {
        Figure::Fig1a => fig1a(opts),
        Figure::Fig1b => fig1b(opts),
        Figure::Fig2 => fig2(opts),
        Figure::Fig3 => fig3(opts),
        Figure::Fig4a => fig4a(opts),
        Figure::Fig4b => fig4b(opts),
    }
}

fn thermal_up(space: &HilbertSpace, nbar: f64) -> Result<QuantumState> {
    product_state(space, Spin::Up, &thermal_state(space, 0, nbar)?)
}

fn max_tail(trace: &SignalTrace) -> f64 {
    trace.max_tails().into_iter().fold(0.0, f64::max)
}

fn fig1a(opts: &FigureOptions) -> Result<FigureData> {
    let p = presets::axial_jc();
    let of = rabi_frequency_axial(&p)?;
    let space = HilbertSpace::single_mode(opts.cutoff)?;
    let rho = thermal_up(&space, 1.2)?;
    let times = time_grid(0.0, 2.0 * PI / of, opts.points)?;
    let driven = protocol_signal(&p, &space, &rho, &times, DriveProtocol::Driven)?;
    let undriven = protocol_signal(&p, &space, &rho, &times, DriveProtocol::Undriven)?;
    let effective: Vec<f64> = times.iter().map(|t| (of * t).cos().powi(2)).collect();
    let mut metadata = BTreeMap::new();
    metadata.insert("omega_f".into(), format!("{of:.6e}"));
    metadata.insert("nbar".into(), "1.2".into());
    metadata.insert("cutoff".into(), opts.cutoff.to_string());
    metadata.insert(
        "max_tail".into(),
        format!("{:.3e}", max_tail(&driven).max(max_tail(&undriven))),
    );
    Ok(FigureData {
        figure: Figure::Fig1a,
        x_label: "t [s]".into(),
        y_label: "P_up".into(),
        series: vec![
            Series::new("exact_driven", times.clone(), driven.p_up),
            Series::new("effective", times.clone(), effective),
            Series::new("exact_undriven", times, undriven.p_up),
        ],
        metadata,
    })
}

fn fig1b(opts: &FigureOptions) -> Result<FigureData> {
    let p = presets::axial_jc();
    let scan = |protocol| -> Result<Vec<f64>> {
        opts.nbars
            .iter()
            .map(|&n| Ok(rabi_contrast(&p, n, protocol, opts.cutoff)?.contrast))
            .collect()
    };
    let mut metadata = BTreeMap::new();
    metadata.insert(
        "omega_f".into(),
        format!("{:.6e}", rabi_frequency_axial(&p)?),
    );
    metadata.insert("cutoff".into(), opts.cutoff.to_string());
    Ok(FigureData {
        figure: Figure::Fig1b,
        x_label: "nbar".into(),
        y_label: "contrast S".into(),
        series: vec![
            Series::new("driven", opts.nbars.clone(), scan(DriveProtocol::Driven)?),
            Series::new(
                "undriven",
                opts.nbars.clone(),
                scan(DriveProtocol::Undriven)?,
            ),
        ],
        metadata,
    })
}

/// Sensitivity figure: closed-form shot-noise curves and projection-noise
/// points from the exact driven JC dynamics (thermal n̄ = 1, Ω = 7e3).
fn fig2(opts: &FigureOptions) -> Result<FigureData> {
    let cutoff = opts.cutoff.min(24);
    let space = HilbertSpace::single_mode(cutoff)?;
    let rho = thermal_up(&space, 1.0)?;
    let curve_t = time_grid(2e-3, 0.1, opts.points)?;
    let exact_t = time_grid(5e-3, 0.1, 20)?;
    let mut series = Vec::new();
    let mut metadata = BTreeMap::new();
    for &omega in &opts.fig2_omegas {
        let p = ProbeParams::jc(4e3, omega, 14.5e-9, 20e-24).with_drive(7e3);
        let analytic = curve_t
            .iter()
            .map(|&t| Ok(shot_noise_sensitivity(&p, t)?.value))
            .collect::<Result<Vec<f64>>>()?;
        series.push(Series::new(
            &format!("analytic_w{omega:.0}"),
            curve_t.clone(),
            analytic,
        ));
        let simulate =
            |q: &ProbeParams| protocol_signal(q, &space, &rho, &exact_t, DriveProtocol::Driven);
        let trace = simulate(&p)?;
        let sens = sensitivity_from_signal(&trace, &p, 0.0, simulate)?;
        let (x, y): (Vec<f64>, Vec<f64>) = sens.curve.into_iter().unzip();
        series.push(Series::new(&format!("exact_w{omega:.0}"), x, y));
        metadata.insert(
            format!("max_tail_w{omega:.0}"),
            format!("{:.3e}", max_tail(&trace)),
        );
    }
    metadata.insert("nbar".into(), "1".into());
    metadata.insert("drive_omega".into(), "7000".into());
    metadata.insert("cutoff".into(), cutoff.to_string());
    Ok(FigureData {
        figure: Figure::Fig2,
        x_label: "t [s]".into(),
        y_label: "F_min sqrt(T) [N/sqrt(Hz)]".into(),
        series,
        metadata,
    })
}

fn fig3(opts: &FigureOptions) -> Result<FigureData> {
    let p = presets::axial_qr();
    let of = rabi_frequency_axial(&p)?;
    let space = HilbertSpace::single_mode(opts.cutoff)?;
    let rho = thermal_up(&space, 1.2)?;
    let times = time_grid(0.0, PI / of, opts.points)?;
    let exact = protocol_signal(&p, &space, &rho, &times, DriveProtocol::Undriven)?;
    let analytic: Vec<f64> = times.iter().map(|t| (2.0 * of * t).cos().powi(2)).collect();
    let mut metadata = BTreeMap::new();
    metadata.insert("omega_f".into(), format!("{of:.6e}"));
    metadata.insert("nbar".into(), "1.2".into());
    metadata.insert("max_tail".into(), format!("{:.3e}", max_tail(&exact)));
    Ok(FigureData {
        figure: Figure::Fig3,
        x_label: "t [s]".into(),
        y_label: "P_up".into(),
        series: vec![
            Series::new("exact", times.clone(), exact.p_up),
            Series::new("analytic", times, analytic),
        ],
        metadata,
    })
}

/// Exact two-mode JT evolution of pure states, one diagonalization shared by
/// every run.
pub struct JtRunner {
    pub params: ProbeParams,
    pub space: HilbertSpace,
    exact: SpectralPropagator,
    effective: SpectralPropagator,
}

impl JtRunner {
    pub fn new(params: &ProbeParams, cutoff: usize) -> Result<Self> {
        let space = HilbertSpace::two_mode(cutoff, cutoff)?;
        let exact = SpectralPropagator::new(&total_hamiltonian(params, &space)?, params.hbar)?;
        let h_eff = build_effective_hamiltonian(
            EffectiveKind::JtEff,
            params,
            &space,
            EffectiveTerms::SPIN_ONLY,
        )?;
        let effective = SpectralPropagator::new(&h_eff, params.hbar)?;
        Ok(Self {
            params: params.clone(),
            space,
            exact,
            effective,
        })
    }

    fn run(
        &self,
        prop: &SpectralPropagator,
        psi: &QuantumState,
        times: &[f64],
    ) -> Result<SignalTrace> {
        let amps = psi
            .amplitudes()
            .ok_or_else(|| Error::InvalidParameter("JT runner needs a pure state".into()))?;
        let mut p_up = Vec::with_capacity(times.len());
        let mut tails = Vec::with_capacity(times.len());
        for &t in times {
            let s = QuantumState::pure(&self.space, prop.apply(t, amps))?;
            p_up.push(s.spin_up_probability().clamp(0.0, 1.0));
            tails.push(s.tail_populations());
        }
        let mut trace = SignalTrace::new(times.to_vec(), p_up)?;
        trace.tails = tails;
        Ok(trace)
    }

    pub fn exact(&self, psi: &QuantumState, times: &[f64]) -> Result<SignalTrace> {
        self.run(&self.exact, psi, times)
    }

    pub fn effective(&self, psi: &QuantumState, times: &[f64]) -> Result<SignalTrace> {
        self.run(&self.effective, psi, times)
    }

    /// Ramsey preparation with phase φ and both modes in vacuum.
    pub fn ramsey_state(&self, phi: f64) -> Result<QuantumState> {
        ramsey_initial_state(&self.space, phi)
    }

    /// `|↑⟩|0,0⟩`.
    pub fn up_state(&self) -> Result<QuantumState> {
        let mut v = CVector::from_element(self.space.dim(), ZERO);
        v[self.space.index(Spin::Up, &[0, 0])?] = ONE;
        QuantumState::pure(&self.space, v)
    }
}

fn fig4a(opts: &FigureOptions) -> Result<FigureData> {
    let p = presets::transverse_jt();
    let tf = transverse_force_parameters(&p)?;
    let runner = JtRunner::new(&p, opts.cutoff_2d)?;
    let times = time_grid(0.0, PI / tf.omega_rms, opts.points)?;
    let up = runner.up_state()?;
    // (|↑⟩ + |↓⟩)/√2 is the Ramsey preparation with φ = 0
    let sup = runner.ramsey_state(0.0)?;
    let ex_up = runner.exact(&up, &times)?;
    let ex_sup = runner.exact(&sup, &times)?;
    let mut metadata = BTreeMap::new();
    metadata.insert("omega_rms".into(), format!("{:.6e}", tf.omega_rms));
    metadata.insert("cutoff_per_mode".into(), opts.cutoff_2d.to_string());
    metadata.insert(
        "max_tail".into(),
        format!("{:.3e}", max_tail(&ex_up).max(max_tail(&ex_sup))),
    );
    Ok(FigureData {
        figure: Figure::Fig4a,
        x_label: "t [s]".into(),
        y_label: "P_up".into(),
        series: vec![
            Series::new("exact_up", times.clone(), ex_up.p_up),
            Series::new(
                "effective_up",
                times.clone(),
                runner.effective(&up, &times)?.p_up,
            ),
            Series::new("exact_superposition", times.clone(), ex_sup.p_up),
            Series::new(
                "effective_superposition",
                times.clone(),
                runner.effective(&sup, &times)?.p_up,
            ),
        ],
        metadata,
    })
}

/// Ramsey signal against φ at the fixed time π/(4Ω̃), where |sin 2Ω̃t| = 1,
/// plus a joint fit of time scans at four phases.
fn fig4b(opts: &FigureOptions) -> Result<FigureData> {
    let p = presets::transverse_jt();
    let tf = transverse_force_parameters(&p)?;
    let xi = tf.xi.unwrap_or(0.0);
    let runner = JtRunner::new(&p, opts.cutoff_2d)?;
    let t_fix = PI / (4.0 * tf.omega_rms);
    let phis: Vec<f64> = (0..opts.points)
        .map(|k| 2.0 * PI * k as f64 / opts.points as f64)
        .collect();
    let exact = phis
        .iter()
        .map(|&phi| Ok(runner.exact(&runner.ramsey_state(phi)?, &[t_fix])?.p_up[0]))
        .collect::<Result<Vec<f64>>>()?;
    let formula: Vec<f64> = phis
        .iter()
        .map(|&phi| 0.5 * (1.0 + (xi - phi).sin() * (2.0 * tf.omega_rms * t_fix).sin()))
        .collect();
    let phi0 = null_phase(&phis, &exact)
        .ok_or_else(|| Error::Estimation("no null phase in the scan".into()))?;

    let scan_t = time_grid(0.0, 0.06, 121)?;
    let traces = [0.0, PI / 4.0, PI / 2.0, 3.0 * PI / 4.0]
        .iter()
        .map(|&phi| {
            Ok(PhaseTrace {
                phi,
                trace: runner.exact(&runner.ramsey_state(phi)?, &scan_t)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let est = estimate_transverse_force(&traces, &p)?;

    let mut metadata = BTreeMap::new();
    metadata.insert("t_fixed".into(), format!("{t_fix:.6e}"));
    metadata.insert("null_phase".into(), format!("{phi0:.6e}"));
    metadata.insert("xi_expected".into(), format!("{xi:.6e}"));
    metadata.insert("omega_rms_expected".into(), format!("{:.6e}", tf.omega_rms));
    metadata.insert("omega_rms_fit".into(), format!("{:.6e}", est.rabi));
    metadata.insert(
        "xi_fit".into(),
        format!("{:.6e}", est.xi.unwrap_or(f64::NAN)),
    );
    metadata.insert("force_fit".into(), format!("{:.6e}", est.magnitude));
    metadata.insert("cutoff_per_mode".into(), opts.cutoff_2d.to_string());
    Ok(FigureData {
        figure: Figure::Fig4b,
        x_label: "phi [rad]".into(),
        y_label: "P_up".into(),
        series: vec![
            Series::new("exact", phis.clone(), exact),
            Series::new("formula", phis, formula),
        ],
        metadata,
    })
}

/// Largest pointwise difference between two series on the same grid.
pub fn max_difference(a: &Series, b: &Series) -> f64 {
    a.y.iter()
        .zip(&b.y)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn figure_ids_round_trip() {
        for f in Figure::ALL {
            assert_eq!(f.id().parse::<Figure>().unwrap(), f);
        }
        assert!("fig5".parse::<Figure>().is_err());
    }

    #[test]
    fn small_fig3_runs() {
        let opts = FigureOptions {
            cutoff: 16,
            points: 21,
            ..Default::default()
        };
        let d = reproduce(Figure::Fig3, &opts).unwrap();
        let dev = max_difference(d.series("exact").unwrap(), d.series("analytic").unwrap());
        assert!(dev < 0.05);
    }

    #[test]
    fn small_fig4a_runs() {
        let opts = FigureOptions {
            cutoff_2d: 5,
            points: 11,
            ..Default::default()
        };
        let d = reproduce(Figure::Fig4a, &opts).unwrap();
        assert_eq!(d.series.len(), 4);
        let dev = max_difference(
            d.series("exact_up").unwrap(),
            d.series("effective_up").unwrap(),
        );
        assert!(dev < 0.05, "{dev}");
    }
}
