// SPDX-License-Identifier: Apache-2.0

//! Time evolution under piecewise-constant Hamiltonians, instantaneous
//! unitaries and motional heating.

use std::collections::{BTreeMap, HashMap};

use nalgebra::SymmetricEigen;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::hilbert::{CMatrix, CVector, HilbertSpace, Operator, QuantumState, TAIL_WARNING, ZERO};

/// Relative tolerance when comparing sample times with segment boundaries.
const TIME_EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub enum PulseElement {
    Segment {
        hamiltonian: Operator,
        duration: f64,
    },
    Kick {
        unitary: Operator,
    },
}

/// Ordered segments and kicks sharing one space. Hamiltonians are in joules
/// and are converted with the sequence's ħ.
#[derive(Debug, Clone, PartialEq)]
pub struct PulseSequence {
    space: HilbertSpace,
    hbar: f64,
    elements: Vec<PulseElement>,
}

impl PulseSequence {
    pub fn new(space: &HilbertSpace, hbar: f64) -> Self {
        Self {
            space: space.clone(),
            hbar,
            elements: Vec::new(),
        }
    }

    /// A single segment.
    pub fn constant(hamiltonian: &Operator, duration: f64, hbar: f64) -> Result<Self> {
        let mut seq = Self::new(hamiltonian.space(), hbar);
        seq.push_segment(hamiltonian.clone(), duration)?;
        Ok(seq)
    }

    pub fn push_segment(&mut self, hamiltonian: Operator, duration: f64) -> Result<()> {
        if hamiltonian.space() != &self.space {
            return Err(Error::SpaceMismatch);
        }
        if !(duration >= 0.0) || !duration.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "segment duration {duration}"
            )));
        }
        if !hamiltonian.is_finite() {
            return Err(Error::NonFinite);
        }
        if !hamiltonian.is_hermitian(1e-10) {
            return Err(Error::InvalidParameter(
                "segment Hamiltonian is not Hermitian".into(),
            ));
        }
        self.elements.push(PulseElement::Segment {
            hamiltonian,
            duration,
        });
        Ok(())
    }

    pub fn push_kick(&mut self, unitary: Operator) -> Result<()> {
        if unitary.space() != &self.space {
            return Err(Error::SpaceMismatch);
        }
        self.elements.push(PulseElement::Kick { unitary });
        Ok(())
    }

    /// Appends all elements of `other`.
    pub fn extend(&mut self, other: &PulseSequence) -> Result<()> {
        if other.space != self.space {
            return Err(Error::SpaceMismatch);
        }
        self.elements.extend(other.elements.iter().cloned());
        Ok(())
    }

    pub fn space(&self) -> &HilbertSpace {
        &self.space
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn elements(&self) -> &[PulseElement] {
        &self.elements
    }

    pub fn duration(&self) -> f64 {
        self.elements
            .iter()
            .map(|e| match e {
                PulseElement::Segment { duration, .. } => *duration,
                PulseElement::Kick { .. } => 0.0,
            })
            .sum()
    }

    pub fn kick_count(&self) -> usize {
        self.elements
            .iter()
            .filter(|e| matches!(e, PulseElement::Kick { .. }))
            .count()
    }

    pub fn segment_count(&self) -> usize {
        self.elements.len() - self.kick_count()
    }

    /// Full propagator of the sequence.
    pub fn propagator(&self) -> Result<CMatrix> {
        let mut cache = PropagatorCache::new(self.hbar);
        let d = self.space.dim();
        let mut u = CMatrix::identity(d, d);
        for (i, e) in self.elements.iter().enumerate() {
            match e {
                PulseElement::Segment {
                    hamiltonian,
                    duration,
                } => u = cache.propagator(i, hamiltonian, *duration)? * u,
                PulseElement::Kick { unitary } => u = unitary.matrix() * u,
            }
        }
        Ok(u)
    }
}

/// `exp(−iĤt/ħ)` for arbitrary t from one Hermitian eigendecomposition.
#[derive(Debug, Clone)]
pub struct SpectralPropagator {
    vectors: CMatrix,
    /// Eigenvalues of Ĥ/ħ in rad/s.
    rates: Vec<f64>,
}

impl SpectralPropagator {
    pub fn new(hamiltonian: &Operator, hbar: f64) -> Result<Self> {
        if !hamiltonian.is_finite() {
            return Err(Error::NonFinite);
        }
        let m = hamiltonian.matrix();
        let herm = (m + m.adjoint()) * Complex64::from(0.5 / hbar);
        let eig = SymmetricEigen::new(herm);
        Ok(Self {
            vectors: eig.eigenvectors,
            rates: eig.eigenvalues.iter().copied().collect(),
        })
    }

    pub fn unitary(&self, t: f64) -> CMatrix {
        let mut scaled = self.vectors.clone();
        for (j, &l) in self.rates.iter().enumerate() {
            let phase = Complex64::from_polar(1.0, -l * t);
            for x in scaled.column_mut(j).iter_mut() {
                *x *= phase;
            }
        }
        &scaled * self.vectors.adjoint()
    }

    /// `U(t)ψ` without forming U.
    pub fn apply(&self, t: f64, psi: &CVector) -> CVector {
        let mut c = self.vectors.adjoint() * psi;
        for (x, &l) in c.iter_mut().zip(&self.rates) {
            *x *= Complex64::from_polar(1.0, -l * t);
        }
        &self.vectors * c
    }

    /// Largest |eigenvalue| of Ĥ/ħ.
    pub fn spectral_radius(&self) -> f64 {
        self.rates.iter().fold(0.0, |m, l| m.max(l.abs()))
    }
}

/// Segment propagators, reused for every step length.
struct PropagatorCache {
    hbar: f64,
    eigen: HashMap<usize, SpectralPropagator>,
    steps: HashMap<(usize, u64), CMatrix>,
}

impl PropagatorCache {
    fn new(hbar: f64) -> Self {
        Self {
            hbar,
            eigen: HashMap::new(),
            steps: HashMap::new(),
        }
    }

    fn propagator(&mut self, segment: usize, h: &Operator, dt: f64) -> Result<CMatrix> {
        if let Some(u) = self.steps.get(&(segment, dt.to_bits())) {
            return Ok(u.clone());
        }
        let sp = match self.eigen.entry(segment) {
            std::collections::hash_map::Entry::Occupied(e) => e.into_mut(),
            std::collections::hash_map::Entry::Vacant(e) => {
                e.insert(SpectralPropagator::new(h, self.hbar)?)
            }
        };
        let u = sp.unitary(dt);
        if self.steps.len() > 64 {
            self.steps.clear();
        }
        self.steps.insert((segment, dt.to_bits()), u.clone());
        Ok(u)
    }
}

/// `P_↑(t)` samples with per-mode top-level populations.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SignalTrace {
    pub times: Vec<f64>,
    pub p_up: Vec<f64>,
    /// `tails[i][k]`: population of the top Fock level of mode k at sample i.
    pub tails: Vec<Vec<f64>>,
    /// Parameter echo and diagnostics.
    pub metadata: BTreeMap<String, String>,
}

impl SignalTrace {
    pub fn new(times: Vec<f64>, p_up: Vec<f64>) -> Result<Self> {
        let trace = Self {
            times,
            p_up,
            tails: Vec::new(),
            metadata: BTreeMap::new(),
        };
        trace.validate()?;
        Ok(trace)
    }

    pub fn validate(&self) -> Result<()> {
        if self.times.len() != self.p_up.len() {
            return Err(Error::InvalidParameter(
                "times and p_up differ in length".into(),
            ));
        }
        check_times(&self.times)?;
        if let Some(p) = self
            .p_up
            .iter()
            .find(|p| !(**p >= -1e-9 && **p <= 1.0 + 1e-9))
        {
            return Err(Error::InvalidParameter(format!(
                "probability {p} outside [0, 1]"
            )));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Largest top-level population seen for each mode.
    pub fn max_tails(&self) -> Vec<f64> {
        let modes = self.tails.first().map_or(0, Vec::len);
        (0..modes)
            .map(|k| self.tails.iter().map(|t| t[k]).fold(0.0, f64::max))
            .collect()
    }

    pub fn with_meta(mut self, key: &str, value: impl ToString) -> Self {
        self.metadata.insert(key.to_string(), value.to_string());
        self
    }
}

fn check_times(times: &[f64]) -> Result<()> {
    let ok =
        times.iter().all(|t| t.is_finite() && *t >= 0.0) && times.windows(2).all(|w| w[1] > w[0]);
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidSampleTimes)
    }
}

/// `points` evenly spaced times from `start` to `stop` inclusive.
pub fn time_grid(start: f64, stop: f64, points: usize) -> Result<Vec<f64>> {
    if points < 2 || !(stop > start) || start < 0.0 || !stop.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "time grid [{start}, {stop}] with {points} points"
        )));
    }
    let step = (stop - start) / (points - 1) as f64;
    Ok((0..points)
        .map(|i| {
            if i + 1 == points {
                stop
            } else {
                start + step * i as f64
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evolution {
    pub trace: SignalTrace,
    pub final_state: QuantumState,
}

fn record(state: &QuantumState, trace: &mut SignalTrace, t: f64) {
    trace.times.push(t);
    trace.p_up.push(state.spin_up_probability());
    trace.tails.push(state.tail_populations());
}

fn warn_on_tails(trace: &mut SignalTrace) {
    let tails = trace.max_tails();
    for (k, tail) in tails.iter().enumerate() {
        if *tail > TAIL_WARNING {
            log::warn!("mode {k}: top Fock level population {tail:.3e} exceeds {TAIL_WARNING:e}");
        }
        trace
            .metadata
            .insert(format!("max_tail_mode{k}"), format!("{tail:.6e}"));
    }
}

/// Propagates `initial` through the sequence and samples `P_↑` at each time.
///
/// Kicks scheduled at a sample time are applied before that sample is taken.
pub fn evolve(
    sequence: &PulseSequence,
    initial: &QuantumState,
    sample_times: &[f64],
) -> Result<Evolution> {
    if initial.space() != sequence.space() {
        return Err(Error::SpaceMismatch);
    }
    check_times(sample_times)?;
    let duration = sequence.duration();
    let eps = TIME_EPS * duration.max(f64::MIN_POSITIVE);
    if let Some(&t) = sample_times.iter().find(|&&t| t > duration + eps) {
        return Err(Error::SampleTimeOutOfRange { time: t, duration });
    }

    let mut cache = PropagatorCache::new(sequence.hbar());
    let mut state = initial.clone();
    let mut trace = SignalTrace::default();
    let elements = sequence.elements();
    let mut idx = 0;
    // start time of elements[idx] and the time the state has reached inside it
    let mut seg_start = 0.0;
    let mut now = 0.0;

    let mut advance_to = |target: f64,
                          idx: &mut usize,
                          seg_start: &mut f64,
                          now: &mut f64,
                          state: &mut QuantumState|
     -> Result<()> {
        while *idx < elements.len() {
            match &elements[*idx] {
                PulseElement::Kick { unitary } => {
                    if *seg_start > target + eps {
                        break;
                    }
                    *state = state.transformed(unitary.matrix());
                    *idx += 1;
                }
                PulseElement::Segment {
                    hamiltonian,
                    duration,
                } => {
                    let end = *seg_start + duration;
                    let stop = if end <= target + eps { end } else { target };
                    let dt = stop - *now;
                    if dt > 0.0 {
                        let u = cache.propagator(*idx, hamiltonian, dt)?;
                        *state = state.transformed(&u);
                    }
                    *now = stop;
                    if end <= target + eps {
                        *seg_start = end;
                        *now = end;
                        *idx += 1;
                    } else {
                        break;
                    }
                }
            }
        }
        Ok(())
    };

    for &t in sample_times {
        advance_to(t, &mut idx, &mut seg_start, &mut now, &mut state)?;
        record(&state, &mut trace, t);
    }
    advance_to(
        f64::INFINITY,
        &mut idx,
        &mut seg_start,
        &mut now,
        &mut state,
    )?;
    warn_on_tails(&mut trace);
    Ok(Evolution {
        trace,
        final_state: state,
    })
}

/// Symmetric heating of one mode at rate Γ (jumps â and â† at equal rate),
/// so that d⟨n̂⟩/dt = Γ away from the cutoff.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeatingChannel {
    pub mode_index: usize,
    pub rate: f64,
}

impl HeatingChannel {
    pub fn new(mode_index: usize, rate: f64) -> Result<Self> {
        if !(rate >= 0.0) || !rate.is_finite() {
            return Err(Error::InvalidParameter(format!("heating rate {rate}")));
        }
        Ok(Self { mode_index, rate })
    }
}

/// Largest tolerated |Tr ρ − 1| during master-equation integration.
pub const TRACE_DRIFT_LIMIT: f64 = 1e-8;

/// Row-sparse complex matrix, enough for Hamiltonian-times-ρ products.
struct RowSparse {
    rows: Vec<Vec<(usize, Complex64)>>,
}

impl RowSparse {
    fn from_dense(m: &CMatrix) -> Self {
        let rows = (0..m.nrows())
            .map(|i| {
                (0..m.ncols())
                    .filter_map(|j| {
                        let z = m[(i, j)];
                        (z != ZERO).then_some((j, z))
                    })
                    .collect()
            })
            .collect();
        Self { rows }
    }
}

/// One ladder channel: `neighbour[i] = Some((j, c))` means `L[i, j] = c`.
struct Ladder {
    neighbour: Vec<Option<(usize, f64)>>,
}

struct Liouvillian {
    d: usize,
    h: RowSparse,
    // (rate, lowering, raising) per channel
    jumps: Vec<(f64, Ladder, Ladder)>,
    // diagonal of Σ Γ (â†â + ââ†)/2
    damping: Vec<f64>,
}

impl Liouvillian {
    fn new(h_rad: &CMatrix, channels: &[HeatingChannel], space: &HilbertSpace) -> Result<Self> {
        let d = space.dim();
        let mut damping = vec![0.0; d];
        let mut jumps = Vec::new();
        for ch in channels {
            space.check_mode(ch.mode_index)?;
            let cutoff = space.cutoffs()[ch.mode_index];
            let mut lower = Vec::with_capacity(d);
            let mut raise = Vec::with_capacity(d);
            for i in 0..d {
                let (spin, occ) = space.label(i);
                let n = occ[ch.mode_index];
                // â[i, j] with j = |n+1⟩ is √(n+1)
                lower.push((n + 1 < cutoff).then(|| {
                    let mut o = occ.clone();
                    o[ch.mode_index] += 1;
                    (space.index(spin, &o).unwrap(), ((n + 1) as f64).sqrt())
                }));
                // â†[i, j] with j = |n−1⟩ is √n
                raise.push((n > 0).then(|| {
                    let mut o = occ.clone();
                    o[ch.mode_index] -= 1;
                    (space.index(spin, &o).unwrap(), (n as f64).sqrt())
                }));
                let aa_dag = if n + 1 < cutoff { (n + 1) as f64 } else { 0.0 };
                damping[i] += 0.5 * ch.rate * (n as f64 + aa_dag);
            }
            jumps.push((
                ch.rate,
                Ladder { neighbour: lower },
                Ladder { neighbour: raise },
            ));
        }
        Ok(Self {
            d,
            h: RowSparse::from_dense(h_rad),
            jumps,
            damping,
        })
    }

    /// out = L(ρ), with ρ and out row-major.
    fn apply(&self, rho: &[Complex64], out: &mut [Complex64]) {
        let d = self.d;
        out.iter_mut().for_each(|z| *z = ZERO);
        let mi = Complex64::new(0.0, -1.0);
        // −i H ρ
        for (i, row) in self.h.rows.iter().enumerate() {
            let dst = &mut out[i * d..(i + 1) * d];
            for &(k, hik) in row {
                let c = mi * hik;
                let src = &rho[k * d..(k + 1) * d];
                for (o, r) in dst.iter_mut().zip(src) {
                    *o += c * r;
                }
            }
        }
        // +i ρ H: (ρH)[i, j] = Σ_k ρ[i, k] H[k, j]
        for (k, row) in self.h.rows.iter().enumerate() {
            for &(j, hkj) in row {
                let c = -mi * hkj;
                for i in 0..d {
                    out[i * d + j] += c * rho[i * d + k];
                }
            }
        }
        for (rate, lower, raise) in &self.jumps {
            for ladder in [lower, raise] {
                for (i, ni) in ladder.neighbour.iter().enumerate() {
                    let Some((ji, ci)) = *ni else { continue };
                    for (l, nl) in ladder.neighbour.iter().enumerate() {
                        let Some((jl, cl)) = *nl else { continue };
                        out[i * d + l] += rho[ji * d + jl] * (rate * ci * cl);
                    }
                }
            }
        }
        for i in 0..d {
            for j in 0..d {
                out[i * d + j] -= rho[i * d + j] * (self.damping[i] + self.damping[j]);
            }
        }
    }

    /// Conservative bound on the dissipator rate used for step selection.
    fn dissipator_scale(&self) -> f64 {
        2.0 * self.damping.iter().fold(0.0, |a: f64, &b| a.max(b))
    }
}

fn to_row_major(m: &CMatrix) -> Vec<Complex64> {
    let d = m.nrows();
    let mut v = Vec::with_capacity(d * d);
    for i in 0..d {
        for j in 0..d {
            v.push(m[(i, j)]);
        }
    }
    v
}

fn from_row_major(v: &[Complex64], d: usize) -> CMatrix {
    CMatrix::from_row_slice(d, d, v)
}

/// Spectral norm of a Hermitian matrix.
fn hermitian_norm(m: &CMatrix) -> f64 {
    let herm = (m + m.adjoint()) * Complex64::from(0.5);
    herm.symmetric_eigenvalues()
        .iter()
        .fold(0.0, |a: f64, &b| a.max(b.abs()))
}

/// Integrates `dρ/dt = −(i/ħ)[Ĥ, ρ] + Σ Γ (D[â] + D[â†]) ρ` with fixed-step RK4.
///
/// The step never exceeds `0.01` divided by the larger of ‖Ĥ/ħ‖ and the
/// dissipator rate scale; each sample interval is split into equal steps.
pub fn evolve_lindblad(
    hamiltonian: &Operator,
    channels: &[HeatingChannel],
    initial: &QuantumState,
    sample_times: &[f64],
    hbar: f64,
) -> Result<Evolution> {
    let space = hamiltonian.space();
    if initial.space() != space {
        return Err(Error::SpaceMismatch);
    }
    if !hamiltonian.is_hermitian(1e-10) {
        return Err(Error::InvalidParameter(
            "Hamiltonian is not Hermitian".into(),
        ));
    }
    for ch in channels {
        HeatingChannel::new(ch.mode_index, ch.rate)?;
    }
    check_times(sample_times)?;
    let d = space.dim();
    let h_rad = hamiltonian.matrix() / Complex64::from(hbar);
    let liouv = Liouvillian::new(&h_rad, channels, space)?;
    let scale = hermitian_norm(&h_rad).max(liouv.dissipator_scale());
    let h_max = if scale > 0.0 {
        0.01 / scale
    } else {
        f64::INFINITY
    };

    let mut rho = to_row_major(&initial.density_matrix());
    let mut k1 = vec![ZERO; d * d];
    let mut k2 = vec![ZERO; d * d];
    let mut k3 = vec![ZERO; d * d];
    let mut k4 = vec![ZERO; d * d];
    let mut tmp = vec![ZERO; d * d];

    let mut trace = SignalTrace::default();
    let mut now = 0.0;
    let mut state = initial.to_mixed();
    for &t in sample_times {
        let span = t - now;
        if span > 0.0 {
            let steps = if h_max.is_finite() {
                (span / h_max).ceil().max(1.0) as usize
            } else {
                1
            };
            let h = span / steps as f64;
            for _ in 0..steps {
                liouv.apply(&rho, &mut k1);
                axpy(&rho, &k1, 0.5 * h, &mut tmp);
                liouv.apply(&tmp, &mut k2);
                axpy(&rho, &k2, 0.5 * h, &mut tmp);
                liouv.apply(&tmp, &mut k3);
                axpy(&rho, &k3, h, &mut tmp);
                liouv.apply(&tmp, &mut k4);
                for i in 0..d * d {
                    rho[i] += (k1[i] + (k2[i] + k3[i]) * 2.0 + k4[i]) * (h / 6.0);
                }
            }
            let tr: f64 = (0..d).map(|i| rho[i * d + i].re).sum();
            let drift = (tr - 1.0).abs();
            if drift > TRACE_DRIFT_LIMIT || !drift.is_finite() {
                return Err(Error::StepFailure {
                    drift,
                    limit: TRACE_DRIFT_LIMIT,
                });
            }
            now = t;
        }
        state = QuantumState::mixed_unchecked(space, from_row_major(&rho, d));
        record(&state, &mut trace, t);
    }
    warn_on_tails(&mut trace);
    Ok(Evolution {
        trace,
        final_state: state,
    })
}

fn axpy(x: &[Complex64], k: &[Complex64], a: f64, out: &mut [Complex64]) {
    for ((o, xi), ki) in out.iter_mut().zip(x).zip(k) {
        *o = xi + ki * a;
    }
}

/// `P_↑(t) = ½[1 + e^{−γt} cos(2Ω_F t)]`.
pub fn analytic_damped_signal(omega_f: f64, gamma: f64, times: &[f64]) -> Result<SignalTrace> {
    if !(gamma >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "decay rate {gamma} is negative"
        )));
    }
    let p = times
        .iter()
        .map(|&t| 0.5 * (1.0 + (-gamma * t).exp() * (2.0 * omega_f * t).cos()))
        .collect();
    Ok(SignalTrace::new(times.to_vec(), p)?
        .with_meta("omega_f", omega_f)
        .with_meta("gamma", gamma))
}

/// Pure-state amplitudes after a single constant Hamiltonian, mainly for tests.
pub fn propagate_pure(h: &Operator, psi: &CVector, t: f64, hbar: f64) -> Result<CVector> {
    Ok(SpectralPropagator::new(h, hbar)?.apply(t, psi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{
        fock_state, matrix_exponential, max_abs, product_state, thermal_state, Spin, SpinOp,
    };
    use crate::models::{
        build_effective_hamiltonian, presets, rabi_frequency_axial, EffectiveKind, EffectiveTerms,
    };

    #[test]
    fn zero_hamiltonian_keeps_state() {
        let s = HilbertSpace::single_mode(4).unwrap();
        let seq = PulseSequence::constant(&Operator::zeros(&s), 1.0, 1.0).unwrap();
        let psi = fock_state(&s, Spin::Up, &[1]).unwrap();
        let ev = evolve(&seq, &psi, &[0.0, 0.3, 1.0]).unwrap();
        assert!(ev.trace.p_up.iter().all(|&p| p == 1.0));
        assert_eq!(ev.final_state, psi);
    }

    #[test]
    fn effective_rabi_oscillation() {
        let s = HilbertSpace::single_mode(4).unwrap();
        let p = presets::axial_jc();
        let h =
            build_effective_hamiltonian(EffectiveKind::JcEff, &p, &s, EffectiveTerms::SPIN_ONLY)
                .unwrap();
        let of = rabi_frequency_axial(&p).unwrap();
        let times = time_grid(0.0, 0.2, 101).unwrap();
        let seq = PulseSequence::constant(&h, 0.2, p.hbar).unwrap();
        let psi = fock_state(&s, Spin::Up, &[0]).unwrap();
        let ev = evolve(&seq, &psi, &times).unwrap();
        for (t, pu) in times.iter().zip(&ev.trace.p_up) {
            assert!((pu - (of * t).cos().powi(2)).abs() < 1e-9);
        }
    }

    #[test]
    fn eigen_propagator_matches_expm() {
        let s = HilbertSpace::single_mode(6).unwrap();
        let p = presets::axial_jc();
        let h = crate::models::total_hamiltonian(&p, &s).unwrap();
        let t = 3.7e-4;
        let seq = PulseSequence::constant(&h, t, p.hbar).unwrap();
        let u = seq.propagator().unwrap();
        let reference = matrix_exponential(&h, Complex64::new(0.0, -t / p.hbar)).unwrap();
        assert!(max_abs(&(u - reference.matrix())) < 1e-10);
    }

    #[test]
    fn segment_splitting() {
        let s = HilbertSpace::single_mode(8).unwrap();
        let p = presets::axial_jc();
        let h = crate::models::total_hamiltonian(&p, &s).unwrap();
        let t = 2e-3;
        let one = PulseSequence::constant(&h, t, p.hbar)
            .unwrap()
            .propagator()
            .unwrap();
        let mut two = PulseSequence::new(&s, p.hbar);
        two.push_segment(h.clone(), t / 2.0).unwrap();
        two.push_segment(h, t / 2.0).unwrap();
        assert!(max_abs(&(one - two.propagator().unwrap())) < 1e-9);
    }

    #[test]
    fn kicks_apply_before_sample_at_same_time() {
        let s = HilbertSpace::single_mode(2).unwrap();
        let mut seq = PulseSequence::new(&s, 1.0);
        seq.push_segment(Operator::zeros(&s), 1.0).unwrap();
        seq.push_kick(Operator::spin(&s, SpinOp::X)).unwrap();
        seq.push_segment(Operator::zeros(&s), 1.0).unwrap();
        let psi = fock_state(&s, Spin::Up, &[0]).unwrap();
        let ev = evolve(&seq, &psi, &[0.5, 1.0, 2.0]).unwrap();
        assert_eq!(ev.trace.p_up, vec![1.0, 0.0, 0.0]);
        assert_eq!(seq.kick_count(), 1);
        assert_eq!(seq.segment_count(), 2);
    }

    #[test]
    fn evolve_errors() {
        let s = HilbertSpace::single_mode(2).unwrap();
        let other = HilbertSpace::single_mode(3).unwrap();
        let seq = PulseSequence::constant(&Operator::zeros(&s), 1.0, 1.0).unwrap();
        let psi = fock_state(&s, Spin::Up, &[0]).unwrap();
        assert!(matches!(
            evolve(&seq, &psi, &[2.0]),
            Err(Error::SampleTimeOutOfRange { .. })
        ));
        assert_eq!(
            evolve(&seq, &psi, &[0.5, 0.2]),
            Err(Error::InvalidSampleTimes)
        );
        let psi3 = fock_state(&other, Spin::Up, &[0]).unwrap();
        assert_eq!(evolve(&seq, &psi3, &[0.5]), Err(Error::SpaceMismatch));
        let mut bad = PulseSequence::new(&s, 1.0);
        assert!(bad
            .push_segment(Operator::spin(&s, SpinOp::Plus), 1.0)
            .is_err());
        assert!(bad.push_segment(Operator::zeros(&s), -1.0).is_err());
    }

    #[test]
    fn unitary_evolution_preserves_purity() {
        let s = HilbertSpace::single_mode(12).unwrap();
        let p = presets::axial_jc();
        let h = crate::models::total_hamiltonian(&p, &s).unwrap();
        let rho = product_state(&s, Spin::Up, &thermal_state(&s, 0, 1.2).unwrap()).unwrap();
        let purity0 = rho.purity();
        let times = time_grid(0.0, 0.05, 11).unwrap();
        let seq = PulseSequence::constant(&h, 0.05, p.hbar).unwrap();
        let ev = evolve(&seq, &rho, &times).unwrap();
        assert!((ev.final_state.purity() - purity0).abs() < 1e-8);
        assert!((ev.final_state.trace() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn lindblad_without_heating_matches_unitary() {
        let s = HilbertSpace::single_mode(6).unwrap();
        let p = presets::axial_jc();
        let h = build_effective_hamiltonian(
            EffectiveKind::JcEff,
            &p,
            &s,
            EffectiveTerms::WITH_RESIDUAL,
        )
        .unwrap();
        let rho = product_state(&s, Spin::Up, &thermal_state(&s, 0, 0.5).unwrap()).unwrap();
        let times = time_grid(0.0, 0.02, 5).unwrap();
        let unitary = evolve(
            &PulseSequence::constant(&h, 0.02, p.hbar).unwrap(),
            &rho,
            &times,
        )
        .unwrap();
        let open = evolve_lindblad(
            &h,
            &[HeatingChannel::new(0, 0.0).unwrap()],
            &rho,
            &times,
            p.hbar,
        )
        .unwrap();
        for (a, b) in unitary.trace.p_up.iter().zip(&open.trace.p_up) {
            assert!((a - b).abs() < 1e-8, "{a} vs {b}");
        }
        let diff =
            max_abs(&(unitary.final_state.density_matrix() - open.final_state.density_matrix()));
        assert!(diff < 1e-8);
    }

    #[test]
    fn heating_grows_occupation_linearly() {
        let s = HilbertSpace::single_mode(30).unwrap();
        let rho = fock_state(&s, Spin::Up, &[0]).unwrap();
        let gamma = 10.0;
        let channel = [HeatingChannel::new(0, gamma).unwrap()];
        for &t in &[0.02, 0.05, 0.1] {
            let ev = evolve_lindblad(&Operator::zeros(&s), &channel, &rho, &[0.0, t], 1.0).unwrap();
            let n = ev.final_state.mean_occupation(0).unwrap();
            assert!((n - gamma * t).abs() <= 0.02 * gamma * t, "t={t} n={n}");
            assert!(ev.final_state.min_eigenvalue() >= -1e-7);
            assert!((ev.final_state.trace() - 1.0).abs() <= 1e-8);
        }
    }

    #[test]
    fn negative_rate_rejected() {
        assert!(HeatingChannel::new(0, -1.0).is_err());
    }

    #[test]
    fn analytic_signal_values() {
        let times = [0.0, 0.01, 0.05];
        let tr = analytic_damped_signal(60e3, 0.0, &times).unwrap();
        for (t, p) in times.iter().zip(&tr.p_up) {
            assert!((p - (60e3 * t).cos().powi(2)).abs() < 1e-9);
        }
        let long = analytic_damped_signal(7.0, 10.0, &[100.0]).unwrap();
        assert!((long.p_up[0] - 0.5).abs() < 1e-15);
        // independent scalar evaluation: ½[1 + e^{−0.5} cos(6000)]
        let v = analytic_damped_signal(60e3, 10.0, &[0.05]).unwrap().p_up[0];
        let expected = 0.5 * (1.0 + 0.606_530_659_712_633_4 * 6000f64.cos());
        assert!((v - expected).abs() < 1e-12);
        assert!(analytic_damped_signal(1.0, -1.0, &[0.0]).is_err());
    }

    #[test]
    fn time_grid_shape() {
        let g = time_grid(0.0, 1.0, 5).unwrap();
        assert_eq!(g, vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert!(time_grid(0.0, 0.0, 5).is_err());
        assert!(time_grid(0.0, 1.0, 1).is_err());
    }
}
