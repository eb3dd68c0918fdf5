// SPDX-License-Identifier: Apache-2.0

//! Two-parameter nonlinear least squares and spectral seeding.

use levenberg_marquardt::{LeastSquaresProblem, LevenbergMarquardt};
use nalgebra::storage::Owned;
use nalgebra::{Dyn, Matrix2, OMatrix, OVector, Vector2, U2};

/// One observation `y` at `(t, φ)`; φ is ignored by models that do not use it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub phi: f64,
    pub y: f64,
}

/// Model value and its gradient with respect to the two parameters.
pub type Model = fn(&Sample, &Vector2<f64>) -> (f64, [f64; 2]);

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub params: Vector2<f64>,
    /// Root-mean-square residual.
    pub rms: f64,
    /// One-sigma parameter uncertainties from `s²(JᵀJ)⁻¹`.
    pub sigma: [f64; 2],
    pub converged: bool,
}

struct Problem<'a> {
    samples: &'a [Sample],
    model: Model,
    p: Vector2<f64>,
}

impl LeastSquaresProblem<f64, Dyn, U2> for Problem<'_> {
    type ParameterStorage = Owned<f64, U2>;
    type ResidualStorage = Owned<f64, Dyn>;
    type JacobianStorage = Owned<f64, Dyn, U2>;

    fn set_params(&mut self, p: &Vector2<f64>) {
        self.p = *p;
    }

    fn params(&self) -> Vector2<f64> {
        self.p
    }

    fn residuals(&self) -> Option<OVector<f64, Dyn>> {
        let r = OVector::<f64, Dyn>::from_iterator(
            self.samples.len(),
            self.samples
                .iter()
                .map(|s| (self.model)(s, &self.p).0 - s.y),
        );
        r.iter().all(|x| x.is_finite()).then_some(r)
    }

    fn jacobian(&self) -> Option<OMatrix<f64, Dyn, U2>> {
        let mut j = OMatrix::<f64, Dyn, U2>::zeros(self.samples.len());
        for (i, s) in self.samples.iter().enumerate() {
            let (_, g) = (self.model)(s, &self.p);
            j[(i, 0)] = g[0];
            j[(i, 1)] = g[1];
        }
        j.iter().all(|x| x.is_finite()).then_some(j)
    }
}

pub fn fit(samples: &[Sample], model: Model, seed: Vector2<f64>) -> FitResult {
    let problem = Problem {
        samples,
        model,
        p: seed,
    };
    let (problem, report) = LevenbergMarquardt::new()
        .with_patience(200)
        .minimize(problem);
    let p = problem.p;
    let m = samples.len();
    let rss: f64 = samples
        .iter()
        .map(|s| ((model)(s, &p).0 - s.y).powi(2))
        .sum();
    let mut jtj = Matrix2::zeros();
    for s in samples {
        let (_, g) = (model)(s, &p);
        let g = Vector2::new(g[0], g[1]);
        jtj += g * g.transpose();
    }
    let dof = m.saturating_sub(2).max(1) as f64;
    let sigma = match jtj.try_inverse() {
        Some(inv) => [
            (inv[(0, 0)] * rss / dof).abs().sqrt(),
            (inv[(1, 1)] * rss / dof).abs().sqrt(),
        ],
        None => [f64::INFINITY; 2],
    };
    FitResult {
        params: p,
        rms: (rss / m.max(1) as f64).sqrt(),
        sigma,
        converged: report.termination.was_successful() && p.iter().all(|x| x.is_finite()),
    }
}

/// Angular frequencies of the strongest local maxima of the periodogram of
/// `values − mean`, strongest first. The grid runs up to the Nyquist limit of
/// the smallest sample spacing.
pub fn spectral_peaks(times: &[f64], values: &[f64], count: usize) -> Vec<f64> {
    let n = times.len();
    if n < 3 {
        return Vec::new();
    }
    let span = times[n - 1] - times[0];
    let dt = times
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::INFINITY, f64::min);
    if !(span > 0.0 && dt > 0.0) {
        return Vec::new();
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let nyquist = std::f64::consts::PI / dt;
    let step = std::f64::consts::PI / (8.0 * span);
    let bins = ((nyquist / step) as usize).clamp(4, 200_000);
    let power: Vec<f64> = (1..=bins)
        .map(|k| {
            let w = k as f64 * step;
            let (c, s) = times
                .iter()
                .zip(values)
                .fold((0.0, 0.0), |(c, s), (&t, &v)| {
                    let (sn, cs) = (w * t).sin_cos();
                    (c + (v - mean) * cs, s + (v - mean) * sn)
                });
            c * c + s * s
        })
        .collect();
    let mut peaks: Vec<(f64, f64)> = (0..bins)
        .filter(|&i| {
            let left = if i == 0 { 0.0 } else { power[i - 1] };
            let right = power.get(i + 1).copied().unwrap_or(0.0);
            power[i] >= left && power[i] >= right && power[i] > 0.0
        })
        .map(|i| ((i + 1) as f64 * step, power[i]))
        .collect();
    peaks.sort_by(|a, b| b.1.total_cmp(&a.1));
    peaks.into_iter().take(count).map(|(w, _)| w).collect()
}

/// Nyquist angular frequency of the smallest spacing in `times`.
pub fn nyquist(times: &[f64]) -> f64 {
    let dt = times
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::INFINITY, f64::min);
    std::f64::consts::PI / dt
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(s: &Sample, p: &Vector2<f64>) -> (f64, [f64; 2]) {
        (p[0] * s.t + p[1], [s.t, 1.0])
    }

    fn sine(s: &Sample, p: &Vector2<f64>) -> (f64, [f64; 2]) {
        let (sn, cs) = (p[0] * s.t).sin_cos();
        (p[1] * sn, [p[1] * s.t * cs, sn])
    }

    #[test]
    fn linear_fit_is_exact() {
        let samples: Vec<Sample> = (0..10)
            .map(|i| Sample {
                t: i as f64,
                phi: 0.0,
                y: 3.0 * i as f64 - 2.0,
            })
            .collect();
        let r = fit(&samples, line, Vector2::new(0.0, 0.0));
        assert!(r.converged);
        assert!((r.params[0] - 3.0).abs() < 1e-9 && (r.params[1] + 2.0).abs() < 1e-9);
        assert!(r.rms < 1e-9);
    }

    #[test]
    fn periodogram_finds_frequency() {
        let times: Vec<f64> = (0..400).map(|i| i as f64 * 1e-3).collect();
        let values: Vec<f64> = times.iter().map(|t| (64.7 * t).cos()).collect();
        let peaks = spectral_peaks(&times, &values, 3);
        assert!((peaks[0] - 64.7).abs() < 4.0, "{peaks:?}");
        let samples: Vec<Sample> = times
            .iter()
            .map(|&t| Sample {
                t,
                phi: 0.0,
                y: 0.8 * (64.7 * t).sin(),
            })
            .collect();
        let r = fit(&samples, sine, Vector2::new(peaks[0], 0.5));
        assert!((r.params[0] - 64.7).abs() < 1e-8);
    }

    #[test]
    fn slope_of_power_law() {
        let xs = [1.0, 2.0, 5.0, 10.0];
        let ys: Vec<f64> = xs.iter().map(|x: &f64| 7.0 * x.powi(3)).collect();
        assert!((log_log_slope(&xs, &ys) - 3.0).abs() < 1e-12);
    }

    #[test]
    fn short_or_flat_inputs() {
        assert!(spectral_peaks(&[0.0, 1.0], &[0.0, 1.0], 2).is_empty());
        let t: Vec<f64> = (0..20).map(|i| i as f64).collect();
        assert!(spectral_peaks(&t, &[0.5; 20], 2).is_empty());
        assert!((nyquist(&t) - std::f64::consts::PI).abs() < 1e-15);
    }
}
