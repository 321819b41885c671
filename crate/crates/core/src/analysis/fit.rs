// Copyright 2026 The ftprep Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::SweepPoint;

/// Fewest points a quadratic fit accepts.
pub const MIN_FIT_POINTS: usize = 4;

/// `y ~ c p^2`, fitted by least squares on relative residuals.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadraticFit {
    pub c: f64,
    pub window: (f64, f64),
    pub points: usize,
    /// Largest `|y - c p^2| / (c p^2)` over the window.
    pub max_rel_residual: f64,
    pub tolerance: f64,
}

impl QuadraticFit {
    pub fn is_well_conditioned(&self) -> bool {
        self.max_rel_residual < self.tolerance
    }

    pub fn eval(&self, p: f64) -> f64 {
        self.c * p * p
    }
}

/// Fits `samples` of `(p, y)` with `p` inside `window`.
///
/// Minimizes `sum ((y - c p^2) / y)^2`, so every decade of `p` carries equal
/// weight.
pub fn fit_quadratic(samples: &[(f64, f64)], window: (f64, f64), tolerance: f64) -> Result<QuadraticFit> {
    let used: Vec<(f64, f64)> = samples.iter().copied().filter(|&(p, _)| p >= window.0 * (1.0 - 1e-12) && p <= window.1 * (1.0 + 1e-12)).collect();
    if used.len() < MIN_FIT_POINTS {
        return Err(Error::Fit(format!(
            "{} point(s) inside [{:e}, {:e}], need at least {MIN_FIT_POINTS}",
            used.len(),
            window.0,
            window.1
        )));
    }
    if let Some(&(p, y)) = used.iter().find(|&&(_, y)| !(y > 0.0)) {
        return Err(Error::Fit(format!("non-positive failure probability {y:e} at p = {p:e}")));
    }
    let num: f64 = used.iter().map(|&(p, y)| p * p / y).sum();
    let den: f64 = used.iter().map(|&(p, y)| (p * p / y).powi(2)).sum();
    let c = num / den;
    let max_rel_residual = used.iter().map(|&(p, y)| ((y - c * p * p) / (c * p * p)).abs()).fold(0.0, f64::max);
    Ok(QuadraticFit { c, window, points: used.len(), max_rel_residual, tolerance })
}

/// Fits of the FT failure under both conventions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoefficientReport {
    /// From the unsquared deficit `1 - S_ft`.
    pub success: QuadraticFit,
    /// From the squared deficit `1 - F_ft`.
    pub fidelity: QuadraticFit,
}

impl CoefficientReport {
    /// The reported coefficient, taken from `1 - S_ft`.
    pub fn c(&self) -> f64 {
        self.success.c
    }

    pub fn is_well_conditioned(&self) -> bool {
        self.success.is_well_conditioned() && self.fidelity.is_well_conditioned()
    }

    pub fn text(&self) -> String {
        format!(
            "c = {:.6e}\nconvention = 1 - S_ft (unsquared success deficit)\nc_fidelity = {:.6e}\nconvention_fidelity = 1 - F_ft\nwindow = [{:e}, {:e}]\npoints = {}\nmax_rel_residual = {:.3e}\nmax_rel_residual_fidelity = {:.3e}\ntolerance = {:.3e}\nwell_conditioned = {}\n",
            self.success.c,
            self.fidelity.c,
            self.success.window.0,
            self.success.window.1,
            self.success.points,
            self.success.max_rel_residual,
            self.fidelity.max_rel_residual,
            self.success.tolerance,
            self.is_well_conditioned()
        )
    }
}

pub fn fit_sweep(points: &[SweepPoint], window: (f64, f64), tolerance: f64) -> Result<CoefficientReport> {
    let s: Vec<(f64, f64)> = points.iter().map(|pt| (pt.p, 1.0 - pt.s_ft)).collect();
    let f: Vec<(f64, f64)> = points.iter().map(|pt| (pt.p, 1.0 - pt.f_ft)).collect();
    Ok(CoefficientReport { success: fit_quadratic(&s, window, tolerance)?, fidelity: fit_quadratic(&f, window, tolerance)? })
}

/// Least-squares `y ~ a p` through the origin; the direct circuit's slope.
pub fn fit_linear(samples: &[(f64, f64)]) -> f64 {
    let num: f64 = samples.iter().map(|&(p, y)| p * y).sum();
    let den: f64 = samples.iter().map(|&(p, _)| p * p).sum();
    num / den
}

/// Number of unordered pairs of `area` locations.
pub fn naive_c(area: usize) -> u64 {
    let a = area as u64;
    a * a.saturating_sub(1) / 2
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> Vec<f64> {
        (0..9).map(|i| 10f64.powf(-6.0 + 0.25 * i as f64)).collect()
    }

    #[test]
    fn recovers_synthetic_coefficient() {
        let samples: Vec<(f64, f64)> = grid().into_iter().map(|p| (p, 1e4 * p * p)).collect();
        let fit = fit_quadratic(&samples, (1e-6, 1e-4), 0.05).unwrap();
        assert!((fit.c / 1e4 - 1.0).abs() < 1e-3);
        assert!(fit.max_rel_residual < 1e-12);
        assert_eq!(fit.points, 9);
    }

    #[test]
    fn flags_linear_data() {
        let samples: Vec<(f64, f64)> = grid().into_iter().map(|p| (p, 3.0 * p)).collect();
        let fit = fit_quadratic(&samples, (1e-6, 1e-4), 0.05).unwrap();
        assert!(!fit.is_well_conditioned());
    }

    #[test]
    fn needs_four_points() {
        let samples = [(1e-6, 1e-8), (1e-5, 1e-6), (1e-4, 1e-4), (1e-2, 0.5)];
        assert!(matches!(fit_quadratic(&samples, (1e-6, 1e-4), 0.05), Err(Error::Fit(_))));
    }

    #[test]
    fn rejects_non_positive_deficit() {
        let samples: Vec<(f64, f64)> = grid().into_iter().map(|p| (p, 0.0)).collect();
        assert!(fit_quadratic(&samples, (1e-6, 1e-4), 0.05).is_err());
    }

    #[test]
    fn naive_pair_count() {
        assert_eq!(naive_c(720), 258_840);
        assert_eq!(naive_c(1), 0);
        assert_eq!(naive_c(0), 0);
    }

    #[test]
    fn linear_slope() {
        let samples: Vec<(f64, f64)> = grid().into_iter().map(|p| (p, 2.0 * p)).collect();
        assert!((fit_linear(&samples) - 2.0).abs() < 1e-12);
    }
}
