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

use super::fit::{naive_c, CoefficientReport};
use super::SweepPoint;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrossoverEstimate {
    /// Root of `F_ft - F_direct`.
    pub p_cr: f64,
    /// Root of `S_ft - S_direct`.
    pub p_cr_success: f64,
    /// Adjacent sweep points on either side of the root.
    pub bracket: (f64, f64),
    /// Simulator runs spent refining the root.
    pub evaluations: usize,
    /// Quadratic coefficient of `1 - S_ft`.
    pub c_fit: f64,
    /// Quadratic coefficient of `1 - F_ft`.
    pub c_fidelity: f64,
    pub k_direct: usize,
    pub naive_c: u64,
    /// `2k / (3 c_fidelity)`: where `(2k/3) p` meets `c_fidelity p^2`.
    pub closed_form: f64,
    /// `k / (3 c_fit)`: the same meeting point for unsquared deficits.
    pub closed_form_success: f64,
    /// Points evaluated during refinement, sorted by `p`.
    pub refinement: Vec<SweepPoint>,
}

impl CrossoverEstimate {
    pub fn text(&self) -> String {
        format!(
            "p_cr = {:.6e}\nc_fit = {:.6e}\nk_direct = {}\nnaive_c = {}\np_cr_success = {:.6e}\nc_fidelity = {:.6e}\nclosed_form = {:.6e}\nclosed_form_success = {:.6e}\nbracket = [{:.6e}, {:.6e}]\nevaluations = {}\n",
            self.p_cr,
            self.c_fit,
            self.k_direct,
            self.naive_c,
            self.p_cr_success,
            self.c_fidelity,
            self.closed_form,
            self.closed_form_success,
            self.bracket.0,
            self.bracket.1,
            self.evaluations
        )
    }

    /// Relative gap between the closed form and the root-finder.
    pub fn closed_form_gap(&self) -> f64 {
        (self.closed_form / self.p_cr - 1.0).abs()
    }
}

/// `ln(1 - F_ft) - ln(1 - F_direct)`; positive where the FT circuit is worse.
fn fidelity_gap(pt: &SweepPoint) -> f64 {
    (1.0 - pt.f_ft).ln() - (1.0 - pt.f_direct).ln()
}

fn success_gap(pt: &SweepPoint) -> f64 {
    (1.0 - pt.s_ft).ln() - (1.0 - pt.s_direct).ln()
}

fn opposite(a: f64, b: f64) -> bool {
    (a <= 0.0 && b >= 0.0) || (a >= 0.0 && b <= 0.0)
}

/// First adjacent pair of `pts` (sorted by `p`) across which `gap` changes sign.
fn bracket_of(pts: &[SweepPoint], gap: fn(&SweepPoint) -> f64) -> Option<(usize, usize)> {
    (1..pts.len()).find(|&i| opposite(gap(&pts[i - 1]), gap(&pts[i]))).map(|i| (i - 1, i))
}

/// Secant estimate of the root between two points, linear in `ln p`.
fn secant(a: &SweepPoint, b: &SweepPoint, gap: fn(&SweepPoint) -> f64) -> f64 {
    let (xa, xb) = (a.p.ln(), b.p.ln());
    let (fa, fb) = (gap(a), gap(b));
    if fa == fb {
        return (0.5 * (xa + xb)).exp();
    }
    (xb - fb * (xb - xa) / (fb - fa)).exp()
}

struct Refiner<'a> {
    points: Vec<SweepPoint>,
    added: Vec<SweepPoint>,
    eval: &'a mut dyn FnMut(f64) -> Result<SweepPoint>,
    budget: usize,
    tol: f64,
}

impl Refiner<'_> {
    /// Regula falsi in `ln p` over the tightest known bracket, stopping when
    /// successive estimates agree to `tol` relative.
    fn root(&mut self, gap: fn(&SweepPoint) -> f64, mut prev: Option<f64>) -> Result<f64> {
        loop {
            let (i, j) = bracket_of(&self.points, gap).ok_or(Error::NoBracket)?;
            let (a, b) = (&self.points[i], &self.points[j]);
            if gap(a) == 0.0 {
                return Ok(a.p);
            }
            if gap(b) == 0.0 {
                return Ok(b.p);
            }
            let x = secant(a, b, gap);
            let converged = prev.is_some_and(|q| (x / q - 1.0).abs() < self.tol) || (b.p / a.p - 1.0) < self.tol;
            if converged || self.budget == 0 {
                return Ok(x);
            }
            self.budget -= 1;
            let pt = (self.eval)(x)?;
            let at = self.points.partition_point(|q| q.p < x);
            self.points.insert(at, pt.clone());
            self.added.push(pt);
            prev = Some(x);
        }
    }
}

/// Locates the equal-fidelity point from a sweep, refining with `eval`.
///
/// `fits` supplies `c` and `k` is the direct circuit's failing single-error count.
pub fn find_crossover(
    sweep: &[SweepPoint],
    eval: &mut dyn FnMut(f64) -> Result<SweepPoint>,
    fits: &CoefficientReport,
    k: usize,
    ft_area: usize,
    tol: f64,
    max_evaluations: usize,
) -> Result<CrossoverEstimate> {
    let mut points = sweep.to_vec();
    points.sort_by(|a, b| a.p.total_cmp(&b.p));
    let (i, j) = bracket_of(&points, fidelity_gap).ok_or(Error::NoBracket)?;
    let bracket = (points[i].p, points[j].p);
    let mut r = Refiner { points, added: Vec::new(), eval, budget: max_evaluations, tol };
    let p_cr = r.root(fidelity_gap, None)?;
    let p_cr_success = r.root(success_gap, Some(p_cr))?;
    let mut refinement = r.added;
    refinement.sort_by(|a, b| a.p.total_cmp(&b.p));
    let kf = k as f64;
    Ok(CrossoverEstimate {
        p_cr,
        p_cr_success,
        bracket,
        evaluations: refinement.len(),
        c_fit: fits.success.c,
        c_fidelity: fits.fidelity.c,
        k_direct: k,
        naive_c: naive_c(ft_area),
        closed_form: 2.0 * kf / (3.0 * fits.fidelity.c),
        closed_form_success: kf / (3.0 * fits.success.c),
        refinement,
    })
}

#[cfg(test)]
mod tests {
    use super::super::fit::fit_sweep;
    use super::*;

    /// `S_d = 1 - 2p`, `S_ft = 1 - c p^2`, each point squared.
    fn synthetic(p: f64, c: f64) -> SweepPoint {
        let s_direct = 1.0 - 2.0 * p;
        let s_ft = 1.0 - c * p * p;
        SweepPoint {
            p,
            f_direct: s_direct * s_direct,
            f_ft: s_ft * s_ft,
            f_ft_err: 0.0,
            s_direct,
            s_ft,
            s_ft_err: 0.0,
            ft_scenarios: 1,
            ft_cap_reached: false,
            max_trace_error: 0.0,
        }
    }

    fn grid() -> Vec<f64> {
        (0..9).map(|i| 10f64.powf(-6.0 + 0.5 * i as f64)).collect()
    }

    #[test]
    fn synthetic_root_matches_closed_form() {
        let c = 7.7e4;
        let sweep: Vec<SweepPoint> = grid().into_iter().map(|p| synthetic(p, c)).collect();
        let fits = fit_sweep(&sweep, (1e-6, 1e-4), 0.05).unwrap();
        let mut calls = 0;
        let mut eval = |p: f64| {
            calls += 1;
            Ok(synthetic(p, c))
        };
        let est = find_crossover(&sweep, &mut eval, &fits, 6, 720, 1e-6, 20).unwrap();
        // 2p = c p^2 for the unsquared curves.
        let exact = 2.0 / c;
        assert!((est.p_cr_success / exact - 1.0).abs() < 1e-5, "{}", est.p_cr_success);
        assert!((est.p_cr / exact - 1.0).abs() < 1e-3, "{}", est.p_cr);
        assert!(est.bracket.0 < est.p_cr && est.p_cr < est.bracket.1);
        assert_eq!(est.naive_c, 258_840);
        assert!(est.evaluations <= 20);
        assert!(calls == est.evaluations);
    }

    #[test]
    fn no_sign_change_is_an_error() {
        let sweep: Vec<SweepPoint> = grid().into_iter().take(3).map(|p| synthetic(p, 7.7e4)).collect();
        let fits = CoefficientReport {
            success: super::super::fit::QuadraticFit { c: 1.0, window: (0.0, 1.0), points: 4, max_rel_residual: 0.0, tolerance: 0.05 },
            fidelity: super::super::fit::QuadraticFit { c: 1.0, window: (0.0, 1.0), points: 4, max_rel_residual: 0.0, tolerance: 0.05 },
        };
        let mut eval = |p: f64| Ok(synthetic(p, 7.7e4));
        assert!(matches!(find_crossover(&sweep, &mut eval, &fits, 6, 720, 1e-6, 4), Err(Error::NoBracket)));
    }

    #[test]
    fn secant_is_exact_for_log_linear_gaps() {
        let a = synthetic(1e-5, 7.7e4);
        let b = synthetic(1e-4, 7.7e4);
        let x = secant(&a, &b, success_gap);
        assert!(x > 1e-5 && x < 1e-4);
    }
}
