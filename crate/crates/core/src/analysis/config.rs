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


use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dm::{BackendKind, EngineConfig};
use crate::error::{Error, Result};
use crate::scenario::ScenarioSettings;
use crate::steane::{CatLayout, FtOptions};

/// Settings for every analysis command, read from a JSON file.
///
/// Missing fields take their defaults, unknown fields are rejected.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisConfig {
    pub p_grid: Vec<f64>,
    pub mass_target: f64,
    pub max_scenarios: usize,
    pub leaf_size: usize,
    pub prune_tol: f64,
    pub backend: BackendKind,
    /// Always true: nothing in the engine draws random numbers.
    pub seedless: bool,
    /// Stop a scenario search once the unexplored mass falls below this
    /// fraction of the failure probability seen so far.
    pub relative_residual: Option<f64>,
    /// Checkpoint budget in bytes.
    pub memory_cap: usize,
    pub fit_window: [f64; 2],
    /// Largest relative residual accepted by the quadratic fit.
    pub fit_tolerance: f64,
    pub cat_layout: CatLayout,
    pub max_retries: u32,
    /// Relative width in `p` at which the crossover search stops.
    pub crossover_tolerance: f64,
    pub crossover_max_evaluations: usize,
    /// Worker threads for sweeps; `None` uses every core.
    pub threads: Option<usize>,
}

/// `n` values spaced evenly in `log10 p` between `lo` and `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let (a, b) = (lo.log10(), hi.log10());
            (0..n).map(|i| 10f64.powf(a + (b - a) * i as f64 / (n - 1) as f64)).collect()
        }
    }
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        let engine = EngineConfig::default();
        let scenario = ScenarioSettings::default();
        AnalysisConfig {
            p_grid: log_grid(1e-6, 1e-2, 12),
            mass_target: 1.0 - 1e-12,
            max_scenarios: 2_000,
            leaf_size: engine.leaf_size,
            prune_tol: engine.prune_tol,
            backend: engine.backend,
            seedless: true,
            relative_residual: Some(1e-2),
            memory_cap: scenario.memory_cap,
            fit_window: [1e-6, 1e-4],
            fit_tolerance: 0.05,
            cat_layout: CatLayout::default(),
            max_retries: FtOptions::default().max_retries,
            crossover_tolerance: 1e-3,
            crossover_max_evaluations: 8,
            threads: None,
        }
    }
}

impl AnalysisConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: AnalysisConfig = serde_json::from_str(text).map_err(|e| Error::json("analysis config", e))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg: AnalysisConfig = serde_json::from_str(&text).map_err(|e| Error::json(path.display().to_string(), e))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if !self.seedless {
            return Err(Error::Config("`seedless` must be true: the engine has no random source".into()));
        }
        for w in self.p_grid.windows(2) {
            if !(w[0] < w[1]) {
                return Err(Error::Config(format!("p_grid must be strictly increasing, got {} then {}", w[0], w[1])));
            }
        }
        if let Some(&p) = self.p_grid.iter().find(|&&p| !(p > 0.0 && p < 1.0)) {
            return Err(Error::Config(format!("p_grid value {p} outside (0, 1)")));
        }
        let [lo, hi] = self.fit_window;
        if !(lo > 0.0 && lo < hi) {
            return Err(Error::Config(format!("fit window [{lo}, {hi}] is empty")));
        }
        if !(self.fit_tolerance > 0.0) {
            return Err(Error::Config("fit_tolerance must be positive".into()));
        }
        if !(self.crossover_tolerance > 0.0) || self.crossover_max_evaluations == 0 {
            return Err(Error::Config("crossover search needs a positive tolerance and at least one evaluation".into()));
        }
        if let Some(r) = self.relative_residual {
            if !(r > 0.0) {
                return Err(Error::Config(format!("relative_residual {r} must be positive")));
            }
        }
        if self.threads == Some(0) {
            return Err(Error::Config("threads must be at least 1".into()));
        }
        self.engine().validate()?;
        self.scenario_settings().validate()
    }

    pub fn engine(&self) -> EngineConfig {
        EngineConfig { backend: self.backend, leaf_size: self.leaf_size, prune_tol: self.prune_tol, ..EngineConfig::default() }
    }

    pub fn scenario_settings(&self) -> ScenarioSettings {
        ScenarioSettings {
            mass_target: self.mass_target,
            max_scenarios: self.max_scenarios,
            memory_cap: self.memory_cap,
            relative_residual: self.relative_residual,
            ..ScenarioSettings::default()
        }
    }

    pub fn ft_options(&self) -> FtOptions {
        FtOptions { cat_layout: self.cat_layout, max_retries: self.max_retries }
    }

    pub fn fit_window(&self) -> (f64, f64) {
        (self.fit_window[0], self.fit_window[1])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_grid_spans_four_decades() {
        let g = AnalysisConfig::default().p_grid;
        assert_eq!(g.len(), 12);
        assert!((g[0] - 1e-6).abs() < 1e-18 && (g[11] - 1e-2).abs() < 1e-14);
        let ratio = g[1] / g[0];
        for w in g.windows(2) {
            assert!((w[1] / w[0] - ratio).abs() < 1e-9);
        }
    }

    #[test]
    fn partial_file_keeps_defaults() {
        let cfg = AnalysisConfig::from_json(r#"{"p_grid": [1e-5, 1e-4], "backend": "dense", "seedless": true}"#).unwrap();
        assert_eq!(cfg.p_grid, vec![1e-5, 1e-4]);
        assert_eq!(cfg.engine().backend, BackendKind::Dense);
        assert_eq!(cfg.leaf_size, 4);
    }

    #[test]
    fn rejects_bad_files() {
        for text in [
            r#"{"p_grid": [1e-4, 1e-5]}"#,
            r#"{"p_grid": [0.0]}"#,
            r#"{"seedless": false}"#,
            r#"{"leaf_size": 3}"#,
            r#"{"unknown": 1}"#,
            r#"{"fit_window": [1e-4, 1e-6]}"#,
        ] {
            assert!(AnalysisConfig::from_json(text).is_err(), "{text}");
        }
    }
}
