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


//! Injection studies, fidelity sweeps, coefficient fits and crossover search.

pub mod config;
pub mod crossover;
pub mod emit;
pub mod fit;
pub mod injection;
pub mod sweep;

pub use config::AnalysisConfig;
pub use crossover::{find_crossover, CrossoverEstimate};
pub use fit::{fit_quadratic, fit_sweep, CoefficientReport, QuadraticFit};
pub use injection::{inject_single, InjectionClass, InjectionRecord, InjectionReport};
pub use sweep::{run_sweep, Evaluator, SweepPoint};
