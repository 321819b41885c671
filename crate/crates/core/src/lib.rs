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

//! Density-matrix simulation of direct and fault-tolerant preparation of the
//! Steane logical zero state.

pub mod analysis;
pub mod circuit;
pub mod dm;
pub mod error;
pub mod noise;
pub mod scenario;
pub mod steane;

pub use error::{Error, Result};
