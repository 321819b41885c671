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


use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

use super::crossover::CrossoverEstimate;
use super::SweepPoint;

pub const SWEEP_HEADER: &str = "p,f_direct,f_ft,f_ft_err";

/// The four CSV columns of a sweep point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FidelityRow {
    pub p: f64,
    pub f_direct: f64,
    pub f_ft: f64,
    pub f_ft_err: f64,
}

impl From<&SweepPoint> for FidelityRow {
    fn from(pt: &SweepPoint) -> Self {
        FidelityRow { p: pt.p, f_direct: pt.f_direct, f_ft: pt.f_ft, f_ft_err: pt.f_ft_err }
    }
}

pub fn sweep_csv(points: &[SweepPoint]) -> String {
    let mut out = format!("{SWEEP_HEADER}\n");
    for pt in points {
        let _ = writeln!(out, "{:.16e},{:.16e},{:.16e},{:.16e}", pt.p, pt.f_direct, pt.f_ft, pt.f_ft_err);
    }
    out
}

pub fn parse_sweep_csv(text: &str) -> Result<Vec<FidelityRow>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim() == SWEEP_HEADER => {}
        other => return Err(Error::Parse(format!("expected header `{SWEEP_HEADER}`, found {other:?}"))),
    }
    let mut rows = Vec::new();
    for (n, line) in lines.enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let vals: Vec<f64> = line
            .split(',')
            .map(|f| f.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Parse(format!("line {}: {e}", n + 2)))?;
        let [p, f_direct, f_ft, f_ft_err] = vals[..] else {
            return Err(Error::Parse(format!("line {}: expected 4 fields, found {}", n + 2, vals.len())));
        };
        rows.push(FidelityRow { p, f_direct, f_ft, f_ft_err });
    }
    Ok(rows)
}

/// Fidelity against `p` with the FT uncertainty band.
pub fn fidelity_csv(points: &[SweepPoint]) -> String {
    let mut out = String::from("p,f_direct,f_ft,f_ft_lo,f_ft_hi\n");
    for pt in points {
        let _ = writeln!(out, "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}", pt.p, pt.f_direct, pt.f_ft, pt.f_ft - pt.f_ft_err, pt.f_ft + pt.f_ft_err);
    }
    out
}

/// Infidelity against `p` on log axes, with the two leading-order models
/// when a crossover report is available.
pub fn infidelity_csv(points: &[SweepPoint], report: Option<&CrossoverEstimate>) -> String {
    let mut out = String::from("p,infid_direct,infid_ft,infid_ft_err");
    if report.is_some() {
        out.push_str(",model_direct,model_ft");
    }
    out.push('\n');
    for pt in points {
        let _ = write!(out, "{:.16e},{:.16e},{:.16e},{:.16e}", pt.p, 1.0 - pt.f_direct, 1.0 - pt.f_ft, pt.f_ft_err);
        if let Some(r) = report {
            let _ = write!(out, ",{:.16e},{:.16e}", 2.0 * r.k_direct as f64 / 3.0 * pt.p, r.c_fidelity * pt.p * pt.p);
        }
        out.push('\n');
    }
    out
}

pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}

pub fn read_sweep_json(path: &Path) -> Result<Vec<SweepPoint>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::json(path.display().to_string(), e))
}

/// Writes the sweep CSV, the JSON record and both plot datasets into `dir`.
pub fn emit_all(dir: &Path, points: &[SweepPoint], report: Option<&CrossoverEstimate>) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut pts = points.to_vec();
    if let Some(r) = report {
        pts.extend(r.refinement.iter().cloned());
        pts.sort_by(|a, b| a.p.total_cmp(&b.p));
    }
    let json = serde_json::to_string_pretty(points).expect("sweep serializes");
    let mut files = vec![
        (dir.join("sweep.csv"), sweep_csv(points)),
        (dir.join("sweep.json"), json),
        (dir.join("fidelity.csv"), fidelity_csv(points)),
        (dir.join("infidelity.csv"), infidelity_csv(&pts, report)),
    ];
    if let Some(r) = report {
        files.push((dir.join("crossover.txt"), r.text()));
    }
    for (path, body) in &files {
        write_file(path, body)?;
    }
    Ok(files.into_iter().map(|(p, _)| p).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn point(p: f64) -> SweepPoint {
        SweepPoint {
            p,
            f_direct: 1.0 - 4.0 * p,
            f_ft: 1.0 - 1.0 / 3.0 * p,
            f_ft_err: p * 1e-7,
            s_direct: 1.0 - 2.0 * p,
            s_ft: 1.0 - p / 6.0,
            s_ft_err: p * 1e-7,
            ft_scenarios: 3,
            ft_cap_reached: false,
            max_trace_error: 0.0,
        }
    }

    #[test]
    fn empty_sweep_is_header_only() {
        assert_eq!(sweep_csv(&[]), format!("{SWEEP_HEADER}\n"));
        assert!(parse_sweep_csv(&sweep_csv(&[])).unwrap().is_empty());
    }

    #[test]
    fn csv_reparses_exactly() {
        let pts: Vec<SweepPoint> = [1.234567890123e-6, std::f64::consts::PI * 1e-3, 0.1].iter().map(|&p| point(p)).collect();
        let rows = parse_sweep_csv(&sweep_csv(&pts)).unwrap();
        let want: Vec<FidelityRow> = pts.iter().map(FidelityRow::from).collect();
        assert_eq!(rows, want);
    }

    #[test]
    fn malformed_csv() {
        assert!(parse_sweep_csv("p,f\n").is_err());
        assert!(parse_sweep_csv(&format!("{SWEEP_HEADER}\n1,2,3\n")).is_err());
        assert!(parse_sweep_csv(&format!("{SWEEP_HEADER}\n1,2,x,4\n")).is_err());
    }

    #[test]
    fn io_errors_name_the_path() {
        let err = write_file(Path::new("/nonexistent-dir/x.csv"), "").unwrap_err();
        assert!(err.to_string().contains("/nonexistent-dir/x.csv"));
    }
}
