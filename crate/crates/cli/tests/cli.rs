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
use std::process::{Command, Output};

fn ftprep(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ftprep")).arg("--out-dir").arg(dir).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn field(text: &str, key: &str) -> String {
    text.lines().find_map(|l| l.strip_prefix(&format!("{key} = "))).unwrap_or_else(|| panic!("no {key} in {text}")).to_string()
}

/// A sweep document with `S_d = 1 - 2p`, `S_ft = 1 - c p^2`.
fn synthetic_sweep(dir: &Path, c: f64, ps: &[f64]) {
    let pts: Vec<String> = ps
        .iter()
        .map(|&p| {
            let (sd, sf) = (1.0 - 2.0 * p, 1.0 - c * p * p);
            format!(
                r#"{{"p":{p:e},"f_direct":{:e},"f_ft":{:e},"f_ft_err":0.0,"s_direct":{sd:e},"s_ft":{sf:e},"s_ft_err":0.0,"ft_scenarios":1,"ft_cap_reached":false,"max_trace_error":0.0}}"#,
                sd * sd,
                sf * sf
            )
        })
        .collect();
    std::fs::write(dir.join("sweep.json"), format!("[{}]", pts.join(","))).unwrap();
}

#[test]
fn stats_of_both_circuits() {
    let dir = tempfile::tempdir().unwrap();
    let o = ftprep(dir.path(), &["stats", "--circuit", "direct"]);
    assert!(o.status.success());
    let s = stdout(&o);
    assert_eq!((field(&s, "qubits"), field(&s, "depth"), field(&s, "area"), field(&s, "gate_ops")), ("7".into(), "3".into(), "21".into(), "9".into()));
    let s = stdout(&ftprep(dir.path(), &["stats", "--circuit", "ft"]));
    assert_eq!(field(&s, "qubits"), "12");
    assert!(field(&s, "depth").parse::<usize>().unwrap() >= 60);
}

#[test]
fn exported_circuit_loads_back() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("ft.json");
    let first = ftprep(dir.path(), &["stats", "--circuit", "ft", "--export", file.to_str().unwrap()]);
    assert!(first.status.success());
    let again = ftprep(dir.path(), &["--circuit-file", file.to_str().unwrap(), "stats"]);
    assert!(again.status.success(), "{}", String::from_utf8_lossy(&again.stderr));
    for key in ["qubits", "depth", "area", "gate_ops"] {
        assert_eq!(field(&stdout(&first), key), field(&stdout(&again), key));
    }
}

#[test]
fn inject_reports_six_failures() {
    let dir = tempfile::tempdir().unwrap();
    let o = ftprep(dir.path(), &["inject", "--circuit", "direct"]);
    assert!(o.status.success());
    assert_eq!(field(&stdout(&o), "failing_count"), "6");
    let csv = std::fs::read_to_string(dir.path().join("inject_direct.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("step,qubit,pauli,success"));
    assert_eq!(csv.lines().count(), 64);
}

#[test]
fn sweep_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("direct.json");
    assert!(ftprep(dir.path(), &["stats", "--export", file.to_str().unwrap()]).status.success());
    let args = ["--circuit-file", file.to_str().unwrap(), "sweep", "--p", "1e-3", "1e-2"];
    let a = ftprep(dir.path(), &args);
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    let csv_a = std::fs::read(dir.path().join("sweep.csv")).unwrap();
    let b = ftprep(dir.path(), &args);
    assert!(b.status.success());
    assert_eq!(csv_a, std::fs::read(dir.path().join("sweep.csv")).unwrap());
    let text = String::from_utf8(csv_a).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("p,f_direct,f_ft,f_ft_err"));
    for line in lines {
        let v: Vec<&str> = line.split(',').collect();
        assert_eq!(v[1], v[2], "the same circuit on both sides");
    }
}

#[test]
fn fit_c_on_synthetic_sweep() {
    let dir = tempfile::tempdir().unwrap();
    synthetic_sweep(dir.path(), 1e4, &[1e-6, 1e-5, 3e-5, 1e-4]);
    let o = ftprep(dir.path(), &["fit-c"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let c: f64 = field(&stdout(&o), "c").parse().unwrap();
    assert!((c / 1e4 - 1.0).abs() < 1e-3);
    assert!(dir.path().join("fit.txt").exists());
}

#[test]
fn fit_failures_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    synthetic_sweep(dir.path(), 1e4, &[1e-6, 1e-5]);
    assert_eq!(ftprep(dir.path(), &["fit-c"]).status.code(), Some(2));
}

#[test]
fn missing_bracket_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    // With c = 10 the FT curve stays below the direct one over the whole range.
    synthetic_sweep(dir.path(), 10.0, &[1e-6, 1e-5, 3e-5, 1e-4]);
    let o = ftprep(dir.path(), &["crossover"]);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn emit_writes_datasets() {
    let dir = tempfile::tempdir().unwrap();
    synthetic_sweep(dir.path(), 7.7e4, &[1e-6, 1e-5, 1e-4, 1e-3]);
    let o = ftprep(dir.path(), &["emit"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for name in ["sweep.csv", "fidelity.csv", "infidelity.csv"] {
        let text = std::fs::read_to_string(dir.path().join(name)).unwrap();
        assert_eq!(text.lines().count(), 5, "{name}");
    }
}

#[test]
fn bad_inputs_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"p_grid": [1e-3, 1e-4]}"#).unwrap();
    let o = ftprep(dir.path(), &["--config", cfg.to_str().unwrap(), "stats"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("p_grid"));
    assert_eq!(ftprep(dir.path(), &["emit", "--input", "/nonexistent/sweep.json"]).status.code(), Some(1));
}
