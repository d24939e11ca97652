use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_homophily"))
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/bimodal").join(name)
}

fn analyze(out: &Path, threads: &str, trials: &str, extra: &[&str]) -> Output {
    bin()
        .env("BC_HOMOPHILY_THREADS", threads)
        .args(["analyze", "--edges"])
        .arg(fixture("edges.csv"))
        .arg("--opinions")
        .arg(fixture("opinions.csv"))
        .args(["--perspective", "follower", "--trials", trials, "--seed", "7", "--out"])
        .arg(out)
        .args(extra)
        .output()
        .unwrap()
}

#[test]
fn analyze_is_deterministic_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    assert!(analyze(&a, "1", "20", &[]).status.success());
    assert!(analyze(&b, "8", "20", &[]).status.success());
    assert_eq!(fs::read(a.join("report.json")).unwrap(), fs::read(b.join("report.json")).unwrap());
    for f in ["fig2_gap_hist.csv", "fig3_range_hist.csv", "fig4_rates.csv", "interval_rates.csv", "topology.csv"] {
        assert!(a.join(f).exists(), "{f}");
    }
}

#[test]
fn report_subcommand_reproduces_tables() {
    let dir = tempfile::tempdir().unwrap();
    let run = dir.path().join("run");
    assert!(analyze(&run, "2", "3", &["--null-model", "randomized"]).status.success());
    let again = dir.path().join("again");
    let st = bin().args(["report", "--report"]).arg(run.join("report.json")).arg("--out").arg(&again).status().unwrap();
    assert!(st.success());
    let mut count = 0;
    for entry in fs::read_dir(&again).unwrap() {
        let p = entry.unwrap().path();
        let name = p.file_name().unwrap();
        assert_eq!(fs::read(&p).unwrap(), fs::read(run.join(name)).unwrap(), "{name:?}");
        count += 1;
    }
    assert!(count >= 15);
}

#[test]
fn config_file_values_are_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.ini");
    fs::write(&cfg, "[analysis]\ntrials = 2\nnull_model = randomized\nseed = 1\n").unwrap();
    let out = dir.path().join("o");
    let o = analyze(&out, "1", "20", &["--config", cfg.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report = fs::read_to_string(out.join("report.json")).unwrap();
    assert!(report.contains("\"trials\": 20"));
    assert!(report.contains("\"master_seed\": 7"));
    assert!(report.contains("\"null_model\": \"randomized\""));
}

#[test]
fn usage_errors_exit_2_and_failures_exit_1() {
    assert_eq!(bin().arg("frobnicate").status().unwrap().code(), Some(2));
    assert_eq!(bin().args(["analyze", "--bogus"]).status().unwrap().code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let o = bin()
        .args(["analyze", "--edges", "missing.csv", "--opinions", "missing_too.csv", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("missing.csv"));
}

#[test]
fn help_lists_output_tables() {
    let o = bin().args(["analyze", "--help"]).output().unwrap();
    let text = String::from_utf8_lossy(&o.stdout);
    for f in ["fig2_gap_hist.csv", "fig3_range_hist.csv", "fig4_rates.csv", "residual_matrix", "decay_diagnostics.csv"] {
        assert!(text.contains(f), "{f}");
    }
}

#[test]
fn simulate_emits_fixture_that_analyze_accepts() {
    let dir = tempfile::tempdir().unwrap();
    let sim = dir.path().join("sim");
    let st = bin().args(["simulate", "--agents", "500", "--bounds", "0.05", "--seed", "1", "--out"]).arg(&sim).status().unwrap();
    assert!(st.success());
    let summary = fs::read_to_string(sim.join("simulation.json")).unwrap();
    assert!(summary.contains("\"converged\": true"));
    assert!(fs::read_to_string(sim.join("trajectory.csv")).unwrap().starts_with("step,node,opinion\n"));
    let st = bin()
        .args(["analyze", "--trials", "2", "--edges"])
        .arg(sim.join("edges.csv"))
        .arg("--opinions")
        .arg(sim.join("opinions.csv"))
        .arg("--out")
        .arg(dir.path().join("a"))
        .status()
        .unwrap();
    assert!(st.success());
}

#[test]
fn nulltrials_and_topology_subcommands() {
    let dir = tempfile::tempdir().unwrap();
    let st = bin()
        .args(["nulltrials", "--trials", "2", "--null-model", "both", "--edges"])
        .arg(fixture("edges.csv"))
        .arg("--opinions")
        .arg(fixture("opinions.csv"))
        .arg("--out")
        .arg(dir.path().join("n"))
        .status()
        .unwrap();
    assert!(st.success());
    let rec = fs::read_to_string(dir.path().join("n/trial_range_based_001.json")).unwrap();
    assert!(rec.contains("\"assignments\""));
    assert_eq!(fs::read_dir(dir.path().join("n")).unwrap().count(), 4);

    let st = bin()
        .args(["topology", "--edges"])
        .arg(fixture("edges.csv"))
        .arg("--opinions")
        .arg(fixture("opinions.csv"))
        .arg("--out")
        .arg(dir.path().join("t"))
        .status()
        .unwrap();
    assert!(st.success());
    assert!(fs::read_to_string(dir.path().join("t/topology.csv")).unwrap().starts_with("node,in_deg,out_deg"));
}

#[test]
fn rescale_flag_accepts_negative_range() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("e.csv"), "src,dst\na,b\nb,c\nc,a\na,c\n").unwrap();
    fs::write(dir.path().join("o.csv"), "node,opinion\na,-1\nb,0\nc,1\n").unwrap();
    let o = bin()
        .args(["analyze", "--trials", "1", "--rescale", "-1,1", "--edges"])
        .arg(dir.path().join("e.csv"))
        .arg("--opinions")
        .arg(dir.path().join("o.csv"))
        .arg("--out")
        .arg(dir.path().join("r"))
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let hist = fs::read_to_string(dir.path().join("r/fig2_opinion_hist.csv")).unwrap();
    assert!(hist.lines().nth(1).unwrap().ends_with(",1"));
}
