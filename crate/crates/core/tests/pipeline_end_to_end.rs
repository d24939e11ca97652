use std::fs;

use homophily::graph::Perspective;
use homophily::null_models::NullModel;
use homophily::pipeline::{load_dataset, render_tables, run_analysis, write_report, AnalysisConfig, AnalysisReport, NullSelection};
use homophily::synthetic::{erdos_renyi, nearest_opinion};

fn write_fixture(dir: &std::path::Path, f: &homophily::synthetic::Fixture) -> (std::path::PathBuf, std::path::PathBuf) {
    let e = dir.join("edges.csv");
    let o = dir.join("opinions.csv");
    fs::write(&e, f.edges_csv()).unwrap();
    fs::write(&o, f.opinions_csv()).unwrap();
    (e, o)
}

#[test]
fn report_directory_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let (e, o) = write_fixture(dir.path(), &nearest_opinion(300, 8, 4));
    let data = load_dataset(&e, &o, None).unwrap();
    let cfg = AnalysisConfig { trials: 4, master_seed: 3, ..Default::default() };
    let report = run_analysis(&data.graph, &cfg, data.inputs).unwrap();
    let out = dir.path().join("run");
    write_report(&out, &report).unwrap();

    let saved = AnalysisReport::from_json(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(saved, report);
    for (name, body) in render_tables(&saved).unwrap() {
        assert_eq!(fs::read_to_string(out.join(&name)).unwrap(), body, "{name}");
    }
    assert_eq!(saved.inputs.len(), 2);
    assert_eq!(saved.inputs[0].file, "edges.csv");
}

#[test]
fn random_wiring_is_indistinguishable_from_randomized_null() {
    let g = erdos_renyi(1500, 10.0, 8).to_graph().unwrap();
    let cfg = AnalysisConfig { trials: 10, master_seed: 1, null_model: NullSelection::Randomized, ..Default::default() };
    let r = run_analysis(&g, &cfg, vec![]).unwrap();
    let section = r.null(NullModel::Randomized).unwrap();
    for t in &section.tests {
        let d = t.result.as_ref().unwrap().cohens_d;
        assert!(d.abs() < 0.1, "{}: {d}", t.metric);
    }
}

#[test]
fn leader_perspective_and_summary_counts() {
    let g = nearest_opinion(200, 5, 9).to_graph().unwrap();
    let cfg = AnalysisConfig { trials: 2, perspective: Perspective::Leader, ..Default::default() };
    let r = run_analysis(&g, &cfg, vec![]).unwrap();
    assert_eq!(r.dataset.followers, 200);
    assert_eq!(r.dataset.leaders, r.profiles.len());
    assert!(r.profiles.iter().all(|p| p.perspective == Perspective::Leader));
    assert_eq!(r.range_summary.len(), 2);
    let total: u64 = r.histograms.opinion.counts.iter().sum();
    assert_eq!(total, 200);
}

#[test]
fn seed_changes_trials_but_not_empirical_tables() {
    let g = nearest_opinion(150, 6, 2).to_graph().unwrap();
    let a = run_analysis(&g, &AnalysisConfig { trials: 2, master_seed: 1, ..Default::default() }, vec![]).unwrap();
    let b = run_analysis(&g, &AnalysisConfig { trials: 2, master_seed: 2, ..Default::default() }, vec![]).unwrap();
    assert_eq!(a.profiles, b.profiles);
    assert_eq!(a.interaction_matrix, b.interaction_matrix);
    assert_ne!(a.nulls[0].rates, b.nulls[0].rates);
}
