use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use troplr::dataset::Dataset;
use troplr::evaluation::{auc, misclassification_rate, two_species_upper_bound};
use troplr::fermat_weber::FwConfig;
use troplr::regression::{fit_two_species, Model, ModelFile};
use troplr::tropical::trop_distance;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_troplr"))
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    bin().current_dir(dir).args(args).output().expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) {
    let out = run_in(dir, args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
}

fn golden_dir(seed: u32) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(format!("seed{seed}"))
}

fn toy(dir: &Path, seed: &str) {
    ok(dir, &["sample", "--center", "0,0,0", "--sigma", "0.5", "--n", "15", "--center1", "3,2,0", "--sigma1", "0.5", "--n1", "15", "--seed", seed, "--out", "toy.csv"]);
}

#[test]
fn golden_outputs_for_three_seeds() {
    for seed in 1..=3u32 {
        let s = seed.to_string();
        let dir = tempfile::tempdir().unwrap();
        let d = dir.path();
        toy(d, &s);
        ok(d, &["fit", "--data", "toy.csv", "--model", "two", "--out", "two.json"]);
        ok(d, &["predict", "--model", "two.json", "--data", "toy.csv", "--out", "predict.csv"]);
        ok(d, &["evaluate", "--model", "two.json", "--data", "toy.csv", "--out", "evaluate.json"]);
        ok(d, &["simulate", "--out-dir", "sim", "--leaves", "4", "--per-class", "5", "--ratios", "1", "--seed", &s]);
        for f in ["toy.csv", "two.json", "predict.csv", "evaluate.json", "sim/r1.csv", "sim/r1.json"] {
            let want = std::fs::read(golden_dir(seed).join(f)).unwrap();
            let got = std::fs::read(d.join(f)).unwrap();
            assert!(want == got, "seed {seed}: {f} differs from the golden copy");
        }
    }
}

#[test]
fn predict_matches_in_process_model() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    toy(d, "7");
    ok(d, &["fit", "--data", "toy.csv", "--model", "two", "--out", "two.json"]);
    ok(d, &["predict", "--model", "two.json", "--data", "toy.csv", "--out", "p.csv"]);
    let ds = Dataset::load(d.join("toy.csv")).unwrap();
    let model = Model::from(fit_two_species(&ds, &FwConfig::default()).unwrap());
    let loaded = ModelFile::load(d.join("two.json")).unwrap();
    assert_eq!(loaded.model, model);
    let text = std::fs::read_to_string(d.join("p.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("row,label,h,probability,class"));
    for (line, x) in lines.zip(ds.points()) {
        let f: Vec<&str> = line.split(',').collect();
        let p: f64 = f[3].parse().unwrap();
        assert!((p - model.predict_proba(x).unwrap()).abs() <= 1e-12);
        assert_eq!(f[4].parse::<u8>().unwrap(), model.classify(x).unwrap());
    }
}

#[test]
fn evaluate_reports_in_process_values() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    toy(d, "8");
    ok(d, &["fit", "--data", "toy.csv", "--model", "two", "--out", "two.json"]);
    ok(d, &["evaluate", "--model", "two.json", "--data", "toy.csv", "--out", "e.json", "--roc", "roc.csv", "--pp", "pp.csv"]);
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(d.join("e.json")).unwrap()).unwrap();
    let ds = Dataset::load(d.join("toy.csv")).unwrap();
    let model = ModelFile::load(d.join("two.json")).unwrap().model;
    let Model::TwoSpecies(m) = &model else { panic!("expected a two-species model") };
    let want_auc = auc(&model.scores(&ds).unwrap(), ds.labels()).unwrap();
    assert_eq!(report["auc"].as_f64().unwrap(), want_auc);
    assert_eq!(report["error"].as_f64().unwrap(), misclassification_rate(&model, &ds).unwrap());
    let bound = two_species_upper_bound(3, trop_distance(&m.omega0, &m.omega1).unwrap(), m.sigma).unwrap();
    assert_eq!(report["two_species_bound"].as_f64().unwrap(), bound);
    assert_eq!(report["radius_fits"].as_array().unwrap().len(), 2);
    let roc = std::fs::read_to_string(d.join("roc.csv")).unwrap();
    assert!(roc.starts_with("threshold,fpr,tpr\ninf,0,0\n"));
    assert!(roc.trim_end().ends_with(",1,1"));
    assert_eq!(std::fs::read_to_string(d.join("pp.csv")).unwrap().lines().count(), 31);
}

#[test]
fn one_species_and_classical_fits_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["sample", "--center", "1,-1,0,2", "--sigma", "0.3", "--n", "40", "--center1", "1,-1,0,2", "--sigma1", "2", "--n1", "40", "--seed", "4", "--out", "s.csv"]);
    for kind in ["one", "classical"] {
        let out = format!("{kind}.json");
        ok(d, &["fit", "--data", "s.csv", "--model", kind, "--out", &out]);
        let mf = ModelFile::load(d.join(&out)).unwrap();
        assert_eq!(mf.e, 4);
        let again = ModelFile::from_json(&mf.to_json().unwrap()).unwrap();
        assert_eq!(again, mf);
    }
    ok(d, &["evaluate", "--model", "one.json", "--data", "s.csv", "--out", "e.json"]);
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(d.join("e.json")).unwrap()).unwrap();
    assert_eq!(report["model"], "one_species");
    assert!(report["one_species_error"]["mean"]["lo"].as_f64().is_some());
}

#[test]
fn tree_inputs_and_chain_diagnostics() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["simulate", "--out-dir", "sim", "--leaves", "5", "--per-class", "40", "--ratios", "3", "--seed", "2", "--newick"]);
    ok(d, &["fit", "--class0", "sim/r3_class0.nwk", "--class1", "sim/r3_class1.nwk", "--model", "two", "--out", "m.json"]);
    let mf = ModelFile::load(d.join("m.json")).unwrap();
    assert_eq!(mf.e, 10);
    assert_eq!(mf.leaf_order.as_ref().unwrap().len(), 5);
    ok(d, &["predict", "--model", "m.json", "--data", "sim/r3.csv", "--out", "p.csv"]);

    let nexus = |path: &str, trees: &str| {
        let mut s = String::from("#NEXUS\nbegin trees;\n");
        for (i, t) in trees.lines().enumerate() {
            s.push_str(&format!("  tree gen.{} = {t}\n", (i + 1) * 10));
        }
        s.push_str("end;\n");
        std::fs::write(d.join(path), s).unwrap();
    };
    let trees = std::fs::read_to_string(d.join("sim/r3_class0.nwk")).unwrap();
    nexus("a.nex", &trees);
    nexus("b.nex", &trees);
    ok(d, &["diagnose-chains", "--chain-a", "a.nex", "--chain-b", "b.nex", "--diagnfreq", "100", "--out", "diag.csv"]);
    let diag = std::fs::read_to_string(d.join("diag.csv")).unwrap();
    let rows: Vec<&str> = diag.lines().collect();
    assert_eq!(rows[0], "iteration,asdsf,auc");
    assert_eq!(rows.len(), 5);
    for r in &rows[1..] {
        let f: Vec<&str> = r.split(',').collect();
        assert_eq!(f[1], "0");
        if !f[2].is_empty() {
            assert!(f[2].parse::<f64>().unwrap() <= 0.8);
        }
    }
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(run_in(d, &["fit", "--bogus"]).status.code(), Some(1));
    assert_eq!(run_in(d, &["no-such-command"]).status.code(), Some(1));
    assert_eq!(run_in(d, &["fit", "--model", "two"]).status.code(), Some(1));
    assert_eq!(run_in(d, &["sample", "--center", "0,0,0", "--sigma", "-1", "--n", "3"]).status.code(), Some(1));
    assert_eq!(run_in(d, &["simulate", "--out-dir", "x", "--leaves", "3"]).status.code(), Some(1));
    assert_eq!(run_in(d, &["--help"]).status.code(), Some(0));

    let missing = run_in(d, &["fit", "--data", "missing.csv", "--model", "two"]);
    assert_eq!(missing.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&missing.stderr).contains("missing.csv"));

    std::fs::write(d.join("bad.csv"), "label,x_1,x_2,x_3\n0,1,2,0\n3,1,2,0\n").unwrap();
    let bad = run_in(d, &["fit", "--data", "bad.csv", "--model", "two"]);
    assert_eq!(bad.status.code(), Some(2));
    let msg = String::from_utf8_lossy(&bad.stderr);
    assert!(msg.contains("bad.csv") && msg.contains("line 3"), "{msg}");

    std::fs::write(d.join("one.csv"), "label,x_1,x_2,x_3\n1,1,2,0\n1,0,2,0\n").unwrap();
    assert_eq!(run_in(d, &["fit", "--data", "one.csv", "--model", "one"]).status.code(), Some(2));

    std::fs::write(d.join("t.nwk"), "((A:1,B:1):1,C:2);\n((A:1,B:1):1,C:2;\n").unwrap();
    let tree_err = run_in(d, &["diagnose-chains", "--chain-a", "t.nwk", "--chain-b", "t.nwk", "--diagnfreq", "1"]);
    assert_eq!(tree_err.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&tree_err.stderr).contains("t.nwk"));
}

#[test]
fn simulate_writes_full_size_columns() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["simulate", "--out-dir", "s", "--leaves", "10", "--per-class", "1", "--ratios", "0.5", "--seed", "9"]);
    let ds = Dataset::load(d.join("s/r0.5.csv")).unwrap();
    assert_eq!((ds.dim(), ds.len()), (45, 2));
    let meta: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(d.join("s/r0.5.json")).unwrap()).unwrap();
    assert_eq!(meta["species_depth"].as_f64().unwrap(), 0.5);
}
