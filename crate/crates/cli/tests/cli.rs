use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use cfs_cli::system_file::{Provenance, SystemFile};
use cfs_core::diracsea::WeightConvention;
use cfs_core::geometry;
use cfs_core::measure::Atom;
use cfs_core::spectral;
use cfs_core::{CMatrix, DiscreteMeasure, OperatorPoint, C64};

fn cfs(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cfs"))
        .args(args)
        .env_remove("CFS_THREADS")
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn value(text: &str, key: &str) -> f64 {
    text.lines()
        .find_map(|l| l.strip_prefix(&format!("{key} = ")))
        .unwrap_or_else(|| panic!("no `{key}` in output:\n{text}"))
        .parse()
        .unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn build_small(dir: &Path, name: &str) -> std::path::PathBuf {
    let out = dir.join(name);
    let run = cfs(&["build-vacuum", "--eps", "1.0", "--nt", "2", "--ns", "2", "--mass", "1.0", "--out", p(&out)]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    out
}

#[test]
fn build_vacuum_counts_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let a = build_small(dir.path(), "a.json");
    let b = build_small(dir.path(), "b.json");
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    let file = SystemFile::load(&a).unwrap();
    assert_eq!(file.atoms.len(), 16);
    assert_eq!(file.metadata.hilbert_dim, 16);
    assert_eq!(file.metadata.spin_dim, 2);
}

#[test]
fn invalid_extent_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x.json");
    let run = cfs(&["build-vacuum", "--eps", "1.0", "--nt", "2", "--ns", "1", "--mass", "1.0", "--out", p(&out)]);
    assert_eq!(run.status.code(), Some(2));
    assert!(!out.exists());
    let run = cfs(&["build-vacuum", "--eps", "1.0", "--nt", "2", "--ns", "2", "--mass", "1.0", "--out", p(&out), "--remove-mode", "5,0,0;1"]);
    assert_eq!(run.status.code(), Some(2));
    let run = cfs(&["build-vacuum", "--eps", "nope", "--nt", "2", "--ns", "2", "--mass", "1.0", "--out", p(&out)]);
    assert_eq!(run.status.code(), Some(2));
}

#[test]
fn occupation_edits_are_recorded() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("e.json");
    let run = cfs(&[
        "build-vacuum", "--eps", "1.0", "--nt", "2", "--ns", "2", "--mass", "1.0",
        "--remove-mode", "0,0,0;1", "--add-mode", "1,0,0;2", "--out", p(&out),
    ]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let file = SystemFile::load(&out).unwrap();
    let Provenance::Lattice { edits, .. } = &file.metadata.provenance else { panic!() };
    assert_eq!(edits.remove.len(), 1);
    assert_eq!(edits.add.len(), 1);
    assert_eq!(file.metadata.hilbert_dim, 16);
}

#[test]
fn classify_all_pairs_and_repeat() {
    let dir = tempfile::tempdir().unwrap();
    let sys = build_small(dir.path(), "v.json");
    let csv1 = dir.path().join("a.csv");
    let csv2 = dir.path().join("b.csv");
    let run = cfs(&["classify", "--sys", p(&sys), "--pairs", "all", "--out", p(&csv1)]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let text = fs::read_to_string(&csv1).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "ix,iy,xi0,xi1,xi2,xi3,xi_sq,class_spectral,class_minkowski,lagrangian,eig_discrepancy,in_band"
    );
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 256);
    // Purely spatial separation (0, 1, 0, 0).
    let spatial = rows
        .iter()
        .find(|r| r[2] == "0" && r[3] == "1" && r[4] == "0" && r[5] == "0")
        .unwrap();
    assert_eq!(spatial[7], "spacelike");
    assert!(spatial[9].parse::<f64>().unwrap().abs() <= 1e-12);

    let run = cfs(&["classify", "--sys", p(&sys), "--pairs", "sample", "40", "--seed", "9", "--out", p(&csv1)]);
    assert!(run.status.success());
    let run = cfs(&["classify", "--sys", p(&sys), "--pairs", "sample", "40", "--seed", "9", "--out", p(&csv2)]);
    assert!(run.status.success());
    assert_eq!(fs::read(&csv1).unwrap(), fs::read(&csv2).unwrap());
    assert_eq!(fs::read_to_string(&csv1).unwrap().lines().count(), 41);
}

#[test]
fn classify_requires_lattice_provenance() {
    let dir = tempfile::tempdir().unwrap();
    let sys = dir.path().join("s.json");
    write_single_atom(&sys);
    let run = cfs(&["classify", "--sys", p(&sys), "--out", p(&dir.path().join("o.csv"))]);
    assert_eq!(run.status.code(), Some(2));
}

fn write_single_atom(path: &Path) {
    let x = OperatorPoint::from_factors(CMatrix::identity(2, 2), vec![2.0, -1.0], 1).unwrap();
    let rho = DiscreteMeasure::new(vec![Atom::new(x, 1.0)]).unwrap();
    SystemFile::from_measure(&rho, Provenance::abstract_(), WeightConvention::Counting)
        .save(path)
        .unwrap();
}

#[test]
fn action_on_small_files() {
    let dir = tempfile::tempdir().unwrap();
    let single = dir.path().join("single.json");
    write_single_atom(&single);
    let run = cfs(&["action", "--sys", p(&single)]);
    assert!(run.status.success());
    let text = stdout(&run);
    assert!(text.contains("S = 4.50000000000000e0"), "{text}");
    assert_eq!(value(&text, "volume"), 1.0);
    assert_eq!(value(&text, "trace"), 1.0);

    // Orthogonal ranges: cross terms vanish, S is the sum of diagonal terms.
    let e = |i: usize| {
        let mut m = CMatrix::zeros(3, 1);
        m[(i, 0)] = C64::new(1.0, 0.0);
        m
    };
    let a = OperatorPoint::from_factors(e(0), vec![1.5], 1).unwrap();
    let b = OperatorPoint::from_factors(e(2), vec![0.5], 1).unwrap();
    let rho = DiscreteMeasure::new(vec![Atom::new(a, 2.0), Atom::new(b, 3.0)]).unwrap();
    let ortho = dir.path().join("ortho.json");
    SystemFile::from_measure(&rho, Provenance::abstract_(), WeightConvention::Counting)
        .save(&ortho)
        .unwrap();
    let run = cfs(&["action", "--sys", p(&ortho), "--report-constraints"]);
    let text = stdout(&run);
    // n = 1, rank-one atom nu: L(x, x) = nu^4 - nu^4 / 2.
    let expected = 4.0 * 1.5f64.powi(4) / 2.0 + 9.0 * 0.5f64.powi(4) / 2.0;
    assert!((value(&text, "S") - expected).abs() <= 1e-14 * expected);
    assert!(text.contains("max positive eigenvalues = 1 (bound 1)"));
}

#[test]
fn vacuum_action_matches_chain_oracle_and_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let sys = build_small(dir.path(), "v.json");
    let rho = SystemFile::load(&sys).unwrap().to_measure().unwrap();
    let atoms = rho.atoms();
    let mut oracle = 0.0;
    for a in atoms {
        for b in atoms {
            let chain = geometry::closed_chain(&a.point, &b.point).unwrap();
            oracle += a.weight * b.weight * spectral::lagrangian(&chain.eigenvalues);
        }
    }
    let mut outputs = Vec::new();
    for threads in ["1", "2", "8"] {
        let run = cfs(&["--threads", threads, "action", "--sys", p(&sys)]);
        assert!(run.status.success());
        outputs.push(stdout(&run));
    }
    assert_eq!(outputs[0], outputs[1]);
    assert_eq!(outputs[0], outputs[2]);
    let s = value(&outputs[0], "S");
    assert!((s - oracle).abs() <= 1e-9 * oracle.abs(), "{s} vs {oracle}");
}

fn write_config(dir: &Path, body: &str) -> std::path::PathBuf {
    let path = dir.join("run.toml");
    fs::write(&path, body).unwrap();
    path
}

#[test]
fn minimize_rank_one_pair() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "family = \"rank-one-pair\"\nvolume_target = 2.0\ntrace_target = 1.0\n[budget]\nproposals = 400\n",
    );
    let log1 = dir.path().join("l1.csv");
    let log2 = dir.path().join("l2.csv");
    let best = dir.path().join("best.json");
    let run = cfs(&["minimize", "--config", p(&cfg), "--out-log", p(&log1), "--out-best", p(&best), "--seed", "4"]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let s = value(&stdout(&run), "best S");
    assert!((s - 1.0 / 16.0).abs() <= 1e-4);

    let again = cfs(&["action", "--sys", p(&best)]);
    assert!((value(&stdout(&again), "S") - s).abs() <= 1e-12 * s);

    let run = cfs(&["minimize", "--config", p(&cfg), "--out-log", p(&log2), "--out-best", p(&best), "--seed", "4"]);
    assert!(run.status.success());
    assert_eq!(fs::read(&log1).unwrap(), fs::read(&log2).unwrap());
}

#[test]
fn minimize_zero_budget_and_infeasible() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("l.csv");
    let best = dir.path().join("b.json");
    let cfg = write_config(
        dir.path(),
        "family = \"two-atom\"\n[budget]\nproposals = 0\npolish_iterations = 0\n",
    );
    let run = cfs(&["minimize", "--config", p(&cfg), "--out-log", p(&log), "--out-best", p(&best)]);
    assert!(run.status.success());
    assert!(stdout(&run).contains("status = budget exhausted"));
    assert_eq!(fs::read_to_string(&log).unwrap().lines().count(), 2);

    let cfg = write_config(dir.path(), "family = \"two-atom\"\ntrace_target = 1.0\nbound = 1e-9\n");
    let run = cfs(&["minimize", "--config", p(&cfg), "--out-log", p(&log), "--out-best", p(&best)]);
    assert_eq!(run.status.code(), Some(4));

    let cfg = write_config(dir.path(), "family = \"two-atom\"\nvolume_target = -1.0\n");
    let run = cfs(&["minimize", "--config", p(&cfg), "--out-log", p(&log), "--out-best", p(&best)]);
    assert_eq!(run.status.code(), Some(2));
}
