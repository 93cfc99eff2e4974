use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn kronmom(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kronmom"))
        .args(args)
        .env_remove("KRONMOM_THREADS")
        .output()
        .unwrap()
}

fn json(out: &Output) -> Value {
    assert!(
        out.status.success(),
        "exit {:?}: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).unwrap()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name)
}

#[test]
fn features_of_a_triangle() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("k3.txt");
    std::fs::write(&path, "# K3\n1 2\n2 3\n3 1\n").unwrap();
    let v = json(&kronmom(&["features", path_str(&path)]));
    assert_eq!(
        v,
        serde_json::json!({"vertices": 3, "edges": 3, "hairpins": 3, "tripins": 0, "triangles": 1})
    );
}

#[test]
fn features_of_an_empty_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("empty.txt");
    std::fs::write(&path, "").unwrap();
    let v = json(&kronmom(&["features", path_str(&path)]));
    for key in ["vertices", "edges", "hairpins", "tripins", "triangles"] {
        assert_eq!(v[key], 0, "{key}");
    }
}

#[test]
fn expected_counts() {
    let v = json(&kronmom(&[
        "expected", "--a", "1", "--b", "1", "--c", "1", "--r", "2",
    ]));
    assert_eq!(v["edges"], 6.0);
    assert_eq!(v["hairpins"], 12.0);
    assert_eq!(v["tripins"], 4.0);
    assert_eq!(v["triangles"], 4.0);

    let v = json(&kronmom(&[
        "expected", "--a", "0.9", "--b", "0", "--c", "0.4", "--r", "9",
    ]));
    assert_eq!(v["edges"], 0.0);
    assert_eq!(v["triangles"], 0.0);
}

#[test]
fn fit_accepts_counts_or_edge_list() {
    let dir = tempfile::tempdir().unwrap();
    let graph = dir.path().join("g.txt");
    let out = kronmom(&[
        "generate",
        "--a",
        "0.95",
        "--b",
        "0.55",
        "--c",
        "0.3",
        "--r",
        "9",
        "--seed",
        "4",
        "--out",
        path_str(&graph),
    ]);
    assert!(out.status.success());
    let counts_out = kronmom(&["features", path_str(&graph)]);
    let counts = dir.path().join("g.json");
    std::fs::write(&counts, &counts_out.stdout).unwrap();

    let fit_args = ["--method", "grid", "--grid-points", "20", "--r", "9"];
    let mut from_graph = vec!["fit", path_str(&graph)];
    from_graph.extend(fit_args);
    let mut from_counts = vec!["fit", path_str(&counts)];
    from_counts.extend(fit_args);
    let x = json(&kronmom(&from_graph));
    let y = json(&kronmom(&from_counts));
    assert_eq!(x["params"], y["params"]);
    assert_eq!(x["objective_value"], y["objective_value"]);
    assert_eq!(x["observed"], y["observed"]);
}

#[test]
fn partial_fit_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("fit.csv");
    let grqc = fixture("ca-GrQc.json");
    let v = json(&kronmom(&[
        "fit",
        path_str(&grqc),
        "--features",
        "edges,hairpins,tripins",
        "--starts",
        "10",
        "--grid-points",
        "20",
        "--csv",
        path_str(&csv),
    ]));
    assert_eq!(v["method"], "best");
    assert_eq!(v["held_out"]["feature"], "triangles");
    assert_eq!(v["params"]["r"], 13);
    assert!(v["objective_value"].as_f64().unwrap() < 0.05);
    let table = std::fs::read_to_string(&csv).unwrap();
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(
        lines[0],
        "fit_type,a,b,c,verts,edges,hairpins,tripins,triangles,objective,seconds"
    );
    assert!(lines[1].starts_with("Source,,,,5242,"));
    assert!(lines[2].contains("-Triangles"));
}

#[test]
fn generate_writes_sorted_edge_list() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("g.txt");
    let out = kronmom(&[
        "generate",
        "--a",
        "1",
        "--b",
        "1",
        "--c",
        "1",
        "--r",
        "3",
        "--out",
        path_str(&path),
    ]);
    assert!(out.status.success());
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.lines().next().unwrap().starts_with('#'));
    let edges: Vec<(u32, u32)> = text
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| {
            let (u, v) = l.split_once('\t').unwrap();
            (u.parse().unwrap(), v.parse().unwrap())
        })
        .collect();
    assert_eq!(edges.len(), 28);
    assert!(edges.iter().all(|(u, v)| u < v));
    assert!(edges.windows(2).all(|w| w[0] < w[1]));
}

#[test]
fn experiment_writes_tables() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::copy(fixture("ca-GrQc.json"), dir.path().join("grqc.json")).unwrap();
    let config = dir.path().join("exp.toml");
    std::fs::write(
        &config,
        r#"
seed = 3
starts = 5
grid_points = 10

[[synthetic]]
name = "small"
a = 0.99
b = 0.48
c = 0.25
r = 8
replications = 2
methods = ["direct"]

[[graph]]
name = "grqc"
path = "grqc.json"
r = 13
methods = ["leading"]
"#,
    )
    .unwrap();
    let out_dir = dir.path().join("out");
    let out = kronmom(&["experiment", path_str(&config), "--out", path_str(&out_dir)]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    for name in [
        "fits.csv",
        "feature_errors.csv",
        "feature_samples.csv",
        "summary.csv",
        "table.csv",
    ] {
        assert!(out_dir.join(name).exists(), "{name}");
    }
    let fits = std::fs::read_to_string(out_dir.join("fits.csv")).unwrap();
    assert_eq!(fits.lines().count(), 1 + 1 + 2);
}

#[test]
fn user_errors_exit_with_one() {
    let code = |out: Output| out.status.code();
    assert_eq!(code(kronmom(&["features", "/no/such/file.txt"])), Some(1));
    assert_eq!(
        code(kronmom(&[
            "expected", "--a", "1.5", "--b", "0", "--c", "0", "--r", "2"
        ])),
        Some(1)
    );
    let grqc = fixture("ca-GrQc.json");
    assert_eq!(
        code(kronmom(&["fit", path_str(&grqc), "--objective", "dabs-f2"])),
        Some(1)
    );
    assert_eq!(
        code(kronmom(&[
            "fit",
            path_str(&grqc),
            "--features",
            "edges,triangles"
        ])),
        Some(1)
    );
    assert_eq!(code(kronmom(&["no-such-command"])), Some(1));
    let bad_threads = Command::new(env!("CARGO_BIN_EXE_kronmom"))
        .args(["expected", "--a", "1", "--b", "1", "--c", "1", "--r", "1"])
        .env("KRONMOM_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(bad_threads.status.code(), Some(1));
    assert_eq!(code(kronmom(&["--help"])), Some(0));
}

#[test]
fn infeasible_leading_fit_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let counts = dir.path().join("cycle.json");
    std::fs::write(
        &counts,
        r#"{"vertices":100,"edges":100,"hairpins":100,"tripins":0,"triangles":1}"#,
    )
    .unwrap();
    let out = kronmom(&["fit", path_str(&counts), "--method", "leading"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("do not have real valued solutions"));
}
