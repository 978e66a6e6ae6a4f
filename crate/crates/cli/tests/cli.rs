use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use abduce_cli::model::{parse_bayesnet_file, parse_waodag_file};
use abduce_core::compare::same_up_to_ties;
use serde_json::Value;

fn models() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("models")
}

fn tony() -> String {
    models().join("tony.waodag.json").display().to_string()
}

fn abc() -> String {
    models().join("abc.bn.json").display().to_string()
}

fn exec(bin: &str, args: &[&str]) -> Output {
    Command::new(bin)
        .args(args)
        .env_remove("ABDUCE_LOG")
        .output()
        .expect("binary runs")
}

fn abduce(args: &[&str]) -> Output {
    exec(env!("CARGO_BIN_EXE_abduce"), args)
}

fn mpe(args: &[&str]) -> Output {
    exec(env!("CARGO_BIN_EXE_mpe"), args)
}

fn lines(out: &Output) -> Vec<Value> {
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout.clone())
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

fn field(records: &[Value], name: &str) -> Vec<f64> {
    records.iter().map(|r| r[name].as_f64().unwrap()).collect()
}

#[test]
fn solve_tony() {
    let out = lines(&abduce(&["solve", &tony()]));
    assert_eq!(out.len(), 1);
    assert_eq!(out[0]["rank"], 1);
    assert_eq!(out[0]["cost"], 8);
    assert_eq!(out[0]["hypotheses"], serde_json::json!(["Tony-out"]));
    assert_eq!(out[0]["assignment"]["phone-noanswer"], true);
    assert!(out[0].get("probability").is_none());
}

#[test]
fn enumerate_tony_modes() {
    let all = lines(&abduce(&["enumerate", &tony(), "--k", "all"]));
    assert_eq!(field(&all, "cost"), vec![8.0, 9.0, 12.0, 13.0, 17.0]);
    assert_eq!(field(&all, "rank"), vec![1.0, 2.0, 3.0, 4.0, 5.0]);
    let cardinal = lines(&abduce(&[
        "enumerate",
        &tony(),
        "--k",
        "all",
        "--mode",
        "cardinal",
    ]));
    assert_eq!(field(&cardinal, "cost"), vec![8.0, 9.0]);
    assert_eq!(
        cardinal[1]["hypotheses"],
        serde_json::json!(["Tony-in", "Tony-sleeping"])
    );
    let top = lines(&abduce(&["enumerate", &tony(), "--k", "3"]));
    assert_eq!(field(&top, "cost"), vec![8.0, 9.0, 12.0]);
}

#[test]
fn enumerate_abc_with_evidence() {
    let out = lines(&mpe(&[
        "enumerate",
        &abc(),
        "--evidence",
        "C=true",
        "--k",
        "4",
    ]));
    let p = field(&out, "probability");
    for (got, want) in p.iter().zip([0.294, 0.162, 0.048, 0.028]) {
        assert!((got - want).abs() < 1e-9, "{p:?}");
    }
    assert_eq!(p.len(), 4);
    for r in &out {
        assert_eq!(r["assignment"]["C"], "true");
        let cost = r["cost"].as_f64().unwrap();
        assert!((cost + r["probability"].as_f64().unwrap().ln()).abs() < 1e-9);
    }
    let strict = lines(&mpe(&[
        "enumerate",
        &abc(),
        "--evidence",
        "C=true",
        "--strict-permissibility",
    ]));
    assert_eq!(field(&strict, "probability"), p);
    let best = lines(&mpe(&["solve", &abc(), "--evidence", "C=true"]));
    assert_eq!(best, out[..1]);
}

#[test]
fn evidence_file_merges_with_flags() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("e.json");
    fs::write(&file, r#"{"A": "false"}"#).unwrap();
    let f = file.display().to_string();
    let out = lines(&mpe(&[
        "enumerate",
        &abc(),
        "--evidence",
        "C=true",
        "--evidence-file",
        &f,
    ]));
    let p = field(&out, "probability");
    assert_eq!(p.len(), 2);
    assert!((p[0] - 0.048).abs() < 1e-9 && (p[1] - 0.028).abs() < 1e-9);
    let same = lines(&mpe(&[
        "enumerate",
        &abc(),
        "--evidence",
        "C=true,A=false",
        "--evidence-file",
        &f,
    ]));
    assert_eq!(same, out);
    let conflict = mpe(&[
        "enumerate",
        &abc(),
        "--evidence",
        "A=true",
        "--evidence-file",
        &f,
    ]);
    assert_eq!(conflict.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&conflict.stderr).contains("`A`"));
}

#[test]
fn output_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("g.json");
    let generated = abduce(&["gen", "waodag", "--seed", "5", "--profile", "any"]);
    assert!(generated.status.success());
    assert_eq!(
        generated.stdout,
        abduce(&["gen", "waodag", "--seed", "5", "--profile", "any"]).stdout
    );
    fs::write(&model, &generated.stdout).unwrap();
    let m = model.display().to_string();
    let a = abduce(&["enumerate", &m]);
    let b = abduce(&["enumerate", &m]);
    assert!(a.status.success() && !a.stdout.is_empty());
    assert_eq!(a.stdout, b.stdout);
    let c = mpe(&["enumerate", &abc()]);
    assert_eq!(c.stdout, mpe(&["enumerate", &abc()]).stdout);
}

#[test]
fn generated_models_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    for seed in 0..5 {
        let g = abduce(&["gen", "waodag", "--seed", &seed.to_string()]).stdout;
        let path = dir.path().join("g.json");
        fs::write(&path, &g).unwrap();
        let w = parse_waodag_file(&path).unwrap();
        assert_eq!(abduce_cli::model::waodag_to_json(&w).as_bytes(), &g[..]);

        let b = abduce(&["gen", "bn", "--seed", &seed.to_string(), "--allow-extreme"]).stdout;
        let path = dir.path().join("b.json");
        fs::write(&path, &b).unwrap();
        let bn = parse_bayesnet_file(&path).unwrap();
        assert_eq!(abduce_cli::model::bayesnet_to_json(&bn).as_bytes(), &b[..]);
    }
}

fn by_cost(records: &[Value], key: &str) -> Vec<(f64, String)> {
    records
        .iter()
        .map(|r| (r[key].as_f64().unwrap(), r["assignment"].to_string()))
        .collect()
}

#[test]
fn oracle_and_solver_agree() {
    let dir = tempfile::tempdir().unwrap();
    let mut graphs = vec![tony()];
    for (seed, profile) in [
        (1, "strict"),
        (2, "monotonic"),
        (3, "any"),
        (4, "monotonic"),
    ] {
        let path = dir.path().join(format!("g{seed}.json"));
        let args = [
            "gen",
            "waodag",
            "--seed",
            &seed.to_string(),
            "--max-nodes",
            "14",
            "--profile",
            profile,
        ];
        fs::write(&path, abduce(&args).stdout).unwrap();
        graphs.push(path.display().to_string());
    }
    for g in &graphs {
        for mode in ["all", "cardinal"] {
            let solver = abduce(&["enumerate", g, "--mode", mode]);
            if solver.status.code() == Some(1) {
                assert!(String::from_utf8_lossy(&solver.stderr).contains("not strictly monotonic"));
                continue;
            }
            let oracle = lines(&abduce(&["oracle", g, "--mode", mode]));
            same_up_to_ties(
                &by_cost(&lines(&solver), "cost"),
                &by_cost(&oracle, "cost"),
                1e-6,
            )
            .unwrap_or_else(|e| panic!("{g} {mode}: {e}"));
        }
    }
    let mut networks = vec![abc()];
    for seed in 0..3 {
        let path = dir.path().join(format!("b{seed}.json"));
        fs::write(
            &path,
            abduce(&["gen", "bn", "--seed", &seed.to_string()]).stdout,
        )
        .unwrap();
        networks.push(path.display().to_string());
    }
    for n in &networks {
        let neg = |v: Vec<(f64, String)>| v.into_iter().map(|(p, k)| (-p, k)).collect::<Vec<_>>();
        let solver = neg(by_cost(&lines(&mpe(&["enumerate", n])), "probability"));
        let oracle = neg(by_cost(&lines(&mpe(&["oracle", n])), "probability"));
        same_up_to_ties(&solver, &oracle, 1e-9).unwrap_or_else(|e| panic!("{n}: {e}"));
    }
}

#[test]
fn encode_dumps_the_system() {
    let out = abduce(&["encode", &tony()]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("var x[Tony-in] 5 0\n"));
    assert!(text.ends_with("+1 x[phone-noanswer] = 1\n"));
    let bn = String::from_utf8(mpe(&["encode", &abc(), "--evidence", "C=true"]).stdout).unwrap();
    assert_eq!(bn.lines().count(), 18 + 22);
    let strict =
        String::from_utf8(mpe(&["encode", &abc(), "--strict-permissibility"]).stdout).unwrap();
    assert_eq!(strict.lines().count(), 18 + 21 + 28);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(
        &bad,
        r#"{"nodes": [{"id": "a", "label": "xor", "cost_true": 1}]}"#,
    )
    .unwrap();
    let out = abduce(&["solve", &bad.display().to_string()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains(":1:37:"));

    assert_eq!(
        abduce(&["solve", "/nonexistent/model.json"]).status.code(),
        Some(1)
    );
    assert_eq!(abduce(&["solve", &abc()]).status.code(), Some(1));
    assert_eq!(
        abduce(&["enumerate", &tony(), "--k", "0"]).status.code(),
        Some(1)
    );
    assert_eq!(
        abduce(&["enumerate", &tony(), "--delta", "-1"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(
        mpe(&["solve", &abc(), "--evidence", "C=maybe"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(
        abduce(&["enumerate", &tony(), "--node-limit", "1"])
            .status
            .code(),
        Some(2)
    );

    let big = dir.path().join("big.json");
    let args = [
        "gen",
        "waodag",
        "--seed",
        "0",
        "--max-hypotheses",
        "40",
        "--max-nodes",
        "60",
    ];
    fs::write(&big, abduce(&args).stdout).unwrap();
    let w = parse_waodag_file(&big).unwrap();
    assert!(
        w.hypotheses().len() > 20,
        "seed 0 draws {} hypotheses",
        w.hypotheses().len()
    );
    assert_eq!(
        abduce(&["oracle", &big.display().to_string()])
            .status
            .code(),
        Some(2)
    );

    assert_eq!(abduce(&["--help"]).status.code(), Some(0));
}

#[test]
fn zero_probabilities_follow_the_policy() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("z.json");
    fs::write(
        &path,
        r#"{"variables": [{"name": "A", "range": ["t", "f"]}],
            "cpts": [{"child": "A", "rows": [{"given": [], "probs": {"t": 1, "f": 0}}]}]}"#,
    )
    .unwrap();
    let p = path.display().to_string();
    let clamp = lines(&mpe(&["enumerate", &p]));
    assert_eq!(field(&clamp, "probability"), vec![1.0, 0.0]);
    let reject = mpe(&["enumerate", &p, "--zero-prob", "reject"]);
    assert_eq!(reject.status.code(), Some(1));
}

#[test]
fn trace_goes_to_stderr() {
    let out = Command::new(env!("CARGO_BIN_EXE_abduce"))
        .args(["enumerate", &tony()])
        .env("ABDUCE_LOG", "debug")
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("rank 5 cost 17"));
    assert_eq!(out.stdout, abduce(&["enumerate", &tony()]).stdout);
}
