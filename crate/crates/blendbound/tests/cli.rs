//! Command-line contract: exit codes, format agreement and reproducibility.
use std::process::Command;

fn run(args: &[&str], seed: Option<&str>) -> (i32, String) {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_blendbound"));
    cmd.args(args).env_remove("BLENDBOUND_SEED");
    if let Some(s) = seed {
        cmd.env("BLENDBOUND_SEED", s);
    }
    let out = cmd.output().unwrap();
    (out.status.code().unwrap_or(-1), String::from_utf8(out.stdout).unwrap())
}

/// Every numeric token, sorted, so layouts compare by content.
fn numbers(text: &str) -> Vec<String> {
    let mut v: Vec<String> = text
        .split(|c: char| !(c.is_ascii_digit() || "eE.+-".contains(c)))
        .filter(|t| t.chars().any(|c| c.is_ascii_digit()) && t.parse::<f64>().is_ok())
        .map(|t| format!("{:e}", t.parse::<f64>().unwrap()))
        .collect();
    v.sort();
    v
}

fn temp(name: &str, body: &str) -> String {
    let p = std::env::temp_dir().join(format!("blendbound-{}-{name}", std::process::id()));
    std::fs::write(&p, body).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn success_exits_zero() {
    for args in [
        &["verify-blend", "--pair", "quad_unif_finite", "--grid", "10"][..],
        &["bound", "--h", "20"],
        &["curve", "--dist", "uniform(0,1)", "--grid", "64", "--hull"],
        &["lp-alpha", "--preset", "two-point"],
        &["certify"],
        &["garble", "--h", "10", "--values", "4", "--cells", "4"],
    ] {
        assert_eq!(run(args, None).0, 0, "{args:?}");
    }
}

#[test]
fn usage_errors_exit_two() {
    for args in [
        &["nope"][..],
        &["bound", "--h", "0.5"],
        &["bound", "--format", "xml"],
        &["curve", "--dist", "uniform(1)"],
        &["verify-blend", "--pair", "quad_unif_finite", "--tol", "-1"],
        &["lp-alpha", "--instance", "/nonexistent/instance.json"],
        &["repro", "--threads", "0"],
    ] {
        assert_eq!(run(args, None).0, 2, "{args:?}");
    }
    assert_eq!(run(&["repro", "--monte-carlo", "10"], Some("abc")).0, 2);
}

#[test]
fn failed_checks_exit_one() {
    // a ceiling that puts all weight on the low point mass is no certificate
    let bad = temp("bad.json", r#"{"grid":[1,2],"n_agents":1,"dists":[[1,0],[0,1]],"objective":"revenue","omega":[0.5,0.5],"o":[1,0]}"#);
    assert_eq!(run(&["certify", "--instance", &bad], None).0, 1);
    let bad = temp("bad-rs.json", r#"{"grid":[1,2,4],"n_agents":2,"dists":[[1,0,0],[0,0,1]],"objective":"residual_surplus","omega":[0.5,0.5],"o":[0,1]}"#);
    assert_eq!(run(&["certify", "--instance", &bad], None).0, 1);
}

#[test]
fn formats_carry_the_same_numbers() {
    for args in [
        &["bound", "--h", "3", "--h", "20"][..],
        &["lp-alpha", "--preset", "two-point"],
        &["curve", "--dist", "quadratic(1)|truncate(5)", "--grid", "64", "--hull"],
        &["verify-blend", "--pair", "shexp_unif", "--grid", "6"],
    ] {
        let outs: Vec<Vec<String>> = ["table", "csv", "json"]
            .iter()
            .map(|f| {
                let mut a = args.to_vec();
                a.extend(["--format", f]);
                let (code, out) = run(&a, None);
                assert_eq!(code, 0, "{a:?}");
                numbers(&out)
            })
            .collect();
        assert!(!outs[0].is_empty());
        assert_eq!(outs[0], outs[1], "{args:?}: table vs csv");
        assert_eq!(outs[0], outs[2], "{args:?}: table vs json");
    }
}

#[test]
fn json_output_parses() {
    let (_, out) = run(&["bound", "--h", "20", "--format", "json"], None);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert!((v[0]["ratio"].as_f64().unwrap() - 1.22179450989).abs() < 1e-10);
}

#[test]
fn repro_is_deterministic() {
    let (code, a) = run(&["repro", "--monte-carlo", "20000", "--format", "csv"], None);
    assert_eq!(code, 0, "{a}");
    let (_, b) = run(&["repro", "--monte-carlo", "20000", "--format", "csv", "--threads", "4"], None);
    assert_eq!(a, b);
    let (_, c) = run(&["repro", "--monte-carlo", "20000", "--format", "csv"], Some("0"));
    assert_eq!(a, c, "default seed is 0");
    let (_, d) = run(&["repro", "--monte-carlo", "20000", "--format", "csv"], Some("7"));
    assert_ne!(a, d, "the seed reaches the simulation");
}
