use std::path::PathBuf;
use std::process::{Command, Output};

fn bsqec(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bsqec"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(args: &[&str]) -> String {
    let out = bsqec(args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn body(text: &str) -> String {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| format!("{l}\n"))
        .collect()
}

fn json(args: &[&str]) -> serde_json::Value {
    serde_json::from_str(&stdout(args)).unwrap()
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("bsqec-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn lookup_tables() {
    let z = stdout(&["dump-lookup", "--distance", "3"]);
    assert!(z.starts_with("# {"));
    assert_eq!(
        body(&z),
        "syndrome_bits,correction\n00,I\n01,Z3\n10,Z1\n11,Z2\n"
    );
    let x = stdout(&["dump-lookup", "--distance", "3", "--correction", "x"]);
    assert_eq!(
        body(&x),
        "syndrome_bits,correction\n00,I\n01,X7\n10,X1\n11,X4\n"
    );
}

#[test]
fn counts() {
    let steane = json(&["counts", "-d", "9", "-v", "4"]);
    assert_eq!(steane["cnot_min"], 450);
    assert_eq!(steane["measurement_max"], 234);
    let weak = json(&["counts", "-d", "5", "--method", "shor-weak"]);
    assert_eq!(
        (weak["cnot_min"].as_u64(), weak["cnot_max"].as_u64()),
        (Some(160), Some(320))
    );
    assert_eq!(
        (
            weak["measurement_min"].as_u64(),
            weak["measurement_max"].as_u64()
        ),
        (Some(16), Some(32))
    );
    let strong = json(&["counts", "-d", "9", "--method", "shor-strong"]);
    assert_eq!(
        (strong["rounds_min"].as_u64(), strong["rounds_max"].as_u64()),
        (Some(5), Some(11))
    );
    assert_eq!(strong["manifest"]["command"], "counts");
}

#[test]
fn simulate_is_reproducible() {
    let args = [
        "simulate",
        "-d",
        "3",
        "--p-list",
        "0,1e-4,1e-3",
        "--max-weight",
        "2",
        "--samples",
        "500",
    ];
    let one = stdout(&[&args[..], &["--workers", "1"]].concat());
    let two = stdout(&[&args[..], &["--workers", "2"]].concat());
    assert_eq!(one, two);
    assert_eq!(one, stdout(&args));
    let rows: Vec<&str> = one.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows[0], "p,q,pl_lower,pl_upper,acceptance");
    assert_eq!(rows[1], "0e0,0e0,0e0,0e0,1e0");
    let at = |row: &str, i: usize| row.split(',').nth(i).unwrap().parse::<f64>().unwrap();
    assert!(at(rows[2], 2) > 2e-6 && at(rows[2], 2) < 5e-6);
    assert!(at(rows[2], 2) <= at(rows[2], 3));
}

#[test]
fn independent_measurement_noise_expands_the_grid() {
    let out = stdout(&[
        "simulate",
        "-d",
        "3",
        "--p-list",
        "1e-4,1e-3",
        "--q-list",
        "1e-5,1e-4,1e-3",
        "--max-weight",
        "1",
    ]);
    let text = body(&out);
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 6);
    assert!(rows[1].starts_with("1e-4,1e-4,"));
}

#[test]
fn estimates_round_trip() {
    let path = scratch("estimates.json");
    let p = path.to_str().unwrap();
    let base = [
        "simulate",
        "-d",
        "3",
        "--method",
        "shor-weak",
        "--p-list",
        "1e-3",
        "--max-weight",
        "2",
        "--samples",
        "300",
    ];
    let fresh = stdout(&[&base[..], &["--save-estimates", p]].concat());
    let reused = stdout(&[&base[..], &["--load-estimates", p]].concat());
    assert_eq!(fresh, reused);
}

#[test]
fn config_file_with_flag_override() {
    let path = scratch("run.toml");
    std::fs::write(
        &path,
        "distance = 5\nmethod = \"shor-weak\"\nmax_order = 2\n",
    )
    .unwrap();
    let c = path.to_str().unwrap();
    let coeffs = json(&["coeffs", "--config", c, "--distance", "3"]);
    assert_eq!(coeffs["d"], 3);
    assert_eq!(coeffs["protocol"], "shor-weak");
    let list = coeffs["coeffs"].as_array().unwrap();
    assert_eq!(list.len(), 3);
    assert_eq!(list[1]["value"], 0.0);
    assert!(list[2]["value"].as_f64().unwrap() > 50.0);
}

#[test]
fn output_file() {
    let path = scratch("lookup.csv");
    let out = bsqec(&["dump-lookup", "-d", "5", "--out", path.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(body(&text).contains("\n1010,Z2 Z3\n"));
}

#[test]
fn search_lines() {
    let text = stdout(&["search", "-d", "5", "-v", "1", "--s-max", "1"]);
    let lines: Vec<serde_json::Value> = text
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert!(lines[0]["manifest"].is_object());
    let summary = &lines[lines.len() - 1]["summary"];
    assert_eq!(summary["candidates"], 10);
    let ft: Vec<_> = lines
        .iter()
        .filter(|l| l["verdict"] == "ft")
        .map(|l| l["pairs"].clone())
        .collect();
    assert_eq!(summary["ft"], ft.len());
    assert!(ft.contains(&serde_json::json!([[2, 4]])));
    assert!(ft.contains(&serde_json::json!([[1, 5]])));
    assert!(lines
        .iter()
        .filter(|l| l["verdict"] == "not_ft")
        .all(|l| l["counterexample"].is_array()));
}

#[test]
fn failprob_csv() {
    let text = stdout(&[
        "failprob",
        "-d",
        "5",
        "-v",
        "1",
        "--p-list",
        "1e-3",
        "--max-weight",
        "2",
    ]);
    let rows: Vec<String> = body(&text).lines().map(str::to_owned).collect();
    assert_eq!(rows[0], "p,q,lower,upper,upper95");
    let upper95: f64 = rows[1].split(',').nth(4).unwrap().parse().unwrap();
    assert!(upper95 < 0.05);
}

#[test]
fn failures_are_json() {
    for args in [
        &["counts", "-d", "4"][..],
        &["coeffs", "-d", "7", "-v", "9"],
        &["simulate", "--p-list", "2"],
        &["coeffs", "--config", "/nonexistent/run.toml"],
    ] {
        let out = bsqec(args);
        assert!(!out.status.success(), "{args:?}");
        let err: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
        assert!(err["error"]["message"].is_string(), "{args:?}");
        assert!(err["error"]["kind"].is_string(), "{args:?}");
    }
}

#[test]
fn unknown_config_keys_are_rejected() {
    let path = scratch("bad.toml");
    std::fs::write(&path, "distanse = 5\n").unwrap();
    let out = bsqec(&["counts", "--config", path.to_str().unwrap()]);
    assert!(!out.status.success());
    let err: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"]["kind"], "config");
}
