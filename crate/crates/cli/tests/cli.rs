use std::path::Path;
use std::process::{Command, Output};

fn etoc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_etoc")).args(args).env_remove("ETOC_NUM_THREADS").output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn plan_reference_maneuver() {
    let o =
        etoc(&["plan", "--mu", "0.5", "--r", "1", "--alpha-deg", "30", "--formulation", "form1", "--samples", "11"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = String::from_utf8(o.stdout).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "tau,x,y,theta,v,omega,c1,c2,c3,H");
    assert_eq!(csv.lines().count(), 12);
    let summary: serde_json::Value = serde_json::from_slice(&o.stderr).unwrap();
    assert!((summary["params"]["q"].as_f64().unwrap() - 1.21).abs() < 0.01);
    assert!((summary["tf"].as_f64().unwrap() - 0.94).abs() < 0.01);
    assert_eq!(summary["verification"]["pass"], true);
}

#[test]
fn plan_straight_line() {
    let o = etoc(&["plan", "--mu", "0.5", "--r", "1", "--alpha-deg", "0", "--format", "json", "--samples", "5"]);
    assert_eq!(code(&o), 0);
    let doc: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(format!("{:.5}", doc["tf"].as_f64().unwrap()), "0.70711");
    let v = doc["trajectory"]["columns"].as_array().unwrap().iter().position(|c| c == "v").unwrap();
    for row in doc["trajectory"]["rows"].as_array().unwrap() {
        assert!((row[v].as_f64().unwrap() - std::f64::consts::SQRT_2).abs() < 1e-12);
    }
}

#[test]
fn fixedv_header() {
    let o = etoc(&["plan", "--x", "0.5", "--y", "0.5", "--formulation", "fixedv", "--samples", "3"]);
    assert_eq!(code(&o), 0);
    assert!(String::from_utf8(o.stdout).unwrap().starts_with("tau,x,y,theta,v,omega,z1,z2,z3,z5\n"));
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(code(&etoc(&["plan", "--mu", "1.0", "--r", "1", "--alpha-deg", "30"])), 1);
    assert_eq!(code(&etoc(&["plan", "--no-such-flag"])), 1);
    assert_eq!(code(&etoc(&["plan", "--r", "1"])), 1);
    assert_eq!(code(&etoc(&["plan", "--x", "1", "--y", "0", "--r", "1", "--alpha-deg", "3"])), 1);
    assert_eq!(code(&etoc(&["plan", "--r", "1", "--alpha-deg", "30", "--guess", "1,2,3"])), 1);
    assert_eq!(code(&etoc(&["plan"])), 1);
    assert_eq!(code(&etoc(&["--help"])), 0);
    assert_eq!(code(&etoc(&["--version"])), 0);
    let o = Command::new(env!("CARGO_BIN_EXE_etoc"))
        .args(["plan", "--r", "1", "--alpha-deg", "30"])
        .env("ETOC_NUM_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(code(&o), 1);
}

#[test]
fn nonconvergence_exits_two() {
    let o = etoc(&["plan", "--r", "1", "--alpha-deg", "30", "--guess", "0.0001,99"]);
    assert_eq!(code(&o), 2, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn plan_files_and_verify_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("plan.csv");
    let svg = dir.path().join("plan.svg");
    let o = etoc(&[
        "plan",
        "--r",
        "1",
        "--alpha-deg",
        "45",
        "--formulation",
        "form2",
        "--out",
        csv.to_str().unwrap(),
        "--svg",
        svg.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0);
    assert!(o.stdout.is_empty());
    assert_eq!(std::fs::read_to_string(&csv).unwrap().lines().count(), 202);
    assert!(std::fs::read_to_string(&svg).unwrap().contains("<polyline"));
    let summary = dir.path().join("plan.json");
    let keys: Vec<String> = json(&summary).as_object().unwrap().keys().cloned().collect();
    let text = std::fs::read_to_string(&summary).unwrap();
    let order: Vec<usize> = ["formulation", "mu", "target", "params", "tf", "cost", "verification"]
        .iter()
        .map(|k| text.find(&format!("\"{k}\"")).unwrap())
        .collect();
    assert_eq!(keys.len(), 7);
    assert!(order.windows(2).all(|w| w[0] < w[1]));

    let o = etoc(&["verify", "--solution", summary.to_str().unwrap()]);
    assert_eq!(code(&o), 0);

    let mut doc = json(&summary);
    let tf = doc["params"]["tf"].as_f64().unwrap();
    doc["params"]["tf"] = serde_json::json!(tf + 1e-3);
    std::fs::write(&summary, serde_json::to_string(&doc).unwrap()).unwrap();
    let o = etoc(&["verify", "--solution", summary.to_str().unwrap()]);
    assert_eq!(code(&o), 3);
    assert!(String::from_utf8_lossy(&o.stderr).contains("terminal_position"));
    let report: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(report["pass"], false);

    std::fs::write(&summary, "{ not json").unwrap();
    assert_eq!(code(&etoc(&["verify", "--solution", summary.to_str().unwrap()])), 1);
}

#[test]
fn verify_cross() {
    let o = etoc(&["verify", "--r", "1", "--alpha-deg", "60", "--cross"]);
    assert_eq!(code(&o), 0);
    let report: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let names: Vec<&str> =
        report["cross"]["checks"].as_array().unwrap().iter().map(|c| c["name"].as_str().unwrap()).collect();
    assert!(names.contains(&"tf_agreement") && names.contains(&"state_agreement"));
    assert_eq!(report["pass"], true);
}

#[test]
fn sweep_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = etoc(&[
        "sweep",
        "--alpha-start",
        "5",
        "--alpha-end",
        "90",
        "--alpha-steps",
        "18",
        "--samples",
        "21",
        "--out",
        out,
        "--svg",
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stderr).contains("transition condition changes sign"));
    let summary = std::fs::read_to_string(dir.path().join("summary.csv")).unwrap();
    let mut lines = summary.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let col = |name: &str| header.iter().position(|h| *h == name).unwrap();
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 18);
    for r in &rows {
        assert_eq!(r[col("status")], "ok");
        assert!((r[col("v_final")].parse::<f64>().unwrap() - 2f64.sqrt()).abs() < 1e-9);
        assert!(r[col("omega_final")].parse::<f64>().unwrap().abs() < 1e-9);
        assert!(dir.path().join(r[col("file")]).exists());
    }
    let signs: Vec<bool> = rows.iter().map(|r| r[col("transition")].parse::<f64>().unwrap() > 0.0).collect();
    assert_eq!(signs.windows(2).filter(|w| w[0] != w[1]).count(), 1);
    assert!(dir.path().join("paths.svg").exists() && dir.path().join("controls.svg").exists());
}

#[test]
fn bench_is_deterministic() {
    let run = || {
        let dir = tempfile::tempdir().unwrap();
        let o = etoc(&["bench", "--shooting-starts", "6", "--seed", "7", "--out", dir.path().to_str().unwrap()]);
        assert_eq!(code(&o), 0);
        let report = json(&dir.path().join("bench.json"));
        (std::fs::read(dir.path().join("bench.csv")).unwrap(), report)
    };
    let (a, report) = run();
    let (b, _) = run();
    assert_eq!(a, b);
    assert_eq!(report["grid"]["within_tol"], 25);
    assert_eq!(report["nlp"]["attempts"], 6);
    let csv = String::from_utf8(a).unwrap();
    assert!(csv.starts_with("method,index,g1,g2,g3,g4,converged,optimal,iterations,r1,r2,r3,r4,residual\n"));
    assert_eq!(csv.lines().count(), 1 + 25 + 6 + 6);
}

#[test]
fn thread_count_does_not_change_results() {
    let run = |threads: &str| {
        let dir = tempfile::tempdir().unwrap();
        let o = Command::new(env!("CARGO_BIN_EXE_etoc"))
            .args(["sweep", "--alpha-steps", "4", "--samples", "11", "--out", dir.path().to_str().unwrap()])
            .env("ETOC_NUM_THREADS", threads)
            .output()
            .unwrap();
        assert_eq!(code(&o), 0);
        std::fs::read(dir.path().join("summary.csv")).unwrap()
    };
    assert_eq!(run("1"), run("3"));
    assert_eq!(run("0"), run("1"));
}
