use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn dissem(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dissem")).args(args).env_remove("DISSEM_SEED").output().expect("binary runs")
}

fn stdout_json(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("JSON on stdout")
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("dissem-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn markov_prints_table_precision() {
    let v = stdout_json(&dissem(&["markov", "--scenario", "nolist", "--n", "8"]));
    assert_eq!(v["expected_rounds"], "5.956");
    let v = stdout_json(&dissem(&["markov", "--scenario", "nolist", "--n", "2", "--exact-rational"]));
    assert_eq!(v["exact"], "7/3");
}

#[test]
fn equal_schedule_round_trips_through_the_verifier() {
    let sched = scratch("sched.json");
    let inst = scratch("inst.json");
    let out = dissem(&["schedule", "equal", "--n", "3", "--m", "2", "--out", sched.to_str().unwrap()]);
    assert!(out.status.success());
    let csv = String::from_utf8(out.stdout).unwrap();
    assert!(csv.starts_with("round,part,count\n"));
    assert!(csv.contains("\n3,2,3\n"));
    std::fs::write(&inst, r#"{"n_peers": 3, "n_parts": 2, "server_capacity": 1, "peer_capacities": [1, "1", 1.0]}"#).unwrap();
    let v = stdout_json(&dissem(&[
        "schedule",
        "verify",
        "--instance",
        inst.to_str().unwrap(),
        "--schedule",
        sched.to_str().unwrap(),
        "--check-downloads",
    ]));
    assert_eq!(v["valid"], true);
    assert_eq!(v["makespan"], "3/2");

    let v = stdout_json(&dissem(&["solve", "exact", "--instance", inst.to_str().unwrap()]));
    assert_eq!(v["makespan"], "3/2");
    assert_eq!(v["status"], "exact");
    assert!(v["nodes_explored"].as_u64().unwrap() > 0);
}

#[test]
fn invalid_schedule_exits_with_domain_error() {
    let sched = scratch("bad.json");
    let inst = scratch("one.json");
    std::fs::write(&inst, r#"{"n_peers": 1, "n_parts": 2, "server_capacity": "1", "peer_capacities": ["1"]}"#).unwrap();
    std::fs::write(
        &sched,
        r#"{"uploads": [{"uploader": 1, "downloader": 1, "part": 2, "start": "0", "end": "1/2"}]}"#,
    )
    .unwrap();
    let out = dissem(&["schedule", "verify", "--instance", inst.to_str().unwrap(), "--schedule", sched.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["valid"], false);
}

#[test]
fn closed_forms_and_sweeps() {
    let v = stdout_json(&dissem(&["solve", "table3", "--cs", "1", "--c1", "2"]));
    assert_eq!((v["makespan"].as_str(), v["case"].as_str()), (Some("5/4"), Some("D")));
    let out = dissem(&["solve", "table3", "--sweep"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("c1_over_cs,a,b,c,d,min,case"));
    let cases: Vec<(f64, String)> = lines
        .map(|l| {
            let cols: Vec<&str> = l.split(',').collect();
            (cols[0].parse().unwrap(), cols[6].to_string())
        })
        .collect();
    for (r, case) in &cases {
        let want = if *r <= 1.0 / 3.0 + 1e-9 { "A" } else if *r <= 1.0 + 1e-9 { "C" } else { "D" };
        assert_eq!(case, want, "ratio {r}");
    }

    let v = stdout_json(&dissem(&["solve", "fluid-server", "--n", "4", "--cs", "2", "--c1", "1"]));
    assert_eq!((v["makespan"].as_str(), v["alpha"].as_str()), (Some("2/3"), Some("2/3")));
    let out = dissem(&["solve", "fluid-server", "--n", "4", "--sweep"]);
    assert!(String::from_utf8(out.stdout).unwrap().starts_with("c1_over_cs,makespan,alpha\n"));
}

#[test]
fn fluid_plan_file() {
    let plan = scratch("plan.json");
    let v = stdout_json(&dissem(&["solve", "fluid", "--files", "6,1,1", "--caps", "1,1,1", "--plan", plan.to_str().unwrap()]));
    assert_eq!(v["makespan"], "6/1");
    let p: Value = serde_json::from_str(&std::fs::read_to_string(&plan).unwrap()).unwrap();
    assert_eq!(p["alpha"].as_array().unwrap().len(), 3);
    let out = dissem(&["solve", "fluid", "--files", "1", "--caps", "1"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn simulation_csv_feeds_the_fit() {
    let csv = scratch("runs.csv");
    let path = csv.to_str().unwrap();
    let mut all = String::from("scenario,n,m,replication,rounds\n");
    for n in ["4", "64"] {
        let out = dissem(&["simulate", "--scenario", "list", "--n", n, "--reps", "200", "--seed", "5", "--csv", path]);
        let v = stdout_json(&out);
        assert_eq!(v["replications"], 200);
        all.extend(std::fs::read_to_string(&csv).unwrap().lines().skip(1).map(|l| format!("{l}\n")));
    }
    std::fs::write(&csv, &all).unwrap();
    let fit = stdout_json(&dissem(&["fit", "--csv", path]));
    let slope = fit["slope"].as_f64().unwrap();
    assert!(slope > 0.8 && slope < 1.5, "slope {slope}");
    assert_eq!(fit["n_points"], 400);
}

#[test]
fn seed_comes_from_the_environment() {
    let run = |seed: &str| {
        Command::new(env!("CARGO_BIN_EXE_dissem"))
            .args(["simulate", "--scenario", "nolist", "--n", "32", "--reps", "50"])
            .env("DISSEM_SEED", seed)
            .output()
            .unwrap()
    };
    let (a, b) = (stdout_json(&run("7")), stdout_json(&run("7")));
    assert_eq!(a, b);
    assert_eq!(a["seed"], 7);
}

#[test]
fn report_is_byte_identical_across_runs() {
    let args = ["report", "--m", "1,2", "--n-max", "64", "--reps", "20", "--seed", "3"];
    let (a, b) = (dissem(&args), dissem(&args));
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    assert!(text.starts_with("m,intercept,slope,r_squared,centralized_slope,rounds_intercept,rounds_slope\n"));
    assert_eq!(text.lines().count(), 3);
}

#[test]
fn usage_and_domain_errors_have_distinct_codes() {
    assert_eq!(dissem(&["bogus"]).status.code(), Some(2));
    assert_eq!(dissem(&["markov", "--scenario", "sometimes", "--n", "4"]).status.code(), Some(2));
    assert_eq!(dissem(&["markov", "--scenario", "list", "--n", "1000"]).status.code(), Some(1));
    assert_eq!(dissem(&["simulate", "--scenario", "nolist", "--n", "4", "--m", "2"]).status.code(), Some(1));
    assert!(dissem(&["--help"]).status.success());
}
