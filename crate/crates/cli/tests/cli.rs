use serde_json::Value;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};
use tempfile::TempDir;

fn crossdyn(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_crossdyn"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(out: &Output) {
    assert!(
        out.status.success(),
        "exit {:?}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn stderr_line(out: &Output) -> String {
    let s = String::from_utf8_lossy(&out.stderr).to_string();
    assert_eq!(s.trim_end().lines().count(), 1, "{s}");
    s
}

/// Deterministic pseudo-noise in [-0.5, 0.5).
fn jitter(i: usize, salt: u64) -> f64 {
    let mut x = (i as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ salt;
    x ^= x >> 33;
    x = x.wrapping_mul(0xFF51_AFD7_ED55_8CCD);
    x ^= x >> 33;
    (x >> 11) as f64 / (1u64 << 53) as f64 - 0.5
}

fn write_fast_config(dir: &Path) {
    fs::write(dir.join("fast.json"), r#"{"null_repetitions": 200, "bootstrap_repetitions": 50}"#).unwrap();
}

/// Unimodal BMI-like cohort spanning about 17 to 35 whose follow-ups drift
/// toward 24.
fn write_cohort(dir: &Path, n: usize) {
    let mut text = String::from("id,baseline,w6\n");
    for i in 0..n {
        let u = (i as f64 + 0.5) / n as f64;
        let b = 24.0 + 4.0 * (u - 0.5) * (1.0 + 1.2 * (2.0 * u - 1.0).abs()) + 0.3 * jitter(i, 1);
        let f = b + 0.2 * (24.0 - b) + 0.8 * jitter(i, 2);
        text.push_str(&format!("p{i},{b:.3},{f:.3}\n"));
    }
    fs::write(dir.join("cohort.csv"), text).unwrap();
}

#[test]
fn surrogate_is_seed_deterministic() {
    let d = TempDir::new().unwrap();
    ok(&crossdyn(d.path(), &["--seed", "4", "--out", "a", "surrogate", "--n", "300"]));
    ok(&crossdyn(d.path(), &["--seed", "4", "--out", "b", "surrogate", "--n", "300"]));
    ok(&crossdyn(d.path(), &["--seed", "5", "--out", "c", "surrogate", "--n", "300"]));
    let a = fs::read(d.path().join("a/surrogate.csv")).unwrap();
    assert_eq!(a, fs::read(d.path().join("b/surrogate.csv")).unwrap());
    assert_ne!(a, fs::read(d.path().join("c/surrogate.csv")).unwrap());
    let text = String::from_utf8(a).unwrap();
    assert!(text.starts_with("id,value\n"));
    assert_eq!(text.lines().count(), 301);
}

#[test]
fn stochastic_commands_require_a_seed() {
    let d = TempDir::new().unwrap();
    let out = crossdyn(d.path(), &["surrogate"]);
    assert!(!out.status.success());
    assert!(stderr_line(&out).starts_with("InvalidArgument:"));
}

#[test]
fn fit_simulate_round_trip() {
    let d = TempDir::new().unwrap();
    let p = d.path();
    ok(&crossdyn(p, &["--seed", "2", "surrogate", "--n", "800"]));
    ok(&crossdyn(p, &["--seed", "2", "--out", "f1", "fit", "surrogate.csv"]));
    ok(&crossdyn(p, &["--seed", "2", "--out", "f2", "fit", "surrogate.csv"]));
    let m1 = fs::read(p.join("f1/model.json")).unwrap();
    assert_eq!(m1, fs::read(p.join("f2/model.json")).unwrap());

    let model = json(&p.join("f1/model.json"));
    assert_eq!(model["schema_version"], 1);
    assert_eq!(model["seed"], 2);
    let sigma = model["sigma"].as_f64().unwrap();
    assert!((1.2..1.7).contains(&sigma), "{sigma}");

    let curves = fs::read_to_string(p.join("f1/curves.csv")).unwrap();
    assert!(curves.starts_with("x,x_original,pdf,energy,force,stationary_density\n"));

    let sim = |out: &str| {
        ok(&crossdyn(p, &["--seed", "9", "--out", out, "simulate", "f1/model.json", "--steps", "20000"]));
        fs::read(p.join(out).join("trajectory.csv")).unwrap()
    };
    assert_eq!(sim("s1"), sim("s2"));
    let t = json(&p.join("s1/transitions.json"));
    assert_eq!(t["schema_version"], 1);
    assert_eq!(t["seed"], 9);
    assert!(t["transition_count"].as_u64().unwrap() > 0);
    let total = t["total_time"].as_f64().unwrap();
    let count = t["transition_count"].as_f64().unwrap();
    assert!((t["mean_time_between"].as_f64().unwrap() - total / count).abs() < 1e-12);
}

#[test]
fn one_row_is_degenerate() {
    let d = TempDir::new().unwrap();
    fs::write(d.path().join("one.csv"), "value\n3.5\n").unwrap();
    let out = crossdyn(d.path(), &["fit", "one.csv"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr_line(&out).starts_with("DegenerateData:"));
    assert!(!d.path().join("model.json").exists());
}

#[test]
fn parse_errors_name_row_and_column() {
    let d = TempDir::new().unwrap();
    fs::write(d.path().join("bad.csv"), "id,value\na,1\nb,oops\n").unwrap();
    let out = crossdyn(d.path(), &["fit", "bad.csv"]);
    assert_eq!(out.status.code(), Some(2));
    let line = stderr_line(&out);
    assert!(line.starts_with("ParseError:") && line.contains("row 3") && line.contains("value"), "{line}");
}

#[test]
fn schema_mismatch_is_rejected() {
    let d = TempDir::new().unwrap();
    fs::write(d.path().join("m.json"), r#"{"schema_version": 99}"#).unwrap();
    let out = crossdyn(d.path(), &["--seed", "1", "simulate", "m.json"]);
    assert!(!out.status.success());
    assert!(stderr_line(&out).starts_with("SchemaMismatch:"));
}

#[test]
fn boundary_optimum_exits_nonzero() {
    let d = TempDir::new().unwrap();
    let p = d.path();
    ok(&crossdyn(p, &["--seed", "3", "surrogate", "--n", "400"]));
    fs::write(p.join("narrow.json"), r#"{"sigma_bounds": [0.2, 0.3]}"#).unwrap();
    let out = crossdyn(p, &["--config", "narrow.json", "fit", "surrogate.csv"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr_line(&out).starts_with("BoundaryOptimum:"));
    assert!(p.join("model.json").exists());
}

#[test]
fn bad_config_is_rejected() {
    let d = TempDir::new().unwrap();
    fs::write(d.path().join("c.json"), r#"{"sigma_bounds": [3.0, 1.0]}"#).unwrap();
    fs::write(d.path().join("x.csv"), "value\n1\n2\n3\n").unwrap();
    let out = crossdyn(d.path(), &["--config", "c.json", "fit", "x.csv"]);
    assert!(!out.status.success());
    assert!(stderr_line(&out).starts_with("InvalidArgument:"));
}

#[test]
fn intervene_landau_values() {
    let d = TempDir::new().unwrap();
    let p = d.path();
    ok(&crossdyn(p, &["--out", "c1", "intervene", "--landau", "3,1", "--c", "1", "--t", "0.0013", "--sigma", "1.41"]));
    ok(&crossdyn(p, &["--out", "c0", "intervene", "--landau", "3,1", "--c", "0", "--t", "0.0013", "--sigma", "1.41"]));
    let c1 = json(&p.join("c1/intervention.json"));
    let c0 = json(&p.join("c0/intervention.json"));
    assert_eq!(c1["schema_version"], 1);
    assert!((c1["r"].as_f64().unwrap() - 0.025).abs() < 0.003);
    assert_eq!(c0["r"].as_f64().unwrap(), 0.0);
    assert!((c0["occupancy_below"].as_f64().unwrap() - 0.5).abs() < 1e-9);
    let tilted = c1["tilted_attractors"].as_array().unwrap();
    assert_eq!(tilted.len(), 2);
    assert!(tilted[0].as_f64().unwrap() < -1.2247);
}

#[test]
fn intervene_needs_sigma_for_landau() {
    let d = TempDir::new().unwrap();
    let out = crossdyn(d.path(), &["intervene", "--landau", "3,1", "--c", "1", "--t", "0.0013"]);
    assert!(!out.status.success());
    stderr_line(&out);
}

#[test]
fn validate_clusters_and_range() {
    let d = TempDir::new().unwrap();
    let p = d.path();
    write_cohort(p, 400);
    write_fast_config(p);
    ok(&crossdyn(
        p,
        &["--seed", "6", "--config", "fast.json", "validate", "cohort.csv", "--refit", "--clusters", "bmi", "--range", "21:22"],
    ));
    let r = json(&p.join("report.json"));
    assert_eq!(r["schema_version"], 1);
    assert_eq!(r["seed"], 6);
    let groups = r["groups"].as_array().unwrap();
    let names: Vec<&str> = groups.iter().map(|g| g["name"].as_str().unwrap()).collect();
    assert_eq!(names, ["pooled", "underweight", "normal weight", "overweight", "obese", "range [21, 22)"]);

    let sizes: usize = groups[1..5].iter().map(|g| g["n"].as_u64().unwrap() as usize).sum();
    assert_eq!(sizes, 400);
    for g in &groups[1..5] {
        let small = g["n"].as_u64().unwrap() < 20;
        assert_eq!(g["disregarded"].as_bool().unwrap(), small);
    }
    assert_eq!(groups[2]["lo"], 18.5);
    assert_eq!(groups[2]["hi"], 25.0);

    let pooled = &groups[0]["reports"][0];
    assert!(pooled["a_scaled"].as_f64().unwrap() > 0.0, "{pooled}");
    assert!(pooled["bootstrap_ci"].is_array());

    let text = fs::read_to_string(p.join("cohort.csv")).unwrap();
    let in_range: Vec<String> = text
        .lines()
        .skip(1)
        .filter_map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            let b: f64 = f[1].parse().unwrap();
            (21.0..22.0).contains(&b).then(|| f[0].to_string())
        })
        .collect();
    let range_ids: Vec<String> = groups[5]["reports"][0]["per_individual"]
        .as_array()
        .unwrap()
        .iter()
        .map(|i| i["id"].as_str().unwrap().to_string())
        .collect();
    assert_eq!(range_ids, in_range);

    let hist = fs::read_to_string(p.join("histogram.csv")).unwrap();
    assert!(hist.starts_with("group,followup,bin_lo,bin_hi,positive,negative,relative\n"));
    for line in hist.lines().skip(1).filter(|l| l.starts_with("pooled")) {
        let rel: f64 = line.rsplit(',').next().unwrap().parse().unwrap();
        assert!((-1.0..=1.0).contains(&rel));
    }
}

#[test]
fn validate_with_saved_model() {
    let d = TempDir::new().unwrap();
    let p = d.path();
    write_cohort(p, 300);
    write_fast_config(p);
    let mut cross = String::from("id,value\n");
    for line in fs::read_to_string(p.join("cohort.csv")).unwrap().lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        cross.push_str(&format!("{},{}\n", f[0], f[1]));
    }
    fs::write(p.join("cross.csv"), cross).unwrap();
    ok(&crossdyn(p, &["--out", "m", "fit", "cross.csv"]));
    let run = |out: &str| {
        ok(&crossdyn(
            p,
            &["--seed", "8", "--config", "fast.json", "--out", out, "validate", "cohort.csv", "--model", "m/model.json"],
        ));
        fs::read(p.join(out).join("report.json")).unwrap()
    };
    assert_eq!(run("v1"), run("v2"));
    let r = json(&p.join("v1/report.json"));
    assert_eq!(r["groups"].as_array().unwrap().len(), 1);
    assert_eq!(r["groups"][0]["refitted"], false);
}

#[test]
fn validate_needs_model_or_refit() {
    let d = TempDir::new().unwrap();
    write_cohort(d.path(), 50);
    let out = crossdyn(d.path(), &["--seed", "1", "validate", "cohort.csv"]);
    assert!(!out.status.success());
    stderr_line(&out);
}
