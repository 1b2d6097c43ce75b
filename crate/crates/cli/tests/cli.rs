use std::process::{Command, Output};

use serde_json::Value;

fn jumprep(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_jumprep"))
        .args(args)
        .env_remove("JUMPREP_GRID")
        .env_remove("JUMPREP_TRUNCATION")
        .output()
        .expect("binary runs")
}

fn json_of(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

const QUICK: [&str; 4] = ["--samples", "300", "--grid", "512"];

#[test]
fn catalog_lists_six_maps() {
    let out = jumprep(&["catalog", "list"]);
    assert!(out.status.success());
    let names: Vec<String> = String::from_utf8(out.stdout)
        .unwrap()
        .lines()
        .map(|l| l.split('\t').next().unwrap().to_string())
        .collect();
    assert_eq!(names, ["tent", "tent_jump", "farey", "gauss", "chan_sigma2", "chan_tau2"]);
}

#[test]
fn catalog_show_round_trips_through_map_flag() {
    let dir = std::env::temp_dir().join(format!("jumprep-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let out = jumprep(&["catalog", "show", "farey"]);
    assert!(out.status.success());
    let entry = dir.join("farey_entry.json");
    std::fs::write(&entry, &out.stdout).unwrap();
    // a bare map descriptor is accepted too
    let map = dir.join("my_farey.json");
    std::fs::write(&map, serde_json::to_vec(&json_of(&out)["map"]).unwrap()).unwrap();
    for path in [&entry, &map] {
        let r = jumprep(&["jump", "apply", "--map", path.to_str().unwrap(), "--x", "3/8"]);
        assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
        let v = json_of(&r);
        assert_eq!((v["jump"].as_str(), v["entry_time"].as_u64()), (Some("2/3"), Some(1)));
    }
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn jump_verify_farey_against_gauss() {
    let out = jumprep(&["jump", "verify", "--map", "farey", "--against", "gauss", "--samples", "500"]);
    assert!(out.status.success());
    let v = json_of(&out);
    assert_eq!(v["exact_zero"], true);
    assert_eq!(v["compared"], 500);
    // gauss is not the jump transformation of the tent map
    let out = jumprep(&["jump", "verify", "--map", "tent", "--against", "gauss", "--samples", "200"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn cuntz_check_gauss_depth_ten() {
    let out = jumprep(&["cuntz", "check", "--map", "gauss", "--depth", "10", "--grid", "1024"]);
    assert!(out.status.success());
    let v = json_of(&out);
    assert_eq!(v["completeness"]["uncovered"], "1/11");
    assert_eq!(v["isometry"]["exact_zero"], true);
    let csv = jumprep(&["cuntz", "check", "--map", "farey", "--emit", "csv", "--grid", "512"]);
    let text = String::from_utf8(csv.stdout).unwrap();
    assert!(text.starts_with("relation,function,max_deviation,exact_zero,checked\n"));
    assert!(text.contains("completeness,all,0,true,"));
}

#[test]
fn cuntz_embed_and_alternative() {
    let out = jumprep(&["cuntz", "embed", "--map", "chan_sigma2", "--nmax", "6", "--grid", "512"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    assert_eq!(json_of(&out)["coefficients_match"], true);
    let out = jumprep(&["cuntz", "alternative", "--map", "tent", "--nmax", "3", "--grid", "512"]);
    assert!(out.status.success());
    let out = jumprep(&["cuntz", "embed", "--map", "gauss"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn cuntz_apply_samples_a_word() {
    let out = jumprep(&["cuntz", "apply", "--map", "tent", "--word", "S1", "--points", "4"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let rows: Vec<(f64, f64)> = text
        .lines()
        .skip(1)
        .map(|l| {
            let (x, v) = l.split_once(',').unwrap();
            (x.parse().unwrap(), v.parse().unwrap())
        })
        .collect();
    let r2 = std::f64::consts::SQRT_2;
    assert_eq!(rows, [(0.125, 0.0), (0.375, 0.0), (0.625, r2), (0.875, r2)]);
    let bad = jumprep(&["cuntz", "apply", "--map", "tent", "--word", "T1"]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn measure_commands() {
    let t = json_of(&jumprep(&["measure", "transport", "--map", "chan_sigma2"]));
    assert_eq!(t["transported"], "1/((x+1)(x+2))");
    let out = jumprep(&["measure", "invariance", "--map", "farey"]);
    assert!(out.status.success());
    assert_eq!(json_of(&out)["exact_zero"], true);
    let out = jumprep(&["measure", "invariance", "--map", "tent", "--density", "gauss"]);
    assert_eq!(out.status.code(), Some(1));
    let u = json_of(&jumprep(&["measure", "ulam", "--map", "tent", "--cells", "64", "--density", "lebesgue"]));
    assert!(u["l1_to_density"].as_f64().unwrap() < 1e-10);
    let csv = jumprep(&["measure", "orbit", "--map", "tent", "--steps", "1000", "--bins", "8", "--emit", "csv"]);
    assert_eq!(String::from_utf8(csv.stdout).unwrap().lines().count(), 9);
}

#[test]
fn figure_has_1024_rows() {
    let out = jumprep(&["figure", "farey"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 1025);
    assert_eq!(jumprep(&["figure", "logistic"]).status.code(), Some(2));
}

#[test]
fn verify_all_passes_and_is_deterministic() {
    let args = [&["verify-all"][..], &QUICK[..]].concat();
    let a = jumprep(&args);
    let b = jumprep(&args);
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(json_of(&a)["passed"], true);
}

#[test]
fn corrupted_tent_fails_with_exit_one() {
    let args = [&["verify-all", "--override", "tent:1:-3/5,1,0,1"][..], &QUICK[..]].concat();
    let out = jumprep(&args);
    assert_eq!(out.status.code(), Some(1));
    let v = json_of(&out);
    let failures: Vec<&str> = v["failures"].as_array().unwrap().iter().map(|f| f.as_str().unwrap()).collect();
    assert!(failures.contains(&"tent/cuntz_relations_base"), "{failures:?}");
    assert!(failures.iter().all(|f| f.starts_with("tent/")));
    assert!(String::from_utf8_lossy(&out.stderr).contains("FAILED: tent/"));
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(jumprep(&["verify-all", "--backend", "interval"]).status.code(), Some(2));
    assert_eq!(jumprep(&["verify-all", "--override", "tent:x"]).status.code(), Some(2));
    assert_eq!(jumprep(&["verify-all", "--grid", "1"]).status.code(), Some(2));
    assert_eq!(jumprep(&["jump", "apply", "--map", "tent", "--x", "1/2", "--set", "1,0"]).status.code(), Some(2));
}

#[test]
fn environment_overrides_grid() {
    let out = Command::new(env!("CARGO_BIN_EXE_jumprep"))
        .args(["cuntz", "check", "--map", "tent"])
        .env("JUMPREP_GRID", "256")
        .output()
        .unwrap();
    assert!(out.status.success());
    assert_eq!(json_of(&out)["grid_step"], 1.0 / 256.0);
    let out = Command::new(env!("CARGO_BIN_EXE_jumprep"))
        .args(["cuntz", "check", "--map", "gauss", "--grid", "256"])
        .env("JUMPREP_TRUNCATION", "10")
        .output()
        .unwrap();
    assert_eq!(json_of(&out)["completeness"]["uncovered"], "1/11");
}
