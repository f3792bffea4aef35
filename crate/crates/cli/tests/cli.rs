use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;
use vac_core::geometry::EyeGeometry;
use vac_core::perception::{predict_endpoint, PerturbationParams};

fn vac(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vac"))
        .args(args)
        .env_remove("VAC_CONFIG")
        .output()
        .expect("run vac")
}

fn ok(args: &[&str]) -> Output {
    let out = vac(args);
    assert!(
        out.status.success(),
        "vac {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(p).unwrap()).unwrap()
}

/// Every file in `dir`, sorted by name, with its bytes.
fn snapshot(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.is_file())
        .map(|p| {
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                fs::read(&p).unwrap(),
            )
        })
        .collect();
    files.sort();
    files
}

const SMALL_SIM: &str = r#"{
  "n_participants": 4,
  "repetitions": 6,
  "seed": 11
}"#;

fn simulate_small(tmp: &TempDir, extra: &str) -> PathBuf {
    let cfg = tmp.path().join("sim.json");
    let text = if extra.is_empty() {
        SMALL_SIM.to_string()
    } else {
        SMALL_SIM.replace("\"seed\": 11", &format!("\"seed\": 11, {extra}"))
    };
    fs::write(&cfg, text).unwrap();
    let out = tmp.path().join("sim");
    ok(&["simulate", "--config", s(&cfg), "--out", s(&out)]);
    out
}

#[test]
fn predict_example() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("p");
    let run = ok(&[
        "predict",
        "--beta-deg",
        "0.22",
        "--ipd-mm",
        "64",
        "--distances",
        "0.45,0.50,0.55",
        "--out",
        s(&out),
    ]);
    let csv = fs::read_to_string(out.join("predictions.csv")).unwrap();
    assert_eq!(String::from_utf8_lossy(&run.stdout), csv);
    let mut lines = csv.lines();
    assert_eq!(
        lines.next(),
        Some("distance_m,original_error_m,transformed_error_m")
    );
    let eyes = EyeGeometry::from_mm(64.0).unwrap();
    let params = PerturbationParams::from_degrees(0.22).unwrap();
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 3);
    for (row, d) in rows.iter().zip([0.45, 0.50, 0.55]) {
        assert_eq!(row[0], d);
        let expected = predict_endpoint(d, &params, &eyes).unwrap().endpoint_error;
        assert_eq!(row[1], expected);
        assert!(row[1] < 0.0);
        assert!(row[2].abs() < 1e-12, "transformed error {}", row[2]);
    }
    let manifest = read_json(&out.join("manifest.json"));
    assert_eq!(manifest["subcommand"], "predict");
    assert_eq!(manifest["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(manifest["config"]["ipd_mm"], 64.0);
}

const QUAD: &str = "# scene\no quad\nv -0.1 -0.1 0.5\nv 0.1 -0.1 0.5\nv 0.1 0.1 0.52 1.0\nv -0.1 0.1 0.5\nvn 0 0 -1\nf 1//1 2//1 3//1 4//1\n";

#[test]
fn transform_zero_offset_is_identity() {
    let tmp = TempDir::new().unwrap();
    let scene = tmp.path().join("scene.obj");
    fs::write(&scene, QUAD).unwrap();
    let out = tmp.path().join("t");
    ok(&[
        "transform",
        "--in",
        s(&scene),
        "--beta-deg",
        "0",
        "--ipd-mm",
        "63",
        "--out",
        s(&out),
    ]);
    assert_eq!(fs::read_to_string(out.join("scene.obj")).unwrap(), QUAD);
    let report = read_json(&out.join("transform_report.json"));
    assert_eq!(report["moved_vertices"], 0);
    assert_eq!(report["stale_normals"], false);
    assert_eq!(fs::read_to_string(&scene).unwrap(), QUAD);
}

#[test]
fn transform_points_and_conventions() {
    let tmp = TempDir::new().unwrap();
    let scene = tmp.path().join("pts.csv");
    fs::write(&scene, "x,y,z\n0.0,0.0,0.5\n0.05,-0.02,0.4\n").unwrap();
    let read = |dir: &Path| -> Vec<Vec<f64>> {
        fs::read_to_string(dir.join("pts.csv"))
            .unwrap()
            .lines()
            .skip(1)
            .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
            .collect()
    };
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    ok(&[
        "transform",
        "--in",
        s(&scene),
        "--beta-deg",
        "0.22",
        "--ipd-mm",
        "63",
        "--out",
        s(&a),
    ]);
    ok(&[
        "transform",
        "--in",
        s(&scene),
        "--beta-deg",
        "0.22",
        "--ipd-mm",
        "63",
        "--literal-half-angle",
        "--out",
        s(&b),
    ]);
    let (pa, pb) = (read(&a), read(&b));
    // lateral coordinates kept, depth pushed out, half-angle variant pushes further
    assert_eq!(pa[1][..2], [0.05, -0.02]);
    assert!(pa[0][2] > 0.5 && pb[0][2] > pa[0][2]);
    let manifest = read_json(&b.join("manifest.json"));
    assert_eq!(manifest["config"]["convention"], "literal-half-angle");
}

#[test]
fn validation_errors_exit_1_and_name_the_field() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("x");
    let e = vac(&["predict", "--beta-deg", "9", "--out", s(&out)]);
    assert_eq!(e.status.code(), Some(1));
    assert!(stderr(&e).contains("beta_deg"), "{}", stderr(&e));

    let e = vac(&["predict", "--ipd-mm", "200", "--out", s(&out)]);
    assert_eq!(e.status.code(), Some(1));
    assert!(stderr(&e).contains("ipd_mm"));

    let e = vac(&["fit", "--split", "1.5", "--out", s(&out)]);
    assert_eq!(e.status.code(), Some(1));
    assert!(stderr(&e).contains("input"));

    let cfg = tmp.path().join("c.json");
    fs::write(&cfg, r#"{"simulate": {"n_participants": 0}}"#).unwrap();
    let e = vac(&["simulate", "--config", s(&cfg), "--out", s(&out)]);
    assert_eq!(e.status.code(), Some(1));
    assert!(stderr(&e).contains("n_participants"));

    fs::write(&cfg, r#"{"seeds": 3}"#).unwrap();
    let e = vac(&["simulate", "--config", s(&cfg), "--out", s(&out)]);
    assert_eq!(e.status.code(), Some(1));
    assert!(stderr(&e).contains("seeds"));

    assert_eq!(vac(&["nonsense"]).status.code(), Some(1));
    assert_eq!(vac(&["--version"]).status.code(), Some(0));
    assert!(!out.exists());
}

#[test]
fn data_errors_exit_2_with_location() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("x");
    let traj = tmp.path().join("traj.csv");
    let targets = tmp.path().join("targets.json");
    fs::write(&traj, "trial_id,t,x,y,z\n1,0,0,0,0\n1,oops,0,0,0\n").unwrap();
    fs::write(&targets, "[]").unwrap();
    let e = vac(&[
        "analyze",
        "--input",
        s(&traj),
        "--targets",
        s(&targets),
        "--out",
        s(&out),
    ]);
    assert_eq!(e.status.code(), Some(2));
    assert!(stderr(&e).contains("traj.csv:3"), "{}", stderr(&e));

    fs::write(&traj, "trial_id,t,x,y,z\n1,0,0,0,0\n").unwrap();
    fs::write(
        &targets,
        "[\n  {\"trial_id\": 1,\n   \"target\": [0, 0]}\n]",
    )
    .unwrap();
    let e = vac(&[
        "analyze",
        "--input",
        s(&traj),
        "--targets",
        s(&targets),
        "--out",
        s(&out),
    ]);
    assert_eq!(e.status.code(), Some(2));
    assert!(stderr(&e).contains("targets.json:3"), "{}", stderr(&e));

    let scene = tmp.path().join("bad.obj");
    fs::write(&scene, "v 0 0 0.5\nv 0 0.1\n").unwrap();
    let e = vac(&["transform", "--in", s(&scene), "--out", s(&out)]);
    assert_eq!(e.status.code(), Some(2));
    assert!(stderr(&e).contains("bad.obj:2"), "{}", stderr(&e));

    let e = vac(&[
        "fit",
        "--input",
        s(&tmp.path().join("missing.csv")),
        "--out",
        s(&out),
    ]);
    assert_eq!(e.status.code(), Some(2));
    assert!(stderr(&e).contains("missing.csv"));
}

#[test]
fn config_from_environment() {
    let tmp = TempDir::new().unwrap();
    let cfg = tmp.path().join("c.json");
    fs::write(&cfg, r#"{"predict": {"distances_m": [0.3], "ipd_mm": 60}}"#).unwrap();
    let out = tmp.path().join("p");
    let run = Command::new(env!("CARGO_BIN_EXE_vac"))
        .args(["predict", "--out", s(&out)])
        .env("VAC_CONFIG", &cfg)
        .output()
        .unwrap();
    assert!(run.status.success());
    let manifest = read_json(&out.join("manifest.json"));
    assert_eq!(manifest["config"]["distances_m"], serde_json::json!([0.3]));
    assert_eq!(manifest["config"]["ipd_mm"], 60.0);
}

#[test]
fn manifests_replay_byte_identically() {
    let tmp = TempDir::new().unwrap();
    let sim = simulate_small(&tmp, "");
    let sim2 = tmp.path().join("sim2");
    ok(&[
        "simulate",
        "--config",
        s(&sim.join("manifest.json")),
        "--out",
        s(&sim2),
    ]);
    assert_eq!(snapshot(&sim), snapshot(&sim2));

    let an = tmp.path().join("an");
    ok(&[
        "analyze",
        "--input",
        s(&sim.join("trajectories.csv")),
        "--targets",
        s(&sim.join("targets.json")),
        "--eye-pose",
        s(&sim.join("eye_pose.json")),
        "--out",
        s(&an),
    ]);
    let an2 = tmp.path().join("an2");
    ok(&[
        "analyze",
        "--config",
        s(&an.join("manifest.json")),
        "--out",
        s(&an2),
    ]);
    assert_eq!(snapshot(&an), snapshot(&an2));

    let fit = tmp.path().join("fit");
    ok(&[
        "fit",
        "--input",
        s(&an.join("outcomes.csv")),
        "--seed",
        "5",
        "--out",
        s(&fit),
    ]);
    let fit2 = tmp.path().join("fit2");
    ok(&[
        "fit",
        "--config",
        s(&fit.join("manifest.json")),
        "--out",
        s(&fit2),
    ]);
    assert_eq!(snapshot(&fit), snapshot(&fit2));

    let e = vac(&[
        "predict",
        "--config",
        s(&fit.join("manifest.json")),
        "--out",
        s(&fit2),
    ]);
    assert_eq!(e.status.code(), Some(1));
}

#[test]
fn inputs_are_not_modified() {
    let tmp = TempDir::new().unwrap();
    let sim = simulate_small(&tmp, "");
    let before = snapshot(&sim);
    ok(&[
        "analyze",
        "--input",
        s(&sim.join("trajectories.csv")),
        "--targets",
        s(&sim.join("targets.json")),
        "--out",
        s(&tmp.path().join("an")),
    ]);
    ok(&[
        "fit",
        "--input",
        s(&sim.join("trials.csv")),
        "--out",
        s(&tmp.path().join("fit")),
    ]);
    assert_eq!(before, snapshot(&sim));
}

fn fitted_beta_deg(fit_dir: &Path) -> f64 {
    let results = read_json(&fit_dir.join("fit_results.json"));
    let with = results["fits"]
        .as_array()
        .unwrap()
        .iter()
        .find(|f| f["variant"] == "with-offset")
        .unwrap();
    assert_eq!(with["selected"], true);
    assert_eq!(with["converged"], true);
    with["beta_deg"].as_f64().unwrap()
}

/// Noise-free data with every IPD at 63 mm. Fitting the simulated errors
/// recovers β to solver precision. Going through trajectories adds the
/// detector's systematic endpoint bias, which the offset and IPDs share;
/// the offset-to-IPD ratio stays within a few percent even though β alone
/// moves further.
#[test]
fn simulate_analyze_fit_round_trip() {
    const DIRECT_TOL_DEG: f64 = 1e-6;
    const TRAJECTORY_TOL_DEG: f64 = 0.1;
    const RATIO_REL_TOL: f64 = 0.08;

    let tmp = TempDir::new().unwrap();
    let sim = simulate_small(
        &tmp,
        r#""noise_sd_mm": 0, "trajectory_noise_sd_mm": 0, "ipd_sd_mm": 0, "beta_deg": 0.22"#,
    );

    let direct = tmp.path().join("direct");
    ok(&[
        "fit",
        "--input",
        s(&sim.join("trials.csv")),
        "--out",
        s(&direct),
    ]);
    let beta_direct = fitted_beta_deg(&direct);
    assert!(
        (beta_direct - 0.22).abs() < DIRECT_TOL_DEG,
        "direct β {beta_direct}"
    );

    let an = tmp.path().join("an");
    ok(&[
        "analyze",
        "--input",
        s(&sim.join("trajectories.csv")),
        "--targets",
        s(&sim.join("targets.json")),
        "--eye-pose",
        s(&sim.join("eye_pose.json")),
        "--out",
        s(&an),
    ]);
    let fit = tmp.path().join("fit");
    ok(&[
        "fit",
        "--input",
        s(&an.join("outcomes.csv")),
        "--out",
        s(&fit),
    ]);
    let beta = fitted_beta_deg(&fit);
    assert!(
        (beta - 0.22).abs() < TRAJECTORY_TOL_DEG,
        "round-trip β {beta}"
    );

    let results = read_json(&fit.join("fit_results.json"));
    let with = results["fits"]
        .as_array()
        .unwrap()
        .iter()
        .find(|f| f["variant"] == "with-offset")
        .unwrap();
    let ipds: Vec<f64> = with["ipd_mm"]
        .as_object()
        .unwrap()
        .values()
        .map(|v| v.as_f64().unwrap())
        .collect();
    for ipd in ipds {
        let ratio = (beta / ipd) / (0.22 / 63.0);
        assert!(
            (ratio - 1.0).abs() < RATIO_REL_TOL,
            "β/IPD ratio off by {ratio}"
        );
    }
}
