//! End-to-end behaviour of the commands, through the library and through the binary.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use mvcrit_cli::{cmd_check, cmd_check_batch, cmd_conjugate, cmd_gen, cmd_verify, sidecar_path, Format, SceneFile, Settings};
use mvcrit_core::linalg::{random_matrix4, random_vec4, random_wellconditioned4};
use mvcrit_core::{apply_homography, Camera, Family, HomPoint3, Homography, Scene};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::Value;
use tempfile::TempDir;

fn settings() -> Settings {
    Settings::default()
}

fn gen(dir: &Path, family: Family, n: usize, seed: u64) -> PathBuf {
    let out = dir.join(format!("{}-{seed}.json", family.slug()));
    cmd_gen(family, n, seed, &out, &settings()).unwrap();
    out
}

fn random_scene(seed: u64, n: usize) -> Scene {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cams = (0..3)
        .map(|_| Camera::new(random_matrix4(&mut rng).fixed_view::<3, 4>(0, 0).into_owned(), 1e-9).unwrap())
        .collect();
    let pts = (0..n).map(|_| HomPoint3::new(random_vec4(&mut rng)).unwrap()).collect();
    Scene::new(cams, pts, None, 1e-6).unwrap()
}

fn write_scene(dir: &Path, name: &str, scene: Scene) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, SceneFile::new(scene).emit()).unwrap();
    path
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_mvcrit"))
}

#[test]
fn check_reports_family_and_exit_codes() {
    let dir = TempDir::new().unwrap();
    let eq = gen(dir.path(), Family::EllipticQuartic, 12, 1);
    let o = cmd_check(&eq, &settings()).unwrap();
    assert_eq!(o.code, 0);
    let report: Value = serde_json::from_str(&o.stdout).unwrap();
    assert_eq!(report["status"], "critical");
    assert_eq!(report["family"], "elliptic quartic");
    assert_eq!(report["witness"]["quadrics"].as_array().unwrap().len(), 3);
    assert_eq!(report["witness"]["quadrics"][0]["coefficients"].as_array().unwrap().len(), 10);
    assert_eq!(report["witness"]["lines"].as_array().unwrap().len(), 6);
    assert_eq!(report["witness"]["residual"]["kind"], "point");
    assert_eq!(report["image_residuals"].as_array().unwrap().len(), 12);
    assert!(report["max_image_residual"].as_f64().unwrap() <= 1e-8);
    assert!(report["timing_ms"].as_f64().is_some());

    let random = write_scene(dir.path(), "random.json", random_scene(3, 12));
    assert_eq!(cmd_check(&random, &settings()).unwrap().code, 1);

    let text = cmd_check(&eq, &Settings { format: Format::Text, ..settings() }).unwrap();
    assert!(text.stdout.contains("status: critical"));
}

#[test]
fn report_is_self_contained() {
    let dir = TempDir::new().unwrap();
    let path = gen(dir.path(), Family::ThreeOnCurve, 10, 2);
    let report: Value = serde_json::from_str(&cmd_check(&path, &settings()).unwrap().stdout).unwrap();
    let conj = &report["witness"]["conjugate"];
    let rows = |v: &Value| -> Vec<Vec<f64>> {
        v.as_array()
            .unwrap()
            .iter()
            .map(|r| r.as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect())
            .collect()
    };
    let cams = rows(&conj["cameras"]).iter().map(|r| Camera::from_rows(r, 1e-9).unwrap()).collect();
    let pts = rows(&conj["points"]).iter().map(|r| HomPoint3::from_slice(r).unwrap()).collect();
    let rebuilt = Scene::new(cams, pts, None, 1e-6).unwrap();
    let original = mvcrit_cli::read_scene(&path).unwrap().scene;
    let worst = mvcrit_core::image_residuals(&original, &rebuilt).unwrap().into_iter().fold(0.0, f64::max);
    assert!(worst <= 1e-8);
}

#[test]
fn gen_is_deterministic_and_writes_sidecar() {
    let dir = TempDir::new().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    cmd_gen(Family::ThreeOnCurve, 10, 7, &a, &settings()).unwrap();
    cmd_gen(Family::ThreeOnCurve, 10, 7, &b, &settings()).unwrap();
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    assert_eq!(fs::read(sidecar_path(&a)).unwrap(), fs::read(sidecar_path(&b)).unwrap());
    let witness: Value = serde_json::from_str(&fs::read_to_string(sidecar_path(&a)).unwrap()).unwrap();
    assert_eq!(witness["family"], "twisted-cubic-3on");
    assert_eq!(witness["seed"], 7);
}

#[test]
fn seven_point_file_is_accepted() {
    let dir = TempDir::new().unwrap();
    let path = gen(dir.path(), Family::SevenPoints, 7, 4);
    assert_eq!(cmd_check(&path, &settings()).unwrap().code, 0);
    let witness: Value = serde_json::from_str(&fs::read_to_string(sidecar_path(&path)).unwrap()).unwrap();
    assert_eq!(witness["residual"].as_array().unwrap().len(), 4);
}

#[test]
fn conjugate_and_verify_round_trip() {
    let dir = TempDir::new().unwrap();
    for family in [Family::EllipticQuartic, Family::PlaneConic, Family::TwoLines] {
        let scene = gen(dir.path(), family, 11, 5);
        let conj = dir.path().join(format!("{}.conj.json", family.slug()));
        let o = cmd_conjugate(&scene, Some(&conj), &settings()).unwrap();
        assert_eq!(o.code, 0, "{}", o.stdout);
        let summary: Value = serde_json::from_str(&o.stdout).unwrap();
        assert_eq!(summary["equivalent"], false);
        assert!(summary["max_image_residual"].as_f64().unwrap() <= 1e-8);
        assert_eq!(cmd_verify(&scene, &conj, &settings()).unwrap().code, 0);

        // the conjugate is critical too, and its own conjugate has the original images
        let back = dir.path().join(format!("{}.back.json", family.slug()));
        assert_eq!(cmd_conjugate(&conj, Some(&back), &settings()).unwrap().code, 0);
        let a = mvcrit_cli::read_scene(&scene).unwrap().scene;
        let b = mvcrit_cli::read_scene(&back).unwrap().scene;
        let worst = mvcrit_core::image_residuals(&a, &b).unwrap().into_iter().fold(0.0, f64::max);
        assert!(worst <= 1e-8, "{worst}");
    }
}

#[test]
fn conjugate_of_non_critical_scene_exits_one() {
    let dir = TempDir::new().unwrap();
    let path = write_scene(dir.path(), "random.json", random_scene(8, 10));
    let out = dir.path().join("never.json");
    assert_eq!(cmd_conjugate(&path, Some(&out), &settings()).unwrap().code, 1);
    assert!(!out.exists());
}

#[test]
fn verify_rejects_equivalent_and_perturbed_scenes() {
    let dir = TempDir::new().unwrap();
    let scene_path = gen(dir.path(), Family::TwoOnCurve, 12, 3);
    let scene = mvcrit_cli::read_scene(&scene_path).unwrap().scene;

    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let h = Homography::new(random_wellconditioned4(&mut rng)).unwrap();
    let moved = write_scene(dir.path(), "moved.json", apply_homography(&h, &scene).unwrap());
    let report = mvcrit_cli::verify_report(&scene_path, &moved, &settings()).unwrap();
    assert!(report.images_match);
    assert_eq!(report.equivalent, Some(true));
    assert_eq!(cmd_verify(&scene_path, &moved, &settings()).unwrap().code, 1);

    let conj_path = dir.path().join("conj.json");
    cmd_conjugate(&scene_path, Some(&conj_path), &settings()).unwrap();
    let mut conj = mvcrit_cli::read_scene(&conj_path).unwrap().scene;
    let x = *conj.points[0].coords();
    conj.points[0] = HomPoint3::new(x + random_vec4(&mut rng) * 1e-5).unwrap();
    let bad = write_scene(dir.path(), "bad.json", conj);
    let tight = Settings { tol: Some(1e-8), ..settings() };
    let report = mvcrit_cli::verify_report(&scene_path, &bad, &tight).unwrap();
    assert!(!report.images_match);
    assert!(report.failures.iter().any(|f| f.starts_with("point 0 ")));
    assert_eq!(cmd_verify(&scene_path, &bad, &tight).unwrap().code, 1);
}

#[test]
fn verify_cardinality_mismatch_is_an_error() {
    let dir = TempDir::new().unwrap();
    let a = write_scene(dir.path(), "a.json", random_scene(1, 9));
    let b = write_scene(dir.path(), "b.json", random_scene(1, 8));
    assert!(cmd_verify(&a, &b, &settings()).is_err());
    let status = bin().args(["verify"]).arg(&a).arg(&b).output().unwrap().status;
    assert_eq!(status.code(), Some(2));
}

#[test]
fn batch_is_ordered_and_takes_the_worst_exit_code() {
    let dir = TempDir::new().unwrap();
    write_scene(dir.path(), "b-random.json", random_scene(2, 10));
    cmd_gen(Family::ConicCameras, 9, 1, &dir.path().join("a-conic.json"), &settings()).unwrap();
    fs::write(dir.path().join("c-broken.json"), "{\"version\": 1,").unwrap();
    fs::write(dir.path().join("notes.txt"), "ignored").unwrap();
    let o = cmd_check_batch(dir.path(), &settings()).unwrap();
    assert_eq!(o.code, 2);
    let reports: Value = serde_json::from_str(&o.stdout).unwrap();
    let inputs: Vec<String> = reports
        .as_array()
        .unwrap()
        .iter()
        .map(|r| Path::new(r["input"].as_str().unwrap()).file_name().unwrap().to_string_lossy().into_owned())
        .collect();
    // witness sidecars are skipped
    assert_eq!(inputs, ["a-conic.json", "b-random.json", "c-broken.json"]);
    let status: Vec<&str> = reports.as_array().unwrap().iter().map(|r| r["status"].as_str().unwrap()).collect();
    assert_eq!(status, ["critical", "not-critical", "error"]);

    fs::remove_file(dir.path().join("c-broken.json")).unwrap();
    assert_eq!(cmd_check_batch(dir.path(), &settings()).unwrap().code, 1);
}

#[test]
fn binary_exit_codes_and_positions() {
    let dir = TempDir::new().unwrap();
    let broken = dir.path().join("broken.json");
    fs::write(&broken, "{\n  \"version\": 1,\n  \"cameras\": [[1, 2]],\n  \"points\": []\n}\n").unwrap();
    let out = bin().arg("check").arg(&broken).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains(":3:"), "{err}");

    let out = bin().args(["gen", "--family", "bogus", "--out"]).arg(dir.path().join("x.json")).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bogus"));

    let scene = dir.path().join("eq.json");
    let status = bin()
        .args(["gen", "--family", "elliptic-quartic", "--n-points", "10", "--seed", "3", "--out"])
        .arg(&scene)
        .output()
        .unwrap()
        .status;
    assert_eq!(status.code(), Some(0));
    let out = bin().args(["check", "--format", "text"]).arg(&scene).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("family: elliptic quartic"));
}

#[test]
fn tolerance_comes_from_env_and_flag() {
    let dir = TempDir::new().unwrap();
    let scene = gen(dir.path(), Family::ConicCameras, 8, 2);
    let image_tol = |out: std::process::Output| -> f64 {
        let v: Value = serde_json::from_slice(&out.stdout).unwrap();
        v["tolerances"]["image"].as_f64().unwrap()
    };
    let out = bin().arg("check").arg(&scene).env("MVCRIT_TOL", "1e-7").output().unwrap();
    assert_eq!(image_tol(out), 1e-7);
    let out = bin().args(["check", "--tol", "2e-8"]).arg(&scene).env("MVCRIT_TOL", "1e-7").output().unwrap();
    assert_eq!(image_tol(out), 2e-8);
    let out = bin().args(["check", "--tol=-1"]).arg(&scene).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn report_can_be_written_to_a_file() {
    let dir = TempDir::new().unwrap();
    let scene = gen(dir.path(), Family::TwoLines, 8, 1);
    let report = dir.path().join("report.json");
    let out = bin().arg("check").arg(&scene).arg("--out").arg(&report).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let v: Value = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(v["status"], "critical");
}
