use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

use scaffold_core::geometry::{Pose, Vec3};
use scaffold_core::grasp::{GraspAnnotation, GraspFrame, WaypointPath};
use scaffold_core::io::{export_mesh, save_project, write_xyz, AssemblyItem, GraspItem, ItemFlags, ProjectDocument};
use scaffold_core::meshing::box_mesh;
use scaffold_core::scaffold::PartAssembly;
use scaffold_core::synthetic::{cylinder_cloud, cylinder_mesh, stacked_circles};

fn scaffold(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_scaffold"))
        .args(args)
        .env_remove("SCAFFOLD_SEED")
        .output()
        .expect("binary runs")
}

fn ok_json(args: &[&str]) -> Value {
    let out = scaffold(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("json output")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn write_json<T: serde::Serialize>(dir: &Path, name: &str, v: &T) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, serde_json::to_string(v).unwrap()).unwrap();
    p
}

#[test]
fn compare_with_itself_is_all_zero() {
    let dir = tempfile::tempdir().unwrap();
    let m = dir.path().join("x.obj");
    export_mesh(&box_mesh(Vec3::zeros(), Vec3::new(1.0, 2.0, 0.5)), &m, None).unwrap();
    let r = ok_json(&["compare", s(&m), s(&m), "--samples", "2000", "--seed", "3"]);
    for key in ["com_e", "s_e", "v_e", "it_e", "hd", "mean_hd", "r_com_e", "r_s_e", "r_v_e", "r_it_e", "r_mu_h"] {
        assert_eq!(r[key].as_f64(), Some(0.0), "{key}");
    }
}

#[test]
fn compare_is_deterministic_and_seeded() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.stl");
    let b = dir.path().join("b.ply");
    export_mesh(&box_mesh(Vec3::zeros(), Vec3::repeat(1.0)), &a, None).unwrap();
    export_mesh(&cylinder_mesh(0.5, 1.0, 64), &b, None).unwrap();
    let args = ["compare", s(&a), s(&b), "--samples", "1500", "--duration", "30"];
    let first = scaffold(&args);
    let second = scaffold(&args);
    assert!(first.status.success());
    assert_eq!(first.stdout, second.stdout);
    let env = Command::new(env!("CARGO_BIN_EXE_scaffold"))
        .args(args)
        .env("SCAFFOLD_SEED", "12345")
        .output()
        .unwrap();
    assert!(env.status.success());
    assert_ne!(env.stdout, first.stdout);
    let r: Value = serde_json::from_slice(&first.stdout).unwrap();
    assert!(r["efficiency"].as_f64().unwrap() > 0.0);
    assert_eq!(r["subject_id"], "b");
}

#[test]
fn cylinder_pipeline_reconstructs_within_two_percent() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let cloud = d.join("cylinder.xyz");
    std::fs::write(&cloud, write_xyz(&cylinder_cloud(0.04, 0.12, 96, 40))).unwrap();
    let ideal = d.join("ideal.obj");
    export_mesh(&cylinder_mesh(0.04, 0.12, 512), &ideal, None).unwrap();
    let (inserted, wrapped, subject) = (d.join("s0.json"), d.join("s1.json"), d.join("subject.stl"));

    let out = scaffold(&["insert", s(&cloud), "--view", "0,0,-1", "--slices", "6", "--handles", "12", "-o", s(&inserted)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let out = scaffold(&["shrinkwrap", s(&inserted), s(&cloud), "-o", s(&wrapped)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let out = scaffold(&["mesh", s(&wrapped), "--kind", "difference", "-o", s(&subject)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let r = ok_json(&["compare", s(&ideal), s(&subject), "--samples", "20000"]);
    let r_mu_h = r["r_mu_h"].as_f64().unwrap();
    assert!(r_mu_h <= 0.02, "{r_mu_h}");

    let m = ok_json(&["measure", s(&subject)]);
    let v = m["volume"].as_f64().unwrap();
    let exact = std::f64::consts::PI * 0.04 * 0.04 * 0.12;
    assert!((v / exact - 1.0).abs() < 0.02, "{v}");
}

#[test]
fn merge_averages_radii() {
    let dir = tempfile::tempdir().unwrap();
    let a = write_json(dir.path(), "a.json", &stacked_circles(&[1.0, 1.0], 16, 1.0, 0.5).unwrap());
    let b = write_json(dir.path(), "b.json", &stacked_circles(&[3.0, 3.0], 16, 1.0, 0.5).unwrap());
    let p = ok_json(&["merge", s(&a), s(&b), "--slices", "3", "--handles", "16"]);
    let slices = p["slices"].as_array().unwrap();
    assert_eq!(slices.len(), 3);
    for h in slices[1]["external"].as_array().unwrap() {
        let (x, y) = (h[0].as_f64().unwrap(), h[1].as_f64().unwrap());
        assert!(((x * x + y * y).sqrt() - 2.0).abs() < 1e-3);
    }
}

#[test]
fn path_compare_with_itself_is_zero() {
    let dir = tempfile::tempdir().unwrap();
    let mut path = WaypointPath::new(
        "p",
        "obj",
        Pose::from_translation(Vec3::new(0.0, 0.0, 0.3)),
        Pose::identity(),
        Pose::identity(),
    );
    path.record(Pose::from_translation(Vec3::new(0.2, 0.1, 0.4)));
    let p = write_json(dir.path(), "p.json", &path);
    let r = ok_json(&["path-compare", s(&p), s(&p), "--resample", "50"]);
    assert_eq!(r["ribbon_area"].as_f64(), Some(0.0));
    assert_eq!(r["kind"], "path_difference");
}

#[test]
fn grasp_eval_reads_project() {
    let dir = tempfile::tempdir().unwrap();
    let mut doc = ProjectDocument::new("g");
    let mut can = stacked_circles(&[0.025, 0.025], 16, 0.1, 0.5).unwrap();
    can.name = "can".into();
    doc.assemblies.push(AssemblyItem {
        id: "can".into(),
        cloud: None,
        assembly: PartAssembly::single(can),
        flags: ItemFlags::default(),
    });
    // palm above the can top, approaching along -Z, fingers closing along Y
    let grasp = Pose::from_axis_angle(Vec3::new(0.0, 0.0, 0.13), Vec3::x(), std::f64::consts::PI);
    for (id, pose) in [("side", grasp), ("miss", Pose::from_translation(Vec3::new(0.0, 0.0, 1.0)))] {
        doc.grasps.push(GraspItem {
            annotation: GraspAnnotation::from_world(id, "can", pose, pose, GraspFrame::Sensor, None).unwrap(),
            flags: ItemFlags::default(),
        });
    }
    let p = dir.path().join("g.scafproj");
    save_project(&doc, &p).unwrap();
    let q = ok_json(&["grasp-eval", s(&p), "side", "--directions", "256"]);
    assert_eq!(q["force_closure"], true, "{q}");
    assert!(q["epsilon"].as_f64().unwrap() > 0.0);
    let q = ok_json(&["grasp-eval", s(&p), "miss"]);
    assert_eq!(q["force_closure"], false);
    assert_eq!(q["contact_count"], 0);
}

#[test]
fn failures_exit_nonzero_with_error_name() {
    let dir = tempfile::tempdir().unwrap();
    let out = scaffold(&["measure", s(&dir.path().join("missing.obj"))]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error[IoError]"));

    let p = dir.path().join("old.scafproj");
    std::fs::write(&p, r#"{"version": "99"}"#).unwrap();
    let out = scaffold(&["grasp-eval", s(&p), "g"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error[VersionMismatch]"));

    let bad = dir.path().join("bad.xyz");
    std::fs::write(&bad, "1 2 3\n4 five 6\n").unwrap();
    let out = scaffold(&["insert", s(&bad)]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.starts_with("error[ParseError]") && err.contains("line 2"), "{err}");
}
