//! Harness behavior: CLI binary smoke tests, output determinism, the
//! CFL-improvement probe, and a reduced multi-object run.

use std::path::{Path, PathBuf};
use std::process::Command;

use cutwave::config::ScenarioConfig;
use cutwave::scenarios::{self, stable_dt_bisection, RunOverrides};
use cutwave_core::curves::{GridLines, ParametricCurve};
use cutwave_core::mesh::MeshBuilder;
use cutwave_core::srd::SrdOperator;
use cutwave_core::wave::Discretization;

fn tmp(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("cutwave-harness-{name}"));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_cutwave"))
}

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

#[test]
fn cli_mesh_dump_and_field_sampler() {
    let dir = tmp("cli");
    let status = bin()
        .args(["mesh", "--config"])
        .arg(configs_dir().join("eig.json"))
        .arg("--out")
        .arg(dir.join("mesh"))
        .status()
        .unwrap();
    assert!(status.success());
    for f in [
        "elements.csv",
        "faces.csv",
        "quad_nodes.csv",
        "conditioning.csv",
        "srd_neighborhoods.csv",
        "summary.json",
    ] {
        assert!(dir.join("mesh").join(f).exists(), "{f} missing");
    }

    // Coefficient generator plus the analytic field sampler.
    let coeffs = dir.join("coeffs.csv");
    assert!(bin()
        .args(["gen-pacman-demo", "--terms", "40", "--out"])
        .arg(&coeffs)
        .status()
        .unwrap()
        .success());
    assert!(coeffs.exists());

    // Point the pacman config at the generated file.
    let cfg_path = dir.join("pacman.json");
    let text = std::fs::read_to_string(configs_dir().join("pacman.json")).unwrap();
    let text = text.replace("pacman_coeffs.csv", coeffs.to_str().unwrap());
    std::fs::write(&cfg_path, text).unwrap();
    assert!(bin()
        .args(["pacman-field", "--grid", "24", "--config"])
        .arg(&cfg_path)
        .arg("--out")
        .arg(dir.join("field"))
        .status()
        .unwrap()
        .success());
    let field = std::fs::read_to_string(dir.join("field").join("pacman_field.csv")).unwrap();
    assert_eq!(field.lines().count(), 1 + 24 * 24);
    // Solid-body points dump as zero; fluid points are generally nonzero.
    assert!(field.lines().skip(1).any(|l| l.split(',').nth(2).unwrap() != "0"));
}

#[test]
fn outputs_are_deterministic() {
    let text = r#"{
        "scenario": "custom",
        "domain": { "x": [-1.0, 1.0], "y": [-1.0, 1.0] },
        "nx": 6, "ny": 6,
        "curves": [ { "circle": { "center": [0.2, -0.1], "radius": 0.35, "fluid": "outside" } } ],
        "degree": 2,
        "boundary": {
            "left": { "pressure_pulse": { "p_set": 1.0, "until": 0.04 } },
            "right": "zero_pressure", "bottom": "extrapolation", "top": "extrapolation",
            "embedded": ["wall"]
        },
        "integrator": { "t_end": 0.2, "abs_tol": 1e-8, "rel_tol": 1e-8 },
        "outputs": { "times": [0.1], "plot_density": 5, "energy_log": true }
    }"#;
    let cfg: ScenarioConfig = serde_json::from_str(text).unwrap();
    let d1 = tmp("det1");
    let d2 = tmp("det2");
    scenarios::run(cfg.clone(), text.as_bytes(), Path::new("."), &d1, RunOverrides::none()).unwrap();
    scenarios::run(cfg, text.as_bytes(), Path::new("."), &d2, RunOverrides::none()).unwrap();
    for f in ["energy.csv", "fields_t0.1.csv", "fields_final.csv"] {
        let a = std::fs::read(d1.join(f)).unwrap();
        let b = std::fs::read(d2.join(f)).unwrap();
        assert_eq!(a, b, "{f} differs between identical runs");
    }
}

#[test]
fn srd_relaxes_the_stable_step_by_10x() {
    // Bisect the largest stable fixed RK4 step with and without
    // redistribution on the eigenvalue-experiment mesh.
    let c = ParametricCurve::circle([0.0, 0.0], 0.699, false);
    let mesh = MeshBuilder::new(GridLines::uniform([-1.0, 1.0], [-1.0, 1.0], 8, 8), vec![c])
        .build()
        .unwrap();
    let disc = Discretization::build(mesh, 4).unwrap();
    let srd = SrdOperator::build(&disc.mesh, &disc.quad, &disc.ops, 0.5).unwrap();
    let dt_without = stable_dt_bisection(0.5, &disc, None, 0.3);
    let dt_with = stable_dt_bisection(0.5, &disc, Some(&srd), 0.3);
    let ratio = dt_with / dt_without;
    eprintln!("stable dt: {dt_without:.3e} without, {dt_with:.3e} with redistribution (x{ratio:.1})");
    assert!(
        ratio >= 10.0,
        "stable-step improvement {ratio:.2} below 10 ({dt_without:.3e} -> {dt_with:.3e})"
    );
}

#[test]
fn reduced_fish_run_bounded_and_complete() {
    // Scaled-down multi-object scenario: snapshots written, energy bounded.
    let base = configs_dir();
    let (mut cfg, bytes) = ScenarioConfig::from_file(&base.join("fish.json")).unwrap();
    cfg.nx = 60;
    cfg.ny = 60;
    cfg.degree = 1;
    // Keep two staggered fish.
    cfg.curves.truncate(2);
    cfg.boundary.embedded.truncate(2);
    let icfg = cfg.integrator.as_mut().unwrap();
    icfg.t_end = 0.3;
    icfg.abs_tol = 1e-6;
    icfg.rel_tol = 1e-6;
    cfg.outputs.times = vec![0.12, 0.19];
    let dir = tmp("fish");
    scenarios::run(cfg, &bytes, &base, &dir, RunOverrides::none()).unwrap();
    assert!(dir.join("fields_t0.12.csv").exists());
    assert!(dir.join("fields_t0.19.csv").exists());
    assert!(dir.join("fields_final.csv").exists());
    let energy = std::fs::read_to_string(dir.join("energy.csv")).unwrap();
    let mut max_e = 0.0f64;
    let mut last_t = -1.0;
    for line in energy.lines().skip(1) {
        let cols: Vec<&str> = line.split(',').collect();
        let t: f64 = cols[0].parse().unwrap();
        let e: f64 = cols[2].parse().unwrap();
        assert!(t > last_t);
        last_t = t;
        assert!(e.is_finite());
        max_e = max_e.max(e);
    }
    assert!(max_e > 0.0, "pulse injected energy");
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap();
    let final_e = summary["results"]["final_energy"].as_f64().unwrap();
    assert!(final_e.is_finite() && final_e <= max_e * (1.0 + 1e-9));
}

#[test]
fn mms_override_flags() {
    // --no-srd, --tau, and --degree reach the solver.
    let dir = tmp("overrides");
    let text = r#"{
        "scenario": "mms",
        "domain": { "x": [-1.0, 1.0], "y": [-1.0, 1.0] },
        "nx": 4, "ny": 4,
        "curves": [ { "circle": { "center": [-0.5, 0.0], "radius": 0.3, "fluid": "outside" } } ],
        "boundary": { "left": "analytic", "right": "analytic", "bottom": "analytic", "top": "analytic", "embedded": ["analytic"] },
        "mms": { "degrees": [1], "resolutions": [4, 8], "t_end": 0.2 }
    }"#;
    let cfg_path = dir.join("cfg.json");
    std::fs::write(&cfg_path, text).unwrap();
    assert!(bin()
        .args(["mms", "--no-srd", "--tau", "0.25", "--config"])
        .arg(&cfg_path)
        .arg("--out")
        .arg(dir.join("out"))
        .status()
        .unwrap()
        .success());
    let errors = std::fs::read_to_string(dir.join("out").join("mms_errors.csv")).unwrap();
    assert_eq!(errors.lines().count(), 3);
}
