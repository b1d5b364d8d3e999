//! Configuration schema tests: strict key checking, curve construction,
//! boundary map resolution.

use std::io::Write;
use std::path::Path;

use cutwave::config::{parse_curve_csv, ScenarioConfig};

fn parse(text: &str) -> Result<ScenarioConfig, serde_json::Error> {
    serde_json::from_str(text)
}

const MINIMAL: &str = r#"{
    "scenario": "custom",
    "domain": { "x": [-1.0, 1.0], "y": [-1.0, 1.0] },
    "nx": 4, "ny": 4,
    "integrator": { "t_end": 0.1 }
}"#;

#[test]
fn minimal_config_parses_with_defaults() {
    let cfg = parse(MINIMAL).unwrap();
    cfg.validate().unwrap();
    assert_eq!(cfg.degree, 4);
    assert_eq!(cfg.tau_p, 0.5);
    assert!(cfg.srd.enabled);
    assert_eq!(cfg.srd.threshold, 0.5);
}

#[test]
fn unknown_keys_rejected() {
    let bad = MINIMAL.replace("\"nx\": 4", "\"nx\": 4, \"wavelength\": 3");
    assert!(parse(&bad).is_err());
    let bad_nested =
        MINIMAL.replace("\"x\": [-1.0, 1.0]", "\"x\": [-1.0, 1.0], \"z\": [0.0, 1.0]");
    assert!(parse(&bad_nested).is_err());
}

#[test]
fn embedded_bc_count_must_match_curves() {
    let text = r#"{
        "scenario": "custom",
        "domain": { "x": [-1.0, 1.0], "y": [-1.0, 1.0] },
        "nx": 4, "ny": 4,
        "curves": [ { "circle": { "center": [0.0, 0.0], "radius": 0.4, "fluid": "outside" } } ],
        "boundary": {
            "left": "wall", "right": "wall", "bottom": "wall", "top": "wall",
            "embedded": ["wall", "wall"]
        },
        "integrator": { "t_end": 0.1 }
    }"#;
    let cfg = parse(text).unwrap();
    assert!(cfg.validate().is_err());
}

#[test]
fn example_configs_parse_and_build() {
    let base = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    for name in ["mms.json", "eig.json", "pacman.json", "fish.json"] {
        let (cfg, _) = ScenarioConfig::from_file(&base.join(name)).unwrap();
        // Geometry must mesh cleanly (pacman config builds a 33x33 cut mesh).
        if name != "fish.json" {
            let mesh = cfg.build_mesh(&base).unwrap();
            assert!(mesh.n_elements() > 0);
        }
    }
}

#[test]
fn fish_config_meshes_at_both_resolutions() {
    // Validate the geometry at the demo resolution and at the reduced one
    // the quick runs use; all ten embedded outlines must mesh split-free.
    let base = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let (cfg, _) = ScenarioConfig::from_file(&base.join("fish.json")).unwrap();
    for res in [120usize, 60] {
        let mut c = cfg.clone();
        c.nx = res;
        c.ny = res;
        let mesh = c.build_mesh(&base).unwrap();
        assert_eq!(mesh.curves.len(), 10);
        let cut = mesh
            .elements
            .iter()
            .filter(|e| e.kind == cutwave_core::mesh::CellKind::Cut)
            .count();
        assert!(cut > 100, "{res}: fish outlines cut {cut} cells");
    }
}

#[test]
fn tabulated_curve_csv() {
    let dir = std::env::temp_dir().join("cutwave-config-test");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("blob.csv");
    let mut f = std::fs::File::create(&path).unwrap();
    writeln!(f, "s,x,y").unwrap();
    let n = 32;
    for k in 0..=n {
        let s = k as f64 / n as f64;
        let a = 2.0 * std::f64::consts::PI * s;
        writeln!(f, "{},{},{}", s, 0.4 * a.cos(), 0.4 * a.sin()).unwrap();
    }
    drop(f);
    let text = format!(
        r#"{{
        "scenario": "custom",
        "domain": {{ "x": [-1.0, 1.0], "y": [-1.0, 1.0] }},
        "nx": 6, "ny": 6,
        "curves": [ {{ "tabulated": {{ "path": "{}", "fluid": "outside" }} }} ],
        "integrator": {{ "t_end": 0.05 }}
    }}"#,
        path.display()
    );
    let cfg = parse(&text).unwrap();
    let mesh = cfg.build_mesh(&dir).unwrap();
    assert!(mesh.elements.iter().any(|e| e.kind == cutwave_core::mesh::CellKind::Cut));

    assert!(parse_curve_csv("s,x,y\n0,1,0\n0.5,0,1\n").is_err(), "too few samples");
}
