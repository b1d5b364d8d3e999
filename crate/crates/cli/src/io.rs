//! Output plumbing: CSV writers, the machine-readable run summary, and the
//! pacman coefficient CSV format.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::time::Instant;

use num_complex::Complex64;
use serde_json::json;

use cutwave_core::mesh::{BoundaryTag, CellKind, CutMesh, DomainSide};
use cutwave_core::operators::MeshOps;
use cutwave_core::quadrature::MeshQuadrature;
use cutwave_core::specfun::PacmanCoefficients;
use cutwave_core::srd::SrdOperator;

pub type IoResult<T> = Result<T, std::io::Error>;

/// FNV-1a hash of the raw config bytes; stable run identifier.
pub fn config_hash(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        h ^= *b as u64;
        h = h.wrapping_mul(0x1000_0000_01b3);
    }
    h
}

pub struct RunSummary {
    pub scenario: &'static str,
    pub config_hash: u64,
    pub dof: usize,
    started: Instant,
    pub extra: serde_json::Map<String, serde_json::Value>,
}

impl RunSummary {
    pub fn start(scenario: &'static str, config_bytes: &[u8], dof: usize) -> RunSummary {
        RunSummary {
            scenario,
            config_hash: config_hash(config_bytes),
            dof,
            started: Instant::now(),
            extra: serde_json::Map::new(),
        }
    }

    pub fn insert(&mut self, key: &str, value: serde_json::Value) {
        self.extra.insert(key.to_string(), value);
    }

    pub fn write(&self, out_dir: &Path) -> IoResult<()> {
        let doc = json!({
            "scenario": self.scenario,
            "config_hash": format!("{:016x}", self.config_hash),
            "dof": self.dof,
            "wall_time_s": self.started.elapsed().as_secs_f64(),
            "results": self.extra,
        });
        fs::write(
            out_dir.join("summary.json"),
            serde_json::to_string_pretty(&doc).expect("summary serializes") + "\n",
        )
    }
}

pub fn csv_writer(path: &Path, header: &str) -> IoResult<BufWriter<fs::File>> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    writeln!(w, "{header}")?;
    Ok(w)
}

/// Mesh dump: per-element and per-face CSVs.
pub fn write_mesh_dump(
    out_dir: &Path,
    mesh: &CutMesh,
    quad: &MeshQuadrature,
) -> IoResult<()> {
    let mut w = csv_writer(
        &out_dir.join("elements.csv"),
        "id,kind,volume,centroid_x,centroid_y",
    )?;
    for (ei, elem) in mesh.elements.iter().enumerate() {
        let kind = match elem.kind {
            CellKind::Cartesian => "cartesian",
            CellKind::Cut => "cut",
            CellKind::Excluded => "excluded",
        };
        let frame = &quad.frames[ei];
        writeln!(
            w,
            "{},{},{},{},{}",
            elem.bg_id,
            kind,
            quad.element_volume(ei),
            frame.center[0],
            frame.center[1]
        )?;
    }
    w.flush()?;

    let mut w = csv_writer(
        &out_dir.join("faces.csv"),
        "elem,neighbor_or_tag,x0,y0,x1,y1",
    )?;
    for f in &mesh.faces {
        let a = f.geom.start(&mesh.curves);
        let b = f.geom.end(&mesh.curves);
        let nb = match (f.neighbor, f.tag) {
            (Some(n), _) => mesh.elements[n].bg_id.to_string(),
            (None, Some(BoundaryTag::Domain(side))) => match side {
                DomainSide::Left => "domain_left".into(),
                DomainSide::Right => "domain_right".into(),
                DomainSide::Bottom => "domain_bottom".into(),
                DomainSide::Top => "domain_top".into(),
            },
            (None, Some(BoundaryTag::Embedded(c))) => format!("curve{c}"),
            (None, None) => "unmatched".into(),
        };
        writeln!(
            w,
            "{},{},{},{},{},{}",
            mesh.elements[f.owner].bg_id, nb, a[0], a[1], b[0], b[1]
        )?;
    }
    w.flush()
}

/// Quadrature dump: node table and the weight-conditioning report.
pub fn write_quadrature_dump(
    out_dir: &Path,
    mesh: &CutMesh,
    quad: &MeshQuadrature,
) -> IoResult<()> {
    let mut w = csv_writer(&out_dir.join("quad_nodes.csv"), "elem,node,x,y,w")?;
    for (ei, rule) in quad.volumes.iter().enumerate() {
        let id = mesh.elements[ei].bg_id;
        for (k, (p, wgt)) in rule.points.iter().zip(&rule.weights).enumerate() {
            writeln!(w, "{},{},{},{},{}", id, k, p[0], p[1], wgt)?;
        }
    }
    w.flush()?;

    let mut w = csv_writer(&out_dir.join("conditioning.csv"), "elem,n,m_n,kappa")?;
    for (ei, rule) in quad.volumes.iter().enumerate() {
        if mesh.elements[ei].kind == CellKind::Cut {
            writeln!(
                w,
                "{},{},{},{}",
                mesh.elements[ei].bg_id,
                quad.n,
                rule.len(),
                rule.kappa
            )?;
        }
    }
    w.flush()
}

/// Merge-neighborhood report.
pub fn write_srd_report(
    out_dir: &Path,
    mesh: &CutMesh,
    quad: &MeshQuadrature,
    srd: &SrdOperator,
) -> IoResult<()> {
    let mut w = csv_writer(
        &out_dir.join("srd_neighborhoods.csv"),
        "elem,members,count_c,volume",
    )?;
    for ei in 0..mesh.n_elements() {
        let members = srd.members[ei]
            .iter()
            .map(|&e| mesh.elements[e].bg_id.to_string())
            .collect::<Vec<_>>()
            .join(" ");
        writeln!(
            w,
            "{},{},{},{}",
            mesh.elements[ei].bg_id,
            members,
            srd.counts[ei],
            quad.element_volume(ei)
        )?;
    }
    w.flush()
}

/// Field snapshot at equispaced plotting nodes per element.
pub fn write_field_snapshot(
    path: &Path,
    mesh: &CutMesh,
    ops: &MeshOps,
    state: &[f64],
    density: usize,
) -> IoResult<()> {
    let mut w = csv_writer(path, "x,y,p,ux,uy")?;
    let layout = &ops.layout;
    for ei in 0..mesh.n_elements() {
        let (lo, hi) = mesh.cell_box(mesh.elements[ei].cell);
        let mut points = Vec::new();
        for j in 0..density {
            for i in 0..density {
                let p = [
                    lo[0] + (hi[0] - lo[0]) * (i as f64 + 0.5) / density as f64,
                    lo[1] + (hi[1] - lo[1]) * (j as f64 + 0.5) / density as f64,
                ];
                if mesh.elements[ei].kind == CellKind::Cartesian || mesh.contains(ei, p) {
                    points.push(p);
                }
            }
        }
        if points.is_empty() {
            continue;
        }
        let interp = ops.eval_matrix(mesh, ei, &points);
        let p = interp.matvec(&state[layout.field(ei, 0)]);
        let ux = interp.matvec(&state[layout.field(ei, 1)]);
        let uy = interp.matvec(&state[layout.field(ei, 2)]);
        for (k, xy) in points.iter().enumerate() {
            writeln!(w, "{},{},{},{},{}", xy[0], xy[1], p[k], ux[k], uy[k])?;
        }
    }
    w.flush()
}

/// Pacman modal coefficient CSV:
/// `n,aA_re,aA_im,aS_re,aS_im,bA_re,bA_im,bS_re,bS_im`.
pub fn read_pacman_coefficients(path: &Path, truncation: usize) -> IoResult<PacmanCoefficients> {
    let text = fs::read_to_string(path)?;
    let mut coeffs = PacmanCoefficients::zeros(truncation);
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with('n') {
            continue;
        }
        let cols: Vec<&str> = line.split(',').map(str::trim).collect();
        if cols.len() != 9 {
            return Err(std::io::Error::new(
                std::io::ErrorKind::InvalidData,
                format!("expected 9 columns, got {}", cols.len()),
            ));
        }
        let parse = |s: &str| -> IoResult<f64> {
            s.parse().map_err(|_| {
                std::io::Error::new(std::io::ErrorKind::InvalidData, format!("bad number '{s}'"))
            })
        };
        let n: usize = cols[0].parse().map_err(|_| {
            std::io::Error::new(std::io::ErrorKind::InvalidData, "bad order column")
        })?;
        if n >= truncation {
            continue;
        }
        coeffs.a_anti[n] = Complex64::new(parse(cols[1])?, parse(cols[2])?);
        coeffs.a_sym[n] = Complex64::new(parse(cols[3])?, parse(cols[4])?);
        coeffs.b_anti[n] = Complex64::new(parse(cols[5])?, parse(cols[6])?);
        coeffs.b_sym[n] = Complex64::new(parse(cols[7])?, parse(cols[8])?);
    }
    Ok(coeffs)
}

pub fn write_pacman_coefficients(path: &Path, coeffs: &PacmanCoefficients) -> IoResult<()> {
    let mut w = csv_writer(path, "n,aA_re,aA_im,aS_re,aS_im,bA_re,bA_im,bS_re,bS_im")?;
    for n in 0..coeffs.a_anti.len() {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{}",
            n,
            coeffs.a_anti[n].re,
            coeffs.a_anti[n].im,
            coeffs.a_sym[n].re,
            coeffs.a_sym[n].im,
            coeffs.b_anti[n].re,
            coeffs.b_anti[n].im,
            coeffs.b_sym[n].re,
            coeffs.b_sym[n].im
        )?;
    }
    w.flush()
}

/// Deterministic demonstration coefficients: pseudo-random phases with decay
/// fast enough to dominate the Hankel growth of high orders at the body.
pub fn demo_pacman_coefficients(m: usize, seed: u64) -> PacmanCoefficients {
    let mut coeffs = PacmanCoefficients::zeros(m);
    let mut state = seed;
    let mut unit = || 2.0 * cutwave_core::math::splitmix_unit(&mut state) - 1.0;
    for n in 0..m {
        let damp = (-(2.5 * n as f64)).exp();
        coeffs.a_anti[n] = Complex64::new(unit(), unit()) * damp;
        coeffs.a_sym[n] = Complex64::new(unit(), unit()) * damp;
        coeffs.b_anti[n] = Complex64::new(unit(), unit()) * damp;
        coeffs.b_sym[n] = Complex64::new(unit(), unit()) * damp;
    }
    coeffs
}
