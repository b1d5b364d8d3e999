//! Scenario runners: convergence study, operator spectra, scattering
//! benchmark, multi-object demo, and generic custom runs.

use std::collections::HashMap;
use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use num_complex::Complex64;
use serde_json::json;

use cutwave_core::mesh::{BoundaryTag, CellKind};
use cutwave_core::spectra;
use cutwave_core::srd::SrdOperator;
use cutwave_core::timeint::{integrate, IntegratorConfig};
use cutwave_core::wave::{
    discrete_energy, field_error, mms, project_fields, BcKind, BcMap, Discretization,
    Formulation, WaveOperator,
};
use cutwave_core::{linalg::Mat, specfun};

use crate::config::{ScenarioConfig, ScenarioKind};
use crate::io::{
    self, csv_writer, demo_pacman_coefficients, read_pacman_coefficients, write_field_snapshot,
    write_mesh_dump, write_quadrature_dump, write_srd_report, RunSummary,
};

pub type RunError = Box<dyn std::error::Error + Send + Sync>;

pub struct RunOverrides {
    pub no_srd: bool,
    pub tau: Option<f64>,
    pub degree: Option<usize>,
}

impl RunOverrides {
    pub fn none() -> Self {
        RunOverrides {
            no_srd: false,
            tau: None,
            degree: None,
        }
    }

    fn apply(&self, cfg: &mut ScenarioConfig) {
        if self.no_srd {
            cfg.srd.enabled = false;
        }
        if let Some(t) = self.tau {
            cfg.tau_p = t;
            cfg.tau_u = t;
        }
        if let Some(d) = self.degree {
            cfg.degree = d;
        }
    }
}

pub fn run(
    mut cfg: ScenarioConfig,
    config_bytes: &[u8],
    base_dir: &Path,
    out_dir: &Path,
    overrides: RunOverrides,
) -> Result<(), RunError> {
    overrides.apply(&mut cfg);
    std::fs::create_dir_all(out_dir)?;
    match cfg.scenario {
        ScenarioKind::Mms => run_mms(&cfg, config_bytes, out_dir),
        ScenarioKind::Eig => run_eig(&cfg, config_bytes, base_dir, out_dir),
        ScenarioKind::Pacman => run_pacman(&cfg, config_bytes, base_dir, out_dir),
        ScenarioKind::Fish | ScenarioKind::Custom => {
            run_timed_scenario(&cfg, config_bytes, base_dir, out_dir)
        }
    }
}

/// Solver bundle for one run.
struct Solver {
    disc: Discretization,
    srd: Option<SrdOperator>,
    placement: crate::config::SrdPlacement,
    op: WaveOperator,
}

impl Solver {
    fn build(
        cfg: &ScenarioConfig,
        base_dir: &Path,
        bcs: BcMap,
        forcing: Option<cutwave_core::wave::ForcingFn>,
    ) -> Result<Solver, RunError> {
        let mesh = cfg.build_mesh(base_dir)?;
        let disc = Discretization::build(mesh, cfg.degree)?;
        let srd = if cfg.srd.enabled {
            Some(SrdOperator::build(
                &disc.mesh,
                &disc.quad,
                &disc.ops,
                cfg.srd.threshold,
            )?)
        } else {
            None
        };
        let op = WaveOperator::new(
            disc.mesh.clone(),
            disc.quad.clone(),
            disc.ops.clone(),
            bcs,
            cfg.tau_p,
            cfg.tau_u,
            1.0,
            Formulation::SkewSymmetric,
            forcing,
        );
        Ok(Solver {
            disc,
            srd,
            placement: cfg.srd.placement,
            op,
        })
    }

    /// Integrate from `u0`, redistributing per the configured placement:
    /// as a post-step filter (default) or inside every RHS evaluation.
    fn integrate(
        &self,
        u0: Vec<f64>,
        icfg: &IntegratorConfig,
        mut on_step: impl FnMut(f64, f64, &[f64]),
    ) -> Result<Vec<f64>, RunError> {
        use crate::config::SrdPlacement;
        use cutwave_core::timeint::integrate_filtered;
        let mut ws = self.op.workspace();
        let layout = self.disc.ops.layout.clone();
        let mut scratch = vec![0.0; self.op.dof()];
        let result = match (&self.srd, self.placement) {
            (Some(srd), SrdPlacement::PostStep) => integrate_filtered(
                |t, y, dy| self.op.apply(t, y, dy, &mut ws),
                |y| {
                    srd.apply(&layout, y, &mut scratch);
                    y.copy_from_slice(&scratch);
                    true
                },
                u0,
                icfg,
                &mut on_step,
            ),
            (Some(srd), SrdPlacement::PreRhs) => integrate(
                |t, y, dy| {
                    srd.apply(&layout, y, &mut scratch);
                    self.op.apply(t, &scratch, dy, &mut ws);
                },
                u0,
                icfg,
                &mut on_step,
            ),
            (None, _) => integrate(
                |t, y, dy| self.op.apply(t, y, dy, &mut ws),
                u0,
                icfg,
                &mut on_step,
            ),
        };
        Ok(result?)
    }
}

/// Manufactured-solution convergence sweep.
pub fn run_mms(
    cfg: &ScenarioConfig,
    config_bytes: &[u8],
    out_dir: &Path,
) -> Result<(), RunError> {
    let spec = cfg.mms.clone().unwrap_or_default();
    let exact: Arc<dyn Fn(f64, f64, f64) -> (f64, f64, f64) + Send + Sync> =
        Arc::new(|x, y, t| {
            let u = mms::velocity(x, y, t);
            (mms::pressure(x, y, t), u[0], u[1])
        });

    let mut w = csv_writer(
        &out_dir.join("mms_errors.csv"),
        "degree,cells,h,dof,l2_error,rate",
    )?;
    let mut summary = RunSummary::start("mms", config_bytes, 0);
    let mut rates = serde_json::Map::new();
    let mut worst_dof = 0;
    for &degree in &spec.degrees {
        let mut previous: Option<(f64, f64)> = None; // (h, error)
        let mut finest_rate = f64::NAN;
        for &cells in &spec.resolutions {
            let mut run_cfg = cfg.clone();
            run_cfg.degree = degree;
            run_cfg.nx = cells;
            run_cfg.ny = cells;
            let bcs = run_cfg.build_bcs(run_cfg.curves.len(), Some(exact.clone()))?;
            let solver = Solver::build(&run_cfg, Path::new("."), bcs, Some(Arc::new(mms::forcing)))?;
            worst_dof = worst_dof.max(solver.op.dof());
            let u0 = project_fields(&solver.disc.ops, |x, y| {
                let u = mms::velocity(x, y, 0.0);
                (mms::pressure(x, y, 0.0), u[0], u[1])
            });
            let mut icfg = cfg
                .integrator
                .as_ref()
                .map(|s| s.build())
                .transpose()?
                .unwrap_or_else(|| {
                    // Keep time integration error far below the finest
                    // spatial errors of the sweep.
                    let mut c = IntegratorConfig::erk54(spec.t_end);
                    c.abs_tol = 1e-11;
                    c.rel_tol = 1e-11;
                    c
                });
            icfg.t_end = spec.t_end;
            let uf = solver.integrate(u0, &icfg, |_, _, _| {})?;
            let (l2, _) = field_error(&uf, &solver.disc.ops, &solver.disc.quad, |x, y| {
                let u = mms::velocity(x, y, spec.t_end);
                (mms::pressure(x, y, spec.t_end), u[0], u[1])
            });
            let h = (cfg.domain.x[1] - cfg.domain.x[0]) / cells as f64;
            let rate = match previous {
                Some((hp, ep)) => {
                    let r = (ep / l2).ln() / (hp / h).ln();
                    finest_rate = r;
                    r
                }
                None => f64::NAN,
            };
            writeln!(
                w,
                "{},{},{},{},{},{}",
                degree,
                cells,
                h,
                solver.op.dof(),
                l2,
                if rate.is_nan() { String::new() } else { format!("{rate}") }
            )?;
            previous = Some((h, l2));
        }
        rates.insert(format!("rate_n{degree}"), json!(finest_rate));
    }
    w.flush()?;
    summary.dof = worst_dof;
    summary.insert("rates", serde_json::Value::Object(rates));
    summary.write(out_dir)?;
    Ok(())
}

/// One eigenvalue run variant.
pub struct EigVariant {
    pub label: String,
    pub tau: f64,
    pub srd: bool,
    pub max_abs: f64,
    pub max_re: f64,
    pub max_abs_re: f64,
}

/// Assemble and solve all four penalty/SRD spectra of the configured mesh.
pub fn eig_variants(
    cfg: &ScenarioConfig,
    base_dir: &Path,
    out_dir: Option<&Path>,
) -> Result<(Vec<EigVariant>, Discretization), RunError> {
    let mesh = cfg.build_mesh(base_dir)?;
    let disc = Discretization::build(mesh, cfg.degree)?;
    let srd = SrdOperator::build(&disc.mesh, &disc.quad, &disc.ops, cfg.srd.threshold)?;
    let dof = disc.dof();
    let variants: Vec<(String, f64, bool)> = vec![
        ("no_penalty_no_srd".into(), 0.0, false),
        ("penalty_no_srd".into(), cfg.tau_p, false),
        ("no_penalty_srd".into(), 0.0, true),
        ("penalty_srd".into(), cfg.tau_p, true),
    ];

    let n_threads = crate::config::thread_count().min(variants.len()).max(1);
    let results: Vec<Result<(EigVariant, Vec<Complex64>), String>> = std::thread::scope(|s| {
        let mut handles = Vec::new();
        for chunk in variants.chunks(variants.len().div_ceil(n_threads)) {
            let disc = &disc;
            let srd = &srd;
            handles.push(s.spawn(move || {
                let mut out = Vec::new();
                for (label, tau, use_srd) in chunk {
                    let op = WaveOperator::new(
                        disc.mesh.clone(),
                        disc.quad.clone(),
                        disc.ops.clone(),
                        BcMap::uniform(BcKind::Wall, disc.mesh.curves.len()),
                        *tau,
                        *tau,
                        1.0,
                        Formulation::SkewSymmetric,
                        None,
                    );
                    let mut ws = op.workspace();
                    let layout = disc.ops.layout.clone();
                    let mut scratch = vec![0.0; dof];
                    let assembled = if *use_srd {
                        spectra::assemble(
                            |u, o| {
                                srd.apply(&layout, u, &mut scratch);
                                op.apply(0.0, &scratch, o, &mut ws);
                            },
                            dof,
                        )
                    } else {
                        spectra::assemble(|u, o| op.apply(0.0, u, o, &mut ws), dof)
                    };
                    let a = match assembled {
                        Ok(a) => a,
                        Err(e) => {
                            out.push(Err(format!("{label}: {e}")));
                            continue;
                        }
                    };
                    match spectra::spectrum(&a) {
                        Ok(evs) => out.push(Ok((
                            EigVariant {
                                label: label.clone(),
                                tau: *tau,
                                srd: *use_srd,
                                max_abs: spectra::max_abs(&evs),
                                max_re: spectra::max_re(&evs),
                                max_abs_re: spectra::max_abs_re(&evs),
                            },
                            evs,
                        ))),
                        Err(e) => out.push(Err(format!("{label}: {e}"))),
                    }
                }
                out
            }));
        }
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("eig worker"))
            .collect()
    });

    let mut out = Vec::new();
    for r in results {
        let (variant, evs) = r.map_err(RunError::from)?;
        if let Some(dir) = out_dir {
            let mut w = csv_writer(&dir.join(format!("eig_{}.csv", variant.label)), "re,im")?;
            for z in &evs {
                writeln!(w, "{},{}", z.re, z.im)?;
            }
            w.flush()?;
        }
        out.push(variant);
    }
    // Deterministic order regardless of thread interleaving.
    out.sort_by(|a, b| a.label.cmp(&b.label));
    Ok((out, disc))
}

/// Smallest-cut-cell geometry summary: (volume ratio, length ratio).
pub fn small_cell_ratios(disc: &Discretization) -> (f64, f64) {
    let mesh = &disc.mesh;
    let full = mesh.dx() * mesh.dy();
    let mut min_vol = f64::INFINITY;
    let mut min_elem = usize::MAX;
    for (ei, e) in mesh.elements.iter().enumerate() {
        if e.kind == CellKind::Cut {
            let v = disc.quad.element_volume(ei);
            if v < min_vol {
                min_vol = v;
                min_elem = ei;
            }
        }
    }
    if min_elem == usize::MAX {
        return (1.0, 1.0);
    }
    // Shortest straight face of the smallest cell against the cell size.
    let mut min_face = f64::INFINITY;
    for geom in &mesh.elements[min_elem].boundary {
        if let cutwave_core::mesh::FaceGeometry::Straight { a, b } = geom {
            let len = ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt();
            min_face = min_face.min(len);
        }
    }
    (full / min_vol, mesh.dx() / min_face)
}

pub fn run_eig(
    cfg: &ScenarioConfig,
    config_bytes: &[u8],
    base_dir: &Path,
    out_dir: &Path,
) -> Result<(), RunError> {
    let (variants, disc) = eig_variants(cfg, base_dir, Some(out_dir))?;
    let mut w = csv_writer(
        &out_dir.join("eig_summary.csv"),
        "config,tau,srd,max_abs,max_re,max_abs_re",
    )?;
    for v in &variants {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            v.label, v.tau, v.srd, v.max_abs, v.max_re, v.max_abs_re
        )?;
    }
    w.flush()?;

    let find = |label: &str| variants.iter().find(|v| v.label == label).unwrap();
    let ratio_penalty = find("penalty_no_srd").max_abs / find("penalty_srd").max_abs;
    let ratio_no_penalty = find("no_penalty_no_srd").max_abs / find("no_penalty_srd").max_abs;
    let (volume_ratio, length_ratio) = small_cell_ratios(&disc);

    let mut summary = RunSummary::start("eig", config_bytes, disc.dof());
    summary.insert("ratio_penalty", json!(ratio_penalty));
    summary.insert("ratio_no_penalty", json!(ratio_no_penalty));
    summary.insert("volume_ratio", json!(volume_ratio));
    summary.insert("length_ratio", json!(length_ratio));
    for v in &variants {
        summary.insert(
            &format!("max_abs_{}", v.label),
            json!(v.max_abs),
        );
        summary.insert(&format!("max_re_{}", v.label), json!(v.max_re));
    }
    summary.write(out_dir)?;
    Ok(())
}

/// Precomputed complex scattering field at a fixed point set; time values
/// are recovered with one phase rotation.
pub struct FrozenField {
    pub table: HashMap<(u64, u64), (Complex64, Complex64, Complex64)>,
    pub omega: f64,
    config: specfun::PacmanConfig,
    coeffs: Arc<specfun::PacmanCoefficients>,
}

impl FrozenField {
    pub fn new(
        config: specfun::PacmanConfig,
        coeffs: Arc<specfun::PacmanCoefficients>,
        points: impl Iterator<Item = [f64; 2]>,
    ) -> FrozenField {
        let mut table = HashMap::new();
        for p in points {
            let key = (p[0].to_bits(), p[1].to_bits());
            table.entry(key).or_insert_with(|| {
                match specfun::eval_field_cartesian(&config, &coeffs, p[0], p[1]) {
                    Ok(Some(v)) => v,
                    _ => (
                        Complex64::new(0.0, 0.0),
                        Complex64::new(0.0, 0.0),
                        Complex64::new(0.0, 0.0),
                    ),
                }
            });
        }
        FrozenField {
            table,
            omega: config.omega,
            config,
            coeffs,
        }
    }

    pub fn eval(&self, x: f64, y: f64, t: f64) -> (f64, f64, f64) {
        let phase = Complex64::new(0.0, self.omega * t).exp();
        match self.table.get(&(x.to_bits(), y.to_bits())) {
            Some((p, vx, vy)) => ((p * phase).re, (vx * phase).re, (vy * phase).re),
            None => specfun::time_field(&self.config, &self.coeffs, x, y, t),
        }
    }
}

pub fn run_pacman(
    cfg: &ScenarioConfig,
    config_bytes: &[u8],
    base_dir: &Path,
    out_dir: &Path,
) -> Result<(), RunError> {
    let spec = cfg.pacman.clone().expect("validated");
    let coeff_path = if spec.coefficients.is_absolute() {
        spec.coefficients.clone()
    } else {
        base_dir.join(&spec.coefficients)
    };
    let coeffs = Arc::new(read_pacman_coefficients(&coeff_path, spec.truncation)?);
    let pac_cfg = specfun::PacmanConfig {
        radius: pacman_radius(cfg),
        half_angle: pacman_half_angle(cfg),
        wedge_number: spec.wedge_number,
        wavenumber: spec.wavenumber,
        impedance: spec.impedance,
        omega: spec.wavenumber, // c = 1
        truncation: spec.truncation,
    };

    // Build mesh first so boundary points can be frozen into the field.
    let mesh = cfg.build_mesh(base_dir)?;
    let disc = Discretization::build(mesh, cfg.degree)?;
    let boundary_points = disc
        .mesh
        .faces
        .iter()
        .enumerate()
        .filter(|(_, f)| matches!(f.tag, Some(BoundaryTag::Domain(_))))
        .flat_map(|(fi, _)| disc.quad.face_quads[fi].points.iter().copied())
        .collect::<Vec<_>>();
    let frozen = Arc::new(FrozenField::new(
        pac_cfg.clone(),
        coeffs.clone(),
        boundary_points.into_iter(),
    ));
    let frozen_bc = frozen.clone();
    let analytic: Arc<dyn Fn(f64, f64, f64) -> (f64, f64, f64) + Send + Sync> =
        Arc::new(move |x, y, t| frozen_bc.eval(x, y, t));
    let bcs = cfg.build_bcs(disc.mesh.curves.len(), Some(analytic))?;

    let srd = if cfg.srd.enabled {
        Some(SrdOperator::build(
            &disc.mesh,
            &disc.quad,
            &disc.ops,
            cfg.srd.threshold,
        )?)
    } else {
        None
    };
    let op = WaveOperator::new(
        disc.mesh.clone(),
        disc.quad.clone(),
        disc.ops.clone(),
        bcs,
        cfg.tau_p,
        cfg.tau_u,
        1.0,
        Formulation::SkewSymmetric,
        None,
    );
    let solver = Solver {
        disc,
        srd,
        placement: cfg.srd.placement,
        op,
    };

    // Frozen complex field at the volume quadrature points for fast error
    // sampling, and the initial condition at the nodes.
    let quad_points = solver
        .disc
        .quad
        .volumes
        .iter()
        .flat_map(|r| r.points.iter().copied());
    let node_points = solver.disc.ops.node_positions.iter().flatten().copied();
    let err_field = Arc::new(FrozenField::new(
        pac_cfg.clone(),
        coeffs.clone(),
        quad_points.chain(node_points),
    ));

    let u0 = project_fields(&solver.disc.ops, |x, y| err_field.eval(x, y, 0.0));
    let mut icfg = cfg
        .integrator
        .as_ref()
        .map(|s| s.build())
        .transpose()?
        .unwrap_or_else(|| IntegratorConfig::erk54(1.0));
    // Error samples and snapshot times are hit exactly.
    let mut halts: Vec<f64> = Vec::new();
    let sample_dt = cfg.outputs.error_sample_dt;
    let mut t = sample_dt;
    while t < icfg.t_end - 1e-12 {
        halts.push(t);
        t += sample_dt;
    }
    halts.extend(cfg.outputs.times.iter().copied());
    halts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    halts.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    icfg.halt_points = halts.clone();

    let mut err_w = csv_writer(&out_dir.join("pacman_errors.csv"), "t,l2,linf")?;
    let (l2_0, linf_0) = field_error(&u0, &solver.disc.ops, &solver.disc.quad, |x, y| {
        err_field.eval(x, y, 0.0)
    });
    writeln!(err_w, "0,{l2_0},{linf_0}")?;
    let mut error_rows = vec![(0.0, l2_0, linf_0)];

    let snapshot_times = cfg.outputs.times.clone();
    let density = cfg.outputs.plot_density;
    let mut pending_snapshots: Vec<f64> = snapshot_times.clone();

    let disc_ref = &solver.disc;
    let err_field_ref = err_field.clone();
    let mut io_err: Option<std::io::Error> = None;
    let uf = solver.integrate(u0, &icfg, |t, _dt, y| {
        let near = |s: f64| (t - s).abs() < 1e-10;
        if halts.iter().any(|&h| near(h)) || near(icfg.t_end) {
            let (l2, linf) = field_error(y, &disc_ref.ops, &disc_ref.quad, |x, yy| {
                err_field_ref.eval(x, yy, t)
            });
            if let Err(e) = writeln!(err_w, "{t},{l2},{linf}") {
                io_err = Some(e);
            }
            error_rows.push((t, l2, linf));
        }
        pending_snapshots.retain(|&s| {
            if near(s) {
                let path = out_dir.join(format!("fields_t{s}.csv"));
                if let Err(e) = write_field_snapshot(&path, &disc_ref.mesh, &disc_ref.ops, y, density)
                {
                    io_err = Some(e);
                }
                false
            } else {
                true
            }
        });
    })?;
    if let Some(e) = io_err {
        return Err(e.into());
    }
    err_w.flush()?;

    // Final state snapshot and pointwise error dump.
    write_field_snapshot(
        &out_dir.join("fields_final.csv"),
        &solver.disc.mesh,
        &solver.disc.ops,
        &uf,
        density,
    )?;
    write_pointwise_error(
        &out_dir.join("pointwise_error_final.csv"),
        &solver.disc,
        &uf,
        icfg.t_end,
        density,
        &err_field,
    )?;

    let (l2_f, linf_f) = field_error(&uf, &solver.disc.ops, &solver.disc.quad, |x, y| {
        err_field.eval(x, y, icfg.t_end)
    });
    let mut summary = RunSummary::start("pacman", config_bytes, solver.op.dof());
    summary.insert("l2_error_final", json!(l2_f));
    summary.insert("linf_error_final", json!(linf_f));
    summary.insert(
        "linf_max_last_quarter",
        json!(linf_over_window(&error_rows, 0.75 * icfg.t_end)),
    );
    summary.insert(
        "linf_max_third_quarter",
        json!(linf_between(&error_rows, 0.5 * icfg.t_end, 0.75 * icfg.t_end)),
    );
    summary.write(out_dir)?;
    Ok(())
}

fn linf_over_window(rows: &[(f64, f64, f64)], t_from: f64) -> f64 {
    rows.iter()
        .filter(|(t, _, _)| *t >= t_from)
        .map(|(_, _, linf)| *linf)
        .fold(0.0, f64::max)
}

fn linf_between(rows: &[(f64, f64, f64)], t_from: f64, t_to: f64) -> f64 {
    rows.iter()
        .filter(|(t, _, _)| *t >= t_from && *t < t_to)
        .map(|(_, _, linf)| *linf)
        .fold(0.0, f64::max)
}

fn pacman_radius(cfg: &ScenarioConfig) -> f64 {
    for c in &cfg.curves {
        if let crate::config::CurveSpec::Pacman { radius, .. } = c {
            return *radius;
        }
    }
    1.0
}

fn pacman_half_angle(cfg: &ScenarioConfig) -> f64 {
    for c in &cfg.curves {
        if let crate::config::CurveSpec::Pacman { half_angle, .. } = c {
            return *half_angle;
        }
    }
    std::f64::consts::PI / 6.0
}

fn write_pointwise_error(
    path: &Path,
    disc: &Discretization,
    state: &[f64],
    t: f64,
    density: usize,
    field: &FrozenField,
) -> Result<(), std::io::Error> {
    let mut w = csv_writer(path, "x,y,err")?;
    let layout = &disc.ops.layout;
    for ei in 0..disc.mesh.n_elements() {
        let (lo, hi) = disc.mesh.cell_box(disc.mesh.elements[ei].cell);
        let mut points = Vec::new();
        for j in 0..density {
            for i in 0..density {
                let p = [
                    lo[0] + (hi[0] - lo[0]) * (i as f64 + 0.5) / density as f64,
                    lo[1] + (hi[1] - lo[1]) * (j as f64 + 0.5) / density as f64,
                ];
                if disc.mesh.elements[ei].kind == CellKind::Cartesian || disc.mesh.contains(ei, p)
                {
                    points.push(p);
                }
            }
        }
        if points.is_empty() {
            continue;
        }
        let interp = disc.ops.eval_matrix(&disc.mesh, ei, &points);
        let p = interp.matvec(&state[layout.field(ei, 0)]);
        let ux = interp.matvec(&state[layout.field(ei, 1)]);
        let uy = interp.matvec(&state[layout.field(ei, 2)]);
        for (k, xy) in points.iter().enumerate() {
            let (pe, uxe, uye) = field.eval(xy[0], xy[1], t);
            let err = ((p[k] - pe).powi(2) + (ux[k] - uxe).powi(2) + (uy[k] - uye).powi(2)).sqrt();
            writeln!(w, "{},{},{}", xy[0], xy[1], err)?;
        }
    }
    w.flush()
}

/// Fish and custom scenarios: zero initial state, scheduled boundary data,
/// snapshots and the energy log.
pub fn run_timed_scenario(
    cfg: &ScenarioConfig,
    config_bytes: &[u8],
    base_dir: &Path,
    out_dir: &Path,
) -> Result<(), RunError> {
    let bcs_probe = cfg.build_bcs(cfg.curves.len(), None)?;
    let solver = Solver::build(cfg, base_dir, bcs_probe, None)?;
    let mut icfg = cfg
        .integrator
        .as_ref()
        .map(|s| s.build())
        .transpose()?
        .unwrap_or_else(|| IntegratorConfig::erk54(1.0));
    let mut halts = cfg.outputs.times.clone();
    // Pressure-pulse switch times must be step boundaries.
    for spec in [
        &cfg.boundary.left,
        &cfg.boundary.right,
        &cfg.boundary.bottom,
        &cfg.boundary.top,
    ] {
        if let crate::config::BcSpec::PressurePulse { until, .. } = spec {
            halts.push(*until);
        }
    }
    halts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    halts.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    halts.retain(|&t| t > 0.0 && t < icfg.t_end);
    icfg.halt_points = halts;

    let u0 = vec![0.0; solver.op.dof()];
    let mut energy_w = if cfg.outputs.energy_log {
        Some(csv_writer(&out_dir.join("energy.csv"), "t,dt,energy")?)
    } else {
        None
    };
    let density = cfg.outputs.plot_density;
    let mut pending: Vec<f64> = cfg.outputs.times.clone();
    let disc_ref = &solver.disc;
    let mut io_err: Option<std::io::Error> = None;
    let mut max_energy = 0.0f64;
    let uf = solver.integrate(u0, &icfg, |t, dt, y| {
        if let Some(w) = energy_w.as_mut() {
            let e = discrete_energy(y, &disc_ref.ops, 1.0);
            max_energy = max_energy.max(e);
            if let Err(err) = writeln!(w, "{t},{dt},{e}") {
                io_err = Some(err);
            }
        }
        pending.retain(|&s| {
            if (t - s).abs() < 1e-10 {
                let path = out_dir.join(format!("fields_t{s}.csv"));
                if let Err(e) =
                    write_field_snapshot(&path, &disc_ref.mesh, &disc_ref.ops, y, density)
                {
                    io_err = Some(e);
                }
                false
            } else {
                true
            }
        });
    })?;
    if let Some(e) = io_err {
        return Err(e.into());
    }
    if let Some(mut w) = energy_w {
        w.flush()?;
    }
    write_field_snapshot(
        &out_dir.join("fields_final.csv"),
        &solver.disc.mesh,
        &solver.disc.ops,
        &uf,
        density,
    )?;
    let label: &'static str = if cfg.scenario == ScenarioKind::Fish {
        "fish"
    } else {
        "custom"
    };
    let mut summary = RunSummary::start(label, config_bytes, solver.op.dof());
    summary.insert(
        "final_energy",
        json!(discrete_energy(&uf, &solver.disc.ops, 1.0)),
    );
    summary.insert("max_energy", json!(max_energy));
    summary.write(out_dir)?;
    Ok(())
}

/// Mesh/quadrature/SRD dump utility.
pub fn run_mesh_dump(
    cfg: &ScenarioConfig,
    config_bytes: &[u8],
    base_dir: &Path,
    out_dir: &Path,
) -> Result<(), RunError> {
    std::fs::create_dir_all(out_dir)?;
    let mesh = cfg.build_mesh(base_dir)?;
    let disc = Discretization::build(mesh, cfg.degree)?;
    write_mesh_dump(out_dir, &disc.mesh, &disc.quad)?;
    write_quadrature_dump(out_dir, &disc.mesh, &disc.quad)?;
    if cfg.srd.enabled {
        let srd = SrdOperator::build(&disc.mesh, &disc.quad, &disc.ops, cfg.srd.threshold)?;
        write_srd_report(out_dir, &disc.mesh, &disc.quad, &srd)?;
    }
    let (volume_ratio, length_ratio) = small_cell_ratios(&disc);
    let mut summary = RunSummary::start("mesh", config_bytes, disc.dof());
    summary.insert("volume_ratio", json!(volume_ratio));
    summary.insert("length_ratio", json!(length_ratio));
    summary.insert("worst_kappa", json!(disc.quad.worst_kappa()));
    summary.insert("elements", json!(disc.mesh.n_elements()));
    summary.write(out_dir)?;
    Ok(())
}

/// Analytic-field sampler: `x,y,re_p` over a uniform grid.
pub fn run_pacman_field(
    cfg: &ScenarioConfig,
    base_dir: &Path,
    out_dir: &Path,
    grid_n: usize,
    t: f64,
) -> Result<(), RunError> {
    std::fs::create_dir_all(out_dir)?;
    let spec = cfg
        .pacman
        .clone()
        .ok_or("pacman-field requires a [pacman] config section")?;
    let coeff_path = if spec.coefficients.is_absolute() {
        spec.coefficients.clone()
    } else {
        base_dir.join(&spec.coefficients)
    };
    let coeffs = read_pacman_coefficients(&coeff_path, spec.truncation)?;
    let pac_cfg = specfun::PacmanConfig {
        radius: pacman_radius(cfg),
        half_angle: pacman_half_angle(cfg),
        wedge_number: spec.wedge_number,
        wavenumber: spec.wavenumber,
        impedance: spec.impedance,
        omega: spec.wavenumber,
        truncation: spec.truncation,
    };
    let mut w = csv_writer(&out_dir.join("pacman_field.csv"), "x,y,re_p")?;
    for j in 0..grid_n {
        for i in 0..grid_n {
            let x = cfg.domain.x[0]
                + (cfg.domain.x[1] - cfg.domain.x[0]) * (i as f64 + 0.5) / grid_n as f64;
            let y = cfg.domain.y[0]
                + (cfg.domain.y[1] - cfg.domain.y[0]) * (j as f64 + 0.5) / grid_n as f64;
            let (p, _, _) = specfun::time_field(&pac_cfg, &coeffs, x, y, t);
            writeln!(w, "{x},{y},{p}")?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Demo coefficient generator.
pub fn run_gen_demo_coefficients(out_file: &Path, m: usize, seed: u64) -> Result<(), RunError> {
    if let Some(parent) = out_file.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    io::write_pacman_coefficients(out_file, &demo_pacman_coefficients(m, seed))?;
    Ok(())
}

/// Bisect the largest stable fixed RK4 step on the configured problem; used
/// by the CFL comparison between plain and redistributed operators.
pub fn stable_dt_bisection(
    solver_tau: f64,
    disc: &Discretization,
    srd: Option<&SrdOperator>,
    t_end: f64,
) -> f64 {
    let op = WaveOperator::new(
        disc.mesh.clone(),
        disc.quad.clone(),
        disc.ops.clone(),
        BcMap::uniform(BcKind::Wall, disc.mesh.curves.len()),
        solver_tau,
        solver_tau,
        1.0,
        Formulation::SkewSymmetric,
        None,
    );
    let layout = disc.ops.layout.clone();
    let mut seed_state = 0x5eedu64;
    let u0: Vec<f64> = (0..op.dof())
        .map(|_| 2.0 * cutwave_core::math::splitmix_unit(&mut seed_state) - 1.0)
        .collect();
    let e0 = discrete_energy(&u0, &disc.ops, 1.0);
    let stable = |dt: f64| -> bool {
        let icfg = IntegratorConfig::rk4(t_end, dt);
        let mut ws = op.workspace();
        let mut scratch = vec![0.0; op.dof()];
        // The stabilized dynamics probed here are `dU/dt = A S U`, the
        // composition whose spectrum carries the CFL relaxation.
        let result = match srd {
            Some(s) => integrate(
                |t, y, dy| {
                    s.apply(&layout, y, &mut scratch);
                    op.apply(t, &scratch, dy, &mut ws);
                },
                u0.clone(),
                &icfg,
                |_, _, _| {},
            ),
            None => integrate(|t, y, dy| op.apply(t, y, dy, &mut ws), u0.clone(), &icfg, |_, _, _| {}),
        };
        match result {
            Ok(y) => {
                let e = discrete_energy(&y, &disc.ops, 1.0);
                e.is_finite() && e <= 10.0 * e0
            }
            Err(_) => false,
        }
    };
    // Descend from clearly unstable steps (those fail fast through the
    // blow-up checks), then bisect the stability boundary.
    let mut hi = 1.0;
    let mut lo = hi;
    loop {
        lo *= 0.5;
        if stable(lo) {
            break;
        }
        hi = lo;
        if lo < 1e-9 {
            return 0.0;
        }
    }
    for _ in 0..10 {
        let mid = 0.5 * (lo + hi);
        if stable(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Dense matrix helper for tests: global block mass of a discretization.
pub fn global_mass(disc: &Discretization) -> Mat {
    let dof = disc.dof();
    let layout = &disc.ops.layout;
    let mut m = Mat::zeros(dof, dof);
    for ei in 0..disc.ops.ops.len() {
        let me = disc.ops.ops[ei].mass();
        for comp in 0..3 {
            let range = layout.field(ei, comp);
            for i in 0..me.nrows() {
                for j in 0..me.ncols() {
                    m[(range.start + i, range.start + j)] = me[(i, j)];
                }
            }
        }
    }
    m
}
