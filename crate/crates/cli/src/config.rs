//! Scenario configuration: JSON schema with unknown keys rejected, plus
//! construction of the geometry and solver objects it describes.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::Deserialize;

use cutwave_core::curves::{GridLines, ParametricCurve, Segment};
use cutwave_core::mesh::{CutMesh, MeshBuilder};
use cutwave_core::timeint::{IntegratorConfig, Method};
use cutwave_core::wave::{BcKind, BcMap};

#[derive(Debug, Deserialize, Clone, Copy, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    Mms,
    Eig,
    Pacman,
    Fish,
    Custom,
}

#[derive(Debug, Deserialize, Clone)]
#[serde(deny_unknown_fields)]
pub struct DomainSpec {
    pub x: [f64; 2],
    pub y: [f64; 2],
}

#[derive(Debug, Deserialize, Clone, Copy, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum FluidSide {
    Inside,
    Outside,
}

impl FluidSide {
    pub fn inside(self) -> bool {
        self == FluidSide::Inside
    }
}

#[derive(Debug, Deserialize, Clone)]
#[serde(deny_unknown_fields, rename_all = "snake_case")]
pub enum SegmentSpec {
    Line { from: [f64; 2], to: [f64; 2] },
    Arc {
        center: [f64; 2],
        radius: f64,
        theta0: f64,
        theta1: f64,
    },
}

#[derive(Debug, Deserialize, Clone)]
#[serde(deny_unknown_fields, rename_all = "snake_case")]
pub enum CurveSpec {
    Circle {
        center: [f64; 2],
        radius: f64,
        fluid: FluidSide,
    },
    Ellipse {
        center: [f64; 2],
        semi_axes: [f64; 2],
        fluid: FluidSide,
    },
    Pacman {
        #[serde(default)]
        center: [f64; 2],
        radius: f64,
        half_angle: f64,
        fluid: FluidSide,
    },
    Piecewise {
        segments: Vec<SegmentSpec>,
        fluid: FluidSide,
    },
    /// CSV with columns `s,x,y`, fitted with a periodic cubic spline.
    Tabulated { path: PathBuf, fluid: FluidSide },
}

#[derive(Debug, Deserialize, Clone)]
#[serde(deny_unknown_fields, rename_all = "snake_case")]
pub enum BcSpec {
    Wall,
    ZeroPressure,
    Extrapolation,
    /// The scenario's exact solution (manufactured or scattering series).
    Analytic,
    PressurePulse { p_set: f64, until: f64 },
}

#[derive(Debug, Deserialize, Clone)]
#[serde(deny_unknown_fields)]
pub struct BcConfig {
    pub left: BcSpec,
    pub right: BcSpec,
    pub bottom: BcSpec,
    pub top: BcSpec,
    #[serde(default)]
    pub embedded: Vec<BcSpec>,
}

impl Default for BcConfig {
    fn default() -> Self {
        BcConfig {
            left: BcSpec::Analytic,
            right: BcSpec::Analytic,
            bottom: BcSpec::Analytic,
            top: BcSpec::Analytic,
            embedded: Vec::new(),
        }
    }
}

#[derive(Debug, Deserialize, Clone, Copy, PartialEq, Eq, Default)]
#[serde(rename_all = "snake_case")]
pub enum SrdPlacement {
    /// Filter the accepted state after every time step.
    #[default]
    PostStep,
    /// Redistribute before every right-hand-side evaluation (the operator
    /// whose spectrum the eigenvalue study measures).
    PreRhs,
}

#[derive(Debug, Deserialize, Clone)]
#[serde(deny_unknown_fields)]
pub struct SrdSpec {
    #[serde(default = "default_true")]
    pub enabled: bool,
    #[serde(default = "default_threshold")]
    pub threshold: f64,
    #[serde(default)]
    pub placement: SrdPlacement,
}

impl Default for SrdSpec {
    fn default() -> Self {
        SrdSpec {
            enabled: true,
            threshold: 0.5,
            placement: SrdPlacement::PostStep,
        }
    }
}

fn default_true() -> bool {
    true
}

fn default_threshold() -> f64 {
    0.5
}

#[derive(Debug, Deserialize, Clone)]
#[serde(deny_unknown_fields)]
pub struct IntegratorSpec {
    #[serde(default = "default_method")]
    pub method: String,
    #[serde(default = "default_dt0")]
    pub dt0: f64,
    #[serde(default = "default_tol")]
    pub abs_tol: f64,
    #[serde(default = "default_tol")]
    pub rel_tol: f64,
    pub t_end: f64,
    #[serde(default)]
    pub dt_max: Option<f64>,
    #[serde(default)]
    pub max_steps: Option<usize>,
}

fn default_method() -> String {
    "erk54".into()
}

fn default_dt0() -> f64 {
    1e-4
}

fn default_tol() -> f64 {
    1e-9
}

impl IntegratorSpec {
    pub fn build(&self) -> Result<IntegratorConfig, ConfigError> {
        let mut cfg = match self.method.as_str() {
            "erk54" => IntegratorConfig::erk54(self.t_end),
            "rk4" => IntegratorConfig::rk4(self.t_end, self.dt0),
            other => return Err(ConfigError::Invalid(format!("unknown method '{other}'"))),
        };
        cfg.dt0 = self.dt0;
        if cfg.method == Method::Erk54 {
            cfg.abs_tol = self.abs_tol;
            cfg.rel_tol = self.rel_tol;
        }
        if let Some(m) = self.dt_max {
            cfg.dt_max = m;
        }
        if let Some(m) = self.max_steps {
            cfg.max_steps = m;
        }
        Ok(cfg)
    }
}

#[derive(Debug, Deserialize, Clone)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    /// Times at which field snapshots are written.
    #[serde(default)]
    pub times: Vec<f64>,
    /// Equispaced plotting nodes per element direction.
    #[serde(default = "default_plot_density")]
    pub plot_density: usize,
    /// Write the per-step energy log.
    #[serde(default = "default_true")]
    pub energy_log: bool,
    /// Interval between error-vs-time samples (scattering runs).
    #[serde(default = "default_error_stride")]
    pub error_sample_dt: f64,
}

fn default_plot_density() -> usize {
    8
}

fn default_error_stride() -> f64 {
    0.02
}

impl Default for OutputSpec {
    fn default() -> Self {
        OutputSpec {
            times: Vec::new(),
            plot_density: default_plot_density(),
            energy_log: true,
            error_sample_dt: default_error_stride(),
        }
    }
}

#[derive(Debug, Deserialize, Clone)]
#[serde(deny_unknown_fields)]
pub struct MmsSpec {
    #[serde(default = "default_degrees")]
    pub degrees: Vec<usize>,
    /// Background cell counts per direction (h = extent / cells).
    #[serde(default = "default_resolutions")]
    pub resolutions: Vec<usize>,
    #[serde(default = "default_mms_t_end")]
    pub t_end: f64,
}

fn default_degrees() -> Vec<usize> {
    vec![1, 2, 3, 4]
}

fn default_resolutions() -> Vec<usize> {
    vec![4, 8, 16, 32]
}

fn default_mms_t_end() -> f64 {
    1.3
}

impl Default for MmsSpec {
    fn default() -> Self {
        MmsSpec {
            degrees: default_degrees(),
            resolutions: default_resolutions(),
            t_end: default_mms_t_end(),
        }
    }
}

#[derive(Debug, Deserialize, Clone)]
#[serde(deny_unknown_fields)]
pub struct PacmanSpec {
    /// Modal coefficient CSV: `n,aA_re,aA_im,aS_re,aS_im,bA_re,bA_im,bS_re,bS_im`.
    pub coefficients: PathBuf,
    #[serde(default = "default_truncation")]
    pub truncation: usize,
    #[serde(default = "default_wavenumber")]
    pub wavenumber: f64,
    #[serde(default = "default_one")]
    pub impedance: f64,
    #[serde(default = "default_wedge")]
    pub wedge_number: u32,
}

fn default_truncation() -> usize {
    100
}

fn default_wavenumber() -> f64 {
    9.0
}

fn default_one() -> f64 {
    1.0
}

fn default_wedge() -> u32 {
    6
}

#[derive(Debug, Deserialize, Clone)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub scenario: ScenarioKind,
    pub domain: DomainSpec,
    pub nx: usize,
    pub ny: usize,
    #[serde(default)]
    pub curves: Vec<CurveSpec>,
    #[serde(default = "default_degree")]
    pub degree: usize,
    #[serde(default = "default_tau")]
    pub tau_p: f64,
    #[serde(default = "default_tau")]
    pub tau_u: f64,
    #[serde(default)]
    pub srd: SrdSpec,
    #[serde(default)]
    pub boundary: BcConfig,
    #[serde(default)]
    pub integrator: Option<IntegratorSpec>,
    #[serde(default)]
    pub outputs: OutputSpec,
    #[serde(default)]
    pub mms: Option<MmsSpec>,
    #[serde(default)]
    pub pacman: Option<PacmanSpec>,
    #[serde(default)]
    pub seed: u64,
}

fn default_degree() -> usize {
    4
}

fn default_tau() -> f64 {
    0.5
}

#[derive(Debug)]
pub enum ConfigError {
    Io(std::io::Error),
    Parse(serde_json::Error),
    Invalid(String),
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ConfigError::Io(e) => write!(f, "io: {e}"),
            ConfigError::Parse(e) => write!(f, "config parse: {e}"),
            ConfigError::Invalid(m) => write!(f, "invalid config: {m}"),
        }
    }
}

impl std::error::Error for ConfigError {}

impl From<std::io::Error> for ConfigError {
    fn from(e: std::io::Error) -> Self {
        ConfigError::Io(e)
    }
}

impl ScenarioConfig {
    pub fn from_file(path: &Path) -> Result<(ScenarioConfig, Vec<u8>), ConfigError> {
        let bytes = std::fs::read(path)?;
        let cfg: ScenarioConfig =
            serde_json::from_slice(&bytes).map_err(ConfigError::Parse)?;
        cfg.validate()?;
        Ok((cfg, bytes))
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.nx == 0 || self.ny == 0 {
            return Err(ConfigError::Invalid("mesh must have at least one cell".into()));
        }
        if self.degree == 0 || self.degree > 8 {
            return Err(ConfigError::Invalid("degree must be in 1..=8".into()));
        }
        if self.tau_p < 0.0 || self.tau_u < 0.0 {
            return Err(ConfigError::Invalid("penalties must be nonnegative".into()));
        }
        if self.domain.x[1] <= self.domain.x[0] || self.domain.y[1] <= self.domain.y[0] {
            return Err(ConfigError::Invalid("domain box is empty".into()));
        }
        if !self.boundary.embedded.is_empty() && self.boundary.embedded.len() != self.curves.len()
        {
            return Err(ConfigError::Invalid(
                "embedded boundary list must match the curve count".into(),
            ));
        }
        if self.scenario == ScenarioKind::Pacman && self.pacman.is_none() {
            return Err(ConfigError::Invalid(
                "pacman scenario needs a [pacman] section with a coefficient file".into(),
            ));
        }
        Ok(())
    }

    pub fn grid(&self) -> GridLines {
        GridLines::uniform(self.domain.x, self.domain.y, self.nx, self.ny)
    }

    pub fn build_curves(&self, base_dir: &Path) -> Result<Vec<ParametricCurve>, ConfigError> {
        self.curves
            .iter()
            .map(|spec| build_curve(spec, base_dir))
            .collect()
    }

    pub fn build_mesh(&self, base_dir: &Path) -> Result<CutMesh, ConfigError> {
        let curves = self.build_curves(base_dir)?;
        for c in &curves {
            c.validate()
                .map_err(|e| ConfigError::Invalid(format!("curve: {e}")))?;
        }
        MeshBuilder::new(self.grid(), curves)
            .build()
            .map_err(|e| ConfigError::Invalid(format!("mesh: {e}")))
    }

    /// Boundary map with `analytic` entries resolved through the supplied
    /// exact field (`None` rejects analytic entries).
    pub fn build_bcs(
        &self,
        n_curves: usize,
        analytic: Option<Arc<dyn Fn(f64, f64, f64) -> (f64, f64, f64) + Send + Sync>>,
    ) -> Result<BcMap, ConfigError> {
        let make = |spec: &BcSpec| -> Result<BcKind, ConfigError> {
            Ok(match spec {
                BcSpec::Wall => BcKind::Wall,
                BcSpec::ZeroPressure => BcKind::ZeroPressure,
                BcSpec::Extrapolation => BcKind::Extrapolation,
                BcSpec::PressurePulse { p_set, until } => BcKind::PressurePulse {
                    p_set: *p_set,
                    until: *until,
                },
                BcSpec::Analytic => match &analytic {
                    Some(f) => BcKind::Exact(f.clone()),
                    None => {
                        return Err(ConfigError::Invalid(
                            "analytic boundary requires a scenario with an exact solution".into(),
                        ))
                    }
                },
            })
        };
        let mut embedded = Vec::with_capacity(n_curves);
        if self.boundary.embedded.is_empty() {
            for _ in 0..n_curves {
                embedded.push(make(&BcSpec::Wall)?);
            }
        } else {
            for spec in &self.boundary.embedded {
                embedded.push(make(spec)?);
            }
        }
        Ok(BcMap {
            left: make(&self.boundary.left)?,
            right: make(&self.boundary.right)?,
            bottom: make(&self.boundary.bottom)?,
            top: make(&self.boundary.top)?,
            embedded,
        })
    }
}

pub fn build_curve(spec: &CurveSpec, base_dir: &Path) -> Result<ParametricCurve, ConfigError> {
    Ok(match spec {
        CurveSpec::Circle { center, radius, fluid } => {
            ParametricCurve::circle(*center, *radius, fluid.inside())
        }
        CurveSpec::Ellipse {
            center,
            semi_axes,
            fluid,
        } => ParametricCurve::ellipse(*center, *semi_axes, fluid.inside()),
        CurveSpec::Pacman {
            center,
            radius,
            half_angle,
            fluid,
        } => ParametricCurve::pacman(*center, *radius, *half_angle, fluid.inside()),
        CurveSpec::Piecewise { segments, fluid } => {
            let segs = segments
                .iter()
                .map(|s| match s {
                    SegmentSpec::Line { from, to } => Segment::Line { from: *from, to: *to },
                    SegmentSpec::Arc {
                        center,
                        radius,
                        theta0,
                        theta1,
                    } => Segment::Arc {
                        center: *center,
                        radius: *radius,
                        theta0: *theta0,
                        theta1: *theta1,
                    },
                })
                .collect();
            ParametricCurve::piecewise(segs, fluid.inside())
        }
        CurveSpec::Tabulated { path, fluid } => {
            let full = if path.is_absolute() {
                path.clone()
            } else {
                base_dir.join(path)
            };
            let text = std::fs::read_to_string(&full)?;
            let samples = parse_curve_csv(&text)
                .map_err(|m| ConfigError::Invalid(format!("{}: {m}", full.display())))?;
            ParametricCurve::spline(&samples, fluid.inside())
        }
    })
}

/// `s,x,y` rows, header optional.
pub fn parse_curve_csv(text: &str) -> Result<Vec<(f64, f64, f64)>, String> {
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line.split(',').map(str::trim).collect();
        if lineno == 0 && cols[0].parse::<f64>().is_err() {
            continue; // header
        }
        if cols.len() != 3 {
            return Err(format!("line {}: expected 3 columns", lineno + 1));
        }
        let s: f64 = cols[0].parse().map_err(|_| format!("line {}: bad s", lineno + 1))?;
        let x: f64 = cols[1].parse().map_err(|_| format!("line {}: bad x", lineno + 1))?;
        let y: f64 = cols[2].parse().map_err(|_| format!("line {}: bad y", lineno + 1))?;
        out.push((s, x, y));
    }
    if out.len() < 4 {
        return Err("need at least 4 samples".into());
    }
    Ok(out)
}

/// Worker thread count: `CUTWAVE_THREADS` or a small default.
pub fn thread_count() -> usize {
    std::env::var("CUTWAVE_THREADS")
        .ok()
        .and_then(|v| v.parse().ok())
        .filter(|&n| n >= 1)
        .unwrap_or_else(|| {
            std::thread::available_parallelism()
                .map(|n| n.get().min(4))
                .unwrap_or(1)
        })
}
