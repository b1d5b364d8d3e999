//! Embedded boundaries as explicit parameterizations `c(s): [0,1] -> R^2`,
//! plus curve-mesh intersection by stepping along the curve and bisecting
//! bracketed grid-line crossings.

use alloc::boxed::Box;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

#[allow(unused_imports)] // test builds link std, whose inherent methods shadow this shim
use crate::math::Libm;

pub type CurveFn = Box<dyn Fn(f64) -> [f64; 2] + Send + Sync>;

#[derive(Debug, Clone, PartialEq)]
pub enum CurveError {
    /// Tangent magnitude below 1e-13; normals are undefined (cusp/corner).
    ZeroTangent { s: f64 },
    /// Adaptive stepping hit the floor without isolating a crossing.
    StepTooCoarse { s: f64 },
    /// `position(0)` and `position(1)` differ by more than the closure tolerance.
    NotClosed { gap: f64 },
    /// Stop points must be strictly increasing within [0, 1].
    BadStopPoints,
    /// Supplied derivative disagrees with central differences.
    DerivativeMismatch { s: f64, rel_err: f64 },
}

impl fmt::Display for CurveError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CurveError::ZeroTangent { s } => write!(f, "zero tangent at s = {s}"),
            CurveError::StepTooCoarse { s } => {
                write!(f, "step floor reached near s = {s}; near-tangential contact")
            }
            CurveError::NotClosed { gap } => write!(f, "curve endpoints differ by {gap}"),
            CurveError::BadStopPoints => write!(f, "stop points not strictly increasing in [0,1]"),
            CurveError::DerivativeMismatch { s, rel_err } => {
                write!(f, "derivative mismatch at s = {s} (rel err {rel_err})")
            }
        }
    }
}

impl core::error::Error for CurveError {}

/// A closed boundary piece with explicit position and derivative maps.
///
/// `fluid_inside` declares which side of the curve belongs to the flow
/// domain; together with the traversal orientation it fixes the outward
/// normal sign (right-hand rule).
pub struct ParametricCurve {
    position: CurveFn,
    derivative: Option<CurveFn>,
    stop_points: Vec<f64>,
    fluid_inside: bool,
    closure_tol: f64,
    scale: f64,
    ccw: bool,
}

impl ParametricCurve {
    pub fn from_closures(
        position: CurveFn,
        derivative: Option<CurveFn>,
        stop_points: Vec<f64>,
        fluid_inside: bool,
    ) -> Self {
        let mut c = ParametricCurve {
            position,
            derivative,
            stop_points,
            fluid_inside,
            closure_tol: 1e-12,
            scale: 1.0,
            ccw: true,
        };
        c.scale = c.estimate_scale();
        c.ccw = c.signed_area() > 0.0;
        c
    }

    pub fn circle(center: [f64; 2], radius: f64, fluid_inside: bool) -> Self {
        let pos = move |s: f64| {
            let a = 2.0 * core::f64::consts::PI * s;
            [center[0] + radius * a.cos(), center[1] + radius * a.sin()]
        };
        let der = move |s: f64| {
            let a = 2.0 * core::f64::consts::PI * s;
            let w = 2.0 * core::f64::consts::PI * radius;
            [-w * a.sin(), w * a.cos()]
        };
        Self::from_closures(Box::new(pos), Some(Box::new(der)), Vec::new(), fluid_inside)
    }

    pub fn ellipse(center: [f64; 2], semi_axes: [f64; 2], fluid_inside: bool) -> Self {
        let pos = move |s: f64| {
            let a = 2.0 * core::f64::consts::PI * s;
            [
                center[0] + semi_axes[0] * a.cos(),
                center[1] + semi_axes[1] * a.sin(),
            ]
        };
        let der = move |s: f64| {
            let a = 2.0 * core::f64::consts::PI * s;
            let w = 2.0 * core::f64::consts::PI;
            [-w * semi_axes[0] * a.sin(), w * semi_axes[1] * a.cos()]
        };
        Self::from_closures(Box::new(pos), Some(Box::new(der)), Vec::new(), fluid_inside)
    }

    /// Disk of radius `r` with the angular sector `(-half_angle, half_angle)`
    /// removed. Traversal: outer arc counterclockwise from the upper mouth
    /// corner, then the lower mouth edge inward to the vertex and the upper
    /// mouth edge back out; stop points at all three corners.
    pub fn pacman(center: [f64; 2], radius: f64, half_angle: f64, fluid_inside: bool) -> Self {
        let upper = [
            center[0] + radius * half_angle.cos(),
            center[1] + radius * half_angle.sin(),
        ];
        let lower = [
            center[0] + radius * half_angle.cos(),
            center[1] - radius * half_angle.sin(),
        ];
        let segments = vec![
            Segment::Arc {
                center,
                radius,
                theta0: half_angle,
                theta1: 2.0 * core::f64::consts::PI - half_angle,
            },
            Segment::Line {
                from: lower,
                to: center,
            },
            Segment::Line {
                from: center,
                to: upper,
            },
        ];
        Self::piecewise(segments, fluid_inside)
    }

    /// Closed piecewise curve from line and arc segments; the parameter is
    /// allocated proportionally to segment arclength and every junction
    /// becomes a stop point.
    pub fn piecewise(segments: Vec<Segment>, fluid_inside: bool) -> Self {
        assert!(!segments.is_empty());
        let lengths: Vec<f64> = segments.iter().map(|s| s.length()).collect();
        let total: f64 = lengths.iter().sum();
        let mut breaks = Vec::with_capacity(segments.len() + 1);
        breaks.push(0.0);
        let mut acc = 0.0;
        for l in &lengths {
            acc += l / total;
            breaks.push(acc);
        }
        *breaks.last_mut().unwrap() = 1.0;
        let stop_points = breaks.clone();
        let segs = segments.clone();
        let br = breaks.clone();
        let pos = move |s: f64| {
            let (k, t) = locate(&br, s);
            segs[k].position(t)
        };
        let br2 = breaks;
        let der = move |s: f64| {
            let (k, t) = locate(&br2, s);
            let d = segments[k].derivative(t);
            let span = br2[k + 1] - br2[k];
            [d[0] / span, d[1] / span]
        };
        Self::from_closures(Box::new(pos), Some(Box::new(der)), stop_points, fluid_inside)
    }

    /// Closed cubic-spline curve through `(s_i, x_i, y_i)` samples with
    /// periodic end conditions. Samples must start at `s = 0`, be strictly
    /// increasing, and describe a closed loop.
    pub fn spline(samples: &[(f64, f64, f64)], fluid_inside: bool) -> Self {
        let sx = PeriodicSpline::fit(samples.iter().map(|p| (p.0, p.1)).collect());
        let sy = PeriodicSpline::fit(samples.iter().map(|p| (p.0, p.2)).collect());
        let (sx2, sy2) = (sx.clone(), sy.clone());
        let pos = move |s: f64| [sx.eval(s), sy.eval(s)];
        let der = move |s: f64| [sx2.deriv(s), sy2.deriv(s)];
        Self::from_closures(Box::new(pos), Some(Box::new(der)), Vec::new(), fluid_inside)
    }

    pub fn with_closure_tol(mut self, tol: f64) -> Self {
        self.closure_tol = tol;
        self
    }

    pub fn fluid_inside(&self) -> bool {
        self.fluid_inside
    }

    pub fn stop_points(&self) -> &[f64] {
        &self.stop_points
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn is_ccw(&self) -> bool {
        self.ccw
    }

    #[inline]
    pub fn position(&self, s: f64) -> [f64; 2] {
        (self.position)(s)
    }

    /// Derivative map: user-supplied analytic form, or central differences
    /// with `h = 1e-7 * scale` otherwise.
    pub fn derivative(&self, s: f64) -> [f64; 2] {
        if let Some(d) = &self.derivative {
            d(s)
        } else {
            let h = 1e-7 * self.scale.max(1e-30);
            let sp = wrap_unit(s + h);
            let sm = wrap_unit(s - h);
            let pp = self.position(sp);
            let pm = self.position(sm);
            [(pp[0] - pm[0]) / (2.0 * h), (pp[1] - pm[1]) / (2.0 * h)]
        }
    }

    /// Unit outward normal, pointing out of the fluid domain.
    pub fn eval_normal(&self, s: f64) -> Result<[f64; 2], CurveError> {
        let d = self.derivative(s);
        let mag = d[0].hypot(d[1]);
        if mag < 1e-13 {
            return Err(CurveError::ZeroTangent { s });
        }
        let t = [d[0] / mag, d[1] / mag];
        // Interior lies to the left of a counterclockwise traversal. The
        // outward (out-of-fluid) normal points towards the non-fluid side.
        let interior_left = self.ccw;
        let fluid_left = interior_left == self.fluid_inside;
        let n = if fluid_left {
            // Out of fluid = right normal (-90 degrees).
            [t[1], -t[0]]
        } else {
            // Out of fluid = left normal (+90 degrees).
            [-t[1], t[0]]
        };
        Ok(n)
    }

    /// Signed winding number of the curve around `p` (adaptive subdivision).
    pub fn winding(&self, p: [f64; 2]) -> f64 {
        let mut total = 0.0;
        let nseg = 64;
        for k in 0..nseg {
            let s0 = k as f64 / nseg as f64;
            let s1 = (k + 1) as f64 / nseg as f64;
            total += self.winding_segment(p, s0, s1, self.position(s0), self.position(s1), 0);
        }
        total / (2.0 * core::f64::consts::PI)
    }

    fn winding_segment(
        &self,
        p: [f64; 2],
        s0: f64,
        s1: f64,
        p0: [f64; 2],
        p1: [f64; 2],
        depth: u32,
    ) -> f64 {
        let v0 = [p0[0] - p[0], p0[1] - p[1]];
        let v1 = [p1[0] - p[0], p1[1] - p[1]];
        let d0 = v0[0].hypot(v0[1]);
        let d1 = v1[0].hypot(v1[1]);
        let chord = (p1[0] - p0[0]).hypot(p1[1] - p0[1]);
        let cross = v0[0] * v1[1] - v0[1] * v1[0];
        let dot = v0[0] * v1[0] + v0[1] * v1[1];
        let ang = cross.atan2(dot);
        let safe = chord < 0.8 * d0.min(d1) && ang.abs() < 0.5;
        if safe || depth >= 48 {
            return ang;
        }
        let sm = 0.5 * (s0 + s1);
        let pm = self.position(sm);
        self.winding_segment(p, s0, sm, p0, pm, depth + 1)
            + self.winding_segment(p, sm, s1, pm, p1, depth + 1)
    }

    /// Whether `p` lies on the fluid side of this curve.
    pub fn is_fluid(&self, p: [f64; 2]) -> bool {
        let w = self.winding(p);
        let inside = w.round().abs() > 0.5;
        inside == self.fluid_inside
    }

    /// Structural checks: closure, stop-point monotonicity, derivative vs
    /// central differences at deterministic pseudo-random parameters.
    pub fn validate(&self) -> Result<(), CurveError> {
        let p0 = self.position(0.0);
        let p1 = self.position(1.0);
        let gap = (p0[0] - p1[0]).hypot(p0[1] - p1[1]);
        if gap > self.closure_tol * self.scale.max(1.0) {
            return Err(CurveError::NotClosed { gap });
        }
        let sp = &self.stop_points;
        for w in sp.windows(2) {
            if w[1] <= w[0] {
                return Err(CurveError::BadStopPoints);
            }
        }
        if sp.iter().any(|&s| !(0.0..=1.0).contains(&s)) {
            return Err(CurveError::BadStopPoints);
        }
        let mut state = 0x8f1b_35c7_22aa_91d3u64;
        let h = 1e-7 * self.scale.max(1e-30);
        for _ in 0..100 {
            let mut s = crate::math::splitmix_unit(&mut state);
            // Keep clear of corners where one-sided derivatives differ.
            if sp.iter().any(|&q| (s - q).abs() < 10.0 * h) {
                s = wrap_unit(s + 0.5e-3);
            }
            let d = self.derivative(s);
            let pp = self.position(wrap_unit(s + h));
            let pm = self.position(wrap_unit(s - h));
            let fd = [(pp[0] - pm[0]) / (2.0 * h), (pp[1] - pm[1]) / (2.0 * h)];
            let mag = d[0].hypot(d[1]).max(1e-30);
            let err = (d[0] - fd[0]).hypot(d[1] - fd[1]) / mag;
            if err > 1e-6 {
                return Err(CurveError::DerivativeMismatch { s, rel_err: err });
            }
        }
        Ok(())
    }

    fn estimate_scale(&self) -> f64 {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for k in 0..=64 {
            let p = self.position(k as f64 / 64.0);
            for d in 0..2 {
                lo[d] = lo[d].min(p[d]);
                hi[d] = hi[d].max(p[d]);
            }
        }
        ((hi[0] - lo[0]).hypot(hi[1] - lo[1])).max(1e-30)
    }

    fn signed_area(&self) -> f64 {
        // Shoelace over a dense sample polygon including stop points.
        let mut params: Vec<f64> = (0..=512).map(|k| k as f64 / 512.0).collect();
        params.extend_from_slice(&self.stop_points);
        params.sort_by(|a, b| a.partial_cmp(b).unwrap());
        params.dedup_by(|a, b| (*a - *b).abs() < 1e-15);
        let pts: Vec<[f64; 2]> = params.iter().map(|&s| self.position(s)).collect();
        let mut area = 0.0;
        for i in 0..pts.len() {
            let a = pts[i];
            let b = pts[(i + 1) % pts.len()];
            area += a[0] * b[1] - b[0] * a[1];
        }
        0.5 * area
    }
}

fn wrap_unit(s: f64) -> f64 {
    let mut t = s % 1.0;
    if t < 0.0 {
        t += 1.0;
    }
    t
}

fn locate(breaks: &[f64], s: f64) -> (usize, f64) {
    let s = s.clamp(0.0, 1.0);
    let mut k = breaks.partition_point(|&b| b <= s);
    k = k.saturating_sub(1).min(breaks.len() - 2);
    let span = breaks[k + 1] - breaks[k];
    (k, ((s - breaks[k]) / span).clamp(0.0, 1.0))
}

/// Piece of a piecewise boundary; `t` runs over [0, 1] within the piece.
#[derive(Clone, Debug)]
pub enum Segment {
    Line { from: [f64; 2], to: [f64; 2] },
    Arc {
        center: [f64; 2],
        radius: f64,
        theta0: f64,
        theta1: f64,
    },
}

impl Segment {
    fn length(&self) -> f64 {
        match self {
            Segment::Line { from, to } => (to[0] - from[0]).hypot(to[1] - from[1]),
            Segment::Arc { radius, theta0, theta1, .. } => radius * (theta1 - theta0).abs(),
        }
    }

    fn position(&self, t: f64) -> [f64; 2] {
        match self {
            Segment::Line { from, to } => [
                from[0] + t * (to[0] - from[0]),
                from[1] + t * (to[1] - from[1]),
            ],
            Segment::Arc {
                center,
                radius,
                theta0,
                theta1,
            } => {
                let a = theta0 + t * (theta1 - theta0);
                [center[0] + radius * a.cos(), center[1] + radius * a.sin()]
            }
        }
    }

    /// Derivative with respect to the within-piece parameter `t`.
    fn derivative(&self, t: f64) -> [f64; 2] {
        match self {
            Segment::Line { from, to } => [to[0] - from[0], to[1] - from[1]],
            Segment::Arc {
                center: _,
                radius,
                theta0,
                theta1,
            } => {
                let a = theta0 + t * (theta1 - theta0);
                let w = theta1 - theta0;
                [-radius * w * a.sin(), radius * w * a.cos()]
            }
        }
    }
}

/// Periodic cubic spline on [0, 1].
#[derive(Clone)]
struct PeriodicSpline {
    s: Vec<f64>,
    v: Vec<f64>,
    m: Vec<f64>, // second derivatives at the knots
}

impl PeriodicSpline {
    fn fit(pts: Vec<(f64, f64)>) -> Self {
        let n = pts.len();
        assert!(n >= 3, "spline needs at least 3 samples");
        let s: Vec<f64> = pts.iter().map(|p| p.0).collect();
        let mut v: Vec<f64> = pts.iter().map(|p| p.1).collect();
        assert!(s[0] == 0.0, "spline samples must start at s = 0");
        for w in s.windows(2) {
            assert!(w[1] > w[0], "spline samples must be strictly increasing");
        }
        // Drop a duplicated closing sample; periodicity supplies it.
        let (s, period) = if (*s.last().unwrap() - 1.0).abs() < 1e-12 {
            v.pop();
            (s[..n - 1].to_vec(), 1.0)
        } else {
            (s, 1.0)
        };
        let n = s.len();
        let h = |i: usize| -> f64 {
            if i + 1 < n {
                s[i + 1] - s[i]
            } else {
                period - s[n - 1] + s[0]
            }
        };
        let val = |i: usize| v[i % n];
        // Cyclic tridiagonal system for the second derivatives.
        let mut a = vec![0.0; n];
        let mut b = vec![0.0; n];
        let mut c = vec![0.0; n];
        let mut d = vec![0.0; n];
        for i in 0..n {
            let him1 = h((i + n - 1) % n);
            let hi = h(i);
            a[i] = him1;
            b[i] = 2.0 * (him1 + hi);
            c[i] = hi;
            d[i] = 6.0 * ((val(i + 1) - val(i)) / hi - (val(i) - val(i + n - 1)) / him1);
        }
        let m = solve_cyclic_tridiag(&a, &b, &c, &d);
        PeriodicSpline { s, v, m }
    }

    fn locate(&self, x: f64) -> (usize, f64, f64) {
        let x = wrap_unit(x);
        let n = self.s.len();
        let mut i = self.s.partition_point(|&t| t <= x);
        i = i.saturating_sub(1).min(n - 1);
        let next = if i + 1 < n { self.s[i + 1] } else { 1.0 + self.s[0] };
        (i, x - self.s[i], next - self.s[i])
    }

    fn eval(&self, x: f64) -> f64 {
        let n = self.s.len();
        let (i, dx, h) = self.locate(x);
        let (vi, vj) = (self.v[i], self.v[(i + 1) % n]);
        let (mi, mj) = (self.m[i], self.m[(i + 1) % n]);
        let t = dx / h;
        let u = 1.0 - t;
        u * vi + t * vj + h * h / 6.0 * ((u * u * u - u) * mi + (t * t * t - t) * mj)
    }

    fn deriv(&self, x: f64) -> f64 {
        let n = self.s.len();
        let (i, dx, h) = self.locate(x);
        let (vi, vj) = (self.v[i], self.v[(i + 1) % n]);
        let (mi, mj) = (self.m[i], self.m[(i + 1) % n]);
        let t = dx / h;
        let u = 1.0 - t;
        (vj - vi) / h + h / 6.0 * ((3.0 * t * t - 1.0) * mj - (3.0 * u * u - 1.0) * mi)
    }
}

/// Cyclic tridiagonal solve by rank-one correction of two ordinary solves.
fn solve_cyclic_tridiag(a: &[f64], b: &[f64], c: &[f64], d: &[f64]) -> Vec<f64> {
    let n = b.len();
    assert!(n >= 3);
    let solve = |rhs: &[f64], bmod: &[f64]| -> Vec<f64> {
        let mut cp = vec![0.0; n];
        let mut dp = vec![0.0; n];
        cp[0] = c[0] / bmod[0];
        dp[0] = rhs[0] / bmod[0];
        for i in 1..n {
            let m = bmod[i] - a[i] * cp[i - 1];
            cp[i] = c[i] / m;
            dp[i] = (rhs[i] - a[i] * dp[i - 1]) / m;
        }
        let mut x = vec![0.0; n];
        x[n - 1] = dp[n - 1];
        for i in (0..n - 1).rev() {
            x[i] = dp[i] - cp[i] * x[i + 1];
        }
        x
    };
    // Sherman-Morrison with u = (gamma, 0, .., 0, c_n)^T-style corner removal.
    let gamma = -b[0];
    let mut bmod = b.to_vec();
    bmod[0] -= gamma;
    bmod[n - 1] -= a[0] * c[n - 1] / gamma;
    let x = solve(d, &bmod);
    let mut u = vec![0.0; n];
    u[0] = gamma;
    u[n - 1] = c[n - 1];
    let z = solve(&u, &bmod);
    let fact = (x[0] + a[0] * x[n - 1] / gamma) / (1.0 + z[0] + a[0] * z[n - 1] / gamma);
    x.iter().zip(z.iter()).map(|(xi, zi)| xi - fact * zi).collect()
}

/// Which background mesh line a boundary point lies on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeshLine {
    Vertical(usize),
    Horizontal(usize),
}

/// A point of interest along a curve: a grid-line crossing, a stop point, or
/// both when a corner happens to sit on a line.
#[derive(Debug, Clone)]
pub struct BoundaryPoint {
    pub s: f64,
    pub point: [f64; 2],
    pub line: Option<MeshLine>,
    pub is_stop: bool,
}

/// Background mesh lines (sorted coordinates of the vertical and horizontal
/// grid lines).
#[derive(Debug, Clone)]
pub struct GridLines {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl GridLines {
    pub fn uniform(xrange: [f64; 2], yrange: [f64; 2], nx: usize, ny: usize) -> Self {
        assert!(nx >= 1 && ny >= 1);
        let x = (0..=nx)
            .map(|i| xrange[0] + (xrange[1] - xrange[0]) * i as f64 / nx as f64)
            .collect();
        let y = (0..=ny)
            .map(|j| yrange[0] + (yrange[1] - yrange[0]) * j as f64 / ny as f64)
            .collect();
        GridLines { x, y }
    }

    pub fn ncells(&self) -> (usize, usize) {
        (self.x.len() - 1, self.y.len() - 1)
    }

    /// Index of the cell interval containing `v` along sorted `lines`
    /// (clamped to valid cells; a point exactly on a line reports the upper
    /// interval).
    pub fn interval(lines: &[f64], v: f64) -> usize {
        let k = lines.partition_point(|&l| l <= v);
        k.saturating_sub(1).min(lines.len().saturating_sub(2))
    }

    pub fn cell_of(&self, p: [f64; 2]) -> (usize, usize) {
        (Self::interval(&self.x, p[0]), Self::interval(&self.y, p[1]))
    }
}

/// Sorted boundary points of one curve against a grid.
#[derive(Debug, Clone)]
pub struct CurveMeshIntersections {
    pub points: Vec<BoundaryPoint>,
    /// Count of detected touch-without-crossing contacts (multiplicity 0,
    /// recorded but not treated as crossings).
    pub tangential_contacts: usize,
}

const BISECT_TOL: f64 = 1e-12;
const STEP_FLOOR: f64 = 1e-9;

/// Walk along the curve and record every crossing with a mesh line, exactly
/// once, bisected to `|coordinate - line| <= 1e-12`; stop points are merged
/// into the same sorted list and flagged.
pub fn find_intersections(
    curve: &ParametricCurve,
    grid: &GridLines,
) -> Result<CurveMeshIntersections, CurveError> {
    let p0 = curve.position(0.0);
    let p1 = curve.position(1.0);
    let gap = (p0[0] - p1[0]).hypot(p0[1] - p1[1]);
    if gap > curve.closure_tol * curve.scale.max(1.0) {
        return Err(CurveError::NotClosed { gap });
    }
    let (nx, ny) = grid.ncells();
    let mut ds = 1.0 / (20.0 * nx.max(ny) as f64);

    // Segment endpoints: stop points plus the parameter endpoints.
    let mut anchors = vec![0.0, 1.0];
    anchors.extend_from_slice(curve.stop_points());
    anchors.sort_by(|a, b| a.partial_cmp(b).unwrap());
    anchors.dedup_by(|a, b| (*a - *b).abs() < 1e-14);

    for _attempt in 0..8 {
        match walk_once(curve, grid, &anchors, ds) {
            Ok(mut result) => {
                if verify_single_cell_arcs(curve, grid, &result.points) {
                    dedupe(&mut result.points);
                    return Ok(result);
                }
                ds *= 0.5;
                if ds < STEP_FLOOR {
                    return Err(CurveError::StepTooCoarse { s: 0.0 });
                }
            }
            Err(e) => return Err(e),
        }
    }
    Err(CurveError::StepTooCoarse { s: 0.0 })
}

fn walk_once(
    curve: &ParametricCurve,
    grid: &GridLines,
    anchors: &[f64],
    ds0: f64,
) -> Result<CurveMeshIntersections, CurveError> {
    let mut points: Vec<BoundaryPoint> = Vec::new();
    let mut tangential = 0usize;

    for win in anchors.windows(2) {
        let (sa, sb) = (win[0], win[1]);
        let mut s = sa;
        let mut p = curve.position(s);
        while s < sb - 1e-15 {
            let mut step = ds0.min(sb - s);
            loop {
                let s2 = s + step;
                let p2 = curve.position(s2);
                let sm = s + 0.5 * step;
                let pm = curve.position(sm);
                let ix1 = GridLines::interval(&grid.x, p[0]);
                let ix2 = GridLines::interval(&grid.x, p2[0]);
                let ixm = GridLines::interval(&grid.x, pm[0]);
                let iy1 = GridLines::interval(&grid.y, p[1]);
                let iy2 = GridLines::interval(&grid.y, p2[1]);
                let iym = GridLines::interval(&grid.y, pm[1]);
                let dx_jump = ix1.abs_diff(ix2).max(ix1.abs_diff(ixm)).max(ixm.abs_diff(ix2));
                let dy_jump = iy1.abs_diff(iy2).max(iy1.abs_diff(iym)).max(iym.abs_diff(iy2));
                if (dx_jump > 1 || dy_jump > 1) && step > STEP_FLOOR {
                    step *= 0.5;
                    continue;
                }
                if dx_jump > 1 || dy_jump > 1 {
                    return Err(CurveError::StepTooCoarse { s });
                }
                // At most one line crossed per coordinate inside this step
                // (the midpoint may bracket two sub-crossings of the same
                // line; both halves are searched).
                for (half_s, half_p, half_s2, half_p2) in
                    [(s, p, sm, pm), (sm, pm, s2, p2)]
                {
                    find_crossings_in_span(
                        curve,
                        grid,
                        true,
                        half_s,
                        half_p,
                        half_s2,
                        half_p2,
                        &mut points,
                        &mut tangential,
                    );
                    find_crossings_in_span(
                        curve,
                        grid,
                        false,
                        half_s,
                        half_p,
                        half_s2,
                        half_p2,
                        &mut points,
                        &mut tangential,
                    );
                }
                s = s2;
                p = p2;
                break;
            }
        }
    }

    // Merge stop points (everything in `anchors` except the plain parameter
    // endpoints of a smooth closure).
    for &sp in curve.stop_points() {
        let pt = curve.position(sp);
        let line = line_at_point(grid, pt);
        points.push(BoundaryPoint {
            s: sp,
            point: pt,
            line,
            is_stop: true,
        });
    }

    points.sort_by(|a, b| a.s.partial_cmp(&b.s).unwrap());
    Ok(CurveMeshIntersections {
        points,
        tangential_contacts: tangential,
    })
}

#[allow(clippy::too_many_arguments)]
fn find_crossings_in_span(
    curve: &ParametricCurve,
    grid: &GridLines,
    vertical: bool,
    s1: f64,
    p1: [f64; 2],
    s2: f64,
    p2: [f64; 2],
    points: &mut Vec<BoundaryPoint>,
    tangential: &mut usize,
) {
    let lines: &[f64] = if vertical { &grid.x } else { &grid.y };
    // A crossing only exists where the transverse coordinate lies within the
    // grid span; curves may wander outside the domain box.
    let (t_lo, t_hi) = if vertical {
        (grid.y[0], grid.y[grid.y.len() - 1])
    } else {
        (grid.x[0], grid.x[grid.x.len() - 1])
    };
    let t_tol = 1e-12 * (t_hi - t_lo).abs().max(1.0);
    let in_span = |p: [f64; 2]| {
        let t = if vertical { p[1] } else { p[0] };
        (t_lo - t_tol..=t_hi + t_tol).contains(&t)
    };
    let coord = |p: [f64; 2]| if vertical { p[0] } else { p[1] };
    let i1 = GridLines::interval(lines, coord(p1));
    let i2 = GridLines::interval(lines, coord(p2));
    if i1 == i2 {
        // Endpoint exactly on a line counts as a crossing; detect via the
        // residual instead of the interval index.
        for &edge in &[i1, i1 + 1] {
            if edge < lines.len() {
                let g1 = coord(p1) - lines[edge];
                if g1.abs() <= 1e-13 && s1 > 0.0 && in_span(p1) {
                    push_crossing(curve, lines, vertical, s1, p1, edge, points);
                }
            }
        }
        // Closure endpoint s = 0 on a line.
        if s1 == 0.0 {
            for &edge in &[i1, i1 + 1] {
                if edge < lines.len() && (coord(p1) - lines[edge]).abs() <= 1e-13 && in_span(p1) {
                    push_crossing(curve, lines, vertical, 0.0, p1, edge, points);
                }
            }
        }
        return;
    }
    let li = i1.max(i2);
    let line = lines[li];
    let g1 = coord(p1) - line;
    let g2 = coord(p2) - line;
    if g1 == 0.0 {
        if in_span(p1) {
            push_crossing(curve, lines, vertical, s1, p1, li, points);
        }
        return;
    }
    if g2 == 0.0 {
        // The next span sees this point as its left endpoint; record now to
        // be safe, dedupe later.
        if in_span(p2) {
            push_crossing(curve, lines, vertical, s2, p2, li, points);
        }
        return;
    }
    if g1 * g2 > 0.0 {
        // Interval index changed without a sign change: grazing contact.
        *tangential += 1;
        return;
    }
    // Bisection on the signed coordinate difference, run to interval
    // exhaustion so loop joints close to machine precision (the contract
    // only needs |f| <= 1e-12; tighter is free here).
    let (mut a, mut fa, mut b) = (s1, g1, s2);
    let mut best = (a, fa.abs());
    for _ in 0..120 {
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            break;
        }
        let pm = curve.position(mid);
        let fm = coord(pm) - line;
        if fm.abs() < best.1 {
            best = (mid, fm.abs());
        }
        if fm == 0.0 {
            break;
        }
        if fa * fm < 0.0 {
            b = mid;
        } else {
            a = mid;
            fa = fm;
        }
    }
    debug_assert!(best.1 <= BISECT_TOL);
    let s_hit = best.0;
    let pm = curve.position(s_hit);
    if in_span(pm) {
        push_crossing(curve, lines, vertical, s_hit, pm, li, points);
    }
}

fn push_crossing(
    curve: &ParametricCurve,
    lines: &[f64],
    vertical: bool,
    s: f64,
    p: [f64; 2],
    line_index: usize,
    points: &mut Vec<BoundaryPoint>,
) {
    // Snap the on-line coordinate exactly.
    let mut point = p;
    if vertical {
        point[0] = lines[line_index];
    } else {
        point[1] = lines[line_index];
    }
    let _ = curve;
    points.push(BoundaryPoint {
        s,
        point,
        line: Some(if vertical {
            MeshLine::Vertical(line_index)
        } else {
            MeshLine::Horizontal(line_index)
        }),
        is_stop: false,
    });
}

fn line_at_point(grid: &GridLines, p: [f64; 2]) -> Option<MeshLine> {
    for (i, &x) in grid.x.iter().enumerate() {
        if (p[0] - x).abs() <= 1e-13 {
            return Some(MeshLine::Vertical(i));
        }
    }
    for (j, &y) in grid.y.iter().enumerate() {
        if (p[1] - y).abs() <= 1e-13 {
            return Some(MeshLine::Horizontal(j));
        }
    }
    None
}

fn dedupe(points: &mut Vec<BoundaryPoint>) {
    points.sort_by(|a, b| a.s.partial_cmp(&b.s).unwrap());
    let mut out: Vec<BoundaryPoint> = Vec::with_capacity(points.len());
    for p in points.drain(..) {
        if let Some(last) = out.last_mut() {
            if (p.s - last.s).abs() < 1e-11
                && (p.point[0] - last.point[0]).abs() < 1e-9
                && (p.point[1] - last.point[1]).abs() < 1e-9
            {
                last.is_stop |= p.is_stop;
                if last.line.is_none() {
                    last.line = p.line;
                }
                continue;
            }
        }
        out.push(p);
    }
    // Merge the wrap-around duplicate (s = 0 vs s = 1).
    if out.len() >= 2 {
        let first = out.first().unwrap().clone();
        let last = out.last().unwrap().clone();
        if (first.s + 1.0 - last.s).abs() < 1e-11
            && (first.point[0] - last.point[0]).abs() < 1e-9
            && (first.point[1] - last.point[1]).abs() < 1e-9
        {
            out.first_mut().unwrap().is_stop |= last.is_stop;
            out.pop();
        }
    }
    *points = out;
}

/// Between consecutive boundary points the curve must stay within a single
/// background cell (up to an on-boundary tolerance).
fn verify_single_cell_arcs(
    curve: &ParametricCurve,
    grid: &GridLines,
    points: &[BoundaryPoint],
) -> bool {
    if points.len() < 2 {
        return true;
    }
    let tol = 1e-9 * curve.scale.max(1.0);
    let gx_lo = grid.x[0];
    let gx_hi = grid.x[grid.x.len() - 1];
    let gy_lo = grid.y[0];
    let gy_hi = grid.y[grid.y.len() - 1];
    let n = points.len();
    for k in 0..n {
        let s0 = points[k].s;
        let s1 = if k + 1 < n { points[k + 1].s } else { points[0].s + 1.0 };
        if s1 - s0 < 1e-13 {
            continue;
        }
        let smid = wrap_unit(0.5 * (s0 + s1));
        let pmid = curve.position(smid);
        // Arcs wandering outside the grid box bound no cell.
        if pmid[0] < gx_lo - tol
            || pmid[0] > gx_hi + tol
            || pmid[1] < gy_lo - tol
            || pmid[1] > gy_hi + tol
        {
            continue;
        }
        let (cx, cy) = grid.cell_of(pmid);
        let (x_lo, x_hi) = (grid.x[cx], grid.x[cx + 1]);
        let (y_lo, y_hi) = (grid.y[cy], grid.y[cy + 1]);
        for q in 1..8 {
            let s = wrap_unit(s0 + (s1 - s0) * q as f64 / 8.0);
            let p = curve.position(s);
            if p[0] < x_lo - tol || p[0] > x_hi + tol || p[1] < y_lo - tol || p[1] > y_hi + tol {
                return false;
            }
        }
    }
    true
}
