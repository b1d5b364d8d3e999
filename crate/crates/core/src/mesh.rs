//! Hybrid cut mesh: background Cartesian cells classified as Cartesian, cut,
//! or excluded by the embedded curves; cut-element boundary loops assembled
//! from grid-line crossings, stop points, and curve arcs; face connectivity
//! by endpoint matching.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::curves::{
    find_intersections, CurveError, GridLines, MeshLine, ParametricCurve,
};
#[allow(unused_imports)] // test builds link std, whose inherent methods shadow this shim
use crate::math::Libm;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellKind {
    Cartesian,
    Cut,
    Excluded,
}

/// Traversal piece of an element boundary, fluid region on the left.
#[derive(Debug, Clone, PartialEq)]
pub enum FaceGeometry {
    Straight { a: [f64; 2], b: [f64; 2] },
    /// Curve restricted to the traversal interval `s0 -> s1`; `s0 > s1`
    /// means the loop runs against the curve parameterization, and values
    /// outside [0,1] wrap.
    Curved { curve: usize, s0: f64, s1: f64 },
}

impl FaceGeometry {
    pub fn start(&self, curves: &[ParametricCurve]) -> [f64; 2] {
        match self {
            FaceGeometry::Straight { a, .. } => *a,
            FaceGeometry::Curved { curve, s0, .. } => curves[*curve].position(wrap(*s0)),
        }
    }

    pub fn end(&self, curves: &[ParametricCurve]) -> [f64; 2] {
        match self {
            FaceGeometry::Straight { b, .. } => *b,
            FaceGeometry::Curved { curve, s1, .. } => curves[*curve].position(wrap(*s1)),
        }
    }

    pub fn chord_length(&self, curves: &[ParametricCurve]) -> f64 {
        let a = self.start(curves);
        let b = self.end(curves);
        (b[0] - a[0]).hypot(b[1] - a[1])
    }
}

pub(crate) fn wrap(s: f64) -> f64 {
    let mut t = s % 1.0;
    if t < 0.0 {
        t += 1.0;
    }
    t
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DomainSide {
    Left,
    Right,
    Bottom,
    Top,
}

/// What a non-interior face borders.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryTag {
    Domain(DomainSide),
    /// Embedded boundary belonging to a curve.
    Embedded(usize),
}

#[derive(Debug, Clone)]
pub struct Face {
    pub geom: FaceGeometry,
    pub owner: usize,
    pub neighbor: Option<usize>,
    pub tag: Option<BoundaryTag>,
    /// Offset added to face points when evaluating the neighbor's basis;
    /// nonzero only for periodic wrap faces.
    pub neighbor_shift: [f64; 2],
}

/// Reference from an element to a global face; `outward` is +1 when the
/// stored geometry's left-side fluid is this element (owner side).
#[derive(Debug, Clone, Copy)]
pub struct FaceRef {
    pub face: usize,
    pub is_owner: bool,
}

#[derive(Debug, Clone)]
pub struct Element {
    pub cell: (usize, usize),
    /// Row-major background cell id `iy * nx + ix`.
    pub bg_id: usize,
    pub kind: CellKind,
    /// Closed counterclockwise boundary loop of the fluid region.
    pub boundary: Vec<FaceGeometry>,
    pub faces: Vec<FaceRef>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum MeshError {
    Curve(CurveError),
    /// A background cell's fluid region is disconnected.
    SplitCellDetected { cell: (usize, usize) },
    /// An interior straight face found no twin in the neighboring element.
    UnmatchedFace { cell: (usize, usize) },
    /// Cut-cell boundary loop failed to close.
    OpenLoop { cell: (usize, usize) },
    /// Fluid hole strictly inside a cell (below mesh resolution).
    UnresolvedHole { cell: (usize, usize) },
    /// Periodic meshes require curve-free boundaries.
    PeriodicWithCuts,
}

impl fmt::Display for MeshError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MeshError::Curve(e) => write!(f, "curve error: {e}"),
            MeshError::SplitCellDetected { cell } => {
                write!(f, "cell {cell:?} is split into multiple cut elements")
            }
            MeshError::UnmatchedFace { cell } => {
                write!(f, "interior face of cell {cell:?} has no twin")
            }
            MeshError::OpenLoop { cell } => write!(f, "boundary loop of cell {cell:?} does not close"),
            MeshError::UnresolvedHole { cell } => {
                write!(f, "cell {cell:?} contains an embedded hole below mesh resolution")
            }
            MeshError::PeriodicWithCuts => write!(f, "periodic connectivity requires an uncut mesh"),
        }
    }
}

impl core::error::Error for MeshError {}

impl From<CurveError> for MeshError {
    fn from(e: CurveError) -> Self {
        MeshError::Curve(e)
    }
}

pub struct CutMesh {
    pub grid: GridLines,
    pub curves: Vec<ParametricCurve>,
    pub elements: Vec<Element>,
    pub faces: Vec<Face>,
    /// Background cell -> active element index.
    pub cell_to_elem: Vec<Option<usize>>,
    pub kinds: Vec<CellKind>,
    pub periodic: bool,
    /// Count of tangential (multiplicity-zero) contacts seen while meshing.
    pub tangential_contacts: usize,
    /// Faces dropped for having arclength below the degeneracy floor.
    pub degenerate_faces_dropped: usize,
}

impl CutMesh {
    pub fn nx(&self) -> usize {
        self.grid.x.len() - 1
    }

    pub fn ny(&self) -> usize {
        self.grid.y.len() - 1
    }

    pub fn dx(&self) -> f64 {
        self.grid.x[1] - self.grid.x[0]
    }

    pub fn dy(&self) -> f64 {
        self.grid.y[1] - self.grid.y[0]
    }

    pub fn cell_box(&self, cell: (usize, usize)) -> ([f64; 2], [f64; 2]) {
        (
            [self.grid.x[cell.0], self.grid.y[cell.1]],
            [self.grid.x[cell.0 + 1], self.grid.y[cell.1 + 1]],
        )
    }

    pub fn cell_center(&self, cell: (usize, usize)) -> [f64; 2] {
        let (lo, hi) = self.cell_box(cell);
        [0.5 * (lo[0] + hi[0]), 0.5 * (lo[1] + hi[1])]
    }

    pub fn n_elements(&self) -> usize {
        self.elements.len()
    }

    /// Winding number of an element's boundary loop around `p`; `> 1/2`
    /// means inside. This is the point-in-element test used by quadrature
    /// sampling.
    pub fn element_winding(&self, elem: usize, p: [f64; 2]) -> f64 {
        let mut total = 0.0;
        for geom in &self.elements[elem].boundary {
            total += self.face_winding(geom, p);
        }
        total / (2.0 * core::f64::consts::PI)
    }

    fn face_winding(&self, geom: &FaceGeometry, p: [f64; 2]) -> f64 {
        match geom {
            FaceGeometry::Straight { a, b } => angle_at(p, *a, *b),
            FaceGeometry::Curved { curve, s0, s1 } => {
                let c = &self.curves[*curve];
                let mut total = 0.0;
                let nseg = 8;
                for k in 0..nseg {
                    let t0 = s0 + (s1 - s0) * k as f64 / nseg as f64;
                    let t1 = s0 + (s1 - s0) * (k + 1) as f64 / nseg as f64;
                    total += curved_winding(c, p, t0, t1, 0);
                }
                total
            }
        }
    }

    pub fn contains(&self, elem: usize, p: [f64; 2]) -> bool {
        self.element_winding(elem, p) > 0.5
    }

    /// Whether `p` is on the fluid side of every curve.
    pub fn is_fluid(&self, p: [f64; 2]) -> bool {
        self.curves.iter().all(|c| c.is_fluid(p))
    }
}

fn angle_at(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let v0 = [a[0] - p[0], a[1] - p[1]];
    let v1 = [b[0] - p[0], b[1] - p[1]];
    let cross = v0[0] * v1[1] - v0[1] * v1[0];
    let dot = v0[0] * v1[0] + v0[1] * v1[1];
    cross.atan2(dot)
}

fn curved_winding(c: &ParametricCurve, p: [f64; 2], s0: f64, s1: f64, depth: u32) -> f64 {
    let p0 = c.position(wrap(s0));
    let p1 = c.position(wrap(s1));
    let ang = angle_at(p, p0, p1);
    let d0 = (p0[0] - p[0]).hypot(p0[1] - p[1]);
    let d1 = (p1[0] - p[0]).hypot(p1[1] - p[1]);
    let chord = (p1[0] - p0[0]).hypot(p1[1] - p0[1]);
    if (chord < 0.8 * d0.min(d1) && ang.abs() < 0.5) || depth >= 44 {
        return ang;
    }
    let sm = 0.5 * (s0 + s1);
    curved_winding(c, p, s0, sm, depth + 1) + curved_winding(c, p, sm, s1, depth + 1)
}

/// A curve arc contained in one background cell, endpoints on crossings or
/// stop points.
#[derive(Debug, Clone)]
struct CellArc {
    curve: usize,
    s0: f64,
    s1: f64,
    p0: [f64; 2],
    p1: [f64; 2],
}

struct LineCrossings {
    /// For each vertical line index: sorted (y, position) crossing records.
    vertical: Vec<Vec<[f64; 2]>>,
    horizontal: Vec<Vec<[f64; 2]>>,
}

pub struct MeshBuilder {
    pub grid: GridLines,
    pub curves: Vec<ParametricCurve>,
    pub periodic: bool,
}

impl MeshBuilder {
    pub fn new(grid: GridLines, curves: Vec<ParametricCurve>) -> Self {
        MeshBuilder {
            grid,
            curves,
            periodic: false,
        }
    }

    pub fn periodic(mut self, on: bool) -> Self {
        self.periodic = on;
        self
    }

    pub fn build(self) -> Result<CutMesh, MeshError> {
        let MeshBuilder {
            grid,
            curves,
            periodic,
        } = self;
        if periodic && !curves.is_empty() {
            return Err(MeshError::PeriodicWithCuts);
        }
        let (nx, ny) = grid.ncells();
        let ncells = nx * ny;

        let mut tangential = 0usize;
        let mut arcs_per_cell: Vec<Vec<CellArc>> = vec![Vec::new(); ncells];
        let mut lines = LineCrossings {
            vertical: vec![Vec::new(); grid.x.len()],
            horizontal: vec![Vec::new(); grid.y.len()],
        };

        for (ci, curve) in curves.iter().enumerate() {
            let hits = find_intersections(curve, &grid)?;
            tangential += hits.tangential_contacts;
            let pts = &hits.points;
            for bp in pts {
                match bp.line {
                    Some(MeshLine::Vertical(i)) => lines.vertical[i].push([bp.point[1], bp.point[0]]),
                    Some(MeshLine::Horizontal(j)) => {
                        lines.horizontal[j].push([bp.point[0], bp.point[1]])
                    }
                    None => {}
                }
            }
            if pts.is_empty() {
                continue;
            }
            let n = pts.len();
            for k in 0..n {
                let a = &pts[k];
                let (s1, p1) = if k + 1 < n {
                    (pts[k + 1].s, pts[k + 1].point)
                } else {
                    (pts[0].s + 1.0, pts[0].point)
                };
                if s1 - a.s < 1e-13 {
                    continue;
                }
                let mid = curve.position(wrap(0.5 * (a.s + s1)));
                let tol = 1e-9 * curve.scale().max(1.0);
                if mid[0] < grid.x[0] - tol
                    || mid[0] > grid.x[grid.x.len() - 1] + tol
                    || mid[1] < grid.y[0] - tol
                    || mid[1] > grid.y[grid.y.len() - 1] + tol
                {
                    // Arc outside the domain box bounds no cell.
                    continue;
                }
                let cell = grid.cell_of(mid);
                arcs_per_cell[cell.1 * nx + cell.0].push(CellArc {
                    curve: ci,
                    s0: a.s,
                    s1,
                    p0: a.point,
                    p1,
                });
            }
        }

        for list in lines.vertical.iter_mut().chain(lines.horizontal.iter_mut()) {
            list.sort_by(|a, b| a[0].partial_cmp(&b[0]).unwrap());
        }

        // Classification.
        let mut kinds = vec![CellKind::Cartesian; ncells];
        for iy in 0..ny {
            for ix in 0..nx {
                let id = iy * nx + ix;
                if !arcs_per_cell[id].is_empty() {
                    kinds[id] = CellKind::Cut;
                } else {
                    let center = [
                        0.5 * (grid.x[ix] + grid.x[ix + 1]),
                        0.5 * (grid.y[iy] + grid.y[iy + 1]),
                    ];
                    let fluid = curves.iter().all(|c| c.is_fluid(center));
                    kinds[id] = if fluid {
                        CellKind::Cartesian
                    } else {
                        CellKind::Excluded
                    };
                }
            }
        }

        // Per-cell boundary loops.
        let scale = (grid.x[grid.x.len() - 1] - grid.x[0])
            .hypot(grid.y[grid.y.len() - 1] - grid.y[0]);
        let match_tol = 1e-10 * scale.max(1.0);
        let mut degenerate_dropped = 0usize;
        let mut elements: Vec<Element> = Vec::new();
        let mut cell_to_elem: Vec<Option<usize>> = vec![None; ncells];

        for iy in 0..ny {
            for ix in 0..nx {
                let id = iy * nx + ix;
                match kinds[id] {
                    CellKind::Excluded => {}
                    CellKind::Cartesian => {
                        let (lo, hi) = (
                            [grid.x[ix], grid.y[iy]],
                            [grid.x[ix + 1], grid.y[iy + 1]],
                        );
                        let boundary = vec![
                            FaceGeometry::Straight { a: lo, b: [hi[0], lo[1]] },
                            FaceGeometry::Straight { a: [hi[0], lo[1]], b: hi },
                            FaceGeometry::Straight { a: hi, b: [lo[0], hi[1]] },
                            FaceGeometry::Straight { a: [lo[0], hi[1]], b: lo },
                        ];
                        cell_to_elem[id] = Some(elements.len());
                        elements.push(Element {
                            cell: (ix, iy),
                            bg_id: id,
                            kind: CellKind::Cartesian,
                            boundary,
                            faces: Vec::new(),
                        });
                    }
                    CellKind::Cut => {
                        let loop_faces = build_cut_boundary(
                            &grid,
                            &curves,
                            &lines,
                            (ix, iy),
                            &arcs_per_cell[id],
                            match_tol,
                            &mut degenerate_dropped,
                        )?;
                        let area = loop_area(&loop_faces, &curves);
                        let cellarea = (grid.x[ix + 1] - grid.x[ix]) * (grid.y[iy + 1] - grid.y[iy]);
                        if area < 1e-12 * cellarea {
                            kinds[id] = CellKind::Excluded;
                            continue;
                        }
                        cell_to_elem[id] = Some(elements.len());
                        elements.push(Element {
                            cell: (ix, iy),
                            bg_id: id,
                            kind: CellKind::Cut,
                            boundary: loop_faces,
                            faces: Vec::new(),
                        });
                    }
                }
            }
        }

        let mut mesh = CutMesh {
            grid,
            curves,
            elements,
            faces: Vec::new(),
            cell_to_elem,
            kinds,
            periodic,
            tangential_contacts: tangential,
            degenerate_faces_dropped: degenerate_dropped,
        };
        connect(&mut mesh, match_tol)?;
        Ok(mesh)
    }
}

/// Loop area by the shoelace rule with curved pieces sampled densely; only
/// used for orientation/degeneracy checks, not quadrature.
fn loop_area(faces: &[FaceGeometry], curves: &[ParametricCurve]) -> f64 {
    let mut pts: Vec<[f64; 2]> = Vec::new();
    for f in faces {
        match f {
            FaceGeometry::Straight { a, .. } => pts.push(*a),
            FaceGeometry::Curved { curve, s0, s1 } => {
                for k in 0..16 {
                    let s = s0 + (s1 - s0) * k as f64 / 16.0;
                    pts.push(curves[*curve].position(wrap(s)));
                }
            }
        }
    }
    let mut area = 0.0;
    for i in 0..pts.len() {
        let a = pts[i];
        let b = pts[(i + 1) % pts.len()];
        area += a[0] * b[1] - b[0] * a[1];
    }
    0.5 * area
}

#[allow(clippy::too_many_arguments)]
fn build_cut_boundary(
    grid: &GridLines,
    curves: &[ParametricCurve],
    lines: &LineCrossings,
    cell: (usize, usize),
    arcs: &[CellArc],
    tol: f64,
    degenerate_dropped: &mut usize,
) -> Result<Vec<FaceGeometry>, MeshError> {
    let (ix, iy) = cell;
    let (x0, x1) = (grid.x[ix], grid.x[ix + 1]);
    let (y0, y1) = (grid.y[iy], grid.y[iy + 1]);
    let perim_w = x1 - x0;
    let perim_h = y1 - y0;

    // Border nodes: cell corners plus crossings on the four border edges.
    let mut border: Vec<(f64, [f64; 2])> = Vec::new();
    let perim = |p: [f64; 2]| -> f64 {
        // Counterclockwise perimeter coordinate from (x0, y0).
        if (p[1] - y0).abs() <= tol && p[0] <= x1 + tol {
            p[0] - x0
        } else if (p[0] - x1).abs() <= tol {
            perim_w + (p[1] - y0)
        } else if (p[1] - y1).abs() <= tol {
            perim_w + perim_h + (x1 - p[0])
        } else {
            2.0 * perim_w + perim_h + (y1 - p[1])
        }
    };
    for corner in [[x0, y0], [x1, y0], [x1, y1], [x0, y1]] {
        border.push((perim(corner), corner));
    }
    for &[y, x] in &lines.vertical[ix] {
        if (y0..=y1).contains(&y) {
            border.push((perim([x, y]), [x, y]));
        }
    }
    for &[y, x] in &lines.vertical[ix + 1] {
        if (y0..=y1).contains(&y) {
            border.push((perim([x, y]), [x, y]));
        }
    }
    for &[x, y] in &lines.horizontal[iy] {
        if (x0..=x1).contains(&x) {
            border.push((perim([x, y]), [x, y]));
        }
    }
    for &[x, y] in &lines.horizontal[iy + 1] {
        if (x0..=x1).contains(&x) {
            border.push((perim([x, y]), [x, y]));
        }
    }
    border.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    border.dedup_by(|a, b| (a.0 - b.0).abs() <= tol);

    // Fluid border segments between consecutive border nodes.
    let total = 2.0 * (perim_w + perim_h);
    let unperim = |t: f64| -> [f64; 2] {
        let t = { let r = t % total; if r < 0.0 { r + total } else { r } };
        if t <= perim_w {
            [x0 + t, y0]
        } else if t <= perim_w + perim_h {
            [x1, y0 + (t - perim_w)]
        } else if t <= 2.0 * perim_w + perim_h {
            [x1 - (t - perim_w - perim_h), y1]
        } else {
            [x0, y1 - (t - 2.0 * perim_w - perim_h)]
        }
    };

    let mut edges: Vec<FaceGeometry> = Vec::new();
    let nb = border.len();
    for k in 0..nb {
        let (t_a, pa) = border[k];
        let (t_b, pb) = if k + 1 < nb {
            border[k + 1]
        } else {
            (border[0].0 + total, border[0].1)
        };
        if t_b - t_a <= tol {
            continue;
        }
        let mid = unperim(0.5 * (t_a + t_b));
        if curves.iter().all(|c| c.is_fluid(mid)) {
            if t_b - t_a <= 1e-12 {
                *degenerate_dropped += 1;
                continue;
            }
            edges.push(FaceGeometry::Straight { a: pa, b: pb });
        }
    }

    // Curve arcs oriented with the fluid on the left of traversal.
    for arc in arcs {
        let c = &curves[arc.curve];
        let fluid_left = c.is_ccw() == c.fluid_inside();
        let len_est = (arc.p1[0] - arc.p0[0]).hypot(arc.p1[1] - arc.p0[1]);
        if len_est <= 1e-12 && (arc.s1 - arc.s0) <= 1e-10 {
            *degenerate_dropped += 1;
            continue;
        }
        if fluid_left {
            edges.push(FaceGeometry::Curved {
                curve: arc.curve,
                s0: arc.s0,
                s1: arc.s1,
            });
        } else {
            edges.push(FaceGeometry::Curved {
                curve: arc.curve,
                s0: arc.s1,
                s1: arc.s0,
            });
        }
    }

    // Chain edges end-to-start into closed loops.
    let n_edges = edges.len();
    let mut used = vec![false; n_edges];
    let mut loops: Vec<Vec<FaceGeometry>> = Vec::new();
    for start in 0..n_edges {
        if used[start] {
            continue;
        }
        let mut current = Vec::new();
        let mut idx = start;
        used[start] = true;
        loop {
            current.push(edges[idx].clone());
            let endpoint = edges[idx].end(curves);
            let mut next = None;
            for (j, e) in edges.iter().enumerate() {
                if used[j] {
                    continue;
                }
                let sp = e.start(curves);
                if (sp[0] - endpoint[0]).abs() <= tol && (sp[1] - endpoint[1]).abs() <= tol {
                    next = Some(j);
                    break;
                }
            }
            match next {
                Some(j) => {
                    used[j] = true;
                    idx = j;
                }
                None => {
                    let first = current[0].start(curves);
                    let last = current.last().unwrap().end(curves);
                    if (first[0] - last[0]).abs() <= tol && (first[1] - last[1]).abs() <= tol {
                        break;
                    }
                    return Err(MeshError::OpenLoop { cell });
                }
            }
        }
        loops.push(current);
    }

    if loops.len() > 1 {
        // Multiple loops: either a genuinely split cell (several loops touch
        // the border) or an unresolved hole (a loop of curve faces only).
        let with_border = loops
            .iter()
            .filter(|l| l.iter().any(|f| matches!(f, FaceGeometry::Straight { .. })))
            .count();
        if with_border > 1 {
            return Err(MeshError::SplitCellDetected { cell });
        }
        return Err(MeshError::UnresolvedHole { cell });
    }
    loops.pop().ok_or(MeshError::OpenLoop { cell })
}

/// Match interior faces between elements and tag boundary faces.
fn connect(mesh: &mut CutMesh, tol: f64) -> Result<(), MeshError> {
    let nxl = mesh.grid.x.len();
    let nyl = mesh.grid.y.len();
    let x_first = mesh.grid.x[0];
    let x_last = mesh.grid.x[nxl - 1];
    let y_first = mesh.grid.y[0];
    let y_last = mesh.grid.y[nyl - 1];

    let quant = |v: f64| -> i64 { (v / tol).round() as i64 };

    // Key: quantized unordered endpoint pair.
    let mut open: BTreeMap<(i64, i64, i64, i64), (usize, usize)> = BTreeMap::new();
    let mut faces: Vec<Face> = Vec::new();

    struct Pending {
        elem: usize,
        geom: FaceGeometry,
    }
    let mut straight: Vec<Pending> = Vec::new();

    for (ei, elem) in mesh.elements.iter().enumerate() {
        for geom in &elem.boundary {
            match geom {
                FaceGeometry::Curved { curve, s0, s1 } => {
                    faces.push(Face {
                        geom: FaceGeometry::Curved {
                            curve: *curve,
                            s0: *s0,
                            s1: *s1,
                        },
                        owner: ei,
                        neighbor: None,
                        tag: Some(BoundaryTag::Embedded(*curve)),
                        neighbor_shift: [0.0, 0.0],
                    });
                }
                FaceGeometry::Straight { a, b } => {
                    straight.push(Pending {
                        elem: ei,
                        geom: FaceGeometry::Straight { a: *a, b: *b },
                    });
                }
            }
        }
    }

    for p in straight {
        let (a, b) = match &p.geom {
            FaceGeometry::Straight { a, b } => (*a, *b),
            _ => unreachable!(),
        };
        let ka = (quant(a[0]), quant(a[1]));
        let kb = (quant(b[0]), quant(b[1]));
        let key = if ka <= kb {
            (ka.0, ka.1, kb.0, kb.1)
        } else {
            (kb.0, kb.1, ka.0, ka.1)
        };
        if let Some((other_elem, face_idx)) = open.remove(&key) {
            faces[face_idx].neighbor = Some(p.elem);
            faces[face_idx].tag = None;
            let _ = other_elem;
        } else {
            let idx = faces.len();
            faces.push(Face {
                geom: p.geom,
                owner: p.elem,
                neighbor: None,
                tag: None,
                neighbor_shift: [0.0, 0.0],
            });
            open.insert(key, (p.elem, idx));
        }
    }

    // Remaining unmatched straight faces are boundary faces: domain sides,
    // periodic twins, or walls against excluded cells.
    let mut periodic_open: BTreeMap<(bool, i64, i64), usize> = BTreeMap::new();
    for idx in 0..faces.len() {
        if faces[idx].neighbor.is_some() || faces[idx].tag.is_some() {
            continue;
        }
        let (a, b) = match &faces[idx].geom {
            FaceGeometry::Straight { a, b } => (*a, *b),
            _ => continue,
        };
        let on_left = (a[0] - x_first).abs() <= tol && (b[0] - x_first).abs() <= tol;
        let on_right = (a[0] - x_last).abs() <= tol && (b[0] - x_last).abs() <= tol;
        let on_bottom = (a[1] - y_first).abs() <= tol && (b[1] - y_first).abs() <= tol;
        let on_top = (a[1] - y_last).abs() <= tol && (b[1] - y_last).abs() <= tol;
        if mesh.periodic && (on_left || on_right || on_bottom || on_top) {
            // Match across the periodic wrap by the face's in-line span.
            let key = if on_left || on_right {
                let lo = quant(a[1].min(b[1]));
                let hi = quant(a[1].max(b[1]));
                (true, lo, hi)
            } else {
                let lo = quant(a[0].min(b[0]));
                let hi = quant(a[0].max(b[0]));
                (false, lo, hi)
            };
            if let Some(other) = periodic_open.remove(&key) {
                let nb = faces[idx].owner;
                faces[other].neighbor = Some(nb);
                // Evaluate the neighbor's basis at points shifted across the
                // wrap; direction depends on which side the kept face sits.
                let (ka, kb) = match &faces[other].geom {
                    FaceGeometry::Straight { a, b } => (*a, *b),
                    _ => unreachable!(),
                };
                let lx = x_last - x_first;
                let ly = y_last - y_first;
                faces[other].neighbor_shift =
                    if (ka[0] - x_first).abs() <= tol && (kb[0] - x_first).abs() <= tol {
                        [lx, 0.0]
                    } else if (ka[0] - x_last).abs() <= tol && (kb[0] - x_last).abs() <= tol {
                        [-lx, 0.0]
                    } else if (ka[1] - y_first).abs() <= tol && (kb[1] - y_first).abs() <= tol {
                        [0.0, ly]
                    } else {
                        [0.0, -ly]
                    };
                faces[idx].neighbor = Some(usize::MAX); // mark for removal
            } else {
                periodic_open.insert(key, idx);
            }
            continue;
        }
        let tag = if on_left {
            BoundaryTag::Domain(DomainSide::Left)
        } else if on_right {
            BoundaryTag::Domain(DomainSide::Right)
        } else if on_bottom {
            BoundaryTag::Domain(DomainSide::Bottom)
        } else if on_top {
            BoundaryTag::Domain(DomainSide::Top)
        } else {
            // Interior grid line with no twin: legitimate only when the far
            // cell is excluded (sub-resolution geometry resolving to a
            // whole-cell wall). Anything else is a connectivity bug.
            let mid = [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])];
            let n = [b[1] - a[1], -(b[0] - a[0])];
            let nl = n[0].hypot(n[1]).max(1e-300);
            let probe = [
                mid[0] + 0.01 * (n[0] / nl) * mesh.dx(),
                mid[1] + 0.01 * (n[1] / nl) * mesh.dy(),
            ];
            let far_cell = mesh.grid.cell_of(probe);
            let (nx, _) = mesh.grid.ncells();
            if mesh.kinds[far_cell.1 * nx + far_cell.0] != CellKind::Excluded {
                return Err(MeshError::UnmatchedFace {
                    cell: mesh.elements[faces[idx].owner].cell,
                });
            }
            let ci = mesh
                .curves
                .iter()
                .position(|c| !c.is_fluid(probe))
                .unwrap_or(0);
            BoundaryTag::Embedded(ci)
        };
        faces[idx].tag = Some(tag);
    }
    if !periodic_open.is_empty() {
        let idx = *periodic_open.values().next().unwrap();
        return Err(MeshError::UnmatchedFace {
            cell: mesh.elements[faces[idx].owner].cell,
        });
    }

    // Drop faces marked as periodic duplicates, remapping indices.
    let mut remap = vec![usize::MAX; faces.len()];
    let mut kept: Vec<Face> = Vec::new();
    for (i, f) in faces.into_iter().enumerate() {
        if f.neighbor == Some(usize::MAX) {
            continue;
        }
        remap[i] = kept.len();
        kept.push(f);
    }

    // Sanity: every interior face must reference two distinct elements.
    for f in &kept {
        if f.neighbor.is_none() && f.tag.is_none() {
            return Err(MeshError::UnmatchedFace {
                cell: mesh.elements[f.owner].cell,
            });
        }
    }

    // Element face lists.
    for (fi, f) in kept.iter().enumerate() {
        mesh.elements[f.owner].faces.push(FaceRef {
            face: fi,
            is_owner: true,
        });
        if let Some(nb) = f.neighbor {
            mesh.elements[nb].faces.push(FaceRef {
                face: fi,
                is_owner: false,
            });
        }
    }
    mesh.faces = kept;
    Ok(())
}

/// Cut elements whose fluid volume is below `threshold` times the full cell
/// volume; `volumes` must hold the quadrature volume of every element.
pub fn detect_small(mesh: &CutMesh, volumes: &[f64], threshold: f64) -> Vec<usize> {
    let full = mesh.dx() * mesh.dy();
    mesh.elements
        .iter()
        .enumerate()
        .filter(|(ei, e)| e.kind == CellKind::Cut && volumes[*ei] < threshold * full)
        .map(|(ei, _)| ei)
        .collect()
}
