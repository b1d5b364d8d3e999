//! Quadrature: mapped Gauss rules on straight and curved faces, tensor Gauss
//! volume rules on Cartesian elements, and moment-fitted volume rules with
//! approximate Fekete nodes on cut elements.
//!
//! Cut-cell volume rules follow the divergence-theorem moment fitting recipe:
//! target integrals of a 2D Legendre basis are computed from the face rules
//! via exact antiderivative recurrences, quadrature nodes are chosen as the
//! pivot points of a column-pivoted QR of the sample Vandermonde transpose,
//! and weights solve the resulting square moment system. Negative weights are
//! accepted; the conditioning number `kappa = sum|w| / sum w` is recorded.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::curves::ParametricCurve;
use crate::gauss::gauss_legendre;
use crate::linalg::{Lu, PivotedQr};
#[allow(unused_imports)] // test builds link std, whose inherent methods shadow this shim
use crate::math::Libm;
use crate::mesh::{wrap, CellKind, CutMesh, FaceGeometry};
use crate::poly::Legendre2d;

#[derive(Debug, Clone, PartialEq)]
pub enum QuadratureError {
    ZeroLengthFace,
    /// The sample Vandermonde stayed rank-deficient after all refinements.
    RankDeficient { element: usize },
    SingularMomentSystem { element: usize },
}

impl fmt::Display for QuadratureError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            QuadratureError::ZeroLengthFace => write!(f, "face has zero length"),
            QuadratureError::RankDeficient { element } => {
                write!(f, "element {element}: Fekete sampling is rank deficient")
            }
            QuadratureError::SingularMomentSystem { element } => {
                write!(f, "element {element}: moment system is singular")
            }
        }
    }
}

impl core::error::Error for QuadratureError {}

/// Nodes, arclength weights, and unit outward normals on one face.
#[derive(Debug, Clone)]
pub struct FaceQuad {
    pub points: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
    pub normals: Vec<[f64; 2]>,
}

impl FaceQuad {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn arclength(&self) -> f64 {
        self.weights.iter().sum()
    }
}

/// `4(N+1)`-node Gauss rule mapped onto a face. Normals point out of the
/// fluid region the face belongs to (fluid is left of the traversal).
pub fn face_rule(
    geom: &FaceGeometry,
    curves: &[ParametricCurve],
    n: usize,
) -> Result<FaceQuad, QuadratureError> {
    let nq = 4 * (n + 1);
    let (gx, gw) = gauss_legendre(nq);
    match geom {
        FaceGeometry::Straight { a, b } => {
            let len = (b[0] - a[0]).hypot(b[1] - a[1]);
            if len <= 1e-300 {
                return Err(QuadratureError::ZeroLengthFace);
            }
            let t = [(b[0] - a[0]) / len, (b[1] - a[1]) / len];
            let normal = [t[1], -t[0]];
            let points = gx
                .iter()
                .map(|&xi| {
                    let u = 0.5 * (xi + 1.0);
                    [a[0] + u * (b[0] - a[0]), a[1] + u * (b[1] - a[1])]
                })
                .collect();
            let weights = gw.iter().map(|&w| 0.5 * len * w).collect();
            let normals = vec![normal; nq];
            Ok(FaceQuad {
                points,
                weights,
                normals,
            })
        }
        FaceGeometry::Curved { curve, s0, s1 } => {
            let c = &curves[*curve];
            let half = 0.5 * (s1 - s0);
            if half.abs() <= 1e-300 {
                return Err(QuadratureError::ZeroLengthFace);
            }
            let mid = 0.5 * (s0 + s1);
            let mut points = Vec::with_capacity(nq);
            let mut weights = Vec::with_capacity(nq);
            let mut normals = Vec::with_capacity(nq);
            for (&xi, &w) in gx.iter().zip(gw.iter()) {
                let s = wrap(mid + xi * half);
                let p = c.position(s);
                let d = c.derivative(s);
                let speed = d[0].hypot(d[1]);
                let nrm = c
                    .eval_normal(s)
                    .map_err(|_| QuadratureError::ZeroLengthFace)?;
                points.push(p);
                weights.push(w * speed * half.abs());
                normals.push(nrm);
            }
            Ok(FaceQuad {
                points,
                weights,
                normals,
            })
        }
    }
}

/// Affine frame mapping a cut element onto the unit box: centroid of the
/// face quadrature nodes, then per-axis division by the largest coordinate
/// distance, so all mapped face nodes land in the closed unit-radius box.
/// The axes scale independently; sliver elements would otherwise make the
/// mapped basis unresolvable across their thin direction.
#[derive(Debug, Clone, Copy)]
pub struct MappedFrame {
    pub center: [f64; 2],
    pub scale: [f64; 2],
}

impl MappedFrame {
    pub fn from_face_quads<'a>(quads: impl Iterator<Item = &'a FaceQuad>) -> MappedFrame {
        let mut pts: Vec<[f64; 2]> = Vec::new();
        for q in quads {
            pts.extend_from_slice(&q.points);
        }
        let n = pts.len().max(1) as f64;
        let mut cx = 0.0;
        let mut cy = 0.0;
        for p in &pts {
            cx += p[0];
            cy += p[1];
        }
        cx /= n;
        cy /= n;
        let mut sx = 0.0_f64;
        let mut sy = 0.0_f64;
        for p in &pts {
            sx = sx.max((p[0] - cx).abs());
            sy = sy.max((p[1] - cy).abs());
        }
        // Guard fully degenerate directions.
        let floor = 1e-12 * sx.max(sy).max(1e-300);
        MappedFrame {
            center: [cx, cy],
            scale: [sx.max(floor), sy.max(floor)],
        }
    }

    #[inline]
    pub fn map(&self, p: [f64; 2]) -> [f64; 2] {
        [
            (p[0] - self.center[0]) / self.scale[0],
            (p[1] - self.center[1]) / self.scale[1],
        ]
    }

    #[inline]
    pub fn unmap(&self, p: [f64; 2]) -> [f64; 2] {
        [
            p[0] * self.scale[0] + self.center[0],
            p[1] * self.scale[1] + self.center[1],
        ]
    }

    /// Jacobian determinant of the physical-from-mapped transformation.
    pub fn area_scale(&self) -> f64 {
        self.scale[0] * self.scale[1]
    }
}

/// Divergence-theorem target integrals of the mapped-frame Legendre basis:
/// `b_i = oint F(psi_i) . n ds` over the element boundary, which equals the
/// mapped-frame area integral of `psi_i`.
pub fn target_integrals(
    basis: &Legendre2d,
    frame: &MappedFrame,
    face_quads: &[&FaceQuad],
) -> Vec<f64> {
    let np = basis.len();
    let mut b = vec![0.0; np];
    let mut fx = vec![0.0; np];
    let mut fy = vec![0.0; np];
    for q in face_quads {
        for ((p, w), nrm) in q.points.iter().zip(&q.weights).zip(&q.normals) {
            let m = frame.map(*p);
            basis.antiderivative_field(m[0], m[1], &mut fx, &mut fy);
            // Under the per-axis map, `n ds` transforms componentwise:
            // n_x ds / s_y and n_y ds / s_x.
            let wx = w * nrm[0] / frame.scale[1];
            let wy = w * nrm[1] / frame.scale[0];
            for i in 0..np {
                b[i] += fx[i] * wx + fy[i] * wy;
            }
        }
    }
    b
}

/// Volume rule on one element. Weights are physical (integrate `f(x, y)`
/// directly); `kappa` is the weight conditioning number `sum|w|/sum w`.
#[derive(Debug, Clone)]
pub struct VolumeRule {
    pub points: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
    pub kappa: f64,
}

impl VolumeRule {
    pub fn volume(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn integrate(&self, mut f: impl FnMut(f64, f64) -> f64) -> f64 {
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(p, w)| w * f(p[0], p[1]))
            .sum()
    }
}

/// Tensor Gauss volume rule on an axis-aligned box; `(n+1)^2` nodes, exact
/// through degree `2n + 1` per direction.
pub fn cartesian_volume_rule(lo: [f64; 2], hi: [f64; 2], n: usize) -> VolumeRule {
    let (gx, gw) = gauss_legendre(n + 1);
    let hx = 0.5 * (hi[0] - lo[0]);
    let hy = 0.5 * (hi[1] - lo[1]);
    let cx = 0.5 * (hi[0] + lo[0]);
    let cy = 0.5 * (hi[1] + lo[1]);
    let mut points = Vec::with_capacity((n + 1) * (n + 1));
    let mut weights = Vec::with_capacity((n + 1) * (n + 1));
    for (yj, wy) in gx.iter().zip(&gw) {
        for (xi, wx) in gx.iter().zip(&gw) {
            points.push([cx + hx * xi, cy + hy * yj]);
            weights.push(hx * hy * wx * wy);
        }
    }
    VolumeRule {
        points,
        weights,
        kappa: 1.0,
    }
}

/// Sampling control for approximate Fekete point selection.
const FEKETE_BASE_GRID: usize = 40;
const FEKETE_MAX_REFINES: usize = 6;
const RANK_REL_TOL: f64 = 1e-10;

fn sample_points(
    lo: [f64; 2],
    hi: [f64; 2],
    m: usize,
    contains: &dyn Fn([f64; 2]) -> bool,
) -> Vec<[f64; 2]> {
    let mut pts = Vec::new();
    for j in 0..m {
        let y = lo[1] + (hi[1] - lo[1]) * (j as f64 + 0.5) / m as f64;
        for i in 0..m {
            let x = lo[0] + (hi[0] - lo[0]) * (i as f64 + 0.5) / m as f64;
            if contains([x, y]) {
                pts.push([x, y]);
            }
        }
    }
    pts
}

/// Approximate Fekete points for a basis of given degree: sample an evenly
/// spaced lattice on the background cell, keep points inside the element,
/// and take the pivot points of a column-pivoted QR of the Vandermonde
/// transpose. Resamples on a finer lattice while rank deficient.
fn fekete_points(
    element: usize,
    lo: [f64; 2],
    hi: [f64; 2],
    contains: &dyn Fn([f64; 2]) -> bool,
    frame: &MappedFrame,
    deg: usize,
) -> Result<Vec<[f64; 2]>, QuadratureError> {
    let basis = Legendre2d::new(deg);
    let np = basis.len();
    let mut m = FEKETE_BASE_GRID;
    for _ in 0..=FEKETE_MAX_REFINES {
        let pts = sample_points(lo, hi, m, contains);
        if pts.len() >= np {
            let mapped: Vec<[f64; 2]> = pts.iter().map(|&p| frame.map(p)).collect();
            let v = basis.vandermonde(&mapped);
            let qr = PivotedQr::factor(v.transpose());
            if qr.rank(RANK_REL_TOL) >= np {
                let chosen: Vec<[f64; 2]> = qr.pivots[..np].iter().map(|&j| pts[j]).collect();
                return Ok(chosen);
            }
        }
        m *= 2;
    }
    Err(QuadratureError::RankDeficient { element })
}

/// Moment-fitted volume rule on a cut element: `(2N+1)(2N+2)/2` approximate
/// Fekete nodes and weights solving the target-integral system.
pub fn fekete_volume_rule(
    element: usize,
    lo: [f64; 2],
    hi: [f64; 2],
    contains: &dyn Fn([f64; 2]) -> bool,
    frame: &MappedFrame,
    face_quads: &[&FaceQuad],
    n: usize,
) -> Result<VolumeRule, QuadratureError> {
    let basis = Legendre2d::new(2 * n);
    let np = basis.len();
    let b = target_integrals(&basis, frame, face_quads);
    let nodes = fekete_points(element, lo, hi, contains, frame, 2 * n)?;
    // Reduced Vandermonde transpose: rows = basis, cols = chosen nodes.
    let mapped: Vec<[f64; 2]> = nodes.iter().map(|&p| frame.map(p)).collect();
    let vt = basis.vandermonde(&mapped).transpose();
    debug_assert_eq!(vt.nrows(), np);
    let lu = Lu::factor(vt).map_err(|_| QuadratureError::SingularMomentSystem { element })?;
    let w_mapped = lu.solve(&b);
    let scale2 = frame.area_scale();
    let weights: Vec<f64> = w_mapped.iter().map(|w| w * scale2).collect();
    let sum: f64 = weights.iter().sum();
    let abs_sum: f64 = weights.iter().map(|w| w.abs()).sum();
    let kappa = if sum != 0.0 { abs_sum / sum } else { f64::INFINITY };
    Ok(VolumeRule {
        points: nodes,
        weights,
        kappa,
    })
}

/// Unisolvent interpolation nodes of the total-degree-`n` space on a cut
/// element: the same pivoted-QR machinery with the degree-`n` basis.
pub fn interpolation_nodes(
    element: usize,
    lo: [f64; 2],
    hi: [f64; 2],
    contains: &dyn Fn([f64; 2]) -> bool,
    frame: &MappedFrame,
    n: usize,
) -> Result<Vec<[f64; 2]>, QuadratureError> {
    fekete_points(element, lo, hi, contains, frame, n)
}

/// Per-mesh quadrature bundle at solution degree `n`.
pub struct MeshQuadrature {
    pub n: usize,
    /// Indexed by global face id.
    pub face_quads: Vec<FaceQuad>,
    /// Per element; identity frames on Cartesian elements.
    pub frames: Vec<MappedFrame>,
    pub volumes: Vec<VolumeRule>,
    /// Fekete interpolation nodes for cut elements; empty for Cartesian.
    pub cut_nodes: Vec<Vec<[f64; 2]>>,
}

impl MeshQuadrature {
    pub fn build(mesh: &CutMesh, n: usize) -> Result<MeshQuadrature, QuadratureError> {
        let mut face_quads = Vec::with_capacity(mesh.faces.len());
        for f in &mesh.faces {
            face_quads.push(face_rule(&f.geom, &mesh.curves, n)?);
        }
        let mut frames = Vec::with_capacity(mesh.elements.len());
        let mut volumes = Vec::with_capacity(mesh.elements.len());
        let mut cut_nodes = Vec::with_capacity(mesh.elements.len());
        for (ei, elem) in mesh.elements.iter().enumerate() {
            let (lo, hi) = mesh.cell_box(elem.cell);
            match elem.kind {
                CellKind::Cartesian => {
                    frames.push(MappedFrame {
                        center: mesh.cell_center(elem.cell),
                        scale: [0.5 * (hi[0] - lo[0]), 0.5 * (hi[1] - lo[1])],
                    });
                    volumes.push(cartesian_volume_rule(lo, hi, n));
                    cut_nodes.push(Vec::new());
                }
                CellKind::Cut => {
                    // Rules built from the element's own boundary traversal so
                    // normals point out of this element on shared faces too.
                    let local: Vec<FaceQuad> = elem
                        .boundary
                        .iter()
                        .map(|g| face_rule(g, &mesh.curves, n))
                        .collect::<Result<_, _>>()?;
                    let frame = MappedFrame::from_face_quads(local.iter());
                    let refs: Vec<&FaceQuad> = local.iter().collect();
                    let contains = |p: [f64; 2]| mesh.contains(ei, p);
                    // Sample over the element's own bounding box (padded);
                    // lattices over the full background cell cannot resolve
                    // near-tangent slivers at any affordable refinement.
                    let pad = [1.03 * frame.scale[0], 1.03 * frame.scale[1]];
                    let slo = [frame.center[0] - pad[0], frame.center[1] - pad[1]];
                    let shi = [frame.center[0] + pad[0], frame.center[1] + pad[1]];
                    let slo = [slo[0].max(lo[0]), slo[1].max(lo[1])];
                    let shi = [shi[0].min(hi[0]), shi[1].min(hi[1])];
                    let rule =
                        fekete_volume_rule(ei, slo, shi, &contains, &frame, &refs, n)?;
                    let nodes = interpolation_nodes(ei, slo, shi, &contains, &frame, n)?;
                    frames.push(frame);
                    volumes.push(rule);
                    cut_nodes.push(nodes);
                }
                CellKind::Excluded => unreachable!("excluded cells carry no element"),
            }
        }
        Ok(MeshQuadrature {
            n,
            face_quads,
            frames,
            volumes,
            cut_nodes,
        })
    }

    pub fn element_volume(&self, elem: usize) -> f64 {
        self.volumes[elem].volume()
    }

    pub fn total_volume(&self) -> f64 {
        self.volumes.iter().map(|v| v.volume()).sum()
    }

    /// Worst cut-element weight conditioning number.
    pub fn worst_kappa(&self) -> f64 {
        self.volumes
            .iter()
            .map(|v| v.kappa)
            .fold(1.0, f64::max)
    }
}
