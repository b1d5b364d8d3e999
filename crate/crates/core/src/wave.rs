//! Semi-discrete DG right-hand side for the acoustic wave equation
//! `p_t / c^2 = -div u + f`, `u_t = -grad p`, in the penalized
//! skew-symmetric split form (energy stable under inexact quadrature) and
//! the standard form (for cross-validation on exact-quadrature meshes).
//!
//! Element volume terms use the skew kernels `0.5 (D^T M - M D)`; surface
//! terms couple interior and exterior traces at the shared face quadrature
//! with upwind-style jump penalties `tau_p`, `tau_u`. Boundary conditions
//! enter as mirror exterior states.

use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::linalg::Mat;
#[allow(unused_imports)] // test builds link std, whose inherent methods shadow this shim
use crate::math::Libm;
use crate::mesh::{BoundaryTag, CutMesh, DomainSide, FaceGeometry};
use crate::operators::{ElementOps, MeshOps};
use crate::quadrature::MeshQuadrature;

#[derive(Debug, Clone, PartialEq)]
pub enum WaveError {
    UnknownBoundaryTag(String),
    NonFiniteState,
}

/// Mesh, quadrature, and operators bundled behind shared handles.
pub struct Discretization {
    pub mesh: Arc<CutMesh>,
    pub quad: Arc<MeshQuadrature>,
    pub ops: Arc<MeshOps>,
}

impl Discretization {
    pub fn build(mesh: CutMesh, n: usize) -> Result<Discretization, BuildError> {
        let quad = MeshQuadrature::build(&mesh, n).map_err(BuildError::Quadrature)?;
        let ops = MeshOps::build(&mesh, &quad).map_err(BuildError::Operator)?;
        Ok(Discretization {
            mesh: Arc::new(mesh),
            quad: Arc::new(quad),
            ops: Arc::new(ops),
        })
    }

    pub fn dof(&self) -> usize {
        self.ops.layout.total
    }
}

#[derive(Debug)]
pub enum BuildError {
    Quadrature(crate::quadrature::QuadratureError),
    Operator(crate::operators::OperatorError),
}

impl fmt::Display for BuildError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BuildError::Quadrature(e) => write!(f, "quadrature: {e}"),
            BuildError::Operator(e) => write!(f, "operators: {e}"),
        }
    }
}

impl core::error::Error for BuildError {}

impl fmt::Display for WaveError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WaveError::UnknownBoundaryTag(t) => write!(f, "no boundary condition bound to {t}"),
            WaveError::NonFiniteState => write!(f, "state contains non-finite values"),
        }
    }
}

impl core::error::Error for WaveError {}

/// Exterior-state rules: all conditions are imposed by constructing a
/// mirror trace `(p+, u+)` from the interior trace.
#[derive(Clone)]
pub enum BcKind {
    /// Reflecting wall: `u+ = u - 2 (u.n) n`, `p+ = p`.
    Wall,
    /// Pressure-release: `p+ = -p`, `u+ = u`.
    ZeroPressure,
    /// Zeroth-order extrapolation: `p+ = p`, `u+ = u`.
    Extrapolation,
    /// Dirichlet pressure `p_set` active for `t <= until`, pressure release
    /// afterwards; velocity extrapolated.
    PressurePulse { p_set: f64, until: f64 },
    /// Exterior trace from a known field `(x, y, t) -> (p, ux, uy)`.
    Exact(Arc<dyn Fn(f64, f64, f64) -> (f64, f64, f64) + Send + Sync>),
}

impl fmt::Debug for BcKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BcKind::Wall => write!(f, "Wall"),
            BcKind::ZeroPressure => write!(f, "ZeroPressure"),
            BcKind::Extrapolation => write!(f, "Extrapolation"),
            BcKind::PressurePulse { p_set, until } => {
                write!(f, "PressurePulse(p={p_set}, until={until})")
            }
            BcKind::Exact(_) => write!(f, "Exact(..)"),
        }
    }
}

impl BcKind {
    /// Exterior trace from the interior trace at position `x`, outward
    /// normal `n`, time `t`.
    pub fn exterior(
        &self,
        p: f64,
        u: [f64; 2],
        n: [f64; 2],
        x: [f64; 2],
        t: f64,
    ) -> (f64, [f64; 2]) {
        match self {
            BcKind::Wall => {
                let un = u[0] * n[0] + u[1] * n[1];
                (p, [u[0] - 2.0 * un * n[0], u[1] - 2.0 * un * n[1]])
            }
            BcKind::ZeroPressure => (-p, u),
            BcKind::Extrapolation => (p, u),
            BcKind::PressurePulse { p_set, until } => {
                if t <= *until {
                    (2.0 * p_set - p, u)
                } else {
                    (-p, u)
                }
            }
            BcKind::Exact(f) => {
                let (pe, ux, uy) = f(x[0], x[1], t);
                (pe, [ux, uy])
            }
        }
    }
}

/// Boundary condition map: one rule per domain side, one per embedded curve.
#[derive(Clone, Debug)]
pub struct BcMap {
    pub left: BcKind,
    pub right: BcKind,
    pub bottom: BcKind,
    pub top: BcKind,
    pub embedded: Vec<BcKind>,
}

impl BcMap {
    pub fn uniform(kind: BcKind, n_curves: usize) -> BcMap {
        BcMap {
            left: kind.clone(),
            right: kind.clone(),
            bottom: kind.clone(),
            top: kind.clone(),
            embedded: vec![kind; n_curves],
        }
    }

    pub fn rule(&self, tag: BoundaryTag) -> Result<&BcKind, WaveError> {
        match tag {
            BoundaryTag::Domain(DomainSide::Left) => Ok(&self.left),
            BoundaryTag::Domain(DomainSide::Right) => Ok(&self.right),
            BoundaryTag::Domain(DomainSide::Bottom) => Ok(&self.bottom),
            BoundaryTag::Domain(DomainSide::Top) => Ok(&self.top),
            BoundaryTag::Embedded(c) => self
                .embedded
                .get(c)
                .ok_or_else(|| WaveError::UnknownBoundaryTag(alloc::format!("curve {c}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Formulation {
    /// Penalized skew-symmetric split form; energy stable for any quadrature.
    SkewSymmetric,
    /// Standard DG form; equivalent on exact-quadrature (Cartesian) meshes.
    Standard,
}

/// One side of a face: how to evaluate this element's nodal values at the
/// face quadrature points. Full sides of Cartesian elements share matrices.
enum SideEval {
    Shared(usize),
    Custom(Mat),
}

struct FaceData {
    own: SideEval,
    nb: Option<SideEval>,
}

/// Time-independent forcing hook for the pressure equation.
pub type ForcingFn = Arc<dyn Fn(f64, f64, f64) -> f64 + Send + Sync>;

pub struct WaveOperator {
    pub mesh: Arc<CutMesh>,
    pub quad: Arc<MeshQuadrature>,
    pub ops: Arc<MeshOps>,
    pub bcs: BcMap,
    pub tau_p: f64,
    pub tau_u: f64,
    pub c: f64,
    pub form: Formulation,
    pub forcing: Option<ForcingFn>,
    faces: Vec<FaceData>,
    shared_evals: Vec<Mat>,
}

/// Reusable buffers for one RHS evaluation thread.
pub struct Workspace {
    residual: Vec<f64>,
    tr_own: [Vec<f64>; 3],
    tr_ext: [Vec<f64>; 3],
    flux: [Vec<f64>; 3],
}

impl WaveOperator {
    pub fn new(
        mesh: Arc<CutMesh>,
        quad: Arc<MeshQuadrature>,
        ops: Arc<MeshOps>,
        bcs: BcMap,
        tau_p: f64,
        tau_u: f64,
        c: f64,
        form: Formulation,
        forcing: Option<ForcingFn>,
    ) -> Self {
        let mut shared_evals: Vec<Mat> = Vec::new();
        // Shared matrices keyed by (side 0..4 = B,R,T,L, reversed 0..2).
        let mut shared_index = [[usize::MAX; 2]; 4];
        let mut get_shared = |side: usize,
                              reversed: bool,
                              points: &[[f64; 2]],
                              cell_lo: [f64; 2],
                              cart: &crate::operators::CartesianOps|
         -> usize {
            let r = reversed as usize;
            if shared_index[side][r] == usize::MAX {
                let m = cart.eval_matrix(cell_lo, points);
                shared_evals.push(m);
                shared_index[side][r] = shared_evals.len() - 1;
            }
            shared_index[side][r]
        };

        let mut faces = Vec::with_capacity(mesh.faces.len());
        for (fi, face) in mesh.faces.iter().enumerate() {
            let fq = &quad.face_quads[fi];
            let own = side_eval(
                &mesh,
                &ops,
                face.owner,
                &face.geom,
                &fq.points,
                [0.0, 0.0],
                &mut get_shared,
            );
            let nb = face.neighbor.map(|nbe| {
                side_eval(
                    &mesh,
                    &ops,
                    nbe,
                    &face.geom,
                    &fq.points,
                    face.neighbor_shift,
                    &mut get_shared,
                )
            });
            faces.push(FaceData { own, nb });
        }
        WaveOperator {
            mesh,
            quad,
            ops,
            bcs,
            tau_p,
            tau_u,
            c,
            form,
            forcing,
            faces,
            shared_evals,
        }
    }

    pub fn dof(&self) -> usize {
        self.ops.layout.total
    }

    pub fn workspace(&self) -> Workspace {
        let nq_max = self
            .quad
            .face_quads
            .iter()
            .map(|q| q.len())
            .max()
            .unwrap_or(0);
        Workspace {
            residual: vec![0.0; self.dof()],
            tr_own: [vec![0.0; nq_max], vec![0.0; nq_max], vec![0.0; nq_max]],
            tr_ext: [vec![0.0; nq_max], vec![0.0; nq_max], vec![0.0; nq_max]],
            flux: [vec![0.0; nq_max], vec![0.0; nq_max], vec![0.0; nq_max]],
        }
    }

    fn eval_side<'a>(&'a self, side: &'a SideEval) -> &'a Mat {
        match side {
            SideEval::Shared(i) => &self.shared_evals[*i],
            SideEval::Custom(m) => m,
        }
    }

    /// Semi-discrete right-hand side: `out = d(state)/dt` at time `t`.
    pub fn apply(&self, t: f64, state: &[f64], out: &mut [f64], ws: &mut Workspace) {
        assert_eq!(state.len(), self.dof());
        assert_eq!(out.len(), self.dof());
        let layout = &self.ops.layout;
        let Workspace {
            residual: r,
            tr_own,
            tr_ext,
            flux,
        } = ws;
        r.iter_mut().for_each(|v| *v = 0.0);

        // Volume terms.
        for ei in 0..self.mesh.n_elements() {
            let p = &state[layout.field(ei, 0)];
            let ux = &state[layout.field(ei, 1)];
            let uy = &state[layout.field(ei, 2)];
            let op = &self.ops.ops[ei];
            match self.form {
                Formulation::SkewSymmetric => {
                    let (kx, ky) = (op.kx(), op.ky());
                    split_residual_3(r, layout, ei, |rp, rux, ruy| {
                        kx.matvec_acc(1.0, ux, rp);
                        ky.matvec_acc(1.0, uy, rp);
                        kx.matvec_acc(1.0, p, rux);
                        ky.matvec_acc(1.0, p, ruy);
                    });
                }
                Formulation::Standard => {
                    let m = op.mass();
                    let (dx, dy) = (op.dx_mat(), op.dy_mat());
                    let n = layout.node_counts[ei];
                    let mut tmp = vec![0.0; n];
                    split_residual_3(r, layout, ei, |rp, rux, ruy| {
                        tmp.iter_mut().for_each(|v| *v = 0.0);
                        dx.matvec_acc(1.0, ux, &mut tmp);
                        dy.matvec_acc(1.0, uy, &mut tmp);
                        m.matvec_acc(-1.0, &tmp, rp);
                        tmp.iter_mut().for_each(|v| *v = 0.0);
                        dx.matvec_acc(1.0, p, &mut tmp);
                        m.matvec_acc(-1.0, &tmp, rux);
                        tmp.iter_mut().for_each(|v| *v = 0.0);
                        dy.matvec_acc(1.0, p, &mut tmp);
                        m.matvec_acc(-1.0, &tmp, ruy);
                    });
                }
            }
        }

        // Surface terms, one pass per global face.
        for (fi, face) in self.mesh.faces.iter().enumerate() {
            let fq = &self.quad.face_quads[fi];
            let nq = fq.len();
            let fd = &self.faces[fi];
            let e_own = self.eval_side(&fd.own);
            let own = face.owner;
            for c in 0..3 {
                e_own.matvec_into(&state[layout.field(own, c)], &mut tr_own[c][..nq]);
            }
            match (face.neighbor, &fd.nb) {
                (Some(nbe), Some(nb_side)) => {
                    let e_nb = self.eval_side(nb_side);
                    for c in 0..3 {
                        e_nb.matvec_into(&state[layout.field(nbe, c)], &mut tr_ext[c][..nq]);
                    }
                }
                _ => {
                    // Boundary: exterior trace from the bound rule.
                    let rule = self
                        .bcs
                        .rule(face.tag.expect("boundary face carries a tag"))
                        .expect("tag bound");
                    for q in 0..nq {
                        let n = fq.normals[q];
                        let x = fq.points[q];
                        let (pe, ue) = rule.exterior(
                            tr_own[0][q],
                            [tr_own[1][q], tr_own[2][q]],
                            n,
                            x,
                            t,
                        );
                        tr_ext[0][q] = pe;
                        tr_ext[1][q] = ue[0];
                        tr_ext[2][q] = ue[1];
                    }
                }
            }

            // Owner side accumulation.
            compute_flux(self.form, fq, 1.0, tr_own, tr_ext, self.tau_p, self.tau_u, flux);
            for c in 0..3 {
                e_own.tr_matvec_acc(1.0, &flux[c][..nq], &mut r[layout.field(own, c)]);
            }
            // Neighbor side: swap roles, flip normals.
            if let (Some(nbe), Some(nb_side)) = (face.neighbor, &fd.nb) {
                let e_nb = self.eval_side(nb_side);
                compute_flux(self.form, fq, -1.0, tr_ext, tr_own, self.tau_p, self.tau_u, flux);
                for c in 0..3 {
                    e_nb.tr_matvec_acc(1.0, &flux[c][..nq], &mut r[layout.field(nbe, c)]);
                }
            }
        }

        // Mass solve and forcing.
        out.iter_mut().for_each(|v| *v = 0.0);
        let c2 = self.c * self.c;
        for ei in 0..self.mesh.n_elements() {
            let minv = self.ops.ops[ei].mass_inv();
            {
                let rp = &r[layout.field(ei, 0)];
                let out_p = &mut out[layout.field(ei, 0)];
                minv.matvec_acc(c2, rp, out_p);
            }
            if let Some(f) = &self.forcing {
                let out_p = &mut out[layout.field(ei, 0)];
                for (o, xy) in out_p.iter_mut().zip(&self.ops.node_positions[ei]) {
                    *o += f(xy[0], xy[1], t);
                }
            }
            {
                let rux = &r[layout.field(ei, 1)];
                let out_ux = &mut out[layout.field(ei, 1)];
                minv.matvec_acc(1.0, rux, out_ux);
            }
            {
                let ruy = &r[layout.field(ei, 2)];
                let out_uy = &mut out[layout.field(ei, 2)];
                minv.matvec_acc(1.0, ruy, out_uy);
            }
        }
    }

}

/// Weighted flux values at the face quadrature points for one side; the
/// stored normals belong to the owner, `normal_sign = -1` flips them for
/// the neighbor.
#[allow(clippy::too_many_arguments)]
fn compute_flux(
    form: Formulation,
    fq: &crate::quadrature::FaceQuad,
    normal_sign: f64,
    trace_own: &[Vec<f64>; 3],
    trace_ext: &[Vec<f64>; 3],
    tau_p: f64,
    tau_u: f64,
    flux: &mut [Vec<f64>; 3],
) {
    let nq = fq.len();
    match form {
        Formulation::SkewSymmetric => {
            for q in 0..nq {
                let w = 0.5 * fq.weights[q];
                let nx = normal_sign * fq.normals[q][0];
                let ny = normal_sign * fq.normals[q][1];
                let (p, ux, uy) = (trace_own[0][q], trace_own[1][q], trace_own[2][q]);
                let (pe, uxe, uye) = (trace_ext[0][q], trace_ext[1][q], trace_ext[2][q]);
                flux[0][q] = w * (-(uxe * nx + uye * ny) + tau_p * (pe - p));
                flux[1][q] = w * (-pe * nx + tau_u * (uxe - ux));
                flux[2][q] = w * (-pe * ny + tau_u * (uye - uy));
            }
        }
        Formulation::Standard => {
            for q in 0..nq {
                let w = 0.5 * fq.weights[q];
                let nx = normal_sign * fq.normals[q][0];
                let ny = normal_sign * fq.normals[q][1];
                let (p, ux, uy) = (trace_own[0][q], trace_own[1][q], trace_own[2][q]);
                let (pe, uxe, uye) = (trace_ext[0][q], trace_ext[1][q], trace_ext[2][q]);
                flux[0][q] = w * (-((uxe - ux) * nx + (uye - uy) * ny) + tau_p * (pe - p));
                flux[1][q] = w * (-(pe - p) * nx + tau_u * (uxe - ux));
                flux[2][q] = w * (-(pe - p) * ny + tau_u * (uye - uy));
            }
        }
    }
}

fn side_eval(
    mesh: &CutMesh,
    ops: &MeshOps,
    elem: usize,
    geom: &FaceGeometry,
    points: &[[f64; 2]],
    shift: [f64; 2],
    get_shared: &mut impl FnMut(usize, bool, &[[f64; 2]], [f64; 2], &crate::operators::CartesianOps) -> usize,
) -> SideEval {
    let shifted: Vec<[f64; 2]>;
    let pts: &[[f64; 2]] = if shift == [0.0, 0.0] {
        points
    } else {
        shifted = points.iter().map(|p| [p[0] + shift[0], p[1] + shift[1]]).collect();
        &shifted
    };
    if let ElementOps::Cartesian(cart) = &ops.ops[elem] {
        if let FaceGeometry::Straight { a, b } = geom {
            let (lo, hi) = mesh.cell_box(mesh.elements[elem].cell);
            let tol = 1e-9 * (hi[0] - lo[0]).max(hi[1] - lo[1]);
            let a = [a[0] + shift[0], a[1] + shift[1]];
            let b = [b[0] + shift[0], b[1] + shift[1]];
            let full = |p: [f64; 2], q: [f64; 2]| {
                (p[0] - q[0]).abs() <= tol && (p[1] - q[1]).abs() <= tol
            };
            let corners = [
                [lo[0], lo[1]],
                [hi[0], lo[1]],
                [hi[0], hi[1]],
                [lo[0], hi[1]],
            ];
            // side: 0 bottom, 1 right, 2 top, 3 left; canonical traversal is
            // the element's own CCW order.
            let sides = [
                (corners[0], corners[1]),
                (corners[1], corners[2]),
                (corners[2], corners[3]),
                (corners[3], corners[0]),
            ];
            for (si, (ca, cb)) in sides.iter().enumerate() {
                if full(a, *ca) && full(b, *cb) {
                    // Points relative to this cell repeat across the mesh.
                    let rel: Vec<[f64; 2]> = pts.iter().map(|p| *p).collect();
                    return SideEval::Shared(get_shared(si, false, &rel_to_cell(&rel, lo), [0.0, 0.0], cart));
                }
                if full(a, *cb) && full(b, *ca) {
                    let rel: Vec<[f64; 2]> = pts.iter().map(|p| *p).collect();
                    return SideEval::Shared(get_shared(si, true, &rel_to_cell(&rel, lo), [0.0, 0.0], cart));
                }
            }
        }
    }
    SideEval::Custom(ops.eval_matrix(mesh, elem, pts))
}

fn rel_to_cell(points: &[[f64; 2]], lo: [f64; 2]) -> Vec<[f64; 2]> {
    points.iter().map(|p| [p[0] - lo[0], p[1] - lo[1]]).collect()
}

fn split_residual_3(
    r: &mut [f64],
    layout: &crate::operators::Layout,
    ei: usize,
    f: impl FnOnce(&mut [f64], &mut [f64], &mut [f64]),
) {
    let range = layout.block(ei);
    let n = layout.node_counts[ei];
    let block = &mut r[range];
    let (rp, rest) = block.split_at_mut(n);
    let (rux, ruy) = rest.split_at_mut(n);
    f(rp, rux, ruy);
}

/// Discrete L2 energy `sum_e p^T M p / c^2 + ux^T M ux + uy^T M uy`.
pub fn discrete_energy(state: &[f64], ops: &MeshOps, c: f64) -> f64 {
    let layout = &ops.layout;
    let mut total = 0.0;
    for ei in 0..ops.ops.len() {
        let m = ops.ops[ei].mass();
        let p = &state[layout.field(ei, 0)];
        let ux = &state[layout.field(ei, 1)];
        let uy = &state[layout.field(ei, 2)];
        let mp = m.matvec(p);
        let mux = m.matvec(ux);
        let muy = m.matvec(uy);
        let pe: f64 = p.iter().zip(&mp).map(|(a, b)| a * b).sum();
        let uxe: f64 = ux.iter().zip(&mux).map(|(a, b)| a * b).sum();
        let uye: f64 = uy.iter().zip(&muy).map(|(a, b)| a * b).sum();
        total += pe / (c * c) + uxe + uye;
    }
    total
}

/// Nodal projection (collocation) of a field onto the mesh.
pub fn project_fields(
    ops: &MeshOps,
    mut f: impl FnMut(f64, f64) -> (f64, f64, f64),
) -> Vec<f64> {
    let layout = &ops.layout;
    let mut state = vec![0.0; layout.total];
    for ei in 0..ops.ops.len() {
        let nodes = &ops.node_positions[ei];
        let n = layout.node_counts[ei];
        let block = layout.offsets[ei];
        for (k, xy) in nodes.iter().enumerate() {
            let (p, ux, uy) = f(xy[0], xy[1]);
            state[block + k] = p;
            state[block + n + k] = ux;
            state[block + 2 * n + k] = uy;
        }
    }
    state
}

/// L2 norm of the difference between the discrete state and a reference
/// field, via the element volume rules; also returns the pointwise maximum
/// over the quadrature points.
pub fn field_error(
    state: &[f64],
    ops: &MeshOps,
    quad: &MeshQuadrature,
    mut exact: impl FnMut(f64, f64) -> (f64, f64, f64),
) -> (f64, f64) {
    let layout = &ops.layout;
    let mut l2sq = 0.0;
    let mut linf: f64 = 0.0;
    for ei in 0..ops.ops.len() {
        let rule = &quad.volumes[ei];
        let interp = ops.ops[ei].interp_quad();
        let p = interp.matvec(&state[layout.field(ei, 0)]);
        let ux = interp.matvec(&state[layout.field(ei, 1)]);
        let uy = interp.matvec(&state[layout.field(ei, 2)]);
        for (q, xy) in rule.points.iter().enumerate() {
            let (pe, uxe, uye) = exact(xy[0], xy[1]);
            let dp = p[q] - pe;
            let dux = ux[q] - uxe;
            let duy = uy[q] - uye;
            let err2 = dp * dp + dux * dux + duy * duy;
            l2sq += rule.weights[q] * err2;
            linf = linf.max(err2.sqrt());
        }
    }
    (l2sq.max(0.0).sqrt(), linf)
}

/// Whether every entry is finite (NaN poisoning check).
pub fn state_is_finite(state: &[f64]) -> bool {
    state.iter().all(|v| v.is_finite())
}

/// Manufactured-solution fields: prescribed pressure
/// `p = cos(2 pi t) sin(pi x) sin(pi y)`, velocity from integrating the
/// momentum equation with `u(x, y, 0) = 0`, and the matching source term.
pub mod mms {
    #[allow(unused_imports)] // test builds link std, shadowing the shim
    use super::Libm;
    use core::f64::consts::PI;

    pub fn pressure(x: f64, y: f64, t: f64) -> f64 {
        (2.0 * PI * t).cos() * (PI * x).sin() * (PI * y).sin()
    }

    pub fn velocity(x: f64, y: f64, t: f64) -> [f64; 2] {
        let s = (2.0 * PI * t).sin();
        [
            -0.5 * s * (PI * x).cos() * (PI * y).sin(),
            -0.5 * s * (PI * x).sin() * (PI * y).cos(),
        ]
    }

    pub fn forcing(x: f64, y: f64, t: f64) -> f64 {
        -PI * (2.0 * PI * t).sin() * (PI * x).sin() * (PI * y).sin()
    }

    /// Analytic time derivative of the full state, for residual tests.
    pub fn time_derivative(x: f64, y: f64, t: f64) -> (f64, f64, f64) {
        let dp = -2.0 * PI * (2.0 * PI * t).sin() * (PI * x).sin() * (PI * y).sin();
        let c = (2.0 * PI * t).cos();
        let dux = -PI * c * (PI * x).cos() * (PI * y).sin();
        let duy = -PI * c * (PI * x).sin() * (PI * y).cos();
        (dp, dux, duy)
    }
}
