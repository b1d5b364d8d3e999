//! Element-local Galerkin operators: tensor Lagrange bases on Cartesian
//! elements, moment-fitted nodal bases on cut elements, mass and derivative
//! matrices, and the skew volume kernels used by the split-form scheme.

use alloc::boxed::Box;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::gauss::gauss_lobatto_nodes;
use crate::linalg::{cond2, sym_eigenvalues, Lu, Mat};
#[allow(unused_imports)] // test builds link std, whose inherent methods shadow this shim
use crate::math::Libm;
use crate::mesh::{CellKind, CutMesh};
use crate::poly::{barycentric_weights, lagrange_diff_matrix, lagrange_values, Monomials2d};
use crate::quadrature::{MappedFrame, MeshQuadrature, VolumeRule};

#[derive(Debug, Clone, PartialEq)]
pub enum OperatorError {
    /// Orthogonalization broke down (volume rule not exact on products).
    DegenerateBasis { element: usize },
    SingularVandermonde { element: usize },
}

impl fmt::Display for OperatorError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OperatorError::DegenerateBasis { element } => {
                write!(f, "element {element}: quadrature inner product degenerate on basis")
            }
            OperatorError::SingularVandermonde { element } => {
                write!(f, "element {element}: nodal Vandermonde is singular")
            }
        }
    }
}

impl core::error::Error for OperatorError {}

/// Shared operators for all Cartesian elements of a uniform mesh (they are
/// translates of one another). Node coordinates are stored as offsets from
/// the cell's lower-left corner.
pub struct CartesianOps {
    pub n: usize,
    pub n_nodes: usize,
    pub node_offsets: Vec<[f64; 2]>,
    pub mass: Mat,
    pub mass_inv: Mat,
    pub dx_mat: Mat,
    pub dy_mat: Mat,
    /// Skew volume kernels `0.5 (D^T M - M D)` per direction.
    pub kx: Mat,
    pub ky: Mat,
    /// Interpolation from nodes to the element volume quadrature points.
    pub interp_quad: Mat,
    nodes1d_x: Vec<f64>,
    nodes1d_y: Vec<f64>,
    bary_x: Vec<f64>,
    bary_y: Vec<f64>,
    cell_size: [f64; 2],
}

impl CartesianOps {
    /// Operators on a `dx` by `dy` cell at degree `n`: Gauss-Lobatto tensor
    /// Lagrange nodes, exact tensor-Gauss mass and derivative matrices.
    pub fn build(dx: f64, dy: f64, n: usize) -> CartesianOps {
        let n1 = n + 1;
        let ref_nodes = gauss_lobatto_nodes(n1);
        let nodes1d_x: Vec<f64> = ref_nodes.iter().map(|t| 0.5 * (t + 1.0) * dx).collect();
        let nodes1d_y: Vec<f64> = ref_nodes.iter().map(|t| 0.5 * (t + 1.0) * dy).collect();
        let bary_x = barycentric_weights(&nodes1d_x);
        let bary_y = barycentric_weights(&nodes1d_y);
        let n_nodes = n1 * n1;
        let mut node_offsets = Vec::with_capacity(n_nodes);
        for j in 0..n1 {
            for i in 0..n1 {
                node_offsets.push([nodes1d_x[i], nodes1d_y[j]]);
            }
        }
        // Exact 1D mass by (n+1)-point Gauss (degree 2n integrand).
        let rule = crate::quadrature::cartesian_volume_rule([0.0, 0.0], [dx, dy], n);
        let interp_quad = eval_tensor_matrix(
            &nodes1d_x,
            &bary_x,
            &nodes1d_y,
            &bary_y,
            &rule.points,
            [0.0, 0.0],
        );
        let mut mass = Mat::zeros(n_nodes, n_nodes);
        for (q, w) in rule.weights.iter().enumerate() {
            for a in 0..n_nodes {
                let va = interp_quad[(q, a)];
                if va == 0.0 {
                    continue;
                }
                for b in 0..n_nodes {
                    mass[(a, b)] += w * va * interp_quad[(q, b)];
                }
            }
        }
        let d1x = lagrange_diff_matrix(&nodes1d_x, &bary_x);
        let d1y = lagrange_diff_matrix(&nodes1d_y, &bary_y);
        let mut dx_mat = Mat::zeros(n_nodes, n_nodes);
        let mut dy_mat = Mat::zeros(n_nodes, n_nodes);
        for j in 0..n1 {
            for i in 0..n1 {
                let row = j * n1 + i;
                for k in 0..n1 {
                    dx_mat[(row, j * n1 + k)] = d1x[(i, k)];
                    dy_mat[(row, k * n1 + i)] = d1y[(j, k)];
                }
            }
        }
        let mass_inv = Lu::factor(mass.clone()).expect("Cartesian mass is SPD").inverse();
        let kx = skew_kernel(&dx_mat, &mass);
        let ky = skew_kernel(&dy_mat, &mass);
        CartesianOps {
            n,
            n_nodes,
            node_offsets,
            mass,
            mass_inv,
            dx_mat,
            dy_mat,
            kx,
            ky,
            interp_quad,
            nodes1d_x,
            nodes1d_y,
            bary_x,
            bary_y,
            cell_size: [dx, dy],
        }
    }

    /// Interpolation matrix from nodal values to arbitrary physical points,
    /// given the element's lower-left corner.
    pub fn eval_matrix(&self, cell_lo: [f64; 2], points: &[[f64; 2]]) -> Mat {
        eval_tensor_matrix(
            &self.nodes1d_x,
            &self.bary_x,
            &self.nodes1d_y,
            &self.bary_y,
            points,
            cell_lo,
        )
    }

    pub fn cell_size(&self) -> [f64; 2] {
        self.cell_size
    }
}

fn eval_tensor_matrix(
    nodes1d_x: &[f64],
    bary_x: &[f64],
    nodes1d_y: &[f64],
    bary_y: &[f64],
    points: &[[f64; 2]],
    cell_lo: [f64; 2],
) -> Mat {
    let n1 = nodes1d_x.len();
    let mut out = Mat::zeros(points.len(), n1 * n1);
    let mut lx = vec![0.0; n1];
    let mut ly = vec![0.0; n1];
    for (q, p) in points.iter().enumerate() {
        lagrange_values(nodes1d_x, bary_x, p[0] - cell_lo[0], &mut lx);
        lagrange_values(nodes1d_y, bary_y, p[1] - cell_lo[1], &mut ly);
        let row = out.row_mut(q);
        for j in 0..n1 {
            for i in 0..n1 {
                row[j * n1 + i] = lx[i] * ly[j];
            }
        }
    }
    out
}

fn skew_kernel(d: &Mat, m: &Mat) -> Mat {
    // 0.5 (D^T M - M D)
    let dtm = d.transpose().matmul(m);
    let md = m.matmul(d);
    let mut k = dtm.sub(&md);
    k.scale(0.5);
    k
}

/// Per-element operators on a cut element: a graded orthonormal modal basis
/// under the element volume rule, converted to the nodal Lagrange basis at
/// the approximate Fekete interpolation nodes.
pub struct CutOps {
    pub n: usize,
    pub n_nodes: usize,
    pub nodes: Vec<[f64; 2]>,
    pub mass: Mat,
    pub mass_inv: Mat,
    pub dx_mat: Mat,
    pub dy_mat: Mat,
    pub kx: Mat,
    pub ky: Mat,
    pub interp_quad: Mat,
    /// Mass condition number estimate; elements beyond 1e12 are flagged for
    /// mandatory stabilization coverage.
    pub mass_cond: f64,
    pub ill_conditioned: bool,
    frame: MappedFrame,
    monomials: Monomials2d,
    /// Modal basis in monomial coefficients (column k = modal_k).
    coeff: Mat,
    /// Nodal values -> modal coefficients.
    vn_inv: Mat,
}

impl CutOps {
    pub fn build(
        element: usize,
        frame: &MappedFrame,
        rule: &VolumeRule,
        nodes: &[[f64; 2]],
        n: usize,
    ) -> Result<CutOps, OperatorError> {
        let monomials = Monomials2d::new(n);
        let np = monomials.len();
        assert_eq!(nodes.len(), np);
        let nq = rule.len();

        // Monomial values at the volume quadrature points (mapped frame).
        let mut vmono = Mat::zeros(nq, np);
        let mut row = vec![0.0; np];
        for (q, p) in rule.points.iter().enumerate() {
            let m = frame.map(*p);
            monomials.eval(m[0], m[1], &mut row);
            vmono.row_mut(q).copy_from_slice(&row);
        }

        // Gram-Schmidt of the monomials under the volume rule, twice for
        // re-orthogonalization; the rule is exact on products of basis
        // functions, so the quadratic form is the L2 inner product.
        let mut coeff = Mat::identity(np);
        let mut vq = vmono.clone(); // values of the evolving basis at quad points
        for k in 0..np {
            for _pass in 0..2 {
                for j in 0..k {
                    let mut proj = 0.0;
                    for q in 0..nq {
                        proj += rule.weights[q] * vq[(q, k)] * vq[(q, j)];
                    }
                    for q in 0..nq {
                        let vqj = vq[(q, j)];
                        vq[(q, k)] -= proj * vqj;
                    }
                    for r in 0..np {
                        let cj = coeff[(r, j)];
                        coeff[(r, k)] -= proj * cj;
                    }
                }
            }
            let mut norm2 = 0.0;
            for q in 0..nq {
                norm2 += rule.weights[q] * vq[(q, k)] * vq[(q, k)];
            }
            if !(norm2 > 0.0) {
                return Err(OperatorError::DegenerateBasis { element });
            }
            let inv = 1.0 / norm2.sqrt();
            for q in 0..nq {
                vq[(q, k)] *= inv;
            }
            for r in 0..np {
                coeff[(r, k)] *= inv;
            }
        }

        // Generalized Vandermonde at the interpolation nodes.
        let mut vn = Mat::zeros(np, np);
        for (i, p) in nodes.iter().enumerate() {
            let m = frame.map(*p);
            monomials.eval(m[0], m[1], &mut row);
            for j in 0..np {
                let mut acc = 0.0;
                for r in 0..np {
                    acc += row[r] * coeff[(r, j)];
                }
                vn[(i, j)] = acc;
            }
        }
        let vn_lu =
            Lu::factor(vn.clone()).map_err(|_| OperatorError::SingularVandermonde { element })?;
        let vn_inv = vn_lu.inverse();

        // Modal mass under the rule (near identity by construction).
        let mut m_modal = Mat::zeros(np, np);
        for q in 0..nq {
            let w = rule.weights[q];
            for a in 0..np {
                let va = vq[(q, a)];
                if va == 0.0 {
                    continue;
                }
                for b in 0..np {
                    m_modal[(a, b)] += w * va * vq[(q, b)];
                }
            }
        }
        let mass = vn_inv.transpose().matmul(&m_modal).matmul(&vn_inv);
        let mass_cond = {
            let evs = sym_eigenvalues(&mass);
            let max = evs.iter().fold(0.0_f64, |m, v| m.max(*v));
            let min = evs.iter().fold(f64::INFINITY, |m, v| m.min(*v));
            if min <= 0.0 {
                f64::INFINITY
            } else {
                max / min
            }
        };
        let ill_conditioned = !(mass_cond <= 1e12);
        let mass_inv = Lu::factor(mass.clone())
            .map_err(|_| OperatorError::SingularVandermonde { element })?
            .inverse();

        // Modal derivative maps (exact in coefficient space), conjugated to
        // nodal form; physical derivative picks up 1/scale from the frame.
        let dmono_x = monomials.dx_map();
        let dmono_y = monomials.dy_map();
        let coeff_lu =
            Lu::factor(coeff.clone()).map_err(|_| OperatorError::DegenerateBasis { element })?;
        let amod_x = coeff_lu.solve_mat(&dmono_x.matmul(&coeff));
        let amod_y = coeff_lu.solve_mat(&dmono_y.matmul(&coeff));
        let mut dx_mat = vn.matmul(&amod_x).matmul(&vn_inv);
        dx_mat.scale(1.0 / frame.scale[0]);
        let mut dy_mat = vn.matmul(&amod_y).matmul(&vn_inv);
        dy_mat.scale(1.0 / frame.scale[1]);

        let kx = skew_kernel(&dx_mat, &mass);
        let ky = skew_kernel(&dy_mat, &mass);
        let interp_quad = vq.matmul(&vn_inv);

        Ok(CutOps {
            n,
            n_nodes: np,
            nodes: nodes.to_vec(),
            mass,
            mass_inv,
            dx_mat,
            dy_mat,
            kx,
            ky,
            interp_quad,
            mass_cond,
            ill_conditioned,
            frame: *frame,
            monomials,
            coeff,
            vn_inv,
        })
    }

    /// Interpolation matrix from nodal values to arbitrary physical points.
    pub fn eval_matrix(&self, points: &[[f64; 2]]) -> Mat {
        let np = self.n_nodes;
        let mut vals = Mat::zeros(points.len(), np);
        let mut row = vec![0.0; np];
        for (q, p) in points.iter().enumerate() {
            let m = self.frame.map(*p);
            self.monomials.eval(m[0], m[1], &mut row);
            for j in 0..np {
                let mut acc = 0.0;
                for r in 0..np {
                    acc += row[r] * self.coeff[(r, j)];
                }
                vals[(q, j)] = acc;
            }
        }
        vals.matmul(&self.vn_inv)
    }
}

/// Per-element operator handle; Cartesian elements share one scaled set.
pub enum ElementOps {
    Cartesian(Arc<CartesianOps>),
    Cut(Box<CutOps>),
}

impl ElementOps {
    pub fn n_nodes(&self) -> usize {
        match self {
            ElementOps::Cartesian(c) => c.n_nodes,
            ElementOps::Cut(c) => c.n_nodes,
        }
    }

    pub fn mass(&self) -> &Mat {
        match self {
            ElementOps::Cartesian(c) => &c.mass,
            ElementOps::Cut(c) => &c.mass,
        }
    }

    pub fn mass_inv(&self) -> &Mat {
        match self {
            ElementOps::Cartesian(c) => &c.mass_inv,
            ElementOps::Cut(c) => &c.mass_inv,
        }
    }

    pub fn dx_mat(&self) -> &Mat {
        match self {
            ElementOps::Cartesian(c) => &c.dx_mat,
            ElementOps::Cut(c) => &c.dx_mat,
        }
    }

    pub fn dy_mat(&self) -> &Mat {
        match self {
            ElementOps::Cartesian(c) => &c.dy_mat,
            ElementOps::Cut(c) => &c.dy_mat,
        }
    }

    pub fn kx(&self) -> &Mat {
        match self {
            ElementOps::Cartesian(c) => &c.kx,
            ElementOps::Cut(c) => &c.kx,
        }
    }

    pub fn ky(&self) -> &Mat {
        match self {
            ElementOps::Cartesian(c) => &c.ky,
            ElementOps::Cut(c) => &c.ky,
        }
    }

    pub fn interp_quad(&self) -> &Mat {
        match self {
            ElementOps::Cartesian(c) => &c.interp_quad,
            ElementOps::Cut(c) => &c.interp_quad,
        }
    }
}

/// Degrees-of-freedom layout: per element a contiguous `[p, ux, uy]` block.
#[derive(Debug, Clone)]
pub struct Layout {
    pub offsets: Vec<usize>,
    pub node_counts: Vec<usize>,
    pub total: usize,
}

impl Layout {
    pub fn block(&self, elem: usize) -> core::ops::Range<usize> {
        self.offsets[elem]..self.offsets[elem] + 3 * self.node_counts[elem]
    }

    pub fn field(&self, elem: usize, component: usize) -> core::ops::Range<usize> {
        let n = self.node_counts[elem];
        let start = self.offsets[elem] + component * n;
        start..start + n
    }
}

/// All element operators for a mesh at degree `n`, plus node positions and
/// the global DOF layout.
pub struct MeshOps {
    pub n: usize,
    pub ops: Vec<ElementOps>,
    pub node_positions: Vec<Vec<[f64; 2]>>,
    pub layout: Layout,
    /// Elements whose mass matrices exceeded the conditioning threshold.
    pub flagged: Vec<usize>,
}

impl MeshOps {
    pub fn build(mesh: &CutMesh, quad: &MeshQuadrature) -> Result<MeshOps, OperatorError> {
        let n = quad.n;
        let shared = Arc::new(CartesianOps::build(mesh.dx(), mesh.dy(), n));
        let mut ops = Vec::with_capacity(mesh.n_elements());
        let mut node_positions = Vec::with_capacity(mesh.n_elements());
        let mut flagged = Vec::new();
        for (ei, elem) in mesh.elements.iter().enumerate() {
            match elem.kind {
                CellKind::Cartesian => {
                    let (lo, _) = mesh.cell_box(elem.cell);
                    let nodes: Vec<[f64; 2]> = shared
                        .node_offsets
                        .iter()
                        .map(|o| [lo[0] + o[0], lo[1] + o[1]])
                        .collect();
                    node_positions.push(nodes);
                    ops.push(ElementOps::Cartesian(shared.clone()));
                }
                CellKind::Cut => {
                    let cut = CutOps::build(
                        ei,
                        &quad.frames[ei],
                        &quad.volumes[ei],
                        &quad.cut_nodes[ei],
                        n,
                    )?;
                    if cut.ill_conditioned {
                        flagged.push(ei);
                    }
                    node_positions.push(cut.nodes.clone());
                    ops.push(ElementOps::Cut(Box::new(cut)));
                }
                CellKind::Excluded => unreachable!(),
            }
        }
        let mut offsets = Vec::with_capacity(ops.len());
        let mut node_counts = Vec::with_capacity(ops.len());
        let mut total = 0usize;
        for op in &ops {
            offsets.push(total);
            node_counts.push(op.n_nodes());
            total += 3 * op.n_nodes();
        }
        Ok(MeshOps {
            n,
            ops,
            node_positions,
            layout: Layout {
                offsets,
                node_counts,
                total,
            },
            flagged,
        })
    }

    /// Interpolation matrix from an element's nodal values to physical
    /// points (which must lie in its cell for Cartesian elements).
    pub fn eval_matrix(&self, mesh: &CutMesh, elem: usize, points: &[[f64; 2]]) -> Mat {
        match &self.ops[elem] {
            ElementOps::Cartesian(c) => {
                let (lo, _) = mesh.cell_box(mesh.elements[elem].cell);
                c.eval_matrix(lo, points)
            }
            ElementOps::Cut(c) => c.eval_matrix(points),
        }
    }

    /// Mass condition estimate of one element (1 for unbuilt queries).
    pub fn mass_cond(&self, elem: usize) -> f64 {
        match &self.ops[elem] {
            ElementOps::Cartesian(c) => cond2(&c.mass),
            ElementOps::Cut(c) => c.mass_cond,
        }
    }
}
