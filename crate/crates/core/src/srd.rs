//! State redistribution: small cut elements are stabilized by projecting
//! merged neighborhood solutions onto a single polynomial and averaging the
//! overlapping projections back onto each element.
//!
//! Neighborhoods are grown greedily by volume over face neighbors until the
//! merged volume reaches the threshold fraction of a full cell. Projections
//! use the overlap-weighted inner product `(u, v) = sum_j (1/|C_j|)
//! (u, v)_{L2(D^j)}`, which makes the assembled operator contractive and
//! conservative. Everything is precomputed once per mesh into dense blocks.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::linalg::{Cholesky, Mat};
use crate::mesh::{CellKind, CutMesh};
use crate::operators::MeshOps;
use crate::poly::Monomials2d;
use crate::quadrature::MeshQuadrature;

#[derive(Debug, Clone, PartialEq)]
pub enum SrdError {
    /// A small element has no face neighbors to merge with.
    IsolatedSmallCell { element: usize },
    /// Neighborhood Gram matrix not positive definite.
    SingularGram { element: usize },
}

impl fmt::Display for SrdError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SrdError::IsolatedSmallCell { element } => {
                write!(f, "small element {element} has no merge candidates")
            }
            SrdError::SingularGram { element } => {
                write!(f, "neighborhood of element {element} has a singular Gram matrix")
            }
        }
    }
}

impl core::error::Error for SrdError {}

/// Cut elements whose quadrature volume is below `threshold` times the full
/// background cell volume.
pub fn detect_small(mesh: &CutMesh, quad: &MeshQuadrature, threshold: f64) -> Vec<usize> {
    let full = mesh.dx() * mesh.dy();
    (0..mesh.n_elements())
        .filter(|&ei| {
            mesh.elements[ei].kind == CellKind::Cut
                && quad.element_volume(ei) < threshold * full
        })
        .collect()
}

/// Face-neighbor adjacency from the interior faces.
pub fn adjacency(mesh: &CutMesh) -> Vec<Vec<usize>> {
    let mut adj = vec![Vec::new(); mesh.n_elements()];
    for f in &mesh.faces {
        if let Some(nb) = f.neighbor {
            if !adj[f.owner].contains(&nb) {
                adj[f.owner].push(nb);
            }
            if !adj[nb].contains(&f.owner) {
                adj[nb].push(f.owner);
            }
        }
    }
    adj
}

/// Greedy volume-based merge neighborhood: repeatedly add the face neighbor
/// of the current set giving the largest volume increase, ties broken by the
/// smaller row-major background id, until the total reaches
/// `threshold * full_volume`.
pub fn build_neighborhood(
    elem: usize,
    adjacency: &[Vec<usize>],
    volumes: &[f64],
    bg_ids: &[usize],
    threshold: f64,
    full_volume: f64,
) -> Result<Vec<usize>, SrdError> {
    let mut members = vec![elem];
    let mut total = volumes[elem];
    while total < threshold * full_volume {
        let mut best: Option<usize> = None;
        for &m in &members {
            for &cand in &adjacency[m] {
                if members.contains(&cand) {
                    continue;
                }
                best = match best {
                    None => Some(cand),
                    Some(b) => {
                        if volumes[cand] > volumes[b]
                            || (volumes[cand] == volumes[b] && bg_ids[cand] < bg_ids[b])
                        {
                            Some(cand)
                        } else {
                            Some(b)
                        }
                    }
                };
            }
        }
        match best {
            Some(b) => {
                members.push(b);
                total += volumes[b];
            }
            None => return Err(SrdError::IsolatedSmallCell { element: elem }),
        }
    }
    Ok(members)
}

/// Per-axis affine frame for the neighborhood polynomial basis, centered on
/// the bounding box of the member cells.
#[derive(Debug, Clone, Copy)]
struct BoxFrame {
    center: [f64; 2],
    half: [f64; 2],
}

impl BoxFrame {
    fn map(&self, p: [f64; 2]) -> [f64; 2] {
        [
            (p[0] - self.center[0]) / self.half[0],
            (p[1] - self.center[1]) / self.half[1],
        ]
    }
}

struct NeighborhoodData {
    owner: usize,
    members: Vec<usize>,
    /// `B_e = G^{-1} * (1/|C_e|) Psi_e^T W_e Interp_e` per member.
    moment_blocks: Vec<Mat>,
    /// Basis values at each member's interpolation nodes.
    eval_blocks: Vec<Mat>,
    frame: BoxFrame,
}

/// Precomputed state redistribution operator.
pub struct SrdOperator {
    pub threshold: f64,
    /// Merge neighborhood `M_k` per element (singleton if not merged).
    pub members: Vec<Vec<usize>>,
    /// Overlap counts `|C_k|` per element.
    pub counts: Vec<usize>,
    pub small: Vec<usize>,
    n_basis: usize,
    nontrivial: Vec<NeighborhoodData>,
    /// Element -> list of (nontrivial neighborhood index, member position).
    memberships: Vec<Vec<(usize, usize)>>,
    node_counts: Vec<usize>,
}

impl SrdOperator {
    pub fn build(
        mesh: &CutMesh,
        quad: &MeshQuadrature,
        ops: &MeshOps,
        threshold: f64,
    ) -> Result<SrdOperator, SrdError> {
        let ne = mesh.n_elements();
        let volumes: Vec<f64> = (0..ne).map(|ei| quad.element_volume(ei)).collect();
        let bg_ids: Vec<usize> = mesh.elements.iter().map(|e| e.bg_id).collect();
        let adj = adjacency(mesh);
        let small = detect_small(mesh, quad, threshold);
        let full = mesh.dx() * mesh.dy();

        // Pass one: all merge neighborhoods, then the overlap counts.
        let mut members: Vec<Vec<usize>> = (0..ne).map(|k| vec![k]).collect();
        for &k in &small {
            members[k] = build_neighborhood(k, &adj, &volumes, &bg_ids, threshold, full)?;
        }
        let mut counts = vec![0usize; ne];
        for m in &members {
            for &e in m {
                counts[e] += 1;
            }
        }

        // Pass two: weighted Gram and moment blocks per nontrivial
        // neighborhood, now that every |C_j| is final.
        let monomials = Monomials2d::new(quad.n);
        let np = monomials.len();
        let mut nontrivial = Vec::new();
        let mut memberships: Vec<Vec<(usize, usize)>> = vec![Vec::new(); ne];
        for &k in &small {
            let mset = &members[k];
            // Bounding box of the member cells.
            let mut lo = [f64::INFINITY; 2];
            let mut hi = [f64::NEG_INFINITY; 2];
            for &e in mset {
                let (clo, chi) = mesh.cell_box(mesh.elements[e].cell);
                for d in 0..2 {
                    lo[d] = lo[d].min(clo[d]);
                    hi[d] = hi[d].max(chi[d]);
                }
            }
            let frame = BoxFrame {
                center: [0.5 * (lo[0] + hi[0]), 0.5 * (lo[1] + hi[1])],
                half: [0.5 * (hi[0] - lo[0]), 0.5 * (hi[1] - lo[1])],
            };

            let mut gram = Mat::zeros(np, np);
            let mut raw_moments: Vec<Mat> = Vec::with_capacity(mset.len());
            let mut eval_blocks: Vec<Mat> = Vec::with_capacity(mset.len());
            let mut basis_row = vec![0.0; np];
            for &e in mset {
                let rule = &quad.volumes[e];
                let nq = rule.len();
                let weight = 1.0 / counts[e] as f64;
                // Basis at this member's volume quadrature points.
                let mut psi = Mat::zeros(nq, np);
                for (q, p) in rule.points.iter().enumerate() {
                    let m = frame.map(*p);
                    monomials.eval(m[0], m[1], &mut basis_row);
                    psi.row_mut(q).copy_from_slice(&basis_row);
                }
                for q in 0..nq {
                    let w = weight * rule.weights[q];
                    for a in 0..np {
                        let va = psi[(q, a)];
                        if va == 0.0 {
                            continue;
                        }
                        for b in 0..np {
                            gram[(a, b)] += w * va * psi[(q, b)];
                        }
                    }
                }
                // Moments of the member's nodal basis: Psi^T W Interp.
                let interp = ops.ops[e].interp_quad();
                let n_nodes = interp.ncols();
                let mut mom = Mat::zeros(np, n_nodes);
                for q in 0..nq {
                    let w = weight * rule.weights[q];
                    for a in 0..np {
                        let va = w * psi[(q, a)];
                        if va == 0.0 {
                            continue;
                        }
                        for c in 0..n_nodes {
                            mom[(a, c)] += va * interp[(q, c)];
                        }
                    }
                }
                raw_moments.push(mom);
                // Basis at the member's interpolation nodes.
                let nodes = &ops.node_positions[e];
                let mut eval = Mat::zeros(nodes.len(), np);
                for (i, p) in nodes.iter().enumerate() {
                    let m = frame.map(*p);
                    monomials.eval(m[0], m[1], &mut basis_row);
                    eval.row_mut(i).copy_from_slice(&basis_row);
                }
                eval_blocks.push(eval);
            }
            let chol = Cholesky::factor(&gram)
                .map_err(|_| SrdError::SingularGram { element: k })?;
            let moment_blocks: Vec<Mat> = raw_moments
                .into_iter()
                .map(|m| {
                    let mut out = Mat::zeros(m.nrows(), m.ncols());
                    let mut col = vec![0.0; m.nrows()];
                    for j in 0..m.ncols() {
                        for i in 0..m.nrows() {
                            col[i] = m[(i, j)];
                        }
                        let x = chol.solve(&col);
                        for i in 0..m.nrows() {
                            out[(i, j)] = x[i];
                        }
                    }
                    out
                })
                .collect();
            let j_idx = nontrivial.len();
            for (pos, &e) in mset.iter().enumerate() {
                memberships[e].push((j_idx, pos));
            }
            nontrivial.push(NeighborhoodData {
                owner: k,
                members: mset.clone(),
                moment_blocks,
                eval_blocks,
                frame,
            });
        }

        Ok(SrdOperator {
            threshold,
            members,
            counts,
            small,
            n_basis: np,
            nontrivial,
            memberships,
            node_counts: ops.layout.node_counts.clone(),
        })
    }

    /// Whether the operator leaves this element untouched.
    pub fn is_identity_on(&self, elem: usize) -> bool {
        self.memberships[elem].is_empty()
    }

    /// Apply `S` componentwise to a state vector.
    pub fn apply(&self, layout: &crate::operators::Layout, u: &[f64], out: &mut [f64]) {
        out.copy_from_slice(u);
        if self.nontrivial.is_empty() {
            return;
        }
        // Neighborhood coefficients per component.
        let np = self.n_basis;
        let mut coeffs: Vec<[Vec<f64>; 3]> = Vec::with_capacity(self.nontrivial.len());
        for nb in &self.nontrivial {
            let mut c: [Vec<f64>; 3] = [vec![0.0; np], vec![0.0; np], vec![0.0; np]];
            for (pos, &e) in nb.members.iter().enumerate() {
                let blk = &nb.moment_blocks[pos];
                for (comp, cc) in c.iter_mut().enumerate() {
                    blk.matvec_acc(1.0, &u[layout.field(e, comp)], cc);
                }
            }
            coeffs.push(c);
        }
        // Averaged projections on every touched element.
        for (e, mems) in self.memberships.iter().enumerate() {
            if mems.is_empty() {
                continue;
            }
            let n = self.node_counts[e];
            let inv_count = 1.0 / self.counts[e] as f64;
            let own_identity = self.members[e].len() == 1;
            for comp in 0..3 {
                let range = layout.field(e, comp);
                let mut acc = vec![0.0; n];
                if own_identity {
                    acc.copy_from_slice(&u[range.clone()]);
                }
                for &(j, pos) in mems {
                    let nb = &self.nontrivial[j];
                    nb.eval_blocks[pos].matvec_acc(1.0, &coeffs[j][comp], &mut acc);
                }
                for (o, a) in out[range].iter_mut().zip(&acc) {
                    *o = inv_count * a;
                }
            }
        }
    }

    /// Projection coefficients of one state component onto the neighborhood
    /// polynomial space of a merged element (test access).
    pub fn project_component(
        &self,
        layout: &crate::operators::Layout,
        owner: usize,
        u: &[f64],
        comp: usize,
    ) -> Option<Vec<f64>> {
        let j = self.nontrivial.iter().position(|nb| nb.owner == owner)?;
        let nb = &self.nontrivial[j];
        let mut c = vec![0.0; self.n_basis];
        for (pos, &e) in nb.members.iter().enumerate() {
            nb.moment_blocks[pos].matvec_acc(1.0, &u[layout.field(e, comp)], &mut c);
        }
        Some(c)
    }

    /// Values of a neighborhood polynomial at arbitrary points (test access).
    pub fn eval_neighborhood_poly(
        &self,
        owner: usize,
        coeffs: &[f64],
        points: &[[f64; 2]],
    ) -> Option<Vec<f64>> {
        let j = self.nontrivial.iter().position(|nb| nb.owner == owner)?;
        let nb = &self.nontrivial[j];
        let monomials = Monomials2d::new(degree_from_dim(self.n_basis));
        let mut row = vec![0.0; self.n_basis];
        Some(
            points
                .iter()
                .map(|p| {
                    let m = nb.frame.map(*p);
                    monomials.eval(m[0], m[1], &mut row);
                    row.iter().zip(coeffs).map(|(a, b)| a * b).sum()
                })
                .collect(),
        )
    }

    /// Owners of the nontrivial neighborhoods.
    pub fn merged_owners(&self) -> Vec<usize> {
        self.nontrivial.iter().map(|nb| nb.owner).collect()
    }
}

fn degree_from_dim(np: usize) -> usize {
    let mut n = 0;
    while (n + 1) * (n + 2) / 2 < np {
        n += 1;
    }
    n
}
