//! State redistribution tests: detection, greedy neighborhoods,
//! projection correctness, contractivity, conservation, and the nested-sum
//! identity behind the contractivity proof.

use cutwave_core::curves::{GridLines, ParametricCurve};
use cutwave_core::mesh::MeshBuilder;
use cutwave_core::srd::{adjacency, build_neighborhood, detect_small, SrdOperator};
use cutwave_core::wave::{discrete_energy, project_fields, Discretization};
use cutwave_testkit::splitmix;

fn circle_disc(n: usize) -> Discretization {
    let c = ParametricCurve::circle([0.0, 0.0], 0.699, false);
    let mesh = MeshBuilder::new(GridLines::uniform([-1.0, 1.0], [-1.0, 1.0], 8, 8), vec![c])
        .build()
        .unwrap();
    Discretization::build(mesh, n).unwrap()
}

fn random_state(n: usize, seed: u64) -> Vec<f64> {
    let mut s = seed;
    (0..n).map(|_| 2.0 * splitmix(&mut s) - 1.0).collect()
}

#[test]
fn all_cartesian_mesh_detects_nothing() {
    let mesh = MeshBuilder::new(GridLines::uniform([-1.0, 1.0], [-1.0, 1.0], 4, 4), vec![])
        .build()
        .unwrap();
    let disc = Discretization::build(mesh, 2).unwrap();
    assert!(detect_small(&disc.mesh, &disc.quad, 0.5).is_empty());
    let srd = SrdOperator::build(&disc.mesh, &disc.quad, &disc.ops, 0.5).unwrap();
    let u = random_state(disc.dof(), 5);
    let mut out = vec![0.0; disc.dof()];
    srd.apply(&disc.ops.layout, &u, &mut out);
    assert_eq!(u, out, "identity bit-for-bit");
}

#[test]
fn zero_threshold_detects_nothing() {
    let disc = circle_disc(2);
    assert!(detect_small(&disc.mesh, &disc.quad, 0.0).is_empty());
}

#[test]
fn circle_mesh_small_cells_include_slivers() {
    let disc = circle_disc(4);
    let small = detect_small(&disc.mesh, &disc.quad, 0.5);
    assert!(!small.is_empty());
    // The four corner slivers (volume ratio about 940) must all be flagged.
    let full = disc.mesh.dx() * disc.mesh.dy();
    let slivers: Vec<usize> = (0..disc.mesh.n_elements())
        .filter(|&ei| disc.quad.element_volume(ei) < full / 900.0)
        .collect();
    assert_eq!(slivers.len(), 4);
    for s in slivers {
        assert!(small.contains(&s));
    }
}

#[test]
fn greedy_neighborhood_prefers_largest_volume() {
    // Synthetic adjacency: element 0 is small with neighbors 1 (cut,
    // smaller) and 2 (full Cartesian): it merges with 2.
    let adjacency = vec![vec![1, 2], vec![0], vec![0]];
    let volumes = vec![0.1, 0.3, 1.0];
    let bg_ids = vec![0, 1, 2];
    let members = build_neighborhood(0, &adjacency, &volumes, &bg_ids, 0.5, 1.0).unwrap();
    assert_eq!(members, vec![0, 2]);
}

#[test]
fn greedy_tie_breaks_by_row_major_id() {
    let adjacency = vec![vec![1, 2], vec![0], vec![0]];
    let volumes = vec![0.1, 0.7, 0.7];
    let bg_ids = vec![5, 9, 3];
    let members = build_neighborhood(0, &adjacency, &volumes, &bg_ids, 0.5, 1.0).unwrap();
    assert_eq!(members, vec![0, 2], "equal volumes: smaller bg id wins");
}

#[test]
fn isolated_small_cell_errors() {
    let adjacency = vec![vec![]];
    let volumes = vec![0.1];
    let bg_ids = vec![0];
    assert!(build_neighborhood(0, &adjacency, &volumes, &bg_ids, 0.5, 1.0).is_err());
}

#[test]
fn greedy_growth_on_real_mesh_matches_reference(){
    // Re-run the greedy rule independently and compare against the
    // operator's stored neighborhoods.
    let disc = circle_disc(3);
    let srd = SrdOperator::build(&disc.mesh, &disc.quad, &disc.ops, 0.5).unwrap();
    let adj = adjacency(&disc.mesh);
    let volumes: Vec<f64> = (0..disc.mesh.n_elements())
        .map(|ei| disc.quad.element_volume(ei))
        .collect();
    let bg: Vec<usize> = disc.mesh.elements.iter().map(|e| e.bg_id).collect();
    let full = disc.mesh.dx() * disc.mesh.dy();
    for &k in &srd.small {
        let reference = build_neighborhood(k, &adj, &volumes, &bg, 0.5, full).unwrap();
        assert_eq!(srd.members[k], reference);
        assert!(srd.members[k].contains(&k));
        let total: f64 = srd.members[k].iter().map(|&e| volumes[e]).sum();
        assert!(total >= 0.5 * full);
    }
    // Overlap counts: |C_k| >= 1, equality for untouched elements.
    for ei in 0..disc.mesh.n_elements() {
        assert!(srd.counts[ei] >= 1);
        if srd.is_identity_on(ei) {
            assert_eq!(srd.counts[ei], 1);
        }
    }
}

#[test]
fn projection_reproduces_constants_and_polynomials() {
    let disc = circle_disc(2);
    let srd = SrdOperator::build(&disc.mesh, &disc.quad, &disc.ops, 0.5).unwrap();
    let layout = &disc.ops.layout;

    // Constant field: every projection is that constant across its own
    // neighborhood.
    let u = project_fields(&disc.ops, |_, _| (3.0, 0.0, 0.0));
    for owner in srd.merged_owners() {
        let c = srd.project_component(layout, owner, &u, 0).unwrap();
        for &member in &srd.members[owner] {
            let pts = disc.ops.node_positions[member].clone();
            let vals = srd.eval_neighborhood_poly(owner, &c, &pts).unwrap();
            for v in vals {
                assert!((v - 3.0).abs() < 1e-11);
            }
        }
    }

    // Global in-space polynomial: a fixed point of S to 1e-10.
    let poly = |x: f64, y: f64| (0.3 + 1.1 * x - 0.7 * y + 0.25 * x * y, 0.5 * x * x, y * y - x);
    let u = project_fields(&disc.ops, |x, y| poly(x, y));
    let mut su = vec![0.0; disc.dof()];
    srd.apply(layout, &u, &mut su);
    let scale = u.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    for i in 0..u.len() {
        assert!(
            (su[i] - u[i]).abs() <= 1e-10 * scale,
            "i={i}: {} vs {}",
            su[i],
            u[i]
        );
    }
}

#[test]
fn two_element_projection_matches_dense_oracle() {
    // N = 1: assemble the 3x3 weighted least-squares system by hand from
    // the quadrature rules and compare against the stored projection.
    let disc = circle_disc(1);
    let srd = SrdOperator::build(&disc.mesh, &disc.quad, &disc.ops, 0.5).unwrap();
    let layout = &disc.ops.layout;
    let owner = srd.merged_owners()[0];
    let members = srd.members[owner].clone();

    // Piecewise-distinct linear field (in-space per element, discontinuous
    // across elements).
    let mut u = vec![0.0; disc.dof()];
    for (ei, nodes) in disc.ops.node_positions.iter().enumerate() {
        let shift = if members.contains(&ei) { ei as f64 } else { 0.0 };
        for (k, p) in nodes.iter().enumerate() {
            u[layout.field(ei, 0).start + k] = 1.0 + shift + 0.5 * p[0] - 0.25 * p[1];
        }
    }

    // Oracle: min over linear q of sum_j (1/|C_j|) int_{D_j} (q - u)^2 using
    // the monomial basis 1, x, y in physical coordinates.
    let mut g = [[0.0f64; 3]; 3];
    let mut rhs = [0.0f64; 3];
    for &e in &members {
        let w_c = 1.0 / srd.counts[e] as f64;
        let rule = &disc.quad.volumes[e];
        let interp = disc.ops.ops[e].interp_quad();
        let uv = interp.matvec(&u[layout.field(e, 0)]);
        for (q, p) in rule.points.iter().enumerate() {
            let w = w_c * rule.weights[q];
            let basis = [1.0, p[0], p[1]];
            for a in 0..3 {
                for b in 0..3 {
                    g[a][b] += w * basis[a] * basis[b];
                }
                rhs[a] += w * basis[a] * uv[q];
            }
        }
    }
    // Solve the 3x3 system by elimination.
    let mut aug = [[0.0f64; 4]; 3];
    for a in 0..3 {
        aug[a][..3].copy_from_slice(&g[a]);
        aug[a][3] = rhs[a];
    }
    for col in 0..3 {
        let piv = (col..3).max_by(|&i, &j| aug[i][col].abs().partial_cmp(&aug[j][col].abs()).unwrap()).unwrap();
        aug.swap(col, piv);
        for row in 0..3 {
            if row != col {
                let f = aug[row][col] / aug[col][col];
                for k in col..4 {
                    aug[row][k] -= f * aug[col][k];
                }
            }
        }
    }
    let q_oracle = [aug[0][3] / aug[0][0], aug[1][3] / aug[1][1], aug[2][3] / aug[2][2]];

    let coeffs = srd.project_component(layout, owner, &u, 0).unwrap();
    let pts = [[0.13, -0.44], [0.52, 0.61], [-0.7, 0.77], [0.0, 0.0]];
    let got = srd.eval_neighborhood_poly(owner, &coeffs, &pts).unwrap();
    for (p, v) in pts.iter().zip(&got) {
        let oracle = q_oracle[0] + q_oracle[1] * p[0] + q_oracle[2] * p[1];
        assert!((v - oracle).abs() < 1e-9, "{v} vs {oracle}");
    }
}

#[test]
fn apply_preserves_constants_and_integrals() {
    let disc = circle_disc(3);
    let srd = SrdOperator::build(&disc.mesh, &disc.quad, &disc.ops, 0.5).unwrap();
    let layout = &disc.ops.layout;

    let u = project_fields(&disc.ops, |_, _| (2.5, -1.0, 0.25));
    let mut su = vec![0.0; disc.dof()];
    srd.apply(layout, &u, &mut su);
    for i in 0..u.len() {
        assert!((su[i] - u[i]).abs() < 1e-12);
    }

    // Global integral of each component is conserved for random states.
    let integral = |v: &[f64], comp: usize| -> f64 {
        let mut acc = 0.0;
        for ei in 0..disc.mesh.n_elements() {
            let iq = disc.ops.ops[ei].interp_quad();
            let vals = iq.matvec(&v[layout.field(ei, comp)]);
            for (q, w) in disc.quad.volumes[ei].weights.iter().enumerate() {
                acc += w * vals[q];
            }
        }
        acc
    };
    for seed in 0..5u64 {
        let u = random_state(disc.dof(), 100 + seed);
        let mut su = vec![0.0; disc.dof()];
        srd.apply(layout, &u, &mut su);
        for comp in 0..3 {
            let a = integral(&u, comp);
            let b = integral(&su, comp);
            assert!(
                (a - b).abs() <= 1e-10 * a.abs().max(1.0),
                "component {comp}: {a} vs {b}"
            );
        }
    }
}

#[test]
fn contractivity_over_random_states() {
    for n in 1..=4usize {
        let disc = circle_disc(n);
        let srd = SrdOperator::build(&disc.mesh, &disc.quad, &disc.ops, 0.5).unwrap();
        let layout = &disc.ops.layout;
        let mut su = vec![0.0; disc.dof()];
        for seed in 0..100u64 {
            let u = random_state(disc.dof(), 1000 * n as u64 + seed);
            srd.apply(layout, &u, &mut su);
            let nu = discrete_energy(&u, &disc.ops, 1.0);
            let nsu = discrete_energy(&su, &disc.ops, 1.0);
            assert!(
                nsu <= nu * (1.0 + 1e-12),
                "n={n} seed={seed}: ||Su||^2 = {nsu} > ||u||^2 = {nu}"
            );
        }
    }
}

#[test]
fn untouched_elements_bit_for_bit() {
    let disc = circle_disc(3);
    let srd = SrdOperator::build(&disc.mesh, &disc.quad, &disc.ops, 0.5).unwrap();
    let layout = &disc.ops.layout;
    let u = random_state(disc.dof(), 77);
    let mut su = vec![0.0; disc.dof()];
    srd.apply(layout, &u, &mut su);
    let mut untouched = 0;
    for ei in 0..disc.mesh.n_elements() {
        if srd.is_identity_on(ei) {
            untouched += 1;
            let r = layout.block(ei);
            assert_eq!(&u[r.clone()], &su[r]);
        }
    }
    assert!(untouched > 0);
}

#[test]
fn nested_sum_orderings_agree() {
    // sum_k sum_{j in M_k} (1/|C_j|) ||Pi_k u||^2_{L2(D_j)}  equals
    // sum_k (1/|C_k|) sum_{j in C_k} ||Pi_j u||^2_{L2(D_k)}.
    let disc = circle_disc(2);
    let srd = SrdOperator::build(&disc.mesh, &disc.quad, &disc.ops, 0.5).unwrap();
    let layout = &disc.ops.layout;
    let u = random_state(disc.dof(), 31);

    // Projection values of neighborhood k on element j's quadrature points;
    // for singleton neighborhoods the projection is the element's own trace.
    let proj_on = |owner: usize, elem: usize| -> Vec<f64> {
        if let Some(c) = srd.project_component(layout, owner, &u, 0) {
            srd.eval_neighborhood_poly(owner, &c, &disc.quad.volumes[elem].points)
                .unwrap()
        } else {
            assert_eq!(owner, elem);
            disc.ops.ops[elem]
                .interp_quad()
                .matvec(&u[layout.field(elem, 0)])
        }
    };
    let norm_on = |owner: usize, elem: usize| -> f64 {
        let vals = proj_on(owner, elem);
        disc.quad.volumes[elem]
            .weights
            .iter()
            .zip(&vals)
            .map(|(w, v)| w * v * v)
            .sum()
    };

    let ne = disc.mesh.n_elements();
    // C_k from the stored memberships.
    let mut c_of: Vec<Vec<usize>> = vec![Vec::new(); ne];
    for k in 0..ne {
        for &j in &srd.members[k] {
            c_of[j].push(k);
        }
    }
    let mut lhs = 0.0;
    for k in 0..ne {
        for &j in &srd.members[k] {
            lhs += norm_on(k, j) / srd.counts[j] as f64;
        }
    }
    let mut rhs = 0.0;
    for k in 0..ne {
        for &j in &c_of[k] {
            rhs += norm_on(j, k) / srd.counts[k] as f64;
        }
    }
    assert!((lhs - rhs).abs() <= 1e-10 * lhs.abs().max(1.0), "{lhs} vs {rhs}");
}
