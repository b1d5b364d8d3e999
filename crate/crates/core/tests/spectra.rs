//! Operator assembly and spectrum tests on small configurations.


use cutwave_core::curves::{GridLines, ParametricCurve};
use cutwave_core::linalg::Mat;
use cutwave_core::mesh::MeshBuilder;
use cutwave_core::spectra::{
    assemble, eig_residuals, max_abs, max_abs_re, spectrum, SpectraError,
};
use cutwave_core::srd::SrdOperator;
use cutwave_core::wave::{
    project_fields, BcKind, BcMap, Discretization, Formulation, WaveOperator,
};
use cutwave_testkit::splitmix;

fn small_circle_disc(n: usize) -> Discretization {
    let c = ParametricCurve::circle([0.0, 0.0], 0.55, false);
    let mesh = MeshBuilder::new(GridLines::uniform([-1.0, 1.0], [-1.0, 1.0], 4, 4), vec![c])
        .build()
        .unwrap();
    Discretization::build(mesh, n).unwrap()
}

fn wave_op(disc: &Discretization, tau: f64) -> WaveOperator {
    WaveOperator::new(
        disc.mesh.clone(),
        disc.quad.clone(),
        disc.ops.clone(),
        BcMap::uniform(BcKind::Wall, disc.mesh.curves.len()),
        tau,
        tau,
        1.0,
        Formulation::SkewSymmetric,
        None,
    )
}

#[test]
fn spectrum_of_block_diagonal() {
    // diag(1, -2) plus a rotation block with eigenvalues +-3i.
    let mut a = Mat::zeros(4, 4);
    a[(0, 0)] = 1.0;
    a[(1, 1)] = -2.0;
    a[(2, 3)] = 3.0;
    a[(3, 2)] = -3.0;
    let evs = spectrum(&a).unwrap();
    let mut res: Vec<(f64, f64)> = evs.iter().map(|z| (z.re, z.im)).collect();
    res.sort_by(|x, y| x.partial_cmp(y).unwrap());
    assert!((res[0].0 + 2.0).abs() < 1e-13);
    assert!((res[3].0 - 1.0).abs() < 1e-13);
    assert!((max_abs(&evs) - 3.0).abs() < 1e-13);
}

#[test]
fn probing_reproduces_matrix_and_detects_affine() {
    let mut state = 4u64;
    let m = Mat::from_fn(12, 12, |_, _| 2.0 * splitmix(&mut state) - 1.0);
    let m2 = m.clone();
    let probed = assemble(
        move |u, out| {
            let y = m2.matvec(u);
            out.copy_from_slice(&y);
        },
        12,
    )
    .unwrap();
    assert!(probed.sub(&m).max_abs() < 1e-14);

    let affine = assemble(
        |u, out| {
            for (i, o) in out.iter_mut().enumerate() {
                *o = u.iter().sum::<f64>() + 1.0 + i as f64 * 0.0;
            }
        },
        5,
    );
    assert!(matches!(affine, Err(SpectraError::NonLinearRhs { .. })));
}

#[test]
fn single_element_operator_antisymmetric_in_mass_inner_product() {
    // One wall-bounded Cartesian element, tau = 0: A^T M + M A = 0.
    let mesh = MeshBuilder::new(GridLines::uniform([-1.0, 1.0], [-1.0, 1.0], 1, 1), vec![])
        .build()
        .unwrap();
    let disc = Discretization::build(mesh, 3).unwrap();
    let op = wave_op(&disc, 0.0);
    let mut ws = op.workspace();
    let a = assemble(|u, out| op.apply(0.0, u, out, &mut ws), op.dof()).unwrap();
    // Global block-diagonal mass (1/c^2 factor is 1 here).
    let dof = op.dof();
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
    let am = a.transpose().matmul(&m);
    let ma = m.matmul(&a);
    let mut sum = am;
    sum.add_assign(&ma);
    let scale = ma.max_abs().max(1.0);
    assert!(sum.max_abs() <= 1e-10 * scale, "{} vs {scale}", sum.max_abs());
}

#[test]
fn no_penalty_spectrum_is_purely_imaginary() {
    let disc = small_circle_disc(2);
    let op = wave_op(&disc, 0.0);
    let mut ws = op.workspace();
    let a = assemble(|u, out| op.apply(0.0, u, out, &mut ws), op.dof()).unwrap();
    let evs = spectrum(&a).unwrap();
    let mabs = max_abs(&evs);
    assert!(mabs > 1.0);
    assert!(
        max_abs_re(&evs) <= 1e-8 * mabs,
        "max |Re| = {} vs max |lambda| = {}",
        max_abs_re(&evs),
        mabs
    );
}

#[test]
fn penalty_pushes_spectrum_left() {
    let disc = small_circle_disc(2);
    let op = wave_op(&disc, 0.5);
    let mut ws = op.workspace();
    let a = assemble(|u, out| op.apply(0.0, u, out, &mut ws), op.dof()).unwrap();
    let evs = spectrum(&a).unwrap();
    let mabs = max_abs(&evs);
    let mre = evs.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
    assert!(mre <= 1e-8 * mabs, "max Re = {mre}, max |lambda| = {mabs}");
}

#[test]
fn srd_composition_fixes_constants_and_matches_similarity() {
    let disc = small_circle_disc(2);
    let op = wave_op(&disc, 0.5);
    let srd = SrdOperator::build(&disc.mesh, &disc.quad, &disc.ops, 0.5).unwrap();
    let layout = disc.ops.layout.clone();
    let dof = op.dof();

    let mut ws = op.workspace();
    let a = assemble(|u, out| op.apply(0.0, u, out, &mut ws), dof).unwrap();
    let mut ws2 = op.workspace();
    let mut scratch = vec![0.0; dof];
    let a_s = assemble(
        |u, out| {
            srd.apply(&layout, u, &mut scratch);
            op.apply(0.0, &scratch, out, &mut ws2);
        },
        dof,
    )
    .unwrap();

    // S fixes constants, so (A S) c = A c for a constant state.
    let constant = project_fields(&disc.ops, |_, _| (1.0, 2.0, -0.5));
    let lhs = a_s.matvec(&constant);
    let rhs = a.matvec(&constant);
    let scale = rhs.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
    for (l, r) in lhs.iter().zip(&rhs) {
        assert!((l - r).abs() <= 1e-11 * scale);
    }

    // Spectra of AS and SA agree on their nonzero part (similarity of
    // products), a cross-check on the assembly order.
    let mut ws3 = op.workspace();
    let mut scratch2 = vec![0.0; dof];
    let s_a = assemble(
        |u, out| {
            let mut tmp = vec![0.0; dof];
            op.apply(0.0, u, &mut tmp, &mut ws3);
            scratch2.copy_from_slice(&tmp);
            srd.apply(&layout, &scratch2, out);
        },
        dof,
    )
    .unwrap();
    let mut evs_as: Vec<f64> = spectrum(&a_s).unwrap().iter().map(|z| z.norm()).collect();
    let mut evs_sa: Vec<f64> = spectrum(&s_a).unwrap().iter().map(|z| z.norm()).collect();
    evs_as.sort_by(|a, b| b.partial_cmp(a).unwrap());
    evs_sa.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mabs = evs_as[0].max(1.0);
    // Compare the largest magnitudes (the nonzero spectrum).
    for k in 0..20.min(evs_as.len()) {
        assert!(
            (evs_as[k] - evs_sa[k]).abs() <= 1e-6 * mabs,
            "k={k}: {} vs {}",
            evs_as[k],
            evs_sa[k]
        );
    }
}

#[test]
fn eigen_residuals_small() {
    let mut state = 8u64;
    let n = 60;
    let a = Mat::from_fn(n, n, |_, _| 2.0 * splitmix(&mut state) - 1.0);
    let evs = spectrum(&a).unwrap();
    for r in eig_residuals(&a, &evs, 10, 99) {
        assert!(r <= 1e-8, "residual {r}");
    }
}

#[test]
fn wave_operator_eigen_residuals() {
    let disc = small_circle_disc(1);
    let op = wave_op(&disc, 0.5);
    let mut ws = op.workspace();
    let a = assemble(|u, out| op.apply(0.0, u, out, &mut ws), op.dof()).unwrap();
    let evs = spectrum(&a).unwrap();
    for r in eig_residuals(&a, &evs, 10, 7) {
        assert!(r <= 1e-8, "residual {r}");
    }
}
