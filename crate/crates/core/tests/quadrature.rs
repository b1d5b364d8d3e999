//! Moment-fitted quadrature tests: face rules against arclength oracles,
//! target integrals and volume rules against the Green-theorem adaptive
//! oracle, conditioning behavior, interpolation node quality.

use cutwave_core::curves::{GridLines, ParametricCurve};
use cutwave_core::linalg::cond2;
use cutwave_core::mesh::{CellKind, FaceGeometry, MeshBuilder};
use cutwave_core::poly::{graded_exponents, Legendre2d};
use cutwave_core::quadrature::{
    cartesian_volume_rule, face_rule, fekete_volume_rule, interpolation_nodes, target_integrals,
    FaceQuad, MappedFrame,
};
use cutwave_testkit::{monomial_area_integral, polygon_monomial_integral, splitmix};

fn square_boundary(lo: [f64; 2], hi: [f64; 2]) -> Vec<FaceGeometry> {
    vec![
        FaceGeometry::Straight { a: lo, b: [hi[0], lo[1]] },
        FaceGeometry::Straight { a: [hi[0], lo[1]], b: hi },
        FaceGeometry::Straight { a: hi, b: [lo[0], hi[1]] },
        FaceGeometry::Straight { a: [lo[0], hi[1]], b: lo },
    ]
}

fn polygon_boundary(v: &[[f64; 2]]) -> Vec<FaceGeometry> {
    (0..v.len())
        .map(|k| FaceGeometry::Straight {
            a: v[k],
            b: v[(k + 1) % v.len()],
        })
        .collect()
}

fn local_quads(faces: &[FaceGeometry], curves: &[ParametricCurve], n: usize) -> Vec<FaceQuad> {
    faces
        .iter()
        .map(|g| face_rule(g, curves, n).unwrap())
        .collect()
}

fn point_in_polygon(v: &[[f64; 2]], p: [f64; 2]) -> bool {
    let mut winding = 0.0_f64;
    for k in 0..v.len() {
        let a = v[k];
        let b = v[(k + 1) % v.len()];
        let v0 = [a[0] - p[0], a[1] - p[1]];
        let v1 = [b[0] - p[0], b[1] - p[1]];
        let cross = v0[0] * v1[1] - v0[1] * v1[0];
        let dot = v0[0] * v1[0] + v0[1] * v1[1];
        winding += cross.atan2(dot);
    }
    winding.abs() > std::f64::consts::PI
}

#[test]
fn straight_face_rule_counts_and_length() {
    let g = FaceGeometry::Straight { a: [0.0, 0.0], b: [1.0, 0.0] };
    let q = face_rule(&g, &[], 1).unwrap();
    assert_eq!(q.len(), 8);
    assert!((q.arclength() - 1.0).abs() < 1e-14);
    for n in &q.normals {
        // Traversal +x with fluid on the left: outward normal is -y.
        assert!((n[0]).abs() < 1e-15 && (n[1] + 1.0).abs() < 1e-15);
    }
}

#[test]
fn quarter_circle_face_arclength() {
    let circle = ParametricCurve::circle([0.0, 0.0], 1.0, false);
    let g = FaceGeometry::Curved { curve: 0, s0: 0.0, s1: 0.25 };
    let q = face_rule(&g, std::slice::from_ref(&circle), 4).unwrap();
    assert_eq!(q.len(), 20);
    assert!((q.arclength() - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
}

#[test]
fn closed_circle_normal_integral_vanishes() {
    let circle = ParametricCurve::circle([0.3, -0.1], 0.7, false);
    let mut acc = [0.0, 0.0];
    for k in 0..4 {
        let g = FaceGeometry::Curved {
            curve: 0,
            s0: k as f64 * 0.25,
            s1: (k + 1) as f64 * 0.25,
        };
        let q = face_rule(&g, std::slice::from_ref(&circle), 3).unwrap();
        for (w, n) in q.weights.iter().zip(&q.normals) {
            acc[0] += w * n[0];
            acc[1] += w * n[1];
        }
    }
    assert!(acc[0].abs() < 1e-13 && acc[1].abs() < 1e-13);
}

#[test]
fn target_integrals_full_square() {
    // Unit-scale frame on the reference square: b_0 = area = 4.
    let faces = square_boundary([-1.0, -1.0], [1.0, 1.0]);
    let quads = local_quads(&faces, &[], 2);
    let refs: Vec<&FaceQuad> = quads.iter().collect();
    let frame = MappedFrame::from_face_quads(quads.iter());
    assert!(frame.center[0].abs() < 1e-14 && frame.center[1].abs() < 1e-14);
    assert!((frame.scale[0] - 1.0).abs() < 1e-13 && (frame.scale[1] - 1.0).abs() < 1e-13);
    let basis = Legendre2d::new(4);
    let b = target_integrals(&basis, &frame, &refs);
    assert!((b[0] - 4.0).abs() < 1e-12);
    // All higher Legendre moments vanish on the full square.
    for bi in &b[1..] {
        assert!(bi.abs() < 1e-12);
    }
}

#[test]
fn volume_rule_full_square_n1() {
    let faces = square_boundary([-1.0, -1.0], [1.0, 1.0]);
    let quads = local_quads(&faces, &[], 1);
    let refs: Vec<&FaceQuad> = quads.iter().collect();
    let frame = MappedFrame::from_face_quads(quads.iter());
    let inside = |p: [f64; 2]| p[0].abs() < 1.0 && p[1].abs() < 1.0;
    let rule = fekete_volume_rule(0, [-1.0, -1.0], [1.0, 1.0], &inside, &frame, &refs, 1).unwrap();
    assert_eq!(rule.len(), 6);
    assert!((rule.volume() - 4.0).abs() < 1e-12);
    assert!((rule.integrate(|x, _| x * x) - 4.0 / 3.0).abs() < 1e-12);
    assert!((rule.integrate(|_, y| y * y) - 4.0 / 3.0).abs() < 1e-12);
    assert!(rule.integrate(|x, y| x * y).abs() < 1e-12);
}

#[test]
fn upper_half_square_first_moment() {
    let faces = square_boundary([-1.0, 0.0], [1.0, 1.0]);
    let quads = local_quads(&faces, &[], 2);
    let refs: Vec<&FaceQuad> = quads.iter().collect();
    let frame = MappedFrame::from_face_quads(quads.iter());
    let inside = |p: [f64; 2]| p[0].abs() < 1.0 && p[1] > 0.0 && p[1] < 1.0;
    let rule = fekete_volume_rule(0, [-1.0, 0.0], [1.0, 1.0], &inside, &frame, &refs, 2).unwrap();
    assert!((rule.volume() - 2.0).abs() < 1e-12);
    assert!((rule.integrate(|_, y| y) - 1.0).abs() < 1e-12);
}

#[test]
fn random_chord_pentagon_matches_adaptive_oracle() {
    // Pentagon from a chord cut of the unit square; targets and the fitted
    // rule must reproduce the Green-theorem adaptive oracle.
    let v = [
        [0.0, 0.0],
        [1.0, 0.0],
        [1.0, 0.55],
        [0.35, 1.0],
        [0.0, 1.0],
    ];
    let faces = polygon_boundary(&v);
    for n in 1..=4usize {
        let quads = local_quads(&faces, &[], n);
        let refs: Vec<&FaceQuad> = quads.iter().collect();
        let frame = MappedFrame::from_face_quads(quads.iter());
        let inside = |p: [f64; 2]| point_in_polygon(&v, p);
        let rule =
            fekete_volume_rule(0, [0.0, 0.0], [1.0, 1.0], &inside, &frame, &refs, n).unwrap();
        assert_eq!(rule.len(), (2 * n + 1) * (2 * n + 2) / 2);
        for (i, j) in graded_exponents(2 * n) {
            let oracle = polygon_monomial_integral(&v, i as u32, j as u32);
            let fitted = rule.integrate(|x, y| x.powi(i as i32) * y.powi(j as i32));
            assert!(
                (fitted - oracle).abs() <= 1e-10 * oracle.abs().max(1.0),
                "n={n} x^{i} y^{j}: {fitted} vs {oracle}"
            );
        }
    }
}

#[test]
fn moment_fit_consistency_residual() {
    // The finished rule reproduces its own targets at solve precision.
    let v = [
        [0.1, 0.0],
        [1.0, 0.2],
        [0.9, 1.0],
        [0.0, 0.85],
    ];
    let faces = polygon_boundary(&v);
    let n = 3;
    let quads = local_quads(&faces, &[], n);
    let refs: Vec<&FaceQuad> = quads.iter().collect();
    let frame = MappedFrame::from_face_quads(quads.iter());
    let inside = |p: [f64; 2]| point_in_polygon(&v, p);
    let rule = fekete_volume_rule(0, [0.0, 0.0], [1.0, 1.0], &inside, &frame, &refs, n).unwrap();
    let basis = Legendre2d::new(2 * n);
    let b = target_integrals(&basis, &frame, &refs);
    let scale2 = frame.area_scale();
    let mut vals = vec![0.0; basis.len()];
    for (i, bi) in b.iter().enumerate() {
        let mut acc = 0.0;
        for (p, w) in rule.points.iter().zip(&rule.weights) {
            let m = frame.map(*p);
            basis.eval(m[0], m[1], &mut vals);
            acc += w * vals[i];
        }
        assert!(
            (acc - bi * scale2).abs() < 1e-10,
            "basis {i}: {acc} vs {}",
            bi * scale2
        );
    }
}

#[test]
fn kappa_invariant_under_translation() {
    let v = [
        [0.0, 0.0],
        [1.0, 0.0],
        [1.0, 0.35],
        [0.0, 0.9],
    ];
    let shift = [0.37, -0.12];
    let vs: Vec<[f64; 2]> = v.iter().map(|p| [p[0] + shift[0], p[1] + shift[1]]).collect();
    let build = |verts: &[[f64; 2]], lo: [f64; 2], hi: [f64; 2]| {
        let faces = polygon_boundary(verts);
        let quads = local_quads(&faces, &[], 3);
        let refs: Vec<&FaceQuad> = quads.iter().collect();
        let frame = MappedFrame::from_face_quads(quads.iter());
        let verts = verts.to_vec();
        let rule = fekete_volume_rule(
            0,
            lo,
            hi,
            &|p| point_in_polygon(&verts, p),
            &frame,
            &refs,
            3,
        )
        .unwrap();
        rule.kappa
    };
    let k0 = build(&v, [0.0, 0.0], [1.0, 1.0]);
    let k1 = build(&vs, [shift[0], shift[1]], [1.0 + shift[0], 1.0 + shift[1]]);
    assert!((k0 - k1).abs() <= 1e-9, "{k0} vs {k1}");
}

#[test]
fn interpolation_nodes_unisolvent_and_inside() {
    let v = [
        [0.0, 0.0],
        [1.0, 0.0],
        [1.0, 0.55],
        [0.35, 1.0],
        [0.0, 1.0],
    ];
    let faces = polygon_boundary(&v);
    for n in [1usize, 4] {
        let quads = local_quads(&faces, &[], n);
        let frame = MappedFrame::from_face_quads(quads.iter());
        let inside = |p: [f64; 2]| point_in_polygon(&v, p);
        let nodes =
            interpolation_nodes(0, [0.0, 0.0], [1.0, 1.0], &inside, &frame, n).unwrap();
        assert_eq!(nodes.len(), (n + 1) * (n + 2) / 2);
        for p in &nodes {
            assert!(inside(*p), "node outside element");
        }
        let basis = Legendre2d::new(n);
        let mapped: Vec<[f64; 2]> = nodes.iter().map(|&p| frame.map(p)).collect();
        let vmat = basis.vandermonde(&mapped);
        let cond = cond2(&vmat);
        assert!(cond.is_finite());
        if n == 4 {
            assert!(cond < 1e4, "Vandermonde condition {cond}");
        }
    }
}

#[test]
fn cartesian_rule_tensor_gauss() {
    let rule = cartesian_volume_rule([-1.0, -1.0], [1.0, 1.0], 4);
    assert_eq!(rule.len(), 25);
    assert!((rule.volume() - 4.0).abs() < 1e-13);
    assert!((rule.integrate(|x, y| x * x * y * y) - 4.0 / 9.0).abs() < 1e-14);
    // Against the 1D tensor oracle on a scaled box.
    let r2 = cartesian_volume_rule([0.25, -0.5], [0.75, 0.5], 3);
    let ox = cutwave_testkit::adaptive_integrate(|x| x * x * x, 0.25, 0.75, 1e-14);
    let oy = cutwave_testkit::adaptive_integrate(|y| y * y, -0.5, 0.5, 1e-14);
    let got = r2.integrate(|x, y| x * x * x * y * y);
    assert!((got - ox * oy).abs() < 1e-14);
}

#[test]
fn circle_mesh_volumes_and_conditioning() {
    // Eigenvalue-experiment mesh: circle R = 0.699 at the origin on an 8x8
    // mesh of [-1,1]^2, fluid outside.
    let c = ParametricCurve::circle([0.0, 0.0], 0.699, false);
    let mesh = MeshBuilder::new(GridLines::uniform([-1.0, 1.0], [-1.0, 1.0], 8, 8), vec![c])
        .build()
        .unwrap();
    let area_exact = 4.0 - std::f64::consts::PI * 0.699 * 0.699;
    for n in 1..=4usize {
        let quad = cutwave_core::quadrature::MeshQuadrature::build(&mesh, n).unwrap();
        let total = quad.total_volume();
        assert!(
            (total - area_exact).abs() < 1e-8 * area_exact,
            "n={n}: total {total} vs {area_exact}"
        );
        assert!(quad.worst_kappa() <= 10.0, "n={n}: kappa {}", quad.worst_kappa());
        // Smallest cut cell volume ratio (full : smallest) is about 940.
        let full = mesh.dx() * mesh.dy();
        let min_cut = mesh
            .elements
            .iter()
            .enumerate()
            .filter(|(_, e)| e.kind == CellKind::Cut)
            .map(|(ei, _)| quad.element_volume(ei))
            .fold(f64::INFINITY, f64::min);
        let ratio = full / min_cut;
        assert!(
            (ratio - 940.0).abs() < 0.02 * 940.0,
            "n={n}: volume ratio {ratio}"
        );
    }
}

#[test]
fn cut_elements_against_green_oracle() {
    // Every cut element of the MMS circle mesh: fitted rule vs the
    // Green-theorem adaptive oracle on random degree <= 2N polynomials.
    let c = ParametricCurve::circle([-0.5, 0.0], 0.3, false);
    let mesh = MeshBuilder::new(GridLines::uniform([-1.0, 1.0], [-1.0, 1.0], 4, 4), vec![c])
        .build()
        .unwrap();
    let n = 2;
    let quad = cutwave_core::quadrature::MeshQuadrature::build(&mesh, n).unwrap();
    let exps = graded_exponents(2 * n);
    let mut state = 11u64;
    for (ei, e) in mesh.elements.iter().enumerate() {
        if e.kind != CellKind::Cut {
            continue;
        }
        // Oracle monomial integrals over this element's boundary loop.
        let mono: Vec<f64> = exps
            .iter()
            .map(|&(i, j)| {
                monomial_area_integral(&e.boundary, &mesh.curves, i as u32, j as u32, 1e-13)
            })
            .collect();
        for _ in 0..20 {
            let coeffs: Vec<f64> = exps.iter().map(|_| 2.0 * splitmix(&mut state) - 1.0).collect();
            let oracle: f64 = coeffs.iter().zip(&mono).map(|(c, m)| c * m).sum();
            let fitted = quad.volumes[ei].integrate(|x, y| {
                exps.iter()
                    .zip(&coeffs)
                    .map(|(&(i, j), c)| c * x.powi(i as i32) * y.powi(j as i32))
                    .sum::<f64>()
            });
            assert!(
                (fitted - oracle).abs() <= 1e-8 * oracle.abs().max(1e-3),
                "elem {ei}: {fitted} vs {oracle}"
            );
        }
    }
}

#[test]
fn sliver_cell_triggers_resampling_and_succeeds() {
    // The worst cells of the eigenvalue mesh are ~940x smaller than a full
    // cell; the base 40x40 lattice cannot seed them and refinement must kick
    // in. Success is simply a valid rule with the right volume.
    let c = ParametricCurve::circle([0.0, 0.0], 0.699, false);
    let mesh = MeshBuilder::new(GridLines::uniform([-1.0, 1.0], [-1.0, 1.0], 8, 8), vec![c])
        .build()
        .unwrap();
    let quad = cutwave_core::quadrature::MeshQuadrature::build(&mesh, 4).unwrap();
    for (ei, e) in mesh.elements.iter().enumerate() {
        if e.kind != CellKind::Cut {
            continue;
        }
        let oracle = monomial_area_integral(&e.boundary, &mesh.curves, 0, 0, 1e-13);
        let vol = quad.element_volume(ei);
        assert!((vol - oracle).abs() < 1e-10 * oracle.max(1e-6), "elem {ei}");
    }
}

#[test]
fn per_element_face_normals_close() {
    // Divergence theorem on f = const: the signed face-normal integral of
    // every element loop vanishes; tests face quadrature and orientation
    // jointly.
    let c = ParametricCurve::circle([0.0, 0.0], 0.699, false);
    let mesh = MeshBuilder::new(GridLines::uniform([-1.0, 1.0], [-1.0, 1.0], 8, 8), vec![c])
        .build()
        .unwrap();
    for e in &mesh.elements {
        let mut acc = [0.0f64, 0.0];
        for geom in &e.boundary {
            let q = face_rule(geom, &mesh.curves, 3).unwrap();
            for (w, n) in q.weights.iter().zip(&q.normals) {
                acc[0] += w * n[0];
                acc[1] += w * n[1];
            }
        }
        assert!(
            acc[0].abs() < 1e-10 && acc[1].abs() < 1e-10,
            "cell {:?}: residual {acc:?}",
            e.cell
        );
    }
}

#[test]
fn pacman_mesh_volume_matches_analytic_area() {
    // Fluid area = domain minus the sector-notched disk.
    let half_angle = std::f64::consts::PI / 6.0;
    let c = ParametricCurve::pacman([0.0, 0.0], 1.0, half_angle, false);
    let mesh = MeshBuilder::new(GridLines::uniform([-3.3, 3.0], [-3.0, 3.0], 33, 33), vec![c])
        .build()
        .unwrap();
    let quad = cutwave_core::quadrature::MeshQuadrature::build(&mesh, 2).unwrap();
    let body = std::f64::consts::PI * (1.0 - half_angle / std::f64::consts::PI);
    let exact = 6.3 * 6.0 - body;
    let total = quad.total_volume();
    assert!(
        (total - exact).abs() < 1e-8 * exact,
        "total {total} vs analytic {exact}"
    );
}
