use super::*;
use crate::geometry::FermiChart;
use crate::geometry::{BoundaryPoint, Geometry, GeometryKind, SyntheticSpec};

fn synthetic_disc(n: usize, k: [f64; 3], quad: f64, h: f64) -> Discretization {
    let mut hm = vec![vec![0.0; n - 1]; n - 1];
    for i in 0..n - 1 {
        hm[i][i] = k[i];
    }
    let geom = Geometry { n, kind: GeometryKind::Synthetic(SyntheticSpec { h: hm, quadratic: quad, bump: None }) };
    let chart = FermiChart::new(&geom, &BoundaryPoint::Flat(vec![0.0; n - 1]), 1.0).unwrap();
    let grid = Grid::graded(n, 1.0, AxisSpec { h0: h, core: 1.0, ratio: 1.0 }).unwrap();
    Discretization::new(&chart, grid).unwrap()
}

#[test]
fn constant_field_sees_only_mass() {
    let d = synthetic_disc(3, [0.0; 3], 0.0, 0.125);
    let op = assemble_op(&d, 0.01, &vec![2.0; d.len()], Boundary::NEUMANN).unwrap();
    let u = vec![3.0; d.len()];
    let mut y = vec![0.0; d.len()];
    op.apply(&u, &mut y);
    for i in 0..d.len() {
        assert!((y[i] - 6.0 * d.mass[i]).abs() < 1e-13);
    }
    let one = Field::from_values(&d, vec![1.0; d.len()], Boundary::NEUMANN).unwrap();
    let eps = 0.3;
    let val = inner_eps(&d, &one, &one, eps, 2.0).unwrap();
    assert!((val - 2.0 * 4.0 / eps.powi(3)).abs() < 1e-10 * val);
}

#[test]
fn operator_symmetric_on_curved_chart() {
    let geom = Geometry::spheroid(1.0, 1.5);
    let chart = FermiChart::new(&geom, &BoundaryPoint::Angles { theta: 0.7, phi: 0.3 }, 0.4).unwrap();
    let grid = Grid::graded(3, 0.4, AxisSpec { h0: 0.05, core: 0.1, ratio: 1.4 }).unwrap();
    let d = Discretization::new(&chart, grid).unwrap();
    assert!(d.stiffness.symmetry_defect() < 1e-15);
    let op = assemble_op(&d, 1.0, &vec![1.0; d.len()], Boundary::NEUMANN).unwrap();
    assert!(op.symmetry_defect() < 1e-15);
    // Constants lie in the kernel of the stiffness.
    let mut y = vec![0.0; d.len()];
    d.stiffness.matvec(&vec![1.0; d.len()], &mut y);
    assert!(y.iter().all(|v| v.abs() < 1e-13));
    // Positive semidefinite on a random-ish vector; integration by parts.
    let u: Vec<f64> = (0..d.len()).map(|i| ((i * 7919) % 101) as f64 / 101.0 - 0.5).collect();
    let mut au = vec![0.0; d.len()];
    op.apply(&u, &mut au);
    let lhs: f64 = u.iter().zip(&au).map(|(a, b)| a * b).sum();
    let rhs = d.stiffness_form(&u, &u) + d.mass_form(&u, &u);
    assert!(lhs > 0.0 && (lhs - rhs).abs() < 1e-12 * lhs);
}

#[test]
fn coefficient_checks() {
    let d = synthetic_disc(3, [0.0; 3], 0.0, 0.25);
    let mut c = vec![1.0; d.len()];
    c[3] = -1.0;
    assert!(matches!(assemble_op(&d, 1.0, &c, Boundary::NEUMANN), Err(Error::NonPositiveCoefficient(_))));
    assert!(assemble_op(&d, 1.0, &vec![0.0; d.len()], Boundary::NEUMANN).is_err());
    assert!(assemble_op(&d, 1.0, &vec![0.0; d.len()], Boundary::DIRICHLET).is_ok());
}

/// Manufactured solution `u* = cos(π y_n / 2) Π cos²(π y_i / 2)` of
/// `-Δ_g u + u = f` on a curved diagonal synthetic metric, Dirichlet on the
/// truncation faces, natural Neumann on `y_n = 0`.
fn mms_error(h: f64) -> f64 {
    let k = [0.4, -0.3, 0.0];
    let quad = 0.2;
    let d = synthetic_disc(3, k, quad, h);
    let pi = std::f64::consts::PI;
    let bc = Boundary { physical: FaceKind::Neumann, truncation: FaceKind::Dirichlet };
    let ustar = |y: &[f64]| (pi * y[2] / 2.0).cos() * (pi * y[0] / 2.0).cos().powi(2) * (pi * y[1] / 2.0).cos().powi(2);
    let source = |y: &[f64]| {
        let c = |t: f64| (pi * t / 2.0).cos().powi(2);
        let c2 = |t: f64| -0.5 * pi * pi * (pi * t).cos();
        let cn = (pi * y[2] / 2.0).cos();
        let dn = -pi / 2.0 * (pi * y[2] / 2.0).sin();
        let d2n = -pi * pi / 4.0 * cn;
        let gi = |i: usize| 1.0 + 2.0 * k[i] * y[2] + quad * y[2] * y[2];
        let dgi = |i: usize| 2.0 * k[i] + 2.0 * quad * y[2];
        let dn_ln_sqrt_g = -0.5 * (dgi(0) / gi(0) + dgi(1) / gi(1));
        let lap = gi(0) * c2(y[0]) * c(y[1]) * cn + gi(1) * c(y[0]) * c2(y[1]) * cn + c(y[0]) * c(y[1]) * (d2n + dn_ln_sqrt_g * dn);
        -lap + ustar(y)
    };
    let op = assemble_op(&d, 1.0, &vec![1.0; d.len()], bc).unwrap();
    let f = Field::from_fn(&d, bc, source);
    let u = solve_linear(&d, &op, &f, 1e-12).unwrap();
    let exact = Field::from_fn(&d, bc, ustar);
    u.values.iter().zip(&exact.values).fold(0.0, |m, (a, b)| m.max((a - b).abs()))
}

#[test]
fn manufactured_solution_second_order() {
    let e: Vec<f64> = [0.25, 0.125, 0.0625].iter().map(|h| mms_error(*h)).collect();
    let o1 = (e[0] / e[1]).log2();
    let o2 = (e[1] / e[2]).log2();
    assert!(o2 >= 1.9, "orders {o1:.3} {o2:.3}, errors {e:?}");
}

#[test]
fn christoffel_vector_matches_analytic_on_synthetic_metric() {
    let k = [0.4, -0.3, 0.0];
    let d = synthetic_disc(3, k, 0.2, 0.125);
    for i in (0..d.len()).step_by(37) {
        let y = d.grid.coords(i);
        let gi = |j: usize| 1.0 + 2.0 * k[j] * y[2] + 0.2 * y[2] * y[2];
        let dgi = |j: usize| 2.0 * k[j] + 0.4 * y[2];
        let expect = -0.5 * (dgi(0) / gi(0) + dgi(1) / gi(1));
        let g = &d.metric.gamma[i * 3..i * 3 + 3];
        assert!(g[0].abs() < 1e-12 && g[1].abs() < 1e-12);
        assert!((g[2] - expect).abs() < 1e-12);
    }
}

#[test]
fn christoffel_vector_on_spheroid_converges() {
    // Γ^k from node finite differences vs the same quantity from a finer grid.
    let geom = Geometry::spheroid(1.0, 1.5);
    let chart = FermiChart::new(&geom, &BoundaryPoint::Angles { theta: 0.7, phi: 0.3 }, 0.4).unwrap();
    let coarse = Discretization::new(&chart, Grid::graded(3, 0.4, AxisSpec { h0: 0.1, core: 0.4, ratio: 1.0 }).unwrap()).unwrap();
    let fine = Discretization::new(&chart, coarse.grid.refined().unwrap()).unwrap();
    let mut worst: f64 = 0.0;
    let mut scale: f64 = 0.0;
    let mut m = [0usize; 3];
    for i in 0..coarse.len() {
        coarse.grid.multi(i, &mut m);
        let j = fine.grid.flat(&[2 * m[0], 2 * m[1], 2 * m[2]]);
        for b in 0..2 {
            worst = worst.max((coarse.metric.gamma[3 * i + b] - fine.metric.gamma[3 * j + b]).abs());
            scale = scale.max(fine.metric.gamma[3 * j + b].abs());
        }
    }
    assert!(scale > 1e-3, "tangential Γ should be nonzero off the base point");
    assert!(worst < 0.05 * scale, "Γ mismatch {worst} vs scale {scale}");
}

#[test]
fn solver_trivialities() {
    let d = synthetic_disc(3, [0.5, 0.5, 0.0], 0.0, 0.125);
    let op = assemble_op(&d, 0.04, &vec![1.0; d.len()], Boundary::NEUMANN).unwrap();
    let z = Field::zeros(&d, Boundary::NEUMANN);
    assert_eq!(solve_linear(&d, &op, &z, 1e-10).unwrap().max_abs(), 0.0);
    let f1 = Field::from_fn(&d, Boundary::NEUMANN, |y| (-(y[0] * y[0] + y[1] * y[1] + y[2] * y[2]) * 10.0).exp());
    let mut f2 = f1.clone();
    f2.values.iter_mut().for_each(|v| *v *= 3.0);
    let u1 = solve_linear(&d, &op, &f1, 1e-12).unwrap();
    let u2 = solve_linear(&d, &op, &f2, 1e-12).unwrap();
    let diff = u1.values.iter().zip(&u2.values).fold(0.0f64, |m, (a, b)| m.max((3.0 * a - b).abs()));
    assert!(diff < 1e-9 * u2.max_abs());
}

#[test]
fn istar_self_adjoint_and_weak_identity() {
    let d = synthetic_disc(3, [0.5, 0.2, 0.0], 0.0, 0.1);
    let eps = 0.2;
    let msq = 1.3;
    let v = Field::from_fn(&d, Boundary::NEUMANN, |y| (-(y[0] * y[0] + y[2] * y[2]) * 8.0).exp());
    let w = Field::from_fn(&d, Boundary::NEUMANN, |y| y[1] * (-(y[1] * y[1] + y[2] * y[2]) * 8.0).exp() + 0.1);
    let iv = adjoint_istar(&d, eps, msq, &v, 1e-13).unwrap();
    let iw = adjoint_istar(&d, eps, msq, &w, 1e-13).unwrap();
    let a = inner_eps(&d, &iv, &w, eps, msq).unwrap();
    let b = inner_eps(&d, &iw, &v, eps, msq).unwrap();
    assert!((a - b).abs() < 1e-9 * a.abs().max(b.abs()));
    // ⟨i*(v), φ⟩_ε = ε^{-n} ∫ v φ.
    let weak = d.mass_form(&v.values, &w.values) / eps.powi(3);
    let direct = inner_eps(&d, &iv, &w, eps, msq).unwrap();
    assert!((weak - direct).abs() < 1e-9 * weak.abs());
    let zero = adjoint_istar(&d, eps, msq, &Field::zeros(&d, Boundary::NEUMANN), 1e-10).unwrap();
    assert_eq!(zero.max_abs(), 0.0);
}

#[test]
fn grid_mismatch_detected() {
    let d1 = synthetic_disc(3, [0.0; 3], 0.0, 0.25);
    let d2 = synthetic_disc(3, [0.0; 3], 0.0, 0.125);
    let u = Field::zeros(&d1, Boundary::NEUMANN);
    let v = Field::zeros(&d2, Boundary::NEUMANN);
    assert!(matches!(inner_eps(&d1, &u, &v, 0.1, 1.0), Err(Error::GridMismatch(_))));
}

#[test]
fn lp_norm_scaling_and_homogeneity() {
    let d = synthetic_disc(3, [0.0; 3], 0.0, 0.125);
    let u: Vec<f64> = (0..d.len()).map(|i| (i % 13) as f64 - 6.0).collect();
    let c: Vec<f64> = u.iter().map(|x| -2.5 * x).collect();
    let a = lp_norm_eps(&d, &u, 3.0, 0.2);
    assert!((lp_norm_eps(&d, &c, 3.0, 0.2) - 2.5 * a).abs() < 1e-12 * a);
    assert_eq!(lp_norm_eps(&d, &vec![0.0; d.len()], 3.0, 0.2), 0.0);
    let one = vec![1.0; d.len()];
    assert!((lp_norm_eps(&d, &one, 2.0, 0.5) - (4.0 / 0.125f64).sqrt()).abs() < 1e-12);
}

#[test]
fn minres_solves_indefinite_system() {
    let d = synthetic_disc(3, [0.0; 3], 0.0, 0.125);
    let coeff: Vec<f64> = (0..d.len()).map(|i| if d.grid.coords(i)[2] < 0.3 { -3.0 } else { 1.0 }).collect();
    let op = EllipticOp::indefinite(&d, 0.05, &coeff, Boundary::NEUMANN);
    let x_true: Vec<f64> = (0..d.len()).map(|i| (i as f64 * 0.37).sin()).collect();
    let mut b = vec![0.0; d.len()];
    op.apply(&x_true, &mut b);
    let (x, stats) = minres(&op, &b, None, 1e-12, 20_000).unwrap();
    assert!(stats.residual < 1e-10, "{stats:?}");
    let err = x.iter().zip(&x_true).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    assert!(err < 1e-6, "err {err}");
}
