use super::*;
use crate::fields::{norm_eps, Boundary};
use crate::ground_state::solve_ground_state;
use crate::reduction::GridSpec;

fn chart_disc(eps: f64) -> Discretization {
    let chart = FermiChart::new(&Geometry::umbilic(3, 0.3), &BoundaryPoint::Flat(vec![0.0, 0.0]), 1.0).unwrap();
    discretize(&chart, eps, &GridSpec { h_div: 6.0, core_z: 2.0, growth: 1.5 }).unwrap()
}

fn bump(disc: &Discretization, eps: f64, amp: f64) -> Vec<f64> {
    (0..disc.len())
        .map(|i| {
            let y = disc.grid.coords(i);
            amp * (-y.iter().map(|t| t * t).sum::<f64>() / (eps * eps)).exp()
        })
        .collect()
}

#[test]
fn quadratic_part_of_j_is_half_the_norm() {
    let eps = 0.1;
    let disc = chart_disc(eps);
    let params = ModelParams::new(3, 4.0, 1.0, 0.0, 1.0).unwrap();
    let u = bump(&disc, eps, -0.7);
    let nrm = norm_eps(&disc, &u, eps, params.msq());
    let j = energy_j_raw(&disc, &u, eps, &params);
    assert!((j - 0.5 * nrm * nrm).abs() < 1e-12 * j.abs());
    // The potential part only sees u⁺.
    let up = bump(&disc, eps, 0.7);
    let pot: f64 = disc.mass.iter().zip(&up).map(|(m, v)| m * v.powi(4)).sum::<f64>() / 4.0 / eps.powi(3);
    assert!((energy_j_raw(&disc, &up, eps, &params) - (0.5 * nrm * nrm - pot)).abs() < 1e-12 * pot);
}

#[test]
fn coupling_gradient_matches_finite_differences() {
    let eps = 0.1;
    let disc = chart_disc(eps);
    let q = 0.8;
    let es = Electrostatics::new(&disc, q, PsiVariant::NeumannProca, 1e-13).unwrap();
    let u = bump(&disc, eps, 1.0);
    let h: Vec<f64> = (0..disc.len()).map(|i| (1.0 + (disc.grid.coords(i)[0] / eps).sin()) * u[i]).collect();
    let g_at = |t: f64| {
        let v: Vec<f64> = u.iter().zip(&h).map(|(a, b)| a + t * b).collect();
        let st = es.psi(&v, None).unwrap();
        coupling_g_raw(&disc, &v, &st.psi, eps, q)
    };
    let st = es.psi(&u, None).unwrap();
    let exact = coupling_g_grad_raw(&disc, &u, &st.psi, &h, eps, q);
    let err = |t: f64| ((g_at(t) - g_at(-t)) / (2.0 * t) - exact).abs();
    let (e1, e2) = (err(0.04), err(0.02));
    assert!(e2 < 1e-3 * exact.abs(), "relative error {}", e2 / exact.abs());
    assert!((e1 / e2).log2() > 1.8, "order {}", (e1 / e2).log2());
}

#[test]
fn field_wrappers_check_the_grid() {
    let eps = 0.12;
    let disc = chart_disc(eps);
    let other = chart_disc(0.1);
    let params = ModelParams::new(3, 4.0, 1.25, 0.5, 1.0).unwrap();
    let u = Field::zeros(&other, Boundary::NEUMANN);
    assert!(matches!(energy_j(&disc, &u, eps, &params), Err(Error::GridMismatch(_))));
    let u = Field::from_values(&disc, bump(&disc, eps, 0.5), Boundary::NEUMANN).unwrap();
    let g = coupling_g(&disc, &u, eps, &params, PsiVariant::NeumannProca, 1e-12).unwrap();
    assert!(g > 0.0);
    let e = energies(&disc, &u.values, &[], eps, &params);
    assert_eq!(e.g, 0.0);
    assert_eq!(e.i, e.j);
}

fn sample(eps: f64, i: f64, h: f64) -> ReducedSample {
    ReducedSample {
        xi: BoundaryPoint::Flat(vec![0.0, 0.0]),
        eps,
        i_tilde: i,
        grad: vec![],
        h_xi: h,
        delta_y: eps / 4.0,
        energy: EnergyBreakdown { j: i, g: 0.0, i },
        phi_norm: 0.0,
        phi: vec![],
    }
}

#[test]
fn expansion_fit_needs_four_samples() {
    let s: Vec<_> = [0.1, 0.08, 0.06].iter().map(|e| sample(*e, 9.0 - 3.0 * e, 0.5)).collect();
    assert!(matches!(expansion_fit(&s, 6.0), Err(Error::InsufficientSamples { got: 3, need: 4 })));
    let s: Vec<_> = [0.1, 0.08, 0.06, 0.04].iter().map(|e| sample(*e, 9.0 - 3.0 * e, 0.5)).collect();
    let fit = expansion_fit(&s, 6.0).unwrap();
    assert!((fit.slope + 3.0).abs() < 1e-12 && (fit.c_est - 9.0).abs() < 1e-12);
    assert_eq!(fit.predicted_slope, -3.0);
    let csv = samples_csv(&s);
    assert!(csv.starts_with("xi_1,xi_2,eps,I_tilde,H,delta_y\n"));
    assert_eq!(csv.lines().count(), 5);
}

#[test]
fn critical_points_of_h() {
    let g = Geometry::spheroid(1.0, 1.5);
    let (p, d) = nearest_critical_point(&g, &BoundaryPoint::Angles { theta: 0.2, phi: 0.3 }).unwrap();
    assert_eq!(p, BoundaryPoint::Angles { theta: 0.0, phi: 0.3 });
    // Small-angle arc length ≈ a θ (1 + (c² - a²) θ² / (6a²)).
    assert!((d - 0.2 * (1.0 + 1.25 * 0.04 / 6.0)).abs() < 1e-4, "{d}");
    let (p, _) = nearest_critical_point(&g, &BoundaryPoint::Angles { theta: 1.4, phi: 0.0 }).unwrap();
    assert_eq!(p, BoundaryPoint::Angles { theta: std::f64::consts::FRAC_PI_2, phi: 0.0 });
    assert!(nearest_critical_point(&Geometry::ball(1.0), &BoundaryPoint::Angles { theta: 0.2, phi: 0.0 }).is_none());
    assert!(nearest_critical_point(&Geometry::umbilic(3, 0.4), &BoundaryPoint::Flat(vec![0.1, 0.0])).is_none());
}

#[test]
fn flat_reduced_functional_has_no_gradient() {
    let params = ModelParams::uncoupled(3, 4.0, 1.0).unwrap();
    let gs = solve_ground_state(&params, 1e-10).unwrap();
    let settings = RunSettings {
        radius: 1.2,
        opts: ReductionOptions { grid: GridSpec { h_div: 6.0, core_z: 2.0, growth: 1.5 }, ..Default::default() },
    };
    let s = reduced_value(&Geometry::flat(3), &BoundaryPoint::Flat(vec![0.0, 0.0]), &gs, &params, 0.1, &settings, true).unwrap();
    assert_eq!(s.grad.len(), 2);
    assert!(s.grad.iter().all(|g| g.abs() < 1e-10), "{:?}", s.grad);
    // Leading order: the half-space energy C.
    let c = compute_constants(&gs).unwrap().c_energy;
    assert!((s.i_tilde - c).abs() < 0.05 * c, "{} vs {c}", s.i_tilde);
}
