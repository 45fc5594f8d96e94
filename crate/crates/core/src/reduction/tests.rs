use super::*;
use crate::geometry::{BoundaryPoint, Geometry};
use crate::ground_state::solve_ground_state;

fn setup(kappa: f64, omega: f64) -> (GroundState, ModelParams, FermiChart) {
    let a = 1.0 + omega * omega;
    let params = ModelParams::new(3, 4.0, a, omega, 1.0).unwrap();
    let gs = solve_ground_state(&params, 1e-10).unwrap();
    let chart = FermiChart::new(&Geometry::umbilic(3, kappa), &BoundaryPoint::Flat(vec![0.0, 0.0]), 1.3).unwrap();
    (gs, params, chart)
}

fn coarse() -> GridSpec {
    GridSpec { h_div: 6.0, core_z: 2.5, growth: 1.45 }
}

#[test]
fn cutoff_shape() {
    let r = 2.0;
    assert_eq!(cutoff(0.3, r), (1.0, 0.0, 0.0));
    assert_eq!(cutoff(r, r).0, 0.0);
    let mut max_slope: f64 = 0.0;
    for k in 1..2000 {
        let rho = 1.0 + k as f64 / 2000.0;
        let (c, d, d2) = cutoff(rho, r);
        let h = 1e-5;
        let fd = (cutoff(rho + h, r).0 - cutoff(rho - h, r).0) / (2.0 * h);
        let fd2 = (cutoff(rho + h, r).1 - cutoff(rho - h, r).1) / (2.0 * h);
        assert!((0.0..=1.0).contains(&c));
        assert!((fd - d).abs() < 1e-6 && (fd2 - d2).abs() < 1e-5);
        max_slope = max_slope.max(d.abs());
    }
    assert!((max_slope - 3.75 / r).abs() < 1e-3);
}

#[test]
fn spike_jet_matches_finite_differences() {
    let (gs, _, _) = setup(0.0, 0.0);
    let eps = 0.2;
    let y = [0.13, -0.05, 0.21];
    let (u, g, hm) = spike_jet(&gs, eps, &y);
    let val = |p: &[f64]| gs.value(p.iter().map(|v| v * v).sum::<f64>().sqrt() / eps);
    assert!((u - val(&y)).abs() < 1e-14);
    let h = 1e-4;
    for a in 0..3 {
        let mut yp = y;
        let mut ym = y;
        yp[a] += h;
        ym[a] -= h;
        let fd = (val(&yp) - val(&ym)) / (2.0 * h);
        assert!((fd - g[a]).abs() < 1e-6 * g[a].abs().max(1.0), "grad {a}");
        let gp = spike_jet(&gs, eps, &yp).1;
        let gm = spike_jet(&gs, eps, &ym).1;
        for b in 0..3 {
            let fd2 = (gp[b] - gm[b]) / (2.0 * h);
            assert!((fd2 - hm[a][b]).abs() < 1e-5 * hm[a][b].abs().max(1.0), "hess {a}{b}: {fd2} vs {}", hm[a][b]);
        }
    }
}

#[test]
fn ansatz_invariants_and_flat_residual() {
    let (gs, _, chart) = setup(0.0, 0.0);
    let eps = 0.1;
    let disc = discretize(&chart, eps, &coarse()).unwrap();
    let an = build_ansatz(&disc, &gs, eps, chart.radius).unwrap();
    let o = disc.grid.origin().unwrap();
    assert!((an.w[o] - gs.v0()).abs() < 1e-14);
    let mut worst_core: f64 = 0.0;
    for i in 0..disc.len() {
        let y = disc.grid.coords(i);
        let rho = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!(an.w[i] >= 0.0);
        if rho >= chart.radius {
            assert_eq!(an.w[i], 0.0);
        }
        if rho < 0.5 * chart.radius {
            worst_core = worst_core.max(an.residual[i].abs());
        }
    }
    // On the flat half-space the strong residual vanishes on the plateau
    // of the cutoff up to round-off.
    assert!(worst_core < 1e-11, "plateau residual {worst_core}");
}

#[test]
fn resolution_and_radius_checks() {
    let (gs, _, chart) = setup(0.0, 0.0);
    let eps = 0.1;
    let bad = GridSpec { h_div: 6.0, core_z: 0.1, growth: 1.6 };
    let disc = Discretization::new(&chart, bad.grid(3, eps, chart.radius).unwrap()).unwrap();
    assert!(matches!(build_ansatz(&disc, &gs, eps, chart.radius), Err(Error::ResolutionError { .. })));
    let disc = discretize(&chart, eps, &coarse()).unwrap();
    assert!(matches!(build_ansatz(&disc, &gs, 0.2, chart.radius), Err(Error::InvalidParams(_))));
    assert!(discretize(&chart, eps, &GridSpec { h_div: 4.0, ..coarse() }).is_err());
}

#[test]
fn kernel_symmetry_and_projection() {
    let (gs, _, chart) = setup(0.0, 0.0);
    let eps = 0.1;
    let disc = discretize(&chart, eps, &coarse()).unwrap();
    let kb = build_kernel(&disc, &gs, eps, chart.radius).unwrap();
    assert!(kb.condition < 1.0 + 1e-8, "flat Gram condition {}", kb.condition);
    assert!(kb.gram[0][1].abs() < 1e-12 * kb.gram[0][0]);
    let g = &disc.grid;
    let mut m = [0usize; 3];
    for idx in (0..g.len()).step_by(11) {
        g.multi(idx, &mut m);
        let refl = g.flat(&[g.dims[0] - 1 - m[0], m[1], m[2]]);
        assert_eq!(kb.z[0][idx], -kb.z[0][refl]);
    }
    let eps_n = |u: &[f64]| norm_eps(&disc, u, eps, 1.0);
    for zi in &kb.z {
        assert!(eps_n(&kb.project(zi)) < 1e-12 * eps_n(zi));
    }
    let u: Vec<f64> = (0..g.len()).map(|i| kb.z[0][i] + 0.3 * kb.z[1][i] + (i as f64 * 0.01).sin() * 1e-2).collect();
    let p1 = kb.project(&u);
    let p2 = kb.project(&p1);
    let d: Vec<f64> = p1.iter().zip(&p2).map(|(a, b)| a - b).collect();
    assert!(eps_n(&d) < 1e-12 * eps_n(&p1));
    assert!(eps_n(&p1) <= eps_n(&u));
    assert!(kb.moments(&p1).iter().all(|c| c.abs() < 1e-10 * eps_n(&p1)));
}

#[test]
fn first_iterate_and_convergence() {
    let (gs, params, chart) = setup(0.5, 0.5);
    let eps = 0.1;
    let opts = ReductionOptions { grid: coarse(), ..Default::default() };
    let disc = discretize(&chart, eps, &opts.grid).unwrap();
    let red = Reducer::new(&disc, &gs, params, eps, chart.radius, opts).unwrap();
    // φ₁ = L⁻¹(R + S(0)).
    let st = red.psi(&vec![0.0; disc.len()], None).unwrap();
    let src: Vec<f64> = red.ansatz.residual.iter().zip(red.s_source(&st)).map(|(a, b)| a + b).collect();
    let (phi1, _) = red.apply_linv(&src, None).unwrap();
    let mut one = opts;
    one.max_iter = 1;
    one.tol = f64::INFINITY;
    let red1 = Reducer::new(&disc, &gs, params, eps, chart.radius, one).unwrap();
    let s1 = red1.solve_phi().unwrap();
    let d: Vec<f64> = phi1.iter().zip(&s1.phi).map(|(a, b)| a - b).collect();
    assert!(red.norm(&d) < 1e-8 * red.norm(&phi1));
    let state = red.solve_phi().unwrap();
    assert!(state.orthogonality < 1e-8, "orthogonality {}", state.orthogonality);
    assert!(state.trace.len() >= 2);
    for s in &state.trace[1..] {
        assert!(s.ratio < 1.0, "contraction ratio {}", s.ratio);
    }
    assert!(state.phi_norm > 0.0 && state.phi_norm < 0.1 * state.w_norm);
    assert!(state.r_norm > 0.0 && state.s_norm > 0.0 && state.psi_w_h1 > 0.0);
    let json = state.trace_json();
    assert!(json.contains("\"delta\""));
}
