//! Batch scaling studies: each asymptotic inequality `‖X‖ ≤ c ε^k` becomes a
//! one-sided log-log slope test `slope ≥ k - 0.25`, each boundedness claim a
//! max/min ratio test, and the half-space limit `ṽ_ε/ε² → γ` a monotone
//! distance test. Reports serialise to JSON and flat CSV and always carry the
//! threshold next to the measured value.

use serde::Serialize;

use crate::electrostatics::Electrostatics;
use crate::error::{Error, Result};
use crate::fields::{lp_norm_eps, norm_eps, Discretization};
use crate::functional::{coupling_g_raw, RunSettings};
use crate::geometry::{BoundaryPoint, FermiChart, Geometry, GeometryKind};
use crate::ground_state::{solve_gamma, GroundState};
use crate::params::ModelParams;
use crate::quad::loglog_slope;
use crate::reduction::{build_ansatz, cutoff, discretize, Reducer};

/// Uniform slack of the one-sided slope tests.
pub const SLOPE_TOLERANCE: f64 = 0.25;

/// Largest admissible max/min ratio of a quantity claimed bounded.
pub const BOUNDED_RATIO: f64 = 1.5;

/// How a row is judged.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    /// Log-log slope in ε at least `predicted - SLOPE_TOLERANCE`.
    Slope,
    /// `max/min` over the sweep below the threshold.
    Bounded,
    /// Strictly decreasing as ε decreases; `measured` is the largest
    /// successive ratio.
    Decreasing,
    /// Magnitude below an absolute threshold.
    Vanishing,
}

/// One measured quantity across the ε sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    pub quantity: String,
    pub kind: CheckKind,
    /// Per-ε values, in sweep order.
    pub values: Vec<f64>,
    pub measured: f64,
    /// Predicted exponent (slope rows only).
    pub predicted: Option<f64>,
    pub threshold: f64,
    pub pass: bool,
}

impl ReportRow {
    /// Slope row: `measured = d log(value) / d log(ε) ≥ predicted - 0.25`.
    pub fn slope(quantity: &str, eps: &[f64], values: Vec<f64>, predicted: f64) -> Self {
        let measured = loglog_slope(eps, &values).unwrap_or(f64::NAN);
        let threshold = predicted - SLOPE_TOLERANCE;
        ReportRow { quantity: quantity.into(), kind: CheckKind::Slope, pass: measured >= threshold, measured, predicted: Some(predicted), threshold, values }
    }

    /// Boundedness row: `max/min < threshold`.
    pub fn bounded(quantity: &str, values: Vec<f64>, threshold: f64) -> Self {
        let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
        let measured = if min > 0.0 { max / min } else { f64::INFINITY };
        ReportRow { quantity: quantity.into(), kind: CheckKind::Bounded, pass: measured < threshold, measured, predicted: None, threshold, values }
    }

    /// Monotonicity row over a sweep ordered by decreasing ε.
    pub fn decreasing(quantity: &str, values: Vec<f64>) -> Self {
        let measured = values.windows(2).map(|w| w[1] / w[0]).fold(f64::NEG_INFINITY, f64::max);
        ReportRow { quantity: quantity.into(), kind: CheckKind::Decreasing, pass: measured < 1.0, measured, predicted: None, threshold: 1.0, values }
    }

    /// Vanishing row: `max |value| < threshold`.
    pub fn vanishing(quantity: &str, values: Vec<f64>, threshold: f64) -> Self {
        let measured = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        ReportRow { quantity: quantity.into(), kind: CheckKind::Vanishing, pass: measured < threshold, measured, predicted: None, threshold, values }
    }
}

/// A named scaling report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub name: String,
    pub eps: Vec<f64>,
    pub rows: Vec<ReportRow>,
}

impl Report {
    /// Row by quantity name.
    pub fn row(&self, quantity: &str) -> Option<&ReportRow> {
        self.rows.iter().find(|r| r.quantity == quantity)
    }

    /// Whether every row passes.
    pub fn all_pass(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialises")
    }

    /// Summary CSV: `quantity,kind,measured,predicted,threshold,pass`.
    pub fn summary_csv(&self) -> String {
        let mut out = String::from("quantity,kind,measured,predicted,threshold,pass\n");
        for r in &self.rows {
            let kind = serde_json::to_value(r.kind).expect("kind serialises");
            let pred = r.predicted.map(|p| format!("{p:.12e}")).unwrap_or_default();
            out.push_str(&format!("{},{},{:.12e},{},{:.12e},{}\n", r.quantity, kind.as_str().unwrap_or(""), r.measured, pred, r.threshold, r.pass));
        }
        out
    }

    /// Long-form values CSV: `quantity,eps,value`.
    pub fn values_csv(&self) -> String {
        let mut out = String::from("quantity,eps,value\n");
        for r in &self.rows {
            for (e, v) in self.eps.iter().zip(&r.values) {
                out.push_str(&format!("{},{:.12e},{:.12e}\n", r.quantity, e, v));
            }
        }
        out
    }
}

fn check_sweep(eps: &[f64]) -> Result<()> {
    if eps.len() < 4 {
        return Err(Error::InsufficientSamples { got: eps.len(), need: 4 });
    }
    if eps.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::InvalidParams("ε sweep must be strictly decreasing".into()));
    }
    Ok(())
}

/// `ε ‖∂W_{ε,ξ(y)}/∂y_h‖_ε` at `y = 0`, by central differences in `y` on a
/// translation-invariant synthetic chart, where moving `ξ` by `y` shifts the
/// profile by `-y` in chart coordinates. `None` for other geometries.
pub fn ansatz_shift_derivative(geom: &Geometry, disc: &Discretization, gs: &GroundState, eps: f64, radius: f64, axis: usize) -> Option<f64> {
    let GeometryKind::Synthetic(s) = &geom.kind else { return None };
    if s.bump.is_some() {
        return None;
    }
    let n = disc.grid.n;
    let delta = 0.25 * eps;
    let shifted = |sign: f64| -> Vec<f64> {
        (0..disc.len())
            .map(|i| {
                let mut y = disc.grid.coords(i);
                y[axis] -= sign * delta;
                let rho = y.iter().map(|t| t * t).sum::<f64>().sqrt();
                gs.value(rho / eps) * cutoff(rho, radius).0
            })
            .collect()
    };
    let (wp, wm) = (shifted(1.0), shifted(-1.0));
    let d: Vec<f64> = wp.iter().zip(&wm).map(|(a, b)| (a - b) / (2.0 * delta)).collect();
    debug_assert!(axis < n - 1);
    Some(eps * norm_eps(disc, &d, eps, gs.params.msq()))
}

/// Per-ε measurements of the scaling suite.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingSample {
    pub eps: f64,
    pub nodes: usize,
    pub phi_norm: f64,
    pub r_norm: f64,
    pub s_norm: f64,
    pub n_norm: f64,
    pub psi_w_h1: f64,
    pub g_w: f64,
    pub g_u: f64,
    pub shift_derivative: Option<f64>,
}

/// Reduce at `xi` for every ε and turn the measurements into a report:
/// `‖R‖_ε ≥ 1 + n/p'`, `‖ψ(W)‖_{H¹} ≥ (n+2)/2`, `‖S‖_ε ≥ 2`,
/// `G(W) ≥ n/6 + 1` and `|G(W+φ) - G(W)| ≥ 1` as slopes; `‖φ‖_ε/ε²` and
/// `‖N‖_ε/(‖φ‖²_ε + ‖φ‖^{p-1}_ε)` as bounded; `ε ‖∂_y W‖_ε` with slope ≥ 0.
/// Coupling rows are omitted when `ω = 0`.
pub fn scaling_suite(name: &str, geom: &Geometry, xi: &BoundaryPoint, eps_list: &[f64], gs: &GroundState, params: &ModelParams, settings: &RunSettings) -> Result<(Report, Vec<ScalingSample>)> {
    check_sweep(eps_list)?;
    let chart = FermiChart::new(geom, xi, settings.radius)?;
    let mut samples = Vec::new();
    for &eps in eps_list {
        let disc = discretize(&chart, eps, &settings.opts.grid)?;
        let red = Reducer::new(&disc, gs, *params, eps, settings.radius, settings.opts)?;
        let st = red.solve_phi()?;
        let (g_w, g_u) = if params.omega != 0.0 {
            let es = Electrostatics::new(&disc, params.q, settings.opts.variant, settings.opts.krylov_tol)?;
            let pw = es.psi(&st.w, None)?;
            let u = st.solution();
            (coupling_g_raw(&disc, &st.w, &pw.psi, eps, params.q), coupling_g_raw(&disc, &u, &st.psi, eps, params.q))
        } else {
            (0.0, 0.0)
        };
        samples.push(ScalingSample {
            eps,
            nodes: st.nodes,
            phi_norm: st.phi_norm,
            r_norm: st.r_norm,
            s_norm: st.s_norm,
            n_norm: st.n_norm,
            psi_w_h1: st.psi_w_h1,
            g_w,
            g_u,
            shift_derivative: ansatz_shift_derivative(geom, &disc, gs, eps, settings.radius, 0),
        });
    }
    let n = params.n as f64;
    let col = |f: &dyn Fn(&ScalingSample) -> f64| -> Vec<f64> { samples.iter().map(f).collect() };
    let mut rows = vec![ReportRow::slope("r_norm", eps_list, col(&|s| s.r_norm), 1.0 + n / params.p_conjugate())];
    if params.omega != 0.0 {
        rows.push(ReportRow::slope("psi_w_h1", eps_list, col(&|s| s.psi_w_h1), (n + 2.0) / 2.0));
        rows.push(ReportRow::slope("s_norm", eps_list, col(&|s| s.s_norm), 2.0));
        rows.push(ReportRow::slope("g_w", eps_list, col(&|s| s.g_w), n / 6.0 + 1.0));
        rows.push(ReportRow::slope("g_correction", eps_list, col(&|s| (s.g_u - s.g_w).abs()), 1.0));
    }
    rows.push(ReportRow::bounded("phi_over_eps2", col(&|s| s.phi_norm / (s.eps * s.eps)), BOUNDED_RATIO));
    let p = params.p;
    rows.push(ReportRow::bounded("n_constant", col(&|s| s.n_norm / (s.phi_norm.powi(2) + s.phi_norm.powf(p - 1.0))), 2.0));
    if samples.iter().all(|s| s.shift_derivative.is_some()) {
        rows.push(ReportRow::slope("eps_shift_derivative", eps_list, col(&|s| s.shift_derivative.unwrap_or(f64::NAN)), 0.0));
    }
    Ok((Report { name: name.into(), eps: eps_list.to_vec(), rows }, samples))
}

/// Per-ε measurements of the half-space limit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GammaSample {
    pub eps: f64,
    /// `|ṽ_ε|_{L^{2*}(R^n_+)}`.
    pub l2star: f64,
    /// Relative `L²` distance between `ṽ_ε/ε²` and `γ` on `|z| ≤ z_max`.
    pub distance: f64,
    /// `|∫ γ U ∂_{z_1} U| / ∫ γ U |∂_{z_1} U|` on the chart nodes.
    pub odd_moment: f64,
}

/// Pull `ψ(W_{ε,ξ})` back to `z = y/ε` as `ṽ_ε` and compare with the radial
/// limit `γ`: the `L^{2*}` norm must scale like `ε²`, and the compact-set
/// distance between `ṽ_ε/ε²` and `γ` must decrease as ε decreases.
pub fn gamma_convergence(geom: &Geometry, xi: &BoundaryPoint, gs: &GroundState, eps_list: &[f64], params: &ModelParams, settings: &RunSettings, z_max: f64) -> Result<(Report, Vec<GammaSample>)> {
    if eps_list.len() < 3 {
        return Err(Error::InsufficientSamples { got: eps_list.len(), need: 3 });
    }
    if eps_list.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::InvalidParams("ε sweep must be strictly decreasing".into()));
    }
    let q = params.q;
    let gamma = solve_gamma(gs, q)?;
    let chart = FermiChart::new(geom, xi, settings.radius)?;
    let two_star = params.sobolev_critical();
    let mut samples = Vec::new();
    for &eps in eps_list {
        let disc = discretize(&chart, eps, &settings.opts.grid)?;
        let w = build_ansatz(&disc, gs, eps, settings.radius)?.w;
        let psi = Electrostatics::new(&disc, q, settings.opts.variant, settings.opts.krylov_tol)?.psi(&w, None)?.psi;
        let l2star = lp_norm_eps(&disc, &psi, two_star, eps);
        let (mut num, mut den, mut odd, mut odd_abs) = (0.0, 0.0, 0.0, 0.0);
        for i in 0..disc.len() {
            let y = disc.grid.coords(i);
            let r = y.iter().map(|t| t * t).sum::<f64>().sqrt() / eps;
            let m = disc.mass[i];
            let (u, du) = { let (v, dv, _) = gs.eval(r); (v, dv) };
            let g = gamma.value(r);
            if r > 0.0 {
                let d1 = du * y[0] / (eps * r);
                odd += m * g * u * d1;
                odd_abs += m * (g * u * d1).abs();
            }
            if r <= z_max {
                let d = psi[i] / (eps * eps) - g;
                num += m * d * d;
                den += m * g * g;
            }
        }
        samples.push(GammaSample {
            eps,
            l2star,
            distance: (num / den).sqrt(),
            odd_moment: if odd_abs > 0.0 { odd.abs() / odd_abs } else { 0.0 },
        });
    }
    let rows = vec![
        ReportRow::slope("v_tilde_l2star", eps_list, samples.iter().map(|s| s.l2star).collect(), 2.0),
        ReportRow::decreasing("gamma_distance", samples.iter().map(|s| s.distance).collect()),
        ReportRow::vanishing("odd_moment", samples.iter().map(|s| s.odd_moment).collect(), 1e-10),
    ];
    Ok((Report { name: "gamma".into(), eps: eps_list.to_vec(), rows }, samples))
}
