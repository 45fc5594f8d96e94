//! Radial ground state of `-ΔV + msq V = V^{p-1}` on R^n, the model
//! constants derived from it, the kernel fields `∂U/∂z_i` and the radial
//! limit profile `γ` solving `-Δγ = qU²`.
//!
//! The ground state is found by bisection shooting on `V(0)`. Forward
//! shooting is only trustworthy while the two bisection brackets agree
//! (the unstable growing mode amplifies round-off like `e^{2√msq r}`),
//! so the profile beyond that matching radius is obtained by integrating
//! the same ODE inward from a far radius where the linear decay law holds,
//! with the tail amplitude chosen so that the two pieces agree.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::ode::{Dopri5, OdeOptions};
use crate::params::ModelParams;
use crate::quad::{self, gauss, hermite, locate, GL3, GL5};

/// Radial profile of the ground state.
#[derive(Debug, Clone)]
pub struct GroundState {
    pub params: ModelParams,
    /// Graded radial abscissae, `r_grid[0] = 0`, last entry `r_max`.
    pub r_grid: Vec<f64>,
    /// Profile values `V(r_k)`.
    pub v: Vec<f64>,
    /// Derivative values `V'(r_k)`.
    pub dv: Vec<f64>,
    /// Second derivatives from the ODE (used for derivative interpolation).
    d2v: Vec<f64>,
    /// Truncation radius.
    pub r_max: f64,
    /// Decay constant fitted over `[0.6 r_max, r_max]`.
    pub decay_c: f64,
    /// Amplitude used to continue the profile beyond `r_max`.
    tail_c: f64,
    /// Radius at which the forward and inward pieces are joined.
    pub r_match: f64,
    /// Solver tolerance requested.
    pub tol: f64,
}

/// Constants of the half-space model problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModelConstants {
    pub n: usize,
    pub p: f64,
    pub msq: f64,
    /// Energy of the half-space ground state.
    pub c_energy: f64,
    /// Curvature coefficient of the energy expansion.
    pub alpha: f64,
    /// `∫_{R^n_+} U^p`.
    pub int_up_half: f64,
    /// Richardson-type quadrature error estimate.
    pub quad_error: f64,
}

/// Radial profile `γ` with `-Δγ = qU²`.
#[derive(Debug, Clone)]
pub struct RadialProfile {
    pub n: usize,
    pub q: f64,
    pub r_grid: Vec<f64>,
    pub values: Vec<f64>,
    pub dvalues: Vec<f64>,
    d2values: Vec<f64>,
    /// Max discrete flux-balance residual of the solve, relative to the source.
    pub residual: f64,
}

/// Both decay fits of a profile tail.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayFits {
    /// Exponent `k` in `γ ~ r^{-k}`.
    pub algebraic_exponent: f64,
    pub algebraic_rms: f64,
    /// Rate `μ` in `γ ~ e^{-μ r}`.
    pub exponential_rate: f64,
    pub exponential_rms: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Shot {
    /// `V` crossed zero: central value too large.
    Over,
    /// `V'` turned positive: central value too small.
    Under,
    /// Neither happened before the integration limit.
    Undecided,
}

/// Starting radius of the shooting (series initial data below it).
const R_START: f64 = 1e-4;

fn opts(tol: f64) -> OdeOptions {
    OdeOptions { rtol: tol, atol: tol * 1e-3, h_init: 1e-4, h_max: 0.05, max_steps: 2_000_000 }
}

struct Rhs {
    n1: f64,
    msq: f64,
    pm1: f64,
}

impl Rhs {
    #[inline]
    fn f(&self, v: f64) -> f64 {
        if v > 0.0 {
            v.powf(self.pm1)
        } else {
            0.0
        }
    }
    #[inline]
    fn eval(&self, r: f64, y: &[f64; 2]) -> [f64; 2] {
        [y[1], -self.n1 / r * y[1] + self.msq * y[0] - self.f(y[0])]
    }
    fn second(&self, r: f64, v: f64, dv: f64, n: usize) -> f64 {
        if r == 0.0 {
            (self.msq * v - self.f(v)) / n as f64
        } else {
            -self.n1 / r * dv + self.msq * v - self.f(v)
        }
    }
}

fn series_start(rhs: &Rhs, v0: f64, n: usize) -> [f64; 2] {
    let a2 = (rhs.msq * v0 - rhs.f(v0)) / n as f64;
    [v0 + 0.5 * a2 * R_START * R_START, a2 * R_START]
}

fn classify(rhs: &Rhs, v0: f64, n: usize, r_limit: f64, tol: f64) -> std::result::Result<Shot, Error> {
    let mut s = Dopri5::new(R_START, series_start(rhs, v0, n), opts(tol));
    let mut out = Shot::Undecided;
    s.advance_to(&|r, y| rhs.eval(r, y), r_limit, |_, y| {
        if y[0] < 0.0 {
            out = Shot::Over;
            true
        } else if y[1] > 0.0 {
            out = Shot::Under;
            true
        } else {
            false
        }
    })
    .map_err(|e| Error::ShootingFailed(format!("integrator failure {e:?} at V(0) = {v0}")))?;
    Ok(out)
}

/// Record a forward trajectory on the grid nodes until it fails.
fn record_forward(rhs: &Rhs, v0: f64, n: usize, grid: &[f64], tol: f64) -> Vec<(f64, f64)> {
    let mut s = Dopri5::new(R_START, series_start(rhs, v0, n), opts(tol));
    let mut rec = vec![(v0, 0.0)];
    for &r in &grid[1..] {
        if s.advance_to(&|r, y| rhs.eval(r, y), r, |_, _| false).is_err() {
            break;
        }
        if s.y[0] <= 0.0 || s.y[1] > 0.0 {
            break;
        }
        rec.push((s.y[0], s.y[1]));
    }
    rec
}

fn tail_shape(n: usize, k: f64, r: f64) -> (f64, f64) {
    let e = -0.5 * (n as f64 - 1.0);
    let a = (n as f64 - 1.0) * (n as f64 - 3.0) / (8.0 * k);
    let base = r.powf(e) * (-k * r).exp();
    let corr = 1.0 + a / r;
    let val = base * corr;
    let der = base * (corr * (e / r - k) - a / (r * r));
    (val, der)
}

/// Inward integration from `grid[last]` down to `grid[k_match]` for tail amplitude `c`.
fn record_inward(rhs: &Rhs, n: usize, k: f64, c: f64, grid: &[f64], k_match: usize, tol: f64) -> Option<Vec<(f64, f64)>> {
    let last = grid.len() - 1;
    let (tv, td) = tail_shape(n, k, grid[last]);
    let mut s = Dopri5::new(grid[last], [c * tv, c * td], OdeOptions { atol: 0.0, ..opts(tol) });
    let mut rec = vec![(0.0, 0.0); last - k_match + 1];
    rec[last - k_match] = (s.y[0], s.y[1]);
    for idx in (k_match..last).rev() {
        s.advance_to(&|r, y| rhs.eval(r, y), grid[idx], |_, _| false).ok()?;
        rec[idx - k_match] = (s.y[0], s.y[1]);
    }
    Some(rec)
}

fn graded_grid(k: f64, r_end: f64) -> Vec<f64> {
    let dr0 = 0.004 / k;
    let l = 4.0 / k;
    let mut g = vec![0.0];
    let mut r = 0.0;
    while r < r_end {
        r += dr0 * (1.0 + r / l);
        g.push(r);
    }
    g
}

/// Solve for the ground state. `tol` is the relative integrator tolerance
/// (values around `1e-11` give profiles accurate to ~1e-9).
pub fn solve_ground_state(params: &ModelParams, tol: f64) -> Result<GroundState> {
    params.validate()?;
    if !(tol > 0.0) {
        return Err(Error::InvalidParams(format!("tol = {tol} must be positive")));
    }
    let n = params.n;
    let msq = params.msq();
    let k = msq.sqrt();
    let p = params.p;
    let rhs = Rhs { n1: n as f64 - 1.0, msq, pm1: p - 1.0 };
    let itol = tol.clamp(1e-13, 1e-6);
    let r_limit = 400.0 / k;

    // Bracket: below msq^{1/(p-2)} the profile immediately turns upward.
    let mut lo = msq.powf(1.0 / (p - 2.0)) * (1.0 + 1e-9);
    if classify(&rhs, lo, n, r_limit, itol)? != Shot::Under {
        return Err(Error::ShootingFailed("lower bracket does not undershoot".into()));
    }
    let mut hi = 2.0 * lo;
    let mut doublings = 0;
    loop {
        match classify(&rhs, hi, n, r_limit, itol)? {
            Shot::Over => break,
            Shot::Under => lo = hi,
            Shot::Undecided => {
                return Err(Error::ShootingFailed(format!("undecided shot at V(0) = {hi}")));
            }
        }
        hi *= 2.0;
        doublings += 1;
        if doublings > 60 {
            return Err(Error::ShootingFailed("no overshooting upper bracket".into()));
        }
    }
    for _ in 0..200 {
        if hi - lo <= 4.0 * f64::EPSILON * hi {
            break;
        }
        let mid = 0.5 * (lo + hi);
        match classify(&rhs, mid, n, r_limit, itol)? {
            Shot::Over => hi = mid,
            Shot::Under => lo = mid,
            Shot::Undecided => {
                return Err(Error::ShootingFailed(format!("undecided shot at V(0) = {mid}")));
            }
        }
    }
    let v0 = 0.5 * (lo + hi);

    // Record both bracket trajectories; they agree as long as the shot is
    // trustworthy.
    let mut r_end = 30.0 / k;
    let mut grid = graded_grid(k, r_end);
    let t_lo = record_forward(&rhs, lo, n, &grid, itol);
    let t_hi = record_forward(&rhs, hi, n, &grid, itol);
    let m = t_lo.len().min(t_hi.len());
    let mut k_match = 0;
    for i in 1..m {
        let (a, b) = (t_lo[i].0, t_hi[i].0);
        if (a - b).abs() > 1e-10 * 0.5 * (a + b) {
            break;
        }
        k_match = i;
    }
    if grid[k_match] < 2.0 / k {
        return Err(Error::ShootingFailed(format!(
            "forward shot trustworthy only to r = {:.3}",
            grid[k_match]
        )));
    }
    let r_match = grid[k_match];
    let v_match = 0.5 * (t_lo[k_match].0 + t_hi[k_match].0);
    let dv_match = 0.5 * (t_lo[k_match].1 + t_hi[k_match].1);

    // Inward piece: enlarge r_max until the linear tail law is accurate.
    let mut inward;
    loop {
        r_end = r_end.max(r_match + 20.0 / k).max(23.1 / k);
        grid = graded_grid(k, r_end);
        let last = grid.len() - 1;
        let (tv, _) = tail_shape(n, k, grid[last]);
        let (tm, _) = tail_shape(n, k, r_match);
        let mut lc0 = (v_match / tm).ln();
        let mut f0 = shoot_residual(&rhs, n, k, lc0, &grid, k_match, itol, v_match)?;
        let mut lc1 = lc0 + 0.1;
        let mut f1 = shoot_residual(&rhs, n, k, lc1, &grid, k_match, itol, v_match)?;
        let mut it = 0;
        while f1.abs() > 1e-14 && it < 60 {
            let denom = f1 - f0;
            if denom == 0.0 {
                break;
            }
            let lc2 = lc1 - f1 * (lc1 - lc0) / denom;
            lc0 = lc1;
            f0 = f1;
            lc1 = lc2;
            f1 = shoot_residual(&rhs, n, k, lc1, &grid, k_match, itol, v_match)?;
            it += 1;
        }
        if f1.abs() > 1e-10 {
            return Err(Error::ShootingFailed(format!("tail matching did not converge ({f1:.2e})")));
        }
        let c = lc1.exp();
        inward = record_inward(&rhs, n, k, c, &grid, k_match, itol)
            .ok_or_else(|| Error::ShootingFailed("inward integration failed".into()))?;
        let v_end = c * tv;
        if v_end.powf(p - 2.0) <= 1e-3 * msq || r_end >= r_limit {
            break;
        }
        r_end *= 1.5;
    }
    let rel_dv = (inward[0].1 - dv_match).abs() / dv_match.abs().max(1e-300);
    if rel_dv > 1e-5 {
        return Err(Error::ShootingFailed(format!("derivative mismatch {rel_dv:.2e} at r = {r_match:.3}")));
    }

    let npts = grid.len();
    let mut v = Vec::with_capacity(npts);
    let mut dv = Vec::with_capacity(npts);
    for i in 0..=k_match {
        v.push(0.5 * (t_lo[i].0 + t_hi[i].0));
        dv.push(0.5 * (t_lo[i].1 + t_hi[i].1));
    }
    for (vi, di) in inward.iter().skip(1) {
        v.push(*vi);
        dv.push(*di);
    }
    dv[0] = 0.0;
    v[0] = v0;
    let d2v: Vec<f64> = (0..npts).map(|i| rhs.second(grid[i], v[i], dv[i], n)).collect();
    let r_max = grid[npts - 1];
    let (tv, _) = tail_shape(n, k, r_max);
    let tail_c = v[npts - 1] / tv;
    // Fit the decay constant over the outer tail.
    let (mut acc, mut cnt) = (0.0, 0usize);
    for i in 0..npts {
        if grid[i] >= 0.6 * r_max {
            acc += v[i] / tail_shape(n, k, grid[i]).0;
            cnt += 1;
        }
    }
    let decay_c = acc / cnt.max(1) as f64;

    let gs = GroundState { params: *params, r_grid: grid, v, dv, d2v, r_max, decay_c, tail_c, r_match, tol };
    gs.check_invariants()?;
    Ok(gs)
}

#[allow(clippy::too_many_arguments)]
fn shoot_residual(rhs: &Rhs, n: usize, k: f64, lc: f64, grid: &[f64], k_match: usize, tol: f64, target: f64) -> Result<f64> {
    let rec = record_inward(rhs, n, k, lc.exp(), grid, k_match, tol)
        .ok_or_else(|| Error::ShootingFailed("inward integration failed".into()))?;
    let v = rec[0].0;
    if !(v > 0.0) {
        return Ok(-50.0);
    }
    Ok(v.ln() - target.ln())
}

impl GroundState {
    /// Central value `V(0)`.
    pub fn v0(&self) -> f64 {
        self.v[0]
    }

    /// Evaluate `(V, V', V'')` at radius `r ≥ 0`.
    pub fn eval(&self, r: f64) -> (f64, f64, f64) {
        let n = self.params.n;
        let msq = self.params.msq();
        if r >= self.r_max {
            let (t, d) = tail_shape(n, msq.sqrt(), r);
            let v = self.tail_c * t;
            let dv = self.tail_c * d;
            let d2 = -(n as f64 - 1.0) / r * dv + msq * v - v.max(0.0).powf(self.params.p - 1.0);
            return (v, dv, d2);
        }
        let g = &self.r_grid;
        let i = locate(g, r);
        let (v, _) = hermite(g[i], g[i + 1], self.v[i], self.v[i + 1], self.dv[i], self.dv[i + 1], r);
        let (dv, d2) = hermite(g[i], g[i + 1], self.dv[i], self.dv[i + 1], self.d2v[i], self.d2v[i + 1], r);
        (v, dv, d2)
    }

    /// `V(r)`.
    pub fn value(&self, r: f64) -> f64 {
        self.eval(r).0
    }

    /// Nonlinearity `f(v) = (v⁺)^{p-1}`.
    pub fn f(&self, v: f64) -> f64 {
        if v > 0.0 {
            v.powf(self.params.p - 1.0)
        } else {
            0.0
        }
    }

    /// Integrate `F(r, V, V') r^{n-1}` over `[0, r_max]` with a given rule.
    pub fn radial_integral<F: Fn(f64, f64, f64) -> f64>(&self, rule: &[(f64, f64)], f: F) -> f64 {
        let g = &self.r_grid;
        let n1 = self.params.n as i32 - 1;
        let mut total = 0.0;
        for i in 0..g.len() - 1 {
            total += gauss(rule, g[i], g[i + 1], |r| {
                let (v, dv, _) = self.eval(r);
                f(r, v, dv) * r.powi(n1)
            });
        }
        total
    }

    /// Like [`radial_integral`](Self::radial_integral) but also returns an
    /// error estimate from two rules of different order.
    pub fn radial_integral_est<F: Fn(f64, f64, f64) -> f64 + Copy>(&self, f: F) -> (f64, f64) {
        let a = self.radial_integral(&GL5, f);
        let b = self.radial_integral(&GL3, f);
        (a, (a - b).abs())
    }

    /// `∫_{R^n_+} U^t dz`.
    pub fn int_ut_half(&self, t: f64) -> f64 {
        0.5 * quad::sphere_area(self.params.n) * self.radial_integral(&GL5, |_, v, _| v.max(0.0).powf(t))
    }

    /// `m₀ = ∫_{R^n} U²`.
    pub fn mass_full(&self) -> f64 {
        quad::sphere_area(self.params.n) * self.radial_integral(&GL5, |_, v, _| v * v)
    }

    /// `∫_{R^n_+} |∇U|² + msq U²`.
    pub fn h1_half(&self) -> f64 {
        let msq = self.params.msq();
        0.5 * quad::sphere_area(self.params.n) * self.radial_integral(&GL5, |_, v, dv| dv * dv + msq * v * v)
    }

    /// Relative Nehari defect `|∫(|∇V|² + msq V²) - ∫V^p| / ∫V^p`.
    pub fn nehari_defect(&self) -> f64 {
        let msq = self.params.msq();
        let p = self.params.p;
        let lhs = self.radial_integral(&GL5, |_, v, dv| dv * dv + msq * v * v);
        let rhs = self.radial_integral(&GL5, |_, v, _| v.max(0.0).powf(p));
        (lhs - rhs).abs() / rhs
    }

    /// Max over grid intervals of the flux-balance defect of the radial ODE,
    /// `| [r^{n-1}V']_{r_k}^{r_{k+1}} - ∫ s^{n-1}(msq V - V^{p-1}) ds |`, divided by
    /// the interval's volume `(r_{k+1}^n - r_k^n)/n` and by `msq V(0)`.
    pub fn ode_residual(&self) -> f64 {
        let n = self.params.n;
        let msq = self.params.msq();
        let g = &self.r_grid;
        let n1 = n as i32 - 1;
        let scale = msq * self.v0();
        let mut worst: f64 = 0.0;
        for i in 0..g.len() - 1 {
            let (a, b) = (g[i], g[i + 1]);
            let flux = b.powi(n1) * self.dv[i + 1] - a.powi(n1) * self.dv[i];
            let src = gauss(&GL5, a, b, |r| {
                let (v, _, _) = self.eval(r);
                r.powi(n1) * (msq * v - self.f(v))
            });
            let vol = (b.powi(n as i32) - a.powi(n as i32)) / n as f64;
            worst = worst.max((flux - src).abs() / vol / scale);
        }
        worst
    }

    fn check_invariants(&self) -> Result<()> {
        if self.dv[0] != 0.0 {
            return Err(Error::ShootingFailed("V'(0) != 0".into()));
        }
        for i in 0..self.v.len() {
            if !(self.v[i] > 0.0) {
                return Err(Error::ShootingFailed(format!("V <= 0 at r = {}", self.r_grid[i])));
            }
            if i > 0 && !(self.v[i] < self.v[i - 1]) {
                return Err(Error::ShootingFailed(format!("V not decreasing at r = {}", self.r_grid[i])));
            }
        }
        Ok(())
    }

    /// Profile as CSV with header `r,V,dV`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("r,V,dV\n");
        for i in 0..self.r_grid.len() {
            s.push_str(&format!("{:.17e},{:.17e},{:.17e}\n", self.r_grid[i], self.v[i], self.dv[i]));
        }
        s
    }

    /// Largest `|V(r) - V_table(r)|` over the rows of a parsed profile.
    pub fn max_deviation(&self, table: &ProfileTable) -> f64 {
        table.r.iter().zip(&table.v).fold(0.0f64, |m, (r, v)| m.max((self.value(*r) - v).abs()))
    }

    /// `V(r) r^{(n-1)/2} e^{√msq r}` — tends to the decay constant.
    pub fn decay_ratio(&self, r: f64) -> f64 {
        let k = self.params.msq().sqrt();
        self.value(r) * r.powf(0.5 * (self.params.n as f64 - 1.0)) * (k * r).exp()
    }
}

/// `∂U/∂z_i(z) = V'(|z|) z_i/|z|` for the tangential axis `i ∈ 1..n-1`.
/// Returns 0 at the origin and beyond `r_max`.
pub fn kernel_eval(gs: &GroundState, i: usize, z: &[f64]) -> f64 {
    assert!(i >= 1 && i < gs.params.n, "axis index must be in 1..n-1");
    assert!(z.len() == gs.params.n);
    let r = z.iter().map(|c| c * c).sum::<f64>().sqrt();
    if r == 0.0 || r > gs.r_max {
        return 0.0;
    }
    gs.eval(r).1 * z[i - 1] / r
}

/// Model constants `C` and `α` by 1D radial quadrature with the angular
/// factors of the half-space integrated in closed form.
pub fn compute_constants(gs: &GroundState) -> Result<ModelConstants> {
    let n = gs.params.n;
    let p = gs.params.p;
    let msq = gs.params.msq();
    let half = 0.5 * quad::sphere_area(n);
    let (e_rad, e_err) = gs.radial_integral_est(|_, v, dv| 0.5 * dv * dv + 0.5 * msq * v * v - v.max(0.0).powf(p) / p);
    // ∫_{S^{n-1}_+} ω_n³ dσ = |S^{n-2}| (1/(n-1) - 1/(n+1)).
    let a3 = quad::sphere_area(n - 1) * (1.0 / (n as f64 - 1.0) - 1.0 / (n as f64 + 1.0));
    let (a_rad, a_err) = gs.radial_integral_est(|r, _, dv| dv * dv * r);
    let (up_rad, up_err) = gs.radial_integral_est(|_, v, _| v.max(0.0).powf(p));
    let c_energy = half * e_rad;
    let alpha = 0.5 * (n as f64 - 1.0) * a3 * a_rad;
    let rel = (e_err / e_rad.abs()).max(a_err / a_rad.abs()).max(up_err / up_rad.abs());
    let qtol = 1e-8;
    if !(rel <= qtol) {
        return Err(Error::QuadratureUnconverged { estimate: rel, tol: qtol });
    }
    Ok(ModelConstants { n, p, msq, c_energy, alpha, int_up_half: half * up_rad, quad_error: rel })
}

impl ModelConstants {
    /// JSON record keyed by `(n, p, msq)`.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("constants serialize")
    }
}

/// Production path for `γ`: conservative finite-volume solve of
/// `-(r^{n-1}γ')' = q r^{n-1} U²` on the ground-state grid, with `γ'(0) = 0`
/// and the exact far-field Robin condition `γ' = -(n-2)γ/r` at `r_max`.
pub fn solve_gamma(gs: &GroundState, q: f64) -> Result<RadialProfile> {
    let n = gs.params.n;
    let g = &gs.r_grid;
    let m = g.len();
    let n1 = n as i32 - 1;
    let face: Vec<f64> = (0..m - 1).map(|i| 0.5 * (g[i] + g[i + 1])).collect();
    // Source integrated exactly per control volume.
    let mut rhs = vec![0.0; m];
    for i in 0..m {
        let a = if i == 0 { 0.0 } else { face[i - 1] };
        let b = if i == m - 1 { g[m - 1] } else { face[i] };
        rhs[i] = q * gauss(&GL5, a, g[i], |r| {
            let v = gs.eval(r).0;
            v * v * r.powi(n1)
        }) + q * gauss(&GL5, g[i], b, |r| {
            let v = gs.eval(r).0;
            v * v * r.powi(n1)
        });
    }
    // Tridiagonal system: diag, lower, upper.
    let mut diag = vec![0.0; m];
    let mut low = vec![0.0; m];
    let mut up = vec![0.0; m];
    for i in 0..m - 1 {
        let c = face[i].powi(n1) / (g[i + 1] - g[i]);
        diag[i] += c;
        diag[i + 1] += c;
        up[i] = -c;
        low[i + 1] = -c;
    }
    let rm = g[m - 1];
    diag[m - 1] += (n as f64 - 2.0) * rm.powi(n as i32 - 2);
    let values = thomas(&low, &diag, &up, &rhs);
    let mut residual: f64 = 0.0;
    for i in 0..m {
        let mut r = diag[i] * values[i] - rhs[i];
        if i > 0 {
            r += low[i] * values[i - 1];
        }
        if i + 1 < m {
            r += up[i] * values[i + 1];
        }
        residual = residual.max(r.abs());
    }
    let scale = rhs.iter().fold(0.0f64, |a, b| a.max(b.abs()));
    if scale > 0.0 {
        residual /= scale;
    }
    // Derivatives from the exact first integral γ'(r) = -q r^{1-n} ∫_0^r U² s^{n-1}.
    let mut cum = 0.0;
    let mut dvalues = vec![0.0; m];
    for i in 1..m {
        cum += q * gauss(&GL5, g[i - 1], g[i], |r| {
            let v = gs.eval(r).0;
            v * v * r.powi(n1)
        });
        dvalues[i] = -cum / g[i].powi(n1);
    }
    Ok(RadialProfile::assemble(gs, q, values, dvalues, residual))
}

/// Independent oracle for `γ`: quadrature of the radial Newtonian potential
/// `γ(r) = q/(n-2) [ r^{2-n} ∫_0^r U² s^{n-1} ds + ∫_r^∞ U² s ds ]`.
pub fn gamma_green(gs: &GroundState, q: f64) -> RadialProfile {
    let n = gs.params.n;
    let g = &gs.r_grid;
    let m = g.len();
    let n1 = n as i32 - 1;
    let mut inner = vec![0.0; m];
    let mut outer = vec![0.0; m];
    for i in 1..m {
        inner[i] = inner[i - 1]
            + gauss(&GL5, g[i - 1], g[i], |r| {
                let v = gs.eval(r).0;
                v * v * r.powi(n1)
            });
    }
    // Tail beyond r_max is below double precision relevance; start at zero.
    for i in (0..m - 1).rev() {
        outer[i] = outer[i + 1]
            + gauss(&GL5, g[i], g[i + 1], |r| {
                let v = gs.eval(r).0;
                v * v * r
            });
    }
    let c = q / (n as f64 - 2.0);
    let mut values = vec![0.0; m];
    let mut dvalues = vec![0.0; m];
    for i in 0..m {
        values[i] = if i == 0 { c * outer[0] } else { c * (g[i].powi(2 - n as i32) * inner[i] + outer[i]) };
        dvalues[i] = if i == 0 { 0.0 } else { -q * inner[i] / g[i].powi(n1) };
    }
    RadialProfile::assemble(gs, q, values, dvalues, 0.0)
}

fn thomas(low: &[f64], diag: &[f64], up: &[f64], rhs: &[f64]) -> Vec<f64> {
    let m = diag.len();
    let mut c = vec![0.0; m];
    let mut d = vec![0.0; m];
    c[0] = up[0] / diag[0];
    d[0] = rhs[0] / diag[0];
    for i in 1..m {
        let den = diag[i] - low[i] * c[i - 1];
        c[i] = if i + 1 < m { up[i] / den } else { 0.0 };
        d[i] = (rhs[i] - low[i] * d[i - 1]) / den;
    }
    let mut x = vec![0.0; m];
    x[m - 1] = d[m - 1];
    for i in (0..m - 1).rev() {
        x[i] = d[i] - c[i] * x[i + 1];
    }
    x
}

impl RadialProfile {
    fn assemble(gs: &GroundState, q: f64, values: Vec<f64>, dvalues: Vec<f64>, residual: f64) -> Self {
        let n = gs.params.n;
        let g = &gs.r_grid;
        let d2values = (0..g.len())
            .map(|i| {
                let v = gs.v[i];
                if i == 0 {
                    -q * v * v / n as f64
                } else {
                    -(n as f64 - 1.0) / g[i] * dvalues[i] - q * v * v
                }
            })
            .collect();
        RadialProfile { n, q, r_grid: g.clone(), values, dvalues, d2values, residual }
    }

    /// `(γ(r), γ'(r))`; beyond the grid the Newtonian far field `∝ r^{2-n}`.
    pub fn eval(&self, r: f64) -> (f64, f64) {
        let g = &self.r_grid;
        let m = g.len();
        if r >= g[m - 1] {
            let e = 2.0 - self.n as f64;
            let v = self.values[m - 1] * (r / g[m - 1]).powf(e);
            return (v, e * v / r);
        }
        let i = locate(g, r);
        let (v, _) = hermite(g[i], g[i + 1], self.values[i], self.values[i + 1], self.dvalues[i], self.dvalues[i + 1], r);
        let (d, _) = hermite(g[i], g[i + 1], self.dvalues[i], self.dvalues[i + 1], self.d2values[i], self.d2values[i + 1], r);
        (v, d)
    }

    /// `γ(r)`.
    pub fn value(&self, r: f64) -> f64 {
        self.eval(r).0
    }

    /// `γ(r) r^{n-2}` at the outer grid end.
    pub fn far_field_constant(&self) -> f64 {
        let m = self.r_grid.len();
        self.values[m - 1] * self.r_grid[m - 1].powi(self.n as i32 - 2)
    }

    /// Least-squares algebraic and exponential decay fits over `[r_lo, r_hi]`.
    pub fn decay_fits(&self, r_lo: f64, r_hi: f64) -> DecayFits {
        let mut lr = Vec::new();
        let mut rr = Vec::new();
        let mut lv = Vec::new();
        for (i, &r) in self.r_grid.iter().enumerate() {
            if r >= r_lo && r <= r_hi && self.values[i] > 0.0 {
                lr.push(r.ln());
                rr.push(r);
                lv.push(self.values[i].ln());
            }
        }
        let a = quad::fit_line(&lr, &lv).unwrap_or(quad::LineFit { intercept: 0.0, slope: f64::NAN, rms_residual: f64::NAN });
        let e = quad::fit_line(&rr, &lv).unwrap_or(quad::LineFit { intercept: 0.0, slope: f64::NAN, rms_residual: f64::NAN });
        DecayFits {
            algebraic_exponent: -a.slope,
            algebraic_rms: a.rms_residual,
            exponential_rate: -e.slope,
            exponential_rms: e.rms_residual,
        }
    }
}


/// A radial profile read back from its CSV export (`r,V,dV`).
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileTable {
    pub r: Vec<f64>,
    pub v: Vec<f64>,
    pub dv: Vec<f64>,
}

/// Parse a profile CSV with header `r,V,dV`: at least two rows, finite
/// values, `r` strictly increasing from a non-negative start.
pub fn parse_profile_csv(text: &str) -> Result<ProfileTable> {
    let bad = |m: String| Error::Format(format!("profile csv: {m}"));
    let mut rd = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
    let header = rd.headers().map_err(|e| bad(e.to_string()))?;
    if header.iter().map(str::trim).collect::<Vec<_>>() != ["r", "V", "dV"] {
        return Err(bad("header must be r,V,dV".into()));
    }
    let mut t = ProfileTable { r: vec![], v: vec![], dv: vec![] };
    for (i, rec) in rd.records().enumerate() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        if rec.len() != 3 {
            return Err(bad(format!("row {} has {} fields", i + 1, rec.len())));
        }
        let mut vals = [0.0; 3];
        for (k, f) in rec.iter().enumerate() {
            vals[k] = f.trim().parse::<f64>().ok().filter(|x| x.is_finite()).ok_or_else(|| bad(format!("row {}: '{f}' is not a finite number", i + 1)))?;
        }
        if let Some(last) = t.r.last() {
            if !(vals[0] > *last) {
                return Err(bad(format!("row {}: r not increasing", i + 1)));
            }
        } else if vals[0] < 0.0 {
            return Err(bad("negative radius".into()));
        }
        t.r.push(vals[0]);
        t.v.push(vals[1]);
        t.dv.push(vals[2]);
    }
    if t.r.len() < 2 {
        return Err(bad(format!("{} rows (need at least 2)", t.r.len())));
    }
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::OnceLock;

    fn gs34() -> &'static GroundState {
        static GS: OnceLock<GroundState> = OnceLock::new();
        GS.get_or_init(|| solve_ground_state(&ModelParams::uncoupled(3, 4.0, 1.0).unwrap(), 1e-11).unwrap())
    }

    #[test]
    fn central_value_matches_reference() {
        // Reference computed offline by an independent relaxation solver.
        assert!((gs34().v0() - 4.337_387_679_977).abs() < 1e-7, "{}", gs34().v0());
    }

    #[test]
    fn invariants_hold() {
        let gs = gs34();
        assert_eq!(gs.dv[0], 0.0);
        assert!(gs.nehari_defect() < 1e-6, "{}", gs.nehari_defect());
        assert!(gs.ode_residual() < 1e-7, "{}", gs.ode_residual());
        assert!((-gs.r_max).exp() < 1e-10);
    }

    #[test]
    fn tail_ratio_is_constant() {
        let gs = gs34();
        let c = gs.decay_c;
        let mut r = 0.6 * gs.r_max;
        while r <= gs.r_max {
            assert!((gs.decay_ratio(r) / c - 1.0).abs() < 0.02, "r = {r}");
            r += 0.5;
        }
    }

    #[test]
    fn mass_scaling_law() {
        // V_msq(r) = msq^{1/(p-2)} V_1(√msq r).
        let gs = solve_ground_state(&ModelParams::uncoupled(3, 4.0, 2.0).unwrap(), 1e-11).unwrap();
        let want = 2f64.powf(0.5) * gs34().v0();
        assert!((gs.v0() - want).abs() < 1e-7 * want);
        let want1 = 2f64.sqrt() * gs34().value(2f64.sqrt() * 1.3);
        assert!((gs.value(1.3) - want1).abs() < 1e-7 * want1);
    }

    #[test]
    fn near_linear_exponent() {
        let gs = solve_ground_state(&ModelParams::uncoupled(3, 2.05, 1.0).unwrap(), 1e-11).unwrap();
        assert!(gs.ode_residual() < 1e-7);
        assert!(gs.nehari_defect() < 1e-6);
        assert!(gs.r_max > 40.0);
    }

    #[test]
    fn rejects_bad_exponent() {
        let m = ModelParams { n: 3, p: 6.5, a: 1.0, omega: 0.0, q: 1.0 };
        assert!(matches!(solve_ground_state(&m, 1e-10), Err(Error::InvalidExponent { .. })));
    }

    #[test]
    fn kernel_eval_conventions() {
        let gs = gs34();
        assert_eq!(kernel_eval(gs, 1, &[0.0, 0.0, 0.0]), 0.0);
        assert!((kernel_eval(gs, 1, &[1.0, 0.0, 0.0]) - gs.eval(1.0).1).abs() < 1e-15);
        assert!((kernel_eval(gs, 2, &[0.0, 1.0, 0.0]) - gs.eval(1.0).1).abs() < 1e-15);
        let z = [0.3, -0.7, 0.4];
        let zf = [-0.3, -0.7, 0.4];
        assert!((kernel_eval(gs, 1, &z) + kernel_eval(gs, 1, &zf)).abs() < 1e-15);
        assert_eq!(kernel_eval(gs, 1, &[gs.r_max + 1.0, 0.0, 0.0]), 0.0);
    }

    #[test]
    fn kernel_solves_linearized_equation() {
        // FD residual of -Δφ + msq φ - (p-1)U^{p-2} φ at sample points
        // decreases like h².
        let gs = gs34();
        let phi = |z: [f64; 3]| kernel_eval(gs, 1, &z);
        let res = |h: f64| {
            let pts = [[0.7, 0.2, 0.3], [1.2, -0.4, 0.5], [0.4, 0.9, 0.1]];
            pts.iter()
                .map(|&z| {
                    let c = phi(z);
                    let mut lap = 0.0;
                    for a in 0..3 {
                        let mut zp = z;
                        let mut zm = z;
                        zp[a] += h;
                        zm[a] -= h;
                        lap += (phi(zp) - 2.0 * c + phi(zm)) / (h * h);
                    }
                    let r = (z[0] * z[0] + z[1] * z[1] + z[2] * z[2]).sqrt();
                    let u = gs.value(r);
                    (-lap + c - 3.0 * u * u * c).abs()
                })
                .fold(0.0, f64::max)
        };
        let (r1, r2) = (res(0.04), res(0.02));
        assert!(r2 < 0.3 * r1, "{r1} {r2}");
    }

    #[test]
    fn normal_derivative_vanishes_on_boundary() {
        let gs = gs34();
        // ∂U/∂z_n at z_n = 0 is V'(r) z_n / r = 0; check by symmetric FD.
        let u = |z: [f64; 3]| gs.value((z[0] * z[0] + z[1] * z[1] + z[2] * z[2]).sqrt());
        let h = 1e-5;
        let d = (u([0.4, 0.3, h]) - u([0.4, 0.3, -h])) / (2.0 * h);
        assert!(d.abs() < 1e-8);
    }

    #[test]
    fn constants_match_nehari_and_reference() {
        let gs = gs34();
        let c = compute_constants(gs).unwrap();
        let want = (0.5 - 1.0 / 4.0) * c.int_up_half;
        assert!((c.c_energy - want).abs() < 1e-6 * want);
        assert!((c.c_energy - 9.448_625_65).abs() < 1e-5);
        assert!((c.alpha - 6.126_733_18).abs() < 1e-5);
        assert!(c.alpha > 0.0);
    }

    #[test]
    fn gamma_linearity_zero_and_far_field() {
        let gs = gs34();
        let g0 = solve_gamma(gs, 0.0).unwrap();
        assert!(g0.values.iter().all(|v| *v == 0.0));
        let g1 = solve_gamma(gs, 1.0).unwrap();
        let g2 = solve_gamma(gs, 2.0).unwrap();
        for i in 0..g1.values.len() {
            assert!((g2.values[i] - 2.0 * g1.values[i]).abs() <= 1e-12 * g1.values[0]);
        }
        for w in g1.values.windows(2) {
            assert!(w[1] < w[0] && w[1] > 0.0);
        }
        // Newtonian far field: γ r^{n-2} → q m₀ / ((n-2)|S^{n-1}|).
        let want = gs.mass_full() / quad::sphere_area(3);
        assert!((g1.far_field_constant() - want).abs() < 1e-6 * want, "{} {}", g1.far_field_constant(), want);
        assert!(g1.residual < 1e-8, "{}", g1.residual);
    }

    #[test]
    fn gamma_fd_agrees_with_green_oracle() {
        let gs = gs34();
        let fd = solve_gamma(gs, 1.0).unwrap();
        let gr = gamma_green(gs, 1.0);
        for i in (0..fd.values.len()).step_by(37) {
            assert!((fd.values[i] - gr.values[i]).abs() < 1e-5 * gr.values[0], "{i}");
        }
        let fits = gr.decay_fits(10.0, gs.r_max);
        assert!((fits.algebraic_exponent - 1.0).abs() < 1e-3);
        assert!(fits.algebraic_rms < fits.exponential_rms);
    }

    #[test]
    fn profile_csv_round_trip() {
        let gs = gs34();
        let t = parse_profile_csv(&gs.to_csv()).unwrap();
        assert_eq!(t.r.len(), gs.r_grid.len());
        assert_eq!(gs.max_deviation(&t), 0.0);
        for bad in ["", "r,V\n0,1\n1,2\n", "r,V,dV\n0,1,0\n", "r,V,dV\n0,1,0\n0,1,0\n", "r,V,dV\n0,1,0\n1,x,0\n", "r,V,dV\n0,1,0\n1,inf,0\n", "r,V,dV\n-1,1,0\n1,1,0\n"] {
            assert!(matches!(parse_profile_csv(bad), Err(Error::Format(_))), "{bad:?}");
        }
    }
}
