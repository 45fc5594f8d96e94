//! Lyapunov–Schmidt reduction on one Fermi chart.
//!
//! With `U_ε(y) = V(|y|/ε)`, a radial cutoff `χ_R` and the tangential
//! derivatives `φ^i = ∂U/∂z_i`:
//!
//! * ansatz `W = U_ε χ_R`, kernel fields `Z^i = φ^i(y/ε) χ_R`;
//! * `Π^⊥` is the `⟨·,·⟩_ε`-orthogonal projection onto `K^⊥ = span{Z^i}^⊥`;
//! * `R = Π^⊥{i*[f(W)] - W}`, `N(φ) = Π^⊥ i*[f(W+φ) - f(W) - f'(W)φ]`,
//!   `S(φ) = Π^⊥ i*[ω² g(W+φ)]` with `g(u) = (q²ψ(u)² - 2qψ(u)) u`;
//! * `φ` is the fixed point of `φ ↦ L⁻¹(N(φ) + R + S(φ))` on `K^⊥`, where
//!   `L φ = Π^⊥{φ - i*[f'(W)φ]}`.
//!
//! `i*[f(W)] - W = i*[D]` with the strong residual
//! `D = f(W) + ε²Δ_g W - m² W`, which is evaluated analytically (the
//! profile's second derivative is taken from its own ODE). This keeps the
//! discretisation error of `W` out of `R` and `φ`. `L⁻¹` is applied through
//! the bordered system
//!
//! ```text
//! [ A_ε - M f'(W)   A_ε Z ] [ φ ]   [ M F ]
//! [ (A_ε Z)ᵀ          0   ] [ μ ] = [  0  ]
//! ```
//!
//! solved by preconditioned MINRES, where `A_ε = ε²S + m²M`.

use serde::Serialize;

use crate::electrostatics::{Electrostatics, PsiState, PsiVariant};
use crate::error::{Error, Result};
use crate::fields::{minres, norm_eps, Adjoint, AxisSpec, Discretization, Grid, LinearOperator, SolveStats, MAX_KRYLOV};
use crate::geometry::FermiChart;
use crate::ground_state::GroundState;
use crate::linalg::{solve_small, sym_eigenvalues};
use crate::params::ModelParams;

/// Grid recipe in units of ε.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridSpec {
    /// Core spacing is `ε / h_div` (at least 6).
    pub h_div: f64,
    /// Uniform core half-width in units of ε.
    pub core_z: f64,
    /// Geometric growth ratio outside the core.
    pub growth: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec { h_div: 6.0, core_z: 3.0, growth: 1.25 }
    }
}

impl GridSpec {
    /// The graded grid on `[-R, R]^{n-1} × [0, R]`.
    pub fn grid(&self, n: usize, eps: f64, radius: f64) -> Result<Grid> {
        Grid::graded(n, radius, AxisSpec { h0: eps / self.h_div, core: self.core_z * eps, ratio: self.growth })
    }
}

/// Options of a reduction run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReductionOptions {
    pub grid: GridSpec,
    pub variant: PsiVariant,
    /// Stopping tolerance on `‖φ_{k+1} - φ_k‖_ε`.
    pub tol: f64,
    pub max_iter: usize,
    /// Relative tolerance of the inner linear solves.
    pub krylov_tol: f64,
}

impl Default for ReductionOptions {
    fn default() -> Self {
        ReductionOptions { grid: GridSpec::default(), variant: PsiVariant::NeumannProca, tol: 1e-9, max_iter: 40, krylov_tol: 1e-11 }
    }
}

/// Smooth radial cutoff: 1 on `[0, R/2]`, 0 beyond `R`, quintic ramp in between.
/// Returns `(χ, χ', χ'')` as functions of the radius.
pub fn cutoff(rho: f64, radius: f64) -> (f64, f64, f64) {
    let half = 0.5 * radius;
    if rho <= half {
        return (1.0, 0.0, 0.0);
    }
    if rho >= radius {
        return (0.0, 0.0, 0.0);
    }
    let x = (rho - half) / half;
    let s = 10.0 * x.powi(3) - 15.0 * x.powi(4) + 6.0 * x.powi(5);
    let ds = 30.0 * x * x - 60.0 * x.powi(3) + 30.0 * x.powi(4);
    let d2s = 60.0 * x - 180.0 * x * x + 120.0 * x.powi(3);
    (1.0 - s, -ds / half, -d2s / (half * half))
}

/// Value, gradient and Hessian in `y` of `V(|y|/ε)`; the second radial
/// derivative comes from the profile ODE.
pub fn spike_jet(gs: &GroundState, eps: f64, y: &[f64]) -> (f64, Vec<f64>, Vec<Vec<f64>>) {
    let n = y.len();
    let msq = gs.params.msq();
    let rho = y.iter().map(|v| v * v).sum::<f64>().sqrt();
    let r = rho / eps;
    let (v, dv, _) = gs.eval(r);
    let mut grad = vec![0.0; n];
    let mut hess = vec![vec![0.0; n]; n];
    if r < 1e-7 {
        let v0 = gs.v0();
        let d2 = (msq * v0 - gs.f(v0)) / n as f64;
        for a in 0..n {
            hess[a][a] = d2 / (eps * eps);
        }
        return (v, grad, hess);
    }
    let d2 = msq * v - gs.f(v) - (n as f64 - 1.0) * dv / r;
    let dvr = dv / r;
    for a in 0..n {
        let ya = y[a] / rho;
        grad[a] = dv * ya / eps;
        for b in 0..n {
            let yb = y[b] / rho;
            let delta = if a == b { 1.0 } else { 0.0 };
            hess[a][b] = (d2 * ya * yb + dvr * (delta - ya * yb)) / (eps * eps);
        }
    }
    (v, grad, hess)
}

/// The ansatz `W = U_ε χ_R` and its strong residual `D`.
#[derive(Debug, Clone)]
pub struct Ansatz {
    pub eps: f64,
    pub radius: f64,
    pub w: Vec<f64>,
    /// `D = f(W) + ε²Δ_g W - m² W` at nodes.
    pub residual: Vec<f64>,
}

fn check_resolution(disc: &Discretization, eps: f64, radius: f64) -> Result<()> {
    if !(eps > 0.0) || eps >= radius / 10.0 {
        return Err(Error::InvalidParams(format!("eps = {eps} must be below R/10 = {}", radius / 10.0)));
    }
    let h = disc.grid.max_spacing_within(eps);
    let limit = eps / 6.0;
    if h > limit * (1.0 + 1e-9) {
        return Err(Error::ResolutionError { spacing: h, limit });
    }
    Ok(())
}

/// Build the ansatz on `disc` (chart radius `radius`).
pub fn build_ansatz(disc: &Discretization, gs: &GroundState, eps: f64, radius: f64) -> Result<Ansatz> {
    check_resolution(disc, eps, radius)?;
    let g = &disc.grid;
    let n = g.n;
    if gs.params.n != n {
        return Err(Error::GridMismatch(format!("ground state dimension {} vs grid {n}", gs.params.n)));
    }
    let msq = gs.params.msq();
    let mut w = vec![0.0; g.len()];
    let mut res = vec![0.0; g.len()];
    for i in 0..g.len() {
        let y = g.coords(i);
        let rho = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        let (chi, dchi, d2chi) = cutoff(rho, radius);
        if chi == 0.0 {
            continue;
        }
        let (u, du, d2u) = spike_jet(gs, eps, &y);
        let mut grad = vec![0.0; n];
        let mut hess = vec![vec![0.0; n]; n];
        for a in 0..n {
            let ya = if rho > 0.0 { y[a] / rho } else { 0.0 };
            let ca = dchi * ya;
            grad[a] = chi * du[a] + u * ca;
            for b in 0..n {
                let yb = if rho > 0.0 { y[b] / rho } else { 0.0 };
                let delta = if a == b { 1.0 } else { 0.0 };
                let cab = if rho > 0.0 { d2chi * ya * yb + dchi / rho * (delta - ya * yb) } else { 0.0 };
                hess[a][b] = chi * d2u[a][b] + du[a] * dchi * yb + du[b] * ca + u * cab;
            }
        }
        let gi = &disc.metric.ginv[i * n * n..(i + 1) * n * n];
        let gam = &disc.metric.gamma[i * n..(i + 1) * n];
        let mut lap = 0.0;
        for a in 0..n {
            for b in 0..n {
                lap += gi[a * n + b] * hess[a][b];
            }
            lap += gam[a] * grad[a];
        }
        let wv = u * chi;
        w[i] = wv;
        res[i] = gs.f(wv) + eps * eps * lap - msq * wv;
    }
    Ok(Ansatz { eps, radius, w, residual: res })
}

/// Kernel fields `Z^i`, their images `A_ε Z^i` and the Gram matrix.
#[derive(Debug, Clone)]
pub struct KernelBasis {
    pub eps: f64,
    pub msq: f64,
    pub z: Vec<Vec<f64>>,
    /// `(ε²S + m²M) Z^i`.
    pub az: Vec<Vec<f64>>,
    /// `⟨Z^i, Z^j⟩_ε`.
    pub gram: Vec<Vec<f64>>,
    /// Spectral condition number of the Gram matrix.
    pub condition: f64,
}

/// Largest admissible Gram condition number.
pub const GRAM_CONDITION_MAX: f64 = 1e3;

/// Build `Z^1..Z^{n-1}` on `disc`.
pub fn build_kernel(disc: &Discretization, gs: &GroundState, eps: f64, radius: f64) -> Result<KernelBasis> {
    check_resolution(disc, eps, radius)?;
    let g = &disc.grid;
    let n = g.n;
    let msq = gs.params.msq();
    let mut z = vec![vec![0.0; g.len()]; n - 1];
    for idx in 0..g.len() {
        let y = g.coords(idx);
        let rho = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        let (chi, _, _) = cutoff(rho, radius);
        if chi == 0.0 || rho == 0.0 {
            continue;
        }
        let (_, dv, _) = gs.eval(rho / eps);
        for (i, zi) in z.iter_mut().enumerate() {
            zi[idx] = dv * y[i] / rho * chi;
        }
    }
    let adj = Adjoint::new(disc, eps, msq, 1e-12)?;
    let az: Vec<Vec<f64>> = z
        .iter()
        .map(|zi| {
            let mut out = vec![0.0; zi.len()];
            adj.operator().apply(zi, &mut out);
            out
        })
        .collect();
    let scale = eps.powi(n as i32);
    let gram: Vec<Vec<f64>> = (0..n - 1).map(|i| (0..n - 1).map(|j| dotv(&z[i], &az[j]) / scale).collect()).collect();
    let ev = sym_eigenvalues(&gram);
    let (lo, hi) = ev.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), v| (lo.min(*v), hi.max(*v)));
    let condition = if lo > 0.0 { hi / lo } else { f64::INFINITY };
    if !(condition < GRAM_CONDITION_MAX) {
        return Err(Error::DegenerateKernel(condition));
    }
    Ok(KernelBasis { eps, msq, z, az, gram, condition })
}

fn dotv(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl KernelBasis {
    /// `⟨u, Z^i⟩_ε` for all `i`.
    pub fn moments(&self, u: &[f64]) -> Vec<f64> {
        let scale = self.eps.powi(self.dim_n() as i32);
        self.az.iter().map(|a| dotv(u, a) / scale).collect()
    }

    fn dim_n(&self) -> usize {
        self.z.len() + 1
    }

    /// `Π^⊥ u = u - Σ c_i Z^i` with `G c = ⟨u, Z⟩_ε`.
    pub fn project(&self, u: &[f64]) -> Vec<f64> {
        let c = solve_small(&self.gram, &self.moments(u)).expect("Gram matrix checked invertible");
        let mut out = u.to_vec();
        for (ci, zi) in c.iter().zip(&self.z) {
            for (o, zv) in out.iter_mut().zip(zi) {
                *o -= ci * zv;
            }
        }
        out
    }
}

/// Bordered operator of `L` with the kernel constraints.
struct Bordered<'a> {
    adj: &'a Adjoint,
    /// `M f'(W)` (lumped).
    mfp: &'a [f64],
    kernel: &'a KernelBasis,
    jacobi: Vec<f64>,
    schur: Vec<Vec<f64>>,
}

impl<'a> Bordered<'a> {
    fn new(adj: &'a Adjoint, mfp: &'a [f64], kernel: &'a KernelBasis) -> Self {
        let jacobi = adj.operator().jacobi().to_vec();
        let k = kernel.az.len();
        let schur = (0..k)
            .map(|i| (0..k).map(|j| kernel.az[i].iter().zip(&kernel.az[j]).zip(&jacobi).map(|((a, b), d)| a * b * d).sum()).collect())
            .collect();
        Bordered { adj, mfp, kernel, jacobi, schur }
    }
}

impl LinearOperator for Bordered<'_> {
    fn dim(&self) -> usize {
        self.mfp.len() + self.kernel.az.len()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let n = self.mfp.len();
        let (xs, xl) = x.split_at(n);
        let (ys, yl) = y.split_at_mut(n);
        self.adj.operator().apply(xs, ys);
        for i in 0..n {
            ys[i] -= self.mfp[i] * xs[i];
        }
        for (j, b) in self.kernel.az.iter().enumerate() {
            let lj = xl[j];
            for i in 0..n {
                ys[i] += lj * b[i];
            }
            yl[j] = dotv(b, xs);
        }
    }

    fn precondition(&self, r: &[f64], z: &mut [f64]) {
        let n = self.mfp.len();
        for i in 0..n {
            z[i] = r[i] * self.jacobi[i];
        }
        let sol = solve_small(&self.schur, &r[n..]).expect("Schur complement of the kernel block is SPD");
        z[n..].copy_from_slice(&sol);
    }
}

/// One Picard step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepRecord {
    pub iteration: usize,
    /// `‖φ_{k+1}‖_ε`.
    pub phi_norm: f64,
    /// `‖φ_{k+1} - φ_k‖_ε`.
    pub delta: f64,
    /// `delta_k / delta_{k-1}` (NaN on the first step).
    pub ratio: f64,
    pub minres: SolveStats,
    pub psi_iterations: usize,
}

/// Outcome of the fixed-point solve.
#[derive(Debug, Clone, Serialize)]
pub struct ReductionState {
    pub eps: f64,
    pub radius: f64,
    pub nodes: usize,
    pub mean_curvature: f64,
    #[serde(skip)]
    pub w: Vec<f64>,
    #[serde(skip)]
    pub phi: Vec<f64>,
    /// `ψ(W + φ)` (empty when `ω = 0`).
    #[serde(skip)]
    pub psi: Vec<f64>,
    pub trace: Vec<StepRecord>,
    pub phi_norm: f64,
    pub w_norm: f64,
    pub r_norm: f64,
    pub n_norm: f64,
    pub s_norm: f64,
    /// `‖S(0)‖_ε`.
    pub s0_norm: f64,
    /// `‖ψ(W)‖_{H¹}` (0 when `ω = 0`).
    pub psi_w_h1: f64,
    /// `max_i |⟨φ, Z^i⟩_ε| / ‖φ‖_ε`.
    pub orthogonality: f64,
    pub gram_condition: f64,
}

impl ReductionState {
    /// Iteration trace as JSON.
    pub fn trace_json(&self) -> String {
        serde_json::to_string_pretty(&self.trace).expect("trace serialises")
    }

    /// `u = W + φ`.
    pub fn solution(&self) -> Vec<f64> {
        self.w.iter().zip(&self.phi).map(|(a, b)| a + b).collect()
    }
}

/// Reduction context on one discretization.
pub struct Reducer<'a> {
    pub disc: &'a Discretization,
    pub gs: &'a GroundState,
    pub params: ModelParams,
    pub eps: f64,
    pub radius: f64,
    pub opts: ReductionOptions,
    pub ansatz: Ansatz,
    pub kernel: KernelBasis,
    adj: Adjoint,
    es: Option<Electrostatics<'a>>,
    /// `f'(W)` at nodes.
    fprime: Vec<f64>,
    mfp: Vec<f64>,
}

impl<'a> Reducer<'a> {
    /// Build ansatz, kernel and operators.
    pub fn new(disc: &'a Discretization, gs: &'a GroundState, params: ModelParams, eps: f64, radius: f64, opts: ReductionOptions) -> Result<Self> {
        params.validate()?;
        let ansatz = build_ansatz(disc, gs, eps, radius)?;
        let kernel = build_kernel(disc, gs, eps, radius)?;
        let adj = Adjoint::new(disc, eps, params.msq(), opts.krylov_tol)?;
        let es = if params.omega != 0.0 { Some(Electrostatics::new(disc, params.q, opts.variant, opts.krylov_tol)?) } else { None };
        let p = params.p;
        let fprime: Vec<f64> = ansatz.w.iter().map(|w| if *w > 0.0 { (p - 1.0) * w.powf(p - 2.0) } else { 0.0 }).collect();
        let mfp = fprime.iter().zip(&disc.mass).map(|(a, m)| a * m).collect();
        Ok(Reducer { disc, gs, params, eps, radius, opts, ansatz, kernel, adj, es, fprime, mfp })
    }

    /// `‖u‖_ε`.
    pub fn norm(&self, u: &[f64]) -> f64 {
        norm_eps(self.disc, u, self.eps, self.params.msq())
    }

    /// `Π^⊥ i*[v]` for nodal `v`.
    pub fn projected_istar(&self, v: &[f64]) -> Result<Vec<f64>> {
        Ok(self.kernel.project(&self.adj.apply(v, None)?.0))
    }

    /// `R = Π^⊥ i*[D]`.
    pub fn term_r(&self) -> Result<Vec<f64>> {
        self.projected_istar(&self.ansatz.residual)
    }

    fn f(&self, u: f64) -> f64 {
        self.gs.f(u)
    }

    fn n_source(&self, phi: &[f64]) -> Vec<f64> {
        (0..phi.len()).map(|i| self.f(self.ansatz.w[i] + phi[i]) - self.f(self.ansatz.w[i]) - self.fprime[i] * phi[i]).collect()
    }

    /// `N(φ)`.
    pub fn term_n(&self, phi: &[f64]) -> Result<Vec<f64>> {
        self.projected_istar(&self.n_source(phi))
    }

    /// `ψ(W + φ)` (None when `ω = 0`).
    pub fn psi(&self, phi: &[f64], guess: Option<&[f64]>) -> Result<Option<PsiState>> {
        match &self.es {
            None => Ok(None),
            Some(es) => {
                let u: Vec<f64> = self.ansatz.w.iter().zip(phi).map(|(a, b)| a + b).collect();
                Ok(Some(es.psi(&u, guess)?))
            }
        }
    }

    fn s_source(&self, st: &Option<PsiState>) -> Vec<f64> {
        let om2 = self.params.omega * self.params.omega;
        let q = self.params.q;
        match st {
            None => vec![0.0; self.disc.len()],
            Some(s) => s.u.iter().zip(&s.psi).map(|(u, p)| om2 * (q * q * p * p - 2.0 * q * p) * u).collect(),
        }
    }

    /// `S(φ)`.
    pub fn term_s(&self, phi: &[f64]) -> Result<Vec<f64>> {
        let st = self.psi(phi, None)?;
        self.projected_istar(&self.s_source(&st))
    }

    /// `L⁻¹ Π^⊥ i*[F]` for nodal `F` (the solution lies in `K^⊥`).
    pub fn apply_linv(&self, source: &[f64], guess: Option<&[f64]>) -> Result<(Vec<f64>, SolveStats)> {
        let n = self.disc.len();
        let k = self.kernel.z.len();
        let op = Bordered::new(&self.adj, &self.mfp, &self.kernel);
        let mut b = vec![0.0; n + k];
        for i in 0..n {
            b[i] = source[i] * self.disc.mass[i];
        }
        let x0 = guess.map(|g| {
            let mut v = g.to_vec();
            v.resize(n + k, 0.0);
            v
        });
        let (x, stats) = minres(&op, &b, x0.as_deref(), self.opts.krylov_tol, MAX_KRYLOV).map_err(|e| match e {
            Error::IterationLimit { limit, residual, .. } => Error::IterationLimit { module: "reduction", limit, residual },
            other => other,
        })?;
        Ok((self.kernel.project(&x[..n]), stats))
    }

    /// Picard iteration for `φ`.
    pub fn solve_phi(&self) -> Result<ReductionState> {
        self.solve_phi_from(None)
    }

    /// Fixed-point solve started from `Π^⊥ φ₀` (e.g. the solution at a
    /// nearby `ξ` on the same grid) instead of `φ₀ = 0`. The fixed point is
    /// unique, so the start only changes the number of steps.
    pub fn solve_phi_from(&self, phi0: Option<&[f64]>) -> Result<ReductionState> {
        let n = self.disc.len();
        let mut phi = match phi0 {
            Some(g) if g.len() == n => self.kernel.project(g),
            Some(g) => return Err(Error::GridMismatch(format!("initial guess has {} values, grid {n}", g.len()))),
            None => vec![0.0; n],
        };
        let mut trace: Vec<StepRecord> = Vec::new();
        let mut psi_guess: Option<Vec<f64>> = None;
        let mut psi_w_h1 = 0.0;
        let mut last_delta = f64::NAN;
        let mut bad = 0;
        let mut converged = false;
        let mut last_psi = None;
        for it in 0..self.opts.max_iter {
            let st = self.psi(&phi, psi_guess.as_deref())?;
            let psi_iterations = st.as_ref().map_or(0, |s| s.stats.iterations);
            if it == 0 && phi0.is_none() {
                if let Some(s) = &st {
                    psi_w_h1 = crate::fields::h1_norm(self.disc, &s.psi);
                }
            }
            let ssrc = self.s_source(&st);
            let nsrc = self.n_source(&phi);
            let source: Vec<f64> = (0..n).map(|i| nsrc[i] + self.ansatz.residual[i] + ssrc[i]).collect();
            let (next, mstats) = self.apply_linv(&source, Some(&phi))?;
            let diff: Vec<f64> = next.iter().zip(&phi).map(|(a, b)| a - b).collect();
            let delta = self.norm(&diff);
            let ratio = if it == 0 { f64::NAN } else { delta / last_delta };
            psi_guess = st.as_ref().map(|s| s.psi.clone());
            last_psi = st;
            phi = next;
            trace.push(StepRecord { iteration: it + 1, phi_norm: self.norm(&phi), delta, ratio, minres: mstats, psi_iterations });
            if ratio >= 1.0 {
                bad += 1;
                if bad >= 3 {
                    return Err(Error::ContractionDiverged { iterations: it + 1, ratio });
                }
            } else {
                bad = 0;
            }
            last_delta = delta;
            if delta < self.opts.tol {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::IterationLimit { module: "reduction", limit: self.opts.max_iter, residual: last_delta });
        }
        if phi0.is_some() {
            if let Some(s) = self.psi(&vec![0.0; n], None)? {
                psi_w_h1 = crate::fields::h1_norm(self.disc, &s.psi);
            }
        }
        // ψ(W + φ) at the converged φ.
        let st = self.psi(&phi, last_psi.as_ref().map(|s| s.psi.as_slice()))?;
        let psi = st.as_ref().map(|s| s.psi.clone()).unwrap_or_default();
        let phi_norm = self.norm(&phi);
        let moments = self.kernel.moments(&phi);
        let orthogonality = if phi_norm > 0.0 { moments.iter().fold(0.0f64, |m, v| m.max(v.abs())) / phi_norm } else { 0.0 };
        let r_norm = self.norm(&self.term_r()?);
        let n_norm = self.norm(&self.term_n(&phi)?);
        let s_norm = self.norm(&self.projected_istar(&self.s_source(&st))?);
        let s0_norm = if self.es.is_some() { self.norm(&self.term_s(&vec![0.0; n])?) } else { 0.0 };
        Ok(ReductionState {
            eps: self.eps,
            radius: self.radius,
            nodes: n,
            mean_curvature: self.disc.mean_curvature,
            w: self.ansatz.w.clone(),
            phi,
            psi,
            trace,
            phi_norm,
            w_norm: self.norm(&self.ansatz.w),
            r_norm,
            n_norm,
            s_norm,
            s0_norm,
            psi_w_h1,
            orthogonality,
            gram_condition: self.kernel.condition,
        })
    }
}

/// Build the discretization of a chart for a given ε.
pub fn discretize(chart: &FermiChart, eps: f64, spec: &GridSpec) -> Result<Discretization> {
    if spec.h_div < 6.0 {
        return Err(Error::ResolutionError { spacing: eps / spec.h_div, limit: eps / 6.0 });
    }
    let grid = spec.grid(chart.n(), eps, chart.radius)?;
    Discretization::new(chart, grid)
}

/// Full reduction at `(chart, ε)`.
pub fn solve_phi(chart: &FermiChart, gs: &GroundState, params: ModelParams, eps: f64, opts: ReductionOptions) -> Result<(Discretization, ReductionState)> {
    let disc = discretize(chart, eps, &opts.grid)?;
    let state = Reducer::new(&disc, gs, params, eps, chart.radius, opts)?.solve_phi()?;
    Ok((disc, state))
}

#[cfg(test)]
#[path = "reduction/tests.rs"]
mod tests;
