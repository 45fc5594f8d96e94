//! The electrostatic map `u ↦ ψ(u)` and its derivatives.
//!
//! * Proca/Neumann variant: `-Δ_g ψ + (1 + q²u²) ψ = q u²`, natural conditions;
//! * Dirichlet variant: `-Δ_g ψ + q²u² ψ = q u²`, `ψ = 0` on every face.
//!
//! Both use the physical operator (no `ε²` factor). Differentiating the
//! equation gives `V_u[h] = ψ'(u)[h]` and `T_u(h, k) = ψ''(u)[h, k]` as
//! solutions of the same operator with right-hand sides
//! `2qu(1 - qψ)h` and `-2q²u(k V_u[h] + h V_u[k]) + 2q(1 - qψ)hk`.
//! Because the discrete equation is differentiated exactly (lumped mass,
//! nodal coefficients), discrete derivatives are exact derivatives of the
//! discrete map.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fields::{pcg, Boundary, Discretization, EllipticOp, Field, SolveStats, MAX_KRYLOV};

/// Relative tolerance of the box bound `0 ≤ ψ ≤ 1/q`.
pub const BOUND_TOL: f64 = 1e-8;

/// Which second equation is solved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum PsiVariant {
    /// Massive photon, `+ψ` term, Neumann conditions.
    NeumannProca,
    /// Massless photon, homogeneous Dirichlet conditions.
    Dirichlet,
}

impl PsiVariant {
    /// Boundary conditions of the variant.
    pub fn boundary(self) -> Boundary {
        match self {
            PsiVariant::NeumannProca => Boundary::NEUMANN,
            PsiVariant::Dirichlet => Boundary::DIRICHLET,
        }
    }

    /// Zeroth-order coefficient at amplitude `u`.
    pub fn coefficient(self, q: f64, u: f64) -> f64 {
        match self {
            PsiVariant::NeumannProca => 1.0 + q * q * u * u,
            PsiVariant::Dirichlet => q * q * u * u,
        }
    }

    /// Parse `neumann_proca` / `dirichlet`.
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "neumann_proca" | "neumann" => Some(PsiVariant::NeumannProca),
            "dirichlet" => Some(PsiVariant::Dirichlet),
            _ => None,
        }
    }
}

/// Solver for one discretization.
#[derive(Debug, Clone, Copy)]
pub struct Electrostatics<'a> {
    pub disc: &'a Discretization,
    pub q: f64,
    pub variant: PsiVariant,
    /// Relative residual tolerance of the linear solves.
    pub tol: f64,
}

/// `ψ(u)` together with the operator needed for its derivatives.
#[derive(Debug, Clone)]
pub struct PsiState {
    pub u: Vec<f64>,
    pub psi: Vec<f64>,
    pub stats: SolveStats,
    pub op: EllipticOp,
}

impl PsiState {
    /// `(min ψ, max ψ)`.
    pub fn range(&self) -> (f64, f64) {
        self.psi.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(*v), hi.max(*v)))
    }
}

/// Check `-tol/q ≤ ψ ≤ (1 + tol)/q` nodally.
pub fn check_bounds(psi: &[f64], q: f64) -> Result<()> {
    let (lo, hi) = psi.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(*v), hi.max(*v)));
    let upper = 1.0 / q;
    if lo < -BOUND_TOL * upper || hi > upper * (1.0 + BOUND_TOL) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::BoundViolation { min: lo, max: hi, upper });
    }
    Ok(())
}

impl<'a> Electrostatics<'a> {
    pub fn new(disc: &'a Discretization, q: f64, variant: PsiVariant, tol: f64) -> Result<Self> {
        if !(q > 0.0) {
            return Err(Error::InvalidParams(format!("charge q = {q} must be positive")));
        }
        Ok(Electrostatics { disc, q, variant, tol })
    }

    fn load(&self, op: &EllipticOp, nodal: impl Iterator<Item = f64>) -> Vec<f64> {
        let mut b: Vec<f64> = nodal.zip(&self.disc.mass).map(|(f, m)| f * m).collect();
        op.restrict_rhs(&mut b);
        b
    }

    fn solve(&self, op: &EllipticOp, b: &[f64], guess: Option<&[f64]>) -> Result<(Vec<f64>, SolveStats)> {
        pcg(op, b, guess, self.tol, MAX_KRYLOV).map_err(|e| match e {
            Error::IterationLimit { limit, residual, .. } => Error::IterationLimit { module: "electrostatics", limit, residual },
            other => other,
        })
    }

    /// `ψ(u)`, checked against the box bound.
    pub fn psi(&self, u: &[f64], guess: Option<&[f64]>) -> Result<PsiState> {
        if u.len() != self.disc.len() {
            return Err(Error::GridMismatch(format!("{} values for {} nodes", u.len(), self.disc.len())));
        }
        let q = self.q;
        let coeff: Vec<f64> = u.iter().map(|x| self.variant.coefficient(q, *x)).collect();
        let op = EllipticOp::indefinite(self.disc, 1.0, &coeff, self.variant.boundary());
        let b = self.load(&op, u.iter().map(|x| q * x * x));
        let (psi, stats) = self.solve(&op, &b, guess)?;
        check_bounds(&psi, q)?;
        Ok(PsiState { u: u.to_vec(), psi, stats, op })
    }

    /// `V_u[h] = ψ'(u)[h]`.
    pub fn derivative(&self, st: &PsiState, h: &[f64]) -> Result<Vec<f64>> {
        let q = self.q;
        let b = self.load(&st.op, st.u.iter().zip(&st.psi).zip(h).map(|((u, p), h)| 2.0 * q * u * (1.0 - q * p) * h));
        Ok(self.solve(&st.op, &b, None)?.0)
    }

    /// `T_u(h, k) = ψ''(u)[h, k]`.
    pub fn second(&self, st: &PsiState, h: &[f64], k: &[f64]) -> Result<Vec<f64>> {
        let vh = self.derivative(st, h)?;
        let vk = self.derivative(st, k)?;
        let q = self.q;
        let nodal = (0..h.len()).map(|i| {
            let (u, p) = (st.u[i], st.psi[i]);
            -2.0 * q * q * u * (k[i] * vh[i] + h[i] * vk[i]) + 2.0 * q * (1.0 - q * p) * h[i] * k[i]
        });
        let b = self.load(&st.op, nodal);
        Ok(self.solve(&st.op, &b, None)?.0)
    }

    /// `Θ(u) = ½ ∫ (1 - qψ) u² dμ_g`.
    pub fn theta(&self, st: &PsiState) -> f64 {
        let q = self.q;
        0.5 * st.u.iter().zip(&st.psi).zip(&self.disc.mass).map(|((u, p), m)| m * (1.0 - q * p) * u * u).sum::<f64>()
    }

    /// `Θ'(u)[h] = ∫ (1 - qψ)² u h dμ_g`.
    pub fn theta_grad(&self, st: &PsiState, h: &[f64]) -> f64 {
        let q = self.q;
        (0..h.len()).map(|i| self.disc.mass[i] * (1.0 - q * st.psi[i]).powi(2) * st.u[i] * h[i]).sum()
    }
}

/// `ψ(u)` as a field.
pub fn psi_solve(disc: &Discretization, u: &Field, q: f64, variant: PsiVariant, tol: f64) -> Result<Field> {
    u.check(disc)?;
    let st = Electrostatics::new(disc, q, variant, tol)?.psi(&u.values, None)?;
    Field::from_values(disc, st.psi, variant.boundary())
}

/// `ψ'(u)[h]` as a field.
pub fn psi_derivative(disc: &Discretization, u: &Field, h: &Field, q: f64, variant: PsiVariant, tol: f64) -> Result<Field> {
    u.check(disc)?;
    h.check(disc)?;
    let es = Electrostatics::new(disc, q, variant, tol)?;
    let st = es.psi(&u.values, None)?;
    Field::from_values(disc, es.derivative(&st, &h.values)?, variant.boundary())
}

/// `ψ''(u)[h, k]` as a field.
pub fn psi_second(disc: &Discretization, u: &Field, h: &Field, k: &Field, q: f64, variant: PsiVariant, tol: f64) -> Result<Field> {
    u.check(disc)?;
    h.check(disc)?;
    k.check(disc)?;
    let es = Electrostatics::new(disc, q, variant, tol)?;
    let st = es.psi(&u.values, None)?;
    Field::from_values(disc, es.second(&st, &h.values, &k.values)?, variant.boundary())
}

/// `Θ(u)`.
pub fn theta_eval(disc: &Discretization, u: &Field, q: f64, variant: PsiVariant, tol: f64) -> Result<f64> {
    u.check(disc)?;
    let es = Electrostatics::new(disc, q, variant, tol)?;
    Ok(es.theta(&es.psi(&u.values, None)?))
}

/// `Θ'(u)[h]`.
pub fn theta_grad(disc: &Discretization, u: &Field, h: &Field, q: f64, variant: PsiVariant, tol: f64) -> Result<f64> {
    u.check(disc)?;
    h.check(disc)?;
    let es = Electrostatics::new(disc, q, variant, tol)?;
    Ok(es.theta_grad(&es.psi(&u.values, None)?, &h.values))
}

/// One field of the randomized bound suite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundSample {
    pub index: usize,
    /// Largest `|u|` of the field.
    pub amplitude: f64,
    pub min: f64,
    pub max: f64,
    pub upper: f64,
    pub pass: bool,
}

/// Deterministic random fields on a discretization: one to four Gaussian
/// bumps of either sign, log-uniform amplitudes in `[0.1, 30]` and widths in
/// `[R/20, R/2]`, times nodal noise of up to ±10%.
pub fn random_fields(disc: &Discretization, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = &disc.grid;
    let n = g.n;
    let r = g.radius;
    (0..count)
        .map(|_| {
            let bumps: Vec<(f64, Vec<f64>, f64)> = (0..rng.gen_range(1..=4))
                .map(|_| {
                    let amp = (rng.gen_range(0.1f64.ln()..30f64.ln())).exp() * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
                    let mut c: Vec<f64> = (0..n - 1).map(|_| rng.gen_range(-0.5 * r..0.5 * r)).collect();
                    c.push(rng.gen_range(0.0..0.5 * r));
                    let w = (rng.gen_range((0.05 * r).ln()..(0.5 * r).ln())).exp();
                    (amp, c, w)
                })
                .collect();
            (0..disc.len())
                .map(|i| {
                    let y = g.coords(i);
                    let v: f64 = bumps
                        .iter()
                        .map(|(a, c, w)| a * (-y.iter().zip(c).map(|(p, q)| (p - q) * (p - q)).sum::<f64>() / (w * w)).exp())
                        .sum();
                    v * (1.0 + rng.gen_range(-0.1..0.1))
                })
                .collect()
        })
        .collect()
}

/// Solve `ψ(u)` for every field of [`random_fields`] and record its range
/// against the box `[-BOUND_TOL/q, (1 + BOUND_TOL)/q]`.
pub fn bound_suite(disc: &Discretization, q: f64, variant: PsiVariant, tol: f64, count: usize, seed: u64) -> Result<Vec<BoundSample>> {
    let es = Electrostatics::new(disc, q, variant, tol)?;
    let upper = 1.0 / q;
    random_fields(disc, count, seed)
        .into_iter()
        .enumerate()
        .map(|(index, u)| {
            let amplitude = u.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let (min, max) = match es.psi(&u, None) {
                Ok(st) => st.range(),
                Err(Error::BoundViolation { min, max, .. }) => (min, max),
                Err(e) => return Err(e),
            };
            Ok(BoundSample { index, amplitude, min, max, upper, pass: check_bounds(&[min, max], q).is_ok() })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{AxisSpec, Grid};
    use crate::geometry::{BoundaryPoint, FermiChart, Geometry};

    fn disc(kappa: f64) -> Discretization {
        let geom = Geometry::umbilic(3, kappa);
        let chart = FermiChart::new(&geom, &BoundaryPoint::Flat(vec![0.0, 0.0]), 1.0).unwrap();
        Discretization::new(&chart, Grid::graded(3, 1.0, AxisSpec { h0: 0.05, core: 0.2, ratio: 1.3 }).unwrap()).unwrap()
    }

    fn bump(d: &Discretization, amp: f64, w: f64, x0: f64) -> Vec<f64> {
        (0..d.len())
            .map(|i| {
                let y = d.grid.coords(i);
                amp * (-((y[0] - x0).powi(2) + y[1] * y[1] + y[2] * y[2]) / (w * w)).exp()
            })
            .collect()
    }

    #[test]
    fn zero_and_constant_sources() {
        let d = disc(0.0);
        for v in [PsiVariant::NeumannProca, PsiVariant::Dirichlet] {
            let es = Electrostatics::new(&d, 1.5, v, 1e-12).unwrap();
            let st = es.psi(&vec![0.0; d.len()], None).unwrap();
            assert!(st.psi.iter().all(|p| *p == 0.0));
            assert_eq!(es.theta(&st), 0.0);
        }
        let (q, c) = (1.5, 0.8);
        let es = Electrostatics::new(&d, q, PsiVariant::NeumannProca, 1e-13).unwrap();
        let st = es.psi(&vec![c; d.len()], None).unwrap();
        let expect = q * c * c / (1.0 + q * q * c * c);
        assert!(st.psi.iter().all(|p| (p - expect).abs() < 1e-10));
    }

    #[test]
    fn bounds_hold_for_large_amplitudes() {
        let d = disc(0.6);
        for v in [PsiVariant::NeumannProca, PsiVariant::Dirichlet] {
            let es = Electrostatics::new(&d, 2.0, v, 1e-12).unwrap();
            let st = es.psi(&bump(&d, 30.0, 0.3, 0.1), None).unwrap();
            let (lo, hi) = st.range();
            assert!(lo >= -1e-8 && hi <= 0.5 + 1e-8, "{lo} {hi}");
            // Θ(u) ≤ ½ ∫ u² because ψ ≥ 0.
            let half_l2 = 0.5 * d.mass_form(&st.u, &st.u);
            assert!(es.theta(&st) <= half_l2);
            let vu = es.derivative(&st, &st.u).unwrap();
            assert!(vu.iter().all(|x| *x >= -1e-8 && *x <= 1.0 + 1e-8));
        }
        assert!(matches!(check_bounds(&[0.0, 0.7], 2.0), Err(Error::BoundViolation { .. })));
    }

    #[test]
    fn random_suite_is_deterministic_and_bounded() {
        let d = disc(0.4);
        assert_eq!(random_fields(&d, 3, 7), random_fields(&d, 3, 7));
        assert_ne!(random_fields(&d, 1, 7), random_fields(&d, 1, 8));
        let s = bound_suite(&d, 1.5, PsiVariant::NeumannProca, 1e-12, 5, 3).unwrap();
        assert!(s.iter().all(|b| b.pass), "{s:?}");
    }

    fn order(e1: f64, e2: f64, ratio: f64) -> f64 {
        (e1 / e2).ln() / ratio.ln()
    }

    fn maxdiff(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
    }

    #[test]
    fn derivative_fd_consistency() {
        let d = disc(0.5);
        for v in [PsiVariant::NeumannProca, PsiVariant::Dirichlet] {
            let es = Electrostatics::new(&d, 1.0, v, 1e-14).unwrap();
            let u = bump(&d, 3.0, 0.3, 0.0);
            let h = bump(&d, 1.0, 0.2, 0.15);
            let st = es.psi(&u, None).unwrap();
            let vh = es.derivative(&st, &h).unwrap();
            let err = |t: f64| {
                let ut: Vec<f64> = u.iter().zip(&h).map(|(a, b)| a + t * b).collect();
                let p = es.psi(&ut, None).unwrap().psi;
                let lin: Vec<f64> = st.psi.iter().zip(&vh).map(|(a, b)| a + t * b).collect();
                maxdiff(&p, &lin)
            };
            let o = order(err(1e-2), err(1e-3), 10.0);
            assert!(o >= 1.9, "{v:?}: order {o}");
            // Linearity in h.
            let h3: Vec<f64> = h.iter().map(|x| 3.0 * x).collect();
            let v3 = es.derivative(&st, &h3).unwrap();
            assert!(maxdiff(&v3, &vh.iter().map(|x| 3.0 * x).collect::<Vec<_>>()) < 1e-10 * maxdiff(&v3, &vec![0.0; v3.len()]));
        }
    }

    #[test]
    fn second_derivative_symmetric_and_consistent() {
        let d = disc(0.5);
        let es = Electrostatics::new(&d, 1.0, PsiVariant::NeumannProca, 1e-14).unwrap();
        let u = bump(&d, 3.0, 0.3, 0.0);
        let h = bump(&d, 1.0, 0.2, 0.15);
        let k = bump(&d, -0.7, 0.25, -0.1);
        let st = es.psi(&u, None).unwrap();
        let thk = es.second(&st, &h, &k).unwrap();
        let tkh = es.second(&st, &k, &h).unwrap();
        let scale = thk.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        assert!(maxdiff(&thk, &tkh) < 1e-10 * scale);
        let zero = es.second(&st, &vec![0.0; d.len()], &k).unwrap();
        assert!(zero.iter().all(|x| x.abs() < 1e-14));
        let err = |t: f64| {
            let shifted = |a: f64, b: f64| -> Vec<f64> {
                let w: Vec<f64> = (0..u.len()).map(|i| u[i] + a * t * h[i] + b * t * k[i]).collect();
                es.psi(&w, None).unwrap().psi
            };
            let (pp, pm, mp, mm) = (shifted(1.0, 1.0), shifted(1.0, -1.0), shifted(-1.0, 1.0), shifted(-1.0, -1.0));
            let fd: Vec<f64> = (0..u.len()).map(|i| (pp[i] - pm[i] - mp[i] + mm[i]) / (4.0 * t * t)).collect();
            maxdiff(&fd, &thk)
        };
        let o = order(err(0.1), err(0.05), 2.0);
        assert!(o >= 1.9, "order {o}");
    }

    #[test]
    fn theta_gradient_fd() {
        let d = disc(0.3);
        let es = Electrostatics::new(&d, 1.2, PsiVariant::NeumannProca, 1e-14).unwrap();
        let u = bump(&d, 2.0, 0.3, 0.0);
        let h = bump(&d, 1.0, 0.2, 0.1);
        let st = es.psi(&u, None).unwrap();
        let g = es.theta_grad(&st, &h);
        let t0 = es.theta(&st);
        let err = |t: f64| {
            let ut: Vec<f64> = u.iter().zip(&h).map(|(a, b)| a + t * b).collect();
            (es.theta(&es.psi(&ut, None).unwrap()) - t0 - t * g).abs()
        };
        let o = order(err(1e-2), err(1e-3), 10.0);
        assert!(o >= 1.9, "order {o}");
    }
}
