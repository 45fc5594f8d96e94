//! Spheroidal boundary surfaces `(x² + y²)/a² + z²/c² = 1` in R³.
//!
//! Geodesics are integrated in ambient form, constrained to the implicit
//! surface `F = 0`: `x'' = -(x'ᵀ ∇²F x') / |∇F|² ∇F`. This form has no
//! coordinate singularity at the poles, unlike the Christoffel form in
//! the angular parametrization.

use crate::error::{Error, Result};
use crate::linalg::{add3, cross3, dot3, norm3, scale3, sub3, Vec3};
use crate::ode::{Dopri5, OdeOptions};

/// Spheroid with equatorial semi-axis `a` and polar semi-axis `c`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Spheroid {
    pub a: f64,
    pub c: f64,
}

/// Orthonormal tangent frame at a surface point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Frame {
    pub e: [Vec3; 2],
}

impl Spheroid {
    /// Ambient position for parametric polar angle `theta` and azimuth `phi`.
    pub fn position(&self, theta: f64, phi: f64) -> Vec3 {
        let (st, ct) = theta.sin_cos();
        let (sp, cp) = phi.sin_cos();
        [self.a * st * cp, self.a * st * sp, self.c * ct]
    }

    /// Defining function `F(x)`; zero on the surface, negative inside.
    pub fn defect(&self, x: &Vec3) -> f64 {
        (x[0] * x[0] + x[1] * x[1]) / (self.a * self.a) + x[2] * x[2] / (self.c * self.c) - 1.0
    }

    /// `∇F`.
    pub fn grad(&self, x: &Vec3) -> Vec3 {
        let a2 = self.a * self.a;
        let c2 = self.c * self.c;
        [2.0 * x[0] / a2, 2.0 * x[1] / a2, 2.0 * x[2] / c2]
    }

    /// Diagonal of the constant Hessian `∇²F`.
    pub fn hess_diag(&self) -> Vec3 {
        let a2 = self.a * self.a;
        let c2 = self.c * self.c;
        [2.0 / a2, 2.0 / a2, 2.0 / c2]
    }

    /// Outward unit normal.
    pub fn normal_out(&self, x: &Vec3) -> Vec3 {
        let g = self.grad(x);
        scale3(&g, 1.0 / norm3(&g))
    }

    /// Derivative of the inward unit normal in direction `t`:
    /// `Dν_in t = -(I - ννᵀ) ∇²F t / |∇F|`.
    pub fn dnormal_in(&self, x: &Vec3, t: &Vec3) -> Vec3 {
        let g = self.grad(x);
        let gn = norm3(&g);
        let nu = scale3(&g, 1.0 / gn);
        let hd = self.hess_diag();
        let ht = [hd[0] * t[0], hd[1] * t[1], hd[2] * t[2]];
        let proj = sub3(&ht, &scale3(&nu, dot3(&nu, &ht)));
        scale3(&proj, -1.0 / gn)
    }

    /// Second fundamental form `h(u, v) = uᵀ ∇²F v / |∇F|` for tangent
    /// vectors (positive on convex surfaces).
    pub fn second_form(&self, x: &Vec3, u: &Vec3, v: &Vec3) -> f64 {
        let hd = self.hess_diag();
        let g = norm3(&self.grad(x));
        (hd[0] * u[0] * v[0] + hd[1] * u[1] * v[1] + hd[2] * u[2] * v[2]) / g
    }

    /// Parametric angles of a surface point (azimuth 0 on the axis).
    pub fn angles(&self, x: &Vec3) -> (f64, f64) {
        let rho = (x[0] * x[0] + x[1] * x[1]).sqrt() / self.a;
        let theta = rho.atan2(x[2] / self.c);
        let phi = if rho < 1e-15 { 0.0 } else { x[1].atan2(x[0]) };
        (theta, phi)
    }

    /// Project a nearby point onto the surface along the gradient.
    pub fn project(&self, x: &Vec3) -> Vec3 {
        let mut y = *x;
        for _ in 0..8 {
            let f = self.defect(&y);
            if f.abs() < 1e-16 {
                break;
            }
            let g = self.grad(&y);
            y = sub3(&y, &scale3(&g, f / dot3(&g, &g)));
        }
        y
    }

    /// Parametrization frame at angles `(theta, phi)`: `e_θ` and `e_φ`.
    /// At the poles `e_θ` is the limit along the meridian of azimuth `phi`.
    pub fn angle_frame(&self, theta: f64, phi: f64) -> Frame {
        let (st, ct) = theta.sin_cos();
        let (sp, cp) = phi.sin_cos();
        let dt = [self.a * ct * cp, self.a * ct * sp, -self.c * st];
        let e1 = scale3(&dt, 1.0 / norm3(&dt));
        let e2 = [-sp, cp, 0.0];
        // Orient so that (e1, e2, ν_out) is right-handed.
        let nu = self.normal_out(&self.position(theta, phi));
        if dot3(&cross3(&e1, &e2), &nu) < 0.0 {
            Frame { e: [e1, scale3(&e2, -1.0)] }
        } else {
            Frame { e: [e1, e2] }
        }
    }

    /// Project a reference frame onto the tangent plane at `x` and
    /// re-orthonormalize (Gram–Schmidt), keeping orientation.
    pub fn transported_frame(&self, x: &Vec3, reference: &Frame) -> Frame {
        let nu = self.normal_out(x);
        let p = |v: &Vec3| sub3(v, &scale3(&nu, dot3(&nu, v)));
        let u1 = p(&reference.e[0]);
        let e1 = scale3(&u1, 1.0 / norm3(&u1));
        let e2 = cross3(&nu, &e1);
        Frame { e: [e1, e2] }
    }

    /// Exponential map: geodesic from `x0` with initial velocity `v0`
    /// (tangent), evaluated at time 1. Returns end point and velocity.
    pub fn exp(&self, x0: &Vec3, v0: &Vec3) -> Result<(Vec3, Vec3)> {
        let speed = norm3(v0);
        if speed == 0.0 {
            return Ok((*x0, *v0));
        }
        let hd = self.hess_diag();
        let this = *self;
        let rhs = move |_t: f64, s: &[f64; 6]| {
            let x = [s[0], s[1], s[2]];
            let v = [s[3], s[4], s[5]];
            let g = this.grad(&x);
            let q = hd[0] * v[0] * v[0] + hd[1] * v[1] * v[1] + hd[2] * v[2] * v[2];
            let k = -q / dot3(&g, &g);
            [v[0], v[1], v[2], k * g[0], k * g[1], k * g[2]]
        };
        let scale = self.a.min(self.c);
        let opts = OdeOptions { rtol: 1e-12, atol: 1e-14 * scale.max(1.0), h_init: 0.05, h_max: 0.25, max_steps: 100_000 };
        let mut s = Dopri5::new(0.0, [x0[0], x0[1], x0[2], v0[0], v0[1], v0[2]], opts);
        s.advance_to(&rhs, 1.0, |_, _| false)
            .map_err(|e| Error::GeodesicShootingFailed(format!("integration failed: {e:?}")))?;
        let x = self.project(&[s.y[0], s.y[1], s.y[2]]);
        let nu = self.normal_out(&x);
        let v = [s.y[3], s.y[4], s.y[5]];
        let v = sub3(&v, &scale3(&nu, dot3(&nu, &v)));
        Ok((x, v))
    }

    /// Exponential map with velocity given by frame components.
    pub fn exp_frame(&self, x0: &Vec3, frame: &Frame, y: &[f64]) -> Result<Vec3> {
        let v = add3(&scale3(&frame.e[0], y[0]), &scale3(&frame.e[1], y[1]));
        Ok(self.exp(x0, &v)?.0)
    }

    /// Inverse exponential map by Newton shooting: frame components `y`
    /// with `exp(x0, y) = target`.
    pub fn log_frame(&self, x0: &Vec3, frame: &Frame, target: &Vec3) -> Result<[f64; 2]> {
        let d = sub3(target, x0);
        let mut y = [dot3(&d, &frame.e[0]), dot3(&d, &frame.e[1])];
        // Chord length underestimates arc length; a chord-based first guess
        // is accurate to O(|y|^3).
        let tol = 1e-13 * (1.0 + self.a.max(self.c));
        for _ in 0..40 {
            let x = self.exp_frame(x0, frame, &y)?;
            let r = sub3(&x, target);
            if norm3(&r) < tol {
                return Ok(y);
            }
            let hstep = 1e-6 * (1.0 + (y[0] * y[0] + y[1] * y[1]).sqrt());
            let mut jac = [[0.0; 2]; 3];
            for k in 0..2 {
                let mut yp = y;
                let mut ym = y;
                yp[k] += hstep;
                ym[k] -= hstep;
                let xp = self.exp_frame(x0, frame, &yp)?;
                let xm = self.exp_frame(x0, frame, &ym)?;
                for i in 0..3 {
                    jac[i][k] = (xp[i] - xm[i]) / (2.0 * hstep);
                }
            }
            // Least squares via normal equations (2x2).
            let mut ata = [[0.0; 2]; 2];
            let mut atr = [0.0; 2];
            for i in 0..3 {
                for k in 0..2 {
                    atr[k] += jac[i][k] * r[i];
                    for l in 0..2 {
                        ata[k][l] += jac[i][k] * jac[i][l];
                    }
                }
            }
            let det = ata[0][0] * ata[1][1] - ata[0][1] * ata[1][0];
            if det.abs() < 1e-300 {
                return Err(Error::GeodesicShootingFailed("singular shooting Jacobian".into()));
            }
            let dy0 = (ata[1][1] * atr[0] - ata[0][1] * atr[1]) / det;
            let dy1 = (ata[0][0] * atr[1] - ata[1][0] * atr[0]) / det;
            y[0] -= dy0;
            y[1] -= dy1;
        }
        Err(Error::GeodesicShootingFailed("Newton shooting did not converge".into()))
    }

    /// Closest surface point to an interior point `x`, and the distance.
    /// Solves `b_i = x_i a_i² / (a_i² + λ)` with `Σ b_i²/a_i² = 1`.
    pub fn closest_point(&self, x: &Vec3) -> (Vec3, f64) {
        let s2 = [self.a * self.a, self.a * self.a, self.c * self.c];
        let g = |lam: f64| -> (f64, f64) {
            let mut v = -1.0;
            let mut d = 0.0;
            for i in 0..3 {
                let den = s2[i] + lam;
                v += x[i] * x[i] * s2[i] / (den * den);
                d += -2.0 * x[i] * x[i] * s2[i] / (den * den * den);
            }
            (v, d)
        };
        let amin = s2[0].min(s2[2]);
        // For interior points the root lies in (-amin, 0].
        let (mut lo, mut hi) = (-amin, 0.0f64);
        let (g0, _) = g(0.0);
        if g0 >= 0.0 {
            // On or outside the surface: search to the right.
            hi = 1.0;
            while g(hi).0 > 0.0 {
                hi *= 2.0;
            }
            lo = 0.0;
        }
        let mut lam = 0.5 * (lo + hi);
        for _ in 0..200 {
            let (v, d) = g(lam);
            if v > 0.0 {
                lo = lam;
            } else {
                hi = lam;
            }
            let mut next = lam - v / d;
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            if (next - lam).abs() <= 1e-16 * (1.0 + lam.abs()) {
                lam = next;
                break;
            }
            lam = next;
        }
        let b = [x[0] * s2[0] / (s2[0] + lam), x[1] * s2[1] / (s2[1] + lam), x[2] * s2[2] / (s2[2] + lam)];
        let b = self.project(&b);
        let dist = norm3(&sub3(x, &b));
        (b, dist)
    }

    /// Principal curvatures (meridian, parallel) at parametric angle `theta`.
    pub fn principal_curvatures(&self, theta: f64) -> (f64, f64) {
        let (st, ct) = theta.sin_cos();
        let w = (self.a * self.a * ct * ct + self.c * self.c * st * st).sqrt();
        let km = self.a * self.c / (w * w * w);
        let kp = self.c / (self.a * w);
        (km, kp)
    }

    /// Mean curvature at parametric angle `theta` (average of principal curvatures).
    pub fn mean_curvature(&self, theta: f64) -> f64 {
        let (km, kp) = self.principal_curvatures(theta);
        0.5 * (km + kp)
    }

    /// Conservative focal bound: smallest principal radius of curvature.
    pub fn focal_radius(&self) -> f64 {
        let kmax = (self.c / (self.a * self.a)).max(self.a / (self.c * self.c)).max(1.0 / self.a);
        1.0 / kmax
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    const SPH: Spheroid = Spheroid { a: 1.0, c: 1.5 };

    #[test]
    fn sphere_geodesic_is_great_circle() {
        let s = Spheroid { a: 1.0, c: 1.0 };
        let x0 = [0.0, 0.0, 1.0];
        let (x, _) = s.exp(&x0, &[PI, 0.0, 0.0]).unwrap();
        assert!(norm3(&sub3(&x, &[0.0, 0.0, -1.0])) < 1e-9);
        let (x, _) = s.exp(&x0, &[0.5, 0.0, 0.0]).unwrap();
        assert!(norm3(&sub3(&x, &[0.5f64.sin(), 0.0, 0.5f64.cos()])) < 1e-11);
    }

    #[test]
    fn exp_log_roundtrip_and_unit_speed() {
        let x0 = SPH.position(0.7, 0.3);
        let fr = SPH.angle_frame(0.7, 0.3);
        for y in [[0.2, -0.1], [0.05, 0.4], [-0.3, -0.3]] {
            let x = SPH.exp_frame(&x0, &fr, &y).unwrap();
            assert!(SPH.defect(&x).abs() < 1e-13);
            let back = SPH.log_frame(&x0, &fr, &x).unwrap();
            assert!((back[0] - y[0]).abs() < 1e-10 && (back[1] - y[1]).abs() < 1e-10);
        }
        // Speed is conserved along the geodesic.
        let v0 = add3(&scale3(&fr.e[0], 0.3), &scale3(&fr.e[1], 0.2));
        let (_, v) = SPH.exp(&x0, &v0).unwrap();
        assert!((norm3(&v) - norm3(&v0)).abs() < 1e-9);
    }

    #[test]
    fn spheroid_curvature_formulas() {
        // Pole: both principal curvatures c/a²; equator: a/c² and 1/a.
        let (km, kp) = SPH.principal_curvatures(0.0);
        assert!((km - 1.5).abs() < 1e-14 && (kp - 1.5).abs() < 1e-14);
        let (km, kp) = SPH.principal_curvatures(PI / 2.0);
        assert!((km - 1.0 / 2.25).abs() < 1e-14 && (kp - 1.0).abs() < 1e-14);
        // Cross-check against the Hessian second fundamental form.
        for th in [0.0, 0.4, 1.1, PI / 2.0] {
            let x = SPH.position(th, 0.2);
            let f = SPH.angle_frame(th, 0.2);
            let h = 0.5 * (SPH.second_form(&x, &f.e[0], &f.e[0]) + SPH.second_form(&x, &f.e[1], &f.e[1]));
            assert!((h - SPH.mean_curvature(th)).abs() < 1e-12);
        }
        // Monotone from equator to pole for prolate spheroids.
        let mut prev = SPH.mean_curvature(PI / 2.0);
        for k in 1..=50 {
            let th = PI / 2.0 * (1.0 - k as f64 / 50.0);
            let h = SPH.mean_curvature(th);
            assert!(h > prev);
            prev = h;
        }
    }

    #[test]
    fn closest_point_recovers_normal_offset() {
        let b = SPH.position(0.9, 1.3);
        let nu = SPH.normal_out(&b);
        let x = sub3(&b, &scale3(&nu, 0.3));
        let (c, d) = SPH.closest_point(&x);
        assert!(norm3(&sub3(&c, &b)) < 1e-12);
        assert!((d - 0.3).abs() < 1e-12);
    }
}
