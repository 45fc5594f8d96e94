//! Manifolds with boundary, boundary points, boundary geodesics, Fermi
//! charts, mean curvature and boundary transition maps.
//!
//! Three catalog geometries are supported:
//!
//! * **synthetic** — the half-space `{y_n ≥ 0}` in dimension 3 or 4 with
//!   inverse metric `g^{ij} = δ_ij + 2 h_ij(ȳ) y_n (+ q y_n² δ_ij)` on the
//!   tangential block and `g^{in} = δ_in`. Coordinates are already Fermi
//!   coordinates, the boundary is flat and `h_ij` is exactly the second
//!   fundamental form. `h` may carry a Gaussian bump to prescribe a mean
//!   curvature with one nondegenerate maximum;
//! * **ball** — the interior of a round sphere in R³;
//! * **spheroid** — the interior of `(x²+y²)/a² + z²/c² ≤ 1` in R³.
//!
//! Sign convention: `h` is positive for convex boundaries, so that the
//! volume element decays inward, `√g = 1 - (n-1) H y_n + O(|y|²)`.

mod chart;
pub mod surface;

pub use chart::{Column, FermiChart, MetricPoint};
pub use surface::{Frame, Spheroid};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{self, norm3, sub3, Vec3};

/// Gaussian bump added to the synthetic second fundamental form:
/// `h(x̄) = h₀ + A exp(-|x̄ - c|²/(2w²)) Id`.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureBump {
    pub amplitude: f64,
    pub center: Vec<f64>,
    pub width: f64,
}

/// Parameters of the synthetic half-space geometry.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    /// Constant part of `h_ij`, `(n-1) x (n-1)`, symmetric.
    pub h: Vec<Vec<f64>>,
    /// Coefficient of the optional higher-order term `q y_n² δ_ij`.
    pub quadratic: f64,
    /// Optional position-dependent curvature bump.
    pub bump: Option<CurvatureBump>,
}

/// Geometry kinds.
#[derive(Debug, Clone, PartialEq)]
pub enum GeometryKind {
    Synthetic(SyntheticSpec),
    Ball { radius: f64 },
    Spheroid { a: f64, c: f64 },
}

/// A manifold with boundary.
#[derive(Debug, Clone, PartialEq)]
pub struct Geometry {
    pub n: usize,
    pub kind: GeometryKind,
}

/// Chart-free coordinates of a boundary point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum BoundaryPoint {
    /// Cartesian boundary coordinates `x̄ ∈ R^{n-1}` (synthetic geometry).
    Flat(Vec<f64>),
    /// Parametric polar angle and azimuth (ball and spheroid).
    Angles { theta: f64, phi: f64 },
}

/// Result of the boundary transition-map checks.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransitionReport {
    /// Finite-difference Jacobian `∂Ẽ_k/∂y_j` at `(0, 0)`.
    pub jacobian: Vec<Vec<f64>>,
    /// `max |J + Id|`.
    pub deviation: f64,
    /// `max |H̃(0, η̄, η_n) - (η̄, η_n)|` over sample points.
    pub identity_defect: f64,
    /// `max |∂H̃_n/∂y_j|` over sample points.
    pub normal_dependence: f64,
}

impl Geometry {
    /// Flat half-space (`h = 0`).
    pub fn flat(n: usize) -> Self {
        Self::synthetic(n, vec![vec![0.0; n - 1]; n - 1])
    }

    /// Synthetic half-space with constant `h`.
    pub fn synthetic(n: usize, h: Vec<Vec<f64>>) -> Self {
        Geometry { n, kind: GeometryKind::Synthetic(SyntheticSpec { h, quadratic: 0.0, bump: None }) }
    }

    /// Synthetic half-space with `h = κ Id`.
    pub fn umbilic(n: usize, kappa: f64) -> Self {
        let mut h = vec![vec![0.0; n - 1]; n - 1];
        for (i, row) in h.iter_mut().enumerate() {
            row[i] = kappa;
        }
        Self::synthetic(n, h)
    }

    pub fn ball(radius: f64) -> Self {
        Geometry { n: 3, kind: GeometryKind::Ball { radius } }
    }

    pub fn spheroid(a: f64, c: f64) -> Self {
        Geometry { n: 3, kind: GeometryKind::Spheroid { a, c } }
    }

    /// Check the geometry's invariants.
    pub fn validate(&self) -> Result<()> {
        match &self.kind {
            GeometryKind::Synthetic(s) => {
                if self.n != 3 && self.n != 4 {
                    return Err(Error::InvalidParams(format!("synthetic geometry needs n in {{3,4}}, got {}", self.n)));
                }
                let d = self.n - 1;
                if s.h.len() != d || s.h.iter().any(|r| r.len() != d) {
                    return Err(Error::InvalidParams(format!("h must be {d}x{d}")));
                }
                for i in 0..d {
                    for j in 0..d {
                        if !s.h[i][j].is_finite() || (s.h[i][j] - s.h[j][i]).abs() > 1e-14 {
                            return Err(Error::InvalidParams("h must be finite and symmetric".into()));
                        }
                    }
                }
                if let Some(b) = &s.bump {
                    if b.center.len() != d || !(b.width > 0.0) || !b.amplitude.is_finite() {
                        return Err(Error::InvalidParams("invalid curvature bump".into()));
                    }
                }
                Ok(())
            }
            GeometryKind::Ball { radius } => {
                if self.n != 3 || !(*radius > 0.0) {
                    return Err(Error::InvalidParams("ball needs n = 3 and radius > 0".into()));
                }
                Ok(())
            }
            GeometryKind::Spheroid { a, c } => {
                if self.n != 3 || !(*a > 0.0) || !(*c > 0.0) {
                    return Err(Error::InvalidParams("spheroid needs n = 3 and positive semi-axes".into()));
                }
                Ok(())
            }
        }
    }

    /// The embedded boundary surface, for ball and spheroid.
    pub fn surface(&self) -> Option<Spheroid> {
        match self.kind {
            GeometryKind::Ball { radius } => Some(Spheroid { a: radius, c: radius }),
            GeometryKind::Spheroid { a, c } => Some(Spheroid { a, c }),
            GeometryKind::Synthetic(_) => None,
        }
    }

    /// Synthetic second fundamental form at boundary coordinates `x̄`.
    pub fn synthetic_h(&self, xbar: &[f64]) -> Option<Vec<Vec<f64>>> {
        let GeometryKind::Synthetic(s) = &self.kind else { return None };
        let mut h = s.h.clone();
        if let Some(b) = &s.bump {
            let d2: f64 = xbar.iter().zip(&b.center).map(|(x, c)| (x - c) * (x - c)).sum();
            let add = b.amplitude * (-0.5 * d2 / (b.width * b.width)).exp();
            for (i, row) in h.iter_mut().enumerate() {
                row[i] += add;
            }
        }
        Some(h)
    }

    /// Conservative focal bound for the chart radius.
    pub fn focal_radius(&self) -> f64 {
        match &self.kind {
            GeometryKind::Synthetic(s) => {
                // The tangential inverse metric 1 + 2λ y_n (+ q y_n²) must stay
                // positive; only negative curvature can violate that.
                let mut lam_min = linalg::sym_eigenvalues(&s.h)[0];
                if let Some(b) = &s.bump {
                    lam_min += b.amplitude.min(0.0);
                }
                let mut r = if lam_min < 0.0 { 1.0 / (2.0 * -lam_min) } else { f64::INFINITY };
                if s.quadratic < 0.0 {
                    r = r.min(1.0 / (-s.quadratic).sqrt());
                }
                r
            }
            _ => self.surface().map(|s| s.focal_radius()).unwrap_or(f64::INFINITY),
        }
    }

    /// Default tangent frame at a boundary point.
    pub fn frame(&self, xi: &BoundaryPoint) -> Option<Frame> {
        match (self.surface(), xi) {
            (Some(s), BoundaryPoint::Angles { theta, phi }) => Some(s.angle_frame(*theta, *phi)),
            _ => None,
        }
    }
}

impl BoundaryPoint {
    /// Ambient position for surface geometries.
    pub fn ambient(&self, geom: &Geometry) -> Option<Vec3> {
        match (geom.surface(), self) {
            (Some(s), BoundaryPoint::Angles { theta, phi }) => Some(s.position(*theta, *phi)),
            _ => None,
        }
    }

    /// Flat coordinates (synthetic geometry).
    pub fn flat(&self) -> Option<&[f64]> {
        match self {
            BoundaryPoint::Flat(x) => Some(x),
            _ => None,
        }
    }

    /// Check that the point is compatible with the geometry and lies on the
    /// boundary to `1e-12`.
    pub fn check(&self, geom: &Geometry) -> Result<()> {
        match (&geom.kind, self) {
            (GeometryKind::Synthetic(_), BoundaryPoint::Flat(x)) if x.len() == geom.n - 1 => Ok(()),
            (GeometryKind::Ball { .. } | GeometryKind::Spheroid { .. }, BoundaryPoint::Angles { theta, phi })
                if theta.is_finite() && phi.is_finite() =>
            {
                let s = geom.surface().expect("surface geometry");
                let d = s.defect(&s.position(*theta, *phi));
                if d.abs() < 1e-12 {
                    Ok(())
                } else {
                    Err(Error::InvalidParams(format!("boundary defect {d:.3e}")))
                }
            }
            _ => Err(Error::InvalidParams(format!("boundary point {self:?} does not match geometry"))),
        }
    }

    /// Flat-coordinate or angle vector, for reporting.
    pub fn coords(&self) -> Vec<f64> {
        match self {
            BoundaryPoint::Flat(x) => x.clone(),
            BoundaryPoint::Angles { theta, phi } => vec![*theta, *phi],
        }
    }
}

/// Mean curvature `H = tr(h)/(n-1)` at a boundary point.
pub fn mean_curvature(geom: &Geometry, xi: &BoundaryPoint) -> Result<f64> {
    xi.check(geom)?;
    match (&geom.kind, xi) {
        (GeometryKind::Synthetic(_), BoundaryPoint::Flat(x)) => {
            let h = geom.synthetic_h(x).expect("synthetic");
            Ok((0..geom.n - 1).map(|i| h[i][i]).sum::<f64>() / (geom.n - 1) as f64)
        }
        (_, BoundaryPoint::Angles { theta, .. }) => Ok(geom.surface().expect("surface").mean_curvature(*theta)),
        _ => unreachable!("checked above"),
    }
}

/// Boundary exponential map `exp_ξ(y)` with `y` in the default frame at `ξ`.
pub fn boundary_exp(geom: &Geometry, xi: &BoundaryPoint, y: &[f64]) -> Result<BoundaryPoint> {
    xi.check(geom)?;
    if y.len() != geom.n - 1 {
        return Err(Error::InvalidParams("tangent vector has wrong dimension".into()));
    }
    match xi {
        BoundaryPoint::Flat(x) => Ok(BoundaryPoint::Flat(x.iter().zip(y).map(|(a, b)| a + b).collect())),
        BoundaryPoint::Angles { theta, phi } => {
            if y.iter().all(|v| *v == 0.0) {
                return Ok(xi.clone());
            }
            let s = geom.surface().expect("surface");
            let fr = s.angle_frame(*theta, *phi);
            let x = s.exp_frame(&s.position(*theta, *phi), &fr, y)?;
            let (t, p) = s.angles(&x);
            Ok(BoundaryPoint::Angles { theta: t, phi: p })
        }
    }
}

/// Inverse of [`boundary_exp`]: frame components of the geodesic from `xi` to `target`.
pub fn boundary_log(geom: &Geometry, xi: &BoundaryPoint, target: &BoundaryPoint) -> Result<Vec<f64>> {
    xi.check(geom)?;
    target.check(geom)?;
    match (xi, target) {
        (BoundaryPoint::Flat(a), BoundaryPoint::Flat(b)) => Ok(b.iter().zip(a).map(|(x, y)| x - y).collect()),
        (BoundaryPoint::Angles { theta, phi }, _) => {
            let s = geom.surface().expect("surface");
            let x0 = s.position(*theta, *phi);
            let xt = target.ambient(geom).expect("surface point");
            if norm3(&sub3(&x0, &xt)) == 0.0 {
                return Ok(vec![0.0, 0.0]);
            }
            let fr = s.angle_frame(*theta, *phi);
            Ok(s.log_frame(&x0, &fr, &xt)?.to_vec())
        }
        _ => Err(Error::InvalidParams("mismatched boundary points".into())),
    }
}

/// Geodesic distance on the boundary.
pub fn boundary_distance(geom: &Geometry, a: &BoundaryPoint, b: &BoundaryPoint) -> Result<f64> {
    Ok(boundary_log(geom, a, b)?.iter().map(|v| v * v).sum::<f64>().sqrt())
}

/// Finite-difference checks of the boundary transition maps at `xi0`:
/// the Jacobian of `Ẽ(y, η̄) = (exp_{ξ(y)})^{-1}(exp_{ξ0}(η̄))` in `y` at
/// `(0, 0)`, the identity `H̃(0, η̄, η_n) = (η̄, η_n)` and the independence
/// of the normal component `H̃_n` from `y`.
pub fn transition_jacobian(geom: &Geometry, xi0: &BoundaryPoint) -> Result<TransitionReport> {
    xi0.check(geom)?;
    let d = geom.n - 1;
    let delta = 1e-4;
    let scale = 0.5 * geom.focal_radius().min(1.0);
    let samples: Vec<(Vec<f64>, f64)> = {
        let base = [[0.1, 0.05, 0.02], [-0.2, 0.1, -0.05], [0.05, -0.15, 0.1]];
        base.iter()
            .flat_map(|b| [0.05, 0.2].map(|t| (b[..d].iter().map(|v| v * scale).collect(), t * scale)))
            .collect()
    };
    match geom.surface() {
        None => {
            // Synthetic: the boundary is flat, charts are translations.
            let x0 = xi0.flat().expect("flat point").to_vec();
            let e = |y: &[f64], eta: &[f64]| -> Vec<f64> {
                (0..d).map(|k| (x0[k] + eta[k]) - (x0[k] + y[k])).collect()
            };
            let mut jac = vec![vec![0.0; d]; d];
            for j in 0..d {
                let mut yp = vec![0.0; d];
                let mut ym = vec![0.0; d];
                yp[j] = delta;
                ym[j] = -delta;
                let ep = e(&yp, &vec![0.0; d]);
                let em = e(&ym, &vec![0.0; d]);
                for k in 0..d {
                    jac[k][j] = (ep[k] - em[k]) / (2.0 * delta);
                }
            }
            let mut idd: f64 = 0.0;
            for (eta, _) in &samples {
                let back = e(&vec![0.0; d], eta);
                for k in 0..d {
                    idd = idd.max((back[k] - eta[k]).abs());
                }
            }
            Ok(report(jac, idd, 0.0))
        }
        Some(s) => {
            let fr0 = geom.frame(xi0).expect("frame");
            let x0 = xi0.ambient(geom).expect("ambient");
            let chart0 = FermiChart::with_frame(geom, xi0, scale, Some(fr0))?;
            // Ẽ(y, 0) = log_{ξ(y)}(ξ0), in the frame at ξ(y) transported from ξ0.
            let e_tilde = |y: &[f64], target: &Vec3| -> Result<[f64; 2]> {
                let xy = s.exp_frame(&x0, &fr0, y)?;
                let fy = s.transported_frame(&xy, &fr0);
                s.log_frame(&xy, &fy, target)
            };
            let mut jac = vec![vec![0.0; 2]; 2];
            for j in 0..2 {
                let mut yp = [0.0; 2];
                let mut ym = [0.0; 2];
                yp[j] = delta;
                ym[j] = -delta;
                let ep = e_tilde(&yp, &x0)?;
                let em = e_tilde(&ym, &x0)?;
                for k in 0..2 {
                    jac[k][j] = (ep[k] - em[k]) / (2.0 * delta);
                }
            }
            // H̃(y, η) = Fermi coordinates, w.r.t. the chart at ξ(y), of Ψ_{ξ0}(η).
            let h_tilde = |y: &[f64], eta: &[f64], eta_n: f64| -> Result<[f64; 3]> {
                let x = chart0.map(&[eta[0], eta[1], eta_n])?;
                let xy = s.exp_frame(&x0, &fr0, y)?;
                let fy = s.transported_frame(&xy, &fr0);
                let (b, dist) = s.closest_point(&x);
                let tb = if norm3(&sub3(&b, &xy)) == 0.0 { [0.0, 0.0] } else { s.log_frame(&xy, &fy, &b)? };
                Ok([tb[0], tb[1], dist])
            };
            let mut idd: f64 = 0.0;
            let mut ndep: f64 = 0.0;
            for (eta, eta_n) in &samples {
                let h0 = h_tilde(&[0.0, 0.0], eta, *eta_n)?;
                idd = idd.max((h0[0] - eta[0]).abs()).max((h0[1] - eta[1]).abs()).max((h0[2] - eta_n).abs());
                for j in 0..2 {
                    let mut yp = [0.0; 2];
                    let mut ym = [0.0; 2];
                    yp[j] = delta;
                    ym[j] = -delta;
                    let hp = h_tilde(&yp, eta, *eta_n)?;
                    let hm = h_tilde(&ym, eta, *eta_n)?;
                    ndep = ndep.max(((hp[2] - hm[2]) / (2.0 * delta)).abs());
                }
            }
            Ok(report(jac, idd, ndep))
        }
    }
}

fn report(jac: Vec<Vec<f64>>, identity_defect: f64, normal_dependence: f64) -> TransitionReport {
    let mut dev: f64 = 0.0;
    for (k, row) in jac.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            dev = dev.max((v + if j == k { 1.0 } else { 0.0 }).abs());
        }
    }
    TransitionReport { jacobian: jac, deviation: dev, identity_defect, normal_dependence }
}

/// Curvature table `(coords..., H)` as CSV, for a list of boundary points.
pub fn curvature_table_csv(geom: &Geometry, points: &[BoundaryPoint]) -> Result<String> {
    let mut s = match geom.surface() {
        Some(_) => String::from("theta,phi,H\n"),
        None => {
            let mut h: Vec<String> = (1..geom.n).map(|i| format!("x{i}")).collect();
            h.push("H".into());
            h.join(",") + "\n"
        }
    };
    for p in points {
        let h = mean_curvature(geom, p)?;
        let mut cols: Vec<String> = p.coords().iter().map(|v| format!("{v:.12e}")).collect();
        cols.push(format!("{h:.12e}"));
        s.push_str(&cols.join(","));
        s.push('\n');
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn synthetic_mean_curvature_is_trace() {
        let g = Geometry::synthetic(3, vec![vec![0.3, 0.1], vec![0.1, 0.7]]);
        let h = mean_curvature(&g, &BoundaryPoint::Flat(vec![0.0, 0.0])).unwrap();
        assert!((h - 0.5).abs() < 1e-15);
        assert_eq!(mean_curvature(&Geometry::flat(4), &BoundaryPoint::Flat(vec![0.0; 3])).unwrap(), 0.0);
    }

    #[test]
    fn ball_mean_curvature_is_one_everywhere() {
        let g = Geometry::ball(1.0);
        for (t, p) in [(0.0, 0.0), (0.7, 2.0), (PI / 2.0, -1.0), (2.9, 0.4)] {
            let h = mean_curvature(&g, &BoundaryPoint::Angles { theta: t, phi: p }).unwrap();
            assert!((h - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn reparametrized_point_agrees() {
        let g = Geometry::spheroid(1.0, 1.5);
        let a = BoundaryPoint::Angles { theta: 0.8, phi: 0.3 };
        let b = BoundaryPoint::Angles { theta: 0.8, phi: 0.3 + 2.0 * PI };
        let c = BoundaryPoint::Angles { theta: -0.8, phi: 0.3 + PI };
        let ha = mean_curvature(&g, &a).unwrap();
        assert!((ha - mean_curvature(&g, &b).unwrap()).abs() < 1e-10);
        assert!((ha - mean_curvature(&g, &c).unwrap()).abs() < 1e-10);
        assert!(norm3(&sub3(&a.ambient(&g).unwrap(), &c.ambient(&g).unwrap())) < 1e-15);
    }

    #[test]
    fn boundary_exp_properties() {
        let g = Geometry::spheroid(1.0, 1.5);
        let xi = BoundaryPoint::Angles { theta: 0.5, phi: 0.0 };
        assert_eq!(boundary_exp(&g, &xi, &[0.0, 0.0]).unwrap(), xi);
        let y = [0.21, -0.13];
        let e = boundary_exp(&g, &xi, &y).unwrap();
        let dist = boundary_distance(&g, &xi, &e).unwrap();
        assert!((dist - (y[0] * y[0] + y[1] * y[1]).sqrt()).abs() < 1e-10);
        // Antipode on the unit sphere.
        let b = Geometry::ball(1.0);
        let np = BoundaryPoint::Angles { theta: 0.0, phi: 0.0 };
        let sp = boundary_exp(&b, &np, &[PI, 0.0]).unwrap();
        let x = sp.ambient(&b).unwrap();
        assert!(norm3(&sub3(&x, &[0.0, 0.0, -1.0])) < 1e-9);
    }

    #[test]
    fn focal_bounds() {
        assert!((Geometry::spheroid(1.0, 1.5).focal_radius() - 1.0 / 1.5).abs() < 1e-15);
        assert!((Geometry::ball(2.0).focal_radius() - 2.0).abs() < 1e-15);
        assert!(Geometry::umbilic(3, 1.0).focal_radius().is_infinite());
        assert!((Geometry::umbilic(3, -0.5).focal_radius() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn transition_maps() {
        for (g, xi) in [
            (Geometry::umbilic(3, 0.7), BoundaryPoint::Flat(vec![0.1, -0.3])),
            (Geometry::ball(1.0), BoundaryPoint::Angles { theta: 0.9, phi: 0.2 }),
            (Geometry::spheroid(1.0, 1.5), BoundaryPoint::Angles { theta: 0.0, phi: 0.0 }),
            (Geometry::spheroid(1.0, 1.5), BoundaryPoint::Angles { theta: 1.1, phi: -0.4 }),
        ] {
            let r = transition_jacobian(&g, &xi).unwrap();
            assert!(r.deviation < 1e-4, "{g:?} {r:?}");
            assert!(r.identity_defect < 1e-10, "{g:?} {r:?}");
            assert!(r.normal_dependence < 1e-6, "{g:?} {r:?}");
        }
    }
}
