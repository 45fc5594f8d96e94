//! Fermi charts `Ψ_ξ(ȳ, y_n)` and their metric data.
//!
//! For surface geometries `Ψ_ξ(ȳ, y_n) = β(ȳ) + y_n ν_in(β(ȳ))` where `β`
//! is the boundary exponential map in an orthonormal frame at `ξ`. The
//! metric is `g_ij = T_i·T_j` with `T_i = ∂_iβ + y_n ∂_i ν_in`, `g_in = 0`,
//! `g_nn = 1`. The `ȳ`-dependent data (`β`, `∂β`, `ν`, `∂ν`) are gathered
//! once per tangential location in a [`Column`], after which the `y_n`
//! dependence is analytic.

use super::{BoundaryPoint, Frame, Geometry};
use crate::error::{Error, Result};
use crate::linalg::{self, add3, dot3, scale3, Mat4, Vec3};

/// A Fermi chart at a boundary point.
#[derive(Debug, Clone)]
pub struct FermiChart {
    pub geom: Geometry,
    pub xi: BoundaryPoint,
    /// Chart radius `R`.
    pub radius: f64,
    base: Option<Vec3>,
    frame: Option<Frame>,
    /// Second fundamental form at `ξ`, `(n-1) x (n-1)`.
    pub h0: Vec<Vec<f64>>,
    /// Mean curvature at `ξ`.
    pub mean_curvature: f64,
}

/// Metric data along the normal line through one tangential location.
#[derive(Debug, Clone, Copy)]
pub enum Column {
    Synthetic { dim: usize, h: Mat4, quadratic: f64 },
    Surface { beta: Vec3, dbeta: [Vec3; 2], nu: Vec3, dnu: [Vec3; 2] },
}

/// Metric at one chart point. Only the leading `n x n` blocks are used.
#[derive(Debug, Clone, Copy)]
pub struct MetricPoint {
    pub n: usize,
    pub g: Mat4,
    pub ginv: Mat4,
    pub sqrt_g: f64,
    /// `∂_n ln √g`.
    pub dn_ln_sqrt_g: f64,
}

impl FermiChart {
    /// Build the chart at `xi` with radius `radius` and the default frame.
    pub fn new(geom: &Geometry, xi: &BoundaryPoint, radius: f64) -> Result<Self> {
        Self::with_frame(geom, xi, radius, None)
    }

    /// Build the chart with an explicit tangent frame (surface geometries).
    pub fn with_frame(geom: &Geometry, xi: &BoundaryPoint, radius: f64, frame: Option<Frame>) -> Result<Self> {
        geom.validate()?;
        xi.check(geom)?;
        let focal = geom.focal_radius();
        if !(radius > 0.0) || radius >= focal {
            return Err(Error::FocalRadiusExceeded { radius, focal });
        }
        let d = geom.n - 1;
        match geom.surface() {
            None => {
                let x = xi.flat().expect("flat point");
                let h0 = geom.synthetic_h(x).expect("synthetic");
                let hm = (0..d).map(|i| h0[i][i]).sum::<f64>() / d as f64;
                Ok(FermiChart { geom: geom.clone(), xi: xi.clone(), radius, base: None, frame: None, h0, mean_curvature: hm })
            }
            Some(s) => {
                let base = xi.ambient(geom).expect("ambient");
                let fr = frame.unwrap_or_else(|| geom.frame(xi).expect("frame"));
                let mut h0 = vec![vec![0.0; 2]; 2];
                for i in 0..2 {
                    for j in 0..2 {
                        h0[i][j] = s.second_form(&base, &fr.e[i], &fr.e[j]);
                    }
                }
                let hm = 0.5 * (h0[0][0] + h0[1][1]);
                Ok(FermiChart { geom: geom.clone(), xi: xi.clone(), radius, base: Some(base), frame: Some(fr), h0, mean_curvature: hm })
            }
        }
    }

    /// Dimension `n`.
    pub fn n(&self) -> usize {
        self.geom.n
    }

    /// Tangent frame at `ξ` (surface geometries).
    pub fn frame(&self) -> Option<Frame> {
        self.frame
    }

    /// Gather the tangential data at `ȳ`.
    pub fn column(&self, ybar: &[f64]) -> Result<Column> {
        let d = self.geom.n - 1;
        match self.geom.surface() {
            None => {
                let x = self.xi.flat().expect("flat");
                let xb: Vec<f64> = (0..d).map(|i| x[i] + ybar[i]).collect();
                let hv = self.geom.synthetic_h(&xb).expect("synthetic");
                let mut h = [[0.0; 4]; 4];
                for i in 0..d {
                    for j in 0..d {
                        h[i][j] = hv[i][j];
                    }
                }
                let quadratic = match &self.geom.kind {
                    super::GeometryKind::Synthetic(s) => s.quadratic,
                    _ => 0.0,
                };
                Ok(Column::Synthetic { dim: self.geom.n, h, quadratic })
            }
            Some(s) => {
                let base = self.base.expect("base");
                let fr = self.frame.expect("frame");
                let beta_at = |y: [f64; 2]| s.exp_frame(&base, &fr, &y);
                let beta = beta_at([ybar[0], ybar[1]])?;
                let dbeta = if ybar[0] == 0.0 && ybar[1] == 0.0 {
                    fr.e
                } else {
                    let step = 1e-5 * self.radius.max(1e-3);
                    let mut db = [[0.0; 3]; 2];
                    for k in 0..2 {
                        let mut yp = [ybar[0], ybar[1]];
                        let mut ym = yp;
                        yp[k] += step;
                        ym[k] -= step;
                        let bp = beta_at(yp)?;
                        let bm = beta_at(ym)?;
                        for i in 0..3 {
                            db[k][i] = (bp[i] - bm[i]) / (2.0 * step);
                        }
                    }
                    db
                };
                let nu = scale3(&s.normal_out(&beta), -1.0);
                let dnu = [s.dnormal_in(&beta, &dbeta[0]), s.dnormal_in(&beta, &dbeta[1])];
                Ok(Column::Surface { beta, dbeta, nu, dnu })
            }
        }
    }

    /// Metric at chart point `y`.
    pub fn metric(&self, y: &[f64]) -> Result<MetricPoint> {
        let n = self.geom.n;
        Ok(self.column(&y[..n - 1])?.at(y[n - 1]))
    }

    /// Ambient image `Ψ_ξ(y)` (surface geometries).
    pub fn map(&self, y: &[f64]) -> Result<Vec3> {
        match self.column(&y[..2])? {
            Column::Surface { beta, nu, .. } => Ok(add3(&beta, &scale3(&nu, y[2]))),
            Column::Synthetic { .. } => Err(Error::InvalidParams("synthetic charts have no ambient map".into())),
        }
    }
}

impl Column {
    /// Metric at normal coordinate `y_n`.
    pub fn at(&self, yn: f64) -> MetricPoint {
        match *self {
            Column::Synthetic { dim, h, quadratic } => {
                let d = dim - 1;
                let mut ginv = linalg::identity(dim);
                let mut dginv = [[0.0; 4]; 4];
                for i in 0..d {
                    for j in 0..d {
                        ginv[i][j] += 2.0 * h[i][j] * yn;
                        dginv[i][j] = 2.0 * h[i][j];
                    }
                    ginv[i][i] += quadratic * yn * yn;
                    dginv[i][i] += 2.0 * quadratic * yn;
                }
                let (g, det_inv) = linalg::inverse_det(&ginv, dim).expect("metric nondegenerate inside focal radius");
                let mut tr = 0.0;
                for i in 0..d {
                    for j in 0..d {
                        tr += g[i][j] * dginv[j][i];
                    }
                }
                MetricPoint { n: dim, g, ginv, sqrt_g: det_inv.powf(-0.5), dn_ln_sqrt_g: -0.5 * tr }
            }
            Column::Surface { dbeta, dnu, .. } => {
                let t = [add3(&dbeta[0], &scale3(&dnu[0], yn)), add3(&dbeta[1], &scale3(&dnu[1], yn))];
                let mut g = linalg::identity(3);
                let mut dg = [[0.0; 2]; 2];
                for i in 0..2 {
                    for j in 0..2 {
                        g[i][j] = dot3(&t[i], &t[j]);
                        dg[i][j] = dot3(&dnu[i], &t[j]) + dot3(&t[i], &dnu[j]);
                    }
                }
                let det = g[0][0] * g[1][1] - g[0][1] * g[1][0];
                let mut ginv = linalg::identity(3);
                ginv[0][0] = g[1][1] / det;
                ginv[1][1] = g[0][0] / det;
                ginv[0][1] = -g[0][1] / det;
                ginv[1][0] = -g[1][0] / det;
                let mut tr = 0.0;
                for i in 0..2 {
                    for j in 0..2 {
                        tr += ginv[i][j] * dg[j][i];
                    }
                }
                MetricPoint { n: 3, g, ginv, sqrt_g: det.sqrt(), dn_ln_sqrt_g: 0.5 * tr }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{norm3, sub3};

    fn fd_checks(chart: &FermiChart, tol: f64) {
        let n = chart.n();
        let d = n - 1;
        let mut zero = vec![0.0; n];
        let m0 = chart.metric(&zero).unwrap();
        for i in 0..n {
            for j in 0..n {
                let id = if i == j { 1.0 } else { 0.0 };
                assert!((m0.g[i][j] - id).abs() < 1e-14, "g(0) != Id");
            }
        }
        // Central FD in y_n is not available at the boundary; use a
        // second-order one-sided difference.
        let hs = 1e-4;
        let mut at = |t: f64| {
            zero[n - 1] = t;
            chart.metric(&zero).unwrap()
        };
        let (m1, m2) = (at(hs), at(2.0 * hs));
        for i in 0..d {
            for j in 0..d {
                let slope = (-3.0 * m0.ginv[i][j] + 4.0 * m1.ginv[i][j] - m2.ginv[i][j]) / (2.0 * hs);
                assert!((slope - 2.0 * chart.h0[i][j]).abs() < tol, "g^ij slope {slope} vs {}", 2.0 * chart.h0[i][j]);
            }
        }
        let slope = (-3.0 * m0.sqrt_g + 4.0 * m1.sqrt_g - m2.sqrt_g) / (2.0 * hs);
        assert!((slope + d as f64 * chart.mean_curvature).abs() < tol, "√g slope {slope}");
        // g^{in} = δ_in exactly, everywhere.
        for y in [[0.1, -0.05, 0.2, 0.1], [0.0, 0.2, 0.05, 0.3]] {
            let m = chart.metric(&y[..n]).unwrap();
            for i in 0..n {
                assert_eq!(m.ginv[i][n - 1], if i == n - 1 { 1.0 } else { 0.0 });
            }
        }
    }

    #[test]
    fn synthetic_charts_satisfy_expansions() {
        let flat = FermiChart::new(&Geometry::flat(3), &BoundaryPoint::Flat(vec![0.0, 0.0]), 1.0).unwrap();
        let m = flat.metric(&[0.3, 0.2, 0.4]).unwrap();
        assert_eq!(m.sqrt_g, 1.0);
        assert_eq!(flat.mean_curvature, 0.0);
        let g = Geometry::synthetic(3, vec![vec![0.5, 0.2], vec![0.2, -0.1]]);
        fd_checks(&FermiChart::new(&g, &BoundaryPoint::Flat(vec![0.0, 0.0]), 1.0).unwrap(), 1e-6);
        fd_checks(&FermiChart::new(&Geometry::umbilic(4, 0.8), &BoundaryPoint::Flat(vec![0.0; 3]), 1.0).unwrap(), 1e-6);
    }

    #[test]
    fn surface_charts_satisfy_expansions() {
        let ball = FermiChart::new(&Geometry::ball(1.0), &BoundaryPoint::Angles { theta: 0.7, phi: 1.0 }, 0.5).unwrap();
        assert!((ball.mean_curvature - 1.0).abs() < 1e-13);
        fd_checks(&ball, 1e-6);
        let sph = Geometry::spheroid(1.0, 1.5);
        for th in [0.0, 0.6, 1.3] {
            let c = FermiChart::new(&sph, &BoundaryPoint::Angles { theta: th, phi: 0.4 }, 0.5).unwrap();
            fd_checks(&c, 1e-6);
        }
    }

    #[test]
    fn chart_points_have_correct_boundary_distance() {
        let sph = Geometry::spheroid(1.0, 2.0);
        let c = FermiChart::new(&sph, &BoundaryPoint::Angles { theta: 0.3, phi: 0.0 }, 0.4).unwrap();
        let s = sph.surface().unwrap();
        // H at the pole of a (1, 2) spheroid is c/a² = 2.
        let pole = FermiChart::new(&sph, &BoundaryPoint::Angles { theta: 0.0, phi: 0.0 }, 0.4).unwrap();
        assert!((pole.mean_curvature - 2.0).abs() < 1e-12);
        for y in [[0.1, 0.2, 0.0], [-0.2, 0.1, 0.15], [0.3, -0.3, 0.3]] {
            let x = c.map(&y).unwrap();
            if y[2] == 0.0 {
                assert!(s.defect(&x).abs() < 1e-12);
            }
            let (b, dist) = s.closest_point(&x);
            assert!((dist - y[2]).abs() < 1e-10);
            assert!(norm3(&sub3(&b, &c.map(&[y[0], y[1], 0.0]).unwrap())) < 1e-10);
        }
    }

    #[test]
    fn focal_radius_is_enforced() {
        let sph = Geometry::spheroid(1.0, 1.5);
        let r = FermiChart::new(&sph, &BoundaryPoint::Angles { theta: 0.0, phi: 0.0 }, 0.7);
        assert!(matches!(r, Err(Error::FocalRadiusExceeded { .. })));
    }
}
