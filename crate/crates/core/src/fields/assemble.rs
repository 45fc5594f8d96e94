//! Metric sampling and weak-form assembly on a [`Grid`].
//!
//! The stiffness form `∫ √g g^{ab} ∂_a u ∂_b v dy` is assembled cell by
//! cell with the metric frozen at the cell centre. Diagonal terms
//! (`a = b`) use the vertex-centred finite-volume edge coupling (the
//! 2n+1-point stencil on a non-uniform grid), off-diagonal terms use exact
//! `Q1` cross integrals. The mass matrix is lumped: `m_v = |dual cell| √g(v)`.
//! Neumann faces are natural; Dirichlet faces are eliminated symmetrically.

use std::sync::{Arc, OnceLock};

use super::grid::Grid;
use super::sparse::Csr;
use crate::error::{Error, Result};
use crate::geometry::{Column, FermiChart, MetricPoint};

/// Face condition kind.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize)]
pub enum FaceKind {
    Neumann,
    Dirichlet,
}

/// Boundary conditions on the physical face `y_n = 0` and on the
/// artificial truncation faces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize)]
pub struct Boundary {
    pub physical: FaceKind,
    pub truncation: FaceKind,
}

impl Boundary {
    /// Homogeneous Neumann everywhere.
    pub const NEUMANN: Boundary = Boundary { physical: FaceKind::Neumann, truncation: FaceKind::Neumann };
    /// Homogeneous Dirichlet everywhere.
    pub const DIRICHLET: Boundary = Boundary { physical: FaceKind::Dirichlet, truncation: FaceKind::Dirichlet };

    /// True if any face is Dirichlet.
    pub fn has_dirichlet(&self) -> bool {
        self.physical == FaceKind::Dirichlet || self.truncation == FaceKind::Dirichlet
    }
}

/// Metric samples at nodes and cell centres.
#[derive(Debug, Clone)]
pub struct MetricSamples {
    pub n: usize,
    /// `√g` at nodes.
    pub sqrt_g: Vec<f64>,
    /// `g^{ab}` at nodes, `n²` entries per node.
    pub ginv: Vec<f64>,
    /// `Γ^b = (1/√g) ∂_a(√g g^{ab})` at nodes, `n` entries per node.
    pub gamma: Vec<f64>,
    /// `√g g^{ab}` at cell centres, `n²` entries per cell.
    pub cell_k: Vec<f64>,
}

/// Grid, metric and assembled stiffness/mass for one chart.
#[derive(Debug)]
pub struct Discretization {
    pub grid: Arc<Grid>,
    pub metric: MetricSamples,
    /// Stiffness matrix of `∫ √g g^{ab} ∂_a u ∂_b v`.
    pub stiffness: Csr,
    /// Lumped mass `|dual cell| √g`.
    pub mass: Vec<f64>,
    /// Mean curvature of the chart base point.
    pub mean_curvature: f64,
    fingerprint: u64,
    stiffness_dirichlet: OnceLock<Vec<(Boundary, Arc<Csr>)>>,
}

fn tangential_points(grid: &Grid, centres: bool) -> Vec<Vec<f64>> {
    let d = grid.n - 1;
    let axes: Vec<Vec<f64>> = (0..d)
        .map(|a| {
            let x = &grid.axes[a];
            if centres {
                x.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
            } else {
                x.clone()
            }
        })
        .collect();
    let count: usize = axes.iter().map(|a| a.len()).product();
    let mut out = Vec::with_capacity(count);
    let mut idx = vec![0usize; d];
    for _ in 0..count {
        out.push((0..d).map(|a| axes[a][idx[a]]).collect());
        for a in (0..d).rev() {
            idx[a] += 1;
            if idx[a] < axes[a].len() {
                break;
            }
            idx[a] = 0;
        }
    }
    out
}

fn columns(chart: &FermiChart, pts: &[Vec<f64>]) -> Result<Vec<Column>> {
    pts.iter().map(|p| chart.column(p)).collect()
}

/// Second-order derivative weights at node `i` of a non-uniform axis.
fn fd_weights(x: &[f64], i: usize) -> ([usize; 3], [f64; 3]) {
    let m = x.len();
    if m == 2 {
        let h = x[1] - x[0];
        return ([0, 1, 1], [-1.0 / h, 1.0 / h, 0.0]);
    }
    let (j0, c) = if i == 0 {
        (0, 0)
    } else if i + 1 == m {
        (m - 3, 2)
    } else {
        (i - 1, 1)
    };
    // Derivative of the quadratic interpolant through x[j0..j0+3] at x[j0+c].
    let p = [x[j0], x[j0 + 1], x[j0 + 2]];
    let t = p[c];
    let mut w = [0.0; 3];
    for k in 0..3 {
        let mut denom = 1.0;
        for l in 0..3 {
            if l != k {
                denom *= p[k] - p[l];
            }
        }
        let mut num = 0.0;
        for l in 0..3 {
            if l == k {
                continue;
            }
            let mut prod = 1.0;
            for mm in 0..3 {
                if mm != k && mm != l {
                    prod *= t - p[mm];
                }
            }
            num += prod;
        }
        w[k] = num / denom;
    }
    ([j0, j0 + 1, j0 + 2], w)
}

impl MetricSamples {
    /// Sample a chart's metric on a grid.
    pub fn sample(chart: &FermiChart, grid: &Grid) -> Result<Self> {
        let n = grid.n;
        if chart.n() != n {
            return Err(Error::GridMismatch(format!("chart dimension {} vs grid dimension {n}", chart.n())));
        }
        let nn = n * n;
        let normal = &grid.axes[n - 1];
        let mn = normal.len();
        let node_cols = columns(chart, &tangential_points(grid, false))?;
        let total = grid.len();
        let mut sqrt_g = vec![0.0; total];
        let mut ginv = vec![0.0; total * nn];
        let mut dn = vec![0.0; total];
        for (c, col) in node_cols.iter().enumerate() {
            for (k, &yn) in normal.iter().enumerate() {
                let idx = c * mn + k;
                let mp: MetricPoint = col.at(yn);
                sqrt_g[idx] = mp.sqrt_g;
                dn[idx] = mp.dn_ln_sqrt_g;
                for a in 0..n {
                    for b in 0..n {
                        ginv[idx * nn + a * n + b] = mp.ginv[a][b];
                    }
                }
            }
        }
        // Γ^b: tangential part by finite differences of √g g^{ab} along the
        // tangential axes, normal part analytic (g^{an} = δ_{an}).
        let mut gamma = vec![0.0; total * n];
        let mut mi = vec![0usize; n];
        for idx in 0..total {
            grid.multi(idx, &mut mi);
            for b in 0..n - 1 {
                let mut s = 0.0;
                for a in 0..n - 1 {
                    let (js, w) = fd_weights(&grid.axes[a], mi[a]);
                    let mut mj = mi.clone();
                    for (j, wk) in js.iter().zip(w) {
                        mj[a] = *j;
                        let jdx = grid.flat(&mj);
                        s += wk * sqrt_g[jdx] * ginv[jdx * nn + a * n + b];
                    }
                }
                gamma[idx * n + b] = s / sqrt_g[idx];
            }
            gamma[idx * n + n - 1] = dn[idx];
        }
        let cell_cols = columns(chart, &tangential_points(grid, true))?;
        let centres: Vec<f64> = normal.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
        let mut cell_k = vec![0.0; grid.cells() * nn];
        for (c, col) in cell_cols.iter().enumerate() {
            for (k, &yn) in centres.iter().enumerate() {
                let cidx = c * (mn - 1) + k;
                let mp = col.at(yn);
                for a in 0..n {
                    for b in 0..n {
                        cell_k[cidx * nn + a * n + b] = mp.sqrt_g * mp.ginv[a][b];
                    }
                }
            }
        }
        Ok(MetricSamples { n, sqrt_g, ginv, gamma, cell_k })
    }
}

impl Discretization {
    /// Sample the metric and assemble stiffness and mass.
    pub fn new(chart: &FermiChart, grid: Grid) -> Result<Self> {
        let metric = MetricSamples::sample(chart, &grid)?;
        let stiffness = assemble_stiffness(&grid, &metric);
        let mass = (0..grid.len()).map(|i| grid.dual_volume(i) * metric.sqrt_g[i]).collect();
        let fingerprint = grid.fingerprint();
        Ok(Discretization {
            grid: Arc::new(grid),
            metric,
            stiffness,
            mass,
            mean_curvature: chart.mean_curvature,
            fingerprint,
            stiffness_dirichlet: OnceLock::new(),
        })
    }

    /// Grid fingerprint used for mismatch detection.
    pub fn fingerprint(&self) -> u64 {
        self.fingerprint
    }

    /// Number of unknowns.
    pub fn len(&self) -> usize {
        self.mass.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mass.is_empty()
    }

    /// Dirichlet mask for a boundary configuration.
    pub fn dirichlet_mask(&self, bc: Boundary) -> Vec<bool> {
        let g = &self.grid;
        let n = g.n;
        let mut m = vec![0usize; n];
        (0..g.len())
            .map(|i| {
                g.multi(i, &mut m);
                let phys = m[n - 1] == 0;
                let trunc = (0..n).any(|a| m[a] + 1 == g.dims[a] || (a < n - 1 && m[a] == 0));
                (phys && bc.physical == FaceKind::Dirichlet) || (trunc && bc.truncation == FaceKind::Dirichlet)
            })
            .collect()
    }

    /// Stiffness with Dirichlet rows and columns zeroed (cached).
    pub fn stiffness_for(&self, bc: Boundary) -> Arc<Csr> {
        if !bc.has_dirichlet() {
            return Arc::new(self.stiffness.clone());
        }
        let cache = self.stiffness_dirichlet.get_or_init(|| {
            [Boundary::DIRICHLET, Boundary { physical: FaceKind::Dirichlet, truncation: FaceKind::Neumann }, Boundary { physical: FaceKind::Neumann, truncation: FaceKind::Dirichlet }]
                .into_iter()
                .map(|b| {
                    let mask = self.dirichlet_mask(b);
                    let mut s = self.stiffness.clone();
                    for i in 0..s.nrows {
                        for k in s.row_ptr[i]..s.row_ptr[i + 1] {
                            if mask[i] || mask[s.cols[k] as usize] {
                                s.vals[k] = 0.0;
                            }
                        }
                    }
                    (b, Arc::new(s))
                })
                .collect()
        });
        cache.iter().find(|(b, _)| *b == bc).map(|(_, s)| s.clone()).expect("all Dirichlet combinations cached")
    }

    /// `∫ √g g^{ab} ∂_a u ∂_b v`.
    pub fn stiffness_form(&self, u: &[f64], v: &[f64]) -> f64 {
        self.stiffness.form(u, v)
    }

    /// Lumped `∫ u v dμ_g`.
    pub fn mass_form(&self, u: &[f64], v: &[f64]) -> f64 {
        self.mass.iter().zip(u).zip(v).map(|((m, a), b)| m * a * b).sum()
    }

    /// Lumped `∫ w dμ_g`.
    pub fn integral(&self, w: &[f64]) -> f64 {
        self.mass.iter().zip(w).map(|(m, a)| m * a).sum()
    }
}

fn assemble_stiffness(grid: &Grid, metric: &MetricSamples) -> Csr {
    let n = grid.n;
    let nn = n * n;
    let corners = 1usize << n;
    let width = 3usize.pow(n as u32);
    let total = grid.len();
    let mut stencil = vec![0.0; total * width];
    // Offset code of the relative position d ∈ {-1,0,1}^n, axis 0 most significant.
    let code = |ci: usize, cj: usize| -> usize {
        let mut c = 0;
        for a in 0..n {
            let bi = (ci >> (n - 1 - a)) & 1;
            let bj = (cj >> (n - 1 - a)) & 1;
            c = c * 3 + (1 + bj as i64 - bi as i64) as usize;
        }
        c
    };
    let bit = |c: usize, a: usize| (c >> (n - 1 - a)) & 1;
    let cell_dims: Vec<usize> = grid.dims.iter().map(|d| d - 1).collect();
    let mut cm = vec![0usize; n];
    let mut h = vec![0.0; n];
    let mut local = vec![0.0; corners * corners];
    for cell in 0..grid.cells() {
        let mut rem = cell;
        for a in (0..n).rev() {
            cm[a] = rem % cell_dims[a];
            rem /= cell_dims[a];
        }
        for a in 0..n {
            h[a] = grid.axes[a][cm[a] + 1] - grid.axes[a][cm[a]];
        }
        let k = &metric.cell_k[cell * nn..(cell + 1) * nn];
        local.iter_mut().for_each(|v| *v = 0.0);
        for a in 0..n {
            let face: f64 = (0..n).filter(|&b| b != a).map(|b| 0.5 * h[b]).product();
            let coef = k[a * n + a] * face / h[a];
            for ci in 0..corners {
                if bit(ci, a) == 0 {
                    let cj = ci | (1 << (n - 1 - a));
                    local[ci * corners + ci] += coef;
                    local[cj * corners + cj] += coef;
                    local[ci * corners + cj] -= coef;
                    local[cj * corners + ci] -= coef;
                }
            }
        }
        for a in 0..n {
            for b in 0..n {
                if a == b || k[a * n + b] == 0.0 {
                    continue;
                }
                let kab = k[a * n + b];
                for ci in 0..corners {
                    let sa = if bit(ci, a) == 1 { 1.0 } else { -1.0 };
                    for cj in 0..corners {
                        let sb = if bit(cj, b) == 1 { 1.0 } else { -1.0 };
                        let mut w = 0.25 * sa * sb;
                        for c in 0..n {
                            if c != a && c != b {
                                w *= if bit(ci, c) == bit(cj, c) { h[c] / 3.0 } else { h[c] / 6.0 };
                            }
                        }
                        local[ci * corners + cj] += kab * w;
                    }
                }
            }
        }
        for ci in 0..corners {
            let mut node = 0;
            for a in 0..n {
                node += (cm[a] + bit(ci, a)) * grid.strides[a];
            }
            for cj in 0..corners {
                let v = local[ci * corners + cj];
                if v != 0.0 {
                    stencil[node * width + code(ci, cj)] += v;
                }
            }
        }
    }
    // Compress; stencil codes are already in increasing column order.
    let mut row_ptr = Vec::with_capacity(total + 1);
    let mut cols = Vec::new();
    let mut vals = Vec::new();
    row_ptr.push(0);
    let centre = (width - 1) / 2;
    for i in 0..total {
        for c in 0..width {
            let v = stencil[i * width + c];
            if v == 0.0 && c != centre {
                continue;
            }
            let mut off: i64 = 0;
            let mut rem = c;
            for a in (0..n).rev() {
                off += (rem % 3) as i64 * grid.strides[a] as i64 - grid.strides[a] as i64;
                rem /= 3;
            }
            cols.push((i as i64 + off) as u32);
            vals.push(v);
        }
        row_ptr.push(cols.len());
    }
    Csr { nrows: total, row_ptr, cols, vals }
}
