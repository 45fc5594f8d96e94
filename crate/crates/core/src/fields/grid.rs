//! Tensor-product grids on the truncated Fermi box `[-R, R]^{n-1} x [0, R]`.
//!
//! Each axis is uniform with spacing `h0` on a core `|y| ≤ core` around the
//! spike and grows geometrically beyond it, with the last node placed
//! exactly on the box face. Node index order is row-major with the normal
//! axis fastest.

use serde::Serialize;

use crate::error::{Error, Result};

/// Largest admissible number of nodes (guards the n = 4 case).
pub const MAX_NODES: usize = 3_000_000;

/// Spacing recipe for one family of axes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AxisSpec {
    /// Core spacing.
    pub h0: f64,
    /// Half-width of the uniform core.
    pub core: f64,
    /// Geometric growth ratio outside the core (1 = uniform).
    pub ratio: f64,
}

/// Tensor-product grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub n: usize,
    /// Box half-width `R`.
    pub radius: f64,
    /// Node coordinates per axis; axes `0..n-1` tangential, axis `n-1` normal.
    pub axes: Vec<Vec<f64>>,
    pub dims: Vec<usize>,
    pub strides: Vec<usize>,
    /// Dual (control-volume) widths per axis node.
    pub dual: Vec<Vec<f64>>,
}

/// Non-negative half axis `0 = x_0 < ... < x_m = r`.
pub fn half_axis(spec: &AxisSpec, r: f64) -> Vec<f64> {
    let AxisSpec { h0, core, ratio } = *spec;
    if ratio <= 1.0 || core >= r {
        let m = (r / h0 - 1e-9).ceil().max(1.0) as usize;
        return (0..=m).map(|i| r * i as f64 / m as f64).collect();
    }
    let mc = (core / h0 - 1e-9).ceil().max(1.0) as usize;
    let core = mc as f64 * h0;
    let mut x: Vec<f64> = (0..=mc).map(|i| i as f64 * h0).collect();
    if core >= r {
        let m = (r / h0 - 1e-9).ceil() as usize;
        return (0..=m).map(|i| r * i as f64 / m as f64).collect();
    }
    let mut steps = Vec::new();
    let mut total = 0.0;
    let mut s = h0;
    while total < r - core {
        s *= ratio;
        steps.push(s);
        total += s;
    }
    let f = (r - core) / total;
    let mut pos = core;
    for (k, st) in steps.iter().enumerate() {
        pos += st * f;
        x.push(if k + 1 == steps.len() { r } else { pos });
    }
    x
}

/// Refine an axis by inserting midpoints.
pub fn refine_axis(x: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(2 * x.len() - 1);
    for w in x.windows(2) {
        out.push(w[0]);
        out.push(0.5 * (w[0] + w[1]));
    }
    out.push(*x.last().unwrap());
    out
}

impl Grid {
    /// Graded grid with the same spacing recipe on every axis.
    pub fn graded(n: usize, radius: f64, spec: AxisSpec) -> Result<Self> {
        if !(radius > 0.0) || !(spec.h0 > 0.0) || spec.h0 > radius || !(spec.ratio >= 1.0) {
            return Err(Error::InvalidParams(format!("invalid grid spec {spec:?} for R = {radius}")));
        }
        let half = half_axis(&spec, radius);
        let mut tang: Vec<f64> = half.iter().rev().map(|v| -v).collect();
        tang.extend_from_slice(&half[1..]);
        let mut axes = vec![tang; n - 1];
        axes.push(half);
        Self::from_axes(n, radius, axes)
    }

    /// Grid from explicit node coordinates.
    pub fn from_axes(n: usize, radius: f64, axes: Vec<Vec<f64>>) -> Result<Self> {
        if axes.len() != n || n < 2 {
            return Err(Error::InvalidParams("axis count must equal n".into()));
        }
        for (a, x) in axes.iter().enumerate() {
            if x.len() < 2 || x.windows(2).any(|w| !(w[1] > w[0])) || x.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidParams(format!("axis {a} must be strictly increasing")));
            }
        }
        if axes[n - 1][0] != 0.0 {
            return Err(Error::InvalidParams("normal axis must start at the boundary face y_n = 0".into()));
        }
        let dims: Vec<usize> = axes.iter().map(|a| a.len()).collect();
        let total = dims.iter().try_fold(1usize, |acc, d| acc.checked_mul(*d));
        match total {
            Some(t) if t <= MAX_NODES => {}
            _ => return Err(Error::InvalidParams(format!("grid {dims:?} exceeds the node cap {MAX_NODES}"))),
        }
        let mut strides = vec![1usize; n];
        for a in (0..n - 1).rev() {
            strides[a] = strides[a + 1] * dims[a + 1];
        }
        let dual = axes
            .iter()
            .map(|x| {
                let m = x.len();
                (0..m)
                    .map(|i| {
                        let l = if i > 0 { x[i] - x[i - 1] } else { 0.0 };
                        let r = if i + 1 < m { x[i + 1] - x[i] } else { 0.0 };
                        0.5 * (l + r)
                    })
                    .collect()
            })
            .collect();
        Ok(Grid { n, radius, axes, dims, strides, dual })
    }

    /// Refine every axis by midpoint insertion.
    pub fn refined(&self) -> Result<Self> {
        Self::from_axes(self.n, self.radius, self.axes.iter().map(|a| refine_axis(a)).collect())
    }

    /// Number of nodes.
    pub fn len(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Number of cells.
    pub fn cells(&self) -> usize {
        self.dims.iter().map(|d| d - 1).product()
    }

    /// Multi-index of a node.
    #[inline]
    pub fn multi(&self, mut idx: usize, out: &mut [usize]) {
        for a in 0..self.n {
            out[a] = idx / self.strides[a];
            idx %= self.strides[a];
        }
    }

    /// Flat index of a multi-index.
    #[inline]
    pub fn flat(&self, m: &[usize]) -> usize {
        m.iter().zip(&self.strides).map(|(i, s)| i * s).sum()
    }

    /// Coordinates of a node.
    pub fn coords(&self, idx: usize) -> Vec<f64> {
        let mut m = vec![0; self.n];
        self.multi(idx, &mut m);
        (0..self.n).map(|a| self.axes[a][m[a]]).collect()
    }

    /// Tensor dual volume (without metric weight) of a node.
    pub fn dual_volume(&self, idx: usize) -> f64 {
        let mut m = vec![0; self.n];
        self.multi(idx, &mut m);
        (0..self.n).map(|a| self.dual[a][m[a]]).product()
    }

    /// Smallest spacing over all axes.
    pub fn min_spacing(&self) -> f64 {
        self.axes.iter().flat_map(|x| x.windows(2).map(|w| w[1] - w[0])).fold(f64::INFINITY, f64::min)
    }

    /// Largest spacing among cells that intersect the ball `|y| ≤ r`.
    pub fn max_spacing_within(&self, r: f64) -> f64 {
        let mut worst: f64 = 0.0;
        for x in &self.axes {
            for w in x.windows(2) {
                let dist = if w[0] <= 0.0 && w[1] >= 0.0 { 0.0 } else { w[0].abs().min(w[1].abs()) };
                if dist <= r {
                    worst = worst.max(w[1] - w[0]);
                }
            }
        }
        worst
    }

    /// True if the node lies on any face of the box.
    pub fn on_face(&self, idx: usize) -> bool {
        let mut m = vec![0; self.n];
        self.multi(idx, &mut m);
        (0..self.n).any(|a| m[a] == 0 || m[a] + 1 == self.dims[a])
    }

    /// Index of the node at the origin (`ȳ = 0`, `y_n = 0`), if it is a node.
    pub fn origin(&self) -> Option<usize> {
        let mut m = vec![0; self.n];
        for a in 0..self.n {
            m[a] = self.axes[a].iter().position(|v| *v == 0.0)?;
        }
        Some(self.flat(&m))
    }

    /// Compact fingerprint used to detect grid mismatches.
    pub fn fingerprint(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for x in &self.axes {
            for v in x {
                h ^= v.to_bits();
                h = h.wrapping_mul(0x0100_0000_01b3);
            }
            h ^= x.len() as u64;
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
        h
    }
}
