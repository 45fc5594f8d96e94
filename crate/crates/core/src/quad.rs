//! Small numerical helpers: Gauss–Legendre rules, Hermite interpolation,
//! least-squares lines and sphere areas.

/// Three-point Gauss–Legendre rule on [-1, 1].
pub const GL3: [(f64, f64); 3] = [
    (-0.774_596_669_241_483_4, 5.0 / 9.0),
    (0.0, 8.0 / 9.0),
    (0.774_596_669_241_483_4, 5.0 / 9.0),
];

/// Five-point Gauss–Legendre rule on [-1, 1].
pub const GL5: [(f64, f64); 5] = [
    (-0.906_179_845_938_664, 0.236_926_885_056_189_1),
    (-0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
    (0.0, 0.568_888_888_888_888_9),
    (0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
    (0.906_179_845_938_664, 0.236_926_885_056_189_1),
];

/// Integrate `f` over `[a, b]` with the given Gauss rule.
pub fn gauss<F: FnMut(f64) -> f64>(rule: &[(f64, f64)], a: f64, b: f64, mut f: F) -> f64 {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    rule.iter().map(|&(x, w)| w * f(mid + half * x)).sum::<f64>() * half
}

/// Cubic Hermite interpolation on one interval: value and first derivative.
#[inline]
pub fn hermite(x0: f64, x1: f64, f0: f64, f1: f64, d0: f64, d1: f64, x: f64) -> (f64, f64) {
    let h = x1 - x0;
    let t = (x - x0) / h;
    let t2 = t * t;
    let t3 = t2 * t;
    let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
    let h10 = t3 - 2.0 * t2 + t;
    let h01 = -2.0 * t3 + 3.0 * t2;
    let h11 = t3 - t2;
    let v = h00 * f0 + h10 * h * d0 + h01 * f1 + h11 * h * d1;
    let dh00 = 6.0 * t2 - 6.0 * t;
    let dh10 = 3.0 * t2 - 4.0 * t + 1.0;
    let dh01 = -6.0 * t2 + 6.0 * t;
    let dh11 = 3.0 * t2 - 2.0 * t;
    let dv = (dh00 * f0 + dh01 * f1) / h + dh10 * d0 + dh11 * d1;
    (v, dv)
}

/// Index `k` with `xs[k] <= x < xs[k+1]`, clamped to valid intervals.
#[inline]
pub fn locate(xs: &[f64], x: f64) -> usize {
    let n = xs.len();
    if x <= xs[0] {
        return 0;
    }
    if x >= xs[n - 1] {
        return n - 2;
    }
    match xs.binary_search_by(|v| v.partial_cmp(&x).unwrap_or(std::cmp::Ordering::Less)) {
        Ok(k) => k.min(n - 2),
        Err(k) => k - 1,
    }
}

/// Ordinary least-squares line `y = intercept + slope * x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub intercept: f64,
    pub slope: f64,
    /// Root-mean-square residual.
    pub rms_residual: f64,
}

/// Fit a least-squares line. Requires at least two distinct abscissae.
pub fn fit_line(xs: &[f64], ys: &[f64]) -> Option<LineFit> {
    let n = xs.len();
    if n < 2 || ys.len() != n {
        return None;
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx <= 0.0 {
        return None;
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = xs.iter().zip(ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    Some(LineFit { intercept, slope, rms_residual: (rss / nf).sqrt() })
}

/// Slope of `ln y` against `ln x`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if ys.iter().any(|y| !(*y > 0.0)) || xs.iter().any(|x| !(*x > 0.0)) {
        return None;
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    fit_line(&lx, &ly).map(|f| f.slope)
}

/// Surface area of the unit sphere S^{d-1} in R^d.
pub fn sphere_area(d: usize) -> f64 {
    use std::f64::consts::PI;
    match d {
        1 => 2.0,
        2 => 2.0 * PI,
        _ => 2.0 * PI / (d as f64 - 2.0) * sphere_area(d - 2),
    }
}
