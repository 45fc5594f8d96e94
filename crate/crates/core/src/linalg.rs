//! Tiny dense linear algebra for the fixed small sizes used in charts.

/// Small dense matrix stored in a fixed 4x4 array; only the leading
/// `dim x dim` block is meaningful.
pub type Mat4 = [[f64; 4]; 4];

pub type Vec3 = [f64; 3];

#[inline]
pub fn dot3(a: &Vec3, b: &Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub fn cross3(a: &Vec3, b: &Vec3) -> Vec3 {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

#[inline]
pub fn norm3(a: &Vec3) -> f64 {
    dot3(a, a).sqrt()
}

#[inline]
pub fn scale3(a: &Vec3, s: f64) -> Vec3 {
    [a[0] * s, a[1] * s, a[2] * s]
}

#[inline]
pub fn add3(a: &Vec3, b: &Vec3) -> Vec3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

#[inline]
pub fn sub3(a: &Vec3, b: &Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

/// Identity in the leading `dim` block.
pub fn identity(dim: usize) -> Mat4 {
    let mut m = [[0.0; 4]; 4];
    for (i, row) in m.iter_mut().enumerate().take(dim) {
        row[i] = 1.0;
    }
    m
}

/// Inverse and determinant of the leading `dim` block by Gauss–Jordan
/// elimination with partial pivoting. Returns `None` if singular.
pub fn inverse_det(a: &Mat4, dim: usize) -> Option<(Mat4, f64)> {
    let mut m = *a;
    let mut inv = identity(dim);
    let mut det = 1.0;
    for col in 0..dim {
        let mut piv = col;
        for r in col + 1..dim {
            if m[r][col].abs() > m[piv][col].abs() {
                piv = r;
            }
        }
        if m[piv][col] == 0.0 || !m[piv][col].is_finite() {
            return None;
        }
        if piv != col {
            m.swap(piv, col);
            inv.swap(piv, col);
            det = -det;
        }
        let d = m[col][col];
        det *= d;
        for c in 0..dim {
            m[col][c] /= d;
            inv[col][c] /= d;
        }
        for r in 0..dim {
            if r != col {
                let f = m[r][col];
                if f != 0.0 {
                    for c in 0..dim {
                        m[r][c] -= f * m[col][c];
                        inv[r][c] -= f * inv[col][c];
                    }
                }
            }
        }
    }
    Some((inv, det))
}

/// Solve a small dense system `A x = b` (leading `dim` block).
pub fn solve_small(a: &[Vec<f64>], b: &[f64]) -> Option<Vec<f64>> {
    let dim = b.len();
    let mut m: Vec<Vec<f64>> = a.to_vec();
    let mut x = b.to_vec();
    for col in 0..dim {
        let mut piv = col;
        for r in col + 1..dim {
            if m[r][col].abs() > m[piv][col].abs() {
                piv = r;
            }
        }
        if m[piv][col] == 0.0 || !m[piv][col].is_finite() {
            return None;
        }
        m.swap(piv, col);
        x.swap(piv, col);
        for r in col + 1..dim {
            let f = m[r][col] / m[col][col];
            for c in col..dim {
                m[r][c] -= f * m[col][c];
            }
            x[r] -= f * x[col];
        }
    }
    for col in (0..dim).rev() {
        let mut s = x[col];
        for c in col + 1..dim {
            s -= m[col][c] * x[c];
        }
        x[col] = s / m[col][col];
    }
    Some(x)
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations.
pub fn sym_eigenvalues(a: &[Vec<f64>]) -> Vec<f64> {
    let n = a.len();
    let mut m: Vec<Vec<f64>> = a.to_vec();
    for _sweep in 0..100 {
        let mut off = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                off += m[i][j] * m[i][j];
            }
        }
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if m[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (m[q][q] - m[p][p]) / (2.0 * m[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[k][p];
                    let mkq = m[k][q];
                    m[k][p] = c * mkp - s * mkq;
                    m[k][q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[p][k];
                    let mqk = m[q][k];
                    m[p][k] = c * mpk - s * mqk;
                    m[q][k] = s * mpk + c * mqk;
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..n).map(|i| m[i][i]).collect();
    ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
    ev
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_roundtrip() {
        let mut a = identity(3);
        a[0][1] = 0.3;
        a[1][0] = 0.3;
        a[2][2] = 2.0;
        let (inv, det) = inverse_det(&a, 3).unwrap();
        assert!((det - 2.0 * (1.0 - 0.09)).abs() < 1e-14);
        for i in 0..3 {
            for j in 0..3 {
                let s: f64 = (0..3).map(|k| a[i][k] * inv[k][j]).sum();
                assert!((s - if i == j { 1.0 } else { 0.0 }).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn small_solve_and_eigen() {
        let a = vec![vec![2.0, 1.0], vec![1.0, 3.0]];
        let x = solve_small(&a, &[3.0, 5.0]).unwrap();
        assert!((x[0] - 0.8).abs() < 1e-14 && (x[1] - 1.4).abs() < 1e-14);
        let ev = sym_eigenvalues(&a);
        let d = (5.0f64).sqrt();
        assert!((ev[0] - (5.0 - d) / 2.0).abs() < 1e-12 && (ev[1] - (5.0 + d) / 2.0).abs() < 1e-12);
    }
}
