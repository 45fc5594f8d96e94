//! Compressed sparse row matrices.

/// Square CSR matrix with `u32` column indices.
#[derive(Debug, Clone, PartialEq)]
pub struct Csr {
    pub nrows: usize,
    pub row_ptr: Vec<usize>,
    pub cols: Vec<u32>,
    pub vals: Vec<f64>,
}

impl Csr {
    /// `y = A x`.
    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        for i in 0..self.nrows {
            let mut s = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                s += self.vals[k] * x[self.cols[k] as usize];
            }
            y[i] = s;
        }
    }

    /// Diagonal entries.
    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.nrows)
            .map(|i| {
                (self.row_ptr[i]..self.row_ptr[i + 1])
                    .find(|&k| self.cols[k] as usize == i)
                    .map(|k| self.vals[k])
                    .unwrap_or(0.0)
            })
            .collect()
    }

    /// Number of stored entries.
    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// `max |A_ij - A_ji|`.
    pub fn symmetry_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.nrows {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                let j = self.cols[k] as usize;
                let t = self.get(j, i);
                worst = worst.max((self.vals[k] - t).abs());
            }
        }
        worst
    }

    /// Entry `(i, j)` (zero if not stored).
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let lo = self.row_ptr[i];
        let hi = self.row_ptr[i + 1];
        match self.cols[lo..hi].binary_search(&(j as u32)) {
            Ok(k) => self.vals[lo + k],
            Err(_) => 0.0,
        }
    }

    /// Quadratic form `xᵀ A y`.
    pub fn form(&self, x: &[f64], y: &[f64]) -> f64 {
        let mut total = 0.0;
        for i in 0..self.nrows {
            let mut s = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                s += self.vals[k] * y[self.cols[k] as usize];
            }
            total += x[i] * s;
        }
        total
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matvec_and_form() {
        // [[2, -1], [-1, 2]]
        let a = Csr { nrows: 2, row_ptr: vec![0, 2, 4], cols: vec![0, 1, 0, 1], vals: vec![2.0, -1.0, -1.0, 2.0] };
        let mut y = [0.0; 2];
        a.matvec(&[1.0, 2.0], &mut y);
        assert_eq!(y, [0.0, 3.0]);
        assert_eq!(a.form(&[1.0, 2.0], &[1.0, 2.0]), 6.0);
        assert_eq!(a.diagonal(), vec![2.0, 2.0]);
        assert_eq!(a.symmetry_defect(), 0.0);
        assert_eq!(a.get(0, 1), -1.0);
    }
}
