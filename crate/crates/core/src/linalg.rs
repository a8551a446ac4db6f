//! Minimal dense symmetric linear algebra for the regression and distance
//! models: row-major square matrices and a Cholesky factorization.

use serde::{Deserialize, Serialize};

/// Square matrix stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SquareMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SquareMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    /// Builds from rows; returns `None` unless the rows form a square matrix.
    pub fn from_rows(rows: &[Vec<f64>]) -> Option<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return None;
        }
        Some(Self {
            n,
            data: rows.iter().flatten().copied().collect(),
        })
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.data
            .chunks(self.n.max(1))
            .map(<[f64]>::to_vec)
            .collect()
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn add_diagonal(&mut self, value: f64) {
        for i in 0..self.n {
            self[(i, i)] += value;
        }
    }

    /// `v^T M v`.
    pub fn quadratic_form(&self, v: &[f64]) -> f64 {
        debug_assert_eq!(v.len(), self.n);
        let mut acc = 0.0;
        for (i, row) in self.data.chunks(self.n).enumerate() {
            let dot: f64 = row.iter().zip(v).map(|(a, b)| a * b).sum();
            acc += v[i] * dot;
        }
        acc
    }

    /// Largest absolute asymmetry `|M_ij - M_ji|`.
    pub fn asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                worst = worst.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        worst
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

impl std::ops::Index<(usize, usize)> for SquareMatrix {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.n + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for SquareMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.n + j]
    }
}

/// Lower-triangular Cholesky factor `L` with `A = L L^T`.
#[derive(Debug, Clone)]
pub struct Cholesky {
    lower: SquareMatrix,
}

impl Cholesky {
    /// Factorizes a symmetric matrix. Returns `None` when the matrix is not
    /// numerically positive definite.
    pub fn new(a: &SquareMatrix) -> Option<Self> {
        let n = a.dim();
        let scale = (0..n).map(|i| a[(i, i)].abs()).fold(0.0, f64::max);
        let tol = scale * f64::EPSILON * n.max(1) as f64;
        let mut l = SquareMatrix::zeros(n);
        for j in 0..n {
            let mut d = a[(j, j)];
            for p in 0..j {
                d -= l[(j, p)] * l[(j, p)];
            }
            if !(d > tol) {
                return None;
            }
            let diag = d.sqrt();
            l[(j, j)] = diag;
            for i in (j + 1)..n {
                let mut s = a[(i, j)];
                for p in 0..j {
                    s -= l[(i, p)] * l[(j, p)];
                }
                l[(i, j)] = s / diag;
            }
        }
        Some(Self { lower: l })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.lower.dim();
        let l = &self.lower;
        let mut y = b.to_vec();
        for i in 0..n {
            for p in 0..i {
                y[i] -= l[(i, p)] * y[p];
            }
            y[i] /= l[(i, i)];
        }
        for i in (0..n).rev() {
            for p in (i + 1)..n {
                y[i] -= l[(p, i)] * y[p];
            }
            y[i] /= l[(i, i)];
        }
        y
    }

    pub fn inverse(&self) -> SquareMatrix {
        let n = self.lower.dim();
        let mut inv = SquareMatrix::zeros(n);
        let mut e = vec![0.0; n];
        for j in 0..n {
            e.iter_mut().for_each(|v| *v = 0.0);
            e[j] = 1.0;
            let col = self.solve(&e);
            for (i, v) in col.into_iter().enumerate() {
                inv[(i, j)] = v;
            }
        }
        // symmetrize away round-off
        for i in 0..n {
            for j in (i + 1)..n {
                let avg = 0.5 * (inv[(i, j)] + inv[(j, i)]);
                inv[(i, j)] = avg;
                inv[(j, i)] = avg;
            }
        }
        inv
    }
}
