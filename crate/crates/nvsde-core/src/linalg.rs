//! Dense row-major matrices sized for small state spaces, with a
//! scaling-and-squaring matrix exponential of fixed Padé degree.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::num;
use crate::{Error, Result};

/// Row-major dense matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Mat {
    n_rows: usize,
    n_cols: usize,
    data: Vec<f64>,
}

impl Mat {
    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        Mat {
            n_rows,
            n_cols,
            data: vec![0.0; n_rows * n_cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn from_fn(n_rows: usize, n_cols: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut m = Mat::zeros(n_rows, n_cols);
        for i in 0..n_rows {
            for j in 0..n_cols {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    pub fn from_rows(rows: &[&[f64]]) -> Self {
        let n_rows = rows.len();
        let n_cols = if n_rows == 0 { 0 } else { rows[0].len() };
        Mat::from_fn(n_rows, n_cols, |i, j| rows[i][j])
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n_cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n_cols + j] = v;
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn scale(&self, a: f64) -> Mat {
        let mut out = self.clone();
        for v in &mut out.data {
            *v *= a;
        }
        out
    }

    pub fn add(&self, other: &Mat) -> Mat {
        debug_assert_eq!(self.n_rows, other.n_rows);
        debug_assert_eq!(self.n_cols, other.n_cols);
        let mut out = self.clone();
        for (v, w) in out.data.iter_mut().zip(&other.data) {
            *v += *w;
        }
        out
    }

    pub fn sub(&self, other: &Mat) -> Mat {
        let mut out = self.clone();
        for (v, w) in out.data.iter_mut().zip(&other.data) {
            *v -= *w;
        }
        out
    }

    pub fn matmul(&self, other: &Mat) -> Mat {
        debug_assert_eq!(self.n_cols, other.n_rows);
        let mut out = Mat::zeros(self.n_rows, other.n_cols);
        for i in 0..self.n_rows {
            for k in 0..self.n_cols {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.n_cols {
                    out.data[i * out.n_cols + j] += a * other.get(k, j);
                }
            }
        }
        out
    }

    pub fn matvec(&self, v: &[f64]) -> Vec<f64> {
        debug_assert_eq!(self.n_cols, v.len());
        let mut out = vec![0.0; self.n_rows];
        for i in 0..self.n_rows {
            let mut acc = 0.0;
            for j in 0..self.n_cols {
                acc += self.get(i, j) * v[j];
            }
            out[i] = acc;
        }
        out
    }

    /// Maximum absolute column sum.
    pub fn norm_one(&self) -> f64 {
        let mut best = 0.0;
        for j in 0..self.n_cols {
            let mut s = 0.0;
            for i in 0..self.n_rows {
                s += num::abs(self.get(i, j));
            }
            best = num::max(best, s);
        }
        best
    }
}

/// Solve `A x = b` by Gaussian elimination with partial pivoting.
pub fn solve_vec(a: &Mat, b: &[f64]) -> Result<Vec<f64>> {
    let rhs = Mat::from_fn(b.len(), 1, |i, _| b[i]);
    let x = solve_mat(a, &rhs)?;
    Ok((0..b.len()).map(|i| x.get(i, 0)).collect())
}

/// Solve `A X = B` for a matrix right-hand side.
pub fn solve_mat(a: &Mat, b: &Mat) -> Result<Mat> {
    let n = a.n_rows;
    debug_assert_eq!(a.n_cols, n);
    debug_assert_eq!(b.n_rows, n);
    let mut lhs = a.clone();
    let mut rhs = b.clone();
    for col in 0..n {
        let mut pivot_row = col;
        let mut pivot_mag = num::abs(lhs.get(col, col));
        for r in col + 1..n {
            let mag = num::abs(lhs.get(r, col));
            if mag > pivot_mag {
                pivot_row = r;
                pivot_mag = mag;
            }
        }
        if pivot_mag == 0.0 || !pivot_mag.is_finite() {
            return Err(Error::NumericalFailure(format!(
                "singular or non-finite pivot in column {col}"
            )));
        }
        if pivot_row != col {
            for j in 0..n {
                let tmp = lhs.get(col, j);
                lhs.set(col, j, lhs.get(pivot_row, j));
                lhs.set(pivot_row, j, tmp);
            }
            for j in 0..rhs.n_cols {
                let tmp = rhs.get(col, j);
                rhs.set(col, j, rhs.get(pivot_row, j));
                rhs.set(pivot_row, j, tmp);
            }
        }
        let inv = 1.0 / lhs.get(col, col);
        for r in col + 1..n {
            let factor = lhs.get(r, col) * inv;
            if factor == 0.0 {
                continue;
            }
            for j in col..n {
                let v = lhs.get(r, j) - factor * lhs.get(col, j);
                lhs.set(r, j, v);
            }
            for j in 0..rhs.n_cols {
                let v = rhs.get(r, j) - factor * rhs.get(col, j);
                rhs.set(r, j, v);
            }
        }
    }
    // back substitution
    let mut x = Mat::zeros(n, rhs.n_cols);
    for j in 0..rhs.n_cols {
        for ii in (0..n).rev() {
            let mut acc = rhs.get(ii, j);
            for k in ii + 1..n {
                acc -= lhs.get(ii, k) * x.get(k, j);
            }
            x.set(ii, j, acc / lhs.get(ii, ii));
        }
    }
    Ok(x)
}

// Pade [6/6] numerator coefficients for exp.
const PADE6: [f64; 7] = [
    1.0,
    1.0 / 2.0,
    5.0 / 44.0,
    1.0 / 66.0,
    1.0 / 792.0,
    1.0 / 15840.0,
    1.0 / 665280.0,
];

/// Matrix exponential by scaling and squaring with a fixed degree-6 Padé
/// approximant. Deterministic: the scaling power depends only on the 1-norm.
pub fn expm(a: &Mat) -> Result<Mat> {
    let n = a.n_rows;
    debug_assert_eq!(a.n_cols, n);
    let norm = a.norm_one();
    if !norm.is_finite() {
        return Err(Error::NumericalFailure(format!(
            "non-finite matrix norm {norm} in expm"
        )));
    }
    // scale so the argument norm is at most 1/2
    let mut squarings = 0u32;
    let mut scaled = norm;
    while scaled > 0.5 && squarings < 64 {
        scaled *= 0.5;
        squarings += 1;
    }
    let b = a.scale(num::powi(0.5, squarings as i32));
    let b2 = b.matmul(&b);
    let b4 = b2.matmul(&b2);
    let b6 = b2.matmul(&b4);
    let ident = Mat::identity(n);
    let even = ident
        .scale(PADE6[0])
        .add(&b2.scale(PADE6[2]))
        .add(&b4.scale(PADE6[4]))
        .add(&b6.scale(PADE6[6]));
    let odd = b.matmul(
        &ident
            .scale(PADE6[1])
            .add(&b2.scale(PADE6[3]))
            .add(&b4.scale(PADE6[5])),
    );
    let numer = even.add(&odd);
    let denom = even.sub(&odd);
    let mut result = solve_mat(&denom, &numer)?;
    for _ in 0..squarings {
        result = result.matmul(&result);
    }
    Ok(result)
}
