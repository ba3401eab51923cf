//! Dense matrices of arbitrary-precision integers.

use std::fmt;
use std::ops::{Index, IndexMut};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::{Error, Result};

#[derive(Clone, PartialEq, Eq)]
pub struct BigMatrix {
    rows: usize,
    cols: usize,
    data: Vec<BigInt>,
}

impl BigMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![BigInt::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = BigInt::one();
        }
        m
    }

    /// Builds a matrix from rows of machine integers. Panics on ragged input.
    pub fn from_rows(rows: &[Vec<i64>]) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|r| r.len() == cols), "ragged rows");
        Self {
            rows: rows.len(),
            cols,
            data: rows.iter().flatten().map(|&x| BigInt::from(x)).collect(),
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> BigInt) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Diagonal matrix with the given entries.
    pub fn diagonal(entries: &[BigInt]) -> Self {
        let mut m = Self::zeros(entries.len(), entries.len());
        for (i, d) in entries.iter().enumerate() {
            m[(i, i)] = d.clone();
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn row(&self, i: usize) -> &[BigInt] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<BigInt> {
        (0..self.rows).map(|i| self[(i, j)].clone()).collect()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].clone())
    }

    pub fn mul(&self, rhs: &Self) -> Result<Self> {
        if self.cols != rhs.rows {
            return Err(Error::Dimension(format!(
                "{}x{} times {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = &self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..rhs.cols {
                    let b = &rhs[(k, j)];
                    if !b.is_zero() {
                        out.data[i * rhs.cols + j] += a * b;
                    }
                }
            }
        }
        Ok(out)
    }

    pub fn mul_vec(&self, x: &[BigInt]) -> Result<Vec<BigInt>> {
        if self.cols != x.len() {
            return Err(Error::Dimension(format!(
                "{}x{} times vector of length {}",
                self.rows,
                self.cols,
                x.len()
            )));
        }
        Ok((0..self.rows)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(x)
                    .filter(|(a, b)| !a.is_zero() && !b.is_zero())
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect())
    }

    /// Appends the given vectors as extra columns.
    pub fn hcat_columns(&self, columns: &[Vec<BigInt>]) -> Result<Self> {
        if let Some(bad) = columns.iter().find(|c| c.len() != self.rows) {
            return Err(Error::Dimension(format!(
                "column of length {} for {} rows",
                bad.len(),
                self.rows
            )));
        }
        let cols = self.cols + columns.len();
        Ok(Self::from_fn(self.rows, cols, |i, j| {
            if j < self.cols {
                self[(i, j)].clone()
            } else {
                columns[j - self.cols][i].clone()
            }
        }))
    }

    pub fn is_diagonal(&self) -> bool {
        (0..self.rows).all(|i| (0..self.cols).all(|j| i == j || self[(i, j)].is_zero()))
    }

    pub(crate) fn swap_rows(&mut self, i: usize, j: usize) {
        if i == j {
            return;
        }
        for k in 0..self.cols {
            self.data.swap(i * self.cols + k, j * self.cols + k);
        }
    }

    pub(crate) fn swap_cols(&mut self, i: usize, j: usize) {
        if i == j {
            return;
        }
        for r in 0..self.rows {
            self.data.swap(r * self.cols + i, r * self.cols + j);
        }
    }

    /// `row[dst] += c * row[src]`
    pub(crate) fn add_row_multiple(&mut self, dst: usize, src: usize, c: &BigInt) {
        if c.is_zero() {
            return;
        }
        for k in 0..self.cols {
            let s = &self.data[src * self.cols + k];
            if !s.is_zero() {
                let delta = c * s;
                self.data[dst * self.cols + k] += delta;
            }
        }
    }

    /// `col[dst] += c * col[src]`
    pub(crate) fn add_col_multiple(&mut self, dst: usize, src: usize, c: &BigInt) {
        if c.is_zero() {
            return;
        }
        for r in 0..self.rows {
            let s = &self.data[r * self.cols + src];
            if !s.is_zero() {
                let delta = c * s;
                self.data[r * self.cols + dst] += delta;
            }
        }
    }

    pub(crate) fn negate_row(&mut self, i: usize) {
        for k in 0..self.cols {
            let x = &mut self.data[i * self.cols + k];
            *x = -std::mem::take(x);
        }
    }

    pub(crate) fn negate_col(&mut self, j: usize) {
        for r in 0..self.rows {
            let x = &mut self.data[r * self.cols + j];
            *x = -std::mem::take(x);
        }
    }
}

impl Index<(usize, usize)> for BigMatrix {
    type Output = BigInt;

    fn index(&self, (i, j): (usize, usize)) -> &BigInt {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for BigMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut BigInt {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl fmt::Debug for BigMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "BigMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            let row: Vec<String> = self.row(i).iter().map(ToString::to_string).collect();
            writeln!(f, "  [{}]", row.join(", "))?;
        }
        write!(f, "]")
    }
}

/// Exact determinant by fraction-free (Bareiss) elimination.
///
/// Every intermediate division is exact, so entries stay bounded by minors
/// of the input. This path shares no code with the Smith normal form and is
/// used as its oracle.
pub fn determinant(a: &BigMatrix) -> Result<BigInt> {
    if !a.is_square() {
        return Err(Error::Dimension(format!(
            "determinant of {}x{} matrix",
            a.rows(),
            a.cols()
        )));
    }
    let n = a.rows();
    if n == 0 {
        return Ok(BigInt::one());
    }
    let mut m: Vec<Vec<BigInt>> = (0..n).map(|i| a.row(i).to_vec()).collect();
    let mut sign = 1;
    let mut prev = BigInt::one();
    for k in 0..n - 1 {
        if m[k][k].is_zero() {
            match (k + 1..n).find(|&i| !m[i][k].is_zero()) {
                Some(i) => {
                    m.swap(k, i);
                    sign = -sign;
                }
                None => return Ok(BigInt::zero()),
            }
        }
        let (top, bottom) = m.split_at_mut(k + 1);
        let pivot_row = &top[k];
        let pivot = &pivot_row[k];
        for row in bottom.iter_mut() {
            let factor = std::mem::take(&mut row[k]);
            for j in k + 1..n {
                let mut v = pivot * &row[j];
                if !factor.is_zero() && !pivot_row[j].is_zero() {
                    v -= &factor * &pivot_row[j];
                }
                row[j] = if prev.is_one() { v } else { v / &prev };
            }
        }
        prev = m[k][k].clone();
    }
    let det = m[n - 1][n - 1].clone();
    Ok(if sign < 0 { -det } else { det })
}

/// `A^{-1}` of a nonsingular square matrix as `adj / det`, with `det > 0`
/// and `adj = det * A^{-1}` an integer matrix.
#[derive(Debug, Clone)]
pub struct ScaledInverse {
    pub det: BigInt,
    pub adj: BigMatrix,
}

impl ScaledInverse {
    pub fn new(a: &BigMatrix) -> Result<Self> {
        let inv = rational_inverse(a)?;
        let n = a.rows();
        let mut det = determinant(a)?;
        if det.is_negative() {
            det = -det;
        }
        let adj = BigMatrix::from_fn(n, n, |i, j| {
            let scaled = &inv[i][j] * BigRational::from_integer(det.clone());
            debug_assert!(scaled.is_integer());
            scaled.to_integer()
        });
        Ok(Self { det, adj })
    }

    /// Componentwise `floor(A^{-1} x)`.
    pub fn floor_apply(&self, x: &[BigInt]) -> Result<Vec<BigInt>> {
        Ok(self
            .adj
            .mul_vec(x)?
            .into_iter()
            .map(|v| v.div_floor(&self.det))
            .collect())
    }
}

/// Exact inverse over the rationals by Gauss-Jordan elimination.
pub fn rational_inverse(a: &BigMatrix) -> Result<Vec<Vec<BigRational>>> {
    if !a.is_square() {
        return Err(Error::Dimension("inverse of non-square matrix".into()));
    }
    let n = a.rows();
    let mut m: Vec<Vec<BigRational>> = (0..n)
        .map(|i| {
            let mut row: Vec<BigRational> = a
                .row(i)
                .iter()
                .map(|x| BigRational::from_integer(x.clone()))
                .collect();
            row.extend((0..n).map(|j| {
                if i == j {
                    BigRational::one()
                } else {
                    BigRational::zero()
                }
            }));
            row
        })
        .collect();
    for k in 0..n {
        let p = (k..n).find(|&i| !m[i][k].is_zero()).ok_or(Error::Singular)?;
        m.swap(k, p);
        let inv_pivot = m[k][k].recip();
        for x in m[k].iter_mut() {
            if !x.is_zero() {
                *x *= &inv_pivot;
            }
        }
        let pivot_row = m[k].clone();
        for (i, row) in m.iter_mut().enumerate() {
            if i == k || row[k].is_zero() {
                continue;
            }
            let factor = row[k].clone();
            for (x, p) in row.iter_mut().zip(&pivot_row) {
                if !p.is_zero() {
                    *x -= &factor * p;
                }
            }
        }
    }
    Ok(m.into_iter().map(|row| row[n..].to_vec()).collect())
}
