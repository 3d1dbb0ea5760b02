//! Exact rational linear algebra: small dense matrices and a sparse
//! row-echelon basis used for span membership tests.

use std::collections::BTreeMap;
use std::ops::Bound;

use num_traits::{One, Zero};

use crate::error::{check_dim, Error, Result};
use crate::poly::{Polynomial, Rational};

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<Rational>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![Rational::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = Rational::one();
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<Rational>>) -> Result<Self> {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(n_rows * n_cols);
        for row in rows {
            check_dim("matrix row length", n_cols, row.len())?;
            data.extend(row);
        }
        Ok(Matrix {
            rows: n_rows,
            cols: n_cols,
            data,
        })
    }

    /// Matrix from small integer entries; convenient in tests and fixtures.
    pub fn from_i64(rows: &[&[i64]]) -> Self {
        Self::from_rows(
            rows.iter()
                .map(|r| r.iter().map(|&v| crate::poly::int(v)).collect())
                .collect(),
        )
        .expect("ragged integer matrix")
    }

    /// Permutation matrix `P` with `P e_j = e_{perm[j]}`, so `(P x)_{perm[j]} = x_j`.
    pub fn permutation(perm: &[usize]) -> Self {
        let n = perm.len();
        let mut m = Self::zeros(n, n);
        for (j, &i) in perm.iter().enumerate() {
            m.set(i, j, Rational::one());
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

    pub fn get(&self, i: usize, j: usize) -> &Rational {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, value: Rational) {
        self.data[i * self.cols + j] = value;
    }

    pub fn row(&self, i: usize) -> &[Rational] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn to_rows(&self) -> Vec<Vec<Rational>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(Zero::is_zero)
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.set(j, i, self.get(i, j).clone());
            }
        }
        t
    }

    pub fn mul(&self, other: &Matrix) -> Result<Matrix> {
        check_dim("matrix product", self.cols, other.rows)?;
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let b = other.get(k, j);
                    if !b.is_zero() {
                        out.data[i * other.cols + j] += a * b;
                    }
                }
            }
        }
        Ok(out)
    }

    pub fn mul_vec(&self, v: &[Rational]) -> Result<Vec<Rational>> {
        check_dim("matrix-vector product", self.cols, v.len())?;
        Ok((0..self.rows)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(v)
                    .filter(|(a, _)| !a.is_zero())
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect())
    }

    /// Product with a column of polynomials (all sharing one variable count).
    pub fn mul_polys(&self, v: &[Polynomial]) -> Result<Vec<Polynomial>> {
        check_dim("matrix-polynomial product", self.cols, v.len())?;
        let n_vars = v.first().map_or(0, Polynomial::n_vars);
        Ok((0..self.rows)
            .map(|i| {
                let mut acc = Polynomial::zero(n_vars);
                for (a, p) in self.row(i).iter().zip(v) {
                    acc.add_scaled(p, a);
                }
                acc
            })
            .collect())
    }

    /// `blockdiag(self, other)`.
    pub fn block_diag(&self, other: &Matrix) -> Matrix {
        let mut out = Matrix::zeros(self.rows + other.rows, self.cols + other.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.set(i, j, self.get(i, j).clone());
            }
        }
        for i in 0..other.rows {
            for j in 0..other.cols {
                out.set(self.rows + i, self.cols + j, other.get(i, j).clone());
            }
        }
        out
    }

    /// Square submatrix on the given (ordered) indices.
    pub fn select(&self, rows: &[usize], cols: &[usize]) -> Matrix {
        let mut out = Matrix::zeros(rows.len(), cols.len());
        for (a, &i) in rows.iter().enumerate() {
            for (b, &j) in cols.iter().enumerate() {
                out.set(a, b, self.get(i, j).clone());
            }
        }
        out
    }

    /// Exact inverse by Gauss-Jordan elimination.
    pub fn inverse(&self) -> Result<Matrix> {
        if !self.is_square() {
            return Err(Error::Dimension {
                context: "matrix inverse",
                expected: self.rows,
                found: self.cols,
            });
        }
        let n = self.rows;
        let mut a = self.clone();
        let mut inv = Matrix::identity(n);
        for col in 0..n {
            let pivot = (col..n).find(|&r| !a.get(r, col).is_zero()).ok_or(Error::Singular)?;
            if pivot != col {
                a.swap_rows(pivot, col);
                inv.swap_rows(pivot, col);
            }
            let scale = a.get(col, col).recip();
            a.scale_row(col, &scale);
            inv.scale_row(col, &scale);
            for r in 0..n {
                if r == col {
                    continue;
                }
                let factor = a.get(r, col).clone();
                if factor.is_zero() {
                    continue;
                }
                a.sub_row_multiple(r, col, &factor);
                inv.sub_row_multiple(r, col, &factor);
            }
        }
        Ok(inv)
    }

    pub fn is_invertible(&self) -> bool {
        self.inverse().is_ok()
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }

    fn scale_row(&mut self, r: usize, s: &Rational) {
        for j in 0..self.cols {
            self.data[r * self.cols + j] *= s;
        }
    }

    fn sub_row_multiple(&mut self, target: usize, source: usize, factor: &Rational) {
        for j in 0..self.cols {
            let v = &self.data[source * self.cols + j] * factor;
            self.data[target * self.cols + j] -= v;
        }
    }
}

/// Result of reducing a vector against an [`Echelon`] basis.
#[derive(Clone, Debug)]
pub struct Reduction<K> {
    /// What is left after eliminating every pivot key; zero iff in the span.
    pub residual: BTreeMap<K, Rational>,
    /// `original = Σ coeffs[row] * basis[row] + residual`.
    pub coeffs: Vec<(usize, Rational)>,
}

/// Incrementally built basis of sparse vectors in row-echelon form.
///
/// Each row is stored monic on its pivot, the largest key it contains, and
/// pivots are pairwise distinct. Rows are never modified after insertion, so
/// row indices are stable identifiers.
#[derive(Clone, Debug)]
pub struct Echelon<K: Ord + Clone> {
    rows: Vec<BTreeMap<K, Rational>>,
    pivots: BTreeMap<K, usize>,
}

impl<K: Ord + Clone> Default for Echelon<K> {
    fn default() -> Self {
        Echelon {
            rows: Vec::new(),
            pivots: BTreeMap::new(),
        }
    }
}

impl<K: Ord + Clone> Echelon<K> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn row(&self, i: usize) -> &BTreeMap<K, Rational> {
        &self.rows[i]
    }

    pub fn reduce(&self, vector: &BTreeMap<K, Rational>) -> Reduction<K> {
        let mut residual = vector.clone();
        let mut coeffs = Vec::new();
        let mut upper: Bound<K> = Bound::Unbounded;
        loop {
            let hit = residual
                .range((Bound::Unbounded, upper.clone()))
                .rev()
                .find_map(|(k, c)| self.pivots.get(k).map(|&row| (k.clone(), c.clone(), row)));
            let Some((key, coeff, row)) = hit else { break };
            for (k, c) in &self.rows[row] {
                let delta = c * &coeff;
                let entry = residual.entry(k.clone()).or_insert_with(Rational::zero);
                *entry -= delta;
                if entry.is_zero() {
                    residual.remove(k);
                }
            }
            coeffs.push((row, coeff));
            upper = Bound::Excluded(key);
        }
        Reduction { residual, coeffs }
    }

    pub fn contains(&self, vector: &BTreeMap<K, Rational>) -> bool {
        self.reduce(vector).residual.is_empty()
    }

    /// Appends a fully reduced, nonzero residual as a new row (scaled monic).
    /// Returns the row index and the scale `s` with `row = s * residual`.
    pub fn push_residual(&mut self, residual: BTreeMap<K, Rational>) -> (usize, Rational) {
        let (pivot, lead) = residual
            .iter()
            .next_back()
            .map(|(k, c)| (k.clone(), c.clone()))
            .expect("cannot push a zero residual");
        debug_assert!(!self.pivots.contains_key(&pivot));
        let scale = lead.recip();
        let row: BTreeMap<K, Rational> = residual.into_iter().map(|(k, c)| (k, c * &scale)).collect();
        let idx = self.rows.len();
        self.pivots.insert(pivot, idx);
        self.rows.push(row);
        (idx, scale)
    }

    /// Reduces and inserts if independent; returns whether the rank grew.
    pub fn insert(&mut self, vector: &BTreeMap<K, Rational>) -> bool {
        let red = self.reduce(vector);
        if red.residual.is_empty() {
            false
        } else {
            self.push_residual(red.residual);
            true
        }
    }
}

/// Rank of a family of polynomials, by exact elimination.
pub fn polynomial_rank<'a, I>(polys: I) -> usize
where
    I: IntoIterator<Item = &'a Polynomial>,
{
    let mut basis = Echelon::new();
    for p in polys {
        basis.insert(p.term_map());
    }
    basis.len()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::{int, rat};

    #[test]
    fn inverse_roundtrip() {
        let a = Matrix::from_i64(&[&[2, 1, 0], &[0, 1, 3], &[1, 0, 1]]);
        let inv = a.inverse().unwrap();
        assert_eq!(a.mul(&inv).unwrap(), Matrix::identity(3));
        assert_eq!(inv.mul(&a).unwrap(), Matrix::identity(3));
    }

    #[test]
    fn singular_matrix_rejected() {
        let a = Matrix::from_i64(&[&[1, 1], &[1, 1]]);
        assert_eq!(a.inverse(), Err(Error::Singular));
    }

    #[test]
    fn permutation_convention() {
        let p = Matrix::permutation(&[1, 2, 0]);
        let v = p.mul_vec(&[int(10), int(20), int(30)]).unwrap();
        assert_eq!(v, vec![int(30), int(10), int(20)]);
    }

    #[test]
    fn echelon_records_combination() {
        let mut e: Echelon<u32> = Echelon::new();
        let v1: BTreeMap<u32, Rational> = [(3, int(2)), (1, int(1))].into_iter().collect();
        let v2: BTreeMap<u32, Rational> = [(2, int(1)), (1, int(-1))].into_iter().collect();
        assert!(e.insert(&v1));
        assert!(e.insert(&v2));
        let target: BTreeMap<u32, Rational> = [(3, int(4)), (2, int(3)), (1, int(-1))].into_iter().collect();
        let red = e.reduce(&target);
        assert!(red.residual.is_empty());
        // rebuild the target from the recorded coefficients
        let mut rebuilt: BTreeMap<u32, Rational> = BTreeMap::new();
        for (row, c) in &red.coeffs {
            for (k, v) in e.row(*row) {
                *rebuilt.entry(*k).or_insert_with(Rational::zero) += v * c;
            }
        }
        rebuilt.retain(|_, v| !v.is_zero());
        assert_eq!(rebuilt, target);
        assert_eq!(e.row(0).get(&3), Some(&int(1)));
        assert_eq!(e.row(0).get(&1), Some(&rat(1, 2)));
    }
}
