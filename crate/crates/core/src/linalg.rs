//! Dense matrices over F_p.
//!
//! Row reduction uses the first nonzero entry in each column as pivot, so
//! every result (RREF, null-space basis, solutions) is fully deterministic.

use std::fmt;

use crate::error::{Error, Result};
use crate::finite_field::{FieldElement, FieldSpec};

/// Row-major dense matrix with canonical entries in `[0, p)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MatrixFp {
    rows: usize,
    cols: usize,
    data: Vec<u64>,
    field: FieldSpec,
}

impl MatrixFp {
    pub fn new(field: FieldSpec, rows: usize, cols: usize, data: Vec<u64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!("{} entries for a {rows}x{cols} matrix", data.len())));
        }
        if let Some(&bad) = data.iter().find(|&&v| v >= field.p()) {
            return Err(Error::OutOfRange { value: bad, p: field.p() });
        }
        Ok(MatrixFp { rows, cols, data, field })
    }

    pub fn zeros(field: FieldSpec, rows: usize, cols: usize) -> Self {
        MatrixFp { rows, cols, data: vec![0; rows * cols], field }
    }

    pub fn identity(field: FieldSpec, n: usize) -> Self {
        let mut m = Self::zeros(field, n, n);
        for i in 0..n {
            m.data[i * n + i] = 1 % field.p();
        }
        m
    }

    /// Builds a matrix from equal-length rows. An empty row list yields a
    /// `0 x 0` matrix.
    pub fn from_rows<R: AsRef<[u64]>>(field: FieldSpec, rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        Self::from_rows_with_cols(field, cols, rows)
    }

    /// Like [`from_rows`](Self::from_rows) but fixes the column count, so an
    /// empty row list gives a `0 x cols` matrix.
    pub fn from_rows_with_cols<R: AsRef<[u64]>>(field: FieldSpec, cols: usize, rows: &[R]) -> Result<Self> {
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(Error::DimensionMismatch(format!(
                    "ragged rows: expected {cols} columns, found {}",
                    r.len()
                )));
            }
            data.extend_from_slice(r);
        }
        Self::new(field, rows.len(), cols, data)
    }

    pub fn row_vector(field: FieldSpec, v: &[u64]) -> Result<Self> {
        Self::new(field, 1, v.len(), v.to_vec())
    }

    pub fn column_vector(field: FieldSpec, v: &[u64]) -> Result<Self> {
        Self::new(field, v.len(), 1, v.to_vec())
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn field(&self) -> FieldSpec {
        self.field
    }

    pub fn data(&self) -> &[u64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> u64 {
        self.data[r * self.cols + c]
    }

    pub fn entry(&self, r: usize, c: usize) -> FieldElement {
        // entries are canonical by construction
        self.field.element(self.get(r, c)).expect("canonical entry")
    }

    /// Sets an entry, reducing the value mod p.
    pub fn set(&mut self, r: usize, c: usize, v: u64) {
        self.data[r * self.cols + c] = v % self.field.p();
    }

    pub fn row(&self, r: usize) -> &[u64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column(&self, c: usize) -> Vec<u64> {
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<u64>> {
        (0..self.rows).map(|r| self.row(r).to_vec()).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&v| v == 0)
    }

    pub fn transpose(&self) -> MatrixFp {
        let mut out = Self::zeros(self.field, self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.data[c * self.rows + r] = self.get(r, c);
            }
        }
        out
    }

    /// Sub-matrix formed by the given columns, in the given order.
    pub fn select_columns(&self, cols: &[usize]) -> Result<MatrixFp> {
        if let Some(&bad) = cols.iter().find(|&&c| c >= self.cols) {
            return Err(Error::CoordinateOutOfRange { index: bad, len: self.cols });
        }
        let mut data = Vec::with_capacity(self.rows * cols.len());
        for r in 0..self.rows {
            let row = self.row(r);
            data.extend(cols.iter().map(|&c| row[c]));
        }
        Ok(MatrixFp { rows: self.rows, cols: cols.len(), data, field: self.field })
    }

    pub fn select_rows(&self, rows: &[usize]) -> Result<MatrixFp> {
        if let Some(&bad) = rows.iter().find(|&&r| r >= self.rows) {
            return Err(Error::CoordinateOutOfRange { index: bad, len: self.rows });
        }
        let mut data = Vec::with_capacity(rows.len() * self.cols);
        for &r in rows {
            data.extend_from_slice(self.row(r));
        }
        Ok(MatrixFp { rows: rows.len(), cols: self.cols, data, field: self.field })
    }

    pub fn add(&self, other: &MatrixFp) -> Result<MatrixFp> {
        self.field.check_same(&other.field)?;
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::DimensionMismatch(format!(
                "cannot add {}x{} and {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let f = self.field;
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| f.add(a, b)).collect();
        Ok(MatrixFp { rows: self.rows, cols: self.cols, data, field: f })
    }

    pub fn scale(&self, s: u64) -> MatrixFp {
        let f = self.field;
        let s = s % f.p();
        MatrixFp { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&a| f.mul(a, s)).collect(), field: f }
    }

    pub fn matmul(&self, other: &MatrixFp) -> Result<MatrixFp> {
        self.field.check_same(&other.field)?;
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let p = self.field.p();
        let mut out = Self::zeros(self.field, self.rows, other.cols);
        for r in 0..self.rows {
            let row = self.row(r);
            for c in 0..other.cols {
                // accumulate in u128 and reduce once; p < 2^32
                let mut acc: u128 = 0;
                for (t, &a) in row.iter().enumerate() {
                    acc += (a * other.get(t, c)) as u128;
                }
                out.data[r * other.cols + c] = (acc % p as u128) as u64;
            }
        }
        Ok(out)
    }

    /// Reduced row echelon form together with the (0-based, ascending) pivot
    /// columns.
    pub fn rref(&self) -> (MatrixFp, Vec<usize>) {
        let f = self.field;
        let mut m = self.clone();
        let mut pivots = Vec::new();
        let mut lead = 0;
        for c in 0..m.cols {
            if lead == m.rows {
                break;
            }
            let Some(pr) = (lead..m.rows).find(|&r| m.get(r, c) != 0) else {
                continue;
            };
            m.swap_rows(pr, lead);
            let inv = f.inv(m.get(lead, c)).expect("nonzero pivot");
            for j in c..m.cols {
                let v = f.mul(m.get(lead, j), inv);
                m.data[lead * m.cols + j] = v;
            }
            for r in 0..m.rows {
                if r == lead {
                    continue;
                }
                let factor = m.get(r, c);
                if factor == 0 {
                    continue;
                }
                for j in c..m.cols {
                    let v = f.sub(m.get(r, j), f.mul(factor, m.get(lead, j)));
                    m.data[r * m.cols + j] = v;
                }
            }
            pivots.push(c);
            lead += 1;
        }
        (m, pivots)
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }

    pub fn rank(&self) -> usize {
        self.rref().1.len()
    }

    /// Basis of `{ v : self * v^T = 0 }` as the rows of the result. Free
    /// columns carry the identity pattern; a trivial kernel gives `0 x cols`.
    pub fn null_space(&self) -> MatrixFp {
        let f = self.field;
        let (r, pivots) = self.rref();
        let free: Vec<usize> = (0..self.cols).filter(|c| !pivots.contains(c)).collect();
        let mut out = Self::zeros(f, free.len(), self.cols);
        for (i, &fc) in free.iter().enumerate() {
            out.data[i * self.cols + fc] = 1;
            for (pr, &pc) in pivots.iter().enumerate() {
                out.data[i * self.cols + pc] = f.neg(r.get(pr, fc));
            }
        }
        out
    }

    /// Basis of the row space: the nonzero rows of the RREF.
    pub fn row_basis(&self) -> MatrixFp {
        let (r, pivots) = self.rref();
        let keep: Vec<usize> = (0..pivots.len()).collect();
        r.select_rows(&keep).expect("pivot rows exist")
    }

    /// True when both matrices span the same row space.
    pub fn same_row_space(&self, other: &MatrixFp) -> bool {
        self.field == other.field && self.cols == other.cols && self.row_basis() == other.row_basis()
    }

    /// Solves `a * x = y` for `x`, where `a` has full column rank.
    pub fn solve(a: &MatrixFp, y: &MatrixFp) -> Result<MatrixFp> {
        a.field.check_same(&y.field)?;
        if a.rows != y.rows {
            return Err(Error::DimensionMismatch(format!(
                "system has {} equations but right-hand side has {} rows",
                a.rows, y.rows
            )));
        }
        let (ac, yc) = (a.cols, y.cols);
        let mut aug = Self::zeros(a.field, a.rows, ac + yc);
        for r in 0..a.rows {
            aug.data[r * (ac + yc)..r * (ac + yc) + ac].copy_from_slice(a.row(r));
            aug.data[r * (ac + yc) + ac..(r + 1) * (ac + yc)].copy_from_slice(y.row(r));
        }
        let (red, pivots) = aug.rref();
        if pivots.iter().any(|&p| p >= ac) {
            return Err(Error::Inconsistent);
        }
        if pivots.len() < ac {
            return Err(Error::RankDeficient { rank: pivots.len(), needed: ac });
        }
        // pivots are exactly 0..ac, so row i of the RREF holds x_i
        let mut x = Self::zeros(a.field, ac, yc);
        for i in 0..ac {
            x.data[i * yc..(i + 1) * yc].copy_from_slice(&red.row(i)[ac..]);
        }
        Ok(x)
    }
}

impl fmt::Display for MatrixFp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in 0..self.rows {
            let cells: Vec<String> = self.row(r).iter().map(|v| v.to_string()).collect();
            writeln!(f, "[{}]", cells.join(" "))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn f5() -> FieldSpec {
        FieldSpec::new(5).unwrap()
    }

    fn m(field: FieldSpec, rows: &[&[u64]]) -> MatrixFp {
        MatrixFp::from_rows(field, rows).unwrap()
    }

    #[test]
    fn construction_validates() {
        assert!(MatrixFp::new(f5(), 2, 2, vec![0, 1, 2]).is_err());
        assert_eq!(MatrixFp::new(f5(), 1, 1, vec![5]), Err(Error::OutOfRange { value: 5, p: 5 }));
        assert!(MatrixFp::from_rows(f5(), &[vec![1, 2], vec![3]]).is_err());
    }

    #[test]
    fn matmul_examples() {
        let f = f5();
        let any = m(f, &[&[1, 2, 3], &[4, 0, 2]]);
        assert_eq!(MatrixFp::identity(f, 2).matmul(&any).unwrap(), any);

        let a = m(f, &[&[1, 1]]);
        let b = m(f, &[&[2], &[3]]);
        assert_eq!(a.matmul(&b).unwrap(), m(f, &[&[0]]));

        let x = m(f, &[&[1, 2]]);
        let gc = m(f, &[&[1, 0, 4, 3, 2], &[0, 1, 2, 3, 4]]);
        assert_eq!(x.matmul(&gc).unwrap(), m(f, &[&[1, 2, 3, 4, 0]]));
    }

    #[test]
    fn matmul_rejects_bad_shapes() {
        let f = f5();
        let a = m(f, &[&[1, 1]]);
        assert!(matches!(a.matmul(&a), Err(Error::DimensionMismatch(_))));
        let g = MatrixFp::identity(FieldSpec::new(7).unwrap(), 2);
        assert!(matches!(a.matmul(&g), Err(Error::FieldMismatch { .. })));
    }

    #[test]
    fn rref_examples() {
        let f = f5();
        let z = MatrixFp::zeros(f, 3, 4);
        assert_eq!(z.rref(), (z.clone(), vec![]));

        let id = MatrixFp::identity(f, 4);
        assert_eq!(id.rref(), (id.clone(), vec![0, 1, 2, 3]));

        let a = m(f, &[&[2, 4], &[1, 2]]);
        assert_eq!(a.rref(), (m(f, &[&[1, 2], &[0, 0]]), vec![0]));
    }

    #[test]
    fn rank_examples() {
        let f = f5();
        assert_eq!(MatrixFp::identity(f, 6).rank(), 6);
        assert_eq!(MatrixFp::zeros(f, 3, 3).rank(), 0);
        let vandermonde = m(f, &[&[1, 1, 1, 1, 1], &[0, 1, 2, 3, 4]]);
        assert_eq!(vandermonde.rank(), 2);
    }

    #[test]
    fn null_space_examples() {
        let f = f5();
        let ns = MatrixFp::identity(f, 4).null_space();
        assert_eq!((ns.rows(), ns.cols()), (0, 4));

        let ones = m(f, &[&[1, 1, 1, 1, 1]]);
        let ns = ones.null_space();
        assert_eq!(ns.rows(), 4);
        assert_eq!(ns.rank(), 4);
        assert!(ones.matmul(&ns.transpose()).unwrap().is_zero());

        // GRS_3([0..4], 1) has dual GRS_2([0..4], -1) = GRS_2([0..4], 1)
        let g3 = m(f, &[&[1, 1, 1, 1, 1], &[0, 1, 2, 3, 4], &[0, 1, 4, 4, 1]]);
        let g2 = m(f, &[&[1, 1, 1, 1, 1], &[0, 1, 2, 3, 4]]);
        assert!(g3.null_space().same_row_space(&g2));
    }

    #[test]
    fn solve_examples() {
        let f = f5();
        let y = m(f, &[&[3], &[1], &[4]]);
        assert_eq!(MatrixFp::solve(&MatrixFp::identity(f, 3), &y).unwrap(), y);

        let a = m(f, &[&[1, 0], &[1, 1]]);
        let y = m(f, &[&[2], &[0]]);
        assert_eq!(MatrixFp::solve(&a, &y).unwrap(), m(f, &[&[2], &[3]]));

        let a = m(f, &[&[1, 1], &[2, 2]]);
        let y = m(f, &[&[0], &[1]]);
        assert_eq!(MatrixFp::solve(&a, &y), Err(Error::Inconsistent));

        let y = m(f, &[&[1], &[2]]);
        assert_eq!(MatrixFp::solve(&a, &y), Err(Error::RankDeficient { rank: 1, needed: 2 }));
    }

    #[test]
    fn solve_overdetermined_consistent() {
        let f = f5();
        let a = m(f, &[&[1, 0], &[0, 1], &[1, 1]]);
        let x = m(f, &[&[2, 1], &[4, 0]]);
        let y = a.matmul(&x).unwrap();
        assert_eq!(MatrixFp::solve(&a, &y).unwrap(), x);
    }

    fn arb_matrix() -> impl Strategy<Value = MatrixFp> {
        (prop::sample::select(vec![2u64, 3, 5, 7, 13]), 1usize..6, 1usize..7).prop_flat_map(|(p, r, c)| {
            prop::collection::vec(0..p, r * c)
                .prop_map(move |data| MatrixFp::new(FieldSpec::new(p).unwrap(), r, c, data).unwrap())
        })
    }

    proptest! {
        #[test]
        fn rank_is_transpose_invariant(a in arb_matrix()) {
            prop_assert_eq!(a.rank(), a.transpose().rank());
        }

        #[test]
        fn rank_nullity(a in arb_matrix()) {
            let ns = a.null_space();
            prop_assert_eq!(ns.rows() + a.rank(), a.cols());
            if ns.rows() > 0 {
                prop_assert!(a.matmul(&ns.transpose()).unwrap().is_zero());
            }
        }

        #[test]
        fn solve_then_substitute(a in arb_matrix(), seed in any::<u64>()) {
            let f = a.field();
            let y: Vec<u64> = (0..a.rows()).map(|i| (seed >> (i % 60)) % f.p()).collect();
            let y = MatrixFp::column_vector(f, &y).unwrap();
            if let Ok(x) = MatrixFp::solve(&a, &y) {
                prop_assert_eq!(a.matmul(&x).unwrap(), y);
            }
        }
    }
}
