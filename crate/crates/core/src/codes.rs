//! Linear codes given by generator matrices.
//!
//! Two codes are equal when their generators span the same row space; the
//! particular generator is kept because its shape (systematic, Vandermonde)
//! matters to encoding and decoding.

use std::sync::OnceLock;

use itertools::Itertools;

use crate::error::{Error, Result};
use crate::finite_field::FieldSpec;
use crate::linalg::MatrixFp;

/// Largest `p^k` that [`LinearCode::min_distance`] will enumerate.
pub const MIN_DISTANCE_BUDGET: u128 = 1 << 22;
/// Largest `C(n, k)` that [`LinearCode::is_mds`] will enumerate.
pub const MDS_SUBSET_BUDGET: u128 = 1_000_000;
/// Largest total number of column subsets [`column_independence`] may test.
pub const SUBSET_BUDGET: u128 = 1_000_000;

/// An `[n, k]` linear code over F_p.
#[derive(Debug, Clone)]
pub struct LinearCode {
    gen: MatrixFp,
    reduced: bool,
    min_distance: OnceLock<usize>,
}

impl LinearCode {
    /// Builds a code from a generator. Rank-deficient input is replaced by
    /// its RREF basis and flagged (see [`was_reduced`](Self::was_reduced)).
    pub fn from_generator(gen: MatrixFp) -> Result<Self> {
        if gen.rows() == 0 || gen.cols() == 0 || gen.is_zero() {
            return Err(Error::ZeroMatrix);
        }
        let rank = gen.rank();
        if rank < gen.rows() {
            return Ok(LinearCode { gen: gen.row_basis(), reduced: true, min_distance: OnceLock::new() });
        }
        Ok(LinearCode { gen, reduced: false, min_distance: OnceLock::new() })
    }

    /// Code with a full-rank generator and known minimum distance.
    pub(crate) fn with_known_distance(gen: MatrixFp, d: usize) -> Self {
        debug_assert_eq!(gen.rank(), gen.rows());
        let cell = OnceLock::new();
        let _ = cell.set(d);
        LinearCode { gen, reduced: false, min_distance: cell }
    }

    /// The repetition code, spanned by the all-ones word.
    pub fn repetition(n: usize, field: FieldSpec) -> Result<Self> {
        if n == 0 {
            return Err(Error::WrongSize { expected: 1, got: 0 });
        }
        let gen = MatrixFp::new(field, 1, n, vec![1; n])?;
        Ok(Self::with_known_distance(gen, n))
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.gen.cols()
    }

    #[inline]
    pub fn k(&self) -> usize {
        self.gen.rows()
    }

    pub fn field(&self) -> FieldSpec {
        self.gen.field()
    }

    pub fn generator(&self) -> &MatrixFp {
        &self.gen
    }

    /// Whether the generator passed to [`from_generator`](Self::from_generator)
    /// had dependent rows.
    pub fn was_reduced(&self) -> bool {
        self.reduced
    }

    pub fn cached_min_distance(&self) -> Option<usize> {
        self.min_distance.get().copied()
    }

    /// Row-space equality.
    pub fn same_code(&self, other: &LinearCode) -> bool {
        self.gen.same_row_space(&other.gen)
    }

    /// Is `v` a codeword?
    pub fn contains(&self, v: &[u64]) -> Result<bool> {
        let row = MatrixFp::row_vector(self.field(), v)?;
        if row.cols() != self.n() {
            return Err(Error::WrongSize { expected: self.n(), got: row.cols() });
        }
        let dual_gen = self.gen.null_space();
        if dual_gen.rows() == 0 {
            return Ok(true);
        }
        Ok(dual_gen.matmul(&row.transpose())?.is_zero())
    }

    /// Encodes a `1 x k` message (or a stack of messages) into codewords.
    pub fn encode(&self, messages: &MatrixFp) -> Result<MatrixFp> {
        messages.matmul(&self.gen)
    }

    /// The orthogonal complement.
    pub fn dual(&self) -> Result<LinearCode> {
        if self.k() == self.n() {
            return Err(Error::TrivialDual);
        }
        Ok(LinearCode { gen: self.gen.null_space(), reduced: false, min_distance: OnceLock::new() })
    }

    /// Span of all coordinatewise products of basis rows.
    pub fn star_product(&self, other: &LinearCode) -> Result<LinearCode> {
        self.field().check_same(&other.field())?;
        if self.n() != other.n() {
            return Err(Error::DimensionMismatch(format!("star product of lengths {} and {}", self.n(), other.n())));
        }
        let f = self.field();
        let mut products = Vec::with_capacity(self.k() * other.k());
        for a in 0..self.k() {
            for b in 0..other.k() {
                let row: Vec<u64> = self.gen.row(a).iter().zip(other.gen.row(b)).map(|(&x, &y)| f.mul(x, y)).collect();
                products.push(row);
            }
        }
        let spanning = MatrixFp::from_rows(f, &products)?;
        Ok(LinearCode { gen: spanning.row_basis(), reduced: false, min_distance: OnceLock::new() })
    }

    /// Minimum Hamming weight of a nonzero codeword, by enumeration of all
    /// messages. Refuses when `p^k` exceeds [`MIN_DISTANCE_BUDGET`].
    pub fn min_distance(&self) -> Result<usize> {
        if let Some(d) = self.cached_min_distance() {
            return Ok(d);
        }
        let d = self.enumerate_min_distance()?;
        Ok(*self.min_distance.get_or_init(|| d))
    }

    fn enumerate_min_distance(&self) -> Result<usize> {
        let f = self.field();
        let p = f.p();
        let work = (p as u128).checked_pow(self.k() as u32).unwrap_or(u128::MAX);
        if work > MIN_DISTANCE_BUDGET {
            return Err(Error::BudgetExceeded { work, budget: MIN_DISTANCE_BUDGET });
        }
        let n = self.n();
        let k = self.k();
        let weight = |cw: &[u64]| cw.iter().filter(|&&v| v != 0).count();
        let mut best = n;
        // Weight is invariant under scaling, so only messages whose leading
        // nonzero coordinate is 1 are visited.
        for lead in 0..k {
            let mut cw = self.gen.row(lead).to_vec();
            let tail = k - lead - 1;
            let mut digits = vec![0u64; tail];
            loop {
                best = best.min(weight(&cw));
                if best == 1 {
                    return Ok(1);
                }
                let mut j = 0;
                loop {
                    if j == tail {
                        break;
                    }
                    let row = self.gen.row(lead + 1 + j);
                    for (c, &r) in cw.iter_mut().zip(row) {
                        *c = f.add(*c, r);
                    }
                    digits[j] += 1;
                    if digits[j] == p {
                        // p additions of the row cancel out
                        digits[j] = 0;
                        j += 1;
                    } else {
                        break;
                    }
                }
                if j == tail {
                    break;
                }
            }
        }
        Ok(best)
    }

    /// Minimum distance computed from the dual: `d - 1` is the largest `c`
    /// such that every `c` columns of a parity-check matrix are independent.
    pub fn min_distance_via_dual(&self) -> Result<usize> {
        if self.k() == self.n() {
            return Ok(1);
        }
        let parity = self.gen.null_space();
        Ok(column_independence(&parity, SUBSET_BUDGET)? + 1)
    }

    /// Are the coordinates `cols` (0-based) an information set?
    pub fn is_information_set(&self, cols: &[usize]) -> Result<bool> {
        if cols.len() != self.k() {
            return Err(Error::WrongSize { expected: self.k(), got: cols.len() });
        }
        let sub = self.gen.select_columns(cols)?;
        Ok(sub.rank() == self.k())
    }

    /// First information set found by a left-to-right pivot scan.
    pub fn first_information_set(&self) -> Vec<usize> {
        self.gen.rref().1
    }

    /// MDS test: every `k`-subset of coordinates is an information set.
    pub fn is_mds(&self) -> Result<bool> {
        if let Some(d) = self.cached_min_distance() {
            return Ok(d == self.n() - self.k() + 1);
        }
        let work = num_integer::binomial(self.n() as u128, self.k() as u128);
        if work > MDS_SUBSET_BUDGET {
            return Err(Error::BudgetExceeded { work, budget: MDS_SUBSET_BUDGET });
        }
        for cols in (0..self.n()).combinations(self.k()) {
            if !self.is_information_set(&cols)? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Coordinates where some codeword is nonzero, ascending.
    pub fn support(&self) -> Vec<usize> {
        (0..self.n()).filter(|&c| (0..self.k()).any(|r| self.gen.get(r, c) != 0)).collect()
    }

    pub fn has_full_support(&self) -> bool {
        self.support().len() == self.n()
    }
}

impl PartialEq for LinearCode {
    fn eq(&self, other: &Self) -> bool {
        self.same_code(other)
    }
}

/// Largest `t` such that every `t` columns of `m` are linearly independent.
///
/// Sizes are tried in increasing order and the search stops at the first
/// dependent subset. The total number of subsets checked is capped by
/// `budget`.
pub fn column_independence(m: &MatrixFp, budget: u128) -> Result<usize> {
    let n = m.cols();
    let mut spent: u128 = 0;
    let max_t = m.rows().min(n);
    for t in 1..=max_t {
        let count = num_integer::binomial(n as u128, t as u128);
        spent += count;
        if spent > budget {
            return Err(Error::BudgetExceeded { work: spent, budget });
        }
        for cols in (0..n).combinations(t) {
            if m.select_columns(&cols)?.rank() < t {
                return Ok(t - 1);
            }
        }
    }
    Ok(max_t)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f(p: u64) -> FieldSpec {
        FieldSpec::new(p).unwrap()
    }

    fn code(p: u64, rows: &[&[u64]]) -> LinearCode {
        LinearCode::from_generator(MatrixFp::from_rows(f(p), rows).unwrap()).unwrap()
    }

    fn grs_c() -> LinearCode {
        code(5, &[&[1, 0, 4, 3, 2], &[0, 1, 2, 3, 4]])
    }

    #[test]
    fn from_generator_examples() {
        let c = grs_c();
        assert_eq!((c.n(), c.k()), (5, 2));
        assert!(!c.was_reduced());

        let rep = code(2, &[&[1, 1, 1]]);
        assert_eq!((rep.n(), rep.k()), (3, 1));

        let r = code(5, &[&[1, 0], &[2, 0]]);
        assert_eq!((r.n(), r.k()), (2, 1));
        assert!(r.was_reduced());

        let zero = MatrixFp::zeros(f(5), 2, 3);
        assert_eq!(LinearCode::from_generator(zero).unwrap_err(), Error::ZeroMatrix);
    }

    #[test]
    fn repetition_examples() {
        let r = LinearCode::repetition(5, f(5)).unwrap();
        assert_eq!(r.generator().row(0), &[1, 1, 1, 1, 1]);
        assert_eq!(r.cached_min_distance(), Some(5));
        let r1 = LinearCode::repetition(1, f(2)).unwrap();
        assert_eq!((r1.n(), r1.k()), (1, 1));
        for n in 2..7 {
            assert_eq!(LinearCode::repetition(n, f(7)).unwrap().dual().unwrap().k(), n - 1);
        }
        assert!(LinearCode::repetition(0, f(7)).is_err());
    }

    #[test]
    fn dual_examples() {
        let c = grs_c();
        assert!(c.dual().unwrap().dual().unwrap().same_code(&c));

        let g3 = code(5, &[&[1, 1, 1, 1, 1], &[0, 1, 2, 3, 4], &[0, 1, 4, 4, 1]]);
        let g2 = code(5, &[&[1, 1, 1, 1, 1], &[0, 1, 2, 3, 4]]);
        assert!(g3.dual().unwrap().same_code(&g2));

        let d = LinearCode::repetition(4, f(5)).unwrap().dual().unwrap();
        assert_eq!((d.n(), d.k()), (4, 3));
        for r in 0..3 {
            assert_eq!(d.generator().row(r).iter().sum::<u64>() % 5, 0);
        }

        assert_eq!(MatrixFp::identity(f(5), 3).rank(), 3);
        let full = LinearCode::from_generator(MatrixFp::identity(f(5), 3)).unwrap();
        assert_eq!(full.dual().unwrap_err(), Error::TrivialDual);
    }

    #[test]
    fn star_product_examples() {
        let c = grs_c();
        let rep = LinearCode::repetition(5, f(5)).unwrap();
        assert!(c.star_product(&rep).unwrap().same_code(&c));

        let g2 = code(5, &[&[1, 1, 1, 1, 1], &[0, 1, 2, 3, 4]]);
        let g3 = code(5, &[&[1, 1, 1, 1, 1], &[0, 1, 2, 3, 4], &[0, 1, 4, 4, 1]]);
        assert!(g2.star_product(&g2).unwrap().same_code(&g3));

        // MDS C: (C * C^perp)^perp = Rep(n)
        let h = c.star_product(&c.dual().unwrap()).unwrap().dual().unwrap();
        assert!(h.same_code(&rep));

        let short = LinearCode::repetition(4, f(5)).unwrap();
        assert!(matches!(c.star_product(&short), Err(Error::DimensionMismatch(_))));
        let other_field = LinearCode::repetition(5, f(7)).unwrap();
        assert!(matches!(c.star_product(&other_field), Err(Error::FieldMismatch { .. })));
    }

    #[test]
    fn min_distance_examples() {
        assert_eq!(LinearCode::repetition(5, f(5)).unwrap().min_distance().unwrap(), 5);
        let c = grs_c();
        assert_eq!(c.min_distance().unwrap(), 4);
        assert_eq!(c.cached_min_distance(), Some(4));
        let g2 = code(5, &[&[1, 1, 1, 1, 1], &[0, 1, 2, 3, 4]]);
        assert_eq!(g2.dual().unwrap().min_distance().unwrap(), 3);
    }

    #[test]
    fn min_distance_budget() {
        // 13^6 > 2^22
        let rows: Vec<Vec<u64>> = (0..6).map(|i| (0..12).map(|j| (j as u64 + 1).pow(i) % 13).collect()).collect();
        let c = LinearCode::from_generator(MatrixFp::from_rows(f(13), &rows).unwrap()).unwrap();
        assert!(matches!(c.min_distance(), Err(Error::BudgetExceeded { .. })));
        // the dual route still works
        assert_eq!(c.min_distance_via_dual().unwrap(), 7);
    }

    #[test]
    fn min_distance_routes_agree() {
        let codes = [
            grs_c(),
            code(2, &[&[1, 0, 1, 1, 0], &[0, 1, 1, 0, 1]]),
            code(3, &[&[1, 2, 0, 1], &[0, 0, 1, 1]]),
            code(2, &[&[1, 0, 0, 0, 1, 1, 1], &[0, 1, 0, 1, 0, 1, 1], &[0, 0, 1, 1, 1, 0, 1]]),
        ];
        for c in &codes {
            let fresh = LinearCode::from_generator(c.generator().clone()).unwrap();
            assert_eq!(fresh.min_distance().unwrap(), c.min_distance_via_dual().unwrap());
        }
        // Hamming [7,4,3] via its [7,3,4] dual above
        let simplex = &codes[3];
        assert_eq!(simplex.min_distance().unwrap(), 4);
        assert_eq!(simplex.dual().unwrap().min_distance().unwrap(), 3);
    }

    #[test]
    fn information_sets() {
        let c = grs_c();
        assert!(c.is_information_set(&[0, 1]).unwrap());
        for cols in (0..5).combinations(2) {
            assert!(c.is_information_set(&cols).unwrap());
        }
        let bad = code(2, &[&[1, 0, 1], &[0, 0, 1]]);
        assert!(!bad.is_information_set(&[0, 1]).unwrap());
        assert_eq!(c.is_information_set(&[0]), Err(Error::WrongSize { expected: 2, got: 1 }));
        assert!(c.is_information_set(&[0, 9]).is_err());
        assert_eq!(bad.first_information_set(), vec![0, 2]);
    }

    #[test]
    fn mds_checks() {
        let fresh = LinearCode::from_generator(grs_c().generator().clone()).unwrap();
        assert!(fresh.is_mds().unwrap());
        assert!(LinearCode::repetition(6, f(7)).unwrap().is_mds().unwrap());
        assert!(!code(2, &[&[1, 0, 1], &[0, 0, 1]]).is_mds().unwrap());
    }

    #[test]
    fn support_examples() {
        assert_eq!(LinearCode::repetition(4, f(3)).unwrap().support(), vec![0, 1, 2, 3]);
        let c = code(5, &[&[1, 0, 3, 0], &[0, 0, 1, 2]]);
        assert_eq!(c.support(), vec![0, 2, 3]);
        assert!(!c.has_full_support());
        assert!(grs_c().has_full_support());
    }

    #[test]
    fn contains_and_encode() {
        let c = grs_c();
        let x = MatrixFp::from_rows(f(5), &[[1u64, 2]]).unwrap();
        let y = c.encode(&x).unwrap();
        assert_eq!(y.row(0), &[1, 2, 3, 4, 0]);
        assert!(c.contains(y.row(0)).unwrap());
        assert!(!c.contains(&[1, 0, 0, 0, 0]).unwrap());
    }

    #[test]
    fn column_independence_examples() {
        let rep = MatrixFp::from_rows(f(5), &[[1u64, 1, 1, 1, 1]]).unwrap();
        assert_eq!(column_independence(&rep, SUBSET_BUDGET).unwrap(), 1);
        let zero_col = MatrixFp::from_rows(f(5), &[[1u64, 0, 1]]).unwrap();
        assert_eq!(column_independence(&zero_col, SUBSET_BUDGET).unwrap(), 0);
        let id = MatrixFp::identity(f(5), 3);
        assert_eq!(column_independence(&id, SUBSET_BUDGET).unwrap(), 3);
        assert!(column_independence(&id, 2).is_err());
    }
}
