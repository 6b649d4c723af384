//! Generalized Reed-Solomon codes `GRS_k(alpha, v)`: evaluations
//! `(v_i f(alpha_i))_i` of polynomials `f` of degree below `k`.

use crate::codes::LinearCode;
use crate::error::{Error, Result};
use crate::finite_field::FieldSpec;
use crate::linalg::MatrixFp;

/// Which generator matrix to attach to a GRS code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GeneratorForm {
    /// Rows `alpha^0 .. alpha^(k-1)` scaled by `v`.
    Canonical,
    /// Identity on the first `k` coordinates.
    Systematic,
}

/// Parameters of a GRS code: distinct evaluation points, nonzero column
/// multipliers and a dimension `1 <= k <= n <= p`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrsSpec {
    alpha: Vec<u64>,
    v: Vec<u64>,
    k: usize,
    field: FieldSpec,
}

impl GrsSpec {
    pub fn new(field: FieldSpec, alpha: Vec<u64>, v: Vec<u64>, k: usize) -> Result<Self> {
        let n = alpha.len();
        if n == 0 {
            return Err(Error::InvalidGrs("empty evaluation vector".into()));
        }
        if v.len() != n {
            return Err(Error::InvalidGrs(format!("{} multipliers for {n} points", v.len())));
        }
        if k == 0 || k > n {
            return Err(Error::InvalidGrs(format!("dimension {k} outside 1..={n}")));
        }
        if let Some(&bad) = alpha.iter().chain(&v).find(|&&x| x >= field.p()) {
            return Err(Error::OutOfRange { value: bad, p: field.p() });
        }
        let mut sorted = alpha.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidGrs("evaluation points are not distinct".into()));
        }
        if v.contains(&0) {
            return Err(Error::InvalidGrs("zero column multiplier".into()));
        }
        Ok(GrsSpec { alpha, v, k, field })
    }

    /// `alpha = [0, 1, .., n-1]`, `v = 1`.
    pub fn with_defaults(field: FieldSpec, n: usize, k: usize) -> Result<Self> {
        if n as u64 > field.p() {
            return Err(Error::InvalidGrs(format!("{n} distinct points do not exist in {field}")));
        }
        Self::new(field, (0..n as u64).collect(), vec![1; n], k)
    }

    pub fn n(&self) -> usize {
        self.alpha.len()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn field(&self) -> FieldSpec {
        self.field
    }

    pub fn alpha(&self) -> &[u64] {
        &self.alpha
    }

    pub fn multipliers(&self) -> &[u64] {
        &self.v
    }

    /// Same points and multipliers, different dimension.
    pub fn with_dimension(&self, k: usize) -> Result<Self> {
        Self::new(self.field, self.alpha.clone(), self.v.clone(), k)
    }

    pub fn canonical_generator(&self) -> MatrixFp {
        let f = self.field;
        let n = self.n();
        let mut g = MatrixFp::zeros(f, self.k, n);
        for (j, (&a, &v)) in self.alpha.iter().zip(&self.v).enumerate() {
            let mut power = 1;
            for r in 0..self.k {
                g.set(r, j, f.mul(power, v));
                power = f.mul(power, a);
            }
        }
        g
    }

    /// Systematic generator built from the Lagrange basis on the first `k`
    /// points: row `i` evaluates `f_i(x) = v_i^-1 prod_{j != i} (x - a_j)/(a_i - a_j)`
    /// and is then scaled by `v`.
    pub fn systematic_generator(&self) -> MatrixFp {
        let f = self.field;
        let n = self.n();
        let k = self.k;
        let mut g = MatrixFp::zeros(f, k, n);
        for i in 0..k {
            let ai = self.alpha[i];
            let mut denom = self.v[i];
            for j in (0..k).filter(|&j| j != i) {
                denom = f.mul(denom, f.sub(ai, self.alpha[j]));
            }
            let scale = f.inv(denom).expect("distinct points and nonzero multipliers");
            for col in 0..n {
                let x = self.alpha[col];
                let mut num = scale;
                for j in (0..k).filter(|&j| j != i) {
                    num = f.mul(num, f.sub(x, self.alpha[j]));
                }
                g.set(i, col, f.mul(num, self.v[col]));
            }
        }
        g
    }

    /// Multipliers `u_i = (v_i prod_{j != i} (a_i - a_j))^-1` of the dual code.
    pub fn dual_multipliers(&self) -> Vec<u64> {
        let f = self.field;
        (0..self.n())
            .map(|i| {
                let mut prod = self.v[i];
                for j in (0..self.n()).filter(|&j| j != i) {
                    prod = f.mul(prod, f.sub(self.alpha[i], self.alpha[j]));
                }
                f.inv(prod).expect("distinct points and nonzero multipliers")
            })
            .collect()
    }

    /// `GRS_{n-k}(alpha, u)`, the dual code.
    pub fn dual(&self) -> Result<GrsSpec> {
        if self.k == self.n() {
            return Err(Error::FullDimension);
        }
        Self::new(self.field, self.alpha.clone(), self.dual_multipliers(), self.n() - self.k)
    }

    /// `GRS_k(alpha, v) * GRS_l(alpha, w) = GRS_{min(k+l-1, n)}(alpha, v*w)`.
    pub fn star(&self, other: &GrsSpec) -> Result<GrsSpec> {
        self.field.check_same(&other.field)?;
        if self.alpha != other.alpha {
            return Err(Error::AlphaMismatch);
        }
        let f = self.field;
        let w = self.v.iter().zip(&other.v).map(|(&a, &b)| f.mul(a, b)).collect();
        let k = (self.k + other.k - 1).min(self.n());
        Self::new(f, self.alpha.clone(), w, k)
    }

    /// The code itself; its minimum distance `n - k + 1` is recorded without
    /// enumeration.
    pub fn as_code(&self, form: GeneratorForm) -> LinearCode {
        let gen = match form {
            GeneratorForm::Canonical => self.canonical_generator(),
            GeneratorForm::Systematic => self.systematic_generator(),
        };
        LinearCode::with_known_distance(gen, self.n() - self.k + 1)
    }
}
