//! Coded distributed storage.
//!
//! `m` files of `b x k` symbols are stacked into a `bm x k` matrix `X`
//! (file `i` occupies rows `(i-1)b .. ib`) and encoded as `Y = X G_C`.
//! Server `j` stores only column `j` of `Y`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::codes::LinearCode;
use crate::error::{Error, Result};
use crate::finite_field::{FieldElement, FieldSpec};
use crate::linalg::MatrixFp;

/// The plaintext database `X`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Database {
    m: usize,
    b: usize,
    x: MatrixFp,
}

impl Database {
    /// Stacks equally shaped `b x k` files.
    pub fn from_files(files: &[MatrixFp]) -> Result<Self> {
        let first = files.first().ok_or_else(|| Error::Malformed("database has no files".into()))?;
        let (b, k, field) = (first.rows(), first.cols(), first.field());
        if b == 0 || k == 0 {
            return Err(Error::Malformed("files must be non-empty".into()));
        }
        let mut data = Vec::with_capacity(files.len() * b * k);
        for (i, file) in files.iter().enumerate() {
            field.check_same(&file.field())?;
            if file.rows() != b || file.cols() != k {
                return Err(Error::DimensionMismatch(format!(
                    "file {} is {}x{}, expected {b}x{k}",
                    i + 1,
                    file.rows(),
                    file.cols()
                )));
            }
            data.extend_from_slice(file.data());
        }
        let x = MatrixFp::new(field, files.len() * b, k, data)?;
        Ok(Database { m: files.len(), b, x })
    }

    pub fn from_matrix(x: MatrixFp, m: usize, b: usize) -> Result<Self> {
        if m == 0 || b == 0 || x.rows() != m * b || x.cols() == 0 {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} matrix cannot hold {m} files of {b} rows",
                x.rows(),
                x.cols()
            )));
        }
        Ok(Database { m, b, x })
    }

    /// Uniformly random contents.
    pub fn random<R: Rng + ?Sized>(field: FieldSpec, m: usize, b: usize, k: usize, rng: &mut R) -> Result<Self> {
        let data = (0..m * b * k).map(|_| rng.gen_range(0..field.p())).collect();
        Self::from_matrix(MatrixFp::new(field, m * b, k, data)?, m, b)
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn b(&self) -> usize {
        self.b
    }

    pub fn k(&self) -> usize {
        self.x.cols()
    }

    pub fn field(&self) -> FieldSpec {
        self.x.field()
    }

    pub fn matrix(&self) -> &MatrixFp {
        &self.x
    }

    /// File `i` (1-based) as a `b x k` matrix.
    pub fn file(&self, i: usize) -> Result<MatrixFp> {
        if i == 0 || i > self.m {
            return Err(Error::IndexOutOfRange { index: i, max: self.m });
        }
        let rows: Vec<usize> = ((i - 1) * self.b..i * self.b).collect();
        self.x.select_rows(&rows)
    }

    pub fn to_document(&self) -> DatabaseDocument {
        DatabaseDocument {
            p: self.field().p(),
            m: self.m,
            b: self.b,
            k: self.k(),
            files: (1..=self.m).map(|i| self.file(i).expect("in range").to_rows()).collect(),
        }
    }
}

/// Text form of a database:
///
/// ```json
/// { "p": 5, "m": 2, "b": 1, "k": 2, "files": [[[1, 2]], [[3, 4]]] }
/// ```
///
/// `files` holds `m` arrays of `b` rows of `k` integers in `[0, p)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatabaseDocument {
    pub p: u64,
    pub m: usize,
    pub b: usize,
    pub k: usize,
    pub files: Vec<Vec<Vec<u64>>>,
}

impl DatabaseDocument {
    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Malformed(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain data serializes")
    }

    /// Validates shape and range; out-of-range integers are rejected.
    pub fn into_database(self) -> Result<Database> {
        let field = FieldSpec::new(self.p)?;
        if self.files.len() != self.m {
            return Err(Error::Malformed(format!("declared m = {} but found {} files", self.m, self.files.len())));
        }
        let mut files = Vec::with_capacity(self.m);
        for (i, rows) in self.files.iter().enumerate() {
            if rows.len() != self.b || rows.iter().any(|r| r.len() != self.k) {
                return Err(Error::Malformed(format!("file {} is not {}x{}", i + 1, self.b, self.k)));
            }
            files.push(MatrixFp::from_rows_with_cols(field, self.k, rows)?);
        }
        Database::from_files(&files)
    }
}

/// One storage server: its index and its column of `Y`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ServerNode {
    index: usize,
    files: usize,
    rows_per_file: usize,
    column: Vec<u64>,
    field: FieldSpec,
}

impl ServerNode {
    /// 0-based server index.
    pub fn index(&self) -> usize {
        self.index
    }

    pub fn files(&self) -> usize {
        self.files
    }

    pub fn rows_per_file(&self) -> usize {
        self.rows_per_file
    }

    pub fn column(&self) -> &[u64] {
        &self.column
    }

    /// Answers `<query, column>`.
    pub fn respond(&self, query: &[u64]) -> Result<FieldElement> {
        if query.len() != self.column.len() {
            return Err(Error::DimensionMismatch(format!(
                "query of length {} against a column of length {}",
                query.len(),
                self.column.len()
            )));
        }
        let p = self.field.p();
        let mut acc: u128 = 0;
        for (&q, &y) in query.iter().zip(&self.column) {
            if q >= p {
                return Err(Error::OutOfRange { value: q, p });
            }
            acc += (q * y) as u128;
        }
        self.field.element((acc % p as u128) as u64)
    }

    /// Same as [`respond`](Self::respond) for a `1 x bm` matrix.
    pub fn respond_matrix(&self, query: &MatrixFp) -> Result<FieldElement> {
        self.field.check_same(&query.field())?;
        if query.rows() != 1 {
            return Err(Error::DimensionMismatch("query must be a single row".into()));
        }
        self.respond(query.data())
    }
}

/// Encodes the database with the storage code; node `j` holds column `j`.
pub fn encode(db: &Database, code: &LinearCode) -> Result<Vec<ServerNode>> {
    if code.k() != db.k() {
        return Err(Error::DimensionMismatch(format!(
            "files have {} columns but the storage code has dimension {}",
            db.k(),
            code.k()
        )));
    }
    let y = db.matrix().matmul(code.generator())?;
    Ok((0..code.n())
        .map(|j| ServerNode { index: j, files: db.m(), rows_per_file: db.b(), column: y.column(j), field: db.field() })
        .collect())
}

/// Rebuilds the database from the nodes not listed in `failed` (0-based).
pub fn erase_and_recover(nodes: &[ServerNode], code: &LinearCode, failed: &[usize]) -> Result<Database> {
    let n = code.n();
    if nodes.len() != n {
        return Err(Error::DimensionMismatch(format!("{} nodes for a length-{n} code", nodes.len())));
    }
    if let Some(&bad) = failed.iter().find(|&&j| j >= n) {
        return Err(Error::CoordinateOutOfRange { index: bad, len: n });
    }
    let survivors: Vec<usize> = (0..n).filter(|j| !failed.contains(j)).collect();
    let k = code.k();
    if survivors.len() < k {
        return Err(Error::TooManyFailures { failed: n - survivors.len(), k });
    }
    // greedy pivot scan over the surviving columns
    let sub = code.generator().select_columns(&survivors)?;
    let pivots = sub.rref().1;
    if pivots.len() < k {
        return Err(Error::NoInformationSet);
    }
    let info: Vec<usize> = pivots.iter().map(|&c| survivors[c]).collect();

    let first = &nodes[0];
    let (m, b, field) = (first.files, first.rows_per_file, first.field);
    let rows = m * b;
    // Y_K^T = G_K^T X^T
    let mut yk_t = MatrixFp::zeros(field, k, rows);
    for (r, &j) in info.iter().enumerate() {
        for (c, &v) in nodes[j].column.iter().enumerate() {
            yk_t.set(r, c, v);
        }
    }
    let gk_t = code.generator().select_columns(&info)?.transpose();
    let x_t = MatrixFp::solve(&gk_t, &yk_t).map_err(|_| Error::NoInformationSet)?;
    Database::from_matrix(x_t.transpose(), m, b)
}
