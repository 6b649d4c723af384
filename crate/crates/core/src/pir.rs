//! The coded PIR scheme.
//!
//! A storage code `C` and a retrieval code `D` determine `c = d(C*D) - 1`,
//! the number of encoded symbols recovered per iteration. Files are cut into
//! `b = lcm(c,k)/k` rows and fetched in `s = lcm(c,k)/c` iterations, taking
//! `g = k/s = c/b` symbols of every row per iteration from a fixed server set
//! `J` of size `max(c, k)`.
//!
//! In iteration `u` the client draws `mb` uniform codewords `d^{l,a}` of `D`
//! and sends server `j` the vector `d_j` (coordinate `j` of every codeword),
//! adding the unit vector `e_{b(i-1)+a}` when `j` is in `J_u^a`. The response
//! vector is then a codeword of `C*D` plus the targeted symbols, which a
//! generator `S` of `(C*D)^perp` isolates.
//!
//! File indices `i` and iterations `u` are 1-based; server indices are
//! 0-based positions into codewords.

use num_integer::Integer;
use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::codes::{column_independence, LinearCode, SUBSET_BUDGET};
use crate::error::{Error, Result};
use crate::finite_field::FieldSpec;
use crate::grs::{GeneratorForm, GrsSpec};
use crate::linalg::MatrixFp;
use crate::storage::ServerNode;

/// Largest `C(n, |J|)` searched when looking for a valid `J` for a non-MDS
/// storage code.
pub const J_SEARCH_BUDGET: u128 = 100_000;

/// Caller choices for [`SchemeParams::derive`].
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SchemeOptions {
    /// Explicit server set `J` (0-based, in the order used for shifting).
    pub servers: Option<Vec<usize>>,
    /// Check only the realized row unions `K_a` instead of every `k`-subset
    /// of `J`.
    pub relaxed_j: bool,
}

/// Which correctness condition the scheme relies on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Condition {
    /// `c <= k`; `J` is an information set of `C`.
    StarWithinDimension,
    /// `c > k`; every `k`-subset of `J` (or every realized `K_a` in relaxed
    /// mode) is an information set.
    InformationSubsets,
}

/// Validated scheme parameters.
#[derive(Debug, Clone)]
pub struct SchemeParams {
    storage: LinearCode,
    retrieval: LinearCode,
    star_dual: MatrixFp,
    c: usize,
    b: usize,
    s: usize,
    g: usize,
    servers: Vec<usize>,
    index_sets: Vec<Vec<Vec<usize>>>,
    condition: Condition,
    relaxed_j: bool,
}

impl SchemeParams {
    /// Derives the scheme for arbitrary codes. `c` is found as the largest
    /// size such that every `c` columns of `S` are independent.
    pub fn derive(storage: &LinearCode, retrieval: &LinearCode, opts: &SchemeOptions) -> Result<Self> {
        check_compatible(storage, retrieval)?;
        let star = storage.star_product(retrieval)?;
        if star.k() == star.n() {
            return Err(Error::RateZero);
        }
        let star_dual = star.dual()?.generator().clone();
        let c = column_independence(&star_dual, SUBSET_BUDGET)?;
        Self::assemble(storage.clone(), retrieval.clone(), star_dual, c, opts)
    }

    /// GRS instantiation: `C = GRS_k(alpha, v)` with its systematic generator,
    /// `D = GRS_t(alpha, w)` with its canonical generator, and closed forms
    /// for `C*D` and its dual.
    pub fn derive_grs(storage: &GrsSpec, retrieval: &GrsSpec, opts: &SchemeOptions) -> Result<Self> {
        let star = storage.star(retrieval)?;
        if star.k() == star.n() {
            return Err(Error::RateZero);
        }
        let star_dual = star.dual()?.systematic_generator();
        let c = star.n() - star.k();
        Self::assemble(
            storage.as_code(GeneratorForm::Systematic),
            retrieval.as_code(GeneratorForm::Canonical),
            star_dual,
            c,
            opts,
        )
    }

    /// Default GRS scheme on `n` servers: `alpha = [0..n)`, unit multipliers,
    /// storage dimension `k` and collusion resistance `t`.
    pub fn grs_defaults(field: FieldSpec, n: usize, k: usize, t: usize, opts: &SchemeOptions) -> Result<Self> {
        let storage = GrsSpec::with_defaults(field, n, k)?;
        let retrieval = GrsSpec::with_defaults(field, n, t)?;
        Self::derive_grs(&storage, &retrieval, opts)
    }

    fn assemble(
        storage: LinearCode,
        retrieval: LinearCode,
        star_dual: MatrixFp,
        c: usize,
        opts: &SchemeOptions,
    ) -> Result<Self> {
        check_compatible(&storage, &retrieval)?;
        if c == 0 {
            return Err(Error::RateZero);
        }
        let k = storage.k();
        let n = storage.n();
        let l = c.lcm(&k);
        let (b, s) = (l / k, l / c);
        let g = k / s;
        let size = c.max(k);
        let condition = if c <= k { Condition::StarWithinDimension } else { Condition::InformationSubsets };

        let servers = match &opts.servers {
            Some(j) => {
                validate_server_set(j, size, n)?;
                if !j_is_valid(&storage, j, condition, opts.relaxed_j, b, s, g)? {
                    return Err(Error::NoValidJ(format!("{j:?} violates the information-set condition")));
                }
                j.clone()
            }
            None => default_servers(&storage, c, condition, opts.relaxed_j, b, s, g)?,
        };
        let index_sets = build_index_sets(&servers, b, s, g);
        Ok(SchemeParams {
            storage,
            retrieval,
            star_dual,
            c,
            b,
            s,
            g,
            servers,
            index_sets,
            condition,
            relaxed_j: opts.relaxed_j,
        })
    }

    pub fn storage_code(&self) -> &LinearCode {
        &self.storage
    }

    pub fn retrieval_code(&self) -> &LinearCode {
        &self.retrieval
    }

    /// Generator `S` of `(C*D)^perp`.
    pub fn star_dual_generator(&self) -> &MatrixFp {
        &self.star_dual
    }

    pub fn n(&self) -> usize {
        self.storage.n()
    }

    pub fn k(&self) -> usize {
        self.storage.k()
    }

    pub fn field(&self) -> FieldSpec {
        self.storage.field()
    }

    /// Symbols retrieved per iteration, `d(C*D) - 1`.
    pub fn c(&self) -> usize {
        self.c
    }

    /// Rows per file.
    pub fn b(&self) -> usize {
        self.b
    }

    /// Iterations per retrieval.
    pub fn s(&self) -> usize {
        self.s
    }

    /// Symbols of each row fetched per iteration.
    pub fn g(&self) -> usize {
        self.g
    }

    /// The server set `J`.
    pub fn servers(&self) -> &[usize] {
        &self.servers
    }

    pub fn condition(&self) -> Condition {
        self.condition
    }

    pub fn relaxed_j(&self) -> bool {
        self.relaxed_j
    }

    /// `J_u^a` for 1-based `u` and `a`, in shift order. Panics outside
    /// `1..=s` and `1..=b`.
    pub fn index_set(&self, u: usize, a: usize) -> &[usize] {
        &self.index_sets[u - 1][a - 1]
    }

    /// The full table, indexed `[u-1][a-1]`.
    pub fn index_sets(&self) -> &[Vec<Vec<usize>>] {
        &self.index_sets
    }

    /// `K_a`: every server that contributes a symbol of row `a`, ascending.
    pub fn row_servers(&self, a: usize) -> Vec<usize> {
        let mut all: Vec<usize> = (1..=self.s).flat_map(|u| self.index_set(u, a).to_vec()).collect();
        all.sort_unstable();
        all
    }

    /// Exact rate `bk / (ns)`, equal to `c / n`.
    pub fn achieved_rate(&self) -> Ratio<u64> {
        Ratio::new((self.b * self.k()) as u64, (self.n() * self.s) as u64)
    }

    /// Field symbols uploaded per iteration for `m` files.
    pub fn upload_per_iteration(&self, m: usize) -> usize {
        self.b * self.n() * m
    }

    fn query_len(&self, m: usize) -> usize {
        self.b * m
    }
}

fn check_compatible(storage: &LinearCode, retrieval: &LinearCode) -> Result<()> {
    storage.field().check_same(&retrieval.field())?;
    if storage.n() != retrieval.n() {
        return Err(Error::DimensionMismatch(format!(
            "storage code has length {} but retrieval code has length {}",
            storage.n(),
            retrieval.n()
        )));
    }
    Ok(())
}

fn validate_server_set(j: &[usize], size: usize, n: usize) -> Result<()> {
    if j.len() != size {
        return Err(Error::NoValidJ(format!("|J| must be {size}, got {}", j.len())));
    }
    if let Some(&bad) = j.iter().find(|&&x| x >= n) {
        return Err(Error::NoValidJ(format!("server {bad} does not exist (n = {n})")));
    }
    let mut sorted = j.to_vec();
    sorted.sort_unstable();
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::NoValidJ("repeated server".into()));
    }
    Ok(())
}

fn j_is_valid(
    storage: &LinearCode,
    j: &[usize],
    condition: Condition,
    relaxed: bool,
    b: usize,
    s: usize,
    g: usize,
) -> Result<bool> {
    use itertools::Itertools;
    match condition {
        Condition::StarWithinDimension => storage.is_information_set(j),
        Condition::InformationSubsets if relaxed => {
            let sets = build_index_sets(j, b, s, g);
            for a in 0..b {
                let mut k_a: Vec<usize> = sets.iter().flat_map(|row| row[a].iter().copied()).collect();
                k_a.sort_unstable();
                if !storage.is_information_set(&k_a)? {
                    return Ok(false);
                }
            }
            Ok(true)
        }
        Condition::InformationSubsets => {
            for subset in j.iter().copied().combinations(storage.k()) {
                if !storage.is_information_set(&subset)? {
                    return Ok(false);
                }
            }
            Ok(true)
        }
    }
}

fn default_servers(
    storage: &LinearCode,
    c: usize,
    condition: Condition,
    relaxed: bool,
    b: usize,
    s: usize,
    g: usize,
) -> Result<Vec<usize>> {
    use itertools::Itertools;
    match condition {
        Condition::StarWithinDimension => Ok(storage.first_information_set()),
        Condition::InformationSubsets => {
            let n = storage.n();
            if c > n {
                return Err(Error::NoValidJ(format!("|J| = {c} exceeds n = {n}")));
            }
            if matches!(storage.is_mds(), Ok(true)) {
                return Ok((0..c).collect());
            }
            let work = num_integer::binomial(n as u128, c as u128);
            if work > J_SEARCH_BUDGET {
                return Err(Error::NoValidJ(format!("C({n},{c}) = {work} candidate sets exceed the search budget")));
            }
            for candidate in (0..n).combinations(c) {
                if j_is_valid(storage, &candidate, condition, relaxed, b, s, g)? {
                    return Ok(candidate);
                }
            }
            Err(Error::NoValidJ("no subset of servers satisfies the information-set condition".into()))
        }
    }
}

/// `J_1^a` takes positions `(a-1)g .. ag` of `J`; each later iteration shifts
/// every set right by `g` positions, wrapping around within `J`.
fn build_index_sets(servers: &[usize], b: usize, s: usize, g: usize) -> Vec<Vec<Vec<usize>>> {
    let size = servers.len();
    (0..s).map(|u| (0..b).map(|a| (0..g).map(|x| servers[(a * g + x + u * g) % size]).collect()).collect()).collect()
}

/// How query randomness is produced.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Sampler {
    /// Fresh uniform codewords of `D`, as the scheme requires.
    Uniform,
    /// Reuse one fixed codeword for every draw. Insecure; exists so the
    /// privacy audit can demonstrate that it detects leakage.
    Fixed(Vec<u64>),
}

/// All queries of one iteration.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuerySet {
    /// 1-based iteration.
    pub iteration: usize,
    /// `queries[j]` is the length-`bm` vector sent to server `j`.
    pub queries: Vec<Vec<u64>>,
    /// The `mb` codewords of `D`, ordered by file then row.
    pub codewords: Vec<Vec<u64>>,
}

fn check_index(i: usize, m: usize) -> Result<()> {
    if i == 0 || i > m {
        return Err(Error::IndexOutOfRange { index: i, max: m });
    }
    Ok(())
}

/// Samples a uniform codeword of `D`.
pub fn sample_codeword<R: Rng + ?Sized>(retrieval: &LinearCode, rng: &mut R) -> Vec<u64> {
    let f = retrieval.field();
    let message: Vec<u64> = (0..retrieval.k()).map(|_| rng.gen_range(0..f.p())).collect();
    codeword_from_message(retrieval, &message)
}

pub(crate) fn codeword_from_message(retrieval: &LinearCode, message: &[u64]) -> Vec<u64> {
    let f = retrieval.field();
    let gen = retrieval.generator();
    (0..gen.cols())
        .map(|j| message.iter().enumerate().fold(0, |acc, (r, &z)| f.add(acc, f.mul(z, gen.get(r, j)))))
        .collect()
}

/// Builds the queries of iteration `u` for file `i` with fresh randomness.
pub fn make_queries<R: Rng + ?Sized>(
    params: &SchemeParams,
    m: usize,
    i: usize,
    u: usize,
    rng: &mut R,
) -> Result<QuerySet> {
    make_queries_with(params, m, i, u, &Sampler::Uniform, rng)
}

pub fn make_queries_with<R: Rng + ?Sized>(
    params: &SchemeParams,
    m: usize,
    i: usize,
    u: usize,
    sampler: &Sampler,
    rng: &mut R,
) -> Result<QuerySet> {
    check_index(i, m)?;
    check_index(u, params.s)?;
    let codewords = (0..m * params.b)
        .map(|_| match sampler {
            Sampler::Uniform => sample_codeword(&params.retrieval, rng),
            Sampler::Fixed(cw) => cw.clone(),
        })
        .collect();
    queries_from_codewords(params, m, i, u, codewords)
}

/// Builds the queries of iteration `u` from explicit codewords `d^{l,a}`,
/// ordered `(l-1)b + (a-1)`.
pub fn queries_from_codewords(
    params: &SchemeParams,
    m: usize,
    i: usize,
    u: usize,
    codewords: Vec<Vec<u64>>,
) -> Result<QuerySet> {
    check_index(i, m)?;
    check_index(u, params.s)?;
    let n = params.n();
    let len = params.query_len(m);
    if codewords.len() != len || codewords.iter().any(|cw| cw.len() != n) {
        return Err(Error::DimensionMismatch(format!("expected {len} codewords of length {n}")));
    }
    let f = params.field();
    let mut queries: Vec<Vec<u64>> = (0..n).map(|j| codewords.iter().map(|cw| cw[j]).collect()).collect();
    for a in 1..=params.b {
        let target = params.b * (i - 1) + (a - 1);
        for &j in params.index_set(u, a) {
            queries[j][target] = f.add(queries[j][target], 1);
        }
    }
    Ok(QuerySet { iteration: u, queries, codewords })
}

/// One iteration as recorded by the client.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub queries: Vec<Vec<u64>>,
    pub codewords: Vec<Vec<u64>>,
    pub responses: Vec<u64>,
}

/// Everything sent and received during one retrieval, plus the scheme
/// description needed to replay reconstruction.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RetrievalTranscript {
    pub p: u64,
    pub n: usize,
    pub m: usize,
    pub file_index: usize,
    pub seed: Option<u64>,
    pub storage_generator: Vec<Vec<u64>>,
    pub retrieval_generator: Vec<Vec<u64>>,
    pub servers: Vec<usize>,
    pub relaxed_j: bool,
    pub c: usize,
    pub b: usize,
    pub s: usize,
    pub g: usize,
    pub iterations: Vec<IterationRecord>,
}

impl RetrievalTranscript {
    pub fn new(params: &SchemeParams, m: usize, file_index: usize, seed: Option<u64>) -> Self {
        RetrievalTranscript {
            p: params.field().p(),
            n: params.n(),
            m,
            file_index,
            seed,
            storage_generator: params.storage.generator().to_rows(),
            retrieval_generator: params.retrieval.generator().to_rows(),
            servers: params.servers.clone(),
            relaxed_j: params.relaxed_j,
            c: params.c,
            b: params.b,
            s: params.s,
            g: params.g,
            iterations: Vec::new(),
        }
    }

    pub fn push(&mut self, queries: QuerySet, responses: Vec<u64>) {
        self.iterations.push(IterationRecord {
            iteration: queries.iteration,
            queries: queries.queries,
            codewords: queries.codewords,
            responses,
        });
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain data serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Malformed(e.to_string()))
    }

    /// Rebuilds the scheme from the recorded generators and `J`.
    pub fn scheme(&self) -> Result<SchemeParams> {
        let field = FieldSpec::new(self.p)?;
        let storage = LinearCode::from_generator(MatrixFp::from_rows(field, &self.storage_generator)?)?;
        let retrieval = LinearCode::from_generator(MatrixFp::from_rows(field, &self.retrieval_generator)?)?;
        let opts = SchemeOptions { servers: Some(self.servers.clone()), relaxed_j: self.relaxed_j };
        let params = SchemeParams::derive(&storage, &retrieval, &opts)?;
        if (params.c, params.b, params.s, params.g) != (self.c, self.b, self.s, self.g) {
            return Err(Error::Malformed("recorded scheme parameters do not match the generators".into()));
        }
        Ok(params)
    }

    /// Re-runs reconstruction from the recorded responses.
    pub fn replay(&self) -> Result<MatrixFp> {
        reconstruct(&self.scheme()?, self)
    }
}

/// Recovers the `b x k` file from a complete transcript.
pub fn reconstruct(params: &SchemeParams, transcript: &RetrievalTranscript) -> Result<MatrixFp> {
    let (n, b, k, s) = (params.n(), params.b, params.k(), params.s);
    let f = params.field();
    if transcript.iterations.len() != s {
        return Err(Error::IncompleteTranscript(format!(
            "{} iterations recorded, {s} required",
            transcript.iterations.len()
        )));
    }
    // symbols[a][j] = y^i_j(a)
    let mut symbols: Vec<Vec<Option<u64>>> = vec![vec![None; n]; b];
    for (pos, record) in transcript.iterations.iter().enumerate() {
        let u = pos + 1;
        if record.iteration != u {
            return Err(Error::IncompleteTranscript(format!("iteration {u} recorded as {}", record.iteration)));
        }
        if record.responses.len() != n {
            return Err(Error::IncompleteTranscript(format!(
                "iteration {u} has {} responses, {n} required",
                record.responses.len()
            )));
        }
        let r = MatrixFp::column_vector(f, &record.responses)?;
        let sr = params.star_dual.matmul(&r)?;
        let mut targets: Vec<(usize, usize)> =
            (1..=b).flat_map(|a| params.index_set(u, a).iter().map(move |&j| (j, a))).collect();
        targets.sort_unstable();
        let cols: Vec<usize> = targets.iter().map(|&(j, _)| j).collect();
        let a_mat = params.star_dual.select_columns(&cols)?;
        let sol = MatrixFp::solve(&a_mat, &sr).map_err(|e| match e {
            Error::Inconsistent => Error::InconsistentResponses { iteration: u },
            _ => Error::SingularSystem { iteration: u },
        })?;
        for (t, &(j, a)) in targets.iter().enumerate() {
            symbols[a - 1][j] = Some(sol.get(t, 0));
        }
    }

    let mut file = MatrixFp::zeros(f, b, k);
    for a in 1..=b {
        let k_a = params.row_servers(a);
        let values: Vec<u64> =
            k_a.iter().map(|&j| symbols[a - 1][j].expect("every server of K_a is targeted once")).collect();
        let g_k = params.storage.generator().select_columns(&k_a)?;
        let y = MatrixFp::column_vector(f, &values)?;
        let x = MatrixFp::solve(&g_k.transpose(), &y).map_err(|_| Error::NotInformationSet { row: a })?;
        for col in 0..k {
            file.set(a - 1, col, x.get(col, 0));
        }
    }
    Ok(file)
}

fn check_nodes(nodes: &[ServerNode], params: &SchemeParams) -> Result<usize> {
    if nodes.len() != params.n() {
        return Err(Error::DimensionMismatch(format!("{} nodes for {} servers", nodes.len(), params.n())));
    }
    let m = nodes[0].files();
    if nodes.iter().any(|node| node.rows_per_file() != params.b || node.files() != m) {
        return Err(Error::DimensionMismatch(format!("nodes must store files of {} rows each", params.b)));
    }
    Ok(m)
}

/// Runs all `s` iterations against the nodes and reconstructs file `i`.
pub fn run_retrieval<R: Rng + ?Sized>(
    nodes: &[ServerNode],
    params: &SchemeParams,
    i: usize,
    rng: &mut R,
) -> Result<(MatrixFp, RetrievalTranscript)> {
    run_retrieval_with(nodes, params, i, &Sampler::Uniform, None, rng)
}

/// [`run_retrieval`] driven by a ChaCha20 stream seeded with `seed`; the
/// seed is recorded in the transcript.
pub fn run_retrieval_seeded(
    nodes: &[ServerNode],
    params: &SchemeParams,
    i: usize,
    seed: u64,
) -> Result<(MatrixFp, RetrievalTranscript)> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    run_retrieval_with(nodes, params, i, &Sampler::Uniform, Some(seed), &mut rng)
}

pub fn run_retrieval_with<R: Rng + ?Sized>(
    nodes: &[ServerNode],
    params: &SchemeParams,
    i: usize,
    sampler: &Sampler,
    seed: Option<u64>,
    rng: &mut R,
) -> Result<(MatrixFp, RetrievalTranscript)> {
    let m = check_nodes(nodes, params)?;
    check_index(i, m)?;
    let mut transcript = RetrievalTranscript::new(params, m, i, seed);
    for u in 1..=params.s {
        let qs = make_queries_with(params, m, i, u, sampler, rng)?;
        let responses = nodes
            .iter()
            .zip(&qs.queries)
            .map(|(node, q)| node.respond(q).map(|r| r.value()))
            .collect::<Result<Vec<u64>>>()?;
        transcript.push(qs, responses);
    }
    let file = reconstruct(params, &transcript)?;
    Ok((file, transcript))
}
