//! Command implementations behind the `coded-pir` binary.
//!
//! Every command writes to a caller-supplied sink so that output can be
//! compared byte for byte. Exit codes: 0 success, 1 invalid input, 2 a
//! golden or audit check failed.

use std::fs;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::Serialize;
use thiserror::Error;

use coded_pir::finite_field::is_prime;
use coded_pir::pir::{run_retrieval_seeded, RetrievalTranscript};
use coded_pir::privacy_audit::{
    algebraic_resistance, empirical_audit, exhaustive_audit, null_tv_bound, AuditReport, CollusionSet,
    EXHAUSTIVE_BUDGET,
};
use coded_pir::storage::{encode, DatabaseDocument};
use coded_pir::{Database, FieldSpec, GrsSpec, MatrixFp, Sampler, SchemeOptions, SchemeParams};

#[derive(Debug, Parser)]
#[command(name = "coded-pir", version, about = "PIR from coded storage with colluding servers")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Walk through the five-server GRS example and check it against known values.
    Demo(DemoArgs),
    /// Retrieve one file privately from a GRS-coded database.
    Retrieve(RunConfig),
    /// Emit achievable rates and reference capacities as CSV.
    RateTable(RateTableArgs),
    /// Check collusion resistance algebraically and statistically.
    Audit(AuditArgs),
}

#[derive(Debug, Clone, Args)]
pub struct RunConfig {
    /// Field size (prime, at least n). Defaults to the smallest prime >= n.
    #[arg(long)]
    pub p: Option<u64>,
    /// Number of servers.
    #[arg(long, default_value_t = 5)]
    pub n: usize,
    /// Storage code dimension. Taken from the database when --db is given.
    #[arg(long)]
    pub k: Option<usize>,
    /// Number of colluding servers to protect against.
    #[arg(long, default_value_t = 2)]
    pub t: usize,
    /// Number of files in a generated database.
    #[arg(long, default_value_t = 2)]
    pub m: usize,
    /// 1-based index of the file to retrieve.
    #[arg(long, default_value_t = 1)]
    pub file_index: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Database document (JSON); a random database is generated when absent.
    #[arg(long)]
    pub db: Option<PathBuf>,
    /// Write the recovered file here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Write the retrieval transcripts here.
    #[arg(long)]
    pub transcript: Option<PathBuf>,
    /// Accept J when only the realized row sets are information sets.
    #[arg(long)]
    pub relaxed_j: bool,
}

#[derive(Debug, Clone, Args)]
pub struct DemoArgs {
    #[arg(long, default_value_t = 3)]
    pub m: usize,
    #[arg(long, default_value_t = 1)]
    pub file_index: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args)]
pub struct RateTableArgs {
    #[arg(long, default_value_t = 12)]
    pub n: usize,
    #[arg(long, default_value_t = 8)]
    pub m: usize,
    /// Field used for the cross-check schemes. Defaults to the smallest prime >= n.
    #[arg(long)]
    pub p: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct AuditArgs {
    #[arg(long)]
    pub p: Option<u64>,
    #[arg(long, default_value_t = 5)]
    pub n: usize,
    #[arg(long, default_value_t = 2)]
    pub k: usize,
    /// Collusion size the scheme must withstand.
    #[arg(long, default_value_t = 2)]
    pub t: usize,
    /// Dimension of the retrieval code; defaults to t.
    #[arg(long)]
    pub retrieval_dim: Option<usize>,
    #[arg(long, default_value_t = 2)]
    pub m: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Retrievals sampled per file index.
    #[arg(long, default_value_t = 20_000)]
    pub trials: usize,
    /// Most collusion sets to test.
    #[arg(long, default_value_t = 10)]
    pub max_sets: usize,
    /// Reuse one codeword for all query randomness (insecure, for testing the audit).
    #[arg(long)]
    pub fixed_randomness: bool,
    #[arg(long)]
    pub relaxed_j: bool,
    /// Write the JSON report here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Failed(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Failed(_) => 2,
        }
    }
}

impl From<coded_pir::Error> for CliError {
    fn from(e: coded_pir::Error) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Validation(e.to_string())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

pub fn run(cli: &Cli, out: &mut dyn Write) -> CliResult<()> {
    match &cli.command {
        Command::Demo(args) => cmd_demo(args, out),
        Command::Retrieve(cfg) => cmd_retrieve(cfg, out),
        Command::RateTable(args) => cmd_rate_table(args, out),
        Command::Audit(args) => cmd_audit(args, out).map(|_| ()),
    }
}

fn field_for(p: Option<u64>, n: usize) -> CliResult<FieldSpec> {
    let field = match p {
        Some(p) => {
            if !is_prime(p) {
                return Err(CliError::Validation(format!("p = {p} is not prime")));
            }
            FieldSpec::new(p)?
        }
        None => FieldSpec::smallest_at_least(n as u64)?,
    };
    if field.p() < n as u64 {
        return Err(CliError::Validation(format!("p = {} is smaller than n = {n}", field.p())));
    }
    Ok(field)
}

/// Randomness for generated databases, on a ChaCha stream that query
/// sampling never uses.
fn database_rng(seed: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(u64::MAX);
    rng
}

fn check_positive(name: &str, v: usize) -> CliResult<()> {
    if v == 0 {
        return Err(CliError::Validation(format!("{name} must be at least 1")));
    }
    Ok(())
}

fn fmt_vec(v: &[u64]) -> String {
    let parts: Vec<String> = v.iter().map(u64::to_string).collect();
    format!("[{}]", parts.join(" "))
}

fn write_matrix(out: &mut dyn Write, name: &str, m: &MatrixFp) -> std::io::Result<()> {
    writeln!(out, "{name} =")?;
    for r in 0..m.rows() {
        writeln!(out, "  {}", fmt_vec(m.row(r)))?;
    }
    Ok(())
}

fn golden(ok: bool, what: &str, failures: &mut Vec<String>) {
    if !ok {
        failures.push(what.to_string());
    }
}

/// The five-server example over F_5: C = D = GRS_2(alpha, 1), alpha = [0..5).
pub fn cmd_demo(args: &DemoArgs, out: &mut dyn Write) -> CliResult<()> {
    check_positive("m", args.m)?;
    if args.file_index == 0 || args.file_index > args.m {
        return Err(CliError::Validation(format!("file index {} outside 1..={}", args.file_index, args.m)));
    }
    let field = FieldSpec::new(5)?;
    let storage = GrsSpec::with_defaults(field, 5, 2)?;
    let retrieval = GrsSpec::with_defaults(field, 5, 2)?;
    let params = SchemeParams::derive_grs(&storage, &retrieval, &SchemeOptions::default())?;
    let star = storage.star(&retrieval)?;
    let mut failures = Vec::new();

    writeln!(out, "storage code C = GRS_2(alpha, 1) over F_5, alpha = {}", fmt_vec(storage.alpha()))?;
    let g_c = params.storage_code().generator();
    write_matrix(out, "G_C (systematic)", g_c)?;
    golden(g_c.to_rows() == [[1, 0, 4, 3, 2], [0, 1, 2, 3, 4]], "G_C", &mut failures);

    let g_d = params.retrieval_code().generator();
    write_matrix(out, "G_D (canonical)", g_d)?;
    golden(g_d.to_rows() == [[1, 1, 1, 1, 1], [0, 1, 2, 3, 4]], "G_D", &mut failures);

    let u = star.dual_multipliers();
    writeln!(out, "C*D = GRS_{}(alpha, 1); dual multipliers u = {}", star.k(), fmt_vec(&u))?;
    golden(star.k() == 3 && u == [4; 5], "dual multipliers", &mut failures);

    let s = params.star_dual_generator();
    write_matrix(out, "S (generator of (C*D)^perp)", s)?;
    golden(s == g_c, "S = G_C", &mut failures);

    let d_perp = params.retrieval_code().dual()?;
    let t = algebraic_resistance(params.retrieval_code())?;
    writeln!(out, "D^perp is [{}, {}]; collusion resistance t = {t}", d_perp.n(), d_perp.k())?;
    golden(t == 2, "t", &mut failures);

    let j: Vec<usize> = params.servers().iter().map(|j| j + 1).collect();
    writeln!(
        out,
        "c = {}, b = {}, s = {}, J = {:?}, rate = {}",
        params.c(),
        params.b(),
        params.s(),
        j,
        params.achieved_rate()
    )?;
    golden((params.c(), params.b(), params.s()) == (2, 1, 1) && j == [1, 2], "scheme parameters", &mut failures);

    // the database is fixed; --seed only drives the query randomness
    let mut rng = database_rng(0);
    let db = Database::random(field, args.m, 1, 2, &mut rng)?;
    writeln!(out, "database (m = {}):", args.m)?;
    for l in 1..=args.m {
        writeln!(out, "  x^{l} = {}", fmt_vec(db.file(l)?.row(0)))?;
    }
    let nodes = encode(&db, params.storage_code())?;
    for node in &nodes {
        writeln!(out, "  server {} stores {}", node.index() + 1, fmt_vec(node.column()))?;
    }

    let i = args.file_index;
    let (file, transcript) = run_retrieval_seeded(&nodes, &params, i, args.seed)?;
    let record = &transcript.iterations[0];
    // d^l = z^l G_D with z^l(1) = d^l(1) and z^l(2) = d^l(2) - d^l(1)
    let z1: Vec<u64> = record.codewords.iter().map(|d| d[0]).collect();
    let z2: Vec<u64> = record.codewords.iter().map(|d| field.sub(d[1], d[0])).collect();
    writeln!(out, "retrieving file i = {i}")?;
    writeln!(out, "z_1 = {}, z_2 = {}", fmt_vec(&z1), fmt_vec(&z2))?;
    let mut queries_ok = true;
    for (jdx, q) in record.queries.iter().enumerate() {
        let bump = if jdx < 2 { " + e_i" } else { "" };
        writeln!(out, "  q_{} = z_1 + {jdx} z_2{bump} = {}", jdx + 1, fmt_vec(q))?;
        let expect: Vec<u64> = (0..args.m)
            .map(|l| {
                let base = field.add(z1[l], field.mul(jdx as u64, z2[l]));
                if jdx < 2 && l == i - 1 {
                    field.add(base, 1)
                } else {
                    base
                }
            })
            .collect();
        queries_ok &= *q == expect;
    }
    golden(queries_ok, "queries", &mut failures);

    writeln!(out, "responses r = {}", fmt_vec(&record.responses))?;
    let r = MatrixFp::column_vector(field, &record.responses)?;
    let sr = s.matmul(&r)?.column(0);
    writeln!(out, "S r = {}", fmt_vec(&sr))?;
    let stored = db.file(i)?;
    golden(sr == stored.row(0), "S r = x^i", &mut failures);

    writeln!(out, "recovered x^{i} = {}", fmt_vec(file.row(0)))?;
    golden(file == stored, "recovered file", &mut failures);
    let downloaded = transcript.iterations.len() * params.n();
    writeln!(out, "downloaded symbols: {downloaded}")?;
    golden(downloaded == 5, "download count", &mut failures);

    if failures.is_empty() {
        writeln!(out, "golden checks: ok")?;
        Ok(())
    } else {
        writeln!(out, "golden checks: FAILED ({})", failures.join(", "))?;
        Err(CliError::Failed(format!("golden mismatch: {}", failures.join(", "))))
    }
}

#[derive(Serialize)]
struct RecoveredFile<'a> {
    p: u64,
    file_index: usize,
    rows: &'a [Vec<u64>],
}

pub fn cmd_retrieve(cfg: &RunConfig, out: &mut dyn Write) -> CliResult<()> {
    check_positive("t", cfg.t)?;
    let doc = match &cfg.db {
        Some(path) => Some(DatabaseDocument::parse(&fs::read_to_string(path)?)?),
        None => None,
    };
    let (p, k) = match &doc {
        Some(d) => {
            if cfg.p.is_some_and(|p| p != d.p) {
                return Err(CliError::Validation(format!("--p conflicts with database field F_{}", d.p)));
            }
            if cfg.k.is_some_and(|k| k != d.k) {
                return Err(CliError::Validation(format!("--k conflicts with database row length {}", d.k)));
            }
            (Some(d.p), d.k)
        }
        None => (cfg.p, cfg.k.unwrap_or(2)),
    };
    check_positive("k", k)?;
    let field = field_for(p, cfg.n)?;
    if k >= cfg.n {
        return Err(CliError::Validation(format!("k = {k} must be below n = {}", cfg.n)));
    }
    if cfg.t >= cfg.n {
        return Err(CliError::Validation(format!("t = {} must be below n = {}", cfg.t, cfg.n)));
    }
    let opts = SchemeOptions { servers: None, relaxed_j: cfg.relaxed_j };
    let params = SchemeParams::grs_defaults(field, cfg.n, k, cfg.t, &opts)?;

    let (db, rows_per_file) = match doc {
        Some(d) => {
            let rows = d.b;
            (d.into_database()?, rows)
        }
        None => {
            check_positive("m", cfg.m)?;
            let mut rng = database_rng(cfg.seed);
            (Database::random(field, cfg.m, params.b(), k, &mut rng)?, params.b())
        }
    };
    let i = cfg.file_index;
    if i == 0 || i > db.m() {
        return Err(CliError::Validation(format!("file index {i} outside 1..={}", db.m())));
    }

    // Files whose row count is not b are cut into chunks of b rows (the
    // last one zero padded) and each chunk is retrieved separately.
    let chunks = rows_per_file.div_ceil(params.b());
    let mut recovered: Vec<Vec<u64>> = Vec::with_capacity(chunks * params.b());
    let mut transcripts = Vec::with_capacity(chunks);
    for chunk in 0..chunks {
        let files = (1..=db.m())
            .map(|l| {
                let file = db.file(l)?;
                let mut m = MatrixFp::zeros(field, params.b(), k);
                for r in 0..params.b() {
                    let src = chunk * params.b() + r;
                    if src < rows_per_file {
                        for c in 0..k {
                            m.set(r, c, file.get(src, c));
                        }
                    }
                }
                Ok(m)
            })
            .collect::<coded_pir::Result<Vec<_>>>()?;
        let part = Database::from_files(&files)?;
        let nodes = encode(&part, params.storage_code())?;
        let seed = cfg.seed.wrapping_add(chunk as u64);
        let (file, transcript) = run_retrieval_seeded(&nodes, &params, i, seed)?;
        recovered.extend(file.to_rows());
        transcripts.push(transcript);
    }
    recovered.truncate(rows_per_file);
    let verified = recovered == db.file(i)?.to_rows();

    writeln!(
        out,
        "scheme: n = {}, k = {k}, t = {}, p = {}, c = {}, b = {}, s = {}, J = {:?}",
        cfg.n,
        cfg.t,
        field.p(),
        params.c(),
        params.b(),
        params.s(),
        params.servers().iter().map(|j| j + 1).collect::<Vec<_>>()
    )?;
    writeln!(out, "rate = {}", params.achieved_rate())?;
    writeln!(out, "retrieved file {i} of {} in {} iteration(s) over {chunks} chunk(s)", db.m(), params.s() * chunks)?;
    let body = serde_json::to_string(&RecoveredFile { p: field.p(), file_index: i, rows: &recovered })
        .expect("plain data serializes");
    match &cfg.out {
        Some(path) => {
            fs::write(path, format!("{body}\n"))?;
            writeln!(out, "recovered file written to {}", path.display())?;
        }
        None => writeln!(out, "{body}")?,
    }
    if let Some(path) = &cfg.transcript {
        let text = serde_json::to_string_pretty(&transcripts).expect("plain data serializes");
        fs::write(path, format!("{text}\n"))?;
        writeln!(out, "transcript written to {}", path.display())?;
    }
    writeln!(out, "matches database: {}", if verified { "yes" } else { "no" })?;
    if verified {
        Ok(())
    } else {
        Err(CliError::Failed("recovered file differs from the database".into()))
    }
}

/// Replays every transcript in a file written by `retrieve`.
pub fn replay_transcripts(text: &str) -> CliResult<Vec<MatrixFp>> {
    let list: Vec<RetrievalTranscript> = serde_json::from_str(text).map_err(|e| CliError::Validation(e.to_string()))?;
    list.iter().map(|t| t.replay().map_err(CliError::from)).collect()
}

/// `(1 - x) / (1 - x^m)`, with its limit `1/m` at `x = 1`.
pub fn capacity(x_num: usize, x_den: usize, m: usize) -> f64 {
    if x_num == x_den {
        return 1.0 / m as f64;
    }
    let x = x_num as f64 / x_den as f64;
    (1.0 - x) / (1.0 - x.powi(m as i32))
}

pub fn cmd_rate_table(args: &RateTableArgs, out: &mut dyn Write) -> CliResult<()> {
    let n = args.n;
    if n < 2 {
        return Err(CliError::Validation("n must be at least 2".into()));
    }
    check_positive("m", args.m)?;
    let field = field_for(args.p, n)?;
    let mut csv = csv::Writer::from_writer(Vec::new());
    let write_err = |e: csv::Error| CliError::Validation(e.to_string());
    csv.write_record(["k", "t", "achievable_rate_num", "achievable_rate_den", "capacity_ref"]).map_err(write_err)?;
    for k in 1..n {
        for t in 1..=(n - k + 1) {
            let num = n - (k + t - 1);
            match SchemeParams::grs_defaults(field, n, k, t, &SchemeOptions::default()) {
                Ok(params) => {
                    let rate = params.achieved_rate();
                    if rate != num_rational::Ratio::new(num as u64, n as u64) {
                        return Err(CliError::Failed(format!("k = {k}, t = {t}: scheme rate {rate} != {num}/{n}")));
                    }
                }
                Err(coded_pir::Error::RateZero) if num == 0 => {}
                Err(e) => return Err(CliError::Failed(format!("k = {k}, t = {t}: {e}"))),
            }
            let cap = if k == 1 {
                format!("{:.6}", capacity(t, n, args.m))
            } else if t == 1 {
                format!("{:.6}", capacity(k, n, args.m))
            } else {
                String::new()
            };
            csv.write_record([k.to_string(), t.to_string(), num.to_string(), n.to_string(), cap]).map_err(write_err)?;
        }
    }
    let bytes = csv.into_inner().map_err(|e| CliError::Validation(e.to_string()))?;
    match &args.out {
        Some(path) => {
            fs::write(path, &bytes)?;
            writeln!(out, "rate table written to {}", path.display())?;
        }
        None => out.write_all(&bytes)?,
    }
    Ok(())
}

/// Failure probability allowed for each calibrated empirical comparison.
pub const AUDIT_DELTA: f64 = 1e-6;

pub fn cmd_audit(args: &AuditArgs, out: &mut dyn Write) -> CliResult<AuditReport> {
    check_positive("k", args.k)?;
    check_positive("t", args.t)?;
    check_positive("m", args.m)?;
    check_positive("trials", args.trials)?;
    let n = args.n;
    let field = field_for(args.p, n)?;
    let dim = args.retrieval_dim.unwrap_or(args.t);
    check_positive("retrieval dimension", dim)?;
    if args.k >= n || dim >= n || args.t > n {
        return Err(CliError::Validation(format!("need k, t and the retrieval dimension below n = {n}")));
    }
    let opts = SchemeOptions { servers: None, relaxed_j: args.relaxed_j };
    let params = SchemeParams::grs_defaults(field, n, args.k, dim, &opts)?;
    let algebraic_t = algebraic_resistance(params.retrieval_code())?;
    let mut report = AuditReport::new(algebraic_t, Some(args.t));
    writeln!(
        out,
        "scheme: n = {n}, k = {}, retrieval dimension = {dim}, p = {}, m = {}, c = {}, b = {}, s = {}",
        args.k,
        field.p(),
        args.m,
        params.c(),
        params.b(),
        params.s()
    )?;
    writeln!(out, "algebraic_t = {algebraic_t} (requested t = {})", args.t)?;

    let sampler = if args.fixed_randomness {
        report.notices.push("query randomness fixed to one codeword; the scheme is deliberately broken".into());
        Sampler::Fixed(params.retrieval_code().generator().row(0).to_vec())
    } else {
        Sampler::Uniform
    };

    if args.m == 1 {
        report.notices.push("m = 1: a single file cannot leak its index; nothing to compare".into());
    } else {
        let mut rng = ChaCha20Rng::seed_from_u64(args.seed);
        let sets = CollusionSet::choose(n, args.t, args.max_sets, &mut rng)?;
        let mut pairs = vec![(1, 2)];
        if args.m > 2 {
            pairs.push((1, args.m));
        }
        let k_d = params.retrieval_code().k() as u32;
        let space = (field.p() as u128).checked_pow(k_d * (args.m * params.b() * params.s()) as u32);
        let exhaustive = space.is_some_and(|w| w <= EXHAUSTIVE_BUDGET);
        for set in &sets {
            if exhaustive {
                report.exhaustive.push(exhaustive_audit(&params, args.m, set, &sampler)?);
            }
            for &pair in &pairs {
                let support = (field.p() as u128)
                    .checked_pow((set.len() * params.b() * args.m * params.s()) as u32)
                    .unwrap_or(u128::MAX);
                let threshold = null_tv_bound(support, args.trials, AUDIT_DELTA);
                let result = empirical_audit(&params, args.m, set, pair, args.trials, threshold, &sampler, args.seed)?;
                report.empirical.push(result);
            }
        }
        if report.empirical.iter().any(|r| r.threshold >= 1.0) {
            report
                .notices
                .push("some tuple spaces are too large for the trial count; those empirical checks cannot fail".into());
        }
    }

    for r in &report.exhaustive {
        writeln!(
            out,
            "exact     T = {:?}: {} ({} assignments)",
            r.servers.iter().map(|j| j + 1).collect::<Vec<_>>(),
            if r.identical { "identical" } else { "DIFFERENT" },
            r.enumerated
        )?;
    }
    for r in &report.empirical {
        writeln!(
            out,
            "empirical T = {:?}, i = {:?}: TV = {:.6} (threshold {:.6}, {} trials) {}",
            r.servers.iter().map(|j| j + 1).collect::<Vec<_>>(),
            r.indices,
            r.distance,
            r.threshold,
            r.trials,
            match (r.passed, r.threshold >= 1.0) {
                (false, _) => "FAIL",
                (true, true) => "inconclusive",
                (true, false) => "pass",
            }
        )?;
    }
    for notice in &report.notices {
        writeln!(out, "notice: {notice}")?;
    }
    if let Some(path) = &args.out {
        fs::write(path, format!("{}\n", report.to_json()))?;
        writeln!(out, "report written to {}", path.display())?;
    }
    let passed = report.passed();
    writeln!(out, "verdict: {}", if passed { "pass" } else { "FAIL" })?;
    if passed {
        Ok(report)
    } else {
        Err(CliError::Failed("privacy audit failed".into()))
    }
}
