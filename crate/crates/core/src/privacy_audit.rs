//! Checks of t-collusion privacy.
//!
//! A colluding set `T` pools every query its members receive over all `s`
//! iterations. Privacy holds when the distribution of that joint tuple does
//! not depend on the requested file index. [`algebraic_resistance`] gives
//! the provable bound, [`exhaustive_audit`] compares exact distributions at
//! micro scale and [`empirical_audit`] compares sampled ones.

use std::collections::BTreeMap;

use itertools::Itertools;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::codes::{column_independence, LinearCode, SUBSET_BUDGET};
use crate::error::{Error, Result};
use crate::pir::{codeword_from_message, make_queries_with, queries_from_codewords, Sampler, SchemeParams};

/// Largest randomness space [`exhaustive_audit`] will enumerate.
pub const EXHAUSTIVE_BUDGET: u128 = 1 << 20;

/// Default TV threshold for [`empirical_audit`].
pub const DEFAULT_TV_THRESHOLD: f64 = 0.05;

/// A nonempty set of distinct servers, kept sorted.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CollusionSet(Vec<usize>);

impl CollusionSet {
    pub fn new(mut servers: Vec<usize>, n: usize) -> Result<Self> {
        if servers.is_empty() {
            return Err(Error::InvalidCollusionSet("empty set".into()));
        }
        servers.sort_unstable();
        if servers.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidCollusionSet("repeated server".into()));
        }
        if let Some(&bad) = servers.iter().find(|&&j| j >= n) {
            return Err(Error::InvalidCollusionSet(format!("server {bad} does not exist (n = {n})")));
        }
        Ok(CollusionSet(servers))
    }

    pub fn servers(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Every set of size `t` if there are at most `limit`, otherwise `limit`
    /// distinct sets drawn uniformly.
    pub fn choose<R: Rng + ?Sized>(n: usize, t: usize, limit: usize, rng: &mut R) -> Result<Vec<Self>> {
        if t == 0 || t > n {
            return Err(Error::InvalidCollusionSet(format!("size {t} outside 1..={n}")));
        }
        let total = num_integer::binomial(n as u128, t as u128);
        if total <= limit as u128 {
            return (0..n).combinations(t).map(|s| Self::new(s, n)).collect();
        }
        let mut seen = std::collections::BTreeSet::new();
        while seen.len() < limit {
            seen.insert(Self::new(sample(rng, n, t).into_vec(), n)?);
        }
        Ok(seen.into_iter().collect())
    }
}

/// Largest `t` such that every `t` columns of `D`'s generator are
/// independent, i.e. `d(D^perp) - 1`.
pub fn algebraic_resistance(retrieval: &LinearCode) -> Result<usize> {
    if retrieval.k() == retrieval.n() {
        return Ok(retrieval.n());
    }
    match column_independence(retrieval.generator(), SUBSET_BUDGET) {
        Err(Error::BudgetExceeded { .. }) => Ok(retrieval.dual()?.min_distance()? - 1),
        other => other,
    }
}

/// Outcome of one sampled comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalResult {
    pub servers: Vec<usize>,
    pub indices: (usize, usize),
    pub trials: usize,
    /// Total variation distance between the two empirical distributions.
    pub distance: f64,
    pub threshold: f64,
    /// Size of the tuple space `p^(|T| b m s)`, saturating.
    pub support: u128,
    /// Distinct tuples observed across both samples.
    pub observed: usize,
    pub passed: bool,
}

/// Outcome of one exact comparison.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExhaustiveResult {
    pub servers: Vec<usize>,
    /// Randomness assignments enumerated per index.
    pub enumerated: u128,
    /// All `m` distributions agree.
    pub identical: bool,
    /// Every distribution is uniform on the full tuple space.
    pub uniform: bool,
}

/// Audit summary suitable for export.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub algebraic_t: usize,
    pub requested_t: Option<usize>,
    pub empirical: Vec<EmpiricalResult>,
    pub exhaustive: Vec<ExhaustiveResult>,
    pub notices: Vec<String>,
}

impl AuditReport {
    pub fn new(algebraic_t: usize, requested_t: Option<usize>) -> Self {
        AuditReport { algebraic_t, requested_t, empirical: Vec::new(), exhaustive: Vec::new(), notices: Vec::new() }
    }

    pub fn passed(&self) -> bool {
        self.requested_t.is_none_or(|t| self.algebraic_t >= t)
            && self.empirical.iter().all(|r| r.passed)
            && self.exhaustive.iter().all(|r| r.identical)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain data serializes")
    }
}

fn tuple_space(params: &SchemeParams, m: usize, t: usize) -> u128 {
    let exp = (t * params.b() * m * params.s()) as u32;
    (params.field().p() as u128).checked_pow(exp).unwrap_or(u128::MAX)
}

/// Upper bound on the TV distance between two samples of `trials` draws
/// from one distribution on `support` points, exceeded with probability at
/// most `delta`: `sqrt(2K/N)/2` bounds the mean and McDiarmid adds
/// `sqrt(ln(1/delta)/N)`.
pub fn null_tv_bound(support: u128, trials: usize, delta: f64) -> f64 {
    let n = trials as f64;
    0.5 * (2.0 * support as f64 / n).sqrt() + ((1.0 / delta).ln() / n).sqrt()
}

/// The joint query tuple seen by `T` during one retrieval of file `i`.
fn observe<R: Rng + ?Sized>(
    params: &SchemeParams,
    m: usize,
    i: usize,
    servers: &[usize],
    sampler: &Sampler,
    rng: &mut R,
) -> Result<Vec<u64>> {
    let mut tuple = Vec::with_capacity(servers.len() * params.b() * m * params.s());
    for u in 1..=params.s() {
        let qs = make_queries_with(params, m, i, u, sampler, rng)?;
        for &j in servers {
            tuple.extend_from_slice(&qs.queries[j]);
        }
    }
    Ok(tuple)
}

fn sample_counts(
    params: &SchemeParams,
    m: usize,
    i: usize,
    servers: &[usize],
    trials: usize,
    sampler: &Sampler,
    seed: u64,
) -> Result<BTreeMap<Vec<u64>, usize>> {
    (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            rng.set_stream(((i as u64) << 40) | trial as u64);
            observe(params, m, i, servers, sampler, &mut rng)
        })
        .try_fold(BTreeMap::new, |mut acc, tuple| {
            *acc.entry(tuple?).or_insert(0) += 1;
            Ok(acc)
        })
        .try_reduce(BTreeMap::new, |mut a, b| {
            for (key, count) in b {
                *a.entry(key).or_insert(0) += count;
            }
            Ok(a)
        })
}

fn total_variation(a: &BTreeMap<Vec<u64>, usize>, b: &BTreeMap<Vec<u64>, usize>, trials: usize) -> (f64, usize) {
    let keys: std::collections::BTreeSet<&Vec<u64>> = a.keys().chain(b.keys()).collect();
    let diff: usize = keys
        .iter()
        .map(|k| {
            let x = a.get(*k).copied().unwrap_or(0);
            let y = b.get(*k).copied().unwrap_or(0);
            x.abs_diff(y)
        })
        .sum();
    (diff as f64 / (2.0 * trials as f64), keys.len())
}

/// Samples `trials` retrievals of each of `i1` and `i2` and compares the
/// distributions of `T`'s joint query tuple. Trial `r` for index `i` uses
/// ChaCha20 stream `(i, r)` under `seed`, so the result does not depend on
/// thread scheduling.
#[allow(clippy::too_many_arguments)]
pub fn empirical_audit(
    params: &SchemeParams,
    m: usize,
    collusion: &CollusionSet,
    indices: (usize, usize),
    trials: usize,
    threshold: f64,
    sampler: &Sampler,
    seed: u64,
) -> Result<EmpiricalResult> {
    let (i1, i2) = indices;
    for i in [i1, i2] {
        if i == 0 || i > m {
            return Err(Error::IndexOutOfRange { index: i, max: m });
        }
    }
    if i1 == i2 {
        return Err(Error::Malformed("the two file indices must differ".into()));
    }
    if trials == 0 {
        return Err(Error::Malformed("at least one trial is required".into()));
    }
    if let Some(&bad) = collusion.servers().iter().find(|&&j| j >= params.n()) {
        return Err(Error::InvalidCollusionSet(format!("server {bad} does not exist (n = {})", params.n())));
    }
    let first = sample_counts(params, m, i1, collusion.servers(), trials, sampler, seed)?;
    let second = sample_counts(params, m, i2, collusion.servers(), trials, sampler, seed)?;
    let (distance, observed) = total_variation(&first, &second, trials);
    Ok(EmpiricalResult {
        servers: collusion.servers().to_vec(),
        indices,
        trials,
        distance,
        threshold,
        support: tuple_space(params, m, collusion.len()),
        observed,
        passed: distance <= threshold,
    })
}

/// Enumerates every choice of query randomness and compares the exact
/// distributions of `T`'s tuple across all `m` file indices.
pub fn exhaustive_audit(
    params: &SchemeParams,
    m: usize,
    collusion: &CollusionSet,
    sampler: &Sampler,
) -> Result<ExhaustiveResult> {
    if m == 0 {
        return Err(Error::IndexOutOfRange { index: 1, max: 0 });
    }
    if let Some(&bad) = collusion.servers().iter().find(|&&j| j >= params.n()) {
        return Err(Error::InvalidCollusionSet(format!("server {bad} does not exist (n = {})", params.n())));
    }
    let p = params.field().p();
    let retrieval = params.retrieval_code();
    let draws = m * params.b();
    let digits = retrieval.k() * draws * params.s();
    let work = (p as u128).checked_pow(digits as u32).unwrap_or(u128::MAX);
    let enumerated = match sampler {
        Sampler::Uniform => {
            if work > EXHAUSTIVE_BUDGET {
                return Err(Error::BudgetExceeded { work, budget: EXHAUSTIVE_BUDGET });
            }
            work
        }
        Sampler::Fixed(_) => 1,
    };

    let servers = collusion.servers();
    let distribution = |i: usize| -> Result<BTreeMap<Vec<u64>, u128>> {
        let mut counts = BTreeMap::new();
        let mut digits_now = vec![0u64; digits];
        for _ in 0..enumerated {
            let mut tuple = Vec::new();
            for u in 1..=params.s() {
                let codewords = match sampler {
                    Sampler::Uniform => {
                        let k_d = retrieval.k();
                        let base = (u - 1) * draws * k_d;
                        (0..draws)
                            .map(|d| {
                                codeword_from_message(retrieval, &digits_now[base + d * k_d..base + (d + 1) * k_d])
                            })
                            .collect()
                    }
                    Sampler::Fixed(cw) => vec![cw.clone(); draws],
                };
                let qs = queries_from_codewords(params, m, i, u, codewords)?;
                for &j in servers {
                    tuple.extend_from_slice(&qs.queries[j]);
                }
            }
            *counts.entry(tuple).or_insert(0) += 1;
            // odometer over all message digits
            for d in digits_now.iter_mut() {
                *d += 1;
                if *d < p {
                    break;
                }
                *d = 0;
            }
        }
        Ok(counts)
    };

    let reference = distribution(1)?;
    let space = tuple_space(params, m, collusion.len());
    let is_uniform = |dist: &BTreeMap<Vec<u64>, u128>| dist.len() as u128 == space && dist.values().all_equal();
    let mut identical = true;
    let mut uniform = is_uniform(&reference);
    for i in 2..=m {
        let dist = distribution(i)?;
        identical &= dist == reference;
        uniform &= is_uniform(&dist);
    }
    Ok(ExhaustiveResult { servers: servers.to_vec(), enumerated, identical, uniform })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::finite_field::FieldSpec;
    use crate::grs::{GeneratorForm, GrsSpec};
    use crate::linalg::MatrixFp;
    use crate::pir::SchemeOptions;

    fn f(p: u64) -> FieldSpec {
        FieldSpec::new(p).unwrap()
    }

    fn grs(p: u64, n: usize, k: usize, t: usize) -> SchemeParams {
        SchemeParams::grs_defaults(f(p), n, k, t, &SchemeOptions::default()).unwrap()
    }

    fn fixed(params: &SchemeParams) -> Sampler {
        Sampler::Fixed(params.retrieval_code().generator().row(0).to_vec())
    }

    #[test]
    fn collusion_set_validation() {
        assert!(CollusionSet::new(vec![], 5).is_err());
        assert!(CollusionSet::new(vec![1, 1], 5).is_err());
        assert!(CollusionSet::new(vec![5], 5).is_err());
        assert_eq!(CollusionSet::new(vec![3, 0], 5).unwrap().servers(), &[0, 3]);
        let mut rng = ChaCha20Rng::seed_from_u64(0);
        assert_eq!(CollusionSet::choose(5, 2, 100, &mut rng).unwrap().len(), 10);
        let some = CollusionSet::choose(12, 4, 7, &mut rng).unwrap();
        assert_eq!(some.len(), 7);
        assert!(some.iter().all(|s| s.len() == 4));
    }

    #[test]
    fn algebraic_examples() {
        let d = GrsSpec::with_defaults(f(5), 5, 2).unwrap().as_code(GeneratorForm::Canonical);
        assert_eq!(algebraic_resistance(&d).unwrap(), 2);
        for n in 2..=8 {
            assert_eq!(algebraic_resistance(&LinearCode::repetition(n, f(11)).unwrap()).unwrap(), 1);
        }
        let c = GrsSpec::with_defaults(f(11), 9, 4).unwrap();
        assert_eq!(algebraic_resistance(&c.dual().unwrap().as_code(GeneratorForm::Canonical)).unwrap(), 5);
        let gapped =
            LinearCode::from_generator(MatrixFp::from_rows(f(5), &[[1u64, 0, 1], [0, 0, 1]]).unwrap()).unwrap();
        assert_eq!(algebraic_resistance(&gapped).unwrap(), 0);
    }

    #[test]
    fn algebraic_matches_dual_distance() {
        for n in 2..=10usize {
            let field = FieldSpec::smallest_at_least(n as u64).unwrap();
            for t in 1..n {
                // GRS_t(alpha, u) with u the dual multipliers of GRS_{n-t}(alpha, 1)
                let d = GrsSpec::with_defaults(field, n, n - t).unwrap().dual().unwrap();
                assert_eq!(d.k(), t);
                let d = d.as_code(GeneratorForm::Canonical);
                assert_eq!(algebraic_resistance(&d).unwrap(), t);
                // independent route by enumeration where the budget allows
                match d.dual().unwrap().min_distance() {
                    Ok(dist) => assert_eq!(dist - 1, t),
                    Err(e) => assert!(matches!(e, Error::BudgetExceeded { .. })),
                }
            }
        }
    }

    #[test]
    fn exhaustive_micro_cases() {
        for (n, k, t, m, p) in [(3, 1, 1, 2, 3), (4, 2, 1, 2, 5)] {
            let params = grs(p, n, k, t);
            for set in CollusionSet::choose(n, t, usize::MAX, &mut ChaCha20Rng::seed_from_u64(0)).unwrap() {
                let r = exhaustive_audit(&params, m, &set, &Sampler::Uniform).unwrap();
                assert!(r.identical && r.uniform, "{n} {k} {t} {set:?}");
                let broken = exhaustive_audit(&params, m, &set, &fixed(&params)).unwrap();
                let touches_j = set.servers().iter().any(|j| params.servers().contains(j));
                assert_eq!(broken.identical, !touches_j);
            }
        }
    }

    #[test]
    fn exhaustive_detects_excess_collusion() {
        let params = grs(3, 3, 1, 1);
        let pair = CollusionSet::new(vec![0, 1], 3).unwrap();
        let r = exhaustive_audit(&params, 2, &pair, &Sampler::Uniform).unwrap();
        assert!(!r.identical);
        assert_eq!(r.enumerated, 81);
    }

    #[test]
    fn exhaustive_single_file_is_trivial() {
        let params = grs(3, 3, 1, 1);
        let all = CollusionSet::new(vec![0, 1, 2], 3).unwrap();
        assert!(exhaustive_audit(&params, 1, &all, &Sampler::Uniform).unwrap().identical);
    }

    #[test]
    fn exhaustive_budget() {
        let params = grs(11, 10, 4, 3);
        let set = CollusionSet::new(vec![0], 10).unwrap();
        assert!(matches!(exhaustive_audit(&params, 2, &set, &Sampler::Uniform), Err(Error::BudgetExceeded { .. })));
    }

    #[test]
    fn empirical_calibrated_pass_and_broken_fail() {
        let params = grs(5, 5, 2, 2);
        let trials = 20_000;
        for set in CollusionSet::choose(5, 2, usize::MAX, &mut ChaCha20Rng::seed_from_u64(0)).unwrap() {
            let support = tuple_space(&params, 2, 2);
            assert_eq!(support, 625);
            let bound = null_tv_bound(support, trials, 1e-6);
            let r = empirical_audit(&params, 2, &set, (1, 2), trials, bound, &Sampler::Uniform, 7).unwrap();
            assert!(r.passed, "{r:?}");
        }
        let set = CollusionSet::new(vec![0, 3], 5).unwrap();
        let r = empirical_audit(&params, 2, &set, (1, 2), 200, 0.05, &fixed(&params), 7).unwrap();
        assert_eq!(r.distance, 1.0);
        assert!(!r.passed);
    }

    #[test]
    fn single_server_marginal_is_uniform() {
        let params = grs(5, 5, 2, 2);
        let trials = 20_000;
        let set = CollusionSet::new(vec![1], 5).unwrap();
        let counts = sample_counts(&params, 2, 1, set.servers(), trials, &Sampler::Uniform, 3).unwrap();
        assert_eq!(counts.len(), 25);
        let expected = trials as f64 / 25.0;
        let chi2: f64 = counts.values().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
        // 24 degrees of freedom; 0.999 quantile is about 51.2
        assert!(chi2 < 51.2, "chi2 = {chi2}");
    }

    #[test]
    fn empirical_is_deterministic_and_validates() {
        let params = grs(5, 5, 2, 2);
        let set = CollusionSet::new(vec![0, 4], 5).unwrap();
        let a = empirical_audit(&params, 3, &set, (1, 3), 500, 1.0, &Sampler::Uniform, 11).unwrap();
        let b = empirical_audit(&params, 3, &set, (1, 3), 500, 1.0, &Sampler::Uniform, 11).unwrap();
        assert_eq!(a, b);
        assert!(matches!(
            empirical_audit(&params, 2, &set, (1, 3), 10, 1.0, &Sampler::Uniform, 0),
            Err(Error::IndexOutOfRange { index: 3, max: 2 })
        ));
        assert!(empirical_audit(&params, 2, &set, (1, 1), 10, 1.0, &Sampler::Uniform, 0).is_err());
        assert!(empirical_audit(&params, 2, &set, (1, 2), 0, 1.0, &Sampler::Uniform, 0).is_err());
    }

    #[test]
    fn report_verdicts() {
        let mut report = AuditReport::new(2, Some(3));
        assert!(!report.passed());
        report.requested_t = Some(2);
        assert!(report.passed());
        let text = report.to_json();
        assert!(text.contains("\"algebraic_t\": 2"));
    }
}
