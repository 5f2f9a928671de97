//! Outcome probabilities: Monte Carlo estimates with standard errors, the
//! closed form for three candidates, and exact enumeration for small
//! electorates.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::io::Write;

use num_bigint::BigInt;
use num_rational::BigRational;
use serde::Serialize;

use crate::edge_space::{CandidateCount, EdgeVector};
use crate::error::{domain_err, Error, Result};
use crate::ic_model::{covariance, CovarianceModel};
use crate::sampling::{ballot_vectors, fold_clt, MarginGraph, MonteCarloConfig};
use crate::tournaments::{qualitative_of, QualitativeMarginGraph, Tournament, TournamentType, TypeClassifier};

/// Largest number of ballot-count vectors [`exact_finite_prob`] will visit.
pub const EXACT_ENUMERATION_BUDGET: u128 = 100_000_000;

/// A Monte Carlo frequency with its Wald standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProbEstimate {
    pub p_hat: f64,
    pub std_err: f64,
    pub samples: u64,
    pub seed: u64,
}

impl ProbEstimate {
    pub fn from_count(count: u64, samples: u64, seed: u64) -> Self {
        let p_hat = if samples == 0 { 0.0 } else { count as f64 / samples as f64 };
        let std_err = if samples == 0 { 0.0 } else { (p_hat * (1.0 - p_hat) / samples as f64).sqrt() };
        Self { p_hat, std_err, samples, seed }
    }

    /// The estimate and its error divided by `k`.
    pub fn scaled_down(&self, k: f64) -> Self {
        Self { p_hat: self.p_hat / k, std_err: self.std_err / k, ..*self }
    }

    /// Distance to `target` in standard errors; infinite if the error is zero
    /// and the values differ.
    pub fn z_score(&self, target: f64) -> f64 {
        let d = (self.p_hat - target).abs();
        if d == 0.0 {
            0.0
        } else {
            d / self.std_err
        }
    }

    pub fn combined_se(&self, other: &Self) -> f64 {
        self.std_err.hypot(other.std_err)
    }
}

/// Positive-orthant probability of a standard trivariate normal with the
/// given correlations.
pub fn orthant_exact_3(rho12: f64, rho13: f64, rho23: f64) -> Result<f64> {
    let rs = [rho12, rho13, rho23];
    if rs.iter().any(|r| !r.is_finite() || r.abs() > 1.0) {
        return Err(domain_err!("correlations must lie in [-1, 1], got {rs:?}"));
    }
    let det = 1.0 - rho12 * rho12 - rho13 * rho13 - rho23 * rho23 + 2.0 * rho12 * rho13 * rho23;
    if det < -1e-12 {
        return Err(domain_err!("correlations {rs:?} are not positive semi-definite"));
    }
    Ok(0.125 + (rho12.asin() + rho13.asin() + rho23.asin()) / (4.0 * PI))
}

/// Exact probability of a three-candidate tournament in the large-electorate
/// limit.
pub fn tournament_prob_exact_3(t: &Tournament) -> Result<f64> {
    let ell = t.ell();
    if ell.get() != 3 {
        return Err(Error::Unsupported(format!("closed form needs 3 candidates, got {ell}")));
    }
    let sigma = covariance::<f64>(ell);
    let s: Vec<f64> = t.bits().map(|b| if b { 1.0 } else { -1.0 }).collect();
    let r = |a: usize, b: usize| s[a] * s[b] * sigma.get(a, b);
    orthant_exact_3(r(0, 1), r(0, 2), r(1, 2))
}

/// Frequency of `event` over CLT draws.
pub fn estimate_event<E>(
    model: &CovarianceModel<f64>,
    samples: u64,
    config: MonteCarloConfig,
    event: E,
) -> Result<ProbEstimate>
where
    E: Fn(&EdgeVector<f64>) -> bool + Sync,
{
    if samples == 0 {
        return Err(domain_err!("at least one sample is required"));
    }
    let hits = fold_clt(model, samples, config, || 0u64, |n, y| *n += u64::from(event(y)), |a, b| a + b);
    Ok(ProbEstimate::from_count(hits, samples, config.seed))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TypeProbRow {
    pub ty: TournamentType,
    pub count: u64,
    /// Probability of one particular labeling, the type estimate shared out.
    pub labeled_prob: ProbEstimate,
    pub type_prob: ProbEstimate,
}

/// Estimated probability of every isomorphism type.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TypeProbTable {
    pub ell: usize,
    pub samples: u64,
    pub seed: u64,
    pub shards: usize,
    /// Samples with a zero coordinate, left unclassified.
    pub ties: u64,
    pub rows: Vec<TypeProbRow>,
}

#[derive(Serialize)]
struct CsvRow<'a> {
    type_id: usize,
    score_sequence: &'a str,
    linearity: usize,
    num_labelings: usize,
    labeled_prob: f64,
    labeled_se: f64,
    type_prob: f64,
    type_se: f64,
}

impl TypeProbTable {
    /// Row with 1-based type id `id`.
    pub fn row(&self, id: usize) -> Option<&TypeProbRow> {
        id.checked_sub(1).and_then(|k| self.rows.get(k))
    }

    /// Pooled estimate over the types satisfying `pred`.
    pub fn event(&self, pred: impl Fn(&TournamentType) -> bool) -> ProbEstimate {
        let hits = self.rows.iter().filter(|r| pred(&r.ty)).map(|r| r.count).sum();
        ProbEstimate::from_count(hits, self.samples, self.seed)
    }

    /// Probability that some candidate beats all others.
    pub fn condorcet_winner(&self) -> ProbEstimate {
        let top = self.ell - 1;
        self.event(|t| t.score_sequence[0] == top)
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        for r in &self.rows {
            let scores =
                r.ty.score_sequence.iter().map(usize::to_string).collect::<Vec<_>>().join(" ");
            out.serialize(CsvRow {
                type_id: r.ty.id,
                score_sequence: &scores,
                linearity: r.ty.linearity,
                num_labelings: r.ty.labelings,
                labeled_prob: r.labeled_prob.p_hat,
                labeled_se: r.labeled_prob.std_err,
                type_prob: r.type_prob.p_hat,
                type_se: r.type_prob.std_err,
            })
            .map_err(csv_err)?;
        }
        out.flush().map_err(|e| Error::Domain(format!("csv: {e}")))?;
        Ok(())
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Domain(format!("csv: {e}"))
}

/// Classifies CLT draws by isomorphism type. ℓ ≤ 5.
pub fn estimate_type_table(
    model: &CovarianceModel<f64>,
    samples: u64,
    config: MonteCarloConfig,
) -> Result<TypeProbTable> {
    if samples == 0 {
        return Err(domain_err!("at least one sample is required"));
    }
    let classifier = TypeClassifier::new(model.ell())?;
    let k = classifier.types().len();
    // Last slot counts ties.
    let counts = fold_clt(
        model,
        samples,
        config,
        || vec![0u64; k + 1],
        |acc, y| acc[classifier.classify_signs(y.coords()).unwrap_or(k)] += 1,
        |mut a, b| {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
            a
        },
    );
    let rows = classifier
        .types()
        .iter()
        .zip(&counts)
        .map(|(ty, &count)| {
            let type_prob = ProbEstimate::from_count(count, samples, config.seed);
            TypeProbRow {
                ty: ty.clone(),
                count,
                labeled_prob: type_prob.scaled_down(ty.labelings as f64),
                type_prob,
            }
        })
        .collect();
    Ok(TypeProbTable {
        ell: model.ell().get(),
        samples,
        seed: config.seed,
        shards: config.shards,
        ties: counts[k],
        rows,
    })
}

/// Outcome of comparing two types of different linearity.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrderingCheck {
    /// Type id with the larger linearity.
    pub higher: usize,
    pub lower: usize,
    /// Labeled probability of `higher` minus that of `lower`.
    pub gap: f64,
    pub combined_se: f64,
    /// Gap exceeds the noise threshold.
    pub resolved: bool,
}

impl OrderingCheck {
    /// Resolved in the wrong direction.
    pub fn violates(&self) -> bool {
        self.resolved && self.gap < 0.0
    }
}

/// Checks that labeled probability increases with linearity, for every pair
/// of types with different linearity. A pair is resolved when its gap
/// exceeds `sigmas` combined standard errors.
pub fn linearity_ordering(table: &TypeProbTable, sigmas: f64) -> Vec<OrderingCheck> {
    let mut out = Vec::new();
    for a in &table.rows {
        for b in &table.rows {
            if a.ty.linearity > b.ty.linearity {
                let gap = a.labeled_prob.p_hat - b.labeled_prob.p_hat;
                let combined_se = a.labeled_prob.combined_se(&b.labeled_prob);
                out.push(OrderingCheck {
                    higher: a.ty.id,
                    lower: b.ty.id,
                    gap,
                    combined_se,
                    resolved: gap.abs() > sigmas * combined_se,
                });
            }
        }
    }
    out
}

fn binomial_table(n: usize) -> Vec<Vec<u128>> {
    let mut c = vec![vec![0u128; n + 1]; n + 1];
    for r in 0..=n {
        c[r][0] = 1;
        for k in 1..=r {
            c[r][k] = c[r - 1][k - 1] + if k < r { c[r - 1][k] } else { 0 };
        }
    }
    c
}

/// Number of ballot-count vectors for `n` voters over `types` ballots.
fn multiset_count(n: u64, types: u64) -> Option<u128> {
    // C(n + types - 1, n), built so each partial product is an integer.
    let mut acc: u128 = 1;
    for k in 1..=n as u128 {
        acc = acc.checked_mul(types as u128 - 1 + k)? / k;
    }
    Some(acc)
}

/// Exact probability of `event` for `n` independent uniform ballots.
///
/// Visits every vector of ballot-type counts once, weighted by its
/// multinomial coefficient. Fails with `Unsupported` when the number of
/// count vectors exceeds [`EXACT_ENUMERATION_BUDGET`].
pub fn exact_finite_prob<E>(ell: CandidateCount, voters: u64, event: E) -> Result<BigRational>
where
    E: Fn(&MarginGraph) -> bool,
{
    if voters.is_multiple_of(2) {
        return Err(domain_err!("the number of voters must be odd, got {voters}"));
    }
    if ell.get() > 10 {
        return Err(Error::Unsupported(format!("exact enumeration over {ell}! ballots")));
    }
    let types = (1..=ell.get() as u64).product::<u64>();
    multiset_count(voters, types)
        .filter(|&c| c <= EXACT_ENUMERATION_BUDGET)
        .ok_or_else(|| {
            Error::Unsupported(format!(
                "unsupported size: {voters} voters over {types} ballots exceeds the enumeration budget"
            ))
        })?;
    let total = (types as u128).checked_pow(voters as u32).ok_or_else(|| {
        Error::Unsupported(format!("unsupported size: {types}^{voters} profiles overflow"))
    })?;

    struct Walk<'a, E> {
        vectors: Vec<Vec<i64>>,
        binom: Vec<Vec<u128>>,
        graph: MarginGraph,
        event: &'a E,
        hits: u128,
    }
    impl<E: Fn(&MarginGraph) -> bool> Walk<'_, E> {
        fn go(&mut self, k: usize, remaining: usize, weight: u128) {
            let last = k + 1 == self.vectors.len();
            let range = if last { remaining..=remaining } else { 0..=remaining };
            for c in range {
                let w = weight * self.binom[remaining][c];
                if c > 0 {
                    self.add(k, c as i64);
                }
                if last {
                    if (self.event)(&self.graph) {
                        self.hits += w;
                    }
                } else {
                    self.go(k + 1, remaining - c, w);
                }
                if c > 0 {
                    self.add(k, -(c as i64));
                }
            }
        }

        fn add(&mut self, k: usize, c: i64) {
            let v = &self.vectors[k];
            self.graph.coords_mut().iter_mut().zip(v).for_each(|(m, &x)| *m += c * x);
        }
    }

    // Margins start at zero and are only read at complete count vectors.
    let graph = MarginGraph::from_parts_unchecked(EdgeVector::zeros(ell), voters);
    let mut walk = Walk {
        vectors: ballot_vectors(ell),
        binom: binomial_table(voters as usize),
        graph,
        event: &event,
        hits: 0,
    };
    walk.go(0, voters as usize, 1);
    Ok(BigRational::new(BigInt::from(walk.hits), BigInt::from(total)))
}

/// Histogram of qualitative margin graphs over CLT draws.
#[derive(Debug, Clone, PartialEq)]
pub struct QualitativeCoverage {
    pub ell: usize,
    pub samples: u64,
    pub seed: u64,
    /// Samples with a zero or repeated absolute margin.
    pub ties: u64,
    pub counts: BTreeMap<QualitativeMarginGraph, u64>,
}

impl QualitativeCoverage {
    /// Number of qualitative margin graphs with a strict edge order.
    pub fn possible(&self) -> u128 {
        let m = (self.ell * (self.ell - 1) / 2) as u32;
        (1..=m as u128).product::<u128>() << m
    }

    pub fn observed(&self) -> usize {
        self.counts.len()
    }

    pub fn count(&self, q: &QualitativeMarginGraph) -> u64 {
        self.counts.get(q).copied().unwrap_or(0)
    }

    pub fn estimate(&self, q: &QualitativeMarginGraph) -> ProbEstimate {
        ProbEstimate::from_count(self.count(q), self.samples, self.seed)
    }
}

pub fn qualitative_coverage(
    model: &CovarianceModel<f64>,
    samples: u64,
    config: MonteCarloConfig,
) -> Result<QualitativeCoverage> {
    let (counts, ties) = fold_clt(
        model,
        samples,
        config,
        || (BTreeMap::new(), 0u64),
        |(map, ties), y| match qualitative_of(y) {
            Ok(q) => *map.entry(q).or_insert(0u64) += 1,
            Err(_) => *ties += 1,
        },
        |(mut a, ta), (b, tb)| {
            for (q, c) in b {
                *a.entry(q).or_insert(0) += c;
            }
            (a, ta + tb)
        },
    );
    Ok(QualitativeCoverage { ell: model.ell().get(), samples, seed: config.seed, ties, counts })
}
