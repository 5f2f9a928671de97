//! Seeded generation of ballots, profiles, and margin graphs.
//!
//! Two routes produce margin graphs:
//!
//! * [`ExactSampler`] tallies `n` independent uniform ballots. When ℓ! is
//!   smaller than `n` it instead draws the ballot-type counts from the
//!   multinomial distribution, which has the same law.
//! * [`CltSampler`] draws the large-electorate limit `Y ~ N(0, Σ)` as
//!   `Y = A·W`, `W` standard normal, with the O(ℓ²) symmetric root of
//!   [`CovarianceModel`]. `Y` is the √n-normalized margin vector.
//!
//! Randomness comes from [`RngStream`]: ChaCha8 keyed by a 64-bit seed with
//! a 64-bit stream id. Normal variates use the ziggurat method of
//! `rand_distr::StandardNormal`, uniform permutations use Fisher–Yates.

use num_traits::Float;
use rand::seq::SliceRandom;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::edge_space::{CandidateCount, EdgeVector};
use crate::error::{domain_err, Error, Result};
use crate::ic_model::CovarianceModel;
use crate::scalar::Scalar;

/// Deterministic random stream, a pure function of `(seed, stream_id)`.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    stream_id: u64,
    inner: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream_id);
        Self { seed, stream_id, inner }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}

/// A ranking of all candidates, best first, by 1-based ordinal.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Ballot {
    ranking: Vec<u8>,
}

impl Ballot {
    pub fn new(ranking: Vec<usize>) -> Result<Self> {
        let n = ranking.len();
        CandidateCount::new(n)?;
        let mut seen = vec![false; n];
        for &c in &ranking {
            if c == 0 || c > n || std::mem::replace(&mut seen[c - 1], true) {
                return Err(domain_err!("ballot {ranking:?} is not a permutation of 1..={n}"));
            }
        }
        Ok(Self { ranking: ranking.into_iter().map(|c| c as u8).collect() })
    }

    pub fn ell(&self) -> CandidateCount {
        CandidateCount::new(self.ranking.len()).expect("validated on construction")
    }

    pub fn ranking(&self) -> impl Iterator<Item = usize> + '_ {
        self.ranking.iter().map(|&c| c as usize)
    }

    /// Whether `a` is ranked above `b`.
    pub fn prefers(&self, a: usize, b: usize) -> bool {
        let pa = self.ranking.iter().position(|&c| c as usize == a);
        let pb = self.ranking.iter().position(|&c| c as usize == b);
        matches!((pa, pb), (Some(x), Some(y)) if x < y)
    }
}

/// Adds `weight` times the ±1 comparison vector of `ranking` to `coords`.
fn tally(ell: CandidateCount, ranking: &[u8], weight: i64, coords: &mut [i64]) {
    for (p, &c) in ranking.iter().enumerate() {
        let c = c as usize;
        for &d in &ranking[p + 1..] {
            let d = d as usize;
            if c < d {
                coords[ell.flat_unchecked(c, d)] += weight;
            } else {
                coords[ell.flat_unchecked(d, c)] -= weight;
            }
        }
    }
}

/// Uniform random ballot.
pub fn sample_ballot<R: Rng + ?Sized>(rng: &mut R, ell: CandidateCount) -> Ballot {
    let mut ranking: Vec<u8> = (1..=ell.get() as u8).collect();
    ranking.shuffle(rng);
    Ballot { ranking }
}

/// A multiset of ballots over a common candidate set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Profile {
    ell: CandidateCount,
    ballots: Vec<Ballot>,
}

impl Profile {
    pub fn new(ballots: Vec<Ballot>) -> Result<Self> {
        let ell = ballots.first().ok_or_else(|| domain_err!("a profile needs at least one ballot"))?.ell();
        if ballots.iter().any(|b| b.ell() != ell) {
            return Err(domain_err!("ballots rank different numbers of candidates"));
        }
        Ok(Self { ell, ballots })
    }

    pub fn random<R: Rng + ?Sized>(rng: &mut R, voters: usize, ell: CandidateCount) -> Result<Self> {
        Self::new((0..voters).map(|_| sample_ballot(rng, ell)).collect())
    }

    pub fn ell(&self) -> CandidateCount {
        self.ell
    }

    pub fn ballots(&self) -> &[Ballot] {
        &self.ballots
    }

    pub fn voters(&self) -> usize {
        self.ballots.len()
    }
}

/// Integer head-to-head margins of an `n`-voter election.
///
/// Every margin has the parity of `n` and magnitude at most `n`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MarginGraph {
    margins: EdgeVector<i64>,
    voters: u64,
}

impl MarginGraph {
    pub fn new(margins: EdgeVector<i64>, voters: u64) -> Result<Self> {
        let n = voters as i64;
        for &m in margins.coords() {
            if m.abs() > n || (m - n).rem_euclid(2) != 0 {
                return Err(domain_err!("margin {m} is impossible with {voters} voters"));
            }
        }
        Ok(Self { margins, voters })
    }

    pub fn margins(&self) -> &EdgeVector<i64> {
        &self.margins
    }

    pub(crate) fn from_parts_unchecked(margins: EdgeVector<i64>, voters: u64) -> Self {
        Self { margins, voters }
    }

    pub(crate) fn coords_mut(&mut self) -> &mut [i64] {
        self.margins.coords_mut()
    }

    pub fn voters(&self) -> u64 {
        self.voters
    }

    pub fn ell(&self) -> CandidateCount {
        self.margins.ell()
    }

    /// `Margin(a, b)`.
    pub fn margin(&self, a: usize, b: usize) -> Result<i64> {
        self.margins.get(a, b)
    }

    /// Margins divided by √n, comparable with CLT samples.
    pub fn normalized(&self) -> EdgeVector<f64> {
        let s = (self.voters as f64).sqrt();
        let coords = self.margins.coords().iter().map(|&m| m as f64 / s).collect();
        EdgeVector::from_coords(self.ell(), coords).expect("finite coordinates")
    }
}

/// Tallies a profile's head-to-head margins in O(n·ℓ²).
pub fn margin_graph(p: &Profile) -> MarginGraph {
    let mut coords = vec![0i64; p.ell.num_edges()];
    for b in &p.ballots {
        tally(p.ell, &b.ranking, 1, &mut coords);
    }
    let margins = EdgeVector::from_coords(p.ell, coords).expect("length matches");
    MarginGraph { margins, voters: p.ballots.len() as u64 }
}

#[derive(Debug, Clone)]
enum ExactStrategy {
    PerVoter { ranking: Vec<u8> },
    /// ±1 comparison vectors of all ℓ! ballots.
    Multinomial { ballot_vectors: Vec<Vec<i64>> },
}

/// Largest ℓ for which the multinomial route keeps a table of all ballots.
const MULTINOMIAL_MAX_CANDIDATES: usize = 7;

/// Draws the margin graph of `n` independent uniform ballots without storing
/// the profile.
#[derive(Debug, Clone)]
pub struct ExactSampler {
    ell: CandidateCount,
    voters: u64,
    strategy: ExactStrategy,
}

impl ExactSampler {
    /// `voters` must be odd. Picks the multinomial route when ℓ! < `voters`.
    pub fn new(ell: CandidateCount, voters: u64) -> Result<Self> {
        let per_voter = Self::per_voter(ell, voters)?;
        let factorial = (1..=ell.get() as u64).try_fold(1u64, |acc, k| acc.checked_mul(k));
        match factorial {
            Some(f) if ell.get() <= MULTINOMIAL_MAX_CANDIDATES && f < voters => {
                Self::multinomial(ell, voters)
            }
            _ => Ok(per_voter),
        }
    }

    /// Always tallies voter by voter.
    pub fn per_voter(ell: CandidateCount, voters: u64) -> Result<Self> {
        check_voters(voters)?;
        let ranking = (1..=ell.get() as u8).collect();
        Ok(Self { ell, voters, strategy: ExactStrategy::PerVoter { ranking } })
    }

    /// Draws ballot-type counts from Multinomial(n; 1/ℓ!, …, 1/ℓ!).
    pub fn multinomial(ell: CandidateCount, voters: u64) -> Result<Self> {
        check_voters(voters)?;
        if ell.get() > MULTINOMIAL_MAX_CANDIDATES {
            return Err(Error::Unsupported(format!(
                "multinomial sampling enumerates ℓ! ballots; ℓ = {ell} exceeds {MULTINOMIAL_MAX_CANDIDATES}"
            )));
        }
        let ballot_vectors = ballot_vectors(ell);
        Ok(Self { ell, voters, strategy: ExactStrategy::Multinomial { ballot_vectors } })
    }

    pub fn ell(&self) -> CandidateCount {
        self.ell
    }

    pub fn voters(&self) -> u64 {
        self.voters
    }

    pub fn is_multinomial(&self) -> bool {
        matches!(self.strategy, ExactStrategy::Multinomial { .. })
    }

    pub fn sample<R: Rng + ?Sized>(&mut self, rng: &mut R) -> MarginGraph {
        let mut coords = vec![0i64; self.ell.num_edges()];
        match &mut self.strategy {
            ExactStrategy::PerVoter { ranking } => {
                for _ in 0..self.voters {
                    ranking.shuffle(rng);
                    tally(self.ell, ranking, 1, &mut coords);
                }
            }
            ExactStrategy::Multinomial { ballot_vectors } => {
                let types = ballot_vectors.len();
                let mut remaining = self.voters;
                for (k, v) in ballot_vectors.iter().enumerate() {
                    if remaining == 0 {
                        break;
                    }
                    let count = if k + 1 == types {
                        remaining
                    } else {
                        let p = 1.0 / (types - k) as f64;
                        Binomial::new(remaining, p).expect("valid binomial").sample(rng)
                    };
                    remaining -= count;
                    if count > 0 {
                        let w = count as i64;
                        coords.iter_mut().zip(v).for_each(|(c, &x)| *c += w * x);
                    }
                }
            }
        }
        let margins = EdgeVector::from_coords(self.ell, coords).expect("length matches");
        MarginGraph { margins, voters: self.voters }
    }
}

fn check_voters(voters: u64) -> Result<()> {
    if voters.is_multiple_of(2) {
        return Err(domain_err!("the number of voters must be odd, got {voters}"));
    }
    Ok(())
}

/// ±1 comparison vector of every ranking, in [`all_rankings`] order.
pub(crate) fn ballot_vectors(ell: CandidateCount) -> Vec<Vec<i64>> {
    all_rankings(ell)
        .into_iter()
        .map(|r| {
            let mut v = vec![0i64; ell.num_edges()];
            tally(ell, &r, 1, &mut v);
            v
        })
        .collect()
}

/// Every ranking of 1..=ℓ in lexicographic order.
pub(crate) fn all_rankings(ell: CandidateCount) -> Vec<Vec<u8>> {
    fn rec(prefix: &mut Vec<u8>, used: &mut [bool], out: &mut Vec<Vec<u8>>) {
        if prefix.len() == used.len() {
            out.push(prefix.clone());
            return;
        }
        for c in 0..used.len() {
            if !used[c] {
                used[c] = true;
                prefix.push(c as u8 + 1);
                rec(prefix, used, out);
                prefix.pop();
                used[c] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), &mut vec![false; ell.get()], &mut out);
    out
}

/// One exact margin graph of `n` uniform ballots; `n` must be odd.
pub fn sample_margin_exact<R: Rng + ?Sized>(
    rng: &mut R,
    voters: u64,
    ell: CandidateCount,
) -> Result<MarginGraph> {
    Ok(ExactSampler::new(ell, voters)?.sample(rng))
}

/// Draws from the limiting N(0, Σ) distribution of √n-normalized margins.
#[derive(Debug, Clone)]
pub struct CltSampler<F> {
    model: CovarianceModel<F>,
    raw: Vec<F>,
    flows: Vec<F>,
}

impl<F> CltSampler<F>
where
    F: Scalar + Float,
    StandardNormal: Distribution<F>,
{
    pub fn new(model: CovarianceModel<F>) -> Self {
        let ell = model.ell();
        Self { model, raw: vec![F::zero(); ell.num_edges()], flows: vec![F::zero(); ell.get()] }
    }

    pub fn model(&self) -> &CovarianceModel<F> {
        &self.model
    }

    pub fn sample<R: Rng + ?Sized>(&mut self, rng: &mut R) -> EdgeVector<F> {
        let mut out = EdgeVector::zeros(self.model.ell());
        self.sample_into(rng, &mut out);
        out
    }

    /// Overwrites `out`, which must be over the model's candidates.
    pub fn sample_into<R: Rng + ?Sized>(&mut self, rng: &mut R, out: &mut EdgeVector<F>) {
        debug_assert_eq!(out.ell(), self.model.ell());
        for w in self.raw.iter_mut() {
            *w = StandardNormal.sample(rng);
        }
        self.model.apply_factor_into(&self.raw, out.coords_mut(), &mut self.flows);
    }
}

/// One draw of `Y ~ N(0, Σ)`.
pub fn sample_margin_clt<F, R>(rng: &mut R, model: &CovarianceModel<F>) -> EdgeVector<F>
where
    F: Scalar + Float,
    StandardNormal: Distribution<F>,
    R: Rng + ?Sized,
{
    CltSampler::new(model.clone()).sample(rng)
}

/// How a Monte Carlo run is split across independent streams.
///
/// Shard `k` uses stream id `k` under the master seed, so results are fixed
/// by `(seed, shards, samples)` and change when the shard count changes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MonteCarloConfig {
    pub seed: u64,
    pub shards: usize,
}

impl MonteCarloConfig {
    pub fn new(seed: u64, shards: usize) -> Result<Self> {
        if shards == 0 {
            return Err(domain_err!("at least one shard is required"));
        }
        Ok(Self { seed, shards })
    }

    /// `(stream_id, samples)` for each shard; earlier shards take the remainder.
    pub fn plan(&self, samples: u64) -> Vec<(u64, u64)> {
        let shards = self.shards as u64;
        let base = samples / shards;
        let extra = samples % shards;
        (0..shards).map(|k| (k, base + u64::from(k < extra))).collect()
    }
}

/// Folds `samples` CLT draws into per-shard accumulators, run in parallel and
/// merged in shard order.
pub fn fold_clt<A, I, S, M>(
    model: &CovarianceModel<f64>,
    samples: u64,
    config: MonteCarloConfig,
    init: I,
    step: S,
    merge: M,
) -> A
where
    A: Send,
    I: Fn() -> A + Sync,
    S: Fn(&mut A, &EdgeVector<f64>) + Sync,
    M: Fn(A, A) -> A,
{
    let parts: Vec<A> = config
        .plan(samples)
        .into_par_iter()
        .map(|(stream, count)| {
            let mut rng = RngStream::new(config.seed, stream);
            let mut sampler = CltSampler::new(model.clone());
            let mut y = EdgeVector::zeros(model.ell());
            let mut acc = init();
            for _ in 0..count {
                sampler.sample_into(&mut rng, &mut y);
                step(&mut acc, &y);
            }
            acc
        })
        .collect();
    parts.into_iter().reduce(merge).unwrap_or_else(init)
}

/// Like [`fold_clt`] with exact `voters`-voter margin graphs.
pub fn fold_exact<A, I, S, M>(
    ell: CandidateCount,
    voters: u64,
    samples: u64,
    config: MonteCarloConfig,
    init: I,
    step: S,
    merge: M,
) -> Result<A>
where
    A: Send,
    I: Fn() -> A + Sync,
    S: Fn(&mut A, &MarginGraph) + Sync,
    M: Fn(A, A) -> A,
{
    let template = ExactSampler::new(ell, voters)?;
    let parts: Vec<A> = config
        .plan(samples)
        .into_par_iter()
        .map(|(stream, count)| {
            let mut rng = RngStream::new(config.seed, stream);
            let mut sampler = template.clone();
            let mut acc = init();
            for _ in 0..count {
                step(&mut acc, &sampler.sample(&mut rng));
            }
            acc
        })
        .collect();
    Ok(parts.into_iter().reduce(merge).unwrap_or_else(init))
}

/// A margin graph as one JSON line: `{"ell", "coords", "voters"}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginRecord {
    pub ell: usize,
    pub coords: Coords,
    /// `None` for CLT samples.
    pub voters: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Coords {
    Int(Vec<i64>),
    Float(Vec<f64>),
}

impl From<&MarginGraph> for MarginRecord {
    fn from(m: &MarginGraph) -> Self {
        Self {
            ell: m.ell().get(),
            coords: Coords::Int(m.margins.coords().to_vec()),
            voters: Some(m.voters),
        }
    }
}

impl From<&EdgeVector<f64>> for MarginRecord {
    fn from(y: &EdgeVector<f64>) -> Self {
        Self { ell: y.ell().get(), coords: Coords::Float(y.coords().to_vec()), voters: None }
    }
}

impl MarginRecord {
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("plain data serializes")
    }

    pub fn from_json_line(line: &str) -> Result<Self> {
        serde_json::from_str(line).map_err(|e| domain_err!("bad margin record: {e}"))
    }
}
