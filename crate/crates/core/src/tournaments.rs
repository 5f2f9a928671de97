//! Tournaments as sign patterns of margin vectors, isomorphism types, and
//! qualitative margin graphs.
//!
//! A [`Tournament`] stores one bit per oriented pair `(i, j)`, `i < j`: set
//! when `i` beats `j`. Its *code* reads the bits in flat order as a binary
//! number, first pair most significant, so the numerically smallest code is
//! the lexicographically smallest bit string.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::Zero;
use serde::Serialize;

use crate::edge_space::{CandidateCount, EdgeVector};
use crate::error::{domain_err, Error, Result};

/// Largest ℓ for brute-force canonical forms.
pub const MAX_CANONICAL_CANDIDATES: usize = 7;
/// Largest ℓ for exhaustive type enumeration.
pub const MAX_ENUMERATION_CANDIDATES: usize = 5;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Tournament {
    ell: CandidateCount,
    words: Vec<u64>,
}

impl Tournament {
    fn empty(ell: CandidateCount) -> Self {
        Self { ell, words: vec![0; ell.num_edges().div_ceil(64)] }
    }

    #[inline]
    fn bit(&self, flat: usize) -> bool {
        (self.words[flat / 64] >> (flat % 64)) & 1 == 1
    }

    #[inline]
    fn set_bit(&mut self, flat: usize, v: bool) {
        let mask = 1u64 << (flat % 64);
        if v {
            self.words[flat / 64] |= mask;
        } else {
            self.words[flat / 64] &= !mask;
        }
    }

    /// Builds from direction bits in flat order (`true`: smaller ordinal wins).
    pub fn from_bits(ell: CandidateCount, bits: impl IntoIterator<Item = bool>) -> Result<Self> {
        let mut t = Self::empty(ell);
        let mut n = 0;
        for (k, b) in bits.into_iter().enumerate() {
            if k >= ell.num_edges() {
                return Err(domain_err!("too many direction bits for {ell} candidates"));
            }
            t.set_bit(k, b);
            n += 1;
        }
        if n != ell.num_edges() {
            return Err(domain_err!("expected {} direction bits, got {n}", ell.num_edges()));
        }
        Ok(t)
    }

    /// Builds from `(winner, loser)` pairs covering every pair exactly once.
    pub fn from_edges(ell: CandidateCount, edges: &[(usize, usize)]) -> Result<Self> {
        let mut t = Self::empty(ell);
        let mut seen = vec![false; ell.num_edges()];
        for &(w, l) in edges {
            let (idx, sign) = crate::edge_space::edge_index(w, l, ell)?;
            if std::mem::replace(&mut seen[idx.flat], true) {
                return Err(domain_err!("pair {{{w}, {l}}} listed twice"));
            }
            t.set_bit(idx.flat, sign == crate::edge_space::Sign::Plus);
        }
        if seen.iter().any(|s| !s) {
            return Err(domain_err!("every pair of candidates needs a direction"));
        }
        Ok(t)
    }

    /// Parses a `0`/`1` string in flat order.
    pub fn from_bit_string(ell: CandidateCount, s: &str) -> Result<Self> {
        let bits: Result<Vec<bool>> = s
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                _ => Err(domain_err!("bit strings contain only 0 and 1, got {c:?}")),
            })
            .collect();
        Self::from_bits(ell, bits?)
    }

    /// Inverse of [`code`](Self::code).
    pub fn from_code(ell: CandidateCount, code: u64) -> Result<Self> {
        let m = ell.num_edges();
        if m > 64 || (m < 64 && code >> m != 0) {
            return Err(domain_err!("code {code} does not fit {m} edges"));
        }
        Self::from_bits(ell, (0..m).map(|k| (code >> (m - 1 - k)) & 1 == 1))
    }

    /// The linear order 1 > 2 > … > ℓ.
    pub fn transitive(ell: CandidateCount) -> Self {
        Self::from_bits(ell, std::iter::repeat_n(true, ell.num_edges())).expect("full length")
    }

    pub fn ell(&self) -> CandidateCount {
        self.ell
    }

    /// Direction bits in flat order.
    pub fn bits(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.ell.num_edges()).map(|k| self.bit(k))
    }

    pub fn to_bit_string(&self) -> String {
        self.bits().map(|b| if b { '1' } else { '0' }).collect()
    }

    /// Bits as a binary number, first pair most significant. ℓ ≤ 11.
    pub fn code(&self) -> Option<u64> {
        let m = self.ell.num_edges();
        (m <= 64).then(|| self.bits().fold(0u64, |acc, b| (acc << 1) | u64::from(b)))
    }

    /// Whether `a` beats `b`. Candidates are 1-based and distinct.
    pub fn beats(&self, a: usize, b: usize) -> bool {
        if a < b {
            self.bit(self.ell.flat_unchecked(a, b))
        } else {
            !self.bit(self.ell.flat_unchecked(b, a))
        }
    }

    /// Out-degree of each candidate, index `v − 1`.
    pub fn out_degrees(&self) -> Vec<usize> {
        let mut out = vec![0; self.ell.get()];
        for (k, (i, j)) in self.ell.pairs().enumerate() {
            if self.bit(k) {
                out[i - 1] += 1;
            } else {
                out[j - 1] += 1;
            }
        }
        out
    }

    pub fn in_degrees(&self) -> Vec<usize> {
        let top = self.ell.get() - 1;
        self.out_degrees().into_iter().map(|d| top - d).collect()
    }

    /// Out-degrees sorted in descending order.
    pub fn score_sequence(&self) -> Vec<usize> {
        let mut s = self.out_degrees();
        s.sort_unstable_by(|a, b| b.cmp(a));
        s
    }

    /// Σ_v outdeg(v)², which equals Σ_v indeg(v)².
    pub fn linearity(&self) -> usize {
        self.out_degrees().iter().map(|d| d * d).sum()
    }

    /// Every edge reversed.
    pub fn dual(&self) -> Self {
        let mut t = self.clone();
        for k in 0..self.ell.num_edges() {
            t.set_bit(k, !self.bit(k));
        }
        t
    }

    /// Renames candidate `v` to `perm[v − 1]`.
    pub fn relabel(&self, perm: &[usize]) -> Result<Self> {
        let n = self.ell.get();
        let mut sorted = perm.to_vec();
        sorted.sort_unstable();
        if sorted != (1..=n).collect::<Vec<_>>() {
            return Err(domain_err!("{perm:?} is not a permutation of 1..={n}"));
        }
        let mut t = Self::empty(self.ell);
        for (k, (i, j)) in self.ell.pairs().enumerate() {
            let (a, b) = (perm[i - 1], perm[j - 1]);
            let i_wins = self.bit(k);
            if a < b {
                t.set_bit(self.ell.flat_unchecked(a, b), i_wins);
            } else {
                t.set_bit(self.ell.flat_unchecked(b, a), !i_wins);
            }
        }
        Ok(t)
    }

    /// The candidate beating all others, if any.
    pub fn condorcet_winner(&self) -> Option<usize> {
        let top = self.ell.get() - 1;
        self.out_degrees().iter().position(|&d| d == top).map(|v| v + 1)
    }

    /// The candidate losing to all others, if any.
    pub fn condorcet_loser(&self) -> Option<usize> {
        self.out_degrees().iter().position(|&d| d == 0).map(|v| v + 1)
    }

    /// Lexicographically minimal code over all ℓ! relabelings.
    pub fn canonical_form(&self) -> Result<CanonicalForm> {
        self.check_canonical_size()?;
        let n = self.ell.get();
        let mut best = u64::MAX;
        for_each_permutation(n, |inv| {
            // New vertex p+1 is old vertex inv[p].
            let mut code = 0u64;
            for p in 0..n {
                for q in p + 1..n {
                    code = (code << 1) | u64::from(self.beats(inv[p], inv[q]));
                }
            }
            best = best.min(code);
        });
        Ok(CanonicalForm { ell: self.ell, code: best })
    }

    /// Number of relabelings that fix the tournament.
    pub fn automorphism_count(&self) -> Result<usize> {
        self.check_canonical_size()?;
        let n = self.ell.get();
        let mut count = 0;
        for_each_permutation(n, |perm| {
            let fixed = self
                .ell
                .pairs()
                .all(|(i, j)| self.beats(i, j) == self.beats(perm[i - 1], perm[j - 1]));
            count += usize::from(fixed);
        });
        Ok(count)
    }

    pub fn is_isomorphic(&self, other: &Self) -> Result<bool> {
        if self.ell != other.ell {
            return Ok(false);
        }
        Ok(self.score_sequence() == other.score_sequence()
            && self.canonical_form()? == other.canonical_form()?)
    }

    fn check_canonical_size(&self) -> Result<()> {
        if self.ell.get() > MAX_CANONICAL_CANDIDATES {
            return Err(Error::Unsupported(format!(
                "isomorphism by brute force is limited to {MAX_CANONICAL_CANDIDATES} candidates, got {}",
                self.ell
            )));
        }
        Ok(())
    }

    /// Unordered pairs of edges at a common vertex that are both outgoing or
    /// both incoming there, counted pair by pair.
    ///
    /// These are the positive cross terms of the cut-norm expansion on the
    /// orthant of the tournament; the total is `lin − ℓ(ℓ−1)/2`.
    pub fn positive_cross_terms(&self) -> usize {
        let n = self.ell.get();
        let sign = |v: usize, w: usize| if self.beats(v, w) { 1i8 } else { -1 };
        let mut count = 0;
        for v in 1..=n {
            for j in (1..=n).filter(|&j| j != v) {
                for k in (j + 1..=n).filter(|&k| k != v) {
                    count += usize::from(sign(v, j) * sign(v, k) > 0);
                }
            }
        }
        count
    }

    pub fn to_json(&self) -> Result<TournamentJson> {
        let canonical = if self.ell.get() <= MAX_CANONICAL_CANDIDATES {
            Some(self.canonical_form()?.to_string())
        } else {
            None
        };
        Ok(TournamentJson {
            ell: self.ell.get(),
            bits: self.to_bit_string(),
            score_sequence: self.score_sequence(),
            linearity: self.linearity(),
            canonical,
        })
    }
}

/// Serialized form: `{"ell", "bits", "score_sequence", "linearity", "canonical"}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TournamentJson {
    pub ell: usize,
    pub bits: String,
    pub score_sequence: Vec<usize>,
    pub linearity: usize,
    /// Absent above the brute-force limit.
    pub canonical: Option<String>,
}

/// Visits every permutation of 1..=n (Heap's algorithm).
fn for_each_permutation(n: usize, mut f: impl FnMut(&[usize])) {
    let mut perm: Vec<usize> = (1..=n).collect();
    let mut c = vec![0usize; n];
    f(&perm);
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            f(&perm);
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
}

/// Canonical representative code of an isomorphism class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct CanonicalForm {
    ell: CandidateCount,
    code: u64,
}

impl CanonicalForm {
    pub fn code(&self) -> u64 {
        self.code
    }

    pub fn tournament(&self) -> Tournament {
        Tournament::from_code(self.ell, self.code).expect("canonical codes fit")
    }
}

impl fmt::Display for CanonicalForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let m = self.ell.num_edges();
        write!(f, "{:0width$b}", self.code, width = m)
    }
}

/// Direction of each pair from the sign of its margin.
pub fn tournament_of<T: Copy + PartialOrd + Zero>(x: &EdgeVector<T>) -> Result<Tournament> {
    let ell = x.ell();
    let mut t = Tournament::empty(ell);
    for (k, &v) in x.coords().iter().enumerate() {
        if v.is_zero() {
            let (i, j) = ell.pair_of(k).expect("in range");
            return Err(Error::Tie(format!("zero margin between {i} and {j}")));
        }
        t.set_bit(k, v > T::zero());
    }
    Ok(t)
}

/// A tournament with a strict ranking of its edges by margin size.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct QualitativeMarginGraph {
    tournament: Tournament,
    /// Rank of each flat edge; 0 is the smallest margin.
    edge_rank: Vec<u16>,
}

impl QualitativeMarginGraph {
    pub fn new(tournament: Tournament, edge_rank: Vec<u16>) -> Result<Self> {
        let m = tournament.ell().num_edges();
        let mut seen = vec![false; m];
        if edge_rank.len() != m
            || edge_rank.iter().any(|&r| (r as usize) >= m || std::mem::replace(&mut seen[r as usize], true))
        {
            return Err(domain_err!("edge ranks must be a permutation of 0..{m}"));
        }
        Ok(Self { tournament, edge_rank })
    }

    pub fn tournament(&self) -> &Tournament {
        &self.tournament
    }

    pub fn edge_rank(&self) -> &[u16] {
        &self.edge_rank
    }

    /// Majority edges `(winner, loser)` from weakest to strongest.
    pub fn edges_by_strength(&self) -> Vec<(usize, usize)> {
        let ell = self.tournament.ell();
        let mut edges: Vec<_> = ell
            .pairs()
            .zip(&self.edge_rank)
            .map(|((i, j), &r)| (r, if self.tournament.beats(i, j) { (i, j) } else { (j, i) }))
            .collect();
        edges.sort_unstable();
        edges.into_iter().map(|(_, e)| e).collect()
    }

    /// Reversed tournament with the same edge ranking.
    pub fn dual(&self) -> Self {
        Self { tournament: self.tournament.dual(), edge_rank: self.edge_rank.clone() }
    }
}

/// Tournament of `x` plus its edges ranked by |margin|, ascending.
pub fn qualitative_of<T>(x: &EdgeVector<T>) -> Result<QualitativeMarginGraph>
where
    T: Copy + PartialOrd + Zero + std::ops::Neg<Output = T>,
{
    let tournament = tournament_of(x)?;
    let abs: Vec<T> = x.coords().iter().map(|&v| if v < T::zero() { -v } else { v }).collect();
    let mut order: Vec<usize> = (0..abs.len()).collect();
    order.sort_by(|&a, &b| abs[a].partial_cmp(&abs[b]).expect("finite margins"));
    let mut edge_rank = vec![0u16; abs.len()];
    for (rank, w) in order.windows(2).enumerate() {
        if abs[w[0]] == abs[w[1]] {
            let ell = x.ell();
            return Err(Error::Tie(format!(
                "edges {:?} and {:?} have equal margins",
                ell.pair_of(w[0]).expect("in range"),
                ell.pair_of(w[1]).expect("in range")
            )));
        }
        edge_rank[w[1]] = (rank + 1) as u16;
    }
    edge_rank[order[0]] = 0;
    Ok(QualitativeMarginGraph { tournament, edge_rank })
}

/// An isomorphism class of tournaments.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TournamentType {
    /// 1-based position in [`enumerate_types`] order.
    pub id: usize,
    pub canonical: CanonicalForm,
    pub score_sequence: Vec<usize>,
    pub linearity: usize,
    /// Labeled tournaments in the class.
    pub labelings: usize,
    pub automorphisms: usize,
}

impl TournamentType {
    pub fn representative(&self) -> Tournament {
        self.canonical.tournament()
    }
}

/// All isomorphism types on ℓ ≤ 5 candidates by exhaustive enumeration.
///
/// Sorted by linearity (descending), then score sequence (descending), then
/// canonical code.
pub fn enumerate_types(ell: CandidateCount) -> Result<Vec<TournamentType>> {
    Ok(TypeClassifier::new(ell)?.types)
}

/// Maps every labeled tournament on ℓ ≤ 5 candidates to its type.
#[derive(Debug, Clone)]
pub struct TypeClassifier {
    ell: CandidateCount,
    types: Vec<TournamentType>,
    /// Index into `types` for each code.
    type_of_code: Vec<u16>,
}

impl TypeClassifier {
    pub fn new(ell: CandidateCount) -> Result<Self> {
        if ell.get() > MAX_ENUMERATION_CANDIDATES {
            return Err(Error::Unsupported(format!(
                "exhaustive enumeration is limited to {MAX_ENUMERATION_CANDIDATES} candidates, got {ell}"
            )));
        }
        let total = 1u64 << ell.num_edges();
        let mut canon_of_code = Vec::with_capacity(total as usize);
        let mut classes: BTreeMap<CanonicalForm, usize> = BTreeMap::new();
        for code in 0..total {
            let canon = Tournament::from_code(ell, code)?.canonical_form()?;
            *classes.entry(canon).or_default() += 1;
            canon_of_code.push(canon);
        }
        let mut types: Vec<TournamentType> = classes
            .into_iter()
            .map(|(canonical, labelings)| {
                let rep = canonical.tournament();
                Ok(TournamentType {
                    id: 0,
                    canonical,
                    score_sequence: rep.score_sequence(),
                    linearity: rep.linearity(),
                    labelings,
                    automorphisms: rep.automorphism_count()?,
                })
            })
            .collect::<Result<_>>()?;
        types.sort_by(|a, b| {
            b.linearity
                .cmp(&a.linearity)
                .then_with(|| b.score_sequence.cmp(&a.score_sequence))
                .then_with(|| a.canonical.cmp(&b.canonical))
        });
        let index: BTreeMap<CanonicalForm, u16> =
            types.iter().enumerate().map(|(k, t)| (t.canonical, k as u16)).collect();
        for (k, t) in types.iter_mut().enumerate() {
            t.id = k + 1;
        }
        let type_of_code = canon_of_code.iter().map(|c| index[c]).collect();
        Ok(Self { ell, types, type_of_code })
    }

    pub fn ell(&self) -> CandidateCount {
        self.ell
    }

    pub fn types(&self) -> &[TournamentType] {
        &self.types
    }

    /// Index into [`types`](Self::types) of the tournament with this code.
    #[inline]
    pub fn classify_code(&self, code: u64) -> usize {
        self.type_of_code[code as usize] as usize
    }

    pub fn classify(&self, t: &Tournament) -> Result<usize> {
        if t.ell() != self.ell {
            return Err(domain_err!("classifier is for {} candidates, got {}", self.ell, t.ell()));
        }
        Ok(self.classify_code(t.code().expect("small tournaments have codes")))
    }

    /// Type index of the sign pattern of `x`, or `None` on a zero coordinate.
    #[inline]
    pub fn classify_signs(&self, x: &[f64]) -> Option<usize> {
        let mut code = 0u64;
        for &v in x {
            if v == 0.0 {
                return None;
            }
            code = (code << 1) | u64::from(v > 0.0);
        }
        Some(self.classify_code(code))
    }
}
