//! Margin-based voting methods: Condorcet, Minimax and Split Cycle.
//!
//! All methods read only the margin vector, so they accept integer margins
//! of finite elections and real CLT samples alike. A zero margin is no edge.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::edge_space::EdgeVector;
use crate::error::{domain_err, Error, Result};
use crate::ic_model::CovarianceModel;
use crate::probability::ProbEstimate;
use crate::sampling::{fold_clt, MonteCarloConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Minimax,
    SplitCycle,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Minimax => "minimax",
            Method::SplitCycle => "splitcycle",
        })
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "minimax" => Ok(Method::Minimax),
            "splitcycle" => Ok(Method::SplitCycle),
            _ => Err(domain_err!("unknown method {s:?}; expected minimax or splitcycle")),
        }
    }
}

/// Winners of one election under one method, in increasing order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct WinningSet {
    method: Method,
    winners: Vec<usize>,
}

impl WinningSet {
    pub fn method(&self) -> Method {
        self.method
    }

    pub fn winners(&self) -> &[usize] {
        &self.winners
    }

    pub fn len(&self) -> usize {
        self.winners.len()
    }

    /// Always false; kept for API symmetry with `len`.
    pub fn is_empty(&self) -> bool {
        self.winners.is_empty()
    }

    pub fn unique(&self) -> Option<usize> {
        match self.winners[..] {
            [w] => Some(w),
            _ => None,
        }
    }

    pub fn contains(&self, c: usize) -> bool {
        self.winners.binary_search(&c).is_ok()
    }
}

/// Margin matrix `m[a][b] = Margin(a+1, b+1)`.
fn margin_matrix<T>(x: &EdgeVector<T>) -> Vec<Vec<T>>
where
    T: Copy + PartialOrd + Zero + std::ops::Neg<Output = T>,
{
    let n = x.ell().get();
    let mut m = vec![vec![T::zero(); n]; n];
    for (k, (i, j)) in x.ell().pairs().enumerate() {
        let v = x.coords()[k];
        m[i - 1][j - 1] = v;
        m[j - 1][i - 1] = -v;
    }
    m
}

/// The candidate with a positive margin over every other candidate.
pub fn condorcet_winner<T>(x: &EdgeVector<T>) -> Option<usize>
where
    T: Copy + PartialOrd + Zero + std::ops::Neg<Output = T>,
{
    let m = margin_matrix(x);
    let n = m.len();
    (0..n).find(|&a| (0..n).all(|b| a == b || m[a][b] > T::zero())).map(|a| a + 1)
}

/// The candidate with a negative margin against every other candidate.
pub fn condorcet_loser<T>(x: &EdgeVector<T>) -> Option<usize>
where
    T: Copy + PartialOrd + Zero + std::ops::Neg<Output = T>,
{
    condorcet_winner(&x.negated())
}

/// Candidates whose largest margin of defeat is smallest.
pub fn minimax_winners<T>(x: &EdgeVector<T>) -> WinningSet
where
    T: Copy + PartialOrd + Zero + std::ops::Neg<Output = T>,
{
    let m = margin_matrix(x);
    let n = m.len();
    let worst: Vec<T> = (0..n)
        .map(|c| {
            (0..n).fold(T::zero(), |acc, o| if m[o][c] > acc { m[o][c] } else { acc })
        })
        .collect();
    let best = worst.iter().copied().fold(worst[0], |a, b| if b < a { b } else { a });
    let winners = (0..n).filter(|&c| worst[c] == best).map(|c| c + 1).collect();
    WinningSet { method: Method::Minimax, winners }
}

/// Strength of the widest positive-margin path between each ordered pair.
///
/// `s[a][b]` is the largest bottleneck over paths from `a` to `b`, or zero
/// when there is none.
pub fn widest_paths<T>(x: &EdgeVector<T>) -> Vec<Vec<T>>
where
    T: Copy + PartialOrd + Zero + std::ops::Neg<Output = T>,
{
    let mut s = margin_matrix(x);
    let n = s.len();
    for row in s.iter_mut() {
        for v in row.iter_mut() {
            if *v < T::zero() {
                *v = T::zero();
            }
        }
    }
    for k in 0..n {
        for a in 0..n {
            if a == k || s[a][k].is_zero() {
                continue;
            }
            for b in 0..n {
                if b == a || b == k {
                    continue;
                }
                let through = if s[a][k] < s[k][b] { s[a][k] } else { s[k][b] };
                if through > s[a][b] {
                    s[a][b] = through;
                }
            }
        }
    }
    s
}

/// Split Cycle: `b` defeats `a` when `Margin(b, a)` is positive and larger
/// than every path from `a` back to `b`. Winners are the undefeated.
pub fn split_cycle_winners<T>(x: &EdgeVector<T>) -> WinningSet
where
    T: Copy + PartialOrd + Zero + std::ops::Neg<Output = T>,
{
    let m = margin_matrix(x);
    let s = widest_paths(x);
    let n = m.len();
    let winners = (0..n)
        .filter(|&a| !(0..n).any(|b| m[b][a] > T::zero() && m[b][a] > s[a][b]))
        .map(|a| a + 1)
        .collect();
    WinningSet { method: Method::SplitCycle, winners }
}

pub fn winners<T>(method: Method, x: &EdgeVector<T>) -> WinningSet
where
    T: Copy + PartialOrd + Zero + std::ops::Neg<Output = T>,
{
    match method {
        Method::Minimax => minimax_winners(x),
        Method::SplitCycle => split_cycle_winners(x),
    }
}

/// Distribution of winning-set sizes over CLT samples.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WinningSetHistogram {
    pub method: Method,
    pub ell: usize,
    pub samples: u64,
    pub seed: u64,
    /// `counts[k]` elections with `k + 1` winners.
    pub counts: Vec<u64>,
}

/// One CSV row; `set_size` is a number or `multiple_winners`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HistogramRow {
    pub method: String,
    pub ell: usize,
    pub set_size: String,
    pub count: u64,
    pub fraction: f64,
    pub std_err: f64,
}

impl WinningSetHistogram {
    pub fn size_estimate(&self, size: usize) -> ProbEstimate {
        let count = size.checked_sub(1).and_then(|k| self.counts.get(k)).copied().unwrap_or(0);
        ProbEstimate::from_count(count, self.samples, self.seed)
    }

    pub fn multiple_winners(&self) -> ProbEstimate {
        let count = self.counts.iter().skip(1).sum();
        ProbEstimate::from_count(count, self.samples, self.seed)
    }

    pub fn rows(&self) -> Vec<HistogramRow> {
        let row = |set_size: String, e: ProbEstimate| HistogramRow {
            method: self.method.to_string(),
            ell: self.ell,
            set_size,
            count: (e.p_hat * e.samples as f64).round() as u64,
            fraction: e.p_hat,
            std_err: e.std_err,
        };
        let mut rows: Vec<_> =
            (1..=self.ell).map(|k| row(k.to_string(), self.size_estimate(k))).collect();
        rows.push(row("multiple_winners".into(), self.multiple_winners()));
        rows
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        for r in self.rows() {
            out.serialize(r).map_err(|e| Error::Domain(format!("csv: {e}")))?;
        }
        out.flush().map_err(|e| Error::Domain(format!("csv: {e}")))?;
        Ok(())
    }
}

pub fn winning_set_distribution(
    method: Method,
    model: &CovarianceModel<f64>,
    samples: u64,
    config: MonteCarloConfig,
) -> Result<WinningSetHistogram> {
    if samples == 0 {
        return Err(domain_err!("at least one sample is required"));
    }
    let ell = model.ell().get();
    let counts = fold_clt(
        model,
        samples,
        config,
        || vec![0u64; ell],
        |acc, y| acc[winners(method, y).len() - 1] += 1,
        |mut a, b| {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
            a
        },
    );
    Ok(WinningSetHistogram { method, ell, samples, seed: config.seed, counts })
}
