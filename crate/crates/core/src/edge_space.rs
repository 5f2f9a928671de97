//! The edge space of the complete graph on the candidates.
//!
//! Edges are oriented from the smaller ordinal to the larger one and stored
//! once, in lexicographic pair order `(1,2), (1,3), …, (1,ℓ), (2,3), …`.
//! Reading an edge against its orientation negates the stored value.
//! Candidate ordinals are 1-based throughout this crate; serialized forms
//! use 0-based flat edge positions.

use std::fmt;
use std::ops::{Add, Neg, Sub};

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{domain_err, Result};
use crate::scalar::Scalar;

pub const MIN_CANDIDATES: usize = 3;
pub const MAX_CANDIDATES: usize = 64;

/// Number of candidates ℓ, with 3 ≤ ℓ ≤ 64.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "usize", into = "usize")]
pub struct CandidateCount(usize);

impl CandidateCount {
    pub fn new(ell: usize) -> Result<Self> {
        if !(MIN_CANDIDATES..=MAX_CANDIDATES).contains(&ell) {
            return Err(domain_err!(
                "candidate count must be in {MIN_CANDIDATES}..={MAX_CANDIDATES}, got {ell}"
            ));
        }
        Ok(Self(ell))
    }

    #[inline]
    pub fn get(self) -> usize {
        self.0
    }

    /// ℓ(ℓ−1)/2.
    #[inline]
    pub fn num_edges(self) -> usize {
        self.0 * (self.0 - 1) / 2
    }

    /// Dimension of the cycle space, (ℓ−1)(ℓ−2)/2.
    pub fn cycle_dim(self) -> usize {
        (self.0 - 1) * (self.0 - 2) / 2
    }

    /// Dimension of the cut space, ℓ−1.
    pub fn cut_dim(self) -> usize {
        self.0 - 1
    }

    /// Flat position of the oriented pair `i < j` (1-based). No range checks.
    #[inline]
    pub(crate) fn flat_unchecked(self, i: usize, j: usize) -> usize {
        debug_assert!(1 <= i && i < j && j <= self.0);
        (i - 1) * (2 * self.0 - i) / 2 + (j - i - 1)
    }

    /// All oriented pairs `(i, j)`, `i < j`, in flat order.
    pub fn pairs(self) -> impl Iterator<Item = (usize, usize)> {
        let ell = self.0;
        (1..=ell).flat_map(move |i| (i + 1..=ell).map(move |j| (i, j)))
    }

    /// Inverse of the flat index.
    pub fn pair_of(self, flat: usize) -> Option<(usize, usize)> {
        if flat >= self.num_edges() {
            return None;
        }
        let mut rest = flat;
        for i in 1..self.0 {
            let row = self.0 - i;
            if rest < row {
                return Some((i, i + 1 + rest));
            }
            rest -= row;
        }
        None
    }
}

impl TryFrom<usize> for CandidateCount {
    type Error = crate::error::Error;
    fn try_from(v: usize) -> Result<Self> {
        Self::new(v)
    }
}

impl From<CandidateCount> for usize {
    fn from(c: CandidateCount) -> usize {
        c.0
    }
}

impl fmt::Display for CandidateCount {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Whether an ordered pair agrees with the fixed edge orientation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    #[inline]
    pub fn apply<T: Neg<Output = T>>(self, v: T) -> T {
        match self {
            Sign::Plus => v,
            Sign::Minus => -v,
        }
    }

    pub fn as_i8(self) -> i8 {
        match self {
            Sign::Plus => 1,
            Sign::Minus => -1,
        }
    }
}

/// Resolved position of an ordered candidate pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EdgeIndex {
    /// Smaller ordinal.
    pub i: usize,
    /// Larger ordinal.
    pub j: usize,
    pub flat: usize,
}

/// Flat index of the unordered pair `{i, j}` and the sign of reading `(i, j)`.
pub fn edge_index(i: usize, j: usize, ell: CandidateCount) -> Result<(EdgeIndex, Sign)> {
    let n = ell.get();
    if i == 0 || j == 0 || i > n || j > n {
        return Err(domain_err!("candidate ordinal out of range 1..={n}: ({i}, {j})"));
    }
    if i == j {
        return Err(domain_err!("an edge needs two distinct candidates, got ({i}, {i})"));
    }
    let (lo, hi, sign) = if i < j { (i, j, Sign::Plus) } else { (j, i, Sign::Minus) };
    Ok((EdgeIndex { i: lo, j: hi, flat: ell.flat_unchecked(lo, hi) }, sign))
}

/// A real labeling of the oriented edges of K_ℓ.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct EdgeVector<T> {
    ell: CandidateCount,
    coords: Vec<T>,
}

impl<T> EdgeVector<T> {
    pub fn ell(&self) -> CandidateCount {
        self.ell
    }

    /// Stored values in flat order, each read along its orientation.
    pub fn coords(&self) -> &[T] {
        &self.coords
    }

    pub fn coords_mut(&mut self) -> &mut [T] {
        &mut self.coords
    }

    pub fn into_coords(self) -> Vec<T> {
        self.coords
    }
}

impl<T: Copy + Zero + PartialOrd + Neg<Output = T>> EdgeVector<T> {
    pub fn zeros(ell: CandidateCount) -> Self {
        Self { ell, coords: vec![T::zero(); ell.num_edges()] }
    }

    /// Wraps coordinates given in flat order. Float coordinates must be finite.
    pub fn from_coords(ell: CandidateCount, coords: Vec<T>) -> Result<Self> {
        if coords.len() != ell.num_edges() {
            return Err(domain_err!(
                "expected {} coordinates for {ell} candidates, got {}",
                ell.num_edges(),
                coords.len()
            ));
        }
        // NaN is the only value not equal to itself; infinities exceed every finite bound.
        #[allow(clippy::eq_op)]
        if coords.iter().any(|&c| c != c) {
            return Err(domain_err!("edge coordinates must be finite"));
        }
        Ok(Self { ell, coords })
    }

    /// Signed value `x_(i,j)`; `x_(j,i) = −x_(i,j)`.
    pub fn get(&self, i: usize, j: usize) -> Result<T> {
        let (idx, sign) = edge_index(i, j, self.ell)?;
        Ok(sign.apply(self.coords[idx.flat]))
    }

    /// Same as [`get`](Self::get) without validation; `i ≠ j` must hold.
    #[inline]
    pub fn margin(&self, i: usize, j: usize) -> T {
        if i < j {
            self.coords[self.ell.flat_unchecked(i, j)]
        } else {
            -self.coords[self.ell.flat_unchecked(j, i)]
        }
    }

    pub fn set(&mut self, i: usize, j: usize, v: T) -> Result<()> {
        let (idx, sign) = edge_index(i, j, self.ell)?;
        self.coords[idx.flat] = sign.apply(v);
        Ok(())
    }

    /// Elementwise negation; the sign pattern of the reversed tournament.
    pub fn negated(&self) -> Self {
        Self { ell: self.ell, coords: self.coords.iter().map(|&c| -c).collect() }
    }
}

impl<T: Scalar> EdgeVector<T> {
    /// The unit vector `e(i,j)`; `e(j,i) = −e(i,j)`.
    pub fn unit(ell: CandidateCount, i: usize, j: usize) -> Result<Self> {
        let mut x = Self::zeros(ell);
        x.set(i, j, T::one())?;
        Ok(x)
    }

    /// Sum of `e(a,b)` over consecutive pairs of `vertices`, closing the loop.
    pub fn cycle(ell: CandidateCount, vertices: &[usize]) -> Result<Self> {
        if vertices.len() < 3 {
            return Err(domain_err!("a cycle needs at least three vertices"));
        }
        let mut x = Self::zeros(ell);
        for (k, &a) in vertices.iter().enumerate() {
            let b = vertices[(k + 1) % vertices.len()];
            let (idx, sign) = edge_index(a, b, ell)?;
            x.coords[idx.flat] = x.coords[idx.flat] + sign.apply(T::one());
        }
        Ok(x)
    }

    /// The star cut `Σ_{j≠v} e(v,j)`: all edges leaving `v`.
    pub fn star_cut(ell: CandidateCount, v: usize) -> Result<Self> {
        let mut x = Self::zeros(ell);
        for j in (1..=ell.get()).filter(|&j| j != v) {
            x.set(v, j, T::one())?;
        }
        Ok(x)
    }

    pub fn scaled(&self, c: T) -> Self {
        Self { ell: self.ell, coords: self.coords.iter().map(|&v| v * c).collect() }
    }

    pub fn dot(&self, other: &Self) -> T {
        self.coords.iter().zip(&other.coords).fold(T::zero(), |acc, (&a, &b)| acc + a * b)
    }

    pub fn norm_sq(&self) -> T {
        self.dot(self)
    }

    pub fn max_abs(&self) -> T {
        self.coords.iter().fold(T::zero(), |m, &v| if v.abs() > m { v.abs() } else { m })
    }

    /// Net flow out of `v`: `Σ_{j≠v} x_(v,j)`.
    pub fn flow(&self, v: usize) -> Result<T> {
        let n = self.ell.get();
        if v == 0 || v > n {
            return Err(domain_err!("vertex {v} out of range 1..={n}"));
        }
        Ok((1..=n).filter(|&j| j != v).fold(T::zero(), |acc, j| acc + self.margin(v, j)))
    }

    /// Net flow at every vertex, index `v − 1`, in one pass over the edges.
    pub fn flows(&self) -> Vec<T> {
        let mut out = vec![T::zero(); self.ell.get()];
        for ((i, j), &x) in self.ell.pairs().zip(&self.coords) {
            out[i - 1] = out[i - 1] + x;
            out[j - 1] = out[j - 1] - x;
        }
        out
    }

    /// Orthogonal projection onto the cut space:
    /// `z_(i,j) = (flow(i) − flow(j)) / ℓ`.
    pub fn project_cut(&self) -> Self {
        let flows = self.flows();
        let inv_ell = T::from_ratio(1, self.ell.get() as i64);
        let coords =
            self.ell.pairs().map(|(i, j)| (flows[i - 1] - flows[j - 1]) * inv_ell).collect();
        Self { ell: self.ell, coords }
    }

    /// Orthogonal projection onto the cycle space, `x − project_cut(x)`.
    pub fn project_cycle(&self) -> Self {
        let z = self.project_cut();
        self - &z
    }

    /// `‖project_cut(x)‖²` from the edge-pair closed form
    /// `(2/ℓ)(Σ x_e² + Σ_v Σ_{j<k} x_(v,j)·x_(v,k))`, pairs oriented out of
    /// their shared vertex.
    pub fn cut_norm_sq(&self) -> T {
        let n = self.ell.get();
        let squares = self.norm_sq();
        let mut cross = T::zero();
        for v in 1..=n {
            for j in 1..=n {
                if j == v {
                    continue;
                }
                let xj = self.margin(v, j);
                for k in j + 1..=n {
                    if k != v {
                        cross = cross + xj * self.margin(v, k);
                    }
                }
            }
        }
        T::from_ratio(2, n as i64) * (squares + cross)
    }
}

impl<T: Scalar> Add for &EdgeVector<T> {
    type Output = EdgeVector<T>;
    fn add(self, rhs: Self) -> EdgeVector<T> {
        assert_eq!(self.ell, rhs.ell, "edge vectors over different candidate sets");
        let coords = self.coords.iter().zip(&rhs.coords).map(|(&a, &b)| a + b).collect();
        EdgeVector { ell: self.ell, coords }
    }
}

impl<T: Scalar> Sub for &EdgeVector<T> {
    type Output = EdgeVector<T>;
    fn sub(self, rhs: Self) -> EdgeVector<T> {
        assert_eq!(self.ell, rhs.ell, "edge vectors over different candidate sets");
        let coords = self.coords.iter().zip(&rhs.coords).map(|(&a, &b)| a - b).collect();
        EdgeVector { ell: self.ell, coords }
    }
}

/// Fundamental cycles of the star spanning tree at vertex 1:
/// `e(1,i) + e(i,j) − e(1,j)` for `2 ≤ i < j ≤ ℓ`.
pub fn fundamental_cycle_basis<T: Scalar>(ell: CandidateCount) -> Vec<EdgeVector<T>> {
    let n = ell.get();
    let mut basis = Vec::with_capacity(ell.cycle_dim());
    for i in 2..=n {
        for j in i + 1..=n {
            let mut x = EdgeVector::zeros(ell);
            x.coords[ell.flat_unchecked(1, i)] = T::one();
            x.coords[ell.flat_unchecked(i, j)] = T::one();
            x.coords[ell.flat_unchecked(1, j)] = -T::one();
            basis.push(x);
        }
    }
    basis
}

/// Star cuts `Σ_{j≠i} e(i,j)` for `i = 2..=ℓ`.
pub fn star_cut_basis<T: Scalar>(ell: CandidateCount) -> Vec<EdgeVector<T>> {
    (2..=ell.get()).map(|i| EdgeVector::star_cut(ell, i).expect("vertex in range")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::Rational64;

    fn ell(n: usize) -> CandidateCount {
        CandidateCount::new(n).unwrap()
    }

    fn r(n: i64, d: i64) -> Rational64 {
        Rational64::new(n, d)
    }

    #[test]
    fn candidate_count_bounds() {
        assert!(CandidateCount::new(2).is_err());
        assert!(CandidateCount::new(65).is_err());
        assert_eq!(ell(64).num_edges(), 2016);
    }

    #[test]
    fn edge_index_examples() {
        let (idx, s) = edge_index(1, 2, ell(4)).unwrap();
        assert_eq!((idx.flat, s), (0, Sign::Plus));
        let (idx, s) = edge_index(2, 1, ell(4)).unwrap();
        assert_eq!((idx.flat, s), (0, Sign::Minus));
        let (idx, s) = edge_index(3, 4, ell(4)).unwrap();
        assert_eq!((idx.flat, s), (5, Sign::Plus));
        assert!(edge_index(2, 2, ell(4)).is_err());
        assert!(edge_index(0, 2, ell(4)).is_err());
        assert!(edge_index(1, 5, ell(4)).is_err());
    }

    #[test]
    fn flat_index_is_bijective() {
        for n in 3..=12 {
            let c = ell(n);
            for (k, (i, j)) in c.pairs().enumerate() {
                assert_eq!(edge_index(i, j, c).unwrap().0.flat, k);
                assert_eq!(c.pair_of(k), Some((i, j)));
            }
            assert_eq!(c.pairs().count(), c.num_edges());
            assert_eq!(c.pair_of(c.num_edges()), None);
        }
    }

    #[test]
    fn accessor_sign_convention() {
        let mut x = EdgeVector::<f64>::zeros(ell(4));
        x.set(3, 1, 2.5).unwrap();
        assert_eq!(x.get(1, 3).unwrap(), -2.5);
        assert_eq!(x.get(3, 1).unwrap(), 2.5);
        assert_eq!(x.coords()[1], -2.5);
    }

    #[test]
    fn rejects_non_finite_and_bad_length() {
        assert!(EdgeVector::from_coords(ell(3), vec![1.0, f64::NAN, 0.0]).is_err());
        assert!(EdgeVector::from_coords(ell(3), vec![1.0, 0.0]).is_err());
    }

    #[test]
    fn flow_examples() {
        let c = ell(3);
        let star = &EdgeVector::<f64>::unit(c, 1, 2).unwrap() + &EdgeVector::unit(c, 1, 3).unwrap();
        assert_eq!(star.flow(1).unwrap(), 2.0);
        let cyc = EdgeVector::<f64>::cycle(c, &[1, 2, 3]).unwrap();
        for v in 1..=3 {
            assert_eq!(cyc.flow(v).unwrap(), 0.0);
        }
        // A→B 7, A→D 3, B→C 9, B→D 1, C→A 11, C→D 5; flow at A = 7 + 3 − 11.
        let m = minimax_example();
        assert_eq!(m.flow(1).unwrap(), -1.0);
        assert_eq!(m.flows(), vec![-1.0, 3.0, 7.0, -9.0]);
        assert!(m.flow(5).is_err());
    }

    fn minimax_example() -> EdgeVector<f64> {
        let mut x = EdgeVector::zeros(ell(4));
        for (a, b, m) in [(1, 2, 7.0), (1, 4, 3.0), (2, 3, 9.0), (2, 4, 1.0), (3, 1, 11.0), (3, 4, 5.0)] {
            x.set(a, b, m).unwrap();
        }
        x
    }

    #[test]
    fn projections_exact_three_candidates() {
        let c = ell(3);
        let cyc = EdgeVector::<Rational64>::cycle(c, &[1, 2, 3]).unwrap();
        assert_eq!(cyc.project_cut(), EdgeVector::zeros(c));
        assert_eq!(cyc.project_cycle(), cyc);

        let star = EdgeVector::<Rational64>::star_cut(c, 1).unwrap();
        assert_eq!(star.project_cut(), star);
        assert_eq!(star.project_cycle(), EdgeVector::zeros(c));

        let e12 = EdgeVector::<Rational64>::unit(c, 1, 2).unwrap();
        let z = e12.project_cut();
        assert_eq!(z.coords(), &[r(2, 3), r(1, 3), r(-1, 3)]);
        let y = e12.project_cycle();
        assert_eq!(y, cyc.scaled(r(1, 3)));
    }

    #[test]
    fn cut_norm_examples() {
        let c = ell(3);
        assert_eq!(EdgeVector::<Rational64>::cycle(c, &[1, 2, 3]).unwrap().cut_norm_sq(), r(0, 1));
        assert_eq!(EdgeVector::<Rational64>::unit(c, 1, 2).unwrap().cut_norm_sq(), r(2, 3));
        assert_eq!(EdgeVector::<Rational64>::star_cut(c, 1).unwrap().cut_norm_sq(), r(2, 1));
    }

    #[test]
    fn basis_shapes() {
        let c3 = ell(3);
        let cycles = fundamental_cycle_basis::<f64>(c3);
        assert_eq!(cycles.len(), 1);
        assert_eq!(cycles[0].coords(), &[1.0, -1.0, 1.0]);
        assert_eq!(fundamental_cycle_basis::<f64>(ell(4)).len(), 3);
        assert_eq!(fundamental_cycle_basis::<f64>(ell(5)).len(), 6);

        let cuts = star_cut_basis::<f64>(c3);
        assert_eq!(cuts.len(), 2);
        assert_eq!(cuts[0].coords(), &[-1.0, 0.0, 1.0]);
    }

    #[test]
    fn bases_are_orthogonal_and_span() {
        for n in 3..=8 {
            let c = ell(n);
            let cycles = fundamental_cycle_basis::<Rational64>(c);
            let cuts = star_cut_basis::<Rational64>(c);
            for y in &cycles {
                assert!(y.flows().iter().all(|f| *f == r(0, 1)));
                for z in &cuts {
                    assert_eq!(y.dot(z), r(0, 1));
                }
            }
            let cyc_cols: Vec<_> = cycles.iter().map(|v| v.coords().to_vec()).collect();
            let cut_cols: Vec<_> = cuts.iter().map(|v| v.coords().to_vec()).collect();
            let all: Vec<_> = cyc_cols.iter().chain(&cut_cols).cloned().collect();
            use crate::matrix::DenseMatrix;
            assert_eq!(DenseMatrix::from_columns(&cyc_cols).unwrap().rank(), c.cycle_dim());
            assert_eq!(DenseMatrix::from_columns(&cut_cols).unwrap().rank(), c.cut_dim());
            assert_eq!(DenseMatrix::from_columns(&all).unwrap().rank(), c.num_edges());
        }
    }
}
