//! The Impartial Culture covariance model of a single voter's pairwise
//! comparison vector, its inverse, and its two-eigenspace structure.
//!
//! Σ has entry 1 on the diagonal, +1/3 for two edges sharing a tail or
//! sharing a head, −1/3 when one edge's head is the other's tail, and 0 for
//! disjoint edges. Γ = Σ⁻¹ has diagonal 3(ℓ−1)/(ℓ+1), −3/(ℓ+1) for shared
//! tail/head, +3/(ℓ+1) for head-to-tail, and 0 otherwise.
//!
//! Σ acts as 1/3 on the cycle space and as (ℓ+1)/3 on the cut space, so the
//! symmetric square root is applied in O(ℓ²) with one cut projection.

use num_rational::Rational64;
use num_traits::Float;
use serde_json::json;

use crate::edge_space::{fundamental_cycle_basis, star_cut_basis, CandidateCount, EdgeVector};
use crate::error::{domain_err, Result};
use crate::matrix::DenseMatrix;
use crate::scalar::Scalar;

/// How two oriented edges `(a,b)`, `(c,d)` (with `a<b`, `c<d`) meet.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Incidence {
    Same,
    Disjoint,
    /// Shared tail or shared head.
    Parallel,
    /// One edge's head is the other's tail.
    Chained,
}

fn incidence((a, b): (usize, usize), (c, d): (usize, usize)) -> Incidence {
    if (a, b) == (c, d) {
        Incidence::Same
    } else if a == c || b == d {
        Incidence::Parallel
    } else if b == c || a == d {
        Incidence::Chained
    } else {
        Incidence::Disjoint
    }
}

fn edge_matrix<T: Scalar>(ell: CandidateCount, entry: impl Fn(Incidence) -> T) -> DenseMatrix<T> {
    let pairs: Vec<_> = ell.pairs().collect();
    let n = pairs.len();
    DenseMatrix::from_fn(n, n, |r, c| entry(incidence(pairs[r], pairs[c])))
}

/// Σ, the covariance of one voter's ±1 comparison vector.
pub fn covariance<T: Scalar>(ell: CandidateCount) -> DenseMatrix<T> {
    let third = T::from_ratio(1, 3);
    edge_matrix(ell, |inc| match inc {
        Incidence::Same => T::one(),
        Incidence::Parallel => third,
        Incidence::Chained => -third,
        Incidence::Disjoint => T::zero(),
    })
}

/// Γ = Σ⁻¹ in closed form.
pub fn precision<T: Scalar>(ell: CandidateCount) -> DenseMatrix<T> {
    let n = ell.get() as i64;
    let off = T::from_ratio(3, n + 1);
    let diag = T::from_ratio(3 * (n - 1), n + 1);
    edge_matrix(ell, |inc| match inc {
        Incidence::Same => diag,
        Incidence::Parallel => -off,
        Incidence::Chained => off,
        Incidence::Disjoint => T::zero(),
    })
}

/// 3Σ, with integer entries in {3, ±1, 0}.
pub fn scaled_covariance(ell: CandidateCount) -> DenseMatrix<i64> {
    covariance::<Rational64>(ell).map(|v| (v * 3).to_integer())
}

/// (ℓ+1)Γ/3, with integer entries in {ℓ−1, ∓1, 0}.
pub fn scaled_precision(ell: CandidateCount) -> DenseMatrix<i64> {
    let s = Rational64::new(ell.get() as i64 + 1, 3);
    precision::<Rational64>(ell).map(|v| (v * s).to_integer())
}

/// The two eigenvalues of Σ with the dimensions of their eigenspaces.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Eigenstructure<T> {
    /// Eigenvalue on the cycle space, 1/3.
    pub lambda_cycle: T,
    /// Eigenvalue on the cut space, (ℓ+1)/3.
    pub lambda_cut: T,
    pub dim_cycle: usize,
    pub dim_cut: usize,
}

pub fn eigenstructure<T: Scalar>(ell: CandidateCount) -> Eigenstructure<T> {
    Eigenstructure {
        lambda_cycle: T::from_ratio(1, 3),
        lambda_cut: T::from_ratio(ell.get() as i64 + 1, 3),
        dim_cycle: ell.cycle_dim(),
        dim_cut: ell.cut_dim(),
    }
}

/// Largest residuals `‖Σc − λ_cycle·c‖_∞` over fundamental cycles and
/// `‖Σu − λ_cut·u‖_∞` over star cuts, by dense multiplication.
pub fn eigen_residuals<T: Scalar>(ell: CandidateCount) -> (T, T) {
    let sigma = covariance::<T>(ell);
    let eig = eigenstructure::<T>(ell);
    let residual = |basis: Vec<EdgeVector<T>>, lambda: T| {
        basis.iter().fold(T::zero(), |worst, v| {
            let sv = sigma.matvec(v.coords()).expect("square matrix");
            sv.iter().zip(v.coords()).fold(worst, |w, (&a, &b)| {
                let d = (a - lambda * b).abs();
                if d > w {
                    d
                } else {
                    w
                }
            })
        })
    };
    (
        residual(fundamental_cycle_basis(ell), eig.lambda_cycle),
        residual(star_cut_basis(ell), eig.lambda_cut),
    )
}

/// Σ and its spectral data for ℓ candidates.
///
/// The dense matrices are built on request; sampling and density only
/// touch the eigenvalues.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceModel<T> {
    ell: CandidateCount,
    eigen: Eigenstructure<T>,
    log_det_sigma: f64,
}

impl<T: Scalar> CovarianceModel<T> {
    pub fn new(ell: CandidateCount) -> Self {
        let eigen = eigenstructure::<T>(ell);
        let log_det_sigma = eigen.dim_cycle as f64 * eigen.lambda_cycle.to_f64().ln()
            + eigen.dim_cut as f64 * eigen.lambda_cut.to_f64().ln();
        Self { ell, eigen, log_det_sigma }
    }

    pub fn ell(&self) -> CandidateCount {
        self.ell
    }

    pub fn eigen(&self) -> &Eigenstructure<T> {
        &self.eigen
    }

    pub fn lambda_cycle(&self) -> T {
        self.eigen.lambda_cycle
    }

    pub fn lambda_cut(&self) -> T {
        self.eigen.lambda_cut
    }

    pub fn sigma(&self) -> DenseMatrix<T> {
        covariance(self.ell)
    }

    pub fn gamma(&self) -> DenseMatrix<T> {
        precision(self.ell)
    }

    /// ln |Σ| = dim_cycle·ln λ_cycle + dim_cut·ln λ_cut.
    pub fn log_det_sigma(&self) -> f64 {
        self.log_det_sigma
    }

    /// |Σ|. Underflows to 0 for large ℓ; prefer [`log_det_sigma`](Self::log_det_sigma).
    pub fn det_sigma(&self) -> f64 {
        self.log_det_sigma.exp()
    }

    /// `xᵀΓx = ‖y‖²/λ_cycle + ‖z‖²/λ_cut` with `y`, `z` the cycle and cut parts.
    pub fn quadratic_form(&self, x: &EdgeVector<T>) -> Result<T> {
        self.check_ell(x.ell())?;
        let z = x.project_cut();
        let y = x - &z;
        Ok(y.norm_sq() / self.eigen.lambda_cycle + z.norm_sq() / self.eigen.lambda_cut)
    }

    /// `xᵀΓx` by dense multiplication. O(ℓ⁴); for cross-checking.
    pub fn quadratic_form_dense(&self, x: &EdgeVector<T>) -> Result<T> {
        self.check_ell(x.ell())?;
        let gx = self.gamma().matvec(x.coords())?;
        Ok(gx.iter().zip(x.coords()).fold(T::zero(), |acc, (&a, &b)| acc + a * b))
    }

    fn check_ell(&self, other: CandidateCount) -> Result<()> {
        if other != self.ell {
            return Err(domain_err!("model has {} candidates, vector has {other}", self.ell));
        }
        Ok(())
    }
}

impl<F: Scalar + Float> CovarianceModel<F> {
    /// `A·w` for the symmetric root `A = √λ_cycle·(I − P) + √λ_cut·P`,
    /// where `P` is the cut projector. `A·Aᵀ = Σ`.
    pub fn spectral_factor_apply(&self, w: &[F]) -> Result<EdgeVector<F>> {
        if w.len() != self.ell.num_edges() {
            return Err(domain_err!(
                "expected {} raw coordinates, got {}",
                self.ell.num_edges(),
                w.len()
            ));
        }
        let mut out = vec![F::zero(); w.len()];
        let mut flows = vec![F::zero(); self.ell.get()];
        self.apply_factor_into(w, &mut out, &mut flows);
        EdgeVector::from_coords(self.ell, out)
    }

    /// Allocation-free form of [`spectral_factor_apply`](Self::spectral_factor_apply).
    /// `flows` is scratch of length ℓ.
    pub(crate) fn apply_factor_into(&self, w: &[F], out: &mut [F], flows: &mut [F]) {
        let ell = self.ell.get();
        let root_cycle = self.eigen.lambda_cycle.sqrt();
        let root_cut = self.eigen.lambda_cut.sqrt();
        // A·w = √λ_cycle·w + (√λ_cut − √λ_cycle)·P·w
        let gain = (root_cut - root_cycle) / F::from_int(ell as i64);
        flows.iter_mut().for_each(|f| *f = F::zero());
        let mut k = 0;
        for i in 0..ell {
            for j in i + 1..ell {
                flows[i] = flows[i] + w[k];
                flows[j] = flows[j] - w[k];
                k += 1;
            }
        }
        let mut k = 0;
        for i in 0..ell {
            for j in i + 1..ell {
                out[k] = root_cycle * w[k] + gain * (flows[i] - flows[j]);
                k += 1;
            }
        }
    }

    /// The factor `A` as a dense matrix, one column per basis vector.
    pub fn materialize_factor(&self) -> DenseMatrix<F> {
        let m = self.ell.num_edges();
        let columns: Vec<Vec<F>> = (0..m)
            .map(|c| {
                let mut e = vec![F::zero(); m];
                e[c] = F::one();
                self.spectral_factor_apply(&e).expect("length matches").into_coords()
            })
            .collect();
        DenseMatrix::from_columns(&columns).expect("equal columns")
    }

    /// Natural log of the N(0, Σ) density at `x`.
    pub fn log_density(&self, x: &EdgeVector<F>) -> Result<f64> {
        let q = self.quadratic_form(x)?.to_f64();
        let k = self.ell.num_edges() as f64;
        Ok(-0.5 * q - 0.5 * k * (2.0 * std::f64::consts::PI).ln() - 0.5 * self.log_det_sigma)
    }

    /// The N(0, Σ) density at `x`.
    pub fn density(&self, x: &EdgeVector<F>) -> Result<f64> {
        self.log_density(x).map(f64::exp)
    }

    /// Density via the dense Γ; O(ℓ⁴).
    pub fn density_dense(&self, x: &EdgeVector<F>) -> Result<f64> {
        let q = self.quadratic_form_dense(x)?.to_f64();
        let k = self.ell.num_edges() as f64;
        Ok((-0.5 * q).exp()
            / ((2.0 * std::f64::consts::PI).powf(k) * self.det_sigma()).sqrt())
    }
}

fn matrix_json(m: &DenseMatrix<Rational64>) -> serde_json::Value {
    let exact: Vec<Vec<String>> =
        m.iter_rows().map(|r| r.iter().map(|v| v.to_string()).collect()).collect();
    let float: Vec<Vec<f64>> =
        m.iter_rows().map(|r| r.iter().map(|v| Scalar::to_f64(*v)).collect()).collect();
    json!({ "exact": exact, "float": float })
}

/// Edge labels in flat order, `"i-j"` with 1-based ordinals.
pub fn edge_labels(ell: CandidateCount) -> Vec<String> {
    ell.pairs().map(|(i, j)| format!("{i}-{j}")).collect()
}

/// Σ and Γ as JSON: row-major arrays of exact rationals (`"1/3"`) and floats.
pub fn matrices_json(ell: CandidateCount) -> serde_json::Value {
    json!({
        "ell": ell.get(),
        "edges": edge_labels(ell),
        "sigma": matrix_json(&covariance::<Rational64>(ell)),
        "gamma": matrix_json(&precision::<Rational64>(ell)),
    })
}
