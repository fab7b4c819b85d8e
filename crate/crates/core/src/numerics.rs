//! Tolerance-aware dense linear algebra for small dimensions.
//!
//! Every subspace carries the inner product (a Gram matrix) under which its
//! basis is orthonormal. Non-Euclidean inner products are handled through the
//! Cholesky factor `G = L Lᵀ`: the map `v ↦ Lᵀ v` is an isometry onto
//! Euclidean space, so complements and ranks are computed there and mapped
//! back with `L⁻ᵀ`.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Numerical cutoffs used for rank decisions and matrix comparisons.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerance {
    /// Relative singular-value cutoff.
    pub rank_eps: f64,
    /// Entrywise cutoff for "these two matrices/vectors agree".
    pub match_eps: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance {
            rank_eps: 1e-9,
            match_eps: 1e-8,
        }
    }
}

impl Tolerance {
    pub fn new(rank_eps: f64, match_eps: f64) -> Result<Self> {
        let tol = Tolerance {
            rank_eps,
            match_eps,
        };
        tol.validate()?;
        Ok(tol)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, value) in [("rank_eps", self.rank_eps), ("match_eps", self.match_eps)] {
            if !value.is_finite() || value <= 0.0 {
                return Err(Error::InvalidTolerance(format!(
                    "{name} must be positive and finite, got {value}"
                )));
            }
        }
        Ok(())
    }

    /// Singular values at or below this are treated as zero.
    pub fn rank_cutoff(&self, largest_singular_value: f64) -> f64 {
        self.rank_eps * largest_singular_value.max(1.0)
    }
}

/// Largest absolute entry.
pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

/// Largest absolute entrywise difference between two equally shaped matrices.
pub fn max_abs_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    debug_assert_eq!(a.shape(), b.shape());
    a.iter()
        .zip(b.iter())
        .fold(0.0_f64, |acc, (x, y)| acc.max((x - y).abs()))
}

/// `max |mᵀ m − I|`; zero for orthogonal matrices.
pub fn orthogonality_residual(m: &DMatrix<f64>) -> f64 {
    let n = m.ncols();
    max_abs_diff(&(m.transpose() * m), &DMatrix::identity(n, n))
}

/// Numerical rank at `rank_eps · max(1, σ_max)`.
pub fn numerical_rank(m: &DMatrix<f64>, tol: &Tolerance) -> usize {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0;
    }
    let sv = m.singular_values();
    let smax = sv.iter().cloned().fold(0.0_f64, f64::max);
    let cutoff = tol.rank_cutoff(smax);
    sv.iter().filter(|&&s| s > cutoff).count()
}

/// Stack column vectors into an `n × k` matrix.
pub fn columns(vectors: &[DVector<f64>], n: usize) -> Result<DMatrix<f64>> {
    for v in vectors {
        if v.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: v.len(),
            });
        }
    }
    Ok(DMatrix::from_fn(n, vectors.len(), |i, j| vectors[j][i]))
}

/// Flip the sign of each column so that its largest-magnitude entry is
/// positive. Makes reported bases stable across platforms.
fn canonical_signs(m: &mut DMatrix<f64>) {
    for mut col in m.column_iter_mut() {
        let mut pivot = 0.0_f64;
        for v in col.iter() {
            if v.abs() > pivot.abs() + 1e-12 {
                pivot = *v;
            }
        }
        if pivot < 0.0 {
            col.neg_mut();
        }
    }
}

fn factor_gram(gram: &DMatrix<f64>, tol: &Tolerance) -> Result<Cholesky<f64, Dyn>> {
    if !gram.is_square() {
        return Err(Error::NotPositiveDefinite(format!(
            "gram is {}x{}",
            gram.nrows(),
            gram.ncols()
        )));
    }
    let asym = max_abs_diff(gram, &gram.transpose());
    if asym > tol.match_eps * max_abs(gram).max(1.0) {
        return Err(Error::NotPositiveDefinite(format!("asymmetry {asym:e}")));
    }
    let sym = (gram + gram.transpose()) * 0.5;
    let min_eig = sym
        .clone()
        .symmetric_eigenvalues()
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min);
    if gram.nrows() > 0 && min_eig <= tol.rank_eps {
        return Err(Error::NotPositiveDefinite(format!(
            "smallest eigenvalue {min_eig:e}"
        )));
    }
    Cholesky::new(sym).ok_or_else(|| Error::NotPositiveDefinite("cholesky failed".into()))
}

/// A linear subspace of `ℝⁿ` with a basis orthonormal under `gram`.
#[derive(Debug, Clone, PartialEq)]
pub struct Subspace {
    gram: DMatrix<f64>,
    /// `n × k`, columns are the basis vectors.
    basis: DMatrix<f64>,
}

impl Subspace {
    /// The zero subspace of `ℝⁿ` with the Euclidean inner product.
    pub fn zero(n: usize) -> Self {
        Subspace {
            gram: DMatrix::identity(n, n),
            basis: DMatrix::zeros(n, 0),
        }
    }

    /// The whole of `ℝⁿ`, Euclidean.
    pub fn full(n: usize) -> Self {
        Subspace {
            gram: DMatrix::identity(n, n),
            basis: DMatrix::identity(n, n),
        }
    }

    /// Orthonormal basis (under `gram`) of the span of `vectors`.
    pub fn orthonormalize(
        vectors: &[DVector<f64>],
        gram: &DMatrix<f64>,
        tol: &Tolerance,
    ) -> Result<Self> {
        let n = gram.nrows();
        let stacked = columns(vectors, n)?;
        Self::from_columns(&stacked, gram, tol)
    }

    /// Euclidean span of `vectors` in `ℝⁿ`.
    pub fn span(vectors: &[DVector<f64>], n: usize, tol: &Tolerance) -> Result<Self> {
        Self::orthonormalize(vectors, &DMatrix::identity(n, n), tol)
    }

    /// Span of the columns of `m` under `gram`.
    pub fn from_columns(m: &DMatrix<f64>, gram: &DMatrix<f64>, tol: &Tolerance) -> Result<Self> {
        tol.validate()?;
        let n = gram.nrows();
        if m.nrows() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: m.nrows(),
            });
        }
        let chol = factor_gram(gram, tol)?;
        if m.ncols() == 0 {
            return Ok(Subspace {
                gram: gram.clone(),
                basis: DMatrix::zeros(n, 0),
            });
        }
        let lt = chol.l().transpose();
        let w = &lt * m;
        let svd = w.svd(true, false);
        let u = svd.u.expect("left singular vectors requested");
        let smax = svd.singular_values.iter().cloned().fold(0.0_f64, f64::max);
        let cutoff = tol.rank_cutoff(smax);
        let keep: Vec<usize> = (0..svd.singular_values.len())
            .filter(|&i| svd.singular_values[i] > cutoff)
            .collect();
        let mut euclid = DMatrix::from_fn(n, keep.len(), |i, j| u[(i, keep[j])]);
        canonical_signs(&mut euclid);
        Ok(Subspace {
            gram: gram.clone(),
            basis: Self::from_euclidean(&lt, &euclid),
        })
    }

    fn from_euclidean(lt: &DMatrix<f64>, e: &DMatrix<f64>) -> DMatrix<f64> {
        if e.ncols() == 0 {
            return DMatrix::zeros(lt.nrows(), 0);
        }
        lt.clone()
            .solve_upper_triangular(e)
            .expect("cholesky factor of a positive-definite gram is invertible")
    }

    /// Re-express this subspace under a different inner product.
    pub fn with_gram(&self, gram: &DMatrix<f64>, tol: &Tolerance) -> Result<Self> {
        Self::from_columns(&self.basis, gram, tol)
    }

    pub fn ambient_dim(&self) -> usize {
        self.gram.nrows()
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn is_zero(&self) -> bool {
        self.dim() == 0
    }

    pub fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    pub fn basis_vectors(&self) -> Vec<DVector<f64>> {
        self.basis.column_iter().map(|c| c.into_owned()).collect()
    }

    pub fn inner(&self, a: &DVector<f64>, b: &DVector<f64>) -> f64 {
        (a.transpose() * &self.gram * b)[(0, 0)]
    }

    pub fn norm(&self, v: &DVector<f64>) -> f64 {
        self.inner(v, v).max(0.0).sqrt()
    }

    /// Coordinates of `v` in this basis, `Bᵀ G v`. Exact for `v` in the span.
    pub fn coordinates(&self, v: &DVector<f64>) -> DVector<f64> {
        self.basis.transpose() * (&self.gram * v)
    }

    /// The ambient vector with the given coordinates.
    pub fn embed(&self, coords: &DVector<f64>) -> DVector<f64> {
        &self.basis * coords
    }

    /// Matrix of the linear map `a` restricted to this subspace, in basis
    /// coordinates: `Bᵀ G a B`. Meaningful when the subspace is `a`-invariant.
    pub fn restrict(&self, a: &DMatrix<f64>) -> DMatrix<f64> {
        self.basis.transpose() * &self.gram * a * &self.basis
    }

    /// Orthogonal projection of `v` onto the subspace.
    pub fn project(&self, v: &DVector<f64>) -> DVector<f64> {
        self.embed(&self.coordinates(v))
    }

    /// Norm of the component of `v` orthogonal to the subspace.
    pub fn residual(&self, v: &DVector<f64>) -> f64 {
        self.norm(&(v - self.project(v)))
    }

    /// The gram-orthogonal complement.
    pub fn orthogonal_complement(&self) -> Subspace {
        let n = self.ambient_dim();
        // The gram was validated on construction.
        let chol = Cholesky::new(self.gram.clone()).expect("validated gram");
        let lt = chol.l().transpose();
        let euclid = if self.is_zero() {
            DMatrix::identity(n, n)
        } else {
            let u = &lt * &self.basis;
            let rest = DMatrix::identity(n, n) - &u * u.transpose();
            let eig = SymmetricEigen::new(rest);
            let keep: Vec<usize> = (0..n).filter(|&i| eig.eigenvalues[i] > 0.5).collect();
            let mut m = DMatrix::from_fn(n, keep.len(), |i, j| eig.eigenvectors[(i, keep[j])]);
            canonical_signs(&mut m);
            m
        };
        Subspace {
            gram: self.gram.clone(),
            basis: Self::from_euclidean(&lt, &euclid),
        }
    }

    /// Largest deviation of the basis from orthonormality under `gram`.
    pub fn orthonormality_residual(&self) -> f64 {
        let k = self.dim();
        max_abs_diff(
            &(self.basis.transpose() * &self.gram * &self.basis),
            &DMatrix::identity(k, k),
        )
    }

    /// Largest residual of `a · b` outside the subspace, over basis vectors
    /// `b`. Zero when the subspace is `a`-invariant.
    pub fn invariance_residual(&self, a: &DMatrix<f64>) -> f64 {
        self.basis_vectors()
            .iter()
            .map(|b| self.residual(&(a * b)))
            .fold(0.0, f64::max)
    }
}

/// Whether `a` and `b` are the same subspace at `match_eps`.
pub fn subspace_equal(a: &Subspace, b: &Subspace, tol: &Tolerance) -> Result<bool> {
    if a.ambient_dim() != b.ambient_dim() || max_abs_diff(a.gram(), b.gram()) > tol.match_eps {
        return Err(Error::IncompatibleSubspaces);
    }
    if a.dim() != b.dim() {
        return Ok(false);
    }
    let within = |x: &Subspace, y: &Subspace| {
        x.basis_vectors()
            .iter()
            .all(|v| y.residual(v) <= tol.match_eps)
    };
    Ok(within(a, b) && within(b, a))
}
