//! Group averaging: the projector `Π = ∫ g dg` onto the fixed-point
//! subspace, and invariant inner products.
//!
//! Finite groups and quadrature rules give `Π` to machine precision. Monte
//! Carlo averages are only `O(N^{-1/2})` accurate, so the raw mean is
//! symmetrized under the invariant inner product and replaced by the
//! orthogonal projector onto its eigenvectors with eigenvalue above `1/2`;
//! the distance between the raw mean and that projector is kept as
//! [`AverageOperator::sampling_deviation`].

use std::fmt;

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::group::Scheme;
use crate::numerics::{max_abs, max_abs_diff, Subspace, Tolerance};

/// Idempotence bound for exact averages (finite groups, quadrature).
pub const EXACT_IDEMPOTENCE_BOUND: f64 = 1e-8;
/// Idempotence bound for Monte Carlo averages.
pub const MONTE_CARLO_IDEMPOTENCE_BOUND: f64 = 1e-3;
/// Condition number beyond which an averaged inner product is rejected.
pub const MAX_METRIC_CONDITION: f64 = 1e12;

/// How the elements being averaged were produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum SchemeRef {
    /// Every element of a finite group, equally weighted.
    Enumeration,
    Sampled(Scheme),
}

impl SchemeRef {
    pub fn is_monte_carlo(&self) -> bool {
        matches!(self, SchemeRef::Sampled(Scheme::MonteCarlo { .. }))
    }

    pub fn idempotence_bound(&self) -> f64 {
        if self.is_monte_carlo() {
            MONTE_CARLO_IDEMPOTENCE_BOUND
        } else {
            EXACT_IDEMPOTENCE_BOUND
        }
    }
}

impl fmt::Display for SchemeRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SchemeRef::Enumeration => write!(f, "enumeration"),
            SchemeRef::Sampled(s) => write!(f, "{s}"),
        }
    }
}

/// The averaging projector, either on the ambient space or restricted to an
/// invariant subspace (in that subspace's orthonormal coordinates).
#[derive(Debug, Clone, PartialEq)]
pub struct AverageOperator {
    matrix: DMatrix<f64>,
    gram: DMatrix<f64>,
    group_ref: String,
    scheme: SchemeRef,
    sampling_deviation: f64,
}

impl AverageOperator {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// Invariant inner product in the operator's coordinates.
    pub fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }

    pub fn group_ref(&self) -> &str {
        &self.group_ref
    }

    pub fn scheme(&self) -> SchemeRef {
        self.scheme
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// `max |Π² − Π|`.
    pub fn idempotence_residual(&self) -> f64 {
        max_abs_diff(&(&self.matrix * &self.matrix), &self.matrix)
    }

    /// `max |G Π − Πᵀ G|`, zero for a gram-self-adjoint operator.
    pub fn self_adjointness_residual(&self) -> f64 {
        max_abs_diff(
            &(&self.gram * &self.matrix),
            &(self.matrix.transpose() * &self.gram),
        )
    }

    /// For Monte Carlo averages, `max |Π_raw − Π|`; zero otherwise.
    pub fn sampling_deviation(&self) -> f64 {
        self.sampling_deviation
    }

    pub fn apply(&self, v: &DVector<f64>) -> DVector<f64> {
        &self.matrix * v
    }
}

/// Eigen-decomposition of `Π` made symmetric in gram-orthonormal
/// coordinates; returns `(Lᵀ, eigenvalues, eigenvectors)` with `G = L Lᵀ`.
fn symmetric_spectrum(
    matrix: &DMatrix<f64>,
    gram: &DMatrix<f64>,
) -> Result<(DMatrix<f64>, SymmetricEigen<f64, nalgebra::Dyn>)> {
    let chol = Cholesky::new(gram.clone())
        .ok_or_else(|| Error::NotPositiveDefinite("averaging gram".into()))?;
    let lt = chol.l().transpose();
    let lt_inv = lt
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::NotPositiveDefinite("averaging gram".into()))?;
    let c = &lt * matrix * &lt_inv;
    let sym = (&c + c.transpose()) * 0.5;
    Ok((lt, SymmetricEigen::new(sym)))
}

/// Average of `elements`, optionally restricted to the invariant subspace
/// `restrict_to`.
///
/// `gram` is an invariant inner product on the ambient space; it is only
/// consulted for Monte Carlo clean-up and self-adjointness checks.
pub fn average_operator(
    elements: &[DMatrix<f64>],
    gram: &DMatrix<f64>,
    group_ref: &str,
    scheme: SchemeRef,
    restrict_to: Option<&Subspace>,
    tol: &Tolerance,
) -> Result<AverageOperator> {
    let n = gram.nrows();
    if elements.is_empty() {
        return Err(Error::UnsupportedScheme(
            "averaging over no elements".into(),
        ));
    }
    for g in elements {
        if g.nrows() != n || g.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: g.nrows(),
            });
        }
    }
    let (mats, gram): (Vec<DMatrix<f64>>, DMatrix<f64>) = match restrict_to {
        None => (elements.to_vec(), gram.clone()),
        Some(sub) => {
            if sub.ambient_dim() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    actual: sub.ambient_dim(),
                });
            }
            for (index, g) in elements.iter().enumerate() {
                let residual = sub.invariance_residual(g);
                if residual > tol.match_eps * max_abs(g).max(1.0) {
                    return Err(Error::NotInvariant { index, residual });
                }
            }
            let k = sub.dim();
            (
                elements.iter().map(|g| sub.restrict(g)).collect(),
                DMatrix::identity(k, k),
            )
        }
    };
    let k = gram.nrows();
    // Pairwise summation keeps the result independent of any parallel split.
    let raw = pairwise_sum(&mats, k) / mats.len() as f64;

    let (matrix, sampling_deviation) = if scheme.is_monte_carlo() && k > 0 {
        let (lt, eig) = symmetric_spectrum(&raw, &gram)?;
        let keep: Vec<usize> = (0..k).filter(|&i| eig.eigenvalues[i] > 0.5).collect();
        let u = DMatrix::from_fn(k, keep.len(), |i, j| eig.eigenvectors[(i, keep[j])]);
        // Π = L⁻ᵀ U Uᵀ Lᵀ, the gram-orthogonal projector onto L⁻ᵀ U.
        let lt_inv = lt
            .clone()
            .try_inverse()
            .expect("checked in symmetric_spectrum");
        let cleaned = &lt_inv * &u * u.transpose() * &lt;
        let deviation = max_abs_diff(&raw, &cleaned);
        (cleaned, deviation)
    } else {
        (raw, 0.0)
    };

    let op = AverageOperator {
        matrix,
        gram,
        group_ref: group_ref.to_string(),
        scheme,
        sampling_deviation,
    };
    let residual = op.idempotence_residual();
    let bound = scheme.idempotence_bound() * max_abs(&op.matrix).max(1.0);
    if residual > bound {
        return Err(Error::AveragingResidual { residual, bound });
    }
    Ok(op)
}

fn pairwise_sum(mats: &[DMatrix<f64>], k: usize) -> DMatrix<f64> {
    match mats.len() {
        0 => DMatrix::zeros(k, k),
        1 => mats[0].clone(),
        len => {
            let (a, b) = mats.split_at(len / 2);
            pairwise_sum(a, k) + pairwise_sum(b, k)
        }
    }
}

/// Image of `Π`: eigenvectors of its symmetric part with eigenvalue above
/// `1/2`, orthonormal under the operator's gram.
pub fn fixed_subspace(op: &AverageOperator, tol: &Tolerance) -> Result<Subspace> {
    let k = op.dim();
    if k == 0 {
        return Subspace::from_columns(&DMatrix::zeros(0, 0), &op.gram, tol);
    }
    let (lt, eig) = symmetric_spectrum(&op.matrix, &op.gram)?;
    let keep: Vec<usize> = (0..k).filter(|&i| eig.eigenvalues[i] > 0.5).collect();
    let u = DMatrix::from_fn(k, keep.len(), |i, j| eig.eigenvectors[(i, keep[j])]);
    let vectors = lt
        .solve_upper_triangular(&u)
        .ok_or_else(|| Error::NotPositiveDefinite("averaging gram".into()))?;
    Subspace::from_columns(&vectors, &op.gram, tol)
}

/// `max ‖g v − v‖` over the given elements and the basis of `fixed`.
pub fn fixing_residual(fixed: &Subspace, elements: &[DMatrix<f64>]) -> f64 {
    let basis = fixed.basis_vectors();
    elements
        .iter()
        .flat_map(|g| basis.iter().map(move |v| (g * v - v).amax()))
        .fold(0.0, f64::max)
}

/// An inner product invariant under the group.
#[derive(Debug, Clone, PartialEq)]
pub struct InvariantMetric {
    pub gram: DMatrix<f64>,
}

impl InvariantMetric {
    pub fn euclidean(n: usize) -> Self {
        InvariantMetric {
            gram: DMatrix::identity(n, n),
        }
    }

    /// `max |gᵀ G g − G|` over `elements`.
    pub fn invariance_residual(&self, elements: &[DMatrix<f64>]) -> f64 {
        elements
            .iter()
            .map(|g| max_abs_diff(&(g.transpose() * &self.gram * g), &self.gram))
            .fold(0.0, f64::max)
    }
}

/// `G = mean_g gᵀ · base · g`.
pub fn invariant_metric(
    elements: &[DMatrix<f64>],
    base: &DMatrix<f64>,
    tol: &Tolerance,
) -> Result<InvariantMetric> {
    let n = base.nrows();
    if max_abs_diff(base, &base.transpose()) > tol.match_eps * max_abs(base).max(1.0) {
        return Err(Error::NotPositiveDefinite("base is not symmetric".into()));
    }
    if elements.is_empty() {
        return Err(Error::UnsupportedScheme(
            "averaging over no elements".into(),
        ));
    }
    let terms: Vec<DMatrix<f64>> = elements.iter().map(|g| g.transpose() * base * g).collect();
    let avg = pairwise_sum(&terms, n) / elements.len() as f64;
    let gram = (&avg + avg.transpose()) * 0.5;
    let eigs = gram.clone().symmetric_eigenvalues();
    let lo = eigs.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = eigs.iter().cloned().fold(0.0_f64, f64::max);
    if n > 0 && (lo <= 0.0 || hi / lo > MAX_METRIC_CONDITION) {
        return Err(Error::DegenerateMetric {
            condition: if lo <= 0.0 { f64::INFINITY } else { hi / lo },
        });
    }
    Ok(InvariantMetric { gram })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::{BuiltinGroup, FiniteGroup, HaarSampler};
    use std::f64::consts::TAU;

    fn m(n: usize, xs: &[f64]) -> DMatrix<f64> {
        DMatrix::from_row_slice(n, n, xs)
    }

    fn tol() -> Tolerance {
        Tolerance::default()
    }

    fn avg(elements: &[DMatrix<f64>]) -> AverageOperator {
        let n = elements[0].nrows();
        average_operator(
            elements,
            &DMatrix::identity(n, n),
            "test",
            SchemeRef::Enumeration,
            None,
            &tol(),
        )
        .unwrap()
    }

    #[test]
    fn antipodal_pair_averages_to_zero() {
        let i = DMatrix::identity(2, 2);
        let op = avg(&[i.clone(), -i]);
        assert_eq!(op.matrix(), &DMatrix::zeros(2, 2));
        assert_eq!(fixed_subspace(&op, &tol()).unwrap().dim(), 0);
    }

    #[test]
    fn trivial_group_averages_to_identity() {
        let op = avg(&[DMatrix::identity(3, 3)]);
        assert_eq!(op.matrix(), &DMatrix::identity(3, 3));
        assert_eq!(fixed_subspace(&op, &tol()).unwrap().dim(), 3);
    }

    #[test]
    fn z_rotation_quadrature_projects_onto_axis() {
        // Oracle: the trapezoid rule on 64 uniform nodes integrates cos θ and
        // sin θ to exactly zero, leaving diag(0, 0, 1).
        let nodes = 64;
        let (mut c, mut s) = (0.0, 0.0);
        for j in 0..nodes {
            let t = TAU * j as f64 / nodes as f64;
            c += t.cos() / nodes as f64;
            s += t.sin() / nodes as f64;
        }
        assert!(c.abs() < 1e-15 && s.abs() < 1e-15);
        let expected = m(3, &[c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0]);

        let lz = m(3, &[0.0, -1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        let elements: Vec<_> = (0..nodes)
            .map(|j| crate::group::circle_exp(&lz, TAU * j as f64 / nodes as f64))
            .collect();
        let op = average_operator(
            &elements,
            &DMatrix::identity(3, 3),
            "z-circle",
            SchemeRef::Sampled(Scheme::Quadrature { nodes }),
            None,
            &tol(),
        )
        .unwrap();
        assert!(max_abs_diff(op.matrix(), &expected) <= 1e-8);
        let fixed = fixed_subspace(&op, &tol()).unwrap();
        assert_eq!(fixed.dim(), 1);
        assert!((fixed.basis()[(2, 0)] - 1.0).abs() < 1e-12);
        assert!(fixing_residual(&fixed, &elements) <= tol().match_eps);
    }

    #[test]
    fn sign_flip_on_line_has_no_fixed_vectors() {
        let g = FiniteGroup::close(1, &[m(1, &[-1.0])], &tol(), 8).unwrap();
        let op = avg(g.elements());
        assert_eq!(fixed_subspace(&op, &tol()).unwrap().dim(), 0);
    }

    #[test]
    fn c4_average_is_zero() {
        let g = FiniteGroup::close(2, &[m(2, &[0.0, -1.0, 1.0, 0.0])], &tol(), 8).unwrap();
        // Oracle: I + r + r² + r³ = 0 entrywise.
        let r = m(2, &[0.0, -1.0, 1.0, 0.0]);
        let sum = (0..4).fold(DMatrix::zeros(2, 2), |acc, k| acc + r.pow(k));
        assert_eq!(sum, DMatrix::zeros(2, 2));
        let op = avg(g.elements());
        assert!(max_abs(op.matrix()) < 1e-15);
        assert_eq!(fixed_subspace(&op, &tol()).unwrap().dim(), 0);
    }

    #[test]
    fn monte_carlo_so3_is_cleaned_to_zero() {
        let samples = HaarSampler::new(BuiltinGroup::SO3, 11, Scheme::MonteCarlo { count: 10_000 })
            .sample()
            .unwrap();
        let op = average_operator(
            &samples,
            &DMatrix::identity(3, 3),
            "SO3",
            SchemeRef::Sampled(Scheme::MonteCarlo { count: 10_000 }),
            None,
            &tol(),
        )
        .unwrap();
        assert_eq!(op.matrix(), &DMatrix::zeros(3, 3));
        assert!(op.sampling_deviation() < 0.05);
        assert!(op.sampling_deviation() > 0.0);
        assert!(op.idempotence_residual() <= MONTE_CARLO_IDEMPOTENCE_BOUND);
    }

    #[test]
    fn restriction_requires_invariance() {
        let swap = m(2, &[0.0, 1.0, 1.0, 0.0]);
        let e1 = Subspace::span(&[DVector::from_row_slice(&[1.0, 0.0])], 2, &tol()).unwrap();
        let err = average_operator(
            &[DMatrix::identity(2, 2), swap.clone()],
            &DMatrix::identity(2, 2),
            "swap",
            SchemeRef::Enumeration,
            Some(&e1),
            &tol(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::NotInvariant { index: 1, .. }));

        let diag = Subspace::span(&[DVector::from_row_slice(&[1.0, 1.0])], 2, &tol()).unwrap();
        let op = average_operator(
            &[DMatrix::identity(2, 2), swap],
            &DMatrix::identity(2, 2),
            "swap",
            SchemeRef::Enumeration,
            Some(&diag),
            &tol(),
        )
        .unwrap();
        assert_eq!(op.dim(), 1);
        assert!((op.matrix()[(0, 0)] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn invariant_metric_cases() {
        let t = tol();
        let rot = m(2, &[0.0, -1.0, 1.0, 0.0]);
        let g = FiniteGroup::close(2, &[rot], &t, 8).unwrap();
        let metric = invariant_metric(g.elements(), &DMatrix::identity(2, 2), &t).unwrap();
        assert!(max_abs_diff(&metric.gram, &DMatrix::identity(2, 2)) <= t.match_eps);

        let base = m(2, &[1.0, 0.0, 0.0, 4.0]);
        let trivial = invariant_metric(&[DMatrix::identity(2, 2)], &base, &t).unwrap();
        assert_eq!(trivial.gram, base);

        // Oracle: (diag(1,4) + diag(4,1)) / 2.
        let swap = m(2, &[0.0, 1.0, 1.0, 0.0]);
        let c2 = invariant_metric(&[DMatrix::identity(2, 2), swap.clone()], &base, &t).unwrap();
        assert!(max_abs_diff(&c2.gram, &m(2, &[2.5, 0.0, 0.0, 2.5])) < 1e-15);
        assert!(c2.invariance_residual(&[swap]) < 1e-15);
    }

    #[test]
    fn degenerate_metric_is_rejected() {
        let base = m(2, &[1.0, 0.0, 0.0, 1e-14]);
        let err = invariant_metric(&[DMatrix::identity(2, 2)], &base, &tol()).unwrap_err();
        assert!(matches!(err, Error::DegenerateMetric { .. }));
    }

    #[test]
    fn non_orthogonal_group_average_is_gram_self_adjoint() {
        let t = tol();
        let q = m(2, &[1.0, 0.5, 0.0, 1.0]);
        let qi = q.clone().try_inverse().unwrap();
        let swap = m(2, &[0.0, 1.0, 1.0, 0.0]);
        let g = FiniteGroup::close(2, &[&q * swap * &qi], &t, 8).unwrap();
        let metric = invariant_metric(g.elements(), &DMatrix::identity(2, 2), &t).unwrap();
        let op = average_operator(
            g.elements(),
            &metric.gram,
            "sheared swap",
            SchemeRef::Enumeration,
            None,
            &t,
        )
        .unwrap();
        assert!(op.self_adjointness_residual() <= t.match_eps);
        let fixed = fixed_subspace(&op, &t).unwrap();
        assert_eq!(fixed.dim(), 1);
        assert!(fixing_residual(&fixed, g.elements()) <= t.match_eps);
        // Vectors gram-orthogonal to the fixed line are annihilated.
        let perp = fixed.orthogonal_complement();
        for v in perp.basis_vectors() {
            assert!(op.apply(&v).amax() <= t.match_eps);
        }
    }
}
