//! Internal tangent spaces of `ℝⁿ/G` at `[x]`.
//!
//! The main route reduces to the slice: the internal tangent space at `[x]`
//! is the fixed subspace `(T_xS)^{G_x}` of the isotropy representation,
//! obtained as the image of the averaging projector.
//!
//! The independent route works with relations only. Every `v − g·v` with
//! `g ∈ G_x` is identified with zero in the quotient, so the tangent space is
//! what survives after dividing by their span; [`internal_dim_oracle`] counts
//! it without ever averaging. [`relation_certificate`] makes the vanishing of
//! a single non-fixed vector explicit: coefficients `c₁..cₙ, c` summing to one
//! with `Σ cᵢ gⁱ·v + c g·v = 0`.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::averaging::{
    average_operator, fixed_subspace, fixing_residual, AverageOperator, SchemeRef,
};
use crate::error::{Error, Result};
use crate::geometry::{group_metric, slice_at, PointContext};
use crate::group::{
    check_orthogonal, FiniteGroup, GroupKind, GroupSpec, HaarSampler, HaarSettings,
    DEFAULT_CLOSURE_CAP,
};
use crate::numerics::{max_abs_diff, numerical_rank, subspace_equal, Subspace, Tolerance};

/// Numerical settings shared by the whole pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AnalysisSettings {
    pub tolerance: Tolerance,
    pub haar: HaarSettings,
    pub closure_cap: usize,
}

impl Default for AnalysisSettings {
    fn default() -> Self {
        AnalysisSettings {
            tolerance: Tolerance::default(),
            haar: HaarSettings::default(),
            closure_cap: DEFAULT_CLOSURE_CAP,
        }
    }
}

/// Result of the tangent pipeline at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct PointAnalysis {
    pub context: PointContext,
    /// `(T_xS)^{G_x}` in slice coordinates.
    pub fixed_subspace: Subspace,
    /// `None` when the stabilizer is trivial and no averaging was needed.
    pub average: Option<AverageOperator>,
    /// The fixed subspace re-embedded in `ℝⁿ`, orthonormal under the
    /// invariant metric.
    pub ambient_fixed_basis: Subspace,
    /// `max ‖g v − v‖` over isotropy elements and fixed basis vectors.
    pub fixing_residual: f64,
}

impl PointAnalysis {
    pub fn internal_dim(&self) -> usize {
        self.fixed_subspace.dim()
    }

    /// `Π` in slice coordinates (the identity for a trivial stabilizer).
    pub fn projector(&self) -> DMatrix<f64> {
        match &self.average {
            Some(op) => op.matrix().clone(),
            None => {
                let k = self.context.slice.dim();
                DMatrix::identity(k, k)
            }
        }
    }
}

/// Internal tangent space at `[x]`.
pub fn internal_tangent_space(
    spec: &GroupSpec,
    x: &DVector<f64>,
    settings: &AnalysisSettings,
) -> Result<PointAnalysis> {
    let tol = &settings.tolerance;
    let metric = group_metric(spec, tol, settings.closure_cap)?;
    let context = slice_at(spec, x, &metric, &settings.haar, tol, settings.closure_cap)?;
    let k = context.slice.dim();

    let (fixed, average) = if context.stabilizer.is_trivial() {
        // Manifold point: the whole slice survives.
        (Subspace::full(k), None)
    } else {
        let op = average_operator(
            &context.isotropy.elements,
            &DMatrix::identity(k, k),
            &spec.label(),
            context.isotropy.scheme,
            None,
            tol,
        )?;
        (fixed_subspace(&op, tol)?, Some(op))
    };
    let residual = fixing_residual(&fixed, &context.isotropy.elements);
    let ambient =
        Subspace::from_columns(&(context.slice.basis() * fixed.basis()), &metric.gram, tol)?;
    Ok(PointAnalysis {
        context,
        fixed_subspace: fixed,
        average,
        ambient_fixed_basis: ambient,
        fixing_residual: residual,
    })
}

/// `Π` for the whole group acting on `ℝⁿ`, with its fixed subspace `(ℝⁿ)^G`.
pub fn group_average(
    spec: &GroupSpec,
    settings: &AnalysisSettings,
) -> Result<(AverageOperator, Subspace)> {
    let tol = &settings.tolerance;
    let metric = group_metric(spec, tol, settings.closure_cap)?;
    let (elements, scheme) = match HaarSampler::for_spec(spec, &settings.haar) {
        Some(sampler) => (sampler.sample()?, SchemeRef::Sampled(sampler.scheme)),
        None => {
            let GroupKind::Finite { generators } = spec.kind() else {
                unreachable!("built-in groups have samplers")
            };
            let group =
                FiniteGroup::close(spec.ambient_dim(), generators, tol, settings.closure_cap)?;
            (group.elements().to_vec(), SchemeRef::Enumeration)
        }
    };
    let op = average_operator(&elements, &metric.gram, &spec.label(), scheme, None, tol)?;
    let fixed = fixed_subspace(&op, tol)?;
    Ok((op, fixed))
}

/// Span of `{v − g·v}` over `rep` and a basis of `ℝ^m`, i.e. the span of the
/// columns of every `I − g`.
pub fn relation_span(rep: &[DMatrix<f64>], m: usize, tol: &Tolerance) -> Result<Subspace> {
    let identity = DMatrix::<f64>::identity(m, m);
    let mut stacked = DMatrix::zeros(m, m * rep.len());
    for (i, g) in rep.iter().enumerate() {
        if g.nrows() != m || g.ncols() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                actual: g.nrows(),
            });
        }
        stacked.columns_mut(i * m, m).copy_from(&(&identity - g));
    }
    Subspace::from_columns(&stacked, &identity, tol)
}

/// `m − dim(relation_span(rep))`.
pub fn internal_dim_oracle(rep: &[DMatrix<f64>], m: usize, tol: &Tolerance) -> Result<usize> {
    Ok(m - relation_span(rep, m, tol)?.dim())
}

/// Batch size for sampled relation spans.
const ORACLE_BATCH: usize = 8;
/// Upper bound on sampled batches.
const ORACLE_MAX_BATCHES: usize = 64;

/// Relation-span oracle at a point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleResult {
    pub dim: usize,
    pub relation_dim: usize,
    pub elements_used: usize,
}

/// Oracle dimension from the isotropy representation at an analysed point.
/// Finite stabilizers use their enumeration. Continuous ones start from the
/// catalog's probe elements and add seeded Haar batches until two consecutive
/// batches leave the span dimension unchanged.
pub fn oracle_at(analysis: &PointAnalysis, seed: u64, tol: &Tolerance) -> Result<OracleResult> {
    let ctx = &analysis.context;
    let m = ctx.slice.dim();
    let finite = ctx.isotropy.lie_algebra.is_empty()
        && matches!(ctx.stabilizer, crate::group::StabilizerModel::Finite(_));
    let mut rep: Vec<DMatrix<f64>> = if finite {
        ctx.isotropy.elements.clone()
    } else {
        ctx.isotropy_candidates(seed, 0)
    };
    let mut dim = relation_span(&rep, m, tol)?.dim();
    if !finite {
        let mut stale = 0;
        let mut batch = 0;
        while stale < 2 && batch < ORACLE_MAX_BATCHES && dim < m {
            let more = ctx.isotropy_batch(seed.wrapping_add(1 + batch as u64), ORACLE_BATCH);
            rep.extend(more);
            let next = relation_span(&rep, m, tol)?.dim();
            stale = if next > dim { 0 } else { stale + 1 };
            dim = next;
            batch += 1;
        }
    }
    Ok(OracleResult {
        dim: m - dim,
        relation_dim: dim,
        elements_used: rep.len(),
    })
}

/// Something group elements can be drawn from for certificate searches.
pub trait ElementSource {
    /// Dimension of the space acted on.
    fn dim(&self) -> usize;
    /// Averaging projector `Π`.
    fn projector(&self) -> DMatrix<f64>;
    /// Candidate elements in a deterministic order: structured witnesses
    /// first, then `random` seeded samples. Finite sources return their full
    /// enumeration (non-identity elements first) and ignore `random`.
    fn candidates(&self, seed: u64, random: usize) -> Vec<DMatrix<f64>>;
}

/// An explicitly enumerated finite group.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteRep {
    elements: Vec<DMatrix<f64>>,
    dim: usize,
}

impl FiniteRep {
    pub fn new(elements: Vec<DMatrix<f64>>, dim: usize) -> Result<Self> {
        for g in &elements {
            if g.nrows() != dim || g.ncols() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    actual: g.nrows(),
                });
            }
        }
        Ok(FiniteRep { elements, dim })
    }
}

fn is_identity(g: &DMatrix<f64>) -> bool {
    max_abs_diff(g, &DMatrix::identity(g.nrows(), g.ncols())) == 0.0
}

impl ElementSource for FiniteRep {
    fn dim(&self) -> usize {
        self.dim
    }

    fn projector(&self) -> DMatrix<f64> {
        if self.elements.is_empty() {
            return DMatrix::identity(self.dim, self.dim);
        }
        self.elements
            .iter()
            .fold(DMatrix::zeros(self.dim, self.dim), |acc, g| acc + g)
            / self.elements.len() as f64
    }

    fn candidates(&self, _seed: u64, _random: usize) -> Vec<DMatrix<f64>> {
        let (ids, rest): (Vec<_>, Vec<_>) = self.elements.iter().cloned().partition(is_identity);
        rest.into_iter().chain(ids).collect()
    }
}

impl ElementSource for PointAnalysis {
    fn dim(&self) -> usize {
        self.context.slice.dim()
    }

    fn projector(&self) -> DMatrix<f64> {
        PointAnalysis::projector(self)
    }

    fn candidates(&self, seed: u64, random: usize) -> Vec<DMatrix<f64>> {
        self.context.isotropy_candidates(seed, random)
    }
}

/// Explicit witness that `v` vanishes in the quotient:
/// `Σ cᵢ gⁱ·v + c g·v = 0` with `Σ cᵢ + c = 1`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RelationCertificate {
    pub target: Vec<f64>,
    /// `g¹..gⁿ`, whose images of the target are linearly independent.
    pub independent_elements: Vec<Vec<Vec<f64>>>,
    /// `g`.
    pub final_element: Vec<Vec<f64>>,
    /// `c₁..cₙ`.
    pub coefficients: Vec<f64>,
    /// `c`.
    pub final_coefficient: f64,
    /// Bottom-right entry after eliminating the row of ones:
    /// `1 − ⟨α, g·v⟩`. The system is solvable iff it is non-zero.
    pub pivot: f64,
    /// `Σ cᵢ + c`.
    pub coefficient_sum: f64,
    /// `‖Σ cᵢ gⁱ·v + c g·v‖`.
    pub residual: f64,
    /// Number of final elements tried.
    pub attempts: usize,
}

impl RelationCertificate {
    /// Both recorded identities hold within `match_eps`.
    pub fn is_valid(&self, tol: &Tolerance) -> bool {
        let scale = 1.0 + self.target.iter().map(|x| x * x).sum::<f64>().sqrt();
        (self.coefficient_sum - 1.0).abs() <= tol.match_eps
            && self.residual <= tol.match_eps * scale
    }
}

/// Pivots below this magnitude are treated as zero.
pub const PIVOT_CUTOFF: f64 = 1e-6;
/// Random samples appended to the structured candidates during the greedy
/// independent-set pass.
const GREEDY_RANDOM: usize = 256;

fn to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().cloned().collect()).collect()
}

/// Solved augmented system for one choice of final element.
struct AugmentedSolution {
    coefficients: Vec<f64>,
    final_coefficient: f64,
    pivot: f64,
}

/// Row-reduction view of the augmented system
///
/// ```text
/// [ g¹v … gⁿv | g v | 0 ]
/// [  1  …  1  |  1  | 1 ]
/// ```
///
/// Reducing the left block to `[I; 0]` is multiplication by a left inverse
/// `A⁺` of `A = [g¹v … gⁿv]`; eliminating the ones below leaves
/// `1 − 1ᵀ A⁺ (g v) = 1 − ⟨α, g v⟩` with `α = (A⁺)ᵀ 1`, independent of `g`.
struct AugmentedSystem {
    independent: DMatrix<f64>,
    left_inverse: DMatrix<f64>,
    alpha: DVector<f64>,
}

impl AugmentedSystem {
    fn new(independent: DMatrix<f64>) -> Result<Self> {
        let n = independent.ncols();
        let left_inverse = if n == 0 {
            DMatrix::zeros(0, independent.nrows())
        } else {
            let normal = independent.transpose() * &independent;
            normal
                .try_inverse()
                .ok_or_else(|| Error::UnsupportedScheme("dependent witness set".into()))?
                * independent.transpose()
        };
        let alpha = left_inverse.transpose() * DVector::from_element(n, 1.0);
        Ok(AugmentedSystem {
            independent,
            left_inverse,
            alpha,
        })
    }

    fn pivot(&self, w: &DVector<f64>) -> f64 {
        1.0 - self.alpha.dot(w)
    }

    fn solve(&self, w: &DVector<f64>) -> Option<AugmentedSolution> {
        let pivot = self.pivot(w);
        if pivot.abs() <= PIVOT_CUTOFF {
            return None;
        }
        let c = 1.0 / pivot;
        let reduced = &self.left_inverse * w;
        Some(AugmentedSolution {
            coefficients: reduced.iter().map(|r| -c * r).collect(),
            final_coefficient: c,
            pivot,
        })
    }

    fn residual(&self, sol: &AugmentedSolution, w: &DVector<f64>) -> f64 {
        let c = DVector::from_column_slice(&sol.coefficients);
        (&self.independent * c + w * sol.final_coefficient).norm()
    }
}

/// Certificate from explicitly chosen independent elements, trying each of
/// `finals` in order until the augmented system is solvable.
pub fn certify_with(
    v: &DVector<f64>,
    independent: &[DMatrix<f64>],
    finals: &[DMatrix<f64>],
    tol: &Tolerance,
) -> Result<RelationCertificate> {
    let m = v.len();
    let images: Vec<DVector<f64>> = independent.iter().map(|g| g * v).collect();
    let a = DMatrix::from_fn(m, images.len(), |i, j| images[j][i]);
    if numerical_rank(&a, tol) != images.len() {
        return Err(Error::UnsupportedScheme(
            "witness images are linearly dependent".into(),
        ));
    }
    let system = AugmentedSystem::new(a)?;
    let mut best = 0.0_f64;
    for (attempt, g) in finals.iter().enumerate() {
        let w = g * v;
        match system.solve(&w) {
            Some(sol) => {
                let residual = system.residual(&sol, &w);
                let coefficient_sum = sol.coefficients.iter().sum::<f64>() + sol.final_coefficient;
                return Ok(RelationCertificate {
                    target: v.iter().cloned().collect(),
                    independent_elements: independent.iter().map(to_rows).collect(),
                    final_element: to_rows(g),
                    coefficients: sol.coefficients,
                    final_coefficient: sol.final_coefficient,
                    pivot: sol.pivot,
                    coefficient_sum,
                    residual,
                    attempts: attempt + 1,
                });
            }
            None => best = best.max(system.pivot(&w).abs()),
        }
    }
    Err(Error::CertificateExhausted {
        attempts: finals.len(),
        best_pivot: best,
    })
}

/// Certificate that `v` (with no fixed component) lies in the relation span.
///
/// A maximal independent set `{gⁱ·v}` is assembled greedily from the source's
/// candidate order; the final element is searched starting from the
/// identity, then the candidates, then further seeded samples, for at most
/// `max_attempts` tries.
pub fn relation_certificate<S: ElementSource + ?Sized>(
    source: &S,
    v: &DVector<f64>,
    max_attempts: usize,
    seed: u64,
    tol: &Tolerance,
) -> Result<RelationCertificate> {
    let m = source.dim();
    if v.len() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            actual: v.len(),
        });
    }
    let fixed_part = source.projector() * v;
    let fixed_norm = fixed_part.norm();
    if fixed_norm > tol.match_eps * (1.0 + v.norm()) {
        return Err(Error::FixedComponent { fixed_norm });
    }

    let candidates = source.candidates(seed, GREEDY_RANDOM);
    let mut independent: Vec<DMatrix<f64>> = Vec::new();
    let mut images = DMatrix::zeros(m, 0);
    for g in &candidates {
        if independent.len() == m {
            break;
        }
        let w = g * v;
        let mut trial = images.clone().insert_column(images.ncols(), 0.0);
        trial.set_column(images.ncols(), &w);
        if numerical_rank(&trial, tol) > independent.len() {
            images = trial;
            independent.push(g.clone());
        }
    }

    let identity = DMatrix::identity(m, m);
    let mut finals = vec![identity];
    finals.extend(candidates.iter().cloned());
    if finals.len() < max_attempts {
        let extra = source.candidates(seed.wrapping_add(0x9e37_79b9), max_attempts - finals.len());
        finals.extend(extra);
    }
    finals.truncate(max_attempts.max(1));
    certify_with(v, &independent, &finals, tol)
}

/// Outcome of comparing an analysis with its orthogonally conjugated copy.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InvarianceCheck {
    pub dim: usize,
    pub conjugated_dim: usize,
    pub bases_match: bool,
    pub holds: bool,
}

/// Analyses `(spec, x)` and `(q·spec·qᵀ, q·x)` and compares the internal
/// dimensions and the fixed bases (`q` applied to the first must span the
/// second).
pub fn conjugation_invariance(
    spec: &GroupSpec,
    x: &DVector<f64>,
    q: &DMatrix<f64>,
    settings: &AnalysisSettings,
) -> Result<InvarianceCheck> {
    let tol = &settings.tolerance;
    check_orthogonal(q, spec.ambient_dim(), tol)?;
    let base = internal_tangent_space(spec, x, settings)?;
    let conj_spec = spec.conjugated(q, tol)?;
    let conj = internal_tangent_space(&conj_spec, &(q * x), settings)?;
    let mapped = Subspace::from_columns(
        &(q * base.ambient_fixed_basis.basis()),
        conj.ambient_fixed_basis.gram(),
        tol,
    )?;
    let bases_match = subspace_equal(&mapped, &conj.ambient_fixed_basis, tol)?;
    Ok(InvarianceCheck {
        dim: base.internal_dim(),
        conjugated_dim: conj.internal_dim(),
        bases_match,
        holds: bases_match && base.internal_dim() == conj.internal_dim(),
    })
}

/// Whether the internal tangent space is unchanged by conjugating the action
/// with the orthogonal matrix `q`.
pub fn conjugation_invariance_check(
    spec: &GroupSpec,
    x: &DVector<f64>,
    q: &DMatrix<f64>,
    settings: &AnalysisSettings,
) -> Result<bool> {
    Ok(conjugation_invariance(spec, x, q, settings)?.holds)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::{circle_exp, cross_matrix, BuiltinGroup, FiniteGroup};
    use std::f64::consts::TAU;

    fn v(xs: &[f64]) -> DVector<f64> {
        DVector::from_row_slice(xs)
    }

    fn m(n: usize, xs: &[f64]) -> DMatrix<f64> {
        DMatrix::from_row_slice(n, n, xs)
    }

    fn settings() -> AnalysisSettings {
        AnalysisSettings {
            haar: HaarSettings {
                seed: 5,
                monte_carlo_samples: 2_000,
                quadrature_nodes: 64,
            },
            ..AnalysisSettings::default()
        }
    }

    fn sign_flip() -> GroupSpec {
        GroupSpec::finite(1, vec![m(1, &[-1.0])]).unwrap()
    }

    fn dim_at(spec: &GroupSpec, x: &[f64]) -> usize {
        internal_tangent_space(spec, &v(x), &settings())
            .unwrap()
            .internal_dim()
    }

    #[test]
    fn sign_flip_line() {
        assert_eq!(dim_at(&sign_flip(), &[0.0]), 0);
        assert_eq!(dim_at(&sign_flip(), &[2.0]), 1);
    }

    #[test]
    fn rotations_of_space() {
        let so3 = GroupSpec::builtin(BuiltinGroup::SO3);
        assert_eq!(dim_at(&so3, &[0.0, 0.0, 0.0]), 0);
        let a = internal_tangent_space(&so3, &v(&[0.0, 0.0, 1.0]), &settings()).unwrap();
        assert_eq!(a.internal_dim(), 1);
        let b = a.ambient_fixed_basis.basis();
        assert!((b[(2, 0)].abs() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn trivial_group_is_a_manifold() {
        for n in 1..=4 {
            let x: Vec<f64> = (0..n).map(|i| i as f64 - 1.0).collect();
            assert_eq!(dim_at(&GroupSpec::trivial(n), &x), n);
        }
    }

    #[test]
    fn sign_flip_relation_span() {
        let rep = [m(1, &[1.0]), m(1, &[-1.0])];
        assert_eq!(
            relation_span(&rep, 1, &Tolerance::default()).unwrap().dim(),
            1
        );
        assert_eq!(
            internal_dim_oracle(&rep, 1, &Tolerance::default()).unwrap(),
            0
        );
    }

    #[test]
    fn trivial_relation_span_is_zero() {
        let rep = [DMatrix::identity(3, 3)];
        assert_eq!(
            relation_span(&rep, 3, &Tolerance::default()).unwrap().dim(),
            0
        );
        assert_eq!(
            internal_dim_oracle(&rep, 3, &Tolerance::default()).unwrap(),
            3
        );
    }

    #[test]
    fn c4_relation_span_is_everything() {
        let r = m(2, &[0.0, -1.0, 1.0, 0.0]);
        // I − r = [[1, 1], [-1, 1]] has determinant 2.
        assert_eq!((DMatrix::identity(2, 2) - &r).determinant(), 2.0);
        let g = FiniteGroup::close(2, &[r], &Tolerance::default(), 8).unwrap();
        assert_eq!(
            relation_span(g.elements(), 2, &Tolerance::default())
                .unwrap()
                .dim(),
            2
        );
    }

    #[test]
    fn z_rotation_samples_leave_the_axis() {
        let lz = cross_matrix(&v(&[0.0, 0.0, 1.0]));
        let rep: Vec<_> = [0.3, 1.7, 2.9]
            .iter()
            .map(|&t| circle_exp(&lz, t))
            .collect();
        let span = relation_span(&rep, 3, &Tolerance::default()).unwrap();
        let expected = Subspace::span(
            &[v(&[1.0, 0.0, 0.0]), v(&[0.0, 1.0, 0.0])],
            3,
            &Tolerance::default(),
        )
        .unwrap();
        assert!(subspace_equal(&span, &expected, &Tolerance::default()).unwrap());
        assert_eq!(
            internal_dim_oracle(&rep, 3, &Tolerance::default()).unwrap(),
            1
        );
    }

    #[test]
    fn oracle_matches_pipeline_on_catalog() {
        let t = Tolerance::default();
        let cases: Vec<(GroupSpec, Vec<f64>)> = vec![
            (GroupSpec::builtin(BuiltinGroup::SO3), vec![0.0, 0.0, 0.0]),
            (GroupSpec::builtin(BuiltinGroup::SO3), vec![1.0, 0.0, 2.0]),
            (GroupSpec::builtin(BuiltinGroup::O3), vec![0.0, 1.0, 0.0]),
            (GroupSpec::builtin(BuiltinGroup::O2), vec![0.0, 0.0]),
            (GroupSpec::builtin(BuiltinGroup::O2), vec![1.0, 0.0]),
            (
                GroupSpec::builtin(BuiltinGroup::Torus(2)),
                vec![0.0, 0.0, 1.0, 0.0],
            ),
            (sign_flip(), vec![0.0]),
        ];
        for (spec, x) in cases {
            let a = internal_tangent_space(&spec, &v(&x), &settings()).unwrap();
            let oracle = oracle_at(&a, 17, &t).unwrap();
            assert_eq!(oracle.dim, a.internal_dim(), "{} at {x:?}", spec.label());
        }
    }

    #[test]
    fn worked_example_with_sign_matrices() {
        let t = Tolerance::default();
        let d = |a: f64, b: f64, c: f64| DMatrix::from_diagonal(&v(&[a, b, c]));
        let witnesses = [d(-1.0, 1.0, -1.0), d(-1.0, -1.0, 1.0), d(1.0, -1.0, -1.0)];
        let vo = v(&[1.0, 1.0, 1.0]);
        let cert = certify_with(&vo, &witnesses, &[DMatrix::identity(3, 3)], &t).unwrap();
        // 1 + x + y + z at g·v = (1, 1, 1).
        assert!((cert.pivot - 4.0).abs() < 1e-12);
        // Oracle: (v + Σ gⁱ v) = 0, so every coefficient is 1/4.
        for c in cert
            .coefficients
            .iter()
            .chain([cert.final_coefficient].iter())
        {
            assert!((c - 0.25).abs() < 1e-12);
        }
        assert!(cert.is_valid(&t));
    }

    #[test]
    fn sign_flip_certificate() {
        let t = Tolerance::default();
        let rep = FiniteRep::new(vec![m(1, &[1.0]), m(1, &[-1.0])], 1).unwrap();
        let cert = relation_certificate(&rep, &v(&[1.0]), 10, 0, &t).unwrap();
        assert_eq!(cert.independent_elements, vec![vec![vec![-1.0]]]);
        assert_eq!(cert.final_element, vec![vec![1.0]]);
        assert!((cert.coefficients[0] - 0.5).abs() < 1e-15);
        assert!((cert.final_coefficient - 0.5).abs() < 1e-15);
        assert!(cert.residual < 1e-15);
    }

    #[test]
    fn fixed_vectors_have_no_certificate() {
        let rep = FiniteRep::new(vec![DMatrix::identity(2, 2)], 2).unwrap();
        let err =
            relation_certificate(&rep, &v(&[1.0, 0.5]), 10, 0, &Tolerance::default()).unwrap_err();
        assert!(matches!(err, Error::FixedComponent { .. }));
    }

    #[test]
    fn exhausted_search_is_reported() {
        // Witness set {−1} on ℝ¹ gives α = −1; with g = −1 as the only final
        // element the pivot is 1 − (−1)(−1) = 0.
        let t = Tolerance::default();
        let err = certify_with(&v(&[1.0]), &[m(1, &[-1.0])], &[m(1, &[-1.0])], &t).unwrap_err();
        assert!(matches!(
            err,
            Error::CertificateExhausted { attempts: 1, .. }
        ));
    }

    #[test]
    fn pipeline_certificates_for_continuous_stabilizers() {
        let t = Tolerance::default();
        let so3 = GroupSpec::builtin(BuiltinGroup::SO3);
        let a = internal_tangent_space(&so3, &v(&[0.0, 0.0, 0.0]), &settings()).unwrap();
        let cert = relation_certificate(&a, &v(&[1.0, 1.0, 1.0]), 100, 3, &t).unwrap();
        assert!((cert.pivot - 4.0).abs() < 1e-12);
        assert!(cert.is_valid(&t));

        let t2 = GroupSpec::builtin(BuiltinGroup::Torus(2));
        let a = internal_tangent_space(&t2, &v(&[0.0, 0.0, 1.0, 0.0]), &settings()).unwrap();
        // Slice coordinates: the zero block's two directions plus the radial one.
        assert_eq!(a.context.slice.dim(), 3);
        assert_eq!(a.internal_dim(), 1);
        let fixed = a.fixed_subspace.orthogonal_complement();
        for b in fixed.basis_vectors() {
            let cert = relation_certificate(&a, &(b * 2.0), 1000, 8, &t).unwrap();
            assert!(cert.is_valid(&t), "{cert:?}");
        }
    }

    #[test]
    fn certificates_for_random_finite_groups() {
        let t = Tolerance::default();
        let r = circle_exp(&cross_matrix(&v(&[0.0, 0.0, 1.0])), TAU / 5.0);
        let s = m(3, &[1.0, 0.0, 0.0, 0.0, -1.0, 0.0, 0.0, 0.0, -1.0]);
        let g = FiniteGroup::close(3, &[r, s], &t, 64).unwrap();
        let rep = FiniteRep::new(g.elements().to_vec(), 3).unwrap();
        for vo in [
            v(&[1.0, 2.0, 3.0]),
            v(&[0.0, 0.0, 1.0]),
            v(&[-1.0, 0.5, 0.0]),
        ] {
            let cert = relation_certificate(&rep, &vo, 100, 0, &t).unwrap();
            assert!(cert.is_valid(&t));
        }
    }

    #[test]
    fn conjugation_by_identity_and_axis_swap() {
        let s = settings();
        let so3 = GroupSpec::builtin(BuiltinGroup::SO3);
        let x = v(&[0.0, 0.0, 1.0]);
        assert!(conjugation_invariance_check(&so3, &x, &DMatrix::identity(3, 3), &s).unwrap());
        // Rotation taking e3 to e1.
        let q = m(3, &[0.0, 0.0, 1.0, 0.0, 1.0, 0.0, -1.0, 0.0, 0.0]);
        assert!(conjugation_invariance_check(&so3, &x, &q, &s).unwrap());
        let conj =
            internal_tangent_space(&so3.conjugated(&q, &s.tolerance).unwrap(), &(&q * &x), &s)
                .unwrap();
        assert!((conj.ambient_fixed_basis.basis()[(0, 0)].abs() - 1.0).abs() < 1e-12);

        assert!(
            conjugation_invariance_check(&sign_flip(), &v(&[2.0]), &m(1, &[-1.0]), &s).unwrap()
        );
        assert!(matches!(
            conjugation_invariance_check(&sign_flip(), &v(&[2.0]), &m(1, &[2.0]), &s),
            Err(Error::NotOrthogonal { .. })
        ));
    }
}
