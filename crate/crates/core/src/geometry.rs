//! Per-point geometry of a linear action: orbit tangent space, linear slice
//! and the isotropy representation of the stabilizer on the slice.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::averaging::{invariant_metric, InvariantMetric, SchemeRef};
use crate::error::{Error, Result};
use crate::group::{
    signed_rotations3, stabilizer, BuiltinGroup, FiniteGroup, GroupKind, GroupSpec, HaarSampler,
    HaarSettings, Scheme, StabilizerModel,
};
use crate::numerics::{max_abs, Subspace, Tolerance};

/// An inner product invariant under the whole group. Built-in groups act
/// orthogonally; finite groups get the average of `gᵀ g`.
pub fn group_metric(spec: &GroupSpec, tol: &Tolerance, cap: usize) -> Result<InvariantMetric> {
    let n = spec.ambient_dim();
    match spec.kind() {
        GroupKind::Builtin { .. } => Ok(InvariantMetric::euclidean(n)),
        GroupKind::Finite { generators } => {
            let group = FiniteGroup::close(n, generators, tol, cap)?;
            invariant_metric(group.elements(), &DMatrix::identity(n, n), tol)
        }
    }
}

/// `T_x(G·x) = span{ξ·x}` over a Lie algebra basis, orthonormal under the
/// metric. Zero for finite groups.
pub fn orbit_tangent(
    spec: &GroupSpec,
    x: &DVector<f64>,
    metric: &InvariantMetric,
    tol: &Tolerance,
) -> Result<Subspace> {
    let n = spec.ambient_dim();
    if x.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: x.len(),
        });
    }
    let vectors: Vec<DVector<f64>> = spec
        .lie_algebra()
        .generators
        .iter()
        .map(|xi| xi * x)
        .collect();
    Subspace::orthonormalize(&vectors, &metric.gram, tol)
}

/// The isotropy representation, in orthonormal slice coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct IsotropyRep {
    /// Enumerated elements (finite stabilizers) or the quadrature/Monte Carlo
    /// sample used for averaging.
    pub elements: Vec<DMatrix<f64>>,
    pub lie_algebra: Vec<DMatrix<f64>>,
    pub component_reps: Vec<DMatrix<f64>>,
    pub scheme: SchemeRef,
}

impl IsotropyRep {
    pub fn dim(&self) -> usize {
        self.elements.first().map_or(0, |g| g.nrows())
    }
}

/// Everything the tangent pipeline needs about a point.
#[derive(Debug, Clone, PartialEq)]
pub struct PointContext {
    pub point: DVector<f64>,
    pub stabilizer: StabilizerModel,
    pub metric: InvariantMetric,
    pub orbit_tangent: Subspace,
    /// `T_xS`, the metric-orthogonal complement of the orbit tangent.
    pub slice: Subspace,
    pub isotropy: IsotropyRep,
    pub settings: HaarSettings,
}

impl PointContext {
    /// Stabilizer elements expressed in slice coordinates.
    pub fn to_slice(&self, g: &DMatrix<f64>) -> DMatrix<f64> {
        self.slice.restrict(g)
    }

    /// Deterministic witnesses followed by seeded random stabilizer elements,
    /// all in slice coordinates. For finite stabilizers this is the
    /// enumeration, non-identity elements first.
    pub fn isotropy_candidates(&self, seed: u64, random: usize) -> Vec<DMatrix<f64>> {
        let ambient: Vec<DMatrix<f64>> = match &self.stabilizer {
            StabilizerModel::Finite(g) => {
                let mut v: Vec<_> = g.elements()[1..].to_vec();
                v.push(g.elements()[0].clone());
                v
            }
            StabilizerModel::Closed(c) => {
                let mut v = c.probes();
                v.extend(c.random_elements(seed, random));
                v
            }
        };
        ambient.iter().map(|g| self.to_slice(g)).collect()
    }

    /// A fresh batch of random stabilizer elements in slice coordinates.
    pub fn isotropy_batch(&self, seed: u64, count: usize) -> Vec<DMatrix<f64>> {
        match &self.stabilizer {
            StabilizerModel::Finite(_) => self.isotropy.elements.clone(),
            StabilizerModel::Closed(c) => c
                .random_elements(seed, count)
                .iter()
                .map(|g| self.to_slice(g))
                .collect(),
        }
    }
}

/// Builds the [`PointContext`] at `x`: stabilizer, orbit tangent, slice and
/// isotropy representation.
pub fn slice_at(
    spec: &GroupSpec,
    x: &DVector<f64>,
    metric: &InvariantMetric,
    settings: &HaarSettings,
    tol: &Tolerance,
    cap: usize,
) -> Result<PointContext> {
    let stab = stabilizer(spec, x, tol, cap)?;
    let orbit = orbit_tangent(spec, x, metric, tol)?;
    let slice = orbit.orthogonal_complement();

    let ambient_elements = stab.elements(settings)?;
    let scheme = match stab.scheme(settings) {
        Some(s) => SchemeRef::Sampled(s),
        None => SchemeRef::Enumeration,
    };
    let (lie, reps) = match &stab {
        StabilizerModel::Finite(_) => (vec![], vec![]),
        StabilizerModel::Closed(c) => (c.lie_algebra.generators.clone(), c.component_reps.clone()),
    };
    let isotropy = IsotropyRep {
        elements: ambient_elements.iter().map(|g| slice.restrict(g)).collect(),
        lie_algebra: lie.iter().map(|xi| slice.restrict(xi)).collect(),
        component_reps: reps.iter().map(|r| slice.restrict(r)).collect(),
        scheme,
    };
    Ok(PointContext {
        point: x.clone(),
        stabilizer: stab,
        metric: metric.clone(),
        orbit_tangent: orbit,
        slice,
        isotropy,
        settings: *settings,
    })
}

/// `κ(x) = x / (ε² − ‖x‖²)`, a diffeomorphism from the open `ε`-ball onto the
/// whole space that commutes with orthogonal maps.
pub fn kappa_rescale(x: &DVector<f64>, eps: f64) -> Result<DVector<f64>> {
    let norm = x.norm();
    if eps.is_nan() || eps <= 0.0 || norm >= eps {
        return Err(Error::OutsideBall { norm, eps });
    }
    Ok(x / (eps * eps - norm * norm))
}

/// A pair `(g, p)` with `p` and `g·p` in the slice patch but `g ∉ G_x`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SliceViolation {
    pub element: Vec<Vec<f64>>,
    pub point: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SliceReport {
    /// `dim T_x(G·x) + dim T_xS == n` and the two are complementary.
    pub direct_sum: bool,
    pub direct_sum_residual: f64,
    /// `G_x` maps the slice into itself.
    pub invariant: bool,
    pub invariance_residual: f64,
    /// No sampled `(g, p)` pair leaves the stabilizer while staying in the
    /// patch.
    pub local_return: bool,
    pub checked_pairs: usize,
    pub violation_count: usize,
    /// First few violations.
    pub violations: Vec<SliceViolation>,
}

impl SliceReport {
    pub fn passed(&self) -> bool {
        self.direct_sum && self.invariant && self.local_return
    }
}

const MAX_RECORDED_VIOLATIONS: usize = 16;

/// Residual of `ℝⁿ = T_x(G·x) ⊕ T_xS`: cross inner products between the two
/// bases and the reconstruction error of each coordinate axis.
pub fn direct_sum_residual(orbit: &Subspace, slice: &Subspace) -> f64 {
    let n = orbit.ambient_dim();
    let cross = orbit.basis().transpose() * orbit.gram() * slice.basis();
    let mut residual = max_abs(&cross);
    for k in 0..n {
        let mut e = DVector::zeros(n);
        e[k] = 1.0;
        let rest = &e - orbit.project(&e) - slice.project(&e);
        residual = residual.max(rest.amax());
    }
    residual
}

fn test_elements(
    spec: &GroupSpec,
    samples: usize,
    seed: u64,
    cap: usize,
    tol: &Tolerance,
) -> Result<Vec<DMatrix<f64>>> {
    let n = spec.ambient_dim();
    match spec.kind() {
        GroupKind::Finite { generators } => Ok(FiniteGroup::close(n, generators, tol, cap)?
            .elements()
            .to_vec()),
        GroupKind::Builtin { group, frame } => {
            let mut out = HaarSampler {
                group: *group,
                frame: frame.clone(),
                seed,
                scheme: Scheme::MonteCarlo {
                    count: samples.max(1),
                },
            }
            .sample()?;
            let framed = |g: DMatrix<f64>| frame * g * frame.transpose();
            match group {
                BuiltinGroup::SO3 => out.extend(signed_rotations3().into_iter().map(framed)),
                BuiltinGroup::O3 => {
                    for g in signed_rotations3() {
                        out.push(framed(g.clone()));
                        out.push(framed(-g));
                    }
                    out.push(-DMatrix::identity(3, 3));
                }
                _ => {
                    // Quadrature nodes include the half and quarter turns.
                    let nodes = match group {
                        BuiltinGroup::Torus(k) if *k > 2 => 4,
                        BuiltinGroup::O2 => 16,
                        _ => 8,
                    };
                    let grid = HaarSampler {
                        group: *group,
                        frame: frame.clone(),
                        seed,
                        scheme: Scheme::Quadrature { nodes },
                    }
                    .sample()?;
                    out.extend(grid);
                }
            }
            Ok(out)
        }
    }
}

/// Checks the three slice conditions at the context's point. The first two
/// are checked exactly; the local return condition is checked on sampled
/// points of the patch `x + {s ∈ T_xS : ‖s‖ < radius}` against sampled (and
/// a few structured) group elements.
pub fn verify_slice_conditions(
    ctx: &PointContext,
    spec: &GroupSpec,
    radius: f64,
    samples: usize,
    seed: u64,
    tol: &Tolerance,
    cap: usize,
) -> Result<SliceReport> {
    let n = spec.ambient_dim();
    let x = &ctx.point;
    let slice = &ctx.slice;

    let ds_residual = direct_sum_residual(&ctx.orbit_tangent, slice);
    let direct_sum = ctx.orbit_tangent.dim() + slice.dim() == n && ds_residual <= tol.match_eps;

    let stab_elements = ctx.stabilizer.elements(&ctx.settings)?;
    let inv_residual = stab_elements
        .iter()
        .map(|g| slice.invariance_residual(g))
        .fold(0.0, f64::max);
    let invariant = inv_residual <= tol.match_eps;

    // Patch points: the base point, a symmetric grid along each slice axis,
    // then uniform random points of the ball.
    let mut points: Vec<DVector<f64>> = vec![x.clone()];
    let steps = 8;
    for b in slice.basis_vectors() {
        for j in -(steps - 1)..steps {
            points.push(x + &b * (radius * j as f64 / steps as f64));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = slice.dim();
    if d > 0 {
        for _ in 0..samples {
            let dir = DVector::from_fn(d, |_, _| rng.random::<f64>() * 2.0 - 1.0);
            if dir.norm() == 0.0 {
                continue;
            }
            let r = radius * rng.random::<f64>().powf(1.0 / d as f64) * 0.999;
            points.push(x + slice.embed(&(dir.normalize() * r)));
        }
    }

    let elements = test_elements(spec, samples, seed.wrapping_add(1), cap, tol)?;
    let fixes_x = |g: &DMatrix<f64>| (g * x - x).amax() <= tol.match_eps * (1.0 + x.norm());
    let in_patch = |p: &DVector<f64>| {
        let offset = p - x;
        let eps = tol.match_eps * (1.0 + p.norm());
        slice.residual(&offset) <= eps && slice.norm(&offset) < radius
    };

    let mut checked_pairs = 0;
    let mut violation_count = 0;
    let mut violations = Vec::new();
    for p in &points {
        for g in &elements {
            checked_pairs += 1;
            if fixes_x(g) {
                continue;
            }
            let gp = g * p;
            if in_patch(&gp) {
                violation_count += 1;
                if violations.len() < MAX_RECORDED_VIOLATIONS {
                    violations.push(SliceViolation {
                        element: g.row_iter().map(|r| r.iter().cloned().collect()).collect(),
                        point: p.iter().cloned().collect(),
                    });
                }
            }
        }
    }

    Ok(SliceReport {
        direct_sum,
        direct_sum_residual: ds_residual,
        invariant,
        invariance_residual: inv_residual,
        local_return: violation_count == 0,
        checked_pairs,
        violation_count,
        violations,
    })
}
