//! Compact matrix groups acting linearly on `ℝⁿ`.
//!
//! Two flavours are supported. Finite groups are given by generators and
//! enumerated by closure. Built-in continuous groups (`SO2`, `SO3`, `O2`,
//! `O3`, `TORUS(k)`) act through their defining representation, optionally
//! conjugated by an orthogonal `frame` matrix, and come with a Lie algebra
//! basis, Haar samplers and a catalog of stabilizers.

use std::collections::HashMap;
use std::f64::consts::TAU;
use std::fmt;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{max_abs, max_abs_diff, orthogonality_residual, Tolerance};

/// Default cap on the order of a finite group produced by closure.
pub const DEFAULT_CLOSURE_CAP: usize = 1024;

/// Built-in compact groups in their defining representation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BuiltinGroup {
    SO2,
    SO3,
    O2,
    O3,
    /// `k` circles acting by 2×2 rotation blocks on `ℝ^{2k}`.
    Torus(usize),
}

impl BuiltinGroup {
    pub fn parse(name: &str) -> Result<Self> {
        let upper = name.trim().to_ascii_uppercase();
        match upper.as_str() {
            "SO2" => Ok(BuiltinGroup::SO2),
            "SO3" => Ok(BuiltinGroup::SO3),
            "O2" => Ok(BuiltinGroup::O2),
            "O3" => Ok(BuiltinGroup::O3),
            _ => {
                let k = upper
                    .strip_prefix("TORUS(")
                    .and_then(|rest| rest.strip_suffix(')'))
                    .and_then(|k| k.trim().parse::<usize>().ok())
                    .filter(|&k| k >= 1)
                    .ok_or_else(|| Error::UnsupportedGroup(name.to_string()))?;
                Ok(BuiltinGroup::Torus(k))
            }
        }
    }

    pub fn defining_dim(&self) -> usize {
        match self {
            BuiltinGroup::SO2 | BuiltinGroup::O2 => 2,
            BuiltinGroup::SO3 | BuiltinGroup::O3 => 3,
            BuiltinGroup::Torus(k) => 2 * k,
        }
    }

    /// Dimension of the group as a manifold.
    pub fn lie_dim(&self) -> usize {
        match self {
            BuiltinGroup::SO2 | BuiltinGroup::O2 => 1,
            BuiltinGroup::SO3 | BuiltinGroup::O3 => 3,
            BuiltinGroup::Torus(k) => *k,
        }
    }

    /// Whether every element has determinant +1.
    pub fn is_special(&self) -> bool {
        !matches!(self, BuiltinGroup::O2 | BuiltinGroup::O3)
    }
}

impl fmt::Display for BuiltinGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BuiltinGroup::SO2 => write!(f, "SO2"),
            BuiltinGroup::SO3 => write!(f, "SO3"),
            BuiltinGroup::O2 => write!(f, "O2"),
            BuiltinGroup::O3 => write!(f, "O3"),
            BuiltinGroup::Torus(k) => write!(f, "TORUS({k})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum GroupKind {
    Finite {
        generators: Vec<DMatrix<f64>>,
    },
    Builtin {
        group: BuiltinGroup,
        /// Orthogonal change of frame; the group acts as `frame · g · frameᵀ`.
        frame: DMatrix<f64>,
    },
}

/// A compact group together with its linear action on `ℝⁿ`.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupSpec {
    ambient_dim: usize,
    kind: GroupKind,
}

impl GroupSpec {
    pub fn finite(ambient_dim: usize, generators: Vec<DMatrix<f64>>) -> Result<Self> {
        if ambient_dim == 0 {
            return Err(Error::Config("ambient dimension must be positive".into()));
        }
        for (index, g) in generators.iter().enumerate() {
            if g.nrows() != ambient_dim || g.ncols() != ambient_dim {
                return Err(Error::DimensionMismatch {
                    expected: ambient_dim,
                    actual: if g.nrows() != ambient_dim {
                        g.nrows()
                    } else {
                        g.ncols()
                    },
                });
            }
            if g.iter().any(|v| !v.is_finite()) {
                return Err(Error::SingularGenerator {
                    index,
                    det: f64::NAN,
                });
            }
            let det = g.determinant();
            if det.abs() <= 1e-12 {
                return Err(Error::SingularGenerator { index, det });
            }
        }
        Ok(GroupSpec {
            ambient_dim,
            kind: GroupKind::Finite { generators },
        })
    }

    pub fn builtin(group: BuiltinGroup) -> Self {
        let n = group.defining_dim();
        GroupSpec {
            ambient_dim: n,
            kind: GroupKind::Builtin {
                group,
                frame: DMatrix::identity(n, n),
            },
        }
    }

    /// The trivial group on `ℝⁿ`.
    pub fn trivial(n: usize) -> Self {
        GroupSpec {
            ambient_dim: n,
            kind: GroupKind::Finite { generators: vec![] },
        }
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn kind(&self) -> &GroupKind {
        &self.kind
    }

    pub fn is_finite(&self) -> bool {
        matches!(self.kind, GroupKind::Finite { .. })
    }

    /// Short human-readable label.
    pub fn label(&self) -> String {
        match &self.kind {
            GroupKind::Finite { generators } => format!("finite({} generators)", generators.len()),
            GroupKind::Builtin { group, .. } => group.to_string(),
        }
    }

    /// The action conjugated by an orthogonal `q`: `g ↦ q g qᵀ`.
    pub fn conjugated(&self, q: &DMatrix<f64>, tol: &Tolerance) -> Result<Self> {
        check_orthogonal(q, self.ambient_dim, tol)?;
        let kind = match &self.kind {
            GroupKind::Finite { generators } => GroupKind::Finite {
                generators: generators.iter().map(|g| q * g * q.transpose()).collect(),
            },
            GroupKind::Builtin { group, frame } => GroupKind::Builtin {
                group: *group,
                frame: q * frame,
            },
        };
        Ok(GroupSpec {
            ambient_dim: self.ambient_dim,
            kind,
        })
    }

    /// Basis of the Lie algebra in the ambient representation; empty for
    /// finite groups.
    pub fn lie_algebra(&self) -> LieAlgebraBasis {
        match &self.kind {
            GroupKind::Finite { .. } => LieAlgebraBasis { generators: vec![] },
            GroupKind::Builtin { group, frame } => {
                let mut basis = lie_algebra_basis(*group);
                for xi in basis.generators.iter_mut() {
                    *xi = frame * &*xi * frame.transpose();
                }
                basis
            }
        }
    }
}

pub(crate) fn check_orthogonal(q: &DMatrix<f64>, n: usize, tol: &Tolerance) -> Result<()> {
    if q.nrows() != n || q.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: q.nrows(),
        });
    }
    let residual = orthogonality_residual(q);
    if residual > tol.match_eps {
        return Err(Error::NotOrthogonal { residual });
    }
    Ok(())
}

/// Dedup index for matrices: buckets by trace, compares entrywise inside the
/// neighbouring buckets.
struct ElementIndex {
    width: f64,
    buckets: HashMap<i64, Vec<usize>>,
}

impl ElementIndex {
    fn new(width: f64) -> Self {
        ElementIndex {
            width,
            buckets: HashMap::new(),
        }
    }

    fn key(&self, m: &DMatrix<f64>) -> i64 {
        (m.trace() / self.width).floor() as i64
    }

    fn find(&self, elements: &[DMatrix<f64>], m: &DMatrix<f64>, eps: f64) -> Option<usize> {
        let k = self.key(m);
        (k.saturating_sub(1)..=k.saturating_add(1))
            .filter_map(|b| self.buckets.get(&b))
            .flatten()
            .copied()
            .find(|&i| max_abs_diff(&elements[i], m) <= eps)
    }

    fn insert(&mut self, m: &DMatrix<f64>, index: usize) {
        self.buckets.entry(self.key(m)).or_default().push(index);
    }
}

fn match_scale(m: &DMatrix<f64>, tol: &Tolerance) -> f64 {
    tol.match_eps * max_abs(m).max(1.0)
}

/// An explicitly enumerated finite matrix group. `elements[0]` is the
/// identity.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteGroup {
    dim: usize,
    elements: Vec<DMatrix<f64>>,
}

impl FiniteGroup {
    pub fn trivial(dim: usize) -> Self {
        FiniteGroup {
            dim,
            elements: vec![DMatrix::identity(dim, dim)],
        }
    }

    /// Closure of `generators` under products, breadth first.
    pub fn close(
        dim: usize,
        generators: &[DMatrix<f64>],
        tol: &Tolerance,
        cap: usize,
    ) -> Result<Self> {
        for (index, g) in generators.iter().enumerate() {
            if g.nrows() != dim || g.ncols() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    actual: g.nrows(),
                });
            }
            let det = g.determinant();
            if !det.is_finite() || det.abs() <= 1e-12 {
                return Err(Error::SingularGenerator { index, det });
            }
        }
        let mut elements = vec![DMatrix::identity(dim, dim)];
        let mut index = ElementIndex::new(1e-6_f64.max(1e3 * tol.match_eps));
        index.insert(&elements[0], 0);
        let mut frontier = 0;
        while frontier < elements.len() {
            let current = elements[frontier].clone();
            frontier += 1;
            for g in generators {
                let product = g * &current;
                if product.iter().any(|v| !v.is_finite()) {
                    // Powers diverge: the generator has infinite order.
                    return Err(Error::CapExceeded { cap });
                }
                let eps = match_scale(&product, tol);
                if index.find(&elements, &product, eps).is_none() {
                    if elements.len() >= cap {
                        return Err(Error::CapExceeded { cap });
                    }
                    index.insert(&product, elements.len());
                    elements.push(product);
                }
            }
        }
        Ok(FiniteGroup { dim, elements })
    }

    /// Wrap an element list that is already known to be a group.
    pub fn from_elements(dim: usize, elements: Vec<DMatrix<f64>>) -> Self {
        FiniteGroup { dim, elements }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn order(&self) -> usize {
        self.elements.len()
    }

    pub fn elements(&self) -> &[DMatrix<f64>] {
        &self.elements
    }

    pub fn is_trivial(&self) -> bool {
        self.elements.len() == 1
    }

    pub fn position(&self, m: &DMatrix<f64>, tol: &Tolerance) -> Option<usize> {
        let eps = match_scale(m, tol);
        self.elements.iter().position(|e| max_abs_diff(e, m) <= eps)
    }

    /// Elements fixing `x`.
    pub fn stabilizer_of(&self, x: &DVector<f64>, tol: &Tolerance) -> FiniteGroup {
        let eps = tol.match_eps * (1.0 + x.norm());
        let elements = self
            .elements
            .iter()
            .filter(|g| (*g * x - x).amax() <= eps)
            .cloned()
            .collect();
        FiniteGroup {
            dim: self.dim,
            elements,
        }
    }

    /// Conjugate the whole group by an invertible `q`: `g ↦ q g q⁻¹`.
    pub fn conjugated(&self, q: &DMatrix<f64>) -> Option<FiniteGroup> {
        let qi = q.clone().try_inverse()?;
        Some(FiniteGroup {
            dim: self.dim,
            elements: self.elements.iter().map(|g| q * g * &qi).collect(),
        })
    }
}

/// A basis of the Lie algebra, as matrices in the ambient representation.
#[derive(Debug, Clone, PartialEq)]
pub struct LieAlgebraBasis {
    pub generators: Vec<DMatrix<f64>>,
}

impl LieAlgebraBasis {
    pub fn dim(&self) -> usize {
        self.generators.len()
    }
}

/// Infinitesimal rotation about the unit vector `u`: the matrix of `v ↦ u × v`.
pub fn cross_matrix(u: &DVector<f64>) -> DMatrix<f64> {
    DMatrix::from_row_slice(
        3,
        3,
        &[0.0, -u[2], u[1], u[2], 0.0, -u[0], -u[1], u[0], 0.0],
    )
}

fn planar_generator(n: usize, block: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(n, n);
    m[(2 * block + 1, 2 * block)] = 1.0;
    m[(2 * block, 2 * block + 1)] = -1.0;
    m
}

/// Lie algebra basis of a built-in group in its defining representation.
pub fn lie_algebra_basis(group: BuiltinGroup) -> LieAlgebraBasis {
    let generators = match group {
        BuiltinGroup::SO2 | BuiltinGroup::O2 => vec![planar_generator(2, 0)],
        BuiltinGroup::SO3 | BuiltinGroup::O3 => (0..3)
            .map(|i| {
                let mut e = DVector::zeros(3);
                e[i] = 1.0;
                cross_matrix(&e)
            })
            .collect(),
        BuiltinGroup::Torus(k) => (0..k).map(|b| planar_generator(2 * k, b)).collect(),
    };
    LieAlgebraBasis { generators }
}

/// `exp(θ ξ)` for a generator with `ξ³ = −ξ` (unit-speed circle generators).
pub fn circle_exp(xi: &DMatrix<f64>, theta: f64) -> DMatrix<f64> {
    let n = xi.nrows();
    DMatrix::identity(n, n) + xi * theta.sin() + (xi * xi) * (1.0 - theta.cos())
}

fn rotation2(theta: f64) -> DMatrix<f64> {
    let (s, c) = theta.sin_cos();
    DMatrix::from_row_slice(2, 2, &[c, -s, s, c])
}

/// Rotation matrix of a unit quaternion `(w, x, y, z)`.
pub fn quaternion_to_rotation(q: [f64; 4]) -> DMatrix<f64> {
    let [w, x, y, z] = q;
    DMatrix::from_row_slice(
        3,
        3,
        &[
            1.0 - 2.0 * (y * y + z * z),
            2.0 * (x * y - w * z),
            2.0 * (x * z + w * y),
            2.0 * (x * y + w * z),
            1.0 - 2.0 * (x * x + z * z),
            2.0 * (y * z - w * x),
            2.0 * (x * z - w * y),
            2.0 * (y * z + w * x),
            1.0 - 2.0 * (x * x + y * y),
        ],
    )
}

/// Haar-uniform rotation via a uniform unit quaternion (Shoemake's
/// subgroup algorithm).
pub fn random_rotation3<R: Rng>(rng: &mut R) -> DMatrix<f64> {
    let u1: f64 = rng.random();
    let u2: f64 = rng.random();
    let u3: f64 = rng.random();
    let a = (1.0 - u1).sqrt();
    let b = u1.sqrt();
    let q = [
        b * (TAU * u3).cos(),
        a * (TAU * u2).sin(),
        a * (TAU * u2).cos(),
        b * (TAU * u3).sin(),
    ];
    quaternion_to_rotation(q)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "scheme", rename_all = "snake_case")]
pub enum Scheme {
    MonteCarlo { count: usize },
    Quadrature { nodes: usize },
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scheme::MonteCarlo { count } => write!(f, "monte_carlo({count})"),
            Scheme::Quadrature { nodes } => write!(f, "quadrature({nodes})"),
        }
    }
}

/// Resolved sampling settings for continuous groups. Circles use angle
/// quadrature, `SO3`/`O3` use seeded Monte Carlo.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HaarSettings {
    pub seed: u64,
    pub monte_carlo_samples: usize,
    pub quadrature_nodes: usize,
}

impl Default for HaarSettings {
    fn default() -> Self {
        HaarSettings {
            seed: 0,
            monte_carlo_samples: 10_000,
            quadrature_nodes: 64,
        }
    }
}

/// Upper bound on the size of a tensor-product quadrature grid.
const MAX_GRID: usize = 1 << 20;

/// Deterministic sampler of Haar-distributed (or Haar-quadrature) elements
/// of a built-in group.
#[derive(Debug, Clone, PartialEq)]
pub struct HaarSampler {
    pub group: BuiltinGroup,
    pub frame: DMatrix<f64>,
    pub seed: u64,
    pub scheme: Scheme,
}

impl HaarSampler {
    pub fn new(group: BuiltinGroup, seed: u64, scheme: Scheme) -> Self {
        let n = group.defining_dim();
        HaarSampler {
            group,
            frame: DMatrix::identity(n, n),
            seed,
            scheme,
        }
    }

    /// The default scheme for `group` under `settings`.
    pub fn for_group(group: BuiltinGroup, frame: DMatrix<f64>, settings: &HaarSettings) -> Self {
        let scheme = match group {
            BuiltinGroup::SO3 | BuiltinGroup::O3 => Scheme::MonteCarlo {
                count: settings.monte_carlo_samples,
            },
            _ => Scheme::Quadrature {
                nodes: settings.quadrature_nodes,
            },
        };
        HaarSampler {
            group,
            frame,
            seed: settings.seed,
            scheme,
        }
    }

    pub fn for_spec(spec: &GroupSpec, settings: &HaarSettings) -> Option<Self> {
        match spec.kind() {
            GroupKind::Builtin { group, frame } => {
                Some(Self::for_group(*group, frame.clone(), settings))
            }
            GroupKind::Finite { .. } => None,
        }
    }

    /// Samples in the ambient (framed) representation.
    pub fn sample(&self) -> Result<Vec<DMatrix<f64>>> {
        let raw = self.sample_defining()?;
        Ok(raw
            .into_iter()
            .map(|g| &self.frame * g * self.frame.transpose())
            .collect())
    }

    fn sample_defining(&self) -> Result<Vec<DMatrix<f64>>> {
        let unsupported =
            || Error::UnsupportedScheme(format!("{} with {}", self.scheme, self.group));
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let reflect2 = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        match (self.group, self.scheme) {
            (_, Scheme::MonteCarlo { count: 0 }) | (_, Scheme::Quadrature { nodes: 0 }) => {
                Err(unsupported())
            }
            (BuiltinGroup::SO2, Scheme::Quadrature { nodes }) => Ok((0..nodes)
                .map(|j| rotation2(TAU * j as f64 / nodes as f64))
                .collect()),
            (BuiltinGroup::SO2, Scheme::MonteCarlo { count }) => Ok((0..count)
                .map(|_| rotation2(TAU * rng.random::<f64>()))
                .collect()),
            (BuiltinGroup::O2, Scheme::Quadrature { nodes }) => {
                if nodes % 2 != 0 {
                    return Err(unsupported());
                }
                let half = nodes / 2;
                let rotations: Vec<_> = (0..half)
                    .map(|j| rotation2(TAU * j as f64 / half as f64))
                    .collect();
                let reflections: Vec<_> = rotations.iter().map(|r| r * &reflect2).collect();
                Ok(rotations.into_iter().chain(reflections).collect())
            }
            (BuiltinGroup::O2, Scheme::MonteCarlo { count }) => Ok((0..count)
                .map(|_| {
                    let r = rotation2(TAU * rng.random::<f64>());
                    if rng.random::<bool>() {
                        r * &reflect2
                    } else {
                        r
                    }
                })
                .collect()),
            (BuiltinGroup::SO3, Scheme::MonteCarlo { count }) => {
                Ok((0..count).map(|_| random_rotation3(&mut rng)).collect())
            }
            (BuiltinGroup::O3, Scheme::MonteCarlo { count }) => Ok((0..count)
                .map(|_| {
                    let r = random_rotation3(&mut rng);
                    if rng.random::<bool>() {
                        -r
                    } else {
                        r
                    }
                })
                .collect()),
            (BuiltinGroup::Torus(k), Scheme::Quadrature { nodes }) => {
                let total = nodes
                    .checked_pow(k as u32)
                    .filter(|&t| t <= MAX_GRID)
                    .ok_or_else(unsupported)?;
                let circles = lie_algebra_basis(self.group).generators;
                Ok((0..total)
                    .map(|mut idx| {
                        let mut g = DMatrix::identity(2 * k, 2 * k);
                        for xi in &circles {
                            let j = idx % nodes;
                            idx /= nodes;
                            g = circle_exp(xi, TAU * j as f64 / nodes as f64) * g;
                        }
                        g
                    })
                    .collect())
            }
            (BuiltinGroup::Torus(k), Scheme::MonteCarlo { count }) => {
                let circles = lie_algebra_basis(self.group).generators;
                Ok((0..count)
                    .map(|_| {
                        circles
                            .iter()
                            .fold(DMatrix::identity(2 * k, 2 * k), |g, xi| {
                                circle_exp(xi, TAU * rng.random::<f64>()) * g
                            })
                    })
                    .collect())
            }
            (BuiltinGroup::SO3 | BuiltinGroup::O3, Scheme::Quadrature { .. }) => Err(unsupported()),
        }
    }
}

/// Orbit-type label of a catalog stabilizer of a built-in group.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CatalogClass {
    /// The whole group (the point is fixed).
    Full(BuiltinGroup),
    /// Rotations about the axis through the point (`SO3`).
    AxisCircle,
    /// Rotations about the axis plus reflections in planes containing it
    /// (`O3`).
    AxisO2,
    /// The reflection across the line through the point (`O2`).
    AxisReflection,
    /// Trivial stabilizer of a built-in group.
    Trivial(BuiltinGroup),
    /// Circles of the torus whose coordinate block vanishes at the point.
    SubTorus { k: usize, zero_blocks: Vec<bool> },
}

impl fmt::Display for CatalogClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CatalogClass::Full(g) => write!(f, "{g}:full"),
            CatalogClass::AxisCircle => write!(f, "SO3:axis-circle"),
            CatalogClass::AxisO2 => write!(f, "O3:axis-O2"),
            CatalogClass::AxisReflection => write!(f, "O2:axis-reflection"),
            CatalogClass::Trivial(g) => write!(f, "{g}:trivial"),
            CatalogClass::SubTorus { k, zero_blocks } => {
                let mask: String = zero_blocks
                    .iter()
                    .map(|&z| if z { '1' } else { '0' })
                    .collect();
                write!(f, "TORUS({k}):subtorus[{mask}]")
            }
        }
    }
}

/// Identity component of a catalog stabilizer.
#[derive(Debug, Clone, PartialEq)]
enum Connected {
    Trivial,
    /// Commuting unit-speed circle generators (ambient coordinates).
    Circles(Vec<DMatrix<f64>>),
    /// A full `SO3`, conjugated by `frame`.
    Rotations3 {
        frame: DMatrix<f64>,
    },
}

/// A closed subgroup of a built-in group, described by the catalog: a
/// connected part (trivial, a torus of circles, or all of `SO3`) times a
/// finite list of component representatives.
#[derive(Debug, Clone, PartialEq)]
pub struct ClosedSubgroup {
    pub class: CatalogClass,
    pub ambient_dim: usize,
    pub lie_algebra: LieAlgebraBasis,
    pub component_reps: Vec<DMatrix<f64>>,
    connected: Connected,
}

/// Non-identity signed permutation matrices of determinant +1 (the rotation
/// group of the cube).
pub fn signed_rotations3() -> Vec<DMatrix<f64>> {
    // The Klein four-group of diagonal sign matrices first, in a fixed order,
    // then the remaining rotations of the cube.
    let mut out: Vec<DMatrix<f64>> = [[-1.0, 1.0, -1.0], [-1.0, -1.0, 1.0], [1.0, -1.0, -1.0]]
        .iter()
        .map(|d| DMatrix::from_diagonal(&DVector::from_row_slice(d)))
        .collect();
    let perms = [
        [0, 1, 2],
        [0, 2, 1],
        [1, 0, 2],
        [1, 2, 0],
        [2, 0, 1],
        [2, 1, 0],
    ];
    for p in perms {
        for signs in 0..8u32 {
            let mut m = DMatrix::zeros(3, 3);
            for (row, &col) in p.iter().enumerate() {
                m[(row, col)] = if signs & (1 << row) != 0 { -1.0 } else { 1.0 };
            }
            let is_identity = max_abs_diff(&m, &DMatrix::identity(3, 3)) == 0.0;
            if m.determinant() > 0.0 && !is_identity && !out.contains(&m) {
                out.push(m);
            }
        }
    }
    out
}

impl ClosedSubgroup {
    pub fn is_finite(&self) -> bool {
        self.lie_algebra.dim() == 0
    }

    /// Number of connected components.
    pub fn components(&self) -> usize {
        self.component_reps.len()
    }

    /// Scheme used when averaging over this subgroup.
    pub fn scheme(&self, settings: &HaarSettings) -> Option<Scheme> {
        match &self.connected {
            Connected::Trivial => None,
            Connected::Circles(_) => Some(Scheme::Quadrature {
                nodes: settings.quadrature_nodes,
            }),
            Connected::Rotations3 { .. } => Some(Scheme::MonteCarlo {
                count: settings.monte_carlo_samples,
            }),
        }
    }

    fn connected_samples(&self, settings: &HaarSettings) -> Result<Vec<DMatrix<f64>>> {
        let n = self.ambient_dim;
        match &self.connected {
            Connected::Trivial => Ok(vec![DMatrix::identity(n, n)]),
            Connected::Circles(circles) => {
                let nodes = settings.quadrature_nodes;
                let total = nodes
                    .checked_pow(circles.len() as u32)
                    .filter(|&t| t <= MAX_GRID && nodes > 0)
                    .ok_or_else(|| {
                        Error::UnsupportedScheme(format!(
                            "quadrature({nodes}) over {} circles",
                            circles.len()
                        ))
                    })?;
                Ok((0..total)
                    .map(|mut idx| {
                        circles.iter().fold(DMatrix::identity(n, n), |g, xi| {
                            let j = idx % nodes;
                            idx /= nodes;
                            circle_exp(xi, TAU * j as f64 / nodes as f64) * g
                        })
                    })
                    .collect())
            }
            Connected::Rotations3 { frame } => HaarSampler {
                group: BuiltinGroup::SO3,
                frame: frame.clone(),
                seed: settings.seed,
                scheme: Scheme::MonteCarlo {
                    count: settings.monte_carlo_samples,
                },
            }
            .sample(),
        }
    }

    /// Haar quadrature or sample of the subgroup: every component
    /// representative times every sample of the identity component.
    pub fn elements(&self, settings: &HaarSettings) -> Result<Vec<DMatrix<f64>>> {
        let connected = self.connected_samples(settings)?;
        Ok(self
            .component_reps
            .iter()
            .flat_map(|r| connected.iter().map(move |c| r * c))
            .collect())
    }

    /// Deterministic non-identity elements, tried before random samples when
    /// searching for witnesses.
    pub fn probes(&self) -> Vec<DMatrix<f64>> {
        let n = self.ambient_dim;
        let connected: Vec<DMatrix<f64>> = match &self.connected {
            Connected::Trivial => vec![],
            Connected::Circles(circles) => circles
                .iter()
                .flat_map(|xi| (1..8).map(move |j| circle_exp(xi, TAU * j as f64 / 8.0)))
                .collect(),
            Connected::Rotations3 { frame } => signed_rotations3()
                .into_iter()
                .map(|g| frame * g * frame.transpose())
                .collect(),
        };
        let identity = DMatrix::identity(n, n);
        let mut out = Vec::new();
        for r in &self.component_reps {
            if max_abs_diff(r, &identity) > 0.0 {
                out.push(r.clone());
            }
        }
        for r in &self.component_reps {
            for c in &connected {
                out.push(r * c);
            }
        }
        out
    }

    /// Random elements drawn from `seed`: a uniform component times a Haar
    /// sample of the identity component.
    pub fn random_elements(&self, seed: u64, count: usize) -> Vec<DMatrix<f64>> {
        let n = self.ambient_dim;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..count)
            .map(|_| {
                let rep = &self.component_reps[rng.random_range(0..self.component_reps.len())];
                let c = match &self.connected {
                    Connected::Trivial => DMatrix::identity(n, n),
                    Connected::Circles(circles) => {
                        circles.iter().fold(DMatrix::identity(n, n), |g, xi| {
                            circle_exp(xi, TAU * rng.random::<f64>()) * g
                        })
                    }
                    Connected::Rotations3 { frame } => {
                        frame * random_rotation3(&mut rng) * frame.transpose()
                    }
                };
                rep * c
            })
            .collect()
    }
}

/// The stabilizer `G_x`.
#[derive(Debug, Clone, PartialEq)]
pub enum StabilizerModel {
    Finite(FiniteGroup),
    Closed(ClosedSubgroup),
}

impl StabilizerModel {
    pub fn is_trivial(&self) -> bool {
        match self {
            StabilizerModel::Finite(g) => g.is_trivial(),
            StabilizerModel::Closed(c) => c.is_finite() && c.component_reps.len() == 1,
        }
    }

    pub fn lie_algebra(&self) -> LieAlgebraBasis {
        match self {
            StabilizerModel::Finite(_) => LieAlgebraBasis { generators: vec![] },
            StabilizerModel::Closed(c) => c.lie_algebra.clone(),
        }
    }

    /// Enumerated elements (finite) or the Haar quadrature/sample set.
    pub fn elements(&self, settings: &HaarSettings) -> Result<Vec<DMatrix<f64>>> {
        match self {
            StabilizerModel::Finite(g) => Ok(g.elements().to_vec()),
            StabilizerModel::Closed(c) => c.elements(settings),
        }
    }

    /// Whether averaging over [`elements`](Self::elements) is exact.
    pub fn scheme(&self, settings: &HaarSettings) -> Option<Scheme> {
        match self {
            StabilizerModel::Finite(_) => None,
            StabilizerModel::Closed(c) => c.scheme(settings),
        }
    }
}

/// Computes `G_x`. Finite groups are enumerated and filtered; built-in groups
/// use the catalog of closed subgroups.
pub fn stabilizer(
    spec: &GroupSpec,
    x: &DVector<f64>,
    tol: &Tolerance,
    cap: usize,
) -> Result<StabilizerModel> {
    let n = spec.ambient_dim();
    if x.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: x.len(),
        });
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::UnsupportedStabilizer("non-finite point".into()));
    }
    match spec.kind() {
        GroupKind::Finite { generators } => {
            let group = FiniteGroup::close(n, generators, tol, cap)?;
            Ok(StabilizerModel::Finite(group.stabilizer_of(x, tol)))
        }
        GroupKind::Builtin { group, frame } => Ok(StabilizerModel::Closed(catalog_stabilizer(
            *group, frame, x, tol,
        )?)),
    }
}

/// Unit vector orthogonal to `u`, built from the coordinate axis least
/// aligned with it.
fn orthogonal_unit(u: &DVector<f64>) -> DVector<f64> {
    let axis = (0..u.len())
        .min_by(|&a, &b| u[a].abs().total_cmp(&u[b].abs()))
        .unwrap_or(0);
    let mut e = DVector::zeros(u.len());
    e[axis] = 1.0;
    let w = &e - u * u.dot(&e);
    w.normalize()
}

fn catalog_stabilizer(
    group: BuiltinGroup,
    frame: &DMatrix<f64>,
    x: &DVector<f64>,
    tol: &Tolerance,
) -> Result<ClosedSubgroup> {
    let n = group.defining_dim();
    if frame.nrows() != n {
        return Err(Error::UnsupportedStabilizer(format!(
            "{group} with a {}x{} frame",
            frame.nrows(),
            frame.ncols()
        )));
    }
    let identity = DMatrix::identity(n, n);
    let zero_cut = tol.match_eps * (1.0 + x.norm());
    let is_zero = x.norm() <= zero_cut;
    let full = |group: BuiltinGroup| -> ClosedSubgroup {
        let lie = GroupSpec {
            ambient_dim: n,
            kind: GroupKind::Builtin {
                group,
                frame: frame.clone(),
            },
        }
        .lie_algebra();
        let (connected, reps) = match group {
            BuiltinGroup::SO2 | BuiltinGroup::Torus(_) => (
                Connected::Circles(lie.generators.clone()),
                vec![identity.clone()],
            ),
            BuiltinGroup::O2 => {
                let flip = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
                (
                    Connected::Circles(lie.generators.clone()),
                    vec![identity.clone(), frame * flip * frame.transpose()],
                )
            }
            BuiltinGroup::SO3 => (
                Connected::Rotations3 {
                    frame: frame.clone(),
                },
                vec![identity.clone()],
            ),
            BuiltinGroup::O3 => (
                Connected::Rotations3 {
                    frame: frame.clone(),
                },
                vec![identity.clone(), -identity.clone()],
            ),
        };
        ClosedSubgroup {
            class: CatalogClass::Full(group),
            ambient_dim: n,
            lie_algebra: lie,
            component_reps: reps,
            connected,
        }
    };
    let discrete = |class: CatalogClass, reps: Vec<DMatrix<f64>>| ClosedSubgroup {
        class,
        ambient_dim: n,
        lie_algebra: LieAlgebraBasis { generators: vec![] },
        component_reps: reps,
        connected: Connected::Trivial,
    };

    let model = match group {
        BuiltinGroup::Torus(k) => {
            let y = frame.transpose() * x;
            let zero_blocks: Vec<bool> = (0..k)
                .map(|b| y[2 * b].hypot(y[2 * b + 1]) <= zero_cut)
                .collect();
            if zero_blocks.iter().all(|&z| z) {
                full(group)
            } else {
                let circles: Vec<DMatrix<f64>> = (0..k)
                    .filter(|&b| zero_blocks[b])
                    .map(|b| frame * planar_generator(n, b) * frame.transpose())
                    .collect();
                let connected = if circles.is_empty() {
                    Connected::Trivial
                } else {
                    Connected::Circles(circles.clone())
                };
                ClosedSubgroup {
                    class: CatalogClass::SubTorus { k, zero_blocks },
                    ambient_dim: n,
                    lie_algebra: LieAlgebraBasis {
                        generators: circles,
                    },
                    component_reps: vec![identity.clone()],
                    connected,
                }
            }
        }
        _ if is_zero => full(group),
        BuiltinGroup::SO2 => discrete(CatalogClass::Trivial(group), vec![identity.clone()]),
        BuiltinGroup::O2 => {
            let u = x.normalize();
            let reflection = &u * u.transpose() * 2.0 - &identity;
            discrete(
                CatalogClass::AxisReflection,
                vec![identity.clone(), reflection],
            )
        }
        BuiltinGroup::SO3 | BuiltinGroup::O3 => {
            let u = x.normalize();
            let axis = cross_matrix(&u);
            let mut reps = vec![identity.clone()];
            let class = if group == BuiltinGroup::O3 {
                let w = orthogonal_unit(&u);
                reps.push(&identity - &w * w.transpose() * 2.0);
                CatalogClass::AxisO2
            } else {
                CatalogClass::AxisCircle
            };
            ClosedSubgroup {
                class,
                ambient_dim: n,
                lie_algebra: LieAlgebraBasis {
                    generators: vec![axis.clone()],
                },
                component_reps: reps,
                connected: Connected::Circles(vec![axis]),
            }
        }
    };

    // Catalog entries must fix the point; anything else is a catalog bug.
    let eps = tol.match_eps * (1.0 + x.norm());
    for r in &model.component_reps {
        if (r * x - x).amax() > eps {
            return Err(Error::UnsupportedStabilizer(format!(
                "{} component does not fix the point",
                model.class
            )));
        }
    }
    for xi in &model.lie_algebra.generators {
        if (xi * x).amax() > eps {
            return Err(Error::UnsupportedStabilizer(format!(
                "{} generator moves the point",
                model.class
            )));
        }
    }
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tol() -> Tolerance {
        Tolerance::default()
    }

    fn m(n: usize, xs: &[f64]) -> DMatrix<f64> {
        DMatrix::from_row_slice(n, n, xs)
    }

    fn v(xs: &[f64]) -> DVector<f64> {
        DVector::from_row_slice(xs)
    }

    /// Truncated Taylor series with scaling and squaring; independent of
    /// `circle_exp`.
    fn expm(a: &DMatrix<f64>) -> DMatrix<f64> {
        let n = a.nrows();
        let s = 10;
        let scaled = a / f64::from(1 << s);
        let mut term = DMatrix::identity(n, n);
        let mut sum = DMatrix::identity(n, n);
        for k in 1..20 {
            term = &term * &scaled / k as f64;
            sum += &term;
        }
        for _ in 0..s {
            sum = &sum * &sum;
        }
        sum
    }

    #[test]
    fn parse_names() {
        assert_eq!(BuiltinGroup::parse("so3").unwrap(), BuiltinGroup::SO3);
        assert_eq!(
            BuiltinGroup::parse("TORUS(2)").unwrap(),
            BuiltinGroup::Torus(2)
        );
        assert!(BuiltinGroup::parse("TORUS(0)").is_err());
        assert!(BuiltinGroup::parse("SU2").is_err());
    }

    #[test]
    fn sign_flip_closure() {
        let g = FiniteGroup::close(1, &[m(1, &[-1.0])], &tol(), 16).unwrap();
        assert_eq!(g.order(), 2);
        assert!(g.position(&m(1, &[1.0]), &tol()).is_some());
        assert!(g.position(&m(1, &[-1.0]), &tol()).is_some());
    }

    #[test]
    fn empty_generators_give_identity() {
        let g = FiniteGroup::close(3, &[], &tol(), 16).unwrap();
        assert_eq!(g.order(), 1);
        assert_eq!(g.elements()[0], DMatrix::identity(3, 3));
    }

    #[test]
    fn quarter_turn_has_order_four() {
        let r = m(2, &[0.0, -1.0, 1.0, 0.0]);
        // Oracle: explicit powers r, r², r³, r⁴ = I are pairwise distinct.
        let powers: Vec<_> = (1..=4).map(|k| r.pow(k)).collect();
        assert_eq!(powers[3], DMatrix::identity(2, 2));
        let g = FiniteGroup::close(2, &[r], &tol(), 16).unwrap();
        assert_eq!(g.order(), 4);
        for p in &powers {
            assert!(g.position(p, &tol()).is_some());
        }
    }

    #[test]
    fn closure_is_closed_under_products_and_inverses() {
        let r = circle_exp(&cross_matrix(&v(&[0.0, 0.0, 1.0])), TAU / 6.0);
        let s = m(3, &[0.0, 1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, -1.0]);
        let g = FiniteGroup::close(3, &[r, s], &tol(), 1024).unwrap();
        assert_eq!(g.order(), 12);
        for a in g.elements() {
            assert!(g
                .position(&a.clone().try_inverse().unwrap(), &tol())
                .is_some());
            for b in g.elements() {
                assert!(g.position(&(a * b), &tol()).is_some());
            }
        }
    }

    #[test]
    fn irrational_rotation_hits_cap() {
        let r = rotation2(1.0);
        let err = FiniteGroup::close(2, &[r], &tol(), 64).unwrap_err();
        assert!(matches!(err, Error::CapExceeded { cap: 64 }));
    }

    #[test]
    fn singular_generator_is_rejected() {
        let err = FiniteGroup::close(2, &[m(2, &[1.0, 0.0, 0.0, 0.0])], &tol(), 8).unwrap_err();
        assert!(matches!(err, Error::SingularGenerator { index: 0, .. }));
        assert!(GroupSpec::finite(2, vec![m(2, &[1.0, 1.0, 1.0, 1.0])]).is_err());
    }

    #[test]
    fn non_orthogonal_finite_group_closes() {
        // Conjugate of the swap by a shear still has order 2.
        let q = m(2, &[1.0, 0.5, 0.0, 1.0]);
        let swap = m(2, &[0.0, 1.0, 1.0, 0.0]);
        let g = &q * swap * q.clone().try_inverse().unwrap();
        assert_eq!(FiniteGroup::close(2, &[g], &tol(), 8).unwrap().order(), 2);
    }

    #[test]
    fn lie_algebra_bases() {
        let so2 = lie_algebra_basis(BuiltinGroup::SO2);
        assert_eq!(so2.generators, vec![m(2, &[0.0, -1.0, 1.0, 0.0])]);
        let so3 = lie_algebra_basis(BuiltinGroup::SO3);
        assert_eq!(so3.dim(), 3);
        let lz = m(3, &[0.0, -1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        assert_eq!(so3.generators[2], lz);
        let t2 = lie_algebra_basis(BuiltinGroup::Torus(2));
        assert_eq!(t2.dim(), 2);
        assert_eq!(t2.generators[1][(3, 2)], 1.0);
        assert_eq!(t2.generators[1][(1, 0)], 0.0);
        for g in [
            BuiltinGroup::SO2,
            BuiltinGroup::SO3,
            BuiltinGroup::O2,
            BuiltinGroup::O3,
            BuiltinGroup::Torus(3),
        ] {
            let basis = lie_algebra_basis(g);
            assert_eq!(basis.dim(), g.lie_dim());
            for xi in &basis.generators {
                assert!(max_abs_diff(xi, &-xi.transpose()) == 0.0);
            }
        }
    }

    #[test]
    fn exponentials_land_in_the_group() {
        for g in [BuiltinGroup::SO2, BuiltinGroup::SO3, BuiltinGroup::Torus(2)] {
            for xi in &lie_algebra_basis(g).generators {
                for t in [0.1, 0.5, 1.0] {
                    let e = expm(&(xi * t));
                    assert!(orthogonality_residual(&e) <= tol().match_eps);
                    assert!((e.determinant() - 1.0).abs() <= tol().match_eps);
                    assert!(max_abs_diff(&e, &circle_exp(xi, t)) <= tol().match_eps);
                }
            }
        }
    }

    #[test]
    fn so2_quadrature_nodes_are_quarter_turns() {
        let s = HaarSampler::new(BuiltinGroup::SO2, 0, Scheme::Quadrature { nodes: 4 })
            .sample()
            .unwrap();
        let expected = [
            m(2, &[1.0, 0.0, 0.0, 1.0]),
            m(2, &[0.0, -1.0, 1.0, 0.0]),
            m(2, &[-1.0, 0.0, 0.0, -1.0]),
            m(2, &[0.0, 1.0, -1.0, 0.0]),
        ];
        assert_eq!(s.len(), 4);
        for (a, b) in s.iter().zip(expected.iter()) {
            assert!(max_abs_diff(a, b) < 1e-15);
        }
    }

    #[test]
    fn sampling_is_deterministic() {
        let sampler = HaarSampler::new(BuiltinGroup::SO3, 42, Scheme::MonteCarlo { count: 100 });
        assert_eq!(sampler.sample().unwrap(), sampler.sample().unwrap());
        let other = HaarSampler::new(BuiltinGroup::SO3, 43, Scheme::MonteCarlo { count: 100 });
        assert_ne!(sampler.sample().unwrap(), other.sample().unwrap());
    }

    #[test]
    fn so3_haar_mean_vanishes() {
        // The defining representation of SO(3) is irreducible and
        // non-trivial, so the Haar mean of the matrix entries is zero.
        let samples = HaarSampler::new(BuiltinGroup::SO3, 7, Scheme::MonteCarlo { count: 10_000 })
            .sample()
            .unwrap();
        let mean = samples.iter().fold(DMatrix::zeros(3, 3), |acc, g| acc + g) / 10_000.0;
        assert!(max_abs(&mean) < 0.05, "mean {mean}");
    }

    #[test]
    fn samples_are_orthogonal_with_matching_determinant() {
        let cases = [
            (BuiltinGroup::SO2, Scheme::MonteCarlo { count: 50 }),
            (BuiltinGroup::O2, Scheme::MonteCarlo { count: 50 }),
            (BuiltinGroup::O2, Scheme::Quadrature { nodes: 8 }),
            (BuiltinGroup::SO3, Scheme::MonteCarlo { count: 50 }),
            (BuiltinGroup::O3, Scheme::MonteCarlo { count: 50 }),
            (BuiltinGroup::Torus(2), Scheme::Quadrature { nodes: 5 }),
            (BuiltinGroup::Torus(2), Scheme::MonteCarlo { count: 50 }),
        ];
        for (group, scheme) in cases {
            let samples = HaarSampler::new(group, 3, scheme).sample().unwrap();
            let mut saw_negative = false;
            for g in &samples {
                assert!(orthogonality_residual(g) <= tol().match_eps);
                let det = g.determinant();
                assert!((det.abs() - 1.0).abs() <= tol().match_eps);
                if group.is_special() {
                    assert!(det > 0.0);
                }
                saw_negative |= det < 0.0;
            }
            if !group.is_special() {
                assert!(saw_negative, "{group} {scheme}");
            }
        }
        assert_eq!(
            HaarSampler::new(BuiltinGroup::Torus(2), 0, Scheme::Quadrature { nodes: 5 })
                .sample()
                .unwrap()
                .len(),
            25
        );
    }

    #[test]
    fn unsupported_pairings() {
        for (g, s) in [
            (BuiltinGroup::SO3, Scheme::Quadrature { nodes: 8 }),
            (BuiltinGroup::O2, Scheme::Quadrature { nodes: 7 }),
            (BuiltinGroup::SO2, Scheme::MonteCarlo { count: 0 }),
        ] {
            assert!(matches!(
                HaarSampler::new(g, 0, s).sample(),
                Err(Error::UnsupportedScheme(_))
            ));
        }
    }

    #[test]
    fn stabilizer_of_origin_under_sign_flip() {
        let spec = GroupSpec::finite(1, vec![m(1, &[-1.0])]).unwrap();
        match stabilizer(&spec, &v(&[0.0]), &tol(), 16).unwrap() {
            StabilizerModel::Finite(g) => assert_eq!(g.order(), 2),
            other => panic!("unexpected {other:?}"),
        }
        match stabilizer(&spec, &v(&[2.0]), &tol(), 16).unwrap() {
            StabilizerModel::Finite(g) => assert_eq!(g.order(), 1),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn so3_stabilizer_of_pole_is_z_rotations() {
        let spec = GroupSpec::builtin(BuiltinGroup::SO3);
        let x = v(&[0.0, 0.0, 1.0]);
        let StabilizerModel::Closed(c) = stabilizer(&spec, &x, &tol(), 16).unwrap() else {
            panic!("expected catalog stabilizer");
        };
        assert_eq!(c.class, CatalogClass::AxisCircle);
        let lz = m(3, &[0.0, -1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        assert!(max_abs_diff(&c.lie_algebra.generators[0], &lz) < 1e-15);
        for g in c.elements(&HaarSettings::default()).unwrap() {
            assert!((&g * &x - &x).amax() <= tol().match_eps);
        }
    }

    #[test]
    fn c4_stabilizer_of_axis_point_is_trivial() {
        let spec = GroupSpec::finite(2, vec![m(2, &[0.0, -1.0, 1.0, 0.0])]).unwrap();
        // Oracle: of I, r, r², r³ only I fixes (1, 0).
        let r = m(2, &[0.0, -1.0, 1.0, 0.0]);
        let x = v(&[1.0, 0.0]);
        let fixing = (0..4)
            .filter(|&k| (r.pow(k) * &x - &x).amax() < 1e-12)
            .count();
        assert_eq!(fixing, 1);
        let StabilizerModel::Finite(g) = stabilizer(&spec, &x, &tol(), 16).unwrap() else {
            panic!();
        };
        assert!(g.is_trivial());
    }

    #[test]
    fn catalog_elements_fix_the_point() {
        let settings = HaarSettings {
            seed: 1,
            monte_carlo_samples: 200,
            quadrature_nodes: 16,
        };
        let cases: Vec<(BuiltinGroup, Vec<f64>)> = vec![
            (BuiltinGroup::SO2, vec![0.0, 0.0]),
            (BuiltinGroup::SO2, vec![0.3, -2.0]),
            (BuiltinGroup::O2, vec![0.0, 0.0]),
            (BuiltinGroup::O2, vec![0.3, -2.0]),
            (BuiltinGroup::SO3, vec![0.0, 0.0, 0.0]),
            (BuiltinGroup::SO3, vec![1.0, 2.0, -0.5]),
            (BuiltinGroup::O3, vec![0.0, 0.0, 0.0]),
            (BuiltinGroup::O3, vec![1.0, 2.0, -0.5]),
            (BuiltinGroup::Torus(2), vec![0.0, 0.0, 1.0, 1.0]),
            (BuiltinGroup::Torus(2), vec![1.0, 0.0, 1.0, 1.0]),
            (BuiltinGroup::Torus(2), vec![0.0, 0.0, 0.0, 0.0]),
        ];
        for (group, point) in cases {
            let spec = GroupSpec::builtin(group);
            let x = v(&point);
            let stab = stabilizer(&spec, &x, &tol(), 16).unwrap();
            let eps = tol().match_eps * (1.0 + x.norm());
            for g in stab.elements(&settings).unwrap() {
                assert!((&g * &x - &x).amax() <= eps, "{group} at {point:?}");
                assert!(orthogonality_residual(&g) <= tol().match_eps);
            }
            if let StabilizerModel::Closed(c) = &stab {
                for g in c.probes().iter().chain(c.random_elements(5, 20).iter()) {
                    assert!((g * &x - &x).amax() <= eps, "{group} at {point:?}");
                }
            }
        }
    }

    #[test]
    fn o3_axis_stabilizer_has_two_components() {
        let spec = GroupSpec::builtin(BuiltinGroup::O3);
        let StabilizerModel::Closed(c) =
            stabilizer(&spec, &v(&[1.0, 1.0, 0.0]), &tol(), 16).unwrap()
        else {
            panic!();
        };
        assert_eq!(c.class, CatalogClass::AxisO2);
        assert_eq!(c.components(), 2);
        assert!(c.component_reps[1].determinant() < 0.0);
    }

    #[test]
    fn conjugated_spec_moves_stabilizer() {
        let q = m(3, &[0.0, 0.0, 1.0, 0.0, 1.0, 0.0, -1.0, 0.0, 0.0]);
        let spec = GroupSpec::builtin(BuiltinGroup::SO3)
            .conjugated(&q, &tol())
            .unwrap();
        let x = &q * v(&[0.0, 0.0, 1.0]);
        let StabilizerModel::Closed(c) = stabilizer(&spec, &x, &tol(), 16).unwrap() else {
            panic!();
        };
        assert!((&c.lie_algebra.generators[0] * &x).amax() < 1e-12);
        let bad = m(3, &[1.0, 1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0]);
        assert!(matches!(
            GroupSpec::builtin(BuiltinGroup::SO3).conjugated(&bad, &tol()),
            Err(Error::NotOrthogonal { .. })
        ));
    }
}
