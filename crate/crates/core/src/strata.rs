//! Orbit-type stratification: points are grouped by the conjugacy class of
//! their stabilizer, and each stratum carries the dimension of its image in
//! the orbit space.

use std::collections::{BTreeMap, HashSet};
use std::fmt;

use nalgebra::DVector;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::group::{CatalogClass, FiniteGroup, GroupKind, GroupSpec, StabilizerModel};
use crate::numerics::Tolerance;
use crate::tangent::{internal_tangent_space, AnalysisSettings};

/// Largest parent order accepted by [`enumerate_subgroups`].
pub const SUBGROUP_CAP: usize = 48;

/// All subgroups of a finite group, as bitmasks over the parent's element
/// indices, with conjugacy classes and proper inclusions.
#[derive(Debug, Clone, PartialEq)]
pub struct SubgroupLattice {
    parent: FiniteGroup,
    subgroups: Vec<u64>,
    classes: Vec<Vec<usize>>,
    class_of: Vec<usize>,
    inclusion: Vec<(usize, usize)>,
}

fn members(mask: u64) -> impl Iterator<Item = usize> {
    (0..64).filter(move |i| mask & (1 << i) != 0)
}

impl SubgroupLattice {
    pub fn parent(&self) -> &FiniteGroup {
        &self.parent
    }

    pub fn len(&self) -> usize {
        self.subgroups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subgroups.is_empty()
    }

    pub fn order(&self, i: usize) -> usize {
        self.subgroups[i].count_ones() as usize
    }

    pub fn subgroup(&self, i: usize) -> FiniteGroup {
        FiniteGroup::from_elements(
            self.parent.dim(),
            members(self.subgroups[i])
                .map(|e| self.parent.elements()[e].clone())
                .collect(),
        )
    }

    /// Conjugacy classes as lists of subgroup indices.
    pub fn classes(&self) -> &[Vec<usize>] {
        &self.classes
    }

    pub fn class_of(&self, i: usize) -> usize {
        self.class_of[i]
    }

    /// Pairs `(i, j)` with subgroup `i` properly contained in subgroup `j`.
    pub fn inclusion(&self) -> &[(usize, usize)] {
        &self.inclusion
    }

    /// Index of the subgroup whose elements match `h`.
    pub fn find(&self, h: &FiniteGroup, tol: &Tolerance) -> Option<usize> {
        let mut mask = 0u64;
        for g in h.elements() {
            mask |= 1 << self.parent.position(g, tol)?;
        }
        self.subgroups.iter().position(|&s| s == mask)
    }
}

/// Enumerates every subgroup of `g` by closing subgroups under one extra
/// element at a time, starting from the trivial group.
pub fn enumerate_subgroups(
    g: &FiniteGroup,
    cap: usize,
    tol: &Tolerance,
) -> Result<SubgroupLattice> {
    let order = g.order();
    if order > cap.min(64) {
        return Err(Error::CapExceeded { cap: cap.min(64) });
    }
    let elements = g.elements();
    let mut table = vec![vec![0usize; order]; order];
    for (i, a) in elements.iter().enumerate() {
        for (j, b) in elements.iter().enumerate() {
            table[i][j] = g.position(&(a * b), tol).ok_or_else(|| {
                Error::UnsupportedStabilizer("element list is not closed under products".into())
            })?;
        }
    }
    let inverse: Vec<usize> = (0..order)
        .map(|i| {
            (0..order)
                .find(|&j| table[i][j] == 0)
                .expect("finite group has inverses")
        })
        .collect();

    let close = |mut mask: u64| -> u64 {
        loop {
            let mut next = mask;
            for a in members(mask) {
                for b in members(mask) {
                    next |= 1 << table[a][b];
                }
            }
            if next == mask {
                return mask;
            }
            mask = next;
        }
    };

    let trivial = 1u64;
    let mut subgroups = vec![trivial];
    let mut seen: HashSet<u64> = HashSet::from([trivial]);
    let mut cursor = 0;
    while cursor < subgroups.len() {
        let h = subgroups[cursor];
        cursor += 1;
        for a in 0..order {
            if h & (1 << a) != 0 {
                continue;
            }
            let k = close(h | (1 << a));
            if !order.is_multiple_of(k.count_ones() as usize) {
                return Err(Error::UnsupportedStabilizer(format!(
                    "subgroup of order {} in a group of order {order}",
                    k.count_ones()
                )));
            }
            if seen.insert(k) {
                subgroups.push(k);
            }
        }
    }
    subgroups.sort_by_key(|&s| (s.count_ones(), s));

    let conjugate = |h: u64, x: usize| -> u64 {
        members(h).fold(0u64, |acc, e| acc | 1 << table[table[x][e]][inverse[x]])
    };
    let mut class_of = vec![usize::MAX; subgroups.len()];
    let mut classes: Vec<Vec<usize>> = Vec::new();
    for i in 0..subgroups.len() {
        if class_of[i] != usize::MAX {
            continue;
        }
        let id = classes.len();
        let conjugates: HashSet<u64> = (0..order).map(|x| conjugate(subgroups[i], x)).collect();
        let class: Vec<usize> = (0..subgroups.len())
            .filter(|&j| conjugates.contains(&subgroups[j]))
            .collect();
        for &j in &class {
            class_of[j] = id;
        }
        classes.push(class);
    }

    let mut inclusion = Vec::new();
    for (i, &a) in subgroups.iter().enumerate() {
        for (j, &b) in subgroups.iter().enumerate() {
            if i != j && a & b == a {
                inclusion.push((i, j));
            }
        }
    }

    Ok(SubgroupLattice {
        parent: g.clone(),
        subgroups,
        classes,
        class_of,
        inclusion,
    })
}

/// Conjugacy class of a stabilizer.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum StabilizerClass {
    /// Class index in the parent's [`SubgroupLattice`].
    Finite {
        class: usize,
        order: usize,
    },
    Catalog(CatalogClass),
}

impl fmt::Display for StabilizerClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StabilizerClass::Finite { class, order } => {
                write!(f, "finite:class{class}:order{order}")
            }
            StabilizerClass::Catalog(c) => write!(f, "{c}"),
        }
    }
}

impl Serialize for StabilizerClass {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Stratum {
    pub stabilizer_class: StabilizerClass,
    /// Indices into the input point list.
    pub members: Vec<usize>,
    pub sample_points: Vec<Vec<f64>>,
    pub quotient_dim: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StratificationReport {
    /// Sorted by quotient dimension, then class.
    pub strata: Vec<Stratum>,
    /// Stratum index of each input point.
    pub point_assignments: Vec<usize>,
}

/// Dimension of the stratum of `[x]` in the orbit space, `dim (T_xS)^{G_x}`.
pub fn stratum_dim(
    spec: &GroupSpec,
    x: &DVector<f64>,
    settings: &AnalysisSettings,
) -> Result<usize> {
    Ok(internal_tangent_space(spec, x, settings)?.internal_dim())
}

/// Partitions `points` by orbit type.
pub fn stratify(
    spec: &GroupSpec,
    points: &[DVector<f64>],
    settings: &AnalysisSettings,
) -> Result<StratificationReport> {
    let tol = &settings.tolerance;
    let lattice = match spec.kind() {
        GroupKind::Finite { generators } => {
            let parent =
                FiniteGroup::close(spec.ambient_dim(), generators, tol, settings.closure_cap)?;
            Some(enumerate_subgroups(&parent, SUBGROUP_CAP, tol)?)
        }
        GroupKind::Builtin { .. } => None,
    };

    let mut groups: BTreeMap<StabilizerClass, (Vec<usize>, usize)> = BTreeMap::new();
    let mut classes = Vec::with_capacity(points.len());
    for (index, x) in points.iter().enumerate() {
        let analysis = internal_tangent_space(spec, x, settings)?;
        let class = match (&analysis.context.stabilizer, &lattice) {
            (StabilizerModel::Finite(h), Some(lattice)) => {
                let i = lattice.find(h, tol).ok_or_else(|| {
                    Error::UnsupportedStabilizer("stabilizer missing from subgroup lattice".into())
                })?;
                StabilizerClass::Finite {
                    class: lattice.class_of(i),
                    order: h.order(),
                }
            }
            (StabilizerModel::Closed(c), _) => StabilizerClass::Catalog(c.class.clone()),
            (StabilizerModel::Finite(_), None) => unreachable!("finite stabilizer of a built-in"),
        };
        let dim = analysis.internal_dim();
        let entry = groups.entry(class.clone()).or_insert((Vec::new(), dim));
        if entry.1 != dim {
            return Err(Error::InconsistentStratum {
                class: class.to_string(),
                first: entry.1,
                other: dim,
            });
        }
        entry.0.push(index);
        classes.push(class);
    }

    let mut strata: Vec<Stratum> = groups
        .into_iter()
        .map(|(class, (members, dim))| Stratum {
            sample_points: members
                .iter()
                .map(|&i| points[i].iter().cloned().collect())
                .collect(),
            stabilizer_class: class,
            members,
            quotient_dim: dim,
        })
        .collect();
    strata.sort_by(|a, b| {
        (a.quotient_dim, &a.stabilizer_class).cmp(&(b.quotient_dim, &b.stabilizer_class))
    });
    let mut point_assignments = vec![0; points.len()];
    for (s, stratum) in strata.iter().enumerate() {
        for &i in &stratum.members {
            point_assignments[i] = s;
        }
    }
    Ok(StratificationReport {
        strata,
        point_assignments,
    })
}
