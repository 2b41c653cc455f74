//! Carriers with a subtraction operation and the measures used to integrate over them.
//!
//! Four carriers are supported: the integers, cyclic groups `Z/nZ`, integer
//! lattices `(hZ)^d` standing in for `R^d`, and dihedral groups `D_n`.
//! Points are always integer coordinate vectors; lattice real coordinates
//! are derived on demand as `k * h`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};

/// Largest lattice dimension a [`GroupPoint`] can hold.
pub const MAX_DIM: usize = 4;

/// An element of a [`GroupSpace`], stored inline as up to [`MAX_DIM`] integers.
///
/// Dihedral elements `r^k s^f` are encoded as `(k, f)` with `f` in `{0, 1}`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GroupPoint {
    coords: [i64; MAX_DIM],
    len: u8,
}

impl GroupPoint {
    /// Builds a raw point without checking it against any group.
    ///
    /// # Panics
    /// If more than [`MAX_DIM`] coordinates are given.
    pub fn new(coords: &[i64]) -> Self {
        assert!(coords.len() <= MAX_DIM, "at most {MAX_DIM} coordinates");
        let mut buf = [0; MAX_DIM];
        buf[..coords.len()].copy_from_slice(coords);
        Self {
            coords: buf,
            len: coords.len() as u8,
        }
    }

    pub fn scalar(k: i64) -> Self {
        Self::new(&[k])
    }

    pub fn coords(&self) -> &[i64] {
        &self.coords[..self.len as usize]
    }

    pub fn dim(&self) -> usize {
        self.len as usize
    }

    fn map(&self, f: impl Fn(i64) -> i64) -> Self {
        let mut out = *self;
        for c in &mut out.coords[..self.len as usize] {
            *c = f(*c);
        }
        out
    }

    fn zip(&self, other: &Self, f: impl Fn(i64, i64) -> i64) -> Self {
        let mut out = *self;
        for i in 0..self.len as usize {
            out.coords[i] = f(self.coords[i], other.coords[i]);
        }
        out
    }
}

impl fmt::Debug for GroupPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for GroupPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.coords() {
            [k] => write!(f, "{k}"),
            cs => {
                write!(f, "(")?;
                for (i, c) in cs.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{c}")?;
                }
                write!(f, ")")
            }
        }
    }
}

impl Serialize for GroupPoint {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.coords().serialize(s)
    }
}

/// The carrier of a convolution.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum GroupSpace {
    Integers,
    Cyclic(u32),
    /// `(hZ)^dim`, a grid discretization of `R^dim`.
    Lattice {
        dim: usize,
        spacing: f64,
    },
    /// The dihedral group of order `2n`, elements `r^k s^f`,
    /// with `r^n = s^2 = e` and `s r s = r^-1`.
    Dihedral(u32),
}

impl GroupSpace {
    pub fn cyclic(n: u32) -> Result<Self> {
        Self::Cyclic(n).validated()
    }

    pub fn lattice(dim: usize, spacing: f64) -> Result<Self> {
        Self::Lattice { dim, spacing }.validated()
    }

    pub fn dihedral(n: u32) -> Result<Self> {
        Self::Dihedral(n).validated()
    }

    pub fn validated(self) -> Result<Self> {
        match self {
            Self::Cyclic(0) | Self::Dihedral(0) => {
                Err(Error::InvalidGroup("order must be positive".into()))
            }
            Self::Lattice { dim, spacing } => {
                if dim == 0 || dim > MAX_DIM {
                    Err(Error::InvalidGroup(format!(
                        "lattice dimension must be in 1..={MAX_DIM}, got {dim}"
                    )))
                } else if !(spacing.is_finite() && spacing > 0.0) {
                    Err(Error::InvalidGroup(format!(
                        "lattice spacing must be positive, got {spacing}"
                    )))
                } else {
                    Ok(self)
                }
            }
            _ => Ok(self),
        }
    }

    /// Number of integer coordinates per point.
    pub fn point_dim(&self) -> usize {
        match self {
            Self::Integers | Self::Cyclic(_) => 1,
            Self::Lattice { dim, .. } => *dim,
            Self::Dihedral(_) => 2,
        }
    }

    pub fn is_abelian(&self) -> bool {
        match self {
            Self::Dihedral(n) => *n <= 2,
            _ => true,
        }
    }

    /// Number of elements, if finite.
    pub fn order(&self) -> Option<u64> {
        match self {
            Self::Cyclic(n) => Some(u64::from(*n)),
            Self::Dihedral(n) => Some(2 * u64::from(*n)),
            _ => None,
        }
    }

    /// All elements of a finite group in ascending order.
    pub fn elements(&self) -> Option<Vec<GroupPoint>> {
        match self {
            Self::Cyclic(n) => Some((0..i64::from(*n)).map(GroupPoint::scalar).collect()),
            Self::Dihedral(n) => Some(
                (0..i64::from(*n))
                    .flat_map(|k| [GroupPoint::new(&[k, 0]), GroupPoint::new(&[k, 1])])
                    .collect(),
            ),
            _ => None,
        }
    }

    /// Grid spacing for lattices, `None` otherwise.
    pub fn spacing(&self) -> Option<f64> {
        match self {
            Self::Lattice { spacing, .. } => Some(*spacing),
            _ => None,
        }
    }

    pub fn zero(&self) -> GroupPoint {
        GroupPoint::new(&[0; MAX_DIM][..self.point_dim()])
    }

    /// Builds a point of this group; cyclic and rotation coordinates are reduced.
    pub fn point(&self, coords: &[i64]) -> Result<GroupPoint> {
        if coords.len() != self.point_dim() {
            return Err(Error::DimensionMismatch {
                what: "point coordinates",
                expected: self.point_dim(),
                found: coords.len(),
            });
        }
        let p = GroupPoint::new(coords);
        match self {
            Self::Cyclic(n) => Ok(p.map(|k| k.rem_euclid(i64::from(*n)))),
            Self::Dihedral(n) => {
                if coords[1] != 0 && coords[1] != 1 {
                    return Err(Error::PointNotInGroup {
                        point: p,
                        group: *self,
                    });
                }
                Ok(GroupPoint::new(&[
                    coords[0].rem_euclid(i64::from(*n)),
                    coords[1],
                ]))
            }
            _ => Ok(p),
        }
    }

    /// Checks that `p` is a canonical element of this group.
    pub fn check(&self, p: &GroupPoint) -> Result<()> {
        let ok = p.dim() == self.point_dim()
            && match self {
                Self::Cyclic(n) => (0..i64::from(*n)).contains(&p.coords[0]),
                Self::Dihedral(n) => {
                    (0..i64::from(*n)).contains(&p.coords[0])
                        && (p.coords[1] == 0 || p.coords[1] == 1)
                }
                _ => true,
            };
        if ok {
            Ok(())
        } else {
            Err(Error::PointNotInGroup {
                point: *p,
                group: *self,
            })
        }
    }

    pub fn add(&self, a: &GroupPoint, b: &GroupPoint) -> Result<GroupPoint> {
        self.check(a)?;
        self.check(b)?;
        Ok(self.add_unchecked(a, b))
    }

    /// `x - t`; for the dihedral group this is `x * t^-1`.
    pub fn sub(&self, x: &GroupPoint, t: &GroupPoint) -> Result<GroupPoint> {
        self.check(x)?;
        self.check(t)?;
        Ok(self.sub_unchecked(x, t))
    }

    pub fn neg(&self, x: &GroupPoint) -> Result<GroupPoint> {
        self.check(x)?;
        Ok(self.neg_unchecked(x))
    }

    /// The group operation on canonical points. Written additively; for
    /// the dihedral group `add(a, b) = a * b`.
    #[inline]
    pub(crate) fn add_unchecked(&self, a: &GroupPoint, b: &GroupPoint) -> GroupPoint {
        match self {
            Self::Integers | Self::Lattice { .. } => a.zip(b, |x, y| x + y),
            Self::Cyclic(n) => a.zip(b, |x, y| (x + y).rem_euclid(i64::from(*n))),
            Self::Dihedral(n) => {
                let (k1, f1) = (a.coords[0], a.coords[1]);
                let (k2, f2) = (b.coords[0], b.coords[1]);
                // r^k1 s^f1 r^k2 s^f2 = r^(k1 ± k2) s^(f1 ^ f2)
                let k = if f1 == 1 { k1 - k2 } else { k1 + k2 };
                GroupPoint::new(&[k.rem_euclid(i64::from(*n)), f1 ^ f2])
            }
        }
    }

    #[inline]
    pub(crate) fn neg_unchecked(&self, a: &GroupPoint) -> GroupPoint {
        match self {
            Self::Integers | Self::Lattice { .. } => a.map(|x| -x),
            Self::Cyclic(n) => a.map(|x| (-x).rem_euclid(i64::from(*n))),
            Self::Dihedral(n) => {
                if a.coords[1] == 1 {
                    *a
                } else {
                    GroupPoint::new(&[(-a.coords[0]).rem_euclid(i64::from(*n)), 0])
                }
            }
        }
    }

    #[inline]
    pub(crate) fn sub_unchecked(&self, x: &GroupPoint, t: &GroupPoint) -> GroupPoint {
        self.add_unchecked(x, &self.neg_unchecked(t))
    }

    /// Real coordinates `k * h` of a lattice point.
    pub fn embed(&self, p: &GroupPoint) -> Result<Vec<f64>> {
        match self {
            Self::Lattice { spacing, .. } => {
                Ok(p.coords().iter().map(|&k| k as f64 * spacing).collect())
            }
            _ => Err(Error::NotLattice(*self)),
        }
    }

    /// Euclidean norm of the embedded lattice point.
    pub(crate) fn lattice_norm(&self, p: &GroupPoint) -> f64 {
        let h = self.spacing().unwrap_or(1.0);
        p.coords()
            .iter()
            .map(|&k| {
                let x = k as f64 * h;
                x * x
            })
            .sum::<f64>()
            .sqrt()
    }

    /// Unit step along `axis` (lattice and integer groups).
    pub(crate) fn unit(&self, axis: usize) -> GroupPoint {
        let mut c = [0; MAX_DIM];
        c[axis] = 1;
        GroupPoint::new(&c[..self.point_dim()])
    }
}

impl fmt::Display for GroupSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Integers => write!(f, "Z"),
            Self::Cyclic(n) => write!(f, "Zn:{n}"),
            Self::Lattice { dim, spacing } => write!(f, "lattice:{dim}:{spacing}"),
            Self::Dihedral(n) => write!(f, "D{n}"),
        }
    }
}

impl FromStr for GroupSpace {
    type Err = Error;

    /// Parses `Z`, `Zn:<n>`, `lattice:<d>:<h>` or `D<n>`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidGroup(format!("cannot parse group `{s}`"));
        if s == "Z" {
            return Ok(Self::Integers);
        }
        if let Some(n) = s.strip_prefix("Zn:") {
            return Self::cyclic(n.parse().map_err(|_| bad())?);
        }
        if let Some(rest) = s.strip_prefix("lattice:") {
            let (d, h) = rest.split_once(':').ok_or_else(bad)?;
            return Self::lattice(d.parse().map_err(|_| bad())?, h.parse().map_err(|_| bad())?);
        }
        if let Some(n) = s.strip_prefix('D') {
            return Self::dihedral(n.parse().map_err(|_| bad())?);
        }
        Err(bad())
    }
}

/// How a measure assigns weight to points.
#[derive(Clone, Debug, PartialEq)]
pub enum WeightKind {
    /// Weight 1 everywhere.
    Counting,
    /// Cell volume `h^d` on a lattice.
    GridVolume,
    /// Per-point weights with a default for points not in the table.
    /// Carries no invariance guarantees.
    Weighted {
        table: Arc<BTreeMap<GroupPoint, f64>>,
        default: f64,
    },
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct InvarianceFlags {
    pub left_invariant: bool,
    pub right_invariant: bool,
    pub neg_invariant: bool,
}

impl InvarianceFlags {
    const ALL: Self = Self {
        left_invariant: true,
        right_invariant: true,
        neg_invariant: true,
    };
}

/// A discretized measure: integration is a weighted sum over points.
#[derive(Clone, Debug, PartialEq)]
pub struct InvariantMeasure {
    group: GroupSpace,
    kind: WeightKind,
    flags: InvarianceFlags,
}

impl InvariantMeasure {
    pub fn counting(group: GroupSpace) -> Self {
        Self {
            group,
            kind: WeightKind::Counting,
            flags: InvarianceFlags::ALL,
        }
    }

    pub fn grid_volume(group: GroupSpace) -> Result<Self> {
        match group {
            GroupSpace::Lattice { .. } => Ok(Self {
                group,
                kind: WeightKind::GridVolume,
                flags: InvarianceFlags::ALL,
            }),
            other => Err(Error::NotLattice(other)),
        }
    }

    /// Arbitrary nonnegative weights; no invariance is declared.
    pub fn weighted(
        group: GroupSpace,
        table: BTreeMap<GroupPoint, f64>,
        default: f64,
    ) -> Result<Self> {
        for (p, w) in &table {
            group.check(p)?;
            if !(w.is_finite() && *w >= 0.0) {
                return Err(Error::InvalidParameter(format!("weight {w} at {p}")));
            }
        }
        if !(default.is_finite() && default >= 0.0) {
            return Err(Error::InvalidParameter(format!("default weight {default}")));
        }
        Ok(Self {
            group,
            kind: WeightKind::Weighted {
                table: Arc::new(table),
                default,
            },
            flags: InvarianceFlags::default(),
        })
    }

    pub fn group(&self) -> &GroupSpace {
        &self.group
    }

    pub fn kind(&self) -> &WeightKind {
        &self.kind
    }

    pub fn flags(&self) -> InvarianceFlags {
        self.flags
    }

    /// Weight of a point; the point is assumed to belong to the group.
    #[inline]
    pub fn weight(&self, x: &GroupPoint) -> f64 {
        match &self.kind {
            WeightKind::Counting => 1.0,
            WeightKind::GridVolume => self.cell_volume(),
            WeightKind::Weighted { table, default } => table.get(x).copied().unwrap_or(*default),
        }
    }

    /// Weight shared by all points, when the measure is uniform.
    pub fn uniform_weight(&self) -> Option<f64> {
        match &self.kind {
            WeightKind::Counting => Some(1.0),
            WeightKind::GridVolume => Some(self.cell_volume()),
            WeightKind::Weighted { table, default } => table.is_empty().then_some(*default),
        }
    }

    fn cell_volume(&self) -> f64 {
        match self.group {
            GroupSpace::Lattice { dim, spacing } => spacing.powi(dim as i32),
            _ => 1.0,
        }
    }

    pub(crate) fn ensure_group(&self, group: &GroupSpace) -> Result<()> {
        if &self.group == group {
            Ok(())
        } else {
            Err(Error::SpaceMismatch {
                expected: *group,
                found: self.group,
            })
        }
    }
}
