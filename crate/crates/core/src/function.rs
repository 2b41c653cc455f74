//! Finitely supported vector-valued functions on a group, and analytic
//! functions on lattices.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::group::{GroupPoint, GroupSpace, InvariantMeasure};
use crate::sum::VecAccumulator;

/// A map `G -> R^m` with finite support.
///
/// Support points are kept sorted; values are stored flat, `vdim` per point.
/// Exact zero vectors are never stored.
#[derive(Clone, Debug, PartialEq)]
pub struct SampledFunction {
    group: GroupSpace,
    vdim: usize,
    points: Vec<GroupPoint>,
    values: Vec<f64>,
}

impl SampledFunction {
    /// Builds a function from `(point, value)` pairs. Points are validated
    /// against the group; duplicates are rejected and zero vectors dropped.
    pub fn new<I>(group: GroupSpace, vdim: usize, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (GroupPoint, Vec<f64>)>,
    {
        if vdim == 0 {
            return Err(Error::InvalidParameter(
                "value dimension must be positive".into(),
            ));
        }
        let mut pairs: Vec<(GroupPoint, Vec<f64>)> = Vec::new();
        for (p, v) in entries {
            group.check(&p)?;
            if v.len() != vdim {
                return Err(Error::DimensionMismatch {
                    what: "function value",
                    expected: vdim,
                    found: v.len(),
                });
            }
            pairs.push((p, v));
        }
        pairs.sort_by_key(|a| a.0);
        if let Some(w) = pairs.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(Error::DuplicatePoint(w[0].0));
        }
        let mut points = Vec::with_capacity(pairs.len());
        let mut values = Vec::with_capacity(pairs.len() * vdim);
        for (p, v) in pairs {
            if v.iter().any(|&c| c != 0.0) {
                points.push(p);
                values.extend(v);
            }
        }
        Ok(Self {
            group,
            vdim,
            points,
            values,
        })
    }

    /// Scalar-valued function from `(point, value)` pairs.
    pub fn scalar<I>(group: GroupSpace, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (GroupPoint, f64)>,
    {
        Self::new(group, 1, entries.into_iter().map(|(p, v)| (p, vec![v])))
    }

    /// Scalar function on `Z` with `values[i]` at `offset + i`.
    pub fn from_integer_samples(offset: i64, values: &[f64]) -> Self {
        Self::scalar(
            GroupSpace::Integers,
            values
                .iter()
                .enumerate()
                .map(|(i, &v)| (GroupPoint::scalar(offset + i as i64), v)),
        )
        .expect("integer samples are always valid")
    }

    pub fn zero(group: GroupSpace, vdim: usize) -> Self {
        Self {
            group,
            vdim,
            points: Vec::new(),
            values: Vec::new(),
        }
    }

    /// `value * delta_point`.
    pub fn delta(group: GroupSpace, point: GroupPoint, value: Vec<f64>) -> Result<Self> {
        let vdim = value.len();
        Self::new(group, vdim, [(point, value)])
    }

    /// Assembles a function from already sorted, unique points.
    /// Zero vectors are pruned here.
    pub(crate) fn from_sorted_parts(
        group: GroupSpace,
        vdim: usize,
        pts: impl IntoIterator<Item = (GroupPoint, Vec<f64>)>,
    ) -> Self {
        let mut points = Vec::new();
        let mut values = Vec::new();
        for (p, v) in pts {
            debug_assert_eq!(v.len(), vdim);
            debug_assert!(points.last().is_none_or(|last| *last < p));
            if v.iter().any(|&c| c != 0.0) {
                points.push(p);
                values.extend(v);
            }
        }
        Self {
            group,
            vdim,
            points,
            values,
        }
    }

    pub fn group(&self) -> &GroupSpace {
        &self.group
    }

    pub fn vdim(&self) -> usize {
        self.vdim
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Sorted support points.
    pub fn support(&self) -> &[GroupPoint] {
        &self.points
    }

    pub fn iter(&self) -> impl Iterator<Item = (&GroupPoint, &[f64])> + '_ {
        self.points.iter().zip(self.values.chunks_exact(self.vdim))
    }

    /// Stored value at `x`, or `None` outside the support.
    #[inline]
    pub fn get(&self, x: &GroupPoint) -> Option<&[f64]> {
        self.points
            .binary_search(x)
            .ok()
            .map(|i| self.value_at_index(i))
    }

    #[inline]
    pub(crate) fn value_at_index(&self, i: usize) -> &[f64] {
        &self.values[i * self.vdim..(i + 1) * self.vdim]
    }

    /// Value at `x`; zero outside the support.
    pub fn eval(&self, x: &GroupPoint) -> Result<Vec<f64>> {
        self.group.check(x)?;
        Ok(self
            .get(x)
            .map_or_else(|| vec![0.0; self.vdim], <[f64]>::to_vec))
    }

    /// `sum_x w(x) f(x)`.
    pub fn integral(&self, mu: &InvariantMeasure) -> Result<Vec<f64>> {
        mu.ensure_group(&self.group)?;
        let mut acc = VecAccumulator::new(self.vdim);
        for (p, v) in self.iter() {
            acc.add_scaled(mu.weight(p), v);
        }
        Ok(acc.finish())
    }

    /// `sum_x w(x) |f(x)|`, Euclidean norm of each value.
    pub fn norm_integral(&self, mu: &InvariantMeasure) -> Result<f64> {
        mu.ensure_group(&self.group)?;
        Ok(self
            .iter()
            .map(|(p, v)| mu.weight(p) * norm(v))
            .collect::<crate::sum::CompensatedSum>()
            .value())
    }

    /// `a f + b g`, pruning cancelled entries.
    pub fn lin_comb(a: f64, f: &Self, b: f64, g: &Self) -> Result<Self> {
        f.ensure_compatible(g)?;
        let vdim = f.vdim;
        let mut out = Vec::with_capacity(f.len() + g.len());
        let (mut i, mut j) = (0, 0);
        while i < f.len() || j < g.len() {
            let take_f = j >= g.len() || (i < f.len() && f.points[i] <= g.points[j]);
            let take_g = i >= f.len() || (j < g.len() && g.points[j] <= f.points[i]);
            let p = if take_f { f.points[i] } else { g.points[j] };
            let mut v = vec![0.0; vdim];
            if take_f {
                for (o, x) in v.iter_mut().zip(f.value_at_index(i)) {
                    *o += a * x;
                }
                i += 1;
            }
            if take_g {
                for (o, x) in v.iter_mut().zip(g.value_at_index(j)) {
                    *o += b * x;
                }
                j += 1;
            }
            out.push((p, v));
        }
        Ok(Self::from_sorted_parts(f.group, vdim, out))
    }

    pub fn scale(&self, c: f64) -> Self {
        Self::from_sorted_parts(
            self.group,
            self.vdim,
            self.iter()
                .map(|(p, v)| (*p, v.iter().map(|x| c * x).collect())),
        )
    }

    /// `x -> f(x - by)`: moves the support to `p + by`.
    pub fn shifted(&self, by: &GroupPoint) -> Result<Self> {
        self.group.check(by)?;
        Self::new(
            self.group,
            self.vdim,
            self.iter()
                .map(|(p, v)| (self.group.add_unchecked(p, by), v.to_vec())),
        )
    }

    /// Applies `op` to every stored value, producing functions of dimension `vdim`.
    pub fn map_values(&self, vdim: usize, op: impl Fn(&GroupPoint, &[f64]) -> Vec<f64>) -> Self {
        Self::from_sorted_parts(self.group, vdim, self.iter().map(|(p, v)| (*p, op(p, v))))
    }

    /// Largest absolute component.
    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `max_x |f(x)|` in the Euclidean norm of values.
    pub fn sup_norm(&self) -> f64 {
        self.iter().map(|(_, v)| norm(v)).fold(0.0, f64::max)
    }

    /// `max_x |f(x) - g(x)|` over the union of supports.
    pub fn sup_distance(&self, other: &Self) -> Result<f64> {
        Ok(Self::lin_comb(1.0, self, -1.0, other)?.sup_norm())
    }

    pub(crate) fn ensure_compatible(&self, other: &Self) -> Result<()> {
        if self.group != other.group {
            return Err(Error::SpaceMismatch {
                expected: self.group,
                found: other.group,
            });
        }
        if self.vdim != other.vdim {
            return Err(Error::DimensionMismatch {
                what: "value dimension",
                expected: self.vdim,
                found: other.vdim,
            });
        }
        Ok(())
    }
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

type ScalarField = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
type VectorField = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

/// A scalar function on a lattice given by formulas: value, gradient and
/// optionally the Hessian (row-major `d x d`), vanishing outside the closed
/// ball of `support_radius`.
#[derive(Clone)]
pub struct SymbolicFunction {
    group: GroupSpace,
    support_radius: f64,
    value: ScalarField,
    gradient: VectorField,
    hessian: Option<VectorField>,
}

impl fmt::Debug for SymbolicFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SymbolicFunction")
            .field("group", &self.group)
            .field("support_radius", &self.support_radius)
            .field("max_order", &self.max_order())
            .finish()
    }
}

impl SymbolicFunction {
    pub fn new(
        group: GroupSpace,
        support_radius: f64,
        value: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        gradient: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    ) -> Result<Self> {
        if !matches!(group, GroupSpace::Lattice { .. }) {
            return Err(Error::NotLattice(group));
        }
        if !(support_radius.is_finite() && support_radius > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "support radius must be positive, got {support_radius}"
            )));
        }
        Ok(Self {
            group,
            support_radius,
            value: Arc::new(value),
            gradient: Arc::new(gradient),
            hessian: None,
        })
    }

    pub fn with_hessian(
        mut self,
        hessian: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    ) -> Self {
        self.hessian = Some(Arc::new(hessian));
        self
    }

    pub fn group(&self) -> &GroupSpace {
        &self.group
    }

    pub fn support_radius(&self) -> f64 {
        self.support_radius
    }

    /// Highest derivative order with an analytic formula.
    pub fn max_order(&self) -> usize {
        if self.hessian.is_some() {
            2
        } else {
            1
        }
    }

    pub fn value_at(&self, x: &[f64]) -> f64 {
        (self.value)(x)
    }

    pub fn gradient_at(&self, x: &[f64]) -> Vec<f64> {
        (self.gradient)(x)
    }

    pub fn hessian_at(&self, x: &[f64]) -> Option<Vec<f64>> {
        self.hessian.as_ref().map(|h| h(x))
    }

    /// Lattice points whose embedded coordinate lies in the closed support ball.
    pub(crate) fn support_points(&self) -> Vec<(GroupPoint, Vec<f64>)> {
        let GroupSpace::Lattice { dim, spacing } = self.group else {
            unreachable!("constructor enforces a lattice")
        };
        let reach = (self.support_radius / spacing).ceil() as i64;
        let mut out = Vec::new();
        let mut idx = vec![-reach; dim];
        loop {
            let x: Vec<f64> = idx.iter().map(|&k| k as f64 * spacing).collect();
            if crate::function::norm(&x) <= self.support_radius {
                out.push((GroupPoint::new(&idx), x));
            }
            // odometer increment, last axis fastest keeps the output sorted
            let mut axis = dim;
            loop {
                if axis == 0 {
                    return out;
                }
                axis -= 1;
                if idx[axis] < reach {
                    idx[axis] += 1;
                    break;
                }
                idx[axis] = -reach;
            }
        }
    }

    /// Samples `x -> op(x)` on the lattice points of the support ball.
    pub(crate) fn sample_with(
        &self,
        vdim: usize,
        op: impl Fn(&[f64]) -> Vec<f64>,
    ) -> SampledFunction {
        SampledFunction::from_sorted_parts(
            self.group,
            vdim,
            self.support_points().into_iter().map(|(p, x)| (p, op(&x))),
        )
    }

    /// The function values on the lattice.
    pub fn sample(&self) -> SampledFunction {
        self.sample_with(1, |x| vec![self.value_at(x)])
    }

    /// The gradient as a `1 x d` Jacobian field (vdim `d`).
    pub fn sample_gradient(&self) -> SampledFunction {
        self.sample_with(self.group.point_dim(), |x| self.gradient_at(x))
    }

    /// `t -> D_t g(v)`.
    pub fn sample_directional(&self, v: &[f64]) -> SampledFunction {
        self.sample_with(1, |x| {
            vec![self.gradient_at(x).iter().zip(v).map(|(a, b)| a * b).sum()]
        })
    }

    /// `t -> D^2_t g(v, w)`; `None` without a Hessian formula.
    pub fn sample_second_directional(&self, v: &[f64], w: &[f64]) -> Option<SampledFunction> {
        let d = self.group.point_dim();
        let hess = self.hessian.as_ref()?;
        Some(self.sample_with(1, |x| {
            let h = hess(x);
            let mut s = 0.0;
            for i in 0..d {
                for j in 0..d {
                    s += v[i] * h[i * d + j] * w[j];
                }
            }
            vec![s]
        }))
    }
}
