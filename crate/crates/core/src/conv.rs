//! Convolution `(f *_{L,mu} g)(x) = sum_t w(t) L(f(t), g(x - t))` and the
//! executable forms of its algebraic and integral laws.
//!
//! Sums run over the support of one operand, in ascending point order,
//! with compensated accumulation. The scatter (`convolve`) and gather
//! (`convolve_at`, `convolve_parallel`) paths add the same terms in the
//! same order per output point, so they agree bit for bit.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::function::{norm, SampledFunction};
use crate::group::{GroupPoint, GroupSpace, InvariantMeasure, MAX_DIM};
use crate::pairing::Pairing;
use crate::sum::CompensatedSum;

/// Which integrand defines the convolution.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub enum Variant {
    /// `L(f(t), g(x - t))`, summed over `t` in `supp f`.
    #[default]
    Standard,
    /// `L(f(-t + x), g(t))`, summed over `t` in `supp g`.
    NonabelianAlt,
}

/// Operands of a convolution, validated on construction.
#[derive(Clone, Copy, Debug)]
pub struct ConvRequest<'a> {
    pub f: &'a SampledFunction,
    pub g: &'a SampledFunction,
    pub pairing: &'a Pairing,
    pub measure: &'a InvariantMeasure,
    pub variant: Variant,
}

/// Both sides of the integral identity `int (f * g) = L(int f, int g)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IdentityReport {
    pub lhs: Vec<f64>,
    pub rhs: Vec<f64>,
    pub deviation: f64,
    pub pass: bool,
}

/// The double sum `sum_x sum_t w(x) w(t) L(f(t), g(x - t))` in both orders.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FubiniReport {
    pub x_outer: Vec<f64>,
    pub t_outer: Vec<f64>,
    pub deviation: f64,
    pub pass: bool,
}

/// Relative tolerance of the Fubini order-swap check.
pub const FUBINI_TOL: f64 = 1e-12;

/// Convolves with the standard integrand.
pub fn convolve(
    f: &SampledFunction,
    g: &SampledFunction,
    pairing: &Pairing,
    measure: &InvariantMeasure,
) -> Result<SampledFunction> {
    ConvRequest::new(f, g, pairing, measure)?.convolve()
}

#[inline]
fn accumulate(
    pairing: &Pairing,
    left: &[f64],
    right: &[f64],
    weight: f64,
    scratch: &mut [f64],
    acc: &mut [CompensatedSum],
) {
    pairing.apply_into(left, right, scratch);
    for (a, v) in acc.iter_mut().zip(scratch.iter()) {
        a.add(weight * v);
    }
}

fn finish(acc: &[CompensatedSum]) -> Vec<f64> {
    acc.iter().map(CompensatedSum::value).collect()
}

impl<'a> ConvRequest<'a> {
    pub fn new(
        f: &'a SampledFunction,
        g: &'a SampledFunction,
        pairing: &'a Pairing,
        measure: &'a InvariantMeasure,
    ) -> Result<Self> {
        let req = Self {
            f,
            g,
            pairing,
            measure,
            variant: Variant::Standard,
        };
        req.validate()?;
        Ok(req)
    }

    pub fn with_variant(mut self, variant: Variant) -> Self {
        self.variant = variant;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let group = self.f.group();
        if self.g.group() != group {
            return Err(Error::SpaceMismatch {
                expected: *group,
                found: *self.g.group(),
            });
        }
        self.measure.ensure_group(group)?;
        if self.f.vdim() != self.pairing.dim_left() {
            return Err(Error::DimensionMismatch {
                what: "f value vs pairing left argument",
                expected: self.pairing.dim_left(),
                found: self.f.vdim(),
            });
        }
        if self.g.vdim() != self.pairing.dim_right() {
            return Err(Error::DimensionMismatch {
                what: "g value vs pairing right argument",
                expected: self.pairing.dim_right(),
                found: self.g.vdim(),
            });
        }
        Ok(())
    }

    fn group(&self) -> &GroupSpace {
        self.f.group()
    }

    /// The convolution at a single point.
    pub fn convolve_at(&self, x: &GroupPoint) -> Result<Vec<f64>> {
        self.group().check(x)?;
        Ok(self.gather(x))
    }

    fn gather(&self, x: &GroupPoint) -> Vec<f64> {
        let group = self.group();
        let l = self.pairing;
        let mut acc = vec![CompensatedSum::new(); l.dim_out()];
        let mut scratch = vec![0.0; l.dim_out()];
        match self.variant {
            Variant::Standard => {
                for (t, ft) in self.f.iter() {
                    if let Some(gs) = self.g.get(&group.sub_unchecked(x, t)) {
                        accumulate(l, ft, gs, self.measure.weight(t), &mut scratch, &mut acc);
                    }
                }
            }
            Variant::NonabelianAlt => {
                for (t, gt) in self.g.iter() {
                    let u = group.add_unchecked(&group.neg_unchecked(t), x);
                    if let Some(fu) = self.f.get(&u) {
                        accumulate(l, fu, gt, self.measure.weight(t), &mut scratch, &mut acc);
                    }
                }
            }
        }
        finish(&acc)
    }

    /// Sorted, deduplicated candidate support of the result.
    pub fn support_bound(&self) -> Vec<GroupPoint> {
        let group = self.group();
        let mut pts: Vec<GroupPoint> = self
            .outer()
            .support()
            .iter()
            .flat_map(|o| self.inner().support().iter().map(move |i| (o, i)))
            .map(|(o, i)| self.target(group, o, i))
            .collect();
        pts.sort_unstable();
        pts.dedup();
        pts
    }

    fn outer(&self) -> &SampledFunction {
        match self.variant {
            Variant::Standard => self.f,
            Variant::NonabelianAlt => self.g,
        }
    }

    fn inner(&self) -> &SampledFunction {
        match self.variant {
            Variant::Standard => self.g,
            Variant::NonabelianAlt => self.f,
        }
    }

    /// The output point fed by outer point `o` and inner point `i`.
    #[inline]
    fn target(&self, group: &GroupSpace, o: &GroupPoint, i: &GroupPoint) -> GroupPoint {
        match self.variant {
            // x - t = s  =>  x = s + t
            Variant::Standard => group.add_unchecked(i, o),
            // -t + x = u  =>  x = t + u
            Variant::NonabelianAlt => group.add_unchecked(o, i),
        }
    }

    /// The full convolution as a finitely supported function.
    pub fn convolve(&self) -> Result<SampledFunction> {
        self.validate()?;
        let group = *self.group();
        let dim_out = self.pairing.dim_out();
        if self.f.is_empty() || self.g.is_empty() {
            return Ok(SampledFunction::zero(group, dim_out));
        }
        let layout = Layout::for_sum(
            &group,
            self.outer().support(),
            self.inner().support(),
            dim_out,
        );
        match layout {
            Some(layout) => {
                let mut acc = vec![CompensatedSum::new(); layout.volume * dim_out];
                self.scatter(&group, |x| layout.index(&x), &mut acc);
                Ok(SampledFunction::from_sorted_parts(
                    group,
                    dim_out,
                    (0..layout.volume).filter_map(|i| {
                        let slot = &acc[i * dim_out..(i + 1) * dim_out];
                        slot.iter()
                            .any(|a| a.value() != 0.0)
                            .then(|| (layout.point(i), finish(slot)))
                    }),
                ))
            }
            None => {
                let mut slots: HashMap<GroupPoint, usize> = HashMap::new();
                let mut order: Vec<GroupPoint> = Vec::new();
                self.scatter(
                    &group,
                    |x| {
                        *slots.entry(x).or_insert_with(|| {
                            order.push(x);
                            order.len() - 1
                        })
                    },
                    &mut [],
                );
                // second pass with a fully sized accumulator
                let mut acc = vec![CompensatedSum::new(); order.len() * dim_out];
                self.scatter(&group, |x| slots[&x], &mut acc);
                let mut idx: Vec<usize> = (0..order.len()).collect();
                idx.sort_unstable_by_key(|&i| order[i]);
                Ok(SampledFunction::from_sorted_parts(
                    group,
                    dim_out,
                    idx.into_iter()
                        .map(|i| (order[i], finish(&acc[i * dim_out..(i + 1) * dim_out]))),
                ))
            }
        }
    }

    /// Adds every term into `acc[slot(x)]`; with an empty `acc` only the
    /// slot function is exercised.
    fn scatter(
        &self,
        group: &GroupSpace,
        mut slot: impl FnMut(GroupPoint) -> usize,
        acc: &mut [CompensatedSum],
    ) {
        let l = self.pairing;
        let dim_out = l.dim_out();
        let mut scratch = vec![0.0; dim_out];
        let outer = self.outer();
        let inner = self.inner();
        let count_only = acc.is_empty();
        for (o, ov) in outer.iter() {
            let w = self.measure.weight(o);
            for (i, iv) in inner.iter() {
                let x = self.target(group, o, i);
                let s = slot(x);
                if count_only {
                    continue;
                }
                let (left, right) = match self.variant {
                    Variant::Standard => (ov, iv),
                    Variant::NonabelianAlt => (iv, ov),
                };
                accumulate(
                    l,
                    left,
                    right,
                    w,
                    &mut scratch,
                    &mut acc[s * dim_out..(s + 1) * dim_out],
                );
            }
        }
    }

    /// Same result as [`convolve`](Self::convolve), computed per output
    /// point on the rayon pool.
    pub fn convolve_parallel(&self) -> Result<SampledFunction> {
        self.validate()?;
        let values: Vec<(GroupPoint, Vec<f64>)> = self
            .support_bound()
            .into_par_iter()
            .map(|x| {
                let v = self.gather(&x);
                (x, v)
            })
            .collect();
        Ok(SampledFunction::from_sorted_parts(
            *self.group(),
            self.pairing.dim_out(),
            values,
        ))
    }

    /// Whether every summand at `x` is finite.
    pub fn exists_at(&self, x: &GroupPoint) -> Result<bool> {
        self.group().check(x)?;
        let group = self.group();
        let l = self.pairing;
        let mut out = vec![0.0; l.dim_out()];
        let finite = |v: &[f64]| v.iter().all(|c| c.is_finite());
        let mut check = |w: f64, left: &[f64], right: &[f64]| {
            if !(w.is_finite() && finite(left) && finite(right)) {
                return false;
            }
            l.apply_into(left, right, &mut out);
            out.iter().all(|v| (w * v).is_finite())
        };
        let ok = match self.variant {
            Variant::Standard => self.f.iter().all(|(t, ft)| {
                self.g
                    .get(&group.sub_unchecked(x, t))
                    .is_none_or(|gs| check(self.measure.weight(t), ft, gs))
            }),
            Variant::NonabelianAlt => self.g.iter().all(|(t, gt)| {
                let u = group.add_unchecked(&group.neg_unchecked(t), x);
                self.f
                    .get(&u)
                    .is_none_or(|fu| check(self.measure.weight(t), fu, gt))
            }),
        };
        Ok(ok)
    }

    /// Compares `int (f * g) dmu` with `L(int f dmu, int g dmu)`; passes when
    /// `|lhs - rhs| <= tol (1 + |rhs|)`. The measure must be right-invariant.
    pub fn integral_identity_check(&self, tol: f64) -> Result<IdentityReport> {
        if !self.measure.flags().right_invariant {
            return Err(Error::MeasureNotInvariant("right-invariant"));
        }
        let lhs = self.convolve()?.integral(self.measure)?;
        let rhs = self.pairing.apply(
            &self.f.integral(self.measure)?,
            &self.g.integral(self.measure)?,
        )?;
        let deviation = distance(&lhs, &rhs);
        let pass = deviation <= tol * (1.0 + norm(&rhs));
        Ok(IdentityReport {
            lhs,
            rhs,
            deviation,
            pass,
        })
    }

    /// Evaluates the double sum over `(x, t)` with `x` outermost and with
    /// `t` outermost.
    pub fn fubini_swap_check(&self) -> Result<FubiniReport> {
        self.validate()?;
        let group = *self.group();
        let l = self.pairing;
        let dim_out = l.dim_out();
        // (x, t, term) for every nonvanishing summand
        let mut terms: Vec<(GroupPoint, GroupPoint, Vec<f64>)> = Vec::new();
        for (o, ov) in self.outer().iter() {
            for (i, iv) in self.inner().iter() {
                let x = self.target(&group, o, i);
                let (left, right) = match self.variant {
                    Variant::Standard => (ov, iv),
                    Variant::NonabelianAlt => (iv, ov),
                };
                let w = self.measure.weight(&x) * self.measure.weight(o);
                let term = l.apply(left, right)?.into_iter().map(|v| w * v).collect();
                terms.push((x, *o, term));
            }
        }
        let nested =
            |terms: &[(GroupPoint, GroupPoint, Vec<f64>)],
             key: fn(&(GroupPoint, GroupPoint, Vec<f64>)) -> GroupPoint| {
                let mut outer = vec![CompensatedSum::new(); dim_out];
                let mut start = 0;
                while start < terms.len() {
                    let k = key(&terms[start]);
                    let mut inner = vec![CompensatedSum::new(); dim_out];
                    let mut end = start;
                    while end < terms.len() && key(&terms[end]) == k {
                        for (a, v) in inner.iter_mut().zip(&terms[end].2) {
                            a.add(*v);
                        }
                        end += 1;
                    }
                    for (a, v) in outer.iter_mut().zip(finish(&inner)) {
                        a.add(v);
                    }
                    start = end;
                }
                finish(&outer)
            };
        terms.sort_by_key(|a| (a.0, a.1));
        let x_outer = nested(&terms, |t| t.0);
        terms.sort_by_key(|a| (a.1, a.0));
        let t_outer = nested(&terms, |t| t.1);
        let deviation = distance(&x_outer, &t_outer);
        let pass = deviation <= FUBINI_TOL * (1.0 + norm(&x_outer));
        Ok(FubiniReport {
            x_outer,
            t_outer,
            deviation,
            pass,
        })
    }
}

pub(crate) fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Dense slot assignment for output points, in ascending point order.
struct Layout {
    kind: LayoutKind,
    volume: usize,
}

enum LayoutKind {
    /// Axis-aligned box, first axis most significant.
    Box {
        lo: [i64; MAX_DIM],
        extent: [i64; MAX_DIM],
        dim: usize,
    },
    Cyclic,
    Dihedral,
}

impl Layout {
    /// Upper limit on accumulator slots for a dense box.
    const MAX_SLOTS: usize = 1 << 26;

    fn for_sum(
        group: &GroupSpace,
        a: &[GroupPoint],
        b: &[GroupPoint],
        dim_out: usize,
    ) -> Option<Self> {
        match group {
            GroupSpace::Cyclic(n) => Some(Self {
                kind: LayoutKind::Cyclic,
                volume: *n as usize,
            }),
            GroupSpace::Dihedral(n) => Some(Self {
                kind: LayoutKind::Dihedral,
                volume: 2 * *n as usize,
            }),
            GroupSpace::Integers | GroupSpace::Lattice { .. } => {
                let dim = group.point_dim();
                let bounds = |pts: &[GroupPoint]| {
                    let mut lo = [i64::MAX; MAX_DIM];
                    let mut hi = [i64::MIN; MAX_DIM];
                    for p in pts {
                        for (k, &c) in p.coords().iter().enumerate() {
                            lo[k] = lo[k].min(c);
                            hi[k] = hi[k].max(c);
                        }
                    }
                    (lo, hi)
                };
                let (alo, ahi) = bounds(a);
                let (blo, bhi) = bounds(b);
                let mut lo = [0; MAX_DIM];
                let mut extent = [1; MAX_DIM];
                let mut volume: usize = 1;
                for k in 0..dim {
                    lo[k] = alo[k] + blo[k];
                    extent[k] = ahi[k] + bhi[k] - lo[k] + 1;
                    volume = volume.checked_mul(usize::try_from(extent[k]).ok()?)?;
                }
                let budget = (8 * a.len() * b.len())
                    .max(4096)
                    .min(Self::MAX_SLOTS / dim_out.max(1));
                (volume <= budget).then_some(Self {
                    kind: LayoutKind::Box { lo, extent, dim },
                    volume,
                })
            }
        }
    }

    #[inline]
    fn index(&self, p: &GroupPoint) -> usize {
        let c = p.coords();
        match &self.kind {
            LayoutKind::Box { lo, extent, dim } => {
                let mut idx = 0i64;
                for k in 0..*dim {
                    idx = idx * extent[k] + (c[k] - lo[k]);
                }
                idx as usize
            }
            LayoutKind::Cyclic => c[0] as usize,
            LayoutKind::Dihedral => (2 * c[0] + c[1]) as usize,
        }
    }

    fn point(&self, mut idx: usize) -> GroupPoint {
        match &self.kind {
            LayoutKind::Box { lo, extent, dim } => {
                let mut c = [0i64; MAX_DIM];
                for k in (0..*dim).rev() {
                    let e = extent[k] as usize;
                    c[k] = lo[k] + (idx % e) as i64;
                    idx /= e;
                }
                GroupPoint::new(&c[..*dim])
            }
            LayoutKind::Cyclic => GroupPoint::scalar(idx as i64),
            LayoutKind::Dihedral => GroupPoint::new(&[(idx / 2) as i64, (idx % 2) as i64]),
        }
    }
}
