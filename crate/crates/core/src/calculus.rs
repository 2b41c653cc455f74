//! Total derivatives of convolutions on lattices.
//!
//! The derivative of `f * g` is `f *_{L^G} Dg`, where `L^G` is the lifted
//! pairing and `Dg` the Jacobian field of `g`. Derivatives are taken with
//! respect to embedded real coordinates (step `h`). Finite differences are
//! used only for sampled operands and as the independent oracle in
//! [`cont_diff_check`].

use serde::Serialize;

use crate::conv::convolve;
use crate::error::{Error, Result};
use crate::function::{SampledFunction, SymbolicFunction};
use crate::group::{GroupPoint, GroupSpace, InvariantMeasure};
use crate::pairing::Pairing;

/// A field of `rows x cols` matrices, stored column-major per point.
#[derive(Clone, Debug, PartialEq)]
pub struct JacobianField {
    rows: usize,
    cols: usize,
    field: SampledFunction,
}

impl JacobianField {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn group(&self) -> &GroupSpace {
        self.field.group()
    }

    /// The flattened field (vdim `rows * cols`).
    pub fn field(&self) -> &SampledFunction {
        &self.field
    }

    pub fn is_empty(&self) -> bool {
        self.field.is_empty()
    }

    /// Matrix at `x`, zero outside the support.
    pub fn at(&self, x: &GroupPoint) -> Result<Vec<f64>> {
        self.field.eval(x)
    }

    /// Pointwise `J(x) v`.
    pub fn apply(&self, v: &[f64]) -> Result<SampledFunction> {
        if v.len() != self.cols {
            return Err(Error::DimensionMismatch {
                what: "direction vector",
                expected: self.cols,
                found: v.len(),
            });
        }
        let rows = self.rows;
        Ok(self.field.map_values(rows, |_, m| mat_vec(m, rows, v)))
    }
}

fn mat_vec(m: &[f64], rows: usize, v: &[f64]) -> Vec<f64> {
    (0..rows)
        .map(|r| {
            v.iter()
                .enumerate()
                .map(|(j, vj)| m[j * rows + r] * vj)
                .sum()
        })
        .collect()
}

/// Second operand of a derivative computation.
#[derive(Clone, Debug)]
pub enum SmoothOperand {
    /// Derivatives by central differences.
    Sampled(SampledFunction),
    /// Analytic derivatives; scalar-valued.
    Symbolic(SymbolicFunction),
}

impl SmoothOperand {
    pub fn group(&self) -> &GroupSpace {
        match self {
            Self::Sampled(f) => f.group(),
            Self::Symbolic(s) => s.group(),
        }
    }

    pub fn vdim(&self) -> usize {
        match self {
            Self::Sampled(f) => f.vdim(),
            Self::Symbolic(_) => 1,
        }
    }

    /// Values on the lattice.
    pub fn sample(&self) -> SampledFunction {
        match self {
            Self::Sampled(f) => f.clone(),
            Self::Symbolic(s) => s.sample(),
        }
    }

    /// Jacobian samples, `vdim x d` column-major per point.
    fn jacobian_samples(&self) -> Result<SampledFunction> {
        match self {
            Self::Symbolic(s) => Ok(s.sample_gradient()),
            Self::Sampled(f) => {
                let d = f.group().point_dim();
                let pts = dilated_support(f)?;
                SampledFunction::new(
                    *f.group(),
                    f.vdim() * d,
                    pts.into_iter()
                        .map(|p| fd_jacobian(f, &p).map(|j| (p, j)))
                        .collect::<Result<Vec<_>>>()?,
                )
            }
        }
    }

    /// Samples of `t -> D_t g(v)`.
    fn directional_samples(&self, v: &[f64]) -> Result<SampledFunction> {
        match self {
            Self::Symbolic(s) => Ok(s.sample_directional(v)),
            Self::Sampled(f) => {
                let m = f.vdim();
                let pts = dilated_support(f)?;
                SampledFunction::new(
                    *f.group(),
                    m,
                    pts.into_iter()
                        .map(|p| fd_jacobian(f, &p).map(|j| (p, mat_vec(&j, m, v))))
                        .collect::<Result<Vec<_>>>()?,
                )
            }
        }
    }
}

fn lattice_parts(group: &GroupSpace) -> Result<(usize, f64)> {
    match group {
        GroupSpace::Lattice { dim, spacing } => Ok((*dim, *spacing)),
        other => Err(Error::NotLattice(*other)),
    }
}

/// Support plus one cell along each axis: where a central difference can be nonzero.
fn dilated_support(f: &SampledFunction) -> Result<Vec<GroupPoint>> {
    let group = f.group();
    let (d, _) = lattice_parts(group)?;
    let mut pts: Vec<GroupPoint> = Vec::with_capacity(f.len() * (2 * d + 1));
    for p in f.support() {
        pts.push(*p);
        for axis in 0..d {
            let e = group.unit(axis);
            pts.push(group.add_unchecked(p, &e));
            pts.push(group.sub_unchecked(p, &e));
        }
    }
    pts.sort_unstable();
    pts.dedup();
    Ok(pts)
}

/// Central-difference Jacobian at `x`: column `j` is
/// `(f(x + e_j) - f(x - e_j)) / 2h`. Returned column-major, `vdim x d`.
pub fn fd_jacobian(f: &SampledFunction, x: &GroupPoint) -> Result<Vec<f64>> {
    let group = f.group();
    let (d, h) = lattice_parts(group)?;
    group.check(x)?;
    let m = f.vdim();
    let zero = vec![0.0; m];
    let mut out = Vec::with_capacity(m * d);
    for axis in 0..d {
        let e = group.unit(axis);
        let plus = f.get(&group.add_unchecked(x, &e)).unwrap_or(&zero);
        let minus = f.get(&group.sub_unchecked(x, &e)).unwrap_or(&zero);
        out.extend(plus.iter().zip(minus).map(|(a, b)| (a - b) / (2.0 * h)));
    }
    Ok(out)
}

fn check_operands(f: &SampledFunction, g: &SmoothOperand, pairing: &Pairing) -> Result<usize> {
    let (d, _) = lattice_parts(f.group())?;
    if g.group() != f.group() {
        return Err(Error::SpaceMismatch {
            expected: *f.group(),
            found: *g.group(),
        });
    }
    if pairing.dim_right() != g.vdim() {
        return Err(Error::DimensionMismatch {
            what: "g value vs pairing right argument",
            expected: pairing.dim_right(),
            found: g.vdim(),
        });
    }
    Ok(d)
}

/// The total derivative of `f * g` as `f *_{L^G} Dg`.
pub fn conv_fderiv(
    f: &SampledFunction,
    g: &SmoothOperand,
    pairing: &Pairing,
    measure: &InvariantMeasure,
) -> Result<JacobianField> {
    let d = check_operands(f, g, pairing)?;
    let lifted = pairing.lg_lift(d)?;
    let dg = g.jacobian_samples()?;
    let field = convolve(f, &dg, &lifted, measure)?;
    Ok(JacobianField {
        rows: pairing.dim_out(),
        cols: d,
        field,
    })
}

/// The directional derivative `x -> D_x (f * g)(v)`, computed as `f * D_(-)g(v)`.
pub fn conv_dderiv(
    f: &SampledFunction,
    g: &SmoothOperand,
    pairing: &Pairing,
    measure: &InvariantMeasure,
    v: &[f64],
) -> Result<SampledFunction> {
    let d = check_operands(f, g, pairing)?;
    if v.len() != d {
        return Err(Error::DimensionMismatch {
            what: "direction vector",
            expected: d,
            found: v.len(),
        });
    }
    convolve(f, &g.directional_samples(v)?, pairing, measure)
}

/// Highest derivative order [`cont_diff_check`] accepts.
pub const MAX_CHECK_ORDER: usize = 2;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OrderDeviation {
    pub order: usize,
    /// Largest `|formula - finite difference|` over checked points and components.
    pub max_deviation: f64,
    pub points_checked: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ContDiffReport {
    pub orders: Vec<OrderDeviation>,
    pub tol: f64,
    pub pass: bool,
}

/// Checks that the derivatives of `f * g` up to order `n` are the
/// convolutions of `f` with the analytic derivatives of `g`, against
/// repeated central differences of the order-0 convolution.
///
/// Points checked: every lattice point in the bounding box of
/// `supp f + supp g`.
pub fn cont_diff_check(
    f: &SampledFunction,
    g: &SymbolicFunction,
    pairing: &Pairing,
    measure: &InvariantMeasure,
    n: usize,
    tol: f64,
) -> Result<ContDiffReport> {
    if n > MAX_CHECK_ORDER {
        return Err(Error::UnsupportedOrder(n));
    }
    if n > g.max_order() {
        return Err(Error::InsufficientDerivatives {
            requested: n,
            available: g.max_order(),
        });
    }
    if !(tol.is_finite() && tol > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    let operand = SmoothOperand::Symbolic(g.clone());
    let d = check_operands(f, &operand, pairing)?;
    let (_, h) = lattice_parts(f.group())?;
    let group = *f.group();
    let gs = g.sample();
    let base = convolve(f, &gs, pairing, measure)?;
    let points = hull_points(&group, f, &gs);
    let zero = vec![0.0; pairing.dim_out()];
    let at = |p: &GroupPoint, shifts: &[(usize, i64)]| -> &[f64] {
        let mut q = *p;
        for &(axis, k) in shifts {
            let e = group.unit(axis);
            for _ in 0..k.abs() {
                q = if k > 0 {
                    group.add_unchecked(&q, &e)
                } else {
                    group.sub_unchecked(&q, &e)
                };
            }
        }
        base.get(&q).unwrap_or(&zero)
    };
    let unit = |axis: usize| {
        let mut v = vec![0.0; d];
        v[axis] = 1.0;
        v
    };

    let mut orders = vec![OrderDeviation {
        order: 0,
        max_deviation: 0.0,
        points_checked: points.len(),
    }];
    if n >= 1 {
        let mut worst = 0.0f64;
        for j in 0..d {
            let formula = convolve(f, &g.sample_directional(&unit(j)), pairing, measure)?;
            for p in &points {
                let fv = formula.get(p).unwrap_or(&zero);
                let (plus, minus) = (at(p, &[(j, 1)]), at(p, &[(j, -1)]));
                for c in 0..zero.len() {
                    let fd = (plus[c] - minus[c]) / (2.0 * h);
                    worst = worst.max((fv[c] - fd).abs());
                }
            }
        }
        orders.push(OrderDeviation {
            order: 1,
            max_deviation: worst,
            points_checked: points.len(),
        });
    }
    if n >= 2 {
        let mut worst = 0.0f64;
        for j in 0..d {
            for k in j..d {
                let second = g.sample_second_directional(&unit(j), &unit(k)).ok_or(
                    Error::InsufficientDerivatives {
                        requested: 2,
                        available: g.max_order(),
                    },
                )?;
                let formula = convolve(f, &second, pairing, measure)?;
                for p in &points {
                    let fv = formula.get(p).unwrap_or(&zero);
                    for (c, fvc) in fv.iter().enumerate() {
                        let fd = if j == k {
                            (at(p, &[(j, 1)])[c] - 2.0 * at(p, &[])[c] + at(p, &[(j, -1)])[c])
                                / (h * h)
                        } else {
                            (at(p, &[(j, 1), (k, 1)])[c]
                                - at(p, &[(j, 1), (k, -1)])[c]
                                - at(p, &[(j, -1), (k, 1)])[c]
                                + at(p, &[(j, -1), (k, -1)])[c])
                                / (4.0 * h * h)
                        };
                        worst = worst.max((fvc - fd).abs());
                    }
                }
            }
        }
        orders.push(OrderDeviation {
            order: 2,
            max_deviation: worst,
            points_checked: points.len(),
        });
    }
    let pass = orders.iter().all(|o| o.max_deviation <= tol);
    Ok(ContDiffReport { orders, tol, pass })
}

/// Lattice points of the bounding box of `supp a + supp b`.
pub(crate) fn hull_points(
    group: &GroupSpace,
    a: &SampledFunction,
    b: &SampledFunction,
) -> Vec<GroupPoint> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let d = group.point_dim();
    let mut lo = vec![i64::MAX; d];
    let mut hi = vec![i64::MIN; d];
    for (pts, sign) in [(a.support(), 0), (b.support(), 1)] {
        let mut l = vec![i64::MAX; d];
        let mut u = vec![i64::MIN; d];
        for p in pts {
            for (k, &c) in p.coords().iter().enumerate() {
                l[k] = l[k].min(c);
                u[k] = u[k].max(c);
            }
        }
        for k in 0..d {
            if sign == 0 {
                lo[k] = l[k];
                hi[k] = u[k];
            } else {
                lo[k] += l[k];
                hi[k] += u[k];
            }
        }
    }
    box_points(&lo, &hi)
}

pub(crate) fn box_points(lo: &[i64], hi: &[i64]) -> Vec<GroupPoint> {
    let d = lo.len();
    let mut out = Vec::new();
    let mut idx = lo.to_vec();
    if lo.iter().zip(hi).any(|(l, h)| l > h) {
        return out;
    }
    loop {
        out.push(GroupPoint::new(&idx));
        let mut axis = d;
        loop {
            if axis == 0 {
                return out;
            }
            axis -= 1;
            if idx[axis] < hi[axis] {
                idx[axis] += 1;
                break;
            }
            idx[axis] = lo[axis];
        }
    }
}
