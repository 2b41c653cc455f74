//! Normalized bump functions, mollification and the distance bound
//! `|(f * g)(x0) - int L(f(t), g(x0))| <= eps |L| int |f|`.

use rayon::prelude::*;
use serde::Serialize;

use crate::conv::{convolve, distance, ConvRequest};
use crate::error::{Error, Result};
use crate::function::{SampledFunction, SymbolicFunction};
use crate::group::{GroupPoint, GroupSpace, InvariantMeasure, WeightKind};
use crate::pairing::Pairing;
use crate::sum::VecAccumulator;

/// Minimum number of grid cells per bump radius.
pub const MIN_CELLS_PER_RADIUS: f64 = 10.0;

/// Radius, dimension and grid spacing of a bump.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BumpSpec {
    pub radius: f64,
    pub dim: usize,
    pub grid_h: f64,
}

impl BumpSpec {
    pub fn new(radius: f64, dim: usize, grid_h: f64) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0 && grid_h.is_finite() && grid_h > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "radius and spacing must be positive, got R = {radius}, h = {grid_h}"
            )));
        }
        GroupSpace::lattice(dim, grid_h)?;
        // relative slack so that e.g. R = 0.05, h = 0.005 is accepted
        if grid_h * MIN_CELLS_PER_RADIUS > radius * (1.0 + 1e-9) {
            return Err(Error::RadiusTooSmall { radius, grid_h });
        }
        Ok(Self {
            radius,
            dim,
            grid_h,
        })
    }

    pub fn group(&self) -> GroupSpace {
        GroupSpace::Lattice {
            dim: self.dim,
            spacing: self.grid_h,
        }
    }
}

/// `exp(-1 / (1 - u))` for `u < 1`, else 0, where `u = |x / R|^2`.
pub fn bump_profile(u: f64) -> f64 {
    if u < 1.0 {
        (-1.0 / (1.0 - u)).exp()
    } else {
        0.0
    }
}

fn profile_d1(u: f64) -> f64 {
    if u < 1.0 {
        let s = 1.0 - u;
        -bump_profile(u) / (s * s)
    } else {
        0.0
    }
}

fn profile_d2(u: f64) -> f64 {
    if u < 1.0 {
        let s = 1.0 - u;
        bump_profile(u) * (1.0 / s.powi(4) - 2.0 / s.powi(3))
    } else {
        0.0
    }
}

/// Constant `c` making the grid-volume sum of `c * profile` equal to 1.
pub fn bump_normalization(spec: &BumpSpec) -> f64 {
    let group = spec.group();
    let r2 = spec.radius * spec.radius;
    let unnormalized = SymbolicFunction::new(
        group,
        spec.radius,
        move |x| bump_profile(sq_norm(x) / r2),
        |x| vec![0.0; x.len()],
    )
    .expect("bump group is a lattice")
    .sample();
    let cell = spec.grid_h.powi(spec.dim as i32);
    let total = crate::sum::sum(
        &unnormalized
            .iter()
            .map(|(_, v)| cell * v[0])
            .collect::<Vec<_>>(),
    );
    1.0 / total
}

fn sq_norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

/// The mollifier `phi_R(x) = c exp(-1 / (1 - |x/R|^2))` on `B_R(0)`, with
/// analytic gradient and Hessian, normalized to unit integral on its grid.
pub fn bump(spec: &BumpSpec) -> Result<SymbolicFunction> {
    let spec = BumpSpec::new(spec.radius, spec.dim, spec.grid_h)?;
    let c = bump_normalization(&spec);
    let r2 = spec.radius * spec.radius;
    let d = spec.dim;
    let f = SymbolicFunction::new(
        spec.group(),
        spec.radius,
        move |x| c * bump_profile(sq_norm(x) / r2),
        move |x| {
            let g = c * profile_d1(sq_norm(x) / r2) * 2.0 / r2;
            x.iter().map(|xi| g * xi).collect()
        },
    )?
    .with_hessian(move |x| {
        let u = sq_norm(x) / r2;
        let (p1, p2) = (profile_d1(u), profile_d2(u));
        let mut h = vec![0.0; d * d];
        for i in 0..d {
            for j in 0..d {
                let mut v = p2 * (2.0 * x[i] / r2) * (2.0 * x[j] / r2);
                if i == j {
                    v += p1 * 2.0 / r2;
                }
                h[i * d + j] = c * v;
            }
        }
        h
    });
    Ok(f)
}

fn ensure_grid(g: &SampledFunction, spec: &BumpSpec, mu: &InvariantMeasure) -> Result<()> {
    let expected = spec.group();
    if *g.group() != expected {
        return Err(Error::SpaceMismatch {
            expected,
            found: *g.group(),
        });
    }
    mu.ensure_group(&expected)?;
    if !matches!(mu.kind(), WeightKind::GridVolume) {
        return Err(Error::InvalidParameter(
            "mollification requires the grid-volume measure".into(),
        ));
    }
    Ok(())
}

/// `phi_R * g` with scalar multiplication as the pairing.
pub fn mollify(
    g: &SampledFunction,
    spec: &BumpSpec,
    mu: &InvariantMeasure,
) -> Result<SampledFunction> {
    ensure_grid(g, spec, mu)?;
    let phi = bump(spec)?.sample();
    convolve(&phi, g, &Pairing::scalar_smul(g.vdim())?, mu)
}

/// Lattice points of the open ball `B_R(center)`.
pub fn ball_points(
    group: &GroupSpace,
    center: &GroupPoint,
    radius: f64,
) -> Result<Vec<GroupPoint>> {
    let (_, h) = match group {
        GroupSpace::Lattice { dim, spacing } => (*dim, *spacing),
        other => return Err(Error::NotLattice(*other)),
    };
    group.check(center)?;
    let reach = (radius / h).ceil() as i64;
    let lo: Vec<i64> = center.coords().iter().map(|c| c - reach).collect();
    let hi: Vec<i64> = center.coords().iter().map(|c| c + reach).collect();
    Ok(crate::calculus::box_points(&lo, &hi)
        .into_iter()
        .filter(|p| group.lattice_norm(&group.sub_unchecked(p, center)) < radius)
        .collect())
}

/// `max |g(x) - g(x0)|` over lattice points of `B_R(x0)`.
pub fn sup_modulus(g: &SampledFunction, x0: &GroupPoint, radius: f64) -> Result<f64> {
    let center = g.eval(x0)?;
    Ok(ball_points(g.group(), x0, radius)?
        .iter()
        .map(|p| distance(&g.eval(p).expect("ball points are in the group"), &center))
        .fold(0.0, f64::max))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvDistReport {
    pub distance: f64,
    pub bound: f64,
    pub pass: bool,
}

/// Evaluates both sides of the distance bound at `x0`.
///
/// Preconditions, checked: `supp f` lies in the open ball `B_R(0)` and
/// `|g(x) - g(x0)| <= eps` at every lattice point of `B_R(x0)`.
#[allow(clippy::too_many_arguments)]
pub fn conv_dist_bound(
    f: &SampledFunction,
    g: &SampledFunction,
    pairing: &Pairing,
    mu: &InvariantMeasure,
    x0: &GroupPoint,
    radius: f64,
    eps: f64,
) -> Result<ConvDistReport> {
    let req = ConvRequest::new(f, g, pairing, mu)?;
    let group = *f.group();
    if !matches!(group, GroupSpace::Lattice { .. }) {
        return Err(Error::NotLattice(group));
    }
    if !(eps.is_finite() && eps >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "eps must be nonnegative, got {eps}"
        )));
    }
    if let Some(p) = f.support().iter().find(|p| group.lattice_norm(p) >= radius) {
        return Err(Error::Precondition {
            reason: format!("support of f leaves the ball of radius {radius}"),
            point: *p,
        });
    }
    let center = g.eval(x0)?;
    for p in ball_points(&group, x0, radius)? {
        let dev = distance(&g.eval(&p)?, &center);
        if dev > eps {
            return Err(Error::Precondition {
                reason: format!("|g(x) - g(x0)| = {dev} exceeds eps = {eps}"),
                point: p,
            });
        }
    }
    let value = req.convolve_at(x0)?;
    let mut reference = VecAccumulator::new(pairing.dim_out());
    let mut scratch = vec![0.0; pairing.dim_out()];
    for (t, ft) in f.iter() {
        pairing.apply_into(ft, &center, &mut scratch);
        reference.add_scaled(mu.weight(t), &scratch);
    }
    let distance = distance(&value, &reference.finish());
    let bound = eps * pairing.norm_bound() * f.norm_integral(mu)?;
    Ok(ConvDistReport {
        distance,
        bound,
        pass: distance <= bound * (1.0 + 1e-10),
    })
}

/// Distances `|(phi_R * g)(x0) - g(x0)|` along a decreasing radius sequence.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub radii: Vec<f64>,
    pub distances: Vec<f64>,
    /// `eps(R) * |L| * int |phi_R|` with `eps(R)` the sampled sup-modulus.
    pub bounds: Vec<f64>,
    /// Declared quadrature slack, `2 Lip(g) h + 1e-9`.
    pub slack: f64,
    /// Lipschitz estimate of `g` near `x0`, from adjacent samples.
    pub lipschitz: f64,
}

impl ConvergenceReport {
    pub fn within_bounds(&self) -> bool {
        self.distances
            .iter()
            .zip(&self.bounds)
            .all(|(d, b)| *d <= b + self.slack)
    }

    pub fn is_nonincreasing(&self) -> bool {
        self.distances.windows(2).all(|w| w[1] <= w[0])
    }

    pub fn final_distance(&self) -> f64 {
        self.distances.last().copied().unwrap_or(0.0)
    }

    /// Every distance within its bound and the last one at most `target`.
    pub fn converged(&self, target: f64) -> bool {
        self.within_bounds() && self.final_distance() <= target
    }
}

/// Mollifies `g` at `x0` for each radius in a strictly decreasing list.
pub fn convergence_study(
    g: &SampledFunction,
    x0: &GroupPoint,
    radii: &[f64],
    mu: &InvariantMeasure,
) -> Result<ConvergenceReport> {
    let group = *g.group();
    let (dim, h) = match group {
        GroupSpace::Lattice { dim, spacing } => (dim, spacing),
        other => return Err(Error::NotLattice(other)),
    };
    if radii.is_empty() || radii.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidParameter(
            "radii must be nonempty and strictly decreasing".into(),
        ));
    }
    let specs = radii
        .iter()
        .map(|&r| BumpSpec::new(r, dim, h))
        .collect::<Result<Vec<_>>>()?;
    ensure_grid(g, &specs[0], mu)?;
    let center = g.eval(x0)?;
    let rows = specs
        .par_iter()
        .map(|spec| -> Result<(f64, f64)> {
            let phi = bump(spec)?.sample();
            let l = Pairing::scalar_smul(g.vdim())?;
            let value = ConvRequest::new(&phi, g, &l, mu)?.convolve_at(x0)?;
            let eps = sup_modulus(g, x0, spec.radius)?;
            Ok((
                distance(&value, &center),
                eps * l.norm_bound() * phi.norm_integral(mu)?,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    let lipschitz = local_lipschitz(g, x0, radii[0])?;
    Ok(ConvergenceReport {
        radii: radii.to_vec(),
        distances: rows.iter().map(|r| r.0).collect(),
        bounds: rows.iter().map(|r| r.1).collect(),
        slack: 2.0 * lipschitz * h + 1e-9,
        lipschitz,
    })
}

/// Largest difference quotient between axis neighbours inside `B_R(x0)`.
fn local_lipschitz(g: &SampledFunction, x0: &GroupPoint, radius: f64) -> Result<f64> {
    let group = *g.group();
    let h = group.spacing().expect("lattice");
    let mut lip = 0.0f64;
    for p in ball_points(&group, x0, radius)? {
        let v = g.eval(&p)?;
        for axis in 0..group.point_dim() {
            let q = group.add_unchecked(&p, &group.unit(axis));
            if group.lattice_norm(&group.sub_unchecked(&q, x0)) < radius {
                lip = lip.max(distance(&g.eval(&q)?, &v) / h);
            }
        }
    }
    Ok(lip)
}
