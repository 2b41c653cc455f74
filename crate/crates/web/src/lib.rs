//! WebAssembly bindings behind `www/index.html`: mollify a test signal,
//! run a convergence study, and compare the derivative formula against
//! finite differences.

use gconv::calculus::{conv_fderiv, SmoothOperand};
use gconv::mollify::{bump, convergence_study, mollify, BumpSpec};
use gconv::{
    convolve, Error, GroupPoint, GroupSpace, InvariantMeasure, Pairing, Result, SampledFunction,
};
use wasm_bindgen::prelude::*;

/// Signals live on `[-HALF_WIDTH, HALF_WIDTH]`.
pub const HALF_WIDTH: f64 = 2.0;

/// Sampled curves over a shared grid.
#[wasm_bindgen(getter_with_clone)]
#[derive(Clone, Debug)]
pub struct Curves {
    pub xs: Vec<f64>,
    pub input: Vec<f64>,
    pub output: Vec<f64>,
    pub summary: String,
}

#[wasm_bindgen(getter_with_clone)]
#[derive(Clone, Debug)]
pub struct Study {
    pub radii: Vec<f64>,
    pub distances: Vec<f64>,
    pub bounds: Vec<f64>,
    pub slack: f64,
}

fn grid(h: f64) -> Result<(GroupSpace, i64)> {
    let group = GroupSpace::lattice(1, h)?;
    Ok((group, (HALF_WIDTH / h).round() as i64))
}

fn profile(kind: &str) -> Result<fn(f64) -> f64> {
    Ok(match kind {
        "abs" => f64::abs,
        "step" => |x| if (0.0..=1.0).contains(&x) { 1.0 } else { 0.0 },
        "sin" => |x| (3.0 * x).sin(),
        "zigzag" => |x| ((2.0 * x).rem_euclid(2.0) - 1.0).abs() - 0.5,
        other => return Err(Error::InvalidParameter(format!("unknown signal `{other}`"))),
    })
}

/// One of `abs`, `step`, `sin`, `zigzag`, sampled on `Lattice(1, h)`.
pub fn signal(kind: &str, h: f64) -> Result<SampledFunction> {
    let u = profile(kind)?;
    let (group, n) = grid(h)?;
    SampledFunction::scalar(
        group,
        (-n..=n).map(|k| (GroupPoint::scalar(k), u(k as f64 * h))),
    )
}

fn values_on(f: &SampledFunction, range: std::ops::RangeInclusive<i64>) -> Result<Vec<f64>> {
    range
        .map(|k| Ok(f.eval(&GroupPoint::scalar(k))?[0]))
        .collect()
}

pub fn mollify_curves(kind: &str, radius: f64, h: f64) -> Result<Curves> {
    let g = signal(kind, h)?;
    let (group, n) = grid(h)?;
    let spec = BumpSpec::new(radius, 1, h)?;
    let smooth = mollify(&g, &spec, &InvariantMeasure::grid_volume(group)?)?;
    let xs = (-n..=n).map(|k| k as f64 * h).collect();
    let input = values_on(&g, -n..=n)?;
    let output = values_on(&smooth, -n..=n)?;
    // compare away from the truncated ends of the sampled window
    let margin = (radius / h).ceil() as usize;
    let interior = margin..input.len().saturating_sub(margin);
    let worst = interior
        .map(|i| (output[i] - input[i]).abs())
        .fold(0.0, f64::max);
    Ok(Curves {
        xs,
        input,
        output,
        summary: format!("max |phi_R * g - g| away from the window edges: {worst:.4e}"),
    })
}

pub fn convergence_report(kind: &str, x0: f64, radii: &[f64], h: f64) -> Result<Study> {
    let g = signal(kind, h)?;
    let (group, _) = grid(h)?;
    let at = GroupPoint::scalar((x0 / h).round() as i64);
    let rep = convergence_study(&g, &at, radii, &InvariantMeasure::grid_volume(group)?)?;
    Ok(Study {
        radii: rep.radii,
        distances: rep.distances,
        bounds: rep.bounds,
        slack: rep.slack,
    })
}

/// `f * D phi_R` against central differences of `f * phi_R`, with `f` the
/// indicator of `[0, 1]`.
pub fn derivative_curves(radius: f64, h: f64) -> Result<Curves> {
    let (group, _) = grid(h)?;
    let mu = InvariantMeasure::grid_volume(group)?;
    let phi = bump(&BumpSpec::new(radius, 1, h)?)?;
    let last = (1.0 / h).round() as i64;
    let f = SampledFunction::scalar(group, (0..=last).map(|k| (GroupPoint::scalar(k), 1.0)))?;
    let jac = conv_fderiv(
        &f,
        &SmoothOperand::Symbolic(phi.clone()),
        &Pairing::mul(),
        &mu,
    )?;
    let base = convolve(&f, &phi.sample(), &Pairing::mul(), &mu)?;
    let reach = (radius / h).ceil() as i64 + 2;
    let range = -reach..=last + reach;
    let xs: Vec<f64> = range.clone().map(|k| k as f64 * h).collect();
    let formula: Vec<f64> = range
        .clone()
        .map(|k| Ok(jac.at(&GroupPoint::scalar(k))?[0]))
        .collect::<Result<_>>()?;
    let fd = range
        .map(|k| {
            let v = |j: i64| base.eval(&GroupPoint::scalar(j)).map(|v| v[0]);
            Ok((v(k + 1)? - v(k - 1)?) / (2.0 * h))
        })
        .collect::<Result<Vec<f64>>>()?;
    let worst = formula
        .iter()
        .zip(&fd)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    Ok(Curves {
        xs,
        input: formula,
        output: fd,
        summary: format!("max |formula - finite difference| = {worst:.4e}"),
    })
}

#[wasm_bindgen(js_name = mollifySignal)]
pub fn mollify_signal(kind: &str, radius: f64, h: f64) -> std::result::Result<Curves, JsError> {
    Ok(mollify_curves(kind, radius, h)?)
}

#[wasm_bindgen(js_name = convergenceStudy)]
pub fn convergence_study_js(
    kind: &str,
    x0: f64,
    radii: Vec<f64>,
    h: f64,
) -> std::result::Result<Study, JsError> {
    Ok(convergence_report(kind, x0, &radii, h)?)
}

#[wasm_bindgen(js_name = derivativeCheck)]
pub fn derivative_check(radius: f64, h: f64) -> std::result::Result<Curves, JsError> {
    Ok(derivative_curves(radius, h)?)
}
