//! FFT convolution for the scalar case on `Z` and `Z/n`.

use std::f64::consts::PI;
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::conv::{ConvRequest, Variant};
use crate::error::{Error, Result};
use crate::function::SampledFunction;
use crate::group::{GroupPoint, GroupSpace, InvariantMeasure, WeightKind};
use crate::pairing::{Pairing, PairingKind};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Interpretation {
    /// Index `k` is the element `k` of `Z/n`, `n` the signal length.
    Circular,
    /// Index `k` is the integer `offset + k`.
    OnIntegers { offset: i64 },
}

/// Dense scalar samples, mirroring a `SampledFunction` with `vdim = 1`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DenseSignal {
    values: Vec<f64>,
    interpretation: Interpretation,
}

impl DenseSignal {
    pub fn circular(values: Vec<f64>) -> Result<Self> {
        Self::new(values, Interpretation::Circular)
    }

    pub fn on_integers(offset: i64, values: Vec<f64>) -> Result<Self> {
        Self::new(values, Interpretation::OnIntegers { offset })
    }

    fn new(values: Vec<f64>, interpretation: Interpretation) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidParameter(
                "dense signal needs at least one sample".into(),
            ));
        }
        if interpretation == Interpretation::Circular && u32::try_from(values.len()).is_err() {
            return Err(Error::InvalidParameter(format!(
                "cyclic order {} too large",
                values.len()
            )));
        }
        Ok(Self {
            values,
            interpretation,
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn interpretation(&self) -> Interpretation {
        self.interpretation
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn group(&self) -> GroupSpace {
        match self.interpretation {
            Interpretation::Circular => GroupSpace::Cyclic(self.values.len() as u32),
            Interpretation::OnIntegers { .. } => GroupSpace::Integers,
        }
    }

    /// Densifies a scalar function on `Z` or `Z/n`. Gaps in the support are
    /// filled with zeros; an empty function on `Z` becomes `[0.0]`.
    pub fn from_sampled(f: &SampledFunction) -> Result<Self> {
        if f.vdim() != 1 {
            return Err(Error::DimensionMismatch {
                what: "dense signal value dimension",
                expected: 1,
                found: f.vdim(),
            });
        }
        match *f.group() {
            GroupSpace::Cyclic(n) => {
                let mut values = vec![0.0; n as usize];
                for (p, v) in f.iter() {
                    values[p.coords()[0] as usize] = v[0];
                }
                Self::circular(values)
            }
            GroupSpace::Integers => {
                let (Some(first), Some(last)) = (f.support().first(), f.support().last()) else {
                    return Self::on_integers(0, vec![0.0]);
                };
                let offset = first.coords()[0];
                let len = usize::try_from(last.coords()[0] - offset + 1)
                    .map_err(|_| Error::InvalidParameter("support too wide to densify".into()))?;
                let mut values = vec![0.0; len];
                for (p, v) in f.iter() {
                    values[(p.coords()[0] - offset) as usize] = v[0];
                }
                Self::on_integers(offset, values)
            }
            other => Err(Error::InvalidGroup(format!("no dense form on {other}"))),
        }
    }

    /// Exact zeros are dropped, as in every `SampledFunction`.
    pub fn to_sampled(&self) -> SampledFunction {
        let group = self.group();
        let offset = match self.interpretation {
            Interpretation::Circular => 0,
            Interpretation::OnIntegers { offset } => offset,
        };
        SampledFunction::scalar(
            group,
            self.values
                .iter()
                .enumerate()
                .map(|(k, &v)| (GroupPoint::scalar(offset + k as i64), v)),
        )
        .expect("indices are distinct elements of the group")
    }
}

/// In-place iterative radix-2 transform; `buf.len()` must be a power of two.
/// The inverse includes the `1/n` factor.
pub fn fft_in_place(buf: &mut [Complex64], inverse: bool) {
    let n = buf.len();
    assert!(
        n.is_power_of_two(),
        "transform length {n} is not a power of two"
    );
    if n == 1 {
        return;
    }
    let bits = n.trailing_zeros();
    for i in 0..n {
        let j = i.reverse_bits() >> (usize::BITS - bits);
        if i < j {
            buf.swap(i, j);
        }
    }
    let sign = if inverse { 1.0 } else { -1.0 };
    let twiddles: Vec<Complex64> = (0..n / 2)
        .map(|k| Complex64::from_polar(1.0, sign * 2.0 * PI * k as f64 / n as f64))
        .collect();
    let mut len = 2;
    while len <= n {
        let half = len / 2;
        let stride = n / len;
        for block in buf.chunks_exact_mut(len) {
            let (lo, hi) = block.split_at_mut(half);
            for (k, (a, b)) in lo.iter_mut().zip(hi.iter_mut()).enumerate() {
                let t = *b * twiddles[k * stride];
                *b = *a - t;
                *a += t;
            }
        }
        len <<= 1;
    }
    if inverse {
        let scale = 1.0 / n as f64;
        for z in buf.iter_mut() {
            *z *= scale;
        }
    }
}

/// Linear convolution of two real sequences, length `a.len() + b.len() - 1`.
fn linear_fft(a: &[f64], b: &[f64]) -> Vec<f64> {
    let out_len = a.len() + b.len() - 1;
    let n = out_len.next_power_of_two();
    let mut fa: Vec<Complex64> = a.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    let mut fb: Vec<Complex64> = b.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    fa.resize(n, Complex64::default());
    fb.resize(n, Complex64::default());
    fft_in_place(&mut fa, false);
    fft_in_place(&mut fb, false);
    for (x, y) in fa.iter_mut().zip(&fb) {
        *x *= y;
    }
    fft_in_place(&mut fa, true);
    fa.truncate(out_len);
    fa.into_iter().map(|z| z.re).collect()
}

/// Convolution with `L = Mul` and counting measure via zero-padded transforms.
pub fn fast_convolve(a: &DenseSignal, b: &DenseSignal) -> Result<DenseSignal> {
    match (a.interpretation, b.interpretation) {
        (Interpretation::Circular, Interpretation::Circular) => {
            let n = a.len();
            if b.len() != n {
                return Err(Error::SpaceMismatch {
                    expected: a.group(),
                    found: b.group(),
                });
            }
            let linear = linear_fft(&a.values, &b.values);
            let mut folded = vec![0.0; n];
            for (k, v) in linear.into_iter().enumerate() {
                folded[k % n] += v;
            }
            DenseSignal::circular(folded)
        }
        (Interpretation::OnIntegers { offset: oa }, Interpretation::OnIntegers { offset: ob }) => {
            DenseSignal::on_integers(oa + ob, linear_fft(&a.values, &b.values))
        }
        _ => Err(Error::InterpretationMismatch),
    }
}

/// True when the request is scalar (or componentwise scalar), on `Z` or
/// `Z/n`, with counting measure and the standard integrand.
pub fn is_fast_eligible(req: &ConvRequest<'_>) -> bool {
    let scalar = match req.pairing.kind() {
        PairingKind::Mul | PairingKind::ScalarSmul(_) => true,
        PairingKind::TransposeOf(_) => req.pairing.is_scalar_mul(),
        _ => false,
    };
    scalar
        && req.variant == Variant::Standard
        && matches!(req.measure.kind(), WeightKind::Counting)
        && matches!(req.f.group(), GroupSpace::Integers | GroupSpace::Cyclic(_))
}

/// Routes eligible requests through the transform and the rest to the
/// direct sum. `ScalarSmul(m)` is handled one output component at a time.
pub fn convolve_routed(req: &ConvRequest<'_>) -> Result<SampledFunction> {
    req.validate()?;
    if !is_fast_eligible(req) {
        return req.convolve();
    }
    if req.f.is_empty() || req.g.is_empty() {
        return Ok(SampledFunction::zero(*req.f.group(), req.pairing.dim_out()));
    }
    let a = DenseSignal::from_sampled(req.f)?;
    let m = req.g.vdim();
    let mut components = Vec::with_capacity(m);
    for c in 0..m {
        let gc = req.g.map_values(1, |_, v| vec![v[c]]);
        components.push(fast_convolve(&a, &DenseSignal::from_sampled(&gc)?)?);
    }
    let group = *req.f.group();
    let n = components[0].len();
    let offset = match components[0].interpretation {
        Interpretation::Circular => 0,
        Interpretation::OnIntegers { offset } => offset,
    };
    SampledFunction::new(
        group,
        m,
        (0..n).map(|k| {
            (
                GroupPoint::scalar(offset + k as i64),
                components.iter().map(|s| s.values[k]).collect(),
            )
        }),
    )
}

/// `max |x - y| / (|a|_2 |b|_2)`, the deviation scale used throughout.
pub fn scaled_deviation(
    fast: &SampledFunction,
    naive: &SampledFunction,
    a: &[f64],
    b: &[f64],
) -> f64 {
    let scale = crate::function::norm(a) * crate::function::norm(b);
    let mut worst = 0.0f64;
    for (p, v) in naive.iter() {
        let w = fast.get(p).map_or(0.0, |w| w[0]);
        worst = worst.max((v[0] - w).abs());
    }
    for (p, w) in fast.iter() {
        if naive.get(p).is_none() {
            worst = worst.max(w[0].abs());
        }
    }
    if scale > 0.0 {
        worst / scale
    } else {
        worst
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchRow {
    pub size: usize,
    /// Median seconds for the direct sum.
    pub naive_time: f64,
    /// Median seconds for the transform path.
    pub fast_time: f64,
    pub max_deviation: f64,
}

pub const MIN_BENCH_SIZE: usize = 64;

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

/// Times the direct sum against the transform on random signals of each
/// size on `Z`. Runs on the calling thread.
pub fn bench(sizes: &[usize], trials: usize) -> Result<Vec<BenchRow>> {
    if let Some(&s) = sizes.iter().find(|&&s| s < MIN_BENCH_SIZE) {
        return Err(Error::InvalidParameter(format!(
            "bench size {s} is below {MIN_BENCH_SIZE}"
        )));
    }
    if trials == 0 {
        return Err(Error::InvalidParameter(
            "bench needs at least one trial".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0xbe_4c4);
    let mul = Pairing::mul();
    let mu = InvariantMeasure::counting(GroupSpace::Integers);
    let mut rows = Vec::with_capacity(sizes.len());
    for &size in sizes {
        let a: Vec<f64> = (0..size).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let b: Vec<f64> = (0..size).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let fa = SampledFunction::from_integer_samples(0, &a);
        let fb = SampledFunction::from_integer_samples(0, &b);
        let (da, db) = (
            DenseSignal::on_integers(0, a.clone())?,
            DenseSignal::on_integers(0, b.clone())?,
        );
        let req = ConvRequest::new(&fa, &fb, &mul, &mu)?;
        let mut naive_times = Vec::with_capacity(trials);
        let mut fast_times = Vec::with_capacity(trials);
        let mut naive = None;
        let mut fast = None;
        for _ in 0..trials {
            let start = Instant::now();
            naive = Some(req.convolve()?);
            naive_times.push(start.elapsed().as_secs_f64());
            let start = Instant::now();
            fast = Some(fast_convolve(&da, &db)?);
            fast_times.push(start.elapsed().as_secs_f64());
        }
        let naive = naive.expect("trials >= 1");
        let fast = fast.expect("trials >= 1").to_sampled();
        rows.push(BenchRow {
            size,
            naive_time: median(naive_times),
            fast_time: median(fast_times),
            max_deviation: scaled_deviation(&fast, &naive, &a, &b),
        });
    }
    Ok(rows)
}
