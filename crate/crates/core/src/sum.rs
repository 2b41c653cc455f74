//! Neumaier-compensated accumulation.

use std::ops::AddAssign;

/// Running sum with a compensation term for lost low-order bits
/// (Kahan's algorithm with Neumaier's magnitude swap).
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub const fn new() -> Self {
        Self {
            sum: 0.0,
            comp: 0.0,
        }
    }

    #[inline]
    pub fn add(&mut self, value: f64) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.comp += (self.sum - t) + value;
        } else {
            self.comp += (value - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl AddAssign<f64> for CompensatedSum {
    #[inline]
    fn add_assign(&mut self, rhs: f64) {
        self.add(rhs);
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = Self::new();
        for v in iter {
            acc.add(v);
        }
        acc
    }
}

/// Compensated sum of a slice.
pub fn sum(values: &[f64]) -> f64 {
    values.iter().copied().collect::<CompensatedSum>().value()
}

/// Component-wise compensated accumulator for vector values.
#[derive(Clone, Debug)]
pub struct VecAccumulator {
    parts: Vec<CompensatedSum>,
}

impl VecAccumulator {
    pub fn new(dim: usize) -> Self {
        Self {
            parts: vec![CompensatedSum::new(); dim],
        }
    }

    #[inline]
    pub fn add_scaled(&mut self, weight: f64, values: &[f64]) {
        for (acc, v) in self.parts.iter_mut().zip(values) {
            acc.add(weight * v);
        }
    }

    pub fn finish(&self) -> Vec<f64> {
        self.parts.iter().map(CompensatedSum::value).collect()
    }
}
