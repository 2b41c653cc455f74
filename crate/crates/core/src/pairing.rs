//! Continuous bilinear maps `L : R^a x R^b -> R^c`.
//!
//! Linear-map values (elements of `L(R^d, R^rows)`) are passed as
//! column-major flattened `rows x d` matrices, so the derivative lift
//! [`Pairing::lg_lift`] is an ordinary pairing.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::function::norm;

#[derive(Clone, Debug, PartialEq)]
pub enum PairingKind {
    /// `R x R^m -> R^m`, `(k, v) -> k v`.
    ScalarSmul(usize),
    /// `R x R -> R`.
    Mul,
    /// Arguments swapped.
    TransposeOf(Box<Pairing>),
    /// `E x L(R^d, E') -> L(R^d, F)`, `(x, M) -> L(x, -) . M`.
    Lifted(Box<Pairing>, usize),
    /// General bilinear map; coefficient `[k][i][j]` at `(k * dim_left + i) * dim_right + j`.
    Tensor3(Vec<f64>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Pairing {
    dim_left: usize,
    dim_right: usize,
    dim_out: usize,
    kind: PairingKind,
    norm_bound: f64,
}

impl Pairing {
    pub fn mul() -> Self {
        Self {
            dim_left: 1,
            dim_right: 1,
            dim_out: 1,
            kind: PairingKind::Mul,
            norm_bound: 1.0,
        }
    }

    pub fn scalar_smul(m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidParameter(
                "ScalarSmul dimension must be positive".into(),
            ));
        }
        Ok(Self {
            dim_left: 1,
            dim_right: m,
            dim_out: m,
            kind: PairingKind::ScalarSmul(m),
            norm_bound: 1.0,
        })
    }

    /// A general bilinear map. The declared norm bound is the Frobenius
    /// norm of the coefficient array, which dominates the operator norm.
    pub fn tensor3(
        dim_out: usize,
        dim_left: usize,
        dim_right: usize,
        coeffs: Vec<f64>,
    ) -> Result<Self> {
        if dim_out == 0 || dim_left == 0 || dim_right == 0 {
            return Err(Error::InvalidParameter(
                "Tensor3 dimensions must be positive".into(),
            ));
        }
        let expected = dim_out * dim_left * dim_right;
        if coeffs.len() != expected {
            return Err(Error::DimensionMismatch {
                what: "Tensor3 coefficients",
                expected,
                found: coeffs.len(),
            });
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidParameter(
                "Tensor3 coefficients must be finite".into(),
            ));
        }
        let norm_bound = norm(&coeffs);
        Ok(Self {
            dim_left,
            dim_right,
            dim_out,
            kind: PairingKind::Tensor3(coeffs),
            norm_bound,
        })
    }

    pub fn dim_left(&self) -> usize {
        self.dim_left
    }

    pub fn dim_right(&self) -> usize {
        self.dim_right
    }

    pub fn dim_out(&self) -> usize {
        self.dim_out
    }

    pub fn kind(&self) -> &PairingKind {
        &self.kind
    }

    /// Declared upper bound on the operator norm.
    pub fn norm_bound(&self) -> f64 {
        self.norm_bound
    }

    /// True for real multiplication `R x R -> R` in any of its encodings.
    pub fn is_scalar_mul(&self) -> bool {
        match &self.kind {
            PairingKind::Mul | PairingKind::ScalarSmul(1) => true,
            PairingKind::TransposeOf(inner) => inner.is_scalar_mul(),
            _ => false,
        }
    }

    /// `L^t(x, y) = L(y, x)`. Transposing a transpose unwraps it.
    pub fn transpose(&self) -> Self {
        match &self.kind {
            PairingKind::TransposeOf(inner) => (**inner).clone(),
            _ => Self {
                dim_left: self.dim_right,
                dim_right: self.dim_left,
                dim_out: self.dim_out,
                kind: PairingKind::TransposeOf(Box::new(self.clone())),
                norm_bound: self.norm_bound,
            },
        }
    }

    /// The lift `L^G(x, M) = L(x, -) . M` for `M` in `L(R^d, E')`.
    pub fn lg_lift(&self, d: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidParameter(
                "lift dimension must be positive".into(),
            ));
        }
        Ok(Self {
            dim_left: self.dim_left,
            dim_right: self.dim_right * d,
            dim_out: self.dim_out * d,
            kind: PairingKind::Lifted(Box::new(self.clone()), d),
            norm_bound: self.norm_bound,
        })
    }

    pub fn apply(&self, e: &[f64], e2: &[f64]) -> Result<Vec<f64>> {
        if e.len() != self.dim_left {
            return Err(Error::DimensionMismatch {
                what: "left pairing argument",
                expected: self.dim_left,
                found: e.len(),
            });
        }
        if e2.len() != self.dim_right {
            return Err(Error::DimensionMismatch {
                what: "right pairing argument",
                expected: self.dim_right,
                found: e2.len(),
            });
        }
        let mut out = vec![0.0; self.dim_out];
        self.apply_into(e, e2, &mut out);
        Ok(out)
    }

    /// Writes `L(e, e2)` into `out`; lengths are the caller's responsibility.
    #[inline]
    pub fn apply_into(&self, e: &[f64], e2: &[f64], out: &mut [f64]) {
        debug_assert_eq!(e.len(), self.dim_left);
        debug_assert_eq!(e2.len(), self.dim_right);
        debug_assert_eq!(out.len(), self.dim_out);
        match &self.kind {
            PairingKind::Mul => out[0] = e[0] * e2[0],
            PairingKind::ScalarSmul(_) => {
                let k = e[0];
                for (o, v) in out.iter_mut().zip(e2) {
                    *o = k * v;
                }
            }
            PairingKind::TransposeOf(inner) => inner.apply_into(e2, e, out),
            PairingKind::Lifted(inner, d) => {
                let rows_in = inner.dim_right;
                let rows_out = inner.dim_out;
                for j in 0..*d {
                    inner.apply_into(
                        e,
                        &e2[j * rows_in..(j + 1) * rows_in],
                        &mut out[j * rows_out..(j + 1) * rows_out],
                    );
                }
            }
            PairingKind::Tensor3(c) => {
                let (a, b) = (self.dim_left, self.dim_right);
                for (k, o) in out.iter_mut().enumerate() {
                    let mut s = 0.0;
                    for (i, ei) in e.iter().enumerate() {
                        let row = &c[(k * a + i) * b..(k * a + i + 1) * b];
                        let dot: f64 = row.iter().zip(e2).map(|(x, y)| x * y).sum();
                        s += ei * dot;
                    }
                    *o = s;
                }
            }
        }
    }
}

/// Checks `L2(L1(x1, x2), x3) = L3(x1, L4(x2, x3))` on `samples` random
/// triples, relative tolerance 1e-10. Sampling is seeded and reproducible.
///
/// Expected shapes: `L1: E1 x E2 -> F1`, `L2: F1 x E3 -> F3`,
/// `L3: E1 x F2 -> F3`, `L4: E2 x E3 -> F2`.
pub fn assoc_compatible(
    l1: &Pairing,
    l2: &Pairing,
    l3: &Pairing,
    l4: &Pairing,
    samples: usize,
) -> Result<bool> {
    let chain = [
        ("L2 left vs L1 output", l2.dim_left, l1.dim_out),
        ("L3 left vs L1 left", l3.dim_left, l1.dim_left),
        ("L4 left vs L1 right", l4.dim_left, l1.dim_right),
        ("L4 right vs L2 right", l4.dim_right, l2.dim_right),
        ("L3 right vs L4 output", l3.dim_right, l4.dim_out),
        ("L3 output vs L2 output", l3.dim_out, l2.dim_out),
    ];
    for (what, expected, found) in chain {
        if expected != found {
            return Err(Error::DimensionMismatch {
                what,
                expected,
                found,
            });
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_a550c);
    let mut draw = |n: usize| -> Vec<f64> { (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect() };
    for _ in 0..samples {
        let x1 = draw(l1.dim_left);
        let x2 = draw(l1.dim_right);
        let x3 = draw(l2.dim_right);
        let lhs = l2.apply(&l1.apply(&x1, &x2)?, &x3)?;
        let rhs = l3.apply(&x1, &l4.apply(&x2, &x3)?)?;
        let diff = norm(&lhs.iter().zip(&rhs).map(|(a, b)| a - b).collect::<Vec<_>>());
        let scale = norm(&lhs).max(norm(&rhs));
        if diff > 1e-10 * scale.max(f64::MIN_POSITIVE) && diff > 0.0 {
            return Ok(false);
        }
    }
    Ok(true)
}
