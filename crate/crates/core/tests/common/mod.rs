#![allow(dead_code)]

use std::collections::BTreeMap;

use gconv::group::WeightKind;
use gconv::{GroupPoint, GroupSpace, InvariantMeasure, Pairing, SampledFunction};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn abelian_groups() -> Vec<GroupSpace> {
    vec![
        GroupSpace::Integers,
        GroupSpace::cyclic(8).unwrap(),
        GroupSpace::lattice(1, 0.1).unwrap(),
        GroupSpace::lattice(2, 0.5).unwrap(),
    ]
}

/// Counting on `Z` and `Z/n`, grid volume on lattices.
pub fn natural_measure(g: &GroupSpace) -> InvariantMeasure {
    match g {
        GroupSpace::Lattice { .. } => InvariantMeasure::grid_volume(*g).unwrap(),
        _ => InvariantMeasure::counting(*g),
    }
}

pub fn random_point(rng: &mut ChaCha8Rng, g: &GroupSpace) -> GroupPoint {
    match *g {
        GroupSpace::Integers => GroupPoint::scalar(rng.gen_range(-12..=12)),
        GroupSpace::Cyclic(n) => GroupPoint::scalar(rng.gen_range(0..i64::from(n))),
        GroupSpace::Lattice { dim, .. } => {
            let c: Vec<i64> = (0..dim).map(|_| rng.gen_range(-5..=5)).collect();
            GroupPoint::new(&c)
        }
        GroupSpace::Dihedral(n) => {
            GroupPoint::new(&[rng.gen_range(0..i64::from(n)), rng.gen_range(0..=1)])
        }
    }
}

pub fn random_values(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

/// Up to `max_len` random support points with values in `(-1, 1)^vdim`.
pub fn random_function(
    rng: &mut ChaCha8Rng,
    g: &GroupSpace,
    vdim: usize,
    max_len: usize,
) -> SampledFunction {
    let mut entries = BTreeMap::new();
    let len = rng.gen_range(1..=max_len);
    for _ in 0..len {
        let p = random_point(rng, g);
        let v = random_values(rng, vdim);
        entries.insert(p, v);
    }
    SampledFunction::new(*g, vdim, entries).unwrap()
}

pub fn random_tensor(rng: &mut ChaCha8Rng, out: usize, left: usize, right: usize) -> Pairing {
    Pairing::tensor3(out, left, right, random_values(rng, out * left * right)).unwrap()
}

/// Mul, ScalarSmul(3) and a random 2 x 3 -> 2 tensor, by index.
pub fn pairing_family(rng: &mut ChaCha8Rng, which: usize) -> Pairing {
    match which % 3 {
        0 => Pairing::mul(),
        1 => Pairing::scalar_smul(3).unwrap(),
        _ => random_tensor(rng, 2, 2, 3),
    }
}

pub fn random_weighted(rng: &mut ChaCha8Rng, g: &GroupSpace) -> InvariantMeasure {
    let table = g
        .elements()
        .expect("finite group")
        .into_iter()
        .map(|p| (p, rng.gen_range(0.1..3.0)))
        .collect();
    let m = InvariantMeasure::weighted(*g, table, 1.0).unwrap();
    assert!(matches!(m.kind(), WeightKind::Weighted { .. }));
    m
}

/// `max |a - b| <= tol * max(1, |a|, |b|)`, in sup norms.
pub fn close(a: &SampledFunction, b: &SampledFunction, tol: f64) -> bool {
    let scale = 1f64.max(a.sup_norm()).max(b.sup_norm());
    a.sup_distance(b).unwrap() <= tol * scale
}
