//! The acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::Command;
use std::time::{Duration, Instant};

use common::*;
use gconv::calculus::{cont_diff_check, conv_dderiv, conv_fderiv, SmoothOperand};
use gconv::conv::Variant;
use gconv::csv::{parse_csv, to_csv};
use gconv::fastpath::{bench, fast_convolve, scaled_deviation, DenseSignal};
use gconv::mollify::{bump, conv_dist_bound, convergence_study, sup_modulus, BumpSpec};
use gconv::pairing::assoc_compatible;
use gconv::{
    convolve, ConvRequest, GroupPoint, GroupSpace, InvariantMeasure, Pairing, SampledFunction,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn run_criterion(n: usize, name: &str, limit: Duration, body: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let result = catch_unwind(AssertUnwindSafe(body));
    let elapsed = start.elapsed();
    let (pass, detail) = match result {
        Ok(o) => (o.pass, o.detail),
        Err(e) => {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            (false, format!("panicked: {msg}"))
        }
    };
    let in_time = elapsed <= limit;
    let ok = pass && in_time;
    let timing = if in_time {
        String::new()
    } else {
        format!(", over the {}s limit", limit.as_secs())
    };
    println!(
        "criterion {n:>2} {}: {name} ({:.2}s{timing}) {detail}",
        if ok { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64()
    );
    ok
}

fn algebraic_suite() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let groups = abelian_groups();
    let mut worst_failures = Vec::new();
    for i in 0..200 {
        let g = groups[i % groups.len()];
        let mu = natural_measure(&g);
        let l = pairing_family(&mut rng, i / groups.len());
        let f = random_function(&mut rng, &g, l.dim_left(), 12);
        let f2 = random_function(&mut rng, &g, l.dim_left(), 12);
        let k = random_function(&mut rng, &g, l.dim_right(), 12);
        let k2 = random_function(&mut rng, &g, l.dim_right(), 12);
        let c: f64 = rng.gen_range(-3.0..3.0);
        let fk = convolve(&f, &k, &l, &mu).unwrap();
        let scaled = fk.scale(c);
        let ok = close(&convolve(&f.scale(c), &k, &l, &mu).unwrap(), &scaled, 1e-12)
            && close(&convolve(&f, &k.scale(c), &l, &mu).unwrap(), &scaled, 1e-12)
            && close(
                &convolve(
                    &f,
                    &SampledFunction::lin_comb(1.0, &k, 1.0, &k2).unwrap(),
                    &l,
                    &mu,
                )
                .unwrap(),
                &SampledFunction::lin_comb(1.0, &fk, 1.0, &convolve(&f, &k2, &l, &mu).unwrap())
                    .unwrap(),
                1e-12,
            )
            && close(
                &convolve(
                    &SampledFunction::lin_comb(1.0, &f, 1.0, &f2).unwrap(),
                    &k,
                    &l,
                    &mu,
                )
                .unwrap(),
                &SampledFunction::lin_comb(1.0, &fk, 1.0, &convolve(&f2, &k, &l, &mu).unwrap())
                    .unwrap(),
                1e-12,
            );
        if !ok {
            worst_failures.push(i);
        }
    }
    outcome(
        worst_failures.is_empty(),
        format!("200 instances, failing: {worst_failures:?}"),
    )
}

fn commutativity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let groups = abelian_groups();
    let mut failures = 0;
    for i in 0..100 {
        let g = groups[i % groups.len()];
        let mu = natural_measure(&g);
        let l = pairing_family(&mut rng, i / groups.len());
        let f = random_function(&mut rng, &g, l.dim_left(), 12);
        let k = random_function(&mut rng, &g, l.dim_right(), 12);
        let lhs = convolve(&f, &k, &l, &mu).unwrap();
        let rhs = convolve(&k, &f, &l.transpose(), &mu).unwrap();
        if !close(&lhs, &rhs, 1e-12) {
            failures += 1;
        }
    }
    let d4 = GroupSpace::dihedral(4).unwrap();
    let mu = InvariantMeasure::counting(d4);
    let r = GroupPoint::new(&[1, 0]);
    let s = GroupPoint::new(&[0, 1]);
    let dr = SampledFunction::delta(d4, r, vec![1.0]).unwrap();
    let ds = SampledFunction::delta(d4, s, vec![1.0]).unwrap();
    let rs = convolve(&dr, &ds, &Pairing::mul(), &mu).unwrap();
    let sr = convolve(&ds, &dr, &Pairing::mul(), &mu).unwrap();
    let exhibited = rs != sr
        && rs == SampledFunction::delta(d4, d4.add(&s, &r).unwrap(), vec![1.0]).unwrap()
        && sr == SampledFunction::delta(d4, d4.add(&r, &s).unwrap(), vec![1.0]).unwrap()
        && rs.sup_distance(&sr).unwrap() == 1.0;
    outcome(
        failures == 0 && exhibited,
        format!(
            "100 abelian instances, {failures} failures; D4 counterexample exhibited: {exhibited}"
        ),
    )
}

/// 2 x 2 matrix product on row-major `R^4`.
fn matmul_pairing() -> Pairing {
    let mut c = vec![0.0; 64];
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                c[((i * 2 + k) * 4 + i * 2 + j) * 4 + j * 2 + k] = 1.0;
            }
        }
    }
    Pairing::tensor3(4, 4, 4, c).unwrap()
}

/// `(L1, L2, L3, L4)` with `L2(L1(a, b), c) = L3(a, L4(b, c))`.
fn compatible_quadruple(rng: &mut ChaCha8Rng, which: usize) -> [Pairing; 4] {
    match which % 4 {
        0 => [
            Pairing::mul(),
            Pairing::mul(),
            Pairing::mul(),
            Pairing::mul(),
        ],
        1 => {
            let s = Pairing::scalar_smul(3).unwrap();
            [Pairing::mul(), s.clone(), s.clone(), s]
        }
        2 => {
            let m = matmul_pairing();
            [m.clone(), m.clone(), m.clone(), m]
        }
        _ => {
            let t = random_tensor(rng, 2, 3, 2);
            [
                t.clone(),
                Pairing::scalar_smul(2).unwrap().transpose(),
                t,
                Pairing::scalar_smul(2).unwrap().transpose(),
            ]
        }
    }
}

fn assoc_sides(
    rng: &mut ChaCha8Rng,
    g: &GroupSpace,
    [l1, l2, l3, l4]: &[Pairing; 4],
) -> (SampledFunction, SampledFunction) {
    let mu = random_weighted(rng, g);
    let nu = InvariantMeasure::counting(*g);
    let f1 = random_function(rng, g, l1.dim_left(), 6);
    let f2 = random_function(rng, g, l1.dim_right(), 6);
    let f3 = random_function(rng, g, l2.dim_right(), 6);
    let lhs = convolve(&convolve(&f1, &f2, l1, &mu).unwrap(), &f3, l2, &nu).unwrap();
    let rhs = convolve(&f1, &convolve(&f2, &f3, l4, &nu).unwrap(), l3, &mu).unwrap();
    (lhs, rhs)
}

fn associativity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let groups = [
        GroupSpace::cyclic(5).unwrap(),
        GroupSpace::cyclic(8).unwrap(),
    ];
    let mut compat_failures = 0;
    for i in 0..50 {
        let q = compatible_quadruple(&mut rng, i);
        assert!(assoc_compatible(&q[0], &q[1], &q[2], &q[3], 20).unwrap());
        let (lhs, rhs) = assoc_sides(&mut rng, &groups[i % 2], &q);
        if !close(&lhs, &rhs, 1e-11) {
            compat_failures += 1;
        }
    }
    let mut caught = 0;
    for i in 0..20 {
        let scale: f64 = rng.gen_range(1.5..3.0);
        let bad = Pairing::tensor3(1, 1, 1, vec![scale]).unwrap();
        let q = [Pairing::mul(), Pairing::mul(), Pairing::mul(), bad];
        assert!(!assoc_compatible(&q[0], &q[1], &q[2], &q[3], 20).unwrap());
        let (lhs, rhs) = assoc_sides(&mut rng, &groups[i % 2], &q);
        if !close(&lhs, &rhs, 1e-11) {
            caught += 1;
        }
    }
    outcome(
        compat_failures == 0 && caught > 0,
        format!("50 compatible with {compat_failures} failures; incompatible identity broken on {caught}/20"),
    )
}

fn integral_identity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let mut groups = abelian_groups();
    groups.push(GroupSpace::dihedral(4).unwrap());
    let mut failures = 0;
    for i in 0..100 {
        let g = groups[i % groups.len()];
        let mu = natural_measure(&g);
        let l = pairing_family(&mut rng, i / groups.len());
        let f = random_function(&mut rng, &g, l.dim_left(), 12);
        let k = random_function(&mut rng, &g, l.dim_right(), 12);
        if !ConvRequest::new(&f, &k, &l, &mu)
            .unwrap()
            .integral_identity_check(1e-12)
            .unwrap()
            .pass
        {
            failures += 1;
        }
    }
    let f = SampledFunction::from_integer_samples(0, &[1.0, 2.0]);
    let k = SampledFunction::from_integer_samples(0, &[3.0, 4.0]);
    let mu = InvariantMeasure::counting(GroupSpace::Integers);
    let rep = ConvRequest::new(&f, &k, &Pairing::mul(), &mu)
        .unwrap()
        .integral_identity_check(1e-12)
        .unwrap();
    let fixture = rep.lhs == [21.0] && rep.rhs == [21.0];
    outcome(
        failures == 0 && fixture,
        format!(
            "100 instances, {failures} failures; fixture lhs {:?} rhs {:?}",
            rep.lhs, rep.rhs
        ),
    )
}

fn fubini() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(505);
    let mut groups = abelian_groups();
    groups.push(GroupSpace::dihedral(4).unwrap());
    let mut failures = 0;
    let mut worst = 0.0f64;
    for i in 0..100 {
        let g = groups[i % groups.len()];
        let mu = natural_measure(&g);
        let l = pairing_family(&mut rng, i / groups.len());
        let f = random_function(&mut rng, &g, l.dim_left(), 12);
        let k = random_function(&mut rng, &g, l.dim_right(), 12);
        let variant = if i % 2 == 0 {
            Variant::Standard
        } else {
            Variant::NonabelianAlt
        };
        let rep = ConvRequest::new(&f, &k, &l, &mu)
            .unwrap()
            .with_variant(variant)
            .fubini_swap_check()
            .unwrap();
        worst = worst.max(rep.deviation);
        if !rep.pass {
            failures += 1;
        }
    }
    outcome(
        failures == 0,
        format!("100 instances, {failures} failures, worst deviation {worst:.1e}"),
    )
}

fn step(h: f64) -> SampledFunction {
    let n = (1.0 / h).round() as i64;
    SampledFunction::scalar(
        GroupSpace::lattice(1, h).unwrap(),
        (0..=n).map(|k| (GroupPoint::scalar(k), 1.0)),
    )
    .unwrap()
}

/// Largest `|f * Dg - central FD of f * g|` over the bounding box of
/// `supp f + supp g`.
fn derivative_deviation(h: f64) -> f64 {
    let group = GroupSpace::lattice(1, h).unwrap();
    let mu = InvariantMeasure::grid_volume(group).unwrap();
    let g = bump(&BumpSpec::new(0.5, 1, h).unwrap()).unwrap();
    let gs = g.sample();
    let f = step(h);
    let jac = conv_fderiv(&f, &SmoothOperand::Symbolic(g), &Pairing::mul(), &mu).unwrap();
    let base = convolve(&f, &gs, &Pairing::mul(), &mu).unwrap();
    let first = |s: &SampledFunction| s.support().first().unwrap().coords()[0];
    let last = |s: &SampledFunction| s.support().last().unwrap().coords()[0];
    let value = |k: i64| base.eval(&GroupPoint::scalar(k)).unwrap()[0];
    let mut worst = 0.0f64;
    for k in first(&f) + first(&gs)..=last(&f) + last(&gs) {
        let fd = (value(k + 1) - value(k - 1)) / (2.0 * h);
        worst = worst.max((jac.at(&GroupPoint::scalar(k)).unwrap()[0] - fd).abs());
    }
    worst
}

fn derivative_formula() -> Outcome {
    let coarse = derivative_deviation(0.02);
    let fine = derivative_deviation(0.01);
    let ratio = coarse / fine;
    outcome(
        coarse <= 5e-3 && ratio >= 3.0,
        format!("max deviation {coarse:.3e} at h=0.02 (limit 5e-3), {fine:.3e} at h=0.01, ratio {ratio:.2} (limit 3)"),
    )
}

fn directional_and_c2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(707);
    let g2 = GroupSpace::lattice(2, 0.1).unwrap();
    let mu2 = InvariantMeasure::grid_volume(g2).unwrap();
    let smooth = SmoothOperand::Symbolic(bump(&BumpSpec::new(1.0, 2, 0.1).unwrap()).unwrap());
    let f = random_function(&mut rng, &g2, 1, 30);
    let jac = conv_fderiv(&f, &smooth, &Pairing::mul(), &mu2).unwrap();
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let v = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
        let dv = conv_dderiv(&f, &smooth, &Pairing::mul(), &mu2, &v).unwrap();
        worst = worst.max(dv.sup_distance(&jac.apply(&v).unwrap()).unwrap());
    }
    let h = 0.02;
    let group = GroupSpace::lattice(1, h).unwrap();
    let mu = InvariantMeasure::grid_volume(group).unwrap();
    let g = bump(&BumpSpec::new(0.5, 1, h).unwrap()).unwrap();
    let rep = cont_diff_check(&step(h), &g, &Pairing::mul(), &mu, 2, 5e-2).unwrap();
    let second = rep.orders[2].max_deviation;
    outcome(
        worst <= 1e-10 && rep.pass,
        format!("directional identity worst {worst:.1e} (limit 1e-10); order-2 deviation {second:.3e} (limit 5e-2)"),
    )
}

/// A random Lipschitz signal on `Lattice(1, h)`, with its Lipschitz constant.
fn lipschitz_signal(rng: &mut ChaCha8Rng, h: f64, half_width: i64) -> SampledFunction {
    let group = GroupSpace::lattice(1, h).unwrap();
    let kind = rng.gen_range(0..3);
    let mut level: f64 = rng.gen_range(-1.0..1.0);
    let (a, b, c): (f64, f64, f64) = (
        rng.gen_range(0.2..2.0),
        rng.gen_range(0.5..8.0),
        rng.gen_range(0.0..6.0),
    );
    let mut entries = Vec::new();
    for k in -half_width..=half_width {
        let x = k as f64 * h;
        let v = match kind {
            0 => {
                level += rng.gen_range(-1.0..1.0) * h;
                level
            }
            1 => a * (b * x + c).sin(),
            _ => a * (x - c / 6.0).abs() - 0.5,
        };
        entries.push((GroupPoint::scalar(k), v));
    }
    SampledFunction::scalar(group, entries).unwrap()
}

fn mollifier_bound() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(808);
    let h = 0.01;
    let group = GroupSpace::lattice(1, h).unwrap();
    let mu = InvariantMeasure::grid_volume(group).unwrap();
    let mut failures = 0;
    for i in 0..50 {
        let g = lipschitz_signal(&mut rng, h, 300);
        let radius = [0.1, 0.2, 0.25, 0.4, 0.5][i % 5];
        let x0 = GroupPoint::scalar(rng.gen_range(-150..=150));
        let f = if i % 2 == 0 {
            bump(&BumpSpec::new(radius, 1, h).unwrap())
                .unwrap()
                .sample()
        } else {
            let reach = (radius / h).ceil() as i64 - 1;
            SampledFunction::scalar(
                group,
                (-reach..=reach).map(|k| (GroupPoint::scalar(k), rng.gen_range(-1.0..1.0))),
            )
            .unwrap()
        };
        let eps = sup_modulus(&g, &x0, radius).unwrap();
        let rep = conv_dist_bound(&f, &g, &Pairing::mul(), &mu, &x0, radius, eps).unwrap();
        if !rep.pass {
            failures += 1;
        }
    }
    outcome(
        failures == 0,
        format!("50 signals, {failures} bound violations"),
    )
}

fn convergence() -> Outcome {
    let h = 0.005;
    let group = GroupSpace::lattice(1, h).unwrap();
    let mu = InvariantMeasure::grid_volume(group).unwrap();
    let g = SampledFunction::scalar(
        group,
        (-400..=400).map(|k| (GroupPoint::scalar(k), (k as f64 * h).abs())),
    )
    .unwrap();
    let rep =
        convergence_study(&g, &GroupPoint::scalar(0), &[0.5, 0.25, 0.125, 0.0625], &mu).unwrap();
    outcome(
        rep.is_nonincreasing() && rep.final_distance() <= 0.07,
        format!("distances {:.4?}, final limit 0.07", rep.distances),
    )
}

fn fast_path() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1010);
    let mu = InvariantMeasure::counting(GroupSpace::Integers);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let a = random_values(&mut rng, 1024);
        let b = random_values(&mut rng, 1024);
        let fast = fast_convolve(
            &DenseSignal::on_integers(0, a.clone()).unwrap(),
            &DenseSignal::on_integers(0, b.clone()).unwrap(),
        )
        .unwrap()
        .to_sampled();
        let naive = convolve(
            &SampledFunction::from_integer_samples(0, &a),
            &SampledFunction::from_integer_samples(0, &b),
            &Pairing::mul(),
            &mu,
        )
        .unwrap();
        worst = worst.max(scaled_deviation(&fast, &naive, &a, &b));
    }
    let rows = bench(&[1024, 4096, 16384], 3).unwrap();
    let faster = rows[2].fast_time < rows[2].naive_time;
    let growth = rows[2].fast_time / rows[0].fast_time;
    let subquadratic = growth < 256.0 && rows[1].fast_time / rows[0].fast_time < 16.0;
    outcome(
        worst <= 1e-9 && faster && subquadratic,
        format!(
            "worst deviation {worst:.1e}; at 16384 naive {:.3}s vs fast {:.5}s; fast time x{growth:.1} for 16x size",
            rows[2].naive_time, rows[2].fast_time
        ),
    )
}

fn cli_contract() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let path = |name: &str| dir.path().join(name);
    let write = |name: &str, text: &str| std::fs::write(path(name), text).unwrap();
    let gconv = |args: &[&str]| {
        Command::new(env!("CARGO_BIN_EXE_gconv"))
            .current_dir(dir.path())
            .args(args)
            .output()
            .unwrap()
            .status
            .code()
    };
    write("a.csv", "# group=Z vdim=1\n0,1\n1,2\n");
    write("b.csv", "# group=Z vdim=1\n0,3\n1,4\n");
    write("empty.csv", "# group=Z vdim=1\n");
    write("v2.csv", "# group=Z vdim=2\n0,1,2\n");
    write("corrupt.csv", "# group=Z vdim=1\n0,3\n1,10\n2,9\n");

    let mut failed = Vec::new();
    let code = gconv(&[
        "conv",
        "--group",
        "Z",
        "--pairing",
        "mul",
        "a.csv",
        "b.csv",
        "-o",
        "out.csv",
    ]);
    let out = std::fs::read_to_string(path("out.csv")).unwrap_or_default();
    if code != Some(0) || out != "# group=Z vdim=1\n0,3\n1,10\n2,8\n" {
        failed.push("conv example");
    }
    let code = gconv(&[
        "conv",
        "--group",
        "Z",
        "--pairing",
        "mul",
        "empty.csv",
        "b.csv",
        "-o",
        "e.csv",
    ]);
    let out = std::fs::read_to_string(path("e.csv")).unwrap_or_default();
    if code != Some(0) || out != "# group=Z vdim=1\n" {
        failed.push("empty input");
    }
    if gconv(&[
        "conv",
        "--group",
        "Z",
        "--pairing",
        "mul",
        "a.csv",
        "v2.csv",
        "-o",
        "m.csv",
    ]) != Some(3)
    {
        failed.push("vdim mismatch");
    }
    if gconv(&[
        "laws",
        "--group",
        "Z",
        "a.csv",
        "b.csv",
        "--verify",
        "corrupt.csv",
    ]) != Some(1)
    {
        failed.push("laws negative control");
    }
    let text = std::fs::read_to_string(path("out.csv")).unwrap_or_default();
    let round_trip = parse_csv(&text)
        .map(|f| to_csv(&f) == text)
        .unwrap_or(false);
    if !round_trip {
        failed.push("csv round trip");
    }
    outcome(failed.is_empty(), format!("failing: {failed:?}"))
}

fn main() {
    let secs = Duration::from_secs;
    let results = [
        run_criterion(1, "algebraic suite", secs(10), algebraic_suite),
        run_criterion(2, "commutativity", secs(5), commutativity),
        run_criterion(3, "associativity", secs(10), associativity),
        run_criterion(4, "integral identity", secs(5), integral_identity),
        run_criterion(5, "fubini swap", secs(5), fubini),
        run_criterion(6, "derivative formula", secs(30), derivative_formula),
        run_criterion(
            7,
            "directional identity and C2",
            secs(60),
            directional_and_c2,
        ),
        run_criterion(8, "mollifier bound", secs(30), mollifier_bound),
        run_criterion(9, "convergence", secs(60), convergence),
        run_criterion(10, "fast path", secs(120), fast_path),
        run_criterion(11, "cli contract", secs(10), cli_contract),
    ];
    let passed = results.iter().filter(|ok| **ok).count();
    println!("acceptance: {passed}/{} criteria pass", results.len());
    if passed != results.len() {
        std::process::exit(1);
    }
}
