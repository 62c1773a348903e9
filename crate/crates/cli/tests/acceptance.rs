//! End-to-end acceptance suite. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any criterion fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::Command;
use std::time::Instant;

use mllt_core::bernstein::{
    limit_constant_min_cross, limit_constant_sum_cube, limit_constant_sum_sq,
};
use mllt_core::exact::{central_moment_exact, pmf, pmf_exact_rational, RationalParams};
use mllt_core::fit::loglog_slope;
use mllt_core::gauss_compare::{kernel_t1, kernel_t2, tail_mass_outside_bulk, tv_distance_numeric};
use mllt_core::llt::{approx_pmf, max_bulk_ratio_error, raw_coefficients, Coefficients, Order};
use mllt_core::model::{delta_vector, in_bulk};
use mllt_core::moments::{
    closed_form_central_moment, restricted_moment_bound, MomentSpec, RestrictedSpec,
};
use mllt_core::region::{region_prob_approx, region_prob_exact, Region};
use mllt_core::{LatticePoint, ModelParams, SimplexLattice};
use num_traits::ToPrimitive;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self {
            pass,
            detail: detail.into(),
        }
    }
}

fn model(p: &[f64], n: u64) -> ModelParams {
    ModelParams::new(p.to_vec(), n).expect("valid model")
}

fn powers_of_two(lo: u32, hi: u32) -> Vec<u64> {
    (lo..=hi).map(|e| 1u64 << e).collect()
}

/// Random probability vector of length `d` with every cell, including the remainder, at least `floor`.
fn random_p(rng: &mut ChaCha8Rng, d: usize, floor: f64) -> Vec<f64> {
    let w: Vec<f64> = (0..=d).map(|_| rng.random_range(0.0..1.0)).collect();
    let total: f64 = w.iter().sum();
    let spare = 1.0 - floor * (d + 1) as f64;
    w[..d].iter().map(|x| floor + spare * x / total).collect()
}

fn fmt_slopes(s: &[f64]) -> String {
    s.iter()
        .map(|v| format!("{v:.3}"))
        .collect::<Vec<_>>()
        .join("/")
}

fn pointwise_rate() -> Outcome {
    let limits = [-0.45, -0.9, -1.35];
    let ns = powers_of_two(6, 13);
    let xs: Vec<f64> = ns.iter().map(|&n| n as f64).collect();
    let mut pass = true;
    let mut detail = Vec::new();
    for p in [vec![0.5], vec![0.3, 0.4]] {
        let mut maxima: [Vec<f64>; 3] = Default::default();
        for &n in &ns {
            let s = max_bulk_ratio_error(&model(&p, n), 0.5).unwrap();
            for (acc, v) in maxima.iter_mut().zip(s.max_abs) {
                acc.push(v);
            }
        }
        let slopes: Vec<f64> = maxima
            .iter()
            .map(|ys| loglog_slope(&xs, ys).unwrap())
            .collect();
        pass &= slopes.iter().zip(limits).all(|(s, lim)| *s <= lim);
        detail.push(format!(
            "p={p:?} slopes(0/half/one)={}",
            fmt_slopes(&slopes)
        ));
    }
    Outcome::new(pass, detail.join("; "))
}

/// `|a - b| / max(|a|, |b|, 1)`: relative error, measured absolutely once both sides drop below one.
fn scaled_gap(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}

fn raw_vs_symmetrized() -> Outcome {
    let tol = 1e-11;
    let models: [&[f64]; 8] = [
        &[0.5],
        &[0.13],
        &[0.3, 0.4],
        &[0.05, 0.6],
        &[0.2, 0.25, 0.3],
        &[0.1, 0.15, 0.6],
        &[0.1, 0.2, 0.15, 0.25],
        &[0.3, 0.05, 0.2, 0.1],
    ];
    let mut worst: f64 = 0.0;
    let mut checked = 0u64;
    for p in models {
        for n in 1..=50 {
            let m = model(p, n);
            let coef = Coefficients::new(&m);
            for k in SimplexLattice::new(p.len(), n).unwrap().iter() {
                let dv = delta_vector(&m, &k).unwrap();
                let (sh, so) = coef.eval_delta(&dv);
                let (rh, ro) = raw_coefficients(p, m.q(), &dv.delta);
                worst = worst.max(scaled_gap(sh, rh)).max(scaled_gap(so, ro));
                checked += 1;
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0002);
    let n = 10_000u64;
    let mut random = 0;
    while random < 1000 {
        let d = rng.random_range(1..=4usize);
        let p = random_p(&mut rng, d, 0.05);
        let m = model(&p, n);
        let radius = 0.5 * (n as f64).powf(2.0 / 3.0);
        let k: Vec<u64> = p
            .iter()
            .map(|pi| {
                (n as f64 * pi + rng.random_range(-1.0..1.0) * radius * pi)
                    .round()
                    .max(0.0) as u64
            })
            .collect();
        let k = LatticePoint::new(k);
        if k.total() > n || !in_bulk(&m, &k, 0.5).unwrap() {
            continue;
        }
        let dv = delta_vector(&m, &k).unwrap();
        let (sh, so) = Coefficients::new(&m).eval_delta(&dv);
        let (rh, ro) = raw_coefficients(&p, m.q(), &dv.delta);
        worst = worst.max(scaled_gap(sh, rh)).max(scaled_gap(so, ro));
        random += 1;
    }
    Outcome::new(
        worst <= tol,
        format!("{checked} grid + {random} random bulk points, worst scaled gap {worst:.2e} (tol {tol:.0e})"),
    )
}

fn central_binomial() -> Outcome {
    let r = RationalParams::from_ratios(&[(1, 2)], 100).unwrap();
    let k = LatticePoint::new(vec![50]);
    let exact = pmf_exact_rational(&r, &k).unwrap().to_f64().unwrap();
    let approx = approx_pmf(&model(&[0.5], 100), &k, Order::One)
        .unwrap()
        .value;
    let pass = (exact - 0.0795892).abs() < 5e-8
        && (approx - 0.0795890).abs() < 5e-8
        && (approx - exact).abs() <= 5e-7;
    Outcome::new(
        pass,
        format!(
            "exact {exact:.10}, order-one {approx:.10}, gap {:.2e}",
            (approx - exact).abs()
        ),
    )
}

fn halfspace_error(p: f64, n: u64, frac: f64) -> f64 {
    let m = model(&[p], n);
    let r = Region::HalfSpace {
        a: vec![1.0],
        b: frac * n as f64,
    };
    (region_prob_approx(&m, &r, Order::Zero, 12).unwrap() - region_prob_exact(&m, &r).unwrap())
        .abs()
}

fn continuity_corrected_cdf() -> Outcome {
    let m = model(&[0.5], 100);
    let r = Region::HalfSpace {
        a: vec![1.0],
        b: 50.0,
    };
    let exact = region_prob_exact(&m, &r).unwrap();
    let approx = region_prob_approx(&m, &r, Order::Zero, 12).unwrap();
    let ns = powers_of_two(6, 12);
    let xs: Vec<f64> = ns.iter().map(|&n| n as f64).collect();
    let mut slopes = Vec::new();
    for (p, frac) in [(0.5, 0.5), (0.3, 0.3)] {
        let ys: Vec<f64> = ns.iter().map(|&n| halfspace_error(p, n, frac)).collect();
        slopes.push(loglog_slope(&xs, &ys).unwrap());
    }
    let pass = (exact - 0.5397946).abs() < 5e-8
        && (approx - exact).abs() <= 5e-5
        && slopes.iter().all(|s| *s <= -0.45);
    Outcome::new(
        pass,
        format!(
            "exact {exact:.8}, order-0 {approx:.8} (gap {:.2e}); slopes p=0.5 {:.3}, p=0.3 {:.3}",
            (approx - exact).abs(),
            slopes[0],
            slopes[1]
        ),
    )
}

fn moment_exactness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0005);
    let mut worst: f64 = 0.0;
    let mut checks = 0;
    let configs = 200;
    for _ in 0..configs {
        let d = rng.random_range(1..=3usize);
        let n = rng.random_range(1..=40u64);
        let p = random_p(&mut rng, d, 0.02);
        let m = model(&p, n);
        let mut specs = Vec::new();
        for i in 0..d {
            for j in 0..d {
                specs.push(MomentSpec::Cov(i, j));
                for l in 0..d {
                    specs.push(MomentSpec::Third(i, j, l));
                }
            }
        }
        for s in specs {
            let c = closed_form_central_moment(&m, s).unwrap().leading;
            let o = central_moment_exact(&m, &s.exponents(d)).unwrap();
            worst = worst.max((c - o).abs() / c.abs().max(o.abs()));
            checks += 1;
        }
    }
    Outcome::new(
        worst <= 1e-9,
        format!("{configs} configs, {checks} moments, worst relative error {worst:.2e}"),
    )
}

fn variation(v: &[f64]) -> f64 {
    let max = v.iter().cloned().fold(f64::MIN, f64::max);
    let min = v.iter().cloned().fold(f64::MAX, f64::min);
    (max - min) / min
}

fn remainder_scaling() -> Outcome {
    let ns = [10u64, 20, 40, 80];
    let mut pass = true;
    let mut worst: f64 = 0.0;
    for p in [[0.3, 0.4], [0.2, 0.5], [0.1, 0.25]] {
        for (spec, power) in [
            (MomentSpec::Fourth(0), 1),
            (MomentSpec::Sixth(0), 2),
            (MomentSpec::Mixed33(0, 1), 2),
        ] {
            let ratios: Vec<f64> = ns
                .iter()
                .map(|&n| {
                    let m = model(&p, n);
                    let c = closed_form_central_moment(&m, spec).unwrap().leading;
                    let o = central_moment_exact(&m, &spec.exponents(2)).unwrap();
                    (o - c).abs() / (n as f64).powi(power)
                })
                .collect();
            let v = variation(&ratios);
            worst = worst.max(v);
            pass &= v < 0.5;
        }
    }
    Outcome::new(
        pass,
        format!("worst (max - min) / min of the scaled remainders {worst:.3}"),
    )
}

fn restricted_bounds() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0007);
    let configs = 240;
    let mut violations = 0;
    let mut checks = 0;
    let mut tightest: f64 = 0.0;
    for c in 0..configs {
        let d = rng.random_range(1..=2usize);
        let n = rng.random_range(2..=60u64);
        let eta = [0.3, 0.5, 0.8][c % 3];
        let p = random_p(&mut rng, d, 0.03);
        let m = model(&p, n);
        let nf = n as f64;
        // sums over the complement of the bulk
        let mut p_out = 0.0;
        let mut first = vec![0.0; d];
        let mut second = vec![0.0; d * d];
        let mut third = vec![0.0; d * d * d];
        for k in SimplexLattice::new(d, n).unwrap().iter() {
            if in_bulk(&m, &k, eta).unwrap() {
                continue;
            }
            let w = pmf(&m, &k).unwrap();
            let x: Vec<f64> =
                k.0.iter()
                    .zip(&p)
                    .map(|(&ki, pi)| ki as f64 - nf * pi)
                    .collect();
            p_out += w;
            for i in 0..d {
                first[i] += x[i] * w;
                for j in 0..d {
                    second[i * d + j] += x[i] * x[j] * w;
                    for l in 0..d {
                        third[(i * d + j) * d + l] += x[i] * x[j] * x[l] * w;
                    }
                }
            }
        }
        for (devs, spec) in [
            (&first, RestrictedSpec::First),
            (&second, RestrictedSpec::Second),
            (&third, RestrictedSpec::Third),
        ] {
            let bound = restricted_moment_bound(n, spec, p_out);
            for dev in devs.iter() {
                checks += 1;
                if dev.abs() > bound * (1.0 + 1e-12) {
                    violations += 1;
                }
                if bound > 0.0 {
                    tightest = tightest.max(dev.abs() / bound);
                }
            }
        }
    }
    Outcome::new(
        violations == 0,
        format!("{configs} configs, {checks} checks, {violations} violations, max deviation/bound {tightest:.3}"),
    )
}

fn tail_bound() -> Outcome {
    let spot = tail_mass_outside_bulk(&model(&[0.5], 100), 0.5)
        .unwrap()
        .exact_mass;
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0008);
    let configs = 240;
    let mut violations = 0;
    let mut tightest: f64 = 0.0;
    for c in 0..configs {
        let d = rng.random_range(1..=2usize);
        let n = rng.random_range(1..=400u64);
        let eta = [0.3, 0.5, 0.8][c % 3];
        let p = random_p(&mut rng, d, 0.02);
        let t = tail_mass_outside_bulk(&model(&p, n), eta).unwrap();
        if t.exact_mass > t.azuma_bound {
            violations += 1;
        }
        tightest = tightest.max(t.exact_mass / t.azuma_bound);
    }
    Outcome::new(
        violations == 0 && (spot - 0.2713).abs() <= 1e-3,
        format!("spot mass {spot:.5}; {configs} configs, {violations} violations, max mass/bound {tightest:.3}"),
    )
}

fn tv_rate() -> Outcome {
    let ns = powers_of_two(4, 12);
    let tv: Vec<f64> = ns
        .iter()
        .map(|&n| tv_distance_numeric(&model(&[0.5], n), 12).unwrap().tv)
        .collect();
    let xs: Vec<f64> = ns.iter().map(|&n| n as f64).collect();
    let slope = loglog_slope(&xs, &tv).unwrap();
    let scaled: Vec<f64> = tv.iter().zip(&xs).map(|(t, n)| t * n.sqrt()).collect();
    let ratio = scaled.iter().cloned().fold(f64::MIN, f64::max)
        / scaled.iter().cloned().fold(f64::MAX, f64::min);
    let by_dim: Vec<f64> = (1..=3)
        .map(|d| {
            let p = vec![1.0 / (d + 1) as f64; d];
            tv_distance_numeric(&model(&p, 32), 12).unwrap().tv
        })
        .collect();
    let monotone = by_dim.windows(2).all(|w| w[0] < w[1]);
    Outcome::new(
        (-0.65..=-0.4).contains(&slope) && ratio <= 3.0 && monotone,
        format!(
            "slope {slope:.4}, max/min tv*sqrt(N) {ratio:.4}; tv at N=32, d=1..3: {}",
            by_dim
                .iter()
                .map(|v| format!("{v:.4}"))
                .collect::<Vec<_>>()
                .join(" < ")
        ),
    )
}

fn bernstein_constants() -> Outcome {
    let m = model(&[0.5], 400);
    let sq = limit_constant_sum_sq(&m).unwrap();
    let cube = limit_constant_sum_cube(&m).unwrap();
    let cross = limit_constant_min_cross(&m, 0).unwrap();
    let pi = std::f64::consts::PI;
    let targets = [
        1.0 / pi.sqrt(),
        2.0 / (3f64.sqrt() * pi),
        -(0.25 / pi).sqrt(),
    ];
    let gaps: Vec<f64> = [sq, cube, cross]
        .iter()
        .zip(targets)
        .map(|(pair, t)| (pair.finite_n / t - 1.0).abs())
        .collect();
    let pass = gaps[0] <= 0.02 && gaps[1] <= 0.03 && gaps[2] <= 0.05;
    Outcome::new(
        pass,
        format!(
            "relative gaps {:.2e} / {:.2e} / {:.2e} (tol 2% / 3% / 5%)",
            gaps[0], gaps[1], gaps[2]
        ),
    )
}

fn kernel_round_trip() -> Outcome {
    let edge = 0.5 - 1e-12;
    let levels = [-edge, -0.25, 0.0, 0.25, edge];
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0011);
    let mut failures = 0u64;
    let mut exhaustive = 0u64;
    for p in [vec![0.3], vec![0.5], vec![0.25, 0.4], vec![0.1, 0.1]] {
        let d = p.len();
        for n in 1..=20 {
            let m = model(&p, n);
            for k in SimplexLattice::new(d, n).unwrap().iter() {
                let mut draws: Vec<Vec<f64>> = match d {
                    1 => levels.iter().map(|&a| vec![a]).collect(),
                    _ => levels
                        .iter()
                        .flat_map(|&a| levels.iter().map(move |&b| vec![a, b]))
                        .collect(),
                };
                draws.extend(
                    (0..8).map(|_| (0..d).map(|_| rng.random_range(-edge..edge)).collect()),
                );
                for u in draws {
                    exhaustive += 1;
                    if kernel_t2(&m, &kernel_t1(&m, &k, &u).unwrap()) != k {
                        failures += 1;
                    }
                }
            }
        }
    }
    let m = model(&[0.1, 0.2, 0.3, 0.15], 50);
    let lat = SimplexLattice::new(4, 50).unwrap();
    let trials = 100_000u64;
    for _ in 0..trials {
        let k = lat.unrank(rng.random_range(0..lat.len()));
        let u: Vec<f64> = (0..4).map(|_| rng.random_range(-edge..edge)).collect();
        if kernel_t2(&m, &kernel_t1(&m, &k, &u).unwrap()) != k {
            failures += 1;
        }
    }
    Outcome::new(
        failures == 0,
        format!("{exhaustive} exhaustive + {trials} random trials, {failures} failures"),
    )
}

fn run_cli(args: &[&str], threads: Option<&str>, env_threads: Option<&str>) -> Vec<u8> {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_mllt"));
    cmd.args(args).env_remove("MLLT_THREADS");
    if let Some(t) = threads {
        cmd.args(["--threads", t]);
    }
    if let Some(t) = env_threads {
        cmd.env("MLLT_THREADS", t);
    }
    let out = cmd.output().expect("mllt runs");
    assert!(
        out.status.success(),
        "mllt {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out.stdout
}

fn determinism() -> Outcome {
    let runs: [&[&str]; 7] = [
        &["pmf", "--p", "0.3,0.4", "--N", "40", "--all"],
        &["error-table", "--p", "0.3,0.4", "--N-sweep", "64:1024:x2"],
        &[
            "tv",
            "--p",
            "0.3,0.2",
            "--N-sweep",
            "32:128:x2",
            "--nodes",
            "6",
        ],
        &[
            "region",
            "--p",
            "0.3,0.4",
            "--N",
            "120",
            "--region",
            "halfspace:1,1:0.7N",
            "--order",
            "half",
        ],
        &["moments", "--p", "0.2,0.3,0.1", "--N", "30"],
        &["bernstein", "constants", "--p", "0.3,0.4", "--N", "200"],
        &["expand", "--p", "0.3,0.4", "--N", "100", "--k", "31,38"],
    ];
    let mut mismatches = Vec::new();
    for args in runs {
        let reference = run_cli(args, Some("1"), None);
        let variants = [
            run_cli(args, Some("1"), None),
            run_cli(args, Some("2"), None),
            run_cli(args, Some("7"), None),
            run_cli(args, None, Some("3")),
            run_cli(args, None, None),
        ];
        if variants.iter().any(|v| *v != reference) || reference.is_empty() {
            mismatches.push(args[0]);
        }
    }
    Outcome::new(
        mismatches.is_empty(),
        format!(
            "{} commands x 6 runs (1, 1, 2, 7, env 3, default threads); mismatches: {mismatches:?}",
            runs.len()
        ),
    )
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 12] = [
        ("pointwise expansion rate", pointwise_rate),
        ("raw and symmetrized coefficients agree", raw_vs_symmetrized),
        ("central binomial spot value", central_binomial),
        ("continuity-corrected cdf", continuity_corrected_cdf),
        ("closed-form moments are exact", moment_exactness),
        ("higher-moment remainder scaling", remainder_scaling),
        ("restricted-moment bounds hold", restricted_bounds),
        ("outside-bulk mass below the tail bound", tail_bound),
        ("total variation rate", tv_rate),
        ("Bernstein limit constants", bernstein_constants),
        ("kernel round trip", kernel_round_trip),
        ("CLI output is deterministic", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Outcome::new(false, format!("panicked: {msg}"))
        });
        if !outcome.pass {
            failed += 1;
        }
        println!(
            "criterion {:>2} {}: {} ({}) [{:.1}s]",
            i + 1,
            if outcome.pass { "PASS" } else { "FAIL" },
            name,
            outcome.detail,
            start.elapsed().as_secs_f64()
        );
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
