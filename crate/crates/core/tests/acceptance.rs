//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any criterion fails.

use std::time::Instant;

use num_complex::Complex64 as C;
use quintic_lab::cli::summarize_smoothing;
use quintic_lab::estimates::{lookup, run_scaling, ScalingOptions};
use quintic_lab::gauge::{gauge_transform, validate_gauge_sign, GaugePhase, DEFAULT_GAUGE_SIGN};
use quintic_lab::lattice::{certify_counting_bound, CountingFamily, CountingRange};
use quintic_lab::nonlinearity::{decompose_j, quintic_fourier_bruteforce, quintic_fourier_fft};
use quintic_lab::random_data::{gaussian, randomized_datum, sample_seed, tail_estimate, MultilinearForm};
use quintic_lab::solver::{integrate, smoothing_experiment, Equation, Integrator, SolveConfig};
use quintic_lab::spaces::{sup_hs, vp_norm, xs_linear_bound_check, Trajectory};
use quintic_lab::stats::linear_fit;
use quintic_lab::{FourierField, Freq};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn random_field(seed: u64, n_max: usize) -> FourierField {
    FourierField::from_fn(n_max, |n| gaussian(seed, n))
}

fn rel(a: &FourierField, b: &FourierField) -> f64 {
    a.sub(b).l2_norm() / b.l2_norm()
}

fn identity() -> Outcome {
    let mut worst = 0.0f64;
    let cases = (0..100).map(|s| (s, 1)).chain((100..110).map(|s| (s, 2)));
    for (seed, n_max) in cases {
        let u = random_field(sample_seed(11, seed), n_max);
        let f = quintic_fourier_bruteforce(&u).expect("brute force within budget");
        worst = worst.max(rel(&decompose_j(&u).total(), &f));
    }
    outcome(worst <= 1e-12, format!("max relative error {worst:.2e} (tol 1e-12)"))
}

fn fft_vs_bruteforce() -> Outcome {
    let mut worst = 0.0f64;
    for n_max in 0..=2 {
        for seed in 0..10 {
            let u = random_field(sample_seed(22, seed), n_max);
            let f = quintic_fourier_bruteforce(&u).unwrap();
            worst = worst.max(rel(&quintic_fourier_fft(&u), &f));
        }
    }
    outcome(worst <= 1e-12, format!("max relative difference {worst:.2e} (tol 1e-12)"))
}

fn counting() -> Outcome {
    let radii = vec![2.0, 4.0, 8.0, 16.0];
    let runs = [
        (CountingFamily::Sphere, CountingRange::sphere(10_000)),
        (CountingFamily::SphereBall, CountingRange::sphere_ball(10_000, radii.clone())),
        (CountingFamily::PlaneBall, CountingRange::plane_ball(radii)),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for (family, range) in runs {
        let r = certify_counting_bound(family, &range).unwrap();
        pass &= r.holds;
        parts.push(format!("{family:?} C={:.3} holdout={:.3}", r.fitted_constant, r.holdout_max_ratio));
    }
    outcome(pass, parts.join(", "))
}

fn tails() -> Outcome {
    let grid: Vec<f64> = (1..=40).map(|i| 4.0 * i as f64 / 40.0).collect();
    let f1 = tail_estimate(&MultilinearForm::product(1), 4, 100_000, &grid).unwrap();
    let mut pass = (f1.fit_exponent - 2.0).abs() <= 0.1;
    let mut detail = format!("k=1 exponent {:.3} (2±0.1)", f1.fit_exponent);
    for k in [2, 3] {
        let r = tail_estimate(&MultilinearForm::product(k), 4, 100_000, &grid).unwrap();
        pass &= r.linear_fit.r2 >= 0.9;
        detail.push_str(&format!(", k={k} R²={:.3} (≥0.9)", r.linear_fit.r2));
    }
    outcome(pass, detail)
}

fn exhaustive_vp(series: &[C], p: f64) -> f64 {
    let k = series.len();
    let mut best = 0.0f64;
    for mask in 1u32..(1 << k) {
        let idx: Vec<usize> = (0..k).filter(|i| mask >> i & 1 == 1).collect();
        let s = idx.windows(2).fold(0.0, |acc, w| acc + (series[w[1]] - series[w[0]]).norm().powf(p));
        best = best.max(s);
    }
    best.powf(1.0 / p)
}

fn variation() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut mismatches = 0;
    for _ in 0..1000 {
        let len = rng.random_range(1..=12);
        let series: Vec<C> = (0..len).map(|_| C::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)).collect();
        if vp_norm(&series, 2.0) != exhaustive_vp(&series, 2.0) {
            mismatches += 1;
        }
    }
    outcome(mismatches == 0, format!("{mismatches} of 1000 series differ (exact equality)"))
}

fn linear_bound() -> Outcome {
    let times = Trajectory::uniform_times(0.0, 1.0, 41);
    let s = 1.3;
    let mut failures = 0;
    for seed in 0..20 {
        let phi = FourierField::from_fn(4, |n| gaussian(sample_seed(66, seed), n) / n.japanese().powi(2));
        failures += !xs_linear_bound_check(&phi, s, &times, 1e-9).unwrap() as usize;
        let phi_w = randomized_datum(seed, 1.0 / 15.0, 4).unwrap().phi_omega;
        failures += !xs_linear_bound_check(&phi_w, s, &times, 1e-9).unwrap() as usize;
    }
    outcome(failures == 0, format!("{failures} of 40 fields exceed ‖φ‖(1+1e-9)"))
}

fn smooth_data(seed: u64) -> FourierField {
    FourierField::from_fn(8, |n| gaussian(seed, n) * 0.15 * (-(n.norm2() as f64) / 4.0).exp())
}

fn solver_oracle() -> Outcome {
    let (a, n0) = (0.9, Freq::new(1, 1, 0));
    let u0 = FourierField::plane_wave(2, n0, C::new(a, 0.0));
    let omega = n0.norm2() as f64 + a.powi(4);
    let dts = [1e-2, 5e-3, 2.5e-3];
    let errs: Vec<f64> = dts
        .iter()
        .map(|&dt| {
            let cfg = SolveConfig::new(2, dt, 1.0, 1.0, Equation::Original, Integrator::ExponentialRk2);
            let u = integrate(&u0, &cfg).unwrap();
            u.times()
                .iter()
                .zip(u.fields())
                .map(|(t, f)| (f.get(n0) - C::from_polar(a, -omega * t)).norm())
                .fold(0.0, f64::max)
        })
        .collect();
    let order = linear_fit(&dts.map(f64::ln), &errs.iter().map(|e| e.ln()).collect::<Vec<_>>()).slope;

    let phi = smooth_data(5);
    let cfg = SolveConfig::new(8, 1e-2, 1.0, 1.0, Equation::Original, Integrator::StrangSplitting);
    let u = integrate(&phi, &cfg).unwrap();
    let drift = u.fields().iter().map(|f| (f.mass() - phi.mass()).abs() / phi.mass()).fold(0.0, f64::max);
    outcome(
        (order - 2.0).abs() <= 0.2 && drift <= 1e-6,
        format!("order {order:.3} (2±0.2), errors {errs:?}, mass drift {drift:.2e} (≤1e-6)"),
    )
}

fn gauge_equivalence() -> Outcome {
    let phi = smooth_data(5);
    let mut pass = true;
    let mut parts = Vec::new();
    for dt in [1e-2, 5e-3, 2.5e-3] {
        let orig = SolveConfig::new(8, dt, 0.2, 1.0, Equation::Original, Integrator::StrangSplitting);
        let gauged = SolveConfig { equation: Equation::Gauged, ..orig.clone() };
        let uo = integrate(&phi, &orig).unwrap();
        let v = integrate(&phi, &gauged).unwrap();
        let quad = GaugePhase::new(&v, 1.0).quadrature_error();
        let diff = sup_hs(&gauge_transform(&v, 1.0, DEFAULT_GAUGE_SIGN).sub(&uo).unwrap(), 0.0);
        let tol = 10.0 * (dt * dt + quad);
        pass &= diff <= tol;
        parts.push(format!("dt {dt}: {diff:.2e} ≤ {tol:.2e}"));
    }
    let sign = validate_gauge_sign(0.5, 1.0).unwrap();
    let unique = !sign.degenerate && sign.residual_plus > sign.tolerance && sign.residual_minus <= sign.tolerance;
    pass &= unique && sign.sign == DEFAULT_GAUGE_SIGN;
    parts.push(format!("sign {} unique={unique}", sign.sign));
    outcome(pass, parts.join(", "))
}

fn trilinear_scaling() -> Outcome {
    let opts = ScalingOptions::default();
    let mut pass = true;
    let mut parts = Vec::new();
    for id in ["barRRR", "barRDR", "DRR", "DRD", "RD"] {
        let r = run_scaling(id, &lookup(id).unwrap().default_grid(), &opts).unwrap();
        pass &= r.verdict;
        parts.push(format!(
            "{id}: slope {:.2} vs {:.2}+0.30 monotone={}",
            r.fitted_slope, r.predicted_slope, r.monotone
        ));
    }
    outcome(pass, parts.join("; "))
}

fn smoothing() -> Outcome {
    let n_list = [8, 16, 32];
    let mut cfg = SolveConfig::new(8, 1e-3, 1e-2, 1.0, Equation::Gauged, Integrator::StrangSplitting);
    cfg.dealias = false;
    let runs = (0..5).map(|seed| smoothing_experiment(seed, 1.0 / 15.0, 1.3, &n_list, 1e-2, &cfg).unwrap()).collect();
    let sum = summarize_smoothing(runs, &n_list, 0.8);
    outcome(
        sum.ratio_quantile_decreasing && sum.phi_increasing,
        format!(
            "0.8-quantile ratios {:.4?} decreasing={}, phi increasing={}",
            sum.ratio_quantile, sum.ratio_quantile_decreasing, sum.phi_increasing
        ),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("decomposition identity", identity),
        ("fft vs brute-force quintic", fft_vs_bruteforce),
        ("lattice counting bounds", counting),
        ("chaos tail bounds", tails),
        ("V² dynamic program", variation),
        ("linear Yˢ bound", linear_bound),
        ("solver oracle", solver_oracle),
        ("gauge equivalence", gauge_equivalence),
        ("trilinear scaling", trilinear_scaling),
        ("smoothing signature", smoothing),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = check();
        let tag = if o.pass { "PASS" } else { "FAIL" };
        failed += !o.pass as usize;
        println!("criterion {:>2} {tag} {name}: {} [{:.1?}]", i + 1, o.detail, start.elapsed());
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
