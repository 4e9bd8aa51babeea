//! Seeded Gaussian randomization of Fourier data and Monte Carlo checks of
//! the probabilistic estimates (tail bounds, moment cancellations).

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::field::FourierField;
use crate::lattice::Freq;
use crate::stats::{linear_fit, mix64, quantile, LinearFit};

fn stream_id(n: Freq) -> u64 {
    // 21 bits per component covers |n_i| < 2^20
    let enc = |c: i32| ((c as i64 + (1 << 20)) as u64) & 0x1f_ffff;
    (enc(n.0[0]) << 42) | (enc(n.0[1]) << 21) | enc(n.0[2])
}

/// The standard complex Gaussian g_n(ω) attached to (seed, n):
/// (X + iY)/√2 with X, Y independent standard normals, so E|g|² = 1.
pub fn gaussian(seed: u64, n: Freq) -> Complex64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream_id(n));
    let x: f64 = StandardNormal.sample(&mut rng);
    let y: f64 = StandardNormal.sample(&mut rng);
    Complex64::new(x, y) * std::f64::consts::FRAC_1_SQRT_2
}

/// Seed of the s-th Monte Carlo sample derived from a base seed.
pub fn sample_seed(base: u64, s: u64) -> u64 {
    mix64(base ^ mix64(s.wrapping_add(0x5151)))
}

pub fn sample_gaussians(seed: u64, freqs: &[Freq]) -> Vec<(Freq, Complex64)> {
    freqs.iter().map(|&n| (n, gaussian(seed, n))).collect()
}

/// ⟨n⟩^{−(5/2−α)}, the deterministic envelope of the randomized datum.
pub fn envelope(n: Freq, alpha: f64) -> f64 {
    n.japanese().powf(-(2.5 - alpha))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RandomDatum {
    pub seed: u64,
    pub alpha: f64,
    pub n_max: usize,
    pub g: FourierField,
    pub phi_omega: FourierField,
}

/// φʷ with coefficients g_n(ω)/⟨n⟩^{5/2−α} on the cube |n_i| ≤ n_max.
pub fn randomized_datum(seed: u64, alpha: f64, n_max: usize) -> Result<RandomDatum> {
    if !(alpha > 0.0 && alpha < 1.0 / 12.0) {
        return Err(invalid(format!("alpha = {alpha} outside (0, 1/12)")));
    }
    let g = FourierField::from_fn(n_max, |n| gaussian(seed, n));
    let phi_omega = g.map(|n, c| c * envelope(n, alpha));
    Ok(RandomDatum { seed, alpha, n_max, g, phi_omega })
}

/// The deterministic datum with every g_n replaced by 1.
pub fn deterministic_datum(alpha: f64, n_max: usize) -> FourierField {
    FourierField::from_fn(n_max, |n| Complex64::new(envelope(n, alpha), 0.0))
}

fn hs_sum(f: &FourierField, s: f64) -> f64 {
    f.iter().map(|(n, c)| (1.0 + n.norm2() as f64).powf(s) * c.norm_sqr()).sum()
}

/// Fraction of seeds for which sup_n |g_n|/⟨n⟩^ε exceeds `constant`.
pub fn check_sup_bound(base_seed: u64, seed_count: usize, epsilon: f64, n_max: usize, constant: f64) -> Result<f64> {
    if !(epsilon > 0.0) {
        return Err(invalid("epsilon must be positive"));
    }
    if seed_count == 0 {
        return Err(invalid("seed_count must be positive"));
    }
    let freqs = crate::lattice::cube_points(n_max);
    let weights: Vec<f64> = freqs.iter().map(|n| n.japanese().powf(-epsilon)).collect();
    let exceed = (0..seed_count as u64)
        .into_par_iter()
        .filter(|&s| {
            let seed = sample_seed(base_seed, s);
            freqs.iter().zip(&weights).any(|(&n, &w)| gaussian(seed, n).norm() * w > constant)
        })
        .count();
    Ok(exceed as f64 / seed_count as f64)
}

/// F(ω) = Σ c(n₁…n_k) G_{n₁}⋯G_{n_k} over nondecreasing index tuples in 1..=d.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MultilinearForm {
    pub d: usize,
    pub terms: Vec<(Vec<usize>, Complex64)>,
}

impl MultilinearForm {
    /// The monomial G₁G₂⋯G_k.
    pub fn product(k: usize) -> Self {
        MultilinearForm { d: k, terms: vec![((1..=k).collect(), Complex64::new(1.0, 0.0))] }
    }

    pub fn degree(&self) -> usize {
        self.terms.first().map_or(0, |t| t.0.len())
    }

    fn validate(&self) -> Result<()> {
        let k = self.degree();
        if !(1..=5).contains(&k) {
            return Err(invalid(format!("form degree {k} outside 1..=5")));
        }
        for (idx, _) in &self.terms {
            if idx.len() != k {
                return Err(invalid("form mixes degrees"));
            }
            if idx.windows(2).any(|w| w[0] > w[1]) || idx.iter().any(|&i| i == 0 || i > self.d) {
                return Err(invalid("form indices must be nondecreasing and within 1..=d"));
            }
        }
        if self.terms.iter().all(|(_, c)| c.norm_sqr() == 0.0) {
            return Err(Error::Degenerate("all form coefficients vanish".into()));
        }
        Ok(())
    }

    /// Exact ‖F‖_{L²(Ω)}: E[G^a Ḡ^b] = δ_ab a! makes distinct monomials
    /// orthogonal with E|Π G|² = Π (multiplicity)!.
    pub fn l2_norm(&self) -> f64 {
        let mut merged: std::collections::BTreeMap<Vec<usize>, Complex64> = Default::default();
        for (idx, c) in &self.terms {
            *merged.entry(idx.clone()).or_default() += c;
        }
        merged
            .iter()
            .map(|(idx, c)| {
                let mut w = 1.0;
                let mut run = 1.0;
                for i in 1..idx.len() {
                    if idx[i] == idx[i - 1] {
                        run += 1.0;
                        w *= run;
                    } else {
                        run = 1.0;
                    }
                }
                c.norm_sqr() * w
            })
            .sum::<f64>()
            .sqrt()
    }

    pub fn evaluate(&self, seed: u64) -> Complex64 {
        let g: Vec<Complex64> = (1..=self.d).map(|i| gaussian(seed, Freq::new(i as i32, 0, 0))).collect();
        self.terms.iter().map(|(idx, c)| idx.iter().fold(*c, |acc, &i| acc * g[i - 1])).sum()
    }
}

/// Minimum exceedances a λ bin needs to enter the tail fit.
pub const MIN_EXCEEDANCES: usize = 30;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailReport {
    /// λ in units of ‖F‖_{L²(Ω)}.
    pub lambda_grid: Vec<f64>,
    pub empirical_tail: Vec<f64>,
    /// p and C in −log P ≈ C·λ^p, fitted on log–log axes.
    pub fit_exponent: f64,
    pub fit_constant: f64,
    pub sample_count: usize,
    pub degree: usize,
    pub l2_norm: f64,
    /// −log P against λ^{2/k}.
    pub linear_fit: LinearFit,
    pub fitted_bins: usize,
}

/// Empirical P(|F| > λ‖F‖_{L²}) over the grid, with both tail fits.
pub fn tail_estimate(form: &MultilinearForm, base_seed: u64, sample_count: usize, lambda_grid: &[f64]) -> Result<TailReport> {
    form.validate()?;
    if sample_count < 10_000 {
        return Err(invalid("tail estimates need at least 10^4 samples"));
    }
    let norm = form.l2_norm();
    let mut mags: Vec<f64> =
        (0..sample_count as u64).into_par_iter().map(|s| form.evaluate(sample_seed(base_seed, s)).norm() / norm).collect();
    mags.sort_by(|a, b| a.total_cmp(b));
    let mut lambdas = lambda_grid.to_vec();
    lambdas.sort_by(|a, b| a.total_cmp(b));
    let exceed: Vec<usize> = lambdas.iter().map(|&l| mags.len() - mags.partition_point(|&m| m <= l)).collect();
    let tail: Vec<f64> = exceed.iter().map(|&e| e as f64 / sample_count as f64).collect();
    let k = form.degree();
    let usable: Vec<usize> =
        (0..lambdas.len()).filter(|&i| exceed[i] >= MIN_EXCEEDANCES && tail[i] < 1.0 && lambdas[i] > 0.0).collect();
    let nlp: Vec<f64> = usable.iter().map(|&i| -tail[i].ln()).collect();
    let loglog = linear_fit(
        &usable.iter().map(|&i| lambdas[i].ln()).collect::<Vec<_>>(),
        &nlp.iter().map(|v| v.ln()).collect::<Vec<_>>(),
    );
    let lin = linear_fit(&usable.iter().map(|&i| lambdas[i].powf(2.0 / k as f64)).collect::<Vec<_>>(), &nlp);
    Ok(TailReport {
        lambda_grid: lambdas,
        empirical_tail: tail,
        fit_exponent: loglog.slope,
        fit_constant: loglog.intercept.exp(),
        sample_count,
        degree: k,
        l2_norm: norm,
        linear_fit: lin,
        fitted_bins: usable.len(),
    })
}

/// Worst empirical moments that independence and normalization force to zero.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentCheck {
    pub sample_count: usize,
    /// max over n ≠ m of |E((|g_n|²−1) g_m)|
    pub max_k_g: f64,
    /// max over n ≠ m of |E(Y_n Y_m)|, Y_n = |g_n|² − 1
    pub max_y_y: f64,
    /// max over n of |E(Y_n)|
    pub max_y: f64,
    /// 3/√samples; every checked quantity has unit second moment
    pub tolerance: f64,
    pub passed: bool,
}

pub fn check_independence_cancellation(base_seed: u64, sample_count: usize) -> Result<MomentCheck> {
    if sample_count == 0 {
        return Err(invalid("sample_count must be positive"));
    }
    let freqs = [Freq::new(0, 0, 0), Freq::new(1, 0, 0), Freq::new(0, -2, 1), Freq::new(3, 1, -1)];
    let d = freqs.len();
    let zero = || (vec![Complex64::new(0.0, 0.0); d * d], vec![0.0; d * d], vec![0.0; d]);
    let (kg, yy, y) = (0..sample_count as u64)
        .into_par_iter()
        .fold(zero, |(mut kg, mut yy, mut y), s| {
            let seed = sample_seed(base_seed, s);
            let g: Vec<Complex64> = freqs.iter().map(|&n| gaussian(seed, n)).collect();
            let yv: Vec<f64> = g.iter().map(|c| c.norm_sqr() - 1.0).collect();
            for a in 0..d {
                y[a] += yv[a];
                for b in 0..d {
                    kg[a * d + b] += g[b] * yv[a];
                    yy[a * d + b] += yv[a] * yv[b];
                }
            }
            (kg, yy, y)
        })
        .reduce(zero, |(mut k1, mut y1, mut m1), (k2, y2, m2)| {
            for i in 0..k1.len() {
                k1[i] += k2[i];
                y1[i] += y2[i];
            }
            for i in 0..m1.len() {
                m1[i] += m2[i];
            }
            (k1, y1, m1)
        });
    let sc = sample_count as f64;
    let mut max_k_g: f64 = 0.0;
    let mut max_y_y: f64 = 0.0;
    for a in 0..d {
        for b in 0..d {
            if a != b {
                max_k_g = max_k_g.max(kg[a * d + b].norm() / sc);
                max_y_y = max_y_y.max((yy[a * d + b] / sc).abs());
            }
        }
    }
    let max_y = y.iter().map(|v| (v / sc).abs()).fold(0.0, f64::max);
    let tolerance = 3.0 / sc.sqrt();
    Ok(MomentCheck {
        sample_count,
        max_k_g,
        max_y_y,
        max_y,
        tolerance,
        passed: max_k_g <= tolerance && max_y_y <= tolerance && max_y <= tolerance,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatioSummary {
    pub s: f64,
    pub n_max: usize,
    pub alpha: f64,
    pub seed_count: usize,
    pub median: f64,
    pub q05: f64,
    pub q95: f64,
    pub min: f64,
    pub max: f64,
}

/// ‖φʷ‖_{Hˢ}/‖φ‖_{Hˢ} over seeds, φ the datum with all g_n = 1.
pub fn hs_norm_equivalence(base_seed: u64, seed_count: usize, s: f64, n_max: usize, alpha: f64) -> Result<RatioSummary> {
    if seed_count == 0 {
        return Err(invalid("seed_count must be positive"));
    }
    let reference = hs_sum(&deterministic_datum(alpha, n_max), s).sqrt();
    let ratios: Vec<f64> = (0..seed_count as u64)
        .into_par_iter()
        .map(|k| {
            let d = randomized_datum(sample_seed(base_seed, k), alpha, n_max)?;
            Ok(hs_sum(&d.phi_omega, s).sqrt() / reference)
        })
        .collect::<Result<_>>()?;
    Ok(RatioSummary {
        s,
        n_max,
        alpha,
        seed_count,
        median: quantile(&ratios, 0.5),
        q05: quantile(&ratios, 0.05),
        q95: quantile(&ratios, 0.95),
        min: ratios.iter().copied().fold(f64::INFINITY, f64::min),
        max: ratios.iter().copied().fold(0.0, f64::max),
    })
}
