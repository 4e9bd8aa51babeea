//! Discrete function-space norms: Hˢ, space-time Lᵖ, dyadic and cube
//! projections, Vᵖ by dynamic programming and the Yˢ norm.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::fft::{good_size, Grid3};
use crate::field::FourierField;
use crate::lattice::Freq;

const TRAJ_MAGIC: &[u8; 4] = b"QLTR";

/// Fourier fields sampled on a uniform time grid t₀ < … < t_K.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    times: Vec<f64>,
    fields: Vec<FourierField>,
}

impl Trajectory {
    pub fn new(times: Vec<f64>, fields: Vec<FourierField>) -> Result<Self> {
        if times.len() < 2 {
            return Err(invalid("a trajectory needs at least two time nodes"));
        }
        if times.len() != fields.len() {
            return Err(invalid("times and fields differ in length"));
        }
        let n = fields[0].n_max();
        if fields.iter().any(|f| f.n_max() != n) {
            return Err(invalid("trajectory fields must share N_max"));
        }
        let dt = times[1] - times[0];
        if !(dt > 0.0) {
            return Err(invalid("time grid must be increasing"));
        }
        for (k, t) in times.iter().enumerate() {
            let want = times[0] + k as f64 * dt;
            if (t - want).abs() > 1e-9 * (1.0 + want.abs()) {
                return Err(invalid("time grid must be uniform"));
            }
        }
        Ok(Trajectory { times, fields })
    }

    /// `nodes` equispaced times from t0 to t1 inclusive.
    pub fn uniform_times(t0: f64, t1: f64, nodes: usize) -> Vec<f64> {
        let dt = (t1 - t0) / (nodes - 1) as f64;
        (0..nodes).map(|k| t0 + k as f64 * dt).collect()
    }

    /// S(t)φ sampled at the given times.
    pub fn linear(phi: &FourierField, times: &[f64]) -> Result<Self> {
        let fields = times.iter().map(|&t| crate::solver::linear_propagator(phi, t)).collect();
        Trajectory::new(times.to_vec(), fields)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn fields(&self) -> &[FourierField] {
        &self.fields
    }

    pub fn dt(&self) -> f64 {
        self.times[1] - self.times[0]
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn n_max(&self) -> usize {
        self.fields[0].n_max()
    }

    pub fn map_fields(&self, mut f: impl FnMut(usize, &FourierField) -> FourierField) -> Trajectory {
        Trajectory { times: self.times.clone(), fields: self.fields.iter().enumerate().map(|(k, u)| f(k, u)).collect() }
    }

    pub fn same_grid(&self, other: &Trajectory) -> bool {
        self.times == other.times && self.n_max() == other.n_max()
    }

    pub fn sub(&self, other: &Trajectory) -> Result<Trajectory> {
        if !self.same_grid(other) {
            return Err(Error::GridMismatch("trajectories live on different grids".into()));
        }
        Ok(self.map_fields(|k, u| u.sub(&other.fields[k])))
    }

    /// Checkpoint bytes: magic, node count, then (time, field) per node.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(TRAJ_MAGIC);
        out.extend_from_slice(&(self.times.len() as u64).to_le_bytes());
        for (t, f) in self.times.iter().zip(&self.fields) {
            out.extend_from_slice(&t.to_le_bytes());
            out.extend_from_slice(&f.to_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.get(..4) != Some(TRAJ_MAGIC.as_slice()) || bytes.len() < 12 {
            return Err(Error::Format("bad trajectory header".into()));
        }
        let count = u64::from_le_bytes(bytes[4..12].try_into().unwrap()) as usize;
        let mut at = 12;
        let mut times = Vec::with_capacity(count);
        let mut fields = Vec::with_capacity(count);
        for _ in 0..count {
            let t = bytes.get(at..at + 8).ok_or_else(|| Error::Format("truncated trajectory".into()))?;
            times.push(f64::from_le_bytes(t.try_into().unwrap()));
            let (f, used) = FourierField::read_bytes(&bytes[at + 8..])?;
            fields.push(f);
            at += 8 + used;
        }
        if at != bytes.len() {
            return Err(Error::Format("trailing bytes after trajectory".into()));
        }
        Trajectory::new(times, fields)
    }
}

/// (Σ ⟨n⟩^{2s}|a_n|²)^{1/2}.
pub fn hs_norm(u: &FourierField, s: f64) -> f64 {
    u.iter().map(|(n, c)| (1.0 + n.norm2() as f64).powf(s) * c.norm_sqr()).sum::<f64>().sqrt()
}

/// sup_k ‖u(t_k)‖_{Hˢ}.
pub fn sup_hs(u: &Trajectory, s: f64) -> f64 {
    u.fields.iter().map(|f| hs_norm(f, s)).fold(0.0, f64::max)
}

/// Rectangular Fourier projections.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Projector {
    /// P_N = P_{≤N} − P_{≤N/2} for N ≥ 2, and P_1 = P_{≤1}.
    Dyadic(u32),
    /// P_{≤N}: max_i |n_i| ≤ N.
    Low(u32),
    /// P_C for the cube C = Π_i [index_i·side, (index_i+1)·side) of the tiling C_side.
    Cube { side: u32, index: [i32; 3] },
}

impl Projector {
    pub fn contains(&self, n: Freq) -> bool {
        match *self {
            Projector::Low(big_n) => n.max_abs() as u32 <= big_n,
            Projector::Dyadic(1) => n.max_abs() <= 1,
            Projector::Dyadic(big_n) => {
                let m = n.max_abs() as u32;
                m <= big_n && m > big_n / 2
            }
            Projector::Cube { side, index } => {
                (0..3).all(|i| n.0[i].div_euclid(side as i32) == index[i])
            }
        }
    }

    /// Cubes of side `side` that meet [−n_max, n_max]³.
    pub fn cube_tiling(side: u32, n_max: usize) -> Vec<Projector> {
        let s = side as i32;
        let lo = (-(n_max as i32)).div_euclid(s);
        let hi = (n_max as i32).div_euclid(s);
        let mut out = Vec::new();
        for a in lo..=hi {
            for b in lo..=hi {
                for c in lo..=hi {
                    out.push(Projector::Cube { side, index: [a, b, c] });
                }
            }
        }
        out
    }
}

pub fn project(u: &FourierField, block: Projector) -> FourierField {
    u.map(|n, c| if block.contains(n) { c } else { Complex64::new(0.0, 0.0) })
}

/// ‖u‖_{Lᵖ(𝕋³)} on a grid with 3× oversampling of the bandwidth.
pub fn spatial_lp_norm(u: &FourierField, p: f64) -> f64 {
    let grid = Grid3::new(good_size(3 * u.side()));
    spatial_lp_norm_on(&grid, u, p)
}

fn spatial_lp_norm_on(grid: &Grid3, u: &FourierField, p: f64) -> f64 {
    let vals = grid.synthesize(u);
    grid.mean(&vals, |v| v.norm().powf(p)).powf(1.0 / p)
}

/// Trapezoid weights on a uniform grid.
pub fn trapezoid_weights(times: &[f64]) -> Vec<f64> {
    let dt = times[1] - times[0];
    let k = times.len();
    (0..k).map(|i| if i == 0 || i == k - 1 { dt / 2.0 } else { dt }).collect()
}

/// (∫ ‖u(t)‖ᵖ_{Lᵖ(𝕋³)} dt)^{1/p}, trapezoid rule in time.
pub fn lp_spacetime_norm(u: &Trajectory, p: f64) -> Result<f64> {
    lp_spacetime_norm_oversampled(u, p, 3)
}

/// As `lp_spacetime_norm` with a chosen spatial oversampling factor.
pub fn lp_spacetime_norm_oversampled(u: &Trajectory, p: f64, oversample: usize) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(invalid("p must be at least 1"));
    }
    let grid = Grid3::new(good_size(oversample * u.fields[0].side()));
    let w = trapezoid_weights(&u.times);
    let total: f64 = u.fields.iter().zip(&w).map(|(f, wk)| wk * spatial_lp_norm_on(&grid, f, p).powf(p)).sum();
    Ok(total.powf(1.0 / p))
}

/// sup over subsequences k₀ < … < k_J of (Σ|v_{k_j} − v_{k_{j−1}}|ᵖ)^{1/p}.
/// best[j] is the largest sum over chains ending at j; O(K²).
pub fn vp_norm(series: &[Complex64], p: f64) -> f64 {
    let k = series.len();
    let mut best = vec![0.0f64; k];
    for j in 1..k {
        let mut b = 0.0f64;
        for i in 0..j {
            b = b.max(best[i] + (series[j] - series[i]).norm().powf(p));
        }
        best[j] = b;
    }
    best.into_iter().fold(0.0, f64::max).powf(1.0 / p)
}

/// (Σ_n ⟨n⟩^{2s} ‖e^{it|n|²}û(n,t)‖²_{V²})^{1/2}, with a terminal zero node.
pub fn ys_norm(u: &Trajectory, s: f64) -> f64 {
    let len = u.fields[0].len();
    let proto = &u.fields[0];
    let terms: Vec<f64> = (0..len)
        .into_par_iter()
        .map(|i| {
            let n = proto.freq_at(i);
            let w = n.norm2() as f64;
            let mut series: Vec<Complex64> = u
                .times
                .iter()
                .zip(&u.fields)
                .map(|(&t, f)| f.coefficients()[i] * Complex64::from_polar(1.0, t * w))
                .collect();
            if series.iter().all(|c| c.norm_sqr() == 0.0) {
                return 0.0;
            }
            series.push(Complex64::new(0.0, 0.0));
            (1.0 + w).powf(s) * vp_norm(&series, 2.0).powi(2)
        })
        .collect();
    terms.iter().sum::<f64>().sqrt()
}

/// ys_norm(S(t)φ, s) ≤ ‖φ‖_{Hˢ}(1 + tol) on the given times.
pub fn xs_linear_bound_check(phi: &FourierField, s: f64, times: &[f64], tol: f64) -> Result<bool> {
    if s < 0.0 {
        return Err(invalid("s must be nonnegative"));
    }
    let traj = Trajectory::linear(phi, times)?;
    Ok(ys_norm(&traj, s) <= hs_norm(phi, s) * (1.0 + tol))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub nodes: usize,
    pub t0: f64,
    pub t1: f64,
    pub n_max: usize,
}

/// One norm evaluation as persisted in reports.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormRow {
    pub norm: String,
    pub index: f64,
    pub value: f64,
    pub grid: GridSpec,
}

/// Standard norm rows for a trajectory: sup Hˢ, Yˢ and space-time L^p.
pub fn norm_rows(u: &Trajectory, s: f64, p: f64) -> Result<Vec<NormRow>> {
    let grid = GridSpec { nodes: u.len(), t0: u.times[0], t1: *u.times.last().unwrap(), n_max: u.n_max() };
    Ok(vec![
        NormRow { norm: "sup_hs".into(), index: s, value: sup_hs(u, s), grid: grid.clone() },
        NormRow { norm: "ys".into(), index: s, value: ys_norm(u, s), grid: grid.clone() },
        NormRow { norm: "lp".into(), index: p, value: lp_spacetime_norm(u, p)?, grid },
    ])
}
