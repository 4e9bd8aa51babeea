//! Spectral time stepping for i u_t + Δu = λ|u|⁴u and its gauged form, the
//! Duhamel operator, PDE residuals and the smoothing experiment.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::fft::{good_size, Grid3};
use crate::field::FourierField;
use crate::nonlinearity::{gauged_nonlinearity, quintic_fourier_fft};
use crate::random_data::randomized_datum;
use crate::spaces::{hs_norm, trapezoid_weights, ys_norm, Trajectory};

type C = Complex64;

/// S(t): a_n ↦ e^{−it|n|²}a_n.
pub fn linear_propagator(phi: &FourierField, t: f64) -> FourierField {
    phi.map(|n, c| c * C::from_polar(1.0, -t * n.norm2() as f64))
}

/// I(f)(t_k) = ∫₀^{t_k} S(t_k − t′) f(t′) dt′ by the trapezoid rule applied to
/// S(−t′)f(t′).
pub fn duhamel(f: &Trajectory) -> Trajectory {
    let times = f.times();
    let dt = f.dt();
    let pulled: Vec<FourierField> = times.iter().zip(f.fields()).map(|(&t, g)| linear_propagator(g, -t)).collect();
    let mut acc = FourierField::zeros(f.n_max());
    let mut out = Vec::with_capacity(times.len());
    out.push(acc.clone());
    for k in 1..times.len() {
        acc = acc.add(&pulled[k - 1].add(&pulled[k]).scale(C::new(0.5 * dt, 0.0)));
        out.push(linear_propagator(&acc, times[k]));
    }
    Trajectory::new(times.to_vec(), out).expect("grid inherited from input")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Equation {
    /// i u_t + Δu = λ|u|⁴u
    Original,
    /// i v_t + Δv = λ(|v|⁴v − 3v∫|v|⁴)
    Gauged,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Integrator {
    StrangSplitting,
    ExponentialRk2,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveConfig {
    pub n_max: usize,
    pub dt: f64,
    pub t_final: f64,
    pub lambda: f64,
    pub equation: Equation,
    pub integrator: Integrator,
    /// Physical grid M ≥ 10N+1 (quintic products exact) when set, M ≥ 6N+1 otherwise.
    pub dealias: bool,
    /// Keep every k-th step in the returned trajectory.
    #[serde(default = "one")]
    pub record_every: usize,
    /// Largest physical grid (points) a run may allocate.
    #[serde(default = "default_grid_budget")]
    pub grid_budget: usize,
}

fn one() -> usize {
    1
}

fn default_grid_budget() -> usize {
    64_000_000
}

impl SolveConfig {
    pub fn new(n_max: usize, dt: f64, t_final: f64, lambda: f64, equation: Equation, integrator: Integrator) -> Self {
        SolveConfig {
            n_max,
            dt,
            t_final,
            lambda,
            equation,
            integrator,
            dealias: true,
            record_every: 1,
            grid_budget: default_grid_budget(),
        }
    }

    pub fn grid_side(&self) -> usize {
        let k = if self.dealias { 10 } else { 6 };
        good_size(k * self.n_max + 1)
    }

    fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.t_final > 0.0) {
            return Err(invalid("dt and T must be positive"));
        }
        if self.dt > self.t_final * (1.0 + 1e-12) {
            return Err(invalid("dt exceeds T"));
        }
        if self.lambda != 1.0 && self.lambda != -1.0 {
            return Err(invalid("lambda must be +1 or -1"));
        }
        if self.record_every == 0 {
            return Err(invalid("record_every must be positive"));
        }
        let pts = self.grid_side().pow(3);
        if pts > self.grid_budget {
            return Err(Error::BudgetExceeded {
                what: "physical grid points".into(),
                needed: pts as f64,
                budget: self.grid_budget as f64,
            });
        }
        Ok(())
    }
}

/// λ·max|u|⁴ (plus 3∫|u|⁴ in gauged mode): the rate of the nonlinear phase.
pub fn nonlinear_rate(u: &FourierField, equation: Equation) -> f64 {
    let grid = Grid3::new(good_size(4 * u.n_max() + 1));
    let vals = grid.synthesize(u);
    let max4 = vals.iter().map(|v| v.norm_sqr().powi(2)).fold(0.0, f64::max);
    match equation {
        Equation::Original => max4,
        Equation::Gauged => max4 + 3.0 * grid.mean(&vals, |v| v.norm_sqr().powi(2)),
    }
}

/// Largest dt the stability guard dt·rate ≤ 0.5 admits.
pub fn max_stable_dt(u: &FourierField, equation: Equation) -> f64 {
    let r = nonlinear_rate(u, equation);
    if r == 0.0 {
        f64::INFINITY
    } else {
        0.5 / r
    }
}

struct Stepper<'a> {
    cfg: &'a SolveConfig,
    grid: Grid3,
    dt: f64,
}

impl Stepper<'_> {
    /// Exact flow of u_t = −iλ(|u|⁴ − c)u over dt, pointwise on the grid.
    fn nonlinear_flow(&self, a: &FourierField) -> FourierField {
        let mut vals = self.grid.synthesize(a);
        let c = match self.cfg.equation {
            Equation::Original => 0.0,
            Equation::Gauged => 3.0 * self.grid.mean(&vals, |v| v.norm_sqr().powi(2)),
        };
        let l = self.cfg.lambda * self.dt;
        for v in vals.iter_mut() {
            let q = v.norm_sqr().powi(2);
            *v *= C::from_polar(1.0, -l * (q - c));
        }
        self.grid.analyze(&vals, a.n_max())
    }

    /// −iλ P_N[|u|⁴u − c·u] on the cube.
    fn rhs(&self, a: &FourierField) -> FourierField {
        let vals = self.grid.synthesize(a);
        let c = match self.cfg.equation {
            Equation::Original => 0.0,
            Equation::Gauged => 3.0 * self.grid.mean(&vals, |v| v.norm_sqr().powi(2)),
        };
        let prod: Vec<C> = vals.iter().map(|&v| v * (v.norm_sqr().powi(2) - c)).collect();
        self.grid.analyze(&prod, a.n_max()).scale(C::new(0.0, -self.cfg.lambda))
    }

    fn strang(&self, a: &FourierField) -> FourierField {
        let half = linear_propagator(a, 0.5 * self.dt);
        linear_propagator(&self.nonlinear_flow(&half), 0.5 * self.dt)
    }

    /// Cox–Matthews ETD2RK with L = −i|n|².
    fn erk2(&self, a: &FourierField) -> FourierField {
        let h = self.dt;
        let phi = |n2: f64| {
            let z = C::new(0.0, -h * n2);
            if z.norm() < 1e-4 {
                (C::new(1.0, 0.0) + z / 2.0 + z * z / 6.0, C::new(0.5, 0.0) + z / 6.0 + z * z / 24.0)
            } else {
                let e = z.exp();
                ((e - 1.0) / z, (e - 1.0 - z) / (z * z))
            }
        };
        let na = self.rhs(a);
        let stage = FourierField::from_fn(a.n_max(), |n| {
            let (p1, _) = phi(n.norm2() as f64);
            C::from_polar(1.0, -h * n.norm2() as f64) * a.get(n) + h * p1 * na.get(n)
        });
        let nc = self.rhs(&stage);
        FourierField::from_fn(a.n_max(), |n| {
            let (_, p2) = phi(n.norm2() as f64);
            stage.get(n) + h * p2 * (nc.get(n) - na.get(n))
        })
    }
}

/// Integrate from u0 (resized to the config cube) to T.
pub fn integrate(u0: &FourierField, cfg: &SolveConfig) -> Result<Trajectory> {
    cfg.validate()?;
    let steps = (cfg.t_final / cfg.dt - 1e-9).ceil().max(1.0) as usize;
    let dt = cfg.t_final / steps as f64;
    let a0 = u0.resized(cfg.n_max);
    if dt * nonlinear_rate(&a0, cfg.equation) > 0.5 {
        return Err(invalid(format!(
            "stability guard: dt = {dt:.3e} exceeds 0.5/rate = {:.3e}",
            max_stable_dt(&a0, cfg.equation)
        )));
    }
    let stepper = Stepper { cfg, grid: Grid3::new(cfg.grid_side()), dt };
    let h0 = [hs_norm(&a0, 0.0), hs_norm(&a0, 1.0)];
    let mut a = a0.clone();
    let mut times = vec![0.0];
    let mut fields = vec![a0];
    for k in 1..=steps {
        a = match cfg.integrator {
            Integrator::StrangSplitting => stepper.strang(&a),
            Integrator::ExponentialRk2 => stepper.erk2(&a),
        };
        let t = k as f64 * dt;
        for (s, h) in [0.0, 1.0].into_iter().zip(h0) {
            let now = hs_norm(&a, s);
            if !now.is_finite() || (h > 0.0 && now > 10.0 * h) {
                return Err(Error::Instability { time: t, detail: format!("H^{s} norm grew from {h:.3e} to {now:.3e}") });
            }
        }
        if k % cfg.record_every == 0 || k == steps {
            times.push(t);
            fields.push(a.clone());
        }
    }
    if times.len() > 2 && steps % cfg.record_every != 0 {
        // the final step breaks uniform spacing; drop it
        times.pop();
        fields.pop();
    }
    Trajectory::new(times, fields)
}

/// max over interior nodes of ‖i∂_t u + Δu − RHS(u)‖_{L²}, centred differences,
/// RHS projected onto the trajectory's cube.
pub fn residual(u: &Trajectory, equation: Equation, lambda: f64) -> Result<f64> {
    if u.len() < 3 {
        return Err(invalid("residual needs at least three nodes"));
    }
    let dt = u.dt();
    let f = u.fields();
    let mut worst: f64 = 0.0;
    for k in 1..u.len() - 1 {
        let rhs = match equation {
            Equation::Original => quintic_fourier_fft(&f[k]).scale(C::new(lambda, 0.0)),
            Equation::Gauged => gauged_nonlinearity(&f[k], lambda),
        };
        let r = FourierField::from_fn(u.n_max(), |n| {
            C::new(0.0, 1.0) * (f[k + 1].get(n) - f[k - 1].get(n)) / (2.0 * dt)
                - n.norm2() as f64 * f[k].get(n)
                - rhs.get(n)
        });
        worst = worst.max(r.l2_norm());
    }
    Ok(worst)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmoothingRow {
    pub n_max: usize,
    pub phi_hs: f64,
    pub sup_w_hs: f64,
    pub ratio: f64,
    /// Yˢ norm of w on the time grid.
    pub ys_w: f64,
    pub steps: usize,
    pub dt: f64,
    pub grid_side: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmoothingReport {
    pub alpha: f64,
    pub s: f64,
    pub seed: u64,
    pub delta: f64,
    pub lambda: f64,
    pub rows: Vec<SmoothingRow>,
    /// ratio strictly decreasing along the N list
    pub decreasing: bool,
}

/// For each N: solve the gauged equation from φʷ_{≤N}, set w = v − S(t)φʷ_{≤N}
/// and compare sup_{t≤δ}‖w‖_{Hˢ} with ‖φʷ_{≤N}‖_{Hˢ}. The step is the smaller
/// of cfg.dt and what the stability guard admits.
pub fn smoothing_experiment(
    seed: u64,
    alpha: f64,
    s: f64,
    n_list: &[usize],
    delta: f64,
    cfg: &SolveConfig,
) -> Result<SmoothingReport> {
    if !(alpha > 0.0 && alpha < 1.0 / 12.0) {
        return Err(invalid(format!("alpha = {alpha} outside (0, 1/12)")));
    }
    if !(s > 1.0 + 4.0 * alpha && s < 1.5 - 2.0 * alpha) {
        return Err(invalid(format!("s = {s} outside ({}, {})", 1.0 + 4.0 * alpha, 1.5 - 2.0 * alpha)));
    }
    if !(delta > 0.0) || n_list.is_empty() {
        return Err(invalid("need delta > 0 and a nonempty N list"));
    }
    let mut rows = Vec::new();
    for &n in n_list {
        let phi = randomized_datum(seed, alpha, n)?.phi_omega;
        let dt_cap = 0.9 * max_stable_dt(&phi, Equation::Gauged);
        let steps = (delta / cfg.dt.min(dt_cap) - 1e-9).ceil().max(1.0) as usize;
        let run = SolveConfig {
            n_max: n,
            dt: delta / steps as f64,
            t_final: delta,
            equation: Equation::Gauged,
            record_every: 1,
            ..cfg.clone()
        };
        let v = integrate(&phi, &run)?;
        let w = v.map_fields(|k, f| f.sub(&linear_propagator(&phi, v.times()[k])));
        let sup_w_hs = w.fields().iter().map(|f| hs_norm(f, s)).fold(0.0, f64::max);
        let phi_hs = hs_norm(&phi, s);
        rows.push(SmoothingRow {
            n_max: n,
            phi_hs,
            sup_w_hs,
            ratio: sup_w_hs / phi_hs,
            ys_w: ys_norm(&w, s),
            steps,
            dt: run.dt,
            grid_side: run.grid_side(),
        });
    }
    let decreasing = rows.windows(2).all(|p| p[1].ratio < p[0].ratio);
    Ok(SmoothingReport { alpha, s, seed, delta, lambda: cfg.lambda, rows, decreasing })
}

/// ∫₀ᵀ ‖f(t)‖_{Hˢ} dt by the trapezoid rule.
pub fn time_integral_hs(f: &Trajectory, s: f64) -> f64 {
    trapezoid_weights(f.times()).iter().zip(f.fields()).map(|(w, g)| w * hs_norm(g, s)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::Freq;

    #[test]
    fn propagator_group_law() {
        let phi = FourierField::from_fn(2, |n| C::new(n.0[0] as f64, 1.0));
        assert_eq!(linear_propagator(&phi, 0.0), phi);
        let a = linear_propagator(&linear_propagator(&phi, 0.3), 0.45);
        let b = linear_propagator(&phi, 0.75);
        assert!(a.max_abs_diff(&b) < 1e-13);
        assert!((hs_norm(&b, 1.3) - hs_norm(&phi, 1.3)).abs() < 1e-12);
    }

    #[test]
    fn duhamel_of_free_wave() {
        let psi = FourierField::from_fn(1, |n| C::new(1.0, n.0[1] as f64));
        let times = Trajectory::uniform_times(0.0, 0.5, 6);
        let f = Trajectory::linear(&psi, &times).unwrap();
        let i = duhamel(&f);
        for (k, &t) in times.iter().enumerate() {
            let want = linear_propagator(&psi, t).scale(C::new(t, 0.0));
            assert!(i.fields()[k].max_abs_diff(&want) < 1e-13);
        }
    }

    #[test]
    fn zero_data_stays_zero() {
        let cfg = SolveConfig::new(2, 0.01, 0.05, 1.0, Equation::Original, Integrator::StrangSplitting);
        let u = integrate(&FourierField::zeros(2), &cfg).unwrap();
        assert!(u.fields().iter().all(|f| f.max_abs() == 0.0));
        assert_eq!(residual(&u, Equation::Original, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn strang_plane_wave_is_exact() {
        let a = 0.9;
        let n0 = Freq::new(1, 1, 0);
        let u0 = FourierField::plane_wave(2, n0, C::new(a, 0.0));
        for (eq, omega) in [(Equation::Original, 2.0 + a.powi(4)), (Equation::Gauged, 2.0 - 2.0 * a.powi(4))] {
            let cfg = SolveConfig::new(2, 0.01, 0.3, 1.0, eq, Integrator::StrangSplitting);
            let u = integrate(&u0, &cfg).unwrap();
            for (t, f) in u.times().iter().zip(u.fields()) {
                let want = C::from_polar(a, -omega * t);
                assert!((f.get(n0) - want).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn config_guards() {
        let mut cfg = SolveConfig::new(2, 0.5, 0.1, 1.0, Equation::Original, Integrator::StrangSplitting);
        assert!(integrate(&FourierField::zeros(2), &cfg).is_err());
        cfg.dt = 0.01;
        cfg.lambda = 2.0;
        assert!(integrate(&FourierField::zeros(2), &cfg).is_err());
        cfg.lambda = 1.0;
        // |u|⁴ = 16 so the guard needs dt ≤ 1/32
        let big = FourierField::plane_wave(2, Freq::ZERO, C::new(2.0, 0.0));
        cfg.dt = 0.05;
        assert!(integrate(&big, &cfg).is_err());
        cfg.grid_budget = 10;
        cfg.dt = 0.01;
        assert!(matches!(integrate(&big, &cfg), Err(Error::BudgetExceeded { .. })));
    }

    #[test]
    fn smoothing_window_enforced() {
        let cfg = SolveConfig::new(4, 1e-3, 0.01, 1.0, Equation::Gauged, Integrator::StrangSplitting);
        assert!(smoothing_experiment(1, 1.0 / 15.0, 1.0, &[4], 0.01, &cfg).is_err());
        assert!(smoothing_experiment(1, 0.2, 1.3, &[4], 0.01, &cfg).is_err());
    }
}
