//! The gauge transform between the quintic equation and its gauged form
//! i v_t + Δv = λ(|v|⁴v − 3v∫|v|⁴), and the gauged trajectory metric.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::FourierField;
use crate::lattice::Freq;
use crate::nonlinearity::beta;
use crate::solver::{residual, Equation};
use crate::spaces::{sup_hs, ys_norm, Trajectory};

/// Sign returned when the plane-wave check is degenerate (A = 0). Direct
/// differentiation gives u = e^{−iλ∫β}v.
pub const DEFAULT_GAUGE_SIGN: i32 = -1;

pub const QUADRATURE_RULE: &str = "trapezoid";

/// ∫₀ᵗβ_v on the trajectory grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaugePhase {
    pub lambda: f64,
    pub dt: f64,
    pub beta_samples: Vec<f64>,
    pub cumulative: Vec<f64>,
}

impl GaugePhase {
    pub fn new(v: &Trajectory, lambda: f64) -> Self {
        let beta_samples: Vec<f64> = v.fields().iter().map(beta).collect();
        let dt = v.dt();
        let mut cumulative = vec![0.0; beta_samples.len()];
        for k in 1..beta_samples.len() {
            cumulative[k] = cumulative[k - 1] + 0.5 * dt * (beta_samples[k - 1] + beta_samples[k]);
        }
        GaugePhase { lambda, dt, beta_samples, cumulative }
    }

    /// e^{sign·iλ∫₀^{t_k}β}.
    pub fn factor(&self, k: usize, sign: i32) -> Complex64 {
        Complex64::from_polar(1.0, sign as f64 * self.lambda * self.cumulative[k])
    }

    /// Richardson estimate of the trapezoid error in λ∫β: compares step dt
    /// with step 2dt at the even nodes.
    pub fn quadrature_error(&self) -> f64 {
        let b = &self.beta_samples;
        if b.len() < 3 {
            return 0.0;
        }
        let dt = self.dt;
        let mut coarse = 0.0;
        let mut worst: f64 = 0.0;
        let mut k = 2;
        while k < b.len() {
            coarse += dt * (b[k - 2] + b[k]);
            worst = worst.max((self.cumulative[k] - coarse).abs() / 3.0);
            k += 2;
        }
        self.lambda.abs() * worst
    }
}

/// u(t) = e^{sign·iλ∫₀ᵗβ_v} v(t).
pub fn gauge_transform(v: &Trajectory, lambda: f64, sign: i32) -> Trajectory {
    let phase = GaugePhase::new(v, lambda);
    v.map_fields(|k, f| f.scale(phase.factor(k, sign)))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaugeSignCheck {
    pub sign: i32,
    pub lambda: f64,
    pub amplitude: f64,
    pub residual_plus: f64,
    pub residual_minus: f64,
    pub tolerance: f64,
    pub degenerate: bool,
    pub quadrature: String,
}

/// Transform the exact gauged plane wave with both signs and keep the one
/// whose image solves the original equation.
pub fn validate_gauge_sign(amplitude: f64, lambda: f64) -> Result<GaugeSignCheck> {
    let n0 = Freq::new(1, 0, 0);
    let dt = 1e-3;
    let times = Trajectory::uniform_times(0.0, 0.2, 201);
    let a4 = amplitude.powi(4);
    let omega = n0.norm2() as f64 - 2.0 * lambda * a4;
    let fields = times
        .iter()
        .map(|&t| FourierField::plane_wave(1, n0, Complex64::from_polar(amplitude, -omega * t)))
        .collect();
    let v = Trajectory::new(times, fields)?;
    let res = |sign| residual(&gauge_transform(&v, lambda, sign), Equation::Original, lambda);
    let (rp, rm) = (res(1)?, res(-1)?);
    let w_main = n0.norm2() as f64 + lambda.abs() * a4;
    let tolerance = 10.0 * dt * dt * (amplitude * w_main.powi(3)).max(1.0);
    let degenerate = amplitude == 0.0;
    let sign = if degenerate {
        DEFAULT_GAUGE_SIGN
    } else if rm <= tolerance && rm < rp {
        -1
    } else if rp <= tolerance && rp < rm {
        1
    } else {
        return Err(Error::Degenerate(format!(
            "neither gauge sign passes the plane-wave check (residuals {rp:.3e}, {rm:.3e})"
        )));
    };
    Ok(GaugeSignCheck {
        sign,
        lambda,
        amplitude,
        residual_plus: rp,
        residual_minus: rm,
        tolerance,
        degenerate,
        quadrature: QUADRATURE_RULE.into(),
    })
}

/// Trajectory norm underlying the gauged metric.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaseNorm {
    SupHs(f64),
    Ys(f64),
}

impl BaseNorm {
    pub fn eval(&self, u: &Trajectory) -> f64 {
        match *self {
            BaseNorm::SupHs(s) => sup_hs(u, s),
            BaseNorm::Ys(s) => ys_norm(u, s),
        }
    }
}

/// d(u₁, u₂) = ‖G⁻¹u₁ − G⁻¹u₂‖ where G is the gauge transform with `sign`,
/// i.e. both trajectories are pulled back to the gauged equation first.
pub fn gauge_metric(u1: &Trajectory, u2: &Trajectory, lambda: f64, sign: i32, base: BaseNorm) -> Result<f64> {
    if !u1.same_grid(u2) {
        return Err(Error::GridMismatch("metric needs trajectories on the same grid".into()));
    }
    let diff = gauge_transform(u1, lambda, -sign).sub(&gauge_transform(u2, lambda, -sign))?;
    Ok(base.eval(&diff))
}
