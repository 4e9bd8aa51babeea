//! Uniform physical grids on 𝕋³ and the 3D FFT between grid values and
//! Fourier coefficients.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::field::FourierField;
use crate::lattice::Freq;

/// Smallest integer ≥ n whose prime factors are all in {2, 3, 5, 7}.
pub fn good_size(n: usize) -> usize {
    let mut m = n.max(1);
    loop {
        let mut k = m;
        for p in [2, 3, 5, 7] {
            while k % p == 0 {
                k /= p;
            }
        }
        if k == 1 {
            return m;
        }
        m += 1;
    }
}

/// An M×M×M grid with x_j = 2πj/M, stored row-major (x slowest).
pub struct Grid3 {
    m: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl Grid3 {
    pub fn new(m: usize) -> Self {
        let mut planner = FftPlanner::new();
        Grid3 { m, fwd: planner.plan_fft_forward(m), inv: planner.plan_fft_inverse(m) }
    }

    /// Grid resolving products of `degree` fields of bandwidth n_max without
    /// aliasing: M ≥ 2·degree·n_max + 1.
    pub fn for_product(n_max: usize, degree: usize) -> Self {
        Self::new(good_size(2 * degree * n_max + 1))
    }

    pub fn side(&self) -> usize {
        self.m
    }

    pub fn points(&self) -> usize {
        self.m * self.m * self.m
    }

    fn wrap(&self, c: i32) -> usize {
        c.rem_euclid(self.m as i32) as usize
    }

    /// Grid values u(x_j) = Σ a_n e^{in·x_j}.
    pub fn synthesize(&self, field: &FourierField) -> Vec<Complex64> {
        assert!(field.side() <= self.m, "grid too coarse for field");
        let mut buf = vec![Complex64::new(0.0, 0.0); self.points()];
        for (n, c) in field.iter() {
            let [x, y, z] = n.0;
            buf[(self.wrap(x) * self.m + self.wrap(y)) * self.m + self.wrap(z)] = c;
        }
        self.transform(&mut buf, false);
        buf
    }

    /// Coefficients a_n = mean_j u(x_j) e^{−in·x_j}, restricted to |n_i| ≤ n_out.
    pub fn analyze(&self, values: &[Complex64], n_out: usize) -> FourierField {
        assert!(2 * n_out < self.m, "output cube does not fit the grid");
        let mut buf = values.to_vec();
        self.transform(&mut buf, true);
        let scale = 1.0 / self.points() as f64;
        let mut out = FourierField::zeros(n_out);
        for i in 0..out.len() {
            let n: Freq = out.freq_at(i);
            let [x, y, z] = n.0;
            out.coefficients_mut()[i] = buf[(self.wrap(x) * self.m + self.wrap(y)) * self.m + self.wrap(z)] * scale;
        }
        out
    }

    /// Mean of f(u(x_j)) over the grid.
    pub fn mean(&self, values: &[Complex64], f: impl Fn(Complex64) -> f64) -> f64 {
        values.iter().map(|&v| f(v)).sum::<f64>() / values.len() as f64
    }

    /// Unnormalized 3D transform in place; forward uses e^{−2πi jk/M}.
    pub fn transform(&self, buf: &mut [Complex64], forward: bool) {
        let m = self.m;
        assert_eq!(buf.len(), m * m * m);
        let plan = if forward { &self.fwd } else { &self.inv };
        let mut scratch = vec![Complex64::new(0.0, 0.0); plan.get_inplace_scratch_len()];
        // z: contiguous rows
        plan.process_with_scratch(buf, &mut scratch);
        // y: transpose each x-slab
        let mut tmp = vec![Complex64::new(0.0, 0.0); m * m];
        for slab in buf.chunks_mut(m * m) {
            for y in 0..m {
                for z in 0..m {
                    tmp[z * m + y] = slab[y * m + z];
                }
            }
            plan.process_with_scratch(&mut tmp, &mut scratch);
            for y in 0..m {
                for z in 0..m {
                    slab[y * m + z] = tmp[z * m + y];
                }
            }
        }
        // x: gather the (x, z) plane for each y
        for y in 0..m {
            for x in 0..m {
                for z in 0..m {
                    tmp[z * m + x] = buf[(x * m + y) * m + z];
                }
            }
            plan.process_with_scratch(&mut tmp, &mut scratch);
            for x in 0..m {
                for z in 0..m {
                    buf[(x * m + y) * m + z] = tmp[z * m + x];
                }
            }
        }
    }
}
