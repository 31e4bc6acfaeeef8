//! Chirp-z transform on an arithmetic frequency grid via Bluestein's
//! algorithm:
//!
//! `X_m = Σ_{ℓ<n_in} x_ℓ exp(−j(ν₀ + mΔν)ℓ)`, `m = 0..n_out`.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

pub(crate) struct Czt {
    n_in: usize,
    n_out: usize,
    size: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    pre: Vec<Complex64>,
    post: Vec<Complex64>,
    kernel: Vec<Complex64>,
}

pub(crate) struct CztScratch {
    buf: Vec<Complex64>,
    scratch: Vec<Complex64>,
}

fn cis(phase: f64) -> Complex64 {
    Complex64::from_polar(1.0, phase)
}

impl Czt {
    pub(crate) fn new(n_in: usize, n_out: usize, nu0: f64, dnu: f64) -> Self {
        let size = (n_in + n_out - 1).next_power_of_two();
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(size);
        let inv = planner.plan_fft_inverse(size);
        let half = 0.5 * dnu;
        let pre = (0..n_in)
            .map(|l| {
                let lf = l as f64;
                cis(-nu0 * lf - half * lf * lf)
            })
            .collect();
        let post = (0..n_out)
            .map(|m| {
                let mf = m as f64;
                cis(-half * mf * mf) / size as f64
            })
            .collect();
        let mut kernel = vec![Complex64::new(0.0, 0.0); size];
        for (d, slot) in kernel.iter_mut().enumerate().take(n_out) {
            let df = d as f64;
            *slot = cis(half * df * df);
        }
        for d in 1..n_in {
            let df = d as f64;
            kernel[size - d] = cis(half * df * df);
        }
        fwd.process(&mut kernel);
        Self {
            n_in,
            n_out,
            size,
            fwd,
            inv,
            pre,
            post,
            kernel,
        }
    }

    pub(crate) fn scratch(&self) -> CztScratch {
        let len = self
            .fwd
            .get_inplace_scratch_len()
            .max(self.inv.get_inplace_scratch_len());
        CztScratch {
            buf: vec![Complex64::new(0.0, 0.0); self.size],
            scratch: vec![Complex64::new(0.0, 0.0); len],
        }
    }

    /// Transforms `x` (at most `n_in` samples, zero-extended) into `out`.
    pub(crate) fn run(&self, x: &[Complex64], out: &mut [Complex64], s: &mut CztScratch) {
        debug_assert!(x.len() <= self.n_in && out.len() == self.n_out);
        s.buf.iter_mut().for_each(|z| *z = Complex64::new(0.0, 0.0));
        for (slot, (xi, p)) in s.buf.iter_mut().zip(x.iter().zip(&self.pre)) {
            *slot = xi * p;
        }
        self.fwd.process_with_scratch(&mut s.buf, &mut s.scratch);
        for (z, k) in s.buf.iter_mut().zip(&self.kernel) {
            *z *= k;
        }
        self.inv.process_with_scratch(&mut s.buf, &mut s.scratch);
        for (o, (z, p)) in out.iter_mut().zip(s.buf.iter().zip(&self.post)) {
            *o = z * p;
        }
    }
}
