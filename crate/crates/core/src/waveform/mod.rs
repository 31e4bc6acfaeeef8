//! Random polyphase waveforms and their delay-Doppler ambiguity functions.
//!
//! Waveform `n` is piecewise constant over `BT` chips of length `1/B`:
//! `s̃_n(t) = (1/√T) Σ_ℓ c_{n,ℓ} 1_[0,1/B)(t − ℓ/B)` with unit-modulus
//! chips. The ambiguity function
//!
//! ```text
//!   χ_{n,n'}(Δτ, Δω) = ∫ s̃_n(t) s̃_{n'}*(t − Δτ) exp(−jΔω t) dt
//! ```
//!
//! is evaluated in closed form chip by chip, so no quadrature is involved.

mod czt;
pub mod sim;
pub mod verify;

use nalgebra::Complex;
use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::real::{cis, sinc, Real};
use crate::rng::{derive_rng, TAG_WAVEFORM};

pub use sim::{detect, matched_filter_sim, FilterGrid, FilterOutputs, SimOptions};
pub use verify::{verify_theorem1, AmbiguityReport, PairSelection, VerifyOptions};

#[derive(Debug, Clone, PartialEq)]
pub struct PolyphaseWaveformSet<T: Real> {
    /// `N × BT` unit-modulus chip values.
    pub chips: CMatrix<T>,
    pub bandwidth: T,
    pub duration: T,
    pub seed: u64,
}

/// Checks that `B·T` is a positive integer (relative tolerance 1e-9) and
/// returns it.
pub fn time_bandwidth<T: Real>(bandwidth: T, duration: T) -> Result<usize> {
    let bt = (bandwidth * duration).as_f64();
    let rounded = bt.round();
    if !bt.is_finite() || rounded < 1.0 || (bt - rounded).abs() > 1e-9 * rounded {
        return Err(Error::TimeBandwidth(bt));
    }
    Ok(rounded as usize)
}

/// Draws `n` waveforms with i.i.d. chip phases uniform on `[0, 2π)`.
pub fn generate<T: Real>(n: usize, bandwidth: T, duration: T, seed: u64) -> Result<PolyphaseWaveformSet<T>> {
    if n == 0 {
        return Err(Error::InvalidParameter("need at least one waveform".into()));
    }
    if !(bandwidth > T::zero()) || !(duration > T::zero()) {
        return Err(Error::InvalidParameter("bandwidth and duration must be positive".into()));
    }
    let bt = time_bandwidth(bandwidth, duration)?;
    let mut rng = derive_rng(seed, &[TAG_WAVEFORM]);
    let two_pi = std::f64::consts::TAU;
    let mut chips = CMatrix::zeros(n, bt);
    for i in 0..n {
        for l in 0..bt {
            let phase: f64 = rng.random::<f64>() * two_pi;
            chips[(i, l)] = cis(T::lit(phase));
        }
    }
    Ok(PolyphaseWaveformSet {
        chips,
        bandwidth,
        duration,
        seed,
    })
}

impl<T: Real> PolyphaseWaveformSet<T> {
    pub fn n_waveforms(&self) -> usize {
        self.chips.nrows()
    }

    pub fn n_chips(&self) -> usize {
        self.chips.ncols()
    }

    /// `s̃_n(t)`; zero outside `[0, T)`.
    pub fn sample(&self, n: usize, t: T) -> Complex<T> {
        if t < T::zero() || t >= self.duration {
            return Complex::new(T::zero(), T::zero());
        }
        let l = (t * self.bandwidth).floor().to_usize().unwrap_or(0).min(self.n_chips() - 1);
        self.chips[(n, l)].unscale(self.duration.sqrt())
    }

    fn check_index(&self, n: usize) -> Result<()> {
        if n >= self.n_waveforms() {
            return Err(Error::TargetIndex {
                index: n,
                n_targets: self.n_waveforms(),
            });
        }
        Ok(())
    }

    /// Exact `χ_{n,n'}(Δτ, Δω)`.
    pub fn ambiguity(&self, n: usize, nprime: usize, delta_tau: T, delta_omega: T) -> Result<Complex<T>> {
        self.check_index(n)?;
        self.check_index(nprime)?;
        Ok(self.ambiguity_unchecked(n, nprime, delta_tau, delta_omega))
    }

    fn ambiguity_unchecked(&self, n: usize, nprime: usize, dtau: T, domega: T) -> Complex<T> {
        if dtau < T::zero() {
            let swapped = self.ambiguity_unchecked(nprime, n, -dtau, -domega);
            return cis(-domega * dtau) * swapped.conj();
        }
        let bt = self.n_chips();
        let b = self.bandwidth;
        let x = dtau * b;
        if x >= T::from_count(bt) {
            return Complex::new(T::zero(), T::zero());
        }
        let big_l = x.floor().to_usize().unwrap_or(0);
        let eps = x - T::from_count(big_l);
        let zero = Complex::new(T::zero(), T::zero());
        let (mut s1, mut s2) = (zero, zero);
        for l in big_l..bt {
            let rot = cis(-domega * T::from_count(l) / b);
            let cn = self.chips[(n, l)] * rot;
            s1 += cn * self.chips[(nprime, l - big_l)].conj();
            if l > big_l {
                s2 += cn * self.chips[(nprime, l - big_l - 1)].conj();
            }
        }
        let (a, bb) = chip_weights(eps, domega, b);
        (a * s1 + bb * s2).unscale(self.duration)
    }

    /// Full `N × N` matrix `χ(Δτ, Δω)`.
    pub fn ambiguity_matrix(&self, delta_tau: T, delta_omega: T) -> CMatrix<T> {
        let n = self.n_waveforms();
        CMatrix::from_fn(n, n, |i, j| self.ambiguity_unchecked(i, j, delta_tau, delta_omega))
    }
}

/// Chip-integral weights of the two overlapping chip fractions at
/// fractional delay `eps` (in chips), with the `exp(−jΔω ℓ/B)` factor
/// taken out.
pub(crate) fn chip_weights<T: Real>(eps: T, domega: T, b: T) -> (Complex<T>, Complex<T>) {
    let half = T::lit(0.5);
    let ha = (T::one() - eps) / b;
    let hb = eps / b;
    let a = cis(-domega * (T::one() + eps) * half / b).scale(ha * sinc(domega * ha * half));
    let bb = cis(-domega * eps * half / b).scale(hb * sinc(domega * hb * half));
    (a, bb)
}

/// Sufficient condition for the existence of waveforms with sidelobes
/// below `delta`: `2⁻⁸δ²BT − 2 ln(BT) > ln(2⁹N²/δ³)`.
pub fn condbt_check<T: Real>(delta: T, bandwidth: T, duration: T, n: usize) -> bool {
    let d = delta.as_f64();
    let bt = (bandwidth * duration).as_f64();
    let nn = n as f64;
    d * d * bt / 256.0 - 2.0 * bt.ln() > (512.0 * nn * nn / (d * d * d)).ln()
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::ComplexField;

    /// Composite Simpson quadrature of the defining integral, split at every
    /// chip edge of both signals.
    pub(crate) fn quadrature(set: &PolyphaseWaveformSet<f64>, n: usize, np: usize, dtau: f64, domega: f64) -> Complex<f64> {
        let t = set.duration;
        let b = set.bandwidth;
        let lo = dtau.max(0.0);
        let hi = t + dtau.min(0.0);
        if hi <= lo {
            return Complex::new(0.0, 0.0);
        }
        let mut cuts: Vec<f64> = vec![lo, hi];
        for l in 0..=set.n_chips() {
            for c in [l as f64 / b, l as f64 / b + dtau] {
                if c > lo && c < hi {
                    cuts.push(c);
                }
            }
        }
        cuts.sort_by(|x, y| x.partial_cmp(y).unwrap());
        let h_max = 1.0 / b / 1000.0;
        let mut total = Complex::new(0.0, 0.0);
        for w in cuts.windows(2) {
            let (x0, x1) = (w[0], w[1]);
            if x1 - x0 <= 0.0 {
                continue;
            }
            let mid = 0.5 * (x0 + x1);
            let value = set.sample(n, mid) * set.sample(np, mid - dtau).conj();
            let steps = (((x1 - x0) / h_max).ceil() as usize).max(1) * 2;
            let h = (x1 - x0) / steps as f64;
            let mut acc = Complex::new(0.0, 0.0);
            for i in 0..=steps {
                let coef = if i == 0 || i == steps { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
                acc += cis(-domega * (x0 + i as f64 * h)) * coef;
            }
            total += value * acc * (h / 3.0);
        }
        total
    }

    #[test]
    fn chips_are_unit_modulus_and_reproducible() {
        let a = generate::<f64>(2, 100.0, 1.0, 7).unwrap();
        let b = generate::<f64>(2, 100.0, 1.0, 7).unwrap();
        assert_eq!(a, b);
        assert!(a.chips.iter().all(|z| (z.modulus() - 1.0).abs() < 1e-12));
        let c = generate::<f64>(2, 100.0, 1.0, 8).unwrap();
        assert_ne!(a.chips, c.chips);
    }

    #[test]
    fn non_integer_time_bandwidth_is_rejected() {
        assert!(matches!(generate::<f64>(1, 100.5, 1.0, 0), Err(Error::TimeBandwidth(_))));
        assert!(generate::<f64>(1, 1e3, 0.25, 0).is_ok());
    }

    #[test]
    fn auto_ambiguity_at_origin_is_one() {
        let s = generate::<f64>(3, 1e3, 1.0, 1).unwrap();
        for n in 0..3 {
            let v = s.ambiguity(n, n, 0.0, 0.0).unwrap();
            assert!((v - Complex::new(1.0, 0.0)).modulus() < 1e-12);
        }
    }

    #[test]
    fn ambiguity_vanishes_beyond_support() {
        let s = generate::<f64>(2, 50.0, 1.0, 2).unwrap();
        assert_eq!(s.ambiguity(0, 1, 1.0, 3.0).unwrap(), Complex::new(0.0, 0.0));
        assert_eq!(s.ambiguity(0, 0, -1.5, 0.0).unwrap(), Complex::new(0.0, 0.0));
    }

    #[test]
    fn closed_form_matches_quadrature() {
        let s = generate::<f64>(2, 64.0, 1.0, 3).unwrap();
        let pts = [(0.0123, 5.0), (-0.3071, -40.0), (0.5, 0.0), (0.0, 150.0), (-0.75, 199.0)];
        for &(dt, dw) in &pts {
            for (n, np) in [(0, 0), (0, 1), (1, 0)] {
                let exact = s.ambiguity(n, np, dt, dw).unwrap();
                let quad = quadrature(&s, n, np, dt, dw);
                assert!((exact - quad).modulus() < 1e-9, "{dt} {dw}: {exact} vs {quad}");
            }
        }
    }

    #[test]
    fn energy_is_one() {
        let s = generate::<f64>(1, 32.0, 2.0, 4).unwrap();
        let energy: f64 = (0..s.n_chips()).map(|l| s.sample(0, (l as f64 + 0.5) / 32.0).norm_sqr() / 32.0).sum();
        assert!((energy - 1.0).abs() < 1e-12);
    }

    #[test]
    fn condbt_examples() {
        assert!(condbt_check(10f64.powf(-2.3), 1e9, 1.0, 16));
        assert!(!condbt_check(10f64.powf(-2.4), 1e9, 1.0, 16));
        assert!(condbt_check(0.1, 1e7, 1.0, 1));
    }
}
