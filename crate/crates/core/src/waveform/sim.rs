//! Matched-filter bank simulation and threshold detection.
//!
//! The filter steered at target `f` and tuned to `(τ, ω)` outputs
//!
//! ```text
//!   r = Σ_k h_k e^{−j(ω−ω_k)τ_k} b†(θ_f) b(θ_k) · a†(θ_k) W χ(τ−τ_k, ω−ω_k) W† a(θ_f) + z
//! ```
//!
//! with `R = W W†`. The ideal mode replaces `χ` by the identity inside one
//! resolution cell (`|Δτ| < 1/(2B)`, `|Δω| < 1/(2T)`) and by zero outside.

use nalgebra::Complex;
use rand_distr::{Distribution, Normal};

use super::PolyphaseWaveformSet;
use crate::assoc::Detection;
use crate::beamform::factor;
use crate::error::{Error, Result};
use crate::linalg::{CMatrix, CVector};
use crate::real::{cis, Real};
use crate::rng::{derive_rng, TAG_NOISE};
use crate::scene::Scene;

/// Delay-Doppler hypotheses evaluated by every filter.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterGrid<T> {
    pub taus: Vec<T>,
    pub omegas: Vec<T>,
}

impl<T: Real> FilterGrid<T> {
    pub fn new(taus: Vec<T>, omegas: Vec<T>) -> Result<Self> {
        if taus.is_empty() || omegas.is_empty() {
            return Err(Error::InvalidParameter("filter grid must be nonempty".into()));
        }
        Ok(Self { taus, omegas })
    }

    /// Regular lattice `tau0 + i·dtau`, `omega0 + j·domega`.
    pub fn lattice(tau0: T, dtau: T, n_tau: usize, omega0: T, domega: T, n_omega: usize) -> Result<Self> {
        Self::new(
            (0..n_tau).map(|i| tau0 + T::from_count(i) * dtau).collect(),
            (0..n_omega).map(|j| omega0 + T::from_count(j) * domega).collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.taus.len() * self.omegas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterOutputs<T: Real> {
    pub grid: FilterGrid<T>,
    pub n_filters: usize,
    values: Vec<Complex<T>>,
}

impl<T: Real> FilterOutputs<T> {
    fn index(&self, i_tau: usize, i_omega: usize, filter: usize) -> usize {
        (i_tau * self.grid.omegas.len() + i_omega) * self.n_filters + filter
    }

    pub fn value(&self, i_tau: usize, i_omega: usize, filter: usize) -> Complex<T> {
        self.values[self.index(i_tau, i_omega, filter)]
    }

    pub fn magnitude(&self, i_tau: usize, i_omega: usize, filter: usize) -> T {
        let z = self.value(i_tau, i_omega, filter);
        (z.re * z.re + z.im * z.im).sqrt()
    }

    /// `(i_tau, i_omega, filter, value)` in row-major order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, usize, Complex<T>)> + '_ {
        let n_omega = self.grid.omegas.len();
        let k = self.n_filters;
        self.values
            .iter()
            .enumerate()
            .map(move |(idx, z)| (idx / (n_omega * k), (idx / k) % n_omega, idx % k, *z))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimOptions<T> {
    /// Standard deviation of the real and of the imaginary noise part.
    pub noise_std: T,
    pub seed: u64,
    pub ideal: bool,
}

impl<T: Real> Default for SimOptions<T> {
    fn default() -> Self {
        Self {
            noise_std: T::zero(),
            seed: 0,
            ideal: true,
        }
    }
}

/// Simulates the matched-filter bank for targets at `truth` (one
/// `(τ_k, ω_k)` per target of `scene`).
pub fn matched_filter_sim<T: Real>(
    scene: &Scene<T>,
    r: &CMatrix<T>,
    waveforms: &PolyphaseWaveformSet<T>,
    truth: &[(T, T)],
    grid: &FilterGrid<T>,
    options: &SimOptions<T>,
) -> Result<FilterOutputs<T>> {
    let k_count = scene.n_targets();
    let n = scene.n_antennas();
    if truth.len() != k_count {
        return Err(Error::InvalidParameter(format!(
            "{} true parameter pairs for {k_count} targets",
            truth.len()
        )));
    }
    if r.nrows() != n || r.ncols() != n {
        return Err(Error::InvalidParameter("beamforming matrix size differs from the array".into()));
    }
    if !options.ideal && waveforms.n_waveforms() != n {
        return Err(Error::InvalidParameter(format!(
            "{} waveforms for {n} antennas",
            waveforms.n_waveforms()
        )));
    }
    let a = scene.steering_vectors();
    let h: Vec<Complex<T>> = scene.targets().iter().map(|t| t.rcs).collect();
    // receive gains equal transmit gains
    let rx: Vec<Vec<Complex<T>>> = (0..k_count)
        .map(|f| (0..k_count).map(|k| a[f].dotc(&a[k])).collect())
        .collect();
    let tx_ideal: Vec<Vec<Complex<T>>> = (0..k_count)
        .map(|f| (0..k_count).map(|k| a[k].dotc(&(r * &a[f]))).collect())
        .collect();
    let w = factor(r);
    let proj: Vec<CVector<T>> = a.iter().map(|ak| w.adjoint() * ak).collect();

    let half_tau = T::lit(0.5) / waveforms.bandwidth;
    let half_omega = T::lit(0.5) / waveforms.duration;
    let mut values = Vec::with_capacity(grid.len() * k_count);
    for &tau in &grid.taus {
        for &omega in &grid.omegas {
            let mut out = vec![Complex::new(T::zero(), T::zero()); k_count];
            for k in 0..k_count {
                let (tk, wk) = truth[k];
                let (dtau, domega) = (tau - tk, omega - wk);
                let phase = h[k] * cis(-domega * tk);
                if options.ideal {
                    if dtau.abs() < half_tau && domega.abs() < half_omega {
                        for (f, o) in out.iter_mut().enumerate() {
                            *o += phase * rx[f][k] * tx_ideal[f][k];
                        }
                    }
                } else if dtau.abs() < waveforms.duration {
                    let chi = waveforms.ambiguity_matrix(dtau, domega);
                    let left = chi.adjoint() * &proj[k];
                    for (f, o) in out.iter_mut().enumerate() {
                        *o += phase * rx[f][k] * left.dotc(&proj[f]);
                    }
                }
            }
            values.extend(out);
        }
    }
    if options.noise_std > T::zero() {
        let mut rng = derive_rng(options.seed, &[TAG_NOISE]);
        let normal = Normal::new(0.0, options.noise_std.as_f64())
            .map_err(|e| Error::InvalidParameter(e.to_string()))?;
        for z in &mut values {
            *z += Complex::new(T::lit(normal.sample(&mut rng)), T::lit(normal.sample(&mut rng)));
        }
    }
    Ok(FilterOutputs {
        grid: grid.clone(),
        n_filters: k_count,
        values,
    })
}

/// One detection per grid cell and filter whose magnitude is strictly above
/// `threshold`.
pub fn detect<T: Real>(outputs: &FilterOutputs<T>, threshold: T) -> Vec<Detection<T>> {
    outputs
        .iter()
        .filter_map(|(i, j, f, z)| {
            let magnitude = (z.re * z.re + z.im * z.im).sqrt();
            (magnitude > threshold).then(|| Detection {
                tau: outputs.grid.taus[i],
                omega: outputs.grid.omegas[j],
                filter_index: f,
                magnitude,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::beamform::{solve, BeamformOptions};
    use crate::graph::AmbiguityGraph;
    use crate::scene::{uniform_scene, PriorParams};
    use crate::waveform::generate;

    fn setup() -> (Scene<f64>, PolyphaseWaveformSet<f64>) {
        let s = uniform_scene(3, 3, &PriorParams::default()).unwrap();
        let wf = generate(3, 100.0, 1.0, 0).unwrap();
        (s, wf)
    }

    #[test]
    fn single_target_peak_is_gain_times_n() {
        let s = uniform_scene(4, 1, &PriorParams::default()).unwrap();
        let wf = generate(4, 100.0, 1.0, 0).unwrap();
        let r = CMatrix::<f64>::identity(4, 4).unscale(4.0);
        let grid = FilterGrid::new(vec![0.0], vec![0.0]).unwrap();
        let out = matched_filter_sim(&s, &r, &wf, &[(0.0, 0.0)], &grid, &SimOptions::default()).unwrap();
        let a = s.steering(0);
        let gain = a.dotc(&(&r * &a)).re;
        assert!((out.magnitude(0, 0, 0) - 4.0 * gain).abs() < 1e-12);
    }

    #[test]
    fn zero_forced_partner_is_dark() {
        let (s, wf) = setup();
        let res = solve(&s, &AmbiguityGraph::path(3), &BeamformOptions::default()).unwrap();
        let truth = [(0.0, 0.0), (0.05, 0.0), (0.1, 0.0)];
        let grid = FilterGrid::new(vec![0.05], vec![0.0]).unwrap();
        let out = matched_filter_sim(&s, &res.matrix.entries, &wf, &truth, &grid, &SimOptions::default()).unwrap();
        // filter 0 at target 1's cell: edge (0,1) is zero-forced
        assert!(out.magnitude(0, 0, 0) <= 1e-7);
        assert!(out.magnitude(0, 0, 1) > 0.1);
    }

    #[test]
    fn noise_only_is_rayleigh() {
        let (s, wf) = setup();
        let r = CMatrix::<f64>::identity(3, 3).unscale(3.0);
        let grid = FilterGrid::lattice(10.0, 0.01, 100, 0.0, 1.0, 50).unwrap();
        let opts = SimOptions {
            noise_std: 0.7,
            seed: 3,
            ideal: true,
        };
        let out = matched_filter_sim(&s, &r, &wf, &[(0.0, 0.0), (0.0, 0.0), (0.0, 0.0)], &grid, &opts).unwrap();
        let mags: Vec<f64> = out.iter().map(|(_, _, _, z)| z.norm()).collect();
        let n = mags.len() as f64;
        let mean = mags.iter().sum::<f64>() / n;
        let var = mags.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / (n - 1.0);
        let expected = 0.7 * (std::f64::consts::PI / 2.0).sqrt();
        assert!((mean - expected).abs() < 3.0 * (var / n).sqrt(), "{mean} vs {expected}");
    }

    #[test]
    fn detect_thresholds_strictly() {
        let s = uniform_scene(2, 1, &PriorParams::default()).unwrap();
        let wf = generate(2, 100.0, 1.0, 0).unwrap();
        let r = CMatrix::<f64>::identity(2, 2).unscale(2.0);
        let grid = FilterGrid::lattice(-0.02, 0.01, 5, -2.0, 1.0, 5).unwrap();
        let out = matched_filter_sim(&s, &r, &wf, &[(0.0, 0.0)], &grid, &SimOptions::default()).unwrap();
        assert!(detect(&out, f64::INFINITY).is_empty());
        let d = detect(&out, 0.0);
        assert_eq!(d.len(), 1);
        assert_eq!((d[0].tau, d[0].omega, d[0].filter_index), (0.0, 0.0, 0));
        assert!(detect(&out, d[0].magnitude).is_empty());
    }

    #[test]
    fn non_ideal_peak_is_close_to_ideal() {
        let (s, _) = setup();
        let wf = generate(3, 1000.0, 1.0, 9).unwrap();
        let r = CMatrix::<f64>::identity(3, 3).unscale(3.0);
        let truth = [(0.1, 0.0), (0.3, 5.0), (0.5, -5.0)];
        let grid = FilterGrid::new(vec![0.3], vec![5.0]).unwrap();
        let ideal = matched_filter_sim(&s, &r, &wf, &truth, &grid, &SimOptions::default()).unwrap();
        let opts = SimOptions { ideal: false, ..SimOptions::default() };
        let actual = matched_filter_sim(&s, &r, &wf, &truth, &grid, &opts).unwrap();
        let (x, y) = (ideal.magnitude(0, 0, 1), actual.magnitude(0, 0, 1));
        assert!((x - y).abs() < 0.1 * x, "{x} vs {y}");
    }
}
