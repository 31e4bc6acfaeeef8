//! Sampled check of the three ambiguity-function properties on the
//! lattice `Δτ = J·δ/(8B)`, `Δω = M·δ/T`:
//!
//! 1. `χ_{n,n}(0, 0) = 1`;
//! 2. `|χ_{n,n}| ≤ δ` when `|Δτ| ≥ 1/B` or `26/(δT) ≤ |Δω| ≤ πB`;
//! 3. `|χ_{n,n'}| ≤ δ` for `n ≠ n'`.
//!
//! For each lag `L = ⌊ΔτB⌋` the Doppler axis is filled by one chirp-z
//! transform of the lagged chip products, after which every fractional
//! delay in that chip costs two multiplications per Doppler bin. Only
//! `Δτ ≥ 0` is sampled: the symmetry
//! `|χ_{n,n'}(−Δτ, Δω)| = |χ_{n',n}(Δτ, −Δω)|` and the symmetric Doppler
//! grid cover the rest.

use std::collections::HashMap;

use num_complex::Complex64;
use rayon::prelude::*;

use super::czt::Czt;
use super::{chip_weights, PolyphaseWaveformSet};
use crate::error::{Error, Result};
use crate::real::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairSelection {
    All,
    AutoOnly,
    CrossOnly,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyOptions {
    /// Keep every `tau_subsample`-th delay sample.
    pub tau_subsample: usize,
    /// Keep every `omega_subsample`-th Doppler sample.
    pub omega_subsample: usize,
    /// Largest `|Δω|` sampled, rad/s; `None` means `πB`.
    pub omega_max: Option<f64>,
    /// Upper limit on delay × Doppler samples per waveform pair.
    pub max_points: u128,
    pub pairs: PairSelection,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            tau_subsample: 1,
            omega_subsample: 1,
            omega_max: None,
            max_points: 100_000_000,
            pairs: PairSelection::All,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AmbiguityReport {
    pub delta: f64,
    /// Delay spacing actually sampled, seconds.
    pub tau_step: f64,
    /// Doppler spacing actually sampled, rad/s.
    pub omega_step: f64,
    pub omega_max: f64,
    pub n_tau: usize,
    pub n_omega: usize,
    /// Largest `|χ_{n,n}(0,0) − 1|`.
    pub origin_error: f64,
    /// Largest `|χ_{n,n}|` over the property-2 region.
    pub auto_sidelobe_max: Option<f64>,
    /// Largest `|χ_{n,n'}|`, `n ≠ n'`.
    pub cross_max: Option<f64>,
    pub property1: bool,
    pub property2: Option<bool>,
    pub property3: Option<bool>,
}

impl AmbiguityReport {
    pub fn passes(&self) -> bool {
        self.property1 && self.property2.unwrap_or(true) && self.property3.unwrap_or(true)
    }

    /// `20·log10` of a magnitude.
    pub fn amplitude_db(value: f64) -> f64 {
        20.0 * value.log10()
    }

    /// `10·log10` of a magnitude read as a power.
    pub fn power_db(value: f64) -> f64 {
        10.0 * value.log10()
    }
}

/// Lattice geometry shared by all waveform pairs.
struct Lattice {
    bt: usize,
    /// Delay samples grouped by lag: `(lag, eps_key)`.
    by_lag: Vec<Vec<u64>>,
    omegas: Vec<f64>,
    weights: HashMap<u64, (Vec<Complex64>, Vec<Complex64>)>,
}

const EPS_SCALE: f64 = 1e12;

fn eps_key(eps: f64) -> u64 {
    (eps * EPS_SCALE).round() as u64
}

impl Lattice {
    fn new(bt: usize, b: f64, tau_step_chips: f64, omegas: Vec<f64>) -> Self {
        let mut by_lag: Vec<Vec<u64>> = vec![Vec::new(); bt];
        let mut j: u64 = 0;
        loop {
            let x = j as f64 * tau_step_chips;
            let snapped = if (x - x.round()).abs() < 1e-9 { x.round() } else { x };
            if snapped >= bt as f64 {
                break;
            }
            let lag = snapped.floor() as usize;
            by_lag[lag].push(eps_key(snapped - lag as f64));
            j += 1;
        }
        let mut weights = HashMap::new();
        for key in by_lag.iter().flatten() {
            weights.entry(*key).or_insert_with(|| {
                let eps = *key as f64 / EPS_SCALE;
                omegas.iter().map(|&w| chip_weights(eps, w, b)).unzip()
            });
        }
        Self {
            bt,
            by_lag,
            omegas,
            weights,
        }
    }

    fn n_tau(&self) -> usize {
        self.by_lag.iter().map(Vec::len).sum()
    }
}

/// Maximum of `|χ_{n,n'}|` over lattice points accepted by `region(lag, eps, omega)`.
fn pair_max(
    chips: &[Vec<Complex64>],
    n: usize,
    np: usize,
    lat: &Lattice,
    czt: &Czt,
    b: f64,
    duration: f64,
    region: &(dyn Fn(usize, f64, f64) -> bool + Sync),
) -> f64 {
    let bt = lat.bt;
    let n_omega = lat.omegas.len();
    let lag_spectrum = |lag: usize, out: &mut Vec<Complex64>, s: &mut super::czt::CztScratch, x: &mut Vec<Complex64>| {
        out.iter_mut().for_each(|z| *z = Complex64::new(0.0, 0.0));
        if lag >= bt {
            return;
        }
        x.clear();
        x.extend((0..bt - lag).map(|i| chips[n][i + lag] * chips[np][i].conj()));
        czt.run(x, out, s);
        let lf = lag as f64;
        for (z, &w) in out.iter_mut().zip(&lat.omegas) {
            *z *= Complex64::from_polar(1.0, -w * lf / b);
        }
    };
    const BLOCK: usize = 32;
    (0..bt.div_ceil(BLOCK))
        .into_par_iter()
        .map(|blk| {
            let mut s = czt.scratch();
            let mut x = Vec::with_capacity(bt);
            let mut cur = vec![Complex64::new(0.0, 0.0); n_omega];
            let mut next = vec![Complex64::new(0.0, 0.0); n_omega];
            let start = blk * BLOCK;
            let end = (start + BLOCK).min(bt);
            lag_spectrum(start, &mut cur, &mut s, &mut x);
            let mut best: f64 = 0.0;
            for lag in start..end {
                lag_spectrum(lag + 1, &mut next, &mut s, &mut x);
                for &key in &lat.by_lag[lag] {
                    let eps = key as f64 / EPS_SCALE;
                    let (wa, wb) = &lat.weights[&key];
                    for m in 0..n_omega {
                        if !region(lag, eps, lat.omegas[m]) {
                            continue;
                        }
                        let v = (wa[m] * cur[m] + wb[m] * next[m]).norm();
                        best = best.max(v);
                    }
                }
                std::mem::swap(&mut cur, &mut next);
            }
            best / duration
        })
        .reduce(|| 0.0, f64::max)
}

/// Samples the ambiguity function of `set` and checks the three
/// properties at sidelobe level `delta`.
pub fn verify_theorem1<T: Real>(
    set: &PolyphaseWaveformSet<T>,
    delta: f64,
    options: &VerifyOptions,
) -> Result<AmbiguityReport> {
    if !(delta > 0.0) || options.tau_subsample == 0 || options.omega_subsample == 0 {
        return Err(Error::InvalidParameter(
            "delta and subsampling factors must be positive".into(),
        ));
    }
    let b = set.bandwidth.as_f64();
    let t = set.duration.as_f64();
    let bt = set.n_chips();
    let n = set.n_waveforms();
    let omega_max = options.omega_max.unwrap_or(std::f64::consts::PI * b);
    let tau_step_chips = delta / 8.0 * options.tau_subsample as f64;
    let omega_step = delta / t * options.omega_subsample as f64;
    let m_max = (omega_max / omega_step).floor() as i64;
    let n_omega = (2 * m_max + 1) as usize;
    let n_tau_est = (bt as f64 / tau_step_chips).ceil() as u128;
    let points = n_tau_est * n_omega as u128;
    if points > options.max_points {
        return Err(Error::GridTooLarge {
            points,
            cap: options.max_points,
        });
    }

    let omegas: Vec<f64> = (-m_max..=m_max).map(|m| m as f64 * omega_step).collect();
    let lat = Lattice::new(bt, b, tau_step_chips, omegas);
    let dnu = omega_step / b;
    let czt = Czt::new(bt, n_omega, -(m_max as f64) * dnu, dnu);
    let chips: Vec<Vec<Complex64>> = (0..n)
        .map(|i| {
            (0..bt)
                .map(|l| {
                    let z = set.chips[(i, l)];
                    Complex64::new(z.re.as_f64(), z.im.as_f64())
                })
                .collect()
        })
        .collect();

    let origin_error = (0..n)
        .map(|i| {
            let v = set.ambiguity_unchecked(i, i, T::zero(), T::zero());
            ((v.re.as_f64() - 1.0).powi(2) + v.im.as_f64().powi(2)).sqrt()
        })
        .fold(0.0, f64::max);

    let doppler_floor = 26.0 / (delta * t);
    let auto_region = move |lag: usize, _eps: f64, w: f64| lag >= 1 || w.abs() >= doppler_floor;
    let cross_region = |_: usize, _: f64, _: f64| true;

    let auto_sidelobe_max = (options.pairs != PairSelection::CrossOnly).then(|| {
        (0..n)
            .map(|i| pair_max(&chips, i, i, &lat, &czt, b, t, &auto_region))
            .fold(0.0, f64::max)
    });
    let cross_max = (options.pairs != PairSelection::AutoOnly && n > 1).then(|| {
        let mut best: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    best = best.max(pair_max(&chips, i, j, &lat, &czt, b, t, &cross_region));
                }
            }
        }
        best
    });

    Ok(AmbiguityReport {
        delta,
        tau_step: tau_step_chips / b,
        omega_step,
        omega_max,
        n_tau: lat.n_tau(),
        n_omega,
        origin_error,
        auto_sidelobe_max,
        cross_max,
        property1: origin_error <= 1e-12,
        property2: auto_sidelobe_max.map(|v| v <= delta),
        property3: cross_max.map(|v| v <= delta),
    })
}
