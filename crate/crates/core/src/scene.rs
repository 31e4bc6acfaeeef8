//! Antenna arrays, steering vectors and target scenes with Gaussian priors.

use nalgebra::{Complex, DMatrix, DVector};

use crate::error::{Error, Result};
use crate::real::{cis, Real};

/// Relative singular-value cutoff used for numerical rank decisions.
pub const RANK_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ArrayGeometry {
    /// Uniform linear array with half-wavelength element spacing.
    #[default]
    UlaHalfWavelength,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AntennaArray {
    n_antennas: usize,
    geometry: ArrayGeometry,
}

impl AntennaArray {
    pub fn new(n_antennas: usize, geometry: ArrayGeometry) -> Result<Self> {
        if n_antennas == 0 {
            return Err(Error::InvalidArray("at least one antenna is required".into()));
        }
        Ok(Self { n_antennas, geometry })
    }

    pub fn ula(n_antennas: usize) -> Result<Self> {
        Self::new(n_antennas, ArrayGeometry::UlaHalfWavelength)
    }

    pub fn n_antennas(&self) -> usize {
        self.n_antennas
    }

    pub fn geometry(&self) -> ArrayGeometry {
        self.geometry
    }

    /// Transmit steering vector toward `azimuth` (radians).
    ///
    /// For the half-wavelength ULA, element `n` (zero based) is
    /// `exp(j·n·π·sin(azimuth))`, so every entry has unit modulus and the
    /// squared norm equals the number of antennas. Receive gains are modelled
    /// by the same vector.
    pub fn steering<T: Real>(&self, azimuth: T) -> DVector<Complex<T>> {
        match self.geometry {
            ArrayGeometry::UlaHalfWavelength => {
                let phase = T::pi() * azimuth.sin();
                DVector::from_fn(self.n_antennas, |n, _| cis(phase * T::from_count(n)))
            }
        }
    }
}

/// A target with known azimuth and an axis-aligned Gaussian prior on
/// (delay, Doppler).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Target<T> {
    /// Radians, in (−π/2, π/2).
    pub azimuth: T,
    /// Prior mean of the delay in seconds.
    pub tau_mean: T,
    /// Prior mean of the Doppler shift in rad/s.
    pub omega_mean: T,
    pub tau_std: T,
    pub omega_std: T,
    /// Complex reflection coefficient, path loss included.
    pub rcs: Complex<T>,
}

impl<T: Real> Target<T> {
    pub fn new(azimuth: T, tau_mean: T, omega_mean: T, tau_std: T, omega_std: T) -> Self {
        Self {
            azimuth,
            tau_mean,
            omega_mean,
            tau_std,
            omega_std,
            rcs: Complex::new(T::one(), T::zero()),
        }
    }

    pub fn with_rcs(mut self, rcs: Complex<T>) -> Self {
        self.rcs = rcs;
        self
    }

    pub fn mean(&self) -> (T, T) {
        (self.tau_mean, self.omega_mean)
    }

    fn validate(&self, index: usize) -> Result<()> {
        let bad = |reason: &str| Error::InvalidTarget {
            index,
            reason: reason.to_string(),
        };
        let half_pi = T::frac_pi_2();
        if !(self.azimuth > -half_pi && self.azimuth < half_pi) {
            return Err(bad("azimuth must lie in (-pi/2, pi/2)"));
        }
        if !(self.tau_std > T::zero()) || !(self.omega_std > T::zero()) {
            return Err(bad("prior standard deviations must be positive"));
        }
        if !self.tau_mean.is_finite()
            || !self.omega_mean.is_finite()
            || !self.tau_std.is_finite()
            || !self.omega_std.is_finite()
        {
            return Err(bad("prior parameters must be finite"));
        }
        Ok(())
    }

    /// Log of the prior density at `(tau, omega)`.
    pub fn log_density(&self, tau: T, omega: T) -> T {
        let zt = (tau - self.tau_mean) / self.tau_std;
        let zw = (omega - self.omega_mean) / self.omega_std;
        let half = T::lit(0.5);
        -half * (zt * zt + zw * zw) - (T::two_pi() * self.tau_std * self.omega_std).ln()
    }
}

/// An antenna array together with an ordered list of targets.
#[derive(Debug, Clone, PartialEq)]
pub struct Scene<T> {
    array: AntennaArray,
    targets: Vec<Target<T>>,
}

impl<T: Real> Scene<T> {
    pub fn new(array: AntennaArray, targets: Vec<Target<T>>) -> Result<Self> {
        if targets.is_empty() {
            return Err(Error::InvalidScene("a scene needs at least one target".into()));
        }
        for (index, target) in targets.iter().enumerate() {
            target.validate(index)?;
        }
        for i in 0..targets.len() {
            for j in (i + 1)..targets.len() {
                if targets[i].azimuth == targets[j].azimuth {
                    return Err(Error::InvalidScene(format!(
                        "targets {i} and {j} share an azimuth"
                    )));
                }
            }
        }
        Ok(Self { array, targets })
    }

    pub fn array(&self) -> &AntennaArray {
        &self.array
    }

    pub fn n_antennas(&self) -> usize {
        self.array.n_antennas()
    }

    pub fn n_targets(&self) -> usize {
        self.targets.len()
    }

    pub fn targets(&self) -> &[Target<T>] {
        &self.targets
    }

    pub fn target(&self, k: usize) -> Result<&Target<T>> {
        self.targets.get(k).ok_or(Error::TargetIndex {
            index: k,
            n_targets: self.targets.len(),
        })
    }

    /// Steering vector of target `k`. Panics if `k` is out of range.
    pub fn steering(&self, k: usize) -> DVector<Complex<T>> {
        self.array.steering(self.targets[k].azimuth)
    }

    pub fn steering_vectors(&self) -> Vec<DVector<Complex<T>>> {
        (0..self.n_targets()).map(|k| self.steering(k)).collect()
    }

    /// The N×K matrix whose columns are the target steering vectors.
    pub fn steering_matrix(&self) -> DMatrix<Complex<T>> {
        let cols = self.steering_vectors();
        DMatrix::from_columns(&cols)
    }

    /// Numerical rank of the steering matrix; singular values below
    /// `RANK_TOLERANCE` times the largest one count as zero.
    pub fn steering_matrix_rank(&self) -> usize {
        numerical_rank(&self.steering_matrix())
    }

    /// Same scene with the prior replaced for every target; used by the
    /// property tests and the CLI.
    pub fn with_targets(&self, targets: Vec<Target<T>>) -> Result<Self> {
        Self::new(self.array, targets)
    }
}

/// Rank of `m` via its singular values.
pub fn numerical_rank<T: Real>(m: &DMatrix<Complex<T>>) -> usize {
    if m.is_empty() {
        return 0;
    }
    let sv = m.clone().singular_values();
    let largest = sv.iter().copied().fold(T::zero(), |a, b| a.max(b));
    if largest == T::zero() {
        return 0;
    }
    let cutoff = largest * T::lit(RANK_TOLERANCE);
    sv.iter().filter(|&&s| s > cutoff).count()
}

/// Prior layout used by [`uniform_scene`]: target `k` (zero based) gets prior
/// means `origin + k·spacing` on each axis and the shared standard deviations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PriorParams<T> {
    pub tau_origin: T,
    pub tau_spacing: T,
    pub omega_origin: T,
    pub omega_spacing: T,
    pub tau_std: T,
    pub omega_std: T,
    pub rcs: Complex<T>,
}

impl<T: Real> Default for PriorParams<T> {
    fn default() -> Self {
        Self {
            tau_origin: T::zero(),
            tau_spacing: T::one(),
            omega_origin: T::zero(),
            omega_spacing: T::zero(),
            tau_std: T::one(),
            omega_std: T::one(),
            rcs: Complex::new(T::one(), T::zero()),
        }
    }
}

/// Azimuth of target `k` (zero based) out of `n_targets` uniformly spread
/// targets: `((2k+1)/K − 1)·90°`.
pub fn uniform_azimuth<T: Real>(k: usize, n_targets: usize) -> T {
    let ratio = T::from_count(2 * k + 1) / T::from_count(n_targets);
    (ratio - T::one()) * T::frac_pi_2()
}

/// `n_targets` targets uniformly spaced in azimuth in front of an
/// `n_antennas`-element half-wavelength ULA.
pub fn uniform_scene<T: Real>(
    n_antennas: usize,
    n_targets: usize,
    prior: &PriorParams<T>,
) -> Result<Scene<T>> {
    let array = AntennaArray::ula(n_antennas)?;
    let targets = (0..n_targets)
        .map(|k| {
            let kk = T::from_count(k);
            Target::new(
                uniform_azimuth(k, n_targets),
                prior.tau_origin + kk * prior.tau_spacing,
                prior.omega_origin + kk * prior.omega_spacing,
                prior.tau_std,
                prior.omega_std,
            )
            .with_rcs(prior.rcs)
        })
        .collect();
    Scene::new(array, targets)
}
