//! Gates in the delay-Doppler plane and pairwise confusion probabilities.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::graph::AmbiguityGraph;
use crate::real::Real;
use crate::rng::{self, derive_rng, TAG_CONFUSION};
use crate::scene::{Scene, Target};

/// A point `(tau, omega)` of the delay-Doppler plane.
pub type Point<T> = (T, T);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RectGate<T> {
    pub tau_lo: T,
    pub tau_hi: T,
    pub omega_lo: T,
    pub omega_hi: T,
}

impl<T: Real> RectGate<T> {
    pub fn new(tau_lo: T, tau_hi: T, omega_lo: T, omega_hi: T) -> Result<Self> {
        if !(tau_lo <= tau_hi) || !(omega_lo <= omega_hi) {
            return Err(Error::InvalidParameter(
                "gate lower bounds must not exceed upper bounds".into(),
            ));
        }
        Ok(Self {
            tau_lo,
            tau_hi,
            omega_lo,
            omega_hi,
        })
    }

    pub fn contains(&self, (tau, omega): Point<T>) -> bool {
        tau >= self.tau_lo && tau <= self.tau_hi && omega >= self.omega_lo && omega <= self.omega_hi
    }

    /// Closed-set intersection test.
    pub fn intersects(&self, other: &Self) -> bool {
        self.tau_lo <= other.tau_hi
            && other.tau_lo <= self.tau_hi
            && self.omega_lo <= other.omega_hi
            && other.omega_lo <= self.omega_hi
    }
}

/// Rectangle `mean ± n_sigma·std` on both axes.
pub fn rect_gate<T: Real>(target: &Target<T>, n_sigma: T) -> Result<RectGate<T>> {
    if !(n_sigma >= T::zero()) || !n_sigma.is_finite() {
        return Err(Error::InvalidParameter("n_sigma must be non-negative".into()));
    }
    let dt = n_sigma * target.tau_std;
    let dw = n_sigma * target.omega_std;
    RectGate::new(
        target.tau_mean - dt,
        target.tau_mean + dt,
        target.omega_mean - dw,
        target.omega_mean + dw,
    )
}

pub fn rect_gates<T: Real>(scene: &Scene<T>, n_sigma: T) -> Result<Vec<RectGate<T>>> {
    scene.targets().iter().map(|t| rect_gate(t, n_sigma)).collect()
}

fn check_pair<T: Real>(scene: &Scene<T>, k: usize, kprime: usize) -> Result<()> {
    scene.target(k)?;
    scene.target(kprime)?;
    if k == kprime {
        return Err(Error::SameTarget(k));
    }
    Ok(())
}

/// Membership in `S_{k,k'}`: the prior density of `k` strictly exceeds the
/// prior density of `k'` at `point`.
pub fn in_pairwise_set<T: Real>(point: Point<T>, k: usize, kprime: usize, scene: &Scene<T>) -> Result<bool> {
    check_pair(scene, k, kprime)?;
    let t = scene.targets();
    Ok(t[k].log_density(point.0, point.1) > t[kprime].log_density(point.0, point.1))
}

/// Membership test of the ambiguity-aware nearest-neighbour gate without
/// argument validation. `k` and `graph` must match `scene`.
pub(crate) fn aa_gate_contains<T: Real>(scene: &Scene<T>, graph: &AmbiguityGraph, k: usize, tau: T, omega: T) -> bool {
    let targets = scene.targets();
    let own = targets[k].log_density(tau, omega);
    targets
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != k && !graph.has_edge(k, j))
        .all(|(_, t)| own > t.log_density(tau, omega))
}

/// Membership in the ambiguity-aware nearest-neighbour gate `S_k`: the prior
/// density of `k` strictly exceeds that of every target that is not a
/// neighbour of `k` in `graph`. With no such competitor the gate is the
/// whole plane.
pub fn in_aa_gate<T: Real>(point: Point<T>, k: usize, graph: &AmbiguityGraph, scene: &Scene<T>) -> Result<bool> {
    check_graph(scene, graph)?;
    scene.target(k)?;
    Ok(aa_gate_contains(scene, graph, k, point.0, point.1))
}

pub(crate) fn check_graph<T: Real>(scene: &Scene<T>, graph: &AmbiguityGraph) -> Result<()> {
    if graph.n_vertices() != scene.n_targets() {
        return Err(Error::GraphSize {
            expected: scene.n_targets(),
            found: graph.n_vertices(),
        });
    }
    Ok(())
}

/// How [`confusion_prob`] evaluates `P((tau_k, omega_k) ∈ S_{k,k'})`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConfusionMethod {
    /// `Φ(d/2)` with `d` the Mahalanobis distance between the means; only
    /// valid when both priors share a covariance.
    Analytic,
    MonteCarlo { samples: usize, seed: u64 },
    /// Analytic where valid, Monte-Carlo otherwise.
    Auto { samples: usize, seed: u64 },
}

impl Default for ConfusionMethod {
    fn default() -> Self {
        ConfusionMethod::Auto {
            samples: 100_000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate<T> {
    pub value: T,
    /// Zero for closed-form values.
    pub stderr: T,
}

pub(crate) fn std_normal_cdf(x: f64) -> f64 {
    Normal::standard().cdf(x)
}

fn shares_covariance<T: Real>(a: &Target<T>, b: &Target<T>) -> bool {
    let close = |x: T, y: T| (x - y).abs() <= T::lit(1e-12) * x.abs().max(y.abs());
    close(a.tau_std, b.tau_std) && close(a.omega_std, b.omega_std)
}

/// Probability that target `k`'s parameters, drawn from its own prior, are
/// likelier under `k`'s prior than under `kprime`'s.
pub fn confusion_prob<T: Real>(
    k: usize,
    kprime: usize,
    scene: &Scene<T>,
    method: ConfusionMethod,
) -> Result<Estimate<T>> {
    check_pair(scene, k, kprime)?;
    let (a, b) = (&scene.targets()[k], &scene.targets()[kprime]);
    match method {
        ConfusionMethod::Analytic => {
            if !shares_covariance(a, b) {
                return Err(Error::UnsupportedClosedForm);
            }
            let zt = (a.tau_mean - b.tau_mean) / a.tau_std;
            let zw = (a.omega_mean - b.omega_mean) / a.omega_std;
            let d = (zt * zt + zw * zw).sqrt();
            Ok(Estimate {
                value: T::lit(std_normal_cdf(d.as_f64() / 2.0)),
                stderr: T::zero(),
            })
        }
        ConfusionMethod::Auto { samples, seed } => {
            let m = if shares_covariance(a, b) {
                ConfusionMethod::Analytic
            } else {
                ConfusionMethod::MonteCarlo { samples, seed }
            };
            confusion_prob(k, kprime, scene, m)
        }
        ConfusionMethod::MonteCarlo { samples, seed } => {
            if samples == 0 {
                return Err(Error::InvalidParameter("Monte-Carlo needs at least one sample".into()));
            }
            let hits: u64 = rng::chunks(samples)
                .collect::<Vec<_>>()
                .into_par_iter()
                .map(|(chunk, len)| {
                    let mut rng = derive_rng(seed, &[TAG_CONFUSION, k as u64, kprime as u64, chunk as u64]);
                    let mut hits = 0u64;
                    for _ in 0..len {
                        let zt: f64 = rng.sample(StandardNormal);
                        let zw: f64 = rng.sample(StandardNormal);
                        let tau = a.tau_mean + a.tau_std * T::lit(zt);
                        let omega = a.omega_mean + a.omega_std * T::lit(zw);
                        if a.log_density(tau, omega) > b.log_density(tau, omega) {
                            hits += 1;
                        }
                    }
                    hits
                })
                .sum();
            let n = samples as f64;
            let p = hits as f64 / n;
            Ok(Estimate {
                value: T::lit(p),
                stderr: T::lit((p * (1.0 - p) / n).sqrt()),
            })
        }
    }
}

/// `K×K` table of pairwise confusion probabilities `p[k][k']`; the diagonal
/// is unused and stored as zero.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfusionTable<T> {
    n: usize,
    values: Vec<T>,
    stderr: Vec<T>,
}

impl<T: Real> ConfusionTable<T> {
    pub fn from_rows(rows: Vec<Vec<T>>) -> Result<Self> {
        let n = rows.len();
        let mut values = Vec::with_capacity(n * n);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != n {
                return Err(Error::InvalidParameter("confusion table must be square".into()));
            }
            for (j, v) in row.into_iter().enumerate() {
                if i != j && !(v >= T::zero() && v <= T::one()) {
                    return Err(Error::InvalidParameter(format!(
                        "confusion entry ({i},{j}) outside [0, 1]"
                    )));
                }
                values.push(if i == j { T::zero() } else { v });
            }
        }
        Ok(Self {
            n,
            values,
            stderr: vec![T::zero(); n * n],
        })
    }

    pub fn n_targets(&self) -> usize {
        self.n
    }

    pub fn get(&self, k: usize, kprime: usize) -> T {
        self.values[k * self.n + kprime]
    }

    pub fn stderr(&self, k: usize, kprime: usize) -> T {
        self.stderr[k * self.n + kprime]
    }
}

/// Confusion probabilities for every ordered target pair of `scene`.
pub fn confusion_table<T: Real>(scene: &Scene<T>, method: ConfusionMethod) -> Result<ConfusionTable<T>> {
    let n = scene.n_targets();
    let mut values = vec![T::zero(); n * n];
    let mut stderr = vec![T::zero(); n * n];
    for i in 0..n {
        for j in 0..n {
            if i != j {
                let e = confusion_prob(i, j, scene, method)?;
                values[i * n + j] = e.value;
                stderr[i * n + j] = e.stderr;
            }
        }
    }
    Ok(ConfusionTable { n, values, stderr })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::AntennaArray;

    fn scene(targets: Vec<Target<f64>>) -> Scene<f64> {
        Scene::new(AntennaArray::ula(4).unwrap(), targets).unwrap()
    }

    fn iso(az: f64, t: f64, w: f64, s: f64) -> Target<f64> {
        Target::new(az, t, w, s, s)
    }

    #[test]
    fn rect_gate_examples() {
        let g = rect_gate(&Target::new(0.0, 0.0, 0.0, 1.0, 2.0), 3.0).unwrap();
        assert_eq!((g.tau_lo, g.tau_hi, g.omega_lo, g.omega_hi), (-3.0, 3.0, -6.0, 6.0));
        let g = rect_gate(&Target::new(0.0, 0.0, 0.0, 1.0, 2.0), 0.0).unwrap();
        assert_eq!((g.tau_lo, g.tau_hi), (0.0, 0.0));
        assert!(g.contains((0.0, 0.0)));
        let g = rect_gate(&Target::new(0.0, 5.0, -1.0, 0.5, 0.5), 2.0).unwrap();
        assert_eq!((g.tau_lo, g.tau_hi, g.omega_lo, g.omega_hi), (4.0, 6.0, -2.0, 0.0));
        assert!(rect_gate(&Target::new(0.0, 0.0, 0.0, 1.0, 1.0), -1.0).is_err());
    }

    #[test]
    fn pairwise_membership() {
        let s = scene(vec![iso(-0.5, 0.0, 0.0, 1.0), iso(0.5, 2.0, 0.0, 1.0)]);
        assert!(in_pairwise_set((0.4, 0.3), 0, 1, &s).unwrap());
        assert!(!in_pairwise_set((0.4, 0.3), 1, 0, &s).unwrap());
        // midpoint: strict inequality fails both ways
        assert!(!in_pairwise_set((1.0, 0.0), 0, 1, &s).unwrap());
        assert!(!in_pairwise_set((1.0, 0.0), 1, 0, &s).unwrap());
        assert!(matches!(in_pairwise_set((0.0, 0.0), 1, 1, &s), Err(Error::SameTarget(1))));
    }

    #[test]
    fn pairwise_membership_unequal_variance() {
        let wide = Target::new(-0.5, 0.0, 0.0, 3.0, 3.0);
        let narrow = Target::new(0.5, 1.0, 0.0, 0.5, 0.5);
        let s = scene(vec![wide, narrow]);
        // density oracle written out independently
        let dens = |mt: f64, mw: f64, s: f64, x: f64, y: f64| {
            (-((x - mt).powi(2) + (y - mw).powi(2)) / (2.0 * s * s)).exp() / (2.0 * std::f64::consts::PI * s * s)
        };
        for &(x, y) in &[(2.5, 0.0), (1.2, 0.1), (-4.0, 2.0), (1.0, 1.5)] {
            let want = dens(0.0, 0.0, 3.0, x, y) > dens(1.0, 0.0, 0.5, x, y);
            assert_eq!(in_pairwise_set((x, y), 0, 1, &s).unwrap(), want, "point ({x},{y})");
        }
    }

    #[test]
    fn aa_gate_examples() {
        let s = scene(vec![iso(-0.5, 0.0, 0.0, 1.0), iso(0.5, 10.0, 0.0, 1.0)]);
        let complete = AmbiguityGraph::complete(2);
        assert!(in_aa_gate((123.0, -4.0), 0, &complete, &s).unwrap());
        let empty = AmbiguityGraph::empty(2);
        assert!(in_aa_gate((0.0, 0.0), 0, &empty, &s).unwrap());
        assert!(!in_aa_gate((0.0, 0.0), 1, &empty, &s).unwrap());
        assert!(in_aa_gate((0.0, 0.0), 0, &AmbiguityGraph::empty(3), &s).is_err());
    }

    #[test]
    fn chain_gates_of_non_neighbors_are_disjoint() {
        // 8 targets on a chain, path graph: gates of targets 4 and 6 (zero
        // based) never overlap
        let targets: Vec<_> = (0..8).map(|k| iso(-1.2 + 0.3 * k as f64, k as f64, 0.0, 1.0)).collect();
        let s = scene(targets);
        let g = AmbiguityGraph::path(8);
        for i in 0..400 {
            for j in 0..40 {
                let p = (-2.0 + i as f64 * 0.03, -3.0 + j as f64 * 0.15);
                let a = in_aa_gate(p, 4, &g, &s).unwrap();
                let b = in_aa_gate(p, 6, &g, &s).unwrap();
                assert!(!(a && b), "overlap at {p:?}");
            }
        }
    }

    #[test]
    fn confusion_examples() {
        let same = scene(vec![iso(-0.5, 0.0, 0.0, 1.0), iso(0.5, 0.0, 0.0, 1.0)]);
        let e = confusion_prob(0, 1, &same, ConfusionMethod::Analytic).unwrap();
        assert_eq!(e.value, 0.5);

        let two = scene(vec![iso(-0.5, 0.0, 0.0, 1.0), iso(0.5, 2.0, 0.0, 1.0)]);
        let e = confusion_prob(0, 1, &two, ConfusionMethod::Analytic).unwrap();
        assert!((e.value - 0.841_344_746_068_542_9).abs() < 1e-10, "{}", e.value);

        let far = scene(vec![iso(-0.5, 0.0, 0.0, 1.0), iso(0.5, 100.0, 0.0, 1.0)]);
        let e = confusion_prob(0, 1, &far, ConfusionMethod::Analytic).unwrap();
        assert!((1.0 - e.value) < 1e-6);

        let uneq = scene(vec![iso(-0.5, 0.0, 0.0, 1.0), iso(0.5, 2.0, 0.0, 2.0)]);
        assert!(matches!(
            confusion_prob(0, 1, &uneq, ConfusionMethod::Analytic),
            Err(Error::UnsupportedClosedForm)
        ));
        assert!(confusion_prob(0, 1, &uneq, ConfusionMethod::default()).unwrap().stderr > 0.0);
    }

    #[test]
    fn monte_carlo_is_reproducible() {
        let s = scene(vec![iso(-0.5, 0.0, 0.0, 1.0), iso(0.5, 2.0, 1.0, 1.5)]);
        let m = ConfusionMethod::MonteCarlo { samples: 20_000, seed: 9 };
        let a = confusion_prob(0, 1, &s, m).unwrap();
        let b = confusion_prob(0, 1, &s, m).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn table_layout() {
        let s = scene(vec![iso(-0.5, 0.0, 0.0, 1.0), iso(0.0, 2.0, 0.0, 1.0), iso(0.5, 5.0, 0.0, 1.0)]);
        let t = confusion_table(&s, ConfusionMethod::Analytic).unwrap();
        assert_eq!(t.n_targets(), 3);
        assert_eq!(t.get(1, 1), 0.0);
        assert!(t.get(0, 1) < t.get(0, 2));
        assert_eq!(t.get(0, 1), t.get(1, 0));
    }
}
