//! Trade-off between transmit power gain `P(G)` and correct-association
//! probability `C(G)` over ambiguity graphs.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::beamform::{solve, BeamformOptions, BeamformStatus};
use crate::error::{Error, Result};
use crate::gating::{aa_gate_contains, check_graph, confusion_table, ConfusionMethod, ConfusionTable, Estimate};
use crate::graph::{enumerate_graphs, gamma_breakpoints, threshold_graph, AmbiguityGraph};
use crate::real::{to_db, Real};
use crate::rng::{self, derive_rng, TAG_ASSOCIATION};
use crate::scene::Scene;

/// Smallest sample count accepted by [`estimate_c`].
pub const MIN_SAMPLES: usize = 1000;
/// Largest `K` enumerated exhaustively without the long-run flag.
pub const EXHAUSTIVE_DEFAULT_MAX: usize = 5;

#[derive(Debug, Clone, PartialEq)]
pub struct TradeoffPoint<T> {
    pub graph: AmbiguityGraph,
    /// `P(G)`; zero when the beamformer is infeasible.
    pub power_gain: T,
    pub status: BeamformStatus,
    pub assoc_prob: T,
    pub assoc_stderr: T,
    /// Threshold that produced the graph in a sweep.
    pub gamma: Option<T>,
}

impl<T: Real> TradeoffPoint<T> {
    pub fn feasible(&self) -> bool {
        self.status == BeamformStatus::Optimal
    }

    pub fn power_gain_db(&self) -> T {
        to_db(self.power_gain)
    }

    /// True if `self` is at least as good as `other` in both coordinates and
    /// strictly better in one, after granting `other` the given slacks.
    pub fn dominates(&self, other: &Self, slack_p: T, slack_c: T) -> bool {
        let p_ge = self.power_gain >= other.power_gain + slack_p;
        let c_ge = self.assoc_prob >= other.assoc_prob + slack_c;
        let p_gt = self.power_gain > other.power_gain + slack_p;
        let c_gt = self.assoc_prob > other.assoc_prob + slack_c;
        p_ge && c_ge && (p_gt || c_gt)
    }
}

/// Monte-Carlo estimate of `C(G)`: the probability that every target's
/// parameters, drawn from its prior, fall in its own ambiguity-aware gate.
///
/// Samples depend only on `(seed, chunk)`, so graphs evaluated with the
/// same seed share the same draws.
pub fn estimate_c<T: Real>(
    scene: &Scene<T>,
    graph: &AmbiguityGraph,
    n_samples: usize,
    seed: u64,
) -> Result<Estimate<T>> {
    check_graph(scene, graph)?;
    if n_samples < MIN_SAMPLES {
        return Err(Error::InvalidParameter(format!(
            "estimate_c needs at least {MIN_SAMPLES} samples, got {n_samples}"
        )));
    }
    let targets = scene.targets();
    let hits: u64 = rng::chunks(n_samples)
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|(chunk, len)| {
            let mut rng = derive_rng(seed, &[TAG_ASSOCIATION, chunk as u64]);
            let mut draws = vec![(T::zero(), T::zero()); targets.len()];
            let mut hits = 0u64;
            for _ in 0..len {
                for (d, t) in draws.iter_mut().zip(targets) {
                    let zt: f64 = rng.sample(StandardNormal);
                    let zw: f64 = rng.sample(StandardNormal);
                    *d = (t.tau_mean + t.tau_std * T::lit(zt), t.omega_mean + t.omega_std * T::lit(zw));
                }
                if draws
                    .iter()
                    .enumerate()
                    .all(|(k, &(tau, omega))| aa_gate_contains(scene, graph, k, tau, omega))
                {
                    hits += 1;
                }
            }
            hits
        })
        .sum();
    let n = n_samples as f64;
    let p = hits as f64 / n;
    Ok(Estimate {
        value: T::lit(p),
        stderr: T::lit((p * (1.0 - p) / n).sqrt()),
    })
}

/// Union-bound lower bound `1 − K²·max_{k'∉E_k} (1 − p[k][k'])`, clipped to
/// `[1 − K², 1]`.
pub fn bound_c<T: Real>(scene: &Scene<T>, graph: &AmbiguityGraph, table: &ConfusionTable<T>) -> Result<T> {
    check_graph(scene, graph)?;
    let k_count = scene.n_targets();
    if table.n_targets() != k_count {
        return Err(Error::GraphSize {
            expected: k_count,
            found: table.n_targets(),
        });
    }
    let mut worst = T::zero();
    for k in 0..k_count {
        for kp in 0..k_count {
            if k != kp && !graph.has_edge(k, kp) {
                worst = worst.max(T::one() - table.get(k, kp));
            }
        }
    }
    let kk = T::from_count(k_count * k_count);
    Ok((T::one() - kk * worst).max(T::one() - kk).min(T::one()))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TradeoffOptions<T> {
    pub n_samples: usize,
    pub seed: u64,
    pub confusion: ConfusionMethod,
    pub beamform: BeamformOptions<T>,
}

impl<T: Real> Default for TradeoffOptions<T> {
    fn default() -> Self {
        Self {
            n_samples: 100_000,
            seed: 0,
            confusion: ConfusionMethod::default(),
            beamform: BeamformOptions::default(),
        }
    }
}

/// `P(G)` and `C(G)` for a single graph.
pub fn evaluate<T: Real>(
    scene: &Scene<T>,
    graph: AmbiguityGraph,
    gamma: Option<T>,
    options: &TradeoffOptions<T>,
) -> Result<TradeoffPoint<T>> {
    let bf = solve(scene, &graph, &options.beamform)?;
    let c = estimate_c(scene, &graph, options.n_samples, options.seed)?;
    let power_gain = if bf.status == BeamformStatus::Optimal {
        bf.objective
    } else {
        T::zero()
    };
    Ok(TradeoffPoint {
        graph,
        power_gain,
        status: bf.status,
        assoc_prob: c.value,
        assoc_stderr: c.stderr,
        gamma,
    })
}

/// Threshold graphs at `γ = 0` and at every breakpoint of the confusion
/// table, one point per distinct graph, in increasing `γ`.
pub fn sweep<T: Real>(scene: &Scene<T>, options: &TradeoffOptions<T>) -> Result<Vec<TradeoffPoint<T>>> {
    let table = confusion_table(scene, options.confusion)?;
    sweep_with_table(scene, &table, options)
}

pub fn sweep_with_table<T: Real>(
    scene: &Scene<T>,
    table: &ConfusionTable<T>,
    options: &TradeoffOptions<T>,
) -> Result<Vec<TradeoffPoint<T>>> {
    let mut gammas = vec![T::zero()];
    gammas.extend(gamma_breakpoints(table));
    let mut graphs: Vec<(T, AmbiguityGraph)> = Vec::new();
    for g in gammas {
        let graph = threshold_graph(table, g);
        if graphs.last().is_none_or(|(_, prev)| *prev != graph) {
            graphs.push((g, graph));
        }
    }
    graphs
        .into_par_iter()
        .map(|(g, graph)| evaluate(scene, graph, Some(g), options))
        .collect()
}

/// One point per labeled graph on `K` vertices. `K` above
/// [`EXHAUSTIVE_DEFAULT_MAX`] needs `long_run`.
pub fn exhaustive<T: Real>(
    scene: &Scene<T>,
    options: &TradeoffOptions<T>,
    long_run: bool,
) -> Result<Vec<TradeoffPoint<T>>> {
    let k_count = scene.n_targets();
    if k_count > EXHAUSTIVE_DEFAULT_MAX && !long_run {
        return Err(Error::LongRunRequired { n_targets: k_count });
    }
    let graphs: Vec<AmbiguityGraph> = enumerate_graphs(k_count)?.collect();
    graphs
        .into_par_iter()
        .map(|graph| evaluate(scene, graph, None, options))
        .collect()
}

/// Indices of feasible points not dominated by any other feasible point.
pub fn pareto_indices<T: Real>(points: &[TradeoffPoint<T>]) -> Vec<usize> {
    (0..points.len())
        .filter(|&i| {
            points[i].feasible()
                && !points
                    .iter()
                    .any(|q| q.feasible() && q.dominates(&points[i], T::zero(), T::zero()))
        })
        .collect()
}

pub fn pareto_filter<T: Real>(points: &[TradeoffPoint<T>]) -> Vec<TradeoffPoint<T>> {
    pareto_indices(points).into_iter().map(|i| points[i].clone()).collect()
}

/// Upper concave envelope of the feasible `(P, C)` pairs, sorted by `P`.
pub fn concave_envelope<T: Real>(points: &[TradeoffPoint<T>]) -> Vec<(T, T)> {
    let mut pts: Vec<(T, T)> = points
        .iter()
        .filter(|p| p.feasible())
        .map(|p| (p.power_gain, p.assoc_prob))
        .collect();
    pts.sort_by(|a, b| {
        a.0.partial_cmp(&b.0)
            .unwrap()
            .then(b.1.partial_cmp(&a.1).unwrap())
    });
    pts.dedup_by(|b, a| a.0 == b.0);
    let mut hull: Vec<(T, T)> = Vec::new();
    for p in pts {
        while hull.len() >= 2 {
            let (o, a) = (hull[hull.len() - 2], hull[hull.len() - 1]);
            let cross = (a.0 - o.0) * (p.1 - o.1) - (a.1 - o.1) * (p.0 - o.0);
            if cross >= T::zero() {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(p);
    }
    hull
}
