//! Largest number of uniformly spread targets a given graph family can
//! separate with an `N`-antenna array.

use nalgebra::DVector;

use super::{herm_block, solve, zero_forcing_basis, BeamformOptions, BeamformStatus};
use crate::error::{Error, Result};
use crate::gating::check_graph;
use crate::graph::{AmbiguityGraph, GraphKind};
use crate::linalg::{trace_re, unembed, CMatrix};
use crate::real::Real;
use crate::scene::{uniform_scene, PriorParams, Scene};
use crate::sdp::{solve_sdp, Block, BlockKind, SdpProblem, SdpSettings};

/// Threshold on the probe value separating feasible from infeasible.
pub const PROBE_THRESHOLD: f64 = 0.5;

/// Outcome of the zero-forcing feasibility probe.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeasibilityProbe<T> {
    /// Largest `tr(R)` over PSD `R` with `tr(R) ≤ 1` meeting every
    /// zero-forcing equality: one when a nonzero design exists, zero when
    /// the equalities force `R = 0`.
    pub value: T,
    pub feasible: bool,
}

/// Decides whether any nonzero PSD matrix satisfies the zero-forcing
/// equalities of `graph`.
pub fn feasibility_probe<T: Real>(
    scene: &Scene<T>,
    graph: &AmbiguityGraph,
    settings: SdpSettings<T>,
) -> Result<FeasibilityProbe<T>> {
    check_graph(scene, graph)?;
    let n = scene.n_antennas();
    let mut problem = SdpProblem::new(vec![BlockKind::Psd(2 * n), BlockKind::Lp(1)]);
    let ident = CMatrix::<T>::identity(n, n);
    problem.add_objective(0, herm_block(&(-ident.clone())));
    problem.add_constraint(
        vec![
            (0, herm_block(&ident)),
            (1, Block::Lp(DVector::from_element(1, T::one()))),
        ],
        T::one(),
    );
    for q in zero_forcing_basis(scene, graph) {
        problem.add_constraint(vec![(0, herm_block(&q))], T::zero());
    }
    let sol = solve_sdp(&problem, settings);
    let r = unembed(sol.x.blocks[0].as_psd().expect("psd block"));
    let value = trace_re(&r);
    Ok(FeasibilityProbe {
        value,
        feasible: value > T::lit(PROBE_THRESHOLD),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct IdentifiabilityEntry<T> {
    pub n_targets: usize,
    pub probe_value: T,
    pub feasible: bool,
    /// `P(G)` of the beamforming solve at this `K`.
    pub objective: T,
    pub status: BeamformStatus,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IdentifiabilityReport<T> {
    pub n_antennas: usize,
    pub family: GraphKind,
    /// Largest feasible `K` found by the scan (zero if none).
    pub k_star: usize,
    pub entries: Vec<IdentifiabilityEntry<T>>,
}

/// Scans `K = 1, 2, …, k_max` on uniform scenes and stops after the first
/// `K` whose zero-forcing constraints admit only `R = 0`.
pub fn identifiability<T: Real>(
    n_antennas: usize,
    family: GraphKind,
    k_max: usize,
) -> Result<IdentifiabilityReport<T>> {
    if k_max == 0 {
        return Err(Error::InvalidParameter("k_max must be at least 1".into()));
    }
    let options = BeamformOptions::<T>::default();
    let mut entries = Vec::new();
    let mut k_star = 0;
    for k in 1..=k_max {
        let scene = uniform_scene(n_antennas, k, &PriorParams::default())?;
        let graph = AmbiguityGraph::standard(k, family);
        let probe = feasibility_probe(&scene, &graph, options.sdp)?;
        let result = solve(&scene, &graph, &options)?;
        entries.push(IdentifiabilityEntry {
            n_targets: k,
            probe_value: probe.value,
            feasible: probe.feasible,
            objective: result.objective,
            status: result.status,
        });
        if !probe.feasible {
            break;
        }
        k_star = k;
    }
    Ok(IdentifiabilityReport {
        n_antennas,
        family,
        k_star,
        entries,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complete_family_identifies_n() {
        for n in 2..=4 {
            let r = identifiability::<f64>(n, GraphKind::Complete, 2 * n).unwrap();
            assert_eq!(r.k_star, n, "{r:?}");
        }
    }

    #[test]
    fn path_family_identifies_2n_minus_1() {
        for n in 2..=3 {
            let r = identifiability::<f64>(n, GraphKind::Path, 3 * n).unwrap();
            assert_eq!(r.k_star, 2 * n - 1, "{r:?}");
        }
    }

    #[test]
    fn scan_stops_at_k_max() {
        let r = identifiability::<f64>(3, GraphKind::Empty, 4).unwrap();
        assert_eq!(r.k_star, 4);
        assert_eq!(r.entries.len(), 4);
    }
}
