//! Ambiguity-aware nearest-neighbor association.
//!
//! Each track `k` collects the detections of the matched filter steered
//! at `θ_k` whose magnitude is strictly above the threshold and whose
//! delay-Doppler estimate lies in the ambiguity-aware gate `S_k`. A unique
//! candidate is assigned; none or several is an association error.

use crate::error::{Error, Result};
use crate::gating::{aa_gate_contains, check_graph};
use crate::graph::AmbiguityGraph;
use crate::real::Real;
use crate::scene::Scene;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Detection<T> {
    pub tau: T,
    pub omega: T,
    /// Index of the target whose azimuth the matched filter is steered at.
    pub filter_index: usize,
    pub magnitude: T,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TrackOutcome {
    /// Index into the detection list.
    Assigned(usize),
    ErrorNone,
    /// Indices of all in-gate candidates.
    ErrorMultiple(Vec<usize>),
}

impl TrackOutcome {
    pub fn is_assigned(&self) -> bool {
        matches!(self, TrackOutcome::Assigned(_))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AssociationOutcome {
    pub tracks: Vec<TrackOutcome>,
}

impl AssociationOutcome {
    pub fn all_assigned(&self) -> bool {
        self.tracks.iter().all(TrackOutcome::is_assigned)
    }

    pub fn n_errors(&self) -> usize {
        self.tracks.iter().filter(|t| !t.is_assigned()).count()
    }
}

/// Runs the association rule for every track of `scene`.
pub fn associate<T: Real>(
    detections: &[Detection<T>],
    scene: &Scene<T>,
    graph: &AmbiguityGraph,
    threshold: T,
) -> Result<AssociationOutcome> {
    check_graph(scene, graph)?;
    let k_count = scene.n_targets();
    let mut by_filter: Vec<Vec<usize>> = vec![Vec::new(); k_count];
    for (i, d) in detections.iter().enumerate() {
        if d.filter_index >= k_count {
            return Err(Error::TargetIndex {
                index: d.filter_index,
                n_targets: k_count,
            });
        }
        if d.magnitude > threshold {
            by_filter[d.filter_index].push(i);
        }
    }
    let tracks = by_filter
        .iter()
        .enumerate()
        .map(|(k, idx)| {
            let hits: Vec<usize> = idx
                .iter()
                .copied()
                .filter(|&i| aa_gate_contains(scene, graph, k, detections[i].tau, detections[i].omega))
                .collect();
            match hits.len() {
                0 => TrackOutcome::ErrorNone,
                1 => TrackOutcome::Assigned(hits[0]),
                _ => TrackOutcome::ErrorMultiple(hits),
            }
        })
        .collect();
    Ok(AssociationOutcome { tracks })
}
