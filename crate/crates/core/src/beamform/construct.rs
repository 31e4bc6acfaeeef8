//! Closed-form beamforming designs built from orthogonal complements of
//! steering-vector subspaces.

use nalgebra::Complex;

use super::{min_gain, BeamformResult, BeamformStatus, BeamformingMatrix, Method};
use crate::error::{Error, Result};
use crate::gating::check_graph;
use crate::graph::AmbiguityGraph;
use crate::linalg::{complement_basis, CMatrix};
use crate::real::Real;
use crate::scene::Scene;

/// Per-target subspaces of the decomposition
/// `R = U_k F_k U_k† + V_k G_k V_k†`.
///
/// `U_k` spans the complement of the neighbors' steering vectors and `V_k`
/// the complement of target `k`'s own steering vector. The coefficient
/// blocks are filled in when a decomposition is produced for a concrete
/// matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SubspaceDecomposition<T: Real> {
    pub u: Vec<CMatrix<T>>,
    pub v: Vec<CMatrix<T>>,
    pub f: Option<Vec<CMatrix<T>>>,
    pub g: Option<Vec<CMatrix<T>>>,
}

impl<T: Real> SubspaceDecomposition<T> {
    pub fn new(scene: &Scene<T>, graph: &AmbiguityGraph) -> Result<Self> {
        check_graph(scene, graph)?;
        let n = scene.n_antennas();
        let a = scene.steering_vectors();
        let u = (0..scene.n_targets())
            .map(|k| {
                let nb: Vec<_> = graph.neighbors(k).map(|j| a[j].clone()).collect();
                complement_basis(n, &nb)
            })
            .collect();
        let v = a.iter().map(|ak| complement_basis(n, std::slice::from_ref(ak))).collect();
        Ok(Self { u, v, f: None, g: None })
    }

    /// Fills `F_k`, `G_k` for `R = own_k + rest_k`, where `own_k` lies in
    /// the span of `U_k` and `rest_k` in the span of `V_k`.
    fn with_blocks(mut self, r: &CMatrix<T>, own: impl Fn(usize) -> CMatrix<T>) -> Self {
        let k_count = self.u.len();
        let mut f = Vec::with_capacity(k_count);
        let mut g = Vec::with_capacity(k_count);
        for k in 0..k_count {
            let ok = own(k);
            f.push(self.u[k].adjoint() * &ok * &self.u[k]);
            g.push(self.v[k].adjoint() * (r - ok) * &self.v[k]);
        }
        self.f = Some(f);
        self.g = Some(g);
        self
    }

    /// `U_k F_k U_k† + V_k G_k V_k†`, available once the blocks are set.
    pub fn reconstruct(&self, k: usize) -> Option<CMatrix<T>> {
        let f = self.f.as_ref()?.get(k)?;
        let g = self.g.as_ref()?.get(k)?;
        Some(&self.u[k] * f * self.u[k].adjoint() + &self.v[k] * g * self.v[k].adjoint())
    }
}

fn outer_sum<T: Real>(basis: &CMatrix<T>) -> CMatrix<T> {
    basis * basis.adjoint()
}

fn construction_result<T: Real>(
    r: CMatrix<T>,
    scene: &Scene<T>,
    method: Method,
) -> BeamformResult<T> {
    let objective = min_gain(&r, scene);
    let status = if objective > T::lit(1e-6) {
        BeamformStatus::Optimal
    } else {
        BeamformStatus::Infeasible
    };
    BeamformResult {
        matrix: BeamformingMatrix {
            entries: r,
            power_gain: objective,
        },
        status,
        objective,
        method,
        kkt_residual: None,
        iterations: 0,
    }
}

/// Equal-weight complete-graph design `R = (1/K) Σ_k u_k u_k†`, where `u_k`
/// is the unit vector orthogonal to every other target's steering vector.
///
/// Requires `K = N` and a full-rank steering matrix.
pub fn friedlander_solution<T: Real>(
    scene: &Scene<T>,
) -> Result<(BeamformResult<T>, SubspaceDecomposition<T>)> {
    let n = scene.n_antennas();
    let k_count = scene.n_targets();
    if k_count != n {
        return Err(Error::Construction(format!(
            "complete-graph design needs as many targets as antennas, got K={k_count}, N={n}"
        )));
    }
    let rank = scene.steering_matrix_rank();
    if rank < n {
        return Err(Error::RankDeficient { rank, needed: n });
    }
    let graph = AmbiguityGraph::complete(k_count);
    let dec = SubspaceDecomposition::new(scene, &graph)?;
    let weight = T::one() / T::from_count(k_count);
    let own = |k: usize| outer_sum(&dec.u[k]).scale(weight);
    let r = (0..k_count).fold(CMatrix::zeros(n, n), |acc, k| acc + own(k));
    let dec = dec.clone().with_blocks(&r, |k| outer_sum(&dec.u[k]).scale(weight));
    Ok((construction_result(r, scene, Method::Friedlander), dec))
}

/// Two-coloring design for path graphs with an even number of targets:
/// `R = (Ũ₁Ũ₁† + Ũ₂Ũ₂†)/(2N−K)`, with `Ũ₁` spanning the complement of the
/// even-indexed steering vectors and `Ũ₂` that of the odd-indexed ones.
///
/// Requires `K` even with `2 ≤ K ≤ 2N−2`.
pub fn two_coloring_solution<T: Real>(
    scene: &Scene<T>,
) -> Result<(BeamformResult<T>, SubspaceDecomposition<T>)> {
    let n = scene.n_antennas();
    let k_count = scene.n_targets();
    if !k_count.is_multiple_of(2) {
        return Err(Error::Construction(format!("K={k_count} is odd")));
    }
    if k_count + 2 > 2 * n {
        return Err(Error::Construction(format!(
            "K={k_count} exceeds 2N-2={} so N-K/2 < 1",
            (2 * n).saturating_sub(2)
        )));
    }
    let a = scene.steering_vectors();
    let even: Vec<_> = a.iter().step_by(2).cloned().collect();
    let odd: Vec<_> = a.iter().skip(1).step_by(2).cloned().collect();
    let u1 = complement_basis(n, &even);
    let u2 = complement_basis(n, &odd);
    if u1.ncols() != n - k_count / 2 || u2.ncols() != n - k_count / 2 {
        return Err(Error::RankDeficient {
            rank: n - u1.ncols().min(u2.ncols()),
            needed: k_count / 2,
        });
    }
    let scale = T::one() / T::from_count(2 * n - k_count);
    let p1 = outer_sum(&u1).scale(scale);
    let p2 = outer_sum(&u2).scale(scale);
    let r = &p1 + &p2;
    let graph = AmbiguityGraph::path(k_count);
    // odd-indexed targets are covered by Ũ₁, even-indexed ones by Ũ₂
    let dec = SubspaceDecomposition::new(scene, &graph)?
        .with_blocks(&r, |k| if k % 2 == 0 { p2.clone() } else { p1.clone() });
    Ok((construction_result(r, scene, Method::TwoColoring), dec))
}

/// Per-target gain `a_k† Ũ Ũ† a_k / (2N−K)` of the two-coloring design,
/// evaluated from its own color class only.
pub fn two_coloring_gains<T: Real>(scene: &Scene<T>) -> Vec<T> {
    let n = scene.n_antennas();
    let k_count = scene.n_targets();
    let a = scene.steering_vectors();
    let even: Vec<_> = a.iter().step_by(2).cloned().collect();
    let odd: Vec<_> = a.iter().skip(1).step_by(2).cloned().collect();
    let u1 = complement_basis(n, &even);
    let u2 = complement_basis(n, &odd);
    let denom = T::from_count((2 * n).saturating_sub(k_count).max(1));
    a.iter()
        .enumerate()
        .map(|(k, ak)| {
            let u = if k % 2 == 0 { &u2 } else { &u1 };
            let proj = u.adjoint() * ak;
            proj.iter().fold(T::zero(), |acc, z: &Complex<T>| acc + z.norm_sqr()) / denom
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::beamform::{constraint_residuals, solve, BeamformOptions};
    use crate::linalg::trace_re;
    use crate::scene::{uniform_scene, PriorParams};

    fn uniform(n: usize, k: usize) -> Scene<f64> {
        uniform_scene(n, k, &PriorParams::default()).unwrap()
    }

    #[test]
    fn friedlander_zero_forces_everything() {
        let s = uniform(3, 3);
        let (r, dec) = friedlander_solution(&s).unwrap();
        let res = constraint_residuals(&r.matrix.entries, &s, &AmbiguityGraph::complete(3));
        assert!(res.max_cross_term < 1e-9);
        assert!(res.within(0.0));
        let sdp = solve(&s, &AmbiguityGraph::complete(3), &BeamformOptions::default()).unwrap();
        assert!(r.objective <= sdp.objective + 1e-6);
        for k in 0..3 {
            let rk = dec.reconstruct(k).unwrap();
            assert!((rk - &r.matrix.entries).norm() < 1e-10);
        }
    }

    #[test]
    fn friedlander_trace_and_preconditions() {
        let (r, _) = friedlander_solution(&uniform(2, 2)).unwrap();
        assert!((trace_re(&r.matrix.entries) - 1.0).abs() < 1e-12);
        assert!(matches!(
            friedlander_solution(&uniform(3, 2)),
            Err(Error::Construction(_))
        ));
    }

    #[test]
    fn two_coloring_n3_k4() {
        let s = uniform(3, 4);
        let (r, dec) = two_coloring_solution(&s).unwrap();
        assert!(r.is_optimal());
        let res = constraint_residuals(&r.matrix.entries, &s, &AmbiguityGraph::path(4));
        assert!(res.max_cross_term < 1e-9, "{res:?}");
        assert!(res.within(0.0));
        let analytic = two_coloring_gains(&s);
        let g = crate::beamform::gains(&r.matrix.entries, &s);
        for (x, y) in g.iter().zip(&analytic) {
            assert!(x + 1e-12 >= *y);
        }
        for k in 0..4 {
            let rk = dec.reconstruct(k).unwrap();
            assert!((rk - &r.matrix.entries).norm() < 1e-10);
            let f = &dec.f.as_ref().unwrap()[k];
            assert_eq!(f.nrows(), dec.u[k].ncols());
        }
    }

    #[test]
    fn two_coloring_rejects_bad_sizes() {
        assert!(matches!(two_coloring_solution(&uniform(4, 8)), Err(Error::Construction(_))));
        assert!(matches!(two_coloring_solution(&uniform(4, 3)), Err(Error::Construction(_))));
    }

    #[test]
    fn decomposition_subspaces() {
        let s = uniform(4, 4);
        let g = AmbiguityGraph::path(4);
        let dec = SubspaceDecomposition::new(&s, &g).unwrap();
        let a = s.steering_vectors();
        for k in 0..4 {
            assert_eq!(dec.u[k].ncols(), 4 - g.degree(k));
            assert_eq!(dec.v[k].ncols(), 3);
            for j in g.neighbors(k) {
                assert!((dec.u[k].adjoint() * &a[j]).norm() < 1e-9);
            }
            assert!((dec.v[k].adjoint() * &a[k]).norm() < 1e-9);
        }
    }
}
