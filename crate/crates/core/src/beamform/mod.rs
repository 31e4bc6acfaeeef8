//! Ambiguity-aware transmit beamforming.
//!
//! The design problem is
//!
//! ```text
//!   maximize    min_k a_k† R a_k
//!   subject to  a_k† R a_k' = 0        for every edge (k, k') of G
//!               tr(R) = 1,  R ⪰ 0
//! ```
//!
//! with `a_k` the steering vector of target `k`. With a positive
//! interference bound `δ` the equalities become `|a_k† R a_k'| ≤ δ`.
//! [`solve`] casts the problem as a real semidefinite program and runs the
//! interior-point solver from [`crate::sdp`]. Closed-form designs for
//! complete graphs and two-colorable paths live in [`construct`].

pub mod construct;
pub mod identify;

use nalgebra::{Complex, ComplexField, DMatrix, DVector, SymmetricEigen};

use crate::error::Result;
use crate::gating::check_graph;
use crate::graph::AmbiguityGraph;
use crate::linalg::{embed, hermitian_part, project_psd, sesquilinear, trace_re, unembed, CMatrix, CVector};
use crate::real::Real;
use crate::scene::{Scene, RANK_TOLERANCE};
use crate::sdp::{solve_sdp, Block, BlockKind, SdpProblem, SdpSettings, SdpStatus};

pub use construct::{friedlander_solution, two_coloring_solution, SubspaceDecomposition};
pub use identify::{feasibility_probe, identifiability, IdentifiabilityEntry, IdentifiabilityReport};

/// Hermitian PSD unit-trace transmit covariance together with the power
/// gain it achieves on the scene it was designed for.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamformingMatrix<T: Real> {
    pub entries: CMatrix<T>,
    pub power_gain: T,
}

impl<T: Real> BeamformingMatrix<T> {
    pub fn n_antennas(&self) -> usize {
        self.entries.nrows()
    }

    pub fn trace(&self) -> T {
        trace_re(&self.entries)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BeamformStatus {
    /// A valid design; for [`solve`] also certified optimal.
    Optimal,
    Infeasible,
    NumericalFailure,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Sdp,
    Friedlander,
    TwoColoring,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BeamformResult<T: Real> {
    pub matrix: BeamformingMatrix<T>,
    pub status: BeamformStatus,
    /// `P(G)`, the smallest per-target gain of the returned matrix; for an
    /// infeasible solve, the clipped epigraph value of the solver.
    pub objective: T,
    pub method: Method,
    /// Largest relative KKT residual of the interior-point solve.
    pub kkt_residual: Option<T>,
    pub iterations: usize,
}

impl<T: Real> BeamformResult<T> {
    pub fn objective_db(&self) -> T {
        crate::real::to_db(self.objective)
    }

    pub fn is_optimal(&self) -> bool {
        self.status == BeamformStatus::Optimal
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeamformOptions<T> {
    /// Bound `δ` on `|a_k† R a_k'|` over edges; zero imposes equalities.
    pub interference_bound: T,
    /// Largest KKT residual accepted for an optimality certificate.
    pub kkt_tolerance: T,
    /// Gains at or below this level count as "no solution".
    pub feasibility_tolerance: T,
    pub sdp: SdpSettings<T>,
}

impl<T: Real> Default for BeamformOptions<T> {
    fn default() -> Self {
        let floor = T::lit(1e3) * T::epsilon();
        Self {
            interference_bound: T::zero(),
            kkt_tolerance: T::lit(1e-6).max(floor),
            feasibility_tolerance: T::lit(1e-6).max(floor),
            sdp: SdpSettings {
                tolerance: T::lit(1e-9).max(T::lit(10.0) * floor),
                max_iterations: 120,
            },
        }
    }
}

/// Constraint violations of a candidate beamforming matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstraintResiduals<T> {
    pub trace_error: T,
    pub hermitian_error: T,
    pub min_eigenvalue: T,
    /// Largest `|a_k† R a_k'|` over the edges of the graph.
    pub max_cross_term: T,
}

impl<T: Real> ConstraintResiduals<T> {
    /// Tolerances: trace 1e-8, PSD −1e-8, Hermitian 1e-9, cross terms
    /// `delta + 1e-7`.
    pub fn within(&self, delta: T) -> bool {
        self.trace_error <= T::lit(1e-8)
            && self.hermitian_error <= T::lit(1e-9)
            && self.min_eigenvalue >= -T::lit(1e-8)
            && self.max_cross_term <= delta + T::lit(1e-7)
    }
}

/// `a_k† R a_k` for every target.
pub fn gains<T: Real>(r: &CMatrix<T>, scene: &Scene<T>) -> Vec<T> {
    scene
        .steering_vectors()
        .iter()
        .map(|a| sesquilinear(a, r, a).re)
        .collect()
}

pub fn min_gain<T: Real>(r: &CMatrix<T>, scene: &Scene<T>) -> T {
    gains(r, scene)
        .into_iter()
        .fold(T::max_value().unwrap(), |a, b| a.min(b))
}

pub fn cross_term<T: Real>(r: &CMatrix<T>, scene: &Scene<T>, k: usize, kprime: usize) -> Complex<T> {
    sesquilinear(&scene.steering(k), r, &scene.steering(kprime))
}

pub fn constraint_residuals<T: Real>(
    r: &CMatrix<T>,
    scene: &Scene<T>,
    graph: &AmbiguityGraph,
) -> ConstraintResiduals<T> {
    let hermitian_error = (r - r.adjoint())
        .iter()
        .fold(T::zero(), |acc, z| acc.max(z.modulus()));
    let max_cross_term = graph
        .edges()
        .map(|(k, kp)| cross_term(r, scene, k, kp).modulus())
        .fold(T::zero(), |a, b| a.max(b));
    ConstraintResiduals {
        trace_error: (trace_re(r) - T::one()).abs(),
        hermitian_error,
        min_eigenvalue: crate::linalg::min_eigenvalue(r),
        max_cross_term,
    }
}

/// `|a_k† R a(θ)|` over an azimuth grid (radians).
pub fn beam_pattern<T: Real>(r: &CMatrix<T>, scene: &Scene<T>, k: usize, grid: &[T]) -> Result<Vec<T>> {
    scene.target(k)?;
    let ak = scene.steering(k);
    let rak = r.adjoint() * &ak;
    Ok(grid
        .iter()
        .map(|&theta| rak.dotc(&scene.array().steering(theta)).modulus())
        .collect())
}

/// Returns `W` with `W W† = R`, clipping eigenvalues above `−1e-8` to zero.
pub fn factor<T: Real>(r: &CMatrix<T>) -> CMatrix<T> {
    let eig = SymmetricEigen::new(hermitian_part(r));
    let v = &eig.eigenvectors;
    CMatrix::from_fn(v.nrows(), v.ncols(), |i, j| {
        v[(i, j)].scale(eig.eigenvalues[j].max(T::zero()).sqrt())
    })
}

/// Real and imaginary parts of the cross term as Hermitian matrices:
/// `tr(R·H_re) = Re(a_k† R a_k')`, `tr(R·H_im) = Im(a_k† R a_k')`.
pub(crate) fn cross_parts<T: Real>(ak: &CVector<T>, akp: &CVector<T>) -> (CMatrix<T>, CMatrix<T>) {
    let c = akp * ak.adjoint();
    let ca = c.adjoint();
    let half = T::lit(0.5);
    let re = (&c + &ca).scale(half);
    let im = (&c - &ca) * Complex::new(T::zero(), -half);
    (re, im)
}

/// Frobenius-orthonormal basis of the span of the zero-forcing constraint
/// matrices of `graph`.
pub(crate) fn zero_forcing_basis<T: Real>(scene: &Scene<T>, graph: &AmbiguityGraph) -> Vec<CMatrix<T>> {
    let n = scene.n_antennas();
    let a = scene.steering_vectors();
    let mut columns: Vec<DVector<T>> = Vec::new();
    for (k, kp) in graph.edges() {
        let (re, im) = cross_parts(&a[k], &a[kp]);
        for h in [re, im] {
            columns.push(DVector::from_iterator(
                2 * n * n,
                h.iter().flat_map(|z| [z.re, z.im]),
            ));
        }
    }
    if columns.is_empty() {
        return Vec::new();
    }
    let svd = DMatrix::from_columns(&columns).svd(true, false);
    let u = svd.u.expect("left singular vectors requested");
    let largest = svd.singular_values.iter().copied().fold(T::zero(), |x, y| x.max(y));
    let cutoff = largest * T::lit(RANK_TOLERANCE);
    (0..svd.singular_values.len())
        .filter(|&i| svd.singular_values[i] > cutoff)
        .map(|i| {
            let col = u.column(i);
            let m = CMatrix::from_fn(n, n, |r, c| {
                // nalgebra storage is column-major, matching `h.iter()` above
                let idx = 2 * (c * n + r);
                Complex::new(col[idx], col[idx + 1])
            });
            hermitian_part(&m)
        })
        .collect()
}

fn herm_block<T: Real>(h: &CMatrix<T>) -> Block<T> {
    Block::Psd(embed(h) * T::lit(0.5))
}

fn sym_entry<T: Real>(n: usize, i: usize, j: usize) -> Block<T> {
    let mut m = DMatrix::zeros(n, n);
    if i == j {
        m[(i, i)] = T::one();
    } else {
        m[(i, j)] = T::lit(0.5);
        m[(j, i)] = T::lit(0.5);
    }
    Block::Psd(m)
}

fn lp_unit<T: Real>(len: usize, entries: &[(usize, T)]) -> Block<T> {
    let mut v = DVector::zeros(len);
    for &(i, x) in entries {
        v[i] += x;
    }
    Block::Lp(v)
}

/// Projects onto `{R : tr(R) = 1, <Q_i, R> = 0}` for an orthonormal `Q`.
/// Returns `None` when the zero-forcing constraints force `tr(R) = 0`.
fn affine_project<T: Real>(r: &CMatrix<T>, basis: &[CMatrix<T>]) -> Option<CMatrix<T>> {
    let n = r.nrows();
    let remove = |m: &CMatrix<T>| {
        let mut out = m.clone();
        for q in basis {
            let c = q.dotc(m).re;
            out -= q.scale(c);
        }
        out
    };
    let ident = remove(&CMatrix::identity(n, n));
    let norm2 = ident.norm_squared();
    if norm2 <= T::lit(1e-12) {
        return None;
    }
    let mut out = remove(r);
    let shift = (T::one() - trace_re(&out)) / norm2;
    out += ident.scale(shift);
    Some(hermitian_part(&out))
}

/// Alternating projections between the affine constraint set and the PSD
/// cone, ending on the affine set.
fn polish<T: Real>(r: &CMatrix<T>, basis: &[CMatrix<T>]) -> Option<CMatrix<T>> {
    let mut cur = affine_project(r, basis)?;
    for _ in 0..200 {
        if crate::linalg::min_eigenvalue(&cur) >= -T::lit(1e-12).max(T::lit(10.0) * T::epsilon()) {
            break;
        }
        cur = affine_project(&project_psd(&cur), basis)?;
    }
    Some(cur)
}

/// PSD projection followed by trace renormalization.
fn normalize_psd<T: Real>(r: &CMatrix<T>) -> Option<CMatrix<T>> {
    let p = project_psd(r);
    let tr = trace_re(&p);
    (tr > T::zero()).then(|| p.unscale(tr))
}

/// Solves the ambiguity-aware beamforming problem for `graph`.
pub fn solve<T: Real>(
    scene: &Scene<T>,
    graph: &AmbiguityGraph,
    options: &BeamformOptions<T>,
) -> Result<BeamformResult<T>> {
    check_graph(scene, graph)?;
    let delta = options.interference_bound;
    if !(delta >= T::zero()) {
        return Err(crate::Error::InvalidParameter(
            "interference bound must be nonnegative".into(),
        ));
    }
    let n = scene.n_antennas();
    let k_count = scene.n_targets();
    let a = scene.steering_vectors();
    let relaxed = delta > T::zero();
    let edges: Vec<(usize, usize)> = graph.edges().collect();

    let mut kinds = vec![BlockKind::Psd(2 * n)];
    if relaxed {
        kinds.extend(edges.iter().map(|_| BlockKind::Psd(3)));
    }
    let lp = kinds.len();
    let lp_len = 2 + k_count;
    kinds.push(BlockKind::Lp(lp_len));

    let mut problem = SdpProblem::new(kinds);
    problem.add_objective(lp, lp_unit(lp_len, &[(1, -T::one())]));
    problem.add_constraint(
        vec![
            (0, herm_block(&CMatrix::identity(n, n))),
            (lp, lp_unit(lp_len, &[(0, T::one())])),
        ],
        T::one(),
    );
    for (k, ak) in a.iter().enumerate() {
        problem.add_constraint(
            vec![
                (0, herm_block(&(ak * ak.adjoint()))),
                (lp, lp_unit(lp_len, &[(1, -T::one()), (2 + k, -T::one())])),
            ],
            T::zero(),
        );
    }
    let basis = if relaxed {
        for (e, &(k, kp)) in edges.iter().enumerate() {
            let blk = 1 + e;
            let (re, im) = cross_parts(&a[k], &a[kp]);
            for i in 0..3 {
                problem.add_constraint(vec![(blk, sym_entry(3, i, i))], delta);
            }
            problem.add_constraint(vec![(blk, sym_entry(3, 1, 2))], T::zero());
            for (j, h) in [(1, re), (2, im)] {
                problem.add_constraint(
                    vec![(blk, sym_entry(3, 0, j)), (0, herm_block(&(-h)))],
                    T::zero(),
                );
            }
        }
        Vec::new()
    } else {
        let basis = zero_forcing_basis(scene, graph);
        for q in &basis {
            problem.add_constraint(vec![(0, herm_block(q))], T::zero());
        }
        basis
    };

    let sol = solve_sdp(&problem, options.sdp);
    let raw = unembed(sol.x.blocks[0].as_psd().expect("psd block"));
    let t_raw = sol.x.blocks[lp].as_lp().expect("lp block")[1];
    let kkt = sol.kkt_residual();
    let certified = kkt <= options.kkt_tolerance && sol.status != SdpStatus::Stalled;

    let polished = if relaxed { normalize_psd(&raw) } else { polish(&raw, &basis) };
    let (entries, objective) = match polished {
        Some(r) => {
            let g = min_gain(&r, scene);
            (r, g)
        }
        None => (CMatrix::zeros(n, n), T::zero()),
    };
    let eps = options.feasibility_tolerance;
    let status = if t_raw <= eps || objective <= eps {
        if certified || t_raw <= eps {
            BeamformStatus::Infeasible
        } else {
            BeamformStatus::NumericalFailure
        }
    } else if certified {
        BeamformStatus::Optimal
    } else {
        BeamformStatus::NumericalFailure
    };
    let objective = if status == BeamformStatus::Infeasible {
        t_raw.max(T::zero())
    } else {
        objective
    };
    Ok(BeamformResult {
        matrix: BeamformingMatrix {
            entries,
            power_gain: objective,
        },
        status,
        objective,
        method: Method::Sdp,
        kkt_residual: Some(kkt),
        iterations: sol.iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::GraphKind;
    use crate::scene::{uniform_scene, PriorParams};

    fn uniform(n: usize, k: usize) -> Scene<f64> {
        uniform_scene(n, k, &PriorParams::default()).unwrap()
    }

    fn run(n: usize, k: usize, kind: GraphKind) -> BeamformResult<f64> {
        let s = uniform(n, k);
        solve(&s, &AmbiguityGraph::standard(k, kind), &BeamformOptions::default()).unwrap()
    }

    #[test]
    fn example_four_complete_and_path() {
        let c = run(3, 3, GraphKind::Complete);
        let p = run(3, 3, GraphKind::Path);
        assert!(c.is_optimal() && p.is_optimal());
        // convex-solver oracle values
        assert!((c.objective_db() - (-3.153)).abs() < 0.01, "{}", c.objective_db());
        assert!((p.objective_db() - 1.110).abs() < 0.01, "{}", p.objective_db());
    }

    #[test]
    fn single_target_gain_is_n() {
        for n in 1..=8 {
            let r = run(n, 1, GraphKind::Empty);
            assert!(r.is_optimal());
            assert!((r.objective - n as f64).abs() < 1e-6, "N={n}: {}", r.objective);
            let a = uniform(n, 1).steering(0);
            let expected = (&a * a.adjoint()).unscale(n as f64);
            assert!((&r.matrix.entries - expected).norm() < 1e-5);
        }
    }

    #[test]
    fn complete_graph_beyond_n_is_infeasible() {
        let r = run(3, 4, GraphKind::Complete);
        assert_eq!(r.status, BeamformStatus::Infeasible);
    }

    #[test]
    fn result_satisfies_constraints() {
        let s = uniform(4, 5);
        let g = AmbiguityGraph::path(5);
        let r = solve(&s, &g, &BeamformOptions::default()).unwrap();
        assert!(r.is_optimal());
        let res = constraint_residuals(&r.matrix.entries, &s, &g);
        assert!(res.within(0.0), "{res:?}");
        assert!((min_gain(&r.matrix.entries, &s) - r.objective).abs() < 1e-12);
    }

    #[test]
    fn relaxed_bound_is_respected_and_helps() {
        let s = uniform(3, 3);
        let g = AmbiguityGraph::complete(3);
        let strict = solve(&s, &g, &BeamformOptions::default()).unwrap();
        let opts = BeamformOptions {
            interference_bound: 0.05,
            ..BeamformOptions::default()
        };
        let loose = solve(&s, &g, &opts).unwrap();
        assert!(loose.is_optimal());
        let res = constraint_residuals(&loose.matrix.entries, &s, &g);
        assert!(res.within(0.05), "{res:?}");
        assert!(loose.objective >= strict.objective - 1e-6);
    }

    #[test]
    fn beam_pattern_nulls_and_peak() {
        let s = uniform(3, 3);
        let c = run(3, 3, GraphKind::Complete);
        let p = run(3, 3, GraphKind::Path);
        let thetas: Vec<f64> = s.targets().iter().map(|t| t.azimuth).collect();
        let pc = beam_pattern(&c.matrix.entries, &s, 0, &thetas).unwrap();
        let pp = beam_pattern(&p.matrix.entries, &s, 0, &thetas).unwrap();
        assert!(pc[1] < 1e-7 && pc[2] < 1e-7);
        assert!(pp[1] < 1e-7);
        assert!(pp[2] > 1e-3, "path pattern has no null at the third target");
        let g = gains(&c.matrix.entries, &s);
        assert!((pc[0] - g[0]).abs() < 1e-9);
    }

    #[test]
    fn factor_reconstructs() {
        let p = run(3, 3, GraphKind::Path);
        let w = factor(&p.matrix.entries);
        assert!((&w * w.adjoint() - &p.matrix.entries).norm() < 1e-8);
        let ident = CMatrix::<f64>::identity(4, 4).unscale(4.0);
        let w = factor(&ident);
        assert!((&w * w.adjoint() - &ident).norm() < 1e-12);
    }

    #[test]
    fn zero_forcing_basis_rank() {
        // N=3, complete on 4 targets: the equalities pin R to zero
        let s = uniform(3, 4);
        let basis = zero_forcing_basis(&s, &AmbiguityGraph::complete(4));
        assert_eq!(basis.len(), 9);
        let s = uniform(3, 3);
        let basis = zero_forcing_basis(&s, &AmbiguityGraph::path(3));
        assert_eq!(basis.len(), 4);
    }

    #[test]
    fn single_precision_solve() {
        let s = uniform_scene::<f32>(3, 3, &PriorParams::default()).unwrap();
        let r = solve(&s, &AmbiguityGraph::path(3), &BeamformOptions::default()).unwrap();
        assert!((r.objective_db() - 1.110).abs() < 0.05, "{}", r.objective_db());
    }
}
