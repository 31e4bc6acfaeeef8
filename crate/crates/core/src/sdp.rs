//! Dense primal-dual interior-point solver for block-diagonal semidefinite
//! programs in standard form:
//!
//! ```text
//!   minimize    <C, X>
//!   subject to  <A_i, X> = b_i,   i = 1..m
//!               X ⪰ 0
//! ```
//!
//! `X` is block diagonal with symmetric PSD blocks and nonnegative diagonal
//! (LP) blocks. The dual is `max b'y  s.t.  Σ y_i A_i + Z = C,  Z ⪰ 0`.
//!
//! Search directions are the HKM (H..K..M) direction combined with a
//! Mehrotra predictor-corrector step, starting from an infeasible scaled
//! identity. Problems here are small (matrices up to a few dozen rows) so
//! everything is dense and the Schur complement is factored by Cholesky.

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};

use crate::real::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlockKind {
    Psd(usize),
    Lp(usize),
}

impl BlockKind {
    fn dim(&self) -> usize {
        match *self {
            BlockKind::Psd(n) | BlockKind::Lp(n) => n,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Block<T: Real> {
    Psd(DMatrix<T>),
    Lp(DVector<T>),
}

impl<T: Real> Block<T> {
    fn zeros(kind: BlockKind) -> Self {
        match kind {
            BlockKind::Psd(n) => Block::Psd(DMatrix::zeros(n, n)),
            BlockKind::Lp(n) => Block::Lp(DVector::zeros(n)),
        }
    }

    fn identity(kind: BlockKind, scale: T) -> Self {
        match kind {
            BlockKind::Psd(n) => Block::Psd(DMatrix::identity(n, n) * scale),
            BlockKind::Lp(n) => Block::Lp(DVector::from_element(n, scale)),
        }
    }

    /// Entrywise inner product; equals `tr(A·B)` for symmetric blocks.
    fn inner(&self, other: &Self) -> T {
        match (self, other) {
            (Block::Psd(a), Block::Psd(b)) => a.dot(b),
            (Block::Lp(a), Block::Lp(b)) => a.dot(b),
            _ => panic!("block kind mismatch"),
        }
    }

    fn axpy(&mut self, alpha: T, other: &Self) {
        match (self, other) {
            (Block::Psd(a), Block::Psd(b)) => *a += b * alpha,
            (Block::Lp(a), Block::Lp(b)) => a.axpy(alpha, b, T::one()),
            _ => panic!("block kind mismatch"),
        }
    }

    fn norm_squared(&self) -> T {
        match self {
            Block::Psd(a) => a.norm_squared(),
            Block::Lp(a) => a.norm_squared(),
        }
    }

    pub fn as_psd(&self) -> Option<&DMatrix<T>> {
        match self {
            Block::Psd(m) => Some(m),
            Block::Lp(_) => None,
        }
    }

    pub fn as_lp(&self) -> Option<&DVector<T>> {
        match self {
            Block::Lp(v) => Some(v),
            Block::Psd(_) => None,
        }
    }
}

/// Block-diagonal symmetric matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockMatrix<T: Real> {
    pub blocks: Vec<Block<T>>,
}

impl<T: Real> BlockMatrix<T> {
    pub fn zeros(kinds: &[BlockKind]) -> Self {
        Self {
            blocks: kinds.iter().map(|&k| Block::zeros(k)).collect(),
        }
    }

    fn identity(kinds: &[BlockKind], scale: T) -> Self {
        Self {
            blocks: kinds.iter().map(|&k| Block::identity(k, scale)).collect(),
        }
    }

    pub fn inner(&self, other: &Self) -> T {
        self.blocks
            .iter()
            .zip(&other.blocks)
            .fold(T::zero(), |acc, (a, b)| acc + a.inner(b))
    }

    fn axpy(&mut self, alpha: T, other: &Self) {
        for (a, b) in self.blocks.iter_mut().zip(&other.blocks) {
            a.axpy(alpha, b);
        }
    }

    fn norm(&self) -> T {
        self.blocks.iter().fold(T::zero(), |acc, b| acc + b.norm_squared()).sqrt()
    }
}

/// One constraint matrix `A_i`, stored as its nonzero blocks.
pub type SparseBlocks<T> = Vec<(usize, Block<T>)>;

#[derive(Debug, Clone)]
pub struct SdpProblem<T: Real> {
    kinds: Vec<BlockKind>,
    c: BlockMatrix<T>,
    a: Vec<SparseBlocks<T>>,
    b: Vec<T>,
}

impl<T: Real> SdpProblem<T> {
    pub fn new(kinds: Vec<BlockKind>) -> Self {
        let c = BlockMatrix::zeros(&kinds);
        Self {
            kinds,
            c,
            a: Vec::new(),
            b: Vec::new(),
        }
    }

    pub fn kinds(&self) -> &[BlockKind] {
        &self.kinds
    }

    pub fn n_constraints(&self) -> usize {
        self.a.len()
    }

    /// Adds `block` to block `index` of the cost matrix.
    pub fn add_objective(&mut self, index: usize, block: Block<T>) {
        self.c.blocks[index].axpy(T::one(), &block);
    }

    pub fn add_constraint(&mut self, entries: SparseBlocks<T>, rhs: T) {
        for (index, block) in &entries {
            let ok = matches!(
                (self.kinds[*index], block),
                (BlockKind::Psd(n), Block::Psd(m)) if m.nrows() == n && m.ncols() == n
            ) || matches!(
                (self.kinds[*index], block),
                (BlockKind::Lp(n), Block::Lp(v)) if v.len() == n
            );
            assert!(ok, "constraint block {index} does not match the problem layout");
        }
        self.a.push(entries);
        self.b.push(rhs);
    }

    fn apply(&self, x: &BlockMatrix<T>) -> DVector<T> {
        DVector::from_iterator(
            self.a.len(),
            self.a.iter().map(|ai| {
                ai.iter()
                    .fold(T::zero(), |acc, (k, blk)| acc + blk.inner(&x.blocks[*k]))
            }),
        )
    }

    fn apply_adjoint(&self, y: &DVector<T>) -> BlockMatrix<T> {
        let mut out = BlockMatrix::zeros(&self.kinds);
        for (ai, &yi) in self.a.iter().zip(y.iter()) {
            for (k, blk) in ai {
                out.blocks[*k].axpy(yi, blk);
            }
        }
        out
    }

    fn constraint_norm(&self, i: usize) -> T {
        self.a[i]
            .iter()
            .fold(T::zero(), |acc, (_, b)| acc + b.norm_squared())
            .sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SdpSettings<T> {
    /// Target for the relative primal/dual infeasibilities and the gap.
    pub tolerance: T,
    pub max_iterations: usize,
}

impl<T: Real> Default for SdpSettings<T> {
    fn default() -> Self {
        Self {
            tolerance: T::lit(1e-9),
            max_iterations: 120,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SdpStatus {
    Converged,
    MaxIterations,
    /// Factorization failure or vanishing step lengths.
    Stalled,
}

#[derive(Debug, Clone)]
pub struct SdpSolution<T: Real> {
    pub x: BlockMatrix<T>,
    pub y: DVector<T>,
    pub z: BlockMatrix<T>,
    pub status: SdpStatus,
    pub iterations: usize,
    pub primal_objective: T,
    pub dual_objective: T,
    /// `‖b − A(X)‖ / (1 + ‖b‖)`.
    pub primal_infeasibility: T,
    /// `‖C − Aᵀ(y) − Z‖ / (1 + ‖C‖)`.
    pub dual_infeasibility: T,
    /// `max(|pobj − dobj|, <X,Z>) / (1 + |pobj| + |dobj|)`.
    pub relative_gap: T,
}

impl<T: Real> SdpSolution<T> {
    /// Largest of the three optimality residuals.
    pub fn kkt_residual(&self) -> T {
        self.primal_infeasibility
            .max(self.dual_infeasibility)
            .max(self.relative_gap)
    }
}

struct Iterate<T: Real> {
    x: BlockMatrix<T>,
    y: DVector<T>,
    z: BlockMatrix<T>,
}

struct Measures<T> {
    pobj: T,
    dobj: T,
    pinf: T,
    dinf: T,
    gap: T,
}

/// Inverse of a symmetric positive definite block, `None` if not PD.
fn spd_inverse<T: Real>(m: &DMatrix<T>) -> Option<DMatrix<T>> {
    Cholesky::new(m.clone()).map(|c| c.inverse())
}

/// Largest `alpha` with `X + alpha·dX ⪰ 0` (infinite when `dX ⪰ 0`).
fn max_step<T: Real>(x: &Block<T>, dx: &Block<T>) -> Option<T> {
    match (x, dx) {
        (Block::Psd(x), Block::Psd(dx)) => {
            let chol = Cholesky::new(x.clone())?;
            let l = chol.l();
            let left = l.solve_lower_triangular(dx)?;
            let s = l.solve_lower_triangular(&left.transpose())?;
            let s = (&s + s.transpose()) * T::lit(0.5);
            let lmin = SymmetricEigen::new(s)
                .eigenvalues
                .iter()
                .copied()
                .fold(T::max_value().unwrap(), |a, b| a.min(b));
            Some(if lmin < T::zero() { -T::one() / lmin } else { T::max_value().unwrap() })
        }
        (Block::Lp(x), Block::Lp(dx)) => {
            let mut step = T::max_value().unwrap();
            for (xi, dxi) in x.iter().zip(dx.iter()) {
                if *dxi < T::zero() {
                    step = step.min(-*xi / *dxi);
                }
            }
            Some(step)
        }
        _ => None,
    }
}

fn max_step_all<T: Real>(x: &BlockMatrix<T>, dx: &BlockMatrix<T>) -> Option<T> {
    let mut step = T::max_value().unwrap();
    for (b, db) in x.blocks.iter().zip(&dx.blocks) {
        step = step.min(max_step(b, db)?);
    }
    Some(step)
}

pub struct SdpSolver<'a, T: Real> {
    problem: &'a SdpProblem<T>,
    settings: SdpSettings<T>,
    /// For each block, the constraints touching it.
    touching: Vec<Vec<(usize, usize)>>,
}

impl<'a, T: Real> SdpSolver<'a, T> {
    pub fn new(problem: &'a SdpProblem<T>, settings: SdpSettings<T>) -> Self {
        let mut touching = vec![Vec::new(); problem.kinds.len()];
        for (i, ai) in problem.a.iter().enumerate() {
            for (slot, (k, _)) in ai.iter().enumerate() {
                touching[*k].push((i, slot));
            }
        }
        Self {
            problem,
            settings,
            touching,
        }
    }

    fn measures(&self, it: &Iterate<T>, rp: &DVector<T>, rd: &BlockMatrix<T>) -> Measures<T> {
        let p = self.problem;
        let b = DVector::from_vec(p.b.clone());
        let pobj = p.c.inner(&it.x);
        let dobj = b.dot(&it.y);
        let pinf = rp.norm() / (T::one() + b.norm());
        let dinf = rd.norm() / (T::one() + p.c.norm());
        let xz = it.x.inner(&it.z);
        let gap = (pobj - dobj).abs().max(xz) / (T::one() + pobj.abs() + dobj.abs());
        Measures {
            pobj,
            dobj,
            pinf,
            dinf,
            gap,
        }
    }

    /// Schur complement `M_ij = <A_i, X A_j Z⁻¹>`.
    fn schur(&self, x: &BlockMatrix<T>, zinv: &[Block<T>]) -> DMatrix<T> {
        let p = self.problem;
        let m = p.a.len();
        let mut schur = DMatrix::zeros(m, m);
        for (k, users) in self.touching.iter().enumerate() {
            match (&x.blocks[k], &zinv[k]) {
                (Block::Psd(xb), Block::Psd(zi)) => {
                    let g: Vec<DMatrix<T>> = users
                        .iter()
                        .map(|&(j, slot)| match &p.a[j][slot].1 {
                            Block::Psd(aj) => (xb * aj * zi).transpose(),
                            Block::Lp(_) => unreachable!(),
                        })
                        .collect();
                    for (ii, &(i, slot)) in users.iter().enumerate() {
                        let ai = match &p.a[i][slot].1 {
                            Block::Psd(ai) => ai,
                            Block::Lp(_) => unreachable!(),
                        };
                        for (jj, &(j, _)) in users.iter().enumerate().skip(ii) {
                            let v = ai.dot(&g[jj]);
                            schur[(i, j)] += v;
                            if i != j {
                                schur[(j, i)] += v;
                            }
                        }
                    }
                }
                (Block::Lp(xb), Block::Lp(zi)) => {
                    let w = xb.component_mul(zi);
                    for (ii, &(i, si)) in users.iter().enumerate() {
                        let ai = p.a[i][si].1.as_lp().expect("lp block");
                        let aw = ai.component_mul(&w);
                        for &(j, sj) in users.iter().skip(ii) {
                            let aj = p.a[j][sj].1.as_lp().expect("lp block");
                            let v = aw.dot(aj);
                            schur[(i, j)] += v;
                            if i != j {
                                schur[(j, i)] += v;
                            }
                        }
                    }
                }
                _ => unreachable!(),
            }
        }
        schur
    }

    /// Solves the Newton system for complementarity target `target`
    /// (`None` means zero, i.e. the affine-scaling predictor).
    #[allow(clippy::too_many_arguments)]
    fn direction(
        &self,
        it: &Iterate<T>,
        zinv: &[Block<T>],
        schur: &Factor<T>,
        rp: &DVector<T>,
        rd: &BlockMatrix<T>,
        target: Option<&BlockMatrix<T>>,
    ) -> Option<(BlockMatrix<T>, DVector<T>, BlockMatrix<T>)> {
        let p = self.problem;
        // H = T_c Z⁻¹ − X and W = X Rd Z⁻¹ − H, both possibly unsymmetric
        let mut h = Vec::with_capacity(p.kinds.len());
        let mut w = Vec::with_capacity(p.kinds.len());
        for k in 0..p.kinds.len() {
            match (&it.x.blocks[k], &zinv[k], &rd.blocks[k]) {
                (Block::Psd(xb), Block::Psd(zi), Block::Psd(rdb)) => {
                    let mut hb = -xb.clone();
                    if let Some(Block::Psd(tc)) = target.map(|t| &t.blocks[k]) {
                        hb += tc * zi;
                    }
                    let wb = xb * rdb * zi - &hb;
                    h.push(Block::Psd(hb));
                    w.push(Block::Psd(wb));
                }
                (Block::Lp(xb), Block::Lp(zi), Block::Lp(rdb)) => {
                    let mut hb = -xb.clone();
                    if let Some(Block::Lp(tc)) = target.map(|t| &t.blocks[k]) {
                        hb += tc.component_mul(zi);
                    }
                    let wb = xb.component_mul(rdb).component_mul(zi) - &hb;
                    h.push(Block::Lp(hb));
                    w.push(Block::Lp(wb));
                }
                _ => unreachable!(),
            }
        }
        let rhs = DVector::from_iterator(
            p.a.len(),
            p.a.iter().enumerate().map(|(i, ai)| {
                rp[i] + ai.iter().fold(T::zero(), |acc, (k, blk)| acc + blk.inner(&w[*k]))
            }),
        );
        let dy = schur.solve(&rhs)?;
        let mut dz = rd.clone();
        dz.axpy(-T::one(), &p.apply_adjoint(&dy));
        let mut dx = BlockMatrix { blocks: h };
        for k in 0..p.kinds.len() {
            match (&mut dx.blocks[k], &it.x.blocks[k], &dz.blocks[k], &zinv[k]) {
                (Block::Psd(dxb), Block::Psd(xb), Block::Psd(dzb), Block::Psd(zi)) => {
                    *dxb -= xb * dzb * zi;
                    let sym = (&*dxb + dxb.transpose()) * T::lit(0.5);
                    *dxb = sym;
                }
                (Block::Lp(dxb), Block::Lp(xb), Block::Lp(dzb), Block::Lp(zi)) => {
                    *dxb -= xb.component_mul(dzb).component_mul(zi);
                }
                _ => unreachable!(),
            }
        }
        Some((dx, dy, dz))
    }

    pub fn solve(&self) -> SdpSolution<T> {
        let p = self.problem;
        let m = p.a.len();
        let total_dim: usize = p.kinds.iter().map(BlockKind::dim).sum();
        let nn = T::from_count(total_dim);

        let ten = T::lit(10.0);
        let mut xi = ten.max(nn.sqrt());
        let mut eta = ten.max(nn.sqrt()).max(p.c.norm());
        for i in 0..m {
            let an = p.constraint_norm(i);
            xi = xi.max((T::one() + p.b[i].abs()) / (T::one() + an));
            eta = eta.max(an);
        }
        let mut it = Iterate {
            x: BlockMatrix::identity(&p.kinds, xi),
            y: DVector::zeros(m),
            z: BlockMatrix::identity(&p.kinds, eta),
        };
        let b = DVector::from_vec(p.b.clone());
        let tol = self.settings.tolerance;
        let mut status = SdpStatus::MaxIterations;
        let mut iterations = 0;
        let mut stalls = 0;

        let residuals = |it: &Iterate<T>| {
            let rp = &b - p.apply(&it.x);
            let mut rd = p.c.clone();
            rd.axpy(-T::one(), &p.apply_adjoint(&it.y));
            rd.axpy(-T::one(), &it.z);
            (rp, rd)
        };

        for iter in 0..self.settings.max_iterations {
            iterations = iter;
            let (rp, rd) = residuals(&it);
            let meas = self.measures(&it, &rp, &rd);
            if meas.pinf <= tol && meas.dinf <= tol && meas.gap <= tol {
                status = SdpStatus::Converged;
                break;
            }
            let mu = it.x.inner(&it.z) / nn;

            let zinv: Option<Vec<Block<T>>> = it
                .z
                .blocks
                .iter()
                .map(|blk| match blk {
                    Block::Psd(zb) => spd_inverse(zb).map(Block::Psd),
                    Block::Lp(zb) => Some(Block::Lp(zb.map(|v| T::one() / v))),
                })
                .collect();
            let Some(zinv) = zinv else {
                status = SdpStatus::Stalled;
                break;
            };
            let Some(schur) = Factor::new(self.schur(&it.x, &zinv)) else {
                status = SdpStatus::Stalled;
                break;
            };

            // predictor
            let Some((dx_a, _, dz_a)) = self.direction(&it, &zinv, &schur, &rp, &rd, None) else {
                status = SdpStatus::Stalled;
                break;
            };
            let (Some(ap), Some(ad)) = (max_step_all(&it.x, &dx_a), max_step_all(&it.z, &dz_a)) else {
                status = SdpStatus::Stalled;
                break;
            };
            let ap = ap.min(T::one());
            let ad = ad.min(T::one());
            let mut xa = it.x.clone();
            xa.axpy(ap, &dx_a);
            let mut za = it.z.clone();
            za.axpy(ad, &dz_a);
            let mu_aff = xa.inner(&za) / nn;
            let ratio = (mu_aff / mu).max(T::zero()).min(T::one());
            let sigma = ratio * ratio * ratio;

            // corrector target σμI − dX_a dZ_a
            let target = BlockMatrix {
                blocks: (0..p.kinds.len())
                    .map(|k| match (&dx_a.blocks[k], &dz_a.blocks[k]) {
                        (Block::Psd(dxb), Block::Psd(dzb)) => {
                            let n = dxb.nrows();
                            Block::Psd(DMatrix::identity(n, n) * (sigma * mu) - dxb * dzb)
                        }
                        (Block::Lp(dxb), Block::Lp(dzb)) => {
                            Block::Lp(dxb.component_mul(dzb).map(|v| sigma * mu - v))
                        }
                        _ => unreachable!(),
                    })
                    .collect(),
            };
            let Some((dx, dy, dz)) = self.direction(&it, &zinv, &schur, &rp, &rd, Some(&target)) else {
                status = SdpStatus::Stalled;
                break;
            };
            let (Some(sp), Some(sd)) = (max_step_all(&it.x, &dx), max_step_all(&it.z, &dz)) else {
                status = SdpStatus::Stalled;
                break;
            };
            let gamma = T::lit(0.9) + T::lit(0.09) * ap.min(ad);
            let ap = (gamma * sp).min(T::one());
            let ad = (gamma * sd).min(T::one());
            if ap < T::lit(1e-10) && ad < T::lit(1e-10) {
                stalls += 1;
                if stalls >= 3 {
                    status = SdpStatus::Stalled;
                    break;
                }
            } else {
                stalls = 0;
            }
            it.x.axpy(ap, &dx);
            it.y.axpy(ad, &dy, T::one());
            it.z.axpy(ad, &dz);
            iterations = iter + 1;
        }

        let (rp, rd) = residuals(&it);
        let meas = self.measures(&it, &rp, &rd);
        if status == SdpStatus::MaxIterations && meas.pinf <= tol && meas.dinf <= tol && meas.gap <= tol {
            status = SdpStatus::Converged;
        }
        SdpSolution {
            x: it.x,
            y: it.y,
            z: it.z,
            status,
            iterations,
            primal_objective: meas.pobj,
            dual_objective: meas.dobj,
            primal_infeasibility: meas.pinf,
            dual_infeasibility: meas.dinf,
            relative_gap: meas.gap,
        }
    }
}

/// Schur-complement factorization with a regularized fallback.
enum Factor<T: Real> {
    Chol(Cholesky<T, nalgebra::Dyn>),
    Lu(nalgebra::LU<T, nalgebra::Dyn, nalgebra::Dyn>),
}

impl<T: Real> Factor<T> {
    fn new(m: DMatrix<T>) -> Option<Self> {
        if m.iter().any(|v| !v.is_finite()) {
            return None;
        }
        if let Some(c) = Cholesky::new(m.clone()) {
            return Some(Factor::Chol(c));
        }
        let scale = m.diagonal().iter().fold(T::zero(), |a, b| a.max(b.abs()));
        let mut reg = m.clone();
        for i in 0..reg.nrows() {
            reg[(i, i)] += scale * T::lit(1e-13) + T::lit(1e-300_f64.max(f64::MIN_POSITIVE));
        }
        if let Some(c) = Cholesky::new(reg) {
            return Some(Factor::Chol(c));
        }
        let lu = m.lu();
        lu.is_invertible().then_some(Factor::Lu(lu))
    }

    fn solve(&self, rhs: &DVector<T>) -> Option<DVector<T>> {
        let out = match self {
            Factor::Chol(c) => c.solve(rhs),
            Factor::Lu(lu) => lu.solve(rhs)?,
        };
        out.iter().all(|v| v.is_finite()).then_some(out)
    }
}

/// Convenience wrapper around [`SdpSolver`].
pub fn solve_sdp<T: Real>(problem: &SdpProblem<T>, settings: SdpSettings<T>) -> SdpSolution<T> {
    SdpSolver::new(problem, settings).solve()
}
