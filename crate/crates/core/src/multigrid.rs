//! Coarsening by three: transfers, two-grid and V-cycles, measured factors.
//!
//! A coarse unknown coincides with a fine unknown of the same field: coarse
//! `u(I, J)` with fine `u(3I, 3J+1)`, `v(I, J)` with `v(3I+1, 3J)` and
//! `p(I, J)` with `p(3I+1, 3J+1)` (physical indices). Every field is restricted
//! and prolonged with the same stencil around that nested point; under
//! Dirichlet walls legs that reach eliminated or outside unknowns are dropped.

use faer::prelude::*;
use nalgebra::DMatrix;
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::mac::{Bc, Closure, Field, Layout, SaddleSystem, StaggeredState};
use crate::params::{RelaxParams, Restriction, TransferPair};
use crate::smoothers::Smoother;
use crate::stencil::{self, Stencil};

/// Residual norm at which a measured run stops.
pub const STOP_TOL: f64 = 1e-12;
pub const DEFAULT_MAX_ITERS: usize = 200;
/// A run is flagged as diverged once `‖r_k‖` exceeds this multiple of `‖r_0‖`.
pub const DIVERGENCE_FACTOR: f64 = 1e6;

fn nested_offset(f: Field) -> (isize, isize) {
    match f {
        Field::U => (0, 1),
        Field::V => (1, 0),
        Field::P => (1, 1),
    }
}

fn check_levels(fine: Layout, coarse: Layout) -> Result<()> {
    if fine.bc != coarse.bc || fine.n != 3 * coarse.n {
        return Err(Error::ShapeMismatch(format!(
            "levels {fine:?} and {coarse:?} are not nested by a factor of three"
        )));
    }
    Ok(())
}

/// Sparse matrix as `(row, column, weight)` triplets over flattened storage
/// indices of one field.
#[derive(Debug, Clone, Default)]
struct Triplets {
    rows: usize,
    cols: usize,
    entries: Vec<(usize, usize, f64)>,
}

impl Triplets {
    fn apply(&self, a: &Array2<f64>, shape: (usize, usize)) -> Array2<f64> {
        let src = a.as_slice().expect("standard layout");
        debug_assert_eq!(src.len(), self.cols);
        let mut out = vec![0.0; self.rows];
        for &(r, c, w) in &self.entries {
            out[r] += w * src[c];
        }
        Array2::from_shape_vec(shape, out).expect("shape")
    }

    fn transpose_scaled(&self, s: f64) -> Self {
        Self {
            rows: self.cols,
            cols: self.rows,
            entries: self
                .entries
                .iter()
                .map(|&(r, c, w)| (c, r, s * w))
                .collect(),
        }
    }
}

fn flat(l: Layout, f: Field, (x, y): (usize, usize)) -> usize {
    x * l.shape(f).1 + y
}

/// Interpolation `P_{h,25}` for one field. Coarse values beyond a wall are
/// read through `closure`.
fn prolongation_triplets(coarse: Layout, fine: Layout, f: Field, closure: Closure) -> Triplets {
    let (ox, oy) = nested_offset(f);
    let st = stencil::p25();
    let mut entries = Vec::new();
    for x in 0..fine.shape(f).0 {
        for y in 0..fine.shape(f).1 {
            let (i, j) = fine.physical(f, x, y);
            for ((a1, a2), w) in st.entries() {
                let (di, dj) = (i - ox - a1 as isize, j - oy - a2 as isize);
                if di.rem_euclid(3) != 0 || dj.rem_euclid(3) != 0 {
                    continue;
                }
                if let Some((idx, sign)) =
                    coarse.lookup(f, di.div_euclid(3), dj.div_euclid(3), closure)
                {
                    entries.push((flat(fine, f, (x, y)), flat(coarse, f, idx), sign * w));
                }
            }
        }
    }
    Triplets {
        rows: fine.len(f),
        cols: coarse.len(f),
        entries,
    }
}

/// Restriction `coarse(X) = Σ r_κ fine(X + κ)` around the nested point, with
/// legs outside the fine unknowns dropped.
fn restriction_triplets(fine: Layout, coarse: Layout, f: Field, st: &Stencil) -> Triplets {
    let (ox, oy) = nested_offset(f);
    let mut entries = Vec::new();
    for x in 0..coarse.shape(f).0 {
        for y in 0..coarse.shape(f).1 {
            let (ci, cj) = coarse.physical(f, x, y);
            let (i, j) = (3 * ci + ox, 3 * cj + oy);
            for ((a1, a2), w) in st.entries() {
                if let Some((idx, sign)) =
                    fine.lookup(f, i + a1 as isize, j + a2 as isize, Closure::Zero)
                {
                    entries.push((flat(coarse, f, (x, y)), flat(fine, f, idx), sign * w));
                }
            }
        }
    }
    Triplets {
        rows: coarse.len(f),
        cols: fine.len(f),
        entries,
    }
}

/// Grid transfers between two nested levels.
///
/// Under Dirichlet walls the interpolation reads coarse values beyond a wall
/// by reflection: odd for velocities, so that linear interpolation sees the
/// zero wall value, and even for pressure, so constants are reproduced. The
/// `P25ᵀ/9` restriction is the exact scaled transpose of that interpolation;
/// the other restrictions drop legs that leave the fine unknowns.
#[derive(Debug, Clone)]
pub struct Transfer {
    pub fine: Layout,
    pub coarse: Layout,
    pub pair: TransferPair,
    prolong: [Triplets; 3],
    restrict: [Triplets; 3],
}

impl Transfer {
    pub fn new(fine: Layout, coarse: Layout, pair: TransferPair) -> Result<Self> {
        Self::with_closure(fine, coarse, pair, Closure::Mirror)
    }

    /// Same as [`Transfer::new`] but with an explicit closure for coarse
    /// values beyond a wall; `Closure::Zero` plainly truncates.
    pub fn with_closure(
        fine: Layout,
        coarse: Layout,
        pair: TransferPair,
        closure: Closure,
    ) -> Result<Self> {
        check_levels(fine, coarse)?;
        let prolong = Field::ALL.map(|f| prolongation_triplets(coarse, fine, f, closure));
        let restrict = match pair.restriction {
            Restriction::P25T => std::array::from_fn(|k| prolong[k].transpose_scaled(1.0 / 9.0)),
            _ => {
                let st = pair.restriction_stencil();
                Field::ALL.map(|f| restriction_triplets(fine, coarse, f, &st))
            }
        };
        Ok(Self {
            fine,
            coarse,
            pair,
            prolong,
            restrict,
        })
    }

    pub fn restrict(&self, s: &StaggeredState) -> Result<StaggeredState> {
        if s.layout != self.fine {
            return Err(Error::ShapeMismatch(format!(
                "restricting {:?} from {:?}",
                s.layout, self.fine
            )));
        }
        let mut out = StaggeredState::zeros(self.coarse);
        for (k, f) in Field::ALL.into_iter().enumerate() {
            *out.field_mut(f) = self.restrict[k].apply(s.field(f), self.coarse.shape(f));
        }
        Ok(out)
    }

    pub fn prolong(&self, s: &StaggeredState) -> Result<StaggeredState> {
        if s.layout != self.coarse {
            return Err(Error::ShapeMismatch(format!(
                "prolonging {:?} from {:?}",
                s.layout, self.coarse
            )));
        }
        let mut out = StaggeredState::zeros(self.fine);
        for (k, f) in Field::ALL.into_iter().enumerate() {
            *out.field_mut(f) = self.prolong[k].apply(s.field(f), self.fine.shape(f));
        }
        Ok(out)
    }
}

pub fn restrict_state(
    fine: &StaggeredState,
    coarse: Layout,
    tp: TransferPair,
) -> Result<StaggeredState> {
    Transfer::new(fine.layout, coarse, tp)?.restrict(fine)
}

pub fn prolong_state(coarse: &StaggeredState, fine: Layout) -> Result<StaggeredState> {
    Transfer::new(fine, coarse.layout, TransferPair::new(Restriction::P25T))?.prolong(coarse)
}

/// Dense direct solver returning the minimum-norm solution of a singular
/// saddle system: the operator is bordered with its orthonormal null basis,
/// `[[𝓛, N], [Nᵀ, 0]]`, and factorized once.
pub struct DirectSolver {
    layout: Layout,
    nullity: usize,
    lu: faer::linalg::solvers::PartialPivLu<f64>,
}

impl std::fmt::Debug for DirectSolver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DirectSolver")
            .field("layout", &self.layout)
            .field("nullity", &self.nullity)
            .finish()
    }
}

impl DirectSolver {
    pub fn new(sys: &SaddleSystem) -> Result<Self> {
        let l = sys.assemble_operator();
        let null: Vec<Vec<f64>> = sys.null_space().iter().map(|s| s.to_vec()).collect();
        let dim = l.nrows();
        let k = null.len();
        let m = Mat::<f64>::from_fn(dim + k, dim + k, |i, j| match (i < dim, j < dim) {
            (true, true) => l[(i, j)],
            (true, false) => null[j - dim][i],
            (false, true) => null[i - dim][j],
            (false, false) => 0.0,
        });
        let lu = m.partial_piv_lu();
        let solver = Self {
            layout: sys.layout,
            nullity: k,
            lu,
        };
        // a singular bordered matrix shows up as a non-finite solve
        let probe = solver.solve(&StaggeredState::from_fn(sys.layout, |_, i, j| {
            ((i * 7 + j * 3) % 5) as f64
        }))?;
        if !probe.is_finite() {
            return Err(Error::Singular(format!(
                "bordered coarse operator on {:?}",
                sys.layout
            )));
        }
        Ok(solver)
    }

    pub fn solve(&self, rhs: &StaggeredState) -> Result<StaggeredState> {
        if rhs.layout != self.layout {
            return Err(Error::ShapeMismatch(format!(
                "rhs on {:?} for solver on {:?}",
                rhs.layout, self.layout
            )));
        }
        let b = rhs.to_vec();
        let dim = b.len();
        let col = Mat::<f64>::from_fn(
            dim + self.nullity,
            1,
            |i, _| if i < dim { b[i] } else { 0.0 },
        );
        let x = self.lu.solve(&col);
        let data: Vec<f64> = (0..dim).map(|i| x[(i, 0)]).collect();
        StaggeredState::from_slice(self.layout, &data)
    }
}

pub struct Level {
    pub sys: SaddleSystem,
    pub smoother: Smoother,
    /// Transfers to the next coarser level (absent on the coarsest).
    pub transfer: Option<Transfer>,
}

/// Levels `n, n/3, …, 3`, each with a rediscretized operator.
pub struct GridHierarchy {
    pub levels: Vec<Level>,
    pub transfer: TransferPair,
    pub params: RelaxParams,
    coarsest: DirectSolver,
    second: Option<DirectSolver>,
}

impl GridHierarchy {
    pub fn new(n: usize, bc: Bc, params: RelaxParams, transfer: TransferPair) -> Result<Self> {
        Self::with_closure(n, bc, params, transfer, Closure::Mirror)
    }

    /// Hierarchy whose interpolation reads coarse values beyond a wall
    /// through `closure` (see [`Transfer`]).
    pub fn with_closure(
        n: usize,
        bc: Bc,
        params: RelaxParams,
        transfer: TransferPair,
        closure: Closure,
    ) -> Result<Self> {
        crate::mac::check_grid_size(n)?;
        let mut levels = Vec::new();
        let mut m = n;
        loop {
            let sys = SaddleSystem::new(m, bc)?;
            let smoother = Smoother::new(&sys, params)?;
            let t = if m > 3 {
                Some(Transfer::with_closure(
                    sys.layout,
                    Layout::new(m / 3, bc)?,
                    transfer,
                    closure,
                )?)
            } else {
                None
            };
            levels.push(Level {
                sys,
                smoother,
                transfer: t,
            });
            if m == 3 {
                break;
            }
            m /= 3;
        }
        let coarsest = DirectSolver::new(&levels.last().expect("level").sys)?;
        Ok(Self {
            levels,
            transfer,
            params,
            coarsest,
            second: None,
        })
    }

    pub fn n(&self) -> usize {
        self.levels[0].sys.n()
    }

    pub fn bc(&self) -> Bc {
        self.levels[0].sys.bc()
    }

    pub fn depth(&self) -> usize {
        self.levels.len()
    }

    /// Direct solver on level 1, built on first use by the two-grid cycle.
    fn second_level_solver(&mut self) -> Result<&DirectSolver> {
        if self.depth() < 2 {
            return Err(Error::InvalidGridSize(self.n()));
        }
        if self.depth() == 2 {
            return Ok(&self.coarsest);
        }
        if self.second.is_none() {
            self.second = Some(DirectSolver::new(&self.levels[1].sys)?);
        }
        Ok(self.second.as_ref().expect("built"))
    }

    /// Builds the level-1 direct solver ahead of time.
    pub fn prepare_two_grid(&mut self) -> Result<()> {
        self.second_level_solver().map(|_| ())
    }

    fn smooth(
        &self,
        level: usize,
        x: &mut StaggeredState,
        rhs: &StaggeredState,
        sweeps: usize,
    ) -> Result<()> {
        let l = &self.levels[level];
        for _ in 0..sweeps {
            l.smoother.sweep(&l.sys, x, rhs)?;
        }
        Ok(())
    }

    fn coarse_residual(
        &self,
        level: usize,
        x: &StaggeredState,
        rhs: &StaggeredState,
    ) -> Result<StaggeredState> {
        let l = &self.levels[level];
        let r = l.sys.residual(x, rhs)?;
        l.transfer
            .as_ref()
            .expect("not the coarsest level")
            .restrict(&r)
    }

    fn prolong(&self, level: usize, ec: &StaggeredState) -> Result<StaggeredState> {
        self.levels[level]
            .transfer
            .as_ref()
            .expect("not the coarsest level")
            .prolong(ec)
    }

    /// One two-grid cycle with an exact solve on the `n/3` level.
    pub fn two_grid_cycle(
        &mut self,
        x: &mut StaggeredState,
        rhs: &StaggeredState,
        nu1: usize,
        nu2: usize,
    ) -> Result<()> {
        self.second_level_solver()?;
        self.smooth(0, x, rhs, nu1)?;
        let rc = self.coarse_residual(0, x, rhs)?;
        let solver = if self.depth() == 2 {
            &self.coarsest
        } else {
            self.second.as_ref().expect("built")
        };
        let ec = solver.solve(&rc)?;
        x.axpy(1.0, &self.prolong(0, &ec)?);
        self.smooth(0, x, rhs, nu2)
    }

    pub fn v_cycle(
        &self,
        x: &mut StaggeredState,
        rhs: &StaggeredState,
        nu1: usize,
        nu2: usize,
    ) -> Result<()> {
        self.v_cycle_at(0, x, rhs, nu1, nu2)
    }

    fn v_cycle_at(
        &self,
        level: usize,
        x: &mut StaggeredState,
        rhs: &StaggeredState,
        nu1: usize,
        nu2: usize,
    ) -> Result<()> {
        if level + 1 == self.depth() {
            *x = self.coarsest.solve(rhs)?;
            return Ok(());
        }
        self.smooth(level, x, rhs, nu1)?;
        let rc = self.coarse_residual(level, x, rhs)?;
        let mut ec = StaggeredState::zeros(rc.layout);
        self.v_cycle_at(level + 1, &mut ec, &rc, nu1, nu2)?;
        x.axpy(1.0, &self.prolong(level, &ec)?);
        self.smooth(level, x, rhs, nu2)
    }

    pub fn cycle(
        &mut self,
        kind: CycleKind,
        x: &mut StaggeredState,
        rhs: &StaggeredState,
        nu1: usize,
        nu2: usize,
    ) -> Result<()> {
        match kind {
            CycleKind::TwoGrid => self.two_grid_cycle(x, rhs, nu1, nu2),
            CycleKind::V => self.v_cycle(x, rhs, nu1, nu2),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CycleKind {
    TwoGrid,
    V,
}

impl CycleKind {
    pub fn name(self) -> &'static str {
        match self {
            CycleKind::TwoGrid => "two-grid",
            CycleKind::V => "v-cycle",
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceReport {
    pub n: usize,
    pub bc: Bc,
    pub cycle: CycleKind,
    pub nu1: usize,
    pub nu2: usize,
    pub params: RelaxParams,
    pub transfer: String,
    pub seed: u64,
    /// `‖r_0‖, ‖r_1‖, …, ‖r_k‖`.
    pub residuals: Vec<f64>,
    pub iterations: usize,
    /// `(‖r_k‖/‖r_0‖)^{1/k}`.
    pub rho: f64,
    pub converged: bool,
    pub diverged: bool,
}

/// Seeded uniform `[−1, 1]` state with the gauge removed.
pub fn random_initial_guess(layout: Layout, seed: u64) -> StaggeredState {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = StaggeredState::from_fn(layout, |_, _, _| rng.gen_range(-1.0..=1.0));
    x.project_gauge();
    x
}

/// Cycles from a random guess with zero right-hand side until
/// `‖r_k‖ ≤ 10⁻¹²`, divergence, or `max_iters`.
pub fn solve(
    hier: &mut GridHierarchy,
    kind: CycleKind,
    nu1: usize,
    nu2: usize,
    max_iters: usize,
    seed: u64,
) -> Result<ConvergenceReport> {
    let layout = hier.levels[0].sys.layout;
    let rhs = StaggeredState::zeros(layout);
    let mut x = random_initial_guess(layout, seed);
    let norm =
        |h: &GridHierarchy, x: &StaggeredState| h.levels[0].sys.residual(x, &rhs).map(|r| r.norm());
    let r0 = norm(hier, &x)?;
    let mut residuals = vec![r0];
    let (mut converged, mut diverged) = (r0 <= STOP_TOL, false);
    while !converged && !diverged && residuals.len() <= max_iters {
        hier.cycle(kind, &mut x, &rhs, nu1, nu2)?;
        x.project_gauge();
        let r = norm(hier, &x)?;
        residuals.push(r);
        converged = r <= STOP_TOL;
        diverged = !r.is_finite() || r > DIVERGENCE_FACTOR * r0;
    }
    let k = residuals.len() - 1;
    let rk = *residuals.last().expect("r0");
    let rho = if k == 0 {
        0.0
    } else {
        (rk / r0).powf(1.0 / k as f64)
    };
    Ok(ConvergenceReport {
        n: hier.n(),
        bc: hier.bc(),
        cycle: kind,
        nu1,
        nu2,
        params: hier.params,
        transfer: hier.transfer.to_string(),
        seed,
        residuals,
        iterations: k,
        rho,
        converged,
        diverged,
    })
}

/// Asymptotic per-cycle error reduction by power iteration: `cycles` cycles
/// on the homogeneous problem from a random guess, renormalized after each
/// cycle, averaged geometrically over the last `window` cycles.
pub fn asymptotic_rate(
    hier: &mut GridHierarchy,
    kind: CycleKind,
    nu1: usize,
    nu2: usize,
    cycles: usize,
    window: usize,
    seed: u64,
) -> Result<f64> {
    if window == 0 || window > cycles {
        return Err(Error::InvalidParams(format!(
            "window {window} must lie in 1..={cycles}"
        )));
    }
    let layout = hier.levels[0].sys.layout;
    let rhs = StaggeredState::zeros(layout);
    let mut x = random_initial_guess(layout, seed);
    x.scale(1.0 / x.norm());
    let mut log_sum = 0.0;
    for k in 0..cycles {
        hier.cycle(kind, &mut x, &rhs, nu1, nu2)?;
        x.project_gauge();
        let nrm = x.norm();
        if !nrm.is_finite() {
            return Err(Error::SolveFailed(
                "non-finite iterate in power iteration".into(),
            ));
        }
        if nrm == 0.0 {
            return Ok(0.0);
        }
        if k >= cycles - window {
            log_sum += nrm.ln();
        }
        x.scale(1.0 / nrm);
    }
    Ok((log_sum / window as f64).exp())
}

/// Dense two-grid error propagation matrix on a small periodic grid, one
/// column per unit error.
pub fn assemble_two_grid_matrix(
    n: usize,
    params: &RelaxParams,
    tp: TransferPair,
    nu1: usize,
    nu2: usize,
) -> Result<DMatrix<f64>> {
    if n > 9 {
        return Err(Error::InvalidGridSize(n));
    }
    let mut hier = GridHierarchy::new(n, Bc::Periodic, *params, tp)?;
    let sys = hier.levels[0].sys.clone();
    let rhs = sys.zeros();
    let dim = sys.layout.unknowns();
    let mut m = DMatrix::zeros(dim, dim);
    let mut e = vec![0.0; dim];
    for k in 0..dim {
        e[k] = 1.0;
        let mut x = StaggeredState::from_slice(sys.layout, &e)?;
        hier.two_grid_cycle(&mut x, &rhs, nu1, nu2)?;
        m.column_mut(k).copy_from_slice(&x.to_vec());
        e[k] = 0.0;
    }
    Ok(m)
}
