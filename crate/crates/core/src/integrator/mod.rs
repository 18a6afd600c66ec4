//! Soft-thresholded fixed-point time integrators: Picard and spectral
//! deferred correction sweeps over collocation stage vectors, threshold
//! schedules, and the multi-interval evolution drivers.

mod parabolic;
mod schrodinger;

pub use parabolic::ParabolicMap;
pub use schrodinger::SchrodingerMap;

use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::Instant;

use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::lowrank::{LowRankMatrix, LrScalar};
use crate::models::{ParabolicModel, SchrodingerModel};
use crate::quadrature::CollocationRule;

/// The stage approximations `v_j ~ v(t_j)` on one subinterval.
#[derive(Debug, Clone)]
pub struct StageVector<T: LrScalar> {
    entries: Vec<LowRankMatrix<T>>,
}

impl<T: LrScalar> StageVector<T> {
    pub fn zeros(j: usize, nrows: usize, ncols: usize) -> Self {
        Self {
            entries: (0..j).map(|_| LowRankMatrix::zero(nrows, ncols)).collect(),
        }
    }

    pub fn from_entries(entries: Vec<LowRankMatrix<T>>) -> Self {
        Self { entries }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[LowRankMatrix<T>] {
        &self.entries
    }

    pub fn entry(&self, m: usize) -> &LowRankMatrix<T> {
        &self.entries[m]
    }

    /// Stage norm `max_j ||v_j||_F`.
    pub fn norm_j(&self) -> f64 {
        self.entries
            .iter()
            .map(|e| e.frobenius_norm())
            .fold(0.0, f64::max)
    }

    /// Stage distance `max_j ||v_j - w_j||_F`.
    pub fn dist_j(&self, other: &Self) -> Result<f64> {
        let mut worst = 0.0_f64;
        for (a, b) in self.entries.iter().zip(other.entries.iter()) {
            worst = worst.max(a.frobenius_dist(b)?);
        }
        Ok(worst)
    }

    pub fn ranks(&self) -> Vec<usize> {
        self.entries.iter().map(|e| e.rank()).collect()
    }

    pub fn max_rank(&self) -> usize {
        self.entries.iter().map(|e| e.rank()).max().unwrap_or(0)
    }
}

/// How the soft threshold decreases over the iterations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScheduleMode {
    /// Multiply by `theta` after every iteration.
    ConstantDecrease,
    /// Multiply by `theta` only when the thresholded update stalls:
    /// `err <= c * res`.
    Adaptive,
}

#[derive(Debug, Clone, Copy)]
pub struct ThresholdSchedule {
    pub mode: ScheduleMode,
    pub theta: f64,
    pub c: f64,
    pub alpha: f64,
}

impl ThresholdSchedule {
    pub fn constant(theta: f64) -> Result<Self> {
        if !(theta > 0.0 && theta < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "theta must lie in (0,1), got {theta}"
            )));
        }
        Ok(Self {
            mode: ScheduleMode::ConstantDecrease,
            theta,
            c: 0.0,
            alpha: 0.0,
        })
    }

    pub fn adaptive(theta: f64, c: f64) -> Result<Self> {
        if !(theta > 0.0 && theta < 1.0) || !(c > 0.0 && c < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "theta and c must lie in (0,1), got theta = {theta}, c = {c}"
            )));
        }
        Ok(Self {
            mode: ScheduleMode::Adaptive,
            theta,
            c,
            alpha: 0.0,
        })
    }

    pub fn with_alpha(mut self, alpha0: f64) -> Self {
        self.alpha = alpha0;
        self
    }

    /// The schedule after one iteration with pre-threshold residual `res`
    /// and post-threshold step size `err`.
    pub fn updated(&self, res: f64, err: f64) -> Self {
        let mut next = *self;
        match self.mode {
            ScheduleMode::ConstantDecrease => next.alpha *= self.theta,
            ScheduleMode::Adaptive => {
                if err <= self.c * res {
                    next.alpha *= self.theta;
                }
            }
        }
        next
    }
}

/// Initial soft threshold of every subinterval.
#[derive(Debug, Clone, Copy)]
pub enum Alpha0 {
    /// `sigma_max(v0)`, the algorithmic default.
    SigmaMax,
    /// A fixed value; `0` disables thresholding entirely.
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Picard,
    Sdc,
}

/// Secondary quadrature of the parabolic Duhamel integral.
#[derive(Debug, Clone, Copy)]
pub struct SecondaryConfig {
    pub n_bisect: usize,
    pub inner_nodes: usize,
}

impl Default for SecondaryConfig {
    fn default() -> Self {
        Self {
            n_bisect: 5,
            inner_nodes: 5,
        }
    }
}

/// Per-interval tolerances from the theoretical schedule, with
/// user-supplied constants (they are not computable from problem data).
#[derive(Debug, Clone, Copy)]
pub struct TheoreticalSchedule {
    pub eta: f64,
    pub kappa_j: f64,
    pub kappa_2j: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct IntegratorConfig {
    pub h: f64,
    pub intervals: usize,
    pub nodes: usize,
    pub method: Method,
    /// Iteration tolerance, constant per run unless `theoretical` is set.
    pub eps: f64,
    /// Recompression tolerance for the boundary state (Gauss rules).
    pub delta_boundary: f64,
    /// Relative recompression factor applied after every low-rank addition.
    pub delta_rel: f64,
    /// Tighter factor for residual-term assembly inside SDC sweeps.
    pub delta_rel_residual: f64,
    pub schedule: ThresholdSchedule,
    pub alpha0: Alpha0,
    pub max_iters: usize,
    pub secondary: SecondaryConfig,
    pub theoretical: Option<TheoreticalSchedule>,
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.eps > 0.0) {
            return Err(Error::InvalidParameter("eps must be positive".into()));
        }
        if self.delta_boundary < 0.0 || self.delta_rel < 0.0 || self.delta_rel_residual < 0.0 {
            return Err(Error::InvalidParameter(
                "recompression tolerances must be nonnegative".into(),
            ));
        }
        if self.delta_rel >= 1.0 {
            return Err(Error::InvalidParameter(
                "delta_rel must be below one".into(),
            ));
        }
        if self.max_iters == 0 || self.nodes == 0 || self.intervals == 0 {
            return Err(Error::InvalidParameter(
                "max_iters, nodes and intervals must be positive".into(),
            ));
        }
        if !(self.h > 0.0) {
            return Err(Error::InvalidParameter("h must be positive".into()));
        }
        Ok(())
    }

    /// Disable every truncation mechanism (exact fixed-point iteration).
    pub fn without_thresholds(mut self) -> Self {
        self.alpha0 = Alpha0::Fixed(0.0);
        self.delta_rel = 0.0;
        self.delta_rel_residual = 0.0;
        self.delta_boundary = 0.0;
        self
    }

    /// Tolerances `(eps_n, delta_n)` for the 1-based interval `n`.
    fn tolerances(&self, n: usize, rho: Option<f64>) -> Result<(f64, f64)> {
        match self.theoretical {
            None => Ok((self.eps, self.delta_boundary)),
            Some(ts) => {
                let rho = rho.ok_or_else(|| {
                    Error::InvalidParameter(
                        "theoretical schedule needs a contraction constant".into(),
                    )
                })?;
                if !(rho > 0.0 && rho < 1.0) {
                    return Err(Error::InvalidParameter(format!(
                        "theoretical schedule needs rho in (0,1), got {rho}"
                    )));
                }
                let j = self.nodes as i32;
                let xi = |i: usize| -> f64 {
                    (ts.eta
                        + ts.kappa_j * self.h.powi(j + 1)
                        + i as f64 * ts.kappa_2j * self.h.powi(2 * j + 1))
                        * (8.0 * rho * i as f64 * (1.0 + rho) / (1.0 - rho).powi(3)).exp()
                };
                let eps = 4.0 * xi(n - 1) * (1.0 + rho) / (1.0 - rho).powi(2);
                let delta = rho * eps / (1.0 - rho);
                Ok((eps, delta))
            }
        }
    }
}

/// Shared bookkeeping for the low-rank operations of one interval: the
/// current residual estimate scales all intermediate recompressions, and
/// every materialized intermediate reports its rank here.
pub struct OpContext {
    res: f64,
    delta_rel: f64,
    delta_rel_residual: f64,
    /// Whether the surrounding solver is an SDC sweep (the tighter
    /// residual-assembly tolerance only applies there).
    sdc: bool,
    max_rank: AtomicUsize,
}

impl OpContext {
    pub fn new(res0: f64, delta_rel: f64, delta_rel_residual: f64) -> Self {
        Self {
            res: res0,
            delta_rel,
            delta_rel_residual,
            sdc: false,
            max_rank: AtomicUsize::new(0),
        }
    }

    pub fn for_sdc(mut self) -> Self {
        self.sdc = true;
        self
    }

    /// Tolerance for assembling the interpolated right-hand-side terms:
    /// tighter during SDC sweeps, standard otherwise.
    pub fn delta_assembly(&self) -> f64 {
        if self.sdc {
            self.delta_residual()
        } else {
            self.delta()
        }
    }

    /// Recompression tolerance for ordinary additions.
    pub fn delta(&self) -> f64 {
        self.delta_rel * self.res
    }

    /// Tighter tolerance for residual-term assembly.
    pub fn delta_residual(&self) -> f64 {
        self.delta_rel_residual * self.res
    }

    pub fn observe(&self, rank: usize) {
        self.max_rank.fetch_max(rank, Ordering::Relaxed);
    }

    fn take_max_rank(&self) -> usize {
        self.max_rank.swap(0, Ordering::Relaxed)
    }
}

/// One fixed-point map on stage vectors. Implementations provide the Picard
/// row update, the SDC row update, and the transition to the boundary.
pub trait FixedPointMap<T: LrScalar>: Sync {
    /// Per-iteration precomputation from the current stages (for example the
    /// right-hand-side evaluations, which every row reuses).
    type Cache: Sync;

    fn rule(&self) -> &CollocationRule;

    fn state_shape(&self) -> (usize, usize);

    fn prepare(&self, stages: &StageVector<T>, ctx: &OpContext) -> Result<Self::Cache>;

    /// Whether Picard rows may be computed concurrently (no row recursion).
    fn rows_independent(&self) -> bool;

    /// `Phi(v)_row`; `prev_phi` carries `Phi(v)_{row-1}` for recursive maps.
    fn phi_row(
        &self,
        cache: &Self::Cache,
        row: usize,
        u0: &LowRankMatrix<T>,
        prev_phi: Option<&LowRankMatrix<T>>,
        ctx: &OpContext,
    ) -> Result<LowRankMatrix<T>>;

    /// `phi_row` of the SDC sweep: previous node values enter both through
    /// the already-updated `prev_new` and the previous iterate `prev_old`.
    fn sdc_row(
        &self,
        cache: &Self::Cache,
        row: usize,
        u0: &LowRankMatrix<T>,
        prev_new: &LowRankMatrix<T>,
        prev_old: &LowRankMatrix<T>,
        ctx: &OpContext,
    ) -> Result<LowRankMatrix<T>>;

    /// Full-interval quadrature update to the right boundary (Gauss rules).
    fn boundary(
        &self,
        cache: &Self::Cache,
        u0: &LowRankMatrix<T>,
        ctx: &OpContext,
    ) -> Result<LowRankMatrix<T>>;

    /// Radau rules place the last node on the boundary, bypassing
    /// `boundary`; the (soft-thresholded) last stage is the boundary state.
    fn boundary_is_last_node(&self) -> bool;

    /// `rho = h Lambda_J C_V` where available.
    fn contraction_constant(&self) -> Option<f64>;
}

/// Trace of one fixed-point iteration.
#[derive(Debug, Clone)]
pub struct IterationRecord {
    pub interval: usize,
    pub iter: usize,
    pub res: f64,
    pub err: f64,
    pub alpha: f64,
    /// Ranks of the thresholded stages after this iteration.
    pub node_ranks: Vec<usize>,
    /// Largest pre-threshold row rank of this iteration.
    pub phi_max_rank: usize,
    /// Largest rank of any intermediate low-rank value of this iteration.
    pub max_intermediate_rank: usize,
}

/// Per-interval summary.
#[derive(Debug, Clone)]
pub struct IntervalTrace {
    pub interval: usize,
    pub t_start: f64,
    pub t_end: f64,
    pub iterations: usize,
    pub converged: bool,
    pub eps: f64,
    pub delta_boundary: f64,
    pub initial_rank: usize,
    pub boundary_rank: usize,
    pub max_intermediate_rank: usize,
    pub wall_secs: f64,
}

#[derive(Debug, Clone, Default)]
pub struct RunTrace {
    pub iterations: Vec<IterationRecord>,
    pub intervals: Vec<IntervalTrace>,
}

/// Result of the fixed-point solve on one subinterval.
pub struct IntervalRun<T: LrScalar> {
    /// State passed to the next interval (recompressed or thresholded).
    pub boundary: LowRankMatrix<T>,
    /// Final thresholded stage vector `v^{k+1}`.
    pub stages: StageVector<T>,
    pub converged: bool,
    pub iterations: usize,
    pub records: Vec<IterationRecord>,
    pub max_intermediate_rank: usize,
}

/// Run the thresholded fixed-point iteration on one subinterval.
///
/// Follows the iteration skeleton shared by both solver variants:
/// start from `v^0 = 0` with `alpha_0 = sigma_max(v0)`, iterate
/// `v^{k+1} = S_alpha(Phi v^k)` until the pre-threshold residual drops
/// below `eps`, then form the boundary value from the residual-certified
/// stages.
pub fn run_interval<T: LrScalar, M: FixedPointMap<T>>(
    map: &M,
    u0: &LowRankMatrix<T>,
    config: &IntegratorConfig,
    interval: usize,
    eps: f64,
    delta_boundary: f64,
) -> Result<IntervalRun<T>> {
    let j = map.rule().num_nodes();
    let (nrows, ncols) = map.state_shape();
    let alpha0 = match config.alpha0 {
        Alpha0::SigmaMax => u0.max_singular_value(),
        Alpha0::Fixed(a) => a,
    };
    if let Some(rho) = map.contraction_constant() {
        if config.schedule.theta < rho && alpha0 > 0.0 && interval == 0 {
            log::warn!(
                "theta = {} below contraction constant rho = {rho:.3}; rank bounds not guaranteed",
                config.schedule.theta
            );
        }
    }
    let mut sched = config.schedule.with_alpha(alpha0);
    // Residual estimate seeded with the data scale so that the very first
    // delta_rel-scaled recompressions are meaningful.
    let mut ctx = OpContext::new(
        u0.frobenius_norm(),
        config.delta_rel,
        config.delta_rel_residual,
    );
    if config.method == Method::Sdc {
        ctx = ctx.for_sdc();
    }

    let mut stages = StageVector::<T>::zeros(j, nrows, ncols);
    let mut thresholded = stages.clone();
    let mut records = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    let mut max_intermediate = 0usize;
    let mut final_cache: Option<M::Cache> = None;

    for k in 0..config.max_iters {
        let cache = map.prepare(&stages, &ctx)?;
        let alpha = sched.alpha;

        let (phi, res) = match config.method {
            Method::Picard => {
                let phi_entries: Vec<LowRankMatrix<T>> = if map.rows_independent() {
                    (0..j)
                        .into_par_iter()
                        .map(|row| map.phi_row(&cache, row, u0, None, &ctx))
                        .collect::<Result<_>>()?
                } else {
                    let mut rows: Vec<LowRankMatrix<T>> = Vec::with_capacity(j);
                    for row in 0..j {
                        let prev = rows.last();
                        rows.push(map.phi_row(&cache, row, u0, prev, &ctx)?);
                    }
                    rows
                };
                let phi = StageVector::from_entries(phi_entries);
                let res = phi.dist_j(&stages)?;
                (phi, res)
            }
            Method::Sdc => {
                let mut rows: Vec<LowRankMatrix<T>> = Vec::with_capacity(j);
                let mut new_prev = u0.clone();
                let mut res = 0.0_f64;
                for row in 0..j {
                    let old_prev = if row == 0 { u0 } else { stages.entry(row - 1) };
                    let phi_row = map.sdc_row(&cache, row, u0, &new_prev, old_prev, &ctx)?;
                    res = res.max(phi_row.frobenius_dist(stages.entry(row))?);
                    // per-node thresholding: the next node sees the
                    // thresholded value of this one
                    new_prev = phi_row.soft_threshold(alpha);
                    rows.push(phi_row);
                }
                (StageVector::from_entries(rows), res)
            }
        };

        for e in phi.entries() {
            ctx.observe(e.rank());
        }
        let phi_max_rank = phi.max_rank();
        let next = StageVector::from_entries(
            phi.entries().iter().map(|e| e.soft_threshold(alpha)).collect(),
        );
        let err = next.dist_j(&thresholded)?;

        let iter_max = ctx.take_max_rank();
        max_intermediate = max_intermediate.max(iter_max);
        records.push(IterationRecord {
            interval,
            iter: k,
            res,
            err,
            alpha,
            node_ranks: next.ranks(),
            phi_max_rank,
            max_intermediate_rank: iter_max,
        });

        iterations = k + 1;
        let done = res <= eps;
        ctx.res = res;
        thresholded = next;
        if done {
            converged = true;
            final_cache = Some(cache);
            break;
        }
        sched = sched.updated(res, err);
        stages = thresholded.clone();
    }

    // Transition to the boundary from the residual-certified stages.
    let boundary = if map.boundary_is_last_node() {
        thresholded.entry(j - 1).clone()
    } else {
        let cache = match &final_cache {
            Some(c) => c,
            // Non-convergent run: fall back to the latest stages.
            None => {
                stages = thresholded.clone();
                final_cache = Some(map.prepare(&stages, &ctx)?);
                final_cache.as_ref().expect("cache just set")
            }
        };
        let raw = map.boundary(cache, u0, &ctx)?;
        ctx.observe(raw.rank());
        raw.recompress(delta_boundary)
    };
    max_intermediate = max_intermediate.max(ctx.take_max_rank());

    Ok(IntervalRun {
        boundary,
        stages: thresholded,
        converged,
        iterations,
        records,
        max_intermediate_rank: max_intermediate,
    })
}

/// Kind of an output time point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TimeKind {
    Initial,
    Node,
    Boundary,
}

/// Trajectory produced by a full evolution run.
pub struct EvolutionOutput<T: LrScalar> {
    pub times: Vec<f64>,
    pub states: Vec<LowRankMatrix<T>>,
    pub kinds: Vec<TimeKind>,
    pub trace: RunTrace,
    pub converged: bool,
}

impl<T: LrScalar> EvolutionOutput<T> {
    fn push(&mut self, t: f64, state: LowRankMatrix<T>, kind: TimeKind) {
        self.times.push(t);
        self.states.push(state);
        self.kinds.push(kind);
    }

    pub fn boundary_states(&self) -> impl Iterator<Item = (f64, &LowRankMatrix<T>)> {
        self.times
            .iter()
            .zip(self.states.iter())
            .zip(self.kinds.iter())
            .filter(|(_, k)| **k == TimeKind::Boundary)
            .map(|((t, s), _)| (*t, s))
    }

    fn new() -> Self {
        Self {
            times: Vec::new(),
            states: Vec::new(),
            kinds: Vec::new(),
            trace: RunTrace::default(),
            converged: true,
        }
    }
}

/// Evolve the Schrödinger model over `intervals` subintervals.
///
/// Works in twisted variables re-based at each interval start; all recorded
/// node and boundary states are untwisted.
pub fn run_evolution_schrodinger(
    model: &SchrodingerModel,
    config: &IntegratorConfig,
) -> Result<EvolutionOutput<C64>> {
    run_evolution_schrodinger_from(model, config, model.initial_state())
}

/// Same as [`run_evolution_schrodinger`] with custom initial data.
pub fn run_evolution_schrodinger_from(
    model: &SchrodingerModel,
    config: &IntegratorConfig,
    initial: LowRankMatrix<C64>,
) -> Result<EvolutionOutput<C64>> {
    config.validate()?;
    let rule = CollocationRule::gauss_legendre(config.nodes, 0.0, config.h)?;
    let map = SchrodingerMap::new(model, rule);
    let mut out = EvolutionOutput::new();
    let mut u0 = initial;
    out.push(0.0, u0.clone(), TimeKind::Initial);

    for n in 0..config.intervals {
        let t_start = n as f64 * config.h;
        let (eps, delta) = config.tolerances(n + 1, map.contraction_constant())?;
        let started = Instant::now();
        let run = run_interval(&map, &u0, config, n, eps, delta)?;
        record_interval(&mut out.trace, &run, n, t_start, config.h, eps, delta, &u0, started);

        for (m, v) in run.stages.entries().iter().enumerate() {
            let s = map.rule().nodes()[m];
            out.push(t_start + s, model.untwist(s, v)?, TimeKind::Node);
        }
        u0 = model.untwist(config.h, &run.boundary)?;
        out.push(t_start + config.h, u0.clone(), TimeKind::Boundary);

        if !run.converged {
            out.converged = false;
            break;
        }
    }
    Ok(out)
}

/// Evolve the parabolic model over `intervals` subintervals (Radau nodes;
/// the last node is the boundary).
pub fn run_evolution_parabolic(
    model: &ParabolicModel,
    config: &IntegratorConfig,
) -> Result<EvolutionOutput<f64>> {
    config.validate()?;
    let rule = CollocationRule::radau_legendre(config.nodes, 0.0, config.h)?;
    let map = ParabolicMap::new(model, rule, config.secondary)?;
    let mut out = EvolutionOutput::new();
    let mut u0 = model.initial_state();
    out.push(0.0, u0.clone(), TimeKind::Initial);

    for n in 0..config.intervals {
        let t_start = n as f64 * config.h;
        let (eps, delta) = config.tolerances(n + 1, map.contraction_constant())?;
        let started = Instant::now();
        let run = run_interval(&map, &u0, config, n, eps, delta)?;
        record_interval(&mut out.trace, &run, n, t_start, config.h, eps, delta, &u0, started);

        let j = map.rule().num_nodes();
        for (m, v) in run.stages.entries().iter().enumerate().take(j - 1) {
            out.push(t_start + map.rule().nodes()[m], v.clone(), TimeKind::Node);
        }
        u0 = run.boundary.clone();
        out.push(t_start + config.h, u0.clone(), TimeKind::Boundary);

        if !run.converged {
            out.converged = false;
            break;
        }
    }
    Ok(out)
}

#[allow(clippy::too_many_arguments)]
fn record_interval<T: LrScalar>(
    trace: &mut RunTrace,
    run: &IntervalRun<T>,
    interval: usize,
    t_start: f64,
    h: f64,
    eps: f64,
    delta: f64,
    u0: &LowRankMatrix<T>,
    started: Instant,
) {
    trace.iterations.extend(run.records.iter().cloned());
    trace.intervals.push(IntervalTrace {
        interval,
        t_start,
        t_end: t_start + h,
        iterations: run.iterations,
        converged: run.converged,
        eps,
        delta_boundary: delta,
        initial_rank: u0.rank(),
        boundary_rank: run.boundary.rank(),
        max_intermediate_rank: run.max_intermediate_rank,
        wall_secs: started.elapsed().as_secs_f64(),
    });
}
