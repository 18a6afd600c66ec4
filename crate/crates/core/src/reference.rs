//! Dense full-matrix reference solvers and the optimal-rank oracle.
//!
//! The reference runs the identical fixed-point iterations in dense
//! arithmetic, without any truncation. The dense maps are exposed
//! individually so they can serve as independent oracles for the low-rank
//! integrator.

use ndarray::{Array1, Array2, Axis};
use ndarray_linalg::{JobSvd, Solve, SVDDC};
use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::lowrank::{rank_for_tail, LrScalar};
use crate::models::{scale_cols, scale_rows, ParabolicModel, SchrodingerModel};
use crate::quadrature::{CollocationRule, SecondaryQuadrature};

/// Dense states on a strictly increasing time grid.
#[derive(Debug, Clone)]
pub struct DenseTrajectory<T: LrScalar> {
    pub times: Vec<f64>,
    pub states: Vec<Array2<T>>,
    pub converged: bool,
}

impl<T: LrScalar> DenseTrajectory<T> {
    pub fn state_at(&self, t: f64) -> Option<&Array2<T>> {
        self.times
            .iter()
            .position(|&s| (s - t).abs() <= 1e-10 * (1.0 + t.abs()))
            .map(|i| &self.states[i])
    }
}

fn dense_dist<T: LrScalar>(a: &Array2<T>, b: &Array2<T>) -> f64 {
    let mut acc = 0.0;
    for (x, y) in a.iter().zip(b.iter()) {
        acc += (*x - *y).square();
    }
    acc.sqrt()
}

// ── Schrödinger: twisted dense fixed-point maps ──────────────────────

/// One Picard application on the stage vector, in the twisted frame of a
/// subinterval whose rule starts at `t0 = 0`.
pub fn dense_picard_schrodinger(
    model: &SchrodingerModel,
    rule: &CollocationRule,
    u0: &Array2<C64>,
    stages: &[Array2<C64>],
) -> Vec<Array2<C64>> {
    let fevals = dense_f_evals(model, rule, stages);
    dense_picard_rows(rule, u0, &fevals)
}

fn dense_f_evals(
    model: &SchrodingerModel,
    rule: &CollocationRule,
    stages: &[Array2<C64>],
) -> Vec<Array2<C64>> {
    rule.nodes()
        .par_iter()
        .zip(stages.par_iter())
        .map(|(&s, v)| model.dense_apply_f(s, v))
        .collect()
}

fn dense_picard_rows(
    rule: &CollocationRule,
    u0: &Array2<C64>,
    fevals: &[Array2<C64>],
) -> Vec<Array2<C64>> {
    let j = rule.num_nodes();
    (0..j)
        .into_par_iter()
        .map(|row| {
            let mut acc = u0.clone();
            for (m, fv) in fevals.iter().enumerate() {
                let w = C64::new(rule.omega()[[row, m]], 0.0);
                acc.zip_mut_with(fv, |a, f| *a += f * w);
            }
            acc
        })
        .collect()
}

/// Boundary update `u0 + sum_m omega_m F(v_m)` at the right endpoint.
pub fn dense_boundary_schrodinger(
    model: &SchrodingerModel,
    rule: &CollocationRule,
    u0: &Array2<C64>,
    stages: &[Array2<C64>],
) -> Array2<C64> {
    let fevals = dense_f_evals(model, rule, stages);
    let mut acc = u0.clone();
    for (m, fv) in fevals.iter().enumerate() {
        let w = C64::new(rule.weights()[m], 0.0);
        acc.zip_mut_with(fv, |a, f| *a += f * w);
    }
    acc
}

/// One SDC sweep (midpoint low-order corrector), dense and untruncated.
pub fn dense_sdc_schrodinger(
    model: &SchrodingerModel,
    rule: &CollocationRule,
    u0: &Array2<C64>,
    old: &[Array2<C64>],
) -> Vec<Array2<C64>> {
    let j = rule.num_nodes();
    let fevals = dense_f_evals(model, rule, old);
    let mut new: Vec<Array2<C64>> = Vec::with_capacity(j);
    let mut prev_new = u0.clone();
    let mut prev_old = u0.clone();
    let mut prev_s = 0.0;
    for row in 0..j {
        let s_row = rule.nodes()[row];
        let mut phi = prev_new.clone();
        for (m, fv) in fevals.iter().enumerate() {
            let w = C64::new(rule.omega_tilde()[[row, m]], 0.0);
            phi.zip_mut_with(fv, |a, f| *a += f * w);
        }
        let mut corr = prev_new.clone();
        corr.zip_mut_with(&prev_old, |c, o| *c -= o);
        let psi = model.dense_apply_f(0.5 * (prev_s + s_row), &corr);
        let tau = C64::new(s_row - prev_s, 0.0);
        phi.zip_mut_with(&psi, |a, p| *a += p * tau);

        prev_new = phi.clone();
        prev_old = old[row].clone();
        prev_s = s_row;
        new.push(phi);
    }
    new
}

/// Direct dense solve of the collocation fixed point
/// `(I - Sigma) v* = 1 (x) v0` on the stage vector, for tiny `K`.
pub fn dense_collocation_solve_schrodinger(
    model: &SchrodingerModel,
    rule: &CollocationRule,
    u0: &Array2<C64>,
) -> Result<Vec<Array2<C64>>> {
    let k = model.dim();
    let j = rule.num_nodes();
    let kk = k * k;
    // Sigma[(row, m)] = omega[row, m] * F_{s_m}, where F acts on vec(v).
    let mut system = Array2::<C64>::eye(j * kk);
    for m in 0..j {
        let s = rule.nodes()[m];
        let fmat = dense_f_matrix(model, s);
        for row in 0..j {
            let w = C64::new(rule.omega()[[row, m]], 0.0);
            for a in 0..kk {
                for b in 0..kk {
                    system[[row * kk + a, m * kk + b]] -= w * fmat[[a, b]];
                }
            }
        }
    }
    let mut rhs = Array1::<C64>::zeros(j * kk);
    for row in 0..j {
        for (i, &x) in u0.iter().enumerate() {
            rhs[row * kk + i] = x;
        }
    }
    let sol = system.solve(&rhs)?;
    Ok((0..j)
        .map(|row| {
            Array2::from_shape_fn((k, k), |(a, b)| sol[row * kk + a * k + b])
        })
        .collect())
}

/// The operator `v -> F_s v` materialized on vectorized states.
fn dense_f_matrix(model: &SchrodingerModel, s: f64) -> Array2<C64> {
    let k = model.dim();
    let kk = k * k;
    let mut out = Array2::zeros((kk, kk));
    for b in 0..kk {
        let mut basis = Array2::zeros((k, k));
        basis[[b / k, b % k]] = C64::new(1.0, 0.0);
        let image = model.dense_apply_f(s, &basis);
        for (a, &x) in image.iter().enumerate() {
            out[[a, b]] = x;
        }
    }
    out
}

/// Dense Picard reference for the Schrödinger problem, untwisted outputs.
pub fn schrodinger_reference(
    model: &SchrodingerModel,
    j: usize,
    h: f64,
    intervals: usize,
    tol: f64,
    max_iters: usize,
) -> Result<DenseTrajectory<C64>> {
    schrodinger_reference_from(model, model.dense_initial_state(), j, h, intervals, tol, max_iters)
}

/// Dense Picard reference with custom initial data.
pub fn schrodinger_reference_from(
    model: &SchrodingerModel,
    initial: Array2<C64>,
    j: usize,
    h: f64,
    intervals: usize,
    tol: f64,
    max_iters: usize,
) -> Result<DenseTrajectory<C64>> {
    let rule = CollocationRule::gauss_legendre(j, 0.0, h)?;
    let mut times = vec![0.0];
    let mut states = vec![initial];
    let mut u0 = states[0].clone();
    let mut converged = true;

    for n in 0..intervals {
        let t_start = n as f64 * h;
        let mut stages: Vec<Array2<C64>> = vec![Array2::zeros(u0.raw_dim()); j];
        let mut ok = false;
        for _ in 0..max_iters {
            let fevals = dense_f_evals(model, &rule, &stages);
            let phi = dense_picard_rows(&rule, &u0, &fevals);
            let res = phi
                .iter()
                .zip(stages.iter())
                .map(|(a, b)| dense_dist(a, b))
                .fold(0.0, f64::max);
            let done = res <= tol;
            stages = phi;
            if done {
                ok = true;
                break;
            }
        }
        converged &= ok;
        let boundary = dense_boundary_schrodinger(model, &rule, &u0, &stages);
        for (m, v) in stages.iter().enumerate() {
            let s = rule.nodes()[m];
            times.push(t_start + s);
            states.push(model.dense_untwist(s, v));
        }
        u0 = model.dense_untwist(h, &boundary);
        times.push(t_start + h);
        states.push(u0.clone());
    }
    Ok(DenseTrajectory {
        times,
        states,
        converged,
    })
}

// ── parabolic: dense Duhamel maps with secondary quadrature ──────────

/// Precomputed exponential scalings for one rule + secondary plan.
pub struct ParabolicExpTables {
    /// Per row: `exp(-a tau_j lam)`.
    prop: Vec<Array1<f64>>,
    /// Per row, per inner node: `exp(-a back_time lam)`.
    back: Vec<Vec<Array1<f64>>>,
}

pub fn parabolic_exp_tables(
    model: &ParabolicModel,
    plan: &SecondaryQuadrature,
) -> ParabolicExpTables {
    let lam = model.lap_eigs();
    let a = model.diffusion();
    let expvec = |t: f64| -> Array1<f64> {
        Array1::from_iter(lam.iter().map(|&l| (-a * t * l).exp()))
    };
    ParabolicExpTables {
        prop: plan.rows().iter().map(|r| expvec(r.tau)).collect(),
        back: plan
            .rows()
            .iter()
            .map(|r| r.nodes.iter().map(|q| expvec(q.back_time)).collect())
            .collect(),
    }
}

/// One dense Picard application of the parabolic Duhamel map. `stages` are
/// the current node values; the recursion never uses a negative-time
/// exponential.
pub fn dense_parabolic_phi(
    model: &ParabolicModel,
    plan: &SecondaryQuadrature,
    tables: &ParabolicExpTables,
    u0: &Array2<f64>,
    stages: &[Array2<f64>],
) -> Vec<Array2<f64>> {
    let w: Vec<Array2<f64>> = stages
        .par_iter()
        .map(|u| model.dense_apply_g(u) + model.dense_source())
        .collect();
    dense_parabolic_rows(plan, tables, u0, &w, None)
}

/// One dense SDC sweep of the parabolic map with the explicit Euler
/// corrector `Psi = tau e^{a tau Lap} G`.
pub fn dense_parabolic_sdc(
    model: &ParabolicModel,
    plan: &SecondaryQuadrature,
    tables: &ParabolicExpTables,
    u0: &Array2<f64>,
    old: &[Array2<f64>],
) -> Vec<Array2<f64>> {
    let w: Vec<Array2<f64>> = old
        .par_iter()
        .map(|u| model.dense_apply_g(u) + model.dense_source())
        .collect();
    dense_parabolic_rows(plan, tables, u0, &w, Some((model, old)))
}

/// Shared row recursion. With `sdc = Some((model, old))` each row adds the
/// low-order correction and the recursion restarts from the corrected value.
fn dense_parabolic_rows(
    plan: &SecondaryQuadrature,
    tables: &ParabolicExpTables,
    u0: &Array2<f64>,
    w: &[Array2<f64>],
    sdc: Option<(&ParabolicModel, &[Array2<f64>])>,
) -> Vec<Array2<f64>> {
    let k = u0.nrows();
    let mut out: Vec<Array2<f64>> = Vec::with_capacity(plan.rows().len());
    let mut prev = to_standard(u0);
    let mut prev_old: Option<Array2<f64>> = sdc.map(|_| prev.clone());
    let w: Vec<Array2<f64>> = w.iter().map(to_standard).collect();
    let w = &w;

    for (j, row) in plan.rows().iter().enumerate() {
        let prop = &tables.prop[j];
        let backs = &tables.back[j];
        let mut phi = Array2::<f64>::zeros((k, k));
        phi.axis_iter_mut(Axis(0))
            .into_par_iter()
            .enumerate()
            .for_each(|(i, mut dst)| {
                let dst = dst.as_slice_mut().expect("row-major");
                let prev_row = prev.row(i);
                let prev_row = prev_row.as_slice().expect("row-major");
                let pi = prop[i];
                for (c, d) in dst.iter_mut().enumerate() {
                    *d = pi * prop[c] * prev_row[c];
                }
                let mut tmp = vec![0.0; k];
                for (q, node) in row.nodes.iter().enumerate() {
                    tmp.iter_mut().for_each(|t| *t = 0.0);
                    for (m, wm) in w.iter().enumerate() {
                        let c = node.lagrange[m];
                        if c == 0.0 {
                            continue;
                        }
                        let src = wm.row(i);
                        let src = src.as_slice().expect("row-major");
                        for (t, s) in tmp.iter_mut().zip(src.iter()) {
                            *t += c * s;
                        }
                    }
                    let back = &backs[q];
                    let scale = node.weight * back[i];
                    for (c, d) in dst.iter_mut().enumerate() {
                        *d += scale * back[c] * tmp[c];
                    }
                }
            });

        if let Some((model, old)) = sdc {
            // Psi applied to (previous corrected - previous old); no source.
            let mut corr = prev.clone();
            corr.zip_mut_with(prev_old.as_ref().expect("sdc state"), |c, o| *c -= o);
            let g = model.dense_apply_g(&corr);
            let mut psi = g;
            scale_rows_real(&mut psi, prop);
            scale_cols_real(&mut psi, prop);
            phi.zip_mut_with(&psi, |p, x| *p += row.tau * x);
            prev_old = Some(old[j].clone());
        }

        prev = phi.clone();
        out.push(phi);
    }
    out
}

fn to_standard(a: &Array2<f64>) -> Array2<f64> {
    if a.is_standard_layout() {
        a.clone()
    } else {
        Array2::from_shape_fn(a.raw_dim(), |(i, j)| a[[i, j]])
    }
}

fn scale_rows_real(a: &mut Array2<f64>, d: &Array1<f64>) {
    for (mut row, &s) in a.rows_mut().into_iter().zip(d.iter()) {
        row.mapv_inplace(|x| x * s);
    }
}

fn scale_cols_real(a: &mut Array2<f64>, d: &Array1<f64>) {
    for (mut col, &s) in a.columns_mut().into_iter().zip(d.iter()) {
        col.mapv_inplace(|x| x * s);
    }
}

/// Dense Picard reference for the parabolic problem (Radau nodes; the last
/// node is the subinterval boundary).
pub fn parabolic_reference(
    model: &ParabolicModel,
    j: usize,
    h: f64,
    intervals: usize,
    tol: f64,
    n_bisect: usize,
    inner_nodes: usize,
    max_iters: usize,
) -> Result<DenseTrajectory<f64>> {
    let rule = CollocationRule::radau_legendre(j, 0.0, h)?;
    let plan = SecondaryQuadrature::new(&rule, n_bisect, inner_nodes)?;
    let tables = parabolic_exp_tables(model, &plan);

    let mut times = vec![0.0];
    let mut states = vec![model.dense_initial_state()];
    let mut u0 = states[0].clone();
    let mut converged = true;

    for n in 0..intervals {
        let t_start = n as f64 * h;
        let mut stages: Vec<Array2<f64>> = vec![Array2::zeros(u0.raw_dim()); j];
        let mut ok = false;
        for _ in 0..max_iters {
            let phi = dense_parabolic_phi(model, &plan, &tables, &u0, &stages);
            let res = phi
                .iter()
                .zip(stages.iter())
                .map(|(a, b)| dense_dist(a, b))
                .fold(0.0, f64::max);
            let done = res <= tol;
            stages = phi;
            if done {
                ok = true;
                break;
            }
        }
        converged &= ok;
        for (m, v) in stages.iter().enumerate() {
            times.push(t_start + rule.nodes()[m]);
            states.push(v.clone());
        }
        u0 = stages[j - 1].clone();
    }
    Ok(DenseTrajectory {
        times,
        states,
        converged,
    })
}

// ── rank oracles ─────────────────────────────────────────────────────

/// Singular values of a dense state (descending).
pub fn singular_values<T: LrScalar>(state: &Array2<T>) -> Array1<f64> {
    let (_, sv, _) = state
        .svddc(JobSvd::None)
        .expect("singular value computation");
    sv
}

/// Per-time minimal rank with singular value tail energy `<= tol^2`.
pub fn optimal_ranks<T: LrScalar>(traj: &DenseTrajectory<T>, tol: f64) -> Result<Vec<usize>> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    Ok(traj
        .states
        .par_iter()
        .map(|s| rank_for_tail(&singular_values(s), tol))
        .collect())
}

/// Per-time comparison series between a run and a dense reference.
#[derive(Debug, Clone)]
pub struct RunMetrics {
    pub times: Vec<f64>,
    pub kinds: Vec<crate::integrator::TimeKind>,
    /// Absolute Frobenius error against the reference (NaN without one).
    pub errors: Vec<f64>,
    pub scheme_ranks: Vec<usize>,
    /// Minimal reference rank at the matching truncation tolerance.
    pub optimal_ranks: Vec<Option<usize>>,
    /// Boundary-norm deviation `| ||u|| - ||u_0|| |`.
    pub norm_dev: Vec<f64>,
}

/// Compare a low-rank run against a dense reference on the same time grid.
///
/// `rank_tol` is the truncation tolerance defining the optimal ranks.
pub fn metrics<T: LrScalar>(
    reference: Option<&DenseTrajectory<T>>,
    run: &crate::integrator::EvolutionOutput<T>,
    rank_tol: f64,
) -> Result<RunMetrics> {
    let norm0 = run
        .states
        .first()
        .map(|s| s.frobenius_norm())
        .unwrap_or(0.0);
    let per_time: Vec<(f64, Option<usize>, f64)> = run
        .times
        .par_iter()
        .zip(run.states.par_iter())
        .map(|(&t, state)| {
            let norm_dev = (state.frobenius_norm() - norm0).abs();
            match reference {
                None => Ok((f64::NAN, None, norm_dev)),
                Some(traj) => {
                    let re = traj.state_at(t).ok_or_else(|| {
                        Error::InvalidParameter(format!(
                            "reference grid does not contain t = {t}"
                        ))
                    })?;
                    let err = dense_dist(&state.to_dense(), re);
                    let opt = rank_for_tail(&singular_values(re), rank_tol);
                    Ok((err, Some(opt), norm_dev))
                }
            }
        })
        .collect::<Result<_>>()?;
    Ok(RunMetrics {
        times: run.times.clone(),
        kinds: run.kinds.clone(),
        errors: per_time.iter().map(|x| x.0).collect(),
        scheme_ranks: run.states.iter().map(|s| s.rank()).collect(),
        optimal_ranks: per_time.iter().map(|x| x.1).collect(),
        norm_dev: per_time.iter().map(|x| x.2).collect(),
    })
}

/// Free Schrödinger evolution in closed form: phase rotation of every
/// coefficient. Oracle for the zero-potential smoke runs.
pub fn free_schrodinger_closed_form(
    model: &SchrodingerModel,
    u0: &Array2<C64>,
    t: f64,
) -> Array2<C64> {
    let ph: Vec<C64> = model
        .lap_eigs()
        .iter()
        .map(|&l| (-C64::i() * t * l).exp())
        .collect();
    let mut out = u0.clone();
    scale_rows(&mut out, &ph);
    scale_cols(&mut out, &ph);
    out
}

/// Pure heat decay in closed form (`b = 0`, `f = 0`).
pub fn heat_closed_form(model: &ParabolicModel, u0: &Array2<f64>, t: f64) -> Array2<f64> {
    model.dense_propagate(t, u0)
}
