//! Subcommand implementations, usable both from the binary and from tests.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};

use lowstep::integrator::{
    run_evolution_parabolic, run_evolution_schrodinger, run_evolution_schrodinger_from, RunTrace,
};
use lowstep::models::{default_source, ParabolicModel, SchrodingerModel};
use lowstep::props::{run_all, PropertyCheck};
use lowstep::reference::{
    metrics, parabolic_reference, schrodinger_reference, schrodinger_reference_from, RunMetrics,
};

use crate::config::{ExperimentConfig, ProblemKind};
use crate::output;

/// Environment variable overriding the output directory.
pub const OUTDIR_ENV: &str = "LOWSTEP_OUTDIR";

pub struct RunArtifacts {
    pub converged: bool,
    pub reference_converged: bool,
    pub metrics: RunMetrics,
    pub trace: RunTrace,
    pub out_dir: PathBuf,
}

fn resolve_out_dir(config: &ExperimentConfig, cli_override: Option<&Path>) -> PathBuf {
    if let Ok(dir) = std::env::var(OUTDIR_ENV) {
        if !dir.is_empty() {
            return PathBuf::from(dir);
        }
    }
    cli_override
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from(&config.output.dir))
}

/// Execute one experiment run and write `trace.csv`, `boundary.csv` and
/// `ranks.csv` into the output directory.
pub fn cmd_run(config: &ExperimentConfig, out_override: Option<&Path>) -> anyhow::Result<RunArtifacts> {
    config.validate()?;
    let it_config = config.integrator_config()?;
    let out_dir = resolve_out_dir(config, out_override);
    std::fs::create_dir_all(&out_dir)
        .with_context(|| format!("creating output directory {}", out_dir.display()))?;

    let k = config.problem.k;
    let (run_metrics, trace, converged, reference_converged) = match config.problem.kind {
        ProblemKind::Schrodinger | ProblemKind::SchrodingerFree => {
            let model = match config.problem.kind {
                ProblemKind::SchrodingerFree => SchrodingerModel::free(k),
                _ => SchrodingerModel::new(k, config.problem.n, config.problem.m)?,
            };
            let out = run_evolution_schrodinger(&model, &it_config)?;
            let reference = if config.reference.enabled {
                Some(schrodinger_reference(
                    &model,
                    it_config.nodes,
                    it_config.h,
                    it_config.intervals,
                    config.reference_tol(),
                    config.reference.max_iters,
                )?)
            } else {
                None
            };
            let ref_ok = reference.as_ref().map(|r| r.converged).unwrap_or(true);
            let m = metrics(reference.as_ref(), &out, config.rank_tol())?;
            (m, out.trace, out.converged, ref_ok)
        }
        ProblemKind::Parabolic => {
            let model = ParabolicModel::new(k, config.problem.a, config.problem.b, default_source(k))?;
            let out = run_evolution_parabolic(&model, &it_config)?;
            let reference = if config.reference.enabled {
                Some(parabolic_reference(
                    &model,
                    it_config.nodes,
                    it_config.h,
                    it_config.intervals,
                    config.reference_tol(),
                    config.reference.n_bisect,
                    config.reference.inner_nodes,
                    config.reference.max_iters,
                )?)
            } else {
                None
            };
            let ref_ok = reference.as_ref().map(|r| r.converged).unwrap_or(true);
            let m = metrics(reference.as_ref(), &out, config.rank_tol())?;
            (m, out.trace, out.converged, ref_ok)
        }
    };

    output::write_trace(&out_dir.join("trace.csv"), &trace)?;
    output::write_boundary(&out_dir.join("boundary.csv"), &run_metrics)?;
    output::write_ranks(&out_dir.join("ranks.csv"), &run_metrics)?;

    Ok(RunArtifacts {
        converged,
        reference_converged,
        metrics: run_metrics,
        trace,
        out_dir,
    })
}

pub struct ConvergenceStudy {
    /// `(J, h, boundary error at the final time)`
    pub rows: Vec<(usize, f64, f64)>,
    /// Fitted log-log slope per J.
    pub orders: Vec<(usize, f64)>,
    pub out_dir: PathBuf,
}

/// Convergence-order study: thresholds disabled, boundary error at a common
/// final time against a high-order dense reference, log-log slope fit.
pub fn cmd_convergence(
    j_list: &[usize],
    h_list: &[f64],
    k: usize,
    t_final: Option<f64>,
    out_dir: &Path,
) -> anyhow::Result<ConvergenceStudy> {
    if j_list.is_empty() || h_list.is_empty() {
        bail!("need at least one J and one h");
    }
    let t_end = t_final.unwrap_or_else(|| h_list.iter().cloned().fold(f64::MIN, f64::max));
    let steps_of = |h: f64| -> anyhow::Result<usize> {
        let n = t_end / h;
        if (n - n.round()).abs() > 1e-9 || n.round() < 1.0 {
            bail!("final time {t_end} is not a multiple of h = {h}");
        }
        Ok(n.round() as usize)
    };

    let model = SchrodingerModel::new(k, 1, 1)?;
    // Spectrally smooth initial data: the order-2J constants involve high
    // time derivatives of the solution, which the rough experiment profile
    // does not control.
    let initial = model.smooth_initial_state();
    // High-order truth: J = 8 on the finest grid pushes the collocation
    // error far below every studied configuration.
    let h_min = h_list.iter().cloned().fold(f64::MAX, f64::min);
    let truth = schrodinger_reference_from(
        &model,
        initial.to_dense(),
        8,
        h_min,
        steps_of(h_min)?,
        1e-13,
        800,
    )?;
    if !truth.converged {
        bail!("reference iteration did not converge");
    }
    let exact = truth
        .state_at(t_end)
        .context("reference grid misses the final time")?
        .clone();

    let mut rows = Vec::new();
    let mut orders = Vec::new();
    for &j in j_list {
        let mut points = Vec::new();
        for &h in h_list {
            let config = lowstep::integrator::IntegratorConfig {
                h,
                intervals: steps_of(h)?,
                nodes: j,
                method: lowstep::integrator::Method::Picard,
                eps: 1e-12,
                delta_boundary: 0.0,
                delta_rel: 0.0,
                delta_rel_residual: 0.0,
                schedule: lowstep::integrator::ThresholdSchedule::constant(0.5)
                    .map_err(|e| anyhow::anyhow!("{e}"))?,
                alpha0: lowstep::integrator::Alpha0::Fixed(0.0),
                max_iters: 500,
                secondary: lowstep::integrator::SecondaryConfig::default(),
                theoretical: None,
            };
            let out = run_evolution_schrodinger_from(&model, &config, initial.clone())?;
            if !out.converged {
                bail!("J={j}, h={h}: fixed-point iteration did not converge");
            }
            let (_, state) = out
                .boundary_states()
                .find(|(t, _)| (t - t_end).abs() <= 1e-10)
                .context("run misses the final time")?;
            let err: f64 = (&state.to_dense() - &exact)
                .iter()
                .map(|x| x.norm_sqr())
                .sum::<f64>()
                .sqrt();
            rows.push((j, h, err));
            points.push((h.ln(), err.max(1e-300).ln()));
        }
        orders.push((j, least_squares_slope(&points)));
    }

    std::fs::create_dir_all(out_dir)?;
    output::write_convergence(out_dir, &rows, &orders)?;
    Ok(ConvergenceStudy {
        rows,
        orders,
        out_dir: out_dir.to_path_buf(),
    })
}

fn least_squares_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let cov: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let var: f64 = points.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    cov / var
}

/// Run the seeded property suites; `true` when everything passed.
pub fn cmd_properties(seed: u64) -> (Vec<PropertyCheck>, bool) {
    let checks = run_all(seed);
    let ok = checks.iter().all(|c| c.passed);
    (checks, ok)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_fit_recovers_exact_powers() {
        let points: Vec<(f64, f64)> = [0.2_f64, 0.1, 0.05]
            .iter()
            .map(|&h| (h.ln(), (3.7 * h.powi(4)).ln()))
            .collect();
        let slope = least_squares_slope(&points);
        assert!((slope - 4.0).abs() < 1e-12);
    }
}
