//! CSV emission. Every file starts with a schema comment line; floats are
//! written in shortest round-trip exponent form so that identical runs
//! produce byte-identical files.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use lowstep::integrator::{RunTrace, TimeKind};
use lowstep::reference::RunMetrics;

pub const SCHEMA: &str = "lowstep-csv v1";

fn fmt(x: f64) -> String {
    format!("{x:e}")
}

fn kind_label(kind: TimeKind) -> &'static str {
    match kind {
        TimeKind::Initial => "initial",
        TimeKind::Node => "node",
        TimeKind::Boundary => "boundary",
    }
}

/// Iteration-level trace: one row per fixed-point iteration.
pub fn write_trace(path: &Path, trace: &RunTrace) -> anyhow::Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    writeln!(w, "# {SCHEMA} trace")?;
    writeln!(
        w,
        "time,interval,iter,res,err,alpha,min_node_rank,max_node_rank,phi_max_rank,max_intermediate_rank"
    )?;
    for rec in &trace.iterations {
        let t_start = trace
            .intervals
            .iter()
            .find(|iv| iv.interval == rec.interval)
            .map(|iv| iv.t_start)
            .unwrap_or(f64::NAN);
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{}",
            fmt(t_start),
            rec.interval,
            rec.iter,
            fmt(rec.res),
            fmt(rec.err),
            fmt(rec.alpha),
            rec.node_ranks.iter().min().copied().unwrap_or(0),
            rec.node_ranks.iter().max().copied().unwrap_or(0),
            rec.phi_max_rank,
            rec.max_intermediate_rank,
        )?;
    }
    w.flush()?;
    Ok(())
}

/// Boundary series: error, rank, optimal rank and norm deviation per
/// subinterval boundary.
pub fn write_boundary(path: &Path, metrics: &RunMetrics) -> anyhow::Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    writeln!(w, "# {SCHEMA} boundary")?;
    writeln!(w, "time,error,rank,optimal_rank,norm_dev")?;
    for i in 0..metrics.times.len() {
        if metrics.kinds[i] != TimeKind::Boundary {
            continue;
        }
        writeln!(
            w,
            "{},{},{},{},{}",
            fmt(metrics.times[i]),
            fmt(metrics.errors[i]),
            metrics.scheme_ranks[i],
            metrics.optimal_ranks[i]
                .map(|r| r.to_string())
                .unwrap_or_default(),
            fmt(metrics.norm_dev[i]),
        )?;
    }
    w.flush()?;
    Ok(())
}

/// Rank series over every output time (initial state, nodes, boundaries).
pub fn write_ranks(path: &Path, metrics: &RunMetrics) -> anyhow::Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    writeln!(w, "# {SCHEMA} ranks")?;
    writeln!(w, "time,kind,rank,optimal_rank")?;
    for i in 0..metrics.times.len() {
        writeln!(
            w,
            "{},{},{},{}",
            fmt(metrics.times[i]),
            kind_label(metrics.kinds[i]),
            metrics.scheme_ranks[i],
            metrics.optimal_ranks[i]
                .map(|r| r.to_string())
                .unwrap_or_default(),
        )?;
    }
    w.flush()?;
    Ok(())
}

/// Convergence study data and fitted orders.
pub fn write_convergence(
    dir: &Path,
    rows: &[(usize, f64, f64)],
    orders: &[(usize, f64)],
) -> anyhow::Result<()> {
    let mut w = BufWriter::new(fs::File::create(dir.join("convergence.csv"))?);
    writeln!(w, "# {SCHEMA} convergence")?;
    writeln!(w, "J,h,error")?;
    for (j, h, err) in rows {
        writeln!(w, "{j},{},{}", fmt(*h), fmt(*err))?;
    }
    w.flush()?;

    let mut w = BufWriter::new(fs::File::create(dir.join("orders.csv"))?);
    writeln!(w, "# {SCHEMA} orders")?;
    writeln!(w, "J,slope")?;
    for (j, slope) in orders {
        writeln!(w, "{j},{}", fmt(*slope))?;
    }
    w.flush()?;
    Ok(())
}
