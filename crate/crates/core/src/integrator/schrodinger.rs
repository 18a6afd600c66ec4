//! Fixed-point map for the twisted Schrödinger formulation: rows combine
//! the cached right-hand-side evaluations through the spectral integration
//! matrix, with a recompression after every addition.

use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::error::Result;
use crate::integrator::{FixedPointMap, OpContext, StageVector};
use crate::lowrank::LowRankMatrix;
use crate::models::SchrodingerModel;
use crate::quadrature::{CollocationRule, RuleKind};

pub struct SchrodingerMap<'m> {
    model: &'m SchrodingerModel,
    rule: CollocationRule,
}

impl<'m> SchrodingerMap<'m> {
    /// `rule` is interval-relative (`t0 = 0`); the twisted variable is
    /// re-based at each interval start.
    pub fn new(model: &'m SchrodingerModel, rule: CollocationRule) -> Self {
        debug_assert_eq!(rule.t0(), 0.0);
        Self { model, rule }
    }

    pub fn model(&self) -> &SchrodingerModel {
        self.model
    }

    /// Symmetric explicit corrector `Psi_{t_prev,t_j} = (t_j - t_prev) F_mid`.
    pub fn low_order_psi(
        &self,
        t_prev: f64,
        t_j: f64,
        w: &LowRankMatrix<C64>,
    ) -> Result<LowRankMatrix<C64>> {
        let f_mid = self.model.apply_f(0.5 * (t_prev + t_j), w)?;
        Ok(f_mid.scaled(C64::new(t_j - t_prev, 0.0)))
    }
}

impl<'m> FixedPointMap<C64> for SchrodingerMap<'m> {
    /// Right-hand-side evaluations `F_{t_m}(v_m)`, computed once per
    /// iteration and reused by every row.
    type Cache = Vec<LowRankMatrix<C64>>;

    fn rule(&self) -> &CollocationRule {
        &self.rule
    }

    fn state_shape(&self) -> (usize, usize) {
        (self.model.dim(), self.model.dim())
    }

    fn prepare(&self, stages: &StageVector<C64>, ctx: &OpContext) -> Result<Self::Cache> {
        let fevals: Vec<LowRankMatrix<C64>> = self
            .rule
            .nodes()
            .par_iter()
            .zip(stages.entries().par_iter())
            .map(|(&s, v)| self.model.apply_f(s, v))
            .collect::<Result<_>>()?;
        for f in &fevals {
            ctx.observe(f.rank());
        }
        Ok(fevals)
    }

    fn rows_independent(&self) -> bool {
        true
    }

    fn phi_row(
        &self,
        cache: &Self::Cache,
        row: usize,
        u0: &LowRankMatrix<C64>,
        _prev_phi: Option<&LowRankMatrix<C64>>,
        ctx: &OpContext,
    ) -> Result<LowRankMatrix<C64>> {
        let mut acc = u0.clone();
        for (m, fv) in cache.iter().enumerate() {
            let w = self.rule.omega()[[row, m]];
            if w == 0.0 || fv.rank() == 0 {
                continue;
            }
            acc = acc.add_recompressed(fv, C64::new(w, 0.0), ctx.delta())?;
            ctx.observe(acc.rank());
        }
        Ok(acc)
    }

    fn sdc_row(
        &self,
        cache: &Self::Cache,
        row: usize,
        _u0: &LowRankMatrix<C64>,
        prev_new: &LowRankMatrix<C64>,
        prev_old: &LowRankMatrix<C64>,
        ctx: &OpContext,
    ) -> Result<LowRankMatrix<C64>> {
        let mut acc = prev_new.clone();
        // residual-term assembly gets the tighter tolerance
        for (m, fv) in cache.iter().enumerate() {
            let w = self.rule.omega_tilde()[[row, m]];
            if w == 0.0 || fv.rank() == 0 {
                continue;
            }
            acc = acc.add_recompressed(fv, C64::new(w, 0.0), ctx.delta_residual())?;
            ctx.observe(acc.rank());
        }
        let s_prev = if row == 0 { 0.0 } else { self.rule.nodes()[row - 1] };
        let s_row = self.rule.nodes()[row];
        let corr = prev_new.add_recompressed(prev_old, C64::new(-1.0, 0.0), ctx.delta_residual())?;
        if corr.rank() > 0 {
            let psi = self.low_order_psi(s_prev, s_row, &corr)?;
            ctx.observe(psi.rank());
            acc = acc.add_recompressed(&psi, C64::new(1.0, 0.0), ctx.delta())?;
            ctx.observe(acc.rank());
        }
        Ok(acc)
    }

    fn boundary(
        &self,
        cache: &Self::Cache,
        u0: &LowRankMatrix<C64>,
        ctx: &OpContext,
    ) -> Result<LowRankMatrix<C64>> {
        let mut acc = u0.clone();
        for (m, fv) in cache.iter().enumerate() {
            let w = self.rule.weights()[m];
            if fv.rank() == 0 {
                continue;
            }
            acc = acc.add_recompressed(fv, C64::new(w, 0.0), ctx.delta())?;
            ctx.observe(acc.rank());
        }
        Ok(acc)
    }

    fn boundary_is_last_node(&self) -> bool {
        self.rule.kind() == RuleKind::RadauRight
    }

    fn contraction_constant(&self) -> Option<f64> {
        Some(self.rule.h() * self.rule.lambda_j() * self.model.c_v())
    }
}
