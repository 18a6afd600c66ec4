//! Fixed-point map for the parabolic Duhamel formulation with dyadic
//! secondary quadrature.
//!
//! Each row propagates the previous row by the heat semigroup and adds the
//! quadrature of `e^{a (t_j - s) Lap} p(s)` over the dyadic panels, where
//! `p(s)` interpolates the non-stiff terms `W_m = G u_m + f`. The `W_m`
//! share most of their column and row spaces, so they are compressed into a
//! joint orthonormal basis once per iteration; interpolants `p(s)` then
//! reduce to small-core combinations. No exponential is ever formed with a
//! negative time argument.

use ndarray::{s, Array1, Array2};
use ndarray_linalg::{JobSvd, SVDDC, QR};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::integrator::{FixedPointMap, OpContext, SecondaryConfig, StageVector};
use crate::lowrank::{rank_for_tail, LowRankMatrix, NOISE_FLOOR};
use crate::models::ParabolicModel;
use crate::quadrature::{CollocationRule, RuleKind, SecondaryQuadrature};

pub struct ParabolicMap<'m> {
    model: &'m ParabolicModel,
    rule: CollocationRule,
    plan: SecondaryQuadrature,
}

impl<'m> ParabolicMap<'m> {
    pub fn new(
        model: &'m ParabolicModel,
        rule: CollocationRule,
        secondary: SecondaryConfig,
    ) -> Result<Self> {
        if rule.kind() != RuleKind::RadauRight {
            return Err(Error::InvalidParameter(
                "parabolic integration requires a right-endpoint Radau rule".into(),
            ));
        }
        debug_assert_eq!(rule.t0(), 0.0);
        let plan = SecondaryQuadrature::new(&rule, secondary.n_bisect, secondary.inner_nodes)?;
        Ok(Self { model, rule, plan })
    }

    pub fn model(&self) -> &ParabolicModel {
        self.model
    }

    pub fn plan(&self) -> &SecondaryQuadrature {
        &self.plan
    }

    /// Explicit Euler corrector `Psi = (t_j - t_prev) e^{a (t_j - t_prev) Lap} G`.
    pub fn low_order_psi(
        &self,
        t_prev: f64,
        t_j: f64,
        w: &LowRankMatrix<f64>,
    ) -> Result<LowRankMatrix<f64>> {
        let tau = t_j - t_prev;
        if !(tau > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "corrector needs t_prev < t_j, got gap {tau}"
            )));
        }
        let g = self.model.apply_g(w)?;
        Ok(self.model.propagate(tau, &g)?.scaled(tau))
    }

    /// Inner quadrature of one row added onto `acc`.
    fn add_row_quadrature(
        &self,
        cache: &JointCache,
        row: usize,
        mut acc: LowRankMatrix<f64>,
        add_delta: f64,
        trim_delta: f64,
        ctx: &OpContext,
    ) -> Result<LowRankMatrix<f64>> {
        for node in &self.plan.rows()[row].nodes {
            let Some(p) = cache.interpolant(&node.lagrange, trim_delta) else {
                continue;
            };
            ctx.observe(p.rank());
            let prop = self.model.propagate(node.back_time, &p)?;
            acc = acc.add_recompressed(&prop, node.weight, add_delta)?;
            ctx.observe(acc.rank());
        }
        Ok(acc)
    }
}

/// The per-iteration cache: `W_m = G u_m + f` expressed in joint
/// orthonormal bases, `W_m = q_left . core_m . q_right^T`.
pub struct JointCache {
    q_left: Array2<f64>,
    q_right: Array2<f64>,
    cores: Vec<Array2<f64>>,
}

impl JointCache {
    /// `p = sum_m lagrange[m] W_m` as a canonical low-rank value, truncated
    /// at tail energy `trim`; `None` when the combination vanishes.
    fn interpolant(&self, lagrange: &[f64], trim: f64) -> Option<LowRankMatrix<f64>> {
        let (ql, qr) = (self.q_left.ncols(), self.q_right.ncols());
        if ql == 0 || qr == 0 {
            return None;
        }
        let mut core = Array2::<f64>::zeros((ql, qr));
        let mut any = false;
        for (c, m) in lagrange.iter().zip(self.cores.iter()) {
            if *c == 0.0 {
                continue;
            }
            core.zip_mut_with(m, |acc, x| *acc += c * x);
            any = true;
        }
        if !any {
            return None;
        }
        let (u, sv, vh) = core.svddc(JobSvd::Some).expect("small core svd");
        let (u, vh) = (u.expect("core svd u"), vh.expect("core svd vh"));
        let smax = sv.first().copied().unwrap_or(0.0);
        let mut keep = sv
            .iter()
            .take_while(|&&x| x > NOISE_FLOOR * smax && x > 0.0)
            .count();
        keep = keep.min(rank_for_tail(&sv, trim));
        if keep == 0 {
            return None;
        }
        let left = self.q_left.dot(&u.slice(s![.., ..keep]));
        let right = self.q_right.dot(&vh.slice(s![..keep, ..]).t().to_owned());
        Some(LowRankMatrix::from_canonical_unchecked(
            left,
            sv.slice(s![..keep]).to_owned(),
            right,
        ))
    }
}

/// Orthonormal basis of the joint column space of `factor_m . diag(sigma_m)`
/// blocks, truncated at tail energy `tol`.
fn joint_basis(blocks: &[(&Array2<f64>, &Array1<f64>)], dim: usize, tol: f64) -> Array2<f64> {
    let total: usize = blocks.iter().map(|(f, _)| f.ncols()).sum();
    if total == 0 {
        return Array2::zeros((dim, 0));
    }
    let mut stack = Array2::zeros((dim, total));
    let mut at = 0;
    for (f, sig) in blocks {
        for (c, &s_c) in sig.iter().enumerate() {
            let mut col = stack.column_mut(at);
            col.assign(&f.column(c));
            col.mapv_inplace(|x| x * s_c);
            at += 1;
        }
    }
    let (q, r) = stack.qr().expect("joint basis qr");
    let (u, sv, _) = r.svddc(JobSvd::Some).expect("joint basis svd");
    let u = u.expect("joint basis svd u");
    let smax = sv.first().copied().unwrap_or(0.0);
    let mut keep = sv
        .iter()
        .take_while(|&&x| x > NOISE_FLOOR * smax && x > 0.0)
        .count();
    keep = keep.min(rank_for_tail(&sv, tol));
    q.dot(&u.slice(s![.., ..keep]))
}

impl<'m> FixedPointMap<f64> for ParabolicMap<'m> {
    type Cache = JointCache;

    fn rule(&self) -> &CollocationRule {
        &self.rule
    }

    fn state_shape(&self) -> (usize, usize) {
        (self.model.dim(), self.model.dim())
    }

    fn prepare(&self, stages: &StageVector<f64>, ctx: &OpContext) -> Result<Self::Cache> {
        let w: Vec<LowRankMatrix<f64>> = stages
            .entries()
            .par_iter()
            .map(|u| {
                self.model
                    .apply_g(u)?
                    .add_recompressed(self.model.source(), 1.0, ctx.delta_assembly())
            })
            .collect::<Result<_>>()?;
        for wm in &w {
            ctx.observe(wm.rank());
        }
        let k = self.model.dim();
        let tol = ctx.delta_assembly();
        let left_blocks: Vec<_> = w.iter().map(|m| (m.left(), m.sigma())).collect();
        let right_blocks: Vec<_> = w.iter().map(|m| (m.right(), m.sigma())).collect();
        let (q_left, q_right) = rayon::join(
            || joint_basis(&left_blocks, k, tol),
            || joint_basis(&right_blocks, k, tol),
        );
        let cores = w
            .iter()
            .map(|m| {
                if m.rank() == 0 {
                    return Array2::zeros((q_left.ncols(), q_right.ncols()));
                }
                let lc = q_left.t().dot(m.left());
                let rc = m.right().t().dot(&q_right);
                let mut mid = lc;
                for (mut col, &s_c) in mid.columns_mut().into_iter().zip(m.sigma().iter()) {
                    col.mapv_inplace(|x| x * s_c);
                }
                mid.dot(&rc)
            })
            .collect();
        Ok(JointCache {
            q_left,
            q_right,
            cores,
        })
    }

    fn rows_independent(&self) -> bool {
        false
    }

    fn phi_row(
        &self,
        cache: &Self::Cache,
        row: usize,
        u0: &LowRankMatrix<f64>,
        prev_phi: Option<&LowRankMatrix<f64>>,
        ctx: &OpContext,
    ) -> Result<LowRankMatrix<f64>> {
        let prev = prev_phi.unwrap_or(u0);
        let acc = self.model.propagate(self.plan.rows()[row].tau, prev)?;
        ctx.observe(acc.rank());
        self.add_row_quadrature(cache, row, acc, ctx.delta(), ctx.delta(), ctx)
    }

    fn sdc_row(
        &self,
        cache: &Self::Cache,
        row: usize,
        _u0: &LowRankMatrix<f64>,
        prev_new: &LowRankMatrix<f64>,
        prev_old: &LowRankMatrix<f64>,
        ctx: &OpContext,
    ) -> Result<LowRankMatrix<f64>> {
        let tau = self.plan.rows()[row].tau;
        let acc = self.model.propagate(tau, prev_new)?;
        ctx.observe(acc.rank());
        let mut acc =
            self.add_row_quadrature(cache, row, acc, ctx.delta_residual(), ctx.delta_residual(), ctx)?;
        // the corrector sees only the difference, so the source drops out
        let corr = prev_new.add_recompressed(prev_old, -1.0, ctx.delta_residual())?;
        if corr.rank() > 0 {
            let psi = self.low_order_psi(0.0, tau, &corr)?;
            ctx.observe(psi.rank());
            acc = acc.add_recompressed(&psi, 1.0, ctx.delta())?;
            ctx.observe(acc.rank());
        }
        Ok(acc)
    }

    fn boundary(
        &self,
        _cache: &Self::Cache,
        _u0: &LowRankMatrix<f64>,
        _ctx: &OpContext,
    ) -> Result<LowRankMatrix<f64>> {
        Err(Error::InvalidParameter(
            "Radau rules take the boundary from the last node".into(),
        ))
    }

    fn boundary_is_last_node(&self) -> bool {
        true
    }

    fn contraction_constant(&self) -> Option<f64> {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn secondary_weights_sum_to_gaps() {
        let rule = CollocationRule::radau_legendre(4, 0.0, 0.01).unwrap();
        let plan = SecondaryQuadrature::new(&rule, 5, 5).unwrap();
        for row in plan.rows() {
            let total: f64 = row.nodes.iter().map(|n| n.weight).sum();
            assert!((total - row.tau).abs() < 1e-14);
            for n in &row.nodes {
                assert!(n.back_time >= 0.0);
            }
        }
    }
}
