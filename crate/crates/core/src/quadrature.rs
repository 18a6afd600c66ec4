//! Collocation rules in time: Gauss-Legendre and right-endpoint
//! Radau-Legendre nodes via the Golub-Welsch algorithm, spectral integration
//! matrices, the averaged Lebesgue constant, and the dyadic secondary
//! partition used by the parabolic integrator.

use ndarray::{Array1, Array2};
use ndarray_linalg::{EigValsh, Eigh, UPLO};

use crate::error::{Error, Result};

/// Node family of a collocation rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RuleKind {
    /// Interior Gauss-Legendre nodes, degree of exactness `2J - 1`.
    Gauss,
    /// Radau nodes with the last node pinned to the right endpoint,
    /// degree of exactness `2J - 2`.
    RadauRight,
}

/// Nodes, weights and integration matrices for one subinterval `[t0, t0+h]`.
#[derive(Debug, Clone)]
pub struct CollocationRule {
    kind: RuleKind,
    t0: f64,
    h: f64,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    /// `omega[[j, m]] = ∫_{t0}^{t_j} l_m(s) ds`
    omega: Array2<f64>,
    /// `omega_tilde[[j, m]] = ∫_{t_{j-1}}^{t_j} l_m(s) ds` (row 0 from `t0`)
    omega_tilde: Array2<f64>,
    lambda_j: f64,
}

impl CollocationRule {
    /// Gauss-Legendre rule with `j` nodes on `[t0, t0 + h]`.
    pub fn gauss_legendre(j: usize, t0: f64, h: f64) -> Result<Self> {
        let (nodes, weights) = nodes_weights(RuleKind::Gauss, j, t0, h)?;
        Ok(Self::assemble(RuleKind::Gauss, t0, h, nodes, weights))
    }

    /// Right-endpoint Radau-Legendre rule with `j` nodes on `[t0, t0 + h]`.
    pub fn radau_legendre(j: usize, t0: f64, h: f64) -> Result<Self> {
        let (nodes, weights) = nodes_weights(RuleKind::RadauRight, j, t0, h)?;
        Ok(Self::assemble(RuleKind::RadauRight, t0, h, nodes, weights))
    }

    fn assemble(kind: RuleKind, t0: f64, h: f64, nodes: Vec<f64>, weights: Vec<f64>) -> Self {
        let j = nodes.len();
        // omega row j: a fresh j-node Gauss rule on [t0, t_j] integrates the
        // degree j-1 Lagrange basis exactly.
        let mut omega = Array2::zeros((j, j));
        for row in 0..j {
            let (qx, qw) =
                nodes_weights(RuleKind::Gauss, j, t0, nodes[row] - t0).expect("inner gauss");
            for m in 0..j {
                omega[[row, m]] = qx
                    .iter()
                    .zip(qw.iter())
                    .map(|(&x, &w)| w * lagrange_basis(&nodes, m, x))
                    .sum();
            }
        }
        let mut omega_tilde = omega.clone();
        for row in (1..j).rev() {
            for m in 0..j {
                omega_tilde[[row, m]] -= omega[[row - 1, m]];
            }
        }
        let lambda_j = averaged_lebesgue(&nodes, t0, h);
        Self {
            kind,
            t0,
            h,
            nodes,
            weights,
            omega,
            omega_tilde,
            lambda_j,
        }
    }

    pub fn kind(&self) -> RuleKind {
        self.kind
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn end_time(&self) -> f64 {
        self.t0 + self.h
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn omega(&self) -> &Array2<f64> {
        &self.omega
    }

    pub fn omega_tilde(&self) -> &Array2<f64> {
        &self.omega_tilde
    }

    /// Averaged Lebesgue constant `(1/h) ∫ Σ_m |l_m|`.
    pub fn lambda_j(&self) -> f64 {
        self.lambda_j
    }

    /// Evaluate the Lagrange basis polynomial for node `m` (0-based) at `t`.
    pub fn lagrange_eval(&self, m: usize, t: f64) -> f64 {
        lagrange_basis(&self.nodes, m, t)
    }

    /// Butcher tableau of the equivalent implicit Runge-Kutta method.
    pub fn butcher_a(&self) -> Array2<f64> {
        &self.omega / self.h
    }

    pub fn butcher_b(&self) -> Array1<f64> {
        Array1::from_iter(self.weights.iter().map(|w| w / self.h))
    }

    pub fn butcher_c(&self) -> Array1<f64> {
        Array1::from_iter(self.nodes.iter().map(|t| (t - self.t0) / self.h))
    }

    /// The same rule translated to start at `t0`.
    pub fn translated(&self, t0: f64) -> Self {
        let shift = t0 - self.t0;
        let mut out = self.clone();
        out.t0 = t0;
        for t in &mut out.nodes {
            *t += shift;
        }
        out
    }
}

/// Nodes and weights only (no integration matrices).
pub fn nodes_weights(kind: RuleKind, j: usize, t0: f64, h: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    if j == 0 {
        return Err(Error::InvalidParameter("rule needs at least one node".into()));
    }
    if !(h > 0.0) || !h.is_finite() || !t0.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "invalid interval t0={t0}, h={h}"
        )));
    }
    match kind {
        RuleKind::Gauss => Ok(golub_welsch(&gauss_tridiag(j, t0, h), h)),
        RuleKind::RadauRight => {
            if j == 1 {
                return Ok((vec![t0 + h], vec![h]));
            }
            // Adjust the bottom-right entry until the largest eigenvalue sits
            // on the right endpoint; lambda_max is monotone in that entry.
            let target = t0 + h;
            let mut lo = t0 + 0.5 * h;
            let mut hi = target;
            debug_assert!(max_eig(&gauss_tridiag_with_corner(j, t0, h, hi)) > target);
            for _ in 0..90 {
                let mid = 0.5 * (lo + hi);
                if max_eig(&gauss_tridiag_with_corner(j, t0, h, mid)) < target {
                    lo = mid;
                } else {
                    hi = mid;
                }
                if hi - lo <= f64::EPSILON * h {
                    break;
                }
            }
            let corner = 0.5 * (lo + hi);
            let (mut nodes, weights) =
                golub_welsch(&gauss_tridiag_with_corner(j, t0, h, corner), h);
            // Snap the pinned node onto the boundary exactly.
            nodes[j - 1] = target;
            Ok((nodes, weights))
        }
    }
}

/// Subintervals of `[t_prev, t_j]` from `n_bisect` bisections concentrating
/// at the right endpoint; the union is exactly `[t_prev, t_j]`.
pub fn dyadic_partition(t_prev: f64, t_j: f64, n_bisect: usize) -> Result<Vec<(f64, f64)>> {
    if !(t_prev < t_j) {
        return Err(Error::InvalidParameter(format!(
            "degenerate interval [{t_prev}, {t_j}]"
        )));
    }
    if n_bisect == 0 {
        return Err(Error::InvalidParameter("need at least one bisection".into()));
    }
    let tau = t_j - t_prev;
    let mut cuts = Vec::with_capacity(n_bisect + 2);
    cuts.push(t_prev);
    for k in 1..=n_bisect {
        cuts.push(t_j - tau / (1u64 << k) as f64);
    }
    cuts.push(t_j);
    Ok(cuts.windows(2).map(|w| (w[0], w[1])).collect())
}

/// One evaluation point of the secondary quadrature.
#[derive(Debug, Clone)]
pub struct SecondaryNode {
    /// Position inside the subinterval (same frame as the rule).
    pub s: f64,
    pub weight: f64,
    /// Look-back distance `t_j - s >= 0` to the row's collocation node.
    pub back_time: f64,
    /// Lagrange basis values `l_m(s)` over the rule's nodes.
    pub lagrange: Vec<f64>,
}

/// Quadrature of `[t_{j-1}, t_j]` for one collocation row.
#[derive(Debug, Clone)]
pub struct RowQuadrature {
    /// Node gap `t_j - t_{j-1}` (row 0 measures from the interval start).
    pub tau: f64,
    pub nodes: Vec<SecondaryNode>,
}

/// Dyadic-panel quadrature plan for the exponential Duhamel integrand:
/// each node gap is bisected `n_bisect` times toward its right end and a
/// small Radau rule is placed on every panel, so the integrand is only ever
/// evaluated with nonnegative look-back times.
#[derive(Debug, Clone)]
pub struct SecondaryQuadrature {
    rows: Vec<RowQuadrature>,
}

impl SecondaryQuadrature {
    pub fn new(rule: &CollocationRule, n_bisect: usize, inner_nodes: usize) -> Result<Self> {
        let nodes = rule.nodes();
        let mut rows = Vec::with_capacity(nodes.len());
        for (j, &tj) in nodes.iter().enumerate() {
            let prev = if j == 0 { rule.t0() } else { nodes[j - 1] };
            let mut row = RowQuadrature {
                tau: tj - prev,
                nodes: Vec::new(),
            };
            for (a, b) in dyadic_partition(prev, tj, n_bisect)? {
                let (qx, qw) = nodes_weights(RuleKind::RadauRight, inner_nodes, a, b - a)?;
                for (&s, &w) in qx.iter().zip(qw.iter()) {
                    row.nodes.push(SecondaryNode {
                        s,
                        weight: w,
                        back_time: (tj - s).max(0.0),
                        lagrange: (0..nodes.len()).map(|m| rule.lagrange_eval(m, s)).collect(),
                    });
                }
            }
            rows.push(row);
        }
        Ok(Self { rows })
    }

    pub fn rows(&self) -> &[RowQuadrature] {
        &self.rows
    }
}

fn gauss_tridiag(j: usize, t0: f64, h: f64) -> Array2<f64> {
    gauss_tridiag_with_corner(j, t0, h, t0 + 0.5 * h)
}

fn gauss_tridiag_with_corner(j: usize, t0: f64, h: f64, corner: f64) -> Array2<f64> {
    let mut t = Array2::zeros((j, j));
    for i in 0..j {
        t[[i, i]] = t0 + 0.5 * h;
    }
    t[[j - 1, j - 1]] = corner;
    for m in 1..j {
        let beta = m as f64 * h / (2.0 * ((4 * m * m - 1) as f64).sqrt());
        t[[m, m - 1]] = beta;
        t[[m - 1, m]] = beta;
    }
    t
}

fn golub_welsch(tridiag: &Array2<f64>, h: f64) -> (Vec<f64>, Vec<f64>) {
    let (eigs, vecs) = tridiag.eigh(UPLO::Lower).expect("symmetric eigensolve");
    let nodes: Vec<f64> = eigs.to_vec();
    let weights: Vec<f64> = (0..nodes.len())
        .map(|m| h * vecs[[0, m]] * vecs[[0, m]])
        .collect();
    (nodes, weights)
}

fn max_eig(tridiag: &Array2<f64>) -> f64 {
    let eigs = tridiag.eigvalsh(UPLO::Lower).expect("symmetric eigensolve");
    eigs[eigs.len() - 1]
}

fn lagrange_basis(nodes: &[f64], m: usize, t: f64) -> f64 {
    let tm = nodes[m];
    let mut value = 1.0;
    for (k, &tk) in nodes.iter().enumerate() {
        if k != m {
            value *= (t - tk) / (tm - tk);
        }
    }
    value
}

/// `(1/h) ∫ Σ_m |l_m|`, integrated exactly.
///
/// The roots of every basis polynomial are exactly the other nodes, so
/// `Σ_m |l_m|` is a polynomial of degree `J - 1` between consecutive nodes;
/// a `J`-node Gauss rule per segment integrates each piece exactly.
fn averaged_lebesgue(nodes: &[f64], t0: f64, h: f64) -> f64 {
    let j = nodes.len();
    let mut cuts = Vec::with_capacity(j + 2);
    cuts.push(t0);
    for &t in nodes {
        if t > cuts[cuts.len() - 1] + f64::EPSILON * h {
            cuts.push(t);
        }
    }
    let end = t0 + h;
    if end > cuts[cuts.len() - 1] + f64::EPSILON * h {
        cuts.push(end);
    }
    let mut total = 0.0;
    for seg in cuts.windows(2) {
        let len = seg[1] - seg[0];
        if len <= 0.0 {
            continue;
        }
        let (qx, qw) = nodes_weights(RuleKind::Gauss, j, seg[0], len).expect("segment rule");
        for (&x, &w) in qx.iter().zip(qw.iter()) {
            let s: f64 = (0..j).map(|m| lagrange_basis(nodes, m, x).abs()).sum();
            total += w * s;
        }
    }
    total / h
}

#[cfg(test)]
mod tests {
    use super::*;

    const SQRT3: f64 = 1.732_050_807_568_877_2;

    #[test]
    fn gauss_one_node_is_midpoint() {
        let rule = CollocationRule::gauss_legendre(1, 0.0, 1.0).unwrap();
        assert!((rule.nodes()[0] - 0.5).abs() < 1e-14);
        assert!((rule.weights()[0] - 1.0).abs() < 1e-14);
        assert!((rule.lambda_j() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn gauss_two_nodes_match_legendre_roots() {
        let rule = CollocationRule::gauss_legendre(2, 0.0, 1.0).unwrap();
        let expect = [0.5 - 1.0 / (2.0 * SQRT3), 0.5 + 1.0 / (2.0 * SQRT3)];
        for (got, want) in rule.nodes().iter().zip(expect.iter()) {
            assert!((got - want).abs() < 1e-14);
        }
        for w in rule.weights() {
            assert!((w - 0.5).abs() < 1e-14);
        }
    }

    #[test]
    fn gauss_two_nodes_butcher_tableau() {
        let rule = CollocationRule::gauss_legendre(2, 0.0, 1.0).unwrap();
        let a = rule.butcher_a();
        let s6 = SQRT3 / 6.0;
        let expect = [[0.25, 0.25 - s6], [0.25 + s6, 0.25]];
        for m in 0..2 {
            for j in 0..2 {
                assert!((a[[m, j]] - expect[m][j]).abs() < 1e-13, "a[{m}][{j}]");
            }
        }
        let b = rule.butcher_b();
        assert!((b[0] - 0.5).abs() < 1e-14 && (b[1] - 0.5).abs() < 1e-14);
    }

    #[test]
    fn radau_one_node_right_endpoint() {
        let rule = CollocationRule::radau_legendre(1, 0.0, 1.0).unwrap();
        assert_eq!(rule.nodes(), &[1.0]);
        assert_eq!(rule.weights(), &[1.0]);
    }

    #[test]
    fn radau_two_nodes_classical_values() {
        let rule = CollocationRule::radau_legendre(2, 0.0, 1.0).unwrap();
        assert!((rule.nodes()[0] - 1.0 / 3.0).abs() < 1e-12);
        assert!((rule.nodes()[1] - 1.0).abs() < 1e-14);
        assert!((rule.weights()[0] - 0.75).abs() < 1e-12);
        assert!((rule.weights()[1] - 0.25).abs() < 1e-12);
        // Radau IIA 2-stage tableau
        let a = rule.butcher_a();
        let expect = [[5.0 / 12.0, -1.0 / 12.0], [0.75, 0.25]];
        for m in 0..2 {
            for j in 0..2 {
                assert!((a[[m, j]] - expect[m][j]).abs() < 1e-12, "a[{m}][{j}]");
            }
        }
    }

    #[test]
    fn radau_last_node_pinned_for_various_j() {
        for j in 1..=12 {
            let rule = CollocationRule::radau_legendre(j, 0.3, 0.7).unwrap();
            assert!((rule.nodes()[j - 1] - 1.0).abs() < 1e-13, "J={j}");
            let sum: f64 = rule.weights().iter().sum();
            assert!((sum - 0.7).abs() < 1e-12, "J={j}");
        }
    }

    #[test]
    fn weights_sum_to_h() {
        for j in 1..=12 {
            let rule = CollocationRule::gauss_legendre(j, -0.4, 2.3).unwrap();
            let sum: f64 = rule.weights().iter().sum();
            assert!((sum - 2.3).abs() < 1e-12 * 2.3, "J={j}");
        }
    }

    #[test]
    fn lagrange_interpolation_and_partition_of_unity() {
        let rule = CollocationRule::gauss_legendre(5, 0.0, 1.0).unwrap();
        for m in 0..5 {
            for k in 0..5 {
                let want = if m == k { 1.0 } else { 0.0 };
                assert!((rule.lagrange_eval(m, rule.nodes()[k]) - want).abs() < 1e-10);
            }
        }
        for &t in &[0.0, 0.13, 0.5, 0.99, 1.0, 1.7] {
            let sum: f64 = (0..5).map(|m| rule.lagrange_eval(m, t)).sum();
            assert!((sum - 1.0).abs() < 1e-10, "t={t}");
        }
    }

    #[test]
    fn lagrange_two_node_direct_product() {
        let rule = CollocationRule::gauss_legendre(2, 0.0, 1.0).unwrap();
        let (t1, t2) = (rule.nodes()[0], rule.nodes()[1]);
        let direct = (0.0 - t2) / (t1 - t2);
        assert!((rule.lagrange_eval(0, 0.0) - direct).abs() < 1e-14);
    }

    #[test]
    fn omega_rows_telescope() {
        for rule in [
            CollocationRule::gauss_legendre(6, 0.0, 0.5).unwrap(),
            CollocationRule::radau_legendre(6, 0.0, 0.5).unwrap(),
        ] {
            let j = rule.num_nodes();
            for row in 0..j {
                for m in 0..j {
                    let back: f64 = (0..=row).map(|r| rule.omega_tilde()[[r, m]]).sum();
                    assert!((back - rule.omega()[[row, m]]).abs() < 1e-13);
                }
            }
        }
    }

    #[test]
    fn radau_omega_last_row_equals_weights() {
        let rule = CollocationRule::radau_legendre(5, 0.0, 1.0).unwrap();
        let j = rule.num_nodes();
        for m in 0..j {
            assert!((rule.omega()[[j - 1, m]] - rule.weights()[m]).abs() < 1e-12);
        }
        // For Gauss the last node is interior, so the row must differ.
        let gauss = CollocationRule::gauss_legendre(5, 0.0, 1.0).unwrap();
        let diff: f64 = (0..5)
            .map(|m| (gauss.omega()[[4, m]] - gauss.weights()[m]).abs())
            .sum();
        assert!(diff > 1e-3);
    }

    #[test]
    fn lambda_bounds_small_j() {
        for j in 1..=10 {
            for rule in [
                CollocationRule::gauss_legendre(j, 0.0, 1.0).unwrap(),
                CollocationRule::radau_legendre(j, 0.0, 1.0).unwrap(),
            ] {
                let l = rule.lambda_j();
                assert!(l >= 1.0 - 1e-12 && l <= 2.0, "J={j}, lambda={l}");
            }
        }
    }

    #[test]
    fn lambda_invariant_under_interval() {
        let a = CollocationRule::gauss_legendre(4, 0.0, 1.0).unwrap();
        let b = CollocationRule::gauss_legendre(4, 3.0, 0.01).unwrap();
        assert!((a.lambda_j() - b.lambda_j()).abs() < 1e-9);
    }

    #[test]
    fn dyadic_partition_examples() {
        let p = dyadic_partition(0.0, 1.0, 1).unwrap();
        assert_eq!(p, vec![(0.0, 0.5), (0.5, 1.0)]);

        let p = dyadic_partition(0.0, 1.0, 3).unwrap();
        let widths: Vec<f64> = p.iter().map(|(a, b)| b - a).collect();
        let expect = [0.5, 0.25, 0.125, 0.125];
        for (w, e) in widths.iter().zip(expect.iter()) {
            assert!((w - e).abs() < 1e-15);
        }

        let p = dyadic_partition(0.37, 2.81, 7).unwrap();
        assert_eq!(p[0].0, 0.37);
        assert_eq!(p[p.len() - 1].1, 2.81);
        let total: f64 = p.iter().map(|(a, b)| b - a).sum();
        assert!((total - 2.44).abs() < 1e-12);
        for w in p.windows(2) {
            assert_eq!(w[0].1, w[1].0);
        }
    }

    #[test]
    fn dyadic_partition_rejects_degenerate() {
        assert!(dyadic_partition(1.0, 1.0, 2).is_err());
        assert!(dyadic_partition(0.0, 1.0, 0).is_err());
    }

    #[test]
    fn gauss_exactness_smoke() {
        // J = 3 integrates degree 5 exactly but not degree 6.
        let rule = CollocationRule::gauss_legendre(3, 0.0, 2.0).unwrap();
        for deg in 0..=5 {
            let quad: f64 = rule
                .nodes()
                .iter()
                .zip(rule.weights())
                .map(|(&x, &w)| w * x.powi(deg))
                .sum();
            let exact = 2.0_f64.powi(deg + 1) / (deg + 1) as f64;
            assert!((quad - exact).abs() < 1e-12 * exact.abs().max(1.0), "deg={deg}");
        }
        let quad6: f64 = rule
            .nodes()
            .iter()
            .zip(rule.weights())
            .map(|(&x, &w)| w * x.powi(6))
            .sum();
        let exact6 = 2.0_f64.powi(7) / 7.0;
        assert!((quad6 - exact6).abs() > 1e-8);
    }
}
