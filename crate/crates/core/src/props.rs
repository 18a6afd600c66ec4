//! Seeded randomized property suites over the low-rank and quadrature
//! modules, shared between the test suite and the `properties` CLI command.

use ndarray::{Array1, Array2};
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::lowrank::LowRankMatrix;
use crate::quadrature::{nodes_weights, CollocationRule, RuleKind};

/// Deterministic random source for matrices and low-rank samples.
pub struct SeededRng {
    rng: ChaCha8Rng,
}

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        self.rng.gen_range(lo..hi)
    }

    pub fn random_dense_real(&mut self, m: usize, n: usize) -> Array2<f64> {
        Array2::from_shape_fn((m, n), |_| self.rng.gen_range(-1.0..1.0))
    }

    pub fn random_dense_complex(&mut self, m: usize, n: usize) -> Array2<C64> {
        Array2::from_shape_fn((m, n), |_| {
            C64::new(self.rng.gen_range(-1.0..1.0), self.rng.gen_range(-1.0..1.0))
        })
    }

    pub fn random_lowrank_real(&mut self, m: usize, n: usize, r: usize) -> LowRankMatrix<f64> {
        let a = self.random_dense_real(m, r);
        let b = self.random_dense_real(r, n);
        LowRankMatrix::from_dense(&a.dot(&b), 0.0).expect("finite random matrix")
    }

    pub fn random_lowrank_complex(&mut self, m: usize, n: usize, r: usize) -> LowRankMatrix<C64> {
        let a = self.random_dense_complex(m, r);
        let b = self.random_dense_complex(r, n);
        LowRankMatrix::from_dense(&a.dot(&b), 0.0).expect("finite random matrix")
    }
}

/// Outcome of one named property check.
#[derive(Debug, Clone)]
pub struct PropertyCheck {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl PropertyCheck {
    fn pass(name: &'static str, detail: String) -> Self {
        Self {
            name,
            passed: true,
            detail,
        }
    }

    fn fail(name: &'static str, detail: String) -> Self {
        Self {
            name,
            passed: false,
            detail,
        }
    }
}

fn finish(name: &'static str, worst: f64, bound: f64, cases: usize) -> PropertyCheck {
    let detail = format!("{cases} cases, worst slack {worst:.3e} (bound {bound:.1e})");
    if worst <= bound {
        PropertyCheck::pass(name, detail)
    } else {
        PropertyCheck::fail(name, detail)
    }
}

/// `||A - S_alpha(A)||^2 = sum_k min(alpha, sigma_k)^2`, summed directly.
fn soft_error_sq(sigma: &Array1<f64>, alpha: f64) -> f64 {
    sigma.iter().map(|&s| s.min(alpha).powi(2)).sum()
}

/// Non-expansiveness of `S_alpha` and `I - S_alpha` over `pairs` random pairs.
pub fn check_non_expansiveness(seed: u64, pairs: usize) -> PropertyCheck {
    let mut rng = SeededRng::new(seed);
    let mut worst = f64::NEG_INFINITY;
    for i in 0..pairs {
        let (m, n, r) = (10, 8, 4);
        let a = rng.random_lowrank_real(m, n, r);
        let b = rng.random_lowrank_real(m, n, r);
        let alpha = rng.uniform(0.0, 1.5) * a.max_singular_value();
        let dist = a.frobenius_dist(&b).unwrap();

        let sa = a.soft_threshold(alpha);
        let sb = b.soft_threshold(alpha);
        worst = worst.max(sa.frobenius_dist(&sb).unwrap() - dist);

        let ra = a.add_scaled(&sa, -1.0).unwrap();
        let rb = b.add_scaled(&sb, -1.0).unwrap();
        worst = worst.max(ra.frobenius_dist(&rb).unwrap() - dist);
        if i % 2 == 0 {
            let ac = rng.random_lowrank_complex(m, n, r);
            let bc = rng.random_lowrank_complex(m, n, r);
            let d = ac.frobenius_dist(&bc).unwrap();
            worst = worst.max(
                ac.soft_threshold(alpha)
                    .frobenius_dist(&bc.soft_threshold(alpha))
                    .unwrap()
                    - d,
            );
        }
    }
    finish("soft_threshold_non_expansive", worst, 1e-12, pairs)
}

/// `||A - S_a A|| <= ||A - S_b A|| <= (b/a) ||A - S_a A||` for `0 < a <= b`.
pub fn check_threshold_comparison(seed: u64, cases: usize) -> PropertyCheck {
    let mut rng = SeededRng::new(seed ^ 0x5eed_1);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..cases {
        let a = rng.random_lowrank_real(12, 9, 6);
        let alpha = rng.uniform(1e-3, 1.0) * a.max_singular_value();
        let beta = alpha * rng.uniform(1.0, 4.0);
        let ea = soft_error_sq(a.sigma(), alpha).sqrt();
        let eb = soft_error_sq(a.sigma(), beta).sqrt();
        // validate the closed form against the actual operator once in a while
        let direct = a.frobenius_dist(&a.soft_threshold(alpha)).unwrap();
        worst = worst.max((direct - ea).abs() - 1e-10);
        worst = worst.max(ea - eb);
        worst = worst.max(eb - beta / alpha * ea);
    }
    finish("threshold_comparison_lemma", worst, 1e-12, cases)
}

/// `||A - S_alpha A||^2 = min_r ( tail_r + alpha^2 r )`, brute forced over r.
pub fn check_minimization_identity(seed: u64, cases: usize) -> PropertyCheck {
    let mut rng = SeededRng::new(seed ^ 0x5eed_2);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..cases {
        let a = rng.random_lowrank_real(11, 11, 7);
        let alpha = rng.uniform(1e-3, 1.2) * a.max_singular_value();
        let lhs = soft_error_sq(a.sigma(), alpha);
        let sig = a.sigma();
        let brute = (0..=a.rank())
            .map(|r| {
                let tail: f64 = sig.iter().skip(r).map(|s| s * s).sum();
                tail + alpha * alpha * r as f64
            })
            .fold(f64::INFINITY, f64::min);
        worst = worst.max((lhs - brute).abs() / brute.max(1e-30));
    }
    finish("soft_threshold_minimization_identity", worst, 1e-12, cases)
}

/// `||A - S_a A||^2 = ||A - H_a A||^2 + a^2 rank(H_a A)`, and the rank of
/// `S_a A` equals the rank of `H_a A`.
pub fn check_error_relation(seed: u64, cases: usize) -> PropertyCheck {
    let mut rng = SeededRng::new(seed ^ 0x5eed_3);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..cases {
        let a = rng.random_lowrank_real(10, 14, 6);
        let alpha = rng.uniform(1e-3, 1.2) * a.max_singular_value();
        let soft = a.soft_threshold(alpha);
        let hard = a.hard_threshold(alpha);
        if soft.rank() != hard.rank() {
            return PropertyCheck::fail(
                "soft_hard_error_relation",
                format!("rank mismatch {} vs {}", soft.rank(), hard.rank()),
            );
        }
        let es = soft_error_sq(a.sigma(), alpha);
        let eh: f64 = a.sigma().iter().skip(hard.rank()).map(|s| s * s).sum();
        let rel = (es - eh - alpha * alpha * hard.rank() as f64).abs() / es.max(1e-30);
        worst = worst.max(rel);
    }
    finish("soft_hard_error_relation", worst, 1e-12, cases)
}

/// `rank(R_delta A) <= 1 + (||A||^2 - delta^2) / ||A||^2 * rank(A)`.
pub fn check_recompression_rank_bound(seed: u64, cases: usize) -> PropertyCheck {
    let mut rng = SeededRng::new(seed ^ 0x5eed_4);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..cases {
        let a = rng.random_lowrank_real(12, 12, 8);
        let norm = a.frobenius_norm();
        let delta = rng.uniform(0.0, 0.999) * norm;
        let rc = a.recompress(delta);
        let bound = 1.0 + (norm * norm - delta * delta) / (norm * norm) * a.rank() as f64;
        worst = worst.max(rc.rank() as f64 - bound);
    }
    finish("recompression_rank_bound", worst, 1e-9, cases)
}

/// Mirsky: the l2 distance of singular value sequences never exceeds the
/// Frobenius distance.
pub fn check_mirsky(seed: u64, pairs: usize) -> PropertyCheck {
    let mut rng = SeededRng::new(seed ^ 0x5eed_5);
    let mut worst = f64::NEG_INFINITY;
    for i in 0..pairs {
        let (m, n) = (9, 12);
        let (ra, rb) = (1 + i % 6, 1 + (i / 2) % 6);
        let a = rng.random_lowrank_real(m, n, ra);
        let b = rng.random_lowrank_real(m, n, rb);
        worst = worst.max(a.mirsky_gap(&b).unwrap() - a.frobenius_dist(&b).unwrap());
    }
    finish("mirsky_inequality", worst, 1e-12, pairs)
}

/// Dense-arithmetic oracles for add / apply_kron / diag-exp / round trip.
pub fn check_dense_oracles(seed: u64, cases: usize) -> PropertyCheck {
    let mut rng = SeededRng::new(seed ^ 0x5eed_6);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..cases {
        // round trip
        let a = rng.random_dense_real(8, 8);
        let lr = LowRankMatrix::from_dense(&a, 0.0).unwrap();
        let norm = a.iter().map(|x| x * x).sum::<f64>().sqrt();
        worst = worst.max(dense_dist_real(&lr.to_dense(), &a) - 1e-12 * norm);

        // addition
        let x = rng.random_lowrank_real(16, 16, 2);
        let y = rng.random_lowrank_real(16, 16, 3);
        let sum = x.add(&y).unwrap();
        let dn = &x.to_dense() + &y.to_dense();
        let scale = dn.iter().map(|v| v * v).sum::<f64>().sqrt();
        worst = worst.max(dense_dist_real(&sum.to_dense(), &dn) - 1e-12 * scale);
        if sum.rank() > x.rank() + y.rank() {
            return PropertyCheck::fail("dense_arithmetic_oracles", "rank grew past r1+r2".into());
        }

        // kron application
        let p = rng.random_dense_real(12, 12);
        let q = rng.random_dense_real(12, 12);
        let z = rng.random_lowrank_real(12, 12, 3);
        let lrk = z.apply_kron(&p, &q).unwrap();
        let dnk = p.dot(&z.to_dense()).dot(&q.t());
        let scale = dnk.iter().map(|v| v * v).sum::<f64>().sqrt();
        worst = worst.max(dense_dist_real(&lrk.to_dense(), &dnk) - 1e-12 * scale);

        // diagonal exponential against the dense operator
        let d: Vec<f64> = (1..=10)
            .map(|k| -(std::f64::consts::PI * k as f64).powi(2) / 100.0)
            .collect();
        let tau = rng.uniform(0.0, 1.0);
        let w = rng.random_lowrank_real(10, 10, 1);
        let lre = w.apply_diag_exp(&d, &d, tau).unwrap();
        let mut dne = w.to_dense();
        for (i, mut row) in dne.rows_mut().into_iter().enumerate() {
            row.mapv_inplace(|x| x * (tau * d[i]).exp());
        }
        for (j, mut col) in dne.columns_mut().into_iter().enumerate() {
            col.mapv_inplace(|x| x * (tau * d[j]).exp());
        }
        worst = worst.max(dense_dist_real(&lre.to_dense(), &dne) - 1e-12 * w.frobenius_norm());

        // distance against dense
        let dd = dense_dist_real(&x.to_dense(), &y.to_dense());
        worst = worst.max((x.frobenius_dist(&y).unwrap() - dd).abs() - 1e-12 * dd);
    }
    finish("dense_arithmetic_oracles", worst, 0.0, cases)
}

/// Golub-Welsch nodes against brute-force Legendre roots, J <= 8.
pub fn check_golub_welsch_roots() -> PropertyCheck {
    let mut worst = f64::NEG_INFINITY;
    for j in 1..=8 {
        let roots = legendre_roots(j);
        let (nodes, _) = nodes_weights(RuleKind::Gauss, j, 0.0, 2.0).unwrap();
        for (n, r) in nodes.iter().zip(roots.iter()) {
            // roots live on [-1, 1]; the rule was built on [0, 2]
            worst = worst.max((n - (r + 1.0)).abs());
        }
    }
    finish("golub_welsch_vs_polynomial_roots", worst, 1e-12, 8)
}

/// Averaged Lebesgue constants stay in [1, 2] for J = 1..=10.
pub fn check_lambda_bounds() -> PropertyCheck {
    let mut worst = f64::NEG_INFINITY;
    let mut detail = String::new();
    for j in 1..=10 {
        for (kind, name) in [(RuleKind::Gauss, "gauss"), (RuleKind::RadauRight, "radau")] {
            let rule = match kind {
                RuleKind::Gauss => CollocationRule::gauss_legendre(j, 0.0, 1.0),
                RuleKind::RadauRight => CollocationRule::radau_legendre(j, 0.0, 1.0),
            }
            .unwrap();
            let l = rule.lambda_j();
            worst = worst.max((1.0 - l).max(l - 2.0));
            if j == 10 {
                detail.push_str(&format!("{name} L_10 = {l:.4}; "));
            }
        }
    }
    let mut check = finish("averaged_lebesgue_bounds", worst, 1e-12, 20);
    check.detail = format!("{detail}{}", check.detail);
    check
}

/// Run every suite with sizes suitable for the acceptance gate.
pub fn run_all(seed: u64) -> Vec<PropertyCheck> {
    vec![
        check_non_expansiveness(seed, 1000),
        check_threshold_comparison(seed, 1000),
        check_minimization_identity(seed, 1000),
        check_error_relation(seed, 1000),
        check_recompression_rank_bound(seed, 1000),
        check_mirsky(seed, 1000),
        check_dense_oracles(seed, 50),
        check_golub_welsch_roots(),
        check_lambda_bounds(),
    ]
}

fn dense_dist_real(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    (a - b).iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Roots of the degree-j Legendre polynomial on [-1, 1] by sign-change scan
/// and bisection. Test oracle only; independent of the eigensolver route.
pub fn legendre_roots(j: usize) -> Vec<f64> {
    let eval = |x: f64| -> f64 {
        let (mut p0, mut p1) = (1.0, x);
        if j == 0 {
            return p0;
        }
        for n in 1..j {
            let p2 = ((2 * n + 1) as f64 * x * p1 - n as f64 * p0) / (n + 1) as f64;
            p0 = p1;
            p1 = p2;
        }
        p1
    };
    let scan = 20_000;
    let mut roots = Vec::with_capacity(j);
    let mut prev_x = -1.0;
    let mut prev_f = eval(prev_x);
    for i in 1..=scan {
        let x = -1.0 + 2.0 * i as f64 / scan as f64;
        let f = eval(x);
        if prev_f == 0.0 {
            roots.push(prev_x);
        } else if prev_f * f < 0.0 {
            let (mut lo, mut hi) = (prev_x, x);
            let mut flo = prev_f;
            for _ in 0..100 {
                let mid = 0.5 * (lo + hi);
                let fm = eval(mid);
                if flo * fm <= 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                    flo = fm;
                }
            }
            roots.push(0.5 * (lo + hi));
        }
        prev_x = x;
        prev_f = f;
    }
    roots
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_property_suites_pass_quick() {
        for check in run_all_quick(42) {
            assert!(check.passed, "{}: {}", check.name, check.detail);
        }
    }

    #[test]
    fn suites_are_deterministic() {
        let a = check_non_expansiveness(7, 50);
        let b = check_non_expansiveness(7, 50);
        assert_eq!(a.detail, b.detail);
    }

    #[test]
    fn legendre_roots_count_and_symmetry() {
        for j in 1..=8 {
            let roots = legendre_roots(j);
            assert_eq!(roots.len(), j, "J={j}");
            for (a, b) in roots.iter().zip(roots.iter().rev()) {
                assert!((a + b).abs() < 1e-10);
            }
        }
    }
}

/// Reduced-size variant for unit tests.
pub fn run_all_quick(seed: u64) -> Vec<PropertyCheck> {
    vec![
        check_non_expansiveness(seed, 60),
        check_threshold_comparison(seed, 60),
        check_minimization_identity(seed, 60),
        check_error_relation(seed, 60),
        check_recompression_rank_bound(seed, 60),
        check_mirsky(seed, 60),
        check_dense_oracles(seed, 6),
        check_golub_welsch_roots(),
        check_lambda_bounds(),
    ]
}
