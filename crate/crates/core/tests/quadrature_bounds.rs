//! Quadrature error bounds for smooth integrands: the Gauss rule error and
//! the interpolate-then-integrate error inside the interval, both checked
//! against their explicit constants on g(s) = cos(10 s).

use lowstep::quadrature::CollocationRule;

fn factorial(n: usize) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

#[test]
fn gauss_rule_error_bound() {
    for j in [2usize, 3, 4] {
        for h in [0.5, 0.25] {
            let rule = CollocationRule::gauss_legendre(j, 0.0, h).unwrap();
            let quad: f64 = rule
                .nodes()
                .iter()
                .zip(rule.weights())
                .map(|(&t, &w)| w * (10.0 * t).cos())
                .sum();
            let exact = (10.0 * h).sin() / 10.0;
            let deriv_bound = 10.0_f64.powi(2 * j as i32);
            let bound = factorial(j).powi(4) / (factorial(2 * j + 1) * factorial(2 * j).powi(2))
                * deriv_bound
                * h.powi(2 * j as i32 + 1);
            let err = (quad - exact).abs();
            assert!(err <= bound, "J={j}, h={h}: err {err:.3e} > bound {bound:.3e}");
        }
    }
}

#[test]
fn inner_interpolation_quadrature_error_bound() {
    for j in [2usize, 3, 4] {
        for h in [0.5, 0.25] {
            let rule = CollocationRule::gauss_legendre(j, 0.0, h).unwrap();
            let deriv_bound = 10.0_f64.powi(j as i32);
            let bound = factorial(j) / ((2.0 * j as f64 + 1.0).sqrt() * factorial(2 * j))
                * deriv_bound
                * h.powi(j as i32 + 1);
            for row in 0..j {
                // integral of the interpolant up to t_row is exactly the
                // omega row applied to the node values
                let interp: f64 = (0..j)
                    .map(|m| rule.omega()[[row, m]] * (10.0 * rule.nodes()[m]).cos())
                    .sum();
                let exact = (10.0 * rule.nodes()[row]).sin() / 10.0;
                let err = (interp - exact).abs();
                assert!(
                    err <= bound,
                    "J={j}, h={h}, node {row}: err {err:.3e} > bound {bound:.3e}"
                );
            }
        }
    }
}
