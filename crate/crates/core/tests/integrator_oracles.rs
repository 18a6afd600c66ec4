//! Dense-arithmetic oracles for the low-rank fixed-point maps: at small K,
//! with every truncation disabled, the low-rank Picard rows, SDC sweeps,
//! boundary updates and parabolic Duhamel maps must coincide with
//! independent dense implementations, and converged stages must solve the
//! collocation system directly.

use lowstep::integrator::{
    run_interval, Alpha0, FixedPointMap, IntegratorConfig, Method, OpContext, ParabolicMap,
    SchrodingerMap, SecondaryConfig, StageVector, ThresholdSchedule,
};
use lowstep::lowrank::{LowRankMatrix, LrScalar};
use lowstep::models::{default_source, ParabolicModel, SchrodingerModel};
use lowstep::props::SeededRng;
use lowstep::quadrature::{CollocationRule, SecondaryQuadrature};
use lowstep::reference::{
    dense_boundary_schrodinger, dense_collocation_solve_schrodinger, dense_parabolic_phi,
    dense_parabolic_sdc, dense_picard_schrodinger, dense_sdc_schrodinger, parabolic_exp_tables,
};
use ndarray::Array2;
use num_complex::Complex64 as C64;

fn dense_rel_dist<T: LrScalar>(a: &Array2<T>, b: &Array2<T>) -> f64 {
    let diff: f64 = a
        .iter()
        .zip(b.iter())
        .map(|(x, y)| (*x - *y).square())
        .sum::<f64>()
        .sqrt();
    let scale: f64 = b.iter().map(|x| x.square()).sum::<f64>().sqrt();
    diff / scale.max(1e-300)
}

fn untruncated_config(nodes: usize, h: f64, method: Method) -> IntegratorConfig {
    IntegratorConfig {
        h,
        intervals: 1,
        nodes,
        method,
        eps: 1e-12,
        delta_boundary: 0.0,
        delta_rel: 0.0,
        delta_rel_residual: 0.0,
        schedule: ThresholdSchedule::constant(0.5).unwrap(),
        alpha0: Alpha0::Fixed(0.0),
        max_iters: 400,
        secondary: SecondaryConfig {
            n_bisect: 5,
            inner_nodes: 5,
        },
        theoretical: None,
    }
}

fn random_stages_complex(
    rng: &mut SeededRng,
    j: usize,
    k: usize,
    r: usize,
) -> StageVector<C64> {
    StageVector::from_entries((0..j).map(|_| rng.random_lowrank_complex(k, k, r)).collect())
}

#[test]
fn picard_rows_match_dense_map() {
    let k = 8;
    let model = SchrodingerModel::new(k, 1, 1).unwrap();
    for j in [2, 3] {
        let rule = CollocationRule::gauss_legendre(j, 0.0, 0.1).unwrap();
        let map = SchrodingerMap::new(&model, rule.clone());
        let mut rng = SeededRng::new(41 + j as u64);
        let u0 = model.initial_state();
        let stages = random_stages_complex(&mut rng, j, k, 3);
        let ctx = OpContext::new(1.0, 0.0, 0.0);

        let cache = map.prepare(&stages, &ctx).unwrap();
        let dense_stages: Vec<Array2<C64>> =
            stages.entries().iter().map(|e| e.to_dense()).collect();
        let dense =
            dense_picard_schrodinger(&model, &rule, &u0.to_dense(), &dense_stages);
        for row in 0..j {
            let lr = map.phi_row(&cache, row, &u0, None, &ctx).unwrap();
            let d = dense_rel_dist(&lr.to_dense(), &dense[row]);
            assert!(d <= 1e-10, "J={j}, row {row}: {d:.3e}");
        }

        let lr_boundary = map.boundary(&cache, &u0, &ctx).unwrap();
        let dn_boundary = dense_boundary_schrodinger(&model, &rule, &u0.to_dense(), &dense_stages);
        assert!(dense_rel_dist(&lr_boundary.to_dense(), &dn_boundary) <= 1e-10);
    }
}

#[test]
fn sdc_sweep_matches_dense_map() {
    let k = 8;
    let model = SchrodingerModel::new(k, 1, 1).unwrap();
    for j in [2, 3] {
        let rule = CollocationRule::gauss_legendre(j, 0.0, 0.1).unwrap();
        let map = SchrodingerMap::new(&model, rule.clone());
        let mut rng = SeededRng::new(97 + j as u64);
        let u0 = model.initial_state();
        let old = random_stages_complex(&mut rng, j, k, 3);
        let ctx = OpContext::new(1.0, 0.0, 0.0);
        let cache = map.prepare(&old, &ctx).unwrap();

        // alpha = 0: the thresholded sweep is the plain sweep
        let mut rows: Vec<LowRankMatrix<C64>> = Vec::new();
        let mut prev_new = u0.clone();
        for row in 0..j {
            let prev_old = if row == 0 { &u0 } else { old.entry(row - 1) };
            let phi = map.sdc_row(&cache, row, &u0, &prev_new, prev_old, &ctx).unwrap();
            prev_new = phi.clone();
            rows.push(phi);
        }

        let dense_old: Vec<Array2<C64>> = old.entries().iter().map(|e| e.to_dense()).collect();
        let dense = dense_sdc_schrodinger(&model, &rule, &u0.to_dense(), &dense_old);
        for row in 0..j {
            let d = dense_rel_dist(&rows[row].to_dense(), &dense[row]);
            assert!(d <= 1e-10, "J={j}, row {row}: {d:.3e}");
        }
    }
}

#[test]
fn low_order_psi_bound_and_zero() {
    let model = SchrodingerModel::new(8, 1, 1).unwrap();
    let rule = CollocationRule::gauss_legendre(3, 0.0, 0.1).unwrap();
    let map = SchrodingerMap::new(&model, rule);
    let zero = LowRankMatrix::<C64>::zero(8, 8);
    assert_eq!(map.low_order_psi(0.0, 0.05, &zero).unwrap().rank(), 0);

    let mut rng = SeededRng::new(5);
    for _ in 0..10 {
        let w = rng.random_lowrank_complex(8, 8, 3);
        let psi = map.low_order_psi(0.02, 0.09, &w).unwrap();
        assert!(psi.frobenius_norm() <= 0.07 * model.c_v() * w.frobenius_norm() + 1e-12);
    }
}

#[test]
fn converged_stages_solve_collocation_system() {
    let k = 8;
    let model = SchrodingerModel::new(k, 1, 1).unwrap();
    for j in [2, 3] {
        let rule = CollocationRule::gauss_legendre(j, 0.0, 0.1).unwrap();
        let direct = dense_collocation_solve_schrodinger(
            &model,
            &rule,
            &model.initial_state().to_dense(),
        )
        .unwrap();

        for method in [Method::Picard, Method::Sdc] {
            let map = SchrodingerMap::new(&model, rule.clone());
            let config = untruncated_config(j, 0.1, method);
            let u0 = model.initial_state();
            let run = run_interval(&map, &u0, &config, 0, config.eps, 0.0).unwrap();
            assert!(run.converged, "J={j} {method:?}");
            for (row, stage) in run.stages.entries().iter().enumerate() {
                let d = dense_rel_dist(&stage.to_dense(), &direct[row]);
                assert!(d <= 1e-9, "J={j} {method:?} row {row}: {d:.3e}");
            }
        }
    }
}

#[test]
fn boundary_matches_dense_runge_kutta_step() {
    let k = 8;
    let j = 2;
    let model = SchrodingerModel::new(k, 1, 1).unwrap();
    let rule = CollocationRule::gauss_legendre(j, 0.0, 0.1).unwrap();
    let u0 = model.initial_state().to_dense();

    // dense implicit RK step: collocation stages + weight update
    let stages = dense_collocation_solve_schrodinger(&model, &rule, &u0).unwrap();
    let mut rk = u0.clone();
    for (m, stage) in stages.iter().enumerate() {
        let f = model.dense_apply_f(rule.nodes()[m], stage);
        let w = C64::new(rule.weights()[m], 0.0);
        rk.zip_mut_with(&f, |a, x| *a += x * w);
    }

    let map = SchrodingerMap::new(&model, rule);
    let config = untruncated_config(j, 0.1, Method::Picard);
    let lr0 = model.initial_state();
    let run = run_interval(&map, &lr0, &config, 0, 1e-13, 0.0).unwrap();
    let d = dense_rel_dist(&run.boundary.to_dense(), &rk);
    assert!(d <= 1e-10, "boundary vs dense RK: {d:.3e}");
}

#[test]
fn parabolic_phi_matches_dense_map() {
    let k = 8;
    let j = 3;
    let model = ParabolicModel::new(k, 1.0, -0.5, default_source(k)).unwrap();
    let rule = CollocationRule::radau_legendre(j, 0.0, 0.05).unwrap();
    let secondary = SecondaryConfig {
        n_bisect: 4,
        inner_nodes: 4,
    };
    let map = ParabolicMap::new(&model, rule.clone(), secondary).unwrap();
    let plan = SecondaryQuadrature::new(&rule, 4, 4).unwrap();
    let tables = parabolic_exp_tables(&model, &plan);

    let mut rng = SeededRng::new(17);
    let u0 = model.initial_state();
    let stages = StageVector::from_entries(
        (0..j).map(|_| rng.random_lowrank_real(k, k, 3)).collect(),
    );
    let ctx = OpContext::new(1.0, 0.0, 0.0);
    let cache = map.prepare(&stages, &ctx).unwrap();

    let dense_stages: Vec<Array2<f64>> = stages.entries().iter().map(|e| e.to_dense()).collect();
    let dense = dense_parabolic_phi(&model, &plan, &tables, &u0.to_dense(), &dense_stages);

    let mut prev: Option<LowRankMatrix<f64>> = None;
    for row in 0..j {
        let lr = map.phi_row(&cache, row, &u0, prev.as_ref(), &ctx).unwrap();
        let d = dense_rel_dist(&lr.to_dense(), &dense[row]);
        assert!(d <= 1e-10, "row {row}: {d:.3e}");
        prev = Some(lr);
    }
}

#[test]
fn parabolic_sdc_matches_dense_map() {
    let k = 8;
    let j = 3;
    let model = ParabolicModel::new(k, 1.0, -0.5, default_source(k)).unwrap();
    let rule = CollocationRule::radau_legendre(j, 0.0, 0.05).unwrap();
    let secondary = SecondaryConfig {
        n_bisect: 4,
        inner_nodes: 4,
    };
    let map = ParabolicMap::new(&model, rule.clone(), secondary).unwrap();
    let plan = SecondaryQuadrature::new(&rule, 4, 4).unwrap();
    let tables = parabolic_exp_tables(&model, &plan);

    let mut rng = SeededRng::new(29);
    let u0 = model.initial_state();
    let old = StageVector::from_entries(
        (0..j).map(|_| rng.random_lowrank_real(k, k, 3)).collect(),
    );
    let ctx = OpContext::new(1.0, 0.0, 0.0);
    let cache = map.prepare(&old, &ctx).unwrap();

    let mut rows: Vec<LowRankMatrix<f64>> = Vec::new();
    let mut prev_new = u0.clone();
    for row in 0..j {
        let prev_old = if row == 0 { &u0 } else { old.entry(row - 1) };
        let phi = map.sdc_row(&cache, row, &u0, &prev_new, prev_old, &ctx).unwrap();
        prev_new = phi.clone();
        rows.push(phi);
    }

    let dense_old: Vec<Array2<f64>> = old.entries().iter().map(|e| e.to_dense()).collect();
    let dense = dense_parabolic_sdc(&model, &plan, &tables, &u0.to_dense(), &dense_old);
    for row in 0..j {
        let d = dense_rel_dist(&rows[row].to_dense(), &dense[row]);
        assert!(d <= 1e-10, "row {row}: {d:.3e}");
    }
}

#[test]
fn parabolic_fixed_point_agreement_between_solvers() {
    let k = 8;
    let j = 3;
    let model = ParabolicModel::new(k, 1.0, -0.5, default_source(k)).unwrap();
    let rule = CollocationRule::radau_legendre(j, 0.0, 0.01).unwrap();
    let secondary = SecondaryConfig {
        n_bisect: 5,
        inner_nodes: 5,
    };
    let u0 = model.initial_state();
    let mut results = Vec::new();
    for method in [Method::Picard, Method::Sdc] {
        let map = ParabolicMap::new(&model, rule.clone(), secondary).unwrap();
        let config = IntegratorConfig {
            secondary,
            ..untruncated_config(j, 0.01, method)
        };
        let run = run_interval(&map, &u0, &config, 0, 1e-12, 0.0).unwrap();
        assert!(run.converged, "{method:?}");
        results.push(run.stages);
    }
    let d = results[0].dist_j(&results[1]).unwrap();
    assert!(d <= 1e-9, "solver disagreement {d:.3e}");
}

#[test]
fn zero_potential_converges_immediately() {
    let model = SchrodingerModel::free(8);
    let rule = CollocationRule::gauss_legendre(3, 0.0, 0.1).unwrap();
    let map = SchrodingerMap::new(&model, rule);
    let u0 = model.initial_state();
    let mut config = untruncated_config(3, 0.1, Method::Picard);
    config.eps = 1e-14;
    let run = run_interval(&map, &u0, &config, 0, config.eps, 0.0).unwrap();
    assert!(run.converged);
    assert!(run.iterations <= 2, "took {} iterations", run.iterations);
    assert!(run.boundary.frobenius_dist(&u0).unwrap() <= 1e-13);
}

#[test]
fn phi_rank_growth_obeys_bound() {
    // rank(Phi(v)_j) <= rank(u0) + J rank(V) max_m rank(v_m)
    let k = 12;
    let j = 3;
    let model = SchrodingerModel::new(k, 1, 1).unwrap();
    let rule = CollocationRule::gauss_legendre(j, 0.0, 0.1).unwrap();
    let map = SchrodingerMap::new(&model, rule);
    let mut rng = SeededRng::new(3);
    let u0 = model.initial_state();
    let stages = random_stages_complex(&mut rng, j, k, 3);
    let ctx = OpContext::new(1.0, 0.0, 0.0);
    let cache = map.prepare(&stages, &ctx).unwrap();
    let bound = u0.rank() + j * model.potential_rank() * 3;
    for row in 0..j {
        let phi = map.phi_row(&cache, row, &u0, None, &ctx).unwrap();
        assert!(phi.rank() <= bound, "row {row}: {} > {bound}", phi.rank());
    }
}
