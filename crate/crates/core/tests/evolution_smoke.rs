//! End-to-end evolution runs at small sizes: thresholded runs must stay
//! within the iteration tolerance of the dense reference, preserve the norm
//! at boundaries, and both threshold schedules must land on nearby states.

use lowstep::integrator::{
    run_evolution_parabolic, run_evolution_schrodinger, Alpha0, IntegratorConfig, Method,
    ScheduleMode, SecondaryConfig, ThresholdSchedule,
};
use lowstep::models::{default_source, ParabolicModel, SchrodingerModel};
use lowstep::reference::{
    free_schrodinger_closed_form, parabolic_reference, schrodinger_reference,
};

fn schrodinger_config(method: Method, sched: ThresholdSchedule) -> IntegratorConfig {
    IntegratorConfig {
        h: 0.1,
        intervals: 2,
        nodes: 5,
        method,
        eps: 1e-3,
        delta_boundary: 1e-4,
        delta_rel: 1e-3,
        delta_rel_residual: 1e-6,
        schedule: sched,
        alpha0: Alpha0::SigmaMax,
        max_iters: 200,
        secondary: SecondaryConfig::default(),
        theoretical: None,
    }
}

#[test]
fn free_evolution_is_exact_at_boundaries() {
    let model = SchrodingerModel::free(16);
    let config = schrodinger_config(Method::Picard, ThresholdSchedule::constant(0.5).unwrap());
    let out = run_evolution_schrodinger(&model, &config).unwrap();
    assert!(out.converged);
    let u0 = model.dense_initial_state();
    for (t, state) in out.boundary_states() {
        let exact = free_schrodinger_closed_form(&model, &u0, t);
        let diff: f64 = (&state.to_dense() - &exact)
            .iter()
            .map(|x| x.norm_sqr())
            .sum::<f64>()
            .sqrt();
        assert!(diff <= 1e-10, "t={t}: {diff:.3e}");
    }
}

#[test]
fn thresholded_run_stays_within_tolerance() {
    let model = SchrodingerModel::new(24, 1, 1).unwrap();
    let reference = schrodinger_reference(&model, 5, 0.1, 2, 1e-12, 400).unwrap();
    assert!(reference.converged);
    let n0 = 1.0;

    for method in [Method::Picard, Method::Sdc] {
        for sched in [
            ThresholdSchedule::constant(0.5).unwrap(),
            ThresholdSchedule::adaptive(0.2, 1.0 / 6.0).unwrap(),
        ] {
            let config = schrodinger_config(method, sched);
            let out = run_evolution_schrodinger(&model, &config).unwrap();
            assert!(out.converged, "{method:?} {:?}", sched.mode);
            for (t, state) in out.boundary_states() {
                let exact = reference.state_at(t).expect("matching boundary time");
                let diff: f64 = (&state.to_dense() - exact)
                    .iter()
                    .map(|x| x.norm_sqr())
                    .sum::<f64>()
                    .sqrt();
                assert!(
                    diff <= config.eps,
                    "{method:?} {:?} t={t}: err {diff:.3e}",
                    sched.mode
                );
                let dev = (state.frobenius_norm() - n0).abs();
                assert!(
                    dev <= 100.0 * config.delta_boundary,
                    "{method:?} {:?} t={t}: norm dev {dev:.3e}",
                    sched.mode
                );
            }
        }
    }
}

#[test]
fn schedules_agree_on_boundary_states() {
    let model = SchrodingerModel::new(24, 1, 1).unwrap();
    let constant = run_evolution_schrodinger(
        &model,
        &schrodinger_config(Method::Picard, ThresholdSchedule::constant(0.5).unwrap()),
    )
    .unwrap();
    let adaptive = run_evolution_schrodinger(
        &model,
        &schrodinger_config(Method::Picard, ThresholdSchedule::adaptive(0.2, 1.0 / 6.0).unwrap()),
    )
    .unwrap();
    let eps = 1e-3;
    for ((ta, a), (tb, b)) in constant.boundary_states().zip(adaptive.boundary_states()) {
        assert_eq!(ta, tb);
        let d = a.frobenius_dist(b).unwrap();
        assert!(d <= 10.0 * eps, "t={ta}: schedules differ by {d:.3e}");
    }
}

#[test]
fn parabolic_run_tracks_reference() {
    let k = 36;
    let model = ParabolicModel::new(k, 1.0, -0.5, default_source(k)).unwrap();
    let (j, h, n) = (6, 0.002, 2);
    let reference = parabolic_reference(&model, j, h, n, 1e-9, 10, 5, 400).unwrap();
    assert!(reference.converged);

    for (method, sched) in [
        (Method::Picard, ThresholdSchedule::constant(0.5).unwrap()),
        (Method::Sdc, ThresholdSchedule::adaptive(0.2, 0.4).unwrap()),
    ] {
        let config = IntegratorConfig {
            h,
            intervals: n,
            nodes: j,
            method,
            eps: 1e-4,
            delta_boundary: 0.0,
            delta_rel: 1e-4,
            delta_rel_residual: 1e-6,
            schedule: sched,
            alpha0: Alpha0::SigmaMax,
            max_iters: 200,
            secondary: SecondaryConfig {
                n_bisect: 5,
                inner_nodes: 5,
            },
            theoretical: None,
        };
        let out = run_evolution_parabolic(&model, &config).unwrap();
        assert!(out.converged, "{method:?}");
        for (t, state) in out.boundary_states() {
            let exact = reference.state_at(t).expect("matching boundary time");
            let diff: f64 = (&state.to_dense() - exact)
                .iter()
                .map(|x| x * x)
                .sum::<f64>()
                .sqrt();
            assert!(diff <= 5.0 * 1e-4, "{method:?} t={t}: err {diff:.3e}");
        }
        // ranks stay close to the initial rank-10 data at this scale
        let max_rank = out.states.iter().map(|s| s.rank()).max().unwrap();
        assert!(max_rank <= 40, "{method:?}: max rank {max_rank}");
    }
}

#[test]
fn nonconvergence_is_flagged_not_silent() {
    let model = SchrodingerModel::new(12, 1, 1).unwrap();
    let mut config = schrodinger_config(Method::Picard, ThresholdSchedule::constant(0.5).unwrap());
    config.eps = 1e-14;
    config.max_iters = 3;
    let out = run_evolution_schrodinger(&model, &config).unwrap();
    assert!(!out.converged);
    assert!(matches!(config.schedule.mode, ScheduleMode::ConstantDecrease));
    // partial trajectory: the failed interval still reports its states
    assert!(!out.states.is_empty());
    assert_eq!(out.trace.intervals.len(), 1);
    assert!(!out.trace.intervals[0].converged);
}
