use lowstep::integrator::*;
use lowstep::lowrank::LowRankMatrix;
use lowstep::models::SchrodingerModel;
use lowstep::reference::schrodinger_reference_from;
use ndarray::Array1;
use num_complex::Complex64 as C64;

fn main() {
    let k = 32;
    let model = SchrodingerModel::new(k, 1, 1).unwrap();
    for decay in [0.75, 1.0, 1.5, 2.0] {
        let v: Array1<C64> = (1..=k).map(|i| C64::new((-decay * i as f64).exp(), 0.0)).collect();
        let u0 = LowRankMatrix::from_outer(&v, &v);
        let u0 = u0.scaled(C64::new(1.0 / u0.frobenius_norm(), 0.0));
        let t_end = 0.2_f64;
        let truth = schrodinger_reference_from(&model, u0.to_dense(), 8, 0.025, 8, 1e-13, 800).unwrap();
        let exact = truth.state_at(t_end).unwrap().clone();
        for j in [2usize, 3] {
            let mut errs = Vec::new();
            for h in [0.2, 0.1, 0.05, 0.025] {
                let n = (t_end / h).round() as usize;
                let config = IntegratorConfig {
                    h, intervals: n, nodes: j, method: Method::Picard,
                    eps: 1e-12, delta_boundary: 0.0, delta_rel: 0.0, delta_rel_residual: 0.0,
                    schedule: ThresholdSchedule::constant(0.5).unwrap(),
                    alpha0: Alpha0::Fixed(0.0), max_iters: 500,
                    secondary: SecondaryConfig::default(), theoretical: None,
                };
                let out = run_evolution_schrodinger_from(&model, &config, u0.clone()).unwrap();
                let (_, state) = out.boundary_states().find(|(t, _)| (t - t_end).abs() < 1e-10).unwrap();
                let err: f64 = (&state.to_dense() - &exact).iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
                errs.push((h, err));
            }
            let pts: Vec<(f64, f64)> = errs.iter().map(|(h, e)| (h.ln(), e.max(1e-300).ln())).collect();
            let n = pts.len() as f64;
            let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
            let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
            let slope = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>()
                / pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum::<f64>();
            println!("decay={decay} J={j}: slope={slope:.3}  errs={:?}", errs.iter().map(|x| format!("{:.2e}", x.1)).collect::<Vec<_>>());
        }
    }
}
