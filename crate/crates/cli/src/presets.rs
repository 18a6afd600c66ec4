//! Built-in experiment presets. Each one reproduces a reference experiment
//! with zero arguments.

use crate::config::ExperimentConfig;

pub const PRESET_NAMES: &[&str] = &[
    "schrodinger-1e3",
    "schrodinger-1e6",
    "parabolic",
    "schrodinger-free",
];

pub fn preset(name: &str) -> Option<ExperimentConfig> {
    let text = match name {
        // Cosine-potential Schrödinger run, iteration tolerance 1e-3.
        "schrodinger-1e3" => {
            r#"
            [problem]
            kind = "schrodinger"
            "#
        }
        // Same run at tolerance 1e-6 with the tighter boundary recompression.
        "schrodinger-1e6" => {
            r#"
            [problem]
            kind = "schrodinger"
            [integrator]
            eps = 1e-6
            delta_boundary = 1e-7
            [reference]
            rank_tol = 1e-6
            "#
        }
        // Anisotropic heat equation on Radau nodes.
        "parabolic" => {
            r#"
            [problem]
            kind = "parabolic"
            K = 500
            a = 1.0
            b = -0.5
            [integrator]
            J = 11
            h = 0.001
            intervals = 10
            eps = 1e-4
            delta_boundary = 0.0
            delta_rel = 1e-4
            [reference]
            tol = 1e-9
            n_bisect = 10
            rank_tol = 1e-4
            "#
        }
        // Zero-potential smoke run: exact free evolution.
        "schrodinger-free" => {
            r#"
            [problem]
            kind = "schrodinger-free"
            K = 64
            [integrator]
            J = 5
            h = 0.1
            intervals = 3
            eps = 1e-6
            delta_boundary = 1e-10
            "#
        }
        _ => return None,
    };
    Some(ExperimentConfig::from_toml(text).expect("presets are valid"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_presets_parse_and_validate() {
        for name in PRESET_NAMES {
            let config = preset(name).unwrap_or_else(|| panic!("missing preset {name}"));
            config.validate().unwrap();
        }
        assert!(preset("no-such").is_none());
    }

    #[test]
    fn parabolic_preset_matches_experiment_scale() {
        let p = preset("parabolic").unwrap();
        assert_eq!(p.problem.k, 500);
        assert_eq!(p.integrator.h, 0.001);
        assert_eq!(p.integrator.intervals, 10);
        assert_eq!(p.integrator.j, 11);
        assert_eq!(p.integrator.eps, 1e-4);
        assert_eq!(p.integrator.n_bisect, 5);
        assert_eq!(p.integrator.inner_nodes, 5);
        assert_eq!(p.reference.n_bisect, 10);
    }
}
