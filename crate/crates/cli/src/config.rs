//! Experiment configuration: a sectioned key = value (TOML) file whose
//! defaults reproduce the reference experiments with no arguments.

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};

use lowstep::integrator::{
    Alpha0, IntegratorConfig, Method, SecondaryConfig, TheoreticalSchedule, ThresholdSchedule,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProblemKind {
    Schrodinger,
    /// Zero-potential smoke configuration (exact free evolution).
    SchrodingerFree,
    Parabolic,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSection {
    pub kind: ProblemKind,
    #[serde(rename = "K", default = "defaults::k")]
    pub k: usize,
    /// Potential frequency along the first coordinate.
    #[serde(default = "defaults::one")]
    pub n: usize,
    /// Potential frequency along the second coordinate.
    #[serde(default = "defaults::one")]
    pub m: usize,
    /// Isotropic diffusion coefficient (parabolic).
    #[serde(default = "defaults::diffusion_a")]
    pub a: f64,
    /// Mixed-derivative coupling coefficient (parabolic).
    #[serde(default = "defaults::diffusion_b")]
    pub b: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum MethodName {
    Picard,
    Sdc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScheduleName {
    Constant,
    Adaptive,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorSection {
    #[serde(default = "defaults::method")]
    pub method: MethodName,
    #[serde(rename = "J", default = "defaults::nodes")]
    pub j: usize,
    #[serde(default = "defaults::step")]
    pub h: f64,
    #[serde(default = "defaults::intervals")]
    pub intervals: usize,
    #[serde(default = "defaults::eps")]
    pub eps: f64,
    #[serde(default = "defaults::delta_boundary")]
    pub delta_boundary: f64,
    #[serde(default = "defaults::delta_rel")]
    pub delta_rel: f64,
    #[serde(default = "defaults::delta_rel_residual")]
    pub delta_rel_residual: f64,
    #[serde(default = "defaults::schedule")]
    pub schedule: ScheduleName,
    #[serde(default = "defaults::theta")]
    pub theta: f64,
    /// Adaptive acceptance factor.
    #[serde(default = "defaults::accept_c")]
    pub c: f64,
    #[serde(default = "defaults::max_iters")]
    pub max_iters: usize,
    /// Thresholding on/off (off runs the exact fixed-point iteration).
    #[serde(default = "defaults::yes")]
    pub thresholds: bool,
    #[serde(default = "defaults::n_bisect")]
    pub n_bisect: usize,
    #[serde(default = "defaults::inner_nodes")]
    pub inner_nodes: usize,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceSection {
    #[serde(default = "defaults::yes")]
    pub enabled: bool,
    /// Iteration tolerance of the dense reference; defaults per problem.
    #[serde(default)]
    pub tol: Option<f64>,
    #[serde(default = "defaults::ref_bisect")]
    pub n_bisect: usize,
    #[serde(default = "defaults::inner_nodes")]
    pub inner_nodes: usize,
    #[serde(default = "defaults::ref_iters")]
    pub max_iters: usize,
    /// Truncation tolerance defining optimal ranks; defaults to `eps`.
    #[serde(default)]
    pub rank_tol: Option<f64>,
}

impl Default for ReferenceSection {
    fn default() -> Self {
        toml::from_str("").expect("defaults")
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default = "defaults::out_dir")]
    pub dir: String,
    /// Seed for the randomized property suites.
    #[serde(default = "defaults::seed")]
    pub seed: u64,
}

impl Default for OutputSection {
    fn default() -> Self {
        toml::from_str("").expect("defaults")
    }
}

/// Optional theoretical tolerance schedule with user-supplied constants.
#[derive(Debug, Clone, Copy, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct AdvancedSection {
    pub eta: f64,
    pub kappa_j: f64,
    pub kappa_2j: f64,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: ProblemSection,
    #[serde(default = "defaults::integrator")]
    pub integrator: IntegratorSection,
    #[serde(default)]
    pub reference: ReferenceSection,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default)]
    pub advanced: Option<AdvancedSection>,
}

mod defaults {
    use super::{IntegratorSection, MethodName, ScheduleName};

    pub fn k() -> usize {
        300
    }
    pub fn one() -> usize {
        1
    }
    pub fn diffusion_a() -> f64 {
        1.0
    }
    pub fn diffusion_b() -> f64 {
        -0.5
    }
    pub fn method() -> MethodName {
        MethodName::Picard
    }
    pub fn nodes() -> usize {
        11
    }
    pub fn step() -> f64 {
        0.1
    }
    pub fn intervals() -> usize {
        5
    }
    pub fn eps() -> f64 {
        1e-3
    }
    pub fn delta_boundary() -> f64 {
        1e-4
    }
    pub fn delta_rel() -> f64 {
        1e-3
    }
    pub fn delta_rel_residual() -> f64 {
        1e-6
    }
    pub fn schedule() -> ScheduleName {
        ScheduleName::Constant
    }
    pub fn theta() -> f64 {
        0.5
    }
    pub fn accept_c() -> f64 {
        1.0 / 6.0
    }
    pub fn max_iters() -> usize {
        200
    }
    pub fn yes() -> bool {
        true
    }
    pub fn n_bisect() -> usize {
        5
    }
    pub fn inner_nodes() -> usize {
        5
    }
    pub fn ref_bisect() -> usize {
        10
    }
    pub fn ref_iters() -> usize {
        600
    }
    pub fn out_dir() -> String {
        "out".into()
    }
    pub fn seed() -> u64 {
        42
    }
    pub fn integrator() -> IntegratorSection {
        toml::from_str("").expect("defaults")
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> anyhow::Result<Self> {
        let config: Self = toml::from_str(text).context("invalid configuration")?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        if self.problem.k == 0 {
            bail!("problem.K must be positive");
        }
        if self.problem.kind == ProblemKind::Parabolic && !(self.problem.a > self.problem.b.abs())
        {
            bail!(
                "ellipticity requires a > |b|, got a = {}, b = {}",
                self.problem.a,
                self.problem.b
            );
        }
        self.integrator_config()
            .map_err(|e| anyhow::anyhow!("invalid integrator section: {e}"))?
            .validate()
            .map_err(|e| anyhow::anyhow!("invalid integrator section: {e}"))?;
        Ok(())
    }

    /// Reference tolerance with per-problem defaults.
    pub fn reference_tol(&self) -> f64 {
        self.reference.tol.unwrap_or(match self.problem.kind {
            ProblemKind::Parabolic => 1e-9,
            _ => 1e-12,
        })
    }

    pub fn rank_tol(&self) -> f64 {
        self.reference.rank_tol.unwrap_or(self.integrator.eps)
    }

    pub fn integrator_config(&self) -> lowstep::Result<IntegratorConfig> {
        let it = &self.integrator;
        let schedule = match it.schedule {
            ScheduleName::Constant => ThresholdSchedule::constant(it.theta)?,
            ScheduleName::Adaptive => ThresholdSchedule::adaptive(it.theta, it.c)?,
        };
        let config = IntegratorConfig {
            h: it.h,
            intervals: it.intervals,
            nodes: it.j,
            method: match it.method {
                MethodName::Picard => Method::Picard,
                MethodName::Sdc => Method::Sdc,
            },
            eps: it.eps,
            delta_boundary: it.delta_boundary,
            delta_rel: it.delta_rel,
            delta_rel_residual: it.delta_rel_residual,
            schedule,
            alpha0: Alpha0::SigmaMax,
            max_iters: it.max_iters,
            secondary: SecondaryConfig {
                n_bisect: it.n_bisect,
                inner_nodes: it.inner_nodes,
            },
            theoretical: self.advanced.map(|a| TheoreticalSchedule {
                eta: a.eta,
                kappa_j: a.kappa_j,
                kappa_2j: a.kappa_2j,
            }),
        };
        Ok(if it.thresholds {
            config
        } else {
            config.without_thresholds()
        })
    }
}
