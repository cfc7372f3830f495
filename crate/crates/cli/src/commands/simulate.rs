use reuse_risk::report::{fmt_f64, Report};
use reuse_risk::simulation::{
    run_shared_control, run_survival_reuse, weibull_ph_for_mean, ControlMode, SharedControlDesign, SurvivalMode,
    SurvivalReuseDesign,
};
use reuse_risk::Result;

use crate::params::{command_params, Fields};

command_params! {
    /// Monte Carlo replication of the shared-control and survival reuse designs.
    Args {
        /// shared-control or survival
        design,
        /// Replications [default: 10000]
        reps,
        /// Per-test significance level [default: 0.05]
        alpha,
        /// shared-control: number of treatment arms [default: 7]
        m,
        /// shared-control: subjects per treatment arm [default: 100]
        n_arm,
        /// shared-control: size of the control pool [default: 100]
        n_control,
        /// shared-control: reuse_full, disjoint_split or subsample [default: reuse_full]
        control_mode,
        /// shared-control: per-test control subsample size when control-mode = subsample
        control_subsample,
        /// shared-control: treatment effect in SD units [default: 0]
        effect,
        /// survival: subjects per group [default: 100]
        n_per_group,
        /// survival: comma-separated analysis times [default: 1,5]
        times,
        /// survival: reuse_same_cohort or gatekeep_split [default: reuse_same_cohort]
        mode,
        /// survival: Weibull shape; set together with scale
        shape,
        /// survival: Weibull scale; set together with shape
        scale,
        /// survival: rate of the hazard model S(t) = exp(-rate t^shape) [default: 2]
        rate,
        /// survival: mean survival time used with rate [default: 2.5]
        mean,
    }
}

const SHARED_KEYS: &[&str] = &["m", "n-arm", "n-control", "control-mode", "control-subsample", "effect"];
const SURVIVAL_KEYS: &[&str] = &["n-per-group", "times", "mode", "shape", "scale", "rate", "mean"];

#[derive(Debug, Clone, PartialEq)]
pub enum Weibull {
    Explicit { shape: f64, scale: f64 },
    /// Shape and scale solved from the rate and the mean.
    ProportionalHazards { rate: f64, mean: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SurvivalConfig {
    pub n_per_group: usize,
    pub times: Vec<f64>,
    pub mode: SurvivalMode,
    pub weibull: Weibull,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Design {
    SharedControl {
        m: usize,
        n_arm: usize,
        n_control: usize,
        control_mode: ControlMode,
        effect: f64,
    },
    Survival(SurvivalConfig),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub design: Design,
    pub reps: u64,
    pub alpha: f64,
}

#[derive(Clone, Copy)]
enum Which {
    Shared,
    Survival,
}

#[derive(Clone, Copy)]
enum Mode {
    Full,
    Split,
    Subsample,
}

pub fn build(f: &mut Fields) -> Config {
    if !f.has("design") {
        f.error("missing required parameter `design`");
    }
    let which = f.choice("design", &[("shared-control", Which::Shared), ("survival", Which::Survival)], Which::Shared);
    let reps = f.or("reps", 10_000);
    let alpha = f.or("alpha", 0.05);
    let design = match which {
        Which::Shared => {
            f.forbid(SURVIVAL_KEYS, "design shared-control");
            let mode = f.choice(
                "control-mode",
                &[("reuse_full", Mode::Full), ("disjoint_split", Mode::Split), ("subsample", Mode::Subsample)],
                Mode::Full,
            );
            let control_mode = match mode {
                Mode::Full => ControlMode::ReuseFull,
                Mode::Split => ControlMode::DisjointSplit,
                Mode::Subsample => ControlMode::IndependentSubsample(f.req("control-subsample")),
            };
            if !matches!(mode, Mode::Subsample) {
                f.forbid(&["control-subsample"], "control modes other than subsample");
            }
            Design::SharedControl {
                m: f.or("m", 7),
                n_arm: f.or("n-arm", 100),
                n_control: f.or("n-control", 100),
                control_mode,
                effect: f.or("effect", 0.0),
            }
        }
        Which::Survival => {
            f.forbid(SHARED_KEYS, "design survival");
            let weibull = if f.has("shape") || f.has("scale") {
                f.forbid(&["rate", "mean"], "an explicit shape and scale");
                Weibull::Explicit {
                    shape: f.req("shape"),
                    scale: f.req("scale"),
                }
            } else {
                Weibull::ProportionalHazards {
                    rate: f.or("rate", 2.0),
                    mean: f.or("mean", 2.5),
                }
            };
            Design::Survival(SurvivalConfig {
                n_per_group: f.or("n-per-group", 100),
                times: f.list_or("times", &[1.0, 5.0]),
                mode: f.choice(
                    "mode",
                    &[
                        ("reuse_same_cohort", SurvivalMode::ReuseSameCohort),
                        ("gatekeep_split", SurvivalMode::GatekeepSplit),
                    ],
                    SurvivalMode::ReuseSameCohort,
                ),
                weibull,
            })
        }
    };
    Config { design, reps, alpha }
}

pub fn execute(cfg: &Config, seed: u64) -> Result<Report> {
    let mut head: Vec<(String, String)> = vec![("command".into(), "simulate".into())];
    let sim = match &cfg.design {
        Design::SharedControl {
            m,
            n_arm,
            n_control,
            control_mode,
            effect,
        } => {
            let design = SharedControlDesign {
                m: *m,
                n_arm: *n_arm,
                n_control: *n_control,
                control_mode: *control_mode,
                alpha: cfg.alpha,
                effect: *effect,
                replications: cfg.reps,
                master_seed: seed,
            };
            head.push(("design".into(), "shared-control".into()));
            head.push(("control_size".into(), design.control_size().to_string()));
            run_shared_control(&design)?
        }
        Design::Survival(s) => {
            let (shape, scale) = match s.weibull {
                Weibull::Explicit { shape, scale } => (shape, scale),
                Weibull::ProportionalHazards { rate, mean } => weibull_ph_for_mean(rate, mean)?,
            };
            head.push(("design".into(), "survival".into()));
            head.push(("weibull_shape".into(), fmt_f64(shape)));
            head.push(("weibull_scale".into(), fmt_f64(scale)));
            run_survival_reuse(&SurvivalReuseDesign {
                n_per_group: s.n_per_group,
                weibull_shape: shape,
                weibull_scale: scale,
                truncation_times: s.times.clone(),
                mode: s.mode,
                alpha: cfg.alpha,
                replications: cfg.reps,
                master_seed: seed,
            })?
        }
    };
    let mut report = sim.to_report();
    head.push(("alpha".into(), fmt_f64(cfg.alpha)));
    report.header.splice(0..0, head);
    Ok(report)
}
