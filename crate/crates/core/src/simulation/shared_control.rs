//! Several treatment arms tested against one control pool.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{aggregate, check_replications, run_replications, Replicate, SimulationReport};
use crate::error::{domain, Result};
use crate::power::{SampleVector, TestSpec};
use crate::subsample::subsample_with;

/// How each test obtains its control observations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControlMode {
    /// Every test uses the whole control pool.
    ReuseFull,
    /// The pool is cut into `m` disjoint blocks of `floor(n_control / m)`.
    DisjointSplit,
    /// Each test uses its own random subsample of the pool of this size.
    IndependentSubsample(usize),
}

/// `m` treatment arms, each compared with control data by a pooled two-sided t-test.
/// Outcomes are unit-variance normal; treatments are shifted by `effect`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SharedControlDesign {
    pub m: usize,
    pub n_arm: usize,
    pub n_control: usize,
    pub control_mode: ControlMode,
    pub alpha: f64,
    pub effect: f64,
    pub replications: u64,
    pub master_seed: u64,
}

impl SharedControlDesign {
    /// Control observations available to each test.
    pub fn control_size(&self) -> usize {
        match self.control_mode {
            ControlMode::ReuseFull => self.n_control,
            ControlMode::DisjointSplit => self.n_control / self.m.max(1),
            ControlMode::IndependentSubsample(k) => k,
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_replications(self.replications)?;
        if self.m == 0 {
            return domain("at least one treatment arm is required");
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return domain(format!("alpha must lie in (0, 1), got {}", self.alpha));
        }
        if !self.effect.is_finite() {
            return domain("effect must be finite");
        }
        if self.n_arm < 2 {
            return domain(format!("treatment arms need at least 2 subjects, got {}", self.n_arm));
        }
        if let ControlMode::IndependentSubsample(k) = self.control_mode {
            if k > self.n_control {
                return domain(format!("control subsample {k} exceeds the pool of {}", self.n_control));
            }
        }
        let c = self.control_size();
        if c < 2 {
            return domain(format!("control arms need at least 2 subjects, got {c}"));
        }
        Ok(())
    }
}

fn mean_and_ss(xs: impl Iterator<Item = f64> + Clone) -> (f64, f64, f64) {
    let (n, sum) = xs.clone().fold((0.0, 0.0), |(n, s), x| (n + 1.0, s + x));
    let mean = sum / n;
    let ss = xs.map(|x| (x - mean) * (x - mean)).sum();
    (n, mean, ss)
}

/// Pooled two-sample t-statistic, treatment minus control.
fn pooled_t(treatment: &[f64], control: impl Iterator<Item = f64> + Clone) -> f64 {
    let (n1, m1, ss1) = mean_and_ss(treatment.iter().copied());
    let (n2, m2, ss2) = mean_and_ss(control);
    let sp2 = (ss1 + ss2) / (n1 + n2 - 2.0);
    (m1 - m2) / (sp2 * (1.0 / n1 + 1.0 / n2)).sqrt()
}

pub fn run_shared_control(design: &SharedControlDesign) -> Result<SimulationReport> {
    design.validate()?;
    let d = design.clone();
    let c = d.control_size();
    let crit = TestSpec::t_test(d.alpha, 1.0)?.critical_value(SampleVector::new(c as u64, d.n_arm as u64))?;
    let pool = match d.control_mode {
        ControlMode::DisjointSplit => c * d.m,
        _ => d.n_control,
    };
    let reps = run_replications(d.replications, d.master_seed, |rng| {
        let control: Vec<f64> = (0..pool).map(|_| rng.sample(StandardNormal)).collect();
        let mut rejected = Vec::with_capacity(d.m);
        let mut stats = Vec::with_capacity(d.m);
        let mut arm = vec![0.0; d.n_arm];
        for i in 0..d.m {
            for x in arm.iter_mut() {
                *x = d.effect + rng.sample::<f64, _>(StandardNormal);
            }
            let t = match d.control_mode {
                ControlMode::ReuseFull => pooled_t(&arm, control.iter().copied()),
                ControlMode::DisjointSplit => pooled_t(&arm, control[i * c..(i + 1) * c].iter().copied()),
                ControlMode::IndependentSubsample(k) => {
                    let idx = subsample_with(pool, k, rng).expect("k <= pool validated");
                    pooled_t(&arm, idx.iter().map(|&j| control[j]))
                }
            };
            rejected.push(t.abs() > crit);
            stats.push(Some(t));
        }
        Replicate { rejected, stats }
    });
    Ok(aggregate(&reps, d.m, d.master_seed))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn design(mode: ControlMode) -> SharedControlDesign {
        SharedControlDesign {
            m: 3,
            n_arm: 20,
            n_control: 60,
            control_mode: mode,
            alpha: 0.05,
            effect: 0.0,
            replications: 400,
            master_seed: 5,
        }
    }

    #[test]
    fn pooled_t_matches_hand_value() {
        // means 2 and 5, pooled variance (2 + 8) / 4 = 2.5
        let t = pooled_t(&[1.0, 2.0, 3.0], [3.0, 5.0, 7.0].into_iter());
        let expected = -3.0 / (2.5f64 * (2.0 / 3.0)).sqrt();
        assert!((t - expected).abs() < 1e-12);
    }

    #[test]
    fn validation() {
        let mut d = design(ControlMode::ReuseFull);
        d.replications = 0;
        assert_eq!(run_shared_control(&d).unwrap_err().to_string(), "domain error: replications must be ≥ 1");
        let mut d = design(ControlMode::ReuseFull);
        d.n_arm = 1;
        assert!(run_shared_control(&d).is_err());
        let mut d = design(ControlMode::DisjointSplit);
        d.n_control = 5;
        assert!(run_shared_control(&d).is_err());
        assert!(run_shared_control(&design(ControlMode::IndependentSubsample(61))).is_err());
    }

    #[test]
    fn huge_effect_always_rejects() {
        let mut d = design(ControlMode::ReuseFull);
        d.effect = 10.0;
        let r = run_shared_control(&d).unwrap();
        assert_eq!(r.per_test_rejection_freq, vec![1.0; 3]);
        assert_eq!(r.error_counts[3], 400);
    }

    #[test]
    fn modes_run_and_are_deterministic() {
        for mode in [ControlMode::ReuseFull, ControlMode::DisjointSplit, ControlMode::IndependentSubsample(30)] {
            let a = run_shared_control(&design(mode)).unwrap();
            let b = run_shared_control(&design(mode)).unwrap();
            assert_eq!(a, b);
            assert_eq!(a.rep_count, 400);
            assert!(a.contingency.is_none());
        }
    }
}
