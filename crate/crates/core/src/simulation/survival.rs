//! Two-arm survival trial analysed at several truncation times.

use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::{gamma, ln_gamma};

use super::logrank::{logrank_statistic, Subject};
use super::{aggregate, check_replications, run_replications, Replicate, SimulationReport};
use crate::dist::normal_quantile;
use crate::error::{domain, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SurvivalMode {
    /// Every truncation time is analysed on the full cohort.
    ReuseSameCohort,
    /// Each group is cut into one block per truncation time; the `j`-th
    /// analysis sees only the `j`-th block.
    GatekeepSplit,
}

/// Both groups draw Weibull survival times from the same law, so every
/// rejection is a Type I error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurvivalReuseDesign {
    pub n_per_group: usize,
    pub weibull_shape: f64,
    pub weibull_scale: f64,
    pub truncation_times: Vec<f64>,
    pub mode: SurvivalMode,
    pub alpha: f64,
    pub replications: u64,
    pub master_seed: u64,
}

impl SurvivalReuseDesign {
    /// Subjects per group seen by each analysis.
    pub fn block_size(&self) -> usize {
        match self.mode {
            SurvivalMode::ReuseSameCohort => self.n_per_group,
            SurvivalMode::GatekeepSplit => self.n_per_group / self.truncation_times.len().max(1),
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_replications(self.replications)?;
        weibull_from_uniform(self.weibull_shape, self.weibull_scale, 0.5)?;
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return domain(format!("alpha must lie in (0, 1), got {}", self.alpha));
        }
        if self.truncation_times.is_empty() {
            return domain("at least one truncation time is required");
        }
        if self.truncation_times.iter().any(|&t| !(t > 0.0 && t.is_finite())) {
            return domain("truncation times must be positive and finite");
        }
        // equal neighbours are allowed: they repeat the same analysis
        if self.truncation_times.windows(2).any(|w| w[1] < w[0]) {
            return domain("truncation times must be nondecreasing");
        }
        if self.block_size() < 2 {
            return domain(format!(
                "each analysis needs at least 2 subjects per group, got {}",
                self.block_size()
            ));
        }
        Ok(())
    }
}

/// Weibull quantile `scale * (-ln(1 - u))^(1/shape)`.
pub fn weibull_from_uniform(shape: f64, scale: f64, u: f64) -> Result<f64> {
    if !(shape > 0.0 && shape.is_finite() && scale > 0.0 && scale.is_finite()) {
        return domain(format!("Weibull shape and scale must be positive, got ({shape}, {scale})"));
    }
    if !(0.0..1.0).contains(&u) {
        return domain(format!("uniform draw must lie in [0, 1), got {u}"));
    }
    Ok(scale * (-(1.0 - u).ln()).powf(1.0 / shape))
}

pub fn weibull_sample<R: Rng + ?Sized>(shape: f64, scale: f64, rng: &mut R) -> Result<f64> {
    weibull_from_uniform(shape, scale, rng.random::<f64>())
}

/// Scale giving mean `mean` at the given shape: `mean / Γ(1 + 1/shape)`.
pub fn weibull_scale_for_mean(shape: f64, mean: f64) -> Result<f64> {
    if !(shape > 0.0 && mean > 0.0) {
        return domain("shape and mean must be positive");
    }
    Ok(mean / gamma(1.0 + 1.0 / shape))
}

/// `(shape, scale)` of the Weibull law with survival `exp(-rate * t^shape)`
/// and mean `mean`, i.e. `scale = rate^(-1/shape)`.
///
/// The mean is `rate^(-1/shape) Γ(1 + 1/shape)`. When two shapes attain it,
/// the smaller (heavier-tailed) one is returned.
pub fn weibull_ph_for_mean(rate: f64, mean: f64) -> Result<(f64, f64)> {
    if !(rate > 0.0 && rate.is_finite() && mean > 0.0 && mean.is_finite()) {
        return domain("rate and mean must be positive");
    }
    // in x = 1/shape, g is convex with g(0) = -ln(mean) and g -> inf
    let g = |x: f64| ln_gamma(1.0 + x) - x * rate.ln() - mean.ln();
    let (mut a, mut b) = (0.0, 1.0);
    while g(b) <= g(b / 2.0) || g(b) <= 0.0 {
        b *= 2.0;
        if b > 1e6 {
            return domain(format!("no Weibull shape gives mean {mean} at rate {rate}"));
        }
    }
    // golden-section search for the minimiser on [0, b]
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..200 {
        let (c, d) = (b - phi * (b - a), a + phi * (b - a));
        if g(c) < g(d) {
            b = d;
        } else {
            a = c;
        }
    }
    let mut lo = 0.5 * (a + b);
    if g(lo) > 0.0 {
        return domain(format!("no Weibull shape gives mean {mean} at rate {rate}"));
    }
    let mut hi = lo.max(1.0);
    while g(hi) <= 0.0 {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) <= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let shape = 1.0 / (0.5 * (lo + hi));
    Ok((shape, rate.powf(-1.0 / shape)))
}

pub fn run_survival_reuse(design: &SurvivalReuseDesign) -> Result<SimulationReport> {
    design.validate()?;
    let d = design.clone();
    let tests = d.truncation_times.len();
    let block = d.block_size();
    let crit = normal_quantile(1.0 - d.alpha / 2.0)?;
    let draw = |rng: &mut rand_chacha::ChaCha8Rng| -> Vec<Subject> {
        (0..d.n_per_group)
            .map(|_| {
                let t = weibull_sample(d.weibull_shape, d.weibull_scale, rng).expect("validated");
                (t, true)
            })
            .collect()
    };
    let reps = run_replications(d.replications, d.master_seed, |rng| {
        let a = draw(rng);
        let b = draw(rng);
        let mut rejected = Vec::with_capacity(tests);
        let mut stats = Vec::with_capacity(tests);
        for (j, &trunc) in d.truncation_times.iter().enumerate() {
            // subjects are iid, so consecutive blocks form a uniformly random split
            let (ga, gb) = match d.mode {
                SurvivalMode::ReuseSameCohort => (&a[..], &b[..]),
                SurvivalMode::GatekeepSplit => (&a[j * block..(j + 1) * block], &b[j * block..(j + 1) * block]),
            };
            let z = logrank_statistic(ga, gb, trunc).expect("valid groups");
            rejected.push(z.is_some_and(|z| z.abs() > crit));
            stats.push(z);
        }
        Replicate { rejected, stats }
    });
    Ok(aggregate(&reps, tests, d.master_seed))
}
