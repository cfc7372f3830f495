//! Power, Type II error and sample size for two-sample mean comparisons.
//!
//! Two test families are supported: the z-test with known common variance
//! and the pooled-variance two-sample t-test. Power of the t-test is taken
//! from the noncentral t distribution, evaluated by integrating the normal
//! CDF against the scaled chi density of the variance estimate.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};
use statrs::function::gamma::ln_gamma;

use crate::dist::{normal_cdf, normal_quantile};
use crate::error::{domain, Result};
use crate::quad::integrate;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestKind {
    ZKnownVariance,
    TPooled,
}

impl TestKind {
    fn min_arm(self) -> u64 {
        match self {
            TestKind::ZKnownVariance => 1,
            TestKind::TPooled => 2,
        }
    }
}

/// A two-sample mean-difference test at level `alpha` against effect `delta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestSpec {
    kind: TestKind,
    alpha: f64,
    two_sided: bool,
    delta: f64,
    sigma: f64,
}

impl TestSpec {
    pub fn new(kind: TestKind, alpha: f64, two_sided: bool, delta: f64, sigma: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return domain(format!("level alpha must lie in (0, 1), got {alpha}"));
        }
        if !(sigma > 0.0 && sigma.is_finite()) {
            return domain(format!("sigma must be positive, got {sigma}"));
        }
        if !delta.is_finite() {
            return domain("effect size must be finite");
        }
        Ok(Self {
            kind,
            alpha,
            two_sided,
            delta,
            sigma,
        })
    }

    /// Two-sided t-test with unit standard deviation.
    pub fn t_test(alpha: f64, delta: f64) -> Result<Self> {
        Self::new(TestKind::TPooled, alpha, true, delta, 1.0)
    }

    /// Two-sided z-test with unit standard deviation.
    pub fn z_test(alpha: f64, delta: f64) -> Result<Self> {
        Self::new(TestKind::ZKnownVariance, alpha, true, delta, 1.0)
    }

    pub fn kind(&self) -> TestKind {
        self.kind
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn two_sided(&self) -> bool {
        self.two_sided
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn with_alpha(&self, alpha: f64) -> Result<Self> {
        Self::new(self.kind, alpha, self.two_sided, self.delta, self.sigma)
    }

    pub fn with_delta(&self, delta: f64) -> Result<Self> {
        Self::new(self.kind, self.alpha, self.two_sided, delta, self.sigma)
    }

    fn upper_level(&self) -> f64 {
        if self.two_sided {
            1.0 - self.alpha / 2.0
        } else {
            1.0 - self.alpha
        }
    }

    /// Rejection threshold on the test statistic.
    pub fn critical_value(&self, n: SampleVector) -> Result<f64> {
        self.check_sample(n)?;
        match self.kind {
            TestKind::ZKnownVariance => normal_quantile(self.upper_level()),
            TestKind::TPooled => t_quantile(self.upper_level(), n.degrees_of_freedom() as f64),
        }
    }

    fn check_sample(&self, n: SampleVector) -> Result<()> {
        let min = self.kind.min_arm();
        if n.n1 < min || n.n2 < min {
            return domain(format!(
                "{:?} needs at least {min} units per arm, got ({}, {})",
                self.kind, n.n1, n.n2
            ));
        }
        Ok(())
    }
}

/// Arm sizes: `n1` for the reference (control) arm, `n2` for the treatment arm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SampleVector {
    pub n1: u64,
    pub n2: u64,
}

impl SampleVector {
    pub fn new(n1: u64, n2: u64) -> Self {
        Self { n1, n2 }
    }

    pub fn total(&self) -> u64 {
        self.n1 + self.n2
    }

    pub fn degrees_of_freedom(&self) -> u64 {
        self.total().saturating_sub(2)
    }

    /// `sqrt(1/n1 + 1/n2)`
    pub fn standard_error_factor(&self) -> f64 {
        (1.0 / self.n1 as f64 + 1.0 / self.n2 as f64).sqrt()
    }
}

fn t_quantile(p: f64, df: f64) -> Result<f64> {
    let dist = StudentsT::new(0.0, 1.0, df)
        .map_err(|e| crate::Error::Domain(format!("Student t with {df} df: {e}")))?;
    Ok(dist.inverse_cdf(p))
}

/// CDF of the noncentral t distribution with `df` degrees of freedom and
/// noncentrality `ncp`, `pr(T <= t)`.
pub fn noncentral_t_cdf(t: f64, df: f64, ncp: f64) -> f64 {
    integrate_over_scale(df, |s| normal_cdf(t * s - ncp))
}

/// `pr(lo < T <= hi)` for the noncentral t distribution, without the
/// cancellation of differencing two CDF values.
pub fn noncentral_t_interval(lo: f64, hi: f64, df: f64, ncp: f64) -> f64 {
    integrate_over_scale(df, |s| {
        let (a, b) = (lo * s - ncp, hi * s - ncp);
        if a > 0.0 {
            crate::dist::normal_sf(a) - crate::dist::normal_sf(b)
        } else {
            normal_cdf(b) - normal_cdf(a)
        }
    })
}

/// `E[f(S)]` where `S = sqrt(V/df)`, `V ~ χ²(df)`.
fn integrate_over_scale<F: Fn(f64) -> f64>(df: f64, f: F) -> f64 {
    let half = 0.5 * df;
    // log density at s = 1, plus a remainder in x = s - 1 that stays small
    // near the peak so the integrand is free of cancellation noise
    let ln_peak = std::f64::consts::LN_2 + half * half.ln() - ln_gamma(half) - half;
    let density = |s: f64| {
        if s <= 0.0 {
            0.0
        } else {
            let x = s - 1.0;
            (ln_peak + (df - 1.0) * x.ln_1p() - df * x - half * x * x).exp()
        }
    };
    let spread = 1.0 / (2.0 * df).sqrt();
    let lo = (1.0 - 15.0 * spread).max(0.0);
    let hi = 1.0 + 20.0 * spread;
    integrate(|s| f(s) * density(s), lo, hi, 1e-14).clamp(0.0, 1.0)
}

/// Probability of *not* rejecting when the true mean difference is `effect`.
pub fn acceptance_probability(spec: &TestSpec, n: SampleVector, effect: f64) -> Result<f64> {
    let c = spec.critical_value(n)?;
    let ncp = effect / (spec.sigma * n.standard_error_factor());
    let p = match (spec.kind, spec.two_sided) {
        (TestKind::ZKnownVariance, true) => {
            let (a, b) = (-c - ncp, c - ncp);
            if a > 0.0 {
                crate::dist::normal_sf(a) - crate::dist::normal_sf(b)
            } else {
                normal_cdf(b) - normal_cdf(a)
            }
        }
        (TestKind::ZKnownVariance, false) => normal_cdf(c - ncp),
        (TestKind::TPooled, true) => {
            noncentral_t_interval(-c, c, n.degrees_of_freedom() as f64, ncp)
        }
        (TestKind::TPooled, false) => noncentral_t_cdf(c, n.degrees_of_freedom() as f64, ncp),
    };
    Ok(p.clamp(0.0, 1.0))
}

/// Probability of rejecting when the true mean difference is `effect`.
pub fn rejection_probability(spec: &TestSpec, n: SampleVector, effect: f64) -> Result<f64> {
    Ok(1.0 - acceptance_probability(spec, n, effect)?)
}

/// Type II error rate at the design effect `spec.delta()`.
pub fn type2_error(spec: &TestSpec, n: SampleVector) -> Result<f64> {
    acceptance_probability(spec, n, spec.delta)
}

pub fn power(spec: &TestSpec, n: SampleVector) -> Result<f64> {
    Ok(1.0 - type2_error(spec, n)?)
}

const MAX_SEARCH_N1: u64 = 1 << 40;

/// Smallest design `(n1, max(min, ceil(ratio * n1)))` whose power reaches
/// `target_power`.
pub fn required_sample_size(
    spec: &TestSpec,
    target_power: f64,
    allocation_ratio: f64,
) -> Result<SampleVector> {
    if !(target_power < 1.0) {
        return domain(format!("target power {target_power} is unreachable (must be < 1)"));
    }
    if !(target_power > spec.alpha) {
        return domain(format!(
            "target power {target_power} must exceed the level {}",
            spec.alpha
        ));
    }
    if !(allocation_ratio > 0.0 && allocation_ratio.is_finite()) {
        return domain(format!("allocation ratio must be positive, got {allocation_ratio}"));
    }
    let min = spec.kind.min_arm();
    let design = |n1: u64| {
        let n2 = ((allocation_ratio * n1 as f64 - 1e-9).ceil() as u64).max(min);
        SampleVector::new(n1, n2)
    };
    let reaches = |n1: u64| -> Result<bool> { Ok(power(spec, design(n1))? >= target_power) };

    if reaches(min)? {
        return Ok(design(min));
    }
    let mut lo = min;
    let mut hi = min.max(2);
    while !reaches(hi)? {
        lo = hi;
        hi *= 2;
        if hi > MAX_SEARCH_N1 {
            return domain(format!(
                "target power {target_power} is unreachable for effect {}",
                spec.delta
            ));
        }
    }
    // invariant: lo fails, hi succeeds
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if reaches(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(design(hi))
}

/// Expected number of Type II errors across a portfolio, `Σ βᵢ`.
pub fn portfolio_expected_type2(specs: &[TestSpec], samples: &[SampleVector]) -> Result<f64> {
    if specs.len() != samples.len() {
        return domain(format!(
            "{} test specs but {} sample vectors",
            specs.len(),
            samples.len()
        ));
    }
    specs
        .iter()
        .zip(samples)
        .map(|(spec, &n)| type2_error(spec, n))
        .sum()
}
