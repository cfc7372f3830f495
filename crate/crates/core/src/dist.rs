//! Exact discrete distributions and the standard normal distribution.
//!
//! All combinatorics are carried out in natural-log space so that quantities
//! such as C(10000, 2000) never overflow. Small hypergeometric cases whose
//! binomial coefficients fit in the 53-bit mantissa are evaluated with exact
//! integer arithmetic instead.

use std::f64::consts::SQRT_2;
use std::sync::OnceLock;

use libm::erfc;
use statrs::function::erf::erfc_inv;
use statrs::function::gamma::ln_gamma;

use crate::error::{check_probability, domain, Result};

/// Tolerance used when validating that probabilities sum to one.
pub const PMF_SUM_TOLERANCE: f64 = 1e-12;

const SHARED_TABLE_SIZE: usize = 1 << 17;
const EXACT_LIMIT: u64 = 1 << 53;

/// Cached natural-log factorials.
///
/// Entries up to `n_max` come from a compensated running sum of `ln i`;
/// larger arguments fall back to `ln Γ(n + 1)`.
#[derive(Debug, Clone)]
pub struct LogCombinatorics {
    ln_factorials: Vec<f64>,
}

impl LogCombinatorics {
    pub fn new(n_max: usize) -> Self {
        let mut ln_factorials = Vec::with_capacity(n_max + 1);
        ln_factorials.push(0.0);
        let (mut sum, mut carry) = (0.0f64, 0.0f64);
        for i in 1..=n_max {
            // Kahan summation keeps the table accurate to a few ulps.
            let y = (i as f64).ln() - carry;
            let t = sum + y;
            carry = (t - sum) - y;
            sum = t;
            ln_factorials.push(sum);
        }
        Self { ln_factorials }
    }

    /// Process-wide table shared by the free functions of this module.
    pub fn shared() -> &'static LogCombinatorics {
        static SHARED: OnceLock<LogCombinatorics> = OnceLock::new();
        SHARED.get_or_init(|| LogCombinatorics::new(SHARED_TABLE_SIZE))
    }

    pub fn n_max(&self) -> usize {
        self.ln_factorials.len() - 1
    }

    pub fn ln_factorial(&self, n: u64) -> f64 {
        match self.ln_factorials.get(n as usize) {
            Some(&v) => v,
            _ => ln_gamma(n as f64 + 1.0),
        }
    }

    pub fn ln_binomial(&self, n: u64, k: u64) -> Result<f64> {
        if k > n {
            return domain(format!("binomial coefficient C({n}, {k}) requires k <= n"));
        }
        if k == 0 || k == n {
            return Ok(0.0);
        }
        Ok(self.ln_factorial(n) - self.ln_factorial(k) - self.ln_factorial(n - k))
    }
}

/// `ln C(n, k)`.
pub fn log_binomial(n: u64, k: u64) -> Result<f64> {
    LogCombinatorics::shared().ln_binomial(n, k)
}

/// Exact `C(n, k)` when it does not exceed `limit`.
pub fn binomial_exact(n: u64, k: u64, limit: u64) -> Option<u64> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut c: u128 = 1;
    for i in 0..k {
        // c * (n - i) is divisible by (i + 1) at every step.
        c = c * u128::from(n - i) / u128::from(i + 1);
        if c > u128::from(limit) {
            return None;
        }
    }
    Some(c as u64)
}

/// A probability mass function on consecutive integers starting at `support_min`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscretePmf {
    support_min: i64,
    probabilities: Vec<f64>,
}

impl DiscretePmf {
    pub fn new(support_min: i64, probabilities: Vec<f64>) -> Result<Self> {
        if probabilities.is_empty() {
            return domain("a pmf needs at least one support point");
        }
        for (i, &p) in probabilities.iter().enumerate() {
            if !(0.0..=1.0).contains(&p) {
                return domain(format!(
                    "probability at {} is outside [0, 1]: {p}",
                    support_min + i as i64
                ));
            }
        }
        let total: f64 = probabilities.iter().sum();
        if (total - 1.0).abs() > PMF_SUM_TOLERANCE {
            return domain(format!("probabilities sum to {total}, not 1"));
        }
        Ok(Self {
            support_min,
            probabilities,
        })
    }

    pub fn point_mass(at: i64) -> Self {
        Self {
            support_min: at,
            probabilities: vec![1.0],
        }
    }

    pub fn support_min(&self) -> i64 {
        self.support_min
    }

    pub fn support_max(&self) -> i64 {
        self.support_min + self.probabilities.len() as i64 - 1
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn prob(&self, x: i64) -> f64 {
        if x < self.support_min {
            return 0.0;
        }
        self.probabilities
            .get((x - self.support_min) as usize)
            .copied()
            .unwrap_or(0.0)
    }

    /// `pr(X <= x)`.
    pub fn cdf(&self, x: i64) -> f64 {
        if x < self.support_min {
            return 0.0;
        }
        let upto = ((x - self.support_min) as usize).min(self.probabilities.len() - 1);
        self.probabilities[..=upto].iter().sum::<f64>().min(1.0)
    }

    pub fn mean(&self) -> f64 {
        self.iter().map(|(x, p)| x as f64 * p).sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        self.probabilities
            .iter()
            .enumerate()
            .map(move |(i, &p)| (self.support_min + i as i64, p))
    }
}

/// Hypergeometric distribution: `draws` items taken without replacement from
/// a population of `population` items of which `successes` are marked.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Hypergeometric {
    population: u64,
    successes: u64,
    draws: u64,
}

impl Hypergeometric {
    pub fn new(population: u64, successes: u64, draws: u64) -> Result<Self> {
        if successes > population || draws > population {
            return domain(format!(
                "hypergeometric parameters need K <= N and n <= N (N={population}, K={successes}, n={draws})"
            ));
        }
        Ok(Self {
            population,
            successes,
            draws,
        })
    }

    /// Inclusive support `[max(0, n + K - N), min(n, K)]`.
    pub fn support(&self) -> (u64, u64) {
        let lo = (self.draws + self.successes).saturating_sub(self.population);
        (lo, self.draws.min(self.successes))
    }

    pub fn mean(&self) -> f64 {
        if self.population == 0 {
            return 0.0;
        }
        self.draws as f64 * self.successes as f64 / self.population as f64
    }

    fn exact_total(&self) -> Option<u64> {
        binomial_exact(self.population, self.draws, EXACT_LIMIT)
    }

    /// Number of draws hitting exactly `x` marked items.
    fn exact_count(&self, x: u64) -> u64 {
        let a = binomial_exact(self.successes, x, EXACT_LIMIT).unwrap_or(0);
        let b = binomial_exact(self.population - self.successes, self.draws - x, EXACT_LIMIT)
            .unwrap_or(0);
        a * b
    }

    pub fn ln_pmf(&self, x: i64) -> f64 {
        let (lo, hi) = self.support();
        if x < lo as i64 || x > hi as i64 {
            return f64::NEG_INFINITY;
        }
        let x = x as u64;
        let lc = LogCombinatorics::shared();
        let (n_pop, k, n) = (self.population, self.successes, self.draws);
        // support bounds make every coefficient well defined
        lc.ln_binomial(k, x).unwrap_or(f64::NEG_INFINITY)
            + lc.ln_binomial(n_pop - k, n - x).unwrap_or(f64::NEG_INFINITY)
            - lc.ln_binomial(n_pop, n).unwrap_or(0.0)
    }

    pub fn pmf(&self, x: i64) -> f64 {
        let (lo, hi) = self.support();
        if x < lo as i64 || x > hi as i64 {
            return 0.0;
        }
        match self.exact_total() {
            Some(total) => self.exact_count(x as u64) as f64 / total as f64,
            None => self.ln_pmf(x).exp(),
        }
    }

    /// `ln pr(X >= ell)`.
    pub fn ln_tail(&self, ell: i64) -> f64 {
        let (lo, hi) = self.support();
        if ell <= lo as i64 {
            return 0.0;
        }
        if ell > hi as i64 {
            return f64::NEG_INFINITY;
        }
        if let Some(total) = self.exact_total() {
            let hits: u64 = (ell as u64..=hi).map(|x| self.exact_count(x)).sum();
            return (hits as f64 / total as f64).ln();
        }
        let terms: Vec<f64> = (ell..=hi as i64).map(|x| self.ln_pmf(x)).collect();
        log_sum_exp(&terms).min(0.0)
    }

    /// `pr(X >= ell)`.
    pub fn tail(&self, ell: i64) -> f64 {
        let (lo, hi) = self.support();
        if ell <= lo as i64 {
            return 1.0;
        }
        if ell > hi as i64 {
            return 0.0;
        }
        if let Some(total) = self.exact_total() {
            let hits: u64 = (ell as u64..=hi).map(|x| self.exact_count(x)).sum();
            return hits as f64 / total as f64;
        }
        self.ln_tail(ell).exp()
    }
}

pub fn hypergeom_pmf(population: u64, successes: u64, draws: u64, x: i64) -> Result<f64> {
    Ok(Hypergeometric::new(population, successes, draws)?.pmf(x))
}

/// `pr(X >= ell)` for `X ~ Hypergeometric(N, K, n)`.
pub fn hypergeom_tail(population: u64, successes: u64, draws: u64, ell: i64) -> Result<f64> {
    Ok(Hypergeometric::new(population, successes, draws)?.tail(ell))
}

pub(crate) fn log_sum_exp(terms: &[f64]) -> f64 {
    let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + terms.iter().map(|t| (t - max).exp()).sum::<f64>().ln()
}

/// Standard normal density.
pub fn normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Standard normal CDF, `Φ(z) = erfc(-z/√2)/2`.
///
/// `erfc` comes from the musl-derived `libm`, accurate to about one ulp, so
/// lower tails stay relative-accurate far below 1e-10.
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / SQRT_2)
}

/// Upper tail `1 - Φ(z)` without cancellation.
pub fn normal_sf(z: f64) -> f64 {
    0.5 * erfc(z / SQRT_2)
}

/// Inverse of [`normal_cdf`] on the open unit interval.
pub fn normal_quantile(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return domain(format!("normal quantile requires p in (0, 1), got {p}"));
    }
    let mut z = -SQRT_2 * erfc_inv(2.0 * p);
    // one Newton polish step
    let density = normal_pdf(z);
    if density > 0.0 {
        let residual = if p < 0.5 {
            normal_cdf(z) - p
        } else {
            (1.0 - p) - normal_sf(z)
        };
        z -= residual / density;
    }
    Ok(z)
}

fn check_rate(lambda: f64) -> Result<()> {
    if lambda.is_finite() && lambda >= 0.0 {
        Ok(())
    } else {
        domain(format!("Poisson mean must be a nonnegative finite number, got {lambda}"))
    }
}

pub fn poisson_ln_pmf(lambda: f64, x: u64) -> f64 {
    if lambda == 0.0 {
        return if x == 0 { 0.0 } else { f64::NEG_INFINITY };
    }
    -lambda + x as f64 * lambda.ln() - LogCombinatorics::shared().ln_factorial(x)
}

/// `e^{-λ} λ^x / x!`, computed in log space.
pub fn poisson_pmf(lambda: f64, x: u64) -> Result<f64> {
    check_rate(lambda)?;
    Ok(poisson_ln_pmf(lambda, x).exp())
}

pub fn poisson_cdf(lambda: f64, x: u64) -> Result<f64> {
    check_rate(lambda)?;
    Ok((0..=x)
        .map(|i| poisson_ln_pmf(lambda, i).exp())
        .sum::<f64>()
        .min(1.0))
}

/// Exact distribution of a sum of independent Bernoulli(rᵢ) variables
/// (Poisson-binomial), by iterative convolution.
pub fn bernoulli_sum_pmf(rates: &[f64]) -> Result<DiscretePmf> {
    for (i, &r) in rates.iter().enumerate() {
        check_probability(&format!("rate {i}"), r)?;
    }
    let mut probs = Vec::with_capacity(rates.len() + 1);
    probs.push(1.0);
    for &r in rates {
        probs.push(0.0);
        for j in (1..probs.len()).rev() {
            probs[j] = probs[j] * (1.0 - r) + probs[j - 1] * r;
        }
        probs[0] *= 1.0 - r;
    }
    DiscretePmf::new(0, probs)
}
