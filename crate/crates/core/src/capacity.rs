//! How many `k`-subsamples a dataset of `n` units can sustain.
//!
//! Pairwise overlaps of independently drawn uniform `k`-subsets are
//! `Hypergeometric(n, k, k)`. By the union bound over the `C(C, 2)` pairs,
//! drawing at most `sqrt(2 p_tol / pr(|X₁ ∩ X₂| >= ℓ))` subsets keeps the
//! probability of any pairwise overlap of size `ℓ` or more below `p_tol`.
//! The pairwise tail is either evaluated exactly or bounded by the Hoeffding
//! form `exp(-2k b²)`, `b = ℓ/k - k/n`.
//!
//! Capacities grow exponentially in `k`, so they are carried in log form.

use serde::{Deserialize, Serialize};

use crate::dist::{binomial_exact, bernoulli_sum_pmf, log_binomial, poisson_cdf, DiscretePmf, Hypergeometric};
use crate::error::{check_probability, domain, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CapacityQuery {
    n: u64,
    k: u64,
    ell: u64,
    p_tol: f64,
}

impl CapacityQuery {
    pub fn new(n: u64, k: u64, ell: u64, p_tol: f64) -> Result<Self> {
        if k == 0 || k > n {
            return domain(format!("need 0 < k <= n, got k={k}, n={n}"));
        }
        if ell > k {
            return domain(format!("overlap threshold {ell} exceeds k={k}"));
        }
        if !(p_tol > 0.0 && p_tol <= 1.0) {
            return domain(format!("p_tol must lie in (0, 1], got {p_tol}"));
        }
        Ok(Self { n, k, ell, p_tol })
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn k(&self) -> u64 {
        self.k
    }

    pub fn ell(&self) -> u64 {
        self.ell
    }

    pub fn p_tol(&self) -> f64 {
        self.p_tol
    }

    pub fn with_ell(&self, ell: u64) -> Result<Self> {
        Self::new(self.n, self.k, ell, self.p_tol)
    }

    /// `k / n`
    pub fn r1(&self) -> f64 {
        self.k as f64 / self.n as f64
    }

    /// `ℓ / k`
    pub fn r2(&self) -> f64 {
        self.ell as f64 / self.k as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TailMethod {
    ExactTail,
    Hoeffding,
}

impl TailMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            TailMethod::ExactTail => "exact_tail",
            TailMethod::Hoeffding => "hoeffding",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapacityResult {
    /// `floor(bound)` when it fits in a `u64`.
    pub c_bound: Option<u64>,
    /// Natural log of the real-valued bound `sqrt(2 p_tol / tail)`.
    pub ln_bound: f64,
    pub method: TailMethod,
    pub pairwise_tail: f64,
    pub ln_pairwise_tail: f64,
    pub r1: f64,
    pub r2: f64,
}

impl CapacityResult {
    /// `floor(bound)` as a float; usable for every magnitude.
    pub fn c_bound_f64(&self) -> f64 {
        match self.c_bound {
            Some(c) => c as f64,
            None => self.ln_bound.exp().floor(),
        }
    }
}

/// `ln pr(|X₁ ∩ X₂| >= ℓ)` or its Hoeffding bound.
pub fn ln_pairwise_overlap_tail(q: &CapacityQuery, method: TailMethod) -> Result<f64> {
    match method {
        TailMethod::ExactTail => {
            Ok(Hypergeometric::new(q.n, q.k, q.k)?.ln_tail(q.ell as i64))
        }
        TailMethod::Hoeffding => {
            // ℓ >= k²/n, compared in integers
            if u128::from(q.ell) * u128::from(q.n) < u128::from(q.k) * u128::from(q.k) {
                return domain(format!(
                    "the Hoeffding bound needs ell >= k^2/n = {:.3}, got ell = {}",
                    (q.k as f64).powi(2) / q.n as f64,
                    q.ell
                ));
            }
            let b = q.r2() - q.r1();
            Ok(-2.0 * q.k as f64 * b * b)
        }
    }
}

pub fn pairwise_overlap_tail(q: &CapacityQuery, method: TailMethod) -> Result<f64> {
    Ok(ln_pairwise_overlap_tail(q, method)?.exp())
}

/// Largest study count `C` with `C(C,2)·tail <= p_tol` via `C <= sqrt(2 p_tol / tail)`.
pub fn max_studies(q: &CapacityQuery, method: TailMethod) -> Result<CapacityResult> {
    let ln_tail = ln_pairwise_overlap_tail(q, method)?;
    let ln_bound = 0.5 * ((2.0 * q.p_tol).ln() - ln_tail);
    // u64 floors are exact below 2^53; larger bounds stay in log form
    let c_bound = if ln_bound < 53.0 * std::f64::consts::LN_2 {
        Some(ln_bound.exp().floor() as u64)
    } else {
        None
    };
    Ok(CapacityResult {
        c_bound,
        ln_bound,
        method,
        pairwise_tail: ln_tail.exp(),
        ln_pairwise_tail: ln_tail,
        r1: q.r1(),
        r2: q.r2(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CapacityRow {
    pub ratio: f64,
    pub ell: u64,
    pub result: Result<CapacityResult>,
}

/// One [`max_studies`] row per threshold, in input order. Invalid rows carry
/// their error rather than aborting the table.
pub fn capacity_table(base: &CapacityQuery, ells: &[u64], method: TailMethod) -> Vec<CapacityRow> {
    ells.iter()
        .map(|&ell| CapacityRow {
            ratio: ell as f64 / base.k as f64,
            ell,
            result: base.with_ell(ell).and_then(|q| max_studies(&q, method)),
        })
        .collect()
}

/// Overlap forced between two `k`-subsets of an `N`-set: `max(0, 2k - N)`.
pub fn guaranteed_overlap_two(dataset_size: u64, k: u64) -> Result<u64> {
    if k > dataset_size {
        return domain(format!("k={k} exceeds the dataset size {dataset_size}"));
    }
    Ok((2 * k).saturating_sub(dataset_size))
}

/// Smallest `k` with `k >= N / (2 - λ)`, which forces `|X₁ ∩ X₂| >= λk`.
pub fn min_k_for_overlap_fraction(dataset_size: u64, lambda: f64) -> Result<u64> {
    if !(0.0..=1.0).contains(&lambda) {
        return domain(format!("overlap fraction must lie in [0, 1], got {lambda}"));
    }
    let denom = 2.0 - lambda;
    let forces = |k: u64| k as f64 * denom >= dataset_size as f64;
    let mut k = (dataset_size as f64 / denom).ceil() as u64;
    while k > 0 && forces(k - 1) {
        k -= 1;
    }
    while !forces(k) {
        k += 1;
    }
    Ok(k.min(dataset_size))
}

/// Number of draws that forces two identical `k`-subsets: `C(N, k) + 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PigeonholeCapacity {
    /// Exact value when `C(N, k) < 2^62`.
    pub exact: Option<u64>,
    /// `ln C(N, k)`.
    pub ln_binomial: f64,
    pub overflow: bool,
}

pub fn pigeonhole_capacity(dataset_size: u64, k: u64) -> Result<PigeonholeCapacity> {
    if k > dataset_size {
        return domain(format!("k={k} exceeds the dataset size {dataset_size}"));
    }
    let ln_binomial = log_binomial(dataset_size, k)?;
    let exact = binomial_exact(dataset_size, k, (1u64 << 62) - 1).map(|c| c + 1);
    Ok(PigeonholeCapacity {
        exact,
        ln_binomial,
        overflow: exact.is_none(),
    })
}

/// How often a single unit is reused when studies subsample with inclusion
/// rates `rᵢ` independently.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitReuseReport {
    pub exact_pmf: DiscretePmf,
    pub poisson_lambda: f64,
    /// `16 Σr² / Σr`, reported when every rate is at most 1/4.
    pub lecam_bound: Option<f64>,
    pub pr_ge2_exact: f64,
    pub pr_ge2_poisson: f64,
    /// `sup_x |F_exact(x) - F_Poisson(x)|`.
    pub sup_cdf_distance: f64,
}

pub fn unit_reuse(rates: &[f64]) -> Result<UnitReuseReport> {
    for (i, &r) in rates.iter().enumerate() {
        check_probability(&format!("rate {i}"), r)?;
    }
    let exact_pmf = bernoulli_sum_pmf(rates)?;
    let lambda: f64 = rates.iter().sum();
    let sum_sq: f64 = rates.iter().map(|r| r * r).sum();
    let lecam_bound = if rates.iter().all(|&r| r <= 0.25) {
        Some(if lambda > 0.0 { 16.0 * sum_sq / lambda } else { 0.0 })
    } else {
        None
    };
    let pr_ge2_exact = (1.0 - exact_pmf.prob(0) - exact_pmf.prob(1)).max(0.0);
    let pr_ge2_poisson = (1.0 - (1.0 + lambda) * (-lambda).exp()).max(0.0);
    // beyond m the exact CDF is 1 and the gap 1 - F_P(x) shrinks, so x <= m suffices
    let mut sup_cdf_distance = 0.0f64;
    let mut exact_cdf = 0.0;
    for (x, p) in exact_pmf.iter() {
        exact_cdf += p;
        let d = (exact_cdf.min(1.0) - poisson_cdf(lambda, x as u64)?).abs();
        sup_cdf_distance = sup_cdf_distance.max(d);
    }
    Ok(UnitReuseReport {
        exact_pmf,
        poisson_lambda: lambda,
        lecam_bound,
        pr_ge2_exact,
        pr_ge2_poisson,
        sup_cdf_distance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn query_validation() {
        assert!(CapacityQuery::new(10, 0, 0, 0.05).is_err());
        assert!(CapacityQuery::new(10, 11, 0, 0.05).is_err());
        assert!(CapacityQuery::new(10, 5, 6, 0.05).is_err());
        assert!(CapacityQuery::new(10, 5, 2, 0.0).is_err());
        assert!(CapacityQuery::new(10, 5, 2, 1.0).is_ok());
    }

    #[test]
    fn exact_tail_certain_event() {
        let q = CapacityQuery::new(10, 5, 0, 0.05).unwrap();
        assert_eq!(pairwise_overlap_tail(&q, TailMethod::ExactTail).unwrap(), 1.0);
    }

    #[test]
    fn hoeffding_tail_value() {
        let q = CapacityQuery::new(10_000, 2_000, 550, 0.05).unwrap();
        let t = pairwise_overlap_tail(&q, TailMethod::Hoeffding).unwrap();
        // b = 0.075, exponent -2 * 2000 * 0.075^2 = -22.5
        assert!(((t - (-22.5f64).exp()) / t).abs() < 1e-12);
        assert!((t - 1.69e-10).abs() < 0.01e-10);
        let below = CapacityQuery::new(10_000, 2_000, 399, 0.05).unwrap();
        let err = pairwise_overlap_tail(&below, TailMethod::Hoeffding).unwrap_err();
        assert!(err.to_string().contains("k^2/n"));
    }

    #[test]
    fn max_studies_rows() {
        let q = CapacityQuery::new(10_000, 2_000, 550, 0.05).unwrap();
        assert_eq!(max_studies(&q, TailMethod::Hoeffding).unwrap().c_bound, Some(24_311));
        let q = q.with_ell(400).unwrap();
        assert_eq!(max_studies(&q, TailMethod::Hoeffding).unwrap().c_bound, Some(0));
        let q = CapacityQuery::new(1_000_000, 10_000, 500, 0.05).unwrap();
        let c = max_studies(&q, TailMethod::Hoeffding).unwrap().c_bound.unwrap() as f64;
        assert!((c - 2_810_034.0).abs() / 2_810_034.0 < 1e-3, "{c}");
    }

    #[test]
    fn huge_capacities_use_log_form() {
        let q = CapacityQuery::new(10_000, 2_000, 850, 0.05).unwrap();
        let r = max_studies(&q, TailMethod::Hoeffding).unwrap();
        assert_eq!(r.c_bound, None);
        assert!((r.c_bound_f64() / 2.96e43 - 1.0).abs() < 0.01);
        let single = capacity_table(&q, &[850], TailMethod::Hoeffding);
        assert_eq!(single[0].result.as_ref().unwrap(), &r);
    }

    #[test]
    fn table_rows_report_errors_individually() {
        let q = CapacityQuery::new(10_000, 2_000, 500, 0.05).unwrap();
        let rows = capacity_table(&q, &[300, 500, 2_500], TailMethod::Hoeffding);
        assert!(rows[0].result.is_err());
        assert_eq!(rows[1].result.as_ref().unwrap().c_bound, Some(46));
        assert!(rows[2].result.is_err());
        assert_eq!(rows[1].ratio, 0.25);
    }

    #[test]
    fn guaranteed_overlap_cases() {
        assert_eq!(guaranteed_overlap_two(100, 50).unwrap(), 0);
        assert_eq!(guaranteed_overlap_two(100, 75).unwrap(), 50);
        assert_eq!(guaranteed_overlap_two(10, 10).unwrap(), 10);
        assert!(guaranteed_overlap_two(10, 11).is_err());
    }

    #[test]
    fn min_k_cases() {
        assert_eq!(min_k_for_overlap_fraction(100, 0.0).unwrap(), 50);
        assert_eq!(min_k_for_overlap_fraction(100, 1.0).unwrap(), 100);
        let k = min_k_for_overlap_fraction(99, 0.5).unwrap();
        assert_eq!(k, 66);
        assert_eq!(guaranteed_overlap_two(99, k).unwrap(), 33);
        assert!(min_k_for_overlap_fraction(99, 1.5).is_err());
        for n in 1..200u64 {
            for lambda in [0.0, 0.1, 0.33, 0.5, 0.9, 1.0] {
                let k = min_k_for_overlap_fraction(n, lambda).unwrap();
                let forced = guaranteed_overlap_two(n, k).unwrap() as f64;
                assert!(forced >= lambda * k as f64 - 1e-9, "n={n} λ={lambda} k={k}");
            }
        }
    }

    #[test]
    fn pigeonhole_cases() {
        assert_eq!(pigeonhole_capacity(4, 2).unwrap().exact, Some(7));
        assert_eq!(pigeonhole_capacity(9, 9).unwrap().exact, Some(2));
        let big = pigeonhole_capacity(10_000, 2_000).unwrap();
        assert!(big.overflow);
        assert_eq!(big.exact, None);
        let oracle: f64 = (1..=2_000u64)
            .map(|i| ((8_000 + i) as f64 / i as f64).ln())
            .sum();
        assert!(((big.ln_binomial - oracle) / oracle).abs() < 1e-8);
    }

    #[test]
    fn unit_reuse_degenerate() {
        let r = unit_reuse(&[0.0; 5]).unwrap();
        assert_eq!(r.exact_pmf.prob(0), 1.0);
        assert_eq!(r.poisson_lambda, 0.0);
        assert_eq!(r.pr_ge2_exact, 0.0);
        assert_eq!(r.pr_ge2_poisson, 0.0);
        assert!(unit_reuse(&[0.5, -0.1]).is_err());
    }

    #[test]
    fn unit_reuse_ten_tenths() {
        let r = unit_reuse(&[0.1; 10]).unwrap();
        assert!((r.poisson_lambda - 1.0).abs() < 1e-12);
        let closed = 1.0 - 0.9f64.powi(10) - 10.0 * 0.1 * 0.9f64.powi(9);
        assert!((r.pr_ge2_exact - closed).abs() < 1e-12);
        assert!((r.pr_ge2_poisson - (1.0 - 2.0 / std::f64::consts::E)).abs() < 1e-12);
        assert!((r.exact_pmf.mean() - r.poisson_lambda).abs() < 1e-12);
    }

    #[test]
    fn unit_reuse_lecam_regime() {
        let r = unit_reuse(&[0.25, 0.25]).unwrap();
        assert!((r.lecam_bound.unwrap() - 4.0).abs() < 1e-12);
        // direct CDF comparison
        let lam: f64 = 0.5;
        let exact_cdf = [0.5625, 0.9375, 1.0];
        let mut pois = 0.0;
        let mut oracle = 0.0f64;
        for (x, f) in exact_cdf.iter().enumerate() {
            pois += (-lam).exp() * lam.powi(x as i32) / (1..=x).product::<usize>() as f64;
            oracle = oracle.max((f - pois).abs());
        }
        assert!((r.sup_cdf_distance - oracle).abs() < 1e-12);
        assert_eq!(unit_reuse(&[0.3, 0.1]).unwrap().lecam_bound, None);
    }
}
