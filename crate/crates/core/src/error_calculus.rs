//! Error-count distributions, stop-loss premiums and classical multiplicity
//! metrics.
//!
//! An [`ErrorCountDistribution`] is the law of the number of inferential
//! errors in a portfolio of `m` studies. The stop-loss premium
//! `ρ(L) = E[(X - L)+]` orders such laws by riskiness: `X` is stop-loss
//! smaller than `Y` when `ρ_X(L) <= ρ_Y(L)` at every retention `L`.

use crate::dist::DiscretePmf;
use crate::error::{check_probability, domain, Result};

/// Tolerance of [`stop_loss_compare`].
pub const STOP_LOSS_TOLERANCE: f64 = 1e-12;

const JOINT_TOLERANCE: f64 = 1e-15;

/// Two error events described by `pr(E₁)`, `pr(E₂)` and `pr(E₂ | E₁)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DependentEventPair {
    p1: f64,
    p2: f64,
    p2_given_1: f64,
}

impl DependentEventPair {
    /// Validates that the implied 2×2 joint table has entries in `[0, 1]`.
    pub fn new(p1: f64, p2: f64, p2_given_1: f64) -> Result<Self> {
        check_probability("pr(E1)", p1)?;
        check_probability("pr(E2)", p2)?;
        check_probability("pr(E2|E1)", p2_given_1)?;
        let pair = Self {
            p1,
            p2,
            p2_given_1,
        };
        let [none, only_first, only_second, both] = pair.joint_cells();
        let cells = [
            ("pr(not E1, not E2)", none),
            ("pr(E1, not E2)", only_first),
            ("pr(not E1, E2)", only_second),
            ("pr(E1, E2)", both),
        ];
        for (name, value) in cells {
            if value < -JOINT_TOLERANCE || value > 1.0 + JOINT_TOLERANCE {
                return domain(format!(
                    "inconsistent event pair: joint cell {name} = {value} lies outside [0, 1]"
                ));
            }
        }
        Ok(pair)
    }

    /// Equal marginals `α` with conditional probability `pr(E₂|E₁)`.
    pub fn symmetric(alpha: f64, p2_given_1: f64) -> Result<Self> {
        Self::new(alpha, alpha, p2_given_1)
    }

    pub fn p1(&self) -> f64 {
        self.p1
    }

    pub fn p2(&self) -> f64 {
        self.p2
    }

    pub fn p2_given_1(&self) -> f64 {
        self.p2_given_1
    }

    /// Joint cells `[neither, E₁ only, E₂ only, both]`.
    pub fn joint_cells(&self) -> [f64; 4] {
        let both = self.p1 * self.p2_given_1;
        let only_first = self.p1 - both;
        let only_second = self.p2 - both;
        let none = 1.0 - self.p2 - self.p1 * (1.0 - self.p2_given_1);
        [none, only_first, only_second, both]
    }
}

/// Law of the number of errors among `m` studies, supported on `0..=m`.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorCountDistribution {
    pmf: DiscretePmf,
}

impl ErrorCountDistribution {
    pub fn new(probabilities: Vec<f64>) -> Result<Self> {
        Ok(Self {
            pmf: DiscretePmf::new(0, probabilities)?,
        })
    }

    /// Wraps a pmf; it must start at zero.
    pub fn from_pmf(pmf: DiscretePmf) -> Result<Self> {
        if pmf.support_min() != 0 {
            return domain("an error-count distribution must be supported on 0..=m");
        }
        Ok(Self { pmf })
    }

    /// Empirical distribution from tallies indexed by error count.
    pub fn from_counts(counts: &[u64]) -> Result<Self> {
        let total: u64 = counts.iter().sum();
        if total == 0 {
            return domain("empirical distribution needs at least one observation");
        }
        Self::new(counts.iter().map(|&c| c as f64 / total as f64).collect())
    }

    /// All mass on `count`, with support `0..=m`.
    pub fn point_mass(m: usize, count: usize) -> Result<Self> {
        if count > m {
            return domain(format!("count {count} exceeds the number of studies {m}"));
        }
        let mut probs = vec![0.0; m + 1];
        probs[count] = 1.0;
        Self::new(probs)
    }

    pub fn studies(&self) -> usize {
        self.pmf.probabilities().len() - 1
    }

    pub fn pmf(&self) -> &DiscretePmf {
        &self.pmf
    }

    pub fn probabilities(&self) -> &[f64] {
        self.pmf.probabilities()
    }

    pub fn prob(&self, count: usize) -> f64 {
        self.pmf.prob(count as i64)
    }

    pub fn mean(&self) -> f64 {
        self.pmf.mean()
    }
}

/// Premiums `ρ(L)` at every integer retention `L = 0..=m`.
#[derive(Debug, Clone, PartialEq)]
pub struct StopLossCurve {
    premiums: Vec<f64>,
}

impl StopLossCurve {
    pub fn from_premiums(premiums: Vec<f64>) -> Self {
        Self { premiums }
    }

    pub fn premiums(&self) -> &[f64] {
        &self.premiums
    }

    /// Premium at retention `l`; zero beyond the stored range.
    pub fn at(&self, l: usize) -> f64 {
        self.premiums.get(l).copied().unwrap_or(0.0)
    }

    pub fn len(&self) -> usize {
        self.premiums.len()
    }

    pub fn is_empty(&self) -> bool {
        self.premiums.is_empty()
    }
}

/// `two_event_distribution`: error-count law of a dependent event pair.
pub fn two_event_distribution(pair: &DependentEventPair) -> ErrorCountDistribution {
    let (p1, p2, c) = (pair.p1, pair.p2, pair.p2_given_1);
    let zero = 1.0 - p2 - p1 * (1.0 - c);
    let one = p2 + p1 * (1.0 - 2.0 * c);
    let two = p1 * c;
    // clamp rounding noise from the validated joint table
    let probs = [zero, one, two].map(|p| p.clamp(0.0, 1.0));
    ErrorCountDistribution {
        pmf: DiscretePmf::new(0, probs.to_vec()).expect("validated joint table"),
    }
}

/// `ρ(L) = Σ_{x > L} (x - L) pr(X = x)`.
pub fn stop_loss_premium(dist: &ErrorCountDistribution, retention: i64) -> Result<f64> {
    let m = dist.studies() as i64;
    if retention < 0 || retention > m {
        return domain(format!("retention {retention} outside [0, {m}]"));
    }
    Ok(premium_unchecked(dist, retention as usize))
}

fn premium_unchecked(dist: &ErrorCountDistribution, retention: usize) -> f64 {
    dist.probabilities()
        .iter()
        .enumerate()
        .skip(retention + 1)
        .map(|(x, p)| (x - retention) as f64 * p)
        .fold(0.0, |acc, v| acc + v)
}

pub fn stop_loss_curve(dist: &ErrorCountDistribution) -> StopLossCurve {
    StopLossCurve {
        premiums: (0..=dist.studies())
            .map(|l| premium_unchecked(dist, l))
            .collect(),
    }
}

/// Outcome of comparing two stop-loss curves.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StopLossOrdering {
    ASmaller,
    BSmaller,
    Equal,
    Incomparable,
}

impl StopLossOrdering {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::ASmaller => "a_smaller",
            Self::BSmaller => "b_smaller",
            Self::Equal => "equal",
            Self::Incomparable => "incomparable",
        }
    }
}

/// Pointwise comparison of premiums; the shorter curve is padded with zeros.
pub fn stop_loss_compare(a: &StopLossCurve, b: &StopLossCurve) -> StopLossOrdering {
    let len = a.len().max(b.len());
    let (mut a_below, mut b_below) = (false, false);
    for l in 0..len {
        let diff = a.at(l) - b.at(l);
        if diff < -STOP_LOSS_TOLERANCE {
            a_below = true;
        } else if diff > STOP_LOSS_TOLERANCE {
            b_below = true;
        }
    }
    match (a_below, b_below) {
        (false, false) => StopLossOrdering::Equal,
        (true, false) => StopLossOrdering::ASmaller,
        (false, true) => StopLossOrdering::BSmaller,
        (true, true) => StopLossOrdering::Incomparable,
    }
}

/// Per-comparison error rate: expected errors per study.
pub fn pcer(dist: &ErrorCountDistribution) -> Result<f64> {
    match dist.studies() {
        0 => domain("PCER is undefined for a portfolio of zero studies"),
        m => Ok(dist.mean() / m as f64),
    }
}

/// Family-wise error rate `pr(count >= 1)`.
pub fn fwer(dist: &ErrorCountDistribution) -> f64 {
    (1.0 - dist.prob(0)).max(0.0)
}

/// False discovery rate when every null is true: every rejection is an
/// error, so the false-discovery proportion is the indicator of any error.
pub fn fdr_global_null(dist: &ErrorCountDistribution) -> f64 {
    fwer(dist)
}

/// Utility of an error count.
#[derive(Debug, Clone, PartialEq)]
pub enum UtilityFunction {
    /// `u(c) = -c`
    LinearErrorCount,
    /// `u(c) = -c²`
    QuadraticErrorCount,
    /// `u(c) = table[c]`
    Tabulated(Vec<f64>),
}

impl UtilityFunction {
    pub fn evaluate(&self, count: usize) -> Result<f64> {
        match self {
            Self::LinearErrorCount => Ok(-(count as f64)),
            Self::QuadraticErrorCount => Ok(-((count * count) as f64)),
            Self::Tabulated(values) => values.get(count).copied().map(Ok).unwrap_or_else(|| {
                domain(format!(
                    "tabulated utility has no value for error count {count}"
                ))
            }),
        }
    }
}

pub fn expected_utility(dist: &ErrorCountDistribution, utility: &UtilityFunction) -> Result<f64> {
    let mut total = 0.0;
    for (count, p) in dist.probabilities().iter().enumerate() {
        total += utility.evaluate(count)? * p;
    }
    Ok(total)
}

/// Correlation `k / 2n` between the two-sample z-statistics of two size-`n`
/// treatment arms compared against control subsets sharing `k` units.
pub fn shared_control_correlation(n: u64, k: u64) -> Result<f64> {
    if n == 0 {
        return domain("arm size must be positive");
    }
    if k > n {
        return domain(format!("control overlap {k} exceeds the arm size {n}"));
    }
    Ok(k as f64 / (2 * n) as f64)
}
