//! Expected utility of study portfolios and grid search over levels and data fractions.
//!
//! Each plan compares a treatment arm with a control arm drawn from a shared
//! control pool of `dataset_size` units. A plan's data fraction scales its
//! control arm only; the treatment arm is fixed.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dist::{bernoulli_sum_pmf, PMF_SUM_TOLERANCE};
use crate::error::{domain, Error, Result};
use crate::error_calculus::{expected_utility, ErrorCountDistribution, UtilityFunction};
use crate::power::{rejection_probability, SampleVector, TestKind, TestSpec};
use crate::report::{fmt_f64, Table};
use crate::seed::child_rng;
use crate::subsample::{allocate, Strategy};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    Reject,
    FailToReject,
}

/// Social utility of a decision when the true effect is `theta`.
pub fn qaly_utility(theta: f64, decision: Decision) -> f64 {
    match decision {
        Decision::Reject => theta,
        Decision::FailToReject => (-theta).min(0.0),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyPlan {
    pub test: TestSpec,
    /// Arm sizes at full data usage; `n1` is the control arm.
    pub available: SampleVector,
    pub data_fraction: f64,
    /// Discrete prior over the true effect: `(theta, probability)` pairs.
    pub prior: Vec<(f64, f64)>,
}

impl StudyPlan {
    pub fn new(test: TestSpec, available: SampleVector, data_fraction: f64, prior: Vec<(f64, f64)>) -> Result<Self> {
        let plan = Self { test, available, data_fraction, prior };
        plan.validate()?;
        Ok(plan)
    }

    /// Prior putting all mass on the test's design effect.
    pub fn point_alternative(test: TestSpec, available: SampleVector) -> Result<Self> {
        Self::new(test, available, 1.0, vec![(test.delta(), 1.0)])
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.data_fraction > 0.0 && self.data_fraction <= 1.0) {
            return domain(format!("data fraction must lie in (0, 1], got {}", self.data_fraction));
        }
        if self.prior.is_empty() {
            return domain("prior needs at least one support point");
        }
        let mut total = 0.0;
        for &(theta, p) in &self.prior {
            if !theta.is_finite() || !(p >= 0.0) {
                return domain(format!("invalid prior point ({theta}, {p})"));
            }
            total += p;
        }
        if (total - 1.0).abs() > PMF_SUM_TOLERANCE {
            return domain(format!("prior probabilities sum to {total}, not 1"));
        }
        Ok(())
    }

    /// Whether `theta` lies in the null: `theta = 0` two-sided, `theta <= 0` one-sided.
    pub fn is_null(&self, theta: f64) -> bool {
        if self.test.two_sided() {
            theta == 0.0
        } else {
            theta <= 0.0
        }
    }

    /// Arm sizes after applying the data fraction to the control arm.
    pub fn achieved(&self) -> SampleVector {
        let n1 = (self.data_fraction * self.available.n1 as f64 + 1e-9).floor() as u64;
        SampleVector::new(n1, self.available.n2)
    }

    pub fn with_choice(&self, alpha: f64, data_fraction: f64) -> Result<Self> {
        Self::new(self.test.with_alpha(alpha)?, self.available, data_fraction, self.prior.clone())
    }

    /// Probability that the plan's decision is an error, averaged over the prior.
    pub fn error_probability(&self) -> Result<f64> {
        let n = self.achieved();
        let mut e = 0.0;
        for &(theta, p) in &self.prior {
            let reject = rejection_probability(&self.test, n, theta)?;
            e += p * if self.is_null(theta) { reject } else { 1.0 - reject };
        }
        Ok(e)
    }

    pub fn expected_qaly(&self) -> Result<f64> {
        let n = self.achieved();
        let mut u = 0.0;
        for &(theta, p) in &self.prior {
            let reject = rejection_probability(&self.test, n, theta)?;
            u += p * (reject * qaly_utility(theta, Decision::Reject)
                + (1.0 - reject) * qaly_utility(theta, Decision::FailToReject));
        }
        Ok(u)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PortfolioUtility {
    /// A utility of the portfolio's total error count.
    ErrorCount(UtilityFunction),
    /// Sum of per-plan [`qaly_utility`].
    Qaly,
    /// A positive multiple of another utility.
    Scaled(f64, Box<PortfolioUtility>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DependenceMode {
    /// Plans are treated as independent; exact evaluation.
    AnalyticIndependent,
    /// Seeded simulation in which control arms are drawn from one shared pool.
    MonteCarlo { reps: u64, seed: u64, allocation: Strategy },
}

#[derive(Debug, Clone, PartialEq)]
pub struct PortfolioConfig {
    pub plans: Vec<StudyPlan>,
    /// Size of the shared control pool.
    pub dataset_size: u64,
    pub utility: PortfolioUtility,
    pub dependence_mode: DependenceMode,
}

impl PortfolioConfig {
    /// Every control arm must fit in the pool; disjoint allocation needs the
    /// arms to fit side by side.
    pub fn check_feasible(&self) -> Result<()> {
        let n = self.dataset_size;
        let mut total = 0;
        for (i, plan) in self.plans.iter().enumerate() {
            plan.validate()?;
            let k = plan.achieved().n1;
            if k > n {
                return Err(Error::Capacity(format!(
                    "plan {} needs {k} control units but the dataset has {n}",
                    i + 1
                )));
            }
            total += k;
        }
        if let DependenceMode::MonteCarlo { allocation: Strategy::DisjointPartition, .. } = self.dependence_mode {
            if total > n {
                return Err(Error::Capacity(format!(
                    "disjoint control arms need {total} units but the dataset has {n}"
                )));
            }
        }
        Ok(())
    }
}

fn scale_of(utility: &PortfolioUtility) -> Result<(f64, &PortfolioUtility)> {
    let mut scale = 1.0;
    let mut u = utility;
    while let PortfolioUtility::Scaled(c, inner) = u {
        if !(*c > 0.0 && c.is_finite()) {
            return domain(format!("utility scale must be positive, got {c}"));
        }
        scale *= c;
        u = inner;
    }
    Ok((scale, u))
}

/// Estimate with its Monte Carlo standard error (zero for exact evaluation).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UtilityEstimate {
    pub value: f64,
    pub stderr: f64,
}

pub fn expected_portfolio_utility(cfg: &PortfolioConfig) -> Result<f64> {
    Ok(evaluate(cfg)?.value)
}

pub fn evaluate(cfg: &PortfolioConfig) -> Result<UtilityEstimate> {
    cfg.check_feasible()?;
    let (scale, base) = scale_of(&cfg.utility)?;
    let est = match cfg.dependence_mode {
        DependenceMode::AnalyticIndependent => UtilityEstimate {
            value: analytic(&cfg.plans, base)?,
            stderr: 0.0,
        },
        DependenceMode::MonteCarlo { reps, seed, allocation } => {
            monte_carlo(cfg, base, reps, seed, allocation)?
        }
    };
    Ok(UtilityEstimate {
        value: scale * est.value,
        stderr: scale * est.stderr,
    })
}

fn analytic(plans: &[StudyPlan], utility: &PortfolioUtility) -> Result<f64> {
    match utility {
        PortfolioUtility::Qaly => plans.iter().map(StudyPlan::expected_qaly).sum(),
        PortfolioUtility::ErrorCount(u) => {
            let rates = plans.iter().map(StudyPlan::error_probability).collect::<Result<Vec<_>>>()?;
            let dist = ErrorCountDistribution::from_pmf(bernoulli_sum_pmf(&rates)?)?;
            expected_utility(&dist, u)
        }
        PortfolioUtility::Scaled(..) => unreachable!("scales are stripped before evaluation"),
    }
}

fn draw_theta<R: Rng + ?Sized>(prior: &[(f64, f64)], rng: &mut R) -> f64 {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for &(theta, p) in prior {
        acc += p;
        if u < acc {
            return theta;
        }
    }
    prior.last().expect("nonempty prior").0
}

fn mean_ss(xs: &[f64]) -> (f64, f64) {
    let mean = xs.iter().sum::<f64>() / xs.len() as f64;
    (mean, xs.iter().map(|x| (x - mean).powi(2)).sum())
}

fn statistic(test: &TestSpec, control: &[f64], treatment: &[f64]) -> f64 {
    let (n1, n2) = (control.len() as f64, treatment.len() as f64);
    let (m1, ss1) = mean_ss(control);
    let (m2, ss2) = mean_ss(treatment);
    let scale = match test.kind() {
        TestKind::ZKnownVariance => test.sigma(),
        TestKind::TPooled => ((ss1 + ss2) / (n1 + n2 - 2.0)).sqrt(),
    };
    (m2 - m1) / (scale * (1.0 / n1 + 1.0 / n2).sqrt())
}

fn monte_carlo(
    cfg: &PortfolioConfig,
    utility: &PortfolioUtility,
    reps: u64,
    seed: u64,
    allocation: Strategy,
) -> Result<UtilityEstimate> {
    if reps == 0 {
        return domain("replications must be ≥ 1");
    }
    let n = cfg.dataset_size as usize;
    let sizes: Vec<usize> = cfg.plans.iter().map(|p| p.achieved().n1 as usize).collect();
    let crits = cfg
        .plans
        .iter()
        .map(|p| p.test.critical_value(p.achieved()))
        .collect::<Result<Vec<_>>>()?;
    let values = (0..reps)
        .into_par_iter()
        .map(|r| -> Result<f64> {
            let mut rng = child_rng(seed, r);
            let pool: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
            let alloc = allocate(n, &sizes, allocation, rng.random())?;
            let (mut errors, mut qaly) = (0usize, 0.0);
            for ((plan, draw), &crit) in cfg.plans.iter().zip(&alloc.draws).zip(&crits) {
                let sigma = plan.test.sigma();
                let theta = draw_theta(&plan.prior, &mut rng);
                let control: Vec<f64> = draw.iter().map(|&j| sigma * pool[j]).collect();
                let treatment: Vec<f64> = (0..plan.available.n2)
                    .map(|_| theta + sigma * rng.sample::<f64, _>(StandardNormal))
                    .collect();
                let z = statistic(&plan.test, &control, &treatment);
                let reject = if plan.test.two_sided() { z.abs() > crit } else { z > crit };
                errors += usize::from(reject == plan.is_null(theta));
                let decision = if reject { Decision::Reject } else { Decision::FailToReject };
                qaly += qaly_utility(theta, decision);
            }
            match utility {
                PortfolioUtility::ErrorCount(u) => u.evaluate(errors),
                PortfolioUtility::Qaly => Ok(qaly),
                PortfolioUtility::Scaled(..) => unreachable!("scales are stripped before evaluation"),
            }
        })
        .collect::<Result<Vec<f64>>>()?;
    let (mean, ss) = mean_ss(&values);
    let var = if values.len() > 1 { ss / (values.len() - 1) as f64 } else { 0.0 };
    Ok(UtilityEstimate {
        value: mean,
        stderr: (var / values.len() as f64).sqrt(),
    })
}

/// One evaluated grid point: per-plan `(alpha, data_fraction)` and its utility.
#[derive(Debug, Clone, PartialEq)]
pub struct GridPoint {
    pub index: Vec<usize>,
    pub choice: Vec<(f64, f64)>,
    pub utility: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridSearchResult {
    pub best: GridPoint,
    pub best_config: PortfolioConfig,
    /// Every feasible point, in lexicographic grid-index order.
    pub surface: Vec<GridPoint>,
    /// Grid points skipped as infeasible.
    pub skipped: usize,
}

impl GridSearchResult {
    /// Columns `alpha_i, fraction_i` per plan, then `utility`.
    pub fn surface_table(&self) -> Table {
        let plans = self.best.choice.len();
        let mut cols = Vec::with_capacity(2 * plans + 1);
        for i in 1..=plans {
            cols.push(format!("alpha_{i}"));
            cols.push(format!("fraction_{i}"));
        }
        cols.push("utility".into());
        let mut t = Table::new("surface", cols);
        for p in &self.surface {
            let mut row = Vec::with_capacity(2 * plans + 1);
            for &(a, r) in &p.choice {
                row.push(fmt_f64(a));
                row.push(fmt_f64(r));
            }
            row.push(fmt_f64(p.utility));
            t.push(row);
        }
        t
    }
}

/// Evaluates the cartesian product of per-plan candidate lists.
pub fn grid_search(cfg: &PortfolioConfig, grid: &[Vec<(f64, f64)>]) -> Result<GridSearchResult> {
    if grid.len() != cfg.plans.len() {
        return domain(format!("grid has {} axes for {} plans", grid.len(), cfg.plans.len()));
    }
    if grid.iter().any(Vec::is_empty) {
        return domain("every plan needs at least one grid candidate");
    }
    let mut indices = vec![Vec::new()];
    for axis in grid {
        indices = indices
            .into_iter()
            .flat_map(|prefix: Vec<usize>| {
                (0..axis.len()).map(move |j| {
                    let mut v = prefix.clone();
                    v.push(j);
                    v
                })
            })
            .collect();
    }
    let points: Vec<Vec<(f64, f64)>> = indices
        .iter()
        .map(|idx| idx.iter().zip(grid).map(|(&j, axis)| axis[j]).collect())
        .collect();
    search_points(cfg, indices, points)
}

/// Evaluates an explicit list of joint choices; ties go to the earliest.
pub fn grid_search_points(cfg: &PortfolioConfig, points: &[Vec<(f64, f64)>]) -> Result<GridSearchResult> {
    if points.is_empty() {
        return domain("grid must contain at least one point");
    }
    if let Some(p) = points.iter().find(|p| p.len() != cfg.plans.len()) {
        return domain(format!("grid point has {} choices for {} plans", p.len(), cfg.plans.len()));
    }
    let indices = (0..points.len()).map(|i| vec![i]).collect();
    search_points(cfg, indices, points.to_vec())
}

fn configure(cfg: &PortfolioConfig, choice: &[(f64, f64)]) -> Result<PortfolioConfig> {
    let plans = cfg
        .plans
        .iter()
        .zip(choice)
        .map(|(plan, &(alpha, r))| plan.with_choice(alpha, r))
        .collect::<Result<Vec<_>>>()?;
    Ok(PortfolioConfig { plans, ..cfg.clone() })
}

fn search_points(
    cfg: &PortfolioConfig,
    indices: Vec<Vec<usize>>,
    points: Vec<Vec<(f64, f64)>>,
) -> Result<GridSearchResult> {
    let outcomes: Vec<Result<f64>> = points
        .par_iter()
        .map(|choice| expected_portfolio_utility(&configure(cfg, choice)?))
        .collect();
    let mut surface = Vec::new();
    let mut skipped = 0;
    for ((index, choice), outcome) in indices.into_iter().zip(points).zip(outcomes) {
        match outcome {
            Ok(utility) => surface.push(GridPoint { index, choice, utility }),
            Err(Error::Capacity(_)) => skipped += 1,
            Err(e) => return Err(e),
        }
    }
    let mut best: Option<&GridPoint> = None;
    for p in &surface {
        if best.is_none_or(|b| p.utility > b.utility) {
            best = Some(p);
        }
    }
    let best = best
        .cloned()
        .ok_or_else(|| Error::Capacity(format!("all {skipped} grid points are infeasible")))?;
    let best_config = configure(cfg, &best.choice)?;
    Ok(GridSearchResult { best, best_config, surface, skipped })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_study_portfolio(fraction: f64) -> PortfolioConfig {
        let test = TestSpec::t_test(0.05, 0.5).unwrap();
        let plan = StudyPlan::new(test, SampleVector::new(100, 50), fraction, vec![(0.5, 1.0)]).unwrap();
        PortfolioConfig {
            plans: vec![plan.clone(), plan],
            dataset_size: 100,
            utility: PortfolioUtility::ErrorCount(UtilityFunction::LinearErrorCount),
            dependence_mode: DependenceMode::AnalyticIndependent,
        }
    }

    #[test]
    fn qaly_cases() {
        assert_eq!(qaly_utility(0.3, Decision::Reject), 0.3);
        assert_eq!(qaly_utility(-0.2, Decision::Reject), -0.2);
        assert_eq!(qaly_utility(0.3, Decision::FailToReject), -0.3);
        assert_eq!(qaly_utility(-0.2, Decision::FailToReject), 0.0);
        assert_eq!(qaly_utility(0.0, Decision::Reject), 0.0);
        assert_eq!(qaly_utility(0.0, Decision::FailToReject), 0.0);
    }

    #[test]
    fn full_data_beats_split() {
        let glut = expected_portfolio_utility(&two_study_portfolio(1.0)).unwrap();
        let split = expected_portfolio_utility(&two_study_portfolio(0.5)).unwrap();
        assert!((glut + 0.364).abs() < 0.01, "{glut}");
        assert!((split + 0.606).abs() < 0.01, "{split}");
    }

    #[test]
    fn global_null_costs_alpha_per_plan() {
        let test = TestSpec::z_test(0.05, 1.0).unwrap();
        let plan = StudyPlan::new(test, SampleVector::new(30, 30), 1.0, vec![(0.0, 1.0)]).unwrap();
        let cfg = PortfolioConfig {
            plans: vec![plan; 4],
            dataset_size: 30,
            utility: PortfolioUtility::ErrorCount(UtilityFunction::LinearErrorCount),
            dependence_mode: DependenceMode::AnalyticIndependent,
        };
        assert!((expected_portfolio_utility(&cfg).unwrap() + 0.2).abs() < 1e-12);
    }

    #[test]
    fn empty_portfolio_is_zero() {
        let mut cfg = two_study_portfolio(1.0);
        cfg.plans.clear();
        assert_eq!(expected_portfolio_utility(&cfg).unwrap(), 0.0);
        cfg.utility = PortfolioUtility::Qaly;
        assert_eq!(expected_portfolio_utility(&cfg).unwrap(), 0.0);
    }

    #[test]
    fn plan_validation() {
        let test = TestSpec::t_test(0.05, 0.5).unwrap();
        let n = SampleVector::new(10, 10);
        assert!(StudyPlan::new(test, n, 0.0, vec![(0.0, 1.0)]).is_err());
        assert!(StudyPlan::new(test, n, 1.1, vec![(0.0, 1.0)]).is_err());
        assert!(StudyPlan::new(test, n, 1.0, vec![(0.0, 0.5)]).is_err());
        assert!(StudyPlan::new(test, n, 1.0, vec![]).is_err());
    }

    #[test]
    fn infeasible_configs() {
        let mut cfg = two_study_portfolio(1.0);
        cfg.dataset_size = 99;
        assert!(matches!(expected_portfolio_utility(&cfg), Err(Error::Capacity(_))));
        let mut cfg = two_study_portfolio(1.0);
        cfg.dependence_mode = DependenceMode::MonteCarlo {
            reps: 10,
            seed: 1,
            allocation: Strategy::DisjointPartition,
        };
        assert!(matches!(expected_portfolio_utility(&cfg), Err(Error::Capacity(_))));
    }

    #[test]
    fn grid_prefers_gluttony() {
        let cfg = two_study_portfolio(1.0);
        let menu = vec![vec![(0.05, 1.0), (0.05, 1.0)], vec![(0.05, 0.5), (0.05, 0.5)]];
        let res = grid_search_points(&cfg, &menu).unwrap();
        assert_eq!(res.best.index, vec![0]);
        assert_eq!(res.surface.len(), 2);
        let res = grid_search(&cfg, &[vec![(0.05, 0.5), (0.05, 1.0)], vec![(0.05, 0.5), (0.05, 1.0)]]).unwrap();
        assert_eq!(res.best.index, vec![1, 1]);
        assert_eq!(res.surface.len(), 4);
        let t = res.surface_table();
        assert_eq!(t.columns, ["alpha_1", "fraction_1", "alpha_2", "fraction_2", "utility"]);
    }

    #[test]
    fn ties_take_the_first_index() {
        let cfg = two_study_portfolio(1.0);
        let res = grid_search(&cfg, &[vec![(0.05, 1.0); 3], vec![(0.05, 1.0); 2]]).unwrap();
        assert_eq!(res.best.index, vec![0, 0]);
    }

    #[test]
    fn all_infeasible_is_an_error() {
        let mut cfg = two_study_portfolio(1.0);
        cfg.dependence_mode = DependenceMode::MonteCarlo {
            reps: 10,
            seed: 1,
            allocation: Strategy::DisjointPartition,
        };
        assert!(grid_search(&cfg, &[vec![(0.05, 1.0)], vec![(0.05, 0.9)]]).is_err());
        let res = grid_search(&cfg, &[vec![(0.05, 1.0), (0.05, 0.5)], vec![(0.05, 0.5)]]).unwrap();
        assert_eq!(res.skipped, 1);
        assert_eq!(res.best.index, vec![1, 0]);
    }
}
