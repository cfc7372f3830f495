//! Seeded Monte Carlo replication of dependent-testing designs.
//!
//! Replication `r` draws from `child_rng(master_seed, r)`. Replications run
//! in parallel, are collected in index order and aggregated sequentially, so
//! a report is bit-identical for any number of worker threads.

mod logrank;
mod shared_control;
mod survival;

pub use logrank::{logrank_statistic, Subject};
pub use shared_control::{run_shared_control, ControlMode, SharedControlDesign};
pub use survival::{
    run_survival_reuse, weibull_from_uniform, weibull_ph_for_mean, weibull_sample, weibull_scale_for_mean,
    SurvivalMode, SurvivalReuseDesign,
};

use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{domain, Result};
use crate::error_calculus::{stop_loss_curve, DependentEventPair, ErrorCountDistribution, StopLossCurve};
use crate::report::{fmt_f64, Report, Table};
use crate::seed::child_rng;

/// Outcome of one replication: a rejection flag and a statistic per test.
/// A statistic is `None` when the test could not be computed.
#[derive(Debug, Clone)]
pub(crate) struct Replicate {
    pub rejected: Vec<bool>,
    pub stats: Vec<Option<f64>>,
}

/// 2×2 rejection table for the first two tests.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Contingency {
    pub neither: u64,
    pub first_only: u64,
    pub second_only: u64,
    pub both: u64,
}

impl Contingency {
    pub fn total(&self) -> u64 {
        self.neither + self.first_only + self.second_only + self.both
    }

    /// Empirical `pr(second rejected | first rejected)`; `None` if the first never rejected.
    pub fn second_given_first(&self) -> Option<f64> {
        let first = self.first_only + self.both;
        (first > 0).then(|| self.both as f64 / first as f64)
    }

    /// Empirical event pair `(p1, p2, p2|1)`.
    pub fn event_pair(&self) -> Result<DependentEventPair> {
        let total = self.total() as f64;
        let p1 = (self.first_only + self.both) as f64 / total;
        let p2 = (self.second_only + self.both) as f64 / total;
        DependentEventPair::new(p1, p2, self.second_given_first().unwrap_or(0.0))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationReport {
    pub empirical_error_pmf: ErrorCountDistribution,
    /// Replications with exactly `x` rejections, indexed by `x`.
    pub error_counts: Vec<u64>,
    pub per_test_rejection_freq: Vec<f64>,
    pub pairwise_stat_correlation: Vec<Vec<f64>>,
    pub stop_loss_curve: StopLossCurve,
    /// Monte Carlo standard error of each stop-loss premium.
    pub stop_loss_stderr: Vec<f64>,
    pub contingency: Option<Contingency>,
    /// Replications in which each statistic could not be computed.
    pub no_test_counts: Vec<u64>,
    pub rep_count: u64,
    pub master_seed: u64,
}

impl SimulationReport {
    pub fn tests(&self) -> usize {
        self.per_test_rejection_freq.len()
    }

    pub fn to_report(&self) -> Report {
        let mut r = Report::new()
            .with_header("replications", self.rep_count)
            .with_header("master_seed", self.master_seed)
            .with_header("tests", self.tests());

        let mut pmf = Table::new("error_count_pmf", ["count", "n", "frequency"]);
        for (x, (&n, &f)) in self
            .error_counts
            .iter()
            .zip(self.empirical_error_pmf.probabilities())
            .enumerate()
        {
            pmf.push([x.to_string(), n.to_string(), fmt_f64(f)]);
        }
        r.push_table(pmf);

        let mut rej = Table::new("rejection", ["test", "frequency", "no_test"]);
        for (i, (&f, &nt)) in self.per_test_rejection_freq.iter().zip(&self.no_test_counts).enumerate() {
            rej.push([(i + 1).to_string(), fmt_f64(f), nt.to_string()]);
        }
        r.push_table(rej);

        let m = self.tests();
        let mut corr = Table::new("correlation", std::iter::once("test".to_string()).chain((1..=m).map(|j| format!("t{j}"))));
        for (i, row) in self.pairwise_stat_correlation.iter().enumerate() {
            corr.push(std::iter::once((i + 1).to_string()).chain(row.iter().map(|&c| fmt_f64(c))));
        }
        r.push_table(corr);

        let mut sl = Table::new("stop_loss", ["L", "premium", "stderr"]);
        for (l, (&p, &se)) in self.stop_loss_curve.premiums().iter().zip(&self.stop_loss_stderr).enumerate() {
            sl.push([l.to_string(), fmt_f64(p), fmt_f64(se)]);
        }
        r.push_table(sl);

        if let Some(c) = self.contingency {
            let mut t = Table::new("contingency", ["cell", "n"]);
            t.push(["neither".to_string(), c.neither.to_string()]);
            t.push(["first_only".to_string(), c.first_only.to_string()]);
            t.push(["second_only".to_string(), c.second_only.to_string()]);
            t.push(["both".to_string(), c.both.to_string()]);
            r.push_table(t);
        }
        r
    }
}

pub(crate) fn check_replications(reps: u64) -> Result<()> {
    if reps == 0 {
        return domain("replications must be ≥ 1");
    }
    Ok(())
}

pub(crate) fn run_replications<F>(reps: u64, master_seed: u64, one: F) -> Vec<Replicate>
where
    F: Fn(&mut ChaCha8Rng) -> Replicate + Sync,
{
    (0..reps)
        .into_par_iter()
        .map(|r| one(&mut child_rng(master_seed, r)))
        .collect()
}

/// Pearson correlation over replications where both statistics exist.
fn correlation(reps: &[Replicate], i: usize, j: usize) -> f64 {
    let (mut n, mut sx, mut sy) = (0.0, 0.0, 0.0);
    for r in reps {
        if let (Some(x), Some(y)) = (r.stats[i], r.stats[j]) {
            n += 1.0;
            sx += x;
            sy += y;
        }
    }
    if n < 2.0 {
        return f64::NAN;
    }
    let (mx, my) = (sx / n, sy / n);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for r in reps {
        if let (Some(x), Some(y)) = (r.stats[i], r.stats[j]) {
            sxy += (x - mx) * (y - my);
            sxx += (x - mx) * (x - mx);
            syy += (y - my) * (y - my);
        }
    }
    if sxx == 0.0 || syy == 0.0 {
        return f64::NAN;
    }
    sxy / (sxx * syy).sqrt()
}

pub(crate) fn aggregate(reps: &[Replicate], tests: usize, master_seed: u64) -> SimulationReport {
    let total = reps.len() as u64;
    let mut error_counts = vec![0u64; tests + 1];
    let mut per_test = vec![0u64; tests];
    let mut no_test = vec![0u64; tests];
    let mut cont = Contingency { neither: 0, first_only: 0, second_only: 0, both: 0 };
    for r in reps {
        let x = r.rejected.iter().filter(|&&b| b).count();
        error_counts[x] += 1;
        for t in 0..tests {
            per_test[t] += u64::from(r.rejected[t]);
            no_test[t] += u64::from(r.stats[t].is_none());
        }
        if tests >= 2 {
            match (r.rejected[0], r.rejected[1]) {
                (false, false) => cont.neither += 1,
                (true, false) => cont.first_only += 1,
                (false, true) => cont.second_only += 1,
                (true, true) => cont.both += 1,
            }
        }
    }
    let pmf = ErrorCountDistribution::from_counts(&error_counts).expect("at least one replication");
    let curve = stop_loss_curve(&pmf);
    let stderr = (0..=tests)
        .map(|l| {
            let second: f64 = pmf
                .probabilities()
                .iter()
                .enumerate()
                .skip(l + 1)
                .map(|(x, p)| ((x - l) as f64).powi(2) * p)
                .sum();
            let var = (second - curve.at(l).powi(2)).max(0.0);
            (var / total as f64).sqrt()
        })
        .collect();
    let mut corr = vec![vec![1.0; tests]; tests];
    for i in 0..tests {
        for j in i + 1..tests {
            let c = correlation(reps, i, j);
            corr[i][j] = c;
            corr[j][i] = c;
        }
    }
    SimulationReport {
        empirical_error_pmf: pmf,
        error_counts,
        per_test_rejection_freq: per_test.iter().map(|&c| c as f64 / total as f64).collect(),
        pairwise_stat_correlation: corr,
        stop_loss_curve: curve,
        stop_loss_stderr: stderr,
        contingency: (tests == 2).then_some(cont),
        no_test_counts: no_test,
        rep_count: total,
        master_seed,
    }
}
