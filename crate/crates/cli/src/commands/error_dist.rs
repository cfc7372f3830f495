use reuse_risk::dist::bernoulli_sum_pmf;
use reuse_risk::error_calculus::{
    expected_utility, fdr_global_null, fwer, pcer, shared_control_correlation, two_event_distribution,
    DependentEventPair, ErrorCountDistribution, UtilityFunction,
};
use reuse_risk::report::{fmt_f64, Report, Table};
use reuse_risk::Result;

use crate::params::{command_params, Fields};

command_params! {
    /// Two-study error-count distributions over a sweep of conditional error rates.
    Args {
        /// Common error rate of both studies [default: 0.05]
        alpha,
        /// Error rate of the first study (overrides alpha)
        p1,
        /// Error rate of the second study (overrides alpha)
        p2,
        /// Comma-separated pr(second error | first error) values [default: 0,0.25,0.5,0.75,1]
        p2g1,
        /// Error rates of independent studies; adds their exact error-count distribution
        rates,
        /// linear, quadratic or table [default: linear]
        utility,
        /// Utilities of 0, 1, 2, ... errors when utility = table
        utility_table,
        /// Arm size n for the shared-control correlation k/2n
        arm_size,
        /// Shared control units k for the shared-control correlation
        shared,
    }
}

pub const DEFAULT_P2G1: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 1.0];

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub p1: f64,
    pub p2: f64,
    pub p2g1: Vec<f64>,
    pub rates: Option<Vec<f64>>,
    pub utility: UtilityFunction,
    pub correlation: Option<(u64, u64)>,
}

pub fn utility(f: &mut Fields) -> UtilityFunction {
    #[derive(Clone, Copy)]
    enum Kind {
        Linear,
        Quadratic,
        Table,
    }
    let kind = f.choice(
        "utility",
        &[("linear", Kind::Linear), ("quadratic", Kind::Quadratic), ("table", Kind::Table)],
        Kind::Linear,
    );
    match kind {
        Kind::Linear => {
            f.forbid(&["utility-table"], "utility linear");
            UtilityFunction::LinearErrorCount
        }
        Kind::Quadratic => {
            f.forbid(&["utility-table"], "utility quadratic");
            UtilityFunction::QuadraticErrorCount
        }
        Kind::Table => UtilityFunction::Tabulated(f.req_list("utility-table")),
    }
}

pub fn build(f: &mut Fields) -> Config {
    let alpha = f.or("alpha", 0.05);
    let p1 = f.or("p1", alpha);
    let p2 = f.or("p2", alpha);
    let p2g1 = f.list_or("p2g1", &DEFAULT_P2G1);
    let rates = f.list("rates");
    let utility = utility(f);
    let arm: Option<u64> = f.opt("arm-size");
    let shared: Option<u64> = f.opt("shared");
    if f.has("arm-size") != f.has("shared") {
        f.error("`arm-size` and `shared` must be given together");
    }
    let correlation = arm.zip(shared);
    Config {
        p1,
        p2,
        p2g1,
        rates,
        utility,
        correlation,
    }
}

fn push_pmf(t: &mut Table, label: &str, dist: &ErrorCountDistribution) {
    for (x, p) in dist.probabilities().iter().enumerate() {
        t.push([label.to_string(), x.to_string(), fmt_f64(*p)]);
    }
}

fn push_metrics(t: &mut Table, label: &str, dist: &ErrorCountDistribution, u: &UtilityFunction) -> Result<()> {
    t.push([
        label.to_string(),
        fmt_f64(dist.mean()),
        fmt_f64(pcer(dist)?),
        fmt_f64(fwer(dist)),
        fmt_f64(fdr_global_null(dist)),
        fmt_f64(expected_utility(dist, u)?),
    ]);
    Ok(())
}

pub fn execute(cfg: &Config) -> Result<Report> {
    let mut report = Report::new()
        .with_header("command", "error-dist")
        .with_header("p1", fmt_f64(cfg.p1))
        .with_header("p2", fmt_f64(cfg.p2));
    if let Some((n, k)) = cfg.correlation {
        report.push_header("shared_control_correlation", fmt_f64(shared_control_correlation(n, k)?));
    }
    let mut pmf = Table::new("pmf", ["p2g1", "errors", "probability"]);
    let mut metrics = Table::new("metrics", ["p2g1", "mean", "pcer", "fwer", "fdr", "expected_utility"]);
    for &c in &cfg.p2g1 {
        let dist = two_event_distribution(&DependentEventPair::new(cfg.p1, cfg.p2, c)?);
        let label = fmt_f64(c);
        push_pmf(&mut pmf, &label, &dist);
        push_metrics(&mut metrics, &label, &dist, &cfg.utility)?;
    }
    report.push_table(pmf);
    report.push_table(metrics);

    if let Some(rates) = &cfg.rates {
        let dist = ErrorCountDistribution::from_pmf(bernoulli_sum_pmf(rates)?)?;
        let mut pmf = Table::new("independent_pmf", ["errors", "probability"]);
        for (x, p) in dist.probabilities().iter().enumerate() {
            pmf.push([x.to_string(), fmt_f64(*p)]);
        }
        let mut m = Table::new("independent_metrics", ["case", "mean", "pcer", "fwer", "fdr", "expected_utility"]);
        push_metrics(&mut m, "independent", &dist, &cfg.utility)?;
        report.push_table(pmf);
        report.push_table(m);
    }
    Ok(report)
}
