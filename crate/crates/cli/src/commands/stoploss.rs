use reuse_risk::error_calculus::{
    stop_loss_compare, stop_loss_curve, stop_loss_premium, two_event_distribution, DependentEventPair,
    ErrorCountDistribution, StopLossCurve,
};
use reuse_risk::report::{fmt_f64, Report, Table};
use reuse_risk::Result;

use super::error_dist::DEFAULT_P2G1;
use crate::params::{command_params, Fields};

command_params! {
    /// Stop-loss premium curves and their ordering.
    Args {
        /// Common error rate of both studies [default: 0.05]
        alpha,
        /// Error rate of the first study (overrides alpha)
        p1,
        /// Error rate of the second study (overrides alpha)
        p2,
        /// Comma-separated pr(second error | first error) values [default: 0,0.25,0.5,0.75,1]
        p2g1,
        /// Error-count pmf of a custom distribution A, starting at 0 errors
        pmf_a,
        /// Error-count pmf of a custom distribution B, starting at 0 errors
        pmf_b,
        /// Retention level whose premium is reported for A and B
        retention,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub p1: f64,
    pub p2: f64,
    pub p2g1: Vec<f64>,
    pub custom: Option<(Vec<f64>, Vec<f64>)>,
    pub retention: Option<i64>,
}

pub fn build(f: &mut Fields) -> Config {
    let alpha = f.or("alpha", 0.05);
    let p1 = f.or("p1", alpha);
    let p2 = f.or("p2", alpha);
    let p2g1 = f.list_or("p2g1", &DEFAULT_P2G1);
    let a = f.list("pmf-a");
    let b = f.list("pmf-b");
    if f.has("pmf-a") != f.has("pmf-b") {
        f.error("`pmf-a` and `pmf-b` must be given together");
    }
    let retention = f.opt::<u64>("retention").map(|r| r as i64);
    if retention.is_some() && !f.has("pmf-a") {
        f.error("`retention` needs `pmf-a` and `pmf-b`");
    }
    Config {
        p1,
        p2,
        p2g1,
        custom: a.zip(b),
        retention,
    }
}

pub fn execute(cfg: &Config) -> Result<Report> {
    let mut report = Report::new()
        .with_header("command", "stoploss")
        .with_header("p1", fmt_f64(cfg.p1))
        .with_header("p2", fmt_f64(cfg.p2));
    let mut curves: Vec<StopLossCurve> = Vec::with_capacity(cfg.p2g1.len());
    let mut table = Table::new("stop_loss", ["p2g1", "L", "premium"]);
    for &c in &cfg.p2g1 {
        let curve = stop_loss_curve(&two_event_distribution(&DependentEventPair::new(cfg.p1, cfg.p2, c)?));
        for (l, p) in curve.premiums().iter().enumerate() {
            table.push([fmt_f64(c), l.to_string(), fmt_f64(*p)]);
        }
        curves.push(curve);
    }
    let mut ordering = Table::new("ordering", ["a_p2g1", "b_p2g1", "ordering"]);
    for i in 0..curves.len() {
        for j in i + 1..curves.len() {
            ordering.push([
                fmt_f64(cfg.p2g1[i]),
                fmt_f64(cfg.p2g1[j]),
                stop_loss_compare(&curves[i], &curves[j]).as_str().to_string(),
            ]);
        }
    }
    report.push_table(table);
    report.push_table(ordering);

    if let Some((a, b)) = &cfg.custom {
        let da = ErrorCountDistribution::new(a.clone())?;
        let db = ErrorCountDistribution::new(b.clone())?;
        let (ca, cb) = (stop_loss_curve(&da), stop_loss_curve(&db));
        report.push_header("custom_ordering", stop_loss_compare(&ca, &cb).as_str());
        if let Some(r) = cfg.retention {
            report.push_header("premium_a", fmt_f64(stop_loss_premium(&da, r)?));
            report.push_header("premium_b", fmt_f64(stop_loss_premium(&db, r)?));
        }
        let mut t = Table::new("custom_stop_loss", ["L", "premium_a", "premium_b"]);
        for l in 0..ca.len().max(cb.len()) {
            t.push([l.to_string(), fmt_f64(ca.at(l)), fmt_f64(cb.at(l))]);
        }
        report.push_table(t);
    }
    Ok(report)
}
