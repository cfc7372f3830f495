use reuse_risk::capacity::unit_reuse;
use reuse_risk::dist::poisson_pmf;
use reuse_risk::report::{fmt_f64, Report, Table};
use reuse_risk::Result;

use crate::params::{command_params, Fields};

command_params! {
    /// How often one unit is reused when studies include it independently.
    Args {
        /// Comma-separated inclusion rates, one per study
        rates,
        /// Common inclusion rate, used with studies
        rate,
        /// Number of studies sharing rate
        studies,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub rates: Vec<f64>,
}

pub fn build(f: &mut Fields) -> Config {
    if f.has("rates") {
        f.forbid(&["rate", "studies"], "an explicit rates list");
        return Config {
            rates: f.list("rates").unwrap_or_default(),
        };
    }
    if !f.has("rate") && !f.has("studies") {
        f.error("give `rates`, or `rate` and `studies`");
        return Config { rates: Vec::new() };
    }
    let rate: f64 = f.req("rate");
    let studies: usize = f.req("studies");
    Config {
        rates: vec![rate; studies],
    }
}

pub fn execute(cfg: &Config) -> Result<Report> {
    let r = unit_reuse(&cfg.rates)?;
    let mut report = Report::new()
        .with_header("command", "reuse")
        .with_header("studies", cfg.rates.len())
        .with_header("lambda", fmt_f64(r.poisson_lambda))
        .with_header("pr_ge2_exact", fmt_f64(r.pr_ge2_exact))
        .with_header("pr_ge2_poisson", fmt_f64(r.pr_ge2_poisson))
        .with_header("sup_cdf_distance", fmt_f64(r.sup_cdf_distance));
    report.push_header("lecam_bound", r.lecam_bound.map_or("NA".to_string(), fmt_f64));
    let mut t = Table::new("pmf", ["uses", "exact", "poisson"]);
    for (x, p) in r.exact_pmf.iter() {
        t.push([x.to_string(), fmt_f64(p), fmt_f64(poisson_pmf(r.poisson_lambda, x as u64)?)]);
    }
    report.push_table(t);
    Ok(report)
}
