use reuse_risk::capacity::{
    capacity_table, guaranteed_overlap_two, min_k_for_overlap_fraction, pigeonhole_capacity, CapacityQuery,
    TailMethod,
};
use reuse_risk::dist::Hypergeometric;
use reuse_risk::report::{fmt_f64, Report, Table};
use reuse_risk::Result;

use crate::params::{command_params, Fields};

command_params! {
    /// How many k-subsamples a dataset supports before large overlaps become likely.
    Args {
        /// Dataset size N
        n,
        /// Subsample size k
        k,
        /// Comma-separated overlap thresholds
        ell,
        /// Tolerated probability of any pairwise overlap >= ell [default: 0.05]
        p_tol,
        /// hoeffding or exact_tail [default: hoeffding]
        method,
        /// Overlap fraction; reports the smallest k that forces it for two draws
        lambda,
        /// Also emit the overlap distribution of two k-subsamples [default: false]
        overlap_pmf,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub n: u64,
    pub k: u64,
    pub ells: Vec<u64>,
    pub p_tol: f64,
    pub method: TailMethod,
    pub lambda: Option<f64>,
    pub overlap_pmf: bool,
}

pub fn build(f: &mut Fields) -> Config {
    Config {
        n: f.req("n"),
        k: f.req("k"),
        ells: f.req_list("ell"),
        p_tol: f.or("p-tol", 0.05),
        method: f.choice(
            "method",
            &[("hoeffding", TailMethod::Hoeffding), ("exact_tail", TailMethod::ExactTail)],
            TailMethod::Hoeffding,
        ),
        lambda: f.opt("lambda"),
        overlap_pmf: f.or("overlap-pmf", false),
    }
}

pub fn execute(cfg: &Config) -> Result<Report> {
    let base = CapacityQuery::new(cfg.n, cfg.k, 0, cfg.p_tol)?;
    let mut report = Report::new()
        .with_header("command", "capacity")
        .with_header("n", cfg.n)
        .with_header("k", cfg.k)
        .with_header("p_tol", fmt_f64(cfg.p_tol))
        .with_header("method", cfg.method.as_str())
        .with_header("guaranteed_overlap_two", guaranteed_overlap_two(cfg.n, cfg.k)?);
    let pigeon = pigeonhole_capacity(cfg.n, cfg.k)?;
    match pigeon.exact {
        Some(c) => report.push_header("pigeonhole_draws", c),
        None => report.push_header("pigeonhole_ln_draws", fmt_f64(pigeon.ln_binomial)),
    }
    if let Some(lambda) = cfg.lambda {
        report.push_header("min_k_for_lambda", min_k_for_overlap_fraction(cfg.n, lambda)?);
    }

    let mut rows = Table::new("capacity", ["ell_over_k", "ell", "c_bound"]);
    let mut detail = Table::new(
        "capacity_detail",
        ["ell", "ln_bound", "pairwise_tail", "ln_pairwise_tail", "r1", "r2", "note"],
    );
    for row in capacity_table(&base, &cfg.ells, cfg.method) {
        let ell = row.ell.to_string();
        match row.result {
            Ok(r) => {
                let c = match r.c_bound {
                    Some(c) => c.to_string(),
                    None => fmt_f64(r.c_bound_f64()),
                };
                rows.push([fmt_f64(row.ratio), ell.clone(), c]);
                detail.push([
                    ell,
                    fmt_f64(r.ln_bound),
                    fmt_f64(r.pairwise_tail),
                    fmt_f64(r.ln_pairwise_tail),
                    fmt_f64(r.r1),
                    fmt_f64(r.r2),
                    String::new(),
                ]);
            }
            Err(e) => {
                rows.push([fmt_f64(row.ratio), ell.clone(), "NA".to_string()]);
                let na = || "NA".to_string();
                detail.push([ell, na(), na(), na(), na(), na(), e.to_string()]);
            }
        }
    }
    report.push_table(rows);
    report.push_table(detail);

    if cfg.overlap_pmf {
        let h = Hypergeometric::new(cfg.n, cfg.k, cfg.k)?;
        let (lo, hi) = h.support();
        let mut t = Table::new("overlap_pmf", ["overlap", "pmf", "tail"]);
        for x in lo..=hi {
            t.push([x.to_string(), fmt_f64(h.pmf(x as i64)), fmt_f64(h.tail(x as i64))]);
        }
        report.push_table(t);
    }
    Ok(report)
}
