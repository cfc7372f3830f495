use reuse_risk::report::{fmt_f64, Report, Table};
use reuse_risk::subsample::{allocate, empirical_max_overlap, overlap_matrix, Strategy};
use reuse_risk::Result;

use crate::params::{command_params, Fields};

command_params! {
    /// Seeded subsample allocation with an overlap audit.
    Args {
        /// Dataset size
        n,
        /// Comma-separated subsample sizes, one per study
        sizes,
        /// independent_uniform or disjoint_partition [default: independent_uniform]
        strategy,
        /// Overlap threshold for the Monte Carlo audit
        audit_ell,
        /// Trials for the Monte Carlo audit; needs equal sizes [default: 1000]
        audit_trials,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub n: usize,
    pub sizes: Vec<usize>,
    pub strategy: Strategy,
    pub audit: Option<(usize, usize)>,
}

pub fn build(f: &mut Fields) -> Config {
    let n = f.req("n");
    let sizes: Vec<usize> = f.req_list("sizes");
    let strategy = f.choice(
        "strategy",
        &[
            ("independent_uniform", Strategy::IndependentUniform),
            ("disjoint_partition", Strategy::DisjointPartition),
        ],
        Strategy::IndependentUniform,
    );
    let audit = match f.opt::<usize>("audit-ell") {
        Some(ell) => {
            if sizes.windows(2).any(|w| w[0] != w[1]) {
                f.error("the overlap audit needs equal `sizes`");
            }
            Some((ell, f.or("audit-trials", 1000)))
        }
        None => {
            f.forbid(&["audit-trials"], "subsample without audit-ell");
            None
        }
    };
    Config {
        n,
        sizes,
        strategy,
        audit,
    }
}

pub fn execute(cfg: &Config, seed: u64) -> Result<Report> {
    let alloc = allocate(cfg.n, &cfg.sizes, cfg.strategy, seed)?;
    let mut report = Report::new()
        .with_header("command", "subsample")
        .with_header("seed", seed)
        .with_header("n", cfg.n)
        .with_header("strategy", cfg.strategy.as_str());
    if let Some((ell, trials)) = cfg.audit {
        let k = cfg.sizes.first().copied().unwrap_or(0);
        let p = empirical_max_overlap(cfg.n, k, cfg.sizes.len(), ell, trials, seed)?;
        report.push_header("audit_ell", ell);
        report.push_header("audit_trials", trials);
        report.push_header("empirical_max_overlap", fmt_f64(p));
    }
    let mut draws = Table::new("draws", ["draw_id", "k", "indices"]);
    for (i, d) in alloc.draws.iter().enumerate() {
        let idx: Vec<String> = d.iter().map(usize::to_string).collect();
        draws.push([i.to_string(), d.len().to_string(), idx.join(",")]);
    }
    let mut overlap = Table::new("overlap", ["a", "b", "overlap"]);
    let m = overlap_matrix(&alloc);
    for i in 0..m.len() {
        for j in i + 1..m.len() {
            overlap.push([i.to_string(), j.to_string(), m[i][j].to_string()]);
        }
    }
    report.push_table(draws);
    report.push_table(overlap);
    Ok(report)
}
