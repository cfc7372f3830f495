use reuse_risk::portfolio::{
    evaluate, grid_search, grid_search_points, DependenceMode, PortfolioConfig, PortfolioUtility, StudyPlan,
};
use reuse_risk::power::SampleVector;
use reuse_risk::report::{fmt_f64, Report, Table};
use reuse_risk::subsample::Strategy;
use reuse_risk::Result;

use super::error_dist;
use super::power::TestParams;
use crate::params::{command_params, Fields};

command_params! {
    /// Grid search over per-study levels and data fractions for the best expected portfolio utility.
    Args {
        /// t or z [default: t]
        kind,
        /// Outcome standard deviation [default: 1]
        sigma,
        /// Two-sided tests [default: true]
        two_sided,
        /// Comma-separated effect sizes, one per study
        delta,
        /// Comma-separated control-arm sizes drawn from the shared dataset, one per study
        n1,
        /// Comma-separated treatment-arm sizes, one per study
        n2,
        /// Comma-separated prior probabilities that each study's effect is null [default: 0]
        prior_null,
        /// Size of the shared control dataset
        dataset_size,
        /// Candidate significance levels for every study [default: 0.05]
        alphas,
        /// Candidate data fractions for every study [default: 1]
        fractions,
        /// Explicit joint choices "a:r,a:r;a:r,a:r" (one a:r per study, points separated by ;)
        points,
        /// linear, quadratic, table or qaly [default: linear]
        utility,
        /// Utilities of 0, 1, 2, ... errors when utility = table
        utility_table,
        /// Positive multiplier applied to the utility [default: 1]
        utility_scale,
        /// analytic or monte_carlo [default: analytic]
        mode,
        /// monte_carlo: replications [default: 10000]
        reps,
        /// monte_carlo: independent_uniform or disjoint_partition [default: independent_uniform]
        allocation,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Grid {
    Product { alphas: Vec<f64>, fractions: Vec<f64> },
    Points(Vec<Vec<(f64, f64)>>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub test: TestParams,
    pub deltas: Vec<f64>,
    pub n1: Vec<u64>,
    pub n2: Vec<u64>,
    pub prior_null: Vec<f64>,
    pub dataset_size: u64,
    pub grid: Grid,
    pub utility: PortfolioUtility,
    pub monte_carlo: Option<(u64, Strategy)>,
}

fn parse_points(raw: &str, plans: usize) -> std::result::Result<Vec<Vec<(f64, f64)>>, String> {
    raw.split(';')
        .map(|point| {
            let choice = point
                .split(',')
                .map(|c| {
                    let (a, r) = c.split_once(':').ok_or_else(|| format!("{c:?} is not alpha:fraction"))?;
                    let a = a.trim().parse().map_err(|_| format!("{a:?} is not a number"))?;
                    let r = r.trim().parse().map_err(|_| format!("{r:?} is not a number"))?;
                    Ok((a, r))
                })
                .collect::<std::result::Result<Vec<_>, String>>()?;
            if choice.len() != plans {
                return Err(format!("point {point:?} has {} choices for {plans} studies", choice.len()));
            }
            Ok(choice)
        })
        .collect()
}

pub fn build(f: &mut Fields) -> Config {
    let test = TestParams::from_fields(f, None);
    let deltas: Vec<f64> = f.req_list("delta");
    let n1: Vec<u64> = f.req_list("n1");
    let n2: Vec<u64> = f.req_list("n2");
    let plans = deltas.len();
    let prior_null = f.list_or("prior-null", &vec![0.0; plans]);
    for (key, len) in [("n1", n1.len()), ("n2", n2.len()), ("prior-null", prior_null.len())] {
        if len != plans {
            f.error(format!("`{key}` has {len} entries but `delta` has {plans}"));
        }
    }
    let dataset_size = f.req("dataset-size");

    let grid = if f.has("points") {
        f.forbid(&["alphas", "fractions"], "an explicit points grid");
        let raw: String = f.opt("points").unwrap_or_default();
        match parse_points(&raw, plans) {
            Ok(p) => Grid::Points(p),
            Err(e) => {
                f.error(format!("invalid value for `points`: {e}"));
                Grid::Points(Vec::new())
            }
        }
    } else {
        Grid::Product {
            alphas: f.list_or("alphas", &[0.05]),
            fractions: f.list_or("fractions", &[1.0]),
        }
    };

    let base = if f.opt::<String>("utility").is_some_and(|u| u.trim() == "qaly") {
        f.forbid(&["utility-table"], "utility qaly");
        PortfolioUtility::Qaly
    } else {
        PortfolioUtility::ErrorCount(error_dist::utility(f))
    };
    let utility = match f.opt::<f64>("utility-scale") {
        Some(s) => PortfolioUtility::Scaled(s, Box::new(base)),
        None => base,
    };

    #[derive(Clone, Copy)]
    enum Mode {
        Analytic,
        MonteCarlo,
    }
    let mode = f.choice("mode", &[("analytic", Mode::Analytic), ("monte_carlo", Mode::MonteCarlo)], Mode::Analytic);
    let monte_carlo = match mode {
        Mode::Analytic => {
            f.forbid(&["reps", "allocation"], "mode analytic");
            None
        }
        Mode::MonteCarlo => Some((
            f.or("reps", 10_000),
            f.choice(
                "allocation",
                &[
                    ("independent_uniform", Strategy::IndependentUniform),
                    ("disjoint_partition", Strategy::DisjointPartition),
                ],
                Strategy::IndependentUniform,
            ),
        )),
    };
    Config {
        test,
        deltas,
        n1,
        n2,
        prior_null,
        dataset_size,
        grid,
        utility,
        monte_carlo,
    }
}

fn portfolio(cfg: &Config, seed: u64) -> Result<PortfolioConfig> {
    let mut plans = Vec::with_capacity(cfg.deltas.len());
    for i in 0..cfg.deltas.len() {
        let spec = cfg.test.spec(cfg.deltas[i])?;
        let p0 = cfg.prior_null[i];
        let prior: Vec<(f64, f64)> = [(0.0, p0), (cfg.deltas[i], 1.0 - p0)]
            .into_iter()
            .filter(|&(_, w)| w > 0.0)
            .collect();
        plans.push(StudyPlan::new(spec, SampleVector::new(cfg.n1[i], cfg.n2[i]), 1.0, prior)?);
    }
    Ok(PortfolioConfig {
        plans,
        dataset_size: cfg.dataset_size,
        utility: cfg.utility.clone(),
        dependence_mode: match cfg.monte_carlo {
            None => DependenceMode::AnalyticIndependent,
            Some((reps, allocation)) => DependenceMode::MonteCarlo { reps, seed, allocation },
        },
    })
}

fn utility_name(u: &PortfolioUtility) -> String {
    use reuse_risk::error_calculus::UtilityFunction as U;
    match u {
        PortfolioUtility::ErrorCount(U::LinearErrorCount) => "linear".into(),
        PortfolioUtility::ErrorCount(U::QuadraticErrorCount) => "quadratic".into(),
        PortfolioUtility::ErrorCount(U::Tabulated(_)) => "table".into(),
        PortfolioUtility::Qaly => "qaly".into(),
        PortfolioUtility::Scaled(s, inner) => format!("{}*{}", fmt_f64(*s), utility_name(inner)),
    }
}

pub fn execute(cfg: &Config, seed: u64) -> Result<Report> {
    let pc = portfolio(cfg, seed)?;
    let result = match &cfg.grid {
        Grid::Product { alphas, fractions } => {
            let axis: Vec<(f64, f64)> =
                alphas.iter().flat_map(|&a| fractions.iter().map(move |&r| (a, r))).collect();
            grid_search(&pc, &vec![axis; pc.plans.len()])?
        }
        Grid::Points(points) => grid_search_points(&pc, points)?,
    };
    let best = evaluate(&result.best_config)?;
    let mut report = Report::new()
        .with_header("command", "optimize")
        .with_header("mode", if cfg.monte_carlo.is_some() { "monte_carlo" } else { "analytic" })
        .with_header("utility", utility_name(&cfg.utility))
        .with_header("dataset_size", cfg.dataset_size)
        .with_header("best_utility", fmt_f64(result.best.utility))
        .with_header("best_stderr", fmt_f64(best.stderr))
        .with_header("skipped", result.skipped);
    if cfg.monte_carlo.is_some() {
        report.header.insert(1, ("seed".into(), seed.to_string()));
    }
    let mut t = Table::new("best", ["study", "alpha", "fraction", "n1", "n2", "error_probability"]);
    for (i, (plan, &(a, r))) in result.best_config.plans.iter().zip(&result.best.choice).enumerate() {
        let n = plan.achieved();
        t.push([
            (i + 1).to_string(),
            fmt_f64(a),
            fmt_f64(r),
            n.n1.to_string(),
            n.n2.to_string(),
            fmt_f64(plan.error_probability()?),
        ]);
    }
    report.push_table(t);
    report.push_table(result.surface_table());
    Ok(report)
}
