use reuse_risk::power::{
    portfolio_expected_type2, power, required_sample_size, type2_error, SampleVector, TestKind, TestSpec,
};
use reuse_risk::report::{fmt_f64, Report, Table};
use reuse_risk::Result;

use crate::params::{command_params, Fields};

command_params! {
    /// Power and Type II error of two-sample mean tests, or the sample size for a target power.
    Args {
        /// t (pooled, unknown variance) or z (known variance) [default: t]
        kind,
        /// Significance level [default: 0.05]
        alpha,
        /// Effect size in outcome units
        delta,
        /// Outcome standard deviation [default: 1]
        sigma,
        /// Two-sided test [default: true]
        two_sided,
        /// Comma-separated first-arm sizes, paired with n2
        n1,
        /// Comma-separated second-arm sizes, paired with n1
        n2,
        /// Power to reach; reports the smallest design that does
        target_power,
        /// n2 / n1 allocation ratio for target-power [default: 1]
        ratio,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TestParams {
    pub kind: TestKind,
    pub alpha: f64,
    pub sigma: f64,
    pub two_sided: bool,
}

impl TestParams {
    pub fn from_fields(f: &mut Fields, default_alpha: Option<f64>) -> Self {
        TestParams {
            kind: f.choice("kind", &[("t", TestKind::TPooled), ("z", TestKind::ZKnownVariance)], TestKind::TPooled),
            alpha: default_alpha.map_or(0.05, |a| f.or("alpha", a)),
            sigma: f.or("sigma", 1.0),
            two_sided: f.or("two-sided", true),
        }
    }

    pub fn spec(&self, delta: f64) -> Result<TestSpec> {
        TestSpec::new(self.kind, self.alpha, self.two_sided, delta, self.sigma)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub test: TestParams,
    pub delta: f64,
    pub designs: Vec<SampleVector>,
    pub target: Option<(f64, f64)>,
}

pub fn build(f: &mut Fields) -> Config {
    let test = TestParams::from_fields(f, Some(0.05));
    let delta = f.req("delta");
    let n1: Vec<u64> = f.list("n1").unwrap_or_default();
    let n2: Vec<u64> = f.list("n2").unwrap_or_default();
    if f.has("n1") != f.has("n2") {
        f.error("`n1` and `n2` must be given together");
    } else if n1.len() != n2.len() {
        f.error(format!("`n1` has {} entries but `n2` has {}", n1.len(), n2.len()));
    }
    let target = f.opt::<f64>("target-power");
    if target.is_none() {
        f.forbid(&["ratio"], "power without target-power");
    }
    if !f.has("n1") && !f.has("n2") && !f.has("target-power") {
        f.error("give `n1` and `n2`, or `target-power`");
    }
    let ratio = f.or("ratio", 1.0);
    Config {
        test,
        delta,
        designs: n1.into_iter().zip(n2).map(|(a, b)| SampleVector::new(a, b)).collect(),
        target: target.map(|t| (t, ratio)),
    }
}

pub fn execute(cfg: &Config) -> Result<Report> {
    let spec = cfg.test.spec(cfg.delta)?;
    let mut report = Report::new()
        .with_header("command", "power")
        .with_header("kind", if cfg.test.kind == TestKind::TPooled { "t" } else { "z" })
        .with_header("alpha", fmt_f64(cfg.test.alpha))
        .with_header("delta", fmt_f64(cfg.delta))
        .with_header("sigma", fmt_f64(cfg.test.sigma))
        .with_header("two_sided", cfg.test.two_sided);
    if !cfg.designs.is_empty() {
        let specs = vec![spec.clone(); cfg.designs.len()];
        report.push_header("expected_type2_total", fmt_f64(portfolio_expected_type2(&specs, &cfg.designs)?));
        let mut t = Table::new("power", ["n1", "n2", "power", "type2_error"]);
        for &n in &cfg.designs {
            t.push([n.n1.to_string(), n.n2.to_string(), fmt_f64(power(&spec, n)?), fmt_f64(type2_error(&spec, n)?)]);
        }
        report.push_table(t);
    }
    if let Some((target, ratio)) = cfg.target {
        let n = required_sample_size(&spec, target, ratio)?;
        let mut t = Table::new("sample_size", ["target_power", "ratio", "n1", "n2", "power"]);
        t.push([fmt_f64(target), fmt_f64(ratio), n.n1.to_string(), n.n2.to_string(), fmt_f64(power(&spec, n)?)]);
        report.push_table(t);
    }
    Ok(report)
}
