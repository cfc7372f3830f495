//! Two-group log-rank statistic with administrative censoring.

use crate::error::{domain, Result};

/// Follow-up time and whether it ended in an event (as opposed to censoring).
pub type Subject = (f64, bool);

/// Log-rank z-statistic `Σ(O - E) / sqrt(Σ V)` for group A, counting only
/// events at or before `truncation`; later follow-up is censored there.
///
/// `E` and `V` are the hypergeometric mean and variance of A's events at each
/// distinct event time. The statistic is positive when A has earlier events
/// than expected. Returns `Ok(None)` when no events fall before truncation.
pub fn logrank_statistic(group_a: &[Subject], group_b: &[Subject], truncation: f64) -> Result<Option<f64>> {
    if group_a.is_empty() || group_b.is_empty() {
        return domain("log-rank test needs two nonempty groups");
    }
    if !(truncation >= 0.0) {
        return domain(format!("truncation time must be nonnegative, got {truncation}"));
    }
    // (time, event, in_a)
    let mut all: Vec<(f64, bool, bool)> = Vec::with_capacity(group_a.len() + group_b.len());
    for (group, in_a) in [(group_a, true), (group_b, false)] {
        for &(t, event) in group {
            if !(t >= 0.0) || !t.is_finite() {
                return domain(format!("survival times must be finite and nonnegative, got {t}"));
            }
            if t > truncation {
                all.push((truncation, false, in_a));
            } else {
                all.push((t, event, in_a));
            }
        }
    }
    all.sort_by(|x, y| x.0.total_cmp(&y.0));

    let mut at_risk = all.len() as f64;
    let mut at_risk_a = group_a.len() as f64;
    let (mut o_minus_e, mut var) = (0.0, 0.0);
    let mut i = 0;
    while i < all.len() {
        let t = all[i].0;
        let (mut d, mut d_a, mut leaving, mut leaving_a) = (0.0, 0.0, 0.0, 0.0);
        while i < all.len() && all[i].0 == t {
            let (_, event, in_a) = all[i];
            if event {
                d += 1.0;
                if in_a {
                    d_a += 1.0;
                }
            }
            leaving += 1.0;
            if in_a {
                leaving_a += 1.0;
            }
            i += 1;
        }
        if d > 0.0 {
            let share = at_risk_a / at_risk;
            o_minus_e += d_a - d * share;
            if at_risk > 1.0 {
                var += d * share * (1.0 - share) * (at_risk - d) / (at_risk - 1.0);
            }
        }
        at_risk -= leaving;
        at_risk_a -= leaving_a;
    }
    if var <= 0.0 {
        return Ok(None);
    }
    Ok(Some(o_minus_e / var.sqrt()))
}
