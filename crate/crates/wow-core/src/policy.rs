//! Borrowing-weight policies: how much prior weight w_h the historical
//! component gets. Gating (whether borrowing is allowed at all) is a
//! separate decision wrapped around any policy by [`gated`].
//!
//! * `Fixed`: constant w_h.
//! * `Sam`: likelihood-ratio weight. With historical rate θ̂_h and
//!   alternatives θ̂_h ± δ, R = L(x | θ̂_h) / max L(x | θ̂_h ± δ) and
//!   w_h = R/(1+R); alternatives falling outside the parameter space are
//!   dropped.
//! * `EbRmap`: prior-predictive-probability weight. PPP is a tail
//!   probability of the observed data under the historical-informed prior
//!   predictive; w_h = min(1, PPP/(1−γ)), snapped to a grid. γ = 0 leaves
//!   the raw PPP as the weight.

use crate::error::{Error, Result};
use crate::model::{BetaShape, BinaryDataset, ContinuousStats, HistoricalBinary, HistoricalContinuous};
use crate::specfun::{beta_binomial_log_pmf, log_normal_pdf, normal_cdf};
use crate::waic::GateDecision;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

fn default_grid_step() -> f64 {
    0.01
}

/// Which predictive tail the EB-rMAP PPP uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tail {
    Lower,
    Upper,
    TwoSided,
}

/// A rule mapping observed data to the prior borrow weight w_h.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "snake_case")]
pub enum WeightPolicy {
    Fixed {
        w: f64,
    },
    Sam {
        delta: f64,
    },
    EbRmap {
        gamma: f64,
        tail: Tail,
        #[serde(default = "default_grid_step")]
        grid_step: f64,
    },
}

impl WeightPolicy {
    pub fn validate(&self) -> Result<()> {
        match *self {
            WeightPolicy::Fixed { w } => {
                if !(0.0..=1.0).contains(&w) {
                    return Err(Error::OutOfRange {
                        name: "w",
                        value: w,
                        lo: 0.0,
                        hi: 1.0,
                    });
                }
            }
            WeightPolicy::Sam { delta } => {
                if !(delta > 0.0 && delta.is_finite()) {
                    return Err(Error::NonPositive {
                        name: "delta",
                        value: delta,
                    });
                }
            }
            WeightPolicy::EbRmap {
                gamma,
                grid_step,
                tail: _,
            } => {
                // γ = 0 is allowed: it disables the 1/(1−γ) scaling so the
                // weight is the raw predictive tail probability
                if !(0.0..1.0).contains(&gamma) {
                    return Err(Error::OutOfRange {
                        name: "gamma",
                        value: gamma,
                        lo: 0.0,
                        hi: 1.0,
                    });
                }
                if !(grid_step > 0.0 && grid_step <= 1.0) {
                    return Err(Error::OutOfRange {
                        name: "grid_step",
                        value: grid_step,
                        lo: 0.0,
                        hi: 1.0,
                    });
                }
            }
        }
        Ok(())
    }

    /// Short human-readable label, e.g. `fixed(0.50)` or
    /// `eb_rmap(0.00,two_sided)`.
    pub fn label(&self) -> String {
        match *self {
            WeightPolicy::Fixed { w } => format!("fixed({w:.2})"),
            WeightPolicy::Sam { delta } => format!("sam({delta:.2})"),
            WeightPolicy::EbRmap { gamma, tail, .. } => {
                let t = match tail {
                    Tail::Lower => "lower",
                    Tail::Upper => "upper",
                    Tail::TwoSided => "two_sided",
                };
                format!("eb_rmap({gamma:.2},{t})")
            }
        }
    }
}

/// A computed weight plus whether a gate zeroed it and any policy
/// diagnostics (log-likelihood ratios, tail probabilities, the gate k).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightDecision {
    pub w_h: f64,
    pub gated_out: bool,
    pub diagnostics: BTreeMap<String, f64>,
}

impl WeightDecision {
    fn bare(w_h: f64) -> Self {
        Self {
            w_h,
            gated_out: false,
            diagnostics: BTreeMap::new(),
        }
    }
}

/// The fixed policy: w_h = w regardless of the data.
pub fn fixed_weight(w: f64) -> Result<WeightDecision> {
    WeightPolicy::Fixed { w }.validate()?;
    Ok(WeightDecision::bare(w))
}

/// SAM weight for binary data.
///
/// θ̂_h = x_h/n_h; R = L(x | θ̂_h)/max L(x | θ̂_h ± δ) computed in log
/// space; w_h = R/(1+R) = logistic(ln R). Alternatives outside [0,1] are
/// dropped; if both fall outside, the contrast is undefined.
pub fn sam_weight_binary(
    delta: f64,
    data: &BinaryDataset,
    hist: &HistoricalBinary,
) -> Result<WeightDecision> {
    WeightPolicy::Sam { delta }.validate()?;
    let theta_h = hist.x_h() as f64 / hist.n_h() as f64;
    let (x, n) = (data.x() as f64, data.n() as f64);
    let log_lik = |theta: f64| -> f64 {
        // binomial log-likelihood without the constant choose term; the
        // constant cancels in the ratio
        let lx = if x > 0.0 {
            x * theta.ln()
        } else {
            0.0
        };
        let l1 = if n - x > 0.0 {
            (n - x) * (1.0 - theta).ln()
        } else {
            0.0
        };
        lx + l1
    };
    let mut best_alt = f64::NEG_INFINITY;
    for alt in [theta_h - delta, theta_h + delta] {
        if (0.0..=1.0).contains(&alt) {
            best_alt = best_alt.max(log_lik(alt));
        }
    }
    if best_alt == f64::NEG_INFINITY {
        return Err(Error::Config(format!(
            "both SAM alternatives {:.4} and {:.4} fall outside [0,1]",
            theta_h - delta,
            theta_h + delta
        )));
    }
    let log_r = log_lik(theta_h) - best_alt;
    let w_h = 1.0 / (1.0 + (-log_r).exp());
    let mut d = WeightDecision::bare(w_h);
    d.diagnostics.insert("log_r".into(), log_r);
    d.diagnostics.insert("r".into(), log_r.min(700.0).exp());
    Ok(d)
}

/// SAM weight for continuous data, with normal likelihood of the sample
/// mean: L(ȳ | θ) = φ(ȳ; θ, σ²/n).
pub fn sam_weight_continuous(
    delta: f64,
    stats: &ContinuousStats,
    hist: &HistoricalContinuous,
) -> Result<WeightDecision> {
    WeightPolicy::Sam { delta }.validate()?;
    let v = stats.sigma() * stats.sigma() / stats.n() as f64;
    let ybar = stats.ybar();
    let ll = |theta: f64| log_normal_pdf(ybar, theta, v);
    let log_r = ll(hist.ybar_h) - ll(hist.ybar_h - delta).max(ll(hist.ybar_h + delta));
    let w_h = 1.0 / (1.0 + (-log_r).exp());
    let mut d = WeightDecision::bare(w_h);
    d.diagnostics.insert("log_r".into(), log_r);
    d.diagnostics.insert("r".into(), log_r.min(700.0).exp());
    Ok(d)
}

/// EB-rMAP weight for binary data.
///
/// The prior predictive of x under the historical-informed prior
/// Beta(a + x_h, b + n_h − x_h) is BetaBinomial(n, a + x_h, b + n_h − x_h).
/// PPP is its lower, upper, or two-sided tail at the observed x;
/// w_h = min(1, PPP/(1−γ)) snapped to the weight grid.
pub fn ebrmap_weight_binary(
    gamma: f64,
    tail: Tail,
    grid_step: f64,
    prior: &BetaShape,
    data: &BinaryDataset,
    hist: &HistoricalBinary,
) -> Result<WeightDecision> {
    let policy = WeightPolicy::EbRmap {
        gamma,
        tail,
        grid_step,
    };
    policy.validate()?;
    let shape = BetaShape::new(
        prior.a() + hist.x_h() as f64,
        prior.b() + (hist.n_h() - hist.x_h()) as f64,
    )?;
    let n = data.n();
    let x = data.x();
    let mut lower = 0.0;
    let mut upper = 0.0;
    for k in 0..=n {
        let p = beta_binomial_log_pmf(k, n, &shape)?.exp();
        if k <= x {
            lower += p;
        }
        if k >= x {
            upper += p;
        }
    }
    finish_ebrmap(gamma, tail, grid_step, lower.min(1.0), upper.min(1.0))
}

/// EB-rMAP weight for continuous data: predictive of ȳ is
/// N(ȳ_h, σ²_h + σ²/n) and the tails are normal tails.
pub fn ebrmap_weight_continuous(
    gamma: f64,
    tail: Tail,
    grid_step: f64,
    stats: &ContinuousStats,
    hist: &HistoricalContinuous,
) -> Result<WeightDecision> {
    let policy = WeightPolicy::EbRmap {
        gamma,
        tail,
        grid_step,
    };
    policy.validate()?;
    let pred_var = hist.sigma_h2() + stats.sigma() * stats.sigma() / stats.n() as f64;
    let z = (stats.ybar() - hist.ybar_h) / pred_var.sqrt();
    let lower = normal_cdf(z);
    let upper = 1.0 - lower;
    finish_ebrmap(gamma, tail, grid_step, lower, upper)
}

fn finish_ebrmap(
    gamma: f64,
    tail: Tail,
    grid_step: f64,
    lower: f64,
    upper: f64,
) -> Result<WeightDecision> {
    let ppp = match tail {
        Tail::Lower => lower,
        Tail::Upper => upper,
        Tail::TwoSided => (2.0 * lower.min(upper)).min(1.0),
    };
    let raw = (ppp / (1.0 - gamma)).min(1.0);
    // snap to the weight grid
    let w_h = ((raw / grid_step).round() * grid_step).clamp(0.0, 1.0);
    let mut d = WeightDecision::bare(w_h);
    d.diagnostics.insert("ppp".into(), ppp);
    d.diagnostics.insert("ppp_lower".into(), lower);
    d.diagnostics.insert("ppp_upper".into(), upper);
    Ok(d)
}

/// Evaluate a policy on binary data.
pub fn weight_for_binary(
    policy: &WeightPolicy,
    prior: &BetaShape,
    data: &BinaryDataset,
    hist: &HistoricalBinary,
) -> Result<WeightDecision> {
    match *policy {
        WeightPolicy::Fixed { w } => fixed_weight(w),
        WeightPolicy::Sam { delta } => sam_weight_binary(delta, data, hist),
        WeightPolicy::EbRmap {
            gamma,
            tail,
            grid_step,
        } => ebrmap_weight_binary(gamma, tail, grid_step, prior, data, hist),
    }
}

/// Evaluate a policy on continuous data.
pub fn weight_for_continuous(
    policy: &WeightPolicy,
    stats: &ContinuousStats,
    hist: &HistoricalContinuous,
) -> Result<WeightDecision> {
    match *policy {
        WeightPolicy::Fixed { w } => fixed_weight(w),
        WeightPolicy::Sam { delta } => sam_weight_continuous(delta, stats, hist),
        WeightPolicy::EbRmap {
            gamma,
            tail,
            grid_step,
        } => ebrmap_weight_continuous(gamma, tail, grid_step, stats, hist),
    }
}

/// Wrap a policy decision with the WAIC gate: when the gate says
/// no-borrow, the weight is zeroed and `gated_out` is set. The gate
/// statistic k is recorded in the diagnostics either way.
pub fn gated(gate: &GateDecision, inner: WeightDecision) -> WeightDecision {
    let mut out = inner;
    out.diagnostics.insert("k".into(), gate.k);
    if !gate.borrow {
        out.w_h = 0.0;
        out.gated_out = true;
    }
    out
}
