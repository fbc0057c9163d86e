//! Special functions behind the closed-form moments and predictive tails:
//! ψ (digamma), ψ₁ (trigamma), ln B(a,b), the regularized incomplete beta
//! I_u(a,b), the beta-binomial log-pmf, Φ, and Gauss-Legendre nodes.
//!
//! ψ and ψ₁ use the recurrence shift to z ≥ 8 followed by the asymptotic
//! series in 1/z² through the B₁₆ Bernoulli term. Shift terms are summed
//! smallest-first so the recurrences ψ(z+1) = ψ(z) + 1/z and
//! ψ₁(z+1) = ψ₁(z) − 1/z² survive repeated shifting to ≈1e-10.
//!
//! Accuracy: ψ absolute error ≤ 1e-12 on z ≥ 1e-3; ψ₁ relative error
//! ≤ 1e-13 on z ≥ 1e-3 and absolute error ≤ 1e-12 on z ≥ 0.5 (below 0.5 the
//! value grows like 1/z², so one f64 ulp already exceeds 1e-12 absolute).

use crate::error::{Error, Result};
use crate::model::BetaShape;
use std::sync::OnceLock;

pub(crate) const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Absolute/relative tolerance pair used by numerical cross-checks.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct RealTolerance {
    pub abs_tol: f64,
    pub rel_tol: f64,
}

impl RealTolerance {
    pub fn new(abs_tol: f64, rel_tol: f64) -> Result<Self> {
        if !(abs_tol > 0.0) {
            return Err(Error::NonPositive {
                name: "abs_tol",
                value: abs_tol,
            });
        }
        if !(rel_tol > 0.0) {
            return Err(Error::NonPositive {
                name: "rel_tol",
                value: rel_tol,
            });
        }
        Ok(Self { abs_tol, rel_tol })
    }

    /// |x − y| ≤ abs_tol + rel_tol·max(|x|, |y|).
    pub fn close(&self, x: f64, y: f64) -> bool {
        (x - y).abs() <= self.abs_tol + self.rel_tol * x.abs().max(y.abs())
    }
}

impl Default for RealTolerance {
    fn default() -> Self {
        Self {
            abs_tol: 1e-12,
            rel_tol: 1e-10,
        }
    }
}

fn check_positive(name: &'static str, z: f64) -> Result<()> {
    if z > 0.0 && z.is_finite() {
        Ok(())
    } else {
        Err(Error::NonPositive { name, value: z })
    }
}

/// ψ(z) for z > 0.
pub fn digamma(z: f64) -> Result<f64> {
    check_positive("z", z)?;
    Ok(digamma_unchecked(z))
}

/// ψ₁(z) for z > 0.
pub fn trigamma(z: f64) -> Result<f64> {
    check_positive("z", z)?;
    Ok(trigamma_unchecked(z))
}

// At most 8 unit shifts lift any z > 0 to z ≥ 8.
const SHIFT_TO: f64 = 8.0;

pub(crate) fn digamma_unchecked(z: f64) -> f64 {
    let mut shifts = [0.0f64; 8];
    let mut m = 0;
    let mut t = z;
    while t < SHIFT_TO {
        shifts[m] = 1.0 / t;
        m += 1;
        t += 1.0;
    }
    let zi = 1.0 / (t * t);
    // ψ(t) ≈ ln t − 1/(2t) − Σ_k B₂ₖ/(2k t^{2k}), Horner in 1/t² through B₁₆
    let tail = 1.0 / 12.0
        - zi * (1.0 / 120.0
            - zi * (1.0 / 252.0
                - zi * (1.0 / 240.0
                    - zi * (1.0 / 132.0 - zi * (691.0 / 32760.0 - zi * (1.0 / 12.0))))));
    // shift terms 1/z, 1/(z+1), ... are decreasing, so reverse order sums
    // smallest-first
    let mut shift_sum = 0.0;
    for i in (0..m).rev() {
        shift_sum += shifts[i];
    }
    t.ln() - 0.5 / t - zi * tail - shift_sum
}

pub(crate) fn trigamma_unchecked(z: f64) -> f64 {
    let mut shifts = [0.0f64; 8];
    let mut m = 0;
    let mut t = z;
    while t < SHIFT_TO {
        shifts[m] = 1.0 / (t * t);
        m += 1;
        t += 1.0;
    }
    let zi = 1.0 / (t * t);
    // ψ₁(t) ≈ 1/t + 1/(2t²) + (1/t³)·Σ_k B₂ₖ/t^{2k−2}, through B₁₆
    let tail = 1.0 / 6.0
        - zi * (1.0 / 30.0
            - zi * (1.0 / 42.0
                - zi * (1.0 / 30.0 - zi * (5.0 / 66.0 - zi * (691.0 / 2730.0 - zi * (7.0 / 6.0))))));
    let mut shift_sum = 0.0;
    for i in (0..m).rev() {
        shift_sum += shifts[i];
    }
    1.0 / t + 0.5 * zi + tail / (t * t * t) + shift_sum
}

/// ψ(p) − ψ(p+q) by the exact finite sum −Σ_{i=0}^{q−1} 1/(p+i).
///
/// This is the integer-gap fast path for the Beta log-moment
/// E[ln θ] = ψ(p) − ψ(p+q); it avoids the asymptotic series entirely when
/// the gap q is a whole number. Terms are added largest-i first, which is
/// smallest-first in magnitude.
pub fn digamma_diff(p: f64, q: u32) -> Result<f64> {
    check_positive("p", p)?;
    let mut acc = 0.0;
    for i in (0..q).rev() {
        acc += 1.0 / (p + f64::from(i));
    }
    Ok(-acc)
}

/// ψ₁(p) − ψ₁(p+q) by the exact finite sum Σ_{i=0}^{q−1} 1/(p+i)².
pub fn trigamma_diff(p: f64, q: u32) -> Result<f64> {
    check_positive("p", p)?;
    let mut acc = 0.0;
    for i in (0..q).rev() {
        let d = p + f64::from(i);
        acc += 1.0 / (d * d);
    }
    Ok(acc)
}

/// ln B(a,b) = ln Γ(a) + ln Γ(b) − ln Γ(a+b), to 1e-12 relative error.
pub fn log_beta(a: f64, b: f64) -> Result<f64> {
    check_positive("a", a)?;
    check_positive("b", b)?;
    Ok(log_beta_unchecked(a, b))
}

pub(crate) fn log_beta_unchecked(a: f64, b: f64) -> f64 {
    use statrs::function::gamma::ln_gamma;
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

/// Regularized incomplete beta I_u(a,b), the Beta(a,b) CDF at u.
pub fn beta_cdf(u: f64, shape: &BetaShape) -> Result<f64> {
    if !(0.0..=1.0).contains(&u) {
        return Err(Error::OutOfRange {
            name: "u",
            value: u,
            lo: 0.0,
            hi: 1.0,
        });
    }
    Ok(beta_cdf_unchecked(u, shape.a(), shape.b()))
}

pub(crate) fn beta_cdf_unchecked(u: f64, a: f64, b: f64) -> f64 {
    if u <= 0.0 {
        0.0
    } else if u >= 1.0 {
        1.0
    } else {
        statrs::function::beta::beta_reg(a, b, u)
    }
}

/// ln Pr(K = k) for K ~ BetaBinomial(m, a, b):
/// ln C(m,k) + ln B(a+k, b+m−k) − ln B(a,b).
pub fn beta_binomial_log_pmf(k: u64, m: u64, shape: &BetaShape) -> Result<f64> {
    if k > m {
        return Err(Error::CountOrder {
            relation: "k ≤ m",
            lhs: k,
            rhs: m,
        });
    }
    let (a, b) = (shape.a(), shape.b());
    let (kf, mf) = (k as f64, m as f64);
    use statrs::function::gamma::ln_gamma;
    let ln_choose = ln_gamma(mf + 1.0) - ln_gamma(kf + 1.0) - ln_gamma(mf - kf + 1.0);
    Ok(ln_choose + log_beta_unchecked(a + kf, b + mf - kf) - log_beta_unchecked(a, b))
}

/// Φ(z) = erfc(−z/√2)/2, to 1e-12 absolute error (libm's erfc is the
/// sub-ulp FDLIBM implementation).
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z * std::f64::consts::FRAC_1_SQRT_2)
}

/// ln φ(y; μ, v): log-density of N(μ, v) at y, with v a variance.
pub(crate) fn log_normal_pdf(y: f64, mu: f64, v: f64) -> f64 {
    let d = y - mu;
    -0.5 * (d * d / v + v.ln() + LN_2PI)
}

/// Nodes and weights of the n-point Gauss-Legendre rule mapped to [0, 1].
///
/// Nodes are the roots of the Legendre polynomial Pₙ found by Newton
/// iteration from the Chebyshev-like initial guess cos(π(i+3/4)/(n+1/2));
/// weights are 2/((1−x²)Pₙ′(x)²), both then affinely mapped from [−1,1].
pub fn gauss_legendre_unit(n: usize) -> Vec<(f64, f64)> {
    assert!(n >= 2, "quadrature order must be at least 2");
    let mut rule = Vec::with_capacity(n);
    let nf = n as f64;
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // evaluate Pₙ(x) and Pₙ′(x) by the three-term recurrence
            let mut p0 = 1.0;
            let mut p1 = x;
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = nf * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        rule.push((0.5 * (x + 1.0), 0.5 * w));
    }
    rule.sort_by(|l, r| l.0.total_cmp(&r.0));
    rule
}

/// Cached 256-point rule on [0,1] used by the probability-of-superiority
/// quadrature.
pub(crate) fn gl256() -> &'static [(f64, f64)] {
    static CACHE: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    CACHE.get_or_init(|| gauss_legendre_unit(256))
}
