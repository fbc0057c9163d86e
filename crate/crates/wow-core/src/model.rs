//! Data containers and conjugate posterior updates.
//!
//! The control-arm posterior under a two-point prior on the borrowing weight
//! is a two-component mixture. For a binary endpoint with prior Beta(a,b),
//! current data (x, n), and historical data (x_h, n_h):
//!
//!   borrow component   Beta(a + x + x_h, b + n + n_h − x − x_h)
//!   no-borrow component Beta(a + x, b + n − x)
//!   log z_h = ln B(a + x + x_h, b + n + n_h − x − x_h) − ln B(a + x_h, b + n_h − x_h)
//!   log z_0 = ln B(a + x, b + n − x) − ln B(a, b)
//!   w* = logistic(logit(w_h) + log z_h − log z_0)
//!
//! For a continuous endpoint with known sampling sd σ, the historical-data
//! prior is N(ȳ_h, s²_h/n_h) and the vague prior N(vague_mean, vague_sd²);
//! each component posterior is the standard normal-normal update and the
//! marginal likelihoods z are normal densities of ȳ.

use crate::error::{Error, Result};
use crate::specfun::{self, gl256};
use serde::{Deserialize, Serialize};

/// Shape parameters of a Beta(a, b) distribution, both strictly positive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaShape {
    a: f64,
    b: f64,
}

impl BetaShape {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(a > 0.0 && a.is_finite()) {
            return Err(Error::NonPositive { name: "a", value: a });
        }
        if !(b > 0.0 && b.is_finite()) {
            return Err(Error::NonPositive { name: "b", value: b });
        }
        Ok(Self { a, b })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    /// E[θ] = a/(a+b).
    pub fn mean(&self) -> f64 {
        self.a / (self.a + self.b)
    }

    pub fn is_uniform(&self) -> bool {
        self.a == 1.0 && self.b == 1.0
    }

    /// ln f(u) = (a−1)ln u + (b−1)ln(1−u) − ln B(a,b).
    pub fn log_pdf(&self, u: f64) -> f64 {
        if !(0.0..=1.0).contains(&u) {
            return f64::NEG_INFINITY;
        }
        let mut acc = -specfun::log_beta_unchecked(self.a, self.b);
        // the 0·ln 0 limits: exponent zero contributes nothing even at the edge
        if self.a != 1.0 {
            if u == 0.0 {
                return if self.a > 1.0 {
                    f64::NEG_INFINITY
                } else {
                    f64::INFINITY
                };
            }
            acc += (self.a - 1.0) * u.ln();
        }
        if self.b != 1.0 {
            if u == 1.0 {
                return if self.b > 1.0 {
                    f64::NEG_INFINITY
                } else {
                    f64::INFINITY
                };
            }
            acc += (self.b - 1.0) * (1.0 - u).ln();
        }
        acc
    }

    pub fn pdf(&self, u: f64) -> f64 {
        self.log_pdf(u).exp()
    }

    pub fn cdf(&self, u: f64) -> f64 {
        specfun::beta_cdf_unchecked(u, self.a, self.b)
    }
}

/// Current-trial binomial data: x successes out of n subjects.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BinaryDataset {
    x: u64,
    n: u64,
}

impl BinaryDataset {
    pub fn new(x: u64, n: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::NonPositive {
                name: "n",
                value: 0.0,
            });
        }
        if x > n {
            return Err(Error::CountOrder {
                relation: "x ≤ n",
                lhs: x,
                rhs: n,
            });
        }
        Ok(Self { x, n })
    }

    pub fn x(&self) -> u64 {
        self.x
    }

    pub fn n(&self) -> u64 {
        self.n
    }
}

/// Historical binomial data: x_h successes out of n_h subjects.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HistoricalBinary {
    x_h: u64,
    n_h: u64,
}

impl HistoricalBinary {
    pub fn new(x_h: u64, n_h: u64) -> Result<Self> {
        if n_h == 0 {
            return Err(Error::NonPositive {
                name: "n_h",
                value: 0.0,
            });
        }
        if x_h > n_h {
            return Err(Error::CountOrder {
                relation: "x_h ≤ n_h",
                lhs: x_h,
                rhs: n_h,
            });
        }
        Ok(Self { x_h, n_h })
    }

    pub fn x_h(&self) -> u64 {
        self.x_h
    }

    pub fn n_h(&self) -> u64 {
        self.n_h
    }
}

/// Sufficient statistics of a continuous sample with known sampling sd σ:
/// n and the power sums s_r = Σ yᵢʳ for r = 1..4.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContinuousStats {
    n: u64,
    s1: f64,
    s2: f64,
    s3: f64,
    s4: f64,
    sigma: f64,
}

impl ContinuousStats {
    pub fn new(n: u64, s1: f64, s2: f64, s3: f64, s4: f64, sigma: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::NonPositive {
                name: "n",
                value: 0.0,
            });
        }
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::NonPositive {
                name: "sigma",
                value: sigma,
            });
        }
        for (name, v) in [("s1", s1), ("s2", s2), ("s3", s3), ("s4", s4)] {
            if !v.is_finite() {
                return Err(Error::Config(format!("{name} must be finite, got {v}")));
            }
        }
        let nf = n as f64;
        // Cauchy-Schwarz: n·s2 ≥ s1² and n·s4 ≥ s2², with relative slack for
        // rounding in caller-supplied sums
        let slack2 = 1e-9 * (nf * s2).abs().max(s1 * s1);
        if nf * s2 - s1 * s1 < -slack2.max(1e-12) {
            return Err(Error::Config(format!(
                "power sums violate n*s2 >= s1^2: n={n} s1={s1} s2={s2}"
            )));
        }
        let slack4 = 1e-9 * (nf * s4).abs().max(s2 * s2);
        if nf * s4 - s2 * s2 < -slack4.max(1e-12) {
            return Err(Error::Config(format!(
                "power sums violate n*s4 >= s2^2: n={n} s2={s2} s4={s4}"
            )));
        }
        Ok(Self {
            n,
            s1,
            s2,
            s3,
            s4,
            sigma,
        })
    }

    pub fn from_observations(ys: &[f64], sigma: f64) -> Result<Self> {
        if ys.is_empty() {
            return Err(Error::NonPositive {
                name: "n",
                value: 0.0,
            });
        }
        let (mut s1, mut s2, mut s3, mut s4) = (0.0, 0.0, 0.0, 0.0);
        for &y in ys {
            let y2 = y * y;
            s1 += y;
            s2 += y2;
            s3 += y2 * y;
            s4 += y2 * y2;
        }
        Self::new(ys.len() as u64, s1, s2, s3, s4, sigma)
    }

    /// Population closure: the power sums a sample of size n with mean ȳ
    /// would have if its higher moments matched the N(ȳ, σ²) sampling
    /// distribution exactly. Used for prospective (pre-data) calculations.
    pub fn population(n: u64, ybar: f64, sigma: f64) -> Result<Self> {
        let nf = n as f64;
        let v = sigma * sigma;
        let s1 = nf * ybar;
        let s2 = nf * (v + ybar * ybar);
        let s3 = nf * (ybar * ybar * ybar + 3.0 * ybar * v);
        let s4 = nf * (ybar.powi(4) + 6.0 * ybar * ybar * v + 3.0 * v * v);
        Self::new(n, s1, s2, s3, s4, sigma)
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn s1(&self) -> f64 {
        self.s1
    }

    pub fn s2(&self) -> f64 {
        self.s2
    }

    pub fn s3(&self) -> f64 {
        self.s3
    }

    pub fn s4(&self) -> f64 {
        self.s4
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn ybar(&self) -> f64 {
        self.s1 / self.n as f64
    }
}

/// Historical continuous summary: mean ȳ_h with spread s²_h over n_h
/// subjects, plus the vague-prior center and sd used for the no-borrow
/// component.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistoricalContinuous {
    pub ybar_h: f64,
    pub s2_h: f64,
    pub n_h: u64,
    pub vague_mean: f64,
    pub vague_sd: f64,
}

impl HistoricalContinuous {
    pub fn new(ybar_h: f64, s2_h: f64, n_h: u64, vague_mean: f64, vague_sd: f64) -> Result<Self> {
        if n_h == 0 {
            return Err(Error::NonPositive {
                name: "n_h",
                value: 0.0,
            });
        }
        if !(s2_h > 0.0 && s2_h.is_finite()) {
            return Err(Error::NonPositive {
                name: "s2_h",
                value: s2_h,
            });
        }
        if !(vague_sd > 0.0 && vague_sd.is_finite()) {
            return Err(Error::NonPositive {
                name: "vague_sd",
                value: vague_sd,
            });
        }
        if !ybar_h.is_finite() || !vague_mean.is_finite() {
            return Err(Error::Config(format!(
                "means must be finite: ybar_h={ybar_h} vague_mean={vague_mean}"
            )));
        }
        Ok(Self {
            ybar_h,
            s2_h,
            n_h,
            vague_mean,
            vague_sd,
        })
    }

    /// Historical-prior variance σ²_h = s²_h / n_h.
    pub fn sigma_h2(&self) -> f64 {
        self.s2_h / self.n_h as f64
    }

    /// A vague prior that is not clearly wider than the historical prior
    /// defeats the two-component contrast; warn when vague_sd² < 10·σ²_h.
    pub fn vague_sd_warning(&self) -> Option<String> {
        let v = self.vague_sd * self.vague_sd;
        if v < 10.0 * self.sigma_h2() {
            Some(format!(
                "vague_sd^2 = {v:.6} is less than 10 * s2_h/n_h = {:.6}; \
                 the no-borrow component is not clearly vaguer than the \
                 historical prior",
                10.0 * self.sigma_h2()
            ))
        } else {
            None
        }
    }
}

/// Summaries every posterior type provides.
pub trait PosteriorSummary {
    fn mean(&self) -> f64;
    fn cdf(&self, u: f64) -> f64;
    /// Support interval the quantile search brackets.
    fn support(&self) -> (f64, f64);

    /// Inverse CDF by bisection to 1e-8 on the argument.
    fn quantile(&self, p: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::OutOfRange {
                name: "p",
                value: p,
                lo: 0.0,
                hi: 1.0,
            });
        }
        let (mut lo, mut hi) = self.support();
        for _ in 0..200 {
            if hi - lo <= 1e-8 {
                break;
            }
            let mid = 0.5 * (lo + hi);
            if self.cdf(mid) < p {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }
}

/// Posterior mean of any summary type.
pub fn posterior_mean<P: PosteriorSummary>(post: &P) -> f64 {
    post.mean()
}

/// Two-component Beta mixture posterior for a binary endpoint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinaryMixturePosterior {
    /// Posterior probability of the borrow component.
    pub w_star: f64,
    pub borrow: BetaShape,
    pub noborrow: BetaShape,
    pub log_z_h: f64,
    pub log_z_0: f64,
}

impl BinaryMixturePosterior {
    /// Degenerate single-component posterior (w* = 0 on the same shape both
    /// slots; used for arms with no historical data).
    pub fn single(shape: BetaShape) -> Self {
        Self {
            w_star: 0.0,
            borrow: shape,
            noborrow: shape,
            log_z_h: 0.0,
            log_z_0: 0.0,
        }
    }

    pub fn pdf(&self, u: f64) -> f64 {
        self.w_star * self.borrow.pdf(u) + (1.0 - self.w_star) * self.noborrow.pdf(u)
    }
}

impl PosteriorSummary for BinaryMixturePosterior {
    fn mean(&self) -> f64 {
        self.w_star * self.borrow.mean() + (1.0 - self.w_star) * self.noborrow.mean()
    }

    fn cdf(&self, u: f64) -> f64 {
        self.w_star * self.borrow.cdf(u) + (1.0 - self.w_star) * self.noborrow.cdf(u)
    }

    fn support(&self) -> (f64, f64) {
        (0.0, 1.0)
    }
}

/// Two-component normal mixture posterior for a continuous endpoint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalMixturePosterior {
    pub w_star: f64,
    pub mu_h: f64,
    pub tau2_h: f64,
    pub mu_0: f64,
    pub tau2_0: f64,
}

impl NormalMixturePosterior {
    pub fn single(mu: f64, tau2: f64) -> Self {
        Self {
            w_star: 0.0,
            mu_h: mu,
            tau2_h: tau2,
            mu_0: mu,
            tau2_0: tau2,
        }
    }

    pub fn pdf(&self, u: f64) -> f64 {
        self.w_star * specfun::log_normal_pdf(u, self.mu_h, self.tau2_h).exp()
            + (1.0 - self.w_star) * specfun::log_normal_pdf(u, self.mu_0, self.tau2_0).exp()
    }
}

impl PosteriorSummary for NormalMixturePosterior {
    fn mean(&self) -> f64 {
        self.w_star * self.mu_h + (1.0 - self.w_star) * self.mu_0
    }

    fn cdf(&self, u: f64) -> f64 {
        let zh = (u - self.mu_h) / self.tau2_h.sqrt();
        let z0 = (u - self.mu_0) / self.tau2_0.sqrt();
        self.w_star * specfun::normal_cdf(zh) + (1.0 - self.w_star) * specfun::normal_cdf(z0)
    }

    fn support(&self) -> (f64, f64) {
        let sh = self.tau2_h.sqrt();
        let s0 = self.tau2_0.sqrt();
        let lo = (self.mu_h - 10.0 * sh).min(self.mu_0 - 10.0 * s0);
        let hi = (self.mu_h + 10.0 * sh).max(self.mu_0 + 10.0 * s0);
        (lo, hi)
    }
}

/// w* = logistic(logit(w_h) + log z_h − log z_0), with the endpoints w_h=0
/// and w_h=1 returned exactly.
pub(crate) fn mixture_weight(w_h: f64, log_z_h: f64, log_z_0: f64) -> f64 {
    if w_h <= 0.0 {
        0.0
    } else if w_h >= 1.0 {
        1.0
    } else {
        let logit = (w_h / (1.0 - w_h)).ln() + log_z_h - log_z_0;
        1.0 / (1.0 + (-logit).exp())
    }
}

fn check_weight(w_h: f64) -> Result<()> {
    if (0.0..=1.0).contains(&w_h) {
        Ok(())
    } else {
        Err(Error::OutOfRange {
            name: "w_h",
            value: w_h,
            lo: 0.0,
            hi: 1.0,
        })
    }
}

/// Binary-endpoint mixture posterior for prior weight w_h on borrowing.
pub fn binary_posterior(
    prior: &BetaShape,
    data: &BinaryDataset,
    hist: &HistoricalBinary,
    w_h: f64,
) -> Result<BinaryMixturePosterior> {
    check_weight(w_h)?;
    let (a, b) = (prior.a(), prior.b());
    let (x, n) = (data.x() as f64, data.n() as f64);
    let (xh, nh) = (hist.x_h() as f64, hist.n_h() as f64);

    let borrow = BetaShape::new(a + x + xh, b + n + nh - x - xh)?;
    let noborrow = BetaShape::new(a + x, b + n - x)?;
    let log_z_h = specfun::log_beta_unchecked(a + x + xh, b + n + nh - x - xh)
        - specfun::log_beta_unchecked(a + xh, b + nh - xh);
    let log_z_0 =
        specfun::log_beta_unchecked(a + x, b + n - x) - specfun::log_beta_unchecked(a, b);
    Ok(BinaryMixturePosterior {
        w_star: mixture_weight(w_h, log_z_h, log_z_0),
        borrow,
        noborrow,
        log_z_h,
        log_z_0,
    })
}

/// Continuous-endpoint mixture posterior for prior weight w_h on borrowing.
///
/// Borrow component: prior N(ȳ_h, σ²_h) with σ²_h = s²_h/n_h; no-borrow
/// component: prior N(vague_mean, vague_sd²). Marginal likelihoods are
/// z = φ(ȳ; prior mean, prior var + σ²/n).
pub fn continuous_posterior(
    stats: &ContinuousStats,
    hist: &HistoricalContinuous,
    w_h: f64,
) -> Result<NormalMixturePosterior> {
    check_weight(w_h)?;
    let n = stats.n() as f64;
    let ybar = stats.ybar();
    let sig2n = stats.sigma() * stats.sigma() / n;

    let update = |m0: f64, v0: f64| -> (f64, f64) {
        let tau2 = 1.0 / (1.0 / v0 + 1.0 / sig2n);
        let mu = tau2 * (m0 / v0 + ybar / sig2n);
        (mu, tau2)
    };
    let vh = hist.sigma_h2();
    let v0 = hist.vague_sd * hist.vague_sd;
    let (mu_h, tau2_h) = update(hist.ybar_h, vh);
    let (mu_0, tau2_0) = update(hist.vague_mean, v0);
    debug_assert!(tau2_h <= vh.min(sig2n) + 1e-12);

    let log_z_h = specfun::log_normal_pdf(ybar, hist.ybar_h, vh + sig2n);
    let log_z_0 = specfun::log_normal_pdf(ybar, hist.vague_mean, v0 + sig2n);
    Ok(NormalMixturePosterior {
        w_star: mixture_weight(w_h, log_z_h, log_z_0),
        mu_h,
        tau2_h,
        mu_0,
        tau2_0,
    })
}

/// Posterior when the borrowing weight itself has a prior: under a
/// two-point mixture the marginal posterior depends on the weight prior
/// only through its mean, so this delegates to [`binary_posterior`] at
/// w_h = E[w].
pub fn marginal_posterior_via_weight_prior(
    prior: &BetaShape,
    data: &BinaryDataset,
    hist: &HistoricalBinary,
    weight_prior: &BetaShape,
) -> Result<BinaryMixturePosterior> {
    binary_posterior(prior, data, hist, weight_prior.mean())
}

/// P(θ_t > θ_c) for two Beta-mixture posteriors by 256-point
/// Gauss-Legendre on [0,1]:
///
///   ∫₀¹ f_c(u) (1 − F_t(u)) du
///
/// Accurate to ≤ 1e-8 for the posterior shapes that arise here (all
/// components have a, b ≥ 1, so the integrand is smooth on [0,1]).
pub fn prob_greater_binary(
    post_t: &BinaryMixturePosterior,
    post_c: &BinaryMixturePosterior,
) -> f64 {
    // per-component log-normalizers keep the product stable for large shapes
    struct Comp {
        a: f64,
        b: f64,
        ln_norm: f64,
        weight: f64,
    }
    let comps_of = |p: &BinaryMixturePosterior| -> [Comp; 2] {
        [
            Comp {
                a: p.borrow.a(),
                b: p.borrow.b(),
                ln_norm: specfun::log_beta_unchecked(p.borrow.a(), p.borrow.b()),
                weight: p.w_star,
            },
            Comp {
                a: p.noborrow.a(),
                b: p.noborrow.b(),
                ln_norm: specfun::log_beta_unchecked(p.noborrow.a(), p.noborrow.b()),
                weight: 1.0 - p.w_star,
            },
        ]
    };
    let cs = comps_of(post_c);
    let ts = comps_of(post_t);

    let mut acc = 0.0;
    for &(u, w) in gl256() {
        let lu = u.ln();
        let l1u = (1.0 - u).ln();
        let mut fc = 0.0;
        for c in &cs {
            if c.weight > 0.0 {
                fc += c.weight * ((c.a - 1.0) * lu + (c.b - 1.0) * l1u - c.ln_norm).exp();
            }
        }
        let mut ft = 0.0;
        for t in &ts {
            if t.weight > 0.0 {
                ft += t.weight * specfun::beta_cdf_unchecked(u, t.a, t.b);
            }
        }
        acc += w * fc * (1.0 - ft);
    }
    acc.clamp(0.0, 1.0)
}

/// P(θ_t > θ_c) for two normal-mixture posteriors, in closed form:
/// Σᵢ Σⱼ wᵢ wⱼ Φ((μ_t,i − μ_c,j)/√(τ²_t,i + τ²_c,j)).
pub fn prob_greater_normal(
    post_t: &NormalMixturePosterior,
    post_c: &NormalMixturePosterior,
) -> f64 {
    let t_comps = [
        (post_t.w_star, post_t.mu_h, post_t.tau2_h),
        (1.0 - post_t.w_star, post_t.mu_0, post_t.tau2_0),
    ];
    let c_comps = [
        (post_c.w_star, post_c.mu_h, post_c.tau2_h),
        (1.0 - post_c.w_star, post_c.mu_0, post_c.tau2_0),
    ];
    let mut acc = 0.0;
    for &(wt, mt, vt) in &t_comps {
        if wt == 0.0 {
            continue;
        }
        for &(wc, mc, vc) in &c_comps {
            if wc == 0.0 {
                continue;
            }
            acc += wt * wc * specfun::normal_cdf((mt - mc) / (vt + vc).sqrt());
        }
    }
    acc.clamp(0.0, 1.0)
}
