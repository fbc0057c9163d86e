//! Deterministic, parallel Monte-Carlo engine for operating
//! characteristics: threshold calibration, power / type-I error, and
//! relative bias / relative MSE versus the no-borrowing baseline.
//!
//! Determinism contract: every replicate owns an RNG derived from
//! (seed, rep_index) alone, and aggregation folds records in rep_index
//! order, so results are bitwise identical across worker counts.

use crate::error::{Error, Result};
use crate::model::{
    binary_posterior, continuous_posterior, posterior_mean, prob_greater_binary,
    prob_greater_normal, BetaShape, BinaryDataset, BinaryMixturePosterior, ContinuousStats,
    HistoricalBinary, HistoricalContinuous, NormalMixturePosterior,
};
use crate::policy::{gated, weight_for_binary, weight_for_continuous, WeightPolicy};
use crate::waic::{borrowing_region_binary, gate_continuous, BorrowingRegionBinary};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Which likelihood the trial simulates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Endpoint {
    Binary,
    Continuous,
}

fn default_alpha() -> f64 {
    0.05
}

fn default_reps() -> u64 {
    2000
}

/// Everything one simulation cell needs: truths, sample sizes, the
/// borrowing policy, and the replication plan.
///
/// `sigma`/`sigma0` apply to continuous endpoints only (`sigma0` is the
/// vague-prior sd, default 10); `vague_mean` centers the vague prior
/// (default 0). `calib_reps` overrides the replicate count used for
/// threshold calibration (default: same as `reps`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub endpoint: Endpoint,
    pub theta: f64,
    pub theta_t: f64,
    pub theta_h: f64,
    pub n: u64,
    pub n_t: u64,
    pub n_h: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma0: Option<f64>,
    #[serde(default)]
    pub vague_mean: f64,
    pub policy: WeightPolicy,
    #[serde(default)]
    pub gated: bool,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_reps")]
    pub reps: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub calib_reps: Option<u64>,
}

impl ScenarioConfig {
    /// Vague-prior sd with its default.
    pub fn sigma0_or_default(&self) -> f64 {
        self.sigma0.unwrap_or(10.0)
    }

    pub fn validate(&self) -> Result<()> {
        self.policy.validate()?;
        if self.n == 0 || self.n_t == 0 || self.n_h == 0 {
            return Err(Error::Config(format!(
                "sample sizes must be >= 1: n={} n_t={} n_h={}",
                self.n, self.n_t, self.n_h
            )));
        }
        if self.reps == 0 {
            return Err(Error::Config("reps must be >= 1".into()));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::OutOfRange {
                name: "alpha",
                value: self.alpha,
                lo: 0.0,
                hi: 1.0,
            });
        }
        match self.endpoint {
            Endpoint::Binary => {
                for (name, v) in [
                    ("theta", self.theta),
                    ("theta_t", self.theta_t),
                    ("theta_h", self.theta_h),
                ] {
                    if !(v > 0.0 && v < 1.0) {
                        return Err(Error::OutOfRange {
                            name,
                            value: v,
                            lo: 0.0,
                            hi: 1.0,
                        });
                    }
                }
            }
            Endpoint::Continuous => {
                match self.sigma {
                    Some(s) if s > 0.0 && s.is_finite() => {}
                    Some(s) => {
                        return Err(Error::NonPositive {
                            name: "sigma",
                            value: s,
                        })
                    }
                    None => {
                        return Err(Error::Config(
                            "continuous endpoint requires sigma".into(),
                        ))
                    }
                }
                let s0 = self.sigma0_or_default();
                if !(s0 > 0.0 && s0.is_finite()) {
                    return Err(Error::NonPositive {
                        name: "sigma0",
                        value: s0,
                    });
                }
                for (name, v) in [
                    ("theta", self.theta),
                    ("theta_t", self.theta_t),
                    ("theta_h", self.theta_h),
                    ("vague_mean", self.vague_mean),
                ] {
                    if !v.is_finite() {
                        return Err(Error::Config(format!("{name} must be finite, got {v}")));
                    }
                }
            }
        }
        Ok(())
    }

    /// Deterministic historical count x_h = round-half-even(n_h·θ_h).
    pub fn historical_binary(&self) -> Result<HistoricalBinary> {
        let x_h = (self.n_h as f64 * self.theta_h).round_ties_even() as u64;
        HistoricalBinary::new(x_h.min(self.n_h), self.n_h)
    }

    /// Deterministic historical summary: ȳ_h = θ_h, s²_h = σ² exactly.
    pub fn historical_continuous(&self) -> Result<HistoricalContinuous> {
        let sigma = self.sigma.ok_or_else(|| {
            Error::Config("continuous endpoint requires sigma".into())
        })?;
        HistoricalContinuous::new(
            self.theta_h,
            sigma * sigma,
            self.n_h,
            self.vague_mean,
            self.sigma0_or_default(),
        )
    }
}

/// One replicate's outcome.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReplicateRecord {
    pub reject: bool,
    /// The posterior probability statistic P(θ_t > θ_c | data).
    pub stat: f64,
    pub control_post_mean: f64,
    /// Control posterior mean under no borrowing, for relative metrics.
    pub np_post_mean: f64,
}

/// A calibrated decision threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationResult {
    pub threshold_c: f64,
    pub achieved_alpha: f64,
    pub reps_used: u64,
}

/// Aggregated operating characteristics of one scenario cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScenarioResult {
    pub rejection_rate: f64,
    pub mean_estimate: f64,
    pub bias: f64,
    pub mse: f64,
    /// Mean of (control posterior mean − no-borrow posterior mean).
    pub rel_bias: f64,
    /// Mean of ((est − θ)² − (np est − θ)²).
    pub rel_mse: f64,
    /// √(p(1−p)/reps) for the rejection rate.
    pub mc_stderr: f64,
}

/// One cell of a sweep: an id for reporting, a method label, and the
/// scenario to run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub id: String,
    pub method: String,
    pub cfg: ScenarioConfig,
}

/// A sweep output row: the cell keys, the derived seed, the calibration
/// used, and the estimated operating characteristics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub id: String,
    pub method: String,
    pub gated: bool,
    pub theta: f64,
    pub theta_t: f64,
    pub theta_h: f64,
    pub n: u64,
    pub n_t: u64,
    pub n_h: u64,
    pub seed: u64,
    pub calibration: CalibrationResult,
    pub result: ScenarioResult,
}

// Per-scenario immutable context shared by all replicates.
struct Prepared {
    cfg: ScenarioConfig,
    prior: BetaShape,
    hist_b: Option<HistoricalBinary>,
    region_b: Option<BorrowingRegionBinary>,
    hist_c: Option<HistoricalContinuous>,
    sigma: f64,
}

impl Prepared {
    fn new(cfg: &ScenarioConfig) -> Result<Self> {
        cfg.validate()?;
        let prior = BetaShape::new(1.0, 1.0)?;
        let (mut hist_b, mut region_b, mut hist_c, mut sigma) = (None, None, None, 0.0);
        match cfg.endpoint {
            Endpoint::Binary => {
                let h = cfg.historical_binary()?;
                if cfg.gated {
                    region_b = Some(borrowing_region_binary(&prior, cfg.n, &h)?);
                }
                hist_b = Some(h);
            }
            Endpoint::Continuous => {
                hist_c = Some(cfg.historical_continuous()?);
                sigma = cfg.sigma.expect("validated above");
            }
        }
        Ok(Self {
            cfg: cfg.clone(),
            prior,
            hist_b,
            region_b,
            hist_c,
            sigma,
        })
    }

    fn rng_for(&self, rep_index: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.cfg.seed);
        rng.set_stream(rep_index);
        rng
    }

    // (stat, control posterior mean, no-borrow posterior mean)
    fn simulate_one(&self, rep_index: u64) -> (f64, f64, f64) {
        let mut rng = self.rng_for(rep_index);
        match self.cfg.endpoint {
            Endpoint::Binary => self.simulate_binary(&mut rng),
            Endpoint::Continuous => self.simulate_continuous(&mut rng),
        }
    }

    fn simulate_binary(&self, rng: &mut ChaCha8Rng) -> (f64, f64, f64) {
        let cfg = &self.cfg;
        let hist = self.hist_b.as_ref().expect("binary context");
        // control draws precede treatment draws; fixed order is part of the
        // determinism contract
        let x = Binomial::new(cfg.n, cfg.theta)
            .expect("validated probability")
            .sample(rng);
        let x_t = Binomial::new(cfg.n_t, cfg.theta_t)
            .expect("validated probability")
            .sample(rng);
        let data = BinaryDataset::new(x, cfg.n).expect("x <= n by construction");

        let mut decision =
            weight_for_binary(&cfg.policy, &self.prior, &data, hist).expect("validated policy");
        if let Some(region) = &self.region_b {
            if !region.contains(x) {
                decision.w_h = 0.0;
                decision.gated_out = true;
            }
        }
        let post = binary_posterior(&self.prior, &data, hist, decision.w_h)
            .expect("validated weight");
        let cpm = posterior_mean(&post);
        let npm = post.noborrow.mean();

        let post_t = BinaryMixturePosterior::single(
            BetaShape::new(1.0 + x_t as f64, 1.0 + (cfg.n_t - x_t) as f64)
                .expect("positive shapes"),
        );
        let stat = prob_greater_binary(&post_t, &post);
        (stat, cpm, npm)
    }

    fn simulate_continuous(&self, rng: &mut ChaCha8Rng) -> (f64, f64, f64) {
        let cfg = &self.cfg;
        let hist = self.hist_c.as_ref().expect("continuous context");
        let obs = Normal::new(cfg.theta, self.sigma).expect("validated sigma");
        let (mut s1, mut s2, mut s3, mut s4) = (0.0, 0.0, 0.0, 0.0);
        for _ in 0..cfg.n {
            let y = obs.sample(rng);
            let y2 = y * y;
            s1 += y;
            s2 += y2;
            s3 += y2 * y;
            s4 += y2 * y2;
        }
        let stats = ContinuousStats::new(cfg.n, s1, s2, s3, s4, self.sigma)
            .expect("sums satisfy moment inequalities");

        let obs_t = Normal::new(cfg.theta_t, self.sigma).expect("validated sigma");
        let mut t1 = 0.0;
        for _ in 0..cfg.n_t {
            t1 += obs_t.sample(rng);
        }
        let ybar_t = t1 / cfg.n_t as f64;

        let mut decision =
            weight_for_continuous(&cfg.policy, &stats, hist).expect("validated policy");
        if cfg.gated {
            let gate = gate_continuous(&stats, hist).expect("validated inputs");
            decision = gated(&gate, decision);
        }
        let post =
            continuous_posterior(&stats, hist, decision.w_h).expect("validated weight");
        let cpm = posterior_mean(&post);
        let npm = post.mu_0;

        // treatment arm: vague prior only
        let s2n = self.sigma * self.sigma / cfg.n_t as f64;
        let v0 = cfg.sigma0_or_default().powi(2);
        let tau2_t = 1.0 / (1.0 / v0 + 1.0 / s2n);
        let mu_t = tau2_t * (cfg.vague_mean / v0 + ybar_t / s2n);
        let post_t = NormalMixturePosterior::single(mu_t, tau2_t);
        let stat = prob_greater_normal(&post_t, &post);
        (stat, cpm, npm)
    }
}

/// Run a single replicate. `rep_index` must be below `cfg.reps`; the
/// record depends on (cfg, rep_index) only, never on worker scheduling.
///
/// Convenience entry point: it rebuilds the scenario context (including
/// the gated region scan) on every call, so loops should prefer
/// [`estimate_power`].
pub fn run_replicate(
    cfg: &ScenarioConfig,
    rep_index: u64,
    threshold_c: f64,
) -> Result<ReplicateRecord> {
    let prep = Prepared::new(cfg)?;
    let (stat, cpm, npm) = prep.simulate_one(rep_index);
    Ok(ReplicateRecord {
        reject: stat > threshold_c,
        stat,
        control_post_mean: cpm,
        np_post_mean: npm,
    })
}

/// Type-7 (linear-interpolation) empirical quantile of a sorted sample.
pub(crate) fn type7_quantile(sorted: &[f64], p: f64) -> f64 {
    let m = sorted.len();
    assert!(m >= 1, "quantile of an empty sample");
    let h = (m as f64 - 1.0) * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(m - 1);
    let frac = h - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

/// Warning text when a calibration replicate count is too small for a
/// stable tail quantile.
pub fn calibration_reps_warning(reps: u64) -> Option<String> {
    if reps < 100 {
        Some(format!(
            "calibration with reps = {reps} < 100 gives an unstable (1-alpha) quantile"
        ))
    } else {
        None
    }
}

/// Calibrate the rejection threshold C as the empirical (1−α) quantile of
/// the posterior-probability statistic under the null. `cfg_null` must
/// have `theta_t == theta`; the replicate count is `calib_reps` when set,
/// else `reps`.
pub fn calibrate_threshold(cfg_null: &ScenarioConfig) -> Result<CalibrationResult> {
    if cfg_null.theta_t != cfg_null.theta {
        return Err(Error::Config(format!(
            "calibration requires the null theta_t == theta, got theta_t = {} theta = {}",
            cfg_null.theta_t, cfg_null.theta
        )));
    }
    let reps = cfg_null.calib_reps.unwrap_or(cfg_null.reps);
    if reps == 0 {
        return Err(Error::Config("calib_reps must be >= 1".into()));
    }
    let prep = Prepared::new(cfg_null)?;
    let mut stats: Vec<f64> = (0..reps as usize)
        .into_par_iter()
        .map(|rep| prep.simulate_one(rep as u64).0)
        .collect();
    stats.sort_by(f64::total_cmp);
    let threshold_c = type7_quantile(&stats, 1.0 - cfg_null.alpha);
    let exceed = stats.iter().filter(|&&s| s > threshold_c).count();
    Ok(CalibrationResult {
        threshold_c,
        achieved_alpha: exceed as f64 / reps as f64,
        reps_used: reps,
    })
}

/// Estimate operating characteristics at a fixed threshold.
///
/// Replicates run in parallel but are collected and folded in rep_index
/// order, so the result is bitwise identical for any worker count.
pub fn estimate_power(cfg: &ScenarioConfig, threshold_c: f64) -> Result<ScenarioResult> {
    let prep = Prepared::new(cfg)?;
    let reps = cfg.reps;
    let records: Vec<(f64, f64, f64)> = (0..reps as usize)
        .into_par_iter()
        .map(|rep| prep.simulate_one(rep as u64))
        .collect();

    let mut rejects = 0u64;
    let (mut sum_est, mut sum_sq_err, mut sum_rel, mut sum_rel_sq) = (0.0, 0.0, 0.0, 0.0);
    for &(stat, cpm, npm) in &records {
        if stat > threshold_c {
            rejects += 1;
        }
        let err = cpm - cfg.theta;
        let np_err = npm - cfg.theta;
        sum_est += cpm;
        sum_sq_err += err * err;
        sum_rel += cpm - npm;
        sum_rel_sq += err * err - np_err * np_err;
    }
    let m = reps as f64;
    let p = rejects as f64 / m;
    Ok(ScenarioResult {
        rejection_rate: p,
        mean_estimate: sum_est / m,
        bias: sum_est / m - cfg.theta,
        mse: sum_sq_err / m,
        rel_bias: sum_rel / m,
        rel_mse: sum_rel_sq / m,
        mc_stderr: (p * (1.0 - p) / m).sqrt(),
    })
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

// Independent seeds per cell: power and calibration streams never collide
// across cells or with each other.
/// Derived (power, calibration) seed pair for the sweep cell at `index`
/// under `base_seed`. Public so that callers running only the calibration
/// stage obtain the same thresholds a full sweep would use.
pub fn cell_seeds(base_seed: u64, index: u64) -> (u64, u64) {
    let power = splitmix64(base_seed ^ splitmix64(2 * index));
    let calib = splitmix64(base_seed ^ splitmix64(2 * index + 1));
    (power, calib)
}

/// Calibrate-then-evaluate every cell of a sweep.
///
/// For each cell: derive (power, calibration) seeds from
/// (base_seed, cell index), calibrate C on the matched null (θ_t set to θ)
/// with the calibration seed, then estimate power at that C with the power
/// seed. Cells are independent and run in order.
pub fn sweep(cells: &[SweepCell], base_seed: u64) -> Result<Vec<SweepRow>> {
    if cells.is_empty() {
        return Err(Error::Config("sweep needs at least one cell".into()));
    }
    let mut rows = Vec::with_capacity(cells.len());
    for (index, cell) in cells.iter().enumerate() {
        let (power_seed, calib_seed) = cell_seeds(base_seed, index as u64);
        let mut null_cfg = cell.cfg.clone();
        null_cfg.theta_t = null_cfg.theta;
        null_cfg.seed = calib_seed;
        let calibration = calibrate_threshold(&null_cfg)?;

        let mut cfg = cell.cfg.clone();
        cfg.seed = power_seed;
        let result = estimate_power(&cfg, calibration.threshold_c)?;
        rows.push(SweepRow {
            id: cell.id.clone(),
            method: cell.method.clone(),
            gated: cfg.gated,
            theta: cfg.theta,
            theta_t: cfg.theta_t,
            theta_h: cfg.theta_h,
            n: cfg.n,
            n_t: cfg.n_t,
            n_h: cfg.n_h,
            seed: power_seed,
            calibration,
            result,
        });
    }
    Ok(rows)
}
