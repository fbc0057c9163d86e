//! Independent oracles for cross-checking the production numerics.
//!
//! Everything here is implemented from scratch against textbook formulas
//! (Lanczos log-gamma, large-shift asymptotic psi series, plain Monte
//! Carlo, adaptive Simpson) so agreement with the library is evidence, not
//! tautology.
#![allow(dead_code)]

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta as BetaDist, Distribution};

/// ln Γ(x) by the Lanczos approximation (g = 7, 9 coefficients), valid for
/// x > 0.
pub fn ref_ln_gamma(x: f64) -> f64 {
    const G: f64 = 7.0;
    const C: [f64; 9] = [
        0.999_999_999_999_809_93,
        676.520_368_121_885_1,
        -1259.139_216_722_402_8,
        771.323_428_777_653_13,
        -176.615_029_162_140_59,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_571_6e-6,
        1.505_632_735_149_311_6e-7,
    ];
    assert!(x > 0.0, "ref_ln_gamma domain");
    if x < 0.5 {
        // reflection: Γ(x)Γ(1−x) = π/sin(πx)
        return (std::f64::consts::PI / (std::f64::consts::PI * x).sin()).ln()
            - ref_ln_gamma(1.0 - x);
    }
    let z = x - 1.0;
    let mut acc = C[0];
    for (i, &c) in C.iter().enumerate().skip(1) {
        acc += c / (z + i as f64);
    }
    let t = z + G + 0.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (z + 0.5) * t.ln() - t + acc.ln()
}

pub fn ref_log_beta(a: f64, b: f64) -> f64 {
    ref_ln_gamma(a) + ref_ln_gamma(b) - ref_ln_gamma(a + b)
}

/// ψ(z) by shifting to z ≥ 50 and a short asymptotic series; the remainder
/// at the shift target is below 1e-16.
pub fn ref_digamma(z: f64) -> f64 {
    assert!(z > 0.0, "ref_digamma domain");
    let mut shifts = Vec::new();
    let mut t = z;
    while t < 50.0 {
        shifts.push(1.0 / t);
        t += 1.0;
    }
    let inv2 = 1.0 / (t * t);
    let series = t.ln() - 0.5 / t - inv2 * (1.0 / 12.0 - inv2 * (1.0 / 120.0 - inv2 / 252.0));
    let mut shift_sum = 0.0;
    for s in shifts.iter().rev() {
        shift_sum += s;
    }
    series - shift_sum
}

/// ψ₁(z) by the same shift-to-50 scheme.
pub fn ref_trigamma(z: f64) -> f64 {
    assert!(z > 0.0, "ref_trigamma domain");
    let mut shifts = Vec::new();
    let mut t = z;
    while t < 50.0 {
        shifts.push(1.0 / (t * t));
        t += 1.0;
    }
    let inv2 = 1.0 / (t * t);
    let series = 1.0 / t
        + 0.5 * inv2
        + inv2 / t * (1.0 / 6.0 - inv2 * (1.0 / 30.0 - inv2 * (1.0 / 42.0 - inv2 / 30.0)));
    let mut shift_sum = 0.0;
    for s in shifts.iter().rev() {
        shift_sum += s;
    }
    series + shift_sum
}

/// Beta(a, b) log-density via the Lanczos normalizer.
pub fn ref_beta_log_pdf(u: f64, a: f64, b: f64) -> f64 {
    (a - 1.0) * u.ln() + (b - 1.0) * (1.0 - u).ln() - ref_log_beta(a, b)
}

/// A Monte-Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy)]
pub struct McEstimate {
    pub value: f64,
    pub se: f64,
}

impl McEstimate {
    pub fn within(&self, target: f64, n_se: f64, abs_floor: f64) -> bool {
        (self.value - target).abs() <= n_se * self.se + abs_floor
    }
}

fn batch_summary(batch_values: &[f64]) -> McEstimate {
    let b = batch_values.len() as f64;
    let mean = batch_values.iter().sum::<f64>() / b;
    let var = batch_values
        .iter()
        .map(|v| (v - mean) * (v - mean))
        .sum::<f64>()
        / (b - 1.0);
    McEstimate {
        value: mean,
        se: (var / b).sqrt(),
    }
}

/// Monte-Carlo WAIC for the binary two-component Beta mixture posterior,
/// by direct posterior sampling and batch means. The mixture components
/// are rebuilt here from the conjugate update; nothing is shared with the
/// production closed form.
///
/// WAIC = −2·Σᵢ E[ln p(yᵢ|θ)] + 2·Σᵢ Var[ln p(yᵢ|θ)], with the x success
/// terms contributing ln θ and the n − x failure terms ln(1−θ).
#[allow(clippy::too_many_arguments)]
pub fn mc_waic_binary(
    a: f64,
    b: f64,
    x: u64,
    n: u64,
    x_h: u64,
    n_h: u64,
    w_star: f64,
    batches: usize,
    batch_size: usize,
    seed: u64,
) -> McEstimate {
    let (xf, nf) = (x as f64, n as f64);
    let (xh, nh) = (x_h as f64, n_h as f64);
    let comp_h = BetaDist::new(a + xf + xh, b + nf + nh - xf - xh).expect("valid shapes");
    let comp_0 = BetaDist::new(a + xf, b + nf - xf).expect("valid shapes");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut batch_waic = Vec::with_capacity(batches);
    for _ in 0..batches {
        let m = batch_size as f64;
        let (mut s_ln, mut s_ln2, mut s_l1, mut s_l12) = (0.0, 0.0, 0.0, 0.0);
        for _ in 0..batch_size {
            let theta = if rng.random::<f64>() < w_star {
                comp_h.sample(&mut rng)
            } else {
                comp_0.sample(&mut rng)
            };
            let lt = theta.ln();
            let l1 = (1.0 - theta).ln();
            s_ln += lt;
            s_ln2 += lt * lt;
            s_l1 += l1;
            s_l12 += l1 * l1;
        }
        let e_ln = s_ln / m;
        let v_ln = (s_ln2 - m * e_ln * e_ln) / (m - 1.0);
        let e_l1 = s_l1 / m;
        let v_l1 = (s_l12 - m * e_l1 * e_l1) / (m - 1.0);
        let fit = -2.0 * (xf * e_ln + (nf - xf) * e_l1);
        let pen = 2.0 * (xf * v_ln + (nf - xf) * v_l1);
        batch_waic.push(fit + pen);
    }
    batch_summary(&batch_waic)
}

/// Monte-Carlo WAIC for the continuous two-component normal mixture
/// posterior, from the power sums. Component posteriors are rebuilt from
/// the normal-normal update; per-observation sums collapse onto the power
/// sums because ln p(y|θ) is quadratic in both y and θ:
///
///   Σᵢ E[ln p(yᵢ|θ)]  = n·c − (s₂ − 2 s₁ E[θ] + n E[θ²])/(2σ²)
///   Σᵢ Var[ln p(yᵢ|θ)] = (4 s₂ V[θ] + n V[θ²] − 4 s₁ Cov[θ, θ²])/(4σ⁴)
#[allow(clippy::too_many_arguments)]
pub fn mc_waic_continuous(
    n: u64,
    s1: f64,
    s2: f64,
    sigma: f64,
    ybar_h: f64,
    sigma_h2: f64,
    vague_mean: f64,
    vague_sd: f64,
    w_star: f64,
    batches: usize,
    batch_size: usize,
    seed: u64,
) -> McEstimate {
    use rand_distr::Normal;
    let nf = n as f64;
    let sig2 = sigma * sigma;
    let sig2n = sig2 / nf;
    let ybar = s1 / nf;
    let update = |m0: f64, v0: f64| {
        let tau2 = 1.0 / (1.0 / v0 + 1.0 / sig2n);
        (tau2 * (m0 / v0 + ybar / sig2n), tau2)
    };
    let (mu_h, tau2_h) = update(ybar_h, sigma_h2);
    let (mu_0, tau2_0) = update(vague_mean, vague_sd * vague_sd);
    let comp_h = Normal::new(mu_h, tau2_h.sqrt()).expect("valid sd");
    let comp_0 = Normal::new(mu_0, tau2_0.sqrt()).expect("valid sd");
    let c = -0.5 * (2.0 * std::f64::consts::PI * sig2).ln();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut batch_waic = Vec::with_capacity(batches);
    for _ in 0..batches {
        let m = batch_size as f64;
        // raw moments of θ and θ², plus the cross moment for the covariance
        let (mut m1, mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0, 0.0);
        for _ in 0..batch_size {
            let theta = if rng.random::<f64>() < w_star {
                comp_h.sample(&mut rng)
            } else {
                comp_0.sample(&mut rng)
            };
            let t2 = theta * theta;
            m1 += theta;
            m2 += t2;
            m3 += theta * t2;
            m4 += t2 * t2;
        }
        let e1 = m1 / m;
        let e2 = m2 / m;
        let e3 = m3 / m;
        let e4 = m4 / m;
        let bessel = m / (m - 1.0);
        let v1 = (e2 - e1 * e1) * bessel;
        let v2 = (e4 - e2 * e2) * bessel;
        let cov12 = (e3 - e1 * e2) * bessel;
        let fit = nf * c - (s2 - 2.0 * s1 * e1 + nf * e2) / (2.0 * sig2);
        let pen = (4.0 * s2 * v1 + nf * v2 - 4.0 * s1 * cov12) / (4.0 * sig2 * sig2);
        batch_waic.push(-2.0 * fit + 2.0 * pen);
    }
    batch_summary(&batch_waic)
}

/// Adaptive Simpson quadrature to tolerance `tol` on [a, b].
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(a: f64, fa: f64, b: f64, fb: f64, fm: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        fm: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = simpson(a, fa, m, fm, flm);
        let right = simpson(m, fm, b, fb, frm);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            recurse(f, a, fa, m, fm, flm, left, 0.5 * tol, depth - 1)
                + recurse(f, m, fm, b, fb, frm, right, 0.5 * tol, depth - 1)
        }
    }
    let fa = f(a);
    let fb = f(b);
    let fm = f(0.5 * (a + b));
    let whole = simpson(a, fa, b, fb, fm);
    recurse(f, a, fa, b, fb, fm, whole, tol, 40)
}

/// Sample mean and standard error of a slice.
pub fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Deterministic stream of uniform integers in [lo, hi] for test-config
/// generation.
pub struct ConfigRng(pub ChaCha8Rng);

impl ConfigRng {
    pub fn new(seed: u64) -> Self {
        Self(ChaCha8Rng::seed_from_u64(seed))
    }

    pub fn int(&mut self, lo: u64, hi: u64) -> u64 {
        lo + self.0.random::<u64>() % (hi - lo + 1)
    }

    pub fn real(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.0.random::<f64>()
    }

    pub fn log_real(&mut self, lo: f64, hi: f64) -> f64 {
        (self.real(lo.ln(), hi.ln())).exp()
    }
}
