//! Scenario configuration files: a single JSON document with top-level
//! keys `defaults` and `scenarios[]`. Every scenario carries the trial
//! dimensions (inheriting unset fields from `defaults`) plus a `methods[]`
//! list of weight policies to evaluate; each (scenario, method) pair
//! becomes one sweep cell.

use std::path::Path;

use serde::Deserialize;
use wow_core::policy::{Tail, WeightPolicy};
use wow_core::sim::{Endpoint, ScenarioConfig, SweepCell};

use crate::{usage_error, CliError, CliResult};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(default)]
    pub defaults: Defaults,
    pub scenarios: Vec<ScenarioEntry>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Defaults {
    pub endpoint: Option<String>,
    pub n: Option<u64>,
    pub n_t: Option<u64>,
    pub n_h: Option<u64>,
    pub theta_h: Option<f64>,
    pub sigma: Option<f64>,
    pub sigma0: Option<f64>,
    pub vague_mean: Option<f64>,
    pub alpha: Option<f64>,
    pub reps: Option<u64>,
    pub calib_reps: Option<u64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioEntry {
    pub id: String,
    pub theta: f64,
    pub theta_t: f64,
    pub endpoint: Option<String>,
    pub n: Option<u64>,
    pub n_t: Option<u64>,
    pub n_h: Option<u64>,
    pub theta_h: Option<f64>,
    pub sigma: Option<f64>,
    pub sigma0: Option<f64>,
    pub vague_mean: Option<f64>,
    pub alpha: Option<f64>,
    pub reps: Option<u64>,
    pub calib_reps: Option<u64>,
    pub methods: Vec<MethodEntry>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MethodEntry {
    pub name: String,
    pub policy: String,
    #[serde(default)]
    pub params: Params,
    #[serde(default)]
    pub gated: bool,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    pub w: Option<f64>,
    pub delta: Option<f64>,
    pub gamma: Option<f64>,
    pub tail: Option<String>,
    pub grid_step: Option<f64>,
}

/// Parse a config file; deserialization errors carry the JSON path of the
/// offending field.
pub fn load(path: &Path) -> CliResult<ConfigFile> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| usage_error(format!("cannot read config {}: {e}", path.display())))?;
    let de = &mut serde_json::Deserializer::from_str(&text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        usage_error(format!(
            "config {}: {}: {}",
            path.display(),
            e.path(),
            e.inner()
        ))
    })
}

fn parse_endpoint(s: &str, path: &str) -> CliResult<Endpoint> {
    match s {
        "binary" => Ok(Endpoint::Binary),
        "continuous" => Ok(Endpoint::Continuous),
        other => Err(usage_error(format!(
            "{path}: unknown endpoint {other:?}, expected \"binary\" or \"continuous\""
        ))),
    }
}

fn parse_tail(s: &str, path: &str) -> CliResult<Tail> {
    match s {
        "lower" => Ok(Tail::Lower),
        "upper" => Ok(Tail::Upper),
        "two_sided" => Ok(Tail::TwoSided),
        other => Err(usage_error(format!(
            "{path}: unknown tail {other:?}, expected \"lower\", \"upper\" or \"two_sided\""
        ))),
    }
}

fn require<T: Copy>(field: Option<T>, path: &str, hint: &str) -> CliResult<T> {
    field.ok_or_else(|| usage_error(format!("{path}: required {hint}")))
}

/// Build the weight policy of one method entry, reporting problems at
/// `path` (for example "scenarios[0].methods[2]").
fn build_policy(entry: &MethodEntry, path: &str) -> CliResult<WeightPolicy> {
    let p = &entry.params;
    let policy = match entry.policy.as_str() {
        "fixed" | "mix" => WeightPolicy::Fixed {
            w: require(p.w, &format!("{path}.params.w"), "for the fixed policy")?,
        },
        "sam" => WeightPolicy::Sam {
            delta: require(p.delta, &format!("{path}.params.delta"), "for the sam policy")?,
        },
        "eb_rmap" | "eb" => WeightPolicy::EbRmap {
            gamma: require(p.gamma, &format!("{path}.params.gamma"), "for the eb_rmap policy")?,
            tail: match &p.tail {
                Some(t) => parse_tail(t, &format!("{path}.params.tail"))?,
                None => Tail::TwoSided,
            },
            grid_step: p.grid_step.unwrap_or(0.01),
        },
        other => {
            return Err(usage_error(format!(
                "{path}.policy: unknown policy {other:?}, expected \"fixed\", \"mix\", \"sam\", \"eb_rmap\" or \"eb\""
            )))
        }
    };
    policy
        .validate()
        .map_err(|e| usage_error(format!("{path}.params: {e}")))?;
    Ok(policy)
}

/// Resolve defaults and expand every (scenario, method) pair into a sweep
/// cell, validating each resolved scenario.
pub fn into_cells(file: &ConfigFile) -> CliResult<Vec<SweepCell>> {
    if file.scenarios.is_empty() {
        return Err(usage_error("scenarios: must not be empty"));
    }
    let d = &file.defaults;
    let mut cells = Vec::new();
    for (i, sc) in file.scenarios.iter().enumerate() {
        let spath = format!("scenarios[{i}]");
        let endpoint_str = sc
            .endpoint
            .as_deref()
            .or(d.endpoint.as_deref())
            .unwrap_or("binary");
        let endpoint = parse_endpoint(endpoint_str, &format!("{spath}.endpoint"))?;
        if sc.methods.is_empty() {
            return Err(usage_error(format!("{spath}.methods: must not be empty")));
        }
        for (j, me) in sc.methods.iter().enumerate() {
            let mpath = format!("{spath}.methods[{j}]");
            let policy = build_policy(me, &mpath)?;
            let cfg = ScenarioConfig {
                endpoint,
                theta: sc.theta,
                theta_t: sc.theta_t,
                theta_h: require(
                    sc.theta_h.or(d.theta_h),
                    &format!("{spath}.theta_h"),
                    "(historical response level)",
                )?,
                n: require(sc.n.or(d.n), &format!("{spath}.n"), "(control arm size)")?,
                n_t: require(
                    sc.n_t.or(d.n_t),
                    &format!("{spath}.n_t"),
                    "(treatment arm size)",
                )?,
                n_h: require(
                    sc.n_h.or(d.n_h),
                    &format!("{spath}.n_h"),
                    "(historical arm size)",
                )?,
                sigma: sc.sigma.or(d.sigma),
                sigma0: sc.sigma0.or(d.sigma0),
                vague_mean: sc.vague_mean.or(d.vague_mean).unwrap_or(0.0),
                policy,
                gated: me.gated,
                alpha: sc.alpha.or(d.alpha).unwrap_or(0.05),
                reps: sc.reps.or(d.reps).unwrap_or(2_000),
                seed: 0,
                calib_reps: sc.calib_reps.or(d.calib_reps),
            };
            cfg.validate()
                .map_err(|e| usage_error(format!("{spath}: {e}")))?;
            cells.push(SweepCell {
                id: sc.id.clone(),
                method: me.name.clone(),
                cfg,
            });
        }
    }
    Ok(cells)
}

/// Resolve the base seed: the flag wins, then WOW_SEED, then 0.
pub fn resolve_seed(flag: Option<u64>) -> CliResult<u64> {
    if let Some(s) = flag {
        return Ok(s);
    }
    match std::env::var("WOW_SEED") {
        Ok(v) => v
            .trim()
            .parse::<u64>()
            .map_err(|_| usage_error(format!("WOW_SEED: cannot parse {v:?} as an unsigned seed"))),
        Err(_) => Ok(0),
    }
}

/// Run a closure inside a worker pool of the requested width (the whole
/// process pool when unset).
pub fn with_workers<T: Send>(
    workers: Option<usize>,
    f: impl FnOnce() -> T + Send,
) -> CliResult<T> {
    match workers {
        None => Ok(f()),
        Some(0) => Err(usage_error("--workers: must be at least 1")),
        Some(k) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(k)
                .build()
                .map_err(|e| CliError {
                    code: crate::exit_code::USAGE,
                    message: format!("--workers: {e}"),
                })?;
            Ok(pool.install(f))
        }
    }
}
