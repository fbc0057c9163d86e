//! Subcommand implementations mapping parsed arguments onto the library.

use std::collections::BTreeSet;

use wow_core::model::{
    BetaShape, BinaryDataset, ContinuousStats, HistoricalBinary, HistoricalContinuous,
    PosteriorSummary,
};
use wow_core::policy::{self, Tail, WeightPolicy};
use wow_core::sim::{self, SweepRow};
use wow_core::waic;

use crate::args::{
    CalibrateArgs, Cli, Command, EndpointArg, FormatArg, GateArgs, PolicyArg, RegionArgs,
    SimulateArgs, TailArg,
};
use crate::config;
use crate::output::{emit, Cell, RunManifest, Table};
use crate::{from_core, usage_error, CliResult};

pub fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Region(a) => cmd_region(&a),
        Command::Gate(a) => cmd_gate(&a),
        Command::Posterior(a) => cmd_posterior(&a),
        Command::Simulate(a) => cmd_simulate(&a),
        Command::Calibrate(a) => cmd_calibrate(&a),
    }
}

fn tail_from(t: TailArg) -> Tail {
    match t {
        TailArg::Lower => Tail::Lower,
        TailArg::Upper => Tail::Upper,
        TailArg::TwoSided => Tail::TwoSided,
    }
}

fn policy_from_args(args: &GateArgs) -> CliResult<WeightPolicy> {
    let p = match args.policy {
        PolicyArg::Fixed | PolicyArg::Mix => WeightPolicy::Fixed { w: args.w },
        PolicyArg::Sam => WeightPolicy::Sam { delta: args.delta },
        PolicyArg::EbRmap | PolicyArg::Eb => WeightPolicy::EbRmap {
            gamma: args.gamma,
            tail: tail_from(args.tail),
            grid_step: args.grid_step,
        },
    };
    p.validate().map_err(from_core)?;
    Ok(p)
}

fn require_flag<T: Copy>(v: Option<T>, flag: &str, endpoint: &str) -> CliResult<T> {
    v.ok_or_else(|| usage_error(format!("{flag} is required for --endpoint {endpoint}")))
}

/// Parse a "LO,HI,STEP" historical-size sweep specification.
fn parse_sweep(spec: &str) -> CliResult<Vec<u64>> {
    let parts: Vec<&str> = spec.split(',').collect();
    if parts.len() != 3 {
        return Err(usage_error(format!(
            "--sweep-nh: expected LO,HI,STEP, got {spec:?}"
        )));
    }
    let parse = |s: &str, name: &str| -> CliResult<u64> {
        s.trim()
            .parse::<u64>()
            .map_err(|_| usage_error(format!("--sweep-nh: cannot parse {name} from {s:?}")))
    };
    let (lo, hi, step) = (
        parse(parts[0], "LO")?,
        parse(parts[1], "HI")?,
        parse(parts[2], "STEP")?,
    );
    if lo == 0 || step == 0 || hi < lo {
        return Err(usage_error(
            "--sweep-nh: need LO >= 1, STEP >= 1 and HI >= LO",
        ));
    }
    Ok((lo..=hi).step_by(step as usize).collect())
}

// ---------------------------------------------------------------- region

fn cmd_region(args: &RegionArgs) -> CliResult<()> {
    let rendered = match args.endpoint {
        EndpointArg::Binary => region_binary(args)?,
        EndpointArg::Continuous => region_continuous(args)?,
    };
    emit(args.out.as_deref(), &rendered)
}

fn region_binary(args: &RegionArgs) -> CliResult<String> {
    let xh = require_flag(args.xh, "--xh", "binary")?;
    let prior = BetaShape::new(args.a, args.b).map_err(from_core)?;
    if let Some(spec) = &args.sweep_nh {
        if xh > args.nh {
            return Err(usage_error("x_h exceeds n_h"));
        }
        let rate = xh as f64 / args.nh as f64;
        let mut table = Table::new(vec!["n", "nh", "xh", "x_L", "x_U", "empty"]);
        for nh_i in parse_sweep(spec)? {
            let xh_i = ((rate * nh_i as f64).round_ties_even() as u64).min(nh_i);
            let hist = HistoricalBinary::new(xh_i, nh_i).map_err(from_core)?;
            let region = waic::borrowing_region_binary(&prior, args.n, &hist).map_err(from_core)?;
            table.push(vec![
                Cell::U64(args.n),
                Cell::U64(nh_i),
                Cell::U64(xh_i),
                Cell::U64(region.x_lower),
                Cell::U64(region.x_upper),
                Cell::Bool(region.empty),
            ]);
        }
        return Ok(table.render(args.format));
    }
    if xh > args.nh {
        return Err(usage_error("x_h exceeds n_h"));
    }
    let hist = HistoricalBinary::new(xh, args.nh).map_err(from_core)?;
    let region = waic::borrowing_region_binary(&prior, args.n, &hist).map_err(from_core)?;
    let mut out = String::new();
    if args.format == FormatArg::PrettyTable {
        if region.empty {
            out.push_str("region empty (no x with k <= 0)\n");
        } else {
            out.push_str(&format!("x_L={} x_U={}\n", region.x_lower, region.x_upper));
        }
    }
    if args.full {
        let mut table = Table::new(vec!["x", "waic0", "waic1", "k", "borrow"]);
        for x in 0..=args.n {
            let data = BinaryDataset::new(x, args.n).map_err(from_core)?;
            let w0 = waic::waic_binary_at_weight(&prior, &data, &hist, 0.0);
            let w1 = waic::waic_binary_at_weight(&prior, &data, &hist, 1.0);
            let k = w1.total - w0.total;
            table.push(vec![
                Cell::U64(x),
                Cell::F64(w0.total),
                Cell::F64(w1.total),
                Cell::F64(k),
                Cell::Bool(k <= 0.0),
            ]);
        }
        out.push_str(&table.render(args.format));
    } else if args.format != FormatArg::PrettyTable {
        let mut table = Table::new(vec!["n", "nh", "xh", "x_L", "x_U", "empty"]);
        table.push(vec![
            Cell::U64(args.n),
            Cell::U64(args.nh),
            Cell::U64(xh),
            Cell::U64(region.x_lower),
            Cell::U64(region.x_upper),
            Cell::Bool(region.empty),
        ]);
        out.push_str(&table.render(args.format));
    }
    Ok(out)
}

fn region_continuous(args: &RegionArgs) -> CliResult<String> {
    let ybarh = require_flag(args.ybarh, "--ybarh", "continuous")?;
    let s2h = require_flag(args.s2h, "--s2h", "continuous")?;
    let sigma = require_flag(args.sigma, "--sigma", "continuous")?;
    if let Some(spec) = &args.sweep_nh {
        let mut table = Table::new(vec!["n", "nh", "ybarh", "ybar_L", "ybar_U", "empty"]);
        for nh_i in parse_sweep(spec)? {
            let hist = HistoricalContinuous::new(ybarh, s2h, nh_i, args.vague_mean, args.vague_sd)
                .map_err(from_core)?;
            let region =
                waic::borrowing_region_continuous(args.n, sigma, &hist).map_err(from_core)?;
            table.push(vec![
                Cell::U64(args.n),
                Cell::U64(nh_i),
                Cell::F64(ybarh),
                Cell::F64(region.ybar_lower),
                Cell::F64(region.ybar_upper),
                Cell::Bool(region.empty),
            ]);
        }
        return Ok(table.render(args.format));
    }
    let hist = HistoricalContinuous::new(ybarh, s2h, args.nh, args.vague_mean, args.vague_sd)
        .map_err(from_core)?;
    let region = waic::borrowing_region_continuous(args.n, sigma, &hist).map_err(from_core)?;
    let mut out = String::new();
    if args.format == FormatArg::PrettyTable {
        if region.empty {
            out.push_str("region empty (no ybar with k <= 0)\n");
        } else {
            out.push_str(&format!(
                "ybar_L={:.6} ybar_U={:.6}\n",
                region.ybar_lower, region.ybar_upper
            ));
        }
    }
    if args.full {
        // grid over the region widened by 25% each side (a window around
        // the historical mean when the region is empty)
        let (lo, hi) = if region.empty {
            (ybarh - 2.0, ybarh + 2.0)
        } else {
            let w = region.ybar_upper - region.ybar_lower;
            (region.ybar_lower - 0.25 * w, region.ybar_upper + 0.25 * w)
        };
        let mut table = Table::new(vec!["ybar", "waic0", "waic1", "k", "borrow"]);
        for g in 0..=100u32 {
            let ybar = lo + (hi - lo) * f64::from(g) / 100.0;
            let stats = ContinuousStats::population(args.n, ybar, sigma).map_err(from_core)?;
            let w0 = waic::waic_continuous_at_weight(&stats, &hist, 0.0);
            let w1 = waic::waic_continuous_at_weight(&stats, &hist, 1.0);
            let k = w1.total - w0.total;
            table.push(vec![
                Cell::F64(ybar),
                Cell::F64(w0.total),
                Cell::F64(w1.total),
                Cell::F64(k),
                Cell::Bool(k <= 0.0),
            ]);
        }
        out.push_str(&table.render(args.format));
    } else if args.format != FormatArg::PrettyTable {
        let mut table = Table::new(vec!["n", "nh", "ybarh", "ybar_L", "ybar_U", "empty"]);
        table.push(vec![
            Cell::U64(args.n),
            Cell::U64(args.nh),
            Cell::F64(ybarh),
            Cell::F64(region.ybar_lower),
            Cell::F64(region.ybar_upper),
            Cell::Bool(region.empty),
        ]);
        out.push_str(&table.render(args.format));
    }
    Ok(out)
}

// ------------------------------------------------------------ gate records

struct GateRecord {
    borrow: bool,
    k: f64,
    waic0: f64,
    waic1: f64,
    w_h: f64,
    w_star: f64,
    mean: f64,
    ci_lo: f64,
    ci_hi: f64,
}

/// Evaluate gate + policy + posterior for either endpoint. `gate_weight`
/// selects whether the policy weight passes through the gate.
fn evaluate(args: &GateArgs, gate_weight: bool) -> CliResult<GateRecord> {
    let pol = policy_from_args(args)?;
    match args.endpoint {
        EndpointArg::Binary => {
            let x = require_flag(args.x, "--x", "binary")?;
            let xh = require_flag(args.xh, "--xh", "binary")?;
            if xh > args.nh {
                return Err(usage_error("x_h exceeds n_h"));
            }
            let prior = BetaShape::new(args.a, args.b).map_err(from_core)?;
            let data = BinaryDataset::new(x, args.n).map_err(from_core)?;
            let hist = HistoricalBinary::new(xh, args.nh).map_err(from_core)?;
            let gate = waic::gate_binary(&prior, &data, &hist).map_err(from_core)?;
            let decision = policy::weight_for_binary(&pol, &prior, &data, &hist).map_err(from_core)?;
            let decision = if gate_weight {
                policy::gated(&gate, decision)
            } else {
                decision
            };
            let post =
                wow_core::model::binary_posterior(&prior, &data, &hist, decision.w_h)
                    .map_err(from_core)?;
            Ok(GateRecord {
                borrow: gate.borrow,
                k: gate.k,
                waic0: gate.waic0.total,
                waic1: gate.waic1.total,
                w_h: decision.w_h,
                w_star: post.w_star,
                mean: post.mean(),
                ci_lo: post.quantile(0.025).map_err(from_core)?,
                ci_hi: post.quantile(0.975).map_err(from_core)?,
            })
        }
        EndpointArg::Continuous => {
            let ybar = require_flag(args.ybar, "--ybar", "continuous")?;
            let sigma = require_flag(args.sigma, "--sigma", "continuous")?;
            let ybarh = require_flag(args.ybarh, "--ybarh", "continuous")?;
            let s2h = require_flag(args.s2h, "--s2h", "continuous")?;
            let stats = ContinuousStats::population(args.n, ybar, sigma).map_err(from_core)?;
            let hist =
                HistoricalContinuous::new(ybarh, s2h, args.nh, args.vague_mean, args.vague_sd)
                    .map_err(from_core)?;
            let gate = waic::gate_continuous(&stats, &hist).map_err(from_core)?;
            let decision = policy::weight_for_continuous(&pol, &stats, &hist).map_err(from_core)?;
            let decision = if gate_weight {
                policy::gated(&gate, decision)
            } else {
                decision
            };
            let post = wow_core::model::continuous_posterior(&stats, &hist, decision.w_h)
                .map_err(from_core)?;
            Ok(GateRecord {
                borrow: gate.borrow,
                k: gate.k,
                waic0: gate.waic0.total,
                waic1: gate.waic1.total,
                w_h: decision.w_h,
                w_star: post.w_star,
                mean: post.mean(),
                ci_lo: post.quantile(0.025).map_err(from_core)?,
                ci_hi: post.quantile(0.975).map_err(from_core)?,
            })
        }
    }
}

fn gate_table(rec: &GateRecord) -> Table {
    let mut table = Table::new(vec![
        "borrow", "k", "waic0", "waic1", "w_h", "w_star", "mean", "ci_lo", "ci_hi",
    ]);
    table.push(vec![
        Cell::Bool(rec.borrow),
        Cell::F64(rec.k),
        Cell::F64(rec.waic0),
        Cell::F64(rec.waic1),
        Cell::F64(rec.w_h),
        Cell::F64(rec.w_star),
        Cell::F64(rec.mean),
        Cell::F64(rec.ci_lo),
        Cell::F64(rec.ci_hi),
    ]);
    table
}

fn render_gate(rec: &GateRecord, format: FormatArg) -> String {
    match format {
        FormatArg::PrettyTable => format!(
            "borrow={}\nk={:.6}\nwaic0={:.6}\nwaic1={:.6}\nw_h={:.6}\nw_star={:.6}\n\
             mean={:.6}\nci95=[{:.6}, {:.6}]\n",
            rec.borrow,
            rec.k,
            rec.waic0,
            rec.waic1,
            rec.w_h,
            rec.w_star,
            rec.mean,
            rec.ci_lo,
            rec.ci_hi
        ),
        other => gate_table(rec).render(other),
    }
}

fn cmd_gate(args: &GateArgs) -> CliResult<()> {
    let rec = evaluate(args, true)?;
    emit(args.out.as_deref(), &render_gate(&rec, args.format))
}

/// Posterior summary under the raw policy weight, bypassing the gate.
fn cmd_posterior(args: &GateArgs) -> CliResult<()> {
    let rec = evaluate(args, false)?;
    emit(args.out.as_deref(), &render_gate(&rec, args.format))
}

// -------------------------------------------------------------- simulate

fn sim_table(rows: &[SweepRow]) -> Table {
    let mut table = Table::new(vec![
        "id", "method", "gated", "theta", "theta_t", "theta_h", "n", "n_t", "n_h", "power",
        "bias", "mse", "rel_bias", "rel_mse", "mc_stderr", "C",
    ]);
    for r in rows {
        table.push(vec![
            Cell::Str(r.id.clone()),
            Cell::Str(r.method.clone()),
            Cell::Bool(r.gated),
            Cell::F64(r.theta),
            Cell::F64(r.theta_t),
            Cell::F64(r.theta_h),
            Cell::U64(r.n),
            Cell::U64(r.n_t),
            Cell::U64(r.n_h),
            Cell::F64(r.result.rejection_rate),
            Cell::F64(r.result.bias),
            Cell::F64(r.result.mse),
            Cell::F64(r.result.rel_bias),
            Cell::F64(r.result.rel_mse),
            Cell::F64(r.result.mc_stderr),
            Cell::F64(r.calibration.threshold_c),
        ]);
    }
    table
}

/// Emit each distinct low-replicate warning once, to stderr.
fn warn_small_reps(values: impl IntoIterator<Item = u64>) {
    let mut seen = BTreeSet::new();
    for v in values {
        if let Some(msg) = sim::calibration_reps_warning(v) {
            if seen.insert(v) {
                eprintln!("warning: {msg}");
            }
        }
    }
}

fn cmd_simulate(args: &SimulateArgs) -> CliResult<()> {
    let file = config::load(&args.config)?;
    let mut cells = config::into_cells(&file)?;
    let seed = config::resolve_seed(args.seed)?;
    if let Some(r) = args.reps {
        if r == 0 {
            return Err(usage_error("--reps: must be at least 1"));
        }
        for c in &mut cells {
            c.cfg.reps = r;
        }
    }
    warn_small_reps(
        args.reps
            .into_iter()
            .chain(cells.iter().map(|c| c.cfg.calib_reps.unwrap_or(c.cfg.reps))),
    );
    let rows = config::with_workers(args.workers, || sim::sweep(&cells, seed))?
        .map_err(from_core)?;
    let rendered = sim_table(&rows).render(args.format);
    emit(Some(&args.out), &rendered)?;
    let resolved = serde_json::json!({
        "cells": cells,
        "reps_override": args.reps,
        "workers": args.workers,
    });
    RunManifest::new("simulate", seed, resolved, &args.out, rendered.as_bytes())
        .write_sidecar(&args.out)
}

// -------------------------------------------------------------- calibrate

fn cmd_calibrate(args: &CalibrateArgs) -> CliResult<()> {
    let file = config::load(&args.config)?;
    let mut cells = config::into_cells(&file)?;
    let seed = config::resolve_seed(args.seed)?;
    if let Some(r) = args.reps {
        if r == 0 {
            return Err(usage_error("--reps: must be at least 1"));
        }
        for c in &mut cells {
            c.cfg.calib_reps = Some(r);
        }
    }
    warn_small_reps(cells.iter().map(|c| c.cfg.calib_reps.unwrap_or(c.cfg.reps)));
    let results = config::with_workers(args.workers, || {
        let mut out = Vec::with_capacity(cells.len());
        for (i, cell) in cells.iter().enumerate() {
            // same seed derivation as the full sweep, so thresholds match
            let (_power_seed, calib_seed) = sim::cell_seeds(seed, i as u64);
            let mut null_cfg = cell.cfg.clone();
            null_cfg.theta_t = null_cfg.theta;
            null_cfg.seed = calib_seed;
            match sim::calibrate_threshold(&null_cfg) {
                Ok(c) => out.push((i, c, calib_seed)),
                Err(e) => return Err(e),
            }
        }
        Ok(out)
    })?
    .map_err(from_core)?;
    let mut table = Table::new(vec![
        "id", "method", "gated", "theta", "theta_h", "n", "n_t", "n_h", "calib_seed", "C",
        "achieved_alpha", "reps_used",
    ]);
    for (i, cal, calib_seed) in results {
        let cell = &cells[i];
        table.push(vec![
            Cell::Str(cell.id.clone()),
            Cell::Str(cell.method.clone()),
            Cell::Bool(cell.cfg.gated),
            Cell::F64(cell.cfg.theta),
            Cell::F64(cell.cfg.theta_h),
            Cell::U64(cell.cfg.n),
            Cell::U64(cell.cfg.n_t),
            Cell::U64(cell.cfg.n_h),
            Cell::U64(calib_seed),
            Cell::F64(cal.threshold_c),
            Cell::F64(cal.achieved_alpha),
            Cell::U64(cal.reps_used),
        ]);
    }
    emit(args.out.as_deref(), &table.render(args.format))
}

/// Entry point used by main: run and convert the error into a process
/// exit. Split out so tests can call `run` directly.
pub fn main_impl() -> i32 {
    use clap::Parser as _;
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => crate::exit_code::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            e.code
        }
    }
}

