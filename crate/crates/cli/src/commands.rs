//! The five commands. Each renders its outputs in memory and reports whether
//! every audited inequality held.

use anyhow::{anyhow, Result};
use pinfield_core::audit::{
    audit_overlap_bound, audit_pinning_bound, check_gaussian_ibp, check_monotonicity,
    estimate_constants, scan_constant_field, scan_overlap_dgeq3, scan_overlap_scaling_d2,
    AuditEngine, BoundConstants, BoundReport, MonotonicityMode, ScalingScanResult, ScanSettings,
    FIELD_MONOTONICITY, GAUSSIAN_IBP, OVERLAP_BOUND, PINNING_BOUND, PINNING_MONOTONICITY,
};
use pinfield_core::gaussian::{exact_mixed_solution, green_diagonal_scan, infinite_volume_green_origin};
use pinfield_core::rng::{derive_seed, tags};
use pinfield_core::sampler::{
    disorder_average, estimate_observables, exact_applicable, AverageConfig, DisorderAverage,
    EngineUsed, InnerEngine,
};
use pinfield_core::{sample_disorder, FieldConfig, ModelParams, Potential};
use rayon::prelude::*;
use serde_json::json;

use crate::config::{Command, Resolved, ScanKind};
use crate::output::{num, Outputs, Timer};

pub struct Outcome {
    pub outputs: Outputs,
    /// False when an audit or a scan verdict failed.
    pub holds: bool,
    /// One line per audited item for the terminal.
    pub summary: Vec<String>,
}

impl Outcome {
    fn new(outputs: Outputs) -> Self {
        Self {
            outputs,
            holds: true,
            summary: vec![],
        }
    }
}

pub fn run(res: &Resolved, timer: &mut Timer) -> Result<Outcome> {
    match res.config.command {
        Command::Exact => exact(res, timer),
        Command::Sample => sample(res, timer),
        Command::Audit => audit(res, timer),
        Command::Scan => scan(res, timer),
        Command::Green => green(res, timer),
    }
}

fn curvature(pot: &Potential) -> Result<f64> {
    match *pot {
        Potential::Gaussian { curvature } => Ok(curvature),
        _ => Err(anyhow!("the exact engine needs a gaussian potential")),
    }
}

/// Fields of replica `r`: the explicit file, the master seed itself for a
/// single replica, or the per-replica seed used by the disorder averages.
fn fields(res: &Resolved, r: usize) -> Result<FieldConfig> {
    if let Some(eta) = &res.fixed_eta {
        return Ok(eta.clone());
    }
    let master = res.config.disorder.master_seed;
    let seed = if res.config.disorder.replicas == 1 {
        master
    } else {
        derive_seed(master, tags::REPLICA, r as u64)
    };
    Ok(sample_disorder(res.law, res.volume()?, seed)?)
}

fn params(res: &Resolved, eta: FieldConfig) -> Result<ModelParams> {
    Ok(ModelParams::new(
        res.volume()?.clone(),
        res.potential,
        res.config.model.epsilon,
        eta,
    )?)
}

const ESTIMATE_HEADER: [&str; 6] = ["replica", "observable", "mean", "stderr", "sweeps", "seed"];

fn estimate_row(replica: &str, name: &str, mean: f64, stderr: f64, sweeps: usize, seed: u64) -> Vec<String> {
    vec![
        replica.into(),
        name.into(),
        num(mean),
        num(stderr),
        sweeps.to_string(),
        seed.to_string(),
    ]
}

fn average_rows(avg: &DisorderAverage, sweeps: usize, master: u64) -> Vec<Vec<String>> {
    let mut rows = vec![];
    for r in &avg.replicas {
        let s = if r.engine == EngineUsed::Exact { 0 } else { sweeps };
        let id = r.replica.to_string();
        rows.push(estimate_row(&id, "overlap", r.overlap.mean, r.overlap.stderr, s, r.disorder_seed));
        rows.push(estimate_row(
            &id,
            "pinned_fraction",
            r.pinned_fraction.mean,
            r.pinned_fraction.stderr,
            s,
            r.disorder_seed,
        ));
    }
    let s = if avg.replicas[0].engine == EngineUsed::Exact { 0 } else { sweeps };
    for (name, e) in [
        ("overlap", avg.overlap),
        ("pinned_fraction", avg.pinned_fraction),
        ("variance_sum", avg.variance_sum),
    ] {
        rows.push(estimate_row("all", name, e.mean, e.stderr, s, master));
    }
    rows
}

fn average_summary(avg: &DisorderAverage) -> serde_json::Value {
    json!({
        "replicas": avg.replicas.len(),
        "units": avg.units,
        "engine": avg.replicas[0].engine,
        "overlap": avg.overlap,
        "pinned_fraction": avg.pinned_fraction,
        "variance_sum": avg.variance_sum,
    })
}

fn coordinate_names(d: usize) -> Vec<String> {
    (0..d)
        .map(|a| match a {
            0 => "site_x".to_string(),
            1 => "site_y".to_string(),
            2 => "site_z".to_string(),
            _ => format!("site_x{a}"),
        })
        .collect()
}

fn exact(res: &Resolved, timer: &mut Timer) -> Result<Outcome> {
    let vol = res.volume()?;
    let c = curvature(&res.potential)?;
    let cfg = &res.config;
    let mut out = Outputs::default();
    let mut summary = vec![];
    if cfg.disorder.replicas == 1 {
        let eta = fields(res, 0)?;
        let s = exact_mixed_solution(vol, &eta, cfg.model.epsilon, c)?;
        timer.lap("exact");
        let names = coordinate_names(vol.dimension());
        let mut header: Vec<&str> = names.iter().map(String::as_str).collect();
        header.extend(["pin_prob", "mean", "second_moment"]);
        let rows = (0..vol.len())
            .map(|i| {
                let mut row: Vec<String> = vol.site(i).iter().map(|x| x.to_string()).collect();
                row.extend([num(s.pin_probability[i]), num(s.mean[i]), num(s.second_moment[i])]);
                row
            })
            .collect();
        out.csv("exact.csv", &header, rows)?;
        out.json(
            "summary.json",
            &json!({
                "log_z": s.log_z,
                "overlap": s.overlap,
                "pinned_fraction": s.pinned_fraction,
                "variance_sum": s.variance_sum(),
                "eta": eta,
            }),
        )?;
        summary.push(format!(
            "log Z = {}, overlap = {}, pinned fraction = {}",
            s.log_z, s.overlap, s.pinned_fraction
        ));
    } else {
        let template = params(res, FieldConfig::zeros(vol))?;
        let avg = disorder_average(
            &template,
            res.law,
            &AverageConfig {
                replicas: cfg.disorder.replicas,
                master_seed: cfg.disorder.master_seed,
                engine: InnerEngine::Exact,
                sampler: None,
                antithetic: false,
            },
        )?;
        timer.lap("exact");
        out.csv("estimates.csv", &ESTIMATE_HEADER, average_rows(&avg, 0, cfg.disorder.master_seed))?;
        out.json("summary.json", &average_summary(&avg))?;
        summary.push(format!("overlap = {} +- {}", avg.overlap.mean, avg.overlap.stderr));
    }
    let mut o = Outcome::new(out);
    o.summary = summary;
    Ok(o)
}

fn sample(res: &Resolved, timer: &mut Timer) -> Result<Outcome> {
    let vol = res.volume()?;
    let cfg = &res.config;
    let master = cfg.disorder.master_seed;
    let sampler = cfg.sampler.sampler_config(master)?;
    let mut out = Outputs::default();
    let mut summary = vec![];
    if cfg.disorder.replicas == 1 {
        let p = params(res, fields(res, 0)?)?;
        let est = estimate_observables(&p, &sampler)?;
        timer.lap("sample");
        let rows = est
            .named()
            .into_iter()
            .map(|(name, e)| estimate_row("0", &name, e.mean, e.stderr, est.sweeps, est.seed))
            .collect();
        out.csv("estimates.csv", &ESTIMATE_HEADER, rows)?;
        out.json(
            "summary.json",
            &json!({
                "overlap": est.overlap,
                "pinned_fraction": est.pinned_fraction,
                "batches": est.batches,
                "batch_len": est.batch_len,
                "max_half_split_z": est.max_half_split_z,
                "slow_mixing": est.slow_mixing,
            }),
        )?;
        if est.slow_mixing {
            summary.push(format!(
                "warning: halves of the chain disagree (max z = {:.2}); error bars are unreliable",
                est.max_half_split_z
            ));
        }
        summary.push(format!("overlap = {} +- {}", est.overlap.mean, est.overlap.stderr));
    } else {
        let template = params(res, FieldConfig::zeros(vol))?;
        let avg = disorder_average(
            &template,
            res.law,
            &AverageConfig {
                replicas: cfg.disorder.replicas,
                master_seed: master,
                engine: InnerEngine::Mcmc,
                sampler: Some(sampler.clone()),
                antithetic: false,
            },
        )?;
        timer.lap("sample");
        out.csv("estimates.csv", &ESTIMATE_HEADER, average_rows(&avg, sampler.sweeps, master))?;
        out.json("summary.json", &average_summary(&avg))?;
        summary.push(format!("overlap = {} +- {}", avg.overlap.mean, avg.overlap.stderr));
    }
    let mut o = Outcome::new(out);
    o.summary = summary;
    Ok(o)
}

fn audit(res: &Resolved, timer: &mut Timer) -> Result<Outcome> {
    let cfg = &res.config;
    let a = &cfg.audit;
    let vol = res.volume()?;
    let master = cfg.disorder.master_seed;
    let replicas = cfg.disorder.replicas;
    let wants = |id: &str| a.inequalities.iter().any(|s| s == id);

    let constants: Option<BoundConstants> = if wants(OVERLAP_BOUND) || wants(PINNING_BOUND) {
        let sweep: Vec<u32> = (0..=a.sweep_max).collect();
        let c = estimate_constants(&res.potential, vol.dimension(), &sweep)?;
        timer.lap("constants");
        Some(c)
    } else {
        None
    };
    let engine_for = |p: &ModelParams, r: usize| -> Result<AuditEngine> {
        let mcmc = || -> Result<AuditEngine> {
            let seed = derive_seed(master, tags::CHAIN, r as u64);
            Ok(AuditEngine::Mcmc(cfg.sampler.sampler_config(seed)?))
        };
        match a.engine {
            InnerEngine::Exact => Ok(AuditEngine::Exact),
            InnerEngine::Mcmc => mcmc(),
            InnerEngine::Auto if exact_applicable(p) => Ok(AuditEngine::Exact),
            InnerEngine::Auto => mcmc(),
        }
    };

    let mut reports: Vec<BoundReport> = vec![];
    for id in &a.inequalities {
        let batch: Vec<BoundReport> = if id == GAUSSIAN_IBP {
            let template = params(res, FieldConfig::zeros(vol))?;
            vec![check_gaussian_ibp(&template, res.law, replicas, master)?]
        } else {
            (0..replicas)
                .into_par_iter()
                .map(|r| -> Result<BoundReport> {
                    let eta = fields(res, r)?;
                    let p = params(res, eta.clone())?;
                    let c = || constants.as_ref().expect("computed above");
                    Ok(match id.as_str() {
                        OVERLAP_BOUND => audit_overlap_bound(&p, c(), &engine_for(&p, r)?)?,
                        PINNING_BOUND => audit_pinning_bound(&p, a.epsilon0, c(), &engine_for(&p, r)?)?,
                        FIELD_MONOTONICITY => check_monotonicity(
                            vol,
                            &eta,
                            curvature(&res.potential)?,
                            cfg.model.epsilon,
                            MonotonicityMode::Field,
                            &a.field_grid,
                        )?,
                        PINNING_MONOTONICITY => check_monotonicity(
                            vol,
                            &eta,
                            curvature(&res.potential)?,
                            cfg.model.epsilon,
                            MonotonicityMode::Pinning,
                            &a.pinning_grid,
                        )?,
                        other => return Err(anyhow!("unknown inequality {other:?}")),
                    })
                })
                .collect::<Result<_>>()?
        };
        timer.lap(id);
        reports.extend(batch);
    }

    let mut out = Outputs::default();
    let lines: Vec<String> = reports.iter().map(BoundReport::to_json_line).collect();
    out.json_lines("reports.jsonl", &lines);
    let mut o = Outcome::new(out);
    o.holds = reports.iter().all(|r| r.holds);
    o.summary = reports
        .iter()
        .map(|r| {
            format!(
                "{} {} lhs={} rhs={} slack={}",
                if r.holds { "HOLDS" } else { "FAILS" },
                r.id,
                r.lhs,
                r.rhs,
                r.slack
            )
        })
        .collect();
    Ok(o)
}

fn scan(res: &Resolved, timer: &mut Timer) -> Result<Outcome> {
    let cfg = &res.config;
    let d = cfg.model.d;
    let sizes = &cfg.scan.sizes;
    let eps = cfg.model.epsilon;
    let settings = ScanSettings {
        replicas: cfg.disorder.replicas,
        master_seed: cfg.disorder.master_seed,
        sampler: Some(cfg.sampler.sampler_config(cfg.disorder.master_seed)?),
    };
    let result: ScalingScanResult = match cfg.scan.kind {
        ScanKind::Overlap => {
            let sweep: Vec<u32> = (0..=cfg.audit.sweep_max).collect();
            let constants = estimate_constants(&res.potential, d, &sweep)?;
            timer.lap("constants");
            if d == 2 {
                scan_overlap_scaling_d2(sizes, res.law, eps, &settings, &constants)?
            } else {
                scan_overlap_dgeq3(d, sizes, res.law, eps, &settings, &constants)?
            }
        }
        ScanKind::ConstantField => scan_constant_field(d, sizes, cfg.scan.h, eps, &settings)?,
    };
    timer.lap("scan");
    let (slope, r2) = result
        .fit
        .map(|f| (num(f.slope), num(f.r2)))
        .unwrap_or_default();
    let rows = result
        .points
        .iter()
        .map(|p| {
            vec![
                p.half_width.to_string(),
                num(p.value),
                num(p.stderr),
                result.normalization.label().to_string(),
                slope.clone(),
                r2.clone(),
                p.comparison.map(num).unwrap_or_default(),
                serde_json::to_value(p.engine)
                    .ok()
                    .and_then(|v| v.as_str().map(String::from))
                    .unwrap_or_default(),
            ]
        })
        .collect();
    let mut out = Outputs::default();
    out.csv(
        "scan.csv",
        &["L", "value", "stderr", "normalization", "fit_slope", "fit_r2", "comparison", "engine"],
        rows,
    )?;
    out.json("scan.json", &result)?;
    let mut o = Outcome::new(out);
    o.holds = result.verdict.holds;
    o.summary.push(format!(
        "{} scan verdict: {}",
        if result.verdict.holds { "HOLDS" } else { "FAILS" },
        serde_json::to_string(&result.verdict)?
    ));
    Ok(o)
}

fn green(res: &Resolved, timer: &mut Timer) -> Result<Outcome> {
    let d = res.config.model.d;
    let scan = green_diagonal_scan(d, &res.config.scan.sizes)?;
    let lattice_origin = if d >= 3 { Some(infinite_volume_green_origin(d)?) } else { None };
    timer.lap("green");
    let fit = scan.diagonal_fit;
    let rows = scan
        .rows
        .iter()
        .map(|r| {
            vec![
                r.half_width.to_string(),
                num(r.g00),
                num(r.avg_diag),
                num(r.sum_all),
                num(fit.slope),
                num(fit.intercept),
            ]
        })
        .collect();
    let mut out = Outputs::default();
    out.csv("green.csv", &["L", "G00", "avg_diag", "sum_all", "fit_slope", "fit_intercept"], rows)?;
    out.json(
        "green.json",
        &json!({
            "scan": scan,
            "lattice_green_origin": lattice_origin,
        }),
    )?;
    let mut o = Outcome::new(out);
    o.summary.push(format!(
        "G(0,0) slope in log L = {}, sum exponent = {}",
        fit.slope, scan.sum_exponent_fit.slope
    ));
    if let (Some(g), Some(x)) = (lattice_origin, scan.extrapolated_origin) {
        o.summary.push(format!("G(0,0) on Z^{d} = {g}, extrapolated from boxes = {x}"));
    }
    Ok(o)
}
