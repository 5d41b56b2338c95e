//! Monte-Carlo harness: factorial parameter sweeps over paired channel
//! realizations, with CSV rows per trial and a JSON summary per sweep point.
//!
//! Pairing discipline: the channel seed depends only on the trial index, so
//! every scheme and every sweep point at the same index sees channels drawn
//! from the same seed (identical realizations whenever the dimensions
//! agree).

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::channels::generate_channels;
use crate::config::{derive_trial_seed, dbm_to_watts, Scheme, SystemConfig};
use crate::opt::{alternating_optimize, TraceRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TrialStatus {
    Ok,
    Failed,
}

/// One optimization run at one sweep point.
#[derive(Debug, Clone, Serialize)]
pub struct TrialReport {
    pub scheme: Scheme,
    pub trial: usize,
    pub seed: u64,
    /// Swept `(field, value)` pairs, at most two.
    pub sweep: Vec<(String, f64)>,
    pub status: TrialStatus,
    pub reason: String,
    pub see: f64,
    pub r_sec_min: f64,
    pub power_w: f64,
    pub p_eh_sum_w: f64,
    pub harvested_w: f64,
    pub outer_iterations: usize,
    pub wall_ms: f64,
}

/// Up to two config fields with their value lists; empty means a single run
/// at the base configuration.
#[derive(Debug, Clone, Default)]
pub struct SweepSpec {
    pub fields: Vec<(String, Vec<f64>)>,
}

impl SweepSpec {
    /// Parses `field=v1,v2,...`.
    pub fn parse_axis(text: &str) -> Result<(String, Vec<f64>), String> {
        let (name, values) = text
            .split_once('=')
            .ok_or_else(|| format!("sweep axis '{text}' is not of the form field=v1,v2"))?;
        let values: Result<Vec<f64>, _> =
            values.split(',').map(|v| v.trim().parse::<f64>()).collect();
        let values = values.map_err(|e| format!("sweep axis '{text}': {e}"))?;
        if values.is_empty() {
            return Err(format!("sweep axis '{text}' has no values"));
        }
        Ok((name.trim().to_string(), values))
    }

    /// Cartesian product of the axes; a single empty point when no axis.
    fn points(&self) -> Vec<Vec<(String, f64)>> {
        let mut points = vec![Vec::new()];
        for (name, values) in &self.fields {
            let mut next = Vec::with_capacity(points.len() * values.len());
            for p in &points {
                for &v in values {
                    let mut q = p.clone();
                    q.push((name.clone(), v));
                    next.push(q);
                }
            }
            points = next;
        }
        points
    }
}

/// Evenly spaced positions on a circle, matching the two-element desk
/// defaults at `n = 2`.
fn ring(center: [f64; 2], radius: f64, n: usize) -> Vec<[f64; 2]> {
    (0..n)
        .map(|i| {
            let angle = std::f64::consts::FRAC_PI_2
                + std::f64::consts::TAU * i as f64 / n.max(1) as f64;
            [center[0] + radius * angle.cos(), center[1] + radius * angle.sin()]
        })
        .collect()
}

/// Applies one swept value to the configuration. Counts that change the
/// terminal population also regenerate the corresponding positions.
pub fn apply_field(cfg: &mut SystemConfig, name: &str, value: f64) -> Result<(), String> {
    let as_count = || -> Result<usize, String> {
        if value.fract() != 0.0 || value < 1.0 {
            return Err(format!("field '{name}' needs a positive integer, got {value}"));
        }
        Ok(value as usize)
    };
    match name {
        "n_t" => cfg.n_t = as_count()?,
        "m_ris" => cfg.m_ris = as_count()?,
        "k_users" => {
            cfg.k_users = as_count()?;
            cfg.geometry.user_xy = ring([0.5, 0.0], 0.6, cfg.k_users);
        }
        "j_uehrs" => {
            cfg.j_uehrs = as_count()?;
            cfg.geometry.uehr_xy = ring([2.0, 0.0], 1.5, cfg.j_uehrs);
        }
        "p_max_dbm" => cfg.p_max_w = dbm_to_watts(value),
        "p_max_w" => cfg.p_max_w = value,
        "e_h_joule" => cfg.e_h_joule = value,
        "r_c_min" => cfg.r_c_min = value,
        "sigma2_dbm" => cfg.sigma2_w = dbm_to_watts(value),
        _ => return Err(format!("unknown sweep field '{name}'")),
    }
    Ok(())
}

fn run_one(
    base: &SystemConfig,
    point: &[(String, f64)],
    scheme: Scheme,
    trial: usize,
    master_seed: u64,
) -> Result<(TrialReport, Vec<TraceRecord>), String> {
    let mut cfg = base.clone();
    for (name, value) in point {
        apply_field(&mut cfg, name, *value)?;
    }
    cfg.scheme = scheme;
    cfg.validate().map_err(|e| e.to_string())?;
    let seed = derive_trial_seed(master_seed, trial as u64);
    let ch = generate_channels(&cfg, seed);
    let started = Instant::now();
    let mut report = TrialReport {
        scheme,
        trial,
        seed,
        sweep: point.to_vec(),
        status: TrialStatus::Ok,
        reason: String::new(),
        see: f64::NAN,
        r_sec_min: f64::NAN,
        power_w: f64::NAN,
        p_eh_sum_w: f64::NAN,
        harvested_w: f64::NAN,
        outer_iterations: 0,
        wall_ms: 0.0,
    };
    let trace = match alternating_optimize(&ch, &cfg, seed) {
        Ok(out) => {
            report.see = out.state.eta;
            report.r_sec_min = out.report.r_sec_min;
            report.power_w = out.state.prec.total_power();
            report.p_eh_sum_w = out.eh.p_eh_sum;
            report.harvested_w = out.eh.harvested;
            report.outer_iterations = out.outer_iterations;
            out.trace
        }
        Err(e) => {
            report.status = TrialStatus::Failed;
            report.reason = e.to_string();
            Vec::new()
        }
    };
    report.wall_ms = started.elapsed().as_secs_f64() * 1e3;
    Ok((report, trace))
}

/// Full factorial of (sweep points x schemes x trials), dispatched to the
/// rayon pool, returned in deterministic (point, trial, scheme) order.
pub fn run_sweep(
    base: &SystemConfig,
    spec: &SweepSpec,
    schemes: &[Scheme],
    trials: usize,
    master_seed: u64,
    trace_dir: Option<&Path>,
) -> Result<Vec<TrialReport>, String> {
    if spec.fields.len() > 2 {
        return Err("at most two sweep axes are supported".into());
    }
    if let Some(dir) = trace_dir {
        fs::create_dir_all(dir).map_err(|e| e.to_string())?;
    }
    let points = spec.points();
    let mut jobs = Vec::new();
    for (pi, point) in points.iter().enumerate() {
        for trial in 0..trials {
            for (si, &scheme) in schemes.iter().enumerate() {
                jobs.push((pi, trial, si, scheme, point.clone()));
            }
        }
    }
    let results: Vec<Result<(TrialReport, Vec<TraceRecord>), String>> = jobs
        .par_iter()
        .map(|(_, trial, _, scheme, point)| run_one(base, point, *scheme, *trial, master_seed))
        .collect();
    let mut reports = Vec::with_capacity(jobs.len());
    for ((pi, trial, _, scheme, _), result) in jobs.iter().zip(results) {
        let (report, trace) = result?;
        if let Some(dir) = trace_dir {
            let path = dir.join(format!("trace_p{pi}_t{trial}_{scheme}.jsonl"));
            let mut f = fs::File::create(&path).map_err(|e| e.to_string())?;
            for rec in &trace {
                let line = serde_json::to_string(rec).map_err(|e| e.to_string())?;
                writeln!(f, "{line}").map_err(|e| e.to_string())?;
            }
        }
        reports.push(report);
    }
    Ok(reports)
}

#[derive(Debug, Serialize)]
struct SummaryPoint {
    sweep: Vec<(String, f64)>,
    scheme: Scheme,
    n_ok: usize,
    n_failed: usize,
    median_see: f64,
    q1_see: f64,
    q3_see: f64,
    median_r_sec_min: f64,
}

/// Linear-interpolated quantile of a sorted slice.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Median SEE of the ok trials matching a scheme and sweep point.
pub fn median_see(reports: &[TrialReport], scheme: Scheme, sweep: &[(String, f64)]) -> f64 {
    let mut values: Vec<f64> = reports
        .iter()
        .filter(|r| r.scheme == scheme && r.sweep == sweep && r.status == TrialStatus::Ok)
        .map(|r| r.see)
        .collect();
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    quantile(&values, 0.5)
}

/// Writes `results.csv` and `summary.json` under `out_dir`.
pub fn emit_results(reports: &[TrialReport], out_dir: &Path) -> Result<(PathBuf, PathBuf), String> {
    fs::create_dir_all(out_dir).map_err(|e| e.to_string())?;
    let csv_path = out_dir.join("results.csv");
    let mut w = csv::Writer::from_path(&csv_path).map_err(|e| e.to_string())?;
    w.write_record([
        "scheme",
        "trial",
        "seed",
        "sweep_field_1",
        "sweep_value_1",
        "sweep_field_2",
        "sweep_value_2",
        "status",
        "reason",
        "see",
        "r_sec_min",
        "power_w",
        "p_eh_sum_w",
        "harvested_w",
        "outer_iterations",
    ])
    .map_err(|e| e.to_string())?;
    for r in reports {
        let axis = |i: usize| -> (String, String) {
            r.sweep
                .get(i)
                .map(|(n, v)| (n.clone(), format!("{v}")))
                .unwrap_or_default()
        };
        let (f1, v1) = axis(0);
        let (f2, v2) = axis(1);
        w.write_record([
            r.scheme.to_string(),
            r.trial.to_string(),
            r.seed.to_string(),
            f1,
            v1,
            f2,
            v2,
            match r.status {
                TrialStatus::Ok => "ok".into(),
                TrialStatus::Failed => "failed".into(),
            },
            r.reason.clone(),
            format!("{:.12e}", r.see),
            format!("{:.12e}", r.r_sec_min),
            format!("{:.12e}", r.power_w),
            format!("{:.12e}", r.p_eh_sum_w),
            format!("{:.12e}", r.harvested_w),
            // wall time stays out of the CSV so repeated runs at the same
            // seed are byte-identical
            r.outer_iterations.to_string(),
        ])
        .map_err(|e| e.to_string())?;
    }
    w.flush().map_err(|e| e.to_string())?;

    // group by (sweep point, scheme), preserving first-seen order
    let mut keys: Vec<(Vec<(String, f64)>, Scheme)> = Vec::new();
    for r in reports {
        let key = (r.sweep.clone(), r.scheme);
        if !keys.contains(&key) {
            keys.push(key);
        }
    }
    let summary: Vec<SummaryPoint> = keys
        .into_iter()
        .map(|(sweep, scheme)| {
            let group: Vec<&TrialReport> = reports
                .iter()
                .filter(|r| r.sweep == sweep && r.scheme == scheme)
                .collect();
            let mut see: Vec<f64> = group
                .iter()
                .filter(|r| r.status == TrialStatus::Ok)
                .map(|r| r.see)
                .collect();
            see.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let mut rsec: Vec<f64> = group
                .iter()
                .filter(|r| r.status == TrialStatus::Ok)
                .map(|r| r.r_sec_min)
                .collect();
            rsec.sort_by(|a, b| a.partial_cmp(b).unwrap());
            SummaryPoint {
                sweep,
                scheme,
                n_ok: see.len(),
                n_failed: group.len() - see.len(),
                median_see: quantile(&see, 0.5),
                q1_see: quantile(&see, 0.25),
                q3_see: quantile(&see, 0.75),
                median_r_sec_min: quantile(&rsec, 0.5),
            }
        })
        .collect();
    let json_path = out_dir.join("summary.json");
    let json = serde_json::to_string_pretty(&summary).map_err(|e| e.to_string())?;
    fs::write(&json_path, json).map_err(|e| e.to_string())?;
    Ok((csv_path, json_path))
}
