//! Parameter points, sweeps and machine-readable output.

pub mod config;

use std::io::Write;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::bandgap::{ideal_step_probability, run_transfer, BandgapParams};
use crate::basis::{goal_state, HpMode};
use crate::error::{Error, Result};
use crate::fit::{fit_model, FitModel, FitReport};
use crate::formulas::{
    p_continuous_drive, p_double_mirrors, p_fixed_ratio, p_fresh_level, table1_compare, ComparisonInputs, Protocol,
    Thresholds,
};
use crate::protocol::{run_accumulation, run_step, AccumulationConfig, StepModel, Variant};

pub use config::{Axis, AxisParam, LogRange, OutputFormat, ParamSet, RunConfig, Task};

/// A fully specified point.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PointSpec {
    pub task: Task,
    pub variant: Variant,
    pub mode: HpMode,
    pub params: ParamSet,
    pub refine_time: bool,
}

/// One output row.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRecord {
    pub task: Task,
    pub variant: Variant,
    pub mode: HpMode,
    #[serde(rename = "N")]
    pub n_atoms: Option<u32>,
    pub m: Option<u32>,
    pub p1d: Option<f64>,
    pub gamma_s_ratio: Option<f64>,
    pub omega: Option<f64>,
    pub xi: Option<f64>,
    pub time: Option<f64>,
    pub p_success: Option<f64>,
    pub overlap_goal: Option<f64>,
    pub infidelity: Option<f64>,
    pub repetitions: Option<f64>,
    pub formula: Option<f64>,
    pub deviation: Option<f64>,
    pub wall_time_s: f64,
    pub error: String,
}

pub const WALL_TIME_COLUMN: &str = "wall_time_s";

#[derive(Default)]
struct Outcome {
    time: Option<f64>,
    p_success: Option<f64>,
    overlap_goal: Option<f64>,
    infidelity: Option<f64>,
    repetitions: Option<f64>,
    formula: Option<f64>,
}

fn require<T>(v: Option<T>, name: &str) -> Result<T> {
    v.ok_or_else(|| Error::Config(format!("missing required parameter {name}")))
}

/// Closed-form step probability for a variant.
pub fn step_formula(variant: Variant, n_atoms: u32, m: u32, p1d: f64) -> f64 {
    match variant {
        Variant::PiPulse => p_double_mirrors(n_atoms, m, p1d),
        Variant::FixedRatio => p_fixed_ratio(n_atoms, m, p1d),
        Variant::ContinuousDrive => p_continuous_drive(n_atoms, m, p1d),
        Variant::FreshLevel => p_fresh_level(n_atoms, p1d),
    }
}

fn accumulation_config(spec: &PointSpec, m_target: u32) -> Result<AccumulationConfig> {
    let p = &spec.params;
    let mut cfg = AccumulationConfig::new(require(p.n_atoms, "N")?, m_target, spec.mode)
        .with_purcell(p.p1d.unwrap_or(f64::INFINITY))
        .with_variant(spec.variant);
    cfg.gamma_s_ratio = p.gamma_s_ratio;
    cfg.omega = p.omega;
    cfg.refine_time = spec.refine_time;
    cfg.validate()?;
    Ok(cfg)
}

fn evaluate(spec: &PointSpec) -> Result<Outcome> {
    let p = &spec.params;
    match spec.task {
        Task::Step => {
            let m = require(p.m, "m")?;
            let cfg = accumulation_config(spec, m)?;
            let (params, t0) = cfg.step_schedule(m);
            let model = StepModel::new(params, spec.mode)?;
            let input = goal_state(params.m - 1);
            let t = if spec.refine_time {
                crate::optimize::golden_section_max(|x| model.herald_probability(&input, x), 0.8 * t0, 1.2 * t0, 1e-10 * t0)?
            } else {
                t0
            };
            let r = run_step(&model, &input, t)?;
            Ok(Outcome {
                time: Some(r.time),
                p_success: Some(r.p_success),
                overlap_goal: Some(r.overlap_goal),
                infidelity: Some(1.0 - r.overlap_goal.sqrt()),
                repetitions: Some(1.0 / r.p_success),
                formula: Some(step_formula(spec.variant, cfg.n_atoms, m, cfg.p1d)),
            })
        }
        Task::Accumulate => {
            let m = require(p.m, "m")?;
            let cfg = accumulation_config(spec, m)?;
            let r = run_accumulation(&cfg)?;
            let last = r.steps.last().ok_or_else(|| Error::domain("no steps run"))?;
            Ok(Outcome {
                time: Some(last.time),
                p_success: Some(last.p_success),
                overlap_goal: Some(last.overlap_goal),
                infidelity: Some(r.infidelity),
                repetitions: Some(r.repetitions),
                formula: Some(step_formula(spec.variant, cfg.n_atoms, m, cfg.p1d)),
            })
        }
        Task::Bandgap => {
            let n = require(p.n_atoms, "N")?;
            let xi = require(p.xi, "xi")?;
            let mut bp = BandgapParams::new(n, p.m.unwrap_or(1), xi).with_purcell(p.p1d.unwrap_or(f64::INFINITY));
            if let Some(r) = p.gamma_s_ratio {
                bp.gamma_s = r * bp.gamma_g;
            }
            let r = run_transfer(&bp)?;
            Ok(Outcome {
                time: Some(r.optimal_time),
                p_success: Some(r.p_transfer),
                overlap_goal: Some(1.0 - r.infidelity),
                infidelity: Some(r.infidelity),
                repetitions: Some(1.0 / r.p_transfer),
                formula: Some(ideal_step_probability(&bp)),
            })
        }
    }
}

fn record(spec: &PointSpec, outcome: Result<Outcome>, wall: f64) -> SweepRecord {
    let p = &spec.params;
    let mut rec = SweepRecord {
        task: spec.task,
        variant: spec.variant,
        mode: spec.mode,
        n_atoms: p.n_atoms,
        m: p.m,
        p1d: p.p1d,
        gamma_s_ratio: p.gamma_s_ratio,
        omega: p.omega,
        xi: p.xi,
        time: None,
        p_success: None,
        overlap_goal: None,
        infidelity: None,
        repetitions: None,
        formula: None,
        deviation: None,
        wall_time_s: wall,
        error: String::new(),
    };
    match outcome {
        Ok(o) => {
            rec.deviation = match (o.p_success, o.formula) {
                (Some(sim), Some(f)) if f > 0.0 => Some((sim - f).abs() / f),
                _ => None,
            };
            rec.time = o.time;
            rec.p_success = o.p_success;
            rec.overlap_goal = o.overlap_goal;
            rec.infidelity = o.infidelity;
            rec.repetitions = o.repetitions;
            rec.formula = o.formula;
        }
        Err(e) => rec.error = e.to_string(),
    }
    rec
}

/// Runs one point, propagating failure.
pub fn try_run_point(spec: &PointSpec) -> Result<SweepRecord> {
    let start = Instant::now();
    let outcome = evaluate(spec)?;
    Ok(record(spec, Ok(outcome), start.elapsed().as_secs_f64()))
}

/// Runs one point; failures land in the `error` column.
pub fn run_point(spec: &PointSpec) -> SweepRecord {
    let start = Instant::now();
    let outcome = evaluate(spec);
    record(spec, outcome, start.elapsed().as_secs_f64())
}

/// Expands a configuration into point specs in grid order.
pub fn sweep_points(cfg: &RunConfig) -> Result<Vec<PointSpec>> {
    let task = cfg.task.unwrap_or(Task::Step);
    let variant = cfg.variant.unwrap_or(Variant::PiPulse);
    let mode = cfg.mode.unwrap_or(HpMode::HpApprox);
    Ok(cfg
        .grid()?
        .into_iter()
        .map(|params| PointSpec { task, variant, mode, params, refine_time: cfg.refine_time.unwrap_or(false) })
        .collect())
}

/// Evaluates every point on `jobs` worker threads; rows keep grid order.
pub fn run_sweep(points: &[PointSpec], jobs: usize) -> Result<Vec<SweepRecord>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(|| points.par_iter().map(run_point).collect()))
}

/// Writes rows as CSV with a header, or as JSON lines.
pub fn write_records<W: Write, R: Serialize>(rows: &[R], format: OutputFormat, mut out: W) -> Result<()> {
    match format {
        OutputFormat::Csv => {
            let mut w = csv::Writer::from_writer(out);
            for r in rows {
                w.serialize(r)?;
            }
            w.flush()?;
        }
        OutputFormat::Jsonl => {
            for r in rows {
                serde_json::to_writer(&mut out, r)?;
                out.write_all(b"\n")?;
            }
            out.flush()?;
        }
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FitOutput {
    pub report: FitReport,
    pub warnings: Vec<String>,
}

/// Fits `y_col` against `x_col` of a CSV file. With `normalize_m`, `y` is divided
/// by `m(m−1)` from the `m` column first.
pub fn fit_csv(path: &Path, x_col: &str, y_col: &str, model: FitModel, normalize_m: bool) -> Result<FitOutput> {
    let mut reader = csv::Reader::from_path(path)?;
    let headers = reader.headers()?.clone();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Config(format!("column '{name}' not found in {}", path.display())))
    };
    let xi = find(x_col)?;
    let yi = find(y_col)?;
    let mi = if normalize_m { Some(find("m")?) } else { None };
    let mut x = Vec::new();
    let mut y = Vec::new();
    let mut rows = Vec::new();
    let mut warnings = Vec::new();
    for (line, rec) in reader.records().enumerate() {
        let rec = rec?;
        let row = line + 2;
        let parse = |i: usize| rec.get(i).and_then(|s| s.trim().parse::<f64>().ok());
        let (Some(a), Some(mut b)) = (parse(xi), parse(yi)) else {
            warnings.push(format!("row {row}: missing or non-numeric value, excluded"));
            continue;
        };
        if let Some(mi) = mi {
            let m = parse(mi).unwrap_or(f64::NAN);
            b /= m * (m - 1.0);
        }
        x.push(a);
        y.push(b);
        rows.push(row);
    }
    let report = fit_model(model, &x, &y)?;
    for &i in &report.excluded {
        warnings.push(format!("row {}: non-positive value under log, excluded", rows[i]));
    }
    Ok(FitOutput { report, warnings })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub protocol: Protocol,
    pub requirement: &'static str,
    pub requirement_satisfied: bool,
    pub error_scaling: f64,
    pub p_m: f64,
}

pub fn compare_rows(inputs: &ComparisonInputs, thresholds: &Thresholds) -> Vec<ComparisonRow> {
    table1_compare(inputs, thresholds)
        .into_iter()
        .map(|e| ComparisonRow {
            protocol: e.protocol,
            requirement: e.protocol.requirement(),
            requirement_satisfied: e.requirement_satisfied,
            error_scaling: e.error_scaling,
            p_m: e.p_m,
        })
        .collect()
}

/// Removes one CSV column by header name.
pub fn strip_csv_column(text: &str, column: &str) -> Result<String> {
    let mut reader = csv::ReaderBuilder::new().has_headers(false).from_reader(text.as_bytes());
    let mut writer = csv::Writer::from_writer(Vec::new());
    let mut drop = None;
    for rec in reader.records() {
        let rec = rec?;
        if drop.is_none() {
            drop = rec.iter().position(|h| h == column);
        }
        let kept: Vec<&str> = rec.iter().enumerate().filter(|(i, _)| Some(*i) != drop).map(|(_, v)| v).collect();
        writer.write_record(kept)?;
    }
    let bytes = writer.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    String::from_utf8(bytes).map_err(|e| Error::Config(e.to_string()))
}
