use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use herald_core::bandgap::{run_transfer, BandgapParams};
use herald_core::basis::HpMode;
use herald_core::fit::FitModel;
use herald_core::formulas::{ComparisonInputs, Thresholds};
use herald_core::harness::{
    compare_rows, fit_csv, run_sweep, sweep_points, try_run_point, OutputFormat, ParamSet, PointSpec, RunConfig,
    Task,
};
use herald_core::protocol::Variant;
use herald_core::Error;

/// Heralded collective excitations in waveguide QED.
///
/// Units: hbar = 1, all rates in units of the guided decay rate Gamma_g of a
/// single atom, times in 1/Gamma_g.
#[derive(Parser, Debug)]
#[command(name = "herald", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// One heralded step from the ideal (m-1)-excitation state.
    Step(Common),
    /// Chain steps 1..=m and report the accumulated infidelity.
    Accumulate(Common),
    /// Run every point of the grid described in --config.
    Sweep(Common),
    /// Single-excitation transfer through a bandgap waveguide.
    Bandgap {
        #[command(flatten)]
        common: Common,
        /// Also write the population time series to this CSV file.
        #[arg(long)]
        series: Option<PathBuf>,
    },
    /// Least-squares fit of a column of a CSV file.
    Fit {
        /// Input CSV with a header row.
        input: PathBuf,
        /// power_law (y = A x^b) or exp_sqrt (y = A exp(b sqrt x)).
        #[arg(long, default_value = "power_law")]
        model: FitModel,
        #[arg(long, default_value = "N")]
        x: String,
        #[arg(long, default_value = "infidelity")]
        y: String,
        /// Divide y by m(m-1) taken from the `m` column.
        #[arg(long)]
        normalize_m: bool,
        #[arg(long)]
        jsonl: bool,
    },
    /// Protocol comparison: requirement gates and scalings.
    Compare {
        #[arg(long = "N")]
        n_atoms: u32,
        #[arg(long)]
        m: u32,
        #[arg(long, default_value_t = 10.0)]
        p1d: f64,
        #[arg(long, default_value_t = 1000.0)]
        xi: f64,
        /// Detector efficiency.
        #[arg(long, default_value_t = 0.9)]
        eta: f64,
        /// Drive parameter Omega*T*sqrt(N).
        #[arg(long, default_value_t = 0.05)]
        x: f64,
        #[arg(long, default_value_t = 10.0)]
        min_purcell: f64,
        #[arg(long, default_value_t = 0.1)]
        max_x: f64,
        #[arg(long, default_value_t = 10.0)]
        min_atoms: f64,
        #[arg(long, default_value_t = 5.0)]
        min_xi_over_n: f64,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        jsonl: bool,
    },
}

#[derive(Args, Debug)]
struct Common {
    /// Atoms per ensemble.
    #[arg(long = "N")]
    n_atoms: Option<u32>,
    /// Target excitation number.
    #[arg(long)]
    m: Option<u32>,
    /// Purcell factor Gamma_g / Gamma*; omit for no free-space loss.
    #[arg(long)]
    p1d: Option<f64>,
    /// Gamma_s / Gamma_g.
    #[arg(long)]
    gamma_s_ratio: Option<f64>,
    /// Drive Rabi frequency, in units of Gamma_g.
    #[arg(long)]
    omega: Option<f64>,
    /// Bandgap detuning ratio.
    #[arg(long)]
    xi: Option<f64>,
    #[arg(long)]
    mode: Option<HpMode>,
    #[arg(long)]
    variant: Option<Variant>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for sweeps.
    #[arg(long)]
    jobs: Option<usize>,
    /// TOML file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Write JSON lines instead of CSV.
    #[arg(long)]
    jsonl: bool,
    /// Optimise the step duration around the nominal time.
    #[arg(long)]
    refine_time: bool,
}

impl Common {
    fn resolve(&self, task: Option<Task>) -> Result<RunConfig, Error> {
        let file = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        let flags = RunConfig {
            task,
            variant: self.variant,
            mode: self.mode,
            jobs: self.jobs,
            out: self.out.clone(),
            format: self.jsonl.then_some(OutputFormat::Jsonl),
            refine_time: self.refine_time.then_some(true),
            fixed: ParamSet {
                n_atoms: self.n_atoms,
                m: self.m,
                p1d: self.p1d,
                gamma_s_ratio: self.gamma_s_ratio,
                omega: self.omega,
                xi: self.xi,
            },
            axis: Vec::new(),
        };
        Ok(file.overlay(&flags))
    }
}

fn writer(out: Option<&Path>) -> Result<Box<dyn Write>, Error> {
    Ok(match out {
        Some(path) => Box::new(BufWriter::new(File::create(path)?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn emit<R: Serialize>(rows: &[R], cfg: &RunConfig) -> Result<(), Error> {
    herald_core::harness::write_records(rows, cfg.format.unwrap_or_default(), writer(cfg.out.as_deref())?)
}

fn single(common: &Common, task: Task) -> Result<(), Error> {
    let cfg = common.resolve(Some(task))?;
    let spec = PointSpec {
        task,
        variant: cfg.variant.unwrap_or(Variant::PiPulse),
        mode: cfg.mode.unwrap_or(HpMode::HpApprox),
        params: cfg.fixed.clone(),
        refine_time: cfg.refine_time.unwrap_or(false),
    };
    let rec = try_run_point(&spec)?;
    emit(&[rec], &cfg)
}

#[derive(Serialize)]
struct SeriesRow {
    time: f64,
    source_population: f64,
    target_population: f64,
}

fn bandgap(common: &Common, series: Option<&Path>) -> Result<(), Error> {
    single(common, Task::Bandgap)?;
    if let Some(path) = series {
        let cfg = common.resolve(Some(Task::Bandgap))?;
        let p = &cfg.fixed;
        let missing = |name: &str| Error::Config(format!("missing required parameter {name}"));
        let mut bp = BandgapParams::new(p.n_atoms.ok_or_else(|| missing("N"))?, p.m.unwrap_or(1), p.xi.ok_or_else(|| missing("xi"))?)
            .with_purcell(p.p1d.unwrap_or(f64::INFINITY));
        if let Some(r) = p.gamma_s_ratio {
            bp.gamma_s = r * bp.gamma_g;
        }
        let rec = run_transfer(&bp)?;
        let rows: Vec<SeriesRow> = rec
            .times
            .iter()
            .zip(&rec.source_population)
            .zip(&rec.target_population)
            .map(|((&time, &s), &t)| SeriesRow { time, source_population: s, target_population: t })
            .collect();
        herald_core::harness::write_records(&rows, OutputFormat::Csv, BufWriter::new(File::create(path)?))?;
    }
    Ok(())
}

#[derive(Serialize)]
struct FitRow {
    model: FitModel,
    prefactor: f64,
    prefactor_se: f64,
    exponent: f64,
    exponent_se: f64,
    r_squared: f64,
    points: usize,
    excluded: usize,
}

fn sweep(common: &Common) -> Result<(), Error> {
    let cfg = common.resolve(None)?;
    let points = sweep_points(&cfg)?;
    let rows = run_sweep(&points, cfg.jobs.unwrap_or(1))?;
    let failed = rows.iter().filter(|r| !r.error.is_empty()).count();
    if failed > 0 {
        eprintln!("{failed} of {} points failed; see the error column", rows.len());
    }
    emit(&rows, &cfg)
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Step(c) => single(&c, Task::Step),
        Command::Accumulate(c) => single(&c, Task::Accumulate),
        Command::Sweep(c) => sweep(&c),
        Command::Bandgap { common, series } => bandgap(&common, series.as_deref()),
        Command::Fit { input, model, x, y, normalize_m, jsonl } => {
            let out = fit_csv(&input, &x, &y, model, normalize_m)?;
            for w in &out.warnings {
                eprintln!("warning: {w}");
            }
            let cfg = RunConfig { format: jsonl.then_some(OutputFormat::Jsonl), ..Default::default() };
            let r = out.report;
            let row = FitRow {
                model: r.model,
                prefactor: r.prefactor,
                prefactor_se: r.prefactor_se,
                exponent: r.exponent,
                exponent_se: r.exponent_se,
                r_squared: r.r_squared,
                points: r.points,
                excluded: r.excluded.len(),
            };
            emit(&[row], &cfg)
        }
        Command::Compare { n_atoms, m, p1d, xi, eta, x, min_purcell, max_x, min_atoms, min_xi_over_n, out, jsonl } => {
            let inputs = ComparisonInputs { m, n_atoms, p1d, xi, eta, x };
            let thresholds = Thresholds { min_purcell, max_x, min_atoms, min_xi_over_n };
            let cfg = RunConfig { out, format: jsonl.then_some(OutputFormat::Jsonl), ..Default::default() };
            emit(&compare_rows(&inputs, &thresholds), &cfg)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if matches!(e, Error::Config(_)) {
                eprintln!("run with --help for usage");
            }
            ExitCode::from(if e.is_numeric() { 2 } else { 1 })
        }
    }
}
