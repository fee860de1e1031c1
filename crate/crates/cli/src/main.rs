use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use log::warn;
use serde::Serialize;
use serde_json::json;
use sha2::{Digest, Sha256};

use wwr_xva::calibration::{classify_wwr, estimate_lambda, CdsSeries};
use wwr_xva::config::{read_json, ResolvedRun, RunFile};
use wwr_xva::exposure::Execution;
use wwr_xva::pipeline::{self, XvaReport};
use wwr_xva::wwr_overlay::validate_scenarios;
use wwr_xva::Error;

const MIN_REPORT_PATHS: usize = 1000;

#[derive(Parser)]
#[command(
    name = "wwr",
    version,
    about = "CVA/FVA with a tail-event wrong-way-risk overlay"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the pricing pipeline and write report files.
    Price(PriceArgs),
    /// Load and check configs without simulating.
    Validate(InputArgs),
    /// Estimate the coupling lambda from two CDS spread histories.
    CalibrateLambda(CalibrateArgs),
    /// Aggregate the hedge lines of earlier `price` reports.
    Hedge(HedgeArgs),
}

#[derive(Args)]
struct InputArgs {
    /// Run file bundling market, portfolio, scenarios and settings.
    #[arg(long, conflicts_with_all = ["market", "portfolio", "scenarios"])]
    config: Option<PathBuf>,
    #[arg(long, requires_all = ["portfolio", "scenarios"])]
    market: Option<PathBuf>,
    #[arg(long)]
    portfolio: Option<PathBuf>,
    #[arg(long)]
    scenarios: Option<PathBuf>,
    /// Overrides the number of Monte Carlo paths.
    #[arg(long)]
    paths: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the exposure grid spacing in years.
    #[arg(long)]
    grid_step: Option<f64>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
    Both,
}

#[derive(Args)]
struct PriceArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long, value_enum, default_value = "both")]
    format: Format,
    /// Run the path loop on the calling thread only.
    #[arg(long)]
    sequential: bool,
}

#[derive(Args)]
struct CalibrateArgs {
    /// Counterparty `date,spread_bps` CSV.
    #[arg(long)]
    cpty: PathBuf,
    /// Sovereign `date,spread_bps` CSV.
    #[arg(long)]
    sov: PathBuf,
    #[arg(long)]
    cpty_threshold_bps: f64,
    #[arg(long)]
    sov_threshold_bps: f64,
}

#[derive(Args)]
struct HedgeArgs {
    /// `report.json` files from earlier runs, one per counterparty.
    #[arg(required = true)]
    reports: Vec<PathBuf>,
    /// Also write the aggregate here.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// A failure with the exit code and machine-readable status it maps to.
struct Failure {
    status: &'static str,
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = e.status();
        let code = match status {
            "numerical_failure" => 3,
            "validation_failed" => 2,
            _ => 1,
        };
        Failure {
            status,
            code,
            message: e.to_string(),
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        match e.downcast::<Error>() {
            Ok(inner) => inner.into(),
            Err(e) => Failure {
                status: "io_error",
                code: 1,
                message: format!("{e:#}"),
            },
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Price(args) => price(&args),
        Command::Validate(args) => validate(&args),
        Command::CalibrateLambda(args) => calibrate(&args),
        Command::Hedge(args) => hedge(&args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let obj = json!({"status": f.status, "exit_code": f.code, "error": f.message});
            eprintln!("{obj}");
            ExitCode::from(f.code)
        }
    }
}

fn load(args: &InputArgs) -> Result<ResolvedRun, Failure> {
    let mut run = match (&args.config, &args.market, &args.portfolio, &args.scenarios) {
        (Some(cfg), None, None, None) => RunFile::load(cfg)?,
        (None, Some(m), Some(p), Some(s)) => ResolvedRun::from_parts(m, p, s)?,
        _ => {
            return Err(Error::Config(
                "give either --config or all of --market, --portfolio, --scenarios".into(),
            )
            .into())
        }
    };
    if let Some(n) = args.paths {
        run.simulation.n_paths = Some(n);
    }
    if let Some(s) = args.seed {
        run.simulation.seed = Some(s);
    }
    if let Some(g) = args.grid_step {
        run.simulation.grid_step = Some(g);
    }
    Ok(run)
}

fn config_hash(run: &ResolvedRun) -> Result<String, Failure> {
    let bytes = serde_json::to_vec(run).map_err(Error::from)?;
    Ok(Sha256::digest(&bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect())
}

fn print_json(value: &impl Serialize) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(value).map_err(Error::from)?;
    println!("{text}");
    Ok(())
}

fn price(args: &PriceArgs) -> Result<(), Failure> {
    let run = load(&args.input)?;
    let hash = config_hash(&run)?;
    let mut inputs = run.build()?;
    if args.sequential {
        inputs.sim.execution = Execution::Sequential;
    }
    let mut warnings = Vec::new();
    if inputs.sim.n_paths < MIN_REPORT_PATHS {
        let msg = format!(
            "n_paths = {} is below {MIN_REPORT_PATHS}; estimates will be noisy",
            inputs.sim.n_paths
        );
        warn!("{msg}");
        warnings.push(msg);
    }
    let output = pipeline::run(&inputs)?;
    warnings.extend(output.report.scenario_check.warnings.iter().cloned());

    let mut files: Vec<(&str, Vec<u8>)> = Vec::new();
    if args.format != Format::Csv {
        files.push(("report.json", to_json_bytes(&output.report)?));
    }
    if args.format != Format::Json {
        let mut buf = Vec::new();
        output.write_profiles_csv(&mut buf)?;
        files.push(("epe_profiles.csv", buf));
    }
    let meta = json!({
        "engine_version": env!("CARGO_PKG_VERSION"),
        "config_hash": hash,
        "seed": inputs.sim.seed,
        "n_paths": inputs.sim.n_paths,
        "grid_points": inputs.sim.grid.len(),
        "grid_last": inputs.sim.grid.last(),
        "rate_model": inputs.sim.rate_model,
        "fx_model": inputs.sim.fx_model,
        "defaults": inputs.defaults,
        "warnings": warnings,
    });
    files.push(("run_meta.json", to_json_bytes(&meta)?));
    write_all(&args.out, &files)?;

    let r = &output.report;
    print_json(&json!({
        "status": "ok",
        "out": args.out,
        "cva_running_bps": r.cva_running_bps,
        "cva_wwr_running_bps": r.cva_wwr_running_bps,
        "fva_bps": r.fva_bps,
        "fva_wwr_bps": r.fva_wwr_bps,
        "hedge_total": r.hedge_total,
    }))
}

fn to_json_bytes(value: &impl Serialize) -> Result<Vec<u8>, Failure> {
    let mut bytes = serde_json::to_vec_pretty(value).map_err(Error::from)?;
    bytes.push(b'\n');
    Ok(bytes)
}

/// Writes every file or none: anything written before a failure is removed.
fn write_all(dir: &Path, files: &[(&str, Vec<u8>)]) -> Result<(), Failure> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut written = Vec::new();
    for (name, bytes) in files {
        let path = dir.join(name);
        if let Err(e) = fs::write(&path, bytes) {
            for p in &written {
                let _ = fs::remove_file(p);
            }
            return Err(anyhow::Error::new(e)
                .context(format!("writing {}", path.display()))
                .into());
        }
        written.push(path);
    }
    Ok(())
}

fn validate(args: &InputArgs) -> Result<(), Failure> {
    let run = load(args)?;
    let hash = config_hash(&run)?;
    let inputs = run.build()?;
    let check = validate_scenarios(
        &inputs.scenarios,
        &inputs.snapshot,
        inputs.sim.grid.times(),
        inputs.soft_cap,
    )?;
    print_json(&json!({
        "status": "ok",
        "config_hash": hash,
        "trades": inputs.portfolio.trades.len(),
        "scenarios": inputs.scenarios.iter().map(|s| &s.id).collect::<Vec<_>>(),
        "scenario_check": check,
        "defaults": inputs.defaults,
    }))
}

fn read_series(path: &Path) -> Result<CdsSeries, Failure> {
    let file = fs::File::open(path)
        .map_err(|e| Error::Config(format!("cannot read '{}': {e}", path.display())))?;
    Ok(CdsSeries::from_csv(file)?)
}

fn calibrate(args: &CalibrateArgs) -> Result<(), Failure> {
    let cpty = read_series(&args.cpty)?;
    let sov = read_series(&args.sov)?;
    let est = estimate_lambda(&cpty, &sov, args.cpty_threshold_bps, args.sov_threshold_bps)?;
    let rating = classify_wwr(est.lambda)?;
    print_json(&json!({
        "status": "ok",
        "lambda": est.lambda,
        "dual_lambda": est.dual_lambda,
        "rating": rating,
        "p_cpty": est.p_cpty,
        "p_sov": est.p_sov,
        "p_cpty_given_sov": est.p_cpty_given_sov,
        "p_sov_given_cpty": est.p_sov_given_cpty,
        "counts": est.counts,
    }))
}

fn hedge(args: &HedgeArgs) -> Result<(), Failure> {
    let mut lines = Vec::new();
    let mut total = 0.0;
    let mut horizons = Vec::new();
    for path in &args.reports {
        let report: XvaReport = read_json(path)?;
        total += report.hedge.total;
        horizons.push(report.hedge.horizon);
        for line in report.hedge.lines {
            lines.push(json!({
                "counterparty": report.counterparty,
                "name": line.name,
                "lambda": line.lambda,
                "p_cpty": line.p_cpty,
                "gap": line.gap,
                "term": line.term,
            }));
        }
    }
    if horizons.windows(2).any(|w| w[0] != w[1]) {
        warn!("reports use different hedge horizons: {horizons:?}");
    }
    let summary =
        json!({"status": "ok", "reports": args.reports.len(), "lines": lines, "total": total});
    if let Some(out) = &args.out {
        if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        }
        fs::write(out, to_json_bytes(&summary)?)
            .with_context(|| format!("writing {}", out.display()))?;
    }
    print_json(&summary)
}
