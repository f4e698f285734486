//! `collat`: survival probabilities, calibration, credit conversions,
//! collateralization sweeps and Monte Carlo checks from the command line.
//!
//! Exit codes: 0 ok, 2 invalid input, 3 infeasible model state (firm already
//! in default, calibration target out of reach), 4 Monte Carlo disagreement.

mod output;

use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use collat_core::calibration::{calibrate_firm_value, calibrate_sigma, CalibrationTarget, RootFindConfig};
use collat_core::credit::{
    hazard_from_spread, pd_from_spread, spread_from_pd, spread_from_survival, survival_from_spread, table1_reference,
    CreditQuote,
};
use collat_core::mc::{simulate_survival, BarrierSchedule, McConfig};
use collat_core::scenarios::{load_plan, run_sweep, to_csv, to_json_lines};
use collat_core::{composite_survival, survival_probability, BarrierSpec, CompositeBarrier, FirmParams, SurvivalResult};
use serde_json::{json, Value};

use output::{emit, Format, Table};

const THREADS_ENV: &str = "COLLAT_DEFAULT_THREADS";

#[derive(Parser)]
#[command(name = "collat", version, about = "Structural default models with collateral barriers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Closed-form survival probability for one barrier or a composite
    #[command(allow_negative_numbers = true)]
    Survival(SurvivalArgs),
    /// Solve for firm value or volatility matching a target survival or spread
    #[command(allow_negative_numbers = true)]
    Calibrate(CalibrateArgs),
    /// Convert between spread, default probability and survival
    #[command(allow_negative_numbers = true)]
    Convert(ConvertArgs),
    /// Run collateralization sweeps from a config document
    Sweep(SweepArgs),
    /// Compare the closed form against a Monte Carlo estimate
    #[command(allow_negative_numbers = true)]
    McCheck(McCheckArgs),
    /// Print the reference rating table
    Table1(OutputArgs),
}

#[derive(Args, Clone)]
struct OutputArgs {
    #[arg(long = "output", value_enum, default_value = "csv")]
    format: Format,
    /// Write here instead of standard output
    #[arg(long)]
    output_path: Option<PathBuf>,
}

/// `LEVEL:DT` pair for one barrier.
#[derive(Debug, Clone, Copy)]
struct BarrierArg(BarrierSpec);

impl FromStr for BarrierArg {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let (level, dt) = s
            .split_once(':')
            .ok_or_else(|| format!("expected LEVEL:DT, got {s:?}"))?;
        let level: f64 = level.trim().parse().map_err(|e| format!("barrier level: {e}"))?;
        let dt: f64 = dt.trim().parse().map_err(|e| format!("barrier interval: {e}"))?;
        BarrierSpec::new(level, dt).map(BarrierArg).map_err(|e| e.to_string())
    }
}

#[derive(Args, Clone)]
struct ModelArgs {
    /// Firm asset value
    #[arg(long = "V")]
    firm_value: f64,
    /// Liability strike
    #[arg(long = "K")]
    strike: f64,
    /// Horizon in years
    #[arg(long = "T")]
    horizon: f64,
    /// Riskless rate
    #[arg(long = "r")]
    rate: f64,
    /// Payout rate of the firm value
    #[arg(long = "D")]
    dividend: f64,
    /// Asset volatility
    #[arg(long)]
    sigma: f64,
    /// Barrier level (0 = no barrier)
    #[arg(long = "B", requires = "interval", conflicts_with = "barrier", required_unless_present = "barrier")]
    level: Option<f64>,
    /// Monitoring interval in years (0 = continuous)
    #[arg(long = "dt", requires = "level")]
    interval: Option<f64>,
    /// Barrier as LEVEL:DT; repeat for a composite
    #[arg(long = "barrier")]
    barrier: Vec<BarrierArg>,
}

enum Barriers {
    Single(BarrierSpec),
    Composite(CompositeBarrier),
}

impl ModelArgs {
    fn params(&self) -> collat_core::Result<FirmParams> {
        FirmParams::new(self.firm_value, self.strike, self.horizon, self.rate, self.dividend, self.sigma)
    }

    fn barriers(&self) -> collat_core::Result<Barriers> {
        match (self.level, self.barrier.as_slice()) {
            (Some(level), _) => Ok(Barriers::Single(BarrierSpec::new(level, self.interval.unwrap_or(0.0))?)),
            (None, [one]) => Ok(Barriers::Single(one.0)),
            (None, many) => Ok(Barriers::Composite(CompositeBarrier::new(many.iter().map(|b| b.0).collect())?)),
        }
    }

    fn evaluate(&self) -> collat_core::Result<SurvivalResult> {
        let params = self.params()?;
        match self.barriers()? {
            Barriers::Single(b) => survival_probability(&params, &b),
            Barriers::Composite(c) => composite_survival(&params, &c),
        }
    }
}

#[derive(Args)]
struct SurvivalArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Solve {
    FirmValue,
    Sigma,
}

#[derive(Args)]
struct CalibrateArgs {
    #[arg(long, value_enum)]
    solve: Solve,
    /// Target survival probability over the horizon
    #[arg(long, conflicts_with = "spread_bps", required_unless_present = "spread_bps")]
    target_survival: Option<f64>,
    /// Target CDS spread in bps (tenor = T)
    #[arg(long, requires = "recovery")]
    spread_bps: Option<f64>,
    #[arg(long)]
    recovery: Option<f64>,
    #[arg(long = "K")]
    strike: f64,
    #[arg(long = "T")]
    horizon: f64,
    #[arg(long = "r")]
    rate: f64,
    #[arg(long = "D")]
    dividend: f64,
    /// Fixed volatility when solving for firm value
    #[arg(long, required_if_eq("solve", "firm-value"))]
    sigma: Option<f64>,
    /// Fixed firm value when solving for volatility
    #[arg(long = "V", required_if_eq("solve", "sigma"))]
    firm_value: Option<f64>,
    /// Barrier in force when the quote was observed
    #[arg(long = "B", requires = "interval")]
    level: Option<f64>,
    #[arg(long = "dt", requires = "level")]
    interval: Option<f64>,
    #[arg(long, default_value_t = 1e-10)]
    abs_tol: f64,
    #[arg(long, default_value_t = 200)]
    max_iter: usize,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Args)]
#[group(id = "input", required = true, multiple = false)]
struct ConvertInput {
    #[arg(long, group = "input")]
    spread_bps: Option<f64>,
    /// Cumulative default probability (fraction)
    #[arg(long, group = "input")]
    pd: Option<f64>,
    /// Survival probability (fraction)
    #[arg(long, group = "input")]
    survival: Option<f64>,
}

#[derive(Args)]
struct ConvertArgs {
    #[command(flatten)]
    input: ConvertInput,
    #[arg(long)]
    recovery: f64,
    #[arg(long)]
    tenor: f64,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    config: PathBuf,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Args)]
struct McCheckArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, default_value_t = collat_core::mc::DEFAULT_PATHS)]
    n_paths: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Brownian-bridge crossing for continuously monitored barriers
    #[arg(long)]
    bridge: bool,
    /// Simulate every barrier on this monitoring interval instead of its own
    #[arg(long)]
    mc_dt: Option<f64>,
    #[command(flatten)]
    out: OutputArgs,
}

fn exit_code(error: &anyhow::Error) -> u8 {
    match error.downcast_ref::<collat_core::Error>() {
        Some(e) if e.is_infeasible() => 3,
        Some(_) => 2,
        None => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = configure_threads() {
        eprintln!("error: {e:#}");
        return ExitCode::from(2);
    }
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn configure_threads() -> Result<()> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .with_context(|| format!("{THREADS_ENV} must be a positive integer, got {raw:?}"))?;
    if n == 0 {
        bail!("{THREADS_ENV} must be at least 1");
    }
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    Ok(())
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Survival(args) => cmd_survival(args),
        Command::Calibrate(args) => cmd_calibrate(args),
        Command::Convert(args) => cmd_convert(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::McCheck(args) => cmd_mc_check(args),
        Command::Table1(out) => cmd_table1(out),
    }
}

fn cmd_survival(args: SurvivalArgs) -> Result<ExitCode> {
    let res = args.model.evaluate()?;
    let mut table = Table::new(&["probability", "effective_barrier", "branch"]);
    table.push(vec![json!(res.probability), json!(res.effective_barrier), json!(res.branch.as_str())]);
    emit(&table.render(args.out.format), args.out.output_path.as_deref())?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_calibrate(args: CalibrateArgs) -> Result<ExitCode> {
    let target_survival = match (args.target_survival, args.spread_bps) {
        (Some(p), _) => p,
        (None, Some(s)) => {
            let recovery = args.recovery.context("--recovery is required with --spread-bps")?;
            survival_from_spread(&CreditQuote::new(s, recovery, args.horizon)?)?
        }
        (None, None) => bail!("one of --target-survival or --spread-bps is required"),
    };
    let barrier = match args.level {
        Some(level) => BarrierSpec::new(level, args.interval.unwrap_or(0.0))?,
        None => BarrierSpec::none(),
    };
    let config = RootFindConfig {
        abs_tol: args.abs_tol,
        max_iter: args.max_iter,
        bracket: None,
    };

    let (name, value, params) = match args.solve {
        Solve::FirmValue => {
            let sigma = args.sigma.context("--sigma is required when solving for firm value")?;
            let target = CalibrationTarget::firm_value(
                target_survival,
                args.strike,
                args.horizon,
                args.rate,
                args.dividend,
                sigma,
            )
            .with_barrier(barrier);
            let v = calibrate_firm_value(&target, &config)?;
            ("V", v, FirmParams::new(v, args.strike, args.horizon, args.rate, args.dividend, sigma)?)
        }
        Solve::Sigma => {
            let v = args.firm_value.context("--V is required when solving for sigma")?;
            let target =
                CalibrationTarget::sigma(target_survival, args.strike, args.horizon, args.rate, args.dividend, v)
                    .with_barrier(barrier);
            let s = calibrate_sigma(&target, &config)?;
            ("sigma", s, FirmParams::new(v, args.strike, args.horizon, args.rate, args.dividend, s)?)
        }
    };
    let achieved = survival_probability(&params, &barrier)?.probability;
    let mut table = Table::new(&["parameter", "value", "target_survival", "achieved_survival"]);
    table.push(vec![json!(name), json!(value), json!(target_survival), json!(achieved)]);
    emit(&table.render(args.out.format), args.out.output_path.as_deref())?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_convert(args: ConvertArgs) -> Result<ExitCode> {
    let spread = match (args.input.spread_bps, args.input.pd, args.input.survival) {
        (Some(s), _, _) => s,
        (_, Some(pd), _) => spread_from_pd(pd, args.recovery, args.tenor)?,
        (_, _, Some(p)) => spread_from_survival(p, args.recovery, args.tenor)?,
        _ => bail!("one of --spread-bps, --pd or --survival is required"),
    };
    let quote = CreditQuote::new(spread, args.recovery, args.tenor)?;
    let mut table = Table::new(&["spread_bps", "hazard", "pd", "survival"]);
    table.push(vec![
        json!(spread),
        json!(hazard_from_spread(&quote)?),
        json!(pd_from_spread(&quote)?),
        json!(survival_from_spread(&quote)?),
    ]);
    emit(&table.render(args.out.format), args.out.output_path.as_deref())?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_sweep(args: SweepArgs) -> Result<ExitCode> {
    // A missing or unreadable config is an input error, not an I/O failure.
    let text = std::fs::read_to_string(&args.config)
        .map_err(|e| collat_core::Error::Config(format!("reading {}: {e}", args.config.display())))?;
    let plan = load_plan(&text)?;
    let results = plan.iter().map(run_sweep).collect::<collat_core::Result<Vec<_>>>()?;
    let rendered = match args.out.format {
        Format::Csv => to_csv(&results),
        Format::JsonLines => to_json_lines(&results),
    };
    emit(&rendered, args.out.output_path.as_deref())?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_mc_check(args: McCheckArgs) -> Result<ExitCode> {
    let params = args.model.params()?;
    if args.n_paths == 0 {
        return Err(collat_core::Error::InvalidParameter {
            field: "n_paths",
            reason: "must be at least 1".into(),
        }
        .into());
    }
    if let Some(dt) = args.mc_dt {
        if !(dt.is_finite() && dt >= 0.0) {
            return Err(collat_core::Error::InvalidParameter {
                field: "mc_dt",
                reason: format!("must be non-negative, got {dt}"),
            }
            .into());
        }
    }
    let closed = args.model.evaluate()?.probability;
    let barriers: Vec<BarrierSpec> = match args.model.barriers()? {
        Barriers::Single(b) => vec![b],
        Barriers::Composite(c) => c.barriers().to_vec(),
    };
    let mut config = McConfig::new(args.n_paths, args.seed).with_bridge(args.bridge);
    for b in barriers.iter().filter(|b| !b.is_merton()) {
        let dt = args.mc_dt.unwrap_or(b.interval);
        config = config.with_schedule(BarrierSchedule::every(b.level, dt, params.horizon));
    }
    let est = simulate_survival(&params, &config)?;

    // Under agreement the estimator's spread is set by the closed-form
    // probability; this also covers p_hat in {0, 1} where the sample SE is 0.
    let null_se = (closed * (1.0 - closed) / args.n_paths as f64).sqrt();
    let se = est.std_err.max(null_se);
    let diff = (closed - est.p_hat).abs();
    let z = if se > 0.0 { diff / se } else if diff == 0.0 { 0.0 } else { f64::INFINITY };
    let agree = diff <= 3.0 * se;

    let mut table = Table::new(&[
        "closed_form",
        "mc_estimate",
        "std_err",
        "abs_diff",
        "diff_over_se",
        "n_paths",
        "seed",
        "bridge",
        "agree",
    ]);
    table.push(vec![
        json!(closed),
        json!(est.p_hat),
        json!(est.std_err),
        json!(diff),
        if z.is_finite() { json!(z) } else { Value::String("inf".into()) },
        json!(args.n_paths),
        json!(args.seed),
        json!(args.bridge),
        json!(agree),
    ]);
    emit(&table.render(args.out.format), args.out.output_path.as_deref())?;
    Ok(if agree { ExitCode::SUCCESS } else { ExitCode::from(4) })
}

fn cmd_table1(out: OutputArgs) -> Result<ExitCode> {
    let mut table = Table::new(&["rating", "cds_spread_bps", "recovery_pct", "sp_5y_pd_bps", "sp_as_cds_bps"]);
    for row in table1_reference() {
        table.push(vec![
            json!(row.rating),
            json!(row.cds_spread_bps as u32),
            json!(row.recovery_pct as u32),
            json!(row.sp_5y_pd_bps as u32),
            json!(row.sp_as_cds_bps as u32),
        ]);
    }
    emit(&table.render(out.format), out.output_path.as_deref())?;
    Ok(ExitCode::SUCCESS)
}
