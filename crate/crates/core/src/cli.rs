//! Command-line front end.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crate::approx::{
    bootstrap_distribution, edgeworth_table, normal_table, BootstrapPlan, QuantileSource, QuantileTable,
    TABLE_Q_LEVELS,
};
use crate::error::{Error, Result};
use crate::estimate::{
    edgeworth_params_aux, edgeworth_params_hat, scale_estimate, sigma_components_hat, AuxiliaryFrame,
    ScaleModel, Strategy,
};
use crate::population::StatKind;
use crate::simkit::output::{fmt_num, quantile_rows, CsvTable};
use crate::simkit::{self, canned, Scale, StudyConfig};
use crate::ustat::{jackknife_variance, SampleDraw};

#[derive(Debug, Parser)]
#[command(
    name = "fpscale",
    version,
    about = "Finite-population scale estimation with Gini's mean difference"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Scale estimate of a sample with its variance and Edgeworth estimates.
    Estimate(EstimateArgs),
    /// Quantiles of an approximation to the Studentized statistic.
    Approx(ApproxArgs),
    /// Run a study described by a TOML configuration.
    Simulate(SimulateArgs),
    /// Run the canned setup behind one of the tables.
    Reproduce(ReproduceArgs),
}

#[derive(Debug, clap::Args)]
pub struct EstimateArgs {
    /// Sample values, one per line.
    #[arg(long)]
    pub data: PathBuf,
    /// Auxiliary values for every population unit.
    #[arg(long)]
    pub aux: Option<PathBuf>,
    /// Population size N.
    #[arg(long = "n-total")]
    pub n_total: usize,
    #[arg(long, value_parser = parse_strategy)]
    pub strategy: Strategy,
    /// normal, exponential or gamma:<shape>
    #[arg(long, value_parser = parse_model)]
    pub model: Option<ScaleModel>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Normal,
    Edgeworth,
    EdgeworthAux,
    Bootstrap,
}

#[derive(Debug, clap::Args)]
pub struct ApproxArgs {
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub aux: Option<PathBuf>,
    #[arg(long = "n-total")]
    pub n_total: Option<usize>,
    /// Sample size, when there is no --data.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long, value_parser = parse_kind, default_value = "gmd")]
    pub kind: StatKind,
    #[arg(long, value_enum)]
    pub method: Method,
    /// Comma-separated quantile levels.
    #[arg(long, value_delimiter = ',')]
    pub q: Option<Vec<f64>>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Bootstrap resamples per empirical population.
    #[arg(long, default_value_t = 10_000)]
    pub resamples: usize,
    /// Empirical populations, used only when N is not a multiple of n.
    #[arg(long, default_value_t = 1)]
    pub populations: usize,
}

#[derive(Debug, clap::Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: u64,
}

#[derive(Debug, clap::Args)]
pub struct ReproduceArgs {
    /// t1 … t10
    #[arg(long)]
    pub table: String,
    #[arg(long, value_parser = parse_scale, default_value = "desk")]
    pub scale: Scale,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: u64,
}

fn parse_strategy(s: &str) -> std::result::Result<Strategy, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_model(s: &str) -> std::result::Result<ScaleModel, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_kind(s: &str) -> std::result::Result<StatKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_scale(s: &str) -> std::result::Result<Scale, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// Numbers from the first column of a CSV file; a non-numeric first row is
/// taken as a header.
pub fn read_values(path: &Path) -> Result<Vec<f64>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)?;
    let mut values = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let Some(field) = record.get(0).filter(|f| !f.is_empty()) else {
            continue;
        };
        match field.parse::<f64>() {
            Ok(v) => values.push(v),
            Err(_) if i == 0 => continue,
            Err(_) => {
                return Err(Error::Data(format!(
                    "{}: line {}: `{field}` is not a number",
                    path.display(),
                    i + 1
                )))
            }
        }
    }
    if values.is_empty() {
        return Err(Error::Data(format!("{}: no values", path.display())));
    }
    Ok(values)
}

fn optional<T>(r: Result<T>) -> Result<Option<T>> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(Error::Size(_) | Error::DegenerateSample(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

fn estimate(args: &EstimateArgs, out: &mut dyn Write) -> Result<()> {
    let sample = SampleDraw::new(read_values(&args.data)?, args.n_total)?;
    let aux = args
        .aux
        .as_deref()
        .map(|p| read_values(p).and_then(AuxiliaryFrame::new))
        .transpose()?;
    if let Some(a) = &aux {
        if a.len() != args.n_total {
            return Err(Error::Data(format!(
                "auxiliary file has {} values but N = {}",
                a.len(),
                args.n_total
            )));
        }
    }
    let est = scale_estimate(args.strategy, &sample, args.model, aux.as_ref())?;
    let var_hat = optional(sigma_components_hat(&sample, StatKind::Gmd))?;
    let s_sq = optional(jackknife_variance(&sample, StatKind::Gmd))?;
    let params = optional(edgeworth_params_hat(&sample, StatKind::Gmd))?;

    let mut w = csv::Writer::from_writer(out);
    let num = |v: Option<f64>| v.map(fmt_num).unwrap_or_default();
    w.write_record(["quantity", "value"])?;
    w.write_record(["strategy".to_string(), est.strategy.to_string()])?;
    w.write_record(["target".to_string(), est.target.to_string()])?;
    w.write_record(["point".to_string(), fmt_num(est.point)])?;
    w.write_record(["correction_a".to_string(), fmt_num(est.correction_a)])?;
    w.write_record(["var_hat".to_string(), num(var_hat.map(|v| v.var_u))])?;
    w.write_record(["jackknife_s2".to_string(), num(s_sq)])?;
    w.write_record(["alpha_hat".to_string(), num(params.map(|p| p.alpha))])?;
    w.write_record(["kappa_hat".to_string(), num(params.map(|p| p.kappa))])?;
    w.flush()?;
    Ok(())
}

fn approx(args: &ApproxArgs, out: &mut dyn Write) -> Result<()> {
    let q = args.q.clone().unwrap_or_else(|| TABLE_Q_LEVELS.to_vec());
    let need_total = || {
        args.n_total
            .ok_or_else(|| Error::Argument("--n-total is required for this method".into()))
    };
    let sample = || -> Result<SampleDraw> {
        let path = args
            .data
            .as_deref()
            .ok_or_else(|| Error::Argument("--data is required for this method".into()))?;
        SampleDraw::new(read_values(path)?, need_total()?)
    };
    let table: QuantileTable = match args.method {
        Method::Normal => normal_table(&q)?,
        Method::Edgeworth => {
            let p = edgeworth_params_hat(&sample()?, args.kind)?;
            edgeworth_table(&q, &p, QuantileSource::EdgeworthHatA)?
        }
        Method::EdgeworthAux => {
            let path = args
                .aux
                .as_deref()
                .ok_or_else(|| Error::Argument("--aux is required for edgeworth-aux".into()))?;
            let aux = AuxiliaryFrame::new(read_values(path)?)?;
            let n = match (args.n, &args.data) {
                (Some(n), _) => n,
                (None, Some(d)) => read_values(d)?.len(),
                (None, None) => return Err(Error::Argument("give --n or --data for the sample size".into())),
            };
            let p = edgeworth_params_aux(&aux, n, args.kind)?;
            edgeworth_table(&q, &p, QuantileSource::EdgeworthHatZ)?
        }
        Method::Bootstrap => {
            let seed = args
                .seed
                .ok_or_else(|| Error::Argument("--seed is required for the bootstrap".into()))?;
            let plan = BootstrapPlan::new(args.populations, args.resamples, seed)?;
            bootstrap_distribution(&sample()?, args.kind, plan, &q)?
        }
    };
    let csv = CsvTable {
        name: table.source.to_string(),
        key_column: "q",
        rows: quantile_rows(&table.source.to_string(), &table),
    };
    csv.write(out)
}

fn simulate(args: &SimulateArgs, out: &mut dyn Write) -> Result<()> {
    let mut cfg = StudyConfig::load(&args.config)?;
    cfg.seed = args.seed;
    report_paths(
        simkit::run_to_dir(&cfg, &args.out, simkit::workers_from_env()?)?,
        out,
    )
}

fn reproduce(args: &ReproduceArgs, out: &mut dyn Write) -> Result<()> {
    let cfg = canned(&args.table, args.scale, args.seed)?;
    report_paths(
        simkit::run_to_dir(&cfg, &args.out, simkit::workers_from_env()?)?,
        out,
    )
}

fn report_paths(paths: Vec<PathBuf>, out: &mut dyn Write) -> Result<()> {
    for p in paths {
        writeln!(out, "{}", p.display())?;
    }
    Ok(())
}

pub fn execute(cli: &Cli, out: &mut dyn Write) -> Result<()> {
    match &cli.command {
        Command::Estimate(a) => estimate(a, out),
        Command::Approx(a) => approx(a, out),
        Command::Simulate(a) => simulate(a, out),
        Command::Reproduce(a) => reproduce(a, out),
    }
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code: 0 success, 2 usage, 3 data, 4 numerical.
pub fn run_cli<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = write!(out, "{e}");
            return 0;
        }
        Err(e) => {
            let text = e.to_string();
            let line = text
                .lines()
                .find(|l| !l.trim().is_empty())
                .unwrap_or("usage error");
            let _ = writeln!(err, "{line}");
            return 2;
        }
    };
    match execute(&cli, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}
