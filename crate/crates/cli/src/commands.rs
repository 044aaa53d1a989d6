//! Argument definitions and the three subcommands.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rankgauge::config::parse_config;
use rankgauge::simulation::{run_sweep, run_table};
use rankgauge::{rank_cis, rescale_alpha, Method, MethodSettings, RescaleConfig};

use crate::input::{parse_csv, read_observations};
use crate::plot::render_svg;
use crate::report::RanksReport;
use crate::CliError;

#[derive(Debug, Parser)]
#[command(name = "rankgauge", version, about = "Simultaneous confidence intervals for ranks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Rank intervals for the rows of an `id,y,sigma` CSV (or a JSON report).
    Ranks(RanksArgs),
    /// Worst-case rescaled level for a set of standard deviations.
    Rescale(RescaleArgs),
    /// Runs the coverage tables and sweeps described by a config file.
    Simulate(SimulateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Tukey,
    Zhang,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Tukey => Method::Tukey,
            MethodArg::Zhang => Method::Zhang,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Tsv,
}

#[derive(Debug, Args)]
pub struct MonteCarlo {
    /// Studentized-range draws for unequal standard deviations.
    #[arg(long, default_value_t = rankgauge::studentized::DEFAULT_SAMPLES)]
    pub mc_samples: usize,
    /// Simulated rank vectors of the Monte-Carlo method.
    #[arg(long, alias = "zhang-K", default_value_t = rankgauge::zhang::DEFAULT_K)]
    pub zhang_k: usize,
}

impl MonteCarlo {
    fn settings(&self, method: MethodArg) -> MethodSettings {
        MethodSettings::new(method.into())
            .with_tukey_samples(self.mc_samples)
            .with_zhang_k(self.zhang_k)
    }
}

#[derive(Debug, Args)]
pub struct RanksArgs {
    pub input: PathBuf,
    #[arg(long, value_enum, default_value_t = MethodArg::Tukey)]
    pub method: MethodArg,
    #[arg(long, default_value_t = 0.1)]
    pub alpha: f64,
    /// Build the intervals at the worst-case rescaled level.
    #[arg(long)]
    pub rescale: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub mc: MonteCarlo,
    #[arg(long, default_value_t = rankgauge::rescale::DEFAULT_REPLICATES)]
    pub rescale_replicates: usize,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub out: Format,
    /// Write the report here instead of stdout.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Also write an SVG interval chart.
    #[arg(long)]
    pub plot: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RescaleArgs {
    #[arg(long, required_unless_present = "sigma_file")]
    pub n: Option<usize>,
    /// All standard deviations equal (the default when no file is given).
    #[arg(long, conflicts_with = "sigma_file")]
    pub equal_sigma: bool,
    /// CSV with a `sigma` column (an `id,y,sigma` file works).
    #[arg(long)]
    pub sigma_file: Option<PathBuf>,
    #[arg(long, default_value_t = 0.1)]
    pub alpha: f64,
    #[arg(long, value_enum, default_value_t = MethodArg::Tukey)]
    pub method: MethodArg,
    #[arg(long, default_value_t = rankgauge::rescale::DEFAULT_REPLICATES)]
    pub replicates: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub mc: MonteCarlo,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    pub config: PathBuf,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
}

fn write_or_print(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| CliError::Other(format!("cannot write {}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

pub fn ranks(args: &RanksArgs) -> Result<(), CliError> {
    let obs = read_observations(&args.input)?;
    let settings = args.mc.settings(args.method);
    let result = if args.rescale && obs.len() > 1 {
        let cfg = RescaleConfig {
            replicates: args.rescale_replicates,
            seed: args.seed,
            tol: None,
        };
        let r = rescale_alpha(&obs.sigma(), args.alpha, &settings, &cfg)?;
        rank_cis(&obs, r.alpha_tilde, &settings, args.seed)?.with_nominal(args.alpha)
    } else {
        rank_cis(&obs, args.alpha, &settings, args.seed)?
    };
    let report = RanksReport::new(&obs, &result);
    let text = match args.out {
        Format::Json => report.to_json(),
        Format::Tsv => report.to_tsv(),
    };
    write_or_print(args.output.as_deref(), &text)?;
    if let Some(p) = &args.plot {
        write_or_print(Some(p), &render_svg(&report))?;
    }
    Ok(())
}

fn read_sigma(path: &Path) -> Result<Vec<f64>, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
    if text.lines().next().is_some_and(|h| h.trim() == "id,y,sigma") {
        return Ok(parse_csv(&text)?.into_iter().map(|i| i.sigma).collect());
    }
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let col = reader
        .headers()
        .map_err(|e| CliError::Input(e.to_string()))?
        .iter()
        .position(|h| h == "sigma")
        .ok_or_else(|| CliError::Input("sigma file needs a `sigma` column".into()))?;
    reader
        .records()
        .map(|rec| {
            let rec = rec.map_err(|e| CliError::Input(e.to_string()))?;
            rec.get(col)
                .and_then(|v| v.parse::<f64>().ok())
                .ok_or_else(|| CliError::Input(format!("bad sigma in record {:?}", rec)))
        })
        .collect()
}

pub fn rescale(args: &RescaleArgs) -> Result<String, CliError> {
    let sigma = match (&args.sigma_file, args.n) {
        (Some(p), n) => {
            let s = read_sigma(p)?;
            if let Some(n) = n.filter(|&n| n != s.len()) {
                return Err(CliError::Input(format!("--n {n} disagrees with {} rows in the sigma file", s.len())));
            }
            s
        }
        (None, Some(n)) => vec![1.0; n],
        (None, None) => return Err(CliError::Input("give --n or --sigma-file".into())),
    };
    if let Some(bad) = sigma.iter().find(|s| !(s.is_finite() && **s > 0.0)) {
        return Err(CliError::Input(format!("standard deviations must be positive, got {bad}")));
    }
    let cfg = RescaleConfig {
        replicates: args.replicates,
        seed: args.seed,
        tol: None,
    };
    let r = rescale_alpha(&sigma, args.alpha, &args.mc.settings(args.method), &cfg)?;
    let mut s = String::new();
    let _ = writeln!(s, "method\t{}", r.method);
    let _ = writeln!(s, "n\t{}", sigma.len());
    let _ = writeln!(s, "alpha\t{}", r.alpha);
    let _ = writeln!(s, "alpha_tilde\t{}", r.alpha_tilde);
    let _ = writeln!(s, "coverage\t{}", r.achieved.p_hat);
    let _ = writeln!(s, "coverage_se\t{}", r.achieved.std_error);
    let _ = writeln!(s, "replicates\t{}", r.achieved.replicates);
    Ok(s)
}

/// Writes `table.tsv` when the config has cells, `report.json` and one
/// `<name>.csv` per sweep. An empty config writes nothing.
pub fn simulate(args: &SimulateArgs) -> Result<(), CliError> {
    let text = fs::read_to_string(&args.config)
        .map_err(|e| CliError::Input(format!("cannot read {}: {e}", args.config.display())))?;
    let cfg = parse_config(&text).map_err(|e| CliError::Input(e.to_string()))?;
    if cfg.is_empty() {
        return Ok(());
    }
    fs::create_dir_all(&args.out_dir)?;
    let table = run_table(&cfg.cells);
    if !cfg.cells.is_empty() {
        fs::write(args.out_dir.join("table.tsv"), table.to_tsv())?;
    }
    let mut sweeps = Vec::with_capacity(cfg.sweeps.len());
    for spec in &cfg.sweeps {
        let series = run_sweep(spec)?;
        fs::write(args.out_dir.join(format!("{}.csv", series.name)), series.to_csv())?;
        sweeps.push(series);
    }
    let report = serde_json::json!({ "table": table, "sweeps": sweeps });
    let mut json = serde_json::to_string_pretty(&report).expect("report serialises");
    json.push('\n');
    fs::write(args.out_dir.join("report.json"), json)?;
    Ok(())
}

pub fn run(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Ranks(a) => ranks(a),
        Command::Rescale(a) => rescale(a).map(|s| print!("{s}")),
        Command::Simulate(a) => simulate(a),
    }
}
