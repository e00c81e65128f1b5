use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use lbm_selective::block::vectorize;
use lbm_selective::enumerate::count_structures;
use lbm_selective::estimate::{
    exact_minimizer, sa_minimizer, tan_witten_minimizer, CoolingSchedule, EstimateResult, Method,
};
use lbm_selective::harness::{read_records, run_scenario, summarize, write_records, Scenario, ScenarioConfig, TruncationKind, VarianceMode};
use lbm_selective::inference::{known_variance_test, unknown_variance_test, Interval, ReferenceBlock, Truncation};
use lbm_selective::specfun::SeededRng;
use lbm_selective::{BlockStructure, DataMatrix, DataVector};

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error(transparent)]
    Core(#[from] lbm_selective::Error),
    #[error("{path}: {source}")]
    File { path: PathBuf, source: io::Error },
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("{0}")]
    Usage(String),
}

type Result<T> = std::result::Result<T, CliError>;

#[derive(Parser)]
#[command(name = "lbmsel", version, about = "Selective inference for Gaussian latent block models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Count block structures with at most (or exactly) K x H blocks.
    Count(CountArgs),
    /// Estimate the minimum squared residue structure of a matrix.
    Estimate(EstimateArgs),
    /// Estimate a structure and test it with a selective p-value.
    Test(TestArgs),
    /// Run a Monte-Carlo scenario and write per-trial records as CSV.
    Simulate(SimulateArgs),
    /// Summarize a CSV of trial records as JSON.
    Summarize(SummarizeArgs),
}

#[derive(Args)]
struct CountArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    p: usize,
    #[arg(long = "K")]
    k: usize,
    #[arg(long = "H")]
    h: usize,
    /// Require exactly K row and H column clusters.
    #[arg(long)]
    exact: bool,
}

#[derive(Args, Clone)]
struct ScheduleArgs {
    /// Initial temperature.
    #[arg(long, default_value_t = 10.0)]
    t0: f64,
    /// Geometric cooling ratio.
    #[arg(long, default_value_t = 0.99)]
    ratio: f64,
    /// Stop once the temperature falls below this value.
    #[arg(long, default_value_t = 1e-6)]
    epsilon: f64,
    /// Upper bound on the number of annealing steps.
    #[arg(long)]
    max_steps: Option<u64>,
}

impl ScheduleArgs {
    fn schedule(&self) -> Result<CoolingSchedule> {
        Ok(CoolingSchedule::geometric(self.t0, self.ratio, self.epsilon)?.with_max_steps(self.max_steps))
    }
}

#[derive(Args)]
struct EstimateArgs {
    /// Headerless CSV matrix, one row per line.
    #[arg(long)]
    input: PathBuf,
    #[arg(long = "K")]
    k: usize,
    #[arg(long = "H")]
    h: usize,
    #[arg(long, default_value = "exact")]
    method: Method,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    schedule: ScheduleArgs,
}

#[derive(Args)]
struct TestArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long = "K")]
    k: usize,
    #[arg(long = "H")]
    h: usize,
    /// Known noise standard deviation.
    #[arg(long, required_unless_present = "unknown_variance", conflicts_with = "unknown_variance")]
    sigma0: Option<f64>,
    /// Use the truncated-F test instead of a known sigma0.
    #[arg(long)]
    unknown_variance: bool,
    /// Reference block of the F test: `first` or `largest`.
    #[arg(long, default_value = "first")]
    reference: String,
    /// Truncation search: `exact` or `sa`.
    #[arg(long, default_value = "exact")]
    method: String,
    /// Structure estimator; defaults to the truncation method.
    #[arg(long)]
    estimator: Option<Method>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    schedule: ScheduleArgs,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    scenario: Scenario,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    p: usize,
    #[arg(long = "Knull")]
    k_null: Option<usize>,
    #[arg(long = "Hnull")]
    h_null: Option<usize>,
    #[arg(long = "K")]
    k: Option<usize>,
    #[arg(long = "H")]
    h: Option<usize>,
    #[arg(long)]
    level: Option<u8>,
    #[arg(long)]
    sigma0: Option<f64>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    estimator: Option<Method>,
    #[arg(long)]
    truncation: Option<String>,
    #[arg(long)]
    unknown_variance: bool,
    #[arg(long, default_value = "first")]
    reference: String,
    /// Row-major base means, rows separated by `;`, e.g. `0.7,0.55;0.5,0.6`.
    #[arg(long)]
    means: Option<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write 0 in the elapsed_ms column so output bytes are reproducible.
    #[arg(long)]
    no_timing: bool,
    #[command(flatten)]
    schedule: ScheduleArgs,
    /// Output CSV; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SummarizeArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "0.1,0.05,0.01")]
    alphas: Vec<f64>,
    /// Output JSON; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Serialize)]
struct EstimateOutput {
    row_labels: Vec<usize>,
    col_labels: Vec<usize>,
    residue: f64,
    steps: u64,
}

#[derive(Serialize)]
#[serde(untagged)]
enum TestOutput {
    Known {
        row_labels: Vec<usize>,
        col_labels: Vec<usize>,
        #[serde(rename = "T")]
        t: f64,
        dof: usize,
        beta: f64,
        p_selective: f64,
        p_naive: f64,
        degenerate: bool,
    },
    Unknown {
        row_labels: Vec<usize>,
        col_labels: Vec<usize>,
        #[serde(rename = "T")]
        t: f64,
        d1: usize,
        d2: usize,
        reference_block: (usize, usize),
        intervals: Vec<[f64; 2]>,
        p_selective: f64,
        p_naive: f64,
        degenerate: bool,
    },
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|source| CliError::File { path: path.to_path_buf(), source })
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir).map_err(|source| CliError::File { path: dir.to_path_buf(), source })?;
            }
            let f = File::create(p).map_err(|source| CliError::File { path: p.to_path_buf(), source })?;
            Box::new(BufWriter::new(f))
        }
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn print_json<T: Serialize>(value: &T, path: Option<&Path>) -> Result<()> {
    let mut w = output(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn load(path: &Path) -> Result<DataVector> {
    Ok(vectorize(&DataMatrix::read_csv(open(path)?)?))
}

fn parse_reference(s: &str) -> Result<ReferenceBlock> {
    match s {
        "first" => Ok(ReferenceBlock::First),
        "largest" => Ok(ReferenceBlock::Largest),
        other => Err(CliError::Usage(format!("unknown reference block `{other}`"))),
    }
}

fn parse_means(s: &str) -> Result<Vec<Vec<f64>>> {
    s.split(';')
        .map(|row| {
            row.split(',')
                .map(|v| v.trim().parse::<f64>().map_err(|_| CliError::Usage(format!("bad mean `{v}`"))))
                .collect()
        })
        .collect()
}

fn estimate(x: &DataVector, k: usize, h: usize, method: Method, schedule: &CoolingSchedule, seed: u64) -> Result<EstimateResult> {
    let mut rng = SeededRng::new(seed);
    Ok(match method {
        Method::Exact => exact_minimizer(x, k, h)?,
        Method::Anneal => sa_minimizer(x, k, h, schedule, &mut rng)?,
        Method::TanWitten => tan_witten_minimizer(x, k, h, &mut rng)?.result,
    })
}

fn labels(g: &BlockStructure) -> (Vec<usize>, Vec<usize>) {
    (g.row_labels().to_vec(), g.col_labels().to_vec())
}

fn cmd_count(a: CountArgs) -> Result<()> {
    println!("{}", count_structures(a.n, a.p, a.k, a.h, a.exact)?);
    Ok(())
}

fn cmd_estimate(a: EstimateArgs) -> Result<()> {
    let x = load(&a.input)?;
    let res = estimate(&x, a.k, a.h, a.method, &a.schedule.schedule()?, a.seed)?;
    let (row_labels, col_labels) = labels(&res.g_hat);
    print_json(&EstimateOutput { row_labels, col_labels, residue: res.residue, steps: res.steps }, None)
}

fn cmd_test(a: TestArgs) -> Result<()> {
    let x = load(&a.input)?;
    let schedule = a.schedule.schedule()?;
    let truncation: TruncationKind = a.method.parse()?;
    let estimator = a.estimator.unwrap_or(match truncation {
        TruncationKind::Exact => Method::Exact,
        TruncationKind::Anneal => Method::Anneal,
    });
    let est = estimate(&x, a.k, a.h, estimator, &schedule, a.seed)?;
    let (row_labels, col_labels) = labels(&est.g_hat);
    let out = if a.unknown_variance {
        if truncation == TruncationKind::Anneal {
            return Err(CliError::Usage("the unknown-variance test only supports --method exact".into()));
        }
        let rep = unknown_variance_test(&x, &est.g_hat, a.k, a.h, parse_reference(&a.reference)?)?;
        TestOutput::Unknown {
            row_labels,
            col_labels,
            t: rep.t_f,
            d1: rep.d1,
            d2: rep.d2,
            reference_block: rep.block,
            intervals: rep.intervals.iter().map(|&Interval { lo, hi }| [lo, hi]).collect(),
            p_selective: rep.p_selective,
            p_naive: rep.p_naive,
            degenerate: rep.degenerate,
        }
    } else {
        let sigma0 = a.sigma0.expect("clap requires sigma0 without --unknown-variance");
        let trunc = match truncation {
            TruncationKind::Exact => Truncation::Exact,
            TruncationKind::Anneal => Truncation::Anneal(schedule),
        };
        let mut rng = SeededRng::derive(a.seed, &[1]);
        let rep = known_variance_test(&x, &est.g_hat, a.k, a.h, sigma0, &trunc, &mut rng)?;
        TestOutput::Known {
            row_labels,
            col_labels,
            t: rep.t,
            dof: rep.dof,
            beta: rep.beta,
            p_selective: rep.p_selective,
            p_naive: rep.p_naive,
            degenerate: rep.degenerate,
        }
    };
    print_json(&out, None)
}

fn cmd_simulate(a: SimulateArgs) -> Result<()> {
    let mut c = ScenarioConfig::preset(a.scenario, a.n, a.p);
    if a.k_null.is_some() || a.h_null.is_some() {
        let (k_null, h_null) = (a.k_null.unwrap_or(c.k_null), a.h_null.unwrap_or(c.h_null));
        c = c.with_null_caps(k_null, h_null);
    }
    if let Some(m) = &a.means {
        c.base_means = parse_means(m)?;
    }
    c.k = a.k.unwrap_or(c.k);
    c.h = a.h.unwrap_or(c.h);
    c.level = a.level.unwrap_or(c.level);
    c.sigma0 = a.sigma0.unwrap_or(c.sigma0);
    c.trials = a.trials.unwrap_or(c.trials);
    c.estimator = a.estimator.unwrap_or(c.estimator);
    if let Some(t) = &a.truncation {
        c.truncation = t.parse()?;
    }
    if a.unknown_variance {
        c.variance = VarianceMode::Unknown(parse_reference(&a.reference)?);
    }
    c.schedule = a.schedule.schedule()?;
    c.seed = a.seed;
    c.timing = !a.no_timing;
    let records = run_scenario(&c)?;
    let mut w = output(a.out.as_deref())?;
    write_records(&mut w, &records)?;
    w.flush()?;
    Ok(())
}

fn cmd_summarize(a: SummarizeArgs) -> Result<()> {
    let records = read_records(open(&a.input)?)?;
    print_json(&summarize(&records, &a.alphas)?, a.out.as_deref())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Count(a) => cmd_count(a),
        Command::Estimate(a) => cmd_estimate(a),
        Command::Test(a) => cmd_test(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Summarize(a) => cmd_summarize(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn means_and_reference_parse() {
        assert_eq!(parse_means("0.7,0.55;0.5, 0.6").unwrap(), vec![vec![0.7, 0.55], vec![0.5, 0.6]]);
        assert!(parse_means("0.7,x").is_err());
        assert_eq!(parse_reference("largest").unwrap(), ReferenceBlock::Largest);
        assert!(parse_reference("middle").is_err());
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
