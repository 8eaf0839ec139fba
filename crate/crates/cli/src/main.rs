use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::info;

use okr::harness::{self, DataFormat, DatasetSpec, ExperimentConfig, LearnerKind, Sinks, TargetColumn};
use okr::kernels::Kernel;
use okr::{verify, Error, Result};

#[derive(Parser)]
#[command(name = "okr", version, about = "Online kernel regression benchmarks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a learner over permutations of a dataset and write a report.
    Run(RunArgs),
    /// Fit the kernel spectrum of a dataset and suggest (mu, alpha).
    Diagnose(DiagnoseArgs),
    /// Run the built-in oracle checks.
    Selftest,
}

#[derive(Args)]
struct DataArgs {
    /// Input file (CSV or LIBSVM).
    #[arg(long)]
    data: PathBuf,
    /// csv or libsvm; guessed from the extension when omitted.
    #[arg(long)]
    format: Option<DataFormat>,
    /// Target column for CSV: first, last, a 0-based index or a header name.
    #[arg(long)]
    target: Option<TargetColumn>,
    /// Treat the first CSV row as a header (detected when omitted).
    #[arg(long)]
    header: Option<bool>,
}

impl DataArgs {
    fn load(&self) -> Result<harness::Dataset> {
        let format = self
            .format
            .unwrap_or_else(|| match self.data.extension().and_then(|e| e.to_str()) {
                Some(e) if e.eq_ignore_ascii_case("csv") => DataFormat::Csv,
                _ => DataFormat::Libsvm,
            });
        let mut spec = DatasetSpec::new(&self.data, format);
        if let Some(t) = &self.target {
            spec.target = t.clone();
        }
        spec.has_header = self.header;
        harness::load_and_preprocess(&spec)
    }
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long)]
    learner: LearnerKind,
    /// Gaussian bandwidth; repeat or comma-separate to tune over a grid.
    #[arg(long, required = true, value_delimiter = ',')]
    kernel_bandwidth: Vec<f64>,
    /// ALD threshold (default 25/T).
    #[arg(long)]
    alpha: Option<f64>,
    /// Regularization grid.
    #[arg(long, value_delimiter = ',', default_values_t = [1.0, 5.0, 15.0])]
    mu: Vec<f64>,
    /// AOGD dictionary capacity.
    #[arg(long)]
    capacity: Option<usize>,
    /// Random features D for FOGD.
    #[arg(long, default_value_t = 400)]
    features: usize,
    /// Budget J for NOGD.
    #[arg(long, default_value_t = 400)]
    budget: usize,
    /// Step-size grid for FOGD and NOGD (default {1,10,100,1000}/sqrt(T)).
    #[arg(long, value_delimiter = ',')]
    eta: Option<Vec<f64>>,
    /// Norm-ball radius U.
    #[arg(long)]
    radius: Option<f64>,
    #[arg(long, default_value_t = 10)]
    permutations: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Use only the first T rows of each permutation.
    #[arg(long)]
    rounds: Option<usize>,
    /// Hard cap on the NONS dictionary.
    #[arg(long)]
    max_dictionary: Option<usize>,
    /// Output stem; writes <out>.json, <out>.summary.csv and <out>.series.csv.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also run the oracle checks on the first permutation.
    #[arg(long)]
    verify: bool,
    /// Skip the plot series.
    #[arg(long)]
    no_series: bool,
}

#[derive(Args)]
struct DiagnoseArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Gaussian bandwidth.
    #[arg(long, default_value_t = 1.0)]
    kernel_bandwidth: f64,
    /// Rows sampled for the Gram matrix (default min(n, 1000)).
    #[arg(long)]
    sample: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn run(args: &RunArgs) -> Result<i32> {
    let data = args.data.load()?;
    let mut cfg = ExperimentConfig::new(args.learner, 1.0);
    cfg.bandwidths = args.kernel_bandwidth.clone();
    cfg.alpha = args.alpha;
    cfg.mus = args.mu.clone();
    cfg.capacity = args.capacity;
    cfg.features = args.features;
    cfg.budget = args.budget;
    cfg.etas = args.eta.clone();
    cfg.radius = args.radius;
    cfg.permutations = args.permutations;
    cfg.seed = args.seed;
    cfg.max_rounds = args.rounds;
    cfg.max_dictionary = args.max_dictionary;
    cfg.verify = args.verify;
    cfg.metrics.series = !args.no_series;
    let report = harness::run_experiment(&cfg, &data)?;
    match &args.out {
        Some(stem) => {
            let sinks = Sinks::with_stem(stem);
            harness::emit(&report, &sinks)?;
            info!("wrote {}", sinks.json.as_ref().expect("stem sinks").display());
        }
        None => harness::report::write_json(&report, std::io::stdout().lock())?,
    }
    if let Some(s) = &report.summary {
        eprintln!(
            "{} {}: MSE {:.5} ± {:.5}, buffer {:.1}, {:.3}s",
            report.dataset, cfg.learner, s.mse.mean, s.mse.std, s.buffer_size.mean, s.total_time_s.mean
        );
    }
    let failed = report.verification.iter().flatten().filter(|c| !c.passed).count();
    Ok(if failed > 0 { 2 } else { 0 })
}

fn diagnose(args: &DiagnoseArgs) -> Result<i32> {
    let data = args.data.load()?;
    let kernel = Kernel::gaussian(args.kernel_bandwidth)?;
    let sample = args.sample.unwrap_or(data.len().min(1000));
    let d = harness::diagnose_spectrum(&data, &kernel, sample, args.seed)?;
    serde_json::to_writer_pretty(std::io::stdout().lock(), &d).map_err(Error::from)?;
    println!();
    Ok(0)
}

fn selftest() -> i32 {
    let results = verify::selftest();
    let width = results.iter().map(|c| c.name.len()).max().unwrap_or(0);
    for c in &results {
        println!(
            "{} {:width$}  {}",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.detail
        );
    }
    let failed = results.iter().filter(|c| !c.passed).count();
    println!("{} of {} checks passed", results.len() - failed, results.len());
    if failed > 0 {
        2
    } else {
        0
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let usage = e.use_stderr();
            let _ = e.print();
            return ExitCode::from(if usage { 1 } else { 0 });
        }
    };
    let outcome = match &cli.command {
        Command::Run(a) => run(a),
        Command::Diagnose(a) => diagnose(a),
        Command::Selftest => Ok(selftest()),
    };
    match outcome {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
