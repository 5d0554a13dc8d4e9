//! Command-line front end: corpus ingestion, model files and subcommands.

pub mod corpus;
pub mod model;
pub mod selftest;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rand::distr::{weighted::WeightedIndex, Distribution};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use strlap::laplace::ShellSampler;
use strlap::mixture::{self, derive_seed};
use strlap::{median_lev, Alphabet, DistanceKind, FitConfig, MixtureParams, SphereEngine, SphereQuery, Str};

use crate::corpus::{ingest, AlphabetSpec, InputFormat};
use crate::model::{FitMetadata, ModelFile};

/// Exit code for invalid input, arguments or models.
pub const EXIT_VALIDATION: i32 = 1;
/// Exit code when a computation would exceed a resource cap.
pub const EXIT_CAP: i32 = 2;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] strlap::Error),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("record {record}: unknown symbol {ch:?} at position {position}")]
    Symbol { record: String, position: usize, ch: char },
    #[error("{0}")]
    Input(String),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io { path: path.display().to_string(), source }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) if e.is_resource_cap() => EXIT_CAP,
            _ => EXIT_VALIDATION,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "strlap", version, about = "Laplace-like distributions and mixture clustering on strings")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit a k-component mixture (k = 1 fits a single distribution).
    Fit(FitArgs),
    /// Assign a corpus to the components of a saved model.
    Cluster(ClusterArgs),
    /// Draw strings from a saved model.
    Sample(SampleArgs),
    /// Print sphere or ball sizes around a center string.
    Sphere(SphereArgs),
    /// Run the Levenshtein median hill climb and print its trace.
    Median(MedianArgs),
    /// Run oracle-backed consistency checks.
    Selftest,
}

#[derive(Debug, Args)]
pub struct InputArgs {
    /// Input corpus.
    pub input: PathBuf,
    #[arg(long, value_enum, default_value = "lines")]
    pub format: InputFormat,
    /// Alphabet letters in order, or "infer" for the sorted set of input characters.
    #[arg(long, default_value = "infer")]
    pub alphabet: AlphabetSpec,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, default_value_t = 1)]
    pub k: usize,
    #[arg(long, default_value = "ext-hamming")]
    pub distance: DistanceKind,
    #[arg(long, default_value_t = strlap::DEFAULT_EPSILON)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 200)]
    pub max_iters: usize,
    /// Convergence tolerance for mixing weights and dispersions.
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    #[arg(long, default_value_t = 8)]
    pub restarts: usize,
    /// Iteration at which restart chains are scored (default: at convergence).
    #[arg(long)]
    pub tau: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Model JSON output path.
    #[arg(long)]
    pub out: PathBuf,
    /// Assignment CSV path (default: the model path with a .csv extension).
    #[arg(long)]
    pub assignments: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ClusterArgs {
    pub input: PathBuf,
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, value_enum, default_value = "lines")]
    pub format: InputFormat,
    /// Assignment CSV path (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, default_value_t = 100)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value = "lines")]
    pub format: InputFormat,
    /// Output path (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SphereArgs {
    #[arg(long)]
    pub center: String,
    #[arg(long)]
    pub alphabet: String,
    #[arg(long, default_value = "ext-hamming")]
    pub distance: DistanceKind,
    #[arg(long)]
    pub radius: usize,
    /// Print the ball size instead of the sphere size.
    #[arg(long)]
    pub ball: bool,
    /// Print `radius sphere ball` rows for every radius up to --radius.
    #[arg(long)]
    pub profile: bool,
}

#[derive(Debug, Args)]
pub struct MedianArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Trace output path (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Parses `args` (including the program name) and runs the command; returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_VALIDATION } else { 0 };
        }
    };
    configure_threads();
    match execute(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn configure_threads() {
    if let Some(n) = std::env::var("STRLAP_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        // Fails only if the global pool already exists, which is fine.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

pub fn execute(command: Command) -> Result<(), CliError> {
    match command {
        Command::Fit(a) => fit(a),
        Command::Cluster(a) => cluster(a),
        Command::Sample(a) => sample(a),
        Command::Sphere(a) => sphere(a),
        Command::Median(a) => median(a),
        Command::Selftest => selftest(),
    }
}

fn open_output(path: Option<&Path>) -> Result<Box<dyn Write>, CliError> {
    Ok(match path {
        Some(p) => Box::new(std::io::BufWriter::new(std::fs::File::create(p).map_err(|e| CliError::io(p, e))?)),
        None => Box::new(std::io::stdout().lock()),
    })
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

fn fit(a: FitArgs) -> Result<(), CliError> {
    let corpus = ingest(&a.input.input, a.input.format, &a.input.alphabet)?;
    let engine = SphereEngine::new(corpus.alphabet.size());
    let config = FitConfig {
        epsilon: a.epsilon,
        max_iters: a.max_iters,
        tol_pi: a.tol,
        tol_rho: a.tol,
        restarts: a.restarts,
        tau: a.tau,
        seed: a.seed,
        ..FitConfig::new(a.k, a.distance)
    };
    let fit = mixture::fit(&engine, &corpus.strings, &config)?;
    let meta = FitMetadata {
        epsilon: a.epsilon,
        seed: a.seed,
        restarts: a.restarts,
        iters: fit.iters_used,
        weighted_loglik: fit.weighted_loglik,
    };
    let file = ModelFile::new(&corpus.alphabet, a.distance, &fit.params, meta);
    write_file(&a.out, &file.to_json())?;

    // Assign with the parameters as they read back from the model file, so
    // that `cluster` reproduces this output exactly.
    let loaded = file.validate()?;
    let csv_path = a.assignments.unwrap_or_else(|| a.out.with_extension("csv"));
    let out = open_output(Some(&csv_path))?;
    write_assignments(out, &engine, &corpus.ids, &corpus.strings, &loaded.params, a.distance)?;

    for (g, lambda) in fit.params.lambda.iter().enumerate() {
        println!(
            "component {}: pi={} rho={} lambda={}",
            g + 1,
            fit.params.pi[g],
            fit.params.rho[g],
            corpus.alphabet.render(lambda)
        );
    }
    println!(
        "iterations={} converged={} restart={} weighted_loglik={}",
        fit.iters_used, fit.converged, fit.restart_index_chosen, fit.weighted_loglik
    );
    Ok(())
}

/// Writes `id,component,posterior_1..k` rows; components are numbered from 1.
pub fn write_assignments(
    out: Box<dyn Write>,
    engine: &SphereEngine,
    ids: &[String],
    strings: &[Str],
    params: &MixtureParams,
    metric: DistanceKind,
) -> Result<(), CliError> {
    let assignments = mixture::map_cluster(engine, strings, params, metric)?;
    let mut w = csv::Writer::from_writer(out);
    let csv_err = |e: csv::Error| CliError::Input(format!("writing assignments: {e}"));
    let mut header = vec!["id".to_string(), "component".to_string()];
    header.extend((1..=params.k()).map(|g| format!("posterior_{g}")));
    w.write_record(&header).map_err(csv_err)?;
    for (id, a) in ids.iter().zip(&assignments) {
        let mut row = vec![id.clone(), (a.component + 1).to_string()];
        row.extend(a.posterior.iter().map(f64::to_string));
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush().map_err(|e| CliError::Input(format!("writing assignments: {e}")))?;
    Ok(())
}

fn cluster(a: ClusterArgs) -> Result<(), CliError> {
    let loaded = model::load(&a.model)?;
    let corpus = ingest(&a.input, a.format, &AlphabetSpec::Explicit(loaded.alphabet.clone()))?;
    let engine = SphereEngine::new(loaded.alphabet.size());
    let out = open_output(a.out.as_deref())?;
    write_assignments(out, &engine, &corpus.ids, &corpus.strings, &loaded.params, loaded.metric)
}

fn sample(a: SampleArgs) -> Result<(), CliError> {
    let loaded = model::load(&a.model)?;
    let engine = SphereEngine::new(loaded.alphabet.size());
    let params = &loaded.params;
    let mut samplers = (0..params.k())
        .map(|g| ShellSampler::new(&engine, &params.component(g), loaded.metric))
        .collect::<strlap::Result<Vec<_>>>()?;
    let choose = WeightedIndex::new(&params.pi).map_err(|e| CliError::Input(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(a.seed, 0));
    let mut out = open_output(a.out.as_deref())?;
    let io = |e| CliError::Input(format!("writing samples: {e}"));
    for i in 0..a.n {
        let g = choose.sample(&mut rng);
        let s = loaded.alphabet.render(&samplers[g].draw(&mut rng)?);
        match a.format {
            InputFormat::Lines => writeln!(out, "{s}").map_err(io)?,
            InputFormat::Fasta => writeln!(out, ">s{} component={}\n{s}", i + 1, g + 1).map_err(io)?,
        }
    }
    out.flush().map_err(io)
}

fn sphere(a: SphereArgs) -> Result<(), CliError> {
    let alphabet = Alphabet::from_letters(&a.alphabet)?;
    let center = alphabet.parse(&a.center)?;
    let engine = SphereEngine::new(alphabet.size());
    let query = |r| SphereQuery::new(center.clone(), r, a.distance);
    if a.profile {
        for r in 0..=a.radius {
            println!("{r}\t{}\t{}", engine.sphere_size(&query(r))?, engine.ball_size(&query(r))?);
        }
    } else if a.ball {
        println!("{}", engine.ball_size(&query(a.radius))?);
    } else {
        println!("{}", engine.sphere_size(&query(a.radius))?);
    }
    Ok(())
}

fn median(a: MedianArgs) -> Result<(), CliError> {
    let corpus = ingest(&a.input.input, a.input.format, &a.input.alphabet)?;
    let engine = SphereEngine::new(corpus.alphabet.size());
    let fit = median_lev::fit(&engine, &corpus.strings, None)?;
    let mut out = open_output(a.out.as_deref())?;
    let io = |e| CliError::Input(format!("writing trace: {e}"));
    writeln!(out, "step\tlambda\trho\tobjective").map_err(io)?;
    for (i, step) in fit.trace.iterations.iter().enumerate() {
        writeln!(out, "{i}\t{}\t{}\t{}", corpus.alphabet.render(&step.lambda), step.rho, step.objective).map_err(io)?;
    }
    writeln!(out, "median\t{}\t{}", corpus.alphabet.render(&fit.lambda), fit.rho).map_err(io)?;
    out.flush().map_err(io)
}

fn selftest() -> Result<(), CliError> {
    let checks = selftest::run_checks();
    let failed = checks.iter().filter(|c| !c.passed).count();
    for c in &checks {
        println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    if failed > 0 {
        return Err(CliError::Input(format!("{failed} of {} self-checks failed", checks.len())));
    }
    println!("all {} self-checks passed", checks.len());
    Ok(())
}
