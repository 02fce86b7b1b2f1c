//! Command-line harness: dataset preparation, experiment sweeps,
//! verification, reports and clustering.

pub mod config;
pub mod prepare;
pub mod report;
pub mod run;
pub mod svg;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::{Args, Parser, Subcommand};

use netbandit::data::{read_prepared, DatasetKind, FixtureParams, FourCliques, LoadOptions};
use netbandit::eval::{verify_suite, VerifyOptions};
use netbandit::graph::{spectral_cluster, write_partition_file, UserGraph};

use config::{DatasetSource, ExperimentConfig, PolicyKind};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;
pub const EXIT_VERIFICATION: i32 = 3;

pub const OUTPUT_DIR_ENV: &str = "NETBANDIT_OUTPUT_DIR";

#[derive(Debug, Parser)]
#[command(name = "netbandit", version, about = "Networked contextual bandit benchmarks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build graph, interaction index and feature cache from HetRec files.
    Prepare(PrepareArgs),
    /// Run an experiment grid.
    Run(RunArgs),
    /// Run the invariant suite.
    Verify(VerifyArgs),
    /// Aggregate result files into tables and charts.
    Report(ReportArgs),
    /// Spectrally cluster a graph and write a partition file.
    Cluster(ClusterArgs),
}

#[derive(Debug, Args)]
pub struct PrepareArgs {
    /// Directory with the HetRec `.dat` files.
    #[arg(long, required_unless_present = "fixture")]
    pub input: Option<PathBuf>,
    #[arg(long, default_value = "lastfm")]
    pub kind: DatasetKind,
    #[arg(long)]
    pub out: PathBuf,
    /// Drop word tags seen fewer times (default: 10 for delicious, 1 for lastfm).
    #[arg(long)]
    pub min_tag_count: Option<usize>,
    #[arg(long, default_value_t = 25)]
    pub pca_dim: usize,
    /// Keep every user with positives, not just the largest component.
    #[arg(long)]
    pub all_components: bool,
    /// Generate a synthetic bookmark corpus instead of reading `--input`.
    #[arg(long)]
    pub fixture: bool,
    #[arg(long, default_value_t = 200)]
    pub fixture_users: usize,
    #[arg(long, default_value_t = 1)]
    pub fixture_seed: u64,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// TOML experiment file; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, env = OUTPUT_DIR_ENV)]
    pub out: Option<PathBuf>,
    /// Use a prepared dataset directory instead of synthetic cliques.
    #[arg(long)]
    pub prepared: Option<PathBuf>,
    #[arg(long)]
    pub rounds: Option<u64>,
    #[arg(long, value_delimiter = ',')]
    pub seeds: Option<Vec<u64>>,
    #[arg(long, value_delimiter = ',')]
    pub algorithms: Option<Vec<String>>,
    #[arg(long, value_delimiter = ',')]
    pub alpha: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    pub graph_noise: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    pub payoff_noise: Option<Vec<f64>>,
    #[arg(long)]
    pub set_size: Option<usize>,
    #[arg(long)]
    pub dim: Option<usize>,
    /// Use the theoretical confidence bound instead of the α grid.
    #[arg(long)]
    pub theoretical: bool,
    #[arg(long)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Corrupt the sharing transform to check that failures are reported.
    #[arg(long)]
    pub inject_fault: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[arg(long)]
    pub results: PathBuf,
    /// Defaults to `<results>/report`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ClusterArgs {
    /// Graph file (`i<TAB>j[<TAB>w]` lines after a header).
    #[arg(long, conflicts_with_all = ["prepared", "fourcliques"])]
    pub graph: Option<PathBuf>,
    #[arg(long)]
    pub prepared: Option<PathBuf>,
    /// Cluster a 4Cliques graph with `--graph-noise` toggles.
    #[arg(long)]
    pub fourcliques: bool,
    #[arg(long, default_value_t = 0.0)]
    pub graph_noise: f64,
    #[arg(long)]
    pub clusters: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

/// Failure classes, each with its own exit status.
#[derive(Debug)]
pub enum Failure {
    Validation(anyhow::Error),
    Runtime(anyhow::Error),
    Verification(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Validation(_) => EXIT_VALIDATION,
            Failure::Runtime(_) => EXIT_RUNTIME,
            Failure::Verification(_) => EXIT_VERIFICATION,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Validation(e) => write!(f, "invalid input: {e:#}"),
            Failure::Runtime(e) => write!(f, "{e:#}"),
            Failure::Verification(s) => write!(f, "verification failed: {s}"),
        }
    }
}

/// Writes through a temporary sibling and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> anyhow::Result<()> {
    let name = path.file_name().context("path has no file name")?.to_string_lossy();
    let tmp = path.with_file_name(format!(".{name}.tmp{}", std::process::id()));
    std::fs::write(&tmp, bytes).with_context(|| format!("writing {}", tmp.display()))?;
    std::fs::rename(&tmp, path).with_context(|| format!("renaming into {}", path.display()))
}

/// Merges file values with flag overrides.
pub fn resolve_config(args: &RunArgs) -> Result<(ExperimentConfig, PathBuf), Failure> {
    let mut c = match &args.config {
        Some(p) => ExperimentConfig::load(p).map_err(Failure::Validation)?,
        None => ExperimentConfig::default(),
    };
    if let Some(p) = &args.prepared {
        c.dataset.source = DatasetSource::Prepared;
        c.dataset.path = Some(p.clone());
    }
    if let Some(v) = args.rounds {
        c.run.rounds = v;
    }
    if let Some(v) = &args.seeds {
        c.run.seeds = v.clone();
    }
    if let Some(v) = &args.algorithms {
        c.run.algorithms = v.clone();
    }
    if let Some(v) = &args.alpha {
        c.policy.alpha = v.clone();
    }
    if let Some(v) = &args.graph_noise {
        c.dataset.graph_noise = v.clone();
    }
    if let Some(v) = &args.payoff_noise {
        c.dataset.payoff_noise = v.clone();
    }
    if let Some(v) = args.set_size {
        c.dataset.set_size = Some(v);
    }
    if let Some(v) = args.dim {
        c.dataset.dim = v;
    }
    if args.theoretical {
        c.policy.kind = PolicyKind::Theoretical;
    }
    if let Some(v) = args.jobs {
        c.run.jobs = v;
    }
    if let Some(o) = &args.out {
        c.output.dir = Some(o.clone());
    }
    c.validate().map_err(Failure::Validation)?;
    let out = c.output.dir.clone().unwrap_or_else(|| PathBuf::from("results"));
    Ok((c, out))
}

fn cmd_prepare(a: PrepareArgs) -> Result<(), Failure> {
    let req = prepare::PrepareRequest {
        input: a.input,
        kind: a.kind,
        out: a.out.clone(),
        options: LoadOptions { min_tag_count: a.min_tag_count, pca_dim: a.pca_dim, largest_component: !a.all_components },
        fixture: a.fixture.then(|| FixtureParams { users: a.fixture_users, seed: a.fixture_seed, ..FixtureParams::default() }),
    };
    if let Some(dir) = req.input.as_ref().filter(|d| !d.is_dir() && !a.fixture) {
        return Err(Failure::Validation(anyhow::anyhow!("{} is not a directory", dir.display())));
    }
    if a.pca_dim == 0 {
        return Err(Failure::Validation(anyhow::anyhow!("pca_dim must be positive")));
    }
    match prepare::prepare(&req).map_err(classify)? {
        prepare::PrepareOutcome::CacheHit => println!("cache hit: {} is up to date", a.out.display()),
        prepare::PrepareOutcome::Written { stats } => {
            print!("{stats}");
            println!("wrote {}", a.out.display());
        }
    }
    Ok(())
}

/// Library validation errors are the caller's fault; everything else is a
/// runtime failure.
fn classify(e: anyhow::Error) -> Failure {
    let invalid = e.chain().any(|c| {
        matches!(
            c.downcast_ref::<netbandit::Error>(),
            Some(netbandit::Error::InvalidArgument(_) | netbandit::Error::Parse { .. })
        )
    });
    if invalid {
        Failure::Validation(e)
    } else {
        Failure::Runtime(e)
    }
}

fn cmd_run(a: RunArgs) -> Result<(), Failure> {
    let (config, out) = resolve_config(&a)?;
    let summary = run::run(&config, &out).map_err(classify)?;
    println!("{} runs written to {}", summary.results.len(), summary.out_dir.display());
    Ok(())
}

fn cmd_verify(a: VerifyArgs) -> Result<(), Failure> {
    let report = verify_suite(VerifyOptions { inject_fault: a.inject_fault, seed: a.seed });
    print!("{}", report.render());
    if report.passed() {
        Ok(())
    } else {
        let failed: Vec<&str> = report.checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
        Err(Failure::Verification(failed.join(", ")))
    }
}

fn cmd_report(a: ReportArgs) -> Result<(), Failure> {
    if !a.results.is_dir() {
        return Err(Failure::Validation(anyhow::anyhow!("{} is not a directory", a.results.display())));
    }
    let out = a.out.unwrap_or_else(|| a.results.join("report"));
    let s = report::report(&a.results, &out).map_err(|e| {
        if e.to_string().starts_with("no seed_") {
            Failure::Validation(e)
        } else {
            Failure::Runtime(e)
        }
    })?;
    println!("{} runs in {} groups over {} cells; report in {}", s.runs, s.groups, s.cells.len(), s.out_dir.display());
    Ok(())
}

fn cmd_cluster(a: ClusterArgs) -> Result<(), Failure> {
    let graph: UserGraph = match (&a.graph, &a.prepared, a.fourcliques) {
        (Some(p), _, _) => UserGraph::read(p).map_err(|e| classify(e.into()))?,
        (None, Some(p), _) => read_prepared(p).map_err(|e| classify(e.into()))?.graph,
        (None, None, true) => {
            FourCliques { graph_noise: a.graph_noise, ..FourCliques::default() }.build(a.seed).map_err(|e| classify(e.into()))?.noisy
        }
        _ => return Err(Failure::Validation(anyhow::anyhow!("one of --graph, --prepared or --fourcliques is required"))),
    };
    let p = spectral_cluster(&graph, a.clusters, a.seed).map_err(|e| classify(e.into()))?;
    write_partition_file(&a.out, &p).map_err(|e| Failure::Runtime(e.into()))?;
    let sizes: Vec<usize> = p.members().iter().map(Vec::len).collect();
    println!("{} clusters over {} nodes, sizes {sizes:?}; wrote {}", p.m(), p.n(), a.out.display());
    Ok(())
}

pub fn dispatch(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Prepare(a) => cmd_prepare(a),
        Command::Run(a) => cmd_run(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Report(a) => cmd_report(a),
        Command::Cluster(a) => cmd_cluster(a),
    }
}

/// Parses `args` and runs the command, returning the process exit status.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_VALIDATION } else { EXIT_OK };
        }
    };
    match dispatch(cli) {
        Ok(()) => EXIT_OK,
        Err(f) => {
            eprintln!("error: {f}");
            f.exit_code()
        }
    }
}
