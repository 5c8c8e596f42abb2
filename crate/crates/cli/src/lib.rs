//! Command-line pipeline: clustering, complexity, market geometry,
//! regressions, correlations, synthetic data and GeoJSON export.
//!
//! Stages hand off through CSV files in the output directory. Exit codes:
//! 0 on success, 1 for bad input or usage, 2 when a computation fails.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub mod config;
mod geojson;
mod output;
mod stages;
mod statistics;
mod synth;

pub use config::{parse_config, Settings};

/// An error caused by the user's input or invocation (exit code 1).
#[derive(Debug)]
pub struct InputError(pub String);

impl std::fmt::Display for InputError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for InputError {}

#[derive(Debug, Parser)]
#[command(name = "urbcent", version, about = "Amenity clusters, economic complexity and market boundaries")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct GlobalArgs {
    /// key = value file; flags override its entries
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Directory for stage outputs [default: out]
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
    /// Seed for synthetic data [default: 1]
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads [default: all cores]
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Use the exact O(N^2) effective-count sum
    #[arg(long, global = true)]
    pub exact_distances: bool,
    /// Shops CSV (id,lat,lon,product_code,industry_code[,ward])
    #[arg(long, global = true)]
    pub shops: Option<PathBuf>,
    /// Population CSV (kind,cell_lat,cell_lon,size_m,count)
    #[arg(long, global = true)]
    pub population: Option<PathBuf>,
    /// Card spending CSV
    #[arg(long, global = true)]
    pub cards: Option<PathBuf>,
    /// Land price CSV, keyed by cluster_id or by cell
    #[arg(long, global = true)]
    pub land_price: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Detect amenity clusters from shop locations
    Cluster(stages::ClusterArgs),
    /// Compute RCA, ECI and PCI
    Complexity(stages::ComplexityArgs),
    /// Minimum distances between each product's markets
    Market(stages::MarketArgs),
    /// Fit the market-boundary and consumer-range regressions
    Regress(statistics::RegressArgs),
    /// Correlations, tier associations and rank contingency matrices
    Correlate(statistics::CorrelateArgs),
    /// Generate a synthetic city and its input files
    Synth(synth::SynthArgs),
    /// Write clusters and scores as a GeoJSON FeatureCollection
    ExportGeojson(geojson::ExportArgs),
}

/// Resolved global settings shared by every command.
pub struct Context {
    pub settings: Settings,
    pub global: GlobalArgs,
    pub out_dir: PathBuf,
}

impl Context {
    pub fn new(global: GlobalArgs) -> anyhow::Result<Context> {
        let settings = Settings::load(global.config.as_deref())?;
        let out_dir = settings.get("out_dir", global.out_dir.clone(), PathBuf::from("out"))?;
        Ok(Context {
            settings,
            global,
            out_dir,
        })
    }

    pub fn seed(&self) -> Result<u64, InputError> {
        self.settings.get("seed", self.global.seed, 1)
    }

    pub fn exact(&self) -> Result<bool, InputError> {
        self.settings.switch("exact_distances", self.global.exact_distances)
    }

    fn input_flag(&self, key: &str) -> Option<PathBuf> {
        match key {
            "shops" => self.global.shops.clone(),
            "population" => self.global.population.clone(),
            "cards" => self.global.cards.clone(),
            "land_price" => self.global.land_price.clone(),
            _ => None,
        }
    }

    pub fn input(&self, key: &str) -> Result<PathBuf, InputError> {
        self.settings.require_path(key, self.input_flag(key))
    }

    pub fn optional_input(&self, key: &str) -> Result<Option<PathBuf>, InputError> {
        self.settings.path(key, self.input_flag(key))
    }
}

/// Maps an error chain to an exit code.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    for cause in err.chain() {
        if cause.is::<InputError>() || cause.is::<std::io::Error>() {
            return 1;
        }
        if let Some(e) = cause.downcast_ref::<urban_centrality::Error>() {
            return if e.is_input_error() { 1 } else { 2 };
        }
    }
    2
}

fn execute(cli: Cli) -> anyhow::Result<()> {
    let ctx = Context::new(cli.global)?;
    let threads = ctx.settings.opt("threads", ctx.global.threads)?;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        if n == 0 {
            return Err(InputError("--threads must be at least 1".into()).into());
        }
        pool = pool.num_threads(n);
    }
    let pool = pool.build()?;
    pool.install(|| match &cli.command {
        Command::Cluster(a) => stages::cluster(&ctx, a),
        Command::Complexity(a) => stages::complexity(&ctx, a),
        Command::Market(a) => stages::market(&ctx, a),
        Command::Regress(a) => statistics::regress(&ctx, a),
        Command::Correlate(a) => statistics::correlate(&ctx, a),
        Command::Synth(a) => synth::synth(&ctx, a),
        Command::ExportGeojson(a) => geojson::export(&ctx, a),
    })
}

/// Parses arguments and runs one command, returning the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e:#}");
            exit_code(&e)
        }
    }
}
