//! `mealprint`: ingest catalogs, build indices, assess recipe files, serve the API.

mod charts;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use mealprint_core::catalog::{
    load_catalog, validate_store, CatalogManifest, ColumnMapping, DatabaseSource, ProductKey, ProductStore, RejectionReport,
};
use mealprint_core::embedding::{build_index, ProductIndex};
use mealprint_core::matching::{SelectionMode, SelectionSet};
use mealprint_core::pipeline::AssessmentBundle;
use mealprint_core::recipe::{ConversionTable, ExtractionMode};
use mealprint_core::{Engine, EngineConfig};
use mealprint_service::config::{EmbedderKind, LlmKind};
use mealprint_service::{DataConfig, ServiceConfig};

/// Partial result: the assessment ran but some ingredients matched nothing.
const EXIT_UNMATCHED: u8 = 1;
const EXIT_INPUT: u8 = 2;

#[derive(Parser)]
#[command(name = "mealprint", version, about = "Carbon footprint estimates for meals")]
struct Cli {
    /// Log filter, e.g. `info` or `mealprint_core=debug`.
    #[arg(long, global = true, env = "MEALPRINT_LOG", default_value = "warn")]
    log: String,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Normalize catalog exports into a product store.
    Ingest(IngestArgs),
    /// Precompute search indices for every source in a store.
    Index(IndexArgs),
    /// Assess one recipe file and write the report, JSON and charts.
    Assess(AssessArgs),
    /// Run the HTTP API.
    Serve(ServeArgs),
}

#[derive(Args)]
struct IngestArgs {
    #[arg(long, requires_all = ["input", "mapping"], conflicts_with = "manifest")]
    source: Option<DatabaseSource>,
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    mapping: Option<PathBuf>,
    /// JSON list of {source, input, mapping} entries, ingested together.
    #[arg(long, required_unless_present = "source")]
    manifest: Option<PathBuf>,
    /// Store file (NDJSON).
    #[arg(long)]
    out: PathBuf,
    /// Keep other sources already in `--out`, replacing only the ones ingested.
    #[arg(long)]
    merge: bool,
    /// Writes the row rejections as JSON.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Provider {
    Lexical,
    /// Configured by `MEALPRINT_EMBEDDING_*`.
    Remote,
}

impl From<Provider> for EmbedderKind {
    fn from(p: Provider) -> Self {
        match p {
            Provider::Lexical => EmbedderKind::Lexical,
            Provider::Remote => EmbedderKind::Remote,
        }
    }
}

#[derive(Args)]
struct IndexArgs {
    #[arg(long, env = "MEALPRINT_STORE")]
    store: PathBuf,
    #[arg(long, value_enum, default_value = "lexical")]
    provider: Provider,
    /// Output directory, one `{source}.mpix` per source.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    /// Deterministic extraction.
    Auto,
    /// Extraction through the offline stub provider.
    StubLlm,
}

#[derive(Args)]
struct AssessArgs {
    #[arg(long)]
    recipe_file: PathBuf,
    #[arg(long, env = "MEALPRINT_COUNTRY", default_value = "NL")]
    country: String,
    #[arg(long, value_enum, default_value = "auto")]
    mode: Mode,
    #[arg(long)]
    out_dir: PathBuf,
    /// Ingredient name or index → product keys. Rank-1 auto selection when absent.
    #[arg(long)]
    selection: Option<PathBuf>,
    /// Service config whose `data` section supplies the defaults below.
    #[arg(long, env = "MEALPRINT_CONFIG")]
    config: Option<PathBuf>,
    #[arg(long, env = "MEALPRINT_CATALOGS", conflicts_with = "store")]
    catalogs: Option<PathBuf>,
    #[arg(long, env = "MEALPRINT_STORE")]
    store: Option<PathBuf>,
    #[arg(long, env = "MEALPRINT_INDEX_DIR")]
    index_dir: Option<PathBuf>,
    #[arg(long, value_enum)]
    provider: Option<Provider>,
    /// Engine settings (k, auto floor, countries, cooking).
    #[arg(long)]
    engine_config: Option<PathBuf>,
    /// Household unit conversion table.
    #[arg(long)]
    conversions: Option<PathBuf>,
}

#[derive(Args)]
struct ServeArgs {
    #[arg(long, env = "MEALPRINT_CONFIG")]
    config: PathBuf,
    /// Overrides `bind` from the config.
    #[arg(long, env = "MEALPRINT_BIND")]
    bind: Option<String>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let filter = tracing_subscriber::EnvFilter::try_new(&cli.log).unwrap_or_else(|_| tracing_subscriber::EnvFilter::new("warn"));
    tracing_subscriber::fmt().with_env_filter(filter).with_writer(std::io::stderr).init();
    let outcome = match cli.command {
        Command::Ingest(a) => ingest(a),
        Command::Index(a) => index(a),
        Command::Assess(a) => assess(a),
        Command::Serve(a) => serve(a),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_INPUT)
        }
    }
}

fn ingest(args: IngestArgs) -> Result<ExitCode> {
    let (records, reports): (Vec<_>, Vec<RejectionReport>) = match (&args.manifest, args.source) {
        (Some(path), _) => {
            let out = CatalogManifest::load(path)?.ingest()?;
            (out.store.records().to_vec(), out.reports)
        }
        (None, Some(source)) => {
            let (input, mapping) = (args.input.as_ref().expect("clap"), args.mapping.as_ref().expect("clap"));
            let mapping = ColumnMapping::load(mapping)?;
            let out = load_catalog(source, input, &mapping)?;
            (out.records, vec![out.report])
        }
        (None, None) => bail!("either --manifest or --source/--input/--mapping is required"),
    };

    let mut store = if args.merge && args.out.exists() {
        ProductStore::load(&args.out).with_context(|| format!("existing store {}", args.out.display()))?
    } else {
        ProductStore::default()
    };
    for report in &reports {
        let fresh = records.iter().filter(|r| r.source == report.source).cloned().collect();
        store = store.with_source_replaced(report.source, fresh);
    }

    let validation = validate_store(store.records());
    if !validation.accepted() {
        for v in validation.violations.iter().take(20) {
            eprintln!("  {}: {:?}", v.product_id, v.kind);
        }
        bail!("store rejected: {} violation(s)", validation.violations.len());
    }
    if let Some(parent) = args.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)?;
    }
    store.save(&args.out)?;
    for r in &reports {
        eprintln!("{}: {} of {} rows accepted", r.source, r.accepted, r.rows);
        for rej in &r.rejections {
            eprintln!("  row {}: {}", rej.row, rej.reason);
        }
    }
    if let Some(path) = &args.report {
        std::fs::write(path, serde_json::to_string_pretty(&reports)?)?;
    }
    println!("{} records written to {}", store.len(), args.out.display());
    Ok(ExitCode::SUCCESS)
}

fn index(args: IndexArgs) -> Result<ExitCode> {
    let store = ProductStore::load(&args.store)?;
    let data = DataConfig { embedder: args.provider.into(), ..DataConfig::default() };
    let embedder = data.embedder()?;
    std::fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    for source in DatabaseSource::ALL {
        let records: Vec<_> = store.of_source(source).cloned().collect();
        if records.is_empty() {
            continue;
        }
        let index = build_index(&records, embedder.as_ref())?;
        let path = args.out.join(ProductIndex::file_name(source));
        index.save(&path)?;
        println!("{source}: {} entries, {} dims → {}", index.len(), index.dim(), path.display());
    }
    Ok(ExitCode::SUCCESS)
}

fn data_config(args: &AssessArgs) -> Result<DataConfig> {
    let mut data = match &args.config {
        Some(path) => ServiceConfig::load(path)?.data,
        None => DataConfig::default(),
    };
    if args.catalogs.is_some() || args.store.is_some() {
        data.catalogs = args.catalogs.clone();
        data.store = args.store.clone();
    }
    if args.index_dir.is_some() {
        data.index_dir = args.index_dir.clone();
    }
    if let Some(p) = args.provider {
        data.embedder = p.into();
    }
    if let Some(path) = &args.engine_config {
        data.engine = EngineConfig::load(path)?;
    }
    data.llm = match args.mode {
        Mode::Auto => LlmKind::None,
        Mode::StubLlm => LlmKind::Stub,
    };
    if data.store.is_none() && data.catalogs.is_none() {
        bail!("no product data: pass --catalogs, --store or --config");
    }
    Ok(data)
}

fn run_assessment(engine: &Engine, args: &AssessArgs, mode: ExtractionMode, text: &str) -> Result<AssessmentBundle> {
    let recipe = engine.recipe(text, &args.country)?;
    let Some(path) = &args.selection else {
        return Ok(engine.run_auto(&recipe, mode)?);
    };
    let raw = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let keyed: BTreeMap<String, Vec<ProductKey>> =
        serde_json::from_str(&raw).with_context(|| format!("selection file {}", path.display()))?;
    let parsed = engine.parse(&recipe, mode)?;
    let proposal = engine.propose(&parsed.ingredients, &recipe.target_country)?;
    let selection = SelectionSet::from_keyed(&proposal, &keyed, SelectionMode::User)?;
    let matches = engine.confirm(&proposal, &selection)?;
    Ok(engine.assess(&recipe.text, &matches)?)
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<()> {
    let path = dir.join(name);
    std::fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))
}

fn assess(args: AssessArgs) -> Result<ExitCode> {
    let text = std::fs::read_to_string(&args.recipe_file).with_context(|| format!("reading {}", args.recipe_file.display()))?;
    if text.trim().is_empty() {
        bail!("recipe file {} is empty", args.recipe_file.display());
    }
    let data = data_config(&args)?;
    let mut engine = data.build_engine()?;
    if let Some(path) = &args.conversions {
        engine = engine.with_table(ConversionTable::load(path)?);
    }
    let bundle = run_assessment(&engine, &args, data.extraction_mode(), &text)?;

    std::fs::create_dir_all(&args.out_dir).with_context(|| format!("creating {}", args.out_dir.display()))?;
    write(&args.out_dir, "report.txt", &bundle.report)?;
    write(&args.out_dir, "results.txt", &bundle.results_text)?;
    write(&args.out_dir, "assessment.json", &bundle.to_json())?;
    charts::bar(&bundle.assessment, &args.out_dir.join("bar.png"))?;
    charts::pie(&bundle.assessment, &args.out_dir.join("pie.png"))?;

    print!("{}", bundle.report);
    if !bundle.report.ends_with('\n') {
        println!();
    }
    let unmatched = &bundle.assessment.unmatched;
    if unmatched.is_empty() {
        Ok(ExitCode::SUCCESS)
    } else {
        eprintln!("unmatched ingredients: {}", unmatched.join(", "));
        Ok(ExitCode::from(EXIT_UNMATCHED))
    }
}

fn serve(args: ServeArgs) -> Result<ExitCode> {
    let mut config = ServiceConfig::load(&args.config)?;
    if let Some(bind) = args.bind {
        config.bind = bind;
    }
    let runtime = tokio::runtime::Runtime::new()?;
    runtime.block_on(mealprint_service::serve(config))?;
    Ok(ExitCode::SUCCESS)
}
