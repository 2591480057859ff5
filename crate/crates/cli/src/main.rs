use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ehr2fhir::config::Config;
use ehr2fhir::equivalence::EquivalenceCache;
use ehr2fhir::mapper::OutputFormat;
use ehr2fhir::pipeline::{format_sweep_table, Pipeline, SweepFile};
use ehr2fhir::Error;

const EXIT_USAGE: u8 = 1;
const EXIT_INPUT: u8 = 2;
const EXIT_INTERNAL: u8 = 3;

/// Convert proprietary XML EHR extracts into FHIR resource bundles.
#[derive(Debug, Parser)]
#[command(name = "ehr2fhir", version)]
struct Cli {
    /// Configuration file; the built-in systmone/mmedica sources when unset.
    #[arg(long, global = true, env = "EHR2FHIR_CONFIG")]
    config: Option<PathBuf>,
    /// Equivalence cache directory, overriding the configuration.
    #[arg(long, global = true, env = "EHR2FHIR_CACHE_DIR")]
    cache_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Convert one or more records to FHIR bundles.
    Convert(ConvertArgs),
    /// Compare parameter configurations on one record.
    Report(ReportArgs),
    /// Inspect or empty the equivalence cache.
    Cache {
        #[command(subcommand)]
        action: CacheAction,
    },
    /// Inspect the FHIR catalog.
    Catalog {
        #[command(subcommand)]
        action: CatalogAction,
    },
}

#[derive(Debug, Args)]
struct ConvertArgs {
    #[arg(long)]
    source: String,
    /// EHR extract(s); several inputs convert concurrently.
    #[arg(long, required = true, num_args = 1..)]
    input: Vec<PathBuf>,
    /// Catalog file overriding the configuration.
    #[arg(long)]
    catalog: Option<PathBuf>,
    /// Output file, or a directory when converting several inputs.
    /// Standard output when unset.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value = "xml")]
    format: OutputFormat,
    /// Report file; defaults to `<out>.report.json` beside the output.
    #[arg(long)]
    report: Option<PathBuf>,
    #[arg(long)]
    no_cache: bool,
}

#[derive(Debug, Args)]
struct ReportArgs {
    #[arg(long)]
    source: String,
    #[arg(long)]
    input: PathBuf,
    /// JSON file with a `configurations` list.
    #[arg(long)]
    sweep: PathBuf,
    #[arg(long)]
    catalog: Option<PathBuf>,
    /// Print rows as JSON instead of a table.
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Subcommand)]
enum CacheAction {
    Clear,
    Stats,
}

#[derive(Debug, Subcommand)]
enum CatalogAction {
    Inspect {
        #[arg(long)]
        types: bool,
        #[arg(long)]
        catalog: Option<PathBuf>,
    },
}

#[derive(Debug)]
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }

    fn input(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_INPUT,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Ingest(_) => EXIT_INPUT,
            Error::Invariant(_) | Error::Reformat(_) => EXIT_INTERNAL,
            _ => EXIT_USAGE,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let usage = e.use_stderr();
            let _ = e.print();
            return ExitCode::from(if usage { EXIT_USAGE } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("ehr2fhir: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let mut config = match &cli.config {
        Some(path) => Config::load(path)?,
        None => Config::builtin(),
    };
    if let Some(dir) = cli.cache_dir {
        config.cache_dir = dir;
    }
    match cli.command {
        Command::Convert(args) => convert(config, args),
        Command::Report(args) => report(config, args),
        Command::Cache { action } => cache(&config, action),
        Command::Catalog {
            action: CatalogAction::Inspect { types, catalog },
        } => {
            if catalog.is_some() {
                config.catalog = catalog;
            }
            let pipeline = Pipeline::from_config(&config)?;
            print!("{}", pipeline.catalog().inspect(types));
            Ok(())
        }
    }
}

fn read_input(path: &Path) -> Result<Vec<u8>, Failure> {
    fs::read(path).map_err(|e| Failure::input(format!("{}: {e}", path.display())))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Failure::usage(format!("{}: {e}", parent.display())))?;
    }
    fs::write(path, bytes).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
}

fn report_path(out: &Path) -> PathBuf {
    let mut name = out.file_stem().unwrap_or_default().to_os_string();
    name.push(".report.json");
    out.with_file_name(name)
}

fn convert(mut config: Config, args: ConvertArgs) -> Result<(), Failure> {
    if args.catalog.is_some() {
        config.catalog = args.catalog.clone();
    }
    let source = config.source(&args.source).map_err(|e| Failure::usage(e.to_string()))?;
    let params = source.parameters.clone();
    let terminology = config.terminology(source)?;
    let mut pipeline = Pipeline::from_config(&config)?;
    if !args.no_cache {
        pipeline = pipeline.with_cache(EquivalenceCache::new(&config.cache_dir));
    }

    if args.input.len() > 1 && args.out.is_none() {
        return Err(Failure::usage("--out must name a directory when converting several inputs"));
    }
    let destinations: Vec<Option<PathBuf>> = match &args.out {
        Some(dir) if args.input.len() > 1 => args
            .input
            .iter()
            .map(|i| {
                let stem = i.file_stem().unwrap_or_default().to_string_lossy();
                Some(dir.join(format!("{stem}.{}", args.format.extension())))
            })
            .collect(),
        out => vec![out.clone()],
    };

    let results: Vec<Result<(), Failure>> = std::thread::scope(|s| {
        let handles: Vec<_> = args
            .input
            .iter()
            .zip(&destinations)
            .map(|(input, out)| {
                let (pipeline, params, terminology) = (&pipeline, &params, &terminology);
                let report = if args.input.len() == 1 { args.report.clone() } else { None };
                s.spawn(move || -> Result<(), Failure> {
                    let bytes = read_input(input)?;
                    let conversion = pipeline.convert(&bytes, params, terminology).map_err(|e| {
                        let f = Failure::from(e);
                        Failure {
                            message: format!("{}: {}", input.display(), f.message),
                            ..f
                        }
                    })?;
                    log::info!(
                        "{}: {} of {} elements matched, cache {}",
                        input.display(),
                        conversion.report.matched.len(),
                        conversion.report.elements,
                        if conversion.cache_hit { "hit" } else { "miss" }
                    );
                    let bundle = conversion.serialize(args.format);
                    match out {
                        Some(path) => write_file(path, &bundle)?,
                        None => io::stdout()
                            .lock()
                            .write_all(&bundle)
                            .map_err(|e| Failure::usage(format!("stdout: {e}")))?,
                    }
                    let report_file = report.or_else(|| out.as_deref().map(report_path));
                    if let Some(path) = report_file {
                        write_file(&path, &conversion.report.to_json())?;
                    }
                    Ok(())
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().unwrap_or_else(|_| Err(Failure {
                code: EXIT_INTERNAL,
                message: "conversion thread panicked".into(),
            })))
            .collect()
    });

    let single = results.len() == 1;
    let mut worst: Option<Failure> = None;
    for f in results.into_iter().filter_map(Result::err) {
        if single {
            return Err(f);
        }
        eprintln!("ehr2fhir: {}", f.message);
        if worst.as_ref().map_or(true, |w| f.code > w.code) {
            worst = Some(f);
        }
    }
    match worst {
        None => Ok(()),
        Some(f) => Err(Failure {
            message: "some inputs failed".into(),
            ..f
        }),
    }
}

fn report(mut config: Config, args: ReportArgs) -> Result<(), Failure> {
    if args.catalog.is_some() {
        config.catalog = args.catalog.clone();
    }
    let source = config.source(&args.source).map_err(|e| Failure::usage(e.to_string()))?;
    let terminology = config.terminology(source)?;
    let sweep = SweepFile::load(&args.sweep)?;
    let pipeline = Pipeline::from_config(&config)?;
    let bytes = read_input(&args.input)?;
    let rows = pipeline.sweep(&bytes, &sweep.configurations, &terminology)?;
    if args.json {
        let text = serde_json::to_string_pretty(&rows).expect("rows serialize");
        println!("{text}");
    } else {
        print!("{}", format_sweep_table(&rows));
    }
    Ok(())
}

fn cache(config: &Config, action: CacheAction) -> Result<(), Failure> {
    let cache = EquivalenceCache::new(&config.cache_dir);
    match action {
        CacheAction::Clear => {
            match cache.clear() {
                Ok(removed) => println!("removed {removed} entries"),
                Err(e) => log::warn!("{}: {e}", config.cache_dir.display()),
            }
        }
        CacheAction::Stats => {
            let stats = cache.stats();
            println!("entries: {}", stats.entries);
            println!("hits: {}", stats.hits);
            println!("misses: {}", stats.misses);
        }
    }
    Ok(())
}
