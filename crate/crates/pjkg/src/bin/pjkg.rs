//! Command-line driver: build graphs from bundle directories, compute
//! metrics, run the query benchmark, export, and generate fixtures.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 usage or config error.

use clap::{Args, Parser, Subcommand};
use pjkg::bench::{
    replicate_graph, run_bench, scalability_pct, MonotonicClock, WorkloadSpec,
};
use pjkg::extraction::{BackendConfig, BackendKind, ExtractionBackend, HttpBackend, MockBackend};
use pjkg::graph::export::ExportFormat;
use pjkg::metrics::{align_and_score, structural_report};
use pjkg::ontology::OntologySchema;
use pjkg::pipeline::{build_corpus, load_corpus, union_graphs, BuildOptions};
use pjkg::{fixtures, PropertyGraph};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

const EXIT_FAILURE: u8 = 1;
const EXIT_USAGE: u8 = 2;

#[derive(Parser)]
#[command(name = "pjkg", version, about = "Patient journey knowledge graph toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build per-patient graphs from a bundle directory
    Build(BuildArgs),
    /// Compute structural or semantic metrics over a graph
    Metrics(MetricsArgs),
    /// Run the latency/throughput/scalability benchmark
    Bench(BenchArgs),
    /// Export a graph as json, graphml, or a cypher statement script
    Export(ExportArgs),
    /// Generate a synthetic corpus with canned mock responses
    GenFixtures(GenFixturesArgs),
}

#[derive(Args)]
struct BuildArgs {
    /// Corpus root: one subdirectory per patient bundle
    #[arg(long)]
    input: PathBuf,
    /// Extraction backend
    #[arg(long, default_value = "mock")]
    backend: String,
    /// Output directory for graph json files and the manifest
    #[arg(long)]
    out: PathBuf,
    /// Mock fixture file (defaults to <input>/mock_responses.json)
    #[arg(long)]
    mock_fixture: Option<PathBuf>,
    /// Alternate ontology schema json
    #[arg(long)]
    schema: Option<PathBuf>,
    /// Abort a patient on the first validation failure
    #[arg(long)]
    strict: bool,
    /// Retries per encounter on malformed output
    #[arg(long, default_value_t = 2)]
    max_retries: u32,
}

#[derive(Args)]
struct MetricsArgs {
    /// Metric family: structural or semantic
    kind: String,
    #[arg(long)]
    graph: PathBuf,
    /// Ground-truth graph json (semantic only)
    #[arg(long)]
    truth: Option<PathBuf>,
    #[arg(long)]
    schema: Option<PathBuf>,
    /// Emit json instead of the table
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long)]
    graph: PathBuf,
    /// Scale factors for the scalability metric, e.g. 1,2,4
    #[arg(long, value_delimiter = ',')]
    scale: Vec<u32>,
    #[arg(long, default_value_t = 4)]
    concurrency: usize,
    #[arg(long, default_value_t = 1000)]
    queries: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long)]
    schema: Option<PathBuf>,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct ExportArgs {
    #[arg(long)]
    graph: PathBuf,
    /// json, graphml, or cypher-script
    #[arg(long)]
    format: String,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    schema: Option<PathBuf>,
}

#[derive(Args)]
struct GenFixturesArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 6)]
    patients: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Write the curated two-patient golden corpus instead of the
    /// generated one
    #[arg(long)]
    golden: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Build(args) => cmd_build(&args),
        Command::Metrics(args) => cmd_metrics(&args),
        Command::Bench(args) => cmd_bench(&args),
        Command::Export(args) => cmd_export(&args),
        Command::GenFixtures(args) => cmd_gen_fixtures(&args),
    };
    match code {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(CliError::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_FAILURE)
        }
    }
}

enum CliError {
    Usage(String),
    Runtime(String),
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn runtime(msg: impl ToString) -> CliError {
    CliError::Runtime(msg.to_string())
}

fn load_schema(path: &Option<PathBuf>) -> Result<Arc<OntologySchema>, CliError> {
    match path {
        None => Ok(Arc::new(OntologySchema::default_schema())),
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| usage(format!("cannot read schema {}: {e}", path.display())))?;
            OntologySchema::from_json(&text)
                .map(Arc::new)
                .map_err(|e| usage(format!("bad schema {}: {e}", path.display())))
        }
    }
}

fn load_graph(path: &Path, schema: Arc<OntologySchema>) -> Result<PropertyGraph, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| runtime(format!("cannot read graph {}: {e}", path.display())))?;
    PropertyGraph::from_canonical_json(&text, schema)
        .map_err(|e| runtime(format!("cannot load graph {}: {e}", path.display())))
}

fn make_backend(args: &BuildArgs) -> Result<Box<dyn ExtractionBackend>, CliError> {
    match args.backend.as_str() {
        "mock" => {
            let path = args
                .mock_fixture
                .clone()
                .unwrap_or_else(|| args.input.join("mock_responses.json"));
            let text = std::fs::read_to_string(&path)
                .map_err(|e| usage(format!("cannot read mock fixture {}: {e}", path.display())))?;
            MockBackend::from_fixture(&text)
                .map(|b| Box::new(b) as Box<dyn ExtractionBackend>)
                .map_err(|e| usage(e.to_string()))
        }
        "http" => {
            let config = BackendConfig {
                kind: BackendKind::Http,
                endpoint: std::env::var("PJKG_LLM_ENDPOINT").unwrap_or_default(),
                model: std::env::var("PJKG_LLM_MODEL").unwrap_or_default(),
                api_key_env: "PJKG_LLM_API_KEY".to_string(),
                max_retries: args.max_retries,
                timeout_secs: 60,
            };
            HttpBackend::from_config(&config)
                .map(|b| Box::new(b) as Box<dyn ExtractionBackend>)
                .map_err(|e| usage(e.to_string()))
        }
        other => Err(usage(format!("unknown backend: {other}"))),
    }
}

fn cmd_build(args: &BuildArgs) -> Result<(), CliError> {
    if !args.input.is_dir() {
        return Err(usage(format!(
            "input directory {} does not exist",
            args.input.display()
        )));
    }
    let schema = load_schema(&args.schema)?;
    let backend = make_backend(args)?;
    let bundles = load_corpus(&args.input).map_err(runtime)?;
    if bundles.is_empty() {
        return Err(usage(format!(
            "no patient bundles under {}",
            args.input.display()
        )));
    }
    let options = BuildOptions {
        strict: args.strict,
        strict_schema: true,
        max_retries: args.max_retries,
    };
    let outcomes = build_corpus(&bundles, backend.as_ref(), Arc::clone(&schema), &options)
        .map_err(runtime)?;

    std::fs::create_dir_all(&args.out).map_err(runtime)?;
    let mut manifest = Vec::new();
    for (bundle, outcome) in bundles.iter().zip(&outcomes) {
        let id = bundle.patient_id().expect("checked by build");
        let file = args.out.join(format!("{id}.json"));
        std::fs::write(&file, outcome.pjkg.to_canonical_json()).map_err(runtime)?;
        manifest.push(serde_json::json!({
            "patient": id,
            "graph": file.file_name().and_then(|n| n.to_str()),
            "encounters": bundle.encounters.len(),
            "integrated": bundle.encounters.len() - outcome.skipped.len(),
            "skipped": outcome.skipped.iter().map(|(id, reason)| {
                serde_json::json!({"encounter": id, "reason": reason})
            }).collect::<Vec<_>>(),
        }));
    }
    std::fs::write(
        args.out.join("manifest.json"),
        format!(
            "{}\n",
            serde_json::to_string_pretty(&serde_json::json!({ "patients": manifest }))
                .expect("serializes")
        ),
    )
    .map_err(runtime)?;

    let skipped: usize = outcomes.iter().map(|o| o.skipped.len()).sum();
    println!(
        "built {} graphs ({} encounters skipped) into {}",
        outcomes.len(),
        skipped,
        args.out.display()
    );
    Ok(())
}

fn cmd_metrics(args: &MetricsArgs) -> Result<(), CliError> {
    let schema = load_schema(&args.schema)?;
    let graph = load_graph(&args.graph, Arc::clone(&schema))?;
    match args.kind.as_str() {
        "structural" => {
            let report = structural_report(&graph, &schema).map_err(runtime)?;
            if args.json {
                println!("{}", report.to_json());
            } else {
                print!("{}", report.to_table());
            }
            Ok(())
        }
        "semantic" => {
            let truth_path = args
                .truth
                .as_ref()
                .ok_or_else(|| usage("semantic metrics need --truth"))?;
            let truth = load_graph(truth_path, schema)?;
            let report = align_and_score(&graph, &truth);
            if args.json {
                println!("{}", report.to_json());
            } else {
                print!("{}", report.to_table());
            }
            Ok(())
        }
        other => Err(usage(format!("unknown metric kind: {other}"))),
    }
}

fn cmd_bench(args: &BenchArgs) -> Result<(), CliError> {
    if args.concurrency == 0 {
        return Err(usage("--concurrency must be at least 1"));
    }
    if args.scale.len() == 1 {
        return Err(usage("--scale needs at least two factors for a baseline"));
    }
    let schema = load_schema(&args.schema)?;
    let graph = load_graph(&args.graph, schema)?;
    let spec = WorkloadSpec {
        queries: args.queries,
        seed: args.seed,
    };
    let mut clock = MonotonicClock::new();
    let mut report = run_bench(&graph, &spec, args.concurrency, &mut clock).map_err(runtime)?;
    if args.scale.len() >= 2 {
        let mut factors = args.scale.clone();
        factors.sort_unstable();
        let mut latencies = Vec::new();
        for &factor in [factors[0], *factors.last().expect("non-empty")].iter() {
            let scaled = replicate_graph(&graph, factor);
            let queries = spec.instantiate(&scaled);
            let mut clock = MonotonicClock::new();
            let (mean, _) =
                pjkg::bench::measure_latency(&scaled, &queries, &mut clock).map_err(runtime)?;
            latencies.push(mean);
        }
        report.scalability_pct = Some(scalability_pct(latencies[0], latencies[1]));
    }
    if args.json {
        println!("{}", report.to_json());
    } else {
        print!("{}", report.to_table());
    }
    Ok(())
}

fn cmd_export(args: &ExportArgs) -> Result<(), CliError> {
    let format: ExportFormat = args
        .format
        .parse()
        .map_err(|e: String| usage(e))?;
    let schema = load_schema(&args.schema)?;
    let graph = load_graph(&args.graph, schema)?;
    std::fs::write(&args.out, graph.export(format))
        .map_err(|e| runtime(format!("cannot write {}: {e}", args.out.display())))?;
    println!("wrote {}", args.out.display());
    Ok(())
}

fn cmd_gen_fixtures(args: &GenFixturesArgs) -> Result<(), CliError> {
    let (bundles, responses) = if args.golden {
        (fixtures::golden_bundles(), fixtures::golden_responses())
    } else {
        fixtures::generate_corpus(args.patients, args.seed)
    };
    std::fs::create_dir_all(&args.out).map_err(runtime)?;
    fixtures::write_corpus(&args.out, &bundles, &responses).map_err(runtime)?;

    // ground truth for the first two patients: the canonical export of
    // their mock-backend build
    let schema = Arc::new(OntologySchema::default_schema());
    let backend = MockBackend::new(responses);
    let truth_bundles: Vec<_> = bundles.iter().take(2).cloned().collect();
    let outcomes = build_corpus(
        &truth_bundles,
        &backend,
        Arc::clone(&schema),
        &BuildOptions::default(),
    )
    .map_err(runtime)?;
    let truth = union_graphs(&outcomes, schema).map_err(runtime)?;
    let truth_dir = args.out.join("ground_truth");
    std::fs::create_dir_all(&truth_dir).map_err(runtime)?;
    std::fs::write(truth_dir.join("truth.json"), truth.to_canonical_json()).map_err(runtime)?;

    println!(
        "wrote {} bundles ({} encounters) and ground truth to {}",
        bundles.len(),
        bundles.iter().map(|b| b.encounters.len()).sum::<usize>(),
        args.out.display()
    );
    Ok(())
}
