mod config;
mod manifest;

use std::collections::{BTreeMap, HashSet};
use std::ffi::OsString;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use groundflow::dataset::{read_corpus, CorpusError, read_documents, read_flows, read_jsonl, split_dataset, write_jsonl, SplitSpec};
use groundflow::dialogue::Role;
use groundflow::document::{doc_stats, ingest_html, parse_plain_text, DocMeta, Document};
use groundflow::eval::{
    document_index, eval_generation, eval_grounding, eval_retrieval_with, generation_gold, grounding_gold, EvalReport,
    Prediction, DEFAULT_B, DEFAULT_K1,
};
use groundflow::flow::{coverage_heatmap, generate_flows, FlowError, GenConfig};
use groundflow::graph::graph_for;
use groundflow::recompose::{recompose_corpus, RecomposeConfig};
use groundflow_service::{EventStore, Service};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::manifest::Run;

#[derive(Parser)]
#[command(name = "groundflow", version, about = "Build, collect and evaluate document-grounded dialogue data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse HTML (or plain text) pages into a document file.
    Ingest(IngestArgs),
    /// Generate dialogue flows for every document.
    Genflows(GenflowsArgs),
    /// Inject irrelevant sub-dialogues and add multi-document dialogues.
    Recompose(RecomposeArgs),
    /// Split dialogues into train / dev / test with unseen documents.
    Split(SplitArgs),
    /// Score predictions or run the retrieval baseline.
    #[command(subcommand)]
    Eval(EvalCommand),
    /// Run the annotation service.
    Serve(ServeArgs),
    /// Per-domain document statistics.
    Stats(StatsArgs),
    /// Position coverage of grounding spans.
    Heatmap(HeatmapArgs),
}

#[derive(Args, Serialize)]
struct IngestArgs {
    /// Directory of pages; pages in a subdirectory take its name as domain.
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Domain for pages directly inside the input directory.
    #[arg(long, default_value = "")]
    domain: String,
}

#[derive(Args, Serialize)]
struct GenflowsArgs {
    #[arg(long)]
    docs: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 10)]
    flows_per_doc: usize,
    #[arg(long, default_value_t = 10)]
    min_turns: usize,
    #[arg(long, default_value_t = 18)]
    max_turns: usize,
    #[arg(long, default_value_t = 14)]
    target_turns: usize,
    #[arg(long, default_value_t = 0.3)]
    p_underspecified: f64,
    #[arg(long, default_value_t = 0.7)]
    p_yes: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Serialize)]
struct RecomposeArgs {
    #[arg(long)]
    dialogues: PathBuf,
    /// Probability that a dialogue receives an irrelevant sub-dialogue.
    #[arg(long, default_value_t = 0.0)]
    irr_rate: f64,
    /// Number of multi-document dialogues to add.
    #[arg(long, default_value_t = 0)]
    merge_k: usize,
    /// Documents per multi-document dialogue.
    #[arg(long, default_value_t = 2)]
    merge_parts: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Serialize)]
struct SplitArgs {
    #[arg(long)]
    dialogues: PathBuf,
    #[arg(long, default_value_t = 0.7)]
    train: f64,
    #[arg(long, default_value_t = 0.15)]
    dev: f64,
    #[arg(long, default_value_t = 0.15)]
    test: f64,
    /// Share of dev and test grounded in documents absent from train.
    #[arg(long, default_value_t = 0.5)]
    unseen: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand)]
enum EvalCommand {
    /// EM / F1 of predicted grounding spans.
    Grounding(GroundingArgs),
    /// BLEU-1..4 of predicted agent utterances.
    Generation(GenerationArgs),
    /// BM25 document retrieval from the earliest turns.
    Retrieval(RetrievalArgs),
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum RoleArg {
    User,
    Agent,
}

#[derive(Args, Serialize)]
struct GroundingArgs {
    #[arg(long)]
    pred: PathBuf,
    /// Dialogue file holding the gold turns.
    #[arg(long)]
    gold: PathBuf,
    #[arg(long)]
    docs: PathBuf,
    #[arg(long, value_enum, default_value = "user")]
    role: RoleArg,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Serialize)]
struct GenerationArgs {
    #[arg(long)]
    pred: PathBuf,
    #[arg(long)]
    gold: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Serialize)]
struct RetrievalArgs {
    #[arg(long)]
    gold: PathBuf,
    #[arg(long)]
    docs: PathBuf,
    /// Turns in the query; repeat for several settings (default 1 to 5).
    #[arg(long)]
    n_turns: Vec<usize>,
    #[arg(long = "k", default_values_t = [1, 5, 10])]
    k: Vec<usize>,
    #[arg(long, default_value_t = DEFAULT_K1)]
    k1: f64,
    #[arg(long, default_value_t = DEFAULT_B)]
    b: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Serialize)]
struct ServeArgs {
    #[arg(long)]
    flows: PathBuf,
    /// Documents for excerpts and domains.
    #[arg(long)]
    docs: Option<PathBuf>,
    #[arg(long, default_value = "127.0.0.1")]
    host: String,
    #[arg(long, default_value_t = 8080)]
    port: u16,
    #[arg(long)]
    store: PathBuf,
}

#[derive(Args, Serialize)]
struct StatsArgs {
    #[arg(long)]
    docs: PathBuf,
    /// Dialogue file for per-domain dialogue counts.
    #[arg(long)]
    dialogues: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Serialize)]
struct HeatmapArgs {
    #[arg(long)]
    flows: PathBuf,
    #[arg(long)]
    docs: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Exit status classes: 1 for usage, 2 for bad or missing data.
enum Failure {
    Usage(anyhow::Error),
    Data(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Data(e)
    }
}

impl From<CorpusError> for Failure {
    fn from(e: CorpusError) -> Self {
        Failure::Data(e.into())
    }
}

type CmdResult = Result<(), Failure>;

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(anyhow!(msg.into()))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> anyhow::Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    let json = serde_json::to_string_pretty(value).expect("reports serialize");
    std::fs::write(path, json + "\n").with_context(|| format!("writing {}", path.display()))
}

fn page_files(dir: &Path) -> anyhow::Result<Vec<PathBuf>> {
    let mut out: Vec<PathBuf> = std::fs::read_dir(dir)
        .with_context(|| format!("reading {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|x| x == "html" || x == "htm" || x == "txt"))
        .collect();
    out.sort();
    Ok(out)
}

fn ingest(args: &IngestArgs) -> CmdResult {
    let run = Run::start();
    if !args.input.is_dir() {
        return Err(usage(format!("--in {} is not a directory", args.input.display())));
    }
    let mut jobs: Vec<(String, PathBuf)> =
        page_files(&args.input)?.into_iter().map(|p| (args.domain.clone(), p)).collect();
    let mut subdirs: Vec<PathBuf> = std::fs::read_dir(&args.input)
        .with_context(|| format!("reading {}", args.input.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_dir())
        .collect();
    subdirs.sort();
    for dir in subdirs {
        let domain = dir.file_name().unwrap_or_default().to_string_lossy().into_owned();
        jobs.extend(page_files(&dir)?.into_iter().map(|p| (domain.clone(), p)));
    }
    let mut docs = Vec::new();
    let mut seen = HashSet::new();
    for (domain, path) in jobs {
        let doc_id = path.file_stem().unwrap_or_default().to_string_lossy().into_owned();
        if !seen.insert(doc_id.clone()) {
            return Err(Failure::Data(anyhow!("document {doc_id}: duplicate id ({})", path.display())));
        }
        let raw = std::fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
        let meta = DocMeta { doc_id: doc_id.clone(), domain, ..Default::default() };
        let doc = if path.extension().is_some_and(|x| x == "txt") {
            parse_plain_text(&raw, meta)
        } else {
            ingest_html(&raw, meta)
        }
        .with_context(|| format!("document {doc_id}"))?;
        for w in &doc.warnings {
            log::warn!("document {doc_id}: {w}");
        }
        docs.push(doc);
    }
    write_jsonl(&args.out, &docs)?;
    eprintln!("ingested {} documents", docs.len());
    run.finish(&args.out, "ingest", args, &[&args.input], &[&args.out], None)?;
    Ok(())
}

fn genflows(args: &GenflowsArgs) -> CmdResult {
    let run = Run::start();
    let config = GenConfig {
        seed: args.seed,
        min_turns: args.min_turns,
        max_turns: args.max_turns,
        target_turns: args.target_turns,
        flows_per_doc: args.flows_per_doc,
        p_underspecified: args.p_underspecified,
        p_yes: args.p_yes,
    };
    config.validate().map_err(|e| usage(e.to_string()))?;
    let docs = read_documents(&args.docs)?;
    let mut flows = Vec::new();
    let mut skipped = 0;
    for doc in &docs {
        let graph = graph_for(doc).with_context(|| format!("document {}", doc.doc_id))?;
        match generate_flows(&graph, &config) {
            Ok(f) => flows.extend(f),
            Err(e @ (FlowError::Ungeneratable(_) | FlowError::TooShort { .. })) => {
                log::warn!("skipping: {e}");
                skipped += 1;
            }
            Err(e) => return Err(Failure::Data(e.into())),
        }
    }
    write_jsonl(&args.out, &flows)?;
    eprintln!("{} flows from {} documents ({skipped} skipped)", flows.len(), docs.len() - skipped);
    run.finish(&args.out, "genflows", args, &[&args.docs], &[&args.out], Some(args.seed))?;
    Ok(())
}

fn recompose(args: &RecomposeArgs) -> CmdResult {
    let run = Run::start();
    if !(0.0..=1.0).contains(&args.irr_rate) {
        return Err(usage("--irr-rate must lie in [0, 1]"));
    }
    let dialogues = read_corpus(&args.dialogues)?;
    let config = RecomposeConfig { irr_rate: args.irr_rate, merge_count: args.merge_k, merge_parts: args.merge_parts };
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let out = recompose_corpus(&dialogues, &config, &mut rng).map_err(|e| Failure::Data(e.into()))?;
    write_jsonl(&args.out, &out)?;
    eprintln!("{} dialogues written", out.len());
    run.finish(&args.out, "recompose", args, &[&args.dialogues], &[&args.out], Some(args.seed))?;
    Ok(())
}

fn split(args: &SplitArgs) -> CmdResult {
    let run = Run::start();
    let spec = SplitSpec {
        train_frac: args.train,
        dev_frac: args.dev,
        test_frac: args.test,
        unseen_frac: args.unseen,
        seed: args.seed,
    };
    let dialogues = read_corpus(&args.dialogues)?;
    let split = split_dataset(&dialogues, &spec).map_err(|e| Failure::Data(e.into()))?;
    std::fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    let mut outputs = Vec::new();
    for (name, part) in split.parts() {
        let path = args.out.join(format!("{name}.jsonl"));
        write_jsonl(&path, part)?;
        eprintln!("{name}: {}", part.len());
        outputs.push(path);
    }
    let ids = args.out.join("split.json");
    write_json(&ids, &split.manifest(&spec))?;
    outputs.push(ids);
    let outs: Vec<&Path> = outputs.iter().map(PathBuf::as_path).collect();
    run.finish(&args.out, "split", args, &[&args.dialogues], &outs, Some(args.seed))?;
    Ok(())
}

fn emit_report<C: Serialize>(run: &Run, name: &str, args: &C, inputs: &[&Path], out: Option<&Path>, report: &EvalReport) -> CmdResult {
    if let Some(out) = out {
        write_json(out, report)?;
        run.finish(out, name, args, inputs, &[out], None)?;
    }
    Ok(())
}

fn eval(cmd: &EvalCommand) -> CmdResult {
    let run = Run::start();
    match cmd {
        EvalCommand::Grounding(a) => {
            let preds: Vec<Prediction> = read_jsonl(&a.pred)?;
            let dialogues = read_corpus(&a.gold)?;
            let docs = read_documents(&a.docs)?;
            let role = match a.role {
                RoleArg::User => Role::User,
                RoleArg::Agent => Role::Agent,
            };
            let gold = grounding_gold(&dialogues, &docs, role).map_err(|e| Failure::Data(e.into()))?;
            let report = eval_grounding(&preds, &gold).map_err(|e| Failure::Data(e.into()))?;
            for (name, g) in [("all", report.all), ("grounded", report.grounded), ("irrelevant", report.irrelevant)] {
                println!("{name}\tn={}\tEM={:.1}\tF1={:.1}", g.count, g.em, g.f1);
            }
            emit_report(&run, "eval grounding", a, &[&a.pred, &a.gold, &a.docs], a.out.as_deref(), &EvalReport::Grounding(report))
        }
        EvalCommand::Generation(a) => {
            let preds: Vec<Prediction> = read_jsonl(&a.pred)?;
            let gold = generation_gold(&read_corpus(&a.gold)?);
            let report = eval_generation(&preds, &gold).map_err(|e| Failure::Data(e.into()))?;
            println!(
                "n={}\tBLEU-1={:.1}\tBLEU-2={:.1}\tBLEU-3={:.1}\tBLEU-4={:.1}",
                report.count, report.bleu[0], report.bleu[1], report.bleu[2], report.bleu[3]
            );
            emit_report(&run, "eval generation", a, &[&a.pred, &a.gold], a.out.as_deref(), &EvalReport::Generation(report))
        }
        EvalCommand::Retrieval(a) => {
            if a.k.is_empty() || a.k.contains(&0) {
                return Err(usage("--k values must be positive"));
            }
            let dialogues = read_corpus(&a.gold)?;
            let docs = read_documents(&a.docs)?;
            let index = document_index(&docs, a.k1, a.b).map_err(|e| Failure::Data(e.into()))?;
            let ns = if a.n_turns.is_empty() { (1..=5).collect() } else { a.n_turns.clone() };
            let mut reports = Vec::new();
            for n in ns {
                let r = eval_retrieval_with(&index, &dialogues, n, &a.k);
                let cells: Vec<String> = a.k.iter().zip(&r.recall).map(|(k, v)| format!("R@{k}={v:.1}")).collect();
                println!("n={n}\t{}\tscored={}\tskipped={}", cells.join("\t"), r.scored, r.skipped);
                reports.push(r);
            }
            emit_report(&run, "eval retrieval", a, &[&a.gold, &a.docs], a.out.as_deref(), &EvalReport::Retrieval(reports))
        }
    }
}

fn serve(args: &ServeArgs) -> CmdResult {
    let flows = read_flows(&args.flows)?;
    let docs = match &args.docs {
        Some(p) => read_documents(p)?,
        None => Vec::new(),
    };
    let addr: SocketAddr = format!("{}:{}", args.host, args.port)
        .parse()
        .map_err(|e| usage(format!("bad --host/--port: {e}")))?;
    let store = EventStore::open(&args.store).map_err(|e| Failure::Data(e.into()))?;
    let service = Arc::new(Service::open(flows, docs, store).map_err(|e| Failure::Data(e.into()))?);
    let rt = tokio::runtime::Runtime::new().context("starting runtime")?;
    rt.block_on(groundflow_service::serve(service, addr)).context("serving")?;
    Ok(())
}

#[derive(Debug, Default, Serialize)]
struct DomainStats {
    domain: String,
    dials: usize,
    docs: usize,
    tk: f64,
    sp: f64,
    p: f64,
    sec: f64,
}

fn domain_row(domain: &str, docs: &[&Document], dials: usize) -> DomainStats {
    let n = docs.len().max(1) as f64;
    let mut row = DomainStats { domain: domain.to_string(), dials, docs: docs.len(), ..Default::default() };
    for d in docs {
        let s = doc_stats(d);
        row.tk += s.tk as f64 / n;
        row.sp += s.sp as f64 / n;
        row.p += s.p as f64 / n;
        row.sec += s.sec as f64 / n;
    }
    row
}

fn stats(args: &StatsArgs) -> CmdResult {
    let run = Run::start();
    let docs = read_documents(&args.docs)?;
    let dialogues = match &args.dialogues {
        Some(p) => read_corpus(p)?,
        None => Vec::new(),
    };
    let mut by_domain: BTreeMap<&str, Vec<&Document>> = BTreeMap::new();
    for d in &docs {
        by_domain.entry(d.domain.as_str()).or_default().push(d);
    }
    let mut rows: Vec<DomainStats> = by_domain
        .iter()
        .map(|(dom, ds)| domain_row(dom, ds, dialogues.iter().filter(|x| x.domain == *dom).count()))
        .collect();
    rows.push(domain_row("all", &docs.iter().collect::<Vec<_>>(), dialogues.len()));
    println!("domain\t#dials\t#docs\ttk\tsp\tp\tsec");
    for r in &rows {
        println!("{}\t{}\t{}\t{:.0}\t{:.0}\t{:.0}\t{:.0}", r.domain, r.dials, r.docs, r.tk, r.sp, r.p, r.sec);
    }
    if let Some(out) = &args.out {
        write_json(out, &rows)?;
        let mut inputs: Vec<&Path> = vec![&args.docs];
        inputs.extend(args.dialogues.as_deref());
        run.finish(out, "stats", args, &inputs, &[out], None)?;
    }
    Ok(())
}

fn heatmap(args: &HeatmapArgs) -> CmdResult {
    let run = Run::start();
    let flows = read_flows(&args.flows)?;
    let docs = read_documents(&args.docs)?;
    let map = coverage_heatmap(&flows, &docs).map_err(|e| Failure::Data(e.into()))?;
    print!("{}", map.render());
    if let Some(out) = &args.out {
        write_json(out, &map)?;
        run.finish(out, "heatmap", args, &[&args.flows, &args.docs], &[out], None)?;
    }
    Ok(())
}

fn run(cli: Cli) -> CmdResult {
    match &cli.command {
        Command::Ingest(a) => ingest(a),
        Command::Genflows(a) => genflows(a),
        Command::Recompose(a) => recompose(a),
        Command::Split(a) => split(a),
        Command::Eval(c) => eval(c),
        Command::Serve(a) => serve(a),
        Command::Stats(a) => stats(a),
        Command::Heatmap(a) => heatmap(a),
    }
}

fn parse_args() -> Result<Cli, Failure> {
    let mut args: Vec<OsString> = std::env::args_os().collect();
    if let Some(path) = config::take_config_flag(&mut args).map_err(Failure::Usage)? {
        let table = config::load(Path::new(&path)).map_err(Failure::Usage)?;
        config::inject(&mut args, &table).map_err(Failure::Usage)?;
    }
    Cli::try_parse_from(args).map_err(|e| {
        if matches!(e.kind(), clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion) {
            let _ = e.print();
            std::process::exit(0);
        }
        Failure::Usage(anyhow!(e.render().to_string()))
    })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let result = parse_args().and_then(run);
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Data(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
