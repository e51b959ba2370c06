//! `conjr`: command-line front end for the conjunct resolution toolkit.
//!
//! Machine-readable output goes to stdout, diagnostics to stderr. Exit
//! status is 0 on success, 1 on usage errors and 2 on data errors.

mod adapter;

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{self, BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use conjr_core::dataset::{self, DatasetError, SplitSizes};
use conjr_core::metric::{calibration_predictions, render_table};
use conjr_core::nucleus::sentence_nuclei;
use conjr_core::pattern::{
    builtin_specs, compile_all, dump_catalog, mine_corpus, parse_catalog, CompiledPattern,
    MineConfig, PatternSpec,
};
use conjr_core::{
    consolidate, detect, evaluate_corpus, iaa, parse_conllu, validate, Aggregation,
    CalibrationMode, DepGraph, Instance, LabelProfile, Prediction, RewriteSet,
};
use conjr_service::{AppState, ServiceConfig};
use serde::{Deserialize, Serialize};
use serde_json::json;

#[derive(Debug, Parser)]
#[command(name = "conjr", version, about = "Conjunct resolution toolkit")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Global {
    /// Label profile: "default", "ud", or a JSON profile file.
    #[arg(long, global = true, env = "CONJR_PROFILE", default_value = "default")]
    profile: String,
    /// Pattern catalog file replacing the builtin catalog.
    #[arg(long, global = true, env = "CONJR_CATALOG")]
    catalog: Option<PathBuf>,
    /// External parser command, run through `sh -c`: sentences on stdin,
    /// CoNLL-U on stdout.
    #[arg(long, global = true, env = "CONJR_PARSER_CMD")]
    parser_cmd: Option<String>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Match the pattern catalog against parsed sentences.
    Detect {
        /// CoNLL-U file, or `-` for stdin.
        #[arg(long)]
        conllu: PathBuf,
    },
    /// Stream a parsed corpus and emit candidate records as JSON-lines.
    Mine {
        #[arg(long)]
        conllu: PathBuf,
        /// Also write a random sample of records here for manual review.
        #[arg(long)]
        audit: Option<PathBuf>,
        #[arg(long, default_value_t = 0.0)]
        audit_rate: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Verb nuclei of every sentence, as JSON-lines.
    Nuclei {
        #[arg(long)]
        conllu: PathBuf,
    },
    /// Score predictions against gold rewrites.
    Eval(EvalArgs),
    /// Check annotator submissions against the validation rules.
    Validate {
        #[arg(long)]
        dataset: PathBuf,
        /// JSON-lines submissions, optionally carrying a `conllu` list.
        #[arg(long)]
        submissions: PathBuf,
    },
    /// Pick a gold answer per instance from annotator submissions.
    Consolidate {
        #[arg(long)]
        submissions: PathBuf,
        /// JSON object mapping annotator ids to quality scores.
        #[arg(long)]
        ranking: Option<PathBuf>,
    },
    /// Inter-annotator agreement over submissions grouped by instance.
    Iaa {
        #[arg(long)]
        submissions: PathBuf,
    },
    /// Dataset statistics.
    Stats {
        #[arg(long)]
        dataset: PathBuf,
        /// Skip schema-violating lines instead of failing.
        #[arg(long)]
        lenient: bool,
    },
    /// Assign train/validation/test splits.
    Split {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Fractions for train, validation and test.
        #[arg(long, value_delimiter = ',', conflicts_with = "sizes")]
        ratios: Option<Vec<f64>>,
        /// Exact partition sizes for train, validation and test.
        #[arg(long, value_delimiter = ',')]
        sizes: Option<Vec<usize>>,
    },
    /// Pattern catalog utilities.
    Patterns {
        #[command(subcommand)]
        command: PatternsCommand,
    },
    /// Run the annotation HTTP service.
    Serve {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        journal: PathBuf,
        #[arg(long, env = "CONJR_ADDR", default_value = "127.0.0.1:8080")]
        addr: String,
        #[arg(long, default_value_t = 3)]
        min_submissions: usize,
    },
    /// Parse raw sentences (one per line) with the external parser.
    Parse {
        /// Text file, or `-` for stdin.
        #[arg(long, default_value = "-")]
        input: PathBuf,
    },
    /// Convert the upstream release format to instance JSON-lines.
    Convert {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Subcommand)]
enum PatternsCommand {
    /// Print the active catalog.
    Dump {
        #[arg(long, value_enum, default_value_t = DumpFormat::Catalog)]
        format: DumpFormat,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum DumpFormat {
    Catalog,
    Json,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[arg(long)]
    gold: PathBuf,
    /// JSON-lines predictions `{id, sentences, conllu}`. Predictions without
    /// parses are parsed with the external parser.
    #[arg(long, required_unless_present = "calibration")]
    pred: Option<PathBuf>,
    /// Score an echo baseline instead of predictions.
    #[arg(long, value_enum, conflicts_with = "pred")]
    calibration: Option<Calibration>,
    #[arg(long, value_enum, default_value_t = Mode::Macro)]
    mode: Mode,
    #[arg(long)]
    per_instance: bool,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// System name for the table row.
    #[arg(long, default_value = "system")]
    system: String,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Calibration {
    One,
    K,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Mode {
    Macro,
    Micro,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Table,
}

/// Marks errors caused by how the tool was invoked.
#[derive(Debug)]
struct UsageError(String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

fn is_usage(err: &anyhow::Error) -> bool {
    err.chain()
        .any(|e| e.is::<UsageError>() || matches!(e.downcast_ref(), Some(DatasetError::Usage(_))))
}

fn is_broken_pipe(err: &anyhow::Error) -> bool {
    err.chain().any(|e| {
        e.downcast_ref::<io::Error>()
            .is_some_and(|e| e.kind() == io::ErrorKind::BrokenPipe)
    })
}

fn print_text(text: &str) -> Result<()> {
    let mut out = io::stdout().lock();
    out.write_all(text.as_bytes())?;
    out.flush()?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        // a closed downstream pipe (`conjr ... | head`) is not a failure
        Err(e) if is_broken_pipe(&e) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(if is_usage(&e) { 1 } else { 2 })
        }
    }
}

struct Env {
    profile: LabelProfile,
    specs: Vec<PatternSpec>,
    parser_cmd: Option<String>,
}

impl Env {
    fn patterns(&self) -> Result<Vec<CompiledPattern>> {
        compile_all(&self.specs, &self.profile).context("compiling pattern catalog")
    }

    fn parser(&self) -> Result<&str> {
        self.parser_cmd
            .as_deref()
            .ok_or_else(|| usage("no parser configured (set --parser-cmd or CONJR_PARSER_CMD)"))
    }
}

fn resolve(global: Global) -> Result<Env> {
    let profile = match LabelProfile::by_name(&global.profile) {
        Ok(p) => p,
        Err(_) if Path::new(&global.profile).is_file() => {
            let text = read_path(Path::new(&global.profile))?;
            let p: LabelProfile = serde_json::from_str(&text)
                .with_context(|| format!("profile {}", global.profile))?;
            p.validate()
                .with_context(|| format!("profile {}", global.profile))?;
            p
        }
        Err(e) => return Err(usage(e.to_string())),
    };
    let specs = match &global.catalog {
        None => builtin_specs(),
        Some(path) => parse_catalog(&read_path(path)?)
            .with_context(|| format!("catalog {}", path.display()))?,
    };
    Ok(Env {
        profile,
        specs,
        parser_cmd: global.parser_cmd,
    })
}

fn read_path(path: &Path) -> Result<String> {
    if path == Path::new("-") {
        let mut s = String::new();
        io::stdin()
            .read_to_string(&mut s)
            .context("reading stdin")?;
        return Ok(s);
    }
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn open_path(path: &Path) -> Result<Box<dyn BufRead>> {
    if path == Path::new("-") {
        return Ok(Box::new(BufReader::new(io::stdin())));
    }
    let f = File::open(path).with_context(|| format!("cannot read {}", path.display()))?;
    Ok(Box::new(BufReader::new(f)))
}

fn read_graphs(path: &Path) -> Result<Vec<DepGraph>> {
    parse_conllu(&read_path(path)?).with_context(|| format!("{}", path.display()))
}

fn load_dataset(path: &Path, lenient: bool) -> Result<Vec<Instance>> {
    let loaded = dataset::load(path, lenient).with_context(|| format!("{}", path.display()))?;
    for (line, msg) in &loaded.rejected {
        eprintln!("{}: skipped line {line}: {msg}", path.display());
    }
    if !loaded.rejected.is_empty() {
        eprintln!(
            "{}: {} line(s) skipped",
            path.display(),
            loaded.rejected.len()
        );
    }
    Ok(loaded.instances)
}

fn read_jsonl<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let mut out = Vec::new();
    for (i, line) in open_path(path)?.lines().enumerate() {
        let line = line.with_context(|| format!("reading {}", path.display()))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(
            serde_json::from_str(&line)
                .with_context(|| format!("{} line {}", path.display(), i + 1))?,
        );
    }
    Ok(out)
}

fn sentence_id(g: &DepGraph, ordinal: usize) -> String {
    g.id()
        .map(str::to_string)
        .unwrap_or_else(|| format!("s{ordinal}"))
}

fn print_json<T: Serialize>(value: &T) -> Result<()> {
    let mut out = io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

fn print_jsonl<T: Serialize>(rows: impl IntoIterator<Item = T>) -> Result<()> {
    let mut out = BufWriter::new(io::stdout().lock());
    for row in rows {
        serde_json::to_writer(&mut out, &row)?;
        writeln!(out)?;
    }
    out.flush()?;
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let ctx = resolve(cli.global)?;
    match cli.command {
        Command::Detect { conllu } => cmd_detect(&ctx, &conllu),
        Command::Mine {
            conllu,
            audit,
            audit_rate,
            seed,
        } => cmd_mine(&ctx, &conllu, audit.as_deref(), audit_rate, seed),
        Command::Nuclei { conllu } => cmd_nuclei(&ctx, &conllu),
        Command::Eval(args) => cmd_eval(&ctx, args),
        Command::Validate {
            dataset,
            submissions,
        } => cmd_validate(&dataset, &submissions),
        Command::Consolidate {
            submissions,
            ranking,
        } => cmd_consolidate(&submissions, ranking.as_deref()),
        Command::Iaa { submissions } => {
            let groups = group_latest(read_jsonl(&submissions)?);
            print_json(&iaa(&groups))
        }
        Command::Stats { dataset, lenient } => {
            let instances = load_dataset(&dataset, lenient)?;
            print_json(&dataset::stats(&instances, &ctx.profile))
        }
        Command::Split {
            dataset,
            out,
            seed,
            ratios,
            sizes,
        } => cmd_split(&dataset, &out, seed, ratios, sizes),
        Command::Patterns {
            command: PatternsCommand::Dump { format },
        } => {
            // compile first so a broken catalog is reported, not dumped
            ctx.patterns()?;
            match format {
                DumpFormat::Catalog => print_text(&dump_catalog(&ctx.specs)),
                DumpFormat::Json => print_json(&ctx.specs),
            }
        }
        Command::Serve {
            dataset,
            journal,
            addr,
            min_submissions,
        } => cmd_serve(ctx, &dataset, &journal, &addr, min_submissions),
        Command::Parse { input } => {
            let text = read_path(&input)?;
            let sentences: Vec<String> = text
                .lines()
                .filter(|l| !l.trim().is_empty())
                .map(str::to_string)
                .collect();
            let docs = adapter::parse_sentences(ctx.parser()?, &sentences)?;
            print_text(&docs.concat())
        }
        Command::Convert { input, out } => {
            let cmd = ctx.parser()?.to_string();
            let instances =
                adapter::convert(&read_path(&input)?, |s| adapter::parse_sentences(&cmd, s))
                    .with_context(|| format!("{}", input.display()))?;
            dataset::save(&out, &instances)?;
            print_json(&json!({ "instances": instances.len(), "out": out }))
        }
    }
}

#[derive(Serialize)]
struct DetectRow {
    sentence_id: String,
    text: String,
    matches: Vec<conjr_core::PatternMatch>,
}

fn cmd_detect(ctx: &Env, path: &Path) -> Result<()> {
    let patterns = ctx.patterns()?;
    let rows: Vec<DetectRow> = read_graphs(path)?
        .iter()
        .enumerate()
        .map(|(i, g)| DetectRow {
            sentence_id: sentence_id(g, i + 1),
            text: g.text().map(str::to_string).unwrap_or_else(|| g.surface()),
            matches: detect(g, &patterns),
        })
        .collect();
    print_json(&rows)
}

fn cmd_mine(
    ctx: &Env,
    path: &Path,
    audit: Option<&Path>,
    audit_rate: f64,
    seed: u64,
) -> Result<()> {
    if !(0.0..=1.0).contains(&audit_rate) {
        return Err(usage(format!(
            "--audit-rate must be in [0, 1], got {audit_rate}"
        )));
    }
    if audit.is_none() && audit_rate > 0.0 {
        return Err(usage("--audit-rate needs --audit"));
    }
    let patterns = ctx.patterns()?;
    let mut audit_out = match audit {
        Some(p) => Some(BufWriter::new(
            File::create(p).with_context(|| format!("cannot create {}", p.display()))?,
        )),
        None => None,
    };
    let mut out = BufWriter::new(io::stdout().lock());
    let config = MineConfig {
        audit_rate,
        seed,
        ..MineConfig::default()
    };
    let counters = mine_corpus(open_path(path)?, &patterns, &config, |rec, audited| {
        let line = serde_json::to_string(rec).map_err(io::Error::other)?;
        writeln!(out, "{line}")?;
        if audited {
            if let Some(a) = audit_out.as_mut() {
                writeln!(a, "{line}")?;
            }
        }
        Ok(())
    })
    .with_context(|| format!("mining {}", path.display()))?;
    out.flush()?;
    if let Some(mut a) = audit_out {
        a.flush()?;
    }
    for e in &counters.errors {
        eprintln!("skipped: {e}");
    }
    eprintln!(
        "{} sentences, {} skipped, {} matched, {} records, {} audited",
        counters.sentences,
        counters.skipped,
        counters.matched_sentences,
        counters.records,
        counters.audited
    );
    Ok(())
}

#[derive(Serialize)]
struct NucleusRow<'a> {
    sentence_id: &'a str,
    verb: &'a str,
    triplets: Vec<[&'a str; 3]>,
}

fn cmd_nuclei(ctx: &Env, path: &Path) -> Result<()> {
    let graphs = read_graphs(path)?;
    let mut out = BufWriter::new(io::stdout().lock());
    for (i, g) in graphs.iter().enumerate() {
        let id = sentence_id(g, i + 1);
        for n in sentence_nuclei(g, &ctx.profile) {
            let row = NucleusRow {
                sentence_id: &id,
                verb: &n.verb,
                triplets: n
                    .triplets()
                    .iter()
                    .map(|t| [t.w1.as_str(), t.dep.as_str(), t.w2.as_str()])
                    .collect(),
            };
            serde_json::to_writer(&mut out, &row)?;
            writeln!(out)?;
        }
    }
    out.flush()?;
    Ok(())
}

/// A prediction as read from disk; parses may be left for the adapter.
#[derive(Deserialize)]
struct RawPrediction {
    id: String,
    sentences: Vec<String>,
    #[serde(default)]
    conllu: Vec<String>,
}

fn cmd_eval(ctx: &Env, args: EvalArgs) -> Result<()> {
    let instances = load_dataset(&args.gold, false)?;
    let predictions = match (&args.pred, args.calibration) {
        (_, Some(c)) => calibration_predictions(
            &instances,
            match c {
                Calibration::One => CalibrationMode::One,
                Calibration::K => CalibrationMode::K,
            },
        ),
        (Some(path), None) => {
            let raw: Vec<RawPrediction> = read_jsonl(path)?;
            let unparsed: Vec<String> = raw
                .iter()
                .filter(|p| p.conllu.is_empty())
                .flat_map(|p| p.sentences.iter().cloned())
                .collect();
            let mut parsed = if unparsed.is_empty() {
                Vec::new()
            } else {
                adapter::parse_sentences(ctx.parser()?, &unparsed)?
            }
            .into_iter();
            raw.into_iter()
                .map(|p| {
                    let conllu = if p.conllu.is_empty() {
                        parsed.by_ref().take(p.sentences.len()).collect()
                    } else {
                        p.conllu
                    };
                    Prediction {
                        id: p.id,
                        sentences: p.sentences,
                        conllu,
                    }
                })
                .collect()
        }
        (None, None) => unreachable!("clap requires --pred or --calibration"),
    };
    let mode = match args.mode {
        Mode::Macro => Aggregation::Macro,
        Mode::Micro => Aggregation::Micro,
    };
    let report = evaluate_corpus(
        &instances,
        &predictions,
        &ctx.profile,
        mode,
        args.per_instance,
    )?;
    if report.skipped > 0 {
        eprintln!(
            "{} instance(s) skipped: {}",
            report.skipped,
            report.skipped_ids.join(", ")
        );
    }
    match args.format {
        Format::Json => print_json(&report),
        Format::Table => print_text(&render_table(&report, &args.system)),
    }
}

#[derive(Deserialize)]
struct SubmissionLine {
    #[serde(flatten)]
    submission: RewriteSet,
    #[serde(default)]
    conllu: Option<Vec<String>>,
}

fn cmd_validate(dataset_path: &Path, submissions: &Path) -> Result<()> {
    let instances: BTreeMap<String, Instance> = load_dataset(dataset_path, false)?
        .into_iter()
        .map(|i| (i.id.clone(), i))
        .collect();
    let lines: Vec<SubmissionLine> = read_jsonl(submissions)?;
    let mut rows = Vec::with_capacity(lines.len());
    let mut failed = 0;
    for line in lines {
        let s = &line.submission;
        let inst = instances
            .get(&s.instance_id)
            .ok_or_else(|| anyhow!("submission for unknown instance {}", s.instance_id))?;
        let input = inst
            .input_graph()
            .with_context(|| format!("instance {}", inst.id))?;
        let parses = match &line.conllu {
            None => None,
            Some(docs) => {
                if docs.len() != s.sentences.len() {
                    bail!(
                        "submission {}/{}: {} sentences but {} parses",
                        s.instance_id,
                        s.annotator,
                        s.sentences.len(),
                        docs.len()
                    );
                }
                let mut gs = Vec::with_capacity(docs.len());
                for doc in docs {
                    gs.extend(parse_conllu(doc).with_context(|| {
                        format!("submission {}/{}", s.instance_id, s.annotator)
                    })?);
                }
                Some(gs)
            }
        };
        let report = validate(&input, inst.conjunction.form, s, parses.as_deref());
        failed += usize::from(!report.passed());
        rows.push(json!({
            "instance_id": s.instance_id,
            "annotator": s.annotator,
            "report": report,
        }));
    }
    eprintln!("{} submission(s), {failed} with violations", rows.len());
    print_jsonl(rows)
}

/// Each annotator's last submission per instance, instances in order of
/// first appearance and annotators by id.
fn group_latest(subs: Vec<RewriteSet>) -> Vec<Vec<RewriteSet>> {
    let mut order = Vec::new();
    let mut by_instance: BTreeMap<String, BTreeMap<String, RewriteSet>> = BTreeMap::new();
    for s in subs {
        let group = by_instance.entry(s.instance_id.clone()).or_insert_with(|| {
            order.push(s.instance_id.clone());
            BTreeMap::new()
        });
        group.insert(s.annotator.clone(), s);
    }
    order
        .into_iter()
        .map(|id| {
            by_instance
                .remove(&id)
                .unwrap_or_default()
                .into_values()
                .collect()
        })
        .collect()
}

fn cmd_consolidate(submissions: &Path, ranking: Option<&Path>) -> Result<()> {
    let ranking: BTreeMap<String, f64> = match ranking {
        None => BTreeMap::new(),
        Some(p) => serde_json::from_str(&read_path(p)?)
            .with_context(|| format!("ranking {}", p.display()))?,
    };
    let mut rows = Vec::new();
    for group in group_latest(read_jsonl(submissions)?) {
        rows.push(consolidate(&group, &ranking)?);
    }
    print_jsonl(rows)
}

fn cmd_split(
    dataset_path: &Path,
    out: &Path,
    seed: u64,
    ratios: Option<Vec<f64>>,
    sizes: Option<Vec<usize>>,
) -> Result<()> {
    let three = |n: usize, flag: &str| {
        if n == 3 {
            Ok(())
        } else {
            Err(usage(format!("{flag} takes three comma-separated values")))
        }
    };
    let sizes = match (ratios, sizes) {
        (_, Some(s)) => {
            three(s.len(), "--sizes")?;
            SplitSizes::Exact([s[0], s[1], s[2]])
        }
        (Some(r), None) => {
            three(r.len(), "--ratios")?;
            SplitSizes::Ratios([r[0], r[1], r[2]])
        }
        (None, None) => SplitSizes::default(),
    };
    let mut instances = load_dataset(dataset_path, false)?;
    let [train, validation, test] = dataset::split(&mut instances, sizes, seed)?;
    dataset::save(out, &instances)?;
    print_json(&json!({ "train": train, "validation": validation, "test": test }))
}

fn cmd_serve(
    ctx: Env,
    dataset_path: &Path,
    journal: &Path,
    addr: &str,
    min_submissions: usize,
) -> Result<()> {
    if min_submissions == 0 {
        return Err(usage("--min-submissions must be at least 1"));
    }
    let instances = load_dataset(dataset_path, false)?;
    let config = ServiceConfig {
        min_submissions,
        profile: ctx.profile,
        ..ServiceConfig::default()
    };
    let state = AppState::open(instances, journal, config)?;
    let runtime = tokio::runtime::Runtime::new().context("starting runtime")?;
    runtime.block_on(async {
        let listener = tokio::net::TcpListener::bind(addr)
            .await
            .with_context(|| format!("cannot bind {addr}"))?;
        eprintln!("listening on {}", listener.local_addr()?);
        conjr_service::serve(listener, state)
            .await
            .context("server failed")
    })
}
