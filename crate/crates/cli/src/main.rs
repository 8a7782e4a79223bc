//! `datascope`: the pipeline without the browser.
//!
//! Exit codes: 0 success, 1 a requested check failed, 2 usage or environment error.

mod manifest;
mod settings;

use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use datascope::coding::{import_coding_csv, CodeSummary, CodingSession, ImportOptions, SessionStore};
use datascope::hypothesis::{render_report, HypothesisStore};
use datascope::mnist::Split;
use datascope::neighborhood::{neighbor_report, PointSet, ReportOptions, Space};
use datascope::newsgroups::Corpus;
use datascope::pipeline::{embed_corpus, embed_images, PipelineOutput, TextPipeline};
use datascope::stats::{LineRule, StatsReport};
use datascope::tsne::{GradientMethod, TsneConfig};
use datascope::layout::Subsample;
use datascope_server::catalog::resolve_split;
use datascope_server::{evidence_layouts, Catalog, LayoutStore, ServerConfig};
use serde::Serialize;

use manifest::Recorder;
use settings::{FileConfig, Settings};

#[derive(Parser)]
#[command(name = "datascope", version, about = "Interrogate standard datasets: statistics, layouts, neighborhoods, coding sessions and reports")]
struct Cli {
    /// Machine-readable JSON on stdout instead of tables.
    #[arg(long, global = true)]
    json: bool,
    /// TOML file with defaults; flags win over it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    data_root: Option<PathBuf>,
    #[arg(long, global = true)]
    state_dir: Option<PathBuf>,
    /// Accept corpora whose document count differs from the published one (fixtures, subsets).
    #[arg(long, global = true)]
    no_count_check: bool,
    /// Run single-threaded.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
enum Dataset {
    #[value(name = "20ng")]
    #[serde(rename = "20ng")]
    Newsgroups,
    #[serde(rename = "mnist")]
    Mnist,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Model {
    Lsi,
    Lda,
    Raw,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a dataset and report counts; `--out` writes 20 Newsgroups as JSONL.
    Ingest {
        dataset: Dataset,
        /// Corpus version, or MNIST split.
        #[arg(long)]
        version: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Author, contribution and quote statistics.
    Stats {
        #[arg(default_value = "20ng")]
        dataset: Dataset,
        #[arg(long)]
        version: Option<String>,
        #[arg(long, default_value = "body")]
        line_rule: String,
        #[arg(long, value_delimiter = ',', default_values_t = [2u64, 3, 10])]
        thresholds: Vec<u64>,
        /// Also write the JSON report here, with a run manifest next to it.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Topic model (or raw pixels) followed by t-SNE; writes a layout.
    Embed(EmbedArgs),
    /// Nearest and farthest same-label neighbors of an anchor.
    Neighbors {
        /// Layout path without extension, e.g. `state/layouts/ng-lsi`.
        #[arg(long)]
        layout: PathBuf,
        #[arg(long)]
        anchor: u64,
        #[arg(long)]
        label: Option<String>,
        #[arg(long)]
        comparison: Option<u64>,
        #[arg(long, default_value = "topic-space")]
        space: String,
        #[arg(long)]
        distances: bool,
    },
    #[command(subcommand)]
    Session(SessionCmd),
    /// Render a hypothesis report from the state directory.
    Report {
        id: String,
        /// Directory for `{id}.md`, `{id}.json` and figure files; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    #[command(subcommand)]
    Hypothesis(HypothesisCmd),
    /// Start the HTTP service.
    Serve {
        #[arg(long)]
        port: Option<u16>,
    },
}

#[derive(Args, Serialize)]
struct EmbedArgs {
    dataset: Dataset,
    /// Corpus version, or MNIST split.
    #[arg(long)]
    version: Option<String>,
    #[arg(long, value_enum)]
    model: Option<Model>,
    /// LSI dimensions or LDA topics.
    #[arg(long)]
    components: Option<usize>,
    #[arg(long)]
    lda_iterations: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Lay out a seeded uniform subsample of this size.
    #[arg(long)]
    subsample: Option<usize>,
    #[arg(long)]
    perplexity: Option<f64>,
    #[arg(long)]
    iterations: Option<usize>,
    /// Exact O(N^2) gradient instead of Barnes-Hut.
    #[arg(long)]
    exact: bool,
    /// Full text pipeline as JSON; the flags above then only override t-SNE and subsample.
    #[arg(long)]
    pipeline: Option<PathBuf>,
    /// Output path without extension; defaults to `<state_dir>/layouts/<dataset>-<model>`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum SessionCmd {
    /// Import a coding table (CSV) as a read-only session.
    Import {
        csv: PathBuf,
        #[arg(long)]
        id: Option<String>,
        #[arg(long)]
        dataset: Option<String>,
        #[arg(long)]
        label: Option<String>,
        /// Codes that fit the label's category; inferred when absent.
        #[arg(long, value_delimiter = ',')]
        fit: Vec<String>,
        /// Write the session log here instead of the state directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print a stored session's event log.
    Export {
        id: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Rebuild a session from its log and print its code summary.
    Replay {
        log: PathBuf,
        #[arg(long, default_value_t = 10)]
        window: usize,
        /// Exit 1 unless the summary has this many codes.
        #[arg(long)]
        expect_codes: Option<usize>,
        /// Exit 1 unless this many samples fit the category.
        #[arg(long)]
        expect_fit: Option<usize>,
    },
}

#[derive(Subcommand)]
enum HypothesisCmd {
    List,
    Show { id: String },
}

/// Failure with its exit code.
enum Fail {
    Usage(String),
    Check(String),
}

type Res<T> = Result<T, Fail>;

fn usage(e: impl std::fmt::Display) -> Fail {
    Fail::Usage(e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    tracing_subscriber::fmt()
        .with_writer(io::stderr)
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| tracing_subscriber::EnvFilter::new("warn")),
        )
        .init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Fail::Check(m)) => {
            eprintln!("check failed: {m}");
            ExitCode::from(1)
        }
        Err(Fail::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Res<()> {
    let file = match &cli.config {
        Some(p) => FileConfig::load(p).map_err(usage)?,
        None => FileConfig::default(),
    };
    let s = Settings::resolve(&cli.data_root, &cli.state_dir, cli.no_count_check, cli.sequential, &file);
    let json = cli.json;
    match cli.command {
        Command::Ingest { dataset, version, out } => ingest(&s, json, dataset, version.as_deref(), out.as_deref()),
        Command::Stats {
            dataset,
            version,
            line_rule,
            thresholds,
            out,
        } => stats(&s, json, dataset, version.as_deref(), &line_rule, &thresholds, out.as_deref()),
        Command::Embed(args) => embed(&s, &file, json, args),
        Command::Neighbors {
            layout,
            anchor,
            label,
            comparison,
            space,
            distances,
        } => {
            let space: Space = space.parse().map_err(usage)?;
            let opts = ReportOptions {
                label,
                comparison,
                include_distances: distances,
            };
            neighbors(json, &layout, anchor, space, &opts)
        }
        Command::Session(cmd) => session(&s, json, cmd),
        Command::Report { id, out } => report(&s, json, &id, out.as_deref()),
        Command::Hypothesis(cmd) => hypothesis(&s, json, cmd),
        Command::Serve { port } => serve(&s, port.or(file.port)),
    }
}

fn print_json(v: &impl Serialize) -> Res<()> {
    let mut out = io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, v).map_err(usage)?;
    writeln!(out).map_err(usage)
}

fn catalog(s: &Settings) -> Catalog {
    Catalog::new(&s.data_root, s.check_counts, s.exec)
}

fn load_corpus(cat: &Catalog, version: Option<&str>) -> Res<(Arc<Corpus>, PathBuf)> {
    let v = cat.resolve_version(version).map_err(usage)?;
    let corpus = cat.corpus(v).map_err(usage)?;
    Ok((corpus, cat.corpus_dir(v)))
}

fn manifest_path(out: &Path) -> PathBuf {
    let mut name = out.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".manifest.json");
    out.with_file_name(name)
}

fn create_parent(p: &Path) -> Res<()> {
    match p.parent() {
        Some(d) if !d.as_os_str().is_empty() => fs::create_dir_all(d).map_err(|e| usage(format!("{}: {e}", d.display()))),
        _ => Ok(()),
    }
}

#[derive(Serialize)]
struct LabelCount {
    label: String,
    count: usize,
}

#[derive(Serialize)]
struct IngestSummary {
    dataset: &'static str,
    version: String,
    count: usize,
    labels: Vec<LabelCount>,
}

fn ingest(s: &Settings, json: bool, dataset: Dataset, version: Option<&str>, out: Option<&Path>) -> Res<()> {
    let cat = catalog(s);
    let summary = match dataset {
        Dataset::Newsgroups => {
            let (corpus, dir) = load_corpus(&cat, version)?;
            if let Some(out) = out {
                let mut rec = Recorder::start("ingest", serde_json::json!({"dataset": "20ng", "version": corpus.version}));
                rec.input(&dir).map_err(usage)?;
                create_parent(out)?;
                let f = fs::File::create(out).map_err(usage)?;
                corpus.write_jsonl(io::BufWriter::new(f)).map_err(usage)?;
                rec.finish(&[out.to_path_buf()], &manifest_path(out)).map_err(usage)?;
            }
            IngestSummary {
                dataset: "20ng",
                version: corpus.version.to_string(),
                count: corpus.len(),
                labels: corpus
                    .label_set
                    .iter()
                    .map(|l| LabelCount {
                        label: l.clone(),
                        count: corpus.documents.iter().filter(|d| &d.label == l).count(),
                    })
                    .collect(),
            }
        }
        Dataset::Mnist => {
            if out.is_some() {
                return Err(usage("--out is only supported for 20ng"));
            }
            let split = resolve_split(version).map_err(usage)?;
            let set = cat.images(split).map_err(usage)?;
            IngestSummary {
                dataset: "mnist",
                version: split.as_str().to_string(),
                count: set.len(),
                labels: set
                    .label_counts()
                    .iter()
                    .enumerate()
                    .map(|(d, &count)| LabelCount { label: d.to_string(), count })
                    .collect(),
            }
        }
    };
    if json {
        return print_json(&summary);
    }
    let mut t = format!("{} {}: {} samples\n", summary.dataset, summary.version, summary.count);
    for l in &summary.labels {
        let _ = writeln!(t, "  {:<28} {:>6}", l.label, l.count);
    }
    print!("{t}");
    Ok(())
}

fn stats(
    s: &Settings,
    json: bool,
    dataset: Dataset,
    version: Option<&str>,
    line_rule: &str,
    thresholds: &[u64],
    out: Option<&Path>,
) -> Res<()> {
    if dataset == Dataset::Mnist {
        return ingest(s, json, dataset, version, None);
    }
    let rule: LineRule = line_rule.parse().map_err(usage)?;
    let cat = catalog(s);
    let (corpus, dir) = load_corpus(&cat, version)?;
    let report = StatsReport::compute(&corpus, rule, thresholds);
    if let Some(out) = out {
        let mut rec = Recorder::start(
            "stats",
            serde_json::json!({"dataset": "20ng", "version": corpus.version, "line_rule": rule, "thresholds": thresholds}),
        );
        rec.input(&dir).map_err(usage)?;
        create_parent(out)?;
        fs::write(out, serde_json::to_vec_pretty(&report).map_err(usage)?).map_err(usage)?;
        rec.finish(&[out.to_path_buf()], &manifest_path(out)).map_err(usage)?;
    }
    if json {
        print_json(&report)
    } else {
        print!("{}", report.to_table());
        Ok(())
    }
}

fn tsne_from(args: &EmbedArgs, file: &FileConfig, base: TsneConfig, seed: u64, s: &Settings) -> TsneConfig {
    let mut t = base;
    t.seed = seed;
    if let Some(p) = args.perplexity.or(file.perplexity) {
        t.perplexity = p;
    }
    if let Some(i) = args.iterations.or(file.iterations) {
        t.iterations = i;
    }
    if args.exact {
        t.method = GradientMethod::Exact;
    }
    t.exec = s.exec;
    t
}

#[derive(Serialize)]
struct EmbedSummary {
    layout: String,
    points: usize,
    final_kl: f64,
    files: Vec<String>,
}

fn embed(s: &Settings, file: &FileConfig, json: bool, args: EmbedArgs) -> Res<()> {
    let seed = args.seed.or(file.seed).unwrap_or(0);
    let subsample = args.subsample.map(|size| Subsample { size, seed });
    let cat = catalog(s);
    let model = args.model.unwrap_or(match args.dataset {
        Dataset::Newsgroups => Model::Lsi,
        Dataset::Mnist => Model::Raw,
    });
    let out = args.out.clone().unwrap_or_else(|| {
        let ds = match args.dataset {
            Dataset::Newsgroups => "20ng",
            Dataset::Mnist => "mnist",
        };
        let m = serde_json::to_value(model).ok().and_then(|v| v.as_str().map(str::to_string)).unwrap_or_default();
        s.state_dir.join("layouts").join(format!("{ds}-{m}"))
    });
    let id = out
        .file_name()
        .and_then(|n| n.to_str())
        .filter(|n| datascope_server::layouts::valid_layout_id(n))
        .ok_or_else(|| usage(format!("output name {:?} must be letters, digits, '-' or '_'", out.display())))?
        .to_string();
    let dir = out.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));

    let mut rec;
    let result: PipelineOutput = match args.dataset {
        Dataset::Newsgroups => {
            let mut pipeline = match (&args.pipeline, model) {
                (Some(p), _) => {
                    let text = fs::read_to_string(p).map_err(|e| usage(format!("{}: {e}", p.display())))?;
                    serde_json::from_str::<TextPipeline>(&text).map_err(|e| usage(format!("{}: {e}", p.display())))?
                }
                (None, Model::Lsi) => TextPipeline::lsi(args.components.unwrap_or(100), seed),
                (None, Model::Lda) => TextPipeline::lda(args.components.unwrap_or(20), args.lda_iterations.unwrap_or(500), seed),
                (None, Model::Raw) => return Err(usage("20ng layouts need --model lsi or lda")),
            };
            let tsne_seed = pipeline.tsne.seed;
            pipeline.tsne = tsne_from(&args, file, pipeline.tsne.clone(), args.seed.or(file.seed).unwrap_or(tsne_seed), s);
            if subsample.is_some() {
                pipeline.subsample = subsample.clone();
            }
            let (corpus, cdir) = load_corpus(&cat, args.version.as_deref())?;
            rec = Recorder::start("embed", serde_json::json!({"dataset": "20ng", "version": corpus.version, "pipeline": pipeline}));
            rec.seed(pipeline.tsne.seed);
            if let Some(sub) = &pipeline.subsample {
                rec.seed(sub.seed);
            }
            rec.input(&cdir).map_err(usage)?;
            embed_corpus(&corpus, &pipeline, s.exec).map_err(usage)?
        }
        Dataset::Mnist => {
            if model != Model::Raw || args.pipeline.is_some() {
                return Err(usage("mnist layouts use raw pixels (--model raw)"));
            }
            let split: Split = resolve_split(args.version.as_deref()).map_err(usage)?;
            let tsne = tsne_from(&args, file, TsneConfig::barnes_hut(), seed, s);
            let set = cat.images(split).map_err(usage)?;
            rec = Recorder::start(
                "embed",
                serde_json::json!({"dataset": "mnist", "split": split, "tsne": tsne, "subsample": subsample}),
            );
            rec.seed(seed);
            rec.input(&cat.mnist_dir()).map_err(usage)?;
            embed_images(&set, &tsne, subsample.as_ref(), s.exec).map_err(usage)?
        }
    };
    let store = LayoutStore::open(dir).map_err(|e| usage(format!("{}: {e}", dir.display())))?;
    store.save(&id, &result).map_err(|e| usage(format!("writing layout {id}: {e:?}")))?;
    let files = store.paths(&id);
    rec.finish(&files, &dir.join(format!("{id}.manifest.json"))).map_err(usage)?;
    let summary = EmbedSummary {
        layout: out.display().to_string(),
        points: result.layout.len(),
        final_kl: result.layout.final_kl,
        files: files.iter().map(|p| p.display().to_string()).collect(),
    };
    if json {
        print_json(&summary)
    } else {
        println!("{} points, final KL {:.4}", summary.points, summary.final_kl);
        for f in &summary.files {
            println!("  {f}");
        }
        Ok(())
    }
}

fn open_layout_path(layout: &Path) -> Res<(LayoutStore, String)> {
    let dir = layout.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let id = layout
        .file_name()
        .and_then(|n| n.to_str())
        .ok_or_else(|| usage("bad layout path"))?
        .to_string();
    if !dir.is_dir() {
        return Err(usage(format!("no layout directory {}", dir.display())));
    }
    Ok((LayoutStore::open(dir).map_err(usage)?, id))
}

fn neighbors(json: bool, layout: &Path, anchor: u64, space: Space, opts: &ReportOptions) -> Res<()> {
    let (store, id) = open_layout_path(layout)?;
    let missing = |e| usage(format!("layout {}: {e:?}", layout.display()));
    let l = store.load(&id).map_err(missing)?;
    let report = match space {
        Space::LayoutSpace => {
            let set = PointSet::new(l.points.view(), &l.ids, &l.labels).map_err(usage)?;
            neighbor_report(&set, space, anchor, opts)
        }
        Space::TopicSpace => {
            let (ids, x) = store.features(&id).map_err(missing)?;
            if ids != l.ids {
                return Err(usage("feature rows do not match the layout"));
            }
            let set = PointSet::new(x.view(), &l.ids, &l.labels).map_err(usage)?;
            neighbor_report(&set, space, anchor, opts)
        }
    }
    .map_err(usage)?;
    if json {
        print_json(&report)
    } else {
        print!("{}", report.to_table());
        Ok(())
    }
}

#[derive(Serialize)]
struct Replay {
    session: String,
    events: usize,
    summary: CodeSummary,
    saturation: datascope::coding::SaturationState,
}

fn summary_table(r: &Replay) -> String {
    let mut t = format!("session {} ({} events)\n", r.session, r.events);
    for c in &r.summary.codes {
        let fit = if c.matches_category { "fit" } else { "" };
        let _ = writeln!(t, "  {:<40} {:>5} {fit}", c.name, c.count);
    }
    let _ = writeln!(
        t,
        "codes used {}, coded samples {}, fitting category {}",
        r.summary.codes_used, r.summary.coded_samples, r.summary.fit_count
    );
    let _ = writeln!(
        t,
        "saturation (window {}): {} new codes in window, {}",
        r.saturation.window,
        r.saturation.new_codes_in_window,
        if r.saturation.saturated { "saturated" } else { "not saturated" }
    );
    t
}

fn session(s: &Settings, json: bool, cmd: SessionCmd) -> Res<()> {
    match cmd {
        SessionCmd::Import {
            csv,
            id,
            dataset,
            label,
            fit,
            out,
        } => {
            let mut opts = ImportOptions::default();
            if let Some(v) = id {
                opts.session_id = v;
            }
            if let Some(v) = dataset {
                opts.dataset = v;
            }
            if let Some(v) = label {
                opts.label = v;
            }
            opts.fit_codes = fit;
            let f = fs::File::open(&csv).map_err(|e| usage(format!("{}: {e}", csv.display())))?;
            let session = import_coding_csv(f, &opts).map_err(usage)?;
            let mut rec = Recorder::start("session import", &opts);
            rec.input(&csv).map_err(usage)?;
            let target = match out {
                Some(p) => {
                    create_parent(&p)?;
                    fs::write(&p, session.to_jsonl()).map_err(usage)?;
                    p
                }
                None => {
                    let store = SessionStore::open(s.state_dir.join("sessions")).map_err(usage)?;
                    store.create(&session).map_err(usage)?;
                    s.state_dir.join("sessions").join(format!("{}.jsonl", session.id))
                }
            };
            rec.finish(std::slice::from_ref(&target), &manifest_path(&target)).map_err(usage)?;
            let sum = session.code_summary();
            if json {
                print_json(&sum)
            } else {
                println!(
                    "imported {} ({} codes, {} coded samples) -> {}",
                    session.id,
                    sum.codes.len(),
                    sum.coded_samples,
                    target.display()
                );
                Ok(())
            }
        }
        SessionCmd::Export { id, out } => {
            let store = SessionStore::open(s.state_dir.join("sessions")).map_err(usage)?;
            let jsonl = store.load(&id).map_err(usage)?.to_jsonl();
            match out {
                Some(p) => {
                    create_parent(&p)?;
                    fs::write(&p, jsonl).map_err(usage)
                }
                None => io::stdout().write_all(jsonl.as_bytes()).map_err(usage),
            }
        }
        SessionCmd::Replay {
            log,
            window,
            expect_codes,
            expect_fit,
        } => {
            let text = fs::read_to_string(&log).map_err(|e| usage(format!("{}: {e}", log.display())))?;
            let session = CodingSession::from_jsonl(&text).map_err(usage)?;
            let r = Replay {
                session: session.id.clone(),
                events: session.events().len(),
                summary: session.code_summary(),
                saturation: session.saturation_state(window).map_err(usage)?,
            };
            if json {
                print_json(&r)?;
            } else {
                print!("{}", summary_table(&r));
            }
            let mut failed = Vec::new();
            if let Some(n) = expect_codes.filter(|&n| n != r.summary.codes.len()) {
                failed.push(format!("{} codes, expected {n}", r.summary.codes.len()));
            }
            if let Some(n) = expect_fit.filter(|&n| n != r.summary.fit_count) {
                failed.push(format!("{} fitting samples, expected {n}", r.summary.fit_count));
            }
            if failed.is_empty() {
                Ok(())
            } else {
                Err(Fail::Check(failed.join("; ")))
            }
        }
    }
}

fn report(s: &Settings, json: bool, id: &str, out: Option<&Path>) -> Res<()> {
    let store = HypothesisStore::open(s.state_dir.join("hypotheses")).map_err(usage)?;
    let rec = store.load(id).map_err(usage)?;
    let layouts = LayoutStore::open(s.state_dir.join("layouts")).map_err(usage)?;
    let r = render_report(&rec.hypothesis, &rec.audit, &evidence_layouts(&layouts, &rec.hypothesis));
    match out {
        Some(dir) => {
            fs::create_dir_all(dir).map_err(usage)?;
            let mut m = Recorder::start("report", serde_json::json!({"hypothesis": id}));
            let hyp_file = s.state_dir.join("hypotheses").join(format!("{id}.json"));
            m.input(&hyp_file).map_err(usage)?;
            let mut files = vec![dir.join(format!("{id}.md")), dir.join(format!("{id}.json"))];
            fs::write(&files[0], &r.markdown).map_err(usage)?;
            fs::write(&files[1], &r.json).map_err(usage)?;
            for (name, svg) in &r.assets {
                let p = dir.join(name);
                fs::write(&p, svg).map_err(usage)?;
                files.push(p);
            }
            m.finish(&files, &dir.join(format!("{id}.manifest.json"))).map_err(usage)?;
            if !json {
                println!("{} report ({}) -> {}", id, if r.complete { "complete" } else { "incomplete" }, dir.display());
            }
        }
        None if json => println!("{}", r.json),
        None => print!("{}", r.markdown),
    }
    Ok(())
}

fn hypothesis(s: &Settings, json: bool, cmd: HypothesisCmd) -> Res<()> {
    let store = HypothesisStore::open(s.state_dir.join("hypotheses")).map_err(usage)?;
    match cmd {
        HypothesisCmd::List => {
            let mut rows = Vec::new();
            for id in store.list().map_err(usage)? {
                rows.push(store.load(&id).map_err(usage)?.hypothesis);
            }
            if json {
                return print_json(&rows);
            }
            for h in rows {
                let (q, l) = h.evidence_counts();
                println!("{:<24} {:<14} evidence {q}+{l}  {}", h.id, h.status, h.statement);
            }
            Ok(())
        }
        HypothesisCmd::Show { id } => print_json(&store.load(&id).map_err(usage)?),
    }
}

fn serve(s: &Settings, port: Option<u16>) -> Res<()> {
    let mut cfg = ServerConfig::from_env().map_err(usage)?;
    cfg.data_root = s.data_root.clone();
    cfg.state_dir = s.state_dir.clone();
    cfg.check_counts = s.check_counts;
    cfg.exec = s.exec;
    if let Some(p) = port {
        cfg.port = p;
    }
    let rt = tokio::runtime::Builder::new_multi_thread().enable_all().build().map_err(usage)?;
    rt.block_on(datascope_server::serve(cfg)).map_err(Fail::Usage)
}
