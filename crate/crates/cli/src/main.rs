use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use log::info;

use ner_corpus::balance::TargetSize;
use ner_corpus::config::PipelineConfig;
use ner_corpus::eval::span_f1;
use ner_corpus::filter::compute_stats;
use ner_corpus::io::split::{make_fewshot_subset, SizeSpec};
use ner_corpus::ontology::LoadMode;
use ner_corpus::pipeline::{load_corpus, load_stage_input, save_corpus, PipelineError, Runner, Stage};
use ner_corpus::Label;

#[derive(Parser)]
#[command(name = "ner-corpus", version, about = "Build a weakly labelled NER corpus from a MediaWiki dump")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Pipeline config (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads; 0 means one per core.
    #[arg(long, global = true, default_value_t = 0)]
    workers: usize,
    #[arg(long, global = true)]
    dump: Option<PathBuf>,
    #[arg(long, global = true)]
    ontology: Option<PathBuf>,
    #[arg(long, global = true)]
    vocabulary: Option<PathBuf>,
    #[arg(long, global = true)]
    merge_map: Option<PathBuf>,
    #[arg(long, global = true)]
    abbreviations: Option<PathBuf>,
    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    alpha: Option<f64>,
    /// Resampled corpus size, or `same-as-input`.
    #[arg(long, global = true)]
    target_size: Option<String>,
    #[arg(long, global = true)]
    top_k: Option<usize>,
    #[arg(long, global = true)]
    scarce_threshold: Option<u64>,
    #[arg(long, global = true)]
    train_ratio: Option<f64>,
    /// Remap unknown ontology categories to ENTITY instead of failing.
    #[arg(long, global = true)]
    lenient: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Dump + ontology to tagged sentences.
    Build {
        /// Also print every raw sentence to stdout as JSON lines.
        #[arg(long)]
        dump_raw: bool,
    },
    /// Scarce-category, no-entity and probabilistic filtering.
    Filter {
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Category-balanced resampling.
    Balance {
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Train/val split, merge-mapped variants and few-shot subsets.
    Export {
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Run every stage.
    All {
        /// Keep intermediate stages in memory instead of writing them.
        #[arg(long)]
        stream: bool,
    },
    /// Print corpus statistics.
    Stats { input: PathBuf },
    /// Draw a few-shot subset.
    Fewshot {
        input: PathBuf,
        /// Sentence count or percentage (`10%`).
        #[arg(long)]
        size: SizeSpec,
        #[arg(long)]
        output: PathBuf,
    },
    /// Span-level precision, recall and F1.
    Eval {
        #[arg(long)]
        gold: PathBuf,
        #[arg(long)]
        pred: PathBuf,
    },
}

fn load_config(g: &Global) -> Result<PipelineConfig> {
    let mut c = match &g.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    if let Some(p) = &g.dump {
        c.dump_path = p.clone();
    }
    if let Some(p) = &g.ontology {
        c.ontology_path = p.clone();
    }
    if let Some(p) = &g.vocabulary {
        c.vocabulary_path = Some(p.clone());
    }
    if let Some(p) = &g.merge_map {
        c.merge_map_path = Some(p.clone());
    }
    if let Some(p) = &g.abbreviations {
        c.abbreviations_path = Some(p.clone());
    }
    if let Some(p) = &g.output_dir {
        c.output_dir = p.clone();
    }
    if let Some(s) = g.seed {
        c.seed = s;
    }
    if let Some(a) = g.alpha {
        c.sampling.alpha = a;
    }
    if let Some(t) = &g.target_size {
        c.sampling.target_size = match t.as_str() {
            "same-as-input" => TargetSize::SameAsInput,
            n => TargetSize::Count(n.parse().with_context(|| format!("invalid --target-size `{n}`"))?),
        };
    }
    if let Some(k) = g.top_k {
        c.filter.top_k = k;
    }
    if let Some(t) = g.scarce_threshold {
        c.filter.scarce_threshold = t;
    }
    if let Some(r) = g.train_ratio {
        c.export.train_ratio = r;
    }
    if g.lenient {
        c.ontology_mode = LoadMode::Lenient;
    }
    c.propagate_seed();
    Ok(c)
}

fn stage_input(runner: &Runner, stage: Stage, input: Option<PathBuf>) -> Result<ner_corpus::pipeline::StageOutput> {
    let path = input.unwrap_or_else(|| runner.default_input(stage));
    info!("{stage}: reading {}", path.display());
    load_stage_input(&path).map_err(|source| PipelineError::new(stage, source).into())
}

fn report(stage: Stage, out: &ner_corpus::pipeline::StageOutput) {
    let m = &out.manifest;
    info!("{stage}: {} sentences, {} tokens, {} entities, {} categories", m.example_count, m.token_count, m.entity_count, m.category_count);
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Stats { input } => stats(&input),
        Command::Eval { gold, pred } => eval(&gold, &pred),
        Command::Fewshot { input, size, output } => {
            let seed = load_config(&cli.global)?.seed;
            let (corpus, _) = load_corpus(&input)?;
            let subset = make_fewshot_subset(&corpus, size, seed)?;
            save_corpus(&output, &subset)?;
            info!("fewshot: wrote {} of {} sentences to {}", subset.len(), corpus.len(), output.display());
            Ok(())
        }
        command => {
            let config = load_config(&cli.global)?;
            let stream = matches!(command, Command::All { stream: true });
            let runner = Runner::new(config, cli.global.workers)?.persist_intermediate(!stream);
            match command {
                Command::Build { dump_raw } => {
                    let stdout = io::stdout();
                    let mut lock = stdout.lock();
                    let out = runner.build(dump_raw.then_some(&mut lock as &mut dyn Write))?;
                    report(Stage::Build, &out);
                }
                Command::Filter { input } => {
                    let out = runner.filter(stage_input(&runner, Stage::Filter, input)?)?;
                    report(Stage::Filter, &out);
                }
                Command::Balance { input } => {
                    let out = runner.balance(stage_input(&runner, Stage::Balance, input)?)?;
                    report(Stage::Balance, &out);
                }
                Command::Export { input } => {
                    let written = runner.export(stage_input(&runner, Stage::Export, input)?)?;
                    info!("export: wrote {} corpora", written.len());
                }
                Command::All { .. } => {
                    let written = runner.all()?;
                    info!("all: wrote {} corpora under {}", written.len(), runner.stage_dir(Stage::Export).display());
                }
                _ => unreachable!(),
            }
            Ok(())
        }
    }
}

fn stats(input: &Path) -> Result<()> {
    let (corpus, repairs) = load_corpus(input)?;
    let s = compute_stats(&corpus);
    let mut out = io::stdout().lock();
    writeln!(out, "sentences\t{}", s.total_sentences)?;
    writeln!(out, "tokens\t{}", s.total_tokens)?;
    writeln!(out, "entities\t{}", s.total_entities)?;
    writeln!(out, "categories\t{}", s.category_count())?;
    writeln!(out, "repairs\t{repairs}")?;
    writeln!(out)?;
    out.write_all(s.to_tsv().as_bytes())?;
    Ok(())
}

fn eval(gold: &Path, pred: &Path) -> Result<()> {
    let (gold_corpus, _) = load_corpus(gold)?;
    let (pred_corpus, repairs) = load_corpus(pred)?;
    if gold_corpus.len() != pred_corpus.len() {
        bail!("gold has {} sentences but predictions have {}", gold_corpus.len(), pred_corpus.len());
    }
    let labels: Vec<Vec<Label>> = pred_corpus.iter().map(|s| s.labels().to_vec()).collect();
    let mut report = span_f1::<f64>(&gold_corpus, &labels)?;
    report.repairs += repairs;
    let mut out = io::stdout().lock();
    out.write_all(report.to_text().as_bytes())?;
    writeln!(out, "{}", report.summary_line())?;
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .target(env_logger::Target::Stderr)
        .init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let mut message = e.to_string();
            for cause in e.chain().skip(1) {
                let cause = cause.to_string();
                if !message.contains(&cause) {
                    message = format!("{message}: {cause}");
                }
            }
            eprintln!("error: {message}");
            ExitCode::FAILURE
        }
    }
}
