//! Subcommands of the `gqc` binary. Each writes its TSV report to the given
//! writer so tests can run them in-process.

use std::collections::BTreeSet;
use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::{bail, Context as _, Result};
use clap::{Args, Parser, Subcommand};

use gqc::cache::{load_cache, save_cache};
use gqc::embedding::{train_with, EmbeddingStore, TrainConfig};
use gqc::eval::{aggregate, link_prediction, read_qa, resolve_triples, score_answers, QaRecord, QuestionResult, Scores};
use gqc::kg::{load_kg, read_tsv_rows, KnowledgeGraph, DEFAULT_TYPE_LABEL};
use gqc::phrase::{Lexicon, Weights};
use gqc::pipeline::{Pipeline, PipelineOptions, StageError, StageName, Timings};
use gqc::query::{DEFAULT_MAX_REPRESENTATIONS, DEFAULT_RETRY_CAP};
use gqc::Error;

#[derive(Debug, Parser)]
#[command(name = "gqc", version, about = "Graph-structured queries from natural-language questions")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute every GL-KG and write the cache.
    Build(BuildArgs),
    /// Train embeddings from a GL-KG cache.
    Train(TrainArgs),
    /// Answer one question.
    Query(QueryArgs),
    /// Score a `nlq<TAB>gold1|gold2` dataset.
    EvalQa(EvalQaArgs),
    /// MeanRank and Hits@10 over held-out triples.
    EvalLp(EvalLpArgs),
    /// Mean per-module time over a file of questions.
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Args)]
pub struct KgArgs {
    #[arg(long)]
    pub kg: PathBuf,
    #[arg(long, default_value = DEFAULT_TYPE_LABEL)]
    pub type_label: String,
}

#[derive(Debug, Clone, Args)]
pub struct BuildArgs {
    #[command(flatten)]
    pub kg: KgArgs,
    #[arg(long)]
    pub cache: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub kg: KgArgs,
    #[arg(long)]
    pub cache: PathBuf,
    /// Output embedding file.
    #[arg(long)]
    pub embeddings: PathBuf,
    #[arg(long, default_value_t = 100)]
    pub dim: usize,
    #[arg(long, default_value_t = 100)]
    pub epochs: usize,
    #[arg(long, default_value_t = 0.01)]
    pub lr: f64,
    #[arg(long, default_value_t = 5)]
    pub negatives: usize,
    #[arg(long, default_value_t = 0.5)]
    pub lambda_v: f64,
    #[arg(long, default_value_t = 0.5)]
    pub lambda_e: f64,
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
}

impl TrainArgs {
    pub fn config(&self) -> TrainConfig {
        TrainConfig {
            dim: self.dim,
            lambda_v: self.lambda_v,
            lambda_e: self.lambda_e,
            negatives: self.negatives,
            learning_rate: self.lr,
            epochs: self.epochs,
            seed: self.seed,
            workers: self.workers,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct PipelineArgs {
    #[command(flatten)]
    pub kg: KgArgs,
    #[arg(long)]
    pub lexicon: PathBuf,
    #[arg(long)]
    pub embeddings: PathBuf,
    #[arg(long, default_value_t = 15.0)]
    pub t_s: f64,
    #[arg(long, default_value_t = 4)]
    pub max_hops: u32,
    /// Similarity, connection and hop weights.
    #[arg(long, default_value_t = Weights::default())]
    pub weights: Weights,
    #[arg(long, default_value_t = DEFAULT_MAX_REPRESENTATIONS)]
    pub max_representations: u128,
    #[arg(long, default_value_t = DEFAULT_RETRY_CAP)]
    pub retry_cap: usize,
}

impl PipelineArgs {
    pub fn options(&self) -> Result<PipelineOptions> {
        if !(self.t_s >= 1.0) {
            bail!("--t-s must be at least 1, got {}", self.t_s);
        }
        if self.retry_cap == 0 {
            bail!("--retry-cap must be positive");
        }
        Ok(PipelineOptions {
            t_s: self.t_s,
            max_hops: self.max_hops,
            weights: self.weights,
            max_representations: self.max_representations,
            retry_cap: self.retry_cap,
        })
    }
}

#[derive(Debug, Clone, Args)]
pub struct QueryArgs {
    #[command(flatten)]
    pub pipeline: PipelineArgs,
    /// Also print the cost tables and the solved structure matrix.
    #[arg(long)]
    pub dump_structure: bool,
    pub nlq: String,
}

#[derive(Debug, Clone, Args)]
pub struct EvalQaArgs {
    #[command(flatten)]
    pub pipeline: PipelineArgs,
    #[arg(long)]
    pub dataset: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct EvalLpArgs {
    #[command(flatten)]
    pub kg: KgArgs,
    #[arg(long)]
    pub embeddings: PathBuf,
    /// `head<TAB>edge<TAB>tail` test triples.
    #[arg(long)]
    pub test: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct BenchArgs {
    #[command(flatten)]
    pub pipeline: PipelineArgs,
    /// One question per line.
    #[arg(long)]
    pub questions: PathBuf,
}

/// Loaded pipeline inputs.
pub struct Inputs {
    pub kg: KnowledgeGraph,
    pub lexicon: Lexicon,
    pub store: EmbeddingStore,
    pub options: PipelineOptions,
}

impl Inputs {
    pub fn load(args: &PipelineArgs) -> Result<Self> {
        let options = args.options()?;
        let kg = load_graph(&args.kg)?;
        let lexicon = Lexicon::load(&args.lexicon, &kg)
            .with_context(|| format!("loading lexicon {}", args.lexicon.display()))?;
        let store = load_store(&args.embeddings, &kg)?;
        Ok(Self {
            kg,
            lexicon,
            store,
            options,
        })
    }

    pub fn pipeline(&self) -> Pipeline<'_> {
        Pipeline::new(&self.kg, &self.lexicon, &self.store, self.options.clone())
    }
}

fn require(path: &Path, what: &str) -> Result<()> {
    if !path.is_file() {
        bail!("{what} {} does not exist", path.display());
    }
    Ok(())
}

pub fn load_graph(args: &KgArgs) -> Result<KnowledgeGraph> {
    require(&args.kg, "knowledge graph")?;
    load_kg(&args.kg, &args.type_label).with_context(|| format!("loading {}", args.kg.display()))
}

pub fn load_store(path: &Path, kg: &KnowledgeGraph) -> Result<EmbeddingStore> {
    require(path, "embedding file")?;
    let store = EmbeddingStore::load(path).with_context(|| format!("loading {}", path.display()))?;
    Ok(store.align_to(kg)?)
}

pub fn run(cli: Cli, out: &mut dyn Write) -> Result<()> {
    match cli.command {
        Command::Build(a) => cmd_build(&a, out),
        Command::Train(a) => cmd_train(&a, out),
        Command::Query(a) => cmd_query(&a, out),
        Command::EvalQa(a) => cmd_eval_qa(&a, out),
        Command::EvalLp(a) => cmd_eval_lp(&a, out),
        Command::Bench(a) => cmd_bench(&a, out),
    }
}

/// 2 for questions that cannot be mapped onto the lexicon, 1 otherwise.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    match err.downcast_ref::<StageError>() {
        Some(StageError {
            stage: StageName::PhraseMapping,
            error: Error::Unmappable | Error::NoCandidates { .. },
        }) => 2,
        _ => 1,
    }
}

/// Writes the cache and lists objects whose GL-KG is empty.
pub fn cmd_build(args: &BuildArgs, out: &mut dyn Write) -> Result<()> {
    let kg = load_graph(&args.kg)?;
    let gl_kgs = kg.generalize_all();
    save_cache(&args.cache, &kg, &gl_kgs)?;
    let empty: Vec<&str> = gl_kgs.iter().filter(|g| g.is_empty()).map(|g| kg.label(g.owner)).collect();
    writeln!(out, "objects\t{}", gl_kgs.len())?;
    writeln!(out, "generalized_triples\t{}", gl_kgs.iter().map(|g| g.len()).sum::<usize>())?;
    writeln!(out, "skipped\t{}", empty.len())?;
    for label in empty {
        writeln!(out, "skip\t{label}")?;
    }
    Ok(())
}

pub fn cmd_train(args: &TrainArgs, out: &mut dyn Write) -> Result<()> {
    let kg = load_graph(&args.kg)?;
    require(&args.cache, "GL-KG cache")?;
    let gl_kgs = load_cache(&args.cache, &kg).with_context(|| format!("loading {}", args.cache.display()))?;
    let (store, report) = train_with(&kg, &gl_kgs, &args.config())?;
    store.save(&args.embeddings)?;
    writeln!(out, "trained_vertices\t{}", report.trained_vertices)?;
    writeln!(out, "trained_edges\t{}", report.trained_edges)?;
    writeln!(out, "frozen\t{}", report.frozen.len())?;
    if let Some(first) = report.epoch_losses.first() {
        writeln!(out, "first_loss\t{first:.6}")?;
    }
    match report.final_loss() {
        Some(loss) => writeln!(out, "final_loss\t{loss:.6}")?,
        None => writeln!(out, "final_loss\tNA")?,
    }
    Ok(())
}

fn ms(d: Duration) -> f64 {
    d.as_secs_f64() * 1e3
}

pub fn cmd_query(args: &QueryArgs, out: &mut dyn Write) -> Result<()> {
    let inputs = Inputs::load(&args.pipeline)?;
    let answer = inputs.pipeline().run(&args.nlq)?;
    if args.dump_structure {
        write!(out, "{}", answer.tables.to_tsv(Some(&answer.solution.matrix)))?;
    }
    writeln!(out, "# query")?;
    match answer.query_text(&inputs.kg) {
        Some(text) => write!(out, "{text}")?,
        None => writeln!(out, "# none")?,
    }
    match answer.outcome.stage {
        Some((rank, stage)) => writeln!(out, "# answered by representation {rank} ({})", stage.as_str())?,
        None => writeln!(out, "# no representation returned answers")?,
    }
    writeln!(out, "# answers")?;
    for label in answer.answer_labels(&inputs.kg) {
        writeln!(out, "{label}")?;
    }
    write_timings(out, &answer.timings)?;
    Ok(())
}

fn write_timings(out: &mut dyn Write, t: &Timings) -> Result<()> {
    writeln!(out, "# timings\tms")?;
    for stage in StageName::ALL {
        writeln!(out, "{}\t{:.3}", stage.as_str(), ms(t.get(stage)))?;
    }
    writeln!(out, "total\t{:.3}", ms(t.total()))?;
    Ok(())
}

/// Runs every record through the pipeline. A question counts as processed
/// when the pipeline produces a query for it.
pub fn evaluate(pipeline: &Pipeline<'_>, records: &[QaRecord]) -> Vec<QuestionResult> {
    records
        .iter()
        .map(|r| {
            let run = pipeline.run(&r.nlq).ok().filter(|a| a.final_query().is_some());
            match run {
                Some(a) => {
                    let returned: BTreeSet<String> = a.answer_labels(pipeline.kg).into_iter().collect();
                    QuestionResult {
                        nlq: r.nlq.clone(),
                        processed: true,
                        scores: score_answers(&r.gold, &returned),
                    }
                }
                None => QuestionResult {
                    nlq: r.nlq.clone(),
                    processed: false,
                    scores: Scores {
                        precision: 0.0,
                        recall: 0.0,
                        f1: 0.0,
                    },
                },
            }
        })
        .collect()
}

pub fn cmd_eval_qa(args: &EvalQaArgs, out: &mut dyn Write) -> Result<()> {
    require(&args.dataset, "QA dataset")?;
    let inputs = Inputs::load(&args.pipeline)?;
    let file = File::open(&args.dataset).with_context(|| format!("opening {}", args.dataset.display()))?;
    let records = read_qa(file).with_context(|| format!("reading {}", args.dataset.display()))?;
    let results = evaluate(&inputs.pipeline(), &records);
    writeln!(out, "nlq\tprocessed\tprecision\trecall\tf1")?;
    for r in &results {
        writeln!(
            out,
            "{}\t{}\t{:.6}\t{:.6}\t{:.6}",
            r.nlq, r.processed, r.scores.precision, r.scores.recall, r.scores.f1
        )?;
    }
    let a = aggregate(&results);
    writeln!(out, "# aggregate")?;
    writeln!(out, "processed\t{}/{}", a.processed, a.total)?;
    writeln!(out, "precision\t{:.6}", a.precision)?;
    writeln!(out, "recall\t{:.6}", a.recall)?;
    writeln!(out, "f1\t{:.6}", a.f1)?;
    Ok(())
}

pub fn cmd_eval_lp(args: &EvalLpArgs, out: &mut dyn Write) -> Result<()> {
    let kg = load_graph(&args.kg)?;
    let store = load_store(&args.embeddings, &kg)?;
    require(&args.test, "test triples")?;
    let file = File::open(&args.test).with_context(|| format!("opening {}", args.test.display()))?;
    let rows: Vec<[String; 3]> = read_tsv_rows::<_, 3>(file)?.into_iter().map(|(_, r)| r).collect();
    let (test, skipped) = resolve_triples(&kg, &rows);
    if skipped > 0 {
        eprintln!("warning: skipped {skipped} test triples with unknown labels");
    }
    let lp = link_prediction(&store, &test, skipped);
    writeln!(out, "MeanRank\t{:.3}", lp.mean_rank)?;
    writeln!(out, "Hits@10\t{:.4}", lp.hits_at_10)?;
    writeln!(out, "rankings\t{}", lp.rankings)?;
    writeln!(out, "skipped\t{}", lp.skipped)?;
    Ok(())
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct BenchReport {
    /// Questions that ran through all three stages.
    pub questions: usize,
    pub failed: usize,
    /// Mean per stage over `questions`.
    pub mean: Timings,
}

pub fn bench(pipeline: &Pipeline<'_>, questions: &[String]) -> BenchReport {
    let mut sum = Timings::default();
    let mut ok = 0;
    for q in questions {
        if let Ok(a) = pipeline.run(q) {
            sum.phrase_mapping += a.timings.phrase_mapping;
            sum.structure += a.timings.structure;
            sum.query += a.timings.query;
            ok += 1;
        }
    }
    let n = ok.max(1) as u32;
    BenchReport {
        questions: ok,
        failed: questions.len() - ok,
        mean: Timings {
            phrase_mapping: sum.phrase_mapping / n,
            structure: sum.structure / n,
            query: sum.query / n,
        },
    }
}

pub fn read_questions(path: &Path) -> Result<Vec<String>> {
    require(path, "question file")?;
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(text
        .lines()
        .map(|l| l.split('\t').next().unwrap_or("").trim())
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_string)
        .collect())
}

pub fn cmd_bench(args: &BenchArgs, out: &mut dyn Write) -> Result<()> {
    let inputs = Inputs::load(&args.pipeline)?;
    let questions = read_questions(&args.questions)?;
    let report = bench(&inputs.pipeline(), &questions);
    writeln!(out, "module\tmean_ms")?;
    for stage in StageName::ALL {
        writeln!(out, "{}\t{:.3}", stage.as_str(), ms(report.mean.get(stage)))?;
    }
    writeln!(out, "total\t{:.3}", ms(report.mean.total()))?;
    writeln!(out, "# questions\t{}", report.questions)?;
    writeln!(out, "# failed\t{}", report.failed)?;
    Ok(())
}
