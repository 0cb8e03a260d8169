//! Batch CLI for the textbook QA pipeline: corpus synthesis, retrieval
//! inspection, graph dumps, SSOC pretraining, supervised training,
//! evaluation, prediction, and the gradient self-check.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use tqa::corpus::{
    generate_synthetic_corpus, load_corpus, save_corpus, Corpus, EmbeddingTable, Split, SynthSpec,
};
use tqa::graphbuild::GraphDump;
use tqa::harness::{self, predict, train_supervised, EvalReport, RunConfig};
use tqa::model::{ModelConfig, ModelParams};
use tqa::numerics::checkpoint::{self, Checkpoint};
use tqa::numerics::gradcheck::op_gradcheck_suite;
use tqa::retrieval::TfidfIndex;
use tqa::ssoc;

#[derive(Parser)]
#[command(name = "tqa", about = "Textbook QA over multi-modal context graphs", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// TOML run configuration ([model], [train], [ssoc] tables). Defaults
    /// apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
}

impl ConfigArgs {
    fn load(&self) -> Result<RunConfig> {
        match &self.config {
            Some(path) => Ok(RunConfig::load(path)?),
            None => {
                let mut config = RunConfig::default();
                config.apply_env();
                Ok(config)
            }
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate a deterministic synthetic corpus.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 120)]
        vocab: usize,
        #[arg(long, default_value_t = 5)]
        lessons: usize,
        #[arg(long, default_value_t = 4)]
        paragraphs: usize,
        #[arg(long, default_value_t = 10)]
        questions: usize,
        #[arg(long, default_value_t = 0.3)]
        frac_true_false: f64,
        #[arg(long, default_value_t = 0.4)]
        frac_text_mc: f64,
        #[arg(long, default_value_t = 0.3)]
        frac_diagram: f64,
        #[arg(long, default_value_t = 0)]
        val_lessons: usize,
    },
    /// Rank a lesson's paragraphs for one (question, candidate) pair.
    Retrieve {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        lesson: String,
        #[arg(long)]
        question: String,
        /// Candidate index k.
        #[arg(long)]
        candidate: usize,
        /// How many paragraphs to print.
        #[arg(long, default_value_t = 3)]
        top: usize,
    },
    /// Write one textual context graph JSON per (question, candidate) pair.
    BuildGraphs {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Self-supervised open-set comprehension pretraining.
    PretrainSsoc {
        #[arg(long)]
        corpus: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
        /// Checkpoint file to write.
        #[arg(long)]
        out: PathBuf,
        /// Also dump the generated tasks as JSON lines.
        #[arg(long)]
        dump_tasks: Option<PathBuf>,
        /// GloVe-style embedding file (random init when omitted).
        #[arg(long)]
        embeddings: Option<PathBuf>,
    },
    /// Supervised training; prints one metrics JSON line per epoch.
    Train {
        #[arg(long)]
        corpus: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
        /// Directory for per-epoch checkpoints.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        embeddings: Option<PathBuf>,
        /// Overrides the config's ssoc_checkpoint.
        #[arg(long)]
        ssoc_checkpoint: Option<PathBuf>,
    },
    /// Accuracy breakdown over a split (Text T/F, Text MC, Text All,
    /// Diagram, All).
    Eval {
        #[arg(long)]
        corpus: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[arg(long, default_value = "val")]
        split: String,
        /// Write the full report (including per-question predictions) here.
        #[arg(long)]
        json: Option<PathBuf>,
        #[arg(long)]
        embeddings: Option<PathBuf>,
    },
    /// Score one question and dump the explanation bundle as JSON.
    Predict {
        #[arg(long)]
        corpus: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[arg(long)]
        question: String,
        #[arg(long)]
        embeddings: Option<PathBuf>,
    },
    /// Finite-difference check of every differentiable op.
    Gradcheck {
        #[arg(long, default_value_t = 10)]
        seeds: u64,
    },
}

fn load_corpus_arg(path: &Path) -> Result<Corpus> {
    load_corpus(path).with_context(|| format!("loading corpus from {}", path.display()))
}

fn load_embeddings(
    path: Option<&PathBuf>,
    config: &ModelConfig,
    seed: u64,
) -> Result<EmbeddingTable> {
    match path {
        Some(p) => Ok(EmbeddingTable::load(p, config.word_dim, seed)?),
        None => Ok(EmbeddingTable::random(config.word_dim, seed)),
    }
}

fn params_for(
    corpus: &Corpus,
    run: &RunConfig,
    embeddings: Option<&PathBuf>,
    checkpoint_path: Option<&PathBuf>,
) -> Result<ModelParams> {
    let table = load_embeddings(embeddings, &run.model, run.train.seed)?;
    let params = ModelParams::new(&run.model, corpus, &table, run.train.seed);
    if let Some(path) = checkpoint_path {
        let ckpt = checkpoint::load(path)
            .with_context(|| format!("loading checkpoint {}", path.display()))?;
        params.load_records(&ckpt)?;
    }
    Ok(params)
}

fn print_report_table(report: &EvalReport) {
    println!("{:>9} {:>9} {:>9} {:>9} {:>9}", "Text T/F", "Text MC", "Text All", "Diagram", "All");
    println!(
        "{:>9.2} {:>9.2} {:>9.2} {:>9.2} {:>9.2}",
        100.0 * report.text_tf.accuracy,
        100.0 * report.text_mc.accuracy,
        100.0 * report.text_all.accuracy,
        100.0 * report.diagram.accuracy,
        100.0 * report.all.accuracy,
    );
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Synth {
            out,
            seed,
            vocab,
            lessons,
            paragraphs,
            questions,
            frac_true_false,
            frac_text_mc,
            frac_diagram,
            val_lessons,
        } => {
            let spec = SynthSpec {
                vocab_size: vocab,
                lessons,
                paragraphs_per_lesson: paragraphs,
                questions_per_lesson: questions,
                frac_true_false,
                frac_text_mc,
                frac_diagram,
                val_lessons,
            };
            let corpus = generate_synthetic_corpus(&spec, seed)?;
            save_corpus(&corpus, &out)?;
            println!(
                "wrote {} lessons / {} questions to {}",
                corpus.lessons.len(),
                corpus.manifest.counts.get("questions").copied().unwrap_or(0),
                out.display()
            );
        }
        Command::Retrieve { corpus, lesson, question, candidate, top } => {
            let corpus = load_corpus_arg(&corpus)?;
            let lesson =
                corpus.lesson(&lesson).with_context(|| format!("unknown lesson {lesson}"))?;
            let q = lesson
                .questions
                .iter()
                .find(|q| q.id == question)
                .with_context(|| format!("unknown question {question} in lesson {}", lesson.id))?;
            if candidate >= q.candidates.len() {
                bail!("candidate {candidate} out of range for {} candidates", q.candidates.len());
            }
            let index = TfidfIndex::build(&lesson.paragraphs)?;
            let mut query = q.tokens.clone();
            query.extend(q.candidates[candidate].tokens.iter().cloned());
            for (rank, pid) in index.top_j(&query, top)?.iter().enumerate() {
                let score = index.score(&query, pid)?;
                println!(
                    "{}",
                    serde_json::json!({ "rank": rank, "paragraph_id": pid, "score": score })
                );
            }
        }
        Command::BuildGraphs { corpus, out, config } => {
            let run = config.load()?;
            let corpus = load_corpus_arg(&corpus)?;
            fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
            let mut written = 0usize;
            for lesson in &corpus.lessons {
                let index = TfidfIndex::build(&lesson.paragraphs)?;
                for question in &lesson.questions {
                    let instance = harness::build_instance(lesson, question, &index, &run.model)?;
                    for (k, cand) in instance.candidates.iter().enumerate() {
                        let dump = GraphDump::from(&cand.textual);
                        let path = out.join(format!("{}-{k}.json", question.id));
                        fs::write(&path, serde_json::to_string_pretty(&dump)?)
                            .with_context(|| format!("writing {}", path.display()))?;
                        written += 1;
                    }
                }
            }
            println!("wrote {written} graph files to {}", out.display());
        }
        Command::PretrainSsoc { corpus, config, out, dump_tasks, embeddings } => {
            let run = config.load()?;
            let corpus = load_corpus_arg(&corpus)?;
            if let Some(path) = dump_tasks {
                let split = if run.ssoc.use_val {
                    ssoc::SsocSplit::TrainVal
                } else {
                    ssoc::SsocSplit::Train
                };
                let tasks = ssoc::generate_tasks(&corpus, split, run.ssoc.seed)?;
                let mut lines = String::new();
                for t in &tasks {
                    lines.push_str(&serde_json::to_string(t)?);
                    lines.push('\n');
                }
                fs::write(&path, lines).with_context(|| format!("writing {}", path.display()))?;
                println!("dumped {} tasks to {}", tasks.len(), path.display());
            }
            let params = params_for(&corpus, &run, embeddings.as_ref(), None)?;
            let history =
                ssoc::pretrain(&corpus, &params, &run.model, &run.ssoc, |metrics, p, opt| {
                    println!("{}", serde_json::to_string(metrics).expect("metrics serialize"));
                    let ckpt = Checkpoint { params: p.to_records(), optimizer: Some(opt.clone()) };
                    if let Err(e) = checkpoint::save(&out, &ckpt) {
                        eprintln!("checkpoint write failed: {e}");
                    }
                })?;
            if history.is_empty() {
                // zero epochs: still write the untouched params for downstream loads
                let ckpt = Checkpoint { params: params.to_records(), optimizer: None };
                checkpoint::save(&out, &ckpt)?;
            }
            println!("pretrained checkpoint at {}", out.display());
        }
        Command::Train { corpus, config, out, embeddings, ssoc_checkpoint } => {
            let mut run = config.load()?;
            if ssoc_checkpoint.is_some() {
                run.train.ssoc_checkpoint = ssoc_checkpoint;
            }
            let corpus = load_corpus_arg(&corpus)?;
            let params = params_for(&corpus, &run, embeddings.as_ref(), None)?;
            let output =
                train_supervised(&corpus, &params, &run.model, &run.train, out.as_deref(), |m| {
                    println!("{}", serde_json::to_string(m).expect("metrics serialize"));
                })?;
            if let Some(report) = &output.final_val {
                print_report_table(report);
            }
        }
        Command::Eval { corpus, config, checkpoint, split, json, embeddings } => {
            let run = config.load()?;
            let corpus = load_corpus_arg(&corpus)?;
            let split = match split.as_str() {
                "train" => Split::Train,
                "val" => Split::Val,
                other => bail!("unknown split {other}; expected train or val"),
            };
            let params = params_for(&corpus, &run, embeddings.as_ref(), checkpoint.as_ref())?;
            let report = harness::evaluate(&corpus, split, &params, &run.model)?;
            print_report_table(&report);
            if let Some(path) = json {
                fs::write(&path, serde_json::to_string_pretty(&report)?)
                    .with_context(|| format!("writing {}", path.display()))?;
            }
        }
        Command::Predict { corpus, config, checkpoint, question, embeddings } => {
            let run = config.load()?;
            let corpus = load_corpus_arg(&corpus)?;
            let params = params_for(&corpus, &run, embeddings.as_ref(), checkpoint.as_ref())?;
            let bundle = predict(&corpus, &question, &params, &run.model)?;
            println!("{}", serde_json::to_string_pretty(&bundle)?);
        }
        Command::Gradcheck { seeds } => {
            let mut worst: (String, f64) = (String::new(), 0.0);
            let mut failed = false;
            for seed in 0..seeds {
                for (name, err) in op_gradcheck_suite(seed) {
                    if err > worst.1 {
                        worst = (format!("{name} (seed {seed})"), err);
                    }
                    if err >= 1e-4 {
                        println!("FAIL {name} seed {seed}: rel err {err:.3e}");
                        failed = true;
                    }
                }
            }
            println!(
                "checked {} ops x {seeds} seeds; worst {} at {:.3e}",
                op_gradcheck_suite(0).len(),
                worst.0,
                worst.1
            );
            if failed {
                bail!("gradient check failed");
            }
            println!("all gradient checks passed (rel err < 1e-4)");
        }
    }
    Ok(())
}
