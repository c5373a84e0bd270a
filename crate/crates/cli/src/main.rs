//! `relevance`: build IDF tables, train word weights, evaluate prompt
//! identification and inspect learned weights.
//!
//! Exit status is 0 on success, 1 on runtime or data errors and 2 on usage
//! errors.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::error::ErrorKind;
use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use relevance_core::corpus::{load_labeled_dataset, load_plain_corpus, load_prompts};
use relevance_core::eval::{self, EvalReport};
use relevance_core::trainer::{self, TrainReport};
use relevance_core::{EmbeddingTable, IdfTable, Method, TrainerConfig, WeightTable};
use serde::Serialize;
use serde_json::json;

#[derive(Parser, Debug)]
#[command(name = "relevance", version, about = "Sentence-level prompt relevance scoring")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build a sentence-level IDF table from a plain corpus.
    Idf(IdfArgs),
    /// Learn per-word weights over frozen embeddings.
    Train(TrainArgs),
    /// Score a labeled dataset and report accuracy and MRR.
    Evaluate(EvaluateArgs),
    /// Show learned weights or the words closest to a prompt.
    #[command(subcommand)]
    Inspect(InspectCommand),
}

#[derive(Args, Debug, Serialize)]
struct IdfArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(ValueEnum, Clone, Copy, Debug, Serialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
enum EmbeddingFormat {
    /// Binary when the file name ends in `.bin`, text otherwise.
    Auto,
    Text,
    Binary,
}

#[derive(Args, Debug, Serialize)]
struct EmbeddingArgs {
    #[arg(long, value_name = "PATH")]
    embeddings: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = EmbeddingFormat::Auto)]
    embeddings_format: EmbeddingFormat,
}

#[derive(Args, Debug, Serialize)]
struct TrainArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[command(flatten)]
    embeddings: EmbeddingArgs,
    /// Final weight table (TSV).
    #[arg(long)]
    out: PathBuf,
    /// Training report; defaults to `<out>.report.jsonl`.
    #[arg(long)]
    report: Option<PathBuf>,
    #[arg(long, default_value_t = 0.1, value_parser = positive_f64)]
    lr: f64,
    #[arg(long, default_value_t = 2.5, value_parser = positive_f64)]
    std: f64,
    #[arg(long, default_value_t = 5, value_parser = clap::value_parser!(u64).range(1..))]
    epochs: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the weights after every epoch as `<out stem>.epoch<k>.tsv`.
    #[arg(long)]
    checkpoint: bool,
}

#[derive(ValueEnum, Clone, Copy, Debug, Serialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
enum MethodArg {
    Tfidf,
    Sum,
    IdfEmb,
    Weighted,
    Combo,
    Random,
    Majority,
}

#[derive(Args, Debug, Serialize)]
struct EvaluateArgs {
    #[arg(long, value_enum)]
    method: MethodArg,
    #[arg(long)]
    prompts: PathBuf,
    #[arg(long)]
    sentences: PathBuf,
    /// IDF table (for tfidf, idf-emb and combo).
    #[arg(long)]
    idf: Option<PathBuf>,
    #[command(flatten)]
    embeddings: EmbeddingArgs,
    /// Learned weights (for weighted and combo).
    #[arg(long)]
    weights: Option<PathBuf>,
    /// Share of the TF-IDF scores in the combination.
    #[arg(long, default_value_t = 0.5, value_parser = unit_interval)]
    alpha: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the report record here as well as to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write the full score matrix (TSV).
    #[arg(long)]
    scores: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum InspectCommand {
    /// Lowest and highest learned weights.
    Weights(InspectWeightsArgs),
    /// Vocabulary words most similar to a prompt under the learned weights.
    PromptWords(PromptWordsArgs),
}

#[derive(Args, Debug, Serialize)]
struct InspectWeightsArgs {
    #[arg(long)]
    weights: PathBuf,
    #[arg(long, default_value_t = 10)]
    top: usize,
    #[arg(long, default_value_t = 10)]
    bottom: usize,
}

#[derive(Args, Debug, Serialize)]
struct PromptWordsArgs {
    #[arg(long)]
    prompt_id: String,
    #[arg(long, default_value_t = 10)]
    k: usize,
    #[arg(long)]
    prompts: PathBuf,
    #[command(flatten)]
    embeddings: EmbeddingArgs,
    #[arg(long)]
    weights: PathBuf,
}

fn positive_f64(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v > 0.0 && v.is_finite() => Ok(v),
        _ => Err(format!("`{s}` is not a positive number")),
    }
}

fn unit_interval(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if (0.0..=1.0).contains(&v) => Ok(v),
        _ => Err(format!("`{s}` is not in [0, 1]")),
    }
}

fn usage_error(message: &str) -> ! {
    Cli::command().error(ErrorKind::MissingRequiredArgument, message).exit()
}

fn require<'a, T>(value: &'a Option<T>, flag: &str, method: MethodArg) -> &'a T {
    match value {
        Some(v) => v,
        None => usage_error(&format!(
            "--method {} requires {flag}",
            method.to_possible_value().unwrap().get_name()
        )),
    }
}

fn load_embeddings(path: &Path, format: EmbeddingFormat) -> Result<EmbeddingTable> {
    let binary = match format {
        EmbeddingFormat::Binary => true,
        EmbeddingFormat::Text => false,
        EmbeddingFormat::Auto => path.extension().is_some_and(|e| e == "bin"),
    };
    let table = if binary {
        EmbeddingTable::load_binary(path)
    } else {
        EmbeddingTable::load_text(path)
    };
    table.with_context(|| format!("loading embeddings {}", path.display()))
}

fn cmd_idf(args: &IdfArgs) -> Result<()> {
    println!("{}", json!({ "command": "idf", "config": args }));
    let corpus = load_plain_corpus(&args.corpus)?;
    let idf = IdfTable::build(&corpus).with_context(|| format!("building IDF from {}", args.corpus.display()))?;
    idf.save(&args.out)?;
    println!("N={} vocab={}", idf.n_sentences(), idf.len());
    Ok(())
}

fn checkpoint_path(out: &Path, epoch: usize) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy()).unwrap_or_default();
    out.with_file_name(format!("{stem}.epoch{epoch}.tsv"))
}

fn train_record(args: &TrainArgs, report: &TrainReport, emb: &EmbeddingTable) -> serde_json::Value {
    json!({
        "command": "train",
        "config": args,
        "epoch_costs": report.epoch_costs,
        "triples_processed": report.triples_processed,
        "triples_skipped": report.triples_skipped,
        "vocab_size": emb.len(),
        "embedding_parameters": emb.parameter_count(),
        "weight_parameters": emb.len(),
    })
}

fn cmd_train(args: &TrainArgs) -> Result<()> {
    let emb_path = args
        .embeddings
        .embeddings
        .as_deref()
        .unwrap_or_else(|| usage_error("train requires --embeddings"));
    println!("{}", json!({ "command": "train", "config": args }));
    let corpus = load_plain_corpus(&args.corpus)?;
    let emb = load_embeddings(emb_path, args.embeddings.embeddings_format)?;
    let config = TrainerConfig {
        learning_rate: args.lr,
        neighbor_stddev: args.std,
        epochs: args.epochs as usize,
        seed: args.seed,
    };
    let (weights, report) = trainer::train_with(&corpus, &emb, config, |stats, weights| {
        eprintln!(
            "epoch {} mean cost {:.6} ({} triples, {} skipped)",
            stats.epoch, stats.mean_cost, stats.processed, stats.skipped
        );
        if args.checkpoint {
            weights.save(checkpoint_path(&args.out, stats.epoch))?;
        }
        Ok(())
    })?;
    weights.save(&args.out)?;
    let record = train_record(args, &report, &emb).to_string();
    let report_path = args
        .report
        .clone()
        .unwrap_or_else(|| PathBuf::from(format!("{}.report.jsonl", args.out.display())));
    fs::write(&report_path, format!("{record}\n")).with_context(|| format!("writing {}", report_path.display()))?;
    println!("{record}");
    Ok(())
}

fn report_record(report: &EvalReport, args: &EvaluateArgs) -> String {
    let per_prompt: serde_json::Map<String, serde_json::Value> = report
        .per_prompt
        .iter()
        .map(|(p, t)| (p.clone(), json!({ "correct": t.correct, "total": t.total })))
        .collect();
    // Accuracy and MRR are written with exactly four decimals.
    format!(
        "{{\"method\":{},\"accuracy\":{:.4},\"mrr\":{:.4},\"n_sentences\":{},\"per_prompt\":{},\"config\":{}}}",
        serde_json::to_string(&report.method).unwrap(),
        report.accuracy,
        report.mrr,
        report.n_sentences,
        serde_json::Value::Object(per_prompt),
        serde_json::to_string(args).unwrap(),
    )
}

fn cmd_evaluate(args: &EvaluateArgs) -> Result<()> {
    let m = args.method;
    // Check every required flag before touching the filesystem.
    let needs_idf = matches!(m, MethodArg::Tfidf | MethodArg::IdfEmb | MethodArg::Combo);
    let needs_emb = matches!(
        m,
        MethodArg::Sum | MethodArg::IdfEmb | MethodArg::Weighted | MethodArg::Combo
    );
    let needs_weights = matches!(m, MethodArg::Weighted | MethodArg::Combo);
    let idf_path = needs_idf.then(|| require(&args.idf, "--idf", m));
    let emb_path = needs_emb.then(|| require(&args.embeddings.embeddings, "--embeddings", m));
    let weights_path = needs_weights.then(|| require(&args.weights, "--weights", m));

    let dataset = load_labeled_dataset(&args.prompts, &args.sentences)?;
    let idf = idf_path.map(IdfTable::load).transpose()?;
    let emb = emb_path
        .map(|p| load_embeddings(p, args.embeddings.embeddings_format))
        .transpose()?;
    let weights = weights_path.map(WeightTable::load).transpose()?;

    let matrix = match m {
        MethodArg::Random => eval::score_random(&dataset, &mut ChaCha8Rng::seed_from_u64(args.seed)),
        MethodArg::Majority => eval::score_majority(&dataset),
        MethodArg::Tfidf => eval::score_all(
            &dataset,
            &Method::Tfidf {
                idf: idf.as_ref().unwrap(),
            },
        )?,
        MethodArg::Sum => eval::score_all(
            &dataset,
            &Method::Sum {
                emb: emb.as_ref().unwrap(),
            },
        )?,
        MethodArg::IdfEmb => eval::score_all(
            &dataset,
            &Method::IdfEmb {
                emb: emb.as_ref().unwrap(),
                idf: idf.as_ref().unwrap(),
            },
        )?,
        MethodArg::Weighted => eval::score_all(
            &dataset,
            &Method::Weighted {
                emb: emb.as_ref().unwrap(),
                weights: weights.as_ref().unwrap(),
            },
        )?,
        MethodArg::Combo => {
            let tfidf = eval::score_all(
                &dataset,
                &Method::Tfidf {
                    idf: idf.as_ref().unwrap(),
                },
            )?;
            let weighted = eval::score_all(
                &dataset,
                &Method::Weighted {
                    emb: emb.as_ref().unwrap(),
                    weights: weights.as_ref().unwrap(),
                },
            )?;
            eval::score_combination(&tfidf, &weighted, args.alpha)?
        }
    };
    if let Some(path) = &args.scores {
        fs::write(path, matrix.to_tsv()).with_context(|| format!("writing {}", path.display()))?;
    }
    let name = m.to_possible_value().unwrap().get_name().to_string();
    let report = eval::metrics(&matrix, &name)?;
    let record = report_record(&report, args);
    if let Some(path) = &args.out {
        fs::write(path, format!("{record}\n")).with_context(|| format!("writing {}", path.display()))?;
    }
    println!("{record}");
    Ok(())
}

fn cmd_inspect_weights(args: &InspectWeightsArgs) -> Result<()> {
    eprintln!("{}", json!({ "command": "inspect weights", "config": args }));
    let weights = WeightTable::load(&args.weights)?;
    let (bottom, _) = eval::inspect_weights(&weights, args.bottom);
    let (_, top) = eval::inspect_weights(&weights, args.top);
    for (word, g) in bottom.iter().chain(&top) {
        println!("{word}\t{g:.2}");
    }
    Ok(())
}

fn cmd_prompt_words(args: &PromptWordsArgs) -> Result<()> {
    let emb_path = args
        .embeddings
        .embeddings
        .as_deref()
        .unwrap_or_else(|| usage_error("prompt-words requires --embeddings"));
    eprintln!("{}", json!({ "command": "inspect prompt-words", "config": args }));
    let prompts = load_prompts(&args.prompts)?;
    let emb = load_embeddings(emb_path, args.embeddings.embeddings_format)?;
    let weights = WeightTable::load(&args.weights)?;
    for w in eval::top_words_for_prompt(&args.prompt_id, &prompts, &emb, &weights, args.k)? {
        println!("{}\t{:.4}\t{:.2}", w.word, w.score, w.weight);
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Idf(args) => cmd_idf(args),
        Command::Train(args) => cmd_train(args),
        Command::Evaluate(args) => cmd_evaluate(args),
        Command::Inspect(InspectCommand::Weights(args)) => cmd_inspect_weights(args),
        Command::Inspect(InspectCommand::PromptWords(args)) => cmd_prompt_words(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
