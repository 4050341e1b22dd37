//! The `sylvec` command line: train, nn, eval-sim, pca-pairs, export.
//!
//! Exit status is 0 on success, 1 on runtime errors and 2 on usage errors.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::baseline::train_baseline_with_progress;
use crate::config::{FilterLayout, TrainConfig};
use crate::error::{Error, Result};
use crate::eval::{evaluate_wordsim, postposition_cluster_report, read_similarity_pairs, NeighborIndex};
use crate::export::write_text_embeddings;
use crate::model_file::AnyModel;
use crate::trainer::{train_with_progress, EpochStats};

#[derive(Parser, Debug)]
#[command(name = "sylvec", version, about = "Syllable-compositional Korean word embeddings")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Train a model on a whitespace-tokenized corpus.
    Train(TrainArgs),
    /// Print the nearest vocabulary words of a (possibly unseen) word.
    Nn(NnArgs),
    /// Pearson correlation between model cosines and human similarity scores.
    EvalSim(EvalSimArgs),
    /// PCA coordinates and parallelism of word / word+postposition pairs.
    PcaPairs(PcaPairsArgs),
    /// Write vectors in the plain-text embedding format.
    Export(ExportArgs),
}

fn positive(s: &str) -> std::result::Result<usize, String> {
    match s.parse::<usize>() {
        Ok(0) => Err("must be at least 1".into()),
        Ok(n) => Ok(n),
        Err(e) => Err(e.to_string()),
    }
}

fn positive_real(s: &str) -> std::result::Result<f64, String> {
    match s.parse::<f64>() {
        Ok(x) if x > 0.0 && x.is_finite() => Ok(x),
        Ok(_) => Err("must be a positive number".into()),
        Err(e) => Err(e.to_string()),
    }
}

#[derive(Args, Debug)]
struct TrainArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Syllable embedding dimension.
    #[arg(long, default_value = "320", value_parser = positive)]
    dim: usize,
    #[arg(long, default_value = "4", value_parser = positive)]
    window: usize,
    #[arg(long, default_value = "7", value_parser = positive)]
    negatives: usize,
    #[arg(long, default_value = "12", value_parser = positive)]
    epochs: usize,
    /// Comma-separated convolution filter widths.
    #[arg(long, default_value = "1,2,3,4", value_delimiter = ',', value_parser = positive)]
    widths: Vec<usize>,
    #[arg(long, default_value = "80", value_parser = positive)]
    filters_per_width: usize,
    #[arg(long, default_value = "5", value_parser = positive)]
    min_count: usize,
    #[arg(long, default_value = "0.025", value_parser = positive_real)]
    lr: f64,
    #[arg(long, default_value = "0.0001", value_parser = positive_real)]
    min_lr: f64,
    #[arg(long, default_value = "1")]
    seed: u64,
    /// Train the word-level skip-gram baseline instead.
    #[arg(long)]
    baseline: bool,
    /// Worker threads; more than one enables lock-free parallel updates.
    #[arg(long, default_value = "1", value_parser = positive)]
    threads: usize,
    /// Always use the full window instead of sampling it per position.
    #[arg(long)]
    fixed_window: bool,
    #[arg(long)]
    lowercase: bool,
    /// Frequent-word subsampling threshold (e.g. 1e-4).
    #[arg(long, value_parser = positive_real)]
    subsample: Option<f64>,
    /// Suppress progress output on stderr.
    #[arg(long)]
    quiet: bool,
}

impl TrainArgs {
    fn config(&self) -> Result<TrainConfig> {
        let config = TrainConfig {
            dim: self.dim,
            layout: FilterLayout::uniform(&self.widths, self.filters_per_width)?,
            window: self.window,
            negatives: self.negatives,
            epochs: self.epochs,
            initial_lr: self.lr,
            min_lr: self.min_lr,
            min_count: self.min_count as u64,
            seed: self.seed,
            dynamic_window: !self.fixed_window,
            lowercase: self.lowercase,
            subsample: self.subsample,
            threads: self.threads,
            ..TrainConfig::default()
        };
        config.validate()?;
        Ok(config)
    }
}

#[derive(Args, Debug)]
struct NnArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    word: String,
    #[arg(long, default_value = "10", value_parser = positive)]
    k: usize,
}

#[derive(Args, Debug)]
struct EvalSimArgs {
    #[arg(long)]
    model: PathBuf,
    /// Tab-separated `word_a word_b score` lines.
    #[arg(long)]
    pairs: PathBuf,
}

#[derive(Args, Debug)]
struct PcaPairsArgs {
    #[arg(long)]
    model: PathBuf,
    /// Tab-separated `word word_with_postposition` lines.
    #[arg(long)]
    pairs: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct ExportArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

/// Runs the binary with the process arguments and standard streams.
pub fn run() -> i32 {
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with(std::env::args_os(), &mut stdout.lock(), &mut stderr.lock())
}

/// Runs a command line (`args[0]` is the program name) against the given
/// output streams and returns the exit status.
pub fn run_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{text}");
                    0
                }
                _ => {
                    let _ = write!(err, "{text}");
                    2
                }
            };
        }
    };
    let result = match cli.command {
        Command::Train(args) => match args.config() {
            Ok(config) => cmd_train(&args, &config, out, err),
            Err(e) => {
                let _ = writeln!(err, "error: {e}");
                return 2;
            }
        },
        Command::Nn(args) => cmd_nn(&args, out),
        Command::EvalSim(args) => cmd_eval_sim(&args, out),
        Command::PcaPairs(args) => cmd_pca_pairs(&args),
        Command::Export(args) => cmd_export(&args),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            1
        }
    }
}

fn cmd_train(args: &TrainArgs, config: &TrainConfig, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    let quiet = args.quiet;
    let mut progress = |s: &EpochStats| {
        if !quiet {
            let _ = writeln!(
                err,
                "epoch {:>3}  loss {:.6}  pairs {}  {:.0} pairs/s  lr {:.6}",
                s.epoch, s.mean_loss, s.pairs, s.pairs_per_sec, s.lr
            );
        }
    };
    let (model, report): (AnyModel, _) = if args.baseline {
        let (m, r) = train_baseline_with_progress(&args.corpus, config, &mut progress)?;
        (m.into(), r)
    } else {
        let (m, r) = train_with_progress(&args.corpus, config, &mut progress)?;
        (m.into(), r)
    };
    model.save(&args.out)?;
    for s in &report.epochs {
        writeln!(out, "{}\t{:.6}", s.epoch, s.mean_loss)?;
    }
    Ok(())
}

fn cmd_nn(args: &NnArgs, out: &mut dyn Write) -> Result<()> {
    let model = AnyModel::load(&args.model)?;
    let vectors = model.as_word_vectors();
    let index = NeighborIndex::new(vectors)?;
    for (word, sim) in index.nearest(&args.word, args.k)? {
        writeln!(out, "{word}\t{sim:.6}")?;
    }
    Ok(())
}

fn cmd_eval_sim(args: &EvalSimArgs, out: &mut dyn Write) -> Result<()> {
    let model = AnyModel::load(&args.model)?;
    let pairs = read_similarity_pairs(BufReader::new(File::open(&args.pairs)?))?;
    let report = evaluate_wordsim(model.as_word_vectors(), &pairs)?;
    writeln!(out, "{:.6}\t{}\t{}", report.pearson_r, report.pairs_used, report.pairs_skipped)?;
    Ok(())
}

/// Reads `word<TAB>word_with_postposition` lines.
pub fn read_word_pairs<R: BufRead>(reader: R) -> Result<Vec<(String, String)>> {
    let mut pairs = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.trim_end_matches('\r').split('\t').collect();
        match fields.as_slice() {
            [a, b] if !a.trim().is_empty() && !b.trim().is_empty() => {
                pairs.push((a.trim().to_owned(), b.trim().to_owned()));
            }
            _ => {
                return Err(Error::Parse {
                    line: i + 1,
                    message: "expected two tab-separated words".into(),
                })
            }
        }
    }
    Ok(pairs)
}

fn cmd_pca_pairs(args: &PcaPairsArgs) -> Result<()> {
    let model = AnyModel::load(&args.model)?;
    let pairs = read_word_pairs(BufReader::new(File::open(&args.pairs)?))?;
    let report = postposition_cluster_report(model.as_word_vectors(), &pairs)?;
    let mut out = BufWriter::new(File::create(&args.out)?);
    for (label, xy) in report.labels.iter().zip(&report.projection.coordinates) {
        writeln!(out, "{label}\t{:.6}\t{:.6}", xy[0], xy[1])?;
    }
    if report.degenerate > 0 {
        writeln!(out, "#degenerate\t{}", report.degenerate)?;
    }
    match report.parallelism {
        Some(p) => writeln!(out, "#parallelism\t{p:.6}")?,
        None => writeln!(out, "#parallelism\tnan")?,
    }
    out.flush()?;
    Ok(())
}

fn cmd_export(args: &ExportArgs) -> Result<()> {
    let model = AnyModel::load(&args.model)?;
    let out = BufWriter::new(File::create(&args.out)?);
    write_text_embeddings(model.as_word_vectors(), out)
}
