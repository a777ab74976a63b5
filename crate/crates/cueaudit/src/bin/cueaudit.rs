//! Thin command-line front end over the cueaudit library.

use std::collections::HashSet;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use cueaudit::analysis::{AnalysisConfig, HashedBowProvider};
use cueaudit::attacks::{confidence_attack, verbosity_attack, AttackConfig};
use cueaudit::core::{DocumentRecord, ExtractiveMethod, SummaryOrigin, SummaryRecord};
use cueaudit::corpus::{
    build_eq_pairs, build_single_relabel, build_standard_pairs, load_corpus, save_corpus,
    GenerationConfig,
};
use cueaudit::fixtures::replay_fixtures;
use cueaudit::harness::{self, equal_pair_set, read_trial_log, ExperimentConfig};
use cueaudit::judgeclient::{HttpJudgeClient, JudgeBackend, ScriptedMockJudge};
use cueaudit::summarizers::{summarize, ExtractiveConfig};

#[derive(Parser)]
#[command(name = "cueaudit", about = "Cue-invariance audit harness for pairwise LLM judging")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Textrank,
    Lexrank,
    Klsum,
    Sumbasic,
}

impl From<MethodArg> for ExtractiveMethod {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Textrank => ExtractiveMethod::Textrank,
            MethodArg::Lexrank => ExtractiveMethod::Lexrank,
            MethodArg::Klsum => ExtractiveMethod::Klsum,
            MethodArg::Sumbasic => ExtractiveMethod::Sumbasic,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum SubsetArg {
    Standard,
    EqPair,
    Single,
    Head2head,
}

#[derive(Clone, Copy, ValueEnum)]
enum AttackArg {
    Verbosity,
    Confidence,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment described by a JSON config file.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// Compute metric reports from an existing trial log.
    Analyze {
        #[arg(long)]
        log: PathBuf,
        /// Corpus directory; used to identify equal pairs for EDR.
        #[arg(long)]
        corpus: Option<PathBuf>,
        #[arg(long, default_value = "report")]
        output_dir: PathBuf,
    },
    /// Replay the shipped published count tables through the analysis
    /// pipeline and report matches, flags, and mismatches.
    ReplayFixtures {
        /// Emit the full report as JSON instead of a text table.
        #[arg(long)]
        json: bool,
    },
    /// Corpus loading and candidate-pair construction.
    Corpus {
        #[command(subcommand)]
        command: CorpusCommand,
    },
    /// Summarize a text file with a deterministic extractive method.
    Summarize {
        /// Path to a plain-text document.
        file: PathBuf,
        #[arg(long, value_enum)]
        method: MethodArg,
        #[arg(long, default_value_t = 5)]
        sentences: usize,
    },
    /// Apply an anchoring attack to a summary text and print the result.
    Attack {
        /// Path to a plain-text summary.
        file: PathBuf,
        #[arg(long, value_enum)]
        kind: AttackArg,
        /// Verbosity length multiplier (>= 1.0); ignored for confidence.
        #[arg(long, default_value_t = 1.5)]
        factor: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Subcommand)]
enum CorpusCommand {
    /// Validate a corpus directory and print a summary.
    Load {
        #[arg(long)]
        dir: PathBuf,
    },
    /// Generate summaries and candidate pairs for one subset, writing the
    /// augmented corpus back to the directory.
    Build {
        #[arg(long)]
        dir: PathBuf,
        #[arg(long, value_enum)]
        subset: SubsetArg,
        /// Extractive method for the standard subset.
        #[arg(long, value_enum, default_value = "textrank")]
        method: MethodArg,
        /// Generator model id for LLM-side summaries (HTTP backend).
        #[arg(long, default_value = "default")]
        model: String,
        /// Offline mode: use this fixed reply instead of an HTTP backend.
        #[arg(long)]
        mock_reply: Option<String>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(cli: Cli) -> cueaudit::Result<ExitCode> {
    match cli.command {
        Command::Run { config } => {
            let cfg = ExperimentConfig::load(&config)?;
            let outcome = harness::run_experiment(&cfg)?;
            println!(
                "log: {}\nnew trials: {}\nresumed trials: {}\nfailed cells: {}",
                outcome.log_path.display(),
                outcome.new_trials,
                outcome.resumed_trials,
                outcome.failed_cells
            );
            for p in &outcome.skipped_pairs {
                eprintln!("skipped pair: {p}");
            }
            Ok(if outcome.failed_cells == 0 { ExitCode::SUCCESS } else { ExitCode::FAILURE })
        }
        Command::Analyze { log, corpus, output_dir } => {
            let trials = read_trial_log(&log)?;
            let eq_set: HashSet<String> = match corpus {
                Some(dir) => {
                    let (c, warnings) = load_corpus(&dir)?;
                    for w in warnings {
                        eprintln!("warning: {w}");
                    }
                    equal_pair_set(&c)
                }
                None => {
                    eprintln!("warning: no corpus given; EDR will have no equal pairs");
                    HashSet::new()
                }
            };
            let provider = HashedBowProvider::default();
            let bundle =
                harness::report(&trials, &eq_set, &AnalysisConfig::default(), Some(&provider), &output_dir)?;
            for w in &bundle.warnings {
                eprintln!("warning: {w}");
            }
            println!(
                "wrote {}\nwrote {}\nwrote {}",
                bundle.json_path.display(),
                bundle.csv_path.display(),
                bundle.markdown_path.display()
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::ReplayFixtures { json } => {
            let report = replay_fixtures()?;
            if json {
                println!("{}", serde_json::to_string_pretty(&report)?);
            } else {
                print!("{}", report.render_text());
            }
            Ok(if report.unexpected_mismatches().is_empty() {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            })
        }
        Command::Corpus { command } => corpus_command(command),
        Command::Summarize { file, method, sentences } => {
            let text = std::fs::read_to_string(&file)?;
            let doc_id = file.file_stem().and_then(|s| s.to_str()).unwrap_or("doc").to_string();
            let doc = DocumentRecord::new(doc_id, text, "")?;
            let cfg = ExtractiveConfig { target_sentences: sentences, ..Default::default() };
            let summary = summarize(&doc, method.into(), &cfg)?;
            println!("{}", summary.text);
            Ok(ExitCode::SUCCESS)
        }
        Command::Attack { file, kind, factor, seed } => {
            let text = std::fs::read_to_string(&file)?;
            let doc_id = file.file_stem().and_then(|s| s.to_str()).unwrap_or("doc").to_string();
            let summary = SummaryRecord {
                summary_id: format!("{doc_id}::summary"),
                doc_id,
                text,
                origin: SummaryOrigin::Llm,
                attack: None,
            };
            let cfg = AttackConfig { verbosity_factor: factor, ..Default::default() };
            let attacked = match kind {
                AttackArg::Verbosity => {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    verbosity_attack(&summary, &cfg, &mut rng)?
                }
                AttackArg::Confidence => confidence_attack(&summary, &cfg)?,
            };
            println!("{}", attacked.text);
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn corpus_command(cmd: CorpusCommand) -> cueaudit::Result<ExitCode> {
    match cmd {
        CorpusCommand::Load { dir } => {
            let (corpus, warnings) = load_corpus(&dir)?;
            for w in warnings {
                eprintln!("warning: {w}");
            }
            println!(
                "documents: {}\nsummaries: {}\npairs: {}",
                corpus.documents.len(),
                corpus.summaries.len(),
                corpus.pairs.len()
            );
            Ok(ExitCode::SUCCESS)
        }
        CorpusCommand::Build { dir, subset, method, model, mock_reply } => {
            let (mut corpus, warnings) = load_corpus(&dir)?;
            for w in warnings {
                eprintln!("warning: {w}");
            }
            let backend: Box<dyn JudgeBackend> = match mock_reply {
                Some(reply) => Box::new(ScriptedMockJudge::constant(reply)),
                None => Box::new(HttpJudgeClient::from_env()?),
            };
            let gen_cfg = GenerationConfig { model_id: model, ..Default::default() };
            let ext_cfg = ExtractiveConfig::default();
            let (pairs, skipped) = match subset {
                SubsetArg::Standard => build_standard_pairs(
                    &mut corpus,
                    &[method.into()],
                    backend.as_ref(),
                    &gen_cfg,
                    &ext_cfg,
                )?,
                SubsetArg::Head2head => build_standard_pairs(
                    &mut corpus,
                    &ExtractiveMethod::ALL,
                    backend.as_ref(),
                    &gen_cfg,
                    &ext_cfg,
                )?,
                SubsetArg::EqPair => build_eq_pairs(&mut corpus, backend.as_ref(), &gen_cfg)?,
                SubsetArg::Single => (build_single_relabel(&mut corpus)?, Vec::new()),
            };
            for s in &skipped {
                eprintln!("skipped: {s}");
            }
            save_corpus(&corpus, &dir)?;
            println!("built {} pairs; corpus saved to {}", pairs.len(), dir.display());
            Ok(ExitCode::SUCCESS)
        }
    }
}
