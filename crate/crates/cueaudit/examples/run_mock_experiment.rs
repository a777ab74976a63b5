//! Runs a complete offline experiment: a tiny corpus, one mock judge, all
//! five probes, then the metric report bundle (JSON + CSV + markdown).
//!
//! ```bash
//! cargo run -p cueaudit --example run_mock_experiment
//! ```

use cueaudit::analysis::AnalysisConfig;
use cueaudit::core::{
    CandidatePair, DocumentRecord, ExtractiveMethod, PairSubset, Probe, Protocol, SummaryOrigin,
    SummaryRecord,
};
use cueaudit::corpus::{save_corpus, Corpus};
use cueaudit::harness::{
    equal_pair_set, read_trial_log, report, run_experiment, BackendSpec, ExperimentConfig,
    JudgeSpec,
};
use cueaudit::protocols::CriterionSet;

fn main() -> cueaudit::Result<()> {
    let dir = std::env::temp_dir().join("cueaudit-example-run");
    let _ = std::fs::remove_dir_all(&dir);

    let doc = DocumentRecord::new(
        "d1",
        "Rivers rise in spring. Farmers watch the gauges closely. Levees held again this year.",
        "news",
    )?;
    let s1 = SummaryRecord::new("s1", "d1", "Rivers rose but levees held.", SummaryOrigin::Llm)?;
    let s2 = SummaryRecord::new(
        "s2",
        "d1",
        "Rivers rise in spring.",
        SummaryOrigin::Extractive { method: ExtractiveMethod::Textrank },
    )?;
    let corpus = Corpus {
        documents: vec![doc],
        summaries: vec![s1, s2],
        pairs: vec![CandidatePair {
            pair_id: "p1".into(),
            doc_id: "d1".into(),
            slot1: "s1".into(),
            slot2: "s2".into(),
            subset: PairSubset::Standard,
        }],
    };
    save_corpus(&corpus, &dir.join("corpus"))?;

    let cfg = ExperimentConfig {
        experiment_id: "mock-demo".into(),
        corpus_dir: dir.join("corpus"),
        judges: vec![JudgeSpec {
            judge_id: "mock".into(),
            backend: BackendSpec::Mock {
                reply: r#"{"verdict":"[1,2]","explanation":"the first is more complete"}"#.into(),
            },
        }],
        protocols: vec![Protocol::Baseline],
        probes: vec![Probe::B, Probe::T, Probe::F, Probe::P, Probe::R],
        subsets: vec![],
        attack: None,
        criteria: CriterionSet::default(),
        label_scheme: Default::default(),
        analysis: AnalysisConfig::default(),
        master_seed: 42,
        concurrency: 1,
        max_tokens: 256,
        output_dir: dir.join("out"),
    };

    let outcome = run_experiment(&cfg)?;
    println!(
        "wrote {} trials to {}",
        outcome.new_trials,
        outcome.log_path.display()
    );

    let trials = read_trial_log(&outcome.log_path)?;
    let bundle = report(
        &trials,
        &equal_pair_set(&corpus),
        &cfg.analysis,
        None,
        &dir.join("report"),
    )?;
    println!("report cells: {:?}", bundle.cells.keys().collect::<Vec<_>>());
    println!("markdown summary:\n{}", std::fs::read_to_string(&bundle.markdown_path)?);
    Ok(())
}
