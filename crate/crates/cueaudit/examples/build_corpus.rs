//! Builds candidate pairs offline: standard LLM-vs-extractive pairs with a
//! mock generator, plus the identical-summary control subset.
//!
//! ```bash
//! cargo run -p cueaudit --example build_corpus
//! ```

use cueaudit::core::{DocumentRecord, ExtractiveMethod};
use cueaudit::corpus::{
    build_single_relabel, build_standard_pairs, Corpus, GenerationConfig,
};
use cueaudit::judgeclient::ScriptedMockJudge;
use cueaudit::summarizers::ExtractiveConfig;

fn main() -> cueaudit::Result<()> {
    let mut corpus = Corpus {
        documents: vec![DocumentRecord::new(
            "d1",
            "The reservoir reached capacity after weeks of rain. Engineers opened the \
             spillway gates on Tuesday. Downstream towns prepared sandbags along the banks. \
             The river crested below the flood stage by Friday.",
            "news",
        )?],
        summaries: vec![],
        pairs: vec![],
    };

    // The generator backend stands in for an LLM; any completion backend
    // (including the HTTP client) satisfies the same trait.
    let generator =
        ScriptedMockJudge::constant("The reservoir filled and the spillway kept the river below flood stage.");

    let (pairs, skipped) = build_standard_pairs(
        &mut corpus,
        &[ExtractiveMethod::Textrank, ExtractiveMethod::Klsum],
        &generator,
        &GenerationConfig::default(),
        &ExtractiveConfig { target_sentences: 2, ..Default::default() },
    )?;
    println!("standard/head-to-head pairs: {pairs:#?}");
    assert!(skipped.is_empty());

    let identical = build_single_relabel(&mut corpus)?;
    println!("identical-summary pairs: {identical:#?}");

    println!(
        "corpus now holds {} summaries and {} pairs",
        corpus.summaries.len(),
        corpus.pairs.len()
    );
    Ok(())
}
