//! Demonstrates estimator recovery with the synthetic anchored judge: the
//! measured label-directed shift tracks its closed-form expectation
//! E[LDS] = q * (1 - base_p12) as the anchoring probability q varies.
//!
//! ```bash
//! cargo run -p cueaudit --example synthetic_judge_recovery
//! ```

use std::collections::BTreeMap;

use cueaudit::analysis::{delta_decomposition, lao, DEFAULT_EPSILON};
use cueaudit::core::{
    outcome_distribution, CandidatePair, CueAssignment, DocumentRecord, ExtractiveMethod,
    PairSubset, Perm, Probe, SummaryOrigin, SummaryRecord, Trial, Verdict,
};
use cueaudit::cueprobe::ResolvedPair;
use cueaudit::judgeclient::{SyntheticJudge, SyntheticJudgeParams};
use cueaudit::protocols::{run_baseline, TrialSetup};

fn main() -> cueaudit::Result<()> {
    let doc = DocumentRecord::new(
        "d1",
        "The river rose two meters overnight. Flood defenses held in the north.",
        "news",
    )?;
    let s1 = SummaryRecord::new("s1", "d1", "The river rose but held.", SummaryOrigin::Llm)?;
    let s2 = SummaryRecord::new(
        "s2",
        "d1",
        "The river rose two meters overnight.",
        SummaryOrigin::Extractive { method: ExtractiveMethod::Textrank },
    )?;

    let n = 2000;
    println!("{:>5} {:>10} {:>10} {:>8}", "q", "E[LDS]", "LDS", "LAO");
    for q in [0.0, 0.3, 0.7, 1.0] {
        let judge = SyntheticJudge::new(SyntheticJudgeParams::new(0.5, 0.0, q, 0.5, 7)?);
        let mut blind: Vec<Trial> = Vec::new();
        let mut cued: Vec<Trial> = Vec::new();
        for i in 0..n {
            let pair = CandidatePair {
                pair_id: format!("p{i}"),
                doc_id: "d1".into(),
                slot1: "s1".into(),
                slot2: "s2".into(),
                subset: PairSubset::Standard,
            };
            let rp = ResolvedPair { pair: &pair, doc: &doc, slot1: &s1, slot2: &s2 };
            let mk = |cue: CueAssignment, favored: Option<&str>| {
                let mut metadata = BTreeMap::new();
                metadata.insert("protocol".to_string(), "baseline".to_string());
                if let Some(f) = favored {
                    metadata.insert("favored_canonical".to_string(), f.to_string());
                }
                TrialSetup {
                    pair: &rp,
                    judge_id: "synthetic".into(),
                    model_id: "synthetic".into(),
                    cue,
                    perm: Perm::Identity,
                    seed: i as u64,
                    request_metadata: metadata,
                    max_tokens: 256,
                }
            };
            blind.push(run_baseline(&judge, &mk(CueAssignment::blind(), None))?);
            let cue = CueAssignment {
                probe: Probe::T,
                label_slot1: Some("LLM".into()),
                label_slot2: Some("TradML".into()),
                phase: None,
            };
            cued.push(run_baseline(&judge, &mk(cue, Some("12")))?);
        }
        let db = outcome_distribution(blind.iter())?;
        let dt = outcome_distribution(cued.iter())?;
        let decomp = delta_decomposition(&dt, &db, Verdict::Order12)?;
        println!(
            "{q:>5.1} {:>10.4} {:>10.4} {:>8.4}",
            0.5 * q,
            decomp.lds,
            lao(&decomp, DEFAULT_EPSILON)
        );
    }
    Ok(())
}
