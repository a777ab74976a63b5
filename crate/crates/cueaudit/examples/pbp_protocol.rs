//! Walks the three-turn Proof-Before-Preference protocol with a scripted
//! judge: evidence lock with cited spans, criterion scores, and a stated
//! verdict that the computed aggregate overrides.
//!
//! ```bash
//! cargo run -p cueaudit --example pbp_protocol
//! ```

use std::collections::BTreeMap;

use cueaudit::core::{
    CandidatePair, CueAssignment, DocumentRecord, ExtractiveMethod, PairSubset, Perm,
    SummaryOrigin, SummaryRecord,
};
use cueaudit::cueprobe::ResolvedPair;
use cueaudit::judgeclient::ScriptedMockJudge;
use cueaudit::protocols::{run_pbp, CriterionSet, TrialSetup};

fn main() -> cueaudit::Result<()> {
    let doc = DocumentRecord::new(
        "d1",
        "The river rose two meters overnight. Flood defenses held in the north.",
        "news",
    )?;
    let s1 = SummaryRecord::new(
        "s1",
        "d1",
        "The river rose sharply but defenses held.",
        SummaryOrigin::Llm,
    )?;
    let s2 = SummaryRecord::new(
        "s2",
        "d1",
        "The river rose two meters overnight.",
        SummaryOrigin::Extractive { method: ExtractiveMethod::Textrank },
    )?;
    let pair = CandidatePair {
        pair_id: "p1".into(),
        doc_id: "d1".into(),
        slot1: "s1".into(),
        slot2: "s2".into(),
        subset: PairSubset::Standard,
    };
    let rp = ResolvedPair { pair: &pair, doc: &doc, slot1: &s1, slot2: &s2 };
    let crit = CriterionSet::default();

    // Scripted three-turn exchange. Spans must appear verbatim in the
    // document or the cited summary; scores favor summary1, yet the judge
    // states the opposite verdict in Turn 3.
    let span = "The river rose two meters overnight.";
    let mut notes = serde_json::Map::new();
    for slot in ["summary1", "summary2"] {
        let per: serde_json::Map<String, serde_json::Value> = crit
            .criteria
            .iter()
            .map(|c| (c.clone(), serde_json::json!({"note": "grounded", "spans": [span]})))
            .collect();
        notes.insert(slot.into(), serde_json::Value::Object(per));
    }
    let score = |v: u8| -> serde_json::Value {
        serde_json::Value::Object(
            crit.criteria.iter().map(|c| (c.clone(), serde_json::json!(v))).collect(),
        )
    };
    let judge = ScriptedMockJudge::sequential(vec![
        serde_json::json!({ "notes": notes }).to_string(),
        serde_json::json!({ "scores": { "summary1": score(5), "summary2": score(2) } }).to_string(),
        r#"{"verdict":"[2,1]","explanation":"I prefer the second based on my notes."}"#.into(),
    ]);

    let setup = TrialSetup {
        pair: &rp,
        judge_id: "scripted".into(),
        model_id: "scripted".into(),
        cue: CueAssignment::blind(),
        perm: Perm::Identity,
        seed: 1,
        request_metadata: BTreeMap::new(),
        max_tokens: 512,
    };
    let trial = run_pbp(&judge, &setup, &crit)?;

    println!("verdict (canonical): {:?}", trial.verdict_canonical);
    println!("verdict source:      {:?} (computed aggregate overrides the stated rank)", trial.verdict_source);
    println!("lock digest:         {}", trial.metadata["locked_evidence"]["lock_digest"]);
    println!("transcript turns:    {}", trial.transcript.len());
    Ok(())
}
