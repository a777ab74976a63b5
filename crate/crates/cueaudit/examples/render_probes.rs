//! Shows how the same candidate pair is rendered under each cue probe:
//! Blind (no labels), True, Flip, Placebo, and the two-phase Reveal-After.
//!
//! ```bash
//! cargo run -p cueaudit --example render_probes
//! ```

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use cueaudit::core::{
    CandidatePair, DocumentRecord, ExtractiveMethod, PairSubset, Perm, Probe, Protocol,
    SummaryOrigin, SummaryRecord,
};
use cueaudit::cueprobe::{assign_cues, render_prompt, render_reveal_message, LabelScheme, ResolvedPair};

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
    let scheme = LabelScheme::default();
    let mut rng = ChaCha8Rng::seed_from_u64(1);

    for probe in [Probe::B, Probe::T, Probe::F, Probe::P, Probe::R] {
        let cues = assign_cues(&rp, probe, &scheme, &mut rng);
        for cue in &cues {
            let prompt = render_prompt(Protocol::Baseline, &rp, cue, Perm::Identity, "")?;
            println!(
                "==== probe {:?} phase {:?} ====\n{}\n",
                probe, cue.phase, prompt.text
            );
            if cue.phase == Some(cueaudit::core::RevealPhase::RevealPhase) {
                println!(
                    "---- reveal correction ----\n{}\n",
                    render_reveal_message(&rp, cue, Perm::Identity)
                );
            }
        }
    }
    Ok(())
}
