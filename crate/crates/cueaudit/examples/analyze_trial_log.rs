//! Computes the tie-aware metric suite and a bootstrap confidence interval
//! from an in-memory trial log.
//!
//! ```bash
//! cargo run -p cueaudit --example analyze_trial_log
//! ```

use std::collections::{BTreeMap, HashSet};

use cueaudit::analysis::{bootstrap_ci, metric_report, AnalysisConfig, HashedBowProvider};
use cueaudit::core::{ParseStatus, Probe, Protocol, Trial, Verdict};
use cueaudit::fixtures::synth_trial;

fn main() -> cueaudit::Result<()> {
    // A small synthetic cell: blind is near-balanced; the True probe pulls
    // mass toward [1,2].
    let mut trials: Vec<Trial> = Vec::new();
    for i in 0..60 {
        let pair = format!("pair-{i:02}");
        let blind_v = match i % 3 {
            0 => Verdict::Order12,
            1 => Verdict::Order21,
            _ => Verdict::Tie,
        };
        trials.push(synth_trial("demo", Protocol::Baseline, Probe::B, None, &pair, blind_v));
        let cued_v = if i % 2 == 0 { Verdict::Order12 } else { blind_v };
        trials.push(synth_trial("demo", Protocol::Baseline, Probe::T, None, &pair, cued_v));
    }

    let mut by_probe: BTreeMap<Probe, Vec<&Trial>> = BTreeMap::new();
    for t in &trials {
        by_probe.entry(t.cue.probe).or_default().push(t);
    }

    let provider = HashedBowProvider::default();
    let report = metric_report(&by_probe, &HashSet::new(), &AnalysisConfig::default(), Some(&provider))?;
    println!("{}", serde_json::to_string_pretty(&report)?);

    // Bootstrap the blind tie fraction at the pair level.
    let tie_fraction = |ts: &[&Trial]| {
        let blind: Vec<&&Trial> =
            ts.iter().filter(|t| t.cue.probe == Probe::B && t.parse_status != ParseStatus::Failed).collect();
        (!blind.is_empty()).then(|| {
            blind.iter().filter(|t| t.verdict_canonical == Some(Verdict::Tie)).count() as f64
                / blind.len() as f64
        })
    };
    if let Some((point, lo, hi)) = bootstrap_ci(tie_fraction, &trials, 500, 7) {
        println!("blind tie fraction {point:.3} [{lo:.3}, {hi:.3}]");
    }
    Ok(())
}
