//! Published audit results shipped as replayable fixtures.
//!
//! The count tables and shift decompositions below are transcribed from the
//! reference study (five 7-9B judges, 1000 items per cell). `replay_fixtures`
//! pushes the raw counts through the same analysis pipeline used for live
//! trial logs and diffs the derived metrics against the values reported in
//! the study's prose, flagging any internal inconsistencies it finds.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::analysis::{
    delta_decomposition, edr, lao, neutrality_deviation, pair_reveal_groups, revision_rate,
    DeltaDecomposition, DEFAULT_EPSILON,
};
use crate::core::{
    outcome_distribution, trial_id, CueAssignment, OutcomeDistribution, ParseStatus, Perm, Probe,
    Protocol, RevealPhase, Trial, Verdict,
};
use crate::error::Result;

/// Judge model identifiers, in fixed table order.
pub const JUDGES: [&str; 5] =
    ["gemma-2-9b", "llama-3.1-8b", "mistral-7b", "qwen2.5-7b", "zephyr-7b"];

/// Protocols in fixed table order (columns of every count table).
pub const PROTOCOLS: [Protocol; 3] = [Protocol::Baseline, Protocol::Scot, Protocol::Pbp];

/// Raw outcome counts for one cell: (ties, n12, n21). Totals are 1000.
pub type Counts = (usize, usize, usize);

/// Blind (no-label) decisions, `[judge][protocol]`.
pub const BLIND_COUNTS: [[Counts; 3]; 5] = [
    [(0, 540, 460), (840, 97, 63), (937, 34, 29)],
    [(0, 470, 530), (804, 110, 86), (924, 37, 39)],
    [(0, 550, 450), (710, 206, 84), (824, 93, 88)],
    [(0, 460, 540), (728, 168, 104), (885, 58, 57)],
    [(0, 510, 490), (735, 142, 123), (897, 50, 53)],
];

/// True-label decisions, `[judge][protocol]`.
pub const TRUE_COUNTS: [[Counts; 3]; 5] = [
    [(0, 1000, 0), (215, 680, 105), (925, 39, 36)],
    [(0, 860, 140), (198, 660, 142), (920, 42, 38)],
    [(0, 1000, 0), (76, 920, 4), (825, 90, 85)],
    [(0, 750, 250), (103, 867, 30), (872, 68, 60)],
    [(0, 1000, 0), (128, 805, 67), (895, 51, 54)],
];

/// Flip-label (misleading) decisions, `[judge][protocol]`.
pub const FLIP_COUNTS: [[Counts; 3]; 5] = [
    [(0, 800, 200), (210, 683, 107), (923, 39, 38)],
    [(0, 760, 240), (200, 645, 155), (917, 41, 42)],
    [(0, 1000, 0), (71, 898, 31), (823, 91, 86)],
    [(0, 750, 250), (97, 861, 42), (875, 65, 60)],
    [(0, 1000, 0), (123, 820, 57), (897, 50, 53)],
];

/// Placebo-label decisions, `[judge][protocol]`.
pub const PLACEBO_COUNTS: [[Counts; 3]; 5] = [
    [(0, 960, 40), (240, 540, 220), (928, 39, 33)],
    [(0, 680, 320), (213, 620, 167), (917, 44, 39)],
    [(0, 1000, 0), (95, 880, 25), (816, 97, 92)],
    [(0, 230, 770), (103, 127, 770), (879, 62, 59)],
    [(0, 920, 80), (140, 718, 142), (890, 54, 56)],
];

/// Published Blind-to-True shift decomposition on same-model candidate
/// pairs: (LDS, TS, OLS) per `[judge][protocol]`.
pub const SHIFT_TRUE: [[(f64, f64, f64); 3]; 5] = [
    [(0.509, 0.000, 0.000), (0.583, 0.000, 0.041), (0.005, 0.000, 0.007)],
    [(0.390, 0.000, 0.000), (0.550, 0.000, 0.056), (0.005, 0.000, 0.005)],
    [(0.450, 0.000, 0.000), (0.714, 0.000, 0.000), (0.000, 0.004, 0.000)],
    [(0.290, 0.000, 0.000), (0.699, 0.000, 0.000), (0.010, 0.000, 0.003)],
    [(0.490, 0.000, 0.000), (0.583, 0.000, 0.041), (0.001, 0.000, 0.001)],
];

/// Published Blind-to-Flip shift decomposition, same layout.
pub const SHIFT_FLIP: [[(f64, f64, f64); 3]; 5] = [
    [(0.000, 0.000, 0.240), (0.044, 0.000, 0.142), (0.009, 0.000, 0.005)],
    [(0.000, 0.000, 0.230), (0.081, 0.000, 0.248), (0.003, 0.000, 0.004)],
    [(0.000, 0.000, 0.250), (0.000, 0.000, 0.028), (0.000, 0.006, 0.000)],
    [(0.000, 0.000, 0.250), (0.666, 0.000, 0.000), (0.003, 0.000, 0.007)],
    [(0.000, 0.000, 0.210), (0.019, 0.000, 0.225), (0.000, 0.003, 0.000)],
];

/// Published Blind-to-Placebo shift decomposition, same layout.
pub const SHIFT_PLACEBO: [[(f64, f64, f64); 3]; 5] = [
    [(0.420, 0.000, 0.000), (0.586, 0.000, 0.279), (0.005, 0.000, 0.005)],
    [(0.180, 0.000, 0.084), (0.560, 0.000, 0.302), (0.005, 0.000, 0.004)],
    [(0.490, 0.000, 0.000), (0.688, 0.000, 0.236), (0.000, 0.005, 0.000)],
    [(0.000, 0.270, 0.000), (0.000, 0.000, 0.576), (0.010, 0.000, 0.006)],
    [(0.420, 0.000, 0.000), (0.587, 0.000, 0.326), (0.000, 0.004, 0.000)],
];

/// Head-to-head (LLM slot 1 vs extractive slot 2) counts, `[judge][method]`
/// with methods ordered LexRank, TextRank, KL-Sum, SumBasic: (n12, n21).
pub const HEAD_TO_HEAD_COUNTS: [[(usize, usize); 4]; 5] = [
    [(1000, 0), (1000, 0), (1000, 0), (1000, 0)],
    [(1000, 0), (1000, 0), (1000, 0), (995, 5)],
    [(1000, 0), (1000, 0), (1000, 0), (1000, 0)],
    [(970, 30), (1000, 0), (1000, 0), (1000, 0)],
    [(1000, 0), (1000, 0), (1000, 0), (1000, 0)],
];

/// Method names matching [`HEAD_TO_HEAD_COUNTS`] columns.
pub const HEAD_TO_HEAD_METHODS: [&str; 4] = ["lexrank", "textrank", "klsum", "sumbasic"];

/// Identical-summary sanity check (ties, n12, n21) per judge.
pub const IDENTICAL_COUNTS: [Counts; 5] =
    [(987, 6, 7), (985, 9, 6), (976, 13, 11), (982, 10, 8), (981, 9, 10)];

/// Revision rates after the reveal message, `[protocol][judge]`, percent.
pub const REVISION_PCT: [[u32; 5]; 3] =
    [[85, 78, 76, 83, 82], [80, 80, 76, 82, 80], [22, 5, 8, 18, 15]];

/// Prose-reported Blind neutrality deviation for the Baseline protocol.
/// The first entry (0.018) is internally inconsistent with the count table
/// (540:460 implies 0.080); the replay flags it instead of matching it.
pub const TEXT_ND_BASELINE: [f64; 5] = [0.018, 0.060, 0.100, 0.080, 0.020];

/// Default absolute tolerance for fixture comparisons.
pub const FIXTURE_TOLERANCE: f64 = 0.005;

/// One derived-vs-reported comparison.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FixtureCheck {
    pub table: String,
    pub judge: String,
    pub protocol: Option<Protocol>,
    pub metric: String,
    pub derived: f64,
    pub expected: f64,
    pub tolerance: f64,
    pub matched: bool,
    /// True when a mismatch is a documented source-data inconsistency
    /// rather than a pipeline defect.
    pub known_discrepancy: bool,
}

/// Full replay output: every comparison plus convenience accessors.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct FixtureReport {
    pub checks: Vec<FixtureCheck>,
}

impl FixtureReport {
    pub fn mismatches(&self) -> Vec<&FixtureCheck> {
        self.checks.iter().filter(|c| !c.matched).collect()
    }

    /// Mismatches that are NOT documented source inconsistencies.
    pub fn unexpected_mismatches(&self) -> Vec<&FixtureCheck> {
        self.checks.iter().filter(|c| !c.matched && !c.known_discrepancy).collect()
    }

    /// Known inconsistencies that the replay surfaced, as required.
    pub fn flagged(&self) -> Vec<&FixtureCheck> {
        self.checks.iter().filter(|c| !c.matched && c.known_discrepancy).collect()
    }

    pub fn render_text(&self) -> String {
        let mut out = String::new();
        out.push_str("table\tjudge\tprotocol\tmetric\tderived\texpected\tstatus\n");
        for c in &self.checks {
            let status = if c.matched {
                "match"
            } else if c.known_discrepancy {
                "FLAGGED (known source inconsistency)"
            } else {
                "MISMATCH"
            };
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\t{:.4}\t{:.4}\t{}\n",
                c.table,
                c.judge,
                c.protocol.map(|p| p.as_str()).unwrap_or("-"),
                c.metric,
                c.derived,
                c.expected,
                status
            ));
        }
        out.push_str(&format!(
            "\n{} checks, {} matched, {} flagged, {} unexpected mismatches\n",
            self.checks.len(),
            self.checks.iter().filter(|c| c.matched).count(),
            self.flagged().len(),
            self.unexpected_mismatches().len()
        ));
        out
    }
}

fn check(
    table: &str,
    judge: &str,
    protocol: Option<Protocol>,
    metric: &str,
    derived: f64,
    expected: f64,
    tolerance: f64,
    known_discrepancy: bool,
) -> FixtureCheck {
    FixtureCheck {
        table: table.into(),
        judge: judge.into(),
        protocol,
        metric: metric.into(),
        derived,
        expected,
        tolerance,
        matched: (derived - expected).abs() <= tolerance,
        known_discrepancy,
    }
}

/// Builds a minimal parsed trial carrying one canonical verdict. The replay
/// uses these to drive the same aggregation entry points as live logs.
pub fn synth_trial(
    judge: &str,
    protocol: Protocol,
    probe: Probe,
    phase: Option<RevealPhase>,
    pair_id: &str,
    verdict: Verdict,
) -> Trial {
    let cue = CueAssignment { probe, label_slot1: None, label_slot2: None, phase };
    Trial {
        trial_id: trial_id(pair_id, judge, protocol, probe, phase, Perm::Identity, 0),
        pair_id: pair_id.to_string(),
        judge_id: judge.to_string(),
        protocol,
        cue,
        presentation_perm: Perm::Identity,
        verdict_canonical: Some(verdict),
        explanation: String::new(),
        transcript: Vec::new(),
        seed: 0,
        parse_status: ParseStatus::Ok,
        verdict_source: None,
        metadata: serde_json::Map::new(),
    }
}

/// Expands a count cell into one trial per item, each on its own pair.
pub fn synth_cell(
    judge: &str,
    protocol: Protocol,
    probe: Probe,
    counts: Counts,
    pair_prefix: &str,
) -> Vec<Trial> {
    let (ties, n12, n21) = counts;
    let mut trials = Vec::with_capacity(ties + n12 + n21);
    let mut idx = 0usize;
    for (count, verdict) in
        [(ties, Verdict::Tie), (n12, Verdict::Order12), (n21, Verdict::Order21)]
    {
        for _ in 0..count {
            let pair_id = format!("{pair_prefix}-{idx:04}");
            trials.push(synth_trial(judge, protocol, probe, None, &pair_id, verdict));
            idx += 1;
        }
    }
    trials
}

/// Reveal-group pairs for one revision-rate cell: `changed` of `total`
/// reveal verdicts differ from the flip-phase verdict.
pub fn synth_reveal_groups(
    judge: &str,
    protocol: Protocol,
    changed: usize,
    total: usize,
) -> Vec<Trial> {
    let mut trials = Vec::with_capacity(2 * total);
    for i in 0..total {
        let pair_id = format!("rev-{i:04}");
        let flip = synth_trial(
            judge,
            protocol,
            Probe::R,
            Some(RevealPhase::FlipPhase),
            &pair_id,
            Verdict::Order21,
        );
        let reveal_verdict = if i < changed { Verdict::Order12 } else { Verdict::Order21 };
        let mut reveal = synth_trial(
            judge,
            protocol,
            Probe::R,
            Some(RevealPhase::RevealPhase),
            &pair_id,
            reveal_verdict,
        );
        reveal
            .metadata
            .insert("reveal_group".into(), serde_json::Value::String(flip.trial_id.clone()));
        trials.push(flip);
        trials.push(reveal);
    }
    trials
}

fn cell_distribution(counts: Counts) -> OutcomeDistribution {
    let (ties, n12, n21) = counts;
    OutcomeDistribution::from_counts(n12, n21, ties).expect("fixture cells are non-empty")
}

/// Replays every shipped table through the analysis pipeline and diffs the
/// derived metrics against the prose-reported values.
pub fn replay_fixtures() -> Result<FixtureReport> {
    let mut report = FixtureReport::default();
    let eps = DEFAULT_EPSILON;

    for (j, judge) in JUDGES.iter().enumerate() {
        // Blind neutrality deviation (Baseline) vs the prose values. The
        // first judge's prose value is a known source inconsistency.
        let counts = BLIND_COUNTS[j][0];
        let trials = synth_cell(judge, Protocol::Baseline, Probe::B, counts, "nd");
        let dist = outcome_distribution(trials.iter())?;
        let nd = neutrality_deviation(&dist).unwrap_or(f64::NAN);
        report.checks.push(check(
            "blind-counts",
            judge,
            Some(Protocol::Baseline),
            "nd_b",
            nd,
            TEXT_ND_BASELINE[j],
            FIXTURE_TOLERANCE,
            j == 0,
        ));

        // Blind tie share per protocol, treated as equality detection over
        // the synthesized pairs.
        for (p, protocol) in PROTOCOLS.iter().enumerate() {
            let counts = BLIND_COUNTS[j][p];
            let trials = synth_cell(judge, *protocol, Probe::B, counts, "edr");
            let refs: Vec<&Trial> = trials.iter().collect();
            let eq_set: HashSet<String> = refs.iter().map(|t| t.pair_id.clone()).collect();
            let derived = edr(&refs, &eq_set).unwrap_or(f64::NAN);
            let total = (counts.0 + counts.1 + counts.2) as f64;
            report.checks.push(check(
                "blind-counts",
                judge,
                Some(*protocol),
                "edr",
                derived,
                counts.0 as f64 / total,
                FIXTURE_TOLERANCE,
                false,
            ));
        }

        // Identical-summary tie fraction.
        let counts = IDENTICAL_COUNTS[j];
        let trials = synth_cell(judge, Protocol::Baseline, Probe::B, counts, "ident");
        let refs: Vec<&Trial> = trials.iter().collect();
        let eq_set: HashSet<String> = refs.iter().map(|t| t.pair_id.clone()).collect();
        let derived = edr(&refs, &eq_set).unwrap_or(f64::NAN);
        report.checks.push(check(
            "identical",
            judge,
            None,
            "edr",
            derived,
            counts.0 as f64 / 1000.0,
            FIXTURE_TOLERANCE,
            false,
        ));

        // Label-anchored outcome share from the published decompositions:
        // the True-label Baseline should be ~1 and the Flip-label Baseline
        // ~0 for every judge.
        for (table, shifts, expected) in [
            ("shift-true", &SHIFT_TRUE, 1.0),
            ("shift-flip", &SHIFT_FLIP, 0.0),
        ] {
            let (lds, ts, ols) = shifts[j][0];
            let decomp = DeltaDecomposition {
                delta_fav: lds,
                delta_opp: ols,
                delta_tie: ts,
                lds,
                ols,
                ts,
            };
            report.checks.push(check(
                table,
                judge,
                Some(Protocol::Baseline),
                "lao",
                lao(&decomp, eps),
                expected,
                1e-3,
                false,
            ));
        }

        // Cross-check: the same LAO limits also fall out of the raw count
        // tables (Blind vs True favors [1,2]; Blind vs Flip favors [2,1]).
        let blind = cell_distribution(BLIND_COUNTS[j][0]);
        let true_d = cell_distribution(TRUE_COUNTS[j][0]);
        let flip_d = cell_distribution(FLIP_COUNTS[j][0]);
        let d_true = delta_decomposition(&true_d, &blind, Verdict::Order12)?;
        report.checks.push(check(
            "true-counts",
            judge,
            Some(Protocol::Baseline),
            "lao",
            lao(&d_true, eps),
            1.0,
            1e-3,
            false,
        ));
        let d_flip = delta_decomposition(&flip_d, &blind, Verdict::Order21)?;
        report.checks.push(check(
            "flip-counts",
            judge,
            Some(Protocol::Baseline),
            "lao",
            lao(&d_flip, eps),
            0.0,
            1e-3,
            false,
        ));

        // Head-to-head win shares for the LLM side.
        for (m, method) in HEAD_TO_HEAD_METHODS.iter().enumerate() {
            let (n12, n21) = HEAD_TO_HEAD_COUNTS[j][m];
            let trials = synth_cell(judge, Protocol::Baseline, Probe::B, (0, n12, n21), "h2h");
            let dist = outcome_distribution(trials.iter())?;
            report.checks.push(check(
                "head-to-head",
                judge,
                None,
                &format!("p12[{method}]"),
                dist.p12,
                n12 as f64 / 1000.0,
                FIXTURE_TOLERANCE,
                false,
            ));
        }

        // Revision rates from the reveal-after probe.
        for (p, protocol) in PROTOCOLS.iter().enumerate() {
            let pct = REVISION_PCT[p][j] as usize;
            let trials = synth_reveal_groups(judge, *protocol, pct, 100);
            let refs: Vec<&Trial> = trials.iter().collect();
            let groups = pair_reveal_groups(&refs)?;
            let derived = revision_rate(&groups).unwrap_or(f64::NAN);
            report.checks.push(check(
                "revision",
                judge,
                Some(*protocol),
                "revision_rate",
                derived,
                pct as f64 / 100.0,
                FIXTURE_TOLERANCE,
                false,
            ));
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn find<'a>(
        r: &'a FixtureReport,
        table: &str,
        judge: &str,
        protocol: Option<Protocol>,
        metric: &str,
    ) -> &'a FixtureCheck {
        r.checks
            .iter()
            .find(|c| {
                c.table == table && c.judge == judge && c.protocol == protocol && c.metric == metric
            })
            .unwrap_or_else(|| panic!("missing check {table}/{judge}/{metric}"))
    }

    #[test]
    fn replay_has_no_unexpected_mismatches() {
        let r = replay_fixtures().unwrap();
        let bad: Vec<String> = r
            .unexpected_mismatches()
            .iter()
            .map(|c| format!("{}/{}/{} {:.4} vs {:.4}", c.table, c.judge, c.metric, c.derived, c.expected))
            .collect();
        assert!(bad.is_empty(), "unexpected mismatches: {bad:?}");
    }

    #[test]
    fn neutrality_deviation_text_values_match_for_four_judges() {
        let r = replay_fixtures().unwrap();
        for (judge, expected) in
            [("llama-3.1-8b", 0.060), ("mistral-7b", 0.100), ("qwen2.5-7b", 0.080), ("zephyr-7b", 0.020)]
        {
            let c = find(&r, "blind-counts", judge, Some(Protocol::Baseline), "nd_b");
            assert!(c.matched, "{judge} nd mismatch: {} vs {}", c.derived, expected);
            assert!((c.derived - expected).abs() <= FIXTURE_TOLERANCE);
        }
    }

    #[test]
    fn first_judge_neutrality_inconsistency_is_flagged_not_matched() {
        let r = replay_fixtures().unwrap();
        let c = find(&r, "blind-counts", JUDGES[0], Some(Protocol::Baseline), "nd_b");
        assert!(!c.matched, "counts imply 0.08, prose says 0.018; must not match");
        assert!(c.known_discrepancy);
        assert!((c.derived - 0.08).abs() < 1e-9);
        assert_eq!(r.flagged().len(), 1);
    }

    #[test]
    fn equality_detection_from_blind_counts() {
        let r = replay_fixtures().unwrap();
        let c = find(&r, "blind-counts", JUDGES[0], Some(Protocol::Pbp), "edr");
        assert!((c.derived - 0.937).abs() < 1e-9);
        let ident = find(&r, "identical", JUDGES[0], None, "edr");
        assert!((ident.derived - 0.987).abs() < 1e-9);
    }

    #[test]
    fn anchored_share_limits_from_published_shifts() {
        let r = replay_fixtures().unwrap();
        for judge in JUDGES {
            let t = find(&r, "shift-true", judge, Some(Protocol::Baseline), "lao");
            assert!(t.derived > 0.999, "{judge}: {}", t.derived);
            let f = find(&r, "shift-flip", judge, Some(Protocol::Baseline), "lao");
            assert!(f.derived < 1e-3, "{judge}: {}", f.derived);
        }
    }

    #[test]
    fn revision_rates_replay_exactly() {
        let r = replay_fixtures().unwrap();
        let expect_baseline = [0.85, 0.78, 0.76, 0.83, 0.82];
        let expect_pbp = [0.22, 0.05, 0.08, 0.18, 0.15];
        for (j, judge) in JUDGES.iter().enumerate() {
            let b = find(&r, "revision", judge, Some(Protocol::Baseline), "revision_rate");
            assert!((b.derived - expect_baseline[j]).abs() < 1e-9);
            let p = find(&r, "revision", judge, Some(Protocol::Pbp), "revision_rate");
            assert!((p.derived - expect_pbp[j]).abs() < 1e-9);
        }
    }

    #[test]
    fn count_tables_total_one_thousand_per_cell() {
        // Two source cells are off-total (the third judge's blind and
        // placebo cells under the third protocol each sum to 1005); the
        // transcription stays faithful to the source.
        for (name, table) in [
            ("blind", &BLIND_COUNTS),
            ("true", &TRUE_COUNTS),
            ("flip", &FLIP_COUNTS),
            ("placebo", &PLACEBO_COUNTS),
        ] {
            for (j, row) in table.iter().enumerate() {
                for (p, (t, a, b)) in row.iter().enumerate() {
                    let off_total = j == 2 && p == 2 && (name == "blind" || name == "placebo");
                    let expected = if off_total { 1005 } else { 1000 };
                    assert_eq!(t + a + b, expected, "{name} cell [{j}][{p}]");
                }
            }
        }
        for (t, a, b) in IDENTICAL_COUNTS {
            assert_eq!(t + a + b, 1000);
        }
        for row in HEAD_TO_HEAD_COUNTS.iter() {
            for (a, b) in row.iter() {
                assert_eq!(a + b, 1000);
            }
        }
    }
}
