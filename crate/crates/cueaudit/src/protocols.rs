//! The three judging protocols as explicit state machines: Baseline, SCoT,
//! and Proof-Before-Preference, plus strict output parsing with a documented
//! repair grammar, evidence-lock validation, and the Likert rubric scorer.
//!
//! Repair grammar, applied in order: (1) the whole trimmed reply as JSON,
//! (2) the first balanced JSON object in the reply, (3) the first verdict
//! literal found in the raw text. Anything else is a failed parse.
//! Transcripts record raw model output per turn, before any repair.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::core::{
    canonicalize_verdict, hex_lower, trial_id, CueAssignment, DocumentRecord, ParseStatus, Perm,
    Protocol, SummaryRecord, TranscriptTurn, Trial, Verdict, VerdictSource,
};
use crate::cueprobe::{
    display_view, fill_template, render_prompt, render_reveal_message, RenderedPrompt,
    ResolvedPair, PBP_RANK_TEMPLATE, PBP_SCORE_TEMPLATE, RUBRIC_TEMPLATE, TEMPLATE_VERSION,
};
use crate::error::{AuditError, Result};
use crate::judgeclient::{CompletionRequest, JudgeBackend, Message};

pub const DISPLAY_SLOTS: [&str; 2] = ["summary1", "summary2"];

/// Ordered criteria with nonnegative weights summing to 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionSet {
    pub criteria: Vec<String>,
    pub weights: Vec<f64>,
}

impl Default for CriterionSet {
    fn default() -> Self {
        Self {
            criteria: vec![
                "accuracy".into(),
                "completeness".into(),
                "conciseness".into(),
                "fluency".into(),
            ],
            weights: vec![0.25; 4],
        }
    }
}

impl CriterionSet {
    pub fn validate(&self) -> Result<()> {
        if self.criteria.len() != self.weights.len() || self.criteria.is_empty() {
            return Err(AuditError::Config("criteria and weights must align".into()));
        }
        if self.weights.iter().any(|w| *w < 0.0) {
            return Err(AuditError::Config("criterion weights must be nonnegative".into()));
        }
        let sum: f64 = self.weights.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(AuditError::Config(format!("criterion weights sum to {sum}, expected 1")));
        }
        Ok(())
    }

    pub fn listing(&self) -> String {
        self.criteria.join(", ")
    }

    fn weights_listing(&self) -> String {
        self.criteria
            .iter()
            .zip(&self.weights)
            .map(|(c, w)| format!("{c}={w}"))
            .collect::<Vec<_>>()
            .join(", ")
    }
}

// ---------------------------------------------------------------------------
// Output parsing and repair
// ---------------------------------------------------------------------------

fn first_balanced_json(text: &str) -> Option<&str> {
    let bytes = text.as_bytes();
    let start = text.find('{')?;
    let mut depth = 0usize;
    let mut in_string = false;
    let mut escaped = false;
    for (i, &b) in bytes.iter().enumerate().skip(start) {
        if in_string {
            if escaped {
                escaped = false;
            } else if b == b'\\' {
                escaped = true;
            } else if b == b'"' {
                in_string = false;
            }
            continue;
        }
        match b {
            b'"' => in_string = true,
            b'{' => depth += 1,
            b'}' => {
                depth -= 1;
                if depth == 0 {
                    return Some(&text[start..=i]);
                }
            }
            _ => {}
        }
    }
    None
}

/// Extracts a JSON object from a model reply per the repair grammar.
/// Returns the object and whether repair was needed.
pub fn extract_json(reply: &str) -> Option<(Value, ParseStatus)> {
    let trimmed = reply.trim();
    if let Ok(v) = serde_json::from_str::<Value>(trimmed) {
        if v.is_object() {
            return Some((v, ParseStatus::Ok));
        }
    }
    if let Some(block) = first_balanced_json(trimmed) {
        if let Ok(v) = serde_json::from_str::<Value>(block) {
            if v.is_object() {
                return Some((v, ParseStatus::Repaired));
            }
        }
    }
    None
}

fn verdict_from_str(s: &str) -> Option<Verdict> {
    match s.trim() {
        "[1,2]" => Some(Verdict::Order12),
        "[2,1]" => Some(Verdict::Order21),
        "Tie" | "tie" | "No Selection" => Some(Verdict::Tie),
        _ => None,
    }
}

/// Parses a verdict + explanation reply, repairing where possible.
pub fn parse_judgment(reply: &str) -> Option<(Verdict, String, ParseStatus)> {
    if let Some((obj, status)) = extract_json(reply) {
        if let Some(v) = obj.get("verdict").and_then(Value::as_str).and_then(verdict_from_str) {
            let explanation = obj
                .get("explanation")
                .and_then(Value::as_str)
                .unwrap_or("")
                .to_string();
            return Some((v, explanation, status));
        }
    }
    // last-resort salvage: the first verdict literal in the raw text
    let literals: [(&str, Verdict); 3] = [
        ("[1,2]", Verdict::Order12),
        ("[2,1]", Verdict::Order21),
        ("Tie", Verdict::Tie),
    ];
    literals
        .iter()
        .filter_map(|(lit, v)| reply.find(lit).map(|pos| (pos, *v)))
        .min_by_key(|(pos, _)| *pos)
        .map(|(_, v)| (v, String::new(), ParseStatus::Repaired))
}

/// Whitespace/case normalization used for span matching.
pub fn normalize_text(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase()
}

// ---------------------------------------------------------------------------
// Evidence lock
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvidenceNote {
    pub note: String,
    pub spans: Vec<String>,
}

/// PBP Turn-1 criterion-wise notes with cited spans. Immutable once the
/// digest is computed; any later mutation is surfaced by `check_integrity`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LockedEvidence {
    /// (display slot, criterion) -> note. Both cells must be present for
    /// every criterion.
    pub notes: BTreeMap<String, BTreeMap<String, EvidenceNote>>,
    pub lock_digest: String,
}

impl LockedEvidence {
    pub fn lock(notes: BTreeMap<String, BTreeMap<String, EvidenceNote>>) -> Self {
        let digest = Self::digest_of(&notes);
        Self { notes, lock_digest: digest }
    }

    fn digest_of(notes: &BTreeMap<String, BTreeMap<String, EvidenceNote>>) -> String {
        let serialized = serde_json::to_string(notes).expect("notes serialize");
        let mut h = Sha256::new();
        h.update(serialized.as_bytes());
        hex_lower(&h.finalize()[..16])
    }

    /// Fails if the notes were mutated after locking.
    pub fn check_integrity(&self) -> Result<()> {
        if Self::digest_of(&self.notes) != self.lock_digest {
            return Err(AuditError::LockViolation("notes were mutated after lock".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LockValidationReport {
    pub ok: bool,
    /// (slot, criterion, span) triples that could not be located.
    pub offending: Vec<(String, String, String)>,
    /// (slot, criterion) cells missing entirely.
    pub missing_cells: Vec<(String, String)>,
}

/// Locates every cited span by normalized substring search in the source
/// document or the summary the note belongs to.
pub fn validate_lock(
    notes: &BTreeMap<String, BTreeMap<String, EvidenceNote>>,
    crit: &CriterionSet,
    doc: &DocumentRecord,
    display_sum1: &str,
    display_sum2: &str,
) -> LockValidationReport {
    let doc_norm = normalize_text(&doc.text);
    let sums = [normalize_text(display_sum1), normalize_text(display_sum2)];
    let mut offending = Vec::new();
    let mut missing_cells = Vec::new();
    for (i, slot) in DISPLAY_SLOTS.iter().enumerate() {
        for criterion in &crit.criteria {
            match notes.get(*slot).and_then(|m| m.get(criterion)) {
                None => missing_cells.push((slot.to_string(), criterion.clone())),
                Some(note) => {
                    for span in &note.spans {
                        let norm = normalize_text(span);
                        if norm.is_empty()
                            || (!doc_norm.contains(&norm) && !sums[i].contains(&norm))
                        {
                            offending.push((slot.to_string(), criterion.clone(), span.clone()));
                        }
                    }
                }
            }
        }
    }
    LockValidationReport { ok: offending.is_empty() && missing_cells.is_empty(), offending, missing_cells }
}

// ---------------------------------------------------------------------------
// Criterion scores
// ---------------------------------------------------------------------------

/// (display slot, criterion) -> integer score in [0,5].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionScores {
    pub scores: BTreeMap<String, BTreeMap<String, u8>>,
}

impl CriterionScores {
    pub fn validate(&self, crit: &CriterionSet) -> Result<()> {
        for slot in DISPLAY_SLOTS {
            let per_slot = self
                .scores
                .get(slot)
                .ok_or_else(|| AuditError::Parse(format!("missing scores for {slot}")))?;
            for c in &crit.criteria {
                let v = per_slot
                    .get(c)
                    .ok_or_else(|| AuditError::Parse(format!("missing score {slot}/{c}")))?;
                if *v > 5 {
                    return Err(AuditError::Parse(format!("score {slot}/{c}={v} out of range 0-5")));
                }
            }
        }
        Ok(())
    }

    pub fn weighted_sum(&self, slot: &str, crit: &CriterionSet) -> f64 {
        let per_slot = &self.scores[slot];
        crit.criteria
            .iter()
            .zip(&crit.weights)
            .map(|(c, w)| w * f64::from(per_slot[c]))
            .sum()
    }
}

/// Weighted sums per slot; strict inequality orders, |diff| < 1e-9 ties.
/// The verdict is in the same slot space as the scores.
pub fn aggregate_scores(scores: &CriterionScores, crit: &CriterionSet) -> Verdict {
    let s1 = scores.weighted_sum(DISPLAY_SLOTS[0], crit);
    let s2 = scores.weighted_sum(DISPLAY_SLOTS[1], crit);
    if (s1 - s2).abs() < 1e-9 {
        Verdict::Tie
    } else if s1 > s2 {
        Verdict::Order12
    } else {
        Verdict::Order21
    }
}

// ---------------------------------------------------------------------------
// Trial construction
// ---------------------------------------------------------------------------

/// Everything a protocol run needs besides the judge back-end.
pub struct TrialSetup<'a> {
    pub pair: &'a ResolvedPair<'a>,
    pub judge_id: String,
    pub model_id: String,
    pub cue: CueAssignment,
    pub perm: Perm,
    pub seed: u64,
    /// Extra metadata forwarded on every completion request (used by the
    /// synthetic judge side-channel).
    pub request_metadata: BTreeMap<String, String>,
    pub max_tokens: u32,
}

impl<'a> TrialSetup<'a> {
    fn request(&self, messages: Vec<Message>) -> CompletionRequest {
        let mut metadata = self.request_metadata.clone();
        metadata.insert("pair_id".into(), self.pair.pair.pair_id.clone());
        metadata.insert("judge_id".into(), self.judge_id.clone());
        metadata.insert("probe".into(), self.cue.probe.as_str().into());
        metadata.insert("perm".into(), self.perm.as_str().into());
        if let Some(phase) = self.cue.phase {
            metadata.insert("phase".into(), phase.as_str().into());
        }
        CompletionRequest {
            messages,
            temperature: 0.0, // judging contract: deterministic decoding
            max_tokens: self.max_tokens,
            model_id: self.model_id.clone(),
            seed_hint: Some(self.seed),
            metadata,
        }
    }

    fn base_trial(&self, protocol: Protocol, transcript: Vec<TranscriptTurn>) -> Trial {
        let mut metadata = serde_json::Map::new();
        metadata.insert("template_version".into(), Value::String(TEMPLATE_VERSION.into()));
        Trial {
            trial_id: trial_id(
                &self.pair.pair.pair_id,
                &self.judge_id,
                protocol,
                self.cue.probe,
                self.cue.phase,
                self.perm,
                self.seed,
            ),
            pair_id: self.pair.pair.pair_id.clone(),
            judge_id: self.judge_id.clone(),
            protocol,
            cue: self.cue.clone(),
            presentation_perm: self.perm,
            verdict_canonical: None,
            explanation: String::new(),
            transcript,
            seed: self.seed,
            parse_status: ParseStatus::Failed,
            verdict_source: None,
            metadata,
        }
    }
}

fn single_turn_trial(
    backend: &dyn JudgeBackend,
    setup: &TrialSetup<'_>,
    protocol: Protocol,
    prompt: &RenderedPrompt,
) -> Result<Trial> {
    let request = setup.request(vec![Message::user(prompt.text.clone())]);
    let reply = backend.complete(&request)?;
    let transcript = vec![
        TranscriptTurn::new("user", prompt.text.clone()),
        TranscriptTurn::new("assistant", reply.clone()),
    ];
    let mut trial = setup.base_trial(protocol, transcript);
    if let Some((display_verdict, explanation, status)) = parse_judgment(&reply) {
        trial.verdict_canonical = Some(canonicalize_verdict(display_verdict, setup.perm));
        trial.explanation = explanation;
        trial.parse_status = status;
        trial.verdict_source = Some(VerdictSource::Stated);
    }
    Ok(trial)
}

/// Baseline: direct verdict with a brief post-hoc explanation.
pub fn run_baseline(backend: &dyn JudgeBackend, setup: &TrialSetup<'_>) -> Result<Trial> {
    let prompt = render_prompt(Protocol::Baseline, setup.pair, &setup.cue, setup.perm, "")?;
    single_turn_trial(backend, setup, Protocol::Baseline, &prompt)
}

/// SCoT: criterion-guided single-turn judging. The rendered prompt is
/// audited to contain every criterion name; a missing criterion is a
/// render-time error, never a silent run.
pub fn run_scot(
    backend: &dyn JudgeBackend,
    setup: &TrialSetup<'_>,
    crit: &CriterionSet,
) -> Result<Trial> {
    crit.validate()?;
    let prompt = render_prompt(Protocol::Scot, setup.pair, &setup.cue, setup.perm, &crit.listing())?;
    for c in &crit.criteria {
        if !prompt.text.contains(c.as_str()) {
            return Err(AuditError::Config(format!("criterion {c} missing from rendered prompt")));
        }
    }
    single_turn_trial(backend, setup, Protocol::Scot, &prompt)
}

fn parse_lock_notes(reply: &str) -> Option<BTreeMap<String, BTreeMap<String, EvidenceNote>>> {
    let (obj, _) = extract_json(reply)?;
    serde_json::from_value(obj.get("notes")?.clone()).ok()
}

fn parse_scores(reply: &str) -> Option<CriterionScores> {
    let (obj, _) = extract_json(reply)?;
    let scores = serde_json::from_value(obj.get("scores")?.clone()).ok()?;
    Some(CriterionScores { scores })
}

/// Proof-Before-Preference: lock criterion-wise evidence with cited spans,
/// score strictly from the lock, aggregate to rank.
///
/// The final verdict is always the computed aggregate of the locked scores;
/// when the judge's stated Turn-3 verdict disagrees, the computed aggregate
/// wins and the trial is marked `verdict_source = computed`.
pub fn run_pbp(
    backend: &dyn JudgeBackend,
    setup: &TrialSetup<'_>,
    crit: &CriterionSet,
) -> Result<Trial> {
    crit.validate()?;
    let lock_prompt =
        render_prompt(Protocol::Pbp, setup.pair, &setup.cue, setup.perm, &crit.listing())?;
    let view = display_view(setup.pair, &setup.cue, setup.perm);

    let mut messages = vec![Message::user(lock_prompt.text.clone())];
    let mut transcript = vec![TranscriptTurn::new("user", lock_prompt.text.clone())];

    // Turn 1: evidence lock, with one re-ask on span validation failure
    let mut locked: Option<LockedEvidence> = None;
    for attempt in 0..2 {
        let reply = backend.complete(&setup.request(messages.clone()))?;
        transcript.push(TranscriptTurn::new("assistant", reply.clone()));
        messages.push(Message::assistant(reply.clone()));
        let Some(notes) = parse_lock_notes(&reply) else {
            if attempt == 0 {
                let reask = "Your notes could not be parsed. Reply with the exact JSON shape requested, quoting spans verbatim.";
                transcript.push(TranscriptTurn::new("user", reask));
                messages.push(Message::user(reask));
                continue;
            }
            return Ok(setup.base_trial(Protocol::Pbp, transcript));
        };
        let report = validate_lock(&notes, crit, setup.pair.doc, view.sum1, view.sum2);
        if report.ok {
            locked = Some(LockedEvidence::lock(notes));
            break;
        }
        if attempt == 0 {
            let mut complaint = String::from(
                "Some cited spans were not found verbatim in the document or summaries. Fix these cells and resend the full JSON: ",
            );
            for (slot, criterion, span) in report.offending.iter().take(5) {
                complaint.push_str(&format!("[{slot}/{criterion}: {span:?}] "));
            }
            for (slot, criterion) in report.missing_cells.iter().take(5) {
                complaint.push_str(&format!("[missing {slot}/{criterion}] "));
            }
            transcript.push(TranscriptTurn::new("user", complaint.clone()));
            messages.push(Message::user(complaint));
        }
    }
    let Some(locked) = locked else {
        return Ok(setup.base_trial(Protocol::Pbp, transcript));
    };
    locked.check_integrity()?;

    // Turn 2: scores from the lock only
    let score_prompt = PBP_SCORE_TEMPLATE.to_string();
    transcript.push(TranscriptTurn::new("user", score_prompt.clone()));
    messages.push(Message::user(score_prompt));
    let score_reply = backend.complete(&setup.request(messages.clone()))?;
    transcript.push(TranscriptTurn::new("assistant", score_reply.clone()));
    messages.push(Message::assistant(score_reply.clone()));
    let scores = match parse_scores(&score_reply) {
        Some(s) if s.validate(crit).is_ok() => s,
        _ => return Ok(setup.base_trial(Protocol::Pbp, transcript)),
    };

    // Turn 3: stated verdict, overridden by the computed aggregate
    let rank_prompt = fill_template(PBP_RANK_TEMPLATE, &[("WEIGHTS", &crit.weights_listing())]);
    transcript.push(TranscriptTurn::new("user", rank_prompt.clone()));
    messages.push(Message::user(rank_prompt));
    let rank_reply = backend.complete(&setup.request(messages.clone()))?;
    transcript.push(TranscriptTurn::new("assistant", rank_reply.clone()));

    let computed_display = aggregate_scores(&scores, crit);
    let stated = parse_judgment(&rank_reply);
    let (explanation, parse_status, source, final_display) = match stated {
        Some((stated_display, explanation, status)) => {
            if stated_display == computed_display {
                (explanation, status, VerdictSource::Stated, computed_display)
            } else {
                (explanation, status, VerdictSource::Computed, computed_display)
            }
        }
        // verdict is a deterministic function of the locked scores, so a
        // garbled Turn-3 reply still yields a computed verdict
        None => (String::new(), ParseStatus::Repaired, VerdictSource::Computed, computed_display),
    };

    // audit: the justification must reference the locked evidence
    let expl_norm = normalize_text(&explanation);
    let references_lock = !explanation.is_empty()
        && (expl_norm.contains("note")
            || expl_norm.contains("locked")
            || locked.notes.values().flat_map(|m| m.values()).any(|n| {
                n.spans.iter().any(|s| {
                    let norm = normalize_text(s);
                    !norm.is_empty() && expl_norm.contains(&norm)
                })
            }));

    let mut trial = setup.base_trial(Protocol::Pbp, transcript);
    trial.verdict_canonical = Some(canonicalize_verdict(final_display, setup.perm));
    trial.explanation = explanation;
    trial.parse_status = parse_status;
    trial.verdict_source = Some(source);
    trial.metadata.insert("locked_evidence".into(), serde_json::to_value(&locked)?);
    trial.metadata.insert("criterion_scores".into(), serde_json::to_value(&scores)?);
    trial
        .metadata
        .insert("explanation_references_lock".into(), Value::Bool(references_lock));
    Ok(trial)
}

/// Runs the reveal phase of a Reveal-After sequence: the judge sees its own
/// flip-phase transcript plus a correction naming the true labels.
pub fn run_reveal(
    backend: &dyn JudgeBackend,
    setup: &TrialSetup<'_>,
    flip_trial: &Trial,
) -> Result<Trial> {
    let reveal_msg = render_reveal_message(setup.pair, &setup.cue, setup.perm);
    let mut messages: Vec<Message> = flip_trial
        .transcript
        .iter()
        .map(|t| Message { role: t.role.clone(), content: t.content.clone() })
        .collect();
    messages.push(Message::user(reveal_msg.clone()));

    let reply = backend.complete(&setup.request(messages))?;
    let mut transcript = flip_trial.transcript.clone();
    transcript.push(TranscriptTurn::new("user", reveal_msg));
    transcript.push(TranscriptTurn::new("assistant", reply.clone()));

    let mut trial = setup.base_trial(flip_trial.protocol, transcript);
    trial
        .metadata
        .insert("reveal_group".into(), Value::String(flip_trial.trial_id.clone()));
    if let Some((display_verdict, explanation, status)) = parse_judgment(&reply) {
        trial.verdict_canonical = Some(canonicalize_verdict(display_verdict, setup.perm));
        trial.explanation = explanation;
        trial.parse_status = status;
        trial.verdict_source = Some(VerdictSource::Stated);
    }
    Ok(trial)
}

/// Appendix Likert rubric: three 1-5 scores per candidate summary.
pub fn rubric_score(
    backend: &dyn JudgeBackend,
    model_id: &str,
    doc: &DocumentRecord,
    summary: &SummaryRecord,
    max_tokens: u32,
) -> Result<BTreeMap<String, u8>> {
    let prompt = fill_template(
        RUBRIC_TEMPLATE,
        &[("DOC_TEXT", &doc.text), ("SUMMARY_TEXT", &summary.text)],
    );
    let reply = backend.complete(&CompletionRequest::judging(model_id, prompt, max_tokens))?;
    let (obj, _) =
        extract_json(&reply).ok_or_else(|| AuditError::Parse("rubric reply is not JSON".into()))?;
    let mut out = BTreeMap::new();
    for category in ["factual_accuracy", "completeness", "coherence_fluency"] {
        let v = obj
            .get(category)
            .and_then(Value::as_u64)
            .ok_or_else(|| AuditError::Parse(format!("rubric missing category {category}")))?;
        if !(1..=5).contains(&v) {
            return Err(AuditError::Parse(format!("out of rubric range: {category}={v}")));
        }
        out.insert(category.to_string(), v as u8);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::core::{CandidatePair, PairSubset, SummaryOrigin};
    use crate::judgeclient::ScriptedMockJudge;

    fn fixture() -> (DocumentRecord, SummaryRecord, SummaryRecord, CandidatePair) {
        let doc = DocumentRecord::new(
            "d1",
            "The river rose two meters overnight. Flood defenses held in the north.",
            "news",
        )
        .unwrap();
        let s1 = SummaryRecord::new(
            "s1",
            "d1",
            "The river rose sharply but defenses held.",
            SummaryOrigin::Llm,
        )
        .unwrap();
        let s2 = SummaryRecord::new(
            "s2",
            "d1",
            "The river rose two meters overnight.",
            SummaryOrigin::Extractive { method: crate::core::ExtractiveMethod::Textrank },
        )
        .unwrap();
        let pair = CandidatePair {
            pair_id: "p1".into(),
            doc_id: "d1".into(),
            slot1: "s1".into(),
            slot2: "s2".into(),
            subset: PairSubset::Standard,
        };
        (doc, s1, s2, pair)
    }

    fn setup<'a>(rp: &'a ResolvedPair<'a>, cue: CueAssignment, perm: Perm) -> TrialSetup<'a> {
        TrialSetup {
            pair: rp,
            judge_id: "mock".into(),
            model_id: "mock".into(),
            cue,
            perm,
            seed: 1,
            request_metadata: BTreeMap::new(),
            max_tokens: 512,
        }
    }

    #[test]
    fn baseline_parses_wellformed_json() {
        let (doc, s1, s2, pair) = fixture();
        let rp = ResolvedPair { pair: &pair, doc: &doc, slot1: &s1, slot2: &s2 };
        let mock = ScriptedMockJudge::constant(r#"{"verdict":"[1,2]","explanation":"first is better"}"#);
        let t = run_baseline(&mock, &setup(&rp, CueAssignment::blind(), Perm::Identity)).unwrap();
        assert_eq!(t.verdict_canonical, Some(Verdict::Order12));
        assert_eq!(t.parse_status, ParseStatus::Ok);
        assert_eq!(t.explanation, "first is better");
    }

    #[test]
    fn baseline_parses_bare_tie() {
        let (doc, s1, s2, pair) = fixture();
        let rp = ResolvedPair { pair: &pair, doc: &doc, slot1: &s1, slot2: &s2 };
        let mock = ScriptedMockJudge::constant("Tie");
        let t = run_baseline(&mock, &setup(&rp, CueAssignment::blind(), Perm::Identity)).unwrap();
        assert_eq!(t.verdict_canonical, Some(Verdict::Tie));
        assert_eq!(t.parse_status, ParseStatus::Repaired);
    }

    #[test]
    fn baseline_repairs_embedded_json() {
        let (doc, s1, s2, pair) = fixture();
        let rp = ResolvedPair { pair: &pair, doc: &doc, slot1: &s1, slot2: &s2 };
        let mock = ScriptedMockJudge::constant(
            "Sure, here is my judgment: {\"verdict\":\"[2,1]\",\"explanation\":\"second wins\"} hope that helps",
        );
        let t = run_baseline(&mock, &setup(&rp, CueAssignment::blind(), Perm::Identity)).unwrap();
        assert_eq!(t.verdict_canonical, Some(Verdict::Order21));
        assert_eq!(t.parse_status, ParseStatus::Repaired);
        assert_eq!(t.explanation, "second wins");
    }

    #[test]
    fn unparseable_reply_fails_trial() {
        let (doc, s1, s2, pair) = fixture();
        let rp = ResolvedPair { pair: &pair, doc: &doc, slot1: &s1, slot2: &s2 };
        let mock = ScriptedMockJudge::constant("I cannot decide between them.");
        let t = run_baseline(&mock, &setup(&rp, CueAssignment::blind(), Perm::Identity)).unwrap();
        assert_eq!(t.parse_status, ParseStatus::Failed);
        assert!(t.verdict_canonical.is_none());
    }

    #[test]
    fn scot_verdict_canonicalized_under_swap() {
        let (doc, s1, s2, pair) = fixture();
        let rp = ResolvedPair { pair: &pair, doc: &doc, slot1: &s1, slot2: &s2 };
        let mock = ScriptedMockJudge::constant(r#"{"verdict":"[2,1]","explanation":"x"}"#);
        let t = run_scot(
            &mock,
            &setup(&rp, CueAssignment::blind(), Perm::Swap),
            &CriterionSet::default(),
        )
        .unwrap();
        assert_eq!(t.verdict_canonical, Some(Verdict::Order12));
    }

    #[test]
    fn scot_prompt_contains_all_criteria() {
        let (doc, s1, s2, pair) = fixture();
        let rp = ResolvedPair { pair: &pair, doc: &doc, slot1: &s1, slot2: &s2 };
        let crit = CriterionSet::default();
        let prompt =
            render_prompt(Protocol::Scot, &rp, &CueAssignment::blind(), Perm::Identity, &crit.listing())
                .unwrap();
        for c in &crit.criteria {
            assert!(prompt.text.contains(c.as_str()));
        }
    }

    #[test]
    fn aggregate_equal_sums_is_tie() {
        let crit = CriterionSet::default();
        let mut scores = BTreeMap::new();
        for slot in DISPLAY_SLOTS {
            let per: BTreeMap<String, u8> =
                crit.criteria.iter().map(|c| (c.clone(), 3)).collect();
            scores.insert(slot.to_string(), per);
        }
        assert_eq!(aggregate_scores(&CriterionScores { scores }, &crit), Verdict::Tie);
    }

    #[test]
    fn aggregate_weighted_hand_computed() {
        // slot1=(5,1,1,1), slot2=(2,2,2,2), weights (0.7,0.1,0.1,0.1): 3.8 vs 2.0
        let crit = CriterionSet {
            criteria: CriterionSet::default().criteria,
            weights: vec![0.7, 0.1, 0.1, 0.1],
        };
        let mut scores = BTreeMap::new();
        let vals1 = [5u8, 1, 1, 1];
        let vals2 = [2u8, 2, 2, 2];
        scores.insert(
            "summary1".to_string(),
            crit.criteria.iter().cloned().zip(vals1).collect::<BTreeMap<_, _>>(),
        );
        scores.insert(
            "summary2".to_string(),
            crit.criteria.iter().cloned().zip(vals2).collect::<BTreeMap<_, _>>(),
        );
        let scores = CriterionScores { scores };
        assert!((scores.weighted_sum("summary1", &crit) - 3.8).abs() < 1e-12);
        assert!((scores.weighted_sum("summary2", &crit) - 2.0).abs() < 1e-12);
        assert_eq!(aggregate_scores(&scores, &crit), Verdict::Order12);
    }

    #[test]
    fn aggregate_degenerate_weights_use_single_criterion() {
        let crit = CriterionSet {
            criteria: CriterionSet::default().criteria,
            weights: vec![1.0, 0.0, 0.0, 0.0],
        };
        let mut scores = BTreeMap::new();
        scores.insert(
            "summary1".to_string(),
            crit.criteria.iter().cloned().zip([2u8, 5, 5, 5]).collect::<BTreeMap<_, _>>(),
        );
        scores.insert(
            "summary2".to_string(),
            crit.criteria.iter().cloned().zip([3u8, 0, 0, 0]).collect::<BTreeMap<_, _>>(),
        );
        assert_eq!(aggregate_scores(&CriterionScores { scores }, &crit), Verdict::Order21);
    }

    #[test]
    fn aggregate_antisymmetric_under_slot_swap() {
        let crit = CriterionSet::default();
        let mk = |a: [u8; 4], b: [u8; 4]| {
            let mut scores = BTreeMap::new();
            scores.insert(
                "summary1".to_string(),
                crit.criteria.iter().cloned().zip(a).collect::<BTreeMap<_, _>>(),
            );
            scores.insert(
                "summary2".to_string(),
                crit.criteria.iter().cloned().zip(b).collect::<BTreeMap<_, _>>(),
            );
            CriterionScores { scores }
        };
        let fwd = aggregate_scores(&mk([5, 4, 3, 2], [1, 2, 3, 4]), &crit);
        let rev = aggregate_scores(&mk([1, 2, 3, 4], [5, 4, 3, 2]), &crit);
        match fwd {
            Verdict::Order12 => assert_eq!(rev, Verdict::Order21),
            Verdict::Order21 => assert_eq!(rev, Verdict::Order12),
            Verdict::Tie => assert_eq!(rev, Verdict::Tie),
        }
    }

    #[test]
    fn lock_digest_detects_mutation() {
        let mut notes = BTreeMap::new();
        let mut per: BTreeMap<String, EvidenceNote> = BTreeMap::new();
        per.insert(
            "accuracy".into(),
            EvidenceNote { note: "ok".into(), spans: vec!["river rose".into()] },
        );
        notes.insert("summary1".to_string(), per);
        let mut locked = LockedEvidence::lock(notes);
        locked.check_integrity().unwrap();
        locked
            .notes
            .get_mut("summary1")
            .unwrap()
            .get_mut("accuracy")
            .unwrap()
            .note = "tampered".into();
        assert!(locked.check_integrity().is_err());
    }

    #[test]
    fn validate_lock_verbatim_span_passes() {
        let (doc, s1, s2, _) = fixture();
        let crit = CriterionSet { criteria: vec!["accuracy".into()], weights: vec![1.0] };
        let mut notes = BTreeMap::new();
        for slot in DISPLAY_SLOTS {
            let mut per = BTreeMap::new();
            per.insert(
                "accuracy".to_string(),
                EvidenceNote {
                    note: "grounded".into(),
                    spans: vec!["The river rose two meters overnight.".into()],
                },
            );
            notes.insert(slot.to_string(), per);
        }
        let report = validate_lock(&notes, &crit, &doc, &s1.text, &s2.text);
        assert!(report.ok, "{report:?}");
    }

    #[test]
    fn validate_lock_fabricated_span_fails_naming_cell() {
        let (doc, s1, s2, _) = fixture();
        let crit = CriterionSet { criteria: vec!["accuracy".into()], weights: vec![1.0] };
        let mut notes = BTreeMap::new();
        for slot in DISPLAY_SLOTS {
            let mut per = BTreeMap::new();
            per.insert(
                "accuracy".to_string(),
                EvidenceNote {
                    note: "n".into(),
                    spans: vec!["completely fabricated quotation".into()],
                },
            );
            notes.insert(slot.to_string(), per);
        }
        let report = validate_lock(&notes, &crit, &doc, &s1.text, &s2.text);
        assert!(!report.ok);
        assert_eq!(report.offending.len(), 2);
        assert_eq!(report.offending[0].0, "summary1");
    }

    #[test]
    fn validate_lock_whitespace_case_normalized() {
        let (doc, s1, s2, _) = fixture();
        let crit = CriterionSet { criteria: vec!["accuracy".into()], weights: vec![1.0] };
        let mut notes = BTreeMap::new();
        for slot in DISPLAY_SLOTS {
            let mut per = BTreeMap::new();
            per.insert(
                "accuracy".to_string(),
                EvidenceNote {
                    note: "n".into(),
                    spans: vec!["the RIVER   rose two\nmeters overnight.".into()],
                },
            );
            notes.insert(slot.to_string(), per);
        }
        let report = validate_lock(&notes, &crit, &doc, &s1.text, &s2.text);
        assert!(report.ok, "{report:?}");
    }

    #[test]
    fn rubric_accepts_valid_scores() {
        let (doc, s1, _, _) = fixture();
        let mock = ScriptedMockJudge::constant(
            r#"{"factual_accuracy": 5, "completeness": 3, "coherence_fluency": 1}"#,
        );
        let scores = rubric_score(&mock, "mock", &doc, &s1, 128).unwrap();
        assert_eq!(scores["factual_accuracy"], 5);
        assert_eq!(scores["completeness"], 3);
        assert_eq!(scores["coherence_fluency"], 1);
    }

    #[test]
    fn rubric_rejects_out_of_range() {
        let (doc, s1, _, _) = fixture();
        let mock = ScriptedMockJudge::constant(
            r#"{"factual_accuracy": 6, "completeness": 3, "coherence_fluency": 1}"#,
        );
        let err = rubric_score(&mock, "mock", &doc, &s1, 128).unwrap_err();
        assert!(err.to_string().contains("out of rubric range"));
    }
}
