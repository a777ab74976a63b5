//! Domain types shared by every module, plus verdict canonicalization and
//! outcome aggregation.
//!
//! All types here are immutable values once constructed; aggregation is pure.
//! The trial log (JSON Lines, one [`Trial`] per line) is the contract between
//! the harness and the analysis module.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{AuditError, Result};

/// Whitespace-token count used for document length bookkeeping.
pub fn whitespace_token_count(text: &str) -> usize {
    text.split_whitespace().count()
}

/// A source document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocumentRecord {
    pub doc_id: String,
    pub text: String,
    #[serde(default)]
    pub topic: String,
    pub token_count: usize,
}

impl DocumentRecord {
    pub fn new(doc_id: impl Into<String>, text: impl Into<String>, topic: impl Into<String>) -> Result<Self> {
        let text = text.into();
        if text.is_empty() {
            return Err(AuditError::InvalidInput("document text is empty".into()));
        }
        let token_count = whitespace_token_count(&text);
        Ok(Self { doc_id: doc_id.into(), text, topic: topic.into(), token_count })
    }
}

/// The four extractive systems.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExtractiveMethod {
    Textrank,
    Lexrank,
    Klsum,
    Sumbasic,
}

impl ExtractiveMethod {
    pub const ALL: [ExtractiveMethod; 4] = [
        ExtractiveMethod::Textrank,
        ExtractiveMethod::Lexrank,
        ExtractiveMethod::Klsum,
        ExtractiveMethod::Sumbasic,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ExtractiveMethod::Textrank => "textrank",
            ExtractiveMethod::Lexrank => "lexrank",
            ExtractiveMethod::Klsum => "klsum",
            ExtractiveMethod::Sumbasic => "sumbasic",
        }
    }
}

impl std::str::FromStr for ExtractiveMethod {
    type Err = AuditError;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_lowercase().as_str() {
            "textrank" => Ok(ExtractiveMethod::Textrank),
            "lexrank" => Ok(ExtractiveMethod::Lexrank),
            "klsum" | "kl-sum" => Ok(ExtractiveMethod::Klsum),
            "sumbasic" => Ok(ExtractiveMethod::Sumbasic),
            other => Err(AuditError::InvalidInput(format!("unknown extractive method: {other}"))),
        }
    }
}

/// Where a summary came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SummaryOrigin {
    Llm,
    Extractive { method: ExtractiveMethod },
    Paraphrase { of: String },
}

impl SummaryOrigin {
    /// Collapses to the two-way origin used for truth labels.
    pub fn is_llm_side(&self) -> bool {
        matches!(self, SummaryOrigin::Llm | SummaryOrigin::Paraphrase { .. })
    }
}

/// Style attack applied to a summary, if any.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum AttackTag {
    Verbosity { factor: f64 },
    Confidence,
}

/// A candidate summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRecord {
    pub summary_id: String,
    pub doc_id: String,
    pub text: String,
    pub origin: SummaryOrigin,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attack: Option<AttackTag>,
}

impl SummaryRecord {
    pub fn new(
        summary_id: impl Into<String>,
        doc_id: impl Into<String>,
        text: impl Into<String>,
        origin: SummaryOrigin,
    ) -> Result<Self> {
        let text = text.into();
        if text.is_empty() {
            return Err(AuditError::InvalidInput("summary text is empty".into()));
        }
        Ok(Self { summary_id: summary_id.into(), doc_id: doc_id.into(), text, origin, attack: None })
    }
}

/// Which controlled subset a pair belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairSubset {
    Standard,
    EqPair,
    SingleRelabel,
    HeadToHead,
    Identical,
}

/// A two-candidate comparison in canonical slot space
/// (slot1 = LLM side, slot2 = TradML side, for labeled subsets).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidatePair {
    pub pair_id: String,
    pub doc_id: String,
    pub slot1: String,
    pub slot2: String,
    pub subset: PairSubset,
}

/// Canonical two-candidate outcome. `Tie` also represents "No Selection".
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Verdict {
    #[serde(rename = "[1,2]")]
    Order12,
    #[serde(rename = "[2,1]")]
    Order21,
    #[serde(rename = "Tie")]
    Tie,
}

/// Presentation permutation of {1,2}: canonical slot -> display position.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Perm {
    Identity,
    Swap,
}

impl Perm {
    pub fn as_str(&self) -> &'static str {
        match self {
            Perm::Identity => "identity",
            Perm::Swap => "swap",
        }
    }
}

/// Maps a verdict expressed in on-screen order back to canonical slot space.
///
/// Total function: ties are order-free and map to themselves; applying the
/// identity permutation is the identity; the swap is an involution.
pub fn canonicalize_verdict(display_verdict: Verdict, perm: Perm) -> Verdict {
    match (display_verdict, perm) {
        (v, Perm::Identity) => v,
        (Verdict::Tie, Perm::Swap) => Verdict::Tie,
        (Verdict::Order12, Perm::Swap) => Verdict::Order21,
        (Verdict::Order21, Perm::Swap) => Verdict::Order12,
    }
}

/// The five probe conditions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Probe {
    B,
    T,
    F,
    P,
    R,
}

impl Probe {
    pub fn as_str(&self) -> &'static str {
        match self {
            Probe::B => "B",
            Probe::T => "T",
            Probe::F => "F",
            Probe::P => "P",
            Probe::R => "R",
        }
    }
}

impl std::str::FromStr for Probe {
    type Err = AuditError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "B" | "b" | "blind" => Ok(Probe::B),
            "T" | "t" | "truth" => Ok(Probe::T),
            "F" | "f" | "flip" => Ok(Probe::F),
            "P" | "p" | "placebo" => Ok(Probe::P),
            "R" | "r" | "reveal" => Ok(Probe::R),
            other => Err(AuditError::UnknownProbe(other.to_string())),
        }
    }
}

/// Phase marker for the two-trial Reveal-After sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RevealPhase {
    FlipPhase,
    RevealPhase,
}

impl RevealPhase {
    pub fn as_str(&self) -> &'static str {
        match self {
            RevealPhase::FlipPhase => "flip_phase",
            RevealPhase::RevealPhase => "reveal_phase",
        }
    }
}

/// The intervention do(C=·): per-slot display labels for one probe.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CueAssignment {
    pub probe: Probe,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label_slot1: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label_slot2: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phase: Option<RevealPhase>,
}

impl CueAssignment {
    pub fn blind() -> Self {
        Self { probe: Probe::B, label_slot1: None, label_slot2: None, phase: None }
    }
}

/// The three judging protocols.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Protocol {
    Baseline,
    Scot,
    Pbp,
}

impl Protocol {
    pub fn as_str(&self) -> &'static str {
        match self {
            Protocol::Baseline => "baseline",
            Protocol::Scot => "scot",
            Protocol::Pbp => "pbp",
        }
    }
}

impl std::str::FromStr for Protocol {
    type Err = AuditError;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_lowercase().as_str() {
            "baseline" => Ok(Protocol::Baseline),
            "scot" => Ok(Protocol::Scot),
            "pbp" => Ok(Protocol::Pbp),
            other => Err(AuditError::InvalidInput(format!("unknown protocol: {other}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ParseStatus {
    Ok,
    Repaired,
    Failed,
}

/// How the canonical verdict was obtained for a PBP trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VerdictSource {
    Stated,
    Computed,
}

/// One transcript turn, raw model output before any repair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptTurn {
    pub role: String,
    pub content: String,
}

impl TranscriptTurn {
    pub fn new(role: impl Into<String>, content: impl Into<String>) -> Self {
        Self { role: role.into(), content: content.into() }
    }
}

/// One judge invocation, fully logged.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trial {
    pub trial_id: String,
    pub pair_id: String,
    pub judge_id: String,
    pub protocol: Protocol,
    pub cue: CueAssignment,
    pub presentation_perm: Perm,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verdict_canonical: Option<Verdict>,
    pub explanation: String,
    pub transcript: Vec<TranscriptTurn>,
    pub seed: u64,
    pub parse_status: ParseStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verdict_source: Option<VerdictSource>,
    /// Structured per-trial extras (template version, PBP lock, scores).
    #[serde(default, skip_serializing_if = "serde_json::Map::is_empty")]
    pub metadata: serde_json::Map<String, serde_json::Value>,
}

/// Content-addressed trial id: hash of the cell coordinates plus perm and seed.
/// Enables idempotent caching and resume.
pub fn trial_id(
    pair_id: &str,
    judge_id: &str,
    protocol: Protocol,
    probe: Probe,
    phase: Option<RevealPhase>,
    perm: Perm,
    seed: u64,
) -> String {
    let mut hasher = Sha256::new();
    hasher.update(pair_id.as_bytes());
    hasher.update(b"\x1f");
    hasher.update(judge_id.as_bytes());
    hasher.update(b"\x1f");
    hasher.update(protocol.as_str().as_bytes());
    hasher.update(b"\x1f");
    hasher.update(probe.as_str().as_bytes());
    hasher.update(b"\x1f");
    hasher.update(phase.map(|p| p.as_str()).unwrap_or("-").as_bytes());
    hasher.update(b"\x1f");
    hasher.update(perm.as_str().as_bytes());
    hasher.update(b"\x1f");
    hasher.update(seed.to_le_bytes());
    let digest = hasher.finalize();
    hex_lower(&digest[..16])
}

pub(crate) fn hex_lower(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// (p12, p21, tie, n) over canonical outcomes for one (judge, protocol, probe) cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OutcomeDistribution {
    pub p12: f64,
    pub p21: f64,
    pub tie: f64,
    pub n: usize,
}

impl OutcomeDistribution {
    /// Builds a distribution from exact counts.
    pub fn from_counts(n12: usize, n21: usize, ntie: usize) -> Result<Self> {
        let n = n12 + n21 + ntie;
        if n == 0 {
            return Err(AuditError::EmptyCell);
        }
        let nf = n as f64;
        Ok(Self { p12: n12 as f64 / nf, p21: n21 as f64 / nf, tie: ntie as f64 / nf, n })
    }

    pub fn fraction(&self, outcome: Verdict) -> f64 {
        match outcome {
            Verdict::Order12 => self.p12,
            Verdict::Order21 => self.p21,
            Verdict::Tie => self.tie,
        }
    }
}

/// Aggregates canonical verdicts over one cell. Trials with
/// `parse_status == failed` are excluded from the denominator.
pub fn outcome_distribution<'a, I>(trials: I) -> Result<OutcomeDistribution>
where
    I: IntoIterator<Item = &'a Trial>,
{
    let (mut n12, mut n21, mut ntie) = (0usize, 0usize, 0usize);
    for t in trials {
        if t.parse_status == ParseStatus::Failed {
            continue;
        }
        match t.verdict_canonical {
            Some(Verdict::Order12) => n12 += 1,
            Some(Verdict::Order21) => n21 += 1,
            Some(Verdict::Tie) => ntie += 1,
            None => continue,
        }
    }
    OutcomeDistribution::from_counts(n12, n21, ntie)
}
