//! The interventions do(C=·): cue assignment per probe condition and
//! rendering of cue-bearing prompts with randomized presentation order.
//!
//! Labels travel with summaries under permutation, not with display
//! positions: the intervention is on the summary's cue, not on screen slots.
//! Templates are frozen text files embedded at compile time; the rendered
//! prompt carries the template version in trial transcript metadata.

use rand::Rng;

use crate::core::{
    CandidatePair, CueAssignment, DocumentRecord, Perm, Probe, Protocol, RevealPhase,
    SummaryRecord,
};
use crate::error::{AuditError, Result};

pub const TEMPLATE_VERSION: &str = "v1";

pub const BASELINE_TEMPLATE: &str = include_str!("../templates/baseline.txt");
pub const SCOT_TEMPLATE: &str = include_str!("../templates/scot.txt");
pub const PBP_LOCK_TEMPLATE: &str = include_str!("../templates/pbp_lock.txt");
pub const PBP_SCORE_TEMPLATE: &str = include_str!("../templates/pbp_score.txt");
pub const PBP_RANK_TEMPLATE: &str = include_str!("../templates/pbp_rank.txt");
pub const REVEAL_TEMPLATE: &str = include_str!("../templates/reveal.txt");
pub const GENERATION_TEMPLATE: &str = include_str!("../templates/generation.txt");
pub const PARAPHRASE_TEMPLATE: &str = include_str!("../templates/paraphrase.txt");
pub const RUBRIC_TEMPLATE: &str = include_str!("../templates/rubric.txt");

/// Display strings attached under each probe.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct LabelScheme {
    /// Truth label for the LLM-origin side.
    pub llm_label: String,
    /// Truth label for the extractive (TradML) side.
    pub tradml_label: String,
    /// Exactly two credible but non-informative badges.
    pub placebo_badges: [String; 2],
}

impl Default for LabelScheme {
    fn default() -> Self {
        Self {
            llm_label: "LLM".into(),
            tradml_label: "TradML".into(),
            placebo_badges: [
                "Certified Output — System A".into(),
                "Certified Output — System B".into(),
            ],
        }
    }
}

/// A pair with its referenced records resolved.
#[derive(Debug, Clone)]
pub struct ResolvedPair<'a> {
    pub pair: &'a CandidatePair,
    pub doc: &'a DocumentRecord,
    pub slot1: &'a SummaryRecord,
    pub slot2: &'a SummaryRecord,
}

/// A prompt ready to send, together with the permutation and cue it encodes.
#[derive(Debug, Clone, PartialEq)]
pub struct RenderedPrompt {
    pub text: String,
    pub perm: Perm,
    pub cue: CueAssignment,
    pub template_version: String,
}

/// Ground-truth labels C* in canonical slot space. When the two slots have
/// different origins the label follows the origin; when they share an origin
/// (eq-pair / single-relabel subsets) the display convention 1=LLM, 2=TradML
/// applies, matching how those subsets frame the intervention.
fn truth_labels(pair: &ResolvedPair<'_>, scheme: &LabelScheme) -> (String, String) {
    let s1_llm = pair.slot1.origin.is_llm_side();
    let s2_llm = pair.slot2.origin.is_llm_side();
    if s1_llm != s2_llm {
        let l1 = if s1_llm { &scheme.llm_label } else { &scheme.tradml_label };
        let l2 = if s2_llm { &scheme.llm_label } else { &scheme.tradml_label };
        (l1.clone(), l2.clone())
    } else {
        (scheme.llm_label.clone(), scheme.tradml_label.clone())
    }
}

/// Builds the cue assignment(s) for a probe. Every probe yields exactly one
/// assignment except Reveal-After, which yields the ordered
/// [flip_phase, reveal_phase] sequence.
pub fn assign_cues<R: Rng>(
    pair: &ResolvedPair<'_>,
    probe: Probe,
    scheme: &LabelScheme,
    rng: &mut R,
) -> Vec<CueAssignment> {
    let (t1, t2) = truth_labels(pair, scheme);
    match probe {
        Probe::B => vec![CueAssignment::blind()],
        Probe::T => vec![CueAssignment {
            probe: Probe::T,
            label_slot1: Some(t1),
            label_slot2: Some(t2),
            phase: None,
        }],
        Probe::F => vec![CueAssignment {
            probe: Probe::F,
            label_slot1: Some(t2),
            label_slot2: Some(t1),
            phase: None,
        }],
        Probe::P => {
            // badge order drawn independently of origin
            let [a, b] = &scheme.placebo_badges;
            let (l1, l2) = if rng.gen_bool(0.5) { (a, b) } else { (b, a) };
            vec![CueAssignment {
                probe: Probe::P,
                label_slot1: Some(l1.clone()),
                label_slot2: Some(l2.clone()),
                phase: None,
            }]
        }
        Probe::R => vec![
            CueAssignment {
                probe: Probe::R,
                label_slot1: Some(t2.clone()),
                label_slot2: Some(t1.clone()),
                phase: Some(RevealPhase::FlipPhase),
            },
            CueAssignment {
                probe: Probe::R,
                label_slot1: Some(t1),
                label_slot2: Some(t2),
                phase: Some(RevealPhase::RevealPhase),
            },
        ],
    }
}

/// Identity or swap with probability 1/2 each.
pub fn draw_permutation<R: Rng>(rng: &mut R) -> Perm {
    if rng.gen_bool(0.5) {
        Perm::Swap
    } else {
        Perm::Identity
    }
}

/// Single-pass placeholder fill. Only the named placeholders are substituted
/// and inserted values are never re-scanned, so summary text containing brace
/// delimiters passes through verbatim.
pub fn fill_template(template: &str, values: &[(&str, &str)]) -> String {
    let mut out = String::with_capacity(template.len());
    let mut rest = template;
    loop {
        let hit = values
            .iter()
            .filter_map(|(name, val)| {
                rest.find(&format!("{{{name}}}")).map(|pos| (pos, *name, *val))
            })
            .min_by_key(|(pos, _, _)| *pos);
        match hit {
            Some((pos, name, val)) => {
                out.push_str(&rest[..pos]);
                out.push_str(val);
                rest = &rest[pos + name.len() + 2..];
            }
            None => {
                out.push_str(rest);
                break;
            }
        }
    }
    out
}

/// Removes the `(label = {LABEL_i})` clauses from a template for the Blind
/// probe, so no label strings appear in the prompt at all.
fn strip_label_clauses(template: &str) -> String {
    template
        .replace(" (label = {LABEL_1})", "")
        .replace(" (label = {LABEL_2})", "")
}

/// Per-display-position view of the pair after applying the permutation.
pub struct DisplayView<'a> {
    pub sum1: &'a str,
    pub sum2: &'a str,
    pub label1: Option<&'a str>,
    pub label2: Option<&'a str>,
}

pub fn display_view<'a>(
    pair: &'a ResolvedPair<'a>,
    cue: &'a CueAssignment,
    perm: Perm,
) -> DisplayView<'a> {
    match perm {
        Perm::Identity => DisplayView {
            sum1: &pair.slot1.text,
            sum2: &pair.slot2.text,
            label1: cue.label_slot1.as_deref(),
            label2: cue.label_slot2.as_deref(),
        },
        Perm::Swap => DisplayView {
            sum1: &pair.slot2.text,
            sum2: &pair.slot1.text,
            label1: cue.label_slot2.as_deref(),
            label2: cue.label_slot1.as_deref(),
        },
    }
}

fn template_for(protocol: Protocol) -> &'static str {
    match protocol {
        Protocol::Baseline => BASELINE_TEMPLATE,
        Protocol::Scot => SCOT_TEMPLATE,
        Protocol::Pbp => PBP_LOCK_TEMPLATE,
    }
}

/// Renders the opening prompt for a protocol. For PBP this is the Turn-1
/// evidence-lock prompt; later turns are built by the protocols module.
pub fn render_prompt(
    protocol: Protocol,
    pair: &ResolvedPair<'_>,
    cue: &CueAssignment,
    perm: Perm,
    criteria_text: &str,
) -> Result<RenderedPrompt> {
    let base = template_for(protocol);
    if matches!(protocol, Protocol::Scot | Protocol::Pbp) && !base.contains("{CRITERIA}") {
        return Err(AuditError::Config("template is missing the criteria slot".into()));
    }
    let view = display_view(pair, cue, perm);
    let blind = view.label1.is_none() && view.label2.is_none();
    let template = if blind { strip_label_clauses(base) } else { base.to_string() };

    let text = fill_template(
        &template,
        &[
            ("DOC_TEXT", &pair.doc.text),
            ("SUM1", view.sum1),
            ("SUM2", view.sum2),
            ("LABEL_1", view.label1.unwrap_or("")),
            ("LABEL_2", view.label2.unwrap_or("")),
            ("CRITERIA", criteria_text),
        ],
    );
    Ok(RenderedPrompt {
        text,
        perm,
        cue: cue.clone(),
        template_version: TEMPLATE_VERSION.to_string(),
    })
}

/// Renders the reveal-phase user message appended after the flip-phase
/// transcript: the judge sees its full prior exchange plus the corrected
/// labels.
pub fn render_reveal_message(
    pair: &ResolvedPair<'_>,
    reveal_cue: &CueAssignment,
    perm: Perm,
) -> String {
    let view = display_view(pair, reveal_cue, perm);
    fill_template(
        REVEAL_TEMPLATE,
        &[
            ("LABEL_1", view.label1.unwrap_or("")),
            ("LABEL_2", view.label2.unwrap_or("")),
        ],
    )
}
