//! Semantics-preserving anchoring attacks: verbosity inflation and
//! assertive-tone rewriting. Both are deterministic template/rule rewrites
//! with a total content-preservation checker usable as a test oracle.

use std::collections::{BTreeMap, HashMap, HashSet};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::core::{AttackTag, SummaryRecord};
use crate::error::{AuditError, Result};
use crate::summarizers::{split_sentences, tokenize};

/// Style-transformation configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackConfig {
    /// Target length multiplier for the verbosity attack, >= 1.
    pub verbosity_factor: f64,
    /// Content-free connective sentences appended by the verbosity attack.
    /// Audited against the corpus vocabulary: see `audit_filler_bank`.
    pub filler_bank: Vec<String>,
    /// Connectives that wrap a restated original sentence ("In other words,").
    /// Exempt from the vocabulary audit because they precede repeated
    /// original content anyway.
    pub restatement_prefixes: Vec<String>,
    /// Hedge phrase -> assertive phrase.
    pub hedge_map: BTreeMap<String, String>,
    /// Openers for the confidence attack; the first entry is used.
    pub assertive_prefixes: Vec<String>,
}

impl Default for AttackConfig {
    fn default() -> Self {
        let hedges = [
            ("might", "will"),
            ("may", "will"),
            ("could", "will"),
            ("can possibly", "will"),
            ("possibly", "definitely"),
            ("perhaps", "certainly"),
            ("probably", "certainly"),
            ("likely", "certainly"),
            ("apparently", "clearly"),
            ("seemingly", "clearly"),
            ("arguably", "undeniably"),
            ("suggests that", "demonstrates that"),
            ("suggest that", "demonstrate that"),
            ("suggests", "demonstrates"),
            ("suggest", "demonstrate"),
            ("indicates that", "proves that"),
            ("indicates", "proves"),
            ("indicate", "prove"),
            ("seems to", "certainly does"),
            ("seem to", "certainly do"),
            ("seems", "is"),
            ("appears to", "certainly does"),
            ("appear to", "certainly do"),
            ("appears", "is"),
            ("tends to", "always does"),
            ("tend to", "always do"),
            ("somewhat", "very"),
            ("rather", "very"),
            ("fairly", "extremely"),
            ("relatively", "extremely"),
            ("roughly", "exactly"),
            ("approximately", "exactly"),
            ("it is possible that", "it is certain that"),
            ("in some cases", "in all cases"),
        ];
        Self {
            verbosity_factor: 1.5,
            filler_bank: vec![
                "To be sure, this is so.".into(),
                "And so it is, as it should be.".into(),
                "Be that as it may, so it is.".into(),
                "That being so, it is as it is.".into(),
                "For all that, it is just so.".into(),
            ],
            restatement_prefixes: vec![
                "In other words,".into(),
                "Put differently,".into(),
                "To restate,".into(),
            ],
            hedge_map: hedges.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect(),
            assertive_prefixes: vec![
                "It is unequivocally clear that".into(),
                "Without any doubt,".into(),
            ],
        }
    }
}

impl AttackConfig {
    pub fn validate(&self) -> Result<()> {
        if self.verbosity_factor < 1.0 {
            return Err(AuditError::Config(format!(
                "verbosity_factor {} must be >= 1",
                self.verbosity_factor
            )));
        }
        if self.filler_bank.is_empty() || self.assertive_prefixes.is_empty() {
            return Err(AuditError::Config("filler bank and assertive prefixes must be non-empty".into()));
        }
        Ok(())
    }
}

/// Rejects filler templates carrying content words that occur in any source
/// document, so inflation can never smuggle in document content.
pub fn audit_filler_bank(cfg: &AttackConfig, corpus_vocabulary: &HashSet<String>) -> Result<()> {
    for filler in &cfg.filler_bank {
        for word in tokenize(filler) {
            if corpus_vocabulary.contains(&word) {
                return Err(AuditError::Config(format!(
                    "filler template {filler:?} contains corpus content word {word:?}"
                )));
            }
        }
    }
    Ok(())
}

fn whitespace_tokens(text: &str) -> usize {
    text.split_whitespace().count()
}

fn require_unattacked(summary: &SummaryRecord) -> Result<()> {
    if summary.attack.is_some() {
        return Err(AuditError::Config(format!(
            "summary {} already carries an attack tag; compounding attacks is not allowed",
            summary.summary_id
        )));
    }
    Ok(())
}

fn lowercase_first(s: &str) -> String {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) => c.to_lowercase().collect::<String>() + chars.as_str(),
        None => String::new(),
    }
}

/// Inflates a summary to at least `verbosity_factor` times its whitespace
/// token length. The original text is preserved verbatim as a prefix; the
/// padding alternates seeded filler sentences with restatements of original
/// sentences.
pub fn verbosity_attack<R: Rng>(
    summary: &SummaryRecord,
    cfg: &AttackConfig,
    rng: &mut R,
) -> Result<SummaryRecord> {
    cfg.validate()?;
    require_unattacked(summary)?;
    let tag = AttackTag::Verbosity { factor: cfg.verbosity_factor };
    let original_tokens = whitespace_tokens(&summary.text);
    let target = (cfg.verbosity_factor * original_tokens as f64).ceil() as usize;

    let mut out = SummaryRecord {
        summary_id: format!("{}::verbosity", summary.summary_id),
        doc_id: summary.doc_id.clone(),
        text: summary.text.clone(),
        origin: summary.origin.clone(),
        attack: Some(tag),
    };
    if cfg.verbosity_factor == 1.0 {
        return Ok(out); // identity on the text
    }

    let sentences = split_sentences(&summary.text)?;
    let mut use_filler = true;
    while whitespace_tokens(&out.text) < target {
        let addition = if use_filler {
            cfg.filler_bank[rng.gen_range(0..cfg.filler_bank.len())].clone()
        } else {
            let sent = &sentences.sentences[rng.gen_range(0..sentences.sentences.len())];
            let prefix =
                &cfg.restatement_prefixes[rng.gen_range(0..cfg.restatement_prefixes.len())];
            format!("{prefix} {}", lowercase_first(sent.text.trim()))
        };
        out.text.push(' ');
        out.text.push_str(&addition);
        use_filler = !use_filler;
    }
    Ok(out)
}

/// Case-aware whole-word phrase replacement: `from` must start and end at
/// word boundaries, matched case-insensitively on the first letter.
fn replace_phrase(text: &str, from: &str, to: &str) -> String {
    let is_word = |c: char| c.is_alphanumeric() || c == '\'';
    let lower = text.to_lowercase();
    let from_lower = from.to_lowercase();
    let mut out = String::with_capacity(text.len());
    let mut i = 0;
    while i < text.len() {
        if let Some(rel) = lower[i..].find(&from_lower) {
            let start = i + rel;
            let end = start + from.len();
            let left_ok = start == 0 || !text[..start].chars().next_back().map_or(false, is_word);
            let right_ok = end == text.len() || !text[end..].chars().next().map_or(false, is_word);
            out.push_str(&text[i..start]);
            if left_ok && right_ok {
                // preserve a leading capital from the replaced phrase
                let capitalized = text[start..].chars().next().is_some_and(char::is_uppercase);
                if capitalized {
                    let mut cs = to.chars();
                    if let Some(first) = cs.next() {
                        out.extend(first.to_uppercase());
                        out.push_str(cs.as_str());
                    }
                } else {
                    out.push_str(to);
                }
            } else {
                out.push_str(&text[start..end]);
            }
            i = end;
        } else {
            out.push_str(&text[i..]);
            break;
        }
    }
    out
}

/// Rewrites hedged phrasing into assertive phrasing and prepends one
/// assertive opener to the first sentence. Content words are untouched.
pub fn confidence_attack(summary: &SummaryRecord, cfg: &AttackConfig) -> Result<SummaryRecord> {
    cfg.validate()?;
    require_unattacked(summary)?;

    // longest hedge first so "suggests that" wins over "suggests"
    let mut hedges: Vec<(&String, &String)> = cfg.hedge_map.iter().collect();
    hedges.sort_by_key(|(from, _)| std::cmp::Reverse(from.len()));
    let mut text = summary.text.clone();
    for (from, to) in hedges {
        text = replace_phrase(&text, from, to);
    }

    let prefix = &cfg.assertive_prefixes[0];
    let text = format!("{prefix} {}", lowercase_first(&text));

    Ok(SummaryRecord {
        summary_id: format!("{}::confidence", summary.summary_id),
        doc_id: summary.doc_id.clone(),
        text,
        origin: summary.origin.clone(),
        attack: Some(AttackTag::Confidence),
    })
}

fn content_multiset(text: &str, exempt: &HashSet<String>) -> HashMap<String, usize> {
    let mut counts = HashMap::new();
    for tok in tokenize(text) {
        if !exempt.contains(&tok) {
            *counts.entry(tok).or_insert(0) += 1;
        }
    }
    counts
}

/// Total checker for the attacks' preservation guarantees, keyed off the
/// attack tag on `attacked`:
/// - verbosity: every original sentence appears in order in the output;
/// - confidence: the content-word multiset is preserved modulo the hedge
///   map and the assertive prefixes.
///
/// An output with no attack tag fails.
pub fn verify_content_preserved(
    original: &SummaryRecord,
    attacked: &SummaryRecord,
    cfg: &AttackConfig,
) -> bool {
    match attacked.attack {
        None => false,
        Some(AttackTag::Verbosity { .. }) => {
            let orig = match split_sentences(&original.text) {
                Ok(s) => s,
                Err(_) => return false,
            };
            let out = match split_sentences(&attacked.text) {
                Ok(s) => s,
                Err(_) => return false,
            };
            let mut cursor = 0usize;
            'outer: for os in &orig.sentences {
                let needle = os.text.trim();
                while cursor < out.sentences.len() {
                    let hit = out.sentences[cursor].text.trim() == needle;
                    cursor += 1;
                    if hit {
                        continue 'outer;
                    }
                }
                return false;
            }
            true
        }
        Some(AttackTag::Confidence) => {
            // words introduced or removed by the rewrite rules are exempt
            // from the multiset comparison on both sides
            let mut exempt: HashSet<String> = HashSet::new();
            for (from, to) in &cfg.hedge_map {
                exempt.extend(tokenize(from));
                exempt.extend(tokenize(to));
            }
            for p in &cfg.assertive_prefixes {
                exempt.extend(tokenize(p));
            }
            content_multiset(&original.text, &exempt)
                == content_multiset(&attacked.text, &exempt)
        }
    }
}

/// Content vocabulary (non-stopword tokens) of a set of document texts, for
/// the filler-bank audit.
pub fn corpus_vocabulary<'a>(doc_texts: impl IntoIterator<Item = &'a str>) -> HashSet<String> {
    let mut vocab = HashSet::new();
    for text in doc_texts {
        vocab.extend(tokenize(text));
    }
    vocab
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::core::SummaryOrigin;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn summary(text: &str) -> SummaryRecord {
        SummaryRecord::new("s1", "d1", text, SummaryOrigin::Llm).unwrap()
    }

    const SAMPLE: &str = "The reactor output might increase next quarter. Engineers suggest that demand will stay high. Cooling margins seem adequate.";

    #[test]
    fn verbosity_factor_one_is_identity() {
        let s = summary(SAMPLE);
        let cfg = AttackConfig { verbosity_factor: 1.0, ..AttackConfig::default() };
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let out = verbosity_attack(&s, &cfg, &mut rng).unwrap();
        assert_eq!(out.text, s.text);
        assert_eq!(out.attack, Some(AttackTag::Verbosity { factor: 1.0 }));
    }

    #[test]
    fn verbosity_reaches_target_and_keeps_prefix() {
        let s = summary(SAMPLE);
        let cfg = AttackConfig { verbosity_factor: 2.0, ..AttackConfig::default() };
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let out = verbosity_attack(&s, &cfg, &mut rng).unwrap();
        let orig_tokens = s.text.split_whitespace().count();
        assert!(out.text.split_whitespace().count() >= 2 * orig_tokens);
        assert!(out.text.starts_with(&s.text));
        assert!(verify_content_preserved(&s, &out, &cfg));
    }

    #[test]
    fn verbosity_same_seed_same_output() {
        let s = summary(SAMPLE);
        let cfg = AttackConfig::default();
        let a = verbosity_attack(&s, &cfg, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        let b = verbosity_attack(&s, &cfg, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        assert_eq!(a.text, b.text);
    }

    #[test]
    fn verbosity_factor_below_one_is_config_error() {
        let s = summary(SAMPLE);
        let cfg = AttackConfig { verbosity_factor: 0.9, ..AttackConfig::default() };
        assert!(verbosity_attack(&s, &cfg, &mut ChaCha8Rng::seed_from_u64(0)).is_err());
    }

    #[test]
    fn double_attack_is_config_error() {
        let s = summary(SAMPLE);
        let cfg = AttackConfig::default();
        let once = confidence_attack(&s, &cfg).unwrap();
        assert!(confidence_attack(&once, &cfg).is_err());
        assert!(verbosity_attack(&once, &cfg, &mut ChaCha8Rng::seed_from_u64(0)).is_err());
    }

    #[test]
    fn confidence_substitutes_direct_map_entry() {
        let s = summary("Prices might increase soon.");
        let out = confidence_attack(&s, &AttackConfig::default()).unwrap();
        assert!(out.text.contains("will increase"), "{}", out.text);
        assert!(!out.text.contains("might"));
    }

    #[test]
    fn confidence_longest_phrase_wins() {
        let s = summary("The data suggests that output grew.");
        let out = confidence_attack(&s, &AttackConfig::default()).unwrap();
        assert!(out.text.contains("demonstrates that"), "{}", out.text);
    }

    #[test]
    fn confidence_no_hedges_adds_only_prefix() {
        let s = summary("Output grew by ten percent.");
        let cfg = AttackConfig::default();
        let out = confidence_attack(&s, &cfg).unwrap();
        assert_eq!(
            out.text,
            format!("{} output grew by ten percent.", cfg.assertive_prefixes[0])
        );
    }

    #[test]
    fn confidence_does_not_touch_substrings() {
        let s = summary("The mighty dismayed crowd cheered.");
        let out = confidence_attack(&s, &AttackConfig::default()).unwrap();
        assert!(out.text.contains("mighty"));
        assert!(out.text.contains("dismayed"));
    }

    #[test]
    fn confidence_preserves_content_multiset() {
        let s = summary(SAMPLE);
        let cfg = AttackConfig::default();
        let out = confidence_attack(&s, &cfg).unwrap();
        assert!(verify_content_preserved(&s, &out, &cfg));
    }

    #[test]
    fn verify_rejects_deleted_sentence() {
        let s = summary("First point stands. Second point stands.");
        let cfg = AttackConfig::default();
        let mut out = verbosity_attack(&s, &cfg, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        out.text = out.text.replacen("First point stands. ", "", 1);
        assert!(!verify_content_preserved(&s, &out, &cfg));
    }

    #[test]
    fn verify_rejects_novel_content_word() {
        let s = summary("Output grew by ten percent.");
        let cfg = AttackConfig::default();
        let mut out = confidence_attack(&s, &cfg).unwrap();
        out.text.push_str(" Hedgehogs rejoiced.");
        assert!(!verify_content_preserved(&s, &out, &cfg));
    }

    #[test]
    fn verify_rejects_untagged_output() {
        let s = summary(SAMPLE);
        assert!(!verify_content_preserved(&s, &s, &AttackConfig::default()));
    }

    #[test]
    fn filler_bank_audit_flags_corpus_word() {
        let mut cfg = AttackConfig::default();
        let vocab = corpus_vocabulary(["The reactor output increased."]);
        audit_filler_bank(&cfg, &vocab).unwrap();
        cfg.filler_bank.push("The reactor hums along.".into());
        assert!(audit_filler_bank(&cfg, &vocab).is_err());
    }
}
