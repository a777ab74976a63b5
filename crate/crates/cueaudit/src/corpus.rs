//! Corpus ingestion and construction of the comparison subsets: standard
//! LLM-vs-extractive pairs, the head-to-head four-method sweep, paraphrase
//! eq-pairs, and single-relabel (identical-text) pairs.
//!
//! File layout: a corpus directory holds `documents.jsonl`, `summaries.jsonl`
//! and `pairs.jsonl`, one JSON record per line. Documents need only
//! `{doc_id, text, topic}`; token counts are computed at load.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::core::{
    CandidatePair, DocumentRecord, ExtractiveMethod, PairSubset, SummaryOrigin, SummaryRecord,
};
use crate::cueprobe::{fill_template, GENERATION_TEMPLATE, PARAPHRASE_TEMPLATE};
use crate::error::{AuditError, Result};
use crate::judgeclient::{CompletionRequest, JudgeBackend, Message};
use crate::summarizers::{summarize, tokenize, ExtractiveConfig};

/// Default document-length bounds; out-of-bounds documents warn, not fail.
pub const TOKEN_BOUNDS: (usize, usize) = (500, 1200);
/// Default Jaccard threshold for the content-equality heuristic.
pub const DEFAULT_JACCARD: f64 = 0.9;

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Corpus {
    pub documents: Vec<DocumentRecord>,
    pub summaries: Vec<SummaryRecord>,
    pub pairs: Vec<CandidatePair>,
}

impl Corpus {
    pub fn document(&self, doc_id: &str) -> Option<&DocumentRecord> {
        self.documents.iter().find(|d| d.doc_id == doc_id)
    }

    pub fn summary(&self, summary_id: &str) -> Option<&SummaryRecord> {
        self.summaries.iter().find(|s| s.summary_id == summary_id)
    }

    /// Referential integrity: pairs point at summaries, summaries at
    /// documents, no duplicate ids anywhere.
    pub fn validate(&self) -> Result<()> {
        let mut doc_ids = HashSet::new();
        for d in &self.documents {
            if !doc_ids.insert(d.doc_id.as_str()) {
                return Err(AuditError::DuplicateId(d.doc_id.clone()));
            }
        }
        let mut sum_ids = HashSet::new();
        for s in &self.summaries {
            if !sum_ids.insert(s.summary_id.as_str()) {
                return Err(AuditError::DuplicateId(s.summary_id.clone()));
            }
            if !doc_ids.contains(s.doc_id.as_str()) {
                return Err(AuditError::InvalidInput(format!(
                    "summary {} references missing document {}",
                    s.summary_id, s.doc_id
                )));
            }
        }
        let mut pair_ids = HashSet::new();
        for p in &self.pairs {
            if !pair_ids.insert(p.pair_id.as_str()) {
                return Err(AuditError::DuplicateId(p.pair_id.clone()));
            }
            for slot in [&p.slot1, &p.slot2] {
                if !sum_ids.contains(slot.as_str()) {
                    return Err(AuditError::InvalidInput(format!(
                        "pair {} references missing summary {slot}",
                        p.pair_id
                    )));
                }
            }
        }
        Ok(())
    }

    /// Content vocabulary of all documents, for the filler-bank audit.
    pub fn vocabulary(&self) -> HashSet<String> {
        crate::attacks::corpus_vocabulary(self.documents.iter().map(|d| d.text.as_str()))
    }
}

fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let file = File::open(path)?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record = serde_json::from_str(&line).map_err(|e| AuditError::CorpusLine {
            line: i + 1,
            msg: e.to_string(),
        })?;
        out.push(record);
    }
    Ok(out)
}

fn write_jsonl<T: Serialize>(path: &Path, records: &[T]) -> Result<()> {
    let mut file = File::create(path)?;
    for r in records {
        serde_json::to_writer(&mut file, r)?;
        file.write_all(b"\n")?;
    }
    Ok(())
}

#[derive(Debug, Deserialize)]
struct RawDocument {
    doc_id: String,
    text: String,
    #[serde(default)]
    topic: String,
}

/// Loads a corpus directory. Returns the corpus and human-readable warnings
/// (currently: documents outside the token bounds).
pub fn load_corpus(dir: &Path) -> Result<(Corpus, Vec<String>)> {
    let raw: Vec<RawDocument> = read_jsonl(&dir.join("documents.jsonl"))?;
    let mut corpus = Corpus::default();
    let mut warnings = Vec::new();
    for (i, r) in raw.into_iter().enumerate() {
        let doc = DocumentRecord::new(r.doc_id, r.text, r.topic).map_err(|e| {
            AuditError::CorpusLine { line: i + 1, msg: e.to_string() }
        })?;
        if doc.token_count < TOKEN_BOUNDS.0 || doc.token_count > TOKEN_BOUNDS.1 {
            warnings.push(format!(
                "document {} has {} tokens, outside the {}-{} range",
                doc.doc_id, doc.token_count, TOKEN_BOUNDS.0, TOKEN_BOUNDS.1
            ));
        }
        corpus.documents.push(doc);
    }
    let summaries_path = dir.join("summaries.jsonl");
    if summaries_path.exists() {
        corpus.summaries = read_jsonl(&summaries_path)?;
    }
    let pairs_path = dir.join("pairs.jsonl");
    if pairs_path.exists() {
        corpus.pairs = read_jsonl(&pairs_path)?;
    }
    corpus.validate()?;
    Ok((corpus, warnings))
}

/// Persists the corpus as the three JSON Lines files.
pub fn save_corpus(corpus: &Corpus, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    write_jsonl(&dir.join("documents.jsonl"), &corpus.documents)?;
    write_jsonl(&dir.join("summaries.jsonl"), &corpus.summaries)?;
    write_jsonl(&dir.join("pairs.jsonl"), &corpus.pairs)?;
    Ok(())
}

/// Model settings for summary generation and paraphrasing.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GenerationConfig {
    pub model_id: String,
    pub max_tokens: u32,
}

impl Default for GenerationConfig {
    fn default() -> Self {
        Self { model_id: "default".into(), max_tokens: 768 }
    }
}

fn generate(
    backend: &dyn JudgeBackend,
    cfg: &GenerationConfig,
    prompt: String,
) -> Result<String> {
    let request = CompletionRequest {
        messages: vec![Message::user(prompt)],
        temperature: 0.0,
        max_tokens: cfg.max_tokens,
        model_id: cfg.model_id.clone(),
        seed_hint: None,
        metadata: Default::default(),
    };
    let text = backend.complete(&request)?;
    if text.trim().is_empty() {
        return Err(AuditError::InvalidInput("generator returned empty text".into()));
    }
    Ok(text.trim().to_string())
}

fn llm_summary(
    backend: &dyn JudgeBackend,
    cfg: &GenerationConfig,
    doc: &DocumentRecord,
) -> Result<SummaryRecord> {
    let prompt = fill_template(GENERATION_TEMPLATE, &[("DOC_TEXT", &doc.text)]);
    let text = generate(backend, cfg, prompt)?;
    SummaryRecord::new(format!("{}::llm", doc.doc_id), doc.doc_id.clone(), text, SummaryOrigin::Llm)
}

/// Per document: one LLM summary (canonical slot 1) against one extractive
/// summary (canonical slot 2). Passing `methods` with all four systems
/// yields the head-to-head sweep instead, four pairs per document.
/// Documents whose generation fails are skipped and reported in the
/// returned skip list.
pub fn build_standard_pairs(
    corpus: &mut Corpus,
    methods: &[ExtractiveMethod],
    backend: &dyn JudgeBackend,
    gen_cfg: &GenerationConfig,
    ext_cfg: &ExtractiveConfig,
) -> Result<(Vec<CandidatePair>, Vec<String>)> {
    let subset = if methods.len() > 1 { PairSubset::HeadToHead } else { PairSubset::Standard };
    let mut pairs = Vec::new();
    let mut skipped = Vec::new();
    let docs: Vec<DocumentRecord> = corpus.documents.clone();
    for doc in &docs {
        let llm = match llm_summary(backend, gen_cfg, doc) {
            Ok(s) => s,
            Err(e) => {
                skipped.push(format!("{}: llm generation failed: {e}", doc.doc_id));
                continue;
            }
        };
        corpus.summaries.push(llm.clone());
        for &method in methods {
            let ext = match summarize(doc, method, ext_cfg) {
                Ok(s) => s,
                Err(e) => {
                    skipped.push(format!("{}: {method:?} failed: {e}", doc.doc_id));
                    continue;
                }
            };
            let pair = CandidatePair {
                pair_id: format!("{}::{}", doc.doc_id, method.as_str()),
                doc_id: doc.doc_id.clone(),
                slot1: llm.summary_id.clone(),
                slot2: ext.summary_id.clone(),
                subset,
            };
            corpus.summaries.push(ext);
            corpus.pairs.push(pair.clone());
            pairs.push(pair);
        }
    }
    corpus.validate()?;
    Ok((pairs, skipped))
}

fn paraphrase(
    backend: &dyn JudgeBackend,
    cfg: &GenerationConfig,
    of: &SummaryRecord,
    tag: &str,
) -> Result<SummaryRecord> {
    let prompt = fill_template(PARAPHRASE_TEMPLATE, &[("SUMMARY_TEXT", &of.text)]);
    let text = generate(backend, cfg, prompt)?;
    SummaryRecord::new(
        format!("{}::{tag}", of.summary_id),
        of.doc_id.clone(),
        text,
        SummaryOrigin::Paraphrase { of: of.summary_id.clone() },
    )
}

/// Per document: two paraphrases of one freshly generated summary, giving a
/// pair that is semantically equal but superficially different. A pair that
/// fails the content-equality heuristic is regenerated once, then dropped.
pub fn build_eq_pairs(
    corpus: &mut Corpus,
    backend: &dyn JudgeBackend,
    gen_cfg: &GenerationConfig,
) -> Result<(Vec<CandidatePair>, Vec<String>)> {
    let mut pairs = Vec::new();
    let mut skipped = Vec::new();
    let docs: Vec<DocumentRecord> = corpus.documents.clone();
    for doc in &docs {
        let base = match llm_summary(backend, gen_cfg, doc) {
            Ok(s) => s,
            Err(e) => {
                skipped.push(format!("{}: base generation failed: {e}", doc.doc_id));
                continue;
            }
        };
        let mut accepted = None;
        for attempt in 0..2 {
            let a = paraphrase(backend, gen_cfg, &base, &format!("para-a{attempt}"));
            let b = paraphrase(backend, gen_cfg, &base, &format!("para-b{attempt}"));
            match (a, b) {
                (Ok(a), Ok(b)) if content_equal(&a, &b) => {
                    accepted = Some((a, b));
                    break;
                }
                (Ok(_), Ok(_)) => continue, // equality check failed; one retry
                (Err(e), _) | (_, Err(e)) => {
                    skipped.push(format!("{}: paraphrase failed: {e}", doc.doc_id));
                    break;
                }
            }
        }
        let Some((a, b)) = accepted else {
            if !skipped.iter().any(|s| s.starts_with(&doc.doc_id)) {
                skipped.push(format!("{}: paraphrases never content-equal", doc.doc_id));
            }
            continue;
        };
        let pair = CandidatePair {
            pair_id: format!("{}::eq", doc.doc_id),
            doc_id: doc.doc_id.clone(),
            slot1: a.summary_id.clone(),
            slot2: b.summary_id.clone(),
            subset: PairSubset::EqPair,
        };
        corpus.summaries.push(base);
        corpus.summaries.push(a);
        corpus.summaries.push(b);
        corpus.pairs.push(pair.clone());
        pairs.push(pair);
    }
    corpus.validate()?;
    Ok((pairs, skipped))
}

/// Per document: the first available summary paired against itself. Only the
/// cue assignment will ever differ between the two slots.
pub fn build_single_relabel(corpus: &mut Corpus) -> Result<Vec<CandidatePair>> {
    let mut pairs = Vec::new();
    let mut new_summaries = Vec::new();
    for doc in &corpus.documents {
        let Some(base) = corpus.summaries.iter().find(|s| s.doc_id == doc.doc_id) else {
            continue;
        };
        let copy = SummaryRecord {
            summary_id: format!("{}::dup", base.summary_id),
            ..base.clone()
        };
        let pair = CandidatePair {
            pair_id: format!("{}::identical", doc.doc_id),
            doc_id: doc.doc_id.clone(),
            slot1: base.summary_id.clone(),
            slot2: copy.summary_id.clone(),
            subset: PairSubset::Identical,
        };
        new_summaries.push(copy);
        pairs.push(pair);
    }
    corpus.summaries.extend(new_summaries);
    corpus.pairs.extend(pairs.iter().cloned());
    corpus.validate()?;
    Ok(pairs)
}

/// Content-equality heuristic: identical after whitespace normalization, or
/// content-token-set Jaccard similarity at or above the threshold.
pub fn content_equal_with(a: &SummaryRecord, b: &SummaryRecord, threshold: f64) -> bool {
    let norm = |s: &str| s.split_whitespace().collect::<Vec<_>>().join(" ");
    if norm(&a.text) == norm(&b.text) {
        return true;
    }
    let ta: HashSet<String> = tokenize(&a.text).into_iter().collect();
    let tb: HashSet<String> = tokenize(&b.text).into_iter().collect();
    let union = ta.union(&tb).count();
    if union == 0 {
        return true;
    }
    let inter = ta.intersection(&tb).count();
    inter as f64 / union as f64 >= threshold
}

pub fn content_equal(a: &SummaryRecord, b: &SummaryRecord) -> bool {
    content_equal_with(a, b, DEFAULT_JACCARD)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::judgeclient::ScriptedMockJudge;
    use tempfile::tempdir;

    fn doc_line(id: &str, words: usize) -> String {
        let text = (0..words).map(|i| format!("word{i}")).collect::<Vec<_>>().join(" ");
        format!(r#"{{"doc_id":"{id}","text":"{text}.","topic":"test"}}"#)
    }

    fn write_docs(dir: &Path, lines: &[String]) {
        std::fs::write(dir.join("documents.jsonl"), lines.join("\n")).unwrap();
    }

    #[test]
    fn load_two_wellformed_lines() {
        let dir = tempdir().unwrap();
        write_docs(dir.path(), &[doc_line("d1", 600), doc_line("d2", 700)]);
        let (corpus, warnings) = load_corpus(dir.path()).unwrap();
        assert_eq!(corpus.documents.len(), 2);
        assert!(warnings.is_empty());
    }

    #[test]
    fn short_document_warns_but_loads() {
        let dir = tempdir().unwrap();
        write_docs(dir.path(), &[doc_line("d1", 50)]);
        let (corpus, warnings) = load_corpus(dir.path()).unwrap();
        assert_eq!(corpus.documents.len(), 1);
        assert_eq!(warnings.len(), 1);
        assert!(warnings[0].contains("d1"));
    }

    #[test]
    fn duplicate_doc_id_is_error() {
        let dir = tempdir().unwrap();
        write_docs(dir.path(), &[doc_line("d1", 600), doc_line("d1", 600)]);
        let err = load_corpus(dir.path()).unwrap_err();
        assert!(matches!(err, AuditError::DuplicateId(_)));
    }

    #[test]
    fn malformed_line_names_line_number() {
        let dir = tempdir().unwrap();
        write_docs(dir.path(), &[doc_line("d1", 600), "not json".to_string()]);
        let err = load_corpus(dir.path()).unwrap_err();
        match err {
            AuditError::CorpusLine { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn save_load_roundtrip() {
        let dir = tempdir().unwrap();
        write_docs(dir.path(), &[doc_line("d1", 600)]);
        let (mut corpus, _) = load_corpus(dir.path()).unwrap();
        corpus.summaries.push(
            SummaryRecord::new("s1", "d1", "some text.", SummaryOrigin::Llm).unwrap(),
        );
        let out = tempdir().unwrap();
        save_corpus(&corpus, out.path()).unwrap();
        let (reloaded, _) = load_corpus(out.path()).unwrap();
        assert_eq!(reloaded.documents.len(), 1);
        assert_eq!(reloaded.summaries.len(), 1);
    }

    fn natural_doc() -> String {
        let sents: Vec<String> = (0..40)
            .map(|i| format!("Topic{i} relates closely to subject{i} in the study."))
            .collect();
        format!(r#"{{"doc_id":"d1","text":"{}","topic":"t"}}"#, sents.join(" "))
    }

    #[test]
    fn standard_pairs_single_method() {
        let dir = tempdir().unwrap();
        write_docs(dir.path(), &[natural_doc()]);
        let (mut corpus, _) = load_corpus(dir.path()).unwrap();
        let mock = ScriptedMockJudge::constant("A generated abstract of the study topics.");
        let (pairs, skipped) = build_standard_pairs(
            &mut corpus,
            &[ExtractiveMethod::Textrank],
            &mock,
            &GenerationConfig::default(),
            &ExtractiveConfig::default(),
        )
        .unwrap();
        assert!(skipped.is_empty(), "{skipped:?}");
        assert_eq!(pairs.len(), 1);
        assert_eq!(pairs[0].subset, PairSubset::Standard);
        let s1 = corpus.summary(&pairs[0].slot1).unwrap();
        let s2 = corpus.summary(&pairs[0].slot2).unwrap();
        assert!(matches!(s1.origin, SummaryOrigin::Llm));
        assert!(matches!(s2.origin, SummaryOrigin::Extractive { method: ExtractiveMethod::Textrank }));
    }

    #[test]
    fn four_method_sweep_yields_head_to_head() {
        let dir = tempdir().unwrap();
        write_docs(dir.path(), &[natural_doc()]);
        let (mut corpus, _) = load_corpus(dir.path()).unwrap();
        let mock = ScriptedMockJudge::constant("A generated abstract of the study topics.");
        let (pairs, _) = build_standard_pairs(
            &mut corpus,
            &ExtractiveMethod::ALL,
            &mock,
            &GenerationConfig::default(),
            &ExtractiveConfig::default(),
        )
        .unwrap();
        assert_eq!(pairs.len(), 4);
        assert!(pairs.iter().all(|p| p.subset == PairSubset::HeadToHead));
    }

    #[test]
    fn empty_corpus_builds_nothing() {
        let mut corpus = Corpus::default();
        let mock = ScriptedMockJudge::constant("x");
        let (pairs, skipped) = build_standard_pairs(
            &mut corpus,
            &[ExtractiveMethod::Klsum],
            &mock,
            &GenerationConfig::default(),
            &ExtractiveConfig::default(),
        )
        .unwrap();
        assert!(pairs.is_empty() && skipped.is_empty());
        assert!(build_eq_pairs(&mut corpus, &mock, &GenerationConfig::default()).unwrap().0.is_empty());
        assert!(build_single_relabel(&mut corpus).unwrap().is_empty());
    }

    #[test]
    fn eq_pairs_differ_as_strings_but_content_equal() {
        let dir = tempdir().unwrap();
        write_docs(dir.path(), &[natural_doc()]);
        let (mut corpus, _) = load_corpus(dir.path()).unwrap();
        // paraphrase prompt contains the base summary; the mock varies only
        // word order, keeping the token set identical
        let mock = ScriptedMockJudge::sequential(vec![
            "Results indicate strong topical coherence overall.".into(),
            "Overall, results indicate strong topical coherence.".into(),
            "Strong topical coherence: results overall indicate.".into(),
        ]);
        let (pairs, skipped) =
            build_eq_pairs(&mut corpus, &mock, &GenerationConfig::default()).unwrap();
        assert!(skipped.is_empty(), "{skipped:?}");
        assert_eq!(pairs.len(), 1);
        let a = corpus.summary(&pairs[0].slot1).unwrap();
        let b = corpus.summary(&pairs[0].slot2).unwrap();
        assert_ne!(a.text, b.text);
        assert!(content_equal(a, b));
        assert_eq!(pairs[0].subset, PairSubset::EqPair);
    }

    #[test]
    fn single_relabel_pairs_identical_text() {
        let dir = tempdir().unwrap();
        write_docs(dir.path(), &[doc_line("d1", 600)]);
        let (mut corpus, _) = load_corpus(dir.path()).unwrap();
        corpus.summaries.push(
            SummaryRecord::new("s1", "d1", "the one summary.", SummaryOrigin::Llm).unwrap(),
        );
        let pairs = build_single_relabel(&mut corpus).unwrap();
        assert_eq!(pairs.len(), 1);
        assert_eq!(pairs[0].subset, PairSubset::Identical);
        let a = corpus.summary(&pairs[0].slot1).unwrap();
        let b = corpus.summary(&pairs[0].slot2).unwrap();
        assert_eq!(a.text, b.text);
        assert!(content_equal(a, b));
    }

    #[test]
    fn content_equal_identical_and_disjoint() {
        let a = SummaryRecord::new("a", "d", "alpha beta gamma", SummaryOrigin::Llm).unwrap();
        let b = SummaryRecord::new("b", "d", "alpha   beta\ngamma", SummaryOrigin::Llm).unwrap();
        assert!(content_equal(&a, &b));
        let c = SummaryRecord::new("c", "d", "delta epsilon zeta", SummaryOrigin::Llm).unwrap();
        assert!(!content_equal(&a, &c));
    }

    #[test]
    fn content_equal_jaccard_boundary() {
        // 9 shared content tokens of 10 total unique -> Jaccard exactly 0.9
        let shared = "alpha beta gamma delta epsilon zeta eta theta iota";
        let a = SummaryRecord::new("a", "d", shared, SummaryOrigin::Llm).unwrap();
        let b = SummaryRecord::new("b", "d", format!("{shared} kappa"), SummaryOrigin::Llm).unwrap();
        assert!(content_equal(&a, &b));
        // 8 of 10 -> 0.8, below threshold
        let c = SummaryRecord::new(
            "c",
            "d",
            "alpha beta gamma delta epsilon zeta eta theta kappa lambda",
            SummaryOrigin::Llm,
        )
        .unwrap();
        assert!(!content_equal(&a, &c));
    }
}
