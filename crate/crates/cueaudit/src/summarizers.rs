//! The four traditional extractive systems used to build TradML candidates:
//! TextRank, LexRank, KL-Sum, and SumBasic.
//!
//! All four are deterministic: same input and config give byte-identical
//! output. Output sentences are a subset of input sentences, emitted in
//! original document order. Ties break toward the earliest document position.
//!
//! Tokenization is lowercase, split on non-alphanumeric characters, with the
//! built-in stopword list below dropped.

use crate::core::{DocumentRecord, ExtractiveMethod, SummaryOrigin, SummaryRecord};
use crate::error::{AuditError, Result};
use std::collections::{BTreeMap, BTreeSet};

/// Built-in stopword list. Fixed so that summaries are reproducible without
/// any external resource.
pub const STOPWORDS: &[&str] = &[
    "a", "an", "and", "are", "as", "at", "be", "been", "but", "by", "for", "from", "had", "has",
    "have", "he", "her", "his", "i", "if", "in", "into", "is", "it", "its", "not", "of", "on",
    "or", "she", "so", "that", "the", "their", "them", "then", "there", "these", "they", "this",
    "to", "was", "we", "were", "which", "will", "with", "you",
];

/// Sentence boundaries with byte offsets that slice the source text exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct SentenceSplit {
    pub sentences: Vec<Sentence>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sentence {
    pub text: String,
    pub start_offset: usize,
    pub end_offset: usize,
}

/// Hyperparameters for the extractive systems.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtractiveConfig {
    pub target_sentences: usize,
    pub damping: f64,
    pub lexrank_threshold: f64,
    pub power_iter_tol: f64,
    pub power_iter_max: usize,
}

impl Default for ExtractiveConfig {
    fn default() -> Self {
        Self {
            target_sentences: 5,
            damping: 0.85,
            lexrank_threshold: 0.1,
            power_iter_tol: 1e-6,
            power_iter_max: 100,
        }
    }
}

/// Deterministic sentence split: a boundary is sentence-final punctuation
/// (`.`, `!`, `?`) followed by whitespace and an uppercase letter, or end of
/// text. Abbreviations are not specially handled (documented limitation).
/// Text with no boundary yields a single-sentence split.
pub fn split_sentences(text: &str) -> Result<SentenceSplit> {
    if text.is_empty() {
        return Err(AuditError::InvalidInput("cannot split empty text".into()));
    }
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut sentences = Vec::new();
    let mut start = 0usize;
    let mut i = 0usize;
    while i < chars.len() {
        let (_, c) = chars[i];
        if c == '.' || c == '!' || c == '?' {
            // consume any run of trailing whitespace after the punctuation
            let mut j = i + 1;
            while j < chars.len() && chars[j].1.is_whitespace() {
                j += 1;
            }
            let saw_ws = j > i + 1;
            if j >= chars.len() || (saw_ws && chars[j].1.is_uppercase()) {
                let end = if j >= chars.len() { text.len() } else { chars[j].0 };
                sentences.push(Sentence {
                    text: text[start..end].to_string(),
                    start_offset: start,
                    end_offset: end,
                });
                start = end;
                i = j;
                continue;
            }
        }
        i += 1;
    }
    if start < text.len() {
        sentences.push(Sentence {
            text: text[start..].to_string(),
            start_offset: start,
            end_offset: text.len(),
        });
    }
    Ok(SentenceSplit { sentences })
}

/// Lowercase, split on non-alphanumeric, drop stopwords.
pub fn tokenize(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty() && !STOPWORDS.contains(t))
        .map(|t| t.to_string())
        .collect()
}

fn sentence_tokens(split: &SentenceSplit) -> Vec<Vec<String>> {
    split.sentences.iter().map(|s| tokenize(&s.text)).collect()
}

/// Joins selected sentences (by index, sorted ascending) with single spaces.
fn emit(split: &SentenceSplit, mut selected: Vec<usize>) -> String {
    selected.sort_unstable();
    selected
        .iter()
        .map(|&i| split.sentences[i].text.trim())
        .collect::<Vec<_>>()
        .join(" ")
}

fn make_record(doc: &DocumentRecord, method: ExtractiveMethod, text: String) -> Result<SummaryRecord> {
    SummaryRecord::new(
        format!("{}-{}", doc.doc_id, method.as_str()),
        doc.doc_id.clone(),
        text,
        SummaryOrigin::Extractive { method },
    )
}

/// Top-k indices by score, earliest position winning ties.
fn top_k_by_score(scores: &[f64], k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap().then(a.cmp(&b)));
    idx.truncate(k);
    idx
}

/// Damped power iteration over a row-stochastic transition built from `weights`
/// (symmetric similarity matrix). Returns None when every row is zero or the
/// iteration fails to converge, signalling the uniform fallback.
fn power_iteration(weights: &[Vec<f64>], damping: f64, tol: f64, max_iter: usize) -> Option<Vec<f64>> {
    let n = weights.len();
    let row_sums: Vec<f64> = weights.iter().map(|r| r.iter().sum()).collect();
    if row_sums.iter().all(|&s| s <= 0.0) {
        return None;
    }
    let mut scores = vec![1.0 / n as f64; n];
    for _ in 0..max_iter {
        let mut next = vec![(1.0 - damping) / n as f64; n];
        for j in 0..n {
            if row_sums[j] <= 0.0 {
                // dangling node: spread uniformly
                for item in next.iter_mut() {
                    *item += damping * scores[j] / n as f64;
                }
            } else {
                for i in 0..n {
                    if weights[j][i] > 0.0 {
                        next[i] += damping * scores[j] * weights[j][i] / row_sums[j];
                    }
                }
            }
        }
        let delta = scores
            .iter()
            .zip(&next)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        scores = next;
        if delta < tol {
            return Some(scores);
        }
    }
    None
}

/// TextRank: sentence graph weighted by normalized word-overlap similarity,
/// damped power iteration, top-k in document order.
pub fn textrank(doc: &DocumentRecord, cfg: &ExtractiveConfig) -> Result<SummaryRecord> {
    let split = split_sentences(&doc.text)?;
    let toks = sentence_tokens(&split);
    let n = toks.len();
    let k = cfg.target_sentences.min(n);

    let sets: Vec<BTreeSet<&String>> = toks.iter().map(|t| t.iter().collect()).collect();
    let mut weights = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in (i + 1)..n {
            let overlap = sets[i].intersection(&sets[j]).count() as f64;
            if overlap == 0.0 {
                continue;
            }
            let denom = (toks[i].len() as f64).ln() + (toks[j].len() as f64).ln();
            let w = if denom > 0.0 { overlap / denom } else { overlap };
            weights[i][j] = w;
            weights[j][i] = w;
        }
    }

    let selected = match power_iteration(&weights, cfg.damping, cfg.power_iter_tol, cfg.power_iter_max) {
        Some(scores) => top_k_by_score(&scores, k),
        None => (0..k).collect(),
    };
    make_record(doc, ExtractiveMethod::Textrank, emit(&split, selected))
}

fn tf_idf_vectors(toks: &[Vec<String>]) -> Vec<BTreeMap<String, f64>> {
    let n = toks.len() as f64;
    let mut df: BTreeMap<&String, usize> = BTreeMap::new();
    for t in toks {
        for w in t.iter().collect::<BTreeSet<_>>() {
            *df.entry(w).or_insert(0) += 1;
        }
    }
    toks.iter()
        .map(|t| {
            let mut tf: BTreeMap<String, f64> = BTreeMap::new();
            for w in t {
                *tf.entry(w.clone()).or_insert(0.0) += 1.0;
            }
            for (w, v) in tf.iter_mut() {
                let idf = (n / df[w] as f64).ln();
                *v *= idf;
            }
            tf
        })
        .collect()
}

fn cosine_sparse(a: &BTreeMap<String, f64>, b: &BTreeMap<String, f64>) -> f64 {
    let dot: f64 = a
        .iter()
        .filter_map(|(w, va)| b.get(w).map(|vb| va * vb))
        .sum();
    let na: f64 = a.values().map(|v| v * v).sum::<f64>().sqrt();
    let nb: f64 = b.values().map(|v| v * v).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

/// LexRank: TF-IDF cosine similarity graph, edges below the threshold
/// dropped, rows degree-normalized, damped power iteration, top-k in
/// document order. An all-zero graph falls back to uniform scores and the
/// first k sentences.
pub fn lexrank(doc: &DocumentRecord, cfg: &ExtractiveConfig) -> Result<SummaryRecord> {
    let split = split_sentences(&doc.text)?;
    let toks = sentence_tokens(&split);
    let n = toks.len();
    let k = cfg.target_sentences.min(n);

    let vecs = tf_idf_vectors(&toks);
    let mut weights = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in (i + 1)..n {
            let sim = cosine_sparse(&vecs[i], &vecs[j]);
            if sim >= cfg.lexrank_threshold {
                weights[i][j] = sim;
                weights[j][i] = sim;
            }
        }
    }

    let selected = match power_iteration(&weights, cfg.damping, cfg.power_iter_tol, cfg.power_iter_max) {
        Some(scores) => top_k_by_score(&scores, k),
        None => (0..k).collect(),
    };
    make_record(doc, ExtractiveMethod::Lexrank, emit(&split, selected))
}

/// SumBasic: repeatedly select the sentence maximizing mean word probability,
/// then square the probability of every word in the chosen sentence.
pub fn sumbasic(doc: &DocumentRecord, cfg: &ExtractiveConfig) -> Result<SummaryRecord> {
    let split = split_sentences(&doc.text)?;
    let toks = sentence_tokens(&split);
    let n = toks.len();
    let k = cfg.target_sentences.min(n);

    let total: usize = toks.iter().map(|t| t.len()).sum();
    let mut probs: BTreeMap<String, f64> = BTreeMap::new();
    for t in &toks {
        for w in t {
            *probs.entry(w.clone()).or_insert(0.0) += 1.0;
        }
    }
    if total > 0 {
        for v in probs.values_mut() {
            *v /= total as f64;
        }
    }

    let mut pool: Vec<usize> = (0..n).collect();
    let mut selected = Vec::new();
    for _ in 0..k {
        let best = *pool
            .iter()
            .min_by(|&&a, &&b| {
                let sa = mean_prob(&toks[a], &probs);
                let sb = mean_prob(&toks[b], &probs);
                sb.partial_cmp(&sa).unwrap().then(a.cmp(&b))
            })
            .expect("pool nonempty");
        selected.push(best);
        pool.retain(|&i| i != best);
        for w in &toks[best] {
            if let Some(p) = probs.get_mut(w) {
                *p *= *p;
            }
        }
    }
    make_record(doc, ExtractiveMethod::Sumbasic, emit(&split, selected))
}

fn mean_prob(tokens: &[String], probs: &BTreeMap<String, f64>) -> f64 {
    if tokens.is_empty() {
        return 0.0;
    }
    tokens.iter().map(|w| probs.get(w).copied().unwrap_or(0.0)).sum::<f64>() / tokens.len() as f64
}

/// KL divergence between two add-one-smoothed unigram distributions over the
/// document vocabulary. Smoothing both sides makes the whole-document summary
/// an exact zero.
pub fn kl_divergence(
    doc_counts: &BTreeMap<String, usize>,
    summary_counts: &BTreeMap<String, usize>,
) -> f64 {
    let vocab = doc_counts.len() as f64;
    let doc_total: usize = doc_counts.values().sum();
    let sum_total: usize = summary_counts.values().sum();
    let mut kl = 0.0;
    for (w, &dc) in doc_counts {
        let sc = summary_counts.get(w).copied().unwrap_or(0);
        let p = (dc as f64 + 1.0) / (doc_total as f64 + vocab);
        let q = (sc as f64 + 1.0) / (sum_total as f64 + vocab);
        kl += p * (p / q).ln();
    }
    kl
}

/// KL-Sum: greedy selection minimizing KL(document ‖ summary) under add-one
/// smoothing; the objective is monotonically non-increasing across steps.
pub fn klsum(doc: &DocumentRecord, cfg: &ExtractiveConfig) -> Result<SummaryRecord> {
    let split = split_sentences(&doc.text)?;
    let toks = sentence_tokens(&split);
    let n = toks.len();
    let k = cfg.target_sentences.min(n);

    let mut doc_counts: BTreeMap<String, usize> = BTreeMap::new();
    for t in &toks {
        for w in t {
            *doc_counts.entry(w.clone()).or_insert(0) += 1;
        }
    }

    let mut summary_counts: BTreeMap<String, usize> = BTreeMap::new();
    let mut pool: Vec<usize> = (0..n).collect();
    let mut selected = Vec::new();
    for _ in 0..k {
        let mut best: Option<(usize, f64)> = None;
        for &cand in &pool {
            let mut trial_counts = summary_counts.clone();
            for w in &toks[cand] {
                *trial_counts.entry(w.clone()).or_insert(0) += 1;
            }
            let kl = kl_divergence(&doc_counts, &trial_counts);
            match best {
                Some((_, bkl)) if kl >= bkl => {}
                _ => best = Some((cand, kl)),
            }
        }
        let (chosen, _) = best.expect("pool nonempty");
        selected.push(chosen);
        pool.retain(|&i| i != chosen);
        for w in &toks[chosen] {
            *summary_counts.entry(w.clone()).or_insert(0) += 1;
        }
    }
    make_record(doc, ExtractiveMethod::Klsum, emit(&split, selected))
}

/// Dispatch by method tag.
pub fn summarize(doc: &DocumentRecord, method: ExtractiveMethod, cfg: &ExtractiveConfig) -> Result<SummaryRecord> {
    match method {
        ExtractiveMethod::Textrank => textrank(doc, cfg),
        ExtractiveMethod::Lexrank => lexrank(doc, cfg),
        ExtractiveMethod::Klsum => klsum(doc, cfg),
        ExtractiveMethod::Sumbasic => sumbasic(doc, cfg),
    }
}
