//! Pluggable judge back-ends: an OpenAI-compatible chat-completion HTTP
//! client with retry and an append-only response cache, a scripted mock for
//! tests, and a parametric synthetic anchored judge used as the estimator
//! validation oracle.
//!
//! All back-ends implement [`JudgeBackend`] and must tolerate concurrent
//! callers. Judging calls always use temperature 0.

use std::collections::{BTreeMap, HashMap};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::core::{hex_lower, Verdict};
use crate::error::{AuditError, Result};

pub const ENV_API_BASE: &str = "CUEAUDIT_API_BASE";
pub const ENV_API_KEY: &str = "CUEAUDIT_API_KEY";

/// One chat message.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Message {
    pub role: String,
    pub content: String,
}

impl Message {
    pub fn user(content: impl Into<String>) -> Self {
        Self { role: "user".into(), content: content.into() }
    }
    pub fn assistant(content: impl Into<String>) -> Self {
        Self { role: "assistant".into(), content: content.into() }
    }
}

/// A completion request. `metadata` is a harness side-channel (trial
/// coordinates); the HTTP back-end ignores it and it is excluded from the
/// cache key.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletionRequest {
    pub messages: Vec<Message>,
    pub temperature: f64,
    pub max_tokens: u32,
    pub model_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed_hint: Option<u64>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub metadata: BTreeMap<String, String>,
}

impl CompletionRequest {
    pub fn judging(model_id: impl Into<String>, prompt: impl Into<String>, max_tokens: u32) -> Self {
        Self {
            messages: vec![Message::user(prompt)],
            temperature: 0.0,
            max_tokens,
            model_id: model_id.into(),
            seed_hint: None,
            metadata: BTreeMap::new(),
        }
    }

    /// Content hash over (model_id, messages, temperature, max_tokens).
    pub fn cache_key(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.model_id.as_bytes());
        h.update(b"\x1f");
        for m in &self.messages {
            h.update(m.role.as_bytes());
            h.update(b"\x1e");
            h.update(m.content.as_bytes());
            h.update(b"\x1f");
        }
        h.update(self.temperature.to_le_bytes());
        h.update(self.max_tokens.to_le_bytes());
        hex_lower(&h.finalize()[..16])
    }
}

/// A judge (or generator) completion back-end.
pub trait JudgeBackend: Send + Sync {
    fn complete(&self, request: &CompletionRequest) -> Result<String>;

    /// Network calls actually issued (cache misses). Mock and synthetic
    /// back-ends count invocations.
    fn calls_issued(&self) -> u64;
}

// ---------------------------------------------------------------------------
// Response cache
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct CacheEntry {
    key: String,
    reply: String,
}

/// Append-only JSON Lines cache with an in-memory index. Appends are
/// serialized through a single writer lock.
pub struct ResponseCache {
    path: PathBuf,
    index: Mutex<HashMap<String, String>>,
}

impl ResponseCache {
    pub fn open(path: impl Into<PathBuf>) -> Result<Self> {
        let path = path.into();
        let mut index = HashMap::new();
        if path.exists() {
            let data = std::fs::read_to_string(&path)?;
            for line in data.lines().filter(|l| !l.trim().is_empty()) {
                let entry: CacheEntry = serde_json::from_str(line)
                    .map_err(|e| AuditError::Parse(format!("cache line: {e}")))?;
                index.insert(entry.key, entry.reply);
            }
        }
        Ok(Self { path, index: Mutex::new(index) })
    }

    pub fn get(&self, key: &str) -> Option<String> {
        self.index.lock().unwrap().get(key).cloned()
    }

    pub fn put(&self, key: &str, reply: &str) -> Result<()> {
        let mut index = self.index.lock().unwrap();
        if index.contains_key(key) {
            return Ok(());
        }
        let entry = CacheEntry { key: key.to_string(), reply: reply.to_string() };
        let mut f = std::fs::OpenOptions::new().create(true).append(true).open(&self.path)?;
        writeln!(f, "{}", serde_json::to_string(&entry)?)?;
        index.insert(key.to_string(), reply.to_string());
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.index.lock().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

// ---------------------------------------------------------------------------
// HTTP client (OpenAI-compatible chat completions)
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct RetryPolicy {
    pub max_attempts: u32,
    pub backoff: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self { max_attempts: 3, backoff: Duration::from_millis(100) }
    }
}

/// Chat-completion client for any OpenAI-compatible endpoint. Retries with
/// exponential backoff on transport errors and 5xx; caches every
/// request/response pair so a replayed experiment issues zero network calls.
pub struct HttpJudgeClient {
    base_url: String,
    api_key: Option<String>,
    retry: RetryPolicy,
    cache: Option<ResponseCache>,
    http: reqwest::blocking::Client,
    issued: AtomicU64,
}

#[derive(Serialize)]
struct ChatRequestBody<'a> {
    model: &'a str,
    messages: &'a [Message],
    temperature: f64,
    max_tokens: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
}

#[derive(Deserialize)]
struct ChatResponseBody {
    choices: Vec<ChatChoice>,
}

#[derive(Deserialize)]
struct ChatChoice {
    message: Message,
}

impl HttpJudgeClient {
    pub fn new(base_url: impl Into<String>, api_key: Option<String>, retry: RetryPolicy) -> Self {
        Self {
            base_url: base_url.into(),
            api_key,
            retry,
            cache: None,
            http: reqwest::blocking::Client::new(),
            issued: AtomicU64::new(0),
        }
    }

    /// Reads endpoint and key from `CUEAUDIT_API_BASE` / `CUEAUDIT_API_KEY`.
    pub fn from_env() -> Result<Self> {
        let base = std::env::var(ENV_API_BASE)
            .map_err(|_| AuditError::Config(format!("{ENV_API_BASE} is not set")))?;
        let key = std::env::var(ENV_API_KEY).ok();
        Ok(Self::new(base, key, RetryPolicy::default()))
    }

    pub fn with_cache(mut self, path: impl AsRef<Path>) -> Result<Self> {
        self.cache = Some(ResponseCache::open(path.as_ref())?);
        Ok(self)
    }

    fn post_once(&self, request: &CompletionRequest) -> std::result::Result<String, (bool, String)> {
        let body = ChatRequestBody {
            model: &request.model_id,
            messages: &request.messages,
            temperature: request.temperature,
            max_tokens: request.max_tokens,
            seed: request.seed_hint,
        };
        let url = format!("{}/chat/completions", self.base_url.trim_end_matches('/'));
        let mut req = self.http.post(&url).json(&body);
        if let Some(key) = &self.api_key {
            req = req.bearer_auth(key);
        }
        let resp = req.send().map_err(|e| (true, e.to_string()))?;
        let status = resp.status();
        let text = resp.text().map_err(|e| (true, e.to_string()))?;
        if status.is_success() {
            let parsed: ChatResponseBody =
                serde_json::from_str(&text).map_err(|e| (false, format!("bad response body: {e}")))?;
            parsed
                .choices
                .first()
                .map(|c| c.message.content.clone())
                .ok_or_else(|| (false, "response had no choices".to_string()))
        } else if status.is_server_error() {
            Err((true, format!("status {status}: {text}")))
        } else {
            Err((false, format!("{}|{}", status.as_u16(), text)))
        }
    }
}

impl JudgeBackend for HttpJudgeClient {
    fn complete(&self, request: &CompletionRequest) -> Result<String> {
        let key = request.cache_key();
        if let Some(cache) = &self.cache {
            if let Some(hit) = cache.get(&key) {
                return Ok(hit);
            }
        }
        self.issued.fetch_add(1, Ordering::Relaxed);
        let mut last_err = String::new();
        for attempt in 0..self.retry.max_attempts {
            match self.post_once(request) {
                Ok(reply) => {
                    if let Some(cache) = &self.cache {
                        cache.put(&key, &reply)?;
                    }
                    return Ok(reply);
                }
                Err((retryable, msg)) => {
                    if !retryable {
                        if let Some((status, body)) = msg.split_once('|') {
                            if let Ok(code) = status.parse::<u16>() {
                                return Err(AuditError::Api { status: code, msg: body.to_string() });
                            }
                        }
                        return Err(AuditError::Parse(msg));
                    }
                    last_err = msg;
                    if attempt + 1 < self.retry.max_attempts {
                        std::thread::sleep(self.retry.backoff * 2u32.pow(attempt));
                    }
                }
            }
        }
        Err(AuditError::Transport { attempts: self.retry.max_attempts, msg: last_err })
    }

    fn calls_issued(&self) -> u64 {
        self.issued.load(Ordering::Relaxed)
    }
}

// ---------------------------------------------------------------------------
// Scripted mock
// ---------------------------------------------------------------------------

/// Deterministic replies keyed by prompt digest (the request cache key), or
/// a default reply for any prompt. In strict mode an unscripted prompt is an
/// error naming the digest.
pub struct ScriptedMockJudge {
    script: HashMap<String, String>,
    default_reply: Option<String>,
    queue: Mutex<std::collections::VecDeque<String>>,
    issued: AtomicU64,
}

impl ScriptedMockJudge {
    pub fn strict(script: HashMap<String, String>) -> Self {
        Self {
            script,
            default_reply: None,
            queue: Mutex::new(Default::default()),
            issued: AtomicU64::new(0),
        }
    }

    /// Mock that plays back replies in order; falls back to the last reply
    /// once the queue is exhausted.
    pub fn sequential(replies: Vec<String>) -> Self {
        let last = replies.last().cloned();
        Self {
            script: HashMap::new(),
            default_reply: last,
            queue: Mutex::new(replies.into()),
            issued: AtomicU64::new(0),
        }
    }

    /// Mock that answers every prompt with the same reply.
    pub fn constant(reply: impl Into<String>) -> Self {
        Self {
            script: HashMap::new(),
            default_reply: Some(reply.into()),
            queue: Mutex::new(Default::default()),
            issued: AtomicU64::new(0),
        }
    }

    /// Mock that always returns the given verdict as well-formed JSON.
    pub fn always(verdict: Verdict, explanation: &str) -> Self {
        let v = serde_json::to_string(&verdict).unwrap();
        Self::constant(format!("{{\"verdict\": {v}, \"explanation\": \"{explanation}\"}}"))
    }
}

impl JudgeBackend for ScriptedMockJudge {
    fn complete(&self, request: &CompletionRequest) -> Result<String> {
        self.issued.fetch_add(1, Ordering::Relaxed);
        if let Some(next) = self.queue.lock().unwrap().pop_front() {
            return Ok(next);
        }
        let digest = request.cache_key();
        if let Some(reply) = self.script.get(&digest) {
            return Ok(reply.clone());
        }
        match &self.default_reply {
            Some(r) => Ok(r.clone()),
            None => Err(AuditError::UnscriptedPrompt(digest)),
        }
    }

    fn calls_issued(&self) -> u64 {
        self.issued.load(Ordering::Relaxed)
    }
}

// ---------------------------------------------------------------------------
// Synthetic anchored judge
// ---------------------------------------------------------------------------

/// Parameters of the synthetic anchored judge used for estimator validation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticJudgeParams {
    pub base_p12: f64,
    pub base_tie: f64,
    /// Probability of switching to the label-favored outcome when a cue is
    /// visible.
    pub anchor_prob: f64,
    /// Probability of emitting label-aligned rhetoric when cued.
    pub rationalize_prob: f64,
    pub seed: u64,
    #[serde(default = "default_favored_bank")]
    pub favored_bank: Vec<String>,
    #[serde(default = "default_neutral_bank")]
    pub neutral_bank: Vec<String>,
}

fn default_favored_bank() -> Vec<String> {
    vec![
        "This summary was written by a large language model and shows superior coverage.".into(),
        "The language model output is clearly more fluent and complete.".into(),
    ]
}

fn default_neutral_bank() -> Vec<String> {
    vec![
        "Both summaries cover the main points of the document.".into(),
        "The candidates are close in coverage and readability.".into(),
    ]
}

impl SyntheticJudgeParams {
    pub fn new(base_p12: f64, base_tie: f64, anchor_prob: f64, rationalize_prob: f64, seed: u64) -> Result<Self> {
        if base_p12 + base_tie > 1.0 + 1e-12 {
            return Err(AuditError::Config("base_p12 + base_tie must be <= 1".into()));
        }
        Ok(Self {
            base_p12,
            base_tie,
            anchor_prob,
            rationalize_prob,
            seed,
            favored_bank: default_favored_bank(),
            neutral_bank: default_neutral_bank(),
        })
    }
}

/// Reasons in canonical space: the base outcome is drawn per
/// (pair, judge, protocol) so the Blind and cued cells are exactly paired,
/// the cue switch is drawn per probe, and the display verdict is produced by
/// applying the presentation permutation. Canonicalization downstream is
/// thereby exercised by construction.
pub struct SyntheticJudge {
    params: SyntheticJudgeParams,
    issued: AtomicU64,
}

/// Stable seed derivation from string coordinates plus a base seed.
pub fn derived_seed(parts: &[&str], base: u64) -> u64 {
    let mut h = Sha256::new();
    h.update(base.to_le_bytes());
    for p in parts {
        h.update(p.as_bytes());
        h.update(b"\x1f");
    }
    let d = h.finalize();
    u64::from_le_bytes(d[..8].try_into().unwrap())
}

impl SyntheticJudge {
    pub fn new(params: SyntheticJudgeParams) -> Self {
        Self { params, issued: AtomicU64::new(0) }
    }

    fn meta<'a>(request: &'a CompletionRequest, key: &str) -> &'a str {
        request.metadata.get(key).map(|s| s.as_str()).unwrap_or("")
    }
}

impl JudgeBackend for SyntheticJudge {
    fn complete(&self, request: &CompletionRequest) -> Result<String> {
        self.issued.fetch_add(1, Ordering::Relaxed);
        let pair_id = Self::meta(request, "pair_id");
        let judge_id = Self::meta(request, "judge_id");
        let protocol = Self::meta(request, "protocol");
        let probe = Self::meta(request, "probe");
        let phase = Self::meta(request, "phase");
        let perm = Self::meta(request, "perm");
        let favored = Self::meta(request, "favored_canonical");

        // base outcome: identical draw across probes for the same cell
        let mut base_rng = ChaCha8Rng::seed_from_u64(derived_seed(
            &[pair_id, judge_id, protocol, "base"],
            self.params.seed,
        ));
        let u: f64 = base_rng.gen();
        let mut canonical = if u < self.params.base_p12 {
            Verdict::Order12
        } else if u < self.params.base_p12 + self.params.base_tie {
            Verdict::Tie
        } else {
            Verdict::Order21
        };

        let cued = !favored.is_empty();
        let mut rationalized = false;
        if cued {
            let mut cue_rng = ChaCha8Rng::seed_from_u64(derived_seed(
                &[pair_id, judge_id, protocol, probe, phase, "cue"],
                self.params.seed,
            ));
            if cue_rng.gen_bool(self.params.anchor_prob) {
                canonical = match favored {
                    "12" => Verdict::Order12,
                    "21" => Verdict::Order21,
                    other => {
                        return Err(AuditError::Config(format!(
                            "bad favored_canonical metadata: {other}"
                        )))
                    }
                };
            }
            rationalized = cue_rng.gen_bool(self.params.rationalize_prob);
        }

        // express in display space; the harness canonicalizes it back
        let display = match perm {
            "swap" => crate::core::canonicalize_verdict(canonical, crate::core::Perm::Swap),
            _ => canonical,
        };

        let bank = if cued && rationalized { &self.params.favored_bank } else { &self.params.neutral_bank };
        let mut text_rng = ChaCha8Rng::seed_from_u64(derived_seed(
            &[pair_id, judge_id, protocol, probe, phase, "text"],
            self.params.seed,
        ));
        let explanation = &bank[text_rng.gen_range(0..bank.len())];

        Ok(format!(
            "{{\"verdict\": {}, \"explanation\": {}}}",
            serde_json::to_string(&display)?,
            serde_json::to_string(explanation)?
        ))
    }

    fn calls_issued(&self) -> u64 {
        self.issued.load(Ordering::Relaxed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synth_request(pair: &str, probe: &str, favored: &str, perm: &str) -> CompletionRequest {
        let mut req = CompletionRequest::judging("synthetic", "prompt", 64);
        req.metadata.insert("pair_id".into(), pair.into());
        req.metadata.insert("judge_id".into(), "j".into());
        req.metadata.insert("protocol".into(), "baseline".into());
        req.metadata.insert("probe".into(), probe.into());
        req.metadata.insert("perm".into(), perm.into());
        if !favored.is_empty() {
            req.metadata.insert("favored_canonical".into(), favored.into());
        }
        req
    }

    fn verdict_of(reply: &str) -> Verdict {
        let v: serde_json::Value = serde_json::from_str(reply).unwrap();
        serde_json::from_value(v["verdict"].clone()).unwrap()
    }

    #[test]
    fn cache_key_ignores_metadata() {
        let a = synth_request("p1", "B", "", "identity");
        let mut b = a.clone();
        b.metadata.insert("extra".into(), "x".into());
        assert_eq!(a.cache_key(), b.cache_key());
    }

    #[test]
    fn scripted_mock_strict_errors_on_unknown() {
        let mock = ScriptedMockJudge::strict(HashMap::new());
        let err = mock.complete(&synth_request("p", "B", "", "identity")).unwrap_err();
        assert!(matches!(err, AuditError::UnscriptedPrompt(_)));
    }

    #[test]
    fn scripted_mock_replays_identically() {
        let mock = ScriptedMockJudge::always(Verdict::Tie, "equal");
        let r1 = mock.complete(&synth_request("p", "B", "", "identity")).unwrap();
        let r2 = mock.complete(&synth_request("p", "B", "", "identity")).unwrap();
        assert_eq!(r1, r2);
        assert_eq!(verdict_of(&r1), Verdict::Tie);
    }

    #[test]
    fn synthetic_q0_matches_blind_exactly_per_pair() {
        let judge =
            SyntheticJudge::new(SyntheticJudgeParams::new(0.5, 0.0, 0.0, 0.0, 11).unwrap());
        for i in 0..200 {
            let pid = format!("p{i}");
            let blind = judge.complete(&synth_request(&pid, "B", "", "identity")).unwrap();
            let cued = judge.complete(&synth_request(&pid, "T", "12", "identity")).unwrap();
            assert_eq!(verdict_of(&blind), verdict_of(&cued));
        }
    }

    #[test]
    fn synthetic_q1_always_favored() {
        let judge =
            SyntheticJudge::new(SyntheticJudgeParams::new(0.5, 0.0, 1.0, 0.0, 11).unwrap());
        for i in 0..100 {
            let pid = format!("p{i}");
            let cued = judge.complete(&synth_request(&pid, "T", "12", "identity")).unwrap();
            assert_eq!(verdict_of(&cued), Verdict::Order12);
        }
    }

    #[test]
    fn synthetic_canonical_distribution_invariant_under_perm() {
        let judge =
            SyntheticJudge::new(SyntheticJudgeParams::new(0.6, 0.1, 0.0, 0.0, 3).unwrap());
        for i in 0..100 {
            let pid = format!("p{i}");
            let ident = verdict_of(&judge.complete(&synth_request(&pid, "B", "", "identity")).unwrap());
            let swapped = verdict_of(&judge.complete(&synth_request(&pid, "B", "", "swap")).unwrap());
            // re-canonicalizing the swapped display verdict recovers identity
            assert_eq!(crate::core::canonicalize_verdict(swapped, crate::core::Perm::Swap), ident);
        }
    }

    #[test]
    fn response_cache_roundtrip_and_replay() {
        let dir = std::env::temp_dir().join(format!("cueaudit-cache-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("cache.jsonl");
        let _ = std::fs::remove_file(&path);
        {
            let cache = ResponseCache::open(&path).unwrap();
            cache.put("k1", "reply one").unwrap();
            cache.put("k1", "ignored duplicate").unwrap();
        }
        let cache = ResponseCache::open(&path).unwrap();
        assert_eq!(cache.len(), 1);
        assert_eq!(cache.get("k1").as_deref(), Some("reply one"));
        std::fs::remove_file(&path).unwrap();
    }
}
