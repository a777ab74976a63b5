//! Embedding providers and the tie-aware metric suite: equality detection,
//! neutrality deviation, outcome-shift decomposition with label-anchored
//! share, rationale-anchoring scores, revision susceptibility, and seeded
//! pair-level bootstrap intervals.

use std::collections::{BTreeMap, HashMap, HashSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::core::{OutcomeDistribution, ParseStatus, Probe, Trial, Verdict};
use crate::error::{AuditError, Result};

pub const DEFAULT_EPSILON: f64 = 1e-9;
pub const DEFAULT_TAU: f64 = 0.3;

// ---------------------------------------------------------------------------
// Embeddings
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingVector {
    pub values: Vec<f64>,
    pub dim: usize,
    pub provider_id: String,
}

impl EmbeddingVector {
    pub fn new(values: Vec<f64>, provider_id: impl Into<String>) -> Result<Self> {
        let dim = values.len();
        if dim == 0 {
            return Err(AuditError::Embedding("zero-dimensional vector".into()));
        }
        let norm: f64 = values.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm <= 0.0 || !norm.is_finite() {
            return Err(AuditError::Embedding("zero or non-finite vector norm".into()));
        }
        Ok(Self { values, dim, provider_id: provider_id.into() })
    }

    fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

pub trait EmbeddingProvider: Send + Sync {
    fn provider_id(&self) -> &str;
    fn embed(&self, text: &str) -> Result<EmbeddingVector>;
}

/// Deterministic hashed bag-of-words vectorizer for offline analysis and
/// tests: FNV-1a token hashing into a fixed number of buckets, L2-normalized.
/// Stable across platforms and runs by construction.
pub struct HashedBowProvider {
    pub dim: usize,
}

impl Default for HashedBowProvider {
    fn default() -> Self {
        Self { dim: 256 }
    }
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

impl EmbeddingProvider for HashedBowProvider {
    fn provider_id(&self) -> &str {
        "hashed-bow-256"
    }

    fn embed(&self, text: &str) -> Result<EmbeddingVector> {
        if text.trim().is_empty() {
            return Err(AuditError::Embedding("cannot embed empty text".into()));
        }
        let mut values = vec![0.0f64; self.dim];
        let mut any = false;
        for token in text
            .split(|c: char| !c.is_alphanumeric())
            .filter(|t| !t.is_empty())
            .map(str::to_lowercase)
        {
            let bucket = (fnv1a(token.as_bytes()) % self.dim as u64) as usize;
            values[bucket] += 1.0;
            any = true;
        }
        if !any {
            return Err(AuditError::Embedding("no tokens to embed".into()));
        }
        let norm: f64 = values.iter().map(|v| v * v).sum::<f64>().sqrt();
        for v in &mut values {
            *v /= norm;
        }
        EmbeddingVector::new(values, self.provider_id())
    }
}

fn check_comparable(x: &EmbeddingVector, y: &EmbeddingVector) -> Result<()> {
    if x.provider_id != y.provider_id || x.dim != y.dim {
        return Err(AuditError::ProviderMismatch(
            format!("{}({})", x.provider_id, x.dim),
            format!("{}({})", y.provider_id, y.dim),
        ));
    }
    Ok(())
}

pub fn cosine(x: &EmbeddingVector, y: &EmbeddingVector) -> Result<f64> {
    check_comparable(x, y)?;
    let dot: f64 = x.values.iter().zip(&y.values).map(|(a, b)| a * b).sum();
    Ok((dot / (x.norm() * y.norm())).clamp(-1.0, 1.0))
}

/// Normalized cosine distance: 0 for identical direction, 0.5 for
/// orthogonal, 1 for antipodal.
pub fn dist(x: &EmbeddingVector, y: &EmbeddingVector) -> Result<f64> {
    Ok(((1.0 - cosine(x, y)?) / 2.0).clamp(0.0, 1.0))
}

// ---------------------------------------------------------------------------
// Descriptor texts for the rationale classifier
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Descriptors {
    pub fav_text: String,
    pub opp_text: String,
}

impl Default for Descriptors {
    fn default() -> Self {
        Self {
            fav_text: "This summary was written by a large language model.".into(),
            opp_text: "This summary was produced by a traditional extractive algorithm.".into(),
        }
    }
}

/// Hard ternary rationale classifier: 1 when the explanation is closer to
/// the favored descriptor, 0 when closer to the opposite, 0.5 on a tie.
/// Exactly one branch fires for every input.
pub fn alpha(
    explanation: &EmbeddingVector,
    d_fav: &EmbeddingVector,
    d_opp: &EmbeddingVector,
) -> Result<f64> {
    let cf = cosine(explanation, d_fav)?;
    let co = cosine(explanation, d_opp)?;
    Ok(if (cf - co).abs() < 1e-12 {
        0.5
    } else if cf > co {
        1.0
    } else {
        0.0
    })
}

// ---------------------------------------------------------------------------
// Outcome metrics
// ---------------------------------------------------------------------------

fn parsed(trial: &Trial) -> Option<Verdict> {
    if trial.parse_status == ParseStatus::Failed {
        None
    } else {
        trial.verdict_canonical
    }
}

/// Equality Detection Rate: fraction of Blind trials on the designated
/// equal-quality pairs that end in a tie. `None` when the cell is empty.
pub fn edr(trials_blind: &[&Trial], eq_set: &HashSet<String>) -> Option<f64> {
    let mut ties = 0usize;
    let mut total = 0usize;
    for t in trials_blind {
        if !eq_set.contains(&t.pair_id) {
            continue;
        }
        match parsed(t) {
            Some(v) => {
                total += 1;
                if v == Verdict::Tie {
                    ties += 1;
                }
            }
            None => {}
        }
    }
    (total > 0).then(|| ties as f64 / total as f64)
}

/// Blind neutrality deviation: |2 p_{12|not-tie} - 1| * (1 - t_B).
/// `None` when every verdict is a tie (the conditional is undefined).
pub fn neutrality_deviation(dist_b: &OutcomeDistribution) -> Option<f64> {
    let non_tie = dist_b.p12 + dist_b.p21;
    if non_tie <= 0.0 {
        return None;
    }
    let p12_cond = dist_b.p12 / non_tie;
    Some(((2.0 * p12_cond - 1.0).abs() * (1.0 - dist_b.tie)).clamp(0.0, 1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaDecomposition {
    pub delta_fav: f64,
    pub delta_opp: f64,
    pub delta_tie: f64,
    pub lds: f64,
    pub ols: f64,
    pub ts: f64,
}

/// Shift of outcome mass from Blind to a cued probe, split into the
/// label-favored direction, the opposite direction, and ties, with the
/// rectified (movement-in) masses.
pub fn delta_decomposition(
    dist_p: &OutcomeDistribution,
    dist_b: &OutcomeDistribution,
    favored: Verdict,
) -> Result<DeltaDecomposition> {
    let opposite = match favored {
        Verdict::Order12 => Verdict::Order21,
        Verdict::Order21 => Verdict::Order12,
        Verdict::Tie => {
            return Err(AuditError::InvalidInput("favored outcome cannot be a tie".into()))
        }
    };
    let delta_fav = dist_p.fraction(favored) - dist_b.fraction(favored);
    let delta_opp = dist_p.fraction(opposite) - dist_b.fraction(opposite);
    let delta_tie = dist_p.tie - dist_b.tie;
    Ok(DeltaDecomposition {
        delta_fav,
        delta_opp,
        delta_tie,
        lds: delta_fav.max(0.0),
        ols: delta_opp.max(0.0),
        ts: delta_tie.max(0.0),
    })
}

/// Label-Anchored Outcome share: LDS / (LDS + OLS + TS + epsilon).
pub fn lao(decomp: &DeltaDecomposition, epsilon: f64) -> f64 {
    decomp.lds / (decomp.lds + decomp.ols + decomp.ts + epsilon)
}

/// Which canonical outcome a cue favors under each cued probe.
pub fn favored_outcome(probe: Probe, placebo_favored: Verdict) -> Result<Verdict> {
    match probe {
        Probe::T => Ok(Verdict::Order12),
        Probe::F | Probe::R => Ok(Verdict::Order21),
        Probe::P => Ok(placebo_favored),
        Probe::B => Err(AuditError::InvalidInput("Blind has no favored outcome".into())),
    }
}

// ---------------------------------------------------------------------------
// Rationale metrics (same-decision conditioning)
// ---------------------------------------------------------------------------

fn one_per_pair<'a>(trials: &[&'a Trial]) -> HashMap<&'a str, &'a Trial> {
    let mut m: HashMap<&str, &Trial> = HashMap::new();
    for t in trials {
        // keep the first parsed trial per pair; cells are one-trial-per-pair
        // in practice
        if parsed(t).is_some() {
            m.entry(t.pair_id.as_str()).or_insert(t);
        }
    }
    m
}

/// Pairs where the cued and Blind verdicts agree, with both explanations.
fn same_decision_pairs<'a>(
    cued_trials: &[&'a Trial],
    blind_trials: &[&'a Trial],
) -> Vec<(&'a Trial, &'a Trial)> {
    let blind = one_per_pair(blind_trials);
    let mut out = Vec::new();
    for t in cued_trials {
        let Some(v_cued) = parsed(t) else { continue };
        let Some(b) = blind.get(t.pair_id.as_str()) else { continue };
        if parsed(b) == Some(v_cued) {
            out.push((*t, *b));
        }
    }
    out
}

/// Label-Anchored Intensity over the same-decision set: mean alpha of the
/// cued explanations against the favored/opposite descriptors. `None` when
/// the same-decision set is empty.
pub fn lai_same_decision(
    cued_trials: &[&Trial],
    blind_trials: &[&Trial],
    descriptors: &Descriptors,
    provider: &dyn EmbeddingProvider,
) -> Result<Option<f64>> {
    let pairs = same_decision_pairs(cued_trials, blind_trials);
    if pairs.is_empty() {
        return Ok(None);
    }
    let d_fav = provider.embed(&descriptors.fav_text)?;
    let d_opp = provider.embed(&descriptors.opp_text)?;
    let mut sum = 0.0;
    for (cued, _) in &pairs {
        let e = provider.embed(&cued.explanation)?;
        sum += alpha(&e, &d_fav, &d_opp)?;
    }
    Ok(Some(sum / pairs.len() as f64))
}

/// Same-decision explanation drift: mean normalized cosine distance between
/// the cued and Blind explanations, plus the fraction exceeding tau.
pub fn drift_same_decision(
    cued_trials: &[&Trial],
    blind_trials: &[&Trial],
    provider: &dyn EmbeddingProvider,
    tau: f64,
) -> Result<(Option<f64>, Option<f64>)> {
    let pairs = same_decision_pairs(cued_trials, blind_trials);
    if pairs.is_empty() {
        return Ok((None, None));
    }
    let mut sum = 0.0;
    let mut over = 0usize;
    for (cued, blind) in &pairs {
        let d = dist(&provider.embed(&cued.explanation)?, &provider.embed(&blind.explanation)?)?;
        sum += d;
        if d > tau {
            over += 1;
        }
    }
    let n = pairs.len() as f64;
    Ok((Some(sum / n), Some(over as f64 / n)))
}

// ---------------------------------------------------------------------------
// Reveal-After
// ---------------------------------------------------------------------------

/// Matches flip-phase trials to their reveal-phase counterparts via the
/// `reveal_group` metadata written by the harness. Every reveal trial must
/// find its flip trial and vice versa.
pub fn pair_reveal_groups<'a>(trials: &[&'a Trial]) -> Result<Vec<(&'a Trial, &'a Trial)>> {
    let mut flips: HashMap<&str, &Trial> = HashMap::new();
    let mut reveals: Vec<&Trial> = Vec::new();
    for t in trials {
        match t.metadata.get("reveal_group").and_then(|v| v.as_str()) {
            Some(_) => reveals.push(t),
            None => {
                flips.insert(t.trial_id.as_str(), t);
            }
        }
    }
    let mut out = Vec::new();
    let mut used: HashSet<&str> = HashSet::new();
    for r in reveals {
        let group = r.metadata["reveal_group"].as_str().unwrap();
        let f = flips
            .get(group)
            .ok_or_else(|| AuditError::InvalidInput(format!("reveal trial {} has no flip-phase partner", r.trial_id)))?;
        used.insert(f.trial_id.as_str());
        out.push((*f, r));
    }
    if used.len() != flips.len() {
        return Err(AuditError::InvalidInput("flip-phase trial without a reveal partner".into()));
    }
    Ok(out)
}

/// Fraction of reveal groups whose verdict changed after the true labels
/// were revealed. Groups where either phase failed to parse are excluded.
pub fn revision_rate(groups: &[(&Trial, &Trial)]) -> Option<f64> {
    let mut changed = 0usize;
    let mut total = 0usize;
    for (flip, reveal) in groups {
        let (Some(vf), Some(vr)) = (parsed(flip), parsed(reveal)) else { continue };
        total += 1;
        if vf != vr {
            changed += 1;
        }
    }
    (total > 0).then(|| changed as f64 / total as f64)
}

/// Share of attack-trial explanations whose rhetoric aligns with the
/// injected cue: mean alpha against (aligned, neutral) descriptor texts.
pub fn cue_alignment_rate(
    attack_trials: &[&Trial],
    aligned_text: &str,
    neutral_text: &str,
    provider: &dyn EmbeddingProvider,
) -> Result<Option<f64>> {
    let d_aligned = provider.embed(aligned_text)?;
    let d_neutral = provider.embed(neutral_text)?;
    let mut sum = 0.0;
    let mut n = 0usize;
    for t in attack_trials {
        if parsed(t).is_none() || t.explanation.trim().is_empty() {
            continue;
        }
        let e = provider.embed(&t.explanation)?;
        sum += alpha(&e, &d_aligned, &d_neutral)?;
        n += 1;
    }
    Ok((n > 0).then(|| sum / n as f64))
}

// ---------------------------------------------------------------------------
// Bootstrap
// ---------------------------------------------------------------------------

/// Seeded pair-level percentile bootstrap. Resamples whole pairs (all trials
/// sharing a pair_id move together), evaluates the metric on each resample,
/// and reports the 95% percentile interval. `None` when the metric is
/// undefined on the original log or on more than half of the resamples.
pub fn bootstrap_ci<F>(
    metric_fn: F,
    trials: &[Trial],
    resamples: usize,
    seed: u64,
) -> Option<(f64, f64, f64)>
where
    F: Fn(&[&Trial]) -> Option<f64>,
{
    let all: Vec<&Trial> = trials.iter().collect();
    let point = metric_fn(&all)?;
    let mut by_pair: BTreeMap<&str, Vec<&Trial>> = BTreeMap::new();
    for t in trials {
        by_pair.entry(t.pair_id.as_str()).or_default().push(t);
    }
    let pair_ids: Vec<&str> = by_pair.keys().copied().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values = Vec::with_capacity(resamples);
    for _ in 0..resamples {
        let mut resample: Vec<&Trial> = Vec::with_capacity(trials.len());
        for _ in 0..pair_ids.len() {
            let pid = pair_ids[rng.gen_range(0..pair_ids.len())];
            resample.extend(by_pair[pid].iter().copied());
        }
        if let Some(v) = metric_fn(&resample) {
            values.push(v);
        }
    }
    if values.len() * 2 < resamples {
        return None;
    }
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let pick = |q: f64| {
        let idx = ((values.len() - 1) as f64 * q).round() as usize;
        values[idx]
    };
    Some((point, pick(0.025), pick(0.975)))
}

// ---------------------------------------------------------------------------
// Report assembly
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisConfig {
    pub epsilon: f64,
    pub tau: f64,
    /// Which canonical outcome the placebo badge order "favors".
    pub placebo_favored: Verdict,
    pub descriptors: Descriptors,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            epsilon: DEFAULT_EPSILON,
            tau: DEFAULT_TAU,
            placebo_favored: Verdict::Order12,
            descriptors: Descriptors::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeShift {
    pub decomposition: DeltaDecomposition,
    pub lao: f64,
}

/// Full tie-aware metric suite for one judge x protocol cell. Optional
/// fields are absent exactly when their conditioning set is empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub edr: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nd_b: Option<f64>,
    /// Keyed by probe letter (T/F/P).
    pub shifts: BTreeMap<String, ProbeShift>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lai_sd: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub drift_sd: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub change_rate: Option<f64>,
    pub tau: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub revision_rate: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cue_align: Option<f64>,
    pub epsilon: f64,
    /// Trial counts per probe letter.
    pub counts: BTreeMap<String, usize>,
}

/// Computes the metric suite from a cell's trials grouped by probe.
/// Rationale metrics (LAI, drift) condition the Flip probe on Blind.
pub fn metric_report(
    by_probe: &BTreeMap<Probe, Vec<&Trial>>,
    eq_set: &HashSet<String>,
    cfg: &AnalysisConfig,
    provider: Option<&dyn EmbeddingProvider>,
) -> Result<MetricReport> {
    let empty: Vec<&Trial> = Vec::new();
    let blind = by_probe.get(&Probe::B).unwrap_or(&empty);

    let mut counts = BTreeMap::new();
    for (probe, trials) in by_probe {
        counts.insert(probe.as_str().to_string(), trials.len());
    }

    let dist_b = crate::core::outcome_distribution(blind.iter().copied()).ok();
    let nd_b = dist_b.as_ref().and_then(neutrality_deviation);
    let edr_val = edr(blind, eq_set);

    let mut shifts = BTreeMap::new();
    if let Some(dist_b) = &dist_b {
        for probe in [Probe::T, Probe::F, Probe::P] {
            let Some(trials) = by_probe.get(&probe) else { continue };
            let Ok(dist_p) = crate::core::outcome_distribution(trials.iter().copied()) else {
                continue;
            };
            let favored = favored_outcome(probe, cfg.placebo_favored)?;
            let decomposition = delta_decomposition(&dist_p, dist_b, favored)?;
            let lao_val = lao(&decomposition, cfg.epsilon);
            shifts.insert(
                probe.as_str().to_string(),
                ProbeShift { decomposition, lao: lao_val },
            );
        }
    }

    let (mut lai_sd, mut drift_sd, mut change_rate) = (None, None, None);
    if let (Some(provider), Some(flip)) = (provider, by_probe.get(&Probe::F)) {
        lai_sd = lai_same_decision(flip, blind, &cfg.descriptors, provider)?;
        let (d, c) = drift_same_decision(flip, blind, provider, cfg.tau)?;
        drift_sd = d;
        change_rate = c;
    }

    let revision = match by_probe.get(&Probe::R) {
        Some(reveal_trials) => revision_rate(&pair_reveal_groups(reveal_trials)?),
        None => None,
    };

    Ok(MetricReport {
        edr: edr_val,
        nd_b,
        shifts,
        lai_sd,
        drift_sd,
        change_rate,
        tau: cfg.tau,
        revision_rate: revision,
        cue_align: None,
        epsilon: cfg.epsilon,
        counts,
    })
}
