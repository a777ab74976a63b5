//! Config-driven experiment orchestration: cell scheduling, per-trial seed
//! derivation, append-only trial-log persistence with content-addressed ids
//! (resume safety), and report emission.
//!
//! Every random draw derives from `(master_seed, cell coordinates)` so the
//! same config always produces the same trial log with deterministic judges.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::analysis::{metric_report, AnalysisConfig, MetricReport};
use crate::attacks::{confidence_attack, verbosity_attack, AttackConfig};
use crate::core::{
    trial_id, CandidatePair, CueAssignment, PairSubset, Probe, Protocol, RevealPhase,
    SummaryRecord, Trial, Verdict,
};
use crate::corpus::{load_corpus, Corpus};
use crate::cueprobe::{assign_cues, draw_permutation, LabelScheme, ResolvedPair};
use crate::error::{AuditError, Result};
use crate::judgeclient::{
    derived_seed, HttpJudgeClient, JudgeBackend, ScriptedMockJudge, SyntheticJudge,
    SyntheticJudgeParams,
};
use crate::protocols::{run_baseline, run_pbp, run_reveal, run_scot, CriterionSet, TrialSetup};

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

/// How to instantiate a judge.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum BackendSpec {
    /// A scripted mock that answers every prompt with the same reply.
    Mock { reply: String },
    /// The parametric synthetic anchored judge (single-turn protocols only).
    Synthetic(SyntheticJudgeParams),
    /// A live OpenAI-compatible endpoint; base URL and key come from the
    /// environment (`CUEAUDIT_API_BASE`, `CUEAUDIT_API_KEY`).
    Http { model_id: String },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct JudgeSpec {
    pub judge_id: String,
    #[serde(flatten)]
    pub backend: BackendSpec,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AttackKind {
    Verbosity,
    Confidence,
}

/// Applies one attack to one slot of every pair before judging.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AttackSpec {
    pub kind: AttackKind,
    #[serde(default = "default_factor")]
    pub factor: f64,
    /// Canonical slot to transform (1 or 2).
    #[serde(default = "default_target_slot")]
    pub target_slot: u8,
}

fn default_factor() -> f64 {
    1.5
}
fn default_target_slot() -> u8 {
    2
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub experiment_id: String,
    pub corpus_dir: PathBuf,
    pub judges: Vec<JudgeSpec>,
    pub protocols: Vec<Protocol>,
    pub probes: Vec<Probe>,
    /// Pair subsets to include; empty means all.
    #[serde(default)]
    pub subsets: Vec<PairSubset>,
    #[serde(default)]
    pub attack: Option<AttackSpec>,
    #[serde(default)]
    pub criteria: CriterionSet,
    #[serde(default)]
    pub label_scheme: LabelScheme,
    #[serde(default)]
    pub analysis: AnalysisConfig,
    pub master_seed: u64,
    /// Upper bound on concurrent judge calls. Execution order (and thus the
    /// log) is deterministic regardless.
    #[serde(default = "default_concurrency")]
    pub concurrency: usize,
    #[serde(default = "default_max_tokens")]
    pub max_tokens: u32,
    pub output_dir: PathBuf,
}

fn default_concurrency() -> usize {
    1
}
fn default_max_tokens() -> u32 {
    768
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let cfg: Self = serde_json::from_reader(File::open(path)?)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.judges.is_empty() || self.protocols.is_empty() || self.probes.is_empty() {
            return Err(AuditError::Config("judges, protocols and probes must be non-empty".into()));
        }
        self.criteria.validate()?;
        for j in &self.judges {
            if matches!(j.backend, BackendSpec::Synthetic(_))
                && self.protocols.contains(&Protocol::Pbp)
            {
                return Err(AuditError::Config(format!(
                    "synthetic judge {} supports single-turn protocols only (baseline/scot)",
                    j.judge_id
                )));
            }
        }
        if let Some(a) = &self.attack {
            if !(a.target_slot == 1 || a.target_slot == 2) {
                return Err(AuditError::Config("attack target_slot must be 1 or 2".into()));
            }
            if a.kind == AttackKind::Verbosity && a.factor < 1.0 {
                return Err(AuditError::Config("verbosity factor must be >= 1".into()));
            }
        }
        Ok(())
    }

    pub fn trial_log_path(&self) -> PathBuf {
        self.output_dir.join(format!("{}.trials.jsonl", self.experiment_id))
    }
}

pub fn build_backend(spec: &JudgeSpec, cache_dir: &Path) -> Result<Box<dyn JudgeBackend>> {
    Ok(match &spec.backend {
        BackendSpec::Mock { reply } => Box::new(ScriptedMockJudge::constant(reply.clone())),
        BackendSpec::Synthetic(params) => Box::new(SyntheticJudge::new(params.clone())),
        BackendSpec::Http { .. } => Box::new(
            HttpJudgeClient::from_env()?
                .with_cache(cache_dir.join(format!("{}.cache.jsonl", spec.judge_id)))?,
        ),
    })
}

fn model_id(spec: &JudgeSpec) -> String {
    match &spec.backend {
        BackendSpec::Http { model_id } => model_id.clone(),
        _ => spec.judge_id.clone(),
    }
}

// ---------------------------------------------------------------------------
// Trial log
// ---------------------------------------------------------------------------

pub fn read_trial_log(path: &Path) -> Result<Vec<Trial>> {
    if !path.exists() {
        return Ok(Vec::new());
    }
    let mut out = Vec::new();
    for (i, line) in BufReader::new(File::open(path)?).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let t: Trial = serde_json::from_str(&line).map_err(|e| AuditError::CorpusLine {
            line: i + 1,
            msg: format!("trial log: {e}"),
        })?;
        out.push(t);
    }
    Ok(out)
}

struct TrialLogWriter {
    file: File,
}

impl TrialLogWriter {
    fn open(path: &Path) -> Result<Self> {
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        Ok(Self { file: OpenOptions::new().create(true).append(true).open(path)? })
    }

    fn append(&mut self, trial: &Trial) -> Result<()> {
        writeln!(self.file, "{}", serde_json::to_string(trial)?)?;
        self.file.flush()?;
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Experiment runner
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunOutcome {
    pub log_path: PathBuf,
    pub new_trials: usize,
    pub resumed_trials: usize,
    pub failed_cells: usize,
    pub skipped_pairs: Vec<String>,
}

fn favored_metadata(cue: &CueAssignment, placebo_favored: Verdict) -> Option<&'static str> {
    let favored = match (cue.probe, cue.phase) {
        (Probe::B, _) => return None,
        (Probe::R, Some(RevealPhase::RevealPhase)) => Verdict::Order12, // true labels shown
        (probe, _) => crate::analysis::favored_outcome(probe, placebo_favored).ok()?,
    };
    match favored {
        Verdict::Order12 => Some("12"),
        Verdict::Order21 => Some("21"),
        Verdict::Tie => None,
    }
}

fn apply_attack(corpus: &mut Corpus, spec: &AttackSpec, master_seed: u64) -> Result<()> {
    let attack_cfg = AttackConfig { verbosity_factor: spec.factor, ..AttackConfig::default() };
    let pairs = corpus.pairs.clone();
    let mut replaced: HashMap<String, String> = HashMap::new();
    for pair in &pairs {
        let slot_id = if spec.target_slot == 1 { &pair.slot1 } else { &pair.slot2 };
        let new_id = if let Some(done) = replaced.get(slot_id) {
            done.clone()
        } else {
            let original = corpus
                .summary(slot_id)
                .ok_or_else(|| AuditError::InvalidInput(format!("missing summary {slot_id}")))?
                .clone();
            let attacked: SummaryRecord = match spec.kind {
                AttackKind::Verbosity => {
                    let mut rng = ChaCha8Rng::seed_from_u64(derived_seed(
                        &[&original.summary_id, "attack"],
                        master_seed,
                    ));
                    verbosity_attack(&original, &attack_cfg, &mut rng)?
                }
                AttackKind::Confidence => confidence_attack(&original, &attack_cfg)?,
            };
            let id = attacked.summary_id.clone();
            corpus.summaries.push(attacked);
            replaced.insert(slot_id.clone(), id.clone());
            id
        };
        let p = corpus.pairs.iter_mut().find(|p| p.pair_id == pair.pair_id).unwrap();
        if spec.target_slot == 1 {
            p.slot1 = new_id;
        } else {
            p.slot2 = new_id;
        }
    }
    corpus.validate()
}

/// Runs every (pair, judge, protocol, probe) cell, appending canonicalized
/// trials to the log. Idempotent: trials already present (by content-
/// addressed id) are never re-executed, so a resumed run converges to the
/// same log as an uninterrupted one.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunOutcome> {
    cfg.validate()?;
    std::fs::create_dir_all(&cfg.output_dir)?;
    let (mut corpus, _warnings) = load_corpus(&cfg.corpus_dir)?;
    if let Some(attack) = &cfg.attack {
        apply_attack(&mut corpus, attack, cfg.master_seed)?;
    }
    run_experiment_on(cfg, &corpus, None)
}

/// Runner variant taking a prepared corpus and an optional trial cap, used
/// for resume testing (`stop_after` new trials) and in-memory corpora.
pub fn run_experiment_on(
    cfg: &ExperimentConfig,
    corpus: &Corpus,
    stop_after: Option<usize>,
) -> Result<RunOutcome> {
    std::fs::create_dir_all(&cfg.output_dir)?;
    let log_path = cfg.trial_log_path();
    let mut existing: HashMap<String, Trial> =
        read_trial_log(&log_path)?.into_iter().map(|t| (t.trial_id.clone(), t)).collect();
    let mut writer = TrialLogWriter::open(&log_path)?;

    let pairs: Vec<&CandidatePair> = corpus
        .pairs
        .iter()
        .filter(|p| cfg.subsets.is_empty() || cfg.subsets.contains(&p.subset))
        .collect();

    let mut outcome = RunOutcome {
        log_path: log_path.clone(),
        new_trials: 0,
        resumed_trials: 0,
        failed_cells: 0,
        skipped_pairs: Vec::new(),
    };

    for judge in &cfg.judges {
        let backend = build_backend(judge, &cfg.output_dir)?;
        let judge_model = model_id(judge);
        for &protocol in &cfg.protocols {
            for pair in &pairs {
                let Some(doc) = corpus.document(&pair.doc_id) else {
                    outcome.skipped_pairs.push(pair.pair_id.clone());
                    continue;
                };
                let (Some(s1), Some(s2)) =
                    (corpus.summary(&pair.slot1), corpus.summary(&pair.slot2))
                else {
                    outcome.skipped_pairs.push(pair.pair_id.clone());
                    continue;
                };
                let rp = ResolvedPair { pair, doc, slot1: s1, slot2: s2 };
                for &probe in &cfg.probes {
                    let mut cue_rng = ChaCha8Rng::seed_from_u64(derived_seed(
                        &[&pair.pair_id, &judge.judge_id, protocol.as_str(), probe.as_str(), "cues"],
                        cfg.master_seed,
                    ));
                    let cues = assign_cues(&rp, probe, &cfg.label_scheme, &mut cue_rng);
                    // one presentation draw per cell; Reveal-After keeps the
                    // flip-phase ordering on screen
                    let mut perm_rng = ChaCha8Rng::seed_from_u64(derived_seed(
                        &[&pair.pair_id, &judge.judge_id, protocol.as_str(), probe.as_str(), "perm"],
                        cfg.master_seed,
                    ));
                    let perm = draw_permutation(&mut perm_rng);
                    let mut flip_trial: Option<Trial> = None;
                    for cue in cues {
                        let phase = cue.phase;
                        let seed = derived_seed(
                            &[
                                &pair.pair_id,
                                &judge.judge_id,
                                protocol.as_str(),
                                probe.as_str(),
                                phase.map(|p| p.as_str()).unwrap_or(""),
                                "trial",
                            ],
                            cfg.master_seed,
                        );
                        let tid = trial_id(
                            &pair.pair_id,
                            &judge.judge_id,
                            protocol,
                            probe,
                            phase,
                            perm,
                            seed,
                        );
                        if let Some(done) = existing.get(&tid) {
                            outcome.resumed_trials += 1;
                            if phase == Some(RevealPhase::FlipPhase) {
                                flip_trial = Some(done.clone());
                            }
                            continue;
                        }
                        if let Some(cap) = stop_after {
                            if outcome.new_trials >= cap {
                                return Ok(outcome);
                            }
                        }

                        let mut request_metadata = BTreeMap::new();
                        request_metadata.insert("protocol".into(), protocol.as_str().to_string());
                        if let Some(f) = favored_metadata(&cue, cfg.analysis.placebo_favored) {
                            request_metadata.insert("favored_canonical".into(), f.to_string());
                        }
                        let setup = TrialSetup {
                            pair: &rp,
                            judge_id: judge.judge_id.clone(),
                            model_id: judge_model.clone(),
                            cue: cue.clone(),
                            perm,
                            seed,
                            request_metadata,
                            max_tokens: cfg.max_tokens,
                        };
                        let result = match phase {
                            Some(RevealPhase::RevealPhase) => match &flip_trial {
                                Some(flip) => run_reveal(backend.as_ref(), &setup, flip),
                                None => {
                                    outcome.failed_cells += 1;
                                    continue;
                                }
                            },
                            _ => match protocol {
                                Protocol::Baseline => run_baseline(backend.as_ref(), &setup),
                                Protocol::Scot => run_scot(backend.as_ref(), &setup, &cfg.criteria),
                                Protocol::Pbp => run_pbp(backend.as_ref(), &setup, &cfg.criteria),
                            },
                        };
                        match result {
                            Ok(trial) => {
                                writer.append(&trial)?;
                                if phase == Some(RevealPhase::FlipPhase) {
                                    flip_trial = Some(trial.clone());
                                }
                                existing.insert(trial.trial_id.clone(), trial);
                                outcome.new_trials += 1;
                            }
                            Err(e) => {
                                outcome.failed_cells += 1;
                                outcome
                                    .skipped_pairs
                                    .push(format!("{}: {e}", pair.pair_id));
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(outcome)
}

// ---------------------------------------------------------------------------
// Reporting
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct ReportBundle {
    /// "judge_id/protocol" -> metric report.
    pub cells: BTreeMap<String, MetricReport>,
    pub warnings: Vec<String>,
    pub csv_path: PathBuf,
    pub json_path: PathBuf,
    pub markdown_path: PathBuf,
}

/// Pairs designated "effectively equal" for EDR: eq-pair and identical
/// subsets.
pub fn equal_pair_set(corpus: &Corpus) -> HashSet<String> {
    corpus
        .pairs
        .iter()
        .filter(|p| matches!(p.subset, PairSubset::EqPair | PairSubset::Identical))
        .map(|p| p.pair_id.clone())
        .collect()
}

fn fmt_opt(v: Option<f64>) -> String {
    match v {
        Some(x) => format!("{x:.4}"),
        None => "n/a".into(),
    }
}

/// Computes per-cell metric reports from a trial log and writes the report
/// bundle (JSON, flat CSV, markdown summary) into `out_dir`.
pub fn report(
    trials: &[Trial],
    eq_set: &HashSet<String>,
    analysis_cfg: &AnalysisConfig,
    provider: Option<&dyn crate::analysis::EmbeddingProvider>,
    out_dir: &Path,
) -> Result<ReportBundle> {
    std::fs::create_dir_all(out_dir)?;
    let mut warnings = Vec::new();
    if trials.is_empty() {
        warnings.push("trial log is empty; report contains no cells".into());
    }

    let mut cells: BTreeMap<(String, Protocol), BTreeMap<Probe, Vec<&Trial>>> = BTreeMap::new();
    for t in trials {
        cells
            .entry((t.judge_id.clone(), t.protocol))
            .or_default()
            .entry(t.cue.probe)
            .or_default()
            .push(t);
    }

    let mut reports: BTreeMap<String, MetricReport> = BTreeMap::new();
    for ((judge, protocol), by_probe) in &cells {
        let key = format!("{judge}/{}", protocol.as_str());
        reports.insert(key, metric_report(by_probe, eq_set, analysis_cfg, provider)?);
    }

    let json_path = out_dir.join("metrics.json");
    serde_json::to_writer_pretty(File::create(&json_path)?, &reports)?;

    let csv_path = out_dir.join("metrics.csv");
    let mut csv = File::create(&csv_path)?;
    writeln!(csv, "judge,protocol,metric,probe,value")?;
    for (key, r) in &reports {
        let (judge, protocol) = key.split_once('/').unwrap();
        let mut row = |metric: &str, probe: &str, value: String| {
            writeln!(csv, "{judge},{protocol},{metric},{probe},{value}")
        };
        row("edr", "B", fmt_opt(r.edr))?;
        row("nd_b", "B", fmt_opt(r.nd_b))?;
        for (probe, shift) in &r.shifts {
            row("lds", probe, format!("{:.4}", shift.decomposition.lds))?;
            row("ols", probe, format!("{:.4}", shift.decomposition.ols))?;
            row("ts", probe, format!("{:.4}", shift.decomposition.ts))?;
            row("lao", probe, format!("{:.4}", shift.lao))?;
        }
        row("lai_sd", "F", fmt_opt(r.lai_sd))?;
        row("drift_sd", "F", fmt_opt(r.drift_sd))?;
        row("change_rate", "F", fmt_opt(r.change_rate))?;
        row("revision_rate", "R", fmt_opt(r.revision_rate))?;
        row("cue_align", "-", fmt_opt(r.cue_align))?;
    }

    let markdown_path = out_dir.join("report.md");
    let mut md = File::create(&markdown_path)?;
    writeln!(md, "# Cue-invariance audit report\n")?;
    for w in &warnings {
        writeln!(md, "> warning: {w}\n")?;
    }
    writeln!(md, "| judge | protocol | EDR | ND_B | LAO(T) | LAO(F) | revision |")?;
    writeln!(md, "|---|---|---|---|---|---|---|")?;
    for (key, r) in &reports {
        let (judge, protocol) = key.split_once('/').unwrap();
        let lao = |p: &str| {
            r.shifts.get(p).map(|s| format!("{:.3}", s.lao)).unwrap_or_else(|| "n/a".into())
        };
        writeln!(
            md,
            "| {judge} | {protocol} | {} | {} | {} | {} | {} |",
            fmt_opt(r.edr),
            fmt_opt(r.nd_b),
            lao("T"),
            lao("F"),
            fmt_opt(r.revision_rate),
        )?;
    }

    Ok(ReportBundle { cells: reports, warnings, csv_path, json_path, markdown_path })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::core::{ParseStatus, SummaryOrigin};
    use crate::corpus::save_corpus;
    use tempfile::tempdir;

    fn tiny_corpus() -> Corpus {
        let doc = crate::core::DocumentRecord::new(
            "d1",
            "Rivers rise in spring. Farmers watch the gauges closely. Levees held again this year.",
            "news",
        )
        .unwrap();
        let s1 = SummaryRecord::new("s1", "d1", "Rivers rose but levees held.", SummaryOrigin::Llm)
            .unwrap();
        let s2 = SummaryRecord::new(
            "s2",
            "d1",
            "Rivers rise in spring.",
            SummaryOrigin::Extractive { method: crate::core::ExtractiveMethod::Textrank },
        )
        .unwrap();
        Corpus {
            documents: vec![doc],
            summaries: vec![s1, s2],
            pairs: vec![CandidatePair {
                pair_id: "p1".into(),
                doc_id: "d1".into(),
                slot1: "s1".into(),
                slot2: "s2".into(),
                subset: PairSubset::Standard,
            }],
        }
    }

    fn config(dir: &Path, probes: Vec<Probe>, protocols: Vec<Protocol>) -> ExperimentConfig {
        ExperimentConfig {
            experiment_id: "exp".into(),
            corpus_dir: dir.join("corpus"),
            judges: vec![JudgeSpec {
                judge_id: "mock".into(),
                backend: BackendSpec::Mock {
                    reply: r#"{"verdict":"[1,2]","explanation":"first reads better"}"#.into(),
                },
            }],
            protocols,
            probes,
            subsets: vec![],
            attack: None,
            criteria: CriterionSet::default(),
            label_scheme: LabelScheme::default(),
            analysis: AnalysisConfig::default(),
            master_seed: 42,
            concurrency: 1,
            max_tokens: 256,
            output_dir: dir.join("out"),
        }
    }

    #[test]
    fn cell_arithmetic_baseline_two_probes() {
        let dir = tempdir().unwrap();
        save_corpus(&tiny_corpus(), &dir.path().join("corpus")).unwrap();
        let cfg = config(dir.path(), vec![Probe::B, Probe::T], vec![Protocol::Baseline]);
        let out = run_experiment(&cfg).unwrap();
        assert_eq!(out.new_trials, 2);
        assert_eq!(out.failed_cells, 0);
        assert_eq!(read_trial_log(&out.log_path).unwrap().len(), 2);
    }

    #[test]
    fn reveal_probe_contributes_two_phases() {
        let dir = tempdir().unwrap();
        save_corpus(&tiny_corpus(), &dir.path().join("corpus")).unwrap();
        let cfg = config(
            dir.path(),
            vec![Probe::B, Probe::T, Probe::F, Probe::P, Probe::R],
            vec![Protocol::Baseline],
        );
        let out = run_experiment(&cfg).unwrap();
        assert_eq!(out.new_trials, 6);
        let log = read_trial_log(&out.log_path).unwrap();
        let reveal: Vec<&Trial> =
            log.iter().filter(|t| t.metadata.contains_key("reveal_group")).collect();
        assert_eq!(reveal.len(), 1);
    }

    #[test]
    fn rerun_is_idempotent() {
        let dir = tempdir().unwrap();
        save_corpus(&tiny_corpus(), &dir.path().join("corpus")).unwrap();
        let cfg = config(dir.path(), vec![Probe::B, Probe::T], vec![Protocol::Baseline]);
        let first = run_experiment(&cfg).unwrap();
        let log_before = std::fs::read_to_string(&first.log_path).unwrap();
        let second = run_experiment(&cfg).unwrap();
        assert_eq!(second.new_trials, 0);
        assert_eq!(second.resumed_trials, 2);
        assert_eq!(std::fs::read_to_string(&second.log_path).unwrap(), log_before);
    }

    #[test]
    fn synthetic_judge_with_pbp_rejected() {
        let dir = tempdir().unwrap();
        let mut cfg = config(dir.path(), vec![Probe::B], vec![Protocol::Pbp]);
        cfg.judges = vec![JudgeSpec {
            judge_id: "synth".into(),
            backend: BackendSpec::Synthetic(
                SyntheticJudgeParams::new(0.5, 0.0, 0.5, 0.5, 1).unwrap(),
            ),
        }];
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn attack_config_transforms_target_slot() {
        let dir = tempdir().unwrap();
        save_corpus(&tiny_corpus(), &dir.path().join("corpus")).unwrap();
        let mut cfg = config(dir.path(), vec![Probe::B], vec![Protocol::Baseline]);
        cfg.attack =
            Some(AttackSpec { kind: AttackKind::Confidence, factor: 1.5, target_slot: 2 });
        let out = run_experiment(&cfg).unwrap();
        assert_eq!(out.new_trials, 1);
        let log = read_trial_log(&out.log_path).unwrap();
        // attacked slot-2 text is embedded in the rendered prompt
        assert!(log[0].transcript[0].content.contains("It is unequivocally clear that"));
    }

    #[test]
    fn report_writes_bundle() {
        let dir = tempdir().unwrap();
        save_corpus(&tiny_corpus(), &dir.path().join("corpus")).unwrap();
        let cfg = config(dir.path(), vec![Probe::B, Probe::T], vec![Protocol::Baseline]);
        let out = run_experiment(&cfg).unwrap();
        let trials = read_trial_log(&out.log_path).unwrap();
        let bundle = report(
            &trials,
            &HashSet::new(),
            &AnalysisConfig::default(),
            None,
            &dir.path().join("report"),
        )
        .unwrap();
        assert_eq!(bundle.cells.len(), 1);
        assert!(bundle.csv_path.exists() && bundle.json_path.exists() && bundle.markdown_path.exists());
        let csv = std::fs::read_to_string(&bundle.csv_path).unwrap();
        assert!(csv.starts_with("judge,protocol,metric,probe,value"));
    }

    #[test]
    fn empty_log_report_warns() {
        let dir = tempdir().unwrap();
        let bundle = report(
            &[],
            &HashSet::new(),
            &AnalysisConfig::default(),
            None,
            &dir.path().join("report"),
        )
        .unwrap();
        assert!(bundle.cells.is_empty());
        assert_eq!(bundle.warnings.len(), 1);
    }

    #[test]
    fn killed_and_resumed_run_matches_uninterrupted() {
        let dir = tempdir().unwrap();
        let corpus_dir = dir.path().join("corpus");
        save_corpus(&tiny_corpus(), &corpus_dir).unwrap();
        let probes = vec![Probe::B, Probe::T, Probe::F, Probe::P, Probe::R];

        let mut uninterrupted = config(dir.path(), probes.clone(), vec![Protocol::Baseline]);
        uninterrupted.experiment_id = "full".into();
        let full = run_experiment(&uninterrupted).unwrap();

        let mut resumed = config(dir.path(), probes, vec![Protocol::Baseline]);
        resumed.experiment_id = "halved".into();
        let (corpus, _) = load_corpus(&corpus_dir).unwrap();
        let partial = run_experiment_on(&resumed, &corpus, Some(3)).unwrap();
        assert_eq!(partial.new_trials, 3);
        let finished = run_experiment_on(&resumed, &corpus, None).unwrap();
        assert_eq!(finished.resumed_trials, 3);

        let mut a = read_trial_log(&full.log_path).unwrap();
        let mut b = read_trial_log(&finished.log_path).unwrap();
        a.sort_by(|x, y| x.trial_id.cmp(&y.trial_id));
        b.sort_by(|x, y| x.trial_id.cmp(&y.trial_id));
        let norm = |ts: &[Trial]| {
            ts.iter().map(|t| serde_json::to_string(t).unwrap()).collect::<Vec<_>>()
        };
        assert_eq!(norm(&a), norm(&b));
    }

    #[test]
    fn failed_parse_trials_still_persisted() {
        let dir = tempdir().unwrap();
        save_corpus(&tiny_corpus(), &dir.path().join("corpus")).unwrap();
        let mut cfg = config(dir.path(), vec![Probe::B], vec![Protocol::Baseline]);
        cfg.judges[0].backend = BackendSpec::Mock { reply: "no verdict here at all".into() };
        let out = run_experiment(&cfg).unwrap();
        assert_eq!(out.new_trials, 1);
        let log = read_trial_log(&out.log_path).unwrap();
        assert_eq!(log[0].parse_status, ParseStatus::Failed);
    }
}
