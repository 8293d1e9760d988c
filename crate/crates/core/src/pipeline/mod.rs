//! End-to-end orchestration: in-memory stage functions plus a checkpointed runner.

pub mod config;
pub mod stages;

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::candidates::{generate_all, RelationCandidate, RelationType};
use crate::corpus::{CorpusSplit, Document, GazetteerSet, SplitPart};
use crate::error::{Error, Result};
use crate::evaluation::{calibration, evaluate_relation, CalibrationReport, GoldRecord, RelationReport, ScoredExample};
use crate::features::{featurize_all, FeatureDictionary};
use crate::inference::{infer_corpus, learn_weights, InferParams, LearnParams, Marginal, Weights};
use crate::mentions::{assign_roles, default_aliases, extract_mentions, link_entities, Mention, RoleRuleSet};
use crate::supervision::{
    balance_training, label_candidates, supervise_document, LabelVote, LabeledCandidate, Resolved, SecondaryDb,
    SupervisionMode,
};

pub use config::PipelineConfig;
pub use stages::{run_ablation, run_pipeline, RunSummary, Stage, StageOutcome};

/// Role keywords, incident aliases and labeling-rule switches, loadable from a rules file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct RuleConfig {
    pub roles: RoleRuleSet,
    pub aliases: BTreeMap<String, String>,
    pub supervision: RuleSwitches,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct RuleSwitches {
    /// Rule sources (such as `rules:closest_date`) that cast no votes.
    pub disabled: BTreeSet<String>,
}

impl Default for RuleConfig {
    fn default() -> Self {
        RuleConfig {
            roles: RoleRuleSet::default(),
            aliases: default_aliases(),
            supervision: RuleSwitches::default(),
        }
    }
}

impl RuleConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(format!("rules file: {e}")))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("rules serialize")
    }
}

/// Mentions of one document with entity ids and roles assigned.
pub fn document_mentions(doc: &Document, gazetteers: &GazetteerSet, rules: &RuleConfig) -> Result<Vec<Mention>> {
    let mentions = extract_mentions(doc, gazetteers)?;
    let linked = link_entities(doc, &mentions, &rules.aliases);
    Ok(assign_roles(doc, &linked, &rules.roles))
}

pub fn corpus_mentions(
    docs: &[Document],
    gazetteers: &GazetteerSet,
    rules: &RuleConfig,
) -> Result<BTreeMap<String, Vec<Mention>>> {
    docs.par_iter()
        .map(|d| Ok((d.doc_id.clone(), document_mentions(d, gazetteers, rules)?)))
        .collect()
}

/// Candidates of every document, in document order.
pub fn corpus_candidates(docs: &[Document], mentions: &BTreeMap<String, Vec<Mention>>) -> Vec<RelationCandidate> {
    docs.iter()
        .flat_map(|d| generate_all(d, mentions.get(&d.doc_id).map(Vec::as_slice).unwrap_or(&[])))
        .collect()
}

pub fn corpus_features(
    docs: &[Document],
    candidates: &mut [RelationCandidate],
    windows: &[usize],
) -> Result<FeatureDictionary> {
    let by_id: BTreeMap<String, Document> = docs.iter().map(|d| (d.doc_id.clone(), d.clone())).collect();
    let mut dict = FeatureDictionary::new();
    featurize_all(&by_id, candidates, windows, &mut dict)?;
    Ok(dict)
}

/// Votes of every source for every candidate, sorted by (candidate, source).
pub fn corpus_votes(
    docs: &[Document],
    mentions: &BTreeMap<String, Vec<Mention>>,
    candidates: &[RelationCandidate],
    dbs: &[SecondaryDb],
    rules: &RuleConfig,
) -> Vec<LabelVote> {
    let mut by_doc: BTreeMap<&str, Vec<RelationCandidate>> = BTreeMap::new();
    for c in candidates {
        by_doc.entry(c.doc_id.as_str()).or_default().push(c.clone());
    }
    let mut votes: Vec<LabelVote> = docs
        .par_iter()
        .flat_map_iter(|d| {
            let ms = mentions.get(&d.doc_id).map(Vec::as_slice).unwrap_or(&[]);
            let cs = by_doc.get(d.doc_id.as_str()).map(Vec::as_slice).unwrap_or(&[]);
            supervise_document(d, ms, cs, dbs, &rules.roles, &rules.aliases, &rules.supervision.disabled)
        })
        .collect();
    votes.sort();
    votes
}

/// Everything a supervision mode's learn/infer/evaluate pass needs.
pub struct Prepared<'a> {
    pub candidates: &'a [RelationCandidate],
    pub dim: usize,
    pub votes: &'a [LabelVote],
    pub split: &'a CorpusSplit,
    pub gold: &'a BTreeMap<String, bool>,
}

#[derive(Debug, Clone)]
pub struct ModeRun {
    pub mode: SupervisionMode,
    pub labeled: Vec<LabeledCandidate>,
    pub weights: Weights,
    pub marginals: Vec<Marginal>,
    pub reports: Vec<RelationReport>,
    pub calibration: CalibrationReport,
    pub test_scored: BTreeMap<RelationType, Vec<ScoredExample>>,
}

fn part(split: &CorpusSplit, c: &RelationCandidate) -> Option<SplitPart> {
    split.part_of(&c.doc_id)
}

/// Validation labels: gold where present, else the resolved supervision label.
fn validation_label(gold: &BTreeMap<String, bool>, l: &LabeledCandidate) -> Option<bool> {
    gold.get(&l.candidate.candidate_id).copied().or(match l.resolved {
        Resolved::True => Some(true),
        Resolved::False => Some(false),
        Resolved::Abstain => None,
    })
}

pub fn learn_split(
    prepared: &Prepared,
    mode: SupervisionMode,
    learn: &LearnParams,
    balance_seed: u64,
) -> Result<(Vec<LabeledCandidate>, Weights)> {
    let labeled = label_candidates(prepared.candidates, prepared.votes, mode);
    let train: Vec<LabeledCandidate> = labeled
        .iter()
        .filter(|l| part(prepared.split, &l.candidate) == Some(SplitPart::Train))
        .cloned()
        .collect();
    let balanced = balance_training(&train, balance_seed);
    let weights = learn_weights(&balanced.examples, prepared.dim, learn)?;
    Ok((labeled, weights))
}

pub fn evaluate_split(
    prepared: &Prepared,
    labeled: &[LabeledCandidate],
    marginals: &[Marginal],
) -> (Vec<RelationReport>, CalibrationReport, BTreeMap<RelationType, Vec<ScoredExample>>) {
    let mut dev: BTreeMap<RelationType, Vec<ScoredExample>> = BTreeMap::new();
    let mut test: BTreeMap<RelationType, Vec<ScoredExample>> = BTreeMap::new();
    for (l, m) in labeled.iter().zip(marginals) {
        let c = &l.candidate;
        match part(prepared.split, c) {
            Some(SplitPart::Dev) => {
                if let Some(y) = validation_label(prepared.gold, l) {
                    dev.entry(c.rtype).or_default().push(ScoredExample::new(&c.candidate_id, m.probability, y));
                }
            }
            Some(SplitPart::Test) => {
                if let Some(&y) = prepared.gold.get(&c.candidate_id) {
                    test.entry(c.rtype).or_default().push(ScoredExample::new(&c.candidate_id, m.probability, y));
                }
            }
            _ => {}
        }
    }
    let reports = RelationType::ALL
        .iter()
        .filter(|r| test.contains_key(r))
        .map(|&r| evaluate_relation(r, &test[&r], dev.get(&r).map(Vec::as_slice).unwrap_or(&[])))
        .collect();
    let all_dev: Vec<ScoredExample> = dev.into_values().flatten().collect();
    let all_probs: Vec<f64> = marginals.iter().map(|m| m.probability).collect();
    (reports, calibration(&all_dev, &all_probs), test)
}

/// Learn, infer and evaluate under one supervision mode.
pub fn run_mode(
    prepared: &Prepared,
    mode: SupervisionMode,
    learn: &LearnParams,
    infer: &InferParams,
    balance_seed: u64,
) -> Result<ModeRun> {
    let (labeled, weights) = learn_split(prepared, mode, learn, balance_seed)?;
    let marginals = infer_corpus(prepared.candidates, &weights, infer)?.marginals;
    let (reports, calibration, test_scored) = evaluate_split(prepared, &labeled, &marginals);
    Ok(ModeRun {
        mode,
        labeled,
        weights,
        marginals,
        reports,
        calibration,
        test_scored,
    })
}

/// Gold labels keyed by candidate id.
pub fn gold_labels(gold: &[GoldRecord], candidates: &[RelationCandidate]) -> BTreeMap<String, bool> {
    crate::evaluation::resolve_gold(gold, candidates)
}

/// File name of the configuration written by [`synth_project`].
pub const PROJECT_CONFIG: &str = "kgforge.toml";

/// Generate a synthetic corpus into `dir` together with a pipeline configuration that
/// reads it; returns the configuration path.
pub fn synth_project(dir: &std::path::Path, spec: &crate::synth::SynthSpec, seed: u64) -> Result<std::path::PathBuf> {
    use crate::synth::{generate_synthetic, CORPUS_FILE, GOLD_FILE, MARITIME_FILE, PIRACY_FILE};
    let out = generate_synthetic(spec, seed)?;
    out.write_dir(dir)?;
    let mut config = PipelineConfig::default();
    config.paths.corpus = CORPUS_FILE.into();
    config.paths.gold = Some(GOLD_FILE.into());
    config.paths.piracy_db = Some(PIRACY_FILE.into());
    config.paths.maritime_db = Some(MARITIME_FILE.into());
    config.paths.output = "out".into();
    let path = dir.join(PROJECT_CONFIG);
    crate::io::write_atomic(&path, config.to_toml().as_bytes())?;
    Ok(path)
}
