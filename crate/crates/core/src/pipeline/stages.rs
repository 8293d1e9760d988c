//! Checkpointed stage runner. Every stage output is addressed by a key derived from the
//! stage parameters and the digests of its inputs; a stage whose key and outputs are
//! unchanged is skipped.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::{PipelineConfig, Seeds};
use super::{
    corpus_candidates, corpus_features, corpus_mentions, corpus_votes, evaluate_split, gold_labels, learn_split,
    run_mode, Prepared, RuleConfig,
};
use crate::candidates::RelationCandidate;
use crate::corpus::{annotate, load_corpus, split_corpus, CorpusSplit, Document, GazetteerSet, SplitPart};
use crate::error::{Error, Result};
use crate::evaluation::{ablation_csv, curves_csv, metrics_csv, AblationRow, GoldRecord, RelationReport};
use crate::features::FeatureDictionary;
use crate::inference::{infer_corpus, Marginal, Weights};
use crate::io::{meta_line, read_jsonl, read_to_string, to_jsonl, write_atomic, META_KEY};
use crate::kgraph::{build_graph, incident_nodes, triples_tsv, KgTriple};
use crate::mentions::Mention;
use crate::supervision::{label_candidates, DbKind, LabelVote, Resolved, SecondaryDb, SupervisionMode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Ingest,
    Annotate,
    Extract,
    Candidates,
    Features,
    Supervise,
    Learn,
    Infer,
    Evaluate,
    Export,
}

impl Stage {
    pub const ALL: [Stage; 10] = [
        Stage::Ingest,
        Stage::Annotate,
        Stage::Extract,
        Stage::Candidates,
        Stage::Features,
        Stage::Supervise,
        Stage::Learn,
        Stage::Infer,
        Stage::Evaluate,
        Stage::Export,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Ingest => "ingest",
            Stage::Annotate => "annotate",
            Stage::Extract => "extract",
            Stage::Candidates => "candidates",
            Stage::Features => "features",
            Stage::Supervise => "supervise",
            Stage::Learn => "learn",
            Stage::Infer => "infer",
            Stage::Evaluate => "evaluate",
            Stage::Export => "export",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Stage {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Stage::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown stage `{s}`")))
    }
}

/// Artifact file names inside the output directory.
pub mod files {
    pub const DOCUMENTS: &str = "documents.jsonl";
    pub const ANNOTATED: &str = "annotated.jsonl";
    pub const MENTIONS: &str = "mentions.jsonl";
    pub const CANDIDATES: &str = "candidates.jsonl";
    pub const FEATURES: &str = "features.tsv";
    pub const FEATURIZED: &str = "featurized.jsonl";
    pub const VOTES: &str = "votes.jsonl";
    pub const SPLIT: &str = "split.jsonl";
    pub const LABELS: &str = "labels.jsonl";
    pub const WEIGHTS: &str = "weights.tsv";
    pub const MARGINALS: &str = "marginals.jsonl";
    pub const METRICS: &str = "metrics.csv";
    pub const CALIBRATION: &str = "calibration.csv";
    pub const ROC: &str = "roc.csv";
    pub const PR: &str = "pr.csv";
    pub const EVALUATION: &str = "evaluation.jsonl";
    pub const KG: &str = "kg.jsonl";
    pub const INCIDENTS: &str = "incidents.jsonl";
    pub const KG_TSV: &str = "kg.tsv";
    pub const ABLATION: &str = "ablation.csv";
    pub const MANIFEST: &str = "manifest.json";
    pub const CHECKPOINTS: &str = ".checkpoints";
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StageOutcome {
    Ran,
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub output: PathBuf,
    pub config_hash: String,
    pub seeds: Seeds,
    pub outcomes: Vec<(Stage, StageOutcome)>,
}

impl RunSummary {
    pub fn outcome(&self, stage: Stage) -> Option<StageOutcome> {
        self.outcomes.iter().find(|(s, _)| *s == stage).map(|(_, o)| *o)
    }
}

/// Provenance header carried by every artifact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArtifactMeta {
    pub stage: Stage,
    pub config_hash: String,
    pub seeds: Seeds,
}

/// Split an artifact into its header line (if any) and payload.
fn split_header(bytes: &[u8]) -> (&[u8], &[u8]) {
    let is_header = bytes.starts_with(format!("{{\"{META_KEY}\":").as_bytes())
        || bytes.starts_with(format!("# {META_KEY} ").as_bytes());
    match bytes.iter().position(|&b| b == b'\n') {
        Some(nl) if is_header => bytes.split_at(nl + 1),
        _ => (&[], bytes),
    }
}

fn header_for(name: &str, meta: &ArtifactMeta) -> Vec<u8> {
    if name.ends_with(".jsonl") {
        meta_line(meta)
    } else {
        format!("# {META_KEY} {}\n", serde_json::to_string(meta).expect("meta serializes")).into_bytes()
    }
}

fn digest(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn file_digest(path: &Path) -> Result<String> {
    Ok(digest(&fs::read(path).map_err(|e| Error::io(path, e))?))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Checkpoint {
    stage: Stage,
    key: String,
    /// Payload digest of each output file.
    outputs: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct ManifestEntry {
    stage: Stage,
    key: String,
    outcome: StageOutcome,
    outputs: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Manifest {
    config_hash: String,
    seeds: Seeds,
    stages: Vec<ManifestEntry>,
}

/// A label record written by the supervise stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelRecord {
    pub candidate_id: String,
    pub resolved: Resolved,
    pub votes: Vec<LabelVote>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitRecord {
    pub doc_id: String,
    pub part: SplitPart,
}

/// Inputs loaded once per run.
struct Inputs {
    gazetteers: GazetteerSet,
    rules: RuleConfig,
}

fn load_inputs(config: &PipelineConfig) -> Result<Inputs> {
    let gazetteers = match &config.paths.gazetteers {
        Some(dir) => GazetteerSet::load_dir(dir)?,
        None => GazetteerSet::maritime(),
    };
    let rules = match &config.paths.rules {
        Some(p) => RuleConfig::from_toml(&read_to_string(p)?)?,
        None => RuleConfig::default(),
    };
    Ok(Inputs { gazetteers, rules })
}

struct Runner<'a> {
    config: &'a PipelineConfig,
    out: PathBuf,
    config_hash: String,
    /// Payload digest of every artifact produced or verified so far.
    digests: BTreeMap<String, String>,
    manifest: Vec<ManifestEntry>,
}

type Outputs = Vec<(&'static str, Vec<u8>)>;

impl<'a> Runner<'a> {
    fn new(config: &'a PipelineConfig) -> Self {
        Runner {
            config,
            out: config.paths.output.clone(),
            config_hash: config.config_hash(),
            digests: BTreeMap::new(),
            manifest: Vec::new(),
        }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn meta(&self, stage: Stage) -> ArtifactMeta {
        ArtifactMeta {
            stage,
            config_hash: self.config_hash.clone(),
            seeds: self.config.seeds.clone(),
        }
    }

    fn checkpoint_path(&self, stage: Stage) -> PathBuf {
        self.out.join(files::CHECKPOINTS).join(format!("{stage}.json"))
    }

    /// The stored checkpoint if its key matches and every output is intact. Headers of
    /// intact outputs are refreshed to the current run's metadata.
    fn reusable(&self, stage: Stage, key: &str) -> Result<Option<Checkpoint>> {
        let Ok(text) = fs::read_to_string(self.checkpoint_path(stage)) else {
            return Ok(None);
        };
        let Ok(cp) = serde_json::from_str::<Checkpoint>(&text) else {
            return Ok(None);
        };
        if cp.key != key {
            return Ok(None);
        }
        let header_meta = self.meta(stage);
        for (name, want) in &cp.outputs {
            let path = self.path(name);
            let Ok(bytes) = fs::read(&path) else {
                return Ok(None);
            };
            let (header, payload) = split_header(&bytes);
            if digest(payload) != *want {
                return Ok(None);
            }
            let fresh = header_for(name, &header_meta);
            if header != fresh.as_slice() {
                let mut rewritten = fresh;
                rewritten.extend_from_slice(payload);
                write_atomic(&path, &rewritten)?;
            }
        }
        Ok(Some(cp))
    }

    /// Run `stage` unless its checkpoint is current. `inputs` name upstream artifacts,
    /// `params` is everything else the stage output depends on.
    fn stage(
        &mut self,
        stage: Stage,
        inputs: &[&str],
        params: serde_json::Value,
        run: impl FnOnce(&Self) -> Result<Outputs>,
    ) -> Result<()> {
        let input_digests: Vec<(&str, &String)> = inputs
            .iter()
            .map(|n| {
                self.digests.get(*n).map(|d| (*n, d)).ok_or_else(|| Error::Stage {
                    stage: stage.to_string(),
                    message: format!("missing input artifact {n}"),
                })
            })
            .collect::<Result<_>>()?;
        let key = digest(
            serde_json::to_string(&(stage, &params, &input_digests))
                .expect("key material serializes")
                .as_bytes(),
        );
        let (outputs, outcome) = match self.reusable(stage, &key)? {
            Some(cp) => {
                log::info!("{stage}: unchanged, skipped");
                (cp.outputs, StageOutcome::Skipped)
            }
            None => {
                log::info!("{stage}: running");
                let produced = run(self).map_err(|e| tag(stage, e))?;
                let meta = self.meta(stage);
                let mut outputs = BTreeMap::new();
                for (name, payload) in produced {
                    let mut bytes = header_for(name, &meta);
                    bytes.extend_from_slice(&payload);
                    write_atomic(&self.path(name), &bytes).map_err(|e| tag(stage, e))?;
                    outputs.insert(name.to_string(), digest(&payload));
                }
                let cp = Checkpoint {
                    stage,
                    key: key.clone(),
                    outputs: outputs.clone(),
                };
                let json = serde_json::to_vec_pretty(&cp).expect("checkpoint serializes");
                write_atomic(&self.checkpoint_path(stage), &json).map_err(|e| tag(stage, e))?;
                (outputs, StageOutcome::Ran)
            }
        };
        self.digests.extend(outputs.iter().map(|(k, v)| (k.clone(), v.clone())));
        self.manifest.push(ManifestEntry {
            stage,
            key,
            outcome,
            outputs,
        });
        Ok(())
    }

    fn read<T: DeserializeOwned>(&self, name: &str) -> Result<Vec<T>> {
        read_jsonl(&self.path(name))
    }

    fn write_manifest(&self) -> Result<()> {
        let manifest = Manifest {
            config_hash: self.config_hash.clone(),
            seeds: self.config.seeds.clone(),
            stages: self.manifest.clone(),
        };
        let json = serde_json::to_vec_pretty(&manifest).expect("manifest serializes");
        write_atomic(&self.path(files::MANIFEST), &json)
    }
}

fn tag(stage: Stage, e: Error) -> Error {
    match e {
        Error::Stage { .. } => e,
        other => Error::Stage {
            stage: stage.to_string(),
            message: other.to_string(),
        },
    }
}

fn external(stage: Stage, path: &Path) -> Result<String> {
    if !path.exists() {
        return Err(Error::Stage {
            stage: stage.to_string(),
            message: format!("missing input {}", path.display()),
        });
    }
    file_digest(path).map_err(|e| tag(stage, e))
}

fn optional_external(stage: Stage, path: &Option<PathBuf>) -> Result<Option<String>> {
    path.as_deref().map(|p| external(stage, p)).transpose()
}

fn load_dbs(config: &PipelineConfig) -> Result<Vec<SecondaryDb>> {
    let mut dbs = Vec::new();
    if let Some(p) = &config.paths.piracy_db {
        dbs.push(SecondaryDb::load(DbKind::Piracy, p)?);
    }
    if let Some(p) = &config.paths.maritime_db {
        dbs.push(SecondaryDb::load(DbKind::Maritime, p)?);
    }
    if dbs.is_empty() {
        log::warn!("no secondary databases configured; database supervision abstains");
    }
    Ok(dbs)
}

fn split_from_records(records: &[SplitRecord]) -> CorpusSplit {
    let mut split = CorpusSplit {
        train_ids: Default::default(),
        dev_ids: Default::default(),
        test_ids: Default::default(),
    };
    for r in records {
        let set = match r.part {
            SplitPart::Train => &mut split.train_ids,
            SplitPart::Dev => &mut split.dev_ids,
            SplitPart::Test => &mut split.test_ids,
        };
        set.insert(r.doc_id.clone());
    }
    split
}

fn split_records(split: &CorpusSplit) -> Vec<SplitRecord> {
    let mut out: Vec<SplitRecord> = [
        (&split.train_ids, SplitPart::Train),
        (&split.dev_ids, SplitPart::Dev),
        (&split.test_ids, SplitPart::Test),
    ]
    .into_iter()
    .flat_map(|(ids, part)| {
        ids.iter().map(move |d| SplitRecord {
            doc_id: d.clone(),
            part,
        })
    })
    .collect();
    out.sort_by(|a, b| a.doc_id.cmp(&b.doc_id));
    out
}

/// Gold labels from the configured gold file; without one, resolved supervision labels
/// stand in (Abstains stay unlabeled).
fn test_labels(
    config: &PipelineConfig,
    candidates: &[RelationCandidate],
    votes: &[LabelVote],
) -> Result<BTreeMap<String, bool>> {
    match &config.paths.gold {
        Some(p) => {
            let gold: Vec<GoldRecord> = read_jsonl(p)?;
            Ok(gold_labels(&gold, candidates))
        }
        None => {
            log::warn!("no gold file configured; scoring against supervision labels");
            Ok(label_candidates(candidates, votes, config.supervision.mode)
                .into_iter()
                .filter_map(|l| match l.resolved {
                    Resolved::True => Some((l.candidate.candidate_id, true)),
                    Resolved::False => Some((l.candidate.candidate_id, false)),
                    Resolved::Abstain => None,
                })
                .collect())
        }
    }
}

fn json<T: Serialize>(v: &T) -> serde_json::Value {
    serde_json::to_value(v).expect("parameters serialize")
}

/// Run every stage up to and including `until`, reusing current checkpoints.
pub fn run_pipeline(config: &PipelineConfig, until: Stage) -> Result<RunSummary> {
    config.validate()?;
    let inputs = load_inputs(config).map_err(|e| tag(Stage::Ingest, e))?;
    let mut r = Runner::new(config);
    fs::create_dir_all(&r.out).map_err(|e| Error::io(&r.out, e))?;
    let paths = &config.paths;

    let corpus_digest = external(Stage::Ingest, &paths.corpus)?;
    r.stage(Stage::Ingest, &[], json(&(&corpus_digest, paths.corpus_format)), |_| {
        let docs = load_corpus(&paths.corpus, paths.corpus_format)?;
        Ok(vec![(files::DOCUMENTS, to_jsonl(&docs))])
    })?;

    if until >= Stage::Annotate {
        r.stage(Stage::Annotate, &[files::DOCUMENTS], json(&inputs.gazetteers), |r| {
            let docs: Vec<Document> = r.read(files::DOCUMENTS)?;
            let annotated: Vec<Document> = docs.iter().map(|d| annotate(d, &inputs.gazetteers)).collect();
            Ok(vec![(files::ANNOTATED, to_jsonl(&annotated))])
        })?;
    }

    if until >= Stage::Extract {
        let params = json(&(&inputs.gazetteers, &inputs.rules.roles, &inputs.rules.aliases));
        r.stage(Stage::Extract, &[files::ANNOTATED], params, |r| {
            let docs: Vec<Document> = r.read(files::ANNOTATED)?;
            let mentions = corpus_mentions(&docs, &inputs.gazetteers, &inputs.rules)?;
            let flat: Vec<&Mention> = docs.iter().flat_map(|d| mentions[&d.doc_id].iter()).collect();
            Ok(vec![(files::MENTIONS, to_jsonl(&flat))])
        })?;
    }

    if until >= Stage::Candidates {
        r.stage(Stage::Candidates, &[files::ANNOTATED, files::MENTIONS], json(&()), |r| {
            let docs: Vec<Document> = r.read(files::ANNOTATED)?;
            let mentions = group_mentions(r.read(files::MENTIONS)?);
            Ok(vec![(files::CANDIDATES, to_jsonl(&corpus_candidates(&docs, &mentions)))])
        })?;
    }

    if until >= Stage::Features {
        let params = json(&config.features.windows);
        r.stage(Stage::Features, &[files::ANNOTATED, files::CANDIDATES], params, |r| {
            let docs: Vec<Document> = r.read(files::ANNOTATED)?;
            let mut candidates: Vec<RelationCandidate> = r.read(files::CANDIDATES)?;
            let dict = corpus_features(&docs, &mut candidates, &config.features.windows)?;
            Ok(vec![
                (files::FEATURES, dict.to_tsv().into_bytes()),
                (files::FEATURIZED, to_jsonl(&candidates)),
            ])
        })?;
    }

    if until >= Stage::Supervise {
        let params = json(&(
            optional_external(Stage::Supervise, &paths.piracy_db)?,
            optional_external(Stage::Supervise, &paths.maritime_db)?,
            &inputs.rules,
            config.supervision.mode,
            &config.split,
            config.seeds.split,
        ));
        let deps = [files::ANNOTATED, files::MENTIONS, files::FEATURIZED];
        r.stage(Stage::Supervise, &deps, params, |r| {
            let docs: Vec<Document> = r.read(files::ANNOTATED)?;
            let mentions = group_mentions(r.read(files::MENTIONS)?);
            let candidates: Vec<RelationCandidate> = r.read(files::FEATURIZED)?;
            let dbs = load_dbs(config)?;
            let votes = corpus_votes(&docs, &mentions, &candidates, &dbs, &inputs.rules);
            let split = split_corpus(&docs, config.split.test_fraction, config.split.dev_fraction, config.seeds.split)?;
            let labels: Vec<LabelRecord> = label_candidates(&candidates, &votes, config.supervision.mode)
                .into_iter()
                .map(|l| LabelRecord {
                    candidate_id: l.candidate.candidate_id,
                    resolved: l.resolved,
                    votes: l.votes,
                })
                .collect();
            Ok(vec![
                (files::VOTES, to_jsonl(&votes)),
                (files::SPLIT, to_jsonl(&split_records(&split))),
                (files::LABELS, to_jsonl(&labels)),
            ])
        })?;
    }

    if until >= Stage::Learn {
        let params = json(&(config.learn_params(), config.seeds.balance, config.supervision.mode));
        let deps = [files::FEATURES, files::FEATURIZED, files::VOTES, files::SPLIT];
        r.stage(Stage::Learn, &deps, params, |r| {
            let dim = FeatureDictionary::load(&r.path(files::FEATURES))?.len();
            let candidates: Vec<RelationCandidate> = r.read(files::FEATURIZED)?;
            let votes: Vec<LabelVote> = r.read(files::VOTES)?;
            let split = split_from_records(&r.read(files::SPLIT)?);
            let gold = BTreeMap::new();
            let prepared = Prepared {
                candidates: &candidates,
                dim,
                votes: &votes,
                split: &split,
                gold: &gold,
            };
            let (_, weights) = learn_split(&prepared, config.supervision.mode, &config.learn_params(), config.seeds.balance)?;
            Ok(vec![(files::WEIGHTS, weights.to_tsv().into_bytes())])
        })?;
    }

    if until >= Stage::Infer {
        let params = json(&config.infer_params());
        r.stage(Stage::Infer, &[files::FEATURIZED, files::WEIGHTS], params, |r| {
            let candidates: Vec<RelationCandidate> = r.read(files::FEATURIZED)?;
            let weights = Weights::load(&r.path(files::WEIGHTS))?;
            let inference = infer_corpus(&candidates, &weights, &config.infer_params())?;
            Ok(vec![(files::MARGINALS, to_jsonl(&inference.marginals))])
        })?;
    }

    if until >= Stage::Evaluate {
        let params = json(&(optional_external(Stage::Evaluate, &paths.gold)?, config.supervision.mode));
        let deps = [files::FEATURIZED, files::VOTES, files::SPLIT, files::MARGINALS];
        r.stage(Stage::Evaluate, &deps, params, |r| {
            let candidates: Vec<RelationCandidate> = r.read(files::FEATURIZED)?;
            let votes: Vec<LabelVote> = r.read(files::VOTES)?;
            let split = split_from_records(&r.read(files::SPLIT)?);
            let marginals: Vec<Marginal> = r.read(files::MARGINALS)?;
            let gold = test_labels(config, &candidates, &votes)?;
            let prepared = Prepared {
                candidates: &candidates,
                dim: 0,
                votes: &votes,
                split: &split,
                gold: &gold,
            };
            let labeled = label_candidates(&candidates, &votes, config.supervision.mode);
            let (reports, calibration, scored) = evaluate_split(&prepared, &labeled, &marginals);
            for rep in &reports {
                for w in &rep.warnings {
                    log::warn!("{}: {w}", rep.relation);
                }
            }
            let (roc, pr) = curves_csv(&scored);
            Ok(vec![
                (files::METRICS, metrics_csv(&reports).into_bytes()),
                (files::CALIBRATION, calibration.to_csv().into_bytes()),
                (files::ROC, roc.into_bytes()),
                (files::PR, pr.into_bytes()),
                (files::EVALUATION, to_jsonl(&reports)),
            ])
        })?;
    }

    if until >= Stage::Export {
        let params = json(&(&inputs.gazetteers, config.graph.min_prob));
        r.stage(Stage::Export, &[files::FEATURIZED, files::MARGINALS], params, |r| {
            let candidates: Vec<RelationCandidate> = r.read(files::FEATURIZED)?;
            let marginals: Vec<Marginal> = r.read(files::MARGINALS)?;
            let graph = build_graph(&marginals, &candidates, &inputs.gazetteers, config.graph.min_prob);
            Ok(vec![
                (files::KG, to_jsonl(&graph)),
                (files::INCIDENTS, to_jsonl(&incident_nodes(&graph))),
                (files::KG_TSV, triples_tsv(&graph).into_bytes()),
            ])
        })?;
    }

    r.write_manifest()?;
    Ok(RunSummary {
        output: r.out.clone(),
        config_hash: r.config_hash.clone(),
        seeds: config.seeds.clone(),
        outcomes: r.manifest.iter().map(|e| (e.stage, e.outcome)).collect(),
    })
}

fn group_mentions(flat: Vec<Mention>) -> BTreeMap<String, Vec<Mention>> {
    let mut out: BTreeMap<String, Vec<Mention>> = BTreeMap::new();
    for m in flat {
        out.entry(m.doc_id.clone()).or_default().push(m);
    }
    out
}

/// Relation reports of the evaluate stage, read back from the output directory.
pub fn read_reports(config: &PipelineConfig) -> Result<Vec<RelationReport>> {
    read_jsonl(&config.paths.output.join(files::EVALUATION))
}

pub fn read_graph(config: &PipelineConfig) -> Result<Vec<KgTriple>> {
    read_jsonl(&config.paths.output.join(files::KG))
}

/// Train and evaluate every supervision mode on the supervised artifacts and write the
/// per-relation F1 table.
pub fn run_ablation(config: &PipelineConfig) -> Result<Vec<AblationRow>> {
    run_pipeline(config, Stage::Supervise)?;
    let out = &config.paths.output;
    let read = |name: &str| out.join(name);
    let dim = FeatureDictionary::load(&read(files::FEATURES))?.len();
    let candidates: Vec<RelationCandidate> = read_jsonl(&read(files::FEATURIZED))?;
    let votes: Vec<LabelVote> = read_jsonl(&read(files::VOTES))?;
    let split = split_from_records(&read_jsonl(&read(files::SPLIT))?);
    let gold = test_labels(config, &candidates, &votes)?;
    let prepared = Prepared {
        candidates: &candidates,
        dim,
        votes: &votes,
        split: &split,
        gold: &gold,
    };
    let mut rows: BTreeMap<_, AblationRow> = BTreeMap::new();
    for mode in SupervisionMode::ALL {
        let run = run_mode(&prepared, mode, &config.learn_params(), &config.infer_params(), config.seeds.balance)
            .map_err(|e| Error::Stage {
                stage: format!("ablation/{mode}"),
                message: e.to_string(),
            })?;
        for rep in run.reports {
            rows.entry(rep.relation)
                .or_insert_with(|| AblationRow {
                    relation: rep.relation,
                    f1: BTreeMap::new(),
                })
                .f1
                .insert(mode.name().to_string(), rep.f1);
        }
    }
    let rows: Vec<AblationRow> = rows.into_values().collect();
    let meta = ArtifactMeta {
        stage: Stage::Evaluate,
        config_hash: config.config_hash(),
        seeds: config.seeds.clone(),
    };
    let mut bytes = header_for(files::ABLATION, &meta);
    bytes.extend_from_slice(ablation_csv(&rows).as_bytes());
    write_atomic(&read(files::ABLATION), &bytes)?;
    Ok(rows)
}
