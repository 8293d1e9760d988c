//! Weight learning and marginal inference over candidate truth variables.

pub mod graph;
pub mod learn;

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::candidates::{RelationCandidate, RelationType};
use crate::error::{Error, Result};
use crate::io::write_atomic;
use crate::mentions::EntityType;
use crate::supervision::{LabeledCandidate, Resolved, Slot};

pub use graph::{gibbs_marginals, Coupling, FactorGraph};
pub use learn::{train_logistic, Example, LearnParams};

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// One weight vector per relation type, indexed by feature id. Types without training
/// data are absent and score every candidate 0.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Weights {
    pub dim: usize,
    pub per_type: BTreeMap<RelationType, Vec<f64>>,
}

impl Weights {
    pub fn get(&self, rtype: RelationType, feature: u32) -> f64 {
        self.per_type
            .get(&rtype)
            .and_then(|w| w.get(feature as usize))
            .copied()
            .unwrap_or(0.0)
    }

    pub fn score(&self, rtype: RelationType, features: &[u32]) -> f64 {
        features.iter().map(|&f| self.get(rtype, f)).sum()
    }

    /// TSV rows `relation_type  feature_id  weight` for non-zero weights, after a
    /// `# dim` header line.
    pub fn to_tsv(&self) -> String {
        let mut out = format!("# dim\t{}\n", self.dim);
        for (rtype, w) in &self.per_type {
            out.push_str(&format!("# trained\t{rtype}\n"));
            for (f, x) in w.iter().enumerate().filter(|(_, x)| **x != 0.0) {
                out.push_str(&format!("{rtype}\t{f}\t{x}\n"));
            }
        }
        out
    }

    pub fn from_tsv(text: &str, path: &Path) -> Result<Self> {
        let malformed = |line: usize, message: String| Error::Malformed {
            path: path.to_path_buf(),
            line,
            message,
        };
        let mut weights = Weights::default();
        for (n, line) in text.lines().enumerate() {
            let fields: Vec<&str> = line.split('\t').collect();
            match fields.as_slice() {
                [""] => {}
                ["# dim", d] => weights.dim = d.parse().map_err(|_| malformed(n + 1, "bad dim".into()))?,
                ["# trained", r] => {
                    let rtype = RelationType::from_str(r).map_err(|e| malformed(n + 1, e.to_string()))?;
                    weights.per_type.insert(rtype, vec![0.0; weights.dim]);
                }
                [comment, ..] if comment.starts_with('#') => {}
                [r, f, x] => {
                    let rtype = RelationType::from_str(r).map_err(|e| malformed(n + 1, e.to_string()))?;
                    let f: usize = f.parse().map_err(|_| malformed(n + 1, "bad feature id".into()))?;
                    let x: f64 = x.parse().map_err(|_| malformed(n + 1, "bad weight".into()))?;
                    let dim = weights.dim;
                    let w = weights.per_type.entry(rtype).or_insert_with(|| vec![0.0; dim]);
                    if f >= w.len() {
                        return Err(malformed(n + 1, format!("feature id {f} beyond dim {}", w.len())));
                    }
                    w[f] = x;
                }
                _ => return Err(malformed(n + 1, "expected `relation_type<TAB>feature_id<TAB>weight`".into())),
            }
        }
        Ok(weights)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.to_tsv().as_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_tsv(&crate::io::read_to_string(path)?, path)
    }
}

/// Train one logistic model per relation type on the True/False examples of `train`.
/// Types with no examples are left untrained (and logged); an entirely empty training
/// set is an error.
pub fn learn_weights(train: &[LabeledCandidate], dim: usize, params: &LearnParams) -> Result<Weights> {
    let mut by_type: BTreeMap<RelationType, Vec<Example>> = BTreeMap::new();
    for l in train {
        let label = match l.resolved {
            Resolved::True => true,
            Resolved::False => false,
            Resolved::Abstain => continue,
        };
        by_type.entry(l.candidate.rtype).or_default().push(Example {
            features: l.candidate.features.iter().copied().filter(|&f| (f as usize) < dim).collect(),
            label,
        });
    }
    if by_type.is_empty() {
        return Err(Error::EmptyTrainingSet("all relation types".into()));
    }
    for rtype in RelationType::ALL.iter().filter(|r| !by_type.contains_key(r)) {
        log::warn!("{rtype}: no training examples, weights stay zero");
    }
    let per_type = by_type
        .into_par_iter()
        .map(|(rtype, examples)| {
            let p = LearnParams {
                seed: params.seed ^ (rtype as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15),
                ..*params
            };
            let w = train_logistic(&examples, dim, &p);
            if let Some((f, x)) = w.iter().enumerate().find(|(_, x)| !x.is_finite()) {
                return Err(Error::NonFiniteWeight { feature: format!("{rtype}/{f}"), weight: *x });
            }
            Ok((rtype, w))
        })
        .collect::<Result<BTreeMap<_, _>>>()?;
    Ok(Weights { dim, per_type })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Marginal {
    pub candidate_id: String,
    pub probability: f64,
    pub seed: u64,
    pub n_samples: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InferenceMode {
    #[default]
    ExactUnary,
    Gibbs,
}

impl fmt::Display for InferenceMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            InferenceMode::ExactUnary => "exact-unary",
            InferenceMode::Gibbs => "gibbs",
        })
    }
}

impl FromStr for InferenceMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact-unary" => Ok(InferenceMode::ExactUnary),
            "gibbs" => Ok(InferenceMode::Gibbs),
            other => Err(Error::Config(format!("unknown inference mode `{other}` (exact-unary, gibbs)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct InferParams {
    pub mode: InferenceMode,
    pub n_samples: usize,
    /// Defaults to 10% of `n_samples`.
    pub burn_in: Option<usize>,
    pub seed: u64,
    /// Weight of relation ⇒ role implication factors; `None` keeps the graph unary.
    pub coupling: Option<f64>,
}

impl Default for InferParams {
    fn default() -> Self {
        InferParams {
            mode: InferenceMode::ExactUnary,
            n_samples: 1000,
            burn_in: None,
            seed: 0,
            coupling: None,
        }
    }
}

impl InferParams {
    pub fn burn_in(&self) -> usize {
        self.burn_in.unwrap_or(self.n_samples / 10)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Inference {
    pub marginals: Vec<Marginal>,
    /// Feature occurrences dropped because the trained weights do not cover their ids.
    pub unknown_features: usize,
}

fn known_score(weights: &Weights, c: &RelationCandidate, unknown: &mut usize) -> f64 {
    let mut s = 0.0;
    for &f in &c.features {
        if (f as usize) < weights.dim {
            s += weights.get(c.rtype, f);
        } else {
            *unknown += 1;
        }
    }
    s
}

/// Factor graph of one document's candidates. With `coupling`, every Actor endpoint gets
/// a role variable (one per mention and role slot) implied by the candidate variable.
pub fn document_graph(candidates: &[&RelationCandidate], unary: &[f64], coupling: Option<f64>) -> FactorGraph {
    let mut g = FactorGraph::new(unary.to_vec());
    if let Some(rho) = coupling {
        let mut roles: BTreeMap<(String, Slot), usize> = BTreeMap::new();
        for (i, c) in candidates.iter().enumerate() {
            for (m, spec) in [(&c.left, c.rtype.left_spec()), (&c.right, c.rtype.right_spec())] {
                if spec.etype != EntityType::Actor {
                    continue;
                }
                let key = (m.mention_id.clone(), Slot::of(spec));
                let v = *roles.entry(key).or_insert_with(|| g.add_variable(0.0));
                g.imply(i, v, rho);
            }
        }
    }
    g
}

/// Marginal probability of every candidate, in input order.
pub fn infer_corpus(candidates: &[RelationCandidate], weights: &Weights, params: &InferParams) -> Result<Inference> {
    let mut unknown = 0usize;
    let unary: Vec<f64> = candidates.iter().map(|c| known_score(weights, c, &mut unknown)).collect();
    if unknown > 0 {
        log::warn!("{unknown} feature occurrences are not covered by the trained weights and were dropped");
    }
    let marginal = |i: usize, p: f64, n_samples: usize| Marginal {
        candidate_id: candidates[i].candidate_id.clone(),
        probability: p,
        seed: params.seed,
        n_samples,
    };
    let probs: Vec<f64> = match params.mode {
        InferenceMode::ExactUnary => {
            if params.coupling.is_some() {
                log::warn!("coupling factors are ignored in exact-unary mode");
            }
            unary.iter().map(|&s| sigmoid(s)).collect()
        }
        InferenceMode::Gibbs => {
            let mut by_doc: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
            for (i, c) in candidates.iter().enumerate() {
                by_doc.entry(c.doc_id.as_str()).or_default().push(i);
            }
            let groups: Vec<Vec<usize>> = by_doc.into_values().collect();
            let results: Vec<Vec<f64>> = groups
                .par_iter()
                .enumerate()
                .map(|(k, idx)| {
                    let cands: Vec<&RelationCandidate> = idx.iter().map(|&i| &candidates[i]).collect();
                    let u: Vec<f64> = idx.iter().map(|&i| unary[i]).collect();
                    let g = document_graph(&cands, &u, params.coupling);
                    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
                    rng.set_stream(k as u64);
                    graph::gibbs_with_rng(&g, params.n_samples, params.burn_in(), &mut rng)
                })
                .collect::<Result<_>>()?;
            let mut probs = vec![0.0; candidates.len()];
            for (idx, m) in groups.iter().zip(results) {
                for (&i, p) in idx.iter().zip(m) {
                    probs[i] = p;
                }
            }
            probs
        }
    };
    let n_samples = match params.mode {
        InferenceMode::ExactUnary => 0,
        InferenceMode::Gibbs => params.n_samples,
    };
    Ok(Inference {
        marginals: probs.into_iter().enumerate().map(|(i, p)| marginal(i, p, n_samples)).collect(),
        unknown_features: unknown,
    })
}
