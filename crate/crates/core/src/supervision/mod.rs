//! Noisy labels from secondary databases and heuristic rules, majority resolution and
//! class balancing.

pub mod db;
pub mod rules;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::candidates::{ArgSpec, RelationCandidate, RelationType};
use crate::corpus::Document;
use crate::error::{Error, Result};
use crate::mentions::{EntityType, Mention, Role, RoleRuleSet};

pub use db::{DbKind, DbRecord, SecondaryDb};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Polarity {
    True,
    False,
}

impl From<bool> for Polarity {
    fn from(b: bool) -> Self {
        if b {
            Polarity::True
        } else {
            Polarity::False
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Resolved {
    True,
    False,
    Abstain,
}

/// The argument slot an entity-level vote speaks about.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Slot {
    Victim,
    Aggressor,
    Date,
    Location,
    IncidentType,
}

impl Slot {
    pub fn of(spec: ArgSpec) -> Slot {
        match (spec.etype, spec.role) {
            (EntityType::Actor, Some(Role::Aggressor)) => Slot::Aggressor,
            (EntityType::Actor, _) => Slot::Victim,
            (EntityType::Date, _) => Slot::Date,
            (EntityType::Location, _) => Slot::Location,
            (EntityType::IncidentType, _) => Slot::IncidentType,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntityVote {
    pub mention_id: String,
    pub slot: Slot,
    pub source: String,
    pub polarity: Polarity,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LabelVote {
    pub candidate_id: String,
    pub source: String,
    pub polarity: Polarity,
}

impl LabelVote {
    pub fn new(candidate_id: &str, source: &str, truth: bool) -> Self {
        LabelVote {
            candidate_id: candidate_id.to_string(),
            source: source.to_string(),
            polarity: Polarity::from(truth),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledCandidate {
    pub candidate: RelationCandidate,
    pub votes: Vec<LabelVote>,
    pub resolved: Resolved,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SupervisionMode {
    DbOnly,
    RulesOnly,
    #[default]
    Both,
}

pub const DB_ENTITY: &str = "db:entity";
pub const RULES_ENTITY: &str = "rules:entity";

impl SupervisionMode {
    pub const ALL: [SupervisionMode; 3] = [SupervisionMode::DbOnly, SupervisionMode::RulesOnly, SupervisionMode::Both];

    pub fn admits(self, source: &str) -> bool {
        match self {
            SupervisionMode::DbOnly => source.starts_with("db:"),
            SupervisionMode::RulesOnly => source.starts_with("rules:"),
            SupervisionMode::Both => true,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SupervisionMode::DbOnly => "db-only",
            SupervisionMode::RulesOnly => "rules-only",
            SupervisionMode::Both => "both",
        }
    }
}

impl fmt::Display for SupervisionMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SupervisionMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SupervisionMode::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown supervision mode `{s}` (db-only, rules-only, both)")))
    }
}

fn majority<'a>(polarities: impl IntoIterator<Item = &'a Polarity>) -> Resolved {
    let (mut t, mut f) = (0usize, 0usize);
    for p in polarities {
        match p {
            Polarity::True => t += 1,
            Polarity::False => f += 1,
        }
    }
    match t.cmp(&f) {
        std::cmp::Ordering::Greater => Resolved::True,
        std::cmp::Ordering::Less => Resolved::False,
        std::cmp::Ordering::Equal => Resolved::Abstain,
    }
}

/// Strict majority; ties and empty vote sets abstain.
pub fn resolve_votes(votes: &[LabelVote]) -> Resolved {
    majority(votes.iter().map(|v| &v.polarity))
}

/// Relation votes from entity votes: both endpoints True gives True, any endpoint False
/// gives False. Endpoint labels are the majority over `entity_votes` per (mention, slot).
pub fn propagate(entity_votes: &[EntityVote], candidates: &[RelationCandidate], source: &str) -> Vec<LabelVote> {
    let mut grouped: BTreeMap<(&str, Slot), Vec<Polarity>> = BTreeMap::new();
    for v in entity_votes {
        grouped.entry((v.mention_id.as_str(), v.slot)).or_default().push(v.polarity);
    }
    let label = |m: &Mention, slot: Slot| {
        grouped
            .get(&(m.mention_id.as_str(), slot))
            .map(|ps| majority(ps.iter()))
            .unwrap_or(Resolved::Abstain)
    };
    candidates
        .iter()
        .filter_map(|c| {
            let l = label(&c.left, Slot::of(c.rtype.left_spec()));
            let r = label(&c.right, Slot::of(c.rtype.right_spec()));
            match (l, r) {
                (Resolved::False, _) | (_, Resolved::False) => Some(LabelVote::new(&c.candidate_id, source, false)),
                (Resolved::True, Resolved::True) => Some(LabelVote::new(&c.candidate_id, source, true)),
                _ => None,
            }
        })
        .collect()
}

/// Database distant supervision for one document. Documents matching no record get
/// no votes.
pub fn db_supervise(
    doc: &Document,
    mentions: &[Mention],
    candidates: &[RelationCandidate],
    dbs: &[SecondaryDb],
    aliases: &BTreeMap<String, String>,
) -> Vec<LabelVote> {
    let entity: Vec<EntityVote> = dbs
        .iter()
        .flat_map(|db| db::db_entity_votes(doc, mentions, db, aliases))
        .collect();
    propagate(&entity, candidates, DB_ENTITY)
}

/// Rule-based supervision for one document. Rules named in `disabled` cast no votes.
pub fn rule_supervise(
    doc: &Document,
    mentions: &[Mention],
    candidates: &[RelationCandidate],
    rules: &RoleRuleSet,
    disabled: &BTreeSet<String>,
) -> Vec<LabelVote> {
    let entity: Vec<EntityVote> = rules::rule_entity_votes(doc, mentions, rules)
        .into_iter()
        .filter(|v| !disabled.contains(&v.source))
        .collect();
    let mut votes = propagate(&entity, candidates, RULES_ENTITY);
    votes.extend(
        rules::rule_relation_votes(doc, mentions, candidates, rules)
            .into_iter()
            .filter(|v| !disabled.contains(&v.source)),
    );
    votes
}

/// All votes of both modes, sorted by (candidate_id, source).
pub fn supervise_document(
    doc: &Document,
    mentions: &[Mention],
    candidates: &[RelationCandidate],
    dbs: &[SecondaryDb],
    rules: &RoleRuleSet,
    aliases: &BTreeMap<String, String>,
    disabled: &BTreeSet<String>,
) -> Vec<LabelVote> {
    let mut votes = db_supervise(doc, mentions, candidates, dbs, aliases);
    votes.extend(rule_supervise(doc, mentions, candidates, rules, disabled));
    votes.sort();
    votes
}

/// Attach votes admitted by `mode` to their candidates and resolve them.
pub fn label_candidates(
    candidates: &[RelationCandidate],
    votes: &[LabelVote],
    mode: SupervisionMode,
) -> Vec<LabeledCandidate> {
    let mut by_candidate: BTreeMap<&str, Vec<LabelVote>> = BTreeMap::new();
    for v in votes.iter().filter(|v| mode.admits(&v.source)) {
        by_candidate.entry(v.candidate_id.as_str()).or_default().push(v.clone());
    }
    candidates
        .iter()
        .map(|c| {
            let votes = by_candidate.remove(c.candidate_id.as_str()).unwrap_or_default();
            LabeledCandidate {
                resolved: resolve_votes(&votes),
                candidate: c.clone(),
                votes,
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Balanced {
    pub examples: Vec<LabeledCandidate>,
    /// Relation types lacking either polarity; they keep whatever labels exist.
    pub degenerate: Vec<RelationType>,
}

/// Per relation type, drop Abstains and downsample the majority polarity so the two
/// classes differ by at most one. Output keeps input order.
pub fn balance_training(labeled: &[LabeledCandidate], seed: u64) -> Balanced {
    let mut keep = vec![false; labeled.len()];
    let mut degenerate = Vec::new();
    for (k, rtype) in RelationType::ALL.into_iter().enumerate() {
        let of = |want: Resolved| -> Vec<usize> {
            (0..labeled.len())
                .filter(|&i| labeled[i].candidate.rtype == rtype && labeled[i].resolved == want)
                .collect()
        };
        let (pos, neg) = (of(Resolved::True), of(Resolved::False));
        if pos.is_empty() && neg.is_empty() {
            continue;
        }
        if pos.is_empty() || neg.is_empty() {
            log::warn!("{rtype}: training labels have a single polarity ({} True, {} False)", pos.len(), neg.len());
            degenerate.push(rtype);
        }
        let (minority, mut majority) = if pos.len() <= neg.len() { (pos, neg) } else { (neg, pos) };
        let target = if minority.is_empty() { majority.len() } else { minority.len() };
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ ((k as u64 + 1) << 32));
        majority.shuffle(&mut rng);
        for i in minority.into_iter().chain(majority.into_iter().take(target)) {
            keep[i] = true;
        }
    }
    Balanced {
        examples: labeled
            .iter()
            .zip(keep)
            .filter(|(_, k)| *k)
            .map(|(l, _)| l.clone())
            .collect(),
        degenerate,
    }
}

#[cfg(test)]
mod tests;
