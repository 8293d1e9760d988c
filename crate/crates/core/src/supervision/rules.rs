//! Heuristic labeling rules.

use crate::candidates::{RelationCandidate, RelationType};
use crate::corpus::Document;
use crate::mentions::{EntityType, Mention, Role, RoleRuleSet};

use super::db::mention_coordinates;
use super::{EntityVote, LabelVote, Polarity, Slot};

pub const AGGRESSOR_KEYWORD: &str = "rules:aggressor_keyword";
pub const ROLE_CONTEXT: &str = "rules:role_context";
pub const CLOSEST_DATE: &str = "rules:closest_date";
pub const COORDINATES: &str = "rules:coordinates";
pub const ACT_LEMMA: &str = "rules:act_lemma";
pub const ACT_BETWEEN: &str = "rules:act_between";

fn flat_position(doc: &Document, m: &Mention) -> (usize, usize) {
    let offsets = doc.sentence_offsets();
    (offsets[m.sentence_index] + m.token_start, offsets[m.sentence_index] + m.token_end)
}

fn distance(doc: &Document, a: &Mention, b: &Mention) -> usize {
    let (a0, a1) = flat_position(doc, a);
    let (b0, b1) = flat_position(doc, b);
    if a1 <= b0 {
        b0 - a1
    } else {
        a0.saturating_sub(b1)
    }
}

/// Index of the Date mention nearest to `victim`, earliest on ties.
fn nearest_date(doc: &Document, mentions: &[Mention], victim: &Mention) -> Option<usize> {
    mentions
        .iter()
        .enumerate()
        .filter(|(_, m)| m.etype == EntityType::Date)
        .min_by_key(|(i, m)| (distance(doc, victim, m), *i))
        .map(|(i, _)| i)
}

fn victims(mentions: &[Mention]) -> impl Iterator<Item = &Mention> {
    mentions
        .iter()
        .filter(|m| m.etype == EntityType::Actor && m.role == Some(Role::Victim))
}

pub fn rule_entity_votes(doc: &Document, mentions: &[Mention], rules: &RoleRuleSet) -> Vec<EntityVote> {
    let acts = rules.act_sequences();
    let has_coordinates = mentions
        .iter()
        .any(|m| m.etype == EntityType::Location && mention_coordinates(m, doc).is_some());
    let closest: Option<usize> = victims(mentions)
        .filter_map(|v| nearest_date(doc, mentions, v).map(|d| (distance(doc, v, &mentions[d]), d)))
        .min()
        .map(|(_, d)| d);

    let mut votes = Vec::new();
    for (i, m) in mentions.iter().enumerate() {
        let mut vote = |slot, source: &str, truth: bool| {
            votes.push(EntityVote {
                mention_id: m.mention_id.clone(),
                slot,
                source: source.to_string(),
                polarity: Polarity::from(truth),
            })
        };
        match m.etype {
            EntityType::Actor => {
                if rules.aggressor_keywords.contains(&m.head_lemma(doc)) {
                    vote(Slot::Aggressor, AGGRESSOR_KEYWORD, true);
                    vote(Slot::Victim, AGGRESSOR_KEYWORD, false);
                }
                if let Some(role) = m.role {
                    vote(Slot::Victim, ROLE_CONTEXT, role == Role::Victim);
                    vote(Slot::Aggressor, ROLE_CONTEXT, role == Role::Aggressor);
                }
            }
            EntityType::Date => {
                if let Some(c) = closest {
                    vote(Slot::Date, CLOSEST_DATE, c == i);
                }
            }
            EntityType::Location => {
                if has_coordinates {
                    vote(Slot::Location, COORDINATES, mention_coordinates(m, doc).is_some());
                }
            }
            EntityType::IncidentType => {
                let lemmas = m.lemmas(doc);
                let single = |a: &Vec<String>| a.len() == 1 && lemmas.last() == a.first();
                if acts.iter().any(|a| *a == lemmas || single(a)) {
                    vote(Slot::IncidentType, ACT_LEMMA, true);
                }
            }
        }
    }
    votes
}

/// Whether an aggressive act occurs strictly between two mentions of one sentence.
fn act_between(doc: &Document, a: &Mention, b: &Mention, acts: &[Vec<String>]) -> bool {
    if a.sentence_index != b.sentence_index {
        return false;
    }
    let (a0, a1) = flat_position(doc, a);
    let (b0, b1) = flat_position(doc, b);
    let (start, end) = if a1 <= b0 { (a1, b0) } else { (b1, a0) };
    if start >= end {
        return false;
    }
    let lemmas: Vec<String> = doc.tokens().skip(start).take(end - start).map(|t| t.lemma.to_lowercase()).collect();
    acts.iter()
        .any(|act| act.len() <= lemmas.len() && lemmas.windows(act.len()).any(|w| w == act.as_slice()))
}

/// Relation-level rule votes: nearest-date for VictimDate, act-between for VictimAggressor.
pub fn rule_relation_votes(
    doc: &Document,
    mentions: &[Mention],
    candidates: &[RelationCandidate],
    rules: &RoleRuleSet,
) -> Vec<LabelVote> {
    let acts = rules.act_sequences();
    let mut votes = Vec::new();
    for c in candidates.iter().filter(|c| c.doc_id == doc.doc_id) {
        match c.rtype {
            RelationType::VictimDate if c.left.role == Some(Role::Victim) => {
                if let Some(d) = nearest_date(doc, mentions, &c.left) {
                    votes.push(LabelVote::new(&c.candidate_id, CLOSEST_DATE, mentions[d].mention_id == c.right.mention_id));
                }
            }
            RelationType::VictimAggressor if act_between(doc, &c.left, &c.right, &acts) => {
                votes.push(LabelVote::new(&c.candidate_id, ACT_BETWEEN, true));
            }
            _ => {}
        }
    }
    votes
}
