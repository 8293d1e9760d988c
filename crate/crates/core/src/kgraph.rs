//! The probabilistic knowledge graph: accepted facts typed by the event ontology.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::candidates::{ArgSpec, RelationCandidate, RelationType};
use crate::corpus::lexicon::lemmatize_phrase;
use crate::corpus::GazetteerSet;
use crate::error::{Error, Result};
use crate::inference::Marginal;
use crate::mentions::{EntityType, Mention, Role};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum OntologyClass {
    Incident,
    Actor,
    Location,
    Date,
    Individuals,
    Organizations,
    TransportShips,
    PassengerShips,
    FishingShips,
    NavyShips,
    OtherShips,
}

impl OntologyClass {
    pub const ALL: [OntologyClass; 11] = [
        OntologyClass::Incident,
        OntologyClass::Actor,
        OntologyClass::Location,
        OntologyClass::Date,
        OntologyClass::Individuals,
        OntologyClass::Organizations,
        OntologyClass::TransportShips,
        OntologyClass::PassengerShips,
        OntologyClass::FishingShips,
        OntologyClass::NavyShips,
        OntologyClass::OtherShips,
    ];

    pub fn parent(self) -> Option<OntologyClass> {
        use OntologyClass::*;
        match self {
            Incident | Actor | Location | Date => None,
            _ => Some(Actor),
        }
    }

    /// True when `self` is `other` or one of its subclasses.
    pub fn is_a(self, other: OntologyClass) -> bool {
        let mut c = Some(self);
        while let Some(x) = c {
            if x == other {
                return true;
            }
            c = x.parent();
        }
        false
    }
}

impl fmt::Display for OntologyClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl FromStr for OntologyClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        OntologyClass::ALL
            .into_iter()
            .find(|c| c.to_string().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Config(format!("unknown ontology class `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Node {
    pub entity: String,
    pub class: OntologyClass,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub role: Option<Role>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub doc_id: String,
    pub candidate_id: String,
    pub seed: u64,
    pub subject_span: (usize, usize),
    pub object_span: (usize, usize),
    pub subject_text: String,
    pub object_text: String,
    pub probability: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KgTriple {
    pub subject: Node,
    pub predicate: RelationType,
    pub object: Node,
    pub probability: f64,
    pub provenance: Vec<Provenance>,
}

impl KgTriple {
    fn first_candidate(&self) -> &str {
        self.provenance.first().map(|p| p.candidate_id.as_str()).unwrap_or("")
    }
}

/// Ontology class of a mention in an argument slot. Actor subclasses come from the
/// gazetteer category of the mention; unknown actors default by role.
pub fn class_of(m: &Mention, spec: ArgSpec, gazetteers: &GazetteerSet) -> OntologyClass {
    match m.etype {
        EntityType::Date => OntologyClass::Date,
        EntityType::Location => OntologyClass::Location,
        EntityType::IncidentType => OntologyClass::Incident,
        EntityType::Actor => gazetteers
            .actor_category(&lemmatize_phrase(&m.surface))
            .and_then(|c| c.parse::<OntologyClass>().ok())
            .filter(|c| c.is_a(OntologyClass::Actor))
            .unwrap_or(match spec.role {
                Some(Role::Aggressor) => OntologyClass::Individuals,
                _ => OntologyClass::OtherShips,
            }),
    }
}

fn node(m: &Mention, spec: ArgSpec, gazetteers: &GazetteerSet) -> Node {
    Node {
        entity: if m.entity_id.is_empty() { m.mention_id.clone() } else { m.entity_id.clone() },
        class: class_of(m, spec, gazetteers),
        role: spec.role,
    }
}

fn rank(a: &KgTriple, b: &KgTriple) -> std::cmp::Ordering {
    b.probability
        .total_cmp(&a.probability)
        .then_with(|| a.first_candidate().cmp(b.first_candidate()))
}

/// One triple per (subject entity, predicate, object entity) among candidates whose
/// marginal is at least `min_prob`; duplicates keep the highest probability and every
/// provenance record.
pub fn build_graph(
    marginals: &[Marginal],
    candidates: &[RelationCandidate],
    gazetteers: &GazetteerSet,
    min_prob: f64,
) -> Vec<KgTriple> {
    let by_id: BTreeMap<&str, &Marginal> = marginals.iter().map(|m| (m.candidate_id.as_str(), m)).collect();
    let mut sorted: Vec<&RelationCandidate> = candidates.iter().collect();
    sorted.sort_by(|a, b| a.candidate_id.cmp(&b.candidate_id));
    let mut grouped: BTreeMap<(String, RelationType, String), KgTriple> = BTreeMap::new();
    for c in sorted {
        let Some(m) = by_id.get(c.candidate_id.as_str()) else {
            continue;
        };
        if m.probability < min_prob {
            continue;
        }
        let (ls, rs) = c.rtype.specs();
        let subject = node(&c.left, ls, gazetteers);
        let object = node(&c.right, rs, gazetteers);
        let provenance = Provenance {
            doc_id: c.doc_id.clone(),
            candidate_id: c.candidate_id.clone(),
            seed: m.seed,
            subject_span: (c.left.char_start, c.left.char_end),
            object_span: (c.right.char_start, c.right.char_end),
            subject_text: c.left.surface.clone(),
            object_text: c.right.surface.clone(),
            probability: m.probability,
        };
        let key = (subject.entity.clone(), c.rtype, object.entity.clone());
        grouped
            .entry(key)
            .and_modify(|t| {
                t.probability = t.probability.max(m.probability);
                t.provenance.push(provenance.clone());
            })
            .or_insert(KgTriple {
                subject,
                predicate: c.rtype,
                object,
                probability: m.probability,
                provenance: vec![provenance],
            });
    }
    let mut triples: Vec<KgTriple> = grouped.into_values().collect();
    triples.sort_by(rank);
    triples
}

/// An Incident node per document, linking to the indices of its accepted triples.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IncidentNode {
    pub incident: String,
    pub class: OntologyClass,
    pub doc_id: String,
    pub facts: Vec<usize>,
}

pub fn incident_nodes(graph: &[KgTriple]) -> Vec<IncidentNode> {
    let mut by_doc: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, t) in graph.iter().enumerate() {
        for p in &t.provenance {
            let facts = by_doc.entry(p.doc_id.as_str()).or_default();
            if facts.last() != Some(&i) {
                facts.push(i);
            }
        }
    }
    by_doc
        .into_iter()
        .map(|(doc, facts)| IncidentNode {
            incident: format!("{doc}:incident"),
            class: OntologyClass::Incident,
            doc_id: doc.to_string(),
            facts,
        })
        .collect()
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Query {
    pub relation: Option<RelationType>,
    /// Matches either endpoint whose class is this class or a subclass of it.
    pub class: Option<OntologyClass>,
    pub role: Option<Role>,
    pub min_prob: Option<f64>,
    pub doc_id: Option<String>,
}

impl Query {
    pub fn matches(&self, t: &KgTriple) -> bool {
        self.relation.is_none_or(|r| t.predicate == r)
            && self.class.is_none_or(|c| t.subject.class.is_a(c) || t.object.class.is_a(c))
            && self.role.is_none_or(|r| t.subject.role == Some(r) || t.object.role == Some(r))
            && self.min_prob.is_none_or(|p| t.probability >= p)
            && self
                .doc_id
                .as_ref()
                .is_none_or(|d| t.provenance.iter().any(|p| &p.doc_id == d))
    }
}

pub fn query(graph: &[KgTriple], filter: &Query) -> Vec<KgTriple> {
    let mut out: Vec<KgTriple> = graph.iter().filter(|t| filter.matches(t)).cloned().collect();
    out.sort_by(rank);
    out
}

pub fn triples_tsv(graph: &[KgTriple]) -> String {
    let mut out = String::from("subject\tsubject_class\tpredicate\tobject\tobject_class\tprobability\n");
    for t in graph {
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\t{:.6}\n",
            t.subject.entity, t.subject.class, t.predicate, t.object.entity, t.object.class, t.probability
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mention(id: &str, ent: &str, etype: EntityType, surface: &str, cs: usize) -> Mention {
        Mention {
            mention_id: id.into(),
            doc_id: id.split(':').next().unwrap().into(),
            sentence_index: 0,
            token_start: cs,
            token_end: cs + 1,
            etype,
            role: None,
            entity_id: ent.into(),
            surface: surface.into(),
            char_start: cs,
            char_end: cs + surface.len(),
        }
    }

    fn cand(rtype: RelationType, l: &Mention, r: &Mention) -> RelationCandidate {
        RelationCandidate {
            candidate_id: RelationCandidate::id_for(&l.doc_id, rtype, l, r),
            rtype,
            doc_id: l.doc_id.clone(),
            left: l.clone(),
            right: r.clone(),
            features: vec![],
        }
    }

    fn marg(c: &RelationCandidate, p: f64) -> Marginal {
        Marginal { candidate_id: c.candidate_id.clone(), probability: p, seed: 3, n_samples: 0 }
    }

    fn fixture() -> (Vec<RelationCandidate>, Vec<Marginal>) {
        let ship = mention("d:m0", "d:e0", EntityType::Actor, "a container ship", 0);
        let vessel = mention("d:m1", "d:e0", EntityType::Actor, "the vessel", 40);
        let pirates = mention("d:m2", "d:e1", EntityType::Actor, "pirates", 20);
        let date = mention("d:m3", "d:e2", EntityType::Date, "3 May", 60);
        let c = vec![
            cand(RelationType::VictimAggressor, &ship, &pirates),
            cand(RelationType::VictimAggressor, &vessel, &pirates),
            cand(RelationType::VictimDate, &ship, &date),
            cand(RelationType::AggressorDate, &pirates, &date),
        ];
        let m = vec![marg(&c[0], 0.8), marg(&c[1], 0.9), marg(&c[2], 0.95), marg(&c[3], 0.7)];
        (c, m)
    }

    #[test]
    fn coreferent_spans_aggregate() {
        let (c, m) = fixture();
        let g = build_graph(&m, &c, &GazetteerSet::maritime(), 0.0);
        assert_eq!(g.len(), 3);
        let va = g.iter().find(|t| t.predicate == RelationType::VictimAggressor).unwrap();
        assert_eq!(va.probability, 0.9);
        assert_eq!(va.provenance.len(), 2);
        assert_eq!(va.subject.class, OntologyClass::TransportShips);
        assert_eq!(va.subject.role, Some(Role::Victim));
        assert_eq!(va.object.class, OntologyClass::Individuals);
        assert!(build_graph(&m, &c, &GazetteerSet::maritime(), 1.01).is_empty());
        let incidents = incident_nodes(&g);
        assert_eq!(incidents.len(), 1);
        assert_eq!(incidents[0].facts, vec![0, 1, 2]);
    }

    #[test]
    fn rebuilding_from_provenance_is_a_fixed_point() {
        let (c, m) = fixture();
        let g = build_graph(&m, &c, &GazetteerSet::maritime(), 0.75);
        let kept: Vec<RelationCandidate> = c
            .iter()
            .filter(|x| g.iter().any(|t| t.provenance.iter().any(|p| p.candidate_id == x.candidate_id)))
            .cloned()
            .collect();
        assert_eq!(build_graph(&m, &kept, &GazetteerSet::maritime(), 0.75), g);
    }

    #[test]
    fn queries() {
        let (c, m) = fixture();
        let g = build_graph(&m, &c, &GazetteerSet::maritime(), 0.0);
        assert_eq!(query(&g, &Query::default()), g);
        let probs: Vec<f64> = query(&g, &Query { min_prob: Some(0.9), ..Query::default() }).iter().map(|t| t.probability).collect();
        assert_eq!(probs, vec![0.95, 0.9]);
        let q = Query { relation: Some(RelationType::VictimDate), doc_id: Some("d".into()), ..Query::default() };
        let oracle: Vec<&KgTriple> = g
            .iter()
            .filter(|t| t.predicate == RelationType::VictimDate && t.provenance.iter().any(|p| p.doc_id == "d"))
            .collect();
        assert_eq!(query(&g, &q).iter().collect::<Vec<_>>(), oracle);
        let ships = query(&g, &Query { class: Some(OntologyClass::Actor), role: Some(Role::Aggressor), ..Query::default() });
        assert_eq!(ships.len(), 2);
        assert!(query(&g, &Query { doc_id: Some("zz".into()), ..Query::default() }).is_empty());
    }

    #[test]
    fn ontology_is_acyclic() {
        for c in OntologyClass::ALL {
            let mut seen = 0;
            let mut x = Some(c);
            while let Some(y) = x {
                seen += 1;
                assert!(seen < 5);
                x = y.parent();
            }
            assert_eq!(c.to_string().parse::<OntologyClass>().unwrap(), c);
        }
        assert!(OntologyClass::NavyShips.is_a(OntologyClass::Actor));
        assert!(!OntologyClass::Date.is_a(OntologyClass::Actor));
    }
}
