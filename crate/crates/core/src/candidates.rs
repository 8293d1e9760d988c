//! Binary relation candidates between co-occurring mentions.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::Document;
use crate::error::{Error, Result};
use crate::mentions::{EntityType, Mention, Role};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum RelationType {
    VictimAggressor,
    VictimDate,
    VictimIncidentType,
    VictimLocation,
    IncidentTypeDate,
    AggressorIncidentType,
    AggressorLocation,
    AggressorDate,
}

/// Argument constraint: an entity type plus, for actors, a required role.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ArgSpec {
    pub etype: EntityType,
    pub role: Option<Role>,
}

impl ArgSpec {
    const fn new(etype: EntityType, role: Option<Role>) -> Self {
        ArgSpec { etype, role }
    }

    /// A role-unset actor satisfies either role.
    pub fn accepts(&self, m: &Mention) -> bool {
        m.etype == self.etype
            && match (self.role, m.role) {
                (Some(want), Some(have)) => want == have,
                _ => true,
            }
    }
}

const VICTIM: ArgSpec = ArgSpec::new(EntityType::Actor, Some(Role::Victim));
const AGGRESSOR: ArgSpec = ArgSpec::new(EntityType::Actor, Some(Role::Aggressor));
const DATE: ArgSpec = ArgSpec::new(EntityType::Date, None);
const LOCATION: ArgSpec = ArgSpec::new(EntityType::Location, None);
const INCIDENT: ArgSpec = ArgSpec::new(EntityType::IncidentType, None);

impl RelationType {
    pub const ALL: [RelationType; 8] = [
        RelationType::VictimAggressor,
        RelationType::VictimDate,
        RelationType::VictimIncidentType,
        RelationType::VictimLocation,
        RelationType::IncidentTypeDate,
        RelationType::AggressorIncidentType,
        RelationType::AggressorLocation,
        RelationType::AggressorDate,
    ];

    pub fn specs(self) -> (ArgSpec, ArgSpec) {
        use RelationType::*;
        match self {
            VictimAggressor => (VICTIM, AGGRESSOR),
            VictimDate => (VICTIM, DATE),
            VictimIncidentType => (VICTIM, INCIDENT),
            VictimLocation => (VICTIM, LOCATION),
            IncidentTypeDate => (INCIDENT, DATE),
            AggressorIncidentType => (AGGRESSOR, INCIDENT),
            AggressorLocation => (AGGRESSOR, LOCATION),
            AggressorDate => (AGGRESSOR, DATE),
        }
    }

    pub fn left_spec(self) -> ArgSpec {
        self.specs().0
    }

    pub fn right_spec(self) -> ArgSpec {
        self.specs().1
    }

    pub fn name(self) -> &'static str {
        use RelationType::*;
        match self {
            VictimAggressor => "VictimAggressor",
            VictimDate => "VictimDate",
            VictimIncidentType => "VictimIncidentType",
            VictimLocation => "VictimLocation",
            IncidentTypeDate => "IncidentTypeDate",
            AggressorIncidentType => "AggressorIncidentType",
            AggressorLocation => "AggressorLocation",
            AggressorDate => "AggressorDate",
        }
    }
}

impl fmt::Display for RelationType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RelationType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        RelationType::ALL
            .into_iter()
            .find(|r| r.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Config(format!("unknown relation type `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelationCandidate {
    pub candidate_id: String,
    pub rtype: RelationType,
    pub doc_id: String,
    #[serde(rename = "left_mention")]
    pub left: Mention,
    #[serde(rename = "right_mention")]
    pub right: Mention,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub features: Vec<u32>,
}

impl RelationCandidate {
    pub fn id_for(doc_id: &str, rtype: RelationType, left: &Mention, right: &Mention) -> String {
        format!("{}:{}:{}:{}", doc_id, rtype, local_id(left), local_id(right))
    }
}

fn local_id(m: &Mention) -> &str {
    m.mention_id.rsplit(':').next().unwrap_or(&m.mention_id)
}

fn ordered(a: &Mention, b: &Mention) -> bool {
    (a.sentence_index, a.token_start) <= (b.sentence_index, b.token_start)
}

/// Distance in tokens between two mentions in document order, 0 when adjacent or
/// overlapping.
pub fn token_gap(doc: &Document, a: &Mention, b: &Mention) -> usize {
    let offsets = doc.sentence_offsets();
    let (first, second) = if ordered(a, b) { (a, b) } else { (b, a) };
    let end = offsets[first.sentence_index] + first.token_end;
    let start = offsets[second.sentence_index] + second.token_start;
    start.saturating_sub(end)
}

/// All candidates of one relation type within a document.
pub fn generate_candidates(doc: &Document, mentions: &[Mention], rtype: RelationType) -> Vec<RelationCandidate> {
    let (ls, rs) = rtype.specs();
    let mut out = Vec::new();
    for left in mentions.iter().filter(|m| m.doc_id == doc.doc_id && ls.accepts(m)) {
        for right in mentions.iter().filter(|m| m.doc_id == doc.doc_id && rs.accepts(m)) {
            if left.mention_id == right.mention_id
                || left.overlaps(right)
                || (!left.entity_id.is_empty() && left.entity_id == right.entity_id)
            {
                continue;
            }
            out.push(RelationCandidate {
                candidate_id: RelationCandidate::id_for(&doc.doc_id, rtype, left, right),
                rtype,
                doc_id: doc.doc_id.clone(),
                left: left.clone(),
                right: right.clone(),
                features: Vec::new(),
            });
        }
    }
    out
}

pub fn generate_all(doc: &Document, mentions: &[Mention]) -> Vec<RelationCandidate> {
    RelationType::ALL
        .into_iter()
        .flat_map(|r| generate_candidates(doc, mentions, r))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{annotate, GazetteerSet};
    use crate::mentions::{assign_roles, default_aliases, extract_mentions, link_entities, RoleRuleSet};
    use proptest::prelude::*;
    use std::collections::BTreeSet;

    fn mention(i: usize, s: usize, a: usize, b: usize, etype: EntityType, role: Option<Role>, ent: &str) -> Mention {
        Mention {
            mention_id: format!("d:m{i}"),
            doc_id: "d".into(),
            sentence_index: s,
            token_start: a,
            token_end: b,
            etype,
            role,
            entity_id: format!("d:{ent}"),
            surface: String::new(),
            char_start: 0,
            char_end: 0,
        }
    }

    fn empty_doc() -> Document {
        Document::raw("d", "t", "")
    }

    #[test]
    fn figure_three_candidates() {
        let d = annotate(
            &Document::raw(
                "d",
                "t",
                "On 2 November, armed pirates boarded the general cargo ship OYA near position 04:07N – 006:53E. The pirates kidnapped five crewmen and escaped.",
            ),
            &GazetteerSet::maritime(),
        );
        let m = extract_mentions(&d, &GazetteerSet::maritime()).unwrap();
        let m = link_entities(&d, &m, &default_aliases());
        let m = assign_roles(&d, &m, &RoleRuleSet::default());
        let pairs: BTreeSet<(String, String)> = generate_candidates(&d, &m, RelationType::VictimAggressor)
            .into_iter()
            .map(|c| (c.left.surface, c.right.surface))
            .collect();
        assert!(pairs.contains(&("the general cargo ship OYA".into(), "armed pirates".into())));
        // "five crewmen" is victim-assigned so it appears as a co-victim, never as aggressor.
        assert!(!pairs.iter().any(|(_, r)| r == "five crewmen"));
        assert!(pairs.contains(&("five crewmen".into(), "armed pirates".into())));
    }

    #[test]
    fn cross_product_and_overlap() {
        let d = empty_doc();
        let ms = vec![
            mention(0, 0, 0, 2, EntityType::Actor, Some(Role::Victim), "e0"),
            mention(1, 0, 3, 4, EntityType::Date, None, "e1"),
            mention(2, 0, 5, 6, EntityType::Actor, Some(Role::Victim), "e2"),
            mention(3, 0, 7, 8, EntityType::Date, None, "e3"),
            mention(4, 1, 0, 2, EntityType::Date, None, "e4"),
        ];
        assert_eq!(generate_candidates(&d, &ms, RelationType::VictimDate).len(), 6);

        let ms = vec![
            mention(0, 0, 0, 4, EntityType::Actor, Some(Role::Victim), "e0"),
            mention(1, 0, 2, 3, EntityType::Date, None, "e1"),
            mention(2, 0, 5, 6, EntityType::Date, None, "e2"),
        ];
        let c = generate_candidates(&d, &ms, RelationType::VictimDate);
        assert_eq!(c.len(), 1);
        assert_eq!(c[0].candidate_id, "d:VictimDate:m0:m2");
    }

    #[test]
    fn unset_roles_fill_both_slots_but_not_same_entity() {
        let d = empty_doc();
        let ms = vec![
            mention(0, 0, 0, 1, EntityType::Actor, None, "e0"),
            mention(1, 0, 2, 3, EntityType::Actor, None, "e1"),
            mention(2, 1, 0, 1, EntityType::Actor, None, "e0"),
        ];
        let c = generate_candidates(&d, &ms, RelationType::VictimAggressor);
        let ids: Vec<&str> = c.iter().map(|c| c.candidate_id.as_str()).collect();
        assert_eq!(
            ids,
            vec![
                "d:VictimAggressor:m0:m1",
                "d:VictimAggressor:m1:m0",
                "d:VictimAggressor:m1:m2",
                "d:VictimAggressor:m2:m1"
            ]
        );
    }

    #[test]
    fn empty_and_date_only() {
        let d = empty_doc();
        assert!(generate_all(&d, &[]).is_empty());
        let ms = vec![
            mention(0, 0, 0, 1, EntityType::Date, None, "e0"),
            mention(1, 0, 2, 3, EntityType::Date, None, "e1"),
        ];
        assert!(generate_all(&d, &ms).is_empty());
    }

    #[test]
    fn relation_names_round_trip() {
        for r in RelationType::ALL {
            assert_eq!(r.name().parse::<RelationType>().unwrap(), r);
            let json = serde_json::to_string(&r).unwrap();
            assert_eq!(json, format!("\"{}\"", r.name()));
        }
        assert_eq!(RelationType::ALL.len(), 8);
    }

    fn arb_mentions() -> impl Strategy<Value = Vec<Mention>> {
        proptest::collection::vec((0usize..2, 0usize..10, 1usize..4, 0usize..4, 0usize..3, 0usize..5), 0..9)
            .prop_map(|raw| {
                raw.into_iter()
                    .enumerate()
                    .map(|(i, (s, a, len, et, role, ent))| {
                        let etype = [EntityType::Actor, EntityType::Date, EntityType::Location, EntityType::IncidentType][et];
                        let role = if etype == EntityType::Actor { [None, Some(Role::Victim), Some(Role::Aggressor)][role] } else { None };
                        mention(i, s, a, a + len, etype, role, &format!("e{ent}"))
                    })
                    .collect()
            })
    }

    proptest! {
        #[test]
        fn count_matches_brute_force(ms in arb_mentions()) {
            let d = empty_doc();
            let all = generate_all(&d, &ms);
            for r in RelationType::ALL {
                let (ls, rs) = r.specs();
                let mut expected = 0usize;
                let mut excluded = 0usize;
                for a in &ms {
                    for b in &ms {
                        if !(ls.accepts(a) && rs.accepts(b)) { continue; }
                        expected += 1;
                        let overlap = a.sentence_index == b.sentence_index && a.token_start < b.token_end && b.token_start < a.token_end;
                        if overlap || a.entity_id == b.entity_id { excluded += 1; }
                    }
                }
                prop_assert_eq!(all.iter().filter(|c| c.rtype == r).count(), expected - excluded);
            }
            let ids: BTreeSet<&str> = all.iter().map(|c| c.candidate_id.as_str()).collect();
            prop_assert_eq!(ids.len(), all.len());
            prop_assert_eq!(generate_all(&d, &ms), all);
        }
    }
}
