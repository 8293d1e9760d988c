//! Sparse binary features for relation candidates.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::candidates::RelationCandidate;
use crate::corpus::{Document, Token};
use crate::error::{Error, Result};
use crate::io::write_atomic;
use crate::mentions::Mention;

pub const DEFAULT_WINDOWS: [usize; 3] = [1, 2, 3];
/// Gaps longer than this many tokens emit `LONG_GAP` instead of the sequence features.
pub const MAX_GAP: usize = 40;
pub const INVERTED: &str = "INVERTED";
pub const LONG_GAP: &str = "LONG_GAP";

/// Bidirectional intern table between feature strings and dense ids.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FeatureDictionary {
    ids: HashMap<String, u32>,
    strings: Vec<String>,
}

impl FeatureDictionary {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn intern(&mut self, feature: &str) -> u32 {
        if let Some(&id) = self.ids.get(feature) {
            return id;
        }
        let id = self.strings.len() as u32;
        self.strings.push(feature.to_string());
        self.ids.insert(feature.to_string(), id);
        id
    }

    pub fn id(&self, feature: &str) -> Option<u32> {
        self.ids.get(feature).copied()
    }

    pub fn feature(&self, id: u32) -> Option<&str> {
        self.strings.get(id as usize).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.strings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.strings.is_empty()
    }

    pub fn to_tsv(&self) -> String {
        self.strings
            .iter()
            .enumerate()
            .map(|(i, s)| format!("{i}\t{s}\n"))
            .collect()
    }

    pub fn from_tsv(text: &str, path: &Path) -> Result<Self> {
        let mut dict = FeatureDictionary::new();
        for (n, line) in text.lines().enumerate() {
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let malformed = |message: &str| Error::Malformed {
                path: path.to_path_buf(),
                line: n + 1,
                message: message.to_string(),
            };
            let (id, feature) = line.split_once('\t').ok_or_else(|| malformed("expected `id<TAB>feature`"))?;
            let id: u32 = id.parse().map_err(|_| malformed("feature id is not an integer"))?;
            if id as usize != dict.len() || dict.ids.contains_key(feature) {
                return Err(malformed("feature ids must be dense, ordered and unique"));
            }
            dict.intern(feature);
        }
        Ok(dict)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.to_tsv().as_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = crate::io::read_to_string(path)?;
        Self::from_tsv(&text, path)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub candidate_id: String,
    pub feature_ids: Vec<u32>,
}

fn position(m: &Mention) -> (usize, usize) {
    (m.sentence_index, m.token_start)
}

fn join<'a>(items: impl IntoIterator<Item = &'a str>) -> String {
    items.into_iter().collect::<Vec<_>>().join(" ")
}

fn capital(m: &Mention) -> &'static str {
    if m.surface.starts_with(char::is_uppercase) {
        "True"
    } else {
        "False"
    }
}

/// Feature strings of a candidate, in a fixed family order.
pub fn feature_strings(doc: &Document, cand: &RelationCandidate, windows: &[usize]) -> Result<Vec<String>> {
    if cand.left.doc_id != cand.right.doc_id || cand.left.doc_id != doc.doc_id {
        return Err(Error::CrossDocument(cand.candidate_id.clone()));
    }
    let (left, right) = (&cand.left, &cand.right);
    for m in [left, right] {
        let ok = doc
            .sentences
            .get(m.sentence_index)
            .is_some_and(|s| m.token_start < m.token_end && m.token_end <= s.len());
        if !ok {
            return Err(Error::InvalidSpan {
                doc_id: doc.doc_id.clone(),
                message: format!("mention {} is outside the document", m.mention_id),
            });
        }
    }
    let inverted = position(right) < position(left);
    let (first, second) = if inverted { (right, left) } else { (left, right) };

    let offsets = doc.sentence_offsets();
    let flat: Vec<&Token> = doc.tokens().collect();
    let gap_start = offsets[first.sentence_index] + first.token_end;
    let gap_end = (offsets[second.sentence_index] + second.token_start).max(gap_start);
    let gap = &flat[gap_start..gap_end];

    let mut out = Vec::with_capacity(7 + 2 * windows.len());
    if gap.len() > MAX_GAP {
        out.push(LONG_GAP.to_string());
    } else {
        out.push(format!("POS_SEQ_[{}]", join(gap.iter().map(|t| t.pos.as_str()))));
        out.push(format!("NER_SEQ_[{}]", join(gap.iter().map(|t| t.ner.as_str()))));
        out.push(format!("LEMMA_SEQ_[{}]", join(gap.iter().map(|t| t.lemma.as_str()))));
        out.push(format!("WORD_SEQ_[{}]", join(gap.iter().map(|t| t.surface.as_str()))));
    }
    out.push(format!("LENGTHS_[{}_{}]", left.len(), right.len()));
    out.push(format!("STARTS_WITH_CAPITAL_[{}_{}]", capital(left), capital(right)));

    let first_sentence = &doc.sentences[first.sentence_index];
    let second_sentence = &doc.sentences[second.sentence_index];
    for &k in windows {
        let lw = &first_sentence[first.token_start.saturating_sub(k)..first.token_start];
        let rw = &second_sentence[second.token_end..(second.token_end + k).min(second_sentence.len())];
        out.push(format!(
            "W_LEMMA_L_{k}_R_{k}_[{}]_[{}]",
            join(lw.iter().map(|t| t.lemma.as_str())),
            join(rw.iter().map(|t| t.lemma.as_str()))
        ));
        out.push(format!(
            "W_NER_L_{k}_R_{k}_[{}]_[{}]",
            join(lw.iter().map(|t| t.ner.as_str())),
            join(rw.iter().map(|t| t.ner.as_str()))
        ));
    }
    if inverted {
        out.push(INVERTED.to_string());
    }
    Ok(out)
}

pub fn extract_features(
    doc: &Document,
    cand: &RelationCandidate,
    windows: &[usize],
    dict: &mut FeatureDictionary,
) -> Result<FeatureVector> {
    let mut ids: Vec<u32> = feature_strings(doc, cand, windows)?
        .iter()
        .map(|f| dict.intern(f))
        .collect();
    ids.sort_unstable();
    ids.dedup();
    Ok(FeatureVector {
        candidate_id: cand.candidate_id.clone(),
        feature_ids: ids,
    })
}

/// Featurize many candidates: strings are computed in parallel, then interned in input
/// order so ids are independent of thread scheduling. Candidates' `features` are filled.
pub fn featurize_all(
    docs: &BTreeMap<String, Document>,
    candidates: &mut [RelationCandidate],
    windows: &[usize],
    dict: &mut FeatureDictionary,
) -> Result<Vec<FeatureVector>> {
    let strings: Vec<Vec<String>> = candidates
        .par_iter()
        .map(|c| {
            let doc = docs.get(&c.doc_id).ok_or_else(|| Error::Stage {
                stage: "features".into(),
                message: format!("document {} of candidate {} not loaded", c.doc_id, c.candidate_id),
            })?;
            feature_strings(doc, c, windows)
        })
        .collect::<Result<_>>()?;
    Ok(candidates
        .iter_mut()
        .zip(strings)
        .map(|(c, fs)| {
            let mut ids: Vec<u32> = fs.iter().map(|f| dict.intern(f)).collect();
            ids.sort_unstable();
            ids.dedup();
            c.features = ids.clone();
            FeatureVector {
                candidate_id: c.candidate_id.clone(),
                feature_ids: ids,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::candidates::RelationType;
    use crate::corpus::{annotate, GazetteerSet};
    use crate::mentions::{EntityType, Role};
    use proptest::prelude::*;
    use std::collections::BTreeSet;

    const KIDNAP_REPORT: &str = "REPUBLIC OF THE CONGO: On 7 January, 12 seafarers, who were kidnapped from the Panama-flagged tanker Anuket Amber and the Singapore-flagged anchor handling and supply vessel ARK TZE in October 2018 off the country’s coast, have been released and are all safe.";

    fn span_mention(doc: &Document, id: &str, s: usize, a: usize, b: usize, etype: EntityType) -> Mention {
        let toks = &doc.sentences[s][a..b];
        Mention {
            mention_id: format!("{}:{id}", doc.doc_id),
            doc_id: doc.doc_id.clone(),
            sentence_index: s,
            token_start: a,
            token_end: b,
            etype,
            role: None,
            entity_id: String::new(),
            surface: doc.text[toks[0].char_start..toks[b - a - 1].char_end].to_string(),
            char_start: toks[0].char_start,
            char_end: toks[b - a - 1].char_end,
        }
    }

    fn cand(doc: &Document, left: Mention, right: Mention) -> RelationCandidate {
        RelationCandidate {
            candidate_id: RelationCandidate::id_for(&doc.doc_id, RelationType::VictimDate, &left, &right),
            rtype: RelationType::VictimDate,
            doc_id: doc.doc_id.clone(),
            left,
            right,
            features: vec![],
        }
    }

    fn idx(doc: &Document, surface: &str) -> usize {
        doc.sentences[0].iter().position(|t| t.surface == surface).unwrap()
    }

    #[test]
    fn kidnap_report_features() {
        let doc = annotate(&Document::raw("ex2", "t", KIDNAP_REPORT), &GazetteerSet::maritime());
        let jan = idx(&doc, "7");
        let tanker = idx(&doc, "tanker");
        let date = span_mention(&doc, "m0", 0, jan, jan + 2, EntityType::Date);
        let mut victim = span_mention(&doc, "m1", 0, tanker, tanker + 1, EntityType::Actor);
        victim.role = Some(Role::Victim);
        let fs: BTreeSet<String> = feature_strings(&doc, &cand(&doc, victim, date), &DEFAULT_WINDOWS)
            .unwrap()
            .into_iter()
            .collect();
        for expected in [
            "POS_SEQ_[, CD NNS , WP VBD VBN IN DT JJ]",
            "NER_SEQ_[O NUMBER O O O O O O O MISC]",
            "LEMMA_SEQ_[, 12 seafarer , who be kidnap from the panama-flagged]",
            "WORD_SEQ_[, 12 seafarers , who were kidnapped from the Panama-flagged]",
            "LENGTHS_[1_2]",
            "STARTS_WITH_CAPITAL_[False_False]",
            "W_LEMMA_L_1_R_1_[on]_[Anuket]",
            "W_LEMMA_L_2_R_2_[: on]_[Anuket Amber]",
            "W_NER_L_1_R_1_[O]_[O]",
            "W_NER_L_3_R_3_[LOCATION O O]_[O O O]",
            INVERTED,
        ] {
            assert!(fs.contains(expected), "missing {expected}: {fs:#?}");
        }
        assert_eq!(fs.len(), 6 + 2 * 3 + 1);
    }

    #[test]
    fn adjacent_mentions_have_empty_bodies() {
        let doc = annotate(&Document::raw("a", "t", "Pirates boarded."), &GazetteerSet::maritime());
        let l = span_mention(&doc, "m0", 0, 0, 1, EntityType::Actor);
        let r = span_mention(&doc, "m1", 0, 1, 2, EntityType::IncidentType);
        let fs = feature_strings(&doc, &cand(&doc, l, r), &[1, 2]).unwrap();
        assert_eq!(
            fs,
            vec![
                "POS_SEQ_[]",
                "NER_SEQ_[]",
                "LEMMA_SEQ_[]",
                "WORD_SEQ_[]",
                "LENGTHS_[1_1]",
                "STARTS_WITH_CAPITAL_[True_False]",
                "W_LEMMA_L_1_R_1_[]_[.]",
                "W_NER_L_1_R_1_[]_[O]",
                "W_LEMMA_L_2_R_2_[]_[.]",
                "W_NER_L_2_R_2_[]_[O]",
            ]
        );
    }

    #[test]
    fn long_gaps_collapse() {
        let filler = vec!["calm"; 45].join(" ");
        let text = format!("Pirates {filler} boarded.");
        let doc = annotate(&Document::raw("g", "t", &text), &GazetteerSet::maritime());
        let n = doc.sentences[0].len();
        let l = span_mention(&doc, "m0", 0, 0, 1, EntityType::Actor);
        let r = span_mention(&doc, "m1", 0, n - 2, n - 1, EntityType::IncidentType);
        let fs = feature_strings(&doc, &cand(&doc, l, r), &DEFAULT_WINDOWS).unwrap();
        assert_eq!(fs[0], LONG_GAP);
        assert_eq!(fs.len(), 6 + 2 * 3 - 3);
    }

    #[test]
    fn cross_document_is_an_error() {
        let doc = annotate(&Document::raw("a", "t", "Pirates boarded."), &GazetteerSet::maritime());
        let l = span_mention(&doc, "m0", 0, 0, 1, EntityType::Actor);
        let mut r = span_mention(&doc, "m1", 0, 1, 2, EntityType::IncidentType);
        r.doc_id = "b".into();
        assert!(matches!(
            feature_strings(&doc, &cand(&doc, l, r), &DEFAULT_WINDOWS),
            Err(Error::CrossDocument(_))
        ));
    }

    #[test]
    fn dictionary_round_trip() {
        let mut d = FeatureDictionary::new();
        let a = d.intern("POS_SEQ_[DT NN]");
        let b = d.intern("LENGTHS_[1_2]");
        assert_eq!(d.intern("POS_SEQ_[DT NN]"), a);
        let back = FeatureDictionary::from_tsv(&d.to_tsv(), Path::new("x")).unwrap();
        assert_eq!(back, d);
        assert_eq!(back.feature(b), Some("LENGTHS_[1_2]"));
        assert!(FeatureDictionary::from_tsv("1\tx\n", Path::new("x")).is_err());
    }

    const SENTENCES: &[&str] = &[
        "On 3 May, armed pirates boarded the tanker near Lagos. The crew raised the alarm.",
        "Robbers attacked a trawler. On 9 June 2019 the vessel was hijacked off Cotonou.",
    ];

    proptest! {
        #[test]
        fn count_invariant(text in 0usize..2, a in 0usize..30, b in 0usize..30, la in 1usize..3, lb in 1usize..3,
                           windows in proptest::collection::btree_set(1usize..6, 0..4)) {
            let doc = annotate(&Document::raw("p", "t", SENTENCES[text]), &GazetteerSet::maritime());
            let flat: Vec<(usize, usize)> = doc
                .sentences
                .iter()
                .enumerate()
                .flat_map(|(s, toks)| (0..toks.len()).map(move |i| (s, i)))
                .collect();
            let pick = |start: usize, len: usize| {
                let (s, i) = flat[start % flat.len()];
                let end = (i + len).min(doc.sentences[s].len());
                (s, i, end)
            };
            let (s1, a1, b1) = pick(a, la);
            let (s2, a2, b2) = pick(b, lb);
            prop_assume!(!(s1 == s2 && a1 < b2 && a2 < b1));
            let l = span_mention(&doc, "m0", s1, a1, b1, EntityType::Actor);
            let r = span_mention(&doc, "m1", s2, a2, b2, EntityType::Date);
            let inverted = (s2, a2) < (s1, a1);
            let windows: Vec<usize> = windows.into_iter().collect();
            let fs = feature_strings(&doc, &cand(&doc, l, r), &windows).unwrap();
            let long = fs.iter().any(|f| f == LONG_GAP);
            let expected = 6 + 2 * windows.len() + usize::from(inverted) - if long { 3 } else { 0 };
            prop_assert_eq!(fs.len(), expected);
            let unique: BTreeSet<&String> = fs.iter().collect();
            prop_assert_eq!(unique.len(), fs.len());
            for f in &fs {
                prop_assert!(!f.contains("  "));
            }
        }
    }
}
