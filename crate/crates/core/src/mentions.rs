//! Typed entity mentions: extraction, entity linking and Victim/Aggressor roles.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::corpus::lexicon::{self, GazetteerSet};
use crate::corpus::{Document, Token};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EntityType {
    Actor,
    Date,
    Location,
    IncidentType,
}

impl fmt::Display for EntityType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Role {
    Victim,
    Aggressor,
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Mention {
    pub mention_id: String,
    pub doc_id: String,
    pub sentence_index: usize,
    pub token_start: usize,
    pub token_end: usize,
    pub etype: EntityType,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub role: Option<Role>,
    #[serde(default)]
    pub entity_id: String,
    pub surface: String,
    pub char_start: usize,
    pub char_end: usize,
}

impl Mention {
    pub fn tokens<'a>(&self, doc: &'a Document) -> &'a [Token] {
        &doc.sentences[self.sentence_index][self.token_start..self.token_end]
    }

    pub fn len(&self) -> usize {
        self.token_end - self.token_start
    }

    pub fn is_empty(&self) -> bool {
        self.token_end == self.token_start
    }

    pub fn overlaps(&self, other: &Mention) -> bool {
        self.sentence_index == other.sentence_index
            && self.token_start < other.token_end
            && other.token_start < self.token_end
    }

    /// Lowercased lemmas of the mention's tokens.
    pub fn lemmas(&self, doc: &Document) -> Vec<String> {
        self.tokens(doc).iter().map(|t| t.lemma.to_lowercase()).collect()
    }

    /// Head lemma: the last non-punctuation token, skipping a trailing proper name such as
    /// the ship name in "the general cargo ship OYA".
    pub fn head_lemma(&self, doc: &Document) -> String {
        let toks = self.tokens(doc);
        toks.iter()
            .enumerate()
            .rev()
            .find(|(i, t)| !t.is_punct() && !(*i > 0 && matches!(t.pos.as_str(), "NNP" | "NNPS")))
            .map(|(_, t)| t)
            .or_else(|| toks.iter().rev().find(|t| !t.is_punct()))
            .map(|t| t.lemma.to_lowercase())
            .unwrap_or_default()
    }
}

/// Keyword lists and window for role assignment. Acts may be multi-word lemma
/// sequences such as `fire upon`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoleRuleSet {
    pub aggressor_keywords: BTreeSet<String>,
    pub victim_keywords: BTreeSet<String>,
    pub aggressive_acts: BTreeSet<String>,
    pub window: usize,
}

impl Default for RoleRuleSet {
    fn default() -> Self {
        let set = |xs: &[&str]| xs.iter().map(|s| s.to_string()).collect();
        RoleRuleSet {
            aggressor_keywords: set(&[
                "robber", "intruder", "pirate", "terrorist", "gunman", "assailant", "thief",
                "hijacker", "kidnapper", "attacker",
            ]),
            victim_keywords: set(&[
                "tanker", "carrier", "ship", "vessel", "ferry", "trawler", "yacht", "barge", "tug",
                "dhow",
            ]),
            aggressive_acts: set(&[
                "attack", "fire upon", "fire", "hijack", "board", "kidnap", "rob", "steal",
                "approach",
            ]),
            window: 3,
        }
    }
}

impl RoleRuleSet {
    pub(crate) fn act_sequences(&self) -> Vec<Vec<String>> {
        let mut acts: Vec<Vec<String>> = self
            .aggressive_acts
            .iter()
            .map(|a| a.split_whitespace().map(str::to_lowercase).collect())
            .filter(|a: &Vec<String>| !a.is_empty())
            .collect();
        acts.sort_by(|a, b| b.len().cmp(&a.len()).then(a.cmp(b)));
        acts
    }
}

/// Incident-type alias map covering the seven reported activity types.
pub fn default_aliases() -> BTreeMap<String, String> {
    [
        ("board", "boarding"),
        ("boarding", "boarding"),
        ("attack", "attacking"),
        ("fire", "firing upon"),
        ("fire upon", "firing upon"),
        ("hijack", "hijacking"),
        ("hijacking", "hijacking"),
        ("kidnap", "kidnapping"),
        ("kidnapping", "kidnapping"),
        ("rob", "robbery"),
        ("robbery", "robbery"),
        ("robber", "robbery"),
        ("steal", "robbery"),
        ("theft", "robbery"),
        ("approach", "suspicious approach"),
    ]
    .into_iter()
    .map(|(a, b)| (a.to_string(), b.to_string()))
    .collect()
}

/// Canonical incident type of an IncidentType mention: the alias of its full lemma
/// sequence, else of its last lemma.
pub fn canonical_incident(mention: &Mention, doc: &Document, aliases: &BTreeMap<String, String>) -> Option<String> {
    let lemmas = mention.lemmas(doc);
    aliases
        .get(&lemmas.join(" "))
        .or_else(|| lemmas.last().and_then(|l| aliases.get(l)))
        .cloned()
}

/// Pick non-overlapping spans, longest first, earliest on ties.
fn longest_first(mut spans: Vec<(usize, usize)>) -> Vec<(usize, usize)> {
    spans.sort_by(|a, b| (b.1 - b.0).cmp(&(a.1 - a.0)).then(a.0.cmp(&b.0)));
    let mut kept: Vec<(usize, usize)> = Vec::new();
    for s in spans {
        if kept.iter().all(|k| s.1 <= k.0 || k.1 <= s.0) {
            kept.push(s);
        }
    }
    kept.sort();
    kept
}

fn seq_matches(keys: &[String], entries: &[Vec<String>]) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for entry in entries.iter().filter(|e| !e.is_empty()) {
        let n = entry.len();
        if n > keys.len() {
            continue;
        }
        for start in 0..=keys.len() - n {
            if keys[start..start + n] == entry[..] {
                out.push((start, start + n));
            }
        }
    }
    out
}

fn runs(sentence: &[Token], tag: &str) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut i = 0;
    while i < sentence.len() {
        if sentence[i].ner == tag {
            let start = i;
            while i < sentence.len() && sentence[i].ner == tag {
                i += 1;
            }
            out.push((start, i));
        } else {
            i += 1;
        }
    }
    out
}

fn is_modifier(t: &Token) -> bool {
    matches!(t.ner.as_str(), "O" | "NUMBER" | "MISC")
        && matches!(t.pos.as_str(), "DT" | "JJ" | "JJR" | "JJS" | "CD" | "NN" | "NNP" | "PRP$")
}

fn is_name(t: &Token) -> bool {
    t.ner == "O" && (t.pos == "NNP" || t.pos == "NNPS")
}

/// Extract Date, Location, Actor and IncidentType mentions from an annotated document.
pub fn extract_mentions(doc: &Document, gazetteers: &GazetteerSet) -> Result<Vec<Mention>> {
    if !doc.is_annotated() {
        return Err(Error::Unannotated(doc.doc_id.clone()));
    }
    let actor_entries: Vec<Vec<String>> = gazetteers.actors.iter().map(|a| a.lemmas.clone()).collect();
    let mut found: Vec<(usize, usize, usize, EntityType)> = Vec::new();

    for (si, sentence) in doc.sentences.iter().enumerate() {
        let surfaces: Vec<&str> = sentence.iter().map(|t| t.surface.as_str()).collect();
        let lower_surfaces: Vec<String> = surfaces.iter().map(|s| s.to_lowercase()).collect();
        let lemmas: Vec<String> = sentence.iter().map(|t| t.lemma.to_lowercase()).collect();

        for (a, b) in runs(sentence, "DATE") {
            found.push((si, a, b, EntityType::Date));
        }

        let mut locs = lexicon::coordinate_spans(&surfaces);
        locs.extend(seq_matches(&lower_surfaces, &gazetteers.places));
        for (a, b) in longest_first(locs) {
            found.push((si, a, b, EntityType::Location));
        }

        let heads: Vec<(usize, usize)> = seq_matches(&lemmas, &actor_entries)
            .into_iter()
            .filter(|&(a, b)| sentence[a..b].iter().all(|t| t.ner == "O"))
            .collect();
        let actor_spans: Vec<(usize, usize)> = longest_first(heads)
            .into_iter()
            .map(|(a, b)| {
                let mut start = a;
                while start > 0 && is_modifier(&sentence[start - 1]) {
                    start -= 1;
                }
                let mut end = b;
                while end < sentence.len() && is_name(&sentence[end]) {
                    end += 1;
                }
                (start, end)
            })
            .collect();
        for (a, b) in longest_first(actor_spans) {
            found.push((si, a, b, EntityType::Actor));
        }

        for (a, b) in longest_first(seq_matches(&lemmas, &gazetteers.incident_terms)) {
            found.push((si, a, b, EntityType::IncidentType));
        }
    }

    found.sort();
    Ok(found
        .into_iter()
        .enumerate()
        .map(|(i, (si, a, b, etype))| {
            let sentence = &doc.sentences[si];
            let char_start = sentence[a].char_start;
            let char_end = sentence[b - 1].char_end;
            Mention {
                mention_id: format!("{}:m{}", doc.doc_id, i),
                doc_id: doc.doc_id.clone(),
                sentence_index: si,
                token_start: a,
                token_end: b,
                etype,
                role: None,
                entity_id: String::new(),
                surface: doc.text[char_start..char_end].to_string(),
                char_start,
                char_end,
            }
        })
        .collect())
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind((0..n).collect())
    }
    fn find(&mut self, x: usize) -> usize {
        let mut root = x;
        while self.0[root] != root {
            root = self.0[root];
        }
        let mut cur = x;
        while self.0[cur] != root {
            let next = self.0[cur];
            self.0[cur] = root;
            cur = next;
        }
        root
    }
    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.0[hi] = lo;
        }
    }
}

/// Assign entity ids. Same-type mentions overlapping one coreference chain share an
/// entity, as do IncidentType mentions with the same canonical alias; everything else
/// gets a fresh id. Count and order are preserved.
pub fn link_entities(doc: &Document, mentions: &[Mention], alias_rules: &BTreeMap<String, String>) -> Vec<Mention> {
    let n = mentions.len();
    let mut uf = UnionFind::new(n);
    for chain in &doc.coref_chains {
        let mut first_by_type: BTreeMap<EntityType, usize> = BTreeMap::new();
        for (i, m) in mentions.iter().enumerate() {
            let in_chain = chain.iter().any(|span| {
                span.0 == m.sentence_index && m.token_start < span.2 && span.1 < m.token_end
            });
            if in_chain {
                match first_by_type.get(&m.etype) {
                    Some(&j) => uf.union(j, i),
                    None => {
                        first_by_type.insert(m.etype, i);
                    }
                }
            }
        }
    }
    let mut by_alias: BTreeMap<String, usize> = BTreeMap::new();
    for (i, m) in mentions.iter().enumerate() {
        if m.etype != EntityType::IncidentType {
            continue;
        }
        if let Some(canon) = canonical_incident(m, doc, alias_rules) {
            match by_alias.get(&canon) {
                Some(&j) => uf.union(j, i),
                None => {
                    by_alias.insert(canon, i);
                }
            }
        }
    }
    let mut ids: BTreeMap<usize, String> = BTreeMap::new();
    mentions
        .iter()
        .enumerate()
        .map(|(i, m)| {
            let root = uf.find(i);
            let next = ids.len();
            let id = ids
                .entry(root)
                .or_insert_with(|| format!("{}:e{}", doc.doc_id, next))
                .clone();
            Mention {
                entity_id: id,
                ..m.clone()
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Evidence {
    None,
    Role(Role),
    Conflict,
}

fn combine(items: impl IntoIterator<Item = Role>) -> Evidence {
    items.into_iter().fold(Evidence::None, |acc, r| match acc {
        Evidence::None => Evidence::Role(r),
        Evidence::Role(x) if x == r => acc,
        _ => Evidence::Conflict,
    })
}

/// Positions of aggressive-act occurrences in a sentence as `(start, end)`.
fn act_spans(sentence: &[Token], acts: &[Vec<String>]) -> Vec<(usize, usize)> {
    let lemmas: Vec<String> = sentence.iter().map(|t| t.lemma.to_lowercase()).collect();
    longest_first(seq_matches(&lemmas, acts))
}

fn is_passive(sentence: &[Token], act_start: usize) -> bool {
    sentence[..act_start]
        .iter()
        .rev()
        .find(|t| !t.is_punct())
        .is_some_and(|t| matches!(t.lemma.to_lowercase().as_str(), "be" | "get"))
}

fn local_evidence(doc: &Document, m: &Mention, rules: &RoleRuleSet, acts: &[Vec<String>]) -> Evidence {
    let sentence = &doc.sentences[m.sentence_index];
    let spans = act_spans(sentence, acts);
    let mut roles = Vec::new();

    let head = m.head_lemma(doc);
    if rules.aggressor_keywords.contains(&head) {
        roles.push(Role::Aggressor);
    }
    if rules.victim_keywords.contains(&head) {
        roles.push(Role::Victim);
    }

    let after: Vec<usize> = (m.token_end..sentence.len())
        .filter(|&i| !sentence[i].is_punct())
        .take(rules.window)
        .collect();
    if let Some(&(start, _)) = spans
        .iter()
        .filter(|(s, _)| after.contains(s))
        .min_by_key(|(s, _)| *s)
    {
        roles.push(if is_passive(sentence, start) {
            Role::Victim
        } else {
            Role::Aggressor
        });
    }

    let before: Vec<usize> = (0..m.token_start)
        .rev()
        .filter(|&i| !sentence[i].is_punct())
        .take(rules.window)
        .collect();
    if let Some(&(start, end)) = spans
        .iter()
        .filter(|(_, e)| before.contains(&(e - 1)))
        .max_by_key(|(s, _)| *s)
    {
        if is_passive(sentence, start) {
            if sentence[end..m.token_start].iter().any(|t| t.lemma.eq_ignore_ascii_case("by")) {
                roles.push(Role::Aggressor);
            }
        } else {
            roles.push(Role::Victim);
        }
    }
    combine(roles)
}

/// Assign Victim/Aggressor roles to Actor mentions from keywords and the position of
/// aggressive acts, then propagate across mentions of one entity. Any disagreement
/// leaves the role unset. Existing roles on the input are ignored, so the operation is
/// idempotent.
pub fn assign_roles(doc: &Document, mentions: &[Mention], rules: &RoleRuleSet) -> Vec<Mention> {
    let acts = rules.act_sequences();
    let local: Vec<Evidence> = mentions
        .iter()
        .map(|m| match m.etype {
            EntityType::Actor => local_evidence(doc, m, rules, &acts),
            _ => Evidence::None,
        })
        .collect();

    let mut per_entity: BTreeMap<&str, Evidence> = BTreeMap::new();
    for (m, ev) in mentions.iter().zip(&local) {
        if m.etype != EntityType::Actor || m.entity_id.is_empty() {
            continue;
        }
        let slot = per_entity.entry(m.entity_id.as_str()).or_insert(Evidence::None);
        *slot = match (*slot, *ev) {
            (Evidence::Conflict, _) | (_, Evidence::Conflict) => Evidence::Conflict,
            (s, Evidence::None) => s,
            (Evidence::None, e) => e,
            (Evidence::Role(a), Evidence::Role(b)) if a == b => Evidence::Role(a),
            _ => Evidence::Conflict,
        };
    }

    mentions
        .iter()
        .zip(&local)
        .map(|(m, ev)| {
            let role = if m.etype != EntityType::Actor {
                None
            } else {
                let ev = if m.entity_id.is_empty() {
                    *ev
                } else {
                    per_entity[m.entity_id.as_str()]
                };
                match ev {
                    Evidence::Role(r) => Some(r),
                    _ => None,
                }
            };
            Mention { role, ..m.clone() }
        })
        .collect()
}
