//! Synthetic incident reports with planted mentions, gold relations and mirrored
//! secondary-database rows.

use std::collections::BTreeMap;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::candidates::RelationType;
use crate::corpus::{annotate, write_corpus, CorefSpan, Document, GazetteerSet};
use crate::error::{Error, Result};
use crate::evaluation::GoldRecord;
use crate::io::{write_atomic, write_jsonl};
use crate::mentions::{EntityType, Mention, Role};
use crate::supervision::{DbKind, DbRecord, SecondaryDb};

/// Main incident sentence patterns. Slots: `{date}`, `{aggressor}`, `{act}`, `{victim}`,
/// `{coords}`, `{crew}`; a capitalized slot name capitalizes the filler.
pub const DEFAULT_TEMPLATES: &[&str] = &[
    "On {date}, {aggressor} {act} {victim} near position {coords}.",
    "{Victim} was {act} by {aggressor} at position {coords} on {date}.",
    "On {date}, {aggressor} in a skiff {act} {victim} underway at position {coords}.",
    "{Aggressor} {act} {victim} at position {coords} on {date}.",
    "On {date}, {crew}, who were kidnapped from {victim} at position {coords}, have been released.",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthSpec {
    pub n_documents: usize,
    pub templates: Vec<String>,
    /// Rate of bystander actors and unrelated incident mentions.
    pub distractor_rate: f64,
    /// Rate of a second, unrelated date.
    pub date_clutter_rate: f64,
    /// Rate of a follow-up sentence naming crew victims and a second act.
    pub crew_rate: f64,
    /// Rate of a later coreferent mention of the victim ship.
    pub coref_rate: f64,
    /// Fraction of documents mirrored into the secondary databases.
    pub db_coverage: f64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            n_documents: 1000,
            templates: DEFAULT_TEMPLATES.iter().map(|s| s.to_string()).collect(),
            distractor_rate: 0.3,
            date_clutter_rate: 0.3,
            crew_rate: 0.3,
            coref_rate: 0.25,
            db_coverage: 0.3,
        }
    }
}

/// A mention written into a synthetic document.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Plant {
    pub char_start: usize,
    pub char_end: usize,
    pub etype: EntityType,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub role: Option<Role>,
    /// Part of the reported incident (as opposed to a distractor).
    pub relevant: bool,
    /// Plants sharing a group refer to one entity.
    pub group: usize,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantList {
    pub doc_id: String,
    pub plants: Vec<Plant>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthOutput {
    pub documents: Vec<Document>,
    pub gold: Vec<GoldRecord>,
    pub plants: Vec<PlantList>,
    pub piracy: SecondaryDb,
    pub maritime: SecondaryDb,
}

const SHIP_TYPES: &[&str] = &[
    "bulk carrier",
    "container ship",
    "general cargo ship",
    "tanker",
    "product tanker",
    "chemical tanker",
    "oil tanker",
    "car carrier",
    "supply vessel",
    "passenger ferry",
    "fishing vessel",
    "trawler",
    "yacht",
    "tug",
    "barge",
];
const FLAGS: &[&str] = &["Panama-flagged", "Liberia-flagged", "Singapore-flagged", "Malta-flagged"];
const SHIP_NAMES: &[&str] = &["OYA", "Anuket Amber", "Kota Ratu", "Nord Hope", "Bright Pacific", "Apollo", "Sea Lotus"];
/// Aggressor phrases with the category a database would file them under.
const AGGRESSORS: &[(&str, &str, &str)] = &[
    ("pirates", "pirates", "pirates"),
    ("armed pirates", "pirates", "pirates"),
    ("robbers", "robbers", "robbers"),
    ("armed robbers", "robbers", "robbers"),
    ("gunmen", "gunmen", "pirates"),
    ("attackers", "attackers", "pirates"),
    ("hijackers", "hijackers", "pirates"),
    ("thieves", "thieves", "robbers"),
    ("intruders", "intruders", "robbers"),
    ("{n} men", "men", "men"),
    ("{n} armed men", "men", "men"),
    ("{n} persons", "persons", "persons"),
];
const NUMBERS: &[&str] = &["two", "three", "four", "five", "six", "seven", "eight", "nine", "ten", "12"];
/// `(active past, canonical incident type)`.
const ACTS: &[(&str, &str)] = &[
    ("boarded", "boarding"),
    ("attacked", "attacking"),
    ("fired upon", "firing upon"),
    ("hijacked", "hijacking"),
    ("robbed", "robbery"),
    ("approached", "suspicious approach"),
];
const SECOND_ACTS: &[(&str, &str)] = &[("kidnapped", "kidnapping"), ("robbed", "robbery"), ("attacked", "attacking")];
const CREW: &[&str] = &["{n} crewmen", "{n} crew members", "{n} seafarers"];
const BYSTANDERS: &[(&str, &str)] = &[
    ("Local authorities", " were notified."),
    ("The coast guard", " was informed."),
    ("The marine police", " responded."),
    ("The port authority", " was alerted."),
];
const INCIDENT_NOUNS: &[(&str, &str)] = &[
    ("robbery", "robbery"),
    ("hijacking", "hijacking"),
    ("kidnapping", "kidnapping"),
    ("theft", "robbery"),
];
const PLACES: &[&str] = &["Lagos", "Douala", "Cotonou", "Lome", "Takoradi", "Luanda", "Manila", "Callao", "Santos", "Abidjan"];
const MONTH_NAMES: &[&str] = &[
    "January", "February", "March", "April", "May", "June", "July", "August", "September", "October", "November", "December",
];

struct Builder {
    text: String,
    plants: Vec<Plant>,
}

impl Builder {
    fn push(&mut self, s: &str) {
        self.text.push_str(s);
    }

    fn plant(&mut self, s: &str, etype: EntityType, role: Option<Role>, relevant: bool, group: usize) {
        let start = self.text.len();
        self.text.push_str(s);
        self.plants.push(Plant {
            char_start: start,
            char_end: self.text.len(),
            etype,
            role,
            relevant,
            group,
            text: s.to_string(),
        });
    }
}

fn capitalize(s: &str) -> String {
    let mut c = s.chars();
    match c.next() {
        Some(f) => f.to_uppercase().chain(c).collect(),
        None => String::new(),
    }
}

fn pick<'a, T>(rng: &mut ChaCha8Rng, xs: &'a [T]) -> &'a T {
    xs.choose(rng).expect("non-empty pool")
}

fn coordinates(rng: &mut ChaCha8Rng) -> (String, f64, f64) {
    let (ld, lm) = (rng.gen_range(0..20u32), rng.gen_range(0..60u32));
    let (gd, gm) = (rng.gen_range(0..150u32), rng.gen_range(0..60u32));
    let ns = if rng.gen_bool(0.7) { 'N' } else { 'S' };
    let ew = if rng.gen_bool(0.6) { 'E' } else { 'W' };
    let lat = (ld as f64 + lm as f64 / 60.0) * if ns == 'S' { -1.0 } else { 1.0 };
    let lon = (gd as f64 + gm as f64 / 60.0) * if ew == 'W' { -1.0 } else { 1.0 };
    let round = |x: f64| (x * 10_000.0).round() / 10_000.0;
    (format!("{ld:02}:{lm:02}{ns} – {gd:03}:{gm:02}{ew}"), round(lat), round(lon))
}

fn fill_number(rng: &mut ChaCha8Rng, pattern: &str) -> String {
    pattern.replace("{n}", pick(rng, NUMBERS))
}

struct Incident {
    year: i32,
    month: u32,
    day: u32,
    lat: f64,
    lon: f64,
    ship_type: String,
    aggressor_field: String,
    incident_type: String,
}

fn slots(template: &str) -> Vec<(usize, usize, &str)> {
    let mut out = Vec::new();
    let mut rest = 0;
    while let Some(open) = template[rest..].find('{') {
        let open = rest + open;
        let Some(close) = template[open..].find('}') else { break };
        let close = open + close;
        out.push((open, close + 1, &template[open + 1..close]));
        rest = close + 1;
    }
    out
}

fn generate_document(doc_id: &str, template: &str, spec: &SynthSpec, rng: &mut ChaCha8Rng) -> (Document, Vec<Plant>, Incident) {
    const VICTIM: usize = 0;
    const AGGRESSOR: usize = 1;
    const DATE: usize = 2;
    const COORDS: usize = 3;
    const ACT: usize = 4;
    const CREW_G: usize = 5;
    let mut next_group = 6;

    let year = rng.gen_range(2015..=2020);
    let month = rng.gen_range(1..=12u32);
    let day = rng.gen_range(1..=28u32);
    let date = if rng.gen_bool(0.4) {
        format!("{day} {} {year}", MONTH_NAMES[month as usize - 1])
    } else {
        format!("{day} {}", MONTH_NAMES[month as usize - 1])
    };
    let (coords, lat, lon) = coordinates(rng);
    let ship_type = *pick(rng, SHIP_TYPES);
    let named = rng.gen_bool(0.4);
    let mut victim = String::from(if named || rng.gen_bool(0.5) { "the " } else { "a " });
    if rng.gen_bool(0.3) {
        victim.push_str(pick(rng, FLAGS));
        victim.push(' ');
    }
    victim.push_str(ship_type);
    if named {
        victim.push(' ');
        victim.push_str(pick(rng, SHIP_NAMES));
    }
    let &(aggr_pattern, aggr_head, aggr_field) = pick(rng, AGGRESSORS);
    let aggressor = fill_number(rng, aggr_pattern);
    let &(act, act_type) = pick(rng, ACTS);
    let crew_pattern = *pick(rng, CREW);
    let crew = fill_number(rng, crew_pattern);
    let has_aggressor = template.contains("{aggressor}") || template.contains("{Aggressor}");

    let mut b = Builder { text: String::new(), plants: Vec::new() };
    let mut last = 0;
    for (open, close, name) in slots(template) {
        b.push(&template[last..open]);
        match name {
            "date" => b.plant(&date, EntityType::Date, None, true, DATE),
            "aggressor" => b.plant(&aggressor, EntityType::Actor, Some(Role::Aggressor), true, AGGRESSOR),
            "Aggressor" => b.plant(&capitalize(&aggressor), EntityType::Actor, Some(Role::Aggressor), true, AGGRESSOR),
            "act" => b.plant(act, EntityType::IncidentType, None, true, ACT),
            "victim" => b.plant(&victim, EntityType::Actor, Some(Role::Victim), true, VICTIM),
            "Victim" => b.plant(&capitalize(&victim), EntityType::Actor, Some(Role::Victim), true, VICTIM),
            "coords" => b.plant(&coords, EntityType::Location, None, true, COORDS),
            "crew" => b.plant(&crew, EntityType::Actor, Some(Role::Victim), true, CREW_G),
            other => b.push(&format!("{{{other}}}")),
        }
        last = close;
    }
    b.push(&template[last..]);
    // The kidnapping template states its act inside the sentence.
    if template.contains("kidnapped from") {
        let at = b.text.find("kidnapped").expect("template text");
        b.plants.push(Plant {
            char_start: at,
            char_end: at + "kidnapped".len(),
            etype: EntityType::IncidentType,
            role: None,
            relevant: true,
            group: ACT,
            text: "kidnapped".into(),
        });
    }
    let incident_type = if template.contains("{act}") { act_type } else { "kidnapping" };

    if has_aggressor && rng.gen_bool(spec.crew_rate) {
        let second: Vec<&(&str, &str)> = SECOND_ACTS.iter().filter(|(_, t)| *t != incident_type).collect();
        let &&(act2, _) = second.choose(rng).expect("second acts");
        b.push(" ");
        b.plant(&format!("The {aggr_head}"), EntityType::Actor, Some(Role::Aggressor), true, AGGRESSOR);
        b.push(" ");
        let group = next_group;
        next_group += 1;
        b.plant(act2, EntityType::IncidentType, None, true, group);
        b.push(" ");
        b.plant(&crew, EntityType::Actor, Some(Role::Victim), true, CREW_G);
        b.push(" and escaped.");
    }
    if rng.gen_bool(spec.coref_rate) {
        b.push(" ");
        b.plant("The vessel", EntityType::Actor, Some(Role::Victim), true, VICTIM);
        if rng.gen_bool(0.5) {
            b.push(" resumed its voyage.");
        } else {
            b.push(" was later escorted to ");
            let group = next_group;
            next_group += 1;
            b.plant(pick(rng, PLACES), EntityType::Location, None, false, group);
            b.push(".");
        }
    }
    if rng.gen_bool(spec.date_clutter_rate) {
        let other: Vec<&(&str, &str)> = INCIDENT_NOUNS.iter().filter(|(_, t)| *t != incident_type).collect();
        let &&(noun, _) = other.choose(rng).expect("incident nouns");
        let cm = (month % 12) + 1;
        let cd = rng.gen_range(1..=28u32);
        b.push(" A similar ");
        let g1 = next_group;
        let g2 = next_group + 1;
        next_group += 2;
        if rng.gen_bool(0.5) {
            b.plant(noun, EntityType::IncidentType, None, false, g1);
        } else {
            b.push("incident");
        }
        b.push(" was reported on ");
        b.plant(&format!("{cd} {}", MONTH_NAMES[cm as usize - 1]), EntityType::Date, None, false, g2);
        b.push(".");
    }
    if rng.gen_bool(spec.distractor_rate) {
        let &(who, rest) = pick(rng, BYSTANDERS);
        b.push(" ");
        b.plant(who, EntityType::Actor, None, false, next_group);
        b.push(rest);
    }

    let text = b.text;
    let mut doc = annotate(&Document::raw(doc_id, "synthetic", text), &GazetteerSet::maritime());
    doc.coref_chains = coref_chains(&doc, &b.plants);
    let incident = Incident {
        year,
        month,
        day,
        lat,
        lon,
        ship_type: ship_type.to_string(),
        aggressor_field: if has_aggressor { aggr_field.to_string() } else { String::new() },
        incident_type: incident_type.to_string(),
    };
    (doc, b.plants, incident)
}

/// Token span `(sentence, start, end)` covering a character span.
fn token_span(doc: &Document, start: usize, end: usize) -> Option<CorefSpan> {
    doc.sentences.iter().enumerate().find_map(|(s, toks)| {
        let a = toks.iter().position(|t| t.char_start >= start && t.char_end <= end)?;
        let b = toks.iter().rposition(|t| t.char_start >= start && t.char_end <= end)?;
        Some(CorefSpan(s, a, b + 1))
    })
}

fn coref_chains(doc: &Document, plants: &[Plant]) -> Vec<Vec<CorefSpan>> {
    let mut groups: BTreeMap<usize, Vec<&Plant>> = BTreeMap::new();
    for p in plants.iter().filter(|p| p.etype == EntityType::Actor) {
        groups.entry(p.group).or_default().push(p);
    }
    groups
        .into_values()
        .filter(|g| g.len() > 1)
        .map(|g| g.iter().filter_map(|p| token_span(doc, p.char_start, p.char_end)).collect())
        .collect()
}

fn satisfies(p: &Plant, etype: EntityType, role: Option<Role>) -> bool {
    p.etype == etype && (role.is_none() || p.role.is_none() || p.role == role)
}

/// Gold judgement for every pair of plants that could form a candidate: True exactly when
/// both are part of the incident and the planted roles fill the relation's slots.
pub fn gold_for(doc_id: &str, plants: &[Plant]) -> Vec<GoldRecord> {
    let mut out = Vec::new();
    for rtype in RelationType::ALL {
        let (ls, rs) = rtype.specs();
        for l in plants.iter().filter(|p| satisfies(p, ls.etype, ls.role)) {
            for r in plants.iter().filter(|p| satisfies(p, rs.etype, rs.role)) {
                if std::ptr::eq(l, r) || (l.etype == r.etype && l.group == r.group) {
                    continue;
                }
                let label = l.relevant && r.relevant && l.role == ls.role && r.role == rs.role;
                out.push(GoldRecord::Span {
                    doc_id: doc_id.to_string(),
                    rtype,
                    left: (l.char_start, l.char_end),
                    right: (r.char_start, r.char_end),
                    label,
                });
            }
        }
    }
    out
}

fn db_record(inc: &Incident, text: &str) -> DbRecord {
    DbRecord {
        date: format!("{:04}-{:02}-{:02}", inc.year, inc.month, inc.day),
        lat: inc.lat,
        lon: inc.lon,
        ship_type: inc.ship_type.clone(),
        aggressor: inc.aggressor_field.clone(),
        incident_type: inc.incident_type.clone(),
        text_prefix: text.chars().take(60).collect(),
    }
}

fn unrelated_record(rng: &mut ChaCha8Rng) -> DbRecord {
    let (_, lat, lon) = coordinates(rng);
    let &(_, _, field) = pick(rng, AGGRESSORS);
    let &(_, act_type) = pick(rng, ACTS);
    DbRecord {
        date: format!("{:04}-{:02}-{:02}", rng.gen_range(2015..=2020), rng.gen_range(1..=12), rng.gen_range(1..=28)),
        lat,
        lon,
        ship_type: pick(rng, SHIP_TYPES).to_string(),
        aggressor: field.to_string(),
        incident_type: act_type.to_string(),
        text_prefix: "Unrelated incident reported by a coastal state without matching narrative text".into(),
    }
}

pub fn generate_synthetic(spec: &SynthSpec, seed: u64) -> Result<SynthOutput> {
    if spec.templates.is_empty() {
        return Err(Error::NoTemplates);
    }
    for (name, rate) in [
        ("distractor_rate", spec.distractor_rate),
        ("date_clutter_rate", spec.date_clutter_rate),
        ("crew_rate", spec.crew_rate),
        ("coref_rate", spec.coref_rate),
        ("db_coverage", spec.db_coverage),
    ] {
        if !(0.0..=1.0).contains(&rate) {
            return Err(Error::Config(format!("synth {name} must lie in [0, 1], got {rate}")));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let width = spec.n_documents.saturating_sub(1).to_string().len().max(4);
    let mut documents = Vec::with_capacity(spec.n_documents);
    let mut gold = Vec::new();
    let mut plants = Vec::new();
    let mut incidents = Vec::new();
    for i in 0..spec.n_documents {
        let doc_id = format!("synth-{i:0width$}");
        let template = pick(&mut rng, &spec.templates).clone();
        let (doc, p, inc) = generate_document(&doc_id, &template, spec, &mut rng);
        gold.extend(gold_for(&doc_id, &p));
        plants.push(PlantList { doc_id: doc_id.clone(), plants: p });
        incidents.push(inc);
        documents.push(doc);
    }

    let n_covered = (spec.db_coverage * spec.n_documents as f64).round() as usize;
    let mut order: Vec<usize> = (0..spec.n_documents).collect();
    order.shuffle(&mut rng);
    let mut covered: Vec<usize> = order.into_iter().take(n_covered).collect();
    covered.sort_unstable();
    let mut piracy = Vec::new();
    let mut maritime = Vec::new();
    for &i in &covered {
        piracy.push(db_record(&incidents[i], &documents[i].text));
        maritime.push(db_record(&incidents[i], &documents[i].text));
    }
    for _ in 0..n_covered {
        piracy.push(unrelated_record(&mut rng));
        maritime.push(unrelated_record(&mut rng));
    }
    piracy.shuffle(&mut rng);
    maritime.shuffle(&mut rng);
    Ok(SynthOutput {
        documents,
        gold,
        plants,
        piracy: SecondaryDb::new(DbKind::Piracy, piracy),
        maritime: SecondaryDb::new(DbKind::Maritime, maritime),
    })
}

/// File names written by [`SynthOutput::write_dir`].
pub const CORPUS_FILE: &str = "corpus.jsonl";
pub const GOLD_FILE: &str = "gold.jsonl";
pub const PLANTS_FILE: &str = "plants.jsonl";
pub const PIRACY_FILE: &str = "piracy.csv";
pub const MARITIME_FILE: &str = "maritime.csv";

impl SynthOutput {
    pub fn write_dir(&self, dir: &Path) -> Result<()> {
        write_corpus(&dir.join(CORPUS_FILE), &self.documents)?;
        write_jsonl(&dir.join(GOLD_FILE), &self.gold)?;
        write_jsonl(&dir.join(PLANTS_FILE), &self.plants)?;
        write_atomic(&dir.join(PIRACY_FILE), self.piracy.to_csv()?.as_bytes())?;
        write_atomic(&dir.join(MARITIME_FILE), self.maritime.to_csv()?.as_bytes())
    }

    /// Fraction of planted mentions recovered with identical type and character span.
    pub fn recovery(&self, extracted: &BTreeMap<String, Vec<Mention>>) -> (usize, usize) {
        let mut found = 0;
        let mut total = 0;
        for pl in &self.plants {
            let ms = extracted.get(&pl.doc_id).map(Vec::as_slice).unwrap_or(&[]);
            for p in &pl.plants {
                total += 1;
                if ms
                    .iter()
                    .any(|m| m.etype == p.etype && m.char_start == p.char_start && m.char_end == p.char_end)
                {
                    found += 1;
                }
            }
        }
        (found, total)
    }
}
