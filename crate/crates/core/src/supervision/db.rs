//! Secondary incident databases and entity-level matching against them.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::lexicon::{self, lemmatize_phrase};
use crate::corpus::Document;
use crate::error::{Error, Result};
use crate::mentions::{canonical_incident, EntityType, Mention};

use super::{EntityVote, Polarity, Slot};

/// Coordinate match tolerance in decimal degrees.
pub const COORD_TOLERANCE: f64 = 0.02;
/// Number of leading characters compared against a Maritime record's text prefix.
pub const PREFIX_CHARS: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DbKind {
    Maritime,
    Piracy,
}

impl DbKind {
    pub fn source(self) -> &'static str {
        match self {
            DbKind::Maritime => "db:maritime",
            DbKind::Piracy => "db:piracy",
        }
    }
}

impl fmt::Display for DbKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DbKind::Maritime => "maritime",
            DbKind::Piracy => "piracy",
        })
    }
}

impl FromStr for DbKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "maritime" => Ok(DbKind::Maritime),
            "piracy" => Ok(DbKind::Piracy),
            other => Err(Error::Config(format!("unknown database kind `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DbRecord {
    pub date: String,
    pub lat: f64,
    pub lon: f64,
    pub ship_type: String,
    pub aggressor: String,
    pub incident_type: String,
    pub text_prefix: String,
}

impl DbRecord {
    /// `(year, month, day)` of the record date.
    pub fn ymd(&self) -> Option<(i32, u32, u32)> {
        lexicon::iso_date(self.date.trim()).filter(|&(y, m, d)| d <= days_in_month(y, m))
    }

    fn validate(&self, line: usize) -> Result<()> {
        let bad = |message: String| Err(Error::DbRecord { line, message });
        if self.ymd().is_none() {
            return bad(format!("invalid date `{}`", self.date));
        }
        if !(-90.0..=90.0).contains(&self.lat) {
            return bad(format!("latitude {} out of range", self.lat));
        }
        if !(-180.0..=180.0).contains(&self.lon) {
            return bad(format!("longitude {} out of range", self.lon));
        }
        Ok(())
    }
}

fn days_in_month(year: i32, month: u32) -> u32 {
    match month {
        2 if (year % 4 == 0 && year % 100 != 0) || year % 400 == 0 => 29,
        2 => 28,
        4 | 6 | 9 | 11 => 30,
        _ => 31,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SecondaryDb {
    pub kind: DbKind,
    pub records: Vec<DbRecord>,
}

pub const CSV_HEADER: [&str; 7] = ["date", "lat", "lon", "ship_type", "aggressor", "incident_type", "text_prefix"];

impl SecondaryDb {
    pub fn new(kind: DbKind, records: Vec<DbRecord>) -> Self {
        SecondaryDb { kind, records }
    }

    pub fn from_csv_reader<R: std::io::Read>(kind: DbKind, reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(reader);
        let headers = rdr
            .headers()
            .map_err(|e| Error::DbRecord { line: 1, message: e.to_string() })?
            .clone();
        if headers.iter().collect::<Vec<_>>() != CSV_HEADER {
            return Err(Error::DbRecord {
                line: 1,
                message: format!("expected header `{}`", CSV_HEADER.join(",")),
            });
        }
        let mut records = Vec::new();
        for row in rdr.deserialize::<DbRecord>() {
            let record = row.map_err(|e| Error::DbRecord {
                line: e.position().map(|p| p.line() as usize).unwrap_or(0),
                message: e.to_string(),
            })?;
            record.validate(records.len() + 2)?;
            records.push(record);
        }
        Ok(SecondaryDb { kind, records })
    }

    pub fn load(kind: DbKind, path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|_| Error::DbUnloaded(path.display().to_string()))?;
        Self::from_csv_reader(kind, file)
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in &self.records {
            w.serialize(r).map_err(|e| Error::Config(e.to_string()))?;
        }
        if self.records.is_empty() {
            w.write_record(CSV_HEADER).map_err(|e| Error::Config(e.to_string()))?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Config(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

/// Calendar date as written in a Date mention; any part may be missing.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct MentionDate {
    pub year: Option<i32>,
    pub month: Option<u32>,
    pub day: Option<u32>,
}

impl MentionDate {
    pub fn parse(surfaces: &[&str]) -> Self {
        let mut out = MentionDate::default();
        for s in surfaces {
            if let Some((y, m, d)) = lexicon::iso_date(s) {
                return MentionDate { year: Some(y), month: Some(m), day: Some(d) };
            }
            if let Some(m) = lexicon::month_number(s) {
                out.month = out.month.or(Some(m));
            } else if let Some(y) = lexicon::year_number(s) {
                out.year = out.year.or(Some(y));
            } else if let Some(d) = lexicon::day_number(s) {
                out.day = out.day.or(Some(d));
            }
        }
        out
    }

    /// Day and month must agree; the year only when the mention states one.
    pub fn matches(&self, (y, m, d): (i32, u32, u32)) -> bool {
        self.day == Some(d) && self.month == Some(m) && self.year.is_none_or(|my| my == y)
    }
}

/// `(lat, lon)` of a Location mention written as coordinates.
pub fn mention_coordinates(m: &Mention, doc: &Document) -> Option<(f64, f64)> {
    let toks = m.tokens(doc);
    let lat = toks.iter().find_map(|t| lexicon::latitude(&t.surface))?;
    let lon = toks.iter().find_map(|t| lexicon::longitude(&t.surface))?;
    Some((lat, lon))
}

fn normalized_prefix(text: &str) -> String {
    text.split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
        .to_lowercase()
        .chars()
        .take(PREFIX_CHARS)
        .collect()
}

pub fn prefix_matches(doc_text: &str, record_prefix: &str) -> bool {
    let a = normalized_prefix(doc_text);
    let b = normalized_prefix(record_prefix);
    !b.is_empty() && a == b
}

fn last_lemma(phrase: &str) -> Option<String> {
    lemmatize_phrase(phrase).pop()
}

/// Canonical incident type of a free-text database field.
pub fn canonical_phrase(phrase: &str, aliases: &BTreeMap<String, String>) -> Option<String> {
    let lower = phrase.trim().to_lowercase();
    if aliases.values().any(|v| *v == lower) {
        return Some(lower);
    }
    let lemmas = lemmatize_phrase(&lower);
    aliases
        .get(&lemmas.join(" "))
        .or_else(|| lemmas.last().and_then(|l| aliases.get(l)))
        .cloned()
}

/// Mentions of a document that anchor it to a record: matching dates and coordinates.
struct Anchor {
    dates: Vec<usize>,
    coords: Vec<usize>,
}

fn anchor(doc: &Document, mentions: &[Mention], db: &SecondaryDb, record: &DbRecord) -> Option<Anchor> {
    let ymd = record.ymd()?;
    let dates: Vec<usize> = mentions
        .iter()
        .enumerate()
        .filter(|(_, m)| m.etype == EntityType::Date)
        .filter(|(_, m)| {
            let surfaces: Vec<&str> = m.tokens(doc).iter().map(|t| t.surface.as_str()).collect();
            MentionDate::parse(&surfaces).matches(ymd)
        })
        .map(|(i, _)| i)
        .collect();
    let coords: Vec<usize> = mentions
        .iter()
        .enumerate()
        .filter(|(_, m)| m.etype == EntityType::Location)
        .filter(|(_, m)| {
            mention_coordinates(m, doc).is_some_and(|(lat, lon)| {
                (lat - record.lat).abs() <= COORD_TOLERANCE && (lon - record.lon).abs() <= COORD_TOLERANCE
            })
        })
        .map(|(i, _)| i)
        .collect();
    if dates.is_empty() || coords.is_empty() {
        return None;
    }
    if db.kind == DbKind::Maritime && !prefix_matches(&doc.text, &record.text_prefix) {
        return None;
    }
    Some(Anchor { dates, coords })
}

/// Entity votes from one database for a document: empty unless some record matches.
pub fn db_entity_votes(
    doc: &Document,
    mentions: &[Mention],
    db: &SecondaryDb,
    aliases: &BTreeMap<String, String>,
) -> Vec<EntityVote> {
    let Some((record, anchor)) = db
        .records
        .iter()
        .find_map(|r| anchor(doc, mentions, db, r).map(|a| (r, a)))
    else {
        return Vec::new();
    };
    let source = db.kind.source();
    let (actor_slot, actor_field) = match db.kind {
        DbKind::Piracy => (Slot::Victim, &record.ship_type),
        DbKind::Maritime => (Slot::Aggressor, &record.aggressor),
    };
    let field_head = last_lemma(actor_field);
    let record_incident = canonical_phrase(&record.incident_type, aliases);

    // Actor matches hold for the whole coreference entity.
    let entity_key = |m: &Mention| if m.entity_id.is_empty() { m.mention_id.clone() } else { m.entity_id.clone() };
    let matched_entities: BTreeSet<String> = match &field_head {
        Some(head) => mentions
            .iter()
            .filter(|m| m.etype == EntityType::Actor && m.head_lemma(doc) == *head)
            .map(entity_key)
            .collect(),
        None => BTreeSet::new(),
    };

    let mut votes = Vec::new();
    for (i, m) in mentions.iter().enumerate() {
        let vote = |slot, truth: bool| EntityVote {
            mention_id: m.mention_id.clone(),
            slot,
            source: source.to_string(),
            polarity: Polarity::from(truth),
        };
        match m.etype {
            EntityType::Actor => {
                if field_head.is_some() {
                    votes.push(vote(actor_slot, matched_entities.contains(&entity_key(m))));
                }
            }
            EntityType::Date => votes.push(vote(Slot::Date, anchor.dates.contains(&i))),
            EntityType::Location => votes.push(vote(Slot::Location, anchor.coords.contains(&i))),
            EntityType::IncidentType => {
                if let Some(rec) = &record_incident {
                    let canon = canonical_incident(m, doc, aliases);
                    votes.push(vote(Slot::IncidentType, canon.as_ref() == Some(rec)));
                }
            }
        }
    }
    votes
}

#[cfg(test)]
mod tests {
    use super::*;

    const CSV: &str = "date,lat,lon,ship_type,aggressor,incident_type,text_prefix\n\
        2019-11-02,4.1167,6.8833,general cargo ship,pirates,boarding,\"On 2 November, armed pirates boarded the general cargo ship OYA\"\n";

    #[test]
    fn csv_round_trip() {
        let db = SecondaryDb::from_csv_reader(DbKind::Piracy, CSV.as_bytes()).unwrap();
        assert_eq!(db.records.len(), 1);
        assert_eq!(db.records[0].ymd(), Some((2019, 11, 2)));
        let again = SecondaryDb::from_csv_reader(DbKind::Piracy, db.to_csv().unwrap().as_bytes()).unwrap();
        assert_eq!(again, db);
        let empty = SecondaryDb::new(DbKind::Maritime, vec![]);
        assert!(SecondaryDb::from_csv_reader(DbKind::Maritime, empty.to_csv().unwrap().as_bytes())
            .unwrap()
            .records
            .is_empty());
    }

    #[test]
    fn invalid_records_are_rejected() {
        let bad_date = CSV.replace("2019-11-02", "2019-02-30");
        assert!(matches!(
            SecondaryDb::from_csv_reader(DbKind::Piracy, bad_date.as_bytes()),
            Err(Error::DbRecord { line: 2, .. })
        ));
        let bad_lat = CSV.replace("4.1167", "95.0");
        assert!(SecondaryDb::from_csv_reader(DbKind::Piracy, bad_lat.as_bytes()).is_err());
        assert!(SecondaryDb::from_csv_reader(DbKind::Piracy, "a,b\n1,2\n".as_bytes()).is_err());
        assert!(matches!(
            SecondaryDb::load(DbKind::Piracy, Path::new("/nonexistent/db.csv")),
            Err(Error::DbUnloaded(_))
        ));
    }

    #[test]
    fn mention_dates() {
        let p = |s: &str| MentionDate::parse(&s.split_whitespace().collect::<Vec<_>>());
        assert!(p("2 November").matches((2019, 11, 2)));
        assert!(!p("2 November 2018").matches((2019, 11, 2)));
        assert!(p("2019-11-02").matches((2019, 11, 2)));
        assert!(!p("October 2018").matches((2018, 10, 2)));
    }

    #[test]
    fn prefixes_ignore_case_and_spacing() {
        let text = "On 2 November,  armed PIRATES boarded the general cargo ship OYA near position 04:07N.";
        assert!(prefix_matches(text, "on 2 November, armed pirates boarded the general cargo ship OYA"));
        assert!(!prefix_matches(text, "On 3 November, armed pirates boarded the general cargo ship OYA"));
        assert!(!prefix_matches(text, ""));
    }

    #[test]
    fn canonical_fields() {
        let aliases = crate::mentions::default_aliases();
        assert_eq!(canonical_phrase("Boarding", &aliases).as_deref(), Some("boarding"));
        assert_eq!(canonical_phrase("hijacked", &aliases).as_deref(), Some("hijacking"));
        assert_eq!(canonical_phrase("suspicious approach", &aliases).as_deref(), Some("suspicious approach"));
        assert_eq!(canonical_phrase("mystery", &aliases), None);
    }
}
