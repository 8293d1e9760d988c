//! Gazetteers, the suffix-stripping lemmatizer and the closed-class word lists
//! used by the built-in annotator.

use std::path::Path;

use once_cell::sync::Lazy;
use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::io::read_to_string;

/// One actor-noun gazetteer entry: a lemma sequence plus an optional ontology category
/// (for example `TransportShips`).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActorEntry {
    pub lemmas: Vec<String>,
    pub category: Option<String>,
}

/// Place names, actor nouns and incident-type lemmas.
///
/// Places match on lowercased surfaces; actor nouns and incident terms match on
/// lowercased lemma sequences.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GazetteerSet {
    pub places: Vec<Vec<String>>,
    pub actors: Vec<ActorEntry>,
    pub incident_terms: Vec<Vec<String>>,
}

fn split_entry(s: &str) -> Vec<String> {
    s.split_whitespace().map(|w| w.to_lowercase()).collect()
}

/// Parse a gazetteer file body: UTF-8, one entry per line, `#` starts a comment.
/// Returns `(entry, optional tab-separated tag)` pairs.
pub fn parse_gazetteer(body: &str) -> Vec<(String, Option<String>)> {
    body.lines()
        .filter_map(|line| {
            let line = match line.find('#') {
                Some(i) => &line[..i],
                None => line,
            };
            let mut parts = line.splitn(2, '\t');
            let entry = parts.next()?.trim();
            if entry.is_empty() {
                return None;
            }
            let tag = parts
                .next()
                .map(str::trim)
                .filter(|t| !t.is_empty())
                .map(str::to_string);
            Some((entry.to_string(), tag))
        })
        .collect()
}

impl GazetteerSet {
    /// Build from explicit lists. Actor entries may carry a category.
    pub fn new<'a>(
        places: impl IntoIterator<Item = &'a str>,
        actors: impl IntoIterator<Item = (&'a str, Option<&'a str>)>,
        incident_terms: impl IntoIterator<Item = &'a str>,
    ) -> Self {
        GazetteerSet {
            places: places.into_iter().map(split_entry).collect(),
            actors: actors
                .into_iter()
                .map(|(a, c)| ActorEntry {
                    lemmas: split_entry(a),
                    category: c.map(str::to_string),
                })
                .collect(),
            incident_terms: incident_terms.into_iter().map(split_entry).collect(),
        }
    }

    /// Load `places.txt`, `actors.txt` and `incidents.txt` from a directory.
    /// `actors.txt` lines may carry a tab-separated ontology category.
    pub fn load_dir(dir: &Path) -> Result<Self> {
        let places = parse_gazetteer(&read_to_string(&dir.join("places.txt"))?);
        let actors = parse_gazetteer(&read_to_string(&dir.join("actors.txt"))?);
        let incidents = parse_gazetteer(&read_to_string(&dir.join("incidents.txt"))?);
        Ok(GazetteerSet {
            places: places.iter().map(|(p, _)| split_entry(p)).collect(),
            actors: actors
                .iter()
                .map(|(a, c)| ActorEntry {
                    lemmas: lemmatize_phrase(a),
                    category: c.clone(),
                })
                .collect(),
            incident_terms: incidents.iter().map(|(t, _)| lemmatize_phrase(t)).collect(),
        })
    }

    /// The built-in maritime gazetteers.
    pub fn maritime() -> Self {
        GazetteerSet::new(
            DEFAULT_PLACES.iter().copied(),
            DEFAULT_ACTORS.iter().map(|(a, c)| (*a, Some(*c))),
            DEFAULT_INCIDENT_TERMS.iter().copied(),
        )
    }

    /// Ontology category of the longest actor entry that is a suffix of `lemmas`.
    pub fn actor_category(&self, lemmas: &[String]) -> Option<&str> {
        let lower: Vec<String> = lemmas.iter().map(|l| l.to_lowercase()).collect();
        self.actors
            .iter()
            .filter(|e| !e.lemmas.is_empty() && contains_seq(&lower, &e.lemmas))
            .max_by_key(|e| e.lemmas.len())
            .and_then(|e| e.category.as_deref())
    }

    /// Write the three gazetteer files into `dir`.
    pub fn write_dir(&self, dir: &Path) -> Result<()> {
        let places: String = self.places.iter().map(|p| p.join(" ") + "\n").collect();
        let actors: String = self
            .actors
            .iter()
            .map(|a| match &a.category {
                Some(c) => format!("{}\t{}\n", a.lemmas.join(" "), c),
                None => format!("{}\n", a.lemmas.join(" ")),
            })
            .collect();
        let incidents: String = self
            .incident_terms
            .iter()
            .map(|t| t.join(" ") + "\n")
            .collect();
        crate::io::write_atomic(&dir.join("places.txt"), places.as_bytes())?;
        crate::io::write_atomic(&dir.join("actors.txt"), actors.as_bytes())?;
        crate::io::write_atomic(&dir.join("incidents.txt"), incidents.as_bytes())
    }
}

fn contains_seq(hay: &[String], needle: &[String]) -> bool {
    needle.len() <= hay.len() && hay.windows(needle.len()).any(|w| w == needle)
}

const DEFAULT_PLACES: &[&str] = &[
    "lagos",
    "bonny river",
    "bonny island",
    "gulf of guinea",
    "singapore strait",
    "amazon river",
    "chittagong",
    "chittagong anchorage",
    "dumai",
    "belawan",
    "batangas",
    "callao",
    "luanda",
    "douala",
    "cotonou",
    "lome",
    "takoradi",
    "santos",
    "macapa",
    "manila",
    "sandakan",
    "tanjung priok",
    "bay of bengal",
    "gulf of aden",
    "red sea",
    "mogadishu",
    "pointe noire",
    "port harcourt",
    "abidjan",
    "dar es salaam",
    "cartagena",
    "guayaquil",
    "kakinada",
    "vung tau",
    "sulu sea",
    "malacca strait",
    "republic of the congo",
    "congo",
    "nigeria",
    "indonesia",
    "philippines",
    "peru",
    "brazil",
    "bangladesh",
    "somalia",
    "ghana",
    "cameroon",
    "benin",
    "togo",
    "malaysia",
    "venezuela",
    "ecuador",
    "india",
    "vietnam",
];

const DEFAULT_ACTORS: &[(&str, &str)] = &[
    ("bulk carrier", "TransportShips"),
    ("container ship", "TransportShips"),
    ("general cargo ship", "TransportShips"),
    ("cargo ship", "TransportShips"),
    ("tanker", "TransportShips"),
    ("product tanker", "TransportShips"),
    ("chemical tanker", "TransportShips"),
    ("oil tanker", "TransportShips"),
    ("crude oil tanker", "TransportShips"),
    ("car carrier", "TransportShips"),
    ("merchant vessel", "TransportShips"),
    ("supply vessel", "TransportShips"),
    ("offshore supply vessel", "TransportShips"),
    ("passenger ferry", "PassengerShips"),
    ("ferry", "PassengerShips"),
    ("passenger ship", "PassengerShips"),
    ("cruise ship", "PassengerShips"),
    ("fishing vessel", "FishingShips"),
    ("fishing boat", "FishingShips"),
    ("trawler", "FishingShips"),
    ("dhow", "FishingShips"),
    ("naval vessel", "NavyShips"),
    ("warship", "NavyShips"),
    ("patrol boat", "NavyShips"),
    ("vessel", "OtherShips"),
    ("ship", "OtherShips"),
    ("yacht", "OtherShips"),
    ("tug", "OtherShips"),
    ("barge", "OtherShips"),
    ("pirate", "Individuals"),
    ("robber", "Individuals"),
    ("intruder", "Individuals"),
    ("gunman", "Individuals"),
    ("assailant", "Individuals"),
    ("terrorist", "Individuals"),
    ("thief", "Individuals"),
    ("hijacker", "Individuals"),
    ("kidnapper", "Individuals"),
    ("attacker", "Individuals"),
    ("perpetrator", "Individuals"),
    ("suspect", "Individuals"),
    ("man", "Individuals"),
    ("individual", "Individuals"),
    ("person", "Individuals"),
    ("crew", "Individuals"),
    ("crewman", "Individuals"),
    ("crew member", "Individuals"),
    ("seafarer", "Individuals"),
    ("sailor", "Individuals"),
    ("passenger", "Individuals"),
    ("master", "Individuals"),
    ("captain", "Individuals"),
    ("fisherman", "Individuals"),
    ("watchman", "Individuals"),
    ("authority", "Organizations"),
    ("coast guard", "Organizations"),
    ("navy", "Organizations"),
    ("police", "Organizations"),
    ("marine police", "Organizations"),
    ("port authority", "Organizations"),
];

const DEFAULT_INCIDENT_TERMS: &[&str] = &[
    "board",
    "boarding",
    "attack",
    "fire upon",
    "fire",
    "hijack",
    "hijacking",
    "kidnap",
    "kidnapping",
    "rob",
    "robbery",
    "steal",
    "theft",
    "approach",
];

pub(crate) const MONTHS: &[&str] = &[
    "january",
    "february",
    "march",
    "april",
    "may",
    "june",
    "july",
    "august",
    "september",
    "october",
    "november",
    "december",
];

/// Month number (1-12) of a capitalized month name or common abbreviation.
pub fn month_number(token: &str) -> Option<u32> {
    if !token.chars().next().is_some_and(char::is_uppercase) {
        return None;
    }
    let lower = token.trim_end_matches('.').to_lowercase();
    MONTHS
        .iter()
        .position(|m| *m == lower || (lower.len() >= 3 && lower.len() < m.len() && m.starts_with(&lower)))
        .map(|i| i as u32 + 1)
}

static DAY_RE: Lazy<Regex> = Lazy::new(|| Regex::new(r"^(\d{1,2})(st|nd|rd|th)?$").unwrap());
static YEAR_RE: Lazy<Regex> = Lazy::new(|| Regex::new(r"^(19|20)\d{2}$").unwrap());
static ISO_RE: Lazy<Regex> = Lazy::new(|| Regex::new(r"^(\d{4})-(\d{2})-(\d{2})$").unwrap());
static LAT_RE: Lazy<Regex> =
    Lazy::new(|| Regex::new(r"^(\d{1,2}):(\d{2}(?:\.\d+)?)([NS])$").unwrap());
static LON_RE: Lazy<Regex> =
    Lazy::new(|| Regex::new(r"^(\d{1,3}):(\d{2}(?:\.\d+)?)([EW])$").unwrap());

pub fn day_number(token: &str) -> Option<u32> {
    let caps = DAY_RE.captures(token)?;
    let d: u32 = caps[1].parse().ok()?;
    (1..=31).contains(&d).then_some(d)
}

pub fn year_number(token: &str) -> Option<i32> {
    YEAR_RE.is_match(token).then(|| token.parse().ok()).flatten()
}

/// `(year, month, day)` of an ISO `YYYY-MM-DD` token.
pub fn iso_date(token: &str) -> Option<(i32, u32, u32)> {
    let caps = ISO_RE.captures(token)?;
    let y = caps[1].parse().ok()?;
    let m = caps[2].parse().ok()?;
    let d = caps[3].parse().ok()?;
    ((1..=12).contains(&m) && (1..=31).contains(&d)).then_some((y, m, d))
}

/// Decimal degrees of a `DD:MM(.m)N`/`S` latitude token.
pub fn latitude(token: &str) -> Option<f64> {
    let caps = LAT_RE.captures(token)?;
    let deg: f64 = caps[1].parse().ok()?;
    let min: f64 = caps[2].parse().ok()?;
    let v = deg + min / 60.0;
    Some(if &caps[3] == "S" { -v } else { v })
}

/// Decimal degrees of a `DDD:MM(.m)E`/`W` longitude token.
pub fn longitude(token: &str) -> Option<f64> {
    let caps = LON_RE.captures(token)?;
    let deg: f64 = caps[1].parse().ok()?;
    let min: f64 = caps[2].parse().ok()?;
    let v = deg + min / 60.0;
    Some(if &caps[3] == "W" { -v } else { v })
}

pub fn is_coordinate(token: &str) -> bool {
    LAT_RE.is_match(token) || LON_RE.is_match(token)
}

/// Token spans of coordinates: a latitude optionally joined to a longitude by up to two
/// dash-like tokens, or a lone latitude/longitude.
pub fn coordinate_spans(words: &[&str]) -> Vec<(usize, usize)> {
    let dash = |w: &str| matches!(w, "-" | "--" | "–" | "—" | "/" | ",");
    let mut out = Vec::new();
    let mut i = 0;
    while i < words.len() {
        if latitude(words[i]).is_some() {
            let mut j = i + 1;
            while j < words.len() && j <= i + 2 && dash(words[j]) {
                j += 1;
            }
            if j < words.len() && longitude(words[j]).is_some() {
                out.push((i, j + 1));
                i = j + 1;
                continue;
            }
            out.push((i, i + 1));
        } else if longitude(words[i]).is_some() {
            out.push((i, i + 1));
        }
        i += 1;
    }
    out
}

pub fn is_punct(token: &str) -> bool {
    !token.is_empty() && token.chars().all(|c| !c.is_alphanumeric())
}

const NUMBER_WORDS: &[&str] = &[
    "one", "two", "three", "four", "five", "six", "seven", "eight", "nine", "ten", "eleven",
    "twelve", "several", "fifteen", "twenty",
];

pub fn is_number_word(lower: &str) -> bool {
    NUMBER_WORDS.contains(&lower)
}

static IRREGULAR: Lazy<Vec<(&'static str, &'static str)>> = Lazy::new(|| {
    vec![
        ("was", "be"),
        ("were", "be"),
        ("is", "be"),
        ("are", "be"),
        ("am", "be"),
        ("been", "be"),
        ("being", "be"),
        ("has", "have"),
        ("had", "have"),
        ("having", "have"),
        ("did", "do"),
        ("does", "do"),
        ("done", "do"),
        ("stole", "steal"),
        ("stolen", "steal"),
        ("took", "take"),
        ("taken", "take"),
        ("fled", "flee"),
        ("held", "hold"),
        ("shot", "shoot"),
        ("left", "leave"),
        ("saw", "see"),
        ("seen", "see"),
        ("got", "get"),
        ("gave", "give"),
        ("given", "give"),
        ("came", "come"),
        ("went", "go"),
        ("gone", "go"),
        ("men", "man"),
        ("women", "woman"),
        ("crewmen", "crewman"),
        ("gunmen", "gunman"),
        ("fishermen", "fisherman"),
        ("watchmen", "watchman"),
        ("thieves", "thief"),
        ("knives", "knife"),
        ("people", "person"),
        ("authorities", "authority"),
        ("its", "its"),
        ("this", "this"),
        ("us", "us"),
        ("as", "as"),
    ]
});

/// Verbs whose stems lost a final `e` before `-ed`/`-ing`.
const E_FINAL: &[&str] = &[
    "fire", "release", "raise", "notice", "rescue", "seize", "escape", "arrive", "damage",
    "secure", "cause", "use", "force", "injure", "capture", "pursue", "continue", "chase",
    "move", "tie", "locate", "operate", "believe", "receive", "issue", "manage", "engage",
    "charge",
];

fn restore_e(stem: &str) -> String {
    let with_e = format!("{stem}e");
    if E_FINAL.contains(&with_e.as_str()) {
        return with_e;
    }
    let bytes = stem.as_bytes();
    let n = bytes.len();
    if n >= 2 {
        let last = bytes[n - 1] as char;
        let prev = bytes[n - 2] as char;
        let vowel = |c: char| "aeiou".contains(c);
        if last == prev && !"lsfz".contains(last) && !vowel(last) {
            return stem[..n - 1].to_string();
        }
        if "vzcgu".contains(last) && !(last == 'g' && prev == 'n') {
            return with_e;
        }
        if (last == 's' && vowel(prev)) || stem.ends_with("ur") || stem.ends_with("at") {
            return with_e;
        }
    }
    stem.to_string()
}

/// Lemma of `word` given its POS tag. Proper nouns keep their case; everything else is
/// lowercased and suffix-stripped (`-ed`, `-ing`, `-s`) with an irregular-form table.
pub fn lemmatize(word: &str, pos: &str) -> String {
    if pos == "NNP" || pos == "NNPS" {
        return word.to_string();
    }
    let lower = word.to_lowercase();
    if let Some((_, lemma)) = IRREGULAR.iter().find(|(w, _)| *w == lower) {
        return lemma.to_string();
    }
    if lower.contains('-') || lower.chars().any(|c| !c.is_alphabetic()) {
        return lower;
    }
    let n = lower.len();
    match pos {
        "NNS" | "VBZ" => {
            if n > 4 && lower.ends_with("ies") {
                format!("{}y", &lower[..n - 3])
            } else if lower.ends_with("sses")
                || lower.ends_with("ches")
                || lower.ends_with("shes")
                || lower.ends_with("xes")
            {
                lower[..n - 2].to_string()
            } else if n > 3
                && lower.ends_with('s')
                && !lower.ends_with("ss")
                && !lower.ends_with("us")
                && !lower.ends_with("is")
            {
                lower[..n - 1].to_string()
            } else {
                lower
            }
        }
        "VBD" | "VBN" | "JJ" if n > 4 && lower.ends_with("ed") => {
            if lower.ends_with("ied") {
                format!("{}y", &lower[..n - 3])
            } else {
                restore_e(&lower[..n - 2])
            }
        }
        "VBG" if n > 5 && lower.ends_with("ing") => restore_e(&lower[..n - 3]),
        _ => lower,
    }
}

/// Lemmatize a free-text phrase (gazetteer entries, database fields): each word is
/// lemmatized as a plural noun or past-tense verb when its suffix suggests one.
pub fn lemmatize_phrase(phrase: &str) -> Vec<String> {
    phrase
        .split_whitespace()
        .map(|w| {
            let lower = w.to_lowercase();
            let pos = if lower.ends_with("ed") {
                "VBD"
            } else if lower.ends_with("ing") {
                "VBG"
            } else if lower.ends_with('s') {
                "NNS"
            } else {
                "NN"
            };
            lemmatize(&lower, pos)
        })
        .collect()
}

pub(crate) fn closed_class_tag(lower: &str) -> Option<&'static str> {
    Some(match lower {
        "the" | "a" | "an" | "this" | "these" | "those" | "all" | "some" | "each" | "every"
        | "no" | "another" | "both" => "DT",
        "that" => "IN",
        "on" | "in" | "of" | "from" | "at" | "near" | "off" | "by" | "with" | "for" | "into"
        | "upon" | "during" | "after" | "before" | "about" | "around" | "while" | "as"
        | "than" | "since" | "within" | "via" | "onto" | "over" | "under" | "through"
        | "against" | "toward" | "towards" | "aboard" | "alongside" | "until" | "behind"
        | "across" | "along" | "outside" | "inside" => "IN",
        "to" => "TO",
        "and" | "or" | "but" | "nor" => "CC",
        "he" | "she" | "it" | "they" | "we" | "i" | "you" | "him" | "them" | "us" => "PRP",
        "his" | "its" | "their" | "our" | "my" | "your" | "her" => "PRP$",
        "who" | "whom" | "what" => "WP",
        "which" => "WDT",
        "when" | "where" | "how" | "why" => "WRB",
        "will" | "would" | "can" | "could" | "may" | "might" | "shall" | "should" | "must" => {
            "MD"
        }
        "is" | "has" | "does" => "VBZ",
        "are" | "have" | "do" | "am" => "VBP",
        "was" | "were" | "had" | "did" => "VBD",
        "been" | "done" => "VBN",
        "being" | "having" => "VBG",
        "be" => "VB",
        "not" | "also" | "previously" | "reportedly" | "safely" | "later" | "then" | "again"
        | "still" | "already" | "away" | "there" | "here" | "now" | "never" => "RB",
        "safe" | "armed" | "similar" | "unidentified" | "unknown" | "local" | "small"
        | "wooden" | "suspicious" | "several" | "same" | "other" | "large" | "many" => "JJ",
        _ => return None,
    })
}
