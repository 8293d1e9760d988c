//! Built-in rule annotator: tokenization, sentence splitting, a coarse POS tagger,
//! suffix-stripping lemmas and pattern/gazetteer NER.

use super::lexicon::{self, GazetteerSet};
use super::{Document, Token};

const CONNECTORS: &[char] = &['-', '\'', '’', '.', ':', '/'];

/// Split `text` into `(char_start, char_end)` byte spans. Runs of alphanumerics joined by
/// internal `-`, `'`, `.`, `:` or `/` form one token (so `05:28N`, `22:15.0N` and
/// `Panama-flagged` stay whole); a trailing possessive `'s` is split off; every other
/// non-space character is its own token, with runs of one repeated character grouped.
pub fn tokenize(text: &str) -> Vec<(usize, usize)> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let end_of = |i: usize| -> usize {
        chars
            .get(i + 1)
            .map(|(b, _)| *b)
            .unwrap_or(text.len())
    };
    let mut spans = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let (start, c) = chars[i];
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        if c.is_alphanumeric() {
            let mut j = i;
            loop {
                if j + 1 < chars.len() && chars[j + 1].1.is_alphanumeric() {
                    j += 1;
                } else if j + 2 < chars.len()
                    && CONNECTORS.contains(&chars[j + 1].1)
                    && chars[j + 2].1.is_alphanumeric()
                {
                    j += 2;
                } else {
                    break;
                }
            }
            let end = end_of(j);
            let word = &text[start..end];
            let possessive = ["'s", "’s"]
                .iter()
                .find(|p| word.len() > p.len() && word.ends_with(*p));
            match possessive {
                Some(p) => {
                    let split = end - p.len();
                    spans.push((start, split));
                    spans.push((split, end));
                }
                None => spans.push((start, end)),
            }
            i = j + 1;
        } else {
            let mut j = i;
            while j + 1 < chars.len() && chars[j + 1].1 == c {
                j += 1;
            }
            spans.push((start, end_of(j)));
            i = j + 1;
        }
    }
    spans
}

fn punct_tag(s: &str) -> &'static str {
    match s {
        "," => ",",
        "." | "!" | "?" => ".",
        "(" | "[" => "-LRB-",
        ")" | "]" => "-RRB-",
        "\"" | "“" => "``",
        "”" => "''",
        ":" | ";" | "-" | "--" | "–" | "—" | "..." => ":",
        _ => "SYM",
    }
}

fn is_nounish(tag: &str) -> bool {
    tag.starts_with("NN") || tag == "PRP" || tag == "CD"
}

fn pos_tags(words: &[&str], gaz: &GazetteerSet) -> Vec<String> {
    let known_nouns: std::collections::BTreeSet<&str> = gaz
        .actors
        .iter()
        .flat_map(|a| a.lemmas.iter().map(String::as_str))
        .collect();
    // First pass: context-free guesses.
    let mut tags: Vec<&'static str> = words
        .iter()
        .enumerate()
        .map(|(i, w)| {
            let lower = w.to_lowercase();
            if lexicon::is_punct(w) {
                return punct_tag(w);
            }
            if w.chars().next().is_some_and(|c| c.is_ascii_digit())
                || lexicon::is_number_word(&lower)
            {
                return "CD";
            }
            if let Some(tag) = lexicon::closed_class_tag(&lower) {
                let capitalized_mid = i > 0 && w.chars().next().is_some_and(char::is_uppercase);
                if !(capitalized_mid && tag != "DT" && tag != "IN") {
                    return tag;
                }
            }
            if lexicon::month_number(w).is_some() {
                return "NNP";
            }
            let first_upper = w.chars().next().is_some_and(char::is_uppercase);
            let sentence_initial = i == 0;
            if first_upper && !(sentence_initial && known_nouns.contains(lower.as_str())) {
                if w.contains('-') {
                    return "JJ";
                }
                if !sentence_initial || w.chars().all(|c| !c.is_lowercase()) {
                    return "NNP";
                }
            }
            if lower.contains('-') {
                return "JJ";
            }
            if lower.ends_with("ly") && lower.len() > 4 {
                return "RB";
            }
            if lower.ends_with("ed") && lower.len() > 3 {
                return "VBD";
            }
            if lower.ends_with("ing") && lower.len() > 4 {
                return "VBG";
            }
            let singular = lexicon::lemmatize(&lower, "NNS");
            if lower.ends_with('s')
                && singular != lower
                && !lower.ends_with("ss")
                && !lower.ends_with("us")
                || lower == "men"
                || lower.ends_with("men") && known_nouns.contains(singular.as_str())
                || lower == "authorities"
                || lower == "people"
            {
                return "NNS";
            }
            "NN"
        })
        .collect();

    // Second pass: contextual fixes.
    for i in 0..tags.len() {
        let prev = |k: usize| -> Option<(&str, &str)> {
            (i >= k).then(|| (words[i - k], tags[i - k]))
        };
        let next = tags.get(i + 1).copied();
        let lower = words[i].to_lowercase();
        match tags[i] {
            "VBD" => {
                // Participle after a form of be/have, skipping one adverb.
                let aux = |w: &str| {
                    matches!(
                        w.to_lowercase().as_str(),
                        "was" | "were" | "is" | "are" | "been" | "be" | "has" | "have" | "had"
                            | "being" | "got"
                    )
                };
                let after_aux = prev(1).is_some_and(|(w, _)| aux(w))
                    || (prev(1).is_some_and(|(_, t)| t == "RB") && prev(2).is_some_and(|(w, _)| aux(w)));
                let prev_nounish = prev(1).is_some_and(|(_, t)| is_nounish(t) || t == "WP");
                let next_content = next.is_some_and(|t| t.starts_with("NN") || t == "JJ" || t == "VBD");
                if after_aux {
                    tags[i] = "VBN";
                } else if !prev_nounish && next_content && prev(1).is_none_or(|(_, t)| t != "CC") {
                    tags[i] = "JJ";
                }
            }
            "VBG" => {
                if prev(1).is_some_and(|(_, t)| t == "DT" || t == "JJ" || t == "PRP$") {
                    tags[i] = "NN";
                }
            }
            "NN" | "NNS" => {
                if prev(1).is_some_and(|(_, t)| t == "TO" || t == "MD") {
                    tags[i] = "VB";
                } else if tags[i] == "NNS"
                    && prev(1).is_some_and(|(_, t)| t.starts_with("NN") || t == "PRP")
                    && next.is_some_and(|t| t == "DT")
                {
                    tags[i] = "VBZ";
                }
            }
            _ => {}
        }
        if lower == "that" && next.is_some_and(|t| t.starts_with("VB")) {
            tags[i] = "WDT";
        }
    }
    tags.into_iter().map(str::to_string).collect()
}

/// Longest-first matching of `entries` against `keys` inside one sentence, only on
/// untagged positions. Returns `(start, end)` spans.
fn match_sequences(keys: &[String], entries: &[Vec<String>], free: &[bool]) -> Vec<(usize, usize)> {
    let mut by_len: Vec<&Vec<String>> = entries.iter().filter(|e| !e.is_empty()).collect();
    by_len.sort_by_key(|e| std::cmp::Reverse(e.len()));
    let mut taken = free.to_vec();
    let mut out = Vec::new();
    for entry in by_len {
        let n = entry.len();
        if n > keys.len() {
            continue;
        }
        for start in 0..=keys.len() - n {
            if (start..start + n).all(|k| taken[k]) && keys[start..start + n] == entry[..] {
                for flag in &mut taken[start..start + n] {
                    *flag = false;
                }
                out.push((start, start + n));
            }
        }
    }
    out.sort();
    out
}

fn date_spans(words: &[&str], free: &[bool]) -> Vec<(usize, usize)> {
    let day = |i: usize| words.get(i).and_then(|w| lexicon::day_number(w)).is_some();
    let month = |i: usize| words.get(i).and_then(|w| lexicon::month_number(w)).is_some();
    let year = |i: usize| words.get(i).and_then(|w| lexicon::year_number(w)).is_some();
    let comma = |i: usize| words.get(i) == Some(&",");
    let mut out = Vec::new();
    let mut i = 0;
    while i < words.len() {
        let len = if !free[i] {
            0
        } else if lexicon::iso_date(words[i]).is_some() {
            1
        } else if day(i) && month(i + 1) && year(i + 2) {
            3
        } else if month(i) && day(i + 1) && comma(i + 2) && year(i + 3) {
            4
        } else if (day(i) && month(i + 1)) || (month(i) && (year(i + 1) || day(i + 1))) {
            2
        } else if year(i) {
            1
        } else {
            0
        };
        if len > 0 && (i..i + len).all(|k| free.get(k).copied().unwrap_or(false)) {
            out.push((i, i + len));
            i += len;
        } else {
            i += 1;
        }
    }
    out
}

/// Annotate a raw document in place of the external toolchain. Documents that already
/// carry sentences are returned unchanged. Coreference chains are not produced.
pub fn annotate(doc: &Document, gazetteers: &GazetteerSet) -> Document {
    if !doc.sentences.is_empty() {
        return doc.clone();
    }
    let spans = tokenize(&doc.text);
    let mut sentences: Vec<Vec<(usize, usize)>> = Vec::new();
    let mut current = Vec::new();
    for span in spans {
        let s = &doc.text[span.0..span.1];
        current.push(span);
        if matches!(s, "." | "!" | "?" | "..." ) {
            sentences.push(std::mem::take(&mut current));
        }
    }
    if !current.is_empty() {
        sentences.push(current);
    }

    let sentences = sentences
        .into_iter()
        .map(|spans| annotate_sentence(&doc.text, &spans, gazetteers))
        .collect();
    Document {
        sentences,
        ..doc.clone()
    }
}

fn annotate_sentence(text: &str, spans: &[(usize, usize)], gaz: &GazetteerSet) -> Vec<Token> {
    let words: Vec<&str> = spans.iter().map(|&(a, b)| &text[a..b]).collect();
    let tags = pos_tags(&words, gaz);
    let lemmas: Vec<String> = words
        .iter()
        .zip(&tags)
        .map(|(w, t)| lexicon::lemmatize(w, t))
        .collect();
    let lower_words: Vec<String> = words.iter().map(|w| w.to_lowercase()).collect();

    let mut ner = vec!["O"; words.len()];
    let free = |ner: &[&str]| ner.iter().map(|t| *t == "O").collect::<Vec<bool>>();

    for (a, b) in date_spans(&words, &free(&ner)) {
        ner[a..b].fill("DATE");
    }
    for (a, b) in lexicon::coordinate_spans(&words) {
        if ner[a..b].iter().all(|t| *t == "O") {
            ner[a..b].fill("LOCATION");
        }
    }
    for (a, b) in match_sequences(&lower_words, &gaz.places, &free(&ner)) {
        ner[a..b].fill("LOCATION");
    }
    for (i, t) in tags.iter().enumerate() {
        if ner[i] != "O" {
            continue;
        }
        if t == "CD" {
            ner[i] = "NUMBER";
        } else if t == "JJ" && words[i].contains('-') && words[i].starts_with(char::is_uppercase) {
            // Capitalized hyphenated modifiers such as "Panama-flagged".
            ner[i] = "MISC";
        }
    }

    spans
        .iter()
        .enumerate()
        .map(|(i, &(a, b))| Token {
            surface: words[i].to_string(),
            lemma: lemmas[i].clone(),
            pos: tags[i].clone(),
            ner: ner[i].to_string(),
            char_start: a,
            char_end: b,
        })
        .collect()
}
