//! Incident documents: the annotated JSONL format, raw-text ingestion, the built-in
//! rule annotator and deterministic train/dev/test splits.

mod annotate;
pub mod lexicon;
mod split;

use std::collections::BTreeSet;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{read_to_string, write_jsonl};

pub use annotate::{annotate, tokenize};
pub use lexicon::GazetteerSet;
pub use split::{split_corpus, CorpusSplit, SplitPart};

fn default_ner() -> String {
    "O".to_string()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub surface: String,
    pub lemma: String,
    pub pos: String,
    #[serde(default = "default_ner")]
    pub ner: String,
    pub char_start: usize,
    pub char_end: usize,
}

impl Token {
    pub fn is_punct(&self) -> bool {
        lexicon::is_punct(&self.surface)
    }
}

/// `(sentence_index, token_start, token_end)`, end exclusive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CorefSpan(pub usize, pub usize, pub usize);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Document {
    pub doc_id: String,
    #[serde(default)]
    pub source: String,
    pub text: String,
    #[serde(default)]
    pub sentences: Vec<Vec<Token>>,
    #[serde(default)]
    pub coref_chains: Vec<Vec<CorefSpan>>,
    /// Carried through untouched; nothing downstream reads it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dep_parse: Option<serde_json::Value>,
}

impl Document {
    pub fn raw(doc_id: impl Into<String>, source: impl Into<String>, text: impl Into<String>) -> Self {
        Document {
            doc_id: doc_id.into(),
            source: source.into(),
            text: text.into(),
            sentences: Vec::new(),
            coref_chains: Vec::new(),
            dep_parse: None,
        }
    }

    pub fn is_annotated(&self) -> bool {
        !self.sentences.is_empty() || self.text.trim().is_empty()
    }

    pub fn token_count(&self) -> usize {
        self.sentences.iter().map(Vec::len).sum()
    }

    /// Global (document-order) index of the first token of each sentence.
    pub fn sentence_offsets(&self) -> Vec<usize> {
        let mut offsets = Vec::with_capacity(self.sentences.len());
        let mut acc = 0;
        for s in &self.sentences {
            offsets.push(acc);
            acc += s.len();
        }
        offsets
    }

    /// All tokens in document order.
    pub fn tokens(&self) -> impl Iterator<Item = &Token> {
        self.sentences.iter().flatten()
    }

    /// Check the structural invariants: token offsets inside the text and re-slicing to
    /// the surface, ordered non-overlapping tokens, non-empty lemma and POS, valid coref
    /// spans and chains of at least two spans.
    pub fn validate(&self) -> Result<()> {
        let bad = |message: String| Error::InvalidSpan {
            doc_id: self.doc_id.clone(),
            message,
        };
        for (si, sentence) in self.sentences.iter().enumerate() {
            let mut prev_end = 0usize;
            for (ti, t) in sentence.iter().enumerate() {
                if t.char_start >= t.char_end {
                    return Err(bad(format!("token {si}:{ti} has empty or reversed offsets")));
                }
                if ti > 0 && t.char_start < prev_end {
                    return Err(bad(format!("token {si}:{ti} overlaps its predecessor")));
                }
                prev_end = t.char_end;
                match self.text.get(t.char_start..t.char_end) {
                    Some(slice) if slice == t.surface => {}
                    Some(slice) => {
                        return Err(bad(format!(
                            "token {si}:{ti} surface {:?} does not match text {:?}",
                            t.surface, slice
                        )))
                    }
                    None => {
                        return Err(bad(format!(
                            "token {si}:{ti} offsets {}..{} outside text",
                            t.char_start, t.char_end
                        )))
                    }
                }
                if t.lemma.is_empty() || t.pos.is_empty() {
                    return Err(bad(format!("token {si}:{ti} has empty lemma or pos")));
                }
            }
        }
        for (ci, chain) in self.coref_chains.iter().enumerate() {
            if chain.len() < 2 {
                return Err(bad(format!("coref chain {ci} has fewer than two spans")));
            }
            for &CorefSpan(s, a, b) in chain {
                let len = self.sentences.get(s).map(Vec::len);
                match len {
                    Some(len) if a < b && b <= len => {}
                    _ => return Err(bad(format!("coref chain {ci} span ({s},{a},{b}) is invalid"))),
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CorpusFormat {
    AnnotatedJsonl,
    RawText,
}

impl FromStr for CorpusFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "annotated-jsonl" => Ok(CorpusFormat::AnnotatedJsonl),
            "raw-text" => Ok(CorpusFormat::RawText),
            other => Err(Error::Config(format!("unknown corpus format {other:?}"))),
        }
    }
}

/// Load a corpus file.
///
/// `annotated-jsonl` holds one document per line. `raw-text` holds one incident per
/// paragraph (blank-line separated); documents are named `<file-stem>-<n>` and left
/// unannotated for [`annotate`].
pub fn load_corpus(path: &Path, format: CorpusFormat) -> Result<Vec<Document>> {
    let docs = match format {
        CorpusFormat::AnnotatedJsonl => {
            let docs: Vec<Document> = crate::io::read_jsonl(path)?;
            // Report the physical line number of an invalid record.
            let body = read_to_string(path)?;
            let lines: Vec<usize> = body
                .lines()
                .enumerate()
                .filter(|(_, l)| !l.trim().is_empty() && !crate::io::is_meta_line(l))
                .map(|(i, _)| i + 1)
                .collect();
            for (doc, line) in docs.iter().zip(lines) {
                doc.validate().map_err(|e| Error::Malformed {
                    path: path.to_path_buf(),
                    line,
                    message: e.to_string(),
                })?;
            }
            docs
        }
        CorpusFormat::RawText => {
            let body = read_to_string(path)?;
            let stem = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "doc".to_string());
            split_paragraphs(&body)
                .into_iter()
                .enumerate()
                .map(|(i, p)| Document::raw(format!("{stem}-{:04}", i + 1), stem.clone(), p))
                .collect()
        }
    };
    check_unique_ids(&docs)?;
    Ok(docs)
}

fn split_paragraphs(body: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut current: Vec<&str> = Vec::new();
    for line in body.lines() {
        if line.trim().is_empty() {
            if !current.is_empty() {
                out.push(current.join(" "));
                current.clear();
            }
        } else {
            current.push(line.trim());
        }
    }
    if !current.is_empty() {
        out.push(current.join(" "));
    }
    out
}

pub fn check_unique_ids(docs: &[Document]) -> Result<()> {
    let mut seen = BTreeSet::new();
    for d in docs {
        if !seen.insert(d.doc_id.as_str()) {
            return Err(Error::DuplicateDocId(d.doc_id.clone()));
        }
    }
    Ok(())
}

pub fn write_corpus(path: &Path, docs: &[Document]) -> Result<()> {
    write_jsonl(path, docs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn tok(text: &str, start: usize, end: usize, lemma: &str, pos: &str, ner: &str) -> Token {
        Token {
            surface: text[start..end].to_string(),
            lemma: lemma.into(),
            pos: pos.into(),
            ner: ner.into(),
            char_start: start,
            char_end: end,
        }
    }

    fn two_sentence_doc() -> Document {
        let text = "Pirates boarded. Crew safe.";
        Document {
            doc_id: "d1".into(),
            source: "test".into(),
            text: text.into(),
            sentences: vec![
                vec![
                    tok(text, 0, 7, "pirate", "NNS", "ACTOR"),
                    tok(text, 8, 15, "board", "VBD", "INCIDENT"),
                    tok(text, 15, 16, ".", ".", "O"),
                ],
                vec![
                    tok(text, 17, 21, "crew", "NN", "ACTOR"),
                    tok(text, 22, 26, "safe", "JJ", "O"),
                    tok(text, 26, 27, ".", ".", "O"),
                ],
            ],
            coref_chains: vec![],
            dep_parse: Some(serde_json::json!({"opaque": true})),
        }
    }

    #[test]
    fn loads_one_record() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        let doc = two_sentence_doc();
        writeln!(f, "{}", serde_json::to_string(&doc).unwrap()).unwrap();
        let docs = load_corpus(f.path(), CorpusFormat::AnnotatedJsonl).unwrap();
        assert_eq!(docs.len(), 1);
        assert_eq!(docs[0].sentences.len(), 2);
        assert_eq!(docs[0], doc);
    }

    #[test]
    fn rejects_duplicate_ids() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        let mut doc = two_sentence_doc();
        doc.doc_id = "X".into();
        writeln!(f, "{}", serde_json::to_string(&doc).unwrap()).unwrap();
        writeln!(f, "{}", serde_json::to_string(&doc).unwrap()).unwrap();
        let err = load_corpus(f.path(), CorpusFormat::AnnotatedJsonl).unwrap_err();
        assert!(matches!(err, Error::DuplicateDocId(id) if id == "X"));
    }

    #[test]
    fn malformed_record_reports_line() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "{}", serde_json::to_string(&two_sentence_doc()).unwrap()).unwrap();
        writeln!(f).unwrap();
        writeln!(f, "{{\"doc_id\": 3}}").unwrap();
        match load_corpus(f.path(), CorpusFormat::AnnotatedJsonl).unwrap_err() {
            Error::Malformed { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn invalid_span_is_rejected() {
        let mut doc = two_sentence_doc();
        doc.sentences[0][0].char_end = 6;
        assert!(matches!(doc.validate(), Err(Error::InvalidSpan { .. })));

        let mut doc = two_sentence_doc();
        doc.coref_chains = vec![vec![CorefSpan(0, 0, 1), CorefSpan(1, 0, 9)]];
        assert!(doc.validate().is_err());

        let mut doc = two_sentence_doc();
        doc.coref_chains = vec![vec![CorefSpan(0, 0, 1)]];
        assert!(doc.validate().is_err());
    }

    #[test]
    fn raw_text_paragraphs_become_unannotated_documents() {
        let mut f = tempfile::Builder::new().suffix(".txt").tempfile().unwrap();
        write!(f, "On 29 October, robbers boarded a ferry.\n\nSecond incident\ncontinues here.\n").unwrap();
        let docs = load_corpus(f.path(), CorpusFormat::RawText).unwrap();
        assert_eq!(docs.len(), 2);
        assert!(docs.iter().all(|d| d.sentences.is_empty()));
        assert_eq!(docs[1].text, "Second incident continues here.");
        assert!(!docs[0].is_annotated());
    }
}
