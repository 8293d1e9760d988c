use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::Document;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusSplit {
    pub train_ids: BTreeSet<String>,
    pub dev_ids: BTreeSet<String>,
    pub test_ids: BTreeSet<String>,
}

impl CorpusSplit {
    pub fn part_of(&self, doc_id: &str) -> Option<SplitPart> {
        if self.train_ids.contains(doc_id) {
            Some(SplitPart::Train)
        } else if self.dev_ids.contains(doc_id) {
            Some(SplitPart::Dev)
        } else if self.test_ids.contains(doc_id) {
            Some(SplitPart::Test)
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitPart {
    Train,
    Dev,
    Test,
}

/// `floor(fraction * n)`, tolerant of fractions like `75/1940` that land a hair below an
/// integer after the multiplication.
fn floor_count(fraction: f64, n: usize) -> usize {
    (fraction * n as f64 + 1e-9).floor() as usize
}

/// Shuffle document ids under `seed` and carve test, then dev from the remainder, then
/// train. Sizes: `test = max(1, floor(test_fraction * N))`,
/// `dev = max(1, floor(dev_fraction * (N - test)))`.
pub fn split_corpus(docs: &[Document], test_fraction: f64, dev_fraction: f64, seed: u64) -> Result<CorpusSplit> {
    let valid = |f: f64| f > 0.0 && f < 1.0;
    if !valid(test_fraction) || !valid(dev_fraction) || test_fraction + dev_fraction >= 1.0 {
        return Err(Error::InvalidFractions {
            test: test_fraction,
            dev: dev_fraction,
        });
    }
    let n = docs.len();
    if n < 3 {
        return Err(Error::CorpusTooSmall(n));
    }
    let mut ids: Vec<&str> = docs.iter().map(|d| d.doc_id.as_str()).collect();
    ids.sort_unstable();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    ids.shuffle(&mut rng);

    let n_test = floor_count(test_fraction, n).clamp(1, n - 2);
    let rest = n - n_test;
    let n_dev = floor_count(dev_fraction, rest).clamp(1, rest - 1);

    let collect = |s: &[&str]| s.iter().map(|id| id.to_string()).collect::<BTreeSet<_>>();
    Ok(CorpusSplit {
        test_ids: collect(&ids[..n_test]),
        dev_ids: collect(&ids[n_test..n_test + n_dev]),
        train_ids: collect(&ids[n_test + n_dev..]),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn docs(n: usize) -> Vec<Document> {
        (0..n).map(|i| Document::raw(format!("doc{i:05}"), "t", "")).collect()
    }

    #[test]
    fn full_corpus_split() {
        let split = split_corpus(&docs(1940), 75.0 / 1940.0, 0.1, 7).unwrap();
        assert_eq!(split.test_ids.len(), 75);
        assert!(split.dev_ids.len() == 186 || split.dev_ids.len() == 187);
        assert_eq!(split.train_ids.len(), 1940 - 75 - split.dev_ids.len());
    }

    #[test]
    fn small_split_sizes() {
        let split = split_corpus(&docs(10), 0.2, 0.1, 1).unwrap();
        assert_eq!(
            (split.test_ids.len(), split.dev_ids.len(), split.train_ids.len()),
            (2, 1, 7)
        );
    }

    #[test]
    fn same_seed_same_split() {
        let d = docs(50);
        assert_eq!(split_corpus(&d, 0.2, 0.1, 9).unwrap(), split_corpus(&d, 0.2, 0.1, 9).unwrap());
        assert_ne!(split_corpus(&d, 0.2, 0.1, 9).unwrap(), split_corpus(&d, 0.2, 0.1, 10).unwrap());
    }

    #[test]
    fn errors() {
        assert!(matches!(split_corpus(&docs(2), 0.2, 0.1, 0), Err(Error::CorpusTooSmall(2))));
        assert!(split_corpus(&docs(10), 0.0, 0.1, 0).is_err());
        assert!(split_corpus(&docs(10), 0.6, 0.5, 0).is_err());
    }

    proptest! {
        #[test]
        fn disjoint_and_covering(n in 3usize..200, tf in 0.01f64..0.5, df in 0.01f64..0.45, seed in any::<u64>()) {
            let d = docs(n);
            let s = split_corpus(&d, tf, df, seed).unwrap();
            prop_assert!(s.train_ids.is_disjoint(&s.dev_ids));
            prop_assert!(s.train_ids.is_disjoint(&s.test_ids));
            prop_assert!(s.dev_ids.is_disjoint(&s.test_ids));
            prop_assert_eq!(s.train_ids.len() + s.dev_ids.len() + s.test_ids.len(), n);
            prop_assert!(!s.train_ids.is_empty() && !s.dev_ids.is_empty() && !s.test_ids.is_empty());
            prop_assert_eq!(&s, &split_corpus(&d, tf, df, seed).unwrap());
        }
    }
}
