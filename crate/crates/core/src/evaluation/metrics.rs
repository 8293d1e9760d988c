//! Threshold selection, precision/recall/F1, ROC and precision-recall analysis.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredExample {
    pub candidate_id: String,
    pub probability: f64,
    pub gold: bool,
}

impl ScoredExample {
    pub fn new(candidate_id: impl Into<String>, probability: f64, gold: bool) -> Self {
        ScoredExample {
            candidate_id: candidate_id.into(),
            probability,
            gold,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdChoice {
    pub threshold: f64,
    pub accuracy: f64,
    pub warning: Option<String>,
}

pub fn accuracy_at(examples: &[ScoredExample], threshold: f64) -> f64 {
    if examples.is_empty() {
        return 0.0;
    }
    let correct = examples.iter().filter(|e| (e.probability >= threshold) == e.gold).count();
    correct as f64 / examples.len() as f64
}

fn sorted_distinct(mut xs: Vec<f64>) -> Vec<f64> {
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    xs
}

/// Candidate cuts: 0, 1 and the midpoints between adjacent distinct probabilities.
pub fn cut_points(validation: &[ScoredExample]) -> Vec<f64> {
    let distinct = sorted_distinct(validation.iter().map(|e| e.probability).collect());
    let mut cuts: Vec<f64> = distinct.windows(2).map(|w| w[0] + (w[1] - w[0]) / 2.0).collect();
    cuts.extend([0.0, 1.0]);
    sorted_distinct(cuts)
}

/// Accuracy-maximizing threshold over [`cut_points`], with predictions `p >= t`. Ties go
/// to the lowest threshold. A single-class set still gets the scanned threshold, with a
/// warning; an empty set gets 0.5.
pub fn select_threshold(validation: &[ScoredExample]) -> ThresholdChoice {
    if validation.is_empty() {
        return ThresholdChoice {
            threshold: 0.5,
            accuracy: 0.0,
            warning: Some("empty validation set; threshold defaults to 0.5".into()),
        };
    }
    let cuts = cut_points(validation);

    // Sweep from the lowest cut upwards, maintaining the number of correct predictions.
    let mut order: Vec<&ScoredExample> = validation.iter().collect();
    order.sort_by(|a, b| a.probability.total_cmp(&b.probability));
    let mut correct = validation.iter().filter(|e| e.gold).count();
    let mut below = 0;
    let (mut best_t, mut best_correct) = (cuts[0], usize::MIN);
    for &t in &cuts {
        while below < order.len() && order[below].probability < t {
            if order[below].gold {
                correct -= 1;
            } else {
                correct += 1;
            }
            below += 1;
        }
        if correct > best_correct {
            best_correct = correct;
            best_t = t;
        }
    }
    let positives = validation.iter().filter(|e| e.gold).count();
    let warning = (positives == 0 || positives == validation.len())
        .then(|| "validation set has a single class".to_string());
    if let Some(w) = &warning {
        log::warn!("{w}");
    }
    ThresholdChoice {
        threshold: best_t,
        accuracy: best_correct as f64 / validation.len() as f64,
        warning,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prf1 {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    /// No predicted positives; precision reported as 0.
    pub precision_undefined: bool,
    /// No gold positives; recall reported as 0.
    pub recall_undefined: bool,
}

pub fn prf1(scored: &[ScoredExample], threshold: f64) -> Prf1 {
    let (mut tp, mut fp, mut fn_) = (0, 0, 0);
    for e in scored {
        match (e.probability >= threshold, e.gold) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            (false, false) => {}
        }
    }
    let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
    let precision = ratio(tp, tp + fp);
    let recall = ratio(tp, tp + fn_);
    Prf1 {
        precision,
        recall,
        f1: f1_of(precision, recall),
        tp,
        fp,
        fn_,
        precision_undefined: tp + fp == 0,
        recall_undefined: tp + fn_ == 0,
    }
}

pub fn f1_of(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

/// Area under the ROC curve by the rank-sum statistic with average ranks for ties.
/// `None` when either class is missing.
pub fn roc_auc(scored: &[ScoredExample]) -> Option<f64> {
    let n_pos = scored.iter().filter(|e| e.gold).count();
    let n_neg = scored.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return None;
    }
    let mut order: Vec<&ScoredExample> = scored.iter().collect();
    order.sort_by(|a, b| a.probability.total_cmp(&b.probability));
    // Twice the positive rank sum, so tied average ranks stay integral.
    let mut twice_rank_sum: u64 = 0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j < order.len() && order[j].probability == order[i].probability {
            j += 1;
        }
        // Ranks i+1..=j share the average (i+1+j)/2.
        let pos_in_tie = order[i..j].iter().filter(|e| e.gold).count() as u64;
        twice_rank_sum += pos_in_tie * (i as u64 + 1 + j as u64);
        i = j;
    }
    let n_pos = n_pos as u64;
    let twice_u = twice_rank_sum - n_pos * (n_pos + 1);
    Some(twice_u as f64 / 2.0 / (n_pos as f64 * n_neg as f64))
}

fn descending_cuts(scored: &[ScoredExample]) -> Vec<f64> {
    let mut cuts = sorted_distinct(scored.iter().map(|e| e.probability).collect());
    cuts.reverse();
    cuts
}

/// `(fpr, tpr)` points from the strictest threshold to the loosest, starting at (0,0).
pub fn roc_curve(scored: &[ScoredExample]) -> Vec<(f64, f64)> {
    let pos = scored.iter().filter(|e| e.gold).count().max(1) as f64;
    let neg = scored.iter().filter(|e| !e.gold).count().max(1) as f64;
    let mut points = vec![(0.0, 0.0)];
    for t in descending_cuts(scored) {
        let p = prf1(scored, t);
        points.push((p.fp as f64 / neg, p.tp as f64 / pos));
    }
    points
}

/// `(recall, precision)` at every distinct threshold, strictest first.
pub fn pr_curve(scored: &[ScoredExample]) -> Vec<(f64, f64)> {
    descending_cuts(scored)
        .into_iter()
        .map(|t| {
            let p = prf1(scored, t);
            (p.recall, p.precision)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ex(p: &[f64], g: &[bool]) -> Vec<ScoredExample> {
        p.iter().zip(g).enumerate().map(|(i, (&p, &g))| ScoredExample::new(format!("c{i}"), p, g)).collect()
    }

    #[test]
    fn separable_threshold() {
        let c = select_threshold(&ex(&[0.9, 0.8, 0.2, 0.1], &[true, true, false, false]));
        assert_eq!(c.threshold, 0.5);
        assert_eq!(c.accuracy, 1.0);
        assert!(c.warning.is_none());
    }

    #[test]
    fn degenerate_thresholds() {
        let c = select_threshold(&ex(&[0.3, 0.6], &[true, true]));
        assert_eq!((c.threshold, c.accuracy), (0.0, 1.0));
        assert!(c.warning.is_some());
        let c = select_threshold(&[]);
        assert_eq!(c.threshold, 0.5);
        assert!(c.warning.is_some());
    }

    #[test]
    fn prf1_examples() {
        // precision 0.5, recall 1.0
        let p = prf1(&ex(&[0.9, 0.8], &[true, false]), 0.5);
        assert!((p.f1 - 2.0 / 3.0).abs() < 1e-12);
        assert!((f1_of(0.96, 0.96) - 0.96).abs() < 1e-12);
        let p = prf1(&ex(&[0.1, 0.2], &[true, false]), 0.5);
        assert!(p.precision_undefined && p.f1 == 0.0);
    }

    #[test]
    fn auc_examples() {
        assert_eq!(roc_auc(&ex(&[0.9, 0.8, 0.2, 0.1], &[true, true, false, false])), Some(1.0));
        assert_eq!(roc_auc(&ex(&[0.5; 4], &[true, false, true, false])), Some(0.5));
        assert_eq!(roc_auc(&ex(&[0.5, 0.4], &[true, true])), None);
    }

    #[test]
    fn curves_span_the_unit_square() {
        let s = ex(&[0.9, 0.7, 0.7, 0.3, 0.1], &[true, false, true, true, false]);
        let roc = roc_curve(&s);
        assert_eq!(roc.first(), Some(&(0.0, 0.0)));
        assert_eq!(roc.last(), Some(&(1.0, 1.0)));
        assert!(roc.windows(2).all(|w| w[0].0 <= w[1].0 && w[0].1 <= w[1].1));
        let pr = pr_curve(&s);
        assert_eq!(pr.last().unwrap().0, 1.0);
    }

    fn pair_oracle(s: &[ScoredExample]) -> f64 {
        let (mut num, mut den) = (0.0, 0.0);
        for a in s.iter().filter(|e| e.gold) {
            for b in s.iter().filter(|e| !e.gold) {
                den += 1.0;
                if a.probability > b.probability {
                    num += 1.0;
                } else if a.probability == b.probability {
                    num += 0.5;
                }
            }
        }
        num / den
    }

    fn grid_oracle(s: &[ScoredExample]) -> (f64, f64) {
        let mut cuts = vec![0.0, 1.0];
        for a in s {
            for b in s {
                if a.probability < b.probability && !s.iter().any(|c| a.probability < c.probability && c.probability < b.probability) {
                    cuts.push(a.probability + (b.probability - a.probability) / 2.0);
                }
            }
        }
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        let mut best = (f64::NAN, -1.0);
        for t in cuts {
            let acc = accuracy_at(s, t);
            if acc > best.1 {
                best = (t, acc);
            }
        }
        best
    }

    proptest! {
        #[test]
        fn auc_matches_pairs(raw in proptest::collection::vec((0u8..10, any::<bool>()), 2..50)) {
            let s: Vec<ScoredExample> = raw.iter().enumerate().map(|(i, &(p, g))| ScoredExample::new(format!("c{i}"), p as f64 / 10.0, g)).collect();
            if let Some(auc) = roc_auc(&s) {
                prop_assert_eq!(auc, pair_oracle(&s));
                // Invariant under a strictly monotone transform.
                let t: Vec<ScoredExample> = s.iter().map(|e| ScoredExample::new(e.candidate_id.clone(), e.probability.powi(3) * 0.5, e.gold)).collect();
                prop_assert_eq!(roc_auc(&t), Some(auc));
            }
        }

        #[test]
        fn threshold_matches_grid(raw in proptest::collection::vec((0u8..20, any::<bool>()), 1..20)) {
            let s: Vec<ScoredExample> = raw.iter().enumerate().map(|(i, &(p, g))| ScoredExample::new(format!("c{i}"), p as f64 / 20.0, g)).collect();
            let c = select_threshold(&s);
            let (t, acc) = grid_oracle(&s);
            prop_assert_eq!(c.threshold, t);
            prop_assert_eq!(c.accuracy, acc);
            if s.iter().any(|e| e.gold) {
                prop_assert_eq!(prf1(&s, 0.0).recall, 1.0);
            }
        }
    }
}
