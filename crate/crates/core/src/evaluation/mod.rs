//! Evaluation against gold labels: per-relation metrics, curves, calibration and the
//! supervision ablation table.

pub mod metrics;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::candidates::{RelationCandidate, RelationType};
use crate::mentions::Mention;
use crate::supervision::SupervisionMode;

pub use metrics::{f1_of, pr_curve, prf1, roc_auc, roc_curve, select_threshold, Prf1, ScoredExample, ThresholdChoice};

pub const N_BINS: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationBin {
    pub lo: f64,
    pub hi: f64,
    /// Fraction of gold-True development examples in the bin; `None` when it is empty.
    pub dev_accuracy: Option<f64>,
    pub dev_count: usize,
    pub all_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationReport {
    pub bins: Vec<CalibrationBin>,
}

pub fn bin_index(p: f64) -> usize {
    ((p * N_BINS as f64).floor().max(0.0) as usize).min(N_BINS - 1)
}

pub fn calibration(dev: &[ScoredExample], all_probs: &[f64]) -> CalibrationReport {
    let mut dev_true = [0usize; N_BINS];
    let mut dev_count = [0usize; N_BINS];
    let mut all_count = [0usize; N_BINS];
    for e in dev {
        let b = bin_index(e.probability);
        dev_count[b] += 1;
        dev_true[b] += usize::from(e.gold);
    }
    for &p in all_probs {
        all_count[bin_index(p)] += 1;
    }
    CalibrationReport {
        bins: (0..N_BINS)
            .map(|b| CalibrationBin {
                lo: b as f64 / N_BINS as f64,
                hi: (b + 1) as f64 / N_BINS as f64,
                dev_accuracy: (dev_count[b] > 0).then(|| dev_true[b] as f64 / dev_count[b] as f64),
                dev_count: dev_count[b],
                all_count: all_count[b],
            })
            .collect(),
    }
}

impl CalibrationReport {
    /// Share of whole-set predictions in the lowest and highest bins.
    pub fn extreme_mass(&self) -> f64 {
        let total: usize = self.bins.iter().map(|b| b.all_count).sum();
        if total == 0 {
            return 0.0;
        }
        (self.bins[0].all_count + self.bins[N_BINS - 1].all_count) as f64 / total as f64
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("bin_lo,bin_hi,dev_accuracy,dev_count,all_count\n");
        for b in &self.bins {
            let acc = b.dev_accuracy.map(|a| format!("{a:.4}")).unwrap_or_default();
            let _ = writeln!(out, "{:.1},{:.1},{},{},{}", b.lo, b.hi, acc, b.dev_count, b.all_count);
        }
        out
    }
}

/// A gold judgement, keyed either by candidate id or by the character spans of the two
/// arguments within a document.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GoldRecord {
    Candidate {
        candidate_id: String,
        label: bool,
    },
    Span {
        doc_id: String,
        rtype: RelationType,
        left: (usize, usize),
        right: (usize, usize),
        label: bool,
    },
}

type Span = (usize, usize);
type SpanGold = Vec<(Span, Span, bool)>;

fn span_match(m: &Mention, (start, end): Span) -> bool {
    (m.char_start <= start && end <= m.char_end) || (start <= m.char_start && m.char_end <= end)
}

/// Gold label of each candidate that has one. Span records match candidates whose
/// argument spans contain, or are contained in, the gold spans; in documents carrying
/// span records, candidates matching none are False.
pub fn resolve_gold(gold: &[GoldRecord], candidates: &[RelationCandidate]) -> BTreeMap<String, bool> {
    let mut out = BTreeMap::new();
    let mut span_docs: BTreeMap<(&str, RelationType), SpanGold> = BTreeMap::new();
    let mut documents: BTreeSet<&str> = BTreeSet::new();
    for g in gold {
        match g {
            GoldRecord::Candidate { candidate_id, label } => {
                out.insert(candidate_id.clone(), *label);
            }
            GoldRecord::Span { doc_id, rtype, left, right, label } => {
                documents.insert(doc_id);
                span_docs.entry((doc_id.as_str(), *rtype)).or_default().push((*left, *right, *label));
            }
        }
    }
    for c in candidates {
        if out.contains_key(&c.candidate_id) || !documents.contains(c.doc_id.as_str()) {
            continue;
        }
        let records = span_docs.get(&(c.doc_id.as_str(), c.rtype)).map(Vec::as_slice).unwrap_or(&[]);
        let matched: Vec<bool> = records
            .iter()
            .filter(|(l, r, _)| span_match(&c.left, *l) && span_match(&c.right, *r))
            .map(|(_, _, label)| *label)
            .collect();
        out.insert(c.candidate_id.clone(), matched.iter().any(|&x| x));
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelationReport {
    pub relation: RelationType,
    pub candidates: usize,
    pub threshold: f64,
    pub f1: f64,
    pub roc_auc: Option<f64>,
    pub recall: f64,
    pub precision: f64,
    pub warnings: Vec<String>,
}

/// Metrics for one relation type: the threshold comes from `validation`, the scores
/// from `test`.
pub fn evaluate_relation(relation: RelationType, test: &[ScoredExample], validation: &[ScoredExample]) -> RelationReport {
    let choice = select_threshold(validation);
    let p = prf1(test, choice.threshold);
    let mut warnings: Vec<String> = choice.warning.into_iter().collect();
    if p.precision_undefined {
        warnings.push("no predicted positives".into());
    }
    if p.recall_undefined {
        warnings.push("no gold positives".into());
    }
    RelationReport {
        relation,
        candidates: test.len(),
        threshold: choice.threshold,
        f1: p.f1,
        roc_auc: roc_auc(test),
        recall: p.recall,
        precision: p.precision,
        warnings,
    }
}

pub fn mean_f1(reports: &[RelationReport]) -> f64 {
    if reports.is_empty() {
        return 0.0;
    }
    reports.iter().map(|r| r.f1).sum::<f64>() / reports.len() as f64
}

pub fn metrics_csv(reports: &[RelationReport]) -> String {
    let mut out = String::from("relation,candidates,f1,roc_auc,recall,precision\n");
    for r in reports {
        let auc = r.roc_auc.map(|a| format!("{a:.4}")).unwrap_or_default();
        let _ = writeln!(out, "{},{},{:.4},{},{:.4},{:.4}", r.relation, r.candidates, r.f1, auc, r.recall, r.precision);
    }
    out
}

pub fn curves_csv(scored_by_type: &BTreeMap<RelationType, Vec<ScoredExample>>) -> (String, String) {
    let mut roc = String::from("relation,fpr,tpr\n");
    let mut pr = String::from("relation,recall,precision\n");
    for (rtype, scored) in scored_by_type {
        for (x, y) in roc_curve(scored) {
            let _ = writeln!(roc, "{rtype},{x:.6},{y:.6}");
        }
        for (x, y) in pr_curve(scored) {
            let _ = writeln!(pr, "{rtype},{x:.6},{y:.6}");
        }
    }
    (roc, pr)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub relation: RelationType,
    pub f1: BTreeMap<String, f64>,
}

pub fn ablation_csv(rows: &[AblationRow]) -> String {
    let modes: Vec<&str> = SupervisionMode::ALL.iter().map(|m| m.name()).collect();
    let mut out = format!("relation,{}\n", modes.join(","));
    for r in rows {
        let cells: Vec<String> = modes
            .iter()
            .map(|m| r.f1.get(*m).map(|f| format!("{f:.4}")).unwrap_or_default())
            .collect();
        let _ = writeln!(out, "{},{}", r.relation, cells.join(","));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mentions::EntityType;

    #[test]
    fn calibration_examples() {
        let dev: Vec<ScoredExample> = (0..5).map(|i| ScoredExample::new(format!("c{i}"), 0.9 + i as f64 * 0.02, true)).collect();
        let r = calibration(&dev, &[]);
        assert_eq!(r.bins[9].dev_accuracy, Some(1.0));
        assert_eq!(r.bins[9].dev_count, 5);
        assert!(r.bins[..9].iter().all(|b| b.dev_accuracy.is_none()));

        let probs: Vec<f64> = (0..10).map(|i| 0.05 + 0.1 * i as f64).collect();
        let dev: Vec<ScoredExample> = probs.iter().enumerate().map(|(i, &p)| ScoredExample::new(format!("c{i}"), p, i % 2 == 0)).collect();
        let r = calibration(&dev, &probs);
        assert!(r.bins.iter().all(|b| b.dev_count == 1 && b.all_count == 1));
        assert_eq!(bin_index(1.0), 9);
        assert_eq!(bin_index(0.0), 0);
        assert!(r.to_csv().starts_with("bin_lo,bin_hi,dev_accuracy,dev_count,all_count\n0.0,0.1,1.0000,1,1\n"));
    }

    fn m(id: &str, cs: usize, ce: usize) -> Mention {
        Mention {
            mention_id: id.into(),
            doc_id: "d".into(),
            sentence_index: 0,
            token_start: cs,
            token_end: ce,
            etype: EntityType::Actor,
            role: None,
            entity_id: String::new(),
            surface: String::new(),
            char_start: cs,
            char_end: ce,
        }
    }

    fn c(id: &str, l: Mention, r: Mention) -> RelationCandidate {
        RelationCandidate {
            candidate_id: id.into(),
            rtype: RelationType::VictimAggressor,
            doc_id: "d".into(),
            left: l,
            right: r,
            features: vec![],
        }
    }

    #[test]
    fn gold_resolution() {
        let cands = vec![
            c("a", m("d:m0", 0, 10), m("d:m1", 20, 30)),
            c("b", m("d:m0", 0, 10), m("d:m2", 40, 50)),
            c("x", m("e:m0", 0, 1), m("e:m1", 2, 3)),
        ];
        let mut cands = cands;
        cands[2].doc_id = "e".into();
        let gold: Vec<GoldRecord> = serde_json::from_str::<Vec<GoldRecord>>(
            r#"[{"doc_id":"d","rtype":"VictimAggressor","left":[4,10],"right":[20,30],"label":true},
                {"candidate_id":"x","label":false}]"#,
        )
        .unwrap();
        let g = resolve_gold(&gold, &cands);
        assert_eq!(g.get("a"), Some(&true));
        assert_eq!(g.get("b"), Some(&false));
        assert_eq!(g.get("x"), Some(&false));
    }

    #[test]
    fn report_csv_shape() {
        let test = vec![ScoredExample::new("a", 0.9, true), ScoredExample::new("b", 0.1, false)];
        let r = evaluate_relation(RelationType::VictimDate, &test, &test);
        assert_eq!(r.f1, 1.0);
        assert_eq!(metrics_csv(&[r]), "relation,candidates,f1,roc_auc,recall,precision\nVictimDate,2,1.0000,1.0000,1.0000,1.0000\n");
    }
}
