use super::*;
use crate::candidates::generate_all;
use crate::corpus::{annotate, GazetteerSet};
use crate::mentions::{assign_roles, default_aliases, extract_mentions, link_entities};
use proptest::prelude::*;

const FIG3: &str = "On 2 November, armed pirates boarded the general cargo ship OYA near position 04:07N – 006:53E. The pirates kidnapped five crewmen and escaped.";

fn prepared(text: &str) -> (Document, Vec<Mention>) {
    let gaz = GazetteerSet::maritime();
    let doc = annotate(&Document::raw("d", "t", text), &gaz);
    let m = extract_mentions(&doc, &gaz).unwrap();
    let m = link_entities(&doc, &m, &default_aliases());
    let m = assign_roles(&doc, &m, &RoleRuleSet::default());
    (doc, m)
}

fn record(ship: &str, aggressor: &str, prefix: &str) -> DbRecord {
    DbRecord {
        date: "2019-11-02".into(),
        lat: 4.0 + 7.0 / 60.0,
        lon: 6.0 + 53.0 / 60.0,
        ship_type: ship.into(),
        aggressor: aggressor.into(),
        incident_type: "boarding".into(),
        text_prefix: prefix.into(),
    }
}

fn vote_for<'a>(votes: &'a [LabelVote], cands: &[RelationCandidate], rtype: RelationType, l: &str, r: &str) -> Vec<&'a LabelVote> {
    let c = cands
        .iter()
        .find(|c| c.rtype == rtype && c.left.surface == l && c.right.surface == r)
        .unwrap_or_else(|| panic!("no candidate {rtype} {l} {r}"));
    votes.iter().filter(|v| v.candidate_id == c.candidate_id).collect()
}

#[test]
fn resolve_examples() {
    let v = |ps: &[bool]| -> Vec<LabelVote> {
        ps.iter().enumerate().map(|(i, &p)| LabelVote::new("c", &format!("s{i}"), p)).collect()
    };
    assert_eq!(resolve_votes(&v(&[true, true, false])), Resolved::True);
    assert_eq!(resolve_votes(&v(&[true, false])), Resolved::Abstain);
    assert_eq!(resolve_votes(&v(&[])), Resolved::Abstain);
    assert_eq!(resolve_votes(&v(&[false])), Resolved::False);
}

#[test]
fn database_votes_on_narrative_example() {
    let (doc, mut mentions) = prepared(FIG3);
    // Treat the crew as a role-less actor so it can sit in the aggressor slot.
    for m in mentions.iter_mut().filter(|m| m.surface == "five crewmen") {
        m.role = None;
    }
    let cands = generate_all(&doc, &mentions);
    let dbs = vec![
        SecondaryDb::new(DbKind::Piracy, vec![record("general cargo ship", "", "")]),
        SecondaryDb::new(DbKind::Maritime, vec![record("", "pirates", &FIG3[..60])]),
    ];
    let entity = db::db_entity_votes(&doc, &mentions, &dbs[0], &default_aliases());
    let oya = mentions.iter().find(|m| m.surface == "the general cargo ship OYA").unwrap();
    assert!(entity.iter().any(|v| v.mention_id == oya.mention_id && v.slot == Slot::Victim && v.polarity == Polarity::True));

    let votes = db_supervise(&doc, &mentions, &cands, &dbs, &default_aliases());
    let va = vote_for(&votes, &cands, RelationType::VictimAggressor, "the general cargo ship OYA", "armed pirates");
    assert_eq!(va.len(), 1);
    assert_eq!(va[0].polarity, Polarity::True);
    let crew = vote_for(&votes, &cands, RelationType::VictimAggressor, "the general cargo ship OYA", "five crewmen");
    assert_eq!(crew[0].polarity, Polarity::False);
    let vd = vote_for(&votes, &cands, RelationType::VictimDate, "the general cargo ship OYA", "2 November");
    assert_eq!(vd[0].polarity, Polarity::True);

    // A Maritime record whose prefix differs matches nothing.
    let wrong = vec![SecondaryDb::new(DbKind::Maritime, vec![record("", "pirates", "On 3 November something else entirely happened at sea")])];
    assert!(db_supervise(&doc, &mentions, &cands, &wrong, &default_aliases()).is_empty());
}

#[test]
fn unmatched_documents_get_no_database_votes() {
    let (doc, mentions) = prepared(FIG3);
    let cands = generate_all(&doc, &mentions);
    let mut far = record("general cargo ship", "pirates", "");
    far.lat = 10.0;
    let mut other_day = record("general cargo ship", "pirates", "");
    other_day.date = "2019-11-03".into();
    let dbs = vec![SecondaryDb::new(DbKind::Piracy, vec![far, other_day])];
    assert!(db_supervise(&doc, &mentions, &cands, &dbs, &default_aliases()).is_empty());
    assert!(db_supervise(&doc, &mentions, &cands, &[], &default_aliases()).is_empty());
}

#[test]
fn rule_votes_on_narrative_example() {
    let (doc, mentions) = prepared(FIG3);
    let cands = generate_all(&doc, &mentions);
    let rules = RoleRuleSet::default();
    let entity = rules::rule_entity_votes(&doc, &mentions, &rules);
    let pirates = mentions.iter().find(|m| m.surface == "armed pirates").unwrap();
    assert!(entity.iter().any(|v| v.mention_id == pirates.mention_id
        && v.slot == Slot::Aggressor
        && v.source == rules::AGGRESSOR_KEYWORD
        && v.polarity == Polarity::True));

    let votes = rule_supervise(&doc, &mentions, &cands, &rules, &BTreeSet::new());
    let va = vote_for(&votes, &cands, RelationType::VictimAggressor, "the general cargo ship OYA", "armed pirates");
    assert!(va.iter().any(|v| v.source == rules::ACT_BETWEEN && v.polarity == Polarity::True));
    assert_eq!(resolve_votes(&va.into_iter().cloned().collect::<Vec<_>>()), Resolved::True);
}

#[test]
fn closest_date_on_example_two() {
    let (doc, mentions) = prepared(
        "REPUBLIC OF THE CONGO: On 7 January, 12 seafarers, who were kidnapped from the Panama-flagged tanker Anuket Amber and the Singapore-flagged anchor handling and supply vessel ARK TZE in October 2018 off the country’s coast, have been released and are all safe.",
    );
    let cands = generate_all(&doc, &mentions);
    let votes = rules::rule_relation_votes(&doc, &mentions, &cands, &RoleRuleSet::default());
    let tanker = "the Panama-flagged tanker Anuket Amber";
    let near = vote_for(&votes, &cands, RelationType::VictimDate, tanker, "7 January");
    let far = vote_for(&votes, &cands, RelationType::VictimDate, tanker, "October 2018");
    assert_eq!(near[0].polarity, Polarity::True);
    assert_eq!(far[0].polarity, Polarity::False);
}

#[test]
fn mode_filter_and_superset() {
    let (doc, mentions) = prepared(FIG3);
    let cands = generate_all(&doc, &mentions);
    let dbs = vec![SecondaryDb::new(DbKind::Piracy, vec![record("general cargo ship", "", "")])];
    let rules = RoleRuleSet::default();
    let all = supervise_document(&doc, &mentions, &cands, &dbs, &rules, &default_aliases(), &BTreeSet::new());
    let db_only: Vec<LabelVote> = db_supervise(&doc, &mentions, &cands, &dbs, &default_aliases());
    let rules_only = rule_supervise(&doc, &mentions, &cands, &rules, &BTreeSet::new());
    for v in db_only.iter().chain(&rules_only) {
        assert!(all.contains(v));
    }
    let labeled = label_candidates(&cands, &all, SupervisionMode::DbOnly);
    assert!(labeled.iter().flat_map(|l| &l.votes).all(|v| v.source.starts_with("db:")));
    assert_eq!(labeled.len(), cands.len());
    assert_eq!("rules-only".parse::<SupervisionMode>().unwrap(), SupervisionMode::RulesOnly);
    assert!("neither".parse::<SupervisionMode>().is_err());
}

fn labeled(n_true: usize, n_false: usize, n_abstain: usize) -> Vec<LabeledCandidate> {
    let (doc, mentions) = prepared(FIG3);
    let base = generate_all(&doc, &mentions).into_iter().find(|c| c.rtype == RelationType::VictimDate).unwrap();
    let mut out = Vec::new();
    for (n, r) in [(n_true, Resolved::True), (n_false, Resolved::False), (n_abstain, Resolved::Abstain)] {
        for _ in 0..n {
            let mut c = base.clone();
            c.candidate_id = format!("c{}", out.len());
            out.push(LabeledCandidate { candidate: c, votes: vec![], resolved: r });
        }
    }
    out
}

#[test]
fn balancing() {
    let b = balance_training(&labeled(30, 90, 5), 7);
    let count = |r| b.examples.iter().filter(|l| l.resolved == r).count();
    assert_eq!((count(Resolved::True), count(Resolved::False), count(Resolved::Abstain)), (30, 30, 0));
    assert_eq!(b, balance_training(&labeled(30, 90, 5), 7));
    assert_ne!(b.examples, balance_training(&labeled(30, 90, 5), 8).examples);

    let even = labeled(4, 4, 0);
    assert_eq!(balance_training(&even, 1).examples, even);

    let one_sided = balance_training(&labeled(5, 0, 0), 1);
    assert_eq!(one_sided.examples.len(), 5);
    assert_eq!(one_sided.degenerate, vec![RelationType::VictimDate]);
}

proptest! {
    #[test]
    fn resolution_symmetry(ps in proptest::collection::vec(any::<bool>(), 0..12), seed in any::<u64>()) {
        let votes: Vec<LabelVote> = ps.iter().enumerate().map(|(i, &p)| LabelVote::new("c", &format!("s{i}"), p)).collect();
        let r = resolve_votes(&votes);
        let mut shuffled = votes.clone();
        shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        prop_assert_eq!(resolve_votes(&shuffled), r);
        let flipped: Vec<LabelVote> = ps.iter().enumerate().map(|(i, &p)| LabelVote::new("c", &format!("s{i}"), !p)).collect();
        let expected = match r { Resolved::True => Resolved::False, Resolved::False => Resolved::True, a => a };
        prop_assert_eq!(resolve_votes(&flipped), expected);
    }

    #[test]
    fn balanced_classes_within_one(t in 0usize..40, f in 0usize..40, a in 0usize..5, seed in any::<u64>()) {
        let b = balance_training(&labeled(t, f, a), seed);
        let pos = b.examples.iter().filter(|l| l.resolved == Resolved::True).count();
        let neg = b.examples.iter().filter(|l| l.resolved == Resolved::False).count();
        prop_assert!(b.examples.iter().all(|l| l.resolved != Resolved::Abstain));
        if t > 0 && f > 0 {
            prop_assert!(pos.abs_diff(neg) <= 1);
            prop_assert_eq!(pos.min(neg), t.min(f));
        } else {
            prop_assert_eq!(pos + neg, t + f);
        }
    }
}
