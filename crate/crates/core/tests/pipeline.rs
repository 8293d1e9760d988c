use std::fs;
use std::path::Path;

use kgforge_core::pipeline::stages::files;
use kgforge_core::pipeline::{run_ablation, run_pipeline, synth_project, PipelineConfig, RuleConfig, Stage, StageOutcome};
use kgforge_core::synth::SynthSpec;
use kgforge_core::Error;

fn project(dir: &Path, n: usize) -> PipelineConfig {
    let spec = SynthSpec { n_documents: n, ..SynthSpec::default() };
    let path = synth_project(dir, &spec, 5).unwrap();
    PipelineConfig::from_toml(&fs::read_to_string(&path).unwrap(), dir, &[], None).unwrap()
}

fn ran(summary: &kgforge_core::pipeline::RunSummary) -> Vec<Stage> {
    summary.outcomes.iter().filter(|(_, o)| *o == StageOutcome::Ran).map(|(s, _)| *s).collect()
}

#[test]
fn full_run_then_checkpoint_reuse() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = project(dir.path(), 200);
    config.split.test_fraction = 0.2;

    let first = run_pipeline(&config, Stage::Export).unwrap();
    assert_eq!(ran(&first), Stage::ALL.to_vec());
    for name in [files::METRICS, files::CALIBRATION, files::KG, files::INCIDENTS, files::MARGINALS, files::MANIFEST] {
        assert!(config.paths.output.join(name).exists(), "{name} missing");
    }
    let metrics = fs::read_to_string(config.paths.output.join(files::METRICS)).unwrap();
    assert!(metrics.starts_with("# kgforge_meta "));
    assert!(metrics.contains(&first.config_hash));
    assert!(metrics.lines().nth(1).unwrap().starts_with("relation,candidates,f1"));
    let kg = fs::read_to_string(config.paths.output.join(files::KG)).unwrap();
    assert!(kg.lines().next().unwrap().contains(&first.config_hash));

    let second = run_pipeline(&config, Stage::Export).unwrap();
    assert!(ran(&second).is_empty(), "reran {:?}", ran(&second));

    // A changed rule file re-runs supervise and everything after it.
    let mut rules = RuleConfig::default();
    rules.supervision.disabled.insert("rules:closest_date".into());
    let rules_path = dir.path().join("rules.toml");
    fs::write(&rules_path, rules.to_toml()).unwrap();
    config.paths.rules = Some(rules_path);
    let third = run_pipeline(&config, Stage::Export).unwrap();
    assert_eq!(
        ran(&third),
        vec![Stage::Supervise, Stage::Learn, Stage::Infer, Stage::Evaluate, Stage::Export]
    );

    // Changing only the graph threshold re-runs export alone, and refreshes headers.
    config.graph.min_prob = 0.9;
    let fourth = run_pipeline(&config, Stage::Export).unwrap();
    assert_eq!(ran(&fourth), vec![Stage::Export]);
    let metrics = fs::read_to_string(config.paths.output.join(files::METRICS)).unwrap();
    assert!(metrics.contains(&fourth.config_hash));

    let rows = run_ablation(&config).unwrap();
    assert!(!rows.is_empty());
    assert!(config.paths.output.join(files::ABLATION).exists());
}

#[test]
fn missing_inputs_name_the_stage() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = project(dir.path(), 20);
    config.paths.piracy_db = Some(dir.path().join("absent.csv"));
    match run_pipeline(&config, Stage::Export) {
        Err(Error::Stage { stage, message }) => {
            assert_eq!(stage, "supervise");
            assert!(message.contains("absent.csv"), "{message}");
        }
        other => panic!("unexpected {other:?}"),
    }
    config.paths.corpus = dir.path().join("nope.jsonl");
    assert!(matches!(run_pipeline(&config, Stage::Ingest), Err(Error::Stage { stage, .. }) if stage == "ingest"));
}

#[test]
fn zero_coverage_db_only_has_no_labels() {
    let dir = tempfile::tempdir().unwrap();
    let spec = SynthSpec { n_documents: 30, db_coverage: 0.0, ..SynthSpec::default() };
    let path = synth_project(dir.path(), &spec, 1).unwrap();
    let overrides = vec!["supervision.mode=db-only".to_string()];
    let config = PipelineConfig::from_toml(&fs::read_to_string(&path).unwrap(), dir.path(), &overrides, None).unwrap();
    run_pipeline(&config, Stage::Supervise).unwrap();
    let labels = fs::read_to_string(config.paths.output.join(files::LABELS)).unwrap();
    assert!(labels.lines().skip(1).all(|l| l.contains("\"resolved\":\"Abstain\"")));
    match run_pipeline(&config, Stage::Learn) {
        Err(Error::Stage { stage, .. }) => assert_eq!(stage, "learn"),
        other => panic!("unexpected {other:?}"),
    }
}
