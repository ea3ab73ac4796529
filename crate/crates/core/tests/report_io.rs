use mcrank_core::io::{emit_report, load_report, report_csv_path};
use mcrank_core::pipeline::{run_experiment, run_experiment_on, synth_generate};
use mcrank_core::{ExperimentConfig, FoldId, MethodSpec, SynthParams, TrainConfig};

fn config(methods: Vec<MethodSpec>) -> ExperimentConfig {
    ExperimentConfig {
        methods,
        train: TrainConfig {
            dim: 4,
            epochs: 3,
            ..Default::default()
        },
        ..Default::default()
    }
}

#[test]
fn emitted_report_round_trips() {
    let data = synth_generate(&SynthParams {
        users: 60,
        items: 30,
        criteria: 3,
        density: 0.4,
        seed: 5,
    })
    .unwrap();
    let cfg = config(vec![
        MethodSpec::Pr,
        MethodSpec::hybrid(MethodSpec::kd(0.6).unwrap(), MethodSpec::Gd).unwrap(),
    ]);
    let report = run_experiment_on(&cfg, &data).unwrap();
    // 2 methods x 8 N values x (5 folds + average)
    assert_eq!(report.cells.len(), 2 * 8 * 6);
    for c in report.cells.iter().filter(|c| c.label == "PR") {
        assert_eq!(c.improvement_f1, Some(0.0));
        assert_eq!(c.improvement_ndcg, Some(0.0));
    }

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.json");
    emit_report(&report, &path).unwrap();
    assert_eq!(load_report(&path).unwrap(), report);

    let csv = std::fs::read_to_string(report_csv_path(&path)).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "method,label,k,sub,N,fold,f1,ndcg,improvement_f1,improvement_ndcg"
    );
    assert_eq!(lines.count(), report.cells.len());
    let avg = report.cell("KD(0.6)+GD", 10, FoldId::Average).unwrap();
    let row = format!("KD,KD(0.6)+GD,0.6,GD,10,avg,{},{},", avg.f1, avg.ndcg);
    assert!(csv.contains(&row), "{row}");

    let json = std::fs::read_to_string(&path).unwrap();
    assert!(json.contains("\"fold\": \"avg\""));
    assert!(json.contains("\"N\": 40"));
}

#[test]
fn experiment_loads_dataset_from_config() {
    let dir = tempfile::tempdir().unwrap();
    let data_path = dir.path().join("ratings.csv");
    let data = synth_generate(&SynthParams {
        users: 30,
        items: 20,
        criteria: 2,
        density: 0.5,
        seed: 1,
    })
    .unwrap();
    mcrank_core::io::save_dataset(&data, &data_path).unwrap();
    let mut cfg = config(vec![MethodSpec::Ar]);
    cfg.n_values = vec![2];
    assert!(run_experiment(&cfg).is_err());
    cfg.dataset = Some(data_path);
    let report = run_experiment(&cfg).unwrap();
    assert_eq!(report.metadata.records, data.len());
    assert_eq!(report.metadata.criteria, vec!["c1", "c2"]);
}
