use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use mcrank_core::io::{load_predictions, load_report};
use mcrank_core::predictor::PredictorModel;

const TABLE2: &str = "user_id,item_id,Food,Service,Ambience\n\
                      u,T1,5,5,5\nu,T2,4,4,4\nu,T3,3,3,3\nu,T4,4,3,3\nu,T5,4,5,3\n\
                      w,A,1,2,3\nw,B,3,2,1\n";

fn mcrank(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mcrank"))
        .args(args)
        .env_remove("MCRANK_THREADS")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn rank_prints_t1_first() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "t2.csv", TABLE2);
    let o = mcrank(&[
        "rank",
        "--input",
        s(&input),
        "--method",
        "kd",
        "--k",
        "0.5",
        "--user",
        "u",
    ]);
    assert!(o.status.success(), "{o:?}");
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("user_id\tposition\titem_id\tscore"));
    assert!(lines.next().unwrap().starts_with("u\t1\tT1\t"));
    assert_eq!(lines.count(), 4);
}

#[test]
fn kd_zero_output_equals_pr() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "t2.csv", TABLE2);
    let pr = mcrank(&["rank", "--input", s(&input), "--method", "pr"]);
    let kd = mcrank(&["rank", "--input", s(&input), "--method", "kd", "--k", "0"]);
    assert!(pr.status.success());
    assert_eq!(stdout(&pr), stdout(&kd));
    assert!(stdout(&pr).contains("u\t3\tT5\t2\n"));
}

#[test]
fn hybrid_and_top_n() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "t2.csv", TABLE2);
    let o = mcrank(&[
        "rank",
        "--input",
        s(&input),
        "--method",
        "pr",
        "--sub",
        "ar",
        "--user",
        "u",
        "--top-n",
        "3",
    ]);
    assert_eq!(
        stdout(&o),
        "user_id\tposition\titem_id\tscore\nu\t1\tT1\t4.8\nu\t2\tT2\t2.6\nu\t3\tT5\t2.4\n"
    );
    let o = mcrank(&[
        "rank",
        "--input",
        s(&input),
        "--method",
        "ar",
        "--user",
        "u",
        "--top-n",
        "1",
        "--predicted",
    ]);
    assert_eq!(stdout(&o).lines().nth(1), Some("u\t1\tT1\t-3.5"));
}

#[test]
fn rank_ratings_file() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(
        dir.path(),
        "table1.csv",
        "user_id,item_id,overall,Food,Service,Ambience,Value\nU1,T3,4,4,3,4,4\nU1,T2,3,3,3,3,3\nU3,T1,?,?,?,?,?\n",
    );
    let o = mcrank(&["rank", "--input", s(&input), "--method", "pr", "--ratings"]);
    assert!(o.status.success(), "{o:?}");
    assert_eq!(
        stdout(&o),
        "user_id\tposition\titem_id\tscore\nU1\t1\tT3\t1\nU1\t2\tT2\t0\n"
    );
}

#[test]
fn usage_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "t2.csv", TABLE2);
    let cases: Vec<Vec<&str>> = vec![
        vec!["rank", "--input", s(&input), "--method", "kd"],
        vec!["rank", "--input", s(&input), "--method", "pr", "--k", "0.5"],
        vec!["rank", "--input", s(&input), "--method", "kd", "--k", "1.5"],
        vec![
            "rank",
            "--input",
            s(&input),
            "--method",
            "ar",
            "--sub",
            "pg",
        ],
        vec!["rank", "--input", s(&input), "--method", "pr", "--bogus"],
        vec![
            "rank",
            "--input",
            s(&input),
            "--method",
            "pr",
            "--top-n",
            "0",
        ],
        vec!["frobnicate"],
        vec![
            "synth",
            "--users",
            "3",
            "--items",
            "3",
            "--criteria",
            "2",
            "--density",
            "1.5",
            "--out",
            "x.csv",
        ],
    ];
    for args in cases {
        let o = mcrank(&args);
        assert_eq!(o.status.code(), Some(1), "{args:?}: {o:?}");
        assert!(!o.stderr.is_empty());
    }
    let o = Command::new(env!("CARGO_BIN_EXE_mcrank"))
        .args(["rank", "--input", s(&input), "--method", "pr"])
        .env("MCRANK_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(mcrank(&["--help"]).status.code(), Some(0));
}

#[test]
fn data_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let broken = write(
        dir.path(),
        "broken.csv",
        "user_id,item_id,overall,a,b\nu,i,3,3,3\nu,j,3,3\n",
    );
    let o = mcrank(&[
        "predict",
        "--input",
        s(&broken),
        "--out",
        s(&dir.path().join("p.csv")),
    ]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8(o.stderr).unwrap();
    assert!(err.contains("broken.csv:3"), "{err}");

    let invalid = write(
        dir.path(),
        "invalid.csv",
        "user_id,item_id,overall,a\nu,i,3,9\n",
    );
    let o = mcrank(&[
        "evaluate",
        "--input",
        s(&invalid),
        "--out",
        s(&dir.path().join("r.json")),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8(o.stderr)
        .unwrap()
        .contains("out of range"));

    let input = write(dir.path(), "t2.csv", TABLE2);
    let o = mcrank(&[
        "rank",
        "--input",
        s(&input),
        "--method",
        "pr",
        "--user",
        "nobody",
    ]);
    assert_eq!(o.status.code(), Some(2));
    let o = mcrank(&[
        "rank",
        "--input",
        s(&dir.path().join("missing.csv")),
        "--method",
        "pr",
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn synth_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for out in [&a, &b] {
        let o = mcrank(&[
            "synth",
            "--users",
            "50",
            "--items",
            "20",
            "--criteria",
            "3",
            "--density",
            "0.3",
            "--seed",
            "7",
            "--out",
            s(out),
        ]);
        assert!(o.status.success(), "{o:?}");
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let d = mcrank_core::io::load_dataset(&a).unwrap();
    assert_eq!(d.criteria_count(), 3);
}

#[test]
fn predict_then_rank() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data.csv");
    let preds = dir.path().join("preds.csv");
    let model = dir.path().join("model.txt");
    assert!(mcrank(&[
        "synth",
        "--users",
        "20",
        "--items",
        "10",
        "--criteria",
        "2",
        "--density",
        "0.5",
        "--seed",
        "1",
        "--out",
        s(&data)
    ])
    .status
    .success());
    let o = mcrank(&[
        "predict",
        "--input",
        s(&data),
        "--out",
        s(&preds),
        "--seed",
        "3",
        "--model",
        s(&model),
        "--epochs",
        "5",
    ]);
    assert!(o.status.success(), "{o:?}");

    let dataset = mcrank_core::io::load_dataset(&data).unwrap();
    let p = load_predictions(&preds).unwrap();
    assert_eq!(p.criteria_names, dataset.criteria_names);
    let rated: std::collections::HashSet<(String, String)> = dataset
        .records
        .iter()
        .map(|r| (r.user_id.clone(), r.item_id.clone()))
        .collect();
    assert!(p
        .rows
        .iter()
        .all(|(u, i, v)| !rated.contains(&(u.clone(), i.clone()))
            && v.as_slice().iter().all(|x| (1.0..=5.0).contains(x))));

    let m = PredictorModel::load(std::io::BufReader::new(
        std::fs::File::open(&model).unwrap(),
    ))
    .unwrap();
    let (u, i, v) = &p.rows[0];
    assert_eq!(&m.predict(u, i), v);

    let o = mcrank(&[
        "rank",
        "--input",
        s(&preds),
        "--method",
        "kd",
        "--k",
        "0.5",
        "--sub",
        "gd",
        "--top-n",
        "3",
    ]);
    assert!(o.status.success());
    assert!(stdout(&o).lines().count() > 1);
}

#[test]
fn sweep_k_writes_kd_rows() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data.csv");
    let cfg = write(
        dir.path(),
        "cfg.json",
        r#"{"n_values": [2, 4], "train": {"dim": 4, "epochs": 3}}"#,
    );
    let out = dir.path().join("sweep.json");
    assert!(mcrank(&[
        "synth",
        "--users",
        "40",
        "--items",
        "15",
        "--criteria",
        "3",
        "--density",
        "0.4",
        "--out",
        s(&data)
    ])
    .status
    .success());
    let o = mcrank(&[
        "sweep-k",
        "--input",
        s(&data),
        "--k",
        "0,0.5,1",
        "--config",
        s(&cfg),
        "--out",
        s(&out),
    ]);
    assert!(o.status.success(), "{o:?}");
    let report = load_report(&out).unwrap();
    assert_eq!(report.cells.len(), 3 * 2 * 6);
    assert!(report.cells.iter().all(|c| c.method == "KD"));
    for c in report.cells.iter().filter(|c| c.k == Some(0.0)) {
        assert_eq!(c.improvement_f1, Some(0.0));
    }
    assert!(report.metadata.timings.is_none());
    assert!(dir.path().join("sweep.csv").exists());

    let o = mcrank(&[
        "sweep-k",
        "--input",
        s(&data),
        "--k",
        "0,2",
        "--out",
        s(&out),
    ]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn thread_count_does_not_change_reports() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data.csv");
    let cfg = write(
        dir.path(),
        "cfg.json",
        r#"{"methods": ["pr", "kd:0.5+ar", "gd"], "n_values": [3], "protocol": "all_unrated", "train": {"dim": 4, "epochs": 4}}"#,
    );
    assert!(mcrank(&[
        "synth",
        "--users",
        "30",
        "--items",
        "12",
        "--criteria",
        "3",
        "--density",
        "0.4",
        "--out",
        s(&data)
    ])
    .status
    .success());
    let mut outputs = Vec::new();
    for threads in ["1", "4"] {
        let out = dir.path().join(format!("r{threads}.json"));
        let o = Command::new(env!("CARGO_BIN_EXE_mcrank"))
            .args([
                "evaluate",
                "--input",
                s(&data),
                "--config",
                s(&cfg),
                "--out",
                s(&out),
            ])
            .env("MCRANK_THREADS", threads)
            .output()
            .unwrap();
        assert!(o.status.success(), "{o:?}");
        outputs.push(std::fs::read(&out).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
    let text = String::from_utf8(outputs.pop().unwrap()).unwrap();
    assert!(text.contains("\"protocol\": \"all_unrated\""));
}
