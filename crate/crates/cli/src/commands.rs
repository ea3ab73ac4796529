use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::Context;
use mcrank_core::io::{self, Predictions};
use mcrank_core::pipeline::{self, synth_generate};
use mcrank_core::ranking::{rank_candidates_with, top_n};
use mcrank_core::{ExperimentConfig, MethodSpec, RankingOptions, SynthParams, TrainConfig};

use crate::{
    EvaluateArgs, Failure, MethodArg, PredictArgs, RankArgs, SubArg, SweepArgs, SynthArgs,
};

fn method_from_args(a: &RankArgs) -> Result<MethodSpec, Failure> {
    let usage = |m: String| Failure::Usage(m);
    if a.k.is_some() && a.method != MethodArg::Kd {
        return Err(usage("--k only applies to --method kd".into()));
    }
    let base = match a.method {
        MethodArg::Pr => MethodSpec::Pr,
        MethodArg::Kd => {
            let k =
                a.k.ok_or_else(|| usage("--method kd requires --k".into()))?;
            MethodSpec::kd(k).map_err(|e| usage(e.to_string()))?
        }
        MethodArg::Ar => MethodSpec::Ar,
        MethodArg::Mr => MethodSpec::Mr,
        MethodArg::Gd => MethodSpec::Gd,
        MethodArg::Pg => MethodSpec::Pg,
    };
    match a.sub {
        None => Ok(base),
        Some(sub) => {
            let sub = match sub {
                SubArg::Ar => MethodSpec::Ar,
                SubArg::Mr => MethodSpec::Mr,
                SubArg::Gd => MethodSpec::Gd,
                SubArg::Pg => MethodSpec::Pg,
            };
            MethodSpec::hybrid(base, sub).map_err(|e| usage(e.to_string()))
        }
    }
}

pub(crate) fn rank(a: &RankArgs, out: &mut impl Write) -> Result<(), Failure> {
    let method = method_from_args(a)?;
    if !(a.equality_tolerance >= 0.0 && a.equality_tolerance.is_finite()) {
        return Err(Failure::Usage(
            "--equality-tolerance must be finite and >= 0".into(),
        ));
    }
    let sets = if a.ratings {
        io::dataset_candidate_sets(&io::load_dataset(&a.input)?)?
    } else {
        io::load_predictions(&a.input)?.candidate_sets()?
    };
    let sets: Vec<_> = match &a.user {
        Some(u) => {
            let found: Vec<_> = sets.into_iter().filter(|s| s.user_id() == u).collect();
            if found.is_empty() {
                return Err(
                    anyhow::anyhow!("user {u} has no candidates in {}", a.input.display()).into(),
                );
            }
            found
        }
        None => sets,
    };
    let opts = RankingOptions {
        equality_tolerance: a.equality_tolerance,
    };
    let write = |out: &mut dyn Write| -> std::io::Result<()> {
        writeln!(out, "user_id\tposition\titem_id\tscore")?;
        for set in &sets {
            let list = rank_candidates_with(set, method, &opts);
            let list = match a.top_n {
                Some(n) => top_n(&list, n as usize),
                None => list,
            };
            for (pos, e) in list.entries().iter().enumerate() {
                writeln!(
                    out,
                    "{}\t{}\t{}\t{}",
                    set.user_id(),
                    pos + 1,
                    e.item_id,
                    e.score
                )?;
            }
        }
        Ok(())
    };
    write(out).context("writing ranked lists")?;
    Ok(())
}

fn experiment_config(
    config: Option<&Path>,
    input: Option<&Path>,
) -> Result<ExperimentConfig, Failure> {
    let mut cfg = match config {
        Some(p) => io::load_config(p).with_context(|| format!("loading config {}", p.display()))?,
        None => ExperimentConfig::default(),
    };
    if let Some(input) = input {
        cfg.dataset = Some(input.to_owned());
    }
    if cfg.dataset.is_none() {
        return Err(Failure::Usage(
            "no dataset: pass --input or name one in the config".into(),
        ));
    }
    Ok(cfg)
}

fn finish_report(
    mut report: mcrank_core::MetricsReport,
    out: &Path,
    keep_timings: bool,
) -> Result<(), Failure> {
    let timings = report.metadata.timings.clone();
    if !keep_timings {
        report.metadata.timings = None;
    }
    io::emit_report(&report, out).with_context(|| format!("writing report {}", out.display()))?;
    if let Some(t) = timings {
        eprintln!(
            "wrote {} cells to {} ({:.0} ms)",
            report.cells.len(),
            out.display(),
            t.total_ms
        );
    }
    Ok(())
}

pub(crate) fn evaluate(a: &EvaluateArgs) -> Result<(), Failure> {
    let cfg = experiment_config(a.config.as_deref(), a.input.as_deref())?;
    let report = pipeline::run_experiment(&cfg)?;
    finish_report(report, &a.out, a.timings)
}

pub(crate) fn sweep_k(a: &SweepArgs) -> Result<(), Failure> {
    if let Some(k) = a.k.iter().find(|k| !(0.0..=1.0).contains(*k)) {
        return Err(Failure::Usage(format!("k = {k} is outside [0, 1]")));
    }
    let cfg = experiment_config(a.config.as_deref(), a.input.as_deref())?;
    let data = io::load_dataset(cfg.dataset.as_ref().expect("checked above"))?;
    let report = pipeline::sweep_k(&cfg, &data, &a.k)?;
    finish_report(report, &a.out, a.timings)
}

pub(crate) fn synth(a: &SynthArgs) -> Result<(), Failure> {
    let params = SynthParams {
        users: a.users,
        items: a.items,
        criteria: a.criteria,
        density: a.density,
        seed: a.seed,
    };
    let data = synth_generate(&params).map_err(|e| Failure::Usage(e.to_string()))?;
    io::save_dataset(&data, &a.out).with_context(|| format!("writing {}", a.out.display()))?;
    Ok(())
}

pub(crate) fn predict(a: &PredictArgs) -> Result<(), Failure> {
    let data = io::load_dataset(&a.input)?;
    let defaults = TrainConfig::default();
    let cfg = TrainConfig {
        seed: a.seed,
        dim: a.dim.unwrap_or(defaults.dim),
        epochs: a.epochs.unwrap_or(defaults.epochs),
        ..defaults
    };
    cfg.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    let model = mcrank_core::predictor::fit(&data, &cfg)?;

    let mut users: Vec<&str> = model.users().iter().map(String::as_str).collect();
    users.sort_unstable();
    let mut items: Vec<&str> = model.items().iter().map(String::as_str).collect();
    items.sort_unstable();
    let rated: std::collections::HashSet<(&str, &str)> = data
        .records
        .iter()
        .map(|r| (r.user_id.as_str(), r.item_id.as_str()))
        .collect();
    let mut rows = Vec::new();
    for &u in &users {
        for &i in &items {
            if a.all_pairs || !rated.contains(&(u, i)) {
                rows.push((u.to_owned(), i.to_owned(), model.predict(u, i)));
            }
        }
    }
    let predictions = Predictions {
        criteria_names: data.criteria_names.clone(),
        rows,
    };
    let file = File::create(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    io::write_predictions(&predictions, BufWriter::new(file))?;
    if let Some(path) = &a.model {
        let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
        let mut w = BufWriter::new(file);
        model.save(&mut w)?;
        w.flush().context("writing model")?;
    }
    Ok(())
}
