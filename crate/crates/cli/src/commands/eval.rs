use std::time::Instant;

use dymgnn::dataprep::read_feature_spec;
use dymgnn::eval::{evaluate, EvaluationReport};
use dymgnn::model::Checkpoint;

use super::train::{load_windows, recorded_runtime};
use super::{ensure_exists, write_csv, Context};
use crate::config::RunConfig;
use crate::error::CliError;
use crate::manifest::{sibling, RunManifest};

pub const HEADER: [&str; 11] = [
    "checkpoint",
    "model",
    "window",
    "nodes",
    "threshold",
    "auc",
    "auc_lower",
    "auc_upper",
    "f1",
    "f1_lower",
    "f1_upper",
];

pub fn run(ctx: &Context, cfg: &RunConfig, manifest: &mut RunManifest) -> Result<(), CliError> {
    let data = ctx.path(&cfg.str("data"));
    ensure_exists(&data, "dataset directory")?;
    manifest.input(&data)?;
    let names: Vec<String> = cfg
        .str("checkpoints")
        .split(',')
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
        .collect();
    if names.is_empty() {
        return Err(CliError::Config("no checkpoints listed".into()));
    }
    let index = cfg.uint("window")?;
    let resamples = cfg.uint("resamples")?;
    let threshold = cfg.float("threshold");
    let seed = cfg.u64("seed")?;
    let window = load_windows(&data, &[index])?.remove(0);
    let dataset_scaling = read_feature_spec(&data)?;

    let mut rows = Vec::new();
    let mut summary = String::new();
    for name in &names {
        let path = ctx.path(name);
        ensure_exists(&path, "checkpoint")?;
        manifest.input(&path)?;
        let cp = Checkpoint::load(&path)?;
        if cp.scaling.as_ref().is_some_and(|s| *s != dataset_scaling) {
            log::warn!("{name}: dataset scaling differs from the checkpoint's training scaling");
            manifest.note(format!(
                "{name}: scaling statistics differ from the dataset's"
            ));
        }
        let start = Instant::now();
        let pred = cp.model.predict(&window)?;
        let mut report: EvaluationReport = evaluate(
            &pred.probabilities,
            &window.labels,
            threshold,
            resamples,
            seed,
        )?;
        report.score_seconds = start.elapsed().as_secs_f64();
        report.train_seconds = recorded_runtime(&path);
        manifest.timing(&format!("score:{name}"), report.score_seconds);
        let arch = cp.config().architecture.to_string();
        rows.push(vec![
            name.clone(),
            arch.clone(),
            index.to_string(),
            report.nodes.to_string(),
            threshold.to_string(),
            report.auc.point.to_string(),
            report.auc.lower.to_string(),
            report.auc.upper.to_string(),
            report.f1.point.to_string(),
            report.f1.lower.to_string(),
            report.f1.upper.to_string(),
        ]);
        summary.push_str(&format!(
            "{name} ({arch}) on window {index}, {} nodes\n  AUC {:.4} [{:.4}, {:.4}]\n  F1  {:.4} [{:.4}, {:.4}] at threshold {threshold}\n  train {} s, score {:.3} s\n",
            report.nodes,
            report.auc.point,
            report.auc.lower,
            report.auc.upper,
            report.f1.point,
            report.f1.lower,
            report.f1.upper,
            report.train_seconds.map_or("n/a".to_string(), |s| format!("{s:.1}")),
            report.score_seconds,
        ));
    }
    let out = ctx.path(&cfg.str("output"));
    write_csv(&out, &HEADER, &rows)?;
    manifest.output(&out);
    let text = sibling(&out, ".txt");
    dymgnn::fsutil::write_atomic(&text, summary.as_bytes())?;
    manifest.output(&text);
    print!("{summary}");
    Ok(())
}
