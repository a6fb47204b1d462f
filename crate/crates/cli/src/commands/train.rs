use std::path::Path;

use dymgnn::dataprep::{
    behavioural_indices, list_windows, read_feature_spec, read_window, window_dir, FEATURE_NAMES,
};
use dymgnn::model::{
    train, Architecture, Checkpoint, LabeledWindow, Model, ModelConfig, TrainConfig,
};

use super::{ensure_exists, write_csv, Context};
use crate::config::{parse_indices, RunConfig};
use crate::error::CliError;
use crate::manifest::RunManifest;

pub const RUNTIME_FILE: &str = "runtime.csv";

/// Loads and isolates the listed windows of a dataset directory.
pub fn load_windows(data: &Path, indices: &[usize]) -> Result<Vec<LabeledWindow>, CliError> {
    let available = list_windows(data)?;
    indices
        .iter()
        .map(|&i| {
            if !available.contains(&i) {
                return Err(CliError::Config(format!(
                    "window {i} is not in {} ({} windows)",
                    data.display(),
                    available.len()
                )));
            }
            Ok(read_window(&window_dir(data, i))?.labeled()?)
        })
        .collect()
}

/// Largest supra size over every window in the dataset, so the attention
/// head covers any window it may later score.
fn attention_capacity(data: &Path) -> Result<usize, CliError> {
    let mut cap = 0;
    for i in list_windows(data)? {
        let w = read_window(&window_dir(data, i))?;
        cap = cap.max(w.n() * w.topology.layers());
    }
    Ok(cap.max(1))
}

pub fn model_config(
    cfg: &RunConfig,
    arch: Architecture,
    window_len: usize,
    capacity: usize,
) -> Result<ModelConfig, CliError> {
    let mut mc = ModelConfig::new(arch, FEATURE_NAMES.len(), window_len, capacity);
    mc.embedding = cfg.uint("embedding")?;
    mc.gnn_depth = cfg.uint("gnn_depth")?;
    mc.gat_heads = cfg.uint("gat_heads")?;
    mc.gat_slope = cfg.float("gat_slope");
    mc.dropout = cfg.float("dropout");
    mc.seed = cfg.u64("seed")?;
    mc.behavioural = behavioural_indices();
    mc.validate().map_err(|e| CliError::Config(e.to_string()))?;
    Ok(mc)
}

/// Adds or replaces `name` in the runtime table and renormalizes by the fastest run.
fn update_runtime_table(
    path: &Path,
    name: &str,
    model: &str,
    seconds: f64,
    epochs: usize,
) -> Result<(), CliError> {
    let mut rows: Vec<(String, String, f64, usize)> = Vec::new();
    if path.exists() {
        let mut r = csv::Reader::from_path(path)?;
        for rec in r.records() {
            let rec = rec?;
            let parsed = (|| {
                Some((
                    rec.get(0)?.to_string(),
                    rec.get(1)?.to_string(),
                    rec.get(2)?.parse().ok()?,
                    rec.get(3)?.parse().ok()?,
                ))
            })();
            match parsed {
                Some(row) => rows.push(row),
                None => log::warn!("ignoring malformed row in {}", path.display()),
            }
        }
    }
    rows.retain(|r| r.0 != name);
    rows.push((name.to_string(), model.to_string(), seconds, epochs));
    rows.sort_by(|a, b| a.0.cmp(&b.0));
    let fastest = rows
        .iter()
        .map(|r| r.2)
        .fold(f64::INFINITY, f64::min)
        .max(f64::MIN_POSITIVE);
    let out: Vec<Vec<String>> = rows
        .iter()
        .map(|(n, m, s, e)| {
            vec![
                n.clone(),
                m.clone(),
                s.to_string(),
                e.to_string(),
                format!("{:.2}", s / fastest),
            ]
        })
        .collect();
    write_csv(
        path,
        &["checkpoint", "model", "seconds", "epochs", "normalized"],
        &out,
    )
}

pub fn run(ctx: &Context, cfg: &RunConfig, manifest: &mut RunManifest) -> Result<(), CliError> {
    let arch: Architecture = cfg
        .str("model")
        .parse()
        .map_err(|e| CliError::Config(format!("model: {e}")))?;
    let data = ctx.path(&cfg.str("data"));
    ensure_exists(&data, "dataset directory")?;
    manifest.input(&data)?;
    let train_idx = parse_indices(&cfg.str("train_windows"))?;
    let val_idx = cfg.uint("validation_window")?;
    if train_idx.contains(&val_idx) {
        log::warn!("validation window {val_idx} is also a training window");
    }
    let tc = TrainConfig {
        epochs: cfg.uint("epochs")?,
        patience: cfg.uint("patience")?,
        learning_rate: cfg.float("learning_rate"),
        l2: cfg.float("l2"),
    };
    if tc.epochs == 0 || !(tc.learning_rate.is_finite() && tc.learning_rate > 0.0) {
        return Err(CliError::Config(
            "epochs and learning_rate must be positive".into(),
        ));
    }

    let load_start = std::time::Instant::now();
    let train_windows = load_windows(&data, &train_idx)?;
    let validation = load_windows(&data, &[val_idx])?.remove(0);
    let scaling = read_feature_spec(&data)?;
    let window_len = train_windows[0].sequence.len();
    let mut model = Model::new(model_config(
        cfg,
        arch,
        window_len,
        attention_capacity(&data)?,
    )?)?;
    manifest.timing("load", load_start.elapsed().as_secs_f64());

    let run = train(&mut model, &train_windows, &validation, &tc)?;
    manifest.timing("train", run.seconds);

    let out = ctx.path(&cfg.str("output"));
    if let Some(parent) = out.parent() {
        std::fs::create_dir_all(parent)?;
    }
    Checkpoint::new(model, Some(scaling)).save(&out)?;
    manifest.output(&out);

    let log_path = crate::manifest::sibling(&out, ".train_log.csv");
    let rows: Vec<Vec<String>> = run
        .epochs
        .iter()
        .map(|e| {
            vec![
                e.epoch.to_string(),
                e.train_loss.to_string(),
                e.val_loss.to_string(),
                e.val_auc.map(|a| a.to_string()).unwrap_or_default(),
                (e.epoch == run.best_epoch).to_string(),
            ]
        })
        .collect();
    write_csv(
        &log_path,
        &["epoch", "train_loss", "val_loss", "val_auc", "best"],
        &rows,
    )?;
    manifest.output(&log_path);

    let runtime = out.parent().unwrap_or(Path::new(".")).join(RUNTIME_FILE);
    let name = out
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    update_runtime_table(
        &runtime,
        &name,
        &arch.to_string(),
        run.seconds,
        run.epochs.len(),
    )?;
    manifest.output(&runtime);
    manifest.note(format!(
        "{} epochs, best epoch {}, stop reason {}",
        run.epochs.len(),
        run.best_epoch,
        run.stop_reason.as_str()
    ));
    log::info!(
        "trained {arch} for {} epochs (best {}) in {:.1}s",
        run.epochs.len(),
        run.best_epoch,
        run.seconds
    );
    Ok(())
}

/// Training seconds recorded for `checkpoint` in its directory's runtime table.
pub fn recorded_runtime(checkpoint: &Path) -> Option<f64> {
    let table = checkpoint.parent()?.join(RUNTIME_FILE);
    let name = checkpoint.file_name()?.to_string_lossy().into_owned();
    let mut r = csv::Reader::from_path(table).ok()?;
    r.records()
        .filter_map(Result::ok)
        .find(|rec| rec.get(0) == Some(name.as_str()))?
        .get(2)?
        .parse()
        .ok()
}
