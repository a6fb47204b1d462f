use dymgnn::dataprep::{list_windows, read_feature_spec, read_window, window_dir, FEATURE_NAMES};
use dymgnn::eval::{attention_profile, dependency_export, shapley_attribution};
use dymgnn::model::Checkpoint;

use super::train::load_windows;
use super::{ensure_exists, write_csv, Context};
use crate::config::{parse_indices, RunConfig};
use crate::error::CliError;
use crate::manifest::RunManifest;

pub fn run(ctx: &Context, cfg: &RunConfig, manifest: &mut RunManifest) -> Result<(), CliError> {
    let data = ctx.path(&cfg.str("data"));
    ensure_exists(&data, "dataset directory")?;
    manifest.input(&data)?;
    let ckpt = ctx.path(&cfg.str("checkpoint"));
    ensure_exists(&ckpt, "checkpoint")?;
    manifest.input(&ckpt)?;
    let cp = Checkpoint::load(&ckpt)?;
    let index = cfg.uint("window")?;
    let samples = cfg.uint("samples")?;
    let seed = cfg.u64("seed")?;
    let top_k = cfg.uint("top_k")?;
    let out = ctx.path(&cfg.str("output"));
    std::fs::create_dir_all(&out)?;

    let built = {
        if !list_windows(&data)?.contains(&index) {
            return Err(CliError::Config(format!(
                "window {index} is not in {}",
                data.display()
            )));
        }
        read_window(&window_dir(&data, index))?
    };
    let window = built.labeled()?;
    let scaling = match &cp.scaling {
        Some(s) => s.clone(),
        None => read_feature_spec(&data)?,
    };
    let baseline = scaling.scaled_medians();

    let start = std::time::Instant::now();
    let table = shapley_attribution(&cp.model, &window, &baseline, samples, seed)?;
    manifest.timing("shapley", start.elapsed().as_secs_f64());

    let mut header = vec!["loan_id"];
    header.extend(FEATURE_NAMES);
    let rows: Vec<Vec<String>> = built
        .loan_ids
        .iter()
        .zip(&table.values)
        .map(|(id, v)| {
            std::iter::once(id.clone())
                .chain(v.iter().map(|x| x.to_string()))
                .collect()
        })
        .collect();
    let path = out.join("attribution.csv");
    write_csv(&path, &header, &rows)?;
    manifest.output(&path);

    let importance = table.global_importance();
    let ranking = table.ranking();
    let rows: Vec<Vec<String>> = ranking
        .iter()
        .enumerate()
        .map(|(r, &k)| {
            vec![
                (r + 1).to_string(),
                FEATURE_NAMES[k].to_string(),
                importance[k].to_string(),
            ]
        })
        .collect();
    let path = out.join("importance.csv");
    write_csv(&path, &["rank", "feature", "mean_abs_attribution"], &rows)?;
    manifest.output(&path);

    // Dependency plots use each node's last-snapshot (scaled) feature values.
    let last = built.features.last().expect("windows have snapshots");
    let values: Vec<Vec<f64>> = (0..last.rows()).map(|i| last.row(i).to_vec()).collect();
    let selected: Vec<usize> = ranking.iter().copied().take(top_k).collect();
    let deps = dependency_export(&table, &values, &selected)?;
    let rows: Vec<Vec<String>> = deps
        .iter()
        .map(|d| {
            vec![
                FEATURE_NAMES[d.feature].to_string(),
                built.loan_ids[d.node].clone(),
                d.value.to_string(),
                d.attribution.to_string(),
                d.companion
                    .map(|c| FEATURE_NAMES[c].to_string())
                    .unwrap_or_default(),
                d.companion_value.map(|v| v.to_string()).unwrap_or_default(),
            ]
        })
        .collect();
    let path = out.join("dependency.csv");
    write_csv(
        &path,
        &[
            "feature",
            "loan_id",
            "value",
            "attribution",
            "companion",
            "companion_value",
        ],
        &rows,
    )?;
    manifest.output(&path);

    if cp.config().architecture.has_attention() {
        let indices = match cfg.opt_str("attention_windows") {
            Some(spec) => parse_indices(&spec)?,
            None => vec![index],
        };
        let windows = load_windows(&data, &indices)?;
        let profile = attention_profile(&cp.model, &windows)?;
        let rows: Vec<Vec<String>> = profile
            .pairs()
            .iter()
            .map(|(t, b)| vec![t.to_string(), b.to_string()])
            .collect();
        let path = out.join("attention.csv");
        write_csv(&path, &["position", "beta"], &rows)?;
        manifest.output(&path);
    } else {
        let msg = format!(
            "{} has no temporal attention; attention export skipped",
            cp.config().architecture
        );
        log::warn!("{msg}");
        eprintln!("notice: {msg}");
        manifest.note(msg);
    }
    Ok(())
}
