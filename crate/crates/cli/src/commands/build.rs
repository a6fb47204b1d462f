use std::fs::File;

use dymgnn::dataprep::{
    build_windows, ingest_panel, render_manifest, write_dataset, FeatureSpec, LayerSelection,
    Period, WindowOptions, MANIFEST_FILE,
};

use super::{ensure_exists, write_csv, Context};
use crate::config::RunConfig;
use crate::error::CliError;
use crate::manifest::RunManifest;

fn period(cfg: &RunConfig, key: &str) -> Result<Option<Period>, CliError> {
    cfg.opt_str(key)
        .map(|s| {
            s.parse()
                .map_err(|e| CliError::Config(format!("{key}: {e}")))
        })
        .transpose()
}

pub fn run(ctx: &Context, cfg: &RunConfig, manifest: &mut RunManifest) -> Result<(), CliError> {
    let layers: LayerSelection = cfg
        .str("layers")
        .parse()
        .map_err(|e| CliError::Config(format!("layers: {e}")))?;
    let isolate_fraction = cfg.float("isolate_fraction");
    if !(0.0..=1.0).contains(&isolate_fraction) {
        return Err(CliError::Config(
            "isolate_fraction must lie in [0, 1]".into(),
        ));
    }
    let opts = WindowOptions {
        window_len: cfg.uint("window_len")?,
        stride: cfg.uint("stride")?,
        horizon: cfg.uint("horizon")?,
        layers,
        isolate_fraction,
        seed: cfg.u64("seed")?,
        outcome_end: period(cfg, "outcome_end")?,
    };
    if opts.window_len == 0 || opts.stride == 0 {
        return Err(CliError::Config(
            "window_len and stride must be positive".into(),
        ));
    }
    let panel_path = ctx.path(&cfg.str("panel"));
    ensure_exists(&panel_path, "panel")?;
    manifest.input(&panel_path)?;

    let start = std::time::Instant::now();
    let ingested = ingest_panel(File::open(&panel_path)?)?;
    let out = ctx.path(&cfg.str("output"));
    std::fs::create_dir_all(&out)?;
    if !ingested.rejects.is_empty() {
        log::warn!("{} panel rows rejected", ingested.rejects.len());
        let rows: Vec<Vec<String>> = ingested
            .rejects
            .iter()
            .map(|r| vec![r.line.to_string(), r.reason.clone()])
            .collect();
        let path = out.join("rejects.csv");
        write_csv(&path, &["line", "reason"], &rows)?;
        manifest.output(&path);
        manifest.note(format!("{} rows rejected", rows.len()));
    }
    let panel = ingested.panel;
    let periods = panel.periods();
    let (Some(&first), Some(&last)) = (periods.first(), periods.last()) else {
        return Err(CliError::Data("panel has no rows".into()));
    };
    let lo = period(cfg, "scaling_start")?.unwrap_or(first);
    let hi = period(cfg, "scaling_end")?.unwrap_or(last);
    let spec = FeatureSpec::fit(&panel, lo..=hi)?;
    let dataset = build_windows(&spec.transform(&panel), &opts)?;
    for (p, reason) in &dataset.dropped {
        manifest.note(format!("dropped window starting {p}: {reason}"));
    }
    write_dataset(&out, &dataset, &spec)?;
    manifest.output(&out);
    manifest.timing("build", start.elapsed().as_secs_f64());
    manifest.note(format!(
        "{} windows over layers {}",
        dataset.windows.len(),
        dataset.layer_names.join(",")
    ));
    log::info!(
        "{}",
        render_manifest(&dataset).lines().next().unwrap_or_default()
    );
    log::info!(
        "wrote {} windows to {} (see {MANIFEST_FILE})",
        dataset.windows.len(),
        out.display()
    );
    Ok(())
}
