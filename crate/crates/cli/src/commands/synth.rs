use dymgnn::dataprep::{synth_generate, write_panel, Period, SynthSpec};

use super::Context;
use crate::config::RunConfig;
use crate::error::CliError;
use crate::manifest::RunManifest;

pub fn spec_from(cfg: &RunConfig) -> Result<SynthSpec, CliError> {
    let start: Period = cfg
        .str("start")
        .parse()
        .map_err(|e| CliError::Config(format!("start: {e}")))?;
    let spec = SynthSpec {
        loans: cfg.uint("loans")?,
        months: cfg.uint("months")?,
        areas: cfg.uint("areas")?,
        companies: cfg.uint("companies")?,
        base_rate: cfg.float("base_rate"),
        contagion: cfg.float("contagion"),
        seed: cfg.u64("seed")?,
        start,
        horizon: cfg.uint("horizon")?,
    };
    spec.validate()
        .map_err(|e| CliError::Config(e.to_string()))?;
    Ok(spec)
}

pub fn run(ctx: &Context, cfg: &RunConfig, manifest: &mut RunManifest) -> Result<(), CliError> {
    let spec = spec_from(cfg)?;
    let start = std::time::Instant::now();
    let panel = synth_generate(&spec)?;
    let mut bytes = Vec::new();
    write_panel(&panel, &mut bytes)?;
    let out = ctx.path(&cfg.str("output"));
    if let Some(parent) = out.parent() {
        std::fs::create_dir_all(parent)?;
    }
    dymgnn::fsutil::write_atomic(&out, &bytes)?;
    manifest.output(&out);
    manifest.timing("generate", start.elapsed().as_secs_f64());
    manifest.note(format!(
        "{} rows for {} loans",
        panel.len(),
        panel.loan_count()
    ));
    log::info!("wrote {} rows to {}", panel.len(), out.display());
    Ok(())
}
