//! On-disk window datasets.
//!
//! ```text
//! <dir>/manifest.txt          index, snapshot months, node and default counts
//! <dir>/feature_spec.txt      fitted cleaning/scaling statistics
//! <dir>/window_000/graph.txt  topology header, plus one <layer>.edges per layer
//! <dir>/window_000/meta.txt   periods and isolation settings
//! <dir>/window_000/features.csv, labels.csv
//! ```
//!
//! Edge lists are stored before isolation; isolation is applied when a
//! window is materialized.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use super::features::FeatureSpec;
use super::panel::{Period, FEATURE_NAMES};
use super::windows::{BuiltWindow, WindowDataset};
use super::DataError;
use crate::graph::io::{read_topology, write_topology};
use crate::tensor::DenseMatrix;

pub const MANIFEST_FILE: &str = "manifest.txt";
pub const SPEC_FILE: &str = "feature_spec.txt";
pub const META_FILE: &str = "meta.txt";
pub const FEATURES_FILE: &str = "features.csv";
pub const LABELS_FILE: &str = "labels.csv";

pub fn window_dir(root: &Path, index: usize) -> PathBuf {
    root.join(format!("window_{index:03}"))
}

pub fn render_manifest(ds: &WindowDataset) -> String {
    let mut out = format!(
        "layers {}\nindex first_period last_period nodes defaults\n",
        ds.layer_names.join(",")
    );
    for w in &ds.windows {
        out.push_str(&format!(
            "{} {} {} {} {}\n",
            w.index,
            w.periods[0],
            w.periods[w.periods.len() - 1],
            w.n(),
            w.defaults()
        ));
    }
    for (start, reason) in &ds.dropped {
        out.push_str(&format!("# dropped {start}: {reason}\n"));
    }
    out
}

fn render_meta(w: &BuiltWindow) -> String {
    let periods: Vec<String> = w.periods.iter().map(|p| p.to_string()).collect();
    format!(
        "index {}\nperiods {}\nisolate_fraction {}\nisolation_seed {}\n",
        w.index,
        periods.join(","),
        w.isolate_fraction,
        w.isolation_seed
    )
}

pub struct WindowMeta {
    pub index: usize,
    pub periods: Vec<Period>,
    pub isolate_fraction: f64,
    pub isolation_seed: u64,
}

pub fn parse_meta(text: &str) -> Result<WindowMeta, DataError> {
    let mut index = None;
    let mut periods = None;
    let mut fraction = None;
    let mut seed = None;
    for (n, line) in text.lines().enumerate() {
        let bad = |msg: &str| DataError::Parse {
            line: n + 1,
            msg: msg.to_string(),
        };
        if line.trim().is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once(' ')
            .ok_or_else(|| bad("expected `key value`"))?;
        match key {
            "index" => index = Some(value.parse().map_err(|_| bad("bad index"))?),
            "periods" => {
                periods = Some(
                    value
                        .split(',')
                        .map(str::parse)
                        .collect::<Result<Vec<Period>, _>>()?,
                );
            }
            "isolate_fraction" => {
                let f: f64 = value.parse().map_err(|_| bad("bad fraction"))?;
                if !(0.0..=1.0).contains(&f) {
                    return Err(bad("fraction outside [0, 1]"));
                }
                fraction = Some(f);
            }
            "isolation_seed" => seed = Some(value.parse().map_err(|_| bad("bad seed"))?),
            _ => return Err(bad("unknown key")),
        }
    }
    let missing = |k: &str| DataError::Parse {
        line: 0,
        msg: format!("missing {k}"),
    };
    let periods: Vec<Period> = periods.ok_or_else(|| missing("periods"))?;
    if periods.is_empty() {
        return Err(missing("periods"));
    }
    Ok(WindowMeta {
        index: index.ok_or_else(|| missing("index"))?,
        periods,
        isolate_fraction: fraction.ok_or_else(|| missing("isolate_fraction"))?,
        isolation_seed: seed.ok_or_else(|| missing("isolation_seed"))?,
    })
}

fn write_features(w: &BuiltWindow) -> Result<Vec<u8>, DataError> {
    let mut out = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| DataError::Csv(e.to_string());
    let mut head = vec!["loan_id", "period"];
    head.extend(FEATURE_NAMES);
    out.write_record(&head).map_err(csv_err)?;
    for (period, f) in w.periods.iter().zip(&w.features) {
        for (i, id) in w.loan_ids.iter().enumerate() {
            let mut row = vec![id.clone(), period.to_string()];
            row.extend(f.row(i).iter().map(|v| v.to_string()));
            out.write_record(&row).map_err(csv_err)?;
        }
    }
    out.into_inner().map_err(|e| DataError::Io(e.to_string()))
}

/// Parses `features.csv` for a window of `tau` snapshots. Rows must appear
/// snapshot by snapshot with the same loan order in every snapshot.
pub fn parse_window_features(
    text: &str,
    periods: &[Period],
) -> Result<(Vec<String>, Vec<DenseMatrix>), DataError> {
    let mut rdr = csv::ReaderBuilder::new().from_reader(text.as_bytes());
    let headers = rdr
        .headers()
        .map_err(|e| DataError::Csv(e.to_string()))?
        .clone();
    let expected: Vec<&str> = ["loan_id", "period"]
        .into_iter()
        .chain(FEATURE_NAMES)
        .collect();
    if headers.iter().collect::<Vec<_>>() != expected {
        return Err(DataError::Schema(
            "features.csv header does not match the schema".into(),
        ));
    }
    let mut rows: Vec<(String, Period, Vec<f64>)> = Vec::new();
    for (n, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| DataError::Csv(e.to_string()))?;
        let bad = |msg: &str| DataError::Parse {
            line: n + 2,
            msg: msg.to_string(),
        };
        let period: Period = rec[1].parse()?;
        let values = rec
            .iter()
            .skip(2)
            .map(|v| v.parse::<f64>().ok().filter(|x| x.is_finite()))
            .collect::<Option<Vec<f64>>>()
            .ok_or_else(|| bad("non-numeric feature"))?;
        rows.push((rec[0].to_string(), period, values));
    }
    let tau = periods.len();
    if tau == 0 || !rows.len().is_multiple_of(tau) {
        return Err(DataError::Schema(
            "feature rows do not divide into snapshots".into(),
        ));
    }
    let n = rows.len() / tau;
    let ids: Vec<String> = rows[..n].iter().map(|r| r.0.clone()).collect();
    let mut mats = Vec::with_capacity(tau);
    for (t, chunk) in rows.chunks(n.max(1)).enumerate() {
        if chunk
            .iter()
            .zip(&ids)
            .any(|(r, id)| &r.0 != id || r.1 != periods[t])
        {
            return Err(DataError::Schema(format!(
                "snapshot {t} rows are out of order"
            )));
        }
        let values = chunk.iter().flat_map(|r| r.2.iter().copied()).collect();
        mats.push(DenseMatrix::from_vec(n, FEATURE_NAMES.len(), values)?);
    }
    Ok((ids, mats))
}

pub fn parse_labels(text: &str, ids: &[String]) -> Result<Vec<f64>, DataError> {
    let mut rdr = csv::ReaderBuilder::new().from_reader(text.as_bytes());
    let mut labels = Vec::with_capacity(ids.len());
    for (n, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| DataError::Csv(e.to_string()))?;
        let bad = |msg: &str| DataError::Parse {
            line: n + 2,
            msg: msg.to_string(),
        };
        if rec.len() != 2 {
            return Err(bad("expected loan_id,default"));
        }
        if ids.get(n).map(String::as_str) != Some(&rec[0]) {
            return Err(bad("label rows must follow the node order"));
        }
        labels.push(match &rec[1] {
            "0" => 0.0,
            "1" => 1.0,
            _ => return Err(bad("label must be 0 or 1")),
        });
    }
    if labels.len() != ids.len() {
        return Err(DataError::Schema(format!(
            "{} labels for {} nodes",
            labels.len(),
            ids.len()
        )));
    }
    Ok(labels)
}

/// Writes the dataset; existing window directories are replaced.
pub fn write_dataset(root: &Path, ds: &WindowDataset, spec: &FeatureSpec) -> Result<(), DataError> {
    fs::create_dir_all(root)?;
    fs::write(root.join(SPEC_FILE), spec.render())?;
    for w in &ds.windows {
        let dir = window_dir(root, w.index);
        if dir.exists() {
            fs::remove_dir_all(&dir)?;
        }
        fs::create_dir_all(&dir)?;
        write_topology(&dir, &w.topology)?;
        fs::write(dir.join(META_FILE), render_meta(w))?;
        fs::write(dir.join(FEATURES_FILE), write_features(w)?)?;
        let mut labels = String::from("loan_id,default\n");
        for (id, y) in w.loan_ids.iter().zip(&w.labels) {
            labels.push_str(&format!("{id},{}\n", *y as u8));
        }
        fs::write(dir.join(LABELS_FILE), labels)?;
    }
    fs::write(root.join(MANIFEST_FILE), render_manifest(ds))?;
    Ok(())
}

pub fn read_window(dir: &Path) -> Result<BuiltWindow, DataError> {
    let meta = parse_meta(&fs::read_to_string(dir.join(META_FILE))?)?;
    let topology = read_topology(dir)?;
    let (loan_ids, features) =
        parse_window_features(&fs::read_to_string(dir.join(FEATURES_FILE))?, &meta.periods)?;
    if loan_ids.len() != topology.n() {
        return Err(DataError::Schema(format!(
            "{} feature rows for n = {}",
            loan_ids.len(),
            topology.n()
        )));
    }
    let labels = parse_labels(&fs::read_to_string(dir.join(LABELS_FILE))?, &loan_ids)?;
    Ok(BuiltWindow {
        index: meta.index,
        periods: meta.periods,
        loan_ids,
        topology: Arc::new(topology),
        features,
        labels,
        isolate_fraction: meta.isolate_fraction,
        isolation_seed: meta.isolation_seed,
    })
}

pub fn read_feature_spec(root: &Path) -> Result<FeatureSpec, DataError> {
    FeatureSpec::parse(&fs::read_to_string(root.join(SPEC_FILE))?)
}

/// Indices of the windows present under `root`, ascending.
pub fn list_windows(root: &Path) -> Result<Vec<usize>, DataError> {
    let mut out = Vec::new();
    for entry in fs::read_dir(root)? {
        let name = entry?.file_name();
        if let Some(idx) = name
            .to_str()
            .and_then(|s| s.strip_prefix("window_"))
            .and_then(|s| s.parse().ok())
        {
            out.push(idx);
        }
    }
    out.sort_unstable();
    Ok(out)
}
