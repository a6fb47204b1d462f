use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use super::panel::{LoanPanel, LoanRecord, Period, FEATURE_NAMES};
use super::DataError;
use crate::graph::{isolate_nodes, MultilayerTopology, SnapshotSequence};
use crate::model::LabeledWindow;
use crate::seed;
use crate::tensor::DenseMatrix;

/// Connector keys of one loan; `None` excludes the loan from that layer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Connectors {
    pub area: Option<String>,
    pub company: Option<String>,
}

/// Area key: the first two characters of the zip code, which must be digits.
pub fn area_key(zip: &str) -> Option<String> {
    let z = zip.trim();
    let prefix = z.get(..2)?;
    prefix
        .bytes()
        .all(|b| b.is_ascii_digit())
        .then(|| prefix.to_string())
}

/// Company key: trimmed and upper-cased; empty identifiers are absent.
pub fn company_key(company: &str) -> Option<String> {
    let c = company.trim();
    (!c.is_empty()).then(|| c.to_ascii_uppercase())
}

/// Connector keys per loan, taken from the loan's first record, plus the
/// loans whose zip was malformed.
pub fn derive_connectors(panel: &LoanPanel) -> (BTreeMap<String, Connectors>, Vec<String>) {
    let mut out = BTreeMap::new();
    let mut flagged = Vec::new();
    for r in panel.records() {
        out.entry(r.loan_id.clone()).or_insert_with(|| {
            let area = area_key(&r.zip);
            if area.is_none() {
                flagged.push(r.loan_id.clone());
            }
            Connectors {
                area,
                company: company_key(&r.company),
            }
        });
    }
    (out, flagged)
}

/// Every pair of positions sharing a key (cliques over key groups), `a < b`.
pub fn clique_edges(keys: &[Option<&str>]) -> Vec<(usize, usize)> {
    let mut groups: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, k) in keys.iter().enumerate() {
        if let Some(k) = k {
            groups.entry(k).or_default().push(i);
        }
    }
    let mut edges = Vec::new();
    for members in groups.values() {
        for (x, &a) in members.iter().enumerate() {
            for &b in &members[x + 1..] {
                edges.push((a, b));
            }
        }
    }
    edges.sort_unstable();
    edges
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LayerSelection {
    Area,
    Company,
    Both,
}

impl LayerSelection {
    pub fn names(self) -> Vec<String> {
        match self {
            LayerSelection::Area => vec!["area".into()],
            LayerSelection::Company => vec!["company".into()],
            LayerSelection::Both => vec!["area".into(), "company".into()],
        }
    }
}

impl fmt::Display for LayerSelection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LayerSelection::Area => "area",
            LayerSelection::Company => "company",
            LayerSelection::Both => "both",
        })
    }
}

impl FromStr for LayerSelection {
    type Err = DataError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "area" => Ok(LayerSelection::Area),
            "company" => Ok(LayerSelection::Company),
            "both" => Ok(LayerSelection::Both),
            _ => Err(DataError::Schema(format!(
                "layers must be area, company or both, got {s:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WindowOptions {
    pub window_len: usize,
    pub stride: usize,
    /// Months after the last snapshot covered by the label.
    pub horizon: usize,
    pub layers: LayerSelection,
    pub isolate_fraction: f64,
    pub seed: u64,
    /// Last month with observed outcomes; windows whose horizon runs past it
    /// are dropped.
    pub outcome_end: Option<Period>,
}

impl Default for WindowOptions {
    fn default() -> Self {
        Self {
            window_len: 6,
            stride: 1,
            horizon: 12,
            layers: LayerSelection::Both,
            isolate_fraction: 0.5,
            seed: 0,
            outcome_end: None,
        }
    }
}

/// Label rule: default iff the 90+ event falls in `(anchor, anchor + horizon]`.
pub fn horizon_label(event: Option<Period>, anchor: Period, horizon: usize) -> bool {
    event.is_some_and(|e| {
        let d = e.months_since(anchor);
        d >= 1 && d <= horizon as i32
    })
}

const ISOLATION_STREAM: u64 = 0x150;

/// One window before node isolation. Features are per loan (`n × d`) and
/// are replicated across layers when the window is materialized.
#[derive(Debug, Clone, PartialEq)]
pub struct BuiltWindow {
    pub index: usize,
    pub periods: Vec<Period>,
    pub loan_ids: Vec<String>,
    pub topology: Arc<MultilayerTopology>,
    pub features: Vec<DenseMatrix>,
    pub labels: Vec<f64>,
    pub isolate_fraction: f64,
    pub isolation_seed: u64,
}

impl BuiltWindow {
    pub fn n(&self) -> usize {
        self.loan_ids.len()
    }

    pub fn defaults(&self) -> usize {
        self.labels.iter().filter(|&&y| y == 1.0).count()
    }

    /// Snapshot sequence with replicated features and isolation applied.
    pub fn labeled(&self) -> Result<LabeledWindow, DataError> {
        self.labeled_with_seed(self.isolation_seed)
    }

    /// As `labeled`, with a different isolation draw.
    pub fn labeled_with_seed(&self, isolation_seed: u64) -> Result<LabeledWindow, DataError> {
        let l = self.topology.layers();
        let feats = self.features.iter().map(|f| f.tile_rows(l)).collect();
        let stamps = self.periods.iter().map(|p| p.to_string()).collect();
        let seq = SnapshotSequence::new(self.topology.clone(), feats, stamps)?;
        let seq = isolate_nodes(&seq, self.isolate_fraction, isolation_seed)?;
        Ok(LabeledWindow::new(seq, self.labels.clone())?)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WindowDataset {
    pub layer_names: Vec<String>,
    pub windows: Vec<BuiltWindow>,
    /// `(first period, reason)` for windows that were not built.
    pub dropped: Vec<(Period, String)>,
}

/// Rolling windows over the calendar span of `panel`. Nodes are loans
/// observed in every snapshot month, ordered by loan id; the label is the
/// panel's default flag at the last snapshot.
pub fn build_windows(panel: &LoanPanel, opts: &WindowOptions) -> Result<WindowDataset, DataError> {
    if opts.window_len == 0 || opts.stride == 0 {
        return Err(DataError::Schema(
            "window length and stride must be positive".into(),
        ));
    }
    if !(0.0..=1.0).contains(&opts.isolate_fraction) {
        return Err(DataError::Schema(format!(
            "isolate fraction {} outside [0, 1]",
            opts.isolate_fraction
        )));
    }
    let periods = panel.periods();
    let (Some(&first), Some(&last)) = (periods.first(), periods.last()) else {
        return Err(DataError::Schema("panel is empty".into()));
    };
    let span = last.months_since(first) as usize + 1;
    if span < opts.window_len {
        return Err(DataError::Schema(format!(
            "panel covers {span} months, window needs {}",
            opts.window_len
        )));
    }
    if panel
        .records()
        .iter()
        .any(|r| r.features.iter().any(Option::is_none))
    {
        return Err(DataError::Schema(
            "build_windows needs a cleaned panel without missing values".into(),
        ));
    }
    let layer_names = opts.layers.names();
    let (connectors, _) = derive_connectors(panel);

    let mut by_loan: BTreeMap<&str, HashMap<Period, &LoanRecord>> = BTreeMap::new();
    for r in panel.records() {
        by_loan
            .entry(r.loan_id.as_str())
            .or_default()
            .insert(r.period, r);
    }

    let mut windows = Vec::new();
    let mut dropped = Vec::new();
    for (index, start_offset) in (0..=span - opts.window_len)
        .step_by(opts.stride)
        .enumerate()
    {
        let start = first.offset(start_offset as i32);
        let months: Vec<Period> = (0..opts.window_len)
            .map(|t| start.offset(t as i32))
            .collect();
        let end = *months.last().expect("window_len > 0");
        if let Some(limit) = opts.outcome_end {
            if end.offset(opts.horizon as i32) > limit {
                let reason = format!("horizon ends after outcome data ({limit})");
                log::warn!("dropping window starting {start}: {reason}");
                dropped.push((start, reason));
                continue;
            }
        }
        let members: Vec<(&str, Vec<&LoanRecord>)> = by_loan
            .iter()
            .filter_map(|(id, recs)| {
                let rows: Option<Vec<&LoanRecord>> =
                    months.iter().map(|m| recs.get(m).copied()).collect();
                rows.map(|rows| (*id, rows))
            })
            .collect();
        if members.is_empty() {
            log::warn!("dropping window starting {start}: no loan observed in every month");
            dropped.push((start, "no complete loans".into()));
            continue;
        }
        let n = members.len();
        let key_of = |id: &str, layer: &str| -> Option<String> {
            let c = &connectors[id];
            match layer {
                "area" => c.area.clone(),
                _ => c.company.clone(),
            }
        };
        let layer_edges: Vec<Vec<(usize, usize)>> = layer_names
            .iter()
            .map(|layer| {
                let keys: Vec<Option<String>> =
                    members.iter().map(|(id, _)| key_of(id, layer)).collect();
                let refs: Vec<Option<&str>> = keys.iter().map(|k| k.as_deref()).collect();
                clique_edges(&refs)
            })
            .collect();
        let topology = Arc::new(MultilayerTopology::new(
            n,
            layer_names.clone(),
            &layer_edges,
        )?);
        let d = FEATURE_NAMES.len();
        let features = (0..opts.window_len)
            .map(|t| {
                let values = members
                    .iter()
                    .flat_map(|(_, rows)| rows[t].values())
                    .collect();
                DenseMatrix::from_vec(n, d, values).expect("n × d values")
            })
            .collect();
        let labels = members
            .iter()
            .map(|(_, rows)| rows[opts.window_len - 1].default as u8 as f64)
            .collect();
        windows.push(BuiltWindow {
            index,
            periods: months,
            loan_ids: members.iter().map(|(id, _)| id.to_string()).collect(),
            topology,
            features,
            labels,
            isolate_fraction: opts.isolate_fraction,
            isolation_seed: seed::derive(opts.seed, ISOLATION_STREAM, index as u64),
        });
    }
    Ok(WindowDataset {
        layer_names,
        windows,
        dropped,
    })
}
