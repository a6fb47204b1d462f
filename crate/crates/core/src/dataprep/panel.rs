use std::collections::BTreeSet;
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use super::DataError;

/// Predictor columns of the panel schema, in file order.
pub const FEATURE_NAMES: [&str; 16] = [
    "fico",
    "if_fthb",
    "mi_pct",
    "cnt_units",
    "if_prim_res",
    "dti",
    "ltv",
    "if_corr",
    "if_sf",
    "if_purc",
    "cnt_borr",
    "if_sc",
    "current_upb",
    "if_delq_sts",
    "mths_remng",
    "current_int_rt",
];

/// Columns that change month to month.
pub const BEHAVIOURAL: [&str; 4] = ["current_upb", "if_delq_sts", "mths_remng", "current_int_rt"];

pub const ID_COLUMN: &str = "loan_id";
pub const PERIOD_COLUMN: &str = "period";
pub const ZIP_COLUMN: &str = "zip";
pub const COMPANY_COLUMN: &str = "company";
pub const LABEL_COLUMN: &str = "default";

pub fn feature_index(name: &str) -> Option<usize> {
    FEATURE_NAMES.iter().position(|&f| f == name)
}

pub fn is_binary(index: usize) -> bool {
    FEATURE_NAMES[index].starts_with("if_")
}

pub fn behavioural_indices() -> Vec<usize> {
    BEHAVIOURAL
        .iter()
        .map(|b| feature_index(b).expect("behavioural names are features"))
        .collect()
}

/// Full header line of the panel CSV.
pub fn header() -> Vec<&'static str> {
    let mut h = vec![ID_COLUMN, PERIOD_COLUMN];
    h.extend(FEATURE_NAMES);
    h.extend([ZIP_COLUMN, COMPANY_COLUMN, LABEL_COLUMN]);
    h
}

/// Calendar month, ordered.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Period(i32);

impl Period {
    pub fn new(year: i32, month: u32) -> Option<Self> {
        (1..=12)
            .contains(&month)
            .then(|| Period(year * 12 + month as i32 - 1))
    }

    pub fn year(self) -> i32 {
        self.0.div_euclid(12)
    }

    pub fn month(self) -> u32 {
        self.0.rem_euclid(12) as u32 + 1
    }

    pub fn offset(self, months: i32) -> Self {
        Period(self.0 + months)
    }

    /// `self − earlier` in months.
    pub fn months_since(self, earlier: Period) -> i32 {
        self.0 - earlier.0
    }
}

impl fmt::Display for Period {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}-{:02}", self.year(), self.month())
    }
}

impl FromStr for Period {
    type Err = DataError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || DataError::Period(s.to_string());
        let (y, m) = s.split_once('-').ok_or_else(bad)?;
        if y.len() != 4 || m.len() != 2 {
            return Err(bad());
        }
        let year: i32 = y.parse().map_err(|_| bad())?;
        let month: u32 = m.parse().map_err(|_| bad())?;
        Period::new(year, month).ok_or_else(bad)
    }
}

/// One loan-month. Missing predictor values are `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct LoanRecord {
    pub loan_id: String,
    pub period: Period,
    pub features: Vec<Option<f64>>,
    pub zip: String,
    pub company: String,
    /// 90+ days in arrears within the label horizon after this month.
    pub default: bool,
}

impl LoanRecord {
    /// Feature values, panicking on missing entries; for cleaned panels.
    pub fn values(&self) -> Vec<f64> {
        self.features
            .iter()
            .map(|v| v.expect("cleaned panel has no missing values"))
            .collect()
    }
}

/// Loan-month records sorted by `(loan_id, period)`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LoanPanel {
    records: Vec<LoanRecord>,
}

impl LoanPanel {
    /// Sorts the records and rejects duplicate `(loan, period)` keys.
    pub fn new(mut records: Vec<LoanRecord>) -> Result<Self, DataError> {
        for r in &records {
            if r.features.len() != FEATURE_NAMES.len() {
                return Err(DataError::Schema(format!(
                    "record for {} has {} features",
                    r.loan_id,
                    r.features.len()
                )));
            }
        }
        records.sort_by(|a, b| (&a.loan_id, a.period).cmp(&(&b.loan_id, b.period)));
        if let Some(w) = records
            .windows(2)
            .find(|w| w[0].loan_id == w[1].loan_id && w[0].period == w[1].period)
        {
            return Err(DataError::Duplicate {
                loan: w[0].loan_id.clone(),
                period: w[0].period.to_string(),
            });
        }
        Ok(Self { records })
    }

    pub fn records(&self) -> &[LoanRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn loan_count(&self) -> usize {
        self.records
            .iter()
            .map(|r| &r.loan_id)
            .collect::<BTreeSet<_>>()
            .len()
    }

    /// Distinct periods in ascending order.
    pub fn periods(&self) -> Vec<Period> {
        self.records
            .iter()
            .map(|r| r.period)
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect()
    }

    pub(crate) fn map_features(
        &self,
        mut f: impl FnMut(usize, Option<f64>) -> Option<f64>,
    ) -> Self {
        let records = self
            .records
            .iter()
            .map(|r| LoanRecord {
                features: r
                    .features
                    .iter()
                    .enumerate()
                    .map(|(k, &v)| f(k, v))
                    .collect(),
                ..r.clone()
            })
            .collect();
        Self { records }
    }
}

/// A row that could not be parsed, with its 1-based line number.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Reject {
    pub line: u64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ingested {
    pub panel: LoanPanel,
    pub rejects: Vec<Reject>,
}

/// Parses a panel CSV. Columns may appear in any order; every schema
/// column is mandatory and extra columns are ignored. Malformed rows are
/// collected as rejects.
pub fn ingest_panel<R: Read>(reader: R) -> Result<Ingested, DataError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| DataError::Csv(e.to_string()))?
        .clone();
    let position = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| DataError::MissingColumn(name.to_string()))
    };
    let cols: Vec<usize> = header()
        .iter()
        .map(|h| position(h))
        .collect::<Result<_, _>>()?;
    let (id_col, period_col) = (cols[0], cols[1]);
    let feature_cols = &cols[2..2 + FEATURE_NAMES.len()];
    let (zip_col, company_col, label_col) = (cols[18], cols[19], cols[20]);

    let mut records = Vec::new();
    let mut rejects = Vec::new();
    for row in rdr.records() {
        let row = match row {
            Ok(r) => r,
            Err(e) => {
                let line = e.position().map_or(0, |p| p.line());
                rejects.push(Reject {
                    line,
                    reason: e.to_string(),
                });
                continue;
            }
        };
        let line = row.position().map_or(0, |p| p.line());
        let field = |c: usize| row.get(c).map(str::trim);
        let parsed = (|| -> Result<LoanRecord, String> {
            let loan_id = field(id_col)
                .filter(|s| !s.is_empty())
                .ok_or("missing loan_id")?
                .to_string();
            let period: Period = field(period_col)
                .ok_or("missing period")?
                .parse()
                .map_err(|e: DataError| e.to_string())?;
            let mut features = Vec::with_capacity(FEATURE_NAMES.len());
            for (k, &c) in feature_cols.iter().enumerate() {
                let raw = field(c).ok_or_else(|| format!("missing column {}", FEATURE_NAMES[k]))?;
                if raw.is_empty() {
                    features.push(None);
                    continue;
                }
                let v: f64 = raw
                    .parse()
                    .map_err(|_| format!("{}: not a number: {raw:?}", FEATURE_NAMES[k]))?;
                if !v.is_finite() {
                    return Err(format!("{}: non-finite value", FEATURE_NAMES[k]));
                }
                if is_binary(k) && v != 0.0 && v != 1.0 {
                    return Err(format!("{}: binary field holds {raw}", FEATURE_NAMES[k]));
                }
                features.push(Some(v));
            }
            let zip = field(zip_col).ok_or("missing zip")?.to_string();
            let company = field(company_col).ok_or("missing company")?.to_string();
            let default = match field(label_col) {
                Some("0") => false,
                Some("1") => true,
                other => {
                    return Err(format!(
                        "default must be 0 or 1, got {:?}",
                        other.unwrap_or("")
                    ))
                }
            };
            Ok(LoanRecord {
                loan_id,
                period,
                features,
                zip,
                company,
                default,
            })
        })();
        match parsed {
            Ok(r) => records.push(r),
            Err(reason) => rejects.push(Reject { line, reason }),
        }
    }
    Ok(Ingested {
        panel: LoanPanel::new(records)?,
        rejects,
    })
}

fn format_value(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| x.to_string())
}

/// Writes the panel in schema order; missing values become empty fields.
pub fn write_panel<W: Write>(panel: &LoanPanel, writer: W) -> Result<(), DataError> {
    let mut w = csv::Writer::from_writer(writer);
    let csv_err = |e: csv::Error| DataError::Csv(e.to_string());
    w.write_record(header()).map_err(csv_err)?;
    for r in panel.records() {
        let mut row = vec![r.loan_id.clone(), r.period.to_string()];
        row.extend(r.features.iter().map(|&v| format_value(v)));
        row.extend([
            r.zip.clone(),
            r.company.clone(),
            (r.default as u8).to_string(),
        ]);
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush().map_err(|e| DataError::Io(e.to_string()))
}
