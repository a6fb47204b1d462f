use std::ops::RangeInclusive;

use super::panel::{is_binary, LoanPanel, Period, FEATURE_NAMES};
use super::DataError;

pub const LOWER_CAP: f64 = 1.0;
pub const UPPER_CAP: f64 = 99.0;

/// Percentile with linear interpolation between closest ranks
/// (rank `p/100 · (n − 1)` into the sorted values).
pub fn percentile(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty(), "percentile of an empty sample");
    let rank = p / 100.0 * (sorted.len() - 1) as f64;
    let lo = rank.floor() as usize;
    let hi = rank.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (rank - lo as f64)
}

pub fn median(sorted: &[f64]) -> f64 {
    percentile(sorted, 50.0)
}

/// Training statistics for one column.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureStats {
    pub name: String,
    pub binary: bool,
    /// Caps (identity bounds for binaries).
    pub lower: f64,
    pub upper: f64,
    /// Imputation value: median for numerics, mode for binaries.
    pub fill: f64,
    /// Min/max of the cleaned training values.
    pub min: f64,
    pub max: f64,
}

impl FeatureStats {
    pub fn clean(&self, v: Option<f64>) -> f64 {
        match v {
            None => self.fill,
            Some(x) if self.binary => x,
            Some(x) => x.clamp(self.lower, self.upper),
        }
    }

    pub fn scale(&self, x: f64) -> f64 {
        let range = self.max - self.min;
        if range <= 0.0 {
            return 0.0;
        }
        ((x - self.min) / range).clamp(0.0, 1.0)
    }
}

/// Cleaning and scaling statistics fitted on a training period range.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSpec {
    pub train_periods: (Period, Period),
    pub stats: Vec<FeatureStats>,
}

impl FeatureSpec {
    pub fn fit(panel: &LoanPanel, train: RangeInclusive<Period>) -> Result<Self, DataError> {
        let rows: Vec<_> = panel
            .records()
            .iter()
            .filter(|r| train.contains(&r.period))
            .collect();
        let mut stats = Vec::with_capacity(FEATURE_NAMES.len());
        for (k, name) in FEATURE_NAMES.iter().enumerate() {
            let mut values: Vec<f64> = rows.iter().filter_map(|r| r.features[k]).collect();
            if values.is_empty() {
                return Err(DataError::AllMissing(name.to_string()));
            }
            values.sort_by(f64::total_cmp);
            let binary = is_binary(k);
            let (lower, upper, fill) = if binary {
                let ones = values.iter().filter(|&&v| v == 1.0).count();
                (0.0, 1.0, if 2 * ones > values.len() { 1.0 } else { 0.0 })
            } else {
                (
                    percentile(&values, LOWER_CAP),
                    percentile(&values, UPPER_CAP),
                    median(&values),
                )
            };
            let mut s = FeatureStats {
                name: name.to_string(),
                binary,
                lower,
                upper,
                fill,
                min: 0.0,
                max: 0.0,
            };
            let cleaned: Vec<f64> = rows.iter().map(|r| s.clean(r.features[k])).collect();
            s.min = cleaned.iter().copied().fold(f64::INFINITY, f64::min);
            s.max = cleaned.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            stats.push(s);
        }
        Ok(Self {
            train_periods: (*train.start(), *train.end()),
            stats,
        })
    }

    /// Caps outliers and imputes missing values.
    pub fn clean(&self, panel: &LoanPanel) -> LoanPanel {
        panel.map_features(|k, v| Some(self.stats[k].clean(v)))
    }

    /// Min-max scales a cleaned panel into `[0, 1]`.
    pub fn scale(&self, panel: &LoanPanel) -> LoanPanel {
        panel.map_features(|k, v| {
            Some(self.stats[k].scale(v.expect("scale expects a cleaned panel")))
        })
    }

    /// Cleans then scales.
    pub fn transform(&self, panel: &LoanPanel) -> LoanPanel {
        panel.map_features(|k, v| Some(self.stats[k].scale(self.stats[k].clean(v))))
    }

    /// Scaled value of each feature's imputation fill: the masking baseline
    /// for attribution.
    pub fn scaled_medians(&self) -> Vec<f64> {
        self.stats.iter().map(|s| s.scale(s.fill)).collect()
    }

    /// Line-oriented text form; floats use Rust's round-trip formatting.
    pub fn render(&self) -> String {
        let mut out = format!(
            "train_periods {} {}\n",
            self.train_periods.0, self.train_periods.1
        );
        for s in &self.stats {
            out.push_str(&format!(
                "feature {} {} {} {} {} {} {}\n",
                s.name,
                if s.binary { "binary" } else { "numeric" },
                s.lower,
                s.upper,
                s.fill,
                s.min,
                s.max
            ));
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self, DataError> {
        let mut lines = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty());
        let bad = |line: usize, msg: &str| DataError::Parse {
            line: line + 1,
            msg: msg.to_string(),
        };
        let (n, first) = lines.next().ok_or_else(|| bad(0, "empty feature spec"))?;
        let parts: Vec<&str> = first.split_whitespace().collect();
        let train_periods = match parts.as_slice() {
            ["train_periods", a, b] => (a.parse()?, b.parse()?),
            _ => return Err(bad(n, "expected train_periods")),
        };
        let mut stats = Vec::new();
        for (n, line) in lines {
            let parts: Vec<&str> = line.split_whitespace().collect();
            let ["feature", name, kind, rest @ ..] = parts.as_slice() else {
                return Err(bad(n, "expected a feature line"));
            };
            if rest.len() != 5 {
                return Err(bad(n, "expected five statistics"));
            }
            let nums: Vec<f64> = rest
                .iter()
                .map(|v| v.parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|_| bad(n, "bad number"))?;
            if nums.iter().any(|v| !v.is_finite()) {
                return Err(bad(n, "non-finite statistic"));
            }
            let binary = match *kind {
                "binary" => true,
                "numeric" => false,
                _ => return Err(bad(n, "kind must be binary or numeric")),
            };
            let k = stats.len();
            if FEATURE_NAMES.get(k) != Some(name) || is_binary(k) != binary {
                return Err(bad(n, "feature out of schema order"));
            }
            stats.push(FeatureStats {
                name: name.to_string(),
                binary,
                lower: nums[0],
                upper: nums[1],
                fill: nums[2],
                min: nums[3],
                max: nums[4],
            });
        }
        if stats.len() != FEATURE_NAMES.len() {
            return Err(bad(0, "feature spec is incomplete"));
        }
        Ok(Self {
            train_periods,
            stats,
        })
    }
}
