//! Seeded synthetic loan panels with a planted network effect.
//!
//! Static features follow the published marginal statistics of the
//! single-family loan sample. A monthly delinquency process carries
//! area/company shocks, and the default hazard rises with the share of
//! delinquent loans sharing an area or company with the borrower. Both
//! network channels scale with `contagion`; at zero, loans are independent.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal, Normal};

use super::panel::{feature_index, LoanPanel, LoanRecord, Period, FEATURE_NAMES};
use super::windows::horizon_label;
use super::DataError;

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub loans: usize,
    pub months: usize,
    pub areas: usize,
    pub companies: usize,
    /// Target share of loans that default within the observed months.
    pub base_rate: f64,
    pub contagion: f64,
    pub seed: u64,
    pub start: Period,
    pub horizon: usize,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            loans: 2000,
            months: 18,
            areas: 60,
            companies: 40,
            base_rate: 0.05,
            contagion: 2.0,
            seed: 0,
            start: Period::new(2012, 1).expect("valid month"),
            horizon: 12,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<(), DataError> {
        let bad = |m: &str| Err(DataError::Schema(m.to_string()));
        if self.loans == 0 || self.months == 0 || self.areas == 0 || self.companies == 0 {
            return bad("loans, months, areas and companies must be positive");
        }
        if self.areas > 90 {
            return bad("at most 90 areas (two-digit zip prefixes 10..99)");
        }
        if !(0.0..=1.0).contains(&self.base_rate) {
            return bad("base rate must lie in [0, 1]");
        }
        if !(self.contagion.is_finite() && self.contagion >= 0.0) {
            return bad("contagion weight must be finite and non-negative");
        }
        Ok(())
    }
}

// Untruncated normal whose truncation to [565, 832] has mean 752.76 and
// standard deviation 44.75.
const FICO_MU: f64 = 762.421_211_414;
const FICO_SIGMA: f64 = 52.665_108_826;
// Log-normal matching mean 173,036.60 and standard deviation 97,258.30.
const UPB_MU: f64 = 11.923_990_314;
const UPB_SIGMA: f64 = 0.523_962_018;

const DELINQ_INTERCEPT: f64 = -3.6;
const DELINQ_PERSISTENCE: f64 = 2.8;
const DELINQ_RISK: f64 = 0.8;
const SHOCK_PHI: f64 = 0.9;
const SHOCK_SCALE: f64 = 0.5;
const HAZARD_RISK: f64 = 0.8;
const HAZARD_DELINQ: f64 = 2.0;

fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

struct Loan {
    features: Vec<f64>,
    area: usize,
    company: usize,
    zip: String,
    risk: f64,
}

fn truncated(rng: &mut ChaCha8Rng, dist: Normal<f64>, lo: f64, hi: f64) -> f64 {
    loop {
        let v = dist.sample(rng);
        if (lo..=hi).contains(&v) {
            return v;
        }
    }
}

fn draw_loan(rng: &mut ChaCha8Rng, spec: &SynthSpec) -> Loan {
    let normal = |m: f64, s: f64| Normal::new(m, s).expect("positive sigma");
    let bern = |rng: &mut ChaCha8Rng, p: f64| rng.gen_bool(p) as u8 as f64;
    let fico = truncated(rng, normal(FICO_MU, FICO_SIGMA), 565.0, 832.0).round();
    let fthb = bern(rng, 0.137);
    let mi_pct = if rng.gen_bool(0.117) {
        rng.gen_range(6.0f64..=35.0).round()
    } else {
        0.0
    };
    let cnt_units = if rng.gen_bool(0.01) {
        rng.gen_range(2..=4) as f64
    } else {
        1.0
    };
    let prim_res = bern(rng, 0.914);
    let dti = normal(33.61, 11.15).sample(rng).clamp(1.0, 65.0).round();
    let ltv = normal(69.30, 16.07).sample(rng).clamp(7.0, 97.0).round();
    let corr = bern(rng, 0.397);
    let sf = bern(rng, 0.716);
    let purc = bern(rng, 0.358);
    let cnt_borr = 1.0 + bern(rng, 0.5);
    let sc = bern(rng, 0.0094);
    let upb = LogNormal::new(UPB_MU, UPB_SIGMA)
        .expect("positive sigma")
        .sample(rng)
        .clamp(13_829.33, 716_617.5);
    let mths = normal(304.58, 65.55).sample(rng).clamp(73.0, 574.0).round();
    let rate = (normal(4.88, 0.45).sample(rng).clamp(3.25, 7.25) * 8.0).round() / 8.0;
    let area = rng.gen_range(0..spec.areas);
    let company = rng.gen_range(0..spec.companies);
    let zip = format!("{:02}{:03}", 10 + area, rng.gen_range(0..1000));
    let risk = -0.9 * (fico - 752.76) / 44.75
        + 0.5 * (dti - 33.61) / 11.15
        + 0.5 * (ltv - 69.30) / 16.07
        + 0.3 * fthb
        - 0.3 * prim_res
        + 0.5 * normal(0.0, 1.0).sample(rng);
    let features = vec![
        fico, fthb, mi_pct, cnt_units, prim_res, dti, ltv, corr, sf, purc, cnt_borr, sc, upb, 0.0,
        mths, rate,
    ];
    Loan {
        features,
        area,
        company,
        zip,
        risk,
    }
}

/// Group shocks `g[t][group]`: stationary AR(1) with unit variance.
fn shocks(rng: &mut ChaCha8Rng, groups: usize, steps: usize) -> Vec<Vec<f64>> {
    let innov = Normal::new(0.0, (1.0 - SHOCK_PHI * SHOCK_PHI).sqrt()).expect("positive sigma");
    let unit = Normal::new(0.0, 1.0).expect("positive sigma");
    let mut g: Vec<f64> = (0..groups).map(|_| unit.sample(rng)).collect();
    let mut out = Vec::with_capacity(steps);
    for _ in 0..steps {
        out.push(g.clone());
        for v in g.iter_mut() {
            *v = SHOCK_PHI * *v + innov.sample(rng);
        }
    }
    out
}

/// Share of *other* members of each loan's group that are flagged.
fn neighbour_share(groups: &[usize], flagged: &[bool], count: usize) -> Vec<f64> {
    let mut size = vec![0usize; count];
    let mut hits = vec![0usize; count];
    for (&g, &f) in groups.iter().zip(flagged) {
        size[g] += 1;
        hits[g] += f as usize;
    }
    groups
        .iter()
        .zip(flagged)
        .map(|(&g, &f)| {
            if size[g] > 1 {
                (hits[g] - f as usize) as f64 / (size[g] - 1) as f64
            } else {
                0.0
            }
        })
        .collect()
}

struct Simulation {
    loans: Vec<Loan>,
    /// `delinquent[t][i]` for months `0..months + horizon`.
    delinquent: Vec<Vec<bool>>,
    default_draws: Vec<Vec<f64>>,
}

impl Simulation {
    fn new(spec: &SynthSpec) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        let steps = spec.months + spec.horizon;
        let loans: Vec<Loan> = (0..spec.loans).map(|_| draw_loan(&mut rng, spec)).collect();
        let area_shock = shocks(&mut rng, spec.areas, steps);
        let company_shock = shocks(&mut rng, spec.companies, steps);
        let mut delinquent = Vec::with_capacity(steps);
        let mut prev = vec![false; loans.len()];
        for t in 0..steps {
            let now: Vec<bool> = loans
                .iter()
                .zip(&prev)
                .map(|(loan, &p)| {
                    let shock = area_shock[t][loan.area] + company_shock[t][loan.company];
                    let z = DELINQ_INTERCEPT
                        + DELINQ_RISK * loan.risk
                        + DELINQ_PERSISTENCE * p as u8 as f64
                        + SHOCK_SCALE * spec.contagion * shock;
                    rng.gen::<f64>() < logistic(z)
                })
                .collect();
            delinquent.push(now.clone());
            prev = now;
        }
        let default_draws = (0..steps)
            .map(|_| (0..loans.len()).map(|_| rng.gen::<f64>()).collect())
            .collect();
        Self {
            loans,
            delinquent,
            default_draws,
        }
    }

    /// Default month (0-based) per loan under hazard intercept `b`. Loans
    /// that have defaulted count as delinquent for their neighbours.
    fn defaults(&self, spec: &SynthSpec, b: f64) -> Vec<Option<usize>> {
        let n = self.loans.len();
        let areas: Vec<usize> = self.loans.iter().map(|l| l.area).collect();
        let companies: Vec<usize> = self.loans.iter().map(|l| l.company).collect();
        let mut event: Vec<Option<usize>> = vec![None; n];
        for t in 1..self.delinquent.len() {
            let flagged: Vec<bool> = (0..n)
                .map(|i| event[i].is_some() || self.delinquent[t - 1][i])
                .collect();
            let by_area = neighbour_share(&areas, &flagged, spec.areas);
            let by_company = neighbour_share(&companies, &flagged, spec.companies);
            for i in 0..n {
                if event[i].is_some() {
                    continue;
                }
                let share = 0.5 * (by_area[i] + by_company[i]);
                let z = b
                    + HAZARD_RISK * self.loans[i].risk
                    + HAZARD_DELINQ * self.delinquent[t - 1][i] as u8 as f64
                    + spec.contagion * share;
                if self.default_draws[t][i] < logistic(z) {
                    event[i] = Some(t);
                }
            }
        }
        event
    }
}

/// Hazard intercept whose realized in-panel default share is closest to
/// the target, by bisection over common random draws.
fn calibrate(sim: &Simulation, spec: &SynthSpec) -> f64 {
    let share = |b: f64| {
        let ev = sim.defaults(spec, b);
        ev.iter()
            .filter(|e| e.is_some_and(|m| m < spec.months))
            .count() as f64
            / ev.len() as f64
    };
    let (mut lo, mut hi) = (-30.0, 10.0);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if share(mid) < spec.base_rate {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Generates a panel. A loan defaulting in month `m` is observed in months
/// before `m`; each row's `default` flag covers the following `horizon` months.
pub fn synth_generate(spec: &SynthSpec) -> Result<LoanPanel, DataError> {
    spec.validate()?;
    let sim = Simulation::new(spec);
    let b = calibrate(&sim, spec);
    let events = sim.defaults(spec, b);
    let (upb_k, delq_k, mths_k) = (
        feature_index("current_upb").expect("schema"),
        feature_index("if_delq_sts").expect("schema"),
        feature_index("mths_remng").expect("schema"),
    );
    let mut records = Vec::new();
    for (i, loan) in sim.loans.iter().enumerate() {
        let id = format!("L{i:06}");
        let company = format!("C{:03}", loan.company);
        let last = events[i].map_or(spec.months, |m| m.min(spec.months));
        let mut features = loan.features.clone();
        for t in 0..last {
            if t > 0 {
                let remaining = features[mths_k].max(1.0);
                features[upb_k] =
                    (features[upb_k] * (1.0 - 1.0 / remaining) * 100.0).round() / 100.0;
                features[mths_k] = (features[mths_k] - 1.0).max(0.0);
            }
            features[delq_k] = sim.delinquent[t][i] as u8 as f64;
            let period = spec.start.offset(t as i32);
            let event = events[i].map(|m| spec.start.offset(m as i32));
            records.push(LoanRecord {
                loan_id: id.clone(),
                period,
                features: features.iter().map(|&v| Some(v)).collect(),
                zip: loan.zip.clone(),
                company: company.clone(),
                default: horizon_label(event, period, spec.horizon),
            });
        }
    }
    debug_assert!(records
        .iter()
        .all(|r| r.features.len() == FEATURE_NAMES.len()));
    LoanPanel::new(records)
}
