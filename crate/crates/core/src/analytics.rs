//! Measurements over the primary ledger: monetary base, velocity, flow
//! series, storage and capacity arithmetic, and periodic-signal detection.

use std::collections::BTreeMap;

use chrono::{Datelike, NaiveDate};
use thiserror::Error;

use crate::ledger::{BlockFilter, PrimaryLedger};
use crate::model::{ConceptCode, Money, PrimaryBlock, RegionCode, Timestamp};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AnalyticsError {
    #[error("window is empty")]
    EmptyWindow,
    #[error("series of length {len} is shorter than three candidate periods of {period}")]
    SeriesTooShort { len: usize, period: usize },
    #[error("candidate period must be at least 2")]
    BadPeriod,
    #[error("monetary base is zero over a window with transactions")]
    ZeroBase,
}

/// Party codes whose holdings are outside the monetary base: issuance and
/// extinction accounts, the central bank reserve, and the print sink.
pub fn outside_base(code: &str) -> bool {
    code.ends_with("-MC")
        || code.ends_with("-MX")
        || matches!(code, "GOV-AA0" | "GOV-AA9" | "GOV-AA1" | "GOV-AA6B")
}

/// Change in the monetary base caused by one block.
pub fn base_delta(b: &PrimaryBlock) -> i128 {
    let inside = |code: &str| i128::from(!outside_base(code));
    (inside(&b.payee.code) - inside(&b.payer.code)) * b.amount.cents() as i128
}

/// A block between two holders inside the base; money creation, extinction
/// and reserve moves are excluded from transaction volume.
pub fn is_circulating(b: &PrimaryBlock) -> bool {
    !outside_base(&b.payer.code) && !outside_base(&b.payee.code)
}

/// Base as of the chain prefix up to and including `at`.
pub fn monetary_base(primary: &PrimaryLedger, at: Timestamp) -> Money {
    let total: i128 = primary.blocks().iter().filter(|b| b.timestamp.secs() <= at.secs()).map(base_delta).sum();
    Money::from_cents(total.max(0) as u64)
}

/// End-of-day base for each day in `[first, last]`.
pub fn daily_base(primary: &PrimaryLedger, first: i64, last: i64) -> Vec<(i64, Money)> {
    let mut per_day: BTreeMap<i64, i128> = BTreeMap::new();
    let mut before = 0i128;
    for b in primary.blocks() {
        let day = b.timestamp.day_number();
        if day < first {
            before += base_delta(b);
        } else if day <= last {
            *per_day.entry(day).or_default() += base_delta(b);
        }
    }
    let mut running = before;
    (first..=last)
        .map(|d| {
            running += per_day.get(&d).copied().unwrap_or(0);
            (d, Money::from_cents(running.max(0) as u64))
        })
        .collect()
}

/// Circulating volume over the window divided by the mean end-of-day base.
pub fn velocity(primary: &PrimaryLedger, first: i64, last: i64) -> Result<f64, AnalyticsError> {
    if last < first {
        return Err(AnalyticsError::EmptyWindow);
    }
    let volume: u64 = primary
        .blocks()
        .iter()
        .filter(|b| (first..=last).contains(&b.timestamp.day_number()) && is_circulating(b))
        .map(|b| b.amount.cents())
        .sum();
    let base = daily_base(primary, first, last);
    let mean = base.iter().map(|(_, m)| m.cents() as f64).sum::<f64>() / base.len() as f64;
    if volume == 0 {
        return Ok(0.0);
    }
    if mean == 0.0 {
        return Err(AnalyticsError::ZeroBase);
    }
    Ok(volume as f64 / mean)
}

pub const BYTES_PER_CENT: u64 = 8;

pub fn storage_bytes(amount: Money) -> u128 {
    amount.cents() as u128 * BYTES_PER_CENT as u128
}

/// Rounds to `digits` significant figures.
pub fn round_to_sig(x: f64, digits: u32) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    let scale = 10f64.powi(digits as i32 - 1 - x.abs().log10().floor() as i32);
    (x * scale).round() / scale
}

#[derive(Clone, Debug, PartialEq)]
pub struct StorageEstimate {
    pub bytes: u128,
    pub terabytes: f64,
    /// Terabytes at three significant figures.
    pub terabytes_rounded: f64,
    /// Yearly cost per node, priced on the rounded terabyte figure.
    pub cost_per_node: f64,
}

/// Storage for recording every cent of a yearly GDP once.
pub fn gdp_storage(gdp_units: u128, cents_per_unit: u128, bytes_per_cent: u128, usd_per_tb: f64) -> StorageEstimate {
    let bytes = gdp_units * cents_per_unit * bytes_per_cent;
    let terabytes = bytes as f64 / 1e12;
    let terabytes_rounded = round_to_sig(terabytes, 3);
    StorageEstimate { bytes, terabytes, terabytes_rounded, cost_per_node: terabytes_rounded * usd_per_tb }
}

/// Decimal byte count in the largest unit that keeps the value at least 1.
pub fn format_bytes(bytes: u128) -> String {
    const UNITS: [&str; 6] = ["B", "kB", "MB", "GB", "TB", "PB"];
    let mut value = bytes as f64;
    let mut unit = 0;
    while value >= 1000.0 && unit + 1 < UNITS.len() {
        value /= 1000.0;
        unit += 1;
    }
    format!("{} {}", round_to_sig(value, 3), UNITS[unit])
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CapacityRow {
    pub region: String,
    pub m2: u64,
    pub currency: String,
    /// Currency units per `m2` unit, e.g. 10^6 for "million".
    pub scale: u128,
    pub tracking_numbers: u128,
    pub hex: String,
}

/// Tracking numbers for a money stock: one hundred per cent.
pub fn tracking_numbers_for(m2_cents: u128) -> (u128, String) {
    let n = m2_cents * 100;
    (n, format!("{n:X}"))
}

pub fn capacity_row(region: &str, m2: u64, currency: &str, scale: u128) -> CapacityRow {
    let (tracking_numbers, hex) = tracking_numbers_for(m2 as u128 * scale * 100);
    CapacityRow { region: region.into(), m2, currency: currency.into(), scale, tracking_numbers, hex }
}

/// M2 figures for four economies, in millions or billions of currency.
pub fn capacity_table() -> Vec<CapacityRow> {
    const MILLION: u128 = 1_000_000;
    const BILLION: u128 = 1_000_000_000;
    vec![
        capacity_row("United Kingdom", 3_009_816, "GBP Million", MILLION),
        capacity_row("United States", 20_784, "USD Billion", BILLION),
        capacity_row("Euro area", 15_105_923, "EUR Million", MILLION),
        capacity_row("China", 304_795, "CNY Billion", BILLION),
    ]
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Period {
    Day,
    /// ISO weeks, Monday first.
    Week,
    Month,
}

impl Period {
    /// Index of the period containing `t`.
    pub fn index(self, t: Timestamp) -> i64 {
        let day = t.day_number();
        match self {
            Period::Day => day,
            // Day 0 is a Thursday, so Monday-based weeks start at day -3.
            Period::Week => (day + 3).div_euclid(7),
            Period::Month => t.month_index(),
        }
    }

    pub fn label(self, index: i64) -> String {
        match self {
            Period::Day => Timestamp::from_day_number(index).date().format("%Y-%m-%d").to_string(),
            Period::Week => {
                let monday = Timestamp::from_day_number(index * 7 - 3).date();
                let w = monday.iso_week();
                format!("{}-W{:02}", w.year(), w.week())
            }
            Period::Month => format!("{}-{:02}", index.div_euclid(12), index.rem_euclid(12) + 1),
        }
    }

    /// Days in the period with the given index.
    pub fn days(self, index: i64) -> u32 {
        match self {
            Period::Day => 1,
            Period::Week => 7,
            Period::Month => {
                let (y, m) = (index.div_euclid(12) as i32, index.rem_euclid(12) as u32 + 1);
                let start = NaiveDate::from_ymd_opt(y, m, 1).expect("valid month");
                let next = if m == 12 { NaiveDate::from_ymd_opt(y + 1, 1, 1) } else { NaiveDate::from_ymd_opt(y, m + 1, 1) };
                (next.expect("valid month") - start).num_days() as u32
            }
        }
    }
}

/// Values for consecutive periods starting at `start`; missing periods are zero.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TimeSeries {
    pub period: Period,
    pub start: i64,
    pub values: Vec<u64>,
}

impl TimeSeries {
    pub fn new(period: Period, start: i64, end: i64) -> Self {
        let len = (end - start + 1).max(0) as usize;
        Self { period, start, values: vec![0; len] }
    }

    pub fn add(&mut self, index: i64, value: u64) {
        if let Some(v) = usize::try_from(index - self.start).ok().and_then(|i| self.values.get_mut(i)) {
            *v += value;
        }
    }

    pub fn get(&self, index: i64) -> Option<u64> {
        usize::try_from(index - self.start).ok().and_then(|i| self.values.get(i).copied())
    }

    pub fn points(&self) -> impl Iterator<Item = (i64, u64)> + '_ {
        self.values.iter().enumerate().map(|(i, &v)| (self.start + i as i64, v))
    }

    pub fn total(&self) -> u64 {
        self.values.iter().sum()
    }

    /// Value per day of each period, which removes month-length effects.
    pub fn per_day(&self) -> Vec<f64> {
        self.points().map(|(i, v)| v as f64 / self.period.days(i) as f64).collect()
    }

    pub fn as_f64(&self) -> Vec<f64> {
        self.values.iter().map(|&v| v as f64).collect()
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ConceptField {
    #[default]
    Type,
    Detailed,
}

#[derive(Clone, Debug)]
pub struct FlowSpec {
    pub period: Period,
    /// Region level to group by; `None` merges all regions.
    pub region_level: Option<usize>,
    /// Concept level to group by; `None` merges all concepts.
    pub concept_level: Option<usize>,
    pub concept_field: ConceptField,
    pub filter: BlockFilter,
}

impl Default for FlowSpec {
    fn default() -> Self {
        Self { period: Period::Day, region_level: None, concept_level: None, concept_field: ConceptField::Type, filter: BlockFilter::default() }
    }
}

pub type FlowKey = (Option<RegionCode>, Option<ConceptCode>);

/// Sums of block amounts per group and period. Every series covers the same
/// range: the filter's dates if given, otherwise the matched blocks' span.
pub fn flow_aggregate(primary: &PrimaryLedger, spec: &FlowSpec) -> BTreeMap<FlowKey, TimeSeries> {
    let blocks = primary.query(&spec.filter);
    let first = spec.filter.from.or_else(|| blocks.iter().map(|b| b.timestamp).min_by_key(|t| t.secs()));
    let last = spec.filter.to.or_else(|| blocks.iter().map(|b| b.timestamp).max_by_key(|t| t.secs()));
    let (Some(first), Some(last)) = (first, last) else {
        return BTreeMap::new();
    };
    let (start, end) = (spec.period.index(first), spec.period.index(last));
    let mut out: BTreeMap<FlowKey, TimeSeries> = BTreeMap::new();
    for b in blocks {
        let region = spec.region_level.map(|l| b.region.at_level(l));
        let concept = spec.concept_level.map(|l| match spec.concept_field {
            ConceptField::Type => b.concept_type.at_level(l),
            ConceptField::Detailed => b.detailed_concept.at_level(l),
        });
        out.entry((region, concept))
            .or_insert_with(|| TimeSeries::new(spec.period, start, end))
            .add(spec.period.index(b.timestamp), b.amount.cents());
    }
    if spec.region_level.is_none() && spec.concept_level.is_none() {
        out.entry((None, None)).or_insert_with(|| TimeSeries::new(spec.period, start, end));
    }
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct PeriodicSignal {
    /// Period of the strongest frequency, in samples; `None` for a flat series.
    pub dominant_period: Option<f64>,
    /// Power of the strongest frequency over the median power of the others.
    pub ratio: f64,
    /// Power at the candidate period over the median power of the others.
    pub candidate_ratio: f64,
    /// Periodogram as (period in samples, power), lowest frequency first.
    pub spectrum: Vec<(f64, f64)>,
}

impl PeriodicSignal {
    pub fn detects(&self, period: usize, threshold: f64) -> bool {
        self.dominant_period.is_some_and(|p| (p - period as f64).abs() < 1e-9) && self.ratio >= threshold
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

fn ratio(p: f64, med: f64) -> f64 {
    if p == 0.0 {
        0.0
    } else if med == 0.0 {
        f64::INFINITY
    } else {
        p / med
    }
}

/// Periodogram of the mean-removed series at frequencies k/n, k = 1..=n/2.
pub fn periodogram(series: &[f64]) -> Vec<(f64, f64)> {
    let n = series.len();
    let mean = series.iter().sum::<f64>() / n as f64;
    (1..=n / 2)
        .map(|k| {
            let (mut re, mut im) = (0.0, 0.0);
            for (t, &x) in series.iter().enumerate() {
                let angle = -2.0 * std::f64::consts::PI * (k * t % n) as f64 / n as f64;
                re += (x - mean) * angle.cos();
                im += (x - mean) * angle.sin();
            }
            (n as f64 / k as f64, (re * re + im * im) / n as f64)
        })
        .collect()
}

pub fn detect_periodic_signal(series: &[f64], candidate: usize) -> Result<PeriodicSignal, AnalyticsError> {
    if candidate < 2 {
        return Err(AnalyticsError::BadPeriod);
    }
    if series.len() < 3 * candidate {
        return Err(AnalyticsError::SeriesTooShort { len: series.len(), period: candidate });
    }
    let spectrum = periodogram(series);
    let energy: f64 = series.iter().map(|x| x * x).sum::<f64>().max(1.0);
    // Powers at rounding-noise level count as zero.
    let spectrum: Vec<(f64, f64)> =
        spectrum.into_iter().map(|(p, w)| (p, if w <= energy * 1e-24 { 0.0 } else { w })).collect();
    let others = |skip: usize| median(spectrum.iter().enumerate().filter(|&(i, _)| i != skip).map(|(_, s)| s.1).collect());
    let (best, &(period, power)) =
        spectrum.iter().enumerate().max_by(|a, b| a.1 .1.total_cmp(&b.1 .1)).expect("at least one frequency");
    let candidate_index = spectrum.iter().position(|(p, _)| (p - candidate as f64).abs() < 1e-9);
    let candidate_ratio = candidate_index.map_or(0.0, |i| ratio(spectrum[i].1, others(i)));
    Ok(PeriodicSignal {
        dominant_period: (power > 0.0).then_some(period),
        ratio: ratio(power, others(best)),
        candidate_ratio,
        spectrum,
    })
}
