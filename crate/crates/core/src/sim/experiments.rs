//! The two signal-injection experiments: an alternating VAT rate read back
//! from monthly receipts, and alternating public-servant hours read back
//! from weekly wage outflows and the servants' own purchases.

use std::collections::BTreeSet;

use super::agents::{concepts, PAYROLL};
use super::config::VatSchedule;
use super::{run, RunStats, ScenarioConfig, SimError};
use crate::analytics::{detect_periodic_signal, AnalyticsError, Period, PeriodicSignal, TimeSeries};
use crate::ledger::PrimaryLedger;
use crate::model::Timestamp;

#[derive(Clone, Debug)]
pub struct VatReport {
    /// VAT receipts in cents per full calendar month.
    pub receipts: TimeSeries,
    /// Receipts per day of each month; the series handed to detection.
    pub per_day: Vec<f64>,
    pub signal: PeriodicSignal,
    /// Mean of the scheduled monthly rates.
    pub mean_scheduled_rate: f64,
    /// VAT collected over net purchase volume.
    pub effective_rate: f64,
    /// Scheduled rates weighted by each month's purchase volume.
    pub volume_weighted_rate: f64,
    /// Largest gap between effective and volume-weighted rate that per-payment
    /// rounding to whole cents can cause.
    pub rounding_bound: f64,
    pub stats: RunStats,
}

#[derive(Clone, Debug)]
pub struct HoursReport {
    /// Payroll wage outflow in cents per full week.
    pub wages: TimeSeries,
    /// Net purchases by the parties the payroll pays, per full week.
    pub spending: TimeSeries,
    pub wage_signal: PeriodicSignal,
    pub spending_signal: PeriodicSignal,
    /// Mean weekly hours paid per servant.
    pub mean_hours: f64,
    pub stats: RunStats,
}

/// Period indices fully inside `[first_day, last_day]`.
fn full_periods(period: Period, first_day: i64, last_day: i64) -> (i64, i64) {
    let a = period.index(Timestamp::from_day_number(first_day));
    let b = period.index(Timestamp::from_day_number(last_day));
    let a = if period.index(Timestamp::from_day_number(first_day - 1)) == a { a + 1 } else { a };
    let b = if period.index(Timestamp::from_day_number(last_day + 1)) == b { b - 1 } else { b };
    (a, b)
}

fn last_day(config: &ScenarioConfig) -> i64 {
    config.start.day_number() + config.duration_days as i64 - 1
}

/// Runs the scenario and reads its VAT receipts back from the primary ledger.
pub fn vat_experiment(config: ScenarioConfig) -> Result<VatReport, SimError> {
    let economy = config.economy.clone().ok_or_else(|| SimError::Config("the VAT experiment needs an economy".into()))?;
    let (first, last) = (config.start.day_number(), last_day(&config));
    let out = run(config)?;
    analyse_vat(out.economy.primary(), first, last, &economy.vat, out.stats).map_err(|e| SimError::Config(e.to_string()))
}

pub fn analyse_vat(
    primary: &PrimaryLedger,
    first_day: i64,
    last_day: i64,
    schedule: &VatSchedule,
    stats: RunStats,
) -> Result<VatReport, AnalyticsError> {
    let (start, end) = full_periods(Period::Month, first_day, last_day);
    if end < start {
        return Err(AnalyticsError::EmptyWindow);
    }
    let mut receipts = TimeSeries::new(Period::Month, start, end);
    let mut net = TimeSeries::new(Period::Month, start, end);
    let mut vat_payments = 0u64;
    for b in primary.blocks() {
        let month = Period::Month.index(b.timestamp);
        if month < start || month > end {
            continue;
        }
        if b.concept_type.as_str() == concepts::VAT.1 {
            receipts.add(month, b.amount.cents());
            vat_payments += 1;
        } else if b.concept_type.as_str() == concepts::PURCHASE.1 {
            net.add(month, b.amount.cents());
        }
    }
    let per_day = receipts.per_day();
    let signal = detect_periodic_signal(&per_day, 2)?;
    let rate_of = |m: i64| schedule.rate(Timestamp::day(m.div_euclid(12) as i32, m.rem_euclid(12) as u32 + 1, 1));
    let months = (end - start + 1) as f64;
    let mean_scheduled_rate = (start..=end).map(rate_of).sum::<f64>() / months;
    let net_total = net.total() as f64;
    if net_total == 0.0 {
        return Err(AnalyticsError::EmptyWindow);
    }
    let volume_weighted_rate = net.points().map(|(m, v)| rate_of(m) * v as f64).sum::<f64>() / net_total;
    Ok(VatReport {
        effective_rate: receipts.total() as f64 / net_total,
        rounding_bound: 0.5 * vat_payments as f64 / net_total,
        receipts,
        per_day,
        signal,
        mean_scheduled_rate,
        volume_weighted_rate,
        stats,
    })
}

/// Runs the scenario and reads servant wages and spending back from the
/// primary ledger.
pub fn hours_experiment(config: ScenarioConfig) -> Result<HoursReport, SimError> {
    let economy = config.economy.clone().ok_or_else(|| SimError::Config("the hours experiment needs an economy".into()))?;
    let (first, last) = (config.start.day_number(), last_day(&config));
    let out = run(config)?;
    let hourly = economy.servants_pay.hourly_rate.cents() as f64;
    analyse_hours(out.economy.primary(), first, last, PAYROLL.1, hourly, economy.servants as f64, out.stats)
        .map_err(|e| SimError::Config(e.to_string()))
}

/// Wage outflow is every wage block paid by `payroll_code`. Servants are
/// recognised as that flow's payee codes, and their spending is every
/// purchase block whose payer carries one of those codes.
pub fn analyse_hours(
    primary: &PrimaryLedger,
    first_day: i64,
    last_day: i64,
    payroll_code: &str,
    hourly_cents: f64,
    servants: f64,
    stats: RunStats,
) -> Result<HoursReport, AnalyticsError> {
    let (start, end) = full_periods(Period::Week, first_day, last_day);
    if end < start {
        return Err(AnalyticsError::EmptyWindow);
    }
    let mut wages = TimeSeries::new(Period::Week, start, end);
    let mut spending = TimeSeries::new(Period::Week, start, end);
    let is_wage = |b: &crate::model::PrimaryBlock| {
        b.payer.code == payroll_code && b.concept_type.as_str() == concepts::SERVANT_WAGE.1
    };
    let servant_codes: BTreeSet<&str> =
        primary.blocks().iter().filter(|b| is_wage(b)).map(|b| b.payee.code.as_str()).collect();
    for b in primary.blocks() {
        let week = Period::Week.index(b.timestamp);
        if is_wage(b) {
            wages.add(week, b.amount.cents());
        } else if b.concept_type.as_str() == concepts::PURCHASE.1 && servant_codes.contains(b.payer.code.as_str()) {
            spending.add(week, b.amount.cents());
        }
    }
    let weeks = (end - start + 1) as f64;
    let mean_hours = if hourly_cents > 0.0 && servants > 0.0 {
        wages.total() as f64 / weeks / servants / hourly_cents
    } else {
        0.0
    };
    Ok(HoursReport {
        wage_signal: detect_periodic_signal(&wages.as_f64(), 2)?,
        spending_signal: detect_periodic_signal(&spending.as_f64(), 2)?,
        wages,
        spending,
        mean_hours,
        stats,
    })
}
