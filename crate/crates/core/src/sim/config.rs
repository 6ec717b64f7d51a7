//! Scenario files (TOML, `schema_version = 1`).
//!
//! A scenario names its banks and parties, optionally a list of scripted
//! operations at fixed times, and optionally a generated economy driven by
//! schedules and seeded noise. Scripted operations and generated activity
//! can be combined; scripted operations run at the start of their day.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::SimError;
use crate::bank::{CrossBorder, ReserveDirection, SelectionPolicy};
use crate::model::{ConceptCode, Money, Reference, RegionCode, Timestamp};
use crate::privacy::{DisclosurePolicy, PrivacyPolicy};

pub const SCHEMA_VERSION: u32 = 1;

/// Scenario reproducing the worked example blocks.
pub const WORKED_EXAMPLES: &str = include_str!("../../../../scenarios/worked_examples.toml");

fn default_region() -> RegionCode {
    RegionCode::new("rA1").expect("valid region")
}

fn default_start() -> Timestamp {
    Timestamp::day(2024, 1, 1)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub schema_version: u32,
    #[serde(default)]
    pub name: String,
    pub seed: u64,
    #[serde(default = "default_start")]
    pub start: Timestamp,
    #[serde(default)]
    pub duration_days: u32,
    #[serde(default)]
    pub ledger: LedgerSettings,
    #[serde(default)]
    pub privacy: PrivacyPolicy,
    #[serde(default)]
    pub disclosure: DisclosurePolicy,
    #[serde(default = "default_region")]
    pub central_bank_region: RegionCode,
    #[serde(default)]
    pub banks: Vec<BankSettings>,
    #[serde(default)]
    pub parties: Vec<PartySettings>,
    /// Fixed shared codes per private category.
    #[serde(default)]
    pub pools: BTreeMap<String, Vec<String>>,
    /// Number of generated shared codes per private category.
    #[serde(default)]
    pub pool_sizes: BTreeMap<String, usize>,
    #[serde(default)]
    pub script: Vec<ScriptOp>,
    pub economy: Option<GeneratedEconomy>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LedgerSettings {
    /// Largest primary block in cents; 0 disables subdivision.
    pub max_block_cents: u64,
    pub cent_index: bool,
    pub keep_event_cents: bool,
    /// Issuable standard numbers; defaults to 10^12.
    pub registry_capacity: u64,
    pub banknote_pad16: bool,
}

impl Default for LedgerSettings {
    fn default() -> Self {
        Self {
            max_block_cents: crate::ledger::primary::DEFAULT_MAX_BLOCK_CENTS,
            cent_index: true,
            keep_event_cents: true,
            registry_capacity: 1_000_000_000_000,
            banknote_pad16: false,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BankSettings {
    pub code: String,
    pub region: RegionCode,
    #[serde(default)]
    pub policy: SelectionPolicy,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PartyKindSetting {
    Government,
    Institution,
    Private,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartySettings {
    pub id: String,
    pub kind: PartyKindSetting,
    /// Required for government and institution parties.
    pub code: Option<String>,
    /// Required for private parties.
    pub category: Option<String>,
    /// Public directory text for government parties.
    pub entry: Option<String>,
    pub bank: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ScriptOp {
    Seed {
        party: String,
        amount: Money,
        at: Timestamp,
    },
    Transfer {
        payer: String,
        payee: String,
        amount: Money,
        at: Timestamp,
        concept: ConceptCode,
        concept_type: ConceptCode,
        region: RegionCode,
        reference: Option<Reference>,
        statement: Option<Reference>,
    },
    Loan {
        bank: String,
        party: String,
        amount: Money,
        at: Timestamp,
    },
    /// `loan` counts loans in the order they were granted, from 0.
    Repay {
        loan: usize,
        amount: Money,
        at: Timestamp,
    },
    Reserve {
        bank: String,
        direction: ReserveDirectionSetting,
        amount: Money,
        at: Timestamp,
    },
    CrossBorder {
        party: String,
        direction: CrossBorderSetting,
        amount: Money,
        at: Timestamp,
    },
    PrintBanknote {
        serial: u64,
        denomination: Money,
        reprint_at: Timestamp,
        print_at: Timestamp,
        reprint_reference: Option<Reference>,
        print_reference: Option<Reference>,
    },
    BanknoteDeposit {
        party: String,
        serial: u64,
        at: Timestamp,
    },
    BanknoteWithdraw {
        party: String,
        serial: u64,
        at: Timestamp,
    },
}

impl ScriptOp {
    pub fn at(&self) -> Timestamp {
        match self {
            ScriptOp::Seed { at, .. }
            | ScriptOp::Transfer { at, .. }
            | ScriptOp::Loan { at, .. }
            | ScriptOp::Repay { at, .. }
            | ScriptOp::Reserve { at, .. }
            | ScriptOp::CrossBorder { at, .. }
            | ScriptOp::BanknoteDeposit { at, .. }
            | ScriptOp::BanknoteWithdraw { at, .. } => *at,
            ScriptOp::PrintBanknote { reprint_at, .. } => *reprint_at,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReserveDirectionSetting {
    ToCentralBank,
    FromCentralBank,
}

impl From<ReserveDirectionSetting> for ReserveDirection {
    fn from(d: ReserveDirectionSetting) -> Self {
        match d {
            ReserveDirectionSetting::ToCentralBank => ReserveDirection::ToCentralBank,
            ReserveDirectionSetting::FromCentralBank => ReserveDirection::FromCentralBank,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CrossBorderSetting {
    Inbound,
    Outbound,
}

impl From<CrossBorderSetting> for CrossBorder {
    fn from(d: CrossBorderSetting) -> Self {
        match d {
            CrossBorderSetting::Inbound => CrossBorder::Inbound,
            CrossBorderSetting::Outbound => CrossBorder::Outbound,
        }
    }
}

/// Agents, schedules and noise for a generated economy. Households and
/// servants buy from firms every day; firms pay out wages monthly; the
/// payroll office pays servants weekly from budget transfers it receives
/// from the treasury on the first of each month.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeneratedEconomy {
    pub households: u32,
    pub firms: u32,
    pub servants: u32,
    /// Households per shared code; servants and firms use the same figure.
    pub parties_per_code: u32,
    pub regions: Vec<RegionCode>,
    pub household_start_balance: Money,
    pub firm_start_balance: Money,
    pub treasury_start_balance: Money,
    pub purchase: PurchaseSchedule,
    pub vat: VatSchedule,
    pub wages: WageSchedule,
    pub servants_pay: ServantSchedule,
    pub loans: LoanSchedule,
    pub banknotes: BanknoteSchedule,
    pub reserves: ReserveSchedule,
    pub cross_border: CrossBorderSchedule,
}

impl Default for GeneratedEconomy {
    fn default() -> Self {
        Self {
            households: 40,
            firms: 6,
            servants: 8,
            parties_per_code: 10,
            regions: ["rA11", "rA12", "rB21", "rC02"].iter().map(|r| RegionCode::new(*r).expect("valid")).collect(),
            household_start_balance: Money::from_units(200),
            firm_start_balance: Money::from_units(500),
            treasury_start_balance: Money::from_units(20_000),
            purchase: PurchaseSchedule::default(),
            vat: VatSchedule::default(),
            wages: WageSchedule::default(),
            servants_pay: ServantSchedule::default(),
            loans: LoanSchedule::default(),
            banknotes: BanknoteSchedule::default(),
            reserves: ReserveSchedule::default(),
            cross_border: CrossBorderSchedule::default(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PurchaseSchedule {
    /// Net price drawn uniformly from `[price_min, price_max]`.
    pub price_min: Money,
    pub price_max: Money,
    /// Probability that a household buys on a given day.
    pub daily_probability: f64,
}

impl Default for PurchaseSchedule {
    fn default() -> Self {
        Self { price_min: Money::from_cents(50), price_max: Money::from_cents(150), daily_probability: 1.0 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VatSchedule {
    pub base_rate: f64,
    pub amplitude: f64,
    /// Alternation period in months. The rate is `base + amplitude` for the
    /// first half of each cycle and `base - amplitude` for the second; with
    /// period 2 that is odd and even calendar months respectively.
    pub period_months: u32,
}

impl Default for VatSchedule {
    fn default() -> Self {
        Self { base_rate: 0.20, amplitude: 0.0, period_months: 2 }
    }
}

impl VatSchedule {
    /// Rate in force on `t`.
    pub fn rate(&self, t: Timestamp) -> f64 {
        let position = t.month_index().rem_euclid(self.period_months.max(2) as i64);
        if position < self.period_months.max(2) as i64 / 2 {
            self.base_rate + self.amplitude
        } else {
            self.base_rate - self.amplitude
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WageSchedule {
    /// Day of month on which firms pay out.
    pub payday: u32,
    /// Share of a firm's balance paid out, split evenly across its staff.
    pub payout_fraction: f64,
    /// Income tax each household pays on its wage the same day.
    pub income_tax_rate: f64,
}

impl Default for WageSchedule {
    fn default() -> Self {
        Self { payday: 28, payout_fraction: 0.9, income_tax_rate: 0.1 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServantSchedule {
    pub hourly_rate: Money,
    /// Hours paid in weeks with an even week index.
    pub hours_even: u32,
    pub hours_odd: u32,
    /// Share of the last weekly wage spent over the following seven days.
    pub spend_fraction: f64,
    /// Daily spending is scaled by a uniform factor in `[1 - noise, 1 + noise]`.
    pub spend_noise: f64,
}

impl Default for ServantSchedule {
    fn default() -> Self {
        Self { hourly_rate: Money::from_units(1), hours_even: 35, hours_odd: 35, spend_fraction: 0.75, spend_noise: 0.2 }
    }
}

impl ServantSchedule {
    pub fn hours(&self, week_index: i64) -> u32 {
        if week_index.rem_euclid(2) == 0 {
            self.hours_even
        } else {
            self.hours_odd
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LoanSchedule {
    pub daily_probability: f64,
    pub min: Money,
    pub max: Money,
    pub term_days: u32,
}

impl Default for LoanSchedule {
    fn default() -> Self {
        Self { daily_probability: 0.0, min: Money::from_units(20), max: Money::from_units(200), term_days: 30 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BanknoteSchedule {
    /// Notes printed on the first day.
    pub count: u32,
    pub denomination: Money,
    pub first_serial: u64,
    /// Cash each bank's operating account starts with.
    pub operating_cash: Money,
    pub deposit_probability: f64,
    pub withdraw_probability: f64,
}

impl Default for BanknoteSchedule {
    fn default() -> Self {
        Self {
            count: 0,
            denomination: Money::from_units(10),
            first_serial: 1_000_000,
            operating_cash: Money::from_units(200),
            deposit_probability: 0.0,
            withdraw_probability: 0.0,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReserveSchedule {
    pub daily_probability: f64,
    pub amount: Money,
}

impl Default for ReserveSchedule {
    fn default() -> Self {
        Self { daily_probability: 0.0, amount: Money::from_units(50) }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CrossBorderSchedule {
    pub daily_probability: f64,
    pub max: Money,
}

impl Default for CrossBorderSchedule {
    fn default() -> Self {
        Self { daily_probability: 0.0, max: Money::from_units(100) }
    }
}

impl ScenarioConfig {
    pub fn parse(text: &str) -> Result<Self, SimError> {
        let raw: toml::Value = toml::from_str(text)?;
        let version = raw.get("schema_version").and_then(toml::Value::as_integer);
        if version != Some(SCHEMA_VERSION as i64) {
            return Err(SimError::SchemaVersion { found: version, expected: SCHEMA_VERSION });
        }
        let config: ScenarioConfig = toml::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, SimError> {
        let text = std::fs::read_to_string(path).map_err(|e| SimError::Io(path.display().to_string(), e))?;
        Self::parse(&text)
    }

    pub fn worked_examples() -> Self {
        Self::parse(WORKED_EXAMPLES).expect("built-in replay scenario is valid")
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario serializes")
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: String| Err(SimError::Config(m));
        let unit = |name: &str, v: f64| -> Result<(), SimError> {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(SimError::Config(format!("{name} = {v} is outside [0, 1]")))
            }
        };
        if self.economy.is_some() && self.duration_days < 1 {
            return bad("duration_days must be at least 1 for a generated economy".into());
        }
        let mut codes = std::collections::HashSet::new();
        for b in &self.banks {
            if b.code == "CB" || !codes.insert(b.code.as_str()) {
                return bad(format!("bank code {} is reserved or repeated", b.code));
            }
        }
        for p in &self.parties {
            if p.bank != "CB" && !codes.contains(p.bank.as_str()) {
                return bad(format!("party {} banks with unknown bank {}", p.id, p.bank));
            }
            match p.kind {
                PartyKindSetting::Private if p.category.is_none() => return bad(format!("private party {} needs a category", p.id)),
                PartyKindSetting::Government | PartyKindSetting::Institution if p.code.is_none() => {
                    return bad(format!("party {} needs a code", p.id))
                }
                _ => {}
            }
        }
        if let Some(e) = &self.economy {
            if self.banks.is_empty() {
                return bad("a generated economy needs at least one bank".into());
            }
            if e.firms == 0 && (e.households > 0 || e.servants > 0) {
                return bad("households and servants need at least one firm".into());
            }
            if e.regions.is_empty() {
                return bad("economy.regions is empty".into());
            }
            if e.purchase.price_min > e.purchase.price_max || e.loans.min > e.loans.max {
                return bad("price or loan range is reversed".into());
            }
            if e.parties_per_code == 0 {
                return bad("parties_per_code must be positive".into());
            }
            if !(1..=28).contains(&e.wages.payday) {
                return bad("wages.payday must be in 1..=28".into());
            }
            unit("vat.base_rate", e.vat.base_rate)?;
            unit("vat.base_rate - amplitude", e.vat.base_rate - e.vat.amplitude)?;
            unit("vat.base_rate + amplitude", e.vat.base_rate + e.vat.amplitude)?;
            unit("vat.amplitude", e.vat.amplitude)?;
            if e.vat.period_months < 2 || e.vat.period_months % 2 == 1 {
                return bad("vat.period_months must be even and at least 2".into());
            }
            unit("purchase.daily_probability", e.purchase.daily_probability)?;
            unit("wages.payout_fraction", e.wages.payout_fraction)?;
            unit("wages.income_tax_rate", e.wages.income_tax_rate)?;
            unit("servants_pay.spend_fraction", e.servants_pay.spend_fraction)?;
            unit("servants_pay.spend_noise", e.servants_pay.spend_noise)?;
            unit("loans.daily_probability", e.loans.daily_probability)?;
            unit("banknotes.deposit_probability", e.banknotes.deposit_probability)?;
            unit("banknotes.withdraw_probability", e.banknotes.withdraw_probability)?;
            unit("reserves.daily_probability", e.reserves.daily_probability)?;
            unit("cross_border.daily_probability", e.cross_border.daily_probability)?;
        }
        Ok(())
    }
}
