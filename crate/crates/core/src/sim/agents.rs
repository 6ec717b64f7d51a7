//! Generated agents and their daily schedule.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::config::{BankSettings, GeneratedEconomy};
use crate::bank::{BankError, CrossBorder, Economy, ReserveDirection, TransactionRequest};
use crate::model::{AccountId, ConceptCode, Granularity, Money, RegionCode, Timestamp};
use crate::privacy::DirectoryBuilder;
use crate::registry::Holder;

pub const TREASURY: (&str, &str) = ("treasury", "GOV-AR3");
pub const PAYROLL: (&str, &str) = ("payroll", "GOV- B4E5");

/// (detailed, type) concept pairs used by generated activity.
pub mod concepts {
    pub const PURCHASE: (&str, &str) = ("t421", "t42");
    pub const VAT: (&str, &str) = ("v201", "v20");
    pub const WAGE: (&str, &str) = ("w241", "w24");
    pub const INCOME_TAX: (&str, &str) = ("t16", "gr20");
    pub const SERVANT_WAGE: (&str, &str) = ("s236", "w24");
    pub const BUDGET: (&str, &str) = ("s22", "gr01");
}

const DAY_SECS: i64 = 86_400;

fn code(c: &str) -> ConceptCode {
    ConceptCode::new(c).expect("built-in concept code")
}

fn at(day: i64, minute: i64) -> Timestamp {
    Timestamp::from_secs(day * DAY_SECS + minute * 60, Granularity::Minute)
}

#[derive(Clone, Debug)]
struct Member {
    id: String,
    bank: String,
    region: RegionCode,
}

/// Party ids, banks and regions of the generated agents.
pub(super) struct Layout {
    households: Vec<Member>,
    servants: Vec<Member>,
    firms: Vec<Member>,
    parties_per_code: u32,
}

impl Layout {
    pub fn new(e: &GeneratedEconomy, banks: &[BankSettings]) -> Self {
        let make = |prefix: &str, n: u32, offset: usize| -> Vec<Member> {
            (0..n as usize)
                .map(|i| Member {
                    id: format!("{prefix}-{:04}", i + 1),
                    bank: banks[(i + offset) % banks.len()].code.clone(),
                    region: e.regions[(i + offset) % e.regions.len()].clone(),
                })
                .collect()
        };
        Self {
            households: make("household", e.households, 0),
            servants: make("servant", e.servants, 1),
            firms: make("firm", e.firms, 2),
            parties_per_code: e.parties_per_code,
        }
    }

    pub fn register(&self, mut b: DirectoryBuilder) -> DirectoryBuilder {
        b = b
            .government(TREASURY.0, TREASURY.1, Some("Income Tax office bank account in Madrid"))
            .government(
                PAYROLL.0,
                PAYROLL.1,
                Some("Madrid/ Alcalá de Henares city Hall/ Accounting Services/ Human Resources"),
            );
        for (category, members) in [("household", &self.households), ("servant", &self.servants), ("firm", &self.firms)] {
            if members.is_empty() {
                continue;
            }
            for m in members {
                b = b.private(&m.id, category);
            }
            b = b.pool_size(category, members.len().div_ceil(self.parties_per_code as usize));
        }
        b
    }

    pub fn open(self, spec: GeneratedEconomy, e: &mut Economy) -> Result<Agents, BankError> {
        let home = spec.regions[0].clone();
        let first_bank = self.households.first().or(self.firms.first()).map(|m| m.bank.clone());
        let mut open = |members: Vec<Member>| -> Result<Vec<Agent>, BankError> {
            members
                .into_iter()
                .map(|m| {
                    Ok(Agent { account: e.open_account(&m.id, &m.bank)?, bank: m.bank, region: m.region, last_wage: Money::ZERO })
                })
                .collect()
        };
        let households = open(self.households)?;
        let servants = open(self.servants)?;
        let firms = open(self.firms)?;
        let bank = first_bank.unwrap_or_else(|| e.banks()[1].code.clone());
        let treasury = e.open_account(TREASURY.0, &bank)?;
        let payroll = e.open_account(PAYROLL.0, &bank)?;
        let bank_codes = e.banks().iter().skip(1).map(|b| b.code.clone()).collect();
        Ok(Agents { spec, households, servants, firms, treasury, payroll, home, bank_codes, loans: Vec::new(), serials: Vec::new() })
    }
}

#[derive(Clone, Debug)]
struct Agent {
    account: AccountId,
    bank: String,
    region: RegionCode,
    last_wage: Money,
}

#[derive(Clone, Copy, Debug, Default)]
pub(super) struct Tally {
    pub done: u64,
    pub skipped: u64,
}

impl Tally {
    /// Counts an outcome; shortfalls are skipped, other errors are fatal.
    fn record<T>(&mut self, r: Result<T, BankError>) -> Result<Option<T>, BankError> {
        match r {
            Ok(v) => {
                self.done += 1;
                Ok(Some(v))
            }
            Err(BankError::InsufficientFunds { .. } | BankError::InsufficientReserve { .. }) => {
                self.skipped += 1;
                Ok(None)
            }
            Err(e) => Err(e),
        }
    }
}

pub(super) struct Agents {
    spec: GeneratedEconomy,
    households: Vec<Agent>,
    servants: Vec<Agent>,
    firms: Vec<Agent>,
    treasury: AccountId,
    payroll: AccountId,
    home: RegionCode,
    bank_codes: Vec<String>,
    /// Outstanding generated loans with their due day.
    loans: Vec<(usize, i64)>,
    serials: Vec<u64>,
}

fn spendable(e: &Economy, id: AccountId) -> u64 {
    e.account(id).map_or(0, |a| a.holdings.spendable())
}

fn uniform(rng: &mut ChaCha8Rng, lo: Money, hi: Money) -> Money {
    Money::from_cents(rng.random_range(lo.cents()..=hi.cents()))
}

#[allow(clippy::too_many_arguments)]
fn pay(
    e: &mut Economy,
    payer: AccountId,
    payee: AccountId,
    amount: Money,
    concept: (&str, &str),
    region: &RegionCode,
    t: Timestamp,
) -> Result<Vec<crate::model::Reference>, BankError> {
    e.execute_transfer(TransactionRequest {
        payer,
        payee,
        amount,
        detailed_concept: code(concept.0),
        concept_type: code(concept.1),
        region: region.clone(),
        timestamp: t,
        reference: None,
        statement_reference: None,
    })
}

impl Agents {
    /// Wage for the week with the given index.
    fn servant_wage(&self, week: i64) -> Money {
        Money::from_cents(self.spec.servants_pay.hourly_rate.cents() * self.spec.servants_pay.hours(week) as u64)
    }

    /// Servant wages due on the Mondays of the month containing `day`.
    fn monthly_budget(&self, day: i64) -> Money {
        let first = Timestamp::from_day_number(day);
        let month = first.month_index();
        let per_servant: u64 = (day..day + 31)
            .take_while(|d| Timestamp::from_day_number(*d).month_index() == month)
            .filter(|d| (d + 3).rem_euclid(7) == 0)
            .map(|d| self.servant_wage((d + 3).div_euclid(7)).cents())
            .sum();
        Money::from_cents(per_servant * self.servants.len() as u64)
    }

    fn seed(&mut self, e: &mut Economy, day: i64, tally: &mut Tally) -> Result<(), BankError> {
        let t = at(day, 0);
        let mut seeds = vec![(self.treasury, self.spec.treasury_start_balance)];
        seeds.extend(self.firms.iter().map(|a| (a.account, self.spec.firm_start_balance)));
        seeds.extend(self.households.iter().map(|a| (a.account, self.spec.household_start_balance)));
        seeds.extend(self.servants.iter().map(|a| (a.account, self.spec.household_start_balance)));
        let notes = &self.spec.banknotes;
        if notes.count > 0 {
            for code in &self.bank_codes {
                let operating = e.bank(code).and_then(|b| b.operating).expect("commercial bank has operating account");
                seeds.push((operating, notes.operating_cash));
            }
        }
        for (account, amount) in seeds {
            if amount > Money::ZERO {
                tally.record(e.seed_money(account, amount, t))?;
            }
        }
        if notes.count > 0 {
            let total = Money::from_cents(notes.denomination.cents() * notes.count as u64);
            tally.record(e.reserve_move("CB", ReserveDirection::ToCentralBank, total, at(day, 1)))?;
            for i in 0..notes.count as u64 {
                let serial = notes.first_serial + i;
                tally.record(e.print_banknote(crate::bank::BanknotePrint {
                    serial,
                    denomination: notes.denomination,
                    reprint_at: at(day, 2),
                    print_at: at(day, 3),
                    reprint: Default::default(),
                    print: Default::default(),
                }))?;
                self.serials.push(serial);
            }
        }
        Ok(())
    }

    /// A purchase of `net` from `firm` plus its VAT leg to the treasury.
    #[allow(clippy::too_many_arguments)]
    fn purchase(
        &self,
        e: &mut Economy,
        buyer: &Agent,
        firm: usize,
        net: Money,
        rate: f64,
        t: Timestamp,
        tally: &mut Tally,
    ) -> Result<(), BankError> {
        if net == Money::ZERO {
            return Ok(());
        }
        let vat = net.scale(rate);
        if spendable(e, buyer.account) < net.cents() + vat.cents() {
            tally.skipped += 1;
            return Ok(());
        }
        let firm = &self.firms[firm];
        tally.record(pay(e, buyer.account, firm.account, net, concepts::PURCHASE, &firm.region, t))?;
        if vat > Money::ZERO {
            tally.record(pay(e, buyer.account, self.treasury, vat, concepts::VAT, &buyer.region, t))?;
        }
        Ok(())
    }

    pub fn step(&mut self, e: &mut Economy, rng: &mut ChaCha8Rng, day: i64, first: bool) -> Result<Tally, BankError> {
        let mut tally = Tally::default();
        let date = Timestamp::from_day_number(day).date();
        if first {
            self.seed(e, day, &mut tally)?;
        }

        if !self.servants.is_empty() && (first || chrono::Datelike::day(&date) == 1) {
            let budget = self.monthly_budget(day);
            if budget > Money::ZERO {
                tally.record(pay(e, self.treasury, self.payroll, budget, concepts::BUDGET, &self.home, at(day, 6 * 60)))?;
            }
        }

        let week = (day + 3).div_euclid(7);
        if (day + 3).rem_euclid(7) == 0 {
            let wage = self.servant_wage(week);
            for i in 0..self.servants.len() {
                let s = self.servants[i].clone();
                let paid = tally.record(pay(e, self.payroll, s.account, wage, concepts::SERVANT_WAGE, &s.region, at(day, 7 * 60)))?;
                self.servants[i].last_wage = if paid.is_some() { wage } else { Money::ZERO };
            }
        }

        self.repay_due(e, day, &mut tally)?;

        let rate = self.spec.vat.rate(Timestamp::from_day_number(day));
        let p = self.spec.purchase.clone();
        for i in 0..self.households.len() {
            if !rng.random_bool(p.daily_probability) {
                continue;
            }
            let firm = rng.random_range(0..self.firms.len());
            let net = uniform(rng, p.price_min, p.price_max);
            let buyer = self.households[i].clone();
            self.purchase(e, &buyer, firm, net, rate, at(day, 8 * 60 + (i % 600) as i64), &mut tally)?;
        }
        let sp = self.spec.servants_pay.clone();
        for i in 0..self.servants.len() {
            let buyer = self.servants[i].clone();
            let noise = rng.random_range(1.0 - sp.spend_noise..=1.0 + sp.spend_noise);
            let firm = rng.random_range(0..self.firms.len());
            let net = buyer.last_wage.scale(sp.spend_fraction / 7.0 * noise);
            self.purchase(e, &buyer, firm, net, rate, at(day, 12 * 60 + (i % 300) as i64), &mut tally)?;
        }

        self.random_events(e, rng, day, &mut tally)?;

        if chrono::Datelike::day(&date) == self.spec.wages.payday {
            self.pay_wages(e, day, &mut tally)?;
        }
        Ok(tally)
    }

    fn repay_due(&mut self, e: &mut Economy, day: i64, tally: &mut Tally) -> Result<(), BankError> {
        let mut still = Vec::new();
        for (loan, due) in std::mem::take(&mut self.loans) {
            if due > day {
                still.push((loan, due));
                continue;
            }
            let l = &e.loans()[loan];
            let amount = Money::from_cents(l.outstanding.cents().min(spendable(e, l.borrower)));
            let rest = l.outstanding.checked_sub(amount).expect("bounded by outstanding");
            if amount > Money::ZERO {
                tally.record(e.repay_loan(loan, amount, at(day, 9 * 60)))?;
            }
            if rest > Money::ZERO {
                still.push((loan, day + 1));
            }
        }
        self.loans = still;
        Ok(())
    }

    fn random_events(&mut self, e: &mut Economy, rng: &mut ChaCha8Rng, day: i64, tally: &mut Tally) -> Result<(), BankError> {
        if self.households.is_empty() {
            return Ok(());
        }
        let s = self.spec.clone();
        if rng.random_bool(s.loans.daily_probability) {
            let h = self.households[rng.random_range(0..self.households.len())].clone();
            let amount = uniform(rng, s.loans.min, s.loans.max);
            if let Some(loan) = tally.record(e.grant_loan(&h.bank, h.account, amount, at(day, 10 * 60)))? {
                self.loans.push((loan, day + s.loans.term_days as i64));
            }
        }
        if rng.random_bool(s.reserves.daily_probability) && !self.bank_codes.is_empty() {
            let bank = self.bank_codes[rng.random_range(0..self.bank_codes.len())].clone();
            let direction =
                if rng.random_bool(0.5) { ReserveDirection::ToCentralBank } else { ReserveDirection::FromCentralBank };
            tally.record(e.reserve_move(&bank, direction, s.reserves.amount, at(day, 11 * 60)))?;
        }
        if rng.random_bool(s.cross_border.daily_probability) {
            let h = self.households[rng.random_range(0..self.households.len())].clone();
            let amount = uniform(rng, Money::from_cents(1), s.cross_border.max.max(Money::from_cents(1)));
            let direction = if rng.random_bool(0.5) { CrossBorder::Inbound } else { CrossBorder::Outbound };
            tally.record(e.cross_border(direction, h.account, amount, at(day, 11 * 60 + 30)))?;
        }
        if !self.serials.is_empty() && rng.random_bool(s.banknotes.deposit_probability) {
            let h = self.households[rng.random_range(0..self.households.len())].clone();
            let source = Holder::Account(e.print_source());
            let circulating: Vec<u64> = self.serials.iter().copied().filter(|&n| note_holder(e, n) == Some(source)).collect();
            if !circulating.is_empty() {
                let serial = circulating[rng.random_range(0..circulating.len())];
                tally.record(e.banknote_deposit(h.account, serial, at(day, 15 * 60)))?;
            }
        }
        if !self.serials.is_empty() && rng.random_bool(s.banknotes.withdraw_probability) {
            let h = self.households[rng.random_range(0..self.households.len())].clone();
            let operating = e.bank(&h.bank).and_then(|b| b.operating).map(Holder::Account);
            let at_bank: Vec<u64> = self.serials.iter().copied().filter(|&n| note_holder(e, n) == operating).collect();
            if !at_bank.is_empty() {
                let serial = at_bank[rng.random_range(0..at_bank.len())];
                tally.record(e.banknote_withdraw(h.account, serial, at(day, 16 * 60)))?;
            }
        }
        Ok(())
    }

    /// Each firm pays out a share of its balance to its staff, who pay
    /// income tax on it the same day.
    fn pay_wages(&mut self, e: &mut Economy, day: i64, tally: &mut Tally) -> Result<(), BankError> {
        let firms = self.firms.len();
        for f in 0..firms {
            let firm = self.firms[f].clone();
            let staff: Vec<Agent> = self.households.iter().skip(f).step_by(firms).cloned().collect();
            if staff.is_empty() {
                continue;
            }
            let pool = Money::from_cents(spendable(e, firm.account)).scale(self.spec.wages.payout_fraction);
            let wage = Money::from_cents(pool.cents() / staff.len() as u64);
            if wage == Money::ZERO {
                continue;
            }
            for h in &staff {
                tally.record(pay(e, firm.account, h.account, wage, concepts::WAGE, &firm.region, at(day, 18 * 60)))?;
                let tax = wage.scale(self.spec.wages.income_tax_rate);
                if tax > Money::ZERO {
                    tally.record(pay(e, h.account, self.treasury, tax, concepts::INCOME_TAX, &h.region, at(day, 18 * 60 + 1)))?;
                }
            }
        }
        Ok(())
    }
}

fn note_holder(e: &Economy, serial: u64) -> Option<Holder> {
    let lot = e.registry().banknote(serial)?;
    e.registry().holder(*lot.numbers.first()?)
}
