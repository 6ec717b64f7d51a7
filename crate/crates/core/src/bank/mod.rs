//! Banks, accounts, and every procedure that moves money. Each movement
//! updates holdings and the registry and appends to the primary ledger;
//! secondary blocks and statement entries are produced when a day settles.

mod holdings;

use std::collections::HashMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest as _, Sha256};
use thiserror::Error;

pub use holdings::{Holdings, SelectionPolicy, Shortfall};

use crate::ledger::{BlockDraft, LedgerError, PrimaryConfig, PrimaryLedger, SecondaryError, SecondaryLedger};
use crate::model::concepts::{self, banknote_concept};
use crate::model::{
    AccountId, ConceptCode, DetailLevel, Digest, Direction, Money, PartyCode, Reference, RegionCode,
    StatementEntry, Timestamp, TrackingNumber,
};
use crate::privacy::{
    detail_split, disclosed_concept, AnonymizationDirectory, DirectoryBuilder, DisclosurePolicy, PrivacyError,
    PrivacyPolicy,
};
use crate::registry::{ExtinctionCause, Holder, IssuePurpose, Registry, RegistryAudit, RegistryConfig, RegistryError};

/// Party ids and codes of the central bank's functional accounts.
pub mod central {
    pub const ISSUANCE: (&str, &str) = ("central-bank/issuance", "GOV-AA0");
    pub const RESERVE: (&str, &str) = ("central-bank/reserve", "GOV-AA1");
    pub const PRINT_SINK: (&str, &str) = ("central-bank/print-sink", "GOV-AA6B");
    pub const PRINT_SOURCE: (&str, &str) = ("central-bank/print-source", "GOV-AA6C");
    pub const EXTINCTION: (&str, &str) = ("central-bank/extinction", "GOV-AA9");
}

#[derive(Debug, Error)]
pub enum BankError {
    #[error("account {account} holds {available} spendable cents, {needed} needed")]
    InsufficientFunds { account: AccountId, needed: u64, available: u64 },
    #[error("reserve of bank {bank} holds {available} cents, {needed} needed")]
    InsufficientReserve { bank: String, needed: u64, available: u64 },
    #[error("amount must be at least one cent")]
    ZeroAmount,
    #[error("unknown account {0}")]
    UnknownAccount(AccountId),
    #[error("unknown bank {0}")]
    UnknownBank(String),
    #[error("unknown loan {0}")]
    UnknownLoan(usize),
    #[error("repayment of {amount} exceeds outstanding {outstanding}")]
    OverRepayment { amount: Money, outstanding: Money },
    #[error("payer and payee are the same account")]
    SameAccount,
    #[error("unknown banknote serial {0}")]
    UnknownBanknote(u64),
    #[error("banknote {0} is not in circulation outside the banks")]
    BanknoteAlreadyDeposited(u64),
    #[error("banknote {0} is not held by this bank")]
    BanknoteNotAtBank(u64),
    #[error("reference {0} already used")]
    DuplicateReference(Reference),
    #[error(transparent)]
    Party(#[from] PrivacyError),
    #[error(transparent)]
    Registry(#[from] RegistryError),
    #[error(transparent)]
    Ledger(#[from] LedgerError),
    #[error(transparent)]
    Secondary(#[from] SecondaryError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BankId(pub u16);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum AccountKind {
    Customer,
    /// Bank vault and settlement account; holds banknote and standard cents.
    Operating,
    Issuance,
    Extinction,
    Reserve,
    PrintSink,
    PrintSource,
}

#[derive(Clone, Debug)]
pub struct Account {
    pub id: AccountId,
    pub owner: String,
    pub bank: BankId,
    pub kind: AccountKind,
    pub holdings: Holdings,
}

#[derive(Clone, Debug)]
pub struct BankSpec {
    pub code: String,
    pub region: RegionCode,
    pub policy: SelectionPolicy,
}

#[derive(Clone, Debug)]
pub struct Bank {
    pub id: BankId,
    pub code: String,
    pub region: RegionCode,
    pub policy: SelectionPolicy,
    rng: ChaCha8Rng,
    pub operating: Option<AccountId>,
    pub issuance: AccountId,
    pub extinction: AccountId,
    pub reserve: AccountId,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReserveDirection {
    ToCentralBank,
    FromCentralBank,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CrossBorder {
    Outbound,
    Inbound,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum EventKind {
    Seed,
    Transfer,
    Loan,
    Repayment,
    ReserveIn,
    ReserveOut,
    Inbound,
    Outbound,
    Reprint,
    Print,
    BanknoteDeposit,
    BanknoteWithdraw,
}

impl EventKind {
    pub fn tag(self) -> &'static str {
        match self {
            EventKind::Seed => "seed",
            EventKind::Transfer => "transfer",
            EventKind::Loan => "loan",
            EventKind::Repayment => "repayment",
            EventKind::ReserveIn => "reserve-in",
            EventKind::ReserveOut => "reserve-out",
            EventKind::Inbound => "inbound",
            EventKind::Outbound => "outbound",
            EventKind::Reprint => "reprint",
            EventKind::Print => "print",
            EventKind::BanknoteDeposit => "banknote-deposit",
            EventKind::BanknoteWithdraw => "banknote-withdraw",
        }
    }
}

/// Ground truth for one movement of money, with real party ids.
#[derive(Clone, Debug)]
pub struct EventRecord {
    pub seq: u64,
    pub timestamp: Timestamp,
    pub kind: EventKind,
    pub payer: AccountId,
    pub payee: AccountId,
    pub payer_party: String,
    pub payee_party: String,
    pub amount: Money,
    /// Empty unless the economy keeps cents in its event log.
    pub cents: Vec<TrackingNumber>,
    pub cents_digest: Digest,
    pub primary_refs: Vec<Reference>,
    pub statement_reference: Option<Reference>,
    /// Registry live count and live-set fingerprint after the movement.
    pub live_count: u64,
    pub live_fingerprint: u64,
}

impl EventRecord {
    /// Tab-separated export line. Cents appear as count and digest.
    pub fn to_line(&self) -> String {
        let refs: Vec<&str> = self.primary_refs.iter().map(Reference::as_str).collect();
        format!(
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            self.seq,
            self.timestamp.datetime().format("%Y-%m-%dT%H:%M"),
            self.kind.tag(),
            self.payer_party,
            self.payee_party,
            self.amount,
            self.amount.cents(),
            self.cents_digest,
            refs.join(","),
            self.statement_reference.as_ref().map_or("-", |r| r.as_str()),
            self.payer,
        )
    }
}

#[derive(Clone, Debug)]
pub struct Loan {
    pub bank: BankId,
    pub borrower: AccountId,
    pub principal: Money,
    pub outstanding: Money,
}

/// A payment between two accounts.
#[derive(Clone, Debug)]
pub struct TransactionRequest {
    pub payer: AccountId,
    pub payee: AccountId,
    pub amount: Money,
    pub detailed_concept: ConceptCode,
    pub concept_type: ConceptCode,
    pub region: RegionCode,
    pub timestamp: Timestamp,
    /// Fixed primary reference for the first block.
    pub reference: Option<Reference>,
    /// Fixed secondary reference for the settled group.
    pub statement_reference: Option<Reference>,
}

/// Fixed references for one leg of a multi-block operation.
#[derive(Clone, Debug, Default)]
pub struct Pins {
    pub primary: Option<Reference>,
    pub statement: Option<Reference>,
}

#[derive(Clone, Debug)]
pub struct BanknotePrint {
    pub serial: u64,
    pub denomination: Money,
    pub reprint_at: Timestamp,
    pub print_at: Timestamp,
    pub reprint: Pins,
    pub print: Pins,
}

#[derive(Clone, Debug)]
pub struct EconomyConfig {
    pub seed: u64,
    pub registry: RegistryConfig,
    pub primary: PrimaryConfig,
    pub disclosure: DisclosurePolicy,
    pub privacy: PrivacyPolicy,
    pub central_bank_region: RegionCode,
    /// Index cents on the primary ledger as blocks are appended.
    pub cent_index: bool,
    /// Keep full cent lists in the event log.
    pub keep_event_cents: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EconomyAudit {
    pub registry: RegistryAudit,
    pub held_in_accounts: u64,
    /// Cents an account holds that the registry assigns elsewhere, plus
    /// registry holders whose count differs from the account's holdings.
    pub holder_mismatches: u64,
}

impl EconomyAudit {
    pub fn is_clean(&self) -> bool {
        self.registry.duplicates == 0
            && self.holder_mismatches == 0
            && self.registry.issued == self.registry.live + self.registry.sink
            && self.held_in_accounts == self.registry.live
    }
}

/// Derives an independent stream seed from a scenario seed and a label.
pub fn derive_seed(seed: u64, label: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(seed.to_be_bytes());
    h.update(label.as_bytes());
    let d = h.finalize();
    u64::from_be_bytes(d[..8].try_into().expect("8 bytes"))
}

pub fn cents_digest(cents: &[TrackingNumber]) -> Digest {
    let mut h = Sha256::new();
    for chunk in cents.chunks(512) {
        let mut buf = Vec::with_capacity(chunk.len() * 8);
        for t in chunk {
            buf.extend_from_slice(&t.value().to_be_bytes());
        }
        h.update(&buf);
    }
    Digest(h.finalize().into())
}

#[derive(Clone, Debug)]
struct Pending {
    payer: AccountId,
    payee: AccountId,
    day: i64,
    concept_type: ConceptCode,
    region: RegionCode,
    disclosed: ConceptCode,
    gov_to_gov: bool,
    refs: Vec<Reference>,
    statement: Option<Reference>,
    event: usize,
}

struct Movement {
    payer: AccountId,
    payee: AccountId,
    cents: Vec<TrackingNumber>,
    source: Holder,
    sink: Option<ExtinctionCause>,
    timestamp: Timestamp,
    detailed: ConceptCode,
    concept_type: ConceptCode,
    region: RegionCode,
    pins: Pins,
    kind: EventKind,
    allow_split: bool,
}

fn code(s: &str) -> ConceptCode {
    ConceptCode::new(s).expect("reserved concept code is valid")
}

pub struct Economy {
    config: EconomyConfig,
    registry: Registry,
    directory: AnonymizationDirectory,
    banks: Vec<Bank>,
    bank_codes: HashMap<String, BankId>,
    accounts: Vec<Account>,
    by_party: HashMap<String, AccountId>,
    print_sink: AccountId,
    print_source: AccountId,
    primary: PrimaryLedger,
    secondary: SecondaryLedger,
    pending: Vec<Pending>,
    statements: Vec<StatementEntry>,
    events: Vec<EventRecord>,
    loans: Vec<Loan>,
    split_rng: ChaCha8Rng,
}

const CENTRAL: BankId = BankId(0);

impl Economy {
    /// Builds the central bank (bank 0) and the given commercial banks.
    pub fn new(config: EconomyConfig, parties: DirectoryBuilder, banks: &[BankSpec]) -> Result<Self, BankError> {
        let mut parties = parties
            .government(central::ISSUANCE.0, central::ISSUANCE.1, Some("Central bank money issuance"))
            .government(central::RESERVE.0, central::RESERVE.1, Some("Central bank reserve"))
            .government(central::PRINT_SINK.0, central::PRINT_SINK.1, Some("Printed money tracking number sink"))
            .government(central::PRINT_SOURCE.0, central::PRINT_SOURCE.1, Some("Printed money tracking number source"))
            .government(central::EXTINCTION.0, central::EXTINCTION.1, Some("Central bank money extinction"));
        for b in banks {
            parties = parties
                .institution(&format!("{}/operating", b.code), &format!("{}-OP", b.code))
                .institution(&format!("{}/issuance", b.code), &format!("{}-MC", b.code))
                .institution(&format!("{}/extinction", b.code), &format!("{}-MX", b.code));
        }
        let directory = parties.build()?;
        let mut primary_config = config.primary.clone();
        primary_config.seed = derive_seed(config.seed, "primary-references");
        let mut primary = PrimaryLedger::new(primary_config);
        if config.cent_index {
            primary.enable_cent_index();
        }
        let mut economy = Economy {
            registry: Registry::new(config.registry.clone()),
            secondary: SecondaryLedger::new("secondary", config.disclosure.clone(), derive_seed(config.seed, "salt")),
            primary,
            directory,
            banks: Vec::new(),
            bank_codes: HashMap::new(),
            accounts: Vec::new(),
            by_party: HashMap::new(),
            print_sink: AccountId(0),
            print_source: AccountId(0),
            pending: Vec::new(),
            statements: Vec::new(),
            events: Vec::new(),
            loans: Vec::new(),
            split_rng: ChaCha8Rng::seed_from_u64(derive_seed(config.seed, "detail-split")),
            config,
        };
        let issuance = economy.add_account(central::ISSUANCE.0, CENTRAL, AccountKind::Issuance);
        let reserve = economy.add_account(central::RESERVE.0, CENTRAL, AccountKind::Reserve);
        let extinction = economy.add_account(central::EXTINCTION.0, CENTRAL, AccountKind::Extinction);
        economy.print_sink = economy.add_account(central::PRINT_SINK.0, CENTRAL, AccountKind::PrintSink);
        economy.print_source = economy.add_account(central::PRINT_SOURCE.0, CENTRAL, AccountKind::PrintSource);
        economy.banks.push(Bank {
            id: CENTRAL,
            code: "CB".into(),
            region: economy.config.central_bank_region.clone(),
            policy: SelectionPolicy::LastInFirstOut,
            rng: ChaCha8Rng::seed_from_u64(derive_seed(economy.config.seed, "bank-CB")),
            operating: None,
            issuance,
            extinction,
            reserve,
        });
        economy.bank_codes.insert("CB".into(), CENTRAL);
        for spec in banks {
            let id = BankId(economy.banks.len() as u16);
            let operating = economy.add_account(&format!("{}/operating", spec.code), id, AccountKind::Operating);
            let issuance = economy.add_account(&format!("{}/issuance", spec.code), id, AccountKind::Issuance);
            let extinction = economy.add_account(&format!("{}/extinction", spec.code), id, AccountKind::Extinction);
            let reserve = economy.add_account(central::RESERVE.0, id, AccountKind::Reserve);
            economy.banks.push(Bank {
                id,
                code: spec.code.clone(),
                region: spec.region.clone(),
                policy: spec.policy,
                rng: ChaCha8Rng::seed_from_u64(derive_seed(economy.config.seed, &format!("bank-{}", spec.code))),
                operating: Some(operating),
                issuance,
                extinction,
                reserve,
            });
            economy.bank_codes.insert(spec.code.clone(), id);
        }
        Ok(economy)
    }

    fn add_account(&mut self, owner: &str, bank: BankId, kind: AccountKind) -> AccountId {
        let id = AccountId(self.accounts.len() as u32);
        self.accounts.push(Account { id, owner: owner.to_string(), bank, kind, holdings: Holdings::default() });
        self.by_party.entry(owner.to_string()).or_insert(id);
        id
    }

    /// Opens a customer account for a registered party.
    pub fn open_account(&mut self, party: &str, bank: &str) -> Result<AccountId, BankError> {
        self.directory.code(party)?;
        let bank = *self.bank_codes.get(bank).ok_or_else(|| BankError::UnknownBank(bank.to_string()))?;
        Ok(self.add_account(party, bank, AccountKind::Customer))
    }

    pub fn config(&self) -> &EconomyConfig {
        &self.config
    }

    pub fn registry(&self) -> &Registry {
        &self.registry
    }

    pub fn directory(&self) -> &AnonymizationDirectory {
        &self.directory
    }

    pub fn primary(&self) -> &PrimaryLedger {
        &self.primary
    }

    pub fn secondary(&self) -> &SecondaryLedger {
        &self.secondary
    }

    pub fn statements(&self) -> &[StatementEntry] {
        &self.statements
    }

    pub fn events(&self) -> &[EventRecord] {
        &self.events
    }

    pub fn loans(&self) -> &[Loan] {
        &self.loans
    }

    pub fn banks(&self) -> &[Bank] {
        &self.banks
    }

    pub fn bank(&self, code: &str) -> Option<&Bank> {
        self.bank_codes.get(code).map(|id| &self.banks[id.0 as usize])
    }

    pub fn central_bank(&self) -> &Bank {
        &self.banks[0]
    }

    pub fn print_source(&self) -> AccountId {
        self.print_source
    }

    pub fn print_sink(&self) -> AccountId {
        self.print_sink
    }

    pub fn accounts(&self) -> &[Account] {
        &self.accounts
    }

    pub fn account(&self, id: AccountId) -> Result<&Account, BankError> {
        self.accounts.get(id.0 as usize).ok_or(BankError::UnknownAccount(id))
    }

    /// First account opened for `party`.
    pub fn account_of(&self, party: &str) -> Option<AccountId> {
        self.by_party.get(party).copied()
    }

    pub fn balance(&self, id: AccountId) -> Money {
        self.accounts.get(id.0 as usize).map_or(Money::ZERO, |a| Money::from_cents(a.holdings.len()))
    }

    pub fn into_ledgers(mut self) -> (PrimaryLedger, SecondaryLedger, Registry) {
        self.settle().expect("settlement of recorded blocks");
        (self.primary, self.secondary, self.registry)
    }

    fn check_account(&self, id: AccountId) -> Result<(), BankError> {
        self.account(id).map(|_| ())
    }

    fn bank_of(&self, account: AccountId) -> BankId {
        self.accounts[account.0 as usize].bank
    }

    /// Removes `n` spendable cents from `account` using `bank`'s policy.
    fn select(&mut self, account: AccountId, n: u64, bank: BankId) -> Result<Vec<TrackingNumber>, BankError> {
        let b = &mut self.banks[bank.0 as usize];
        let a = &mut self.accounts[account.0 as usize];
        a.holdings
            .take(n, b.policy, &mut b.rng)
            .map_err(|s| BankError::InsufficientFunds { account, needed: n, available: s.available })
    }

    fn require_spendable(&self, account: AccountId, n: u64) -> Result<(), BankError> {
        let available = self.accounts[account.0 as usize].holdings.spendable();
        if available < n {
            return Err(BankError::InsufficientFunds { account, needed: n, available });
        }
        Ok(())
    }

    fn check_pins(&self, pins: &Pins) -> Result<(), BankError> {
        if let Some(r) = &pins.primary {
            if self.primary.contains_reference(r.as_str()) {
                return Err(BankError::DuplicateReference(r.clone()));
            }
        }
        if let Some(r) = &pins.statement {
            // Pending transactions may share a pin and settle as one group.
            if self.secondary.lookup(r.as_str()).is_some() {
                return Err(BankError::DuplicateReference(r.clone()));
            }
        }
        Ok(())
    }

    fn party_code(&self, account: AccountId) -> Result<PartyCode, BankError> {
        Ok(self.directory.code(&self.accounts[account.0 as usize].owner)?.clone())
    }

    /// Appends a movement to the primary ledger and applies it to holdings
    /// and the registry. Callers have validated balances and pins.
    fn commit(&mut self, m: Movement) -> Result<Vec<Reference>, BankError> {
        let day = m.timestamp.day_number();
        self.settle_before(day)?;
        let payer_code = self.party_code(m.payer)?;
        let payee_code = self.party_code(m.payee)?;
        let timestamp = m.timestamp.coarsen(self.config.privacy.primary_granularity);
        let region = m.region.up(self.config.privacy.primary_region_levels_up);
        let gov_involved = payer_code.is_government() || payee_code.is_government();
        let gov_to_gov = payer_code.is_government() && payee_code.is_government();
        let amount = Money::from_cents(m.cents.len() as u64);
        let digest = cents_digest(&m.cents);
        let kept = if self.config.keep_event_cents { m.cents.clone() } else { Vec::new() };
        let draft = |detail, detailed: ConceptCode, cents, reference| BlockDraft {
            reference,
            timestamp,
            payer: payer_code.clone(),
            payee: payee_code.clone(),
            detailed_concept: detailed,
            concept_type: m.concept_type.clone(),
            region: region.clone(),
            detail,
            cents,
        };
        let drafts = if m.allow_split && self.config.privacy.detail_split && !gov_involved {
            let split = detail_split(m.cents, &mut self.split_rng, false)?;
            let generic_concept = m.detailed.up(self.config.disclosure.concept_levels_up);
            let mut out = Vec::new();
            let mut pin = m.pins.primary.clone();
            if !split.detailed.is_empty() {
                out.push(draft(DetailLevel::Full, m.detailed.clone(), split.detailed, pin.take()));
            }
            if !split.generic.is_empty() {
                out.push(draft(DetailLevel::Generic, generic_concept, split.generic, pin.take()));
            }
            out
        } else {
            vec![draft(DetailLevel::Full, m.detailed.clone(), m.cents, m.pins.primary.clone())]
        };
        let refs = self.primary.append_transaction(drafts)?;

        for r in &refs {
            let block = self.primary.get(r.as_str()).expect("just appended");
            match m.sink {
                Some(cause) => self.registry.extinguish(&block.cents, cause).expect("selected cents are live"),
                None => {
                    self.registry
                        .reassign(&block.cents, m.source, Holder::Account(m.payee))
                        .expect("selected cents held by source");
                    self.accounts[m.payee.0 as usize].holdings.deposit(&block.cents);
                }
            }
        }

        let first = self.primary.get(refs[0].as_str()).expect("just appended");
        let disclosed = disclosed_concept(first, &self.config.disclosure);
        let event = self.events.len();
        self.events.push(EventRecord {
            seq: event as u64,
            timestamp: m.timestamp,
            kind: m.kind,
            payer: m.payer,
            payee: m.payee,
            payer_party: self.accounts[m.payer.0 as usize].owner.clone(),
            payee_party: self.accounts[m.payee.0 as usize].owner.clone(),
            amount,
            cents: kept,
            cents_digest: digest,
            primary_refs: refs.clone(),
            statement_reference: None,
            live_count: self.registry.live_count(),
            live_fingerprint: self.registry.live_fingerprint(),
        });
        self.pending.push(Pending {
            payer: m.payer,
            payee: m.payee,
            day,
            concept_type: m.concept_type,
            region,
            disclosed,
            gov_to_gov,
            refs: refs.clone(),
            statement: m.pins.statement,
            event,
        });
        Ok(refs)
    }

    /// Settles every pending transaction of days before `day`.
    fn settle_before(&mut self, day: i64) -> Result<(), BankError> {
        if self.pending.iter().any(|p| p.day < day) {
            let (due, rest): (Vec<Pending>, Vec<Pending>) = std::mem::take(&mut self.pending).into_iter().partition(|p| p.day < day);
            self.pending = rest;
            self.settle_group_list(due)?;
        }
        Ok(())
    }

    /// Derives secondary blocks and statement entries for everything pending.
    pub fn settle(&mut self) -> Result<(), BankError> {
        let due = std::mem::take(&mut self.pending);
        self.settle_group_list(due)
    }

    fn settle_group_list(&mut self, due: Vec<Pending>) -> Result<(), BankError> {
        type Key = (AccountId, AccountId, i64, ConceptCode, RegionCode, ConceptCode, Option<Reference>);
        let mut groups: Vec<Vec<Pending>> = Vec::new();
        let mut index: HashMap<Key, usize> = HashMap::new();
        for p in due {
            if p.gov_to_gov {
                groups.push(vec![p]);
                continue;
            }
            let key = (p.payer, p.payee, p.day, p.concept_type.clone(), p.region.clone(), p.disclosed.clone(), p.statement.clone());
            match index.get(&key) {
                Some(&g) => groups[g].push(p),
                None => {
                    index.insert(key, groups.len());
                    groups.push(vec![p]);
                }
            }
        }
        for group in groups {
            if group[0].gov_to_gov {
                for r in &group[0].refs {
                    let single = Pending { refs: vec![r.clone()], ..group[0].clone() };
                    self.settle_one(&[single])?;
                }
            } else {
                self.settle_one(&group)?;
            }
        }
        Ok(())
    }

    fn settle_one(&mut self, group: &[Pending]) -> Result<(), BankError> {
        let blocks: Vec<&crate::model::PrimaryBlock> = group
            .iter()
            .flat_map(|p| p.refs.iter())
            .map(|r| self.primary.get(r.as_str()).expect("pending refs are on the chain"))
            .collect();
        let reference = self.secondary.record(&blocks, group[0].statement.clone())?;
        let block = self.secondary.lookup(reference.as_str()).expect("just recorded");
        let (date, amount) = (block.date, block.amount);
        let (payer_shown, payee_shown) = (block.payer.code.clone(), block.payee.code.clone());
        for p in group {
            self.events[p.event].statement_reference = Some(reference.clone());
        }
        self.statements.push(StatementEntry {
            account: group[0].payer,
            date,
            amount,
            reference: reference.clone(),
            counterpart: payee_shown,
            direction: Direction::Debit,
        });
        self.statements.push(StatementEntry {
            account: group[0].payee,
            date,
            amount,
            reference,
            counterpart: payer_shown,
            direction: Direction::Credit,
        });
        Ok(())
    }

    /// Creates money for `account` from the central bank.
    pub fn seed_money(&mut self, account: AccountId, amount: Money, at: Timestamp) -> Result<Vec<Reference>, BankError> {
        self.check_account(account)?;
        if amount == Money::ZERO {
            return Err(BankError::ZeroAmount);
        }
        let cents = self.registry.issue(amount.cents(), IssuePurpose::Seed)?;
        let region = self.banks[self.bank_of(account).0 as usize].region.clone();
        self.commit(Movement {
            payer: self.banks[0].issuance,
            payee: account,
            cents,
            source: Holder::Pending,
            sink: None,
            timestamp: at,
            detailed: code(concepts::SEED.0),
            concept_type: code(concepts::SEED.1),
            region,
            pins: Pins::default(),
            kind: EventKind::Seed,
            allow_split: false,
        })
    }

    /// Moves `amount` from payer to payee and records it.
    pub fn execute_transfer(&mut self, req: TransactionRequest) -> Result<Vec<Reference>, BankError> {
        self.check_account(req.payer)?;
        self.check_account(req.payee)?;
        if req.amount == Money::ZERO {
            return Err(BankError::ZeroAmount);
        }
        if req.payer == req.payee {
            return Err(BankError::SameAccount);
        }
        self.party_code(req.payer)?;
        self.party_code(req.payee)?;
        let pins = Pins { primary: req.reference, statement: req.statement_reference };
        self.check_pins(&pins)?;
        let bank = self.bank_of(req.payer);
        let cents = self.select(req.payer, req.amount.cents(), bank)?;
        self.commit(Movement {
            payer: req.payer,
            payee: req.payee,
            cents,
            source: Holder::Account(req.payer),
            sink: None,
            timestamp: req.timestamp,
            detailed: req.detailed_concept,
            concept_type: req.concept_type,
            region: req.region,
            pins,
            kind: EventKind::Transfer,
            allow_split: true,
        })
    }

    fn bank_id(&self, code: &str) -> Result<BankId, BankError> {
        self.bank_codes.get(code).copied().ok_or_else(|| BankError::UnknownBank(code.to_string()))
    }

    fn create(
        &mut self,
        bank: BankId,
        payee: AccountId,
        amount: Money,
        at: Timestamp,
        purpose: IssuePurpose,
        concept: (&str, &str),
        kind: EventKind,
    ) -> Result<Vec<Reference>, BankError> {
        if amount == Money::ZERO {
            return Err(BankError::ZeroAmount);
        }
        let cents = self.registry.issue(amount.cents(), purpose)?;
        let b = &self.banks[bank.0 as usize];
        let (payer, region) = (b.issuance, b.region.clone());
        self.commit(Movement {
            payer,
            payee,
            cents,
            source: Holder::Pending,
            sink: None,
            timestamp: at,
            detailed: code(concept.0),
            concept_type: code(concept.1),
            region,
            pins: Pins::default(),
            kind,
            allow_split: false,
        })
    }

    fn destroy(
        &mut self,
        bank: BankId,
        payer: AccountId,
        cents: Vec<TrackingNumber>,
        at: Timestamp,
        cause: ExtinctionCause,
        concept: (&str, &str),
        kind: EventKind,
    ) -> Result<Vec<Reference>, BankError> {
        let b = &self.banks[bank.0 as usize];
        let (payee, region) = (b.extinction, b.region.clone());
        self.commit(Movement {
            payer,
            payee,
            cents,
            source: Holder::Account(payer),
            sink: Some(cause),
            timestamp: at,
            detailed: code(concept.0),
            concept_type: code(concept.1),
            region,
            pins: Pins::default(),
            kind,
            allow_split: false,
        })
    }

    /// New money lent by `bank`. Returns the loan index.
    pub fn grant_loan(&mut self, bank: &str, borrower: AccountId, amount: Money, at: Timestamp) -> Result<usize, BankError> {
        let bank = self.bank_id(bank)?;
        self.check_account(borrower)?;
        self.create(bank, borrower, amount, at, IssuePurpose::Loan, concepts::LOAN, EventKind::Loan)?;
        self.loans.push(Loan { bank, borrower, principal: amount, outstanding: amount });
        Ok(self.loans.len() - 1)
    }

    /// Repays part of a loan; the repaid cents are extinguished.
    pub fn repay_loan(&mut self, loan: usize, amount: Money, at: Timestamp) -> Result<Vec<Reference>, BankError> {
        let l = self.loans.get(loan).ok_or(BankError::UnknownLoan(loan))?.clone();
        if amount == Money::ZERO {
            return Err(BankError::ZeroAmount);
        }
        if amount > l.outstanding {
            return Err(BankError::OverRepayment { amount, outstanding: l.outstanding });
        }
        self.require_spendable(l.borrower, amount.cents())?;
        let cents = self.select(l.borrower, amount.cents(), l.bank)?;
        let refs = self.destroy(
            l.bank,
            l.borrower,
            cents,
            at,
            ExtinctionCause::LoanRepaid,
            concepts::REPAYMENT,
            EventKind::Repayment,
        )?;
        self.loans[loan].outstanding = l.outstanding.checked_sub(amount).expect("checked above");
        Ok(refs)
    }

    /// Reserve creation issues fresh numbers held in the bank's reserve
    /// account; reserve unwind extinguishes them.
    pub fn reserve_move(
        &mut self,
        bank: &str,
        direction: ReserveDirection,
        amount: Money,
        at: Timestamp,
    ) -> Result<Vec<Reference>, BankError> {
        let id = self.bank_id(bank)?;
        let reserve = self.banks[id.0 as usize].reserve;
        match direction {
            ReserveDirection::ToCentralBank => {
                self.create(id, reserve, amount, at, IssuePurpose::ReserveCreation, concepts::RESERVE_IN, EventKind::ReserveIn)
            }
            ReserveDirection::FromCentralBank => {
                if amount == Money::ZERO {
                    return Err(BankError::ZeroAmount);
                }
                let available = self.accounts[reserve.0 as usize].holdings.spendable();
                if available < amount.cents() {
                    return Err(BankError::InsufficientReserve { bank: bank.into(), needed: amount.cents(), available });
                }
                let cents = self.select(reserve, amount.cents(), CENTRAL)?;
                self.destroy(id, reserve, cents, at, ExtinctionCause::ReserveUnwind, concepts::RESERVE_OUT, EventKind::ReserveOut)
            }
        }
    }

    /// Money leaving the country loses its numbers; money entering gets new ones.
    pub fn cross_border(
        &mut self,
        direction: CrossBorder,
        account: AccountId,
        amount: Money,
        at: Timestamp,
    ) -> Result<Vec<Reference>, BankError> {
        self.check_account(account)?;
        if amount == Money::ZERO {
            return Err(BankError::ZeroAmount);
        }
        let bank = self.bank_of(account);
        match direction {
            CrossBorder::Inbound => {
                self.create(bank, account, amount, at, IssuePurpose::InboundCrossBorder, concepts::INBOUND, EventKind::Inbound)
            }
            CrossBorder::Outbound => {
                self.require_spendable(account, amount.cents())?;
                let cents = self.select(account, amount.cents(), bank)?;
                self.destroy(
                    bank,
                    account,
                    cents,
                    at,
                    ExtinctionCause::OutboundCrossBorder,
                    concepts::OUTBOUND,
                    EventKind::Outbound,
                )
            }
        }
    }

    /// Prints a banknote: standard cents move from the central bank reserve
    /// to the print sink (reprint), then the note's own numbers are created
    /// and move from the sink to the print source (print).
    pub fn print_banknote(&mut self, p: BanknotePrint) -> Result<(Vec<Reference>, Vec<Reference>), BankError> {
        if p.denomination == Money::ZERO {
            return Err(BankError::ZeroAmount);
        }
        if self.registry.banknote(p.serial).is_some() {
            return Err(RegistryError::DuplicateSerial(p.serial).into());
        }
        let n = p.denomination.cents();
        crate::registry::banknote_numbers(p.serial, n, self.registry.config().banknote_pad16)
            .ok_or(RegistryError::BanknoteOverflow { serial: p.serial, denomination: n })?;
        let cb = self.banks[0].clone();
        let available = self.accounts[cb.reserve.0 as usize].holdings.spendable();
        if available < n {
            return Err(BankError::InsufficientReserve { bank: cb.code, needed: n, available });
        }
        self.check_pins(&p.reprint)?;
        self.check_pins(&p.print)?;
        let concept = ConceptCode::new(banknote_concept(p.serial)).expect("serial concept is alphanumeric");
        let retired = self.select(cb.reserve, n, CENTRAL)?;
        let first = self.commit(Movement {
            payer: cb.reserve,
            payee: self.print_sink,
            cents: retired,
            source: Holder::Account(cb.reserve),
            sink: None,
            timestamp: p.reprint_at,
            detailed: concept.clone(),
            concept_type: code(concepts::MONEY_REPRINT),
            region: cb.region.clone(),
            pins: p.reprint,
            kind: EventKind::Reprint,
            allow_split: false,
        })?;
        let lot = self.registry.banknote_lot(p.serial, n)?;
        self.registry.reassign(&lot, Holder::Pending, Holder::Account(self.print_sink))?;
        let second = self.commit(Movement {
            payer: self.print_sink,
            payee: self.print_source,
            cents: lot,
            source: Holder::Account(self.print_sink),
            sink: None,
            timestamp: p.print_at,
            detailed: concept,
            concept_type: code(concepts::MONEY_PRINT),
            region: cb.region,
            pins: p.print,
            kind: EventKind::Print,
            allow_split: false,
        })?;
        Ok((first, second))
    }

    fn note(&self, serial: u64) -> Result<Vec<TrackingNumber>, BankError> {
        Ok(self.registry.banknote(serial).ok_or(BankError::UnknownBanknote(serial))?.numbers.clone())
    }

    /// A customer pays a physical note into `account`. Leg one brings the
    /// note's cents from circulation into the bank's operating account; leg
    /// two credits the customer with standard cents from that account.
    pub fn banknote_deposit(
        &mut self,
        account: AccountId,
        serial: u64,
        at: Timestamp,
    ) -> Result<(Vec<Reference>, Vec<Reference>), BankError> {
        self.check_account(account)?;
        let lot = self.note(serial)?;
        let bank = self.bank_of(account);
        let operating = self.banks[bank.0 as usize].operating.ok_or(BankError::BanknoteNotAtBank(serial))?;
        if lot.iter().any(|&t| self.registry.holder(t) != Some(Holder::Account(self.print_source))) {
            return Err(BankError::BanknoteAlreadyDeposited(serial));
        }
        let n = lot.len() as u64;
        self.require_spendable(operating, n)?;
        let region = self.banks[bank.0 as usize].region.clone();
        let concept = ConceptCode::new(banknote_concept(serial)).expect("serial concept is alphanumeric");
        self.accounts[self.print_source.0 as usize].holdings.take_exact(&lot).expect("registry agrees");
        let leg1 = self.commit(Movement {
            payer: self.print_source,
            payee: operating,
            cents: lot,
            source: Holder::Account(self.print_source),
            sink: None,
            timestamp: at,
            detailed: concept,
            concept_type: code(concepts::BANKNOTE_DEPOSIT),
            region: region.clone(),
            pins: Pins::default(),
            kind: EventKind::BanknoteDeposit,
            allow_split: false,
        })?;
        let cents = self.select(operating, n, bank)?;
        let leg2 = self.commit(Movement {
            payer: operating,
            payee: account,
            cents,
            source: Holder::Account(operating),
            sink: None,
            timestamp: at,
            detailed: code("c401"),
            concept_type: code(concepts::BANKNOTE_DEPOSIT),
            region,
            pins: Pins::default(),
            kind: EventKind::BanknoteDeposit,
            allow_split: false,
        })?;
        Ok((leg1, leg2))
    }

    /// A customer takes a physical note out of `account`: standard cents
    /// move to the operating account and the note's cents go back into
    /// circulation.
    pub fn banknote_withdraw(
        &mut self,
        account: AccountId,
        serial: u64,
        at: Timestamp,
    ) -> Result<(Vec<Reference>, Vec<Reference>), BankError> {
        self.check_account(account)?;
        let lot = self.note(serial)?;
        let bank = self.bank_of(account);
        let operating = self.banks[bank.0 as usize].operating.ok_or(BankError::BanknoteNotAtBank(serial))?;
        if lot.iter().any(|&t| self.registry.holder(t) != Some(Holder::Account(operating))) {
            return Err(BankError::BanknoteNotAtBank(serial));
        }
        let n = lot.len() as u64;
        self.require_spendable(account, n)?;
        let region = self.banks[bank.0 as usize].region.clone();
        let concept = ConceptCode::new(banknote_concept(serial)).expect("serial concept is alphanumeric");
        let cents = self.select(account, n, bank)?;
        let leg1 = self.commit(Movement {
            payer: account,
            payee: operating,
            cents,
            source: Holder::Account(account),
            sink: None,
            timestamp: at,
            detailed: code("c402"),
            concept_type: code(concepts::BANKNOTE_WITHDRAW),
            region: region.clone(),
            pins: Pins::default(),
            kind: EventKind::BanknoteWithdraw,
            allow_split: false,
        })?;
        self.accounts[operating.0 as usize].holdings.take_exact(&lot).expect("registry agrees");
        let leg2 = self.commit(Movement {
            payer: operating,
            payee: self.print_source,
            cents: lot,
            source: Holder::Account(operating),
            sink: None,
            timestamp: at,
            detailed: concept,
            concept_type: code(concepts::BANKNOTE_WITHDRAW),
            region,
            pins: Pins::default(),
            kind: EventKind::BanknoteWithdraw,
            allow_split: false,
        })?;
        Ok((leg1, leg2))
    }

    /// Registry audit cross-checked against every account's holdings.
    pub fn audit(&self) -> EconomyAudit {
        let registry = self.registry.audit();
        let mut held = 0u64;
        let mut mismatches = 0u64;
        for a in &self.accounts {
            held += a.holdings.len();
            let holder = Holder::Account(a.id);
            mismatches += a.holdings.iter().filter(|&(_, t)| self.registry.holder(t) != Some(holder)).count() as u64;
            let counted = registry.per_holder.get(&holder).copied().unwrap_or(0);
            mismatches += counted.abs_diff(a.holdings.len());
        }
        mismatches += registry.per_holder.get(&Holder::Pending).copied().unwrap_or(0);
        EconomyAudit { registry, held_in_accounts: held, holder_mismatches: mismatches }
    }

    /// Cents held outside reserve and print-sink accounts.
    pub fn monetary_base_from_holdings(&self) -> Money {
        Money::from_cents(
            self.accounts
                .iter()
                .filter(|a| !matches!(a.kind, AccountKind::Reserve | AccountKind::PrintSink))
                .map(|a| a.holdings.len())
                .sum(),
        )
    }
}

#[cfg(test)]
mod tests;
