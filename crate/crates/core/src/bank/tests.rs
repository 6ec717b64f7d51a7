use std::collections::HashSet;

use super::*;
use crate::ledger::BlockFilter;

fn region(s: &str) -> RegionCode {
    RegionCode::new(s).unwrap()
}

fn config(seed: u64) -> EconomyConfig {
    EconomyConfig {
        seed,
        registry: RegistryConfig::for_supply(seed, 10_000_000, 10),
        primary: PrimaryConfig::default(),
        disclosure: DisclosurePolicy::default(),
        privacy: PrivacyPolicy::default(),
        central_bank_region: region("rA1"),
        cent_index: true,
        keep_event_cents: true,
    }
}

fn economy(seed: u64) -> Economy {
    let parties = AnonymizationDirectory::builder()
        .private("alice", "household")
        .private("bob", "household")
        .private("carol", "household")
        .private("acme", "firm")
        .private("zeta", "firm")
        .government("tax-office", "GOV-B4E5", Some("Tax office"));
    let banks = [
        BankSpec { code: "B1".into(), region: region("rA1"), policy: SelectionPolicy::LastInFirstOut },
        BankSpec { code: "B2".into(), region: region("rB2"), policy: SelectionPolicy::Random },
    ];
    let mut e = Economy::new(config(seed), parties, &banks).unwrap();
    for (p, b) in [("alice", "B1"), ("bob", "B1"), ("carol", "B2"), ("acme", "B1"), ("zeta", "B2"), ("tax-office", "B1")] {
        e.open_account(p, b).unwrap();
    }
    e
}

fn t(d: u32, h: u32) -> Timestamp {
    Timestamp::ymd_hm(2024, 3, d, h, 0)
}

fn eur(units: u64) -> Money {
    Money::from_units(units)
}

fn pay(e: &mut Economy, from: &str, to: &str, amount: Money, at: Timestamp) -> Result<Vec<Reference>, BankError> {
    let (payer, payee) = (e.account_of(from).unwrap(), e.account_of(to).unwrap());
    e.execute_transfer(TransactionRequest {
        payer,
        payee,
        amount,
        detailed_concept: ConceptCode::new("s23").unwrap(),
        concept_type: ConceptCode::new("s2").unwrap(),
        region: region("rA1"),
        timestamp: at,
        reference: None,
        statement_reference: None,
    })
}

fn live_set(e: &Economy, account: AccountId) -> HashSet<TrackingNumber> {
    e.account(account).unwrap().holdings.iter().map(|(_, t)| t).collect()
}

#[test]
fn loan_raises_base_and_repayment_restores_it() {
    let mut e = economy(1);
    let alice = e.account_of("alice").unwrap();
    let before = e.monetary_base_from_holdings();
    let loan = e.grant_loan("B1", alice, eur(500), t(1, 9)).unwrap();
    assert_eq!(e.monetary_base_from_holdings().cents() - before.cents(), 50_000);
    assert_eq!(e.registry().live_count(), 50_000);
    assert!(matches!(e.repay_loan(loan, eur(501), t(2, 9)), Err(BankError::OverRepayment { .. })));
    e.repay_loan(loan, eur(200), t(2, 9)).unwrap();
    e.repay_loan(loan, eur(300), t(3, 9)).unwrap();
    assert_eq!(e.monetary_base_from_holdings(), before);
    assert_eq!(e.registry().sink().len(), 50_000);
    assert_eq!(e.loans()[loan].outstanding, Money::ZERO);
    assert!(e.audit().is_clean());
}

#[test]
fn loans_from_two_banks_are_disjoint() {
    let mut e = economy(2);
    let (alice, carol) = (e.account_of("alice").unwrap(), e.account_of("carol").unwrap());
    e.grant_loan("B1", alice, eur(30), t(1, 9)).unwrap();
    e.grant_loan("B2", carol, eur(40), t(1, 10)).unwrap();
    let (a, c) = (live_set(&e, alice), live_set(&e, carol));
    assert_eq!((a.len(), c.len()), (3_000, 4_000));
    assert!(a.is_disjoint(&c));
}

#[test]
fn reserve_round_trip() {
    let mut e = economy(3);
    let reserve = e.bank("B1").unwrap().reserve;
    e.reserve_move("B1", ReserveDirection::ToCentralBank, eur(10), t(1, 9)).unwrap();
    assert_eq!(e.balance(reserve), eur(10));
    assert!(matches!(
        e.reserve_move("B1", ReserveDirection::FromCentralBank, eur(11), t(1, 10)),
        Err(BankError::InsufficientReserve { .. })
    ));
    e.reserve_move("B1", ReserveDirection::FromCentralBank, eur(10), t(1, 10)).unwrap();
    assert_eq!(e.balance(reserve), Money::ZERO);
    assert_eq!(e.registry().live_count(), 0);
    assert!(e.audit().is_clean());
}

#[test]
fn outbound_numbers_never_return() {
    let mut e = economy(4);
    let acme = e.account_of("acme").unwrap();
    e.cross_border(CrossBorder::Inbound, acme, eur(5), t(1, 9)).unwrap();
    let gone = live_set(&e, acme);
    e.cross_border(CrossBorder::Outbound, acme, eur(5), t(1, 10)).unwrap();
    e.cross_border(CrossBorder::Inbound, acme, eur(5), t(1, 11)).unwrap();
    let back = live_set(&e, acme);
    assert_eq!(back.len(), 500);
    assert!(gone.is_disjoint(&back));
    assert!(gone.iter().all(|&tn| !e.registry().is_live(tn) && e.registry().was_issued(tn)));
}

#[test]
fn one_cent_transfer() {
    let mut e = economy(5);
    let alice = e.account_of("alice").unwrap();
    e.seed_money(alice, Money::from_cents(1), t(1, 8)).unwrap();
    let refs = pay(&mut e, "alice", "bob", Money::from_cents(1), t(1, 9)).unwrap();
    assert_eq!(refs.len(), 1);
    let block = e.primary().get(refs[0].as_str()).unwrap();
    assert_eq!(block.cents.len(), 1);
    assert_eq!(e.balance(e.account_of("bob").unwrap()), Money::from_cents(1));
}

#[test]
fn failed_transfer_leaves_no_trace() {
    let mut e = economy(6);
    let alice = e.account_of("alice").unwrap();
    e.seed_money(alice, eur(1), t(1, 8)).unwrap();
    let len = e.primary().len();
    assert!(matches!(
        pay(&mut e, "alice", "bob", Money::from_cents(101), t(1, 9)),
        Err(BankError::InsufficientFunds { needed: 101, available: 100, .. })
    ));
    assert!(matches!(pay(&mut e, "alice", "bob", Money::ZERO, t(1, 9)), Err(BankError::ZeroAmount)));
    assert_eq!(e.primary().len(), len);
    assert_eq!(e.balance(alice), eur(1));
}

#[test]
fn private_transfer_is_split_and_settled() {
    let mut e = economy(7);
    let alice = e.account_of("alice").unwrap();
    e.seed_money(alice, eur(100), t(1, 8)).unwrap();
    let refs = pay(&mut e, "alice", "bob", eur(50), t(2, 9)).unwrap();
    let blocks: Vec<_> = refs.iter().map(|r| e.primary().get(r.as_str()).unwrap().clone()).collect();
    assert_eq!(blocks.iter().map(|b| b.cents.len()).sum::<usize>(), 5_000);
    let detailed: usize = blocks.iter().filter(|b| b.detail == DetailLevel::Full).map(|b| b.cents.len()).sum();
    assert!(detailed <= 2_500);
    for b in &blocks {
        match b.detail {
            DetailLevel::Full => assert_eq!(b.detailed_concept.as_str(), "s23"),
            DetailLevel::Generic => assert_eq!(b.detailed_concept.as_str(), "s2"),
        }
    }
    e.settle().unwrap();
    let statements: Vec<_> = e.statements().iter().filter(|s| s.date.day_number() == t(2, 0).day_number()).collect();
    assert_eq!(statements.len(), 2);
    assert_eq!(statements[0].reference, statements[1].reference);
    let sec = e.secondary().lookup(statements[0].reference.as_str()).unwrap();
    assert_eq!(sec.amount, eur(50));
    assert_eq!(sec.concept.as_str(), "s2");
    assert_eq!(e.events().last().unwrap().statement_reference.as_ref(), Some(&statements[0].reference));
}

#[test]
fn same_day_transfers_share_one_secondary_block() {
    let mut e = economy(8);
    let alice = e.account_of("alice").unwrap();
    e.seed_money(alice, eur(100), t(1, 8)).unwrap();
    pay(&mut e, "alice", "bob", eur(10), t(2, 9)).unwrap();
    pay(&mut e, "alice", "bob", eur(15), t(2, 17)).unwrap();
    pay(&mut e, "alice", "bob", eur(5), t(3, 9)).unwrap();
    e.settle().unwrap();
    let amounts: Vec<Money> = e.secondary().blocks().iter().skip(1).map(|b| b.amount).collect();
    assert_eq!(amounts, vec![eur(25), eur(5)]);
}

#[test]
fn government_transfers_are_not_split() {
    let mut e = economy(9);
    let alice = e.account_of("alice").unwrap();
    e.seed_money(alice, eur(10), t(1, 8)).unwrap();
    let refs = pay(&mut e, "alice", "tax-office", eur(10), t(2, 9)).unwrap();
    assert_eq!(refs.len(), 1);
    assert_eq!(e.primary().get(refs[0].as_str()).unwrap().detail, DetailLevel::Full);
}

fn print(e: &mut Economy, serial: u64, units: u64) {
    e.reserve_move("CB", ReserveDirection::ToCentralBank, eur(units), t(1, 7)).unwrap();
    e.print_banknote(BanknotePrint {
        serial,
        denomination: eur(units),
        reprint_at: t(1, 8),
        print_at: t(1, 8),
        reprint: Pins::default(),
        print: Pins::default(),
    })
    .unwrap();
}

#[test]
fn banknote_cycle() {
    let mut e = economy(10);
    print(&mut e, 42, 5);
    let source = e.print_source();
    assert_eq!(e.balance(source), eur(5));
    let operating = e.bank("B1").unwrap().operating.unwrap();
    e.seed_money(operating, eur(20), t(1, 9)).unwrap();
    let alice = e.account_of("alice").unwrap();
    e.banknote_deposit(alice, 42, t(2, 9)).unwrap();
    assert_eq!(e.balance(alice), eur(5));
    assert_eq!(e.account(operating).unwrap().holdings.banknote_count(), 500);
    assert!(matches!(e.banknote_deposit(alice, 42, t(2, 10)), Err(BankError::BanknoteAlreadyDeposited(42))));
    e.banknote_withdraw(alice, 42, t(3, 9)).unwrap();
    assert_eq!(e.balance(alice), Money::ZERO);
    assert_eq!(e.balance(source), eur(5));
    assert_eq!(e.balance(operating), eur(20));
    assert!(e.audit().is_clean());

    // Every note cent traces back to its reprint block.
    let note = e.registry().banknote(42).unwrap().numbers.clone();
    let filter = BlockFilter { concept_prefix: Some("X42".into()), ..Default::default() };
    assert_eq!(e.primary().query(&filter).len(), 4);
    assert!(note.iter().all(|t| t.class() == crate::model::NumberClass::Banknote));
}

#[test]
fn banknote_deposit_without_bank_cash_records_nothing() {
    let mut e = economy(11);
    print(&mut e, 7, 10);
    let alice = e.account_of("alice").unwrap();
    let len = e.primary().len();
    let events = e.events().len();
    assert!(matches!(e.banknote_deposit(alice, 7, t(2, 9)), Err(BankError::InsufficientFunds { .. })));
    assert_eq!((e.primary().len(), e.events().len()), (len, events));
    assert_eq!(e.balance(e.print_source()), eur(10));
    assert!(matches!(e.banknote_withdraw(alice, 7, t(2, 9)), Err(BankError::BanknoteNotAtBank(7))));
    assert!(matches!(e.banknote_deposit(alice, 8, t(2, 9)), Err(BankError::UnknownBanknote(8))));
    assert!(e.audit().is_clean());
}

#[test]
fn same_seed_same_ledgers() {
    let run = |seed| {
        let mut e = economy(seed);
        let (alice, carol) = (e.account_of("alice").unwrap(), e.account_of("carol").unwrap());
        e.grant_loan("B1", alice, eur(30), t(1, 9)).unwrap();
        e.grant_loan("B2", carol, eur(30), t(1, 9)).unwrap();
        pay(&mut e, "alice", "bob", eur(7), t(2, 9)).unwrap();
        pay(&mut e, "carol", "zeta", eur(9), t(2, 9)).unwrap();
        let (p, s, _) = e.into_ledgers();
        (p.head(), s.head())
    };
    assert_eq!(run(12), run(12));
    assert_ne!(run(12), run(13));
}

#[test]
fn derive_seed_separates_labels() {
    assert_ne!(derive_seed(1, "a"), derive_seed(1, "b"));
    assert_eq!(derive_seed(1, "a"), derive_seed(1, "a"));
}
