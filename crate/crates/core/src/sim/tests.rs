use super::*;
use crate::model::{Money, Timestamp};
use crate::sim::config::{LedgerSettings, VatSchedule};

const SMALL: &str = include_str!("../../../../scenarios/small_economy.toml");

fn small(days: u32) -> ScenarioConfig {
    let mut c = ScenarioConfig::parse(SMALL).unwrap();
    c.duration_days = days;
    c
}

#[test]
fn bundled_scenarios_parse() {
    for text in [
        SMALL,
        config::WORKED_EXAMPLES,
        include_str!("../../../../scenarios/vat_experiment.toml"),
        include_str!("../../../../scenarios/hours_experiment.toml"),
    ] {
        let c = ScenarioConfig::parse(text).unwrap();
        let again = ScenarioConfig::parse(&c.to_toml()).unwrap();
        assert_eq!(again.to_toml(), c.to_toml());
    }
}

#[test]
fn schema_version_is_checked() {
    let text = SMALL.replace("schema_version = 1", "schema_version = 2");
    assert!(matches!(
        ScenarioConfig::parse(&text),
        Err(SimError::SchemaVersion { found: Some(2), expected: 1 })
    ));
    let text = SMALL.replace("schema_version = 1", "");
    assert!(matches!(ScenarioConfig::parse(&text), Err(SimError::SchemaVersion { found: None, .. })));
}

#[test]
fn unknown_fields_and_bad_rates_are_rejected() {
    assert!(matches!(ScenarioConfig::parse(&SMALL.replace("seed = 7", "seed = 7\ncolour = 1")), Err(SimError::Toml(_))));
    let text = SMALL.replace("base_rate = 0.20", "base_rate = 1.20");
    assert!(matches!(ScenarioConfig::parse(&text), Err(SimError::Config(_))));
    let text = SMALL.replace("daily_probability = 0.8", "daily_probability = -0.1");
    assert!(matches!(ScenarioConfig::parse(&text), Err(SimError::Config(_))));
    let text = SMALL.replace("duration_days = 60", "duration_days = 0");
    assert!(matches!(ScenarioConfig::parse(&text), Err(SimError::Config(_))));
}

#[test]
fn empty_scenario_records_only_its_seed() {
    let c = ScenarioConfig::parse(
        r#"
schema_version = 1
seed = 3
duration_days = 1

[[banks]]
code = "B1"
region = "rA1"

[[parties]]
id = "someone"
kind = "private"
category = "person"
bank = "B1"

[[parties]]
id = "someone-else"
kind = "private"
category = "person"
bank = "B1"

[[script]]
op = "seed"
party = "someone"
amount = "12.34"
at = "2024-01-01 09:00"
"#,
    )
    .unwrap();
    let out = run(c).unwrap();
    let e = &out.economy;
    assert_eq!(e.primary().len(), 1);
    assert_eq!(e.secondary().len(), 1);
    assert_eq!(crate::analytics::monetary_base(e.primary(), Timestamp::day(2024, 1, 2)), Money::from_cents(1234));
    assert_eq!(out.stats, RunStats { days: 1, scripted: 1, generated: 0, skipped: 0 });
}

#[test]
fn vat_rate_alternates_by_calendar_month() {
    let v = VatSchedule { base_rate: 0.2, amplitude: 0.001, period_months: 2 };
    let jan = v.rate(Timestamp::day(2024, 1, 15));
    let feb = v.rate(Timestamp::day(2024, 2, 15));
    assert!((jan - 0.201).abs() < 1e-12 && (feb - 0.199).abs() < 1e-12);
    assert_eq!(v.rate(Timestamp::day(2025, 1, 1)), jan);
    let v4 = VatSchedule { period_months: 4, ..v };
    let rates: Vec<f64> = (1..=8).map(|m| v4.rate(Timestamp::day(2024, m, 1))).collect();
    assert_eq!(rates[0], rates[1]);
    assert_eq!(rates[2], rates[3]);
    assert_ne!(rates[1], rates[2]);
    assert_eq!(rates[0], rates[4]);
}

#[test]
fn generated_economy_stays_consistent() {
    let mut sim = Simulation::new(small(45)).unwrap();
    while !sim.is_done() {
        sim.step_day().unwrap();
        let audit = sim.economy().audit();
        assert!(audit.is_clean(), "{audit:?}");
    }
    let out = sim.finish().unwrap();
    let e = &out.economy;
    assert!(out.stats.generated > 1000, "{:?}", out.stats);
    let kinds: std::collections::BTreeSet<&str> = e.events().iter().map(|ev| ev.kind.tag()).collect();
    for k in ["seed", "transfer", "loan", "repayment", "reserve-in", "reserve-out", "print", "reprint", "deposit", "withdraw"] {
        assert!(kinds.iter().any(|t| t.contains(k)), "no {k} event in {kinds:?}");
    }
    assert!(crate::verify::check_ledgers(e.primary(), e.secondary()).is_ok());
    for ev in e.events() {
        for r in &ev.primary_refs {
            assert!(e.primary().contains_reference(r.as_str()));
        }
        assert!(ev.statement_reference.is_some());
    }
    let listed: usize = e.events().iter().map(|ev| ev.primary_refs.len()).sum();
    assert_eq!(listed, e.primary().len());
}

#[test]
fn same_seed_same_ledgers() {
    let dump = |c: ScenarioConfig| {
        let out = run(c).unwrap();
        let mut bytes = Vec::new();
        write_dumps(&out.economy, &mut bytes);
        bytes
    };
    let a = dump(small(20));
    assert_eq!(a, dump(small(20)));
    let mut other = small(20);
    other.seed += 1;
    assert_ne!(a, dump(other));
}

fn write_dumps(e: &crate::bank::Economy, out: &mut Vec<u8>) {
    e.primary().write_dump(out).unwrap();
    e.secondary().write_dump(out).unwrap();
    e.registry().write_snapshot(out).unwrap();
    for ev in e.events() {
        out.extend_from_slice(ev.to_line().as_bytes());
    }
}

#[test]
fn servants_are_paid_by_week_parity() {
    let mut c = small(28);
    let spec = c.economy.as_mut().unwrap();
    spec.households = 0;
    spec.banknotes.count = 0;
    c.ledger = LedgerSettings { max_block_cents: 0, ..LedgerSettings::default() };
    let out = run(c).unwrap();
    let wages: Vec<(i64, u64)> = out
        .economy
        .primary()
        .blocks()
        .iter()
        .filter(|b| b.concept_type.as_str() == "w24" && b.payer.code == "GOV- B4E5")
        .map(|b| ((b.timestamp.day_number() + 3).div_euclid(7), b.amount.cents()))
        .collect();
    assert_eq!(wages.len(), 4 * 6);
    for (week, cents) in wages {
        assert_eq!(cents, if week % 2 == 0 { 3000 } else { 4000 });
    }
}

#[test]
fn output_directory_has_every_file() {
    let out = run(small(5)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    write_output(&out.economy, dir.path()).unwrap();
    for f in [output::PRIMARY_FILE, output::SECONDARY_FILE, output::REGISTRY_FILE, output::STATEMENTS_FILE, output::EVENTS_FILE] {
        let meta = std::fs::metadata(dir.path().join(f)).unwrap();
        assert!(meta.len() > 0, "{f} is empty");
    }
    let events = std::fs::read_to_string(dir.path().join(output::EVENTS_FILE)).unwrap();
    assert_eq!(events.lines().count(), out.economy.events().len() + 1);
}

#[test]
fn script_errors_name_the_operation() {
    let text = config::WORKED_EXAMPLES.replace("amount = \"25625.17\"", "amount = \"25000.00\"");
    let mut c = ScenarioConfig::parse(&text).unwrap();
    c.script.truncate(7);
    match run(c) {
        Err(SimError::Script { index: 6, source: crate::bank::BankError::InsufficientFunds { .. } }) => {}
        Err(e) => panic!("unexpected error {e}"),
        Ok(_) => panic!("overdraft accepted"),
    }
}
