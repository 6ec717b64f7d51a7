use proptest::prelude::*;

use centledger_core::bank::SelectionPolicy;
use centledger_core::ledger::{PrimaryLedger, SecondaryLedger};
use centledger_core::registry::RegistrySnapshot;
use centledger_core::sim::{ScenarioConfig, Simulation};
use centledger_core::verify::{check_ledgers, verify_statement};

const SMALL: &str = include_str!("../../../scenarios/small_economy.toml");

fn policy() -> impl Strategy<Value = SelectionPolicy> {
    prop_oneof![
        Just(SelectionPolicy::Random),
        Just(SelectionPolicy::FirstInFirstOut),
        Just(SelectionPolicy::LastInFirstOut)
    ]
}

prop_compose! {
    fn scenario()(
        seed in any::<u64>(),
        days in 5u32..15,
        max_block in prop_oneof![Just(0u64), 50u64..2000],
        households in 2u32..20,
        servants in 0u32..5,
        policies in proptest::collection::vec(policy(), 3),
        loans in 0.0f64..1.0,
        cross_border in 0.0f64..1.0,
        reserves in 0.0f64..1.0,
        notes in 0.0f64..1.0,
    ) -> ScenarioConfig {
        let mut c = ScenarioConfig::parse(SMALL).unwrap();
        c.seed = seed;
        c.duration_days = days;
        c.ledger.max_block_cents = max_block;
        for (b, p) in c.banks.iter_mut().zip(policies) {
            b.policy = p;
        }
        let e = c.economy.as_mut().unwrap();
        e.households = households;
        e.servants = servants;
        e.loans.daily_probability = loans;
        e.cross_border.daily_probability = cross_border;
        e.reserves.daily_probability = reserves;
        e.banknotes.deposit_probability = notes;
        e.banknotes.withdraw_probability = notes;
        c
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 12, ..ProptestConfig::default() })]

    #[test]
    fn generated_scenarios_conserve_and_reconcile(config in scenario()) {
        let mut sim = Simulation::new(config).unwrap();
        while !sim.is_done() {
            sim.step_day().unwrap();
            let audit = sim.economy().audit();
            prop_assert!(audit.is_clean(), "{:?}", audit);
            prop_assert_eq!(audit.registry.issued, audit.registry.live + audit.registry.sink);
        }
        let e = sim.finish().unwrap().economy;
        prop_assert!(check_ledgers(e.primary(), e.secondary()).is_ok());
        for s in e.statements() {
            prop_assert!(verify_statement(e.secondary(), s).is_consistent(), "{:?}", s);
        }
        let max = e.primary().config().max_block_cents;
        for block in e.primary().blocks() {
            // Government-to-government blocks are never subdivided.
            if !block.is_government_to_government() {
                prop_assert!(max.is_none_or(|m| block.cents.len() as u64 <= m), "{} has {} cents", block.reference, block.cents.len());
            }
            prop_assert_eq!(block.cents.len() as u64, block.amount.cents());
        }
    }

    #[test]
    fn dumps_read_back_identically(config in scenario()) {
        let e = centledger_core::sim::run(config).unwrap().economy;
        let mut bytes = Vec::new();
        e.primary().write_dump(&mut bytes).unwrap();
        let primary = PrimaryLedger::read_dump(bytes.as_slice()).unwrap();
        prop_assert_eq!(primary.blocks(), e.primary().blocks());
        prop_assert_eq!(primary.head(), e.primary().head());
        prop_assert!(primary.verify_chain().ok);

        let mut bytes = Vec::new();
        e.secondary().write_dump(&mut bytes).unwrap();
        let secondary = SecondaryLedger::read_dump(bytes.as_slice()).unwrap();
        // The links back to primary blocks stay with the banks and are not
        // part of the public dump.
        let mut expected = e.secondary().blocks().to_vec();
        for b in &mut expected {
            b.primary_refs.clear();
        }
        prop_assert_eq!(secondary.blocks(), expected.as_slice());
        prop_assert_eq!(secondary.head(), e.secondary().head());
        prop_assert_eq!(secondary.policy(), e.secondary().policy());
        prop_assert!(check_ledgers(&primary, &secondary).is_ok());

        let mut bytes = Vec::new();
        e.registry().write_snapshot(&mut bytes).unwrap();
        let snapshot = RegistrySnapshot::read(bytes.as_slice()).unwrap();
        let (from_snapshot, live) = (snapshot.audit(), e.registry().audit());
        prop_assert_eq!(from_snapshot.issued, live.issued);
        prop_assert_eq!(from_snapshot.live, live.live);
        prop_assert_eq!(from_snapshot.sink, live.sink);
        prop_assert_eq!(from_snapshot.duplicates, 0);
    }
}
