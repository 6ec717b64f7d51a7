//! Deterministic day-by-day economy simulator.
//!
//! A run is a pure function of its [`ScenarioConfig`]: every random draw
//! comes from generators seeded from the scenario seed, and operations are
//! applied in a fixed order.

mod agents;
pub mod config;
pub mod experiments;
pub mod output;
mod script;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

pub use config::{GeneratedEconomy, PartyKindSetting, ScenarioConfig, ScriptOp};
pub use experiments::{hours_experiment, vat_experiment, HoursReport, VatReport};
pub use output::write_output;

use crate::bank::{derive_seed, BankError, BankSpec, Economy, EconomyConfig};
use crate::ledger::PrimaryConfig;
use crate::privacy::AnonymizationDirectory;
use crate::registry::RegistryConfig;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid scenario: {0}")]
    Config(String),
    #[error("scenario file: {0}")]
    Toml(#[from] toml::de::Error),
    #[error("scenario schema version {found:?} is not supported (expected {expected})")]
    SchemaVersion { found: Option<i64>, expected: u32 },
    #[error("{0}: {1}")]
    Io(String, std::io::Error),
    #[error("script operation {index} failed: {source}")]
    Script { index: usize, source: BankError },
    #[error(transparent)]
    Bank(#[from] BankError),
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RunStats {
    pub days: u32,
    pub scripted: u64,
    /// Generated operations that went through.
    pub generated: u64,
    /// Generated operations dropped for lack of funds or reserves.
    pub skipped: u64,
}

pub struct RunOutput {
    pub economy: Economy,
    pub stats: RunStats,
}

pub struct Simulation {
    config: ScenarioConfig,
    economy: Economy,
    script: Vec<(usize, ScriptOp)>,
    next_op: usize,
    agents: Option<agents::Agents>,
    rng: ChaCha8Rng,
    day: u32,
    stats: RunStats,
}

impl Simulation {
    pub fn new(config: ScenarioConfig) -> Result<Self, SimError> {
        config.validate()?;
        let mut parties = AnonymizationDirectory::builder();
        for p in &config.parties {
            parties = match p.kind {
                PartyKindSetting::Government => {
                    parties.government(&p.id, p.code.as_deref().unwrap_or_default(), p.entry.as_deref())
                }
                PartyKindSetting::Institution => parties.institution(&p.id, p.code.as_deref().unwrap_or_default()),
                PartyKindSetting::Private => parties.private(&p.id, p.category.as_deref().unwrap_or_default()),
            };
        }
        for (category, codes) in &config.pools {
            let codes: Vec<&str> = codes.iter().map(String::as_str).collect();
            parties = parties.pool(category, &codes);
        }
        for (category, size) in &config.pool_sizes {
            parties = parties.pool_size(category, *size);
        }
        let layout = config.economy.as_ref().map(|e| agents::Layout::new(e, &config.banks));
        if let Some(layout) = &layout {
            parties = layout.register(parties);
        }
        let ledger = &config.ledger;
        let economy_config = EconomyConfig {
            seed: config.seed,
            registry: RegistryConfig {
                seed: derive_seed(config.seed, "registry"),
                capacity: ledger.registry_capacity,
                banknote_pad16: ledger.banknote_pad16,
            },
            primary: PrimaryConfig {
                max_block_cents: (ledger.max_block_cents > 0).then_some(ledger.max_block_cents),
                ..PrimaryConfig::default()
            },
            disclosure: config.disclosure.clone(),
            privacy: config.privacy.clone(),
            central_bank_region: config.central_bank_region.clone(),
            cent_index: ledger.cent_index,
            keep_event_cents: ledger.keep_event_cents,
        };
        let banks: Vec<BankSpec> = config
            .banks
            .iter()
            .map(|b| BankSpec { code: b.code.clone(), region: b.region.clone(), policy: b.policy })
            .collect();
        let mut economy = Economy::new(economy_config, parties, &banks)?;
        for p in &config.parties {
            economy.open_account(&p.id, &p.bank)?;
        }
        let agents = match (layout, &config.economy) {
            (Some(layout), Some(spec)) => Some(layout.open(spec.clone(), &mut economy)?),
            _ => None,
        };
        let mut script: Vec<(usize, ScriptOp)> = config.script.iter().cloned().enumerate().collect();
        script.sort_by_key(|(i, op)| (op.at().secs(), *i));
        Ok(Self {
            rng: ChaCha8Rng::seed_from_u64(derive_seed(config.seed, "agents")),
            config,
            economy,
            script,
            next_op: 0,
            agents,
            day: 0,
            stats: RunStats::default(),
        })
    }

    pub fn economy(&self) -> &Economy {
        &self.economy
    }

    pub fn config(&self) -> &ScenarioConfig {
        &self.config
    }

    pub fn stats(&self) -> &RunStats {
        &self.stats
    }

    /// Day number of the next day to simulate.
    pub fn current_day(&self) -> i64 {
        self.config.start.day_number() + self.day as i64
    }

    pub fn is_done(&self) -> bool {
        self.day >= self.config.duration_days
    }

    fn run_script_until(&mut self, last_day: Option<i64>) -> Result<(), SimError> {
        while let Some((index, op)) = self.script.get(self.next_op) {
            if last_day.is_some_and(|d| op.at().day_number() > d) {
                break;
            }
            script::apply(&mut self.economy, op).map_err(|source| SimError::Script { index: *index, source })?;
            self.next_op += 1;
            self.stats.scripted += 1;
        }
        Ok(())
    }

    /// Simulates one day: scripted operations dated that day or earlier,
    /// then the generated economy's activity.
    pub fn step_day(&mut self) -> Result<(), SimError> {
        let day = self.current_day();
        self.run_script_until(Some(day))?;
        if let Some(agents) = &mut self.agents {
            let tally = agents.step(&mut self.economy, &mut self.rng, day, self.day == 0)?;
            self.stats.generated += tally.done;
            self.stats.skipped += tally.skipped;
        }
        self.day += 1;
        self.stats.days = self.day;
        Ok(())
    }

    /// Runs any remaining days and scripted operations, then settles.
    pub fn finish(mut self) -> Result<RunOutput, SimError> {
        while !self.is_done() {
            self.step_day()?;
        }
        self.run_script_until(None)?;
        self.economy.settle()?;
        Ok(RunOutput { economy: self.economy, stats: self.stats })
    }
}

pub fn run(config: ScenarioConfig) -> Result<RunOutput, SimError> {
    Simulation::new(config)?.finish()
}

#[cfg(test)]
mod tests;
