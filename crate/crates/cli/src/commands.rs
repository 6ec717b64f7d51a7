use std::fs::File;
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};

use centledger_core::analytics::{
    self, capacity_table, daily_base, flow_aggregate, format_bytes, gdp_storage, monetary_base, storage_bytes,
    ConceptField, FlowSpec, Period, PeriodicSignal, BYTES_PER_CENT,
};
use centledger_core::ledger::{BlockFilter, PrimaryLedger, SecondaryLedger, TraceDirection};
use centledger_core::registry::RegistrySnapshot;
use centledger_core::sim::output::{PRIMARY_FILE, REGISTRY_FILE, SECONDARY_FILE, STATEMENTS_FILE};
use centledger_core::sim::{self, ScenarioConfig};
use centledger_core::verify::{check_ledgers, reconcile, reconcile_mismatches, verify_statement, StatementCheck};
use centledger_core::{Granularity, Money, PrimaryBlock, Reference, StatementEntry, Timestamp, TrackingNumber};

use crate::report::{pairs, Format, Table};
use crate::{Cli, Command, ExperimentKind, FilterArgs, LedgerArg, PeriodArg, StatCommand};

/// Outcome of a command that ran to completion.
pub enum Status {
    Ok,
    /// A verification came out negative; reported on stdout.
    CheckFailed,
}

impl Status {
    fn from_ok(ok: bool) -> Self {
        if ok {
            Status::Ok
        } else {
            Status::CheckFailed
        }
    }
}

pub fn dispatch(cli: &Cli) -> Result<Status> {
    let stdout = io::stdout();
    let mut out = io::BufWriter::new(stdout.lock());
    let status = run_command(cli, &mut out)?;
    out.flush()?;
    Ok(status)
}

fn run_command(cli: &Cli, out: &mut impl Write) -> Result<Status> {
    let f = cli.format;
    match &cli.command {
        Command::Run { config, out: dir, seed } => {
            let mut config = load_config(config, cli.config_path.as_deref())?;
            if let Some(seed) = seed {
                config.seed = *seed;
            }
            let name = config.name.clone();
            let result = sim::run(config)?;
            let e = &result.economy;
            sim::write_output(e, dir).with_context(|| format!("writing {}", dir.display()))?;
            pairs(
                out,
                f,
                &[
                    ("scenario", name),
                    ("days", result.stats.days.to_string()),
                    ("scripted operations", result.stats.scripted.to_string()),
                    ("generated operations", result.stats.generated.to_string()),
                    ("skipped operations", result.stats.skipped.to_string()),
                    ("events", e.events().len().to_string()),
                    ("primary blocks", e.primary().len().to_string()),
                    ("secondary blocks", e.secondary().len().to_string()),
                    ("statement entries", e.statements().len().to_string()),
                    ("output", dir.display().to_string()),
                ],
            )?;
            Ok(Status::Ok)
        }
        Command::Query { ledger, filter, limit } => {
            let primary = load_primary(ledger)?;
            let filter = block_filter(filter)?;
            let blocks = primary.query(&filter);
            let mut t = block_table();
            for b in blocks.iter().take(limit.unwrap_or(usize::MAX)) {
                block_row(&mut t, b);
            }
            t.write(out, f)?;
            Ok(Status::Ok)
        }
        Command::Trace { ledger, cent, up, from } => {
            let tn: TrackingNumber = cent.parse().map_err(|_| anyhow::anyhow!("`{cent}` is not a tracking number"))?;
            let primary = load_primary(ledger)?;
            let direction = if *up { TraceDirection::Up } else { TraceDirection::Down };
            let from = from.as_ref().map(|r| Reference::new(r.clone()));
            let refs = primary.trace_cent(tn, direction, from.as_ref())?;
            let mut t = block_table();
            for r in &refs {
                let b = primary.get(r.as_str()).context("trace returned an unknown block")?;
                block_row(&mut t, b);
            }
            t.write(out, f)?;
            Ok(Status::Ok)
        }
        Command::VerifyStatement { ledger, reference, amount, date } => {
            let secondary = load_secondary(ledger)?;
            verify_statement_cmd(out, f, &ledger.ledger, &secondary, reference, amount.as_deref(), date.as_deref())
        }
        Command::Reconcile { ledger, day, concept, region } => {
            let day = parse_time(day)?;
            let primary = load_primary(ledger)?;
            let secondary = load_secondary(ledger)?;
            let r = reconcile(&primary, &secondary, day.day_number(), region, concept);
            pairs(
                out,
                f,
                &[
                    ("day", Timestamp::from_day_number(day.day_number()).to_string()),
                    ("region", region.clone()),
                    ("concept", concept.clone()),
                    ("primary total", r.primary_total.to_string()),
                    ("secondary total", r.secondary_total.to_string()),
                    ("result", if r.matches() { "match" } else { "MISMATCH" }.to_string()),
                ],
            )?;
            Ok(Status::from_ok(r.matches()))
        }
        Command::VerifyChain { ledger } => {
            let primary = load_primary(ledger)?;
            let secondary = load_secondary(ledger)?;
            let check = check_ledgers(&primary, &secondary);
            let p = primary.verify_chain();
            let s = secondary.verify_chain();
            let chain = |ok: bool, first_bad: Option<usize>, n: usize| match (ok, first_bad) {
                (true, _) => format!("ok ({n} blocks)"),
                (false, Some(i)) => format!("BROKEN at block {i} of {n}"),
                (false, None) => format!("BROKEN at head ({n} blocks)"),
            };
            pairs(
                out,
                f,
                &[
                    ("primary chain", chain(p.ok, p.first_bad, p.blocks)),
                    ("secondary chain", chain(s.ok, s.first_bad, s.blocks)),
                    ("mismatched buckets", check.mismatched_buckets.to_string()),
                ],
            )?;
            if check.mismatched_buckets > 0 && f == Format::Text {
                let mut t = Table::new(&["day", "region", "concept", "primary", "secondary"]);
                for ((day, region, concept), r) in reconcile_mismatches(&primary, &secondary) {
                    t.row([
                        Timestamp::from_day_number(day).to_string(),
                        region.to_string(),
                        concept.to_string(),
                        r.primary_total.to_string(),
                        r.secondary_total.to_string(),
                    ]);
                }
                t.write(out, f)?;
            }
            Ok(Status::from_ok(check.is_ok()))
        }
        Command::Audit { ledger } => {
            let path = ledger.ledger.join(REGISTRY_FILE);
            let snap = RegistrySnapshot::read(open(&path)?).with_context(|| format!("reading {}", path.display()))?;
            let a = snap.audit();
            let balanced = a.issued == a.live + a.sink;
            let mut items = vec![
                ("issued", a.issued.to_string()),
                ("live", a.live.to_string()),
                ("sink", a.sink.to_string()),
                ("duplicates", a.duplicates.to_string()),
                ("issued = live + sink", balanced.to_string()),
            ];
            let holders: Vec<(String, String)> =
                a.per_holder.iter().map(|(h, n)| (format!("holder {h}"), n.to_string())).collect();
            items.extend(holders.iter().map(|(k, v)| (k.as_str(), v.clone())));
            pairs(out, f, &items)?;
            Ok(Status::from_ok(balanced && a.duplicates == 0))
        }
        Command::Stats { stat } => stats(out, f, stat),
        Command::CapacityTable => {
            let mut t = Table::new(&["region", "m2", "unit", "tracking_numbers", "hex"]);
            for r in capacity_table() {
                t.row([r.region, r.m2.to_string(), r.currency, r.tracking_numbers.to_string(), r.hex]);
            }
            t.write(out, f)?;
            Ok(Status::Ok)
        }
        Command::StorageEstimate { amounts, gdp, usd_per_tb } => {
            let mut t = Table::new(&["amount", "cents", "bytes", "size"]);
            for &a in amounts {
                let m = Money::from_units(a);
                let bytes = storage_bytes(m);
                t.row([m.to_string(), m.cents().to_string(), bytes.to_string(), format_bytes(bytes)]);
            }
            let est = gdp_storage(*gdp, 100, BYTES_PER_CENT as u128, *usd_per_tb);
            t.row([
                format!("GDP {gdp}"),
                (gdp * 100).to_string(),
                est.bytes.to_string(),
                format!("{} TB, ${} per node per year", est.terabytes_rounded, est.cost_per_node),
            ]);
            t.write(out, f)?;
            Ok(Status::Ok)
        }
        Command::Experiment { kind, config, seed, series } => {
            let mut config = load_config(config, cli.config_path.as_deref())?;
            if let Some(seed) = seed {
                config.seed = *seed;
            }
            experiment(out, f, *kind, config, *series)
        }
    }
}

/// Finds a scenario file: as given, then under each search directory.
fn resolve_config(path: &Path, search: Option<&std::ffi::OsStr>) -> Result<PathBuf> {
    if path.exists() {
        return Ok(path.to_path_buf());
    }
    if path.is_relative() {
        if let Some(search) = search {
            for dir in std::env::split_paths(search) {
                let candidate = dir.join(path);
                if candidate.exists() {
                    return Ok(candidate);
                }
            }
        }
    }
    bail!("scenario file {} not found", path.display())
}

fn load_config(path: &Path, search: Option<&std::ffi::OsStr>) -> Result<ScenarioConfig> {
    let path = resolve_config(path, search)?;
    ScenarioConfig::load(&path).with_context(|| format!("loading {}", path.display()))
}

fn open(path: &Path) -> Result<BufReader<File>> {
    Ok(BufReader::new(File::open(path).with_context(|| format!("opening {}", path.display()))?))
}

fn load_primary(ledger: &LedgerArg) -> Result<PrimaryLedger> {
    let path = ledger.ledger.join(PRIMARY_FILE);
    PrimaryLedger::read_dump(open(&path)?).with_context(|| format!("reading {}", path.display()))
}

fn load_secondary(ledger: &LedgerArg) -> Result<SecondaryLedger> {
    let path = ledger.ledger.join(SECONDARY_FILE);
    SecondaryLedger::read_dump(open(&path)?).with_context(|| format!("reading {}", path.display()))
}

fn parse_time(s: &str) -> Result<Timestamp> {
    s.parse().map_err(|_| anyhow::anyhow!("`{s}` is not a date (YYYY-MM-DD or YYYY-MM-DD HH:MM)"))
}

fn parse_money(s: &str) -> Result<Money> {
    s.parse().map_err(|_| anyhow::anyhow!("`{s}` is not an amount"))
}

/// Date bounds are inclusive; a bare `--to` date covers that whole day.
fn block_filter(a: &FilterArgs) -> Result<BlockFilter> {
    let to = a
        .to
        .as_deref()
        .map(|s| {
            let t = parse_time(s)?;
            Ok::<_, anyhow::Error>(match t.granularity() {
                Granularity::Day => Timestamp::from_secs(t.secs() + 86_400 - 60, Granularity::Minute),
                _ => t,
            })
        })
        .transpose()?;
    Ok(BlockFilter {
        from: a.from.as_deref().map(parse_time).transpose()?,
        to,
        region_prefix: a.region.clone(),
        concept_prefix: a.concept.clone(),
        party: a.party.clone(),
        min_amount: a.min_amount.as_deref().map(parse_money).transpose()?,
        max_amount: a.max_amount.as_deref().map(parse_money).transpose()?,
    })
}

fn block_table() -> Table {
    Table::new(&["reference", "time", "payer", "payee", "concept", "type", "region", "amount", "cents"])
}

fn block_row(t: &mut Table, b: &PrimaryBlock) {
    t.row([
        b.reference.to_string(),
        b.timestamp.to_string(),
        b.payer.code.clone(),
        b.payee.code.clone(),
        b.detailed_concept.to_string(),
        b.concept_type.to_string(),
        b.region.to_string(),
        b.amount.to_string(),
        b.cents.len().to_string(),
    ]);
}

fn read_statements(dir: &Path) -> Result<Vec<StatementEntry>> {
    let path = dir.join(STATEMENTS_FILE);
    if !path.exists() {
        return Ok(Vec::new());
    }
    let mut entries = Vec::new();
    for (i, line) in open(&path)?.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let entry = StatementEntry::from_line(&line)
            .with_context(|| format!("{} line {}: not a statement entry", path.display(), i + 1))?;
        entries.push(entry);
    }
    Ok(entries)
}

fn verify_statement_cmd(
    out: &mut impl Write,
    f: Format,
    dir: &Path,
    secondary: &SecondaryLedger,
    reference: &str,
    amount: Option<&str>,
    date: Option<&str>,
) -> Result<Status> {
    let Some(block) = secondary.lookup(reference) else {
        pairs(out, f, &[("reference", reference.to_string()), ("status", "NotFound".to_string())])?;
        return Ok(Status::CheckFailed);
    };
    let mut items = vec![
        ("reference", reference.to_string()),
        ("status", "Found".to_string()),
        ("amount", block.amount.to_string()),
        ("date", block.date.to_string()),
        ("payer", block.payer.code.clone()),
        ("payee", block.payee.code.clone()),
        ("concept", block.concept.to_string()),
        ("region", block.region.to_string()),
    ];
    // Entries to check: the one described on the command line, or every
    // statement line in the directory carrying this reference.
    let entries: Vec<StatementEntry> = if amount.is_some() || date.is_some() {
        let mut e = StatementEntry {
            account: centledger_core::AccountId(0),
            date: block.date,
            amount: block.amount,
            reference: Reference::new(reference),
            counterpart: String::new(),
            direction: centledger_core::Direction::Debit,
        };
        if let Some(a) = amount {
            e.amount = parse_money(a)?;
        }
        if let Some(d) = date {
            e.date = parse_time(d)?;
        }
        vec![e]
    } else {
        read_statements(dir)?.into_iter().filter(|e| e.reference.as_str() == reference).collect()
    };
    let mut ok = true;
    let mut lines = Vec::new();
    for e in &entries {
        let verdict = match verify_statement(secondary, e) {
            c @ StatementCheck::Found { .. } if c.is_consistent() => "consistent".to_string(),
            StatementCheck::Found { amount_matches, date_matches, .. } => {
                ok = false;
                let mut what = Vec::new();
                if !amount_matches {
                    what.push("amount");
                }
                if !date_matches {
                    what.push("date");
                }
                format!("{} differs", what.join(" and "))
            }
            StatementCheck::NotFound => {
                ok = false;
                "not found".to_string()
            }
        };
        lines.push((format!("statement {} {}", e.account, e.amount), verdict));
    }
    items.extend(lines.iter().map(|(k, v)| (k.as_str(), v.clone())));
    pairs(out, f, &items)?;
    Ok(Status::from_ok(ok))
}

fn day_range(primary: &PrimaryLedger, from: Option<&str>, to: Option<&str>) -> Result<(i64, i64)> {
    let blocks = primary.blocks();
    let (Some(first), Some(last)) = (blocks.first(), blocks.last()) else {
        bail!("the primary ledger is empty");
    };
    let first = match from {
        Some(s) => parse_time(s)?.day_number(),
        None => first.timestamp.day_number(),
    };
    let last = match to {
        Some(s) => parse_time(s)?.day_number(),
        None => last.timestamp.day_number(),
    };
    Ok((first, last))
}

fn stats(out: &mut impl Write, f: Format, stat: &StatCommand) -> Result<Status> {
    match stat {
        StatCommand::Base { ledger, at, from, to } => {
            let primary = load_primary(ledger)?;
            if from.is_some() {
                let (first, last) = day_range(&primary, from.as_deref(), to.as_deref())?;
                let mut t = Table::new(&["day", "base"]);
                for (day, base) in daily_base(&primary, first, last) {
                    t.row([Timestamp::from_day_number(day).to_string(), base.to_string()]);
                }
                t.write(out, f)?;
            } else {
                let at = match at {
                    Some(s) => parse_time(s)?,
                    None => primary.blocks().last().map(|b| b.timestamp).context("the primary ledger is empty")?,
                };
                let base = monetary_base(&primary, at);
                pairs(out, f, &[("at", at.to_string()), ("base", base.to_string()), ("cents", base.cents().to_string())])?;
            }
        }
        StatCommand::Velocity { ledger, from, to } => {
            let primary = load_primary(ledger)?;
            let (first, last) = day_range(&primary, from.as_deref(), to.as_deref())?;
            let v = analytics::velocity(&primary, first, last)?;
            pairs(
                out,
                f,
                &[
                    ("from", Timestamp::from_day_number(first).to_string()),
                    ("to", Timestamp::from_day_number(last).to_string()),
                    ("velocity", format!("{v:.6}")),
                ],
            )?;
        }
        StatCommand::Flows { ledger, period, region_level, concept_level, detailed, filter } => {
            let primary = load_primary(ledger)?;
            let period = match period {
                PeriodArg::Day => Period::Day,
                PeriodArg::Week => Period::Week,
                PeriodArg::Month => Period::Month,
            };
            let spec = FlowSpec {
                period,
                region_level: *region_level,
                concept_level: *concept_level,
                concept_field: if *detailed { ConceptField::Detailed } else { ConceptField::Type },
                filter: block_filter(filter)?,
            };
            let mut t = Table::new(&["period", "region", "concept", "amount"]);
            for ((region, concept), series) in flow_aggregate(&primary, &spec) {
                let region = region.map_or("*".to_string(), |r| r.to_string());
                let concept = concept.map_or("*".to_string(), |c| c.to_string());
                for (i, v) in series.points() {
                    if v > 0 {
                        t.row([period.label(i), region.clone(), concept.clone(), Money::from_cents(v).to_string()]);
                    }
                }
            }
            t.write(out, f)?;
        }
    }
    Ok(Status::Ok)
}

fn signal_items(prefix: &str, s: &PeriodicSignal, threshold: f64) -> Vec<(String, String)> {
    vec![
        (
            format!("{prefix} dominant period"),
            s.dominant_period.map_or("none".to_string(), |p| format!("{p:.2}")),
        ),
        (format!("{prefix} dominant ratio"), format!("{:.2}", s.ratio)),
        (format!("{prefix} period-2 ratio"), format!("{:.2}", s.candidate_ratio)),
        (format!("{prefix} detected"), s.detects(2, threshold).to_string()),
    ]
}

/// Ratio a period-2 peak must reach over the median of the other periods.
const DETECTION_RATIO: f64 = 5.0;

fn experiment(out: &mut impl Write, f: Format, kind: ExperimentKind, config: ScenarioConfig, series: bool) -> Result<Status> {
    let mut items: Vec<(String, String)> = vec![("scenario".into(), config.name.clone()), ("seed".into(), config.seed.to_string())];
    let mut tables = Vec::new();
    match kind {
        ExperimentKind::Vat => {
            let r = sim::vat_experiment(config)?;
            items.push(("months".into(), r.receipts.values.len().to_string()));
            items.push(("operations".into(), r.stats.generated.to_string()));
            items.push(("skipped".into(), r.stats.skipped.to_string()));
            items.push(("mean scheduled rate".into(), format!("{:.6}", r.mean_scheduled_rate)));
            items.push(("effective rate".into(), format!("{:.6}", r.effective_rate)));
            items.push(("volume-weighted rate".into(), format!("{:.6}", r.volume_weighted_rate)));
            items.extend(signal_items("receipts", &r.signal, DETECTION_RATIO));
            if series {
                let mut t = Table::new(&["month", "receipts", "per_day"]);
                for ((i, v), d) in r.receipts.points().zip(&r.per_day) {
                    t.row([Period::Month.label(i), Money::from_cents(v).to_string(), format!("{:.2}", d / 100.0)]);
                }
                tables.push(t);
                tables.push(spectrum_table(&r.signal));
            }
        }
        ExperimentKind::Hours => {
            let r = sim::hours_experiment(config)?;
            items.push(("weeks".into(), r.wages.values.len().to_string()));
            items.push(("operations".into(), r.stats.generated.to_string()));
            items.push(("skipped".into(), r.stats.skipped.to_string()));
            items.push(("mean weekly hours".into(), format!("{:.3}", r.mean_hours)));
            items.extend(signal_items("wages", &r.wage_signal, DETECTION_RATIO));
            items.extend(signal_items("spending", &r.spending_signal, DETECTION_RATIO));
            if series {
                let mut t = Table::new(&["week", "wages", "spending"]);
                for ((i, w), (_, s)) in r.wages.points().zip(r.spending.points()) {
                    t.row([Period::Week.label(i), Money::from_cents(w).to_string(), Money::from_cents(s).to_string()]);
                }
                tables.push(t);
                tables.push(spectrum_table(&r.spending_signal));
            }
        }
    }
    let items: Vec<(&str, String)> = items.iter().map(|(k, v)| (k.as_str(), v.clone())).collect();
    pairs(out, f, &items)?;
    for t in tables {
        writeln!(out)?;
        t.write(out, f)?;
    }
    Ok(Status::Ok)
}

fn spectrum_table(s: &PeriodicSignal) -> Table {
    let mut t = Table::new(&["period", "power"]);
    for (p, power) in &s.spectrum {
        t.row([format!("{p:.3}"), format!("{power:.6e}")]);
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_search_path_is_used_for_relative_names() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("x.toml"), "").unwrap();
        let search = std::env::join_paths(["/nonexistent", dir.path().to_str().unwrap()]).unwrap();
        assert_eq!(resolve_config(Path::new("x.toml"), Some(&search)).unwrap(), dir.path().join("x.toml"));
        assert!(resolve_config(Path::new("y.toml"), Some(&search)).is_err());
        assert!(resolve_config(Path::new("x.toml"), None).is_err());
    }

    #[test]
    fn bare_to_date_covers_the_whole_day() {
        let f = block_filter(&FilterArgs { to: Some("2024-04-18".into()), ..FilterArgs::default() }).unwrap();
        assert_eq!(f.to, Some(Timestamp::ymd_hm(2024, 4, 18, 23, 59)));
        let f = block_filter(&FilterArgs { to: Some("2024-04-18 10:00".into()), ..FilterArgs::default() }).unwrap();
        assert_eq!(f.to, Some(Timestamp::ymd_hm(2024, 4, 18, 10, 0)));
    }
}
