use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::OnceLock;

use tempfile::TempDir;

const BIN: &str = env!("CARGO_BIN_EXE_centledger");

fn scenarios() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

fn centledger(args: &[&str]) -> Output {
    Command::new(BIN).args(args).env_remove("CENTLEDGER_CONFIG_PATH").output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn field<'a>(text: &'a str, key: &str) -> Option<&'a str> {
    text.lines().find_map(|l| l.strip_prefix(&format!("{key}:"))).map(str::trim)
}

/// The worked-example replay, written once and shared by every test.
fn replay() -> &'static str {
    static DIR: OnceLock<(TempDir, String)> = OnceLock::new();
    &DIR.get_or_init(|| {
        let dir = tempfile::tempdir().unwrap();
        let config = scenarios().join("worked_examples.toml");
        let out = dir.path().join("replay").to_str().unwrap().to_string();
        let o = centledger(&["run", "--config", config.to_str().unwrap(), "--out", &out]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        (dir, out)
    })
    .1
}

/// A short run of the small economy in a fresh directory.
fn small_run(dir: &Path, days: u32) -> PathBuf {
    let text = std::fs::read_to_string(scenarios().join("small_economy.toml")).unwrap();
    let config = dir.join("small.toml");
    std::fs::write(&config, text.replace("duration_days = 60", &format!("duration_days = {days}"))).unwrap();
    let out = dir.join("out");
    let o = centledger(&["run", "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    out
}

#[test]
fn verify_statement_finds_the_tyre_repair() {
    let o = centledger(&["verify-statement", "--ledger", replay(), "--ref", "B6539CBA985FFA145"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert_eq!(field(&text, "status"), Some("Found"));
    assert_eq!(field(&text, "amount"), Some("25.00"));
    assert_eq!(field(&text, "date"), Some("2024/04/18"));
    assert_eq!(field(&text, "concept"), Some("r52"));
    assert!(text.contains(": consistent"), "{text}");
}

#[test]
fn verify_statement_rejects_fabricated_and_altered_entries() {
    let o = centledger(&["verify-statement", "--ledger", replay(), "--ref", "0123456789ABCDEF0"]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(field(&stdout(&o), "status"), Some("NotFound"));

    let o = centledger(&["verify-statement", "--ledger", replay(), "--ref", "B6539CBA985FFA145", "--amount", "26.00"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("amount differs"));

    let o = centledger(&[
        "verify-statement", "--ledger", replay(), "--ref", "B6539CBA985FFA145", "--amount", "25.00", "--date", "2024-04-18",
    ]);
    assert!(o.status.success(), "{}", stdout(&o));
}

#[test]
fn reconcile_matches_the_repair_day() {
    let o = centledger(&["reconcile", "--ledger", replay(), "--day", "2024-04-18", "--concept", "r52", "--region", "rC0"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert_eq!(field(&text, "primary total"), Some("25.00"));
    assert_eq!(field(&text, "secondary total"), Some("25.00"));
    assert_eq!(field(&text, "result"), Some("match"));

    let o = centledger(&["reconcile", "--ledger", replay(), "--day", "2024-04-19", "--concept", "r52", "--region", "rC0"]);
    assert!(o.status.success());
    assert_eq!(field(&stdout(&o), "primary total"), Some("0.00"));
}

#[test]
fn tsv_output_is_delimited() {
    let o = centledger(&[
        "--format", "tsv", "reconcile", "--ledger", replay(), "--day", "2024-04-18", "--concept", "r52", "--region", "rC0",
    ]);
    let text = stdout(&o);
    assert!(text.starts_with("key\tvalue\n"));
    assert!(text.contains("primary total\t25.00\n"));

    let o = centledger(&["--format", "tsv", "query", "--ledger", replay(), "--concept", "w24"]);
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("535D3D0C\t2024/03/29 14:47"));
    assert!(lines[1].ends_with("\t1812.24\t181224"));
    assert!(lines[2].starts_with("22C5B3A7\t"));
}

#[test]
fn query_filters_by_party_and_date() {
    let o = centledger(&["query", "--ledger", replay(), "--party", "AAAA1", "--from", "2024-04-01", "--to", "2024-06-28"]);
    let text = stdout(&o);
    let refs: Vec<&str> = text.lines().skip(1).map(|l| l.split_whitespace().next().unwrap()).collect();
    assert_eq!(refs, ["2D33455D", "25D4FAE3"]);
}

#[test]
fn trace_follows_a_banknote_cent() {
    let o = centledger(&["--format", "tsv", "trace", "--ledger", replay(), "--cent", "BA55311D0C70001"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let refs: Vec<String> = stdout(&o).lines().skip(1).map(|l| l.split('\t').next().unwrap().to_string()).collect();
    assert_eq!(refs, ["FAE325A2", "FAE325A4"]);

    let o = centledger(&["trace", "--ledger", replay(), "--cent", "not-hex"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn chain_and_registry_check_out() {
    let o = centledger(&["verify-chain", "--ledger", replay()]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert_eq!(field(&text, "primary chain"), Some("ok (11 blocks)"));
    assert_eq!(field(&text, "secondary chain"), Some("ok (10 blocks)"));

    let o = centledger(&["audit", "--ledger", replay()]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert_eq!(field(&text, "duplicates"), Some("0"));
    assert_eq!(field(&text, "issued = live + sink"), Some("true"));
}

#[test]
fn swapped_blocks_break_the_chain() {
    let dir = tempfile::tempdir().unwrap();
    let out = small_run(dir.path(), 3);
    let path = out.join("secondary.ledger");
    let text = std::fs::read_to_string(&path).unwrap();
    let mut lines: Vec<&str> = text.lines().collect();
    lines.swap(3, 4);
    std::fs::write(&path, lines.join("\n") + "\n").unwrap();
    let o = centledger(&["verify-chain", "--ledger", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1), "{}", stdout(&o));
    assert!(field(&stdout(&o), "secondary chain").unwrap().starts_with("BROKEN"));
}

#[test]
fn runs_are_byte_identical_and_seed_matters() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let (a, b) = (small_run(a.path(), 4), small_run(b.path(), 4));
    for f in ["primary.ledger", "secondary.ledger", "registry.snapshot", "statements.txt", "events.log"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f} differs");
    }
    let c = tempfile::tempdir().unwrap();
    let config = scenarios().join("small_economy.toml");
    let out = c.path().join("out");
    let o = centledger(&["run", "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap(), "--seed", "8"]);
    assert!(o.status.success());
    assert_ne!(std::fs::read(a.join("events.log")).unwrap(), std::fs::read(out.join("events.log")).unwrap());
}

#[test]
fn config_search_path_comes_from_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(scenarios().join("small_economy.toml")).unwrap();
    std::fs::write(dir.path().join("tiny.toml"), text.replace("duration_days = 60", "duration_days = 1")).unwrap();
    let out = dir.path().join("out");
    let o = Command::new(BIN)
        .args(["run", "--config", "tiny.toml", "--out", out.to_str().unwrap()])
        .env("CENTLEDGER_CONFIG_PATH", dir.path())
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(field(&stdout(&o), "days"), Some("1"));

    let o = centledger(&["run", "--config", "tiny.toml", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("not found"));
}

#[test]
fn bad_inputs_exit_with_a_diagnostic() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("v2.toml");
    let text = std::fs::read_to_string(scenarios().join("small_economy.toml")).unwrap();
    std::fs::write(&config, text.replace("schema_version = 1", "schema_version = 2")).unwrap();
    let o = centledger(&["run", "--config", config.to_str().unwrap(), "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("schema version"));

    let o = centledger(&["verify-chain", "--ledger", dir.path().join("missing").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("primary.ledger"));

    let o = centledger(&["reconcile", "--ledger", replay()]);
    assert_eq!(o.status.code(), Some(2));
    let o = centledger(&["frobnicate"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn capacity_and_storage_tables() {
    let text = stdout(&centledger(&["--format", "tsv", "capacity-table"]));
    let hex: Vec<&str> = text.lines().skip(1).map(|l| l.rsplit('\t').next().unwrap()).collect();
    assert_eq!(hex, ["6AEE1DF7316000", "2E26560FA1E0000", "218AB91C031AC00", "2A4C7E605326E000"]);

    let text = stdout(&centledger(&["--format", "tsv", "storage-estimate"]));
    let rows: Vec<Vec<&str>> = text.lines().skip(1).map(|l| l.split('\t').collect()).collect();
    assert_eq!(rows[0][2], "2400000");
    assert_eq!(rows[1][3], "2.4 GB");
    assert_eq!(rows[2][3], "11400 TB, $228000 per node per year");
}

#[test]
fn stats_over_the_replay() {
    let text = stdout(&centledger(&["stats", "base", "--ledger", replay(), "--at", "2024-03-02"]));
    assert_eq!(field(&text, "base"), Some("372869.47"));

    let o = centledger(&["--format", "tsv", "stats", "flows", "--ledger", replay(), "--period", "month", "--concept-level", "1"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("2024-04\t*\tt4\t25.00"), "{text}");

    let o = centledger(&["stats", "velocity", "--ledger", replay(), "--from", "2024-03-01", "--to", "2024-07-31"]);
    assert!(o.status.success());
    let v: f64 = field(&stdout(&o), "velocity").unwrap().parse().unwrap();
    assert!(v > 0.0);
}

#[test]
fn experiment_reports_a_detection() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(scenarios().join("hours_experiment.toml")).unwrap();
    let config = dir.path().join("hours.toml");
    std::fs::write(&config, text.replace("duration_days = 364", "duration_days = 182")).unwrap();
    let o = centledger(&["experiment", "hours", "--config", config.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert_eq!(field(&text, "wages detected"), Some("true"), "{text}");
    assert_eq!(field(&text, "mean weekly hours"), Some("35.000"));
}
