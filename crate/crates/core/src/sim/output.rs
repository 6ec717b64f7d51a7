//! Run output directory.
//!
//! | file               | contents                                   |
//! |--------------------|--------------------------------------------|
//! | `primary.ledger`   | primary chain dump                         |
//! | `secondary.ledger` | secondary chain dump                       |
//! | `registry.snapshot`| tracking-number registry snapshot          |
//! | `statements.txt`   | bank statement entries, one per line       |
//! | `events.log`       | ground-truth event log, tab separated      |

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use crate::bank::Economy;

pub const PRIMARY_FILE: &str = "primary.ledger";
pub const SECONDARY_FILE: &str = "secondary.ledger";
pub const REGISTRY_FILE: &str = "registry.snapshot";
pub const STATEMENTS_FILE: &str = "statements.txt";
pub const EVENTS_FILE: &str = "events.log";

pub const EVENTS_HEADER: &str =
    "# seq\ttime\tkind\tpayer\tpayee\tamount\tcents\tcents_sha256\tprimary_refs\tstatement_ref\tpayer_account";

fn create(dir: &Path, name: &str) -> io::Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

/// Writes every output file into `dir`, creating it if needed. The economy
/// should be settled first so statements and event references are final.
pub fn write_output(economy: &Economy, dir: &Path) -> io::Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut f = create(dir, PRIMARY_FILE)?;
    economy.primary().write_dump(&mut f)?;
    f.flush()?;
    let mut f = create(dir, SECONDARY_FILE)?;
    economy.secondary().write_dump(&mut f)?;
    f.flush()?;
    let mut f = create(dir, REGISTRY_FILE)?;
    economy.registry().write_snapshot(&mut f)?;
    f.flush()?;
    let mut f = create(dir, STATEMENTS_FILE)?;
    for s in economy.statements() {
        writeln!(f, "{}", s.to_line())?;
    }
    f.flush()?;
    let mut f = create(dir, EVENTS_FILE)?;
    writeln!(f, "{EVENTS_HEADER}")?;
    for e in economy.events() {
        writeln!(f, "{}", e.to_line())?;
    }
    f.flush()
}
