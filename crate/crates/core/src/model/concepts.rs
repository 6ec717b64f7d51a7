//! Concept codes reserved for monetary operations. Type codes under `a`
//! cover creation and extinction of tracking numbers; detailed codes under
//! `c` say which operation it was. Banknote operations put `X<serial>` in
//! the detailed concept.

pub const SEED: (&str, &str) = ("c001", "a01");
pub const LOAN: (&str, &str) = ("c101", "a11");
pub const REPAYMENT: (&str, &str) = ("c102", "a12");
pub const RESERVE_IN: (&str, &str) = ("c201", "a21");
pub const RESERVE_OUT: (&str, &str) = ("c202", "a22");
pub const INBOUND: (&str, &str) = ("c301", "a31");
pub const OUTBOUND: (&str, &str) = ("c302", "a32");

pub const MONEY_PRINT: &str = "a14";
pub const MONEY_REPRINT: &str = "a15";
pub const BANKNOTE_DEPOSIT: &str = "a41";
pub const BANKNOTE_WITHDRAW: &str = "a42";

/// Detailed concept naming a physical banknote: `X22868512967`.
pub fn banknote_concept(serial: u64) -> String {
    format!("X{serial}")
}

pub fn parse_banknote_concept(code: &str) -> Option<u64> {
    code.strip_prefix('X')?.parse().ok()
}
