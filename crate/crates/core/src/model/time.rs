//! UTC timestamps with an explicit recording granularity.

use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, Datelike, NaiveDate, NaiveDateTime, NaiveTime, Utc};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

const MINUTE: i64 = 60;
const DAY: i64 = 86_400;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Granularity {
    Minute,
    Day,
    Week,
}

impl Granularity {
    pub fn tag(self) -> u8 {
        match self {
            Granularity::Minute => 0,
            Granularity::Day => 1,
            Granularity::Week => 2,
        }
    }

    pub fn from_tag(tag: u8) -> Option<Self> {
        match tag {
            0 => Some(Granularity::Minute),
            1 => Some(Granularity::Day),
            2 => Some(Granularity::Week),
            _ => None,
        }
    }
}

/// Seconds since the Unix epoch, truncated to `granularity`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Timestamp {
    secs: i64,
    granularity: Granularity,
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("unrecognised date/time `{0}`; use YYYY-MM-DD, YYYY/MM/DD or YYYY-MM-DD HH:MM")]
pub struct ParseTimeError(String);

fn truncate(secs: i64, g: Granularity) -> i64 {
    match g {
        Granularity::Minute => secs - secs.rem_euclid(MINUTE),
        Granularity::Day => secs - secs.rem_euclid(DAY),
        Granularity::Week => {
            let days = secs.div_euclid(DAY);
            // 1970-01-01 was a Thursday; weeks start on Monday.
            let monday = days - (days + 3).rem_euclid(7);
            monday * DAY
        }
    }
}

impl Timestamp {
    pub fn from_secs(secs: i64, granularity: Granularity) -> Self {
        Self { secs: truncate(secs, granularity), granularity }
    }

    pub fn ymd_hm(y: i32, m: u32, d: u32, hh: u32, mm: u32) -> Self {
        let dt = NaiveDate::from_ymd_opt(y, m, d)
            .and_then(|date| date.and_hms_opt(hh, mm, 0))
            .expect("valid calendar date");
        Self::from_secs(dt.and_utc().timestamp(), Granularity::Minute)
    }

    pub fn day(y: i32, m: u32, d: u32) -> Self {
        Self::ymd_hm(y, m, d, 0, 0).coarsen(Granularity::Day)
    }

    pub fn secs(self) -> i64 {
        self.secs
    }

    pub fn granularity(self) -> Granularity {
        self.granularity
    }

    /// Days since the epoch of the calendar day containing this instant.
    pub fn day_number(self) -> i64 {
        self.secs.div_euclid(DAY)
    }

    pub fn from_day_number(day: i64) -> Self {
        Self::from_secs(day * DAY, Granularity::Day)
    }

    /// Re-records at a coarser granularity; never refines.
    pub fn coarsen(self, g: Granularity) -> Self {
        let g = g.max(self.granularity);
        Self::from_secs(self.secs, g)
    }

    pub fn plus_minutes(self, minutes: i64) -> Self {
        Self::from_secs(self.secs + minutes * MINUTE, self.granularity)
    }

    pub fn plus_days(self, days: i64) -> Self {
        Self::from_secs(self.secs + days * DAY, self.granularity)
    }

    pub fn datetime(self) -> NaiveDateTime {
        DateTime::<Utc>::from_timestamp(self.secs, 0)
            .expect("timestamp in chrono range")
            .naive_utc()
    }

    pub fn date(self) -> NaiveDate {
        self.datetime().date()
    }

    /// Months since year 0, for monthly bucketing.
    pub fn month_index(self) -> i64 {
        let d = self.date();
        d.year() as i64 * 12 + d.month0() as i64
    }

    pub fn iso_week(self) -> u32 {
        self.date().iso_week().week()
    }
}

impl fmt::Display for Timestamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let dt = self.datetime();
        match self.granularity {
            Granularity::Minute => write!(f, "{} UTC", dt.format("%Y/%m/%d %H:%M")),
            Granularity::Day => write!(f, "{}", dt.format("%Y/%m/%d")),
            Granularity::Week => write!(f, "week of {}", dt.format("%Y/%m/%d")),
        }
    }
}

impl FromStr for Timestamp {
    type Err = ParseTimeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim().trim_end_matches("UTC").trim().replace('/', "-");
        for fmt in ["%Y-%m-%d %H:%M", "%Y-%m-%dT%H:%M", "%Y-%m-%dT%H:%M:%S", "%Y-%m-%d %H:%M:%S"] {
            if let Ok(dt) = NaiveDateTime::parse_from_str(&t, fmt) {
                return Ok(Self::from_secs(dt.and_utc().timestamp(), Granularity::Minute));
            }
        }
        if let Ok(d) = NaiveDate::parse_from_str(&t, "%Y-%m-%d") {
            let dt = d.and_time(NaiveTime::MIN);
            return Ok(Self::from_secs(dt.and_utc().timestamp(), Granularity::Day));
        }
        Err(ParseTimeError(s.to_string()))
    }
}

impl Serialize for Timestamp {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let dt = self.datetime();
        let text = match self.granularity {
            Granularity::Minute => dt.format("%Y-%m-%d %H:%M").to_string(),
            _ => dt.format("%Y-%m-%d").to_string(),
        };
        s.serialize_str(&text)
    }
}

impl<'de> Deserialize<'de> for Timestamp {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn day_coarsening_drops_time() {
        let t = Timestamp::ymd_hm(2024, 3, 29, 14, 47);
        assert_eq!(t.to_string(), "2024/03/29 14:47 UTC");
        let d = t.coarsen(Granularity::Day);
        assert_eq!(d.to_string(), "2024/03/29");
        assert_eq!(d.coarsen(Granularity::Day), d);
        // never refines
        assert_eq!(d.coarsen(Granularity::Minute), d);
    }

    #[test]
    fn week_starts_monday() {
        // 2024-03-29 was a Friday.
        let w = Timestamp::ymd_hm(2024, 3, 29, 14, 47).coarsen(Granularity::Week);
        assert_eq!(w.date(), NaiveDate::from_ymd_opt(2024, 3, 25).unwrap());
        let monday = Timestamp::day(2024, 3, 25).coarsen(Granularity::Week);
        assert_eq!(monday.date(), NaiveDate::from_ymd_opt(2024, 3, 25).unwrap());
    }

    #[test]
    fn parses_formats() {
        let a: Timestamp = "2024/07/22 9:01".parse().unwrap();
        assert_eq!(a, Timestamp::ymd_hm(2024, 7, 22, 9, 1));
        let b: Timestamp = "2024-04-18".parse().unwrap();
        assert_eq!(b.granularity(), Granularity::Day);
        assert_eq!(b, Timestamp::day(2024, 4, 18));
        assert!("yesterday".parse::<Timestamp>().is_err());
    }

    #[test]
    fn day_numbers_round_trip() {
        let d = Timestamp::day(2024, 2, 29);
        assert_eq!(Timestamp::from_day_number(d.day_number()), d);
    }
}
