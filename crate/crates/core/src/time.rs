//! Instants, calendar months, and the date formats accepted on input.

use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, Datelike, NaiveDate, NaiveDateTime, SecondsFormat, TimeZone, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A UTC instant. All timestamps in a dataset use this type.
pub type Timestamp = DateTime<Utc>;

const SECONDS_PER_DAY: f64 = 86_400.0;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("invalid {what} {input:?}")]
pub struct ParseTimeError {
    what: &'static str,
    input: String,
}

/// Parses an ISO-8601 instant.
///
/// Accepted forms: `YYYY-MM-DD`, `YYYY-MM-DDTHH:MM:SS[.frac](Z|±HH:MM)`,
/// `YYYY-MM-DD HH:MM:SS[.frac]` with an optional trailing ` UTC`. Values
/// without an offset are taken as UTC.
pub fn parse_timestamp(input: &str) -> Result<Timestamp, ParseTimeError> {
    let s = input.trim();
    if let Ok(dt) = DateTime::parse_from_rfc3339(s) {
        return Ok(dt.with_timezone(&Utc));
    }
    let naive = s.strip_suffix(" UTC").unwrap_or(s);
    for fmt in ["%Y-%m-%d %H:%M:%S%.f", "%Y-%m-%dT%H:%M:%S%.f"] {
        if let Ok(dt) = NaiveDateTime::parse_from_str(naive, fmt) {
            return Ok(Utc.from_utc_datetime(&dt));
        }
    }
    if let Ok(d) = NaiveDate::parse_from_str(naive, "%Y-%m-%d") {
        return Ok(start_of_day(d));
    }
    Err(ParseTimeError {
        what: "timestamp",
        input: input.to_owned(),
    })
}

/// Parses a `YYYY-MM-DD` date or a `YYYY-MM` month (taken as the first
/// instant of that month).
pub fn parse_date_or_month(input: &str) -> Result<Timestamp, ParseTimeError> {
    let s = input.trim();
    if let Ok(d) = NaiveDate::parse_from_str(s, "%Y-%m-%d") {
        return Ok(start_of_day(d));
    }
    s.parse::<Month>()
        .map(|m| m.start())
        .map_err(|_| ParseTimeError {
            what: "date",
            input: input.to_owned(),
        })
}

/// Canonical serialization used by every writer in this crate.
pub fn format_timestamp(t: &Timestamp) -> String {
    t.to_rfc3339_opts(SecondsFormat::AutoSi, true)
}

/// Elapsed time from `from` to `to` in (fractional) days.
pub fn days_between(from: &Timestamp, to: &Timestamp) -> f64 {
    let d = *to - *from;
    match d.num_microseconds() {
        Some(us) => us as f64 / (SECONDS_PER_DAY * 1e6),
        None => d.num_seconds() as f64 / SECONDS_PER_DAY,
    }
}

pub(crate) fn start_of_day(d: NaiveDate) -> Timestamp {
    Utc.from_utc_datetime(&d.and_hms_opt(0, 0, 0).expect("midnight is valid"))
}

/// A calendar month.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Month {
    year: i32,
    month: u32,
}

impl Month {
    pub fn new(year: i32, month: u32) -> Option<Self> {
        (1..=12).contains(&month).then_some(Self { year, month })
    }

    /// The month containing `t`.
    pub fn of(t: &Timestamp) -> Self {
        Self {
            year: t.year(),
            month: t.month(),
        }
    }

    pub fn year(&self) -> i32 {
        self.year
    }

    pub fn month(&self) -> u32 {
        self.month
    }

    /// First instant of the month.
    pub fn start(&self) -> Timestamp {
        start_of_day(NaiveDate::from_ymd_opt(self.year, self.month, 1).expect("valid month"))
    }

    pub fn succ(&self) -> Self {
        if self.month == 12 {
            Self {
                year: self.year + 1,
                month: 1,
            }
        } else {
            Self {
                year: self.year,
                month: self.month + 1,
            }
        }
    }

    /// Adds `n` months.
    pub fn plus(&self, n: u32) -> Self {
        let idx = self.index() + n as i64;
        Self::from_index(idx)
    }

    /// Months elapsed since `other` (negative if `other` is later).
    pub fn months_since(&self, other: &Month) -> i64 {
        self.index() - other.index()
    }

    fn index(&self) -> i64 {
        self.year as i64 * 12 + (self.month as i64 - 1)
    }

    fn from_index(idx: i64) -> Self {
        Self {
            year: idx.div_euclid(12) as i32,
            month: idx.rem_euclid(12) as u32 + 1,
        }
    }

    /// Every month from `from` to `to`, both inclusive. Empty if `from > to`.
    pub fn range_inclusive(from: Month, to: Month) -> impl Iterator<Item = Month> {
        let n = (to.index() - from.index() + 1).max(0);
        (0..n).map(move |i| Month::from_index(from.index() + i))
    }
}

impl fmt::Display for Month {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}-{:02}", self.year, self.month)
    }
}

impl FromStr for Month {
    type Err = ParseTimeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || ParseTimeError {
            what: "month",
            input: s.to_owned(),
        };
        let (y, m) = s.trim().split_once('-').ok_or_else(err)?;
        if y.len() != 4 || m.len() != 2 {
            return Err(err());
        }
        let year = y.parse().map_err(|_| err())?;
        let month = m.parse().map_err(|_| err())?;
        Month::new(year, month).ok_or_else(err)
    }
}

impl TryFrom<String> for Month {
    type Error = ParseTimeError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<Month> for String {
    fn from(m: Month) -> String {
        m.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn accepts_the_common_timestamp_shapes() {
        let expected = Utc.with_ymd_and_hms(2020, 1, 5, 12, 30, 0).unwrap();
        for s in [
            "2020-01-05T12:30:00Z",
            "2020-01-05T13:30:00+01:00",
            "2020-01-05 12:30:00",
            "2020-01-05 12:30:00 UTC",
            "2020-01-05T12:30:00",
        ] {
            assert_eq!(parse_timestamp(s).unwrap(), expected, "{s}");
        }
        assert_eq!(
            parse_timestamp("2020-01-05").unwrap(),
            Utc.with_ymd_and_hms(2020, 1, 5, 0, 0, 0).unwrap()
        );
        assert!(parse_timestamp("not-a-date").is_err());
    }

    #[test]
    fn month_arithmetic() {
        let m: Month = "2019-11".parse().unwrap();
        assert_eq!(m.succ().to_string(), "2019-12");
        assert_eq!(m.succ().succ().to_string(), "2020-01");
        assert_eq!(m.plus(14).to_string(), "2021-01");
        assert_eq!(Month::range_inclusive(m, m.plus(2)).count(), 3);
        assert_eq!(Month::range_inclusive(m.plus(2), m).count(), 0);
        assert!("2020-13".parse::<Month>().is_err());
        assert!("2020-1".parse::<Month>().is_err());
    }

    #[test]
    fn date_or_month() {
        assert_eq!(
            parse_date_or_month("2020-04").unwrap(),
            parse_date_or_month("2020-04-01").unwrap()
        );
    }

    #[test]
    fn day_arithmetic_crosses_leap_february() {
        let a = parse_timestamp("2020-02-03").unwrap();
        let b = parse_timestamp("2020-03-05").unwrap();
        assert_eq!(days_between(&a, &b), 31.0);
    }
}
