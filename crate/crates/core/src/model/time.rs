use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, Duration, NaiveDate, NaiveDateTime, SubsecRound, Utc};

use crate::error::{Error, Result};

/// UTC instant at second precision. Renders as `YYYY-MM-DDThh:mm:ssZ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Timestamp(DateTime<Utc>);

impl Timestamp {
    pub fn now() -> Self {
        Timestamp(Utc::now().trunc_subsecs(0))
    }

    pub fn from_datetime(dt: DateTime<Utc>) -> Self {
        Timestamp(dt.trunc_subsecs(0))
    }

    pub fn as_datetime(&self) -> DateTime<Utc> {
        self.0
    }

    pub fn plus_seconds(&self, secs: i64) -> Self {
        Timestamp(self.0 + Duration::seconds(secs))
    }

    /// Strict parse used for request parameters: `YYYY-MM-DD`, or a full
    /// date-time ending in `Z` (fractional seconds truncated).
    pub fn parse(text: &str) -> Result<Self> {
        let t = text.trim();
        if let Ok(d) = NaiveDate::parse_from_str(t, "%Y-%m-%d") {
            let dt = d.and_hms_opt(0, 0, 0).expect("midnight is valid");
            return Ok(Timestamp(dt.and_utc()));
        }
        let Some(body) = t.strip_suffix('Z') else {
            return Err(Error::MalformedTimestamp(text.to_string()));
        };
        NaiveDateTime::parse_from_str(body, "%Y-%m-%dT%H:%M:%S%.f")
            .map(|dt| Timestamp(dt.and_utc().trunc_subsecs(0)))
            .map_err(|_| Error::MalformedTimestamp(text.to_string()))
    }

    /// Lenient parse for stored data: also accepts a missing `Z`
    /// (`"2004-12-12T00:22:00"^^xsd:dateTime`), read as UTC.
    pub fn parse_lenient(text: &str) -> Result<Self> {
        let t = text.trim();
        Self::parse(t).or_else(|_| {
            NaiveDateTime::parse_from_str(t, "%Y-%m-%dT%H:%M:%S%.f")
                .map(|dt| Timestamp(dt.and_utc().trunc_subsecs(0)))
                .map_err(|_| Error::MalformedTimestamp(text.to_string()))
        })
    }
}

impl fmt::Display for Timestamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0.format("%Y-%m-%dT%H:%M:%SZ"))
    }
}

impl FromStr for Timestamp {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Timestamp::parse(s)
    }
}

/// Source of "now" for mutations; swapped out in tests.
pub trait Clock: Send + Sync {
    fn now(&self) -> Timestamp;
}

#[derive(Debug, Default, Clone, Copy)]
pub struct SystemClock;

impl Clock for SystemClock {
    fn now(&self) -> Timestamp {
        Timestamp::now()
    }
}
