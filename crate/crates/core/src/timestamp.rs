//! Wall-clock timestamps for artifact metadata.
//!
//! Honors `SOURCE_DATE_EPOCH` so that record/replay runs can produce
//! byte-identical outputs.

use chrono::{DateTime, SecondsFormat, TimeZone, Utc};

pub fn now() -> DateTime<Utc> {
    if let Ok(raw) = std::env::var("SOURCE_DATE_EPOCH") {
        if let Ok(secs) = raw.trim().parse::<i64>() {
            if let Some(t) = Utc.timestamp_opt(secs, 0).single() {
                return t;
            }
        }
    }
    Utc::now()
}

/// RFC-3339 in UTC with second precision, e.g. `2024-05-01T12:00:00Z`.
pub fn now_rfc3339() -> String {
    now().to_rfc3339_opts(SecondsFormat::Secs, true)
}
