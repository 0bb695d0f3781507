//! Ingestion of daily rate series from `date,value` CSV files.

use std::fs;
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::simulate::Trajectory;

/// Time step between two daily observations, in months. One month is the
/// time unit of the whole rate pipeline.
pub const DEFAULT_DT_MONTHS: f64 = 0.046;

/// A daily rate series in percent, observed on strictly increasing dates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateSeries {
    pub dates: Vec<NaiveDate>,
    pub values: Vec<f64>,
    pub dt_months: f64,
}

/// Result of parsing: the series plus the number of rows dropped for
/// missing values.
#[derive(Debug, Clone, PartialEq)]
pub struct RateParse {
    pub series: RateSeries,
    pub dropped: usize,
}

impl RateSeries {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Keep only the last `n` observations.
    pub fn tail(&self, n: usize) -> RateSeries {
        let start = self.len().saturating_sub(n);
        RateSeries {
            dates: self.dates[start..].to_vec(),
            values: self.values[start..].to_vec(),
            dt_months: self.dt_months,
        }
    }

    /// View the rates as a uniform trajectory with step `dt_months`,
    /// raw percent values as the state variable.
    pub fn to_trajectory(&self) -> Result<Trajectory> {
        Trajectory::new(0.0, self.dt_months, self.values.clone())
    }
}

/// Parse a UTF-8 CSV file with header `date,value`: ISO dates, strictly
/// increasing; rows with an empty value field are dropped and counted;
/// anything else malformed is an error naming the line.
pub fn parse_rate_series(path: &Path, dt_months: f64) -> Result<RateParse> {
    let text = fs::read_to_string(path)?;
    parse_rate_series_str(&text, dt_months)
}

/// Same parser over an in-memory string (line numbers are 1-based and
/// include the header).
pub fn parse_rate_series_str(text: &str, dt_months: f64) -> Result<RateParse> {
    if !(dt_months > 0.0) || !dt_months.is_finite() {
        return Err(Error::InvalidInput("dt_months must be positive".into()));
    }
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or(Error::Parse {
        line: 1,
        message: "empty file".into(),
    })?;
    let normalized = header.trim().to_ascii_lowercase();
    if normalized != "date,value" {
        return Err(Error::Parse {
            line: 1,
            message: format!("expected header 'date,value', got '{}'", header.trim()),
        });
    }

    let mut dates = Vec::new();
    let mut values = Vec::new();
    let mut dropped = 0usize;
    for (idx, raw) in lines {
        let line_no = idx + 1;
        let row = raw.trim();
        if row.is_empty() {
            continue;
        }
        let (date_str, value_str) = row.split_once(',').ok_or(Error::Parse {
            line: line_no,
            message: "expected two comma-separated fields".into(),
        })?;
        let date = NaiveDate::parse_from_str(date_str.trim(), "%Y-%m-%d").map_err(|e| {
            Error::Parse {
                line: line_no,
                message: format!("bad date '{}': {e}", date_str.trim()),
            }
        })?;
        if let Some(&last) = dates.last() {
            if date <= last {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("dates must be strictly increasing ({last} then {date})"),
                });
            }
        }
        let value_str = value_str.trim();
        if value_str.is_empty() || value_str == "." || value_str.eq_ignore_ascii_case("na") {
            dropped += 1;
            continue;
        }
        let value: f64 = value_str.parse().map_err(|_| Error::Parse {
            line: line_no,
            message: format!("bad value '{value_str}'"),
        })?;
        if !value.is_finite() {
            return Err(Error::Parse {
                line: line_no,
                message: "value must be finite".into(),
            });
        }
        dates.push(date);
        values.push(value);
    }

    Ok(RateParse {
        series: RateSeries {
            dates,
            values,
            dt_months,
        },
        dropped,
    })
}
