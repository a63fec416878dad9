//! Dataset ingestion and the embedded natural-gas electricity series.
//!
//! Input files are UTF-8 comma-separated text with a `time,value` header and
//! `.` as the decimal point. Blank lines and lines starting with `#` are skipped.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::TimeSeries;

/// Identifier of the builtin dataset.
pub const US_NATGAS_ID: &str = "us-natgas";

/// Electricity production from natural gas sources in the United States,
/// percent of total production, 1990 to 2023 (World Bank annual series).
pub const US_NATGAS: [(f64, f64); 34] = [
    (1990.0, 11.85815),
    (1991.0, 12.27868),
    (1992.0, 12.97155),
    (1993.0, 12.92770),
    (1994.0, 14.16742),
    (1995.0, 14.76346),
    (1996.0, 13.02046),
    (1997.0, 13.67453),
    (1998.0, 14.57905),
    (1999.0, 14.93086),
    (2000.0, 15.65117),
    (2001.0, 17.07274),
    (2002.0, 17.58605),
    (2003.0, 16.41918),
    (2004.0, 17.52281),
    (2005.0, 18.22920),
    (2006.0, 19.59561),
    (2007.0, 21.03976),
    (2008.0, 20.83612),
    (2009.0, 22.67735),
    (2010.0, 23.24735),
    (2011.0, 24.03179),
    (2012.0, 29.47220),
    (2013.0, 26.90093),
    (2014.0, 26.75654),
    (2015.0, 31.79336),
    (2016.0, 32.81091),
    (2017.0, 31.20787),
    (2018.0, 34.09804),
    (2019.0, 37.33868),
    (2020.0, 39.43958),
    (2021.0, 37.35339),
    (2022.0, 38.71585),
    (2023.0, 41.90800),
];

/// Published reference values for the builtin series fitted on 1990 to 2021.
pub mod reference {
    pub const TRAIN: (f64, f64) = (1990.0, 2021.0);
    pub const SL_AIC: f64 = 112.3892;
    pub const GOMPERTZ_AIC: f64 = 114.3477;
    pub const GOMPERTZ_AIC_TOL: f64 = 0.5;
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DatasetRecord {
    pub time: f64,
    pub value: f64,
}

/// Where a series comes from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    Builtin(String),
    File(String),
}

pub fn us_natgas() -> TimeSeries {
    let (times, values) = US_NATGAS.iter().copied().unzip();
    TimeSeries::new(times, values, US_NATGAS_ID).expect("embedded dataset is valid")
}

pub fn builtin(id: &str) -> Result<TimeSeries> {
    match id {
        US_NATGAS_ID => Ok(us_natgas()),
        other => Err(Error::InvalidInput(format!(
            "unknown builtin dataset '{other}' (available: {US_NATGAS_ID})"
        ))),
    }
}

pub fn load_series(source: &Source) -> Result<TimeSeries> {
    match source {
        Source::Builtin(id) => builtin(id),
        Source::File(path) => load_file(path),
    }
}

pub fn load_file(path: impl AsRef<Path>) -> Result<TimeSeries> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_series(&text, &path.display().to_string())
}

/// Parses `time,value` records. Line numbers in errors are 1-based.
pub fn parse_records(text: &str) -> Result<Vec<(usize, DatasetRecord)>> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    let (hline, header) = lines.next().ok_or(Error::Parse {
        line: 1,
        message: "empty input, expected header 'time,value'".into(),
    })?;
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    if cols != ["time", "value"] {
        return Err(Error::Parse {
            line: hline,
            message: format!("expected header 'time,value', got '{header}'"),
        });
    }
    let field = |line: usize, name: &str, raw: Option<&str>| -> Result<f64> {
        let raw = raw.map(str::trim).ok_or_else(|| Error::Parse {
            line,
            message: format!("missing {name} field"),
        })?;
        raw.parse::<f64>().map_err(|_| Error::Parse {
            line,
            message: format!("cannot parse {name} '{raw}' as a number"),
        })
    };
    lines
        .map(|(line, l)| {
            let mut parts = l.split(',');
            let time = field(line, "time", parts.next())?;
            let value = field(line, "value", parts.next())?;
            if parts.next().is_some() {
                return Err(Error::Parse {
                    line,
                    message: "expected exactly two fields".into(),
                });
            }
            Ok((line, DatasetRecord { time, value }))
        })
        .collect()
}

/// Parses and validates a series, reporting the offending line on failure.
pub fn parse_series(text: &str, label: &str) -> Result<TimeSeries> {
    let records = parse_records(text)?;
    let mut prev: Option<f64> = None;
    for &(line, r) in &records {
        if !(r.value.is_finite() && r.value > 0.0) {
            return Err(Error::Validation {
                line: Some(line),
                message: format!("value {} is not strictly positive", r.value),
            });
        }
        if !(r.time.is_finite() && r.time > 0.0) {
            return Err(Error::Validation {
                line: Some(line),
                message: format!("time {} is not positive", r.time),
            });
        }
        if prev.is_some_and(|p| r.time <= p) {
            return Err(Error::Validation {
                line: Some(line),
                message: format!("time {} does not increase", r.time),
            });
        }
        prev = Some(r.time);
    }
    let (times, values) = records.iter().map(|(_, r)| (r.time, r.value)).unzip();
    TimeSeries::new(times, values, label)
}

/// Renders a series in the input format; Rust's shortest round-trip float
/// formatting makes this lossless.
pub fn to_csv(series: &TimeSeries) -> String {
    let mut out = String::from("time,value\n");
    for (t, x) in series.times().iter().zip(series.values()) {
        out.push_str(&format!("{t},{x}\n"));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_matches_table() {
        let s = builtin(US_NATGAS_ID).unwrap();
        assert_eq!(s.len(), 34);
        assert_eq!(s.first(), (1990.0, 11.85815));
        assert_eq!(s.last(), (2023.0, 41.90800));
        assert!(s.is_uniform());
        assert!(builtin("nope").is_err());
    }

    #[test]
    fn negative_value_names_line() {
        let err = parse_series("time,value\n1,2.0\n\n2,-1\n", "f").unwrap_err();
        assert_eq!(
            err,
            Error::Validation {
                line: Some(4),
                message: "value -1 is not strictly positive".into()
            }
        );
        assert_eq!(err.exit_code(), 1);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        assert!(matches!(parse_series("t,v\n1,2\n", ""), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(
            parse_series("time,value\n1,2\n2,abc\n", ""),
            Err(Error::Parse { line: 3, .. })
        ));
        assert!(matches!(
            parse_series("time,value\n1,2,3\n", ""),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(matches!(
            parse_series("time,value\n2,2\n1,3\n", ""),
            Err(Error::Validation { line: Some(3), .. })
        ));
    }

    #[test]
    fn two_row_file() {
        let s = parse_series("time,value\n1,1.0\n2,2.0\n", "two").unwrap();
        assert_eq!(s.len(), 2);
        assert!(s.is_uniform());
    }

    #[test]
    fn csv_round_trip() {
        let s = us_natgas();
        let back = parse_series(&to_csv(&s), US_NATGAS_ID).unwrap();
        assert_eq!(back, s);
    }
}
