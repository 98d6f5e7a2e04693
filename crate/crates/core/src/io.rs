//! Daily-close ingestion, windowing and run manifests.
//!
//! Price files are two-column CSV with the header `date,close`, ISO-8601
//! days in strictly increasing order and positive closes. Row order is the
//! time axis; calendar gaps are fine.
//!
//! ```
//! use marketlab::io::{read_price_csv, Align};
//!
//! let text = "date,close\n2001-01-02,10.5\n2001-01-03,10.75\n2001-01-05,10.0\n";
//! let s = read_price_csv(text.as_bytes()).unwrap();
//! assert_eq!(s.len(), 3);
//! assert_eq!(s.window(2, Align::End).closes, vec![10.75, 10.0]);
//!
//! let err = read_price_csv("date,close\n2001-01-02,0\n".as_bytes()).unwrap_err();
//! assert_eq!(err.to_string(), "line 2: close must be positive, got 0");
//! ```

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::fractal::ANALYSIS_WINDOW;

pub const DEFAULT_WINDOW: usize = ANALYSIS_WINDOW;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PriceSeries {
    /// Opaque labels; only their order is checked.
    pub dates: Vec<String>,
    pub closes: Vec<f64>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Align {
    Start,
    #[default]
    End,
}

impl std::str::FromStr for Align {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "start" => Ok(Align::Start),
            "end" => Ok(Align::End),
            other => Err(format!("unknown alignment '{other}'")),
        }
    }
}

impl PriceSeries {
    pub fn len(&self) -> usize {
        self.closes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.closes.is_empty()
    }

    /// The first or last `n` rows; the whole series when it is shorter.
    pub fn window(&self, n: usize, align: Align) -> PriceSeries {
        let len = self.len();
        let range = match align {
            Align::Start => 0..n.min(len),
            Align::End => len.saturating_sub(n)..len,
        };
        PriceSeries {
            dates: self.dates[range.clone()].to_vec(),
            closes: self.closes[range].to_vec(),
        }
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["date", "close"])?;
        for (d, c) in self.dates.iter().zip(&self.closes) {
            w.write_record([d.as_str(), &c.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

fn is_iso_day(s: &str) -> bool {
    let b = s.as_bytes();
    if b.len() != 10 || b[4] != b'-' || b[7] != b'-' {
        return false;
    }
    let digits = |r: std::ops::Range<usize>| -> Option<u32> {
        b[r].iter().try_fold(0u32, |acc, &c| c.is_ascii_digit().then(|| acc * 10 + (c - b'0') as u32))
    };
    match (digits(0..4), digits(5..7), digits(8..10)) {
        (Some(_), Some(m), Some(d)) => (1..=12).contains(&m) && (1..=31).contains(&d),
        _ => false,
    }
}

/// Parses a `date,close` file. Every error names its 1-based line.
pub fn read_price_csv<R: Read>(input: R) -> Result<PriceSeries> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(input);
    let mut records = r.records();
    let line_of = |rec: &csv::StringRecord| rec.position().map_or(0, |p| p.line() as usize);
    let parse_err = |line: usize, message: String| Error::Parse { line, message };

    let header = match records.next() {
        Some(h) => h?,
        None => return Err(parse_err(1, "empty file, expected header 'date,close'".into())),
    };
    if header.len() != 2 || !header[0].eq_ignore_ascii_case("date") || !header[1].eq_ignore_ascii_case("close") {
        return Err(parse_err(line_of(&header), "expected header 'date,close'".into()));
    }

    let mut s = PriceSeries::default();
    for rec in records {
        let rec = rec?;
        let line = line_of(&rec);
        if rec.len() == 1 && rec[0].is_empty() {
            continue;
        }
        if rec.len() != 2 {
            return Err(parse_err(line, format!("expected 2 fields, got {}", rec.len())));
        }
        let date = &rec[0];
        if !is_iso_day(date) {
            return Err(parse_err(line, format!("date '{date}' is not YYYY-MM-DD")));
        }
        if let Some(prev) = s.dates.last() {
            if date <= prev.as_str() {
                return Err(parse_err(line, format!("date {date} does not follow {prev}")));
            }
        }
        let close: f64 = rec[1]
            .parse()
            .map_err(|_| parse_err(line, format!("close '{}' is not a number", &rec[1])))?;
        if !(close > 0.0 && close.is_finite()) {
            return Err(parse_err(line, format!("close must be positive, got {}", &rec[1])));
        }
        s.dates.push(date.to_string());
        s.closes.push(close);
    }
    if s.is_empty() {
        return Err(Error::InvalidInput("no price rows".into()));
    }
    Ok(s)
}

pub fn read_price_file(path: &Path) -> Result<PriceSeries> {
    read_price_csv(std::fs::File::open(path)?)
}

/// Everything needed to repeat a command.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub args: Vec<String>,
    pub config: Value,
    pub seeds: Vec<u64>,
    pub version: String,
    pub outputs: Vec<String>,
    pub wall_clock_seconds: f64,
}

impl RunManifest {
    pub fn new(command: &str, config: Value) -> Self {
        Self {
            command: command.to_string(),
            args: std::env::args().collect(),
            config,
            seeds: Vec::new(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            outputs: Vec::new(),
            wall_clock_seconds: 0.0,
        }
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path)?;
        serde_json::to_writer_pretty(f, self)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<PriceSeries> {
        read_price_csv(text.as_bytes())
    }

    fn line(err: Error) -> usize {
        match err {
            Error::Parse { line, .. } => line,
            other => panic!("not a parse error: {other}"),
        }
    }

    #[test]
    fn valid_file() {
        let s = parse("date,close\n1950-01-03,16.66\n1950-01-04,16.85\n1950-01-05,16.93\n").unwrap();
        assert_eq!(s.len(), 3);
        assert_eq!(s.dates[2], "1950-01-05");
    }

    #[test]
    fn errors_name_the_line() {
        assert_eq!(line(parse("date,close\n1950-01-03,1\n1950-01-04,0\n").unwrap_err()), 3);
        assert_eq!(line(parse("date,close\n1950-01-03,1\n1950-01-03,2\n").unwrap_err()), 3);
        assert_eq!(line(parse("date,close\n1950-01-03,abc\n").unwrap_err()), 2);
        assert_eq!(line(parse("date,close\n1950-01-03,1,2\n").unwrap_err()), 2);
        assert_eq!(line(parse("date,close\n1950-13-03,1\n").unwrap_err()), 2);
        assert_eq!(line(parse("day,price\n1950-01-03,1\n").unwrap_err()), 1);
        assert_eq!(line(parse("date,close\n1950-01-03,-4\n").unwrap_err()), 2);
        assert!(parse("date,close\n").unwrap_err().is_validation());
    }

    #[test]
    fn windows() {
        let text: String = std::iter::once("date,close\n".to_string())
            .chain((0..7000).map(|i| format!("{:04}-01-01,{}\n", 1000 + i, i + 1)))
            .collect();
        let s = parse(&text).unwrap();
        let w = s.window(DEFAULT_WINDOW, Align::End);
        assert_eq!(w.len(), 6546);
        assert_eq!(w.closes[0], 455.0);
        assert_eq!(*w.closes.last().unwrap(), 7000.0);
        assert_eq!(s.window(10, Align::Start).closes[9], 10.0);
        assert_eq!(s.window(10_000, Align::End).len(), 7000);
    }

    #[test]
    fn round_trip() {
        let s = parse("date,close\n2000-01-03,0.1\n2000-01-04,1e-7\n").unwrap();
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        assert_eq!(read_price_csv(buf.as_slice()).unwrap(), s);
    }
}
