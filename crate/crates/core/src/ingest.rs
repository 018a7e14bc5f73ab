//! Beam-splitter characterisation: output-power pairs measured against
//! wavelength and temperature, reduced to a basis-choice flaw ε₁ per
//! temperature.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Read;

use crate::error::{Error, Result};

/// Temperature rounded to 0.1 °C, used to group measurements.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TemperatureKey(i64);

impl TemperatureKey {
    pub fn from_celsius(t: f64) -> Self {
        TemperatureKey((t * 10.0).round() as i64)
    }

    pub fn celsius(&self) -> f64 {
        self.0 as f64 / 10.0
    }
}

impl fmt::Display for TemperatureKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.1}", self.celsius())
    }
}

/// One power-meter reading of the two splitter outputs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeviationRecord {
    pub temperature_c: f64,
    pub wavelength_nm: f64,
    pub p0: f64,
    pub p1: f64,
}

impl DeviationRecord {
    pub fn new(temperature_c: f64, wavelength_nm: f64, p0: f64, p1: f64) -> Result<Self> {
        let r = Self {
            temperature_c,
            wavelength_nm,
            p0,
            p1,
        };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        const INV: &str = "DeviationRecord invariant (p0 > 0, p1 > 0)";
        for (name, v) in [("p0", self.p0), ("p1", self.p1)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::domain(INV, format!("{name} = {v}")));
            }
        }
        if !self.temperature_c.is_finite() || !self.wavelength_nm.is_finite() {
            return Err(Error::domain(
                "DeviationRecord invariant (finite temperature and wavelength)",
                format!("T = {}, λ = {}", self.temperature_c, self.wavelength_nm),
            ));
        }
        Ok(())
    }

    pub fn temperature_key(&self) -> TemperatureKey {
        TemperatureKey::from_celsius(self.temperature_c)
    }
}

/// `Δ = P₀ / P₁`
pub fn deviation_ratio(record: &DeviationRecord) -> Result<f64> {
    if record.p1 == 0.0 {
        return Err(Error::degenerate("deviation_ratio", "p1 = 0"));
    }
    Ok(record.p0 / record.p1)
}

/// `|Δ/(1+Δ) − 1/2|`, the basis bias a splitter with ratio Δ imposes.
pub fn epsilon1_from_ratio(ratio: f64) -> f64 {
    (ratio / (1.0 + ratio) - 0.5).abs()
}

/// Worst-case ε₁ over all wavelengths measured at `temperature_c`.
pub fn epsilon1_estimate(records: &[DeviationRecord], temperature_c: f64) -> Result<f64> {
    let key = TemperatureKey::from_celsius(temperature_c);
    let mut best: Option<f64> = None;
    for r in records.iter().filter(|r| r.temperature_key() == key) {
        let eps = epsilon1_from_ratio(deviation_ratio(r)?);
        best = Some(best.map_or(eps, |b| b.max(eps)));
    }
    best.ok_or(Error::EmptySelection {
        temperature_c: key.celsius(),
    })
}

/// ε₁ for every temperature present, ascending.
pub fn epsilon1_by_temperature(records: &[DeviationRecord]) -> Result<BTreeMap<TemperatureKey, f64>> {
    let mut table = BTreeMap::new();
    for r in records {
        let eps = epsilon1_from_ratio(deviation_ratio(r)?);
        table
            .entry(r.temperature_key())
            .and_modify(|e: &mut f64| *e = e.max(eps))
            .or_insert(eps);
    }
    Ok(table)
}

struct Columns<'a> {
    source_name: &'a str,
    indices: Vec<usize>,
}

impl<'a> Columns<'a> {
    fn locate(headers: &csv::StringRecord, wanted: &[&str], source_name: &'a str) -> Result<Self> {
        let indices = wanted
            .iter()
            .map(|name| {
                headers
                    .iter()
                    .position(|h| h.trim().eq_ignore_ascii_case(name))
                    .ok_or_else(|| Error::Parse {
                        source_name: source_name.to_string(),
                        row: 1,
                        detail: format!("missing column {name:?}"),
                    })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            source_name,
            indices,
        })
    }

    fn number(&self, record: &csv::StringRecord, row: usize, col: usize, name: &str) -> Result<f64> {
        let raw = record.get(self.indices[col]).unwrap_or("").trim();
        raw.parse::<f64>().map_err(|_| Error::Parse {
            source_name: self.source_name.to_string(),
            row,
            detail: format!("{name}: cannot parse {raw:?} as a number"),
        })
    }
}

fn csv_reader<R: Read>(reader: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(reader)
}

/// Reads `temperature_c, wavelength_nm, p0, p1` rows. Row numbers in errors
/// count the header as row 1.
pub fn read_measurements<R: Read>(reader: R, source_name: &str) -> Result<Vec<DeviationRecord>> {
    const COLS: [&str; 4] = ["temperature_c", "wavelength_nm", "p0", "p1"];
    let mut rdr = csv_reader(reader);
    let cols = Columns::locate(rdr.headers()?, &COLS, source_name)?;
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row = rec.position().map_or(i + 2, |p| p.line() as usize);
        let v: Vec<f64> = (0..4)
            .map(|c| cols.number(&rec, row, c, COLS[c]))
            .collect::<Result<_>>()?;
        let record = DeviationRecord::new(v[0], v[1], v[2], v[3]).map_err(|e| Error::Parse {
            source_name: source_name.to_string(),
            row,
            detail: e.to_string(),
        })?;
        out.push(record);
    }
    Ok(out)
}

/// Reads a `temperature_c, epsilon1` table.
pub fn read_epsilon1_table<R: Read>(reader: R, source_name: &str) -> Result<Vec<(TemperatureKey, f64)>> {
    const COLS: [&str; 2] = ["temperature_c", "epsilon1"];
    let mut rdr = csv_reader(reader);
    let cols = Columns::locate(rdr.headers()?, &COLS, source_name)?;
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row = rec.position().map_or(i + 2, |p| p.line() as usize);
        let t = cols.number(&rec, row, 0, COLS[0])?;
        let eps = cols.number(&rec, row, 1, COLS[1])?;
        if !(0.0..0.5).contains(&eps) {
            return Err(Error::Parse {
                source_name: source_name.to_string(),
                row,
                detail: format!("epsilon1 must satisfy 0 ≤ ε1 < 1/2, got {eps}"),
            });
        }
        out.push((TemperatureKey::from_celsius(t), eps));
    }
    Ok(out)
}
