//! CSV emission with fixed column order, 9 significant digits and `\n` line
//! endings, so identical inputs give byte-identical files.

use std::collections::BTreeMap;
use std::io::Write;

use crate::error::Result;
use crate::ingest::TemperatureKey;
use crate::oracle::CertificationRow;
use crate::search::{SweepRow, Table1Row};

pub const SIGNIFICANT_DIGITS: usize = 9;

/// Formats `x` with [`SIGNIFICANT_DIGITS`] significant digits, positionally
/// for moderate magnitudes and in scientific notation otherwise.
pub fn format_sig(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x);
    // exponent after rounding to the target precision
    let exp: i32 = sci[sci.find('e').unwrap() + 1..].parse().unwrap();
    if (-5..9).contains(&exp) {
        let decimals = (SIGNIFICANT_DIGITS as i32 - 1 - exp).max(0) as usize;
        format!("{x:.decimals$}")
    } else {
        sci
    }
}

fn writer<W: Write>(out: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out)
}

pub fn write_sweep_csv<W: Write>(out: W, rows: &[SweepRow]) -> Result<()> {
    let mut w = writer(out);
    w.write_record(["x", "rate_original", "rate_tight", "rate_best", "rate_ideal"])?;
    for r in rows {
        w.write_record([r.x, r.original, r.tight, r.best, r.ideal].map(format_sig))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_table1_csv<W: Write>(out: W, rows: &[Table1Row]) -> Result<()> {
    let mut w = writer(out);
    w.write_record([
        "temperature_c",
        "eps1",
        "gamma_sps_3",
        "gamma_sps_5",
        "gamma_sps_7",
        "gamma_wps_10",
        "gamma_wps_50",
        "gamma_wps_100",
    ])?;
    for r in rows {
        let mut rec = vec![r.temperature.to_string(), format_sig(r.epsilon1)];
        rec.extend(r.sps.iter().chain(&r.wps).map(|&g| format_sig(g)));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_certification_csv<W: Write>(out: W, rows: &[CertificationRow]) -> Result<()> {
    let mut w = writer(out);
    w.write_record([
        "index",
        "q00",
        "q01",
        "q10",
        "q11",
        "p_bit0",
        "p_basis0",
        "e_bit",
        "e_phase",
        "bound_original",
        "bound_tight",
        "margin_original",
        "margin_tight",
    ])?;
    for r in rows {
        let m = r.strategy.mixture;
        let mut rec = vec![r.index.to_string()];
        rec.extend(
            [
                m.q00,
                m.q01,
                m.q10,
                m.q11,
                r.strategy.p_bit0,
                r.strategy.p_basis0,
                r.exact.bit,
                r.exact.phase,
                r.original_bound,
                r.tight_bound,
                r.original_margin(),
                r.tight_margin(),
            ]
            .map(format_sig),
        );
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_epsilon1_csv<W: Write>(out: W, table: &BTreeMap<TemperatureKey, f64>) -> Result<()> {
    let mut w = writer(out);
    w.write_record(["temperature_c", "epsilon1"])?;
    for (t, eps) in table {
        w.write_record([t.to_string(), format_sig(*eps)])?;
    }
    w.flush()?;
    Ok(())
}
