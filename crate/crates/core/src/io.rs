//! Function serialization: CSV with header `index,value` (decimal or exact
//! `p/q` values) and raw little-endian `f64` with a `u64` count prefix.

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::function::DyadicFunction;
use crate::group::Resolution;
use crate::numeric::{fmt_f64, Dyadic, NumericMode};

/// Writes one row per point. Exact functions print `p/q`; floats print the
/// shortest decimal that round-trips.
pub fn write_csv<W: Write>(f: &DyadicFunction, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["index", "value"])?;
    for i in 0..f.len() {
        let v = match f.mode() {
            NumericMode::Exact => f.get(i).to_string(),
            NumericMode::Float => fmt_f64(f.get_f64(i)),
        };
        out.write_record([i.to_string(), v])?;
    }
    out.flush()?;
    Ok(())
}

/// Reads a CSV function. The row count must be a power of two and indices
/// must run `0, 1, 2, ...`. All-exact values give an exact function.
pub fn read_csv<R: Read>(r: R) -> Result<DyadicFunction> {
    let mut rd = csv::Reader::from_reader(r);
    let headers = rd.headers()?.clone();
    if headers.len() != 2 || &headers[0] != "index" || &headers[1] != "value" {
        return Err(Error::Parse("expected header `index,value`".into()));
    }
    let mut raw = Vec::new();
    for (row, rec) in rd.records().enumerate() {
        let rec = rec?;
        let idx: usize = rec[0]
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("bad index {:?}", &rec[0])))?;
        if idx != row {
            return Err(Error::Parse(format!("row {row} has index {idx}")));
        }
        raw.push(rec[1].trim().to_string());
    }
    let m = resolution_for(raw.len())?;
    let exact: Option<Vec<Dyadic>> = raw.iter().map(|s| s.parse().ok()).collect();
    match exact {
        Some(vals) => DyadicFunction::from_dyadics(m, &vals),
        None => {
            let vals = raw
                .iter()
                .map(|s| s.parse::<f64>().map_err(|_| Error::Parse(format!("bad value {s:?}"))))
                .collect::<Result<Vec<_>>>()?;
            DyadicFunction::from_f64(m, vals)
        }
    }
}

fn resolution_for(len: usize) -> Result<Resolution> {
    if !len.is_power_of_two() || len < 2 {
        return Err(Error::Parse(format!("{len} values is not 2^m with m >= 1")));
    }
    Resolution::new(len.trailing_zeros())
}

/// `u64` count, then the values as `f64`, all little-endian.
pub fn write_binary<W: Write>(f: &DyadicFunction, mut w: W) -> Result<()> {
    w.write_all(&(f.len() as u64).to_le_bytes())?;
    for v in f.to_f64_vec() {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_binary<R: Read>(mut r: R) -> Result<DyadicFunction> {
    let mut word = [0u8; 8];
    r.read_exact(&mut word)?;
    let len = u64::from_le_bytes(word);
    let len = usize::try_from(len).map_err(|_| Error::Parse("count too large".into()))?;
    let m = resolution_for(len)?;
    let mut vals = Vec::with_capacity(len);
    for _ in 0..len {
        r.read_exact(&mut word)?;
        vals.push(f64::from_le_bytes(word));
    }
    let mut rest = [0u8; 1];
    if r.read(&mut rest)? != 0 {
        return Err(Error::Parse("trailing bytes after values".into()));
    }
    DyadicFunction::from_f64(m, vals)
}
