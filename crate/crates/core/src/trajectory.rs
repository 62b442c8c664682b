//! Plain-text trajectory records.
//!
//! One header line followed by one line per sample:
//! `t,u1,u2,u3,v1,v2,v3,a1,a2,a3,b1,b2,b3,theta`, every number in
//! scientific notation with 17 significant digits so the file round-trips
//! exactly.

use std::io::{Read, Write};

use crate::dynamics::HorizontalPath;
use crate::error::{Error, Result};
use crate::state::RawState;

pub const HEADER: &str = "t,u1,u2,u3,v1,v2,v3,a1,a2,a3,b1,b2,b3,theta";

/// One parsed line of a trajectory record.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryRow {
    pub t: f64,
    pub coords: [f64; 12],
    pub theta: f64,
}

impl TrajectoryRow {
    /// Re-validates the coordinates as a state.
    pub fn state(&self, tol: f64) -> Result<RawState> {
        RawState::from_array(&self.coords, tol)
    }
}

fn io_error(e: csv::Error) -> std::io::Error {
    std::io::Error::other(e)
}

pub fn write_csv<W: Write>(p: &HorizontalPath, w: W) -> std::io::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(HEADER.split(',')).map_err(io_error)?;
    let mut record: Vec<String> = Vec::with_capacity(14);
    for s in p.samples() {
        record.clear();
        record.push(format!("{:.16e}", s.t));
        record.extend(s.state.to_array().iter().map(|c| format!("{c:.16e}")));
        record.push(format!("{:.16e}", s.theta));
        out.write_record(&record).map_err(io_error)?;
    }
    out.flush()
}

pub fn to_csv_string(p: &HorizontalPath) -> String {
    let mut buf = Vec::new();
    write_csv(p, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("ASCII output")
}

pub fn read_csv<R: Read>(r: R) -> Result<Vec<TrajectoryRow>> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r);
    let header = reader.headers().map_err(|e| Error::Parse(e.to_string()))?;
    if header.iter().collect::<Vec<_>>().join(",") != HEADER {
        return Err(Error::Parse(format!("unexpected header `{}`", header.iter().collect::<Vec<_>>().join(","))));
    }
    let mut rows = Vec::new();
    for (n, record) in reader.records().enumerate() {
        let line = n + 2;
        let record = record.map_err(|e| Error::Parse(format!("line {line}: {e}")))?;
        let fields = record
            .iter()
            .map(str::parse::<f64>)
            .collect::<std::result::Result<Vec<f64>, _>>()
            .map_err(|e| Error::Parse(format!("line {line}: {e}")))?;
        rows.push(TrajectoryRow {
            t: fields[0],
            coords: std::array::from_fn(|i| fields[i + 1]),
            theta: fields[13],
        });
    }
    Ok(rows)
}
