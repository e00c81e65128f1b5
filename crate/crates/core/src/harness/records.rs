use std::io::{Read, Write};

use crate::estimate::Method;
use crate::{Error, Result};

pub const CSV_HEADER: [&str; 18] = [
    "trial",
    "seed",
    "n",
    "p",
    "K",
    "H",
    "K_null",
    "H_null",
    "level",
    "estimator",
    "matched_null",
    "T",
    "beta",
    "p_selective",
    "p_naive",
    "residue",
    "degenerate",
    "elapsed_ms",
];

/// One simulated trial. `t` holds `T` for the chi test and `T_F` for the F
/// test; `beta` is the upper end of the selection set and may be infinite.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub trial: usize,
    pub seed: u64,
    pub n: usize,
    pub p: usize,
    pub k: usize,
    pub h: usize,
    pub k_null: usize,
    pub h_null: usize,
    pub level: u8,
    pub estimator: Method,
    pub matched_null: bool,
    pub t: f64,
    pub beta: f64,
    pub p_selective: f64,
    pub p_naive: f64,
    pub residue: f64,
    pub degenerate: bool,
    pub elapsed_ms: f64,
}

fn flag(b: bool) -> &'static str {
    if b {
        "1"
    } else {
        "0"
    }
}

/// Shortest round-trip decimal, switching to exponent form when shorter.
fn float(v: f64) -> String {
    let plain = v.to_string();
    if !v.is_finite() {
        return plain;
    }
    let exp = format!("{v:e}");
    if exp.len() < plain.len() {
        exp
    } else {
        plain
    }
}

impl TrialRecord {
    fn fields(&self) -> [String; 18] {
        [
            self.trial.to_string(),
            self.seed.to_string(),
            self.n.to_string(),
            self.p.to_string(),
            self.k.to_string(),
            self.h.to_string(),
            self.k_null.to_string(),
            self.h_null.to_string(),
            self.level.to_string(),
            self.estimator.to_string(),
            flag(self.matched_null).into(),
            float(self.t),
            float(self.beta),
            float(self.p_selective),
            float(self.p_naive),
            float(self.residue),
            flag(self.degenerate).into(),
            float(self.elapsed_ms),
        ]
    }

    fn parse(row: &csv::StringRecord, line: u64) -> Result<Self> {
        let get = |i: usize| row.get(i).unwrap_or_default();
        fn num<T: std::str::FromStr>(s: &str, col: &str, line: u64) -> Result<T> {
            s.trim()
                .parse()
                .map_err(|_| Error::Parse(format!("line {line}: bad value `{s}` in column {col}")))
        }
        let boolean = |i: usize| match get(i).trim() {
            "0" => Ok(false),
            "1" => Ok(true),
            s => Err(Error::Parse(format!("line {line}: bad flag `{s}` in column {}", CSV_HEADER[i]))),
        };
        let float = |i: usize| num::<f64>(get(i), CSV_HEADER[i], line);
        let int = |i: usize| num::<usize>(get(i), CSV_HEADER[i], line);
        Ok(Self {
            trial: int(0)?,
            seed: num(get(1), CSV_HEADER[1], line)?,
            n: int(2)?,
            p: int(3)?,
            k: int(4)?,
            h: int(5)?,
            k_null: int(6)?,
            h_null: int(7)?,
            level: num(get(8), CSV_HEADER[8], line)?,
            estimator: get(9).trim().parse()?,
            matched_null: boolean(10)?,
            t: float(11)?,
            beta: float(12)?,
            p_selective: float(13)?,
            p_naive: float(14)?,
            residue: float(15)?,
            degenerate: boolean(16)?,
            elapsed_ms: float(17)?,
        })
    }
}

/// Writes the header and one row per record. Floats use the shortest
/// round-trip decimal form, so an infinite `beta` is written as `inf`.
pub fn write_records<W: Write>(writer: W, records: &[TrialRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(CSV_HEADER)?;
    for r in records {
        w.write_record(r.fields())?;
    }
    w.flush()?;
    Ok(())
}

/// Reads records back, checking the header column by column.
pub fn read_records<R: Read>(reader: R) -> Result<Vec<TrialRecord>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let header = rdr.headers()?.clone();
    for (i, name) in CSV_HEADER.iter().enumerate() {
        match header.get(i) {
            Some(h) if h.trim() == *name => {}
            Some(h) => return Err(Error::Parse(format!("column {}: expected `{name}`, found `{h}`", i + 1))),
            None => return Err(Error::Parse(format!("missing column `{name}`"))),
        }
    }
    if header.len() != CSV_HEADER.len() {
        return Err(Error::Parse(format!(
            "expected {} columns, found {}",
            CSV_HEADER.len(),
            header.len()
        )));
    }
    rdr.records()
        .map(|row| {
            let row = row?;
            let line = row.position().map_or(0, |p| p.line());
            TrialRecord::parse(&row, line)
        })
        .collect()
}
