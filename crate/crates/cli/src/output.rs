use std::io::Write;

use clap::ValueEnum;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

/// Writes `rows` as CSV with a header, or as one JSON array.
pub fn write_rows<T: Serialize, W: Write>(
    rows: &[T],
    format: Format,
    out: W,
) -> std::io::Result<()> {
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(out);
            for row in rows {
                w.serialize(row).map_err(std::io::Error::other)?;
            }
            w.flush()
        }
        Format::Json => {
            let mut out = out;
            serde_json::to_writer(&mut out, rows).map_err(std::io::Error::other)?;
            writeln!(out)
        }
    }
}

/// Writes a single record; JSON output is an object.
pub fn write_record<T: Serialize, W: Write>(
    record: &T,
    format: Format,
    out: W,
) -> std::io::Result<()> {
    match format {
        Format::Csv => write_rows(std::slice::from_ref(record), format, out),
        Format::Json => {
            let mut out = out;
            serde_json::to_writer(&mut out, record).map_err(std::io::Error::other)?;
            writeln!(out)
        }
    }
}
