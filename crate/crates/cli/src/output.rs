use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::{Failure, Format};

fn io_failure(e: impl std::fmt::Display) -> Failure {
    Failure::Usage(format!("cannot write output: {e}"))
}

pub fn render<T: Serialize>(rows: &[T], format: Format) -> Result<Vec<u8>, Failure> {
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            for row in rows {
                w.serialize(row).map_err(io_failure)?;
            }
            w.into_inner().map_err(io_failure)
        }
        Format::Json => {
            let mut text = serde_json::to_vec_pretty(rows).map_err(io_failure)?;
            text.push(b'\n');
            Ok(text)
        }
    }
}

pub fn write_bytes(bytes: &[u8], out: Option<&Path>) -> Result<(), Failure> {
    match out {
        Some(path) => std::fs::write(path, bytes).map_err(io_failure),
        None => std::io::stdout().write_all(bytes).map_err(io_failure),
    }
}

pub fn emit<T: Serialize>(rows: &[T], format: Format, out: Option<&Path>) -> Result<(), Failure> {
    write_bytes(&render(rows, format)?, out)
}
