//! JSON-lines helpers shared by every on-disk record format.

use std::io::{BufRead, Write};

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{CupidError, Result};

/// Reads one record per non-blank line.
pub fn read_jsonl<T: DeserializeOwned, R: BufRead>(reader: R) -> Result<Vec<T>> {
    let mut out = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record = serde_json::from_str(&line).map_err(|e| {
            CupidError::Format(format!("line {}: {e}", lineno + 1))
        })?;
        out.push(record);
    }
    Ok(out)
}

pub fn write_jsonl<'a, T: Serialize + 'a, W: Write>(
    mut writer: W,
    records: impl IntoIterator<Item = &'a T>,
) -> Result<()> {
    for record in records {
        serde_json::to_writer(&mut writer, record)?;
        writer.write_all(b"\n")?;
    }
    writer.flush()?;
    Ok(())
}

pub fn to_jsonl_bytes<'a, T: Serialize + 'a>(
    records: impl IntoIterator<Item = &'a T>,
) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    write_jsonl(&mut buf, records)?;
    Ok(buf)
}
