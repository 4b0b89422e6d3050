//! Code files: incidence-matrix CSV and the JSON code object.
//!
//! CSV holds `m` lines of `n` comma-separated `0`/`1` entries, row `i` being
//! pool `i`, no header. JSON holds `m`, `r`, `n`, the sorted 1-based index
//! set of every address, the balance counts, the deviation and an optional
//! free-form `metadata` block.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::address::Address;
use crate::code::{balance_of, GrayCode, IncidenceMatrix};
use crate::error::CodeError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    /// `.csv` means CSV; anything else is JSON.
    pub fn from_path(path: &Path) -> Format {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => Format::Csv,
            _ => Format::Json,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CodeFile {
    pub m: usize,
    pub r: usize,
    pub n: usize,
    pub addresses: Vec<Vec<usize>>,
    pub balance: Vec<usize>,
    pub deviation: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metadata: Option<Value>,
}

impl CodeFile {
    pub fn from_code(code: &GrayCode, metadata: Option<Value>) -> Self {
        let balance = code.balance();
        CodeFile {
            m: code.m(),
            r: code.r(),
            n: code.len(),
            addresses: code.index_sets(),
            balance: balance.counts,
            deviation: balance.deviation,
            metadata,
        }
    }

    /// Addresses as stored, without requiring a common weight.
    pub fn raw_addresses(&self) -> Result<Vec<Address>, CodeError> {
        if self.addresses.len() != self.n {
            return Err(CodeError::Parse(format!(
                "n = {} but {} addresses listed",
                self.n,
                self.addresses.len()
            )));
        }
        self.addresses
            .iter()
            .map(|set| Address::from_indices(self.m, set))
            .collect()
    }

    pub fn to_code(&self) -> Result<GrayCode, CodeError> {
        GrayCode::new(self.m, self.r, self.raw_addresses()?)
    }
}

pub fn to_json(code: &GrayCode, metadata: Option<Value>) -> String {
    let mut s = serde_json::to_string_pretty(&CodeFile::from_code(code, metadata))
        .expect("code files always serialize");
    s.push('\n');
    s
}

pub fn parse_json(text: &str) -> Result<CodeFile, CodeError> {
    serde_json::from_str(text).map_err(|e| CodeError::Parse(e.to_string()))
}

pub fn from_json(text: &str) -> Result<GrayCode, CodeError> {
    parse_json(text)?.to_code()
}

pub fn to_csv(code: &GrayCode) -> String {
    let mut out = String::new();
    for row in code.to_incidence().rows() {
        let line: Vec<&str> = row.iter().map(|&b| if b { "1" } else { "0" }).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

/// Parses the CSV matrix; blank lines are skipped and entries trimmed.
pub fn parse_csv(text: &str) -> Result<IncidenceMatrix, CodeError> {
    let mut rows = Vec::new();
    for line in text.lines().map(str::trim).filter(|l| !l.is_empty()) {
        let row = rows.len();
        let parsed = line
            .split(',')
            .enumerate()
            .map(|(column, cell)| match cell.trim() {
                "0" => Ok(false),
                "1" => Ok(true),
                other => Err(CodeError::NonBinary {
                    row: row + 1,
                    column: column + 1,
                    symbol: other.to_string(),
                }),
            })
            .collect::<Result<Vec<bool>, _>>()?;
        rows.push(parsed);
    }
    IncidenceMatrix::from_rows(rows)
}

pub fn from_csv(text: &str) -> Result<GrayCode, CodeError> {
    GrayCode::from_incidence(&parse_csv(text)?)
}

/// Reads `(m, r, addresses)` without insisting on a common weight, so the
/// validator can report mixed weights. For CSV, `r` is the weight of the
/// first column.
pub fn read_raw(text: &str, format: Format) -> Result<(usize, usize, Vec<Address>), CodeError> {
    match format {
        Format::Json => {
            let file = parse_json(text)?;
            Ok((file.m, file.r, file.raw_addresses()?))
        }
        Format::Csv => {
            let h = parse_csv(text)?;
            let columns = h.columns()?;
            let r = columns.first().map(|a| a.weight()).unwrap_or(0);
            Ok((h.m(), r, columns))
        }
    }
}

pub fn read_code(text: &str, format: Format) -> Result<GrayCode, CodeError> {
    match format {
        Format::Json => from_json(text),
        Format::Csv => from_csv(text),
    }
}

pub fn write_code(code: &GrayCode, format: Format, metadata: Option<Value>) -> String {
    match format {
        Format::Json => to_json(code, metadata),
        Format::Csv => to_csv(code),
    }
}

/// Balance recomputed from addresses; handy when checking a file's stored
/// statistics.
pub fn stored_balance_matches(file: &CodeFile) -> Result<bool, CodeError> {
    let b = balance_of(file.m, &file.raw_addresses()?);
    Ok(b.counts == file.balance && b.deviation == file.deviation)
}
