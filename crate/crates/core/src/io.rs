//! Plain-text serialization shared by spectra, traces and fit reports.
//!
//! CSV dialect: comma separator, `.` decimal point, `#`-prefixed `key=value`
//! metadata lines, then one column-name row, then data rows. Floats are written with
//! Rust's shortest round-trip formatting so output is byte-stable.

use std::fmt::Write as _;

use crate::error::{domain, Result};

/// Ordered key/value annotations carried by every output.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Metadata {
    entries: Vec<(String, String)>,
}

impl Metadata {
    pub fn new() -> Self {
        Self::default()
    }

    /// Sets `key`, replacing an earlier value in place.
    pub fn set(&mut self, key: impl Into<String>, value: impl ToString) {
        let key = key.into();
        let value = value.to_string();
        match self.entries.iter_mut().find(|(k, _)| *k == key) {
            Some(entry) => entry.1 = value,
            None => self.entries.push((key, value)),
        }
    }

    pub fn with(mut self, key: impl Into<String>, value: impl ToString) -> Self {
        self.set(key, value);
        self
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    pub fn write_header(&self, out: &mut String) {
        for (k, v) in &self.entries {
            let _ = writeln!(out, "# {k}={v}");
        }
    }
}

/// Renders columns of equal length as CSV.
pub fn columns_to_csv(metadata: &Metadata, names: &[&str], columns: &[&[f64]]) -> String {
    let mut out = String::new();
    metadata.write_header(&mut out);
    out.push_str(&names.join(","));
    out.push('\n');
    let rows = columns.first().map_or(0, |c| c.len());
    for r in 0..rows {
        for (c, col) in columns.iter().enumerate() {
            if c > 0 {
                out.push(',');
            }
            let _ = write!(out, "{}", col[r]);
        }
        out.push('\n');
    }
    out
}

/// Numeric table read back from the CSV dialect above.
#[derive(Clone, Debug, Default)]
pub struct Table {
    pub metadata: Metadata,
    pub names: Vec<String>,
    pub columns: Vec<Vec<f64>>,
}

impl Table {
    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.names.iter().position(|n| n == name).map(|i| self.columns[i].as_slice())
    }
}

pub fn parse_csv(text: &str) -> Result<Table> {
    let mut table = Table::default();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            if let Some((k, v)) = comment.trim().split_once('=') {
                table.metadata.set(k.trim(), v.trim());
            }
            continue;
        }
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        let parsed: Option<Vec<f64>> = cells.iter().map(|c| c.parse::<f64>().ok()).collect();
        match parsed {
            Some(values) => {
                if table.columns.is_empty() {
                    table.columns = vec![Vec::new(); values.len()];
                    if table.names.is_empty() {
                        table.names = (0..values.len()).map(|i| format!("col{i}")).collect();
                    }
                }
                if values.len() != table.columns.len() {
                    return domain(format!(
                        "line {}: expected {} columns, found {}",
                        lineno + 1,
                        table.columns.len(),
                        values.len()
                    ));
                }
                for (col, v) in table.columns.iter_mut().zip(values) {
                    col.push(v);
                }
            }
            None if table.columns.is_empty() && table.names.is_empty() => {
                table.names = cells.iter().map(|c| c.to_string()).collect();
            }
            None => return domain(format!("line {}: non-numeric row '{line}'", lineno + 1)),
        }
    }
    if !table.columns.is_empty() && table.names.len() != table.columns.len() {
        return domain("column-name row does not match data width");
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip() {
        let meta = Metadata::new().with("kind", "test").with("d_ghz", 3.63);
        let x = [0.0, 0.1, 1e-9];
        let y = [1.0, -2.5, 3.0];
        let text = columns_to_csv(&meta, &["x", "y"], &[&x, &y]);
        assert!(text.starts_with("# kind=test\n# d_ghz=3.63\nx,y\n"));
        let table = parse_csv(&text).unwrap();
        assert_eq!(table.metadata.get("d_ghz"), Some("3.63"));
        assert_eq!(table.column("x").unwrap(), &x);
        assert_eq!(table.column("y").unwrap(), &y);
    }

    #[test]
    fn ragged_rows_rejected() {
        assert!(parse_csv("a,b\n1,2\n3\n").is_err());
        assert!(parse_csv("a,b\n1,2\nx,y\n").is_err());
    }
}
