//! Columnar CSV artifacts with a commented metadata header.
//!
//! Values are written with 17 significant digits so a reload reproduces every
//! f64 bit for bit.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::{bail, ensure, Context, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub meta: Vec<(String, String)>,
    pub columns: Vec<String>,
    pub units: Vec<String>,
    /// row-major
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    /// `columns` are (name, unit) pairs.
    pub fn new(columns: &[(&str, &str)]) -> Self {
        Table {
            meta: Vec::new(),
            columns: columns.iter().map(|c| c.0.to_string()).collect(),
            units: columns.iter().map(|c| c.1.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push_meta(&mut self, key: &str, value: impl ToString) {
        self.meta.push((key.to_string(), value.to_string()));
    }

    pub fn meta(&self, key: &str) -> Option<&str> {
        self.meta.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn push_row(&mut self, row: Vec<f64>) {
        assert_eq!(row.len(), self.columns.len(), "row width must match the header");
        self.rows.push(row);
    }

    pub fn has_column(&self, name: &str) -> bool {
        self.columns.iter().any(|c| c == name)
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[j]).collect())
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        for (k, v) in &self.meta {
            let _ = writeln!(s, "# {k}: {v}");
        }
        let _ = writeln!(s, "# units: {}", self.units.join(","));
        let _ = writeln!(s, "{}", self.columns.join(","));
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
            let _ = writeln!(s, "{}", cells.join(","));
        }
        s
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut meta = Vec::new();
        let mut units = None;
        let mut lines = text.lines().enumerate();
        let columns: Vec<String> = loop {
            let Some((_, line)) = lines.next() else {
                bail!("table has no header row");
            };
            if let Some(rest) = line.strip_prefix("# ") {
                let (k, v) = rest
                    .split_once(": ")
                    .with_context(|| format!("malformed header line {line:?}"))?;
                if k == "units" {
                    units = Some(v.split(',').map(str::to_string).collect::<Vec<_>>());
                } else {
                    meta.push((k.to_string(), v.to_string()));
                }
            } else {
                break line.split(',').map(str::to_string).collect();
            }
        };
        let units = units.unwrap_or_else(|| vec![String::new(); columns.len()]);
        ensure!(
            units.len() == columns.len(),
            "units line has {} entries for {} columns",
            units.len(),
            columns.len()
        );
        let mut rows = Vec::new();
        for (i, line) in lines {
            if line.is_empty() {
                continue;
            }
            let row = line
                .split(',')
                .map(|c| {
                    c.parse::<f64>()
                        .with_context(|| format!("line {}: bad number {c:?}", i + 1))
                })
                .collect::<Result<Vec<_>>>()?;
            ensure!(
                row.len() == columns.len(),
                "line {}: {} cells for {} columns",
                i + 1,
                row.len(),
                columns.len()
            );
            rows.push(row);
        }
        Ok(Table {
            meta,
            columns,
            units,
            rows,
        })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()).with_context(|| format!("writing {}", path.display()))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Table::parse(&text).with_context(|| format!("parsing {}", path.display()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_bit_exact() {
        let mut t = Table::new(&[("t", "s"), ("x", "cm")]);
        t.push_meta("model", "fo");
        let awkward = [
            0.1 + 0.2,
            1.0 / 3.0,
            6.266e-24,
            -f64::MIN_POSITIVE,
            f64::MAX,
            f64::NAN,
            f64::INFINITY,
        ];
        for (i, &v) in awkward.iter().enumerate() {
            t.push_row(vec![i as f64, v]);
        }
        let back = Table::parse(&t.to_csv()).unwrap();
        assert_eq!(back.meta, t.meta);
        assert_eq!(back.units, t.units);
        for (a, b) in t.rows.iter().zip(&back.rows) {
            for (x, y) in a.iter().zip(b) {
                assert_eq!(x.to_bits(), y.to_bits());
            }
        }
    }

    #[test]
    fn rejects_ragged_rows() {
        assert!(Table::parse("t,x\n1,2\n3\n").is_err());
        assert!(Table::parse("# units: s\nt,x\n").is_err());
        assert!(Table::parse("# only a comment\n").is_err());
    }

    #[test]
    fn column_lookup() {
        let mut t = Table::new(&[("t", "s"), ("x", "cm")]);
        t.push_row(vec![0.0, 1.0]);
        t.push_row(vec![1.0, 4.0]);
        assert_eq!(t.column("x"), Some(vec![1.0, 4.0]));
        assert!(t.column("v").is_none());
    }
}
