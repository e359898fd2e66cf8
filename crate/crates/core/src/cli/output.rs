//! Column-oriented CSV: a header row, then one row per `t`.

use std::io;
use std::path::Path;

/// A table whose first column is `t`. Missing cells are written empty.
#[derive(Debug, Clone, PartialEq)]
pub struct ColumnTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Option<f64>>>,
}

/// 17 significant digits, enough to round-trip any `f64`.
pub fn format_value(x: f64) -> String {
    format!("{x:.16e}")
}

impl ColumnTable {
    /// Aligns `(t, y)` series onto the sorted union of their `t` values.
    /// Points closer than `1e-9` are treated as the same `t`.
    pub fn from_series(names: Vec<String>, series: &[Vec<(f64, f64)>]) -> Self {
        let mut ts: Vec<f64> = series.iter().flatten().map(|p| p.0).collect();
        ts.sort_by(f64::total_cmp);
        ts.dedup_by(|a, b| (*a - *b).abs() <= 1e-9);
        let rows = ts
            .iter()
            .map(|&t| {
                let mut row = vec![Some(t)];
                row.extend(series.iter().map(|s| s.iter().find(|p| (p.0 - t).abs() <= 1e-9).map(|p| p.1)));
                row
            })
            .collect();
        let mut header = vec!["t".to_string()];
        header.extend(names);
        Self { header, rows }
    }

    pub fn write(&self, path: &Path) -> io::Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row.iter().map(|c| c.map(format_value).unwrap_or_default()))?;
        }
        w.flush()
    }

    pub fn read(path: &Path) -> io::Result<Self> {
        let mut r = csv::Reader::from_path(path)?;
        let header = r.headers()?.iter().map(str::to_string).collect();
        let mut rows = Vec::new();
        for rec in r.records() {
            let rec = rec?;
            let row = rec
                .iter()
                .map(|c| {
                    if c.is_empty() {
                        Ok(None)
                    } else {
                        c.parse::<f64>().map(Some).map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))
                    }
                })
                .collect::<io::Result<Vec<_>>>()?;
            rows.push(row);
        }
        Ok(Self { header, rows })
    }
}
