//! Comparison of a produced CSV against a reference ("golden") file.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

#[derive(Debug, Clone, PartialEq)]
pub struct Tolerances {
    /// Default maximum relative deviation per numeric column.
    pub rel: f64,
    /// Differences at or below this are treated as zero (guards values that
    /// should vanish but carry round-off).
    pub abs: f64,
    pub per_column: BTreeMap<String, f64>,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { rel: 1e-9, abs: 1e-12, per_column: BTreeMap::new() }
    }
}

impl Tolerances {
    pub fn exact() -> Self {
        Tolerances { rel: 0.0, abs: 0.0, per_column: BTreeMap::new() }
    }

    fn for_column(&self, name: &str) -> f64 {
        self.per_column.get(name).copied().unwrap_or(self.rel)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ColumnReport {
    pub name: String,
    /// Largest relative deviation; ∞ for a mismatch in a text cell.
    pub max_rel_deviation: f64,
    /// 1-based data row (header excluded) of the largest deviation.
    pub worst_row: Option<usize>,
    pub tolerance: f64,
}

impl ColumnReport {
    pub fn passed(&self) -> bool {
        self.max_rel_deviation <= self.tolerance
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Failure {
    pub row: usize,
    pub column: String,
    pub data: String,
    pub golden: String,
    pub deviation: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum GoldenReport {
    SchemaMismatch { missing: Vec<String>, extra: Vec<String>, reordered: bool },
    RowCountMismatch { data: usize, golden: usize },
    Compared { columns: Vec<ColumnReport>, failures: Vec<Failure> },
}

impl GoldenReport {
    pub fn passed(&self) -> bool {
        matches!(self, GoldenReport::Compared { failures, .. } if failures.is_empty())
    }

    pub fn max_deviation(&self) -> Option<f64> {
        match self {
            GoldenReport::Compared { columns, .. } => {
                Some(columns.iter().map(|c| c.max_rel_deviation).fold(0.0, f64::max))
            }
            _ => None,
        }
    }
}

impl fmt::Display for GoldenReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GoldenReport::SchemaMismatch { missing, extra, reordered } => {
                write!(f, "FAIL schema mismatch:")?;
                if !missing.is_empty() {
                    write!(f, " missing columns [{}]", missing.join(", "))?;
                }
                if !extra.is_empty() {
                    write!(f, " unexpected columns [{}]", extra.join(", "))?;
                }
                if *reordered {
                    write!(f, " columns in a different order")?;
                }
                Ok(())
            }
            GoldenReport::RowCountMismatch { data, golden } => {
                write!(f, "FAIL row count: data has {data}, golden has {golden}")
            }
            GoldenReport::Compared { columns, failures } => {
                writeln!(f, "{} ({} columns)", if failures.is_empty() { "PASS" } else { "FAIL" }, columns.len())?;
                for c in columns {
                    let at = c.worst_row.map_or(String::new(), |r| format!(" at row {r}"));
                    writeln!(
                        f,
                        "  {:<28} max rel dev {:.3e}{at} (tol {:.1e})",
                        c.name, c.max_rel_deviation, c.tolerance
                    )?;
                }
                for x in failures {
                    writeln!(
                        f,
                        "  row {} column {}: data {} vs golden {} (rel dev {:.3e})",
                        x.row, x.column, x.data, x.golden, x.deviation
                    )?;
                }
                Ok(())
            }
        }
    }
}

/// 0 for identical cells (including equal non-finite values), the relative
/// difference for two numbers, ∞ otherwise.
fn deviation(a: &str, b: &str, abs: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    match (a.parse::<f64>(), b.parse::<f64>()) {
        (Ok(x), Ok(y)) => {
            if x == y || (x.is_nan() && y.is_nan()) {
                0.0
            } else if !x.is_finite() || !y.is_finite() {
                f64::INFINITY
            } else if (x - y).abs() <= abs {
                0.0
            } else {
                (x - y).abs() / x.abs().max(y.abs())
            }
        }
        _ => f64::INFINITY,
    }
}

fn read(bytes: &[u8]) -> Result<(Vec<String>, Vec<Vec<String>>), csv::Error> {
    let mut r = csv::Reader::from_reader(bytes);
    let header = r.headers()?.iter().map(String::from).collect();
    let rows = r.records().map(|rec| rec.map(|r| r.iter().map(String::from).collect())).collect::<Result<_, _>>()?;
    Ok((header, rows))
}

pub fn compare_golden_bytes(data: &[u8], golden: &[u8], tol: &Tolerances) -> Result<GoldenReport, csv::Error> {
    let (dh, drows) = read(data)?;
    let (gh, grows) = read(golden)?;
    if dh != gh {
        let missing = gh.iter().filter(|c| !dh.contains(c)).cloned().collect::<Vec<_>>();
        let extra = dh.iter().filter(|c| !gh.contains(c)).cloned().collect::<Vec<_>>();
        let reordered = missing.is_empty() && extra.is_empty();
        return Ok(GoldenReport::SchemaMismatch { missing, extra, reordered });
    }
    if drows.len() != grows.len() {
        return Ok(GoldenReport::RowCountMismatch { data: drows.len(), golden: grows.len() });
    }
    let mut columns: Vec<ColumnReport> = dh
        .iter()
        .map(|n| ColumnReport {
            name: n.clone(),
            max_rel_deviation: 0.0,
            worst_row: None,
            tolerance: tol.for_column(n),
        })
        .collect();
    let mut failures = Vec::new();
    for (i, (dr, gr)) in drows.iter().zip(&grows).enumerate() {
        for (j, col) in columns.iter_mut().enumerate() {
            let d = deviation(&dr[j], &gr[j], tol.abs);
            if d > col.max_rel_deviation {
                col.max_rel_deviation = d;
                col.worst_row = Some(i + 1);
            }
            if d > col.tolerance {
                failures.push(Failure {
                    row: i + 1,
                    column: col.name.clone(),
                    data: dr[j].clone(),
                    golden: gr[j].clone(),
                    deviation: d,
                });
            }
        }
    }
    Ok(GoldenReport::Compared { columns, failures })
}

pub fn compare_golden(data: &Path, golden: &Path, tol: &Tolerances) -> std::io::Result<GoldenReport> {
    let d = std::fs::read(data)?;
    let g = std::fs::read(golden)?;
    compare_golden_bytes(&d, &g, tol).map_err(std::io::Error::other)
}
