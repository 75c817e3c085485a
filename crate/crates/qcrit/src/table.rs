//! In-memory tables and their byte-exact CSV and gnuplot renderings.

use std::fmt::Write as _;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Float(f64),
    Int(i64),
    Bool(bool),
    Text(String),
    /// Value not defined for this row (written as an empty field).
    Empty,
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}
impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}
impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}
impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}
impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}
impl<T: Into<Cell>> From<Option<T>> for Cell {
    fn from(v: Option<T>) -> Self {
        v.map_or(Cell::Empty, Into::into)
    }
}

/// 17 significant digits: enough to round-trip any f64.
pub fn format_float(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{v:.16e}")
    }
}

impl Cell {
    pub fn render(&self) -> String {
        match self {
            Cell::Float(v) => format_float(*v),
            Cell::Int(v) => v.to_string(),
            Cell::Bool(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Table { columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width does not match the header");
        self.rows.push(row);
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn to_csv(&self) -> Vec<u8> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        w.write_record(&self.columns).expect("writing to memory");
        for r in &self.rows {
            w.write_record(r.iter().map(Cell::render)).expect("writing to memory");
        }
        w.into_inner().expect("flushing to memory")
    }
}

/// What the companion gnuplot script plots by default.
#[derive(Debug, Clone, PartialEq)]
pub struct PlotHint {
    pub x: String,
    pub y: Vec<String>,
    pub logscale: bool,
}

impl PlotHint {
    pub fn new(x: &str, y: &[&str]) -> Self {
        PlotHint { x: x.into(), y: y.iter().map(|s| s.to_string()).collect(), logscale: false }
    }

    pub fn log(mut self) -> Self {
        self.logscale = true;
        self
    }
}

/// Column description plus a default plot command for `data_file`.
pub fn gnuplot_script(table: &Table, data_file: &str, hint: &PlotHint) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# columns of {data_file}");
    for (i, c) in table.columns.iter().enumerate() {
        let _ = writeln!(s, "#   {:>2}  {c}", i + 1);
    }
    s.push_str("set datafile separator comma\nset key autotitle columnhead\n");
    if hint.logscale {
        s.push_str("set logscale xy\n");
    }
    let col = |name: &str| table.column_index(name).map(|i| i + 1);
    if let Some(x) = col(&hint.x) {
        let _ = writeln!(s, "set xlabel '{}'", hint.x);
        let plots: Vec<String> =
            hint.y.iter().filter_map(|y| col(y).map(|j| format!("'{data_file}' using {x}:{j} with points"))).collect();
        if !plots.is_empty() {
            let _ = writeln!(s, "plot {}", plots.join(", \\\n     "));
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip() {
        for v in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, f64::MIN_POSITIVE, 0.0] {
            assert_eq!(format_float(v).parse::<f64>().unwrap().to_bits(), v.to_bits());
        }
        assert_eq!(format_float(f64::INFINITY).parse::<f64>().unwrap(), f64::INFINITY);
    }

    #[test]
    fn csv_layout() {
        let mut t = Table::new(&["a", "b", "c"]);
        t.push(vec![1.5.into(), Cell::Empty, "x,y".into()]);
        assert_eq!(String::from_utf8(t.to_csv()).unwrap(), "a,b,c\n1.5000000000000000e0,,\"x,y\"\n");
    }

    #[test]
    fn script_names_columns() {
        let t = Table::new(&["g", "energy"]);
        let s = gnuplot_script(&t, "spectrum.csv", &PlotHint::new("g", &["energy"]));
        assert!(s.contains("using 1:2"));
        assert!(s.contains("#    2  energy"));
    }
}
