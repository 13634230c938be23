use std::io::Write;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Table,
    Csv,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Text(String),
    Int(i64),
    /// Printed with six decimals.
    Prob(f64),
    /// Printed with three decimals.
    Real(f64),
    Empty,
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Text(s) => s.clone(),
            Cell::Int(v) => v.to_string(),
            Cell::Prob(v) => format!("{v:.6}"),
            Cell::Real(v) => format!("{v:.3}"),
            Cell::Empty => String::new(),
        }
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_owned())
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Text(s)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<u32> for Cell {
    fn from(v: u32) -> Self {
        Cell::Int(v.into())
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Empty, Cell::Prob)
    }
}

/// A titled table with free-text notes; rendered aligned or as CSV.
#[derive(Debug, Clone, Default)]
pub struct Report {
    pub notes: Vec<String>,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Report {
    pub fn new(columns: &[&'static str]) -> Self {
        Report {
            notes: Vec::new(),
            columns: columns.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn note(&mut self, s: impl Into<String>) {
        self.notes.push(s.into());
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    /// Notes go to stderr in CSV mode so the output stays machine-readable.
    pub fn emit(&self, format: Format, out: &mut dyn Write) -> Result<(), CliError> {
        match format {
            Format::Table => {
                for n in &self.notes {
                    writeln!(out, "{n}")?;
                }
                if !self.notes.is_empty() && !self.rows.is_empty() {
                    writeln!(out)?;
                }
                let rendered: Vec<Vec<String>> = self.rows.iter().map(|r| r.iter().map(Cell::render).collect()).collect();
                let mut widths: Vec<usize> = self.columns.iter().map(|c| c.len()).collect();
                for r in &rendered {
                    for (w, c) in widths.iter_mut().zip(r) {
                        *w = (*w).max(c.len());
                    }
                }
                let line = |cells: Vec<&str>| {
                    cells
                        .iter()
                        .zip(&widths)
                        .map(|(c, w)| format!("{c:>w$}"))
                        .collect::<Vec<_>>()
                        .join("  ")
                };
                if !self.rows.is_empty() {
                    writeln!(out, "{}", line(self.columns.clone()))?;
                    for r in &rendered {
                        writeln!(out, "{}", line(r.iter().map(String::as_str).collect()))?;
                    }
                }
            }
            Format::Csv => {
                for n in &self.notes {
                    eprintln!("{n}");
                }
                let mut w = csv::Writer::from_writer(out);
                w.write_record(&self.columns)?;
                for r in &self.rows {
                    w.write_record(r.iter().map(Cell::render))?;
                }
                w.flush()?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_has_header_and_six_decimals() {
        let mut r = Report::new(&["scenario", "alpha"]);
        r.note("ignored in csv");
        r.push(vec![Cell::from(1u32), Cell::Prob(0.1)]);
        r.push(vec![Cell::from(2u32), Cell::Empty]);
        let mut buf = Vec::new();
        r.emit(Format::Csv, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "scenario,alpha\n1,0.100000\n2,\n");
    }

    #[test]
    fn table_is_aligned() {
        let mut r = Report::new(&["n", "alpha"]);
        r.push(vec![Cell::from(47usize), Cell::Prob(0.0899)]);
        let mut buf = Vec::new();
        r.emit(Format::Table, &mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert_eq!(s, " n     alpha\n47  0.089900\n");
    }
}
