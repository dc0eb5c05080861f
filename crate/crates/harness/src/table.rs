//! Result rows and their serialization.
//!
//! Every experiment writes into the same column vocabulary, listed once in
//! [`COLUMNS`]. A table's header is the subset of columns its rows use, in
//! vocabulary order, and cells a row leaves unset are written empty (CSV) or
//! `null` (JSON lines). Floats are printed with 12 significant digits, so
//! identical inputs give identical bytes.

use std::io::{self, Write};

use serde::Deserialize;

pub const COLUMNS: &[&str] = &[
    "experiment",
    "trial",
    "seed",
    "variant",
    "clients",
    "supply",
    "max_demand",
    "alpha",
    "epsilon",
    "epsilon_round",
    "rho",
    "beta",
    "horizon",
    "rounds",
    "client",
    "round",
    "t",
    "bit",
    "demand",
    "request",
    "allocated",
    "executed",
    "shares",
    "direct",
    "tail_sum",
    "abs_diff",
    "greedy_welfare",
    "oracle_welfare",
    "matched",
    "misreports",
    "comparisons",
    "violations",
    "worst_gap",
    "round_bound",
    "level_bound",
    "welfare",
    "opt_welfare",
    "welfare_gap",
    "walrasian",
    "final_price",
    "total_bids",
    "true_count",
    "noisy_count",
    "price",
    "max_error",
    "error_bound",
    "within_bound",
    "total_allocated",
    "feasible",
    "cleared",
    "welfare_per_share",
    "threshold_per_share",
    "welfare_per_client",
    "threshold_per_client",
    "unsatisfied",
    "min_held_price",
    "max_client_bids",
    "bid_cap",
    "stopped_early",
    "utility",
    "utility_truthful",
    "utility_deviant",
    "advantage",
    "first_round_win_truthful",
    "first_round_win_deviant",
    "lender_utility",
    "opt_sum",
    "lender_threshold",
    "lender_margin",
];

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Bool(bool),
    Text(String),
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<u32> for Cell {
    fn from(v: u32) -> Self {
        Cell::Int(i64::from(v))
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<i64> for Cell {
    fn from(v: i64) -> Self {
        Cell::Int(v)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_owned())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

/// One result row; cells are kept in vocabulary order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Row {
    cells: Vec<(usize, Cell)>,
}

impl Row {
    pub fn new() -> Self {
        Row::default()
    }

    /// Sets `column`, which must be in [`COLUMNS`].
    pub fn set(mut self, column: &str, value: impl Into<Cell>) -> Self {
        let idx = column_index(column);
        let value = value.into();
        match self.cells.binary_search_by_key(&idx, |(k, _)| *k) {
            Ok(pos) => self.cells[pos].1 = value,
            Err(pos) => self.cells.insert(pos, (idx, value)),
        }
        self
    }

    pub fn get(&self, column: &str) -> Option<&Cell> {
        let idx = column_index(column);
        self.cells
            .binary_search_by_key(&idx, |(k, _)| *k)
            .ok()
            .map(|pos| &self.cells[pos].1)
    }
}

fn column_index(column: &str) -> usize {
    COLUMNS
        .iter()
        .position(|c| *c == column)
        .unwrap_or_else(|| panic!("unknown result column {column:?}"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Jsonl,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Jsonl => "jsonl",
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    columns: Vec<usize>,
    pub rows: Vec<Row>,
}

impl Table {
    pub fn new(rows: Vec<Row>) -> Self {
        Table {
            columns: Vec::new(),
            rows,
        }
    }

    /// A table whose header always includes `columns`, even with no rows.
    pub fn with_columns(columns: &[&str], rows: Vec<Row>) -> Self {
        Table {
            columns: columns.iter().map(|c| column_index(c)).collect(),
            rows,
        }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Columns used by at least one row, in vocabulary order.
    pub fn header(&self) -> Vec<&'static str> {
        let mut used = vec![false; COLUMNS.len()];
        for &idx in &self.columns {
            used[idx] = true;
        }
        for row in &self.rows {
            for (idx, _) in &row.cells {
                used[*idx] = true;
            }
        }
        COLUMNS
            .iter()
            .zip(used)
            .filter(|(_, u)| *u)
            .map(|(c, _)| *c)
            .collect()
    }

    pub fn write<W: Write>(&self, out: &mut W, format: Format) -> io::Result<()> {
        match format {
            Format::Csv => self.write_csv(out),
            Format::Jsonl => self.write_jsonl(out),
        }
    }

    pub fn to_bytes(&self, format: Format) -> Vec<u8> {
        let mut buf = Vec::new();
        self.write(&mut buf, format).expect("writing to memory");
        buf
    }

    fn write_csv<W: Write>(&self, out: &mut W) -> io::Result<()> {
        let header = self.header();
        writeln!(out, "{}", header.join(","))?;
        for row in &self.rows {
            let fields: Vec<String> = header
                .iter()
                .map(|c| row.get(c).map(csv_cell).unwrap_or_default())
                .collect();
            writeln!(out, "{}", fields.join(","))?;
        }
        Ok(())
    }

    fn write_jsonl<W: Write>(&self, out: &mut W) -> io::Result<()> {
        let header = self.header();
        for row in &self.rows {
            let fields: Vec<String> = header
                .iter()
                .map(|c| {
                    let value = row.get(c).map_or_else(|| "null".to_owned(), json_cell);
                    format!("{}:{value}", json_string(c))
                })
                .collect();
            writeln!(out, "{{{}}}", fields.join(","))?;
        }
        Ok(())
    }
}

fn csv_cell(cell: &Cell) -> String {
    match cell {
        Cell::Int(v) => v.to_string(),
        Cell::Float(v) => format_float(*v),
        Cell::Bool(v) => v.to_string(),
        Cell::Text(s) if s.contains([',', '"', '\n']) => format!("\"{}\"", s.replace('"', "\"\"")),
        Cell::Text(s) => s.clone(),
    }
}

fn json_cell(cell: &Cell) -> String {
    match cell {
        Cell::Int(v) => v.to_string(),
        Cell::Float(v) if v.is_finite() => format_float(*v),
        Cell::Float(_) => "null".to_owned(),
        Cell::Bool(v) => v.to_string(),
        Cell::Text(s) => json_string(s),
    }
}

fn json_string(s: &str) -> String {
    serde_json::to_string(s).expect("strings always serialize")
}

/// `%.12g`: 12 significant digits, trailing zeros dropped, exponent form
/// outside `1e-4 <= |x| < 1e12`.
pub fn format_float(x: f64) -> String {
    if x.is_nan() {
        return "nan".to_owned();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf" } else { "-inf" }.to_owned();
    }
    if x == 0.0 {
        return "0".to_owned();
    }
    // Round once in exponent form; the exponent after rounding decides the layout.
    let sci = format!("{x:.11e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..12).contains(&exp) {
        return format!(
            "{}e{}{:02}",
            trim_zeros(mantissa),
            if exp < 0 { '-' } else { '+' },
            exp.abs()
        );
    }
    let decimals = (11 - exp) as usize;
    trim_zeros(&format!("{x:.decimals$}")).to_owned()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}
