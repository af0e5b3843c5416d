//! CSV and JSON rendering of result tables.

use serde_json::{Map, Number, Value};

/// One table cell.
#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(u64),
    Text(String),
    /// Rendered as `na` in CSV and `null` in JSON.
    Missing,
}

impl Cell {
    pub fn text(s: impl Into<String>) -> Self {
        Cell::Text(s.into())
    }

    fn csv(&self) -> String {
        match self {
            Cell::Num(x) => format_decimal(*x),
            Cell::Int(k) => k.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Missing => "na".to_string(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Num(x) => format_decimal(*x)
                .parse::<f64>()
                .ok()
                .and_then(Number::from_f64)
                .map_or(Value::Null, Value::Number),
            Cell::Int(k) => Value::Number((*k).into()),
            Cell::Text(s) => Value::String(s.clone()),
            Cell::Missing => Value::Null,
        }
    }
}

/// Thirteen significant digits in scientific notation.
pub fn format_decimal(x: f64) -> String {
    if x.is_finite() {
        let x = if x == 0.0 { 0.0 } else { x };
        format!("{x:.12e}")
    } else {
        x.to_string().to_lowercase()
    }
}

/// A named table with a fixed header.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub name: String,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: impl Into<String>, columns: Vec<&'static str>) -> Self {
        Self {
            name: name.into(),
            columns,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(Cell::csv).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> Value {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|row| {
                let obj: Map<String, Value> = self
                    .columns
                    .iter()
                    .zip(row)
                    .map(|(c, v)| (c.to_string(), v.json()))
                    .collect();
                Value::Object(obj)
            })
            .collect();
        let mut obj = Map::new();
        obj.insert("report".into(), Value::String(self.name.clone()));
        obj.insert("rows".into(), Value::Array(rows));
        Value::Object(obj)
    }
}

/// Key–value table helper.
pub fn key_value_table(name: &str, pairs: Vec<(String, Cell)>) -> Table {
    let mut table = Table::new(name, vec!["key", "value"]);
    for (k, v) in pairs {
        table.push(vec![Cell::Text(k), v]);
    }
    table
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decimals_keep_thirteen_digits() {
        assert_eq!(format_decimal(std::f64::consts::PI), "3.141592653590e0");
        assert_eq!(format_decimal(-0.0), "0.000000000000e0");
        assert_eq!(format_decimal(1e-300), "1.000000000000e-300");
    }

    #[test]
    fn csv_and_json_carry_identical_values() {
        let mut t = Table::new("demo", vec!["x", "label", "n", "slope"]);
        t.push(vec![
            Cell::Num(1.0 / 3.0),
            Cell::text("a"),
            Cell::Int(7),
            Cell::Missing,
        ]);
        let csv = t.to_csv();
        assert_eq!(csv, "x,label,n,slope\n3.333333333333e-1,a,7,na\n");
        let json = t.to_json();
        let row = &json["rows"][0];
        let from_csv: f64 = csv
            .lines()
            .nth(1)
            .unwrap()
            .split(',')
            .next()
            .unwrap()
            .parse()
            .unwrap();
        assert_eq!(row["x"].as_f64().unwrap(), from_csv);
        assert_eq!(row["label"], "a");
        assert!(row["slope"].is_null());
    }
}
