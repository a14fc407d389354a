//! Deterministic result tables and files.

use std::path::Path;

use anyhow::{Context, Result};
use serde_json::{Map, Value};

/// One summary value.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Bool(bool),
    Text(String),
    Missing,
}

impl Cell {
    /// Shortest round-trip text for floats, empty for missing values.
    pub fn csv(&self) -> String {
        match self {
            Cell::Num(x) => fmt_f64(*x),
            Cell::Int(i) => i.to_string(),
            Cell::Bool(b) => b.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Missing => String::new(),
        }
    }

    pub fn json(&self) -> Value {
        match self {
            Cell::Num(x) => serde_json::Number::from_f64(*x).map_or(Value::Null, Value::Number),
            Cell::Int(i) => Value::from(*i),
            Cell::Bool(b) => Value::Bool(*b),
            Cell::Text(s) => Value::String(s.clone()),
            Cell::Missing => Value::Null,
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Cell::Num(x) => Some(*x),
            Cell::Int(i) => Some(*i as f64),
            _ => None,
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Cell::Bool(b) => Some(*b),
            _ => None,
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Int(x as i64)
    }
}

impl From<bool> for Cell {
    fn from(b: bool) -> Self {
        Cell::Bool(b)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Text(s)
    }
}

impl<T: Into<Cell>> From<Option<T>> for Cell {
    fn from(o: Option<T>) -> Self {
        o.map_or(Cell::Missing, Into::into)
    }
}

/// `{:?}` is Rust's shortest representation that parses back to the same bits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:?}")
}

/// Fixed-key record; unset keys stay [`Cell::Missing`].
#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    entries: Vec<(&'static str, Cell)>,
}

impl Summary {
    pub fn new(keys: &[&'static str]) -> Self {
        Self {
            entries: keys.iter().map(|k| (*k, Cell::Missing)).collect(),
        }
    }

    pub fn set(&mut self, key: &str, value: impl Into<Cell>) {
        let slot = self
            .entries
            .iter_mut()
            .find(|(k, _)| *k == key)
            .unwrap_or_else(|| panic!("summary has no key {key}"));
        slot.1 = value.into();
    }

    pub fn get(&self, key: &str) -> Option<&Cell> {
        self.entries.iter().find(|(k, _)| *k == key).map(|(_, v)| v)
    }

    pub fn f64(&self, key: &str) -> Option<f64> {
        self.get(key).and_then(Cell::as_f64)
    }

    pub fn bool(&self, key: &str) -> Option<bool> {
        self.get(key).and_then(Cell::as_bool)
    }

    pub fn keys(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.entries.iter().map(|(k, _)| *k)
    }

    pub fn cells(&self) -> impl Iterator<Item = &Cell> {
        self.entries.iter().map(|(_, v)| v)
    }

    pub fn to_json(&self) -> Value {
        Value::Object(self.entries.iter().map(|(k, v)| (k.to_string(), v.json())).collect())
    }
}

/// RFC-4180 table with a trailing `config_hash` column.
#[derive(Debug, Clone)]
pub struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Self {
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn push_nums(&mut self, row: &[f64]) {
        self.push(row.iter().map(|x| fmt_f64(*x)).collect());
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn to_csv(&self, hash: &str) -> Result<Vec<u8>> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::CRLF)
            .from_writer(Vec::new());
        w.write_record(self.header.iter().map(String::as_str).chain(["config_hash"]))?;
        for row in &self.rows {
            w.write_record(row.iter().map(String::as_str).chain([hash]))?;
        }
        w.into_inner().map_err(|e| anyhow::anyhow!("csv buffer: {e}"))
    }
}

/// Pretty JSON with sorted keys, `config_hash` added at the top level.
pub fn json_bytes(mut doc: Value, hash: &str) -> Result<Vec<u8>> {
    if let Value::Object(map) = &mut doc {
        map.insert("config_hash".into(), Value::String(hash.into()));
    }
    let mut out = serde_json::to_vec_pretty(&doc)?;
    out.push(b'\n');
    Ok(out)
}

/// Serializes any value into a sorted-key JSON object.
pub fn to_sorted(value: &impl serde::Serialize) -> Result<Value> {
    // round-trip through the default (sorted) map
    let v = serde_json::to_value(value)?;
    Ok(sort(v))
}

fn sort(v: Value) -> Value {
    match v {
        Value::Object(m) => Value::Object(m.into_iter().map(|(k, v)| (k, sort(v))).collect::<Map<_, _>>()),
        Value::Array(a) => Value::Array(a.into_iter().map(sort).collect()),
        other => other,
    }
}

/// Everything a command produced.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub command: &'static str,
    pub config_hash: String,
    pub summary: Summary,
    /// `(file name, bytes)` in write order.
    pub files: Vec<(String, Vec<u8>)>,
    /// Human-readable lines for stdout.
    pub lines: Vec<String>,
}

impl Outcome {
    pub fn new(command: &'static str, config_hash: &str, summary: Summary) -> Self {
        Self {
            command,
            config_hash: config_hash.to_string(),
            summary,
            files: Vec::new(),
            lines: Vec::new(),
        }
    }

    pub fn add_csv(&mut self, name: &str, table: &Table) -> Result<()> {
        let bytes = table.to_csv(&self.config_hash)?;
        self.files.push((name.to_string(), bytes));
        Ok(())
    }

    pub fn add_json(&mut self, name: &str, doc: Value) -> Result<()> {
        let bytes = json_bytes(doc, &self.config_hash)?;
        self.files.push((name.to_string(), bytes));
        Ok(())
    }

    pub fn file(&self, name: &str) -> Option<&[u8]> {
        self.files.iter().find(|(n, _)| n == name).map(|(_, b)| b.as_slice())
    }

    /// Writes every file plus a `meta.json` sidecar holding the non-deterministic metadata.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        for (name, bytes) in &self.files {
            let path = dir.join(name);
            std::fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
        }
        let stamp = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        let meta = serde_json::json!({
            "command": self.command,
            "config_hash": self.config_hash,
            "files": self.files.iter().map(|(n, _)| n.as_str()).collect::<Vec<_>>(),
            "unix_time": stamp,
            "version": env!("CARGO_PKG_VERSION"),
        });
        std::fs::write(dir.join("meta.json"), serde_json::to_vec_pretty(&meta)?)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip() {
        for x in [0.1, 1.0 / 3.0, 2.0, 1e-300, -7.25e21, f64::MIN_POSITIVE] {
            assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn csv_quotes_and_hash() {
        let mut t = Table::new(["a", "b"]);
        t.push(vec!["x,y".into(), "1.5".into()]);
        let s = String::from_utf8(t.to_csv("h").unwrap()).unwrap();
        assert_eq!(s, "a,b,config_hash\r\n\"x,y\",1.5,h\r\n");
    }

    #[test]
    fn summary_keeps_key_order() {
        let mut s = Summary::new(&["b", "a"]);
        s.set("a", 1.0);
        assert_eq!(s.keys().collect::<Vec<_>>(), vec!["b", "a"]);
        assert_eq!(s.get("b"), Some(&Cell::Missing));
    }
}
