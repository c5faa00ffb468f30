//! Table assembly and CSV/JSON emission with provenance headers.
//!
//! Complex values appear as re/im column pairs in CSV and [re, im] pairs in
//! JSON. Every output starts with a timestamp line plus the FNV-1a hash of
//! the effective configuration; byte-identical runs differ only in the
//! timestamp.

use std::fs;
use std::io::Write;
use std::time::{SystemTime, UNIX_EPOCH};

use serde_json::{json, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl std::str::FromStr for Format {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(format!("unknown format '{other}' (csv|json)")),
        }
    }
}

/// FNV-1a 64-bit.
pub struct Hasher(u64);

impl Hasher {
    pub fn new() -> Self {
        Hasher(0xcbf29ce484222325)
    }

    pub fn update(&mut self, bytes: &[u8]) -> &mut Self {
        for &b in bytes {
            self.0 ^= b as u64;
            self.0 = self.0.wrapping_mul(0x100000001b3);
        }
        self
    }

    pub fn hex(&self) -> String {
        format!("{:016x}", self.0)
    }
}

/// A rectangular table: column names plus rows of cells.
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
}

impl Table {
    pub fn new<S: Into<String>>(columns: Vec<S>) -> Self {
        Table {
            columns: columns.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Value>) {
        assert_eq!(row.len(), self.columns.len(), "row/column arity");
        self.rows.push(row);
    }
}

pub fn num(v: f64) -> Value {
    json!(v)
}

pub fn complex_pair(z: num_complex::Complex64) -> [Value; 2] {
    [json!(z.re), json!(z.im)]
}

fn timestamp() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

pub fn render(table: &Table, command: &str, config_hash: &str, format: Format) -> String {
    match format {
        Format::Csv => {
            let mut out = String::new();
            out.push_str(&format!("# generated_at={}\n", timestamp()));
            out.push_str(&format!("# command={command} config_hash={config_hash}\n"));
            out.push_str(&table.columns.join(","));
            out.push('\n');
            for row in &table.rows {
                let cells: Vec<String> = row
                    .iter()
                    .map(|v| match v {
                        Value::String(s) => s.clone(),
                        other => other.to_string(),
                    })
                    .collect();
                out.push_str(&cells.join(","));
                out.push('\n');
            }
            out
        }
        Format::Json => {
            let rows: Vec<Value> = table
                .rows
                .iter()
                .map(|row| {
                    let mut obj = serde_json::Map::new();
                    for (c, v) in table.columns.iter().zip(row) {
                        obj.insert(c.clone(), v.clone());
                    }
                    Value::Object(obj)
                })
                .collect();
            let doc = json!({
                "generated_at": timestamp(),
                "command": command,
                "config_hash": config_hash,
                "data": rows,
            });
            serde_json::to_string_pretty(&doc).expect("json rendering cannot fail") + "\n"
        }
    }
}

pub fn emit(content: &str, out: Option<&str>) -> std::io::Result<()> {
    match out {
        Some(path) => fs::write(path, content),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(content.as_bytes())
        }
    }
}
