//! CSV and JSON writers. Numbers use the shortest round-trip exponent form,
//! so identical runs produce identical bytes.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::Serialize;

pub use beamctl_core::hum_control::SCHEMA;

pub fn num(v: f64) -> String {
    format!("{v:e}")
}

pub fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

/// A CSV table with a fixed header.
pub struct Csv {
    columns: usize,
    writer: csv::Writer<Vec<u8>>,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        let mut writer = csv::Writer::from_writer(Vec::new());
        writer.write_record(header).expect("in-memory write");
        Self { columns: header.len(), writer }
    }

    pub fn row(&mut self, cells: &[String]) {
        assert_eq!(cells.len(), self.columns, "row width matches header");
        self.writer.write_record(cells).expect("in-memory write");
    }

    pub fn into_string(self) -> String {
        let bytes = self.writer.into_inner().expect("in-memory flush");
        String::from_utf8(bytes).expect("csv cells are utf-8")
    }
}

/// Collects artifacts under one directory.
pub struct Artifacts {
    dir: PathBuf,
    written: Vec<PathBuf>,
}

impl Artifacts {
    pub fn new(dir: &Path) -> io::Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Self { dir: dir.to_path_buf(), written: Vec::new() })
    }

    pub fn write(&mut self, name: &str, contents: &str) -> io::Result<()> {
        let path = self.dir.join(name);
        fs::write(&path, contents)?;
        self.written.push(path);
        Ok(())
    }

    pub fn csv(&mut self, name: &str, table: Csv) -> io::Result<()> {
        self.write(name, &table.into_string())
    }

    /// Writes `value` wrapped as `{"schema": "beamctl/1", "kind": kind, ...}`.
    pub fn json<T: Serialize>(&mut self, name: &str, kind: &str, value: &T) -> io::Result<()> {
        self.write(name, &json_document(kind, value))
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }
}

/// `value`'s fields (or `{"body": value}` for non-objects) with `schema` and
/// `kind` added at the top level.
pub fn json_document<T: Serialize>(kind: &str, value: &T) -> String {
    let body = serde_json::to_value(value).expect("artifact serializes");
    let mut doc = serde_json::Map::new();
    doc.insert("schema".into(), SCHEMA.into());
    doc.insert("kind".into(), kind.into());
    match body {
        serde_json::Value::Object(fields) => doc.extend(fields),
        other => {
            doc.insert("body".into(), other);
        }
    }
    let mut s = serde_json::to_string_pretty(&serde_json::Value::Object(doc)).expect("artifact serializes");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_shape() {
        let mut c = Csv::new(&["t", "v"]);
        c.row(&[num(0.0), num(1e-10)]);
        c.row(&[num(0.5), opt(None)]);
        assert_eq!(c.into_string(), "t,v\n0e0,1e-10\n5e-1,\n");
    }

    #[test]
    fn json_envelope() {
        let s = json_document("probe", &vec![1, 2]);
        let v: serde_json::Value = serde_json::from_str(&s).unwrap();
        assert_eq!(v["schema"], "beamctl/1");
        assert_eq!(v["kind"], "probe");
        assert_eq!(v["body"][1], 2);
        let s = json_document("probe", &serde_json::json!({"x": 1}));
        let v: serde_json::Value = serde_json::from_str(&s).unwrap();
        assert_eq!(v["x"], 1);
        assert_eq!(v["schema"], "beamctl/1");
    }
}
