//! CSV tables and run manifests.

use crate::error::Result;
use serde::Serialize;
use std::io::Write;
use std::path::Path;

/// Writes `rows` with a header row named after the fields.
pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Ordered `key = value` record of the parameters of a run.
#[derive(Clone, Debug, Default)]
pub struct Manifest {
    entries: Vec<(String, String)>,
}

impl Manifest {
    pub fn new(command: &str) -> Self {
        let mut m = Self::default();
        m.set("command", command);
        m.set("version", env!("CARGO_PKG_VERSION"));
        m
    }

    pub fn set(&mut self, key: &str, value: impl std::fmt::Display) -> &mut Self {
        let value = value.to_string();
        match self.entries.iter_mut().find(|(k, _)| k == key) {
            Some(e) => e.1 = value,
            None => self.entries.push((key.to_string(), value)),
        }
        self
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        for (k, v) in &self.entries {
            writeln!(f, "{k} = {v}")?;
        }
        f.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::{ErrorNorms, ErrorRow};

    #[test]
    fn error_rows_round_trip_header() {
        let dir = std::env::temp_dir().join(format!("cutwave-csv-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("rows.csv");
        let rows = [ErrorRow::new(0.1, ErrorNorms { l2: 1.0, h1: 2.0, boundary: 3.0 })];
        write_csv(&path, &rows).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().next().unwrap(), "h,e_l2,rate_l2,e_h1,rate_h1,e_boundary,rate_boundary");
        assert_eq!(text.lines().nth(1).unwrap(), "0.1,1.0,,2.0,,3.0,");
        std::fs::remove_dir_all(dir).ok();
    }

    #[test]
    fn manifest_overwrites_keys() {
        let mut m = Manifest::new("inner");
        m.set("p", 2).set("p", 3);
        assert_eq!(m.get("p"), Some("3"));
        assert_eq!(m.get("command"), Some("inner"));
    }
}
