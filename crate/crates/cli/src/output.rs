use crate::config::RunConfig;
use crate::error::CliResult;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

/// A CSV table: one `#` metadata line, a header row, then rows.
pub struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn render(&self, meta: &str) -> String {
        let mut s = String::new();
        writeln!(s, "{meta}").unwrap();
        writeln!(s, "{}", self.header.join(",")).unwrap();
        for r in &self.rows {
            writeln!(s, "{}", r.join(",")).unwrap();
        }
        s
    }
}

/// Shortest round-trip representation; identical bits give identical text.
pub fn num(v: f64) -> String {
    format!("{v:e}")
}

pub struct OutDir {
    dir: PathBuf,
    meta: String,
    written: Vec<PathBuf>,
}

impl OutDir {
    pub fn create(dir: &Path, cfg: &RunConfig) -> CliResult<Self> {
        std::fs::create_dir_all(dir)?;
        Ok(Self {
            dir: dir.to_path_buf(),
            meta: cfg.metadata_line(),
            written: Vec::new(),
        })
    }

    pub fn csv(&mut self, name: &str, table: &Table) -> CliResult<()> {
        self.write(name, &table.render(&self.meta))
    }

    pub fn write(&mut self, name: &str, contents: &str) -> CliResult<()> {
        let p = self.dir.join(name);
        std::fs::write(&p, contents)?;
        self.written.push(p);
        Ok(())
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }
}
