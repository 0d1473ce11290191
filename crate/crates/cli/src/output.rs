use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};

/// A CSV table with a fixed header. The first line of every emitted file is
/// a `# seed=N` comment, optionally followed by more `#` lines.
pub struct Table {
    header: Vec<&'static str>,
    rows: Vec<Vec<String>>,
    comments: Vec<String>,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Self { header: header.to_vec(), rows: Vec::new(), comments: Vec::new() }
    }

    pub fn comment(&mut self, line: impl Into<String>) {
        self.comments.push(line.into());
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn write<W: Write>(&self, mut w: W, seed: u64) -> Result<()> {
        writeln!(w, "# seed={seed}")?;
        for c in &self.comments {
            writeln!(w, "# {c}")?;
        }
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(&self.header)?;
        for row in &self.rows {
            wtr.write_record(row)?;
        }
        wtr.flush()?;
        Ok(())
    }

    /// Writes `name` into `out`, or to stdout when no directory was given.
    pub fn emit(&self, out: Option<&Path>, name: &str, seed: u64) -> Result<Option<PathBuf>> {
        match out {
            Some(dir) => {
                let path = create(dir, name)?;
                let file = fs::File::create(&path).with_context(|| format!("creating {}", path.display()))?;
                self.write(io::BufWriter::new(file), seed)?;
                Ok(Some(path))
            }
            None => {
                self.write(io::stdout().lock(), seed)?;
                Ok(None)
            }
        }
    }
}

/// Path of `name` inside `dir`, creating the directory if needed.
pub fn create(dir: &Path, name: &str) -> Result<PathBuf> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    Ok(dir.join(name))
}

/// Shortest representation that parses back to the same `f64`.
pub fn num(x: f64) -> String {
    format!("{x}")
}
