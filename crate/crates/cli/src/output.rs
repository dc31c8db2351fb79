use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::CliError;

/// Writes files under one directory and nowhere else.
pub struct OutputDir {
    root: PathBuf,
}

impl OutputDir {
    pub fn create(root: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(root)
            .map_err(|e| CliError::Io(format!("cannot create {}: {e}", root.display())))?;
        Ok(Self {
            root: root.to_path_buf(),
        })
    }

    fn io_err(&self, name: &str, e: impl std::fmt::Display) -> CliError {
        CliError::Io(format!("{}: {e}", self.root.join(name).display()))
    }

    pub fn json<T: Serialize>(&self, name: &str, value: &T) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(value).map_err(|e| self.io_err(name, e))?;
        text.push('\n');
        fs::write(self.root.join(name), text).map_err(|e| self.io_err(name, e))
    }

    /// Writes a header line followed by pre-formatted rows.
    pub fn csv<I>(&self, name: &str, header: &str, rows: I) -> Result<(), CliError>
    where
        I: IntoIterator<Item = String>,
    {
        let file = fs::File::create(self.root.join(name)).map_err(|e| self.io_err(name, e))?;
        let mut w = BufWriter::new(file);
        let write = |w: &mut BufWriter<fs::File>, line: &str| writeln!(w, "{line}");
        write(&mut w, header).map_err(|e| self.io_err(name, e))?;
        for row in rows {
            write(&mut w, &row).map_err(|e| self.io_err(name, e))?;
        }
        w.flush().map_err(|e| self.io_err(name, e))
    }
}

/// Quotes a CSV field when needed.
pub fn field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}
