//! Writing summaries and tables to files or standard output.

use std::fs;
use std::io::Write;
use std::path::Path;

use divctl_core::config::{OutputFormat, RunConfig};
use divctl_core::report::Table;

use crate::Failure;

/// `key=value` summary lines.
#[derive(Default)]
pub struct Summary {
    lines: Vec<String>,
}

impl Summary {
    pub fn put(&mut self, key: &str, value: impl std::fmt::Display) {
        self.lines.push(format!("{key}={value}"));
    }

    pub fn text(&self) -> String {
        let mut s = self.lines.join("\n");
        s.push('\n');
        s
    }
}

fn render(table: &Table, format: OutputFormat) -> Result<String, Failure> {
    match format {
        OutputFormat::Csv => Ok(table.to_csv()),
        OutputFormat::Json => serde_json::to_string_pretty(table)
            .map(|mut s| {
                s.push('\n');
                s
            })
            .map_err(|e| Failure::Solver(format!("cannot serialise table: {e}"))),
    }
}

fn write_file(path: &str, content: &str) -> Result<(), Failure> {
    if let Some(parent) = Path::new(path).parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Failure::Solver(format!("cannot create {}: {e}", parent.display())))?;
    }
    fs::write(path, content).map_err(|e| Failure::Solver(format!("cannot write {path}: {e}")))
}

/// Prints the summary and writes each `(name, table)` to `PREFIX_name.ext`,
/// or prints the tables after the summary when no prefix is configured.
pub fn emit(config: &RunConfig, summary: &Summary, tables: &[(&str, &Table)]) -> Result<(), Failure> {
    let format = config.output.format;
    let ext = format.name();
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    let print = |out: &mut std::io::StdoutLock<'_>, s: &str| {
        out.write_all(s.as_bytes()).map_err(|e| Failure::Solver(format!("cannot write to standard output: {e}")))
    };
    print(&mut out, &summary.text())?;
    match &config.output.prefix {
        Some(prefix) => {
            write_file(&format!("{prefix}_summary.txt"), &summary.text())?;
            for (name, table) in tables {
                let path = format!("{prefix}_{name}.{ext}");
                write_file(&path, &render(table, format)?)?;
                print(&mut out, &format!("wrote {path}\n"))?;
            }
        }
        None => {
            for (_, table) in tables {
                print(&mut out, "\n")?;
                print(&mut out, &render(table, format)?)?;
            }
        }
    }
    Ok(())
}
