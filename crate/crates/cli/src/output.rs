use std::path::PathBuf;

use anyhow::{Context, Result};
use lightcone_core::harness::RunManifest;
use lightcone_core::io::{write_atomic, write_json_atomic};
use serde::Serialize;

use crate::Format;

/// A table available both as CSV text and as JSON records.
pub struct Table {
    pub stem: String,
    pub csv: String,
    pub json: serde_json::Value,
}

/// Result of one subcommand before it is written anywhere.
pub struct Outcome {
    pub pass: bool,
    pub report: serde_json::Value,
    pub tables: Vec<Table>,
    /// Printed instead of the report under `--format csv`.
    pub stdout_table: Option<Table>,
}

#[derive(Serialize)]
struct Manifest<'a> {
    command: &'a str,
    #[serde(flatten)]
    run: RunManifest,
    pass: bool,
    outputs: Vec<String>,
}

/// Writes reports, tables and the manifest into `--out`, and the primary
/// result to stdout.
pub struct Sink {
    out: Option<PathBuf>,
    format: Format,
}

impl Sink {
    pub fn new(out: Option<PathBuf>, format: Format) -> Result<Self> {
        if let Some(dir) = &out {
            std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        }
        Ok(Self { out, format })
    }

    pub fn emit(&self, command: &str, manifest: RunManifest, outcome: &Outcome) -> Result<()> {
        let stdout = match (&outcome.stdout_table, self.format) {
            (Some(t), Format::Csv) => t.csv.clone(),
            _ => serde_json::to_string_pretty(&outcome.report)? + "\n",
        };
        print!("{stdout}");

        let Some(dir) = &self.out else { return Ok(()) };
        let mut outputs = Vec::new();
        let write = |name: String, bytes: &[u8], outputs: &mut Vec<String>| -> Result<()> {
            let path = dir.join(&name);
            write_atomic(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
            outputs.push(name);
            Ok(())
        };
        for t in outcome.tables.iter().chain(&outcome.stdout_table) {
            match self.format {
                Format::Csv => write(format!("{}.csv", t.stem), t.csv.as_bytes(), &mut outputs)?,
                Format::Json => write(format!("{}.json", t.stem), &serde_json::to_vec_pretty(&t.json)?, &mut outputs)?,
            }
        }
        write("report.json".into(), &serde_json::to_vec_pretty(&outcome.report)?, &mut outputs)?;
        let manifest = Manifest { command, run: manifest.finish(), pass: outcome.pass, outputs };
        let path = dir.join("manifest.json");
        write_json_atomic(&path, &manifest).with_context(|| format!("writing {}", path.display()))?;
        Ok(())
    }
}
