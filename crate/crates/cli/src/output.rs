use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::error::CliError;
use crate::settings::Settings;

/// Attached to every emitted record.
#[derive(Clone, Debug, Serialize)]
pub struct Provenance {
    pub seed: u64,
    /// Shots per estimated inner product; 0 when nothing was sampled.
    pub shots: u64,
    pub config_hash: String,
    pub rng: &'static str,
    pub version: &'static str,
}

impl Provenance {
    pub fn new(settings: &Settings, sampled: bool) -> Self {
        Self {
            seed: settings.seed(),
            shots: if sampled { settings.shots() } else { 0 },
            config_hash: settings.hash(),
            rng: qmelab::rng::ALGORITHM,
            version: env!("CARGO_PKG_VERSION"),
        }
    }
}

#[derive(Serialize)]
struct Record<'a, T: Serialize> {
    command: &'a str,
    result: &'a T,
    provenance: &'a Provenance,
    config: &'a Settings,
}

/// What a command produced: a JSON record and, for tabular results, a CSV
/// rendering.
#[derive(Clone, Debug, PartialEq)]
pub struct Output {
    pub json: String,
    pub table: Option<String>,
}

impl Output {
    pub fn new<T: Serialize>(
        command: &str,
        result: &T,
        provenance: &Provenance,
        settings: &Settings,
        table: Option<Table>,
    ) -> Result<Self, CliError> {
        let record = Record {
            command,
            result,
            provenance,
            config: settings,
        };
        let mut json = qmelab::json::to_string(&record)?;
        json.push('\n');
        let table = table.map(|t| t.finish(provenance)).transpose()?;
        Ok(Self { json, table })
    }

    /// With a `.csv` output path and a table, the table goes to the file and
    /// the JSON record to `stdout`; any other output path receives the JSON
    /// record; no output path prints the JSON record.
    pub fn write(&self, path: Option<&Path>, stdout: &mut impl Write) -> Result<(), CliError> {
        let is_csv = path
            .and_then(|p| p.extension())
            .and_then(|e| e.to_str())
            .is_some_and(|e| e.eq_ignore_ascii_case("csv"));
        match (path, &self.table) {
            (Some(p), Some(table)) if is_csv => {
                std::fs::write(p, table)?;
                stdout.write_all(self.json.as_bytes())?;
            }
            (Some(p), _) => std::fs::write(p, &self.json)?,
            (None, _) => stdout.write_all(self.json.as_bytes())?,
        }
        Ok(())
    }
}

/// A CSV table. Every row also carries the seed, shots and config hash.
pub struct Table {
    header: Vec<&'static str>,
    rows: Vec<Vec<String>>,
}

pub fn real(v: f64) -> String {
    if v.is_finite() {
        qmelab::json::fmt17(v)
    } else {
        String::new()
    }
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Self {
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    fn finish(self, provenance: &Provenance) -> Result<String, CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = self.header.clone();
        header.extend(["seed", "shots", "config_hash"]);
        w.write_record(&header)?;
        for mut row in self.rows {
            row.extend([
                provenance.seed.to_string(),
                provenance.shots.to_string(),
                provenance.config_hash.clone(),
            ]);
            w.write_record(&row)?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::Internal(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
    }
}
