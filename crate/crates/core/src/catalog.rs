//! Name → table bindings.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::OnceLock;

use crate::csv_io::{read_csv, CsvOptions};
use crate::error::{Error, Result};
use crate::frame::{Frame, Schema};

#[derive(Debug, Clone, PartialEq)]
pub enum TableSource {
    LocalCsv {
        path: PathBuf,
        schema: Option<Schema>,
    },
    /// A table living in an external database. Plans over it can be compiled
    /// to SQL but never collected in memory.
    RemoteTable { qualified_name: String, schema: Schema },
}

#[derive(Debug)]
struct Entry {
    source: TableSource,
    inferred: OnceLock<Schema>,
}

/// Table bindings plus a counter of materializations.
///
/// Looking up a schema never counts as a materialization; for local tables
/// without a declared schema the file is scanned once and the result cached.
#[derive(Debug, Default)]
pub struct Catalog {
    tables: BTreeMap<String, Entry>,
    csv: CsvOptions,
    access_count: AtomicUsize,
}

impl Catalog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_csv_options(csv: CsvOptions) -> Self {
        Catalog {
            csv,
            ..Self::default()
        }
    }

    /// Registers every `*.csv` file in `dir` as a table named by its file stem.
    pub fn from_dir(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let io = |source| Error::Io {
            path: dir.to_owned(),
            source,
        };
        let mut paths = Vec::new();
        for entry in std::fs::read_dir(dir).map_err(io)? {
            let path = entry.map_err(io)?.path();
            if path.extension().is_some_and(|e| e == "csv") && path.is_file() {
                paths.push(path);
            }
        }
        paths.sort();
        let mut cat = Catalog::new();
        for path in paths {
            let Some(stem) = path.file_stem().and_then(|s| s.to_str()) else {
                continue;
            };
            cat.add_csv(stem.to_owned(), path.clone(), None)?;
        }
        Ok(cat)
    }

    pub fn add(&mut self, name: impl Into<String>, source: TableSource) -> Result<()> {
        let name = name.into();
        if self.tables.contains_key(&name) {
            return Err(Error::DuplicateName(name));
        }
        self.tables.insert(
            name,
            Entry {
                source,
                inferred: OnceLock::new(),
            },
        );
        Ok(())
    }

    pub fn add_csv(
        &mut self,
        name: impl Into<String>,
        path: impl Into<PathBuf>,
        schema: Option<Schema>,
    ) -> Result<()> {
        self.add(
            name,
            TableSource::LocalCsv {
                path: path.into(),
                schema,
            },
        )
    }

    pub fn add_remote(
        &mut self,
        name: impl Into<String>,
        qualified_name: impl Into<String>,
        schema: Schema,
    ) -> Result<()> {
        self.add(
            name,
            TableSource::RemoteTable {
                qualified_name: qualified_name.into(),
                schema,
            },
        )
    }

    pub fn source(&self, name: &str) -> Option<&TableSource> {
        self.tables.get(name).map(|e| &e.source)
    }

    pub fn table_names(&self) -> impl Iterator<Item = &str> {
        self.tables.keys().map(String::as_str)
    }

    pub fn schema(&self, name: &str) -> Result<Schema> {
        let entry = self
            .tables
            .get(name)
            .ok_or_else(|| Error::UnknownTable(name.to_owned()))?;
        match &entry.source {
            TableSource::RemoteTable { schema, .. }
            | TableSource::LocalCsv {
                schema: Some(schema),
                ..
            } => Ok(schema.clone()),
            TableSource::LocalCsv { path, schema: None } => {
                if let Some(s) = entry.inferred.get() {
                    return Ok(s.clone());
                }
                let s = read_csv(path, &self.csv)?.schema();
                Ok(entry.inferred.get_or_init(|| s).clone())
            }
        }
    }

    /// Loads a local table. Each call counts as one materialization.
    pub fn materialize(&self, name: &str) -> Result<Frame> {
        let entry = self
            .tables
            .get(name)
            .ok_or_else(|| Error::UnknownTable(name.to_owned()))?;
        match &entry.source {
            TableSource::RemoteTable { .. } => Err(Error::RemoteNotExecutable(name.to_owned())),
            TableSource::LocalCsv { path, schema } => {
                self.access_count.fetch_add(1, Ordering::SeqCst);
                let opts = CsvOptions {
                    schema: schema.clone(),
                    ..self.csv.clone()
                };
                read_csv(path, &opts)
            }
        }
    }

    pub fn access_count(&self) -> usize {
        self.access_count.load(Ordering::SeqCst)
    }
}
