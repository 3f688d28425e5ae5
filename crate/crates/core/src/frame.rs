//! Immutable columnar tables.

use std::collections::HashSet;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::value::{DType, Value};

#[derive(Debug, Clone, PartialEq)]
pub struct Column {
    name: String,
    dtype: DType,
    cells: Vec<Value>,
}

impl Column {
    /// Builds a column, checking that every non-null cell matches `dtype`.
    pub fn new(name: impl Into<String>, dtype: DType, cells: Vec<Value>) -> Result<Self> {
        let name = name.into();
        if name.is_empty() {
            return Err(Error::SchemaMismatch("column names must be nonempty".into()));
        }
        if let Some(found) = cells
            .iter()
            .filter_map(Value::dtype)
            .find(|t| *t != dtype)
        {
            return Err(Error::DtypeMismatch {
                name,
                expected: dtype,
                found,
            });
        }
        Ok(Column { name, dtype, cells })
    }

    pub fn ints(name: &str, cells: impl IntoIterator<Item = Option<i64>>) -> Self {
        Self::from_options(name, DType::Int, cells, Value::Int)
    }

    pub fn floats(name: &str, cells: impl IntoIterator<Item = Option<f64>>) -> Self {
        Self::from_options(name, DType::Float, cells, Value::Float)
    }

    pub fn strs<S: Into<String>>(name: &str, cells: impl IntoIterator<Item = Option<S>>) -> Self {
        Self::from_options(name, DType::Str, cells, |s| Value::Str(s.into()))
    }

    pub fn bools(name: &str, cells: impl IntoIterator<Item = Option<bool>>) -> Self {
        Self::from_options(name, DType::Bool, cells, Value::Bool)
    }

    pub fn dates(name: &str, cells: impl IntoIterator<Item = Option<i32>>) -> Self {
        Self::from_options(name, DType::Date, cells, Value::Date)
    }

    fn from_options<T>(
        name: &str,
        dtype: DType,
        cells: impl IntoIterator<Item = Option<T>>,
        wrap: impl Fn(T) -> Value,
    ) -> Self {
        let cells = cells
            .into_iter()
            .map(|c| c.map_or(Value::Null, &wrap))
            .collect();
        Column {
            name: name.to_owned(),
            dtype,
            cells,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dtype(&self) -> DType {
        self.dtype
    }

    pub fn cells(&self) -> &[Value] {
        &self.cells
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn get(&self, row: usize) -> &Value {
        &self.cells[row]
    }

    pub fn renamed(&self, name: impl Into<String>) -> Column {
        Column {
            name: name.into(),
            dtype: self.dtype,
            cells: self.cells.clone(),
        }
    }

    /// Gathers `rows` (in the given order) into a new column.
    pub fn take(&self, rows: &[usize]) -> Column {
        Column {
            name: self.name.clone(),
            dtype: self.dtype,
            cells: rows.iter().map(|&r| self.cells[r].clone()).collect(),
        }
    }

    pub(crate) fn from_parts_unchecked(name: String, dtype: DType, cells: Vec<Value>) -> Self {
        debug_assert!(cells.iter().filter_map(Value::dtype).all(|t| t == dtype));
        Column { name, dtype, cells }
    }
}

/// Ordered `(name, dtype)` pairs. Equality is order-sensitive.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Schema {
    fields: Vec<(String, DType)>,
}

impl Schema {
    pub fn new(fields: Vec<(String, DType)>) -> Result<Self> {
        let mut seen = HashSet::new();
        for (name, _) in &fields {
            if !seen.insert(name.as_str()) {
                return Err(Error::DuplicateName(name.clone()));
            }
        }
        Ok(Schema { fields })
    }

    pub fn from_pairs<'a>(pairs: impl IntoIterator<Item = (&'a str, DType)>) -> Result<Self> {
        Self::new(pairs.into_iter().map(|(n, t)| (n.to_owned(), t)).collect())
    }

    pub fn fields(&self) -> &[(String, DType)] {
        &self.fields
    }

    pub fn len(&self) -> usize {
        self.fields.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fields.is_empty()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.fields.iter().map(|(n, _)| n.as_str())
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.fields.iter().position(|(n, _)| n == name)
    }

    pub fn dtype_of(&self, name: &str) -> Option<DType> {
        self.fields.iter().find(|(n, _)| n == name).map(|(_, t)| *t)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.index_of(name).is_some()
    }
}

impl fmt::Display for Schema {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (i, (n, t)) in self.fields.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{n}: {t}")?;
        }
        f.write_str(")")
    }
}

/// An immutable table: equal-length, uniquely named columns plus optional
/// grouping keys. Verbs never modify a frame; they build new ones, sharing
/// untouched columns.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Frame {
    columns: Vec<Arc<Column>>,
    groups: Vec<String>,
    rows: usize,
}

impl Frame {
    pub fn from_columns(cols: Vec<Column>) -> Result<Self> {
        Self::from_shared(cols.into_iter().map(Arc::new).collect())
    }

    pub(crate) fn from_shared(columns: Vec<Arc<Column>>) -> Result<Self> {
        let rows = columns.first().map_or(0, |c| c.len());
        let mut seen = HashSet::new();
        for c in &columns {
            if c.name().is_empty() {
                return Err(Error::SchemaMismatch("column names must be nonempty".into()));
            }
            if c.len() != rows {
                return Err(Error::LengthMismatch {
                    name: c.name().to_owned(),
                    expected: rows,
                    found: c.len(),
                });
            }
            if !seen.insert(c.name()) {
                return Err(Error::DuplicateName(c.name().to_owned()));
            }
        }
        Ok(Frame {
            columns,
            groups: Vec::new(),
            rows,
        })
    }

    /// A zero-row frame with the given schema.
    pub fn empty(schema: &Schema) -> Self {
        let columns = schema
            .fields()
            .iter()
            .map(|(n, t)| Arc::new(Column::from_parts_unchecked(n.clone(), *t, Vec::new())))
            .collect();
        Frame {
            columns,
            groups: Vec::new(),
            rows: 0,
        }
    }

    /// Returns a copy carrying `keys` as grouping metadata.
    pub fn with_groups(&self, keys: Vec<String>) -> Result<Self> {
        for k in &keys {
            if self.column(k).is_none() {
                return Err(Error::UnknownColumn(k.clone()));
            }
        }
        Ok(Frame {
            columns: self.columns.clone(),
            groups: keys,
            rows: self.rows,
        })
    }

    pub fn schema(&self) -> Schema {
        Schema {
            fields: self
                .columns
                .iter()
                .map(|c| (c.name().to_owned(), c.dtype()))
                .collect(),
        }
    }

    pub fn num_rows(&self) -> usize {
        self.rows
    }

    pub fn num_columns(&self) -> usize {
        self.columns.len()
    }

    pub fn columns(&self) -> &[Arc<Column>] {
        &self.columns
    }

    pub fn column(&self, name: &str) -> Option<&Column> {
        self.columns
            .iter()
            .find(|c| c.name() == name)
            .map(|c| c.as_ref())
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name() == name)
    }

    pub fn groups(&self) -> &[String] {
        &self.groups
    }

    pub fn is_grouped(&self) -> bool {
        !self.groups.is_empty()
    }

    pub fn row(&self, i: usize) -> Vec<Value> {
        self.columns.iter().map(|c| c.get(i).clone()).collect()
    }

    /// Gathers rows by index into a new frame, keeping grouping metadata.
    pub fn take(&self, rows: &[usize]) -> Frame {
        Frame {
            columns: self.columns.iter().map(|c| Arc::new(c.take(rows))).collect(),
            groups: self.groups.clone(),
            rows: rows.len(),
        }
    }

    pub(crate) fn from_parts(columns: Vec<Arc<Column>>, groups: Vec<String>, rows: usize) -> Self {
        Frame {
            columns,
            groups,
            rows,
        }
    }
}

/// Builds an ungrouped frame from columns (zero columns only with zero rows).
pub fn frame_from_columns(cols: Vec<Column>) -> Result<Frame> {
    Frame::from_columns(cols)
}

pub fn schema_of(frame: &Frame) -> Schema {
    frame.schema()
}
