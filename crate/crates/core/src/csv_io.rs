//! CSV ingestion with per-column type inference, and CSV output.
//!
//! Inference looks only at non-null tokens of a column and picks the first
//! type that accepts all of them: int, float, date (`YYYY-MM-DD`), bool,
//! then string. A column with no non-null tokens is a string column.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::frame::{Column, Frame, Schema};
use crate::value::{format_date, parse_iso_date, DType, Value};

#[derive(Debug, Clone, PartialEq)]
pub struct CsvOptions {
    pub delimiter: u8,
    pub header: bool,
    pub null_tokens: Vec<String>,
    pub schema: Option<Schema>,
}

impl Default for CsvOptions {
    fn default() -> Self {
        CsvOptions {
            delimiter: b',',
            header: true,
            null_tokens: vec![String::new(), "NA".to_owned()],
            schema: None,
        }
    }
}

impl CsvOptions {
    pub fn with_schema(mut self, schema: Schema) -> Self {
        self.schema = Some(schema);
        self
    }

    fn validate(&self) -> Result<()> {
        if matches!(self.delimiter, b'"' | b'\n' | b'\r') {
            return Err(Error::Csv(format!(
                "invalid delimiter {:?}",
                self.delimiter as char
            )));
        }
        Ok(())
    }

    fn is_null(&self, token: &str) -> bool {
        self.null_tokens.iter().any(|t| t == token)
    }
}

pub fn read_csv(path: impl AsRef<Path>, opts: &CsvOptions) -> Result<Frame> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.to_owned(),
        source,
    })?;
    read_csv_from(file, opts)
}

pub fn read_csv_from<R: Read>(reader: R, opts: &CsvOptions) -> Result<Frame> {
    opts.validate()?;
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(opts.delimiter)
        .has_headers(false)
        .flexible(true)
        .from_reader(reader);

    let mut header: Option<Vec<String>> = None;
    let mut rows: Vec<Vec<String>> = Vec::new();
    let mut width: Option<usize> = None;
    for record in rdr.byte_records() {
        let record = record.map_err(csv_error)?;
        let line = record.position().map_or(0, |p| p.line());
        let fields = record
            .iter()
            .map(|f| std::str::from_utf8(f).map(str::to_owned))
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|_| Error::BadUtf8 { line })?;
        match width {
            None => width = Some(fields.len()),
            Some(w) if w != fields.len() => {
                return Err(Error::RaggedRow {
                    line,
                    expected: w,
                    found: fields.len(),
                })
            }
            _ => {}
        }
        if opts.header && header.is_none() {
            header = Some(fields);
        } else {
            rows.push(fields);
        }
    }

    let ncols = width.unwrap_or(0);
    let names: Vec<String> = match (&header, &opts.schema) {
        (Some(h), Some(s)) => {
            let declared: Vec<&str> = s.names().collect();
            if declared != h.iter().map(String::as_str).collect::<Vec<_>>() {
                return Err(Error::SchemaMismatch(format!(
                    "header [{}] does not match declared schema {s}",
                    h.join(", ")
                )));
            }
            h.clone()
        }
        (Some(h), None) => h.clone(),
        (None, Some(s)) => {
            if width.is_some() && s.len() != ncols {
                return Err(Error::SchemaMismatch(format!(
                    "declared schema has {} columns, data has {ncols}",
                    s.len()
                )));
            }
            s.names().map(str::to_owned).collect()
        }
        (None, None) => (1..=ncols).map(|i| format!("V{i}")).collect(),
    };

    let mut columns = Vec::with_capacity(names.len());
    for (ci, name) in names.iter().enumerate() {
        let tokens: Vec<Option<&str>> = rows
            .iter()
            .map(|r| {
                let t = r[ci].as_str();
                (!opts.is_null(t)).then_some(t)
            })
            .collect();
        let dtype = match &opts.schema {
            Some(s) => s.fields()[ci].1,
            None => infer_dtype(tokens.iter().flatten().copied()),
        };
        let mut cells = Vec::with_capacity(tokens.len());
        for (ri, tok) in tokens.iter().enumerate() {
            let v = match tok {
                None => Value::Null,
                Some(t) => parse_token(t, dtype).ok_or_else(|| {
                    Error::SchemaMismatch(format!(
                        "row {}, column `{name}`: cannot read `{t}` as {dtype}",
                        ri + 1
                    ))
                })?,
            };
            cells.push(v);
        }
        columns.push(Column::new(name.clone(), dtype, cells)?);
    }
    Frame::from_columns(columns)
}

fn csv_error(e: csv::Error) -> Error {
    match e.kind() {
        csv::ErrorKind::Utf8 { pos, .. } => Error::BadUtf8 {
            line: pos.as_ref().map_or(0, |p| p.line()),
        },
        csv::ErrorKind::UnequalLengths {
            pos,
            expected_len,
            len,
        } => Error::RaggedRow {
            line: pos.as_ref().map_or(0, |p| p.line()),
            expected: *expected_len as usize,
            found: *len as usize,
        },
        _ => Error::Csv(e.to_string()),
    }
}

/// Picks the narrowest type accepting every token.
pub fn infer_dtype<'a>(tokens: impl Iterator<Item = &'a str> + Clone) -> DType {
    let mut any = tokens.clone().peekable();
    if any.peek().is_none() {
        return DType::Str;
    }
    for dtype in [DType::Int, DType::Float, DType::Date, DType::Bool] {
        if tokens.clone().all(|t| parse_token(t, dtype).is_some()) {
            return dtype;
        }
    }
    DType::Str
}

fn parse_token(t: &str, dtype: DType) -> Option<Value> {
    match dtype {
        DType::Int => t.parse::<i64>().ok().map(Value::Int),
        DType::Float => is_decimal_float(t)
            .then(|| t.parse::<f64>().ok())
            .flatten()
            .map(Value::Float),
        DType::Date => parse_iso_date(t).map(Value::Date),
        DType::Bool => match t {
            "true" | "TRUE" => Some(Value::Bool(true)),
            "false" | "FALSE" => Some(Value::Bool(false)),
            _ => None,
        },
        DType::Str => Some(Value::Str(t.to_owned())),
    }
}

/// `[+-]?(d+(.d*)?|.d+)([eE][+-]?d+)?`, plus the non-finite spellings that
/// `write_csv` produces.
fn is_decimal_float(t: &str) -> bool {
    if matches!(t, "NaN" | "inf" | "-inf" | "+inf") {
        return true;
    }
    let b = t.as_bytes();
    let mut i = 0;
    if i < b.len() && (b[i] == b'+' || b[i] == b'-') {
        i += 1;
    }
    let int_start = i;
    while i < b.len() && b[i].is_ascii_digit() {
        i += 1;
    }
    let mut mantissa_digits = i - int_start;
    if i < b.len() && b[i] == b'.' {
        i += 1;
        let frac_start = i;
        while i < b.len() && b[i].is_ascii_digit() {
            i += 1;
        }
        mantissa_digits += i - frac_start;
    }
    if mantissa_digits == 0 {
        return false;
    }
    if i < b.len() && (b[i] == b'e' || b[i] == b'E') {
        i += 1;
        if i < b.len() && (b[i] == b'+' || b[i] == b'-') {
            i += 1;
        }
        let exp_start = i;
        while i < b.len() && b[i].is_ascii_digit() {
            i += 1;
        }
        if i == exp_start {
            return false;
        }
    }
    i == b.len()
}

/// Text written for a cell. Floats use the shortest representation that
/// reads back to the same bits and always look like floats.
pub fn csv_token(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::Int(i) => i.to_string(),
        Value::Float(x) => format!("{x:?}"),
        Value::Str(s) => s.clone(),
        Value::Bool(b) => b.to_string(),
        Value::Date(d) => format_date(*d),
    }
}

pub fn write_csv(frame: &Frame, path: impl AsRef<Path>, opts: &CsvOptions) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|source| Error::Io {
        path: path.to_owned(),
        source,
    })?;
    write_csv_to(frame, file, opts)
}

pub fn write_csv_to<W: Write>(frame: &Frame, writer: W, opts: &CsvOptions) -> Result<()> {
    opts.validate()?;
    let mut w = csv::WriterBuilder::new()
        .delimiter(opts.delimiter)
        .from_writer(writer);
    if opts.header && frame.num_columns() > 0 {
        w.write_record(frame.columns().iter().map(|c| c.name()))
            .map_err(csv_error)?;
    }
    for r in 0..frame.num_rows() {
        w.write_record(frame.columns().iter().map(|c| csv_token(c.get(r))))
            .map_err(csv_error)?;
    }
    w.flush().map_err(|e| Error::Csv(e.to_string()))
}
