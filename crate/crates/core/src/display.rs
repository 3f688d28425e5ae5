//! Console rendering of frames.

use crate::frame::{Column, Frame};
use crate::value::{format_date, DType, Value};

/// Line width assumed by [`format_frame`].
pub const DISPLAY_WIDTH: usize = 80;

/// Renders up to `max_print` rows of `frame` for an 80-column console.
pub fn format_frame(frame: &Frame, max_print: usize) -> String {
    format_frame_with_width(frame, max_print, DISPLAY_WIDTH)
}

/// Like [`format_frame`] with an explicit line width.
///
/// Columns that do not fit are dropped from the right and listed on a
/// trailing `Variables not shown:` line.
pub fn format_frame_with_width(frame: &Frame, max_print: usize, width: usize) -> String {
    let mut out = format!(
        "Source: local data frame [{} x {}]\n",
        frame.num_rows(),
        frame.num_columns()
    );
    if frame.is_grouped() {
        out.push_str(&format!("Groups: {}\n", frame.groups().join(", ")));
    }
    out.push('\n');

    let shown = frame.num_rows().min(max_print);
    let label_width = if shown == 0 { 0 } else { shown.to_string().len() };
    let rendered: Vec<Vec<String>> = frame
        .columns()
        .iter()
        .map(|c| render_column(c, shown))
        .collect();

    let mut used = label_width;
    let mut visible = 0;
    for (col, cells) in frame.columns().iter().zip(&rendered) {
        let w = column_width(col.name(), cells);
        if visible > 0 && used + 1 + w > width {
            break;
        }
        used += 1 + w;
        visible += 1;
    }

    let widths: Vec<usize> = frame.columns()[..visible]
        .iter()
        .zip(&rendered)
        .map(|(c, cells)| column_width(c.name(), cells))
        .collect();
    let mut line = " ".repeat(label_width);
    for (c, w) in frame.columns()[..visible].iter().zip(&widths) {
        line.push_str(&format!(" {:>w$}", c.name()));
    }
    out.push_str(line.trim_end());
    out.push('\n');
    for row in 0..shown {
        let mut line = format!("{:<label_width$}", row + 1);
        for (cells, w) in rendered[..visible].iter().zip(&widths) {
            line.push_str(&format!(" {:>w$}", cells[row]));
        }
        out.push_str(&line);
        out.push('\n');
    }

    let hidden: Vec<String> = frame.columns()[visible..]
        .iter()
        .map(|c| format!("{} ({})", c.name(), c.dtype().display_tag()))
        .collect();
    if !hidden.is_empty() {
        out.push_str(&wrap_hidden(&hidden, width));
    }
    out
}

fn column_width(name: &str, cells: &[String]) -> usize {
    cells
        .iter()
        .map(|s| s.chars().count())
        .chain([name.chars().count()])
        .max()
        .unwrap_or(0)
}

fn wrap_hidden(items: &[String], width: usize) -> String {
    let mut out = String::new();
    let mut line = String::from("Variables not shown:");
    for (i, item) in items.iter().enumerate() {
        let piece = if i + 1 < items.len() {
            format!("{item},")
        } else {
            item.clone()
        };
        if i > 0 && line.chars().count() + 1 + piece.chars().count() > width {
            out.push_str(&line);
            out.push('\n');
            line = format!("  {piece}");
        } else {
            line.push(' ');
            line.push_str(&piece);
        }
    }
    out.push_str(&line);
    out.push('\n');
    out
}

fn render_column(col: &Column, rows: usize) -> Vec<String> {
    let cells = &col.cells()[..rows];
    let fractional = col.dtype() == DType::Float
        && col
            .cells()
            .iter()
            .any(|v| matches!(v, Value::Float(x) if x.is_finite() && x.fract() != 0.0));
    cells.iter().map(|v| render_cell(v, fractional)).collect()
}

fn render_cell(v: &Value, fractional: bool) -> String {
    match v {
        Value::Null => "NA".to_owned(),
        Value::Int(i) => i.to_string(),
        Value::Float(x) if x.is_nan() => "NaN".to_owned(),
        Value::Float(x) if x.is_infinite() => {
            if *x > 0.0 { "Inf" } else { "-Inf" }.to_owned()
        }
        Value::Float(x) if fractional => format!("{x:.4}"),
        Value::Float(x) => format!("{x:.0}"),
        Value::Str(s) => s.clone(),
        Value::Bool(b) => if *b { "TRUE" } else { "FALSE" }.to_owned(),
        Value::Date(d) => format_date(*d),
    }
}
