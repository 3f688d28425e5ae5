use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::frame::{Column, Frame};
use crate::value::{compare_values, parse_ymd, DType, Value};

use super::{typecheck, BinaryOp, Expr, ExprKind, Func, UnaryOp};

pub(crate) fn apply_unary(op: UnaryOp, v: Value) -> Result<Value> {
    Ok(match (op, v) {
        (_, Value::Null) => Value::Null,
        (UnaryOp::Desc, v) => v,
        (UnaryOp::Not, Value::Bool(b)) => Value::Bool(!b),
        (UnaryOp::Neg, Value::Int(i)) => {
            Value::Int(i.checked_neg().ok_or_else(|| Error::Overflow("negation".into()))?)
        }
        (UnaryOp::Neg, Value::Float(x)) => Value::Float(-x),
        (op, v) => return Err(Error::type_error(format!("cannot apply {op:?} to {v:?}"))),
    })
}

pub(crate) fn apply_binary(op: BinaryOp, a: &Value, b: &Value) -> Result<Value> {
    use Value::{Bool, Float, Int, Null};
    match op {
        BinaryOp::And => {
            return Ok(match (a, b) {
                (Bool(false), _) | (_, Bool(false)) => Bool(false),
                (Null, _) | (_, Null) => Null,
                (Bool(x), Bool(y)) => Bool(*x && *y),
                _ => return Err(Error::type_error("`&` needs bools")),
            })
        }
        BinaryOp::Or => {
            return Ok(match (a, b) {
                (Bool(true), _) | (_, Bool(true)) => Bool(true),
                (Null, _) | (_, Null) => Null,
                (Bool(x), Bool(y)) => Bool(*x || *y),
                _ => return Err(Error::type_error("`|` needs bools")),
            })
        }
        _ => {}
    }
    if a.is_null() || b.is_null() {
        return Ok(Null);
    }
    if op.is_comparison() {
        let ord = compare_values(a, b)
            .ok_or_else(|| Error::type_error(format!("cannot compare {a:?} with {b:?}")))?;
        return Ok(Bool(match op {
            BinaryOp::Eq => ord == Ordering::Equal,
            BinaryOp::NotEq => ord != Ordering::Equal,
            BinaryOp::Lt => ord == Ordering::Less,
            BinaryOp::LtEq => ord != Ordering::Greater,
            BinaryOp::Gt => ord == Ordering::Greater,
            _ => ord != Ordering::Less,
        }));
    }
    if let (Int(x), Int(y)) = (a, b) {
        let overflow = || Error::Overflow(format!("`{}`", op.symbol()));
        return Ok(Int(match op {
            BinaryOp::Add => x.checked_add(*y).ok_or_else(overflow)?,
            BinaryOp::Sub => x.checked_sub(*y).ok_or_else(overflow)?,
            BinaryOp::Mul => x.checked_mul(*y).ok_or_else(overflow)?,
            _ => {
                if *y == 0 {
                    return Err(Error::DivideByZero);
                }
                x.checked_div(*y).ok_or_else(overflow)?
            }
        }));
    }
    let (Some(x), Some(y)) = (a.as_f64(), b.as_f64()) else {
        return Err(Error::type_error(format!(
            "`{}` needs numbers, got {a:?} and {b:?}",
            op.symbol()
        )));
    };
    Ok(Float(match op {
        BinaryOp::Add => x + y,
        BinaryOp::Sub => x - y,
        BinaryOp::Mul => x * y,
        _ => x / y,
    }))
}

/// SQL `IN`: null on a null probe, or when nothing matches and the list
/// holds a null.
pub(crate) fn apply_in(v: &Value, list: &[Value]) -> Value {
    if v.is_null() {
        return Value::Null;
    }
    let mut saw_null = false;
    for item in list {
        if item.is_null() {
            saw_null = true;
        } else if compare_values(v, item) == Some(Ordering::Equal) {
            return Value::Bool(true);
        }
    }
    if saw_null {
        Value::Null
    } else {
        Value::Bool(false)
    }
}

pub(crate) fn apply_ymd(v: &Value) -> Result<Value> {
    match v {
        Value::Null => Ok(Value::Null),
        Value::Str(s) => parse_ymd(s)
            .map(Value::Date)
            .ok_or_else(|| Error::DateParse(s.clone())),
        other => Err(Error::type_error(format!("ymd() of {other:?}"))),
    }
}

pub(crate) fn apply_paste(parts: &[Value], sep: &str) -> Value {
    let mut out = String::new();
    for (i, p) in parts.iter().enumerate() {
        let Some(text) = p.to_paste_string() else {
            return Value::Null;
        };
        if i > 0 {
            out.push_str(sep);
        }
        out.push_str(&text);
    }
    Value::Str(out)
}

pub(crate) fn paste_sep(named: &[(String, Expr)]) -> &str {
    named
        .iter()
        .find_map(|(k, v)| match (k.as_str(), v) {
            ("sep", Expr::Literal(Value::Str(s))) => Some(s.as_str()),
            _ => None,
        })
        .unwrap_or(" ")
}

fn map_cells(cells: Vec<Value>, f: impl Fn(Value) -> Result<Value>) -> Result<Vec<Value>> {
    cells.into_iter().map(f).collect()
}

/// Evaluates a scalar expression for every row of `frame`.
fn eval_cells(e: &Expr, frame: &Frame) -> Result<Vec<Value>> {
    let rows = frame.num_rows();
    match e {
        Expr::Column(name) => Ok(frame
            .column(name)
            .ok_or_else(|| Error::UnknownColumn(name.clone()))?
            .cells()
            .to_vec()),
        Expr::Literal(v) => Ok(vec![v.clone(); rows]),
        Expr::Unary { op, expr } => map_cells(eval_cells(expr, frame)?, |v| apply_unary(*op, v)),
        Expr::Binary { op, left, right } => {
            let l = eval_cells(left, frame)?;
            let r = eval_cells(right, frame)?;
            l.iter().zip(&r).map(|(a, b)| apply_binary(*op, a, b)).collect()
        }
        Expr::InList { expr, list } => Ok(eval_cells(expr, frame)?
            .iter()
            .map(|v| apply_in(v, list))
            .collect()),
        Expr::Call { func, args, named } => match func {
            Func::Ymd => map_cells(eval_cells(&args[0], frame)?, |v| apply_ymd(&v)),
            Func::Paste => {
                let sep = paste_sep(named);
                let parts = args
                    .iter()
                    .map(|a| eval_cells(a, frame))
                    .collect::<Result<Vec<_>>>()?;
                Ok((0..rows)
                    .map(|r| {
                        let row: Vec<Value> = parts.iter().map(|p| p[r].clone()).collect();
                        apply_paste(&row, sep)
                    })
                    .collect())
            }
            agg => Err(Error::type_error(format!(
                "aggregate {}() used outside summarise",
                agg.name()
            ))),
        },
    }
}

/// Evaluates a scalar expression into a column with one cell per row.
/// The column is named after the expression text.
pub fn eval_column(e: &Expr, frame: &Frame) -> Result<Column> {
    let dtype = typecheck(e, &frame.schema())?;
    if e.kind() == ExprKind::Aggregate {
        return Err(Error::type_error(format!(
            "`{e}` aggregates; use it in summarise()"
        )));
    }
    if e.contains_desc() {
        return Err(Error::type_error("desc() is only allowed as an arrange key"));
    }
    let cells = eval_cells(e, frame)?;
    Column::new(e.to_string(), dtype, cells)
}

/// An aggregate expression whose aggregate inputs have been evaluated once
/// over a whole frame, ready to be reduced over many row subsets.
#[derive(Debug)]
pub struct PreparedAggregate<'e> {
    expr: &'e Expr,
    inputs: Vec<(DType, Vec<Value>)>,
}

impl<'e> PreparedAggregate<'e> {
    pub fn new(expr: &'e Expr, frame: &Frame) -> Result<Self> {
        let schema = frame.schema();
        typecheck(expr, &schema)?;
        if expr.kind() != ExprKind::Aggregate {
            return Err(Error::type_error(format!("`{expr}` does not aggregate")));
        }
        let mut inputs = Vec::new();
        prepare(expr, frame, &mut inputs)?;
        Ok(PreparedAggregate { expr, inputs })
    }

    pub fn eval(&self, rows: &[usize]) -> Result<Value> {
        let mut next = 0;
        self.reduce(self.expr, rows, &mut next)
    }

    fn reduce(&self, e: &Expr, rows: &[usize], next: &mut usize) -> Result<Value> {
        match e {
            Expr::Column(name) => Err(Error::type_error(format!(
                "column `{name}` must be inside an aggregate"
            ))),
            Expr::Literal(v) => Ok(v.clone()),
            Expr::Unary { op, expr } => apply_unary(*op, self.reduce(expr, rows, next)?),
            Expr::Binary { op, left, right } => {
                let l = self.reduce(left, rows, next)?;
                let r = self.reduce(right, rows, next)?;
                apply_binary(*op, &l, &r)
            }
            Expr::InList { expr, list } => Ok(apply_in(&self.reduce(expr, rows, next)?, list)),
            Expr::Call { func, args, named } => {
                if func.is_aggregate() {
                    let (dtype, cells) = &self.inputs[*next];
                    *next += 1;
                    return aggregate(*func, *dtype, cells, rows);
                }
                let vals = args
                    .iter()
                    .map(|a| self.reduce(a, rows, next))
                    .collect::<Result<Vec<_>>>()?;
                match func {
                    Func::Ymd => apply_ymd(&vals[0]),
                    _ => Ok(apply_paste(&vals, paste_sep(named))),
                }
            }
        }
    }
}

fn prepare(e: &Expr, frame: &Frame, out: &mut Vec<(DType, Vec<Value>)>) -> Result<()> {
    match e {
        Expr::Column(_) | Expr::Literal(_) => Ok(()),
        Expr::Unary { expr, .. } | Expr::InList { expr, .. } => prepare(expr, frame, out),
        Expr::Binary { left, right, .. } => {
            prepare(left, frame, out)?;
            prepare(right, frame, out)
        }
        Expr::Call { func, args, .. } => {
            if func.is_aggregate() {
                match args.first() {
                    Some(arg) => {
                        let dtype = typecheck(arg, &frame.schema())?;
                        out.push((dtype, eval_cells(arg, frame)?));
                    }
                    None => out.push((DType::Int, Vec::new())),
                }
                return Ok(());
            }
            args.iter().try_for_each(|a| prepare(a, frame, out))
        }
    }
}

fn aggregate(func: Func, dtype: DType, cells: &[Value], rows: &[usize]) -> Result<Value> {
    if func == Func::N {
        return Ok(Value::Int(rows.len() as i64));
    }
    let present = rows.iter().map(|&r| &cells[r]).filter(|v| !v.is_null());
    match func {
        Func::Sum if dtype == DType::Int => {
            let mut acc: i64 = 0;
            for v in present {
                if let Value::Int(i) = v {
                    acc = acc
                        .checked_add(*i)
                        .ok_or_else(|| Error::Overflow("sum()".into()))?;
                }
            }
            Ok(Value::Int(acc))
        }
        Func::Sum => Ok(Value::Float(present.filter_map(Value::as_f64).sum())),
        Func::Mean => {
            let mut count = 0usize;
            let value = if dtype == DType::Int {
                let mut acc: i128 = 0;
                for v in present {
                    if let Value::Int(i) = v {
                        acc += *i as i128;
                        count += 1;
                    }
                }
                acc as f64
            } else {
                let mut acc = 0.0;
                for x in present.filter_map(Value::as_f64) {
                    acc += x;
                    count += 1;
                }
                acc
            };
            Ok(if count == 0 {
                Value::Null
            } else {
                Value::Float(value / count as f64)
            })
        }
        Func::Min | Func::Max => {
            let want = if func == Func::Min {
                Ordering::Less
            } else {
                Ordering::Greater
            };
            let mut best: Option<&Value> = None;
            for v in present {
                best = match best {
                    Some(b) if compare_values(v, b) != Some(want) => Some(b),
                    _ => Some(v),
                };
            }
            Ok(best.cloned().unwrap_or(Value::Null))
        }
        _ => unreachable!("scalar function {func:?} in aggregate position"),
    }
}

/// Reduces an aggregate expression over the rows `rows` of `frame`.
pub fn eval_aggregate(e: &Expr, frame: &Frame, rows: &[usize]) -> Result<Value> {
    PreparedAggregate::new(e, frame)?.eval(rows)
}
