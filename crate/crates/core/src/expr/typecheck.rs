use crate::error::{Error, Result};
use crate::frame::Schema;
use crate::value::DType;

use super::{BinaryOp, Expr, Func, UnaryOp};

/// `None` is the type of a bare `NA`, which unifies with anything.
type Ty = Option<DType>;

/// Result type of `e` over `schema`. An expression that is `NA` throughout
/// types as a string column.
pub fn typecheck(e: &Expr, schema: &Schema) -> Result<DType> {
    Ok(infer(e, schema, false)?.unwrap_or(DType::Str))
}

/// Like [`typecheck`], but `None` for an expression that is always `NA`.
pub(crate) fn infer_type(e: &Expr, schema: &Schema) -> Result<Option<DType>> {
    infer(e, schema, false)
}

fn infer(e: &Expr, schema: &Schema, in_aggregate: bool) -> Result<Ty> {
    match e {
        Expr::Column(name) => schema
            .dtype_of(name)
            .map(Some)
            .ok_or_else(|| Error::UnknownColumn(name.clone())),
        Expr::Literal(v) => Ok(v.dtype()),
        Expr::Unary { op, expr } => {
            let t = infer(expr, schema, in_aggregate)?;
            match op {
                UnaryOp::Desc => Ok(t),
                UnaryOp::Not => match t {
                    None | Some(DType::Bool) => Ok(Some(DType::Bool)),
                    Some(t) => Err(Error::type_error(format!("`!` needs a bool, got {t}"))),
                },
                UnaryOp::Neg => match t {
                    None => Ok(None),
                    Some(t) if t.is_numeric() => Ok(Some(t)),
                    Some(t) => Err(Error::type_error(format!("cannot negate {t}"))),
                },
            }
        }
        Expr::Binary { op, left, right } => {
            let l = infer(left, schema, in_aggregate)?;
            let r = infer(right, schema, in_aggregate)?;
            binary_type(*op, l, r)
        }
        Expr::InList { expr, list } => {
            let t = infer(expr, schema, in_aggregate)?;
            for v in list {
                if !comparable(t, v.dtype()) {
                    return Err(Error::type_error(format!(
                        "%in% list element {v} does not match {}",
                        t.map_or("NA".to_owned(), |t| t.to_string())
                    )));
                }
            }
            Ok(Some(DType::Bool))
        }
        Expr::Call { func, args, named } => call_type(*func, args, named, schema, in_aggregate),
    }
}

fn comparable(a: Ty, b: Ty) -> bool {
    match (a, b) {
        (None, _) | (_, None) => true,
        (Some(a), Some(b)) => a == b || (a.is_numeric() && b.is_numeric()),
    }
}

fn binary_type(op: BinaryOp, l: Ty, r: Ty) -> Result<Ty> {
    let show = |t: Ty| t.map_or("NA".to_owned(), |t| t.to_string());
    if op.is_arithmetic() {
        return match (l, r) {
            (Some(a), _) if !a.is_numeric() => Err(Error::type_error(format!(
                "`{}` needs numbers, got {a}",
                op.symbol()
            ))),
            (_, Some(b)) if !b.is_numeric() => Err(Error::type_error(format!(
                "`{}` needs numbers, got {b}",
                op.symbol()
            ))),
            (Some(DType::Float), _) | (_, Some(DType::Float)) => Ok(Some(DType::Float)),
            (Some(DType::Int), _) | (_, Some(DType::Int)) => Ok(Some(DType::Int)),
            _ => Ok(None),
        };
    }
    if op.is_comparison() {
        if !comparable(l, r) {
            return Err(Error::type_error(format!(
                "cannot compare {} {} {}",
                show(l),
                op.symbol(),
                show(r)
            )));
        }
        return Ok(Some(DType::Bool));
    }
    for t in [l, r].into_iter().flatten() {
        if t != DType::Bool {
            return Err(Error::type_error(format!(
                "`{}` needs bools, got {t}",
                op.symbol()
            )));
        }
    }
    Ok(Some(DType::Bool))
}

fn arity(func: Func, args: &[Expr], expected: usize) -> Result<()> {
    if args.len() != expected {
        return Err(Error::Arity {
            func: func.name().to_owned(),
            expected: expected.to_string(),
            found: args.len(),
        });
    }
    Ok(())
}

fn call_type(
    func: Func,
    args: &[Expr],
    named: &[(String, Expr)],
    schema: &Schema,
    in_aggregate: bool,
) -> Result<Ty> {
    if func.is_aggregate() && in_aggregate {
        return Err(Error::type_error(format!(
            "aggregate {}() cannot be nested inside another aggregate",
            func.name()
        )));
    }
    if func != Func::Paste {
        if let Some((k, _)) = named.first() {
            return Err(Error::type_error(format!(
                "{}() has no argument named `{k}`",
                func.name()
            )));
        }
    }
    let inner_agg = in_aggregate || func.is_aggregate();
    let arg_types = args
        .iter()
        .map(|a| infer(a, schema, inner_agg))
        .collect::<Result<Vec<_>>>()?;
    match func {
        Func::N => {
            arity(func, args, 0)?;
            Ok(Some(DType::Int))
        }
        Func::Mean | Func::Sum | Func::Min | Func::Max => {
            arity(func, args, 1)?;
            let t = arg_types[0].ok_or_else(|| {
                Error::type_error(format!("{}() of an untyped NA", func.name()))
            })?;
            match func {
                Func::Mean if t.is_numeric() => Ok(Some(DType::Float)),
                Func::Sum if t.is_numeric() => Ok(Some(t)),
                Func::Min | Func::Max if t != DType::Bool => Ok(Some(t)),
                _ => Err(Error::type_error(format!("{}() over {t}", func.name()))),
            }
        }
        Func::Ymd => {
            arity(func, args, 1)?;
            match arg_types[0] {
                None | Some(DType::Str) => Ok(Some(DType::Date)),
                Some(t) => Err(Error::type_error(format!("ymd() needs a string, got {t}"))),
            }
        }
        Func::Paste => {
            if args.is_empty() {
                return Err(Error::Arity {
                    func: "paste".to_owned(),
                    expected: "at least 1".to_owned(),
                    found: 0,
                });
            }
            for (k, v) in named {
                if k != "sep" {
                    return Err(Error::type_error(format!("paste() has no argument named `{k}`")));
                }
                if !matches!(v, Expr::Literal(crate::value::Value::Str(_))) {
                    return Err(Error::type_error("paste() sep must be a string literal"));
                }
            }
            Ok(Some(DType::Str))
        }
    }
}
