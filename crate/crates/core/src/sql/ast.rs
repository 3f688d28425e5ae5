//! SQL expression trees and their rendering.

use crate::expr::BinaryOp;
use crate::value::{format_date, Value};

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum SqlExpr {
    Column {
        qualifier: Option<String>,
        name: String,
    },
    Literal(Value),
    Not(Box<SqlExpr>),
    Neg(Box<SqlExpr>),
    Binary {
        op: BinaryOp,
        left: Box<SqlExpr>,
        right: Box<SqlExpr>,
    },
    In {
        expr: Box<SqlExpr>,
        list: Vec<Value>,
    },
    CountStar,
    Call {
        name: &'static str,
        args: Vec<SqlExpr>,
    },
    Cast {
        expr: Box<SqlExpr>,
        ty: &'static str,
    },
    Concat(Vec<SqlExpr>),
}

const ATOM: u8 = 10;
const NEG: u8 = 8;
const NOT: u8 = 3;
const COMPARE: u8 = 4;

fn op_precedence(op: BinaryOp) -> u8 {
    match op {
        BinaryOp::Or => 1,
        BinaryOp::And => 2,
        BinaryOp::Add | BinaryOp::Sub => 5,
        BinaryOp::Mul | BinaryOp::Div => 6,
        _ => COMPARE,
    }
}

fn op_symbol(op: BinaryOp) -> &'static str {
    match op {
        BinaryOp::Eq => "=",
        BinaryOp::NotEq => "<>",
        BinaryOp::And => "AND",
        BinaryOp::Or => "OR",
        other => other.symbol(),
    }
}

pub(crate) fn quote_ident(name: &str) -> String {
    format!("\"{}\"", name.replace('"', "\"\""))
}

pub(crate) fn quote_str(s: &str) -> String {
    format!("'{}'", s.replace('\'', "''"))
}

pub(crate) fn render_literal(v: &Value) -> String {
    match v {
        Value::Null => "NULL".to_owned(),
        Value::Int(i) => i.to_string(),
        Value::Float(x) => format!("{x:?}"),
        Value::Str(s) => quote_str(s),
        Value::Bool(true) => "TRUE".to_owned(),
        Value::Bool(false) => "FALSE".to_owned(),
        Value::Date(d) => format!("DATE {}", quote_str(&format_date(*d))),
    }
}

impl SqlExpr {
    /// True when the value is the same for every row: no column reference
    /// and no aggregate.
    pub(crate) fn is_constant(&self) -> bool {
        match self {
            SqlExpr::Column { .. } | SqlExpr::CountStar => false,
            SqlExpr::Literal(_) => true,
            SqlExpr::Not(e) | SqlExpr::Neg(e) => e.is_constant(),
            SqlExpr::In { expr, .. } | SqlExpr::Cast { expr, .. } => expr.is_constant(),
            SqlExpr::Binary { left, right, .. } => left.is_constant() && right.is_constant(),
            SqlExpr::Call { name, args } => {
                !matches!(*name, "SUM" | "AVG" | "MIN" | "MAX" | "COUNT")
                    && args.iter().all(SqlExpr::is_constant)
            }
            SqlExpr::Concat(parts) => parts.iter().all(SqlExpr::is_constant),
        }
    }

    pub(crate) fn column(name: &str) -> Self {
        SqlExpr::Column {
            qualifier: None,
            name: name.to_owned(),
        }
    }

    pub(crate) fn qualified(qualifier: &str, name: &str) -> Self {
        SqlExpr::Column {
            qualifier: Some(qualifier.to_owned()),
            name: name.to_owned(),
        }
    }

    /// Binding strength; concatenation reports 0 so that it is always
    /// parenthesized as an operand, since engines disagree on where `||`
    /// sits relative to arithmetic.
    fn precedence(&self) -> u8 {
        match self {
            SqlExpr::Literal(Value::Int(i)) if *i < 0 => NEG,
            SqlExpr::Literal(Value::Float(x)) if x.is_sign_negative() => NEG,
            SqlExpr::Column { .. }
            | SqlExpr::Literal(_)
            | SqlExpr::CountStar
            | SqlExpr::Call { .. }
            | SqlExpr::Cast { .. } => ATOM,
            SqlExpr::Neg(_) => NEG,
            SqlExpr::Not(_) => NOT,
            SqlExpr::Binary { op, .. } => op_precedence(*op),
            SqlExpr::In { .. } => COMPARE,
            SqlExpr::Concat(parts) if parts.len() == 1 => parts[0].precedence(),
            SqlExpr::Concat(_) => 0,
        }
    }

    fn wrapped(&self, parens: bool) -> String {
        if parens {
            format!("({})", self.render())
        } else {
            self.render()
        }
    }

    pub(crate) fn render(&self) -> String {
        match self {
            SqlExpr::Column { qualifier, name } => match qualifier {
                Some(q) => format!("{}.{}", quote_ident(q), quote_ident(name)),
                None => quote_ident(name),
            },
            SqlExpr::Literal(v) => render_literal(v),
            SqlExpr::Not(e) => format!("NOT {}", e.wrapped(e.precedence() < NOT)),
            SqlExpr::Neg(e) => format!("-{}", e.wrapped(e.precedence() <= NEG)),
            SqlExpr::Binary { op, left, right } => {
                let p = op_precedence(*op);
                format!(
                    "{} {} {}",
                    left.wrapped(left.precedence() < p),
                    op_symbol(*op),
                    right.wrapped(right.precedence() <= p)
                )
            }
            SqlExpr::In { expr, list } => {
                let items: Vec<String> = list.iter().map(render_literal).collect();
                format!(
                    "{} IN ({})",
                    expr.wrapped(expr.precedence() <= COMPARE),
                    items.join(",")
                )
            }
            SqlExpr::CountStar => "COUNT(*)".to_owned(),
            SqlExpr::Call { name, args } => {
                let args: Vec<String> = args.iter().map(SqlExpr::render).collect();
                format!("{name}({})", args.join(", "))
            }
            SqlExpr::Cast { expr, ty } => format!("CAST({} AS {ty})", expr.render()),
            SqlExpr::Concat(parts) => {
                if parts.len() == 1 {
                    return parts[0].render();
                }
                let parts: Vec<String> = parts
                    .iter()
                    .map(|p| p.wrapped(p.precedence() < ATOM))
                    .collect();
                parts.join(" || ")
            }
        }
    }

    pub(crate) fn conjunction(parts: &[SqlExpr]) -> Option<SqlExpr> {
        let mut it = parts.iter().cloned();
        let first = it.next()?;
        Some(it.fold(first, |acc, p| SqlExpr::Binary {
            op: BinaryOp::And,
            left: Box::new(acc),
            right: Box::new(p),
        }))
    }
}
