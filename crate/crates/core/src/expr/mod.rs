//! Expression trees used by filter, mutate, summarise and arrange.

mod eval;
mod typecheck;

use std::fmt;

use crate::value::{format_date, Value};

pub use eval::{eval_aggregate, eval_column, PreparedAggregate};
pub(crate) use eval::{apply_binary, apply_in, apply_paste, apply_unary, apply_ymd, paste_sep};
pub use typecheck::typecheck;
pub(crate) use typecheck::infer_type;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UnaryOp {
    Not,
    Neg,
    /// Ordering annotation; only meaningful as the outermost arrange key.
    Desc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
    Eq,
    NotEq,
    Lt,
    LtEq,
    Gt,
    GtEq,
    And,
    Or,
}

impl BinaryOp {
    pub fn is_arithmetic(self) -> bool {
        matches!(self, BinaryOp::Add | BinaryOp::Sub | BinaryOp::Mul | BinaryOp::Div)
    }

    pub fn is_comparison(self) -> bool {
        matches!(
            self,
            BinaryOp::Eq | BinaryOp::NotEq | BinaryOp::Lt | BinaryOp::LtEq | BinaryOp::Gt | BinaryOp::GtEq
        )
    }

    pub fn is_logical(self) -> bool {
        matches!(self, BinaryOp::And | BinaryOp::Or)
    }

    /// Binding strength in the script syntax (higher binds tighter).
    pub(crate) fn precedence(self) -> u8 {
        match self {
            BinaryOp::Or => 1,
            BinaryOp::And => 2,
            BinaryOp::Eq
            | BinaryOp::NotEq
            | BinaryOp::Lt
            | BinaryOp::LtEq
            | BinaryOp::Gt
            | BinaryOp::GtEq => 3,
            BinaryOp::Add | BinaryOp::Sub => 4,
            BinaryOp::Mul | BinaryOp::Div => 5,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            BinaryOp::Add => "+",
            BinaryOp::Sub => "-",
            BinaryOp::Mul => "*",
            BinaryOp::Div => "/",
            BinaryOp::Eq => "==",
            BinaryOp::NotEq => "!=",
            BinaryOp::Lt => "<",
            BinaryOp::LtEq => "<=",
            BinaryOp::Gt => ">",
            BinaryOp::GtEq => ">=",
            BinaryOp::And => "&",
            BinaryOp::Or => "|",
        }
    }
}

pub(crate) const IN_PRECEDENCE: u8 = 3;
pub(crate) const UNARY_PRECEDENCE: u8 = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Func {
    N,
    Mean,
    Sum,
    Min,
    Max,
    Ymd,
    Paste,
}

impl Func {
    pub fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "n" => Func::N,
            "mean" => Func::Mean,
            "sum" => Func::Sum,
            "min" => Func::Min,
            "max" => Func::Max,
            "ymd" => Func::Ymd,
            "paste" => Func::Paste,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Func::N => "n",
            Func::Mean => "mean",
            Func::Sum => "sum",
            Func::Min => "min",
            Func::Max => "max",
            Func::Ymd => "ymd",
            Func::Paste => "paste",
        }
    }

    pub fn is_aggregate(self) -> bool {
        matches!(self, Func::N | Func::Mean | Func::Sum | Func::Min | Func::Max)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Column(String),
    Literal(Value),
    Unary {
        op: UnaryOp,
        expr: Box<Expr>,
    },
    Binary {
        op: BinaryOp,
        left: Box<Expr>,
        right: Box<Expr>,
    },
    /// Set membership; the right operand is always a literal list.
    InList {
        expr: Box<Expr>,
        list: Vec<Value>,
    },
    Call {
        func: Func,
        args: Vec<Expr>,
        named: Vec<(String, Expr)>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExprKind {
    Scalar,
    Aggregate,
}

pub fn col(name: &str) -> Expr {
    Expr::Column(name.to_owned())
}

pub fn lit(v: impl Into<Value>) -> Expr {
    Expr::Literal(v.into())
}

pub fn null() -> Expr {
    Expr::Literal(Value::Null)
}

fn call(func: Func, args: Vec<Expr>) -> Expr {
    Expr::Call {
        func,
        args,
        named: Vec::new(),
    }
}

pub fn n() -> Expr {
    call(Func::N, vec![])
}

pub fn mean(e: Expr) -> Expr {
    call(Func::Mean, vec![e])
}

pub fn sum(e: Expr) -> Expr {
    call(Func::Sum, vec![e])
}

pub fn min(e: Expr) -> Expr {
    call(Func::Min, vec![e])
}

pub fn max(e: Expr) -> Expr {
    call(Func::Max, vec![e])
}

pub fn ymd(e: Expr) -> Expr {
    call(Func::Ymd, vec![e])
}

pub fn paste(args: Vec<Expr>, sep: &str) -> Expr {
    Expr::Call {
        func: Func::Paste,
        args,
        named: vec![("sep".to_owned(), lit(sep))],
    }
}

pub fn desc(e: Expr) -> Expr {
    Expr::Unary {
        op: UnaryOp::Desc,
        expr: Box::new(e),
    }
}

impl std::ops::Not for Expr {
    type Output = Expr;

    fn not(self) -> Expr {
        Expr::Unary {
            op: UnaryOp::Not,
            expr: Box::new(self),
        }
    }
}

impl std::ops::Neg for Expr {
    type Output = Expr;

    fn neg(self) -> Expr {
        Expr::Unary {
            op: UnaryOp::Neg,
            expr: Box::new(self),
        }
    }
}

macro_rules! binary_builders {
    ($($fn_name:ident => $op:ident),* $(,)?) => {
        impl Expr {
            $(
                pub fn $fn_name(self, other: Expr) -> Expr {
                    Expr::Binary {
                        op: BinaryOp::$op,
                        left: Box::new(self),
                        right: Box::new(other),
                    }
                }
            )*
        }
    };
}

macro_rules! arithmetic_ops {
    ($($trait:ident :: $method:ident => $op:ident),* $(,)?) => {
        $(
            impl std::ops::$trait for Expr {
                type Output = Expr;

                fn $method(self, other: Expr) -> Expr {
                    Expr::Binary {
                        op: BinaryOp::$op,
                        left: Box::new(self),
                        right: Box::new(other),
                    }
                }
            }
        )*
    };
}

arithmetic_ops! {
    Add::add => Add, Sub::sub => Sub, Mul::mul => Mul, Div::div => Div,
}

binary_builders! {
    eq => Eq, not_eq => NotEq, lt => Lt, lt_eq => LtEq, gt => Gt, gt_eq => GtEq,
    and => And, or => Or,
}

impl Expr {
    pub fn is_in(self, list: Vec<Value>) -> Expr {
        Expr::InList {
            expr: Box::new(self),
            list,
        }
    }

    pub fn kind(&self) -> ExprKind {
        if self.contains_aggregate() {
            ExprKind::Aggregate
        } else {
            ExprKind::Scalar
        }
    }

    pub fn contains_aggregate(&self) -> bool {
        self.any(&mut |e| matches!(e, Expr::Call { func, .. } if func.is_aggregate()))
    }

    pub fn contains_desc(&self) -> bool {
        self.any(&mut |e| matches!(e, Expr::Unary { op: UnaryOp::Desc, .. }))
    }

    /// Pre-order search over the tree.
    pub fn any(&self, pred: &mut impl FnMut(&Expr) -> bool) -> bool {
        if pred(self) {
            return true;
        }
        match self {
            Expr::Column(_) | Expr::Literal(_) => false,
            Expr::Unary { expr, .. } | Expr::InList { expr, .. } => expr.any(pred),
            Expr::Binary { left, right, .. } => left.any(pred) || right.any(pred),
            Expr::Call { args, named, .. } => {
                args.iter().any(|a| a.any(pred)) || named.iter().any(|(_, a)| a.any(pred))
            }
        }
    }

    /// Column names referenced anywhere in the tree, in first-seen order.
    pub fn columns(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        self.collect_columns(&mut out);
        out
    }

    fn collect_columns<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            Expr::Column(c) => {
                if !out.contains(&c.as_str()) {
                    out.push(c);
                }
            }
            Expr::Literal(_) => {}
            Expr::Unary { expr, .. } | Expr::InList { expr, .. } => expr.collect_columns(out),
            Expr::Binary { left, right, .. } => {
                left.collect_columns(out);
                right.collect_columns(out);
            }
            Expr::Call { args, named, .. } => {
                for a in args.iter().chain(named.iter().map(|(_, a)| a)) {
                    a.collect_columns(out);
                }
            }
        }
    }

    pub(crate) fn precedence(&self) -> u8 {
        match self {
            Expr::Binary { op, .. } => op.precedence(),
            Expr::InList { .. } => IN_PRECEDENCE,
            Expr::Unary {
                op: UnaryOp::Not | UnaryOp::Neg,
                ..
            } => UNARY_PRECEDENCE,
            Expr::Literal(Value::Int(i)) if *i < 0 => UNARY_PRECEDENCE,
            Expr::Literal(Value::Float(x)) if x.is_sign_negative() => UNARY_PRECEDENCE,
            _ => u8::MAX,
        }
    }
}

/// Writes a literal in script syntax.
pub(crate) fn fmt_literal(v: &Value, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    match v {
        Value::Null => f.write_str("NA"),
        Value::Int(i) => write!(f, "{i}"),
        Value::Float(x) => write!(f, "{x:?}"),
        Value::Str(s) => write!(f, "'{}'", s.replace('\'', "''")),
        Value::Bool(true) => f.write_str("TRUE"),
        Value::Bool(false) => f.write_str("FALSE"),
        Value::Date(d) => write!(f, "ymd('{}')", format_date(*d)),
    }
}

struct Operand<'a>(&'a Expr, bool);

impl fmt::Display for Operand<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.1 {
            write!(f, "({})", self.0)
        } else {
            write!(f, "{}", self.0)
        }
    }
}

/// Script syntax with the minimum parentheses needed to parse back to the
/// same tree.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Column(c) => f.write_str(c),
            Expr::Literal(v) => fmt_literal(v, f),
            Expr::Unary {
                op: UnaryOp::Desc,
                expr,
            } => write!(f, "desc({expr})"),
            Expr::Unary { op, expr } => {
                let sym = if *op == UnaryOp::Not { "!" } else { "-" };
                write!(f, "{sym}{}", Operand(expr, expr.precedence() <= UNARY_PRECEDENCE))
            }
            Expr::Binary { op, left, right } => {
                let p = op.precedence();
                write!(
                    f,
                    "{} {} {}",
                    Operand(left, left.precedence() < p),
                    op.symbol(),
                    Operand(right, right.precedence() <= p)
                )
            }
            Expr::InList { expr, list } => {
                write!(f, "{} %in% c(", Operand(expr, expr.precedence() < IN_PRECEDENCE))?;
                for (i, v) in list.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    fmt_literal(v, f)?;
                }
                f.write_str(")")
            }
            Expr::Call { func, args, named } => {
                write!(f, "{}(", func.name())?;
                let mut first = true;
                for a in args {
                    if !first {
                        f.write_str(", ")?;
                    }
                    first = false;
                    write!(f, "{a}")?;
                }
                for (k, a) in named {
                    if !first {
                        f.write_str(", ")?;
                    }
                    first = false;
                    write!(f, "{k} = {a}")?;
                }
                f.write_str(")")
            }
        }
    }
}
