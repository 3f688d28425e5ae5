//! SQL code generation for bound plans.
//!
//! Verbs are folded into one `SELECT` block while the block's clauses can
//! still express them; otherwise the block becomes a subquery of a fresh
//! one. Column definitions are inlined, so a reference to a mutated column
//! is replaced by the expression that produced it.

mod ast;
mod pretty;

use std::collections::HashSet;

use crate::error::{Error, Result};
use crate::expr::{apply_binary, apply_in, apply_paste, apply_unary, apply_ymd, typecheck, Expr, Func, UnaryOp};
use crate::frame::Schema;
use crate::plan::{BoundPlan, Direction, PlanNode};
use crate::value::{DType, Value};

use ast::{quote_ident, SqlExpr};

pub use pretty::emit_pretty;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CompileOptions {
    /// Merge compatible verbs into one block. When false every verb gets
    /// its own subquery, which is slower to run but obviously correct.
    pub merge: bool,
}

impl Default for CompileOptions {
    fn default() -> Self {
        CompileOptions { merge: true }
    }
}

/// Compiles a bound plan into a single-line SQL `SELECT` statement.
pub fn compile(plan: &BoundPlan) -> Result<String> {
    compile_with(plan, CompileOptions::default())
}

pub fn compile_with(plan: &BoundPlan, options: CompileOptions) -> Result<String> {
    let mut c = Compiler {
        next_alias: 0,
        merge: options.merge,
    };
    let block = c.block(plan)?;
    Ok(block.render())
}

#[derive(Debug, Clone)]
enum Source {
    Table { name: String, alias: Option<String> },
    Subquery { block: Box<Block>, alias: String },
}

#[derive(Debug, Clone)]
enum From {
    Single(Source),
    Join {
        left: Source,
        right: Source,
        on: Vec<(SqlExpr, SqlExpr)>,
    },
}

#[derive(Debug, Clone)]
struct Block {
    items: Vec<(String, SqlExpr)>,
    from: From,
    wheres: Vec<SqlExpr>,
    group_by: Vec<SqlExpr>,
    havings: Vec<SqlExpr>,
    order_by: Vec<(SqlExpr, Direction)>,
    distinct: bool,
    limit: Option<usize>,
    aggregated: bool,
    /// Items whose definition is more than a plain column reference.
    derived: HashSet<String>,
}

impl Block {
    fn over(from: From, items: Vec<(String, SqlExpr)>) -> Self {
        Block {
            items,
            from,
            wheres: Vec::new(),
            group_by: Vec::new(),
            havings: Vec::new(),
            order_by: Vec::new(),
            distinct: false,
            limit: None,
            aggregated: false,
            derived: HashSet::new(),
        }
    }

    fn def(&self, name: &str) -> Result<SqlExpr> {
        self.items
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, e)| e.clone())
            .ok_or_else(|| Error::UnknownColumn(name.to_owned()))
    }

    /// A bare table, possibly projected, with no other clauses.
    fn simple_table(&self) -> Option<&str> {
        let From::Single(Source::Table { name, alias: None }) = &self.from else {
            return None;
        };
        let passthrough = self.items.iter().all(|(n, e)| {
            matches!(e, SqlExpr::Column { qualifier: None, name } if name == n)
        });
        let bare = self.wheres.is_empty()
            && self.group_by.is_empty()
            && self.havings.is_empty()
            && self.order_by.is_empty()
            && !self.distinct
            && self.limit.is_none()
            && !self.aggregated;
        (passthrough && bare).then_some(name.as_str())
    }

    fn render(&self) -> String {
        let mut sql = String::from("SELECT ");
        if self.distinct {
            sql.push_str("DISTINCT ");
        }
        let items: Vec<String> = self
            .items
            .iter()
            .map(|(name, e)| match e {
                SqlExpr::Column { name: n, .. } if n == name => e.render(),
                _ => format!("{} AS {}", e.render(), quote_ident(name)),
            })
            .collect();
        sql.push_str(&items.join(", "));
        sql.push_str(" FROM ");
        sql.push_str(&self.from.render());
        if let Some(w) = SqlExpr::conjunction(&self.wheres) {
            sql.push_str(" WHERE ");
            sql.push_str(&w.render());
        }
        if !self.group_by.is_empty() {
            let keys: Vec<String> = self.group_by.iter().map(SqlExpr::render).collect();
            sql.push_str(" GROUP BY ");
            sql.push_str(&keys.join(", "));
        }
        if let Some(h) = SqlExpr::conjunction(&self.havings) {
            sql.push_str(" HAVING ");
            sql.push_str(&h.render());
        }
        if !self.order_by.is_empty() {
            let keys: Vec<String> = self
                .order_by
                .iter()
                .map(|(e, dir)| match dir {
                    Direction::Asc => format!("{} ASC NULLS LAST", e.render()),
                    Direction::Desc => format!("{} DESC NULLS FIRST", e.render()),
                })
                .collect();
            sql.push_str(" ORDER BY ");
            sql.push_str(&keys.join(", "));
        }
        if let Some(n) = self.limit {
            sql.push_str(&format!(" LIMIT {n}"));
        }
        sql
    }
}

impl Source {
    fn render(&self) -> String {
        match self {
            Source::Table { name, alias: None } => quote_ident(name),
            Source::Table {
                name,
                alias: Some(a),
            } => format!("{} AS {}", quote_ident(name), quote_ident(a)),
            Source::Subquery { block, alias } => {
                format!("({}) AS {}", block.render(), quote_ident(alias))
            }
        }
    }
}

impl From {
    fn render(&self) -> String {
        match self {
            From::Single(s) => s.render(),
            From::Join { left, right, on } => {
                let conds: Vec<SqlExpr> = on
                    .iter()
                    .map(|(l, r)| SqlExpr::Binary {
                        op: crate::expr::BinaryOp::Eq,
                        left: Box::new(l.clone()),
                        right: Box::new(r.clone()),
                    })
                    .collect();
                let cond = SqlExpr::conjunction(&conds).expect("joins have keys");
                format!("{} LEFT JOIN {} ON {}", left.render(), right.render(), cond.render())
            }
        }
    }
}

/// A block turned into a named source, with its ordering re-expressed over
/// the source's output columns.
struct Wrapped {
    source: Source,
    alias: String,
    columns: Vec<String>,
    order: Vec<(String, Direction)>,
}

struct Compiler {
    next_alias: usize,
    merge: bool,
}

impl Compiler {
    fn alias(&mut self) -> String {
        let a = format!("t{}", self.next_alias);
        self.next_alias += 1;
        a
    }

    fn wrap(&mut self, mut b: Block) -> Wrapped {
        let alias = self.alias();
        let columns: Vec<String> = b.items.iter().map(|(n, _)| n.clone()).collect();
        if let Some(name) = b.simple_table() {
            return Wrapped {
                source: Source::Table {
                    name: name.to_owned(),
                    alias: Some(alias.clone()),
                },
                alias,
                columns,
                order: Vec::new(),
            };
        }
        let mut order = Vec::new();
        let mut hidden = 0;
        for (expr, dir) in b.order_by.clone() {
            if let Some((name, _)) = b.items.iter().find(|(_, d)| *d == expr) {
                order.push((name.clone(), dir));
            } else if !b.distinct {
                let name = loop {
                    let candidate = format!("__ord{hidden}");
                    hidden += 1;
                    if !b.items.iter().any(|(n, _)| *n == candidate) {
                        break candidate;
                    }
                };
                b.items.push((name.clone(), expr));
                order.push((name, dir));
            } else {
                // Extra columns would change what DISTINCT removes.
                order.clear();
                break;
            }
        }
        // An inner ORDER BY only matters when it decides which rows a
        // LIMIT keeps; otherwise the outer block re-sorts.
        if b.limit.is_none() {
            b.order_by.clear();
        }
        Wrapped {
            source: Source::Subquery {
                block: Box::new(b),
                alias: alias.clone(),
            },
            alias,
            columns,
            order,
        }
    }

    fn nest(&mut self, b: Block) -> Block {
        let w = self.wrap(b);
        let items = w
            .columns
            .iter()
            .map(|n| (n.clone(), SqlExpr::column(n)))
            .collect();
        let mut out = Block::over(From::Single(w.source), items);
        out.order_by = w
            .order
            .into_iter()
            .map(|(n, d)| (SqlExpr::column(&n), d))
            .collect();
        out
    }

    /// In reference mode every verb starts from a fresh block.
    fn fresh(&mut self, b: Block) -> Block {
        if self.merge || b.simple_table().is_some() {
            b
        } else {
            self.nest(b)
        }
    }

    fn block(&mut self, plan: &BoundPlan) -> Result<Block> {
        if let PlanNode::TableRef(name) = plan.node() {
            let items = plan
                .schema()
                .names()
                .map(|n| (n.to_owned(), SqlExpr::column(n)))
                .collect();
            return Ok(Block::over(
                From::Single(Source::Table {
                    name: name.clone(),
                    alias: None,
                }),
                items,
            ));
        }
        let input = plan.input();
        let schema = input.schema();
        let b = self.block(input)?;
        match plan.node() {
            PlanNode::TableRef(_) => unreachable!(),
            PlanNode::GroupBy { .. } | PlanNode::Ungroup { .. } => Ok(b),
            PlanNode::Select { columns, .. } => {
                let mut b = self.fresh(b);
                if b.distinct {
                    b = self.nest(b);
                }
                let items = columns
                    .iter()
                    .map(|c| Ok((c.clone(), b.def(c)?)))
                    .collect::<Result<Vec<_>>>()?;
                b.derived.retain(|d| columns.contains(d));
                b.items = items;
                Ok(b)
            }
            PlanNode::Filter { predicate, .. } => {
                let mut b = self.fresh(b);
                if b.distinct || b.limit.is_some() || (b.aggregated && b.group_by.is_empty()) {
                    b = self.nest(b);
                }
                let cond = inline(predicate, &b, schema)?;
                if b.aggregated {
                    b.havings.push(cond);
                } else {
                    b.wheres.push(cond);
                }
                Ok(b)
            }
            PlanNode::Mutate { name, expr, .. } => {
                let mut b = self.fresh(b);
                let uses_derived = expr.columns().iter().any(|c| b.derived.contains(*c));
                if b.aggregated || b.distinct || b.limit.is_some() || uses_derived {
                    b = self.nest(b);
                }
                let def = inline(expr, &b, schema)?;
                match b.items.iter_mut().find(|(n, _)| n == name) {
                    Some(item) => item.1 = def,
                    None => b.items.push((name.clone(), def)),
                }
                b.derived.insert(name.clone());
                Ok(b)
            }
            PlanNode::Arrange { keys, .. } => {
                let mut b = self.fresh(b);
                if b.distinct || b.limit.is_some() {
                    b = self.nest(b);
                }
                // A constant key leaves the order unchanged, and an integer
                // literal in ORDER BY would be read as a column position.
                let mut order = Vec::new();
                for k in keys {
                    let e = inline(&k.expr, &b, schema)?;
                    if !e.is_constant() {
                        order.push((e, k.direction));
                    }
                }
                for old in b.order_by.drain(..) {
                    if !order.iter().any(|(e, _)| *e == old.0) {
                        order.push(old);
                    }
                }
                b.order_by = order;
                Ok(b)
            }
            PlanNode::Summarise { aggs, .. } => {
                let mut b = self.fresh(b);
                if b.aggregated || b.distinct || b.limit.is_some() {
                    b = self.nest(b);
                }
                let mut items = Vec::new();
                let mut keys = Vec::new();
                for k in input.groups() {
                    let def = b.def(k)?;
                    keys.push(def.clone());
                    items.push((k.clone(), def));
                }
                for (name, e) in aggs {
                    items.push((name.clone(), inline(e, &b, schema)?));
                }
                b.derived = items.iter().map(|(n, _)| n.clone()).collect();
                b.items = items;
                b.group_by = keys;
                b.order_by.clear();
                b.aggregated = true;
                Ok(b)
            }
            PlanNode::LeftJoin { on, .. } => {
                let right = self.block(&plan.inputs()[1])?;
                let l = self.wrap(b);
                let r = self.wrap(right);
                let right_keys: Vec<&str> = on.iter().map(|(_, r)| r.as_str()).collect();
                let mut items: Vec<(String, SqlExpr)> = l
                    .columns
                    .iter()
                    .map(|n| (n.clone(), SqlExpr::qualified(&l.alias, n)))
                    .collect();
                for n in &r.columns {
                    if !right_keys.contains(&n.as_str()) {
                        items.push((n.clone(), SqlExpr::qualified(&r.alias, n)));
                    }
                }
                let on = on
                    .iter()
                    .map(|(lk, rk)| {
                        (
                            SqlExpr::qualified(&l.alias, lk),
                            SqlExpr::qualified(&r.alias, rk),
                        )
                    })
                    .collect();
                let order = l
                    .order
                    .iter()
                    .map(|(n, d)| (SqlExpr::qualified(&l.alias, n), *d))
                    .collect();
                let mut out = Block::over(
                    From::Join {
                        left: l.source,
                        right: r.source,
                        on,
                    },
                    items,
                );
                out.order_by = order;
                Ok(out)
            }
            PlanNode::Distinct { .. } => {
                let mut b = self.fresh(b);
                if b.limit.is_some() {
                    b = self.nest(b);
                }
                b.distinct = true;
                let all_selected = b
                    .order_by
                    .iter()
                    .all(|(e, _)| b.items.iter().any(|(_, d)| d == e));
                if !all_selected {
                    b.order_by.clear();
                }
                Ok(b)
            }
            PlanNode::Head { n, .. } => {
                let mut b = self.fresh(b);
                b.limit = Some(b.limit.map_or(*n, |m| m.min(*n)));
                Ok(b)
            }
        }
    }
}

/// Evaluates an expression without columns at compile time.
fn constant(e: &Expr) -> Option<Value> {
    match e {
        Expr::Column(_) => None,
        Expr::Literal(v) => Some(v.clone()),
        Expr::Unary { op, expr } => apply_unary(*op, constant(expr)?).ok(),
        Expr::Binary { op, left, right } => {
            apply_binary(*op, &constant(left)?, &constant(right)?).ok()
        }
        Expr::InList { expr, list } => Some(apply_in(&constant(expr)?, list)),
        Expr::Call { func, args, named } => {
            let vals = args.iter().map(constant).collect::<Option<Vec<_>>>()?;
            match func {
                Func::Ymd => apply_ymd(vals.first()?).ok(),
                Func::Paste => Some(apply_paste(&vals, crate::expr::paste_sep(named))),
                _ => None,
            }
        }
    }
}

fn literal(v: &Value) -> Result<SqlExpr> {
    if let Value::Float(x) = v {
        if !x.is_finite() {
            return Err(Error::Unsupported(format!("the float literal {x}")));
        }
    }
    Ok(SqlExpr::Literal(v.clone()))
}

/// Translates `e` into SQL over the FROM clause of `b`.
fn inline(e: &Expr, b: &Block, schema: &Schema) -> Result<SqlExpr> {
    let rec = |x: &Expr| inline(x, b, schema).map(Box::new);
    Ok(match e {
        Expr::Column(name) => b.def(name)?,
        Expr::Literal(v) => literal(v)?,
        Expr::Unary { op, expr } => match op {
            UnaryOp::Not => SqlExpr::Not(rec(expr)?),
            UnaryOp::Neg => SqlExpr::Neg(rec(expr)?),
            UnaryOp::Desc => {
                return Err(Error::type_error("desc() is only allowed as an arrange key"))
            }
        },
        Expr::Binary { op, left, right } => SqlExpr::Binary {
            op: *op,
            left: rec(left)?,
            right: rec(right)?,
        },
        Expr::InList { expr, list } => {
            for v in list {
                literal(v)?;
            }
            SqlExpr::In {
                expr: rec(expr)?,
                list: list.clone(),
            }
        }
        Expr::Call { func, args, named } => match func {
            Func::N => SqlExpr::CountStar,
            Func::Mean | Func::Min | Func::Max => SqlExpr::Call {
                name: match func {
                    Func::Mean => "AVG",
                    Func::Min => "MIN",
                    _ => "MAX",
                },
                args: vec![inline(&args[0], b, schema)?],
            },
            Func::Sum => {
                let zero = match typecheck(&args[0], schema)? {
                    DType::Float => Value::Float(0.0),
                    _ => Value::Int(0),
                };
                SqlExpr::Call {
                    name: "COALESCE",
                    args: vec![
                        SqlExpr::Call {
                            name: "SUM",
                            args: vec![inline(&args[0], b, schema)?],
                        },
                        SqlExpr::Literal(zero),
                    ],
                }
            }
            Func::Ymd => match constant(e) {
                Some(v) => literal(&v)?,
                None => SqlExpr::Cast {
                    expr: rec(&args[0])?,
                    ty: "DATE",
                },
            },
            Func::Paste => {
                let sep = crate::expr::paste_sep(named);
                let mut parts = Vec::new();
                for (i, a) in args.iter().enumerate() {
                    if i > 0 && !sep.is_empty() {
                        parts.push(SqlExpr::Literal(Value::str(sep)));
                    }
                    let part = inline(a, b, schema)?;
                    parts.push(match typecheck(a, schema)? {
                        DType::Str => part,
                        _ => SqlExpr::Cast {
                            expr: Box::new(part),
                            ty: "VARCHAR",
                        },
                    });
                }
                SqlExpr::Concat(parts)
            }
        },
    })
}
