//! Lazy verb plans.
//!
//! Every builder returns a new [`Plan`] that shares its input; nothing reads
//! the catalog until [`Plan::collect`] (or [`bind`], which only looks at
//! schemas).

mod bind;

use std::fmt;
use std::sync::Arc;

use crate::catalog::{Catalog, TableSource};
use crate::error::{Error, Result};
use crate::expr::{Expr, UnaryOp};
use crate::frame::Frame;

pub use bind::{bind, BoundPlan};

/// Rows shown by `head()` when no count is given.
pub const DEFAULT_HEAD_ROWS: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    Asc,
    Desc,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SortKey {
    pub expr: Expr,
    pub direction: Direction,
}

impl SortKey {
    pub fn asc(expr: Expr) -> Self {
        SortKey {
            expr,
            direction: Direction::Asc,
        }
    }

    pub fn desc(expr: Expr) -> Self {
        SortKey {
            expr,
            direction: Direction::Desc,
        }
    }

    /// Reads an arrange argument: `desc(e)` sorts descending, anything else
    /// ascending.
    pub fn from_expr(expr: Expr) -> Self {
        match expr {
            Expr::Unary {
                op: UnaryOp::Desc,
                expr,
            } => SortKey::desc(*expr),
            other => SortKey::asc(other),
        }
    }

    /// The arrange argument this key was read from.
    pub fn to_expr(&self) -> Expr {
        match self.direction {
            Direction::Asc => self.expr.clone(),
            Direction::Desc => crate::expr::desc(self.expr.clone()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PlanNode {
    TableRef(String),
    Select { input: Plan, columns: Vec<String> },
    Filter { input: Plan, predicate: Expr },
    Mutate { input: Plan, name: String, expr: Expr },
    Arrange { input: Plan, keys: Vec<SortKey> },
    GroupBy { input: Plan, keys: Vec<String> },
    Summarise { input: Plan, aggs: Vec<(String, Expr)> },
    Ungroup { input: Plan },
    LeftJoin {
        left: Plan,
        right: Plan,
        on: Vec<(String, String)>,
    },
    Distinct { input: Plan },
    Head { input: Plan, n: usize },
}

/// A shared, immutable plan tree. Cloning is cheap and equality structural.
#[derive(Debug, Clone, PartialEq)]
pub struct Plan(Arc<PlanNode>);

fn names<S: Into<String>>(items: impl IntoIterator<Item = S>) -> Vec<String> {
    items.into_iter().map(Into::into).collect()
}

impl Plan {
    pub fn new(node: PlanNode) -> Self {
        Plan(Arc::new(node))
    }

    pub fn table(name: impl Into<String>) -> Self {
        Plan::new(PlanNode::TableRef(name.into()))
    }

    pub fn node(&self) -> &PlanNode {
        &self.0
    }

    pub fn select<S: Into<String>>(&self, columns: impl IntoIterator<Item = S>) -> Plan {
        Plan::new(PlanNode::Select {
            input: self.clone(),
            columns: names(columns),
        })
    }

    pub fn filter(&self, predicate: Expr) -> Plan {
        Plan::new(PlanNode::Filter {
            input: self.clone(),
            predicate,
        })
    }

    pub fn mutate(&self, name: impl Into<String>, expr: Expr) -> Plan {
        Plan::new(PlanNode::Mutate {
            input: self.clone(),
            name: name.into(),
            expr,
        })
    }

    pub fn arrange(&self, keys: Vec<SortKey>) -> Plan {
        Plan::new(PlanNode::Arrange {
            input: self.clone(),
            keys,
        })
    }

    pub fn group_by<S: Into<String>>(&self, keys: impl IntoIterator<Item = S>) -> Plan {
        Plan::new(PlanNode::GroupBy {
            input: self.clone(),
            keys: names(keys),
        })
    }

    pub fn summarise<S: Into<String>>(&self, aggs: impl IntoIterator<Item = (S, Expr)>) -> Plan {
        Plan::new(PlanNode::Summarise {
            input: self.clone(),
            aggs: aggs.into_iter().map(|(n, e)| (n.into(), e)).collect(),
        })
    }

    pub fn ungroup(&self) -> Plan {
        Plan::new(PlanNode::Ungroup {
            input: self.clone(),
        })
    }

    /// Left join on `(left column, right column)` pairs.
    pub fn left_join<L: Into<String>, R: Into<String>>(
        &self,
        right: &Plan,
        on: impl IntoIterator<Item = (L, R)>,
    ) -> Plan {
        Plan::new(PlanNode::LeftJoin {
            left: self.clone(),
            right: right.clone(),
            on: on.into_iter().map(|(l, r)| (l.into(), r.into())).collect(),
        })
    }

    pub fn distinct(&self) -> Plan {
        Plan::new(PlanNode::Distinct {
            input: self.clone(),
        })
    }

    pub fn head(&self, n: usize) -> Plan {
        Plan::new(PlanNode::Head {
            input: self.clone(),
            n,
        })
    }

    pub fn head_default(&self) -> Plan {
        self.head(DEFAULT_HEAD_ROWS)
    }

    pub fn inputs(&self) -> Vec<&Plan> {
        match self.node() {
            PlanNode::TableRef(_) => vec![],
            PlanNode::LeftJoin { left, right, .. } => vec![left, right],
            PlanNode::Select { input, .. }
            | PlanNode::Filter { input, .. }
            | PlanNode::Mutate { input, .. }
            | PlanNode::Arrange { input, .. }
            | PlanNode::GroupBy { input, .. }
            | PlanNode::Summarise { input, .. }
            | PlanNode::Ungroup { input }
            | PlanNode::Distinct { input }
            | PlanNode::Head { input, .. } => vec![input],
        }
    }

    /// Distinct table names referenced by the plan, leftmost first.
    pub fn table_refs(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.walk_tables(&mut out);
        out
    }

    fn walk_tables(&self, out: &mut Vec<String>) {
        if let PlanNode::TableRef(name) = self.node() {
            if !out.contains(name) {
                out.push(name.clone());
            }
        }
        for input in self.inputs() {
            input.walk_tables(out);
        }
    }

    /// Replaces every table reference for which `lookup` returns a plan.
    pub fn substitute(&self, lookup: &impl Fn(&str) -> Option<Plan>) -> Plan {
        let rebuild = |node: PlanNode| Plan::new(node);
        match self.node() {
            PlanNode::TableRef(name) => lookup(name).unwrap_or_else(|| self.clone()),
            PlanNode::Select { input, columns } => rebuild(PlanNode::Select {
                input: input.substitute(lookup),
                columns: columns.clone(),
            }),
            PlanNode::Filter { input, predicate } => rebuild(PlanNode::Filter {
                input: input.substitute(lookup),
                predicate: predicate.clone(),
            }),
            PlanNode::Mutate { input, name, expr } => rebuild(PlanNode::Mutate {
                input: input.substitute(lookup),
                name: name.clone(),
                expr: expr.clone(),
            }),
            PlanNode::Arrange { input, keys } => rebuild(PlanNode::Arrange {
                input: input.substitute(lookup),
                keys: keys.clone(),
            }),
            PlanNode::GroupBy { input, keys } => rebuild(PlanNode::GroupBy {
                input: input.substitute(lookup),
                keys: keys.clone(),
            }),
            PlanNode::Summarise { input, aggs } => rebuild(PlanNode::Summarise {
                input: input.substitute(lookup),
                aggs: aggs.clone(),
            }),
            PlanNode::Ungroup { input } => rebuild(PlanNode::Ungroup {
                input: input.substitute(lookup),
            }),
            PlanNode::LeftJoin { left, right, on } => rebuild(PlanNode::LeftJoin {
                left: left.substitute(lookup),
                right: right.substitute(lookup),
                on: on.clone(),
            }),
            PlanNode::Distinct { input } => rebuild(PlanNode::Distinct {
                input: input.substitute(lookup),
            }),
            PlanNode::Head { input, n } => rebuild(PlanNode::Head {
                input: input.substitute(lookup),
                n: *n,
            }),
        }
    }

    /// Binds against `catalog` and runs the plan in memory. Each distinct
    /// table is materialized once per call.
    pub fn collect(&self, catalog: &Catalog) -> Result<Frame> {
        let bound = bind(self, catalog)?;
        for name in self.table_refs() {
            if let Some(TableSource::RemoteTable { .. }) = catalog.source(&name) {
                return Err(Error::RemoteNotExecutable(name));
            }
        }
        crate::exec::execute(&bound, catalog)
    }

    fn fmt_tree(&self, f: &mut fmt::Formatter<'_>, depth: usize) -> fmt::Result {
        let pad = "  ".repeat(depth);
        let list = |items: &[String]| items.join(", ");
        match self.node() {
            PlanNode::TableRef(name) => writeln!(f, "{pad}Table {name}")?,
            PlanNode::Select { columns, .. } => writeln!(f, "{pad}Select {}", list(columns))?,
            PlanNode::Filter { predicate, .. } => writeln!(f, "{pad}Filter {predicate}")?,
            PlanNode::Mutate { name, expr, .. } => writeln!(f, "{pad}Mutate {name} = {expr}")?,
            PlanNode::Arrange { keys, .. } => {
                let keys: Vec<String> = keys.iter().map(|k| k.to_expr().to_string()).collect();
                writeln!(f, "{pad}Arrange {}", list(&keys))?
            }
            PlanNode::GroupBy { keys, .. } => writeln!(f, "{pad}GroupBy {}", list(keys))?,
            PlanNode::Summarise { aggs, .. } => {
                let aggs: Vec<String> = aggs.iter().map(|(n, e)| format!("{n} = {e}")).collect();
                writeln!(f, "{pad}Summarise {}", list(&aggs))?
            }
            PlanNode::Ungroup { .. } => writeln!(f, "{pad}Ungroup")?,
            PlanNode::LeftJoin { on, .. } => {
                let on: Vec<String> = on.iter().map(|(l, r)| format!("{l} = {r}")).collect();
                writeln!(f, "{pad}LeftJoin {}", list(&on))?
            }
            PlanNode::Distinct { .. } => writeln!(f, "{pad}Distinct")?,
            PlanNode::Head { n, .. } => writeln!(f, "{pad}Head {n}")?,
        }
        for input in self.inputs() {
            input.fmt_tree(f, depth + 1)?;
        }
        Ok(())
    }
}

/// One line per node, children indented under their parent.
impl fmt::Display for Plan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_tree(f, 0)
    }
}
