use std::fmt;

use crate::error::SourceSpan;
use crate::expr::Expr;

/// A syntax node with the location it was read from. Equality ignores the
/// location, so a reprinted and reparsed script compares equal.
#[derive(Debug, Clone)]
pub struct Spanned<T> {
    pub node: T,
    pub span: SourceSpan,
}

impl<T> Spanned<T> {
    pub fn new(node: T, span: SourceSpan) -> Self {
        Spanned { node, span }
    }
}

impl<T: PartialEq> PartialEq for Spanned<T> {
    fn eq(&self, other: &Self) -> bool {
        self.node == other.node
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Script {
    pub statements: Vec<Spanned<Statement>>,
}

/// `target <- pipeline`, or a bare pipeline whose result is displayed.
#[derive(Debug, Clone, PartialEq)]
pub struct Statement {
    pub target: Option<Spanned<String>>,
    pub pipeline: Pipeline,
}

/// A source name followed by verbs applied left to right. Function-call
/// verbs (`filter(t, p)`) are stored in this piped form.
#[derive(Debug, Clone, PartialEq)]
pub struct Pipeline {
    pub source: Spanned<String>,
    pub steps: Vec<Spanned<Verb>>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Verb {
    Select(Vec<String>),
    /// Several predicates are combined with `&`.
    Filter(Vec<Expr>),
    Mutate(Vec<(String, Expr)>),
    Arrange(Vec<Expr>),
    GroupBy(Vec<String>),
    Summarise(Vec<(String, Expr)>),
    Ungroup,
    LeftJoin {
        right: Box<Pipeline>,
        /// `(left column, right column)` pairs.
        by: Vec<(String, String)>,
    },
    Distinct,
    Head(Option<usize>),
    Collect,
}

impl Verb {
    pub fn name(&self) -> &'static str {
        match self {
            Verb::Select(_) => "select",
            Verb::Filter(_) => "filter",
            Verb::Mutate(_) => "mutate",
            Verb::Arrange(_) => "arrange",
            Verb::GroupBy(_) => "group_by",
            Verb::Summarise(_) => "summarise",
            Verb::Ungroup => "ungroup",
            Verb::LeftJoin { .. } => "left_join",
            Verb::Distinct => "distinct",
            Verb::Head(_) => "head",
            Verb::Collect => "collect",
        }
    }
}

fn quoted(s: &str) -> String {
    format!("'{}'", s.replace('\'', "''"))
}

fn join<T>(items: &[T], f: impl Fn(&T) -> String) -> String {
    items.iter().map(f).collect::<Vec<_>>().join(", ")
}

impl fmt::Display for Verb {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let named = |pairs: &[(String, Expr)]| join(pairs, |(n, e)| format!("{n} = {e}"));
        let args = match self {
            Verb::Select(cols) | Verb::GroupBy(cols) => cols.join(", "),
            Verb::Filter(exprs) | Verb::Arrange(exprs) => join(exprs, |e| e.to_string()),
            Verb::Mutate(pairs) | Verb::Summarise(pairs) => named(pairs),
            Verb::Ungroup | Verb::Distinct | Verb::Collect | Verb::Head(None) => String::new(),
            Verb::Head(Some(n)) => n.to_string(),
            Verb::LeftJoin { right, by } => {
                let keys = join(by, |(l, r)| {
                    if l == r {
                        quoted(l)
                    } else {
                        format!("{} = {}", quoted(l), quoted(r))
                    }
                });
                format!("{right}, by = c({keys})")
            }
        };
        write!(f, "{}({args})", self.name())
    }
}

impl fmt::Display for Pipeline {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.source.node)?;
        for step in &self.steps {
            write!(f, " %>% {}", step.node)?;
        }
        Ok(())
    }
}

impl fmt::Display for Statement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(target) = &self.target {
            write!(f, "{} <- ", target.node)?;
        }
        write!(f, "{}", self.pipeline)
    }
}

/// One statement per line in piped form; parsing the output gives back an
/// equal script.
impl fmt::Display for Script {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.statements {
            writeln!(f, "{}", s.node)?;
        }
        Ok(())
    }
}
