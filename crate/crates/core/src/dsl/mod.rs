//! Pipeline scripts: parsing, printing and lowering to [`Plan`]s.
//!
//! A script is a sequence of statements, each either `name <- pipeline` or
//! a bare pipeline. Pipelines chain verbs with `%>%` or `|>`; a verb may
//! also be called with its input as the first argument, so
//! `filter(t, x > 1)` and `t %>% filter(x > 1)` are the same statement.

mod ast;
mod lexer;
mod parser;

use std::collections::HashMap;

pub use ast::{Pipeline, Script, Spanned, Statement, Verb};

use crate::catalog::Catalog;
use crate::error::{Error, Result, SourceSpan};
use crate::expr::Expr;
use crate::plan::{bind, BoundPlan, Plan, SortKey};

/// Parses a whole script. The first problem in source order is reported.
pub fn parse_script(text: &str) -> Result<Script> {
    parser::parse_script(text)
}

/// Parses a single expression such as `Dest %in% c('ALB', 'BDL')`.
pub fn parse_expr(text: &str) -> Result<Expr> {
    parser::parse_expr(text)
}

/// A statement turned into a plan, with variables from earlier statements
/// substituted in.
#[derive(Debug, Clone)]
pub struct LoweredStatement {
    pub target: Option<String>,
    pub plan: Plan,
    pub span: SourceSpan,
    /// The plan after the source and after each verb, with the location of
    /// the syntax that produced it. Used to point diagnostics at a verb.
    pub checkpoints: Vec<(Plan, SourceSpan)>,
}

impl LoweredStatement {
    /// Binds the statement, reporting any error at the first verb that
    /// fails.
    pub fn bind(&self, catalog: &Catalog) -> Result<BoundPlan> {
        let mut bound = None;
        for (plan, span) in &self.checkpoints {
            match bind(plan, catalog) {
                Ok(b) => bound = Some(b),
                Err(e) => {
                    return Err(Error::At {
                        span: *span,
                        source: Box::new(e),
                    })
                }
            }
        }
        match bound {
            Some(b) => Ok(b),
            None => bind(&self.plan, catalog),
        }
    }
}

impl Script {
    /// Lowers every statement. A name assigned by an earlier statement
    /// refers to that statement's plan; any other name is a catalog table.
    pub fn lower(&self) -> Vec<LoweredStatement> {
        let mut env: HashMap<String, Plan> = HashMap::new();
        let mut out = Vec::new();
        for stmt in &self.statements {
            let mut checkpoints = Vec::new();
            let plan = lower_pipeline(&stmt.node.pipeline, &env, &mut checkpoints);
            let target = stmt.node.target.as_ref().map(|t| t.node.clone());
            if let Some(name) = &target {
                env.insert(name.clone(), plan.clone());
            }
            out.push(LoweredStatement {
                target,
                plan,
                span: stmt.span,
                checkpoints,
            });
        }
        out
    }
}

fn lower_pipeline(
    pipeline: &Pipeline,
    env: &HashMap<String, Plan>,
    checkpoints: &mut Vec<(Plan, SourceSpan)>,
) -> Plan {
    let source = &pipeline.source;
    let mut plan = env
        .get(&source.node)
        .cloned()
        .unwrap_or_else(|| Plan::table(source.node.clone()));
    checkpoints.push((plan.clone(), source.span));

    for step in &pipeline.steps {
        let span = step.span;
        plan = match &step.node {
            Verb::Select(cols) => plan.select(cols.iter().cloned()),
            Verb::Filter(preds) => {
                let pred = preds
                    .iter()
                    .cloned()
                    .reduce(Expr::and)
                    .expect("parser requires a predicate");
                plan.filter(pred)
            }
            Verb::Mutate(pairs) => {
                for (name, e) in pairs {
                    plan = plan.mutate(name.clone(), e.clone());
                    checkpoints.push((plan.clone(), span));
                }
                continue;
            }
            Verb::Arrange(keys) => plan.arrange(keys.iter().cloned().map(SortKey::from_expr).collect()),
            Verb::GroupBy(keys) => plan.group_by(keys.iter().cloned()),
            Verb::Summarise(aggs) => plan.summarise(aggs.iter().cloned()),
            Verb::Ungroup => plan.ungroup(),
            Verb::LeftJoin { right, by } => {
                let right = lower_pipeline(right, env, checkpoints);
                plan.left_join(&right, by.iter().cloned())
            }
            Verb::Distinct => plan.distinct(),
            Verb::Head(n) => match n {
                Some(n) => plan.head(*n),
                None => plan.head_default(),
            },
            Verb::Collect => continue,
        };
        checkpoints.push((plan.clone(), span));
    }
    plan
}
