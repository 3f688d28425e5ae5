use std::collections::HashSet;

use crate::catalog::Catalog;
use crate::error::{Error, Result};
use crate::expr::{infer_type, typecheck, Expr, ExprKind};
use crate::frame::Schema;
use crate::value::DType;

use super::{Plan, PlanNode};

/// A plan annotated with the schema and grouping of every node.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundPlan {
    plan: Plan,
    schema: Schema,
    groups: Vec<String>,
    inputs: Vec<BoundPlan>,
}

impl BoundPlan {
    pub fn plan(&self) -> &Plan {
        &self.plan
    }

    pub fn node(&self) -> &PlanNode {
        self.plan.node()
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn groups(&self) -> &[String] {
        &self.groups
    }

    pub fn inputs(&self) -> &[BoundPlan] {
        &self.inputs
    }

    pub fn input(&self) -> &BoundPlan {
        &self.inputs[0]
    }
}

/// Resolves table references and checks every node, computing output schemas
/// and grouping keys. Only schemas are consulted; no table is loaded.
pub fn bind(plan: &Plan, catalog: &Catalog) -> Result<BoundPlan> {
    let inputs = plan
        .inputs()
        .into_iter()
        .map(|p| bind(p, catalog))
        .collect::<Result<Vec<_>>>()?;
    let (schema, groups) = match plan.node() {
        PlanNode::TableRef(name) => (catalog.schema(name)?, Vec::new()),
        node => bind_node(node, &inputs)?,
    };
    Ok(BoundPlan {
        plan: plan.clone(),
        schema,
        groups,
        inputs,
    })
}

fn require_column(schema: &Schema, name: &str) -> Result<DType> {
    schema
        .dtype_of(name)
        .ok_or_else(|| Error::UnknownColumn(name.to_owned()))
}

fn scalar(e: &Expr, schema: &Schema, verb: &str) -> Result<Option<DType>> {
    let t = infer_type(e, schema)?;
    if e.kind() == ExprKind::Aggregate {
        return Err(Error::type_error(format!(
            "{verb}() does not accept aggregates such as `{e}`"
        )));
    }
    if e.contains_desc() {
        return Err(Error::type_error("desc() is only allowed as an arrange key"));
    }
    Ok(t)
}

/// Columns referenced outside of any aggregate call.
fn bare_columns(e: &Expr, out: &mut Vec<String>) {
    match e {
        Expr::Column(n) => out.push(n.clone()),
        Expr::Literal(_) => {}
        Expr::Unary { expr, .. } | Expr::InList { expr, .. } => bare_columns(expr, out),
        Expr::Binary { left, right, .. } => {
            bare_columns(left, out);
            bare_columns(right, out);
        }
        Expr::Call { func, args, named } => {
            if !func.is_aggregate() {
                args.iter().for_each(|a| bare_columns(a, out));
                named.iter().for_each(|(_, a)| bare_columns(a, out));
            }
        }
    }
}

fn bind_node(node: &PlanNode, inputs: &[BoundPlan]) -> Result<(Schema, Vec<String>)> {
    let input = &inputs[0];
    let in_schema = &input.schema;
    let in_groups = input.groups.clone();
    match node {
        PlanNode::TableRef(_) => unreachable!("table refs are bound by the caller"),
        PlanNode::Select { columns, .. } => {
            if columns.is_empty() {
                return Err(Error::EmptyProjection);
            }
            let mut fields = Vec::with_capacity(columns.len());
            for c in columns {
                fields.push((c.clone(), require_column(in_schema, c)?));
            }
            let schema = Schema::new(fields)?;
            if let Some(k) = in_groups.iter().find(|k| !schema.contains(k)) {
                return Err(Error::GroupKeyDropped(k.clone()));
            }
            Ok((schema, in_groups))
        }
        PlanNode::Filter { predicate, .. } => {
            match scalar(predicate, in_schema, "filter")? {
                None | Some(DType::Bool) => {}
                Some(t) => {
                    return Err(Error::type_error(format!(
                        "filter() condition `{predicate}` is {t}, not bool"
                    )))
                }
            }
            Ok((in_schema.clone(), in_groups))
        }
        PlanNode::Mutate { name, expr, .. } => {
            let t = scalar(expr, in_schema, "mutate")?
                .or_else(|| in_schema.dtype_of(name))
                .unwrap_or(DType::Str);
            let mut fields = in_schema.fields().to_vec();
            match in_schema.index_of(name) {
                Some(i) => fields[i].1 = t,
                None => fields.push((name.clone(), t)),
            }
            Ok((Schema::new(fields)?, in_groups))
        }
        PlanNode::Arrange { keys, .. } => {
            for k in keys {
                scalar(&k.expr, in_schema, "arrange")?;
            }
            Ok((in_schema.clone(), in_groups))
        }
        PlanNode::GroupBy { keys, .. } => {
            let mut seen = HashSet::new();
            for k in keys {
                require_column(in_schema, k)?;
                if !seen.insert(k) {
                    return Err(Error::DuplicateName(k.clone()));
                }
            }
            Ok((in_schema.clone(), keys.clone()))
        }
        PlanNode::Summarise { aggs, .. } => {
            if aggs.is_empty() {
                return Err(Error::type_error("summarise() needs at least one aggregate"));
            }
            let mut fields: Vec<(String, DType)> = in_groups
                .iter()
                .map(|k| Ok((k.clone(), require_column(in_schema, k)?)))
                .collect::<Result<_>>()?;
            let mut seen = HashSet::new();
            for (name, e) in aggs {
                if in_groups.contains(name) {
                    return Err(Error::NameCollision(name.clone()));
                }
                if !seen.insert(name) {
                    return Err(Error::DuplicateName(name.clone()));
                }
                let t = typecheck(e, in_schema)?;
                if e.kind() != ExprKind::Aggregate {
                    return Err(Error::type_error(format!(
                        "summarise() value `{e}` does not aggregate"
                    )));
                }
                if e.contains_desc() {
                    return Err(Error::type_error("desc() is only allowed as an arrange key"));
                }
                let mut bare = Vec::new();
                bare_columns(e, &mut bare);
                if let Some(c) = bare.first() {
                    return Err(Error::type_error(format!(
                        "column `{c}` in `{e}` must be inside an aggregate"
                    )));
                }
                fields.push((name.clone(), t));
            }
            let mut groups = in_groups;
            groups.pop();
            Ok((Schema::new(fields)?, groups))
        }
        PlanNode::Ungroup { .. } => Ok((in_schema.clone(), Vec::new())),
        PlanNode::LeftJoin { on, .. } => {
            let right = &inputs[1].schema;
            if on.is_empty() {
                return Err(Error::type_error("left_join() needs at least one key"));
            }
            let mut right_keys = HashSet::new();
            for (l, r) in on {
                let lt = require_column(in_schema, l)?;
                let rt = require_column(right, r)?;
                if lt != rt && !(lt.is_numeric() && rt.is_numeric()) {
                    return Err(Error::type_error(format!(
                        "cannot join {l} ({lt}) with {r} ({rt})"
                    )));
                }
                if !right_keys.insert(r.as_str()) {
                    return Err(Error::DuplicateName(r.clone()));
                }
            }
            let mut fields = in_schema.fields().to_vec();
            for (name, t) in right.fields() {
                if right_keys.contains(name.as_str()) {
                    continue;
                }
                if in_schema.contains(name) {
                    return Err(Error::NameCollision(name.clone()));
                }
                fields.push((name.clone(), *t));
            }
            Ok((Schema::new(fields)?, in_groups))
        }
        PlanNode::Distinct { .. } => Ok((in_schema.clone(), in_groups)),
        PlanNode::Head { n, .. } => {
            if *n == 0 {
                return Err(Error::InvalidHead);
            }
            Ok((in_schema.clone(), in_groups))
        }
    }
}
