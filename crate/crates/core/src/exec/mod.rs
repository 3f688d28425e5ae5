//! In-memory execution of bound plans.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::sync::Arc;

use crate::catalog::Catalog;
use crate::error::{Error, Result};
use crate::expr::{eval_column, PreparedAggregate};
use crate::frame::{Column, Frame};
use crate::plan::{BoundPlan, Direction, PlanNode};
use crate::value::{compare_values, Value};

/// Hashable form of a cell used for grouping, joining and de-duplication.
///
/// Integral floats collapse onto the matching integer, so `1` and `1.0`
/// meet; every NaN is one key and nulls compare equal to each other.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum KeyValue {
    Null,
    Int(i64),
    Float(u64),
    Str(String),
    Bool(bool),
    Date(i32),
}

impl From<&Value> for KeyValue {
    fn from(v: &Value) -> Self {
        match v {
            Value::Null => KeyValue::Null,
            Value::Int(i) => KeyValue::Int(*i),
            Value::Float(x) => {
                if x.is_nan() {
                    KeyValue::Float(f64::NAN.to_bits())
                } else if x.fract() == 0.0 && *x >= -(2f64.powi(63)) && *x < 2f64.powi(63) {
                    KeyValue::Int(*x as i64)
                } else {
                    KeyValue::Float(x.to_bits())
                }
            }
            Value::Str(s) => KeyValue::Str(s.clone()),
            Value::Bool(b) => KeyValue::Bool(*b),
            Value::Date(d) => KeyValue::Date(*d),
        }
    }
}

/// Row partitions keyed by the values of some columns, in order of first
/// appearance. Partitions are disjoint and together cover every row.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupIndex {
    keys: Vec<String>,
    partitions: Vec<(Vec<Value>, Vec<usize>)>,
}

impl GroupIndex {
    pub fn build(frame: &Frame, keys: &[String]) -> Result<Self> {
        let cols = keys
            .iter()
            .map(|k| frame.column(k).ok_or_else(|| Error::UnknownColumn(k.clone())))
            .collect::<Result<Vec<_>>>()?;
        let mut slots: HashMap<Vec<KeyValue>, usize> = HashMap::new();
        let mut partitions: Vec<(Vec<Value>, Vec<usize>)> = Vec::new();
        for row in 0..frame.num_rows() {
            let key: Vec<KeyValue> = cols.iter().map(|c| KeyValue::from(c.get(row))).collect();
            let slot = *slots.entry(key).or_insert_with(|| {
                let values = cols.iter().map(|c| c.get(row).clone()).collect();
                partitions.push((values, Vec::new()));
                partitions.len() - 1
            });
            partitions[slot].1.push(row);
        }
        Ok(GroupIndex {
            keys: keys.to_vec(),
            partitions,
        })
    }

    pub fn keys(&self) -> &[String] {
        &self.keys
    }

    /// `(key values, row indices)` per partition.
    pub fn partitions(&self) -> &[(Vec<Value>, Vec<usize>)] {
        &self.partitions
    }

    pub fn len(&self) -> usize {
        self.partitions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.partitions.is_empty()
    }
}

/// Runs a bound plan. Every distinct table is loaded from the catalog once.
pub fn execute(plan: &BoundPlan, catalog: &Catalog) -> Result<Frame> {
    let mut tables = HashMap::new();
    run(plan, catalog, &mut tables)
}

fn run(plan: &BoundPlan, catalog: &Catalog, tables: &mut HashMap<String, Frame>) -> Result<Frame> {
    if let PlanNode::TableRef(name) = plan.node() {
        if let Some(f) = tables.get(name) {
            return Ok(f.clone());
        }
        let f = catalog.materialize(name)?;
        if f.schema() != *plan.schema() {
            return Err(Error::SchemaMismatch(format!(
                "table `{name}` is {} but was bound as {}",
                f.schema(),
                plan.schema()
            )));
        }
        tables.insert(name.clone(), f.clone());
        return Ok(f);
    }
    let input = run(plan.input(), catalog, tables)?;
    let groups = plan.groups().to_vec();
    let out = match plan.node() {
        PlanNode::TableRef(_) => unreachable!(),
        PlanNode::Select { columns, .. } => {
            let cols = columns
                .iter()
                .map(|c| {
                    let i = input
                        .column_index(c)
                        .ok_or_else(|| Error::UnknownColumn(c.clone()))?;
                    Ok(input.columns()[i].clone())
                })
                .collect::<Result<Vec<_>>>()?;
            Frame::from_parts(cols, groups, input.num_rows())
        }
        PlanNode::Filter { predicate, .. } => {
            let mask = eval_column(predicate, &input)?;
            let rows: Vec<usize> = (0..input.num_rows())
                .filter(|&r| mask.get(r) == &Value::Bool(true))
                .collect();
            input.take(&rows)
        }
        PlanNode::Mutate { name, expr, .. } => {
            let dtype = plan
                .schema()
                .dtype_of(name)
                .expect("bound schema holds the mutated column");
            let computed = eval_column(expr, &input)?;
            let col = Arc::new(Column::from_parts_unchecked(
                name.clone(),
                dtype,
                computed.cells().to_vec(),
            ));
            let mut cols = input.columns().to_vec();
            match input.column_index(name) {
                Some(i) => cols[i] = col,
                None => cols.push(col),
            }
            Frame::from_parts(cols, groups, input.num_rows())
        }
        PlanNode::Arrange { keys, .. } => {
            let key_cols = keys
                .iter()
                .map(|k| Ok((eval_column(&k.expr, &input)?, k.direction)))
                .collect::<Result<Vec<_>>>()?;
            let mut rows: Vec<usize> = (0..input.num_rows()).collect();
            rows.sort_by(|&a, &b| {
                for (col, dir) in &key_cols {
                    let ord = sort_cmp(col.get(a), col.get(b), *dir);
                    if ord != Ordering::Equal {
                        return ord;
                    }
                }
                Ordering::Equal
            });
            input.take(&rows)
        }
        PlanNode::GroupBy { .. } | PlanNode::Ungroup { .. } => {
            Frame::from_parts(input.columns().to_vec(), groups, input.num_rows())
        }
        PlanNode::Summarise { aggs, .. } => summarise(&input, plan, aggs)?,
        PlanNode::LeftJoin { on, .. } => {
            let right = run(&plan.inputs()[1], catalog, tables)?;
            left_join(&input, &right, on, plan)?
        }
        PlanNode::Distinct { .. } => {
            let all: Vec<String> = input.schema().names().map(str::to_owned).collect();
            let index = GroupIndex::build(&input, &all)?;
            let mut rows: Vec<usize> = index.partitions().iter().map(|(_, r)| r[0]).collect();
            rows.sort_unstable();
            input.take(&rows)
        }
        PlanNode::Head { n, .. } => {
            let rows: Vec<usize> = (0..input.num_rows().min(*n)).collect();
            input.take(&rows)
        }
    };
    Ok(out)
}

/// Ordering for arrange: nulls go last ascending and first descending.
fn sort_cmp(a: &Value, b: &Value, dir: Direction) -> Ordering {
    let ord = match (a.is_null(), b.is_null()) {
        (true, true) => Ordering::Equal,
        (true, false) => Ordering::Greater,
        (false, true) => Ordering::Less,
        _ => compare_values(a, b).unwrap_or(Ordering::Equal),
    };
    match dir {
        Direction::Asc => ord,
        Direction::Desc => ord.reverse(),
    }
}

fn summarise(input: &Frame, plan: &BoundPlan, aggs: &[(String, crate::expr::Expr)]) -> Result<Frame> {
    let keys = input.groups().to_vec();
    let partitions: Vec<(Vec<Value>, Vec<usize>)> = if keys.is_empty() {
        vec![(Vec::new(), (0..input.num_rows()).collect())]
    } else {
        GroupIndex::build(input, &keys)?.partitions
    };
    let schema = plan.schema();
    let mut cells: Vec<Vec<Value>> = vec![Vec::with_capacity(partitions.len()); schema.len()];
    for (values, _) in &partitions {
        for (i, v) in values.iter().enumerate() {
            cells[i].push(v.clone());
        }
    }
    for (j, (_, e)) in aggs.iter().enumerate() {
        let prepared = PreparedAggregate::new(e, input)?;
        let out = &mut cells[keys.len() + j];
        for (_, rows) in &partitions {
            out.push(prepared.eval(rows)?);
        }
    }
    let cols = schema
        .fields()
        .iter()
        .zip(cells)
        .map(|((n, t), c)| Arc::new(Column::from_parts_unchecked(n.clone(), *t, c)))
        .collect();
    Ok(Frame::from_parts(cols, plan.groups().to_vec(), partitions.len()))
}

fn left_join(left: &Frame, right: &Frame, on: &[(String, String)], plan: &BoundPlan) -> Result<Frame> {
    let lookup = |f: &Frame, name: &str| -> Result<usize> {
        f.column_index(name)
            .ok_or_else(|| Error::UnknownColumn(name.to_owned()))
    };
    let left_keys = on.iter().map(|(l, _)| lookup(left, l)).collect::<Result<Vec<_>>>()?;
    let right_keys = on.iter().map(|(_, r)| lookup(right, r)).collect::<Result<Vec<_>>>()?;
    let key_of = |f: &Frame, idx: &[usize], row: usize| -> Option<Vec<KeyValue>> {
        idx.iter()
            .map(|&i| {
                let v = f.columns()[i].get(row);
                (!v.is_null()).then(|| KeyValue::from(v))
            })
            .collect()
    };
    let mut table: HashMap<Vec<KeyValue>, Vec<usize>> = HashMap::new();
    for row in 0..right.num_rows() {
        if let Some(k) = key_of(right, &right_keys, row) {
            table.entry(k).or_default().push(row);
        }
    }
    let mut left_rows = Vec::new();
    let mut right_rows: Vec<Option<usize>> = Vec::new();
    for row in 0..left.num_rows() {
        match key_of(left, &left_keys, row).and_then(|k| table.get(&k)) {
            Some(matches) => {
                for &m in matches {
                    left_rows.push(row);
                    right_rows.push(Some(m));
                }
            }
            None => {
                left_rows.push(row);
                right_rows.push(None);
            }
        }
    }
    let mut cols: Vec<Arc<Column>> = left
        .columns()
        .iter()
        .map(|c| Arc::new(c.take(&left_rows)))
        .collect();
    for (i, c) in right.columns().iter().enumerate() {
        if right_keys.contains(&i) {
            continue;
        }
        let cells = right_rows
            .iter()
            .map(|r| r.map_or(Value::Null, |r| c.get(r).clone()))
            .collect();
        cols.push(Arc::new(Column::from_parts_unchecked(
            c.name().to_owned(),
            c.dtype(),
            cells,
        )));
    }
    Ok(Frame::from_parts(cols, plan.groups().to_vec(), left_rows.len()))
}
