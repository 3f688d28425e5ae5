//! Runs compiled SQL on an embedded engine and converts the rows back into
//! [`Value`]s so they can be compared with the in-memory executor.
//!
//! The engine is SQLite through the system `python3`. Set
//! `VERBFRAME_SQL_ENGINE=none` to skip SQL checks; any other value, or no
//! value, uses python when `import sqlite3` works.

use std::io::Write;
use std::process::{Command, Stdio};

use serde_json::{json, Value as Json};
use verbframe::value::{format_date, parse_iso_date};
use verbframe::{DType, Schema, Value};

const DRIVER: &str = r#"
import json, sqlite3, sys, datetime, math

def vf_date(s):
    if s is None:
        return None
    parts = str(s).split('-')
    if len(parts) != 3 or len(parts[0]) != 4 or not all(p.isdigit() for p in parts) or not all(1 <= len(p) <= 2 for p in parts[1:]):
        raise ValueError('bad date ' + str(s))
    return datetime.date(int(parts[0]), int(parts[1]), int(parts[2])).isoformat()

def cell(v):
    if isinstance(v, float) and not math.isfinite(v):
        return repr(v)
    return v

out = []
for job in json.load(sys.stdin):
    con = sqlite3.connect(':memory:')
    con.create_function('vf_date', 1, vf_date, deterministic=True)
    try:
        for name, t in job['tables'].items():
            cols = ', '.join('"%s" %s' % (c, ty) for c, ty in zip(t['columns'], t['types']))
            con.execute('CREATE TABLE "%s" (%s)' % (name, cols))
            marks = ', '.join('?' for _ in t['columns'])
            con.executemany('INSERT INTO "%s" VALUES (%s)' % (name, marks), t['rows'])
        rows = con.execute(job['sql']).fetchall()
        out.append({'ok': [[cell(v) for v in r] for r in rows]})
    except Exception as e:
        out.append({'err': '%s: %s' % (type(e).__name__, e)})
    con.close()
json.dump(out, sys.stdout)
"#;

pub fn engine_available() -> bool {
    if std::env::var("VERBFRAME_SQL_ENGINE").is_ok_and(|v| v == "none") {
        return false;
    }
    Command::new("python3")
        .args(["-c", "import sqlite3"])
        .stdout(Stdio::null())
        .stderr(Stdio::null())
        .status()
        .is_ok_and(|s| s.success())
}

pub struct Table<'a> {
    pub name: &'a str,
    pub schema: &'a Schema,
    pub rows: &'a [Vec<Value>],
}

pub struct Job<'a> {
    pub tables: Vec<Table<'a>>,
    pub sql: String,
    pub out_types: Vec<DType>,
}

fn sql_type(t: DType) -> &'static str {
    match t {
        DType::Int | DType::Bool => "INTEGER",
        DType::Float => "REAL",
        DType::Str | DType::Date => "TEXT",
    }
}

fn to_json(v: &Value) -> Json {
    match v {
        Value::Null => Json::Null,
        Value::Int(i) => json!(i),
        Value::Float(x) => json!(x),
        Value::Str(s) => json!(s),
        Value::Bool(b) => json!(i64::from(*b)),
        Value::Date(d) => json!(format_date(*d)),
    }
}

fn from_json(j: &Json, t: DType) -> Result<Value, String> {
    if j.is_null() {
        return Ok(Value::Null);
    }
    let bad = || format!("cannot read {j} as {t:?}");
    Ok(match t {
        DType::Int => Value::Int(j.as_i64().ok_or_else(bad)?),
        DType::Float => match j {
            Json::String(s) => Value::Float(match s.as_str() {
                "inf" => f64::INFINITY,
                "-inf" => f64::NEG_INFINITY,
                _ => f64::NAN,
            }),
            _ => Value::Float(j.as_f64().ok_or_else(bad)?),
        },
        DType::Str => Value::Str(j.as_str().ok_or_else(bad)?.to_owned()),
        DType::Bool => Value::Bool(j.as_i64().ok_or_else(bad)? != 0),
        DType::Date => Value::Date(parse_iso_date(j.as_str().ok_or_else(bad)?).ok_or_else(bad)?),
    })
}

/// Runs every job in one engine process. Each result is the rows of the
/// query or the engine's error message.
pub fn run_batch(jobs: &[Job]) -> Vec<Result<Vec<Vec<Value>>, String>> {
    let payload: Vec<Json> = jobs
        .iter()
        .map(|job| {
            let tables: serde_json::Map<String, Json> = job
                .tables
                .iter()
                .map(|t| {
                    let fields = t.schema.fields();
                    let body = json!({
                        "columns": fields.iter().map(|(n, _)| n.clone()).collect::<Vec<_>>(),
                        "types": fields.iter().map(|(_, ty)| sql_type(*ty)).collect::<Vec<_>>(),
                        "rows": t.rows.iter().map(|r| r.iter().map(to_json).collect::<Vec<_>>()).collect::<Vec<_>>(),
                    });
                    (t.name.to_owned(), body)
                })
                .collect();
            json!({ "tables": tables, "sql": adapt(&job.sql) })
        })
        .collect();

    let mut child = Command::new("python3")
        .args(["-c", DRIVER])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .expect("python3 was found by engine_available");
    child
        .stdin
        .take()
        .expect("piped stdin")
        .write_all(payload_text(&payload).as_bytes())
        .expect("write to python");
    let output = child.wait_with_output().expect("python3 runs");
    assert!(
        output.status.success(),
        "sql driver failed: {}",
        String::from_utf8_lossy(&output.stderr)
    );
    let results: Vec<Json> = serde_json::from_slice(&output.stdout).expect("driver prints json");
    results
        .iter()
        .zip(jobs)
        .map(|(r, job)| {
            if let Some(e) = r.get("err") {
                return Err(e.as_str().unwrap_or("error").to_owned());
            }
            let rows = r["ok"].as_array().ok_or("missing rows")?;
            rows.iter()
                .map(|row| {
                    let cells = row.as_array().ok_or("row is not a list")?;
                    if cells.len() != job.out_types.len() {
                        return Err(format!(
                            "engine returned {} columns, expected {}",
                            cells.len(),
                            job.out_types.len()
                        ));
                    }
                    cells
                        .iter()
                        .zip(&job.out_types)
                        .map(|(c, t)| from_json(c, *t))
                        .collect()
                })
                .collect()
        })
        .collect()
}

fn payload_text(payload: &[Json]) -> String {
    serde_json::to_string(payload).expect("json serializes")
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Word(String),
    Quoted(String),
    Punct(char),
    Space(String),
}

fn tokenize(sql: &str) -> Vec<Tok> {
    let chars: Vec<char> = sql.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let start = i;
        if c == '\'' || c == '"' {
            i += 1;
            loop {
                if i >= chars.len() {
                    break;
                }
                if chars[i] == c {
                    if chars.get(i + 1) == Some(&c) {
                        i += 2;
                        continue;
                    }
                    i += 1;
                    break;
                }
                i += 1;
            }
            out.push(Tok::Quoted(chars[start..i].iter().collect()));
        } else if c.is_whitespace() {
            while i < chars.len() && chars[i].is_whitespace() {
                i += 1;
            }
            out.push(Tok::Space(chars[start..i].iter().collect()));
        } else if c.is_alphanumeric() || c == '_' || c == '.' {
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_' || chars[i] == '.') {
                i += 1;
            }
            out.push(Tok::Word(chars[start..i].iter().collect()));
        } else {
            out.push(Tok::Punct(c));
            i += 1;
        }
    }
    out
}

fn is_word(t: &Tok, w: &str) -> bool {
    matches!(t, Tok::Word(x) if x.eq_ignore_ascii_case(w))
}

/// Rewrites the standard date syntax into calls to the driver's `vf_date`,
/// which stores dates as ISO text.
pub fn adapt(sql: &str) -> String {
    let toks = tokenize(sql);
    let mut out = String::new();
    let mut i = 0;
    // Stack of open parens; `true` marks a `CAST(` being rewritten.
    let mut casts: Vec<(bool, usize)> = Vec::new();
    let mut pending_cast = false;
    while i < toks.len() {
        let t = &toks[i];
        let next = |from: usize| (from..toks.len()).find(|&j| !matches!(toks[j], Tok::Space(_)));
        if is_word(t, "DATE") {
            if let Some(j) = next(i + 1) {
                if let Tok::Quoted(q) = &toks[j] {
                    if q.starts_with('\'') {
                        out.push_str(&format!("vf_date({q})"));
                        i = j + 1;
                        continue;
                    }
                }
            }
        }
        if is_word(t, "CAST") {
            pending_cast = true;
            out.push_str("vf_cast");
            i += 1;
            continue;
        }
        match t {
            Tok::Punct('(') => {
                casts.push((pending_cast, out.len()));
                pending_cast = false;
                out.push('(');
            }
            Tok::Punct(')') => {
                out.push(')');
                casts.pop();
            }
            Tok::Word(w) if w.eq_ignore_ascii_case("AS") && casts.last().is_some_and(|c| c.0) => {
                // `vf_cast(e AS T)` becomes `vf_date(e)` for dates and a plain
                // cast otherwise.
                let Some(j) = next(i + 1) else { break };
                let ty = match &toks[j] {
                    Tok::Word(w) => w.clone(),
                    other => panic!("unexpected cast target {other:?}"),
                };
                let open = casts.last().expect("checked").1;
                let call_start = open - "vf_cast".len();
                let inner = out[open + 1..].trim_end().to_owned();
                out.truncate(call_start);
                if ty.eq_ignore_ascii_case("DATE") {
                    out.push_str(&format!("vf_date({inner}"));
                } else {
                    out.push_str(&format!("CAST({inner} AS {ty}"));
                }
                casts.last_mut().expect("checked").0 = false;
                i = j + 1;
                continue;
            }
            Tok::Word(w) | Tok::Quoted(w) | Tok::Space(w) => out.push_str(w),
            Tok::Punct(c) => out.push(*c),
        }
        i += 1;
    }
    out
}

pub fn adapt_examples() -> Vec<(&'static str, &'static str)> {
    vec![
        ("SELECT DATE '2012-01-05' AS \"d\"", "SELECT vf_date('2012-01-05') AS \"d\""),
        (
            "SELECT CAST(CAST(\"Y\" AS VARCHAR) || '-01' AS DATE) FROM \"t\"",
            "SELECT vf_date(CAST(\"Y\" AS VARCHAR) || '-01') FROM \"t\"",
        ),
        ("SELECT 'CAST(x AS DATE)' FROM \"t\"", "SELECT 'CAST(x AS DATE)' FROM \"t\""),
    ]
}

/// Result of comparing random pipelines on both backends.
#[derive(Debug, Default)]
pub struct Outcome {
    pub checked: usize,
    /// Cases where the executor itself reported an error, such as an
    /// integer overflow, so there is nothing to compare.
    pub skipped: usize,
    pub failures: Vec<String>,
}

fn tuple_close(a: &[Value], b: &[Value]) -> bool {
    a.len() == b.len()
        && a.iter()
            .zip(b)
            .all(|(x, y)| super::compare::values_close(x, y, 1e-9))
}

fn frame_rows(f: &verbframe::Frame) -> Vec<Vec<Value>> {
    (0..f.num_rows()).map(|i| f.row(i)).collect()
}

/// Output column positions of the sort keys of an `arrange` that decides
/// the final row order, if the keys are all plain output columns.
fn order_keys(plan: &verbframe::BoundPlan) -> Option<Vec<usize>> {
    use verbframe::plan::PlanNode;
    let out = plan.schema();
    let mut node = plan;
    loop {
        match node.node() {
            PlanNode::Head { .. }
            | PlanNode::Filter { .. }
            | PlanNode::Select { .. }
            | PlanNode::Mutate { .. } => node = node.input(),
            PlanNode::Arrange { keys, .. } => {
                return keys
                    .iter()
                    .map(|k| match &k.expr {
                        verbframe::Expr::Column(c) if node.schema().dtype_of(c) == out.dtype_of(c) => {
                            out.index_of(c)
                        }
                        _ => None,
                    })
                    .collect();
            }
            _ => return None,
        }
    }
}

/// Checks engine rows against the executor.
///
/// Without a final `head` the two must hold the same rows as multisets.
/// With one, the engine may keep any rows of the unlimited result as long
/// as it keeps the same number. When an `arrange` decides the final order,
/// the sort key sequences must also agree.
pub fn check_rows(
    plan: &verbframe::BoundPlan,
    exec_rows: &[Vec<Value>],
    pool: &[Vec<Value>],
    sql_rows: &[Vec<Value>],
) -> Result<(), String> {
    if sql_rows.len() != exec_rows.len() {
        return Err(format!(
            "engine returned {} rows, executor {}",
            sql_rows.len(),
            exec_rows.len()
        ));
    }
    let mut used = vec![false; pool.len()];
    for row in sql_rows {
        let hit = (0..pool.len()).find(|&i| !used[i] && tuple_close(&pool[i], row));
        match hit {
            Some(i) => used[i] = true,
            None => return Err(format!("engine row {row:?} is not in the executor result")),
        }
    }
    if let Some(keys) = order_keys(plan) {
        for (i, (s, e)) in sql_rows.iter().zip(exec_rows).enumerate() {
            let sk: Vec<Value> = keys.iter().map(|&k| s[k].clone()).collect();
            let ek: Vec<Value> = keys.iter().map(|&k| e[k].clone()).collect();
            if !tuple_close(&sk, &ek) {
                return Err(format!("row {i} sort keys differ: engine {sk:?}, executor {ek:?}"));
            }
        }
    }
    Ok(())
}

/// Runs SQL-safe random pipelines for each seed through both backends.
pub fn sql_differential(seeds: std::ops::Range<u64>) -> Outcome {
    use rand::SeedableRng;
    use verbframe::plan::PlanNode;

    struct Case {
        label: String,
        world: super::gen::World,
        bound: verbframe::BoundPlan,
        exec_rows: Vec<Vec<Value>>,
        pool: Vec<Vec<Value>>,
        sql: String,
    }

    let mut outcome = Outcome::default();
    let mut cases = Vec::new();
    for seed in seeds {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let world = super::gen::world(&mut rng);
        let script = super::gen::sql_safe_pipeline(&mut rng);
        let catalog = world.catalog();
        let label = format!("seed {seed}: {script}");
        let bound = match verbframe::dsl::parse_script(&script)
            .map_err(|e| e.to_string())
            .and_then(|s| s.lower()[0].bind(&catalog).map_err(|e| e.to_string()))
        {
            Ok(b) => b,
            Err(e) => {
                outcome.failures.push(format!("{label}\ndoes not bind: {e}"));
                continue;
            }
        };
        let sql = match verbframe::sql::compile(&bound) {
            Ok(s) => s,
            Err(e) => {
                outcome.failures.push(format!("{label}\ndoes not compile: {e}"));
                continue;
            }
        };
        let Ok(frame) = verbframe::exec::execute(&bound, &catalog) else {
            outcome.skipped += 1;
            continue;
        };
        let pool = match bound.node() {
            PlanNode::Head { .. } => match verbframe::exec::execute(bound.input(), &catalog) {
                Ok(f) => frame_rows(&f),
                Err(_) => {
                    outcome.skipped += 1;
                    continue;
                }
            },
            _ => frame_rows(&frame),
        };
        cases.push(Case {
            label,
            world,
            bound,
            exec_rows: frame_rows(&frame),
            pool,
            sql,
        });
    }

    let (schema_a, schema_b) = (super::gen::schema_a(), super::gen::schema_b());
    let jobs: Vec<Job> = cases
        .iter()
        .map(|c| Job {
            tables: vec![
                Table {
                    name: "a",
                    schema: &schema_a,
                    rows: &c.world.a,
                },
                Table {
                    name: "b",
                    schema: &schema_b,
                    rows: &c.world.b,
                },
            ],
            sql: c.sql.clone(),
            out_types: c.bound.schema().fields().iter().map(|(_, t)| *t).collect(),
        })
        .collect();
    for (case, result) in cases.iter().zip(run_batch(&jobs)) {
        outcome.checked += 1;
        let verdict = result.and_then(|rows| check_rows(&case.bound, &case.exec_rows, &case.pool, &rows));
        if let Err(e) = verdict {
            outcome
                .failures
                .push(format!("{}\n{}\n{e}", case.label, case.sql));
        }
    }
    outcome
}

/// Runs every golden pipeline over the fixture catalog on both backends.
pub fn golden_differential() -> Outcome {
    use super::fixtures::{fixture_catalog, session_last_statements, GOLDEN_BLOCKS};
    use verbframe::plan::PlanNode;

    let catalog = fixture_catalog();
    let mut outcome = Outcome::default();
    let mut prepared = Vec::new();
    for (name, stmt) in session_last_statements() {
        if !GOLDEN_BLOCKS.contains(&name.as_str()) {
            continue;
        }
        let bound = match stmt.bind(&catalog) {
            Ok(b) => b,
            Err(e) => {
                outcome.failures.push(format!("{name}: does not bind: {e}"));
                continue;
            }
        };
        let run = |p: &verbframe::BoundPlan| verbframe::exec::execute(p, &catalog).map(|f| frame_rows(&f));
        let prepared_case = (|| -> Result<_, String> {
            let exec_rows = run(&bound).map_err(|e| e.to_string())?;
            let pool = match bound.node() {
                PlanNode::Head { .. } => run(bound.input()).map_err(|e| e.to_string())?,
                _ => exec_rows.clone(),
            };
            let sql = verbframe::sql::compile(&bound).map_err(|e| e.to_string())?;
            let mut tables = Vec::new();
            for t in stmt.plan.table_refs() {
                let frame = catalog.materialize(&t).map_err(|e| e.to_string())?;
                tables.push((t, frame.schema(), frame_rows(&frame)));
            }
            Ok((exec_rows, pool, sql, tables))
        })();
        match prepared_case {
            Ok(c) => prepared.push((name, bound, c)),
            Err(e) => outcome.failures.push(format!("{name}: {e}")),
        }
    }
    let jobs: Vec<Job> = prepared
        .iter()
        .map(|(_, bound, (_, _, sql, tables))| Job {
            tables: tables
                .iter()
                .map(|(n, s, rows)| Table {
                    name: n,
                    schema: s,
                    rows,
                })
                .collect(),
            sql: sql.clone(),
            out_types: bound.schema().fields().iter().map(|(_, t)| *t).collect(),
        })
        .collect();
    for ((name, bound, (exec_rows, pool, sql, _)), result) in prepared.iter().zip(run_batch(&jobs)) {
        outcome.checked += 1;
        if let Err(e) = result.and_then(|rows| check_rows(bound, exec_rows, pool, &rows)) {
            outcome.failures.push(format!("{name}\n{sql}\n{e}"));
        }
    }
    outcome
}
