//! Seeded random tables and type-directed random pipeline scripts.
//!
//! Table `a` has columns `k i f s bl d`; lookup table `b` has `k ks r_x r_s`
//! with repeated keys. Scripts are plain DSL text so they exercise the parser
//! as well as the plan layer.

use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::Rng;
use tempfile::TempDir;
use verbframe::csv_io::csv_token;
use verbframe::value::date_from_ymd;
use verbframe::{Catalog, DType, Schema, Value};

pub struct World {
    pub dir: TempDir,
    pub a: Vec<Vec<Value>>,
    pub b: Vec<Vec<Value>>,
}

pub fn schema_a() -> Schema {
    Schema::from_pairs([
        ("k", DType::Int),
        ("i", DType::Int),
        ("f", DType::Float),
        ("s", DType::Str),
        ("bl", DType::Bool),
        ("d", DType::Date),
    ])
    .expect("distinct names")
}

pub fn schema_b() -> Schema {
    Schema::from_pairs([
        ("k", DType::Int),
        ("ks", DType::Str),
        ("r_x", DType::Float),
        ("r_s", DType::Str),
    ])
    .expect("distinct names")
}

const WORDS: &[&str] = &["x", "y", "z", "ab", "ORD", "MSP"];

fn maybe_null<R: Rng>(rng: &mut R, cell: impl FnOnce(&mut R) -> Value) -> Value {
    if rng.gen_bool(0.1) {
        Value::Null
    } else {
        cell(rng)
    }
}

fn word(rng: &mut impl Rng) -> Value {
    Value::str(*WORDS.choose(rng).expect("nonempty"))
}

fn float_cell(rng: &mut impl Rng) -> Value {
    let x = match rng.gen_range(0..10) {
        0 => -0.0,
        1 => rng.gen_range(-3..=3) as f64,
        _ => (rng.gen_range(-1000..=1000) as f64) / 100.0,
    };
    Value::Float(x)
}

fn row_a(rng: &mut impl Rng) -> Vec<Value> {
    let day = date_from_ymd(2012, 1, 1).expect("valid") + rng.gen_range(0..60);
    vec![
        maybe_null(rng, |r| Value::Int(r.gen_range(0..6))),
        maybe_null(rng, |r| Value::Int(r.gen_range(-50..=50))),
        maybe_null(rng, float_cell),
        maybe_null(rng, word),
        maybe_null(rng, |r| Value::Bool(r.gen())),
        maybe_null(rng, |_| Value::Date(day)),
    ]
}

fn row_b(rng: &mut impl Rng) -> Vec<Value> {
    vec![
        maybe_null(rng, |r| Value::Int(r.gen_range(0..8))),
        maybe_null(rng, word),
        maybe_null(rng, float_cell),
        maybe_null(rng, word),
    ]
}

fn csv_text(schema: &Schema, rows: &[Vec<Value>]) -> String {
    let mut out = schema.names().collect::<Vec<_>>().join(",");
    out.push('\n');
    for r in rows {
        let cells: Vec<String> = r.iter().map(csv_token).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

/// Writes fresh random tables `a` and `b` to a temporary directory.
pub fn world(rng: &mut impl Rng) -> World {
    let a_rows = if rng.gen_bool(0.05) { 0 } else { rng.gen_range(1..=64) };
    let b_rows = rng.gen_range(0..=12);
    let a: Vec<_> = (0..a_rows).map(|_| row_a(rng)).collect();
    let b: Vec<_> = (0..b_rows).map(|_| row_b(rng)).collect();
    let dir = tempfile::tempdir().expect("tempdir");
    std::fs::write(dir.path().join("a.csv"), csv_text(&schema_a(), &a)).expect("write a");
    std::fs::write(dir.path().join("b.csv"), csv_text(&schema_b(), &b)).expect("write b");
    World { dir, a, b }
}

impl World {
    /// A new catalog over the tables, so access counts start at zero.
    pub fn catalog(&self) -> Catalog {
        let mut cat = Catalog::new();
        cat.add_csv("a", self.dir.path().join("a.csv"), Some(schema_a()))
            .expect("fresh catalog");
        cat.add_csv("b", self.dir.path().join("b.csv"), Some(schema_b()))
            .expect("fresh catalog");
        cat
    }
}

/// Generator state: the schema and grouping after the verbs so far.
struct Pipe {
    fields: Vec<(String, DType)>,
    groups: Vec<String>,
    joined: bool,
    next_name: usize,
    sql_safe: bool,
}

impl Pipe {
    fn of(&self, pred: impl Fn(DType) -> bool) -> Vec<&str> {
        self.fields
            .iter()
            .filter(|(_, t)| pred(*t))
            .map(|(n, _)| n.as_str())
            .collect()
    }

    fn fresh(&mut self, prefix: &str) -> String {
        self.next_name += 1;
        format!("{prefix}{}", self.next_name)
    }
}

fn int_lit(rng: &mut impl Rng) -> String {
    rng.gen_range(-5..=20).to_string()
}

fn float_lit(rng: &mut impl Rng) -> String {
    format!("{}.{}", rng.gen_range(0..=9), rng.gen_range(0..=9))
}

/// A numeric expression and its type.
fn num_expr(rng: &mut impl Rng, p: &Pipe, depth: u32) -> (String, DType) {
    let cols = p.of(DType::is_numeric);
    let leaf = depth == 0 || rng.gen_bool(0.4);
    if leaf {
        if !cols.is_empty() && rng.gen_bool(0.7) {
            let c = *cols.choose(rng).expect("nonempty");
            let t = p.fields.iter().find(|(n, _)| n == c).expect("known").1;
            return (c.to_owned(), t);
        }
        return if rng.gen_bool(0.5) {
            (int_lit(rng), DType::Int)
        } else {
            (float_lit(rng), DType::Float)
        };
    }
    if rng.gen_bool(0.15) {
        let (e, t) = num_expr(rng, p, depth - 1);
        return (format!("-({e})"), t);
    }
    let (l, lt) = num_expr(rng, p, depth - 1);
    let op = *["+", "-", "*", "/"].choose(rng).expect("nonempty");
    let (r, rt) = if op == "/" && p.sql_safe {
        // SQL engines return NULL where the executor reports an error or
        // produces an infinity, so only divide by nonzero constants.
        if rng.gen_bool(0.5) {
            (rng.gen_range(1..=9).to_string(), DType::Int)
        } else {
            (format!("{}.5", rng.gen_range(0..=9)), DType::Float)
        }
    } else {
        num_expr(rng, p, depth - 1)
    };
    let t = if lt == DType::Float || rt == DType::Float {
        DType::Float
    } else {
        DType::Int
    };
    (format!("({l} {op} {r})"), t)
}

fn str_expr(rng: &mut impl Rng, p: &Pipe, depth: u32) -> String {
    let cols = p.of(|t| t == DType::Str);
    match rng.gen_range(0..4) {
        0 | 1 if !cols.is_empty() => cols.choose(rng).expect("nonempty").to_string(),
        2 if depth > 0 => {
            let a = paste_arg(rng, p, depth - 1);
            let b = paste_arg(rng, p, depth - 1);
            if rng.gen_bool(0.5) {
                format!("paste({a}, {b})")
            } else {
                format!("paste({a}, {b}, sep = '-')")
            }
        }
        _ => format!("'{}'", WORDS.choose(rng).expect("nonempty")),
    }
}

/// Floats and bools are spelled differently by SQL engines, so SQL-safe
/// pipelines only paste strings, integers and dates.
fn paste_arg(rng: &mut impl Rng, p: &Pipe, depth: u32) -> String {
    loop {
        let (e, t) = any_scalar(rng, p, depth);
        if !p.sql_safe || matches!(t, DType::Str | DType::Int | DType::Date) {
            return e;
        }
    }
}

fn date_expr(rng: &mut impl Rng, p: &Pipe) -> String {
    let cols = p.of(|t| t == DType::Date);
    if !cols.is_empty() && rng.gen_bool(0.7) {
        cols.choose(rng).expect("nonempty").to_string()
    } else {
        format!("ymd('2012-{}-{}')", rng.gen_range(1..=2), rng.gen_range(1..=28))
    }
}

fn bool_expr(rng: &mut impl Rng, p: &Pipe, depth: u32) -> String {
    let bools = p.of(|t| t == DType::Bool);
    if depth == 0 || rng.gen_bool(0.2) {
        return if !bools.is_empty() && rng.gen_bool(0.7) {
            bools.choose(rng).expect("nonempty").to_string()
        } else {
            ["TRUE", "FALSE"].choose(rng).expect("nonempty").to_string()
        };
    }
    let cmp = *["==", "!=", "<", "<=", ">", ">="].choose(rng).expect("nonempty");
    match rng.gen_range(0..8) {
        0 | 1 => {
            let (l, _) = num_expr(rng, p, depth - 1);
            let (r, _) = num_expr(rng, p, depth - 1);
            format!("({l} {cmp} {r})")
        }
        2 => format!("({} {cmp} {})", str_expr(rng, p, 0), str_expr(rng, p, 0)),
        3 => format!("({} {cmp} {})", date_expr(rng, p), date_expr(rng, p)),
        4 => {
            let op = *["&", "|"].choose(rng).expect("nonempty");
            let l = bool_expr(rng, p, depth - 1);
            let r = bool_expr(rng, p, depth - 1);
            format!("({l} {op} {r})")
        }
        5 => format!("!({})", bool_expr(rng, p, depth - 1)),
        6 => {
            let mut items: Vec<String> = (0..rng.gen_range(1..=3)).map(|_| int_lit(rng)).collect();
            if rng.gen_bool(0.2) {
                items.push("NA".to_owned());
            }
            let (e, _) = num_expr(rng, p, depth - 1);
            format!("({e} %in% c({}))", items.join(", "))
        }
        _ => {
            let items: Vec<String> = (0..rng.gen_range(1..=3))
                .map(|_| format!("'{}'", WORDS.choose(rng).expect("nonempty")))
                .collect();
            format!("({} %in% c({}))", str_expr(rng, p, 0), items.join(", "))
        }
    }
}

fn any_scalar(rng: &mut impl Rng, p: &Pipe, depth: u32) -> (String, DType) {
    match rng.gen_range(0..10) {
        0..=3 => num_expr(rng, p, depth),
        4 | 5 => (bool_expr(rng, p, depth), DType::Bool),
        6 | 7 => (str_expr(rng, p, depth), DType::Str),
        8 => (date_expr(rng, p), DType::Date),
        _ => ("NA".to_owned(), DType::Str),
    }
}

fn aggregate(rng: &mut impl Rng, p: &Pipe) -> (String, DType) {
    let nums = p.of(DType::is_numeric);
    let ordered = p.of(|t| t != DType::Bool);
    match rng.gen_range(0..6) {
        1 | 2 if !nums.is_empty() => {
            let (arg, t) = num_expr(rng, p, 1);
            if rng.gen_bool(0.5) {
                (format!("sum({arg})"), t)
            } else {
                (format!("mean({arg})"), DType::Float)
            }
        }
        3 | 4 if !ordered.is_empty() => {
            let c = *ordered.choose(rng).expect("nonempty");
            let t = p.fields.iter().find(|(n, _)| n == c).expect("known").1;
            let f = *["min", "max"].choose(rng).expect("nonempty");
            (format!("{f}({c})"), t)
        }
        5 => ("(n() * 2)".to_owned(), DType::Int),
        _ => ("n()".to_owned(), DType::Int),
    }
}

fn step(rng: &mut impl Rng, p: &mut Pipe, last: bool) -> String {
    loop {
        match rng.gen_range(0..11) {
            0 | 1 => return format!("filter({})", bool_expr(rng, p, 2)),
            2 | 3 => {
                let (e, t) = any_scalar(rng, p, 2);
                let name = p.fresh("m");
                p.fields.push((name.clone(), t));
                return format!("mutate({name} = {e})");
            }
            4 => {
                let mut cols: Vec<(String, DType)> = p
                    .fields
                    .iter()
                    .filter(|(n, _)| p.groups.contains(n) || rng.gen_bool(0.6))
                    .cloned()
                    .collect();
                if cols.is_empty() {
                    cols.push(p.fields[0].clone());
                }
                cols.shuffle(rng);
                let names: Vec<&str> = cols.iter().map(|(n, _)| n.as_str()).collect();
                let text = format!("select({})", names.join(", "));
                p.fields = cols;
                return text;
            }
            5 => {
                let keys: Vec<String> = (0..rng.gen_range(1..=2))
                    .map(|_| {
                        let (e, _) = any_scalar(rng, p, 1);
                        if rng.gen_bool(0.4) {
                            format!("desc({e})")
                        } else {
                            e
                        }
                    })
                    .collect();
                return format!("arrange({})", keys.join(", "));
            }
            6 => {
                let cols = p.of(|_| true);
                let n = rng.gen_range(1..=cols.len().min(2));
                let keys: Vec<String> = cols.choose_multiple(rng, n).map(|c| c.to_string()).collect();
                p.groups = keys.clone();
                return format!("group_by({})", keys.join(", "));
            }
            7 => {
                let mut fields: Vec<(String, DType)> = p
                    .groups
                    .iter()
                    .map(|g| p.fields.iter().find(|(n, _)| n == g).expect("group key").clone())
                    .collect();
                let mut parts = Vec::new();
                for _ in 0..rng.gen_range(1..=2) {
                    let (e, t) = aggregate(rng, p);
                    let name = p.fresh("g");
                    parts.push(format!("{name} = {e}"));
                    fields.push((name, t));
                }
                p.fields = fields;
                p.groups.pop();
                return format!("summarise({})", parts.join(", "));
            }
            8 => {
                if p.groups.is_empty() {
                    continue;
                }
                p.groups.clear();
                return "ungroup()".to_owned();
            }
            9 if !p.joined => {
                let has = |n: &str, t: DType| p.fields.iter().any(|(f, ft)| f == n && *ft == t);
                let collides = |n: &str| p.fields.iter().any(|(f, _)| f == n);
                let (by, carried) = if has("k", DType::Int) && rng.gen_bool(0.6) {
                    ("'k'", [("ks", DType::Str), ("r_x", DType::Float), ("r_s", DType::Str)])
                } else if has("s", DType::Str) {
                    ("c('s' = 'ks')", [("k", DType::Int), ("r_x", DType::Float), ("r_s", DType::Str)])
                } else {
                    continue;
                };
                if carried.iter().any(|(n, _)| collides(n)) {
                    continue;
                }
                p.joined = true;
                p.fields.extend(carried.iter().map(|(n, t)| (n.to_string(), *t)));
                return format!("left_join(b, by = {by})");
            }
            9 => continue,
            _ => {
                // Which rows a SQL LIMIT keeps is unspecified, so in SQL-safe
                // pipelines a later verb never sees the result of a head.
                return if rng.gen_bool(0.5) || (p.sql_safe && !last) {
                    "distinct()".to_owned()
                } else {
                    format!("head({})", rng.gen_range(1..=10))
                }
            }
        }
    }
}

/// A random pipeline over `a` with up to five verbs, as one DSL statement.
pub fn pipeline(rng: &mut impl Rng) -> String {
    build(rng, false)
}

/// Like [`pipeline`], avoiding operations whose results legitimately differ
/// between SQL engines and the executor.
pub fn sql_safe_pipeline(rng: &mut impl Rng) -> String {
    build(rng, true)
}

fn build(rng: &mut impl Rng, sql_safe: bool) -> String {
    let mut p = Pipe {
        fields: schema_a().fields().to_vec(),
        groups: Vec::new(),
        joined: false,
        next_name: 0,
        sql_safe,
    };
    let mut text = String::from("a");
    let verbs = rng.gen_range(1..=5);
    for v in 0..verbs {
        let s = step(rng, &mut p, v + 1 == verbs);
        write!(text, " %>% {s}").expect("writing to a String");
    }
    text
}
