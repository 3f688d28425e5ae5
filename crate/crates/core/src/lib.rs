//! Lazy, verb-based data manipulation over immutable columnar frames.
//!
//! A [`Plan`] is a tree of verbs (`select`, `filter`, `mutate`, `arrange`,
//! `group_by`, `summarise`, `ungroup`, `left_join`, `distinct`, `head`)
//! rooted at named tables in a [`Catalog`]. Building a plan touches no data.
//! [`Plan::collect`] binds it, runs it in memory and returns a [`Frame`];
//! [`sql::compile`] turns the same bound plan into a SQL `SELECT`.

pub mod catalog;
pub mod csv_io;
pub mod display;
pub mod dsl;
pub mod error;
pub mod exec;
pub mod expr;
pub mod frame;
pub mod plan;
pub mod sql;
pub mod value;

pub use catalog::{Catalog, TableSource};
pub use csv_io::{read_csv, write_csv, CsvOptions};
pub use display::{format_frame, format_frame_with_width};
pub use error::{Error, Result, SourceSpan};
pub use expr::{Expr, ExprKind};
pub use frame::{frame_from_columns, schema_of, Column, Frame, Schema};
pub use plan::{bind, BoundPlan, Plan, SortKey};
pub use value::{DType, Value};
