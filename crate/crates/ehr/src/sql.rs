//! Read-only SQL over a snapshot.
//!
//! The snapshot is copied into a private in-memory SQLite database, so a
//! query can only ever see rows that were visible at the cutoff. Statements
//! are classified by parsing: exactly one query (SELECT, set operations,
//! VALUES, optionally under WITH) is accepted. The connection also runs with
//! `query_only` set, and the prepared statement must report itself read-only.

use std::time::{Duration, Instant};

use rusqlite::types::{Value as SqlValue, ValueRef};
use rusqlite::{Connection, ErrorCode as SqliteCode};
use sqlparser::ast::{Query, SetExpr, Statement};
use sqlparser::dialect::SQLiteDialect;
use sqlparser::parser::Parser;

use crate::error::ToolError;
use crate::manifest::ColumnType;
use crate::store::EhrSnapshot;
use crate::tools::SqlResult;
use crate::value::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SqlLimits {
    pub row_cap: usize,
    pub timeout: Duration,
}

impl Default for SqlLimits {
    fn default() -> Self {
        Self {
            row_cap: 200,
            timeout: Duration::from_secs(10),
        }
    }
}

/// One episode's SQL connection.
pub struct SqlSession {
    conn: Connection,
}

impl std::fmt::Debug for SqlSession {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SqlSession").finish_non_exhaustive()
    }
}

fn quote_ident(name: &str) -> String {
    format!("\"{}\"", name.replace('"', "\"\""))
}

fn sql_type(ty: ColumnType) -> &'static str {
    match ty {
        ColumnType::Integer => "INTEGER",
        ColumnType::Real => "REAL",
        // timestamps are stored as "YYYY-MM-DD HH:MM:SS", which sorts chronologically
        ColumnType::Text | ColumnType::Timestamp => "TEXT",
    }
}

impl SqlSession {
    pub fn new(snapshot: &EhrSnapshot) -> Result<Self, ToolError> {
        let err = |e: rusqlite::Error| ToolError::Sql(format!("building session database: {e}"));
        let mut conn = Connection::open_in_memory().map_err(err)?;
        let tx = conn.transaction().map_err(err)?;
        for table in snapshot.tables() {
            let cols: Vec<String> = table
                .spec
                .columns
                .iter()
                .map(|c| format!("{} {}", quote_ident(&c.name), sql_type(c.ty)))
                .collect();
            tx.execute_batch(&format!(
                "CREATE TABLE {} ({});",
                quote_ident(&table.spec.name),
                cols.join(", ")
            ))
            .map_err(err)?;
            let placeholders = vec!["?"; table.spec.columns.len()].join(", ");
            let mut insert = tx
                .prepare(&format!(
                    "INSERT INTO {} VALUES ({placeholders})",
                    quote_ident(&table.spec.name)
                ))
                .map_err(err)?;
            for row in &table.rows {
                let params: Vec<SqlValue> = row.iter().map(to_sql).collect();
                insert
                    .execute(rusqlite::params_from_iter(params))
                    .map_err(err)?;
            }
        }
        tx.commit().map_err(err)?;
        conn.execute_batch("PRAGMA query_only = ON;").map_err(err)?;
        Ok(Self { conn })
    }

    pub fn query(&self, sql: &str, limits: &SqlLimits) -> Result<SqlResult, ToolError> {
        if sql.trim().is_empty() {
            return Err(ToolError::EmptyQuery);
        }
        check_statement_class(sql)?;

        let mut stmt = self.conn.prepare(sql).map_err(|e| match e {
            rusqlite::Error::MultipleStatement => {
                ToolError::ForbiddenStatement("multiple statements".into())
            }
            other => ToolError::Sql(other.to_string()),
        })?;
        if !stmt.readonly() {
            return Err(ToolError::ForbiddenStatement(
                "statement would modify the database".into(),
            ));
        }
        let columns: Vec<String> = stmt.column_names().iter().map(|s| s.to_string()).collect();

        let deadline = Instant::now() + limits.timeout;
        self.conn
            .progress_handler(1_000, Some(move || Instant::now() >= deadline));
        let result = collect_rows(&mut stmt, columns.len(), limits.row_cap);
        self.conn.progress_handler(0, None::<fn() -> bool>);

        let (rows, total) = result.map_err(|e| match e.sqlite_error_code() {
            Some(SqliteCode::OperationInterrupted) => ToolError::Timeout(limits.timeout),
            _ => ToolError::Sql(e.to_string()),
        })?;
        Ok(SqlResult {
            columns,
            capped: total > rows.len(),
            row_count_total: total,
            rows,
        })
    }
}

fn collect_rows(
    stmt: &mut rusqlite::Statement<'_>,
    width: usize,
    cap: usize,
) -> Result<(Vec<Vec<Value>>, usize), rusqlite::Error> {
    let mut rows = stmt.query([])?;
    let mut out = Vec::new();
    let mut total = 0usize;
    while let Some(row) = rows.next()? {
        total += 1;
        if out.len() < cap {
            let mut values = Vec::with_capacity(width);
            for i in 0..width {
                values.push(from_sql(row.get_ref(i)?));
            }
            out.push(values);
        }
    }
    Ok((out, total))
}

fn to_sql(v: &Value) -> SqlValue {
    match v {
        Value::Null => SqlValue::Null,
        Value::Integer(i) => SqlValue::Integer(*i),
        Value::Real(r) => SqlValue::Real(*r),
        Value::Text(s) => SqlValue::Text(s.clone()),
        Value::Timestamp(t) => SqlValue::Text(t.to_table_string()),
    }
}

fn from_sql(v: ValueRef<'_>) -> Value {
    match v {
        ValueRef::Null => Value::Null,
        ValueRef::Integer(i) => Value::Integer(i),
        ValueRef::Real(r) => Value::Real(r),
        ValueRef::Text(t) => Value::Text(String::from_utf8_lossy(t).into_owned()),
        ValueRef::Blob(b) => Value::Text(format!("<blob {} bytes>", b.len())),
    }
}

/// Accepts exactly one read-only query statement.
pub fn check_statement_class(sql: &str) -> Result<(), ToolError> {
    let statements = match Parser::parse_sql(&SQLiteDialect {}, sql) {
        Ok(s) => s,
        Err(e) => {
            // statements the parser cannot handle are still classified by keyword
            let first = sql
                .trim_start()
                .split(|c: char| !c.is_ascii_alphabetic())
                .next()
                .unwrap_or("")
                .to_ascii_uppercase();
            return match first.as_str() {
                kw if is_statement_keyword(kw) => {
                    Err(ToolError::ForbiddenStatement(format!("{kw} is not allowed")))
                }
                _ => Err(ToolError::Sql(e.to_string())),
            };
        }
    };
    match statements.as_slice() {
        [] => Err(ToolError::EmptyQuery),
        [Statement::Query(q)] => {
            if query_is_read_only(q) {
                Ok(())
            } else {
                Err(ToolError::ForbiddenStatement(
                    "data-modifying statement inside query".into(),
                ))
            }
        }
        [other] => Err(ToolError::ForbiddenStatement(statement_class(other))),
        many => Err(ToolError::ForbiddenStatement(format!(
            "{} statements; only one is allowed",
            many.len()
        ))),
    }
}

fn is_statement_keyword(word: &str) -> bool {
    matches!(
        word,
        "INSERT" | "UPDATE" | "DELETE" | "REPLACE" | "CREATE" | "DROP" | "ALTER" | "ATTACH"
            | "DETACH" | "PRAGMA" | "VACUUM" | "REINDEX" | "ANALYZE" | "BEGIN" | "COMMIT"
            | "ROLLBACK" | "SAVEPOINT" | "RELEASE" | "EXPLAIN"
    )
}

fn query_is_read_only(q: &Query) -> bool {
    let ctes_ok = q
        .with
        .as_ref()
        .map_or(true, |w| w.cte_tables.iter().all(|c| query_is_read_only(&c.query)));
    ctes_ok && set_expr_is_read_only(&q.body)
}

fn set_expr_is_read_only(e: &SetExpr) -> bool {
    match e {
        SetExpr::Select(_) | SetExpr::Values(_) | SetExpr::Table(_) => true,
        SetExpr::Query(q) => query_is_read_only(q),
        SetExpr::SetOperation { left, right, .. } => {
            set_expr_is_read_only(left) && set_expr_is_read_only(right)
        }
        SetExpr::Insert(_) | SetExpr::Update(_) => false,
    }
}

fn statement_class(s: &Statement) -> String {
    let text = s.to_string();
    let keyword = text
        .split_whitespace()
        .take(2)
        .collect::<Vec<_>>()
        .join(" ")
        .to_uppercase();
    format!("{keyword} is not allowed")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classification() {
        assert!(check_statement_class("SELECT 1").is_ok());
        assert!(check_statement_class("select * from labevents;").is_ok());
        assert!(check_statement_class(
            "WITH x AS (SELECT 1 AS a) SELECT a FROM x UNION ALL SELECT 2"
        )
        .is_ok());
        for bad in [
            "DROP TABLE labevents",
            "DELETE FROM labevents",
            "INSERT INTO labevents VALUES (1)",
            "UPDATE labevents SET valuenum = 1",
            "CREATE TABLE t (a INT)",
            "ALTER TABLE labevents ADD COLUMN x INT",
            "ATTACH DATABASE 'x.db' AS x",
            "PRAGMA table_info(labevents)",
            "SELECT 1; SELECT 2",
            "SELECT 1; DROP TABLE labevents",
        ] {
            let err = check_statement_class(bad).unwrap_err();
            assert!(
                matches!(err, ToolError::ForbiddenStatement(_)),
                "{bad}: {err:?}"
            );
        }
    }

    #[test]
    fn garbage_is_sql_error() {
        assert!(matches!(
            check_statement_class("SELEC nothing"),
            Err(ToolError::Sql(_))
        ));
    }
}
