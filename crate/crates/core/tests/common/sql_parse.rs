//! Splits a SQL query into its top-level clauses. Quoted text and anything
//! inside parentheses is left alone, so subqueries stay inside the clause
//! that contains them.

const CLAUSES: &[&str] = &["SELECT", "FROM", "WHERE", "GROUP BY", "HAVING", "ORDER BY", "LIMIT"];

/// `(keyword, body)` for each top-level clause, in query order.
pub fn top_level_clauses(sql: &str) -> Vec<(String, String)> {
    let chars: Vec<char> = sql.trim().trim_end_matches(';').chars().collect();
    let mut out: Vec<(String, String)> = Vec::new();
    let mut depth = 0usize;
    let mut quote: Option<char> = None;
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if let Some(q) = quote {
            if c == q {
                quote = None;
            }
        } else if c == '\'' || c == '"' {
            quote = Some(c);
        } else if c == '(' {
            depth += 1;
        } else if c == ')' {
            depth = depth.saturating_sub(1);
        } else if depth == 0 && (i == 0 || !is_ident(chars[i - 1])) {
            if let Some((kw, end)) = keyword_at(&chars, i) {
                out.push((kw.to_owned(), String::new()));
                i = end;
                continue;
            }
        }
        if let Some(last) = out.last_mut() {
            last.1.push(c);
        }
        i += 1;
    }
    for clause in &mut out {
        clause.1 = clause.1.split_whitespace().collect::<Vec<_>>().join(" ");
    }
    out
}

fn is_ident(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

/// The clause keyword starting at `i` and the index just past it.
fn keyword_at(chars: &[char], i: usize) -> Option<(&'static str, usize)> {
    CLAUSES.iter().copied().find_map(|kw| {
        let mut j = i;
        for part in kw.split(' ') {
            while j > i && j < chars.len() && chars[j].is_whitespace() {
                j += 1;
            }
            let end = j + part.len();
            if end > chars.len() {
                return None;
            }
            let word: String = chars[j..end].iter().collect();
            if !word.eq_ignore_ascii_case(part) {
                return None;
            }
            j = end;
        }
        (j == chars.len() || !is_ident(chars[j])).then_some((kw, j))
    })
}

pub fn clause_names(sql: &str) -> Vec<String> {
    top_level_clauses(sql).into_iter().map(|(k, _)| k).collect()
}
