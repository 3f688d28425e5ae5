//! Clause-per-line layout of generated SQL.

/// Lays a statement out with one clause per line and each subquery
/// indented two spaces inside its parentheses. Token spacing within a line
/// is kept (runs of whitespace collapse to one space), so formatting an
/// already formatted statement changes nothing.
pub fn emit_pretty(sql: &str) -> String {
    let tokens = tokenize(sql);
    let mut lines: Vec<String> = Vec::new();
    let mut line = String::new();
    let mut depth = 0usize;
    let mut parens: Vec<bool> = Vec::new();

    let flush = |line: &mut String, lines: &mut Vec<String>| {
        if !line.trim().is_empty() {
            lines.push(std::mem::take(line));
        }
        line.clear();
    };
    let start = |line: &mut String, depth: usize| {
        *line = "  ".repeat(depth);
    };

    for (i, (tok, spaced)) in tokens.iter().enumerate() {
        let at_start = line.trim().is_empty();
        let push = |line: &mut String| {
            if *spaced && !at_start {
                line.push(' ');
            }
            line.push_str(tok);
        };
        match tok.as_str() {
            "(" if tokens.get(i + 1).is_some_and(|(t, _)| t == "SELECT") => {
                push(&mut line);
                parens.push(true);
                flush(&mut line, &mut lines);
                depth += 1;
                start(&mut line, depth);
            }
            "(" => {
                parens.push(false);
                push(&mut line);
            }
            ")" if parens.pop() == Some(true) => {
                flush(&mut line, &mut lines);
                depth = depth.saturating_sub(1);
                start(&mut line, depth);
                line.push(')');
            }
            t if is_clause(t, tokens.get(i + 1).map(|(n, _)| n.as_str())) => {
                flush(&mut line, &mut lines);
                start(&mut line, depth);
                line.push_str(t);
            }
            _ => push(&mut line),
        }
    }
    flush(&mut line, &mut lines);
    lines.join("\n")
}

fn is_clause(tok: &str, next: Option<&str>) -> bool {
    match tok {
        "SELECT" | "FROM" | "WHERE" | "HAVING" | "LIMIT" => true,
        "GROUP" | "ORDER" => next == Some("BY"),
        "LEFT" => next == Some("JOIN"),
        _ => false,
    }
}

/// Splits SQL into tokens, each flagged with whether whitespace preceded it.
fn tokenize(sql: &str) -> Vec<(String, bool)> {
    let chars: Vec<char> = sql.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    let mut spaced = false;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            spaced = true;
            i += 1;
            continue;
        }
        let begin = i;
        if c == '\'' || c == '"' {
            i += 1;
            while i < chars.len() {
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
        } else if c.is_alphanumeric() || c == '_' || c == '.' {
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_' || chars[i] == '.') {
                i += 1;
            }
        } else {
            let two: String = chars[i..(i + 2).min(chars.len())].iter().collect();
            i += if matches!(two.as_str(), "<>" | "<=" | ">=" | "||") { 2 } else { 1 };
        }
        out.push((chars[begin..i].iter().collect(), spaced));
        spaced = false;
    }
    out
}
