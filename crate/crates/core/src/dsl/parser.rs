use super::ast::{Pipeline, Script, Spanned, Statement, Verb};
use super::lexer::{tokenize, Tok, Token};
use crate::error::{Error, Result, SourceSpan};
use crate::expr::{BinaryOp, Expr, Func, UnaryOp};
use crate::value::Value;

/// Limits that keep recursion bounded on hostile input.
const MAX_NESTING: usize = 128;
const MAX_EXPR_DEPTH: usize = 256;

const VERBS: &[&str] = &[
    "select",
    "filter",
    "mutate",
    "arrange",
    "group_by",
    "summarise",
    "summarize",
    "ungroup",
    "left_join",
    "distinct",
    "head",
    "collect",
];

/// Calls from the wider R ecosystem that scripts sometimes contain but that
/// this language deliberately leaves out.
const RESERVED_CALLS: &[&str] = &[
    "require",
    "library",
    "xyplot",
    "densityplot",
    "ladd",
    "src_mysql",
    "tbl",
    "dbGetQuery",
    "function",
    "if",
    "for",
    "while",
    "repeat",
    "list",
];

pub(crate) fn parse_script(text: &str) -> Result<Script> {
    let mut p = Parser::new(text);
    p.script()
}

pub(crate) fn parse_expr(text: &str) -> Result<Expr> {
    let mut p = Parser::new(text);
    p.skip_newlines();
    let e = p.expr()?;
    p.skip_newlines();
    p.expect(|t| *t == Tok::Eof, "end of input")?;
    Ok(e)
}

fn merge(a: SourceSpan, b: SourceSpan) -> SourceSpan {
    SourceSpan {
        end: b.end.max(a.end),
        ..a
    }
}

fn syntax(message: impl Into<String>, span: SourceSpan) -> Error {
    Error::Syntax {
        message: message.into(),
        span,
    }
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    nest: usize,
    last_end: usize,
}

impl Parser {
    fn new(text: &str) -> Self {
        Parser {
            toks: tokenize(text),
            pos: 0,
            nest: 0,
            last_end: 0,
        }
    }

    fn peek(&self) -> &Token {
        &self.toks[self.pos.min(self.toks.len() - 1)]
    }

    fn peek2(&self) -> &Tok {
        &self.toks[(self.pos + 1).min(self.toks.len() - 1)].tok
    }

    fn advance(&mut self) -> Token {
        let t = self.peek().clone();
        if t.tok != Tok::Eof {
            self.pos += 1;
            self.last_end = t.span.end;
        }
        t
    }

    /// Span from `start` to the end of the last consumed token.
    fn since(&self, start: SourceSpan) -> SourceSpan {
        SourceSpan {
            end: self.last_end.max(start.start),
            ..start
        }
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek().tok == *tok {
            self.advance();
            true
        } else {
            false
        }
    }

    fn skip_newlines(&mut self) {
        while self.peek().tok == Tok::Newline {
            self.advance();
        }
    }

    fn unexpected(&self, tok: &Token, expected: &str) -> Error {
        match &tok.tok {
            Tok::Bad(message) => syntax(message.clone(), tok.span),
            Tok::Reserved(construct) => Error::Reserved {
                construct: construct.clone(),
                span: tok.span,
            },
            other => syntax(format!("expected {expected}, found {}", other.describe()), tok.span),
        }
    }

    fn expect(&mut self, pred: impl Fn(&Tok) -> bool, expected: &str) -> Result<Token> {
        if pred(&self.peek().tok) {
            Ok(self.advance())
        } else {
            Err(self.unexpected(self.peek(), expected))
        }
    }

    fn ident(&mut self, expected: &str) -> Result<Spanned<String>> {
        let t = self.expect(|t| matches!(t, Tok::Ident(_)), expected)?;
        match t.tok {
            Tok::Ident(name) => Ok(Spanned::new(name, t.span)),
            _ => unreachable!(),
        }
    }

    fn enter(&mut self, span: SourceSpan) -> Result<()> {
        self.nest += 1;
        if self.nest > MAX_NESTING {
            return Err(syntax("nesting is too deep", span));
        }
        Ok(())
    }

    fn leave(&mut self) {
        self.nest -= 1;
    }

    // ---- statements and pipelines ----

    fn script(&mut self) -> Result<Script> {
        let mut statements = Vec::new();
        loop {
            while matches!(self.peek().tok, Tok::Newline | Tok::Semi) {
                self.advance();
            }
            if self.peek().tok == Tok::Eof {
                break;
            }
            statements.push(self.statement()?);
        }
        Ok(Script { statements })
    }

    fn statement(&mut self) -> Result<Spanned<Statement>> {
        let start = self.peek().span;
        let target = if matches!(self.peek().tok, Tok::Ident(_)) && *self.peek2() == Tok::Assign {
            let name = self.ident("a name")?;
            self.advance();
            self.skip_newlines();
            Some(name)
        } else {
            None
        };
        let pipeline = self.pipeline()?;
        let span = self.since(start);
        self.expect(
            |t| matches!(t, Tok::Newline | Tok::Semi | Tok::Eof),
            "end of statement",
        )?;
        Ok(Spanned::new(Statement { target, pipeline }, span))
    }

    fn pipeline(&mut self) -> Result<Pipeline> {
        let mut pipeline = self.term()?;
        while self.eat(&Tok::Pipe) {
            self.skip_newlines();
            let name = self.verb_name()?;
            let (_, verb) = self.verb_call(&name, false)?;
            pipeline.steps.push(verb);
        }
        Ok(pipeline)
    }

    /// A table or variable name, or a verb called with its data as the
    /// first argument.
    fn term(&mut self) -> Result<Pipeline> {
        if matches!(self.peek().tok, Tok::Ident(_)) && *self.peek2() == Tok::LParen {
            let name = self.verb_name()?;
            self.enter(name.span)?;
            let (data, verb) = self.verb_call(&name, true)?;
            self.leave();
            let mut pipeline = data.expect("function-form verbs always carry data");
            pipeline.steps.push(verb);
            return Ok(pipeline);
        }
        let source = self.ident("a table name or a verb")?;
        Ok(Pipeline {
            source,
            steps: Vec::new(),
        })
    }

    fn verb_name(&mut self) -> Result<Spanned<String>> {
        let name = self.ident("a verb")?;
        if VERBS.contains(&name.node.as_str()) {
            Ok(name)
        } else if RESERVED_CALLS.contains(&name.node.as_str()) {
            Err(Error::Reserved {
                construct: name.node,
                span: name.span,
            })
        } else {
            Err(syntax(format!("unknown verb `{}`", name.node), name.span))
        }
    }

    fn named_arg(&mut self) -> Option<Spanned<String>> {
        if matches!(self.peek().tok, Tok::Ident(_)) && *self.peek2() == Tok::Equals {
            let name = self.ident("a name").ok()?;
            self.advance();
            Some(name)
        } else {
            None
        }
    }

    /// Parses `( args )` after a verb name. With `data`, the first argument
    /// is the input pipeline.
    fn verb_call(&mut self, name: &Spanned<String>, data: bool) -> Result<(Option<Pipeline>, Spanned<Verb>)> {
        let verb_name = name.node.as_str();
        self.expect(|t| *t == Tok::LParen, "`(`")?;

        let mut input = None;
        let mut more = true;
        if data {
            if self.peek().tok == Tok::RParen {
                return Err(syntax(format!("`{verb_name}` needs a data argument"), self.peek().span));
            }
            input = Some(self.pipeline()?);
            more = self.eat(&Tok::Comma);
        }

        let mut cols = Vec::new();
        let mut exprs = Vec::new();
        let mut pairs = Vec::new();
        let mut right: Option<Pipeline> = None;
        let mut by: Option<Vec<(String, String)>> = None;
        let mut head: Option<usize> = None;

        if more && self.peek().tok != Tok::RParen {
            let mut index = 0;
            loop {
                let arg_start = self.peek().span;
                let arg_name = self.named_arg();
                match (verb_name, &arg_name) {
                    ("select" | "group_by", None) => cols.push(self.ident("a column name")?.node),
                    ("filter" | "arrange", None) => exprs.push(self.expr()?),
                    ("mutate" | "summarise" | "summarize", Some(n)) => {
                        pairs.push((n.node.clone(), self.expr()?));
                    }
                    ("mutate" | "summarise" | "summarize", None) => {
                        return Err(syntax(
                            format!("`{verb_name}` arguments must be named, as in `name = expr`"),
                            arg_start,
                        ));
                    }
                    ("head", None) if index == 0 => head = Some(self.count()?),
                    ("head", Some(n)) if n.node == "n" && head.is_none() => head = Some(self.count()?),
                    ("left_join", None) if index == 0 => {
                        self.enter(arg_start)?;
                        right = Some(self.pipeline()?);
                        self.leave();
                    }
                    ("left_join", Some(n)) if n.node == "by" && by.is_none() => by = Some(self.join_keys()?),
                    ("ungroup" | "distinct" | "collect", _) => {
                        return Err(syntax(format!("`{verb_name}` takes no arguments"), arg_start));
                    }
                    (_, Some(n)) => {
                        return Err(syntax(
                            format!("unexpected argument `{}` in `{verb_name}`", n.node),
                            n.span,
                        ));
                    }
                    (_, None) => {
                        return Err(syntax(format!("unexpected argument to `{verb_name}`"), arg_start));
                    }
                }
                index += 1;
                if !self.eat(&Tok::Comma) {
                    break;
                }
            }
        }
        let close = self.expect(|t| *t == Tok::RParen, "`,` or `)`")?;
        let span = merge(name.span, close.span);

        let need = |ok: bool, what: &str| {
            if ok {
                Ok(())
            } else {
                Err(syntax(format!("`{verb_name}` needs {what}"), name.span))
            }
        };
        let verb = match verb_name {
            "select" => Verb::Select(cols),
            "filter" => {
                need(!exprs.is_empty(), "a condition")?;
                Verb::Filter(exprs)
            }
            "mutate" => {
                need(!pairs.is_empty(), "at least one `name = expr`")?;
                Verb::Mutate(pairs)
            }
            "arrange" => {
                need(!exprs.is_empty(), "at least one sort key")?;
                Verb::Arrange(exprs)
            }
            "group_by" => {
                need(!cols.is_empty(), "at least one column")?;
                Verb::GroupBy(cols)
            }
            "summarise" | "summarize" => {
                need(!pairs.is_empty(), "at least one `name = expr`")?;
                Verb::Summarise(pairs)
            }
            "ungroup" => Verb::Ungroup,
            "distinct" => Verb::Distinct,
            "collect" => Verb::Collect,
            "head" => Verb::Head(head),
            "left_join" => {
                need(right.is_some(), "a right-hand table")?;
                need(by.is_some(), "`by =` join keys")?;
                Verb::LeftJoin {
                    right: Box::new(right.expect("checked")),
                    by: by.expect("checked"),
                }
            }
            _ => unreachable!("verb names are checked before the call"),
        };
        Ok((input, Spanned::new(verb, span)))
    }

    fn count(&mut self) -> Result<usize> {
        let t = self.peek().clone();
        match t.tok {
            Tok::Int(i) => {
                self.advance();
                usize::try_from(i).map_err(|_| syntax("row count is too large", t.span))
            }
            _ => Err(self.unexpected(&t, "a row count")),
        }
    }

    /// `"k"`, or `c("left" = "right", "k", ...)`.
    fn join_keys(&mut self) -> Result<Vec<(String, String)>> {
        let string = |p: &mut Self| -> Result<String> {
            let t = p.expect(|t| matches!(t, Tok::Str(_)), "a quoted column name")?;
            match t.tok {
                Tok::Str(s) => Ok(s),
                _ => unreachable!(),
            }
        };
        if matches!(self.peek().tok, Tok::Str(_)) {
            let k = string(self)?;
            return Ok(vec![(k.clone(), k)]);
        }
        let c = self.ident("`c(...)` or a quoted column name")?;
        if c.node != "c" || self.peek().tok != Tok::LParen {
            return Err(syntax("expected `c(...)` or a quoted column name", c.span));
        }
        self.advance();
        let mut keys = Vec::new();
        loop {
            let left = string(self)?;
            let right = if self.eat(&Tok::Equals) { string(self)? } else { left.clone() };
            keys.push((left, right));
            if !self.eat(&Tok::Comma) {
                break;
            }
        }
        self.expect(|t| *t == Tok::RParen, "`,` or `)`")?;
        Ok(keys)
    }

    // ---- expressions ----

    pub(crate) fn expr(&mut self) -> Result<Expr> {
        Ok(self.or_level()?.0)
    }

    fn binary(&self, op: BinaryOp, left: (Expr, usize), right: (Expr, usize), span: SourceSpan) -> Result<(Expr, usize)> {
        let depth = left.1.max(right.1) + 1;
        if depth > MAX_EXPR_DEPTH {
            return Err(syntax("expression is nested too deeply", span));
        }
        Ok((
            Expr::Binary {
                op,
                left: Box::new(left.0),
                right: Box::new(right.0),
            },
            depth,
        ))
    }

    fn level(
        &mut self,
        ops: impl Fn(&Tok) -> Option<BinaryOp>,
        next: fn(&mut Self) -> Result<(Expr, usize)>,
    ) -> Result<(Expr, usize)> {
        let mut left = next(self)?;
        while let Some(op) = ops(&self.peek().tok) {
            let t = self.advance();
            self.skip_newlines();
            let right = next(self)?;
            left = self.binary(op, left, right, t.span)?;
        }
        Ok(left)
    }

    fn or_level(&mut self) -> Result<(Expr, usize)> {
        self.level(|t| (*t == Tok::Bar).then_some(BinaryOp::Or), Self::and_level)
    }

    fn and_level(&mut self) -> Result<(Expr, usize)> {
        self.level(|t| (*t == Tok::Amp).then_some(BinaryOp::And), Self::compare_level)
    }

    fn compare_level(&mut self) -> Result<(Expr, usize)> {
        let mut left = self.add_level()?;
        loop {
            let op = match self.peek().tok {
                Tok::EqEq => BinaryOp::Eq,
                Tok::NotEq => BinaryOp::NotEq,
                Tok::Lt => BinaryOp::Lt,
                Tok::LtEq => BinaryOp::LtEq,
                Tok::Gt => BinaryOp::Gt,
                Tok::GtEq => BinaryOp::GtEq,
                Tok::In => {
                    let t = self.advance();
                    self.skip_newlines();
                    let list = self.in_list()?;
                    let depth = left.1 + 1;
                    if depth > MAX_EXPR_DEPTH {
                        return Err(syntax("expression is nested too deeply", t.span));
                    }
                    left = (
                        Expr::InList {
                            expr: Box::new(left.0),
                            list,
                        },
                        depth,
                    );
                    continue;
                }
                _ => return Ok(left),
            };
            let t = self.advance();
            self.skip_newlines();
            let right = self.add_level()?;
            left = self.binary(op, left, right, t.span)?;
        }
    }

    fn add_level(&mut self) -> Result<(Expr, usize)> {
        self.level(
            |t| match t {
                Tok::Plus => Some(BinaryOp::Add),
                Tok::Minus => Some(BinaryOp::Sub),
                _ => None,
            },
            Self::mul_level,
        )
    }

    fn mul_level(&mut self) -> Result<(Expr, usize)> {
        self.level(
            |t| match t {
                Tok::Star => Some(BinaryOp::Mul),
                Tok::Slash => Some(BinaryOp::Div),
                _ => None,
            },
            Self::unary,
        )
    }

    fn unary(&mut self) -> Result<(Expr, usize)> {
        let t = self.peek().clone();
        let op = match t.tok {
            Tok::Bang => UnaryOp::Not,
            Tok::Minus => UnaryOp::Neg,
            _ => return self.primary(),
        };
        self.advance();
        if op == UnaryOp::Neg && self.peek().tok == Tok::Int(1u64 << 63) {
            self.advance();
            return Ok((Expr::Literal(Value::Int(i64::MIN)), 1));
        }
        self.enter(t.span)?;
        let (inner, depth) = self.unary()?;
        self.leave();
        let folded = match (op, &inner) {
            (UnaryOp::Neg, Expr::Literal(Value::Int(i))) => i.checked_neg().map(Value::Int),
            (UnaryOp::Neg, Expr::Literal(Value::Float(x))) => Some(Value::Float(-x)),
            _ => None,
        };
        if let Some(v) = folded {
            return Ok((Expr::Literal(v), depth));
        }
        if depth + 1 > MAX_EXPR_DEPTH {
            return Err(syntax("expression is nested too deeply", t.span));
        }
        Ok((
            Expr::Unary {
                op,
                expr: Box::new(inner),
            },
            depth + 1,
        ))
    }

    fn literal(&mut self) -> Option<Result<Value>> {
        let t = self.peek().clone();
        let v = match t.tok {
            Tok::Int(i) => match i64::try_from(i) {
                Ok(i) => Value::Int(i),
                Err(_) => return Some(Err(syntax(format!("integer `{i}` is out of range"), t.span))),
            },
            Tok::Float(x) => Value::Float(x),
            Tok::Str(s) => Value::Str(s),
            Tok::True => Value::Bool(true),
            Tok::False => Value::Bool(false),
            Tok::Na => Value::Null,
            _ => return None,
        };
        self.advance();
        Some(Ok(v))
    }

    fn primary(&mut self) -> Result<(Expr, usize)> {
        if let Some(v) = self.literal() {
            return Ok((Expr::Literal(v?), 1));
        }
        let t = self.peek().clone();
        match &t.tok {
            Tok::LParen => {
                self.advance();
                self.enter(t.span)?;
                let inner = self.or_level()?;
                self.leave();
                self.expect(|t| *t == Tok::RParen, "`)`")?;
                Ok(inner)
            }
            Tok::Ident(name) if *self.peek2() == Tok::LParen => {
                let name = name.clone();
                self.advance();
                self.enter(t.span)?;
                let call = self.call(&name, t.span);
                self.leave();
                call
            }
            Tok::Ident(name) => {
                let name = name.clone();
                self.advance();
                Ok((Expr::Column(name), 1))
            }
            _ => Err(self.unexpected(&t, "an expression")),
        }
    }

    fn call(&mut self, name: &str, span: SourceSpan) -> Result<(Expr, usize)> {
        let func = match name {
            "desc" => None,
            "c" => {
                return Err(syntax(
                    "`c(...)` is only allowed after `%in%` and in `by =`",
                    span,
                ))
            }
            _ => match Func::from_name(name) {
                Some(f) => Some(f),
                None if RESERVED_CALLS.contains(&name) => {
                    return Err(Error::Reserved {
                        construct: name.to_owned(),
                        span,
                    })
                }
                None if VERBS.contains(&name) => {
                    return Err(syntax(
                        format!("verb `{name}` cannot be used inside an expression"),
                        span,
                    ))
                }
                None => return Err(syntax(format!("unknown function `{name}`"), span)),
            },
        };
        self.advance();

        let mut args = Vec::new();
        let mut named: Vec<(String, Expr)> = Vec::new();
        let mut depth = 0;
        if self.peek().tok != Tok::RParen {
            loop {
                let arg_name = self.named_arg();
                let (e, d) = self.or_level()?;
                depth = depth.max(d);
                match arg_name {
                    None => args.push(e),
                    Some(n) if func == Some(Func::Paste) && n.node == "sep" && named.is_empty() => {
                        named.push((n.node, e));
                    }
                    Some(n) => {
                        return Err(syntax(
                            format!("unexpected argument `{}` in `{name}`", n.node),
                            n.span,
                        ))
                    }
                }
                if !self.eat(&Tok::Comma) {
                    break;
                }
            }
        }
        self.expect(|t| *t == Tok::RParen, "`,` or `)`")?;
        if depth + 1 > MAX_EXPR_DEPTH {
            return Err(syntax("expression is nested too deeply", span));
        }

        let expr = match func {
            Some(func) => Expr::Call { func, args, named },
            None => {
                if args.len() != 1 {
                    return Err(syntax("`desc` takes exactly one argument", span));
                }
                Expr::Unary {
                    op: UnaryOp::Desc,
                    expr: Box::new(args.pop().expect("one argument")),
                }
            }
        };
        Ok((expr, depth + 1))
    }

    /// The `c(...)` literal list on the right of `%in%`.
    fn in_list(&mut self) -> Result<Vec<Value>> {
        let c = self.peek().clone();
        if !(c.tok == Tok::Ident("c".into()) && *self.peek2() == Tok::LParen) {
            return Err(self.unexpected(&c, "`c(...)` after `%in%`"));
        }
        self.advance();
        self.advance();
        let mut list = Vec::new();
        loop {
            let negative = self.eat(&Tok::Minus);
            let t = self.peek().clone();
            let v = if negative && t.tok == Tok::Int(1u64 << 63) {
                self.advance();
                Value::Int(i64::MIN)
            } else {
                match self.literal() {
                    Some(v) => v?,
                    None => return Err(self.unexpected(&t, "a literal value")),
                }
            };
            let v = match (negative, v) {
                (false, v) => v,
                (true, Value::Int(i)) => Value::Int(i.checked_neg().unwrap_or(i)),
                (true, Value::Float(x)) => Value::Float(-x),
                (true, _) => return Err(syntax("only numbers can be negated", t.span)),
            };
            list.push(v);
            if !self.eat(&Tok::Comma) {
                break;
            }
        }
        self.expect(|t| *t == Tok::RParen, "`,` or `)`")?;
        Ok(list)
    }
}
