use crate::error::SourceSpan;

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Tok {
    Ident(String),
    /// Unsigned digits; sign folding happens in the parser.
    Int(u64),
    Float(f64),
    Str(String),
    True,
    False,
    Na,
    LParen,
    RParen,
    Comma,
    Semi,
    Newline,
    Assign,
    Equals,
    EqEq,
    NotEq,
    Lt,
    LtEq,
    Gt,
    GtEq,
    Plus,
    Minus,
    Star,
    Slash,
    Bang,
    Amp,
    Bar,
    Pipe,
    In,
    /// A construct outside the supported language, such as `~` or `$`.
    Reserved(String),
    /// Text that cannot start any token; carries the message.
    Bad(String),
    Eof,
}

impl Tok {
    pub(crate) fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Int(i) => format!("`{i}`"),
            Tok::Float(x) => format!("`{x}`"),
            Tok::Str(_) => "a string".to_owned(),
            Tok::True => "`TRUE`".to_owned(),
            Tok::False => "`FALSE`".to_owned(),
            Tok::Na => "`NA`".to_owned(),
            Tok::LParen => "`(`".to_owned(),
            Tok::RParen => "`)`".to_owned(),
            Tok::Comma => "`,`".to_owned(),
            Tok::Semi => "`;`".to_owned(),
            Tok::Newline => "end of line".to_owned(),
            Tok::Assign => "`<-`".to_owned(),
            Tok::Equals => "`=`".to_owned(),
            Tok::EqEq => "`==`".to_owned(),
            Tok::NotEq => "`!=`".to_owned(),
            Tok::Lt => "`<`".to_owned(),
            Tok::LtEq => "`<=`".to_owned(),
            Tok::Gt => "`>`".to_owned(),
            Tok::GtEq => "`>=`".to_owned(),
            Tok::Plus => "`+`".to_owned(),
            Tok::Minus => "`-`".to_owned(),
            Tok::Star => "`*`".to_owned(),
            Tok::Slash => "`/`".to_owned(),
            Tok::Bang => "`!`".to_owned(),
            Tok::Amp => "`&`".to_owned(),
            Tok::Bar => "`|`".to_owned(),
            Tok::Pipe => "a pipe".to_owned(),
            Tok::In => "`%in%`".to_owned(),
            Tok::Reserved(s) => format!("`{s}`"),
            Tok::Bad(_) => "an invalid token".to_owned(),
            Tok::Eof => "end of input".to_owned(),
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Token {
    pub tok: Tok,
    pub span: SourceSpan,
}

/// Splits script text into tokens. Never fails: problems become `Bad` or
/// `Reserved` tokens so the parser reports them in source order.
///
/// Line breaks are only significant outside parentheses.
pub(crate) fn tokenize(text: &str) -> Vec<Token> {
    let mut lx = Lexer {
        text,
        pos: 0,
        line: 1,
        column: 1,
        depth: 0,
        out: Vec::new(),
    };
    lx.run();
    lx.out
}

struct Lexer<'a> {
    text: &'a str,
    pos: usize,
    line: usize,
    column: usize,
    depth: usize,
    out: Vec<Token>,
}

fn ident_start(c: char) -> bool {
    c.is_alphabetic() || c == '.'
}

fn ident_continue(c: char) -> bool {
    c.is_alphanumeric() || c == '.' || c == '_'
}

impl Lexer<'_> {
    fn peek(&self) -> Option<char> {
        self.text[self.pos..].chars().next()
    }

    fn peek_at(&self, n: usize) -> Option<char> {
        self.text[self.pos..].chars().nth(n)
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn push(&mut self, tok: Tok, start: (usize, usize, usize)) {
        self.out.push(Token {
            tok,
            span: SourceSpan {
                start: start.0,
                end: self.pos,
                line: start.1,
                column: start.2,
            },
        });
    }

    fn run(&mut self) {
        while let Some(c) = self.peek() {
            let start = (self.pos, self.line, self.column);
            match c {
                '\n' => {
                    self.bump();
                    if self.depth == 0 {
                        self.push(Tok::Newline, start);
                    }
                }
                c if c.is_whitespace() => {
                    self.bump();
                }
                '#' => {
                    while self.peek().is_some_and(|c| c != '\n') {
                        self.bump();
                    }
                }
                '\'' | '"' => self.string(c, start),
                c if c.is_ascii_digit()
                    || (c == '.' && self.peek_at(1).is_some_and(|d| d.is_ascii_digit())) =>
                {
                    self.number(start)
                }
                c if ident_start(c) => {
                    let begin = self.pos;
                    while self.peek().is_some_and(ident_continue) {
                        self.bump();
                    }
                    let word = &self.text[begin..self.pos];
                    let tok = match word {
                        "TRUE" => Tok::True,
                        "FALSE" => Tok::False,
                        "NA" => Tok::Na,
                        _ => Tok::Ident(word.to_owned()),
                    };
                    self.push(tok, start);
                }
                '%' => self.percent(start),
                _ => {
                    self.bump();
                    let next = self.peek();
                    let two = |tok: Tok, lx: &mut Self| {
                        lx.bump();
                        tok
                    };
                    let tok = match (c, next) {
                        ('(', _) => {
                            self.depth += 1;
                            Tok::LParen
                        }
                        (')', _) => {
                            self.depth = self.depth.saturating_sub(1);
                            Tok::RParen
                        }
                        (',', _) => Tok::Comma,
                        (';', _) => Tok::Semi,
                        ('<', Some('-')) => two(Tok::Assign, self),
                        ('<', Some('=')) => two(Tok::LtEq, self),
                        ('<', _) => Tok::Lt,
                        ('>', Some('=')) => two(Tok::GtEq, self),
                        ('>', _) => Tok::Gt,
                        ('=', Some('=')) => two(Tok::EqEq, self),
                        ('=', _) => Tok::Equals,
                        ('!', Some('=')) => two(Tok::NotEq, self),
                        ('!', _) => Tok::Bang,
                        ('+', _) => Tok::Plus,
                        ('-', Some('>')) => two(Tok::Bad("right assignment `->` is not supported".into()), self),
                        ('-', _) => Tok::Minus,
                        ('*', _) => Tok::Star,
                        ('/', _) => Tok::Slash,
                        ('&', Some('&')) => two(Tok::Bad("`&&` is not supported; use `&`".into()), self),
                        ('&', _) => Tok::Amp,
                        ('|', Some('>')) => two(Tok::Pipe, self),
                        ('|', Some('|')) => two(Tok::Bad("`||` is not supported; use `|`".into()), self),
                        ('|', _) => Tok::Bar,
                        ('~' | '$' | '[' | ']' | '{' | '}' | '@' | '^', _) => Tok::Reserved(c.to_string()),
                        (c, _) => Tok::Bad(format!("unexpected character `{c}`")),
                    };
                    self.push(tok, start);
                }
            }
        }
        let start = (self.pos, self.line, self.column);
        self.push(Tok::Eof, start);
    }

    fn string(&mut self, quote: char, start: (usize, usize, usize)) {
        self.bump();
        let mut value = String::new();
        loop {
            match self.bump() {
                None => {
                    self.push(Tok::Bad("unterminated string".into()), start);
                    return;
                }
                Some(c) if c == quote => {
                    if self.peek() == Some(quote) {
                        self.bump();
                        value.push(quote);
                    } else {
                        break;
                    }
                }
                Some(c) => value.push(c),
            }
        }
        self.push(Tok::Str(value), start);
    }

    fn number(&mut self, start: (usize, usize, usize)) {
        let begin = self.pos;
        let mut float = false;
        while self.peek().is_some_and(|c| c.is_ascii_digit()) {
            self.bump();
        }
        if self.peek() == Some('.') {
            float = true;
            self.bump();
            while self.peek().is_some_and(|c| c.is_ascii_digit()) {
                self.bump();
            }
        }
        if matches!(self.peek(), Some('e' | 'E')) {
            let sign = matches!(self.peek_at(1), Some('+' | '-'));
            let digit_at = if sign { 2 } else { 1 };
            if self.peek_at(digit_at).is_some_and(|c| c.is_ascii_digit()) {
                float = true;
                for _ in 0..digit_at {
                    self.bump();
                }
                while self.peek().is_some_and(|c| c.is_ascii_digit()) {
                    self.bump();
                }
            }
        }
        if self.peek().is_some_and(ident_continue) {
            while self.peek().is_some_and(ident_continue) {
                self.bump();
            }
            let text = &self.text[begin..self.pos];
            self.push(Tok::Bad(format!("malformed number `{text}`")), start);
            return;
        }
        let text = &self.text[begin..self.pos];
        let tok = if float {
            match text.parse::<f64>() {
                Ok(x) if x.is_finite() => Tok::Float(x),
                _ => Tok::Bad(format!("number `{text}` is out of range")),
            }
        } else {
            match text.parse::<u64>() {
                Ok(i) if i <= 1u64 << 63 => Tok::Int(i),
                _ => Tok::Bad(format!("integer `{text}` is out of range")),
            }
        };
        self.push(tok, start);
    }

    fn percent(&mut self, start: (usize, usize, usize)) {
        self.bump();
        let begin = self.pos;
        while self.peek().is_some_and(|c| c != '%' && c != '\n') {
            self.bump();
        }
        if self.peek() != Some('%') {
            self.push(Tok::Bad("unterminated `%` operator".into()), start);
            return;
        }
        let op = self.text[begin..self.pos].to_owned();
        self.bump();
        let tok = match op.as_str() {
            ">" => Tok::Pipe,
            "in" => Tok::In,
            _ => Tok::Bad(format!("unknown operator `%{op}%`")),
        };
        self.push(tok, start);
    }
}
