//! Recursive-descent parser for `.gcap` source text.
//!
//! ```text
//! program   := classdecl* "main" "{" seq "}"
//! classdecl := "class" IDENT "(" fieldlist? ")" "{" method* "}"
//! field     := cap? IDENT
//! method    := cap? "method" IDENT "(" mparams? ")" ("->" cap)? "{" seq "}"
//! mparam    := IDENT (":" cap)?
//! cap       := "moved" | "lent" | "lend" | "?"
//! seq       := expr (";" seq)?
//! expr      := postfix (":=" expr)?
//! postfix   := primary ("." IDENT ("(" args? ")")?)*
//! primary   := "let" cap? IDENT "=" expr ";" seq
//!            | "spawn" "{" seq "}" | "receive" | "send" "(" expr "," expr ")"
//!            | "new" IDENT "(" args? ")" | "unit" | "this" | IDENT | "(" seq ")"
//! ```
//!
//! `e1; e2` becomes `let ? %N = e1; e2` with a name no source program can
//! spell.

use std::fmt;

use thiserror::Error;

use crate::ast::{
    Capability, ClassDecl, ClassTable, Expr, ExprKind, MethodDecl, Pos, Program, Span, Value,
};

#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("{span}: expected {}, found {found}", ExpectedList(.expected))]
pub struct ParseError {
    pub span: Span,
    pub expected: Vec<String>,
    pub found: String,
}

struct ExpectedList<'a>(&'a [String]);

impl fmt::Display for ExpectedList<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            [] => f.write_str("nothing"),
            [one] => f.write_str(one),
            many => write!(f, "one of {}", many.join(", ")),
        }
    }
}

const KEYWORDS: &[&str] = &[
    "class", "main", "method", "let", "spawn", "receive", "send", "new", "unit", "this", "moved",
    "lent", "lend",
];

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Kw(&'static str),
    Sym(&'static str),
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "identifier `{s}`"),
            Tok::Kw(k) | Tok::Sym(k) => write!(f, "`{k}`"),
            Tok::Eof => f.write_str("end of input"),
        }
    }
}

#[derive(Clone, Debug)]
struct Token {
    tok: Tok,
    span: Span,
}

fn lex(text: &str) -> Result<Vec<Token>, ParseError> {
    const SYMBOLS: &[&str] = &[":=", "->", "(", ")", "{", "}", ",", ";", ".", "=", ":", "?"];

    let mut tokens = Vec::new();
    let chars: Vec<char> = text.chars().collect();
    let (mut i, mut line, mut col) = (0usize, 1u32, 1u32);

    while i < chars.len() {
        let c = chars[i];
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'/') {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let start = Pos { line, column: col };
        if c.is_ascii_alphabetic() || c == '_' {
            let begin = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            let word: String = chars[begin..i].iter().collect();
            col += (i - begin) as u32;
            let tok = match KEYWORDS.iter().find(|k| **k == word) {
                Some(k) => Tok::Kw(k),
                None => Tok::Ident(word),
            };
            tokens.push(Token { tok, span: Span::new(start, Pos { line, column: col }) });
            continue;
        }
        let rest: String = chars[i..chars.len().min(i + 2)].iter().collect();
        match SYMBOLS.iter().find(|s| rest.starts_with(**s)) {
            Some(sym) => {
                i += sym.len();
                col += sym.len() as u32;
                tokens.push(Token {
                    tok: Tok::Sym(sym),
                    span: Span::new(start, Pos { line, column: col }),
                });
            }
            None => {
                return Err(ParseError {
                    span: Span::new(start, Pos { line, column: col + 1 }),
                    expected: vec!["a token".into()],
                    found: format!("character `{c}`"),
                })
            }
        }
    }
    let end = Pos { line, column: col };
    tokens.push(Token { tok: Tok::Eof, span: Span::new(end, end) });
    Ok(tokens)
}

/// Parses a whole program. Stops at the first error.
pub fn parse_program(text: &str) -> Result<Program, ParseError> {
    let mut p = Parser { tokens: lex(text)?, pos: 0, in_method: false, hidden: 0 };
    p.program()
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    in_method: bool,
    hidden: u32,
}

type PResult<T> = Result<T, ParseError>;

impl Parser {
    fn peek(&self) -> &Tok {
        &self.tokens[self.pos].tok
    }

    fn span(&self) -> Span {
        self.tokens[self.pos].span
    }

    fn prev_span(&self) -> Span {
        self.tokens[self.pos.saturating_sub(1)].span
    }

    fn bump(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if t.tok != Tok::Eof {
            self.pos += 1;
        }
        t
    }

    fn error<T>(&self, expected: &[&str]) -> PResult<T> {
        Err(ParseError {
            span: self.span(),
            expected: expected.iter().map(|s| s.to_string()).collect(),
            found: self.peek().to_string(),
        })
    }

    fn at_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Kw(k) if *k == kw)
    }

    fn at_sym(&self, sym: &str) -> bool {
        matches!(self.peek(), Tok::Sym(s) if *s == sym)
    }

    fn eat_sym(&mut self, sym: &str) -> bool {
        if self.at_sym(sym) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_sym(&mut self, sym: &str) -> PResult<Span> {
        if self.at_sym(sym) {
            Ok(self.bump().span)
        } else {
            self.error(&[&format!("`{sym}`")])
        }
    }

    fn expect_kw(&mut self, kw: &str) -> PResult<Span> {
        if self.at_kw(kw) {
            Ok(self.bump().span)
        } else {
            self.error(&[&format!("`{kw}`")])
        }
    }

    fn expect_ident(&mut self) -> PResult<(String, Span)> {
        match self.peek().clone() {
            Tok::Ident(name) => Ok((name, self.bump().span)),
            _ => self.error(&["identifier"]),
        }
    }

    fn cap(&mut self) -> Option<Capability> {
        let cap = match self.peek() {
            Tok::Kw("moved") => Capability::Moved,
            Tok::Kw("lent" | "lend") => Capability::Lent,
            Tok::Sym("?") => Capability::Dyn,
            _ => return None,
        };
        self.bump();
        Some(cap)
    }

    fn expect_cap(&mut self) -> PResult<Capability> {
        match self.cap() {
            Some(c) => Ok(c),
            None => self.error(&["`moved`", "`lent`", "`?`"]),
        }
    }

    fn program(&mut self) -> PResult<Program> {
        let mut classes = Vec::new();
        while self.at_kw("class") {
            classes.push(self.class()?);
        }
        if !self.at_kw("main") {
            return self.error(&["`class`", "`main`"]);
        }
        self.bump();
        self.expect_sym("{")?;
        let main = self.seq()?;
        self.expect_sym("}")?;
        if *self.peek() != Tok::Eof {
            return self.error(&["end of input"]);
        }
        Ok(Program { classes: ClassTable::new(classes), main })
    }

    fn class(&mut self) -> PResult<ClassDecl> {
        let start = self.expect_kw("class")?;
        let (name, _) = self.expect_ident()?;
        self.expect_sym("(")?;
        let mut fields = Vec::new();
        if !self.at_sym(")") {
            loop {
                let cap = self.cap().unwrap_or_default();
                let (f, _) = self.expect_ident()?;
                fields.push((f, cap));
                if !self.eat_sym(",") {
                    break;
                }
            }
        }
        self.expect_sym(")")?;
        self.expect_sym("{")?;
        let mut methods = Vec::new();
        while !self.at_sym("}") {
            methods.push(self.method()?);
        }
        let end = self.expect_sym("}")?;
        Ok(ClassDecl { name, fields, methods, span: start.to(end) })
    }

    fn method(&mut self) -> PResult<MethodDecl> {
        let start = self.span();
        let recv_cap = self.cap().unwrap_or_default();
        if !self.at_kw("method") {
            return self.error(&["`method`", "`}`"]);
        }
        self.bump();
        let (name, _) = self.expect_ident()?;
        self.expect_sym("(")?;
        let mut params = Vec::new();
        if !self.at_sym(")") {
            loop {
                let (x, _) = self.expect_ident()?;
                let cap = if self.eat_sym(":") { self.expect_cap()? } else { Capability::Dyn };
                params.push((x, cap));
                if !self.eat_sym(",") {
                    break;
                }
            }
        }
        self.expect_sym(")")?;
        let ret_cap = if self.eat_sym("->") { self.expect_cap()? } else { Capability::Dyn };
        self.expect_sym("{")?;
        self.in_method = true;
        let body = self.seq();
        self.in_method = false;
        let body = body?;
        let end = self.expect_sym("}")?;
        Ok(MethodDecl { recv_cap, name, params, ret_cap, body, span: start.to(end) })
    }

    fn seq(&mut self) -> PResult<Expr> {
        let first = self.expr()?;
        if !self.eat_sym(";") {
            return Ok(first);
        }
        let rest = self.seq()?;
        let var = format!("%{}", self.hidden);
        self.hidden += 1;
        let span = first.span.to(rest.span);
        Ok(Expr::new(
            ExprKind::Let {
                cap: Capability::Dyn,
                var,
                rhs: Box::new(first),
                body: Box::new(rest),
            },
            span,
        ))
    }

    fn expr(&mut self) -> PResult<Expr> {
        let target = self.postfix()?;
        if !self.at_sym(":=") {
            return Ok(target);
        }
        let ExprKind::FieldGet { recv, field } = target.kind else {
            return self.error(&["`;`", "`)`", "`}`"]);
        };
        self.bump();
        let rhs = self.expr()?;
        let span = target.span.to(rhs.span);
        Ok(Expr::new(ExprKind::FieldSet { recv, field, rhs: Box::new(rhs) }, span))
    }

    fn postfix(&mut self) -> PResult<Expr> {
        let mut e = self.primary()?;
        while self.eat_sym(".") {
            let (name, name_span) = self.expect_ident()?;
            if self.at_sym("(") {
                let args = self.args()?;
                let span = e.span.to(self.prev_span());
                e = Expr::new(ExprKind::Call { recv: Box::new(e), method: name, args }, span);
            } else {
                let span = e.span.to(name_span);
                e = Expr::new(ExprKind::FieldGet { recv: Box::new(e), field: name }, span);
            }
        }
        Ok(e)
    }

    fn args(&mut self) -> PResult<Vec<Expr>> {
        self.expect_sym("(")?;
        let mut args = Vec::new();
        if !self.at_sym(")") {
            loop {
                args.push(self.expr()?);
                if !self.eat_sym(",") {
                    break;
                }
            }
        }
        self.expect_sym(")")?;
        Ok(args)
    }

    fn primary(&mut self) -> PResult<Expr> {
        let start = self.span();
        let kind = match self.peek().clone() {
            Tok::Kw("let") => {
                self.bump();
                let cap = self.cap().unwrap_or_default();
                let (var, _) = self.expect_ident()?;
                self.expect_sym("=")?;
                let rhs = self.expr()?;
                self.expect_sym(";")?;
                let body = self.seq()?;
                ExprKind::Let { cap, var, rhs: Box::new(rhs), body: Box::new(body) }
            }
            Tok::Kw("spawn") => {
                self.bump();
                self.expect_sym("{")?;
                let body = self.seq()?;
                self.expect_sym("}")?;
                ExprKind::Spawn(Box::new(body))
            }
            Tok::Kw("receive") => {
                self.bump();
                ExprKind::Receive
            }
            Tok::Kw("send") => {
                self.bump();
                self.expect_sym("(")?;
                let target = self.expr()?;
                self.expect_sym(",")?;
                let payload = self.expr()?;
                self.expect_sym(")")?;
                ExprKind::Send { target: Box::new(target), payload: Box::new(payload) }
            }
            Tok::Kw("new") => {
                self.bump();
                let (class, _) = self.expect_ident()?;
                let args = self.args()?;
                ExprKind::New { class, args }
            }
            Tok::Kw("unit") => {
                self.bump();
                ExprKind::Val(Value::Unit)
            }
            Tok::Kw("this") => {
                if !self.in_method {
                    return Err(ParseError {
                        span: start,
                        expected: vec!["expression".into()],
                        found: "`this` outside a method body".into(),
                    });
                }
                self.bump();
                ExprKind::This
            }
            Tok::Ident(name) => {
                self.bump();
                ExprKind::Var(name)
            }
            Tok::Sym("(") => {
                self.bump();
                let inner = self.seq()?;
                self.expect_sym(")")?;
                return Ok(inner);
            }
            _ => {
                return self.error(&[
                    "`let`", "`spawn`", "`receive`", "`send`", "`new`", "`unit`", "`this`",
                    "identifier", "`(`",
                ])
            }
        };
        Ok(Expr::new(kind, start.to(self.prev_span())))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::print_program;

    fn var(x: &str) -> Expr {
        Expr::bare(ExprKind::Var(x.into()))
    }

    fn unit() -> Expr {
        Expr::bare(ExprKind::Val(Value::Unit))
    }

    fn seq(var: &str, rhs: Expr, body: Expr) -> Expr {
        Expr::bare(ExprKind::Let {
            cap: Capability::Dyn,
            var: var.into(),
            rhs: Box::new(rhs),
            body: Box::new(body),
        })
    }

    #[test]
    fn smallest_program() {
        let p = parse_program("main { unit }").unwrap();
        assert!(p.classes.is_empty());
        assert_eq!(p.main, unit());
    }

    #[test]
    fn golden_lent_field_class() {
        let p = parse_program("class C(lent f) { ? method get() -> ? { this.f } } main { unit }")
            .unwrap();
        let expected = ClassDecl {
            name: "C".into(),
            fields: vec![("f".into(), Capability::Lent)],
            methods: vec![MethodDecl {
                recv_cap: Capability::Dyn,
                name: "get".into(),
                params: vec![],
                ret_cap: Capability::Dyn,
                body: Expr::bare(ExprKind::FieldGet {
                    recv: Box::new(Expr::bare(ExprKind::This)),
                    field: "f".into(),
                }),
                span: Span::default(),
            }],
            span: Span::default(),
        };
        let got = p.classes.get("C").unwrap();
        assert_eq!(got.name, expected.name);
        assert_eq!(got.fields, expected.fields);
        assert_eq!(got.methods.len(), 1);
        let (g, e) = (&got.methods[0], &expected.methods[0]);
        assert_eq!((g.recv_cap, &g.name, &g.params, g.ret_cap), (e.recv_cap, &e.name, &e.params, e.ret_cap));
        assert_eq!(g.body, e.body);
        assert_eq!(p.main, unit());
    }

    #[test]
    fn moved_send_example() {
        let p = parse_program(
            "main { let moved x = new File(); send(spawn { receive }, x); x.close() }",
        )
        .unwrap();
        let send = Expr::bare(ExprKind::Send {
            target: Box::new(Expr::bare(ExprKind::Spawn(Box::new(Expr::bare(ExprKind::Receive))))),
            payload: Box::new(var("x")),
        });
        let close = Expr::bare(ExprKind::Call {
            recv: Box::new(var("x")),
            method: "close".into(),
            args: vec![],
        });
        let expected = Expr::bare(ExprKind::Let {
            cap: Capability::Moved,
            var: "x".into(),
            rhs: Box::new(Expr::bare(ExprKind::New { class: "File".into(), args: vec![] })),
            body: Box::new(seq("%0", send, close)),
        });
        assert_eq!(p.main, expected);
    }

    #[test]
    fn omitted_caps_are_dyn() {
        let p = parse_program("class C(f) { method m(x) { let y = x; y } } main { unit }").unwrap();
        let c = p.classes.get("C").unwrap();
        assert_eq!(c.fields[0].1, Capability::Dyn);
        let m = &c.methods[0];
        assert_eq!((m.recv_cap, m.params[0].1, m.ret_cap), (Capability::Dyn, Capability::Dyn, Capability::Dyn));
        let ExprKind::Let { cap, .. } = &m.body.kind else { panic!() };
        assert_eq!(*cap, Capability::Dyn);
    }

    #[test]
    fn lend_is_lent() {
        let p = parse_program("main { let lend h = unit; h }").unwrap();
        let ExprKind::Let { cap, .. } = p.main.kind else { panic!() };
        assert_eq!(cap, Capability::Lent);
    }

    #[test]
    fn assignment_binds_tighter_than_sequence() {
        let p = parse_program("main { let o = unit; o.f := o; o }").unwrap();
        let ExprKind::Let { body, .. } = p.main.kind else { panic!() };
        let ExprKind::Let { rhs, body, .. } = body.kind else { panic!() };
        assert!(matches!(rhs.kind, ExprKind::FieldSet { .. }));
        assert_eq!(*body, var("o"));
    }

    #[test]
    fn this_outside_method_is_rejected() {
        let err = parse_program("main { this }").unwrap_err();
        assert_eq!(err.span.start, Pos { line: 1, column: 8 });
    }

    #[test]
    fn errors_carry_expected_set() {
        let err = parse_program("main { new C( }").unwrap_err();
        assert_eq!(err.found, "`}`");
        assert!(!err.expected.is_empty());
        let err = parse_program("class C() {} main { unit } extra").unwrap_err();
        assert_eq!(err.expected, ["end of input"]);
        let err = parse_program("main { a.m() := b }").unwrap_err();
        assert_eq!(err.span.start.column, 14);
        assert!(parse_program("main { x $ y }").is_err());
    }

    #[test]
    fn comments_and_spans() {
        let p = parse_program("// header\nmain {\n  unit // trailing\n}").unwrap();
        assert_eq!(p.main.span.start, Pos { line: 3, column: 3 });
    }

    #[test]
    fn print_round_trip_handles_nesting() {
        let src = "class P(moved a, lent b, c) { moved method m(x: lent, y) -> moved { this.a := (let z = x; z); y } }
            main { let p = new P(unit, unit, unit); (let q = p; q).a := (p.c := unit); (unit; unit).m(send(p, receive), (p; p)) }";
        let p = parse_program(src).unwrap();
        let printed = print_program(&p);
        let again = parse_program(&printed).unwrap();
        assert_eq!(p, again, "{printed}");
        assert_eq!(printed, print_program(&again));
    }
}
