use std::collections::BTreeMap;
use std::fmt;

use super::lexer::{lex, Token, TokenKind};
use super::{
    Arm, ArithOp, Binder, Clause, ClausePattern, Const, CtxValue, Pattern, Program, Span, Term,
    TermDecl, TypeDecl,
};
use crate::types::{CtxType, Mult, SessionType, Type};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub struct ParseError {
    pub offset: usize,
    pub line: u32,
    pub col: u32,
    pub expected: Vec<String>,
    pub found: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "ParseError at {}:{} — expected {}; found {}",
            self.line,
            self.col,
            self.expected.join(" or "),
            self.found
        )
    }
}

const KEYWORDS: &[&str] = &[
    "let", "in", "box", "match", "with", "type", "rec", "un", "send", "receive", "select", "close",
    "wait", "fork", "forkWith", "new",
];

const MAX_DEPTH: u32 = 96;

type PResult<T> = Result<T, ParseError>;

pub fn parse_program(text: &str) -> PResult<Program> {
    let mut p = Parser::new(text)?;
    p.layout = true;
    let program = p.program()?;
    p.expect(TokenKind::Eof)?;
    Ok(program)
}

pub fn parse_term(text: &str) -> PResult<Term> {
    let mut p = Parser::new(text)?;
    let t = p.term()?;
    p.expect(TokenKind::Eof)?;
    Ok(t)
}

pub fn parse_type(text: &str) -> PResult<Type> {
    let mut p = Parser::new(text)?;
    let t = p.ty()?;
    p.expect(TokenKind::Eof)?;
    Ok(t)
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    depth: u32,
    fresh: u32,
    /// Set for whole programs: a token in column 1 starts a declaration.
    layout: bool,
}

impl Parser {
    fn new(text: &str) -> PResult<Self> {
        Ok(Self {
            toks: lex(text)?,
            pos: 0,
            depth: 0,
            fresh: 0,
            layout: false,
        })
    }

    fn peek(&self) -> &TokenKind {
        &self.toks[self.pos].kind
    }

    fn peek_at(&self, n: usize) -> &TokenKind {
        let i = (self.pos + n).min(self.toks.len() - 1);
        &self.toks[i].kind
    }

    fn span(&self) -> Span {
        let t = &self.toks[self.pos];
        Span::new(t.line, t.col)
    }

    fn bump(&mut self) -> TokenKind {
        let k = self.toks[self.pos].kind.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        k
    }

    fn error<T>(&self, expected: &[&str]) -> PResult<T> {
        let t = &self.toks[self.pos];
        Err(ParseError {
            offset: t.offset,
            line: t.line,
            col: t.col,
            expected: expected.iter().map(|s| s.to_string()).collect(),
            found: t.kind.describe(),
        })
    }

    fn eat(&mut self, kind: &TokenKind) -> bool {
        if self.peek() == kind {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, kind: TokenKind) -> PResult<()> {
        if self.eat(&kind) {
            Ok(())
        } else {
            self.error(&[&format!("`{}`", kind.symbol())])
        }
    }

    fn is_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), TokenKind::Ident(s) if s == kw)
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        if self.is_kw(kw) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_kw(&mut self, kw: &str) -> PResult<()> {
        if self.eat_kw(kw) {
            Ok(())
        } else {
            self.error(&[&format!("`{kw}`")])
        }
    }

    fn is_uname(&self, name: &str) -> bool {
        matches!(self.peek(), TokenKind::UIdent(s) if s == name)
    }

    fn var_name(&mut self) -> PResult<String> {
        match self.peek() {
            TokenKind::Ident(s) if !KEYWORDS.contains(&s.as_str()) => {
                let s = s.clone();
                self.bump();
                Ok(s)
            }
            _ => self.error(&["variable"]),
        }
    }

    fn label(&mut self) -> PResult<String> {
        match self.peek() {
            TokenKind::UIdent(s) => {
                let s = s.clone();
                self.bump();
                Ok(s)
            }
            _ => self.error(&["label"]),
        }
    }

    fn nat(&mut self) -> PResult<u32> {
        match *self.peek() {
            TokenKind::Int(n) if (0..=u32::MAX as i64).contains(&n) => {
                self.bump();
                Ok(n as u32)
            }
            _ => self.error(&["level"]),
        }
    }

    fn enter(&mut self) -> PResult<()> {
        self.depth += 1;
        if self.depth > MAX_DEPTH {
            return self.error(&["less deeply nested input"]);
        }
        Ok(())
    }

    fn leave(&mut self) {
        self.depth -= 1;
    }

    /// Runs `f`, restoring the position if it fails.
    fn attempt<T>(&mut self, f: impl FnOnce(&mut Self) -> PResult<T>) -> Option<T> {
        let (pos, depth) = (self.pos, self.depth);
        match f(self) {
            Ok(v) => Some(v),
            Err(_) => {
                self.pos = pos;
                self.depth = depth;
                None
            }
        }
    }

    // ---- types ----

    fn ty(&mut self) -> PResult<Type> {
        self.enter()?;
        let r = self.ty_inner();
        self.leave();
        r
    }

    fn ty_inner(&mut self) -> PResult<Type> {
        let lhs = self.prod_ty()?;
        if self.eat(&TokenKind::Lolli) {
            Ok(Type::arrow(lhs, self.ty()?))
        } else {
            Ok(lhs)
        }
    }

    fn prod_ty(&mut self) -> PResult<Type> {
        let lhs = self.atom_ty()?;
        if self.eat(&TokenKind::Star) {
            self.enter()?;
            let rhs = self.prod_ty();
            self.leave();
            Ok(Type::prod(lhs, rhs?))
        } else {
            Ok(lhs)
        }
    }

    fn starts_session(&self) -> bool {
        matches!(
            self.peek(),
            TokenKind::Bang | TokenKind::Question | TokenKind::SelectBrace | TokenKind::BranchBrace
        ) || self.is_uname("Wait")
            || self.is_uname("Close")
            || self.is_kw("rec")
    }

    fn atom_ty(&mut self) -> PResult<Type> {
        if self.starts_session() {
            return Ok(Type::Sess(self.session()?));
        }
        match self.peek().clone() {
            TokenKind::UIdent(s) => {
                self.bump();
                Ok(match s.as_str() {
                    "Unit" => Type::Unit,
                    "Int" => Type::Int,
                    "Dual" => {
                        self.enter()?;
                        let t = self.atom_ty();
                        self.leave();
                        Type::Dual(Box::new(t?))
                    }
                    _ => Type::Named(s),
                })
            }
            TokenKind::Ident(s) if !KEYWORDS.contains(&s.as_str()) => {
                self.bump();
                Ok(Type::Named(s))
            }
            TokenKind::LBrack => {
                self.bump();
                let c = self.ctx_type_body()?;
                self.expect(TokenKind::RBrack)?;
                Ok(Type::Box(Box::new(c)))
            }
            TokenKind::LParen => {
                self.bump();
                let t = self.ty()?;
                self.expect(TokenKind::RParen)?;
                Ok(t)
            }
            _ => self.error(&["type"]),
        }
    }

    /// `ctx |- type`, the inside of `[...]` or `(...)`.
    fn ctx_type_body(&mut self) -> PResult<CtxType> {
        let mut params = Vec::new();
        if !matches!(self.peek(), TokenKind::Turnstile) {
            params.push(self.ctx_type()?);
            while self.eat(&TokenKind::Comma) {
                params.push(self.ctx_type()?);
            }
        }
        // `[T]` abbreviates `[|- T]`.
        if params.len() == 1 && params[0].params.is_empty() && matches!(self.peek(), TokenKind::RBrack) {
            let only = params.pop().unwrap();
            return Ok(CtxType::plain(only.result));
        }
        self.expect(TokenKind::Turnstile)?;
        let result = self.ty()?;
        Ok(CtxType { params, result })
    }

    fn ctx_type(&mut self) -> PResult<CtxType> {
        self.enter()?;
        let r = self.ctx_type_inner();
        self.leave();
        r
    }

    fn ctx_type_inner(&mut self) -> PResult<CtxType> {
        if matches!(self.peek(), TokenKind::LParen) && self.turnstile_inside_parens() {
            self.bump();
            let c = self.ctx_type_body()?;
            self.expect(TokenKind::RParen)?;
            return Ok(c);
        }
        Ok(CtxType::plain(self.ty()?))
    }

    /// Whether the parenthesis at the cursor directly contains a `|-`.
    fn turnstile_inside_parens(&self) -> bool {
        let mut depth = 0usize;
        for t in &self.toks[self.pos..] {
            match t.kind {
                TokenKind::LParen | TokenKind::LBrack | TokenKind::LBrace | TokenKind::SelectBrace | TokenKind::BranchBrace => depth += 1,
                TokenKind::RParen | TokenKind::RBrack | TokenKind::RBrace => {
                    depth = depth.saturating_sub(1);
                    if depth == 0 {
                        return false;
                    }
                }
                TokenKind::Turnstile if depth == 1 => return true,
                TokenKind::Eof => return false,
                _ => {}
            }
        }
        false
    }

    fn session(&mut self) -> PResult<SessionType> {
        self.enter()?;
        let r = self.session_inner();
        self.leave();
        r
    }

    fn session_inner(&mut self) -> PResult<SessionType> {
        match self.peek().clone() {
            TokenKind::Bang | TokenKind::Question => {
                let send = self.bump() == TokenKind::Bang;
                let payload = self.ty()?;
                self.expect(TokenKind::Dot)?;
                let k = self.session()?;
                Ok(if send {
                    SessionType::send(payload, k)
                } else {
                    SessionType::recv(payload, k)
                })
            }
            TokenKind::SelectBrace | TokenKind::BranchBrace => {
                let select = self.bump() == TokenKind::SelectBrace;
                let mut branches = BTreeMap::new();
                loop {
                    let span_tok = self.pos;
                    let l = self.label()?;
                    self.expect(TokenKind::Colon)?;
                    let s = self.session()?;
                    if branches.insert(l, s).is_some() {
                        self.pos = span_tok;
                        return self.error(&["distinct branch labels"]);
                    }
                    if !self.eat(&TokenKind::Comma) {
                        break;
                    }
                }
                self.expect(TokenKind::RBrace)?;
                Ok(if select {
                    SessionType::Select(branches)
                } else {
                    SessionType::Branch(branches)
                })
            }
            TokenKind::UIdent(s) => {
                self.bump();
                Ok(match s.as_str() {
                    "Wait" => SessionType::Wait,
                    "Close" => SessionType::Close,
                    _ => SessionType::Var(s),
                })
            }
            TokenKind::Ident(s) if s == "rec" => {
                self.bump();
                let a = match self.peek().clone() {
                    TokenKind::UIdent(a) => {
                        self.bump();
                        a
                    }
                    _ => self.var_name()?,
                };
                self.expect(TokenKind::Dot)?;
                Ok(SessionType::mu(a, self.session()?))
            }
            TokenKind::Ident(s) if !KEYWORDS.contains(&s.as_str()) => {
                self.bump();
                Ok(SessionType::Var(s))
            }
            TokenKind::LParen => {
                self.bump();
                let s = self.session()?;
                self.expect(TokenKind::RParen)?;
                Ok(s)
            }
            _ => self.error(&["session type"]),
        }
    }

    // ---- terms ----

    fn term(&mut self) -> PResult<Term> {
        self.enter()?;
        let r = self.seq();
        self.leave();
        r
    }

    fn seq(&mut self) -> PResult<Term> {
        let first = self.expr()?;
        if self.eat(&TokenKind::Semi) {
            Ok(Term::let_unit(first, self.term()?))
        } else {
            Ok(first)
        }
    }

    fn expr(&mut self) -> PResult<Term> {
        match self.peek() {
            TokenKind::Backslash => self.lambda(),
            TokenKind::Ident(s) if s == "let" => self.let_form(),
            TokenKind::Ident(s) if s == "match" => self.match_form(),
            _ => self.additive(),
        }
    }

    fn binder_name(&mut self) -> PResult<Binder> {
        let span = self.span();
        let name = if self.eat(&TokenKind::Underscore) {
            "_".to_string()
        } else {
            self.var_name()?
        };
        Ok(Binder {
            span,
            ..Binder::new(name)
        })
    }

    fn lambda(&mut self) -> PResult<Term> {
        self.expect(TokenKind::Backslash)?;
        let binder = if self.eat(&TokenKind::LParen) {
            let mut b = self.binder_name()?;
            self.expect(TokenKind::Colon)?;
            b.ann = Some(CtxType::plain(self.ty()?));
            self.expect(TokenKind::RParen)?;
            b
        } else {
            let un = self.eat_kw("un");
            let b = self.binder_name()?;
            if un {
                b.unrestricted()
            } else {
                b
            }
        };
        self.expect(TokenKind::Dot)?;
        Ok(Term::Lam(binder, Box::new(self.term()?)))
    }

    fn let_form(&mut self) -> PResult<Term> {
        self.expect_kw("let")?;
        if self.eat(&TokenKind::Star) {
            self.expect(TokenKind::Eq)?;
            let m = self.term()?;
            self.expect_kw("in")?;
            return Ok(Term::let_unit(m, self.term()?));
        }
        if self.eat_kw("box") {
            let mut binder = self.binder_name()?;
            if self.eat(&TokenKind::Caret) {
                binder.level = self.nat()?;
            }
            self.expect(TokenKind::Eq)?;
            let bound = self.term()?;
            self.expect_kw("in")?;
            let body = self.term()?;
            return Ok(Term::LetBox {
                binder,
                bound: Box::new(bound),
                body: Box::new(body),
            });
        }
        if self.eat(&TokenKind::LParen) {
            let fst = self.binder_name()?;
            self.expect(TokenKind::Comma)?;
            let snd = self.binder_name()?;
            self.expect(TokenKind::RParen)?;
            self.expect(TokenKind::Eq)?;
            let scrut = self.term()?;
            self.expect_kw("in")?;
            let body = self.term()?;
            return Ok(Term::LetPair {
                fst,
                snd,
                scrut: Box::new(scrut),
                body: Box::new(body),
            });
        }
        // `let x = M in N` abbreviates `(\x. N) M`
        let binder = self.binder_name()?;
        self.expect(TokenKind::Eq)?;
        let m = self.term()?;
        self.expect_kw("in")?;
        let n = self.term()?;
        Ok(Term::app(Term::Lam(binder, Box::new(n)), m))
    }

    fn match_form(&mut self) -> PResult<Term> {
        self.expect_kw("match")?;
        let scrut = self.term()?;
        self.expect_kw("with")?;
        self.expect(TokenKind::LBrace)?;
        let mut arms: Vec<Arm> = Vec::new();
        loop {
            let at = self.pos;
            let pat = self.arm_pattern()?;
            if let Pattern::Label(l, _) = &pat {
                if arms.iter().any(|a| matches!(&a.pat, Pattern::Label(m, _) if m == l)) {
                    self.pos = at;
                    return self.error(&["distinct branch labels"]);
                }
            }
            self.expect(TokenKind::Arrow)?;
            let body = self.term()?;
            arms.push(Arm { pat, body });
            if !self.eat(&TokenKind::Comma) {
                break;
            }
        }
        self.expect(TokenKind::RBrace)?;
        Ok(Term::Match {
            scrut: Box::new(scrut),
            arms,
        })
    }

    fn arm_pattern(&mut self) -> PResult<Pattern> {
        match self.peek().clone() {
            TokenKind::UIdent(l) => {
                self.bump();
                Ok(Pattern::Label(l, self.binder_name()?))
            }
            TokenKind::Int(i) => {
                self.bump();
                Ok(Pattern::Int(i))
            }
            TokenKind::Minus => {
                self.bump();
                match *self.peek() {
                    TokenKind::Int(i) => {
                        self.bump();
                        Ok(Pattern::Int(-i))
                    }
                    _ => self.error(&["integer"]),
                }
            }
            _ => {
                let un = self.eat_kw("un");
                let b = self.binder_name()?;
                Ok(Pattern::Bind(if un { b.unrestricted() } else { b }))
            }
        }
    }

    fn additive(&mut self) -> PResult<Term> {
        let lhs = self.multiplicative()?;
        let op = match self.peek() {
            TokenKind::Plus => ArithOp::Add,
            TokenKind::Minus => ArithOp::Sub,
            _ => return Ok(lhs),
        };
        self.bump();
        self.enter()?;
        let rhs = self.additive();
        self.leave();
        Ok(Term::arith(op, lhs, rhs?))
    }

    fn multiplicative(&mut self) -> PResult<Term> {
        let lhs = self.application()?;
        if matches!(self.peek(), TokenKind::Star) && self.atom_start_at(1) {
            self.bump();
            self.enter()?;
            let rhs = self.multiplicative();
            self.leave();
            return Ok(Term::arith(ArithOp::Mul, lhs, rhs?));
        }
        Ok(lhs)
    }

    fn atom_start_at(&self, n: usize) -> bool {
        match self.peek_at(n) {
            TokenKind::Ident(s) => {
                !matches!(s.as_str(), "let" | "in" | "match" | "with" | "type" | "rec" | "un")
            }
            TokenKind::Int(_) | TokenKind::LParen | TokenKind::Star => true,
            _ => false,
        }
    }

    /// In a program, declarations start in column 1; continuation lines
    /// of a definition must be indented.
    fn decl_start_at(&self, n: usize) -> bool {
        self.layout && self.toks.get(self.pos + n).is_some_and(|t| t.col == 1)
    }

    fn application(&mut self) -> PResult<Term> {
        let mut f = self.atom()?;
        loop {
            if matches!(self.peek(), TokenKind::Star) {
                if self.atom_start_at(1) {
                    break;
                }
            } else if !self.atom_start_at(0) || self.decl_start_at(0) {
                break;
            }
            let a = self.atom()?;
            f = Term::app(f, a);
        }
        Ok(f)
    }

    fn atom(&mut self) -> PResult<Term> {
        self.enter()?;
        let r = self.atom_inner();
        self.leave();
        r
    }

    fn atom_inner(&mut self) -> PResult<Term> {
        let span = self.span();
        match self.peek().clone() {
            TokenKind::Star => {
                self.bump();
                Ok(Term::Unit)
            }
            TokenKind::Int(i) => {
                self.bump();
                Ok(Term::Int(i))
            }
            TokenKind::Minus => {
                self.bump();
                match *self.peek() {
                    TokenKind::Int(i) => {
                        self.bump();
                        Ok(Term::Int(-i))
                    }
                    _ => self.error(&["integer"]),
                }
            }
            TokenKind::LParen => {
                self.bump();
                let a = self.term()?;
                if self.eat(&TokenKind::Comma) {
                    let b = self.term()?;
                    self.expect(TokenKind::RParen)?;
                    return Ok(Term::pair(a, b));
                }
                self.expect(TokenKind::RParen)?;
                Ok(a)
            }
            TokenKind::Ident(s) => match s.as_str() {
                "box" => {
                    self.bump();
                    if matches!(self.peek(), TokenKind::LParen) {
                        let binders = self.attempt(|p| {
                            p.bump();
                            let binders = p.binders()?;
                            p.expect(TokenKind::Dot)?;
                            Ok(binders)
                        });
                        if let Some(binders) = binders {
                            let body = self.term()?;
                            self.expect(TokenKind::RParen)?;
                            return Ok(Term::Box(Box::new(CtxValue::new(binders, body))));
                        }
                    }
                    Ok(Term::Box(Box::new(CtxValue::closed(self.atom()?))))
                }
                "send" => self.constant(Const::Send),
                "receive" => self.constant(Const::Receive),
                "close" => self.constant(Const::Close),
                "wait" => self.constant(Const::Wait),
                "fork" => self.constant(Const::Fork),
                "forkWith" => self.constant(Const::ForkWith),
                "select" => {
                    self.bump();
                    let l = self.label()?;
                    Ok(Term::Const(Const::Select(l)))
                }
                "new" => {
                    self.bump();
                    let s = self.session()?;
                    Ok(Term::Const(Const::New(s)))
                }
                _ => {
                    let name = self.var_name()?;
                    let mut args = Vec::new();
                    if self.eat(&TokenKind::LBrack) {
                        if !matches!(self.peek(), TokenKind::RBrack) {
                            args.push(self.ctx_value()?);
                            while self.eat(&TokenKind::Comma) {
                                args.push(self.ctx_value()?);
                            }
                        }
                        self.expect(TokenKind::RBrack)?;
                    }
                    Ok(Term::Var { name, args, span })
                }
            },
            _ => self.error(&["term"]),
        }
    }

    fn constant(&mut self, c: Const) -> PResult<Term> {
        self.bump();
        Ok(Term::Const(c))
    }

    fn ctx_value(&mut self) -> PResult<CtxValue> {
        let with_binders = self.attempt(|p| {
            let binders = p.binders()?;
            p.expect(TokenKind::Dot)?;
            Ok(binders)
        });
        match with_binders {
            Some(binders) => Ok(CtxValue::new(binders, self.term()?)),
            None => Ok(CtxValue::closed(self.term()?)),
        }
    }

    fn binders(&mut self) -> PResult<Vec<Binder>> {
        let mut out: Vec<Binder> = Vec::new();
        if matches!(self.peek(), TokenKind::Dot) {
            return Ok(out);
        }
        loop {
            let mut b = self.binder_name()?;
            if b.is_wildcard() {
                return self.error(&["variable"]);
            }
            if self.eat(&TokenKind::Caret) {
                b.level = self.nat()?;
            }
            if self.eat(&TokenKind::Colon) {
                b.ann = Some(self.ctx_type()?);
            }
            if out.iter().any(|o| o.name == b.name) {
                return self.error(&["distinct binder names"]);
            }
            out.push(b);
            if !self.eat(&TokenKind::Comma) {
                return Ok(out);
            }
        }
    }

    // ---- programs ----

    fn program(&mut self) -> PResult<Program> {
        let mut program = Program::default();
        let mut sigs: Vec<(String, Type, Mult, Span, usize)> = Vec::new();
        let mut defs: Vec<(String, Vec<Clause>, usize)> = Vec::new();
        while !matches!(self.peek(), TokenKind::Eof) {
            let span = self.span();
            let at = self.pos;
            if self.eat_kw("type") {
                let name = self.label()?;
                self.expect(TokenKind::Eq)?;
                let ty = self.ty()?;
                program.type_decls.push(TypeDecl { name, ty, span });
                continue;
            }
            let name = self.var_name()?;
            if self.eat(&TokenKind::Colon) {
                if sigs.iter().any(|s| s.0 == name) {
                    self.pos = at;
                    return self.error(&["a single signature per name"]);
                }
                let mult = if self.eat_kw("un") {
                    Mult::Unrestricted
                } else {
                    Mult::Linear
                };
                let ty = self.ty()?;
                sigs.push((name, ty, mult, span, at));
                continue;
            }
            let mut patterns = Vec::new();
            while !matches!(self.peek(), TokenKind::Eq) {
                patterns.push(self.clause_pattern()?);
            }
            self.expect(TokenKind::Eq)?;
            let body = self.term()?;
            let clause = Clause { patterns, body, span };
            match defs.last_mut() {
                Some((n, clauses, _)) if *n == name => clauses.push(clause),
                _ => {
                    if defs.iter().any(|d| d.0 == name) {
                        self.pos = at;
                        return self.error(&["clauses of one definition to be adjacent"]);
                    }
                    defs.push((name, vec![clause], at));
                }
            }
        }
        for (name, clauses, at) in defs {
            let Some((_, ty, mult, span, _)) = sigs.iter().find(|s| s.0 == name).cloned() else {
                self.pos = at;
                return self.error(&[&format!("a type signature for `{name}`")]);
            };
            let body = match self.desugar(&ty, mult, &clauses) {
                Ok(b) => b,
                Err(msg) => {
                    self.pos = at;
                    return self.error(&[&msg]);
                }
            };
            program.term_decls.push(TermDecl {
                name,
                ty,
                mult,
                clauses,
                body,
                span,
            });
        }
        if let Some((name, .., at)) = sigs
            .iter()
            .find(|s| !program.term_decls.iter().any(|d| d.name == s.0))
        {
            self.pos = *at;
            return self.error(&[&format!("a definition for `{name}`")]);
        }
        Ok(program)
    }

    fn clause_pattern(&mut self) -> PResult<ClausePattern> {
        match self.peek().clone() {
            TokenKind::Int(i) => {
                self.bump();
                Ok(ClausePattern::Int(i))
            }
            TokenKind::LParen => {
                self.bump();
                let l = self.label()?;
                let b = self.binder_name()?;
                self.expect(TokenKind::RParen)?;
                Ok(ClausePattern::Label(l, b))
            }
            _ => Ok(ClausePattern::Var(self.binder_name()?)),
        }
    }

    /// Multi-clause definitions become a single `match` on one argument.
    fn desugar(&mut self, ty: &Type, mult: Mult, clauses: &[Clause]) -> Result<Term, String> {
        let mut domains = Vec::new();
        let mut t = ty;
        while let Type::Arrow(a, b) = t {
            domains.push(a.as_ref());
            t = b;
        }
        let unrestricted = |i: usize| {
            mult == Mult::Unrestricted
                && domains.get(i).is_some_and(|d| matches!(d, Type::Int | Type::Unit))
        };
        let set_mult = |b: &Binder, i: usize| {
            let mut b = b.clone();
            if unrestricted(i) {
                b.mult = Mult::Unrestricted;
            }
            b
        };
        if clauses.len() == 1 && clauses[0].patterns.iter().all(|p| matches!(p, ClausePattern::Var(_))) {
            let c = &clauses[0];
            let mut body = c.body.clone();
            for (i, p) in c.patterns.iter().enumerate().rev() {
                let ClausePattern::Var(b) = p else { unreachable!() };
                body = Term::Lam(set_mult(b, i), Box::new(body));
            }
            return Ok(body);
        }
        if clauses.iter().any(|c| c.patterns.len() != 1) {
            return Err("pattern-matching definitions with exactly one argument".into());
        }
        self.fresh += 1;
        let arg = Binder {
            span: clauses[0].span,
            ..set_mult(&Binder::new(format!("arg${}", self.fresh)), 0)
        };
        let arms = clauses
            .iter()
            .map(|c| Arm {
                pat: match &c.patterns[0] {
                    ClausePattern::Int(i) => Pattern::Int(*i),
                    ClausePattern::Var(b) => Pattern::Bind(set_mult(b, 0)),
                    ClausePattern::Label(l, b) => Pattern::Label(l.clone(), b.clone()),
                },
                body: c.body.clone(),
            })
            .collect();
        Ok(Term::Lam(
            arg.clone(),
            Box::new(Term::Match {
                scrut: Box::new(Term::Var {
                    name: arg.name,
                    args: Vec::new(),
                    span: clauses[0].span,
                }),
                arms,
            }),
        ))
    }
}
