//! Abstract syntax, parser and pretty-printer.

mod lexer;
mod parser;
mod pretty;

use std::collections::BTreeSet;
use std::hash::{Hash, Hasher};

use crate::types::{CtxType, Mult, SessionType, Type};

pub use lexer::{lex, Token, TokenKind};
pub use parser::{parse_program, parse_term, parse_type, ParseError};
pub use pretty::pretty;

/// Source position, 1-based. Spans never affect equality or hashing, so
/// derived `PartialEq` on terms compares structure only.
#[derive(Debug, Clone, Copy, Default, Eq, PartialOrd, Ord)]
pub struct Span {
    pub line: u32,
    pub col: u32,
}

impl Span {
    pub fn new(line: u32, col: u32) -> Self {
        Self { line, col }
    }

    pub fn is_unknown(&self) -> bool {
        self.line == 0
    }
}

impl PartialEq for Span {
    fn eq(&self, _: &Self) -> bool {
        true
    }
}

impl Hash for Span {
    fn hash<H: Hasher>(&self, _: &mut H) {}
}

/// A binding occurrence.
///
/// `level` is the `^k` annotation of contextual-value binders and the `^n`
/// of a let-box; lambda, pair and match binders are always level 0.
/// The name `_` is a wildcard that binds nothing.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Binder {
    pub name: String,
    pub level: u32,
    pub ann: Option<CtxType>,
    pub mult: Mult,
    pub span: Span,
}

impl Binder {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            level: 0,
            ann: None,
            mult: Mult::Linear,
            span: Span::default(),
        }
    }

    pub fn at_level(mut self, level: u32) -> Self {
        self.level = level;
        self
    }

    pub fn annotated(mut self, ann: CtxType) -> Self {
        self.ann = Some(ann);
        self
    }

    pub fn unrestricted(mut self) -> Self {
        self.mult = Mult::Unrestricted;
        self
    }

    pub fn is_wildcard(&self) -> bool {
        self.name == "_"
    }
}

/// `x̄.M`: a code fragment closed over local variables.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CtxValue {
    pub binders: Vec<Binder>,
    pub body: Term,
}

impl CtxValue {
    pub fn new(binders: Vec<Binder>, body: Term) -> Self {
        Self { binders, body }
    }

    /// `ε.M`
    pub fn closed(body: Term) -> Self {
        Self {
            binders: Vec::new(),
            body,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
}

impl ArithOp {
    pub fn symbol(self) -> &'static str {
        match self {
            ArithOp::Add => "+",
            ArithOp::Sub => "-",
            ArithOp::Mul => "*",
        }
    }

    pub fn apply(self, a: i64, b: i64) -> Option<i64> {
        match self {
            ArithOp::Add => a.checked_add(b),
            ArithOp::Sub => a.checked_sub(b),
            ArithOp::Mul => a.checked_mul(b),
        }
    }
}

/// Built-in session and process constants.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Const {
    Send,
    Receive,
    Select(String),
    Close,
    Wait,
    Fork,
    ForkWith,
    New(SessionType),
}

impl Const {
    /// Number of arguments after which an application is a redex.
    pub fn arity(&self) -> usize {
        match self {
            Const::Send => 2,
            Const::New(_) => 0,
            _ => 1,
        }
    }
}

/// Runtime channel endpoint identifier.
pub type EndpointId = u32;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Pattern {
    /// `Label x`: a branch of a session offer.
    Label(String, Binder),
    Int(i64),
    /// Catch-all binding the scrutinee.
    Bind(Binder),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Arm {
    pub pat: Pattern,
    pub body: Term,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Term {
    Unit,
    Lam(Binder, Box<Term>),
    App(Box<Term>, Box<Term>),
    LetUnit(Box<Term>, Box<Term>),
    Box(Box<CtxValue>),
    /// `let box x ^n = bound in body`; `n` is `binder.level`.
    LetBox {
        binder: Binder,
        bound: Box<Term>,
        body: Box<Term>,
    },
    /// `x[σ̄]`; a bare `x` is `x[]`.
    Var {
        name: String,
        args: Vec<CtxValue>,
        span: Span,
    },
    Int(i64),
    Arith(ArithOp, Box<Term>, Box<Term>),
    Pair(Box<Term>, Box<Term>),
    LetPair {
        fst: Binder,
        snd: Binder,
        scrut: Box<Term>,
        body: Box<Term>,
    },
    Match {
        scrut: Box<Term>,
        arms: Vec<Arm>,
    },
    Const(Const),
    /// A channel endpoint; only produced by the runtime.
    Chan(EndpointId),
}

impl Term {
    pub fn var(name: impl Into<String>) -> Term {
        Term::Var {
            name: name.into(),
            args: Vec::new(),
            span: Span::default(),
        }
    }

    pub fn applied(name: impl Into<String>, args: Vec<CtxValue>) -> Term {
        Term::Var {
            name: name.into(),
            args,
            span: Span::default(),
        }
    }

    pub fn lam(binder: impl Into<String>, body: Term) -> Term {
        Term::Lam(Binder::new(binder), Box::new(body))
    }

    pub fn app(f: Term, a: Term) -> Term {
        Term::App(Box::new(f), Box::new(a))
    }

    pub fn let_unit(m: Term, n: Term) -> Term {
        Term::LetUnit(Box::new(m), Box::new(n))
    }

    pub fn boxed(binders: Vec<Binder>, body: Term) -> Term {
        Term::Box(Box::new(CtxValue::new(binders, body)))
    }

    pub fn let_box(name: impl Into<String>, level: u32, bound: Term, body: Term) -> Term {
        Term::LetBox {
            binder: Binder::new(name).at_level(level),
            bound: Box::new(bound),
            body: Box::new(body),
        }
    }

    pub fn arith(op: ArithOp, a: Term, b: Term) -> Term {
        Term::Arith(op, Box::new(a), Box::new(b))
    }

    pub fn pair(a: Term, b: Term) -> Term {
        Term::Pair(Box::new(a), Box::new(b))
    }

    /// Values: `*`, λ, box, integers, pairs of values, channels, and
    /// constants applied to fewer arguments than their arity.
    pub fn is_value(&self) -> bool {
        match self {
            Term::Unit | Term::Lam(..) | Term::Box(_) | Term::Int(_) | Term::Chan(_) => true,
            Term::Pair(a, b) => a.is_value() && b.is_value(),
            Term::Const(c) => c.arity() > 0,
            Term::App(..) => match self.const_spine() {
                Some((c, args)) => args.len() < c.arity() && args.iter().all(|a| a.is_value()),
                None => false,
            },
            _ => false,
        }
    }

    /// Splits `c a1 .. an` into the constant and its arguments.
    pub fn const_spine(&self) -> Option<(&Const, Vec<&Term>)> {
        let mut args = Vec::new();
        let mut head = self;
        while let Term::App(f, a) = head {
            args.push(a.as_ref());
            head = f;
        }
        match head {
            Term::Const(c) => {
                args.reverse();
                Some((c, args))
            }
            _ => None,
        }
    }

    /// Number of AST nodes; contextual values count as their body.
    pub fn size(&self) -> usize {
        1 + match self {
            Term::Unit | Term::Int(_) | Term::Const(_) | Term::Chan(_) => 0,
            Term::Lam(_, b) => b.size(),
            Term::App(a, b) | Term::LetUnit(a, b) | Term::Arith(_, a, b) | Term::Pair(a, b) => {
                a.size() + b.size()
            }
            Term::Box(cv) => cv.body.size(),
            Term::LetBox { bound, body, .. } => bound.size() + body.size(),
            Term::Var { args, .. } => args.iter().map(|a| a.body.size()).sum(),
            Term::LetPair { scrut, body, .. } => scrut.size() + body.size(),
            Term::Match { scrut, arms } => scrut.size() + arms.iter().map(|a| a.body.size()).sum::<usize>(),
        }
    }

    /// Removes binder type annotations, for comparisons against
    /// unannotated renderings.
    pub fn erase_annotations(&self) -> Term {
        self.map_binders(&mut |b| Binder { ann: None, ..b.clone() })
    }

    fn map_binders(&self, f: &mut dyn FnMut(&Binder) -> Binder) -> Term {
        let cv = |cv: &CtxValue, f: &mut dyn FnMut(&Binder) -> Binder| CtxValue {
            binders: cv.binders.iter().map(&mut *f).collect(),
            body: cv.body.map_binders(f),
        };
        match self {
            Term::Unit | Term::Int(_) | Term::Const(_) | Term::Chan(_) => self.clone(),
            Term::Lam(b, body) => Term::Lam(f(b), Box::new(body.map_binders(f))),
            Term::App(a, b) => Term::app(a.map_binders(f), b.map_binders(f)),
            Term::LetUnit(a, b) => Term::let_unit(a.map_binders(f), b.map_binders(f)),
            Term::Arith(op, a, b) => Term::arith(*op, a.map_binders(f), b.map_binders(f)),
            Term::Pair(a, b) => Term::pair(a.map_binders(f), b.map_binders(f)),
            Term::Box(c) => Term::Box(Box::new(cv(c, f))),
            Term::LetBox { binder, bound, body } => Term::LetBox {
                binder: f(binder),
                bound: Box::new(bound.map_binders(f)),
                body: Box::new(body.map_binders(f)),
            },
            Term::Var { name, args, span } => Term::Var {
                name: name.clone(),
                args: args.iter().map(|a| cv(a, f)).collect(),
                span: *span,
            },
            Term::LetPair { fst, snd, scrut, body } => Term::LetPair {
                fst: f(fst),
                snd: f(snd),
                scrut: Box::new(scrut.map_binders(f)),
                body: Box::new(body.map_binders(f)),
            },
            Term::Match { scrut, arms } => Term::Match {
                scrut: Box::new(scrut.map_binders(f)),
                arms: arms
                    .iter()
                    .map(|a| Arm {
                        pat: match &a.pat {
                            Pattern::Label(l, b) => Pattern::Label(l.clone(), f(b)),
                            Pattern::Bind(b) => Pattern::Bind(f(b)),
                            Pattern::Int(i) => Pattern::Int(*i),
                        },
                        body: a.body.map_binders(f),
                    })
                    .collect(),
            },
        }
    }

    /// Rewrites every type embedded in the term: binder annotations and the
    /// session type of `new`.
    pub fn try_map_types<E>(&self, f: &mut dyn FnMut(&Type) -> Result<Type, E>) -> Result<Term, E> {
        let mut out = self.clone();
        out.map_types_mut(f)?;
        Ok(out)
    }

    fn map_types_mut<E>(&mut self, f: &mut dyn FnMut(&Type) -> Result<Type, E>) -> Result<(), E> {
        let binder = |b: &mut Binder, f: &mut dyn FnMut(&Type) -> Result<Type, E>| -> Result<(), E> {
            if let Some(c) = &b.ann {
                b.ann = Some(map_ctx(c, f)?);
            }
            Ok(())
        };
        match self {
            Term::Const(Const::New(s)) => {
                if let Type::Sess(r) = f(&Type::Sess(s.clone()))? {
                    *s = r;
                }
            }
            Term::Lam(b, _) | Term::LetBox { binder: b, .. } => binder(b, f)?,
            Term::Box(cv) => {
                for b in &mut cv.binders {
                    binder(b, f)?;
                }
            }
            Term::Var { args, .. } => {
                for cv in args {
                    for b in &mut cv.binders {
                        binder(b, f)?;
                    }
                }
            }
            Term::LetPair { fst, snd, .. } => {
                binder(fst, f)?;
                binder(snd, f)?;
            }
            Term::Match { arms, .. } => {
                for a in arms {
                    if let Pattern::Label(_, b) | Pattern::Bind(b) = &mut a.pat {
                        binder(b, f)?;
                    }
                }
            }
            _ => {}
        }
        let mut res = Ok(());
        self.for_each_child_mut(&mut |t| {
            if res.is_ok() {
                res = t.map_types_mut(f);
            }
        });
        res
    }

    fn for_each_child_mut(&mut self, f: &mut dyn FnMut(&mut Term)) {
        match self {
            Term::Unit | Term::Int(_) | Term::Const(_) | Term::Chan(_) => {}
            Term::Lam(_, b) => f(b),
            Term::App(a, b) | Term::LetUnit(a, b) | Term::Arith(_, a, b) | Term::Pair(a, b) => {
                f(a);
                f(b);
            }
            Term::Box(cv) => f(&mut cv.body),
            Term::LetBox { bound, body, .. } => {
                f(bound);
                f(body);
            }
            Term::Var { args, .. } => args.iter_mut().for_each(|a| f(&mut a.body)),
            Term::LetPair { scrut, body, .. } => {
                f(scrut);
                f(body);
            }
            Term::Match { scrut, arms } => {
                f(scrut);
                arms.iter_mut().for_each(|a| f(&mut a.body));
            }
        }
    }

    /// Every name occurring in the term, bound or free.
    pub fn all_names(&self, out: &mut BTreeSet<String>) {
        let _ = self.map_binders(&mut |b: &Binder| {
            out.insert(b.name.clone());
            b.clone()
        });
        self.collect_var_names(out);
    }

    fn collect_var_names(&self, out: &mut BTreeSet<String>) {
        match self {
            Term::Var { name, args, .. } => {
                out.insert(name.clone());
                args.iter().for_each(|a| a.body.collect_var_names(out));
            }
            Term::Unit | Term::Int(_) | Term::Const(_) | Term::Chan(_) => {}
            Term::Lam(_, b) => b.collect_var_names(out),
            Term::App(a, b) | Term::LetUnit(a, b) | Term::Arith(_, a, b) | Term::Pair(a, b) => {
                a.collect_var_names(out);
                b.collect_var_names(out);
            }
            Term::Box(cv) => cv.body.collect_var_names(out),
            Term::LetBox { bound: a, body: b, .. } | Term::LetPair { scrut: a, body: b, .. } => {
                a.collect_var_names(out);
                b.collect_var_names(out);
            }
            Term::Match { scrut, arms } => {
                scrut.collect_var_names(out);
                arms.iter().for_each(|a| a.body.collect_var_names(out));
            }
        }
    }
}

fn map_ctx<E>(c: &CtxType, f: &mut dyn FnMut(&Type) -> Result<Type, E>) -> Result<CtxType, E> {
    Ok(CtxType {
        params: c.params.iter().map(|p| map_ctx(p, f)).collect::<Result<_, _>>()?,
        result: f(&c.result)?,
    })
}

/// One clause `f p1 .. pn = body`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Clause {
    pub patterns: Vec<ClausePattern>,
    pub body: Term,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ClausePattern {
    Int(i64),
    Var(Binder),
    Label(String, Binder),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypeDecl {
    pub name: String,
    pub ty: Type,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TermDecl {
    pub name: String,
    pub ty: Type,
    /// `un` on the signature: data-typed parameters are unrestricted.
    pub mult: Mult,
    pub clauses: Vec<Clause>,
    /// The clauses desugared to a single term.
    pub body: Term,
    pub span: Span,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Program {
    pub type_decls: Vec<TypeDecl>,
    pub term_decls: Vec<TermDecl>,
}

impl Program {
    pub fn decl(&self, name: &str) -> Option<&TermDecl> {
        self.term_decls.iter().find(|d| d.name == name)
    }
}
