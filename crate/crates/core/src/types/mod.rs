//! The type language: value types, contextual types and session types,
//! together with typing contexts, duality and equi-recursive equivalence.

mod context;
mod session;

use std::collections::BTreeMap;
use std::fmt;

pub use context::{ctx_at_least, ctx_below, Entry, TypingCtx};
pub use session::{dual, type_equiv, unfold, Aliases, DualityUndefined};
pub(crate) use session::ctx_type_equiv;

/// How many times a binding may be used.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub enum Mult {
    #[default]
    Linear,
    Unrestricted,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Type {
    Unit,
    Int,
    Arrow(Box<Type>, Box<Type>),
    Prod(Box<Type>, Box<Type>),
    Box(Box<CtxType>),
    Sess(SessionType),
    /// Reference to a declared alias; removed by [`Aliases::resolve`].
    Named(String),
    /// `Dual T` as written in source; removed by [`Aliases::resolve`].
    Dual(Box<Type>),
}

/// `(τ̄ ⊢ T)`: code of type `result` over parameters typed by `params`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CtxType {
    pub params: Vec<CtxType>,
    pub result: Type,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum SessionType {
    Send(Box<Type>, Box<SessionType>),
    Recv(Box<Type>, Box<SessionType>),
    Select(BTreeMap<String, SessionType>),
    Branch(BTreeMap<String, SessionType>),
    Close,
    Wait,
    Mu(String, Box<SessionType>),
    /// A recursion variable, or an alias name before resolution.
    Var(String),
}

impl Type {
    pub fn arrow(a: Type, b: Type) -> Type {
        Type::Arrow(Box::new(a), Box::new(b))
    }

    pub fn prod(a: Type, b: Type) -> Type {
        Type::Prod(Box::new(a), Box::new(b))
    }

    pub fn boxed(params: Vec<CtxType>, result: Type) -> Type {
        Type::Box(Box::new(CtxType { params, result }))
    }

    /// Values of droppable types may be discarded by a `_` binder.
    pub fn is_droppable(&self) -> bool {
        match self {
            Type::Unit | Type::Int => true,
            Type::Prod(a, b) => a.is_droppable() && b.is_droppable(),
            _ => false,
        }
    }
}

impl CtxType {
    /// The `(ε ⊢ T)` shorthand.
    pub fn plain(result: Type) -> CtxType {
        CtxType {
            params: Vec::new(),
            result,
        }
    }

    pub fn arity(&self) -> usize {
        self.params.len()
    }
}

impl SessionType {
    pub fn send(t: Type, s: SessionType) -> SessionType {
        SessionType::Send(Box::new(t), Box::new(s))
    }

    pub fn recv(t: Type, s: SessionType) -> SessionType {
        SessionType::Recv(Box::new(t), Box::new(s))
    }

    pub fn mu(var: impl Into<String>, body: SessionType) -> SessionType {
        SessionType::Mu(var.into(), Box::new(body))
    }
}

// Display produces the concrete syntax accepted by the parser.

impl fmt::Display for Type {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_prec(f, 0)
    }
}

impl Type {
    // 0: arrow level, 1: product level, 2: atom
    fn fmt_prec(&self, f: &mut fmt::Formatter<'_>, prec: u8) -> fmt::Result {
        match self {
            Type::Unit => write!(f, "Unit"),
            Type::Int => write!(f, "Int"),
            Type::Named(n) => write!(f, "{n}"),
            Type::Arrow(a, b) => {
                if prec > 0 {
                    write!(f, "(")?;
                }
                a.fmt_prec(f, 1)?;
                write!(f, " -o ")?;
                b.fmt_prec(f, 0)?;
                if prec > 0 {
                    write!(f, ")")?;
                }
                Ok(())
            }
            Type::Prod(a, b) => {
                if prec > 1 {
                    write!(f, "(")?;
                }
                a.fmt_prec(f, 2)?;
                write!(f, " * ")?;
                b.fmt_prec(f, 1)?;
                if prec > 1 {
                    write!(f, ")")?;
                }
                Ok(())
            }
            Type::Box(c) => {
                write!(f, "[")?;
                c.fmt_inner(f)?;
                write!(f, "]")
            }
            Type::Sess(s) => match s {
                SessionType::Var(_) | SessionType::Close | SessionType::Wait => write!(f, "{s}"),
                SessionType::Select(_) | SessionType::Branch(_) => write!(f, "{s}"),
                _ if prec > 0 => write!(f, "({s})"),
                _ => write!(f, "{s}"),
            },
            Type::Dual(t) => {
                write!(f, "Dual ")?;
                t.fmt_prec(f, 2)
            }
        }
    }
}

impl CtxType {
    fn fmt_inner(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, p) in self.params.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{p}")?;
        }
        if !self.params.is_empty() {
            write!(f, " ")?;
        }
        write!(f, "|- {}", self.result)
    }
}

impl fmt::Display for CtxType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.params.is_empty() {
            // a plain type inside a context list; arrows and products need
            // parentheses there only when they would be misread, which they are not
            write!(f, "{}", self.result)
        } else {
            write!(f, "(")?;
            self.fmt_inner(f)?;
            write!(f, ")")
        }
    }
}

fn fmt_payload(t: &Type, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    match t {
        Type::Sess(SessionType::Var(_) | SessionType::Close | SessionType::Wait)
        | Type::Unit
        | Type::Int
        | Type::Named(_)
        | Type::Box(_) => write!(f, "{t}"),
        _ => write!(f, "({t})"),
    }
}

fn fmt_branches(
    f: &mut fmt::Formatter<'_>,
    open: &str,
    branches: &BTreeMap<String, SessionType>,
) -> fmt::Result {
    write!(f, "{open}")?;
    for (i, (l, s)) in branches.iter().enumerate() {
        if i > 0 {
            write!(f, ", ")?;
        }
        write!(f, "{l}: {s}")?;
    }
    write!(f, "}}")
}

impl fmt::Display for SessionType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SessionType::Send(t, s) => {
                write!(f, "!")?;
                fmt_payload(t, f)?;
                write!(f, ".{s}")
            }
            SessionType::Recv(t, s) => {
                write!(f, "?")?;
                fmt_payload(t, f)?;
                write!(f, ".{s}")
            }
            SessionType::Select(bs) => fmt_branches(f, "+{", bs),
            SessionType::Branch(bs) => fmt_branches(f, "&{", bs),
            SessionType::Close => write!(f, "Close"),
            SessionType::Wait => write!(f, "Wait"),
            SessionType::Mu(a, s) => write!(f, "rec {a}. {s}"),
            SessionType::Var(a) => write!(f, "{a}"),
        }
    }
}
