use std::collections::{BTreeMap, BTreeSet, HashSet};

use thiserror::Error;

use super::{CtxType, SessionType, Type};
use crate::typeck::{ErrorCode, TypeError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("duality undefined: {0}")]
pub struct DualityUndefined(pub String);

/// The flip of a session type as seen from the other endpoint.
pub fn dual(s: &SessionType) -> Result<SessionType, DualityUndefined> {
    dual_under(s, &mut Vec::new())
}

fn dual_under(s: &SessionType, bound: &mut Vec<String>) -> Result<SessionType, DualityUndefined> {
    let payload = |t: &Type, bound: &Vec<String>| -> Result<Box<Type>, DualityUndefined> {
        let mut free = BTreeSet::new();
        free_vars_type(t, &mut Vec::new(), &mut free);
        match free.iter().find(|v| bound.contains(v)) {
            Some(v) => Err(DualityUndefined(format!(
                "recursion variable `{v}` occurs in message payload `{t}`"
            ))),
            None => Ok(Box::new(t.clone())),
        }
    };
    Ok(match s {
        SessionType::Send(t, k) => SessionType::Recv(payload(t, bound)?, Box::new(dual_under(k, bound)?)),
        SessionType::Recv(t, k) => SessionType::Send(payload(t, bound)?, Box::new(dual_under(k, bound)?)),
        SessionType::Select(bs) => SessionType::Branch(dual_map(bs, bound)?),
        SessionType::Branch(bs) => SessionType::Select(dual_map(bs, bound)?),
        SessionType::Close => SessionType::Wait,
        SessionType::Wait => SessionType::Close,
        SessionType::Mu(a, body) => {
            bound.push(a.clone());
            let body = dual_under(body, bound);
            bound.pop();
            SessionType::Mu(a.clone(), Box::new(body?))
        }
        SessionType::Var(a) => SessionType::Var(a.clone()),
    })
}

fn dual_map(
    bs: &BTreeMap<String, SessionType>,
    bound: &mut Vec<String>,
) -> Result<BTreeMap<String, SessionType>, DualityUndefined> {
    bs.iter()
        .map(|(l, s)| Ok((l.clone(), dual_under(s, bound)?)))
        .collect()
}

/// Unfolds leading `rec` binders until the head is a proper constructor.
/// Requires a contractive type.
pub fn unfold(s: &SessionType) -> SessionType {
    let mut cur = s.clone();
    while let SessionType::Mu(a, body) = &cur {
        cur = subst_var(body, a, &cur);
    }
    cur
}

/// Replaces free occurrences of recursion variable `a`. `repl` must be closed.
fn subst_var(s: &SessionType, a: &str, repl: &SessionType) -> SessionType {
    match s {
        SessionType::Var(b) if b == a => repl.clone(),
        SessionType::Var(_) | SessionType::Close | SessionType::Wait => s.clone(),
        SessionType::Mu(b, _) if b == a => s.clone(),
        SessionType::Mu(b, body) => SessionType::Mu(b.clone(), Box::new(subst_var(body, a, repl))),
        SessionType::Send(t, k) => SessionType::Send(
            Box::new(subst_var_type(t, a, repl)),
            Box::new(subst_var(k, a, repl)),
        ),
        SessionType::Recv(t, k) => SessionType::Recv(
            Box::new(subst_var_type(t, a, repl)),
            Box::new(subst_var(k, a, repl)),
        ),
        SessionType::Select(bs) => SessionType::Select(
            bs.iter().map(|(l, k)| (l.clone(), subst_var(k, a, repl))).collect(),
        ),
        SessionType::Branch(bs) => SessionType::Branch(
            bs.iter().map(|(l, k)| (l.clone(), subst_var(k, a, repl))).collect(),
        ),
    }
}

fn subst_var_type(t: &Type, a: &str, repl: &SessionType) -> Type {
    match t {
        Type::Unit | Type::Int | Type::Named(_) => t.clone(),
        Type::Arrow(x, y) => Type::arrow(subst_var_type(x, a, repl), subst_var_type(y, a, repl)),
        Type::Prod(x, y) => Type::prod(subst_var_type(x, a, repl), subst_var_type(y, a, repl)),
        Type::Box(c) => Type::Box(Box::new(subst_var_ctx(c, a, repl))),
        Type::Sess(s) => Type::Sess(subst_var(s, a, repl)),
        Type::Dual(x) => Type::Dual(Box::new(subst_var_type(x, a, repl))),
    }
}

fn subst_var_ctx(c: &CtxType, a: &str, repl: &SessionType) -> CtxType {
    CtxType {
        params: c.params.iter().map(|p| subst_var_ctx(p, a, repl)).collect(),
        result: subst_var_type(&c.result, a, repl),
    }
}

fn free_vars_session(s: &SessionType, bound: &mut Vec<String>, out: &mut BTreeSet<String>) {
    match s {
        SessionType::Var(a) => {
            if !bound.contains(a) {
                out.insert(a.clone());
            }
        }
        SessionType::Close | SessionType::Wait => {}
        SessionType::Mu(a, body) => {
            bound.push(a.clone());
            free_vars_session(body, bound, out);
            bound.pop();
        }
        SessionType::Send(t, k) | SessionType::Recv(t, k) => {
            free_vars_type(t, bound, out);
            free_vars_session(k, bound, out);
        }
        SessionType::Select(bs) | SessionType::Branch(bs) => {
            for k in bs.values() {
                free_vars_session(k, bound, out);
            }
        }
    }
}

fn free_vars_type(t: &Type, bound: &mut Vec<String>, out: &mut BTreeSet<String>) {
    match t {
        Type::Unit | Type::Int | Type::Named(_) => {}
        Type::Arrow(x, y) | Type::Prod(x, y) => {
            free_vars_type(x, bound, out);
            free_vars_type(y, bound, out);
        }
        Type::Box(c) => free_vars_ctx(c, bound, out),
        Type::Sess(s) => free_vars_session(s, bound, out),
        Type::Dual(x) => free_vars_type(x, bound, out),
    }
}

fn free_vars_ctx(c: &CtxType, bound: &mut Vec<String>, out: &mut BTreeSet<String>) {
    for p in &c.params {
        free_vars_ctx(p, bound, out);
    }
    free_vars_type(&c.result, bound, out);
}

/// Equality of the regular trees denoted by two resolved types.
pub fn type_equiv(t: &Type, u: &Type) -> bool {
    Equiv::default().types(t, u)
}

pub(crate) fn ctx_type_equiv(t: &CtxType, u: &CtxType) -> bool {
    Equiv::default().ctx(t, u)
}

#[derive(Default)]
struct Equiv {
    assumed: HashSet<(SessionType, SessionType)>,
}

impl Equiv {
    fn types(&mut self, t: &Type, u: &Type) -> bool {
        match (t, u) {
            (Type::Unit, Type::Unit) | (Type::Int, Type::Int) => true,
            (Type::Arrow(a, b), Type::Arrow(c, d)) | (Type::Prod(a, b), Type::Prod(c, d)) => {
                self.types(a, c) && self.types(b, d)
            }
            (Type::Box(a), Type::Box(b)) => self.ctx(a, b),
            (Type::Sess(a), Type::Sess(b)) => self.sessions(a, b),
            (Type::Named(a), Type::Named(b)) => a == b,
            _ => false,
        }
    }

    fn ctx(&mut self, t: &CtxType, u: &CtxType) -> bool {
        t.params.len() == u.params.len()
            && t.params.iter().zip(&u.params).all(|(a, b)| self.ctx(a, b))
            && self.types(&t.result, &u.result)
    }

    fn sessions(&mut self, s: &SessionType, r: &SessionType) -> bool {
        if !self.assumed.insert((s.clone(), r.clone())) {
            return true;
        }
        match (unfold(s), unfold(r)) {
            (SessionType::Send(a, k), SessionType::Send(b, j))
            | (SessionType::Recv(a, k), SessionType::Recv(b, j)) => {
                self.types(&a, &b) && self.sessions(&k, &j)
            }
            (SessionType::Select(a), SessionType::Select(b))
            | (SessionType::Branch(a), SessionType::Branch(b)) => {
                a.len() == b.len()
                    && a.iter().zip(&b).all(|((l, x), (m, y))| l == m && self.sessions(x, y))
            }
            (SessionType::Close, SessionType::Close) | (SessionType::Wait, SessionType::Wait) => true,
            (SessionType::Var(a), SessionType::Var(b)) => a == b,
            _ => false,
        }
    }
}

/// The program's type alias table. Aliases may be mutually recursive
/// through session tail positions; such cycles become `rec` binders.
#[derive(Debug, Clone, Default)]
pub struct Aliases {
    decls: BTreeMap<String, Type>,
}

impl Aliases {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: impl Into<String>, ty: Type) {
        self.decls.insert(name.into(), ty);
    }

    pub fn names(&self) -> impl Iterator<Item = &String> {
        self.decls.keys()
    }

    pub fn contains(&self, name: &str) -> bool {
        self.decls.contains_key(name)
    }

    /// The resolved meaning of alias `name`.
    pub fn lookup(&self, name: &str) -> Result<Type, TypeError> {
        self.resolve(&Type::Named(name.to_string()))
    }

    /// Eliminates aliases and `Dual`, then checks contractivity.
    pub fn resolve(&self, t: &Type) -> Result<Type, TypeError> {
        let t = Resolver::new(self).ty(t)?;
        check_contractive_type(&t)?;
        Ok(t)
    }

    pub fn resolve_ctx(&self, c: &CtxType) -> Result<CtxType, TypeError> {
        let c = Resolver::new(self).ctx(c)?;
        check_contractive_ctx(&c)?;
        Ok(c)
    }

    pub fn resolve_session(&self, s: &SessionType) -> Result<SessionType, TypeError> {
        let s = Resolver::new(self).session(s)?;
        check_contractive(&s)?;
        Ok(s)
    }
}

struct Resolver<'a> {
    aliases: &'a Aliases,
    /// Names bound by enclosing `rec` binders or aliases under expansion.
    env: Vec<String>,
    /// Entries of `env` below this index lie outside the current payload.
    barrier: usize,
}

impl<'a> Resolver<'a> {
    fn new(aliases: &'a Aliases) -> Self {
        Self {
            aliases,
            env: Vec::new(),
            barrier: 0,
        }
    }

    fn bound_index(&self, name: &str) -> Option<usize> {
        self.env.iter().rposition(|n| n == name)
    }

    fn ty(&mut self, t: &Type) -> Result<Type, TypeError> {
        Ok(match t {
            Type::Unit => Type::Unit,
            Type::Int => Type::Int,
            Type::Arrow(a, b) => Type::arrow(self.ty(a)?, self.ty(b)?),
            Type::Prod(a, b) => Type::prod(self.ty(a)?, self.ty(b)?),
            Type::Box(c) => Type::Box(Box::new(self.ctx(c)?)),
            Type::Sess(s) => Type::Sess(self.session(s)?),
            Type::Named(n) => {
                if let Some(i) = self.bound_index(n) {
                    return Err(if i < self.barrier {
                        payload_recursion(n)
                    } else {
                        TypeError::new(
                            ErrorCode::NonContractive,
                            format!("type `{n}` refers to itself outside a session tail position"),
                        )
                    });
                }
                self.expand(n)?
            }
            Type::Dual(inner) => match self.ty(inner)? {
                Type::Sess(s) => Type::Sess(dual(&s).map_err(|e| {
                    TypeError::new(ErrorCode::DualityUndefined, e.0)
                })?),
                other => {
                    return Err(TypeError::new(
                        ErrorCode::DualityUndefined,
                        format!("`Dual` applied to non-session type `{other}`"),
                    ))
                }
            },
        })
    }

    fn ctx(&mut self, c: &CtxType) -> Result<CtxType, TypeError> {
        Ok(CtxType {
            params: c.params.iter().map(|p| self.ctx(p)).collect::<Result<_, _>>()?,
            result: self.ty(&c.result)?,
        })
    }

    fn payload(&mut self, t: &Type) -> Result<Type, TypeError> {
        let saved = std::mem::replace(&mut self.barrier, self.env.len());
        let r = self.ty(t);
        self.barrier = saved;
        r
    }

    fn session(&mut self, s: &SessionType) -> Result<SessionType, TypeError> {
        Ok(match s {
            SessionType::Send(t, k) => SessionType::Send(Box::new(self.payload(t)?), Box::new(self.session(k)?)),
            SessionType::Recv(t, k) => SessionType::Recv(Box::new(self.payload(t)?), Box::new(self.session(k)?)),
            SessionType::Select(bs) => SessionType::Select(self.branches(bs)?),
            SessionType::Branch(bs) => SessionType::Branch(self.branches(bs)?),
            SessionType::Close => SessionType::Close,
            SessionType::Wait => SessionType::Wait,
            SessionType::Mu(a, body) => {
                self.env.push(a.clone());
                let body = self.session(body);
                self.env.pop();
                SessionType::Mu(a.clone(), Box::new(body?))
            }
            SessionType::Var(n) => {
                if let Some(i) = self.bound_index(n) {
                    if i < self.barrier {
                        return Err(payload_recursion(n));
                    }
                    return Ok(SessionType::Var(n.clone()));
                }
                match self.expand(n)? {
                    Type::Sess(s) => s,
                    other => {
                        return Err(TypeError::new(
                            ErrorCode::TypeMismatch,
                            format!("`{n}` = `{other}` used where a session type is expected"),
                        ))
                    }
                }
            }
        })
    }

    fn branches(
        &mut self,
        bs: &BTreeMap<String, SessionType>,
    ) -> Result<BTreeMap<String, SessionType>, TypeError> {
        bs.iter()
            .map(|(l, s)| Ok((l.clone(), self.session(s)?)))
            .collect()
    }

    fn expand(&mut self, name: &str) -> Result<Type, TypeError> {
        let decl = self.aliases.decls.get(name).ok_or_else(|| {
            TypeError::new(ErrorCode::UnknownVariable, format!("unknown type `{name}`"))
        })?;
        self.env.push(name.to_string());
        let body = self.ty(decl);
        self.env.pop();
        let body = body?;
        if let Type::Sess(s) = &body {
            let mut free = BTreeSet::new();
            free_vars_session(s, &mut Vec::new(), &mut free);
            if free.contains(name) {
                return Ok(Type::Sess(SessionType::mu(name, s.clone())));
            }
        }
        Ok(body)
    }
}

fn payload_recursion(name: &str) -> TypeError {
    TypeError::new(
        ErrorCode::PayloadRecursion,
        format!("recursive reference `{name}` in message payload position"),
    )
}

fn check_contractive(s: &SessionType) -> Result<(), TypeError> {
    match s {
        SessionType::Mu(a, body) => {
            let mut names = vec![a.as_str()];
            let mut inner = body.as_ref();
            while let SessionType::Mu(b, next) = inner {
                names.push(b);
                inner = next;
            }
            if let SessionType::Var(v) = inner {
                if names.contains(&v.as_str()) {
                    return Err(TypeError::new(
                        ErrorCode::NonContractive,
                        format!("recursive session type `{s}` is not contractive"),
                    ));
                }
            }
            check_contractive(body)
        }
        SessionType::Send(t, k) | SessionType::Recv(t, k) => {
            check_contractive_type(t)?;
            check_contractive(k)
        }
        SessionType::Select(bs) | SessionType::Branch(bs) => bs.values().try_for_each(check_contractive),
        SessionType::Close | SessionType::Wait | SessionType::Var(_) => Ok(()),
    }
}

fn check_contractive_type(t: &Type) -> Result<(), TypeError> {
    match t {
        Type::Arrow(a, b) | Type::Prod(a, b) => {
            check_contractive_type(a)?;
            check_contractive_type(b)
        }
        Type::Box(c) => check_contractive_ctx(c),
        Type::Sess(s) => check_contractive(s),
        Type::Dual(x) => check_contractive_type(x),
        Type::Unit | Type::Int | Type::Named(_) => Ok(()),
    }
}

fn check_contractive_ctx(c: &CtxType) -> Result<(), TypeError> {
    c.params.iter().try_for_each(check_contractive_ctx)?;
    check_contractive_type(&c.result)
}
