//! Shared machinery for the property suites: a typing-directed enumerator
//! of closed session-free terms, a brute-force declarative checker that
//! splits contexts instead of threading leftovers, and one-edit mutants.

#![allow(dead_code)]

use std::collections::BTreeSet;

use lcm::syntax::{ArithOp, Arm, Binder, CtxValue, Pattern};
use lcm::types::TypingCtx;
use lcm::types::{CtxType, Mult, Type};
use lcm::Term;

pub const MAX_SIZE: usize = 12;
/// Every term up to this size is mutated; larger ones are sampled.
pub const MUTATE_ALL_UP_TO: usize = 8;
pub const SAMPLE_STRIDE: usize = 101;

pub fn int_int() -> Type {
    Type::arrow(Type::Int, Type::Int)
}

pub fn code0() -> Type {
    Type::boxed(vec![], Type::Int)
}

pub fn code1() -> Type {
    Type::boxed(vec![CtxType::plain(Type::Int)], Type::Int)
}

/// The types the enumerator targets.
pub fn universe() -> Vec<Type> {
    vec![
        Type::Unit,
        Type::Int,
        int_int(),
        Type::prod(Type::Int, Type::Int),
        code0(),
        code1(),
    ]
}

#[derive(Clone)]
struct Var {
    name: String,
    level: u32,
    ty: CtxType,
    linear: bool,
}

fn ann(b: Binder, t: &Type) -> Binder {
    b.annotated(CtxType::plain(t.clone()))
}

/// Every well-typed term of `ty` with exactly `size` nodes. Generation
/// splits the linear variables in scope between subterms and respects box
/// levels, so each result should be accepted by both checkers.
pub fn terms_of(ty: &Type, size: usize) -> Vec<Term> {
    let mut out = Vec::new();
    gen(&[], 0, ty, size, &mut out);
    out
}

/// Every term of every universe type up to `max` nodes.
pub fn enumerate(max: usize) -> Vec<(Type, Term)> {
    let mut v = Vec::new();
    for ty in universe() {
        for n in 1..=max {
            v.extend(terms_of(&ty, n).into_iter().map(|t| (ty.clone(), t)));
        }
    }
    v
}

fn fresh(env: &[Var]) -> String {
    format!("x{}", env.len())
}

/// Extends the scope; a linear binder joins the mask its body must consume.
fn with(env: &[Var], mask: Mask, level: u32, ty: CtxType, linear: bool) -> (Vec<Var>, Mask, String) {
    let name = fresh(env);
    let mut e = env.to_vec();
    e.push(Var {
        name: name.clone(),
        level,
        ty,
        linear,
    });
    let m = if linear { mask | bit(e.len() - 1) } else { mask };
    (e, m, name)
}

/// Pairs `(a, b)` with `a + b == total`, `a, b >= 1`.
fn splits(total: usize) -> impl Iterator<Item = (usize, usize)> {
    (1..total).map(move |a| (a, total - a))
}

fn at_least(env: &[Var], mask: Mask, n: u32) -> bool {
    env.iter().enumerate().all(|(i, v)| mask & bit(i) == 0 || v.level >= n)
}

/// Cheap lower bound on the size of a term consuming `mask`.
fn fits(mask: Mask, size: usize) -> bool {
    (mask.count_ones() as usize) <= size
}

fn product<F: FnMut(&Term, &Term)>(l: &[Term], r: &[Term], mut f: F) {
    for x in l {
        for y in r {
            f(x, y);
        }
    }
}

fn gen(env: &[Var], mask: Mask, ty: &Type, size: usize, out: &mut Vec<Term>) {
    if size == 0 || !fits(mask, size) {
        return;
    }
    if size == 1 && mask == 0 {
        match ty {
            Type::Unit => out.push(Term::Unit),
            Type::Int => out.push(Term::Int(1)),
            _ => {}
        }
    }
    // variables; a parameterised one takes one binderless argument
    for (i, v) in env.iter().enumerate() {
        if v.ty.result != *ty {
            continue;
        }
        let rest = if v.linear {
            if mask & bit(i) == 0 {
                continue;
            }
            mask ^ bit(i)
        } else {
            mask
        };
        // a shadowed name cannot be referenced
        if env[i + 1..].iter().any(|w| w.name == v.name) {
            continue;
        }
        match v.ty.params.len() {
            0 if size == 1 && rest == 0 => out.push(Term::var(&v.name)),
            1 if size >= 2 && v.ty.params[0].params.is_empty() => {
                let mut args = Vec::new();
                gen(env, rest, &v.ty.params[0].result, size - 1, &mut args);
                out.extend(args.into_iter().map(|a| Term::applied(&v.name, vec![CtxValue::closed(a)])));
            }
            _ => {}
        }
    }
    if size < 2 {
        return;
    }
    let rest = size - 1;
    match ty {
        Type::Int => {
            for (a, b) in splits(rest) {
                for (m1, m2) in split(mask) {
                    let (mut l, mut r) = (Vec::new(), Vec::new());
                    gen(env, m1, &Type::Int, a, &mut l);
                    if !l.is_empty() {
                        gen(env, m2, &Type::Int, b, &mut r);
                    }
                    product(&l, &r, |x, y| out.push(Term::arith(ArithOp::Add, x.clone(), y.clone())));
                    let (mut f, mut x) = (Vec::new(), Vec::new());
                    gen(env, m1, &int_int(), a, &mut f);
                    if !f.is_empty() {
                        gen(env, m2, &Type::Int, b, &mut x);
                    }
                    product(&f, &x, |f, x| out.push(Term::app(f.clone(), x.clone())));
                }
            }
            // match n with { 0 -> a, un k -> b }: both arms consume the same
            for s in 1..rest {
                for (a, b) in splits(rest - s) {
                    for (m1, m2) in split(mask) {
                        let mut sc = Vec::new();
                        gen(env, m1, &Type::Int, s, &mut sc);
                        if sc.is_empty() {
                            continue;
                        }
                        let (mut z, mut k) = (Vec::new(), Vec::new());
                        gen(env, m2, &Type::Int, a, &mut z);
                        if z.is_empty() {
                            continue;
                        }
                        let (env2, m3, name) = with(env, m2, 0, CtxType::plain(Type::Int), false);
                        gen(&env2, m3, &Type::Int, b, &mut k);
                        for sc in &sc {
                            product(&z, &k, |z, k| {
                                out.push(Term::Match {
                                    scrut: Box::new(sc.clone()),
                                    arms: vec![
                                        Arm {
                                            pat: Pattern::Int(0),
                                            body: z.clone(),
                                        },
                                        Arm {
                                            pat: Pattern::Bind(Binder::new(&name).unrestricted()),
                                            body: k.clone(),
                                        },
                                    ],
                                })
                            });
                        }
                    }
                }
            }
        }
        Type::Arrow(p, r) => {
            let (env2, m, name) = with(env, mask, 0, CtxType::plain((**p).clone()), true);
            let mut body = Vec::new();
            gen(&env2, m, r, rest, &mut body);
            out.extend(body.into_iter().map(|b| Term::Lam(ann(Binder::new(&name), p), Box::new(b))));
        }
        Type::Prod(a, b) => {
            for (s1, s2) in splits(rest) {
                for (m1, m2) in split(mask) {
                    let (mut l, mut r) = (Vec::new(), Vec::new());
                    gen(env, m1, a, s1, &mut l);
                    if !l.is_empty() {
                        gen(env, m2, b, s2, &mut r);
                    }
                    product(&l, &r, |x, y| out.push(Term::pair(x.clone(), y.clone())));
                }
            }
        }
        Type::Box(ct) => {
            // free-standing boxes sit one level above their binders
            let n = if ct.params.is_empty() { 0 } else { 1 };
            if at_least(env, mask, n) {
                let (mut env2, mut m) = (env.to_vec(), mask);
                let mut binders = Vec::new();
                for p in &ct.params {
                    let (e, m2, name) = with(&env2, m, 0, p.clone(), true);
                    binders.push(Binder::new(&name).annotated(p.clone()));
                    (env2, m) = (e, m2);
                }
                let mut body = Vec::new();
                gen(&env2, m, &ct.result, rest, &mut body);
                out.extend(body.into_iter().map(|b| Term::boxed(binders.clone(), b)));
            }
        }
        _ => {}
    }
    // eliminations at any result type
    if rest < 2 {
        return;
    }
    for (s1, s2) in splits(rest) {
        for (m1, m2) in split(mask) {
            // M; N
            let mut m = Vec::new();
            gen(env, m1, &Type::Unit, s1, &mut m);
            if !m.is_empty() {
                let mut n = Vec::new();
                gen(env, m2, ty, s2, &mut n);
                product(&m, &n, |x, y| out.push(Term::let_unit(x.clone(), y.clone())));
            }
            // let (a, b) = M in N
            let mut m = Vec::new();
            gen(env, m1, &Type::prod(Type::Int, Type::Int), s1, &mut m);
            if !m.is_empty() {
                let (env2, k, a) = with(env, m2, 0, CtxType::plain(Type::Int), true);
                let (env3, k, b) = with(&env2, k, 0, CtxType::plain(Type::Int), true);
                let mut n = Vec::new();
                gen(&env3, k, ty, s2, &mut n);
                product(&m, &n, |x, y| {
                    out.push(Term::LetPair {
                        fst: Binder::new(&a),
                        snd: Binder::new(&b),
                        scrut: Box::new(x.clone()),
                        body: Box::new(y.clone()),
                    })
                });
            }
            // let box u ^n = M in N, where M is checked at level n
            for code in [code0(), code1()] {
                let Type::Box(ct) = &code else { unreachable!() };
                for level in [0, 1] {
                    if !at_least(env, m1, level) {
                        continue;
                    }
                    let mut m = Vec::new();
                    gen(env, m1, &code, s1, &mut m);
                    if m.is_empty() {
                        continue;
                    }
                    let (env2, k, u) = with(env, m2, level, (**ct).clone(), true);
                    let mut n = Vec::new();
                    gen(&env2, k, ty, s2, &mut n);
                    product(&m, &n, |x, y| out.push(Term::let_box(&u, level, x.clone(), y.clone())));
                }
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Declarative checker
// ---------------------------------------------------------------------------

/// A scope entry. Ownership of linear entries is tracked separately as a
/// bitmask so that every rule can try all splits.
#[derive(Clone, Debug)]
pub struct Ent {
    pub name: String,
    pub level: u32,
    pub ty: CtxType,
    pub linear: bool,
}

type Mask = u64;

fn bit(i: usize) -> Mask {
    1 << i
}

/// All `(a, b)` with `a | b == m` and `a & b == 0`.
fn split(m: Mask) -> Vec<(Mask, Mask)> {
    let mut v = Vec::new();
    let mut s = m;
    loop {
        v.push((s, m ^ s));
        if s == 0 {
            break;
        }
        s = (s - 1) & m;
    }
    v
}

fn droppable(t: &CtxType) -> bool {
    t.params.is_empty() && t.result.is_droppable()
}

fn owned_at_least(env: &[Ent], owned: Mask, n: u32) -> bool {
    env.iter().enumerate().all(|(i, e)| owned & bit(i) == 0 || e.level >= n)
}

/// Declarative judgement: does `m` check against `ty` consuming exactly the
/// linear entries in `owned`? Search is exhaustive over context splits.
pub fn decl_check_closed(m: &Term, ty: &Type) -> bool {
    Decl.check(&[], 0, m, ty)
}

pub fn decl_synth_closed(m: &Term) -> Option<Type> {
    Decl.synth(&[], 0, m)
}

struct Decl;

impl Decl {
    /// Extends the scope with a binder. Returns the new scope and the mask
    /// the body must consume, or `None` if the binder is not allowed.
    fn bind(&self, env: &[Ent], owned: Mask, b: &Binder, level: u32, ty: CtxType) -> Option<(Vec<Ent>, Mask)> {
        let mut e = env.to_vec();
        if b.is_wildcard() {
            return droppable(&ty).then_some((e, owned));
        }
        let linear = b.mult == Mult::Linear;
        if !linear && !droppable(&ty) {
            return None;
        }
        e.push(Ent {
            name: b.name.clone(),
            level,
            ty,
            linear,
        });
        let o = if linear { owned | bit(e.len() - 1) } else { owned };
        Some((e, o))
    }

    fn check(&self, env: &[Ent], owned: Mask, m: &Term, ty: &Type) -> bool {
        match m {
            Term::Lam(b, body) => {
                let Type::Arrow(p, r) = ty else { return false };
                if let Some(a) = &b.ann {
                    if !a.params.is_empty() || a.result != **p {
                        return false;
                    }
                }
                match self.bind(env, owned, b, 0, CtxType::plain((**p).clone())) {
                    Some((e, o)) => self.check(&e, o, body, r),
                    None => false,
                }
            }
            Term::Pair(a, b) => match ty {
                Type::Prod(x, y) => split(owned)
                    .into_iter()
                    .any(|(o1, o2)| self.check(env, o1, a, x) && self.check(env, o2, b, y)),
                _ => false,
            },
            Term::LetUnit(a, b) => split(owned)
                .into_iter()
                .any(|(o1, o2)| self.check(env, o1, a, &Type::Unit) && self.check(env, o2, b, ty)),
            Term::Box(cv) => match ty {
                Type::Box(ct) => self.ctx_value(env, owned, cv, default_level(cv), Some(ct)).is_some(),
                _ => false,
            },
            Term::LetBox { binder, bound, body } => split(owned)
                .into_iter()
                .any(|(o1, o2)| self.let_box(env, o1, o2, binder, bound, |e, o| self.check(e, o, body, ty))),
            Term::LetPair { fst, snd, scrut, body } => split(owned).into_iter().any(|(o1, o2)| {
                self.let_pair(env, o1, o2, fst, snd, scrut, |e, o| self.check(e, o, body, ty))
            }),
            Term::App(f, a) => {
                if let Term::Lam(b, body) = f.as_ref() {
                    if b.ann.is_none() {
                        return split(owned).into_iter().any(|(o1, o2)| {
                            self.let_style(env, o1, o2, b, a, |e, o| self.check(e, o, body, ty))
                        });
                    }
                }
                self.synth(env, owned, m).as_ref() == Some(ty)
            }
            Term::Match { scrut, arms } => self.matching(env, owned, scrut, arms, Some(ty)).is_some(),
            _ => self.synth(env, owned, m).as_ref() == Some(ty),
        }
    }

    fn synth(&self, env: &[Ent], owned: Mask, m: &Term) -> Option<Type> {
        match m {
            Term::Unit => (owned == 0).then_some(Type::Unit),
            Term::Int(_) => (owned == 0).then_some(Type::Int),
            Term::Var { name, args, .. } => {
                let i = env.iter().rposition(|e| &e.name == name)?;
                let e = &env[i];
                if args.len() != e.ty.params.len() {
                    return None;
                }
                let rest = if e.linear {
                    if owned & bit(i) == 0 {
                        return None;
                    }
                    owned ^ bit(i)
                } else {
                    owned
                };
                self.args(env, rest, args, &e.ty.params, e.level)
                    .then(|| e.ty.result.clone())
            }
            Term::Arith(_, a, b) => split(owned)
                .into_iter()
                .any(|(o1, o2)| self.check(env, o1, a, &Type::Int) && self.check(env, o2, b, &Type::Int))
                .then_some(Type::Int),
            Term::LetUnit(a, b) => split(owned).into_iter().find_map(|(o1, o2)| {
                if self.check(env, o1, a, &Type::Unit) {
                    self.synth(env, o2, b)
                } else {
                    None
                }
            }),
            Term::Pair(a, b) => split(owned)
                .into_iter()
                .find_map(|(o1, o2)| Some(Type::prod(self.synth(env, o1, a)?, self.synth(env, o2, b)?))),
            Term::Lam(b, body) => {
                let a = b.ann.as_ref()?;
                if !a.params.is_empty() {
                    return None;
                }
                let (e, o) = self.bind(env, owned, b, 0, a.clone())?;
                Some(Type::arrow(a.result.clone(), self.synth(&e, o, body)?))
            }
            Term::Box(cv) => self
                .ctx_value(env, owned, cv, default_level(cv), None)
                .map(|c| Type::Box(Box::new(c))),
            Term::LetBox { binder, bound, body } => split(owned).into_iter().find_map(|(o1, o2)| {
                let mut r = None;
                self.let_box(env, o1, o2, binder, bound, |e, o| {
                    r = self.synth(e, o, body);
                    r.is_some()
                });
                r
            }),
            Term::LetPair { fst, snd, scrut, body } => split(owned).into_iter().find_map(|(o1, o2)| {
                let mut r = None;
                self.let_pair(env, o1, o2, fst, snd, scrut, |e, o| {
                    r = self.synth(e, o, body);
                    r.is_some()
                });
                r
            }),
            Term::App(f, a) => {
                if let Term::Lam(b, body) = f.as_ref() {
                    if b.ann.is_none() {
                        return split(owned).into_iter().find_map(|(o1, o2)| {
                            let mut r = None;
                            self.let_style(env, o1, o2, b, a, |e, o| {
                                r = self.synth(e, o, body);
                                r.is_some()
                            });
                            r
                        });
                    }
                }
                split(owned).into_iter().find_map(|(o1, o2)| match self.synth(env, o1, f)? {
                    Type::Arrow(p, r) if self.check(env, o2, a, &p) => Some(*r),
                    _ => None,
                })
            }
            Term::Match { scrut, arms } => self.matching(env, owned, scrut, arms, None),
            Term::Const(_) | Term::Chan(_) => None,
        }
    }

    /// Contextual arguments of an applied variable at `level`: binderless
    /// arguments are checked at level 0.
    fn args(&self, env: &[Ent], owned: Mask, args: &[CtxValue], params: &[CtxType], level: u32) -> bool {
        match (args, params) {
            ([], []) => owned == 0,
            ([a, rest @ ..], [p, ps @ ..]) => {
                let n = if a.binders.is_empty() { 0 } else { level };
                split(owned).into_iter().any(|(o1, o2)| {
                    self.ctx_value(env, o1, a, n, Some(p)).is_some() && self.args(env, o2, rest, ps, level)
                })
            }
            _ => false,
        }
    }

    fn ctx_value(&self, env: &[Ent], owned: Mask, cv: &CtxValue, n: u32, expected: Option<&CtxType>) -> Option<CtxType> {
        let params: Vec<CtxType> = match expected {
            Some(ct) => {
                if ct.params.len() != cv.binders.len() {
                    return None;
                }
                for (b, p) in cv.binders.iter().zip(&ct.params) {
                    if b.ann.as_ref().is_some_and(|a| a != p) {
                        return None;
                    }
                }
                ct.params.clone()
            }
            None => cv.binders.iter().map(|b| b.ann.clone()).collect::<Option<_>>()?,
        };
        if cv.binders.iter().any(|b| b.level >= n) || !owned_at_least(env, owned, n) {
            return None;
        }
        let mut e = env.to_vec();
        let mut o = owned;
        for (b, p) in cv.binders.iter().zip(&params) {
            (e, o) = self.bind(&e, o, b, b.level, p.clone())?;
        }
        let result = match expected {
            Some(ct) => self.check(&e, o, &cv.body, &ct.result).then(|| ct.result.clone())?,
            None => self.synth(&e, o, &cv.body)?,
        };
        Some(CtxType { params, result })
    }

    fn let_box(
        &self,
        env: &[Ent],
        o1: Mask,
        o2: Mask,
        binder: &Binder,
        bound: &Term,
        body: impl FnOnce(&[Ent], Mask) -> bool,
    ) -> bool {
        let n = binder.level;
        if !owned_at_least(env, o1, n) {
            return false;
        }
        let ct = match bound {
            Term::Box(cv) => self.ctx_value(env, o1, cv, n.max(default_level(cv)), None),
            other => match self.synth(env, o1, other) {
                Some(Type::Box(ct)) => Some(*ct),
                _ => None,
            },
        };
        match ct.and_then(|ct| self.bind(env, o2, binder, n, ct)) {
            Some((e, o)) => body(&e, o),
            None => false,
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn let_pair(
        &self,
        env: &[Ent],
        o1: Mask,
        o2: Mask,
        fst: &Binder,
        snd: &Binder,
        scrut: &Term,
        body: impl FnOnce(&[Ent], Mask) -> bool,
    ) -> bool {
        let Some(Type::Prod(a, b)) = self.synth(env, o1, scrut) else {
            return false;
        };
        let Some((e, o)) = self.bind(env, o2, fst, 0, CtxType::plain(*a)) else {
            return false;
        };
        match self.bind(&e, o, snd, 0, CtxType::plain(*b)) {
            Some((e, o)) => body(&e, o),
            None => false,
        }
    }

    fn let_style(
        &self,
        env: &[Ent],
        o1: Mask,
        o2: Mask,
        b: &Binder,
        arg: &Term,
        body: impl FnOnce(&[Ent], Mask) -> bool,
    ) -> bool {
        let Some(t) = self.synth(env, o1, arg) else { return false };
        match self.bind(env, o2, b, 0, CtxType::plain(t)) {
            Some((e, o)) => body(&e, o),
            None => false,
        }
    }

    /// Integer matches only; every arm consumes the same resources.
    fn matching(&self, env: &[Ent], owned: Mask, scrut: &Term, arms: &[Arm], expected: Option<&Type>) -> Option<Type> {
        if !arms.iter().any(|a| matches!(a.pat, Pattern::Bind(_))) {
            return None;
        }
        split(owned).into_iter().find_map(|(o1, o2)| {
            if self.synth(env, o1, scrut)? != Type::Int {
                return None;
            }
            let mut result: Option<Type> = expected.cloned();
            for a in arms {
                let (e, o) = match &a.pat {
                    Pattern::Int(_) => (env.to_vec(), o2),
                    Pattern::Bind(b) => self.bind(env, o2, b, 0, CtxType::plain(Type::Int))?,
                    Pattern::Label(..) => return None,
                };
                match &result {
                    Some(t) => {
                        if !self.check(&e, o, &a.body, t) {
                            return None;
                        }
                    }
                    None => result = Some(self.synth(&e, o, &a.body)?),
                }
            }
            result
        })
    }
}

/// The level a free-standing box is checked at.
fn default_level(cv: &CtxValue) -> u32 {
    cv.binders.iter().map(|b| b.level + 1).max().unwrap_or(0)
}

// ---------------------------------------------------------------------------
// Mutants
// ---------------------------------------------------------------------------

fn binder_names(t: &Term, out: &mut BTreeSet<String>) {
    fn push_to(out: &mut BTreeSet<String>, b: &Binder) {
        if !b.is_wildcard() {
            out.insert(b.name.clone());
        }
    }
    match t {
        Term::Lam(b, body) => {
            push_to(out, b);
            binder_names(body, out);
        }
        Term::LetBox { binder, bound, body } => {
            push_to(out, binder);
            binder_names(bound, out);
            binder_names(body, out);
        }
        Term::LetPair { fst, snd, scrut, body } => {
            push_to(out, fst);
            push_to(out, snd);
            binder_names(scrut, out);
            binder_names(body, out);
        }
        Term::Box(cv) => {
            cv.binders.iter().for_each(|b| push_to(out, b));
            binder_names(&cv.body, out);
        }
        Term::App(a, b) | Term::LetUnit(a, b) | Term::Arith(_, a, b) | Term::Pair(a, b) => {
            binder_names(a, out);
            binder_names(b, out);
        }
        Term::Var { args, .. } => {
            for a in args {
                a.binders.iter().for_each(|b| push_to(out, b));
                binder_names(&a.body, out);
            }
        }
        Term::Match { scrut, arms } => {
            binder_names(scrut, out);
            for a in arms {
                if let Pattern::Bind(b) | Pattern::Label(_, b) = &a.pat {
                    push_to(out, b);
                }
                binder_names(&a.body, out);
            }
        }
        Term::Unit | Term::Int(_) | Term::Const(_) | Term::Chan(_) => {}
    }
}

/// Single-edit variants of `t`: variable swaps, literal-to-variable,
/// duplicated or dropped operands, level and annotation changes, wildcard
/// binders and contextual-argument arity changes.
pub fn mutants(t: &Term) -> Vec<Term> {
    let mut names = BTreeSet::new();
    binder_names(t, &mut names);
    names.insert("free".to_string());
    let names: Vec<String> = names.into_iter().collect();
    let mut out = Vec::new();
    mutate(t, &names, &mut |m| out.push(m));
    out
}

fn mutate(t: &Term, names: &[String], emit: &mut dyn FnMut(Term)) {
    // edits at this node
    match t {
        Term::Var { name, args, .. } => {
            for n in names.iter().filter(|n| *n != name) {
                emit(Term::applied(n, args.clone()));
            }
            if args.is_empty() {
                emit(Term::applied(name, vec![CtxValue::closed(Term::Int(1))]));
            } else {
                emit(Term::var(name));
            }
        }
        Term::Int(_) | Term::Unit => {
            for n in names {
                emit(Term::var(n));
            }
        }
        Term::Arith(op, a, b) => {
            emit(Term::arith(*op, a.as_ref().clone(), a.as_ref().clone()));
            emit(Term::arith(*op, b.as_ref().clone(), b.as_ref().clone()));
        }
        Term::Lam(b, body) => {
            emit(Term::Lam(Binder { ann: None, ..b.clone() }, body.clone()));
            emit(Term::Lam(Binder::new("_"), body.clone()));
            emit(Term::Lam(b.clone().unrestricted(), body.clone()));
        }
        Term::LetBox { binder, bound, body } => {
            for l in [0, 1, 2] {
                if l != binder.level {
                    emit(Term::LetBox {
                        binder: binder.clone().at_level(l),
                        bound: bound.clone(),
                        body: body.clone(),
                    });
                }
            }
        }
        Term::LetPair { fst, snd, scrut, body } => {
            emit(Term::LetPair {
                fst: Binder::new("_"),
                snd: snd.clone(),
                scrut: scrut.clone(),
                body: body.clone(),
            });
            emit(Term::LetPair {
                fst: fst.clone(),
                snd: fst.clone(),
                scrut: scrut.clone(),
                body: body.clone(),
            });
        }
        Term::Box(cv) => {
            for b in &cv.binders {
                emit(Term::Box(Box::new(CtxValue::new(
                    cv.binders
                        .iter()
                        .map(|c| if c.name == b.name { c.clone().at_level(c.level + 1) } else { c.clone() })
                        .collect(),
                    cv.body.clone(),
                ))));
            }
            if !cv.binders.is_empty() {
                emit(Term::Box(Box::new(CtxValue::closed(cv.body.clone()))));
            }
        }
        _ => {}
    }
    // edits below this node
    let sub = |child: &Term, rebuild: &dyn Fn(Term) -> Term, emit: &mut dyn FnMut(Term)| {
        mutate(child, names, &mut |m| emit(rebuild(m)));
    };
    match t {
        Term::Lam(b, body) => sub(body, &|m| Term::Lam(b.clone(), Box::new(m)), emit),
        Term::App(a, b) => {
            sub(a, &|m| Term::app(m, b.as_ref().clone()), emit);
            sub(b, &|m| Term::app(a.as_ref().clone(), m), emit);
        }
        Term::LetUnit(a, b) => {
            sub(a, &|m| Term::let_unit(m, b.as_ref().clone()), emit);
            sub(b, &|m| Term::let_unit(a.as_ref().clone(), m), emit);
        }
        Term::Arith(op, a, b) => {
            sub(a, &|m| Term::arith(*op, m, b.as_ref().clone()), emit);
            sub(b, &|m| Term::arith(*op, a.as_ref().clone(), m), emit);
        }
        Term::Pair(a, b) => {
            sub(a, &|m| Term::pair(m, b.as_ref().clone()), emit);
            sub(b, &|m| Term::pair(a.as_ref().clone(), m), emit);
        }
        Term::Box(cv) => sub(&cv.body, &|m| Term::boxed(cv.binders.clone(), m), emit),
        Term::LetBox { binder, bound, body } => {
            sub(
                bound,
                &|m| Term::LetBox {
                    binder: binder.clone(),
                    bound: Box::new(m),
                    body: body.clone(),
                },
                emit,
            );
            sub(
                body,
                &|m| Term::LetBox {
                    binder: binder.clone(),
                    bound: bound.clone(),
                    body: Box::new(m),
                },
                emit,
            );
        }
        Term::LetPair { fst, snd, scrut, body } => {
            let rebuild = |s: Term, b: Term| Term::LetPair {
                fst: fst.clone(),
                snd: snd.clone(),
                scrut: Box::new(s),
                body: Box::new(b),
            };
            sub(scrut, &|m| rebuild(m, body.as_ref().clone()), emit);
            sub(body, &|m| rebuild(scrut.as_ref().clone(), m), emit);
        }
        Term::Var { name, args, .. } => {
            for (i, a) in args.iter().enumerate() {
                sub(
                    &a.body,
                    &|m| {
                        let mut args = args.clone();
                        args[i] = CtxValue::new(a.binders.clone(), m);
                        Term::applied(name, args)
                    },
                    emit,
                );
            }
        }
        Term::Match { scrut, arms } => {
            sub(
                scrut,
                &|m| Term::Match {
                    scrut: Box::new(m),
                    arms: arms.clone(),
                },
                emit,
            );
            for (i, a) in arms.iter().enumerate() {
                sub(
                    &a.body,
                    &|m| {
                        let mut arms = arms.clone();
                        arms[i].body = m;
                        Term::Match {
                            scrut: scrut.clone(),
                            arms,
                        }
                    },
                    emit,
                );
            }
        }
        Term::Unit | Term::Int(_) | Term::Const(_) | Term::Chan(_) => {}
    }
}

/// The leftover checker's verdict on a closed term against `ty`.
pub fn algo_accepts(m: &Term, ty: &Type) -> bool {
    lcm::check_term(&lcm::types::TypingCtx::new(), m, Some(ty)).is_ok()
}

// ---------------------------------------------------------------------------
// Metatheory checks on one term
// ---------------------------------------------------------------------------

use lcm::eval::{Evaluator, Step};
use lcm::subst::Subst;
use lcm::{check_term, pretty};

/// Steps `t : ty` to a value, re-checking every intermediate term.
/// Returns the number of steps.
pub fn preservation_progress(ty: &Type, t: &Term) -> Result<usize, String> {
    let mut ev = Evaluator::new(Default::default());
    let mut cur = t.clone();
    for n in 0..1000 {
        match ev.step(cur.clone()) {
            Step::IsValue => {
                if ev.subst_session().vacuous_linear() != 0 {
                    return Err(format!("vacuous linear substitution evaluating {}", pretty(t)));
                }
                return Ok(n);
            }
            Step::Stepped(next, redex) => {
                if let Err(e) = check_term(&TypingCtx::new(), &next, Some(ty)) {
                    return Err(format!(
                        "{} step breaks preservation: {} ~> {} : {ty}: {e}",
                        redex.name(),
                        pretty(&cur),
                        pretty(&next)
                    ));
                }
                cur = next;
            }
            other => return Err(format!("no progress from {} : {ty}: {other:?}", pretty(&cur))),
        }
    }
    Err(format!("{} did not reach a value", pretty(t)))
}

/// Whether both checkers give the same verdict on `m : ty`; returns it.
pub fn agreement(m: &Term, ty: &Type) -> Result<bool, String> {
    let a = algo_accepts(m, ty);
    let d = decl_check_closed(m, ty);
    if a == d {
        Ok(a)
    } else {
        Err(format!("disagreement on {} : {ty} (leftover {a}, declarative {d})", pretty(m)))
    }
}

/// Checks the substitution principle on every let-box-of-box and
/// value-beta redex in `t`, each in its own scope: if the redex has type
/// `B` with leftover `Γ'`, so does the contractum. Returns
/// `(instances, instances under binders)`.
pub fn substitution_instances(t: &Term, s: &mut Subst) -> Result<(usize, usize), String> {
    let mut found = Vec::new();
    redexes(&mut TypingCtx::new(), t, &mut found);
    let (mut all, mut open) = (0, 0);
    for (ctx, r) in found {
        // a redex under a box may depend on hiding fixed by its
        // surroundings; only instances whose premises hold count
        let Ok((ty, left)) = check_term(&ctx, &r, None) else { continue };
        let c = contract(s, &r);
        let (ty2, left2) = check_term(&ctx, &c, None)
            .map_err(|e| format!("{} ~> {} under {} entries: {e}", pretty(&r), pretty(&c), ctx.len()))?;
        if ty != ty2 || left.usage() != left2.usage() {
            return Err(format!("{} ~> {} changes type or usage", pretty(&r), pretty(&c)));
        }
        all += 1;
        open += !ctx.is_empty() as usize;
    }
    Ok((all, open))
}

/// Walks `t` with its typing scope and reports every let-box of a literal
/// box and every beta redex with a value argument, in the scope where it
/// occurs.
fn redexes(ctx: &mut TypingCtx, t: &Term, out: &mut Vec<(TypingCtx, Term)>) {
    let scoped = |ctx: &mut TypingCtx, name: &str, level: u32, ty: CtxType, mult: Mult, body: &Term, out: &mut Vec<_>| {
        ctx.push(name, level, ty, mult);
        redexes(ctx, body, out);
        ctx.pop();
    };
    match t {
        Term::LetBox { binder, bound, body } => {
            if matches!(bound.as_ref(), Term::Box(_)) {
                out.push((ctx.clone(), t.clone()));
            }
            let saved = ctx.hide_below(binder.level);
            redexes(ctx, bound, out);
            ctx.restore_hidden(saved);
            let Ok((Type::Box(ct), _)) = check_term(&hidden(ctx, binder.level), bound, None) else {
                panic!("bound of {} has no box type", pretty(t))
            };
            scoped(ctx, &binder.name, binder.level, *ct, binder.mult, body, out);
        }
        Term::App(f, a) => {
            if matches!(f.as_ref(), Term::Lam(..)) && a.is_value() {
                out.push((ctx.clone(), t.clone()));
            }
            redexes(ctx, f, out);
            redexes(ctx, a, out);
        }
        Term::Lam(b, body) => {
            let ann = b.ann.clone().expect("enumerated lambdas are annotated");
            scoped(ctx, &b.name, 0, ann, b.mult, body, out);
        }
        Term::Box(cv) => {
            let level = lcm::typeck::default_box_level(cv);
            let saved = ctx.hide_below(level);
            for b in &cv.binders {
                ctx.push(&b.name, b.level, b.ann.clone().expect("annotated binder"), b.mult);
            }
            redexes(ctx, &cv.body, out);
            for _ in &cv.binders {
                ctx.pop();
            }
            ctx.restore_hidden(saved);
        }
        Term::LetPair { fst, snd, scrut, body } => {
            redexes(ctx, scrut, out);
            ctx.push(&fst.name, 0, CtxType::plain(Type::Int), fst.mult);
            scoped(ctx, &snd.name, 0, CtxType::plain(Type::Int), snd.mult, body, out);
            ctx.pop();
        }
        Term::LetUnit(a, b) | Term::Arith(_, a, b) | Term::Pair(a, b) => {
            redexes(ctx, a, out);
            redexes(ctx, b, out);
        }
        Term::Var { args, .. } => {
            for a in args {
                redexes(ctx, &a.body, out);
            }
        }
        Term::Match { scrut, arms } => {
            redexes(ctx, scrut, out);
            for a in arms {
                match &a.pat {
                    Pattern::Bind(b) => scoped(ctx, &b.name, 0, CtxType::plain(Type::Int), b.mult, &a.body, out),
                    _ => redexes(ctx, &a.body, out),
                }
            }
        }
        Term::Unit | Term::Int(_) | Term::Const(_) | Term::Chan(_) => {}
    }
}

fn hidden(ctx: &TypingCtx, n: u32) -> TypingCtx {
    let mut c = ctx.clone();
    c.hide_below(n);
    c
}

fn contract(s: &mut Subst, redex: &Term) -> Term {
    match redex {
        Term::LetBox { binder, bound, body } => {
            let Term::Box(cv) = bound.as_ref() else { unreachable!() };
            s.subst(cv, &binder.name, body, binder.mult).unwrap()
        }
        Term::App(f, a) => {
            let Term::Lam(b, body) = f.as_ref() else { unreachable!() };
            s.subst(&CtxValue::closed(a.as_ref().clone()), &b.name, body, b.mult).unwrap()
        }
        _ => unreachable!(),
    }
}

