//! Free variables and capture-avoiding contextual substitution.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::syntax::{Arm, Binder, CtxValue, Pattern, Term};
use crate::types::Mult;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SubstError {
    #[error("`{name}` expects {expected} contextual arguments, got {found}")]
    ArityMismatch {
        name: String,
        expected: usize,
        found: usize,
    },
    #[error("linear variable `{0}` occurs free in two subterms")]
    AmbiguousOccurrence(String),
}

pub fn free_vars(m: &Term) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    fv(m, &mut Vec::new(), &mut out);
    out
}

/// Free variables of `x̄.M`: those of `M` minus `x̄`.
pub fn free_vars_ctx(cv: &CtxValue) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    fv_ctx(cv, &mut Vec::new(), &mut out);
    out
}

pub fn is_free(x: &str, m: &Term) -> bool {
    occurs(x, m)
}

fn fv(m: &Term, bound: &mut Vec<String>, out: &mut BTreeSet<String>) {
    let under = |bs: &[&Binder], body: &Term, bound: &mut Vec<String>, out: &mut BTreeSet<String>| {
        let n = bound.len();
        bound.extend(bs.iter().map(|b| b.name.clone()));
        fv(body, bound, out);
        bound.truncate(n);
    };
    match m {
        Term::Unit | Term::Int(_) | Term::Const(_) | Term::Chan(_) => {}
        Term::Var { name, args, .. } => {
            if !bound.contains(name) {
                out.insert(name.clone());
            }
            for a in args {
                fv_ctx(a, bound, out);
            }
        }
        Term::Lam(b, body) => under(&[b], body, bound, out),
        Term::App(a, b) | Term::LetUnit(a, b) | Term::Arith(_, a, b) | Term::Pair(a, b) => {
            fv(a, bound, out);
            fv(b, bound, out);
        }
        Term::Box(cv) => fv_ctx(cv, bound, out),
        Term::LetBox { binder, bound: m, body } => {
            fv(m, bound, out);
            under(&[binder], body, bound, out);
        }
        Term::LetPair { fst, snd, scrut, body } => {
            fv(scrut, bound, out);
            under(&[fst, snd], body, bound, out);
        }
        Term::Match { scrut, arms } => {
            fv(scrut, bound, out);
            for a in arms {
                under(&pattern_binders(&a.pat), &a.body, bound, out);
            }
        }
    }
}

fn fv_ctx(cv: &CtxValue, bound: &mut Vec<String>, out: &mut BTreeSet<String>) {
    let n = bound.len();
    bound.extend(cv.binders.iter().map(|b| b.name.clone()));
    fv(&cv.body, bound, out);
    bound.truncate(n);
}

fn pattern_binders(p: &Pattern) -> Vec<&Binder> {
    match p {
        Pattern::Label(_, b) | Pattern::Bind(b) => vec![b],
        Pattern::Int(_) => vec![],
    }
}

/// Whether `x` occurs free in `m`; cheaper than building the whole set.
fn occurs(x: &str, m: &Term) -> bool {
    let binds = |bs: &[&Binder]| bs.iter().any(|b| b.name == x);
    match m {
        Term::Unit | Term::Int(_) | Term::Const(_) | Term::Chan(_) => false,
        Term::Var { name, args, .. } => name == x || args.iter().any(|a| occurs_ctx(x, a)),
        Term::Lam(b, body) => !binds(&[b]) && occurs(x, body),
        Term::App(a, b) | Term::LetUnit(a, b) | Term::Arith(_, a, b) | Term::Pair(a, b) => {
            occurs(x, a) || occurs(x, b)
        }
        Term::Box(cv) => occurs_ctx(x, cv),
        Term::LetBox { binder, bound, body } => occurs(x, bound) || (!binds(&[binder]) && occurs(x, body)),
        Term::LetPair { fst, snd, scrut, body } => {
            occurs(x, scrut) || (!binds(&[fst, snd]) && occurs(x, body))
        }
        Term::Match { scrut, arms } => {
            occurs(x, scrut) || arms.iter().any(|a| !binds(&pattern_binders(&a.pat)) && occurs(x, &a.body))
        }
    }
}

fn occurs_ctx(x: &str, cv: &CtxValue) -> bool {
    !cv.binders.iter().any(|b| b.name == x) && occurs(x, &cv.body)
}

/// `[σ/x]M` for a linear `x`.
pub fn subst(sigma: &CtxValue, x: &str, m: &Term) -> Result<Term, SubstError> {
    Subst::new().subst(sigma, x, m, Mult::Linear)
}

/// `[ρ̄/z̄]M`, performed left to right.
pub fn simul_subst(args: &[CtxValue], binders: &[String], m: &Term) -> Result<Term, SubstError> {
    let bs: Vec<Binder> = binders.iter().map(Binder::new).collect();
    Subst::new().simul(args.to_vec(), &bs, m.clone(), "<simultaneous>")
}

/// A substitution session: owns the fresh-name counter and counts linear
/// substitutions whose variable does not occur.
#[derive(Debug, Default)]
pub struct Subst {
    next: u64,
    vacuous_linear: usize,
}

impl Subst {
    pub fn new() -> Self {
        Self::default()
    }

    /// Number of linear substitutions made for a variable not free in the
    /// target. Stays 0 when evaluating well-typed terms.
    pub fn vacuous_linear(&self) -> usize {
        self.vacuous_linear
    }

    /// `[σ/x]M`. In linear mode `x` must occur in at most one branch of any
    /// two-branch construct; in unrestricted mode substitution is
    /// homomorphic everywhere.
    pub fn subst(&mut self, sigma: &CtxValue, x: &str, m: &Term, mode: Mult) -> Result<Term, SubstError> {
        if mode == Mult::Linear && !occurs(x, m) {
            self.vacuous_linear += 1;
        }
        let sfv = free_vars_ctx(sigma);
        self.go(sigma, &sfv, x, m, mode)
    }

    fn fresh(&mut self, base: &str, avoid: &BTreeSet<String>) -> String {
        let stem = base.split('$').next().unwrap_or(base);
        loop {
            self.next += 1;
            let cand = format!("{stem}${}", self.next);
            if !avoid.contains(&cand) {
                return cand;
            }
        }
    }

    fn avoid_set(&self, sigma: &CtxValue, m: &Term) -> BTreeSet<String> {
        let mut avoid = BTreeSet::new();
        m.all_names(&mut avoid);
        sigma.body.all_names(&mut avoid);
        avoid.extend(sigma.binders.iter().map(|b| b.name.clone()));
        avoid
    }

    /// Renames `b` (bound in `bodies`) away from `sfv` when needed.
    fn freshen(
        &mut self,
        b: &Binder,
        bodies: &mut [&mut Term],
        sfv: &BTreeSet<String>,
        avoid: &BTreeSet<String>,
    ) -> Binder {
        if b.is_wildcard() || !sfv.contains(&b.name) {
            return b.clone();
        }
        let new = self.fresh(&b.name, avoid);
        for body in bodies.iter_mut() {
            **body = rename(body, &b.name, &new);
        }
        Binder { name: new, ..b.clone() }
    }

    fn go(&mut self, sigma: &CtxValue, sfv: &BTreeSet<String>, x: &str, m: &Term, mode: Mult) -> Result<Term, SubstError> {
        if !occurs(x, m) {
            return Ok(m.clone());
        }
        let linear = mode == Mult::Linear;
        let both = |a: &Term, b: &Term| linear && occurs(x, a) && occurs(x, b);
        let ambiguous = || SubstError::AmbiguousOccurrence(x.to_string());
        Ok(match m {
            Term::Unit | Term::Int(_) | Term::Const(_) | Term::Chan(_) => m.clone(),
            Term::Var { name, args, span } => {
                if linear && args.iter().filter(|a| occurs_ctx(x, a)).count() > 1 {
                    return Err(ambiguous());
                }
                let args = args
                    .iter()
                    .map(|a| self.go_ctx(sigma, sfv, x, a, mode))
                    .collect::<Result<Vec<_>, _>>()?;
                if name == x {
                    self.simul(args, &sigma.binders, sigma.body.clone(), x)?
                } else {
                    Term::Var {
                        name: name.clone(),
                        args,
                        span: *span,
                    }
                }
            }
            Term::Lam(b, body) => {
                let avoid = self.avoid_set(sigma, m);
                let mut body = (**body).clone();
                let b = self.freshen(b, &mut [&mut body], sfv, &avoid);
                Term::Lam(b, Box::new(self.go(sigma, sfv, x, &body, mode)?))
            }
            Term::App(a, b) | Term::LetUnit(a, b) | Term::Arith(_, a, b) | Term::Pair(a, b) => {
                if both(a, b) {
                    return Err(ambiguous());
                }
                let a = self.go(sigma, sfv, x, a, mode)?;
                let b = self.go(sigma, sfv, x, b, mode)?;
                match m {
                    Term::App(..) => Term::app(a, b),
                    Term::LetUnit(..) => Term::let_unit(a, b),
                    Term::Arith(op, ..) => Term::arith(*op, a, b),
                    _ => Term::pair(a, b),
                }
            }
            Term::Box(cv) => Term::Box(Box::new(self.go_ctx(sigma, sfv, x, cv, mode)?)),
            Term::LetBox { binder, bound, body } => {
                let body_has = binder.name != x && occurs(x, body);
                if linear && body_has && occurs(x, bound) {
                    return Err(ambiguous());
                }
                let bound = self.go(sigma, sfv, x, bound, mode)?;
                let (binder, body) = if body_has {
                    let avoid = self.avoid_set(sigma, m);
                    let mut body = (**body).clone();
                    let binder = self.freshen(binder, &mut [&mut body], sfv, &avoid);
                    let body = self.go(sigma, sfv, x, &body, mode)?;
                    (binder, body)
                } else {
                    (binder.clone(), (**body).clone())
                };
                Term::LetBox {
                    binder,
                    bound: Box::new(bound),
                    body: Box::new(body),
                }
            }
            Term::LetPair { fst, snd, scrut, body } => {
                let body_has = fst.name != x && snd.name != x && occurs(x, body);
                if linear && body_has && occurs(x, scrut) {
                    return Err(ambiguous());
                }
                let scrut = self.go(sigma, sfv, x, scrut, mode)?;
                let (fst, snd, body) = if body_has {
                    let avoid = self.avoid_set(sigma, m);
                    let mut body = (**body).clone();
                    let fst = self.freshen(fst, &mut [&mut body], sfv, &avoid);
                    let snd = self.freshen(snd, &mut [&mut body], sfv, &avoid);
                    let body = self.go(sigma, sfv, x, &body, mode)?;
                    (fst, snd, body)
                } else {
                    (fst.clone(), snd.clone(), (**body).clone())
                };
                Term::LetPair {
                    fst,
                    snd,
                    scrut: Box::new(scrut),
                    body: Box::new(body),
                }
            }
            Term::Match { scrut, arms } => {
                let in_arms = arms
                    .iter()
                    .any(|a| !pattern_binders(&a.pat).iter().any(|b| b.name == x) && occurs(x, &a.body));
                if linear && in_arms && occurs(x, scrut) {
                    return Err(ambiguous());
                }
                let scrut = self.go(sigma, sfv, x, scrut, mode)?;
                let mut out = Vec::with_capacity(arms.len());
                for arm in arms {
                    let binders = pattern_binders(&arm.pat);
                    if binders.iter().any(|b| b.name == x) {
                        out.push(arm.clone());
                        continue;
                    }
                    let avoid = self.avoid_set(sigma, m);
                    let mut body = arm.body.clone();
                    let pat = match &arm.pat {
                        Pattern::Label(l, b) => Pattern::Label(l.clone(), self.freshen(b, &mut [&mut body], sfv, &avoid)),
                        Pattern::Bind(b) => Pattern::Bind(self.freshen(b, &mut [&mut body], sfv, &avoid)),
                        Pattern::Int(i) => Pattern::Int(*i),
                    };
                    out.push(Arm {
                        pat,
                        body: self.go(sigma, sfv, x, &body, mode)?,
                    });
                }
                Term::Match {
                    scrut: Box::new(scrut),
                    arms: out,
                }
            }
        })
    }

    fn go_ctx(&mut self, sigma: &CtxValue, sfv: &BTreeSet<String>, x: &str, cv: &CtxValue, mode: Mult) -> Result<CtxValue, SubstError> {
        if !occurs_ctx(x, cv) {
            return Ok(cv.clone());
        }
        let avoid = self.avoid_set(sigma, &Term::Box(Box::new(cv.clone())));
        let mut body = cv.body.clone();
        let binders = cv
            .binders
            .iter()
            .map(|b| self.freshen(b, &mut [&mut body], sfv, &avoid))
            .collect();
        Ok(CtxValue {
            binders,
            body: self.go(sigma, sfv, x, &body, mode)?,
        })
    }

    /// `[ρ̄/z̄]M`. Binders of `M` that occur free in some `ρᵢ` are renamed
    /// first so that sequential substitution cannot capture.
    fn simul(&mut self, args: Vec<CtxValue>, zs: &[Binder], mut body: Term, name: &str) -> Result<Term, SubstError> {
        if args.len() != zs.len() {
            return Err(SubstError::ArityMismatch {
                name: name.to_string(),
                expected: zs.len(),
                found: args.len(),
            });
        }
        let arg_fv: BTreeSet<String> = args.iter().flat_map(free_vars_ctx).collect();
        let mut zs = zs.to_vec();
        if zs.iter().any(|z| arg_fv.contains(&z.name)) {
            let mut avoid = arg_fv.clone();
            body.all_names(&mut avoid);
            for a in &args {
                a.body.all_names(&mut avoid);
            }
            for z in &mut zs {
                if z.is_wildcard() {
                    continue;
                }
                let new = self.fresh(&z.name, &avoid);
                avoid.insert(new.clone());
                body = rename(&body, &z.name, &new);
                z.name = new;
            }
        }
        for (arg, z) in args.iter().zip(&zs) {
            if z.is_wildcard() {
                continue;
            }
            body = self.subst(arg, &z.name, &body, z.mult)?;
        }
        Ok(body)
    }
}

/// Renames free occurrences of `old` to `new`; `new` must be fresh.
/// Applied-variable arguments stay in place: `old[ρ̄]` becomes `new[ρ̄]`.
pub fn rename(m: &Term, old: &str, new: &str) -> Term {
    rename_var(m, old, new)
}

fn rename_var(m: &Term, old: &str, new: &str) -> Term {
    let r = |t: &Term| rename_var(t, old, new);
    let shadow = |bs: &[&Binder]| bs.iter().any(|b| b.name == old);
    let rcv = |cv: &CtxValue| {
        if cv.binders.iter().any(|b| b.name == old) {
            cv.clone()
        } else {
            CtxValue {
                binders: cv.binders.clone(),
                body: rename_var(&cv.body, old, new),
            }
        }
    };
    match m {
        Term::Unit | Term::Int(_) | Term::Const(_) | Term::Chan(_) => m.clone(),
        Term::Var { name, args, span } => Term::Var {
            name: if name == old { new.to_string() } else { name.clone() },
            args: args.iter().map(rcv).collect(),
            span: *span,
        },
        Term::Lam(b, body) if shadow(&[b]) => m.clone(),
        Term::Lam(b, body) => Term::Lam(b.clone(), Box::new(r(body))),
        Term::App(a, b) => Term::app(r(a), r(b)),
        Term::LetUnit(a, b) => Term::let_unit(r(a), r(b)),
        Term::Arith(op, a, b) => Term::arith(*op, r(a), r(b)),
        Term::Pair(a, b) => Term::pair(r(a), r(b)),
        Term::Box(cv) => Term::Box(Box::new(rcv(cv))),
        Term::LetBox { binder, bound, body } => Term::LetBox {
            binder: binder.clone(),
            bound: Box::new(r(bound)),
            body: Box::new(if shadow(&[binder]) { (**body).clone() } else { r(body) }),
        },
        Term::LetPair { fst, snd, scrut, body } => Term::LetPair {
            fst: fst.clone(),
            snd: snd.clone(),
            scrut: Box::new(r(scrut)),
            body: Box::new(if shadow(&[fst, snd]) { (**body).clone() } else { r(body) }),
        },
        Term::Match { scrut, arms } => Term::Match {
            scrut: Box::new(r(scrut)),
            arms: arms
                .iter()
                .map(|a| Arm {
                    pat: a.pat.clone(),
                    body: if shadow(&pattern_binders(&a.pat)) { a.body.clone() } else { r(&a.body) },
                })
                .collect(),
        },
    }
}
