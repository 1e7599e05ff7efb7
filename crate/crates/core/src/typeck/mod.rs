//! Algorithmic typechecking in leftover style: each judgment takes the
//! context, marks the linear entries it consumes, and hands the rest on.

mod error;

use std::collections::BTreeMap;

pub use error::{render_errors, ErrorCode, TypeError};

use crate::syntax::{Arm, Binder, Const, CtxValue, Pattern, Program, Span, Term};
use crate::types::{dual, type_equiv, unfold, Aliases, CtxType, Mult, SessionType, Type, TypingCtx};

type TResult<T> = Result<T, TypeError>;

fn err(code: ErrorCode, msg: impl Into<String>) -> TypeError {
    TypeError::new(code, msg)
}

fn mismatch(expected: &Type, found: &Type) -> TypeError {
    err(ErrorCode::TypeMismatch, format!("expected `{expected}`, found `{found}`"))
}

/// Synthesizes (or, given `expected`, checks) the type of `m` under `ctx`.
/// Returns the type and the leftover context.
pub fn check_term(ctx: &TypingCtx, m: &Term, expected: Option<&Type>) -> TResult<(Type, TypingCtx)> {
    let mut out = ctx.clone();
    let t = check(&mut out, m, expected)?;
    Ok((t, out))
}

/// Checks a contextual value at level `n`. Binders must sit below `n`;
/// outer entries below `n` are hidden while the body is checked.
pub fn check_ctx_value(
    ctx: &TypingCtx,
    cv: &CtxValue,
    n: u32,
    expected: Option<&CtxType>,
) -> TResult<(CtxType, TypingCtx)> {
    let mut out = ctx.clone();
    let t = ctx_value(&mut out, cv, n, expected)?;
    Ok((t, out))
}

/// Level at which a box outside a let-box is checked: 0 when it has no
/// binders, else just above its highest binder.
pub fn default_box_level(cv: &CtxValue) -> u32 {
    cv.binders.iter().map(|b| b.level + 1).max().unwrap_or(0)
}

fn span_of(m: &Term) -> Option<Span> {
    match m {
        Term::Var { span, .. } if !span.is_unknown() => Some(*span),
        Term::Lam(b, _) | Term::LetBox { binder: b, .. } if !b.span.is_unknown() => Some(b.span),
        Term::LetPair { fst, .. } if !fst.span.is_unknown() => Some(fst.span),
        Term::Lam(_, a) => span_of(a),
        Term::App(a, b) | Term::LetUnit(a, b) | Term::Arith(_, a, b) | Term::Pair(a, b) => {
            span_of(a).or_else(|| span_of(b))
        }
        Term::Box(cv) => cv.binders.first().map(|b| b.span).filter(|s| !s.is_unknown()).or_else(|| span_of(&cv.body)),
        Term::LetBox { bound, body, .. } => span_of(bound).or_else(|| span_of(body)),
        Term::LetPair { scrut, body, .. } => span_of(scrut).or_else(|| span_of(body)),
        Term::Match { scrut, arms } => span_of(scrut).or_else(|| arms.iter().find_map(|a| span_of(&a.body))),
        Term::Var { args, .. } => args.iter().find_map(|a| span_of(&a.body)),
        _ => None,
    }
}

fn locate(e: TypeError, m: &Term) -> TypeError {
    match span_of(m) {
        Some(s) => e.at(s),
        None => e,
    }
}

fn check(ctx: &mut TypingCtx, m: &Term, expected: Option<&Type>) -> TResult<Type> {
    let t = check_inner(ctx, m, expected).map_err(|e| locate(e, m))?;
    if let Some(e) = expected {
        if !type_equiv(&t, e) {
            return Err(locate(mismatch(e, &t), m));
        }
    }
    Ok(t)
}

/// Pushes `b` with type `ty`; returns whether an entry was pushed
/// (wildcards push nothing).
fn bind(ctx: &mut TypingCtx, b: &Binder, level: u32, ty: CtxType) -> TResult<bool> {
    if b.is_wildcard() {
        if !ty.params.is_empty() || !ty.result.is_droppable() {
            return Err(err(ErrorCode::UnusedLinear, format!("`_` discards a value of type `{ty}`")).at(b.span));
        }
        return Ok(false);
    }
    if b.mult == Mult::Unrestricted && (!ty.params.is_empty() || !ty.result.is_droppable()) {
        return Err(err(
            ErrorCode::TypeMismatch,
            format!("unrestricted `{}` needs a data type, found `{ty}`", b.name),
        )
        .at(b.span));
    }
    ctx.push(&b.name, level, ty, b.mult);
    Ok(true)
}

fn unbind(ctx: &mut TypingCtx, b: &Binder, pushed: bool) -> TResult<()> {
    if !pushed {
        return Ok(());
    }
    let e = ctx.pop().expect("binder entry");
    if e.is_live() {
        return Err(err(ErrorCode::UnusedLinear, format!("linear variable `{}` is never used", b.name)).at(b.span));
    }
    Ok(())
}

fn check_inner(ctx: &mut TypingCtx, m: &Term, expected: Option<&Type>) -> TResult<Type> {
    match m {
        Term::Unit => Ok(Type::Unit),
        Term::Int(_) => Ok(Type::Int),
        Term::Chan(id) => Err(err(ErrorCode::TypeMismatch, format!("channel endpoint @{id} has no static type"))),
        Term::Var { name, args, span } => var(ctx, name, args, *span),
        Term::Arith(_, a, b) => {
            check(ctx, a, Some(&Type::Int))?;
            check(ctx, b, Some(&Type::Int))?;
            Ok(Type::Int)
        }
        Term::LetUnit(a, b) => {
            check(ctx, a, Some(&Type::Unit))?;
            check(ctx, b, expected)
        }
        Term::Pair(a, b) => {
            let (ea, eb) = match expected {
                Some(Type::Prod(x, y)) => (Some(x.as_ref()), Some(y.as_ref())),
                _ => (None, None),
            };
            let ta = check(ctx, a, ea)?;
            let tb = check(ctx, b, eb)?;
            Ok(Type::prod(ta, tb))
        }
        Term::LetPair { fst, snd, scrut, body } => {
            let (a, b) = match check(ctx, scrut, None)? {
                Type::Prod(a, b) => (*a, *b),
                other => {
                    return Err(err(ErrorCode::TypeMismatch, format!("expected a pair, found `{other}`")).at(fst.span))
                }
            };
            let p1 = bind(ctx, fst, 0, CtxType::plain(a))?;
            let p2 = bind(ctx, snd, 0, CtxType::plain(b))?;
            let t = check(ctx, body, expected)?;
            unbind(ctx, snd, p2)?;
            unbind(ctx, fst, p1)?;
            Ok(t)
        }
        Term::Lam(b, body) => {
            let (param, result) = match (expected, &b.ann) {
                (Some(Type::Arrow(p, r)), ann) => {
                    if let Some(a) = ann {
                        let at = plain_ann(a)?;
                        if !type_equiv(&at, p) {
                            return Err(mismatch(p, &at).at(b.span));
                        }
                    }
                    ((**p).clone(), Some(r.as_ref()))
                }
                (Some(other), _) => {
                    return Err(err(ErrorCode::TypeMismatch, format!("expected `{other}`, found a function")).at(b.span))
                }
                (None, Some(a)) => (plain_ann(a)?, None),
                (None, None) => {
                    return Err(err(
                        ErrorCode::TypeMismatch,
                        format!("cannot infer the type of `{}`; annotate it as `\\({} : T)`", b.name, b.name),
                    )
                    .at(b.span))
                }
            };
            let pushed = bind(ctx, b, 0, CtxType::plain(param.clone()))?;
            let r = check(ctx, body, result)?;
            unbind(ctx, b, pushed)?;
            Ok(Type::arrow(param, r))
        }
        Term::App(f, a) => app(ctx, m, f, a, expected),
        Term::Const(c) => constant(ctx, m, c, expected),
        Term::Box(cv) => {
            let ct = match expected {
                Some(Type::Box(ct)) => Some(ct.as_ref()),
                Some(other) => return Err(err(ErrorCode::TypeMismatch, format!("expected `{other}`, found a box"))),
                None => None,
            };
            let level = default_box_level(cv);
            Ok(Type::Box(Box::new(ctx_value(ctx, cv, level, ct)?)))
        }
        Term::LetBox { binder, bound, body } => {
            let n = binder.level;
            let saved = ctx.hide_below(n);
            let r = match bound.as_ref() {
                // the level the box would get after any redex above it
                // reduces away: n for the hiding here, plus its own default
                Term::Box(cv) => ctx_value(ctx, cv, n.max(default_box_level(cv)), None).map(|c| Type::Box(Box::new(c))),
                other => check(ctx, other, None),
            };
            ctx.restore_hidden(saved);
            let ct = match r? {
                Type::Box(ct) => *ct,
                other => {
                    return Err(err(ErrorCode::TypeMismatch, format!("`let box` expects a box, found `{other}`"))
                        .at(binder.span))
                }
            };
            let pushed = bind(ctx, binder, n, ct)?;
            let t = check(ctx, body, expected)?;
            unbind(ctx, binder, pushed)?;
            Ok(t)
        }
        Term::Match { scrut, arms } => matching(ctx, scrut, arms, expected),
    }
}

fn plain_ann(a: &CtxType) -> TResult<Type> {
    if a.params.is_empty() {
        Ok(a.result.clone())
    } else {
        Err(err(ErrorCode::TypeMismatch, format!("`{a}` is not a value type")))
    }
}

fn var(ctx: &mut TypingCtx, name: &str, args: &[CtxValue], span: Span) -> TResult<Type> {
    let idx = ctx
        .lookup(name)
        .ok_or_else(|| err(ErrorCode::UnknownVariable, format!("unknown variable `{name}`")).at(span))?;
    let e = ctx.get(idx).clone();
    if e.hidden {
        return Err(err(
            ErrorCode::LevelTooLow,
            format!("`{name}` has level {} and is not available here", e.level),
        )
        .at(span));
    }
    if e.mult == Mult::Linear && e.used {
        return Err(err(ErrorCode::ReusedLinear, format!("linear variable `{name}` is used more than once")).at(span));
    }
    if args.len() != e.ty.params.len() {
        return Err(err(
            ErrorCode::ArityMismatch,
            format!("`{name}` expects {} contextual arguments, got {}", e.ty.params.len(), args.len()),
        )
        .at(span));
    }
    if e.mult == Mult::Linear {
        ctx.mark_used(idx);
    }
    for (a, p) in args.iter().zip(&e.ty.params) {
        let level = if a.binders.is_empty() { 0 } else { e.level };
        ctx_value(ctx, a, level, Some(p)).map_err(|er| er.at(span))?;
    }
    Ok(e.ty.result.clone())
}

fn ctx_value(ctx: &mut TypingCtx, cv: &CtxValue, n: u32, expected: Option<&CtxType>) -> TResult<CtxType> {
    let params: Vec<CtxType> = match expected {
        Some(ct) => {
            if ct.params.len() != cv.binders.len() {
                return Err(err(
                    ErrorCode::ArityMismatch,
                    format!("contextual value has {} binders, expected {}", cv.binders.len(), ct.params.len()),
                )
                .at(cv.binders.first().map(|b| b.span).unwrap_or_default()));
            }
            for (b, p) in cv.binders.iter().zip(&ct.params) {
                if let Some(a) = &b.ann {
                    if !crate::types::ctx_type_equiv(a, p) {
                        return Err(err(ErrorCode::TypeMismatch, format!("expected `{p}`, found `{a}`")).at(b.span));
                    }
                }
            }
            ct.params.clone()
        }
        None => cv
            .binders
            .iter()
            .map(|b| {
                b.ann.clone().ok_or_else(|| {
                    err(
                        ErrorCode::TypeMismatch,
                        format!("cannot infer the type of binder `{}`; annotate it as `{} : T`", b.name, b.name),
                    )
                    .at(b.span)
                })
            })
            .collect::<TResult<_>>()?,
    };
    for b in &cv.binders {
        if b.level >= n {
            return Err(err(
                ErrorCode::LevelNotBelow,
                format!("binder `{}` has level {} but the code is checked at level {n}", b.name, b.level),
            )
            .at(b.span));
        }
    }
    let saved = ctx.hide_below(n);
    let mut pushed = Vec::new();
    let mut result = Ok(());
    for (b, p) in cv.binders.iter().zip(&params) {
        match bind(ctx, b, b.level, p.clone()) {
            Ok(x) => pushed.push(x),
            Err(e) => {
                result = Err(e);
                break;
            }
        }
    }
    let body = result.and_then(|_| check(ctx, &cv.body, expected.map(|c| &c.result)));
    let mut outcome = body.map(|t| CtxType { params: params.clone(), result: t });
    for (b, p) in cv.binders.iter().zip(&pushed).rev() {
        if let Err(e) = unbind(ctx, b, *p) {
            outcome = outcome.and(Err(e));
        }
    }
    ctx.restore_hidden(saved);
    outcome
}

fn app(ctx: &mut TypingCtx, whole: &Term, f: &Term, a: &Term, expected: Option<&Type>) -> TResult<Type> {
    if let Some((c, args)) = whole.const_spine() {
        if args.len() <= c.arity() {
            return constant_spine(ctx, whole, c, &args, expected);
        }
    }
    if let Term::Lam(b, body) = f {
        if b.ann.is_none() {
            // `let`-style: the argument determines the parameter type
            let ta = check(ctx, a, None)?;
            let pushed = bind(ctx, b, 0, CtxType::plain(ta))?;
            let t = check(ctx, body, expected)?;
            unbind(ctx, b, pushed)?;
            return Ok(t);
        }
    }
    match check(ctx, f, None)? {
        Type::Arrow(p, r) => {
            check(ctx, a, Some(&p))?;
            Ok(*r)
        }
        other => Err(err(ErrorCode::TypeMismatch, format!("`{other}` is not a function type"))),
    }
}

fn constant(ctx: &mut TypingCtx, whole: &Term, c: &Const, expected: Option<&Type>) -> TResult<Type> {
    constant_spine(ctx, whole, c, &[], expected)
}

fn session_of(ctx: &mut TypingCtx, m: &Term) -> TResult<SessionType> {
    match check(ctx, m, None)? {
        Type::Sess(s) => Ok(unfold(&s)),
        other => Err(locate(
            err(ErrorCode::TypeMismatch, format!("expected a channel, found `{other}`")),
            m,
        )),
    }
}

fn dual_of(s: &SessionType) -> TResult<SessionType> {
    dual(s).map_err(|e| err(ErrorCode::DualityUndefined, e.0))
}

/// A constant applied to at most its arity of arguments.
fn constant_spine(ctx: &mut TypingCtx, whole: &Term, c: &Const, args: &[&Term], expected: Option<&Type>) -> TResult<Type> {
    if args.len() < c.arity() {
        // η: check `whole x` against the codomain for a fresh `x`
        return match expected {
            Some(Type::Arrow(p, r)) => {
                let x = format!("eta${}", ctx.len());
                ctx.push(&x, 0, CtxType::plain((**p).clone()), Mult::Linear);
                let r = check(ctx, &Term::app(whole.clone(), Term::var(&x)), Some(r));
                let e = ctx.pop().expect("eta entry");
                let r = r?;
                if e.is_live() {
                    return Err(err(ErrorCode::UnusedLinear, "argument of a partially applied constant is unused"));
                }
                Ok(Type::Arrow(p.clone(), Box::new(r)))
            }
            _ => Err(err(
                ErrorCode::TypeMismatch,
                "cannot infer the type of a partially applied constant here; supply the remaining arguments",
            )),
        };
    }
    match c {
        Const::New(s) => Ok(Type::prod(Type::Sess(s.clone()), Type::Sess(dual_of(s)?))),
        Const::Send => {
            let s = session_of(ctx, args[1])?;
            match s {
                SessionType::Send(t, k) => {
                    check(ctx, args[0], Some(&t))?;
                    Ok(Type::Sess(*k))
                }
                other => Err(err(ErrorCode::TypeMismatch, format!("`send` on a channel of type `{other}`"))),
            }
        }
        Const::Receive => match session_of(ctx, args[0])? {
            SessionType::Recv(t, k) => Ok(Type::prod(*t, Type::Sess(*k))),
            other => Err(err(ErrorCode::TypeMismatch, format!("`receive` on a channel of type `{other}`"))),
        },
        Const::Select(l) => match session_of(ctx, args[0])? {
            SessionType::Select(bs) => match bs.get(l) {
                Some(s) => Ok(Type::Sess(s.clone())),
                None => Err(err(ErrorCode::UnknownLabel, format!("label `{l}` is not offered"))),
            },
            other => Err(err(ErrorCode::TypeMismatch, format!("`select {l}` on a channel of type `{other}`"))),
        },
        Const::Close | Const::Wait => {
            let want = if *c == Const::Close { SessionType::Close } else { SessionType::Wait };
            let s = session_of(ctx, args[0])?;
            if s != want {
                let name = if *c == Const::Close { "close" } else { "wait" };
                return Err(err(ErrorCode::TypeMismatch, format!("`{name}` on a channel of type `{s}`")));
            }
            Ok(Type::Unit)
        }
        Const::Fork => {
            check(ctx, args[0], Some(&Type::arrow(Type::Unit, Type::Unit)))?;
            Ok(Type::Unit)
        }
        Const::ForkWith => {
            let thunk = |s: SessionType| Type::arrow(Type::Unit, Type::arrow(Type::Sess(s), Type::Unit));
            if let Some(Type::Sess(e)) = expected {
                check(ctx, args[0], Some(&thunk(dual_of(e)?)))?;
                return Ok(Type::Sess(e.clone()));
            }
            let t = match args[0] {
                Term::Lam(b, body) if b.ann.is_none() => {
                    let pushed = bind(ctx, b, 0, CtxType::plain(Type::Unit))?;
                    let r = check(ctx, body, None)?;
                    unbind(ctx, b, pushed)?;
                    Type::arrow(Type::Unit, r)
                }
                other => check(ctx, other, None)?,
            };
            match t {
                Type::Arrow(u, r) if *u == Type::Unit => match *r {
                    Type::Arrow(s, unit) if *unit == Type::Unit => match *s {
                        Type::Sess(s) => Ok(Type::Sess(dual_of(&s)?)),
                        other => Err(err(ErrorCode::TypeMismatch, format!("`forkWith` thunk takes `{other}`, not a channel"))),
                    },
                    other => Err(err(ErrorCode::TypeMismatch, format!("`forkWith` thunk returns `{other}`"))),
                },
                other => Err(err(ErrorCode::TypeMismatch, format!("`forkWith` expects a thunk, found `{other}`"))),
            }
        }
    }
}

fn matching(ctx: &mut TypingCtx, scrut: &Term, arms: &[Arm], expected: Option<&Type>) -> TResult<Type> {
    let st = check(ctx, scrut, None)?;
    let arm_span = |a: &Arm| match &a.pat {
        Pattern::Label(_, b) | Pattern::Bind(b) => Some(b.span),
        Pattern::Int(_) => span_of(&a.body),
    };
    // the binder type of each arm
    let mut binder_tys: Vec<Option<Type>> = Vec::new();
    match &st {
        Type::Sess(s) => {
            let SessionType::Branch(bs) = unfold(s) else {
                return Err(err(ErrorCode::TypeMismatch, format!("cannot match on a channel of type `{s}`")));
            };
            let mut seen = BTreeMap::new();
            for a in arms {
                let Pattern::Label(l, b) = &a.pat else {
                    return Err(err(ErrorCode::TypeMismatch, "channel match arms must be label patterns")
                        .at(arm_span(a).unwrap_or_default()));
                };
                let Some(k) = bs.get(l) else {
                    return Err(err(ErrorCode::UnknownLabel, format!("label `{l}` is not offered")).at(b.span));
                };
                if seen.insert(l.clone(), ()).is_some() {
                    return Err(err(ErrorCode::TypeMismatch, format!("duplicate branch `{l}`")).at(b.span));
                }
                binder_tys.push(Some(Type::Sess(k.clone())));
            }
            if let Some(l) = bs.keys().find(|l| !seen.contains_key(*l)) {
                return Err(err(ErrorCode::UnknownLabel, format!("branch `{l}` is not handled")));
            }
        }
        Type::Int => {
            for a in arms {
                match &a.pat {
                    Pattern::Int(_) => binder_tys.push(None),
                    Pattern::Bind(_) => binder_tys.push(Some(Type::Int)),
                    Pattern::Label(l, b) => {
                        return Err(err(ErrorCode::TypeMismatch, format!("label pattern `{l}` on an integer")).at(b.span))
                    }
                }
            }
            if !arms.iter().any(|a| matches!(a.pat, Pattern::Bind(_))) {
                return Err(err(ErrorCode::TypeMismatch, "integer match needs a variable arm"));
            }
        }
        other => return Err(err(ErrorCode::TypeMismatch, format!("cannot match on `{other}`"))),
    }
    let start = ctx.clone();
    let mut result: Option<(Type, TypingCtx)> = None;
    for (a, bt) in arms.iter().zip(binder_tys) {
        let mut c = start.clone();
        let (b, pushed) = match (&a.pat, bt) {
            (Pattern::Label(_, b) | Pattern::Bind(b), Some(t)) => (Some(b), bind(&mut c, b, 0, CtxType::plain(t))?),
            _ => (None, false),
        };
        let want = expected.or(result.as_ref().map(|r| &r.0));
        let t = check(&mut c, &a.body, want)?;
        if let Some(b) = b {
            unbind(&mut c, b, pushed)?;
        }
        match &result {
            None => result = Some((t, c)),
            Some((_, first)) => {
                if let Some(i) = (0..first.len()).find(|&i| first.get(i).used != c.get(i).used) {
                    return Err(err(
                        ErrorCode::UnusedLinear,
                        format!("branches disagree on the use of `{}`", first.get(i).name),
                    )
                    .at(arm_span(a).unwrap_or_default()));
                }
            }
        }
    }
    let (t, c) = result.ok_or_else(|| err(ErrorCode::TypeMismatch, "match with no arms"))?;
    *ctx = c;
    Ok(t)
}

/// A program whose declarations all typecheck, with aliases eliminated.
#[derive(Debug, Clone)]
pub struct CheckedProgram {
    pub program: Program,
    pub aliases: Aliases,
    /// Resolved signature and body of each definition.
    pub defs: BTreeMap<String, (Type, Term)>,
}

impl CheckedProgram {
    /// Unrestricted entries for every top-level name.
    pub fn globals(&self) -> TypingCtx {
        let mut ctx = TypingCtx::new();
        for (name, (ty, _)) in &self.defs {
            ctx.push(name, 0, CtxType::plain(ty.clone()), Mult::Unrestricted);
        }
        ctx
    }

    pub fn bodies(&self) -> BTreeMap<String, Term> {
        self.defs.iter().map(|(n, (_, b))| (n.clone(), b.clone())).collect()
    }

    /// Resolves aliases in a term typed at the REPL or on the command line.
    pub fn resolve_term(&self, m: &Term) -> TResult<Term> {
        resolve_term(&self.aliases, m)
    }
}

fn resolve_term(aliases: &Aliases, m: &Term) -> TResult<Term> {
    m.try_map_types(&mut |t: &Type| aliases.resolve(t))
}

pub fn check_program(p: &Program) -> Result<CheckedProgram, Vec<TypeError>> {
    let mut errors = Vec::new();
    let mut aliases = Aliases::new();
    for d in &p.type_decls {
        aliases.insert(d.name.clone(), d.ty.clone());
    }
    for d in &p.type_decls {
        if let Err(e) = aliases.lookup(&d.name) {
            errors.push(e.at(d.span));
        }
    }
    let mut sigs = BTreeMap::new();
    for d in &p.term_decls {
        match aliases.resolve(&d.ty) {
            Ok(t) => {
                sigs.insert(d.name.clone(), t);
            }
            Err(e) => errors.push(e.at(d.span)),
        }
    }
    let mut globals = TypingCtx::new();
    for (name, ty) in &sigs {
        globals.push(name, 0, CtxType::plain(ty.clone()), Mult::Unrestricted);
    }
    let mut defs = BTreeMap::new();
    for d in &p.term_decls {
        let Some(ty) = sigs.get(&d.name) else { continue };
        let body = match resolve_term(&aliases, &d.body) {
            Ok(b) => b,
            Err(e) => {
                errors.push(locate(e, &d.body).at(d.span));
                continue;
            }
        };
        match check_term(&globals, &body, Some(ty)) {
            Ok(_) => {
                defs.insert(d.name.clone(), (ty.clone(), body));
            }
            Err(e) => errors.push(e.at(d.span)),
        }
    }
    if errors.is_empty() {
        Ok(CheckedProgram {
            program: p.clone(),
            aliases,
            defs,
        })
    } else {
        errors.sort_by_key(|e| e.span.map(|s| (s.line, s.col)).unwrap_or((0, 0)));
        Err(errors)
    }
}
