//! Call-by-value small-step evaluation by textual substitution.
//!
//! Values are terms satisfying [`Term::is_value`]. Session operations are
//! not reduced here: [`Evaluator::step`] hands them to the caller together
//! with the evaluation context to plug the result into.

use std::collections::BTreeMap;
use std::fmt;

use crate::subst::{Subst, SubstError};
use crate::syntax::{pretty, Arm, ArithOp, Binder, Const, CtxValue, EndpointId, Pattern, Term};
use crate::types::SessionType;

/// A runtime value: a term in value form.
pub type Value = Term;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Redex {
    Beta,
    LetUnit,
    LetBox,
    Arith,
    LetPair,
    Match,
    /// Replaces a top-level name by its definition.
    Unfold,
}

impl Redex {
    pub fn name(self) -> &'static str {
        match self {
            Redex::Beta => "BETA",
            Redex::LetUnit => "LET-UNIT",
            Redex::LetBox => "LET-BOX",
            Redex::Arith => "ARITH",
            Redex::LetPair => "LET-PAIR",
            Redex::Match => "MATCH",
            Redex::Unfold => "UNFOLD",
        }
    }
}

impl fmt::Display for Redex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One layer of an evaluation context; the hole is the missing subterm.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Frame {
    AppFn(Term),
    AppArg(Term),
    LetUnit(Term),
    LetBox(Binder, Term),
    ArithL(ArithOp, Term),
    ArithR(ArithOp, Term),
    PairL(Term),
    PairR(Term),
    LetPair(Binder, Binder, Term),
    Match(Vec<Arm>),
}

/// A one-hole context, outermost frame first.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EvalCtx {
    pub frames: Vec<Frame>,
}

impl EvalCtx {
    pub fn plug(&self, t: Term) -> Term {
        self.frames.iter().rev().fold(t, |hole, f| {
            let h = Box::new(hole);
            match f.clone() {
                Frame::AppFn(a) => Term::App(h, Box::new(a)),
                Frame::AppArg(v) => Term::App(Box::new(v), h),
                Frame::LetUnit(n) => Term::LetUnit(h, Box::new(n)),
                Frame::LetBox(binder, body) => Term::LetBox {
                    binder,
                    bound: h,
                    body: Box::new(body),
                },
                Frame::ArithL(op, b) => Term::Arith(op, h, Box::new(b)),
                Frame::ArithR(op, a) => Term::Arith(op, Box::new(a), h),
                Frame::PairL(b) => Term::Pair(h, Box::new(b)),
                Frame::PairR(a) => Term::Pair(Box::new(a), h),
                Frame::LetPair(fst, snd, body) => Term::LetPair {
                    fst,
                    snd,
                    scrut: h,
                    body: Box::new(body),
                },
                Frame::Match(arms) => Term::Match { scrut: h, arms },
            }
        })
    }
}

/// Splits a non-value into its evaluation context and the subterm in focus,
/// whose evaluation positions all hold values.
pub fn decompose(mut t: Term) -> (EvalCtx, Term) {
    let mut frames = Vec::new();
    loop {
        t = match t {
            Term::App(f, a) if !f.is_value() => {
                frames.push(Frame::AppFn(*a));
                *f
            }
            Term::App(f, a) if !a.is_value() => {
                frames.push(Frame::AppArg(*f));
                *a
            }
            Term::LetUnit(m, n) if !m.is_value() => {
                frames.push(Frame::LetUnit(*n));
                *m
            }
            Term::LetBox { binder, bound, body } if !bound.is_value() => {
                frames.push(Frame::LetBox(binder, *body));
                *bound
            }
            Term::Arith(op, a, b) if !a.is_value() => {
                frames.push(Frame::ArithL(op, *b));
                *a
            }
            Term::Arith(op, a, b) if !b.is_value() => {
                frames.push(Frame::ArithR(op, *a));
                *b
            }
            Term::Pair(a, b) if !a.is_value() => {
                frames.push(Frame::PairL(*b));
                *a
            }
            Term::Pair(a, b) if !b.is_value() => {
                frames.push(Frame::PairR(*a));
                *b
            }
            Term::LetPair { fst, snd, scrut, body } if !scrut.is_value() => {
                frames.push(Frame::LetPair(fst, snd, *body));
                *scrut
            }
            Term::Match { scrut, arms } if !scrut.is_value() => {
                frames.push(Frame::Match(arms));
                *scrut
            }
            other => return (EvalCtx { frames }, other),
        };
    }
}

/// A session or process operation surfaced by evaluation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CommRequest {
    Send { value: Value, chan: EndpointId },
    Receive { chan: EndpointId },
    Select { label: String, chan: EndpointId },
    /// A `match` on a channel: waits for the peer's selection.
    Offer { chan: EndpointId, arms: Vec<Arm> },
    Close { chan: EndpointId },
    Wait { chan: EndpointId },
    Fork { thunk: Value },
    ForkWith { thunk: Value },
    New { session: SessionType },
}

impl CommRequest {
    /// The endpoint this request operates on, if any.
    pub fn endpoint(&self) -> Option<EndpointId> {
        match self {
            CommRequest::Send { chan, .. }
            | CommRequest::Receive { chan }
            | CommRequest::Select { chan, .. }
            | CommRequest::Offer { chan, .. }
            | CommRequest::Close { chan }
            | CommRequest::Wait { chan } => Some(*chan),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Step {
    IsValue,
    Stepped(Term, Redex),
    NeedsComm(EvalCtx, CommRequest),
    Stuck(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Outcome {
    Value(Value),
    /// The step budget ran out; carries the last term.
    Timeout(Term),
    CommRequired(CommRequest),
    Stuck(String),
}

/// An evaluation session: top-level definitions plus the substitution
/// state (fresh names, instrumentation).
#[derive(Debug, Default)]
pub struct Evaluator {
    globals: BTreeMap<String, Term>,
    subst: Subst,
    steps: u64,
}

impl Evaluator {
    pub fn new(globals: BTreeMap<String, Term>) -> Self {
        Self {
            globals,
            subst: Subst::new(),
            steps: 0,
        }
    }

    /// Total reduction steps taken in this session.
    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn subst_session(&mut self) -> &mut Subst {
        &mut self.subst
    }

    /// Substitutes `v` for `b` in `body`; wildcards discard.
    pub fn bind_value(&mut self, b: &Binder, v: Value, body: &Term) -> Result<Term, SubstError> {
        if b.is_wildcard() {
            return Ok(body.clone());
        }
        self.subst.subst(&CtxValue::closed(v), &b.name, body, b.mult)
    }

    pub fn step(&mut self, t: Term) -> Step {
        if t.is_value() {
            return Step::IsValue;
        }
        let (ctx, focus) = decompose(t);
        match self.reduce(focus) {
            Ok(Reduced::Term(r, name)) => {
                self.steps += 1;
                Step::Stepped(ctx.plug(r), name)
            }
            Ok(Reduced::Comm(req)) => Step::NeedsComm(ctx, req),
            Err(msg) => Step::Stuck(msg),
        }
    }

    fn reduce(&mut self, focus: Term) -> Result<Reduced, String> {
        let subst_err = |e: SubstError| e.to_string();
        match focus {
            Term::App(f, a) => {
                if let Term::Lam(b, body) = *f {
                    let r = self.bind_value(&b, *a, &body).map_err(subst_err)?;
                    return Ok(Reduced::Term(r, Redex::Beta));
                }
                let whole = Term::App(f, a);
                let Some((c, args)) = whole.const_spine() else {
                    return Err(format!("cannot apply a non-function: {}", pretty(&whole)));
                };
                if args.len() != c.arity() {
                    return Err(format!("constant applied to too many arguments: {}", pretty(&whole)));
                }
                let chan = |t: &Term| match t {
                    Term::Chan(id) => Ok(*id),
                    other => Err(format!("expected a channel endpoint, found {}", pretty(other))),
                };
                Ok(Reduced::Comm(match c {
                    Const::Send => CommRequest::Send {
                        value: args[0].clone(),
                        chan: chan(args[1])?,
                    },
                    Const::Receive => CommRequest::Receive { chan: chan(args[0])? },
                    Const::Select(l) => CommRequest::Select {
                        label: l.clone(),
                        chan: chan(args[0])?,
                    },
                    Const::Close => CommRequest::Close { chan: chan(args[0])? },
                    Const::Wait => CommRequest::Wait { chan: chan(args[0])? },
                    Const::Fork => CommRequest::Fork { thunk: args[0].clone() },
                    Const::ForkWith => CommRequest::ForkWith { thunk: args[0].clone() },
                    Const::New(_) => unreachable!("new takes no arguments"),
                }))
            }
            Term::Const(Const::New(session)) => Ok(Reduced::Comm(CommRequest::New { session })),
            Term::LetUnit(m, n) => match *m {
                Term::Unit => Ok(Reduced::Term(*n, Redex::LetUnit)),
                other => Err(format!("`let *` on {}", pretty(&other))),
            },
            Term::LetBox { binder, bound, body } => match *bound {
                Term::Box(cv) => {
                    let r = if binder.is_wildcard() {
                        *body
                    } else {
                        self.subst.subst(&cv, &binder.name, &body, binder.mult).map_err(subst_err)?
                    };
                    Ok(Reduced::Term(r, Redex::LetBox))
                }
                other => Err(format!("`let box` on {}", pretty(&other))),
            },
            Term::Arith(op, a, b) => match (*a, *b) {
                (Term::Int(x), Term::Int(y)) => op
                    .apply(x, y)
                    .map(|v| Reduced::Term(Term::Int(v), Redex::Arith))
                    .ok_or_else(|| format!("integer overflow in {x} {} {y}", op.symbol())),
                (x, y) => Err(format!("arithmetic on {} and {}", pretty(&x), pretty(&y))),
            },
            Term::LetPair { fst, snd, scrut, body } => match *scrut {
                Term::Pair(v1, v2) => {
                    let r = self.bind_value(&fst, *v1, &body).map_err(subst_err)?;
                    let r = self.bind_value(&snd, *v2, &r).map_err(subst_err)?;
                    Ok(Reduced::Term(r, Redex::LetPair))
                }
                other => Err(format!("`let (_, _)` on {}", pretty(&other))),
            },
            Term::Match { scrut, arms } => match *scrut {
                Term::Int(i) => {
                    let arm = arms
                        .iter()
                        .find(|a| match a.pat {
                            Pattern::Int(j) => i == j,
                            Pattern::Bind(_) => true,
                            Pattern::Label(..) => false,
                        })
                        .ok_or_else(|| format!("no arm matches {i}"))?;
                    let r = match &arm.pat {
                        Pattern::Bind(b) => self.bind_value(b, Term::Int(i), &arm.body).map_err(subst_err)?,
                        _ => arm.body.clone(),
                    };
                    Ok(Reduced::Term(r, Redex::Match))
                }
                Term::Chan(chan) => Ok(Reduced::Comm(CommRequest::Offer { chan, arms })),
                other => Err(format!("match on {}", pretty(&other))),
            },
            Term::Var { name, args, .. } => match self.globals.get(&name) {
                Some(body) if args.is_empty() => Ok(Reduced::Term(body.clone(), Redex::Unfold)),
                _ => Err(format!("free variable `{name}`")),
            },
            other => Err(format!("no rule applies to {}", pretty(&other))),
        }
    }

    /// Steps until a value, the budget runs out, a session operation
    /// surfaces, or evaluation is stuck. `trace` receives one line per step.
    pub fn eval(&mut self, mut t: Term, max_steps: u64, mut trace: Option<&mut dyn FnMut(String)>) -> Outcome {
        let mut n = 0;
        loop {
            if t.is_value() {
                return Outcome::Value(t);
            }
            if n >= max_steps {
                return Outcome::Timeout(t);
            }
            match self.step(t) {
                Step::IsValue => unreachable!(),
                Step::Stepped(next, redex) => {
                    n += 1;
                    if let Some(tr) = trace.as_deref_mut() {
                        tr(trace_line(self.steps, redex.name(), &next));
                    }
                    t = next;
                }
                Step::NeedsComm(_, req) => return Outcome::CommRequired(req),
                Step::Stuck(msg) => return Outcome::Stuck(msg),
            }
        }
    }
}

enum Reduced {
    Term(Term, Redex),
    Comm(CommRequest),
}

const TRACE_WIDTH: usize = 120;

/// `k: NAME  <term>`, the term cut to 120 characters.
pub fn trace_line(k: u64, name: &str, t: &Term) -> String {
    let p = pretty(t);
    let shown = if p.chars().count() > TRACE_WIDTH {
        let mut s: String = p.chars().take(TRACE_WIDTH - 3).collect();
        s.push_str("...");
        s
    } else {
        p
    };
    format!("{k}: {name}  {shown}")
}

/// Evaluates a closed term with no top-level definitions in scope.
pub fn eval(m: &Term, max_steps: u64) -> Outcome {
    Evaluator::default().eval(m.clone(), max_steps, None)
}
