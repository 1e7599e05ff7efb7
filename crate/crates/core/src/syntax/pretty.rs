use std::fmt::Write;

use super::{Arm, ArithOp, Binder, Const, CtxValue, Pattern, Term};
use crate::types::Mult;

// Precedence levels, loosest first.
const TERM: u8 = 0;
const ADD: u8 = 1;
const MUL: u8 = 2;
const APP: u8 = 3;
const ATOM: u8 = 4;

/// Renders a term in the concrete syntax, on one line.
pub fn pretty(t: &Term) -> String {
    let mut out = String::new();
    write_term(&mut out, t, TERM);
    out
}

fn level(t: &Term) -> u8 {
    match t {
        Term::Lam(..) | Term::LetUnit(..) | Term::LetBox { .. } | Term::LetPair { .. } | Term::Match { .. } => TERM,
        Term::App(f, _) if matches!(f.as_ref(), Term::Lam(b, _) if let_sugar(b)) => TERM,
        Term::Arith(ArithOp::Mul, ..) => MUL,
        Term::Arith(..) => ADD,
        Term::App(..) | Term::Const(Const::Select(_) | Const::New(_)) => APP,
        Term::Int(i) if *i < 0 => APP,
        Term::Unit => ADD,
        _ => ATOM,
    }
}

fn let_sugar(b: &Binder) -> bool {
    b.ann.is_none() && b.mult == Mult::Linear
}

fn write_term(out: &mut String, t: &Term, prec: u8) {
    if level(t) < prec {
        out.push('(');
        write_term(out, t, TERM);
        out.push(')');
        return;
    }
    match t {
        Term::Unit => out.push('*'),
        Term::Int(i) => {
            let _ = write!(out, "{i}");
        }
        Term::Chan(id) => {
            let _ = write!(out, "@{id}");
        }
        Term::Var { name, args, .. } => {
            out.push_str(name);
            if !args.is_empty() {
                out.push('[');
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        out.push_str(", ");
                    }
                    write_ctx_value(out, a);
                }
                out.push(']');
            }
        }
        Term::Const(c) => write_const(out, c),
        Term::Box(cv) => {
            out.push_str("box (");
            write_ctx_value(out, cv);
            out.push(')');
        }
        Term::Pair(a, b) => {
            out.push('(');
            write_term(out, a, TERM);
            out.push_str(", ");
            write_term(out, b, TERM);
            out.push(')');
        }
        Term::App(f, a) => {
            if let Term::Lam(b, body) = f.as_ref() {
                if let_sugar(b) {
                    out.push_str("let ");
                    out.push_str(&b.name);
                    out.push_str(" = ");
                    write_term(out, a, TERM);
                    out.push_str(" in ");
                    write_term(out, body, TERM);
                    return;
                }
            }
            write_term(out, f, APP);
            out.push(' ');
            write_term(out, a, ATOM);
        }
        Term::Arith(op, a, b) => {
            let (l, r) = if *op == ArithOp::Mul { (APP, MUL) } else { (MUL, ADD) };
            write_term(out, a, l);
            let _ = write!(out, " {} ", op.symbol());
            write_term(out, b, r);
        }
        Term::Lam(b, body) => {
            out.push('\\');
            if let Some(ann) = &b.ann {
                let _ = write!(out, "({} : {})", b.name, ann);
            } else {
                if b.mult == Mult::Unrestricted {
                    out.push_str("un ");
                }
                out.push_str(&b.name);
            }
            out.push_str(". ");
            write_term(out, body, TERM);
        }
        Term::LetUnit(m, n) => {
            write_term(out, m, ADD);
            out.push_str("; ");
            write_term(out, n, TERM);
        }
        Term::LetBox { binder, bound, body } => {
            out.push_str("let box ");
            out.push_str(&binder.name);
            if binder.level > 0 {
                let _ = write!(out, " ^{}", binder.level);
            }
            out.push_str(" = ");
            write_term(out, bound, TERM);
            out.push_str(" in ");
            write_term(out, body, TERM);
        }
        Term::LetPair { fst, snd, scrut, body } => {
            let _ = write!(out, "let ({}, {}) = ", fst.name, snd.name);
            write_term(out, scrut, TERM);
            out.push_str(" in ");
            write_term(out, body, TERM);
        }
        Term::Match { scrut, arms } => {
            out.push_str("match ");
            write_term(out, scrut, TERM);
            out.push_str(" with { ");
            for (i, Arm { pat, body }) in arms.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                match pat {
                    Pattern::Label(l, b) => {
                        let _ = write!(out, "{l} {}", b.name);
                    }
                    Pattern::Int(n) => {
                        let _ = write!(out, "{n}");
                    }
                    Pattern::Bind(b) => {
                        if b.mult == Mult::Unrestricted {
                            out.push_str("un ");
                        }
                        out.push_str(&b.name);
                    }
                }
                out.push_str(" -> ");
                write_term(out, body, TERM);
            }
            out.push_str(" }");
        }
    }
}

fn write_const(out: &mut String, c: &Const) {
    match c {
        Const::Send => out.push_str("send"),
        Const::Receive => out.push_str("receive"),
        Const::Select(l) => {
            let _ = write!(out, "select {l}");
        }
        Const::Close => out.push_str("close"),
        Const::Wait => out.push_str("wait"),
        Const::Fork => out.push_str("fork"),
        Const::ForkWith => out.push_str("forkWith"),
        Const::New(s) => {
            let _ = write!(out, "new {s}");
        }
    }
}

fn write_ctx_value(out: &mut String, cv: &CtxValue) {
    for (i, b) in cv.binders.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        out.push_str(&b.name);
        if b.level > 0 {
            let _ = write!(out, "^{}", b.level);
        }
        if let Some(ann) = &b.ann {
            let _ = write!(out, " : {ann}");
        }
    }
    if !cv.binders.is_empty() {
        out.push_str(". ");
    }
    write_term(out, &cv.body, TERM);
}
