//! Metatheory checked by enumeration: the leftover checker against a
//! context-splitting declarative checker, preservation and progress of the
//! evaluator, and the substitution principle.

mod common;

use common::{
    agreement, algo_accepts, decl_check_closed, enumerate, mutants, preservation_progress, substitution_instances,
    MAX_SIZE,
};
use lcm::subst::Subst;

#[test]
fn enumeration_is_accepted_by_both_checkers() {
    let terms = enumerate(MAX_SIZE);
    assert!(terms.len() > 100_000, "only {} terms", terms.len());
    for (ty, t) in &terms {
        assert!(algo_accepts(t, ty), "leftover checker rejects {} : {ty}", lcm::pretty(t));
        assert!(decl_check_closed(t, ty), "declarative checker rejects {} : {ty}", lcm::pretty(t));
    }
}

#[test]
fn checkers_agree_on_mutants() {
    let (mut accepted, mut rejected) = (0usize, 0usize);
    for (i, (ty, t)) in enumerate(MAX_SIZE).iter().enumerate() {
        if t.size() > common::MUTATE_ALL_UP_TO && i % common::SAMPLE_STRIDE != 0 {
            continue;
        }
        for m in mutants(t) {
            if agreement(&m, ty).unwrap_or_else(|e| panic!("{e}")) {
                accepted += 1;
            } else {
                rejected += 1;
            }
        }
    }
    assert!(accepted > 1000 && rejected > 10_000, "accepted {accepted}, rejected {rejected}");
    println!("mutants: {accepted} accepted, {rejected} rejected by both checkers");
}

#[test]
fn preservation_and_progress() {
    let mut steps = 0;
    for (ty, t) in enumerate(MAX_SIZE) {
        steps += preservation_progress(&ty, &t).unwrap_or_else(|e| panic!("{e}"));
    }
    println!("preservation: {steps} steps re-checked");
}

#[test]
fn substitution_principle() {
    let mut s = Subst::new();
    let (mut instances, mut open) = (0, 0);
    for (_, t) in enumerate(MAX_SIZE) {
        let (a, o) = substitution_instances(&t, &mut s).unwrap_or_else(|e| panic!("{e}"));
        instances += a;
        open += o;
    }
    assert!(instances >= 500 && open >= 100, "{instances} instances, {open} open");
    println!("substitution principle: {instances} instances ({open} under binders)");
}
