use super::{CtxType, Mult};

/// One binding `x :ⁿ τ` with its multiplicity and consumption state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Entry {
    pub name: String,
    pub level: u32,
    pub ty: CtxType,
    pub mult: Mult,
    pub used: bool,
    /// Set while the entry sits below the level of the code being checked.
    pub hidden: bool,
}

impl Entry {
    /// Linear and not yet consumed. Unrestricted entries are never live:
    /// they take part in neither the consumption check nor the level
    /// predicates.
    pub fn is_live(&self) -> bool {
        self.mult == Mult::Linear && !self.used
    }
}

/// An ordered typing context. Later entries shadow earlier ones with the
/// same name; a shadowed entry is unreachable until the shadowing one is
/// popped.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TypingCtx {
    entries: Vec<Entry>,
}

impl TypingCtx {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, name: &str, level: u32, ty: CtxType, mult: Mult) -> Self {
        self.push(name, level, ty, mult);
        self
    }

    pub fn push(&mut self, name: &str, level: u32, ty: CtxType, mult: Mult) {
        self.entries.push(Entry {
            name: name.to_string(),
            level,
            ty,
            mult,
            used: false,
            hidden: false,
        });
    }

    pub fn pop(&mut self) -> Option<Entry> {
        self.entries.pop()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[Entry] {
        &self.entries
    }

    pub fn lookup(&self, name: &str) -> Option<usize> {
        self.entries.iter().rposition(|e| e.name == name)
    }

    pub fn get(&self, idx: usize) -> &Entry {
        &self.entries[idx]
    }

    pub fn mark_used(&mut self, idx: usize) {
        self.entries[idx].used = true;
    }

    pub fn live(&self) -> impl Iterator<Item = &Entry> {
        self.entries.iter().filter(|e| e.is_live())
    }

    /// Hides every live entry whose level is below `n`. Returns the previous
    /// hidden flags for [`TypingCtx::restore_hidden`].
    pub fn hide_below(&mut self, n: u32) -> Vec<bool> {
        let saved = self.entries.iter().map(|e| e.hidden).collect();
        for e in &mut self.entries {
            if e.is_live() && e.level < n {
                e.hidden = true;
            }
        }
        saved
    }

    /// Restores flags saved by `hide_below`. Entries pushed since then are
    /// unaffected.
    pub fn restore_hidden(&mut self, saved: Vec<bool>) {
        for (e, h) in self.entries.iter_mut().zip(saved) {
            e.hidden = h;
        }
    }

    /// Usage flags, for comparing the leftovers of match branches.
    pub fn usage(&self) -> Vec<bool> {
        self.entries.iter().map(|e| e.used).collect()
    }
}

/// `Γ^{<n}`: `max(0, levels) < n` over the live entries.
pub fn ctx_below(ctx: &TypingCtx, n: u32) -> bool {
    ctx.live().map(|e| e.level).fold(0, u32::max) < n
}

/// `Γ^{≥n}`: no live entries, or every live entry has level at least `n`.
pub fn ctx_at_least(ctx: &TypingCtx, n: u32) -> bool {
    ctx.live().all(|e| e.level >= n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::Type;
    use proptest::prelude::*;

    fn at(level: u32) -> TypingCtx {
        TypingCtx::new().with("x", level, CtxType::plain(Type::Int), Mult::Linear)
    }

    #[test]
    fn below_examples() {
        assert!(!ctx_below(&TypingCtx::new(), 0));
        assert!(ctx_below(&TypingCtx::new(), 1));
        assert!(ctx_below(&at(1), 2));
        assert!(!ctx_below(&at(2), 2));
    }

    #[test]
    fn at_least_examples() {
        assert!(ctx_at_least(&TypingCtx::new(), 7));
        let z = TypingCtx::new().with("z", 3, CtxType::plain(Type::Int), Mult::Linear);
        assert!(ctx_at_least(&z, 2));
        assert!(!ctx_at_least(&at(0), 1));
    }

    #[test]
    fn consumed_entries_are_ignored() {
        let mut ctx = at(0);
        ctx.mark_used(0);
        assert!(ctx_at_least(&ctx, 5));
    }

    #[test]
    fn hiding_round_trips() {
        let mut ctx = at(0).with("y", 2, CtxType::plain(Type::Unit), Mult::Linear);
        let saved = ctx.hide_below(1);
        assert!(ctx.get(0).hidden && !ctx.get(1).hidden);
        ctx.restore_hidden(saved);
        assert!(!ctx.get(0).hidden);
    }

    proptest! {
        #[test]
        fn below_and_at_least_only_for_empty(levels in prop::collection::vec(0u32..5, 0..5), n in 0u32..6) {
            let mut ctx = TypingCtx::new();
            for (i, l) in levels.iter().enumerate() {
                ctx.push(&format!("x{i}"), *l, CtxType::plain(Type::Unit), Mult::Linear);
            }
            if ctx_below(&ctx, n) && ctx_at_least(&ctx, n) {
                prop_assert!(ctx.live().count() == 0 && n >= 1);
            }
        }
    }
}
