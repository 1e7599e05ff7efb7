use std::fmt;

use crate::syntax::Span;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ErrorCode {
    UnusedLinear,
    ReusedLinear,
    LevelTooLow,
    LevelNotBelow,
    ArityMismatch,
    TypeMismatch,
    UnknownVariable,
    UnknownLabel,
    NonContractive,
    PayloadRecursion,
    DualityUndefined,
}

impl ErrorCode {
    pub fn as_str(self) -> &'static str {
        match self {
            ErrorCode::UnusedLinear => "UnusedLinear",
            ErrorCode::ReusedLinear => "ReusedLinear",
            ErrorCode::LevelTooLow => "LevelTooLow",
            ErrorCode::LevelNotBelow => "LevelNotBelow",
            ErrorCode::ArityMismatch => "ArityMismatch",
            ErrorCode::TypeMismatch => "TypeMismatch",
            ErrorCode::UnknownVariable => "UnknownVariable",
            ErrorCode::UnknownLabel => "UnknownLabel",
            ErrorCode::NonContractive => "NonContractive",
            ErrorCode::PayloadRecursion => "PayloadRecursion",
            ErrorCode::DualityUndefined => "DualityUndefined",
        }
    }

    pub fn parse(s: &str) -> Option<ErrorCode> {
        use ErrorCode::*;
        [
            UnusedLinear,
            ReusedLinear,
            LevelTooLow,
            LevelNotBelow,
            ArityMismatch,
            TypeMismatch,
            UnknownVariable,
            UnknownLabel,
            NonContractive,
            PayloadRecursion,
            DualityUndefined,
        ]
        .into_iter()
        .find(|c| c.as_str() == s)
    }
}

impl fmt::Display for ErrorCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub struct TypeError {
    pub code: ErrorCode,
    pub span: Option<Span>,
    pub message: String,
}

impl TypeError {
    pub fn new(code: ErrorCode, message: impl Into<String>) -> Self {
        Self {
            code,
            span: None,
            message: message.into(),
        }
    }

    pub fn at(mut self, span: Span) -> Self {
        if self.span.is_none() && !span.is_unknown() {
            self.span = Some(span);
        }
        self
    }
}

/// `CODE at line:col — message`
impl fmt::Display for TypeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let span = self.span.unwrap_or_default();
        write!(f, "{} at {}:{} — {}", self.code, span.line, span.col, self.message)
    }
}

/// Sorts by position (stable) and renders one error per line.
pub fn render_errors(errors: &[TypeError]) -> String {
    let mut sorted: Vec<&TypeError> = errors.iter().collect();
    sorted.sort_by_key(|e| e.span.map(|s| (s.line, s.col)).unwrap_or((0, 0)));
    sorted.iter().map(|e| format!("{e}\n")).collect()
}
