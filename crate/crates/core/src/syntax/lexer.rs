use super::ParseError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TokenKind {
    /// Identifier starting with a lowercase letter or `_`.
    Ident(String),
    /// Identifier starting with an uppercase letter: labels, type names.
    UIdent(String),
    Int(i64),
    Backslash,
    Dot,
    LParen,
    RParen,
    LBrack,
    RBrack,
    LBrace,
    RBrace,
    Comma,
    Semi,
    Colon,
    Eq,
    Arrow,
    Lolli,
    Turnstile,
    Caret,
    Star,
    Plus,
    Minus,
    Bang,
    Question,
    SelectBrace,
    BranchBrace,
    Underscore,
    Eof,
}

impl TokenKind {
    pub fn describe(&self) -> String {
        match self {
            TokenKind::Ident(s) | TokenKind::UIdent(s) => format!("`{s}`"),
            TokenKind::Int(i) => format!("`{i}`"),
            TokenKind::Eof => "end of input".to_string(),
            other => format!("`{}`", other.symbol()),
        }
    }

    pub fn symbol(&self) -> &'static str {
        match self {
            TokenKind::Backslash => "\\",
            TokenKind::Dot => ".",
            TokenKind::LParen => "(",
            TokenKind::RParen => ")",
            TokenKind::LBrack => "[",
            TokenKind::RBrack => "]",
            TokenKind::LBrace => "{",
            TokenKind::RBrace => "}",
            TokenKind::Comma => ",",
            TokenKind::Semi => ";",
            TokenKind::Colon => ":",
            TokenKind::Eq => "=",
            TokenKind::Arrow => "->",
            TokenKind::Lolli => "-o",
            TokenKind::Turnstile => "|-",
            TokenKind::Caret => "^",
            TokenKind::Star => "*",
            TokenKind::Plus => "+",
            TokenKind::Minus => "-",
            TokenKind::Bang => "!",
            TokenKind::Question => "?",
            TokenKind::SelectBrace => "+{",
            TokenKind::BranchBrace => "&{",
            TokenKind::Underscore => "_",
            TokenKind::Ident(_) => "identifier",
            TokenKind::UIdent(_) => "name",
            TokenKind::Int(_) => "integer",
            TokenKind::Eof => "end of input",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    pub offset: usize,
    pub line: u32,
    pub col: u32,
}

fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '\'' || c == '$'
}

pub fn lex(src: &str) -> Result<Vec<Token>, ParseError> {
    let chars: Vec<(usize, char)> = src.char_indices().collect();
    let mut tokens = Vec::new();
    let (mut line, mut col) = (1u32, 1u32);
    let mut i = 0;
    let peek = |j: usize| chars.get(j).map(|&(_, c)| c);
    while i < chars.len() {
        let (offset, c) = chars[i];
        let start = (offset, line, col);
        let advance = |n: usize, i: &mut usize, col: &mut u32| {
            *i += n;
            *col += n as u32;
        };
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            advance(1, &mut i, &mut col);
            continue;
        }
        if c == '-' && peek(i + 1) == Some('-') {
            while i < chars.len() && chars[i].1 != '\n' {
                advance(1, &mut i, &mut col);
            }
            continue;
        }
        let kind = if c.is_ascii_alphabetic() || c == '_' {
            let mut j = i;
            while j < chars.len() && is_ident_char(chars[j].1) {
                j += 1;
            }
            let end = chars.get(j).map_or(src.len(), |&(o, _)| o);
            let word = &src[offset..end];
            let n = j - i;
            advance(n, &mut i, &mut col);
            let kind = if word == "_" {
                TokenKind::Underscore
            } else if c.is_ascii_uppercase() {
                TokenKind::UIdent(word.to_string())
            } else {
                TokenKind::Ident(word.to_string())
            };
            push(&mut tokens, kind, start);
            continue;
        } else if c.is_ascii_digit() {
            let mut j = i;
            while j < chars.len() && chars[j].1.is_ascii_digit() {
                j += 1;
            }
            let end = chars.get(j).map_or(src.len(), |&(o, _)| o);
            let value: i64 = src[offset..end].parse().map_err(|_| ParseError {
                offset,
                line,
                col,
                expected: vec!["integer literal within 64 bits".to_string()],
                found: src[offset..end].to_string(),
            })?;
            advance(j - i, &mut i, &mut col);
            push(&mut tokens, TokenKind::Int(value), start);
            continue;
        } else {
            let next = peek(i + 1);
            let (kind, n) = match (c, next) {
                ('-', Some('>')) => (TokenKind::Arrow, 2),
                ('-', Some('o')) if !peek(i + 2).is_some_and(is_ident_char) => (TokenKind::Lolli, 2),
                ('|', Some('-')) => (TokenKind::Turnstile, 2),
                ('+', Some('{')) => (TokenKind::SelectBrace, 2),
                ('&', Some('{')) => (TokenKind::BranchBrace, 2),
                ('\\', _) => (TokenKind::Backslash, 1),
                ('.', _) => (TokenKind::Dot, 1),
                ('(', _) => (TokenKind::LParen, 1),
                (')', _) => (TokenKind::RParen, 1),
                ('[', _) => (TokenKind::LBrack, 1),
                (']', _) => (TokenKind::RBrack, 1),
                ('{', _) => (TokenKind::LBrace, 1),
                ('}', _) => (TokenKind::RBrace, 1),
                (',', _) => (TokenKind::Comma, 1),
                (';', _) => (TokenKind::Semi, 1),
                (':', _) => (TokenKind::Colon, 1),
                ('=', _) => (TokenKind::Eq, 1),
                ('^', _) => (TokenKind::Caret, 1),
                ('*', _) => (TokenKind::Star, 1),
                ('+', _) => (TokenKind::Plus, 1),
                ('-', _) => (TokenKind::Minus, 1),
                ('!', _) => (TokenKind::Bang, 1),
                ('?', _) => (TokenKind::Question, 1),
                _ => {
                    return Err(ParseError {
                        offset,
                        line,
                        col,
                        expected: vec!["a token".to_string()],
                        found: format!("`{c}`"),
                    })
                }
            };
            advance(n, &mut i, &mut col);
            kind
        };
        push(&mut tokens, kind, start);
    }
    tokens.push(Token {
        kind: TokenKind::Eof,
        offset: src.len(),
        line,
        col,
    });
    Ok(tokens)
}

fn push(tokens: &mut Vec<Token>, kind: TokenKind, (offset, line, col): (usize, u32, u32)) {
    tokens.push(Token {
        kind,
        offset,
        line,
        col,
    });
}
