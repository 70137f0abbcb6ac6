//! Tokenizer for the model language.

use super::{Diagnostic, Severity, SourceSpan};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TokenKind {
    Ident(String),
    Int(i64),
    Kw(Keyword),
    LBracket,
    RBracket,
    LBrace,
    RBrace,
    Colon,
    Comma,
    Arrow,
    Eof,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Keyword {
    Array,
    Task,
    Repeat,
    Body,
    In,
    Out,
    From,
    Tiler,
    Origin,
    Paving,
    Fitting,
    Pattern,
    Host,
    Device,
    Memory,
    Kind,
    MaxWg,
    MaxDims,
    Allocate,
    On,
    Connect,
}

impl Keyword {
    pub fn as_str(self) -> &'static str {
        match self {
            Keyword::Array => "array",
            Keyword::Task => "task",
            Keyword::Repeat => "repeat",
            Keyword::Body => "body",
            Keyword::In => "in",
            Keyword::Out => "out",
            Keyword::From => "from",
            Keyword::Tiler => "tiler",
            Keyword::Origin => "origin",
            Keyword::Paving => "paving",
            Keyword::Fitting => "fitting",
            Keyword::Pattern => "pattern",
            Keyword::Host => "host",
            Keyword::Device => "device",
            Keyword::Memory => "memory",
            Keyword::Kind => "kind",
            Keyword::MaxWg => "maxwg",
            Keyword::MaxDims => "maxdims",
            Keyword::Allocate => "allocate",
            Keyword::On => "on",
            Keyword::Connect => "connect",
        }
    }

    fn from_str(s: &str) -> Option<Keyword> {
        Some(match s {
            "array" => Keyword::Array,
            "task" => Keyword::Task,
            "repeat" => Keyword::Repeat,
            "body" => Keyword::Body,
            "in" => Keyword::In,
            "out" => Keyword::Out,
            "from" => Keyword::From,
            "tiler" => Keyword::Tiler,
            "origin" => Keyword::Origin,
            "paving" => Keyword::Paving,
            "fitting" => Keyword::Fitting,
            "pattern" => Keyword::Pattern,
            "host" => Keyword::Host,
            "device" => Keyword::Device,
            "memory" => Keyword::Memory,
            "kind" => Keyword::Kind,
            "maxwg" => Keyword::MaxWg,
            "maxdims" => Keyword::MaxDims,
            "allocate" => Keyword::Allocate,
            "on" => Keyword::On,
            "connect" => Keyword::Connect,
            _ => None?,
        })
    }
}

impl std::fmt::Display for TokenKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            TokenKind::Ident(name) => write!(f, "identifier `{name}`"),
            TokenKind::Int(v) => write!(f, "integer `{v}`"),
            TokenKind::Kw(kw) => write!(f, "`{}`", kw.as_str()),
            TokenKind::LBracket => f.write_str("`[`"),
            TokenKind::RBracket => f.write_str("`]`"),
            TokenKind::LBrace => f.write_str("`{`"),
            TokenKind::RBrace => f.write_str("`}`"),
            TokenKind::Colon => f.write_str("`:`"),
            TokenKind::Comma => f.write_str("`,`"),
            TokenKind::Arrow => f.write_str("`->`"),
            TokenKind::Eof => f.write_str("end of file"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Token {
    pub kind: TokenKind,
    pub span: SourceSpan,
}

/// Tokenize `source`. Lexical errors become diagnostics and the offending
/// character is skipped, so the token stream always ends with `Eof`.
pub fn lex(file: &str, source: &str) -> (Vec<Token>, Vec<Diagnostic>) {
    let mut tokens = Vec::new();
    let mut diags = Vec::new();
    let mut line: u32 = 1;
    let mut col: u32 = 1;
    let mut chars = source.char_indices().peekable();

    let span = |line: u32, col: u32, len: u32| SourceSpan {
        file: file.to_string(),
        line,
        col,
        len,
    };

    while let Some(&(start, c)) = chars.peek() {
        match c {
            '\n' => {
                chars.next();
                line += 1;
                col = 1;
            }
            c if c.is_whitespace() => {
                chars.next();
                col += 1;
            }
            '/' => {
                // only `//` comments exist; a lone slash is an error
                let tok_line = line;
                let tok_col = col;
                chars.next();
                col += 1;
                if matches!(chars.peek(), Some(&(_, '/'))) {
                    while let Some(&(_, c)) = chars.peek() {
                        if c == '\n' {
                            break;
                        }
                        chars.next();
                        col += 1;
                    }
                } else {
                    diags.push(Diagnostic {
                        severity: Severity::Error,
                        span: span(tok_line, tok_col, 1),
                        code: "E0001",
                        message: "unexpected character `/` (comments start with `//`)".to_string(),
                    });
                }
            }
            '[' | ']' | '{' | '}' | ':' | ',' => {
                let kind = match c {
                    '[' => TokenKind::LBracket,
                    ']' => TokenKind::RBracket,
                    '{' => TokenKind::LBrace,
                    '}' => TokenKind::RBrace,
                    ':' => TokenKind::Colon,
                    _ => TokenKind::Comma,
                };
                tokens.push(Token {
                    kind,
                    span: span(line, col, 1),
                });
                chars.next();
                col += 1;
            }
            '-' => {
                let tok_line = line;
                let tok_col = col;
                chars.next();
                col += 1;
                match chars.peek() {
                    Some(&(_, '>')) => {
                        chars.next();
                        col += 1;
                        tokens.push(Token {
                            kind: TokenKind::Arrow,
                            span: span(tok_line, tok_col, 2),
                        });
                    }
                    Some(&(_, d)) if d.is_ascii_digit() => {
                        let (value, len) = lex_int(&mut chars, &mut col, true);
                        match value {
                            Some(v) => tokens.push(Token {
                                kind: TokenKind::Int(v),
                                span: span(tok_line, tok_col, len + 1),
                            }),
                            None => diags.push(Diagnostic {
                                severity: Severity::Error,
                                span: span(tok_line, tok_col, len + 1),
                                code: "E0005",
                                message: "integer literal out of range".to_string(),
                            }),
                        }
                    }
                    _ => diags.push(Diagnostic {
                        severity: Severity::Error,
                        span: span(tok_line, tok_col, 1),
                        code: "E0001",
                        message: "unexpected character `-` (expected `->` or a negative integer)"
                            .to_string(),
                    }),
                }
            }
            c if c.is_ascii_digit() => {
                let tok_line = line;
                let tok_col = col;
                let (value, len) = lex_int(&mut chars, &mut col, false);
                match value {
                    Some(v) => tokens.push(Token {
                        kind: TokenKind::Int(v),
                        span: span(tok_line, tok_col, len),
                    }),
                    None => diags.push(Diagnostic {
                        severity: Severity::Error,
                        span: span(tok_line, tok_col, len),
                        code: "E0005",
                        message: "integer literal out of range".to_string(),
                    }),
                }
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let tok_line = line;
                let tok_col = col;
                let mut end = start;
                while let Some(&(i, c)) = chars.peek() {
                    if c.is_ascii_alphanumeric() || c == '_' {
                        end = i + c.len_utf8();
                        chars.next();
                        col += 1;
                    } else {
                        break;
                    }
                }
                let text = &source[start..end];
                let kind = match Keyword::from_str(text) {
                    Some(kw) => TokenKind::Kw(kw),
                    None => TokenKind::Ident(text.to_string()),
                };
                tokens.push(Token {
                    kind,
                    span: span(tok_line, tok_col, text.len() as u32),
                });
            }
            other => {
                diags.push(Diagnostic {
                    severity: Severity::Error,
                    span: span(line, col, 1),
                    code: "E0001",
                    message: format!("unexpected character `{}`", other.escape_default()),
                });
                chars.next();
                col += 1;
            }
        }
    }

    tokens.push(Token {
        kind: TokenKind::Eof,
        span: span(line, col, 0),
    });
    (tokens, diags)
}

/// Consume a run of digits, returning the parsed value (None on overflow)
/// and the digit count.
fn lex_int(
    chars: &mut std::iter::Peekable<std::str::CharIndices>,
    col: &mut u32,
    negative: bool,
) -> (Option<i64>, u32) {
    let mut value: Option<i64> = Some(0);
    let mut len = 0u32;
    while let Some(&(_, c)) = chars.peek() {
        if let Some(d) = c.to_digit(10) {
            value = value.and_then(|v| {
                v.checked_mul(10).and_then(|v| {
                    if negative {
                        v.checked_sub(d as i64)
                    } else {
                        v.checked_add(d as i64)
                    }
                })
            });
            chars.next();
            *col += 1;
            len += 1;
        } else {
            break;
        }
    }
    (value, len)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lexes_declaration() {
        let (tokens, diags) = lex("t.gm", "array y_in : u8[288,352]");
        assert!(diags.is_empty());
        let kinds: Vec<_> = tokens.iter().map(|t| &t.kind).collect();
        assert_eq!(kinds.len(), 10); // array ident : ident [ int , int ] eof
        assert_eq!(*kinds[0], TokenKind::Kw(Keyword::Array));
        assert_eq!(*kinds[1], TokenKind::Ident("y_in".to_string()));
        assert_eq!(*kinds[4], TokenKind::LBracket);
        assert_eq!(*kinds[5], TokenKind::Int(288));
    }

    #[test]
    fn negative_ints_and_arrows_disambiguate() {
        let (tokens, diags) = lex("t.gm", "-12 -> -3");
        assert!(diags.is_empty());
        assert_eq!(tokens[0].kind, TokenKind::Int(-12));
        assert_eq!(tokens[1].kind, TokenKind::Arrow);
        assert_eq!(tokens[2].kind, TokenKind::Int(-3));
    }

    #[test]
    fn comments_are_skipped() {
        let (tokens, diags) = lex("t.gm", "// heading\narray // trailing\n");
        assert!(diags.is_empty());
        assert_eq!(tokens[0].kind, TokenKind::Kw(Keyword::Array));
        assert_eq!(tokens[0].span.line, 2);
        assert_eq!(tokens[1].kind, TokenKind::Eof);
    }

    #[test]
    fn bad_characters_are_reported_and_skipped() {
        let (tokens, diags) = lex("t.gm", "array $ x");
        assert_eq!(diags.len(), 1);
        assert_eq!(diags[0].code, "E0001");
        assert_eq!(diags[0].span.col, 7);
        assert_eq!(tokens.len(), 3); // array, x, eof
    }

    #[test]
    fn overflowing_integer_is_a_range_error() {
        let (_, diags) = lex("t.gm", "99999999999999999999999");
        assert_eq!(diags.len(), 1);
        assert_eq!(diags[0].code, "E0005");
    }

    #[test]
    fn spans_track_lines_and_columns() {
        let (tokens, _) = lex("t.gm", "a\n  bc\n");
        assert_eq!((tokens[0].span.line, tokens[0].span.col), (1, 1));
        assert_eq!((tokens[1].span.line, tokens[1].span.col), (2, 3));
        assert_eq!(tokens[1].span.len, 2);
    }
}
