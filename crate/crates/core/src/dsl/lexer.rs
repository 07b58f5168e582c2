//! Tokenizer shared by the `.flow` and `.proc` formats.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::model::is_identifier_char;

/// 1-based position of a token.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SourceSpan {
    pub line: usize,
    pub column: usize,
    pub length: usize,
}

impl fmt::Display for SourceSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Tok {
    Ident(String),
    Str(String),
    Arrow,
    Dash,
    Colon,
    LBrace,
    RBrace,
    At,
    Newline,
    /// Lexing problem; the message describes it.
    Bad(String),
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Str(_) => "string".into(),
            Tok::Arrow => "`->`".into(),
            Tok::Dash => "`--`".into(),
            Tok::Colon => "`:`".into(),
            Tok::LBrace => "`{`".into(),
            Tok::RBrace => "`}`".into(),
            Tok::At => "`@`".into(),
            Tok::Newline => "end of line".into(),
            Tok::Bad(m) => m.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Token {
    pub tok: Tok,
    pub span: SourceSpan,
}

/// Splits `text` into tokens. Never fails: problems become [`Tok::Bad`].
/// The result always ends with a newline token.
pub fn tokenize(text: &str) -> Vec<Token> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0, 1, 1);

    while i < chars.len() {
        let c = chars[i];
        let start = SourceSpan {
            line,
            column: col,
            length: 1,
        };
        let peek = chars.get(i + 1).copied();
        let single = |tok| Token { tok, span: start };
        match c {
            '\n' => {
                out.push(single(Tok::Newline));
                i += 1;
                line += 1;
                col = 1;
                continue;
            }
            ' ' | '\t' | '\r' => {}
            '#' => {
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                    col += 1;
                }
                continue;
            }
            ':' => out.push(single(Tok::Colon)),
            '{' => out.push(single(Tok::LBrace)),
            '}' => out.push(single(Tok::RBrace)),
            '@' => out.push(single(Tok::At)),
            '-' if peek == Some('>') || peek == Some('-') => {
                let tok = if peek == Some('>') {
                    Tok::Arrow
                } else {
                    Tok::Dash
                };
                out.push(Token {
                    tok,
                    span: SourceSpan { length: 2, ..start },
                });
                i += 2;
                col += 2;
                continue;
            }
            '"' => {
                let (tok, used) = lex_string(&chars[i..]);
                out.push(Token {
                    tok,
                    span: SourceSpan {
                        length: used,
                        ..start
                    },
                });
                // Strings never span lines: an unterminated one stops at the newline.
                i += used;
                col += used;
                continue;
            }
            c if is_identifier_char(c) => {
                let mut j = i;
                while j < chars.len() && is_identifier_char(chars[j]) {
                    if j > i && chars[j] == '-' && matches!(chars.get(j + 1), Some('>') | Some('-'))
                    {
                        break;
                    }
                    j += 1;
                }
                let word: String = chars[i..j].iter().collect();
                out.push(Token {
                    tok: Tok::Ident(word),
                    span: SourceSpan {
                        length: j - i,
                        ..start
                    },
                });
                col += j - i;
                i = j;
                continue;
            }
            other => out.push(single(Tok::Bad(format!("unexpected character {other:?}")))),
        }
        i += 1;
        col += 1;
    }
    out.push(Token {
        tok: Tok::Newline,
        span: SourceSpan {
            line,
            column: col,
            length: 1,
        },
    });
    out
}

/// Lexes a string literal at the start of `chars`; returns the token and the
/// number of characters consumed.
fn lex_string(chars: &[char]) -> (Tok, usize) {
    let mut value = String::new();
    let mut i = 1;
    while i < chars.len() {
        match chars[i] {
            '"' => return (Tok::Str(value), i + 1),
            '\n' => break,
            '\\' => {
                let Some(&e) = chars.get(i + 1) else { break };
                i += 2;
                match e {
                    '"' => value.push('"'),
                    '\\' => value.push('\\'),
                    'n' => value.push('\n'),
                    't' => value.push('\t'),
                    'r' => value.push('\r'),
                    'u' if chars.get(i) == Some(&'{') => {
                        let close = chars[i..].iter().position(|&c| c == '}');
                        let decoded = close.and_then(|end| {
                            let hex: String = chars[i + 1..i + end].iter().collect();
                            u32::from_str_radix(&hex, 16)
                                .ok()
                                .and_then(char::from_u32)
                                .map(|c| (c, end))
                        });
                        match decoded {
                            Some((c, end)) => {
                                value.push(c);
                                i += end + 1;
                            }
                            None => return (Tok::Bad("invalid unicode escape".into()), i),
                        }
                    }
                    other => return (Tok::Bad(format!("unknown escape \\{other}")), i),
                }
                continue;
            }
            c => value.push(c),
        }
        i += 1;
    }
    (Tok::Bad("unterminated string".into()), i)
}

/// Quotes `s` so that [`tokenize`] reads it back unchanged.
pub fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            '\r' => out.push_str("\\r"),
            c if c.is_control() => out.push_str(&format!("\\u{{{:x}}}", c as u32)),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}
