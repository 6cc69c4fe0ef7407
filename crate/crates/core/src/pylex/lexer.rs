use super::{BuiltinTables, ComponentClass, Token, STR_PLACEHOLDER};
use crate::{Error, Result};

/// Widest whitespace chunk; longer runs of spaces split into several tokens.
pub(crate) const MAX_SPACE_CHUNK: usize = 4;

pub(super) fn is_ident_start(c: char) -> bool {
    c == '_' || c.is_alphabetic()
}

pub(super) fn is_ident_continue(c: char) -> bool {
    c == '_' || c.is_alphanumeric()
}

fn is_string_prefix(p: &str) -> bool {
    matches!(
        p.to_ascii_lowercase().as_str(),
        "" | "r" | "u" | "b" | "f" | "br" | "rb" | "fr" | "rf"
    )
}

/// Outcome of looking for a string literal at a position.
pub(super) enum StringScan {
    NotString,
    Literal { end: usize },
    Unterminated { end: usize },
}

/// Scans a string literal (with optional prefix) starting at byte `start`.
pub(super) fn scan_string(src: &str, start: usize) -> StringScan {
    let bytes = src.as_bytes();
    let mut q = start;
    while q < bytes.len() && q - start < 2 && bytes[q].is_ascii_alphabetic() {
        q += 1;
    }
    if q >= bytes.len() || !(bytes[q] == b'"' || bytes[q] == b'\'') {
        return StringScan::NotString;
    }
    if !is_string_prefix(&src[start..q]) {
        return StringScan::NotString;
    }
    let quote = bytes[q];
    let triple = bytes.len() >= q + 3 && bytes[q + 1] == quote && bytes[q + 2] == quote;
    let mut i = if triple { q + 3 } else { q + 1 };
    while i < bytes.len() {
        let b = bytes[i];
        if b == b'\\' {
            i += 2;
            continue;
        }
        if triple {
            if b == quote && bytes.get(i + 1) == Some(&quote) && bytes.get(i + 2) == Some(&quote) {
                return StringScan::Literal { end: i + 3 };
            }
        } else if b == quote {
            return StringScan::Literal { end: i + 1 };
        } else if b == b'\n' {
            return StringScan::Unterminated { end: i };
        }
        i += 1;
    }
    StringScan::Unterminated {
        end: bytes.len(),
    }
}

fn scan_digits(bytes: &[u8], mut i: usize, pred: impl Fn(u8) -> bool) -> usize {
    while i < bytes.len() && (pred(bytes[i]) || bytes[i] == b'_') {
        i += 1;
    }
    i
}

/// Scans a numeric literal starting at `start` (a digit, or `.` followed by
/// a digit).
fn scan_number(src: &str, start: usize) -> usize {
    let bytes = src.as_bytes();
    let mut i = start;
    if bytes[i] == b'0' && i + 1 < bytes.len() {
        let radix_pred: Option<fn(u8) -> bool> = match bytes[i + 1] {
            b'x' | b'X' => Some(|b: u8| b.is_ascii_hexdigit()),
            b'o' | b'O' => Some(|b: u8| (b'0'..=b'7').contains(&b)),
            b'b' | b'B' => Some(|b: u8| b == b'0' || b == b'1'),
            _ => None,
        };
        if let Some(pred) = radix_pred {
            return scan_digits(bytes, i + 2, pred);
        }
    }
    i = scan_digits(bytes, i, |b| b.is_ascii_digit());
    if i < bytes.len() && bytes[i] == b'.' {
        let next = bytes.get(i + 1).copied();
        // `1.` is a float, `1.real` is attribute access on an int
        let attr = next.is_some_and(|b| b.is_ascii_alphabetic() || b == b'_') && !matches!(next, Some(b'e' | b'E' | b'j' | b'J'));
        if !attr {
            i = scan_digits(bytes, i + 1, |b| b.is_ascii_digit());
        }
    }
    if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
        let mut j = i + 1;
        if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
            j += 1;
        }
        if j < bytes.len() && bytes[j].is_ascii_digit() {
            i = scan_digits(bytes, j, |b| b.is_ascii_digit());
        }
    }
    if i < bytes.len() && (bytes[i] == b'j' || bytes[i] == b'J') {
        i += 1;
    }
    i
}

/// Lossless tokenization of cleaned Python source.
///
/// Identifiers come out provisionally as `Variable`; [`super::classify`]
/// refines them. Runs of spaces are emitted as chunks of at most
/// four spaces, tabs and carriage returns one per token.
pub fn lex(src: &str) -> Result<Vec<Token>> {
    let tables = BuiltinTables::shipped();
    let punctuation = tables.punctuation_by_length();
    let bytes = src.as_bytes();
    let mut tokens = Vec::new();
    let mut i = 0;

    while i < src.len() {
        let c = src[i..].chars().next().expect("in bounds");
        match c {
            '\n' => {
                tokens.push(Token::new("\n", ComponentClass::Newline, i));
                i += 1;
            }
            ' ' => {
                let mut j = i;
                while j < bytes.len() && bytes[j] == b' ' && j - i < MAX_SPACE_CHUNK {
                    j += 1;
                }
                tokens.push(Token::new(&src[i..j], ComponentClass::Whitespace, i));
                i = j;
            }
            '\t' | '\r' => {
                tokens.push(Token::new(&src[i..i + 1], ComponentClass::Whitespace, i));
                i += 1;
            }
            '#' => {
                return Err(Error::Lex {
                    msg: "comment in lexer input; clean the source first".into(),
                    start: i,
                    end: i + 1,
                })
            }
            '"' | '\'' => i = lex_string(src, i, &mut tokens)?,
            c if is_ident_start(c) => {
                if let StringScan::NotString = scan_string(src, i) {
                    let mut j = i;
                    for (off, ch) in src[i..].char_indices() {
                        if !is_ident_continue(ch) {
                            break;
                        }
                        j = i + off + ch.len_utf8();
                    }
                    let word = &src[i..j];
                    let component = if tables.keywords.contains(word) {
                        ComponentClass::Keyword
                    } else if word == STR_PLACEHOLDER {
                        ComponentClass::Placeholder
                    } else {
                        ComponentClass::Variable
                    };
                    tokens.push(Token::new(word, component, i));
                    i = j;
                } else {
                    i = lex_string(src, i, &mut tokens)?;
                }
            }
            c if c.is_ascii_digit()
                || (c == '.' && bytes.get(i + 1).is_some_and(|b| b.is_ascii_digit())) =>
            {
                let j = scan_number(src, i);
                tokens.push(Token::new(&src[i..j], ComponentClass::Number, i));
                i = j;
            }
            _ => {
                let hit = punctuation
                    .iter()
                    .find(|(p, _)| src[i..].starts_with(p));
                match hit {
                    Some((p, comp)) => {
                        tokens.push(Token::new(*p, *comp, i));
                        i += p.len();
                    }
                    None => {
                        return Err(Error::Lex {
                            msg: format!("unexpected character {c:?}"),
                            start: i,
                            end: i + c.len_utf8(),
                        })
                    }
                }
            }
        }
    }
    Ok(tokens)
}

fn lex_string(src: &str, i: usize, tokens: &mut Vec<Token>) -> Result<usize> {
    match scan_string(src, i) {
        StringScan::Literal { end } => {
            tokens.push(Token::new(&src[i..end], ComponentClass::Placeholder, i));
            Ok(end)
        }
        StringScan::Unterminated { end } => Err(Error::Lex {
            msg: "unterminated string literal".into(),
            start: i,
            end,
        }),
        StringScan::NotString => unreachable!("caller checked for a string start"),
    }
}
