//! Python-subset tokenizer producing component-classified tokens.
//!
//! The pipeline is [`clean_code`] (string literals to the `STR` placeholder,
//! comments dropped), [`lex`] (lossless tokenization, whitespace and line
//! breaks kept as tokens) and [`classify`] (built-in versus user-defined
//! entities, fused dotted call composites).

mod classify;
mod clean;
mod lexer;
mod tables;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use classify::classify;
pub use clean::clean_code;
pub use lexer::lex;
pub use tables::{BuiltinTables, TABLES_VERSION};

/// Placeholder text substituted for string literals.
pub const STR_PLACEHOLDER: &str = "STR";

/// Token component. The declaration order is the serialization order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ComponentClass {
    Keyword,
    BuiltinClass,
    Class,
    BuiltinMethod,
    Method,
    BuiltinMethCall,
    MethodCall,
    BuiltinAttribute,
    Variable,
    BuiltinAttrCall,
    AttributeCall,
    Operator,
    Number,
    Symbol,
    Whitespace,
    Newline,
    Placeholder,
}

impl ComponentClass {
    pub const ALL: [ComponentClass; 17] = [
        ComponentClass::Keyword,
        ComponentClass::BuiltinClass,
        ComponentClass::Class,
        ComponentClass::BuiltinMethod,
        ComponentClass::Method,
        ComponentClass::BuiltinMethCall,
        ComponentClass::MethodCall,
        ComponentClass::BuiltinAttribute,
        ComponentClass::Variable,
        ComponentClass::BuiltinAttrCall,
        ComponentClass::AttributeCall,
        ComponentClass::Operator,
        ComponentClass::Number,
        ComponentClass::Symbol,
        ComponentClass::Whitespace,
        ComponentClass::Newline,
        ComponentClass::Placeholder,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ComponentClass::Keyword => "Keyword",
            ComponentClass::BuiltinClass => "BuiltinClass",
            ComponentClass::Class => "Class",
            ComponentClass::BuiltinMethod => "BuiltinMethod",
            ComponentClass::Method => "Method",
            ComponentClass::BuiltinMethCall => "BuiltinMethCall",
            ComponentClass::MethodCall => "MethodCall",
            ComponentClass::BuiltinAttribute => "BuiltinAttribute",
            ComponentClass::Variable => "Variable",
            ComponentClass::BuiltinAttrCall => "BuiltinAttrCall",
            ComponentClass::AttributeCall => "AttributeCall",
            ComponentClass::Operator => "Operator",
            ComponentClass::Number => "Number",
            ComponentClass::Symbol => "Symbol",
            ComponentClass::Whitespace => "Whitespace",
            ComponentClass::Newline => "Newline",
            ComponentClass::Placeholder => "Placeholder",
        }
    }

    /// Identifier-bearing classes, the ones [`classify`] may rewrite.
    pub fn is_identifier(self) -> bool {
        matches!(
            self,
            ComponentClass::BuiltinClass
                | ComponentClass::Class
                | ComponentClass::BuiltinMethod
                | ComponentClass::Method
                | ComponentClass::BuiltinMethCall
                | ComponentClass::MethodCall
                | ComponentClass::BuiltinAttribute
                | ComponentClass::Variable
                | ComponentClass::BuiltinAttrCall
                | ComponentClass::AttributeCall
        )
    }

    /// Dotted member composites whose IDs are keyed by member name.
    pub fn is_call_composite(self) -> bool {
        matches!(
            self,
            ComponentClass::BuiltinMethCall
                | ComponentClass::MethodCall
                | ComponentClass::BuiltinAttrCall
                | ComponentClass::AttributeCall
        )
    }
}

impl fmt::Display for ComponentClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ComponentClass {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ComponentClass::ALL
            .iter()
            .copied()
            .find(|c| c.name() == s)
            .ok_or_else(|| format!("unknown component class {s:?}"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub text: String,
    pub component: ComponentClass,
    /// Byte span `start..end` in the lexed source.
    pub span: (usize, usize),
}

impl Token {
    pub fn new(text: impl Into<String>, component: ComponentClass, start: usize) -> Self {
        let text = text.into();
        let end = start + text.len();
        Token {
            text,
            component,
            span: (start, end),
        }
    }
}

/// Concatenates token texts; inverse of [`lex`] on cleaned source.
pub fn join_tokens(tokens: &[Token]) -> String {
    tokens.iter().map(|t| t.text.as_str()).collect()
}

/// `clean_code`, `lex` and `classify` in sequence with the shipped tables.
pub fn tokenize(src: &str) -> crate::Result<Vec<Token>> {
    let cleaned = clean_code(src);
    let tokens = lex(&cleaned)?;
    Ok(classify(&tokens, BuiltinTables::shipped()))
}

/// Golden-corpus token line format: `component<TAB>text` with `\n`, `\t`,
/// `\r` and `\\` escaped.
pub fn format_token_line(token: &Token) -> String {
    format!("{}\t{}", token.component, escape(&token.text))
}

pub fn parse_token_line(line: &str) -> Option<(ComponentClass, String)> {
    let (comp, text) = line.split_once('\t')?;
    Some((comp.parse().ok()?, unescape(text)))
}

pub(crate) fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            '\r' => out.push_str("\\r"),
            c => out.push(c),
        }
    }
    out
}

pub(crate) fn unescape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut chars = s.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        match chars.next() {
            Some('n') => out.push('\n'),
            Some('t') => out.push('\t'),
            Some('r') => out.push('\r'),
            Some('s') => out.push(' '),
            Some('\\') => out.push('\\'),
            Some(other) => {
                out.push('\\');
                out.push(other);
            }
            None => out.push('\\'),
        }
    }
    out
}
