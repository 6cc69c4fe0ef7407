use std::collections::HashSet;
use std::sync::OnceLock;

use super::{unescape, ComponentClass};

/// Version of the shipped built-in tables; bumping it changes vocab files.
pub const TABLES_VERSION: u32 = 1;

const KEYWORDS: &str = include_str!("../../data/keywords.txt");
const BUILTIN_CLASSES: &str = include_str!("../../data/builtin_classes.txt");
const BUILTIN_FUNCTIONS: &str = include_str!("../../data/builtin_functions.txt");
const BUILTIN_METHODS: &str = include_str!("../../data/builtin_methods.txt");
const BUILTIN_ATTRIBUTES: &str = include_str!("../../data/builtin_attributes.txt");
const BUILTIN_ATTR_CALLS: &str = include_str!("../../data/builtin_attr_calls.txt");
const OPERATORS: &str = include_str!("../../data/operators.txt");

/// An ordered table plus a membership index.
#[derive(Debug, Clone, Default)]
pub struct Table {
    pub entries: Vec<String>,
    index: HashSet<String>,
}

impl Table {
    fn parse(src: &str) -> Self {
        let mut table = Table::default();
        for line in src.lines() {
            let line = line.trim_end_matches('\r');
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            table.push(line.to_string());
        }
        table
    }

    fn push(&mut self, entry: String) {
        if self.index.insert(entry.clone()) {
            self.entries.push(entry);
        }
    }

    pub fn contains(&self, s: &str) -> bool {
        self.index.contains(s)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Built-in entity tables driving lexing and classification.
#[derive(Debug, Clone)]
pub struct BuiltinTables {
    pub version: u32,
    pub keywords: Table,
    pub builtin_classes: Table,
    pub builtin_functions: Table,
    pub builtin_methods: Table,
    pub builtin_attributes: Table,
    pub builtin_attr_calls: Table,
    /// Operator-range entries in ID order: operators, symbols, newline,
    /// whitespace chunks and the placeholder.
    pub operator_table: Vec<(ComponentClass, String)>,
}

impl BuiltinTables {
    pub fn shipped() -> &'static BuiltinTables {
        static TABLES: OnceLock<BuiltinTables> = OnceLock::new();
        TABLES.get_or_init(|| BuiltinTables {
            version: TABLES_VERSION,
            keywords: Table::parse(KEYWORDS),
            builtin_classes: Table::parse(BUILTIN_CLASSES),
            builtin_functions: Table::parse(BUILTIN_FUNCTIONS),
            builtin_methods: Table::parse(BUILTIN_METHODS),
            builtin_attributes: Table::parse(BUILTIN_ATTRIBUTES),
            builtin_attr_calls: Table::parse(BUILTIN_ATTR_CALLS),
            operator_table: parse_operator_table(OPERATORS),
        })
    }

    /// Operator and symbol lexemes, longest first, for maximal munch.
    pub fn punctuation_by_length(&self) -> Vec<(&str, ComponentClass)> {
        let mut out: Vec<(&str, ComponentClass)> = self
            .operator_table
            .iter()
            .filter(|(c, _)| matches!(c, ComponentClass::Operator | ComponentClass::Symbol))
            .map(|(c, s)| (s.as_str(), *c))
            .collect();
        out.sort_by(|a, b| b.0.len().cmp(&a.0.len()).then(a.0.cmp(b.0)));
        out
    }
}

fn parse_operator_table(src: &str) -> Vec<(ComponentClass, String)> {
    src.lines()
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| {
            let (comp, text) = l.split_once('\t').expect("operator table line");
            let comp = comp.parse().expect("operator table component");
            (comp, unescape(text))
        })
        .collect()
}
