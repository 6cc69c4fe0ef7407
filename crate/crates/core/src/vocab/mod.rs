//! Token → ID assignment with fixed built-in IDs, per-namespace user IDs
//! and abstracted call composites.

mod file;
mod ranges;
mod scope;

use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::pylex::{BuiltinTables, ComponentClass, Token, STR_PLACEHOLDER};
use crate::{Error, Result};

pub use ranges::{IdRange, IdRanges, MAX_ID, PAD_ID, RANGED};
pub use scope::{ExhaustPolicy, NamespaceScope};

/// Vocabulary file format version.
pub const VOCAB_FORMAT_VERSION: u32 = 1;

/// Key an abstracted call composite is stored under: the member name after
/// the last dot, so `a_param.strip` and `address.strip` share one ID.
pub fn call_key(text: &str) -> &str {
    text.rsplit('.').next().unwrap_or(text)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    pub version: u32,
    pub tables_version: u32,
    pub ranges: IdRanges,
    /// Fixed IDs: keywords, built-ins (call classes keyed by member name),
    /// operator-range entries, frequent numbers and frequent user call keys.
    entries: BTreeMap<(ComponentClass, String), u32>,
    /// Abstract call ID → concrete composite texts seen in the corpus.
    lookup_lists: BTreeMap<u32, BTreeSet<String>>,
    reverse: HashMap<u32, (ComponentClass, String)>,
}

/// What an ID decodes back to.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Decoded {
    Pad,
    /// Built-ins, numbers and scope-local user names decode exactly.
    Exact { component: ComponentClass, text: String },
    /// Abstracted call IDs decode to every concrete text sharing the ID.
    Candidates { component: ComponentClass, texts: Vec<String> },
}

impl Decoded {
    /// Whether `text` is a possible original of this decoding.
    pub fn admits(&self, text: &str) -> bool {
        match self {
            Decoded::Pad => false,
            Decoded::Exact { text: t, .. } => t == text,
            Decoded::Candidates { texts, .. } => texts.iter().any(|t| t == text),
        }
    }

    pub fn component(&self) -> Option<ComponentClass> {
        match self {
            Decoded::Pad => None,
            Decoded::Exact { component, .. } | Decoded::Candidates { component, .. } => {
                Some(*component)
            }
        }
    }
}

fn fill_range(
    entries: &mut BTreeMap<(ComponentClass, String), u32>,
    component: ComponentClass,
    range: IdRange,
    capacity: u32,
    keys: impl IntoIterator<Item = String>,
) -> Result<()> {
    for (offset, key) in keys.into_iter().enumerate() {
        if offset as u32 >= capacity {
            return Err(Error::RangeExhausted {
                component: component.to_string(),
            });
        }
        entries.insert((component, key), range.lo + offset as u32);
    }
    Ok(())
}

/// Keys sorted by descending count, ties lexicographic.
fn by_frequency(counts: HashMap<String, usize>) -> Vec<String> {
    let mut v: Vec<(String, usize)> = counts.into_iter().collect();
    v.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    v.into_iter().map(|(k, _)| k).collect()
}

/// Builds the vocabulary from classified token streams.
///
/// Built-ins take IDs in table order from the start of their range. Numeric
/// literals and user call keys (`MethodCall`, `AttributeCall`) take fixed
/// IDs by descending corpus frequency, ties broken lexicographically, up to
/// the range size minus the scoped tail; the rest are allocated per scope at
/// encoding time.
pub fn build_vocab<'a, I>(corpus: I, ranges: &IdRanges) -> Result<Vocabulary>
where
    I: IntoIterator<Item = &'a [Token]>,
{
    ranges.validate()?;
    let tables = BuiltinTables::shipped();
    let mut entries = BTreeMap::new();

    let fixed: [(ComponentClass, &Vec<String>); 6] = [
        (ComponentClass::Keyword, &tables.keywords.entries),
        (ComponentClass::BuiltinClass, &tables.builtin_classes.entries),
        (ComponentClass::BuiltinMethod, &tables.builtin_functions.entries),
        (ComponentClass::BuiltinMethCall, &tables.builtin_methods.entries),
        (ComponentClass::BuiltinAttribute, &tables.builtin_attributes.entries),
        (ComponentClass::BuiltinAttrCall, &tables.builtin_attr_calls.entries),
    ];
    for (component, keys) in fixed {
        let range = ranges.get(component);
        fill_range(&mut entries, component, range, range.capacity(), keys.iter().cloned())?;
    }
    let op_range = ranges.get(ComponentClass::Operator);
    for (offset, (component, text)) in tables.operator_table.iter().enumerate() {
        if offset as u32 >= op_range.capacity() {
            return Err(Error::RangeExhausted {
                component: ComponentClass::Operator.to_string(),
            });
        }
        entries.insert((*component, text.clone()), op_range.lo + offset as u32);
    }

    let mut numbers: HashMap<String, usize> = HashMap::new();
    let mut calls: BTreeMap<ComponentClass, HashMap<String, usize>> = BTreeMap::new();
    let mut concrete: BTreeMap<(ComponentClass, String), BTreeSet<String>> = BTreeMap::new();
    for stream in corpus {
        for tok in stream {
            match tok.component {
                ComponentClass::Number => *numbers.entry(tok.text.clone()).or_default() += 1,
                c if c.is_call_composite() => {
                    let key = call_key(&tok.text).to_string();
                    if matches!(c, ComponentClass::MethodCall | ComponentClass::AttributeCall) {
                        *calls.entry(c).or_default().entry(key.clone()).or_default() += 1;
                    }
                    concrete.entry((c, key)).or_default().insert(tok.text.clone());
                }
                _ => {}
            }
        }
    }

    let head = |c: ComponentClass| {
        let r = ranges.get(c);
        r.capacity() - ranges.scoped_tail(c).capacity()
    };
    let number_keys: Vec<String> = by_frequency(numbers)
        .into_iter()
        .take(head(ComponentClass::Number) as usize)
        .collect();
    fill_range(
        &mut entries,
        ComponentClass::Number,
        ranges.get(ComponentClass::Number),
        head(ComponentClass::Number),
        number_keys,
    )?;
    for (component, counts) in calls {
        let keys: Vec<String> = by_frequency(counts)
            .into_iter()
            .take(head(component) as usize)
            .collect();
        fill_range(&mut entries, component, ranges.get(component), head(component), keys)?;
    }

    let mut lookup_lists = BTreeMap::new();
    for ((component, key), texts) in concrete {
        if let Some(id) = entries.get(&(component, key)) {
            lookup_lists.insert(*id, texts);
        }
    }
    Ok(Vocabulary::from_parts(
        ranges.clone(),
        tables.version,
        entries,
        lookup_lists,
    ))
}

impl Vocabulary {
    fn from_parts(
        ranges: IdRanges,
        tables_version: u32,
        entries: BTreeMap<(ComponentClass, String), u32>,
        lookup_lists: BTreeMap<u32, BTreeSet<String>>,
    ) -> Self {
        let reverse = entries
            .iter()
            .map(|((c, k), id)| (*id, (*c, k.clone())))
            .collect();
        Vocabulary {
            version: VOCAB_FORMAT_VERSION,
            tables_version,
            ranges,
            entries,
            lookup_lists,
            reverse,
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Fixed ID of a token, if it has one.
    pub fn fixed_id(&self, component: ComponentClass, text: &str) -> Option<u32> {
        let key = if component.is_call_composite() {
            call_key(text)
        } else if component == ComponentClass::Placeholder {
            STR_PLACEHOLDER
        } else {
            text
        };
        self.entries.get(&(component, key.to_string())).copied()
    }

    pub fn lookup_list(&self, id: u32) -> Option<&BTreeSet<String>> {
        self.lookup_lists.get(&id)
    }

    pub fn entry(&self, id: u32) -> Option<(ComponentClass, &str)> {
        self.reverse.get(&id).map(|(c, k)| (*c, k.as_str()))
    }

    pub fn max_id(&self) -> u32 {
        self.ranges.max_id()
    }

    /// Maps a classified token stream to IDs within one namespace.
    pub fn assign_ids(&self, tokens: &[Token], scope: &mut NamespaceScope) -> Result<Vec<u32>> {
        tokens.iter().map(|t| self.assign_one(t, scope)).collect()
    }

    fn assign_one(&self, tok: &Token, scope: &mut NamespaceScope) -> Result<u32> {
        use ComponentClass::*;
        if let Some(id) = self.fixed_id(tok.component, &tok.text) {
            return Ok(id);
        }
        match tok.component {
            Class | Method | Variable => {
                scope.allocate(tok.component, &tok.text, &tok.text, self.ranges.get(tok.component))
            }
            Number => scope.allocate(
                Number,
                &tok.text,
                &tok.text,
                self.ranges.scoped_tail(Number),
            ),
            MethodCall | AttributeCall => scope.allocate(
                tok.component,
                call_key(&tok.text),
                &tok.text,
                self.ranges.scoped_tail(tok.component),
            ),
            _ => Err(Error::UnknownToken {
                component: tok.component.to_string(),
                text: tok.text.clone(),
            }),
        }
    }

    /// Maps IDs back to token texts; abstracted call IDs yield their
    /// lookup list, scoped IDs their scope-local text.
    pub fn decode(&self, ids: &[u32], scope: &NamespaceScope) -> Result<Vec<Decoded>> {
        ids.iter().map(|&id| self.decode_one(id, scope)).collect()
    }

    pub fn decode_one(&self, id: u32, scope: &NamespaceScope) -> Result<Decoded> {
        if id == PAD_ID {
            return Ok(Decoded::Pad);
        }
        if self.ranges.component_of(id).is_none() {
            return Err(Error::Decode(id));
        }
        if let Some(texts) = scope.texts(id) {
            let component = scope.component(id).expect("scoped id has a component");
            return Ok(if texts.len() == 1 && !component.is_call_composite() {
                Decoded::Exact {
                    component,
                    text: texts[0].clone(),
                }
            } else {
                Decoded::Candidates {
                    component,
                    texts: texts.to_vec(),
                }
            });
        }
        let (component, key) = self.reverse.get(&id).ok_or(Error::Unassigned(id))?;
        if component.is_call_composite() {
            let texts = self
                .lookup_lists
                .get(&id)
                .map(|s| s.iter().cloned().collect())
                .unwrap_or_else(|| vec![key.clone()]);
            return Ok(Decoded::Candidates {
                component: *component,
                texts,
            });
        }
        Ok(Decoded::Exact {
            component: *component,
            text: key.clone(),
        })
    }
}
