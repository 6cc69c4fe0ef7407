use std::collections::{BTreeMap, HashMap};

use crate::pylex::ComponentClass;
use crate::vocab::IdRange;
use crate::{Error, Result};

/// What to do when a scope runs out of IDs in a range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ExhaustPolicy {
    #[default]
    Error,
    /// Wrap to the start of the range, reusing IDs.
    Recycle,
}

/// Per-namespace allocator for user-defined tokens. One scope per snippet.
#[derive(Debug, Clone, Default)]
pub struct NamespaceScope {
    policy: ExhaustPolicy,
    cursors: BTreeMap<ComponentClass, u32>,
    local: HashMap<(ComponentClass, String), u32>,
    reverse: HashMap<u32, (ComponentClass, Vec<String>)>,
    recycled: bool,
}

impl NamespaceScope {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_policy(policy: ExhaustPolicy) -> Self {
        NamespaceScope {
            policy,
            ..Self::default()
        }
    }

    /// Whether the recycle policy had to wrap in this scope.
    pub fn recycled(&self) -> bool {
        self.recycled
    }

    /// ID for `key` in `component`, allocating the next free one on first
    /// sight. `text` is the concrete token text remembered for decoding.
    pub(crate) fn allocate(
        &mut self,
        component: ComponentClass,
        key: &str,
        text: &str,
        range: IdRange,
    ) -> Result<u32> {
        let id = match self.local.get(&(component, key.to_string())) {
            Some(&id) => id,
            None => {
                let cursor = self.cursors.entry(component).or_insert(range.lo);
                if *cursor > range.hi {
                    match self.policy {
                        ExhaustPolicy::Error => {
                            return Err(Error::RangeExhausted {
                                component: component.to_string(),
                            })
                        }
                        ExhaustPolicy::Recycle => {
                            *cursor = range.lo;
                            self.recycled = true;
                        }
                    }
                }
                let id = *cursor;
                *cursor += 1;
                self.local.insert((component, key.to_string()), id);
                id
            }
        };
        let entry = self
            .reverse
            .entry(id)
            .or_insert_with(|| (component, Vec::new()));
        if !entry.1.iter().any(|t| t == text) {
            entry.1.push(text.to_string());
        }
        Ok(id)
    }

    pub fn texts(&self, id: u32) -> Option<&[String]> {
        self.reverse.get(&id).map(|(_, t)| t.as_slice())
    }

    pub fn component(&self, id: u32) -> Option<ComponentClass> {
        self.reverse.get(&id).map(|(c, _)| *c)
    }

    pub fn len(&self) -> usize {
        self.local.len()
    }

    pub fn is_empty(&self) -> bool {
        self.local.is_empty()
    }
}
