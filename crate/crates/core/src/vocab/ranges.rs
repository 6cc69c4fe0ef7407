use std::fmt;

use serde::{Deserialize, Serialize};

use crate::pylex::ComponentClass;
use crate::{Error, Result};

/// Inclusive ID interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IdRange {
    pub lo: u32,
    pub hi: u32,
}

impl IdRange {
    pub const fn new(lo: u32, hi: u32) -> Self {
        IdRange { lo, hi }
    }

    pub fn capacity(&self) -> u32 {
        self.hi - self.lo + 1
    }

    pub fn contains(&self, id: u32) -> bool {
        (self.lo..=self.hi).contains(&id)
    }
}

impl fmt::Display for IdRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.lo, self.hi)
    }
}

/// The thirteen components that own an ID range.
pub const RANGED: [ComponentClass; 13] = [
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
];

/// Largest ID of the default ranges; the image normalizer divides by it.
pub const MAX_ID: u32 = 13811;

/// Reserved padding ID.
pub const PAD_ID: u32 = 0;

/// Per-component inclusive ID ranges, indexed in [`RANGED`] order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IdRanges {
    ranges: [IdRange; 13],
}

impl Default for IdRanges {
    fn default() -> Self {
        IdRanges {
            ranges: [
                IdRange::new(1, 35),
                IdRange::new(36, 54),
                IdRange::new(55, 1584),
                IdRange::new(1585, 2698),
                IdRange::new(2699, 4454),
                IdRange::new(4455, 6128),
                IdRange::new(6129, 6929),
                IdRange::new(6930, 7960),
                IdRange::new(7961, 9999),
                IdRange::new(10000, 11270),
                IdRange::new(11271, 11509),
                IdRange::new(11510, 11554),
                IdRange::new(11555, 13811),
            ],
        }
    }
}

impl IdRanges {
    pub fn new(ranges: [IdRange; 13]) -> Result<Self> {
        let r = IdRanges { ranges };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        for (i, a) in self.ranges.iter().enumerate() {
            if a.lo == PAD_ID || a.lo > a.hi {
                return Err(Error::config(
                    format!("ranges.{}", RANGED[i]),
                    format!("invalid interval {a}"),
                ));
            }
            for (j, b) in self.ranges.iter().enumerate().skip(i + 1) {
                if a.lo <= b.hi && b.lo <= a.hi {
                    return Err(Error::config(
                        format!("ranges.{}", RANGED[j]),
                        format!("overlaps {} ({a})", RANGED[i]),
                    ));
                }
            }
        }
        Ok(())
    }

    /// The range a component's IDs live in. Symbols, whitespace, line
    /// breaks and the placeholder share the operator range.
    pub fn get(&self, component: ComponentClass) -> IdRange {
        let owner = match component {
            ComponentClass::Symbol
            | ComponentClass::Whitespace
            | ComponentClass::Newline
            | ComponentClass::Placeholder => ComponentClass::Operator,
            c => c,
        };
        let idx = RANGED.iter().position(|c| *c == owner).expect("ranged component");
        self.ranges[idx]
    }

    pub fn set(&mut self, component: ComponentClass, range: IdRange) {
        if let Some(idx) = RANGED.iter().position(|c| *c == component) {
            self.ranges[idx] = range;
        }
    }

    /// Component owning `id`, if any.
    pub fn component_of(&self, id: u32) -> Option<ComponentClass> {
        RANGED
            .iter()
            .zip(self.ranges.iter())
            .find(|(_, r)| r.contains(id))
            .map(|(c, _)| *c)
    }

    pub fn max_id(&self) -> u32 {
        self.ranges.iter().map(|r| r.hi).max().unwrap_or(0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (ComponentClass, IdRange)> + '_ {
        RANGED.iter().copied().zip(self.ranges.iter().copied())
    }

    /// Tail of a range set aside for per-scope allocation of literals and
    /// call keys that did not earn a fixed ID.
    pub fn scoped_tail(&self, component: ComponentClass) -> IdRange {
        let r = self.get(component);
        let tail = (r.capacity() / 8).max(1);
        IdRange::new(r.hi - tail + 1, r.hi)
    }
}
