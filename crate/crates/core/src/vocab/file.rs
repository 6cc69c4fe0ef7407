//! Line-oriented vocabulary file.
//!
//! ```text
//! #clcp-vocab<TAB>1
//! #tables<TAB>1
//! #range<TAB>Keyword<TAB>1<TAB>35        (one per ranged component)
//! Keyword<TAB>False<TAB>1                (entries, ascending id)
//! ...
//! #lookup
//! 11271<TAB>a_param.strip                (ascending id, then text)
//! ```
//! Keys and texts are escaped (`\n`, `\t`, `\r`, `\\`).

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use sha2::{Digest, Sha256};

use super::{IdRange, IdRanges, Vocabulary, RANGED, VOCAB_FORMAT_VERSION};
use crate::pylex::{escape, unescape, ComponentClass};
use crate::{Error, Result};

impl Vocabulary {
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("#clcp-vocab\t{}\n", self.version));
        out.push_str(&format!("#tables\t{}\n", self.tables_version));
        for (c, r) in self.ranges.iter() {
            out.push_str(&format!("#range\t{}\t{}\t{}\n", c, r.lo, r.hi));
        }
        let mut by_id: Vec<(&u32, &(ComponentClass, String))> = self.reverse.iter().collect();
        by_id.sort_by_key(|(id, _)| **id);
        for (id, (c, key)) in by_id {
            out.push_str(&format!("{}\t{}\t{}\n", c, escape(key), id));
        }
        out.push_str("#lookup\n");
        for (id, texts) in &self.lookup_lists {
            for t in texts {
                out.push_str(&format!("{}\t{}\n", id, escape(t)));
            }
        }
        out
    }

    pub fn sha256_hex(&self) -> String {
        hex::encode(Sha256::digest(self.to_tsv().as_bytes()))
    }

    pub fn from_tsv(src: &str) -> Result<Self> {
        let bad = |line: usize, msg: &str| Error::VocabFormat(format!("line {}: {msg}", line + 1));
        let mut lines = src.lines().enumerate();
        let version = match lines.next() {
            Some((_, l)) if l.starts_with("#clcp-vocab\t") => l[12..]
                .parse::<u32>()
                .map_err(|_| bad(0, "bad version"))?,
            _ => return Err(bad(0, "missing #clcp-vocab header")),
        };
        if version != VOCAB_FORMAT_VERSION {
            return Err(Error::VocabFormat(format!("unsupported version {version}")));
        }
        let tables_version = match lines.next() {
            Some((n, l)) if l.starts_with("#tables\t") => {
                l[8..].parse::<u32>().map_err(|_| bad(n, "bad tables version"))?
            }
            _ => return Err(bad(1, "missing #tables header")),
        };
        let mut ranges = IdRanges::default();
        let mut seen_ranges = 0;
        let mut entries = BTreeMap::new();
        let mut lookup: BTreeMap<u32, BTreeSet<String>> = BTreeMap::new();
        let mut in_lookup = false;
        for (n, line) in lines {
            if line.is_empty() {
                continue;
            }
            if line == "#lookup" {
                in_lookup = true;
                continue;
            }
            if let Some(rest) = line.strip_prefix("#range\t") {
                let parts: Vec<&str> = rest.split('\t').collect();
                if parts.len() != 3 {
                    return Err(bad(n, "range line needs 3 fields"));
                }
                let c: ComponentClass = parts[0].parse().map_err(|e: String| bad(n, &e))?;
                if !RANGED.contains(&c) {
                    return Err(bad(n, "range for unranged component"));
                }
                let lo = parts[1].parse().map_err(|_| bad(n, "bad lo"))?;
                let hi = parts[2].parse().map_err(|_| bad(n, "bad hi"))?;
                ranges.set(c, IdRange::new(lo, hi));
                seen_ranges += 1;
                continue;
            }
            if in_lookup {
                let (id, text) = line.split_once('\t').ok_or_else(|| bad(n, "lookup line needs 2 fields"))?;
                let id: u32 = id.parse().map_err(|_| bad(n, "bad id"))?;
                lookup.entry(id).or_default().insert(unescape(text));
            } else {
                let mut parts = line.splitn(3, '\t');
                let (c, key, id) = match (parts.next(), parts.next(), parts.next()) {
                    (Some(c), Some(k), Some(i)) => (c, k, i),
                    _ => return Err(bad(n, "entry line needs 3 fields")),
                };
                let c: ComponentClass = c.parse().map_err(|e: String| bad(n, &e))?;
                let id: u32 = id.parse().map_err(|_| bad(n, "bad id"))?;
                if !ranges.get(c).contains(id) {
                    return Err(bad(n, "id outside its component range"));
                }
                entries.insert((c, unescape(key)), id);
            }
        }
        if seen_ranges != RANGED.len() {
            return Err(Error::VocabFormat(format!(
                "expected {} range lines, found {seen_ranges}",
                RANGED.len()
            )));
        }
        ranges.validate()?;
        Ok(Vocabulary::from_parts(ranges, tables_version, entries, lookup))
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_tsv()).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let src = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_tsv(&src)
    }
}
