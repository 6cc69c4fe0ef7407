//! Rule-based removal of redundant content from code descriptions.
//!
//! Rules run in a fixed order on HTML-entity-decoded text: URLs,
//! doctest/demonstration blocks, directory listings, parameter tables,
//! then whitespace collapsing. Records left with fewer than
//! [`MIN_WORDS`] words are marked dropped.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::ingest::PairRecord;

pub const MIN_WORDS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rule {
    Url,
    Doctest,
    DirectoryListing,
    ParameterTable,
    Whitespace,
}

impl Rule {
    pub const ORDER: [Rule; 5] = [
        Rule::Url,
        Rule::Doctest,
        Rule::DirectoryListing,
        Rule::ParameterTable,
        Rule::Whitespace,
    ];
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleHits {
    /// Spans removed by the rule.
    pub spans: usize,
    /// Characters removed by the rule.
    pub chars: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CleanReport {
    pub rules_fired: BTreeMap<Rule, RuleHits>,
    pub dropped: bool,
    pub before_len: usize,
    pub after_len: usize,
    /// Characters removed by entity decoding before the rules ran.
    pub decoded_chars: usize,
}

impl CleanReport {
    fn hit(&mut self, rule: Rule, chars: usize) {
        if chars == 0 {
            return;
        }
        let h = self.rules_fired.entry(rule).or_default();
        h.spans += 1;
        h.chars += chars;
    }
}

struct Patterns {
    url: Regex,
    inline_section: Regex,
    section_header: Regex,
    dashes: Regex,
    param_line: Regex,
    demo_noise: Regex,
    path_token: Regex,
}

fn patterns() -> &'static Patterns {
    static P: OnceLock<Patterns> = OnceLock::new();
    P.get_or_init(|| {
        const SECTIONS: &str = r"parameters|other parameters|returns|yields|raises|args|arguments|keyword arguments|attributes|examples|example|notes|see also|references|warns|methods";
        Patterns {
            url: Regex::new(r"<\s*(?:https?|ftp)://[^>\s]*\s*>|(?:https?|ftp)://\S+|\bwww\.\S+").unwrap(),
            inline_section: Regex::new(&format!(r"(?i)\b(?:{SECTIONS})\s*:?\s*-{{3,}}")).unwrap(),
            section_header: Regex::new(&format!(r"(?i)^\s*(?:{SECTIONS})\s*:?\s*$")).unwrap(),
            dashes: Regex::new(r"^\s*-{3,}\s*$").unwrap(),
            param_line: Regex::new(r"^\s*\**[A-Za-z_][\w, *]*\s:").unwrap(),
            demo_noise: Regex::new(r"(?i)\b(?:true|false|none)\b|-?\d+(?:\.\d+)?(?:e-?\d+)?|->|=>|[\[\]{}(),.:;'\x22\s]").unwrap(),
            path_token: Regex::new(r"[/\\]|^\.{2,}$|\.\.\.|^[\w-]+\.[A-Za-z0-9]{1,5}\W*$|^[\w-]+[./]$|^[│├└─|`+\\-]+$").unwrap(),
        }
    })
}

/// Decodes `&amp;` repeatedly, then the common named and numeric entities.
fn decode_entities(s: &str) -> String {
    let mut cur = s.to_string();
    loop {
        let next = cur.replace("&amp;", "&");
        if next == cur {
            break;
        }
        cur = next;
    }
    cur.replace("&gt;", ">")
        .replace("&lt;", "<")
        .replace("&quot;", "\"")
        .replace("&#39;", "'")
        .replace("&#x27;", "'")
        .replace("&nbsp;", " ")
}

fn strip_urls(text: &str, report: &mut CleanReport) -> String {
    let p = patterns();
    let mut out = String::with_capacity(text.len());
    let mut last = 0;
    for m in p.url.find_iter(text) {
        out.push_str(&text[last..m.start()]);
        report.hit(Rule::Url, m.as_str().chars().count());
        last = m.end();
    }
    out.push_str(&text[last..]);
    out
}

/// A line with no prose: only literals, brackets, punctuation and arrows.
fn is_demonstration_line(line: &str) -> bool {
    let p = patterns();
    let has_shape = line.contains("->") || line.contains("=>") || line.contains('[') || line.contains('{');
    has_shape && p.demo_noise.replace_all(line, "").trim().is_empty()
}

fn strip_doctests(text: &str, report: &mut CleanReport) -> String {
    let lines: Vec<&str> = text.split('\n').collect();
    let mut kept: Vec<String> = Vec::with_capacity(lines.len());
    let mut in_output = false;
    for line in lines {
        if let Some(pos) = line.find(">>>") {
            let removed = &line[pos..];
            report.hit(Rule::Doctest, removed.chars().count());
            kept.push(line[..pos].to_string());
            in_output = true;
            continue;
        }
        if in_output {
            if line.trim().is_empty() {
                in_output = false;
            } else {
                report.hit(Rule::Doctest, line.chars().count());
                kept.push(String::new());
                continue;
            }
        }
        if is_demonstration_line(line) {
            report.hit(Rule::Doctest, line.chars().count());
            kept.push(String::new());
            continue;
        }
        kept.push(line.to_string());
    }
    kept.join("\n")
}

fn is_listing_line(line: &str) -> bool {
    let p = patterns();
    let words: Vec<&str> = line.split_whitespace().collect();
    if words.is_empty() {
        return false;
    }
    let pathy = words.iter().filter(|w| p.path_token.is_match(w)).count();
    let has_file = words
        .iter()
        .any(|w| w.contains('/') || w.contains('\\') || w.trim_end_matches('.').contains('.'));
    has_file && pathy * 2 >= words.len()
}

fn is_listing_header(line: &str) -> bool {
    let t = line.trim();
    t.ends_with(':') && t.split_whitespace().count() <= 3 && t.to_lowercase().contains("structure")
}

fn strip_directory_listings(text: &str, report: &mut CleanReport) -> String {
    let lines: Vec<&str> = text.split('\n').collect();
    let mut remove = vec![false; lines.len()];
    let mut i = 0;
    while i < lines.len() {
        let header = is_listing_header(lines[i]);
        let start = i;
        let mut j = if header { i + 1 } else { i };
        while j < lines.len() && is_listing_line(lines[j]) {
            j += 1;
        }
        let listing = j - if header { i + 1 } else { i };
        let block_len = j - start;
        if block_len >= 2 && listing >= 1 {
            for r in &mut remove[start..j] {
                *r = true;
            }
            let chars: usize = lines[start..j].iter().map(|l| l.chars().count()).sum();
            report.hit(Rule::DirectoryListing, chars);
            i = j;
        } else {
            i += 1;
        }
    }
    lines
        .iter()
        .zip(remove)
        .map(|(l, r)| if r { "" } else { *l })
        .collect::<Vec<_>>()
        .join("\n")
}

/// Lines continuing a parameter section after its underline.
fn section_end(lines: &[&str], mut j: usize) -> usize {
    let p = patterns();
    while j < lines.len() {
        if lines[j].trim().is_empty() {
            let next = lines[j + 1..].iter().find(|l| !l.trim().is_empty());
            match next {
                Some(n) if n.starts_with([' ', '\t']) || p.param_line.is_match(n) => j += 1,
                Some(n) if p.section_header.is_match(n) => j += 1,
                _ => return j,
            }
        } else {
            j += 1;
        }
    }
    j
}

fn strip_parameter_tables(text: &str, report: &mut CleanReport) -> String {
    let p = patterns();
    let lines: Vec<&str> = text.split('\n').collect();
    let mut out: Vec<&str> = Vec::with_capacity(lines.len());
    let mut i = 0;
    while i < lines.len() {
        let underlined = p.section_header.is_match(lines[i])
            && lines.get(i + 1).is_some_and(|n| p.dashes.is_match(n));
        if underlined {
            let end = section_end(&lines, i + 2);
            let chars: usize = lines[i..end].iter().map(|l| l.chars().count() + 1).sum::<usize>() - 1;
            report.hit(Rule::ParameterTable, chars);
            out.extend(std::iter::repeat_n("", end - i));
            i = end;
        } else {
            out.push(lines[i]);
            i += 1;
        }
    }
    let mut text = out.join("\n");

    // Flattened sections (`Parameters ---------- x : int`), possibly split
    // across lines.
    while let Some(m) = p.inline_section.find(&text) {
        let lines: Vec<&str> = text[m.start()..].split('\n').collect();
        let end_line = section_end(&lines, text[m.start()..m.end()].matches('\n').count() + 1);
        let tail: usize = lines[..end_line].iter().map(|l| l.len() + 1).sum::<usize>() - 1;
        let cut = (m.start() + tail).min(text.len());
        report.hit(Rule::ParameterTable, text[m.start()..cut].chars().count());
        text = format!("{}{}", &text[..m.start()], &text[cut..]);
    }
    text
}

fn collapse_whitespace(text: &str, report: &mut CleanReport) -> String {
    let collapsed = text.split_whitespace().collect::<Vec<_>>().join(" ");
    report.hit(
        Rule::Whitespace,
        text.chars().count() - collapsed.chars().count(),
    );
    collapsed
}

pub fn word_count(text: &str) -> usize {
    text.split_whitespace()
        .filter(|w| w.chars().any(|c| c.is_alphanumeric()))
        .count()
}

/// Cleans one description. Total; never fails.
pub fn clean_doc(doc: &str) -> (String, CleanReport) {
    let mut report = CleanReport {
        before_len: doc.chars().count(),
        ..CleanReport::default()
    };
    let decoded = decode_entities(doc);
    report.decoded_chars = report.before_len - decoded.chars().count();
    let text = strip_urls(&decoded, &mut report);
    let text = strip_doctests(&text, &mut report);
    let text = strip_directory_listings(&text, &mut report);
    let text = strip_parameter_tables(&text, &mut report);
    let text = collapse_whitespace(&text, &mut report);
    report.after_len = text.chars().count();
    report.dropped = word_count(&text) < MIN_WORDS;
    (text, report)
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusReport {
    pub records_in: usize,
    pub records_out: usize,
    pub dropped: usize,
    pub changed: usize,
    pub rules: BTreeMap<Rule, RuleHits>,
}

/// Cleans every description; dropped records are excluded.
pub fn clean_corpus(records: &[PairRecord]) -> (Vec<PairRecord>, CorpusReport) {
    let mut agg = CorpusReport {
        records_in: records.len(),
        ..CorpusReport::default()
    };
    let mut out = Vec::with_capacity(records.len());
    for r in records {
        let (doc, report) = clean_doc(&r.doc);
        for (rule, hits) in &report.rules_fired {
            let a = agg.rules.entry(*rule).or_default();
            a.spans += hits.spans;
            a.chars += hits.chars;
        }
        if report.dropped {
            agg.dropped += 1;
            continue;
        }
        if doc != r.doc {
            agg.changed += 1;
        }
        out.push(PairRecord {
            doc,
            ..r.clone()
        });
    }
    agg.records_out = out.len();
    (out, agg)
}
