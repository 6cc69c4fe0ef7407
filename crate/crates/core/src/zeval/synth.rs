//! Template-generated (code, description) pairs.
//!
//! An instantiation is the tuple (template, variable, constant, doc
//! variant, code variant, function name). Tuples whose FNV-1a hash is
//! divisible by 10 are reserved for testing, so train and test samples
//! never share an instantiation.

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::ingest::PairRecord;
use crate::pylex::{tokenize, ComponentClass};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    List,
    Str,
    Dict,
    Num,
}

struct Template {
    name: &'static str,
    kind: Kind,
    /// Inclusive range of `{n}`; `None` when the template has no constant.
    consts: Option<(u32, u32)>,
    fnames: &'static [&'static str],
    codes: &'static [&'static str],
    docs: &'static [&'static str],
}

const LIST_VARS: &[(&str, &str)] = &[
    ("values", "values"),
    ("numbers", "numbers"),
    ("items", "items"),
    ("data", "data"),
    ("scores", "scores"),
    ("prices", "prices"),
    ("xs", "list"),
    ("arr", "array"),
    ("nums", "numbers"),
    ("seq", "sequence"),
    ("elements", "elements"),
    ("records", "records"),
];

const STR_VARS: &[(&str, &str)] = &[
    ("text", "text"),
    ("name", "name"),
    ("line", "line"),
    ("s", "string"),
    ("word", "word"),
    ("message", "message"),
    ("title", "title"),
    ("label", "label"),
    ("sentence", "sentence"),
    ("raw", "input"),
    ("content", "content"),
    ("path", "path"),
];

const DICT_VARS: &[(&str, &str)] = &[
    ("mapping", "mapping"),
    ("table", "table"),
    ("config", "config"),
    ("d", "dictionary"),
    ("lookup", "lookup table"),
    ("settings", "settings"),
    ("counts", "counts"),
    ("index", "index"),
    ("cache", "cache"),
    ("registry", "registry"),
    ("options", "options"),
    ("params", "parameters"),
];

const NUM_VARS: &[(&str, &str)] = &[
    ("x", "number"),
    ("n", "value"),
    ("value", "value"),
    ("num", "number"),
    ("base", "base"),
    ("amount", "amount"),
    ("total", "total"),
    ("size", "size"),
    ("count", "count"),
    ("k", "integer"),
    ("score", "score"),
    ("level", "level"),
];

impl Kind {
    fn vars(self) -> &'static [(&'static str, &'static str)] {
        match self {
            Kind::List => LIST_VARS,
            Kind::Str => STR_VARS,
            Kind::Dict => DICT_VARS,
            Kind::Num => NUM_VARS,
        }
    }
}

const TEMPLATES: &[Template] = &[
    Template {
        name: "max",
        kind: Kind::List,
        consts: None,
        fnames: &["get_max", "find_max", "largest", "max_value"],
        codes: &[
            "def {f}({v}):\n    return max({v})\n",
            "def {f}({v}):\n    best = {v}[0]\n    for item in {v}:\n        if item > best:\n            best = item\n    return best\n",
        ],
        docs: &[
            "Return the maximum of the {noun}.",
            "Find the largest value in {noun}.",
            "Get the biggest element of the given {noun}.",
        ],
    },
    Template {
        name: "min",
        kind: Kind::List,
        consts: None,
        fnames: &["get_min", "find_min", "smallest", "min_value"],
        codes: &[
            "def {f}({v}):\n    return min({v})\n",
            "def {f}({v}):\n    best = {v}[0]\n    for item in {v}:\n        if item < best:\n            best = item\n    return best\n",
        ],
        docs: &[
            "Return the minimum of the {noun}.",
            "Find the smallest value in {noun}.",
            "Get the lowest element of the given {noun}.",
        ],
    },
    Template {
        name: "sum",
        kind: Kind::List,
        consts: None,
        fnames: &["total", "sum_all", "add_up", "compute_sum"],
        codes: &[
            "def {f}({v}):\n    return sum({v})\n",
            "def {f}({v}):\n    total = 0\n    for item in {v}:\n        total += item\n    return total\n",
        ],
        docs: &[
            "Compute the sum of the {noun}.",
            "Add up all {noun}.",
            "Return the total of every value in {noun}.",
        ],
    },
    Template {
        name: "count",
        kind: Kind::List,
        consts: None,
        fnames: &["count_items", "size_of", "length", "how_many"],
        codes: &[
            "def {f}({v}):\n    return len({v})\n",
            "def {f}({v}):\n    count = 0\n    for _ in {v}:\n        count += 1\n    return count\n",
        ],
        docs: &[
            "Count how many items are in {noun}.",
            "Return the number of elements in the {noun}.",
            "Get the length of {noun}.",
        ],
    },
    Template {
        name: "sort_asc",
        kind: Kind::List,
        consts: None,
        fnames: &["sort_values", "ascending", "order", "sorted_copy"],
        codes: &[
            "def {f}({v}):\n    return sorted({v})\n",
            "def {f}({v}):\n    {v}.sort()\n    return {v}\n",
        ],
        docs: &[
            "Sort the {noun} in ascending order.",
            "Return the {noun} ordered from small to large.",
            "Arrange {noun} in increasing order.",
        ],
    },
    Template {
        name: "sort_desc",
        kind: Kind::List,
        consts: None,
        fnames: &["sort_reverse", "descending", "rank", "sorted_desc"],
        codes: &[
            "def {f}({v}):\n    return sorted({v}, reverse=True)\n",
            "def {f}({v}):\n    {v}.sort(reverse=True)\n    return {v}\n",
        ],
        docs: &[
            "Sort the {noun} in descending order.",
            "Return the {noun} ordered from large to small.",
            "Arrange {noun} in decreasing order.",
        ],
    },
    Template {
        name: "filter_gt",
        kind: Kind::List,
        consts: Some((0, 20)),
        fnames: &["above", "filter_large", "greater_than", "keep_big"],
        codes: &[
            "def {f}({v}):\n    return [item for item in {v} if item > {n}]\n",
            "def {f}({v}):\n    result = []\n    for item in {v}:\n        if item > {n}:\n            result.append(item)\n    return result\n",
        ],
        docs: &[
            "Keep only {noun} greater than {n}.",
            "Filter the {noun} to values above {n}.",
            "Return the elements of {noun} that exceed {n}.",
        ],
    },
    Template {
        name: "filter_lt",
        kind: Kind::List,
        consts: Some((0, 20)),
        fnames: &["below", "filter_small", "less_than", "keep_small"],
        codes: &[
            "def {f}({v}):\n    return [item for item in {v} if item < {n}]\n",
            "def {f}({v}):\n    result = []\n    for item in {v}:\n        if item < {n}:\n            result.append(item)\n    return result\n",
        ],
        docs: &[
            "Keep only {noun} less than {n}.",
            "Filter the {noun} to values below {n}.",
            "Return the elements of {noun} smaller than {n}.",
        ],
    },
    Template {
        name: "scale",
        kind: Kind::List,
        consts: Some((0, 20)),
        fnames: &["scale", "multiply", "times", "scaled"],
        codes: &[
            "def {f}({v}):\n    return [item * {n} for item in {v}]\n",
            "def {f}({v}):\n    return list(map(lambda item: item * {n}, {v}))\n",
        ],
        docs: &[
            "Multiply every element of {noun} by {n}.",
            "Scale the {noun} by a factor of {n}.",
            "Return each value in {noun} times {n}.",
        ],
    },
    Template {
        name: "shift",
        kind: Kind::List,
        consts: Some((0, 20)),
        fnames: &["shift", "offset", "increment", "add_to_all"],
        codes: &[
            "def {f}({v}):\n    return [item + {n} for item in {v}]\n",
            "def {f}({v}):\n    return list(map(lambda item: item + {n}, {v}))\n",
        ],
        docs: &[
            "Add {n} to every element of {noun}.",
            "Increase each value in {noun} by {n}.",
            "Shift the {noun} up by {n}.",
        ],
    },
    Template {
        name: "upper",
        kind: Kind::Str,
        consts: None,
        fnames: &["to_upper", "shout", "capitalize_all", "upper_case"],
        codes: &[
            "def {f}({v}):\n    return {v}.upper()\n",
            "def {f}({v}):\n    return ''.join(ch.upper() for ch in {v})\n",
        ],
        docs: &[
            "Convert the {noun} to uppercase.",
            "Return the {noun} in capital letters.",
            "Make every character of the {noun} upper case.",
        ],
    },
    Template {
        name: "lower",
        kind: Kind::Str,
        consts: None,
        fnames: &["to_lower", "quiet", "normalize_case", "lower_case"],
        codes: &[
            "def {f}({v}):\n    return {v}.lower()\n",
            "def {f}({v}):\n    return ''.join(ch.lower() for ch in {v})\n",
        ],
        docs: &[
            "Convert the {noun} to lowercase.",
            "Return the {noun} in small letters.",
            "Make every character of the {noun} lower case.",
        ],
    },
    Template {
        name: "strip",
        kind: Kind::Str,
        consts: None,
        fnames: &["trim", "clean", "strip_spaces", "tidy"],
        codes: &[
            "def {f}({v}):\n    return {v}.strip()\n",
            "def {f}({v}):\n    return {v}.lstrip().rstrip()\n",
        ],
        docs: &[
            "Remove leading and trailing whitespace from the {noun}.",
            "Trim spaces around the {noun}.",
            "Strip surrounding blanks from {noun}.",
        ],
    },
    Template {
        name: "split",
        kind: Kind::Str,
        consts: None,
        fnames: &["words", "tokenize", "split_words", "to_words"],
        codes: &[
            "def {f}({v}):\n    return {v}.split()\n",
            "def {f}({v}):\n    return [part for part in {v}.split(' ') if part]\n",
        ],
        docs: &[
            "Split the {noun} into words.",
            "Break the {noun} into a list of words.",
            "Tokenize {noun} on whitespace.",
        ],
    },
    Template {
        name: "join",
        kind: Kind::List,
        consts: None,
        fnames: &["join_all", "concat", "combine", "to_string"],
        codes: &[
            "def {f}({v}):\n    return ' '.join({v})\n",
            "def {f}({v}):\n    return ' '.join(str(item) for item in {v})\n",
        ],
        docs: &[
            "Join the {noun} with spaces.",
            "Concatenate the {noun} into one string.",
            "Combine all {noun} into a single string.",
        ],
    },
    Template {
        name: "get_default",
        kind: Kind::Dict,
        consts: Some((0, 20)),
        fnames: &["lookup", "get_or_default", "fetch", "value_for"],
        codes: &[
            "def {f}({v}, key):\n    return {v}.get(key, {n})\n",
            "def {f}({v}, key):\n    if key in {v}:\n        return {v}[key]\n    return {n}\n",
        ],
        docs: &[
            "Look up key in the {noun} with default {n}.",
            "Return the value for key from {noun} or {n} if missing.",
            "Get key from {noun}, falling back to {n}.",
        ],
    },
    Template {
        name: "has_key",
        kind: Kind::Dict,
        consts: None,
        fnames: &["has_key", "contains", "is_present", "exists"],
        codes: &[
            "def {f}({v}, key):\n    return key in {v}\n",
            "def {f}({v}, key):\n    return {v}.get(key) is not None\n",
        ],
        docs: &[
            "Check whether key is present in the {noun}.",
            "Return true if the {noun} contains key.",
            "Test if key exists in {noun}.",
        ],
    },
    Template {
        name: "mean",
        kind: Kind::List,
        consts: None,
        fnames: &["average", "mean", "avg", "compute_mean"],
        codes: &[
            "def {f}({v}):\n    return sum({v}) / len({v})\n",
            "def {f}({v}):\n    total = sum({v})\n    count = len({v})\n    return total / count if count else 0\n",
        ],
        docs: &[
            "Compute the average of the {noun}.",
            "Return the mean value of {noun}.",
            "Calculate the arithmetic mean of the {noun}.",
        ],
    },
    Template {
        name: "is_empty",
        kind: Kind::List,
        consts: None,
        fnames: &["is_empty", "empty", "has_nothing", "blank"],
        codes: &[
            "def {f}({v}):\n    return len({v}) == 0\n",
            "def {f}({v}):\n    return not {v}\n",
        ],
        docs: &[
            "Check if the {noun} is empty.",
            "Return true when {noun} has no elements.",
            "Test whether the {noun} contains nothing.",
        ],
    },
    Template {
        name: "first",
        kind: Kind::List,
        consts: None,
        fnames: &["first", "head", "front", "leading"],
        codes: &[
            "def {f}({v}):\n    return {v}[0]\n",
            "def {f}({v}):\n    for item in {v}:\n        return item\n    return None\n",
        ],
        docs: &[
            "Return the first element of {noun}.",
            "Get the head of the {noun}.",
            "Take the leading item from {noun}.",
        ],
    },
    Template {
        name: "last",
        kind: Kind::List,
        consts: None,
        fnames: &["last", "tail", "final", "trailing"],
        codes: &[
            "def {f}({v}):\n    return {v}[-1]\n",
            "def {f}({v}):\n    return {v}[len({v}) - 1]\n",
        ],
        docs: &[
            "Return the last element of {noun}.",
            "Get the final item of the {noun}.",
            "Take the trailing value from {noun}.",
        ],
    },
    Template {
        name: "unique",
        kind: Kind::List,
        consts: None,
        fnames: &["unique", "dedupe", "distinct", "remove_duplicates"],
        codes: &[
            "def {f}({v}):\n    return list(set({v}))\n",
            "def {f}({v}):\n    seen = []\n    for item in {v}:\n        if item not in seen:\n            seen.append(item)\n    return seen\n",
        ],
        docs: &[
            "Remove duplicates from the {noun}.",
            "Return the distinct values of {noun}.",
            "Deduplicate the {noun}.",
        ],
    },
    Template {
        name: "power",
        kind: Kind::Num,
        consts: Some((0, 20)),
        fnames: &["power", "raise_to", "exponent", "pow_n"],
        codes: &[
            "def {f}({v}):\n    return {v} ** {n}\n",
            "def {f}({v}):\n    return pow({v}, {n})\n",
        ],
        docs: &[
            "Raise the {noun} to the power {n}.",
            "Return {noun} to the exponent {n}.",
            "Compute the {n}th power of the {noun}.",
        ],
    },
    Template {
        name: "divisible",
        kind: Kind::Num,
        consts: Some((2, 20)),
        fnames: &["divisible", "is_multiple", "divides", "check_factor"],
        codes: &[
            "def {f}({v}):\n    return {v} % {n} == 0\n",
            "def {f}({v}):\n    return not {v} % {n}\n",
        ],
        docs: &[
            "Check if the {noun} is divisible by {n}.",
            "Return true when {noun} is a multiple of {n}.",
            "Test whether {n} divides the {noun}.",
        ],
    },
    Template {
        name: "read_file",
        kind: Kind::Str,
        consts: None,
        fnames: &["read_file", "load", "slurp", "file_contents"],
        codes: &[
            "def {f}({v}):\n    with open({v}) as handle:\n        return handle.read()\n",
            "def {f}({v}):\n    handle = open({v})\n    content = handle.read()\n    handle.close()\n    return content\n",
        ],
        docs: &[
            "Read the contents of the file at {noun}.",
            "Load the text from the {noun} file.",
            "Return everything stored in the file {noun}.",
        ],
    },
    Template {
        name: "abs",
        kind: Kind::List,
        consts: None,
        fnames: &["absolute", "magnitudes", "abs_all", "unsigned"],
        codes: &[
            "def {f}({v}):\n    return [abs(item) for item in {v}]\n",
            "def {f}({v}):\n    return list(map(abs, {v}))\n",
        ],
        docs: &[
            "Take the absolute value of each element in {noun}.",
            "Return {noun} with signs removed.",
            "Make every value of {noun} non negative.",
        ],
    },
    Template {
        name: "span",
        kind: Kind::Num,
        consts: Some((1, 20)),
        fnames: &["span", "count_from", "consecutive", "run_of"],
        codes: &[
            "def {f}({v}):\n    return list(range({v}, {v} + {n}))\n",
            "def {f}({v}):\n    return [{v} + step for step in range({n})]\n",
        ],
        docs: &[
            "List {n} consecutive integers starting at {noun}.",
            "Return the next {n} numbers from {noun}.",
            "Build a run of {n} integers beginning with the {noun}.",
        ],
    },
    Template {
        name: "index_of",
        kind: Kind::List,
        consts: None,
        fnames: &["index_of", "find", "position", "locate"],
        codes: &[
            "def {f}({v}, target):\n    return {v}.index(target)\n",
            "def {f}({v}, target):\n    for position, item in enumerate({v}):\n        if item == target:\n            return position\n    return -1\n",
        ],
        docs: &[
            "Find the position of target in {noun}.",
            "Return the index where target occurs in the {noun}.",
            "Locate target within {noun}.",
        ],
    },
    Template {
        name: "clamp",
        kind: Kind::Num,
        consts: Some((1, 20)),
        fnames: &["clamp", "limit", "bound", "restrict"],
        codes: &[
            "def {f}({v}):\n    return min(max({v}, 0), {n})\n",
            "def {f}({v}):\n    if {v} < 0:\n        return 0\n    if {v} > {n}:\n        return {n}\n    return {v}\n",
        ],
        docs: &[
            "Clamp the {noun} between 0 and {n}.",
            "Limit {noun} to the range 0 to {n}.",
            "Restrict the {noun} so it stays within 0 and {n}.",
        ],
    },
    Template {
        name: "underscore",
        kind: Kind::Str,
        consts: None,
        fnames: &["snake", "underscore", "slugify", "join_underscore"],
        codes: &[
            "def {f}({v}):\n    return {v}.replace(' ', '_')\n",
            "def {f}({v}):\n    return '_'.join({v}.split(' '))\n",
        ],
        docs: &[
            "Replace spaces in the {noun} with underscores.",
            "Turn blanks in {noun} into underscores.",
            "Convert the {noun} to snake case by swapping spaces for underscores.",
        ],
    },
    Template {
        name: "prefix",
        kind: Kind::Str,
        consts: None,
        fnames: &["has_prefix", "starts", "begins_with", "check_prefix"],
        codes: &[
            "def {f}({v}, prefix):\n    return {v}.startswith(prefix)\n",
            "def {f}({v}, prefix):\n    return {v}[:len(prefix)] == prefix\n",
        ],
        docs: &[
            "Check whether the {noun} begins with prefix.",
            "Return true if {noun} starts with the prefix.",
            "Test if prefix is at the start of the {noun}.",
        ],
    },
    Template {
        name: "sorted_keys",
        kind: Kind::Dict,
        consts: None,
        fnames: &["sorted_keys", "key_list", "ordered_keys", "keys_sorted"],
        codes: &[
            "def {f}({v}):\n    return sorted({v}.keys())\n",
            "def {f}({v}):\n    keys = list({v})\n    keys.sort()\n    return keys\n",
        ],
        docs: &[
            "Return the keys of {noun} in sorted order.",
            "List the sorted keys of the {noun}.",
            "Get all {noun} keys alphabetically.",
        ],
    },
    Template {
        name: "invert",
        kind: Kind::Dict,
        consts: None,
        fnames: &["invert", "swap", "reverse_map", "flip"],
        codes: &[
            "def {f}({v}):\n    return {value: key for key, value in {v}.items()}\n",
            "def {f}({v}):\n    result = {}\n    for key, value in {v}.items():\n        result[value] = key\n    return result\n",
        ],
        docs: &[
            "Invert the {noun} so values map to keys.",
            "Swap keys and values in the {noun}.",
            "Return a reversed mapping of {noun}.",
        ],
    },
    Template {
        name: "repeat",
        kind: Kind::Str,
        consts: Some((1, 20)),
        fnames: &["repeat", "duplicate", "times", "replicate"],
        codes: &[
            "def {f}({v}):\n    return {v} * {n}\n",
            "def {f}({v}):\n    return ''.join([{v}] * {n})\n",
        ],
        docs: &[
            "Repeat the {noun} {n} times.",
            "Return {n} copies of {noun} joined together.",
            "Duplicate the {noun} {n} times in a row.",
        ],
    },
];

/// Number of templates in the family.
pub fn template_count() -> usize {
    TEMPLATES.len()
}

/// Number of structurally distinct code shapes (template x code variant).
pub fn structure_count() -> usize {
    TEMPLATES.iter().map(|t| t.codes.len()).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
struct Inst {
    template: usize,
    var: usize,
    n: u32,
    doc: usize,
    code: usize,
    fname: usize,
}

impl Inst {
    fn key(&self) -> String {
        format!(
            "{}|{}|{}|{}|{}|{}",
            self.template, self.var, self.n, self.doc, self.code, self.fname
        )
    }

    fn is_test(&self) -> bool {
        fnv1a(self.key().as_bytes()) % 10 == 0
    }

    fn render(&self) -> PairRecord {
        let t = &TEMPLATES[self.template];
        let (var, noun) = t.kind.vars()[self.var];
        let n = self.n.to_string();
        let code = t.codes[self.code]
            .replace("{f}", t.fnames[self.fname])
            .replace("{v}", var)
            .replace("{n}", &n);
        let doc = t.docs[self.doc].replace("{noun}", noun).replace("{n}", &n);
        PairRecord::new(format!("synth-{}-{:016x}", t.name, fnv1a(self.key().as_bytes())), code, doc)
    }

    fn random(rng: &mut ChaCha8Rng, template: usize) -> Self {
        let t = &TEMPLATES[template];
        Inst {
            template,
            var: rng.random_range(0..t.kind.vars().len()),
            n: t.consts.map_or(0, |(lo, hi)| rng.random_range(lo..=hi)),
            doc: rng.random_range(0..t.docs.len()),
            code: rng.random_range(0..t.codes.len()),
            fname: rng.random_range(0..t.fnames.len()),
        }
    }
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SynthSplit {
    Train,
    Test,
}

/// `n` distinct instantiations from one side of the held-out boundary,
/// templates drawn uniformly.
pub fn synth_pairs(n: usize, split: SynthSplit, seed: u64) -> Result<Vec<PairRecord>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seen = HashSet::new();
    let mut out = Vec::with_capacity(n);
    let budget = n.saturating_mul(200).max(10_000);
    for _ in 0..budget {
        if out.len() == n {
            break;
        }
        let t = rng.random_range(0..TEMPLATES.len());
        let inst = Inst::random(&mut rng, t);
        if inst.is_test() == (split == SynthSplit::Test) && seen.insert(inst) {
            out.push(inst.render());
        }
    }
    if out.len() < n {
        return Err(Error::Plan(format!("synthetic family exhausted after {} pairs", out.len())));
    }
    Ok(out)
}

/// `n` pairs whose code has pairwise-distinct component-class sequences,
/// so no two images share a token layout.
pub fn synth_distinct(n: usize, seed: u64) -> Result<Vec<PairRecord>> {
    let mut shapes: Vec<(usize, usize)> = TEMPLATES
        .iter()
        .enumerate()
        .flat_map(|(t, tpl)| (0..tpl.codes.len()).map(move |c| (t, c)))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    shapes.shuffle(&mut rng);
    let mut layouts = HashSet::new();
    let mut out = Vec::with_capacity(n);
    for (t, c) in shapes {
        if out.len() == n {
            break;
        }
        let mut inst = Inst::random(&mut rng, t);
        inst.code = c;
        // two pairs of one template get different doc phrasings
        inst.doc = c % TEMPLATES[t].docs.len();
        let rec = inst.render();
        let layout: Vec<ComponentClass> = tokenize(&rec.code)?.iter().map(|k| k.component).collect();
        if layouts.insert(layout) {
            out.push(rec);
        }
    }
    if out.len() < n {
        return Err(Error::Plan(format!("only {} distinct layouts available", out.len())));
    }
    Ok(out)
}
