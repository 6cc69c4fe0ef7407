#!/usr/bin/env python3
"""Regenerate the golden corpus under testdata/golden.

Writes NNN.py snippets (synthetic family plus hand-written edge cases) and,
for each, NNN.pytok: the token texts reported by Python's own tokenizer,
with every string literal replaced by STR and layout tokens dropped. The
component-tagged NNN.tokens files are written by the Rust side
(`cargo run -p clcp-core --example golden_tokens`).

Usage: tools/golden.py SYNTH.jsonl OUT_DIR
"""
import io
import json
import sys
import tokenize
from pathlib import Path

EDGE_CASES = [
    "import os\nimport sys as system\nfrom collections import OrderedDict, defaultdict\n",
    "from os.path import join as pjoin\n\ndef full(root, name):\n    return pjoin(root, name)\n",
    "class Stack(object):\n    def __init__(self):\n        self.items = []\n\n    def push(self, item):\n        self.items.append(item)\n\n    def pop(self):\n        return self.items.pop()\n",
    "class Point:\n    __slots__ = ('x', 'y')\n\n    def __repr__(self):\n        return f\"Point({self.x}, {self.y})\"\n",
    "class Base(dict):\n    def __init__(self, *args, **kwargs):\n        super().__init__(*args, **kwargs)\n",
    "@staticmethod\ndef helper(a, b=2, *rest, key=None, **extra):\n    return a + b\n",
    "@property\ndef area(self):\n    return self.width * self.height\n",
    "def squares(n):\n    return [i ** 2 for i in range(n) if i % 2 == 0]\n",
    "def invert(d):\n    return {v: k for k, v in d.items()}\n",
    "def uniq(xs):\n    return {x for x in xs}\n",
    "def gen(n):\n    total = 0\n    for i in range(n):\n        total += i\n        yield total\n",
    "def apply(fn, xs):\n    return list(map(lambda x: fn(x) * 2, xs))\n",
    "def safe_div(a, b):\n    try:\n        return a / b\n    except ZeroDivisionError as err:\n        raise ValueError('bad divisor') from err\n    finally:\n        pass\n",
    "def read_all(path):\n    with open(path, 'rb') as fh:\n        data = fh.read()\n    return data\n",
    "async def fetch(session, url):\n    async with session.get(url) as resp:\n        return await resp.json()\n",
    "def counter():\n    count = 0\n    def inc():\n        nonlocal count\n        count += 1\n        return count\n    return inc\n",
    "TOTAL = 0\n\ndef bump():\n    global TOTAL\n    TOTAL = TOTAL + 1\n",
    "def numbers():\n    return [0x1F, 0o17, 0b1010, 1_000_000, 3.14, 1e-3, 2.5j, .5, 10.]\n",
    "def shifts(a, b):\n    a <<= 2\n    b >>= 1\n    a //= 3\n    b **= 2\n    a ^= b\n    return a | b & ~a\n",
    "def compare(a, b):\n    return a <= b and a != b or not a >= b\n",
    "def walrus(items):\n    if (n := len(items)) > 10:\n        return n\n    return -1\n",
    "def annotated(x: int, y: str = 'a') -> bool:\n    return isinstance(x, int)\n",
    "def matmul(a, b):\n    return a @ b\n",
    "def long_line(a, b, c):\n    return a + \\\n        b + \\\n        c\n",
    "def semis():\n    a = 1; b = 2; return a + b\n",
    "def tabs(x):\n\tif x:\n\t\treturn x\n\treturn None\n",
    "def commented(x):\n    # leading comment\n    y = x + 1  # trailing comment\n    return y\n",
    "def docstring(x):\n    \"\"\"Return x unchanged.\n\n    Multi-line docstring with 'quotes' inside.\n    \"\"\"\n    return x\n",
    "def raw_and_bytes():\n    return [r'\\d+', b'abc', rb'\\x00', u'text', '']\n",
    "def slices(xs):\n    return xs[1:-1], xs[::2], xs[:, 0] if False else xs[-1]\n",
    "def chained(s):\n    return s.strip().lower().replace('a', 'b').split(',')\n",
    "def calls(f):\n    return f()(1)[0]\n",
    "def attrs(obj):\n    return obj.value + obj.child.value\n",
    "def user_calls(client, data):\n    client.send_payload(data)\n    return client.response_code\n",
    "def ternary(x):\n    return 'pos' if x > 0 else 'neg' if x < 0 else 'zero'\n",
    "def unicode_names(\u00e9l\u00e8ve):\n    \u00e9t\u00e9 = \u00e9l\u00e8ve * 2\n    return \u00e9t\u00e9\n",
    "def asserts(x):\n    assert x is not None, 'x missing'\n    del x\n",
    "def loops(xs):\n    while xs:\n        x = xs.pop()\n        if x in (1, 2):\n            continue\n        elif x == 3:\n            break\n    else:\n        return True\n    return False\n",
    "def fmt(name, n):\n    return f'{name!r}: {n:>10.2f}' + 'done'\n",
    "def kwcall(d):\n    return dict(a=1, **d)\n",
    "class Meta(type):\n    def __new__(mcs, name, bases, ns):\n        return type.__new__(mcs, name, bases, ns)\n",
    "def exceptions():\n    try:\n        import json\n    except (ImportError, KeyError):\n        json = None\n    return json\n",
]


def oracle_tokens(src: str) -> list:
    out = []
    skip = {tokenize.NEWLINE, tokenize.NL, tokenize.INDENT, tokenize.DEDENT,
            tokenize.COMMENT, tokenize.ENDMARKER, tokenize.ENCODING}
    for tok in tokenize.generate_tokens(io.StringIO(src).readline):
        if tok.type in skip:
            continue
        out.append("STR" if tok.type == tokenize.STRING else tok.string)
    return out


def main() -> None:
    synth_path, out_dir = Path(sys.argv[1]), Path(sys.argv[2])
    out_dir.mkdir(parents=True, exist_ok=True)
    snippets, seen = [], set()
    for line in synth_path.read_text().splitlines():
        code = json.loads(line)["code"]
        if code not in seen:
            seen.add(code)
            snippets.append(code)
    snippets += EDGE_CASES
    for i, src in enumerate(snippets):
        (out_dir / f"{i:03}.py").write_text(src)
        toks = oracle_tokens(src)
        (out_dir / f"{i:03}.pytok").write_text("".join(t + "\n" for t in toks))
    print(f"{len(snippets)} snippets -> {out_dir}")


if __name__ == "__main__":
    main()
