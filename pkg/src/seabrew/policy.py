"""Threshold-gate access policies.

Policy text grammar::

    expr   := term ("or" term)*
    term   := factor ("and" factor)*
    factor := attr | "(" expr ")" | INT "of" "(" expr ("," expr)* ")"
    attr   := identifier | "quoted string"

``and`` binds tighter than ``or``.  An unparenthesised chain ``a and b and c``
becomes a single 3-of-3 gate; parentheses keep nesting.  Node indexes are
assigned in pre-order starting at 1 (the root), and children keep source order.
"""

from __future__ import annotations

import re
import struct
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

MAX_DEPTH = 64
_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_:.@/\-]*")
_KEYWORDS = {"and", "or", "of"}


class PolicyError(ValueError):
    """Invalid policy structure."""


class PolicySyntaxError(PolicyError):
    def __init__(self, message: str, position: int) -> None:
        super().__init__(f"{message} at position {position}")
        self.position = position


@dataclass(frozen=True, eq=False)
class PolicyNode:
    index: int
    threshold: int
    children: tuple["PolicyNode", ...] = ()
    attribute: str | None = None
    parent: int | None = None

    @property
    def is_leaf(self) -> bool:
        return self.attribute is not None

    def shape(self):
        if self.is_leaf:
            return self.attribute
        return (self.threshold, tuple(c.shape() for c in self.children))


class PolicyTree:
    """An indexed threshold-gate tree.  Equality is structural."""

    def __init__(self, root: PolicyNode) -> None:
        self.root = root
        self.nodes: dict[int, PolicyNode] = {}
        for node in _walk(root):
            self.nodes[node.index] = node
        self.leaves: tuple[PolicyNode, ...] = tuple(n for n in _walk(root) if n.is_leaf)

    # structure built from nested (threshold, children) / attribute shapes
    @classmethod
    def from_shape(cls, shape) -> "PolicyTree":
        counter = iter(range(1, 1 << 30))

        def build(s, parent, depth):
            if depth > MAX_DEPTH:
                raise PolicyError(f"policy deeper than {MAX_DEPTH} levels")
            idx = next(counter)
            if isinstance(s, str):
                if not s:
                    raise PolicyError("empty attribute name")
                return PolicyNode(idx, 1, (), s, parent)
            k, kids = s
            kids = tuple(kids)
            if not kids:
                raise PolicyError("gate without children")
            if not 1 <= k <= len(kids):
                raise PolicyError(f"threshold {k} outside 1..{len(kids)}")
            built = tuple(build(c, idx, depth + 1) for c in kids)
            return PolicyNode(idx, k, built, None, parent)

        return cls(build(shape, None, 1))

    @classmethod
    def leaf(cls, attribute: str) -> "PolicyTree":
        return cls.from_shape(attribute)

    @classmethod
    def gate(cls, threshold: int, children: Sequence) -> "PolicyTree":
        shapes = [c.root.shape() if isinstance(c, PolicyTree) else c for c in children]
        return cls.from_shape((threshold, shapes))

    def parent(self, node: PolicyNode) -> PolicyNode | None:
        return None if node.parent is None else self.nodes[node.parent]

    @property
    def num_nodes(self) -> int:
        return len(self.nodes)

    def attributes(self) -> frozenset[str]:
        return frozenset(n.attribute for n in self.leaves)

    def depth(self) -> int:
        def d(n):
            return 1 + max((d(c) for c in n.children), default=0)

        return d(self.root)

    def __len__(self) -> int:
        return len(self.leaves)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, PolicyTree):
            return NotImplemented
        return self.root.shape() == other.root.shape()

    def __hash__(self) -> int:
        return hash(self.root.shape())

    def __str__(self) -> str:
        return format_policy(self)

    def __repr__(self) -> str:
        return f"PolicyTree({format_policy(self)!r})"

    # canonical binary form: u16 count, then per pre-order node
    # u16 index, u16 k, u16 arity, u16 len, attribute bytes
    def to_bytes(self) -> bytes:
        out = [struct.pack("<H", self.num_nodes)]
        for node in _walk(self.root):
            attr = node.attribute.encode("utf-8") if node.is_leaf else b""
            out.append(struct.pack("<HHHH", node.index, node.threshold, len(node.children), len(attr)))
            out.append(attr)
        return b"".join(out)

    @classmethod
    def from_bytes(cls, data: bytes) -> "PolicyTree":
        tree, used = cls.read(data, 0)
        if used != len(data):
            raise PolicyError("trailing bytes after policy")
        return tree

    @classmethod
    def read(cls, data: bytes, offset: int) -> tuple["PolicyTree", int]:
        try:
            (count,) = struct.unpack_from("<H", data, offset)
            offset += 2
            records = []
            for _ in range(count):
                idx, k, arity, alen = struct.unpack_from("<HHHH", data, offset)
                offset += 8
                attr = bytes(data[offset : offset + alen])
                if len(attr) != alen:
                    raise PolicyError("truncated attribute")
                offset += alen
                records.append((idx, k, arity, attr.decode("utf-8") if arity == 0 else None))
        except struct.error as exc:
            raise PolicyError("truncated policy encoding") from exc
        pos = iter(records)

        def build(depth):
            try:
                idx, k, arity, attr = next(pos)
            except StopIteration:
                raise PolicyError("policy encoding ends early") from None
            if arity == 0:
                return attr
            return (k, [build(depth + 1) for _ in range(arity)])

        if not records:
            raise PolicyError("empty policy")
        tree = cls.from_shape(build(1))
        if [(n.index, n.threshold, len(n.children)) for n in _walk(tree.root)] != [
            r[:3] for r in records
        ] or next(pos, None) is not None:
            raise PolicyError("node indexes are not canonical pre-order")
        return tree, offset


def _walk(node: PolicyNode) -> Iterator[PolicyNode]:
    yield node
    for child in node.children:
        yield from _walk(child)


# -- parsing ---------------------------------------------------------------

_TOKEN = re.compile(
    r"""\s*(?:
        (?P<lp>\() | (?P<rp>\)) | (?P<comma>,) |
        (?P<str>"(?:[^"\\]|\\.)*") |
        (?P<int>\d+(?![A-Za-z_])) |
        (?P<word>[A-Za-z_][A-Za-z0-9_:.@/\-]*)
    )""",
    re.VERBOSE,
)


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while True:
        while pos < len(text) and text[pos].isspace():
            pos += 1
        if pos >= len(text):
            break
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise PolicySyntaxError(f"unexpected character {text[pos]!r}", pos)
        kind = m.lastgroup
        value = m.group(kind)
        start = m.start(kind)
        if kind == "word" and value.lower() in _KEYWORDS:
            kind = value.lower()
        elif kind == "str":
            value = re.sub(r"\\(.)", r"\1", value[1:-1])
            if not value:
                raise PolicySyntaxError("empty attribute name", start)
            kind = "attr"
        elif kind == "word":
            kind = "attr"
        tokens.append((kind, value, start))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str) -> None:
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self, kind: str):
        tok = self.tokens[self.i]
        if tok[0] != kind:
            want = {"rp": "')'", "lp": "'('", "end": "end of input"}.get(kind, kind)
            got = tok[1] or tok[0]
            raise PolicySyntaxError(f"expected {want}, found {got!r}", tok[2])
        self.i += 1
        return tok

    def expr(self, depth):
        self._check_depth(depth)
        items = [self.term(depth + 1)]
        while self.peek()[0] == "or":
            self.i += 1
            items.append(self.term(depth + 1))
        return items[0] if len(items) == 1 else (1, items)

    def term(self, depth):
        items = [self.factor(depth)]
        while self.peek()[0] == "and":
            self.i += 1
            items.append(self.factor(depth))
        return items[0] if len(items) == 1 else (len(items), items)

    def factor(self, depth):
        self._check_depth(depth)
        kind, value, pos = self.peek()
        if kind == "attr":
            self.i += 1
            return value
        if kind == "lp":
            self.i += 1
            inner = self.expr(depth)
            self.take("rp")
            return inner
        if kind == "int":
            self.i += 1
            k = int(value)
            self.take("of")
            self.take("lp")
            items = [self.expr(depth + 1)]
            while self.peek()[0] == "comma":
                self.i += 1
                items.append(self.expr(depth + 1))
            self.take("rp")
            if k < 1:
                raise PolicySyntaxError("threshold must be at least 1", pos)
            if k > len(items):
                raise PolicySyntaxError(f"threshold {k} exceeds arity {len(items)}", pos)
            return (k, items)
        raise PolicySyntaxError(f"unexpected {value or kind!r}", pos)

    def _check_depth(self, depth):
        # recursion guard only; tree depth is checked when the shape is built
        if depth > 4 * MAX_DEPTH:
            raise PolicySyntaxError("policy nested too deeply", self.peek()[2])


def parse_policy(text: str) -> PolicyTree:
    parser = _Parser(text)
    shape = parser.expr(1)
    parser.take("end")
    try:
        return PolicyTree.from_shape(shape)
    except PolicyError as exc:
        raise PolicySyntaxError(str(exc), 0) from exc


def _format_attr(attr: str) -> str:
    if _IDENT.fullmatch(attr) and attr.lower() not in _KEYWORDS:
        return attr
    return '"' + attr.replace("\\", "\\\\").replace('"', '\\"') + '"'


def format_policy(tree: PolicyTree | PolicyNode) -> str:
    """Render a tree as policy text that parses back to the same structure."""
    node = tree.root if isinstance(tree, PolicyTree) else tree

    def fmt(n: PolicyNode) -> str:
        if n.is_leaf:
            return _format_attr(n.attribute)
        parts = [fmt(c) for c in n.children]
        arity = len(parts)
        if arity >= 2 and n.threshold == arity:
            return "(" + " and ".join(parts) + ")"
        if arity >= 2 and n.threshold == 1:
            return "(" + " or ".join(parts) + ")"
        return f"{n.threshold} of (" + ", ".join(parts) + ")"

    text = fmt(node)
    if text.startswith("(") and not node.is_leaf and len(node.children) >= 2 and node.threshold in (1, len(node.children)):
        return text[1:-1]
    return text


# -- secret sharing ----------------------------------------------------------


def _eval_poly(coeffs: Sequence[int], x: int, p: int) -> int:
    acc = 0
    for c in reversed(coeffs):
        acc = (acc * x + c) % p
    return acc


@dataclass
class SharedPolicy:
    """A policy tree with one polynomial (low-order coefficient first) per node."""

    tree: PolicyTree
    order: int
    polynomials: dict[int, tuple[int, ...]] = field(default_factory=dict)

    def share(self, index: int) -> int:
        """q_x(0) for the node with the given index."""
        return self.polynomials[index][0]

    def evaluate(self, index: int, x: int) -> int:
        return _eval_poly(self.polynomials[index], x, self.order)

    def leaf_shares(self) -> list[int]:
        return [self.share(leaf.index) for leaf in self.tree.leaves]


def share_secret(tree: PolicyTree, secret: int, order: int, rng) -> SharedPolicy:
    """Top-down: q_root(0) = secret and q_x(0) = q_parent(x)(index(x))."""
    shared = SharedPolicy(tree, order)

    def visit(node: PolicyNode, value: int) -> None:
        coeffs = (value % order,) + tuple(rng.randrange(order) for _ in range(node.threshold - 1))
        shared.polynomials[node.index] = coeffs
        for child in node.children:
            visit(child, _eval_poly(coeffs, child.index, order))

    visit(tree.root, secret)
    return shared


def lagrange_coeff(i: int, indices: Iterable[int], x: int, order: int) -> int:
    """Delta_{i,S}(x) = prod_{j in S, j != i} (x - j) / (i - j)  mod order."""
    s = list(indices)
    if len(set(s)) != len(s):
        raise ValueError("index set contains duplicates")
    if i not in s:
        raise ValueError(f"{i} is not in the index set")
    num = den = 1
    for j in s:
        if j == i:
            continue
        num = num * (x - j) % order
        den = den * (i - j) % order
    return num * pow(den, -1, order) % order


# -- satisfaction ------------------------------------------------------------


@dataclass(frozen=True)
class Satisfaction:
    """Result of evaluating a policy against an attribute set.

    ``witness`` maps each selected internal node index to the indexes of the
    ``k_x`` children chosen for interpolation (lowest indexes first).
    """

    ok: bool
    witness: dict[int, tuple[int, ...]] = field(default_factory=dict)
    leaves: tuple[int, ...] = ()

    def __bool__(self) -> bool:
        return self.ok


def satisfies(tree: PolicyTree, attributes: Iterable[str]) -> Satisfaction:
    attrs = frozenset(attributes)
    memo: dict[int, bool] = {}

    def sat(node: PolicyNode) -> bool:
        if node.index not in memo:
            if node.is_leaf:
                memo[node.index] = node.attribute in attrs
            else:
                memo[node.index] = sum(sat(c) for c in node.children) >= node.threshold
        return memo[node.index]

    if not sat(tree.root):
        return Satisfaction(False)
    witness: dict[int, tuple[int, ...]] = {}
    leaves: list[int] = []

    def select(node: PolicyNode) -> None:
        if node.is_leaf:
            leaves.append(node.index)
            return
        chosen = [c for c in node.children if memo[c.index]][: node.threshold]
        witness[node.index] = tuple(c.index for c in chosen)
        for c in chosen:
            select(c)

    select(tree.root)
    return Satisfaction(True, witness, tuple(leaves))
