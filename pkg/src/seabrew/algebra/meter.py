"""Process-wide operation meter for group exponentiations and pairings.

Metering is off unless a :func:`metering` block is active.  Counts are keyed by
``(tag, op)`` where ``op`` is one of ``"g0_exp"``, ``"g1_exp"`` or
``"pairing"`` and ``tag`` is the innermost label set with :func:`tagged`.
"""

from __future__ import annotations

import threading
from collections import Counter
from contextlib import contextmanager
from typing import Iterator

G0_EXP = "g0_exp"
G1_EXP = "g1_exp"
PAIRING = "pairing"
OPS = (G0_EXP, G1_EXP, PAIRING)

_lock = threading.Lock()
_active: list["Meter"] = []
_tags = threading.local()


class Meter:
    """Accumulates operation counts while it is active."""

    def __init__(self) -> None:
        self.counts: Counter[tuple[str, str]] = Counter()

    def _record(self, tag: str, op: str, n: int) -> None:
        self.counts[(tag, op)] += n

    def total(self, op: str | None = None, tag: str | None = None) -> int:
        return sum(
            n
            for (t, o), n in self.counts.items()
            if (op is None or o == op) and (tag is None or t == tag)
        )

    @property
    def g0(self) -> int:
        return self.total(G0_EXP)

    @property
    def g1(self) -> int:
        return self.total(G1_EXP)

    @property
    def pairings(self) -> int:
        return self.total(PAIRING)

    def by_tag(self, op: str | None = None) -> dict[str, int]:
        out: Counter[str] = Counter()
        for (t, o), n in self.counts.items():
            if op is None or o == op:
                out[t] += n
        return dict(out)

    def reset(self) -> None:
        with _lock:
            self.counts.clear()

    def __repr__(self) -> str:
        return f"Meter(g0={self.g0}, g1={self.g1}, pairings={self.pairings})"


def current_tag() -> str:
    stack = getattr(_tags, "stack", None)
    return stack[-1] if stack else "untagged"


def record(op: str, n: int = 1) -> None:
    """Charge ``n`` operations of kind ``op`` to every active meter."""
    if not _active:
        return
    tag = current_tag()
    with _lock:
        for m in _active:
            m._record(tag, op, n)


@contextmanager
def metering(meter: Meter | None = None) -> Iterator[Meter]:
    """Enable counting for the duration of the block.

    Nested blocks each see the operations performed inside them.
    """
    m = meter if meter is not None else Meter()
    with _lock:
        _active.append(m)
    try:
        yield m
    finally:
        with _lock:
            _active.remove(m)


@contextmanager
def tagged(tag: str) -> Iterator[None]:
    """Attribute operations inside the block to ``tag`` (per thread)."""
    stack = getattr(_tags, "stack", None)
    if stack is None:
        stack = _tags.stack = []
    stack.append(tag)
    try:
        yield
    finally:
        stack.pop()
