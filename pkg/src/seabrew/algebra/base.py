"""Bilinear group interface shared by all pairing backends.

A backend provides two cyclic groups ``G0`` and ``G1`` of the same prime order
``p`` and a symmetric pairing ``e: G0 x G0 -> G1``.  Elements are immutable
wrappers around a backend-specific representation; scalars are plain ``int``
residues modulo ``p``.

Group law is written multiplicatively: ``a * b``, ``a / b``, ``a ** k``.
Only ``**`` and :meth:`PairingGroup.pairing` are charged to the meter.
"""

from __future__ import annotations

import abc
import hashlib
from dataclasses import dataclass
from typing import Any

from seabrew.algebra import meter

#: Domain-separation tag for attribute hashing into G0.
ATTRIBUTE_DST = b"SEABREW-H-ATTR-v1"


class DecodeError(ValueError):
    """Raised when bytes do not encode a valid group element or scalar."""


@dataclass(frozen=True)
class GroupParams:
    name: str
    order: int
    security_bits: int
    g0_bytes: int
    g1_bytes: int
    scalar_bytes: int
    pairing: str


class G0Element:
    __slots__ = ("group", "value")

    def __init__(self, group: "PairingGroup", value: Any) -> None:
        self.group = group
        self.value = value

    def __mul__(self, other: "G0Element") -> "G0Element":
        return G0Element(self.group, self.group._g0_add(self.value, other.value))

    def __truediv__(self, other: "G0Element") -> "G0Element":
        return self * other.inverse()

    def inverse(self) -> "G0Element":
        return G0Element(self.group, self.group._g0_neg(self.value))

    def __pow__(self, k: int) -> "G0Element":
        meter.record(meter.G0_EXP)
        return G0Element(self.group, self.group._g0_pow(self.value, k % self.group.order))

    def is_identity(self) -> bool:
        return self.group._g0_is_identity(self.value)

    def to_bytes(self) -> bytes:
        return self.group._g0_encode(self.value)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, G0Element):
            return NotImplemented
        return self.group is other.group and self.group._g0_eq(self.value, other.value)

    def __hash__(self) -> int:
        return hash(self.to_bytes())

    def __repr__(self) -> str:
        return f"G0Element({self.to_bytes()[:6].hex()}...)"


class G1Element:
    __slots__ = ("group", "value")

    def __init__(self, group: "PairingGroup", value: Any) -> None:
        self.group = group
        self.value = value

    def __mul__(self, other: "G1Element") -> "G1Element":
        return G1Element(self.group, self.group._g1_mul(self.value, other.value))

    def __truediv__(self, other: "G1Element") -> "G1Element":
        return self * other.inverse()

    def inverse(self) -> "G1Element":
        return G1Element(self.group, self.group._g1_inv(self.value))

    def __pow__(self, k: int) -> "G1Element":
        meter.record(meter.G1_EXP)
        return G1Element(self.group, self.group._g1_pow(self.value, k % self.group.order))

    def is_identity(self) -> bool:
        return self.group._g1_eq(self.value, self.group._g1_identity())

    def to_bytes(self) -> bytes:
        return self.group._g1_encode(self.value)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, G1Element):
            return NotImplemented
        return self.group is other.group and self.group._g1_eq(self.value, other.value)

    def __hash__(self) -> int:
        return hash(self.to_bytes())

    def __repr__(self) -> str:
        return f"G1Element({self.to_bytes()[:6].hex()}...)"


class PairingGroup(abc.ABC):
    """Abstract provider; subclasses implement the underscore hooks."""

    params: GroupParams

    @property
    def order(self) -> int:
        return self.params.order

    @property
    def g(self) -> G0Element:
        return G0Element(self, self._generator())

    def identity_g0(self) -> G0Element:
        return G0Element(self, self._g0_identity())

    def identity_g1(self) -> G1Element:
        return G1Element(self, self._g1_identity())

    def pairing(self, a: G0Element, b: G0Element) -> G1Element:
        meter.record(meter.PAIRING)
        return G1Element(self, self._pair(a.value, b.value))

    def hash_to_g0(self, label: bytes, dst: bytes = ATTRIBUTE_DST) -> G0Element:
        return G0Element(self, self._hash_to_g0(dst, bytes(label)))

    # -- scalars -----------------------------------------------------------

    def random_scalar(self, rng) -> int:
        return rng.randrange(self.order)

    def random_nonzero_scalar(self, rng) -> int:
        return rng.randrange(1, self.order)

    def scalar_inverse(self, s: int) -> int:
        s %= self.order
        if s == 0:
            raise ZeroDivisionError("zero scalar has no inverse")
        return pow(s, -1, self.order)

    def scalar_to_bytes(self, s: int) -> bytes:
        return int(s % self.order).to_bytes(self.params.scalar_bytes, "big")

    def scalar_from_bytes(self, data: bytes) -> int:
        if len(data) != self.params.scalar_bytes:
            raise DecodeError(f"scalar must be {self.params.scalar_bytes} bytes")
        s = int.from_bytes(data, "big")
        if s >= self.order:
            raise DecodeError("scalar out of range")
        return s

    def hash_to_scalar(self, data: bytes, dst: bytes) -> int:
        wide = hashlib.shake_256(dst + b"\x00" + data).digest(self.params.scalar_bytes + 16)
        return int.from_bytes(wide, "big") % self.order

    # -- element codecs ----------------------------------------------------

    def g0_from_bytes(self, data: bytes, check_subgroup: bool = True) -> G0Element:
        if len(data) != self.params.g0_bytes:
            raise DecodeError(f"G0 element must be {self.params.g0_bytes} bytes")
        return G0Element(self, self._g0_decode(bytes(data), check_subgroup))

    def g1_from_bytes(self, data: bytes) -> G1Element:
        if len(data) != self.params.g1_bytes:
            raise DecodeError(f"G1 element must be {self.params.g1_bytes} bytes")
        return G1Element(self, self._g1_decode(bytes(data)))

    # -- backend hooks -----------------------------------------------------

    @abc.abstractmethod
    def _generator(self) -> Any: ...

    @abc.abstractmethod
    def _g0_identity(self) -> Any: ...

    @abc.abstractmethod
    def _g0_add(self, a: Any, b: Any) -> Any: ...

    @abc.abstractmethod
    def _g0_neg(self, a: Any) -> Any: ...

    @abc.abstractmethod
    def _g0_pow(self, a: Any, k: int) -> Any: ...

    @abc.abstractmethod
    def _g0_eq(self, a: Any, b: Any) -> bool: ...

    @abc.abstractmethod
    def _g0_is_identity(self, a: Any) -> bool: ...

    @abc.abstractmethod
    def _g0_encode(self, a: Any) -> bytes: ...

    @abc.abstractmethod
    def _g0_decode(self, data: bytes, check_subgroup: bool) -> Any: ...

    @abc.abstractmethod
    def _g1_identity(self) -> Any: ...

    @abc.abstractmethod
    def _g1_mul(self, a: Any, b: Any) -> Any: ...

    @abc.abstractmethod
    def _g1_inv(self, a: Any) -> Any: ...

    @abc.abstractmethod
    def _g1_pow(self, a: Any, k: int) -> Any: ...

    @abc.abstractmethod
    def _g1_eq(self, a: Any, b: Any) -> bool: ...

    @abc.abstractmethod
    def _g1_encode(self, a: Any) -> bytes: ...

    @abc.abstractmethod
    def _g1_decode(self, data: bytes) -> Any: ...

    @abc.abstractmethod
    def _pair(self, a: Any, b: Any) -> Any: ...

    @abc.abstractmethod
    def _hash_to_g0(self, dst: bytes, label: bytes) -> Any: ...

    def __repr__(self) -> str:
        return f"<{type(self).__name__} {self.params.name}>"


def g0_exp(base: G0Element, s: int) -> G0Element:
    return base ** s


def g1_exp(base: G1Element, s: int) -> G1Element:
    return base ** s
