"""Constant-size broadcast encryption (Boneh-Gentry-Waters, general variant).

Public key: g, g_i = g^(alpha^i) for i in 1..n and n+2..2n, and v = g^gamma.
Receiver i holds d_i = g_i^gamma.  A broadcast to S carries two G0 elements

    C0 = g^t,    C1 = (v * prod_{j in S} g_{n+1-j})^t

and the session key is K = e(g_{n+1}, g)^t = e(g_n, g_1)^t, which is hashed to
a pad for one encoded scalar.  The receiver set travels as a bitmap.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import Iterable, Sequence

from seabrew.algebra import meter
from seabrew.algebra.base import DecodeError, G0Element, G1Element, PairingGroup
from seabrew.wire import Reader, u8, u16

HEADER_VERSION = 1
KDF_TAG = b"SEABREW-BC-KDF-v1"
TAG_BPK = 0xBC01
TAG_BSK = 0xBC02


class BroadcastError(Exception):
    pass


class ExcludedReceiverError(BroadcastError):
    """The receiver's index is not in the header's receiver set."""


@dataclass(frozen=True)
class BroadcastPublicKey:
    group: PairingGroup
    n: int
    g: G0Element
    powers: tuple[G0Element, ...]  # powers[i-1] = g_i for i in 1..2n; g_{n+1} is the identity placeholder
    v: G0Element

    def g_i(self, i: int) -> G0Element:
        if i == self.n + 1 or not 1 <= i <= 2 * self.n:
            raise IndexError(f"g_{i} is not published")
        return self.powers[i - 1]

    @property
    def num_elements(self) -> int:
        return 2 * self.n + 1

    def to_bytes(self) -> bytes:
        out = [u16(TAG_BPK), u16(self.n), self.g.to_bytes(), self.v.to_bytes()]
        out += [self.g_i(i).to_bytes() for i in range(1, 2 * self.n + 1) if i != self.n + 1]
        return b"".join(out)

    @classmethod
    def from_bytes(cls, data: bytes, group: PairingGroup) -> "BroadcastPublicKey":
        rd = Reader(data)
        if rd.u16() != TAG_BPK:
            raise DecodeError("not a broadcast public key")
        n = rd.u16()
        size = group.params.g0_bytes
        g = group.g0_from_bytes(rd.take(size))
        v = group.g0_from_bytes(rd.take(size))
        powers = []
        for i in range(1, 2 * n + 1):
            powers.append(group.identity_g0() if i == n + 1 else group.g0_from_bytes(rd.take(size)))
        rd.done()
        return cls(group, n, g, tuple(powers), v)


@dataclass(frozen=True)
class BroadcastPrivateKey:
    index: int
    d: G0Element

    def to_bytes(self) -> bytes:
        return u16(TAG_BSK) + u16(self.index) + self.d.to_bytes()

    @classmethod
    def from_bytes(cls, data: bytes, group: PairingGroup) -> "BroadcastPrivateKey":
        rd = Reader(data)
        if rd.u16() != TAG_BSK:
            raise DecodeError("not a broadcast private key")
        index = rd.u16()
        d = group.g0_from_bytes(rd.take(group.params.g0_bytes))
        rd.done()
        return cls(index, d)


@dataclass(frozen=True)
class BroadcastHeader:
    n: int
    receivers: frozenset[int]
    c0: G0Element
    c1: G0Element
    payload: bytes

    @property
    def accounted_size(self) -> int:
        """Bytes charged in traffic accounting: both elements plus the padded payload."""
        return len(self.c0.to_bytes()) + len(self.c1.to_bytes()) + len(self.payload)

    def to_bytes(self) -> bytes:
        return u8(HEADER_VERSION) + encode_bitmap(self.receivers, self.n) + self.c0.to_bytes() + self.c1.to_bytes() + self.payload

    @classmethod
    def from_bytes(cls, data: bytes, bpk: BroadcastPublicKey) -> "BroadcastHeader":
        group = bpk.group
        rd = Reader(data)
        if rd.u8() != HEADER_VERSION:
            raise DecodeError("unknown broadcast header version")
        receivers = decode_bitmap(rd.take((bpk.n + 7) // 8), bpk.n)
        c0 = group.g0_from_bytes(rd.take(group.params.g0_bytes))
        c1 = group.g0_from_bytes(rd.take(group.params.g0_bytes))
        payload = rd.take(group.params.scalar_bytes)
        rd.done()
        return cls(bpk.n, receivers, c0, c1, payload)


def encode_bitmap(receivers: Iterable[int], n: int) -> bytes:
    bits = bytearray((n + 7) // 8)
    for i in receivers:
        bits[(i - 1) // 8] |= 1 << ((i - 1) % 8)
    return bytes(bits)


def decode_bitmap(data: bytes, n: int) -> frozenset[int]:
    out = set()
    for i in range(1, 8 * len(data) + 1):
        if data[(i - 1) // 8] >> ((i - 1) % 8) & 1:
            if i > n:
                raise DecodeError(f"bitmap names receiver {i} > n={n}")
            out.add(i)
    return frozenset(out)


def _pad(key: G1Element, size: int) -> bytes:
    return hashlib.shake_256(KDF_TAG + key.to_bytes()).digest(size)


def _xor(a: bytes, b: bytes) -> bytes:
    return bytes(x ^ y for x, y in zip(a, b))


def bc_setup(n: int, group: PairingGroup, rng) -> tuple[BroadcastPublicKey, list[BroadcastPrivateKey]]:
    if n < 1:
        raise ValueError("n must be at least 1")
    p = group.order
    with meter.tagged("bc_setup"):
        alpha = group.random_nonzero_scalar(rng)
        gamma = group.random_nonzero_scalar(rng)
        g = group.g
        powers = []
        a_i = 1
        for i in range(1, 2 * n + 1):
            a_i = a_i * alpha % p
            powers.append(group.identity_g0() if i == n + 1 else g ** a_i)
        bpk = BroadcastPublicKey(group, n, g, tuple(powers), g ** gamma)
        keys = [BroadcastPrivateKey(i, bpk.g_i(i) ** gamma) for i in range(1, n + 1)]
    return bpk, keys


def _check_set(bpk: BroadcastPublicKey, receivers: Iterable[int]) -> frozenset[int]:
    s = frozenset(receivers)
    if not s:
        raise ValueError("receiver set must not be empty")
    bad = [i for i in s if not 1 <= i <= bpk.n]
    if bad:
        raise ValueError(f"receiver indexes out of range 1..{bpk.n}: {sorted(bad)}")
    return s


def bc_encrypt(bpk: BroadcastPublicKey, receivers: Iterable[int], payload: bytes, rng) -> BroadcastHeader:
    group = bpk.group
    s = _check_set(bpk, receivers)
    if len(payload) != group.params.scalar_bytes:
        raise ValueError(f"payload must be exactly {group.params.scalar_bytes} bytes")
    with meter.tagged("bc_encrypt"):
        t = group.random_nonzero_scalar(rng)
        acc = bpk.v
        for j in s:
            acc = acc * bpk.g_i(bpk.n + 1 - j)
        key = group.pairing(bpk.g_i(bpk.n), bpk.g_i(1)) ** t
        return BroadcastHeader(bpk.n, s, bpk.g ** t, acc ** t, _xor(payload, _pad(key, len(payload))))


def bc_decrypt(bpk: BroadcastPublicKey, sk: BroadcastPrivateKey, header: BroadcastHeader) -> bytes:
    i = sk.index
    if i not in header.receivers:
        raise ExcludedReceiverError(f"receiver {i} is not in the broadcast set")
    with meter.tagged("bc_decrypt"):
        acc = sk.d
        for j in header.receivers:
            if j != i:
                acc = acc * bpk.g_i(bpk.n + 1 - j + i)
        group = bpk.group
        key = group.pairing(bpk.g_i(i), header.c1) / group.pairing(acc, header.c0)
    return _xor(header.payload, _pad(key, len(header.payload)))


def all_receivers(n: int, excluded: Sequence[int] = ()) -> frozenset[int]:
    return frozenset(range(1, n + 1)) - frozenset(excluded)
