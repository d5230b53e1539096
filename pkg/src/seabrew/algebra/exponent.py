"""Insecure discrete-log-tracking backend for high-volume simulation.

Every element is stored as its discrete logarithm: a G0 element g^x is the
integer x mod p and a G1 element e(g,g)^y is y mod p.  The group law becomes
addition and the pairing becomes multiplication, so all algebraic identities
of the real backend hold exactly while costing a few integer operations.

This backend provides NO security.  It exists so the workload simulator can
drive the real scheme code paths (and the exponentiation meter) millions of
times.  Encodings are padded to the same byte sizes as the 80-bit profile.
"""

from __future__ import annotations

import functools
import hashlib

from seabrew.algebra.base import DecodeError, GroupParams, PairingGroup
from seabrew.algebra.typea import R_80


class ExponentGroup(PairingGroup):
    def __init__(self, order: int = R_80, name: str = "insecure-sim") -> None:
        self.params = GroupParams(
            name=name,
            order=order,
            security_bits=0,
            g0_bytes=64,
            g1_bytes=128,
            scalar_bytes=(order.bit_length() + 7) // 8,
            pairing="exponent-tracking (insecure)",
        )

    def _generator(self):
        return 1

    def _g0_identity(self):
        return 0

    def _g0_add(self, a, b):
        return (a + b) % self.params.order

    def _g0_neg(self, a):
        return (-a) % self.params.order

    def _g0_pow(self, a, k):
        return a * k % self.params.order

    def _g0_eq(self, a, b):
        return a == b

    def _g0_is_identity(self, a):
        return a == 0

    def _g0_encode(self, a) -> bytes:
        return a.to_bytes(self.params.g0_bytes, "big")

    def _g0_decode(self, data: bytes, check_subgroup: bool):
        v = int.from_bytes(data, "big")
        if v >= self.params.order:
            raise DecodeError("element out of range")
        return v

    def _g1_identity(self):
        return 0

    def _g1_mul(self, a, b):
        return (a + b) % self.params.order

    def _g1_inv(self, a):
        return (-a) % self.params.order

    def _g1_pow(self, a, k):
        return a * k % self.params.order

    def _g1_eq(self, a, b):
        return a == b

    def _g1_encode(self, a) -> bytes:
        return a.to_bytes(self.params.g1_bytes, "big")

    def _g1_decode(self, data: bytes):
        v = int.from_bytes(data, "big")
        if v >= self.params.order:
            raise DecodeError("element out of range")
        return v

    def _pair(self, a, b):
        return a * b % self.params.order

    @functools.lru_cache(maxsize=65536)
    def _hash_to_g0(self, dst: bytes, label: bytes):
        prefix = len(dst).to_bytes(2, "big") + dst + label
        ctr = 0
        while True:
            d = hashlib.shake_256(prefix + ctr.to_bytes(4, "big")).digest(36)
            v = int.from_bytes(d, "big") % self.params.order
            if v:
                return v
            ctr += 1
