"""Revocable CP-ABE with versioned keys and ciphertexts.

The construction follows Bethencourt-Sahai-Waters ciphertext-policy ABE with
one change: the ``beta`` component of the master key is re-randomised on every
revocation epoch.  An epoch yields an :class:`UpdateKey` whose scalars let an
untrusted proxy move a ciphertext's ``C`` (and a key's ``D``) forward by any
number of epochs with a single exponentiation.

Every artifact carries a version.  :func:`decrypt` requires the ciphertext and
key versions to match exactly and raises :class:`StaleVersionError` otherwise.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, Sequence

from seabrew.algebra import meter
from seabrew.algebra.base import DecodeError, G0Element, G1Element, PairingGroup
from seabrew.policy import PolicyTree, lagrange_coeff, satisfies, share_secret
from seabrew.wire import Reader, lp16, u16, u32, u64

TAG_MK = 0xAB01
TAG_EK = 0xAB02
TAG_DK = 0xAB03
TAG_CP = 0xAB04
TAG_UK = 0xAB05


class ABEError(Exception):
    pass


class NotAuthorizedError(ABEError):
    """The key's attribute set does not satisfy the ciphertext policy."""


class VersionError(ABEError):
    pass


class StaleVersionError(VersionError):
    """Ciphertext and key versions differ; one of them needs updating."""

    def __init__(self, cp_version: int, dk_version: int) -> None:
        super().__init__(f"ciphertext version {cp_version} != key version {dk_version}")
        self.cp_version = cp_version
        self.dk_version = dk_version


class StaleUpdateError(VersionError):
    """An update does not move the artifact forward."""


class MissingUpdateError(VersionError):
    """The supplied updates leave a gap in the version range."""


@dataclass(frozen=True)
class MasterKey:
    beta: int
    g_alpha: G0Element
    version: int = 0

    def to_bytes(self) -> bytes:
        grp = self.g_alpha.group
        return u16(TAG_MK) + u64(self.version) + grp.scalar_to_bytes(self.beta) + self.g_alpha.to_bytes()

    @classmethod
    def from_bytes(cls, data: bytes, group: PairingGroup) -> "MasterKey":
        rd = _header(data, TAG_MK)
        version = rd.u64()
        beta = group.scalar_from_bytes(rd.take(group.params.scalar_bytes))
        g_alpha = group.g0_from_bytes(rd.take(group.params.g0_bytes))
        rd.done()
        if beta == 0:
            raise DecodeError("master key beta is zero")
        return cls(beta, g_alpha, version)


@dataclass(frozen=True)
class EncryptionKey:
    group: PairingGroup
    g: G0Element
    h: G0Element
    l: G1Element
    version: int = 0

    def to_bytes(self) -> bytes:
        return u16(TAG_EK) + u64(self.version) + self.g.to_bytes() + self.h.to_bytes() + self.l.to_bytes()

    @classmethod
    def from_bytes(cls, data: bytes, group: PairingGroup) -> "EncryptionKey":
        rd = _header(data, TAG_EK)
        version = rd.u64()
        g = group.g0_from_bytes(rd.take(group.params.g0_bytes))
        h = group.g0_from_bytes(rd.take(group.params.g0_bytes))
        l = group.g1_from_bytes(rd.take(group.params.g1_bytes))
        rd.done()
        return cls(group, g, h, l, version)


@dataclass(frozen=True)
class DecryptionKey:
    D: G0Element
    components: Mapping[str, tuple[G0Element, G0Element]]
    version: int = 0

    @property
    def attributes(self) -> frozenset[str]:
        return frozenset(self.components)

    def with_d(self, D: G0Element, version: int) -> "DecryptionKey":
        return replace(self, D=D, version=version)

    def to_bytes(self) -> bytes:
        out = [u16(TAG_DK), u64(self.version), self.D.to_bytes(), u32(len(self.components))]
        for attr in sorted(self.components):
            dj, dpj = self.components[attr]
            out += [lp16(attr.encode("utf-8")), dj.to_bytes(), dpj.to_bytes()]
        return b"".join(out)

    @classmethod
    def from_bytes(cls, data: bytes, group: PairingGroup) -> "DecryptionKey":
        rd = _header(data, TAG_DK)
        version = rd.u64()
        n = group.params.g0_bytes
        D = group.g0_from_bytes(rd.take(n))
        comps = {}
        for _ in range(rd.u32()):
            attr = rd.lp16().decode("utf-8")
            comps[attr] = (group.g0_from_bytes(rd.take(n)), group.g0_from_bytes(rd.take(n)))
        rd.done()
        return cls(D, comps, version)

    def __hash__(self) -> int:
        return hash(self.to_bytes())


@dataclass(frozen=True)
class Ciphertext:
    policy: PolicyTree
    c_tilde: G1Element
    c: G0Element
    leaves: tuple[tuple[G0Element, G0Element], ...]
    version: int = 0

    def to_bytes(self) -> bytes:
        out = [u16(TAG_CP), u64(self.version), self.policy.to_bytes()]
        out += [self.c_tilde.to_bytes(), self.c.to_bytes(), u32(len(self.leaves))]
        for cy, cpy in self.leaves:
            out += [cy.to_bytes(), cpy.to_bytes()]
        return b"".join(out)

    @classmethod
    def from_bytes(cls, data: bytes, group: PairingGroup) -> "Ciphertext":
        rd = _header(data, TAG_CP)
        version = rd.u64()
        policy, rd.pos = PolicyTree.read(bytes(rd.data), rd.pos)
        c_tilde = group.g1_from_bytes(rd.take(group.params.g1_bytes))
        n = group.params.g0_bytes
        c = group.g0_from_bytes(rd.take(n))
        count = rd.u32()
        if count != len(policy):
            raise DecodeError("leaf count does not match policy")
        leaves = tuple((group.g0_from_bytes(rd.take(n)), group.g0_from_bytes(rd.take(n))) for _ in range(count))
        rd.done()
        return cls(policy, c_tilde, c, leaves, version)


@dataclass(frozen=True)
class UpdateKey:
    """Per-epoch update quantities.  ``u_cp * u_dk == 1 (mod p)``."""

    version: int
    u_cp: int
    u_ek: G0Element
    u_dk: int

    def to_bytes(self) -> bytes:
        # u_cp travels implicitly as the inverse of u_dk
        grp = self.u_ek.group
        return u16(TAG_UK) + u64(self.version) + self.u_ek.to_bytes() + grp.scalar_to_bytes(self.u_dk)

    @classmethod
    def from_bytes(cls, data: bytes, group: PairingGroup) -> "UpdateKey":
        rd = _header(data, TAG_UK)
        version = rd.u64()
        u_ek = group.g0_from_bytes(rd.take(group.params.g0_bytes))
        u_dk = group.scalar_from_bytes(rd.take(group.params.scalar_bytes))
        rd.done()
        if u_dk == 0:
            raise DecodeError("update scalar is zero")
        return cls(version, group.scalar_inverse(u_dk), u_ek, u_dk)


def _header(data: bytes, tag: int) -> Reader:
    rd = Reader(data)
    got = rd.u16()
    if got != tag:
        raise DecodeError(f"format tag {got:#06x}, expected {tag:#06x}")
    return rd


# -- primitives ---------------------------------------------------------------


def setup(group: PairingGroup, rng) -> tuple[MasterKey, EncryptionKey]:
    with meter.tagged("setup"):
        alpha = group.random_nonzero_scalar(rng)
        beta = group.random_nonzero_scalar(rng)
        g = group.g
        g_alpha = g ** alpha
        ek = EncryptionKey(group, g, g ** beta, group.pairing(g, g_alpha), 0)
    return MasterKey(beta, g_alpha, 0), ek


def encrypt(m: G1Element, policy: PolicyTree, ek: EncryptionKey, rng) -> Ciphertext:
    group = ek.group
    with meter.tagged("encrypt"):
        s = group.random_scalar(rng)
        shared = share_secret(policy, s, group.order, rng)
        leaves = []
        for leaf, q in zip(policy.leaves, shared.leaf_shares()):
            leaves.append((ek.g ** q, group.hash_to_g0(leaf.attribute.encode("utf-8")) ** q))
        return Ciphertext(policy, m * ek.l ** s, ek.h ** s, tuple(leaves), ek.version)


def keygen(mk: MasterKey, attributes: Iterable[str], rng) -> DecryptionKey:
    attrs = sorted(set(attributes))
    if not attrs:
        raise ValueError("attribute set must not be empty")
    group = mk.g_alpha.group
    g = group.g
    with meter.tagged("keygen"):
        r = group.random_scalar(rng)
        g_r = g ** r
        D = (mk.g_alpha * g_r) ** group.scalar_inverse(mk.beta)
        comps = {}
        for attr in attrs:
            rj = group.random_scalar(rng)
            comps[attr] = (g_r * group.hash_to_g0(attr.encode("utf-8")) ** rj, g ** rj)
    return DecryptionKey(D, comps, mk.version)


def decrypt(cp: Ciphertext, dk: DecryptionKey) -> G1Element:
    sat = satisfies(cp.policy, dk.components)
    if not sat:
        raise NotAuthorizedError("attribute set does not satisfy the policy")
    if cp.version != dk.version:
        raise StaleVersionError(cp.version, dk.version)
    group = cp.c.group
    p = group.order
    position = {leaf.index: i for i, leaf in enumerate(cp.policy.leaves)}

    def decrypt_node(node) -> G1Element:
        if node.is_leaf:
            d_i, dp_i = dk.components[node.attribute]
            c_x, cp_x = cp.leaves[position[node.index]]
            return group.pairing(d_i, c_x) / group.pairing(dp_i, cp_x)
        chosen = sat.witness[node.index]
        acc = group.identity_g1()
        for child in node.children:
            if child.index in chosen:
                acc = acc * decrypt_node(child) ** lagrange_coeff(child.index, chosen, 0, p)
        return acc

    with meter.tagged("decrypt"):
        a = decrypt_node(cp.policy.root)
        return cp.c_tilde / (group.pairing(cp.c, dk.D) / a)


def update_mk(mk: MasterKey, rng) -> tuple[MasterKey, UpdateKey]:
    group = mk.g_alpha.group
    with meter.tagged("update_mk"):
        beta_new = group.random_nonzero_scalar(rng)
        u_cp = beta_new * group.scalar_inverse(mk.beta) % group.order
        u_dk = mk.beta * group.scalar_inverse(beta_new) % group.order
        version = mk.version + 1
        update = UpdateKey(version, u_cp, group.g ** beta_new, u_dk)
    return MasterKey(beta_new, mk.g_alpha, version), update


def update_ek(ek: EncryptionKey, u_ek: G0Element | UpdateKey, version: int | None = None) -> EncryptionKey:
    """Replace ``h`` with the latest ``U_EK``; earlier updates are not needed."""
    if isinstance(u_ek, UpdateKey):
        version = u_ek.version if version is None else version
        u_ek = u_ek.u_ek
    if version is None:
        raise TypeError("version is required with a bare U_EK element")
    if version <= ek.version:
        raise StaleUpdateError(f"encryption key already at version {ek.version} >= {version}")
    return replace(ek, h=u_ek, version=version)


def _check_range(v_from: int, updates: Sequence[UpdateKey]) -> int:
    for offset, upd in enumerate(updates, start=1):
        want = v_from + offset
        if upd.version < want:
            raise StaleUpdateError(f"update {upd.version} already applied (at version {want - 1})")
        if upd.version > want:
            raise MissingUpdateError(f"missing update for version {want}")
    return v_from + len(updates)


def accumulate(values: Iterable[int], order: int) -> int:
    acc = 1
    for v in values:
        acc = acc * v % order
    return acc


def update_dk_component(D: G0Element, v_from: int, updates: Sequence[UpdateKey]) -> G0Element:
    """D^(prod U_DK) over versions v_from+1 .. v_from+len(updates)."""
    _check_range(v_from, updates)
    if not updates:
        return D
    with meter.tagged("update_dk"):
        return D ** accumulate((u.u_dk for u in updates), D.group.order)


def update_dk(dk: DecryptionKey, updates: Sequence[UpdateKey]) -> DecryptionKey:
    v_to = _check_range(dk.version, updates)
    return dk.with_d(update_dk_component(dk.D, dk.version, updates), v_to)


def apply_cp_factor(cp: Ciphertext, factor: int, version: int) -> Ciphertext:
    """Raise ``C`` to an already-accumulated ``U_CP`` product."""
    if version <= cp.version:
        raise StaleUpdateError(f"ciphertext already at version {cp.version} >= {version}")
    with meter.tagged("update_cp"):
        return replace(cp, c=cp.c ** factor, version=version)


def update_cp(cp: Ciphertext, updates: Sequence[UpdateKey]) -> Ciphertext:
    v_to = _check_range(cp.version, updates)
    if not updates:
        return cp
    return apply_cp_factor(cp, accumulate((u.u_cp for u in updates), cp.c.group.order), v_to)


def apply_dk_factor(dk: DecryptionKey, factor: int, version: int) -> DecryptionKey:
    """Raise ``D`` to an already-accumulated ``U_DK`` product."""
    if version <= dk.version:
        raise StaleUpdateError(f"decryption key already at version {dk.version} >= {version}")
    with meter.tagged("update_dk"):
        return dk.with_d(dk.D ** factor, version)
