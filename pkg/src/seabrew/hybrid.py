"""Symmetric data path: SymKey Tables, signcrypted keys and signcrypted data.

A producer encrypts a fresh symmetric key once per policy under ABE (the
"signcrypted key") and then protects any number of payloads with that key
under AES-256-GCM (the "signcrypted data").  A 128-bit KID links the two.

The module also hosts the asymmetric contracts used by the protocol layer:
40-byte ECDSA signatures over a 160-bit curve and X25519 sealing.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Mapping

import ecdsa
from cryptography.exceptions import InvalidTag
from cryptography.hazmat.primitives import hashes
from cryptography.hazmat.primitives.asymmetric.x25519 import X25519PrivateKey, X25519PublicKey
from cryptography.hazmat.primitives.ciphers.aead import AESGCM
from cryptography.hazmat.primitives.kdf.hkdf import HKDF
from cryptography.hazmat.primitives.serialization import Encoding, PublicFormat

from seabrew import abe
from seabrew.algebra.base import DecodeError, PairingGroup
from seabrew.policy import PolicyTree
from seabrew.wire import Reader, lp16, lp32, u8, u64

KID_BYTES = 16
SYMKEY_BYTES = 32
NONCE_BYTES = 12
SIGNATURE_BYTES = 40
KEM_INFO = b"SEABREW-KEM-v1"
SEAL_INFO = b"SEABREW-SEAL-v1"

TAG_SIGNCRYPTED_KEY = 0x51
TAG_SIGNCRYPTED_DATA = 0x52

_CURVE = ecdsa.BRAINPOOLP160r1


class HybridError(Exception):
    pass


class SignatureError(HybridError):
    pass


class UnknownProducerError(HybridError):
    pass


class AEADError(HybridError):
    pass


def random_bytes(rng, n: int) -> bytes:
    return rng.getrandbits(8 * n).to_bytes(n, "little")


# -- signatures ----------------------------------------------------------------


@dataclass(frozen=True)
class VerifyKey:
    key: ecdsa.VerifyingKey

    def verify(self, message: bytes, signature: bytes) -> bool:
        if len(signature) != SIGNATURE_BYTES:
            return False
        try:
            return self.key.verify(signature, message, hashfunc=hashlib.sha256)
        except ecdsa.BadSignatureError:
            return False

    def to_bytes(self) -> bytes:
        return self.key.to_string("compressed")

    @classmethod
    def from_bytes(cls, data: bytes) -> "VerifyKey":
        try:
            return cls(ecdsa.VerifyingKey.from_string(data, curve=_CURVE))
        except (ecdsa.MalformedPointError, ValueError) as exc:
            raise DecodeError("bad verification key") from exc

    def __eq__(self, other: object) -> bool:
        return isinstance(other, VerifyKey) and self.to_bytes() == other.to_bytes()

    def __hash__(self) -> int:
        return hash(self.to_bytes())


@dataclass(frozen=True)
class SignKey:
    """ECDSA over brainpoolP160r1 with deterministic nonces; r||s is 40 bytes."""

    key: ecdsa.SigningKey

    @classmethod
    def generate(cls, rng) -> "SignKey":
        return cls(ecdsa.SigningKey.generate(curve=_CURVE, entropy=lambda n: random_bytes(rng, n)))

    @property
    def public(self) -> VerifyKey:
        return VerifyKey(self.key.get_verifying_key())

    def sign(self, message: bytes) -> bytes:
        return self.key.sign_deterministic(message, hashfunc=hashlib.sha256)

    def to_bytes(self) -> bytes:
        return self.key.to_string()

    @classmethod
    def from_bytes(cls, data: bytes) -> "SignKey":
        return cls(ecdsa.SigningKey.from_string(data, curve=_CURVE))


# -- sealing -------------------------------------------------------------------


def _hkdf(secret: bytes, info: bytes, length: int = SYMKEY_BYTES) -> bytes:
    return HKDF(algorithm=hashes.SHA256(), length=length, salt=None, info=info).derive(secret)


@dataclass(frozen=True)
class SealPublicKey:
    key: X25519PublicKey

    def to_bytes(self) -> bytes:
        return self.key.public_bytes(Encoding.Raw, PublicFormat.Raw)

    @classmethod
    def from_bytes(cls, data: bytes) -> "SealPublicKey":
        if len(data) != 32:
            raise DecodeError("sealing public key must be 32 bytes")
        return cls(X25519PublicKey.from_public_bytes(data))

    def __eq__(self, other: object) -> bool:
        return isinstance(other, SealPublicKey) and self.to_bytes() == other.to_bytes()

    def __hash__(self) -> int:
        return hash(self.to_bytes())

    def seal(self, plaintext: bytes, rng, aad: bytes = b"") -> bytes:
        eph = X25519PrivateKey.from_private_bytes(random_bytes(rng, 32))
        eph_pub = eph.public_key().public_bytes(Encoding.Raw, PublicFormat.Raw)
        key = _hkdf(eph.exchange(self.key) + eph_pub + self.to_bytes(), SEAL_INFO)
        # the key is single-use, so a fixed nonce is safe
        return eph_pub + AESGCM(key).encrypt(bytes(NONCE_BYTES), plaintext, aad)


@dataclass(frozen=True)
class SealPrivateKey:
    """Key-delivery key pair (KDK): X25519 + HKDF-SHA256 + AES-256-GCM."""

    key: X25519PrivateKey

    @classmethod
    def generate(cls, rng) -> "SealPrivateKey":
        return cls(X25519PrivateKey.from_private_bytes(random_bytes(rng, 32)))

    @property
    def public(self) -> SealPublicKey:
        return SealPublicKey(self.key.public_key())

    def open(self, sealed: bytes, aad: bytes = b"") -> bytes:
        if len(sealed) < 32 + 16:
            raise AEADError("sealed blob too short")
        eph_pub = sealed[:32]
        shared = self.key.exchange(X25519PublicKey.from_public_bytes(eph_pub))
        key = _hkdf(shared + eph_pub + self.public.to_bytes(), SEAL_INFO)
        try:
            return AESGCM(key).decrypt(bytes(NONCE_BYTES), sealed[32:], aad)
        except InvalidTag as exc:
            raise AEADError("sealed blob failed authentication") from exc


# -- symmetric key table -------------------------------------------------------


@dataclass(frozen=True)
class SymKeyRecord:
    kid: bytes
    policy: PolicyTree
    sym_key: bytes


@dataclass
class SymKeyTable:
    by_kid: dict[bytes, SymKeyRecord] = field(default_factory=dict)
    by_policy: dict[PolicyTree, bytes] = field(default_factory=dict)

    def get(self, kid: bytes) -> SymKeyRecord | None:
        return self.by_kid.get(kid)

    def lookup(self, policy: PolicyTree) -> SymKeyRecord | None:
        kid = self.by_policy.get(policy)
        return None if kid is None else self.by_kid[kid]

    def add(self, record: SymKeyRecord) -> None:
        self.by_kid[record.kid] = record
        self.by_policy.setdefault(record.policy, record.kid)

    def wipe(self) -> None:
        self.by_kid.clear()
        self.by_policy.clear()

    def __len__(self) -> int:
        return len(self.by_kid)

    def __contains__(self, kid: bytes) -> bool:
        return kid in self.by_kid


@dataclass(frozen=True)
class SigncryptedKey:
    kid: bytes
    ciphertext: abe.Ciphertext
    pid: int
    signature: bytes

    def to_bytes(self) -> bytes:
        return u8(TAG_SIGNCRYPTED_KEY) + self.kid + lp32(self.ciphertext.to_bytes()) + u64(self.pid) + lp16(self.signature)

    @classmethod
    def from_bytes(cls, data: bytes, group: PairingGroup) -> "SigncryptedKey":
        rd = Reader(data)
        if rd.u8() != TAG_SIGNCRYPTED_KEY:
            raise DecodeError("not a signcrypted key")
        kid = rd.take(KID_BYTES)
        cp = abe.Ciphertext.from_bytes(rd.lp32(), group)
        pid = rd.u64()
        sig = rd.lp16()
        rd.done()
        return cls(kid, cp, pid, sig)


@dataclass(frozen=True)
class SigncryptedData:
    kid: bytes
    body: bytes  # nonce || AEAD ciphertext || tag
    pid: int
    signature: bytes

    def to_bytes(self) -> bytes:
        return u8(TAG_SIGNCRYPTED_DATA) + self.kid + lp32(self.body) + u64(self.pid) + lp16(self.signature)

    @classmethod
    def from_bytes(cls, data: bytes) -> "SigncryptedData":
        rd = Reader(data)
        if rd.u8() != TAG_SIGNCRYPTED_DATA:
            raise DecodeError("not signcrypted data")
        kid = rd.take(KID_BYTES)
        body = rd.lp32()
        pid = rd.u64()
        sig = rd.lp16()
        rd.done()
        return cls(kid, body, pid, sig)


def key_signing_bytes(kid: bytes, cp: abe.Ciphertext) -> bytes:
    """Message covered by a signcrypted key's signature.

    ``C`` and the version are left out because the cloud re-encrypts them;
    tampering with ``C`` only makes decryption fail.
    """
    leaves = b"".join(a.to_bytes() + b.to_bytes() for a, b in cp.leaves)
    return kid + cp.policy.to_bytes() + cp.c_tilde.to_bytes() + leaves


def kem_encrypt(policy: PolicyTree, ek: abe.EncryptionKey, rng) -> tuple[bytes, abe.Ciphertext]:
    """Fresh symmetric key plus its ABE encapsulation."""
    group = ek.group
    with_kem = ek.l ** group.random_nonzero_scalar(rng)
    cp = abe.encrypt(with_kem, policy, ek, rng)
    return _hkdf(with_kem.to_bytes(), KEM_INFO), cp


def kem_decrypt(cp: abe.Ciphertext, dk: abe.DecryptionKey) -> bytes:
    return _hkdf(abe.decrypt(cp, dk).to_bytes(), KEM_INFO)


def get_or_create_symkey(
    table: SymKeyTable, policy: PolicyTree, ek: abe.EncryptionKey, rng, signer: SignKey, pid: int
) -> tuple[SymKeyRecord, SigncryptedKey | None]:
    hit = table.lookup(policy)
    if hit is not None:
        return hit, None
    sym_key, cp = kem_encrypt(policy, ek, rng)
    kid = random_bytes(rng, KID_BYTES)
    while kid in table:
        kid = random_bytes(rng, KID_BYTES)
    record = SymKeyRecord(kid, policy, sym_key)
    table.add(record)
    return record, SigncryptedKey(kid, cp, pid, signer.sign(key_signing_bytes(kid, cp)))


def verify_signcrypted_key(sk: SigncryptedKey, signature_table: Mapping[int, VerifyKey]) -> None:
    vk = signature_table.get(sk.pid)
    if vk is None:
        raise UnknownProducerError(f"unknown producer {sk.pid}")
    if not vk.verify(key_signing_bytes(sk.kid, sk.ciphertext), sk.signature):
        raise SignatureError("signcrypted key signature does not verify")


def unsigncrypt_key(
    sk: SigncryptedKey, dk: abe.DecryptionKey, signature_table: Mapping[int, VerifyKey] | None = None
) -> SymKeyRecord:
    """Decrypt a signcrypted key.  ABE errors propagate unchanged."""
    if signature_table is not None:
        verify_signcrypted_key(sk, signature_table)
    return SymKeyRecord(sk.kid, sk.ciphertext.policy, kem_decrypt(sk.ciphertext, dk))


def signcrypt_data(record: SymKeyRecord, plaintext: bytes, signer: SignKey, pid: int, rng) -> SigncryptedData:
    nonce = random_bytes(rng, NONCE_BYTES)
    body = nonce + AESGCM(record.sym_key).encrypt(nonce, plaintext, record.kid)
    return SigncryptedData(record.kid, body, pid, signer.sign(record.kid + body))


@dataclass(frozen=True)
class NeedKey:
    """The local table lacks this KID; fetch its signcrypted key first."""

    kid: bytes


def verify_signcrypted_data(sd: SigncryptedData, signature_table: Mapping[int, VerifyKey]) -> None:
    vk = signature_table.get(sd.pid)
    if vk is None:
        raise UnknownProducerError(f"unknown producer {sd.pid}")
    if not vk.verify(sd.kid + sd.body, sd.signature):
        raise SignatureError("signcrypted data signature does not verify")


def unsigncrypt_data(
    sd: SigncryptedData, table: SymKeyTable, signature_table: Mapping[int, VerifyKey] | None
) -> bytes | NeedKey:
    """Verify, then decrypt with the matching table entry.

    ``signature_table=None`` skips the producer check; remote consumers rely on
    the cloud's signature over the delivering message instead.
    """
    if signature_table is not None:
        verify_signcrypted_data(sd, signature_table)
    record = table.get(sd.kid)
    if record is None:
        return NeedKey(sd.kid)
    nonce, ct = sd.body[:NONCE_BYTES], sd.body[NONCE_BYTES:]
    try:
        return AESGCM(record.sym_key).decrypt(nonce, ct, sd.kid)
    except InvalidTag as exc:
        raise AEADError("signcrypted data failed authentication") from exc
