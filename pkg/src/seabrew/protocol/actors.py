"""Protocol actors: key authority, cloud server, WSAN gateway and endpoints.

Each actor owns its state and reacts to envelopes in :meth:`handle`.  Message
payloads are plain concatenations of the canonical encodings, framed with the
helpers in :mod:`seabrew.wire`.
"""

from __future__ import annotations

import logging
import secrets
import threading
from dataclasses import dataclass, field
from typing import Iterable

from seabrew import abe, bcast, hybrid
from seabrew.algebra.base import G0Element, G1Element, PairingGroup
from seabrew.hybrid import SealPrivateKey, SealPublicKey, SignKey, SymKeyTable, VerifyKey
from seabrew.policy import PolicyTree
from seabrew.protocol.bus import (
    AUTHORITY_ID,
    CLOUD_ID,
    GATEWAY_ID,
    Bus,
    Envelope,
    Identity,
    Kind,
    ProtocolError,
)
from seabrew.wire import Reader, lp16, lp32, u8, u32, u64

log = logging.getLogger(__name__)

OBJ_CP = 1
OBJ_KEY = 2
OBJ_DATA = 3


class RejectedError(ProtocolError):
    """The receiver refused a well-signed message (unknown id, duplicate, ...)."""


def kid_object_id(kid: bytes) -> str:
    return "kid:" + kid.hex()


def _ids(ids: Iterable[int]) -> bytes:
    ids = list(ids)
    return u32(len(ids)) + b"".join(u64(i) for i in ids)


def _read_ids(rd: Reader) -> list[int]:
    return [rd.u64() for _ in range(rd.u32())]


class UpdateHistory:
    """U^(1)..U^(v) with prefix products for O(1) range factors.

    ``dk_prefix[v]`` is the product of U_DK over versions 1..v and
    ``cp_prefix[v]`` the product of U_CP; because U_CP = U_DK^-1 the factor
    for any range (a, b] needs no inversion.
    """

    def __init__(self, order: int) -> None:
        self.order = order
        self.updates: list[abe.UpdateKey] = []
        self.dk_prefix = [1]
        self.cp_prefix = [1]

    @property
    def version(self) -> int:
        return len(self.updates)

    def append(self, update: abe.UpdateKey) -> None:
        if update.version != self.version + 1:
            raise abe.MissingUpdateError(f"expected update {self.version + 1}, got {update.version}")
        self.updates.append(update)
        self.dk_prefix.append(self.dk_prefix[-1] * update.u_dk % self.order)
        self.cp_prefix.append(self.cp_prefix[-1] * update.u_cp % self.order)

    def _check(self, v_from: int, v_to: int) -> None:
        if not 0 <= v_from <= v_to <= self.version:
            raise abe.MissingUpdateError(f"range ({v_from}, {v_to}] not covered by history 1..{self.version}")

    def dk_factor(self, v_from: int, v_to: int) -> int:
        self._check(v_from, v_to)
        return self.dk_prefix[v_to] * self.cp_prefix[v_from] % self.order

    def cp_factor(self, v_from: int, v_to: int) -> int:
        self._check(v_from, v_to)
        return self.cp_prefix[v_to] * self.dk_prefix[v_from] % self.order

    @property
    def latest_u_ek(self) -> G0Element | None:
        return self.updates[-1].u_ek if self.updates else None


class _Node:
    id: int
    wsan: bool = False

    def __init__(self, group: PairingGroup, rng=None) -> None:
        self.group = group
        self.rng = rng if rng is not None else secrets.SystemRandom()
        self.sign_key = SignKey.generate(self.rng)
        self.seal_key = SealPrivateKey.generate(self.rng)

    @property
    def identity(self) -> Identity:
        return Identity(self.sign_key.public, self.seal_key.public)

    def envelope(self, kind: Kind, payload: bytes, seal_to: SealPublicKey | None = None) -> Envelope:
        return Envelope.build(kind, self.id, payload, self.sign_key, seal_to, self.rng)

    def handle(self, env: Envelope, bus: Bus):
        handler = getattr(self, "on_" + env.kind.name.lower(), None)
        if handler is None:
            raise RejectedError(f"{type(self).__name__} does not accept {env.kind.name}")
        return handler(env, bus)


# -- key authority ---------------------------------------------------------------


class Authority(_Node):
    id = AUTHORITY_ID

    def __init__(self, group: PairingGroup, rng=None) -> None:
        super().__init__(group, rng)
        self.mk: abe.MasterKey | None = None
        self.ek: abe.EncryptionKey | None = None
        self.history = UpdateHistory(group.order)
        self.producers: dict[int, tuple[VerifyKey, bool]] = {}
        self.consumers: dict[int, tuple[SealPublicKey, frozenset[str], bool]] = {}
        self._next_id = 1
        self.consumer_leaves = 0

    def _issue_id(self) -> int:
        pid = self._next_id
        self._next_id += 1
        return pid

    @property
    def v_mk(self) -> int:
        return 0 if self.mk is None else self.mk.version

    def setup(self) -> None:
        self.mk, self.ek = abe.setup(self.group, self.rng)

    def enroll_producer(self, vk: VerifyKey, wsan: bool) -> int:
        # out-of-band, authenticated enrollment is assumed
        if any(known == vk for known, _ in self.producers.values()):
            raise RejectedError("signature verification key already registered")
        pid = self._issue_id()
        self.producers[pid] = (vk, wsan)
        return pid

    def enroll_consumer(self, kdk: SealPublicKey, attributes: Iterable[str], wsan: bool) -> tuple[int, abe.DecryptionKey]:
        attrs = frozenset(attributes)
        dk = abe.keygen(self.mk, attrs, self.rng)
        cid = self._issue_id()
        self.consumers[cid] = (kdk, attrs, wsan)
        return cid, dk

    def revoke(self, cids: Iterable[int]) -> tuple[abe.MasterKey, abe.UpdateKey]:
        unknown = [c for c in cids if c not in self.consumers]
        if unknown:
            log.warning("revoking unknown consumers %s", unknown)
        return abe.update_mk(self.mk, self.rng)

    def commit_revocation(self, mk: abe.MasterKey, update: abe.UpdateKey, cids: Iterable[int]) -> None:
        self.mk = mk
        self.ek = abe.update_ek(self.ek, update)
        self.history.append(update)
        for c in cids:
            self.consumers.pop(c, None)
        self.consumer_leaves += 1


# -- cloud server ----------------------------------------------------------------


@dataclass
class ProducerRow:
    pid: int
    sk: VerifyKey
    v_ek: int
    wsan: bool


@dataclass
class ConsumerRow:
    """CT tuple.  ``d_version`` tracks the D field, ``v_dk`` the consumer's key."""

    cid: int
    D: G0Element
    v_dk: int
    kdk: SealPublicKey
    wsan: bool
    d_version: int = 0


@dataclass
class StoredObject:
    kind: int
    item: object
    version: int | None  # None for versionless signcrypted data

    def encode(self) -> bytes:
        return self.item.to_bytes()


class Cloud(_Node):
    """Honest-but-curious storage with lazy proxy re-encryption."""

    id = CLOUD_ID

    def __init__(self, group: PairingGroup, rng=None) -> None:
        super().__init__(group, rng)
        self.ek: abe.EncryptionKey | None = None
        self.v_mk = 0
        self.pt: dict[int, ProducerRow] = {}
        self.ct: dict[int, ConsumerRow] = {}
        self.store: dict[str, StoredObject] = {}
        self.history = UpdateHistory(group.order)
        self.stats = {"update_cp": 0, "update_dk": 0, "producer_update": 0}
        self._locks: dict[object, threading.Lock] = {}
        self._locks_guard = threading.Lock()

    def _lock(self, key) -> threading.Lock:
        with self._locks_guard:
            return self._locks.setdefault(key, threading.Lock())

    def _authority(self, env: Envelope, bus: Bus) -> None:
        env.verify(bus.directory[AUTHORITY_ID].verify)

    def on_init_ek(self, env: Envelope, bus: Bus) -> None:
        self._authority(env, bus)
        self.ek = abe.EncryptionKey.from_bytes(env.payload, self.group)
        self.v_mk = self.ek.version
        bus.send(self.envelope(Kind.INIT_EK_GATEWAY, env.payload), GATEWAY_ID)

    def on_producer_notify(self, env: Envelope, bus: Bus) -> None:
        self._authority(env, bus)
        rd = Reader(env.payload)
        pid, wsan, sk, v_ek = rd.u64(), bool(rd.u8()), VerifyKey.from_bytes(rd.lp16()), rd.u64()
        rd.done()
        self.pt[pid] = ProducerRow(pid, sk, v_ek, wsan)

    def on_consumer_notify(self, env: Envelope, bus: Bus) -> None:
        self._authority(env, bus)
        rd = Reader(env.payload)
        cid, wsan = rd.u64(), bool(rd.u8())
        kdk = SealPublicKey.from_bytes(rd.lp16())
        v_dk = rd.u64()
        D = self.group.g0_from_bytes(rd.rest())
        self.ct[cid] = ConsumerRow(cid, D, v_dk, kdk, wsan, v_dk)

    def on_producer_leave(self, env: Envelope, bus: Bus) -> None:
        self._authority(env, bus)
        for pid in _read_pid_list(env.payload):
            if self.pt.pop(pid, None) is None:
                log.warning("producer leave for unknown PID %d", pid)

    def on_consumer_leave(self, env: Envelope, bus: Bus) -> None:
        self._authority(env, bus)
        rd = Reader(self.seal_key.open(env.payload, aad=env.header()))
        cids = _read_ids(rd)
        update = abe.UpdateKey.from_bytes(rd.rest(), self.group)
        if update.version != self.v_mk + 1:
            raise abe.MissingUpdateError(f"cloud at version {self.v_mk}, update is {update.version}")
        self.history.append(update)
        self.v_mk = update.version
        bus.epoch = self.v_mk
        for cid in cids:
            self.ct.pop(cid, None)
        # no eager re-encryption: ciphertexts are updated when next requested
        payload = _ids(cids) + update.to_bytes()
        gateway_keys = bus.directory[GATEWAY_ID]
        bus.send(self.envelope(Kind.CONSUMER_LEAVE_GATEWAY, payload, seal_to=gateway_keys.seal), GATEWAY_ID)
        # step 5: WSAN endpoints were updated by the broadcast
        for row in self.pt.values():
            if row.wsan:
                row.v_ek = self.v_mk
        for row in self.ct.values():
            if row.wsan:
                row.v_dk = self.v_mk

    # uploads

    def _producer(self, env: Envelope) -> ProducerRow:
        row = self.pt.get(env.sender)
        if row is None:
            raise RejectedError(f"unknown producer {env.sender}")
        env.verify(row.sk)
        return row

    def _after_upload(self, row: ProducerRow, version: int, bus: Bus) -> None:
        if version < self.v_mk:
            self.remote_producer_update(row, bus)

    def on_upload_cp(self, env: Envelope, bus: Bus) -> None:
        row = self._producer(env)
        rd = Reader(env.payload)
        object_id = rd.lp16().decode("utf-8")
        cp = abe.Ciphertext.from_bytes(rd.rest(), self.group)
        self.store[object_id] = StoredObject(OBJ_CP, cp, cp.version)
        self._after_upload(row, cp.version, bus)

    def on_upload_key(self, env: Envelope, bus: Bus) -> None:
        row = self._producer(env)
        sk = hybrid.SigncryptedKey.from_bytes(env.payload, self.group)
        if sk.pid != row.pid:
            raise RejectedError("signcrypted key names another producer")
        hybrid.verify_signcrypted_key(sk, {row.pid: row.sk})
        self.store[kid_object_id(sk.kid)] = StoredObject(OBJ_KEY, sk, sk.ciphertext.version)
        self._after_upload(row, sk.ciphertext.version, bus)

    def on_upload_data(self, env: Envelope, bus: Bus) -> None:
        row = self._producer(env)
        rd = Reader(env.payload)
        object_id = rd.lp16().decode("utf-8")
        sd = hybrid.SigncryptedData.from_bytes(rd.rest())
        if sd.pid != row.pid:
            raise RejectedError("signcrypted data names another producer")
        hybrid.verify_signcrypted_data(sd, {row.pid: row.sk})
        self.store[object_id] = StoredObject(OBJ_DATA, sd, None)

    def remote_producer_update(self, row: ProducerRow, bus: Bus) -> None:
        u_ek = self.history.latest_u_ek
        if u_ek is None or row.v_ek >= self.v_mk:
            return
        bus.send(self.envelope(Kind.PRODUCER_UPDATE, u64(self.v_mk) + u_ek.to_bytes()), row.pid)
        row.v_ek = self.v_mk
        self.stats["producer_update"] += 1

    # downloads

    def remote_consumer_update(self, row: ConsumerRow, bus: Bus) -> None:
        with self._lock(("ct", row.cid)):
            if row.v_dk >= self.v_mk:
                return
            if row.d_version < self.v_mk:
                factor = self.history.dk_factor(row.d_version, self.v_mk)
                with abe.meter.tagged("update_dk"):
                    row.D = row.D ** factor
                row.d_version = self.v_mk
                self.stats["update_dk"] += 1
            payload = u64(self.v_mk) + row.D.to_bytes()
            bus.send(self.envelope(Kind.CONSUMER_UPDATE, payload, seal_to=row.kdk), row.cid)
            row.v_dk = self.v_mk

    def refresh_object(self, object_id: str) -> StoredObject:
        """Bring a stored ciphertext to the current version (one exponentiation)."""
        with self._lock(("obj", object_id)):
            obj = self.store[object_id]
            if obj.version is None or obj.version >= self.v_mk:
                return obj
            factor = self.history.cp_factor(obj.version, self.v_mk)
            if obj.kind == OBJ_CP:
                item = abe.apply_cp_factor(obj.item, factor, self.v_mk)
            else:
                item = hybrid.SigncryptedKey(
                    obj.item.kid, abe.apply_cp_factor(obj.item.ciphertext, factor, self.v_mk), obj.item.pid, obj.item.signature
                )
            self.stats["update_cp"] += 1
            obj = StoredObject(obj.kind, item, self.v_mk)
            self.store[object_id] = obj
            return obj

    def on_data_request(self, env: Envelope, bus: Bus) -> None:
        # consumer requests are not signed; the CID is looked up in the CT
        row = self.ct.get(env.sender)
        if row is None:
            raise RejectedError(f"unknown consumer {env.sender}")
        object_id = Reader(env.payload).lp16().decode("utf-8")
        if object_id not in self.store:
            raise RejectedError(f"unknown object {object_id!r}")
        if row.v_dk < self.v_mk:
            self.remote_consumer_update(row, bus)
        obj = self.refresh_object(object_id)
        payload = lp16(object_id.encode("utf-8")) + u8(obj.kind) + obj.encode()
        return bus.send(self.envelope(Kind.DATA_RESPONSE, payload), row.cid)


def _read_pid_list(payload: bytes) -> list[int]:
    if len(payload) % 8:
        raise ProtocolError("malformed identifier list")
    rd = Reader(payload)
    return [rd.u64() for _ in range(len(payload) // 8)]


# -- gateway ---------------------------------------------------------------------


class Gateway(_Node):
    id = GATEWAY_ID
    wsan = False  # the bridge itself is not a WSAN listener

    def __init__(self, group: PairingGroup, n_max: int = 64, rng=None) -> None:
        super().__init__(group, rng)
        self.n_max = n_max
        self.ek: abe.EncryptionKey | None = None
        self.v_mk = 0
        self.signature_table: dict[int, VerifyKey] = {}
        self.consumer_table: dict[int, SealPublicKey] = {}
        self.bpk: bcast.BroadcastPublicKey | None = None
        self._bsk: list[bcast.BroadcastPrivateKey] = []
        self.index: dict[int, int] = {}
        self._next_index = 1

    def on_init_ek_gateway(self, env: Envelope, bus: Bus) -> None:
        env.verify(bus.directory[CLOUD_ID].verify)
        self.ek = abe.EncryptionKey.from_bytes(env.payload, self.group)
        self.v_mk = self.ek.version
        self.bpk, self._bsk = bcast.bc_setup(self.n_max, self.group, self.rng)

    def on_producer_wsan(self, env: Envelope, bus: Bus) -> None:
        env.verify(bus.directory[AUTHORITY_ID].verify)
        pid, vk = _read_signature_row(Reader(env.payload))
        self.signature_table[pid] = vk
        # step 5: relay the authority's signed message unchanged
        bus.broadcast(env)

    def on_consumer_wsan(self, env: Envelope, bus: Bus) -> None:
        env.verify(bus.directory[AUTHORITY_ID].verify)
        rd = Reader(env.payload)
        cid = rd.u64()
        kdk = SealPublicKey.from_bytes(rd.lp16())
        rd.done()
        if self._next_index > self.n_max:
            raise RejectedError(f"broadcast system full (n={self.n_max})")
        i = self._next_index
        self._next_index += 1
        self.index[cid] = i
        sealed = kdk.seal(self._bsk[i - 1].to_bytes(), self.rng)
        payload = _signature_table(self.signature_table) + lp32(self.bpk.to_bytes()) + lp32(sealed)
        bus.send(self.envelope(Kind.WSAN_WELCOME, payload), cid)
        self.consumer_table[cid] = kdk

    def on_producer_leave(self, env: Envelope, bus: Bus) -> None:
        env.verify(bus.directory[AUTHORITY_ID].verify)
        for pid in _read_pid_list(env.payload):
            self.signature_table.pop(pid, None)
        bus.broadcast(env)

    def on_consumer_leave_gateway(self, env: Envelope, bus: Bus) -> None:
        env.verify(bus.directory[CLOUD_ID].verify)
        rd = Reader(self.seal_key.open(env.payload, aad=env.header()))
        cids = _read_ids(rd)
        update = abe.UpdateKey.from_bytes(rd.rest(), self.group)
        for cid in cids:
            self.consumer_table.pop(cid, None)
            self.index.pop(cid, None)
        receivers = frozenset(self.index[c] for c in self.consumer_table)
        payload = update.u_ek.to_bytes()
        excluded = 0
        if receivers:
            header = bcast.bc_encrypt(self.bpk, receivers, self.group.scalar_to_bytes(update.u_dk), self.rng)
            payload += header.to_bytes()
            excluded = len(header.to_bytes()) - header.accounted_size
        self.ek = abe.update_ek(self.ek, update)
        self.v_mk = update.version
        bus.broadcast(self.envelope(Kind.REVOCATION, payload), excluded=excluded)


def _signature_table(table: dict[int, VerifyKey]) -> bytes:
    return u32(len(table)) + b"".join(u64(pid) + lp16(vk.to_bytes()) for pid, vk in sorted(table.items()))


def _read_signature_row(rd: Reader) -> tuple[int, VerifyKey]:
    return rd.u64(), VerifyKey.from_bytes(rd.lp16())


def _read_signature_table(rd: Reader) -> dict[int, VerifyKey]:
    return dict(_read_signature_row(rd) for _ in range(rd.u32()))


# -- endpoints -------------------------------------------------------------------


class Producer(_Node):
    def __init__(self, group: PairingGroup, rng=None) -> None:
        super().__init__(group, rng)
        self.id = 0
        self.ek: abe.EncryptionKey | None = None
        self.symkeys = SymKeyTable()
        self.wsan = False

    def on_producer_welcome(self, env: Envelope, bus: Bus) -> None:
        env.verify(bus.directory[AUTHORITY_ID].verify)
        rd = Reader(env.payload)
        pid = rd.u64()
        if pid != self.id:
            raise RejectedError("welcome addressed to another producer")
        self.ek = abe.EncryptionKey.from_bytes(rd.rest(), self.group)

    def on_producer_update(self, env: Envelope, bus: Bus) -> None:
        env.verify(bus.directory[CLOUD_ID].verify)
        rd = Reader(env.payload)
        version = rd.u64()
        self.ek = abe.update_ek(self.ek, self.group.g0_from_bytes(rd.rest()), version)

    def on_revocation(self, env: Envelope, bus: Bus) -> None:
        env.verify(bus.directory[GATEWAY_ID].verify)
        u_ek = self.group.g0_from_bytes(env.payload[: self.group.params.g0_bytes])
        self.ek = abe.update_ek(self.ek, u_ek, self.ek.version + 1)
        self.symkeys.wipe()

    def on_producer_wsan(self, env: Envelope, bus: Bus) -> None:
        pass  # signature-table broadcasts are for consumers

    def on_producer_leave(self, env: Envelope, bus: Bus) -> None:
        pass

    def on_direct_data(self, env: Envelope, bus: Bus) -> None:
        pass

    def state_dump(self) -> dict:
        """Everything the producer retains; plaintexts never appear here."""
        return {
            "pid": self.id,
            "wsan": self.wsan,
            "ek_version": None if self.ek is None else self.ek.version,
            "symkeys": {r.kid.hex(): str(r.policy) for r in self.symkeys.by_kid.values()},
        }


@dataclass
class Delivery:
    object_id: str
    plaintext: object = None
    error: Exception | None = None


class Consumer(_Node):
    def __init__(self, group: PairingGroup, rng=None) -> None:
        super().__init__(group, rng)
        self.id = 0
        self.dk: abe.DecryptionKey | None = None
        self.symkeys = SymKeyTable()
        self.signature_table: dict[int, VerifyKey] = {}
        self.bpk: bcast.BroadcastPublicKey | None = None
        self.bsk: bcast.BroadcastPrivateKey | None = None
        self.wsan = False
        self.inbox: list[Delivery] = []
        self._last: Delivery | None = None

    @property
    def kdk(self) -> SealPublicKey:
        return self.seal_key.public

    def on_consumer_welcome(self, env: Envelope, bus: Bus) -> None:
        env.verify(bus.directory[AUTHORITY_ID].verify)
        rd = Reader(self.seal_key.open(env.payload, aad=env.header()))
        cid = rd.u64()
        if cid != self.id:
            raise RejectedError("welcome addressed to another consumer")
        self.dk = abe.DecryptionKey.from_bytes(rd.rest(), self.group)

    def on_wsan_welcome(self, env: Envelope, bus: Bus) -> None:
        env.verify(bus.directory[GATEWAY_ID].verify)
        rd = Reader(env.payload)
        self.signature_table = _read_signature_table(rd)
        self.bpk = bcast.BroadcastPublicKey.from_bytes(rd.lp32(), self.group)
        self.bsk = bcast.BroadcastPrivateKey.from_bytes(self.seal_key.open(rd.lp32()), self.group)
        rd.done()

    def on_producer_wsan(self, env: Envelope, bus: Bus) -> None:
        env.verify(bus.directory[AUTHORITY_ID].verify)
        pid, vk = _read_signature_row(Reader(env.payload))
        self.signature_table[pid] = vk

    def on_producer_leave(self, env: Envelope, bus: Bus) -> None:
        env.verify(bus.directory[AUTHORITY_ID].verify)
        for pid in _read_pid_list(env.payload):
            self.signature_table.pop(pid, None)

    def on_revocation(self, env: Envelope, bus: Bus) -> None:
        env.verify(bus.directory[GATEWAY_ID].verify)
        n = self.group.params.g0_bytes
        header = bcast.BroadcastHeader.from_bytes(env.payload[n:], self.bpk)
        u_dk = self.group.scalar_from_bytes(bcast.bc_decrypt(self.bpk, self.bsk, header))
        self.dk = abe.apply_dk_factor(self.dk, u_dk, self.dk.version + 1)
        self.symkeys.wipe()

    def on_consumer_update(self, env: Envelope, bus: Bus) -> None:
        env.verify(bus.directory[CLOUD_ID].verify)
        rd = Reader(self.seal_key.open(env.payload, aad=env.header()))
        version = rd.u64()
        D = self.group.g0_from_bytes(rd.rest())
        if version <= self.dk.version:
            raise abe.StaleUpdateError(f"key already at version {self.dk.version}")
        self.dk = self.dk.with_d(D, version)

    def on_data_response(self, env: Envelope, bus: Bus) -> Delivery:
        env.verify(bus.directory[CLOUD_ID].verify)
        rd = Reader(env.payload)
        object_id = rd.lp16().decode("utf-8")
        kind = rd.u8()
        body = rd.rest()
        if kind == OBJ_CP:
            return Delivery(object_id, abe.decrypt(abe.Ciphertext.from_bytes(body, self.group), self.dk))
        if kind == OBJ_KEY:
            sk = hybrid.SigncryptedKey.from_bytes(body, self.group)
            record = hybrid.unsigncrypt_key(sk, self.dk)
            self.symkeys.add(record)
            return Delivery(object_id, record)
        if kind == OBJ_DATA:
            sd = hybrid.SigncryptedData.from_bytes(body)
            return Delivery(object_id, self.open_data(sd, bus, verify=False))
        raise ProtocolError(f"unknown object kind {kind}")

    def open_data(self, sd: hybrid.SigncryptedData, bus: Bus, verify: bool) -> bytes:
        table = self.signature_table if verify else None
        out = hybrid.unsigncrypt_data(sd, self.symkeys, table)
        if isinstance(out, hybrid.NeedKey):
            self.request(kid_object_id(out.kid), bus)
            out = hybrid.unsigncrypt_data(sd, self.symkeys, None)
            if isinstance(out, hybrid.NeedKey):
                raise ProtocolError("signcrypted key download did not yield the key")
        return out

    def on_direct_data(self, env: Envelope, bus: Bus) -> None:
        sd = hybrid.SigncryptedData.from_bytes(env.payload)
        if env.sender != sd.pid:
            raise RejectedError("direct data sender does not match PID")
        # the inner signature is the producer's; the envelope carries the same key
        env.verify(self.signature_table.get(sd.pid))
        try:
            self.inbox.append(Delivery("direct", self.open_data(sd, bus, verify=True)))
        except (abe.ABEError, hybrid.HybridError) as exc:
            self.inbox.append(Delivery("direct", error=exc))
            raise

    def on_consumer_leave(self, env: Envelope, bus: Bus) -> None:
        pass

    def request(self, object_id: str, bus: Bus) -> Delivery:
        env = Envelope(Kind.DATA_REQUEST, self.id, lp16(object_id.encode("utf-8")))
        return bus.send(env, CLOUD_ID)
