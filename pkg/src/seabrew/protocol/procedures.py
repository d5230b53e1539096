"""The system procedures, driven over a :class:`~seabrew.protocol.bus.Bus`.

Each function runs one procedure to completion.  Out-of-band steps (device
enrollment with the authority) are direct method calls; everything else is a
signed message on the bus and shows up in its trace.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from seabrew import abe, hybrid
from seabrew.algebra.base import G1Element, PairingGroup
from seabrew.policy import PolicyTree, parse_policy
from seabrew.protocol.actors import (
    Authority,
    Cloud,
    Consumer,
    Delivery,
    Gateway,
    Producer,
    RejectedError,
    _ids,
)
from seabrew.protocol.bus import AUTHORITY_ID, CLOUD_ID, GATEWAY_ID, Bus, Kind
from seabrew.wire import lp16, u8, u64

log = logging.getLogger(__name__)


def _policy(policy: PolicyTree | str) -> PolicyTree:
    return parse_policy(policy) if isinstance(policy, str) else policy


def system_init(authority: Authority, cloud: Cloud, gateway: Gateway, bus: Bus) -> None:
    for node in (authority, cloud, gateway):
        bus.attach(node)
        bus.directory[node.id] = node.identity
    authority.setup()
    # steps 1-3: authority -> cloud -> gateway, which then creates the BPK
    bus.send(authority.envelope(Kind.INIT_EK, authority.ek.to_bytes()), CLOUD_ID)


def producer_join(producer: Producer, authority: Authority, cloud: Cloud, gateway: Gateway | None, is_wsan: bool, bus: Bus) -> int:
    pid = authority.enroll_producer(producer.sign_key.public, is_wsan)
    producer.id = pid
    producer.wsan = is_wsan
    bus.attach(producer)
    bus.send(authority.envelope(Kind.PRODUCER_WELCOME, u64(pid) + authority.ek.to_bytes()), pid)
    vk = producer.sign_key.public.to_bytes()
    notify = u64(pid) + u8(is_wsan) + lp16(vk) + u64(producer.ek.version)
    bus.send(authority.envelope(Kind.PRODUCER_NOTIFY, notify), CLOUD_ID)
    if is_wsan:
        bus.send(authority.envelope(Kind.PRODUCER_WSAN, u64(pid) + lp16(vk)), GATEWAY_ID)
    return pid


def consumer_join(
    consumer: Consumer, attributes: Iterable[str], authority: Authority, cloud: Cloud, gateway: Gateway | None, is_wsan: bool, bus: Bus
) -> int:
    cid, dk = authority.enroll_consumer(consumer.kdk, attributes, is_wsan)
    consumer.id = cid
    consumer.wsan = is_wsan
    bus.attach(consumer)
    bus.send(authority.envelope(Kind.CONSUMER_WELCOME, u64(cid) + dk.to_bytes(), seal_to=consumer.kdk), cid)
    kdk = consumer.kdk.to_bytes()
    notify = u64(cid) + u8(is_wsan) + lp16(kdk) + u64(dk.version) + dk.D.to_bytes()
    bus.send(authority.envelope(Kind.CONSUMER_NOTIFY, notify), CLOUD_ID)
    if is_wsan:
        bus.send(authority.envelope(Kind.CONSUMER_WSAN, u64(cid) + lp16(kdk)), GATEWAY_ID)
    return cid


def upload_remote(producer: Producer, object_id: str, message: G1Element, policy: PolicyTree | str, bus: Bus) -> abe.Ciphertext:
    cp = abe.encrypt(message, _policy(policy), producer.ek, producer.rng)
    payload = lp16(object_id.encode("utf-8")) + cp.to_bytes()
    bus.send(producer.envelope(Kind.UPLOAD_CP, payload), CLOUD_ID)
    return cp


def upload_wsan(producer: Producer, object_id: str, plaintext: bytes, policy: PolicyTree | str, bus: Bus) -> hybrid.SigncryptedData:
    record = ensure_symkey(producer, _policy(policy), bus)
    sd = hybrid.signcrypt_data(record, plaintext, producer.sign_key, producer.id, producer.rng)
    bus.send(producer.envelope(Kind.UPLOAD_DATA, lp16(object_id.encode("utf-8")) + sd.to_bytes()), CLOUD_ID)
    return sd


def ensure_symkey(producer: Producer, policy: PolicyTree, bus: Bus) -> hybrid.SymKeyRecord:
    record, sck = hybrid.get_or_create_symkey(producer.symkeys, policy, producer.ek, producer.rng, producer.sign_key, producer.id)
    if sck is not None:
        bus.send(producer.envelope(Kind.UPLOAD_KEY, sck.to_bytes()), CLOUD_ID)
    return record


def download(consumer: Consumer, object_id: str, bus: Bus):
    """Fetch and decrypt one object; ABE and hybrid errors propagate."""
    delivery: Delivery = consumer.request(object_id, bus)
    return delivery.plaintext


def direct_exchange(producer: Producer, plaintext: bytes, policy: PolicyTree | str, bus: Bus) -> hybrid.SigncryptedData:
    record = producer.symkeys.lookup(_policy(policy))
    if record is None:
        raise RejectedError("no SymKey Table entry for this policy; upload under it first")
    sd = hybrid.signcrypt_data(record, plaintext, producer.sign_key, producer.id, producer.rng)
    bus.broadcast(producer.envelope(Kind.DIRECT_DATA, sd.to_bytes()))
    return sd


def producer_leave(authority: Authority, cloud: Cloud, gateway: Gateway | None, pids: Sequence[int], bus: Bus) -> None:
    known = [p for p in pids if p in authority.producers]
    for p in set(pids) - set(known):
        log.warning("producer leave: unknown PID %d ignored", p)
    if not known:
        return
    wsan = [p for p in known if authority.producers[p][1]]
    bus.send(authority.envelope(Kind.PRODUCER_LEAVE, b"".join(u64(p) for p in known)), CLOUD_ID)
    if wsan and gateway is not None:
        # the gateway relays this exact signed message to the WSAN
        bus.send(authority.envelope(Kind.PRODUCER_LEAVE, b"".join(u64(p) for p in wsan)), GATEWAY_ID)
    for p in known:
        authority.producers.pop(p, None)


def consumer_leave(authority: Authority, cloud: Cloud, gateway: Gateway | None, cids: Sequence[int], bus: Bus) -> abe.UpdateKey:
    mk, update = authority.revoke(cids)
    payload = _ids(cids) + update.to_bytes()
    cloud_keys = bus.directory[CLOUD_ID]
    # step 1 onwards; the authority commits only after the chain succeeded
    bus.send(authority.envelope(Kind.CONSUMER_LEAVE, payload, seal_to=cloud_keys.seal), CLOUD_ID)
    authority.commit_revocation(mk, update, cids)
    return update


def remote_producer_update(cloud: Cloud, producer: Producer, bus: Bus) -> None:
    cloud.remote_producer_update(cloud.pt[producer.id], bus)


def remote_consumer_update(cloud: Cloud, consumer: Consumer, bus: Bus) -> None:
    cloud.remote_consumer_update(cloud.ct[consumer.id], bus)


@dataclass
class Deployment:
    """One authority, cloud and gateway on a shared bus, plus endpoints."""

    group: PairingGroup
    rng: object
    n_max: int = 64
    bus: Bus = field(default_factory=Bus)

    def __post_init__(self) -> None:
        self.authority = Authority(self.group, self.rng)
        self.cloud = Cloud(self.group, self.rng)
        self.gateway = Gateway(self.group, self.n_max, self.rng)
        self.producers: dict[int, Producer] = {}
        self.consumers: dict[int, Consumer] = {}
        system_init(self.authority, self.cloud, self.gateway, self.bus)

    def add_producer(self, wsan: bool = False) -> Producer:
        p = Producer(self.group, self.rng)
        producer_join(p, self.authority, self.cloud, self.gateway, wsan, self.bus)
        self.producers[p.id] = p
        return p

    def add_consumer(self, attributes: Iterable[str], wsan: bool = False) -> Consumer:
        c = Consumer(self.group, self.rng)
        consumer_join(c, attributes, self.authority, self.cloud, self.gateway, wsan, self.bus)
        self.consumers[c.id] = c
        return c

    def upload_remote(self, producer: Producer, object_id: str, message: G1Element, policy) -> abe.Ciphertext:
        return upload_remote(producer, object_id, message, policy, self.bus)

    def upload_wsan(self, producer: Producer, object_id: str, plaintext: bytes, policy) -> hybrid.SigncryptedData:
        return upload_wsan(producer, object_id, plaintext, policy, self.bus)

    def download(self, consumer: Consumer, object_id: str):
        return download(consumer, object_id, self.bus)

    def direct_exchange(self, producer: Producer, plaintext: bytes, policy) -> hybrid.SigncryptedData:
        return direct_exchange(producer, plaintext, policy, self.bus)

    def producer_leave(self, *pids: int) -> None:
        producer_leave(self.authority, self.cloud, self.gateway, pids, self.bus)

    def consumer_leave(self, *cids: int) -> abe.UpdateKey:
        return consumer_leave(self.authority, self.cloud, self.gateway, cids, self.bus)

    def random_message(self) -> G1Element:
        return self.authority.ek.l ** self.group.random_nonzero_scalar(self.rng)
