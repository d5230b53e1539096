"""In-process message bus, envelopes and the traffic trace."""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field
from typing import Callable, Protocol

from seabrew.algebra.base import DecodeError
from seabrew.hybrid import SIGNATURE_BYTES, SealPublicKey, SignKey, VerifyKey
from seabrew.wire import Reader, u8, u64

log = logging.getLogger(__name__)

AUTHORITY_ID = 0xFFFF_FFFF_FFFF_FF01
CLOUD_ID = 0xFFFF_FFFF_FFFF_FF02
GATEWAY_ID = 0xFFFF_FFFF_FFFF_FF03
BROADCAST = 0xFFFF_FFFF_FFFF_FFFF

ENVELOPE_FRAMING = 1 + 8  # kind tag + sender id, not charged in accounting


class Kind(enum.IntEnum):
    INIT_EK = 1
    INIT_EK_GATEWAY = 2
    PRODUCER_WELCOME = 3
    PRODUCER_NOTIFY = 4
    PRODUCER_WSAN = 5
    CONSUMER_WELCOME = 6
    CONSUMER_NOTIFY = 7
    CONSUMER_WSAN = 8
    WSAN_WELCOME = 9
    UPLOAD_CP = 10
    UPLOAD_KEY = 11
    UPLOAD_DATA = 12
    DATA_REQUEST = 13
    DATA_RESPONSE = 14
    DIRECT_DATA = 15
    PRODUCER_LEAVE = 16
    CONSUMER_LEAVE = 17
    CONSUMER_LEAVE_GATEWAY = 18
    REVOCATION = 19
    PRODUCER_UPDATE = 20
    CONSUMER_UPDATE = 21


class ProtocolError(Exception):
    pass


class SignatureRejected(ProtocolError):
    pass


class UnknownEndpoint(ProtocolError):
    pass


@dataclass(frozen=True)
class Envelope:
    """kind (1 B) || sender (8 B) || payload || signature (40 B).

    The signature covers kind, sender and payload.  A sealed payload is
    encrypted before signing, with kind and sender bound as associated data.
    """

    kind: Kind
    sender: int
    payload: bytes
    signature: bytes = bytes(SIGNATURE_BYTES)

    def header(self) -> bytes:
        return u8(self.kind) + u64(self.sender)

    def signing_bytes(self) -> bytes:
        return self.header() + self.payload

    def to_bytes(self) -> bytes:
        return self.header() + self.payload + self.signature

    @classmethod
    def from_bytes(cls, data: bytes) -> "Envelope":
        if len(data) < ENVELOPE_FRAMING + SIGNATURE_BYTES:
            raise DecodeError("envelope too short")
        rd = Reader(data)
        kind = rd.u8()
        try:
            kind = Kind(kind)
        except ValueError:
            raise DecodeError(f"unknown message kind {kind}") from None
        sender = rd.u64()
        payload = rd.take(rd.remaining - SIGNATURE_BYTES)
        return cls(kind, sender, payload, rd.rest())

    def verify(self, key: VerifyKey | None) -> None:
        if key is None or not key.verify(self.signing_bytes(), self.signature):
            raise SignatureRejected(f"{self.kind.name} from {self.sender:#x} failed signature check")

    @classmethod
    def build(
        cls, kind: Kind, sender: int, payload: bytes, signer: SignKey | None, seal_to: SealPublicKey | None = None, rng=None
    ) -> "Envelope":
        if seal_to is not None:
            payload = seal_to.seal(payload, rng, aad=u8(kind) + u64(sender))
        env = cls(kind, sender, payload)
        if signer is None:
            return env
        return cls(kind, sender, payload, signer.sign(env.signing_bytes()))


@dataclass(frozen=True)
class TraceRecord:
    epoch: int
    kind: str
    sender: int
    receiver: int
    wire_bytes: int
    accounted_bytes: int
    channel: str

    FIELDS = ("epoch", "kind", "sender", "receiver", "wire_bytes", "accounted_bytes", "channel")


class Endpoint(Protocol):
    id: int
    wsan: bool

    def handle(self, env: Envelope, bus: "Bus"): ...


@dataclass
class Identity:
    """Pre-distributed public keys of an infrastructure node."""

    verify: VerifyKey
    seal: SealPublicKey


@dataclass
class Bus:
    """Reliable synchronous delivery with a per-message trace.

    ``tamper`` lets tests rewrite wire bytes in transit.
    """

    endpoints: dict[int, Endpoint] = field(default_factory=dict)
    directory: dict[int, Identity] = field(default_factory=dict)
    trace: list[TraceRecord] = field(default_factory=list)
    drops: list[tuple[int, str]] = field(default_factory=list)
    epoch: int = 0
    tamper: Callable[[Envelope, bytes], bytes] | None = None

    def attach(self, endpoint: Endpoint) -> None:
        self.endpoints[endpoint.id] = endpoint

    def detach(self, endpoint_id: int) -> None:
        self.endpoints.pop(endpoint_id, None)

    def _channel(self, sender: int, receiver: int) -> str:
        if receiver == BROADCAST:
            return "wsan"
        for eid in (sender, receiver):
            ep = self.endpoints.get(eid)
            if ep is not None and ep.wsan:
                return "wsan"
        return "internet"

    def _transmit(self, env: Envelope, receiver: int, excluded: int) -> Envelope:
        wire = env.to_bytes()
        if self.tamper is not None:
            wire = self.tamper(env, wire)
        accounted = len(wire) - ENVELOPE_FRAMING - excluded
        self.trace.append(
            TraceRecord(self.epoch, env.kind.name, env.sender, receiver, len(wire), accounted, self._channel(env.sender, receiver))
        )
        return Envelope.from_bytes(wire)

    def send(self, env: Envelope, receiver: int, excluded: int = 0):
        """Deliver to one endpoint and return whatever its handler returns."""
        target = self.endpoints.get(receiver)
        if target is None:
            raise UnknownEndpoint(f"no endpoint {receiver:#x}")
        return target.handle(self._transmit(env, receiver, excluded), self)

    def broadcast(self, env: Envelope, excluded: int = 0) -> None:
        """One WSAN transmission heard by every attached WSAN endpoint.

        Receiver-side failures are dropped and logged, never propagated.
        """
        received = self._transmit(env, BROADCAST, excluded)
        for eid, ep in list(self.endpoints.items()):
            if not ep.wsan or eid == env.sender:
                continue
            try:
                ep.handle(received, self)
            except Exception as exc:  # noqa: BLE001 - a broadcast drop must not stop delivery
                log.info("endpoint %#x dropped %s: %s", eid, env.kind.name, exc)
                self.drops.append((eid, f"{env.kind.name}: {exc}"))

    # -- trace queries -------------------------------------------------------

    def records(self, kind: Kind | None = None, channel: str | None = None) -> list[TraceRecord]:
        return [
            r for r in self.trace if (kind is None or r.kind == kind.name) and (channel is None or r.channel == channel)
        ]

    def mark(self) -> int:
        return len(self.trace)

    def since(self, mark: int) -> list[TraceRecord]:
        return self.trace[mark:]

    def trace_lines(self, delimiter: str = "\t") -> str:
        rows = [delimiter.join(TraceRecord.FIELDS)]
        for r in self.trace:
            rows.append(delimiter.join(str(getattr(r, f)) for f in TraceRecord.FIELDS))
        return "\n".join(rows) + "\n"
