"""WSAN traffic of the revocation procedures.

SEA-BREW figures come from running the real protocol stack and reading the
bus trace.  The BSW-KU baseline has no cryptographic execution; its messages
are sized from the construction (see :class:`BswKuModel`).
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

from seabrew.algebra import get_group
from seabrew.hybrid import SIGNATURE_BYTES
from seabrew.protocol import Deployment, Kind


@dataclass(frozen=True)
class BswKuModel:
    """Plain CP-ABE rekeying: one EK broadcast plus one DK unicast per consumer.

    Every message is charged a signature, an 8-byte identifier and a 16-byte
    field (the receiver's authentication tag on unicasts, the version and
    padding on the broadcast), then the compressed group elements.
    """

    g0_bytes: int = 64
    g1_bytes: int = 128
    signature_bytes: int = SIGNATURE_BYTES
    id_bytes: int = 8
    aux_bytes: int = 16

    @property
    def per_message(self) -> int:
        return self.signature_bytes + self.id_bytes + self.aux_bytes

    def broadcast(self) -> int:
        # new EK: h and l
        return self.per_message + self.g0_bytes + self.g1_bytes

    def unicast(self, attrs_per_key: int) -> int:
        # fresh DK: D plus a (D_j, D'_j) pair per attribute
        return self.per_message + (2 * attrs_per_key + 1) * self.g0_bytes

    def consumer_leave_total(self, n_consumers: int, attrs_per_key: int) -> int:
        return self.broadcast() + n_consumers * self.unicast(attrs_per_key)

    def producer_leave(self, n_pids: int = 1) -> int:
        return self.id_bytes * n_pids + self.signature_bytes


@dataclass
class TrafficRow:
    scheme: str
    procedure: str
    broadcast_messages: int
    broadcast_bytes: int
    unicast_messages: int
    unicast_bytes: int
    wire_bytes: int | None = None

    @property
    def total_bytes(self) -> int:
        return self.broadcast_bytes * self.broadcast_messages + self.unicast_bytes * self.unicast_messages


@dataclass
class TrafficReport:
    n_consumers: int
    n_producers: int
    attrs_per_key: int
    profile: str
    rows: list[TrafficRow] = field(default_factory=list)
    trace: str = ""

    def row(self, scheme: str, procedure: str) -> TrafficRow:
        for r in self.rows:
            if r.scheme == scheme and r.procedure == procedure:
                return r
        raise KeyError((scheme, procedure))


def _wsan_row(records, scheme: str, procedure: str) -> TrafficRow:
    wsan = [r for r in records if r.channel == "wsan"]
    bcasts = [r for r in wsan if r.receiver == 0xFFFF_FFFF_FFFF_FFFF]
    unis = [r for r in wsan if r not in bcasts]
    if len({r.accounted_bytes for r in bcasts}) > 1 or len({r.accounted_bytes for r in unis}) > 1:
        raise AssertionError("messages of one procedure differ in size")
    return TrafficRow(
        scheme,
        procedure,
        len(bcasts),
        bcasts[0].accounted_bytes if bcasts else 0,
        len(unis),
        unis[0].accounted_bytes if unis else 0,
        sum(r.wire_bytes for r in wsan),
    )


def run_traffic_experiment(
    n_consumers: int = 50, n_producers: int = 50, attrs_per_key: int = 20, profile: str = "80bit", rng=None
) -> TrafficReport:
    rng = rng if rng is not None else random.SystemRandom()
    dep = Deployment(get_group(profile), rng, n_max=n_consumers)
    attrs = [f"attr{i:02d}" for i in range(attrs_per_key)]
    producers = [dep.add_producer(wsan=True) for _ in range(n_producers)]
    consumers = [dep.add_consumer(attrs, wsan=True) for _ in range(n_consumers)]
    report = TrafficReport(n_consumers, n_producers, attrs_per_key, profile)

    mark = dep.bus.mark()
    dep.consumer_leave(consumers[-1].id)
    report.rows.append(_wsan_row(dep.bus.since(mark), "SEA-BREW", "consumer leave"))

    mark = dep.bus.mark()
    dep.producer_leave(producers[-1].id)
    report.rows.append(_wsan_row(dep.bus.since(mark), "SEA-BREW", "producer leave"))

    model = BswKuModel(get_group(profile).params.g0_bytes, get_group(profile).params.g1_bytes)
    report.rows.append(TrafficRow("BSW-KU", "consumer leave", 1, model.broadcast(), n_consumers, model.unicast(attrs_per_key)))
    report.rows.append(TrafficRow("BSW-KU", "producer leave", 1, model.producer_leave(), 0, 0))
    report.trace = dep.bus.trace_lines()
    return report
