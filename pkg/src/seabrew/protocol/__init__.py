"""Message-driven actors and the system procedures."""

from seabrew.protocol.actors import (
    Authority,
    Cloud,
    Consumer,
    ConsumerRow,
    Delivery,
    Gateway,
    Producer,
    ProducerRow,
    RejectedError,
    StoredObject,
    UpdateHistory,
    kid_object_id,
)
from seabrew.protocol.bus import (
    AUTHORITY_ID,
    BROADCAST,
    CLOUD_ID,
    GATEWAY_ID,
    Bus,
    Envelope,
    Kind,
    ProtocolError,
    SignatureRejected,
    TraceRecord,
    UnknownEndpoint,
)
from seabrew.protocol.procedures import (
    Deployment,
    consumer_join,
    consumer_leave,
    direct_exchange,
    download,
    ensure_symkey,
    producer_join,
    producer_leave,
    remote_consumer_update,
    remote_producer_update,
    system_init,
    upload_remote,
    upload_wsan,
)

__all__ = [
    "AUTHORITY_ID",
    "Authority",
    "BROADCAST",
    "Bus",
    "CLOUD_ID",
    "Cloud",
    "Consumer",
    "ConsumerRow",
    "Delivery",
    "Deployment",
    "Envelope",
    "GATEWAY_ID",
    "Gateway",
    "Kind",
    "Producer",
    "ProducerRow",
    "ProtocolError",
    "RejectedError",
    "SignatureRejected",
    "StoredObject",
    "TraceRecord",
    "UnknownEndpoint",
    "UpdateHistory",
    "consumer_join",
    "consumer_leave",
    "direct_exchange",
    "download",
    "ensure_symkey",
    "kid_object_id",
    "producer_join",
    "producer_leave",
    "remote_consumer_update",
    "remote_producer_update",
    "system_init",
    "upload_remote",
    "upload_wsan",
]
