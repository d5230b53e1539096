"""Bilinear group providers.

``get_group("80bit")`` returns the type-A pairing used for all byte
accounting; ``get_group("insecure-sim")`` returns the discrete-log-tracking
stand-in used by the workload simulator.
"""

from seabrew.algebra.base import (
    ATTRIBUTE_DST,
    DecodeError,
    G0Element,
    G1Element,
    GroupParams,
    PairingGroup,
    g0_exp,
    g1_exp,
)
from seabrew.algebra.exponent import ExponentGroup
from seabrew.algebra.meter import Meter, metering, tagged
from seabrew.algebra.typea import TypeACurve, type_a_80

PROFILES = ("80bit", "insecure-sim")

_sim_group: ExponentGroup | None = None


def get_group(profile: str = "80bit") -> PairingGroup:
    global _sim_group
    if profile == "80bit":
        return type_a_80()
    if profile == "insecure-sim":
        if _sim_group is None:
            _sim_group = ExponentGroup()
        return _sim_group
    raise ValueError(f"unknown group profile {profile!r}; expected one of {PROFILES}")


__all__ = [
    "ATTRIBUTE_DST",
    "DecodeError",
    "ExponentGroup",
    "G0Element",
    "G1Element",
    "GroupParams",
    "Meter",
    "PROFILES",
    "PairingGroup",
    "TypeACurve",
    "g0_exp",
    "g1_exp",
    "get_group",
    "metering",
    "tagged",
    "type_a_80",
]
