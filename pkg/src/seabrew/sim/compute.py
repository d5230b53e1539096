"""Cloud-side exponentiation counts under a request/revocation workload.

SEA-BREW is executed for real on the insecure exponent-tracking backend: every
stale ciphertext or key touched by a request goes through ``apply_cp_factor``
or ``apply_dk_factor`` and the meter counts what actually ran.  YWRL is only
modelled: re-encrypting an object costs one exponentiation per attribute it
shares with the revoked keys pending since its last update, and likewise for
keys.

Requests pick objects and consumers uniformly.  Within one revocation epoch
only the first request for a stale item does work, so each epoch's requests
are processed as a batch.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import stats

from seabrew import abe
from seabrew.algebra import PROFILES, get_group, meter
from seabrew.policy import PolicyTree
from seabrew.protocol.actors import UpdateHistory


@dataclass(frozen=True)
class WorkloadConfig:
    ciphertexts: int = 1000
    universe: int = 200
    attrs: int = 15
    daily_requests: float = 5000.0
    revocation_days: float = 5.0
    horizon_days: float = 30.0
    reps: int = 20
    seed: int = 0
    consumers: int = 100
    profile: str = "insecure-sim"

    def __post_init__(self) -> None:
        for name in ("ciphertexts", "universe", "attrs", "reps", "consumers"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        for name in ("daily_requests", "revocation_days", "horizon_days"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.attrs > self.universe:
            raise ValueError("attrs cannot exceed the attribute universe")
        if self.profile not in PROFILES:
            raise ValueError(f"unknown profile {self.profile!r}")

    @classmethod
    def paper_scale(cls, **overrides) -> "WorkloadConfig":
        """1 year, 100k ciphertexts, 50k requests/day, revocations every 15 days, 100 reps."""
        base = dict(
            ciphertexts=100_000, universe=200, attrs=15, daily_requests=50_000.0, revocation_days=15.0, horizon_days=365.0, reps=100
        )
        base.update(overrides)
        return cls(**base)

    def with_(self, **changes) -> "WorkloadConfig":
        return replace(self, **changes)


@dataclass
class RepResult:
    seabrew_update_cp: int
    seabrew_update_dk: int
    ywrl_update_cp: int
    ywrl_update_dk: int
    revocations: int
    requests: int
    reencryptions: int
    key_updates: int

    @property
    def seabrew_total(self) -> int:
        return self.seabrew_update_cp + self.seabrew_update_dk

    @property
    def ywrl_total(self) -> int:
        return self.ywrl_update_cp + self.ywrl_update_dk


@dataclass(frozen=True)
class Estimate:
    mean: float
    half_width: float
    n: int

    @property
    def low(self) -> float:
        return self.mean - self.half_width

    @property
    def high(self) -> float:
        return self.mean + self.half_width


def confidence_interval(values, level: float = 0.95) -> Estimate:
    x = np.asarray(values, dtype=float)
    n = len(x)
    mean = float(x.mean())
    if n < 2:
        return Estimate(mean, 0.0, n)
    sem = float(x.std(ddof=1)) / np.sqrt(n)
    return Estimate(mean, float(stats.t.ppf(0.5 + level / 2, n - 1)) * sem, n)


@dataclass
class MeterReport:
    """Per-configuration results across repetitions."""

    config: WorkloadConfig
    reps: list[RepResult] = field(default_factory=list)

    def estimate(self, metric: str) -> Estimate:
        return confidence_interval([getattr(r, metric) for r in self.reps])

    @property
    def seabrew(self) -> Estimate:
        return self.estimate("seabrew_total")

    @property
    def ywrl(self) -> Estimate:
        return self.estimate("ywrl_total")

    def cost_per_reencryption(self) -> float:
        n = sum(r.reencryptions for r in self.reps)
        return sum(r.seabrew_update_cp for r in self.reps) / n if n else 0.0


class YwrlCostModel:
    """Per-attribute versioning: cost is the overlap with pending revoked attributes."""

    def __init__(self) -> None:
        self.revoked: list[frozenset[int]] = [frozenset()]  # revoked[v] = A_rev of epoch v

    def revoke(self, attributes) -> None:
        self.revoked.append(frozenset(attributes))

    def pending(self, v_from: int, v_to: int) -> frozenset[int]:
        return frozenset().union(*self.revoked[v_from + 1 : v_to + 1])

    def update_cost(self, attributes: frozenset[int], v_from: int, v_to: int) -> int:
        return len(attributes & self.pending(v_from, v_to))


def _policy_for(attrs: np.ndarray) -> PolicyTree:
    return PolicyTree.gate(len(attrs), [f"u{a}" for a in attrs])


def run_repetition(cfg: WorkloadConfig, rep: int) -> RepResult:
    seq = np.random.SeedSequence([cfg.seed, rep])
    arrivals, revocations, attributes, crypto = (np.random.default_rng(s) for s in seq.spawn(4))
    crng = random.Random(int(crypto.integers(2**63)))
    group = get_group(cfg.profile)

    def draw_attrs() -> np.ndarray:
        return np.sort(attributes.choice(cfg.universe, size=cfg.attrs, replace=False))

    mk, ek = abe.setup(group, crng)
    m = ek.l ** group.random_nonzero_scalar(crng)
    obj_attrs = [draw_attrs() for _ in range(cfg.ciphertexts)]
    store = [abe.encrypt(m, _policy_for(a), ek, crng) for a in obj_attrs]
    obj_sets = [frozenset(a.tolist()) for a in obj_attrs]
    obj_version = np.zeros(cfg.ciphertexts, dtype=np.int64)

    cons_attrs = [draw_attrs() for _ in range(cfg.consumers)]
    keys = [abe.keygen(mk, [f"u{a}" for a in c], crng) for c in cons_attrs]
    cons_sets = [frozenset(c.tolist()) for c in cons_attrs]
    cons_version = np.zeros(cfg.consumers, dtype=np.int64)

    # revocation instants over the horizon
    times = []
    t = revocations.exponential(cfg.revocation_days)
    while t < cfg.horizon_days:
        times.append(t)
        t += revocations.exponential(cfg.revocation_days)
    victims = revocations.integers(cfg.consumers, size=len(times))
    bounds = [0.0] + times + [cfg.horizon_days]

    history = UpdateHistory(group.order)
    ywrl = YwrlCostModel()
    out = RepResult(0, 0, 0, 0, len(times), 0, 0, 0)
    v_mk = 0
    with meter.metering() as mt:
        for epoch in range(len(bounds) - 1):
            n_req = int(arrivals.poisson(cfg.daily_requests * (bounds[epoch + 1] - bounds[epoch])))
            objs = arrivals.integers(cfg.ciphertexts, size=n_req)
            cons = arrivals.integers(cfg.consumers, size=n_req)
            out.requests += n_req
            if v_mk:
                for c in np.unique(cons):
                    c = int(c)
                    if cons_version[c] < v_mk:
                        factor = history.dk_factor(int(cons_version[c]), v_mk)
                        keys[c] = abe.apply_dk_factor(keys[c], factor, v_mk)
                        out.ywrl_update_dk += ywrl.update_cost(cons_sets[c], int(cons_version[c]), v_mk)
                        cons_version[c] = v_mk
                        out.key_updates += 1
                for o in np.unique(objs):
                    o = int(o)
                    if obj_version[o] < v_mk:
                        factor = history.cp_factor(int(obj_version[o]), v_mk)
                        store[o] = abe.apply_cp_factor(store[o], factor, v_mk)
                        out.ywrl_update_cp += ywrl.update_cost(obj_sets[o], int(obj_version[o]), v_mk)
                        obj_version[o] = v_mk
                        out.reencryptions += 1
            if epoch < len(times):
                victim = int(victims[epoch])
                ywrl.revoke(cons_sets[victim])
                mk, update = abe.update_mk(mk, crng)
                history.append(update)
                v_mk = update.version
                # the revoked consumer is replaced by a newcomer keyed at the new version
                cons_attrs[victim] = draw_attrs()
                cons_sets[victim] = frozenset(cons_attrs[victim].tolist())
                with meter.tagged("join"):
                    keys[victim] = abe.keygen(mk, [f"u{a}" for a in cons_attrs[victim]], crng)
                cons_version[victim] = v_mk
    out.seabrew_update_cp = mt.total(meter.G0_EXP, "update_cp")
    out.seabrew_update_dk = mt.total(meter.G0_EXP, "update_dk")
    return out


def run_compute_experiment(cfg: WorkloadConfig) -> MeterReport:
    report = MeterReport(cfg)
    for rep in range(cfg.reps):
        report.reps.append(run_repetition(cfg, rep))
    return report


def sweep(cfg: WorkloadConfig, field_name: str, values) -> list[MeterReport]:
    return [run_compute_experiment(cfg.with_(**{field_name: v})) for v in values]


def concavity(xs, estimates: list[Estimate]) -> tuple[list[float], list[bool]]:
    """Differences of consecutive slopes and whether each is non-positive within CIs.

    The grid may be uneven, so slopes are divided differences.  A point passes
    when some choice of values inside the confidence intervals makes the slope
    non-increasing.
    """
    diffs, ok = [], []
    for i in range(len(xs) - 2):
        x0, x1, x2 = xs[i : i + 3]
        e0, e1, e2 = estimates[i : i + 3]
        s0 = (e1.mean - e0.mean) / (x1 - x0)
        s1 = (e2.mean - e1.mean) / (x2 - x1)
        diffs.append(s1 - s0)
        s0_max = (e1.high - e0.low) / (x1 - x0)
        s1_min = (e2.low - e1.high) / (x2 - x1)
        ok.append(s1_min <= s0_max)
    return diffs, ok
