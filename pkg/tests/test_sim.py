import csv
import io
import random
import statistics

import pytest

from seabrew.sim import (
    COMPUTE_COLUMNS,
    TRAFFIC_COLUMNS,
    BswKuModel,
    Estimate,
    WorkloadConfig,
    YwrlCostModel,
    concavity,
    confidence_interval,
    emit_report,
    run_compute_experiment,
    run_repetition,
    run_traffic_experiment,
)

SMALL = WorkloadConfig(ciphertexts=60, universe=30, attrs=5, daily_requests=200, revocation_days=3, horizon_days=12, reps=3, consumers=20)


class TestBswKu:
    def test_message_sizes(self):
        m = BswKuModel()
        assert m.per_message == 40 + 8 + 16
        assert m.broadcast() == 64 + 64 + 128
        assert m.unicast(20) == 64 + 41 * 64
        assert m.consumer_leave_total(50, 20) == 256 + 50 * 2688 == 134_656
        assert m.producer_leave() == 48


@pytest.fixture(scope="module")
def small():
    return run_traffic_experiment(6, 4, 20, "80bit", random.Random(1))


class TestTraffic:
    def test_consumer_leave_is_one_broadcast(self, small):
        row = small.row("SEA-BREW", "consumer leave")
        assert (row.broadcast_messages, row.broadcast_bytes, row.unicast_messages) == (1, 252, 0)
        # wire adds kind(1) + sender(8) + version tag(1) + bitmap(1 at n=6)
        assert row.wire_bytes == 252 + 9 + 1 + 1

    def test_producer_leave(self, small):
        row = small.row("SEA-BREW", "producer leave")
        assert (row.broadcast_messages, row.broadcast_bytes) == (1, 48)

    def test_baseline_rows(self, small):
        assert small.row("BSW-KU", "consumer leave").total_bytes == 256 + 6 * 2688
        with pytest.raises(KeyError):
            small.row("BSW-KU", "nothing")

    def test_report_formats(self, small):
        for fmt in ("csv", "tsv", "table"):
            text = emit_report(small, fmt).decode()
            assert "BSW-KU sizes come from a byte model" in text
        body = [line for line in emit_report(small, "csv").decode().splitlines() if not line.startswith("#")]
        rows = list(csv.DictReader(io.StringIO("\n".join(body))))
        assert tuple(rows[0]) == TRAFFIC_COLUMNS and len(rows) == 4


class TestConfig:
    def test_defaults(self):
        cfg = WorkloadConfig()
        assert (cfg.ciphertexts, cfg.daily_requests, cfg.horizon_days, cfg.reps, cfg.revocation_days) == (1000, 5000, 30, 20, 5)

    def test_paper_scale(self):
        cfg = WorkloadConfig.paper_scale()
        assert (cfg.ciphertexts, cfg.daily_requests, cfg.horizon_days, cfg.reps) == (100_000, 50_000, 365, 100)

    @pytest.mark.parametrize(
        "bad", [dict(ciphertexts=0), dict(reps=0), dict(daily_requests=0), dict(attrs=300), dict(profile="nope"), dict(horizon_days=-1)]
    )
    def test_validation(self, bad):
        with pytest.raises(ValueError):
            WorkloadConfig(**bad)


class TestStatistics:
    def test_confidence_interval_oracle(self):
        xs = [10.0, 12.0, 9.0, 11.0, 13.0, 10.5, 9.5, 12.5, 11.5, 10.0]
        est = confidence_interval(xs)
        t_crit = 2.2621571628  # two-sided 95%, 9 degrees of freedom
        assert est.mean == pytest.approx(statistics.mean(xs))
        assert est.half_width == pytest.approx(t_crit * statistics.stdev(xs) / len(xs) ** 0.5, rel=1e-8)

    def test_single_value(self):
        assert confidence_interval([4]) == Estimate(4.0, 0.0, 1)

    def test_concavity(self):
        xs = [1, 2, 4, 8]
        concave = [Estimate(v, 0.0, 2) for v in (10, 18, 30, 45)]
        convex = [Estimate(v, 0.0, 2) for v in (10, 11, 15, 40)]
        assert concavity(xs, concave)[1] == [True, True]
        assert concavity(xs, convex)[1] == [False, False]
        wide = [Estimate(v, 20.0, 2) for v in (10, 11, 15, 40)]
        assert concavity(xs, wide)[1][0] is True


class TestYwrl:
    def test_cost_is_overlap_with_pending_revocations(self):
        m = YwrlCostModel()
        m.revoke({1, 2, 3})
        m.revoke({3, 4})
        assert m.pending(0, 2) == {1, 2, 3, 4}
        assert m.pending(1, 2) == {3, 4}
        assert m.update_cost(frozenset({2, 4, 9}), 0, 2) == 2
        assert m.update_cost(frozenset({2, 4, 9}), 1, 2) == 1
        assert m.update_cost(frozenset({9}), 0, 2) == 0


class TestCompute:
    def test_deterministic(self):
        a, b = run_repetition(SMALL, 0), run_repetition(SMALL, 0)
        assert a == b
        assert run_repetition(SMALL, 1) != a

    def test_counts_consistent(self):
        r = run_repetition(SMALL, 0)
        # one exponentiation per stale item touched
        assert r.seabrew_update_cp == r.reencryptions
        assert r.seabrew_update_dk == r.key_updates
        assert r.reencryptions <= SMALL.ciphertexts * r.revocations
        assert r.seabrew_total == r.seabrew_update_cp + r.seabrew_update_dk
        assert r.ywrl_total >= 0 and r.requests > 0

    def test_seabrew_independent_of_attrs(self):
        a = run_compute_experiment(SMALL.with_(attrs=2))
        b = run_compute_experiment(SMALL.with_(attrs=10))
        assert a.seabrew.mean == b.seabrew.mean
        assert b.ywrl.mean > a.ywrl.mean

    def test_sublinear_in_requests(self):
        lo = run_compute_experiment(SMALL.with_(daily_requests=100, reps=4))
        hi = run_compute_experiment(SMALL.with_(daily_requests=200, reps=4))
        assert lo.seabrew.mean < hi.seabrew.mean < 2 * lo.seabrew.mean

    def test_report_is_stable(self):
        rep = run_compute_experiment(SMALL)
        a, b = emit_report([rep], "csv"), emit_report([run_compute_experiment(SMALL)], "csv")
        assert a == b
        lines = [line for line in a.decode().splitlines() if not line.startswith("#")]
        header = lines[0].split(",")
        assert tuple(header) == COMPUTE_COLUMNS
        assert all(len(line.split(",")) == len(COMPUTE_COLUMNS) for line in lines)
        assert {line.split(",")[0] for line in lines[1:]} == {"SEA-BREW", "YWRL"}
        assert "never executed" in a.decode()

    def test_unknown_format(self):
        with pytest.raises(ValueError):
            emit_report([run_compute_experiment(SMALL.with_(reps=1))], "xml")
