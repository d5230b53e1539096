import random
from concurrent.futures import ThreadPoolExecutor

import pytest

from probes import probe_cloud_object
from seabrew import abe, hybrid
from seabrew.algebra import get_group, metering
from seabrew.algebra.meter import G0_EXP
from seabrew.protocol import (
    AUTHORITY_ID,
    CLOUD_ID,
    GATEWAY_ID,
    Deployment,
    Envelope,
    Kind,
    RejectedError,
    SignatureRejected,
)

ENG = ["dept:eng", "role:op"]


@pytest.fixture
def dep():
    return Deployment(get_group("insecure-sim"), random.Random(77), n_max=16)


class TestJoinAndData:
    def test_remote_roundtrip(self, dep):
        p = dep.add_producer()
        c = dep.add_consumer(ENG)
        m = dep.random_message()
        dep.upload_remote(p, "o", m, "dept:eng and role:op")
        assert dep.download(c, "o") == m
        assert dep.cloud.ct[c.id].D == c.dk.D

    def test_ids_are_counters(self, dep):
        a, b = dep.add_producer(), dep.add_consumer(ENG)
        assert (a.id, b.id) == (1, 2)

    def test_unauthorized_consumer(self, dep):
        p = dep.add_producer()
        c = dep.add_consumer(["dept:ops"])
        dep.upload_remote(p, "o", dep.random_message(), "dept:eng")
        with pytest.raises(abe.NotAuthorizedError):
            dep.download(c, "o")

    def test_wsan_upload_uses_one_abe_encryption_per_policy(self, dep):
        p = dep.add_producer(wsan=True)
        c = dep.add_consumer(ENG, wsan=True)
        for i in range(4):
            dep.upload_wsan(p, f"t{i}", f"reading {i}".encode(), "dept:eng")
        assert len(dep.bus.records(Kind.UPLOAD_KEY)) == 1
        assert len(dep.bus.records(Kind.UPLOAD_DATA)) == 4
        assert [dep.download(c, f"t{i}") for i in range(4)] == [f"reading {i}".encode() for i in range(4)]
        # the key object was fetched once, later objects hit the local table
        assert len([r for r in dep.bus.records(Kind.DATA_RESPONSE)]) == 5

    def test_remote_consumer_reads_wsan_data(self, dep):
        p = dep.add_producer(wsan=True)
        c = dep.add_consumer(ENG, wsan=False)
        dep.upload_wsan(p, "t", b"21.5", "role:op")
        assert dep.download(c, "t") == b"21.5"

    def test_direct_exchange(self, dep):
        p = dep.add_producer(wsan=True)
        c1 = dep.add_consumer(ENG, wsan=True)
        c2 = dep.add_consumer(["dept:ops"], wsan=True)
        dep.upload_wsan(p, "t", b"x", "dept:eng")
        dep.direct_exchange(p, b"live", "dept:eng")
        assert c1.inbox[-1].plaintext == b"live"
        assert isinstance(c2.inbox[-1].error, abe.NotAuthorizedError)
        assert len(dep.bus.records(Kind.DIRECT_DATA, channel="wsan")) == 1

    def test_producers_retain_no_plaintext(self, dep):
        p = dep.add_producer(wsan=True)
        secret = b"very-secret-reading"
        dep.upload_wsan(p, "t", secret, "dept:eng")
        dump = repr(p.state_dump()) + repr(vars(p))
        assert secret.decode() not in dump and secret.hex() not in dump

    def test_unknown_object_and_consumer(self, dep):
        c = dep.add_consumer(ENG)
        with pytest.raises(RejectedError):
            dep.download(c, "missing")
        with pytest.raises(RejectedError):
            dep.bus.send(Envelope(Kind.DATA_REQUEST, 999, b"\x01\x00o"), CLOUD_ID)


class TestRevocation:
    def test_single_broadcast_regardless_of_population(self):
        sizes = set()
        for n in (2, 7):
            dep = Deployment(get_group("insecure-sim"), random.Random(n), n_max=16)
            [dep.add_producer(wsan=True) for _ in range(3)]
            cs = [dep.add_consumer(ENG, wsan=True) for _ in range(n)]
            mark = dep.bus.mark()
            dep.consumer_leave(cs[0].id)
            wsan = [r for r in dep.bus.since(mark) if r.channel == "wsan"]
            assert [r.kind for r in wsan] == ["REVOCATION"]
            sizes.add(wsan[0].wire_bytes)
        assert len(sizes) == 1

    def test_wsan_endpoints_updated_by_broadcast(self, dep):
        p = dep.add_producer(wsan=True)
        cs = [dep.add_consumer(ENG, wsan=True) for _ in range(3)]
        dep.upload_wsan(p, "t", b"a", "dept:eng")
        dep.download(cs[0], "t")
        dep.consumer_leave(cs[2].id)
        assert p.ek.version == 1 and len(p.symkeys) == 0
        assert [c.dk.version for c in cs[:2]] == [1, 1] and len(cs[0].symkeys) == 0
        assert cs[2].dk.version == 0
        assert any(eid == cs[2].id and "not in the broadcast set" in why for eid, why in dep.bus.drops)
        assert dep.cloud.ct[cs[0].id].v_dk == 1
        # the next WSAN upload needs a fresh KID
        dep.upload_wsan(p, "t2", b"b", "dept:eng")
        assert len(dep.bus.records(Kind.UPLOAD_KEY)) == 2
        assert dep.download(cs[1], "t2") == b"b"

    def test_lazy_reencryption(self, dep):
        p = dep.add_producer()
        c = dep.add_consumer(ENG)
        victim = dep.add_consumer(ENG)
        ms = {}
        for i in range(20):
            ms[f"o{i}"] = dep.random_message()
            dep.upload_remote(p, f"o{i}", ms[f"o{i}"], "dept:eng")
        dep.consumer_leave(victim.id)
        assert dep.cloud.stats["update_cp"] == 0
        for oid in ["o1", "o2", "o3", "o1", "o2"]:
            assert dep.download(c, oid) == ms[oid]
        assert dep.cloud.stats["update_cp"] == 3
        assert dep.cloud.stats["update_dk"] == 1

    def test_one_exponentiation_regardless_of_gap(self, dep):
        p = dep.add_producer()
        c = dep.add_consumer(ENG)
        m = dep.random_message()
        dep.upload_remote(p, "o", m, "role:op")
        for _ in range(4):
            dep.consumer_leave(dep.add_consumer(ENG).id)
        with metering() as mt:
            assert dep.download(c, "o") == m
        assert mt.total(G0_EXP, "update_cp") == 1
        assert mt.total(G0_EXP, "update_dk") == 1
        assert c.dk.version == dep.authority.v_mk == 4
        assert dep.cloud.ct[c.id].D == c.dk.D

    def test_version_lattice(self, dep):
        p = dep.add_producer()
        wp = dep.add_producer(wsan=True)
        rc = dep.add_consumer(ENG)
        wc = dep.add_consumer(ENG, wsan=True)
        m = dep.random_message()
        dep.upload_remote(p, "o", m, "dept:eng")
        dep.upload_wsan(wp, "t", b"x", "dept:eng")
        leaves = 0
        for _ in range(3):
            dep.consumer_leave(dep.add_consumer(ENG, wsan=True).id)
            leaves += 1
            dep.upload_remote(p, "o", m, "dept:eng")  # stale producer gets its EK refreshed
            for consumer in (rc, wc):
                for oid in ("o", "t"):
                    dep.download(consumer, oid)
                    v_cp = dep.cloud.store[oid].version
                    assert v_cp in (None, dep.authority.v_mk)
                assert consumer.dk.version == dep.authority.v_mk
        assert dep.authority.v_mk == dep.cloud.v_mk == leaves
        assert all(row.v_dk <= dep.cloud.v_mk for row in dep.cloud.ct.values())
        assert p.ek.version == wp.ek.version == leaves

    def test_revoked_consumer_locked_out(self, dep):
        p = dep.add_producer()
        wp = dep.add_producer(wsan=True)
        keep = dep.add_consumer(ENG, wsan=True)
        gone = dep.add_consumer(ENG, wsan=True)
        m_old = dep.random_message()
        dep.upload_remote(p, "old", m_old, "dept:eng")
        assert dep.download(gone, "old") == m_old
        dep.consumer_leave(gone.id)
        m_new = dep.random_message()
        dep.upload_remote(p, "new", m_new, "dept:eng")
        assert dep.download(keep, "old") == m_old  # lazily re-encrypted
        assert dep.download(keep, "new") == m_new  # p uploaded under its stale EK
        with pytest.raises(RejectedError):
            dep.download(gone, "old")
        # what the cloud serves is what a revoked party could ever observe
        for oid, m in (("old", m_old), ("new", m_new)):
            cp = dep.cloud.store[oid].item
            with pytest.raises(abe.StaleVersionError):
                abe.decrypt(cp, gone.dk)
            assert abe.decrypt(cp, gone.dk.with_d(gone.dk.D, cp.version)) != m
        dep.upload_wsan(wp, "t", b"after", "dept:eng")
        dep.direct_exchange(wp, b"after-direct", "dept:eng")
        assert all(d.plaintext != b"after-direct" for d in gone.inbox)

    def test_producer_leave(self, dep):
        wp = dep.add_producer(wsan=True)
        c = dep.add_consumer(ENG, wsan=True)
        dep.upload_wsan(wp, "t", b"x", "dept:eng")
        dep.producer_leave(wp.id)
        assert wp.id not in c.signature_table and wp.id not in dep.cloud.pt
        with pytest.raises(RejectedError):
            dep.upload_wsan(wp, "t2", b"y", "dept:eng")
        dep.direct_exchange(wp, b"spoof", "dept:eng")
        assert not any(d.plaintext == b"spoof" for d in c.inbox)
        assert len(dep.bus.records(Kind.PRODUCER_LEAVE, channel="wsan")) == 1

    def test_unknown_producer_leave_ignored(self, dep):
        dep.producer_leave(12345)
        assert not dep.bus.records(Kind.PRODUCER_LEAVE)

    def test_cloud_knowledge_probe(self, dep):
        p = dep.add_producer()
        wp = dep.add_producer(wsan=True)
        [dep.add_consumer(ENG, wsan=w) for w in (True, False, True)]
        truths = {}
        for i in range(6):
            m = dep.random_message()
            dep.upload_remote(p, f"o{i}", m, "dept:eng" if i % 2 else "dept:eng and role:op")
            truths[f"o{i}"] = m
        dep.upload_wsan(wp, "t", b"wsan-secret", "role:op")
        truths["t"] = b"wsan-secret"
        dep.consumer_leave(dep.add_consumer(ENG, wsan=True).id)
        for oid, truth in truths.items():
            assert not probe_cloud_object(dep.cloud, oid, truth)

    def test_concurrent_downloads_update_once(self, dep):
        p = dep.add_producer()
        cs = [dep.add_consumer(ENG) for _ in range(6)]
        m = dep.random_message()
        dep.upload_remote(p, "o", m, "dept:eng")
        dep.consumer_leave(dep.add_consumer(ENG).id)
        with ThreadPoolExecutor(6) as pool:
            results = list(pool.map(lambda c: dep.download(c, "o"), cs))
        assert results == [m] * 6
        assert dep.cloud.stats["update_cp"] == 1
        assert dep.cloud.stats["update_dk"] == 6


class TestMessages:
    def test_infrastructure_messages_are_signed(self, dep):
        seen = []
        dep.bus.tamper = lambda env, wire: seen.append(env) or wire
        p = dep.add_producer(wsan=True)
        dep.add_producer()
        c = dep.add_consumer(ENG, wsan=True)
        dep.add_consumer(ENG)
        dep.upload_wsan(p, "t", b"x", "dept:eng")
        dep.download(c, "t")
        dep.consumer_leave(dep.add_consumer(ENG, wsan=True).id)
        dep.download(c, "t")
        infra = [e for e in seen if e.sender in (AUTHORITY_ID, CLOUD_ID, GATEWAY_ID)]
        assert infra
        for env in infra:
            env.verify(dep.bus.directory[env.sender].verify)

    def test_key_material_is_sealed(self, dep):
        seen = []
        dep.bus.tamper = lambda env, wire: seen.append(wire) or wire
        c = dep.add_consumer(ENG)
        victim = dep.add_consumer(ENG, wsan=True)
        p = dep.add_producer()
        dep.upload_remote(p, "o", dep.random_message(), "dept:eng")
        dep.consumer_leave(victim.id)
        dep.download(c, "o")
        secrets = [c.dk.D.to_bytes()] + [a.to_bytes() for pair in c.dk.components.values() for a in pair]
        secrets.append(dep.cloud.history.updates[0].to_bytes())
        for wire in seen:
            for s in secrets:
                assert s not in wire

    def test_tampering_rejected(self, dep):
        p = dep.add_producer()
        c = dep.add_consumer(ENG)
        dep.upload_remote(p, "o", dep.random_message(), "dept:eng")

        def flip(env, wire):
            if env.kind == Kind.DATA_RESPONSE:
                wire = wire[:20] + bytes([wire[20] ^ 1]) + wire[21:]
            return wire

        dep.bus.tamper = flip
        with pytest.raises(SignatureRejected):
            dep.download(c, "o")

    def test_envelope_roundtrip(self):
        sk = hybrid.SignKey.generate(random.Random(0))
        env = Envelope.build(Kind.UPLOAD_CP, 7, b"payload", sk)
        again = Envelope.from_bytes(env.to_bytes())
        assert again == env and len(env.to_bytes()) == 1 + 8 + 7 + 40
        again.verify(sk.public)

    def test_trace_lines(self, dep):
        dep.add_consumer(ENG)
        lines = dep.bus.trace_lines().splitlines()
        assert lines[0].split("\t") == ["epoch", "kind", "sender", "receiver", "wire_bytes", "accounted_bytes", "channel"]
        assert all(len(line.split("\t")) == 7 for line in lines)

    def test_curve_end_to_end(self):
        dep = Deployment(get_group("80bit"), random.Random(5), n_max=4)
        p = dep.add_producer(wsan=True)
        c = dep.add_consumer(ENG, wsan=True)
        gone = dep.add_consumer(ENG, wsan=True)
        dep.upload_wsan(p, "t", b"hello", "dept:eng")
        assert dep.download(c, "t") == b"hello"
        mark = dep.bus.mark()
        dep.consumer_leave(gone.id)
        rev = [r for r in dep.bus.since(mark) if r.channel == "wsan"]
        assert len(rev) == 1 and rev[0].accounted_bytes == 64 + 148 + 40
        dep.upload_wsan(p, "t2", b"world", "dept:eng")
        assert dep.download(c, "t2") == b"world"
