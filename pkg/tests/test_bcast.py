import dataclasses
import itertools
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from seabrew.algebra import DecodeError, get_group, metering
from seabrew.bcast import (
    BroadcastHeader,
    BroadcastPrivateKey,
    BroadcastPublicKey,
    ExcludedReceiverError,
    all_receivers,
    bc_decrypt,
    bc_encrypt,
    bc_setup,
    decode_bitmap,
    encode_bitmap,
)


def payload(rng):
    return bytes(rng.getrandbits(8) for _ in range(20))


@pytest.fixture(scope="module")
def curve_system():
    rng = random.Random(2)
    bpk, keys = bc_setup(50, get_group("80bit"), rng)
    return bpk, keys


def test_header_size_constant_in_receiver_set(curve_system):
    bpk, keys = curve_system
    rng = random.Random(3)
    sizes = set()
    accounted = set()
    for size in (1, 25, 49, 50):
        S = rng.sample(range(1, 51), size)
        h = bc_encrypt(bpk, S, payload(rng), rng)
        sizes.add(len(h.to_bytes()))
        accounted.add(h.accounted_size)
    assert sizes == {1 + 7 + 64 + 64 + 20}
    assert accounted == {148}


def test_roundtrip_and_exclusion(curve_system):
    bpk, keys = curve_system
    rng = random.Random(4)
    S = all_receivers(50, excluded=[7, 50])
    m = payload(rng)
    h = BroadcastHeader.from_bytes(bc_encrypt(bpk, S, m, rng).to_bytes(), bpk)
    assert h.receivers == S
    for i in (1, 8, 49):
        assert bc_decrypt(bpk, keys[i - 1], h) == m
    for i in (7, 50):
        with pytest.raises(ExcludedReceiverError):
            bc_decrypt(bpk, keys[i - 1], h)


def test_excluded_receiver_cannot_force_inclusion(curve_system):
    # ignoring the bitmap and pretending to be in S gives the wrong pad
    bpk, keys = curve_system
    rng = random.Random(5)
    m = payload(rng)
    h = bc_encrypt(bpk, all_receivers(50, [7]), m, rng)
    forged = dataclasses.replace(h, receivers=h.receivers | {7})
    assert bc_decrypt(bpk, keys[6], forged) != m
    alt = dataclasses.replace(h, receivers=frozenset({7}))
    assert bc_decrypt(bpk, keys[6], alt) != m


def test_fresh_randomness_changes_header(curve_system):
    bpk, _ = curve_system
    rng = random.Random(6)
    m = payload(rng)
    assert bc_encrypt(bpk, [1, 2], m, rng).to_bytes() != bc_encrypt(bpk, [1, 2], m, rng).to_bytes()


def test_public_key_roundtrip(curve_system):
    bpk, keys = curve_system
    group = bpk.group
    again = BroadcastPublicKey.from_bytes(bpk.to_bytes(), group)
    assert again.powers == bpk.powers and again.v == bpk.v
    assert bpk.num_elements == 2 * 50 + 1
    with pytest.raises(IndexError):
        bpk.g_i(51)  # g_{n+1} is never published
    sk = BroadcastPrivateKey.from_bytes(keys[3].to_bytes(), group)
    assert sk == keys[3]


@pytest.mark.parametrize("n", range(1, 9))
def test_exhaustive_small_n_sim(n):
    group = get_group("insecure-sim")
    rng = random.Random(n)
    bpk, keys = bc_setup(n, group, rng)
    for size in range(1, n + 1):
        for S in itertools.combinations(range(1, n + 1), size):
            m = payload(rng)
            h = bc_encrypt(bpk, S, m, rng)
            for sk in keys:
                if sk.index in S:
                    assert bc_decrypt(bpk, sk, h) == m
                else:
                    with pytest.raises(ExcludedReceiverError):
                        bc_decrypt(bpk, sk, h)
                    forced = dataclasses.replace(h, receivers=h.receivers | {sk.index})
                    assert bc_decrypt(bpk, sk, forced) != m


def test_exhaustive_n4_curve():
    rng = random.Random(8)
    bpk, keys = bc_setup(4, get_group("80bit"), rng)
    for size in range(1, 5):
        for S in itertools.combinations(range(1, 5), size):
            m = payload(rng)
            h = bc_encrypt(bpk, S, m, rng)
            for sk in keys:
                if sk.index in S:
                    assert bc_decrypt(bpk, sk, h) == m
                else:
                    with pytest.raises(ExcludedReceiverError):
                        bc_decrypt(bpk, sk, h)


@settings(max_examples=30)
@given(st.integers(1, 16), st.data())
def test_random_sets_sim(n, data):
    group = get_group("insecure-sim")
    rng = random.Random(n)
    bpk, keys = bc_setup(n, group, rng)
    S = data.draw(st.sets(st.integers(1, n), min_size=1))
    m = payload(rng)
    h = bc_encrypt(bpk, S, m, rng)
    for sk in keys:
        if sk.index in S:
            assert bc_decrypt(bpk, sk, h) == m
        else:
            with pytest.raises(ExcludedReceiverError):
                bc_decrypt(bpk, sk, h)


def test_input_validation():
    group = get_group("insecure-sim")
    rng = random.Random(0)
    bpk, _ = bc_setup(8, group, rng)
    with pytest.raises(ValueError):
        bc_encrypt(bpk, [], payload(rng), rng)
    with pytest.raises(ValueError):
        bc_encrypt(bpk, [9], payload(rng), rng)
    with pytest.raises(ValueError):
        bc_encrypt(bpk, [1], b"short", rng)
    with pytest.raises(ValueError):
        bc_setup(0, group, rng)


def test_header_decode_errors():
    group = get_group("insecure-sim")
    rng = random.Random(1)
    bpk, _ = bc_setup(8, group, rng)
    data = bc_encrypt(bpk, [1, 2], payload(rng), rng).to_bytes()
    with pytest.raises(DecodeError):
        BroadcastHeader.from_bytes(b"\x02" + data[1:], bpk)
    with pytest.raises(DecodeError):
        BroadcastHeader.from_bytes(data[:-1], bpk)
    with pytest.raises(DecodeError):
        BroadcastHeader.from_bytes(data + b"\x00", bpk)


@given(st.integers(1, 70).flatmap(lambda n: st.tuples(st.just(n), st.sets(st.integers(1, n)))))
def test_bitmap_roundtrip(arg):
    n, S = arg
    data = encode_bitmap(S, n)
    assert len(data) == (n + 7) // 8
    assert decode_bitmap(data, n) == S


def test_bitmap_rejects_out_of_range():
    with pytest.raises(DecodeError):
        decode_bitmap(b"\x80", 7)


def test_decrypt_cost(curve_system):
    bpk, keys = curve_system
    rng = random.Random(9)
    h = bc_encrypt(bpk, range(1, 51), payload(rng), rng)
    with metering() as m:
        bc_decrypt(bpk, keys[0], h)
    assert m.pairings == 2 and m.g0 == 0
