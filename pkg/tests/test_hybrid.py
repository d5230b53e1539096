import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from seabrew import abe, hybrid
from seabrew.algebra import DecodeError, get_group
from seabrew.policy import parse_policy


@pytest.fixture
def env(group):
    rng = random.Random(21)
    mk, ek = abe.setup(group, rng)
    signer = hybrid.SignKey.generate(rng)
    return group, rng, mk, ek, signer


class TestSignatures:
    def test_sizes(self):
        sk = hybrid.SignKey.generate(random.Random(1))
        sig = sk.sign(b"message")
        assert len(sig) == hybrid.SIGNATURE_BYTES == 40
        assert len(sk.public.to_bytes()) == 21

    def test_verify(self):
        sk = hybrid.SignKey.generate(random.Random(1))
        vk = hybrid.VerifyKey.from_bytes(sk.public.to_bytes())
        sig = sk.sign(b"message")
        assert vk.verify(b"message", sig)
        assert not vk.verify(b"messagf", sig)
        assert not vk.verify(b"message", sig[:-1] + bytes([sig[-1] ^ 1]))
        other = hybrid.SignKey.generate(random.Random(2)).public
        assert not other.verify(b"message", sig)

    def test_key_roundtrip(self):
        sk = hybrid.SignKey.generate(random.Random(3))
        again = hybrid.SignKey.from_bytes(sk.to_bytes())
        assert again.public == sk.public

    def test_bad_verify_key(self):
        with pytest.raises(DecodeError):
            hybrid.VerifyKey.from_bytes(b"\x02" + b"\xff" * 20)


class TestSealing:
    def test_roundtrip_and_aad(self):
        rng = random.Random(4)
        priv = hybrid.SealPrivateKey.generate(rng)
        pub = hybrid.SealPublicKey.from_bytes(priv.public.to_bytes())
        sealed = pub.seal(b"secret", rng, aad=b"hdr")
        assert priv.open(sealed, aad=b"hdr") == b"secret"
        with pytest.raises(hybrid.AEADError):
            priv.open(sealed, aad=b"other")
        with pytest.raises(hybrid.AEADError):
            hybrid.SealPrivateKey.generate(rng).open(sealed, aad=b"hdr")
        with pytest.raises((hybrid.AEADError, DecodeError)):
            priv.open(sealed[:10], aad=b"hdr")


class TestKem:
    def test_roundtrip(self, env):
        group, rng, mk, ek, _ = env
        key, cp = hybrid.kem_encrypt(parse_policy("a or b"), ek, rng)
        assert len(key) == 32
        assert hybrid.kem_decrypt(cp, abe.keygen(mk, ["b"], rng)) == key
        with pytest.raises(abe.NotAuthorizedError):
            hybrid.kem_decrypt(cp, abe.keygen(mk, ["c"], rng))

    def test_fresh_keys(self, env):
        group, rng, mk, ek, _ = env
        k1, _ = hybrid.kem_encrypt(parse_policy("a"), ek, rng)
        k2, _ = hybrid.kem_encrypt(parse_policy("a"), ek, rng)
        assert k1 != k2


class TestSymKeyFlow:
    def test_one_abe_encryption_per_policy(self, env):
        group, rng, mk, ek, signer = env
        table = hybrid.SymKeyTable()
        policy = parse_policy("a and b")
        rec, sck = hybrid.get_or_create_symkey(table, policy, ek, rng, signer, 7)
        assert sck is not None and len(rec.kid) == 16
        for _ in range(5):
            again, none = hybrid.get_or_create_symkey(table, policy, ek, rng, signer, 7)
            assert again is rec and none is None
        rec2, sck2 = hybrid.get_or_create_symkey(table, parse_policy("a or b"), ek, rng, signer, 7)
        assert sck2 is not None and rec2.kid != rec.kid
        assert len(table) == 2

    def test_structural_policy_lookup(self, env):
        group, rng, mk, ek, signer = env
        table = hybrid.SymKeyTable()
        rec, _ = hybrid.get_or_create_symkey(table, parse_policy("a and (b or c)"), ek, rng, signer, 1)
        assert table.lookup(parse_policy("(a) AND (b OR c)")) is rec

    def test_wipe_forces_fresh_kid(self, env):
        group, rng, mk, ek, signer = env
        table = hybrid.SymKeyTable()
        policy = parse_policy("a")
        rec, _ = hybrid.get_or_create_symkey(table, policy, ek, rng, signer, 1)
        table.wipe()
        assert len(table) == 0 and table.lookup(policy) is None
        rec2, sck = hybrid.get_or_create_symkey(table, policy, ek, rng, signer, 1)
        assert sck is not None and rec2.kid != rec.kid and rec2.sym_key != rec.sym_key

    def test_signcrypted_key_end_to_end(self, env):
        group, rng, mk, ek, signer = env
        table = hybrid.SymKeyTable()
        rec, sck = hybrid.get_or_create_symkey(table, parse_policy("a"), ek, rng, signer, 9)
        parsed = hybrid.SigncryptedKey.from_bytes(sck.to_bytes(), group)
        sigs = {9: signer.public}
        got = hybrid.unsigncrypt_key(parsed, abe.keygen(mk, ["a"], rng), sigs)
        assert got == rec

    def test_signature_survives_reencryption(self, env):
        group, rng, mk, ek, signer = env
        table = hybrid.SymKeyTable()
        rec, sck = hybrid.get_or_create_symkey(table, parse_policy("a"), ek, rng, signer, 9)
        mk, u = abe.update_mk(mk, rng)
        moved = hybrid.SigncryptedKey(sck.kid, abe.update_cp(sck.ciphertext, [u]), sck.pid, sck.signature)
        got = hybrid.unsigncrypt_key(moved, abe.keygen(mk, ["a"], rng), {9: signer.public})
        assert got.sym_key == rec.sym_key

    def test_signature_binds_kid_and_policy(self, env):
        group, rng, mk, ek, signer = env
        _, sck = hybrid.get_or_create_symkey(hybrid.SymKeyTable(), parse_policy("a"), ek, rng, signer, 9)
        sigs = {9: signer.public}
        bad_kid = hybrid.SigncryptedKey(bytes(16), sck.ciphertext, 9, sck.signature)
        with pytest.raises(hybrid.SignatureError):
            hybrid.verify_signcrypted_key(bad_kid, sigs)
        _, other = hybrid.get_or_create_symkey(hybrid.SymKeyTable(), parse_policy("b"), ek, rng, signer, 9)
        spliced = hybrid.SigncryptedKey(sck.kid, other.ciphertext, 9, sck.signature)
        with pytest.raises(hybrid.SignatureError):
            hybrid.verify_signcrypted_key(spliced, sigs)
        with pytest.raises(hybrid.UnknownProducerError):
            hybrid.verify_signcrypted_key(sck, {})


class TestSigncryptedData:
    @given(st.binary(max_size=300))
    def test_roundtrip(self, payload):
        group = get_group("insecure-sim")
        rng = random.Random(5)
        mk, ek = abe.setup(group, rng)
        signer = hybrid.SignKey.generate(rng)
        table = hybrid.SymKeyTable()
        rec, _ = hybrid.get_or_create_symkey(table, parse_policy("a"), ek, rng, signer, 3)
        sd = hybrid.SigncryptedData.from_bytes(hybrid.signcrypt_data(rec, payload, signer, 3, rng).to_bytes())
        assert hybrid.unsigncrypt_data(sd, table, {3: signer.public}) == payload

    def test_need_key_and_rejections(self, env):
        group, rng, mk, ek, signer = env
        table = hybrid.SymKeyTable()
        rec, _ = hybrid.get_or_create_symkey(table, parse_policy("a"), ek, rng, signer, 3)
        sd = hybrid.signcrypt_data(rec, b"reading", signer, 3, rng)
        assert hybrid.unsigncrypt_data(sd, hybrid.SymKeyTable(), {3: signer.public}) == hybrid.NeedKey(rec.kid)
        with pytest.raises(hybrid.UnknownProducerError):
            hybrid.unsigncrypt_data(sd, table, {})
        flipped = bytearray(sd.body)
        flipped[-1] ^= 1
        forged = hybrid.SigncryptedData(sd.kid, bytes(flipped), 3, sd.signature)
        with pytest.raises(hybrid.SignatureError):
            hybrid.unsigncrypt_data(forged, table, {3: signer.public})
        # without a signature table the AEAD still rejects tampering
        with pytest.raises(hybrid.AEADError):
            hybrid.unsigncrypt_data(forged, table, None)
        # same KID bytes but a different key in the table
        other = hybrid.SymKeyTable()
        other.add(hybrid.SymKeyRecord(rec.kid, rec.policy, bytes(32)))
        with pytest.raises(hybrid.AEADError):
            hybrid.unsigncrypt_data(sd, other, None)

    def test_nonces_are_fresh(self, env):
        group, rng, mk, ek, signer = env
        rec, _ = hybrid.get_or_create_symkey(hybrid.SymKeyTable(), parse_policy("a"), ek, rng, signer, 3)
        bodies = {hybrid.signcrypt_data(rec, b"x", signer, 3, rng).body[:12] for _ in range(20)}
        assert len(bodies) == 20

    def test_wire_format(self, env):
        group, rng, mk, ek, signer = env
        rec, _ = hybrid.get_or_create_symkey(hybrid.SymKeyTable(), parse_policy("a"), ek, rng, signer, 3)
        data = hybrid.signcrypt_data(rec, b"abc", signer, 3, rng).to_bytes()
        assert data[0] == 0x52 and data[1:17] == rec.kid
        body_len = int.from_bytes(data[17:21], "little")
        assert body_len == 12 + 3 + 16
        assert int.from_bytes(data[21 + body_len : 29 + body_len], "little") == 3
        with pytest.raises(DecodeError):
            hybrid.SigncryptedData.from_bytes(data[:-1])
