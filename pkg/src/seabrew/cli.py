"""Command-line front end.

Exit codes: 0 success, 2 parse or I/O error, 3 not authorized, 4 version error.
Secret material (master keys, decryption keys, update keys) is only ever
written to files created with mode 0600.
"""

from __future__ import annotations

import argparse
import logging
import os
import random
import secrets
import struct
import sys
from pathlib import Path

from cryptography.hazmat.primitives.ciphers.aead import AESGCM

from seabrew import abe, hybrid
from seabrew.algebra import PROFILES, get_group
from seabrew.algebra.base import DecodeError
from seabrew.policy import PolicyError, parse_policy

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_UNAUTHORIZED = 3
EXIT_VERSION = 4

FORMAT_VERSION = 1
MAGIC = {
    "mk": b"SBMK",
    "ek": b"SBEK",
    "dk": b"SBDK",
    "cp": b"SBCP",
    "uk": b"SBUK",
}
SECRET_KINDS = {"mk", "dk", "uk"}

log = logging.getLogger("seabrew")


class CliError(Exception):
    pass


# -- file envelope -----------------------------------------------------------------
# magic (4) || format version (u16 LE) || profile index (u8) || body


def pack_file(kind: str, profile: str, body: bytes) -> bytes:
    return MAGIC[kind] + struct.pack("<HB", FORMAT_VERSION, PROFILES.index(profile)) + body


def unpack_file(kind: str, data: bytes) -> tuple[str, bytes]:
    if len(data) < 7:
        raise DecodeError("file too short")
    if data[:4] != MAGIC[kind]:
        got = next((k for k, m in MAGIC.items() if m == data[:4]), None)
        hint = f" (this is a {got} file)" if got else ""
        raise DecodeError(f"bad magic, expected {kind} file{hint}")
    version, profile = struct.unpack_from("<HB", data, 4)
    if version != FORMAT_VERSION:
        raise DecodeError(f"unsupported format version {version}")
    if profile >= len(PROFILES):
        raise DecodeError(f"unknown profile index {profile}")
    return PROFILES[profile], data[7:]


def write_file(path: str | Path, data: bytes, secret: bool) -> None:
    path = Path(path)
    if secret:
        fd = os.open(path, os.O_WRONLY | os.O_CREAT | os.O_TRUNC, 0o600)
        try:
            os.fchmod(fd, 0o600)
        except (AttributeError, OSError):
            pass
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
    else:
        path.write_bytes(data)


def save(path, kind: str, profile: str, obj) -> None:
    write_file(path, pack_file(kind, profile, obj.to_bytes()), kind in SECRET_KINDS)


_TYPES = {
    "mk": abe.MasterKey,
    "ek": abe.EncryptionKey,
    "dk": abe.DecryptionKey,
    "uk": abe.UpdateKey,
}


def load(path, kind: str):
    profile, body = unpack_file(kind, Path(path).read_bytes())
    group = get_group(profile)
    if kind == "cp":
        return profile, HybridCiphertext.from_bytes(body, group)
    return profile, _TYPES[kind].from_bytes(body, group)


class HybridCiphertext:
    """ABE encapsulation of a fresh AES-256-GCM key plus the encrypted payload."""

    def __init__(self, cp: abe.Ciphertext, body: bytes) -> None:
        self.cp = cp
        self.body = body

    def to_bytes(self) -> bytes:
        enc = self.cp.to_bytes()
        return struct.pack("<I", len(enc)) + enc + self.body

    @classmethod
    def from_bytes(cls, data: bytes, group) -> "HybridCiphertext":
        if len(data) < 4:
            raise DecodeError("truncated ciphertext file")
        (n,) = struct.unpack_from("<I", data)
        if len(data) < 4 + n + hybrid.NONCE_BYTES + 16:
            raise DecodeError("truncated ciphertext file")
        return cls(abe.Ciphertext.from_bytes(data[4 : 4 + n], group), data[4 + n :])


# -- commands --------------------------------------------------------------------


def _rng(args):
    if getattr(args, "seed", None) is not None:
        print("warning: --seed makes key material reproducible; use only for tests", file=sys.stderr)
        return random.Random(args.seed)
    return secrets.SystemRandom()


def cmd_setup(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    mk, ek = abe.setup(get_group(args.profile), _rng(args))
    save(out / "mk.key", "mk", args.profile, mk)
    save(out / "ek.pub", "ek", args.profile, ek)
    print(f"wrote {out / 'mk.key'} (secret) and {out / 'ek.pub'}; version {ek.version}")
    return EXIT_OK


def _attr_list(values) -> list[str]:
    out = []
    for v in values:
        out += [a.strip() for a in v.split(",") if a.strip()]
    return out


def cmd_keygen(args) -> int:
    profile, mk = load(args.mk, "mk")
    attrs = _attr_list(args.attrs)
    if not attrs:
        raise CliError("at least one attribute is required")
    dk = abe.keygen(mk, attrs, _rng(args))
    save(args.out, "dk", profile, dk)
    print(f"wrote {args.out}: version {dk.version}, attributes {','.join(sorted(dk.attributes))}")
    return EXIT_OK


def cmd_encrypt(args) -> int:
    profile, ek = load(args.ek, "ek")
    policy = parse_policy(args.policy)
    payload = sys.stdin.buffer.read() if args.input == "-" else Path(args.input).read_bytes()
    rng = _rng(args)
    key, cp = hybrid.kem_encrypt(policy, ek, rng)
    nonce = hybrid.random_bytes(rng, hybrid.NONCE_BYTES)
    body = nonce + AESGCM(key).encrypt(nonce, payload, policy.to_bytes())
    write_file(args.out, pack_file("cp", profile, HybridCiphertext(cp, body).to_bytes()), secret=False)
    print(f"wrote {args.out}: policy {policy}, version {cp.version}, {len(payload)} payload bytes")
    return EXIT_OK


def cmd_decrypt(args) -> int:
    _, dk = load(args.dk, "dk")
    _, hc = load(args.input, "cp")
    key = hybrid.kem_decrypt(hc.cp, dk)
    nonce, ct = hc.body[: hybrid.NONCE_BYTES], hc.body[hybrid.NONCE_BYTES :]
    try:
        plain = AESGCM(key).decrypt(nonce, ct, hc.cp.policy.to_bytes())
    except Exception as exc:  # InvalidTag
        raise DecodeError("payload failed authentication") from exc
    if args.out in (None, "-"):
        sys.stdout.buffer.write(plain)
        sys.stdout.buffer.flush()
    else:
        write_file(args.out, plain, secret=False)
    return EXIT_OK


def cmd_revoke(args) -> int:
    profile, mk = load(args.mk, "mk")
    mk2, update = abe.update_mk(mk, _rng(args))
    save(args.out_mk or args.mk, "mk", profile, mk2)
    save(args.update, "uk", profile, update)
    print(f"master key now at version {mk2.version}; update key written to {args.update} (secret)")
    return EXIT_OK


def _updates(paths) -> list[abe.UpdateKey]:
    ups = [load(p, "uk")[1] for p in paths]
    return sorted(ups, key=lambda u: u.version)


def cmd_update_cp(args) -> int:
    profile, hc = load(args.input, "cp")
    hc.cp = abe.update_cp(hc.cp, _updates(args.update))
    write_file(args.out or args.input, pack_file("cp", profile, hc.to_bytes()), secret=False)
    print(f"ciphertext now at version {hc.cp.version}")
    return EXIT_OK


def cmd_update_dk(args) -> int:
    profile, dk = load(args.dk, "dk")
    dk = abe.update_dk(dk, _updates(args.update))
    save(args.out or args.dk, "dk", profile, dk)
    print(f"decryption key now at version {dk.version}")
    return EXIT_OK


def cmd_update_ek(args) -> int:
    profile, ek = load(args.ek, "ek")
    latest = _updates(args.update)[-1]
    ek = abe.update_ek(ek, latest)
    save(args.out or args.ek, "ek", profile, ek)
    print(f"encryption key now at version {ek.version}")
    return EXIT_OK


def cmd_serve_demo(args) -> int:
    from seabrew.protocol import Deployment

    rng = _rng(args)
    group = get_group(args.profile)
    dep = Deployment(group, rng, n_max=8)
    say = print
    remote_p = dep.add_producer(wsan=False)
    wsan_p = dep.add_producer(wsan=True)
    alice = dep.add_consumer(["dept:eng", "role:operator"], wsan=True)
    bob = dep.add_consumer(["dept:eng", "role:auditor"], wsan=True)
    carol = dep.add_consumer(["dept:ops", "role:operator"], wsan=False)
    say(f"system up: v_MK={dep.authority.v_mk}, gateway BPK for n={dep.gateway.n_max}")

    m = dep.random_message()
    dep.upload_remote(remote_p, "report-1", m, "role:operator")
    say("remote upload 'report-1' under role:operator")
    say(f"  carol reads it: {dep.download(carol, 'report-1') == m}")
    dep.upload_wsan(wsan_p, "temp-1", b"21.5C", "dept:eng")
    say(f"  bob reads WSAN upload 'temp-1': {dep.download(bob, 'temp-1').decode()}")
    m2 = dep.random_message()
    dep.upload_remote(remote_p, "report-2", m2, "dept:eng")
    say(f"remote upload 'report-2' under dept:eng; bob reads it: {dep.download(bob, 'report-2') == m2}")

    mark = dep.bus.mark()
    dep.consumer_leave(bob.id)
    bc = [r for r in dep.bus.since(mark) if r.kind == "REVOCATION"]
    say(f"bob revoked: v_MK={dep.authority.v_mk}, one WSAN broadcast of {bc[0].accounted_bytes} accounted bytes")
    say(f"  carol re-reads 'report-1' after lazy re-encryption: {dep.download(carol, 'report-1') == m}")
    dep.upload_wsan(wsan_p, "temp-2", b"22.0C", "dept:eng")
    say(f"  alice reads 'temp-2' with her broadcast-updated key: {dep.download(alice, 'temp-2').decode()}")
    say(f"  alice re-reads 'report-2': {dep.download(alice, 'report-2') == m2}")
    current = dep.cloud.store["report-2"].item
    try:
        abe.decrypt(current, bob.dk)
        say("  bob decrypts re-encrypted 'report-2' (unexpected)")
    except abe.ABEError as exc:
        say(f"  bob's old key on re-encrypted 'report-2': {type(exc).__name__}")
    if args.trace:
        write_file(args.trace, dep.bus.trace_lines().encode(), secret=False)
        say(f"trace written to {args.trace}")
    return EXIT_OK


def _number_list(text: str, cast) -> list:
    return [cast(v) for v in str(text).split(",") if v.strip()]


def cmd_simulate(args) -> int:
    from seabrew.sim import WorkloadConfig, emit_report, run_compute_experiment

    base = WorkloadConfig.paper_scale() if args.paper_scale else WorkloadConfig()
    overrides = {}
    for name, attr in (
        ("ciphertexts", "ciphertexts"),
        ("universe", "universe"),
        ("revocation_days", "revocation_days"),
        ("horizon_days", "horizon_days"),
        ("reps", "reps"),
        ("consumers", "consumers"),
    ):
        v = getattr(args, attr)
        if v is not None:
            overrides[name] = v
    if args.seed is not None:
        overrides["seed"] = args.seed
    overrides["profile"] = args.profile
    base = base.with_(**overrides)
    attrs = _number_list(args.attrs, int) if args.attrs else [base.attrs]
    rates = _number_list(args.daily_requests, float) if args.daily_requests else [base.daily_requests]
    reports = [run_compute_experiment(base.with_(attrs=a, daily_requests=r)) for a in attrs for r in rates]
    data = emit_report(reports, args.format)
    if args.out in (None, "-"):
        sys.stdout.write(data.decode())
    else:
        write_file(args.out, data, secret=False)
    return EXIT_OK


def cmd_traffic(args) -> int:
    from seabrew.sim import emit_report, run_traffic_experiment

    report = run_traffic_experiment(args.consumers, args.producers, args.attrs, args.profile, _rng(args))
    data = emit_report(report, args.format)
    if args.out in (None, "-"):
        sys.stdout.write(data.decode())
    else:
        write_file(args.out, data, secret=False)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="seabrew", description="Revocable CP-ABE toolkit and protocol simulator")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    def cmd(name, func, help_):
        p = sub.add_parser(name, help=help_)
        p.set_defaults(func=func)
        p.add_argument("--seed", type=int, default=None, help="deterministic RNG (tests only)")
        return p

    p = cmd("setup", cmd_setup, "create a master key and encryption key")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--profile", choices=PROFILES, default="80bit")

    p = cmd("keygen", cmd_keygen, "issue a decryption key")
    p.add_argument("--mk", required=True)
    p.add_argument("--attrs", nargs="+", required=True, help="attributes, space or comma separated")
    p.add_argument("--out", required=True)

    p = cmd("encrypt", cmd_encrypt, "encrypt a file under a policy")
    p.add_argument("--ek", required=True)
    p.add_argument("--policy", required=True)
    p.add_argument("--in", dest="input", required=True, help="payload file, or - for stdin")
    p.add_argument("--out", required=True)

    p = cmd("decrypt", cmd_decrypt, "decrypt a ciphertext file")
    p.add_argument("--dk", required=True)
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", default=None, help="plaintext file (default stdout)")

    p = cmd("revoke", cmd_revoke, "advance the master key and emit an update key")
    p.add_argument("--mk", required=True)
    p.add_argument("--out-mk", default=None, help="new master key file (default: overwrite --mk)")
    p.add_argument("--update", required=True, help="update key output file")

    for name, func, target in (
        ("update-cp", cmd_update_cp, "--in"),
        ("update-dk", cmd_update_dk, "--dk"),
        ("update-ek", cmd_update_ek, "--ek"),
    ):
        p = cmd(name, func, f"apply update keys to a {target[2:]} file")
        if target == "--in":
            p.add_argument("--in", dest="input", required=True)
        else:
            p.add_argument(target, required=True)
        p.add_argument("--update", nargs="+", required=True, help="update key files")
        p.add_argument("--out", default=None, help="output file (default: overwrite input)")

    p = cmd("serve-demo", cmd_serve_demo, "in-process walkthrough of the system procedures")
    p.add_argument("--profile", choices=PROFILES, default="80bit")
    p.add_argument("--trace", default=None, help="write the message trace (TSV) here")

    p = cmd("simulate", cmd_simulate, "cloud exponentiation workload experiment")
    p.add_argument("--ciphertexts", type=int)
    p.add_argument("--attrs", help="attributes per policy/key; comma list sweeps")
    p.add_argument("--universe", type=int)
    p.add_argument("--daily-requests", dest="daily_requests", help="mean daily requests; comma list sweeps")
    p.add_argument("--revocation-days", dest="revocation_days", type=float)
    p.add_argument("--horizon-days", dest="horizon_days", type=float)
    p.add_argument("--reps", type=int)
    p.add_argument("--consumers", type=int)
    p.add_argument("--profile", choices=PROFILES, default="insecure-sim")
    p.add_argument("--paper-scale", action="store_true", help="full-size defaults (hours of compute)")
    p.add_argument("--format", choices=("csv", "tsv", "table"), default="table")
    p.add_argument("--out", default=None)

    p = cmd("traffic", cmd_traffic, "WSAN revocation traffic experiment")
    p.add_argument("--consumers", type=int, default=50)
    p.add_argument("--producers", type=int, default=50)
    p.add_argument("--attrs", type=int, default=20)
    p.add_argument("--profile", choices=PROFILES, default="80bit")
    p.add_argument("--format", choices=("csv", "tsv", "table"), default="table")
    p.add_argument("--out", default=None)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except abe.NotAuthorizedError as exc:
        print(f"not authorized: {exc}", file=sys.stderr)
        return EXIT_UNAUTHORIZED
    except abe.VersionError as exc:
        print(f"version error: {exc}", file=sys.stderr)
        return EXIT_VERSION
    except (DecodeError, PolicyError, CliError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE


if __name__ == "__main__":
    sys.exit(main())
