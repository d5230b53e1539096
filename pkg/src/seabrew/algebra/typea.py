"""Type-A symmetric pairing: the supersingular curve y^2 = x^3 + x over F_q.

With q = 3 (mod 4) the curve has q + 1 points and embedding degree 2.  G0 is
the order-r subgroup of E(F_q), G1 the order-r subgroup of F_{q^2}^* and the
pairing is the reduced Tate pairing composed with the distortion map
(x, y) -> (-x, i*y), where i^2 = -1.

The shipped profile has a 160-bit r (a sparse prime, cheap Miller loop) and a
511-bit q, so a compressed G0 point (x plus one parity bit) is exactly 64
bytes and a G1 element is 128 bytes.  Variable-base scalar multiplication
runs in Jacobian coordinates; the fixed-base table and single additions stay
affine, since gmpy2 makes one inversion cheap next to interpreter overhead.
"""

from __future__ import annotations

import functools
import hashlib

from seabrew.algebra.base import DecodeError, GroupParams, PairingGroup

try:
    from gmpy2 import invert as _invert
    from gmpy2 import mpz
except ImportError:  # pragma: no cover - exercised only without gmpy2
    mpz = int

    def _invert(a, m):
        return pow(a, -1, m)


# r = 2^159 + 2^107 + 1, q = h*r - 1 with h = 0 (mod 12).
R_80 = (1 << 159) + (1 << 107) + 1
H_80 = int(
    "7ffffffffffff80000000000007ffffffffffff70000000000009fff"
    "fffffffff5000000000000c200000258",
    16,
)
Q_80 = H_80 * R_80 - 1

_GENERATOR_SEED = b"SEABREW-GENERATOR-v1"
_WINDOW = 4


class TypeACurve(PairingGroup):
    def __init__(self, q: int = Q_80, r: int = R_80, name: str = "80bit") -> None:
        if (q + 1) % r:
            raise ValueError("r must divide q + 1")
        if q % 4 != 3:
            raise ValueError("q must be 3 mod 4")
        self.q = mpz(q)
        self.r = mpz(r)
        self.cofactor = mpz((q + 1) // r)
        self._final_exp = self.cofactor
        self._r_bits = [int(b) for b in bin(r)[3:]]
        self._sqrt_exp = (self.q + 1) // 4
        nbytes = (q.bit_length() + 1 + 7) // 8
        self.params = GroupParams(
            name=name,
            order=r,
            security_bits=80 if r.bit_length() <= 160 else r.bit_length() // 2,
            g0_bytes=nbytes,
            g1_bytes=2 * ((q.bit_length() + 7) // 8),
            scalar_bytes=(r.bit_length() + 7) // 8,
            pairing="tate-distortion/type-a",
        )
        self._coord_bytes = self.params.g1_bytes // 2
        self._gen = self._hash_to_g0(_GENERATOR_SEED, b"")
        self._gen_table = self._fixed_base_table(self._gen)
        self._gt_gen: tuple | None = None

    # -- F_q / curve primitives ---------------------------------------------

    def _on_curve(self, x, y) -> bool:
        q = self.q
        return (y * y - x * x * x - x) % q == 0

    def _add(self, P, Q):
        if P is None:
            return Q
        if Q is None:
            return P
        q = self.q
        x1, y1 = P
        x2, y2 = Q
        if x1 == x2:
            if (y1 + y2) % q == 0:
                return None
            lam = (3 * x1 * x1 + 1) * _invert(2 * y1, q) % q
        else:
            lam = (y2 - y1) * _invert(x2 - x1, q) % q
        x3 = (lam * lam - x1 - x2) % q
        return x3, (lam * (x1 - x3) - y1) % q

    def _double(self, P):
        if P is None:
            return None
        q = self.q
        x1, y1 = P
        if y1 == 0:
            return None
        lam = (3 * x1 * x1 + 1) * _invert(2 * y1, q) % q
        x3 = (lam * lam - 2 * x1) % q
        return x3, (lam * (x1 - x3) - y1) % q

    def _neg(self, P):
        if P is None:
            return None
        return P[0], (-P[1]) % self.q

    # Jacobian coordinates (X, Y, Z) ~ (X/Z^2, Y/Z^3); None is the identity
    def _jdouble(self, J):
        if J is None:
            return None
        X, Y, Z = J
        if Y == 0:
            return None
        q = self.q
        YY = Y * Y % q
        S = 4 * X * YY % q
        ZZ = Z * Z % q
        M = (3 * X * X + ZZ * ZZ) % q
        X3 = (M * M - 2 * S) % q
        return X3, (M * (S - X3) - 8 * YY * YY) % q, 2 * Y * Z % q

    def _jadd_affine(self, J, P):
        if J is None:
            return (P[0], P[1], mpz(1))
        X1, Y1, Z1 = J
        x2, y2 = P
        q = self.q
        Z1Z1 = Z1 * Z1 % q
        H = (x2 * Z1Z1 - X1) % q
        r = (y2 * Z1 * Z1Z1 - Y1) % q
        if H == 0:
            return self._jdouble(J) if r == 0 else None
        HH = H * H % q
        HHH = H * HH % q
        V = X1 * HH % q
        X3 = (r * r - HHH - 2 * V) % q
        return X3, (r * (V - X3) - Y1 * HHH) % q, Z1 * H % q

    def _to_affine(self, J):
        if J is None:
            return None
        X, Y, Z = J
        q = self.q
        zi = _invert(Z, q)
        zi2 = zi * zi % q
        return X * zi2 % q, Y * zi2 * zi % q

    def _mul(self, P, k: int):
        """Variable-base scalar multiplication (width-4 NAF, Jacobian accumulator)."""
        if P is None or k == 0:
            return None
        if k < 0:
            return self._mul(self._neg(P), -k)
        naf = []
        while k:
            if k & 1:
                d = k & 15
                if d > 8:
                    d -= 16
                k -= d
            else:
                d = 0
            naf.append(d)
            k >>= 1
        P2 = self._double(P)
        odd = {1: P}
        for d in (3, 5, 7):
            odd[d] = self._add(odd[d - 2], P2)
        neg = {d: self._neg(v) for d, v in odd.items()}
        acc = None
        for d in reversed(naf):
            acc = self._jdouble(acc)
            if d > 0:
                if odd[d] is not None:
                    acc = self._jadd_affine(acc, odd[d])
            elif d < 0:
                if neg[-d] is not None:
                    acc = self._jadd_affine(acc, neg[-d])
        return self._to_affine(acc)

    def _fixed_base_table(self, P):
        table = []
        base = P
        nwin = (self.r.bit_length() + _WINDOW - 1) // _WINDOW
        for _ in range(nwin):
            row = [None, base]
            for _ in range(2, 1 << _WINDOW):
                row.append(self._add(row[-1], base))
            table.append(row)
            for _ in range(_WINDOW):
                base = self._double(base)
        return table

    def _mul_fixed(self, table, k: int):
        acc = None
        i = 0
        mask = (1 << _WINDOW) - 1
        while k:
            d = k & mask
            if d:
                acc = self._add(acc, table[i][d])
            k >>= _WINDOW
            i += 1
        return acc

    # -- F_{q^2} primitives, elements as (a, b) = a + b*i --------------------

    def _f2_mul(self, x, y):
        q = self.q
        a, b = x
        c, d = y
        ac = a * c
        bd = b * d
        return (ac - bd) % q, ((a + b) * (c + d) - ac - bd) % q

    def _f2_sqr(self, x):
        q = self.q
        a, b = x
        return (a + b) * (a - b) % q, 2 * a * b % q

    def _f2_pow(self, x, k: int):
        if k == 0:
            return (mpz(1), mpz(0))
        # fixed 4-bit window
        table = [(mpz(1), mpz(0)), x]
        for _ in range(14):
            table.append(self._f2_mul(table[-1], x))
        digits = []
        while k:
            digits.append(k & 15)
            k >>= 4
        acc = table[digits[-1]]
        for d in reversed(digits[:-1]):
            for _ in range(4):
                acc = self._f2_sqr(acc)
            if d:
                acc = self._f2_mul(acc, table[d])
        return acc

    # -- pairing ------------------------------------------------------------

    def _miller(self, P, Q):
        q = self.q
        xp, yp = P
        xq, yq = Q
        fa, fb = mpz(1), mpz(0)
        xt, yt = xp, yp
        for bit in self._r_bits:
            # tangent at T evaluated at (-xq, i*yq); vertical parts lie in F_q
            lam = (3 * xt * xt + 1) * _invert(2 * yt, q) % q
            la = (lam * (xq + xt) - yt) % q
            fa, fb = (fa + fb) * (fa - fb) % q, 2 * fa * fb % q
            fa, fb = (fa * la - fb * yq) % q, (fa * yq + fb * la) % q
            x3 = (lam * lam - 2 * xt) % q
            yt = (lam * (xt - x3) - yt) % q
            xt = x3
            if bit:
                if xt == xp:
                    # T = -P: only on the final bit; the vertical line is in F_q
                    break
                lam = (yt - yp) * _invert(xt - xp, q) % q
                la = (lam * (xq + xt) - yt) % q
                fa, fb = (fa * la - fb * yq) % q, (fa * yq + fb * la) % q
                x3 = (lam * lam - xt - xp) % q
                yt = (lam * (xt - x3) - yt) % q
                xt = x3
        return fa, fb

    def _final_exponentiation(self, f):
        q = self.q
        a, b = f
        # f^(q-1) = conj(f) / f = conj(f)^2 / N(f)
        n_inv = _invert((a * a + b * b) % q, q)
        ca, cb = self._f2_sqr((a, (-b) % q))
        u = (ca * n_inv % q, cb * n_inv % q)
        return self._f2_pow(u, int(self._final_exp))

    def _pair(self, a, b):
        if a is None or b is None:
            return (mpz(1), mpz(0))
        return self._final_exponentiation(self._miller(a, b))

    # -- hashing ------------------------------------------------------------

    def _sqrt(self, v):
        y = pow(v, self._sqrt_exp, self.q)
        return y if y * y % self.q == v % self.q else None

    @functools.lru_cache(maxsize=4096)
    def _hash_to_g0(self, dst: bytes, label: bytes):
        q = self.q
        prefix = len(dst).to_bytes(2, "big") + dst + len(label).to_bytes(4, "big") + label
        ctr = 0
        while True:
            digest = hashlib.shake_256(prefix + ctr.to_bytes(4, "big")).digest(
                self._coord_bytes + 17
            )
            x = mpz(int.from_bytes(digest[:-1], "big")) % q
            rhs = (x * x * x + x) % q
            y = self._sqrt(rhs) if rhs else None
            if y is not None:
                if (y & 1) != (digest[-1] & 1):
                    y = q - y
                P = self._mul((x, y), int(self.cofactor))
                if P is not None:
                    return P
            ctr += 1

    # -- hooks --------------------------------------------------------------

    def _generator(self):
        return self._gen

    def _g0_identity(self):
        return None

    def _g0_add(self, a, b):
        return self._add(a, b)

    def _g0_neg(self, a):
        return self._neg(a)

    def _g0_pow(self, a, k):
        if a == self._gen:
            return self._mul_fixed(self._gen_table, k)
        return self._mul(a, k)

    def _g0_eq(self, a, b):
        return a == b

    def _g0_is_identity(self, a):
        return a is None

    def _g0_encode(self, a) -> bytes:
        n = self.params.g0_bytes
        if a is None:
            return bytes(n)
        x, y = a
        v = int(x) | ((int(y) & 1) << (8 * n - 1))
        return v.to_bytes(n, "big")

    def _g0_decode(self, data: bytes, check_subgroup: bool):
        n = self.params.g0_bytes
        v = int.from_bytes(data, "big")
        if v == 0:
            return None
        parity = v >> (8 * n - 1)
        x = mpz(v & ((1 << (8 * n - 1)) - 1))
        if x >= self.q:
            raise DecodeError("x coordinate out of range")
        rhs = (x * x * x + x) % self.q
        y = self._sqrt(rhs)
        if y is None:
            raise DecodeError("point not on curve")
        if (y & 1) != parity:
            y = self.q - y
        if y == 0 and parity:
            raise DecodeError("non-canonical encoding")
        P = (x, y)
        if check_subgroup and self._mul(P, int(self.r)) is not None:
            raise DecodeError("point not in the prime-order subgroup")
        return P

    def _g1_identity(self):
        return (mpz(1), mpz(0))

    def _g1_mul(self, a, b):
        return self._f2_mul(a, b)

    def _g1_inv(self, a):
        # unitary elements: inverse is the conjugate
        return a[0], (-a[1]) % self.q

    def _g1_pow(self, a, k):
        return self._f2_pow(a, k)

    def _g1_eq(self, a, b):
        return a[0] == b[0] and a[1] == b[1]

    def _g1_encode(self, a) -> bytes:
        n = self._coord_bytes
        return int(a[0]).to_bytes(n, "big") + int(a[1]).to_bytes(n, "big")

    def _g1_decode(self, data: bytes):
        n = self._coord_bytes
        a = mpz(int.from_bytes(data[:n], "big"))
        b = mpz(int.from_bytes(data[n:], "big"))
        q = self.q
        if a >= q or b >= q:
            raise DecodeError("F_q^2 coordinate out of range")
        if (a * a + b * b) % q != 1:
            raise DecodeError("not a unitary element")
        if self._f2_pow((a, b), int(self.r)) != (1, 0):
            raise DecodeError("element not in the order-r subgroup")
        return a, b

    def is_on_curve(self, P) -> bool:
        return P is None or self._on_curve(*P)


@functools.lru_cache(maxsize=None)
def type_a_80() -> TypeACurve:
    """Shared instance of the 80-bit profile (table setup is not free)."""
    return TypeACurve()
