"""Weierstrass curve models, point counting, and Fourier coefficient streams.

Models are bundled as text lines ``label a1 a2 a3 a4 a6 conductor`` and
validated on load (nonzero discriminant, conductor support).  Good-prime
coefficients come from counting affine points over F_p; bad primes read the
reduction type off the minimal model (split/nonsplit multiplicative or
additive).
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import gcd, isqrt

from ..datafiles import data_path


def _is_prime(p: int) -> bool:
    if p < 2:
        return False
    if p < 4:
        return True
    if p % 2 == 0:
        return False
    f = 3
    while f * f <= p:
        if p % f == 0:
            return False
        f += 2
    return True


def primes_up_to(n: int) -> list[int]:
    sieve = bytearray([1]) * (n + 1)
    sieve[0:2] = b"\x00\x00"
    for p in range(2, isqrt(n) + 1):
        if sieve[p]:
            sieve[p * p:: p] = bytearray(len(sieve[p * p:: p]))
    return [i for i, b in enumerate(sieve) if b]


@dataclass(frozen=True)
class CurveModel:
    """Integral Weierstrass model y^2 + a1 xy + a3 y = x^3 + a2 x^2 + a4 x + a6."""
    label: str
    a1: int
    a2: int
    a3: int
    a4: int
    a6: int
    conductor: int

    @property
    def b2(self) -> int:
        return self.a1 ** 2 + 4 * self.a2

    @property
    def b4(self) -> int:
        return 2 * self.a4 + self.a1 * self.a3

    @property
    def b6(self) -> int:
        return self.a3 ** 2 + 4 * self.a6

    @property
    def b8(self) -> int:
        return (self.a1 ** 2 * self.a6 + 4 * self.a2 * self.a6
                - self.a1 * self.a3 * self.a4 + self.a2 * self.a3 ** 2 - self.a4 ** 2)

    @property
    def c4(self) -> int:
        return self.b2 ** 2 - 24 * self.b4

    @property
    def c6(self) -> int:
        return -self.b2 ** 3 + 36 * self.b2 * self.b4 - 216 * self.b6

    @property
    def discriminant(self) -> int:
        return (-self.b2 ** 2 * self.b8 - 8 * self.b4 ** 3 - 27 * self.b6 ** 2
                + 9 * self.b2 * self.b4 * self.b6)

    def __post_init__(self):
        if self.discriminant == 0:
            raise ValueError(f"{self.label}: singular model")
        supp_d = _support(abs(self.discriminant))
        supp_n = _support(self.conductor)
        if supp_n - supp_d:
            raise ValueError(f"{self.label}: conductor primes {supp_n} not in "
                             f"discriminant support {supp_d}")

    # -- point counting ----------------------------------------------------

    def count_affine(self, p: int) -> int:
        """Number of affine points of this model over F_p (brute force)."""
        n = 0
        for x in range(p):
            rhs = (x * x * x + self.a2 * x * x + self.a4 * x + self.a6) % p
            for y in range(p):
                if (y * y + self.a1 * x * y + self.a3 * y - rhs) % p == 0:
                    n += 1
        return n

    def ap_good(self, p: int) -> int:
        """a_p for a prime of good reduction."""
        if self.discriminant % p == 0:
            raise ValueError(f"{p} is a bad prime for {self.label}")
        if p == 2 or p == 3:
            return p + 1 - (self.count_affine(p) + 1)
        # complete the square: (2y + a1 x + a3)^2 = 4x^3 + b2 x^2 + 2 b4 x + b6
        b2, b4, b6 = self.b2 % p, self.b4 % p, self.b6 % p
        half = (p - 1) // 2
        s = 0
        for x in range(p):
            v = (4 * x % p * x % p * x + b2 * x % p * x + 2 * b4 * x + b6) % p
            if v == 0:
                continue
            s += 1 if pow(v, half, p) == 1 else -1
        return -s

    def reduction_type(self, p: int) -> str:
        """'good' | 'split' | 'nonsplit' | 'additive' at p (p <= ~100)."""
        if self.discriminant % p:
            return "good"
        if p > 600:
            raise NotImplementedError("bad-prime classification enumerates F_p points")
        smooth = 0
        for x in range(p):
            for y in range(p):
                f = (y * y + self.a1 * x * y + self.a3 * y
                     - (x ** 3 + self.a2 * x * x + self.a4 * x + self.a6)) % p
                if f:
                    continue
                fy = (2 * y + self.a1 * x + self.a3) % p
                fx = (self.a1 * y - 3 * x * x - 2 * self.a2 * x - self.a4) % p
                if fy or fx:
                    smooth += 1
        # nonsingular points + the point at infinity form G_m, its twist, or G_a
        n = smooth + 1
        if n == p:
            return "additive"
        if n == p - 1:
            return "split"
        if n == p + 1:
            return "nonsplit"
        raise ArithmeticError(f"{self.label}: smooth count {n} at p={p} matches no type "
                              "(model not minimal at p?)")

    def ap(self, p: int) -> int:
        if not _is_prime(p):
            raise ValueError(f"{p} is not prime")
        if self.discriminant % p:
            a = self.ap_good(p)
            if a * a > 4 * p:
                raise ArithmeticError(f"{self.label}: a_{p} = {a} violates the Hasse bound")
            return a
        t = self.reduction_type(p)
        return {"split": 1, "nonsplit": -1, "additive": 0}[t]

    def an_stream(self, nmax: int) -> list[int]:
        """[a_1, ..., a_nmax] via multiplicativity and prime-power recursion."""
        an = [0] * (nmax + 1)
        an[1] = 1
        for p in primes_up_to(nmax):
            ap = self.ap(p)
            good = self.discriminant % p != 0
            pk = p
            prev, cur = 1, ap
            while pk <= nmax:
                an[pk] = cur
                pk *= p
                prev, cur = cur, (ap * cur - (p * prev if good else 0))
        for n in range(2, nmax + 1):
            if an[n]:
                continue
            # factor out one prime power
            p = _least_prime_factor(n)
            pk = p
            while n % (pk * p) == 0:
                pk *= p
            m = n // pk
            if m > 1:
                an[n] = an[pk] * an[m]
        return an[1:]


def _least_prime_factor(n: int) -> int:
    if n % 2 == 0:
        return 2
    f = 3
    while f * f <= n:
        if n % f == 0:
            return f
        f += 2
    return n


def _support(n: int) -> set[int]:
    out = set()
    n = abs(n)
    f = 2
    while f * f <= n:
        if n % f == 0:
            out.add(f)
            while n % f == 0:
                n //= f
        f += 1 if f == 2 else 2
    if n > 1:
        out.add(n)
    return out


# ---------------------------------------------------------------------------
# Bundled models
# ---------------------------------------------------------------------------

@lru_cache(maxsize=4)
def load_curves(path=None) -> dict[str, CurveModel]:
    p = path if path is not None else data_path("curves.txt")
    out: dict[str, CurveModel] = {}
    for line in open(p):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        label, a1, a2, a3, a4, a6, cond = line.split()
        out[label] = CurveModel(label, int(a1), int(a2), int(a3), int(a4), int(a6),
                                int(cond))
    return out


def curve_by_label(label: str) -> CurveModel:
    curves = load_curves()
    if label not in curves:
        raise KeyError(f"no bundled model for {label!r}; known: {sorted(curves)}")
    return curves[label]


# ---------------------------------------------------------------------------
# Minimal models (Laska-Kraus-Connell) and quartic Jacobians, used to
# validate the bundled data against the table polynomials themselves.
# ---------------------------------------------------------------------------

def _kraus_reconstruct(c4: int, c6: int) -> CurveModel | None:
    """Integral model with the given invariants, if Kraus' conditions hold."""
    if (c4 ** 3 - c6 ** 2) % 1728:
        return None
    # b2 is determined mod 12
    for b2 in range(-5, 7):
        if (b2 * b2 - c4) % 24:
            continue
        b4, r = divmod(b2 * b2 - c4, 24)
        if r:
            continue
        num = -b2 ** 3 + 36 * b2 * b4 - c6
        b6, r = divmod(num, 216)
        if r:
            continue
        a1 = b2 % 2
        a2 = (b2 - a1 * a1) // 4
        a3 = b6 % 2
        a6 = (b6 - a3 * a3) // 4
        if (b4 - a1 * a3) % 2:
            continue
        a4 = (b4 - a1 * a3) // 2
        m = CurveModel("candidate", a1, a2, a3, a4, a6, 1)
        if m.c4 == c4 and m.c6 == c6:
            return m
    return None


def minimal_model_from_invariants(c4: Fraction | int, c6: Fraction | int,
                                  label: str = "derived",
                                  conductor: int | None = None) -> CurveModel:
    """Global minimal model of a curve with rational invariants (c4, c6).

    Laska-Kraus-Connell: scale to integers, then divide out the largest u
    with u^4 | c4, u^6 | c6 admitting an integral model (Kraus conditions).
    """
    c4, c6 = Fraction(c4), Fraction(c6)
    u = 1
    while (c4 * u ** 4).denominator != 1 or (c6 * u ** 6).denominator != 1:
        u += 1
    C4, C6 = int(c4 * u ** 4), int(c6 * u ** 6)
    if C4 ** 3 - C6 ** 2 == 0:
        raise ValueError("singular invariants")
    bounds = []
    if C4:
        bounds.append(int(round(abs(C4) ** 0.25)) + 2)
    if C6:
        bounds.append(int(round(abs(C6) ** (1 / 6))) + 2)
    best = None
    for u in range(1, min(bounds) + 1):
        u4, u6 = u ** 4, u ** 6
        if C4 % u4 == 0 and C6 % u6 == 0:
            m = _kraus_reconstruct(C4 // u4, C6 // u6)
            if m is not None:
                best = m
    if best is None:
        raise ArithmeticError("no integral model found (Kraus conditions failed)")
    cond = conductor if conductor is not None else 0
    if cond == 0:
        # placeholder: product of bad primes, enough for support validation
        cond = 1
        for q in sorted(_support(abs(best.discriminant))):
            cond *= q
    return CurveModel(label, best.a1, best.a2, best.a3, best.a4, best.a6, cond)


def quartic_jacobian_invariants(q: list[Fraction]) -> tuple[Fraction, Fraction]:
    """(c4-like, c6-like) invariants of the Jacobian of v^2 = quartic.

    For q = a x^4 + b x^3 + c x^2 + d x + e, the Jacobian is
    y^2 = x^3 - 27 I x - 27 J with I = 12ae - 3bd + c^2 and
    J = 72ace - 27ad^2 - 27b^2 e + 9bcd - 2c^3; the Weierstrass invariants
    of that model are (c4, c6) = (48 * 27 I / 48, ...): y^2 = x^3 + Ax + B
    has c4 = -48A, c6 = -864B.
    """
    q = list(q) + [Fraction(0)] * (5 - len(q))
    e, d, c, b, a = q[0], q[1], q[2], q[3], q[4]
    I = 12 * a * e - 3 * b * d + c * c
    J = 72 * a * c * e - 27 * a * d * d - 27 * b * b * e + 9 * b * c * d - 2 * c ** 3
    A, B = -27 * I, -27 * J
    return -48 * A, -864 * B
