"""Siegel units, cross-ratio modular units, cusps of X1(N), and divisors.

Conventions
-----------
All q-expansions here are "Fricke side": a unit ``u`` on Gamma1(N) is
expanded through ``u(-1/(N tau))`` whose expansion lives on the integer
``q``-lattice (with a fractional Siegel leading exponent).  The building
blocks are

* ``g_a`` (``siegel_fricke_qexp``): leading monomial ``q^{N*B2(a/N)/2}``
  times the product of ``(1 - q^n)`` over ``n = +-a (mod N)``;
* cross-ratio units ``u1(a,b,c,d)``: cross-ratios of Weierstrass
  P-values at N-torsion parameters ``(0, m)``.  They factor through
  P-value differences into ratios of eight Siegel units; the square
  factors cancel, leaving the exponent-vector rule implemented in
  :func:`u1_exponents`.

A second, independent expansion route (:func:`u1_fricke_qexp_wp`) computes
the same unit exactly from the rational q-series of the Weierstrass
function; it carries the leading-coefficient sign, which the Siegel product
alone does not determine.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import gcd
from typing import Iterable, Sequence

from .qexp import DEFAULT_PREC, FracSeries, ZeroSeriesError


class DegenerateParametersError(ValueError):
    """Raised when cross-ratio parameters collide as classes mod +-1."""


def bernoulli2(t: Fraction) -> Fraction:
    """Second Bernoulli polynomial B2(t) = t^2 - t + 1/6."""
    return t * t - t + Fraction(1, 6)


def class_mod_pm(x: int, level: int) -> int:
    """Canonical representative of x in (Z/NZ)/+-1, in [0, N//2]."""
    x %= level
    return min(x, level - x)


def siegel_lead_exp(level: int, a: int) -> Fraction:
    """Leading exponent N*B2(a/N)/2 of the Fricke-side Siegel unit."""
    ahat = a % level
    if ahat == 0:
        raise ValueError("Siegel unit index must be nonzero mod N")
    return Fraction(level, 2) * bernoulli2(Fraction(ahat, level))


def siegel_fricke_qexp(level: int, a: int, prec: Fraction = DEFAULT_PREC) -> FracSeries:
    """q-expansion of the Fricke-side Siegel unit g_a at the given level."""
    a = a % level
    if a == 0:
        raise ValueError("Siegel unit index must be nonzero mod N")
    lead = siegel_lead_exp(level, a)
    out = FracSeries.monomial(level, lead).truncate(prec + max(Fraction(0), lead))
    q_one = FracSeries.one(level)
    nmax = int(prec - min(lead, Fraction(0))) + 2
    for n in range(1, nmax + 1):
        if n % level == a or (-n) % level == a:
            out = out * (q_one - FracSeries.monomial(level, Fraction(n)))
    return out.truncate(prec)


@lru_cache(maxsize=None)
def _siegel_cached(level: int, a: int, sprec_num: int, sprec_den: int) -> FracSeries:
    return siegel_fricke_qexp(level, a, Fraction(sprec_num, sprec_den))


# ---------------------------------------------------------------------------
# Unit vectors over the Siegel basis g_1 .. g_{floor(N/2)}
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class UnitVector:
    """Element of the unit group tensor Q in Siegel-basis coordinates.

    ``exps`` maps basis index a (1 <= a <= N//2) to an exact rational
    exponent; ``sign`` records the leading Fourier coefficient (+-1) of the
    actual function when that is meaningful (products of Siegel units have
    leading coefficient +1 by construction; cross-ratio units may differ by
    a sign, which is torsion in F^x tensor Q but matters for q-expansions).
    """
    level: int
    exps: tuple[tuple[int, Fraction], ...]
    sign: int = 1

    @classmethod
    def from_dict(cls, level: int, d: dict[int, Fraction], sign: int = 1) -> "UnitVector":
        items = tuple(sorted((a, Fraction(e)) for a, e in d.items() if e))
        for a, _ in items:
            if not (1 <= a <= level // 2):
                raise ValueError(f"basis index {a} out of range for level {level}")
        return cls(level, items, sign)

    def as_dict(self) -> dict[int, Fraction]:
        return dict(self.exps)

    def __mul__(self, other: "UnitVector") -> "UnitVector":
        if self.level != other.level:
            raise ValueError("level mismatch")
        d = self.as_dict()
        for a, e in other.exps:
            d[a] = d.get(a, Fraction(0)) + e
        return UnitVector.from_dict(self.level, d, self.sign * other.sign)

    def inverse(self) -> "UnitVector":
        return UnitVector.from_dict(self.level, {a: -e for a, e in self.exps}, self.sign)

    def is_integral(self) -> bool:
        return all(e.denominator == 1 for _, e in self.exps)

    def to_text(self) -> str:
        body = " ".join(f"{a}:{e}" for a, e in self.exps)
        return f"sign={self.sign:+d} {body}" if body else f"sign={self.sign:+d} (constant)"

    def qexp(self, prec: Fraction = DEFAULT_PREC) -> FracSeries:
        """Fricke-side q-expansion of the unit, sign included."""
        val = sum((e * siegel_lead_exp(self.level, a) for a, e in self.exps),
                  Fraction(0))
        # window must survive division by the denominator valuations
        neg = sum((-e * siegel_lead_exp(self.level, a) for a, e in self.exps
                   if e < 0 and siegel_lead_exp(self.level, a) > 0), Fraction(0))
        work = prec + max(Fraction(0), -val) + neg + 1
        num = FracSeries.one(self.level)
        den = FracSeries.one(self.level)
        for a, e in self.exps:
            if e.denominator != 1:
                raise ValueError("q-expansion requires integral exponents")
            g = _siegel_cached(self.level, a, work.numerator, work.denominator)
            if e > 0:
                num = num * g ** int(e)
            else:
                den = den * g ** int(-e)
        out = (num / den) * self.sign
        return out.truncate(prec)


# ---------------------------------------------------------------------------
# Cross-ratio units u1(a,b,c,d)
# ---------------------------------------------------------------------------

def _check_quad(level: int, quad: Sequence[int]) -> tuple[int, ...]:
    if len(quad) != 4:
        raise DegenerateParametersError("need exactly four parameters")
    classes = [class_mod_pm(x, level) for x in quad]
    if len(set(classes)) != 4:
        raise DegenerateParametersError(
            f"parameters {tuple(quad)} are not distinct as classes mod +-1 at level {level}")
    return tuple(classes)


def u1_exponents(level: int, quad: Sequence[int]) -> dict[int, int]:
    """Siegel-basis exponent vector of u1(a,b,c,d).

    Numerator indices {a+c, a-c, b+d, b-d}, denominator {a+d, a-d, b+c, b-c},
    reduced into [1, N//2] via x -> min(x, N-x).  The degenerate zero index
    cannot occur for distinct parameter classes; it is guarded anyway.
    """
    a, b, c, d = _check_quad(level, quad)
    out: dict[int, int] = {}
    for x, s in (((a + c), 1), ((a - c), 1), ((b + d), 1), ((b - d), 1),
                 ((a + d), -1), ((a - d), -1), ((b + c), -1), ((b - c), -1)):
        k = class_mod_pm(x, level)
        if k == 0:
            raise DegenerateParametersError(
                f"degenerate cross-ratio: index {x} = 0 mod +-{level} for parameters {tuple(quad)}")
        out[k] = out.get(k, 0) + s
    return {k: e for k, e in out.items() if e}


# --- exact Weierstrass-function route --------------------------------------

def _sigma_qexp(level: int, j: int, prec_int: int) -> dict[int, Fraction]:
    """Coefficients of q^j/(1-q^j)^2 = sum_{t>=1} t q^{jt}, exponents in ints."""
    out: dict[int, Fraction] = {}
    t = 1
    while j * t < prec_int:
        out[j * t] = Fraction(t)
        t += 1
    return out


@lru_cache(maxsize=None)
def weierstrass_p_fricke(level: int, m: int, prec_int: int) -> FracSeries:
    """Exact q-series of (2 pi i)^{-2} P(N tau; m tau) on the integer lattice.

    This is the Fricke-side avatar of the weight-2 form P_{(0,m)}; the
    series has rational coefficients because e^{2 pi i m tau} = q^m.
    """
    m = m % level
    if m == 0:
        raise ValueError("torsion parameter must be nonzero mod N")
    acc: dict[int, Fraction] = {0: Fraction(1, 12)}

    def add(d: dict[int, Fraction], mult: int = 1) -> None:
        for e, c in d.items():
            v = acc.get(e, Fraction(0)) + mult * c
            if v:
                acc[e] = v
            else:
                acc.pop(e, None)

    add(_sigma_qexp(level, m, prec_int))
    n = 1
    while level * n - max(m, level - m) < prec_int:
        for j in (level * n + m, level * n - m):
            if j < prec_int:
                add(_sigma_qexp(level, j, prec_int))
        if level * n < prec_int:
            add(_sigma_qexp(level, level * n, prec_int), -2)
        n += 1
    return FracSeries(level, {Fraction(e): c for e, c in acc.items()}, Fraction(prec_int))


def u1_fricke_qexp_wp(level: int, quad: Sequence[int], prec: Fraction = Fraction(40)) -> FracSeries:
    """Fricke-side q-expansion of u1(a,b,c,d) via exact Weierstrass series.

    Computes the cross-ratio (Pa-Pc)(Pb-Pd) / ((Pa-Pd)(Pb-Pc)); a zero
    parameter is the pole of P and is handled by the cross-ratio limit.
    Independent of the Siegel-product route, and carries the correct sign.
    """
    quad_c = _check_quad(level, quad)
    return _u1_wp_cached(level, quad_c, Fraction(prec))


@lru_cache(maxsize=100_000)
def _u1_wp_cached(level: int, quad: tuple[int, ...], prec: Fraction) -> FracSeries:
    a, b, c, d = quad
    prec_int = int(prec) + 2 * level + 4

    def wp(m: int) -> FracSeries | None:
        return None if m == 0 else weierstrass_p_fricke(level, m, prec_int)

    pa, pb, pc, pd = wp(a), wp(b), wp(c), wp(d)

    def diff(p: FracSeries | None, q: FracSeries | None) -> FracSeries | None:
        # None encodes the P-pole (infinity); a difference touching it is
        # dropped from the cross-ratio limit pairwise.
        if p is None or q is None:
            return None
        return p - q

    n1, n2 = diff(pa, pc), diff(pb, pd)
    d1, d2 = diff(pa, pd), diff(pb, pc)
    # cross-ratio limits: infinity appears in exactly one factor of the
    # numerator and one of the denominator; those two factors cancel.
    if n1 is None and d1 is None:
        num, den = n2, d2
    elif n1 is None and d2 is None:
        num, den = n2, d1
    elif n2 is None and d1 is None:
        num, den = n1, d2
    elif n2 is None and d2 is None:
        num, den = n1, d1
    elif n1 is None or n2 is None or d1 is None or d2 is None:
        raise DegenerateParametersError("unbalanced pole in cross-ratio")
    else:
        num, den = n1 * n2, d1 * d2
    return (num / den).truncate(prec)


def u1_sign(level: int, quad: Sequence[int]) -> int:
    """Sign of the leading Fricke-side Fourier coefficient of u1(a,b,c,d)."""
    s = u1_fricke_qexp_wp(level, quad, prec=Fraction(2 * level + 6))
    lead = s.leading_coeff()
    if lead not in (1, -1):
        raise ArithmeticError(f"leading coefficient {lead} of u1{tuple(quad)} is not a unit sign")
    return int(lead)


def u1_as_siegel(level: int, quad: Sequence[int]) -> UnitVector:
    """Exponent vector of u1(a,b,c,d) over the Siegel basis, sign resolved."""
    exps = {a: Fraction(e) for a, e in u1_exponents(level, quad).items()}
    return UnitVector.from_dict(level, exps, u1_sign(level, quad))


def u1_fricke_qexp(level: int, quad: Sequence[int], prec: Fraction = DEFAULT_PREC) -> FracSeries:
    """q-expansion of u1(a,b,c,d) through its Siegel-unit factorization."""
    return u1_as_siegel(level, quad).qexp(prec)


# ---------------------------------------------------------------------------
# Cusps of X1(N)
# ---------------------------------------------------------------------------

@dataclass(frozen=True, order=True)
class CuspRep:
    """Cusp of X1(N) as a class (c, d), c mod N, d mod gcd(c, N), mod +-1."""
    level: int
    c: int
    d: int

    def label(self) -> str:
        """Display label: orbit representatives print as oo, 0, 1/2, ..."""
        k = _orbit_rep_k(self.level).get(self)
        if k is None:
            return f"({self.c},{self.d})"
        if k == 0:
            return "oo"
        if k == 1:
            return "0"
        return f"1/{k}"


def cusp_class(level: int, c: int, d: int) -> CuspRep:
    """Canonical representative of the cusp with bottom row (c, d)."""
    if level == 1:
        return CuspRep(1, 0, 0)
    c %= level
    g = gcd(c, level)

    def normal(cc: int, dd: int) -> tuple[int, int]:
        if g == 1:
            return cc, 0
        return cc, dd % g

    cand1 = normal(c, d)
    cand2 = normal((-c) % level, -d)
    return CuspRep(level, *min(cand1, cand2))


def cusp_of_fraction(level: int, a: int, c: int) -> CuspRep:
    """Cusp class of the rational point a/c (gcd(a, c) = 1; c = 0 gives oo)."""
    if gcd(a, c) != 1:
        raise ValueError("fraction must be in lowest terms")
    # complete (a, c) to an SL2(Z) matrix (a b; c d) sending oo to a/c;
    # the cusp is the class of the bottom row (c, d).
    g, x, y = _xgcd(a, c)
    assert g == 1
    d, b = x, -y
    assert a * d - b * c == 1
    return cusp_class(level, c, d)


def _xgcd(a: int, b: int) -> tuple[int, int, int]:
    """g, x, y with a*x + b*y = g = gcd(a, b)."""
    if b == 0:
        return (a, 1, 0) if a >= 0 else (-a, -1, 0)
    g, x, y = _xgcd(b, a % b)
    return g, y, x - (a // b) * y


@lru_cache(maxsize=None)
def enumerate_cusps(level: int) -> tuple[tuple[CuspRep, ...], dict[CuspRep, int], dict[CuspRep, CuspRep]]:
    """All cusps of X1(N) with Galois-orbit data.

    Returns (all cusps, orbit sizes keyed by orbit representative, map from
    cusp to its orbit representative).  Orbit representatives are the cusps
    1/k = (k, 1) for 0 <= k <= N//2, per the Galois action
    sigma (c, d) = (c, chi(sigma) d).
    """
    cusps = set()
    for c in range(level):
        g = gcd(c, level)
        if g == 1:
            cusps.add(cusp_class(level, c, 0))
        else:
            for d in range(g):
                if gcd(d, g) == 1:
                    cusps.add(cusp_class(level, c, d))
    if level == 1:
        rep = CuspRep(1, 0, 0)
        return (rep,), {rep: 1}, {rep: rep}
    reps = [cusp_class(level, k, 1) for k in range(level // 2 + 1)]
    orbit_of: dict[CuspRep, CuspRep] = {}
    sizes: dict[CuspRep, int] = {}
    units_mod_n = [x for x in range(1, level) if gcd(x, level) == 1]
    for k, rep in zip(range(level // 2 + 1), reps):
        orbit = {cusp_class(level, k, chi) for chi in units_mod_n}
        for x in orbit:
            orbit_of[x] = rep
        sizes[rep] = len(orbit)
    missing = cusps - set(orbit_of)
    if missing or len(orbit_of) != len(cusps):
        raise AssertionError(f"cusp orbit partition failed at level {level}: {missing}")
    return tuple(sorted(cusps)), sizes, orbit_of


@lru_cache(maxsize=None)
def _orbit_rep_k(level: int) -> dict[CuspRep, int]:
    if level == 1:
        return {CuspRep(1, 0, 0): 0}
    return {cusp_class(level, k, 1): k for k in range(level // 2 + 1)}


# ---------------------------------------------------------------------------
# Divisors of cross-ratio units
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class UnitDivisor:
    """Divisor supported on the Galois-orbit representatives 1/k.

    Orders are measured with respect to the local uniformizer
    q^{gcd(k,N)/N}; the total degree weights each order by the size of the
    Galois orbit of the cusp.
    """
    level: int
    orders: tuple[tuple[int, int], ...]   # (k, order), only nonzero orders

    def as_dict(self) -> dict[int, int]:
        return dict(self.orders)

    def degree(self) -> int:
        _, sizes, _ = enumerate_cusps(self.level)
        rep_k = _orbit_rep_k(self.level)
        size_of_k = {k: sizes[rep] for rep, k in rep_k.items()}
        return sum(size_of_k[k] * o for k, o in self.orders)

    def to_text(self) -> str:
        if not self.orders:
            return "0"
        rep_k = {k: rep for rep, k in _orbit_rep_k(self.level).items()}
        return " + ".join(f"{o}*[{rep_k[k].label()}]" for k, o in self.orders)


def _slash_valuation(level: int, pairs_num: list[tuple[int, int]],
                     pairs_den: list[tuple[int, int]]) -> Fraction:
    """q-valuation at oo of a ratio of full-level Siegel units.

    Only the leading exponent B2(x1/N)/2 of g_(x1,x2) is needed; roots of
    unity in the coefficients never enter the valuation.
    """
    val = Fraction(0)
    for (x1, _x2) in pairs_num:
        val += bernoulli2(Fraction(x1 % level, level)) / 2
    for (x1, _x2) in pairs_den:
        val -= bernoulli2(Fraction(x1 % level, level)) / 2
    return val


def u1_order_at_cusp(level: int, quad: Sequence[int], k: int) -> int:
    """Order of u1(a,b,c,d) at the cusp 1/k w.r.t. q^{gcd(k,N)/N}."""
    a, b, c, d = _check_quad(level, quad)
    # slash by (1 0; k 1): parameter (0, m) goes to (k m, m)
    pa, pb, pc, pd = ((k * m % level, m % level) for m in (a, b, c, d))

    def comb(x: tuple[int, int], y: tuple[int, int], s: int) -> tuple[int, int]:
        return ((x[0] + s * y[0]) % level, (x[1] + s * y[1]) % level)

    num = [comb(pa, pc, 1), comb(pa, pc, -1), comb(pb, pd, 1), comb(pb, pd, -1)]
    den = [comb(pa, pd, 1), comb(pa, pd, -1), comb(pb, pc, 1), comb(pb, pc, -1)]
    for (x1, x2) in num + den:
        if x1 == 0 and x2 == 0:
            raise DegenerateParametersError(f"degenerate slashed index for {tuple(quad)} at k={k}")
    val = _slash_valuation(level, num, den)
    order = val * level / gcd(k, level)
    if order.denominator != 1:
        raise ArithmeticError(
            f"non-integer cusp order {order} for u1{tuple(quad)} at 1/{k}: implementation bug")
    return int(order)


def divisor_u1(level: int, quad: Sequence[int]) -> UnitDivisor:
    """Divisor of u1(a,b,c,d) on the orbit representatives 1/k."""
    orders = []
    for k in range(level // 2 + 1):
        o = u1_order_at_cusp(level, quad, k)
        if o:
            orders.append((k, o))
    div = UnitDivisor(level, tuple(orders))
    if div.degree() != 0:
        raise ArithmeticError(
            f"principal divisor of u1{tuple(quad)} has degree {div.degree()}: implementation bug")
    return div


# ---------------------------------------------------------------------------
# The level-15 parametrisation units and the defining identity
# ---------------------------------------------------------------------------

#: Parameters of the two units parametrising the Maillot curve
#: (1+x)^2 (1+y)^2 = xy at level 15; x = -u1(QUAD_X), y = -u1(QUAD_Y).
QUAD_X = (1, 2, 3, 7)
QUAD_Y = (2, 4, 6, 1)
PARAM_LEVEL = 15


@dataclass(frozen=True)
class ParametrisationReport:
    prec: Fraction
    identity_holds: bool
    first_bad_exponent: Fraction | None
    pole_order_budget: dict[str, int]
    vanishing_order_witness: Fraction


def verify_parametrisation(prec: Fraction = DEFAULT_PREC,
                           quad_x: Sequence[int] = QUAD_X,
                           quad_y: Sequence[int] = QUAD_Y) -> ParametrisationReport:
    """Check (1+u)^2 (1+v)^2 - u v = 0 exactly up to the given window.

    u = -u1(quad_x), v = -u1(quad_y), computed on the Fricke side where
    both expansions live on the integer q-lattice.  Also reports the
    pole-order budget from the divisors (poles of order <= 4 at the two
    relevant cusps vs. vanishing to order >= 5), which is what upgrades a
    truncated check to the exact identity.
    """
    if prec < 8:
        raise ValueError("window too small to be meaningful; need prec >= 8")
    N = PARAM_LEVEL
    ut = -u1_fricke_qexp(N, quad_x, prec)
    vt = -u1_fricke_qexp(N, quad_y, prec)
    one = FracSeries.one(N)
    f = (one + ut) ** 2 * (one + vt) ** 2 - ut * vt
    bad: Fraction | None = None
    if not f.is_zero():
        bad = f.valuation()
    div_u = divisor_u1(N, quad_x)
    div_v = divisor_u1(N, quad_y)
    budget = {
        "max_pole_u": max((-o for _, o in div_u.orders), default=0),
        "max_pole_v": max((-o for _, o in div_v.orders), default=0),
    }
    try:
        witness = f.valuation()
    except ZeroSeriesError:
        witness = f.prec
    return ParametrisationReport(
        prec=f.prec,
        identity_holds=f.is_zero(),
        first_bad_exponent=bad,
        pole_order_budget=budget,
        vanishing_order_witness=witness,
    )
