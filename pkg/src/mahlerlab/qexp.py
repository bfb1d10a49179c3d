"""Exact truncated q-expansions with rational exponents.

Every symbolic computation in this package runs over :class:`FracSeries`:
finite sums ``sum c_e * q^e`` with exact rational coefficients ``c_e`` and
exact rational exponents ``e`` lying on a fixed lattice ``(1/D) Z``.  A series
carries a *window* ``prec``: coefficients of ``q^e`` with ``e < prec`` are
exact, everything at or above ``prec`` is unknown.  Operations compute the
tightest sound output window.
"""
from __future__ import annotations

from fractions import Fraction
from math import gcd, lcm
from typing import Iterable, Mapping

#: Sentinel used as "exact to all orders" precision (kept finite so that
#: window arithmetic stays plain rational arithmetic).
INF_PREC = Fraction(10**9)

#: Default working window for level-15 computations.  The deepest consumer
#: (the parametrisation identity) needs 200 q-powers.
DEFAULT_PREC = Fraction(200)


def lattice_den(level: int) -> int:
    """Exponent denominator used by default at a given level.

    Divisible by lcm(2*level, 12) (Siegel leading exponents) and by the
    level itself (Eisenstein q^{mn/N} lattices).
    """
    if level < 1:
        raise ValueError("level must be >= 1")
    return lcm(12, 2 * level * level)


class LevelMismatchError(ValueError):
    pass


class ZeroSeriesError(ZeroDivisionError):
    pass


class FracSeries:
    """Window-truncated q-series with exact rational data.

    Internally exponents are stored as integers scaled by ``den`` so that
    the multiplication kernel works on plain ints.  Instances are immutable;
    all arithmetic returns new objects, and sharing across threads is safe.
    """

    __slots__ = ("level", "den", "_terms", "_sprec")

    def __init__(self, level: int, terms: Mapping[Fraction, Fraction] | None = None,
                 prec: Fraction = DEFAULT_PREC, den: int | None = None):
        self.level = int(level)
        self.den = int(den) if den is not None else lattice_den(level)
        sprec = _scale(prec, self.den)
        tdict: dict[int, Fraction] = {}
        if terms:
            for e, c in terms.items():
                c = Fraction(c)
                if not c:
                    continue
                se = _scale(Fraction(e), self.den)
                if se >= sprec:
                    continue
                tdict[se] = tdict.get(se, Fraction(0)) + c
        self._terms = {e: c for e, c in tdict.items() if c}
        self._sprec = sprec

    # -- constructors -------------------------------------------------

    @classmethod
    def _raw(cls, level: int, den: int, terms: dict[int, Fraction], sprec: int) -> "FracSeries":
        s = object.__new__(cls)
        s.level = level
        s.den = den
        s._terms = terms
        s._sprec = sprec
        return s

    @classmethod
    def zero(cls, level: int, prec: Fraction = DEFAULT_PREC, den: int | None = None) -> "FracSeries":
        return cls(level, {}, prec, den)

    @classmethod
    def one(cls, level: int, den: int | None = None) -> "FracSeries":
        return cls.monomial(level, Fraction(0), den=den)

    @classmethod
    def monomial(cls, level: int, exponent: Fraction, coeff: Fraction = Fraction(1),
                 den: int | None = None, prec: Fraction = INF_PREC) -> "FracSeries":
        """The monomial coeff*q^exponent, exact to all orders by default."""
        d = int(den) if den is not None else lattice_den(level)
        e = Fraction(exponent)
        if (e * d).denominator != 1:
            raise ValueError(f"exponent {e} not on the 1/{d} lattice")
        s = cls._raw(level, d, {}, _scale(prec, d))
        if coeff:
            se = _scale(e, d)
            if se < s._sprec:
                s._terms[se] = Fraction(coeff)
        return s

    # -- inspection ----------------------------------------------------

    @property
    def prec(self) -> Fraction:
        return Fraction(self._sprec, self.den)

    def terms(self) -> dict[Fraction, Fraction]:
        return {Fraction(e, self.den): c for e, c in sorted(self._terms.items())}

    def coeff(self, exponent: Fraction) -> Fraction:
        se = _scale(Fraction(exponent), self.den)
        if se >= self._sprec:
            raise ValueError(f"coefficient of q^{exponent} is outside the window O(q^{self.prec})")
        return self._terms.get(se, Fraction(0))

    def is_zero(self) -> bool:
        """True if no nonzero coefficient is known below the window edge."""
        return not self._terms

    def valuation(self) -> Fraction:
        """Smallest exponent with nonzero coefficient.

        Raises :class:`ZeroSeriesError` when the series is zero to precision:
        the caller must distinguish "zero within the window" from an actual
        order of vanishing.
        """
        if not self._terms:
            raise ZeroSeriesError(f"series is zero up to O(q^{self.prec})")
        return Fraction(min(self._terms), self.den)

    def leading_coeff(self) -> Fraction:
        if not self._terms:
            raise ZeroSeriesError(f"series is zero up to O(q^{self.prec})")
        return self._terms[min(self._terms)]

    # -- window handling -------------------------------------------------

    def truncate(self, prec: Fraction) -> "FracSeries":
        sprec = min(self._sprec, _scale(prec, self.den))
        return FracSeries._raw(self.level, self.den,
                               {e: c for e, c in self._terms.items() if e < sprec}, sprec)

    def agrees_with(self, other: "FracSeries") -> bool:
        """Exact equality of all coefficients on the common window."""
        a, b = _common(self, other)
        w = min(a._sprec, b._sprec)
        for e, c in a._terms.items():
            if e < w and b._terms.get(e) != c:
                return False
        for e, c in b._terms.items():
            if e < w and e not in a._terms:
                return False
        return True

    # -- ring operations ------------------------------------------------

    def __neg__(self) -> "FracSeries":
        return FracSeries._raw(self.level, self.den,
                               {e: -c for e, c in self._terms.items()}, self._sprec)

    def __add__(self, other) -> "FracSeries":
        other = self._coerce(other)
        a, b = _common(self, other)
        sprec = min(a._sprec, b._sprec)
        out = {e: c for e, c in a._terms.items() if e < sprec}
        for e, c in b._terms.items():
            if e >= sprec:
                continue
            s = out.get(e, Fraction(0)) + c
            if s:
                out[e] = s
            else:
                out.pop(e, None)
        return FracSeries._raw(a.level, a.den, out, sprec)

    __radd__ = __add__

    def __sub__(self, other) -> "FracSeries":
        return self + (-self._coerce(other))

    def __rsub__(self, other) -> "FracSeries":
        return self._coerce(other) - self

    def __mul__(self, other) -> "FracSeries":
        if isinstance(other, (int, Fraction)):
            c = Fraction(other)
            if not c:
                return FracSeries._raw(self.level, self.den, {}, self._sprec)
            return FracSeries._raw(self.level, self.den,
                                   {e: c * v for e, v in self._terms.items()}, self._sprec)
        other = self._coerce(other)
        a, b = _common(self, other)
        va = min(a._terms) if a._terms else a._sprec
        vb = min(b._terms) if b._terms else b._sprec
        sprec = min(a._sprec + vb, b._sprec + va)
        out: dict[int, Fraction] = {}
        bi = sorted(b._terms.items())
        for ea, ca in sorted(a._terms.items()):
            lim = sprec - ea
            for eb, cb in bi:
                if eb >= lim:
                    break
                e = ea + eb
                s = out.get(e, Fraction(0)) + ca * cb
                if s:
                    out[e] = s
                else:
                    out.pop(e, None)
        return FracSeries._raw(a.level, a.den, out, sprec)

    __rmul__ = __mul__

    def inverse(self) -> "FracSeries":
        """Multiplicative inverse; requires a nonzero series.

        The output window keeps the relative precision of the input:
        prec(a^-1) = prec(a) - 2*val(a).
        """
        if not self._terms:
            raise ZeroSeriesError("cannot invert a series that is zero to precision")
        val = min(self._terms)
        lead = self._terms[val]
        window = self._sprec - val          # relative window length
        # exponent step of the normalized tail
        step = 0
        for e in self._terms:
            step = gcd(step, e - val)
        if step == 0:
            step = window  # monomial: inverse is a monomial
        inv: dict[int, Fraction] = {0: 1 / lead}
        if step < window:
            a_rel = {e - val: c for e, c in self._terms.items()}
            for k in range(step, window, step):
                acc = Fraction(0)
                for e, c in a_rel.items():
                    if 0 < e <= k and (k - e) in inv:
                        acc += c * inv[k - e]
                if acc:
                    inv[k] = -acc / lead
        out = {k - val: c for k, c in inv.items()}
        return FracSeries._raw(self.level, self.den, out, window - val)

    def __pow__(self, n: int) -> "FracSeries":
        if not isinstance(n, int):
            raise TypeError("only integer powers are supported")
        if n < 0:
            return self.inverse() ** (-n)
        result = FracSeries.monomial(self.level, Fraction(0), den=self.den)
        base = self
        while n:
            if n & 1:
                result = result * base
            base_needed = n >> 1
            if base_needed:
                base = base * base
            n >>= 1
        return result

    def __truediv__(self, other) -> "FracSeries":
        if isinstance(other, (int, Fraction)):
            return self * (Fraction(1) / Fraction(other))
        return self * self._coerce(other).inverse()

    # -- equality is structural (same window, same stored terms) ---------

    def __eq__(self, other) -> bool:
        if not isinstance(other, FracSeries):
            return NotImplemented
        return (self.level == other.level and self.den == other.den
                and self._sprec == other._sprec and self._terms == other._terms)

    def __hash__(self):
        return hash((self.level, self.den, self._sprec, tuple(sorted(self._terms.items()))))

    # -- serialization ----------------------------------------------------

    def to_text(self) -> str:
        """Serialize as ``c0*q^(e0) + ... + O(q^(prec))`` with exact rationals."""
        parts = [f"{c}*q^({Fraction(e, self.den)})" for e, c in sorted(self._terms.items())]
        parts.append(f"O(q^({self.prec}))" if self._sprec < _scale(INF_PREC, self.den)
                     else "O(q^oo)")
        return " + ".join(parts)

    def __repr__(self):
        shown = sorted(self._terms.items())[:6]
        body = " + ".join(f"{c}*q^{Fraction(e, self.den)}" for e, c in shown)
        if len(self._terms) > 6:
            body += " + ..."
        return f"FracSeries(N={self.level}, {body or '0'} + O(q^{self.prec}))"

    # -- helpers ----------------------------------------------------------

    def _coerce(self, other) -> "FracSeries":
        if isinstance(other, FracSeries):
            if other.level != self.level:
                raise LevelMismatchError(f"level mismatch: {self.level} vs {other.level}")
            return other
        if isinstance(other, (int, Fraction)):
            return FracSeries.monomial(self.level, Fraction(0), Fraction(other), den=self.den)
        raise TypeError(f"cannot combine FracSeries with {type(other).__name__}")


def _scale(e: Fraction, den: int) -> int:
    v = e * den
    if v.denominator != 1:
        raise ValueError(f"exponent {e} not on the 1/{den} lattice")
    return int(v)


def _common(a: FracSeries, b: FracSeries) -> tuple[FracSeries, FracSeries]:
    """Lift two series to a common lattice denominator."""
    if a.den == b.den:
        return a, b
    d = lcm(a.den, b.den)
    return a._relattice(d), b._relattice(d)


def _relattice(self: FracSeries, den: int) -> FracSeries:
    k = den // self.den
    return FracSeries._raw(self.level, den,
                           {e * k: c for e, c in self._terms.items()}, self._sprec * k)


FracSeries._relattice = _relattice  # type: ignore[attr-defined]


def prod(series: Iterable[FracSeries], one: FracSeries | None = None) -> FracSeries:
    acc = one
    for s in series:
        acc = s if acc is None else acc * s
    if acc is None:
        raise ValueError("empty product with no unit supplied")
    return acc
