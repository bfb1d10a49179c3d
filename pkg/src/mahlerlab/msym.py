"""Manin symbols and homology for Gamma1(N).

Symbols are labelled by pairs (c, d) mod N with gcd(c, d, N) = 1, modulo
+-1; the quotient by the two- and three-term relations is the relative
homology H1(X1(N), cusps; Q).  The boundary map lands in divisors on cusp
classes, Hecke operators act through Heilbronn families, and complex
conjugation through (c, d) -> (-c, d).  The Manin-Drinfeld projection of
{0, oo} is realized as an exact Hecke projector built from minimal
polynomials of T_p (see :func:`manin_drinfeld_project`).
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import gcd
from typing import Callable, Iterable, Mapping, Sequence

from .linalg import RowReducer, SparseVec, vec_add, vec_scale
from .units import CuspRep, cusp_class

Label = tuple[int, int]


def _canon_label(level: int, c: int, d: int) -> Label:
    c %= level
    d %= level
    return min((c, d), ((-c) % level, (-d) % level))


@dataclass
class ManinSpace:
    """Presentation of H1(X1(N), cusps; Q) by Manin symbols.

    ``labels`` lists the (c, d) symbols; ``reduced`` maps each label to its
    coordinates over the free quotient basis ``basis`` (itself a subset of
    the labels).
    """
    level: int
    labels: list[Label]
    basis: list[Label]
    reduced: dict[Label, SparseVec]

    @property
    def dimension(self) -> int:
        return len(self.basis)

    def symbol(self, c: int, d: int) -> SparseVec:
        lab = _canon_label(self.level, c, d)
        if lab not in self.reduced:
            raise KeyError(f"({c},{d}) is not a Manin symbol at level {self.level}")
        return dict(self.reduced[lab])

    def zero_to_infinity(self) -> SparseVec:
        """The relative class {0, oo} (the identity-coset symbol)."""
        return self.symbol(0, 1)

    def vector(self, combo: Iterable[tuple[int, Sequence[Sequence[int]]]]) -> SparseVec:
        """Reduce an integer combination [(coeff, ((a,b),(c,d))), ...]."""
        out: SparseVec = {}
        for coeff, mat in combo:
            (_a, _b), (c, d) = mat
            out = vec_add(out, self.symbol(c, d), Fraction(coeff))
        return out


@lru_cache(maxsize=16)
def manin_space(level: int) -> ManinSpace:
    """Build the Manin-symbol presentation at a given level."""
    labels_set = set()
    for c in range(level):
        for d in range(level):
            if gcd(gcd(c, d), level) == 1:
                labels_set.add(_canon_label(level, c, d))
    labels = sorted(labels_set) if level > 1 else [(0, 0)]

    def act(lab: Label, m: tuple[int, int, int, int]) -> Label:
        c, d = lab
        return _canon_label(level, c * m[0] + d * m[2], c * m[1] + d * m[3])

    S = (0, -1, 1, 0)
    TS = (1, -1, 1, 0)    # (c, d) -> (c+d, -c)
    red = RowReducer()
    seen = set()
    for lab in labels:
        two = vec_add({lab: Fraction(1)}, {act(lab, S): Fraction(1)})
        t1 = act(lab, TS)
        t2 = act(t1, TS)
        three = vec_add(vec_add({lab: Fraction(1)}, {t1: Fraction(1)}),
                        {t2: Fraction(1)})
        for r in (two, three):
            key = tuple(sorted((k, v) for k, v in r.items()))
            if key not in seen:
                seen.add(key)
                red.add_row(r)
    pivots = set(red.pivots)
    basis = [lab for lab in labels if lab not in pivots]
    reduced = {lab: red.reduce({lab: Fraction(1)}) for lab in labels}
    return ManinSpace(level, labels, basis, reduced)


# ---------------------------------------------------------------------------
# Boundary, star involution, kernel
# ---------------------------------------------------------------------------

def boundary(space: ManinSpace, v: Mapping[Label, Fraction]) -> dict[CuspRep, Fraction]:
    """delta [g] = [g oo] - [g 0] on cusp classes; H1 = ker delta."""
    out: dict[CuspRep, Fraction] = {}
    for (c, d), coeff in v.items():
        if not coeff:
            continue
        plus = cusp_class(space.level, c, d)
        minus = cusp_class(space.level, d, -c)
        for cusp, s in ((plus, coeff), (minus, -coeff)):
            val = out.get(cusp, Fraction(0)) + s
            if val:
                out[cusp] = val
            else:
                out.pop(cusp, None)
    return out


def to_basis(space: ManinSpace, v: Mapping[Label, Fraction]) -> SparseVec:
    out: SparseVec = {}
    for lab, c in v.items():
        out = vec_add(out, space.reduced[_canon_label(space.level, *lab)], c)
    return out


def star_involution(space: ManinSpace, v: Mapping[Label, Fraction]) -> SparseVec:
    """Complex conjugation: (c, d) -> (-c, d), in basis coordinates."""
    out: SparseVec = {}
    for (c, d), coeff in v.items():
        lab = _canon_label(space.level, -c, d)
        out = vec_add(out, space.reduced[lab], coeff)
    return out


def kernel_of_boundary(space: ManinSpace) -> list[SparseVec]:
    """Basis of ker(delta) in basis coordinates (dimension 2 * genus)."""
    # augmented elimination: rows carry their boundary image (columns that
    # sort first, so they are eliminated first) plus a marker over basis
    # labels; pivot rows with no image part encode kernel combinations.
    red = RowReducer()
    for lab in space.basis:
        img = boundary(space, {lab: Fraction(1)})
        row: SparseVec = {("a_cusp", c.c, c.d): v for c, v in img.items()}
        row[("z_lab", lab)] = Fraction(1)
        red.add_row(row)
    kernel = []
    for piv, row in red.pivots.items():
        if piv[0] == "z_lab" and all(k[0] == "z_lab" for k in row):
            kernel.append({k[1]: v for k, v in row.items()})
    return kernel


def star_fixed_subspace(space: ManinSpace, vectors: list[SparseVec]) -> list[SparseVec]:
    """Basis of the star-fixed part of the span of the given vectors."""
    red = RowReducer()
    for i, v in enumerate(vectors):
        w = vec_add(star_involution(space, v), v, Fraction(-1))
        row: SparseVec = {("a_img", k): val for k, val in w.items()}
        row[("z_vec", i)] = Fraction(1)
        red.add_row(row)
    fixed = []
    for piv, row in red.pivots.items():
        if piv[0] == "z_vec" and all(k[0] == "z_vec" for k in row):
            combo: SparseVec = {}
            for (_, i), c in row.items():
                combo = vec_add(combo, vectors[i], c)
            fixed.append(combo)
    return fixed


# ---------------------------------------------------------------------------
# Heilbronn matrices and Hecke operators
# ---------------------------------------------------------------------------

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


@lru_cache(maxsize=None)
def heilbronn_merel(p: int) -> tuple[tuple[int, int, int, int], ...]:
    """Merel's family {(a,b;c,d): det = p, a > b >= 0, d > c >= 0}.

    Brute enumeration; fine for small p, used as an independent cross-check
    of the production family.
    """
    out = []
    for a in range(1, p + 1):
        for b in range(a):
            for c in range(p + 1):
                val = p + b * c
                if val % a:
                    continue
                d = val // a
                if d > c:
                    out.append((a, b, c, d))
    return tuple(out)


def hecke_tp_heilbronn(space: ManinSpace, p: int, v: Mapping[Label, Fraction],
                       family: Callable[[int], tuple] = heilbronn_merel) -> SparseVec:
    """T_p via a Heilbronn family acting on labels (cross-check path).

    Terms whose image label fails gcd(c, d, N) = 1 are dropped.
    """
    N = space.level
    if not _is_prime(p):
        raise ValueError(f"{p} is not prime")
    if N % p == 0:
        raise ValueError(f"p = {p} divides the level {N}")
    mats = family(p)
    out: SparseVec = {}
    for (c, d), coeff in v.items():
        if not coeff:
            continue
        for (a, b, cc, dd) in mats:
            c2 = (c * a + d * cc) % N
            d2 = (c * b + d * dd) % N
            if gcd(gcd(c2, d2), N) != 1:
                continue
            out = vec_add(out, space.reduced[_canon_label(N, c2, d2)], coeff)
    return out


# --- production Hecke: p+1 cosets plus diamond, expanded by Manin's trick ---

def _coprime_lift(level: int, c: int, d: int) -> tuple[int, int]:
    """Lift (c, d) mod N with gcd(c, d, N) = 1 to a coprime integer pair."""
    c %= level
    d %= level
    if c == 0:
        c = level
    t = 0
    while gcd(c, d + t * level) != 1:
        t += 1
        if t > c:
            raise ArithmeticError(f"no coprime lift for ({c},{d}) mod {level}")
    return c, d + t * level


def _complete_sl2(c: int, d: int) -> tuple[int, int, int, int]:
    """Some (a, b; c, d) in SL2(Z) with the given coprime bottom row."""
    g, x, y = _xgcd(d, -c)
    assert g == 1
    return x, y, c, d


def _xgcd(a: int, b: int) -> tuple[int, int, int]:
    if b == 0:
        return (a, 1, 0) if a >= 0 else (-a, -1, 0)
    g, x, y = _xgcd(b, a % b)
    return g, y, x - (a // b) * y


@lru_cache(maxsize=None)
def _diamond_coset(level: int, p: int) -> tuple[int, int, int, int]:
    """gamma_p * diag(p, 1) with gamma_p in SL2(Z), gamma_p = diag(1/p, p) mod N."""
    pbar = pow(p, -1, level)
    k = (pbar * p - 1) // level
    a = (-k * pbar) % level
    m = (k + a * p) // level
    gamma = (pbar + a * level, m * level, level, p)
    assert gamma[0] * gamma[3] - gamma[1] * gamma[2] == 1
    return (gamma[0] * p, gamma[1], gamma[2] * p, gamma[3])


def _path_from_infinity(num: int, den: int, acc: dict[Label, Fraction],
                        coeff: Fraction, level: int) -> None:
    """Accumulate the unimodular-path expansion of {oo, num/den} on labels.

    Continued-fraction convergents p_k/q_k of num/den; each consecutive pair
    is a Manin symbol with bottom row (q_k, +-q_{k-1}).
    """
    if den == 0:
        return
    if den < 0:
        num, den = -num, -den
    pm1, qm1 = 1, 0          # convergent -1 is oo
    pk, qk = None, None
    a, b = num, den
    quotients = []
    while b:
        q, r = divmod(a, b)
        quotients.append(q)
        a, b = b, r
    pprev, qprev = 1, 0
    pcur, qcur = quotients[0], 1
    _acc_label(acc, coeff, (qcur, qprev), 0, level)
    for k in range(1, len(quotients)):
        pnxt = quotients[k] * pcur + pprev
        qnxt = quotients[k] * qcur + qprev
        pprev, qprev, pcur, qcur = pcur, qcur, pnxt, qnxt
        _acc_label(acc, coeff, (qcur, qprev), k, level)


def _acc_label(acc: dict[Label, Fraction], coeff: Fraction,
               bottom: tuple[int, int], k: int, level: int) -> None:
    qk, qk1 = bottom
    # det fix: (p_k p_{k-1}; q_k q_{k-1}) has det (-1)^{k-1}; negate the
    # second column for even k
    d = qk1 if k % 2 == 1 else -qk1
    lab = _canon_label(level, qk, d)
    v = acc.get(lab, Fraction(0)) + coeff
    if v:
        acc[lab] = v
    else:
        acc.pop(lab, None)


def hecke_tp(space: ManinSpace, p: int, v: Mapping[Label, Fraction]) -> SparseVec:
    """T_p in basis coordinates (p prime, coprime to the level).

    Uses the p+1 degeneracy cosets (1 r; 0 p) plus the diamond-twisted
    coset, with modular-symbol endpoints expanded into Manin symbols by
    continued fractions.  Definitionally correct for Gamma1(N); validated
    against the Merel-family action and point-counted eigenvalues.
    """
    N = space.level
    if not _is_prime(p):
        raise ValueError(f"{p} is not prime")
    if N % p == 0:
        raise ValueError(f"p = {p} divides the level {N}")
    cosets = [(1, r, 0, p) for r in range(p)] + [_diamond_coset(N, p)]
    acc: dict[Label, Fraction] = {}
    for (c, d), coeff in v.items():
        if not coeff:
            continue
        c0, d0 = _coprime_lift(N, c, d)
        a0, b0, _, _ = _complete_sl2(c0, d0)
        # g sends 0 -> b0/d0 and oo -> a0/c0
        for (ma, mb, mc, md) in cosets:
            x_num, x_den = ma * b0 + mb * d0, mc * b0 + md * d0
            y_num, y_den = ma * a0 + mb * c0, mc * a0 + md * c0
            _path_from_infinity(y_num, y_den, acc, coeff, N)
            _path_from_infinity(x_num, x_den, acc, -coeff, N)
    out: SparseVec = {}
    for lab, coeff in acc.items():
        out = vec_add(out, space.reduced[lab], coeff)
    return out


@lru_cache(maxsize=64)
def _hecke_columns_cached(level: int, p: int) -> dict[Label, SparseVec]:
    space = manin_space(level)
    return {lab: hecke_tp(space, p, {lab: Fraction(1)}) for lab in space.basis}


def hecke_matrix(space: ManinSpace, p: int) -> dict[Label, SparseVec]:
    """Columns of T_p over the quotient basis."""
    return _hecke_columns_cached(space.level, p)


# ---------------------------------------------------------------------------
# Integral structure and the plus generator
# ---------------------------------------------------------------------------

def _hnf(rows: list[list[int]]) -> list[list[int]]:
    """Row-style Hermite normal form with positive pivots."""
    rows = [r[:] for r in rows if any(r)]
    if not rows:
        return []
    ncols = len(rows[0])
    out: list[list[int]] = []
    col = 0
    while rows and col < ncols:
        work = [r for r in rows if r[col]]
        rest = [r for r in rows if not r[col]]
        if not work:
            col += 1
            continue
        while len(work) > 1:
            work.sort(key=lambda r: abs(r[col]))
            piv = work[0]
            new_work = [piv]
            for r in work[1:]:
                q = r[col] // piv[col]
                r2 = [x - q * y for x, y in zip(r, piv)]
                if r2[col]:
                    new_work.append(r2)
                elif any(r2):
                    rest.append(r2)
            work = new_work
        piv = work[0]
        if piv[col] < 0:
            piv = [-x for x in piv]
        out.append(piv)
        rows = rest
        col += 1
    for i in reversed(range(len(out))):
        pcol = next(j for j in range(ncols) if out[i][j])
        for k in range(i):
            q = out[k][pcol] // out[i][pcol]
            if q:
                out[k] = [x - q * y for x, y in zip(out[k], out[i])]
    return out


def symbol_lattice(space: ManinSpace) -> list[list[Fraction]]:
    """HNF basis of the lattice generated by the Manin symbols."""
    den = 1
    for lab in space.labels:
        for c in space.reduced[lab].values():
            den = den * c.denominator // gcd(den, c.denominator)
    rows = [[int(space.reduced[lab].get(b, Fraction(0)) * den) for b in space.basis]
            for lab in space.labels]
    return [[Fraction(x, den) for x in r] for r in _hnf(rows)]


def lattice_coordinates(space: ManinSpace, lattice: list[list[Fraction]],
                        v: Mapping[Label, Fraction]) -> list[Fraction]:
    """Exact coordinates of v over the HNF lattice basis."""
    work = [Fraction(v.get(lab, Fraction(0))) for lab in space.basis]
    coords = []
    for row in lattice:
        pcol = next((j for j, x in enumerate(row) if x), None)
        if pcol is None:
            coords.append(Fraction(0))
            continue
        c = work[pcol] / row[pcol]
        coords.append(c)
        if c:
            work = [w - c * r for w, r in zip(work, row)]
    if any(work):
        raise ArithmeticError("vector outside the span of the symbol lattice")
    return coords


def is_lattice_primitive(space: ManinSpace, v: SparseVec) -> bool:
    """True when v is in the symbol lattice and no proper divisor of it is."""
    try:
        coords = lattice_coordinates(space, symbol_lattice(space), v)
    except ArithmeticError:
        return False
    if any(c.denominator != 1 for c in coords):
        return False
    g = 0
    for c in coords:
        g = gcd(g, abs(int(c)))
    return g == 1


def plus_generator(space: ManinSpace) -> SparseVec:
    """Primitive integral generator of H1(X1(N), Z)^+, up to sign.

    Requires the star-fixed part of ker(boundary) to have rank 1 (the
    genus-one situation); raises otherwise.
    """
    fixed = star_fixed_subspace(space, kernel_of_boundary(space))
    if len(fixed) != 1:
        raise ArithmeticError(
            f"star-fixed kernel has rank {len(fixed)} at level {space.level}; expected 1")
    gen = fixed[0]
    coords = lattice_coordinates(space, symbol_lattice(space), gen)
    den = 1
    for c in coords:
        den = den * c.denominator // gcd(den, c.denominator)
    content = 0
    for c in coords:
        content = gcd(content, abs(int(c * den)))
    return vec_scale(gen, Fraction(den, content))


# ---------------------------------------------------------------------------
# Exact polynomial helpers for the Hecke projector
# ---------------------------------------------------------------------------

def _synth_div(poly: list[Fraction], a: Fraction) -> tuple[list[Fraction], Fraction]:
    """poly = (x - a) * quotient + remainder."""
    n = len(poly) - 1
    q = [Fraction(0)] * n
    carry = poly[n]
    for i in range(n - 1, -1, -1):
        q[i] = carry
        carry = poly[i] + a * carry
    return q, carry


def _poly_mul(a: Sequence[Fraction], b: Sequence[Fraction]) -> list[Fraction]:
    out = [Fraction(0)] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                if y:
                    out[i + j] += x * y
    return out


def minimal_polynomial(columns: dict[Label, SparseVec], basis: list[Label]) -> list[Fraction]:
    """Monic minimal polynomial of the operator given by its columns."""
    idx = {lab: i for i, lab in enumerate(basis)}
    n = len(basis)
    red = RowReducer(track=True)
    cur: dict[tuple[int, int], Fraction] = {(i, i): Fraction(1) for i in range(n)}
    red.add_row(dict(cur), tag=0)
    k = 0
    while True:
        k += 1
        nxt: dict[tuple[int, int], Fraction] = {}
        for (i, j), c in cur.items():
            for lab, w in columns[basis[i]].items():
                key = (idx[lab], j)
                v = nxt.get(key, Fraction(0)) + c * w
                if v:
                    nxt[key] = v
                else:
                    nxt.pop(key, None)
        if not red.add_row(dict(nxt), tag=k):
            combo = red.explain(nxt)
            assert combo is not None
            poly = [Fraction(0)] * (k + 1)
            poly[k] = Fraction(1)
            for deg, c in combo.items():
                poly[deg] -= c
            return poly
        cur = nxt


def hecke_projector_poly(minpoly: list[Fraction], eigenvalue: Fraction) -> list[Fraction]:
    """q(x) with q = 1 on the generalized eigenspace of ``eigenvalue``, 0 on
    the complementary invariant subspace.

    Write minpoly = (x-a)^e h, h(a) != 0; then q = h * (h^{-1} mod (x-a)^e).
    """
    a = Fraction(eigenvalue)
    h = list(minpoly)
    e = 0
    while True:
        q, rem = _synth_div(h, a)
        if rem != 0:
            break
        h = q
        e += 1
    if e == 0:
        raise ArithmeticError(f"{eigenvalue} is not an eigenvalue")
    # Taylor coefficients of h at a (first e of them) by repeated division
    taylor = []
    cur = list(h)
    for _ in range(e):
        if len(cur) == 1:
            taylor.append(cur[0])
            cur = [Fraction(0)]
            continue
        cur, rem = _synth_div(cur, a)
        taylor.append(rem)
    inv = [Fraction(0)] * e
    inv[0] = 1 / taylor[0]
    for k in range(1, e):
        acc = sum((taylor[i] * inv[k - i] for i in range(1, k + 1)), Fraction(0))
        inv[k] = -acc / taylor[0]
    s = [Fraction(0)]
    pow_xa: list[Fraction] = [Fraction(1)]
    for k in range(e):
        if len(s) < len(pow_xa):
            s = s + [Fraction(0)] * (len(pow_xa) - len(s))
        for i, c in enumerate(pow_xa):
            s[i] += inv[k] * c
        pow_xa = _poly_mul(pow_xa, [-a, Fraction(1)])
    return _poly_mul(h, s)


def apply_operator(columns: dict[Label, SparseVec], v: SparseVec) -> SparseVec:
    out: SparseVec = {}
    for lab, c in v.items():
        out = vec_add(out, columns[lab], c)
    return out


def apply_poly(poly: Sequence[Fraction], columns: dict[Label, SparseVec],
               v: SparseVec) -> SparseVec:
    """Evaluate poly(T) v by Horner's rule."""
    out: SparseVec = vec_scale(v, poly[-1])
    for c in reversed(poly[:-1]):
        out = apply_operator(columns, out)
        if c:
            out = vec_add(out, v, c)
    return out


def manin_drinfeld_project(space: ManinSpace, v: Mapping[Label, Fraction] | None = None,
                           primes: Sequence[int] = (7,),
                           ap_of: Callable[[int], int] | None = None,
                           eigenvalues: Sequence[int] | None = None) -> SparseVec:
    """Hecke-equivariant projection of relative homology into H1(X, Q).

    Defaults to projecting {0, oo}.  For each prime p, the exact projector
    onto the generalized a_p-eigenspace of T_p is applied; the composition
    must land in ker(boundary) (verified; raise if the chosen primes do not
    separate the cuspidal eigensystem from the boundary ones).
    """
    if v is None:
        v = space.zero_to_infinity()
    if eigenvalues is None and ap_of is None:
        raise ValueError("need eigenvalues or ap_of to fix the cuspidal eigensystem")
    out = to_basis(space, v)
    for i, p in enumerate(primes):
        cols = hecke_matrix(space, p)
        ap = Fraction(eigenvalues[i]) if eigenvalues is not None else Fraction(ap_of(p))
        mp = minimal_polynomial(cols, space.basis)
        qpoly = hecke_projector_poly(mp, ap)
        out = apply_poly(qpoly, cols, out)
    if boundary(space, out):
        raise ArithmeticError(
            "projector image not in ker(boundary); the chosen primes do not "
            "separate the cuspidal eigensystem (add more primes)")
    return out
