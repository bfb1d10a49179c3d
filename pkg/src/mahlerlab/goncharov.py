"""The weight-2/3 modular complexes: U2, relation spaces, cocycle comparison.

Degree-2 chains are formal sums ``sum c * {u}_2 (x) g`` with ``u`` a
cross-ratio unit and ``g`` a Siegel-basis unit (:class:`Symbol2`).  The
differential sends ``{u}_2 (x) g`` to ``(1-u) ^ u ^ g`` in the third wedge
power of the unit group.  Cocycles are compared modulo

* antisymmetry relations (the symmetric group permuting cross-ratio
  parameters acts by the signature),
* five-term relations on cyclic parameter families,
* coboundaries ``{u}_2 (x) u``.

The membership engine (:func:`decompose`) reduces everything with exact
sparse elimination and can emit a replayable certificate.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from itertools import combinations, permutations
from typing import Hashable, Iterable, Mapping, Sequence

from .linalg import RowReducer, SparseVec, solve_in_span, vec_add, vec_scale
from .qexp import FracSeries
from .units import (DegenerateParametersError, UnitVector, class_mod_pm,
                    u1_exponents, u1_fricke_qexp_wp, u1_sign)

Symbol2 = dict[tuple[int, int], Fraction]     # (unit index, basis index) -> coeff
Wedge3 = dict[tuple[int, int, int], Fraction]  # i<j<k basis triple -> coeff

# the six coset representatives of the Klein four-group in S4, acting on the
# first three slots (position permutation, signature)
_S3_COSETS: tuple[tuple[tuple[int, int, int, int], int], ...] = (
    ((0, 1, 2, 3), 1),
    ((1, 0, 2, 3), -1),   # u -> 1/u
    ((0, 2, 1, 3), -1),   # u -> 1-u
    ((2, 1, 0, 3), -1),
    ((1, 2, 0, 3), 1),
    ((2, 0, 1, 3), 1),
)


@dataclass
class U2Element:
    index: int
    quad: tuple[int, int, int, int]       # representative parameters
    exps: tuple[tuple[int, int], ...]     # Siegel exponent vector (integral)
    sign: int

    def exps_dict(self) -> dict[int, int]:
        return dict(self.exps)


@dataclass
class U2Table:
    level: int
    elements: list[U2Element]
    by_key: dict[tuple, int]
    inv_of: list[int] = field(default_factory=list)
    one_minus_of: list[int] = field(default_factory=list)
    subset_orbits: list[tuple[tuple[int, ...], tuple[tuple[int, int], ...]]] = field(default_factory=list)
    # subset_orbits: (sorted subset, ((unit index, signature) for the 6 coset reps))
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __len__(self) -> int:
        return len(self.elements)

    def index_of_quad(self, quad: Sequence[int]) -> int:
        key = _unit_key(self.level, quad)
        return self.by_key[key]

    # lazy shared reducers (immutable once built)

    def r2_rows(self) -> list[tuple[tuple, SparseVec]]:
        if "rows" not in self._cache:
            self._cache["rows"] = relation_rows_unit_level(self)
        return self._cache["rows"]

    def r2_reduction(self, tracked: bool = False) -> RowReducer:
        key = ("r2", tracked)
        if key not in self._cache:
            red = RowReducer(track=tracked)
            for tag, row in self.r2_rows():
                red.add_row(row, tag=tag)
            self._cache[key] = red
        return self._cache[key]

    def phi(self, idx: int) -> SparseVec:
        """Image of the basis element [u_idx] in Q[U2]/R2 coordinates."""
        cache = self._cache.setdefault("phi", {})
        if idx not in cache:
            cache[idx] = self.r2_reduction().reduce({idx: Fraction(1)})
        return cache[idx]


def _unit_key(level: int, quad: Sequence[int]) -> tuple:
    return _unit_key_cached(level, tuple(class_mod_pm(x, level) for x in quad))


@lru_cache(maxsize=None)
def _unit_key_cached(level: int, quad: tuple[int, ...]) -> tuple:
    exps = tuple(sorted(u1_exponents(level, quad).items()))
    return (exps, u1_sign(level, quad))


def parameter_classes(level: int) -> list[int]:
    return list(range(level // 2 + 1))


@lru_cache(maxsize=8)
def u2_table(level: int) -> U2Table:
    """Shared immutable U2 table for a level (stability-validated)."""
    return build_U2(level)


def build_U2(level: int, validate_stability: bool = True) -> U2Table:
    """Enumerate U2 at a given level, deduplicated by (vector, sign).

    The sign comes from the exact Weierstrass-series expansion, so two
    parameter quadruples name the same element iff they define the same
    function.  Degenerate quadruples cannot occur (classes are distinct);
    the guard in :func:`u1_exponents` is kept for safety.
    """
    if level < 6:
        raise ValueError("U2 needs at least four parameter classes (level >= 6)")
    classes = parameter_classes(level)
    table = U2Table(level, [], {})
    for subset in combinations(classes, 4):
        orbit = []
        for pos, sgn in _S3_COSETS:
            quad = tuple(subset[p] for p in pos)
            try:
                key = _unit_key(level, quad)
            except DegenerateParametersError:
                continue
            idx = table.by_key.get(key)
            if idx is None:
                idx = len(table.elements)
                table.elements.append(U2Element(idx, quad, key[0], key[1]))
                table.by_key[key] = idx
            orbit.append((idx, sgn))
        table.subset_orbits.append((subset, tuple(orbit)))
    # resolve u -> 1/u and u -> 1-u on representatives
    for el in table.elements:
        a, b, c, d = el.quad
        table.inv_of.append(table.index_of_quad((b, a, c, d)))
        table.one_minus_of.append(table.index_of_quad((a, c, b, d)))
    if validate_stability:
        _validate_one_minus(table)
    return table


def _validate_one_minus(table: U2Table, prec: Fraction | None = None) -> None:
    """Check 1 - u(quad) = u(swapped quad) as exact q-expansions.

    Failure would falsify the stability of U2 under u -> 1-u at this level,
    so it aborts the build.
    """
    N = table.level
    prec = prec if prec is not None else Fraction(2 * N + 10)
    one = FracSeries.one(N)
    for el in table.elements:
        s = u1_fricke_qexp_wp(N, el.quad, prec)
        t = u1_fricke_qexp_wp(N, table.elements[table.one_minus_of[el.index]].quad, prec)
        if not (one - s).agrees_with(t):
            raise AssertionError(f"1 - u{el.quad} is not the expected element of U2")


# ---------------------------------------------------------------------------
# Symbols and the differential
# ---------------------------------------------------------------------------

def symbol(table: U2Table, entries: Iterable[tuple[Sequence[int], int, Fraction]]) -> Symbol2:
    """Build a Symbol2 from (parameter quadruple, basis index, coefficient)."""
    out: Symbol2 = {}
    for quad, a, c in entries:
        idx = table.index_of_quad(quad)
        k = (idx, a)
        v = out.get(k, Fraction(0)) + Fraction(c)
        if v:
            out[k] = v
        else:
            out.pop(k, None)
    return out


def symbol_tensor(table: U2Table, quad: Sequence[int], unit_exps: Mapping[int, int | Fraction],
                  coeff: Fraction = Fraction(1)) -> Symbol2:
    """{u(quad)}_2 (x) (product of basis units with the given exponents)."""
    idx = table.index_of_quad(quad)
    out: Symbol2 = {}
    for a, e in unit_exps.items():
        if e:
            out[(idx, a)] = coeff * Fraction(e)
    return out


def parametrisation_cocycle(table: U2Table) -> Symbol2:
    """The degree-2 cocycle induced by the Maillot-curve parametrisation.

    With x = -u(1,2,3,7) and y = -u(2,4,6,1) on the level-15 curve, the
    pullback of {-x}_2 (x) y - {-y}_2 (x) x is {u_x}_2 (x) vec(u_y) -
    {u_y}_2 (x) vec(u_x); signs are torsion and disappear in the tensor.
    """
    if table.level != 15:
        raise ValueError("the parametrisation cocycle lives at level 15")
    qx, qy = (1, 2, 3, 7), (2, 4, 6, 1)
    s = symbol_tensor(table, qx, u1_exponents(15, qy))
    return vec_add(s, symbol_tensor(table, qy, u1_exponents(15, qx)), Fraction(-1))


def wedge3_of(v1: Mapping[int, Fraction], v2: Mapping[int, Fraction],
              v3: Mapping[int, Fraction]) -> Wedge3:
    support = sorted(set(v1) | set(v2) | set(v3))
    out: Wedge3 = {}
    for i, j, k in combinations(support, 3):
        det = (_g(v1, i) * (_g(v2, j) * _g(v3, k) - _g(v2, k) * _g(v3, j))
               - _g(v1, j) * (_g(v2, i) * _g(v3, k) - _g(v2, k) * _g(v3, i))
               + _g(v1, k) * (_g(v2, i) * _g(v3, j) - _g(v2, j) * _g(v3, i)))
        if det:
            out[(i, j, k)] = det
    return out


def _g(v: Mapping[int, Fraction], k: int) -> Fraction:
    return v.get(k, Fraction(0))


def d2(table: U2Table, s: Symbol2) -> Wedge3:
    """Differential {u}_2 (x) g  ->  (1-u) ^ u ^ g, extended linearly."""
    out: Wedge3 = {}
    for (idx, a), c in s.items():
        u_vec = {b: Fraction(e) for b, e in table.elements[idx].exps}
        om_vec = {b: Fraction(e) for b, e in table.elements[table.one_minus_of[idx]].exps}
        w = wedge3_of(om_vec, u_vec, {a: Fraction(1)})
        out = vec_add(out, w, c)
    return out


# ---------------------------------------------------------------------------
# Relation rows
# ---------------------------------------------------------------------------

def antisym_rows(table: U2Table) -> list[tuple[tuple, SparseVec]]:
    """Rows [u_sigma] - sign(sigma) [u_id], one per non-identity coset rep."""
    rows = []
    for subset, orbit in table.subset_orbits:
        (i0, s0), rest = orbit[0], orbit[1:]
        assert s0 == 1
        for pos, (i, s) in enumerate(rest, start=1):
            row = vec_add({i: Fraction(1)}, {i0: Fraction(s)}, Fraction(-1))
            if row:
                rows.append((("antisym", subset, pos), row))
    return rows


def five_term_rows(table: U2Table) -> list[tuple[tuple, SparseVec]]:
    """One row per cyclic class of 5-tuples of distinct parameter classes."""
    classes = parameter_classes(table.level)
    rows = []
    seen = set()
    for tup in permutations(classes, 5):
        canon = min(tuple(tup[j:] + tup[:j]) for j in range(5))
        if canon in seen:
            continue
        seen.add(canon)
        row: SparseVec = {}
        for j in range(5):
            quad = tuple(canon[(j + t) % 5] for t in range(4))
            row = vec_add(row, {table.index_of_quad(quad): Fraction(1)})
        if row:
            rows.append((("five", canon), row))
    return rows


def relation_rows_unit_level(table: U2Table) -> list[tuple[tuple, SparseVec]]:
    return antisym_rows(table) + five_term_rows(table)


def r2_reducer(table: U2Table) -> RowReducer:
    return table.r2_reduction()


def dim_q_u2_mod_r2(table: U2Table) -> int:
    """dim Q[U2] / R2 (antisymmetry + five-term relations)."""
    return len(table) - table.r2_reduction().rank


def coboundary_symbol(table: U2Table, idx: int) -> Symbol2:
    """The coboundary {u}_2 (x) u."""
    return {(idx, a): Fraction(e) for a, e in table.elements[idx].exps if e}


# ---------------------------------------------------------------------------
# Membership and decomposition
# ---------------------------------------------------------------------------

@dataclass
class DecomposeResult:
    coefficients: dict[str, Fraction] | None   # candidate name -> lambda
    certificate: dict | None

    @property
    def in_span(self) -> bool:
        return self.coefficients is not None


def project_symbol(table: U2Table, s: Symbol2) -> SparseVec:
    """Push a Symbol2 through the unit-level quotient Q[U2]/R2, per basis index."""
    out: SparseVec = {}
    for (idx, a), c in s.items():
        for ufree, w in table.phi(idx).items():
            k = (ufree, a)
            v = out.get(k, Fraction(0)) + c * w
            if v:
                out[k] = v
            else:
                out.pop(k, None)
    return out


def _cob_reducer(table: U2Table, tracked: bool = False) -> RowReducer:
    key = ("cob", tracked)
    if key not in table._cache:
        red = RowReducer(track=tracked)
        for idx in range(len(table)):
            red.add_row(project_symbol(table, coboundary_symbol(table, idx)),
                        tag=("cobound", idx))
        table._cache[key] = red
    return table._cache[key]


def decompose(table: U2Table, target: Symbol2,
              candidates: dict[str, Symbol2],
              with_certificate: bool = False,
              max_dim: int = 2_000_000) -> DecomposeResult:
    """Express target as sum lambda_i candidate_i modulo R2 (x) U1 + Q.

    Returns exact rational coefficients, or ``coefficients=None`` when the
    target is not in the computed span (which is inconclusive about the
    actual cohomology; the relation spaces used here need not be complete).
    """
    n_cols = len(table) * (table.level // 2)
    if n_cols > max_dim:
        raise MemoryError(f"system dimension {n_cols} exceeds the configured cap {max_dim}")
    cob = _cob_reducer(table)
    gens = [(name, project_symbol(table, c)) for name, c in candidates.items()]
    t = project_symbol(table, target)
    sol = solve_in_span(t, gens, modulo=cob)
    if sol is None:
        return DecomposeResult(None, None)
    coeffs = {name: sol.get(name, Fraction(0)) for name in candidates}
    cert = None
    if with_certificate:
        cert = _build_certificate(table, target, candidates, coeffs)
    return DecomposeResult(coeffs, cert)


def _symbol_to_json(s: Symbol2) -> list:
    return [[int(i), int(a), str(c)] for (i, a), c in sorted(s.items())]


def _build_certificate(table: U2Table, target: Symbol2,
                       candidates: dict[str, Symbol2],
                       coeffs: dict[str, Fraction]) -> dict:
    """Replayable witness: residual = target - sum lambda c, written exactly
    as a combination of tagged relation rows in Q[U2] (x) U1 coordinates.

    Found in two small stages instead of one huge elimination: first the
    coboundary coefficients (solved in the R2-quotient), then one unit-level
    solve per basis index for what remains, which by construction lies in
    R2 (x) U1 block by block.
    """
    residual: SparseVec = dict(target)
    for name, lam in coeffs.items():
        residual = vec_add(residual, candidates[name], -lam)
    combination: list[tuple[tuple, Fraction]] = []
    # stage 1: coboundary part
    cob_t = _cob_reducer(table, tracked=True)
    nu = cob_t.explain(project_symbol(table, residual))
    if nu is None:
        raise ArithmeticError("certificate stage 1 failed; decompose/certificate mismatch")
    rest = dict(residual)
    for (tagname, idx), c in nu.items():
        assert tagname == "cobound"
        combination.append((("cobound", idx), c))
        rest = vec_add(rest, coboundary_symbol(table, idx), -c)
    # stage 2: per basis index, express in R2
    unit_red = table.r2_reduction(tracked=True)
    for a in range(1, table.level // 2 + 1):
        block = {idx: c for (idx, aa), c in rest.items() if aa == a}
        if not block:
            continue
        mu = unit_red.explain(block)
        if mu is None:
            raise ArithmeticError(f"certificate stage 2 failed at basis index {a}")
        for tag, c in mu.items():
            combination.append((tag + (a,), c))
    cert = {
        "level": table.level,
        "n_units": len(table),
        "lambda": {name: str(v) for name, v in coeffs.items()},
        "residual": _symbol_to_json(residual),
        "relation_combination":
            [[list(_jsonable(tag)), str(c)] for tag, c in
             sorted(combination, key=lambda t: repr(t[0]))],
    }
    return cert


def _jsonable(tag) -> tuple:
    return tuple(list(x) if isinstance(x, tuple) else x for x in tag)


def _full_relation_rows(table: U2Table) -> list[tuple[tuple, SparseVec]]:
    """All rows of R2 (x) U1 + Q in (unit, basis) coordinates."""
    rows: list[tuple[tuple, SparseVec]] = []
    basis = range(1, table.level // 2 + 1)
    for tag, row in relation_rows_unit_level(table):
        for a in basis:
            rows.append((tag + (a,), {(i, a): c for i, c in row.items()}))
    for idx in range(len(table)):
        rows.append((("cobound", idx), coboundary_symbol(table, idx)))
    return rows


def find_combination(target: SparseVec, rows: list[tuple[tuple, SparseVec]],
                     max_closure_rounds: int = 40) -> dict | None:
    """Express target as an exact combination of the given rows.

    Restricts to the support closure of the target first (rows touching the
    accumulated support), falling back to the full system if the closure
    solve fails.
    """
    if not target:
        return {}
    support = set(target)
    selected: dict[int, tuple[tuple, SparseVec]] = {}
    remaining = list(enumerate(rows))
    for _ in range(max_closure_rounds):
        grew = False
        still = []
        for i, (tag, row) in remaining:
            if any(k in support for k in row):
                selected[i] = (tag, row)
                if not support.issuperset(row):
                    support.update(row)
                    grew = True
            else:
                still.append((i, (tag, row)))
        remaining = still
        if not grew:
            break
    for subset in (selected.values(), rows):
        red = RowReducer(track=True)
        for tag, row in subset:
            red.add_row(row, tag=tag)
        combo = red.explain(target)
        if combo is not None:
            return combo
    return None


def verify_certificate(table: U2Table, target: Symbol2,
                       candidates: dict[str, Symbol2], cert: dict) -> bool:
    """Replay a decompose certificate without rerunning elimination.

    Recomputes residual = target - sum lambda_i c_i and checks that the
    certificate's tagged relation rows sum to it exactly.
    """
    if cert.get("level") != table.level or cert.get("relation_combination") is None:
        return False
    coeffs = {k: Fraction(v) for k, v in cert["lambda"].items()}
    residual: SparseVec = dict(target)
    for name, lam in coeffs.items():
        residual = vec_add(residual, candidates[name], -lam)
    if _symbol_to_json(residual) != [[i, a, c] for i, a, c in cert["residual"]]:
        return False
    unit_rows = {tag: row for tag, row in table.r2_rows()}
    acc: SparseVec = {}
    for tag_list, c in cert["relation_combination"]:
        tag = tuple(tuple(x) if isinstance(x, list) else x for x in tag_list)
        c = Fraction(c)
        if tag[0] == "cobound":
            acc = vec_add(acc, coboundary_symbol(table, tag[1]), c)
            continue
        base, a = tag[:-1], tag[-1]
        row = unit_rows.get(base)
        if row is None:
            return False
        acc = vec_add(acc, {(i, a): v for i, v in row.items()}, c)
    return acc == residual


# ---------------------------------------------------------------------------
# Bundled reference cocycles
# ---------------------------------------------------------------------------

def pair_cocycle_from_json(table: U2Table, payload: dict) -> Symbol2:
    """Load a Symbol2 from its JSON form [[quad, basis index, coeff], ...]."""
    out: Symbol2 = {}
    for quad, a, c in payload["terms"]:
        idx = table.index_of_quad(tuple(quad))
        k = (idx, int(a))
        v = out.get(k, Fraction(0)) + Fraction(c)
        if v:
            out[k] = v
        else:
            out.pop(k, None)
    return out


def load_pair_cocycle(table: U2Table, a: int, b: int, path=None) -> Symbol2:
    """Reference cocycle attached to the parameter pair (a, b), from data."""
    from .datafiles import data_path
    p = path if path is not None else data_path(f"pair_cocycles_{table.level}.json")
    with open(p) as fh:
        blob = json.load(fh)
    key = f"{a},{b}"
    if key not in blob:
        raise KeyError(f"no bundled cocycle for pair ({a},{b}) at level {table.level}")
    return pair_cocycle_from_json(table, blob[key])
