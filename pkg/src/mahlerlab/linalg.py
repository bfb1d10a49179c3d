"""Sparse exact linear algebra over Q.

A :class:`RowReducer` maintains a triangular set of sparse rows (one pivot
per column) and reduces incoming vectors against it.  Everything is exact
``Fraction`` arithmetic; there is no pivoting for numerical stability, only
a mild sparsity heuristic for pivot choice.  Optionally each pivot row can
carry its provenance as a combination of the inserted rows, which is what
membership certificates are built from.
"""
from __future__ import annotations

from fractions import Fraction
from typing import Hashable, Iterable, Mapping

SparseVec = dict[Hashable, Fraction]


def vec_add(a: SparseVec, b: SparseVec, scale: Fraction = Fraction(1)) -> SparseVec:
    out = dict(a)
    for k, v in b.items():
        s = out.get(k, Fraction(0)) + scale * v
        if s:
            out[k] = s
        else:
            out.pop(k, None)
    return out


def vec_scale(a: SparseVec, scale: Fraction) -> SparseVec:
    if not scale:
        return {}
    return {k: scale * v for k, v in a.items()}


class RowReducer:
    """Incremental triangular set over Q with optional provenance tracking."""

    def __init__(self, track: bool = False):
        self.pivots: dict[Hashable, SparseVec] = {}
        self.track = track
        self.provenance: dict[Hashable, SparseVec] = {}
        self.n_rows = 0

    @property
    def rank(self) -> int:
        return len(self.pivots)

    def reduce(self, row: Mapping[Hashable, Fraction]) -> SparseVec:
        """Fully reduce a vector against the current pivots."""
        r, _ = self._reduce_tracked(row)
        return r

    def _reduce_tracked(self, row: Mapping[Hashable, Fraction]) -> tuple[SparseVec, SparseVec]:
        r: SparseVec = {k: Fraction(v) for k, v in row.items() if v}
        comb: SparseVec = {}
        while True:
            hit = None
            for k in r:
                if k in self.pivots:
                    hit = k
                    break
            if hit is None:
                return r, comb
            c = r[hit]
            r = vec_add(r, self.pivots[hit], -c)
            if self.track:
                comb = vec_add(comb, self.provenance[hit], -c)

    def add_row(self, row: Mapping[Hashable, Fraction], tag: Hashable | None = None) -> bool:
        """Insert a row; returns True if it increased the rank."""
        rid = tag if tag is not None else ("row", self.n_rows)
        self.n_rows += 1
        r, comb = self._reduce_tracked(row)
        if not r:
            return False
        # pivot on the entry whose column is cheapest to keep sparse:
        # prefer columns not appearing in other pivot rows
        piv = min(r, key=lambda k: (self._col_weight(k), _key_order(k)))
        c = r[piv]
        r = vec_scale(r, 1 / c)
        self.pivots[piv] = r
        if self.track:
            comb = vec_add(comb, {rid: Fraction(1)})
            self.provenance[piv] = vec_scale(comb, 1 / c)
        return True

    def _col_weight(self, k: Hashable) -> int:
        return 0  # placeholder heuristic; min over key order is deterministic

    def contains(self, row: Mapping[Hashable, Fraction]) -> bool:
        return not self.reduce(row)

    def explain(self, row: Mapping[Hashable, Fraction]) -> SparseVec | None:
        """Express ``row`` as a combination of inserted rows, if in the span.

        Requires ``track=True``; returns {row_tag: coefficient} with
        ``row == sum coeff * inserted_row`` exactly, else None.
        """
        if not self.track:
            raise RuntimeError("reducer built without provenance tracking")
        r, comb = self._reduce_tracked(row)
        if r:
            return None
        return vec_scale(comb, Fraction(-1))


def _key_order(k: Hashable):
    return repr(k)


def rank_of_rows(rows: Iterable[Mapping[Hashable, Fraction]]) -> int:
    red = RowReducer()
    for r in rows:
        red.add_row(r)
    return red.rank


def solve_in_span(target: Mapping[Hashable, Fraction],
                  generators: list[tuple[Hashable, Mapping[Hashable, Fraction]]],
                  modulo: RowReducer | None = None) -> SparseVec | None:
    """Solve target = sum_i x_i gen_i (modulo an optional reducer's span).

    Returns {generator_tag: x_i} or None when the target is not in the span.
    """
    red = RowReducer(track=True)
    for tag, g in generators:
        gg = modulo.reduce(g) if modulo is not None else g
        red.add_row(gg, tag=tag)
    t = modulo.reduce(target) if modulo is not None else target
    combo = red.explain(t)
    if combo is None:
        return None
    return {tag: c for tag, c in combo.items()}
