"""Exact linear algebra over the rationals.

Matrices are stored sparsely with ``fractions.Fraction`` entries (always in
lowest terms, positive denominator, arbitrary-precision integers underneath).
Rank and kernel come from Gauss-Jordan elimination done entirely in exact
arithmetic; matrices with fewer than ``DENSE_COLUMN_LIMIT`` columns run on
dense row lists, wider ones on sparse row dicts.

Everything here is pure and immutable-by-convention, so callers may evaluate
many blocks concurrently.
"""

from __future__ import annotations

from fractions import Fraction

# Rational coefficients for the whole package.
Rational = Fraction

# Below this column count elimination switches to dense rows.
DENSE_COLUMN_LIMIT = 64


class ShapeMismatch(ValueError):
    """Matrix dimensions do not line up."""


class CompositionNonzero(ValueError):
    """Two maps that should compose to zero do not."""


def _frac(x) -> Fraction:
    return x if isinstance(x, Fraction) else Fraction(x)


class RationalMatrix:
    """A rows-by-cols matrix over Q acting on column vectors.

    Only nonzero entries are stored, keyed ``(row, col)``.
    """

    __slots__ = ("rows", "cols", "entries")

    def __init__(self, rows: int, cols: int, entries=None):
        if rows < 0 or cols < 0:
            raise ShapeMismatch(f"negative shape ({rows}, {cols})")
        self.rows = rows
        self.cols = cols
        self.entries: dict[tuple[int, int], Fraction] = {}
        if entries:
            for (r, c), v in entries.items():
                if not (0 <= r < rows and 0 <= c < cols):
                    raise ShapeMismatch(f"entry ({r}, {c}) outside {rows}x{cols}")
                v = _frac(v)
                if v:
                    self.entries[(r, c)] = v

    @classmethod
    def zero(cls, rows: int, cols: int) -> "RationalMatrix":
        return cls(rows, cols)

    @classmethod
    def identity(cls, n: int) -> "RationalMatrix":
        return cls(n, n, {(i, i): Fraction(1) for i in range(n)})

    @classmethod
    def from_rows(cls, rows_list) -> "RationalMatrix":
        rows = len(rows_list)
        cols = len(rows_list[0]) if rows else 0
        entries = {}
        for r, row in enumerate(rows_list):
            if len(row) != cols:
                raise ShapeMismatch("ragged rows")
            for c, v in enumerate(row):
                v = _frac(v)
                if v:
                    entries[(r, c)] = v
        return cls(rows, cols, entries)

    def entry(self, r: int, c: int) -> Fraction:
        return self.entries.get((r, c), Fraction(0))

    def row_dicts(self) -> list[dict[int, Fraction]]:
        out = [dict() for _ in range(self.rows)]
        for (r, c), v in self.entries.items():
            out[r][c] = v
        return out

    def to_dense(self) -> list[list[Fraction]]:
        out = [[Fraction(0)] * self.cols for _ in range(self.rows)]
        for (r, c), v in self.entries.items():
            out[r][c] = v
        return out

    def transpose(self) -> "RationalMatrix":
        return RationalMatrix(
            self.cols, self.rows, {(c, r): v for (r, c), v in self.entries.items()}
        )

    def is_zero(self) -> bool:
        return not self.entries

    def __matmul__(self, other: "RationalMatrix") -> "RationalMatrix":
        if self.cols != other.rows:
            raise ShapeMismatch(
                f"cannot multiply {self.rows}x{self.cols} by {other.rows}x{other.cols}"
            )
        other_rows = other.row_dicts()
        acc: dict[tuple[int, int], Fraction] = {}
        for (r, k), v in self.entries.items():
            for c, w in other_rows[k].items():
                key = (r, c)
                s = acc.get(key, Fraction(0)) + v * w
                if s:
                    acc[key] = s
                else:
                    acc.pop(key, None)
        return RationalMatrix(self.rows, other.cols, acc)

    def apply(self, vec: dict[int, Fraction]) -> dict[int, Fraction]:
        """Matrix times sparse column vector (keys are column indices)."""
        acc: dict[int, Fraction] = {}
        for (r, c), v in self.entries.items():
            x = vec.get(c)
            if x:
                s = acc.get(r, Fraction(0)) + v * x
                if s:
                    acc[r] = s
                else:
                    acc.pop(r, None)
        return acc

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, RationalMatrix)
            and self.rows == other.rows
            and self.cols == other.cols
            and self.entries == other.entries
        )

    def __repr__(self) -> str:
        return f"RationalMatrix({self.rows}x{self.cols}, {len(self.entries)} nonzero)"


def _pivot_weight(x: Fraction) -> int:
    # Bit length of the entry; picking the lightest pivot keeps coefficient
    # growth in check.  Any choice would be correct.
    return x.numerator.bit_length() + x.denominator.bit_length()


def _rref_sparse(rows, ncols, trows):
    n = len(rows)
    pivots = []
    r = 0
    for c in range(ncols):
        best = -1
        best_w = None
        for ri in range(r, n):
            v = rows[ri].get(c)
            if v:
                w = _pivot_weight(v)
                if best_w is None or w < best_w:
                    best, best_w = ri, w
        if best < 0:
            continue
        rows[r], rows[best] = rows[best], rows[r]
        if trows is not None:
            trows[r], trows[best] = trows[best], trows[r]
        pv = rows[r][c]
        if pv != 1:
            inv = 1 / pv
            rows[r] = {k: v * inv for k, v in rows[r].items()}
            if trows is not None:
                trows[r] = {k: v * inv for k, v in trows[r].items()}
        prow = rows[r]
        ptrow = trows[r] if trows is not None else None
        for ri in range(n):
            if ri == r:
                continue
            f = rows[ri].get(c)
            if not f:
                continue
            row = rows[ri]
            for k, v in prow.items():
                s = row.get(k, Fraction(0)) - f * v
                if s:
                    row[k] = s
                else:
                    row.pop(k, None)
            if trows is not None:
                trow = trows[ri]
                for k, v in ptrow.items():
                    s = trow.get(k, Fraction(0)) - f * v
                    if s:
                        trow[k] = s
                    else:
                        trow.pop(k, None)
        pivots.append(c)
        r += 1
        if r == n:
            break
    return pivots


def _rref_dense(rows, ncols, trows):
    n = len(rows)
    pivots = []
    r = 0
    for c in range(ncols):
        best = -1
        best_w = None
        for ri in range(r, n):
            v = rows[ri][c]
            if v:
                w = _pivot_weight(v)
                if best_w is None or w < best_w:
                    best, best_w = ri, w
        if best < 0:
            continue
        rows[r], rows[best] = rows[best], rows[r]
        if trows is not None:
            trows[r], trows[best] = trows[best], trows[r]
        pv = rows[r][c]
        if pv != 1:
            inv = 1 / pv
            rows[r] = [v * inv for v in rows[r]]
            if trows is not None:
                trows[r] = {k: v * inv for k, v in trows[r].items()}
        prow = rows[r]
        ptrow = trows[r] if trows is not None else None
        for ri in range(n):
            if ri == r:
                continue
            f = rows[ri][c]
            if not f:
                continue
            row = rows[ri]
            for k in range(c, ncols):
                if prow[k]:
                    row[k] -= f * prow[k]
            if trows is not None:
                trow = trows[ri]
                for k, v in ptrow.items():
                    s = trow.get(k, Fraction(0)) - f * v
                    if s:
                        trow[k] = s
                    else:
                        trow.pop(k, None)
        pivots.append(c)
        r += 1
        if r == n:
            break
    return pivots


def rref(m: RationalMatrix, with_transform: bool = False):
    """Reduced row echelon form.

    Returns ``(R, pivots)``, or ``(R, T, pivots)`` with ``with_transform``
    where T is invertible and ``T @ m == R`` exactly.
    """
    trows = [{i: Fraction(1)} for i in range(m.rows)] if with_transform else None
    if m.cols < DENSE_COLUMN_LIMIT:
        rows = [[Fraction(0)] * m.cols for _ in range(m.rows)]
        for (r, c), v in m.entries.items():
            rows[r][c] = v
        pivots = _rref_dense(rows, m.cols, trows)
        entries = {
            (r, c): v for r, row in enumerate(rows) for c, v in enumerate(row) if v
        }
    else:
        rows = m.row_dicts()
        pivots = _rref_sparse(rows, m.cols, trows)
        entries = {(r, c): v for r, row in enumerate(rows) for c, v in row.items()}
    reduced = RationalMatrix(m.rows, m.cols, entries)
    if not with_transform:
        return reduced, pivots
    tentries = {(r, c): v for r, row in enumerate(trows) for c, v in row.items()}
    transform = RationalMatrix(m.rows, m.rows, tentries)
    return reduced, transform, pivots


def rank(m: RationalMatrix) -> int:
    _, pivots = rref(m)
    return len(pivots)


def rank_and_kernel(m: RationalMatrix):
    """Exact rank and a basis of ker(m) as sparse column vectors.

    rank + len(kernel) == m.cols; every kernel vector is annihilated by m.
    """
    reduced, pivots = rref(m)
    pivot_set = set(pivots)
    rows = reduced.row_dicts()[: len(pivots)]
    kernel = []
    for free in range(m.cols):
        if free in pivot_set:
            continue
        vec = {free: Fraction(1)}
        for prow, pcol in zip(rows, pivots):
            v = prow.get(free)
            if v:
                vec[pcol] = -v
        kernel.append(vec)
    return len(pivots), kernel


def complex_cohomology(d_in: RationalMatrix, d_out: RationalMatrix) -> int:
    """dim ker(d_out) - rank(d_in) for a two-step complex at the middle spot.

    ``d_in`` maps into the middle space (its row count), ``d_out`` maps out of
    it (its column count); the composition must vanish.
    """
    if d_in.rows != d_out.cols:
        raise ShapeMismatch(
            f"middle space mismatch: d_in has {d_in.rows} rows, "
            f"d_out has {d_out.cols} cols"
        )
    if not (d_out @ d_in).is_zero():
        raise CompositionNonzero("d_out composed with d_in is not zero")
    dim_middle = d_out.cols
    return (dim_middle - rank(d_out)) - rank(d_in)
