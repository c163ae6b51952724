"""Graded-commutative algebra kernel.

Finite-dimensional graded-commutative algebras are presented by a homogeneous
basis and a sparse multiplication table.  On top of that this module provides
Koszul signs, the sign-twisted symmetric-group action on tensor powers, the
basis of sign-isotypic invariants (symmetric powers of the odd part tensor
exterior powers of the even part), and the matching closed-form dimension
count.

Sign conventions
----------------
Transposing adjacent tensor slots of degrees a, b costs (-1)^(a*b); the
twisted action multiplies by the sign of the permutation on top of that.
Under the twist, odd-degree classes behave symmetrically (repeats allowed)
and even-degree classes behave antisymmetrically (no repeats).
"""

from __future__ import annotations

import itertools
import random
from fractions import Fraction
from functools import lru_cache
from math import comb

from .qexact import Rational, _frac

# Exhaustive associativity checking at construction up to this dimension;
# larger algebras get a deterministic sample.  The test suite re-checks
# catalog algebras exhaustively up to dimension 200.
ASSOC_EXHAUSTIVE_LIMIT = 64
_ASSOC_SAMPLES = 20000


class AlgebraMismatch(ValueError):
    """Element does not belong to the algebra it is used with."""


class NotInvariant(ValueError):
    """Element is moved by some sign-twisted transposition."""


class AlgebraConstructionError(ValueError):
    """Presented data violates a structural axiom."""


def vec_add(x: dict, y: dict) -> dict:
    out = dict(x)
    for k, v in y.items():
        s = out.get(k, Fraction(0)) + v
        if s:
            out[k] = s
        else:
            out.pop(k, None)
    return out


def vec_scale(c, x: dict) -> dict:
    c = _frac(c)
    if not c:
        return {}
    return {k: c * v for k, v in x.items()}


class PresentedAlgebra:
    """Graded-commutative algebra with an explicit homogeneous basis.

    basis            list of (label, degree)
    unit_index       index of the multiplicative unit
    mult             {(i, j): sparse vector over the basis}; missing = zero
    generators       list of (name, element); elements may be zero in
                     degenerate quotients
    factorizations   per basis element, a tuple of generator positions whose
                     ordered product equals that basis element (unit = ())

    Elements are sparse dicts {basis index: Fraction}.  Instances are
    immutable after construction.
    """

    def __init__(self, name, basis, unit_index, mult, generators,
                 factorizations, check=True):
        self.name = name
        self.basis = list(basis)
        self.unit_index = unit_index
        self.mult = mult
        self.generators = list(generators)
        self.factorizations = list(factorizations)
        self.dim = len(self.basis)
        self.degrees = [d for _, d in self.basis]
        self._label_index = {lbl: i for i, (lbl, _) in enumerate(self.basis)}
        self._gen_index = {n: i for i, (n, _) in enumerate(self.generators)}
        if check:
            self._check()

    # -- inspection helpers -------------------------------------------------

    def graded_dims(self) -> dict[int, int]:
        out: dict[int, int] = {}
        for d in self.degrees:
            out[d] = out.get(d, 0) + 1
        return out

    def unit_vec(self) -> dict:
        return {self.unit_index: Fraction(1)}

    def basis_vec(self, i: int) -> dict:
        return {i: Fraction(1)}

    def index_of_label(self, label: str) -> int:
        return self._label_index[label]

    def gen(self, name: str) -> dict:
        try:
            pos = self._gen_index[name]
        except KeyError:
            raise AlgebraMismatch(f"{self.name} has no generator {name!r}")
        return dict(self.generators[pos][1])

    def label_of_vec(self, x: dict) -> str:
        if not x:
            return "0"
        parts = []
        for i in sorted(x):
            c = x[i]
            lbl = self.basis[i][0]
            parts.append(lbl if c == 1 else f"({c})*{lbl}")
        return " + ".join(parts)

    # -- multiplication -----------------------------------------------------

    def mul_basis(self, i: int, j: int) -> dict:
        return self.mult.get((i, j), {})

    def mul_vec(self, x: dict, y: dict) -> dict:
        out: dict[int, Fraction] = {}
        for i, a in x.items():
            for j, b in y.items():
                prod = self.mult.get((i, j))
                if not prod:
                    continue
                ab = a * b
                for k, c in prod.items():
                    s = out.get(k, Fraction(0)) + ab * c
                    if s:
                        out[k] = s
                    else:
                        out.pop(k, None)
        return out

    def vec_degree(self, x: dict):
        """Degree of a homogeneous element, None for 0, error if mixed."""
        degs = {self.degrees[i] for i in x}
        if not degs:
            return None
        if len(degs) > 1:
            raise AlgebraMismatch(f"element not homogeneous: degrees {degs}")
        return degs.pop()

    # -- construction-time checks -------------------------------------------

    def _check(self):
        n = self.dim
        if not (0 <= self.unit_index < n):
            raise AlgebraConstructionError("unit index out of range")
        if self.degrees[self.unit_index] != 0:
            raise AlgebraConstructionError("unit must sit in degree 0")
        for (i, j), vec in self.mult.items():
            dij = self.degrees[i] + self.degrees[j]
            for k, v in vec.items():
                if not v:
                    raise AlgebraConstructionError("stored zero coefficient")
                if self.degrees[k] != dij:
                    raise AlgebraConstructionError(
                        f"product of basis {i},{j} not concentrated in degree {dij}"
                    )
        u = self.unit_index
        for i in range(n):
            if self.mult.get((u, i), {}) != {i: Fraction(1)}:
                raise AlgebraConstructionError(f"unit law fails at basis {i}")
            if self.mult.get((i, u), {}) != {i: Fraction(1)}:
                raise AlgebraConstructionError(f"unit law fails at basis {i}")
        for i in range(n):
            di = self.degrees[i]
            for j in range(i, n):
                sign = -1 if (di % 2 and self.degrees[j] % 2) else 1
                lhs = self.mult.get((i, j), {})
                rhs = self.mult.get((j, i), {})
                if lhs != vec_scale(sign, rhs):
                    raise AlgebraConstructionError(
                        f"graded commutativity fails at ({i}, {j})"
                    )
        if n <= ASSOC_EXHAUSTIVE_LIMIT:
            triples = itertools.product(range(n), repeat=3)
        else:
            rng = random.Random(0x5A17)
            triples = (
                (rng.randrange(n), rng.randrange(n), rng.randrange(n))
                for _ in range(_ASSOC_SAMPLES)
            )
        for i, j, k in triples:
            if not self._assoc_ok(i, j, k):
                raise AlgebraConstructionError(
                    f"associativity fails at ({i}, {j}, {k})"
                )

    def _assoc_ok(self, i, j, k):
        left = self.mul_vec(self.mult.get((i, j), {}), {k: Fraction(1)})
        right = self.mul_vec({i: Fraction(1)}, self.mult.get((j, k), {}))
        return left == right

    def __repr__(self):
        return f"PresentedAlgebra({self.name}, dim={self.dim})"


def multiply(A: PresentedAlgebra, x: dict, y: dict) -> dict:
    """Bilinear extension of the multiplication table; degree-additive."""
    for v in (x, y):
        for i in v:
            if not (0 <= i < A.dim):
                raise AlgebraMismatch(f"index {i} outside algebra {A.name}")
    return A.mul_vec(x, y)


# -- Koszul signs and the twisted symmetric-group action ---------------------


def permutation_sign(perm) -> int:
    inv = 0
    n = len(perm)
    for i in range(n):
        for j in range(i + 1, n):
            if perm[i] > perm[j]:
                inv += 1
    return -1 if inv % 2 else 1


def koszul_sign(perm, degs) -> int:
    """Sign from rearranging graded slots so slot k lands at position perm[k].

    Multiplicative under composition; an adjacent swap of degrees a, b gives
    (-1)^(a*b).
    """
    if len(perm) != len(degs):
        raise ValueError("permutation and degree list lengths differ")
    n = len(perm)
    sign = 1
    for i in range(n):
        if degs[i] % 2 == 0:
            continue
        for j in range(i + 1, n):
            if perm[i] > perm[j] and degs[j] % 2:
                sign = -sign
    return sign


class TensorElement:
    """Element of A^(tensor p) tensor B for a slot algebra A and tail B.

    terms maps (slot index tuple of length p, tail basis index) to a
    coefficient.
    """

    __slots__ = ("slot_algebra", "tail_algebra", "p", "terms")

    def __init__(self, slot_algebra, tail_algebra, p, terms=None):
        self.slot_algebra = slot_algebra
        self.tail_algebra = tail_algebra
        self.p = p
        self.terms: dict[tuple[tuple[int, ...], int], Fraction] = {}
        if terms:
            for (slots, t), v in terms.items():
                if len(slots) != p:
                    raise AlgebraMismatch(f"slot tuple {slots} is not length {p}")
                v = _frac(v)
                if v:
                    self.terms[(slots, t)] = v

    def is_zero(self) -> bool:
        return not self.terms

    def scaled(self, c) -> "TensorElement":
        out = TensorElement(self.slot_algebra, self.tail_algebra, self.p)
        c = _frac(c)
        if c:
            out.terms = {k: c * v for k, v in self.terms.items()}
        return out

    def add(self, other: "TensorElement") -> "TensorElement":
        if (other.slot_algebra is not self.slot_algebra
                or other.tail_algebra is not self.tail_algebra
                or other.p != self.p):
            raise AlgebraMismatch("tensor elements live in different spaces")
        out = TensorElement(self.slot_algebra, self.tail_algebra, self.p)
        out.terms = dict(self.terms)
        for k, v in other.terms.items():
            s = out.terms.get(k, Fraction(0)) + v
            if s:
                out.terms[k] = s
            else:
                out.terms.pop(k, None)
        return out

    def act(self, perm) -> "TensorElement":
        """Sign-twisted action: permute slots, multiply by sgn times Koszul."""
        degs_of = self.slot_algebra.degrees
        base = permutation_sign(perm)
        out = TensorElement(self.slot_algebra, self.tail_algebra, self.p)
        for (slots, t), v in self.terms.items():
            new = [0] * self.p
            for k, s in enumerate(slots):
                new[perm[k]] = s
            sign = base * koszul_sign(perm, [degs_of[s] for s in slots])
            key = (tuple(new), t)
            sv = out.terms.get(key, Fraction(0)) + sign * v
            if sv:
                out.terms[key] = sv
            else:
                out.terms.pop(key, None)
        return out

    def swap_slots(self, k: int) -> "TensorElement":
        perm = list(range(self.p))
        perm[k], perm[k + 1] = perm[k + 1], perm[k]
        return self.act(perm)

    def is_sgn_invariant(self) -> bool:
        return all(self.swap_slots(k).terms == self.terms for k in range(self.p - 1))

    def total_degree(self):
        """Common slot+tail degree of all terms, None when zero."""
        degs_of = self.slot_algebra.degrees
        tail_degs = self.tail_algebra.degrees
        found = None
        for (slots, t), _ in self.terms.items():
            d = sum(degs_of[s] for s in slots) + tail_degs[t]
            if found is None:
                found = d
            elif found != d:
                raise AlgebraMismatch("tensor element not homogeneous")
        return found


def _arrangement_sign(canonical, degs, perm):
    return permutation_sign(perm) * koszul_sign(perm, degs)


class SgnInvariantBasis:
    """Basis of the sign-twisted S_p-invariants of A^(tensor p).

    Monomials are canonical slot tuples: weakly increasing odd-degree basis
    indices followed by strictly increasing even-degree ones.  The stored
    representative of a monomial is the orbit sum of its arrangements with
    sgn-times-Koszul signs, not divided by the orbit size, so the canonical
    arrangement always carries coefficient +1.
    """

    def __init__(self, algebra: PresentedAlgebra, p: int, reverse: bool = False):
        self.algebra = algebra
        self.p = p
        odd = [i for i in range(algebra.dim) if algebra.degrees[i] % 2]
        even = [i for i in range(algebra.dim) if algebra.degrees[i] % 2 == 0]
        monos = []
        for j in range(min(p, len(even)) + 1):
            i = p - j
            if i and not odd:
                continue
            for ev in itertools.combinations(even, j):
                for od in itertools.combinations_with_replacement(odd, i):
                    monos.append(od + ev)
        degs_of = algebra.degrees
        monos.sort(key=lambda t: (sum(degs_of[s] for s in t), t))
        if reverse:
            monos.reverse()
        self.monomials = monos
        self.degrees = [sum(degs_of[s] for s in t) for t in monos]
        self.index = {t: i for i, t in enumerate(monos)}
        self.representatives = []
        for t in monos:
            degs = [degs_of[s] for s in t]
            rep: dict[tuple[int, ...], int] = {}
            for perm in itertools.permutations(range(p)):
                arr = [0] * p
                for k in range(p):
                    arr[perm[k]] = t[k]
                arr = tuple(arr)
                if arr not in rep:
                    rep[arr] = _arrangement_sign(t, degs, perm)
            self.representatives.append(rep)
        self.by_degree: dict[int, list[int]] = {}
        for i, d in enumerate(self.degrees):
            self.by_degree.setdefault(d, []).append(i)

    def __len__(self):
        return len(self.monomials)

    def graded_dims(self) -> dict[int, int]:
        return {d: len(v) for d, v in self.by_degree.items()}

    def monomial_label(self, i: int) -> str:
        t = self.monomials[i]
        if not t:
            return "1"
        return "·".join(self.algebra.basis[s][0] for s in t)

    def representative_element(self, i: int, tail_algebra, tail_idx) -> TensorElement:
        el = TensorElement(self.algebra, tail_algebra, self.p)
        el.terms = {
            (arr, tail_idx): Fraction(s)
            for arr, s in self.representatives[i].items()
        }
        return el


@lru_cache(maxsize=None)
def _cached_basis(algebra, p, reverse):
    return SgnInvariantBasis(algebra, p, reverse)


def sgn_invariant_basis(A: PresentedAlgebra, p: int,
                        reverse: bool = False) -> SgnInvariantBasis:
    """Basis of (A^(tensor p) tensor sgn)^(S_p); cached per algebra."""
    if p < 0:
        raise ValueError("tensor power must be nonnegative")
    return _cached_basis(A, p, reverse)


def project_to_invariants(A: PresentedAlgebra, p: int, x: TensorElement,
                          basis: SgnInvariantBasis | None = None):
    """Coordinates of an invariant element over the monomial basis.

    Raises NotInvariant if a sign-twisted transposition moves x, or if x is
    not reproduced exactly by its coordinates.  Returns a sparse dict keyed
    (monomial index, tail basis index).
    """
    if x.p != p or x.slot_algebra is not A:
        raise AlgebraMismatch("element does not live over the requested power")
    if not x.is_sgn_invariant():
        raise NotInvariant("a sign-twisted transposition moves the element")
    if basis is None:
        basis = sgn_invariant_basis(A, p)
    coords: dict[tuple[int, int], Fraction] = {}
    for (slots, t), v in x.terms.items():
        m = basis.index.get(slots)
        if m is not None:
            coords[(m, t)] = v
    residual = dict(x.terms)
    for (m, t), c in coords.items():
        for arr, s in basis.representatives[m].items():
            key = (arr, t)
            sv = residual.get(key, Fraction(0)) - c * s
            if sv:
                residual[key] = sv
            else:
                residual.pop(key, None)
    if residual:
        raise NotInvariant("element is not in the span of the invariant basis")
    return coords


# -- closed-form graded dimensions -------------------------------------------


def graded_series_coefficient(dims: dict[int, int], n: int,
                              symmetric_parity: int) -> dict[int, int]:
    """Coefficient of x^n in the two-variable product

        prod over degrees d with multiplicity b of
            (1 - x t^d)^(-b)   if d % 2 == symmetric_parity
            (1 + x t^d)^(+b)   otherwise

    returned as a degree -> count dict.  With symmetric_parity=1 this counts
    Sym on odd degrees and Lambda on even ones (the sign-twisted invariants);
    with symmetric_parity=0 it is the symmetric-product Poincare series.
    """
    if n < 0:
        raise ValueError("n must be nonnegative")
    coeffs: list[dict[int, int]] = [dict() for _ in range(n + 1)]
    coeffs[0][0] = 1
    for d, b in sorted(dims.items()):
        if b == 0:
            continue
        if b < 0 or d < 0:
            raise ValueError(f"invalid graded dimension {d}: {b}")
        if d % 2 == symmetric_parity:
            factor = [comb(b + k - 1, k) for k in range(n + 1)]
        else:
            factor = [comb(b, k) for k in range(n + 1)]
        new: list[dict[int, int]] = [dict() for _ in range(n + 1)]
        for m in range(n + 1):
            for k in range(m + 1):
                f = factor[k]
                if not f:
                    continue
                shift = d * k
                for deg, cnt in coeffs[m - k].items():
                    key = deg + shift
                    new[m][key] = new[m].get(key, 0) + f * cnt
        coeffs = new
    return {d: c for d, c in sorted(coeffs[n].items()) if c}


def sym_ext_dims(dims: dict[int, int], p: int) -> dict[int, int]:
    """Graded dims of the p-th sign-twisted invariants from a Betti table.

    Sum over i+j=p of Sym^i of the odd part tensor Lambda^j of the even part,
    graded by total degree.
    """
    return graded_series_coefficient(dims, p, symmetric_parity=1)
