"""Catalog of the concrete cohomology rings the calculator works with.

Curves, Picard tori (exterior algebras), Grassmannians presented by Chern
classes of the tautological bundle, Koszul-signed tensor products, Betti
tables of affine spaces with compact supports, and the symmetric-product
Poincare-polynomial expansion.

Graded dimension tables ("GradedDims") are plain dicts degree -> rank with
nonnegative entries.
"""

from __future__ import annotations

from fractions import Fraction
from functools import lru_cache

from .superalg import (
    PresentedAlgebra,
    graded_series_coefficient,
)

GradedDims = dict


class InvalidShape(ValueError):
    """Grassmannian parameters out of range."""


def _normalize_pair_order(g, pair_order):
    if pair_order is None:
        return tuple(range(1, g + 1))
    po = tuple(pair_order)
    if sorted(po) != list(range(1, g + 1)):
        raise ValueError(f"pair order {po} is not a permutation of 1..{g}")
    return po


@lru_cache(maxsize=None)
def curve_algebra(g: int, pair_order=None) -> PresentedAlgebra:
    """H^* of a genus-g curve: basis 1, alpha_1..alpha_2g, e.

    The symplectic pairing convention is alpha_k * alpha_(g+k) = e =
    -alpha_(g+k) * alpha_k; all other products of degree-1 classes vanish,
    and e annihilates everything in positive degree.  ``pair_order`` permutes
    the enumeration of the pairs (the algebra itself is unchanged); computed
    page dimensions must not depend on it.
    """
    if g < 0:
        raise ValueError("genus must be nonnegative")
    order = _normalize_pair_order(g, pair_order)
    names = [f"alpha{k}" for k in order] + [f"alpha{g + k}" for k in order]
    partner = {}
    for k in range(1, g + 1):
        partner[f"alpha{k}"] = (f"alpha{g + k}", 1)
        partner[f"alpha{g + k}"] = (f"alpha{k}", -1)
    basis = [("1", 0)] + [(nm, 1) for nm in names] + [("e", 2)]
    unit = 0
    e_idx = len(basis) - 1
    name_at = {i + 1: nm for i, nm in enumerate(names)}
    mult: dict[tuple[int, int], dict[int, Fraction]] = {}
    for i in range(len(basis)):
        mult[(unit, i)] = {i: Fraction(1)}
        mult[(i, unit)] = {i: Fraction(1)}
    for i in range(1, e_idx):
        for j in range(1, e_idx):
            pname, sign = partner[name_at[i]]
            if name_at[j] == pname and sign == 1:
                mult[(i, j)] = {e_idx: Fraction(1)}
            elif name_at[j] == pname:
                mult[(i, j)] = {e_idx: Fraction(-1)}
    gens = [(nm, {i + 1: Fraction(1)}) for i, nm in enumerate(names)]
    gens.append(("e", {e_idx: Fraction(1)}))
    gen_pos = {nm: i for i, (nm, _) in enumerate(gens)}
    facts = [()]
    for nm in names:
        facts.append((gen_pos[nm],))
    if g == 0:
        facts.append((gen_pos["e"],))
    else:
        facts.append((gen_pos["alpha1"], gen_pos[f"alpha{g + 1}"]))
    tag = "" if order == tuple(range(1, g + 1)) else f",order={order}"
    return PresentedAlgebra(f"curve(g={g}{tag})", basis, unit, mult, gens, facts)


@lru_cache(maxsize=None)
def picard_algebra(g: int, pair_order=None) -> PresentedAlgebra:
    """H^* of the Picard torus of a genus-g curve: the exterior algebra on
    2g degree-one generators a_1..a_2g.  Dimension 2^(2g)."""
    if g < 0:
        raise ValueError("genus must be nonnegative")
    order = _normalize_pair_order(g, pair_order)
    names = [f"a{k}" for k in order] + [f"a{g + k}" for k in order]
    n = 2 * g
    subsets = []
    for size in range(n + 1):
        subsets.extend(_sorted_subsets(n, size))
    basis = []
    for s in subsets:
        lbl = "1" if not s else "*".join(names[i] for i in s)
        basis.append((lbl, len(s)))
    index = {s: i for i, s in enumerate(subsets)}
    mult: dict[tuple[int, int], dict[int, Fraction]] = {}
    for i, s in enumerate(subsets):
        for j, t in enumerate(subsets):
            if set(s) & set(t):
                continue
            crossings = sum(1 for u in s for v in t if u > v)
            merged = tuple(sorted(s + t))
            sign = -1 if crossings % 2 else 1
            mult[(i, j)] = {index[merged]: Fraction(sign)}
    gens = [(nm, {index[(i,)]: Fraction(1)}) for i, nm in enumerate(names)]
    facts = [s for s in subsets]
    tag = "" if order == tuple(range(1, g + 1)) else f",order={order}"
    return PresentedAlgebra(f"pic(g={g}{tag})", basis, 0, mult, gens, facts)


def _sorted_subsets(n, size):
    from itertools import combinations

    return [tuple(c) for c in combinations(range(n), size)]


# -- Grassmannians ------------------------------------------------------------


def _monomials_of_weight(k: int, m: int):
    """Exponent tuples (a_1..a_k) with sum of (i * a_i) equal to m."""
    out = []

    def rec(pos, remaining, acc):
        if pos == k - 1:
            w = k
            if remaining % w == 0:
                out.append(tuple(acc + [remaining // w]))
            return
        w = pos + 1
        for a in range(remaining // w, -1, -1):
            rec(pos + 1, remaining - w * a, acc + [a])

    rec(0, m, [])
    out.sort()
    return out


def _quotient_chern_polys(k: int, upto: int):
    """Chern classes of the tautological quotient bundle as polynomials in
    c_1..c_k, via s_0 = 1 and s_j = -(c_1 s_(j-1) + ... + c_k s_(j-k))."""
    s = [{(0,) * k: 1}]
    for j in range(1, upto + 1):
        acc: dict[tuple, int] = {}
        for i in range(1, min(k, j) + 1):
            for expo, c in s[j - i].items():
                bumped = list(expo)
                bumped[i - 1] += 1
                key = tuple(bumped)
                acc[key] = acc.get(key, 0) - c
        s.append({e: c for e, c in acc.items() if c})
    return s


@lru_cache(maxsize=None)
def grassmann_algebra(k: int, N: int) -> PresentedAlgebra:
    """H^* of the Grassmannian of k-planes in N-space.

    Presented as polynomials in the Chern classes c_1..c_k (deg c_i = 2i) of
    the tautological subbundle, modulo the vanishing of the quotient-bundle
    Chern classes s_j for j > N-k.  Monomial basis: c^a with sum(a) <= N-k,
    reduced to normal form per degree by exact elimination.  k == N yields
    the one-point ground field (c_i = 0 there).
    """
    if k < 1 or k > N:
        raise InvalidShape(f"no Grassmannian of {k}-planes in {N}-space")
    r = N - k
    top = k * r  # half of the top cohomological degree
    basis_expos = []
    for m in range(top + 1):
        basis_expos.extend(e for e in _monomials_of_weight(k, m) if sum(e) <= r)
    basis_index = {e: i for i, e in enumerate(basis_expos)}
    s_polys = _quotient_chern_polys(k, r + k)

    # Per-degree normal forms for every monomial occurring in products of two
    # basis monomials.
    from .qexact import RationalMatrix, rref

    nf: dict[tuple, dict[int, Fraction]] = {}
    for m in range(2 * top + 1):
        monos = _monomials_of_weight(k, m)
        in_basis = [e for e in monos if sum(e) <= r and m <= top]
        outside = [e for e in monos if e not in set(in_basis)]
        if not outside:
            continue
        columns = outside + in_basis
        col_index = {e: i for i, e in enumerate(columns)}
        rows = []
        for j in range(r + 1, r + k + 1):
            if m < j:
                continue
            for mu in _monomials_of_weight(k, m - j):
                row = {}
                for expo, c in s_polys[j].items():
                    key = tuple(a + b for a, b in zip(mu, expo))
                    row[col_index[key]] = row.get(col_index[key], 0) + c
                rows.append({c: v for c, v in row.items() if v})
        entries = {
            (ri, ci): Fraction(v)
            for ri, row in enumerate(rows)
            for ci, v in row.items()
        }
        mat = RationalMatrix(len(rows), len(columns), entries)
        reduced, pivots = rref(mat)
        if pivots != list(range(len(outside))):
            raise InvalidShape(
                f"quotient presentation degenerate in degree {2 * m} "
                f"for G({k},{N})"
            )
        red_rows = reduced.row_dicts()
        for ri, pc in enumerate(pivots):
            expr = {}
            for ci, v in red_rows[ri].items():
                if ci == pc:
                    continue
                expr[basis_index[columns[ci]]] = -v
            nf[columns[pc]] = expr

    def normal_form(expo):
        if sum(expo) <= r and sum((i + 1) * a for i, a in enumerate(expo)) <= top:
            return {basis_index[expo]: Fraction(1)}
        if sum((i + 1) * a for i, a in enumerate(expo)) > 2 * top:
            return {}
        return dict(nf[expo])

    labels = []
    for e in basis_expos:
        if not any(e):
            labels.append("1")
        else:
            parts = []
            for i, a in enumerate(e):
                if a == 1:
                    parts.append(f"c{i + 1}")
                elif a > 1:
                    parts.append(f"c{i + 1}^{a}")
            labels.append("*".join(parts))
    basis = [
        (lbl, 2 * sum((i + 1) * a for i, a in enumerate(e)))
        for lbl, e in zip(labels, basis_expos)
    ]
    mult: dict[tuple[int, int], dict[int, Fraction]] = {}
    for i, e1 in enumerate(basis_expos):
        for j, e2 in enumerate(basis_expos):
            prod = normal_form(tuple(a + b for a, b in zip(e1, e2)))
            if prod:
                mult[(i, j)] = prod
    gens = []
    for i in range(k):
        expo = tuple(1 if t == i else 0 for t in range(k))
        gens.append((f"c{i + 1}", normal_form(expo)))
    facts = []
    for e in basis_expos:
        fact = []
        for i, a in enumerate(e):
            fact.extend([i] * a)
        facts.append(tuple(fact))
    alg = PresentedAlgebra(f"gr({k},{N})", basis, 0, mult, gens, facts)
    return alg


def quotient_top_chern(N: int) -> dict:
    """Top nonvanishing Chern class of the tautological quotient bundle on
    the Grassmannian of 2-planes in N-space, expressed over the monomial
    basis (a polynomial in c_1, c_2 of degree 2(N-2))."""
    if N < 3:
        raise InvalidShape("need at least 3-dimensional ambient space")
    A = grassmann_algebra(2, N)
    s = _quotient_chern_polys(2, N - 2)
    return poly_to_element(A, s[N - 2])


def poly_to_element(A: PresentedAlgebra, poly: dict) -> dict:
    """Evaluate a polynomial in the c-generators, given as a dict mapping
    exponent tuples to integer coefficients, inside the quotient ring."""
    k = len(A.generators)
    out: dict[int, Fraction] = {}
    for expo, coeff in poly.items():
        term = A.unit_vec()
        for i, a in enumerate(expo):
            gvec = dict(A.generators[i][1])
            for _ in range(a):
                term = A.mul_vec(term, gvec)
        for idx, v in term.items():
            s = out.get(idx, Fraction(0)) + coeff * v
            if s:
                out[idx] = s
            else:
                out.pop(idx, None)
    return out


# -- tensor products ----------------------------------------------------------

_TENSOR_CACHE: dict[tuple[str, str], PresentedAlgebra] = {}


def _with_extra_zero_generators(A: PresentedAlgebra, names, new_name):
    """Copy of A whose generator list is extended by the given names, all
    mapping to zero.  Keeps A's generator positions, so factorizations carry
    over unchanged."""
    gens = list(A.generators) + [(nm, {}) for nm in names]
    return PresentedAlgebra(
        new_name, A.basis, A.unit_index, A.mult, gens, A.factorizations,
        check=False,
    )


def tensor_algebra(A: PresentedAlgebra, B: PresentedAlgebra) -> PresentedAlgebra:
    """Koszul-signed tensor product of two presented algebras.

    Tensoring with a one-dimensional algebra collapses to the other factor
    (unit law); any generators of the trivial factor survive as zero
    elements so that pullback templates still evaluate.
    """
    key = (A.name, B.name)
    if A.dim == 1 or B.dim == 1:
        trivial, keep = (A, B) if A.dim == 1 else (B, A)
        if not trivial.generators:
            return keep
        cached = _TENSOR_CACHE.get(key)
        if cached is None:
            cached = _with_extra_zero_generators(
                keep, [nm for nm, _ in trivial.generators],
                f"{A.name}⊗{B.name}",
            )
            _TENSOR_CACHE[key] = cached
        return cached
    cached = _TENSOR_CACHE.get(key)
    if cached is not None:
        return cached
    bd = B.dim
    basis = []
    for i, (la, da) in enumerate(A.basis):
        for j, (lb, db) in enumerate(B.basis):
            if la == "1":
                lbl = lb
            elif lb == "1":
                lbl = la
            else:
                lbl = f"{la}⊗{lb}"
            basis.append((lbl, da + db))
    mult: dict[tuple[int, int], dict[int, Fraction]] = {}
    for i1 in range(A.dim):
        for j1 in range(bd):
            dj1 = B.degrees[j1]
            for i2 in range(A.dim):
                va = A.mult.get((i1, i2))
                if not va:
                    continue
                sign = -1 if (dj1 % 2 and A.degrees[i2] % 2) else 1
                for j2 in range(bd):
                    vb = B.mult.get((j1, j2))
                    if not vb:
                        continue
                    prod = {}
                    for ia, ca in va.items():
                        for jb, cb in vb.items():
                            prod[ia * bd + jb] = sign * ca * cb
                    mult[(i1 * bd + j1, i2 * bd + j2)] = prod
    gens = []
    for nm, vec in A.generators:
        gens.append((nm, {i * bd + B.unit_index: c for i, c in vec.items()}))
    for nm, vec in B.generators:
        if nm in {g for g, _ in gens}:
            raise ValueError(f"generator name collision in tensor product: {nm}")
        gens.append((nm, {A.unit_index * bd + j: c for j, c in vec.items()}))
    na = len(A.generators)
    facts = []
    for i in range(A.dim):
        for j in range(bd):
            facts.append(
                tuple(A.factorizations[i]) + tuple(na + t for t in B.factorizations[j])
            )
    alg = PresentedAlgebra(
        f"{A.name}⊗{B.name}",
        basis,
        A.unit_index * bd + B.unit_index,
        mult,
        gens,
        facts,
    )
    _TENSOR_CACHE[key] = alg
    return alg


# -- graded dimension tables --------------------------------------------------


def compact_support_affine(d: int) -> GradedDims:
    """Compact-support Betti table of affine d-space: one class in degree 2d."""
    if d < 0:
        raise ValueError("dimension must be nonnegative")
    return {2 * d: 1}


def macdonald_sym(dims: GradedDims, n: int) -> GradedDims:
    """Betti table of the n-th symmetric product from the Betti table of the
    space: coefficient of x^n in

        prod over odd i of (1 + x t^i)^(b_i) *
        prod over even i of (1 - x t^i)^(-b_i).

    Applies verbatim to compact-support tables (exact for affine spaces)."""
    if n < 0:
        raise ValueError("symmetric power must be nonnegative")
    return graded_series_coefficient(dims, n, symmetric_parity=0)


def poincare_dims(A: PresentedAlgebra) -> GradedDims:
    return A.graded_dims()


def euler_char_of_dims(dims: GradedDims) -> int:
    return sum((-1) ** d * b for d, b in dims.items())
