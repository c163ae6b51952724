"""Spectral-sequence engine.

Builds first pages (sign-twisted invariants of the slot power tensored with
the tail), assembles the differentials as alternating sums of face pullbacks
restricted to invariants, computes second pages by exact rank computations,
collapses to Betti tables of the zeroth stratum, and runs the structural
self-checks.

Differentials move a cell (p, q) to (p+1, q); convergence is by total degree
p+q.  Differentials out of the last valid column are not assembled: either
the next column genuinely vanishes, or it is outside the certified range and
only total degrees that never reach it are reported.
"""

from __future__ import annotations

import itertools
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from math import comb

from .qexact import RationalMatrix, complex_cohomology, rank
from .superalg import (
    NotInvariant,
    TensorElement,
    project_to_invariants,
    sgn_invariant_basis,
)
from .families import (
    ColumnRangeError,
    DifferentialsUnavailable,
    FamilyDescriptor,
    face_pullback,
    family_pencils_curve,
    family_pencils_p1,
    family_tuples,
    family_uconf_general,
    family_uconf_plane,
)

GradedDims = dict


class DegenerationUnknown(RuntimeError):
    """Higher differentials could act and no degeneration argument applies."""


class InternalInvariantViolation(RuntimeError):
    """A structural property the engine guarantees failed to hold."""


# Test-only hook: a callable (p, q, matrix) -> matrix applied to every
# assembled differential, used to inject faults into the self-checks.
_fault_hook = None


def set_fault_hook(fn):
    global _fault_hook
    _fault_hook = fn


def _pmap(fn, items, threads):
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


@dataclass
class BettiTable:
    dims: GradedDims
    kind: str  # "compact-support" | "relative" | "ordinary"
    converged_assumed: bool
    valid_up_to_degree: int | None
    complex_dim: int | None = None
    note: str = ""

    def nonzero(self) -> GradedDims:
        return {d: b for d, b in sorted(self.dims.items()) if b}


@dataclass
class Page:
    family: str
    params: dict
    n: int
    page_index: int
    cells: dict
    labels: dict
    differentials: dict
    colmax: int
    fam: FamilyDescriptor = field(repr=False)
    cell_vectors: dict = field(repr=False, default_factory=dict)
    order: str = "lex"

    def dim(self, p: int, q: int) -> int:
        return self.cells.get((p, q), 0)

    def nonzero_cells(self):
        return sorted((pq, d) for pq, d in self.cells.items() if d)

    def columns(self):
        return sorted({p for (p, _) in self.cells})


def _column_layout(fam: FamilyDescriptor, p: int, order: str):
    """Per-q bases of column p for a presented family.

    Returns (inv_basis, tail, per_q) with per_q mapping q to the ordered list
    of (monomial index, tail index) pairs.
    """
    key = ("layout", p, order)
    if key in fam._cache:
        return fam._cache[key]
    reverse = order == "revlex"
    inv = sgn_invariant_basis(fam.m_algebra, p, reverse=reverse)
    tail = fam.tail_algebra(p)
    tail_order = range(tail.dim - 1, -1, -1) if reverse else range(tail.dim)
    per_q: dict[int, list[tuple[int, int]]] = {}
    for m in range(len(inv)):
        dl = inv.degrees[m]
        for t in tail_order:
            per_q.setdefault(dl + tail.degrees[t], []).append((m, t))
    fam._cache[key] = (inv, tail, per_q)
    return fam._cache[key]


def build_e1(fam: FamilyDescriptor, n: int | None = None,
             order: str = "lex") -> Page:
    """First page: cell (p, q) is the degree-(l) invariants times the
    degree-(q-l) part of the tail, summed over l.  Labeled bases are attached
    for presented families."""
    if n is not None and n != fam.n:
        raise ColumnRangeError(f"descriptor was built for n={fam.n}, not {n}")
    cells: dict[tuple[int, int], int] = {}
    labels: dict[tuple[int, int], list[str]] = {}
    vectors: dict[tuple[int, int], list] = {}
    for p in range(fam.colmax + 1):
        if fam.presented:
            inv, tail, per_q = _column_layout(fam, p, order)
            for q, vecs in per_q.items():
                cells[(p, q)] = len(vecs)
                vectors[(p, q)] = vecs
                labels[(p, q)] = [
                    f"{inv.monomial_label(m)} | {tail.basis[t][0]}"
                    for m, t in vecs
                ]
        else:
            ff = fam.first_factor_dims(p)
            td = fam.tail_dims(p)
            for l, bl in ff.items():
                for m, bm in td.items():
                    q = l + m
                    cells[(p, q)] = cells.get((p, q), 0) + bl * bm
    return Page(
        family=fam.name,
        params=fam.params,
        n=fam.n,
        page_index=1,
        cells=cells,
        labels=labels,
        differentials={},
        colmax=fam.colmax,
        fam=fam,
        cell_vectors=vectors,
        order=order,
    )


def assemble_differential(fam: FamilyDescriptor, n: int, p: int,
                          order: str = "lex") -> dict:
    """Matrices of the differential out of column p, one per q.

    The differential is the alternating sum over i = 1..p+1 of the face
    pullbacks, applied to the invariant representatives and re-expressed in
    the invariant basis of column p+1.  Every image must land exactly in the
    invariants; a NotInvariant escape here is an internal inconsistency.
    """
    if n != fam.n:
        raise ColumnRangeError(f"descriptor was built for n={fam.n}, not {n}")
    if not fam.presented:
        raise DifferentialsUnavailable(
            f"{fam.name} carries Betti tables only; no differentials"
        )
    fam._check_column(p)
    fam._check_column(p + 1)
    cache_key = ("diff", p, order)
    if _fault_hook is None and cache_key in fam._cache:
        return fam._cache[cache_key]
    inv_src, tail_src, src_per_q = _column_layout(fam, p, order)
    inv_tgt, tail_tgt, tgt_per_q = _column_layout(fam, p + 1, order)
    tgt_pos: dict[tuple[int, int], tuple[int, int]] = {}
    for q, vecs in tgt_per_q.items():
        for row, key in enumerate(vecs):
            tgt_pos[key] = (q, row)
    homs = [face_pullback(fam, n, p, i) for i in range(1, p + 2)]
    out: dict[int, RationalMatrix] = {}
    for q, vecs in sorted(src_per_q.items()):
        entries: dict[tuple[int, int], Fraction] = {}
        for col, (m, t) in enumerate(vecs):
            x = inv_src.representative_element(m, tail_src, t)
            image = TensorElement(fam.m_algebra, tail_tgt, p + 1)
            for i, hom in enumerate(homs, start=1):
                sign = -1 if i % 2 else 1
                piece = hom.apply(x)
                for key, v in piece.terms.items():
                    s = image.terms.get(key, Fraction(0)) + sign * v
                    if s:
                        image.terms[key] = s
                    else:
                        image.terms.pop(key, None)
            try:
                coords = project_to_invariants(
                    fam.m_algebra, p + 1, image, basis=inv_tgt
                )
            except NotInvariant as exc:
                raise InternalInvariantViolation(
                    f"differential image left the invariants at "
                    f"(p={p}, q={q}), column {col}: {exc}"
                ) from exc
            for key, v in coords.items():
                q2, row = tgt_pos[key]
                if q2 != q:
                    raise InternalInvariantViolation(
                        f"differential did not preserve q at (p={p}, q={q})"
                    )
                entries[(row, col)] = v
        nrows = len(tgt_per_q.get(q, ()))
        matrix = RationalMatrix(nrows, len(vecs), entries)
        if _fault_hook is not None:
            matrix = _fault_hook(p, q, matrix) or matrix
        out[q] = matrix
    if _fault_hook is None:
        fam._cache[cache_key] = out
    return out


def attach_differentials(page: Page, threads: int = 1) -> Page:
    """Assemble and store the differentials of every column but the last."""
    fam = page.fam
    if not fam.presented:
        return page
    cols = list(range(fam.colmax))

    def work(p):
        return p, assemble_differential(fam, fam.n, p, order=page.order)

    for p, mats in _pmap(work, cols, threads):
        for q, mat in mats.items():
            page.differentials[(p, q)] = mat
    return page


def _decoupling_failure(page: Page):
    for (p, q), d in page.cells.items():
        if d and page.cells.get((p + 1, q), 0):
            return (p, q)
    return None


def compute_e2(page: Page, threads: int = 1) -> Page:
    """Second page: cohomology of the rows at every cell.

    For presented families the stored differentials are used (assembling
    them on demand); for Betti-level families all consecutive columns must
    decouple by q, in which case the first page is final.
    """
    if page.page_index != 1:
        raise ValueError("second page is computed from a first page")
    fam = page.fam
    if fam.presented:
        if not page.differentials and fam.colmax > 0:
            attach_differentials(page, threads=threads)
    else:
        spot = _decoupling_failure(page)
        if spot is not None:
            raise DifferentialsUnavailable(
                f"{fam.name}: columns {spot[0]} and {spot[0] + 1} interact "
                f"at q={spot[1]}; differentials are not defined at the "
                "Betti level"
            )

    def cohomology_at(pq):
        p, q = pq
        dim = page.cells[pq]
        d_out = page.differentials.get((p, q))
        if d_out is None:
            d_out = RationalMatrix.zero(page.cells.get((p + 1, q), 0), dim)
        d_in = page.differentials.get((p - 1, q))
        if d_in is None:
            d_in = RationalMatrix.zero(dim, page.cells.get((p - 1, q), 0))
        return pq, complex_cohomology(d_in, d_out)

    results = _pmap(cohomology_at, sorted(page.cells), threads)
    cells = {pq: d for pq, d in results if d}
    return Page(
        family=page.family,
        params=page.params,
        n=page.n,
        page_index=2,
        cells=cells,
        labels={},
        differentials={},
        colmax=page.colmax,
        fam=fam,
        order=page.order,
    )


def euler_characteristic(page: Page) -> int:
    return sum((-1) ** (p + q) * d for (p, q), d in page.cells.items())


def _trivially_final(page: Page) -> bool:
    nz = [pq for pq, d in page.cells.items() if d]
    for p, q in nz:
        for p2, q2 in nz:
            if p2 >= p + 2 and p2 + q2 == p + q + 1:
                return False
    return True


@dataclass
class StratumResult:
    e1: Page
    e2: Page
    primary: BettiTable
    ordinary: BettiTable | None


def stratum_tables(fam: FamilyDescriptor, n: int | None = None,
                   threads: int = 1, order: str = "lex") -> StratumResult:
    """Collapse the second page by total degree into Betti tables.

    The primary table is the convergence target (compact-support cohomology
    of the stratum, or the relative cohomology of the pair); when the
    complex dimension is known the ordinary table follows by reflecting the
    degree at twice the dimension, truncated to the certified range.
    """
    e1 = build_e1(fam, n, order=order)
    e2 = compute_e2(e1, threads=threads)
    if fam.degeneration_assumed:
        assumed = True
        note = fam.degeneration_note
    elif _trivially_final(e2):
        assumed = False
        note = "no higher differential can act: nonzero cells never sit "
        note += "one total degree apart at column distance >= 2"
    else:
        raise DegenerationUnknown(
            f"{fam.name}: higher differentials could act and no "
            "degeneration argument applies"
        )
    total: GradedDims = {}
    for (p, q), d in e2.cells.items():
        total[p + q] = total.get(p + q, 0) + d
    total = dict(sorted(total.items()))
    primary_kind = (
        "compact-support"
        if fam.convergence == "compact-support-direct"
        else "relative"
    )
    vnote = ""
    if fam.valid_up_to_degree is not None:
        vnote = (
            f"certified in stratum degrees <= {fam.valid_up_to_degree}"
        )
    primary = BettiTable(
        dims=total,
        kind=primary_kind,
        converged_assumed=assumed,
        valid_up_to_degree=None,
        complex_dim=fam.complex_dim,
        note=(note + ("; " + vnote if vnote else "")).strip("; "),
    )
    ordinary = None
    if fam.complex_dim is not None:
        two_d = 2 * fam.complex_dim
        dual: GradedDims = {}
        for deg, b in total.items():
            m = two_d - deg
            if m < 0:
                raise InternalInvariantViolation(
                    f"{fam.name}: total degree {deg} above twice the "
                    f"complex dimension {fam.complex_dim}"
                )
            if fam.valid_up_to_degree is not None and m > fam.valid_up_to_degree:
                continue
            dual[m] = dual.get(m, 0) + b
        ordinary = BettiTable(
            dims=dict(sorted(dual.items())),
            kind="ordinary",
            converged_assumed=assumed,
            valid_up_to_degree=fam.valid_up_to_degree,
            complex_dim=fam.complex_dim,
            note=vnote,
        )
    return StratumResult(e1=e1, e2=e2, primary=primary, ordinary=ordinary)


def betti_of_stratum(fam: FamilyDescriptor, n: int | None = None,
                     threads: int = 1) -> BettiTable:
    """Betti table of the zeroth stratum in the family's convergence
    convention."""
    return stratum_tables(fam, n, threads=threads).primary


# -- structural checks --------------------------------------------------------


def stalk_acyclicity_check(p_max: int) -> dict:
    """Exactness of the sign-twisted simplex complexes.

    For each p the complex has one summand per subset of a p-element set,
    with alternating-sum face differentials; exactness at every spot is
    verified by exact rank computation (the binomial alternating sum being
    zero is the dimension-level shadow).
    """
    if p_max < 1:
        raise ValueError("p_max must be at least 1")
    report = {"name": "stalk-acyclicity", "passed": True, "levels": {}}
    for p in range(1, p_max + 1):
        subsets = [
            list(itertools.combinations(range(p), k)) for k in range(p + 1)
        ]
        mats = []
        for k in range(p):
            src = subsets[k]
            tgt = subsets[k + 1]
            tgt_pos = {s: i for i, s in enumerate(tgt)}
            entries = {}
            for col, s in enumerate(src):
                sset = set(s)
                for x in range(p):
                    if x in sset:
                        continue
                    t = tuple(sorted(s + (x,)))
                    sign = (-1) ** t.index(x)
                    entries[(tgt_pos[t], col)] = Fraction(sign)
            mats.append(RationalMatrix(len(tgt), len(src), entries))
        ranks = [rank(m) for m in mats]
        dims = [comb(p, k) for k in range(p + 1)]
        exact = ranks[0] == dims[0]  # injective at the first spot
        for k in range(1, p):
            exact = exact and (ranks[k - 1] + ranks[k] == dims[k])
        exact = exact and (ranks[p - 1] == dims[p])  # surjective at the end
        report["levels"][p] = {"dims": dims, "ranks": ranks, "exact": exact}
        report["passed"] = report["passed"] and exact
    return report


def dd_zero_check(page: Page) -> dict:
    """Composite of consecutive stored differentials is the zero matrix."""
    failures = []
    for (p, q), m1 in page.differentials.items():
        m2 = page.differentials.get((p + 1, q))
        if m2 is None:
            continue
        if not (m2 @ m1).is_zero():
            failures.append({"p": p, "q": q})
    return {
        "name": "d-compose-d-zero",
        "instance": f"{page.family}{page.params}",
        "passed": not failures,
        "failures": failures,
    }


def chi_conservation_check(e1: Page, e2: Page) -> dict:
    c1, c2 = euler_characteristic(e1), euler_characteristic(e2)
    return {
        "name": "euler-conservation",
        "instance": f"{e1.family}{e1.params}",
        "passed": c1 == c2,
        "chi_e1": c1,
        "chi_e2": c2,
    }


def _generalized_binomial(x: int, n: int) -> int:
    num = 1
    for k in range(n):
        num *= x - k
    from math import factorial

    q, r = divmod(num, factorial(n))
    assert r == 0
    return q


def run_structural_checks(p_max: int = 10, families=("all",),
                          threads: int = 1) -> list[dict]:
    """The shipped self-check matrix; every entry reports pass/fail with a
    counterexample location on failure."""
    want = set(families)
    all_wanted = "all" in want
    checks: list[dict] = []

    checks.append(stalk_acyclicity_check(p_max))

    if all_wanted or "uconf-plane" in want:
        for n in range(0, 11):
            fam = family_uconf_plane(n)
            res = stratum_tables(fam, threads=threads)
            expected = {2 * n: 1, 2 * n - 1: 1} if n >= 2 else {2 * n: 1}
            checks.append(
                {
                    "name": "uconf-plane-betti",
                    "instance": f"n={n}",
                    "passed": res.primary.nonzero() == dict(sorted(expected.items())),
                    "got": res.primary.nonzero(),
                }
            )
            checks.append(chi_conservation_check(res.e1, res.e2))

    if all_wanted or "uconf-general" in want:
        presets = [
            {0: 1, 2: 1},
            {1: 2},
            {0: 1, 1: 1},
            {0: 1, 2: 2},
            {1: 1},
        ]
        for dims in presets:
            chi_x = sum((-1) ** d * b for d, b in dims.items())
            for n in range(0, 6):
                fam = family_uconf_general(dims, n)
                e1 = build_e1(fam)
                checks.append(
                    {
                        "name": "uconf-euler-oracle",
                        "instance": f"dims={dims}, n={n}",
                        "passed": euler_characteristic(e1)
                        == _generalized_binomial(chi_x, n),
                        "chi_e1": euler_characteristic(e1),
                        "expected": _generalized_binomial(chi_x, n),
                    }
                )

    if all_wanted or "tuples" in want:
        for r in range(2, 4):
            for n in range(3, 7):
                fam = family_tuples(r, n)
                res = stratum_tables(fam, threads=threads)
                ok = res.ordinary is not None and res.ordinary.nonzero() == {
                    0: 1,
                    2 * r - 3: 1,
                }
                checks.append(
                    {
                        "name": "tuples-betti-support",
                        "instance": f"r={r}, n={n}",
                        "passed": ok,
                        "got": res.ordinary.nonzero() if res.ordinary else None,
                    }
                )
        for n in range(2, 5):
            fam = family_tuples(1, n)
            try:
                compute_e2(build_e1(fam))
                interacted = False
            except DifferentialsUnavailable:
                interacted = True
            checks.append(
                {
                    "name": "tuples-r1-columns-interact",
                    "instance": f"n={n}",
                    "passed": interacted,
                }
            )

    pencil_instances = []
    if all_wanted or "pencils-p1" in want:
        pencil_instances += [family_pencils_p1(1, n) for n in range(2, 8)]
    if all_wanted or "pencils-curve" in want:
        pencil_instances += [
            family_pencils_curve(g, n)
            for g in (1, 2)
            for n in range(2 * g, 2 * g + 3)
        ]
    for fam in pencil_instances:
        e1 = build_e1(fam)
        attach_differentials(e1, threads=threads)
        checks.append(dd_zero_check(e1))
        res = stratum_tables(fam, threads=threads)
        checks.append(chi_conservation_check(res.e1, res.e2))
        checks.append(
            {
                "name": "stratum-connected",
                "instance": f"{fam.name}{fam.params}",
                "passed": res.ordinary is not None
                and res.ordinary.dims.get(0) == 1,
                "got": None if res.ordinary is None else res.ordinary.nonzero(),
            }
        )

    if all_wanted or "pencils-curve" in want:
        for n in range(2, 7):
            a = stratum_tables(family_pencils_curve(0, n), threads=threads)
            b = stratum_tables(family_pencils_p1(1, n), threads=threads)
            same = (
                a.e1.cells == b.e1.cells
                and a.e2.cells == b.e2.cells
                and a.primary.nonzero() == b.primary.nonzero()
                and a.ordinary.nonzero() == b.ordinary.nonzero()
            )
            checks.append(
                {
                    "name": "genus-zero-reduction",
                    "instance": f"n={n}",
                    "passed": same,
                }
            )

    return checks
