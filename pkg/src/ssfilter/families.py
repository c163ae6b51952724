"""Descriptors for the built-in semi-simplicially filtered families.

A family packages the cohomology of the filtering space M, the algebra (or
Betti table) of each filtered space in the tower, the per-generator pullback
template of the face maps, the valid column range, and the convergence
convention.  Face-map pullbacks are realized as homs from p-slot tensors into
(p+1)-slot tensors; the engine sums them with alternating signs to get the
differentials.

Column conventions: column p of the first page carries the p-slot invariants
tensored with the tail algebra of X_(n - e*p); differentials raise p by one
and preserve the total cohomological degree q.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .superalg import (
    AlgebraMismatch,
    PresentedAlgebra,
    TensorElement,
    sym_ext_dims,
)
from . import rings
from .rings import (
    GradedDims,
    compact_support_affine,
    curve_algebra,
    grassmann_algebra,
    macdonald_sym,
    picard_algebra,
    tensor_algebra,
)


class RangeError(ValueError):
    """A parameter is outside the range the family supports."""


class StableRangeError(RangeError):
    """n below the stable range of the family."""


class ColumnRangeError(RangeError):
    """Requested column outside the valid range."""


class DifferentialsUnavailable(RuntimeError):
    """The family only carries dimension data, but columns interact."""


# A template term (coeff, slot_label, tail_generator_names) stands for
# coeff * (slot class placed in the inserted slot) * (product of tail
# generators of the next tail algebra); slot_label None means the slot unit.
TemplateTerm = tuple


@dataclass
class FamilyDescriptor:
    """One instance (fixed parameters and n) of a filtered family."""

    name: str
    params: dict
    n: int
    filter_gap: int
    m_dims: GradedDims
    presented: bool
    convergence: str  # "compact-support-direct" | "relative-then-duality"
    cohomology_kind: str  # grading carried by the E1 cells
    colmax: int
    column_constraint: str
    complex_dim: int | None = None
    valid_up_to_degree: int | None = None
    degeneration_assumed: bool = False
    degeneration_note: str = ""
    m_algebra: PresentedAlgebra | None = None
    pullback_template: dict | None = None
    _tail_fn: object = field(default=None, repr=False)
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if self.filter_gap < 1:
            raise RangeError("filter gap must be positive")

    def _check_column(self, p: int):
        if p < 0 or p > self.colmax:
            raise ColumnRangeError(
                f"{self.name}: column {p} invalid; {self.column_constraint}"
            )

    def tail_algebra(self, p: int) -> PresentedAlgebra:
        """Algebra of X_(n - e*p) for a presented family."""
        if not self.presented:
            raise DifferentialsUnavailable(
                f"{self.name} carries Betti tables only"
            )
        self._check_column(p)
        key = ("tail", p)
        if key not in self._cache:
            self._cache[key] = self._tail_fn(self.n - self.filter_gap * p)
        return self._cache[key]

    def tail_dims(self, p: int) -> GradedDims:
        """Betti table of X_(n - e*p)."""
        self._check_column(p)
        if self.presented:
            return self.tail_algebra(p).graded_dims()
        return self._tail_fn(self.n - self.filter_gap * p)

    def first_factor_dims(self, p: int) -> GradedDims:
        return sym_ext_dims(self.m_dims, p)


# -- face-map pullbacks -------------------------------------------------------


def _pair_mul(M: PresentedAlgebra, T: PresentedAlgebra, u: dict, v: dict) -> dict:
    """Product in the Koszul-signed tensor M (x) T of sparse pair-vectors."""
    out: dict[tuple[int, int], Fraction] = {}
    for (m1, t1), c1 in u.items():
        dt1 = T.degrees[t1]
        for (m2, t2), c2 in v.items():
            sign = -1 if (dt1 % 2 and M.degrees[m2] % 2) else 1
            mm = M.mult.get((m1, m2))
            if not mm:
                continue
            tt = T.mult.get((t1, t2))
            if not tt:
                continue
            val = sign * c1 * c2
            for mi, cm in mm.items():
                for ti, ct in tt.items():
                    key = (mi, ti)
                    s = out.get(key, Fraction(0)) + val * cm * ct
                    if s:
                        out[key] = s
                    else:
                        out.pop(key, None)
    return out


def _template_generator_image(fam, gname, M, T) -> dict:
    terms = fam.pullback_template.get(gname)
    if terms is None:
        raise AlgebraMismatch(f"{fam.name}: no pullback template for {gname!r}")
    out: dict[tuple[int, int], Fraction] = {}
    for coeff, slot_label, tail_gens in terms:
        mvec = M.unit_vec() if slot_label is None else M.gen(slot_label)
        tvec = T.unit_vec()
        for tg in tail_gens:
            tvec = T.mul_vec(tvec, T.gen(tg))
        for mi, cm in mvec.items():
            for ti, ct in tvec.items():
                key = (mi, ti)
                s = out.get(key, Fraction(0)) + coeff * cm * ct
                if s:
                    out[key] = s
                else:
                    out.pop(key, None)
    return out


def _extend_linear(images, vec: dict) -> dict:
    out: dict[tuple[int, int], Fraction] = {}
    for idx, c in vec.items():
        for key, v in images[idx].items():
            s = out.get(key, Fraction(0)) + c * v
            if s:
                out[key] = s
            else:
                out.pop(key, None)
    return out


def _tail_pullback_images(fam: FamilyDescriptor, p: int):
    """Image of every source-tail basis element in M (x) target-tail.

    This is the pullback of the tail along one face map, independent of the
    slot it lands in.  Checked degree-preserving and multiplicative on
    generator pairs.
    """
    key = ("images", p)
    if key in fam._cache:
        return fam._cache[key]
    M = fam.m_algebra
    src = fam.tail_algebra(p)
    tgt = fam.tail_algebra(p + 1)
    gen_images = [
        _template_generator_image(fam, gname, M, tgt) for gname, _ in src.generators
    ]
    unit_img = {(M.unit_index, tgt.unit_index): Fraction(1)}
    images = []
    for b, fact in enumerate(src.factorizations):
        img = unit_img
        for gpos in fact:
            img = _pair_mul(M, tgt, img, gen_images[gpos])
        images.append(img)
        want = src.degrees[b]
        for (mi, ti) in img:
            if M.degrees[mi] + tgt.degrees[ti] != want:
                raise AlgebraMismatch(
                    f"{fam.name}: face pullback not degree-preserving on "
                    f"{src.basis[b][0]}"
                )
    for gi, (g1, v1) in enumerate(src.generators):
        for gj, (g2, v2) in enumerate(src.generators):
            via_product = _extend_linear(images, src.mul_vec(v1, v2))
            img1 = _extend_linear(images, v1)
            img2 = _extend_linear(images, v2)
            if via_product != _pair_mul(M, tgt, img1, img2):
                raise AlgebraMismatch(
                    f"{fam.name}: face pullback not multiplicative on "
                    f"({g1}, {g2})"
                )
    fam._cache[key] = images
    return images


class AlgebraHom:
    """Pullback along the face inserting a new slot at position i.

    Maps slots^p (x) X_(n-ep) into slots^(p+1) (x) X_(n-e(p+1)): source slot
    j passes through to target slot j (j < i) or j+1 (j >= i); the tail maps
    by the family template with the new M-factor placed in slot i, picking up
    a Koszul sign for crossing the displaced slots.
    """

    def __init__(self, fam: FamilyDescriptor, p: int, i: int):
        if not (1 <= i <= p + 1):
            raise ValueError(f"face index {i} outside 1..{p + 1}")
        fam._check_column(p)
        fam._check_column(p + 1)
        self.family = fam
        self.p = p
        self.i = i
        self.slot_algebra = fam.m_algebra
        self.source_tail = fam.tail_algebra(p)
        self.target_tail = fam.tail_algebra(p + 1)
        self.tail_images = _tail_pullback_images(fam, p)

    def apply(self, x: TensorElement) -> TensorElement:
        M = self.slot_algebra
        if x.slot_algebra is not M or x.tail_algebra is not self.source_tail:
            raise AlgebraMismatch("element does not live in the hom's source")
        if x.p != self.p:
            raise AlgebraMismatch(f"expected {self.p} slots, got {x.p}")
        degs = M.degrees
        pos = self.i - 1
        out = TensorElement(M, self.target_tail, self.p + 1)
        terms = out.terms
        for (slots, t), c in x.terms.items():
            head = slots[:pos]
            rest = slots[pos:]
            crossing_odd = sum(degs[s] for s in rest) % 2
            for (mi, ti), c2 in self.tail_images[t].items():
                sign = -1 if (crossing_odd and degs[mi] % 2) else 1
                key = (head + (mi,) + rest, ti)
                s = terms.get(key, Fraction(0)) + sign * c * c2
                if s:
                    terms[key] = s
                else:
                    terms.pop(key, None)
        return out

    def matrix_on_degree(self, d: int):
        """Full matrix of the hom on the degree-d part of the raw tensor
        spaces (not restricted to invariants); mainly for audits."""
        from .qexact import RationalMatrix

        src = _tensor_degree_basis(self.slot_algebra, self.source_tail, self.p, d)
        tgt = _tensor_degree_basis(
            self.slot_algebra, self.target_tail, self.p + 1, d
        )
        tgt_pos = {key: r for r, key in enumerate(tgt)}
        entries = {}
        for col, (slots, t) in enumerate(src):
            el = TensorElement(self.slot_algebra, self.source_tail, self.p)
            el.terms = {(slots, t): Fraction(1)}
            for key, v in self.apply(el).terms.items():
                entries[(tgt_pos[key], col)] = v
        return RationalMatrix(len(tgt), len(src), entries)


def _tensor_degree_basis(M, T, p, d):
    from itertools import product

    keys = []
    for slots in product(range(M.dim), repeat=p):
        sdeg = sum(M.degrees[s] for s in slots)
        if sdeg > d:
            continue
        for t in range(T.dim):
            if sdeg + T.degrees[t] == d:
                keys.append((slots, t))
    return keys


def face_pullback(fam: FamilyDescriptor, n: int, p: int, i: int) -> AlgebraHom:
    """The i-th face pullback out of column p (1 <= i <= p+1)."""
    if n != fam.n:
        raise RangeError(f"descriptor was built for n={fam.n}, not n={n}")
    if not fam.presented:
        raise DifferentialsUnavailable(
            f"{fam.name} carries Betti tables only; no face pullbacks"
        )
    return AlgebraHom(fam, p, i)


# -- the built-in families ----------------------------------------------------


def family_uconf_plane(n: int) -> FamilyDescriptor:
    """Unordered configurations of n points in the affine line, filtered by
    squaring a root: compact-support Betti tables, filter gap 2.  The two
    cells never share a q, so the first page is final."""
    if n < 0:
        raise RangeError("n must be nonnegative")
    colmax = min(1, n // 2)
    fam = FamilyDescriptor(
        name="uconf-plane",
        params={"n": n},
        n=n,
        filter_gap=2,
        m_dims=compact_support_affine(1),
        presented=False,
        convergence="compact-support-direct",
        cohomology_kind="compact-support",
        colmax=colmax,
        column_constraint=f"valid for p <= {colmax} (one even class, so "
        "columns p >= 2 vanish)",
        complex_dim=n,
    )
    fam._tail_fn = lambda level: compact_support_affine(level)
    return fam


def family_tuples(r: int, n: int) -> FamilyDescriptor:
    """r-tuples of monic degree-n polynomials with no common root, filtered
    by multiplying all entries by a shared linear factor (gap 1).  For r = 1
    the two cells share a q, so only the first page is available."""
    if r < 1:
        raise RangeError("need at least one polynomial in the tuple")
    if n < 0:
        raise RangeError("n must be nonnegative")
    colmax = min(1, n)
    fam = FamilyDescriptor(
        name="tuples",
        params={"r": r, "n": n},
        n=n,
        filter_gap=1,
        m_dims=compact_support_affine(1),
        presented=False,
        convergence="compact-support-direct",
        cohomology_kind="compact-support",
        colmax=colmax,
        column_constraint=f"valid for p <= {colmax}",
        complex_dim=r * n,
    )
    fam._tail_fn = lambda level: compact_support_affine(r * level)
    return fam


def family_uconf_general(dims: GradedDims, n: int,
                         convention: str = "compact-support") -> FamilyDescriptor:
    """Unordered configurations in a space with the given Betti table.

    First page only: differentials are defined downstream only when all
    consecutive columns decouple by q, in which case the page is final.  The
    caller chooses whether the table is ordinary or compact-support; the cell
    dimensions are the same either way.
    """
    if n < 0:
        raise RangeError("n must be nonnegative")
    if convention not in ("compact-support", "ordinary"):
        raise RangeError(f"unknown cohomology convention {convention!r}")
    dims = {d: b for d, b in dims.items() if b}
    for d, b in dims.items():
        if d < 0 or b < 0:
            raise RangeError(f"invalid Betti table entry {d}: {b}")
    colmax = 0
    for p in range(n // 2 + 1):
        if sym_ext_dims(dims, p):
            colmax = p
        else:
            break
    fam = FamilyDescriptor(
        name="uconf-general",
        params={"n": n, "dims": dict(sorted(dims.items()))},
        n=n,
        filter_gap=2,
        m_dims=dims,
        presented=False,
        convergence="compact-support-direct",
        cohomology_kind=convention,
        colmax=colmax,
        column_constraint=f"valid for p <= {colmax}",
        complex_dim=None,
    )
    fam._tail_fn = lambda level: macdonald_sym(dims, level)
    return fam


def _pencil_template(k: int, g: int) -> dict:
    """Generator images under one face pullback: each Chern root of the
    tautological bundle shifts by minus the slot's degree-2 class, and each
    torus generator a_r picks up the matching curve class alpha_r."""
    template = {}
    for j in range(1, k + 1):
        terms = [(1, None, (f"c{j}",))]
        lower = (f"c{j - 1}",) if j > 1 else ()
        terms.append((-(k - j + 1), "e", lower))
        template[f"c{j}"] = terms
    for rname in range(1, 2 * g + 1):
        template[f"a{rname}"] = [
            (1, None, (f"a{rname}",)),
            (1, f"alpha{rname}", ()),
        ]
    return template


def family_pencils_p1(m: int, n: int) -> FamilyDescriptor:
    """Degree-n pencils (rank m+1 linear systems) on the projective line,
    filtered by multiplying all sections by a linear form (gap 1).

    X_n is the Grassmannian of (m+1)-planes in (n+1)-space; the page
    converges to the relative cohomology of the pair, dualized to ordinary
    Betti numbers of the basepoint-free locus.
    """
    if m < 1:
        raise RangeError("target projective space must have dimension >= 1")
    if n < 2:
        raise RangeError("need n >= 2 for a nondegenerate pencil space")
    k = m + 1
    colmax = min(2, n + 1 - k)
    if colmax < 0:
        raise RangeError(f"no valid columns for m={m}, n={n}")
    fam = FamilyDescriptor(
        name="pencils-p1",
        params={"m": m, "n": n},
        n=n,
        filter_gap=1,
        m_dims=curve_algebra(0).graded_dims(),
        presented=True,
        convergence="relative-then-duality",
        cohomology_kind="ordinary",
        colmax=colmax,
        column_constraint=f"valid for p <= {colmax} (rank-2 slot algebra "
        "kills p >= 3; deeper columns have empty section spaces)",
        complex_dim=k * (n + 1 - k),
        m_algebra=curve_algebra(0),
        pullback_template=_pencil_template(k, 0),
        degeneration_assumed=False,
    )
    fam._tail_fn = lambda level: grassmann_algebra(k, level + 1)
    return fam


def family_pencils_curve(g: int, n: int, pair_order=None) -> FamilyDescriptor:
    """Degree-n pencils on a genus-g curve, filtered by adding a basepoint.

    Valid for n >= 2g, columns p <= n - 2g; X_(n-p) splits as the Picard
    torus tensor the Grassmannian of 2-planes in the section space.  The
    pages degenerate at the second page (smooth projective members), and the
    output Betti numbers are certified up to degree n - 2g (every degree for
    g = 0, where the family reduces to pencils on the projective line).
    """
    if g < 0:
        raise RangeError("genus must be nonnegative")
    if n < 2 * g:
        raise StableRangeError(
            f"pencils-curve is valid for n >= 2g (got n={n}, g={g})"
        )
    if g == 0:
        colmax = min(2, n - 1)
    else:
        colmax = n - 2 * g
    if colmax < 0:
        raise StableRangeError(f"no valid columns for g={g}, n={n}")
    fam = FamilyDescriptor(
        name="pencils-curve",
        params={"g": g, "n": n},
        n=n,
        filter_gap=1,
        m_dims=curve_algebra(g).graded_dims(),
        presented=True,
        convergence="relative-then-duality",
        cohomology_kind="ordinary",
        colmax=colmax,
        column_constraint=f"valid for p <= n - 2g = {n - 2 * g}"
        if g
        else f"valid for p <= {colmax}",
        complex_dim=g + 2 * (n - g - 1),
        valid_up_to_degree=None if g == 0 else n - 2 * g,
        m_algebra=curve_algebra(g, pair_order),
        pullback_template=_pencil_template(2, g),
        degeneration_assumed=g >= 1,
        degeneration_note="smooth projective members: no differentials past "
        "the second page" if g >= 1 else "",
    )
    pic = picard_algebra(g, pair_order)
    fam._tail_fn = lambda level: tensor_algebra(
        pic, grassmann_algebra(2, level - g + 1)
    )
    return fam


FAMILY_NAMES = (
    "uconf-plane",
    "uconf-general",
    "tuples",
    "pencils-p1",
    "pencils-curve",
)
