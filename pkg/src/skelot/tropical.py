"""Min-plus valuations of monomial sections and their linear algebra.

A section is a finite set of monomial terms; its valuation at a point x of a
face is min over terms of <x, alpha> + t_order.  Wall detection, equivalence
classes of exponents and the independence verdict are exact (Fraction); only
the Lipschitz bound uses floats.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence, Union

import numpy as np

from .errors import PointOffFace, TieOnRegion, TruncationExhausted
from .polyhedral import Face, Point, as_point


@dataclass(frozen=True)
class MonomialTerm:
    exponent: tuple[int, ...]
    t_order: int = 0
    coeff_id: Optional[str] = None

    def __post_init__(self):
        object.__setattr__(self, "exponent", tuple(int(a) for a in self.exponent))
        object.__setattr__(self, "t_order", int(self.t_order))

    def value_at(self, x: Sequence[Fraction]) -> Fraction:
        return sum(Fraction(c) * a for c, a in zip(x, self.exponent)) + self.t_order


@dataclass(frozen=True)
class TropicalSection:
    terms: tuple[MonomialTerm, ...]
    level: int = 1
    label: Optional[tuple] = None

    def __post_init__(self):
        if not self.terms:
            raise ValueError("a section needs at least one term")
        keys = [(t.exponent, t.t_order) for t in self.terms]
        if len(set(keys)) != len(keys):
            raise ValueError("duplicate (exponent, t_order) pair in section")


def _check_on_face(face: Face, x: Point) -> None:
    lam = face.barycentric(x)
    if lam is None or any(v < -Fraction(1, 10**12) for v in lam):
        raise PointOffFace(f"{x} is not on the face")


def val_at(section: TropicalSection, x: Sequence, face: Optional[Face] = None) -> Fraction:
    """Minimal weighted vanishing order of the section at x (exact)."""
    pt = as_point(x)
    if face is not None:
        _check_on_face(face, pt)
    return min(t.value_at(pt) for t in section.terms)


def val_argmin(section: TropicalSection, x: Sequence) -> tuple[Fraction, list[int]]:
    pt = as_point(x)
    vals = [t.value_at(pt) for t in section.terms]
    best = min(vals)
    return best, [i for i, v in enumerate(vals) if v == best]


# -- dominance regions ---------------------------------------------------------


@dataclass(frozen=True)
class Region:
    """An open polyhedral domain of a face with per-section dominant terms."""

    face: Face
    chart_interval: Optional[tuple[Fraction, Fraction]]  # None: whole face
    sample: Point
    dominant: tuple[Optional[int], ...]  # term index per section, None on tie
    tie: bool


def _dominant_at(sections: Sequence[TropicalSection], x: Point):
    dom: list[Optional[int]] = []
    tie = False
    for s in sections:
        _, idxs = val_argmin(s, x)
        if len(idxs) == 1:
            dom.append(idxs[0])
        else:
            dom.append(idxs[0])  # lowest index, flagged
            tie = True
    return tuple(dom), tie


def dominant_regions(sections: Sequence[TropicalSection], face: Face) -> list[Region]:
    """Partition of the face interior by dominant monomial terms.

    Walls are found exactly on 1-dimensional faces.  On higher-dimensional
    faces only the wall-free case is decomposed; anything else collapses to a
    single whole-face region carrying the tie flag.
    """
    if face.dim == 1:
        lo = min(face.chart(v)[0] for v in face.vertices)
        hi = max(face.chart(v)[0] for v in face.vertices)
        walls: set[Fraction] = set()
        for s in sections:
            for i in range(len(s.terms)):
                for j in range(i + 1, len(s.terms)):
                    # value difference is affine in the chart coordinate
                    f0 = s.terms[i].value_at(face.unchart([lo])) - \
                        s.terms[j].value_at(face.unchart([lo]))
                    f1 = s.terms[i].value_at(face.unchart([hi])) - \
                        s.terms[j].value_at(face.unchart([hi]))
                    if f0 == f1:
                        continue
                    root = lo + (hi - lo) * f0 / (f0 - f1)
                    if lo < root < hi:
                        walls.add(root)
        cuts = [lo] + sorted(walls) + [hi]
        regions = []
        for a, b in zip(cuts, cuts[1:]):
            mid = (a + b) / 2
            sample = face.unchart([mid])
            dom, tie = _dominant_at(sections, sample)
            regions.append(Region(face, (a, b), sample, dom, tie))
        return regions

    # wall-free check on higher-dimensional faces
    centroid = tuple(sum(col) / len(face.vertices) for col in zip(*face.vertices))
    dom, tie = _dominant_at(sections, centroid)
    if not tie:
        # a term minimal at every vertex is minimal on the whole simplex
        for s, d in zip(sections, dom):
            for v in face.vertices:
                vals = [t.value_at(v) for t in s.terms]
                if vals[d] > min(vals):
                    tie = True
                    break
    return [Region(face, None, centroid, dom, tie)]


# -- exponent classes and independence ----------------------------------------


def exponent_classes(terms: Sequence[Sequence[int]],
                     b: Sequence[int]) -> list[list[int]]:
    """Partition indices of exponent vectors by alpha ~ alpha + n*b, n in Z."""
    vecs = [tuple(int(a) for a in t) for t in terms]
    bv = tuple(int(x) for x in b)
    if any(len(v) != len(bv) for v in vecs):
        raise ValueError("exponent length does not match multiplicity vector")
    groups: dict[tuple, list[int]] = {}
    for i, v in enumerate(vecs):
        # membership requires the full vector difference to be a multiple of b
        placed = False
        for rep, members in groups.items():
            delta = tuple(a - r for a, r in zip(v, vecs[members[0]]))
            n = None
            ok = True
            for d, x in zip(delta, bv):
                if x == 0:
                    if d != 0:
                        ok = False
                        break
                else:
                    q, r = divmod(d, x)
                    if r != 0 or (n is not None and q != n):
                        ok = False
                        break
                    n = q
            if ok:
                members.append(i)
                placed = True
                break
        if not placed:
            groups[(i,)] = [i]
    return list(groups.values())


@dataclass(frozen=True)
class IndependenceWitness:
    class_sections: tuple[int, ...]      # section indices in the failing class
    kernel: tuple[Fraction, ...]         # combination with vanishing coefficients
    sample: Point


@dataclass(frozen=True)
class IndependenceVerdict:
    independent: bool
    witness: Optional[IndependenceWitness] = None


def _kernel_vector(vectors: list[list[Fraction]]) -> Optional[list[Fraction]]:
    from . import _linalg
    cols = [list(row) for row in zip(*vectors)]  # matrix with vectors as columns
    ker = _linalg.nullspace(cols)
    return ker[0] if ker else None


def check_valuative_independence(
        sections: Sequence[TropicalSection],
        where: Union[Region, Face],
        coeff_vectors: dict,
        b: Optional[Sequence[int]] = None) -> IndependenceVerdict:
    """Verdict on the independence of sections over a region (or whole face).

    Dominant terms are grouped into exponent classes modulo Z*b; within each
    class the coefficient vectors must be linearly independent.  A failing
    class is reported with a kernel combination as witness.
    """
    if isinstance(where, Face):
        regions = dominant_regions(sections, where)
    else:
        regions = [where]
    for region in regions:
        if region.tie:
            raise TieOnRegion("dominant term not unique; refine the region")
        dom_terms = [s.terms[d] for s, d in zip(sections, region.dominant)]
        if b is not None:
            bv = tuple(int(x) for x in b)
        elif region.face.multiplicities is not None:
            bv = region.face.multiplicities
        else:
            bv = tuple(0 for _ in dom_terms[0].exponent)
        classes = exponent_classes([t.exponent for t in dom_terms], bv)
        for members in classes:
            if len(members) < 2:
                continue
            vecs = [[Fraction(v) for v in coeff_vectors[dom_terms[i].coeff_id]]
                    for i in members]
            ker = _kernel_vector(vecs)
            if ker is not None:
                return IndependenceVerdict(
                    independent=False,
                    witness=IndependenceWitness(tuple(members), tuple(ker),
                                                region.sample))
    return IndependenceVerdict(independent=True)


# -- truncated series row reduction --------------------------------------------


@dataclass(frozen=True)
class TSeries:
    """Truncated Laurent series in t with exact rational coefficients."""

    coeffs: tuple[tuple[int, Fraction], ...]  # sorted, nonzero
    truncation: int

    @staticmethod
    def make(data, truncation: int) -> "TSeries":
        if isinstance(data, dict):
            items = data.items()
        else:  # polynomial coefficient list starting at t^0
            items = enumerate(data)
        coeffs = tuple(sorted((int(k), Fraction(v)) for k, v in items
                              if Fraction(v) != 0 and int(k) < truncation))
        return TSeries(coeffs, int(truncation))

    def is_zero(self) -> bool:
        return not self.coeffs

    def constant(self) -> Fraction:
        for k, v in self.coeffs:
            if k == 0:
                return v
        return Fraction(0)

    def valuation(self) -> Optional[int]:
        return self.coeffs[0][0] if self.coeffs else None

    def add(self, other: "TSeries") -> "TSeries":
        trunc = min(self.truncation, other.truncation)
        acc: dict[int, Fraction] = dict(self.coeffs)
        for k, v in other.coeffs:
            acc[k] = acc.get(k, Fraction(0)) + v
        return TSeries.make(acc, trunc)

    def scale(self, c) -> "TSeries":
        c = Fraction(c)
        return TSeries.make({k: c * v for k, v in self.coeffs}, self.truncation)

    def shift(self, n: int) -> "TSeries":
        return TSeries(tuple((k + n, v) for k, v in self.coeffs),
                       self.truncation + n)

    def mul(self, other: "TSeries") -> "TSeries":
        lo_s = self.coeffs[0][0] if self.coeffs else 0
        lo_o = other.coeffs[0][0] if other.coeffs else 0
        trunc = min(self.truncation + lo_o, other.truncation + lo_s)
        acc: dict[int, Fraction] = {}
        for k1, v1 in self.coeffs:
            for k2, v2 in other.coeffs:
                if k1 + k2 < trunc:
                    acc[k1 + k2] = acc.get(k1 + k2, Fraction(0)) + v1 * v2
        return TSeries.make(acc, trunc)


@dataclass(frozen=True)
class SeriesMatrix:
    entries: tuple[tuple[TSeries, ...], ...]
    truncation_order: int = 16

    @staticmethod
    def make(rows, truncation_order: int = 16) -> "SeriesMatrix":
        out = []
        for row in rows:
            out.append(tuple(e if isinstance(e, TSeries)
                             else TSeries.make(e, truncation_order) for e in row))
        return SeriesMatrix(tuple(out), truncation_order)

    def matmul(self, other: "SeriesMatrix") -> "SeriesMatrix":
        n = len(other.entries[0])
        rows = []
        for row in self.entries:
            out_row = []
            for j in range(n):
                acc = TSeries((), self.truncation_order)
                for k, e in enumerate(row):
                    acc = acc.add(e.mul(other.entries[k][j]))
                out_row.append(acc)
            rows.append(tuple(out_row))
        return SeriesMatrix(tuple(rows), self.truncation_order)


@dataclass(frozen=True)
class ReducedSystem:
    transform: SeriesMatrix
    reduced: SeriesMatrix
    pivot_count: int
    mu_shifted: tuple
    row_order: tuple[int, ...]


def series_row_reduce(system: SeriesMatrix, mu: Sequence) -> ReducedSystem:
    """Row reduction over truncated series by constant-term elimination.

    Rows are processed in order of decreasing mu; eliminating a row's constant
    terms against the pivot rows either exposes a new pivot or makes the row
    divisible by t, in which case it is divided and its exponent shifted up by
    one.  The accumulated transform is invertible (permutation, unit constant
    eliminations, and t-shifts).
    """
    nrows = len(system.entries)
    ncols = len(system.entries[0]) if nrows else 0
    order = sorted(range(nrows), key=lambda i: (-Fraction(mu[i]), i))
    rows = [list(system.entries[i]) for i in order]
    mu_s = [Fraction(mu[i]) for i in order]
    trunc = system.truncation_order
    ident = [[TSeries.make({0: 1} if i == j else {}, trunc) for j in range(nrows)]
             for i in range(nrows)]
    transform = [list(ident[i]) for i in range(nrows)]

    pivots: list[int] = []  # row indices that hold pivots

    def const_vec(r: int) -> list[Fraction]:
        return [e.constant() for e in rows[r]]

    for r in range(nrows):
        shifts = 0
        while True:
            # eliminate against existing pivots on constant terms
            for p in pivots:
                pc = const_vec(p)
                rc = const_vec(r)
                lead = next((j for j, v in enumerate(pc) if v != 0), None)
                if lead is not None and rc[lead] != 0:
                    lam = rc[lead] / pc[lead]
                    rows[r] = [a.add(bb.scale(-lam)) for a, bb in zip(rows[r], rows[p])]
                    transform[r] = [a.add(bb.scale(-lam))
                                    for a, bb in zip(transform[r], transform[p])]
            rc = const_vec(r)
            if any(v != 0 for v in rc):
                pivots.append(r)
                break
            if all(e.is_zero() for e in rows[r]):
                break  # genuinely zero row: dropped, not a pivot
            shifts += 1
            if shifts > trunc:
                raise TruncationExhausted("row reduction needs more t-depth")
            rows[r] = [e.shift(-1) for e in rows[r]]
            transform[r] = [e.shift(-1) for e in transform[r]]
            mu_s[r] += 1

    # normalize pivot rows so pivot constants lead with nonzero entries first
    reduced = SeriesMatrix(tuple(tuple(row) for row in rows), trunc)
    tmat = SeriesMatrix(tuple(tuple(row) for row in transform), trunc)
    return ReducedSystem(transform=tmat, reduced=reduced,
                         pivot_count=len(pivots),
                         mu_shifted=tuple(mu_s), row_order=tuple(order))


# -- Lipschitz bound -------------------------------------------------------------


def lipschitz_bound(section: TropicalSection, face: Face) -> float:
    """Upper Lipschitz constant of level-normalized val_at on the face.

    Chart: ambient-Euclidean (the face's lattice basis orthonormalized by QR).
    """
    if face.dim == 0:
        return 0.0
    basis = np.array(face.lattice_basis, dtype=float).T  # ambient x m
    q, _ = np.linalg.qr(basis)
    best = 0.0
    for t in section.terms:
        grad = q.T @ np.array(t.exponent, dtype=float)
        best = max(best, float(np.linalg.norm(grad)))
    return best / section.level
