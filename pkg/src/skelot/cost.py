"""Cost functions c(x, p) on source x target.

Three constructions ship: the ambient bilinear pairing between polar-dual
boundary complexes, the level-normalized limit of theta valuations, and the
closed-form periodic theta cost (level-homogeneous, so the level-1 value
already equals the limit).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import floor
from typing import Callable, Optional, Sequence

from .errors import DimensionMismatch, MissingLevel, WindowNotConverged
from .polyhedral import IntegralPolyhedralComplex, Point, as_point
from .tropical import MonomialTerm, TropicalSection, val_at

F = Fraction


@dataclass
class CostFunction:
    source: Optional[IntegralPolyhedralComplex]
    target: Optional[IntegralPolyhedralComplex]
    evaluator: Callable[[Sequence, Sequence], Fraction]
    lipschitz_x: float
    convex_in_p: bool = False
    metadata: dict = field(default_factory=dict)

    def __call__(self, x: Sequence, p: Sequence):
        return self.evaluator(x, p)

    def boundary_face(self, p: Sequence) -> Optional[int]:
        """Incident top face with the largest index (evaluation convention
        for non-interior target points); records a boundary flag."""
        if self.target is None:
            return None
        incident = self.target.top_faces_containing(p)
        if not incident:
            return None
        lam = self.target.faces[incident[-1]].barycentric(as_point(p))
        if len(incident) != 1 or lam is None or any(v <= 0 for v in lam):
            self.metadata["boundary_evaluations"] = \
                self.metadata.get("boundary_evaluations", 0) + 1
        return incident[-1]

    def transpose(self) -> "CostFunction":
        """Swapped-role cost c^T(p, x) = c(x, p)."""
        ev = self.evaluator
        return CostFunction(
            source=self.target, target=self.source,
            evaluator=lambda p, x: ev(x, p),
            lipschitz_x=self.lipschitz_x,
            convex_in_p=False,
            metadata={**self.metadata, "transposed": True})


def pairing_cost(source: IntegralPolyhedralComplex,
                 target: IntegralPolyhedralComplex) -> CostFunction:
    """c(x, p) = <x, p>, the ambient bilinear pairing (exact)."""
    if source.ambient_dim != target.ambient_dim:
        raise DimensionMismatch(
            f"source dim {source.ambient_dim} != target dim {target.ambient_dim}")

    def ev(x, p):
        return sum(F(a) * F(b) for a, b in zip(as_point(x), as_point(p)))

    lip = max(
        float(sum(F(c) * F(c) for c in v)) ** 0.5
        for f in target.faces for v in f.vertices)
    return CostFunction(source, target, ev, lipschitz_x=lip,
                        convex_in_p=True, metadata={"kind": "pairing"})


# -- Mumford data and the periodic theta cost -----------------------------------


@dataclass(frozen=True)
class PhiAxis:
    """One axis of a strictly convex piecewise-linear function.

    Slope on [k, k+1] is base_slope + quad*k (integral, strictly increasing),
    with value 0 at the origin; the lattice direction is identified with
    period * Z.  The default reproduces Phi(k) = k(k+1)/2.
    """

    base_slope: int = 1
    quad: int = 1
    period: int = 1

    def __post_init__(self):
        if self.quad < 1 or self.period < 1:
            raise ValueError("need quad >= 1 and period >= 1")

    def slope(self, k: int) -> int:
        return self.base_slope + self.quad * k

    def value(self, m) -> Fraction:
        m = F(m)
        k = floor(m)
        # Phi(k) = sum of slopes of the unit intervals between 0 and k
        if k >= 0:
            base = sum(self.slope(j) for j in range(k))
        else:
            base = -sum(self.slope(j) for j in range(k, 0))
        return F(base) + self.slope(k) * (m - k)


@dataclass(frozen=True)
class MumfordData:
    """Lattice, sublattice and convex PL data generating periodic theta bases.

    Axes are independent rank-1 blocks (the sublattice is diagonal), which
    covers the shipped rank-1 and rank-2 instances.
    """

    axes: tuple[PhiAxis, ...]

    @property
    def rank(self) -> int:
        return len(self.axes)

    @property
    def periods(self) -> tuple[int, ...]:
        return tuple(a.period for a in self.axes)

    def phi(self, m: Sequence) -> Fraction:
        pt = as_point(m)
        return sum(a.value(c) for a, c in zip(self.axes, pt))

    def reduce(self, m: Sequence) -> Point:
        """Canonical lift into the fundamental domain prod [0, period)."""
        pt = as_point(m)
        out = []
        for a, c in zip(self.axes, pt):
            g = a.period
            out.append(c - g * floor(c / g))
        return tuple(out)

    def periodicity_defect(self, m: Sequence, gamma: Sequence[int]) -> Fraction:
        """Phi(m+gamma) - Phi(m) minus its affine model; zero for valid data."""
        pt = as_point(m)
        defect = F(0)
        for a, c, gk in zip(self.axes, pt, gamma):
            g = gk * a.period
            # affine model evaluated from the slope recursion at two points
            d0 = a.value(F(g)) - a.value(F(0))
            d1 = a.value(F(g) + 1) - a.value(F(1))
            affine = d0 + (d1 - d0) * c
            defect += a.value(c + g) - a.value(c) - affine
        return defect


def _axis_argmin(axis: PhiAxis, x: Fraction, p: Fraction,
                 max_radius: int = 4096) -> tuple[Fraction, int]:
    """min over k of x*(p + g*k) + Phi(p + g*k); certified by convexity."""
    g = axis.period
    radius = 4
    while radius <= max_radius:
        vals = {k: x * (p + g * k) + axis.value(p + g * k)
                for k in range(-radius, radius + 1)}
        kbest = min(vals, key=lambda k: (vals[k], k))
        if -radius < kbest < radius:
            return vals[kbest], kbest
        radius *= 2
    raise WindowNotConverged("theta window did not certify an interior minimum")


def abelian_theta_cost(data: MumfordData, x: Sequence, p: Sequence) -> Fraction:
    """c(x, p) = - min_gamma [<x, p+gamma> + Phi(p+gamma)] on the quotient.

    Both arguments are reduced to the canonical fundamental-domain lift
    first, so the value is invariant under lattice translations in either
    slot.  Level-homogeneous: the level-1 value equals the limit value.
    """
    xr = data.reduce(x)
    pr = data.reduce(p)
    total = F(0)
    for axis, xi, pi in zip(data.axes, xr, pr):
        v, _ = _axis_argmin(axis, xi, pi)
        total += v
    return -total


def abelian_cost(data: MumfordData,
                 source: Optional[IntegralPolyhedralComplex] = None,
                 target: Optional[IntegralPolyhedralComplex] = None) -> CostFunction:
    # |d c / d x_i| <= |p_i + gamma_i*| which stays inside the certified window
    lip = float(sum((8 * a.period) ** 2 for a in data.axes)) ** 0.5
    return CostFunction(source, target,
                        lambda x, p: abelian_theta_cost(data, x, p),
                        lipschitz_x=lip, convex_in_p=True,
                        metadata={"kind": "abelian", "exact": True})


def theta_section(data: MumfordData, level: int, label: Sequence,
                  window: int = 8) -> TropicalSection:
    """Truncated theta section at a level-l label point of the quotient.

    Terms carry exponent l*(m+gamma) and t-order l*Phi(m+gamma); the window
    is certified when evaluations keep their argmin strictly interior.
    """
    m = data.reduce(label)
    if any((level * c).denominator != 1 for c in m):
        raise ValueError("label must be a level-l rational point")
    terms = []
    ranges = [range(-window, window + 1)] * data.rank

    def rec(idx: int, gamma: list[int]):
        if idx == data.rank:
            shift = tuple(mi + a.period * gk for mi, a, gk in zip(m, data.axes, gamma))
            expo = tuple(int(level * c) for c in shift)
            t_ord = level * data.phi(shift)
            if t_ord.denominator != 1:
                raise ValueError("non-integral t-order; inconsistent level data")
            terms.append(MonomialTerm(expo, int(t_ord),
                                      coeff_id=f"theta{tuple(m)}g{tuple(gamma)}"))
            return
        for gk in ranges[idx]:
            rec(idx + 1, gamma + [gk])

    rec(0, [])
    return TropicalSection(tuple(terms), level=level, label=tuple(m))


@dataclass(frozen=True)
class ThetaFamily:
    """Sections per level, labeled by rational points of the target."""

    levels: dict
    multiplicity: Optional[dict] = None  # (level, label) -> positive integer

    def sections(self, level: int) -> tuple[TropicalSection, ...]:
        if level not in self.levels:
            raise MissingLevel(f"level {level} not available")
        return tuple(self.levels[level])

    def labels(self, level: int) -> list[tuple]:
        return [s.label for s in self.sections(level)]

    def section_at(self, level: int, label: Sequence) -> TropicalSection:
        target = as_point(label)
        for s in self.sections(level):
            if s.label == target:
                return s
        raise MissingLevel(f"label {target} missing at level {level}")

    def nearest_label(self, level: int, p: Sequence) -> tuple:
        target = as_point(p)
        labels = self.labels(level)
        if not labels:
            raise MissingLevel(f"no labels at level {level}")

        def key(lab):
            d = sum((a - b) ** 2 for a, b in zip(lab, target))
            return (d, lab)

        return min(labels, key=key)

    def mult(self, level: int, label) -> int:
        if self.multiplicity is None:
            return 1
        return self.multiplicity.get((level, tuple(label)), 1)


def fekete_cost_estimate(family: ThetaFamily, x: Sequence, p: Sequence,
                         level_schedule: Sequence[int]) -> dict:
    """Level-normalized valuations -val/l along a schedule of levels.

    The supremum over levels is a certified lower bound for the limit cost;
    the last level is reported as the running estimate.
    """
    per_level = []
    for l in level_schedule:
        label = family.nearest_label(l, p)
        sec = family.section_at(l, label)
        per_level.append(-F(val_at(sec, x)) / l)
    return {
        "per_level": per_level,
        "estimate": per_level[-1],
        "lower_bound": max(per_level),
    }


# -- bound verification ------------------------------------------------------------


@dataclass(frozen=True)
class CostBoundReport:
    n_lower_bound_checks: int
    n_subadditivity_checks: int
    violations: tuple


def verify_cost_bounds(family: ThetaFamily, cost: CostFunction,
                       samples: Sequence[tuple], tolerance=F(1, 10**9)) -> CostBoundReport:
    """Check -val/l >= c and the midpoint subadditivity of valuations.

    samples are (x, p, l) triples; subadditivity is tested on every pair of
    triples sharing the same x whose combined level and midpoint label exist
    in the family.  Violations are reported, never raised.
    """
    tol = F(tolerance)
    violations = []
    n_bound = 0
    n_sub = 0
    prepared = []
    for x, p, l in samples:
        label = family.nearest_label(l, as_point(p))
        sec = family.section_at(l, label)
        v = F(val_at(sec, x))
        prepared.append((as_point(x), label, int(l), sec, v))
        n_bound += 1
        if -v / l < F(cost(x, label)) - tol:
            violations.append(("lower_bound", x, label, l, -v / l))

    by_x: dict[Point, list] = {}
    for entry in prepared:
        by_x.setdefault(entry[0], []).append(entry)
    for x, group in by_x.items():
        for i in range(len(group)):
            for j in range(i, len(group)):
                _, p1, l1, s1, v1 = group[i]
                _, p2, l2, s2, v2 = group[j]
                lsum = l1 + l2
                mid = tuple((l1 * a + l2 * b) / lsum for a, b in zip(p1, p2))
                try:
                    smid = family.section_at(lsum, family.nearest_label(lsum, mid))
                except MissingLevel:
                    continue
                if smid.label != as_point(mid):
                    continue
                n_sub += 1
                if v1 + v2 > F(val_at(smid, x)) + tol:
                    violations.append(("subadditivity", x, p1, l1, p2, l2))
    return CostBoundReport(n_bound, n_sub, tuple(violations))
