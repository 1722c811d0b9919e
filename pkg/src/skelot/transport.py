"""c-transforms, the dual functional, its minimization, and energy sums.

The sign convention pairs minimization of F(phi) = int phi dmu0 +
int W phi^c dnu0 with maximization of the plan correlation int c dpi;
feasible potentials satisfy phi(x) + psi(p) >= c(x, p) with equality on the
support of an optimal plan.  Two independent routes compute the optimum: a
flow-based finisher inside minimize_kontorovich and an exact simplex in
lp_oracle; their agreement is a standing cross-check, so neither may call
the other.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import factorial
from typing import Callable, Optional, Sequence

import numpy as np

from . import _flow, _simplex
from .cost import CostFunction, ThetaFamily
from .errors import EmptyGrid, GridMismatch, InfeasibleMarginals, SizeCapExceeded
from .polyhedral import DiscreteMeasure, Point, as_point
from .tropical import val_at

F = Fraction


@dataclass(frozen=True)
class PotentialField:
    """Real-valued function on a finite grid, stored exactly.

    Values are exact rationals; floats convert losslessly (binary
    rationals), which is what makes repeated transforms bit-stable.
    """

    points: tuple[Point, ...]
    values: tuple[Fraction, ...]
    argmax: Optional[tuple[int, ...]] = None  # per-point witness indices

    def __post_init__(self):
        object.__setattr__(self, "points", tuple(as_point(p) for p in self.points))
        object.__setattr__(self, "values", tuple(F(v) for v in self.values))
        if len(self.points) != len(self.values):
            raise GridMismatch("points and values differ in length")

    @property
    def sup_bound(self) -> float:
        return float(max(abs(v) for v in self.values))

    def as_array(self) -> np.ndarray:
        return np.array([float(v) for v in self.values])

    def shifted(self, a) -> "PotentialField":
        a = F(a)
        return PotentialField(self.points, tuple(v + a for v in self.values))


def _cost_entry(cost, x, p, direction: str) -> Fraction:
    if direction == "source_to_target":
        return F(cost(x, p))
    if direction == "target_to_source":
        return F(cost(p, x))
    raise ValueError(f"unknown direction {direction!r}")


def c_transform(f: PotentialField, cost, grid: Sequence,
                direction: str = "source_to_target") -> PotentialField:
    """f^c(y) = max over the grid of f of c(.,.) - f, exactly.

    cost may be a CostFunction or any callable taking exact coordinates;
    ties go to the lowest index and the argmax indices are retained.
    """
    if not f.points or not list(grid):
        raise EmptyGrid("c-transform needs nonempty grids on both sides")
    out_vals = []
    out_arg = []
    for y in grid:
        yp = as_point(y)
        best = None
        bi = -1
        for i, (z, fz) in enumerate(zip(f.points, f.values)):
            v = _cost_entry(cost, z, yp, direction) - fz
            if best is None or v > best:
                best, bi = v, i
        out_vals.append(best)
        out_arg.append(bi)
    return PotentialField(tuple(as_point(y) for y in grid), tuple(out_vals),
                          argmax=tuple(out_arg))


def project_Pc(f: PotentialField, cost, opposite_grid: Sequence,
               direction: str = "source_to_target") -> PotentialField:
    """(f^c)^c on f's own grid; <= f pointwise and idempotent."""
    back = "target_to_source" if direction == "source_to_target" else "source_to_target"
    fc = c_transform(f, cost, opposite_grid, direction)
    return c_transform(fc, cost, f.points, back)


class TransportProblem:
    """Cost + marginals + weight + normalization: one variational instance."""

    def __init__(self, cost: CostFunction, mu0: DiscreteMeasure,
                 nu0: DiscreteMeasure,
                 weight: Optional[Callable] = None, ln_norm: float = 1.0):
        self.cost = cost
        self.mu0 = mu0
        self.nu0 = nu0
        self.weight = weight
        self.ln_norm = float(ln_norm)
        if abs(mu0.total_mass - 1.0) > 1e-9:
            raise InfeasibleMarginals("source measure must have mass 1")
        w = [1.0 if weight is None else float(weight(p)) for p in nu0.points]
        if any(x < 0 for x in w):
            raise InfeasibleMarginals("weight must be non-negative")
        self.target_mass = tuple(wi * float(vi)
                                 for wi, vi in zip(w, nu0.weights))
        if abs(sum(self.target_mass) - 1.0) > 1e-9:
            raise InfeasibleMarginals("weighted target mass must be 1")
        self._exact_cost = None
        self._cost_array = None

    @property
    def exact_cost(self) -> list:
        if self._exact_cost is None:
            self._exact_cost = [
                [F(self.cost(x, p)) for p in self.nu0.points]
                for x in self.mu0.points]
        return self._exact_cost

    @property
    def cost_array(self) -> np.ndarray:
        if self._cost_array is None:
            self._cost_array = np.array(
                [[float(c) for c in row] for row in self.exact_cost])
        return self._cost_array

    def transform(self, phi: PotentialField) -> PotentialField:
        """Exact phi^c on the target grid using the cached cost matrix."""
        if phi.points != self.mu0.points:
            raise GridMismatch("potential not on the source grid")
        mat = self.exact_cost
        vals = []
        args = []
        for j in range(len(self.nu0.points)):
            best = None
            bi = -1
            for i, fv in enumerate(phi.values):
                v = mat[i][j] - fv
                if best is None or v > best:
                    best, bi = v, i
            vals.append(best)
            args.append(bi)
        return PotentialField(self.nu0.points, tuple(vals), argmax=tuple(args))


@dataclass(frozen=True)
class TransportResult:
    phi: PotentialField
    psi: PotentialField
    value: float
    plan: Optional[np.ndarray]
    gap: float
    iterations: int
    converged: bool = True


def kontorovich_value(problem: TransportProblem, phi: PotentialField) -> float:
    """int phi dmu0 + int W phi^c dnu0 over the discrete measures."""
    if phi.points != problem.mu0.points:
        raise GridMismatch("potential not on the source grid")
    psi = problem.transform(phi)
    mu_part = sum(float(w) * float(v)
                  for w, v in zip(problem.mu0.weights, phi.values))
    nu_part = sum(m * float(v)
                  for m, v in zip(problem.target_mass, psi.values))
    return mu_part + nu_part


def _mean_zero(problem: TransportProblem, values) -> tuple:
    vals = [F(v) for v in values]
    mean = sum(F(w) * v for w, v in zip(problem.mu0.weights, vals))
    return tuple(v - mean for v in vals)


def minimize_kontorovich(problem: TransportProblem, max_iter: int = 60,
                         tol: float = 1e-9, method: str = "auto",
                         damping: float = 0.5,
                         initial: Optional[PotentialField] = None,
                         want_plan: bool = True) -> TransportResult:
    """Minimize F over P_c; result normalized to mean zero against mu0.

    method "ascent" runs only the damped double-transform descent, which can
    stall above the optimum; "exact" runs only the flow finisher; "auto"
    (default) uses the descent as a warm start and finishes exactly.
    """
    C = problem.cost_array
    n, m = C.shape
    a = np.array(problem.mu0.weights, dtype=float)
    b = np.array(problem.target_mass, dtype=float)
    phi = (initial.as_array() if initial is not None else np.zeros(n))
    iters = 0

    if method in ("auto", "ascent"):
        best = np.inf
        for it in range(max_iter):
            # under-relaxed projection onto P_c; F never increases
            psi = (C - phi[:, None]).max(axis=0)
            proj = (C - psi[None, :]).max(axis=1)
            new = (1.0 - damping) * phi + damping * proj
            psi_new = (C - new[:, None]).max(axis=0)
            val = float(a @ new + b @ psi_new)
            iters += 1
            if best - val < tol:
                phi = new
                break
            best = val
            phi = new

    plan = None
    converged = method == "exact"
    if method in ("auto", "exact"):
        psi0 = (C - phi[:, None]).max(axis=0)
        plan, phi, psi_d, aug = _flow.solve_transport(C, a, b,
                                                      phi0=phi, psi0=psi0)
        iters += aug
        converged = True

    phi_field = PotentialField(problem.mu0.points, _mean_zero(problem, phi))
    psi_field = problem.transform(phi_field)
    value = float(
        a @ phi_field.as_array() + b @ psi_field.as_array())
    gap = 0.0
    if plan is not None:
        gap = value - float((C * plan).sum())
        converged = converged and gap <= max(tol, 1e-7 * (1.0 + abs(value)))
    if not want_plan:
        plan = None
    return TransportResult(phi_field, psi_field, value, plan, gap, iters,
                           converged=converged)


@dataclass(frozen=True)
class LPOracleResult:
    plan: np.ndarray
    primal_value: float
    dual_potentials: tuple  # (u on source, v on target), exact rationals
    exact_value: Fraction
    pivots: int


def lp_oracle(problem: TransportProblem, size_cap: int = 400) -> LPOracleResult:
    """Exact transportation simplex for max plan correlation.

    The marginals are rescaled exactly so supply and demand balance; the
    plan's marginals are then exactly feasible and the value is a rational
    certificate of the optimum.
    """
    n = len(problem.mu0.points)
    m = len(problem.nu0.points)
    if n > size_cap or m > size_cap:
        raise SizeCapExceeded(f"{n}x{m} exceeds the {size_cap}x{size_cap} cap")
    a = [F(w) for w in problem.mu0.weights]
    b = [F(w) for w in problem.target_mass]
    ta, tb = sum(a), sum(b)
    if abs(float(ta - tb)) > 1e-9:
        raise InfeasibleMarginals("marginal masses differ beyond tolerance")
    b = [x * ta / tb for x in b]  # exact rebalancing of float dust
    flows, u, v, value, pivots = _simplex.solve_exact(problem.exact_cost, a, b)
    plan = np.zeros((n, m))
    for (i, j), fl in flows.items():
        plan[i, j] = float(fl)
    return LPOracleResult(plan=plan, primal_value=float(value),
                          dual_potentials=(tuple(u), tuple(v)),
                          exact_value=value, pivots=pivots)


def ma_energy(problem: TransportProblem, phi: PotentialField) -> float:
    """E(phi) = -ln_norm * int W phi^c dnu0 (zero point fixed by the formula)."""
    if phi.points != problem.mu0.points:
        raise GridMismatch("potential not on the source grid")
    psi = problem.transform(phi)
    return -problem.ln_norm * sum(
        m * float(v) for m, v in zip(problem.target_mass, psi.values))


def relative_volume_sum(phi: PotentialField, psi: PotentialField,
                        family: ThetaFamily, l: int) -> dict:
    """Level-l relative-volume Riemann sum between two potentials.

    phi^c_l(p) = max_x (-val_x(theta_p^l)/l - phi(x)) over phi's grid;
    vol = l * sum_p mult(p) (psi^c_l - phi^c_l); scaled = n!/l^(n+1) * vol.
    """
    sections = family.sections(l)
    n_dim = len(sections[0].terms[0].exponent)

    def transform_at(pot: PotentialField, sec) -> Fraction:
        return max(-F(val_at(sec, x)) / l - fv
                   for x, fv in zip(pot.points, pot.values))

    vol = F(0)
    for sec in sections:
        mult = family.mult(l, sec.label)
        vol += mult * (transform_at(psi, sec) - transform_at(phi, sec))
    vol = l * vol
    scaled = F(factorial(n_dim)) / l ** (n_dim + 1) * vol
    return {"vol": float(vol), "scaled": float(scaled)}
