"""Small dense revised simplex for feasibility and L1-projection problems.

Solves ``min c.x  s.t.  A x = rhs, x >= 0`` where the row count is tiny
(a few dozen) and the column count may be huge (4^n). Columns are supplied
by a *source*: either a fully materialized matrix or a generator that prices
columns on demand (dynamic programming over the cyclic structure).

Phase 1 starts from an all-artificial basis and minimizes the total
artificial mass; its optimum is the L1 infeasibility of the system. Phase 2
re-prices with the source's own costs after degenerate-pivoting artificials
out of the basis.

Pivot rule: steepest (most negative reduced cost, lowest index on ties),
switching to Bland's lowest-index rule when the objective stalls, which
keeps termination guaranteed without paying Bland's slow convergence on
every instance. Deterministic throughout.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Protocol, Sequence

import numpy as np

from .errors import SolverStall

#: Reduced-cost threshold for entering candidates.
PRICE_EPS = 1e-11
#: Minimum magnitude of an acceptable pivot element.
PIVOT_EPS = 1e-10
#: Iterations without objective improvement before switching to Bland's rule.
STALL_LIMIT = 50


class ColumnSource(Protocol):
    """Column access for the simplex; ids run from 0 to ``ncols - 1``."""

    @property
    def nrows(self) -> int: ...

    @property
    def ncols(self) -> int: ...

    def column(self, j: int) -> np.ndarray: ...

    def cost(self, j: int) -> float: ...

    def price(
        self, pi: np.ndarray, *, with_costs: bool, bland: bool
    ) -> tuple[int, float] | None:
        """Best entering candidate ``(j, reduced_cost)`` or None at optimality.

        ``with_costs`` selects phase-2 pricing (``c_j - pi.A_j``) over the
        phase-1 pricing of real columns (``-pi.A_j``). ``bland`` requests the
        lowest eligible index instead of the most negative reduced cost.
        """
        ...

    def structural_columns(self) -> Sequence[int]:
        """Column ids spanning the row space, used to evict artificials."""
        ...


class DenseSource:
    """Column source backed by an explicit (m, N) matrix."""

    def __init__(self, matrix: np.ndarray, costs: np.ndarray | None = None) -> None:
        self.A = np.ascontiguousarray(matrix, dtype=np.float64)
        m, ncols = self.A.shape
        self._m = m
        self._n = ncols
        self.costs = (
            np.zeros(ncols) if costs is None else np.asarray(costs, dtype=np.float64)
        )

    @property
    def nrows(self) -> int:
        return self._m

    @property
    def ncols(self) -> int:
        return self._n

    def column(self, j: int) -> np.ndarray:
        return self.A[:, j]

    def cost(self, j: int) -> float:
        return float(self.costs[j])

    def price(
        self, pi: np.ndarray, *, with_costs: bool, bland: bool
    ) -> tuple[int, float] | None:
        rc = -(pi @ self.A)
        if with_costs:
            rc = rc + self.costs
        if bland:
            eligible = np.flatnonzero(rc < -PRICE_EPS)
            if eligible.size == 0:
                return None
            j = int(eligible[0])
        else:
            j = int(np.argmin(rc))
            if rc[j] >= -PRICE_EPS:
                return None
        return j, float(rc[j])

    def structural_columns(self) -> Sequence[int]:
        return range(self._n)


@dataclass
class LPStats:
    iterations: int = 0
    pricing_calls: int = 0
    bland_switches: int = 0


@dataclass
class LPSolution:
    """Terminal state of a solve: objective, basic values, duals."""

    objective: float
    x: dict[int, float]
    duals: np.ndarray
    stats: LPStats = field(default_factory=LPStats)


class RevisedSimplex:
    """One phase-1 (+ optional phase-2) solve over a column source."""

    def __init__(
        self,
        source: ColumnSource,
        rhs: Sequence[float],
        *,
        max_iterations: int = 1_000_000,
    ) -> None:
        self.source = source
        self.rhs = np.asarray(rhs, dtype=np.float64)
        self.m = source.nrows
        if self.rhs.shape != (self.m,):
            raise ValueError(f"rhs must have {self.m} entries")
        if np.any(self.rhs < 0):
            raise ValueError("rhs must be nonnegative for the artificial start")
        self.max_iterations = max_iterations
        self.art_offset = source.ncols
        # All-artificial start: basis ids ncols..ncols+m-1, B = I.
        self.basis = np.arange(self.art_offset, self.art_offset + self.m, dtype=np.int64)
        self.binv = np.eye(self.m)
        self.xb = self.rhs.copy()
        self.stats = LPStats()

    # -- helpers ---------------------------------------------------------

    def _is_artificial(self, ids: np.ndarray) -> np.ndarray:
        return ids >= self.art_offset

    def _basic_costs(self, with_costs: bool) -> np.ndarray:
        if not with_costs:
            return self._is_artificial(self.basis).astype(np.float64)
        return np.array(
            [
                0.0 if j >= self.art_offset else self.source.cost(int(j))
                for j in self.basis
            ]
        )

    def _refresh_xb(self) -> None:
        self.xb = self.binv @ self.rhs
        np.maximum(self.xb, 0.0, out=self.xb)

    def _pivot(self, row: int, col_id: int, direction: np.ndarray) -> None:
        piv = direction[row]
        self.binv[row] /= piv
        rest = direction.copy()
        rest[row] = 0.0
        self.binv -= np.outer(rest, self.binv[row])
        self.basis[row] = col_id
        self._refresh_xb()

    def _ratio_test(self, direction: np.ndarray) -> int | None:
        pos = np.flatnonzero(direction > PIVOT_EPS)
        if pos.size == 0:
            return None
        theta = self.xb[pos] / direction[pos]
        tmin = theta.min()
        ties = pos[theta <= tmin + 1e-12]
        # Prefer evicting artificials, then lowest basic id (anti-cycling).
        keys = self.basis[ties] - self._is_artificial(self.basis[ties]) * (
            2 * self.art_offset + self.m
        )
        return int(ties[np.argmin(keys)])

    def objective(self, with_costs: bool) -> float:
        return float(self._basic_costs(with_costs) @ self.xb)

    def duals(self, with_costs: bool) -> np.ndarray:
        return self._basic_costs(with_costs) @ self.binv

    # -- phases ----------------------------------------------------------

    def _run(self, with_costs: bool) -> LPSolution:
        bland = False
        stall = 0
        best = np.inf
        while True:
            if self.stats.iterations >= self.max_iterations:
                raise SolverStall(
                    f"simplex exceeded {self.max_iterations} iterations"
                )
            obj = self.objective(with_costs)
            if obj < best - 1e-12:
                best = obj
                stall = 0
            else:
                stall += 1
                if stall > STALL_LIMIT and not bland:
                    bland = True
                    self.stats.bland_switches += 1
            pi = self.duals(with_costs)
            self.stats.pricing_calls += 1
            cand = self.source.price(pi, with_costs=with_costs, bland=bland)
            if cand is None:
                break
            j, _ = cand
            direction = self.binv @ self.source.column(j)
            row = self._ratio_test(direction)
            if row is None:
                # Phase 1 is bounded below by 0, and our phase-2 objectives
                # are bounded too; an empty ratio test only happens on
                # numerical dust. Stop at the current (optimal-ish) point.
                break
            self.stats.iterations += 1
            self._pivot(row, j, direction)
        return LPSolution(
            objective=self.objective(with_costs),
            x=self.solution_values(),
            duals=self.duals(with_costs),
            stats=self.stats,
        )

    def solve_phase1(self) -> LPSolution:
        """Minimize total artificial mass; objective is the L1 residual."""
        return self._run(with_costs=False)

    def evict_artificials(self) -> None:
        """Degenerate-pivot basic artificials out wherever a real column can
        replace them (their values are ~0 after a successful phase 1)."""
        basic_ids = set(int(j) for j in self.basis)
        for row in range(self.m):
            if self.basis[row] < self.art_offset:
                continue
            for j in self.source.structural_columns():
                if j in basic_ids:
                    continue
                direction = self.binv @ self.source.column(j)
                if abs(direction[row]) > PIVOT_EPS:
                    basic_ids.discard(int(self.basis[row]))
                    self._pivot(row, j, direction)
                    basic_ids.add(j)
                    break
            # A row no structural column can touch is redundant; its
            # artificial stays basic at zero and never re-enters play.

    def solve_phase2(self) -> LPSolution:
        """Minimize the source costs from the phase-1 basis."""
        self.evict_artificials()
        return self._run(with_costs=True)

    def solution_values(self) -> dict[int, float]:
        """Nonzero values of real (non-artificial) basic variables."""
        out: dict[int, float] = {}
        for row in range(self.m):
            j = int(self.basis[row])
            if j < self.art_offset and self.xb[row] > 0.0:
                out[j] = float(self.xb[row])
        return out
