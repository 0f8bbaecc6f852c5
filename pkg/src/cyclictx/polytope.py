"""Coupling feasibility for cyclic systems: the noncontextuality polytope.

A system is noncontextual exactly when a joint distribution ``h`` over all
0/1 assignments to the 2n coupling variables reproduces

- every one-variable probability,
- every within-context pair probability (the vector ``b``), and
- for every content, the maximal coincidence probability
  ``min`` of the two one-variable probabilities sharing it.

These requirements are linear: ``M h = (1, a, b, c)`` with ``h >= 0``, where
``M`` is a 0/1 incidence matrix with ``3n + 1`` rows and ``4^n`` columns.
Membership of ``b`` in the noncontextuality polytope is decided by a phase-1
LP; its optimum is the L1 residual, positive optima come with a Farkas-type
certificate. An L1 distance to the polytope surface serves as a degree of
(non)contextuality.

Column order: the coupling variables are listed context by context, first
variable then second, so variable ``2i`` is the first variable of context
``i`` and ``2i + 1`` the second. A column index encodes an assignment with
bit ``k`` (LSB = variable 0) carrying the value of variable ``k``.
"""

from __future__ import annotations

import enum
import functools
import math
from dataclasses import dataclass, field
from numbers import Rational
from typing import Sequence

import numpy as np

from .core import CyclicSystem, MarginalSpec, Prob
from .errors import (
    DegenerateBox,
    DimensionCap,
    FrechetViolation,
    NotContextual,
    NotNoncontextual,
    OutOfRange,
)
from .simplex import DenseSource, LPStats, RevisedSimplex, PRICE_EPS


class Verdict(enum.Enum):
    NONCONTEXTUAL = "noncontextual"
    CONTEXTUAL = "contextual"
    MARGINAL = "marginal"


class MeasureKind(enum.Enum):
    CONTEXTUALITY = "contextuality"
    NONCONTEXTUALITY = "noncontextuality"


#: A residual at or below ``tol`` is noncontextual; at or above
#: ``MARGINAL_FACTOR * tol`` it is contextual; in between, marginal.
MARGINAL_FACTOR = 10.0


@dataclass(frozen=True)
class SolverConfig:
    """Knobs for the feasibility solver and the measures built on it.

    ``tol`` drives the three-way verdict; ``dense_cap`` is the largest rank
    whose 4^n columns are materialized (beyond it columns are priced by
    dynamic programming); ``max_rank`` and ``exact_max_rank`` bound the
    accepted problem sizes; ``bisect_tol`` is the absolute tolerance of the
    noncontextuality-measure bisection.
    """

    tol: float = 1e-9
    dense_cap: int = 8
    max_rank: int = 20
    exact_max_rank: int = 5
    max_iterations: int = 1_000_000
    bisect_tol: float = 1e-6

    def __post_init__(self) -> None:
        if self.tol <= 0:
            raise OutOfRange(f"tol must be positive, got {self.tol}")
        if self.bisect_tol <= 0:
            raise OutOfRange(f"bisect_tol must be positive, got {self.bisect_tol}")


DEFAULT_CONFIG = SolverConfig()


@dataclass(frozen=True)
class FeasibilityResult:
    """Outcome of a polytope membership test.

    Exactly one of ``witness`` / ``certificate`` is present unless the
    verdict is MARGINAL. The witness is a sparse distribution over coupling
    assignments, as ``(column index, mass)`` pairs; the certificate is a
    dual vector ``y`` with ``y.column <= 0`` (within tolerance) for every
    column yet ``y.rhs > 0``. ``gap`` is the independently recomputed L1
    residual of the returned witness, or the phase-1 optimum when
    infeasible.
    """

    verdict: Verdict
    gap: float
    tol: float
    witness: tuple[tuple[int, float], ...] | None = None
    certificate: tuple[float, ...] | None = None
    stats: LPStats = field(default_factory=LPStats)


@dataclass(frozen=True)
class MeasureResult:
    """An L1 (non)contextuality degree and a point of the polytope surface
    attaining it."""

    kind: MeasureKind
    value: float
    attaining: tuple[float, ...]


class CouplingIndex:
    """Bijective encoding of coupling-variable assignments as column ids."""

    def __init__(self, n: int) -> None:
        if n < 2:
            raise OutOfRange(f"rank must be at least 2, got {n}")
        self.n = n

    @property
    def n_vars(self) -> int:
        return 2 * self.n

    @property
    def n_cols(self) -> int:
        return 4**self.n

    def first_var(self, context: int) -> int:
        return 2 * (context % self.n)

    def second_var(self, context: int) -> int:
        return 2 * (context % self.n) + 1

    def variable_label(self, k: int) -> str:
        context, which = divmod(k, 2)
        content = (context + which) % self.n
        return f"S[content={content}, context={context}]"

    def assignment(self, col: int) -> tuple[int, ...]:
        if not 0 <= col < self.n_cols:
            raise OutOfRange(f"column {col} out of range")
        return tuple((col >> k) & 1 for k in range(self.n_vars))

    def column_of(self, assignment: Sequence[int]) -> int:
        return sum((1 << k) for k, v in enumerate(assignment) if v)


def _row_layout(n: int) -> list[tuple[str, int]]:
    """Row labels in order: normalization, 2n singles, n pairs, n coincidences."""
    rows: list[tuple[str, int]] = [("norm", 0)]
    rows += [("a", k) for k in range(2 * n)]
    rows += [("b", i) for i in range(n)]
    rows += [("c", q) for q in range(n)]
    return rows


def column_support(n: int, col: int) -> tuple[int, ...]:
    """Rows where column ``col`` of the rank-n incidence matrix is 1."""
    idx = CouplingIndex(n)
    bits = idx.assignment(col)
    rows = [0]
    rows += [1 + k for k in range(2 * n) if bits[k]]
    rows += [
        1 + 2 * n + i
        for i in range(n)
        if bits[idx.first_var(i)] and bits[idx.second_var(i)]
    ]
    rows += [
        1 + 3 * n + q
        for q in range(n)
        if bits[idx.first_var(q)] and bits[idx.second_var(q - 1)]
    ]
    return tuple(rows)


@functools.lru_cache(maxsize=None)
def _dense_matrix(n: int) -> np.ndarray:
    """The full (3n+1, 4^n) incidence matrix as float64, cached per rank."""
    idx = CouplingIndex(n)
    cols = np.arange(idx.n_cols, dtype=np.uint64)
    bits = [((cols >> k) & 1).astype(np.float64) for k in range(idx.n_vars)]
    rows = [np.ones(idx.n_cols)]
    rows += bits
    rows += [bits[idx.first_var(i)] * bits[idx.second_var(i)] for i in range(n)]
    rows += [bits[idx.first_var(q)] * bits[idx.second_var(q - 1)] for q in range(n)]
    matrix = np.ascontiguousarray(np.vstack(rows))
    matrix.setflags(write=False)
    return matrix


@functools.lru_cache(maxsize=None)
def _structural_columns(n: int) -> tuple[int, ...]:
    """3n+1 columns that span the full row space (triangular by block)."""
    idx = CouplingIndex(n)
    cols = [0]
    cols += [1 << k for k in range(idx.n_vars)]
    cols += [(1 << idx.first_var(i)) | (1 << idx.second_var(i)) for i in range(n)]
    cols += [(1 << idx.first_var(q)) | (1 << idx.second_var(q - 1)) for q in range(n)]
    return tuple(cols)


class IncidenceSystem:
    """The linear system ``M h = (1, a, b, c)`` for one cyclic system.

    Rows: one normalization row (all ones), 2n single-variable rows (entry 1
    iff that variable is 1 in the column's assignment), n within-context
    pair rows and n content-coincidence rows (entry 1 iff both named
    variables are 1). Columns are generated from :class:`CouplingIndex` on
    demand; the dense matrix is only materialized at small ranks.
    """

    def __init__(self, marginals: MarginalSpec, b: Sequence[Prob]) -> None:
        system = CyclicSystem(marginals, tuple(b))  # validates Fréchet bounds
        self.n = system.n
        self.index = CouplingIndex(self.n)
        self.rows = _row_layout(self.n)
        c = marginals.c_vector()
        rhs: list[Prob] = [1]
        for i in range(self.n):
            rhs.append(marginals.p_first[i])
            rhs.append(marginals.p_second[i])
        rhs.extend(system.b)
        rhs.extend(c)
        self.rhs: tuple[Prob, ...] = tuple(rhs)

    @property
    def n_rows(self) -> int:
        return 3 * self.n + 1

    @property
    def n_cols(self) -> int:
        return self.index.n_cols

    def column_support(self, col: int) -> tuple[int, ...]:
        return column_support(self.n, col)

    def entry(self, row: int, col: int) -> int:
        return 1 if row in self.column_support(col) else 0

    def dense(self) -> np.ndarray:
        return _dense_matrix(self.n)

    def rhs_floats(self) -> np.ndarray:
        return np.array([float(v) for v in self.rhs])


def build_incidence(marginals: MarginalSpec, b: Sequence[Prob]) -> IncidenceSystem:
    """Incidence system with rhs ``(1, a, b, c)`` for the given system."""
    return IncidenceSystem(marginals, b)


def price_column(duals: Sequence[float], n: int) -> tuple[int, float]:
    """Column minimizing ``duals . column`` over all 4^n coupling columns.

    The dual weight of a column splits into per-context terms tied together
    only through the variables shared by adjacent contexts, so conditioning
    on the two variables that carry content 0 (the first variable of context
    0 and the second variable of context n-1) makes the minimum a chain
    sweep with a carried state of one variable: O(n) per call. Ties resolve
    to the lowest column index.
    """
    y = [float(v) for v in duals]
    if len(y) != 3 * n + 1:
        raise OutOfRange(f"expected {3 * n + 1} duals, got {len(y)}")
    ya = y[1 : 2 * n + 1]
    yb = y[2 * n + 1 : 2 * n + 1 + n]
    yc = y[2 * n + 1 + n :]

    def term(i: int, f: int, s: int) -> float:
        val = 0.0
        if f:
            val += ya[2 * i]
        if s:
            val += ya[2 * i + 1]
        if f and s:
            val += yb[i]
        return val

    best: tuple[float, int] | None = None
    for alpha in (0, 1):  # first variable of context 0
        for omega in (0, 1):  # second variable of context n-1
            # state: value of the current context's second variable
            cells: dict[int, tuple[float, int]] = {}
            for s in (0, 1):
                cells[s] = (term(0, alpha, s), alpha | (s << 1))
            for i in range(1, n):
                nxt: dict[int, tuple[float, int]] = {}
                s_choices = (omega,) if i == n - 1 else (0, 1)
                for f in (0, 1):
                    for s in s_choices:
                        for prev, (val, bits) in cells.items():
                            cand_val = val + term(i, f, s)
                            if f and prev:
                                cand_val += yc[i]
                            cand = (
                                cand_val,
                                bits | (f << (2 * i)) | (s << (2 * i + 1)),
                            )
                            if s not in nxt or cand < nxt[s]:
                                nxt[s] = cand
                cells = nxt
            total, bits = cells[omega]
            if alpha and omega:
                total += yc[0]
            cand = (total + y[0], bits)
            if best is None or cand < best:
                best = cand
    assert best is not None
    return best[1], best[0]


class GeneratedSource:
    """Column source pricing coupling columns by dynamic programming.

    Used beyond the dense cap. Optional explicit side columns (for the
    L1-projection variables) get ids after the 4^n coupling columns.
    """

    def __init__(
        self,
        n: int,
        extra: np.ndarray | None = None,
        extra_costs: np.ndarray | None = None,
    ) -> None:
        self.n = n
        self.m = 3 * n + 1
        self.index = CouplingIndex(n)
        self.extra = extra if extra is not None else np.zeros((self.m, 0))
        self.extra_costs = (
            extra_costs
            if extra_costs is not None
            else np.zeros(self.extra.shape[1])
        )

    @property
    def nrows(self) -> int:
        return self.m

    @property
    def ncols(self) -> int:
        return self.index.n_cols + self.extra.shape[1]

    def column(self, j: int) -> np.ndarray:
        base = self.index.n_cols
        if j >= base:
            return self.extra[:, j - base]
        out = np.zeros(self.m)
        out[list(column_support(self.n, j))] = 1.0
        return out

    def cost(self, j: int) -> float:
        base = self.index.n_cols
        if j >= base:
            return float(self.extra_costs[j - base])
        return 0.0

    def price(
        self, pi: np.ndarray, *, with_costs: bool, bland: bool
    ) -> tuple[int, float] | None:
        # Bland mode degrades to the same deterministic steepest rule here;
        # termination is protected by the iteration cap instead.
        j, rc = price_column(-pi, self.n)
        best: tuple[float, int] = (rc, j)
        if self.extra.shape[1]:
            rc_extra = -(pi @ self.extra)
            if with_costs:
                rc_extra = rc_extra + self.extra_costs
            k = int(np.argmin(rc_extra))
            cand = (float(rc_extra[k]), self.index.n_cols + k)
            if cand < best:
                best = cand
        if best[0] >= -PRICE_EPS:
            return None
        return best[1], best[0]

    def structural_columns(self) -> Sequence[int]:
        extras = range(self.index.n_cols, self.ncols)
        return tuple(_structural_columns(self.n)) + tuple(extras)


def _residual_of(
    incidence: IncidenceSystem, witness: dict[int, float]
) -> float:
    """L1 residual of a candidate witness, recomputed from scratch."""
    resid = incidence.rhs_floats()
    for col, mass in witness.items():
        for row in incidence.column_support(col):
            resid[row] -= mass
    return float(np.abs(resid).sum())


def _verdict_from_residual(gap: float, tol: float) -> Verdict:
    if gap <= tol:
        return Verdict.NONCONTEXTUAL
    if gap >= MARGINAL_FACTOR * tol:
        return Verdict.CONTEXTUAL
    return Verdict.MARGINAL


def _feasibility_source(n: int, cfg: SolverConfig):
    if n <= cfg.dense_cap:
        return DenseSource(_dense_matrix(n))
    return GeneratedSource(n)


def check_noncontextual(
    system: CyclicSystem, cfg: SolverConfig | None = None
) -> FeasibilityResult:
    """Decide membership of the system's ``b`` in the noncontextuality polytope.

    Runs the phase-1 LP for ``M h = (1, a, b, c), h >= 0``. The verdict is
    NONCONTEXTUAL when the recomputed witness residual is at most ``tol``,
    CONTEXTUAL when the optimum is at least ``10 tol`` (with a Farkas-type
    dual certificate), MARGINAL in between. Deterministic for a fixed config.
    """
    cfg = cfg or DEFAULT_CONFIG
    if system.n > cfg.max_rank:
        raise DimensionCap(f"rank {system.n} exceeds configured max {cfg.max_rank}")
    incidence = build_incidence(system.marginals, system.b)
    source = _feasibility_source(system.n, cfg)
    lp = RevisedSimplex(
        source, incidence.rhs_floats(), max_iterations=cfg.max_iterations
    )
    sol = lp.solve_phase1()
    gap = _residual_of(incidence, sol.x)
    verdict = _verdict_from_residual(gap, cfg.tol)
    if verdict is Verdict.NONCONTEXTUAL:
        witness = tuple(sorted(sol.x.items()))
        return FeasibilityResult(
            verdict=verdict, gap=gap, tol=cfg.tol, witness=witness, stats=sol.stats
        )
    if verdict is Verdict.CONTEXTUAL:
        return FeasibilityResult(
            verdict=verdict,
            gap=gap,
            tol=cfg.tol,
            certificate=tuple(float(v) for v in sol.duals),
            stats=sol.stats,
        )
    return FeasibilityResult(verdict=verdict, gap=gap, tol=cfg.tol, stats=sol.stats)


def _require_rational_system(system: CyclicSystem) -> None:
    values = (
        system.marginals.p_first + system.marginals.p_second + system.b
    )
    for v in values:
        if not isinstance(v, Rational):
            raise OutOfRange(
                "exact verdicts need Fraction (or integer) probabilities; "
                f"got {v!r}"
            )


def check_noncontextual_exact(
    system: CyclicSystem, cfg: SolverConfig | None = None
) -> FeasibilityResult:
    """Exact-arithmetic membership verdict (no MARGINAL outcome possible).

    Requires rational probabilities and ``n <= exact_max_rank``. The witness
    or certificate is exact; both are re-verified against every column
    before returning.
    """
    from .exact import solve_exact_feasibility

    cfg = cfg or DEFAULT_CONFIG
    _require_rational_system(system)
    if system.n > cfg.exact_max_rank:
        raise DimensionCap(
            f"rank {system.n} exceeds exact-arithmetic max {cfg.exact_max_rank}"
        )
    incidence = build_incidence(system.marginals, system.b)
    return solve_exact_feasibility(incidence)


# -- L1 measures ----------------------------------------------------------


def _measure_lp(
    system: CyclicSystem, cfg: SolverConfig
) -> tuple[float, np.ndarray, LPStats]:
    """Minimize ``sum_i |b_i - b'_i|`` over polytope members ``b'``.

    Keeps the normalization, single-variable and coincidence rows as hard
    equalities and relaxes the pair rows with split displacement variables
    of unit cost. Returns (optimal value, attaining b', stats).
    """
    n = system.n
    m = 3 * n + 1
    incidence = build_incidence(system.marginals, system.b)
    rhs = incidence.rhs_floats()
    # Displacement columns: +e_row and -e_row for each pair row.
    b_rows = [1 + 2 * n + i for i in range(n)]
    extra = np.zeros((m, 2 * n))
    for i, row in enumerate(b_rows):
        extra[row, 2 * i] = 1.0
        extra[row, 2 * i + 1] = -1.0
    extra_costs = np.ones(2 * n)
    if n <= cfg.dense_cap:
        matrix = np.concatenate([_dense_matrix(n), extra], axis=1)
        costs = np.concatenate([np.zeros(4**n), extra_costs])
        source = DenseSource(matrix, costs)
    else:
        source = GeneratedSource(n, extra, extra_costs)
    lp = RevisedSimplex(source, rhs, max_iterations=cfg.max_iterations)
    lp.solve_phase1()
    sol = lp.solve_phase2()
    b_attained = np.array([float(v) for v in system.b])
    for j, val in sol.x.items():
        if j >= 4**n:
            k, sign = divmod(j - 4**n, 2)
            b_attained[k] -= val if sign == 0 else -val
    return float(sol.objective), b_attained, sol.stats


def contextuality_measure(
    system: CyclicSystem, cfg: SolverConfig | None = None
) -> MeasureResult:
    """L1 distance from a contextual ``b`` to the noncontextuality polytope.

    Raises :class:`NotContextual` when the system is not contextual. The
    attaining point is the nearest polytope member.
    """
    cfg = cfg or DEFAULT_CONFIG
    verdict = check_noncontextual(system, cfg).verdict
    if verdict is not Verdict.CONTEXTUAL:
        raise NotContextual(f"system verdict is {verdict.value}; measure undefined")
    value, attained, _ = _measure_lp(system, cfg)
    return MeasureResult(
        kind=MeasureKind.CONTEXTUALITY,
        value=value,
        attaining=tuple(float(v) for v in attained),
    )


def noncontextuality_measure(
    system: CyclicSystem, cfg: SolverConfig | None = None
) -> MeasureResult:
    """L1 distance from a noncontextual ``b`` to the polytope surface.

    Equals the largest radius ``r`` such that all 2n axis neighbours
    ``b ± r e_i`` stay in the polytope (the L1 ball is their convex hull and
    the polytope is convex). Found by per-direction bisection of the
    feasibility oracle to ``cfg.bisect_tol``; portions of the surface lying
    on the box facets count as surface.
    """
    cfg = cfg or DEFAULT_CONFIG
    if check_noncontextual(system, cfg).verdict is not Verdict.NONCONTEXTUAL:
        raise NotNoncontextual("system is not noncontextual; measure undefined")
    box = system.hyperbox()
    if box.is_degenerate():
        raise DegenerateBox("noncontextuality measure needs a nondegenerate box")
    b = [float(v) for v in system.b]

    def inside(point: list[float]) -> bool:
        try:
            candidate = CyclicSystem(system.marginals, tuple(point))
        except OutOfRange:
            return False
        except Exception:
            return False
        return check_noncontextual(candidate, cfg).verdict is Verdict.NONCONTEXTUAL

    radius = math.inf
    for i in range(system.n):
        for sign in (1.0, -1.0):
            limit = float(box.hi[i]) - b[i] if sign > 0 else b[i] - float(box.lo[i])
            limit = max(limit, 0.0)
            if limit <= cfg.bisect_tol:
                radius = min(radius, limit)
                continue
            lo_r, hi_r = 0.0, limit
            point = list(b)
            point[i] = b[i] + sign * hi_r
            if inside(point):
                radius = min(radius, hi_r)
                continue
            while hi_r - lo_r > cfg.bisect_tol:
                mid = 0.5 * (lo_r + hi_r)
                point[i] = b[i] + sign * mid
                if inside(point):
                    lo_r = mid
                else:
                    hi_r = mid
            radius = min(radius, lo_r)
    return MeasureResult(
        kind=MeasureKind.NONCONTEXTUALITY,
        value=float(radius),
        attaining=tuple(b),
    )
