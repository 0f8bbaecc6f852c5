"""Domain model and closed-form geometry for cyclic systems.

A cyclic system of rank ``n`` consists of ``n`` measurement contexts arranged
in a cycle. Context ``i`` (0-based here) jointly measures two dichotomous 0/1
random variables: its *first* variable carries content ``i`` and its *second*
variable carries content ``(i + 1) % n``, so each content appears in exactly
two adjacent contexts. A system is summarised by three probability vectors:

- the 2n one-variable probabilities (``p_first``, ``p_second``),
- the n within-context pair probabilities ``b[i] = P(first=1, second=1)``,
- the n maximal-coincidence probabilities
  ``c[q] = min(p_first[q], p_second[(q - 1) % n])``, the largest possible
  probability that the two variables sharing content ``q`` are both 1.

At fixed one-variable probabilities, the admissible ``b`` vectors fill a
hyperbox whose edges are the Fréchet intervals, and the noncontextual ``b``
vectors form a convex polytope inscribed in that box. This module implements
the box, its vertex parity structure, the demibox spanned by the even
vertices, exact volumes, and the ``2^(n-1)/n!`` bound on the volume fraction
outside the demibox. The feasibility solver itself lives in
:mod:`cyclictx.polytope`.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from fractions import Fraction
from numbers import Real
from typing import Sequence, Union

from .errors import CapExceeded, DegenerateBox, OutOfRange, FrechetViolation, RankTooSmall

Prob = Union[float, int, Fraction]

#: Largest rank for which vertex enumeration is allowed by default (2^20 vertices).
DEFAULT_ENUMERATION_CAP = 20


class Parity(enum.Enum):
    EVEN = "even"
    ODD = "odd"


class Endpoint(enum.Enum):
    LEFT = "left"
    RIGHT = "right"


class Containment(enum.Enum):
    INSIDE = "inside"
    OUTSIDE = "outside"
    BOUNDARY = "boundary"


def _check_prob(value: Prob, what: str) -> None:
    if not isinstance(value, Real) or isinstance(value, bool):
        raise OutOfRange(f"{what} must be a real number, got {value!r}")
    if isinstance(value, float) and not math.isfinite(value):
        raise OutOfRange(f"{what} must be finite, got {value!r}")
    if not (0 <= value <= 1):
        raise OutOfRange(f"{what} must lie in [0, 1], got {value!r}")


@dataclass(frozen=True)
class MarginalSpec:
    """The 2n one-variable probabilities of a rank-n cyclic system.

    ``p_first[i]`` is the probability that the first variable of context ``i``
    equals 1 (the variable carrying content ``i``); ``p_second[i]`` is the same
    for the second variable (content ``(i + 1) % n``). Entries may be floats or
    Fractions; exact solvers require Fractions.
    """

    p_first: tuple[Prob, ...]
    p_second: tuple[Prob, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "p_first", tuple(self.p_first))
        object.__setattr__(self, "p_second", tuple(self.p_second))
        n = len(self.p_first)
        if n < 2:
            raise RankTooSmall(f"rank must be at least 2, got {n}")
        if len(self.p_second) != n:
            raise OutOfRange(
                f"p_first and p_second must have equal length, "
                f"got {n} and {len(self.p_second)}"
            )
        for i in range(n):
            _check_prob(self.p_first[i], f"p_first[{i}]")
            _check_prob(self.p_second[i], f"p_second[{i}]")

    @property
    def n(self) -> int:
        return len(self.p_first)

    @classmethod
    def uniform(cls, n: int, p: Prob = Fraction(1, 2)) -> "MarginalSpec":
        """All 2n one-variable probabilities equal to ``p`` (default 1/2)."""
        if n < 2:
            raise RankTooSmall(f"rank must be at least 2, got {n}")
        return cls((p,) * n, (p,) * n)

    def content_pair(self, q: int) -> tuple[Prob, Prob]:
        """The two one-variable probabilities carrying content ``q``.

        Returns ``(p_first[q], p_second[(q - 1) % n])``: content ``q`` is the
        first variable of context ``q`` and the second variable of the
        preceding context.
        """
        return self.p_first[q], self.p_second[(q - 1) % self.n]

    def c_vector(self) -> tuple[Prob, ...]:
        """Maximal coincidence probabilities, one per content.

        ``c[q]`` is the largest probability, over all couplings of the two
        variables sharing content ``q``, that both equal 1; it equals the min
        of their one-variable probabilities.
        """
        return tuple(min(*self.content_pair(q)) for q in range(self.n))

    def is_consistently_connected(self, tol: float = 0.0) -> bool:
        """True iff content-sharing variables are identically distributed.

        Compares the two one-variable probabilities of every content; ``tol``
        is the allowed absolute difference (must be >= 0).
        """
        if tol < 0:
            raise OutOfRange(f"tol must be nonnegative, got {tol}")
        return all(
            abs(pair[0] - pair[1]) <= tol
            for pair in (self.content_pair(q) for q in range(self.n))
        )

    def hyperbox(self) -> "Hyperbox":
        """The box of admissible pair-probability vectors (Fréchet intervals)."""
        lo = []
        hi = []
        for i in range(self.n):
            p, q = self.p_first[i], self.p_second[i]
            lo.append(max(0 * p, p + q - 1))
            hi.append(min(p, q))
        return Hyperbox(tuple(lo), tuple(hi))


@dataclass(frozen=True)
class CyclicSystem:
    """A rank-n cyclic system: marginals plus the n pair probabilities.

    ``b[i]`` is the probability that both variables of context ``i`` equal 1.
    Construction validates the Fréchet bounds for every context; a violation
    means the context's 2x2 joint distribution cannot exist.
    """

    marginals: MarginalSpec
    b: tuple[Prob, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "b", tuple(self.b))
        n = self.marginals.n
        if len(self.b) != n:
            raise OutOfRange(f"expected {n} pair probabilities, got {len(self.b)}")
        for i, value in enumerate(self.b):
            _check_prob(value, f"b[{i}]")
        box = self.marginals.hyperbox()
        for i, value in enumerate(self.b):
            if not (box.lo[i] <= value <= box.hi[i]):
                raise FrechetViolation(i, float(value), float(box.lo[i]), float(box.hi[i]))

    @property
    def n(self) -> int:
        return self.marginals.n

    def hyperbox(self) -> "Hyperbox":
        return self.marginals.hyperbox()

    def rotate(self, k: int) -> "CyclicSystem":
        """The same system with contexts cyclically relabelled by ``k``."""
        n = self.n
        idx = [(i + k) % n for i in range(n)]
        spec = MarginalSpec(
            tuple(self.marginals.p_first[j] for j in idx),
            tuple(self.marginals.p_second[j] for j in idx),
        )
        return CyclicSystem(spec, tuple(self.b[j] for j in idx))


def new_system(marginals: MarginalSpec, b: Sequence[Prob]) -> CyclicSystem:
    """Validated construction of a :class:`CyclicSystem` (alias of the type)."""
    return CyclicSystem(marginals, tuple(b))


@dataclass(frozen=True)
class BoxVertex:
    """A vertex of a hyperbox, identified by its endpoint pattern.

    Bit ``i`` of ``pattern`` is 1 when coordinate ``i`` sits at the left (low)
    endpoint. Parity counts left endpoints mod 2.
    """

    pattern: int
    coords: tuple[Prob, ...]

    @property
    def n(self) -> int:
        return len(self.coords)

    def endpoint(self, i: int) -> Endpoint:
        return Endpoint.LEFT if (self.pattern >> i) & 1 else Endpoint.RIGHT

    @property
    def bits(self) -> tuple[Endpoint, ...]:
        return tuple(self.endpoint(i) for i in range(self.n))

    @property
    def parity(self) -> Parity:
        return Parity.ODD if bin(self.pattern).count("1") % 2 else Parity.EVEN


@dataclass(frozen=True)
class Hyperbox:
    """Axis-aligned box ``prod_i [lo[i], hi[i]]`` with all endpoints in [0, 1]."""

    lo: tuple[Prob, ...]
    hi: tuple[Prob, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "lo", tuple(self.lo))
        object.__setattr__(self, "hi", tuple(self.hi))
        n = len(self.lo)
        if n < 2:
            raise RankTooSmall(f"rank must be at least 2, got {n}")
        if len(self.hi) != n:
            raise OutOfRange("lo and hi must have equal length")
        for i in range(n):
            _check_prob(self.lo[i], f"lo[{i}]")
            _check_prob(self.hi[i], f"hi[{i}]")
            if self.lo[i] > self.hi[i]:
                raise OutOfRange(f"lo[{i}] = {self.lo[i]} exceeds hi[{i}] = {self.hi[i]}")

    @property
    def n(self) -> int:
        return len(self.lo)

    @property
    def lengths(self) -> tuple[Prob, ...]:
        return tuple(h - l for l, h in zip(self.lo, self.hi))

    def is_degenerate(self) -> bool:
        return any(h == l for l, h in zip(self.lo, self.hi))

    def volume(self) -> Prob:
        """Product of the edge lengths."""
        vol: Prob = 1
        for length in self.lengths:
            vol = vol * length
        return vol

    def demibox_volume(self) -> Prob:
        """Volume of the convex hull of the even vertices.

        Cutting the corner at each of the 2^(n-1) odd vertices removes
        ``volume / n!`` apiece, so the hull keeps the fraction
        ``1 - 2^(n-1)/n!`` of the box volume (exactly 0 at n = 2). Exact when
        the endpoints are rationals.
        """
        return self.volume() * (1 - epsilon_upper_bound(self.n))

    def contains(self, point: Sequence[Prob], tol: float = 0.0) -> bool:
        """Componentwise membership with absolute tolerance ``tol``."""
        if len(point) != self.n:
            raise OutOfRange(f"expected {self.n} coordinates, got {len(point)}")
        return all(
            l - tol <= x <= h + tol for x, l, h in zip(point, self.lo, self.hi)
        )

    def vertex(self, pattern: int) -> BoxVertex:
        """The vertex whose left-endpoint coordinates are the set bits of ``pattern``."""
        if not 0 <= pattern < (1 << self.n):
            raise OutOfRange(f"pattern {pattern} out of range for n={self.n}")
        coords = tuple(
            self.lo[i] if (pattern >> i) & 1 else self.hi[i] for i in range(self.n)
        )
        return BoxVertex(pattern, coords)

    def vertices(
        self,
        parity: Parity | None = None,
        cap: int = DEFAULT_ENUMERATION_CAP,
    ) -> list[BoxVertex]:
        """All vertices (or just one parity class), ascending by bit pattern.

        Raises :class:`CapExceeded` when ``n`` exceeds ``cap``; there are
        2^n vertices in total and 2^(n-1) of each parity.
        """
        if self.n > cap:
            raise CapExceeded(f"vertex enumeration at n={self.n} exceeds cap {cap}")
        out = []
        for pattern in range(1 << self.n):
            if parity is not None and (bin(pattern).count("1") % 2) != (parity is Parity.ODD):
                continue
            out.append(self.vertex(pattern))
        return out

    def normalized(self, point: Sequence[Prob]) -> tuple[float, ...]:
        """Map a point to unit-cube coordinates ``(x - lo) / (hi - lo)``.

        Raises :class:`DegenerateBox` when any edge has zero length.
        """
        if len(point) != self.n:
            raise OutOfRange(f"expected {self.n} coordinates, got {len(point)}")
        lengths = self.lengths
        if any(length == 0 for length in lengths):
            raise DegenerateBox(f"box has a zero-length edge: lengths={lengths}")
        return tuple(
            float((x - l) / length) for x, l, length in zip(point, self.lo, lengths)
        )

    def odd_corner_gap(self, point: Sequence[Prob]) -> float:
        """Minimum over odd vertices of the normalized L1 sum, minus 1.

        In unit-cube coordinates ``u``, each odd vertex ``v`` (a 0/1 vector
        with an odd number of zeros) cuts off the corner ``sum|u - v| < 1``.
        Negative gap: the point lies strictly inside some odd corner.
        Computed in O(n) by a parity-constrained greedy choice per coordinate.
        """
        u = self.normalized(point)
        base = 0.0
        zeros = 0
        flip = math.inf
        for ui in u:
            lower = ui  # choosing v_i = 0 contributes u_i
            upper = 1.0 - ui
            if lower <= upper:
                base += lower
                zeros += 1
            else:
                base += upper
            flip = min(flip, abs(upper - lower))
        if zeros % 2 == 1:
            return base - 1.0
        return base + flip - 1.0

    def demibox_contains(self, point: Sequence[Prob], tol: float = 1e-9) -> Containment:
        """Classify a box point against the even-vertex hull.

        The hull is the box minus the 2^(n-1) odd corner cuts. With
        ``gap = odd_corner_gap(point)``:

        - ``gap < -tol``  -> OUTSIDE (some odd corner cut is violated),
        - ``gap >= +tol`` -> INSIDE,
        - otherwise       -> BOUNDARY.

        ``tol`` is measured in normalized (unit cube) units. At ``tol=0`` the
        verdict is a clean boolean: even vertices (gap exactly 0) come back
        INSIDE, odd vertices (gap -1) OUTSIDE. The point must lie in the box
        up to ``tol``; zero-length edges raise :class:`DegenerateBox`.
        """
        if tol < 0:
            raise OutOfRange(f"tol must be nonnegative, got {tol}")
        u = self.normalized(point)
        if any(ui < -tol or ui > 1 + tol for ui in u):
            raise OutOfRange(f"point {tuple(point)} lies outside the box")
        gap = self.odd_corner_gap(point)
        if gap < -tol:
            return Containment.OUTSIDE
        if gap >= tol:
            return Containment.INSIDE
        return Containment.BOUNDARY


def epsilon_upper_bound(n: int) -> Fraction:
    """The exact volume fraction ``2^(n-1) / n!`` cut off by the odd corners.

    This bounds the chance that a pair-probability vector drawn uniformly in
    the box is contextual, for any one-variable probabilities; the bound is
    attained at uniform (all 1/2) marginals.
    """
    if n < 2:
        raise RankTooSmall(f"rank must be at least 2, got {n}")
    return Fraction(2 ** (n - 1), math.factorial(n))


@dataclass(frozen=True)
class BoundRow:
    """One row of the bound table."""

    n: int
    exact: Fraction
    decimal: float
    display: str


def _display_round_up(q: Fraction) -> str:
    """Three significant digits with the third rounded up, e.g. ``6.67e-1``.

    Exact integer arithmetic throughout; the value 1 renders as ``"1"``.
    """
    if q <= 0:
        raise OutOfRange(f"display value must be positive, got {q}")
    if q == 1:
        return "1"
    e = len(str(q.numerator)) - len(str(q.denominator))
    ten = Fraction(10)
    while q < ten**e:
        e -= 1
    while q >= ten ** (e + 1):
        e += 1
    scaled = q * ten ** (-e) * 100
    m100 = -(-scaled.numerator // scaled.denominator)  # exact ceiling
    if m100 >= 1000:
        m100 = 100
        e += 1
    return f"{m100 // 100}.{m100 % 100:02d}e{e}"


def bound_table(ranks: Sequence[int]) -> list[BoundRow]:
    """Bound rows for the given ranks: exact rational, decimal, display string.

    ``decimal`` is round-to-nearest; ``display`` rounds the third significant
    digit up (the convention used when quoting the bound's fast decay).
    """
    rows = []
    for n in ranks:
        q = epsilon_upper_bound(n)
        rows.append(BoundRow(n=n, exact=q, decimal=float(q), display=_display_round_up(q)))
    return rows
