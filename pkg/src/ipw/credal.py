"""Interval and conditional probability constraints over world masses.

A constraint ``lo <= P(t | g) <= hi`` is kept homogeneous so that it is
satisfied vacuously when ``P(g) = 0``::

    sum_{t&g} x - lo * sum_{g} x >= 0
    hi * sum_{g} x - sum_{t&g} x >= 0

Certain knowledge (axioms) shrinks the admissible world set instead of
adding rows. Conditional queries are solved exactly as linear programs
after the Charnes-Cooper change of variables.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np
from scipy.optimize import linprog

from .logic import TRUE, Formula, WorldSet, render, truth_vector

MAX_LP_WORLDS = 1 << 12
BOUND_TOL = 1e-6


class CredalError(ValueError):
    pass


class InfeasibleError(CredalError):
    pass


class ConditioningImpossibleError(CredalError):
    """The conditioning event has probability zero in every admissible model."""


@dataclass(frozen=True)
class CredalConstraint:
    target: Formula
    lo: float
    hi: float
    given: Formula = TRUE

    def __post_init__(self):
        lo, hi = float(self.lo), float(self.hi)
        if not 0.0 <= lo <= hi <= 1.0:
            raise CredalError(f"bounds [{lo}, {hi}] must satisfy 0 <= lo <= hi <= 1")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @classmethod
    def point(cls, target: Formula, p: float, given: Formula = TRUE) -> "CredalConstraint":
        return cls(target, p, p, given)

    @property
    def is_point(self) -> bool:
        return self.lo == self.hi

    def __str__(self) -> str:
        cond = "" if self.given == TRUE else f" given {render(self.given)}"
        if self.is_point:
            return f"prob {render(self.target)}{cond} = {self.lo:g}"
        return f"prob {render(self.target)}{cond} in [{self.lo:g}, {self.hi:g}]"


class Bounds(NamedTuple):
    lo: float
    hi: float

    def contains(self, x: float, tol: float = BOUND_TOL) -> bool:
        return self.lo - tol <= x <= self.hi + tol


@dataclass
class LinearSystem:
    """Rows ``A_ub @ x <= 0`` over one mass per admissible world, plus ``sum(x) = 1``."""

    worlds: WorldSet
    columns: np.ndarray  # world indices, one per variable
    a_ub: np.ndarray

    @classmethod
    def compile(cls, worlds: WorldSet, constraints: Sequence[CredalConstraint]) -> "LinearSystem":
        cols = worlds.indices()
        if cols.size > MAX_LP_WORLDS:
            raise CredalError(
                f"{cols.size} admissible worlds exceeds the LP cap of {MAX_LP_WORLDS}"
            )
        rows = []
        for c in constraints:
            g = truth_vector(c.given, worlds.vocab)[cols].astype(float)
            tg = (truth_vector(c.target, worlds.vocab)[cols] & (g > 0)).astype(float)
            # lo*g - t&g <= 0 and t&g - hi*g <= 0
            if c.lo > 0:
                rows.append(c.lo * g - tg)
            if c.hi < 1:
                rows.append(tg - c.hi * g)
        a_ub = np.array(rows, dtype=float).reshape(len(rows), cols.size)
        return cls(worlds, cols, a_ub)

    @property
    def n_vars(self) -> int:
        return int(self.columns.size)

    def indicator(self, f: Formula) -> np.ndarray:
        return truth_vector(f, self.worlds.vocab)[self.columns].astype(float)

    def satisfied_by(self, mass: np.ndarray, tol: float = 1e-9) -> bool:
        """Check a full-length (2**n) mass vector against the system."""
        x = np.asarray(mass, dtype=float)
        if (x < -tol).any() or abs(x.sum() - 1) > tol:
            return False
        if (x[~self.worlds.mask] > tol).any():
            return False
        return bool((self.a_ub @ x[self.columns] <= tol).all())


def _solve(c, a_ub, a_eq, b_eq):
    n = len(c)
    res = linprog(
        c,
        A_ub=a_ub if a_ub.size else None,
        b_ub=np.zeros(a_ub.shape[0]) if a_ub.size else None,
        A_eq=a_eq,
        b_eq=b_eq,
        bounds=[(0, None)] * n,
        method="highs",
    )
    return res


def feasible(worlds: WorldSet, constraints: Sequence[CredalConstraint]) -> bool:
    """Whether some distribution over ``worlds`` satisfies every constraint."""
    if not worlds:
        return False
    system = LinearSystem.compile(worlds, constraints)
    n = system.n_vars
    res = _solve(np.zeros(n), system.a_ub, np.ones((1, n)), [1.0])
    return res.status == 0


def query_bounds(
    worlds: WorldSet,
    constraints: Sequence[CredalConstraint],
    q: Formula,
    given: Formula = TRUE,
) -> Bounds:
    """Sharpest ``[lo, hi]`` on ``P(q | given)`` over all satisfying distributions.

    Only distributions with ``P(given) > 0`` are considered. With
    ``y = x / P(given)`` and ``t = 1 / P(given)`` the ratio objective
    becomes linear: optimise ``P(q & given)`` over ``y >= 0``,
    ``A y <= 0``, ``sum(y) = t``, ``P_y(given) = 1``.
    """
    if not feasible(worlds, constraints):
        raise InfeasibleError("constraint set is infeasible")
    system = LinearSystem.compile(worlds, constraints)
    n = system.n_vars
    g = system.indicator(given)
    qg = system.indicator(q) * g

    # variables: y (n), t (1)
    a_ub = np.hstack([system.a_ub, np.zeros((system.a_ub.shape[0], 1))])
    a_eq = np.vstack(
        [
            np.append(np.ones(n), -1.0),  # sum(y) - t = 0
            np.append(g, 0.0),  # P_y(given) = 1
        ]
    )
    b_eq = [0.0, 1.0]
    obj = np.append(qg, 0.0)

    low = _solve(obj, a_ub, a_eq, b_eq)
    if low.status == 2:
        raise ConditioningImpossibleError(
            f"P({render(given)}) is zero under every admissible distribution"
        )
    high = _solve(-obj, a_ub, a_eq, b_eq)
    if low.status != 0 or high.status != 0:
        raise CredalError(f"LP solver failed: {low.message} / {high.message}")
    lo = float(np.clip(low.fun, 0.0, 1.0))
    hi = float(np.clip(-high.fun, 0.0, 1.0))
    return Bounds(min(lo, hi), max(lo, hi))


# ---------------------------------------------------------------------------
# Expert envelopes
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ExpertAssessment:
    expert: str
    statements: tuple[tuple[Formula, float], ...] = field(default=())

    def __post_init__(self):
        stmts = tuple((f, float(p)) for f, p in self.statements)
        for f, p in stmts:
            if not 0.0 <= p <= 1.0:
                raise CredalError(
                    f"expert {self.expert!r}: P({render(f)}) = {p} outside [0, 1]"
                )
        object.__setattr__(self, "statements", stmts)

    def constraints(self) -> list[CredalConstraint]:
        return [CredalConstraint.point(f, p) for f, p in self.statements]


def merge_experts(
    assessments: Sequence[ExpertAssessment], worlds: WorldSet | None = None
) -> list[CredalConstraint]:
    """Envelope ``[min, max]`` per statement over the experts who assessed it.

    Statements are identified by canonical rendering and listed in order
    of first appearance. When ``worlds`` is given every expert is first
    checked for internal consistency over it.
    """
    if worlds is not None:
        for a in assessments:
            if not feasible(worlds, a.constraints()):
                raise InfeasibleError(f"expert {a.expert!r} is internally inconsistent")
    envelope: dict[str, tuple[Formula, float, float]] = {}
    for a in assessments:
        for f, p in a.statements:
            key = render(f)
            if key in envelope:
                g, lo, hi = envelope[key]
                envelope[key] = (g, min(lo, p), max(hi, p))
            else:
                envelope[key] = (f, p, p)
    return [CredalConstraint(f, lo, hi) for f, lo, hi in envelope.values()]
