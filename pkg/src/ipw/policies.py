"""Belief-value policies over a set of admissible worlds.

Three policies share one reporting surface:

* ``ratio``: fraction of admissible worlds satisfying the query.
* ``reliable``: within-cell world ratios weighted by point probabilities
  on a partition of the admissible worlds.
* ``point``: a single maximum-entropy distribution matching the known
  point probabilities, queried directly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Iterable, Sequence

import numpy as np

from .logic import (
    MAX_ATOMS,
    TRUE,
    Atom,
    Formula,
    Implies,
    Vocabulary,
    WorldSet,
    conjoin,
    count_models,
    models,
    render,
    truth_vector,
)

PROB_TOL = 1e-9

POLICIES = ("ratio", "reliable", "point")


class UndefinedRatioError(ZeroDivisionError):
    """Raised when a ratio is requested over an empty set of worlds."""


class PartitionError(ValueError):
    pass


@dataclass(frozen=True)
class Partition:
    """Mutually exclusive, exhaustive cells with point probabilities.

    Disjointness and coverage are relative to a world set and are only
    checked by :meth:`validate`.
    """

    cells: tuple[tuple[Formula, float], ...]

    def __init__(self, cells: Iterable[tuple[Formula, float]]):
        cells = tuple((f, float(p)) for f, p in cells)
        if not cells:
            raise PartitionError("partition has no cells")
        for f, p in cells:
            if not 0.0 <= p <= 1.0:
                raise PartitionError(f"cell {render(f)!r} has probability {p} outside [0, 1]")
        total = math.fsum(p for _, p in cells)
        if abs(total - 1.0) > PROB_TOL:
            raise PartitionError(f"cell probabilities sum to {total!r}, not 1")
        object.__setattr__(self, "cells", cells)

    @classmethod
    def trivial(cls) -> "Partition":
        return cls([(TRUE, 1.0)])

    def __len__(self) -> int:
        return len(self.cells)

    def cell_masks(self, worlds: WorldSet) -> list[np.ndarray]:
        """Per-cell masks restricted to ``worlds``, validated."""
        masks = [truth_vector(f, worlds.vocab) & worlds.mask for f, _ in self.cells]
        covered = np.zeros_like(worlds.mask)
        for (f, _), m in zip(self.cells, masks):
            if not m.any():
                raise PartitionError(f"cell {render(f)!r} has no admissible worlds")
            if (covered & m).any():
                raise PartitionError(f"cell {render(f)!r} overlaps an earlier cell")
            covered |= m
        if not np.array_equal(covered, worlds.mask):
            missing = int(np.count_nonzero(worlds.mask & ~covered))
            raise PartitionError(f"cells leave {missing} admissible world(s) uncovered")
        return masks

    def validate(self, worlds: WorldSet) -> None:
        self.cell_masks(worlds)

    def world_weights(self, worlds: WorldSet) -> np.ndarray:
        """Mass each world carries under the reliable calculus.

        Every world in cell ``r`` gets ``p(r) / |r|``; worlds outside
        ``worlds`` get zero. Beliefs are sums of these weights.
        """
        weights = np.zeros(worlds.vocab.n_worlds)
        for (_, p), m in zip(self.cells, self.cell_masks(worlds)):
            weights[m] = p / np.count_nonzero(m)
        return weights


@dataclass(frozen=True)
class BeliefEntry:
    statement: Formula
    belief: float
    policy: str

    def __post_init__(self):
        if self.policy not in POLICIES:
            raise ValueError(f"unknown policy {self.policy!r}")
        if not -PROB_TOL <= self.belief <= 1 + PROB_TOL:
            raise ValueError(f"belief {self.belief} outside [0, 1]")


@dataclass
class BeliefReport:
    entries: list[BeliefEntry] = field(default_factory=list)

    def add(self, statement: Formula, belief, policy: str) -> None:
        self.entries.append(BeliefEntry(statement, float(belief), policy))

    def to_dict(self) -> dict:
        return {
            "entries": [
                {"statement": render(e.statement), "belief": e.belief, "policy": e.policy}
                for e in self.entries
            ]
        }


def possibility_ratio(worlds: WorldSet, q: Formula) -> Fraction:
    """Exact fraction of ``worlds`` in which ``q`` holds."""
    total = len(worlds)
    if total == 0:
        raise UndefinedRatioError("possibility ratio over an empty world set")
    return Fraction(count_models(q, worlds), total)


def reliable_belief(worlds: WorldSet, partition: Partition, q: Formula) -> float:
    """Sum over cells of p(cell) times the share of the cell's worlds where q holds."""
    qv = truth_vector(q, worlds.vocab)
    total = 0.0
    for (_, p), m in zip(partition.cells, partition.cell_masks(worlds)):
        total += p * np.count_nonzero(m & qv) / np.count_nonzero(m)
    return min(1.0, max(0.0, total))


def maxent_distribution(
    worlds: WorldSet,
    statements: Sequence[tuple[Formula, float]],
    *,
    tol: float = 1e-12,
    max_iter: int = 10_000,
) -> np.ndarray:
    """Maximum-entropy mass vector over ``worlds`` matching point probabilities.

    Iterative proportional fitting from the uniform distribution; each
    sweep rescales the mass inside and outside every statement to its
    target. Raises ``ValueError`` when the targets cannot be met.
    """
    if not worlds:
        raise UndefinedRatioError("no admissible worlds")
    mass = worlds.mask.astype(float)
    mass /= mass.sum()
    vectors = [(truth_vector(f, worlds.vocab) & worlds.mask, float(p)) for f, p in statements]
    for _ in range(max_iter):
        worst = 0.0
        for v, p in vectors:
            inside = mass[v].sum()
            worst = max(worst, abs(inside - p))
            if (inside == 0 and p > 0) or (inside == 1 and p < 1):
                raise ValueError("point probabilities are inconsistent with the worlds")
            if inside > 0:
                mass[v] *= p / inside
            if inside < 1:
                mass[worlds.mask & ~v] *= (1 - p) / (1 - inside)
        if worst < tol:
            return mass
    raise ValueError("point probabilities did not converge; they may be inconsistent")


def point_belief(
    worlds: WorldSet, statements: Sequence[tuple[Formula, float]], q: Formula
) -> float:
    mass = maxent_distribution(worlds, statements)
    return float(min(1.0, max(0.0, mass[truth_vector(q, worlds.vocab)].sum())))


def expected_error(
    beliefs: Sequence[tuple[Formula, float]], true_probs: Sequence[tuple[Formula, float]]
) -> float:
    """Quadratic expected error: sum of p(1-b)^2 + (1-p)b^2 per statement."""
    if len(beliefs) != len(true_probs):
        raise ValueError(
            f"{len(beliefs)} beliefs but {len(true_probs)} true probabilities"
        )
    total = 0.0
    for (s, b), (t, p) in zip(beliefs, true_probs):
        if s != t:
            raise ValueError(f"statement mismatch: {render(s)!r} vs {render(t)!r}")
        for v in (b, p):
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"value {v} outside [0, 1]")
        total += p * (1 - b) ** 2 + (1 - p) * b**2
    return total


# ---------------------------------------------------------------------------
# Causal-chain emulation of Laplace's rule
# ---------------------------------------------------------------------------


def chain_vocabulary(n_causes: int, free_atoms: int = 0) -> Vocabulary:
    """Target ``a``, candidate causes ``b, c, d, ...``, then free atoms ``z1, z2, ...``."""
    total = 1 + n_causes + free_atoms
    if total > MAX_ATOMS:
        raise ValueError(f"{total} atoms exceeds the cap of {MAX_ATOMS}")
    letters = [chr(ord("a") + i) for i in range(1 + n_causes)]
    return Vocabulary(letters + [f"z{i + 1}" for i in range(free_atoms)])


@dataclass(frozen=True)
class InductionState:
    """Chain of causal rules posited after ``observations`` occurrences of ``target``."""

    vocab: Vocabulary
    target: str
    causes: tuple[str, ...]
    chain: tuple[Formula, ...] = ()

    @property
    def observations(self) -> int:
        return len(self.chain)

    def observe(self) -> "InductionState":
        """Posit the next rule: newest cause implies the previous link."""
        causes = self.causes
        n = len(self.chain)
        if n >= len(causes):
            raise ValueError("no candidate cause left to extend the chain")
        effect = self.target if n == 0 else causes[n - 1]
        rule = Implies(Atom(causes[n]), Atom(effect))
        return InductionState(self.vocab, self.target, causes, self.chain + (rule,))

    def worlds(self) -> WorldSet:
        return models(conjoin(self.chain), self.vocab)

    def ratio(self) -> Fraction:
        return possibility_ratio(self.worlds(), Atom(self.target))


def laplace_sequence(n_max: int, free_atoms: int = 0) -> list[Fraction]:
    """Possibility ratio of the target after 0..n_max observations.

    >>> [str(x) for x in laplace_sequence(3)]
    ['1/2', '2/3', '3/4', '4/5']
    """
    if n_max < 0 or free_atoms < 0:
        raise ValueError("n_max and free_atoms must be non-negative")
    vocab = chain_vocabulary(n_max, free_atoms)
    state = InductionState(vocab, "a", vocab.atoms[1 : 1 + n_max])
    out = [state.ratio()]
    for _ in range(n_max):
        state = state.observe()
        out.append(state.ratio())
    return out


# ---------------------------------------------------------------------------
# Precise reliability of pure ratios
# ---------------------------------------------------------------------------


def ratio_truth_fractions(m: int, true_world: int) -> dict[Fraction, Fraction]:
    """For every statement class over ``m`` worlds, group by ratio k/m.

    Returns, per ratio, the fraction of statements in that group that
    hold at ``true_world``. Enumerates all 2**m subsets.
    """
    if not 0 <= true_world < m:
        raise ValueError("true_world must index one of the m worlds")
    hits: dict[int, int] = {}
    sizes: dict[int, int] = {}
    for k in range(m + 1):
        for subset in combinations(range(m), k):
            sizes[k] = sizes.get(k, 0) + 1
            hits[k] = hits.get(k, 0) + (true_world in subset)
    return {Fraction(k, m): Fraction(hits[k], sizes[k]) for k in sizes}


# ---------------------------------------------------------------------------
# Accuracy versus reliability illustration
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Table1Row:
    belief_a: float
    belief_b: float
    expected_error: float
    reliability: str
    policy: str


def table1(p_a: float = 0.8, p_b: float = 0.6) -> list[Table1Row]:
    """Beliefs in ``a`` and ``b`` under four policies, given only p(a) and p(b).

    Rows: point probabilities; partition on ``a``; partition on ``b``;
    pure possibility ratio. Expected error is scored against p(a), p(b).
    """
    vocab = Vocabulary(["a", "b"])
    a, b = Atom("a"), Atom("b")
    worlds = WorldSet.full(vocab)
    truth = [(a, p_a), (b, p_b)]

    def row(beliefs, reliability, policy):
        return Table1Row(
            beliefs[0][1], beliefs[1][1], expected_error(beliefs, truth), reliability, policy
        )

    point = [(f, point_belief(worlds, truth, f)) for f in (a, b)]
    rows = [row(point, "none guaranteed", "point")]
    for cell, p in ((a, p_a), (b, p_b)):
        part = Partition([(cell, p), (~cell, 1 - p)])
        beliefs = [(f, reliable_belief(worlds, part, f)) for f in (a, b)]
        rows.append(row(beliefs, "provably reliable", "reliable"))
    ratio = [(f, float(possibility_ratio(worlds, f))) for f in (a, b)]
    rows.append(row(ratio, "precisely reliable", "ratio"))
    return rows
