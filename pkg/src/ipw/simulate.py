"""Monte Carlo checks of policy reliability.

Trials are processed in fixed-size blocks; block ``k`` draws from a
generator seeded by ``(seed, k)``. Block results are reduced in block
order, so the report is bit-identical for any number of workers.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np

from .logic import Atom, Not, Or, Vocabulary, WorldSet, conjoin, models, truth_vector
from .policies import Partition

BLOCK_SIZE = 4096
MIN_BIN_COUNT = 30

TWO_EXPERT_POLICIES = ("follow_expert1", "follow_expert2", "average", "independent_fusion")
PARTITION_SOURCES = ("none", "single-marginal")


# ---------------------------------------------------------------------------
# Calibration bookkeeping
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CalibrationBin:
    lo: float
    hi: float
    count: int
    mean_belief: float
    truth_fraction: float


@dataclass(frozen=True)
class CalibrationReport:
    policy: str
    bins: tuple[CalibrationBin, ...]
    calibration_error: float
    brier: float
    n: int

    def to_dict(self) -> dict:
        d = asdict(self)
        d["bins"] = [asdict(b) for b in self.bins]
        return d


class _Accumulator:
    """Per-bin sums; merging is element-wise addition."""

    def __init__(self, bins: int):
        self.bins = bins
        self.count = np.zeros(bins, dtype=np.int64)
        self.belief = np.zeros(bins)
        self.truth = np.zeros(bins)
        self.sq = 0.0

    def add(self, beliefs: np.ndarray, truths: np.ndarray, weight: np.ndarray | None = None):
        beliefs = np.asarray(beliefs, dtype=float)
        truths = np.asarray(truths, dtype=float)
        # [lo, hi) bins; 1.0 joins the top bin. The nudge absorbs float error on exact edges.
        idx = np.minimum(np.floor(beliefs * self.bins + 1e-9).astype(np.int64), self.bins - 1)
        self.count += np.bincount(idx, minlength=self.bins)
        self.belief += np.bincount(idx, weights=beliefs, minlength=self.bins)
        self.truth += np.bincount(idx, weights=truths, minlength=self.bins)
        self.sq += float(np.sum((beliefs - truths) ** 2))

    def merge(self, other: "_Accumulator") -> None:
        self.count += other.count
        self.belief += other.belief
        self.truth += other.truth
        self.sq += other.sq

    def report(self, policy: str, min_count: int = MIN_BIN_COUNT) -> CalibrationReport:
        bins = []
        err = 0.0
        for k in range(self.bins):
            n = int(self.count[k])
            mean_b = self.belief[k] / n if n else 0.0
            frac = self.truth[k] / n if n else 0.0
            bins.append(CalibrationBin(k / self.bins, (k + 1) / self.bins, n, mean_b, frac))
            if n >= min_count:
                err = max(err, abs(mean_b - frac))
        total = int(self.count.sum())
        brier = self.sq / total if total else 0.0
        return CalibrationReport(policy, tuple(bins), float(err), float(brier), total)


def calibration_report(
    beliefs, truths, policy: str = "", bins: int = 10, min_count: int = MIN_BIN_COUNT
) -> CalibrationReport:
    acc = _Accumulator(bins)
    acc.add(np.asarray(beliefs), np.asarray(truths))
    return acc.report(policy, min_count)


def _block_rng(seed: int, block: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed & (2**64 - 1), block]))


def _run_blocks(
    trials: int, workers: int, fn: Callable[[int, int], object]
) -> list:
    blocks = [(k, min(BLOCK_SIZE, trials - k * BLOCK_SIZE)) for k in range(math.ceil(trials / BLOCK_SIZE))]
    if workers <= 1:
        return [fn(k, n) for k, n in blocks]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda kn: fn(*kn), blocks))


# ---------------------------------------------------------------------------
# Two experts
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TwoExpertsConfig:
    trials: int = 100_000
    seed: int = 0
    quality1: float = 0.9
    quality2: float = 0.7
    redundancy: float = 0.0
    base_rate: float = 0.5
    bins: int = 10
    min_bin_count: int = MIN_BIN_COUNT

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be positive")
        for name in ("quality1", "quality2"):
            q = getattr(self, name)
            if not 0.5 < q < 1.0:
                raise ValueError(f"{name} must lie in (0.5, 1), got {q}")
        if self.quality1 < self.quality2:
            raise ValueError("expert1 must be at least as accurate as expert2")
        if not 0.0 <= self.redundancy <= 1.0:
            raise ValueError("redundancy must lie in [0, 1]")
        if not 0.0 < self.base_rate < 1.0:
            raise ValueError("base_rate must lie in (0, 1)")
        if self.bins < 1:
            raise ValueError("bins must be positive")

    @property
    def effective_quality2(self) -> float:
        # A copied signal is right as often as expert1's.
        r = self.redundancy
        return r * self.quality1 + (1 - r) * self.quality2


def _posterior(signal: np.ndarray, quality: float, base_rate: float) -> np.ndarray:
    hit = quality * base_rate / (quality * base_rate + (1 - quality) * (1 - base_rate))
    miss = (1 - quality) * base_rate / ((1 - quality) * base_rate + quality * (1 - base_rate))
    return np.where(signal, hit, miss)


def _logit(p):
    return np.log(p) - np.log1p(-p)


def _two_experts_block(cfg: TwoExpertsConfig, block: int, n: int) -> dict[str, _Accumulator]:
    rng = _block_rng(cfg.seed, block)
    truth = rng.random(n) < cfg.base_rate
    s1 = np.where(rng.random(n) < cfg.quality1, truth, ~truth)
    own = np.where(rng.random(n) < cfg.quality2, truth, ~truth)
    copy = rng.random(n) < cfg.redundancy
    s2 = np.where(copy, s1, own)

    p1 = _posterior(s1, cfg.quality1, cfg.base_rate)
    p2 = _posterior(s2, cfg.effective_quality2, cfg.base_rate)
    fused = 1.0 / (1.0 + np.exp(-(_logit(p1) + _logit(p2) - _logit(cfg.base_rate))))
    reports = {
        "follow_expert1": p1,
        "follow_expert2": p2,
        "average": (p1 + p2) / 2,
        "independent_fusion": fused,
    }
    out = {}
    for name, r in reports.items():
        acc = _Accumulator(cfg.bins)
        acc.add(r, truth)
        out[name] = acc
    return out


def run_two_experts(cfg: TwoExpertsConfig, workers: int = 1) -> dict[str, CalibrationReport]:
    """Calibration of four ways to combine two individually calibrated experts.

    Expert2's signal duplicates expert1's with probability ``redundancy``
    and is otherwise drawn independently given the truth. Each expert
    reports its exact posterior given its own signal.
    """
    parts = _run_blocks(cfg.trials, workers, lambda k, n: _two_experts_block(cfg, k, n))
    totals = {name: _Accumulator(cfg.bins) for name in TWO_EXPERT_POLICIES}
    for part in parts:
        for name in TWO_EXPERT_POLICIES:
            totals[name].merge(part[name])
    return {name: totals[name].report(name, cfg.min_bin_count) for name in TWO_EXPERT_POLICIES}


# ---------------------------------------------------------------------------
# Reliability audit over random domains
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ReliabilityAuditConfig:
    trials: int = 10_000
    seed: int = 0
    vocab_size: int = 3
    axiom_density: float = 0.5
    partition_source: str = "single-marginal"
    bins: int = 10
    min_bin_count: int = MIN_BIN_COUNT

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be positive")
        if not 1 <= self.vocab_size <= 4:
            raise ValueError("vocab_size must lie in [1, 4]")
        if self.axiom_density < 0:
            raise ValueError("axiom_density must be non-negative")
        if self.partition_source not in PARTITION_SOURCES:
            raise ValueError(f"partition_source must be one of {PARTITION_SOURCES}")
        if self.bins < 1:
            raise ValueError("bins must be positive")


@dataclass
class Domain:
    """One sampled trial: admissible worlds, partition, and the true world."""

    worlds: WorldSet
    partition: Partition
    weights: np.ndarray = field(repr=False)
    true_world: int = 0


def _random_axioms(rng: np.random.Generator, vocab: Vocabulary, density: float):
    n = len(vocab)
    count = rng.poisson(density * n)
    axioms = []
    for _ in range(count):
        width = min(n, 2)
        picks = rng.choice(n, size=width, replace=False)
        lits = [
            Atom(vocab.atoms[i]) if rng.random() < 0.5 else Not(Atom(vocab.atoms[i]))
            for i in picks
        ]
        axioms.append(lits[0] if len(lits) == 1 else Or(lits[0], lits[1]))
    return axioms


def sample_domain(rng: np.random.Generator, cfg: ReliabilityAuditConfig) -> Domain:
    vocab = Vocabulary([f"p{i}" for i in range(cfg.vocab_size)])
    while True:
        worlds = models(conjoin(_random_axioms(rng, vocab, cfg.axiom_density)), vocab)
        if worlds:
            break
    partition = Partition.trivial()
    if cfg.partition_source == "single-marginal":
        splitting = [
            a for a in vocab.atoms
            if 0 < np.count_nonzero(truth_vector(Atom(a), vocab) & worlds.mask) < len(worlds)
        ]
        if splitting:
            atom = Atom(splitting[rng.integers(len(splitting))])
            p = float(rng.random())
            partition = Partition([(atom, p), (Not(atom), 1.0 - p)])
    weights = partition.world_weights(worlds)
    if cfg.partition_source == "none":
        true_world = int(rng.choice(worlds.indices()))
    else:
        # cell by probability, then uniform within the cell
        masks = partition.cell_masks(worlds)
        cell = int(rng.choice(len(masks), p=[p for _, p in partition.cells]))
        true_world = int(rng.choice(np.flatnonzero(masks[cell])))
    return Domain(worlds, partition, weights, true_world)


def statement_beliefs(domain: Domain) -> tuple[np.ndarray, np.ndarray]:
    """Belief and truth for every statement class (subset of admissible worlds).

    Subset ``s`` contains the ``j``-th admissible world iff bit ``j`` of
    ``s`` is set; its belief is the sum of the member worlds' weights.
    """
    idx = domain.worlds.indices()
    w = domain.weights[idx]
    sums = np.zeros(1)
    for x in w:
        sums = np.concatenate([sums, sums + x])
    pos = int(np.flatnonzero(idx == domain.true_world)[0])
    truth = (np.arange(sums.size) >> pos) & 1
    return np.clip(sums, 0.0, 1.0), truth.astype(bool)


def _audit_block(cfg: ReliabilityAuditConfig, block: int, n: int) -> _Accumulator:
    rng = _block_rng(cfg.seed, block)
    acc = _Accumulator(cfg.bins)
    for _ in range(n):
        beliefs, truth = statement_beliefs(sample_domain(rng, cfg))
        acc.add(beliefs, truth)
    return acc


def reliability_audit(cfg: ReliabilityAuditConfig, workers: int = 1) -> CalibrationReport:
    """Bin every statement's belief against its truth at the sampled true world."""
    parts = _run_blocks(cfg.trials, workers, lambda k, n: _audit_block(cfg, k, n))
    total = _Accumulator(cfg.bins)
    for part in parts:
        total.merge(part)
    policy = "ratio" if cfg.partition_source == "none" else "reliable"
    return total.report(policy, cfg.min_bin_count)
