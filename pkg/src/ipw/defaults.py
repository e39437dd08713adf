"""Normal default theories: extensions and probabilistic irrelevance audits."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from itertools import combinations
from typing import Sequence

import numpy as np

from .credal import CredalConstraint, query_bounds
from .logic import (
    Atom,
    Formula,
    Not,
    Vocabulary,
    WorldSet,
    conjoin,
    models,
    render,
    truth_vector,
)

MAX_DEFAULTS = 12
MODES = ("standard", "introspective")


class TheoryError(ValueError):
    pass


@dataclass(frozen=True)
class DefaultRule:
    """``prerequisite : justification / consequent``; must be normal."""

    prerequisite: Formula
    justification: Formula
    consequent: Formula

    def __post_init__(self):
        if self.justification != self.consequent:
            raise TheoryError(
                f"default {self} is not normal: justification must equal consequent"
            )

    @classmethod
    def normal(cls, prerequisite: Formula, consequent: Formula) -> "DefaultRule":
        return cls(prerequisite, consequent, consequent)

    def __str__(self) -> str:
        return (
            f"{render(self.prerequisite)} : {render(self.justification)}"
            f" / {render(self.consequent)}"
        )


@dataclass(frozen=True)
class DefaultTheory:
    vocab: Vocabulary
    facts: tuple[Formula, ...] = ()
    axioms: tuple[Formula, ...] = ()
    defaults: tuple[DefaultRule, ...] = ()

    def __post_init__(self):
        for name in ("facts", "axioms", "defaults"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        if len(self.defaults) > MAX_DEFAULTS:
            raise TheoryError(f"{len(self.defaults)} defaults exceeds the cap of {MAX_DEFAULTS}")
        for f in self._formulas():
            unknown = f.atoms() - set(self.vocab.atoms)
            if unknown:
                raise TheoryError(f"unknown atom {sorted(unknown)[0]!r} in {render(f)!r}")
        if not self.base_worlds():
            raise TheoryError("facts and axioms are jointly unsatisfiable")

    def _formulas(self):
        yield from self.facts
        yield from self.axioms
        for d in self.defaults:
            yield from (d.prerequisite, d.justification, d.consequent)

    def axiom_worlds(self) -> WorldSet:
        return models(conjoin(self.axioms), self.vocab)

    def base_worlds(self) -> WorldSet:
        return models(conjoin(self.facts + self.axioms), self.vocab)


@dataclass(frozen=True)
class Extension:
    believed: WorldSet
    applied: frozenset[int]

    def entails(self, f: Formula) -> bool:
        return not bool((self.believed.mask & ~truth_vector(f, self.believed.vocab)).any())

    def consistent_with(self, f: Formula) -> bool:
        return bool((self.believed.mask & truth_vector(f, self.believed.vocab)).any())


def _grounded_closure(
    base: np.ndarray, rules: Sequence[tuple[np.ndarray, np.ndarray]], believed: np.ndarray
) -> tuple[frozenset[int], np.ndarray]:
    """Apply rules in stages from ``base``, testing consistency against ``believed``.

    Each rule is a (prerequisite, consequent) truth-vector pair. Returns
    the applied indices and the resulting world mask.
    """
    current = base.copy()
    applied: set[int] = set()
    changed = True
    while changed:
        changed = False
        for i, (pre, cons) in enumerate(rules):
            if i in applied:
                continue
            if not (current & ~pre).any() and (believed & cons).any():
                applied.add(i)
                current &= cons
                changed = True
    return frozenset(applied), current


def compute_extensions(theory: DefaultTheory) -> list[Extension]:
    """All Reiter extensions of a normal default theory.

    Every subset of defaults is a candidate: its consequents plus the
    facts and axioms fix a believed set E, which is accepted when the
    staged construction (prerequisites derived stepwise, justifications
    checked against E) reproduces E exactly.
    """
    vocab = theory.vocab
    base = theory.base_worlds().mask
    rules = [
        (truth_vector(d.prerequisite, vocab), truth_vector(d.consequent, vocab))
        for d in theory.defaults
    ]
    seen: dict[bytes, Extension] = {}
    for k in range(len(rules) + 1):
        for subset in combinations(range(len(rules)), k):
            believed = base.copy()
            for i in subset:
                believed &= rules[i][1]
            if not believed.any():
                continue
            applied, closure = _grounded_closure(base, rules, believed)
            if applied != frozenset(subset) or not np.array_equal(closure, believed):
                continue
            key = believed.tobytes()
            if key not in seen:
                seen[key] = Extension(WorldSet(vocab, believed), applied)
    return list(seen.values())


def is_extension(theory: DefaultTheory, ext: Extension) -> bool:
    """Re-verify the fixed point: applied rules are exactly the applicable ones."""
    if not ext.believed:
        return False
    base = theory.base_worlds()
    expected = base.mask.copy()
    for i in ext.applied:
        expected &= truth_vector(theory.defaults[i].consequent, theory.vocab)
    if not np.array_equal(expected, ext.believed.mask):
        return False
    for i, d in enumerate(theory.defaults):
        applicable = ext.entails(d.prerequisite) and ext.consistent_with(d.justification)
        if applicable != (i in ext.applied):
            return False
    return True


# ---------------------------------------------------------------------------
# Irrelevance audit
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AuditConfig:
    tau_justify: float = 0.9
    tau_believe: float = 0.9

    def __post_init__(self):
        for name in ("tau_justify", "tau_believe"):
            v = getattr(self, name)
            if not 0.0 < v < 1.0:
                raise ValueError(f"{name} must lie in (0, 1), got {v}")


@dataclass(frozen=True)
class AuditVerdict:
    rule_index: int
    mode: str
    verdict: str
    upper_bound: float
    evidence: Formula
    constraints: tuple[CredalConstraint, ...] = field(default=(), repr=False)

    @property
    def provably_irrelevant(self) -> bool:
        return self.verdict == "provably_irrelevant"

    def to_dict(self) -> dict:
        return {
            "rule": self.rule_index,
            "mode": self.mode,
            "verdict": self.verdict,
            "upper_bound": self.upper_bound,
            "evidence": render(self.evidence),
        }


_NON_WORD = re.compile(r"\W+")


def _modal_name(f: Formula, taken: set[str]) -> str:
    if isinstance(f, Atom):
        stem = f"L_{f.name}"
    elif isinstance(f, Not) and isinstance(f.arg, Atom):
        stem = f"L_not_{f.arg.name}"
    else:
        stem = "L_" + _NON_WORD.sub("_", render(f).replace("!", "not_")).strip("_")
    name = stem
    k = 1
    while name in taken:
        k += 1
        name = f"{stem}_{k}"
    taken.add(name)
    return name


class _ModalAtoms:
    """Fresh belief atoms ``L_phi`` keyed by the canonical text of ``phi``."""

    def __init__(self, vocab: Vocabulary):
        self.taken = set(vocab.atoms)
        self.names: dict[str, str] = {}

    def __getitem__(self, f: Formula) -> Atom:
        key = render(f)
        if key not in self.names:
            self.names[key] = _modal_name(f, self.taken)
        return Atom(self.names[key])


def _applicable_somewhere(theory: DefaultTheory, index: int) -> bool:
    return any(index in e.applied for e in compute_extensions(theory))


def audit_rule(
    theory: DefaultTheory,
    rule_index: int,
    mode: str = "standard",
    config: AuditConfig | None = None,
) -> AuditVerdict:
    """Can the evidence cap the rule's conclusion below believable strength?

    The audited rule's own justification is left out; every other rule
    contributes ``P(consequent | condition) >= tau_justify``. In standard
    mode the condition is the rule's prerequisite and the evidence is the
    conjunction of facts. In introspective mode both are built from
    fresh, unlinked belief atoms: ``L_prereq & !L_not_consequent`` per
    rule, with the facts' ``L`` atoms added to the evidence.
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    config = config or AuditConfig()
    if not 0 <= rule_index < len(theory.defaults):
        raise IndexError(f"no default with index {rule_index}")
    if not _applicable_somewhere(theory, rule_index):
        raise TheoryError(f"default {rule_index} is not applied in any extension")

    rule = theory.defaults[rule_index]
    if mode == "standard":
        vocab = theory.vocab
        conditions = [d.prerequisite for d in theory.defaults]
        evidence = conjoin(theory.facts)
    else:
        modal = _ModalAtoms(theory.vocab)
        # Register names up front so the vocabulary is fixed before use.
        for f in theory.facts:
            modal[f]
        for d in theory.defaults:
            modal[d.prerequisite]
            modal[Not(d.consequent)]
        vocab = theory.vocab.extend(modal.names.values())
        conditions = [
            modal[d.prerequisite] & ~modal[Not(d.consequent)] for d in theory.defaults
        ]
        evidence = conjoin([modal[f] for f in theory.facts] + [conditions[rule_index]])

    worlds = models(conjoin(theory.axioms), vocab)
    constraints = tuple(
        CredalConstraint(d.consequent, config.tau_justify, 1.0, given=cond)
        for j, (d, cond) in enumerate(zip(theory.defaults, conditions))
        if j != rule_index
    )
    bounds = query_bounds(worlds, constraints, rule.consequent, evidence)
    verdict = (
        "provably_irrelevant" if bounds.hi < config.tau_believe else "not_provably_irrelevant"
    )
    return AuditVerdict(rule_index, mode, verdict, bounds.hi, evidence, constraints)
