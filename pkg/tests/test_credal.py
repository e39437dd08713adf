import random

import numpy as np
import pytest

from ipw.credal import (
    ConditioningImpossibleError,
    CredalConstraint,
    CredalError,
    ExpertAssessment,
    InfeasibleError,
    LinearSystem,
    feasible,
    merge_experts,
    query_bounds,
)
from ipw.logic import TRUE, Atom, Not, Vocabulary, WorldSet, conjoin, models, parse_formula

from oracles import polytope_vertices, random_formula, vertex_bounds

a, b, c, d = (Atom(x) for x in "abcd")
AB = Vocabulary(["a", "b"])
FULL_AB = WorldSet.full(AB)
P = CredalConstraint.point


def random_system(rng: random.Random, atoms: list[str], max_constraints: int = 3):
    cons = []
    for _ in range(rng.randint(0, max_constraints)):
        target = random_formula(rng, atoms, 2)
        given = TRUE if rng.random() < 0.5 else random_formula(rng, atoms, 2)
        lo, hi = sorted(round(rng.random(), 2) for _ in range(2))
        if rng.random() < 0.25:
            hi = lo
        cons.append(CredalConstraint(target, lo, hi, given))
    return cons


class TestFeasible:
    def test_marginals(self):
        assert feasible(FULL_AB, [P(a, 0.8), P(b, 0.6)])

    def test_contradictory_points(self):
        assert not feasible(FULL_AB, [P(a, 0.3), P(a, 0.7)])

    def test_modus_ponens(self):
        assert not feasible(FULL_AB, [P(b, 1.0, given=a), P(a, 1.0), P(b, 0.0)])

    def test_empty_worlds(self):
        assert not feasible(WorldSet.empty(AB), [])

    def test_vacuous_conditional(self):
        # P(a) = 0 leaves P(b | a) unconstrained
        assert feasible(FULL_AB, [P(a, 0.0), P(b, 0.3, given=a), P(b, 0.9, given=a)])


class TestQueryBounds:
    def test_frechet(self):
        lo, hi = query_bounds(FULL_AB, [P(a, 0.8), P(b, 0.6)], a & b)
        assert (lo, hi) == pytest.approx((0.4, 0.6), abs=1e-6)

    def test_vacuous(self):
        assert query_bounds(FULL_AB, [], a) == pytest.approx((0.0, 1.0), abs=1e-9)

    def test_justification_caps_conclusion(self):
        v = Vocabulary("abcd")
        worlds = models(parse_formula("(d -> !b) & (c -> a)"), v)
        cons = [CredalConstraint(d, 0.9, 1.0, given=c)]
        lo, hi = query_bounds(worlds, cons, b, c)
        assert lo == pytest.approx(0.0, abs=1e-6)
        assert hi == pytest.approx(0.1, abs=1e-6)

    def test_infeasible(self):
        with pytest.raises(InfeasibleError):
            query_bounds(FULL_AB, [P(a, 0.3), P(a, 0.7)], b)

    def test_conditioning_impossible(self):
        with pytest.raises(ConditioningImpossibleError):
            query_bounds(FULL_AB, [P(a, 0.0)], b, a)

    def test_conditioning_on_possible_region_only(self):
        # P(a) may be zero or positive; only positive-P(a) models count
        lo, hi = query_bounds(FULL_AB, [CredalConstraint(a & b, 0.0, 0.0)], b, a)
        assert (lo, hi) == pytest.approx((0.0, 0.0), abs=1e-9)

    def test_world_cap(self):
        v = Vocabulary([f"p{i}" for i in range(13)])
        with pytest.raises(CredalError, match="cap"):
            LinearSystem.compile(WorldSet.full(v), [])

    def test_compiled_rows_accept_satisfying_masses(self):
        sys_ = LinearSystem.compile(FULL_AB, [P(a, 0.8), P(b, 0.6)])
        # independent joint over worlds (ab=00, 10, 01, 11)
        x = np.array([0.2 * 0.4, 0.8 * 0.4, 0.2 * 0.6, 0.8 * 0.6])
        assert sys_.satisfied_by(x)
        assert not sys_.satisfied_by(np.array([0.25, 0.25, 0.25, 0.25]))


class TestAgainstOracle:
    def test_random_systems(self):
        rng = random.Random(2024)
        compared = 0
        while compared < 60:
            atoms = list("abc"[: rng.randint(1, 3)])
            v = Vocabulary(atoms)
            worlds = WorldSet.full(v)
            cons = random_system(rng, atoms)
            q = random_formula(rng, atoms, 2)
            given = TRUE if rng.random() < 0.5 else random_formula(rng, atoms, 2)
            expected = vertex_bounds(cons, atoms, worlds.mask, q, given)
            if expected == "infeasible":
                assert not feasible(worlds, cons)
                continue
            if expected == "impossible":
                with pytest.raises(ConditioningImpossibleError):
                    query_bounds(worlds, cons, q, given)
                continue
            got = query_bounds(worlds, cons, q, given)
            assert got == pytest.approx(expected, abs=1e-4)
            compared += 1

    def test_adding_constraints_never_widens(self):
        rng = random.Random(5)
        checked = 0
        while checked < 40:
            atoms = list("abc")
            worlds = WorldSet.full(Vocabulary(atoms))
            cons = random_system(rng, atoms, 2)
            extra = random_system(rng, atoms, 2)
            q = random_formula(rng, atoms, 2)
            if not feasible(worlds, cons + extra):
                continue
            try:
                wide = query_bounds(worlds, cons, q)
                narrow = query_bounds(worlds, cons + extra, q)
            except ConditioningImpossibleError:
                continue
            assert narrow.lo >= wide.lo - 1e-6
            assert narrow.hi <= wide.hi + 1e-6
            checked += 1

    def test_negation_symmetry(self):
        rng = random.Random(6)
        checked = 0
        while checked < 40:
            atoms = list("abc")
            worlds = WorldSet.full(Vocabulary(atoms))
            cons = random_system(rng, atoms)
            q = random_formula(rng, atoms, 2)
            given = random_formula(rng, atoms, 1)
            try:
                pos = query_bounds(worlds, cons, q, given)
                neg = query_bounds(worlds, cons, Not(q), given)
            except (InfeasibleError, ConditioningImpossibleError):
                continue
            assert neg.lo == pytest.approx(1 - pos.hi, abs=1e-6)
            assert neg.hi == pytest.approx(1 - pos.lo, abs=1e-6)
            checked += 1

    def test_fully_determined_collapses(self):
        rng = random.Random(8)
        v = Vocabulary("abc")
        worlds = WorldSet.full(v)
        for _ in range(20):
            mass = np.array([rng.random() for _ in range(8)])
            mass /= mass.sum()
            cons = []
            for w in range(7):
                lit = conjoin(
                    Atom(x) if v.assignment(w)[x] else Not(Atom(x)) for x in "abc"
                )
                cons.append(P(lit, float(mass[w])))
            q = random_formula(rng, list("abc"), 3)
            direct = float(mass[models(q, v).mask].sum())
            lo, hi = query_bounds(worlds, cons, q)
            assert lo == pytest.approx(direct, abs=1e-6)
            assert hi == pytest.approx(direct, abs=1e-6)


class TestMergeExperts:
    def test_two_point_envelope(self):
        merged = merge_experts([ExpertAssessment("e1", ((a, 0.7),)), ExpertAssessment("e2", ((a, 0.9),))])
        assert merged == [CredalConstraint(a, 0.7, 0.9)]

    def test_single_expert_identity(self):
        e = ExpertAssessment("e1", ((a, 0.8), (b, 0.6)))
        assert merge_experts([e]) == [P(a, 0.8), P(b, 0.6)]

    def test_partial_coverage(self):
        merged = merge_experts(
            [ExpertAssessment("e1", ((a, 0.2),)), ExpertAssessment("e2", ((b, 0.4), (a, 0.5)))]
        )
        assert merged == [CredalConstraint(a, 0.2, 0.5), P(b, 0.4)]

    def test_inconsistent_expert_named(self):
        bad = ExpertAssessment("shaky", ((a, 0.3), (a & b, 0.6)))
        with pytest.raises(InfeasibleError, match="shaky"):
            merge_experts([ExpertAssessment("ok", ((a, 0.5),)), bad], FULL_AB)

    def test_out_of_range(self):
        with pytest.raises(CredalError):
            ExpertAssessment("e", ((a, 1.5),))

    def test_experts_stay_feasible(self):
        e1 = ExpertAssessment("e1", ((a, 0.8), (b, 0.6)))
        e2 = ExpertAssessment("e2", ((a, 0.6), (b, 0.8)))
        merged = merge_experts([e1, e2], FULL_AB)
        assert merged == [CredalConstraint(a, 0.6, 0.8), CredalConstraint(b, 0.6, 0.8)]
        # each expert's independent completion satisfies the merged system
        system = LinearSystem.compile(FULL_AB, merged)
        for pa, pb in ((0.8, 0.6), (0.6, 0.8)):
            joint = np.array([(1 - pa) * (1 - pb), pa * (1 - pb), (1 - pa) * pb, pa * pb])
            assert system.satisfied_by(joint)

    def test_common_knowledge(self):
        """Derived bounds from the envelope contain every expert's own value."""
        rng = random.Random(9)
        atoms = list("abc")
        v = Vocabulary(atoms)
        worlds = WorldSet.full(v)
        for _ in range(15):
            experts = []
            dists = []
            stmts = [random_formula(rng, atoms, 2) for _ in range(3)]
            for k in range(3):
                mass = np.array([rng.random() for _ in range(8)])
                mass /= mass.sum()
                dists.append(mass)
                experts.append(
                    ExpertAssessment(
                        f"e{k}", tuple((f, float(mass[models(f, v).mask].sum())) for f in stmts)
                    )
                )
            merged = merge_experts(experts, worlds)
            assert feasible(worlds, merged)
            q = random_formula(rng, atoms, 2)
            lo, hi = query_bounds(worlds, merged, q)
            for mass in dists:
                value = float(mass[models(q, v).mask].sum())
                assert lo - 1e-6 <= value <= hi + 1e-6


def test_vertex_oracle_sanity():
    # the simplex over two worlds has two vertices
    verts = polytope_vertices([], ["a"], np.array([True, True]))
    assert sorted(map(tuple, verts)) == [(0.0, 1.0), (1.0, 0.0)]
