import math
from fractions import Fraction

import numpy as np
import pytest

from ipw.logic import Vocabulary, WorldSet
from ipw.policies import Partition
from ipw.simulate import (
    Domain,
    ReliabilityAuditConfig,
    TwoExpertsConfig,
    _block_rng,
    calibration_report,
    reliability_audit,
    run_two_experts,
    sample_domain,
    statement_beliefs,
)


class TestCalibrationReport:
    def test_bin_edges(self):
        r = calibration_report([0.0, 0.1, 0.5, 0.99, 1.0], [0, 0, 1, 1, 1], bins=10, min_count=1)
        counts = [b.count for b in r.bins]
        assert counts == [1, 1, 0, 0, 0, 1, 0, 0, 0, 2]
        assert r.bins[-1].lo == 0.9 and r.bins[-1].hi == 1.0

    def test_perfect(self):
        r = calibration_report([0.0, 1.0, 1.0], [0, 1, 1], min_count=1)
        assert r.calibration_error == 0.0
        assert r.brier == 0.0

    def test_small_bins_ignored(self):
        r = calibration_report([0.55] * 10, [0] * 10)
        assert r.calibration_error == 0.0
        r = calibration_report([0.55] * 30, [0] * 30)
        assert r.calibration_error == pytest.approx(0.55)

    def test_brier(self):
        r = calibration_report([0.8, 0.3], [1, 0])
        assert r.brier == pytest.approx((0.04 + 0.09) / 2)


class TestTwoExperts:
    def test_config_validation(self):
        with pytest.raises(ValueError):
            TwoExpertsConfig(quality1=0.7, quality2=0.9)
        with pytest.raises(ValueError):
            TwoExpertsConfig(quality1=1.0)
        with pytest.raises(ValueError):
            TwoExpertsConfig(redundancy=1.5)

    def test_expert1_calibrated(self):
        r = run_two_experts(TwoExpertsConfig(trials=100_000, seed=1))
        assert r["follow_expert1"].calibration_error < 0.03

    def test_duplicated_signal_overconfident(self):
        cfg = TwoExpertsConfig(trials=100_000, seed=2, quality1=0.9, quality2=0.9, redundancy=1.0)
        r = run_two_experts(cfg)
        assert r["independent_fusion"].calibration_error > r["follow_expert1"].calibration_error

    def test_near_perfect_expert(self):
        r = run_two_experts(TwoExpertsConfig(trials=100_000, seed=3, quality1=0.999))
        assert r["follow_expert1"].brier < 0.01

    def test_fusion_helps_when_independent(self):
        r = run_two_experts(TwoExpertsConfig(trials=100_000, seed=4, redundancy=0.0))
        assert r["independent_fusion"].brier <= r["follow_expert1"].brier

    @pytest.mark.parametrize("rho", [0.0, 0.3, 0.7, 1.0])
    def test_both_experts_calibrated(self, rho):
        r = run_two_experts(TwoExpertsConfig(trials=200_000, seed=5, redundancy=rho))
        for name in ("follow_expert1", "follow_expert2"):
            assert r[name].calibration_error < 0.02

    def test_analytic_brier(self):
        # a calibrated two-valued reporter has Brier q(1-q) at base rate 0.5
        r = run_two_experts(TwoExpertsConfig(trials=200_000, seed=6))
        assert r["follow_expert1"].brier == pytest.approx(0.9 * 0.1, abs=3e-3)

    def test_deterministic_under_parallelism(self):
        cfg = TwoExpertsConfig(trials=50_000, seed=7, redundancy=0.4)
        assert run_two_experts(cfg, workers=1) == run_two_experts(cfg, workers=4)

    def test_seed_changes_result(self):
        a = run_two_experts(TwoExpertsConfig(trials=20_000, seed=1))
        b = run_two_experts(TwoExpertsConfig(trials=20_000, seed=2))
        assert a != b


class TestReliabilityAudit:
    def test_pure_ratio_within_binomial_noise(self):
        cfg = ReliabilityAuditConfig(trials=2000, seed=11, partition_source="none")
        r = reliability_audit(cfg)
        for b in r.bins:
            if b.count == 0:
                continue
            sigma = math.sqrt(max(b.mean_belief * (1 - b.mean_belief), 1e-12) / b.count)
            assert abs(b.truth_fraction - b.mean_belief) <= 3 * sigma + 1e-12

    def test_pure_ratio_exact_per_trial(self):
        cfg = ReliabilityAuditConfig(partition_source="none", vocab_size=4)
        rng = _block_rng(99, 0)
        for _ in range(200):
            dom = sample_domain(rng, cfg)
            beliefs, truth = statement_beliefs(dom)
            m = len(dom.worlds)
            sizes = np.array([bin(s).count("1") for s in range(beliefs.size)])
            for k in range(m + 1):
                in_group = sizes == k
                frac = Fraction(int(truth[in_group].sum()), int(in_group.sum()))
                assert frac == Fraction(k, m)
                assert np.allclose(beliefs[in_group], k / m)

    def test_single_marginal(self):
        cfg = ReliabilityAuditConfig(trials=10_000, seed=12, partition_source="single-marginal")
        assert reliability_audit(cfg).calibration_error < 0.05

    def test_single_world_domain(self):
        v = Vocabulary(["p0"])
        w = WorldSet.from_indices(v, [1])
        part = Partition.trivial()
        dom = Domain(w, part, part.world_weights(w), 1)
        beliefs, truth = statement_beliefs(dom)
        assert beliefs.tolist() == [0.0, 1.0]
        assert truth.tolist() == [False, True]
        r = calibration_report(beliefs, truth, min_count=1)
        assert r.calibration_error == 0.0 and r.brier == 0.0

    def test_true_world_follows_cell_probabilities(self):
        from ipw.logic import truth_vector

        cfg = ReliabilityAuditConfig(vocab_size=2, axiom_density=0.0)
        rng = _block_rng(3, 0)
        residuals = []
        for _ in range(4000):
            dom = sample_domain(rng, cfg)
            cell, p = dom.partition.cells[0]
            inside = truth_vector(cell, dom.worlds.vocab)[dom.true_world]
            residuals.append(float(inside) - p)
        # mean of indicator minus stated probability is zero in expectation
        assert abs(np.mean(residuals)) < 4 * 0.5 / math.sqrt(len(residuals))

    def test_deterministic_under_parallelism(self):
        cfg = ReliabilityAuditConfig(trials=9000, seed=13)
        assert reliability_audit(cfg, workers=1) == reliability_audit(cfg, workers=3)

    def test_config_validation(self):
        with pytest.raises(ValueError):
            ReliabilityAuditConfig(vocab_size=5)
        with pytest.raises(ValueError):
            ReliabilityAuditConfig(partition_source="pairs")
