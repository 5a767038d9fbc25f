"""Tests for prospective expected learning: decision-maker priors, the
closed-form E[W2^2], the Monte Carlo estimator, and weight sweeps."""

import math

import numpy as np
import pytest
from numpy.random import Generator, Philox
from scipy.special import ndtri

import oracles
from beliefshift import (
    CurvePoint,
    ExpectedLearning,
    MixtureDist,
    NormalDist,
    PioneerSetup,
    SamplingModel,
    Study,
    TruncatedNormalDist,
    curve_points_to_csv,
    decision_maker_prior,
    expected_learning_bound_sq,
    expected_learning_mc,
    update_mixture,
    weight_sweep,
    wp_quantile,
)
from beliefshift.prospective import _batched_w2, _replicate_uniforms, _theta_from_uniforms

CONSENSUS = NormalDist(3.0, 1.0)
PIONEER = NormalDist(0.0, 3.0)


def make_setup(weight, sigma=1.0, n=50):
    return PioneerSetup(CONSENSUS, PIONEER, weight, SamplingModel(sigma, n))


class TestDecisionMakerPrior:
    def test_degenerate_weights_collapse(self):
        assert decision_maker_prior(make_setup(0.0)) is CONSENSUS
        assert decision_maker_prior(make_setup(1.0)) is PIONEER

    def test_interior_weight_builds_mixture(self):
        prior = decision_maker_prior(make_setup(0.4))
        assert isinstance(prior, MixtureDist)
        (w_p, comp_p), (w_c, comp_c) = prior.components
        assert (w_p, comp_p) == (0.4, PIONEER)
        assert (w_c, comp_c) == (0.6, CONSENSUS)

    def test_weight_validation(self):
        for bad in (-0.1, 1.1):
            with pytest.raises(ValueError):
                make_setup(bad)


class TestBoundSq:
    def test_spot_value(self):
        value = expected_learning_bound_sq(1.0, 1.0, 1)
        np.testing.assert_allclose(value, 0.5 + (1.0 - 1.0 / math.sqrt(2.0)) ** 2, rtol=1e-15)
        assert abs(value - 0.58579) < 1e-5

    def test_no_data_is_zero(self):
        assert expected_learning_bound_sq(1.0, 1.0, 0) == 0.0

    def test_large_n_limit(self):
        value = expected_learning_bound_sq(1.0, 0.01, 10**9)
        assert abs(value / 2.0 - 1.0) < 1e-6

    def test_strictly_increasing_in_n(self):
        values = [expected_learning_bound_sq(1.0, 1.0, n) for n in range(1, 200)]
        assert np.all(np.diff(values) > 0.0)

    def test_strictly_increasing_in_sigma_prior(self):
        sps = np.linspace(0.2, 5.0, 40)
        values = [expected_learning_bound_sq(sp, 1.0, 10) for sp in sps]
        assert np.all(np.diff(values) > 0.0)

    def test_strictly_decreasing_in_sigma(self):
        sigmas = np.linspace(0.2, 5.0, 40)
        values = [expected_learning_bound_sq(1.0, s, 10) for s in sigmas]
        assert np.all(np.diff(values) < 0.0)

    def test_validation(self):
        with pytest.raises(ValueError):
            expected_learning_bound_sq(0.0, 1.0, 1)
        with pytest.raises(ValueError):
            expected_learning_bound_sq(1.0, -1.0, 1)
        with pytest.raises(ValueError):
            expected_learning_bound_sq(1.0, 1.0, -1)


class TestExpectedLearningMc:
    def test_large_n_matches_quadrature_oracle(self):
        prior = NormalDist(3.0, 1.0)
        result = expected_learning_mc(prior, prior, prior, SamplingModel(1.0, 10**6),
                                      replicates=10_000, seed=0)
        oracle = oracles.expected_w2_large_n(3.0, 1.0)
        assert abs(result.estimate - oracle) <= 3.0 * result.mc_std_error

    def test_second_moment_matches_identity(self):
        prior = NormalDist(3.0, 1.0)
        result = expected_learning_mc(prior, prior, prior, SamplingModel(1.0, 1),
                                      replicates=10_000, seed=0)
        bound = expected_learning_bound_sq(1.0, 1.0, 1)
        assert abs(result.second_moment - bound) <= 3.0 * result.second_moment_std_error

    def test_identity_holds_off_grid(self):
        prior = NormalDist(-2.0, 1.5)
        result = expected_learning_mc(prior, prior, prior, SamplingModel(0.8, 7),
                                      replicates=4000, seed=11)
        bound = expected_learning_bound_sq(1.5, 0.8, 7)
        assert abs(result.second_moment - bound) <= 3.0 * result.second_moment_std_error

    def test_deterministic_given_seed(self):
        args = (PIONEER, CONSENSUS, CONSENSUS, SamplingModel(1.0, 5))
        a = expected_learning_mc(*args, replicates=100, seed=42)
        b = expected_learning_mc(*args, replicates=100, seed=42)
        assert a == b
        c = expected_learning_mc(*args, replicates=100, seed=43)
        assert c != a

    def test_replicate_floor(self):
        with pytest.raises(ValueError):
            expected_learning_mc(PIONEER, PIONEER, PIONEER, SamplingModel(1.0, 1),
                                 replicates=99)

    def test_jensen_across_configs(self):
        # The constructor enforces the Jensen ceiling; these runs must build.
        configs = [
            (PIONEER, CONSENSUS, CONSENSUS, SamplingModel(2.0, 3)),
            (CONSENSUS, CONSENSUS, PIONEER, SamplingModel(0.5, 20)),
            (decision_maker_prior(make_setup(0.3)), CONSENSUS, CONSENSUS,
             SamplingModel(1.0, 10)),
        ]
        for i, (pred, upd, ref, model) in enumerate(configs):
            result = expected_learning_mc(pred, upd, ref, model, replicates=500, seed=i)
            assert result.estimate <= math.sqrt(result.second_moment) \
                + 3.0 * result.mc_std_error + 1e-12

    def test_truncated_priors_use_grid_fallback(self):
        trunc = TruncatedNormalDist(0.5, 1.0, 0.0, math.inf)
        result = expected_learning_mc(trunc, trunc, trunc, SamplingModel(1.0, 4),
                                      replicates=100, seed=3, w2_nodes=384)
        assert result.estimate > 0.0
        assert math.isfinite(result.mc_std_error)

    def test_validation_of_fields(self):
        with pytest.raises(ValueError):
            ExpectedLearning(-0.1, 0.0, 1.0, 0.0, 100, 0)
        with pytest.raises(ValueError):
            # estimate far above sqrt(second_moment): Jensen violated.
            ExpectedLearning(2.0, 1e-6, 1.0, 1e-6, 100, 0)


class TestReplicateStreams:
    def test_philox_key_layout(self):
        u = _replicate_uniforms(5, 4, 2)
        for i in range(4):
            direct = Generator(Philox(key=[5, i])).random(2)
            np.testing.assert_array_equal(u[i], np.clip(direct, 1e-16, 1.0 - 1e-16))

    def test_negative_seed_wraps(self):
        u = _replicate_uniforms(-1, 2, 2)
        key = np.array([(1 << 64) - 1, 0], dtype=np.uint64)
        direct = Generator(Philox(key=key)).random(2)
        np.testing.assert_array_equal(u[0], np.clip(direct, 1e-16, 1.0 - 1e-16))

    def test_mixture_theta_uses_component_pick(self):
        mix = decision_maker_prior(make_setup(0.4))
        uniforms = np.array([[0.1, 0.5, 0.5], [0.9, 0.5, 0.5]])
        theta = _theta_from_uniforms(mix, uniforms)
        # u0 = 0.1 < 0.4 picks the pioneer median, u0 = 0.9 the consensus one.
        np.testing.assert_allclose(theta, [PIONEER.mu, CONSENSUS.mu], atol=1e-12)


class TestBatchedW2:
    def test_mixture_route_matches_scalar_route(self):
        mix = decision_maker_prior(make_setup(0.4))
        se = SamplingModel(2.0, 5).std_error()
        uniforms = _replicate_uniforms(3, 64, 3)
        theta = _theta_from_uniforms(mix, uniforms)
        ybar = theta + se * ndtri(uniforms[:, -1])
        batched = _batched_w2(mix, CONSENSUS, ybar, se, 384)
        scalar = np.array([
            wp_quantile(CONSENSUS, update_mixture(mix, Study(float(y), se)),
                        p=2.0, nodes=384)
            for y in ybar
        ])
        np.testing.assert_allclose(batched, scalar, atol=1e-9)

    def test_normal_route_matches_closed_form(self):
        se = SamplingModel(1.0, 4).std_error()
        ybar = np.linspace(-2.0, 8.0, 32)
        batched = _batched_w2(CONSENSUS, PIONEER, ybar, se, 512)
        scalar = []
        for y in ybar:
            mean, sd = oracles.conjugate_posterior(
                CONSENSUS.mu, CONSENSUS.sigma, float(y), se)
            scalar.append(oracles.normal_w2(PIONEER.mu, PIONEER.sigma, mean, sd))
        np.testing.assert_allclose(batched, scalar, rtol=1e-12)


class TestWeightSweep:
    def test_singleton_equals_direct_call(self):
        setup = make_setup(0.3, sigma=1.0, n=20)
        points = weight_sweep(setup, [0.3], [20], replicates=300, seed=5)
        assert len(points) == 1
        blended = decision_maker_prior(setup)
        direct = expected_learning_mc(blended, blended, CONSENSUS,
                                      SamplingModel(1.0, 20), replicates=300, seed=5)
        assert points[0] == CurvePoint(0.3, 20, direct.estimate, direct.mc_std_error)

    def test_grid_shape_and_order(self):
        points = weight_sweep(make_setup(0.0, sigma=3.0), [0.0, 1.0], [10, 50],
                              replicates=150, seed=0)
        assert [(pt.w, pt.n) for pt in points] == [(0.0, 10), (0.0, 50), (1.0, 10), (1.0, 50)]

    def test_learning_increases_with_pioneer_weight(self):
        points = weight_sweep(make_setup(0.0, sigma=3.0), [0.0, 0.5, 1.0], [10],
                              replicates=600, seed=0)
        values = [pt.expected_learning for pt in points]
        gates = [3.0 * math.hypot(points[i].mc_std_error, points[i + 1].mc_std_error)
                 for i in range(2)]
        assert values[1] > values[0] - gates[0]
        assert values[2] > values[1] - gates[1]
        assert values[2] > values[0]

    def test_positive_learning_at_zero_weight(self):
        points = weight_sweep(make_setup(0.0, sigma=3.0), [0.0], [10],
                              replicates=600, seed=0)
        assert points[0].expected_learning > 3.0 * points[0].mc_std_error

    def test_w0_estimate_respects_jensen_bound(self):
        points = weight_sweep(make_setup(0.0, sigma=1.0), [0.0], [10],
                              replicates=2000, seed=0)
        ceiling = math.sqrt(expected_learning_bound_sq(CONSENSUS.sigma, 1.0, 10))
        assert points[0].expected_learning <= ceiling + 3.0 * points[0].mc_std_error

    def test_empty_lists_rejected(self):
        with pytest.raises(ValueError):
            weight_sweep(make_setup(0.0), [], [10])
        with pytest.raises(ValueError):
            weight_sweep(make_setup(0.0), [0.5], [])

    def test_curve_point_validation(self):
        with pytest.raises(ValueError):
            CurvePoint(1.5, 10, 1.0, 0.1)
        with pytest.raises(ValueError):
            CurvePoint(0.5, 10, math.inf, 0.1)

    def test_csv_serialization(self):
        points = [CurvePoint(0.0, 10, 0.5, 0.01), CurvePoint(0.1, 50, 0.75, 0.02)]
        text = curve_points_to_csv(points)
        lines = text.splitlines()
        assert lines[0] == "w,n,expected_learning,mc_std_error"
        assert lines[1] == "0.0,10,0.5,0.01"
        assert len(lines) == 3 and text.endswith("\n")
