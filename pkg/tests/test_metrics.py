"""Tests for learning metrics: Wasserstein routes, KL, Lindley, surprisal,
quadratic loss, and the assembled learning report."""

import math

import numpy as np
import pytest
from numpy.random import default_rng

import oracles
from beliefshift import (
    AbsoluteContinuityError,
    DiscreteMeasure,
    GridDensity,
    MixtureDist,
    MomentError,
    NormalDist,
    SamplingModel,
    Study,
    TransportPlan,
    TruncatedNormalDist,
    kl_grid,
    kl_normal,
    learning_report,
    lindley_grid,
    lindley_normal,
    log_surprisal,
    quadratic_expectation,
    sample,
    surprisal,
    to_grid,
    update_grid,
    w2_normal,
    wasserstein_discrete,
    wp_quantile,
)
from beliefshift.metrics import t_nodes


class TestW2Normal:
    def test_table_values(self):
        assert abs(w2_normal(NormalDist(0, 10), NormalDist(5, 5)) - 7.07) < 0.005
        np.testing.assert_allclose(w2_normal(NormalDist(0, 10), NormalDist(0, 1)), 9.0, rtol=1e-15)
        assert abs(w2_normal(NormalDist(0, 5), NormalDist(1.6, 0.7)) - 4.59) < 0.005

    def test_matches_closed_form_oracle(self):
        rng = default_rng(42)
        for _ in range(50):
            mu = rng.uniform(-5, 5, size=2)
            sd = rng.uniform(0.2, 3.0, size=2)
            a, b = NormalDist(mu[0], sd[0]), NormalDist(mu[1], sd[1])
            np.testing.assert_allclose(
                w2_normal(a, b), oracles.normal_w2(mu[0], sd[0], mu[1], sd[1]), rtol=1e-12
            )

    def test_metric_axioms_spot(self):
        a, b, c = NormalDist(0, 1), NormalDist(2, 3), NormalDist(-1, 0.5)
        assert w2_normal(a, a) == 0.0
        assert w2_normal(a, b) == w2_normal(b, a)
        assert w2_normal(a, c) <= w2_normal(a, b) + w2_normal(b, c) + 1e-12

    def test_affine_equivariance(self):
        a, b = NormalDist(1.0, 2.0), NormalDist(-0.5, 0.7)
        base = w2_normal(a, b)
        for c, off in ((2.5, 1.0), (0.3, -4.0)):
            mapped = w2_normal(
                NormalDist(c * a.mu + off, c * a.sigma),
                NormalDist(c * b.mu + off, c * b.sigma),
            )
            np.testing.assert_allclose(mapped, abs(c) * base, rtol=1e-12)
        shifted = w2_normal(NormalDist(a.mu + 3, a.sigma), NormalDist(b.mu + 3, b.sigma))
        np.testing.assert_allclose(shifted, base, rtol=1e-12)


class TestWpQuantile:
    def test_pure_location_shift(self):
        value = wp_quantile(NormalDist(0, 1), NormalDist(2, 1), p=2.0)
        np.testing.assert_allclose(value, 2.0, rtol=1e-6)

    def test_table_row_two(self):
        value = wp_quantile(NormalDist(0, 10), NormalDist(5, 2.5), p=2.0)
        assert abs(value - 9.01) < 0.005
        np.testing.assert_allclose(value, math.sqrt(25.0 + 56.25), rtol=1e-4)

    def test_normal_pairs_match_closed_form(self):
        rng = default_rng(42)
        for _ in range(20):
            mu = rng.uniform(-5, 5, size=2)
            sd = rng.uniform(0.2, 3.0, size=2)
            a, b = NormalDist(mu[0], sd[0]), NormalDist(mu[1], sd[1])
            np.testing.assert_allclose(wp_quantile(a, b, p=2.0), w2_normal(a, b), rtol=1e-4)

    def test_symmetry(self):
        a, b = NormalDist(0, 10), NormalDist(5, 2.5)
        assert wp_quantile(a, b) == wp_quantile(b, a)

    def test_truncated_prior_vs_grid_posterior_oracle(self):
        prior = TruncatedNormalDist(0.0, 2.0, 0.0, math.inf)
        post = update_grid(prior, Study(2.5, 1.7))
        value = wp_quantile(prior, post, p=2.0, nodes=4096)
        oracle = oracles.trapezoid_wp(prior.quantile, post.quantile, p=2.0)
        assert abs(value - oracle) < 1e-3

    def test_w1_between_grids_is_cdf_area(self):
        a = GridDensity([0.0, 1.0], [0.5, 0.5])
        b = GridDensity([1.0, 2.0], [0.5, 0.5])
        np.testing.assert_allclose(wp_quantile(a, b, p=1.0), 1.0, atol=1e-12)

    def test_rejects_bad_order_or_nodes(self):
        with pytest.raises(ValueError):
            wp_quantile(NormalDist(0, 1), NormalDist(1, 1), p=0.5)
        with pytest.raises(ValueError):
            wp_quantile(NormalDist(0, 1), NormalDist(1, 1), nodes=128)

    def test_heavy_tails_raise_moment_error(self):
        with pytest.raises(MomentError):
            wp_quantile(oracles.CauchyStub(), NormalDist(0, 1), p=2.0)
        with pytest.raises(MomentError):
            wp_quantile(oracles.CauchyStub(), NormalDist(0, 1), p=1.0)
        with pytest.raises(MomentError):
            wp_quantile(oracles.StudentTStub(2.0), NormalDist(0, 1), p=2.0)

    def test_finite_moment_tails_do_not_raise(self):
        # Student t with df=3 has a finite second moment: W2 exists.
        value = wp_quantile(oracles.StudentTStub(3.0, loc=1.0), oracles.StudentTStub(3.0), p=2.0)
        assert math.isfinite(value) and value > 0.0
        # High node counts probe deeper tails but must not false-alarm.
        fine = wp_quantile(NormalDist(0, 1), NormalDist(2, 1), p=2.0, nodes=16384)
        np.testing.assert_allclose(fine, 2.0, rtol=1e-7)

    def test_node_weights_are_a_partition(self):
        t, w = t_nodes(512)
        assert np.all((t > 0.0) & (t < 1.0))
        assert np.all(np.diff(t) > 0.0)
        np.testing.assert_allclose(w.sum(), 1.0, atol=1e-9)
        # Symmetric layout around 1/2.
        np.testing.assert_allclose(t, 1.0 - t[::-1], atol=1e-15)


class TestWassersteinDiscrete:
    def test_point_masses(self):
        mu = DiscreteMeasure([0.0], [1.0])
        nu = DiscreteMeasure([3.0], [1.0])
        value, plan = wasserstein_discrete(mu, nu, p=1.0)
        np.testing.assert_allclose(value, 3.0, rtol=1e-12)
        np.testing.assert_allclose(plan.flows, [[1.0]], atol=1e-12)

    def test_overlapping_uniforms(self):
        mu = DiscreteMeasure([0.0, 1.0], [0.5, 0.5])
        nu = DiscreteMeasure([1.0, 2.0], [0.5, 0.5])
        value, plan = wasserstein_discrete(mu, nu, p=1.0)
        np.testing.assert_allclose(value, 1.0, atol=1e-9)
        oracle = oracles.assignment_wp(np.array([0.0, 1.0]), np.array([1.0, 2.0]), p=1.0)
        np.testing.assert_allclose(value, oracle, atol=1e-9)

    def test_empirical_agreement_across_methods(self):
        rng = default_rng(42)
        xa = np.sort(sample(NormalDist(0, 1), rng, 50))
        xb = np.sort(sample(NormalDist(2, 1), rng, 50))
        assert np.all(np.diff(xa) > 0) and np.all(np.diff(xb) > 0)
        w = np.full(50, 1.0 / 50.0)
        lp_value, plan = wasserstein_discrete(DiscreteMeasure(xa, w), DiscreteMeasure(xb, w))
        grid_value = wp_quantile(GridDensity(xa, w), GridDensity(xb, w), p=2.0)
        sort_value = oracles.sorted_matching_wp(xa, xb, p=2.0)
        assert abs(lp_value - grid_value) < 1e-9
        assert abs(lp_value - sort_value) < 1e-9
        row, col = plan.marginals()
        np.testing.assert_allclose(row, w, atol=1e-9)
        np.testing.assert_allclose(col, w, atol=1e-9)

    def test_two_dimensional_matches_assignment_oracle(self):
        rng = default_rng(42)
        pa = rng.normal(size=(20, 2))
        pb = rng.normal(loc=1.5, size=(20, 2))
        w = np.full(20, 0.05)
        value, _ = wasserstein_discrete(DiscreteMeasure(pa, w), DiscreteMeasure(pb, w), p=2.0)
        np.testing.assert_allclose(value, oracles.assignment_wp(pa, pb, p=2.0), atol=1e-9)

    def test_dimension_mismatch(self):
        mu = DiscreteMeasure([[0.0, 0.0]], [1.0])
        nu = DiscreteMeasure([1.0], [1.0])
        with pytest.raises(ValueError):
            wasserstein_discrete(mu, nu)

    def test_measure_validation(self):
        with pytest.raises(ValueError):
            DiscreteMeasure([0.0, 1.0], [0.5, 0.4])
        with pytest.raises(ValueError):
            DiscreteMeasure([0.0, 1.0], [1.0, 0.0])
        with pytest.raises(ValueError):
            TransportPlan([[-0.5, 0.5]])


class TestKl:
    def test_symmetric_sums_match_table(self):
        pairs = [
            (NormalDist(0, 10), NormalDist(5, 5), 1.75),
            (NormalDist(0, 10), NormalDist(0, 1), 49.0),
        ]
        for prior, post, expected in pairs:
            total = kl_normal(post, prior) + kl_normal(prior, post)
            assert abs(total - expected) < 0.01

    def test_identity_and_nonnegativity(self):
        assert kl_normal(NormalDist(3, 2), NormalDist(3, 2)) == 0.0
        rng = default_rng(42)
        for _ in range(50):
            a = NormalDist(rng.uniform(-5, 5), rng.uniform(0.2, 3))
            b = NormalDist(rng.uniform(-5, 5), rng.uniform(0.2, 3))
            assert kl_normal(a, b) >= 0.0
            np.testing.assert_allclose(
                kl_normal(a, b), oracles.normal_kl(a.mu, a.sigma, b.mu, b.sigma), atol=1e-12
            )

    def test_asymmetry_witness(self):
        fwd = kl_normal(NormalDist(0, 1), NormalDist(0, 10))
        rev = kl_normal(NormalDist(0, 10), NormalDist(0, 1))
        assert fwd != rev

    def test_grid_identity(self):
        g = to_grid(NormalDist(0, 1), -8, 8, 512)
        assert kl_grid(g, g) == 0.0

    def test_grid_matches_normal_oracle(self):
        p = to_grid(NormalDist(5, 5), -80, 80, 4096)
        q = to_grid(NormalDist(0, 10), -80, 80, 4096)
        expected = oracles.normal_kl(5, 5, 0, 10)
        assert abs(kl_grid(p, q) - expected) < 0.005

    def test_absolute_continuity_enforced(self):
        xs = [0.0, 1.0, 2.0]
        p = GridDensity(xs, [0.5, 0.25, 0.25])
        q = GridDensity(xs, [0.5, 0.5, 0.0])
        with pytest.raises(AbsoluteContinuityError):
            kl_grid(p, q)
        # The reverse direction is fine: q puts mass only where p does.
        assert kl_grid(q, p) >= 0.0

    def test_requires_identical_grids(self):
        p = GridDensity([0.0, 1.0], [0.5, 0.5])
        q = GridDensity([0.0, 1.5], [0.5, 0.5])
        with pytest.raises(ValueError):
            kl_grid(p, q)


class TestLindley:
    def test_normal_values(self):
        assert abs(lindley_normal(NormalDist(0, 10), NormalDist(5, 5)) - 0.69) < 0.005
        assert abs(lindley_normal(NormalDist(0, 10), NormalDist(0, 1)) - 2.30) < 0.005

    def test_mean_insensitive(self):
        a = lindley_normal(NormalDist(0, 10), NormalDist(5, 5))
        b = lindley_normal(NormalDist(0, 10), NormalDist(3, 5))
        assert a == b

    def test_additivity(self):
        rng = default_rng(42)
        for _ in range(20):
            sds = rng.uniform(0.2, 3.0, size=3)
            mus = rng.uniform(-5, 5, size=3)
            chain = [NormalDist(m, s) for m, s in zip(mus, sds)]
            total = lindley_normal(chain[0], chain[1]) + lindley_normal(chain[1], chain[2])
            assert abs(total - lindley_normal(chain[0], chain[2])) < 1e-12

    def test_grid_identity(self):
        g = to_grid(NormalDist(0, 1), -8, 8, 512)
        assert lindley_grid(g, g) == 0.0

    def test_grid_matches_closed_form(self):
        prior = to_grid(NormalDist(0, 10), -80, 80, 4096)
        post = to_grid(NormalDist(5, 2.5), -80, 80, 4096)
        assert abs(lindley_grid(prior, post) - math.log(4.0)) < 0.01

    def test_grid_sign_when_uncertainty_grows(self):
        prior = to_grid(NormalDist(0, 1), -16, 16, 4096)
        post = to_grid(NormalDist(0, 2), -16, 16, 4096)
        value = lindley_grid(prior, post)
        assert abs(value - (-math.log(2.0))) < 0.01
        assert value < 0.0


class TestSurprisal:
    MODEL = SamplingModel(1.0, 1)
    PRIOR = NormalDist(0.0, 3.0)

    def test_matches_predictive_oracle(self):
        value = surprisal(self.PRIOR, self.MODEL, 0.0)
        expected = 1.0 / oracles.normal_pdf(0.0, 0.0, math.sqrt(10.0))
        np.testing.assert_allclose(value, expected, rtol=1e-12)
        assert abs(value - 7.93) < 0.005

    def test_minimized_at_predictive_mode(self):
        at_mode = surprisal(self.PRIOR, self.MODEL, 0.0)
        assert at_mode < surprisal(self.PRIOR, self.MODEL, 1.0)
        assert at_mode < surprisal(self.PRIOR, self.MODEL, -1.0)

    def test_tail_blowup(self):
        pred_sd = math.sqrt(10.0)
        assert surprisal(self.PRIOR, self.MODEL, 5.0 * pred_sd) > 1e5

    def test_log_form_safe_far_out(self):
        value = log_surprisal(self.PRIOR, self.MODEL, 30.0 * math.sqrt(10.0))
        assert math.isfinite(value) and value > 0.0


class TestQuadraticExpectation:
    def test_closed_forms(self):
        np.testing.assert_allclose(quadratic_expectation(NormalDist(5, 5), 5.0), 25.0, rtol=1e-15)
        np.testing.assert_allclose(quadratic_expectation(NormalDist(0, 10), 5.0), 125.0, rtol=1e-15)

    def test_grid_matches_closed_form(self):
        grid = to_grid(NormalDist(0, 10), -80, 80, 4096)
        exact = quadratic_expectation(NormalDist(0, 10), 5.0)
        assert abs(quadratic_expectation(grid, 5.0) - exact) < 1e-3 * exact


class TestLearningReport:
    def test_vaccine_report(self):
        report = learning_report(NormalDist(0, 10), NormalDist(5, 5))
        assert abs(report.w2 - 7.07) < 0.005
        np.testing.assert_allclose(report.mean_shift_sq, 25.0, rtol=1e-12)
        np.testing.assert_allclose(report.sd_shift_sq, 25.0, rtol=1e-12)
        assert abs(report.kl_sym - 1.75) < 0.005
        assert abs(report.lindley - 0.69) < 0.005
        assert abs(report.normalized_w2 - 0.707) < 0.0005
        assert report.decomposition_exact
        np.testing.assert_allclose(report.kl_sym, report.kl_forward + report.kl_reverse,
                                   atol=1e-12)

    def test_identity_report_is_zero(self):
        report = learning_report(NormalDist(0, 10), NormalDist(0, 10))
        assert report.w2 == 0.0
        assert report.mean_shift_sq == 0.0
        assert report.sd_shift_sq == 0.0
        assert report.normalized_w2 == 0.0
        assert report.kl_forward == 0.0 and report.kl_reverse == 0.0 and report.kl_sym == 0.0
        assert report.lindley == 0.0

    def test_appendix_truncated_report(self):
        prior = TruncatedNormalDist(0.2, 0.4, 0.0, math.inf)
        post = update_grid(prior, Study(0.074, 0.121))
        report = learning_report(prior, post)
        assert abs(report.w2 - 0.34) < 0.02
        assert not report.decomposition_exact
        assert report.kl_sym is None or report.kl_sym >= 0.0

    def test_decomposition_invariant_when_exact(self):
        rng = default_rng(42)
        for _ in range(20):
            prior = NormalDist(rng.uniform(-5, 5), rng.uniform(0.2, 3))
            post = NormalDist(rng.uniform(-5, 5), rng.uniform(0.2, 3))
            report = learning_report(prior, post)
            assert report.decomposition_exact
            assert abs(report.w2**2 - (report.mean_shift_sq + report.sd_shift_sq)) < 1e-9

    def test_same_family_truncated_pair_is_exact(self):
        prior = TruncatedNormalDist(0.0, 2.0, 0.0, math.inf)
        # Standardized lower bound differs ((0.25-1)/0.5 = -1.5 vs 0).
        assert not learning_report(
            prior, TruncatedNormalDist(1.0, 0.5, 0.25, math.inf)
        ).decomposition_exact
        # Same nominal bound but different standardized one (-0.5 vs 0).
        assert not learning_report(
            prior, TruncatedNormalDist(0.5, 1.0, 0.0, math.inf)
        ).decomposition_exact
        # Pure rescaling keeps the standardized bounds: exact decomposition.
        scaled = TruncatedNormalDist(0.0, 0.5, 0.0, math.inf)
        report = learning_report(prior, scaled)
        assert report.decomposition_exact
        assert abs(report.w2**2 - (report.mean_shift_sq + report.sd_shift_sq)) < 1e-9
        oracle = oracles.quad_wp(prior.quantile, scaled.quantile, p=2.0)
        np.testing.assert_allclose(report.w2, oracle, rtol=1e-5)

    def test_mixture_fields_flagged_absent(self):
        post = MixtureDist(((0.5, NormalDist(0, 1)), (0.5, NormalDist(3, 1))))
        report = learning_report(NormalDist(0, 3), post)
        assert report.kl_forward is None
        assert report.kl_reverse is None
        assert report.kl_sym is None
        assert report.lindley is None
        assert not report.decomposition_exact
        assert report.w2 > 0.0

    def test_collapse_limit_normalized_to_one(self):
        report = learning_report(NormalDist(2, 3), NormalDist(2, 3e-6))
        assert abs(report.normalized_w2 - 1.0) < 1e-5

    def test_csv_row_shape(self):
        report = learning_report(NormalDist(0, 10), NormalDist(5, 5))
        row = report.to_csv_row()
        assert len(row.split(",")) == len(report.CSV_COLUMNS)
        assert row.split(",")[-1] == "true"
        mixed = learning_report(
            NormalDist(0, 3), MixtureDist(((0.5, NormalDist(0, 1)), (0.5, NormalDist(3, 1))))
        )
        cells = mixed.to_csv_row().split(",")
        assert cells[4] == "" and cells[-1] == "false"

    def test_continuity_bound_at_quadratic_loss(self):
        rng = default_rng(42)
        for _ in range(200):
            prior = NormalDist(rng.uniform(-5, 5), rng.uniform(0.2, 3))
            post = NormalDist(rng.uniform(-5, 5), rng.uniform(0.2, 3))
            action = float(rng.uniform(-6, 6))
            qa = quadratic_expectation(prior, action)
            qb = quadratic_expectation(post, action)
            bound = w2_normal(prior, post) * math.sqrt(2.0 * (qa + qb))
            assert abs(qa - qb) <= bound + 1e-9
