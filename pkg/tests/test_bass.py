import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate

from sensbench.bass import (
    DESK_MCMC, MAX_BASES, MAX_DEGREE, PAPER_MCMC, BassPosterior, BassSample, BasisFunction, HingeFactor, McmcConfig,
    bass_emulation_loop, bass_predict, bass_sobol, fit_bass, hinge_cross_moment_e, hinge_moment_c1, sample_sobol,
)
from sensbench.errors import DegenerateVariance, DomainError, InvalidPair
from sensbench.models import build_model
from sensbench.sampling import lhs, sobol_design
from sensbench.sobol_analysis import estimate_indices, evaluate_design

SHORT = McmcConfig(6_000, 2_000, 40)

factors = st.builds(HingeFactor, variable=st.just(0), sign=st.sampled_from([-1, 1]),
                    knot=st.floats(0.0, 1.0, allow_nan=False))


def hinge(v, s, t):
    return BasisFunction((HingeFactor(v, s, t),))


@pytest.fixture(scope="module")
def d5_posterior():
    X = lhs(50, 5, 3).points
    return fit_bass(X, build_model(5)(X), mcmc=DESK_MCMC, seed=11)


@pytest.fixture(scope="module")
def hinge_fit():
    X = lhs(200, 3, 0).points
    y = 2.0 + 5.0 * np.maximum(0.0, X[:, 0] - 0.4)
    return fit_bass(X, y, mcmc=SHORT, seed=1), X, y


class TestMoments:
    @pytest.mark.parametrize("sign,knot,expected", [(1, 0.0, 0.5), (1, 0.5, 0.125), (-1, 1.0, 0.5)])
    def test_c1_examples(self, sign, knot, expected):
        assert hinge_moment_c1(HingeFactor(0, sign, knot)) == pytest.approx(expected, abs=1e-15)

    def test_cross_examples(self):
        assert hinge_cross_moment_e(HingeFactor(0, 1, 0.0), HingeFactor(0, 1, 0.0)) == pytest.approx(1 / 3, abs=1e-15)
        assert hinge_cross_moment_e(HingeFactor(0, 1, 0.5), HingeFactor(0, -1, 0.5)) == 0.0

    def test_mismatched_variables(self):
        with pytest.raises(InvalidPair):
            hinge_cross_moment_e(HingeFactor(0, 1, 0.2), HingeFactor(1, 1, 0.2))

    @given(factors, factors)
    def test_cross_matches_quadrature(self, f, g):
        pts = sorted({0.0, f.knot, g.knot, 1.0})
        ref = sum(integrate.quad(lambda t: float(f(t) * g(t)), a, b, epsabs=1e-14, epsrel=1e-13)[0]
                  for a, b in zip(pts, pts[1:]) if b > a)
        assert hinge_cross_moment_e(f, g) == pytest.approx(ref, abs=1e-10)

    @given(factors)
    def test_c1_matches_quadrature(self, f):
        ref = integrate.quad(lambda t: float(f(t)), 0.0, 1.0, points=[f.knot], epsabs=1e-14)[0]
        assert hinge_moment_c1(f) == pytest.approx(ref, abs=1e-10)

    def test_second_moment_dominates_squared_mean(self):
        rng = np.random.default_rng(0)
        for _ in range(100):
            f = HingeFactor(0, int(rng.choice([-1, 1])), float(rng.random()))
            assert hinge_cross_moment_e(f, f) >= hinge_moment_c1(f) ** 2


class TestBasis:
    def test_degree_cap(self):
        fs = tuple(HingeFactor(v, 1, 0.5) for v in range(MAX_DEGREE + 1))
        with pytest.raises(ValueError):
            BasisFunction(fs)

    def test_distinct_variables(self):
        with pytest.raises(ValueError):
            BasisFunction((HingeFactor(0, 1, 0.2), HingeFactor(0, -1, 0.7)))

    def test_value_is_product(self):
        b = BasisFunction((HingeFactor(1, -1, 0.5), HingeFactor(0, 1, 0.25)))
        x = np.array([[0.75, 0.25], [0.1, 0.1]])
        np.testing.assert_allclose(b(x), [0.5 * 0.25, 0.0])


class TestFit:
    def test_sample_count(self):
        X = lhs(20, 2, 0).points
        post = fit_bass(X, X[:, 0], mcmc=McmcConfig(1_000, 300, 7), seed=0)
        assert len(post.samples) == (1_000 - 300) // 7 == McmcConfig(1_000, 300, 7).n_samples

    def test_paper_profile_keeps_400(self):
        assert PAPER_MCMC.n_samples == 400

    def test_hinge_recovery(self, hinge_fit):
        post, X, y = hinge_fit
        mean, _ = bass_predict(post, X)
        assert np.sqrt(np.mean((mean - y) ** 2)) < 1e-2 * np.ptp(y)
        x = np.full(3, 0.9)
        assert abs(bass_predict(post, x)[0] - (2.0 + 5.0 * 0.5)) < 0.02 * np.ptp(y)

    def test_constant_data(self):
        X = lhs(40, 2, 0).points
        post = fit_bass(X, np.full(40, 3.5), mcmc=SHORT, seed=0)
        mean, sd = bass_predict(post, lhs(50, 2, 1).points)
        np.testing.assert_allclose(mean, 3.5, atol=1e-6)
        assert np.max(sd) < 1e-3
        assert max(s.n_bases for s in post.samples) <= 2

    def test_deterministic(self):
        X = lhs(30, 2, 0).points
        y = build_model(2)(X)
        a = fit_bass(X, y, mcmc=SHORT, seed=5)
        b = fit_bass(X, y, mcmc=SHORT, seed=5)
        x = lhs(100, 2, 2).points
        np.testing.assert_array_equal(bass_predict(a, x)[0], bass_predict(b, x)[0])
        assert [s.bases for s in a.samples] == [s.bases for s in b.samples]

    def test_caps_respected(self, d5_posterior):
        for s in d5_posterior.samples:
            assert s.n_bases <= MAX_BASES
            assert all(1 <= b.degree <= MAX_DEGREE for b in s.bases)
            assert s.noise_variance > 0

    def test_bad_inputs(self):
        with pytest.raises(DomainError):
            fit_bass(np.array([[0.5], [1.5]]), np.zeros(2), mcmc=SHORT)
        with pytest.raises(ValueError):
            fit_bass(np.array([[0.5]]), np.zeros(1), mcmc=SHORT)


class TestPredict:
    def test_single_sample_has_zero_sd(self):
        s = BassSample(1.0, np.array([2.0]), [hinge(0, 1, 0.3)], 0.1)
        post = BassPosterior([s], SHORT, 1)
        mean, sd = bass_predict(post, np.array([0.8]))
        assert mean == pytest.approx(2.0)
        assert sd == 0.0

    def test_domain(self, hinge_fit):
        with pytest.raises(DomainError):
            bass_predict(hinge_fit[0], np.array([0.5, 0.5, 1.2]))

    def test_ensemble_statistics(self, d5_posterior):
        x = lhs(20, 5, 4).points
        draws = np.array([s(x) for s in d5_posterior.samples])
        mean, sd = bass_predict(d5_posterior, x)
        np.testing.assert_allclose(mean, draws.mean(axis=0), rtol=1e-12, atol=1e-10)
        np.testing.assert_allclose(sd, draws.std(axis=0), rtol=1e-9, atol=1e-10)


class TestAnalyticIndices:
    def test_single_variable(self):
        s = BassSample(0.5, np.array([3.0]), [hinge(1, 1, 0.2)], 1.0)
        first, total, _, _ = sample_sobol(s, 3)
        np.testing.assert_allclose(first, [0, 1, 0], atol=1e-12)
        np.testing.assert_allclose(total, [0, 1, 0], atol=1e-12)

    def test_identical_additive_terms(self):
        s = BassSample(0.0, np.array([1.0, 1.0]), [hinge(0, 1, 0.3), hinge(1, 1, 0.3)], 1.0)
        first, total, _, second = sample_sobol(s, 2, pairs=[(0, 1)])
        np.testing.assert_allclose(first, [0.5, 0.5], atol=1e-12)
        np.testing.assert_allclose(total, [0.5, 0.5], atol=1e-12)
        assert second[(0, 1)] == pytest.approx(0.0, abs=1e-12)

    def test_pure_interaction(self):
        b = BasisFunction((HingeFactor(0, 1, 0.0), HingeFactor(1, 1, 0.0)))
        s = BassSample(0.0, np.array([1.0]), [b], 1.0)
        first, total, V, second = sample_sobol(s, 2, pairs=[(0, 1)])
        # f = x0 x1: V = 1/9 - 1/16, S_i = (1/12)(1/4) / V
        V_ref = 1 / 9 - 1 / 16
        assert V == pytest.approx(V_ref)
        np.testing.assert_allclose(first, (1 / 48) / V_ref)
        np.testing.assert_allclose(total, 1 - (1 / 48) / V_ref)
        assert first.sum() + second[(0, 1)] == pytest.approx(1.0)

    def test_constant_draw(self):
        with pytest.raises(DegenerateVariance):
            sample_sobol(BassSample(2.0, np.zeros(0), [], 1.0), 2)

    def test_same_pair_rejected(self):
        s = BassSample(0.0, np.array([1.0]), [hinge(0, 1, 0.3)], 1.0)
        with pytest.raises(InvalidPair):
            sample_sobol(s, 2, pairs=[(1, 1)])

    def test_first_not_above_total(self, d5_posterior):
        sob = bass_sobol(d5_posterior, 5)
        assert np.all(sob.first_order <= sob.total_order + 1e-10)

    def test_band_and_means(self, d5_posterior):
        sob = bass_sobol(d5_posterior, 5)
        lo, hi = sob.total_band
        assert np.all(lo <= sob.total_mean + 1e-12) and np.all(sob.total_mean <= hi + 1e-12)
        idx, ci = sob.summary()
        np.testing.assert_allclose(idx.total_order, sob.total_mean)
        assert ci.level == 0.95

    def test_matches_mc_on_frozen_draws(self, d5_posterior):
        design = sobol_design(2 ** 14, 5)
        picks = np.linspace(0, len(d5_posterior.samples) - 1, 10).astype(int)
        for k in picks:
            s = d5_posterior.samples[k]
            first, total, _, _ = sample_sobol(s, 5)
            mc = estimate_indices(*evaluate_design(s, design))
            np.testing.assert_allclose(first, mc.first_order, atol=0.02)
            np.testing.assert_allclose(total, mc.total_order, atol=0.02)

    def test_second_order_matches_mc_pair(self):
        rng = np.random.default_rng(3)
        bases = [BasisFunction((HingeFactor(0, 1, 0.2), HingeFactor(1, -1, 0.7))), hinge(0, -1, 0.6),
                 hinge(2, 1, 0.1)]
        s = BassSample(0.0, rng.normal(size=3) + 2.0, bases, 1.0)
        first, _, _, second = sample_sobol(s, 3, pairs=[(0, 1), (0, 2)])
        from sensbench.sobol_analysis import sobol_indices
        idx, _ = sobol_indices(s, 3, 2 ** 14, second_order=[(0, 1), (0, 2)], replicates=10)
        np.testing.assert_allclose(first, idx.first_order, atol=0.02)
        assert second[(0, 1)] == pytest.approx(idx.second_order[(0, 1)], abs=0.02)
        assert second[(0, 2)] == pytest.approx(0.0, abs=1e-12)


class TestLoop:
    def test_constant_evaluator_stops_first_round(self):
        rep = bass_emulation_loop(lambda X: np.full(X.shape[0], 1.0), 2, pool_size=500, mcmc=SHORT)
        assert rep.converged and rep.final_sample_size == 20 and rep.n_model_evals == 20

    def test_max_size_reports_unconverged(self):
        rep = bass_emulation_loop(build_model(5), 5, pool_size=500, mcmc=SHORT, threshold=1e-6, max_size=55)
        assert not rep.converged
        assert rep.sample_size_history == [50, 55] and rep.n_model_evals == 105

    def test_should_stop(self):
        rep = bass_emulation_loop(build_model(5), 5, pool_size=500, mcmc=SHORT, threshold=1e-6,
                                  should_stop=lambda: True)
        assert not rep.converged and rep.sample_size_history == [50]

    @pytest.mark.slow
    def test_d5_checkpoint(self):
        rep = bass_emulation_loop(build_model(5), 5, seed=0)
        assert rep.converged
        assert 25 <= rep.final_sample_size <= 100
        t3 = bass_sobol(rep.model, 5).total_mean[2]
        assert 0.95 <= t3 <= 1.0
