import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nashbo import gp


def params_2d(v=0.5, c=2.0, d=(1.0, 1.0)):
    return gp.KernelParams(v=v, c=c, d=np.array(d))


class TestKernel:
    def test_self_evaluation_adds_white_term(self):
        p = params_2d()
        x = np.array([0.3, 0.9])
        assert gp.kernel_eval(p, x, x) == 2.5

    def test_smooth_part_value(self):
        # unit separation along one axis: c * exp(-1/2)
        p = params_2d()
        k = gp.kernel_eval(p, np.array([0.0, 0.0]), np.array([1.0, 0.0]))
        assert k == pytest.approx(1.2130613194252668, abs=1e-14)

    def test_white_discontinuity_vanishes_at_v_zero(self):
        p = gp.KernelParams(v=0.0, c=1.0, d=np.array([2.0]))
        near = gp.kernel_eval(p, np.array([0.3]), np.array([0.3 + 1e-9]))
        at = gp.kernel_eval(p, np.array([0.3]), np.array([0.3]))
        assert at == 1.0
        assert near == pytest.approx(1.0, abs=1e-12)

    def test_matrix_matches_pairwise_eval(self, rng):
        p = gp.KernelParams(v=0.1, c=1.5, d=rng.uniform(0.5, 4.0, size=3))
        X = rng.uniform(size=(6, 3))
        X2 = rng.uniform(size=(4, 3))
        K = gp.kernel_matrix(p, X, X2)
        for i in range(6):
            for j in range(4):
                assert K[i, j] == pytest.approx(gp.kernel_eval(p, X[i], X2[j]), abs=1e-15)

    def test_gram_white_term_fires_on_exact_duplicates(self):
        p = params_2d(v=0.25, c=1.0)
        X = np.array([[0.1, 0.2], [0.1, 0.2], [0.4, 0.9]])
        K = gp.kernel_matrix(p, X)
        assert K[0, 1] == K[0, 0] == 1.25
        assert K[0, 2] < 1.0

    def test_parameter_validation(self):
        with pytest.raises(ValueError):
            gp.KernelParams(v=-0.1, c=1.0, d=np.array([1.0]))
        with pytest.raises(ValueError):
            gp.KernelParams(v=0.0, c=0.0, d=np.array([1.0]))
        with pytest.raises(ValueError):
            gp.KernelParams(v=0.0, c=1.0, d=np.array([0.0]))


class TestLogMarginalLikelihood:
    def test_single_point_value(self):
        p = gp.KernelParams(v=1.0, c=1.0, d=np.array([1.0]))
        lml = gp.log_marginal_likelihood(p, np.array([[0.2]]), np.array([1.0]))
        want = -0.25 - 0.5 * math.log(2.0) - 0.5 * math.log(2.0 * math.pi)
        assert lml == pytest.approx(want, abs=1e-14)
        assert lml == pytest.approx(-1.51551, abs=5e-6)

    def test_zero_targets_leave_only_the_determinant(self, rng):
        p = gp.KernelParams(v=0.3, c=1.2, d=np.array([2.0, 1.0]))
        X = rng.uniform(size=(5, 2))
        y = np.zeros(5)
        K = gp.kernel_matrix(p, X)
        _, logdet = np.linalg.slogdet(K)
        want = -0.5 * logdet - 2.5 * math.log(2.0 * math.pi)
        assert gp.log_marginal_likelihood(p, X, y) == pytest.approx(want, rel=1e-10)

    def test_doubling_c_decreases_lml_for_zero_targets(self, rng):
        X = rng.uniform(size=(6, 2))
        y = np.zeros(6)
        a = gp.log_marginal_likelihood(gp.KernelParams(0.1, 1.0, np.array([1.0, 2.0])), X, y)
        b = gp.log_marginal_likelihood(gp.KernelParams(0.1, 2.0, np.array([1.0, 2.0])), X, y)
        assert b < a


class TestPosterior:
    def test_interpolates_training_data(self, rng):
        p = gp.KernelParams(v=0.0, c=1.0, d=np.array([4.0, 4.0]))
        X = rng.uniform(size=(8, 2))
        y = np.sin(5.0 * X[:, 0]) + X[:, 1] ** 2
        s = gp.PlayerSurrogate.from_data(p, X, y)
        for x, t in zip(X, y):
            assert s.posterior_mean(x) == pytest.approx(t, abs=1e-7)
            assert s.posterior_var(x) <= 1e-8

    def test_batch_prediction_matches_single(self, rng):
        p = gp.KernelParams(v=0.05, c=1.3, d=np.array([3.0, 1.0]))
        X = rng.uniform(size=(7, 2))
        y = rng.normal(size=7)
        s = gp.PlayerSurrogate.from_data(p, X, y)
        Q = rng.uniform(size=(11, 2))
        mus = s.posterior_mean(Q)
        vars_ = s.posterior_var(Q)
        for i, q in enumerate(Q):
            assert mus[i] == pytest.approx(s.posterior_mean(q), abs=1e-13)
            assert vars_[i] == pytest.approx(s.posterior_var(q), abs=1e-13)

    def test_reverts_to_data_mean_far_away(self, rng):
        p = gp.KernelParams(v=0.01, c=1.0, d=np.array([50.0]))
        X = rng.uniform(0.0, 0.2, size=(6, 1))
        y = 3.0 + rng.normal(size=6)
        s = gp.PlayerSurrogate.from_data(p, X, y)
        assert s.posterior_mean(np.array([0.99])) == pytest.approx(np.mean(y), abs=1e-3)

    def test_offset_shift_invariance(self, rng):
        p = gp.KernelParams(v=0.02, c=1.0, d=np.array([2.0, 2.0]))
        X = rng.uniform(size=(9, 2))
        y = np.cos(4.0 * X[:, 0])
        q = rng.uniform(size=2)
        base = gp.PlayerSurrogate.from_data(p, X, y).posterior_mean(q)
        shifted = gp.PlayerSurrogate.from_data(p, X, y + 17.0).posterior_mean(q)
        assert shifted == pytest.approx(base + 17.0, abs=1e-9)

    @settings(max_examples=25, deadline=None)
    @given(st.integers(min_value=0, max_value=10_000))
    def test_variance_never_negative(self, seed):
        rng = np.random.default_rng(seed)
        p = gp.KernelParams(v=float(rng.uniform(0, 0.5)), c=float(rng.uniform(0.5, 2.0)),
                            d=rng.uniform(0.1, 30.0, size=2))
        X = rng.uniform(size=(rng.integers(2, 12), 2))
        y = rng.normal(size=X.shape[0])
        s = gp.PlayerSurrogate.from_data(p, X, y)
        assert np.all(s.posterior_var(rng.uniform(size=(16, 2))) >= 0.0)

    def test_duplicate_rows_survive_via_jitter(self):
        # exact repeats make the Gram singular; the escalating jitter must cope
        p = gp.KernelParams(v=0.04, c=1.0, d=np.array([2.0, 2.0]))
        X = np.array([[0.5, 0.5], [0.5, 0.5], [0.2, 0.8]])
        y = np.array([1.0, 1.2, -0.3])
        s = gp.PlayerSurrogate.from_data(p, X, y)
        mu = s.posterior_mean(np.array([0.5, 0.5]))
        assert np.isfinite(mu)
        assert 0.9 < mu < 1.3


class TestFit:
    def test_needs_two_observations(self):
        with pytest.raises(ValueError):
            gp.fit(np.array([[0.1, 0.2]]), np.array([1.0]))

    def test_deterministic_given_seed(self, rng):
        X = rng.uniform(size=(12, 2))
        y = np.sin(4.0 * X[:, 0]) * X[:, 1]
        a = gp.fit(X, y, restarts=2, rng=7)
        b = gp.fit(X, y, restarts=2, rng=7)
        assert a.params.v == b.params.v
        assert a.params.c == b.params.c
        np.testing.assert_array_equal(a.params.d, b.params.d)

    def test_fit_beats_arbitrary_parameters(self, rng):
        X = rng.uniform(size=(20, 2))
        true = gp.KernelParams(v=0.01, c=1.0, d=np.array([4.0, 4.0]))
        L = np.linalg.cholesky(gp.kernel_matrix(true, X) + 1e-12 * np.eye(20))
        y = L @ rng.normal(size=20)
        s = gp.fit(X, y, restarts=2, rng=3)
        fitted = gp.log_marginal_likelihood(s.params, X, y - np.mean(y))
        for handpicked in (true, gp.KernelParams(0.5, 0.5, np.array([1.0, 1.0]))):
            assert fitted >= gp.log_marginal_likelihood(handpicked, X, y - np.mean(y)) - 1e-6

    def test_recovers_noise_scale_roughly(self, rng):
        # factor-of-a-few recovery is all maximum likelihood can promise here
        X = rng.uniform(size=(60, 2))
        true = gp.KernelParams(v=0.01, c=1.0, d=np.array([4.0, 4.0]))
        K = gp.kernel_matrix(gp.KernelParams(1e-12, true.c, true.d), X)
        f = np.linalg.cholesky(K + 1e-10 * np.eye(60)) @ rng.normal(size=60)
        y = f + math.sqrt(true.v) * rng.normal(size=60)
        s = gp.fit(X, y, restarts=3, rng=11)
        assert true.v / 5.0 <= s.params.v <= true.v * 5.0

    def test_respects_bounds(self, rng):
        X = rng.uniform(size=(10, 2))
        y = rng.normal(size=10)
        s = gp.fit(X, y, rng=0)
        assert gp.V_BOUNDS[0] <= s.params.v <= gp.V_BOUNDS[1]
        assert gp.C_BOUNDS[0] <= s.params.c <= gp.C_BOUNDS[1]
        assert np.all((s.params.d >= gp.D_BOUNDS[0]) & (s.params.d <= gp.D_BOUNDS[1]))
