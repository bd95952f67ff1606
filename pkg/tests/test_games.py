import numpy as np
import pytest
from hypothesis import given, strategies as st

from nashbo import games


class TestActionSpace:
    def test_unit_box(self):
        sp = games.ActionSpace.unit((1, 2))
        assert sp.players == 2
        assert sp.n_joint == 3
        assert sp.is_unit()
        np.testing.assert_array_equal(sp.widths, np.ones(3))

    def test_blocks_partition_the_joint_coordinates(self):
        sp = games.ActionSpace.unit((2, 3, 1))
        assert sp.block(0) == slice(0, 2)
        assert sp.block(1) == slice(2, 5)
        assert sp.block(2) == slice(5, 6)
        np.testing.assert_array_equal(sp.other_indices(1), [0, 1, 5])
        for i in range(3):
            joined = np.sort(np.concatenate([sp.block_indices(i), sp.other_indices(i)]))
            np.testing.assert_array_equal(joined, np.arange(6))

    def test_bounds_validation(self):
        with pytest.raises(ValueError):
            games.ActionSpace((1,), np.array([[1.0, 0.0]]))
        with pytest.raises(ValueError):
            games.ActionSpace((1, 1), np.array([[0.0, 1.0]]))
        with pytest.raises(ValueError):
            games.ActionSpace((), np.zeros((0, 2)))

    def test_contains(self):
        sp = games.ActionSpace((1, 1), np.array([[0.0, 2.0], [-1.0, 1.0]]))
        assert sp.contains(np.array([1.5, 0.0]))
        assert not sp.contains(np.array([2.5, 0.0]))
        assert not sp.contains(np.array([1.0]))

    @given(st.lists(st.floats(min_value=0.0, max_value=1.0), min_size=2, max_size=2))
    def test_unit_map_round_trip(self, u):
        sp = games.ActionSpace((1, 1), np.array([[-2.0, 3.0], [0.5, 0.75]]))
        u = np.array(u)
        x = sp.from_unit(u)
        assert sp.contains(x, atol=1e-9)
        np.testing.assert_allclose(sp.to_unit(x), u, atol=1e-12)


class TestSaddle:
    def test_payoffs_zero_sum(self):
        game = games.make_saddle([0.5, 0.5])
        x = np.array([0.2, 0.7])
        p = game.payoffs(x)
        np.testing.assert_allclose(p, [-0.05, 0.05])
        assert p.sum() == pytest.approx(0.0, abs=1e-15)

    @given(st.lists(st.floats(min_value=0.0, max_value=1.0), min_size=4, max_size=4))
    def test_zero_sum_everywhere(self, coords):
        game = games.make_saddle([0.4, 0.6, 0.3, 0.7], dims_per_player=2)
        p = game.payoffs(np.array(coords))
        assert abs(p[0] + p[1]) < 1e-12

    def test_shift_must_be_interior(self):
        with pytest.raises(ValueError):
            games.make_saddle([0.0, 0.5])
        with pytest.raises(ValueError):
            games.make_saddle([0.5, 1.0])

    def test_analytic_regret(self):
        game = games.make_saddle([0.5, 0.5])
        assert games.analytic_regret_saddle(game, np.array([0.2, 0.7])) == pytest.approx(0.09)
        assert games.analytic_regret_saddle(game, game.known_ne) == 0.0
        g3 = games.make_problem("saddle3")
        r = games.analytic_regret_saddle(g3, np.array([0.5, 0.6, 0.5, 0.5]))
        assert r == pytest.approx(0.01)

    @given(st.lists(st.floats(min_value=0.0, max_value=1.0), min_size=2, max_size=2))
    def test_regret_nonnegative_and_zero_only_at_ne(self, coords):
        game = games.make_saddle([0.3, 0.3])
        x = np.array(coords)
        r = games.analytic_regret_saddle(game, x)
        assert r >= 0.0
        if not np.allclose(x, game.known_ne):
            assert r > 0.0

    def test_regret_rejects_other_games(self):
        mop = games.make_problem("mop")
        with pytest.raises(ValueError):
            games.analytic_regret_saddle(mop, np.array([0.5, 0.5]))


class TestOracle:
    def test_noiseless_oracle_returns_exact_payoffs(self, rng):
        game = games.make_problem("saddle1")
        obs = games.oracle_eval(game, np.array([0.2, 0.7]), rng)
        np.testing.assert_array_equal(obs.payoffs, game.payoffs(obs.profile))

    def test_noisy_oracle_is_seeded(self):
        game = games.make_problem("saddle1", noise=True)
        np.testing.assert_array_equal(game.noise_std, [0.025, 0.025])
        a = games.oracle_eval(game, np.array([0.2, 0.7]), np.random.default_rng(5))
        b = games.oracle_eval(game, np.array([0.2, 0.7]), np.random.default_rng(5))
        np.testing.assert_array_equal(a.payoffs, b.payoffs)
        assert not np.array_equal(a.payoffs, game.payoffs(a.profile))

    def test_out_of_bounds_rejected(self, rng):
        game = games.make_problem("saddle1")
        with pytest.raises(ValueError):
            games.oracle_eval(game, np.array([1.2, 0.5]), rng)

    def test_oracle_needs_utilities(self, rng):
        mop = games.make_problem("mop")
        with pytest.raises(games.UtilitiesUnavailableError):
            games.oracle_eval(mop, np.array([0.1, 0.5]), rng)


class TestObservationSet:
    def test_append_and_views(self, rng):
        game = games.make_problem("saddle1")
        s = games.ObservationSet()
        for x in ([0.1, 0.2], [0.3, 0.4]):
            s.append(games.oracle_eval(game, np.array(x), rng))
        assert len(s) == 2
        assert s.profiles().shape == (2, 2)
        np.testing.assert_allclose(s.payoffs(1), -s.payoffs(0))

    def test_duplicate_profiles_rejected_without_noise(self, rng):
        game = games.make_problem("saddle1")
        s = games.ObservationSet(allow_duplicates=False)
        ob = games.oracle_eval(game, np.array([0.1, 0.2]), rng)
        s.append(ob)
        with pytest.raises(ValueError):
            s.append(ob)
        relaxed = games.ObservationSet(allow_duplicates=True)
        relaxed.append(ob)
        relaxed.append(ob)
        assert len(relaxed) == 2


class TestRegistry:
    def test_known_equilibria(self):
        np.testing.assert_allclose(games.make_problem("saddle1").known_ne, [0.5, 0.5])
        np.testing.assert_allclose(games.make_problem("saddle2").known_ne, [0.3, 0.3])
        np.testing.assert_allclose(games.make_problem("saddle3").known_ne, [0.5] * 4)
        np.testing.assert_allclose(games.make_problem("mop").known_ne, [0.08093, 1.0])

    def test_default_budgets(self):
        assert games.DEFAULT_FES == {"saddle1": 40, "saddle2": 40, "saddle3": 120, "mop": 40}
        assert games.DEFAULT_SEED_COUNTS["saddle3"] == 8

    def test_mop_noise_levels(self):
        mop = games.make_problem("mop", noise=True)
        np.testing.assert_array_equal(mop.noise_std, [7.5, 3.0])
        assert mop.utilities is None

    def test_custom_problem_wants_a_shift(self):
        with pytest.raises(ValueError):
            games.make_problem("custom")
        game = games.make_problem("custom", shift=[0.4, 0.6])
        np.testing.assert_allclose(game.known_ne, [0.4, 0.6])

    def test_unknown_problem(self):
        with pytest.raises(ValueError):
            games.make_problem("prisoners_dilemma")
