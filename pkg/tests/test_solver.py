"""Tests for the sequential solver loop."""

import math

import numpy as np
import pytest

from nashbo import solver
from nashbo.acquisition import AcquisitionConfig, RegretAcquisition
from nashbo.games import ActionSpace, make_problem
from nashbo.gp import FittingError
from nashbo.solver import (
    RunRecord,
    SolverConfig,
    choose_branch,
    initial_design,
    recommend,
    run,
    select_next,
)

from conftest import make_surrogate_pair


class TestConfig:
    def test_rejects_tiny_budget(self):
        with pytest.raises(ValueError):
            SolverConfig(total_fes=2)

    @pytest.mark.parametrize("eps", [-0.1, 1.0, 1.5])
    def test_rejects_bad_epsilon(self, eps):
        with pytest.raises(ValueError):
            SolverConfig(total_fes=10, epsilon=eps)

    def test_rejects_bad_inner_budgets(self):
        with pytest.raises(ValueError):
            SolverConfig(total_fes=10, acq_budget=0)
        with pytest.raises(ValueError):
            SolverConfig(total_fes=10, fit_restarts=-1)

    def test_init_size_must_leave_room(self):
        with pytest.raises(ValueError):
            SolverConfig(total_fes=10, init_size=10)
        with pytest.raises(ValueError):
            SolverConfig(total_fes=10, init_size=1)

    def test_default_init_is_quarter_budget(self):
        assert SolverConfig(total_fes=40).resolved_init_size() == 10
        assert SolverConfig(total_fes=120).resolved_init_size() == 30
        # floor of a quarter, but never below two points
        assert SolverConfig(total_fes=9).resolved_init_size() == 2

    def test_explicit_init_size_wins(self):
        assert SolverConfig(total_fes=40, init_size=5).resolved_init_size() == 5


class TestInitialDesign:
    def test_shape_and_bounds(self, rng):
        space = ActionSpace(dims=(1, 1),
                            bounds=np.array([[-1.0, 2.0], [0.0, 0.5]]))
        X = initial_design(space, 8, rng)
        assert X.shape == (8, 2)
        assert np.all(X[:, 0] >= -1.0) and np.all(X[:, 0] <= 2.0)
        assert np.all(X[:, 1] >= 0.0) and np.all(X[:, 1] <= 0.5)

    def test_stratified_per_margin(self, rng):
        space = ActionSpace.unit((1, 1))
        X = initial_design(space, 10, rng)
        for j in range(2):
            strata = np.floor(X[:, j] * 10).astype(int)
            assert len(set(strata.tolist())) == 10


class TestChooseBranch:
    def test_zero_epsilon_always_exploits(self, rng):
        assert all(choose_branch(rng, 0.0) == "exploit" for _ in range(100))

    def test_high_epsilon_explores(self, rng):
        draws = [choose_branch(rng, 0.9) for _ in range(50)]
        assert draws.count("explore") > 30


class TestSelectNext:
    def test_exploit_branch_returns_acquisition_value(self, rng):
        surrogates, space = make_surrogate_pair(seed=3, t=9)
        cfg = SolverConfig(total_fes=10, epsilon=0.0, acq_budget=40)
        x, branch, val = select_next(surrogates, space, cfg, rng)
        assert branch == "exploit"
        assert x.shape == (2,)
        assert np.all(x >= 0.0) and np.all(x <= 1.0)
        assert math.isfinite(val)
        acq = RegretAcquisition(surrogates, space, cfg.acq)
        assert abs(acq.value(x) - val) < 1e-12

    def test_explore_branch_flags_nan(self):
        surrogates, space = make_surrogate_pair(seed=3, t=9)
        cfg = SolverConfig(total_fes=10, epsilon=0.999, acq_budget=30)
        rng = np.random.default_rng(0)
        x, branch, val = select_next(surrogates, space, cfg, rng)
        assert branch == "explore"
        assert math.isnan(val)

    def test_reproducible_from_generator_state(self):
        surrogates, space = make_surrogate_pair(seed=3, t=9)
        cfg = SolverConfig(total_fes=10, epsilon=0.05, acq_budget=30)
        out1 = select_next(surrogates, space, cfg, np.random.default_rng(42))
        out2 = select_next(surrogates, space, cfg, np.random.default_rng(42))
        np.testing.assert_array_equal(out1[0], out2[0])
        assert out1[1:] == out2[1:]


class TestRun:
    def test_accounting_and_branch_labels(self):
        game = make_problem("saddle1")
        rec = run(game, SolverConfig(total_fes=10, acq_budget=30, seed=5))
        assert rec.oracle_calls == 10
        assert len(rec.rows) == 10
        assert not rec.aborted
        assert [r.iteration for r in rec.rows] == list(range(1, 11))
        init = SolverConfig(total_fes=10).resolved_init_size()
        assert all(r.branch == "init" for r in rec.rows[:init])
        assert all(r.branch in ("exploit", "explore") for r in rec.rows[init:])
        for r in rec.rows:
            if r.branch == "exploit":
                assert math.isfinite(r.regret_estimate)
            else:
                assert math.isnan(r.regret_estimate)

    def test_reproducible_bit_for_bit(self):
        game = make_problem("saddle1")
        cfg = SolverConfig(total_fes=9, acq_budget=30, seed=17)
        a, b = run(game, cfg), run(game, cfg)
        for ra, rb in zip(a.rows, b.rows):
            np.testing.assert_array_equal(ra.profile, rb.profile)
            np.testing.assert_array_equal(ra.payoffs, rb.payoffs)
        np.testing.assert_array_equal(a.recommendation, b.recommendation)

    def test_noiseless_run_never_repeats_a_profile(self):
        game = make_problem("saddle2")
        rec = run(game, SolverConfig(total_fes=12, acq_budget=30, seed=2))
        seen = {tuple(r.profile) for r in rec.rows}
        assert len(seen) == 12

    def test_noisy_run_completes(self):
        game = make_problem("saddle1", noise=True)
        rec = run(game, SolverConfig(total_fes=9, acq_budget=30, seed=4))
        assert rec.oracle_calls == 9
        assert game.space.contains(rec.recommendation)

    def test_sampled_mode_runs_and_reproduces(self):
        game = make_problem("saddle1")
        acq = AcquisitionConfig(mode="sampled", samples_per_dim=6)
        cfg = SolverConfig(total_fes=8, acq_budget=25, acq=acq, seed=6)
        a, b = run(game, cfg), run(game, cfg)
        for ra, rb in zip(a.rows, b.rows):
            np.testing.assert_array_equal(ra.profile, rb.profile)

    def test_recommendation_is_an_evaluated_profile(self):
        game = make_problem("saddle1")
        rec = run(game, SolverConfig(total_fes=10, acq_budget=30, seed=8))
        assert any(np.array_equal(rec.recommendation, r.profile) for r in rec.rows)

    def test_rejects_degenerate_epsilon(self):
        game = make_problem("saddle1")
        with pytest.raises(ValueError):
            run(game, SolverConfig(total_fes=10, epsilon=0.0))

    def test_abort_flag_when_fitting_always_fails(self, monkeypatch):
        def broken(*args, **kwargs):
            raise FittingError("no usable hyperparameters")

        monkeypatch.setattr(solver, "_fit_all", broken)
        game = make_problem("saddle1")
        rec = run(game, SolverConfig(total_fes=10, acq_budget=30, seed=1))
        assert rec.aborted
        assert rec.oracle_calls == SolverConfig(total_fes=10).resolved_init_size()
        np.testing.assert_array_equal(rec.recommendation, rec.rows[0].profile)


class TestRecommend:
    def test_scores_deduplicated_profiles(self):
        surrogates, space = make_surrogate_pair(seed=9, t=8)
        acq = AcquisitionConfig()
        pts = np.random.default_rng(0).uniform(size=(5, 2))
        rows = []
        order = [0, 1, 1, 2, 3, 4, 2]  # duplicates collapse onto first occurrence
        for j, idx in enumerate(order):
            rows.append(solver.IterationRow(
                iteration=j + 1, profile=pts[idx].copy(),
                payoffs=np.zeros(2), branch="init",
                regret_estimate=float("nan"), wall_ms=0.0))
        record = RunRecord(rows=rows, recommendation=pts[0],
                           oracle_calls=len(rows), seed=0)
        choice = recommend(record, surrogates, space, acq)
        vals = RegretAcquisition(surrogates, space, acq).value_batch(pts)
        np.testing.assert_array_equal(choice, pts[int(np.argmin(vals))])
