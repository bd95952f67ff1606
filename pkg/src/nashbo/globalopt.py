"""Derivative-free global search over a box via an evolution strategy.

A compact CMA-ES with the standard parameter schedule (log-rank weights,
cumulation paths, rank-one + rank-mu covariance update, step-size
control), wrapped for the needs of the callers here:

* the budget is consumed exactly: ``max_evals`` objective evaluations,
  never fewer, with no internal convergence stopping;
* the returned pair is best-seen over every point evaluated, not the
  final distribution mean;
* box handling resamples an out-of-box offspring a few times, then
  clips; collapsed or ill-conditioned search distributions trigger an
  in-budget restart from a fresh uniform mean.

All randomness flows from ``budget.seed`` through one Generator, so a
call is reproducible bit for bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

_RESAMPLE_TRIES = 10
_SIGMA0 = 0.3


@dataclass(frozen=True)
class OptBudget:
    """Evaluation budget, optional population override, and RNG seed."""

    max_evals: int
    population: int | None = None
    seed: int = 0

    def __post_init__(self) -> None:
        if self.max_evals < 1:
            raise ValueError("need at least one objective evaluation")
        if self.population is not None and self.population < 2:
            raise ValueError("population must be at least 2")


class _Cma:
    # one restartable CMA state on the unit box
    def __init__(self, n: int, lam: int, rng: np.random.Generator):
        self.n = n
        self.lam = lam
        self.rng = rng
        mu = lam // 2
        w = np.log((lam + 1) / 2.0) - np.log(np.arange(1, mu + 1))
        self.weights = w / np.sum(w)
        self.mu = mu
        self.mueff = 1.0 / np.sum(self.weights**2)
        self.cc = (4.0 + self.mueff / n) / (n + 4.0 + 2.0 * self.mueff / n)
        self.cs = (self.mueff + 2.0) / (n + self.mueff + 5.0)
        self.c1 = 2.0 / ((n + 1.3) ** 2 + self.mueff)
        self.cmu = min(1.0 - self.c1,
                       2.0 * (self.mueff - 2.0 + 1.0 / self.mueff) / ((n + 2.0) ** 2 + self.mueff))
        self.damps = 1.0 + 2.0 * max(0.0, math.sqrt((self.mueff - 1.0) / (n + 1.0)) - 1.0) + self.cs
        self.chi_n = math.sqrt(n) * (1.0 - 1.0 / (4.0 * n) + 1.0 / (21.0 * n * n))
        self.stall_limit = 10 + math.ceil(30.0 * n / lam)
        self.restart()

    def restart(self) -> None:
        self.mean = self.rng.uniform(size=self.n)
        self.sigma = _SIGMA0
        self.C = np.eye(self.n)
        self.ps = np.zeros(self.n)
        self.pc = np.zeros(self.n)
        self.gen = 0
        self.stall = 0

    def ask(self, k: int) -> tuple[np.ndarray, np.ndarray]:
        """k offspring in the unit box plus their normalized steps."""
        evals, eigvec = np.linalg.eigh(self.C)
        scale = np.sqrt(np.maximum(evals, 0.0))
        xs = np.empty((k, self.n))
        ys = np.empty((k, self.n))
        for j in range(k):
            for _ in range(_RESAMPLE_TRIES):
                y = eigvec @ (scale * self.rng.standard_normal(self.n))
                x = self.mean + self.sigma * y
                if np.all(x >= 0.0) and np.all(x <= 1.0):
                    break
            else:
                x = np.clip(x, 0.0, 1.0)
                y = (x - self.mean) / self.sigma
            xs[j] = x
            ys[j] = y
        return xs, ys

    def tell(self, ys: np.ndarray, fs: np.ndarray, improved: bool) -> None:
        order = np.argsort(fs, kind="stable")
        sel = ys[order[: self.mu]]
        yw = self.weights @ sel
        self.mean = np.clip(self.mean + self.sigma * yw, 0.0, 1.0)

        evals, eigvec = np.linalg.eigh(self.C)
        inv_sqrt = eigvec @ np.diag(1.0 / np.sqrt(np.maximum(evals, 1e-30))) @ eigvec.T
        self.gen += 1
        self.ps = ((1.0 - self.cs) * self.ps
                   + math.sqrt(self.cs * (2.0 - self.cs) * self.mueff) * (inv_sqrt @ yw))
        denom = math.sqrt(1.0 - (1.0 - self.cs) ** (2.0 * self.gen))
        hsig = (np.linalg.norm(self.ps) / denom / self.chi_n) < (1.4 + 2.0 / (self.n + 1.0))
        self.pc = ((1.0 - self.cc) * self.pc
                   + (math.sqrt(self.cc * (2.0 - self.cc) * self.mueff) * yw if hsig else 0.0))

        rank_mu = np.einsum("i,ij,ik->jk", self.weights, sel, sel)
        self.C = ((1.0 - self.c1 - self.cmu) * self.C
                  + self.c1 * (np.outer(self.pc, self.pc)
                               + (0.0 if hsig else self.cc * (2.0 - self.cc)) * self.C)
                  + self.cmu * rank_mu)
        self.sigma *= math.exp((self.cs / self.damps)
                               * (np.linalg.norm(self.ps) / self.chi_n - 1.0))
        self.stall = 0 if improved else self.stall + 1

    def degenerate(self) -> bool:
        evals = np.linalg.eigvalsh(self.C)
        top = float(np.max(evals))
        if top <= 0.0 or self.sigma * math.sqrt(top) < 1e-12 or self.sigma > 1e7:
            return True
        bottom = float(np.min(evals))
        return bottom <= 0.0 or top / bottom > 1e14

    def stalled(self) -> bool:
        return self.stall >= self.stall_limit


def minimize(f: Callable[[np.ndarray], float], box: np.ndarray,
             budget: OptBudget) -> tuple[np.ndarray, float]:
    """Minimize ``f`` over the box, spending exactly ``budget.max_evals`` calls.

    Returns the best point seen and its value (best-seen semantics, not
    the final mean).  ``box`` is an (n, 2) array of [lo, hi] rows.
    """
    box = np.atleast_2d(np.asarray(box, dtype=float))
    if box.ndim != 2 or box.shape[1] != 2 or not np.all(box[:, 0] < box[:, 1]):
        raise ValueError("box must be (n, 2) rows of lo < hi")
    n = box.shape[0]
    lo, width = box[:, 0], box[:, 1] - box[:, 0]
    rng = np.random.default_rng(budget.seed)
    lam = budget.population or (4 + int(3 * math.log(n)))
    state = _Cma(n, lam, rng)

    best_x = None
    best_f = math.inf
    spent = 0
    while spent < budget.max_evals:
        k = min(lam, budget.max_evals - spent)
        xs, ys = state.ask(k)
        fs = np.empty(k)
        improved = False
        for j in range(k):
            fs[j] = f(lo + width * xs[j])
            if fs[j] < best_f:
                best_f = float(fs[j])
                best_x = xs[j].copy()
                improved = True
        spent += k
        if k == lam:
            state.tell(ys, fs, improved)
            if state.degenerate() or state.stalled():
                state.restart()
    return lo + width * best_x, best_f


def maximize(f: Callable[[np.ndarray], float], box: np.ndarray,
             budget: OptBudget) -> tuple[np.ndarray, float]:
    """Maximize ``f``; same semantics as :func:`minimize` mirrored."""
    x, neg = minimize(lambda z: -f(z), box, budget)
    return x, -neg
