"""Approximate-regret acquisition over per-player surrogates.

For player i at joint profile x, the building blocks are the uniform
average of the posterior mean over player i's own action block,

    bar_mu_i(x)    = E_{x_i' ~ U} [ mu_i(x_i', x_-i) ],

and the corresponding spread bar_sigma_i.  Both have closed forms under
the white + diagonal squared-exponential kernel on the unit box (erf
integrals of the kernel over the block), and cheap Latin-hypercube
sampled counterparts.  The acquisition is the pessimistic deviation gain

    value(x) = max_i [ bar_mu_i + gamma * bar_sigma_i - mu_i(x) ],

optionally rescaled per player by bar_sigma_i before the max; low values
flag profiles whose payoffs are hard to improve on unilaterally.

Everything here assumes action coordinates already normalized to the
unit box (the closed forms integrate over [0, 1] per coordinate); the
solver owns that normalization.  Non-diagonal kernel shape matrices are
unrepresentable by construction (KernelParams stores the diagonal), so
no error leg exists for them.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.special import erf

from .games import ActionSpace
from .gp import PlayerSurrogate
from .sampling import latin_hypercube

# deviation-gain optimism quantile: Phi^-1(0.99)
DEFAULT_GAMMA = 2.32635


@dataclass(frozen=True)
class AcquisitionConfig:
    """Knobs of the regret acquisition.

    ``mode`` picks the closed-form ("exact") or Latin-hypercube
    ("sampled") block statistics; sampled mode uses
    ``samples_per_dim * block_dim`` draws per player.  ``scaled``
    divides each player's term by their bar-sigma (floored at
    ``sigma_floor * (c + v)``) before taking the max.
    """

    gamma: float = DEFAULT_GAMMA
    mode: str = "exact"
    samples_per_dim: int = 10
    scaled: bool = True
    sigma_floor: float = 1e-9

    def __post_init__(self) -> None:
        if self.mode not in ("exact", "sampled"):
            raise ValueError(f"unknown acquisition mode {self.mode!r}")
        if self.gamma < 0 or self.samples_per_dim < 1 or self.sigma_floor <= 0:
            raise ValueError("gamma >= 0, samples_per_dim >= 1, sigma_floor > 0 required")


@dataclass(frozen=True)
class PlayerTerm:
    player: int
    mu: float
    bar_mu: float
    bar_sigma: float
    term: float


@dataclass(frozen=True)
class RegretEstimate:
    """Acquisition value and its per-player decomposition (value = max of terms)."""

    value: float
    per_player: tuple[PlayerTerm, ...]


def _require_unit(space: ActionSpace) -> None:
    if not space.is_unit():
        raise ValueError("block-average closed forms require unit-box coordinates")


def q_vector(s: PlayerSurrogate, space: ActionSpace, player: int,
             x_minus: np.ndarray) -> np.ndarray:
    """Kernel block-averages against every training profile.

    Entry j is the integral over player ``player``'s unit block of
    k((x_i', x_minus), train_x[j]): the white term contributes through an
    indicator of exact opponent-coordinate equality, the smooth term
    factorizes into opponent exponentials times per-coordinate erf
    integrals over the block.
    """
    _require_unit(space)
    blk = space.block_indices(player)
    oth = space.other_indices(player)
    x_minus = np.asarray(x_minus, dtype=float)
    if x_minus.shape != (len(oth),):
        raise ValueError("x_minus must stack all opponent coordinates")
    X = s.train_x
    d = s.params.d
    diff = x_minus - X[:, oth]
    e = np.exp(-0.5 * (diff * diff) @ d[oth])
    w = np.ones(X.shape[0])
    for l in blk:
        r = np.sqrt(d[l] / 2.0)
        w = w * np.sqrt(np.pi / (2.0 * d[l])) * (erf(X[:, l] * r) + erf((1.0 - X[:, l]) * r))
    eq = np.all(X[:, oth] == x_minus, axis=1)
    return s.params.v * eq + s.params.c * e * w


def Q_matrix(s: PlayerSurrogate, space: ActionSpace, player: int,
             x_minus: np.ndarray) -> np.ndarray:
    """Pairwise block-averaged kernel products over the training set.

    Entry (p, q) integrates k(z_p, x') k(x', z_q) over player
    ``player``'s unit block, x' = (x_i', x_minus).  Four terms: the
    white-white indicator, two white-smooth cross terms that sift onto
    full-kernel evaluations, and the smooth-smooth Gaussian product
    integral with its erf closed form.
    """
    _require_unit(space)
    blk = space.block_indices(player)
    oth = space.other_indices(player)
    x_minus = np.asarray(x_minus, dtype=float)
    if x_minus.shape != (len(oth),):
        raise ValueError("x_minus must stack all opponent coordinates")
    X = s.train_x
    v, c, d = s.params.v, s.params.c, s.params.d

    diff = x_minus - X[:, oth]
    e = np.exp(-0.5 * (diff * diff) @ d[oth])
    eqo = np.all(X[:, oth] == x_minus, axis=1)
    eqfull = np.all(X[:, None, :] == X[None, :, :], axis=-1)
    dfull = X[:, None, :] - X[None, :, :]
    se_full = np.exp(-0.5 * np.einsum("pql,l->pq", dfull * dfull, d))

    G = np.ones((X.shape[0], X.shape[0]))
    for l in blk:
        a = X[:, l][:, None]
        b = X[:, l][None, :]
        r = np.sqrt(d[l]) / 2.0
        G = G * (np.sqrt(np.pi / (4.0 * d[l]))
                 * np.exp(-d[l] * (a - b) ** 2 / 4.0)
                 * (erf(r * (a + b)) - erf(r * (a + b - 2.0))))

    term_vv = v * v * (eqo[:, None] & eqfull)
    term_vc = v * c * se_full * eqo[:, None]
    term_cv = v * c * se_full * eqo[None, :]
    term_cc = c * c * np.outer(e, e) * G
    return term_vv + term_vc + term_cv + term_cc


def bar_mu_exact(s: PlayerSurrogate, space: ActionSpace, player: int,
                 x: np.ndarray) -> float:
    """Closed-form block average of the posterior mean at profile ``x``."""
    oth = space.other_indices(player)
    q = q_vector(s, space, player, np.asarray(x, dtype=float)[oth])
    return float(s.y_offset + q @ s.alpha)


def bar_sigma_exact(s: PlayerSurrogate, space: ActionSpace, player: int,
                    x: np.ndarray) -> float:
    """Closed-form spread of the posterior mean over the block at ``x``.

    Second moment from the Q matrix minus the squared first moment,
    clamped at zero before the square root.
    """
    oth = space.other_indices(player)
    x_minus = np.asarray(x, dtype=float)[oth]
    q = q_vector(s, space, player, x_minus)
    Q = Q_matrix(s, space, player, x_minus)
    m1 = float(q @ s.alpha)
    m2 = float(s.alpha @ Q @ s.alpha)
    return float(np.sqrt(max(m2 - m1 * m1, 0.0)))


def _sampled_stats(s: PlayerSurrogate, space: ActionSpace, player: int, x: np.ndarray,
                   n_samples: int, rng: np.random.Generator) -> tuple[float, float]:
    # plug-in mean/std (ddof 0) of the posterior mean over one shared LHS draw
    blk = space.block_indices(player)
    pts = latin_hypercube(n_samples, len(blk), rng)
    X_eval = np.tile(np.asarray(x, dtype=float), (n_samples, 1))
    X_eval[:, blk] = pts
    mus = s.posterior_mean(X_eval)
    mean = float(np.mean(mus))
    return mean, float(np.sqrt(np.mean((mus - mean) ** 2)))


def bar_mu_sampled(s: PlayerSurrogate, space: ActionSpace, player: int, x: np.ndarray,
                   n_samples: int, rng: np.random.Generator) -> float:
    """Latin-hypercube estimate of the block-averaged posterior mean."""
    _require_unit(space)
    if n_samples < 1:
        raise ValueError("need at least one sample")
    return _sampled_stats(s, space, player, x, n_samples, rng)[0]


def bar_sigma_sampled(s: PlayerSurrogate, space: ActionSpace, player: int, x: np.ndarray,
                      n_samples: int, rng: np.random.Generator) -> float:
    """Latin-hypercube estimate of the block spread (population std)."""
    _require_unit(space)
    if n_samples < 2:
        raise ValueError("need at least two samples for a spread estimate")
    return _sampled_stats(s, space, player, x, n_samples, rng)[1]


def _check_common_training(surrogates: Sequence[PlayerSurrogate]) -> None:
    X0 = surrogates[0].train_x
    for s in surrogates[1:]:
        if not np.array_equal(s.train_x, X0):
            raise ValueError("all players' surrogates must share one set of training profiles")


def regret_hat(surrogates: Sequence[PlayerSurrogate], space: ActionSpace, x: np.ndarray,
               cfg: AcquisitionConfig, rng: np.random.Generator | None = None) -> RegretEstimate:
    """Pessimistic unilateral-deviation gain estimate at profile ``x``.

    Reference implementation over the per-player block statistics; the
    solver's hot loops use :class:`RegretAcquisition`, which must agree
    with this to numerical precision.  Sampled mode requires ``rng`` and
    shares one draw per player between the mean and spread estimates.
    """
    _require_unit(space)
    if len(surrogates) != space.players:
        raise ValueError("need one surrogate per player")
    _check_common_training(surrogates)
    x = np.asarray(x, dtype=float)
    terms = []
    for i, s in enumerate(surrogates):
        mu = s.posterior_mean(x)
        if cfg.mode == "exact":
            bm = bar_mu_exact(s, space, i, x)
            bs = bar_sigma_exact(s, space, i, x)
        else:
            if rng is None:
                raise ValueError("sampled mode needs an rng")
            n = cfg.samples_per_dim * space.dims[i]
            bm, bs = _sampled_stats(s, space, i, x, n, rng)
        gain = bm + cfg.gamma * bs - mu
        if cfg.scaled:
            floor = cfg.sigma_floor * (s.params.c + s.params.v)
            term = gain / max(bs, floor)
        else:
            term = gain
        terms.append(PlayerTerm(player=i, mu=mu, bar_mu=bm, bar_sigma=bs, term=term))
    return RegretEstimate(value=max(t.term for t in terms), per_player=tuple(terms))


class RegretAcquisition:
    """Cached evaluator of the regret acquisition for fixed surrogates.

    Precomputes every training-set-only factor of the closed forms (erf
    block integrals, full-kernel Gram pieces), leaving O(t) work per
    point for the mean average and O(t^2) for the spread.  Agrees with
    :func:`regret_hat` to floating-point precision in exact mode and
    draw-for-draw in sampled mode given the same generator state.
    """

    def __init__(self, surrogates: Sequence[PlayerSurrogate], space: ActionSpace,
                 cfg: AcquisitionConfig):
        _require_unit(space)
        if len(surrogates) != space.players:
            raise ValueError("need one surrogate per player")
        _check_common_training(surrogates)
        self.surrogates = list(surrogates)
        self.space = space
        self.cfg = cfg
        self._caches = [self._build_cache(i) for i in range(space.players)]

    def _build_cache(self, i: int) -> dict:
        s = self.surrogates[i]
        blk = self.space.block_indices(i)
        oth = self.space.other_indices(i)
        X = s.train_x
        v, c, d = s.params.v, s.params.c, s.params.d
        alpha = s.alpha

        w = np.ones(X.shape[0])
        for l in blk:
            r = np.sqrt(d[l] / 2.0)
            w = w * np.sqrt(np.pi / (2.0 * d[l])) * (erf(X[:, l] * r) + erf((1.0 - X[:, l]) * r))

        G = np.ones((X.shape[0], X.shape[0]))
        for l in blk:
            a = X[:, l][:, None]
            b = X[:, l][None, :]
            r = np.sqrt(d[l]) / 2.0
            G = G * (np.sqrt(np.pi / (4.0 * d[l]))
                     * np.exp(-d[l] * (a - b) ** 2 / 4.0)
                     * (erf(r * (a + b)) - erf(r * (a + b - 2.0))))

        dfull = X[:, None, :] - X[None, :, :]
        se_full = np.exp(-0.5 * np.einsum("pql,l->pq", dfull * dfull, d))
        eqfull = np.all(X[:, None, :] == X[None, :, :], axis=-1)

        return {
            "s": s, "blk": blk, "oth": oth, "X": X, "Xoth": X[:, oth],
            "v": v, "c": c, "d": d, "alpha": alpha,
            "w_alpha": w * alpha,
            "t_eqfull": eqfull @ alpha,          # for the v^2 term
            "t_se": se_full @ alpha,             # for the v*c cross terms
            "G": G,
            "floor": self.cfg.sigma_floor * (c + v),
        }

    def _exact_stats_batch(self, i: int, X_eval: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        cch = self._caches[i]
        s, oth = cch["s"], cch["oth"]
        v, c, d, alpha = cch["v"], cch["c"], cch["d"], cch["alpha"]
        Xm = X_eval[:, oth]
        diff = Xm[:, None, :] - cch["Xoth"][None, :, :]
        E = np.exp(-0.5 * np.einsum("mjl,l->mj", diff * diff, d[oth]))
        Eqo = np.all(Xm[:, None, :] == cch["Xoth"][None, :, :], axis=-1)

        m1 = v * (Eqo @ alpha) + c * (E @ cch["w_alpha"])
        h = E * alpha
        m2 = (v * v * (Eqo @ (alpha * cch["t_eqfull"]))
              + 2.0 * v * c * (Eqo @ (alpha * cch["t_se"]))
              + c * c * np.einsum("mp,pq,mq->m", h, cch["G"], h))
        var = np.maximum(m2 - m1 * m1, 0.0)
        return s.y_offset + m1, np.sqrt(var)

    def value_batch(self, X_eval: np.ndarray,
                    rng: np.random.Generator | None = None) -> np.ndarray:
        """Acquisition values for a (m, n) batch of unit-box profiles."""
        X_eval = np.atleast_2d(np.asarray(X_eval, dtype=float))
        out = np.full(X_eval.shape[0], -np.inf)
        for i in range(self.space.players):
            cch = self._caches[i]
            s = cch["s"]
            mu = s.posterior_mean(X_eval)
            if self.cfg.mode == "exact":
                bm, bs = self._exact_stats_batch(i, X_eval)
            else:
                if rng is None:
                    raise ValueError("sampled mode needs an rng")
                n = self.cfg.samples_per_dim * self.space.dims[i]
                bm = np.empty(X_eval.shape[0])
                bs = np.empty(X_eval.shape[0])
                for m, row in enumerate(X_eval):
                    bm[m], bs[m] = _sampled_stats(s, self.space, i, row, n, rng)
            gain = bm + self.cfg.gamma * bs - mu
            term = gain / np.maximum(bs, cch["floor"]) if self.cfg.scaled else gain
            np.maximum(out, term, out=out)
        return out

    def value(self, x: np.ndarray, rng: np.random.Generator | None = None) -> float:
        return float(self.value_batch(np.asarray(x, dtype=float)[None, :], rng)[0])
