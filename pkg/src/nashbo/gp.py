"""Gaussian-process payoff surrogates, one per player.

The kernel is a white term plus an anisotropic scaled squared exponential,

    k(x, x') = v * 1{x == x'} + c * exp(-0.5 * (x - x')' D (x - x')),

with D diagonal and positive.  The white term uses an *indicator* of exact
coordinate equality (not an added diagonal), both in the Gram matrix and at
prediction time, so repeated profiles correlate through v while the latent
surface stays interpolating elsewhere.  Hyperparameters are fit by maximum
marginal likelihood over log-parameters with an analytic gradient and a few
Latin-hypercube restarts; observations are centred on their mean and the
offset is restored at prediction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import linalg, optimize

from .sampling import latin_hypercube

# box constraints for the marginal-likelihood search, in natural scale
V_BOUNDS = (1e-5, 1e5)
C_BOUNDS = (1e-3, 1e3)
D_BOUNDS = (1e-2, 1e2)

# Cholesky jitter escalates multiplicatively from start to max, scaled by c + v
_JITTER_START = 1e-10
_JITTER_MAX = 1e-4


class FittingError(RuntimeError):
    """All marginal-likelihood restarts failed; carries the optimizer messages."""


@dataclass(frozen=True, eq=False)
class KernelParams:
    """White variance ``v``, signal variance ``c``, diagonal of ``D``.

    ``d[l]`` is the inverse squared length scale of coordinate ``l``; only
    diagonal D is representable, which is what the block-integral closed
    forms downstream require.
    """

    v: float
    c: float
    d: np.ndarray

    def __post_init__(self) -> None:
        d = np.array(self.d, dtype=float, ndmin=1)
        if self.v < 0 or self.c <= 0 or np.any(d <= 0):
            raise ValueError("need v >= 0, c > 0 and positive D diagonal")
        d.setflags(write=False)
        object.__setattr__(self, "v", float(self.v))
        object.__setattr__(self, "c", float(self.c))
        object.__setattr__(self, "d", d)


def kernel_eval(params: KernelParams, x: np.ndarray, x2: np.ndarray) -> float:
    """Kernel value between two single points."""
    x = np.asarray(x, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    sq = float(np.sum(params.d * (x - x2) ** 2))
    white = params.v if np.array_equal(x, x2) else 0.0
    return white + params.c * math.exp(-0.5 * sq)


def kernel_matrix(params: KernelParams, X: np.ndarray, X2: np.ndarray | None = None) -> np.ndarray:
    """Gram (or cross) matrix; the white term fires on exact row equality."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    X2m = X if X2 is None else np.atleast_2d(np.asarray(X2, dtype=float))
    diff = X[:, None, :] - X2m[None, :, :]
    sq = np.einsum("ijl,l->ij", diff * diff, params.d)
    K = params.c * np.exp(-0.5 * sq)
    eq = np.all(X[:, None, :] == X2m[None, :, :], axis=-1)
    if eq.any():
        K = K + params.v * eq
    return K


def _chol_with_jitter(K: np.ndarray, scale: float) -> tuple[np.ndarray, float]:
    """Lower Cholesky of K (+ escalating jitter * scale * I when needed)."""
    mult = 0.0
    while True:
        try:
            L = linalg.cholesky(K + mult * scale * np.eye(K.shape[0]), lower=True)
            return L, mult * scale
        except linalg.LinAlgError:
            mult = _JITTER_START if mult == 0.0 else mult * 10.0
            if mult > _JITTER_MAX:
                raise np.linalg.LinAlgError(
                    f"Gram matrix not positive definite at jitter {mult * scale:.3g}"
                )


def log_marginal_likelihood(params: KernelParams, train_x: np.ndarray,
                            train_y: np.ndarray) -> float:
    """Gaussian log evidence of ``train_y`` (not centred here) under ``params``."""
    X = np.atleast_2d(np.asarray(train_x, dtype=float))
    y = np.asarray(train_y, dtype=float)
    t = X.shape[0]
    if y.shape != (t,):
        raise ValueError("train_y must be one value per training profile")
    K = kernel_matrix(params, X)
    L, _ = _chol_with_jitter(K, params.c + params.v)
    alpha = linalg.cho_solve((L, True), y)
    return float(-0.5 * y @ alpha - np.sum(np.log(np.diag(L))) - 0.5 * t * math.log(2.0 * math.pi))


@dataclass(eq=False)
class PlayerSurrogate:
    """Fitted posterior for one player's payoff surface.

    Holds the training inputs, the *centred* targets with their offset,
    and the cached Cholesky factor and weights ``alpha = K^-1 y_c``.
    Treat instances as immutable once built.
    """

    params: KernelParams
    train_x: np.ndarray
    train_y: np.ndarray
    y_offset: float
    chol: np.ndarray
    alpha: np.ndarray
    jitter: float = 0.0

    @classmethod
    def from_data(cls, params: KernelParams, train_x: np.ndarray, train_y: np.ndarray,
                  center: bool = True) -> "PlayerSurrogate":
        """Build the posterior caches for fixed hyperparameters."""
        X = np.atleast_2d(np.array(train_x, dtype=float))
        y = np.array(np.asarray(train_y, dtype=float), ndmin=1)
        if X.shape[0] != y.shape[0]:
            raise ValueError("train_x and train_y disagree on the number of observations")
        offset = float(np.mean(y)) if center else 0.0
        yc = y - offset
        K = kernel_matrix(params, X)
        L, jit = _chol_with_jitter(K, params.c + params.v)
        alpha = linalg.cho_solve((L, True), yc)
        X.setflags(write=False)
        yc.setflags(write=False)
        return cls(params=params, train_x=X, train_y=yc, y_offset=offset,
                   chol=L, alpha=alpha, jitter=jit)

    @property
    def n_train(self) -> int:
        return self.train_x.shape[0]

    @property
    def n_coords(self) -> int:
        return self.train_x.shape[1]

    def posterior_mean(self, x: np.ndarray):
        """Posterior mean at one point (float) or a batch of rows (1-D array)."""
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        k = kernel_matrix(self.params, np.atleast_2d(x), self.train_x)
        mu = self.y_offset + k @ self.alpha
        return float(mu[0]) if single else mu

    def posterior_var(self, x: np.ndarray):
        """Posterior variance at one point or a batch; clamped at zero."""
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        Xq = np.atleast_2d(x)
        k = kernel_matrix(self.params, Xq, self.train_x)
        # k(x, x) = v + c everywhere: the white indicator always fires on itself
        prior = self.params.v + self.params.c
        w = linalg.cho_solve((self.chol, True), k.T)
        var = np.maximum(prior - np.einsum("ij,ji->i", k, w), 0.0)
        return float(var[0]) if single else var


def fit(train_x: np.ndarray, train_y: np.ndarray, restarts: int = 2,
        rng: np.random.Generator | int = 0, maxiter: int = 60) -> PlayerSurrogate:
    """Maximum-marginal-likelihood fit of the kernel hyperparameters.

    Runs ``restarts + 1`` L-BFGS-B searches over log-parameters from
    Latin-hypercube starts inside the box constraints and keeps the best
    finite optimum.  Deterministic given the data and the seed.

    Raises
    ------
    FittingError
        If every restart fails to produce a finite marginal likelihood.
    """
    X = np.atleast_2d(np.asarray(train_x, dtype=float))
    y = np.asarray(train_y, dtype=float)
    t, n = X.shape
    if t < 2:
        raise ValueError("need at least two observations to fit hyperparameters")
    if y.shape != (t,):
        raise ValueError("train_y must be one value per training profile")
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)

    offset = float(np.mean(y))
    yc = y - offset
    # per-coordinate squared differences, reused by every likelihood evaluation
    sq_coord = (X[:, None, :] - X[None, :, :]) ** 2
    eq = np.all(X[:, None, :] == X[None, :, :], axis=-1)
    eye = np.eye(t)

    lo = np.log(np.array([V_BOUNDS[0], C_BOUNDS[0]] + [D_BOUNDS[0]] * n))
    hi = np.log(np.array([V_BOUNDS[1], C_BOUNDS[1]] + [D_BOUNDS[1]] * n))

    def neg_lml_and_grad(theta: np.ndarray):
        v, cc = math.exp(theta[0]), math.exp(theta[1])
        d = np.exp(theta[2:])
        M = np.exp(-0.5 * (sq_coord @ d))
        K = v * eq + cc * M
        scale = cc + v
        mult = 0.0
        while True:
            try:
                L = linalg.cholesky(K + mult * scale * eye, lower=True)
                break
            except linalg.LinAlgError:
                mult = _JITTER_START if mult == 0.0 else mult * 10.0
                if mult > _JITTER_MAX:
                    return np.inf, np.zeros_like(theta)
        alpha = linalg.cho_solve((L, True), yc)
        lml = -0.5 * yc @ alpha - np.sum(np.log(np.diag(L))) - 0.5 * t * math.log(2 * math.pi)
        Kinv = linalg.cho_solve((L, True), eye)
        A = np.outer(alpha, alpha) - Kinv
        grad = np.empty_like(theta)
        grad[0] = 0.5 * np.sum(A * (v * (eq + mult * eye)))
        grad[1] = 0.5 * np.sum(A * (cc * (M + mult * eye)))
        for l in range(n):
            dK = cc * M * (-0.5 * sq_coord[:, :, l]) * d[l]
            grad[2 + l] = 0.5 * np.sum(A * dK)
        return -lml, -grad

    starts = lo + latin_hypercube(restarts + 1, n + 2, rng) * (hi - lo)
    best = None
    failures: list[str] = []
    for theta0 in starts:
        res = optimize.minimize(
            neg_lml_and_grad, theta0, jac=True, method="L-BFGS-B",
            bounds=list(zip(lo, hi)), options={"maxiter": maxiter},
        )
        if np.isfinite(res.fun):
            if best is None or res.fun < best.fun:
                best = res
        else:
            failures.append(str(res.message))
    if best is None:
        raise FittingError(
            f"all {restarts + 1} restarts failed: {failures!r}"
        )
    theta = best.x
    # exp(log(bound)) can land one ulp outside the box; snap back so the
    # returned parameters honour the documented bounds exactly
    params = KernelParams(
        v=float(np.clip(math.exp(theta[0]), *V_BOUNDS)),
        c=float(np.clip(math.exp(theta[1]), *C_BOUNDS)),
        d=np.clip(np.exp(theta[2:]), *D_BOUNDS),
    )
    return PlayerSurrogate.from_data(params, X, y, center=True)
