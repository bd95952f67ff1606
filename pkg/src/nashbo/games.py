"""Continuous normal-form games on box-shaped strategy sets.

A game couples one box of action coordinates per player with one payoff
function per player, each mapping the *joint* profile to that player's
payoff.  The payoff oracle adds centred Gaussian noise per player and is
the only thing the solver is allowed to call during a run; exact payoff
functions (when present) are reserved for analysis-side baselines.

The built-in benchmark family is the shifted saddle game

    u_1(x) = ||x_2 - s_2||^2 - ||x_1 - s_1||^2,   u_2 = -u_1,

whose unique pure equilibrium sits at the shift ``s`` and whose true
regret has the closed form ``max_i ||x_i - s_i||^2``.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass, field, replace
from typing import Callable, Iterator, Sequence

import numpy as np

Profile = np.ndarray
UtilityFn = Callable[[np.ndarray], float]


class UtilitiesUnavailableError(RuntimeError):
    """Raised when an operation needs exact payoff functions the game lacks."""


@dataclass(frozen=True, eq=False)
class ActionSpace:
    """Per-player box strategy sets, concatenated into one joint box.

    Parameters
    ----------
    dims : tuple of int
        Number of action coordinates per player, in player order.
    bounds : ndarray of shape (sum(dims), 2)
        Rows of ``[lo, hi]`` for every joint coordinate, ``lo < hi``.
    """

    dims: tuple[int, ...]
    bounds: np.ndarray

    def __post_init__(self) -> None:
        dims = tuple(int(d) for d in self.dims)
        if not dims or any(d < 1 for d in dims):
            raise ValueError("every player needs at least one action coordinate")
        bounds = np.array(self.bounds, dtype=float)
        if bounds.shape != (sum(dims), 2):
            raise ValueError(
                f"bounds shape {bounds.shape} does not match {sum(dims)} joint coordinates"
            )
        if not np.all(bounds[:, 0] < bounds[:, 1]):
            raise ValueError("every bound row must satisfy lo < hi")
        bounds.setflags(write=False)
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "bounds", bounds)

    @classmethod
    def unit(cls, dims: Sequence[int]) -> "ActionSpace":
        """The [0, 1]^n box with the given per-player dimensions."""
        n = int(sum(dims))
        return cls(tuple(dims), np.tile([0.0, 1.0], (n, 1)))

    @property
    def players(self) -> int:
        return len(self.dims)

    @property
    def n_joint(self) -> int:
        return sum(self.dims)

    @property
    def widths(self) -> np.ndarray:
        return self.bounds[:, 1] - self.bounds[:, 0]

    def block(self, player: int) -> slice:
        """Slice of joint coordinates owned by ``player``."""
        start = sum(self.dims[:player])
        return slice(start, start + self.dims[player])

    def block_indices(self, player: int) -> np.ndarray:
        b = self.block(player)
        return np.arange(b.start, b.stop)

    def other_indices(self, player: int) -> np.ndarray:
        b = self.block(player)
        return np.concatenate([np.arange(0, b.start), np.arange(b.stop, self.n_joint)])

    def contains(self, x: Profile, atol: float = 0.0) -> bool:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.n_joint,):
            return False
        return bool(
            np.all(x >= self.bounds[:, 0] - atol) and np.all(x <= self.bounds[:, 1] + atol)
        )

    def is_unit(self) -> bool:
        return bool(np.all(self.bounds[:, 0] == 0.0) and np.all(self.bounds[:, 1] == 1.0))

    def to_unit(self, x: Profile) -> Profile:
        """Affine map of native coordinates onto [0, 1]^n."""
        return (np.asarray(x, dtype=float) - self.bounds[:, 0]) / self.widths

    def from_unit(self, u: Profile) -> Profile:
        return self.bounds[:, 0] + np.asarray(u, dtype=float) * self.widths

    def as_unit(self) -> "ActionSpace":
        """Same player structure on the [0, 1]^n box."""
        return ActionSpace.unit(self.dims)


@dataclass(frozen=True, eq=False)
class GameSpec:
    """A continuous game: action space, payoffs, noise model, metadata.

    ``utilities`` may be ``None`` for games known only through external
    data; the oracle and the exact baselines then refuse to run.
    ``noise_std`` holds one observation-noise standard deviation per
    player (zeros for a noiseless game).
    """

    space: ActionSpace
    utilities: tuple[UtilityFn, ...] | None
    noise_std: np.ndarray
    name: str = "custom"
    known_ne: Profile | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        noise = np.array(self.noise_std, dtype=float)
        if noise.shape != (self.space.players,):
            raise ValueError("need one noise std per player")
        if np.any(noise < 0):
            raise ValueError("noise stds must be non-negative")
        noise.setflags(write=False)
        object.__setattr__(self, "noise_std", noise)
        if self.utilities is not None and len(self.utilities) != self.space.players:
            raise ValueError("need one utility function per player")
        if self.known_ne is not None:
            ne = np.array(self.known_ne, dtype=float)
            if not self.space.contains(ne):
                raise ValueError("known equilibrium lies outside the action space")
            ne.setflags(write=False)
            object.__setattr__(self, "known_ne", ne)

    @property
    def players(self) -> int:
        return self.space.players

    @property
    def noisy(self) -> bool:
        return bool(np.any(self.noise_std > 0))

    def payoffs(self, x: Profile) -> np.ndarray:
        """Exact payoff vector at ``x``; needs ``utilities``."""
        if self.utilities is None:
            raise UtilitiesUnavailableError(
                f"game {self.name!r} has no exact payoff functions"
            )
        x = np.asarray(x, dtype=float)
        return np.array([u(x) for u in self.utilities], dtype=float)

    def with_noise(self, noise_std: Sequence[float]) -> "GameSpec":
        return replace(self, noise_std=np.asarray(noise_std, dtype=float))


@dataclass(frozen=True)
class Observation:
    profile: Profile
    payoffs: np.ndarray


class ObservationSet:
    """Append-only store of (profile, payoff-vector) pairs.

    Exact duplicate profiles are rejected unless ``allow_duplicates`` is
    set (they are legitimate under observation noise, and fatal to the
    interpolating surrogate without it).
    """

    def __init__(self, allow_duplicates: bool = False):
        self.allow_duplicates = allow_duplicates
        self._obs: list[Observation] = []

    def __len__(self) -> int:
        return len(self._obs)

    def __iter__(self) -> Iterator[Observation]:
        return iter(self._obs)

    def __getitem__(self, i: int) -> Observation:
        return self._obs[i]

    def append(self, obs: Observation) -> None:
        if not self.allow_duplicates and self.contains_profile(obs.profile):
            raise ValueError("exact duplicate profile in a noiseless observation set")
        self._obs.append(obs)

    def contains_profile(self, x: Profile) -> bool:
        x = np.asarray(x, dtype=float)
        return any(np.array_equal(o.profile, x) for o in self._obs)

    def profiles(self) -> np.ndarray:
        """(t, n) array of all observed profiles, in insertion order."""
        return np.array([o.profile for o in self._obs], dtype=float)

    def payoffs(self, player: int) -> np.ndarray:
        return np.array([o.payoffs[player] for o in self._obs], dtype=float)


def oracle_eval(game: GameSpec, x: Profile, rng: np.random.Generator) -> Observation:
    """One noisy evaluation of every player's payoff at ``x``.

    Draws one centred Gaussian per player with that player's noise std.
    This is the expensive call whose count the solver budgets.
    """
    x = np.array(x, dtype=float)
    if not game.space.contains(x):
        raise ValueError(f"profile {x} lies outside the action space of {game.name!r}")
    payoffs = game.payoffs(x)
    if game.noisy:
        # scale 0 is a valid Gaussian scale (degenerate at 0), so per-player
        # draws stay aligned even when only some players are noisy
        payoffs = payoffs + rng.normal(0.0, game.noise_std)
    x.setflags(write=False)
    return Observation(profile=x, payoffs=payoffs)


# --- saddle benchmark family ------------------------------------------------

def _saddle_payoff(shift: np.ndarray, split: int, player: int, x: np.ndarray) -> float:
    # u_1 = opponent-block squared distance - own-block squared distance; u_2 = -u_1
    x = np.asarray(x, dtype=float)
    g1 = float(np.sum((x[split:] - shift[split:]) ** 2) - np.sum((x[:split] - shift[:split]) ** 2))
    return g1 if player == 0 else -g1


def make_saddle(shift: Sequence[float], dims_per_player: int = 1,
                noise_std: Sequence[float] | None = None,
                name: str | None = None) -> GameSpec:
    """Two-player zero-sum saddle game on the unit box.

    ``shift`` concatenates both players' equilibrium blocks (length
    ``2 * dims_per_player``) and must lie inside the open unit box so
    the equilibrium is interior.
    """
    k = int(dims_per_player)
    shift = np.array(shift, dtype=float)
    if shift.shape != (2 * k,):
        raise ValueError(f"shift must have length {2 * k}")
    if np.any(shift <= 0.0) or np.any(shift >= 1.0):
        raise ValueError("saddle shift must lie strictly inside the unit box")
    shift.setflags(write=False)
    utilities = tuple(functools.partial(_saddle_payoff, shift, k, i) for i in (0, 1))
    return GameSpec(
        space=ActionSpace.unit((k, k)),
        utilities=utilities,
        noise_std=np.zeros(2) if noise_std is None else np.asarray(noise_std, dtype=float),
        name=name or f"saddle[{k}d]",
        known_ne=shift,
        meta={"kind": "saddle", "shift": shift, "split": k},
    )


def analytic_regret_saddle(game: GameSpec, x: Profile) -> float:
    """Closed-form true regret of a saddle game at ``x``.

    Each player's best deviation gain is the squared distance of their own
    block from the shift; regret is the max over players.
    """
    if game.meta.get("kind") != "saddle":
        raise ValueError(f"game {game.name!r} is not a saddle game")
    x = np.asarray(x, dtype=float)
    if not game.space.contains(x):
        raise ValueError("profile lies outside the action space")
    shift = game.meta["shift"]
    split = game.meta["split"]
    g1 = float(np.sum((x[:split] - shift[:split]) ** 2))
    g2 = float(np.sum((x[split:] - shift[split:]) ** 2))
    return max(g1, g2)


# --- problem registry ---------------------------------------------------------

# Benchmark defaults: evaluation budgets and per-player oracle noise used by
# the experiment harness when the caller does not override them.
DEFAULT_FES = {"saddle1": 40, "saddle2": 40, "saddle3": 120, "mop": 40}
DEFAULT_SEED_COUNTS = {"saddle1": 25, "saddle2": 25, "saddle3": 8, "mop": 25}
_SADDLE_NOISE = (0.025, 0.025)
_MOP_NOISE = (7.5, 3.0)

PROBLEM_NAMES = ("saddle1", "saddle2", "saddle3", "mop", "custom")


def make_problem(name: str, noise: bool = False,
                 noise_std: Sequence[float] | None = None,
                 shift: Sequence[float] | None = None,
                 dims_per_player: int | None = None) -> GameSpec:
    """Build a registered benchmark game.

    ``saddle1`` is centred at (0.5, 0.5), ``saddle2`` at (0.3, 0.3),
    ``saddle3`` is the 4-D variant centred at (0.5,)*4.  ``mop`` is a
    two-player pricing game known from external data only: its action box,
    equilibrium and noise levels are registered but no payoff functions,
    so the oracle refuses to run it.  ``custom`` builds a saddle game from
    ``shift`` / ``dims_per_player``.

    With ``noise`` set, per-player noise stds default to 0.025 for the
    saddle problems and (7.5, 3.0) for ``mop``; ``noise_std`` overrides.
    """
    if name == "custom":
        if shift is None:
            raise ValueError("custom problem needs an explicit shift")
        k = dims_per_player or len(shift) // 2
        std = _resolve_noise(noise, noise_std, _SADDLE_NOISE)
        return make_saddle(shift, k, noise_std=std, name="custom")
    if shift is not None or dims_per_player is not None:
        raise ValueError("shift/dims_per_player only apply to the custom problem")
    if name == "saddle1":
        return make_saddle([0.5, 0.5], 1, _resolve_noise(noise, noise_std, _SADDLE_NOISE),
                           name="saddle1")
    if name == "saddle2":
        return make_saddle([0.3, 0.3], 1, _resolve_noise(noise, noise_std, _SADDLE_NOISE),
                           name="saddle2")
    if name == "saddle3":
        return make_saddle([0.5] * 4, 2, _resolve_noise(noise, noise_std, _SADDLE_NOISE),
                           name="saddle3")
    if name == "mop":
        return GameSpec(
            space=ActionSpace((1, 1), np.array([[0.0, 1.0], [0.0, 1.0]])),
            utilities=None,
            noise_std=_resolve_noise(noise, noise_std, _MOP_NOISE),
            name="mop",
            known_ne=np.array([0.08093, 1.0]),
            meta={"kind": "external"},
        )
    raise ValueError(f"unknown problem {name!r}; choose from {PROBLEM_NAMES}")


def _resolve_noise(noise: bool, noise_std, default) -> np.ndarray:
    if noise_std is not None:
        return np.asarray(noise_std, dtype=float)
    return np.asarray(default if noise else (0.0, 0.0), dtype=float)
