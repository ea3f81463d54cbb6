"""Symmetric n-player games: payoff tensors, strategies and multilinear payoffs."""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

SYMMETRY_TOL = 1e-12
SIMPLEX_TOL = 1e-9


class GameError(ValueError):
    """Base class for invalid game input."""


class ShapeMismatch(GameError):
    pass


class AsymmetricTensor(GameError):
    def __init__(self, index, permuted_index, diff):
        self.index = tuple(index)
        self.permuted_index = tuple(permuted_index)
        super().__init__(
            f"payoff tensor is not symmetric in opponent slots: A{list(self.index)} and "
            f"A{list(self.permuted_index)} differ by {diff:.3g}"
        )


class NonFiniteEntry(GameError):
    pass


class DimensionMismatch(GameError):
    pass


class IndexOutOfRange(GameError):
    pass


class NonPositiveScale(GameError):
    pass


class ParseError(GameError):
    pass


@dataclass(frozen=True, eq=False)
class SymmetricGame:
    """Symmetric game given by player 1's payoff tensor.

    ``A[i, j1, ..., j_{n-1}]`` is the payoff for playing ``i`` against
    opponents playing ``j1 ... j_{n-1}``; it is invariant under any
    reordering of the opponent indices. Build instances with
    :func:`validate_game` rather than directly.
    """

    n: int
    K: int
    A: np.ndarray
    name: str | None = None

    def __eq__(self, other):
        return (
            isinstance(other, SymmetricGame)
            and self.n == other.n
            and self.K == other.K
            and np.array_equal(self.A, other.A)
        )

    def __hash__(self):
        return hash((self.n, self.K, self.A.tobytes()))

    def __repr__(self):
        label = f" {self.name!r}" if self.name else ""
        return f"SymmetricGame{label}(n={self.n}, K={self.K})"


@dataclass(frozen=True, eq=False)
class MixedStrategy:
    """Probability vector over the K actions."""

    probs: np.ndarray

    def __post_init__(self):
        p = np.array(self.probs, dtype=float)
        if p.ndim != 1 or len(p) == 0:
            raise DimensionMismatch("a mixed strategy must be a nonempty 1-D vector")
        if not np.all(np.isfinite(p)) or np.any(p < 0):
            raise GameError(f"probabilities must be finite and nonnegative, got {p}")
        if abs(p.sum() - 1.0) > SIMPLEX_TOL:
            raise GameError(f"probabilities sum to {p.sum():.12g}, not 1")
        p.flags.writeable = False
        object.__setattr__(self, "probs", p)

    @classmethod
    def pure(cls, K: int, action: int) -> "MixedStrategy":
        if not 0 <= action < K:
            raise IndexOutOfRange(f"action {action} outside 0..{K - 1}")
        p = np.zeros(K)
        p[action] = 1.0
        return cls(p)

    @classmethod
    def uniform(cls, K: int) -> "MixedStrategy":
        return cls(np.full(K, 1.0 / K))

    @property
    def K(self) -> int:
        return len(self.probs)

    @property
    def support(self) -> "Support":
        return Support(tuple(int(i) for i in np.flatnonzero(self.probs > 0)))

    @property
    def is_pure(self) -> bool:
        return self.support.size == 1

    def __eq__(self, other):
        return isinstance(other, MixedStrategy) and np.array_equal(self.probs, other.probs)

    def __hash__(self):
        return hash(self.probs.tobytes())

    def __repr__(self):
        return "MixedStrategy(" + ", ".join(f"{v:.6g}" for v in self.probs) + ")"


@dataclass(frozen=True, order=True)
class Support:
    """Nonempty, strictly increasing set of action indices."""

    actions: tuple[int, ...]

    def __post_init__(self):
        actions = tuple(int(a) for a in self.actions)
        if not actions:
            raise GameError("a support must be nonempty")
        if any(b <= a for a, b in zip(actions, actions[1:])) or actions[0] < 0:
            raise GameError(f"support indices must be strictly increasing and nonnegative: {actions}")
        object.__setattr__(self, "actions", actions)

    @property
    def size(self) -> int:
        return len(self.actions)

    @property
    def reference(self) -> int:
        return self.actions[0]

    def __iter__(self):
        return iter(self.actions)

    def __len__(self):
        return len(self.actions)

    def __contains__(self, item):
        return item in self.actions

    def sort_key(self):
        return (len(self.actions), self.actions)

    def __str__(self):
        return "{" + ",".join(map(str, self.actions)) + "}"


@dataclass(frozen=True)
class SolverConfig:
    """Numerical tolerances for the ESS pipeline.

    ``eps_s`` is the minimum mass on support actions, ``eps_p`` the payoff
    comparison tolerance, ``delta`` the radius of the ball around a candidate
    inside which mutants are ignored, ``eps_dist`` the squared-distance
    threshold for declaring a second equilibrium on a support.
    """

    eps_s: float = 1e-4
    eps_p: float = 1e-5
    delta: float = 1e-2
    eps_dist: float = 1e-8
    feas_tol: float = 1e-6
    opt_gap: float = 1e-7
    max_nodes: int = 1_000_000

    def __post_init__(self):
        for name in ("eps_s", "eps_p", "delta", "eps_dist", "feas_tol", "opt_gap"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be strictly positive")
        if not self.feas_tol < self.eps_p < self.delta**2:
            raise ValueError("tolerances must satisfy feas_tol < eps_p < delta**2")
        if not self.opt_gap < self.eps_p:
            raise ValueError("opt_gap must be smaller than eps_p")
        if self.max_nodes < 1:
            raise ValueError("max_nodes must be positive")


# ---------------------------------------------------------------------------


def _symmetry_violation(A: np.ndarray, tol: float):
    n = A.ndim
    for slot in range(1, n - 1):
        axes = list(range(n))
        axes[slot], axes[slot + 1] = axes[slot + 1], axes[slot]
        swapped = A.transpose(axes)
        diff = np.abs(A - swapped)
        if np.any(diff > tol):
            idx = tuple(int(v) for v in np.argwhere(diff > tol)[0])
            other = list(idx)
            other[slot], other[slot + 1] = other[slot + 1], other[slot]
            return idx, tuple(other), float(diff[idx])
    return None


def validate_game(n: int, K: int, raw_tensor, name: str | None = None) -> SymmetricGame:
    """Check shape, finiteness and opponent symmetry, and freeze the tensor."""
    if n < 2 or K < 1:
        raise ShapeMismatch(f"need n >= 2 and K >= 1, got n={n}, K={K}")
    try:
        A = np.array(raw_tensor, dtype=float, order="C")
    except (TypeError, ValueError) as exc:
        raise ShapeMismatch(f"tensor is not a regular numeric array: {exc}") from None
    if A.size != K**n:
        raise ShapeMismatch(f"expected {K}^{n} = {K**n} entries, got {A.size}")
    A = A.reshape((K,) * n)
    if not np.all(np.isfinite(A)):
        bad = tuple(int(v) for v in np.argwhere(~np.isfinite(A))[0])
        raise NonFiniteEntry(f"non-finite payoff at index {list(bad)}")
    violation = _symmetry_violation(A, SYMMETRY_TOL)
    if violation is not None:
        raise AsymmetricTensor(*violation)
    A.flags.writeable = False
    return SymmetricGame(n, K, A, name)


def _as_probs(game: SymmetricGame, strategy) -> np.ndarray:
    p = strategy.probs if isinstance(strategy, MixedStrategy) else np.asarray(strategy, dtype=float)
    if p.shape != (game.K,):
        raise DimensionMismatch(f"strategy of length {p.shape} does not match K={game.K}")
    return p


def expected_utility(game: SymmetricGame, profile) -> float:
    """Player 1's multilinear payoff ``U(x1, ..., xn)``."""
    if len(profile) != game.n:
        raise DimensionMismatch(f"profile has {len(profile)} strategies, game has {game.n} players")
    T = game.A
    for strategy in reversed(profile):
        T = T @ _as_probs(game, strategy)
    return float(T)


def response_payoffs(game: SymmetricGame, p) -> np.ndarray:
    """Vector of pure-action payoffs ``g_i(p)`` when all opponents play ``p``."""
    p = _as_probs(game, p)
    T = game.A
    for _ in range(game.n - 1):
        T = T @ p
    return T


def pure_response_payoff(game: SymmetricGame, i: int, p) -> float:
    if not 0 <= i < game.K:
        raise IndexOutOfRange(f"action {i} outside 0..{game.K - 1}")
    return float(response_payoffs(game, p)[i])


def best_response_set(game: SymmetricGame, x, eps_p: float) -> Support:
    """Actions whose payoff against ``x`` is within ``eps_p`` of ``U(x, ..., x)``."""
    p = _as_probs(game, x)
    g = response_payoffs(game, p)
    v = float(g @ p)
    return Support(tuple(int(i) for i in np.flatnonzero(g >= v - eps_p)))


def affine_transform(game: SymmetricGame, a: float, b: float) -> SymmetricGame:
    if not a > 0:
        raise NonPositiveScale(f"scale must be positive, got {a}")
    return validate_game(game.n, game.K, a * game.A + b, game.name)


def permute_actions(game: SymmetricGame, perm) -> SymmetricGame:
    """Relabel action ``i`` as ``perm[i]`` in every slot."""
    perm = np.asarray(perm)
    inv = np.argsort(perm)
    A = game.A[np.ix_(*([inv] * game.n))]
    return validate_game(game.n, game.K, A, game.name)


def _multiset_classes(n: int, K: int) -> np.ndarray:
    """Class id of every opponent index tuple; tuples sharing a multiset share an id."""
    classes = {c: t for t, c in enumerate(itertools.combinations_with_replacement(range(K), n - 1))}
    ids = np.empty((K,) * (n - 1), dtype=np.int64)
    for idx in itertools.product(range(K), repeat=n - 1):
        ids[idx] = classes[tuple(sorted(idx))]
    return ids, len(classes)


def random_game(n: int, K: int, seed) -> SymmetricGame:
    """Uniform ``[-1, 1]`` payoffs drawn once per opponent multiset, so symmetry is exact."""
    if n < 2 or K < 1:
        raise ShapeMismatch(f"need n >= 2 and K >= 1, got n={n}, K={K}")
    rng = np.random.default_rng(seed)
    ids, count = _multiset_classes(n, K)
    values = rng.uniform(-1.0, 1.0, size=(K, count))
    A = values[:, ids]
    return validate_game(n, K, A, name=f"random(n={n},K={K},seed={seed})")


def derive_seed(master_seed: int, index: int) -> int:
    """Per-game seed for sweeps; depends only on the master seed and game index."""
    return int(np.random.SeedSequence([master_seed, index]).generate_state(1, dtype=np.uint32)[0])


# ---------------------------------------------------------------------------
# file format: JSON object with n, k, tensor (nested lists) and optional name


def game_to_dict(game: SymmetricGame) -> dict:
    out = {"n": game.n, "k": game.K, "tensor": game.A.tolist()}
    if game.name:
        out["name"] = game.name
    return out


def game_from_dict(doc) -> SymmetricGame:
    if not isinstance(doc, dict):
        raise ParseError("game document must be a JSON object")
    try:
        n, K, tensor = doc["n"], doc["k"], doc["tensor"]
    except KeyError as exc:
        raise ParseError(f"missing field {exc.args[0]!r}") from None
    if not isinstance(n, int) or not isinstance(K, int) or n < 2 or K < 1:
        raise ParseError(f"invalid n={n!r} or k={K!r}")
    if not _regular(tensor, [K] * n):
        raise ParseError(f"tensor must be nested lists of shape {[K] * n}")
    try:
        return validate_game(n, K, tensor, doc.get("name"))
    except (ShapeMismatch, NonFiniteEntry) as exc:
        raise ParseError(str(exc)) from None


def _regular(node, shape) -> bool:
    if not shape:
        return isinstance(node, (int, float)) and not isinstance(node, bool)
    return isinstance(node, list) and len(node) == shape[0] and all(_regular(c, shape[1:]) for c in node)


def load_game(path) -> SymmetricGame:
    text = Path(path).read_text()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: {exc}") from None
    game = game_from_dict(doc)
    if game.name is None:
        game = SymmetricGame(game.n, game.K, game.A, Path(path).name)
    return game


def save_game(game: SymmetricGame, path) -> None:
    Path(path).write_text(json.dumps(game_to_dict(game), indent=1) + "\n")
