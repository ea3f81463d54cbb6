"""Brute-force reference checks for the ESS pipeline.

Everything here uses exhaustive grids or closed forms and deliberately
shares no code with the global solver, so agreement between the two is
meaningful evidence. Nothing in the main pipeline calls this module.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .game import MixedStrategy, Support, SymmetricGame

CONTINUUM = "CONTINUUM"


class EmptyGrid(ValueError):
    """No grid point lies outside the excluded ball."""


@dataclass(frozen=True)
class GridSpec:
    resolution: int
    actions: Support

    def __post_init__(self):
        if self.resolution < 1:
            raise ValueError("grid resolution must be at least 1")

    def points(self, K: int) -> np.ndarray:
        """All points of the simplex over ``actions`` with coordinates in multiples of 1/r."""
        r, m = self.resolution, self.actions.size
        rows = []
        for bars in itertools.combinations(range(r + m - 1), m - 1):
            edges = (-1, *bars, r + m - 1)
            rows.append([edges[k + 1] - edges[k] - 1 for k in range(m)])
        counts = np.array(rows, dtype=float).reshape(-1, m)
        pts = np.zeros((len(counts), K))
        pts[:, list(self.actions.actions)] = counts / r
        return pts


def _slot_tensors(game: SymmetricGame, x: np.ndarray):
    """Return ``(c, Q)`` with ``U(x, y, x..) = c @ y`` and ``U(y, y, x..) = y @ Q @ y``."""
    Q = game.A
    for _ in range(game.n - 2):
        Q = np.tensordot(Q, x, axes=([Q.ndim - 1], [0]))
    c = np.tensordot(x, Q, axes=([0], [0]))
    return c, Q


def invasion_values(game: SymmetricGame, x, Y) -> np.ndarray:
    """``U(x, y, x, ...) - U(y, y, x, ...)`` for every row ``y`` of ``Y``."""
    x = np.asarray(getattr(x, "probs", x), dtype=float)
    c, Q = _slot_tensors(game, x)
    Y = np.atleast_2d(Y)
    return Y @ c - np.einsum("ni,ij,nj->n", Y, Q, Y)


def grid_invasion_search(game: SymmetricGame, x, br_set: Support, delta: float, grid) -> tuple[float, MixedStrategy]:
    """Exact minimum of the invasion margin over grid mutants at distance >= ``delta``."""
    if not isinstance(grid, GridSpec):
        grid = GridSpec(int(grid), br_set)
    x = np.asarray(getattr(x, "probs", x), dtype=float)
    Y = grid.points(game.K)
    far = np.linalg.norm(Y - x, axis=1) >= delta
    if not far.any():
        raise EmptyGrid(f"no grid point at distance >= {delta} from the candidate")
    Y = Y[far]
    F = invasion_values(game, x, Y)
    k = int(np.argmin(F))
    return float(F[k]), MixedStrategy(Y[k])


@dataclass(frozen=True)
class PureAnalysis:
    action: int
    is_sne: bool
    is_ess: bool


def _payoff(game: SymmetricGame, profile) -> float:
    T = game.A
    for v in reversed(profile):
        T = np.tensordot(T, v, axes=([T.ndim - 1], [0]))
    return float(T)


def exhaustive_pure_analysis(game: SymmetricGame, resolution: int = 50, tol: float = 1e-12) -> list[PureAnalysis]:
    """Equilibrium and stability status of every pure strategy.

    Stability is checked directly against the two-condition definition for
    all pure mutants and all simplex grid mutants at step ``1/resolution``.
    """
    K, n = game.K, game.n
    eye = np.eye(K)
    grid = GridSpec(resolution, Support(tuple(range(K)))).points(K)
    mutants = np.vstack([eye, grid])
    out = []
    for i in range(K):
        e = eye[i]
        base = _payoff(game, [e] * n)
        against = np.array([game.A[(j,) + (i,) * (n - 1)] for j in range(K)])
        is_sne = bool(np.all(against <= base + tol))
        stable = is_sne
        if stable:
            for y in mutants:
                if np.max(np.abs(y - e)) == 0:
                    continue
                first = _payoff(game, [y] + [e] * (n - 1))
                if base > first + tol:
                    continue
                if abs(base - first) <= tol:
                    lhs = _payoff(game, [e, y] + [e] * (n - 2))
                    rhs = _payoff(game, [y, y] + [e] * (n - 2))
                    if lhs > rhs + tol:
                        continue
                stable = False
                break
        out.append(PureAnalysis(i, is_sne, stable))
    return out


def two_action_sne_closed_form(
    game: SymmetricGame,
    T: Support,
    eps_s: float = 1e-4,
    margin: float = 0.0,
    coef_tol: float = 1e-12,
):
    """All equilibria on a two-action support of a 3-player game.

    With ``p = t e_a + (1 - t) e_b`` the indifference condition is a quadratic
    in ``t``. Roots in ``[eps_s, 1 - eps_s]`` are kept when every outside
    action earns at most ``g_a - margin``. Returns :data:`CONTINUUM` when the
    quadratic vanishes identically.
    """
    if game.n != 3 or T.size != 2:
        raise ValueError("closed form covers two-action supports of 3-player games only")
    a, b = T.actions

    def coefs(i):
        alpha, beta, gamma = game.A[i, a, a], game.A[i, a, b], game.A[i, b, b]
        return np.array([alpha - 2 * beta + gamma, 2 * beta - 2 * gamma, gamma])

    h = coefs(a) - coefs(b)
    if np.all(np.abs(h) <= coef_tol):
        return CONTINUUM
    if abs(h[0]) <= coef_tol:
        roots = [-h[2] / h[1]] if abs(h[1]) > coef_tol else []
    else:
        disc = h[1] ** 2 - 4 * h[0] * h[2]
        if disc < 0:
            roots = []
        else:
            sq = np.sqrt(disc)
            # numerically stable pair
            q = -0.5 * (h[1] + np.copysign(sq, h[1]))
            roots = [q / h[0]] + ([h[2] / q] if q != 0 else [])
    found = []
    for t in sorted(set(float(r) for r in roots)):
        if not eps_s <= t <= 1 - eps_s:
            continue
        p = np.zeros(game.K)
        p[a], p[b] = t, 1 - t
        g = np.array([coefs(i) @ [t * t, t, 1.0] for i in range(game.K)])
        outside = [i for i in range(game.K) if i not in T]
        if all(g[i] <= g[a] - margin for i in outside):
            found.append(MixedStrategy(p))
    return found
