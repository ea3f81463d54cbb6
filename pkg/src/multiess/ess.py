"""Evolutionarily stable strategies of symmetric n-player games.

For every support, a symmetric Nash equilibrium is sought with the global
solver; each equilibrium found is then screened (strict equilibrium
shortcut, pure mutants) and, if still undecided, certified against mixed
mutants by globally minimizing the invasion margin over the best-response
simplex outside a small ball around the candidate.
"""

from __future__ import annotations

import itertools
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .game import (
    MixedStrategy,
    SolverConfig,
    Support,
    SymmetricGame,
    best_response_set,
    expected_utility,
    response_payoffs,
)
from .polynomial import Polynomial
from .solver import (
    BudgetExceeded,
    PolynomialProgram,
    Status,
    optimize_global,
    solve_feasibility,
)

DEDUP_TOL = 1e-6


class Verdict(str, Enum):
    ESS = "ESS"
    NOT_ESS = "NOT_ESS"


class CertificatePath(str, Enum):
    STRICT_SHORTCUT = "STRICT_SHORTCUT"
    PURE_INVADED = "PURE_INVADED"
    MIXED_INVADED = "MIXED_INVADED"
    NEUTRAL = "NEUTRAL"
    MIXED_PASS = "MIXED_PASS"
    QCQP_INFEASIBLE = "QCQP_INFEASIBLE"


ESS_PATHS = (CertificatePath.STRICT_SHORTCUT, CertificatePath.MIXED_PASS)
# paths reached only after the pure-mutant screen was passed
PURE_PASS_PATHS = (
    CertificatePath.MIXED_INVADED,
    CertificatePath.NEUTRAL,
    CertificatePath.MIXED_PASS,
    CertificatePath.QCQP_INFEASIBLE,
)


@dataclass(frozen=True)
class SneResult:
    support: Support
    strategy: MixedStrategy


@dataclass(frozen=True)
class EssCertificate:
    """Outcome of the stability test for one equilibrium.

    ``invader`` is the pure mutant for ``PURE_INVADED``; ``margin`` is the
    minimized invasion margin for paths decided by the mixed-mutant program,
    and ``mutant`` the minimizing strategy.
    """

    strategy: MixedStrategy
    verdict: Verdict
    path: CertificatePath
    br_set: Support
    margin: float | None = None
    invader: int | None = None
    mutant: MixedStrategy | None = None
    support: Support | None = None

    @property
    def is_ess(self) -> bool:
        return self.verdict is Verdict.ESS

    def describe_path(self) -> str:
        if self.path is CertificatePath.PURE_INVADED:
            return f"PURE_INVADED({self.invader})"
        return self.path.value


@dataclass(frozen=True)
class DegeneracyReport:
    degenerate: bool
    witnesses: tuple[tuple[Support, float], ...] = ()


@dataclass
class EssRun:
    """Everything produced by one pass of support enumeration."""

    sne: list[SneResult] = field(default_factory=list)
    certificates: list[EssCertificate] = field(default_factory=list)
    unresolved: list[Support] = field(default_factory=list)
    total_time: float = 0.0
    time_to_first: float = 0.0
    stopped_early: bool = False

    @property
    def ess(self) -> list[EssCertificate]:
        return [c for c in self.certificates if c.is_ess]

    @property
    def complete(self) -> bool:
        return not self.unresolved

    def path_counts(self) -> dict[str, int]:
        counts = {p.value: 0 for p in CertificatePath}
        for c in self.certificates:
            counts[c.path.value] += 1
        return counts


# ---------------------------------------------------------------------------


def enumerate_supports(K: int) -> list[Support]:
    """All nonempty subsets of ``range(K)``, by size and then lexicographically."""
    if K < 1:
        raise ValueError("K must be at least 1")
    return [Support(c) for m in range(1, K + 1) for c in itertools.combinations(range(K), m)]


def response_polynomials(game: SymmetricGame, T: Support) -> list[Polynomial]:
    """``g_i`` for every action as a polynomial in the support probabilities.

    Opponent sums run over the support only; variable ``l`` is the mass on
    action ``T.actions[l]``.
    """
    idx = np.array(T.actions)
    sub = game.A
    for axis in range(1, game.n):
        sub = sub.take(idx, axis=axis)
    sub = sub.reshape(game.K, -1)
    monos = [tuple(sorted(t)) for t in itertools.product(range(T.size), repeat=game.n - 1)]
    return [Polynomial(T.size, zip(monos, sub[i])) for i in range(game.K)]


def support_program(game: SymmetricGame, T: Support, eps_s: float, objective=None, sense="feasibility"):
    """Indifference on ``T`` and no profitable deviation outside it."""
    m = T.size
    g = response_polynomials(game, T)
    ref = g[T.reference]
    eqs = [g[i] - ref for i in T.actions[1:]]
    ineqs = [g[i] - ref for i in range(game.K) if i not in T]
    return PolynomialProgram(
        lower=np.full(m, eps_s),
        upper=np.ones(m),
        linear_eqs=[(np.ones(m), 1.0)],
        poly_eqs=[p for p in eqs if not p.is_zero()],
        poly_ineqs=[q for q in ineqs if not q.is_zero()],
        objective=objective,
        sense=sense,
    )


def _extend(K: int, T: Support, p: np.ndarray) -> MixedStrategy:
    x = np.zeros(K)
    x[list(T.actions)] = p / p.sum()
    return MixedStrategy(x)


def sne_support_qcp(
    game: SymmetricGame,
    T: Support,
    eps_s: float = 1e-4,
    *,
    feas_tol: float = 1e-6,
    max_nodes: int = 1_000_000,
) -> tuple[Status, SneResult | None]:
    """Symmetric equilibrium with support ``T`` (mass >= ``eps_s`` on each action), if any.

    Raises :class:`BudgetExceeded` when the search cannot decide.
    """
    prog = support_program(game, T, eps_s)
    out = solve_feasibility(prog, feas_tol, max_nodes=max_nodes)
    if out.status is Status.INFEASIBLE:
        return Status.INFEASIBLE, None
    return Status.FEASIBLE, SneResult(T, _extend(game.K, T, out.point))


def _pair_matrix(game: SymmetricGame, x: np.ndarray) -> np.ndarray:
    """``B`` with ``U(a, b, x, ..., x) = a @ B @ b``."""
    B = game.A
    for _ in range(game.n - 2):
        B = B @ x
    return B


def invasion_margin(game: SymmetricGame, x, y) -> float:
    """``U(x, y, x, ..., x) - U(y, y, x, ..., x)``; negative means ``y`` invades."""
    rest = [x] * (game.n - 2)
    return expected_utility(game, [x, y, *rest]) - expected_utility(game, [y, y, *rest])


def ess_qcqp(
    game: SymmetricGame,
    x: MixedStrategy,
    br_set: Support,
    delta: float = 1e-2,
    *,
    feas_tol: float = 1e-6,
    opt_gap: float = 1e-7,
    max_nodes: int = 1_000_000,
) -> tuple[Status, float | None, MixedStrategy | None]:
    """Minimize the invasion margin over mutants on the ``br_set`` simplex at distance >= ``delta``.

    Returns ``(status, F*, mutant)``. ``F*`` is re-evaluated from the
    mutant's payoffs, not read off the solver.
    """
    xs = x.probs
    idx = list(br_set.actions)
    m = len(idx)
    B = _pair_matrix(game, xs)
    lin = (xs @ B)[idx]
    Bs = B[np.ix_(idx, idx)]
    terms = [((j,), lin[j]) for j in range(m)]
    terms += [((i, j), -Bs[i, j]) for i in range(m) for j in range(m)]
    objective = Polynomial(m, terms)
    xb = xs[idx]
    # delta^2 - sum (y - x)^2 <= 0
    ball = Polynomial(
        m,
        [((), delta**2 - float(xb @ xb))]
        + [((j,), 2.0 * xb[j]) for j in range(m)]
        + [((j, j), -1.0) for j in range(m)],
    )
    prog = PolynomialProgram(
        lower=np.zeros(m),
        upper=np.ones(m),
        linear_eqs=[(np.ones(m), 1.0)],
        poly_ineqs=[ball],
        objective=objective,
        sense="minimize",
    )
    out = optimize_global(prog, feas_tol, opt_gap, max_nodes=max_nodes, starts=list(np.eye(m)))
    if out.status is Status.INFEASIBLE:
        return Status.INFEASIBLE, None, None
    y = np.zeros(game.K)
    y[idx] = np.clip(out.point, 0.0, None)
    mutant = MixedStrategy(y / y.sum())
    return Status.GLOBAL_OPT, invasion_margin(game, xs, mutant.probs), mutant


def is_ess(
    game: SymmetricGame,
    x: MixedStrategy,
    eps_p: float = 1e-5,
    delta: float = 1e-2,
    *,
    feas_tol: float = 1e-6,
    opt_gap: float = 1e-7,
    max_nodes: int = 1_000_000,
    support: Support | None = None,
) -> EssCertificate:
    """Classify an equilibrium candidate as ESS or not, recording how it was decided."""
    xs = x.probs
    br = best_response_set(game, xs, eps_p)
    cert = dict(strategy=x, br_set=br, support=support)
    if br.size == 1 and x.is_pure:
        return EssCertificate(verdict=Verdict.ESS, path=CertificatePath.STRICT_SHORTCUT, **cert)

    B = _pair_matrix(game, xs)
    for i in br:
        u1 = float(xs @ B[:, i])  # U(x, e_i, x, ...)
        u2 = float(B[i, i])  # U(e_i, e_i, x, ...)
        if u1 + eps_p <= u2:
            return EssCertificate(verdict=Verdict.NOT_ESS, path=CertificatePath.PURE_INVADED, invader=i, **cert)

    status, margin, mutant = ess_qcqp(
        game, x, br, delta, feas_tol=feas_tol, opt_gap=opt_gap, max_nodes=max_nodes
    )
    if status is Status.INFEASIBLE:
        return EssCertificate(verdict=Verdict.NOT_ESS, path=CertificatePath.QCQP_INFEASIBLE, **cert)
    if margin < -eps_p:
        path, verdict = CertificatePath.MIXED_INVADED, Verdict.NOT_ESS
    elif margin > eps_p:
        path, verdict = CertificatePath.MIXED_PASS, Verdict.ESS
    else:
        path, verdict = CertificatePath.NEUTRAL, Verdict.NOT_ESS
    return EssCertificate(verdict=verdict, path=path, margin=margin, mutant=mutant, **cert)


def _solve_support(game: SymmetricGame, T: Support, config: SolverConfig):
    status, sne = sne_support_qcp(game, T, config.eps_s, feas_tol=config.feas_tol, max_nodes=config.max_nodes)
    if sne is None:
        return None, None
    cert = is_ess(
        game,
        sne.strategy,
        config.eps_p,
        config.delta,
        feas_tol=config.feas_tol,
        opt_gap=config.opt_gap,
        max_nodes=config.max_nodes,
        support=T,
    )
    return sne, cert


def _is_duplicate(x: MixedStrategy, seen: list[SneResult]) -> bool:
    return any(np.max(np.abs(x.probs - s.strategy.probs)) < DEDUP_TOL for s in seen)


def compute_all_ess(
    game: SymmetricGame,
    config: SolverConfig | None = None,
    *,
    first_only: bool = False,
    threads: int = 1,
) -> EssRun:
    """Enumerate supports, find the equilibrium on each and test it for stability.

    With ``first_only`` the enumeration halts at the first ESS. Supports on
    which the solver ran out of budget are listed in ``unresolved``; the ESS
    list is only known to be complete when that list is empty.
    """
    config = config or SolverConfig()
    supports = enumerate_supports(game.K)
    run = EssRun()
    start = time.perf_counter()
    first_at = None

    def work(T):
        try:
            return T, *_solve_support(game, T, config), time.perf_counter()
        except BudgetExceeded:
            return T, None, None, None

    if threads > 1 and not first_only:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(work, supports))
    else:
        results = []
        for T in supports:
            results.append(work(T))
            cert = results[-1][2]
            if cert is not None and cert.is_ess and first_only:
                run.stopped_early = True
                break

    results.sort(key=lambda r: r[0].sort_key())
    for T, sne, cert, stamp in results:
        if stamp is None:
            run.unresolved.append(T)
            continue
        if sne is None or _is_duplicate(sne.strategy, run.sne):
            continue
        run.sne.append(sne)
        run.certificates.append(cert)
        if cert.is_ess and (first_at is None or stamp < first_at):
            first_at = stamp
    end = time.perf_counter()
    run.total_time = end - start
    run.time_to_first = (first_at - start) if first_at is not None else run.total_time
    return run


def sne_maxdist(
    game: SymmetricGame,
    T: Support,
    x: MixedStrategy,
    eps_s: float = 1e-4,
    eps_dist: float = 1e-8,
    *,
    feas_tol: float = 1e-6,
    opt_gap: float = 1e-7,
    max_nodes: int = 1_000_000,
) -> tuple[bool, float | None]:
    """Largest squared distance from ``x`` to any equilibrium on ``T``.

    Returns ``(D* > eps_dist, D*)``; ``(False, None)`` if the program turns
    out infeasible.
    """
    xt = x.probs[list(T.actions)]
    m = T.size
    dist = Polynomial(
        m,
        [((), float(xt @ xt))] + [((j,), -2.0 * xt[j]) for j in range(m)] + [((j, j), 1.0) for j in range(m)],
    )
    prog = support_program(game, T, eps_s, objective=dist, sense="maximize")
    gap = min(opt_gap, 0.1 * eps_dist)
    out = optimize_global(prog, feas_tol, gap, max_nodes=max_nodes, starts=[xt, *np.eye(m)])
    if out.status is Status.INFEASIBLE:
        return False, None
    d_star = float(np.sum((out.point - xt) ** 2))
    return d_star > eps_dist, d_star


def degeneracy_check(
    game: SymmetricGame,
    config: SolverConfig | None = None,
    sne: list[SneResult] | None = None,
) -> DegeneracyReport:
    """Run the farthest-equilibrium test on every support that hosts an equilibrium."""
    config = config or SolverConfig()
    if sne is None:
        sne = []
        for T in enumerate_supports(game.K):
            _, found = sne_support_qcp(game, T, config.eps_s, feas_tol=config.feas_tol, max_nodes=config.max_nodes)
            if found is not None:
                sne.append(found)
    witnesses = []
    for s in sorted(sne, key=lambda s: s.support.sort_key()):
        flag, d_star = sne_maxdist(
            game,
            s.support,
            s.strategy,
            config.eps_s,
            config.eps_dist,
            feas_tol=config.feas_tol,
            opt_gap=config.opt_gap,
            max_nodes=config.max_nodes,
        )
        if flag:
            witnesses.append((s.support, d_star))
    return DegeneracyReport(bool(witnesses), tuple(witnesses))
