"""Certified global solving of small polynomial programs on box-bounded simplices.

Lower bounds come from an LP relaxation in which every nonlinear monomial is
replaced by an auxiliary variable tied to its factors by McCormick envelopes
(recursively for degree > 2), plus reformulation-linearization cuts obtained
by multiplying each linear equality by each variable. Feasible points and
upper bounds come from projected local refinement. The search is a spatial
branch-and-bound over the variable box.
"""

from __future__ import annotations

import heapq
import time
import warnings
from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

import numpy as np
from scipy.linalg import null_space
from scipy.optimize import linprog, minimize

from .polynomial import Monomial, Polynomial

DEFAULT_FEAS_TOL = 1e-6
DEFAULT_OPT_GAP = 1e-7
DEFAULT_MAX_NODES = 1_000_000

# Width below which a box is no longer split.
MIN_WIDTH = 1e-9
# Absolute slack granted to relaxed polynomial constraints, so that LP round-off
# never prunes a box that holds an exactly feasible point.
RELAX_SLACK = 1e-9
_LP_OPTIONS = {
    "primal_feasibility_tolerance": 1e-10,
    "dual_feasibility_tolerance": 1e-10,
}


class Status(str, Enum):
    INFEASIBLE = "INFEASIBLE"
    FEASIBLE = "FEASIBLE"
    GLOBAL_OPT = "GLOBAL_OPT"


class BudgetExceeded(RuntimeError):
    """Node or time budget ran out before either certificate was reached."""


@dataclass(frozen=True, eq=False)
class PolynomialProgram:
    """Polynomial feasibility or optimization problem over a box in ``[0, 1]^d``.

    ``poly_eqs`` are constraints ``p(x) == 0`` and ``poly_ineqs`` are
    constraints ``q(x) <= 0``. ``linear_eqs`` holds ``(coefficients, rhs)``
    pairs, normally just the simplex normalization.
    """

    lower: np.ndarray
    upper: np.ndarray
    linear_eqs: tuple = ()
    poly_eqs: tuple = ()
    poly_ineqs: tuple = ()
    objective: Polynomial | None = None
    sense: str = "feasibility"

    def __post_init__(self):
        lower = np.array(self.lower, dtype=float)
        upper = np.array(self.upper, dtype=float)
        if lower.shape != upper.shape or lower.ndim != 1:
            raise ValueError("lower and upper bounds must be 1-D arrays of equal length")
        if np.any(lower > upper):
            raise ValueError("lower bound exceeds upper bound")
        if np.any(lower < 0) or np.any(upper > 1):
            raise ValueError("variable bounds must lie within [0, 1]")
        d = len(lower)
        lin = tuple((np.array(a, dtype=float), float(b)) for a, b in self.linear_eqs)
        for a, _ in lin:
            if a.shape != (d,):
                raise ValueError("linear equality has the wrong number of coefficients")
        for poly in (*self.poly_eqs, *self.poly_ineqs, *([self.objective] if self.objective else [])):
            if poly.n_vars != d:
                raise ValueError("polynomial variable count does not match the program")
        if self.sense not in ("feasibility", "minimize", "maximize"):
            raise ValueError(f"unknown sense {self.sense!r}")
        if (self.sense == "feasibility") != (self.objective is None):
            raise ValueError("an objective is required exactly when sense is minimize or maximize")
        lower.flags.writeable = False
        upper.flags.writeable = False
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)
        object.__setattr__(self, "linear_eqs", lin)
        object.__setattr__(self, "poly_eqs", tuple(self.poly_eqs))
        object.__setattr__(self, "poly_ineqs", tuple(self.poly_ineqs))

    @property
    def n_vars(self) -> int:
        return len(self.lower)

    def violation(self, x) -> float:
        """Largest violation of any bound or constraint at ``x``."""
        x = np.asarray(x, dtype=float)
        worst = max(0.0, float(np.max(self.lower - x)), float(np.max(x - self.upper)))
        for a, b in self.linear_eqs:
            worst = max(worst, abs(float(a @ x) - b))
        for p in self.poly_eqs:
            worst = max(worst, abs(p.evaluate(x)))
        for q in self.poly_ineqs:
            worst = max(worst, q.evaluate(x))
        return worst


@dataclass
class SolveOutcome:
    status: Status
    point: np.ndarray | None = None
    value: float | None = None
    gap: float | None = None
    nodes: int = 0

    @property
    def feasible(self) -> bool:
        return self.status is not Status.INFEASIBLE


# --------------------------------------------------------------------------
# LP relaxation


@dataclass
class _LPResult:
    status: str  # "optimal", "infeasible" or "failed"
    value: float = -np.inf
    z: np.ndarray | None = None


class _Relaxation:
    """McCormick/RLT linearization of a program, re-boxed at every node."""

    def __init__(self, prog: PolynomialProgram):
        d = prog.n_vars
        self.d = d
        polys = [*prog.poly_eqs, *prog.poly_ineqs]
        if prog.objective is not None:
            polys.append(prog.objective)
        monos: set[Monomial] = set()
        for poly in polys:
            for mono in poly.terms:
                while len(mono) >= 2:
                    monos.add(mono)
                    mono = mono[:-1]
        if prog.linear_eqs:
            monos.update((i, j) for i in range(d) for j in range(i, d))
        aux = sorted(monos, key=lambda m: (len(m), m))
        index: dict[Monomial, int] = {(v,): v for v in range(d)}
        for t, mono in enumerate(aux):
            index[mono] = d + t
        self.aux = aux
        self.index = index
        self.nz = d + len(aux)
        self.factor_a = np.array([index[m[:-1]] for m in aux], dtype=np.int64)
        self.factor_b = np.array([m[-1] for m in aux], dtype=np.int64)
        self.aux_col = np.arange(d, self.nz, dtype=np.int64)
        exps = np.zeros((len(aux), d), dtype=np.int64)
        for t, mono in enumerate(aux):
            for v in mono:
                exps[t, v] += 1
        self.aux_exps = exps
        self.squares = np.array([t for t, m in enumerate(aux) if len(m) == 2 and m[0] == m[1]], dtype=np.int64)

        eq_rows, eq_rhs = [], []
        for a, b in prog.linear_eqs:
            row = np.zeros(self.nz)
            row[:d] = a
            eq_rows.append(row)
            eq_rhs.append(b)
            for k in range(d):
                row = np.zeros(self.nz)
                for j in range(d):
                    if a[j] != 0.0:
                        row[index[tuple(sorted((j, k)))]] += a[j]
                row[k] -= b
                eq_rows.append(row)
                eq_rhs.append(0.0)
        self.A_eq = np.array(eq_rows) if eq_rows else None
        self.b_eq = np.array(eq_rhs) if eq_rhs else None

        ub_rows, ub_rhs = [], []
        for p in prog.poly_eqs:
            row, const = self.linearize(p)
            slack = RELAX_SLACK * (1.0 + abs(const) + np.abs(row).sum())
            ub_rows += [row, -row]
            ub_rhs += [-const + slack, const + slack]
        for q in prog.poly_ineqs:
            row, const = self.linearize(q)
            slack = RELAX_SLACK * (1.0 + abs(const) + np.abs(row).sum())
            ub_rows.append(row)
            ub_rhs.append(-const + slack)
        self.static_ub = np.array(ub_rows).reshape(-1, self.nz)
        self.static_rhs = np.array(ub_rhs)

        if prog.objective is None:
            self.c = np.zeros(self.nz)
            self.c0 = 0.0
        else:
            sign = -1.0 if prog.sense == "maximize" else 1.0
            row, const = self.linearize(prog.objective)
            self.c = sign * row
            self.c0 = sign * const

    def linearize(self, poly: Polynomial) -> tuple[np.ndarray, float]:
        row = np.zeros(self.nz)
        const = 0.0
        for mono, coef in poly.terms.items():
            if mono:
                row[self.index[mono]] += coef
            else:
                const += coef
        return row, const

    def bounds(self, lo: np.ndarray, hi: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        zlo = np.concatenate([lo, np.prod(lo ** self.aux_exps, axis=1)])
        zhi = np.concatenate([hi, np.prod(hi ** self.aux_exps, axis=1)])
        return zlo, zhi

    def envelope_rows(self, zlo: np.ndarray, zhi: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        m = len(self.aux)
        a, b, w = self.factor_a, self.factor_b, self.aux_col
        la, ua, lb, ub = zlo[a], zhi[a], zlo[b], zhi[b]
        n_sq = len(self.squares)
        rows = np.zeros((4 * m + n_sq, self.nz))
        rhs = np.empty(4 * m + n_sq)
        r = np.arange(m)
        # w >= la*x_b + lb*z_a - la*lb
        np.add.at(rows, (r, w), -1.0)
        np.add.at(rows, (r, a), lb)
        np.add.at(rows, (r, b), la)
        rhs[:m] = la * lb
        # w >= ua*x_b + ub*z_a - ua*ub
        r2 = r + m
        np.add.at(rows, (r2, w), -1.0)
        np.add.at(rows, (r2, a), ub)
        np.add.at(rows, (r2, b), ua)
        rhs[m:2 * m] = ua * ub
        # w <= ua*x_b + lb*z_a - ua*lb
        r3 = r + 2 * m
        np.add.at(rows, (r3, w), 1.0)
        np.add.at(rows, (r3, a), -lb)
        np.add.at(rows, (r3, b), -ua)
        rhs[2 * m:3 * m] = -ua * lb
        # w <= la*x_b + ub*z_a - la*ub
        r4 = r + 3 * m
        np.add.at(rows, (r4, w), 1.0)
        np.add.at(rows, (r4, a), -ub)
        np.add.at(rows, (r4, b), -la)
        rhs[3 * m:4 * m] = -la * ub
        if n_sq:
            # tangent of x^2 at the box midpoint
            t = self.squares
            mid = 0.5 * (zlo[b[t]] + zhi[b[t]])
            r5 = 4 * m + np.arange(n_sq)
            rows[r5, w[t]] = -1.0
            rows[r5, b[t]] = 2.0 * mid
            rhs[4 * m:] = mid * mid
        return rows, rhs

    def solve(self, lo: np.ndarray, hi: np.ndarray) -> _LPResult:
        zlo, zhi = self.bounds(lo, hi)
        env, env_rhs = self.envelope_rows(zlo, zhi)
        A_ub = np.vstack([self.static_ub, env])
        b_ub = np.concatenate([self.static_rhs, env_rhs])
        try:
            res = linprog(
                self.c,
                A_ub=A_ub,
                b_ub=b_ub,
                A_eq=self.A_eq,
                b_eq=self.b_eq,
                bounds=np.column_stack([zlo, zhi]),
                method="highs",
                options=_LP_OPTIONS,
            )
        except ValueError:
            return _LPResult("failed")
        if res.status == 2:
            return _LPResult("infeasible")
        if res.status != 0 or res.x is None:
            return _LPResult("failed")
        return _LPResult("optimal", float(res.fun) + self.c0, res.x)

    def branch_variable(self, z: np.ndarray | None, lo: np.ndarray, hi: np.ndarray) -> int:
        """Variable with the largest relaxation error at ``z``; widest as fallback."""
        width = hi - lo
        splittable = width > MIN_WIDTH
        if z is not None and len(self.aux):
            x = np.clip(z[: self.d], lo, hi)
            err = np.abs(z[self.aux_col] - np.prod(x ** self.aux_exps, axis=1))
            score = (self.aux_exps > 0).T.astype(float) @ err
            score = np.where(splittable, score, -1.0)
            k = int(np.argmax(score))
            if score[k] > 1e-12:
                return k
        return int(np.argmax(np.where(splittable, width, -1.0)))


# --------------------------------------------------------------------------
# Local refinement


class _LocalRefiner:
    def __init__(self, prog: PolynomialProgram):
        self.prog = prog
        d = prog.n_vars
        if prog.linear_eqs:
            self.A_lin = np.array([a for a, _ in prog.linear_eqs])
            self.b_lin = np.array([b for _, b in prog.linear_eqs])
            self.basis = null_space(self.A_lin)
        else:
            self.A_lin = np.zeros((0, d))
            self.b_lin = np.zeros(0)
            self.basis = np.eye(d)

    def project(self, x: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
        """Euclidean projection onto ``{lo <= x <= hi, A_lin x = b_lin}``."""
        if len(self.b_lin) == 0:
            return np.clip(x, lo, hi)
        if len(self.b_lin) == 1:
            return _project_box_hyperplane(x, self.A_lin[0], self.b_lin[0], lo, hi)
        return _dykstra(x, self.A_lin, self.b_lin, lo, hi)

    def _residual(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        prog = self.prog
        r, rows = [], []
        for p in prog.poly_eqs:
            r.append(p.evaluate(x))
            rows.append(p.gradient(x))
        for q in prog.poly_ineqs:
            v = q.evaluate(x)
            if v > 0:
                r.append(v)
                rows.append(q.gradient(x))
            else:
                r.append(0.0)
                rows.append(np.zeros(prog.n_vars))
        if not r:
            return np.zeros(0), np.zeros((0, prog.n_vars))
        return np.array(r), np.array(rows)

    def feasible_point(self, x0: np.ndarray, lo: np.ndarray, hi: np.ndarray, iters: int = 60) -> np.ndarray:
        """Projected Levenberg-Marquardt on the constraint residuals."""
        x = self.project(x0, lo, hi)
        r, J = self._residual(x)
        cost = float(r @ r)
        lam = 1e-4
        N = self.basis
        for _ in range(iters):
            if cost < 1e-30 or N.shape[1] == 0:
                break
            JN = J @ N
            H = JN.T @ JN
            g = JN.T @ r
            improved = False
            while lam < 1e12:
                step = np.linalg.solve(H + lam * (np.eye(len(H)) + np.diag(np.diag(H))), -g)
                x_new = self.project(x + N @ step, lo, hi)
                r_new, J_new = self._residual(x_new)
                cost_new = float(r_new @ r_new)
                if cost_new < cost:
                    x, r, J, cost = x_new, r_new, J_new, cost_new
                    lam = max(lam * 0.2, 1e-12)
                    improved = True
                    break
                lam *= 8.0
            if not improved:
                break
        return x

    def minimize(self, x0: np.ndarray, sign: float) -> np.ndarray | None:
        """SLSQP from ``x0`` on ``sign * objective`` with all constraints."""
        prog = self.prog
        obj = prog.objective
        cons = []
        if len(self.b_lin):
            A, b = self.A_lin, self.b_lin
            cons.append({"type": "eq", "fun": lambda x: A @ x - b, "jac": lambda x: A})
        for p in prog.poly_eqs:
            cons.append({"type": "eq", "fun": p.evaluate, "jac": p.gradient})
        for q in prog.poly_ineqs:
            cons.append({"type": "ineq", "fun": lambda x, q=q: -q.evaluate(x), "jac": lambda x, q=q: -q.gradient(x)})
        x0 = self.project(x0, prog.lower, prog.upper)
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", RuntimeWarning)
                res = minimize(
                    lambda x: sign * obj.evaluate(x),
                    x0,
                    jac=lambda x: sign * obj.gradient(x),
                    bounds=list(zip(prog.lower, prog.upper)),
                    constraints=cons,
                    method="SLSQP",
                    options={"maxiter": 200, "ftol": 1e-14},
                )
        except (ValueError, np.linalg.LinAlgError):
            return None
        x = np.clip(res.x, prog.lower, prog.upper)
        if not np.all(np.isfinite(x)):
            return None
        if prog.poly_eqs or prog.violation(x) > 0:
            x = self.feasible_point(x, prog.lower, prog.upper, iters=20)
        return x


def _project_box_hyperplane(x, a, b, lo, hi) -> np.ndarray:
    def total(tau):
        return a @ np.clip(x - tau * a, lo, hi)

    t_lo, t_hi = -1.0, 1.0
    for _ in range(200):
        if total(t_lo) >= b:
            break
        t_lo *= 2.0
    for _ in range(200):
        if total(t_hi) <= b:
            break
        t_hi *= 2.0
    for _ in range(100):
        mid = 0.5 * (t_lo + t_hi)
        if total(mid) > b:
            t_lo = mid
        else:
            t_hi = mid
        if t_hi - t_lo < 1e-16:
            break
    y = np.clip(x - 0.5 * (t_lo + t_hi) * a, lo, hi)
    # distribute the leftover along free coordinates so the equality is tight
    free = (y > lo) & (y < hi) & (a != 0)
    if free.any():
        resid = b - a @ y
        y[free] += resid * a[free] / (a[free] @ a[free])
        y = np.clip(y, lo, hi)
    return y


def _dykstra(x, A, b, lo, hi, iters: int = 500) -> np.ndarray:
    pinv = np.linalg.pinv(A)
    y = x.copy()
    p = np.zeros_like(x)
    q = np.zeros_like(x)
    for _ in range(iters):
        u = np.clip(y + p, lo, hi)
        p = y + p - u
        v = u + q
        y_new = v - pinv @ (A @ v - b)
        q = u + q - y_new
        if np.max(np.abs(y_new - y)) < 1e-15:
            y = y_new
            break
        y = y_new
    return y


# --------------------------------------------------------------------------
# Branch and bound


def _interval_infeasible(prog: PolynomialProgram, lo: np.ndarray, hi: np.ndarray) -> bool:
    for a, b in prog.linear_eqs:
        amin = np.where(a > 0, a * lo, a * hi).sum()
        amax = np.where(a > 0, a * hi, a * lo).sum()
        if amin > b + RELAX_SLACK or amax < b - RELAX_SLACK:
            return True
    for p in prog.poly_eqs:
        low, high = p.interval(lo, hi)
        if low > RELAX_SLACK or high < -RELAX_SLACK:
            return True
    for q in prog.poly_ineqs:
        low, _ = q.interval(lo, hi)
        if low > RELAX_SLACK:
            return True
    return False


def _split(lo: np.ndarray, hi: np.ndarray, k: int):
    mid = 0.5 * (lo[k] + hi[k])
    hi_left = hi.copy()
    hi_left[k] = mid
    lo_right = lo.copy()
    lo_right[k] = mid
    return (lo, hi_left), (lo_right, hi)


@dataclass
class _Budget:
    max_nodes: int
    time_limit: float | None
    start: float = field(default_factory=time.perf_counter)
    nodes: int = 0

    def tick(self) -> None:
        self.nodes += 1
        if self.nodes > self.max_nodes:
            raise BudgetExceeded(f"node budget of {self.max_nodes} exhausted")
        if self.time_limit is not None and time.perf_counter() - self.start > self.time_limit:
            raise BudgetExceeded(f"time limit of {self.time_limit}s exhausted")


def solve_feasibility(
    program: PolynomialProgram,
    feas_tol: float = DEFAULT_FEAS_TOL,
    *,
    max_nodes: int = DEFAULT_MAX_NODES,
    time_limit: float | None = None,
) -> SolveOutcome:
    """Find a point violating no constraint by more than ``feas_tol``, or certify none exists.

    ``INFEASIBLE`` is only returned once every box has been excluded by the
    relaxation, so an exactly feasible point is never missed.
    """
    if program.objective is not None:
        raise ValueError("solve_feasibility expects a program without an objective")
    relax = _Relaxation(program)
    local = _LocalRefiner(program)
    budget = _Budget(max_nodes, time_limit)
    stack = [(program.lower.copy(), program.upper.copy())]
    while stack:
        lo, hi = stack.pop()
        budget.tick()
        if _interval_infeasible(program, lo, hi):
            continue
        lp = relax.solve(lo, hi)
        if lp.status == "infeasible":
            continue
        z = lp.z if lp.status == "optimal" else None
        start = z[: program.n_vars] if z is not None else 0.5 * (lo + hi)
        x = local.feasible_point(start, lo, hi)
        if program.violation(x) <= feas_tol:
            return SolveOutcome(Status.FEASIBLE, x, nodes=budget.nodes)
        if np.max(hi - lo) <= MIN_WIDTH:
            continue
        k = relax.branch_variable(z, lo, hi)
        left, right = _split(lo, hi, k)
        stack.append(right)
        stack.append(left)
    return SolveOutcome(Status.INFEASIBLE, nodes=budget.nodes)


def _start_points(program: PolynomialProgram, local: _LocalRefiner, extra: Sequence[np.ndarray], n_random: int):
    lo, hi = program.lower, program.upper
    pts = [np.asarray(p, dtype=float) for p in extra]
    pts.append(0.5 * (lo + hi))
    rng = np.random.default_rng(0)
    for _ in range(n_random):
        pts.append(lo + rng.random(len(lo)) * (hi - lo))
    return [local.project(p, lo, hi) for p in pts]


def optimize_global(
    program: PolynomialProgram,
    feas_tol: float = DEFAULT_FEAS_TOL,
    opt_gap: float = DEFAULT_OPT_GAP,
    *,
    max_nodes: int = DEFAULT_MAX_NODES,
    time_limit: float | None = None,
    starts: Sequence[np.ndarray] = (),
    n_random_starts: int = 4,
) -> SolveOutcome:
    """Globally optimize a program with a degree <= 2 objective.

    Returns ``GLOBAL_OPT`` with ``value`` the objective (in the program's own
    sense) at a point violating nothing by more than ``feas_tol`` and ``gap``
    a certified bound on its distance to the true optimum.
    """
    if program.objective is None:
        raise ValueError("optimize_global needs an objective")
    if program.objective.degree > 2:
        raise ValueError("objective degree must not exceed 2")
    sign = -1.0 if program.sense == "maximize" else 1.0
    obj = program.objective
    relax = _Relaxation(program)
    local = _LocalRefiner(program)
    budget = _Budget(max_nodes, time_limit)

    best_x: np.ndarray | None = None
    best = np.inf

    def offer(x: np.ndarray | None) -> None:
        nonlocal best_x, best
        if x is None or program.violation(x) > feas_tol:
            return
        val = sign * obj.evaluate(x)
        if val < best:
            best, best_x = val, x

    lo0, hi0 = program.lower.copy(), program.upper.copy()
    budget.tick()
    if _interval_infeasible(program, lo0, hi0):
        return SolveOutcome(Status.INFEASIBLE, nodes=budget.nodes)
    root = relax.solve(lo0, hi0)
    if root.status == "infeasible":
        return SolveOutcome(Status.INFEASIBLE, nodes=budget.nodes)
    extra = [] if root.z is None else [root.z[: program.n_vars]]
    for s in _start_points(program, local, [*starts, *extra], n_random_starts):
        offer(local.minimize(s, sign))
    root_lb = root.value if root.status == "optimal" else -np.inf

    counter = 0
    heap = [(root_lb, counter, lo0, hi0, root.z)]
    closed_lb = np.inf
    while heap:
        lb, _, lo, hi, z = heapq.heappop(heap)
        if lb >= best - opt_gap:
            closed_lb = min(closed_lb, lb)
            break
        if np.max(hi - lo) <= MIN_WIDTH:
            offer(local.project(0.5 * (lo + hi), program.lower, program.upper))
            closed_lb = min(closed_lb, lb)
            continue
        k = relax.branch_variable(z, lo, hi)
        for clo, chi in _split(lo, hi, k):
            budget.tick()
            if _interval_infeasible(program, clo, chi):
                continue
            lp = relax.solve(clo, chi)
            if lp.status == "infeasible":
                continue
            child_lb = max(lb, lp.value) if lp.status == "optimal" else lb
            cz = lp.z if lp.status == "optimal" else None
            if cz is not None:
                xc = cz[: program.n_vars]
                if program.violation(xc) <= feas_tol:
                    offer(xc)
                elif sign * obj.evaluate(xc) < best - opt_gap:
                    offer(local.minimize(xc, sign))
            if child_lb < best - opt_gap:
                counter += 1
                heapq.heappush(heap, (child_lb, counter, clo, chi, cz))
            else:
                closed_lb = min(closed_lb, child_lb)
    if best_x is None:
        if heap:
            raise BudgetExceeded("search ended without a feasible point or an infeasibility proof")
        return SolveOutcome(Status.INFEASIBLE, nodes=budget.nodes)
    frontier = min([closed_lb] + [h[0] for h in heap])
    gap = max(0.0, best - frontier) if np.isfinite(frontier) else 0.0
    if gap > opt_gap:
        raise BudgetExceeded(f"could not close the optimality gap (gap {gap:.3g})")
    return SolveOutcome(Status.GLOBAL_OPT, best_x, obj.evaluate(best_x), gap, nodes=budget.nodes)
