"""Sparse multivariate polynomials over nonnegative box domains.

A monomial is a sorted tuple of variable indices with repetition, so
``(0, 0, 2)`` is ``x0**2 * x2`` and ``()`` is the constant term.
"""

from __future__ import annotations

from typing import Iterable, Mapping

import numpy as np

Monomial = tuple[int, ...]

_DROP_RTOL = 1e-14


class Polynomial:
    """Immutable real polynomial in ``n_vars`` variables."""

    __slots__ = ("n_vars", "terms", "_exps", "_coefs")

    def __init__(self, n_vars: int, terms: Mapping[Monomial, float] | Iterable[tuple[Monomial, float]] = ()):
        items = terms.items() if isinstance(terms, Mapping) else terms
        acc: dict[Monomial, float] = {}
        for mono, coef in items:
            key = tuple(sorted(int(v) for v in mono))
            if key and (key[0] < 0 or key[-1] >= n_vars):
                raise ValueError(f"monomial {mono} references a variable outside 0..{n_vars - 1}")
            acc[key] = acc.get(key, 0.0) + float(coef)
        scale = max((abs(c) for c in acc.values()), default=0.0)
        cutoff = _DROP_RTOL * max(scale, 1.0)
        self.n_vars = n_vars
        self.terms: dict[Monomial, float] = {
            m: c for m, c in sorted(acc.items(), key=lambda mc: (len(mc[0]), mc[0])) if abs(c) > cutoff
        }
        exps = np.zeros((len(self.terms), n_vars), dtype=np.int64)
        for row, mono in enumerate(self.terms):
            for v in mono:
                exps[row, v] += 1
        self._exps = exps
        self._coefs = np.fromiter(self.terms.values(), dtype=float, count=len(self.terms))

    @classmethod
    def constant(cls, n_vars: int, value: float) -> "Polynomial":
        return cls(n_vars, {(): value})

    @classmethod
    def linear(cls, coefs, const: float = 0.0) -> "Polynomial":
        coefs = np.asarray(coefs, dtype=float)
        terms = [((i,), c) for i, c in enumerate(coefs)]
        terms.append(((), const))
        return cls(len(coefs), terms)

    @property
    def degree(self) -> int:
        return max((len(m) for m in self.terms), default=0)

    def is_zero(self) -> bool:
        return not self.terms

    def __call__(self, x) -> float:
        return self.evaluate(x)

    def evaluate(self, x) -> float:
        x = np.asarray(x, dtype=float)
        if not self.terms:
            return 0.0
        return float(np.prod(x ** self._exps, axis=1) @ self._coefs)

    def evaluate_many(self, points) -> np.ndarray:
        """Evaluate at every row of ``points`` (shape ``(N, n_vars)``)."""
        points = np.asarray(points, dtype=float)
        if not self.terms:
            return np.zeros(len(points))
        return np.prod(points[:, None, :] ** self._exps[None], axis=2) @ self._coefs

    def gradient(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        grad = np.zeros(self.n_vars)
        if not self.terms:
            return grad
        for k in range(self.n_vars):
            ek = self._exps[:, k]
            mask = ek > 0
            if not mask.any():
                continue
            reduced = self._exps[mask].copy()
            reduced[:, k] -= 1
            grad[k] = np.prod(x ** reduced, axis=1) @ (self._coefs[mask] * ek[mask])
        return grad

    def interval(self, lo, hi) -> tuple[float, float]:
        """Range enclosure over the box ``[lo, hi]``; requires ``lo >= 0``."""
        if not self.terms:
            return 0.0, 0.0
        mlo = np.prod(np.asarray(lo, dtype=float) ** self._exps, axis=1)
        mhi = np.prod(np.asarray(hi, dtype=float) ** self._exps, axis=1)
        c = self._coefs
        low = np.where(c > 0, c * mlo, c * mhi).sum()
        high = np.where(c > 0, c * mhi, c * mlo).sum()
        return float(low), float(high)

    def coefficient_norm(self) -> float:
        return float(np.abs(self._coefs).sum())

    def __add__(self, other: "Polynomial | float") -> "Polynomial":
        if not isinstance(other, Polynomial):
            other = Polynomial.constant(self.n_vars, other)
        self._check_compatible(other)
        return Polynomial(self.n_vars, list(self.terms.items()) + list(other.terms.items()))

    __radd__ = __add__

    def __neg__(self) -> "Polynomial":
        return Polynomial(self.n_vars, {m: -c for m, c in self.terms.items()})

    def __sub__(self, other: "Polynomial | float") -> "Polynomial":
        if not isinstance(other, Polynomial):
            other = Polynomial.constant(self.n_vars, other)
        return self + (-other)

    def __rsub__(self, other: float) -> "Polynomial":
        return (-self) + other

    def __mul__(self, other: "Polynomial | float") -> "Polynomial":
        if not isinstance(other, Polynomial):
            return Polynomial(self.n_vars, {m: c * other for m, c in self.terms.items()})
        self._check_compatible(other)
        terms = [(m1 + m2, c1 * c2) for m1, c1 in self.terms.items() for m2, c2 in other.terms.items()]
        return Polynomial(self.n_vars, terms)

    __rmul__ = __mul__

    def _check_compatible(self, other: "Polynomial") -> None:
        if other.n_vars != self.n_vars:
            raise ValueError(f"variable count mismatch: {self.n_vars} vs {other.n_vars}")

    def __eq__(self, other) -> bool:
        return isinstance(other, Polynomial) and self.n_vars == other.n_vars and self.terms == other.terms

    def __hash__(self) -> int:
        return hash((self.n_vars, tuple(self.terms.items())))

    def __repr__(self) -> str:
        if not self.terms:
            return "Polynomial(0)"
        parts = []
        for mono, coef in self.terms.items():
            name = "*".join(f"x{v}" for v in mono) or "1"
            parts.append(f"{coef:+g}*{name}")
        return "Polynomial(" + " ".join(parts) + ")"


def variable(n_vars: int, index: int) -> Polynomial:
    return Polynomial(n_vars, {(index,): 1.0})
