"""Dinkelbach iteration for minimizing a ratio ``U(x) / R(x)``.

The solver is generic: a problem supplies the numerator, the denominator and
an inner solver returning ``argmin_x U(x) - q R(x)`` over its feasible set.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable


@dataclass
class FractionalProblem:
    numerator: Callable[[Any], float]
    denominator: Callable[[Any], float]
    inner: Callable[[float], Any]
    feasible_point: Any = None

    def parametric(self, x, q: float) -> float:
        return self.numerator(x) - q * self.denominator(x)

    def ratio(self, x) -> float:
        r = self.denominator(x)
        if not r > 0:
            raise ValueError(f"denominator must be positive on the feasible set, got {r!r}")
        return self.numerator(x) / r


@dataclass(frozen=True)
class DinkelbachStep:
    q: float
    f_value: float
    x: Any


@dataclass
class DinkelbachTrace:
    iterations: list[DinkelbachStep] = field(default_factory=list)
    converged: bool = False
    tol: float = 1e-8

    @property
    def q_values(self) -> list[float]:
        return [s.q for s in self.iterations]

    def direction(self) -> int:
        """+1 if q rose, -1 if it fell, 0 if it never moved (one-step solves)."""
        qs = self.q_values
        deltas = [b - a for a, b in zip(qs, qs[1:]) if b != a]
        if not deltas:
            return 0
        return 1 if deltas[0] > 0 else -1

    def is_monotone(self) -> bool:
        qs = self.q_values
        return all(b <= a for a, b in zip(qs, qs[1:])) or all(b >= a for a, b in zip(qs, qs[1:]))

    def to_csv(self, path: str | Path) -> None:
        with Path(path).open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["iteration", "q", "F"])
            for n, s in enumerate(self.iterations):
                w.writerow([n, f"{s.q:.9g}", f"{s.f_value:.9g}"])


@dataclass(frozen=True)
class DinkelbachResult:
    q: float
    x: Any
    trace: DinkelbachTrace


class NonConvergenceError(RuntimeError):
    def __init__(self, message: str, trace: DinkelbachTrace):
        super().__init__(message)
        self.trace = trace


def solve(problem: FractionalProblem, q0: float | None = None, tol: float = 1e-8,
          max_iter: int = 100) -> DinkelbachResult:
    """Minimize ``U/R``.

    ``q0`` defaults to the ratio at ``problem.feasible_point``. Each step solves
    the parametric problem at ``q``; if ``|F(q)| <= tol`` the current point is
    returned, otherwise ``q`` is replaced by the ratio at that point.
    """
    if not tol > 0:
        raise ValueError("tol must be > 0")
    if q0 is None:
        if problem.feasible_point is None:
            raise ValueError("q0 or a feasible point is required")
        q0 = problem.ratio(problem.feasible_point)
    if not math.isfinite(q0):
        raise ValueError("q0 must be finite")

    trace = DinkelbachTrace(tol=tol)
    q = float(q0)
    for _ in range(max_iter):
        x = problem.inner(q)
        f = problem.parametric(x, q)
        trace.iterations.append(DinkelbachStep(q=q, f_value=f, x=x))
        q_next = problem.ratio(x)
        if abs(f) <= tol:
            trace.converged = True
            return DinkelbachResult(q=q_next, x=x, trace=trace)
        q = q_next
    raise NonConvergenceError(f"Dinkelbach did not reach |F| <= {tol} in {max_iter} iterations", trace)


def check_optimality(problem: FractionalProblem, q: float, tol: float = 1e-8) -> bool:
    """True iff ``min_x U - qR`` is zero within ``tol``."""
    x = problem.inner(q)
    return abs(problem.parametric(x, q)) <= tol
