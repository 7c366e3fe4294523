"""Inner problem of the Dinkelbach loop: one subchannel and its power for a link.

For a fixed ratio estimate ``q`` the link minimizes

    U(i, P) - q R(i, P),   U = s_t ((1 - h_i) P + c),   R = log2(1 + Gamma_i P)

subject to ``R >= r_min`` and ``P <= p_max``, with ``h_i`` the aggregate
harvest factor of subchannel ``i`` (zero on the short-range link).  The
Lagrangian is handled by dual decomposition: closed-form water-filling power
per subchannel, a per-subchannel score whose argmax selects the subchannel,
and projected subgradient steps on the rate and power multipliers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

LN2 = math.log(2.0)
SCORE_FORMS = ("lagrangian", "printed")


class InfeasibleProblemError(ValueError):
    def __init__(self, message: str, constraint: str):
        super().__init__(message)
        self.constraint = constraint


@dataclass(frozen=True)
class LinkProblem:
    """One link (long- or short-range) for a fixed scheduled terminal."""

    gain: np.ndarray
    harvest: np.ndarray
    circuit: float
    s_t: float
    r_min: float
    p_max: float
    noise_var: float = 1.0
    name: str = "link"

    def __post_init__(self):
        g = np.atleast_1d(np.asarray(self.gain, dtype=float))
        h = np.broadcast_to(np.asarray(self.harvest, dtype=float), g.shape).copy()
        if g.size == 0:
            raise ValueError("link needs at least one subchannel")
        if np.any(~np.isfinite(g)) or np.any(g <= 0):
            raise ValueError("gains must be positive and finite")
        object.__setattr__(self, "gain", g)
        object.__setattr__(self, "harvest", h)

    @property
    def num_subchannels(self) -> int:
        return self.gain.size

    @property
    def gamma(self) -> np.ndarray:
        return self.gain / self.noise_var

    def rate(self, i, p):
        return np.log2(1.0 + np.asarray(p) * self.gamma[i])

    def numerator(self, i, p):
        return self.s_t * ((1.0 - self.harvest[i]) * np.asarray(p) + self.circuit)

    def parametric(self, i, p, q: float):
        return self.numerator(i, p) - q * self.rate(i, p)

    def min_power(self) -> np.ndarray:
        """Per-subchannel power reaching ``r_min`` (floored to keep the rate positive)."""
        p = (2.0 ** self.r_min - 1.0) / self.gamma
        return np.maximum(p, self.p_max * 1e-12)

    def feasible(self) -> np.ndarray:
        return self.min_power() <= self.p_max * (1.0 + 1e-12)

    def restrict(self, i: int) -> "LinkProblem":
        return replace(self, gain=self.gain[[i]], harvest=self.harvest[[i]])


@dataclass(frozen=True)
class DualState:
    mu: float = 0.0
    theta: float = 0.0
    lam: float = 0.0
    step_mu: float = 0.1
    step_theta: float = 0.1
    iteration: int = 0

    def __post_init__(self):
        if self.mu < 0 or self.theta < 0:
            raise ValueError("multipliers must be nonnegative")
        if not (self.step_mu > 0 and self.step_theta > 0):
            raise ValueError("step sizes must be positive")


@dataclass
class InnerSolution:
    chosen_subchannel: int
    power: float
    score: np.ndarray
    objective: float
    powers: np.ndarray
    state: DualState
    iterations: int
    converged: bool
    trace: list[tuple] = field(default_factory=list, repr=False)


def optimal_power(q: float, mu: float, gain, harvest, s_t: float, noise_var: float = 1.0,
                  theta_mult: float = 0.0) -> np.ndarray:
    """Water-filling power ``[(q + mu) / (ln2 * Omega) - 1 / Gamma]^+``.

    ``Omega = s_t (1 - harvest) + theta_mult``.  Where ``Omega <= 0`` the
    objective decreases in power and ``inf`` is returned, meaning "go to the
    cap" once the caller clips.
    """
    gamma = np.asarray(gain, dtype=float) / noise_var
    omega = s_t * (1.0 - np.asarray(harvest, dtype=float)) + theta_mult
    pos = omega > 0
    with np.errstate(divide="ignore", invalid="ignore"):
        level = (q + mu) / (LN2 * np.where(pos, omega, 1.0))
    return np.where(pos, np.maximum(level - 1.0 / gamma, 0.0), np.inf if q + mu >= 0 else 0.0)


def subchannel_powers(q: float, link: LinkProblem, mu: float = 0.0, theta_mult: float = 0.0) -> np.ndarray:
    """Per-subchannel minimizer of the Lagrangian over ``[p(r_min), p_max]``.

    The closed form is clipped into the feasible interval; the interval ends
    are also compared because with ``q + mu < 0`` the rate term is concave.
    """
    lo = np.minimum(link.min_power(), link.p_max)
    hi = np.full_like(lo, link.p_max)
    p = np.clip(optimal_power(q, mu, link.gain, link.harvest, link.s_t, link.noise_var, theta_mult), lo, hi)
    if q + mu >= 0:
        return p
    cands = np.stack([p, lo, hi])
    idx = np.arange(link.num_subchannels)
    vals = _lagrangian(q, mu, theta_mult, link, idx[None, :], cands)
    return cands[np.argmin(vals, axis=0), idx]


def _lagrangian(q, mu, theta_mult, link: LinkProblem, i, p):
    # constant multiplier terms (mu * r_min, theta * p_max) dropped
    return link.numerator(i, p) + theta_mult * p - (q + mu) * link.rate(i, p)


def subchannel_score(q: float, mu: float, power, link: LinkProblem, lam: float = 0.0,
                     theta_mult: float = 0.0, form: str = "lagrangian") -> np.ndarray:
    """Score per subchannel; the subchannel with the largest score is selected.

    ``"lagrangian"``: negated per-subchannel Lagrangian at its optimal power,
    i.e. the cost saved by assigning the subchannel.  ``"printed"``: the
    literal marginal expression with the power block scaled by ``s_t`` and an
    unscaled rate-derivative bracket; kept for comparison only.
    """
    idx = np.arange(link.num_subchannels)
    p = np.asarray(power, dtype=float)
    if form == "lagrangian":
        psi = -_lagrangian(q, mu, theta_mult, link, idx, p)
    elif form == "printed":
        x = p * link.gamma
        psi = (link.s_t * (p + link.circuit - link.harvest * p) - (q + mu)
               + (1.0 + np.log2(1.0 + x) - (x / LN2) / (1.0 + x)))
    else:
        raise ValueError(f"unknown score form {form!r}")
    return psi - lam


def select_subchannel(scores) -> int:
    """Index of the maximum score, lowest index on ties."""
    s = np.asarray(scores, dtype=float)
    if s.size == 0:
        raise ValueError("no subchannel scores")
    return int(np.argmax(s))


def update_multipliers(state: DualState, rate: float, power: float, r_min: float, p_max: float) -> DualState:
    """Projected subgradient step with diminishing step ``eps0 / sqrt(l + 1)``."""
    l = state.iteration
    scale = 1.0 / math.sqrt(l + 1)
    mu = max(state.mu + state.step_mu * scale * (r_min - rate), 0.0)
    theta = max(state.theta + state.step_theta * scale * (power - p_max), 0.0)
    return replace(state, mu=mu, theta=theta, iteration=l + 1)


def solve_inner(q: float, link: LinkProblem, state: DualState | None = None, *,
                form: str = "lagrangian", tol: float = 1e-6, stable_iters: int = 5,
                max_iter: int = 2000, record: bool = False) -> InnerSolution:
    """Alternate subchannel selection, power allocation and multiplier updates.

    Stops once the weighted residuals ``|R - r_min| [mu > 0]`` and
    ``|P - p_max| [theta > 0]`` are below ``tol`` and the selection has been
    stable for ``stable_iters`` consecutive iterations.
    """
    feasible = link.feasible()
    if not feasible.any():
        raise InfeasibleProblemError(
            f"{link.name}: rate {link.r_min} unreachable at power cap {link.p_max} on every subchannel",
            constraint="rate threshold under power cap",
        )
    state = state or DualState()
    trace = []
    prev, stable = -1, 0
    converged = False
    for _ in range(max_iter):
        powers = subchannel_powers(q, link, state.mu, state.theta)
        scores = subchannel_score(q, state.mu, powers, link, state.lam, state.theta, form)
        scores = np.where(feasible, scores, -np.inf)
        i = select_subchannel(scores)
        p = float(powers[i])
        r = float(link.rate(i, p))
        state = update_multipliers(state, r, p, link.r_min, link.p_max)
        res_rate = abs(r - link.r_min) if state.mu > 0 else 0.0
        res_pow = abs(p - link.p_max) if state.theta > 0 else 0.0
        if record:
            trace.append((state.iteration, state.mu, state.theta, i, p, res_rate, res_pow))
        stable = stable + 1 if i == prev else 1
        prev = i
        if res_rate < tol and res_pow < tol and stable >= stable_iters:
            converged = True
            break
    return InnerSolution(
        chosen_subchannel=i, power=p, score=scores,
        objective=float(link.parametric(i, p, q)), powers=powers,
        state=state, iterations=state.iteration, converged=converged, trace=trace,
    )
