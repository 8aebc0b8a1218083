"""CMA-ES over the normalized (r0, course, speed) box.

The search runs in ``[0, 1]**3`` so one step size means the same thing for
meters, degrees and m/s. Learning rates follow the usual tutorial defaults
(Hansen's "The CMA Evolution Strategy: A Tutorial") computed from the
dimension and the recombination weights; any of them can be overridden.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .objective import RCS_BOUNDS, BearingObjective, Candidate, SearchBounds
from .report import SolverReport

log = logging.getLogger(__name__)

EIGEN_FLOOR = 1e-14


def normalize(c, bounds: SearchBounds) -> np.ndarray:
    v = c.as_array() if hasattr(c, "as_array") else np.asarray(c, dtype=float)
    return (v - bounds.lows) / bounds.widths


def denormalize(z, bounds: SearchBounds) -> np.ndarray:
    return bounds.lows + np.asarray(z, dtype=float) * bounds.widths


def recombination_weights(mu: int) -> np.ndarray:
    """``ln(mu + 1/2) - ln(i)`` for i = 1..mu, normalized to sum to one."""
    if mu < 1:
        raise ValueError("mu must be >= 1")
    w = math.log(mu + 0.5) - np.log(np.arange(1, mu + 1))
    return w / w.sum()


@dataclass(frozen=True)
class CmaConfig:
    dimension: int = 3
    parent_size: int = 100
    offspring_size: int = 100
    max_generations: int = 50_000
    feval_budget: int = 50_000
    bounds: SearchBounds = RCS_BOUNDS
    sigma0: float = 0.3
    tol_fun: float = 1e-8
    tol_x: float = 1e-12
    max_resamples: int = 10
    # None selects the tutorial default for that rate
    c_sigma: float | None = None
    d_sigma: float | None = None
    c_c: float | None = None
    c_1: float | None = None
    c_mu: float | None = None

    def __post_init__(self):
        if self.dimension != len(self.bounds.names):
            raise ValueError("dimension must match the number of bounded parameters")
        if not 1 <= self.parent_size <= self.offspring_size:
            raise ValueError("need 1 <= parent_size <= offspring_size")
        if self.feval_budget <= 0 or self.max_generations <= 0:
            raise ValueError("feval_budget and max_generations must be positive")
        if self.sigma0 <= 0:
            raise ValueError("sigma0 must be positive")

    def with_(self, **changes) -> "CmaConfig":
        return replace(self, **changes)


@dataclass(frozen=True)
class StrategyParameters:
    weights: np.ndarray
    mu_eff: float
    c_sigma: float
    d_sigma: float
    c_c: float
    c_1: float
    c_mu: float
    chi_n: float  # E||N(0, I)||

    @classmethod
    def for_config(cls, config: CmaConfig) -> "StrategyParameters":
        return cls.default(config.dimension, config.parent_size, config)

    @classmethod
    def default(cls, n: int, mu: int, overrides: CmaConfig | None = None) -> "StrategyParameters":
        w = recombination_weights(mu)
        mu_eff = 1.0 / np.sum(w**2)
        c_sigma = (mu_eff + 2.0) / (n + mu_eff + 5.0)
        d_sigma = 1.0 + 2.0 * max(0.0, math.sqrt((mu_eff - 1.0) / (n + 1.0)) - 1.0) + c_sigma
        c_c = (4.0 + mu_eff / n) / (n + 4.0 + 2.0 * mu_eff / n)
        c_1 = 2.0 / ((n + 1.3) ** 2 + mu_eff)
        c_mu = min(1.0 - c_1, 2.0 * (mu_eff - 2.0 + 1.0 / mu_eff) / ((n + 2.0) ** 2 + mu_eff))
        rates = dict(c_sigma=c_sigma, d_sigma=d_sigma, c_c=c_c, c_1=c_1, c_mu=c_mu)
        if overrides is not None:
            for k in rates:
                if getattr(overrides, k) is not None:
                    rates[k] = float(getattr(overrides, k))
        chi_n = math.sqrt(n) * (1.0 - 1.0 / (4.0 * n) + 1.0 / (21.0 * n * n))
        return cls(weights=w, mu_eff=float(mu_eff), chi_n=chi_n, **rates)


@dataclass
class CmaState:
    mean: np.ndarray
    sigma: float
    C: np.ndarray
    p_sigma: np.ndarray
    p_c: np.ndarray
    generation: int = 0
    B: np.ndarray = field(default=None, repr=False)
    D: np.ndarray = field(default=None, repr=False)  # sqrt of eigenvalues of C

    def __post_init__(self):
        if self.B is None or self.D is None:
            self.refactor()

    @classmethod
    def initial(cls, mean, sigma: float) -> "CmaState":
        mean = np.asarray(mean, dtype=float)
        n = len(mean)
        return cls(mean.copy(), float(sigma), np.eye(n), np.zeros(n), np.zeros(n))

    def refactor(self) -> None:
        """Eigendecompose C, flooring eigenvalues; on failure fall back to C = I."""
        try:
            if not np.all(np.isfinite(self.C)):
                raise np.linalg.LinAlgError("non-finite covariance")
            C = (self.C + self.C.T) / 2.0
            evals, B = np.linalg.eigh(C)
            if np.any(evals < EIGEN_FLOOR):
                evals = np.maximum(evals, EIGEN_FLOOR)
                C = (B * evals) @ B.T
                C = (C + C.T) / 2.0
            self.C, self.B, self.D = C, B, np.sqrt(evals)
        except np.linalg.LinAlgError as exc:
            log.warning("covariance factorization failed (%s); resetting C to identity", exc)
            n = len(self.mean)
            self.C, self.B, self.D = np.eye(n), np.eye(n), np.ones(n)
            self.p_c = np.zeros(n)
            self.p_sigma = np.zeros(n)

    @property
    def inv_sqrt_C(self) -> np.ndarray:
        return (self.B / self.D) @ self.B.T

    @property
    def axis_scale(self) -> float:
        """sigma times the square root of the largest eigenvalue of C."""
        return self.sigma * float(np.max(self.D))

    def copy(self) -> "CmaState":
        return CmaState(self.mean.copy(), self.sigma, self.C.copy(), self.p_sigma.copy(),
                        self.p_c.copy(), self.generation, self.B.copy(), self.D.copy())


def cma_sample(state: CmaState, lam: int, rng: np.random.Generator,
               box: tuple[float, float] | None = (0.0, 1.0), max_resamples: int = 10) -> np.ndarray:
    """Draw ``lam`` points ``mean + sigma * B D z``.

    Points outside ``box`` are redrawn up to ``max_resamples`` times and then
    clamped onto it. ``box=None`` disables the repair.
    """
    L = state.B * state.D
    n = len(state.mean)
    x = state.mean + state.sigma * rng.standard_normal((lam, n)) @ L.T
    if box is None:
        return x
    lo, hi = box
    for _ in range(max_resamples):
        out = np.any((x < lo) | (x > hi), axis=1)
        if not out.any():
            break
        x[out] = state.mean + state.sigma * rng.standard_normal((int(out.sum()), n)) @ L.T
    return np.clip(x, lo, hi)


def cma_recombine(sorted_samples, weights) -> np.ndarray:
    """Weighted mean of the leading ``len(weights)`` samples."""
    x = np.atleast_2d(np.asarray(sorted_samples, dtype=float))
    w = np.asarray(weights, dtype=float)
    if len(x) < len(w):
        raise ValueError(f"{len(w)} weights but only {len(x)} samples")
    return w @ x[: len(w)]


def cma_update(state: CmaState, sorted_samples, params: StrategyParameters) -> CmaState:
    """One generation of mean, path, covariance and step-size adaptation.

    ``sorted_samples`` must be ordered best first. Returns a new state; a
    non-finite result resets paths and covariance, keeping the old mean.
    """
    w = params.weights
    n = len(state.mean)
    x = np.atleast_2d(np.asarray(sorted_samples, dtype=float))[: len(w)]
    if len(x) < len(w):
        raise ValueError(f"{len(w)} weights but only {len(x)} samples")
    # non-finite input is caught below; keep numpy quiet while it propagates
    with np.errstate(invalid="ignore", over="ignore", divide="ignore"):
        new_mean = cma_recombine(x, w)
        y = (x - state.mean) / state.sigma
        y_w = w @ y
        g = state.generation + 1

        p_sigma = (1.0 - params.c_sigma) * state.p_sigma + math.sqrt(
            params.c_sigma * (2.0 - params.c_sigma) * params.mu_eff
        ) * (state.inv_sqrt_C @ y_w)
        norm_ps = float(np.linalg.norm(p_sigma))
        h_sigma = norm_ps / math.sqrt(1.0 - (1.0 - params.c_sigma) ** (2 * g)) < (1.4 + 2.0 / (n + 1.0)) * params.chi_n
        p_c = (1.0 - params.c_c) * state.p_c
        if h_sigma:
            p_c = p_c + math.sqrt(params.c_c * (2.0 - params.c_c) * params.mu_eff) * y_w
        delta_h = 0.0 if h_sigma else params.c_c * (2.0 - params.c_c)

        rank_mu = (y.T * w) @ y
        C = (
            (1.0 - params.c_1 - params.c_mu * w.sum()) * state.C
            + params.c_1 * (np.outer(p_c, p_c) + delta_h * state.C)
            + params.c_mu * rank_mu
        )
        C = (C + C.T) / 2.0
        sigma = state.sigma * float(np.exp((params.c_sigma / params.d_sigma) * (norm_ps / params.chi_n - 1.0)))

    finite = np.all(np.isfinite(C)) and np.all(np.isfinite(new_mean)) and math.isfinite(sigma) and sigma > 0
    if not finite:
        log.warning("non-finite CMA update at generation %d; resetting paths and covariance", g)
        return CmaState(state.mean.copy(), state.sigma, np.eye(n), np.zeros(n), np.zeros(n), g)
    return CmaState(new_mean, sigma, C, p_sigma, p_c, g)


def run_cma(observed, obs_track, config: CmaConfig, rng: np.random.Generator,
            objective: BearingObjective | None = None, trace: list | None = None) -> SolverReport:
    """Minimize the bearing cost until the budget or a tolerance is exhausted.

    A generation only starts if all ``offspring_size`` evaluations fit in
    the remaining budget. Rows ``(generation, sigma, best cost, r0, course,
    speed)`` are appended to ``trace`` when it is given, the candidate being
    the current mean.
    """
    if objective is None:
        objective = BearingObjective(observed, obs_track)
    bounds = config.bounds
    params = StrategyParameters.for_config(config)
    lam = config.offspring_size
    state = CmaState.initial(np.full(config.dimension, 0.5), config.sigma0)
    before = objective.evaluations
    best_z, best_cost = None, math.inf
    stop = "budget"
    while True:
        used = objective.evaluations - before
        if used + lam > config.feval_budget:
            stop = "budget"
            break
        if state.generation >= config.max_generations:
            stop = "max_generations"
            break
        z = cma_sample(state, lam, rng, max_resamples=config.max_resamples)
        costs = objective.batch(denormalize(z, bounds))
        order = np.argsort(costs, kind="stable")
        if costs[order[0]] < best_cost:
            best_cost, best_z = float(costs[order[0]]), z[order[0]].copy()
        state = cma_update(state, z[order], params)
        state.refactor()
        if trace is not None:
            trace.append((state.generation, state.sigma, best_cost, *denormalize(state.mean, bounds)))
        if best_cost < config.tol_fun:
            stop = "tol_fun"
            break
        if state.axis_scale < config.tol_x:
            stop = "tol_x"
            break
    if best_z is None:
        raise ValueError("feval budget is smaller than one generation")
    return SolverReport(
        solver="cma",
        estimate=Candidate(*(float(v) for v in denormalize(best_z, bounds))),
        cost=best_cost,
        fevals=objective.evaluations - before,
        details={"generations": state.generation, "stop": stop, "sigma": state.sigma},
    )
