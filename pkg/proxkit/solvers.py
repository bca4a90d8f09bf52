#!/usr/bin/python3
# -*- coding: utf-8 -*-
# vim: set ts=4
#
# Copyright 2024-present proxkit contributors
#
# SPDX-License-Identifier: MIT

"""
Proximal gradient (PG), fast proximal gradient (FPG) and PANOC with
L-BFGS directions over the forward-backward envelope (FBE).

Every solver minimizes ``f(x) + g(x)`` for a ``SmoothFn`` f and a
``ProxFn`` g, stops once ``||R_gamma(x)||_inf / gamma <= tol`` and returns
a ``SolverResult`` that unpacks as ``(solution, trace)``.
"""

from collections import deque
from dataclasses import dataclass, field
import logging
import math
import time

import numpy as np

from proxkit.exceptions import ConfigurationError, DomainError, SolverError
from proxkit.tensor import inner, is_finite, norm2, norm_inf, space_of

logger = logging.getLogger(__name__)

GIVEN = "given"
POWER_ITERATION = "power-iteration"
ADAPTIVE = "adaptive-backtracking"
LIPSCHITZ_MODES = (GIVEN, POWER_ITERATION, ADAPTIVE)

CONVERGED = "converged"
MAX_ITERS = "max_iters"

# fraction of the admissible interval used for default stepsizes
PANOC_GAMMA_FACTOR = 0.95
SIGMA_FACTOR = 0.45
CURVATURE_SAFEGUARD = 1e-12
POWER_ITERATIONS = 20


@dataclass
class SolverConfig:
    gamma: float = None
    sigma: float = None
    lipschitz: float = None
    lipschitz_mode: str = GIVEN
    lbfgs_memory: int = 5
    max_iters: int = 10000
    tol: float = 1e-5
    max_backtracks: int = 20
    log_every: int = 100

    def __post_init__(self):
        if self.lipschitz_mode not in LIPSCHITZ_MODES:
            raise ConfigurationError(
                f"unknown lipschitz mode {self.lipschitz_mode!r}, "
                f"expected one of {', '.join(LIPSCHITZ_MODES)}"
            )
        if self.gamma is not None and not self.gamma > 0:
            raise DomainError(f"gamma must be positive, got {self.gamma}")
        if self.lbfgs_memory < 0:
            raise ConfigurationError("lbfgs_memory must be nonnegative")
        if self.max_iters < 0:
            raise ConfigurationError("max_iters must be nonnegative")
        if not self.tol > 0:
            raise ConfigurationError("tol must be positive")


@dataclass
class IterationRecord:
    k: int
    objective: float
    fbe: float
    residual: float
    gamma: float
    elapsed: float
    step_sq: float
    tau: float = 1.0
    sigma: float = 0.0
    backtracks: int = 0
    normalized_error: float = None


@dataclass
class SolverTrace:
    solver: str
    records: list = field(default_factory=list)

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def __getitem__(self, index):
        return self.records[index]

    def append(self, record):
        if self.records and record.k <= self.records[-1].k:
            raise ValueError("trace iterations must increase")
        self.records.append(record)

    def rows(self):
        return [vars(r).copy() for r in self.records]

    def column(self, name):
        return [getattr(r, name) for r in self.records]


@dataclass
class SolverResult:
    solution: object
    trace: SolverTrace
    status: str
    iterations: int

    def __iter__(self):
        return iter((self.solution, self.trace))

    @property
    def converged(self):
        return self.status == CONVERGED


class LbfgsBuffer:
    """Last ``memory`` curvature pairs ``(s, w, <s, w>)``."""

    def __init__(self, memory):
        self.memory = memory
        self.pairs = deque(maxlen=memory)

    def __len__(self):
        return len(self.pairs)

    def push(self, s, w):
        """Store the pair unless it fails the curvature safeguard; returns
        whether it was stored."""
        if self.memory == 0:
            return False
        rho = inner(s, w)
        if rho <= CURVATURE_SAFEGUARD * norm2(s) * norm2(w):
            logger.debug("rejecting curvature pair with <s, w> = %g", rho)
            return False
        self.pairs.append((s, w, rho))
        return True

    def clear(self):
        self.pairs.clear()


def lbfgs_direction(buffer, r):
    """Two-loop recursion: return ``d = -H r``, ``-r`` when the buffer is
    empty."""
    if not len(buffer):
        return -r
    q = r
    alphas = []
    for s, w, rho in reversed(buffer.pairs):
        alpha = inner(s, q) / rho
        alphas.append(alpha)
        q = q - alpha * w
    _, w_last, rho_last = buffer.pairs[-1]
    z = (rho_last / inner(w_last, w_last)) * q
    for (s, w, rho), alpha in zip(buffer.pairs, reversed(alphas)):
        beta = inner(w, z) / rho
        z = z + (alpha - beta) * s
    return -z


def pg_step(f, g, x, gamma, grad=None):
    """Forward-backward step ``prox_{gamma g}(x - gamma grad f(x))``."""
    if not gamma > 0:
        raise DomainError(f"gamma must be positive, got {gamma}")
    if grad is None:
        grad = f.gradient(x)
    return g.prox(x - gamma * grad, gamma)


def residual(f, g, x, gamma):
    """Fixed-point residual ``R_gamma(x) = x - pg_step(x)``."""
    return x - pg_step(f, g, x, gamma)


def _fbe_at(fx, grad, g_v, r, gamma):
    return fx - inner(grad, r) + norm2(r) ** 2 / (2.0 * gamma) + g_v


def fbe(f, g, x, gamma):
    """Forward-backward envelope ``f(x) + <v - x, grad f(x)>
    + ||v - x||^2 / (2 gamma) + g(v)`` with ``v = pg_step(x)``."""
    fx, grad = f.value_and_gradient(x)
    v = pg_step(f, g, x, gamma, grad)
    return _fbe_at(fx, grad, g(v), x - v, gamma)


def default_sigma(gamma, lipschitz):
    return SIGMA_FACTOR * (1.0 - gamma * lipschitz) / (2.0 * gamma)


def _sample_direction(x0):
    rng = np.random.default_rng(0)
    v = space_of(x0).random(rng)
    return v / norm2(v)


def _hessian_product(f, x0, v):
    if hasattr(f, "gauss_newton") and getattr(f.mapping, "is_linear", False):
        return f.gauss_newton(x0, v)
    h = 1e-6 * (1.0 + norm2(x0))
    return (f.gradient(x0 + h * v) - f.gradient(x0)) / h


def _majorizes(f, x, fx, grad, z, lipschitz):
    d = z - x
    bound = fx + inner(grad, d) + 0.5 * lipschitz * norm2(d) ** 2
    return f(z) <= bound + 1e-12 * (1.0 + abs(fx))


def estimate_lipschitz(f, x0, mode=POWER_ITERATION, iterations=POWER_ITERATIONS):
    """Estimate the Lipschitz constant of ``grad f`` around ``x0``.

    ``power-iteration`` runs at least ``POWER_ITERATIONS`` steps on the
    (Gauss-Newton) Hessian; ``adaptive-backtracking`` doubles a local
    curvature estimate until the quadratic upper bound majorizes ``f`` at
    the gradient step.
    """
    if mode == GIVEN:
        if f.lipschitz is None:
            raise ConfigurationError(f"{f!r} has no known Lipschitz constant")
        return f.lipschitz
    v = _sample_direction(x0)
    if mode == POWER_ITERATION:
        estimate = 0.0
        for _ in range(max(iterations, POWER_ITERATIONS)):
            hv = _hessian_product(f, x0, v)
            estimate = norm2(hv)
            if estimate == 0.0:
                break
            v = hv / estimate
        logger.debug("power iteration estimate L = %g", estimate)
        return estimate
    if mode != ADAPTIVE:
        raise ConfigurationError(f"unknown lipschitz mode {mode!r}")
    fx, grad = f.value_and_gradient(x0)
    h = 1e-6 * (1.0 + norm2(x0))
    estimate = norm2(f.gradient(x0 + h * v) - grad) / h
    estimate = max(estimate, 1e-8)
    if norm2(grad) == 0.0:
        return estimate
    while not _majorizes(f, x0, fx, grad, x0 - grad / estimate, estimate):
        estimate *= 2.0
    logger.debug("backtracking estimate L = %g", estimate)
    return estimate


class _Stepsize:
    """Stepsize state of one solve: ``gamma``, the current Lipschitz
    estimate and whether the majorization test runs every iteration."""

    def __init__(self, f, x0, config, factor, strict=False):
        self.adaptive = config.lipschitz_mode == ADAPTIVE
        lipschitz = config.lipschitz if config.lipschitz is not None else f.lipschitz
        if config.gamma is not None:
            self.gamma = config.gamma
        else:
            if config.lipschitz_mode == POWER_ITERATION and config.lipschitz is None:
                lipschitz = estimate_lipschitz(f, x0, POWER_ITERATION)
            elif lipschitz is None:
                lipschitz = estimate_lipschitz(f, x0, ADAPTIVE)
                self.adaptive = True
                logger.info(
                    "no Lipschitz constant known, backtracking from L = %g", lipschitz
                )
            self.gamma = factor / lipschitz if lipschitz > 0 else 1.0
        if lipschitz is None:
            lipschitz = factor / self.gamma
        self.lipschitz = lipschitz
        bound = self.gamma * lipschitz
        if bound > 1.0 + 1e-12 or (strict and bound >= 1.0):
            raise DomainError(
                f"gamma = {self.gamma} is not below 1/L = {1.0 / lipschitz}"
            )

    def accept(self, f, x, fx, grad, v):
        """Return ``False`` (and halve gamma) when the quadratic model at
        ``x`` does not majorize ``f`` at ``v``."""
        if not self.adaptive:
            return True
        if _majorizes(f, x, fx, grad, v, 1.0 / self.gamma):
            return True
        self.gamma /= 2.0
        self.lipschitz = max(2.0 * self.lipschitz, 1.0 / self.gamma)
        logger.warning("majorization failed, halving gamma to %g", self.gamma)
        return False


class _Recorder:
    def __init__(self, name, config, reference=None):
        self.trace = SolverTrace(name)
        self.config = config
        self.reference = reference
        self.start = time.perf_counter()

    def record(self, k, x, objective, fbe_value, r, gamma, **extra):
        if math.isnan(objective) or math.isnan(fbe_value) or fbe_value == -math.inf:
            raise SolverError(
                f"{self.trace.solver}: non-finite value at iteration {k}", self.trace
            )
        res = norm_inf(r) / gamma
        self.trace.append(
            IterationRecord(
                k,
                objective,
                fbe_value,
                res,
                gamma=gamma,
                elapsed=time.perf_counter() - self.start,
                step_sq=norm2(r) ** 2,
                normalized_error=self._error(x),
                **extra,
            )
        )
        every = self.config.log_every
        if every and k % every == 0:
            logger.debug(
                "%s k=%d obj=%.6e fbe=%.6e res=%.3e gamma=%.3e",
                self.trace.solver, k, objective, fbe_value, res, gamma,
            )
        return res <= self.config.tol

    def _error(self, x):
        """``log10(||x - x*|| / ||x*||)`` against the reference solution."""
        if self.reference is None:
            return None
        distance = norm2(x - self.reference)
        scale = norm2(self.reference) or 1.0
        return math.log10(distance / scale) if distance > 0 else -math.inf

    def finish(self, x, k, converged):
        status = CONVERGED if converged else MAX_ITERS
        logger.info("%s stopped after %d iterations: %s", self.trace.solver, k, status)
        return SolverResult(x, self.trace, status, k)


def _forward_backward(f, g, x, stepsize, trace, name):
    """Evaluate ``f`` at ``x`` and take a forward-backward step, backtracking
    on gamma when the majorization test fails."""
    fx, grad = f.value_and_gradient(x)
    if not math.isfinite(fx) or not is_finite(grad):
        raise SolverError(f"{name}: non-finite objective or gradient", trace)
    while True:
        v = pg_step(f, g, x, stepsize.gamma, grad)
        if stepsize.accept(f, x, fx, grad, v):
            return fx, grad, v


def solve_pg(f, g, x0, config=None, reference=None):
    """Proximal gradient method with ``gamma = 1/L`` by default."""
    config = config or SolverConfig()
    stepsize = _Stepsize(f, x0, config, 1.0)
    rec = _Recorder("pg", config, reference)
    x = x0
    for k in range(config.max_iters + 1):
        fx, grad, v = _forward_backward(f, g, x, stepsize, rec.trace, "pg")
        gamma = stepsize.gamma
        r = x - v
        phi = _fbe_at(fx, grad, g(v), r, gamma)
        if rec.record(k, x, fx + g(x), phi, r, gamma):
            return rec.finish(x, k, True)
        if k == config.max_iters:
            break
        x = v
    return rec.finish(x, config.max_iters, False)


def fpg_theta(theta):
    """``theta_{k+1} = (1 + sqrt(1 + 4 theta_k^2)) / 2``."""
    return 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * theta * theta))


def solve_fpg(f, g, x0, config=None, reference=None):
    """Fast proximal gradient method with Nesterov extrapolation; f and g
    must be convex."""
    if not f.is_convex or not g.is_convex:
        raise DomainError("fpg needs convex f and g")
    config = config or SolverConfig()
    stepsize = _Stepsize(f, x0, config, 1.0)
    rec = _Recorder("fpg", config, reference)
    x_prev = x = extrapolated = x0
    theta = 1.0
    for k in range(config.max_iters + 1):
        # termination is decided on the residual at x, not at the extrapolated point
        fx, grad, v = _forward_backward(f, g, x, stepsize, rec.trace, "fpg")
        gamma = stepsize.gamma
        r = x - v
        if rec.record(k, x, fx + g(x), _fbe_at(fx, grad, g(v), r, gamma), r, gamma):
            return rec.finish(x, k, True)
        if k == config.max_iters:
            break
        if extrapolated is not x:
            _, _, v = _forward_backward(f, g, extrapolated, stepsize, rec.trace, "fpg")
        x_prev, x = x, v
        theta_next = fpg_theta(theta)
        extrapolated = x + ((theta - 1.0) / theta_next) * (x - x_prev)
        theta = theta_next
    return rec.finish(x, config.max_iters, False)


def solve_panoc(f, g, x0, config=None, reference=None):
    """PANOC: line search on the FBE between the forward-backward point and
    an L-BFGS step on the fixed-point residual.

    With an empty L-BFGS buffer the candidate is the forward-backward point
    itself, so ``lbfgs_memory=0`` reproduces the PG iterates exactly.
    """
    config = config or SolverConfig()
    stepsize = _Stepsize(f, x0, config, PANOC_GAMMA_FACTOR, strict=True)
    rec = _Recorder("panoc", config, reference)
    buffer = LbfgsBuffer(config.lbfgs_memory)
    x = x0
    fx, grad, v = _forward_backward(f, g, x, stepsize, rec.trace, "panoc")
    r_prev = x_prev = None
    tau, backtracks = 1.0, 0
    for k in range(config.max_iters + 1):
        gamma = stepsize.gamma
        sigma = config.sigma
        if sigma is None:
            sigma = default_sigma(gamma, stepsize.lipschitz)
        r = x - v
        phi_x = _fbe_at(fx, grad, g(v), r, gamma)
        done = rec.record(
            k, x, fx + g(x), phi_x, r, gamma, tau=tau, sigma=sigma, backtracks=backtracks
        )
        if done:
            return rec.finish(x, k, True)
        if k == config.max_iters:
            break
        if r_prev is not None:
            buffer.push(x - x_prev, r - r_prev)
        candidate = x + lbfgs_direction(buffer, r) if len(buffer) else v
        decrease = sigma * norm2(r) ** 2
        tau, backtracks = 1.0, 0
        while True:
            x_next = v if candidate is v else (1.0 - tau) * v + tau * candidate
            fx_next, grad_next, v_next = _forward_backward(
                f, g, x_next, stepsize, rec.trace, "panoc"
            )
            if stepsize.gamma != gamma or candidate is v:
                break
            phi_next = _fbe_at(fx_next, grad_next, g(v_next), x_next - v_next, gamma)
            if phi_next <= phi_x - decrease:
                break
            backtracks += 1
            if backtracks >= config.max_backtracks:
                logger.warning(
                    "line search exhausted at k=%d, taking the forward-backward point", k
                )
                tau = 0.0
                x_next = v
                fx_next, grad_next, v_next = _forward_backward(
                    f, g, x_next, stepsize, rec.trace, "panoc"
                )
                break
            tau /= 2.0
        if stepsize.gamma != gamma:
            # the residual map changed with gamma: keep x, drop the pairs
            buffer.clear()
            r_prev = x_prev = None
            fx, grad, v = _forward_backward(f, g, x, stepsize, rec.trace, "panoc")
            tau = 0.0
            continue
        r_prev, x_prev = r, x
        x, fx, grad, v = x_next, fx_next, grad_next, v_next
    return rec.finish(x, config.max_iters, False)


SOLVERS = {
    "pg": solve_pg,
    "fpg": solve_fpg,
    "panoc": solve_panoc,
}


def get_solver(name):
    try:
        return SOLVERS[name.lower()]
    except KeyError:
        raise ConfigurationError(
            f"unknown solver {name!r}, expected one of {', '.join(SOLVERS)}"
        ) from None
