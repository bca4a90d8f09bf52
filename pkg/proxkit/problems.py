#!/usr/bin/python3
# -*- coding: utf-8 -*-
# vim: set ts=4
#
# Copyright 2024-present proxkit contributors
#
# SPDX-License-Identifier: MIT

"""
Seeded benchmark generators: LASSO, sparse deconvolution, line spectral
estimation, total variation de-noising, robust PCA, audio de-clipping and a
small sigmoid network classifier.

Every generator returns a ``Benchmark``; the same seed always produces the
same data.
"""

from dataclasses import dataclass, field
import logging
import math

import numpy as np
import scipy.fft
import scipy.linalg
import scipy.sparse

from proxkit.exceptions import ConfigurationError, DomainError
from proxkit.fao import (
    OpDag,
    broadcast_op,
    compose,
    conv_op,
    hcat,
    identity_op,
    idct_op,
    idft_op,
    inputs,
    matrix_op,
    node,
    output_mul,
    rmatmul_op,
    scale_op,
    select_op,
    sigmoid_op,
    variation_op,
)
from proxkit.funcs import (
    ball_l0,
    ball_l2,
    cross_entropy,
    halfspace_ge,
    halfspace_le,
    l1_norm,
    least_squares,
    mixed_l21_norm,
    rank_ball,
    translate,
)
from proxkit.model import Problem, fenchel_dual
from proxkit.solvers import (
    ADAPTIVE,
    CONVERGED,
    MAX_ITERS,
    SolverConfig,
    get_solver,
    pg_step,
)
from proxkit.tensor import COMPLEX, SignalTuple, norm2, norm_inf

logger = logging.getLogger(__name__)


@dataclass
class BenchRun:
    """Outcome of a benchmark solve: named outputs, one ``SolverResult`` per
    stage and the overall status."""

    solution: dict
    results: list
    status: str
    stages: list = field(default_factory=list)

    @property
    def result(self):
        return self.results[-1]

    @property
    def iterations(self):
        return sum(r.iterations for r in self.results)

    def rows(self):
        """Trace rows of every stage, numbered consecutively."""
        rows, offset, elapsed = [], 0, 0.0
        for stage, result in zip(self.stages, self.results):
            for row in result.trace.rows():
                row["iteration"] = offset + row.pop("k")
                row["elapsed"] += elapsed
                row["stage"] = stage
                rows.append(row)
            if result.trace.records:
                offset += result.trace.records[-1].k + 1
                elapsed += result.trace.records[-1].elapsed
        return rows


class Benchmark:
    """A generated problem together with its data, ground truth and the
    solver settings that fit it."""

    def __init__(self, name, problem, convex=True, config=None, truth=None, data=None):
        self.name = name
        self.problem = problem
        self.convex = convex
        self.config = dict(config or {})
        self.truth = truth or {}
        self.data = data or {}

    def __repr__(self):
        return f"Benchmark({self.name})"

    def split(self):
        return self.problem.split()

    def solver_config(self, **overrides):
        settings = dict(self.config)
        settings.update({k: v for k, v in overrides.items() if v is not None})
        return SolverConfig(**settings)

    def check_solver(self, solver):
        get_solver(solver)
        if solver == "fpg" and not self.convex:
            raise DomainError(
                f"fpg needs a convex problem and {self.name} is nonconvex"
            )

    def _solve(self, problem, solver, config, x0=None, reference=None):
        split_problem = problem.split()
        start = split_problem.x0 if x0 is None else x0
        if reference is not None:
            reference = self.point(split_problem, reference)
        return split_problem, get_solver(solver)(
            split_problem.f, split_problem.g, start, config, reference
        )

    def outputs(self, split_problem, x):
        if isinstance(x, SignalTuple):
            return dict(zip(split_problem.names, x))
        return {split_problem.names[0]: x}

    def point(self, split_problem, solution):
        """The solver-space point holding the named ``solution`` variables."""
        parts = [solution[name] for name in split_problem.names]
        if isinstance(split_problem.x0, SignalTuple):
            return SignalTuple(parts)
        return parts[0]

    def solve(self, solver="panoc", config=None, reference=None):
        self.check_solver(solver)
        config = config or self.solver_config()
        split_problem, result = self._solve(self.problem, solver, config, reference=reference)
        return BenchRun(
            self.outputs(split_problem, result.solution), [result], result.status, [self.name]
        )

    @property
    def has_reference(self):
        return True

    def reference_solution(self, tol=1e-12, max_iters=10**6):
        """High-accuracy solution used for normalized errors, named like the
        outputs of ``solve``: FPG on convex problems, PANOC otherwise."""
        solver = "fpg" if self.convex else "panoc"
        config = self.solver_config(tol=tol, max_iters=max_iters, log_every=0)
        split_problem, result = self._solve(self.problem, solver, config)
        if not result.converged:
            logger.warning(
                "%s reference stopped at %d iterations before reaching %g",
                self.name, result.iterations, tol,
            )
        return self.outputs(split_problem, result.solution)


def _lasso_problem(A_op, y, lam):
    problem = Problem()
    problem.add_variable("x", A_op.domain.shape, A_op.domain.field)
    problem.add_term(least_squares(None, y), {"x": A_op})
    problem.add_term(l1_norm(lam), "x")
    return problem


def gen_lasso(n=1000, seed=0):
    """LASSO with a sparse ``n/5 x n`` matrix holding ``n/4`` standard
    normal nonzeros, ``lambda = 1e-3 ||A^T y||_inf``."""
    if n < 20:
        raise DomainError("gen_lasso needs n >= 20")
    rng = np.random.default_rng(seed)
    m = n // 5
    nnz = n // 4
    A = scipy.sparse.random(
        m, n, density=nnz / (m * n), format="csr",
        random_state=rng, data_rvs=rng.standard_normal,
    )
    y = rng.standard_normal(m)
    lam = 1e-3 * norm_inf(A.T @ y)
    lipschitz = float(scipy.linalg.svdvals(A.toarray())[0] ** 2)
    return Benchmark(
        "lasso",
        _lasso_problem(matrix_op(A), y, lam),
        config={"lipschitz": lipschitz},
        data={"A": A, "y": y, "lam": lam},
    )


def gen_sparse_deconv(fs=4000, seed=0, snr_db=20.0, taps=64, spikes=None, lam_factor=1e-2):
    """Recover a sparse spike train of length ``fs/2`` from its noisy
    convolution with a random decaying FIR filter."""
    rng = np.random.default_rng(seed)
    n = fs // 2
    h = rng.standard_normal(taps) * np.exp(-np.arange(taps) / (taps / 4.0))
    h /= norm2(h)
    spikes = max(1, n // 100) if spikes is None else spikes
    x_true = np.zeros(n)
    support = rng.choice(n, spikes, replace=False)
    x_true[support] = rng.uniform(1.0, 2.0, spikes) * rng.choice([-1.0, 1.0], spikes)
    H = conv_op(h, n)
    clean = H(x_true)
    power = float(np.mean(clean**2))
    noise_std = math.sqrt(power / 10.0 ** (snr_db / 10.0))
    y = clean + noise_std * rng.standard_normal(clean.shape)
    lam = lam_factor * norm_inf(H.adjoint(y))
    # sup of |H(w)|^2 on a fine grid bounds the operator norm from below by
    # at most the grid error, hence the margin
    nfft = 8 * scipy.fft.next_fast_len(n + taps)
    lipschitz = 1.01 * float(np.max(np.abs(scipy.fft.rfft(h, nfft)) ** 2))
    return Benchmark(
        "sparse-deconv",
        _lasso_problem(H, y, lam),
        config={"lipschitz": lipschitz},
        truth={"x": x_true},
        data={"h": h, "y": y, "lam": lam, "noise_std": noise_std},
    )


class LineSpectraBenchmark(Benchmark):
    """Convex relaxation (``l1``) followed by the ``l0``-constrained problem
    warm-started at the relaxed solution."""

    def __init__(self, relaxed, constrained, **kwargs):
        super().__init__("line-spectra", relaxed, convex=False, **kwargs)
        self.constrained = constrained

    @property
    def has_reference(self):
        return False

    def solve(self, solver="panoc", config=None, reference=None):
        self.check_solver(solver)
        config = config or self.solver_config()
        _, relaxed = self._solve(self.problem, solver, config)
        split_problem, constrained = self._solve(
            self.constrained, solver, config, x0=relaxed.solution
        )
        # the forward-backward point of the last iterate lies in the l0 ball
        gamma = constrained.trace.records[-1].gamma
        x = pg_step(split_problem.f, split_problem.g, constrained.solution, gamma)[0]
        solution = {"x_relaxed": relaxed.solution[0], "x": x}
        return BenchRun(
            solution, [relaxed, constrained], constrained.status, ["relaxed", "constrained"]
        )


def gen_line_spectra(n=256, s=6, N=4, seed=0, lam_factor=0.05, noise_std=0.01):
    """Estimate ``N`` sinusoids from ``n`` samples on a frequency grid
    refined ``s`` times.

    The unknown holds the positive half of the refined spectrum, so each
    sinusoid is a single nonzero; planted frequencies are at least two DFT
    bins apart.
    """
    rng = np.random.default_rng(seed)
    sn = s * n
    half = sn // 2
    slots = np.arange(1, half // (3 * s))
    if len(slots) < N:
        raise DomainError(f"gen_line_spectra: n={n} is too short for {N} separated sinusoids")
    pad = select_op(np.arange(half), sn, COMPLEX).H
    A = compose(select_op(np.arange(n), sn), compose(idft_op(sn, real_output=True), pad))
    x_true = np.zeros(half, dtype=complex)
    bins = rng.choice(slots, N, replace=False) * 3 * s + rng.integers(0, s, N)
    amplitudes = rng.uniform(1.0, 2.0, N) * np.exp(2j * np.pi * rng.uniform(size=N))
    x_true[bins] = math.sqrt(sn) * amplitudes
    y = A(x_true) + noise_std * rng.standard_normal(n)
    lam = lam_factor * norm_inf(A.adjoint(y))
    relaxed = _lasso_problem(A, y, lam)
    constrained = Problem()
    constrained.add_variable("x", half, COMPLEX)
    constrained.add_term(least_squares(None, y), {"x": A})
    constrained.add_constraint(ball_l0(N), "x")
    return LineSpectraBenchmark(
        relaxed,
        constrained,
        config={"lipschitz": 1.0},
        truth={"x": x_true, "bins": np.sort(bins)},
        data={"y": y, "lam": lam, "A": A, "N": N},
    )


class TvDenoiseBenchmark(Benchmark):
    """The Fenchel dual of total variation de-noising; the primal image is
    recovered from the dual solution."""

    def outputs(self, split_problem, u):
        return {"u": u, "x": self.problem.to_primal(u)}

    def primal_objective(self, X):
        V = self.data["V"]
        return 0.5 * norm2(X - self.data["y"]) ** 2 + self.data["g"](V(X))


def gen_tv_denoise(n=128, m=128, seed=0, lam=0.1, noise_std=0.1, blocks=4):
    """Piecewise-constant ``n x m`` image plus Gaussian noise."""
    rng = np.random.default_rng(seed)
    image = np.zeros((n, m))
    for _ in range(blocks):
        r0, c0 = rng.integers(0, n // 2), rng.integers(0, m // 2)
        r1, c1 = rng.integers(r0 + 1, n + 1), rng.integers(c0 + 1, m + 1)
        image[r0:r1, c0:c1] += rng.uniform(0.2, 1.0)
    Y = image + noise_std * rng.standard_normal((n, m))
    V = variation_op(n, m)
    g = mixed_l21_norm(lam)
    dual = fenchel_dual(least_squares(None, Y), g, V)
    return TvDenoiseBenchmark(
        "tv-denoise",
        dual,
        # ||V||^2 <= 8 for forward differences in two directions
        config={"lipschitz": 8.0},
        truth={"x": image},
        data={"y": Y, "V": V, "g": g, "lam": lam},
    )


class RobustPcaBenchmark(Benchmark):
    """Robust PCA; the background is returned projected onto the rank-one
    matrices."""

    def outputs(self, split_problem, x):
        solution = super().outputs(split_problem, x)
        solution["L"] = rank_ball(1).prox(solution["L"], 1.0)
        return solution


def gen_robust_pca(n=64, m=64, l=30, seed=0, lam=0.1, density=0.05, noise_std=0.0):
    """Rank-one background plus a sparse foreground, one vectorized
    ``n x m`` frame per column."""
    rng = np.random.default_rng(seed)
    background = rng.uniform(0.2, 1.0, n * m)
    L_true = np.outer(background, np.ones(l))
    mask = rng.uniform(size=(n * m, l)) < density
    S_true = np.where(mask, rng.uniform(2.0, 3.0, (n * m, l)), 0.0)
    Y = L_true + S_true + noise_std * rng.standard_normal((n * m, l))
    problem = Problem()
    problem.add_variable("L", (n * m, l))
    problem.add_variable("S", (n * m, l))
    problem.add_term(least_squares(None, Y), {"L": None, "S": None})
    problem.add_term(l1_norm(lam), "S")
    problem.add_constraint(rank_ball(1), "L")
    return RobustPcaBenchmark(
        "robust-pca",
        problem,
        convex=False,
        # ||[Id, Id]||^2 = 2
        config={"lipschitz": 2.0},
        truth={"L": L_true, "S": S_true},
        data={"y": Y, "lam": lam},
    )


class DeclipBenchmark(Benchmark):
    """Continuation over the number ``N`` of active DCT components, stopped
    once ``||idct(x) - y|| <= eps``."""

    def __init__(self, make_problem, schedule, eps, **kwargs):
        super().__init__("declip", make_problem(schedule[0]), convex=False, **kwargs)
        self.make_problem = make_problem
        self.schedule = list(schedule)
        self.eps = eps

    @property
    def has_reference(self):
        return False

    def solve(self, solver="panoc", config=None, reference=None):
        self.check_solver(solver)
        config = config or self.solver_config()
        idct = idct_op(len(self.data["y"]))
        results, stages, errors = [], [], []
        x0, status, solution = None, MAX_ITERS, {}
        for N in self.schedule:
            split_problem, result = self._solve(self.make_problem(N), solver, config, x0=x0)
            # constraints are indicators: project the iterate onto them
            x, y = split_problem.g.prox(result.solution, 1.0)
            results.append(result)
            stages.append(f"N={N}")
            misfit = norm2(idct(x) - y)
            solution = {"x": x, "y": y, "N": N, "misfit": misfit}
            if "y" in self.truth:
                clipped = self.data["clipped"]
                errors.append(norm2(y[clipped] - self.truth["y"][clipped]))
            logger.info("declip N=%d misfit %.3e", N, misfit)
            if misfit <= self.eps:
                status = CONVERGED
                break
            x0 = SignalTuple([x, y])
        solution["clipped_errors"] = errors
        return BenchRun(solution, results, status, stages)


def gen_declip(n=1024, C=None, seed=0, eps=None, active=60, step=30):
    """A DCT-sparse frame clipped at ``+-C``; by default ``C`` clips about
    a quarter of the samples and ``eps = 1e-5 n``."""
    rng = np.random.default_rng(seed)
    coefficients = np.zeros(n)
    support = rng.choice(n // 4, min(active, n // 4), replace=False)
    coefficients[support] = rng.standard_normal(len(support))
    idct = idct_op(n)
    y_true = idct(coefficients)
    if C is None:
        C = float(np.quantile(np.abs(y_true), 0.75))
    if not C > 0:
        raise DomainError("the clip level must be positive")
    eps = 1e-5 * n if eps is None else eps
    y_clip = np.clip(y_true, -C, C)
    reliable = np.flatnonzero(np.abs(y_clip) < C)
    plus = np.flatnonzero(y_clip >= C)
    minus = np.flatnonzero(y_clip <= -C)

    def make_problem(N):
        problem = Problem()
        problem.add_variable("x", n, init=scipy.fft.dct(y_clip, norm="ortho"))
        problem.add_variable("y", n, init=y_clip)
        problem.add_term(
            least_squares(None, np.zeros(n)), {"x": idct, "y": scale_op(-1.0, n)}
        )
        problem.add_constraint(
            translate(ball_l2(math.sqrt(eps)), -y_clip[reliable]),
            {"y": select_op(reliable, n)},
        )
        problem.add_constraint(halfspace_ge(C), {"y": select_op(plus, n)})
        problem.add_constraint(halfspace_le(C), {"y": select_op(minus, n)})
        problem.add_constraint(ball_l0(N), "x")
        return problem

    schedule = list(range(step, step * (n // step) + 1, step))
    logger.debug("declip: %d of %d samples clipped at %g", len(plus) + len(minus), n, C)
    return DeclipBenchmark(
        make_problem,
        schedule,
        eps,
        # ||[idct, -Id]||^2 = 2
        config={"lipschitz": 2.0},
        truth={"y": y_true, "x": coefficients},
        data={
            "y": y_clip,
            "C": C,
            "eps": eps,
            "clipped": np.concatenate([plus, minus]),
            "reliable": reliable,
        },
    )


def dnn_dag(D, hidden=(4, 4)):
    """Three sigmoid layers ``S(W3 S(W2 S(W1 D + b1) + b2) + b3)`` over the
    inputs ``(W1, b1, W2, b2, W3, b3)``."""
    features, n_points = D.shape
    h1, h2 = hidden
    spaces = [(h1, features), (h1,), (h2, h1), (h2,), (1, h2), (1,)]
    W1, b1, W2, b2, W3, b3 = slots = inputs(*spaces)
    z1 = node(hcat([rmatmul_op(D, h1), broadcast_op(h1, n_points)]), W1, b1)
    l1 = node(sigmoid_op((h1, n_points)), z1)
    p2 = node(output_mul(identity_op((h2, h1)), identity_op((h1, n_points))), W2, l1)
    z2 = node(hcat([identity_op((h2, n_points)), broadcast_op(h2, n_points)]), p2, b2)
    l2 = node(sigmoid_op((h2, n_points)), z2)
    p3 = node(output_mul(identity_op((1, h2)), identity_op((h2, n_points))), W3, l2)
    z3 = node(hcat([identity_op((1, n_points)), broadcast_op(1, n_points)]), p3, b3)
    out = node(sigmoid_op((1, n_points)), z3)
    return OpDag(out, slots), spaces


DNN_VARIABLES = ("W1", "b1", "W2", "b2", "W3", "b3")


def gen_dnn(n_points=200, seed=0, hidden=(4, 4), lam=1e-2):
    """Two-class points in the plane (a disc and a surrounding ring) with a
    cross-entropy loss and ``l1`` penalties on the weight matrices."""
    if n_points < 2:
        raise DomainError("gen_dnn needs at least two points")
    rng = np.random.default_rng(seed)
    half = n_points // 2
    radius = np.concatenate(
        [rng.uniform(0.0, 1.0, half), rng.uniform(1.5, 2.5, n_points - half)]
    )
    angle = rng.uniform(0.0, 2.0 * np.pi, n_points)
    D = np.vstack([radius * np.cos(angle), radius * np.sin(angle)])
    labels = np.concatenate([np.zeros(half), np.ones(n_points - half)])[None, :]
    dag, spaces = dnn_dag(D, hidden)
    # weights drawn with the spread of the data they multiply
    scales = [1.0 / (np.std(D) * math.sqrt(D.shape[0])), 0.1]
    scales += [1.0 / math.sqrt(hidden[0]), 0.1, 1.0 / math.sqrt(hidden[1]), 0.1]
    problem = Problem()
    for name, shape, scale in zip(DNN_VARIABLES, spaces, scales):
        problem.add_variable(name, shape, init=scale * rng.standard_normal(shape))
    problem.add_term(cross_entropy(labels), dag, over=list(DNN_VARIABLES))
    for name in ("W1", "W2", "W3"):
        problem.add_term(l1_norm(lam), name)
    return Benchmark(
        "dnn",
        problem,
        convex=False,
        config={"lipschitz_mode": ADAPTIVE},
        data={"D": D, "labels": labels, "dag": dag, "lam": lam},
    )


GENERATORS = {
    "lasso": gen_lasso,
    "sparse-deconv": gen_sparse_deconv,
    "line-spectra": gen_line_spectra,
    "tv-denoise": gen_tv_denoise,
    "robust-pca": gen_robust_pca,
    "declip": gen_declip,
    "dnn": gen_dnn,
}


def generate(name, seed=0, **params):
    try:
        generator = GENERATORS[name]
    except KeyError:
        raise ConfigurationError(
            f"unknown problem {name!r}, expected one of {', '.join(GENERATORS)}"
        ) from None
    return generator(seed=seed, **{k: v for k, v in params.items() if v is not None})
