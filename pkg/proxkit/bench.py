#!/usr/bin/python3
# -*- coding: utf-8 -*-
# vim: set ts=4
#
# Copyright 2024-present proxkit contributors
#
# SPDX-License-Identifier: MIT

"""
Benchmark runner: generate, solve, write the trace and its status sidecar.
"""

from concurrent.futures import ThreadPoolExecutor
import csv
from dataclasses import asdict, dataclass, field
import json
import logging
import math
import os

import numpy as np

from proxkit import __version__, render
from proxkit.exceptions import ConfigurationError, ProxkitError
from proxkit.problems import generate
from proxkit.solvers import CONVERGED, SOLVERS
from proxkit.utils import context_value, open_output, sidecar_path

logger = logging.getLogger(__name__)

TRACE_COLUMNS = [
    "iteration",
    "objective",
    "fbe",
    "residual",
    "normalized_error",
    "elapsed",
    "tau",
    "gamma",
    "sigma",
    "backtracks",
    "step_sq",
    "stage",
]

EXIT_CONVERGED = 0
EXIT_ERROR = 1
EXIT_MAX_ITERS = 2

THREADS_ENV = "PROXKIT_THREADS"
REFERENCE_PREFIX = "var_"

# numerical breakdowns are reported like library errors
RUN_ERRORS = (ProxkitError, ArithmeticError, np.linalg.LinAlgError)

# configuration key -> (generator keyword, type)
PARAMETERS = {
    "lasso": {"N": ("n", int)},
    "sparse-deconv": {"FS": ("fs", int), "SNR_DB": ("snr_db", float)},
    "line-spectra": {"N": ("n", int), "S": ("s", int), "N_SINUSOIDS": ("N", int)},
    "tv-denoise": {"N": ("n", int), "M": ("m", int)},
    "robust-pca": {"N": ("n", int), "M": ("m", int), "L": ("l", int)},
    "declip": {"N": ("n", int), "CLIP_LEVEL": ("C", float)},
    "dnn": {"N_POINTS": ("n_points", int)},
}


def params_from_context(problem, context):
    """Generator keywords for ``problem`` found in ``context``; keys of
    other problems are ignored."""
    params = {}
    for key, (name, cast) in PARAMETERS.get(problem, {}).items():
        value = context_value(context, key, cast)
        if value is not None:
            params[name] = value
    return params


@dataclass
class BenchmarkSpec:
    problem: str
    solver: str = "panoc"
    tol: float = 1e-5
    max_iters: int = 10000
    seed: int = 0
    out: str = None
    params: dict = field(default_factory=dict)
    reference: bool = False
    lbfgs_memory: int = None

    def for_solver(self, solver):
        spec = BenchmarkSpec(**asdict(self))
        spec.solver = solver
        if self.out:
            spec.out = solver_trace_path(self.out, solver)
        return spec


def solver_trace_path(path, solver):
    """``trace.csv.gz`` -> ``trace-panoc.csv.gz``."""
    base = sidecar_path(path, "")
    return base + f"-{solver}" + path[len(base):]


def exit_code(status):
    return EXIT_CONVERGED if status == CONVERGED else EXIT_MAX_ITERS


def write_trace(path, rows):
    with open_output(path, "w") as f:
        writer = csv.DictWriter(f, fieldnames=TRACE_COLUMNS, extrasaction="ignore")
        writer.writeheader()
        for row in rows:
            writer.writerow(
                {k: "" if row.get(k) is None else row[k] for k in TRACE_COLUMNS}
            )
    logger.info("trace written to %s", path)


def read_trace(path):
    """Rows of a trace file with numeric columns converted back to float."""
    with open_output(path, "r") as f:
        rows = list(csv.DictReader(f))
    for row in rows:
        for key, value in row.items():
            if key == "stage":
                continue
            row[key] = None if value == "" else float(value)
    return rows


def _finite(value):
    if value is None:
        return None
    value = float(value)
    return value if math.isfinite(value) else str(value)


def summary(spec, bench_run):
    last = bench_run.result.trace.records[-1] if bench_run.result.trace.records else None
    return {
        "version": __version__,
        "spec": asdict(spec),
        "status": bench_run.status,
        "iterations": bench_run.iterations,
        "stages": list(bench_run.stages),
        "objective": _finite(last.objective) if last else None,
        "fbe": _finite(last.fbe) if last else None,
        "residual": _finite(last.residual) if last else None,
        "elapsed": sum(
            r.trace.records[-1].elapsed for r in bench_run.results if r.trace.records
        ),
    }


def write_sidecar(spec, bench_run):
    path = sidecar_path(spec.out)
    with open(path, "w") as f:
        json.dump(summary(spec, bench_run), f, indent=2, sort_keys=True)
        f.write("\n")
    return path


def reference_path(spec):
    directory = os.path.dirname(os.path.abspath(spec.out)) if spec.out else os.getcwd()
    return os.path.join(directory, f"{spec.problem}-seed{spec.seed}.reference.npz")


def _reference_key(spec):
    return json.dumps({"problem": spec.problem, "seed": spec.seed, "params": spec.params},
                      sort_keys=True)


def load_reference(spec, benchmark):
    """High-accuracy solution for the normalized error, cached beside the
    trace and recomputed when the generator parameters differ."""
    if not benchmark.has_reference:
        logger.warning("%s has no single-stage reference solution", spec.problem)
        return None
    path = reference_path(spec)
    key = _reference_key(spec)
    if os.path.exists(path):
        with np.load(path) as cached:
            if str(cached["key"]) == key:
                logger.debug("reference loaded from %s", path)
                return {
                    name[len(REFERENCE_PREFIX):]: cached[name]
                    for name in cached.files
                    if name.startswith(REFERENCE_PREFIX)
                }
        logger.info("stale reference %s, recomputing", path)
    solution = benchmark.reference_solution()
    np.savez(
        path,
        key=key,
        **{REFERENCE_PREFIX + name: value for name, value in solution.items()},
    )
    logger.debug("reference cached in %s", path)
    return solution


def execute(spec, benchmark=None):
    """Solve ``spec`` and return the ``BenchRun``; errors propagate."""
    if spec.solver not in SOLVERS:
        raise ConfigurationError(
            f"unknown solver {spec.solver!r}, expected one of {', '.join(SOLVERS)}"
        )
    if benchmark is None:
        benchmark = generate(spec.problem, spec.seed, **spec.params)
    benchmark.check_solver(spec.solver)
    reference = load_reference(spec, benchmark) if spec.reference else None
    config = benchmark.solver_config(
        tol=spec.tol, max_iters=spec.max_iters, lbfgs_memory=spec.lbfgs_memory
    )
    logger.info("%s with %s (seed %d)", spec.problem, spec.solver, spec.seed)
    bench_run = benchmark.solve(spec.solver, config, reference)
    if spec.out:
        write_trace(spec.out, bench_run.rows())
        write_sidecar(spec, bench_run)
    return bench_run


def run(spec):
    try:
        bench_run = execute(spec)
    except RUN_ERRORS as e:
        logger.error(e)
        return EXIT_ERROR
    return exit_code(bench_run.status)


def compare(spec, solvers=None):
    """Run every solver on the same generated problem concurrently; FPG is
    left out on nonconvex problems. Returns ``{solver: BenchRun or error}``."""
    benchmark = generate(spec.problem, spec.seed, **spec.params)
    solvers = list(solvers or SOLVERS)
    if not benchmark.convex and "fpg" in solvers:
        logger.info("fpg skipped: %s is nonconvex", spec.problem)
        solvers.remove("fpg")
    if spec.reference:
        # computed once, before the workers share the cache file
        load_reference(spec.for_solver(solvers[0]), benchmark)
    threads = context_value(os.environ, THREADS_ENV, int, len(solvers))
    outcomes = {}

    def solve(solver):
        try:
            return execute(spec.for_solver(solver), benchmark)
        except RUN_ERRORS as e:
            logger.error("%s: %s", solver, e)
            return e

    with ThreadPoolExecutor(max_workers=max(1, threads)) as executor:
        for solver, outcome in zip(solvers, executor.map(solve, solvers)):
            outcomes[solver] = outcome
    return outcomes


def compare_exit_code(outcomes):
    codes = [
        EXIT_ERROR if isinstance(o, Exception) else exit_code(o.status)
        for o in outcomes.values()
    ]
    if EXIT_ERROR in codes:
        return EXIT_ERROR
    return max(codes, default=EXIT_CONVERGED)


def dry_run(spec):
    """Generate and split the problem without solving it."""
    try:
        benchmark = generate(spec.problem, spec.seed, **spec.params)
        benchmark.check_solver(spec.solver)
        split_problem = benchmark.split()
    except ProxkitError as e:
        logger.error(e)
        return EXIT_ERROR
    logger.info(
        "%s: %d smooth term(s), %d nonsmooth term(s), variables %s",
        spec.problem,
        len(split_problem.i_f),
        len(split_problem.i_g),
        ", ".join(split_problem.names),
    )
    return EXIT_CONVERGED


def report_rows(outcomes):
    rows = []
    for solver, outcome in outcomes.items():
        if isinstance(outcome, Exception):
            rows.append({"solver": solver, "status": "error", "error": str(outcome)})
            continue
        records = outcome.result.trace.records
        last = records[-1] if records else None
        rows.append(
            {
                "solver": solver,
                "status": outcome.status,
                "iterations": outcome.iterations,
                "objective": last.objective if last else None,
                "residual": last.residual if last else None,
                "elapsed": sum(
                    r.trace.records[-1].elapsed for r in outcome.results if r.trace.records
                ),
            }
        )
    return rows


def render_report(spec, outcomes):
    return render(
        "report.md.j2",
        {
            "version": __version__,
            "spec": asdict(spec),
            "rows": report_rows(outcomes),
        },
    )


def write_report(path, spec, outcomes):
    with open_output(path, "w") as f:
        f.write(render_report(spec, outcomes))
    logger.info("report written to %s", path)
