#!/usr/bin/python3
# -*- coding: utf-8 -*-
# vim: set ts=4
#
# Copyright 2024-present proxkit contributors
#
# SPDX-License-Identifier: MIT

import argparse
import logging
import os
import sys

from proxkit import __version__
from proxkit.bench import (
    EXIT_ERROR,
    RUN_ERRORS,
    BenchmarkSpec,
    compare,
    compare_exit_code,
    dry_run,
    execute,
    params_from_context,
    run,
    write_report,
)
from proxkit.exceptions import ProxkitError
from proxkit.problems import GENERATORS
from proxkit.solvers import SOLVERS
from proxkit.utils import (
    context_value,
    get_context,
    override_action,
    validate_variables,
)

FORMAT = "[%(module)s][%(funcName)16s() %(lineno)d ] %(message)s"
logging.basicConfig(level=logging.INFO, format=FORMAT)
logger = logging.getLogger(__name__)


script_dirname = os.path.dirname(os.path.abspath(__file__))

# command line flag -> configuration key
FLAG_KEYS = {
    "problem": "PROBLEM",
    "solver": "SOLVER",
    "tol": "TOL",
    "max_iters": "MAX_ITERS",
    "seed": "SEED",
    "out": "OUT",
    "lbfgs_memory": "LBFGS_MEMORY",
    "n": "N",
    "s": "S",
    "n_sinusoids": "N_SINUSOIDS",
    "m": "M",
    "l": "L",
    "fs": "FS",
    "snr_db": "SNR_DB",
    "clip_level": "CLIP_LEVEL",
    "n_points": "N_POINTS",
}


def _flag_overrides(args):
    return [
        f"{key}={getattr(args, flag)}"
        for flag, key in FLAG_KEYS.items()
        if getattr(args, flag) is not None
    ]


def build_spec(context, reference=False):
    problem = context_value(context, "PROBLEM", str)
    return BenchmarkSpec(
        problem=problem,
        solver=context_value(context, "SOLVER", str, "panoc"),
        tol=context_value(context, "TOL", float, 1e-5),
        max_iters=context_value(context, "MAX_ITERS", int, 10000),
        seed=context_value(context, "SEED", int, 0),
        out=context_value(context, "OUT", str),
        params=params_from_context(problem, context),
        reference=reference,
        lbfgs_memory=context_value(context, "LBFGS_MEMORY", int),
    )


def main():
    parser = argparse.ArgumentParser(
        prog="proxkit",
        description="Generate a benchmark problem, solve it and write its trace",
    )

    parser.add_argument(
        "--version", action="version", version=f"%(prog)s, {__version__}"
    )
    # configuration
    parser.add_argument(
        "--variables",
        help="Path to file(s) with variable values (INI or YAML)",
        dest="variables",
        nargs="+",
        default=[],
    )
    parser.add_argument(
        "--overwrite-variables",
        help="Key-value pairs overwriting variables from the file",
        nargs="+",
        dest="overwrite_variables",
        action=override_action,
        default=[],
    )
    parser.add_argument(
        "--validate-variables",
        help="Check that the variables the chosen problem needs are all set.",
        action="store_true",
        dest="validate_variables",
    )
    # benchmark
    parser.add_argument(
        "--problem", help=f"One of {', '.join(GENERATORS)}", dest="problem"
    )
    parser.add_argument(
        "--solver", help=f"One of {', '.join(SOLVERS)}", dest="solver"
    )
    parser.add_argument(
        "--tol", help="Tolerance on ||R(x)||_inf / gamma", dest="tol", type=float
    )
    parser.add_argument(
        "--max-iters", help="Iteration limit", dest="max_iters", type=int
    )
    parser.add_argument("--seed", help="Random seed", dest="seed", type=int)
    parser.add_argument(
        "--out",
        help="Trace file (.csv or .csv.gz); a .json status file is written beside it",
        dest="out",
    )
    parser.add_argument(
        "--lbfgs-memory",
        help="L-BFGS memory of PANOC, 0 turns the quasi-Newton directions off",
        dest="lbfgs_memory",
        type=int,
    )
    parser.add_argument(
        "--reference",
        help="""Compute (or reuse) a high-accuracy solution and add the
                        normalized error column to the trace""",
        action="store_true",
        dest="reference",
    )
    parser.add_argument(
        "--compare",
        help="Run every applicable solver concurrently (PROXKIT_THREADS caps the workers)",
        action="store_true",
        dest="compare",
    )
    parser.add_argument(
        "--report",
        help="Write a Markdown summary of the run(s) to this path",
        dest="report",
    )
    parser.add_argument(
        "--dry-run",
        help="Generate and split the problem without solving it",
        action="store_true",
        dest="dryrun",
    )
    # problem sizes
    sizes = parser.add_argument_group("problem sizes")
    sizes.add_argument("--n", help="Signal length / rows", dest="n", type=int)
    sizes.add_argument("--s", help="Line spectra grid refinement", dest="s", type=int)
    sizes.add_argument(
        "--N", help="Number of planted sinusoids", dest="n_sinusoids", type=int
    )
    sizes.add_argument("--m", help="Columns", dest="m", type=int)
    sizes.add_argument("--l", help="Robust PCA frames", dest="l", type=int)
    sizes.add_argument("--fs", help="Deconvolution sampling rate", dest="fs", type=int)
    sizes.add_argument(
        "--snr-db", help="Deconvolution signal to noise ratio", dest="snr_db", type=float
    )
    sizes.add_argument(
        "--clip-level", help="De-clipping level C", dest="clip_level", type=float
    )
    sizes.add_argument(
        "--n-points", help="DNN training points", dest="n_points", type=int
    )
    parser.add_argument(
        "--verbose",
        help="""Verbosity level. Follows logging levels:
                          CRITICAL: 50
                          ERROR: 40
                          WARNING: 30
                          INFO: 20
                          DEBUG: 10
                          NOTSET: 0""",
        dest="verbose",
        type=int,
        default=logging.INFO,
    )
    args = parser.parse_args()
    logging.getLogger("proxkit").setLevel(args.verbose)

    overrides = args.overwrite_variables + _flag_overrides(args)
    try:
        context = get_context(script_dirname, args.variables, overrides)
        spec = build_spec(context, args.reference)
    except ProxkitError as e:
        logger.error(e)
        return EXIT_ERROR
    if spec.problem is None:
        logger.error("No problem given, use --problem or set PROBLEM")
        return EXIT_ERROR
    logger.debug(spec)

    if args.validate_variables:
        try:
            exit_code = validate_variables(
                script_dirname, spec.problem, args.variables, overrides
            )
        except ProxkitError as e:
            logger.error(e)
            return EXIT_ERROR
        if exit_code:
            return exit_code
        logger.info("All variables of %s are set", spec.problem)

    if args.dryrun:
        return dry_run(spec)

    if not args.compare and not args.report:
        return run(spec)

    try:
        outcomes = compare(spec) if args.compare else {spec.solver: execute(spec)}
    except RUN_ERRORS as e:
        logger.error(e)
        return EXIT_ERROR
    if args.report:
        write_report(args.report, spec, outcomes)
    return compare_exit_code(outcomes)


if __name__ == "__main__":
    sys.exit(main())
