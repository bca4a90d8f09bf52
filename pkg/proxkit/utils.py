#!/usr/bin/python3
# -*- coding: utf-8 -*-
# vim: set ts=4
#
# Copyright 2024-present proxkit contributors
#
# SPDX-License-Identifier: MIT


import argparse
import gzip
import logging
import os

from configobj import ConfigObj, ConfigObjError
from ruamel.yaml import YAML
from ruamel.yaml.composer import ComposerError
from ruamel.yaml.parser import ParserError
from ruamel.yaml.scanner import ScannerError

from proxkit.exceptions import ConfigurationError

logger = logging.getLogger(__name__)

VARIABLES_PATH = "variables"


def get_context(script_dirname, args_variables, args_overwrite_variables):
    """Merge the variable files (INI first, YAML as fallback) and the
    ``KEY=VALUE`` overrides; keys are upper-cased."""
    context = {}
    for variables in args_variables:
        if not os.path.exists(variables):
            variables = os.path.join(script_dirname, variables)
        if not os.path.exists(variables):
            raise ConfigurationError(f"variables file {variables} does not exist")
        try:
            values = ConfigObj(variables).dict()
        except ConfigObjError as e:
            logger.info(e)
            logger.info("Unable to parse .ini file")
            logger.info("Trying YAML")
            with open(variables, "r") as vars_file:
                try:
                    yaml = YAML(typ="safe")
                    values = yaml.load(vars_file) or {}
                except (ParserError, ComposerError, ScannerError) as e:
                    logger.error(e)
                    raise ConfigurationError(f"unable to parse {variables}") from e
        context.update({str(k).upper(): v for k, v in values.items()})

    for variable in args_overwrite_variables:
        key, sep, value = variable.partition("=")
        if not sep:
            raise ConfigurationError(f"expected KEY=VALUE, got {variable!r}")
        context.update({key.upper(): value})
    return context


def required_variables(script_dirname, problem):
    ref_vars = os.path.join(script_dirname, VARIABLES_PATH, f"{problem}.yaml")
    if not os.path.exists(ref_vars):
        raise ConfigurationError(f"no variable reference for problem {problem!r}")
    with open(ref_vars, "r") as vars_file:
        yaml = YAML(typ="safe")
        return {str(k).upper() for k in yaml.load(vars_file).keys()}


def validate_variables(script_dirname, problem, variables, overwrite_variables):
    context = set(get_context(script_dirname, variables, overwrite_variables).keys())
    var_diff = required_variables(script_dirname, problem).difference(context)
    if var_diff:
        logger.error(f"Mandatory variables missing: {sorted(var_diff)}")
        return 1
    return 0


def context_value(context, key, cast, default=None):
    """``context[key]`` converted with ``cast``; ``default`` when unset."""
    value = context.get(key.upper())
    if value is None or value == "":
        return default
    try:
        return cast(value)
    except (TypeError, ValueError) as e:
        raise ConfigurationError(f"{key}={value!r} is not a valid {cast.__name__}") from e


COMPRESSIONS = {
    ".csv.gz": "gz",
    ".gz": "gz",
    ".csv": None,
}


def compression(path):
    for ext, ret in COMPRESSIONS.items():
        if path.endswith(ext):
            return ret
    return None


def open_output(path, mode="w"):
    """Open a trace file for text I/O, through gzip for ``.gz`` paths."""
    directory = os.path.dirname(os.path.abspath(path))
    if "w" in mode:
        os.makedirs(directory, exist_ok=True)
    if compression(path) == "gz":
        return gzip.open(path, mode + "t", newline="")
    return open(path, mode, newline="")


def sidecar_path(path, suffix=".json"):
    """``trace.csv.gz`` -> ``trace.json``."""
    for ext in COMPRESSIONS:
        if path.endswith(ext):
            return path[: -len(ext)] + suffix
    return path + suffix


class override_action(argparse.Action):
    """Collect ``KEY=VALUE`` pairs, rejecting entries without ``=``."""

    def __call__(self, parser, namespace, values, option_string=None):
        pairs = list(getattr(namespace, self.dest, None) or [])
        for value in values:
            key, sep, _ = value.partition("=")
            if not sep or not key:
                parser.error(f"{option_string} expects KEY=VALUE pairs, got {value!r}")
            pairs.append(value)
        setattr(namespace, self.dest, pairs)
