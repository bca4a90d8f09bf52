#!/usr/bin/python3
# -*- coding: utf-8 -*-
# vim: set ts=4
#
# Copyright 2024-present proxkit contributors
#
# SPDX-License-Identifier: MIT

"""
Matrix-free proximal gradient algorithms, proximal operators and benchmarks
"""

__version__ = "0.3.0"

from functools import lru_cache
from pathlib import Path

import jinja2

BASE = Path(__file__).parent.resolve()


@lru_cache(maxsize=None)
def env():
    return jinja2.Environment(
        autoescape=False,
        loader=jinja2.FileSystemLoader([BASE / "templates"], followlinks=True),
        undefined=jinja2.StrictUndefined,
        keep_trailing_newline=True,
        trim_blocks=True,
        lstrip_blocks=True,
    )


def render(template, context):
    return env().get_template(template).render(**context)
