#!/usr/bin/python3
# -*- coding: utf-8 -*-
# vim: set ts=4
#
# Copyright 2024-present proxkit contributors
#
# SPDX-License-Identifier: MIT


class ProxkitError(Exception):
    pass


class ShapeMismatchError(ProxkitError, ValueError):
    pass


class DomainError(ProxkitError, ValueError):
    pass


class StaleCacheError(ProxkitError):
    pass


class ConfigurationError(ProxkitError):
    pass


class SplittingError(ProxkitError):
    """Raised when a problem cannot be split into a smooth part and a
    part with an efficiently computable proximal mapping.

    ``violations`` holds one dict per failed rule with the keys ``rule``,
    ``term`` and ``variable``.
    """

    def __init__(self, message, violations=()):
        super().__init__(message)
        self.violations = list(violations)


class SolverError(ProxkitError):
    """Raised when a solver meets a non-finite value; ``trace`` holds the
    iterations recorded before the failure."""

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace
