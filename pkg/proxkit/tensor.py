#!/usr/bin/python3
# -*- coding: utf-8 -*-
# vim: set ts=4
#
# Copyright 2024-present proxkit contributors
#
# SPDX-License-Identifier: MIT

"""
Signal containers shared by every module.

A signal is a float64 or complex128 ``numpy.ndarray``; its shape is the
array shape. Several signals living in a Cartesian product space are held
in a ``SignalTuple``. Complex signals are treated as real vector spaces of
doubled dimension: ``inner`` returns ``Re <a, b>``.
"""

from dataclasses import dataclass
import logging
import math

import numpy as np

from proxkit.exceptions import ShapeMismatchError, DomainError

logger = logging.getLogger(__name__)

REAL = "real"
COMPLEX = "complex"
FIELDS = {REAL: np.float64, COMPLEX: np.complex128}


def as_signal(x):
    """Return ``x`` as a float64 or complex128 array (no copy when it
    already is one)."""
    if isinstance(x, SignalTuple):
        return x
    x = np.asarray(x)
    if np.iscomplexobj(x):
        return x.astype(np.complex128, copy=False)
    return x.astype(np.float64, copy=False)


def field_of(x):
    return COMPLEX if np.iscomplexobj(x) else REAL


@dataclass(frozen=True)
class Space:
    shape: tuple
    field: str = REAL

    def __post_init__(self):
        if isinstance(self.shape, (int, np.integer)):
            shape = (int(self.shape),)
        else:
            shape = tuple(int(s) for s in self.shape)
        object.__setattr__(self, "shape", shape)
        if self.field not in FIELDS:
            raise DomainError(f"unknown field {self.field!r}")

    @property
    def dtype(self):
        return FIELDS[self.field]

    @property
    def size(self):
        return math.prod(self.shape)

    def zeros(self):
        return np.zeros(self.shape, dtype=self.dtype)

    def random(self, rng):
        x = rng.standard_normal(self.shape)
        if self.field == COMPLEX:
            x = x + 1j * rng.standard_normal(self.shape)
        return x

    def contains(self, x):
        return (
            isinstance(x, np.ndarray)
            and x.shape == self.shape
            and (self.field == COMPLEX or not np.iscomplexobj(x))
        )

    def check(self, x, what="signal"):
        if not self.contains(x):
            got = space_of(x) if isinstance(x, (np.ndarray, SignalTuple)) else x
            raise ShapeMismatchError(f"{what}: expected {self}, got {got}")
        return x


@dataclass(frozen=True)
class ProductSpace:
    spaces: tuple

    def __post_init__(self):
        object.__setattr__(self, "spaces", tuple(self.spaces))

    def __len__(self):
        return len(self.spaces)

    def __iter__(self):
        return iter(self.spaces)

    def __getitem__(self, index):
        return self.spaces[index]

    @property
    def size(self):
        return sum(s.size for s in self.spaces)

    @property
    def field(self):
        if all(s.field == REAL for s in self.spaces):
            return REAL
        return COMPLEX

    def zeros(self):
        return SignalTuple(s.zeros() for s in self.spaces)

    def random(self, rng):
        return SignalTuple(s.random(rng) for s in self.spaces)

    def contains(self, x):
        return (
            isinstance(x, SignalTuple)
            and len(x) == len(self.spaces)
            and all(s.contains(c) for s, c in zip(self.spaces, x))
        )

    def check(self, x, what="signal tuple"):
        if not self.contains(x):
            got = space_of(x) if isinstance(x, (np.ndarray, SignalTuple)) else x
            raise ShapeMismatchError(f"{what}: expected {self}, got {got}")
        return x


def space_of(x):
    if isinstance(x, SignalTuple):
        return ProductSpace(space_of(c) for c in x)
    x = np.asarray(x)
    return Space(x.shape, field_of(x))


class SignalTuple:
    """Ordered collection of signals with vector-space arithmetic.

    Binary operations with numpy scalars fall back to this class because
    ``__array_ufunc__`` is ``None``.
    """

    __slots__ = ("_items",)
    __array_ufunc__ = None

    def __init__(self, items):
        self._items = tuple(as_signal(i) for i in items)

    def __len__(self):
        return len(self._items)

    def __iter__(self):
        return iter(self._items)

    def __getitem__(self, index):
        if isinstance(index, slice):
            return SignalTuple(self._items[index])
        return self._items[index]

    def __repr__(self):
        return "SignalTuple(%s)" % ", ".join(
            f"{space_of(i)}" for i in self._items
        )

    def _pair(self, other):
        if not isinstance(other, SignalTuple) or len(other) != len(self):
            raise ShapeMismatchError(
                f"cannot combine {self!r} with {type(other).__name__}"
            )
        return zip(self._items, other._items)

    def __add__(self, other):
        return SignalTuple(a + b for a, b in self._pair(other))

    def __sub__(self, other):
        return SignalTuple(a - b for a, b in self._pair(other))

    def __neg__(self):
        return SignalTuple(-a for a in self._items)

    def __mul__(self, alpha):
        if isinstance(alpha, SignalTuple):
            return NotImplemented
        return SignalTuple(alpha * a for a in self._items)

    __rmul__ = __mul__

    def __truediv__(self, alpha):
        return SignalTuple(a / alpha for a in self._items)

    def copy(self):
        return SignalTuple(a.copy() for a in self._items)

    def replace(self, index, value):
        items = list(self._items)
        items[index] = value
        return SignalTuple(items)


def _check_pair(a, b):
    if isinstance(a, SignalTuple) or isinstance(b, SignalTuple):
        if not (isinstance(a, SignalTuple) and isinstance(b, SignalTuple)):
            raise ShapeMismatchError("cannot mix a signal and a signal tuple")
        if len(a) != len(b):
            raise ShapeMismatchError(
                f"signal tuples of length {len(a)} and {len(b)}"
            )
        return a, b
    a, b = as_signal(a), as_signal(b)
    if a.shape != b.shape:
        raise ShapeMismatchError(f"shapes {a.shape} and {b.shape} differ")
    if field_of(a) != field_of(b):
        raise ShapeMismatchError(
            f"fields {field_of(a)} and {field_of(b)} differ"
        )
    return a, b


def inner(a, b):
    """Real inner product ``Re <a, b>``; for tuples, the sum of the
    componentwise inner products."""
    a, b = _check_pair(a, b)
    if isinstance(a, SignalTuple):
        return sum((inner(x, y) for x, y in zip(a, b)), 0.0)
    value = float(np.vdot(a, b).real)
    if math.isnan(value):
        raise DomainError("inner product of signals containing NaN")
    return value


def norm2(a):
    if isinstance(a, SignalTuple):
        return math.sqrt(sum(norm2(c) ** 2 for c in a))
    value = float(np.linalg.norm(as_signal(a).ravel()))
    if math.isnan(value):
        raise DomainError("norm of a signal containing NaN")
    return value


def norm_inf(a):
    if isinstance(a, SignalTuple):
        return max((norm_inf(c) for c in a), default=0.0)
    a = as_signal(a)
    if a.size == 0:
        return 0.0
    return float(np.max(np.abs(a)))


def axpy(alpha, x, y):
    """Return ``alpha * x + y``."""
    x, y = _check_pair(x, y)
    return alpha * x + y


def zeros_like(x):
    if isinstance(x, SignalTuple):
        return SignalTuple(np.zeros_like(c) for c in x)
    return np.zeros_like(as_signal(x))


def is_finite(x):
    if isinstance(x, SignalTuple):
        return all(is_finite(c) for c in x)
    return bool(np.all(np.isfinite(x)))


def vec(x):
    """Flatten a signal or a signal tuple into one vector (row-major)."""
    if isinstance(x, SignalTuple):
        parts = [vec(c) for c in x]
        if not parts:
            return np.zeros(0)
        if any(np.iscomplexobj(p) for p in parts):
            parts = [p.astype(np.complex128) for p in parts]
        return np.concatenate(parts)
    return as_signal(x).ravel()


def unvec(v, space):
    """Inverse of ``vec`` for a known space."""
    if isinstance(space, ProductSpace):
        items, offset = [], 0
        for s in space:
            items.append(unvec(v[offset : offset + s.size], s))
            offset += s.size
        return SignalTuple(items)
    out = np.asarray(v[: space.size]).reshape(space.shape)
    if space.field == REAL:
        out = out.real
    return out.astype(space.dtype)
