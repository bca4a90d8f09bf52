#!/usr/bin/python3
# -*- coding: utf-8 -*-
# vim: set ts=4
#
# Copyright 2024-present proxkit contributors
#
# SPDX-License-Identifier: MIT

"""
Function library: proximable functions (``ProxFn``), the calculus rules
that build new proximable functions out of existing ones, and smooth
functions with gradients (``SmoothFn``).

``ProxFn.prox(x, gamma)`` returns a minimizer of
``g(z) + ||z - x||^2 / (2 gamma)``. Scale parameters ``lam`` enter every
formula as ``gamma * lam``.
"""

import logging
import math

import numpy as np
import scipy.linalg

from proxkit.exceptions import DomainError, ShapeMismatchError
from proxkit.fao import IdentityOp, LinearOp, OpDag, dag_backward, dag_forward
from proxkit.tensor import SignalTuple, as_signal, inner, norm2, space_of

logger = logging.getLogger(__name__)

# slack used when deciding membership of a set
FEASIBILITY_TOL = 1e-9
CROSS_ENTROPY_EPS = 1e-12


def _check_gamma(gamma):
    if not gamma > 0:
        raise DomainError(f"stepsize gamma must be positive, got {gamma}")


def _check_scale(name, value):
    if value < 0:
        raise DomainError(f"{name} must be nonnegative, got {value}")
    return float(value)


def _indicator(feasible):
    return 0.0 if feasible else math.inf


class ProxFn:
    """Possibly nonsmooth, extended-real valued function with a proximal
    mapping."""

    is_convex = True
    is_separable = False

    def __call__(self, x):
        raise NotImplementedError

    def prox(self, x, gamma):
        _check_gamma(gamma)
        if isinstance(x, SignalTuple):
            return self._prox(x, gamma)
        return self._prox(as_signal(x), gamma)

    def _prox(self, x, gamma):
        raise NotImplementedError

    def conjugate_value(self, u):
        raise DomainError(f"{type(self).__name__} has no closed-form conjugate")

    def __repr__(self):
        return f"{type(self).__name__}()"


class SmoothFn:
    """Differentiable function; ``lipschitz`` is a known Lipschitz constant
    of the gradient, if any."""

    is_convex = True
    lipschitz = None
    strong_convexity = 0.0

    def __call__(self, x):
        raise NotImplementedError

    def gradient(self, x):
        return self.value_and_gradient(x)[1]

    def value_and_gradient(self, x):
        return self(x), self.gradient(x)

    def conjugate(self):
        raise DomainError(f"{type(self).__name__} has no closed-form conjugate")

    def __repr__(self):
        return f"{type(self).__name__}()"


# Prox catalog


class Zero(ProxFn):
    is_separable = True

    def __call__(self, x):
        return 0.0

    def _prox(self, x, gamma):
        return x

    def conjugate_value(self, u):
        return _indicator(norm2(u) <= FEASIBILITY_TOL)


class NormL1(ProxFn):
    """``lam * ||x||_1``; on complex signals the modulus is shrunk and the
    phase kept."""

    is_separable = True

    def __init__(self, lam=1.0):
        self.lam = _check_scale("lam", lam)

    def __repr__(self):
        return f"NormL1(lam={self.lam})"

    def __call__(self, x):
        return self.lam * float(np.sum(np.abs(x)))

    def _prox(self, x, gamma):
        t = gamma * self.lam
        if np.iscomplexobj(x):
            modulus = np.abs(x)
            scale = np.maximum(modulus - t, 0.0)
            return np.where(modulus > 0, x * scale / np.where(modulus > 0, modulus, 1.0), 0.0)
        return np.sign(x) * np.maximum(np.abs(x) - t, 0.0)

    def conjugate_value(self, u):
        bound = self.lam * (1.0 + FEASIBILITY_TOL) + FEASIBILITY_TOL
        return _indicator(np.all(np.abs(u) <= bound))


class NormL0(ProxFn):
    """``lam * ||x||_0``; entries at the threshold are set to zero."""

    is_convex = False
    is_separable = True

    def __init__(self, lam=1.0):
        self.lam = _check_scale("lam", lam)

    def __call__(self, x):
        return self.lam * float(np.count_nonzero(x))

    def _prox(self, x, gamma):
        threshold = math.sqrt(2.0 * gamma * self.lam)
        return np.where(np.abs(x) > threshold, x, 0.0).astype(x.dtype)


class NormL2(ProxFn):
    """``lam * ||x||_2``."""

    def __init__(self, lam=1.0):
        self.lam = _check_scale("lam", lam)

    def __call__(self, x):
        return self.lam * norm2(x)

    def _prox(self, x, gamma):
        t = gamma * self.lam
        n = norm2(x)
        if n <= t:
            return np.zeros_like(x)
        return (1.0 - t / n) * x

    def conjugate_value(self, u):
        return _indicator(norm2(u) <= self.lam * (1.0 + FEASIBILITY_TOL) + FEASIBILITY_TOL)


class NormNuclear(ProxFn):
    """``lam * sum of singular values``."""

    def __init__(self, lam=1.0):
        self.lam = _check_scale("lam", lam)

    def __call__(self, x):
        return self.lam * float(np.sum(scipy.linalg.svdvals(x)))

    def _prox(self, x, gamma):
        u, s, vh = scipy.linalg.svd(x, full_matrices=False)
        s = np.maximum(s - gamma * self.lam, 0.0)
        return (u * s) @ vh

    def conjugate_value(self, u):
        top = scipy.linalg.svdvals(u)[0] if u.size else 0.0
        return _indicator(top <= self.lam * (1.0 + FEASIBILITY_TOL) + FEASIBILITY_TOL)


class NormL21(ProxFn):
    """``lam * sum_i ||X[i, :]||_2``, the sum of the row norms."""

    def __init__(self, lam=1.0):
        self.lam = _check_scale("lam", lam)

    def _rows(self, x):
        return x.reshape(x.shape[0], -1)

    def __call__(self, x):
        return self.lam * float(np.sum(np.linalg.norm(self._rows(x), axis=1)))

    def _prox(self, x, gamma):
        rows = self._rows(x)
        norms = np.linalg.norm(rows, axis=1, keepdims=True)
        t = gamma * self.lam
        scale = np.where(norms > t, 1.0 - t / np.where(norms > 0, norms, 1.0), 0.0)
        return (scale * rows).reshape(x.shape)

    def conjugate_value(self, u):
        norms = np.linalg.norm(self._rows(u), axis=1)
        bound = self.lam * (1.0 + FEASIBILITY_TOL) + FEASIBILITY_TOL
        return _indicator(np.all(norms <= bound))


class LeastSquaresQuadratic(ProxFn, SmoothFn):
    """``1/2 ||A x - b||^2`` for an explicit matrix ``A``, with the
    closed-form proximal mapping."""

    def __init__(self, A, b):
        self.A = as_signal(A)
        self.b = as_signal(b)
        self.AhA = self.A.conj().T @ self.A
        self.Ahb = self.A.conj().T @ self.b
        self.lipschitz = float(scipy.linalg.svdvals(self.A)[0] ** 2)

    def __call__(self, x):
        return 0.5 * norm2(self.A @ x - self.b) ** 2

    def gradient(self, x):
        return self.A.conj().T @ (self.A @ x - self.b)

    def value_and_gradient(self, x):
        r = self.A @ x - self.b
        return 0.5 * norm2(r) ** 2, self.A.conj().T @ r

    def _prox(self, x, gamma):
        lhs = self.AhA + np.eye(self.AhA.shape[0]) / gamma
        z = scipy.linalg.solve(lhs, self.Ahb + x / gamma, assume_a="pos")
        return z if np.iscomplexobj(x) or np.iscomplexobj(self.A) else z.real


class IndBallL0(ProxFn):
    """Indicator of ``{x : ||x||_0 <= m}``; among equal magnitudes the lowest
    indices are kept."""

    is_convex = False

    def __init__(self, m):
        if m < 0:
            raise DomainError("ball_l0 radius must be nonnegative")
        self.m = int(m)

    def __call__(self, x):
        return _indicator(np.count_nonzero(x) <= self.m)

    def _prox(self, x, gamma):
        flat = x.ravel()
        if self.m >= flat.size:
            return x.copy()
        keep = np.argsort(-np.abs(flat), kind="stable")[: self.m]
        z = np.zeros_like(flat)
        z[keep] = flat[keep]
        return z.reshape(x.shape)


class IndBallL2(ProxFn):
    """Indicator of ``{x : ||x||_2 <= r}``."""

    def __init__(self, r=1.0):
        self.r = _check_scale("r", r)

    def __call__(self, x):
        return _indicator(norm2(x) <= self.r * (1.0 + FEASIBILITY_TOL) + FEASIBILITY_TOL)

    def _prox(self, x, gamma):
        n = norm2(x)
        if n <= self.r:
            return x
        return (self.r / n) * x

    def conjugate_value(self, u):
        return self.r * norm2(u)


class IndBox(ProxFn):
    """Indicator of ``{x : lower <= x <= upper}`` (componentwise)."""

    is_separable = True

    def __init__(self, lower=-math.inf, upper=math.inf):
        self.lower = as_signal(lower)
        self.upper = as_signal(upper)
        if np.any(self.lower > self.upper):
            raise DomainError("box needs lower <= upper")

    def __repr__(self):
        return f"IndBox({self.lower}, {self.upper})"

    def __call__(self, x):
        slack = FEASIBILITY_TOL * (1.0 + np.abs(x))
        return _indicator(
            np.all(x >= self.lower - slack) and np.all(x <= self.upper + slack)
        )

    def _prox(self, x, gamma):
        return np.clip(x, self.lower, self.upper)

    def conjugate_value(self, u):
        with np.errstate(invalid="ignore"):
            up = np.where(u > 0, self.upper * u, 0.0)
            down = np.where(u < 0, self.lower * u, 0.0)
        return float(np.sum(up) + np.sum(down))


class IndRankBall(ProxFn):
    """Indicator of ``{X : rank(X) <= m}``."""

    is_convex = False

    def __init__(self, m):
        if m < 0:
            raise DomainError("rank_ball needs a nonnegative rank")
        self.m = int(m)

    def __call__(self, x):
        s = scipy.linalg.svdvals(x)
        if s.size == 0 or s[0] == 0:
            return 0.0
        rank = int(np.sum(s > s[0] * max(x.shape) * np.finfo(float).eps * 1e3))
        return _indicator(rank <= self.m)

    def _prox(self, x, gamma):
        if self.m >= min(x.shape):
            return x.copy()
        u, s, vh = scipy.linalg.svd(x, full_matrices=False)
        s[self.m :] = 0.0
        return (u * s) @ vh


class IndAffineSet(ProxFn):
    """Indicator of ``{x : A x = b}`` for ``A`` with full row rank."""

    def __init__(self, A, b):
        self.A = as_signal(A)
        self.b = as_signal(b)
        self._gram = scipy.linalg.cho_factor(self.A @ self.A.conj().T)

    def __call__(self, x):
        residual = norm2(self.A @ x - self.b)
        return _indicator(residual <= FEASIBILITY_TOL * (1.0 + norm2(self.b)))

    def _prox(self, x, gamma):
        correction = scipy.linalg.cho_solve(self._gram, self.b - self.A @ x)
        z = x + self.A.conj().T @ correction
        return z if np.iscomplexobj(x) else z.real


# Prox calculus


class SeparableSum(ProxFn):
    """``sum_i h_i(x_i)`` over disjoint parts of the argument.

    For a ``SignalTuple`` argument, ``partition[i]`` is the list of tuple
    components handed to ``fns[i]`` (a single component is passed as a
    plain signal). For a plain signal, ``partition[i]`` is an index array
    into the flattened signal. Uncovered entries are left free.
    """

    is_separable = True

    def __init__(self, fns, partition=None):
        self.fns = list(fns)
        if partition is None:
            partition = [[i] for i in range(len(self.fns))]
        if len(partition) != len(self.fns):
            raise DomainError("separable_sum needs one part per function")
        self.partition = [
            [p] if isinstance(p, (int, np.integer)) else p for p in partition
        ]
        seen = set()
        for part in self.partition:
            items = set(np.asarray(part).ravel().tolist())
            if seen & items:
                raise DomainError("separable_sum parts must be disjoint")
            seen |= items
        self.is_convex = all(fn.is_convex for fn in self.fns)

    def __repr__(self):
        return "SeparableSum(%s)" % ", ".join(repr(fn) for fn in self.fns)

    def _parts(self, x):
        if isinstance(x, SignalTuple):
            for fn, part in zip(self.fns, self.partition):
                if len(part) == 1:
                    yield fn, x[part[0]]
                else:
                    yield fn, SignalTuple(x[i] for i in part)
        else:
            flat = x.ravel()
            for fn, part in zip(self.fns, self.partition):
                yield fn, flat[np.asarray(part, dtype=np.intp)]

    def __call__(self, x):
        if not isinstance(x, SignalTuple):
            x = as_signal(x)
        return float(sum(fn(p) for fn, p in self._parts(x)))

    def _prox(self, x, gamma):
        if isinstance(x, SignalTuple):
            items = list(x)
            for (fn, p), part in zip(self._parts(x), self.partition):
                z = fn.prox(p, gamma)
                if len(part) == 1:
                    items[part[0]] = z
                else:
                    for i, zi in zip(part, z):
                        items[i] = zi
            return SignalTuple(items)
        out = x.copy().ravel()
        for (fn, p), part in zip(self._parts(x), self.partition):
            out[np.asarray(part, dtype=np.intp)] = fn.prox(p, gamma)
        return out.reshape(x.shape)

    def conjugate_value(self, u):
        if not isinstance(u, SignalTuple):
            u = as_signal(u)
            covered = np.zeros(u.size, dtype=bool)
            for part in self.partition:
                covered[np.asarray(part, dtype=np.intp)] = True
            if np.any(np.abs(u.ravel()[~covered]) > FEASIBILITY_TOL):
                return math.inf
        else:
            covered = {i for part in self.partition for i in part}
            for i, c in enumerate(u):
                if i not in covered and norm2(c) > FEASIBILITY_TOL:
                    return math.inf
        return float(sum(fn.conjugate_value(p) for fn, p in self._parts(u)))


class Translate(ProxFn):
    """``h(x + b)``."""

    def __init__(self, h, b):
        self.h = h
        self.b = as_signal(b)
        self.is_convex = h.is_convex
        self.is_separable = h.is_separable

    def __call__(self, x):
        return self.h(x + self.b)

    def _prox(self, x, gamma):
        return self.h.prox(x + self.b, gamma) - self.b

    def conjugate_value(self, u):
        return self.h.conjugate_value(u) - inner(u, self.b)


class AffineAddition(ProxFn):
    """``h(x) + <a, x>``."""

    def __init__(self, h, a):
        self.h = h
        self.a = as_signal(a)
        self.is_convex = h.is_convex
        self.is_separable = h.is_separable

    def __call__(self, x):
        return self.h(x) + inner(self.a, x)

    def _prox(self, x, gamma):
        return self.h.prox(x - gamma * self.a, gamma)

    def conjugate_value(self, u):
        return self.h.conjugate_value(u - self.a)


class Postcompose(ProxFn):
    """``a h(x) + b`` with ``a > 0``."""

    def __init__(self, h, a=1.0, b=0.0):
        if not a > 0:
            raise DomainError("postcompose needs a > 0")
        self.h, self.a, self.b = h, float(a), float(b)
        self.is_convex = h.is_convex
        self.is_separable = h.is_separable

    def __call__(self, x):
        return self.a * self.h(x) + self.b

    def _prox(self, x, gamma):
        return self.h.prox(x, self.a * gamma)

    def conjugate_value(self, u):
        return self.a * self.h.conjugate_value(u / self.a) - self.b


class PrecomposeTightFrame(ProxFn):
    """``h(A x)`` for a linear ``A`` with ``A A* = mu Id``, ``mu > 0``."""

    def __init__(self, h, A):
        if not isinstance(A, LinearOp) or not A.tight_frame_mu:
            raise DomainError(
                f"precomposition needs a tight-frame certificate, {A!r} has none"
            )
        self.h, self.A = h, A
        self.mu = float(A.tight_frame_mu)
        self.is_convex = h.is_convex

    def __repr__(self):
        return f"PrecomposeTightFrame({self.h!r}, {self.A!r})"

    def __call__(self, x):
        return self.h(self.A(x))

    def _prox(self, x, gamma):
        ax = self.A(x)
        return x + self.A.adjoint(self.h.prox(ax, self.mu * gamma) - ax) / self.mu


class Regularize(ProxFn):
    """``h(x) + rho/2 ||x - b||^2``."""

    def __init__(self, h, rho, b=None):
        self.h = h
        self.rho = _check_scale("rho", rho)
        self.b = None if b is None else as_signal(b)
        self.is_convex = h.is_convex
        self.is_separable = h.is_separable

    def __call__(self, x):
        shift = x if self.b is None else x - self.b
        return self.h(x) + 0.5 * self.rho * norm2(shift) ** 2

    def _prox(self, x, gamma):
        gamma_t = gamma / (1.0 + gamma * self.rho)
        target = x / gamma if self.b is None else x / gamma + self.rho * self.b
        return self.h.prox(gamma_t * target, gamma_t)


class ConvexConjugate(ProxFn):
    """``h*(u) = sup_x <x, u> - h(x)``; the prox follows from the Moreau
    decomposition."""

    def __init__(self, h):
        if not h.is_convex:
            raise DomainError("convex_conjugate needs a convex function")
        self.h = h
        self.is_separable = h.is_separable

    def __repr__(self):
        return f"ConvexConjugate({self.h!r})"

    def __call__(self, u):
        return self.h.conjugate_value(u)

    def _prox(self, u, gamma):
        return u - gamma * self.h.prox(u / gamma, 1.0 / gamma)

    def conjugate_value(self, x):
        return self.h(x)


# Smooth functions


class Quadratic(ProxFn, SmoothFn):
    """``rho/2 ||x||^2 + <q, x> + c``; smooth and proximable."""

    is_separable = True

    def __init__(self, rho=1.0, q=None, c=0.0):
        self.rho = _check_scale("rho", rho)
        self.q = None if q is None else as_signal(q)
        self.c = float(c)
        self.lipschitz = self.rho
        self.strong_convexity = self.rho

    def __repr__(self):
        return f"Quadratic(rho={self.rho}, c={self.c})"

    def _linear(self, x):
        return 0.0 if self.q is None else inner(self.q, x)

    def __call__(self, x):
        return 0.5 * self.rho * norm2(x) ** 2 + self._linear(x) + self.c

    def gradient(self, x):
        g = self.rho * x
        return g if self.q is None else g + self.q

    def _prox(self, x, gamma):
        shifted = x if self.q is None else x - gamma * self.q
        return shifted / (1.0 + gamma * self.rho)

    def conjugate(self):
        if self.rho == 0:
            raise DomainError("a linear function has no smooth conjugate")
        q = None if self.q is None else -self.q / self.rho
        qq = 0.0 if self.q is None else norm2(self.q) ** 2
        return Quadratic(1.0 / self.rho, q, qq / (2.0 * self.rho) - self.c)

    def conjugate_value(self, u):
        if self.rho > 0:
            return self.conjugate()(u)
        q = np.zeros_like(u) if self.q is None else self.q
        feasible = norm2(u - q) <= FEASIBILITY_TOL * (1.0 + norm2(q))
        return -self.c if feasible else math.inf


class Composition(SmoothFn):
    """``h(A x)`` for a smooth ``h`` and an operator or ``OpDag`` ``A``;
    the gradient is back-propagated through ``A``."""

    def __init__(self, outer, mapping):
        self.outer = outer
        self.mapping = mapping
        self.is_convex = outer.is_convex and mapping.is_linear

    def __repr__(self):
        return f"Composition({self.outer!r}, {self.mapping!r})"

    def _linearize(self, x):
        if isinstance(self.mapping, OpDag):
            evaluation = dag_forward(self.mapping, x)
            unwrap = not isinstance(x, SignalTuple)

            def pullback(g):
                grad = dag_backward(self.mapping, g, evaluation)
                return grad[0] if unwrap else grad

            return evaluation.output, pullback
        return self.mapping.linearize(x)

    def __call__(self, x):
        return self.outer(self.mapping(x))

    def value_and_gradient(self, x):
        y, pullback = self._linearize(x)
        value, g = self.outer.value_and_gradient(y)
        return value, pullback(g)

    def gradient(self, x):
        return self.value_and_gradient(x)[1]

    def gauss_newton(self, x, v):
        """``A* H (A v)`` for a linear mapping, ``H`` the Hessian of the outer
        function at ``A x``."""
        av, pullback = self._linearize(v)
        if isinstance(self.outer, Quadratic):
            return pullback(self.outer.rho * av)
        y = self._linearize(x)[0]
        h = 1e-6 * (1.0 + norm2(y))
        return pullback((self.outer.gradient(y + h * av) - self.outer.gradient(y)) / h)


class LeastSquares(Composition):
    """``1/2 ||A x - y||^2``."""

    def __init__(self, mapping, y):
        y = as_signal(y)
        outer = Quadratic(1.0, -y, 0.5 * norm2(y) ** 2)
        if mapping is None:
            mapping = IdentityOp(space_of(y))
        super().__init__(outer, mapping)
        self.y = y
        if isinstance(mapping, IdentityOp):
            self.lipschitz = 1.0
            self.strong_convexity = 1.0

    def conjugate(self):
        if not isinstance(self.mapping, IdentityOp):
            raise DomainError("least_squares has a closed-form conjugate only for A = Id")
        return self.outer.conjugate()


class CrossEntropy(SmoothFn):
    """``-sum(t log y + (1 - t) log(1 - y))`` for labels ``t``; ``y`` is
    clipped to ``[eps, 1 - eps]`` before the logarithms."""

    def __init__(self, labels, eps=CROSS_ENTROPY_EPS):
        self.labels = as_signal(labels)
        self.eps = eps

    def _clip(self, y):
        y = as_signal(y)
        if y.shape != self.labels.shape:
            raise ShapeMismatchError(
                f"cross_entropy: outputs {y.shape} vs labels {self.labels.shape}"
            )
        return np.clip(y, self.eps, 1.0 - self.eps)

    def __call__(self, y):
        y = self._clip(y)
        t = self.labels
        return -float(np.sum(t * np.log(y) + (1.0 - t) * np.log1p(-y)))

    def gradient(self, y):
        y = as_signal(y)
        clipped = self._clip(y)
        grad = (clipped - self.labels) / (clipped * (1.0 - clipped))
        # flat where the value is clipped
        return np.where(clipped == y, grad, 0.0)


class MoreauEnvelope(SmoothFn):
    """``h^beta(x) = min_z h(z) + ||z - x||^2 / (2 beta)``; its gradient is
    ``(x - prox_{beta h}(x)) / beta``."""

    def __init__(self, h, beta):
        if not beta > 0:
            raise DomainError("moreau_envelope needs beta > 0")
        self.h, self.beta = h, float(beta)
        self.lipschitz = 1.0 / self.beta
        self.is_convex = h.is_convex

    def __repr__(self):
        return f"MoreauEnvelope({self.h!r}, beta={self.beta})"

    def value_and_gradient(self, x):
        p = self.h.prox(x, self.beta)
        value = self.h(p) + norm2(x - p) ** 2 / (2.0 * self.beta)
        return value, (x - p) / self.beta

    def __call__(self, x):
        return self.value_and_gradient(x)[0]


# Constructors


def zero():
    return Zero()


def l1_norm(lam=1.0):
    return NormL1(lam)


def l0_pseudo_norm(lam=1.0):
    return NormL0(lam)


def l2_norm(lam=1.0):
    return NormL2(lam)


def nuclear_norm(lam=1.0):
    return NormNuclear(lam)


def least_squares_quadratic(A, b):
    return LeastSquaresQuadratic(A, b)


def mixed_l21_norm(lam=1.0):
    return NormL21(lam)


def ball_l0(m):
    return IndBallL0(m)


def ball_l2(r=1.0):
    return IndBallL2(r)


def ind_zero():
    return IndBallL2(0.0)


def box(lower=-math.inf, upper=math.inf):
    return IndBox(lower, upper)


def halfspace_ge(c):
    """Indicator of ``{y : y >= c}`` componentwise."""
    return IndBox(c, math.inf)


def halfspace_le(c):
    """Indicator of ``{y : y <= -c}`` componentwise."""
    return IndBox(-math.inf, -np.asarray(c))


def rank_ball(m):
    return IndRankBall(m)


def affine_set(A, b):
    return IndAffineSet(A, b)


def separable_sum(fns, partition=None):
    return SeparableSum(fns, partition)


def translate(h, b):
    return Translate(h, b)


def affine_addition(h, a):
    return AffineAddition(h, a)


def postcompose(h, a=1.0, b=0.0):
    return Postcompose(h, a, b)


def precompose_tight_frame(h, A):
    return PrecomposeTightFrame(h, A)


def regularize(h, rho, b=None):
    return Regularize(h, rho, b)


def convex_conjugate(h):
    return ConvexConjugate(h)


def quadratic(rho=1.0, q=None, c=0.0):
    return Quadratic(rho, q, c)


def sqr_norm(lam=1.0):
    return Quadratic(lam)


def linear(c):
    return Quadratic(0.0, c)


def least_squares(mapping, y):
    return LeastSquares(mapping, y)


def cross_entropy(labels):
    return CrossEntropy(labels)


def moreau_envelope(h, beta):
    return MoreauEnvelope(h, beta)
