#!/usr/bin/python3
# -*- coding: utf-8 -*-
# vim: set ts=4
#
# Copyright 2024-present proxkit contributors
#
# SPDX-License-Identifier: MIT

"""
Problem builder, automatic splitting into ``f + g`` and the duality and
smoothing transforms.

A ``Problem`` holds named variables and terms ``h_i(sum_j A_ij x_j)``.
``split`` sends smooth terms to ``f`` and nonsmooth terms to ``g``, and
checks that ``g`` has an efficiently computable proximal mapping:

- every nonsmooth ``h_i`` is proximable,
- every block ``A_ij`` of a nonsmooth term satisfies ``A A* = mu Id``,
- every variable appears in at most one nonsmooth term.

Nonsmooth terms applied through selections with disjoint supports of the
same variable are merged into one separable term before the check.
"""

from dataclasses import dataclass
import logging

import numpy as np

from proxkit.exceptions import DomainError, ShapeMismatchError, SplittingError
from proxkit.fao import (
    IdentityOp,
    LinearOp,
    Operator,
    OpDag,
    SelectOp,
    ZeroOp,
    dag_backward,
    dag_forward,
    hcat,
)
from proxkit.funcs import (
    Composition,
    ConvexConjugate,
    MoreauEnvelope,
    PrecomposeTightFrame,
    ProxFn,
    SeparableSum,
    SmoothFn,
)
from proxkit.solvers import get_solver
from proxkit.tensor import REAL, ProductSpace, SignalTuple, Space, norm2

logger = logging.getLogger(__name__)

RULE_PROX = "proximable"
RULE_TIGHT_FRAME = "tight-frame"
RULE_CARDINALITY = "cardinality"


@dataclass(frozen=True)
class Variable:
    name: str
    space: Space
    init: np.ndarray


class Term:
    """``fn(A(x_1, ..., x_k))`` over the named ``variables``; ``blocks``
    maps each variable to its operator when the mapping was given per
    variable."""

    def __init__(self, fn, variables, dag, blocks=None):
        self.fn = fn
        self.variables = tuple(variables)
        self.dag = dag
        self.blocks = blocks

    def __repr__(self):
        return f"Term({self.fn!r}, {', '.join(self.variables)})"

    @property
    def smooth(self):
        return isinstance(self.fn, SmoothFn)

    def value(self, parts):
        return self.fn(self.dag(SignalTuple(parts)))


class Problem:
    """Minimize ``sum_i h_i(sum_j A_ij x_j)`` over named variables."""

    def __init__(self):
        self.variables = {}
        self.terms = []

    def add_variable(self, name, shape, field=REAL, init=None):
        if name in self.variables:
            raise DomainError(f"variable {name!r} already defined")
        space = Space(shape, field)
        if init is None:
            init = space.zeros()
        init = space.check(np.array(init, dtype=space.dtype), f"initial value of {name}")
        self.variables[name] = Variable(name, space, init)
        return name

    def _space(self, name):
        try:
            return self.variables[name].space
        except KeyError:
            raise DomainError(f"unknown variable {name!r}") from None

    def add_term(self, fn, mapping, over=None):
        """Add ``fn(A x)``.

        ``mapping`` is a variable name (identity mapping), a dict from
        variable names to operators (``None`` for the identity), or an
        ``OpDag`` whose inputs are the variables listed in ``over``.
        """
        if not isinstance(fn, (ProxFn, SmoothFn)):
            raise DomainError(f"{fn!r} is neither proximable nor smooth")
        if isinstance(mapping, str):
            mapping = {mapping: None}
        if isinstance(mapping, OpDag):
            over = [over] if isinstance(over, str) else list(over or ())
            expected = ProductSpace(self._space(v) for v in over)
            if mapping.domain != expected:
                raise ShapeMismatchError(
                    f"DAG inputs {mapping.domain} do not match variables {over}"
                )
            term = Term(fn, over, mapping)
        else:
            blocks = {}
            for name, op in mapping.items():
                space = self._space(name)
                if op is None:
                    op = IdentityOp(space)
                if not isinstance(op, Operator):
                    raise DomainError(f"mapping of {name!r} is not an operator")
                if op.domain != space:
                    raise ShapeMismatchError(
                        f"{op!r} does not act on variable {name!r} in {space}"
                    )
                if not isinstance(op, ZeroOp):
                    blocks[name] = op
            if not blocks:
                raise DomainError("a term needs at least one nonzero mapping")
            op = hcat(list(blocks.values()))
            term = Term(fn, blocks, OpDag.from_operator(op), blocks)
        self.terms.append(term)
        return len(self.terms) - 1

    def add_constraint(self, indicator, mapping, over=None):
        if not isinstance(indicator, ProxFn):
            raise DomainError("constraints are given by proximable indicators")
        return self.add_term(indicator, mapping, over)

    @property
    def space(self):
        return ProductSpace(v.space for v in self.variables.values())

    @property
    def names(self):
        return tuple(self.variables)

    def initial_point(self):
        return SignalTuple(v.init.copy() for v in self.variables.values())

    def _parts(self, term, x):
        index = {name: i for i, name in enumerate(self.variables)}
        return [x[index[v]] for v in term.variables]

    def objective(self, x):
        return sum(t.value(self._parts(t, x)) for t in self.terms)

    def split(self):
        return split(self)


class SumOfTerms(SmoothFn):
    """``f(x) = sum_{i in I_f} h_i(A_i x)`` with gradients
    back-propagated through each term's DAG."""

    def __init__(self, problem, indices):
        self.problem = problem
        self.indices = tuple(indices)
        self.slots = {name: i for i, name in enumerate(problem.variables)}
        terms = [problem.terms[i] for i in self.indices]
        self.is_convex = all(t.fn.is_convex and t.dag.is_linear for t in terms)
        if not terms:
            self.lipschitz = 0.0

    def __call__(self, x):
        return float(
            sum(
                self.problem.terms[i].value(self.problem._parts(self.problem.terms[i], x))
                for i in self.indices
            )
        )

    def value_and_gradient(self, x):
        grads = [np.zeros_like(c) for c in x]
        value = 0.0
        for i in self.indices:
            term = self.problem.terms[i]
            evaluation = dag_forward(term.dag, SignalTuple(self.problem._parts(term, x)))
            v, g = term.fn.value_and_gradient(evaluation.output)
            value += v
            for name, gi in zip(term.variables, dag_backward(term.dag, g, evaluation)):
                slot = self.slots[name]
                grads[slot] = grads[slot] + gi
        return float(value), SignalTuple(grads)

    def gradient(self, x):
        return self.value_and_gradient(x)[1]


@dataclass
class ProxGroup:
    """Nonsmooth terms handled together by one proximal mapping."""

    terms: list
    variables: tuple
    fn: object = None
    op: object = None


def _selection_groups(problem, indices):
    """Group single-variable nonsmooth terms mapped by disjoint selections
    of the same variable."""
    by_variable = {}
    for i in indices:
        term = problem.terms[i]
        if term.blocks is None or len(term.variables) != 1:
            continue
        (op,) = term.blocks.values()
        if isinstance(op, SelectOp):
            by_variable.setdefault(term.variables[0], []).append(i)
    merged = {}
    for name, members in by_variable.items():
        if len(members) < 2:
            continue
        supports = [problem.terms[i].blocks[name].indices for i in members]
        union = np.unique(np.concatenate(supports))
        if len(union) == sum(len(s) for s in supports):
            merged[name] = members
    return merged


def _combined_op(term):
    if term.blocks is not None:
        return hcat(list(term.blocks.values()))
    root = term.dag.root
    if (
        not root.is_input
        and root.op.is_linear
        and list(root.children) == term.dag.inputs
    ):
        return root.op
    return None


def prox_groups(problem, indices=None):
    """Arrange the nonsmooth terms (``indices``, default all of them) into
    proximal groups, merging disjoint selections."""
    if indices is None:
        indices = [i for i, t in enumerate(problem.terms) if not t.smooth]
    merged = _selection_groups(problem, indices)
    seen = set()
    groups = []
    for i in indices:
        if i in seen:
            continue
        term = problem.terms[i]
        name = term.variables[0] if len(term.variables) == 1 else None
        if name in merged and i in merged[name]:
            members = merged[name]
            seen.update(members)
            groups.append(
                ProxGroup(
                    list(members),
                    (name,),
                    SeparableSum(
                        [problem.terms[j].fn for j in members],
                        [problem.terms[j].blocks[name].indices for j in members],
                    ),
                )
            )
            continue
        seen.add(i)
        group = ProxGroup([i], term.variables, op=_combined_op(term))
        if isinstance(group.op, IdentityOp):
            group.fn = term.fn
        elif isinstance(term.fn, ProxFn) and _has_tight_frame(group.op):
            group.fn = PrecomposeTightFrame(term.fn, group.op)
        groups.append(group)
    return groups


def _has_tight_frame(op):
    return isinstance(op, LinearOp) and bool(op.tight_frame_mu)


def check_prox_computable(problem, indices=None):
    """Return the list of violated rules (empty when ``g`` is proximable).

    Each violation is a dict with the keys ``rule``, ``term`` and
    ``variable``.
    """
    groups = prox_groups(problem, indices)
    violations = []
    owner = {}
    for group in groups:
        for i in group.terms:
            term = problem.terms[i]
            if not isinstance(term.fn, ProxFn):
                violations.append(
                    {"rule": RULE_PROX, "term": i, "variable": ",".join(term.variables)}
                )
            if len(group.terms) > 1:
                continue
            if term.blocks is not None:
                for name, op in term.blocks.items():
                    if not _has_tight_frame(op):
                        violations.append(
                            {"rule": RULE_TIGHT_FRAME, "term": i, "variable": name}
                        )
            elif not _has_tight_frame(group.op):
                violations.append(
                    {
                        "rule": RULE_TIGHT_FRAME,
                        "term": i,
                        "variable": ",".join(term.variables),
                    }
                )
        for name in group.variables:
            if name in owner:
                violations.append(
                    {"rule": RULE_CARDINALITY, "term": group.terms[0], "variable": name}
                )
            else:
                owner[name] = group.terms[0]
    return violations


@dataclass
class SplitProblem:
    problem: object
    f: SmoothFn
    g: ProxFn
    i_f: tuple
    i_g: tuple
    space: object
    x0: object
    names: tuple

    def objective(self, x):
        return self.f(x) + self.g(x)


def split(problem):
    """Split ``problem`` into a smooth ``f`` and a proximable ``g``."""
    i_f = tuple(i for i, t in enumerate(problem.terms) if t.smooth)
    i_g = tuple(i for i, t in enumerate(problem.terms) if not t.smooth)
    logger.debug("I_f = %s, I_g = %s", i_f, i_g)
    violations = check_prox_computable(problem, i_g)
    if violations:
        for v in violations:
            logger.error(
                "rule %s violated by term %d on variable %s",
                v["rule"], v["term"], v["variable"],
            )
        raise SplittingError(
            "g has no efficiently computable proximal mapping", violations
        )
    slots = {name: i for i, name in enumerate(problem.variables)}
    groups = prox_groups(problem, i_g)
    g = SeparableSum(
        [group.fn for group in groups],
        [[slots[name] for name in group.variables] for group in groups],
    )
    return SplitProblem(
        problem,
        SumOfTerms(problem, i_f),
        g,
        i_f,
        i_g,
        problem.space,
        problem.initial_point(),
        problem.names,
    )


def gradient_general(split_problem, x):
    """Gradient of the assembled ``f``, one entry per variable."""
    return split_problem.f.gradient(x)


# Duality and smoothing


class DualProblem:
    """``minimize f*(-A* u) + g*(u)``, the Fenchel dual of
    ``minimize f(x) + g(A x)``."""

    def __init__(self, f, g, A, conjugate, u0=None):
        self.f, self.g, self.A = f, g, A
        self.conjugate = conjugate
        minus_adjoint = LinearOp(
            A.codomain,
            A.domain,
            lambda u: -A.adjoint(u),
            lambda x: -A(x),
            A.tight_frame_mu,
            name=f"-{A.name}'",
        )
        self.dual_f = Composition(conjugate, minus_adjoint)
        if conjugate.lipschitz is not None and A.tight_frame_mu:
            self.dual_f.lipschitz = conjugate.lipschitz * A.tight_frame_mu
        self.dual_g = ConvexConjugate(g)
        self.space = A.codomain
        self.u0 = self.space.zeros() if u0 is None else u0

    def split(self):
        return SplitProblem(
            self, self.dual_f, self.dual_g, (0,), (1,), self.space, self.u0, ("u",)
        )

    def objective(self, u):
        return self.dual_f(u) + self.dual_g(u)

    def to_primal(self, u):
        return dual_to_primal(self.conjugate, self.A, u)


def fenchel_dual(f, g, A):
    """Dual of ``f(x) + g(A x)`` for a strongly convex ``f`` with a
    closed-form conjugate and a convex ``g``."""
    if not f.is_convex or not f.strong_convexity > 0:
        raise DomainError(
            f"{f!r} is not strongly convex, use regularize_then_dualize"
        )
    if not g.is_convex:
        raise DomainError("the Fenchel dual needs a convex g")
    return DualProblem(f, g, A, f.conjugate())


def regularize_then_dualize(f, g, A, beta):
    """Dual of ``f(x) + beta/2 ||x||^2 + g(A x)``; its smooth part is the
    Moreau envelope of ``f*``."""
    if not beta > 0:
        raise DomainError("regularize_then_dualize needs beta > 0")
    if not isinstance(f, ProxFn) or not f.is_convex:
        raise DomainError("regularize_then_dualize needs a convex proximable f")
    return DualProblem(f, g, A, MoreauEnvelope(ConvexConjugate(f), beta))


def dual_to_primal(conjugate, A, u):
    """``x* = grad f*(-A* u)``; ``conjugate`` is ``f*`` (or its Moreau
    envelope)."""
    return conjugate.gradient(-A.adjoint(u))


def smooth_term(h, beta):
    return MoreauEnvelope(h, beta)


def halving_schedule(beta0, rounds):
    """``beta0, beta0/2, beta0/4, ...``, ``rounds`` values."""
    return [beta0 / 2.0 ** t for t in range(rounds)]


@dataclass
class Solution:
    variables: dict
    result: object

    def __getitem__(self, name):
        return self.variables[name]

    @property
    def status(self):
        return self.result.status


def _unpack(split_problem, x):
    if isinstance(x, SignalTuple):
        return dict(zip(split_problem.names, x))
    return {split_problem.names[0]: x}


def minimize(problem, solver="panoc", config=None, x0=None):
    """Split ``problem`` (a ``Problem`` or a ``DualProblem``) and solve it."""
    split_problem = problem.split()
    start = split_problem.x0 if x0 is None else x0
    result = get_solver(solver)(split_problem.f, split_problem.g, start, config)
    return Solution(_unpack(split_problem, result.solution), result)


def continuation(make_problem, schedule, solver="panoc", config=None, x0=None, tol=None):
    """Solve ``make_problem(p)`` for every ``p`` of ``schedule``, warm
    starting each solve at the previous solution.

    Stops early once successive solutions differ by at most ``tol``
    (relative). Returns the list of ``(p, SolverResult)``.
    """
    history = []
    x = x0
    for p in schedule:
        split_problem = make_problem(p).split()
        start = split_problem.x0 if x is None else x
        result = get_solver(solver)(split_problem.f, split_problem.g, start, config)
        history.append((p, result))
        if tol is not None and x is not None:
            change = norm2(result.solution - x)
            if change <= tol * (1.0 + norm2(x)):
                logger.info("continuation settled at %s", p)
                break
        x = result.solution
    return history
