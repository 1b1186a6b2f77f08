"""Propositional factor graphs with exact rational potentials.

Tables are stored densely in odometer order: the first argument varies
slowest, the last argument fastest.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Iterator, Mapping, Sequence

DEFAULT_STATE_BOUND = 2**22


class FactorGraphError(ValueError):
    """Raised for malformed graphs, assignments or evidence."""


@dataclass(frozen=True)
class RandomVariable:
    name: str
    range: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "range", tuple(self.range))
        if not self.name:
            raise FactorGraphError("random variable needs a non-empty name")
        if len(self.range) < 2:
            raise FactorGraphError(f"range of {self.name!r} needs at least two values")
        if any(not v for v in self.range):
            raise FactorGraphError(f"empty range label in {self.name!r}")
        if len(set(self.range)) != len(self.range):
            raise FactorGraphError(f"duplicate range labels in {self.name!r}")

    @property
    def size(self) -> int:
        return len(self.range)

    def index(self, value: str) -> int:
        try:
            return self.range.index(value)
        except ValueError:
            raise FactorGraphError(
                f"value {value!r} not in range of {self.name!r}: {self.range}"
            ) from None


def as_potential(value) -> Fraction:
    q = Fraction(value)
    if q <= 0:
        raise FactorGraphError(f"potentials must be positive, got {q}")
    return q


@dataclass(frozen=True)
class Factor:
    name: str
    args: tuple[RandomVariable, ...]
    table: tuple[Fraction, ...]

    def __post_init__(self):
        object.__setattr__(self, "args", tuple(self.args))
        object.__setattr__(self, "table", tuple(as_potential(v) for v in self.table))
        if not self.name:
            raise FactorGraphError("factor needs a non-empty name")
        if not self.args:
            raise FactorGraphError(f"factor {self.name!r} has no arguments")
        names = [rv.name for rv in self.args]
        if len(set(names)) != len(names):
            raise FactorGraphError(f"factor {self.name!r} repeats an argument")
        if len(self.table) != math.prod(self.shape):
            raise FactorGraphError(
                f"table of {self.name!r} has length {len(self.table)}, "
                f"expected {math.prod(self.shape)} for shape {self.shape}"
            )

    @property
    def arity(self) -> int:
        return len(self.args)

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(rv.size for rv in self.args)

    @property
    def arg_names(self) -> tuple[str, ...]:
        return tuple(rv.name for rv in self.args)

    def assignments(self) -> Iterator[tuple[str, ...]]:
        """All argument assignments in table order."""
        return itertools.product(*(rv.range for rv in self.args))

    def value(self, assignment: Sequence[str]) -> Fraction:
        return self.table[assignment_index(self, assignment)]

    def scaled(self, alpha) -> "Factor":
        alpha = Fraction(alpha)
        if alpha <= 0:
            raise FactorGraphError(f"scale must be positive, got {alpha}")
        return replace(self, table=tuple(alpha * v for v in self.table))


def _strides(shape: Sequence[int]) -> list[int]:
    strides = [1] * len(shape)
    for i in range(len(shape) - 2, -1, -1):
        strides[i] = strides[i + 1] * shape[i + 1]
    return strides


def assignment_index(factor: Factor, assignment: Sequence[str]) -> int:
    if len(assignment) != factor.arity:
        raise FactorGraphError(
            f"factor {factor.name!r} takes {factor.arity} values, got {len(assignment)}"
        )
    index = 0
    for rv, value in zip(factor.args, assignment):
        index = index * rv.size + rv.index(value)
    return index


def index_assignment(factor: Factor, index: int) -> tuple[str, ...]:
    if not 0 <= index < len(factor.table):
        raise FactorGraphError(f"index {index} outside table of {factor.name!r}")
    values = []
    for rv, stride in zip(factor.args, _strides(factor.shape)):
        pos, index = divmod(index, stride)
        values.append(rv.range[pos])
    return tuple(values)


@dataclass(frozen=True, eq=True)
class FactorGraph:
    rvs: tuple[RandomVariable, ...] = ()
    factors: tuple[Factor, ...] = ()
    evidence: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "rvs", tuple(self.rvs))
        object.__setattr__(self, "factors", tuple(self.factors))
        object.__setattr__(self, "evidence", dict(self.evidence))
        names = [rv.name for rv in self.rvs]
        if len(set(names)) != len(names):
            raise FactorGraphError("duplicate random variable names")
        fnames = [f.name for f in self.factors]
        if len(set(fnames)) != len(fnames):
            raise FactorGraphError("duplicate factor names")
        rv_by_name = dict(zip(names, self.rvs))
        for f in self.factors:
            for rv in f.args:
                if rv_by_name.get(rv.name) != rv:
                    raise FactorGraphError(
                        f"factor {f.name!r} refers to unknown variable {rv.name!r}"
                    )
        check_evidence(self, self.evidence)

    __hash__ = None  # evidence is a dict

    @cached_property
    def rv_by_name(self) -> dict[str, RandomVariable]:
        return {rv.name: rv for rv in self.rvs}

    @cached_property
    def factor_by_name(self) -> dict[str, Factor]:
        return {f.name: f for f in self.factors}

    @cached_property
    def neighbours(self) -> dict[str, list[Factor]]:
        """Factors adjacent to each RV, in factor insertion order."""
        adj: dict[str, list[Factor]] = {rv.name: [] for rv in self.rvs}
        for f in self.factors:
            for rv in f.args:
                adj[rv.name].append(f)
        return adj

    @property
    def edges(self) -> list[tuple[str, str]]:
        return [(rv.name, f.name) for f in self.factors for rv in f.args]

    def state_space_size(self) -> int:
        return math.prod(rv.size for rv in self.rvs)

    def with_evidence(self, evidence: Mapping[str, str]) -> "FactorGraph":
        return replace(self, evidence=dict(evidence))

    def with_factor(self, factor: Factor) -> "FactorGraph":
        if factor.name not in self.factor_by_name:
            raise FactorGraphError(f"unknown factor {factor.name!r}")
        factors = tuple(factor if f.name == factor.name else f for f in self.factors)
        return replace(self, factors=factors)


def check_evidence(graph: FactorGraph, evidence: Mapping[str, str]) -> dict[str, str]:
    evidence = dict(evidence)
    for name, value in evidence.items():
        rv = graph.rv_by_name.get(name)
        if rv is None:
            raise FactorGraphError(f"evidence on unknown variable {name!r}")
        rv.index(value)
    return evidence


def joint_weight(graph: FactorGraph, assignment: Mapping[str, str]) -> Fraction:
    """Unnormalised product of all potentials at a full assignment."""
    missing = [rv.name for rv in graph.rvs if rv.name not in assignment]
    if missing:
        raise FactorGraphError(f"assignment misses variables {missing}")
    weight = Fraction(1)
    for f in graph.factors:
        weight *= f.value([assignment[rv.name] for rv in f.args])
    return weight


def iter_assignments(rvs: Iterable[RandomVariable]) -> Iterator[dict[str, str]]:
    rvs = list(rvs)
    for values in itertools.product(*(rv.range for rv in rvs)):
        yield dict(zip((rv.name for rv in rvs), values))


def normalise(
    graph: FactorGraph, max_states: int = DEFAULT_STATE_BOUND
) -> tuple[Fraction, dict[tuple[str, ...], Fraction]]:
    """Brute-force normalisation constant and joint distribution.

    Keys of the probability map are value tuples in ``graph.rvs`` order.
    Evidence stored on the graph is ignored; this is the prior joint.
    """
    states = graph.state_space_size()
    if states > max_states:
        raise FactorGraphError(f"state space {states} exceeds bound {max_states}")
    weights = {}
    for assignment in iter_assignments(graph.rvs):
        weights[tuple(assignment.values())] = joint_weight(graph, assignment)
    z = sum(weights.values(), Fraction(0))
    return z, {k: w / z for k, w in weights.items()}


def marginal_from_joint(
    graph: FactorGraph, joint: Mapping[tuple[str, ...], Fraction], rv_name: str
) -> dict[str, Fraction]:
    pos = [rv.name for rv in graph.rvs].index(rv_name)
    out = {v: Fraction(0) for v in graph.rv_by_name[rv_name].range}
    for key, p in joint.items():
        out[key[pos]] += p
    return out


def scale_factor(graph: FactorGraph, factor_name: str, alpha) -> FactorGraph:
    """Multiply one factor's table by a positive scalar; semantics are unchanged."""
    factor = graph.factor_by_name.get(factor_name)
    if factor is None:
        raise FactorGraphError(f"unknown factor {factor_name!r}")
    return graph.with_factor(factor.scaled(alpha))


def make_factor(name: str, args: Sequence[RandomVariable], table: Iterable) -> Factor:
    return Factor(name, tuple(args), tuple(Fraction(v) for v in table))


def boolean_rv(name: str) -> RandomVariable:
    return RandomVariable(name, ("true", "false"))
