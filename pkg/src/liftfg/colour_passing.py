"""Colour passing over factor graphs to find indistinguishable nodes.

Two factor initialisation modes are supported: ``"acp"`` groups factors that
are exchangeable with scale one only, ``"alpha-acp"`` groups factors that are
exchangeable for any positive scale.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping

from .exchangeability import (
    ExchangeabilityWitness,
    commutative_sets,
    detect_exchangeable,
    scale_invariant_key,
)
from .factor_graph import Factor, FactorGraph, check_evidence

MODES = ("acp", "alpha-acp")


def check_mode(mode: str) -> str:
    mode = mode.replace("_", "-")
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}, expected one of {MODES}")
    return mode


@dataclass(frozen=True)
class Alignment:
    """How a factor relates to its group representative.

    ``factor(r) == alpha * representative(r_perm[0], ..., r_perm[n-1])``.
    """

    representative: str
    alpha: Fraction
    perm: tuple[int, ...]

    @property
    def witness(self) -> ExchangeabilityWitness:
        return ExchangeabilityWitness(self.alpha, self.perm)


@dataclass(frozen=True)
class ColouringState:
    rv_colours: dict[str, int]
    factor_colours: dict[str, int]
    # argument order of each factor after alignment with its initial class
    aligned_args: dict[str, tuple[str, ...]]
    # aligned positions that belong to a commutative set
    commutative: dict[str, frozenset[int]]
    init_alignment: dict[str, Alignment] = field(repr=False)

    def n_rv_colours(self) -> int:
        return len(set(self.rv_colours.values()))

    def n_factor_colours(self) -> int:
        return len(set(self.factor_colours.values()))

    def grouping(self) -> tuple[frozenset, frozenset]:
        return (
            frozenset(_groups(self.rv_colours)),
            frozenset(_groups(self.factor_colours)),
        )


@dataclass(frozen=True)
class Partition:
    rv_groups: tuple[tuple[str, ...], ...]
    factor_groups: tuple[tuple[str, ...], ...]
    alignment: dict[str, Alignment]
    evidence: dict[str, str]
    mode: str
    iterations: int = 0

    def rv_group_of(self) -> dict[str, int]:
        return {rv: i for i, g in enumerate(self.rv_groups) for rv in g}

    def factor_group_of(self) -> dict[str, int]:
        return {f: i for i, g in enumerate(self.factor_groups) for f in g}


def _groups(colours: Mapping[str, int]) -> list[tuple[str, ...]]:
    by_colour: dict[int, list[str]] = {}
    for name, c in colours.items():
        by_colour.setdefault(c, []).append(name)
    return sorted(tuple(sorted(g)) for g in by_colour.values())


def _dense(signatures: Mapping[str, tuple]) -> dict[str, int]:
    ids = {sig: i for i, sig in enumerate(sorted(set(signatures.values())))}
    return {name: ids[sig] for name, sig in signatures.items()}


def exchangeability_classes(
    factors: list[Factor], unit_scale: bool
) -> list[tuple[Factor, list[tuple[Factor, ExchangeabilityWitness]]]]:
    """Partition factors into exchangeability classes.

    Candidates are bucketed by a permutation- and scale-invariant key first;
    within a bucket each factor is tested against one member of every class
    found so far, which suffices because exchangeability is an equivalence
    relation. The representative is the member with the smallest name.
    """
    buckets: dict[tuple, list[Factor]] = {}
    for f in sorted(factors, key=lambda f: f.name):
        buckets.setdefault(scale_invariant_key(f), []).append(f)
    classes = []
    for members in buckets.values():
        found: list[tuple[Factor, list]] = []
        for f in members:
            for rep, group in found:
                w = detect_exchangeable(f, rep, unit_scale=unit_scale)
                if w is not None:
                    group.append((f, w))
                    break
            else:
                found.append((f, [(f, ExchangeabilityWitness(Fraction(1), tuple(range(f.arity))))]))
        classes.extend(found)
    classes.sort(key=lambda c: c[0].name)
    return classes


def init_colours(
    graph: FactorGraph, evidence: Mapping[str, str] | None = None, mode: str = "alpha-acp"
) -> ColouringState:
    mode = check_mode(mode)
    evidence = check_evidence(graph, graph.evidence if evidence is None else evidence)
    rv_colours = _dense(
        {
            rv.name: (rv.range, rv.name in evidence, evidence.get(rv.name, ""))
            for rv in graph.rvs
        }
    )
    factor_colours: dict[str, int] = {}
    aligned_args: dict[str, tuple[str, ...]] = {}
    commutative: dict[str, frozenset[int]] = {}
    alignment: dict[str, Alignment] = {}
    classes = exchangeability_classes(list(graph.factors), unit_scale=(mode == "acp"))
    for colour, (rep, members) in enumerate(classes):
        comm = frozenset(p for s in commutative_sets(rep) for p in s)
        for f, w in members:
            factor_colours[f.name] = colour
            aligned_args[f.name] = tuple(f.args[i].name for i in w.permutation)
            commutative[f.name] = comm
            alignment[f.name] = Alignment(rep.name, w.alpha, w.permutation)
    return ColouringState(rv_colours, factor_colours, aligned_args, commutative, alignment)


def refine_step(graph: FactorGraph, state: ColouringState) -> ColouringState:
    """One factor pass followed by one variable pass."""
    fsig = {
        name: (state.factor_colours[name], tuple(state.rv_colours[a] for a in args))
        for name, args in state.aligned_args.items()
    }
    factor_colours = _dense(fsig)
    incoming: dict[str, list[tuple[int, int]]] = {rv.name: [] for rv in graph.rvs}
    for name, args in state.aligned_args.items():
        comm = state.commutative[name]
        for pos, a in enumerate(args):
            incoming[a].append((factor_colours[name], 0 if pos in comm else pos + 1))
    rsig = {
        rv: (state.rv_colours[rv], tuple(sorted(msgs))) for rv, msgs in incoming.items()
    }
    return ColouringState(
        _dense(rsig),
        factor_colours,
        state.aligned_args,
        state.commutative,
        state.init_alignment,
    )


def _compose(member: Alignment, rep: Alignment) -> tuple[Fraction, tuple[int, ...]]:
    """Alignment of ``member`` relative to ``rep``, both given against one class."""
    inv = [0] * len(rep.perm)
    for j, k in enumerate(rep.perm):
        inv[k] = j
    return member.alpha / rep.alpha, tuple(member.perm[inv[k]] for k in range(len(inv)))


def to_partition(
    state: ColouringState, evidence: Mapping[str, str], mode: str, iterations: int = 0
) -> Partition:
    factor_groups = tuple(_groups(state.factor_colours))
    alignment = {}
    for group in factor_groups:
        rep = group[0]
        for name in group:
            alpha, perm = _compose(state.init_alignment[name], state.init_alignment[rep])
            alignment[name] = Alignment(rep, alpha, perm)
    return Partition(
        rv_groups=tuple(_groups(state.rv_colours)),
        factor_groups=factor_groups,
        alignment=alignment,
        evidence=dict(evidence),
        mode=mode,
        iterations=iterations,
    )


def run_colour_passing(
    graph: FactorGraph, evidence: Mapping[str, str] | None = None, mode: str = "alpha-acp"
) -> Partition:
    mode = check_mode(mode)
    evidence = check_evidence(graph, graph.evidence if evidence is None else evidence)
    state = init_colours(graph, evidence, mode)
    limit = len(graph.rvs) + len(graph.factors) + 1
    iterations = 0
    while iterations < limit:
        new = refine_step(graph, state)
        iterations += 1
        done = (new.n_rv_colours(), new.n_factor_colours()) == (
            state.n_rv_colours(),
            state.n_factor_colours(),
        )
        state = new
        if done:
            break
    return to_partition(state, evidence, mode, iterations)
