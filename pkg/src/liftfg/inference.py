"""Exact query answering by variable elimination, ground and lifted.

All arithmetic is on ``Fraction`` values. The lifted engine works on the
ground instances of a parametric factor graph but eliminates whole groups of
indistinguishable random variables at once: members whose factors are copies
of each other over the same remaining neighbours contribute one shared
message raised to the number of members.
"""

from __future__ import annotations

import itertools
import math
from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Hashable, Iterable, Mapping, Sequence

from .factor_graph import FactorGraph, FactorGraphError
from .pfg import ParametricFactorGraph

Marginal = dict[str, Fraction]


class QueryError(FactorGraphError):
    """Raised for ill-formed queries."""


@dataclass(frozen=True)
class Query:
    term: str
    value: str | None = None
    evidence: Mapping[str, str] = field(default_factory=dict)

    @classmethod
    def parse(cls, term: str, evidence: Mapping[str, str] | None = None) -> "Query":
        name, sep, value = term.partition("=")
        return cls(name, value if sep else None, dict(evidence or {}))

    def probability(self, marginal: Marginal) -> Fraction:
        if self.value is None:
            raise QueryError("distribution query has no single probability")
        return marginal[self.value]


@dataclass
class Table:
    scope: tuple[str, ...]
    card: tuple[int, ...]
    values: list[Fraction]
    kind: Hashable = None

    def index_of(self, var: str) -> int:
        return self.scope.index(var)


def _strides(card: Sequence[int]) -> list[int]:
    out = [1] * len(card)
    for i in range(len(card) - 2, -1, -1):
        out[i] = out[i + 1] * card[i + 1]
    return out


def multiply(a: Table, b: Table) -> Table:
    scope = list(a.scope)
    card = list(a.card)
    for v, c in zip(b.scope, b.card):
        if v not in scope:
            scope.append(v)
            card.append(c)
    pos = {v: i for i, v in enumerate(scope)}
    sa, sb = _strides(a.card), _strides(b.card)
    map_a = [pos[v] for v in a.scope]
    map_b = [pos[v] for v in b.scope]
    values = []
    for idx in itertools.product(*(range(c) for c in card)):
        ia = sum(idx[p] * s for p, s in zip(map_a, sa))
        ib = sum(idx[p] * s for p, s in zip(map_b, sb))
        values.append(a.values[ia] * b.values[ib])
    return Table(tuple(scope), tuple(card), values)


def sum_out(t: Table, var: str) -> Table:
    k = t.index_of(var)
    inner = math.prod(t.card[k + 1 :])
    size = t.card[k]
    outer = math.prod(t.card[:k])
    values = []
    for o in range(outer):
        base = o * size * inner
        for i in range(inner):
            values.append(sum((t.values[base + j * inner + i] for j in range(size)), Fraction(0)))
    return Table(t.scope[:k] + t.scope[k + 1 :], t.card[:k] + t.card[k + 1 :], values)


def condition(t: Table, var: str, pos: int) -> Table:
    k = t.index_of(var)
    inner = math.prod(t.card[k + 1 :])
    size = t.card[k]
    outer = math.prod(t.card[:k])
    values = [
        t.values[o * size * inner + pos * inner + i] for o in range(outer) for i in range(inner)
    ]
    return Table(t.scope[:k] + t.scope[k + 1 :], t.card[:k] + t.card[k + 1 :], values)


def product_all(tables: Iterable[Table]) -> Table:
    out = Table((), (), [Fraction(1)])
    for t in tables:
        out = multiply(out, t)
    return out


def _merge_evidence(stored: Mapping[str, str], given: Mapping[str, str]) -> dict[str, str]:
    merged = dict(stored)
    for k, v in given.items():
        if merged.get(k, v) != v:
            raise QueryError(f"conflicting evidence for {k!r}: {merged[k]!r} vs {v!r}")
        merged[k] = v
    return merged


def _check_query(query: Query, ranges: Mapping[str, tuple[str, ...]], evidence) -> None:
    if query.term not in ranges:
        raise QueryError(f"unknown query variable {query.term!r}")
    if query.term in evidence:
        raise QueryError(f"query variable {query.term!r} is observed")
    if query.value is not None and query.value not in ranges[query.term]:
        raise QueryError(f"{query.value!r} not in range of {query.term!r}")
    for name, value in evidence.items():
        if name not in ranges:
            raise QueryError(f"evidence on unknown variable {name!r}")
        if value not in ranges[name]:
            raise QueryError(f"evidence value {value!r} not in range of {name!r}")


def _conditioned(tables: list[Table], ranges, evidence) -> list[Table]:
    out = []
    for t in tables:
        kind = t.kind
        fixed = []
        for var in t.scope:
            if var in evidence:
                pos = ranges[var].index(evidence[var])
                fixed.append((t.scope.index(var), pos))
                t = condition(t, var, pos)
        if fixed:
            t = Table(t.scope, t.card, t.values, (kind, tuple(fixed)) if kind else None)
        out.append(t)
    return out


def _finish(tables: list[Table], query: Query, ranges) -> Marginal:
    rng = ranges[query.term]
    relevant = [t for t in tables if query.term in t.scope]
    result = product_all(relevant)
    assert set(result.scope) <= {query.term}, result.scope
    if not result.scope:
        values = [Fraction(1)] * len(rng)
    else:
        values = result.values
    z = sum(values, Fraction(0))
    return {v: p / z for v, p in zip(rng, values)}


def min_degree_order(tables: list[Table], keep: set[str]) -> list[str]:
    """Greedy min-degree elimination order, ties broken by name."""
    adj: dict[str, set[str]] = defaultdict(set)
    for t in tables:
        for v in t.scope:
            adj[v].update(u for u in t.scope if u != v)
    remaining = {v for v in adj if v not in keep}
    order = []
    while remaining:
        v = min(remaining, key=lambda u: (len(adj[u]), u))
        order.append(v)
        remaining.discard(v)
        nbrs = adj.pop(v)
        for u in nbrs:
            adj[u].discard(v)
            adj[u].update(w for w in nbrs if w != u)
    return order


def ve_ground(
    graph: FactorGraph, query: Query, order: Sequence[str] | None = None
) -> Marginal:
    ranges = {rv.name: rv.range for rv in graph.rvs}
    evidence = _merge_evidence(graph.evidence, query.evidence)
    _check_query(query, ranges, evidence)
    tables = [
        Table(f.arg_names, f.shape, list(f.table)) for f in graph.factors
    ]
    tables = _conditioned(tables, ranges, evidence)
    if order is not None:
        tables = _eliminate(tables, [v for v in order if v != query.term])
    tables = _eliminate(tables, min_degree_order(tables, {query.term}))
    return _finish(tables, query, ranges)


def _eliminate(tables: list[Table], order: Sequence[str]) -> list[Table]:
    for var in order:
        touching = [t for t in tables if var in t.scope]
        if not touching:
            continue
        tables = [t for t in tables if var not in t.scope]
        tables.append(sum_out(product_all(touching), var))
    return tables


@dataclass
class LVEStats:
    """Operation counts recorded by :func:`lve_query`."""

    messages: dict[str, int] = field(default_factory=lambda: defaultdict(int))
    powers: int = 0
    lifted_steps: int = 0
    fallbacks: list[str] = field(default_factory=list)


def _pattern(var: str, touching: list[Table]) -> tuple[tuple, tuple[str, ...]]:
    """Name-free description of ``var``'s factors plus its ordered neighbours."""
    ordered = sorted(touching, key=lambda t: (repr(t.kind), t.scope.index(var), t.scope))
    others: list[str] = []
    shape = []
    for t in ordered:
        codes = []
        for v in t.scope:
            if v == var:
                codes.append(-1)
            else:
                if v not in others:
                    others.append(v)
                codes.append(others.index(v))
        shape.append((t.kind, t.card, tuple(codes)))
    return tuple(shape), tuple(others)


class _Workspace:
    def __init__(self, tables: list[Table], ranges):
        self.ranges = ranges
        self.tables: dict[int, Table] = {}
        self.by_var: dict[str, set[int]] = defaultdict(set)
        self.dirty: set[str] = set()
        self._next = 0
        for t in tables:
            self.add(t)

    def add(self, t: Table) -> None:
        key = self._next
        self._next += 1
        self.tables[key] = t
        self.dirty.update(t.scope)
        for v in t.scope:
            self.by_var[v].add(key)

    def remove_touching(self, var: str) -> list[Table]:
        out = []
        for key in sorted(self.by_var.pop(var, ())):
            t = self.tables.pop(key)
            self.dirty.update(t.scope)
            for v in t.scope:
                if v != var:
                    self.by_var[v].discard(key)
            out.append(t)
        return out

    def touching(self, var: str) -> list[Table]:
        return [self.tables[k] for k in sorted(self.by_var.get(var, ()))]


def lve_query(
    pfg: ParametricFactorGraph, query: Query, stats: LVEStats | None = None
) -> Marginal:
    """Answer a ground query on a lifted model.

    Each random-variable group is eliminated as a block whenever no factor
    touches two of its members; members sharing identical factor patterns
    over the same neighbours are summed out once and the message is raised to
    the block size. Groups that do not fit are eliminated member by member
    (recorded in ``stats.fallbacks``); results are exact either way.
    """
    stats = stats if stats is not None else LVEStats()
    ranges = {rv: p.range for p in pfg.prvs for rv in p.grounding.values()}
    evidence = _merge_evidence(pfg.evidence, query.evidence)
    _check_query(query, ranges, evidence)
    tables = []
    for pf in pfg.parfactors:
        card = tuple(len(pfg.prv_by_name[a].range) for a in pf.args)
        for inst in pf.instances:
            tables.append(Table(tuple(pfg.ground_args(pf, inst)), card, list(pf.table), ("pf", pf.name)))
    ws = _Workspace(_conditioned(tables, ranges, evidence), ranges)

    groups: dict[str, list[str]] = {}
    for p in pfg.prvs:
        members = sorted(
            rv for rv in p.grounding.values() if rv != query.term and rv not in evidence
        )
        if members:
            groups[p.name] = members
    cache: dict[tuple, tuple[int, list[Fraction]]] = {}

    group_of = {m: name for name, members in groups.items() for m in members}
    keys: dict[str, tuple] = {}

    def rank(name):
        live = [m for m in groups[name] if ws.by_var.get(m)]
        if not live:
            return None
        member_set = set(live)
        eligible = True
        cost = 0
        for m in live:
            nbrs = set()
            for t in ws.touching(m):
                nbrs.update(t.scope)
            nbrs.discard(m)
            if nbrs & member_set:
                eligible = False
            cost = max(cost, len(nbrs))
        return (not eligible, cost, name), live, eligible

    stale = set(groups)
    while groups:
        # only groups whose neighbourhood changed need a fresh rank
        stale |= {group_of[v] for v in ws.dirty if v in group_of}
        ws.dirty.clear()
        for name in stale:
            if name in groups:
                ranked = rank(name)
                if ranked is None:
                    keys.pop(name, None)
                else:
                    keys[name] = ranked
        stale = set()
        if not keys:
            break
        name = min(keys, key=lambda n: keys[n][0])
        _, live, eligible = keys.pop(name)
        if eligible:
            _eliminate_block(ws, name, live, cache, stats)
            del groups[name]
        else:
            # ground step on the cheapest member; the rest stays grouped
            stats.fallbacks.append(name)
            var = min(live, key=lambda m: (len(ws.by_var[m]), m))
            _eliminate_block(ws, name, [var], cache, stats)
            groups[name] = [m for m in groups[name] if m != var]
            del group_of[var]
            if groups[name]:
                stale.add(name)
            else:
                del groups[name]
    return _finish(list(ws.tables.values()), query, ranges)


def _eliminate_block(ws: _Workspace, group: str, members: list[str], cache, stats: LVEStats):
    blocks: dict[tuple, list[str]] = {}
    for m in members:
        shape, others = _pattern(m, ws.touching(m))
        blocks.setdefault((shape, others), []).append(m)
    stats.lifted_steps += 1
    for (shape, others), block in blocks.items():
        rep = block[0]
        touching = ws.touching(rep)
        if shape not in cache:
            stats.messages[group] += 1
            msg = sum_out(product_all(touching), rep)
            # reorder to the pattern's neighbour order
            cache[shape] = (len(cache), _reorder(msg, others).values)
        shape_id, values = cache[shape]
        k = len(block)
        if k > 1:
            stats.powers += 1
            values = [v**k for v in values]
        card = tuple(len(ws.ranges[v]) for v in others)
        for m in block:
            ws.remove_touching(m)
        if others:
            ws.add(Table(others, card, list(values), ("msg", shape_id, k)))


def _reorder(t: Table, scope: tuple[str, ...]) -> Table:
    if t.scope == scope:
        return t
    card = tuple(t.card[t.scope.index(v)] for v in scope)
    strides = _strides(t.card)
    where = [t.scope.index(v) for v in scope]
    values = []
    for idx in itertools.product(*(range(c) for c in card)):
        values.append(t.values[sum(idx[i] * strides[w] for i, w in enumerate(where))])
    return Table(scope, card, values)
