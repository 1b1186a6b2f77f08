"""Parametric factor graphs built from colour-passing partitions."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Any

from .colour_passing import Partition
from .exchangeability import rearranged_table, validate_witness, ExchangeabilityWitness
from .factor_graph import Factor, FactorGraph, FactorGraphError, RandomVariable
from .io import FormatError, _dump, _load, _require, _str_list, format_rational, parse_rational


class PFGError(FactorGraphError):
    """Raised when a partition cannot be turned into a consistent lifted model."""


@dataclass(frozen=True)
class LogVar:
    name: str
    domain: tuple[str, ...]


@dataclass(frozen=True)
class PRV:
    name: str
    logvars: tuple[str, ...]
    range: tuple[str, ...]
    # constants (one per logvar) -> ground RV name
    grounding: dict[tuple[str, ...], str]
    evidence: str | None = None

    def __hash__(self):
        return hash(self.name)

    @property
    def size(self) -> int:
        return len(self.grounding)


@dataclass(frozen=True)
class Instance:
    bindings: tuple[tuple[str, ...], ...]  # constants per argument slot
    source: str
    alpha: Fraction
    perm: tuple[int, ...]


@dataclass(frozen=True)
class Parfactor:
    name: str
    args: tuple[str, ...]  # PRV names
    table: tuple[Fraction, ...]
    instances: tuple[Instance, ...]

    def __hash__(self):
        return hash(self.name)


@dataclass(frozen=True)
class ParametricFactorGraph:
    logvars: tuple[LogVar, ...] = ()
    prvs: tuple[PRV, ...] = ()
    parfactors: tuple[Parfactor, ...] = ()

    __hash__ = None

    @cached_property
    def prv_by_name(self) -> dict[str, PRV]:
        return {p.name: p for p in self.prvs}

    @cached_property
    def prv_of_rv(self) -> dict[str, PRV]:
        return {rv: p for p in self.prvs for rv in p.grounding.values()}

    @property
    def evidence(self) -> dict[str, str]:
        return {
            rv: p.evidence for p in self.prvs if p.evidence is not None for rv in p.grounding.values()
        }

    def ground_args(self, parfactor: Parfactor, instance: Instance) -> list[str]:
        return [
            self.prv_by_name[prv].grounding[consts]
            for prv, consts in zip(parfactor.args, instance.bindings)
        ]


def _grid(names: list[str]) -> tuple[str, list[tuple[str, ...]]] | None:
    """Split ``base.c1.c2`` names into a base and a full product of constants."""
    parts = [n.split(".") for n in names]
    width = len(parts[0])
    if width < 2 or any(len(p) != width for p in parts):
        return None
    if len({p[0] for p in parts}) != 1 or any(not c for p in parts for c in p):
        return None
    domains = [sorted({p[i] for p in parts}) for i in range(1, width)]
    if len(names) != math.prod(len(d) for d in domains):
        return None
    return parts[0][0], [tuple(d) for d in domains]


def _build_prvs(graph: FactorGraph, partition: Partition):
    logvars: list[LogVar] = []
    by_domain: dict[tuple[str, ...], LogVar] = {}
    prvs: list[PRV] = []
    used = set(graph.rv_by_name)
    fresh = 0

    def logvar(domain):
        if domain not in by_domain:
            lv = LogVar(f"X{len(logvars) + 1}", domain)
            logvars.append(lv)
            by_domain[domain] = lv
        return by_domain[domain]

    def unique(name):
        candidate, k = name, 1
        while candidate in used:
            k += 1
            candidate = f"{name}_{k}"
        used.add(candidate)
        return candidate

    for group in partition.rv_groups:
        rvs = [graph.rv_by_name[n] for n in group]
        if len({rv.range for rv in rvs}) != 1:
            raise PFGError(f"group {group} mixes ranges")
        evs = {partition.evidence.get(n) for n in group}
        if len(evs) != 1:
            raise PFGError(f"group {group} mixes evidence")
        ev = evs.pop()
        if len(group) == 1:
            prvs.append(PRV(group[0], (), rvs[0].range, {(): group[0]}, ev))
            continue
        grid = _grid(list(group))
        if grid is not None:
            base, domains = grid
            lvs = tuple(logvar(d).name for d in domains)
            grounding = {tuple(n.split(".")[1:]): n for n in group}
            name = unique(base)
        else:
            lvs = (logvar(tuple(sorted(group))).name,)
            grounding = {(n,): n for n in group}
            fresh += 1
            name = unique(f"R{fresh}")
        prvs.append(PRV(name, lvs, rvs[0].range, grounding, ev))
    return logvars, prvs


def construct_pfg(graph: FactorGraph, partition: Partition) -> ParametricFactorGraph:
    logvars, prvs = _build_prvs(graph, partition)
    prv_of = {rv: p for p in prvs for rv in p.grounding.values()}
    consts_of = {rv: c for p in prvs for c, rv in p.grounding.items()}
    parfactors = []
    for group in partition.factor_groups:
        rep = graph.factor_by_name[group[0]]
        slots = [prv_of[rv.name].name for rv in rep.args]
        instances = []
        for name in group:
            member = graph.factor_by_name[name]
            al = partition.alignment[name]
            if al.representative != rep.name:
                raise PFGError(f"{name} is aligned to {al.representative}, not {rep.name}")
            if not validate_witness(member, rep, ExchangeabilityWitness(al.alpha, al.perm)):
                raise PFGError(f"{name} is not exchangeable with {rep.name}")
            bound = [member.args[i].name for i in al.perm]
            for slot, rv in zip(slots, bound):
                if prv_of[rv].name != slot:
                    raise PFGError(
                        f"{name} binds {rv} where {rep.name} expects a {slot} instance"
                    )
            instances.append(
                Instance(tuple(consts_of[rv] for rv in bound), name, al.alpha, al.perm)
            )
        parfactors.append(Parfactor(rep.name, tuple(slots), rep.table, tuple(instances)))
    return ParametricFactorGraph(tuple(logvars), tuple(prvs), tuple(parfactors))


def ground_pfg(pfg: ParametricFactorGraph, preserve_scale: bool = False) -> FactorGraph:
    """Instantiate every parfactor instance.

    By default each instance receives the representative table, in the
    representative's argument order. With ``preserve_scale`` the stored scale
    and argument order of each source factor are restored exactly.
    """
    rvs = {}
    for p in pfg.prvs:
        for rv in p.grounding.values():
            rvs[rv] = RandomVariable(rv, p.range)
    factors = []
    for pf in pfg.parfactors:
        for inst in pf.instances:
            args = [rvs[n] for n in pfg.ground_args(pf, inst)]
            if not preserve_scale:
                factors.append(Factor(inst.source, tuple(args), pf.table))
                continue
            original = [None] * len(args)
            for k, i in enumerate(inst.perm):
                original[i] = args[k]
            rep = Factor(inst.source, tuple(args), tuple(inst.alpha * v for v in pf.table))
            table = rearranged_table([rv.size for rv in original], rep, inst.perm)
            factors.append(Factor(inst.source, tuple(original), table))
    ordered = sorted(rvs.values(), key=lambda rv: rv.name)
    return FactorGraph(tuple(ordered), tuple(sorted(factors, key=lambda f: f.name)), pfg.evidence)


def pfg_summary(pfg: ParametricFactorGraph) -> str:
    lines = []
    for lv in pfg.logvars:
        lines.append(f"{lv.name} in {{{', '.join(lv.domain)}}}")
    for pf in pfg.parfactors:
        args = []
        for prv in pf.args:
            p = pfg.prv_by_name[prv]
            args.append(f"{p.name}({','.join(p.logvars)})" if p.logvars else p.name)
        lines.append(f"{pf.name}({', '.join(args)}) x{len(pf.instances)}")
    return "\n".join(lines)


def pfg_to_dict(pfg: ParametricFactorGraph) -> dict:
    prvs = []
    for p in pfg.prvs:
        entry: dict[str, Any] = {
            "name": p.name,
            "logvars": list(p.logvars),
            "range": list(p.range),
            "grounding": {".".join(c): rv for c, rv in p.grounding.items()},
        }
        if p.evidence is not None:
            entry["evidence"] = p.evidence
        prvs.append(entry)
    return {
        "logvars": [{"name": lv.name, "domain": list(lv.domain)} for lv in pfg.logvars],
        "prvs": prvs,
        "parfactors": [
            {
                "name": pf.name,
                "args": list(pf.args),
                "table": [format_rational(v) for v in pf.table],
                "instances": [
                    {
                        "bindings": {str(k): list(c) for k, c in enumerate(inst.bindings)},
                        "source": inst.source,
                        "alpha": format_rational(inst.alpha),
                        "perm": list(inst.perm),
                    }
                    for inst in pf.instances
                ],
            }
            for pf in pfg.parfactors
        ],
    }


def _split_key(key: str, n_logvars: int) -> tuple[str, ...]:
    if n_logvars == 0:
        if key != "":
            raise FormatError("ground PRV must use the empty grounding key")
        return ()
    if n_logvars == 1:
        return (key,)
    parts = tuple(key.split("."))
    if len(parts) != n_logvars:
        raise FormatError(f"grounding key {key!r} does not match {n_logvars} logvars")
    return parts


def pfg_from_dict(doc: Any) -> ParametricFactorGraph:
    if not isinstance(doc, dict):
        raise FormatError("PFG document must be an object")
    logvars = []
    for i, e in enumerate(_require(doc, "logvars", list, "document")):
        logvars.append(
            LogVar(_require(e, "name", str, f"logvars[{i}]"), tuple(_str_list(e, "domain", f"logvars[{i}]")))
        )
    prvs = []
    for i, e in enumerate(_require(doc, "prvs", list, "document")):
        where = f"prvs[{i}]"
        lvs = tuple(_str_list(e, "logvars", where))
        grounding = {
            _split_key(k, len(lvs)): v for k, v in _require(e, "grounding", dict, where).items()
        }
        ev = e.get("evidence")
        if ev is not None and not isinstance(ev, str):
            raise FormatError(f"{where}: evidence must be a string")
        prvs.append(
            PRV(_require(e, "name", str, where), lvs, tuple(_str_list(e, "range", where)), grounding, ev)
        )
    parfactors = []
    for i, e in enumerate(_require(doc, "parfactors", list, "document")):
        where = f"parfactors[{i}]"
        args = tuple(_str_list(e, "args", where))
        instances = []
        for j, inst in enumerate(_require(e, "instances", list, where)):
            iw = f"{where}.instances[{j}]"
            bindings = _require(inst, "bindings", dict, iw)
            try:
                bound = tuple(tuple(bindings[str(k)]) for k in range(len(args)))
            except KeyError:
                raise FormatError(f"{iw}: bindings must cover every argument slot") from None
            perm = _require(inst, "perm", list, iw)
            instances.append(
                Instance(
                    bound,
                    _require(inst, "source", str, iw),
                    parse_rational(_require(inst, "alpha", str, iw)),
                    tuple(int(x) for x in perm),
                )
            )
        table = tuple(parse_rational(v) for v in _str_list(e, "table", where))
        parfactors.append(Parfactor(_require(e, "name", str, where), args, table, tuple(instances)))
    pfg = ParametricFactorGraph(tuple(logvars), tuple(prvs), tuple(parfactors))
    try:
        ground_pfg(pfg)
    except (KeyError, IndexError, TypeError, FactorGraphError) as exc:
        raise FormatError(f"PFG does not ground to a valid factor graph: {exc}") from None
    return pfg


def write_pfg(pfg: ParametricFactorGraph) -> bytes:
    return _dump(pfg_to_dict(pfg))


def read_pfg(data: bytes | str) -> ParametricFactorGraph:
    return pfg_from_dict(_load(data))
