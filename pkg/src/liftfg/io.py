"""JSON readers and writers for factor graphs, evidence and lifted models."""

from __future__ import annotations

import json
import re
from fractions import Fraction
from pathlib import Path
from typing import Any, Mapping

from .factor_graph import (
    Factor,
    FactorGraph,
    FactorGraphError,
    RandomVariable,
)

_RATIONAL = re.compile(r"^(0|[1-9][0-9]*)(?:/([1-9][0-9]*))?$")


class FormatError(FactorGraphError):
    """Raised when a document does not conform to the file schema."""


def format_rational(q: Fraction) -> str:
    q = Fraction(q)
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


def parse_rational(text: str) -> Fraction:
    """Parse a canonical ``int`` or reduced ``num/den`` string."""
    if not isinstance(text, str):
        raise FormatError(f"rational must be a string, got {text!r}")
    m = _RATIONAL.match(text)
    if not m:
        raise FormatError(f"malformed rational {text!r}")
    q = Fraction(text)
    if m.group(2) is not None and format_rational(q) != text:
        raise FormatError(f"rational {text!r} is not in reduced form")
    return q


def _dump(doc: Any) -> bytes:
    return (json.dumps(doc, indent=2, ensure_ascii=False) + "\n").encode("utf-8")


def _load(data: bytes | str) -> Any:
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    try:
        return json.loads(data)
    except json.JSONDecodeError as exc:
        raise FormatError(f"invalid JSON: {exc}") from None


def _require(obj: Mapping, key: str, kind: type, where: str):
    if not isinstance(obj, dict) or key not in obj:
        raise FormatError(f"{where}: missing key {key!r}")
    value = obj[key]
    if not isinstance(value, kind):
        raise FormatError(f"{where}: {key!r} must be {kind.__name__}")
    return value


def _str_list(obj: Mapping, key: str, where: str) -> list[str]:
    values = _require(obj, key, list, where)
    if not all(isinstance(v, str) for v in values):
        raise FormatError(f"{where}: {key!r} must hold strings")
    return values


def fg_to_dict(graph: FactorGraph) -> dict:
    rvs = []
    for rv in graph.rvs:
        entry: dict[str, Any] = {"name": rv.name, "range": list(rv.range)}
        if rv.name in graph.evidence:
            entry["evidence"] = graph.evidence[rv.name]
        rvs.append(entry)
    factors = [
        {
            "name": f.name,
            "args": list(f.arg_names),
            "table": [format_rational(v) for v in f.table],
        }
        for f in graph.factors
    ]
    return {"rvs": rvs, "factors": factors}


def fg_from_dict(doc: Any) -> FactorGraph:
    if not isinstance(doc, dict):
        raise FormatError("factor graph document must be an object")
    rvs = []
    evidence = {}
    for i, entry in enumerate(_require(doc, "rvs", list, "document")):
        where = f"rvs[{i}]"
        name = _require(entry, "name", str, where)
        rng = _str_list(entry, "range", where)
        rvs.append(RandomVariable(name, tuple(rng)))
        if "evidence" in entry:
            evidence[name] = _require(entry, "evidence", str, where)
    by_name = {}
    for rv in rvs:
        if rv.name in by_name:
            raise FormatError(f"duplicate random variable {rv.name!r}")
        by_name[rv.name] = rv
    factors = []
    for i, entry in enumerate(_require(doc, "factors", list, "document")):
        where = f"factors[{i}]"
        name = _require(entry, "name", str, where)
        arg_names = _str_list(entry, "args", where)
        try:
            args = tuple(by_name[a] for a in arg_names)
        except KeyError as exc:
            raise FormatError(f"{where}: unknown argument {exc.args[0]!r}") from None
        table = tuple(parse_rational(v) for v in _str_list(entry, "table", where))
        factors.append(Factor(name, args, table))
    return FactorGraph(tuple(rvs), tuple(factors), evidence)


def write_fg(graph: FactorGraph) -> bytes:
    return _dump(fg_to_dict(graph))


def read_fg(data: bytes | str) -> FactorGraph:
    return fg_from_dict(_load(data))


def load_fg(path: str | Path) -> FactorGraph:
    return read_fg(Path(path).read_bytes())


def save_fg(graph: FactorGraph, path: str | Path) -> None:
    Path(path).write_bytes(write_fg(graph))


def read_evidence(data: bytes | str) -> dict[str, str]:
    """Evidence files are flat objects ``{"rv": "value", ...}``."""
    doc = _load(data)
    if not isinstance(doc, dict) or not all(
        isinstance(k, str) and isinstance(v, str) for k, v in doc.items()
    ):
        raise FormatError("evidence must be an object mapping names to values")
    return doc


def parse_evidence_arg(text: str | None) -> dict[str, str]:
    """Parse ``rv=val,rv2=val2`` command-line evidence."""
    evidence: dict[str, str] = {}
    if not text:
        return evidence
    for item in text.split(","):
        name, sep, value = item.partition("=")
        name, value = name.strip(), value.strip()
        if not sep or not name or not value:
            raise FormatError(f"evidence item {item!r} is not rv=value")
        if name in evidence:
            raise FormatError(f"evidence given twice for {name!r}")
        evidence[name] = value
    return evidence
