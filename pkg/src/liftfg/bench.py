"""Benchmark generator and timing harness comparing ACP and alpha-ACP."""

from __future__ import annotations

import csv
import io
import logging
import math
import random
import statistics
import time
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Callable, Iterable, Sequence

from .colour_passing import run_colour_passing
from .factor_graph import Factor, FactorGraph, boolean_rv
from .inference import Query, lve_query, ve_ground
from .pfg import ParametricFactorGraph, construct_pfg

log = logging.getLogger(__name__)

CSV_COLUMNS = (
    "d",
    "p",
    "seed",
    "rvs",
    "factors",
    "groups_acp",
    "groups_alpha",
    "offline_acp_ms",
    "offline_alpha_ms",
    "online_acp_ms",
    "online_alpha_ms",
    "beta",
)
DEFAULT_DS = (2, 4, 8, 16, 32, 64, 128, 256, 512, 1024)
DEFAULT_PS = (0.01, 0.05, 0.1, 0.15)
ORACLE_MAX_D = 16


@dataclass(frozen=True)
class GenConfig:
    d: int
    p: float = 0.1
    alpha_max: int = 10
    seed: int = 0

    def __post_init__(self):
        if self.d < 2:
            raise ValueError(f"d must be at least 2, got {self.d}")
        if not 0 <= self.p <= 1:
            raise ValueError(f"p must lie in [0, 1], got {self.p}")
        if self.alpha_max < 1:
            raise ValueError(f"alpha_max must be at least 1, got {self.alpha_max}")


def count_bounds(d: int) -> tuple[tuple[int, int], tuple[int, int]]:
    """Inclusive (RV, factor) count ranges for size parameter ``d``."""
    log_d = int(math.floor(math.log2(d)))
    return (2 * d + 1, d * log_d + 2 * d + 1), (2 * d, d * log_d + d + 1)


def _base_table(rng: random.Random) -> tuple[int, ...]:
    return tuple(rng.sample(range(1, 13), 4))


def generate_fg_with_scales(config: GenConfig) -> tuple[FactorGraph, dict[str, int]]:
    """Generated graph plus the scalar applied to each factor (1 = untouched).

    Topology and base tables depend on the seed only; the scaled subset for a
    larger ``p`` contains the subset for a smaller one, with the same scalars.
    """
    d = config.d
    topo = random.Random(config.seed)
    tables = [_base_table(topo) for _ in range(3)]
    log_d = int(math.floor(math.log2(d)))
    leaves = [topo.randint(0, log_d) for _ in range(d)]
    budget = d * log_d - d + 1
    for i in reversed(range(d)):
        excess = sum(leaves) - budget
        if excess <= 0:
            break
        leaves[i] -= min(leaves[i], excess)

    hub = boolean_rv("Hub")
    rvs = [hub]
    factors: list[tuple[str, tuple, tuple[int, ...]]] = []
    for i in range(d):
        branch = boolean_rv(f"Branch.b{i}")
        sec = boolean_rv(f"Sec.b{i}")
        rvs += [branch, sec]
        factors.append((f"hub.b{i}", (hub, branch), tables[0]))
        factors.append((f"sec.b{i}", (branch, sec), tables[1]))
        for j in range(leaves[i]):
            leaf = boolean_rv(f"Leaf.b{i}.l{j}")
            rvs.append(leaf)
            factors.append((f"leaf.b{i}.l{j}", (branch, leaf), tables[2]))

    scaler = random.Random(f"scale-{config.seed}")
    order = scaler.sample(range(len(factors)), len(factors))
    alphas = [scaler.randint(1, config.alpha_max) for _ in order]
    n_scaled = math.ceil(Fraction(str(config.p)) * len(factors))
    scales = {name: 1 for name, _, _ in factors}
    for idx, alpha in list(zip(order, alphas))[:n_scaled]:
        scales[factors[idx][0]] = alpha
    built = tuple(
        Factor(name, args, tuple(Fraction(v * scales[name]) for v in table))
        for name, args, table in factors
    )
    return FactorGraph(tuple(rvs), built), scales


def generate_fg(config: GenConfig) -> FactorGraph:
    return generate_fg_with_scales(config)[0]


def choose_queries(graph: FactorGraph, n: int, seed: int) -> list[str]:
    """The hub plus ``n - 1`` seeded leaf variables (falling back to secondaries)."""
    rng = random.Random(f"queries-{seed}")
    names = [rv.name for rv in graph.rvs]
    leaves = [v for v in names if v.startswith("Leaf.")]
    pool = leaves if len(leaves) >= n - 1 else leaves + [v for v in names if v.startswith("Sec.")]
    return ["Hub"] + rng.sample(pool, min(n - 1, len(pool)))


@dataclass
class BenchRecord:
    config: GenConfig
    rvs: int
    factors: int
    groups_acp: int = 0
    groups_alpha: int = 0
    offline_acp_ms: float = math.nan
    offline_alpha_ms: float = math.nan
    online_acp_ms: float = math.nan
    online_alpha_ms: float = math.nan
    beta: Fraction | None = None
    queries: list[str] = field(default_factory=list)
    verified: str = ""
    error: str = ""

    def row(self) -> dict[str, str]:
        c = self.config
        return {
            "d": str(c.d),
            "p": repr(c.p),
            "seed": str(c.seed),
            "rvs": str(self.rvs),
            "factors": str(self.factors),
            "groups_acp": str(self.groups_acp),
            "groups_alpha": str(self.groups_alpha),
            "offline_acp_ms": f"{self.offline_acp_ms:.3f}",
            "offline_alpha_ms": f"{self.offline_alpha_ms:.3f}",
            "online_acp_ms": f"{self.online_acp_ms:.3f}",
            "online_alpha_ms": f"{self.online_alpha_ms:.3f}",
            "beta": "" if self.beta is None else f"{float(self.beta):.6g}",
        }


def beta_from_deltas(offline_overhead, online_gain) -> Fraction | None:
    """Queries after which the extra offline cost is paid back; None if no gain."""
    gain = Fraction(online_gain)
    if gain <= 0:
        return None
    return Fraction(offline_overhead) / gain


def compute_beta(record: BenchRecord) -> Fraction | None:
    timings = (
        record.offline_acp_ms,
        record.offline_alpha_ms,
        record.online_acp_ms,
        record.online_alpha_ms,
    )
    if any(t is None or math.isnan(t) for t in timings):
        return None
    return beta_from_deltas(
        Fraction(record.offline_alpha_ms) - Fraction(record.offline_acp_ms),
        Fraction(record.online_acp_ms) - Fraction(record.online_alpha_ms),
    )


def _median_ms(fn: Callable[[], object], repeats: int) -> tuple[float, object]:
    samples = []
    result = None
    for _ in range(repeats):
        start = time.perf_counter()
        result = fn()
        samples.append((time.perf_counter() - start) * 1000.0)
    return statistics.median(samples), result


def compress(graph: FactorGraph, mode: str) -> ParametricFactorGraph:
    return construct_pfg(graph, run_colour_passing(graph, {}, mode))


def run_benchmark(
    configs: Iterable[GenConfig],
    queries_per_graph: int = 4,
    repeats: int = 5,
    oracle_max_d: int = ORACLE_MAX_D,
) -> list[BenchRecord]:
    if queries_per_graph < 1:
        raise ValueError("queries_per_graph must be at least 1")
    records = []
    for config in configs:
        graph = generate_fg(config)
        rec = BenchRecord(config, len(graph.rvs), len(graph.factors))
        try:
            _run_cell(rec, graph, queries_per_graph, repeats, oracle_max_d)
        except Exception as exc:  # recorded per row, the sweep continues
            log.exception("benchmark cell %s failed", config)
            rec.error = f"{type(exc).__name__}: {exc}"
        records.append(rec)
    return records


def _run_cell(rec: BenchRecord, graph: FactorGraph, n_queries, repeats, oracle_max_d):
    rec.offline_acp_ms, acp = _median_ms(lambda: compress(graph, "acp"), repeats)
    rec.offline_alpha_ms, alpha = _median_ms(lambda: compress(graph, "alpha-acp"), repeats)
    rec.groups_acp = len(acp.parfactors)
    rec.groups_alpha = len(alpha.parfactors)
    rec.queries = choose_queries(graph, n_queries, rec.config.seed)
    queries = [Query(q) for q in rec.queries]

    def answer(model):
        return [lve_query(model, q) for q in queries]

    t_acp, res_acp = _median_ms(lambda: answer(acp), repeats)
    t_alpha, res_alpha = _median_ms(lambda: answer(alpha), repeats)
    rec.online_acp_ms = t_acp / len(queries)
    rec.online_alpha_ms = t_alpha / len(queries)
    if res_acp != res_alpha:
        raise AssertionError("ACP and alpha-ACP models disagree on a query")
    if rec.config.d <= oracle_max_d:
        oracle = [ve_ground(graph, q) for q in queries]
        if oracle != res_alpha:
            raise AssertionError("lifted answers differ from ground variable elimination")
        rec.verified = "oracle"
    else:
        rec.verified = f"engines-agree (oracle skipped: d > {oracle_max_d})"
    rec.beta = compute_beta(rec)


def sweep(ds: Sequence[int], ps: Sequence[float], alpha_max: int, seeds: int) -> list[GenConfig]:
    return [GenConfig(d, p, alpha_max, s) for d in ds for p in ps for s in range(seeds)]


def records_to_csv(records: Iterable[BenchRecord]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for r in records:
        writer.writerow(r.row())
    return buf.getvalue()


def write_svg(records: Sequence[BenchRecord], path: str | Path) -> None:
    """Log-scale mean online query time per ``d``, one line per mode."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    ds = sorted({r.config.d for r in records if not r.error})
    fig, ax = plt.subplots(figsize=(5, 3))
    for label, attr, style in (
        ("ACP", "online_acp_ms", "-"),
        ("alpha-ACP", "online_alpha_ms", "--"),
    ):
        ys = [
            statistics.fmean(getattr(r, attr) for r in records if r.config.d == d and not r.error)
            for d in ds
        ]
        ax.plot(ds, ys, style, marker="o", label=label)
    ax.set_xscale("log", base=2)
    ax.set_yscale("log")
    ax.set_xlabel("d")
    ax.set_ylabel("query time (ms)")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)
