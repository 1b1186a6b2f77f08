"""Acceptance suite: one PASS/FAIL line per criterion, at the stated tolerances.

Run alone with ``pytest tests/test_acceptance.py -v -s`` or
``python tests/test_acceptance.py``.
"""

import ast
import inspect
import random
import statistics
import textwrap
import time
from fractions import Fraction

from acceptance_report import report
from factories import factor_pair, joint_by_name, random_graph, shared_b_graph, star_graph
from liftfg import (
    Factor,
    LVEStats,
    Query,
    boolean_rv,
    brute_force_exchangeable,
    buckets,
    collinear_exact,
    construct_pfg,
    cosine_distance,
    detect_exchangeable,
    ground_pfg,
    lve_query,
    run_colour_passing,
    ve_ground,
)
from liftfg import bench, exchangeability
from liftfg.exchangeability import approx_collinear, validate_witness


def _contained(fine, coarse):
    where = {n: i for i, group in enumerate(coarse) for n in group}
    return all(len({where[n] for n in group}) == 1 for group in fine)


def test_c1_semantics_preservation():
    start = time.perf_counter()
    failures, merged = [], 0
    for seed in range(200):
        g = random_graph(random.Random(seed), max_rvs=16)
        partition = run_colour_passing(g, mode="alpha-acp")
        merged += len(partition.factor_groups) < len(g.factors)
        if joint_by_name(ground_pfg(construct_pfg(g, partition))) != joint_by_name(g):
            failures.append(seed)
    elapsed = time.perf_counter() - start
    report(
        "C1 semantics preservation",
        not failures and elapsed < 60,
        f"200 graphs, {merged} with merged factors, mismatches={failures}, {elapsed:.1f}s (< 60s)",
    )


def test_c2_exchangeability_oracle_equivalence():
    start = time.perf_counter()
    disagreements, invalid, found = [], [], 0
    for seed in range(1000):
        phi1, phi2, _ = factor_pair(random.Random(seed), hi=50)
        fast = detect_exchangeable(phi1, phi2)
        slow = brute_force_exchangeable(phi1, phi2)
        if (fast is None) != (slow is None) or fast != slow:
            disagreements.append(seed)
        for w in (fast, slow):
            if w is not None and not validate_witness(phi1, phi2, w):
                invalid.append(seed)
        found += fast is not None
    elapsed = time.perf_counter() - start
    report(
        "C2 exchangeability oracle equivalence",
        not disagreements and not invalid and elapsed < 30,
        f"1000 pairs, {found} exchangeable, disagreements={disagreements}, "
        f"invalid witnesses={invalid}, {elapsed:.1f}s (< 30s)",
    )


def test_c3_golden_examples():
    a, b = boolean_rv("A"), boolean_rv("B")
    f84 = Factor("f", (a,), (Fraction(8), Fraction(2)))
    f41 = Factor("g", (a,), (Fraction(4), Fraction(1)))
    checks = {
        "cosine (8,2)~(4,1) = 0": cosine_distance(f84, f41) == 0,
        "collinear alpha = 2": collinear_exact(f84.table, f41.table) == 2,
    }
    t = buckets(Factor("phi1", (a, b), tuple(map(Fraction, (3, 5, 7, 2)))))
    checks["buckets [2,0],[1,1],[0,2]"] = t.buckets == {((2, 0),), ((1, 1),), ((0, 2),)}
    checks["phi>([1,1]) = <cell(t,f), cell(f,t)>"] = t.potentials[((1, 1),)] == (5, 7)
    g = shared_b_graph()
    p = run_colour_passing(g)
    checks["rv groups {A,C},{B}"] = set(p.rv_groups) == {("A", "C"), ("B",)}
    checks["factor group {phi1,phi2}"] = p.factor_groups == (("phi1", "phi2"),)
    closed_form = Fraction((1 + 3) ** 2, 52)
    checks["ve P(B=true) = 4/13"] = ve_ground(g, Query("B"))["true"] == closed_form == Fraction(4, 13)
    checks["lve P(B=true) = 4/13"] = lve_query(construct_pfg(g, p), Query("B"))["true"] == closed_form
    failed = [k for k, ok in checks.items() if not ok]
    report("C3 golden examples", not failed, f"{len(checks) - len(failed)}/{len(checks)} exact checks, failed={failed}")


def test_c4_strict_improvement():
    start = time.perf_counter()
    ds, ps = (4, 8, 16, 32), (0.05, 0.1, 0.15)
    finer, not_strict, eligible = [], [], 0
    for seed in range(100):
        config = bench.GenConfig(ds[seed % len(ds)], ps[seed % len(ps)], 10, seed)
        g, scales = bench.generate_fg_with_scales(config)
        acp = run_colour_passing(g, {}, "acp").factor_groups
        alpha = run_colour_passing(g, {}, "alpha-acp").factor_groups
        if not _contained(acp, alpha):
            finer.append(seed)
        # a factor scaled by alpha != 1 sharing its unscaled structural group
        # with a factor of a different scale
        plain = bench.generate_fg(bench.GenConfig(config.d, 0, 10, seed))
        structural = run_colour_passing(plain, {}, "acp").factor_groups
        if any(len({scales[f] for f in group}) > 1 for group in structural):
            eligible += 1
            if not len(alpha) < len(acp):
                not_strict.append(seed)
    for seed in range(100):
        g = random_graph(random.Random(10_000 + seed))
        if not _contained(run_colour_passing(g, mode="acp").factor_groups, run_colour_passing(g).factor_groups):
            finer.append(f"random-{seed}")
    elapsed = time.perf_counter() - start
    report(
        "C4 strict improvement",
        not finer and not not_strict and eligible > 0 and elapsed < 120,
        f"100 generated seeds ({eligible} with cross-scale pairs) + 100 random graphs, "
        f"finer={finer}, not strictly coarser={not_strict}, {elapsed:.1f}s (< 120s)",
    )


def test_c5_lifted_speedup_trend():
    configs = [bench.GenConfig(d, 0.1, 10, seed) for d in (64, 128, 256) for seed in range(10)]
    records = bench.run_benchmark(configs, queries_per_graph=4, repeats=5)
    errors = [(r.config.d, r.config.seed, r.error) for r in records if r.error]
    medians = {}
    for d in (64, 128, 256):
        rows = [r for r in records if r.config.d == d and not r.error]
        medians[d] = (
            statistics.median(r.online_alpha_ms for r in rows),
            statistics.median(r.online_acp_ms for r in rows),
        )
    trend = all(alpha <= acp for alpha, acp in medians.values())

    counts = []
    for k in (2, 8, 32, 128, 512):
        stats = LVEStats()
        lve_query(construct_pfg(star_graph(k), run_colour_passing(star_graph(k))), Query("Hub"), stats)
        counts.append(dict(stats.messages))
    constant = all(c == counts[0] for c in counts) and all(v == 1 for v in counts[0].values())

    beta_ok = bench.beta_from_deltas(10, 20) == Fraction(1, 2) and bench.beta_from_deltas(10, 0) is None
    beta_ok = beta_ok and bench.beta_from_deltas(10, -5) is None

    detail = ", ".join(f"d={d}: {a:.1f}ms vs {c:.1f}ms" for d, (a, c) in medians.items())
    report(
        "C5 lifted speedup trend",
        trend and constant and beta_ok and not errors,
        f"median online alpha-ACP vs ACP over 10 seeds [{detail}]; "
        f"messages per group for k=2..512: {counts[0]} (constant={constant}); "
        f"beta(10,20)=1/2 and no beta for gain <= 0: {beta_ok}; row errors={errors}",
    )


def _division_nodes(fn) -> list[str]:
    tree = ast.parse(textwrap.dedent(inspect.getsource(fn)))
    bad = []
    for node in ast.walk(tree):
        if isinstance(node, (ast.BinOp, ast.AugAssign)) and isinstance(node.op, (ast.Div, ast.FloorDiv, ast.Mod)):
            bad.append(f"{fn.__name__}:{node.lineno}")
    return bad


def test_c6_epsilon_check():
    rng = random.Random(6)
    mismatches = 0
    for _ in range(10_000):
        n = rng.randint(1, 8)
        v = [Fraction(rng.randint(1, 60), rng.randint(1, 12)) for _ in range(n)]
        kind = rng.random()
        if kind < 0.5:
            alpha = Fraction(rng.randint(1, 20), rng.randint(1, 20))
            w = [alpha * x for x in v]
        elif kind < 0.75:
            w = [x * 3 for x in v]
            w[rng.randrange(n)] += Fraction(1, rng.randint(1, 30))
        else:
            w = [Fraction(rng.randint(1, 60), rng.randint(1, 12)) for _ in range(n)]
        mismatches += approx_collinear(v, w, 0) != (collinear_exact(v, w) is not None)

    instance = approx_collinear([10, 20], [5, Fraction(52, 5)], Fraction(1, 10))
    ints = exchangeability._integer_vector([5, Fraction(52, 5)])
    integer_path = all(type(x) is int for x in ints)
    divisions = _division_nodes(approx_collinear) + _division_nodes(exchangeability._integer_vector)
    report(
        "C6 epsilon check",
        mismatches == 0 and instance and integer_path and not divisions,
        f"10000 pairs, eps=0 mismatches={mismatches}; (10,20) vs (5,52/5) eps=1/10 -> {instance}; "
        f"integer operands={integer_path}; division nodes in decision path={divisions}",
    )


if __name__ == "__main__":
    import sys

    failed = 0
    for name, fn in sorted(globals().items()):
        if name.startswith("test_c"):
            try:
                fn()
            except AssertionError:
                failed += 1
    sys.exit(1 if failed else 0)
