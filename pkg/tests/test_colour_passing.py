import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from factories import epidemic_graph, random_graph, scaled_permuted_copy, shared_b_graph
from liftfg import Factor, FactorGraph, boolean_rv, init_colours, refine_step, run_colour_passing
from liftfg.colour_passing import check_mode, exchangeability_classes
from liftfg.exchangeability import validate_witness


def test_shared_pair_initial_colours():
    state = init_colours(shared_b_graph())
    assert state.n_rv_colours() == 1
    assert state.n_factor_colours() == 1


def test_shared_pair_first_refinement():
    state = refine_step(shared_b_graph(), init_colours(shared_b_graph()))
    assert state.factor_colours["phi1"] == state.factor_colours["phi2"]
    assert state.rv_colours["A"] == state.rv_colours["C"] != state.rv_colours["B"]


def test_shared_pair_partition():
    p = run_colour_passing(shared_b_graph())
    assert set(p.rv_groups) == {("A", "C"), ("B",)}
    assert p.factor_groups == (("phi1", "phi2"),)


def test_scaled_pair_needs_alpha_mode():
    g = shared_b_graph(t2=(3, 6, 9, 12))
    assert init_colours(g, mode="acp").n_factor_colours() == 2
    assert init_colours(g, mode="alpha-acp").n_factor_colours() == 1
    p = run_colour_passing(g, mode="alpha-acp")
    assert p.alignment["phi2"].alpha == 3


def test_evidence_splits_initial_colours():
    g = epidemic_graph(people=("alice", "bob"))
    state = init_colours(g, {"Sick.alice": "true"})
    assert state.rv_colours["Sick.alice"] != state.rv_colours["Sick.bob"]
    p = run_colour_passing(g, {"Sick.alice": "true"})
    assert ("Sick.alice",) in p.rv_groups
    assert p.evidence == {"Sick.alice": "true"}


def test_all_distinct_tables_is_a_fixpoint():
    a, b, c = boolean_rv("A"), boolean_rv("B"), boolean_rv("C")
    g = FactorGraph(
        (a, b, c),
        (
            Factor("f", (a, b), tuple(map(Fraction, (1, 2, 3, 4)))),
            Factor("g", (b, c), tuple(map(Fraction, (5, 1, 7, 2)))),
        ),
    )
    state = init_colours(g)
    again = refine_step(g, state)
    assert again.n_factor_colours() == state.n_factor_colours() == 2


def test_epidemic_groups():
    p = run_colour_passing(epidemic_graph(people=("alice", "bob")))
    assert set(p.rv_groups) == {
        ("Epid",),
        ("Sick.alice", "Sick.bob"),
        ("Travel.alice", "Travel.bob"),
        ("Treat.alice.m1", "Treat.alice.m2", "Treat.bob.m1", "Treat.bob.m2"),
    }
    assert set(p.factor_groups) == {
        ("phi0",),
        ("phi1.alice", "phi1.bob"),
        ("phi2.alice.m1", "phi2.alice.m2", "phi2.bob.m1", "phi2.bob.m2"),
        ("phi3.alice", "phi3.bob"),
    }


def test_epidemic_scaled_factor():
    g = epidemic_graph(people=("alice", "bob"), scale={"phi1.bob": 3})
    acp = run_colour_passing(g, mode="acp")
    alpha = run_colour_passing(g, mode="alpha-acp")
    assert ("phi1.alice",) in acp.factor_groups and ("phi1.bob",) in acp.factor_groups
    assert ("phi1.alice", "phi1.bob") in alpha.factor_groups
    assert alpha.alignment["phi1.bob"].alpha == 3


def test_commutative_positions_use_zero():
    # symmetric factor: both arguments must end up together
    hub = boolean_rv("H")
    x, y = boolean_rv("X"), boolean_rv("Y")
    sym = tuple(map(Fraction, (1, 4, 4, 2)))
    g = FactorGraph(
        (hub, x, y),
        (
            Factor("s", (x, y), sym),
            Factor("hx", (hub, x), tuple(map(Fraction, (3, 1, 2, 5)))),
            Factor("hy", (hub, y), tuple(map(Fraction, (3, 1, 2, 5)))),
        ),
    )
    p = run_colour_passing(g)
    assert ("X", "Y") in p.rv_groups
    assert ("hx", "hy") in p.factor_groups


def test_check_mode():
    assert check_mode("alpha_acp") == "alpha-acp"
    with pytest.raises(ValueError):
        check_mode("exact")


def test_classes_pick_smallest_name():
    g = shared_b_graph()
    classes = exchangeability_classes(list(reversed(g.factors)), unit_scale=False)
    assert [rep.name for rep, _ in classes] == ["phi1"]


def _containment(fine, coarse):
    where = {n: i for i, group in enumerate(coarse) for n in group}
    return all(len({where[n] for n in group}) == 1 for group in fine)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**9))
def test_partition_soundness_and_dominance(seed):
    g = random_graph(random.Random(seed))
    acp = run_colour_passing(g, mode="acp")
    alpha = run_colour_passing(g, mode="alpha-acp")
    assert _containment(acp.factor_groups, alpha.factor_groups)
    assert _containment(acp.rv_groups, alpha.rv_groups)
    for p in (acp, alpha):
        for group in p.factor_groups:
            rep = g.factor_by_name[group[0]]
            for name in group:
                al = p.alignment[name]
                assert al.representative == rep.name
                assert validate_witness(g.factor_by_name[name], rep, al.witness)
                if p.mode == "acp":
                    assert al.alpha == 1
        for group in p.rv_groups:
            assert len({g.rv_by_name[n].range for n in group}) == 1
    # fixpoint is stable under one more pass
    state = init_colours(g, mode="alpha-acp")
    for _ in range(alpha.iterations):
        state = refine_step(g, state)
    grouping = state.grouping()
    assert refine_step(g, state).grouping() == grouping
    assert run_colour_passing(g, mode="alpha-acp") == alpha


def test_unscaled_graph_modes_agree():
    g = epidemic_graph()
    assert run_colour_passing(g, mode="acp").factor_groups == run_colour_passing(g).factor_groups


def test_iterations_bounded():
    g = epidemic_graph()
    p = run_colour_passing(g)
    assert 1 <= p.iterations <= len(g.rvs) + len(g.factors)


def test_permuted_copy_is_aligned():
    rng = random.Random(7)
    a, b, c, d = (boolean_rv(n) for n in "ABCD")
    base = Factor("f1", (a, b), tuple(map(Fraction, (2, 9, 4, 1))))
    copy = scaled_permuted_copy(rng, base, "f2", (c, d))
    g = FactorGraph((a, b, c, d), (base, copy))
    p = run_colour_passing(g)
    assert p.factor_groups == (("f1", "f2"),)
    assert validate_witness(copy, base, p.alignment["f2"].witness)
