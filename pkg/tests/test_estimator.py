from fractions import Fraction

import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from factories import epidemic_graph, shared_b_graph
from liftfg import LiftedModelBuilder, LiftedQueryEngine, ParametricFactorGraph, Query
from liftfg.estimator import check_factor_graph, check_model, check_queries


def test_params_round_trip():
    builder = LiftedModelBuilder(mode="acp", evidence={"A": "true"})
    assert builder.get_params() == {"mode": "acp", "evidence": {"A": "true"}}
    builder.set_params(mode="alpha-acp")
    assert clone(builder).get_params()["mode"] == "alpha-acp"
    assert LiftedQueryEngine().get_params() == {"engine": "lve"}


def test_builder_fit_transform():
    g = epidemic_graph(people=("alice", "bob"), scale={"phi1.bob": 3})
    builder = LiftedModelBuilder()
    pfg = builder.fit_transform(g)
    assert isinstance(pfg, ParametricFactorGraph)
    assert builder.n_factor_groups_ == 4 and builder.n_rv_groups_ == 4
    assert builder.n_iter_ >= 1
    assert LiftedModelBuilder(mode="acp").fit(g).n_factor_groups_ > 4
    back = builder.inverse_transform(pfg, preserve_scale=True)
    assert {f.name: f for f in back.factors} == {f.name: f for f in g.factors}


def test_builder_uses_evidence():
    g = epidemic_graph(people=("alice", "bob"))
    builder = LiftedModelBuilder(evidence={"Sick.alice": "true"}).fit(g)
    assert ("Sick.alice",) in builder.partition_.rv_groups


def test_builder_validation():
    with pytest.raises(NotFittedError):
        LiftedModelBuilder().transform(shared_b_graph())
    with pytest.raises(TypeError):
        LiftedModelBuilder().fit([[1, 2]])
    with pytest.raises(ValueError):
        LiftedModelBuilder(mode="bogus").fit(shared_b_graph())
    with pytest.raises(TypeError):
        LiftedModelBuilder().inverse_transform(shared_b_graph())


@pytest.mark.parametrize("engine", ["ve", "lve"])
def test_query_engine(engine):
    g = shared_b_graph()
    expected = {"true": Fraction(4, 13), "false": Fraction(9, 13)}
    assert LiftedQueryEngine(engine).fit(g).predict("B") == [expected]
    pfg = LiftedModelBuilder().fit_transform(g)
    answers = LiftedQueryEngine(engine).fit(pfg).predict(["B", Query("A")])
    assert answers[0] == expected and sum(answers[1].values()) == 1


def test_query_engine_validation():
    with pytest.raises(NotFittedError):
        LiftedQueryEngine().predict("B")
    with pytest.raises(ValueError):
        LiftedQueryEngine("mcmc").fit(shared_b_graph())
    with pytest.raises(TypeError):
        LiftedQueryEngine().fit("graph")


def test_helpers():
    g = shared_b_graph()
    assert check_factor_graph(g) is g
    assert check_model(g) is g
    assert check_queries("B=true") == [Query("B", "true")]
    with pytest.raises(TypeError):
        check_factor_graph(None)
