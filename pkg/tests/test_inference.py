import math

import numpy as np
import pytest

from rankbench.algebra import MIN_PLUS, SUM_PRODUCT
from rankbench.errors import ContradictoryEvidenceError, DomainError, StateSpaceTooLarge
from rankbench.inference import elimination_order, enumerate_oracle, min_fill_order, posterior_marginals
from rankbench.model import ExplicitTable, Network, Prior, RankNetwork, Variable

from randnet import random_evidence, random_network, random_rank_network


def fault_effect():
    # F -> E with P(F=present)=0.2, P(E=present | F) = 0.9 / 0.1
    return Network(
        [Variable("F"), Variable("E")],
        {"E": ("F",)},
        {"F": Prior((0.8, 0.2)), "E": ExplicitTable(((0.9, 0.1), (0.1, 0.9)))},
    )


def rank_fault_effect():
    return RankNetwork(
        [Variable("F"), Variable("E")],
        {"E": ("F",)},
        {"F": [0, 2], "E": [[0, 3], [1, 0]]},
    )


def test_numeric_posterior_by_hand():
    post = posterior_marginals(fault_effect(), {"E": "present"}, ["F"])
    # 0.2*0.9 / (0.2*0.9 + 0.8*0.1)
    assert post["F"]["present"] == pytest.approx(0.18 / 0.26, abs=1e-12)
    assert post["F"]["present"] == pytest.approx(0.6923, abs=1e-4)


def test_rank_posterior_by_hand():
    post = posterior_marginals(rank_fault_effect(), {"E": "present"}, ["F"])
    # joint ranks: F=present 2+0, F=absent 0+3; subtract the minimum 2
    assert post["F"] == {"absent": 1, "present": 0}


def test_prior_echo_without_evidence():
    post = posterior_marginals(fault_effect(), {}, ["F", "E"])
    assert post["F"]["present"] == pytest.approx(0.2)
    assert post["E"]["present"] == pytest.approx(0.2 * 0.9 + 0.8 * 0.1)
    ranks = posterior_marginals(rank_fault_effect(), {}, ["F", "E"])
    assert ranks["F"] == {"absent": 0, "present": 2}
    assert ranks["E"] == {"absent": 0, "present": 2}


def test_observed_target_is_point_mass():
    post = posterior_marginals(fault_effect(), {"E": "present"}, ["E"])
    assert post["E"] == {"absent": 0.0, "present": 1.0}
    ranks = posterior_marginals(rank_fault_effect(), {"E": "present"}, ["E"])
    assert ranks["E"] == {"absent": math.inf, "present": 0}


def test_empty_targets():
    assert posterior_marginals(fault_effect(), {}, []) == {}
    assert enumerate_oracle(fault_effect(), {}, []) == {}


def test_contradictory_evidence_names_the_evidence():
    net = Network(
        [Variable("F"), Variable("E")],
        {"E": ("F",)},
        {"F": Prior((1.0, 0.0)), "E": ExplicitTable(((1.0, 0.0), (0.0, 1.0)))},
    )
    with pytest.raises(ContradictoryEvidenceError, match="E=present"):
        posterior_marginals(net, {"E": "present"}, ["F"])
    with pytest.raises(ContradictoryEvidenceError):
        enumerate_oracle(net, {"E": "present"}, ["F"])
    rnet = RankNetwork([Variable("F"), Variable("E")], {"E": ("F",)}, {"F": [0, math.inf], "E": [[0, math.inf], [0, 0]]})
    with pytest.raises(ContradictoryEvidenceError):
        posterior_marginals(rnet, {"E": "present"}, ["F"])


def test_unknown_evidence_value():
    with pytest.raises(DomainError):
        posterior_marginals(fault_effect(), {"E": "sometimes"}, ["F"])
    with pytest.raises(DomainError):
        posterior_marginals(fault_effect(), {"G": "present"}, ["F"])


def test_oracle_refuses_large_state_space():
    n = 21
    variables = [Variable(f"v{i}") for i in range(n)]
    net = Network(variables, {}, {v.name: Prior((0.5, 0.5)) for v in variables})
    with pytest.raises(StateSpaceTooLarge):
        enumerate_oracle(net, {}, ["v0"])
    # elimination has no such limit
    assert posterior_marginals(net, {}, ["v0"])["v0"]["present"] == pytest.approx(0.5)


@pytest.mark.parametrize("seed", range(30))
def test_matches_oracle_on_multivalued_networks(seed):
    rng = np.random.default_rng(seed)
    net = random_network(rng, n_vars=int(rng.integers(2, 7)), max_card=3)
    ev = random_evidence(rng, net, max_size=2)
    want = enumerate_oracle(net, ev, list(net.variables))
    got = posterior_marginals(net, ev, list(net.variables))
    for v in want:
        assert got[v] == pytest.approx(want[v], abs=1e-9)

    rnet = random_rank_network(rng, max_card=3, infs=0.15)
    ev = random_evidence(rng, rnet, max_size=2)
    try:
        want = enumerate_oracle(rnet, ev, list(rnet.variables))
    except ContradictoryEvidenceError:
        with pytest.raises(ContradictoryEvidenceError):
            posterior_marginals(rnet, ev, list(rnet.variables))
        return
    assert posterior_marginals(rnet, ev, list(rnet.variables)) == want


@pytest.mark.parametrize("seed", range(20))
def test_order_invariance(seed):
    rng = np.random.default_rng(1000 + seed)
    n = int(rng.integers(5, 11))
    net = random_network(rng, n_vars=n, max_parents=3)
    rnet = random_rank_network(rng, n_vars=n, max_parents=3)
    targets = [f"x{i}" for i in rng.choice(n, size=2, replace=False)]
    for model in (net, rnet):
        ev = {k: v for k, v in random_evidence(rng, model, max_size=3).items() if k not in targets}
        hidden = [v for v in model.variables if v not in targets and v not in ev]
        a = posterior_marginals(model, ev, targets)
        b = posterior_marginals(model, ev, targets, order=list(reversed(hidden)))
        c = posterior_marginals(model, ev, targets, order=list(rng.permutation(hidden)))
        if isinstance(model, RankNetwork):
            assert a == b == c
        else:
            for t in targets:
                assert b[t] == pytest.approx(a[t], abs=1e-9)
                assert c[t] == pytest.approx(a[t], abs=1e-9)


@pytest.mark.parametrize("seed", range(15))
def test_posteriors_are_normalized(seed):
    rng = np.random.default_rng(2000 + seed)
    net = random_network(rng, n_vars=8, max_card=3)
    post = posterior_marginals(net, random_evidence(rng, net, max_size=3), list(net.variables))
    for dist in post.values():
        assert math.fsum(dist.values()) == pytest.approx(1.0, abs=1e-9)
    rnet = random_rank_network(rng, n_vars=8, max_card=3)
    ranks = posterior_marginals(rnet, random_evidence(rng, rnet, max_size=3), list(rnet.variables))
    for dist in ranks.values():
        assert min(dist.values()) == 0
        assert all(isinstance(k, int) or k == math.inf for k in dist.values())


def test_explicit_algebra_override():
    # a numeric network evaluated under min-plus treats entries as ranks
    net = rank_fault_effect()
    assert posterior_marginals(net, {}, ["F"], algebra=MIN_PLUS) == posterior_marginals(net, {}, ["F"])
    assert posterior_marginals(net, {}, ["F"], algebra="rank") == posterior_marginals(net, {}, ["F"])
    num = posterior_marginals(fault_effect(), {}, ["F"], algebra=SUM_PRODUCT)
    assert num["F"]["present"] == pytest.approx(0.2)


def test_min_fill_prefers_simplicial_then_name():
    # chain a - b - c: eliminating b first adds a fill edge, a and c add none
    order = min_fill_order([("a", "b"), ("b", "c")], ["a", "b", "c"])
    assert order[0] == "a"
    assert min_fill_order([("a", "b"), ("b", "c")], ["b", "c", "a"]) == order


def test_elimination_order_skips_targets_and_evidence(car):
    order = elimination_order(car.network, {"engine-start": "absent"}, ["battery"])
    assert "battery" not in order and "engine-start" not in order
    assert len(order) == len(car.network.variables) - 2


def test_car_posteriors_match_oracle(car):
    ev = {"engine-start": "absent", "lights": "absent", "radio": "absent"}
    want = enumerate_oracle(car.network, ev, list(car.faults))
    got = posterior_marginals(car.network, ev, list(car.faults))
    for f in car.faults:
        assert got[f]["present"] == pytest.approx(want[f]["present"], rel=1e-9, abs=1e-15)
