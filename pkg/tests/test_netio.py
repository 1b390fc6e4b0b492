import json
import math

import numpy as np
import pytest

from rankbench.errors import ValidationError
from rankbench.kappa import ConversionPolicy, convert_network
from rankbench.model import ExplicitTable, Network, NoisyMax, NoisyOr, Prior, RankNetwork, Variable
from rankbench.netio import dumps, load_network, loads, network_from_dict, network_to_dict, save_network

from randnet import random_network, random_rank_network


def _same_tables(a, b):
    assert list(a.variables) == list(b.variables)
    assert a.parents == b.parents
    for name in a.variables:
        assert a.variables[name] == b.variables[name]
        assert np.array_equal(a.table(name), b.table(name))


def test_car_round_trip(car, tmp_path):
    path = tmp_path / "car.json"
    save_network(car.network, path)
    back = load_network(path)
    _same_tables(car.network, back)
    assert back.specs == car.network.specs
    assert back.diagnoses == car.network.diagnoses and back.findings == car.network.findings
    # read -> write -> read is the identity on the text too
    assert dumps(back) == path.read_text(encoding="utf-8")


def test_rank_round_trip(car, tmp_path):
    ranks = convert_network(car.network, ConversionPolicy(0.1))
    text = dumps(ranks)
    assert '"inf"' in text
    back = loads(text)
    assert isinstance(back, RankNetwork)
    _same_tables(ranks, back)
    assert dumps(back) == text


@pytest.mark.parametrize("seed", range(10))
def test_random_round_trip(seed):
    rng = np.random.default_rng(seed)
    for net in (random_network(rng, max_card=3), random_rank_network(rng, max_card=3, infs=0.2)):
        back = loads(dumps(net))
        _same_tables(net, back)
        assert dumps(back) == dumps(net)


def test_noisy_specs_survive():
    net = Network(
        [Variable("a"), Variable("b"), Variable("c", ("lo", "mid", "hi"))],
        {"b": ("a",), "c": ("a",)},
        {
            "a": Prior((0.9, 0.1)),
            "b": NoisyOr((0.8,), leak=0.05, active="absent", parent_active=("present",)),
            "c": NoisyMax((((1, 0, 0), (0.2, 0.3, 0.5)),), leak=(0.9, 0.1, 0.0), severity=("hi", "mid", "lo")),
        },
    )
    back = loads(dumps(net))
    assert back.specs == net.specs
    _same_tables(net, back)


def test_rows_follow_lexicographic_parent_order():
    net = Network(
        [Variable("p"), Variable("q"), Variable("x")],
        {"x": ("p", "q")},
        {"p": Prior((0.5, 0.5)), "q": Prior((0.5, 0.5)),
         "x": ExplicitTable(((1, 0), (0.9, 0.1), (0.8, 0.2), (0.7, 0.3)))},
    )
    doc = network_to_dict(net)
    node = next(n for n in doc["nodes"] if n["name"] == "x")
    assert node["rows"][1] == [0.9, 0.1]
    # first parent most significant: p=absent, q=present is row 1
    assert net.table("x")[0, 1, 1] == pytest.approx(0.1)


@pytest.mark.parametrize("mutate", [
    lambda d: d.pop("variables"),
    lambda d: d.update(format="something-else"),
    lambda d: d.update(kind="quantum"),
    lambda d: d["nodes"][0].update(kind="mystery"),
    lambda d: d["nodes"][0].update(parents=["nowhere"]),
    lambda d: d["nodes"][0].update(probabilities=[0.5, 0.6]),
])
def test_malformed_documents(mutate):
    doc = network_to_dict(Network([Variable("a")], {}, {"a": Prior((0.5, 0.5))}))
    mutate(doc)
    with pytest.raises(ValidationError):
        network_from_dict(doc)


def test_not_json(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text("{not json", encoding="utf-8")
    with pytest.raises(ValidationError):
        load_network(path)
    with pytest.raises(ValidationError):
        load_network(tmp_path / "missing.json")


def test_rank_entries_are_ints_or_inf():
    net = RankNetwork([Variable("a")], {}, {"a": [0, math.inf]})
    doc = json.loads(dumps(net))
    node = doc["nodes"][0]
    values = json.dumps(node)
    assert '"inf"' in values and "0.0" not in values
