import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pacingeq import InstanceError, PacingProfile, gen_arc_instance, gen_grid_instance, validate_instance
from pacingeq.cli import instance_digest
from pacingeq.instance import arc_budget, dot, dumps_instance, load_instance, loads_instance, save_instance


def one_by_one(**over):
    raw = {
        "n": 2,
        "d": 2,
        "items": [{"features": [1.0, 0.0], "probability": 1.0, "reserve": 0.0}],
        "buyers": [{"weights": [1.0, 1.0], "budget": 1.0, "probability": 1.0}],
    }
    raw.update(over)
    return raw


def test_single_atoms_give_omega_and_budget_floor():
    inst = validate_instance(one_by_one())
    assert inst.omega == 1.0
    assert inst.b_min == 1.0
    assert inst.t_max == 1.0


def test_probability_mass_far_from_one_is_rejected():
    raw = one_by_one(buyers=[{"weights": [1.0, 1.0], "budget": 1.0, "probability": 0.5}])
    with pytest.raises(InstanceError, match="probability mass"):
        validate_instance(raw)


def test_zero_budget_is_rejected():
    raw = one_by_one(buyers=[{"weights": [1.0, 1.0], "budget": 0.0, "probability": 1.0}])
    with pytest.raises(InstanceError, match="budget floor"):
        validate_instance(raw)


@pytest.mark.parametrize(
    "over",
    [
        {"items": [{"features": [1.0], "probability": 1.0}]},
        {"buyers": [{"weights": [1.0, 1.0, 1.0], "budget": 1.0, "probability": 1.0}]},
        {"items": []},
        {"buyers": []},
        {"buyers": [{"weights": [-1.0, 1.0], "budget": 1.0, "probability": 1.0}]},
        {"buyers": [{"weights": [0.0, 0.0], "budget": 1.0, "probability": 1.0}]},
        {"n": 1},
    ],
)
def test_malformed_instances_are_rejected(over):
    with pytest.raises(InstanceError):
        validate_instance(one_by_one(**over))


def test_near_unit_mass_is_renormalized():
    raw = one_by_one(
        buyers=[
            {"weights": [1.0, 1.0], "budget": 1.0, "probability": 0.5 + 2e-10},
            {"weights": [2.0, 1.0], "budget": 1.0, "probability": 0.5 + 2e-10},
        ]
    )
    inst = validate_instance(raw)
    assert math.isclose(sum(b.probability for b in inst.buyers), 1.0, abs_tol=1e-15)
    raw["buyers"][0]["probability"] = 0.5 + 1e-6
    with pytest.raises(InstanceError, match="probability mass"):
        validate_instance(raw)


def test_one_feature_dimension_warns():
    raw = {
        "n": 2,
        "d": 1,
        "items": [{"features": [1.0], "probability": 1.0}],
        "buyers": [{"weights": [1.0], "budget": 1.0, "probability": 1.0}],
    }
    with pytest.warns(UserWarning):
        validate_instance(raw)


def test_arc_budget_hand_values():
    assert arc_budget([2.0, 0.0]) == pytest.approx(1 / math.pi, abs=1e-15)
    assert arc_budget([math.sqrt(2), math.sqrt(2)]) == pytest.approx((2 - math.sqrt(2)) / math.pi, abs=1e-15)


def test_arc_instance_shape(arc_instance):
    inst = arc_instance
    assert (inst.n, inst.d, inst.num_buyers, inst.num_items) == (2, 2, 320, 2)
    assert [it.features for it in inst.items] == [(1.0, 0.0), (0.0, 1.0)]
    assert all(it.probability == 0.5 and it.reserve == 0.0 for it in inst.items)
    assert np.allclose(inst.buyer_probabilities(), 1 / 320, rtol=0, atol=1e-15)
    norms = np.linalg.norm(inst.weight_matrix(), axis=1)
    assert norms.min() >= 2.0 - 1e-12 and norms.max() <= 3.0 + 1e-12
    angles = np.arctan2(inst.weight_matrix()[:, 1], inst.weight_matrix()[:, 0])
    assert len(np.unique(np.round(angles, 12))) == 320


def test_arc_budgets_satisfy_the_defining_identity(arc_instance):
    for b in arc_instance.buyers:
        w1, w2 = b.weights
        norm = math.hypot(w1, w2)
        assert abs(b.budget * math.pi * norm - (2 * norm - w1 - w2)) <= 1e-12


@pytest.mark.parametrize("a,b,count", [(2, 3, 320), (1, 4, 12), (1.5, 2.5, 7), (1, 2, 1)])
def test_arc_omega_is_outer_radius(a, b, count):
    assert abs(gen_arc_instance(a, b, count).omega - b) <= 1e-12


@pytest.mark.parametrize("kwargs", [{"count": 0}, {"a": 0.5}, {"a": 3.0, "b": 2.0}])
def test_arc_generator_rejects_bad_parameters(kwargs):
    with pytest.raises(InstanceError):
        gen_arc_instance(**kwargs)


def test_grid_instance_shape(grid_instance):
    inst = grid_instance
    assert (inst.n, inst.d, inst.num_buyers, inst.num_items) == (3, 2, 100, 10)
    assert set(inst.budgets()) == {0.6}
    W = inst.weight_matrix()
    assert W.min() > 1.0 and W.max() < 2.0
    assert len({tuple(w) for w in W}) == 100
    X = inst.feature_matrix()
    assert np.allclose(X.sum(axis=1), 1.0)
    assert np.allclose(np.sort(X[:, 0]), np.linspace(0, 1, 10))


def test_json_round_trip_is_exact(tmp_path, arc_instance):
    path = tmp_path / "arc.json"
    save_instance(arc_instance, path)
    again = load_instance(path)
    assert again == arc_instance
    assert dumps_instance(again) == dumps_instance(arc_instance)
    assert instance_digest(again) == instance_digest(arc_instance)


def test_digest_tracks_content(grid_instance):
    raw = grid_instance.to_dict()
    raw["buyers"][0]["budget"] = 0.61
    assert instance_digest(validate_instance(raw)) != instance_digest(grid_instance)


def test_profile_range_is_enforced(grid_instance):
    PacingProfile.zeros(grid_instance).check(grid_instance)
    with pytest.raises(ValueError):
        PacingProfile([0.0] * 99).check(grid_instance)
    with pytest.raises(ValueError):
        PacingProfile([grid_instance.t_max * 1.01] * 100).check(grid_instance)
    with pytest.raises(ValueError):
        PacingProfile([-0.1] + [0.0] * 99)


def test_dot_uses_fixed_order():
    assert dot([1e16, 1.0, -1e16], [1.0, 1.0, 1.0]) == (1e16 + 1.0) - 1e16


finite = st.floats(0.05, 5.0, allow_nan=False, allow_infinity=False)


@settings(max_examples=40, deadline=None)
@given(
    weights=st.lists(st.tuples(finite, finite), min_size=1, max_size=6),
    budgets=st.lists(finite, min_size=6, max_size=6),
    n=st.integers(2, 5),
)
def test_random_instances_round_trip(weights, budgets, n):
    raw = {
        "n": n,
        "d": 2,
        "items": [{"features": [1.0, 0.5], "probability": 1.0, "reserve": 0.1}],
        "buyers": [
            {"weights": list(w), "budget": budgets[i], "probability": 1.0 / len(weights)}
            for i, w in enumerate(weights)
        ],
    }
    inst = validate_instance(raw)
    assert loads_instance(json.dumps(inst.to_dict())) == inst
    assert inst.omega == max(dot(b.weights, (1.0, 0.5)) for b in inst.buyers)
    assert inst.b_min == min(budgets[: len(weights)])
