import numpy as np
import pytest

from farel.objectives import CANONICAL_OBJECTIVES, RewardVector, assemble_reward, canonical_order


def test_canonical_order_is_fixed():
    assert CANONICAL_OBJECTIVES == ("R", "SP", "EO", "OAE", "PP", "PE", "IF", "CSC")


def test_assemble_reward_orders_canonically():
    rv = assemble_reward(0.3, {"SP": -0.1})
    assert rv.labels == ("R", "SP")
    assert rv.values == (0.3, -0.1)


def test_assemble_reward_performance_only():
    rv = assemble_reward(0.0, {})
    assert rv.labels == ("R",)
    assert rv.values == (0.0,)


def test_assemble_reward_reorders():
    rv = assemble_reward(0.3, {"IF": -0.2, "SP": -0.1})
    assert rv.labels == ("R", "SP", "IF")
    assert rv.values == (0.3, -0.1, -0.2)


def test_assemble_reward_rejects_duplicate_r():
    with pytest.raises(ValueError):
        assemble_reward(0.3, {"R": 1.0})


def test_canonical_order_rejects_unknown_and_duplicates():
    with pytest.raises(ValueError):
        canonical_order(["SP", "XX"])
    with pytest.raises(ValueError):
        canonical_order(["SP", "SP"])


def test_reward_vector_validates_order():
    with pytest.raises(ValueError):
        RewardVector(("SP", "R"), (0.0, 0.0))


def test_reward_vector_lookup_and_array():
    rv = RewardVector(("R", "IF"), (1.5, -0.25))
    assert rv["IF"] == -0.25
    assert np.array_equal(rv.as_array(), np.array([1.5, -0.25]))
