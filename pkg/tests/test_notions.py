import numpy as np
import pytest

from farel.distances import BRAYCURTIS, HEOM, HMOM
from farel.history import DISCOUNTED, SLIDING, FairnessHistory, WindowSpec
from farel.notions import (
    FairnessValue,
    NotionSpec,
    consistency_score_complement,
    equal_opportunity,
    evaluate,
    individual_fairness,
    overall_accuracy_equality,
    predictive_equality,
    predictive_parity,
    statistical_parity,
    total_variation,
)

from conftest import (
    make_interaction,
    mixed_schema,
    oracle_csc,
    oracle_group_counts,
    oracle_group_notion,
    oracle_individual_fairness,
    random_interaction,
)


def history_from(entries, window=1000):
    h = FairnessHistory(WindowSpec(SLIDING, window))
    for x in entries:
        h.push(x)
    return h


def interactions(actions_by_group, feedbacks_by_group=None):
    """Interleave per-group action (and optional feedback) sequences."""
    entries = []
    t = 0
    for group, actions in actions_by_group.items():
        feedbacks = (feedbacks_by_group or {}).get(group, [None] * len(actions))
        for a, f in zip(actions, feedbacks):
            entries.append(make_interaction(t, groups=(group,), action=a, feedback=f))
            t += 1
    return entries


class TestStatisticalParity:
    def test_hand_count(self):
        h = history_from(interactions({"g": [1, 1, 0], "h": [1, 0]}))
        assert statistical_parity(h, "g", "h").value == pytest.approx(-abs(2 / 3 - 1 / 2))

    def test_identical_sequences(self):
        h = history_from(interactions({"g": [1, 0, 1], "h": [1, 0, 1]}))
        v = statistical_parity(h, "g", "h")
        assert v.defined and v.value == 0.0

    def test_absent_group_undefined(self):
        h = history_from(interactions({"g": [1, 0]}))
        assert not statistical_parity(h, "g", "h").defined


class TestEqualOpportunity:
    def test_hand_count(self):
        h = history_from(
            interactions(
                {"g": [1, 0], "h": [1]},
                {"g": [1, 1], "h": [1]},  # g: tp=1, fn=1; h: tp=1, fn=0
            )
        )
        assert equal_opportunity(h, "g", "h").value == pytest.approx(-0.5)

    def test_equal_matrices(self):
        h = history_from(interactions({"g": [1, 0], "h": [1, 0]}, {"g": [1, 0], "h": [1, 0]}))
        assert equal_opportunity(h, "g", "h").value == 0.0

    def test_no_positives_undefined(self):
        h = history_from(interactions({"g": [0], "h": [1]}, {"g": [0], "h": [1]}))
        assert not equal_opportunity(h, "g", "h").defined


class TestOverallAccuracyEquality:
    def test_hand_count(self):
        # g: acc 2/3 (tp, tn, fp), h: acc 1/2 (tp, fn)
        h = history_from(
            interactions({"g": [1, 0, 1], "h": [1, 0]}, {"g": [1, 0, 0], "h": [1, 1]})
        )
        assert overall_accuracy_equality(h, "g", "h").value == pytest.approx(-abs(2 / 3 - 1 / 2))

    def test_empty_undefined(self):
        h = history_from(interactions({"g": [1], "h": [1]}))
        assert not overall_accuracy_equality(h, "g", "h").defined


class TestPredictiveParity:
    def test_hand_count(self):
        h = history_from(interactions({"g": [1, 1], "h": [1]}, {"g": [1, 0], "h": [1]}))
        assert predictive_parity(h, "g", "h").value == pytest.approx(-0.5)

    def test_no_flags_undefined(self):
        h = history_from(interactions({"g": [0], "h": [1]}, {"g": [1], "h": [1]}))
        assert not predictive_parity(h, "g", "h").defined


class TestPredictiveEquality:
    def test_hand_count(self):
        # g: fp=1, tn=0 -> fpr 1; h: fp=0, tn=1 -> fpr 0
        h = history_from(interactions({"g": [1], "h": [0]}, {"g": [0], "h": [0]}))
        assert predictive_equality(h, "g", "h").value == pytest.approx(-1.0)

    def test_no_negatives_undefined(self):
        h = history_from(interactions({"g": [1], "h": [0]}, {"g": [1], "h": [0]}))
        assert not predictive_equality(h, "g", "h").defined


class TestGroupSymmetryAndScaling:
    @pytest.mark.parametrize("kind", ["SP", "EO", "OAE", "PP", "PE"])
    def test_symmetry(self, kind, rng):
        schema = mixed_schema()
        h = history_from([random_interaction(rng, t, schema) for t in range(60)])
        spec_ab = NotionSpec(kind, groups=("g0", "g1"))
        spec_ba = NotionSpec(kind, groups=("g1", "g0"))
        assert evaluate(h, spec_ab).value == pytest.approx(evaluate(h, spec_ba).value, abs=1e-15)

    @pytest.mark.parametrize("kind", ["SP", "EO", "OAE", "PP", "PE"])
    def test_invariant_under_count_doubling(self, kind, rng):
        schema = mixed_schema()
        base = [random_interaction(rng, t, schema) for t in range(30)]
        doubled = []
        for i, x in enumerate(base):
            for j in range(2):
                doubled.append(
                    make_interaction(
                        2 * i + j,
                        schema=schema,
                        groups=x.groups,
                        action=x.action,
                        action_dist=x.action_dist,
                        feedback=x.feedback,
                    )
                )
        spec = NotionSpec(kind, groups=("g0", "g1"))
        single, double = evaluate(history_from(base), spec), evaluate(history_from(doubled), spec)
        assert single.defined == double.defined
        if single.defined:
            assert single.value == pytest.approx(double.value, abs=1e-12)


class TestIndividualFairness:
    def test_identical_pair_is_perfectly_fair(self):
        entries = [make_interaction(t, numeric=(2.0, 3.0), nominal=(1, 2), action_dist=(0.3, 0.7), action=1) for t in range(2)]
        v = individual_fairness(history_from(entries), NotionSpec("IF", distance=HEOM))
        assert v.defined and v.value == pytest.approx(0.0)

    def test_term_cancellation_pins_to_minus_one(self):
        # d = exp(-0.1 * raw) = 0.5 -> raw = 10 * ln 2; achieved with one numeric
        # gap of that size (bounds widened through a custom schema would be
        # overkill: use braycurtis with d = 0.5 instead).
        entries = [
            make_interaction(0, numeric=(10.0, 0.0), nominal=(0, 0), action_dist=(1.0, 0.0), action=0),
            make_interaction(1, numeric=(10.0 / 3, 0.0), nominal=(0, 0), action_dist=(0.5, 0.5), action=0),
        ]
        # braycurtis = |1 - 1/3| / |1 + 1/3| = 0.5, tv = 0.5
        v = individual_fairness(history_from(entries), NotionSpec("IF", distance=BRAYCURTIS))
        assert v.value == pytest.approx(-1.0)

    def test_fewer_than_two_undefined(self):
        h = history_from([make_interaction(0)])
        assert not individual_fairness(h, NotionSpec("IF")).defined

    @pytest.mark.parametrize("metric", [BRAYCURTIS, HEOM, HMOM])
    def test_matches_pairwise_oracle(self, metric, rng):
        schema = mixed_schema(sensitive=(False, True, False, False))
        entries = [random_interaction(rng, t, schema) for t in range(10)]
        v = individual_fairness(history_from(entries), NotionSpec("IF", distance=metric))
        assert v.value == pytest.approx(oracle_individual_fairness(entries, metric), abs=1e-12)


class TestConsistencyScoreComplement:
    def test_all_ignore_actions_agree(self):
        entries = [make_interaction(t, numeric=(t * 1.0, 0.0), action=0) for t in range(8)]
        v = consistency_score_complement(history_from(entries), NotionSpec("CSC", k=3))
        assert v.defined and v.value == 0.0

    def test_hand_evaluation(self):
        entries = [
            make_interaction(0, numeric=(1.0, 0.0), action=1),
            make_interaction(1, numeric=(2.0, 0.0), action=1),
            make_interaction(2, numeric=(3.0, 0.0), action=0),
        ]
        v = consistency_score_complement(history_from(entries), NotionSpec("CSC", k=2))
        assert v.value == pytest.approx(-(0 + 0 + 1) / 3)

    def test_too_few_undefined(self):
        entries = [make_interaction(t) for t in range(5)]
        assert not consistency_score_complement(history_from(entries), NotionSpec("CSC", k=5)).defined

    @pytest.mark.parametrize("metric", [BRAYCURTIS, HEOM, HMOM])
    def test_matches_exhaustive_knn_oracle(self, metric, rng):
        schema = mixed_schema(sensitive=(False, False, False, True))
        entries = [random_interaction(rng, t, schema) for t in range(50)]
        v = consistency_score_complement(
            history_from(entries), NotionSpec("CSC", distance=metric, k=5)
        )
        assert v.value == pytest.approx(oracle_csc(entries, metric, k=5), abs=1e-12)


class TestFuzzBounds:
    def test_all_defined_values_in_unit_interval(self, rng):
        schema = mixed_schema()
        group_specs = [NotionSpec(k, groups=("g0", "g1")) for k in ("SP", "EO", "OAE", "PP", "PE")]
        individual_specs = [NotionSpec("IF"), NotionSpec("CSC", k=3)]
        for _ in range(300):
            n = int(rng.integers(1, 30))
            entries = [random_interaction(rng, t, schema) for t in range(n)]
            h = history_from(entries)
            for spec in group_specs + individual_specs:
                v = evaluate(h, spec)
                if v.defined:
                    assert -1.0 <= v.value <= 0.0


def test_total_variation():
    assert total_variation((1.0, 0.0), (0.0, 1.0)) == 1.0
    assert total_variation((0.5, 0.5), (0.5, 0.5)) == 0.0
    assert total_variation((0.8, 0.2), (0.6, 0.4)) == pytest.approx(0.2)


def test_notion_spec_validation():
    with pytest.raises(ValueError):
        NotionSpec("SP")  # needs groups
    with pytest.raises(ValueError):
        NotionSpec("IF", distance="euclid")
    with pytest.raises(ValueError):
        NotionSpec("IF", lam=0.0)
    with pytest.raises(ValueError):
        NotionSpec("CSC", k=0)
    with pytest.raises(ValueError):
        NotionSpec("XX")
