"""Track subset selection."""

import numpy as np
import pytest

from trackcut.selection import (
    SelectionConfig,
    SelectionInstance,
    brute_force_select,
    build_instance,
    greedy_select,
    objective,
    track_similarities,
)

# Hand-evaluated 2-track instance used across several tests.
INSTANCE = SelectionInstance(
    similarities=np.array([[1.0, 0.5], [0.5, 1.0]]),
    confidences=np.array([0.9, 0.2]),
)
CFG = SelectionConfig(open_cost=0.3, discriminative_weight=1.0)


class TestObjective:
    def test_empty_set_is_zero(self):
        assert objective(INSTANCE, (), CFG) == 0.0

    def test_single_selection(self):
        # coverage (1 + 0.5) - cost 0.3 + confidence 0.9 = 2.1
        assert objective(INSTANCE, (0,), CFG) == pytest.approx(2.1)

    def test_both_selected(self):
        # coverage (1 + 1) - cost 0.6 + confidences 1.1 = 2.5
        assert objective(INSTANCE, (0, 1), CFG) == pytest.approx(2.5)

    def test_duplicate_selection_rejected(self):
        with pytest.raises(ValueError):
            objective(INSTANCE, (0, 0), CFG)


class TestGreedySelect:
    def test_hand_instance_order_and_value(self):
        result = greedy_select(INSTANCE, SelectionConfig(open_cost=0.3, discriminative_weight=1.0, budget=2))
        assert result.selected == (0, 1)
        assert result.objective == pytest.approx(2.5)
        assert result.gains[0] == pytest.approx(2.1)
        assert result.gains[1] == pytest.approx(0.4)

    def test_stops_when_gain_nonpositive(self):
        cfg = SelectionConfig(open_cost=2.0, discriminative_weight=0.0)
        instance = SelectionInstance(
            similarities=np.array([[1.0, 0.0], [0.0, 1.0]]),
            confidences=np.array([0.5, 0.5]),
        )
        result = greedy_select(instance, cfg)
        assert result.selected == ()
        assert result.objective == 0.0

    def test_budget_respected(self):
        cfg = SelectionConfig(open_cost=0.0, discriminative_weight=0.0, budget=1)
        result = greedy_select(INSTANCE, cfg)
        assert len(result.selected) == 1

    def test_tie_breaks_toward_smallest_index(self):
        instance = SelectionInstance(
            similarities=np.eye(3), confidences=np.zeros(3)
        )
        cfg = SelectionConfig(open_cost=0.5, discriminative_weight=0.0)
        result = greedy_select(instance, cfg)
        assert result.selected[0] == 0

    def test_lazy_matches_naive(self):
        rng = np.random.default_rng(9)
        for _ in range(50):
            n = int(rng.integers(1, 9))
            feats = rng.normal(size=(n, 4))
            sims = feats @ feats.T
            inst = SelectionInstance(
                similarities=sims, confidences=rng.uniform(0, 1, size=n)
            )
            cfg = SelectionConfig(
                open_cost=float(rng.uniform(0, 1)),
                discriminative_weight=float(rng.choice([0.0, 1.0])),
            )
            lazy = greedy_select(inst, cfg, lazy=True)
            naive = greedy_select(inst, cfg, lazy=False)
            assert lazy.selected == naive.selected
            assert lazy.objective == pytest.approx(naive.objective)

    def test_greedy_never_beats_brute_force(self):
        rng = np.random.default_rng(4)
        for _ in range(30):
            n = int(rng.integers(1, 7))
            feats = rng.normal(size=(n, 3))
            inst = SelectionInstance(
                similarities=feats @ feats.T,
                confidences=rng.uniform(0, 1, size=n),
            )
            cfg = SelectionConfig(
                open_cost=float(rng.uniform(0, 1)), discriminative_weight=1.0
            )
            greedy = greedy_select(inst, cfg)
            best = brute_force_select(inst, cfg)
            assert greedy.objective <= best.objective + 1e-12


class TestBuildInstance:
    def test_similarities_are_feature_dot_products(self):
        class Stub:
            def __init__(self, feature, confidence):
                self.feature = feature
                self.confidence = confidence

        tracks = [
            Stub(np.array([1.0, 0.0]), 0.9),
            Stub(np.array([0.0, 1.0]), 0.4),
            Stub(None, 0.5),
        ]
        inst = build_instance(tracks)
        assert inst.similarities[0, 0] == pytest.approx(1.0)
        assert inst.similarities[0, 1] == pytest.approx(0.0)
        # Tracks without features share no similarity with anything.
        assert inst.similarities[2, 2] == 0.0
        np.testing.assert_allclose(inst.confidences, [0.9, 0.4, 0.5])

    def test_non_square_rejected(self):
        with pytest.raises(ValueError):
            SelectionInstance(
                similarities=np.zeros((2, 3)), confidences=np.zeros(2)
            )
