"""Space-time superpixel segmentation."""

import math

import numpy as np
import pytest

from trackcut.core import DenseMap, FrameSize
from trackcut.segmentation import (
    COV_FLOOR,
    PROB_FLOOR,
    EnergyModel,
    SegmentationConfig,
    alpha_expansion,
    build_energy,
    build_graph,
    colour_unary,
    energy_of,
    fit_gmm,
    grid_superpixels,
    mean_squared_colour_distance,
    node_confidences,
    pairwise_weight,
    render_labels,
    segment,
    semantic_unary,
)

SIZE4 = FrameSize(width=4, height=4)


def _frames(num_frames, h=4, w=4, value=0.5):
    return [np.full((h, w, 3), value) for _ in range(num_frames)]


def _zero_flow(num_transitions, h=4, w=4):
    size = FrameSize(width=w, height=h)
    zero = DenseMap(size, np.zeros((h, w)))
    return [(zero, zero) for _ in range(num_transitions)]


class TestGridSuperpixels:
    def test_even_grid(self):
        labels = grid_superpixels(SIZE4, cell=2)
        assert labels.shape == (4, 4)
        assert labels[0, 0] == labels[1, 1] == 0
        assert labels[0, 2] == 1
        assert labels[2, 0] == 2
        assert labels.max() == 3

    def test_ragged_edges(self):
        labels = grid_superpixels(FrameSize(width=5, height=3), cell=2)
        # ceil(5/2) * ceil(3/2) = 3 * 2 clusters, all non-empty.
        assert labels.max() == 5
        assert len(np.unique(labels)) == 6


class TestBuildGraph:
    def test_single_superpixel_frames_connected_temporally(self):
        maps = [np.zeros((4, 4), dtype=np.int32)] * 2
        graph = build_graph(maps, _frames(2), _zero_flow(1))
        assert graph.num_nodes == 2
        assert len(graph.spatial_edges) == 0
        assert [tuple(e) for e in graph.temporal_edges] == [(0, 1)]

    def test_zero_flow_links_colocated(self):
        maps = [grid_superpixels(SIZE4, cell=2)] * 2
        graph = build_graph(maps, _frames(2), _zero_flow(1))
        temporal = {tuple(e) for e in graph.temporal_edges}
        assert temporal == {(0, 4), (1, 5), (2, 6), (3, 7)}

    def test_single_frame_has_no_temporal_edges(self):
        maps = [grid_superpixels(SIZE4, cell=2)]
        graph = build_graph(maps, _frames(1), [])
        assert len(graph.temporal_edges) == 0
        assert len(graph.spatial_edges) > 0

    def test_flow_displacement_clamped_inside(self):
        maps = [np.zeros((4, 4), dtype=np.int32)] * 2
        size = FrameSize(width=4, height=4)
        big = DenseMap(size, np.full((4, 4), 50.0))
        graph = build_graph(maps, _frames(2), [(big, big)])
        # Everything still lands somewhere in the next frame.
        assert len(graph.temporal_edges) == 1

    def test_node_colours_are_means(self):
        frame = np.zeros((4, 4, 3))
        frame[:2, :2] = [1.0, 0.5, 0.25]
        maps = [grid_superpixels(SIZE4, cell=2)]
        graph = build_graph(maps, [frame], [])
        np.testing.assert_allclose(graph.colours[0], [1.0, 0.5, 0.25])
        np.testing.assert_allclose(graph.colours[1], [0.0, 0.0, 0.0])


class TestFitGmm:
    def test_identical_samples_floor_covariance(self):
        samples = np.tile([0.3, 0.6, 0.9], (5, 1))
        weights = np.ones(5)
        gmm = fit_gmm(samples, weights, num_components=1)
        np.testing.assert_allclose(gmm.means[0], [0.3, 0.6, 0.9], atol=1e-12)
        np.testing.assert_allclose(gmm.covariances[0], COV_FLOOR * np.eye(3), atol=1e-12)

    def test_single_component_mean_is_weighted_mean(self):
        rng = np.random.default_rng(2)
        samples = rng.random((20, 3))
        weights = rng.uniform(0.1, 1.0, size=20)
        gmm = fit_gmm(samples, weights, num_components=1)
        expected = (samples * weights[:, None]).sum(axis=0) / weights.sum()
        np.testing.assert_allclose(gmm.means[0], expected, atol=1e-9)

    def test_two_clusters_recovered(self):
        rng = np.random.default_rng(3)
        a = rng.normal([0.2, 0.2, 0.2], 0.005, size=(40, 3))
        b = rng.normal([0.8, 0.8, 0.8], 0.005, size=(40, 3))
        samples = np.vstack([a, b])
        weights = np.ones(80)
        gmm = fit_gmm(samples, weights, num_components=2)
        means = sorted(gmm.means.tolist())
        np.testing.assert_allclose(means[0], a.mean(axis=0), atol=0.01)
        np.testing.assert_allclose(means[1], b.mean(axis=0), atol=0.01)

    def test_component_count_reduced_to_distinct(self):
        samples = np.array([[0.1, 0.1, 0.1], [0.1, 0.1, 0.1], [0.9, 0.9, 0.9]])
        gmm = fit_gmm(samples, np.ones(3), num_components=3)
        assert len(gmm.weights) == 2

    def test_log_likelihood_monotone(self):
        rng = np.random.default_rng(4)
        for trial in range(10):
            samples = rng.random((30, 3))
            weights = rng.uniform(0.05, 1.0, size=30)
            gmm = fit_gmm(samples, weights, num_components=3, seed=trial)
            trace = np.asarray(gmm.log_likelihood_trace)
            assert trace.size >= 1
            assert np.all(np.diff(trace) >= -1e-9)

    def test_zero_total_weight_rejected(self):
        with pytest.raises(ValueError):
            fit_gmm(np.random.rand(4, 3), np.zeros(4), num_components=1)


class TestUnaries:
    def test_semantic_frozen_values(self):
        assert semantic_unary(0.8, foreground=True) == pytest.approx(0.2231, abs=1e-4)
        assert semantic_unary(0.8, foreground=False) == pytest.approx(1.6094, abs=1e-4)

    def test_semantic_symmetric_at_half(self):
        assert semantic_unary(0.5, True) == pytest.approx(math.log(2.0))
        assert semantic_unary(0.5, False) == pytest.approx(math.log(2.0))

    def test_semantic_floor_engaged(self):
        assert semantic_unary(1.0, False) == pytest.approx(-math.log(PROB_FLOOR))
        assert semantic_unary(1.0, True) == pytest.approx(0.0)

    def test_semantic_range_checked(self):
        with pytest.raises(ValueError):
            semantic_unary(1.2, True)

    def test_colour_identical_models_symmetric(self):
        samples = np.random.default_rng(5).random((10, 3))
        gmm = fit_gmm(samples, np.ones(10), num_components=2)
        fg, bg = colour_unary(gmm, gmm, np.array([0.4, 0.4, 0.4]))
        assert fg == pytest.approx(bg)

    def test_colour_far_colour_hits_floor(self):
        samples = np.tile([0.5, 0.5, 0.5], (5, 1))
        gmm = fit_gmm(samples, np.ones(5), num_components=1)
        fg, _ = colour_unary(gmm, gmm, np.array([1e6, 1e6, 1e6]))
        assert fg == pytest.approx(-math.log(PROB_FLOOR))

    def test_colour_near_mean_cost_close_to_analytic(self):
        samples = np.tile([0.5, 0.5, 0.5], (5, 1))
        gmm = fit_gmm(samples, np.ones(5), num_components=1)
        fg, _ = colour_unary(gmm, gmm, np.array([0.5, 0.5, 0.5]))
        # Peak density of an isotropic Gaussian with the floored covariance.
        peak = (2.0 * math.pi * COV_FLOOR) ** -1.5
        assert fg == pytest.approx(-math.log(peak), abs=1e-9)


class TestPairwise:
    def test_identical_colours_weight_one(self):
        assert pairwise_weight(np.zeros(3), np.zeros(3), 0.5) == pytest.approx(1.0)

    def test_mean_distance_value(self):
        ci = np.array([0.0, 0.0, 0.0])
        cj = np.array([1.0, 0.0, 0.0])
        assert pairwise_weight(ci, cj, 1.0) == pytest.approx(math.exp(-0.5))

    def test_dissimilar_colours_vanish(self):
        ci = np.zeros(3)
        cj = np.full(3, 100.0)
        assert pairwise_weight(ci, cj, 1.0) < 1e-300

    def test_mean_squared_distance(self):
        colours = np.array([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 2.0, 0.0]])
        edges = np.array([[0, 1], [0, 2]])
        assert mean_squared_colour_distance(colours, edges) == pytest.approx(2.5)


class TestAlphaExpansion:
    def _model(self, unary, edges=None, weights=None, smoothness=0.5):
        edges = np.zeros((0, 2), dtype=np.int64) if edges is None else np.asarray(edges)
        weights = (
            np.zeros(0) if weights is None else np.asarray(weights, dtype=np.float64)
        )
        return EnergyModel(
            num_labels=unary.shape[1],
            unary=np.asarray(unary, dtype=np.float64),
            edges=edges,
            edge_weights=weights,
            semantic_weight=1.0,
            smoothness_weight=smoothness,
        )

    def test_zero_smoothness_gives_unary_argmin(self):
        rng = np.random.default_rng(6)
        unary = rng.random((12, 3))
        edges = np.array([[i, i + 1] for i in range(11)])
        weights = np.ones(11)
        model = self._model(unary, edges, weights, smoothness=0.0)
        labels = alpha_expansion(model)
        np.testing.assert_array_equal(labels, unary.argmin(axis=1))

    def test_strong_unary_drags_weak_neighbour(self):
        unary = np.array([[0.0, 10.0], [0.6, 0.5]])
        edges = np.array([[0, 1]])
        weights = np.ones(1)
        model = self._model(unary, edges, weights, smoothness=5.0)
        labels = alpha_expansion(model)
        np.testing.assert_array_equal(labels, [0, 0])

    def test_energy_never_increases_and_beats_init(self):
        rng = np.random.default_rng(7)
        unary = rng.random((8, 3))
        edges = np.array([[i, j] for i in range(8) for j in range(i + 1, 8) if rng.random() < 0.4])
        weights = np.ones(len(edges)) if len(edges) else np.zeros(0)
        model = self._model(unary, edges if len(edges) else None, weights if len(edges) else None)
        init = rng.integers(0, 3, size=8)
        labels = alpha_expansion(model, init=init)
        assert energy_of(model, labels) <= energy_of(model, init) + 1e-12

    def test_optimal_input_returned_unchanged(self):
        unary = np.array([[0.0, 5.0], [0.0, 5.0], [5.0, 0.0]])
        edges = np.array([[0, 1]])
        model = self._model(unary, edges, np.array([0.1]))
        best = np.array([0, 0, 1])
        labels = alpha_expansion(model, init=best)
        np.testing.assert_array_equal(labels, best)

    def test_non_potts_label_cost_rejected(self):
        unary = np.zeros((2, 3))
        label_cost = np.array(
            [[0.0, 1.0, 2.0], [1.0, 0.0, 1.0], [2.0, 1.0, 0.0]]
        )
        model = EnergyModel(
            num_labels=3,
            unary=unary,
            edges=np.array([[0, 1]]),
            edge_weights=np.ones(1),
            semantic_weight=1.0,
            smoothness_weight=1.0,
            label_cost=label_cost,
        )
        with pytest.raises(ValueError, match="expansion requires metric pairwise"):
            alpha_expansion(model)

    def test_matches_brute_force_on_tiny_instances(self):
        rng = np.random.default_rng(8)
        for _ in range(20):
            n = int(rng.integers(2, 6))
            unary = rng.random((n, 2)) * 2.0
            edges = np.array(
                [[i, j] for i in range(n) for j in range(i + 1, n) if rng.random() < 0.5]
            )
            if len(edges) == 0:
                edges = np.array([[0, 1]])
            weights = rng.uniform(0.1, 1.0, size=len(edges))
            model = self._model(unary, edges, weights, smoothness=0.3)
            labels = alpha_expansion(model)
            best = min(
                (energy_of(model, np.array(assign)) for assign in np.ndindex(*(2,) * n)),
            )
            # Binary Potts expansion solves the two-label problem exactly.
            assert energy_of(model, labels) == pytest.approx(best, abs=1e-9)


class TestEnergyOf:
    def test_exact_sum(self):
        unary = np.array([[1.0, 2.0], [3.0, 0.5]])
        edges = np.array([[0, 1]])
        model = EnergyModel(
            num_labels=2,
            unary=unary,
            edges=edges,
            edge_weights=np.array([0.6]),
            semantic_weight=1.0,
            smoothness_weight=0.5,
        )
        assert energy_of(model, np.array([0, 0])) == pytest.approx(4.0)
        assert energy_of(model, np.array([0, 1])) == pytest.approx(1.0 + 0.5 + 0.5 * 0.6)


class TestSegmentEndToEnd:
    def test_confident_block_labeled_foreground(self):
        h = w = 8
        size = FrameSize(width=w, height=h)
        frames = []
        conf = []
        for _ in range(2):
            frame = np.full((h, w, 3), 0.2)
            frame[2:6, 2:6] = [0.9, 0.1, 0.1]
            frames.append(frame)
            c = np.zeros((h, w))
            c[2:6, 2:6] = 0.95
            conf.append(DenseMap(size, c))
        maps = [grid_superpixels(size, 2)] * 2
        graph = build_graph(maps, frames, _zero_flow(1, h, w))
        labels, model = segment(graph, [conf], SegmentationConfig())
        rendered = render_labels(graph, labels)
        assert rendered[0][3, 3] == 1
        assert rendered[0][0, 0] == 0
        assert rendered[1][3, 3] == 1

    def test_node_confidences_reduce_maps(self):
        size = FrameSize(width=4, height=4)
        c = np.zeros((4, 4))
        c[:2, :2] = 1.0
        maps = [grid_superpixels(size, 2)]
        graph = build_graph(maps, _frames(1), [])
        values = node_confidences(graph, [DenseMap(size, c)])
        np.testing.assert_allclose(values, [1.0, 0.0, 0.0, 0.0])
