"""Space-time superpixel labeling by alpha-expansion.

Superpixels of all frames form one graph: spatial edges join superpixels
sharing a pixel boundary, temporal edges join superpixels connected by
at least one flow-displaced pixel. Each node pays a colour cost (two
mixture models fit from confidence-weighted samples) plus a weighted
semantic cost, and unlike labels across an edge pay a contrast weight.
The sum is minimized by cycling expansion moves, each one an exact
binary minimum cut.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from trackcut.core import DenseMap, FrameSize
from trackcut.maxflow import FlowNetwork
from trackcut.pooling import reduce_to_superpixels

COV_FLOOR = 1e-4
PROB_FLOOR = 1e-8
MEAN_DIST_FLOOR = 1e-12


@dataclass(frozen=True)
class SegmentationConfig:
    semantic_weight: float = 1.0
    smoothness_weight: float = 0.5
    mixture_components: int = 5
    cov_floor: float = COV_FLOOR
    prob_floor: float = PROB_FLOOR
    foreground_threshold: float = 0.5
    gmm_seed: int = 0
    gmm_max_iters: int = 100
    gmm_tol: float = 1e-6

    def __post_init__(self):
        if self.semantic_weight < 0.0 or self.smoothness_weight < 0.0:
            raise ValueError("energy weights must be non-negative")
        if self.mixture_components < 1:
            raise ValueError("mixture_components must be positive")
        if self.cov_floor <= 0.0 or self.prob_floor <= 0.0:
            raise ValueError("floors must be positive")
        if not 0.0 < self.foreground_threshold < 1.0:
            raise ValueError("foreground_threshold must lie inside (0, 1)")


@dataclass(eq=False)
class SuperpixelGraph:
    """All superpixels of a clip, with spatial and temporal adjacency.

    Node n lives in frame frame_index[n]; nodes of frame t occupy the
    id range [frame_offsets[t], frame_offsets[t + 1]). colours holds the
    mean RGB of each node in [0, 1]. Edges are undirected, stored once
    with node ids ascending.
    """

    frame_index: np.ndarray
    frame_offsets: np.ndarray
    colours: np.ndarray
    pixel_counts: np.ndarray
    spatial_edges: np.ndarray
    temporal_edges: np.ndarray
    label_maps: tuple[np.ndarray, ...]

    @property
    def num_nodes(self) -> int:
        return int(self.frame_index.shape[0])

    @property
    def num_frames(self) -> int:
        return len(self.frame_offsets) - 1

    @property
    def edges(self) -> np.ndarray:
        return np.concatenate([self.spatial_edges, self.temporal_edges], axis=0)

    def nodes_of_frame(self, t: int) -> slice:
        return slice(int(self.frame_offsets[t]), int(self.frame_offsets[t + 1]))


@dataclass(eq=False)
class EnergyModel:
    """Per-node label costs plus contrast-weighted label-difference costs.

    unary[n, l] already combines the colour cost and the weighted
    semantic cost for node n under label l. An edge with weight w adds
    smoothness_weight * w * label_cost[l_i, l_j]; label_cost None means
    unit cost for any differing pair.
    """

    num_labels: int
    unary: np.ndarray
    edges: np.ndarray
    edge_weights: np.ndarray
    semantic_weight: float
    smoothness_weight: float
    label_cost: np.ndarray | None = None

    def __post_init__(self):
        if self.unary.ndim != 2 or self.unary.shape[1] != self.num_labels:
            raise ValueError("unary must be (num_nodes, num_labels)")
        if not np.isfinite(self.unary).all():
            raise ValueError("unary costs must be finite")
        if self.edges.shape[0] != self.edge_weights.shape[0]:
            raise ValueError("one weight per edge required")
        if self.edges.size and (
            (self.edge_weights <= 0.0).any() or not np.isfinite(self.edge_weights).all()
        ):
            raise ValueError("edge weights must be positive and finite")
        if self.edges.size and (self.edges[:, 0] == self.edges[:, 1]).any():
            raise ValueError("self-loops are not allowed")
        if self.label_cost is not None:
            lc = np.asarray(self.label_cost, dtype=np.float64)
            if lc.shape != (self.num_labels, self.num_labels):
                raise ValueError("label_cost must be square over the labels")
            object.__setattr__(self, "label_cost", lc)

    @property
    def num_nodes(self) -> int:
        return int(self.unary.shape[0])


@dataclass(frozen=True, eq=False)
class GaussianMixture:
    """Full-covariance mixture with eigenvalue-floored covariances."""

    weights: np.ndarray
    means: np.ndarray
    covariances: np.ndarray
    log_likelihood_trace: tuple[float, ...] = field(default=(), repr=False)

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        if w.ndim != 1 or (w <= 0.0).any():
            raise ValueError("component weights must be positive")
        if abs(float(w.sum()) - 1.0) > 1e-9:
            raise ValueError("component weights must sum to 1")
        if self.means.shape[0] != w.shape[0] or self.covariances.shape[0] != w.shape[0]:
            raise ValueError("component count mismatch")

    @property
    def num_components(self) -> int:
        return int(self.weights.shape[0])

    def log_density(self, points: np.ndarray) -> np.ndarray:
        points = np.atleast_2d(np.asarray(points, dtype=np.float64))
        parts = np.empty((points.shape[0], self.num_components))
        for k in range(self.num_components):
            parts[:, k] = np.log(self.weights[k]) + _log_gaussian(
                points, self.means[k], self.covariances[k]
            )
        top = parts.max(axis=1)
        return top + np.log(np.exp(parts - top[:, None]).sum(axis=1))

    def density(self, points: np.ndarray) -> np.ndarray:
        return np.exp(self.log_density(points))


def _log_gaussian(points: np.ndarray, mean: np.ndarray, cov: np.ndarray) -> np.ndarray:
    d = mean.shape[0]
    chol = np.linalg.cholesky(cov)
    diff = points - mean
    solved = np.linalg.solve(chol, diff.T)
    log_det = 2.0 * np.log(np.diag(chol)).sum()
    quad = (solved * solved).sum(axis=0)
    return -0.5 * (d * np.log(2.0 * np.pi) + log_det + quad)


def grid_superpixels(size: FrameSize, cell: int) -> np.ndarray:
    """Regular-grid label map; ragged right/bottom cells absorb the rest."""
    if cell < 1:
        raise ValueError("cell must be positive")
    cols = (size.width + cell - 1) // cell
    xs = np.minimum(np.arange(size.width) // cell, cols - 1)
    ys = np.arange(size.height) // cell
    return (ys[:, None] * cols + xs[None, :]).astype(np.int32)


def _validate_label_map(labels: np.ndarray) -> int:
    if labels.ndim != 2 or labels.dtype.kind not in "iu":
        raise ValueError("label map must be a two-dimensional integer array")
    count = int(labels.max()) + 1 if labels.size else 0
    present = np.bincount(labels.ravel(), minlength=count)
    if count == 0 or (present == 0).any() or labels.min() < 0:
        raise ValueError("superpixel labels must be contiguous from zero")
    return count


def _spatial_pairs(labels: np.ndarray) -> np.ndarray:
    pairs = []
    for a, b in (
        (labels[:, :-1], labels[:, 1:]),
        (labels[:-1, :], labels[1:, :]),
        (labels[:-1, :-1], labels[1:, 1:]),
        (labels[:-1, 1:], labels[1:, :-1]),
    ):
        differ = a != b
        pairs.append(np.stack([a[differ], b[differ]], axis=1))
    return np.concatenate(pairs, axis=0)


def _dedupe_edges(pairs: np.ndarray) -> np.ndarray:
    if pairs.size == 0:
        return np.empty((0, 2), dtype=np.int64)
    lo = pairs.min(axis=1)
    hi = pairs.max(axis=1)
    keep = lo != hi
    ordered = np.stack([lo[keep], hi[keep]], axis=1)
    return np.unique(ordered, axis=0)


def build_graph(
    superpixel_maps: list[np.ndarray],
    frames: list[np.ndarray],
    flows: list[tuple[DenseMap, DenseMap] | None],
) -> SuperpixelGraph:
    """Assemble the space-time graph.

    flows[t] displaces frame t's pixels toward frame t + 1; displaced
    coordinates are rounded and clamped into the frame, so every pixel
    lands in some target superpixel.
    """
    if len(frames) != len(superpixel_maps):
        raise ValueError("one superpixel map per frame required")
    if len(flows) != max(len(frames) - 1, 0):
        raise ValueError("one flow pair per frame transition required")
    counts = []
    for labels, image in zip(superpixel_maps, frames):
        if image.ndim != 3 or image.shape[2] != 3:
            raise ValueError("frames must be HxWx3 RGB")
        if image.shape[:2] != labels.shape:
            raise ValueError("superpixel map size does not match its frame")
        counts.append(_validate_label_map(labels))
    offsets = np.concatenate([[0], np.cumsum(counts)]).astype(np.int64)
    total = int(offsets[-1])

    frame_index = np.empty(total, dtype=np.int64)
    colours = np.empty((total, 3), dtype=np.float64)
    pixel_counts = np.empty(total, dtype=np.int64)
    spatial = []
    temporal = []
    for t, (labels, image) in enumerate(zip(superpixel_maps, frames)):
        flat = labels.ravel()
        base = int(offsets[t])
        n = counts[t]
        frame_index[base : base + n] = t
        per = np.bincount(flat, minlength=n).astype(np.float64)
        pixel_counts[base : base + n] = per.astype(np.int64)
        for channel in range(3):
            sums = np.bincount(flat, weights=image[:, :, channel].ravel(), minlength=n)
            colours[base : base + n, channel] = sums / per
        spatial.append(_dedupe_edges(_spatial_pairs(labels)) + base)

    for t, pair in enumerate(flows):
        h, w = superpixel_maps[t].shape
        ys, xs = np.mgrid[0:h, 0:w]
        if pair is None:
            dest_x, dest_y = xs, ys
        else:
            u, v = pair
            if u.values.shape != (h, w) or v.values.shape != (h, w):
                raise ValueError("flow field size does not match the frame")
            dest_x = np.clip(np.rint(xs + u.values), 0, w - 1).astype(np.int64)
            dest_y = np.clip(np.rint(ys + v.values), 0, h - 1).astype(np.int64)
        src = superpixel_maps[t].ravel() + int(offsets[t])
        dst = superpixel_maps[t + 1][dest_y.ravel(), dest_x.ravel()] + int(offsets[t + 1])
        temporal.append(np.unique(np.stack([src, dst], axis=1), axis=0))

    spatial_edges = (
        np.concatenate(spatial, axis=0) if spatial else np.empty((0, 2), dtype=np.int64)
    )
    temporal_edges = (
        np.concatenate(temporal, axis=0) if temporal else np.empty((0, 2), dtype=np.int64)
    )
    return SuperpixelGraph(
        frame_index=frame_index,
        frame_offsets=offsets,
        colours=colours,
        pixel_counts=pixel_counts,
        spatial_edges=spatial_edges,
        temporal_edges=temporal_edges,
        label_maps=tuple(np.ascontiguousarray(m, dtype=np.int32) for m in superpixel_maps),
    )


def fit_gmm(
    samples: np.ndarray,
    sample_weights: np.ndarray,
    num_components: int,
    seed: int = 0,
    max_iters: int = 100,
    tol: float = 1e-6,
    cov_floor: float = COV_FLOOR,
) -> GaussianMixture:
    """Weighted EM with a seeded distance-squared initialization.

    The component count drops to the number of distinct samples when
    fewer exist. Covariances keep their eigenvectors but have every
    eigenvalue floored at cov_floor, which keeps each M-step a
    constrained maximizer, so the weighted log-likelihood never
    decreases across iterations.
    """
    samples = np.atleast_2d(np.asarray(samples, dtype=np.float64))
    sample_weights = np.asarray(sample_weights, dtype=np.float64)
    if samples.shape[0] != sample_weights.shape[0]:
        raise ValueError("one weight per sample required")
    if (sample_weights < 0.0).any() or sample_weights.sum() <= 0.0:
        raise ValueError("sample weights must be non-negative with positive total")
    if num_components < 1:
        raise ValueError("num_components must be positive")
    keep = sample_weights > 0.0
    samples = samples[keep]
    sample_weights = sample_weights[keep]
    distinct = np.unique(samples, axis=0).shape[0]
    m = min(num_components, distinct)

    rng = np.random.default_rng(seed)
    means = _weighted_kmeanspp(samples, sample_weights, m, rng)
    d = samples.shape[1]
    covariances = np.tile(np.eye(d), (m, 1, 1))
    weights = np.full(m, 1.0 / m)
    mixture = GaussianMixture(weights=weights, means=means, covariances=covariances)

    trace: list[float] = []
    total_weight = sample_weights.sum()
    for _ in range(max_iters):
        parts = np.empty((samples.shape[0], m))
        for k in range(m):
            parts[:, k] = np.log(mixture.weights[k]) + _log_gaussian(
                samples, mixture.means[k], mixture.covariances[k]
            )
        top = parts.max(axis=1)
        log_norm = top + np.log(np.exp(parts - top[:, None]).sum(axis=1))
        ll = float((sample_weights * log_norm).sum())
        resp = np.exp(parts - log_norm[:, None]) * sample_weights[:, None]

        mass = resp.sum(axis=0)
        new_weights = mixture.weights.copy()
        new_means = mixture.means.copy()
        new_covs = mixture.covariances.copy()
        for k in range(m):
            if mass[k] <= 1e-300:
                new_weights[k] = 1e-300 / total_weight
                continue
            new_weights[k] = mass[k] / total_weight
            mean = (resp[:, k] @ samples) / mass[k]
            diff = samples - mean
            scatter = (resp[:, k][:, None] * diff).T @ diff / mass[k]
            new_means[k] = mean
            new_covs[k] = _floor_covariance(scatter, cov_floor)
        new_weights = new_weights / new_weights.sum()
        mixture = GaussianMixture(
            weights=new_weights, means=new_means, covariances=new_covs
        )
        if trace and abs(ll - trace[-1]) < tol:
            trace.append(ll)
            break
        trace.append(ll)
    return GaussianMixture(
        weights=mixture.weights,
        means=mixture.means,
        covariances=mixture.covariances,
        log_likelihood_trace=tuple(trace),
    )


def _weighted_kmeanspp(
    samples: np.ndarray, sample_weights: np.ndarray, m: int, rng: np.random.Generator
) -> np.ndarray:
    first = rng.choice(samples.shape[0], p=sample_weights / sample_weights.sum())
    centers = [samples[first]]
    while len(centers) < m:
        dists = np.min(
            [((samples - c) ** 2).sum(axis=1) for c in centers], axis=0
        )
        scores = sample_weights * dists
        total = scores.sum()
        if total <= 0.0:
            # Float underflow corner: fall back to the farthest sample.
            centers.append(samples[int(np.argmax(dists))])
            continue
        pick = rng.choice(samples.shape[0], p=scores / total)
        centers.append(samples[pick])
    return np.stack(centers, axis=0)


def _floor_covariance(scatter: np.ndarray, cov_floor: float) -> np.ndarray:
    scatter = (scatter + scatter.T) / 2.0
    eigvals, eigvecs = np.linalg.eigh(scatter)
    eigvals = np.maximum(eigvals, cov_floor)
    return (eigvecs * eigvals) @ eigvecs.T


def colour_unary(
    gmm_fg: GaussianMixture,
    gmm_bg: GaussianMixture,
    colour: np.ndarray,
    prob_floor: float = PROB_FLOOR,
) -> tuple[float, float]:
    """Negative log density under each model, floored to stay finite."""
    fg = float(gmm_fg.density(colour)[0])
    bg = float(gmm_bg.density(colour)[0])
    return -np.log(max(fg, prob_floor)), -np.log(max(bg, prob_floor))


def semantic_unary(c: float, foreground: bool, prob_floor: float = PROB_FLOOR) -> float:
    """Cost of labeling a node with confidence c as object or background."""
    if not 0.0 <= c <= 1.0:
        raise ValueError("confidence must lie in [0, 1]")
    p = c if foreground else 1.0 - c
    return float(-np.log(max(p, prob_floor)))


def pairwise_weight(
    colour_i: np.ndarray, colour_j: np.ndarray, mean_sq_dist: float
) -> float:
    """Contrast weight in (0, 1]; near 1 for alike colours."""
    if mean_sq_dist <= 0.0:
        raise ValueError("mean_sq_dist must be positive")
    sq = float(((np.asarray(colour_i) - np.asarray(colour_j)) ** 2).sum())
    return float(np.exp(-sq / (2.0 * mean_sq_dist)))


def mean_squared_colour_distance(colours: np.ndarray, edges: np.ndarray) -> float:
    """Average squared colour distance across the graph's edges, floored."""
    if edges.shape[0] == 0:
        return MEAN_DIST_FLOOR
    diffs = colours[edges[:, 0]] - colours[edges[:, 1]]
    return max(float((diffs**2).sum(axis=1).mean()), MEAN_DIST_FLOOR)


def node_confidences(
    graph: SuperpixelGraph, maps: list[DenseMap]
) -> np.ndarray:
    """Mean confidence of each node under its frame's confidence map."""
    if len(maps) != graph.num_frames:
        raise ValueError("one confidence map per frame required")
    out = np.empty(graph.num_nodes, dtype=np.float64)
    for t, map_t in enumerate(maps):
        out[graph.nodes_of_frame(t)] = reduce_to_superpixels(map_t, graph.label_maps[t])
    return out


def build_colour_models(
    colours: np.ndarray,
    class_confidences: np.ndarray,
    cfg: SegmentationConfig,
) -> tuple[list[GaussianMixture], GaussianMixture] | None:
    """Fit one object model per class plus a shared background model.

    Nodes at or above the threshold for a class feed that class's model
    weighted by confidence; nodes below it for every class feed the
    background model weighted by one minus their best confidence. If any
    model ends up without samples, colour modelling is reported
    unavailable (None) and the caller drops the colour term.
    """
    top = class_confidences.max(axis=0)
    bg_mask = top < cfg.foreground_threshold
    if not bg_mask.any():
        return None
    fg_models = []
    for c in class_confidences:
        fg_mask = c >= cfg.foreground_threshold
        if not fg_mask.any():
            return None
        fg_models.append(
            fit_gmm(
                colours[fg_mask],
                c[fg_mask],
                cfg.mixture_components,
                seed=cfg.gmm_seed,
                max_iters=cfg.gmm_max_iters,
                tol=cfg.gmm_tol,
                cov_floor=cfg.cov_floor,
            )
        )
    bg_model = fit_gmm(
        colours[bg_mask],
        1.0 - top[bg_mask],
        cfg.mixture_components,
        seed=cfg.gmm_seed,
        max_iters=cfg.gmm_max_iters,
        tol=cfg.gmm_tol,
        cov_floor=cfg.cov_floor,
    )
    return fg_models, bg_model


def build_energy(
    graph: SuperpixelGraph,
    class_confidences: np.ndarray,
    cfg: SegmentationConfig,
) -> EnergyModel:
    """Assemble unary and pairwise terms for background plus C classes.

    class_confidences is (C, num_nodes) with values in [0, 1]; label 0
    is background, label k is class k - 1. Background semantic
    confidence is one minus the best class confidence. When colour
    models cannot be fit (one side of the threshold is empty), the
    colour term is dropped and the semantic term carries the unary.
    """
    class_confidences = np.atleast_2d(np.asarray(class_confidences, dtype=np.float64))
    if class_confidences.shape[1] != graph.num_nodes:
        raise ValueError("one confidence per node and class required")
    if class_confidences.min() < 0.0 or class_confidences.max() > 1.0:
        raise ValueError("confidences must lie in [0, 1]")
    num_classes = class_confidences.shape[0]
    num_labels = num_classes + 1
    n = graph.num_nodes
    floor = cfg.prob_floor

    top = class_confidences.max(axis=0)
    semantic = np.empty((n, num_labels))
    semantic[:, 0] = -np.log(np.maximum(1.0 - top, floor))
    for k in range(num_classes):
        semantic[:, k + 1] = -np.log(np.maximum(class_confidences[k], floor))

    colour_cost = np.zeros((n, num_labels))
    models = build_colour_models(graph.colours, class_confidences, cfg)
    if models is not None:
        fg_models, bg_model = models
        colour_cost[:, 0] = -np.log(np.maximum(bg_model.density(graph.colours), floor))
        for k, model in enumerate(fg_models):
            colour_cost[:, k + 1] = -np.log(
                np.maximum(model.density(graph.colours), floor)
            )

    edges = graph.edges
    mean_sq = mean_squared_colour_distance(graph.colours, edges)
    if edges.shape[0]:
        diffs = graph.colours[edges[:, 0]] - graph.colours[edges[:, 1]]
        weights = np.exp(-(diffs**2).sum(axis=1) / (2.0 * mean_sq))
    else:
        weights = np.empty(0)
    return EnergyModel(
        num_labels=num_labels,
        unary=colour_cost + cfg.semantic_weight * semantic,
        edges=edges,
        edge_weights=weights,
        semantic_weight=cfg.semantic_weight,
        smoothness_weight=cfg.smoothness_weight,
    )


def _potts_cost(model: EnergyModel) -> float:
    if model.label_cost is None:
        return 1.0
    lc = model.label_cost
    if model.num_labels < 2:
        return 1.0
    off_mask = ~np.eye(model.num_labels, dtype=bool)
    off = lc[off_mask]
    if (
        np.abs(np.diag(lc)).max() > 0.0
        or not np.allclose(lc, lc.T)
        or off.min() <= 0.0
        or not np.allclose(off, off[0])
    ):
        raise ValueError("expansion requires metric pairwise")
    return float(off[0])


def energy_of(model: EnergyModel, labeling: np.ndarray) -> float:
    """Total cost of a labeling: unary sum plus weighted disagreement."""
    labeling = np.asarray(labeling)
    if labeling.shape != (model.num_nodes,):
        raise ValueError("labeling must cover every node exactly once")
    if labeling.size and (labeling.min() < 0 or labeling.max() >= model.num_labels):
        raise ValueError("labeling uses unknown labels")
    unary = float(model.unary[np.arange(model.num_nodes), labeling].sum())
    if model.edges.shape[0] == 0:
        return unary
    li = labeling[model.edges[:, 0]]
    lj = labeling[model.edges[:, 1]]
    if model.label_cost is None:
        pair = float(model.edge_weights[li != lj].sum())
    else:
        pair = float((model.edge_weights * model.label_cost[li, lj]).sum())
    return unary + model.smoothness_weight * pair


def _expansion_move(
    model: EnergyModel, labeling: np.ndarray, alpha: int, potts: float
) -> np.ndarray:
    n = model.num_nodes
    keep = model.unary[np.arange(n), labeling].copy()
    switch = model.unary[:, alpha].copy()
    scale = model.smoothness_weight * potts
    edges = model.edges
    li = labeling[edges[:, 0]]
    lj = labeling[edges[:, 1]]
    w = scale * model.edge_weights
    cost_now = np.where(li != lj, w, 0.0)
    cost_i_alpha = np.where(li != alpha, w, 0.0)
    cost_j_alpha = np.where(lj != alpha, w, 0.0)
    np.add.at(switch, edges[:, 0], cost_j_alpha - cost_now)
    np.add.at(switch, edges[:, 1], -cost_j_alpha)

    network = FlowNetwork(n + 2, n, n + 1)
    shift = np.minimum(keep, switch)
    to_sink = keep - shift
    from_source = switch - shift
    for i in range(n):
        if from_source[i] > 0.0:
            network.add_edge(n, i, from_source[i])
        if to_sink[i] > 0.0:
            network.add_edge(i, n + 1, to_sink[i])
    caps = cost_i_alpha + cost_j_alpha - cost_now
    for e in range(edges.shape[0]):
        if caps[e] > 0.0:
            network.add_edge(int(edges[e, 0]), int(edges[e, 1]), float(caps[e]))
    _, source_side = network.solve()
    switched = ~source_side[:n]
    return np.where(switched, alpha, labeling)


def alpha_expansion(
    model: EnergyModel,
    init: np.ndarray | None = None,
    move_log: list[tuple[int, np.ndarray]] | None = None,
) -> np.ndarray:
    """Cycle expansion moves until a full pass brings no improvement.

    Each move relabels an arbitrary node set to one target label by an
    exact binary cut; it is kept only when the total energy strictly
    drops, so the result never costs more than the initial labeling.
    When ``move_log`` is given, every attempted move appends a
    ``(label, labeling)`` pair holding the labeling in force after the
    accept-or-reject decision, so callers can audit the energy path.
    """
    potts = _potts_cost(model)
    if init is None:
        labeling = np.argmin(model.unary, axis=1)
    else:
        labeling = np.asarray(init).copy()
        if labeling.shape != (model.num_nodes,):
            raise ValueError("init must assign one label per node")
    current = energy_of(model, labeling)
    improved = True
    while improved:
        improved = False
        for alpha in range(model.num_labels):
            candidate = _expansion_move(model, labeling, alpha, potts)
            value = energy_of(model, candidate)
            if value < current:
                labeling = candidate
                current = value
                improved = True
            if move_log is not None:
                move_log.append((alpha, labeling.copy()))
    return labeling


def segment(
    graph: SuperpixelGraph,
    class_confidence_maps: list[list[DenseMap]],
    cfg: SegmentationConfig,
) -> tuple[np.ndarray, EnergyModel]:
    """Label every superpixel from per-class confidence maps.

    class_confidence_maps[k][t] is class k's confidence over frame t.
    Returns the node labeling (0 background, k for class k) and the
    assembled energy model.
    """
    per_class = np.stack(
        [node_confidences(graph, maps) for maps in class_confidence_maps], axis=0
    )
    model = build_energy(graph, per_class, cfg)
    labels = alpha_expansion(model)
    return labels, model


def render_labels(graph: SuperpixelGraph, node_labels: np.ndarray) -> list[np.ndarray]:
    """Expand node labels back to per-frame integer maps."""
    node_labels = np.asarray(node_labels)
    out = []
    for t in range(graph.num_frames):
        nodes = graph.nodes_of_frame(t)
        out.append(node_labels[nodes][graph.label_maps[t]].astype(np.int32))
    return out
