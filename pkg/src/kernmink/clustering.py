"""K-means engines: Lloyd, exact kernel K-means, and the explicit-map
Minkowski variants with optional per-cluster feature weights.

All explicit engines share one loop (:func:`cluster_points`):

1. assign every point to its nearest center under
   ``sum_l w_kl**p |x_l - m_kl|**p`` (uniform weights when unweighted),
2. repair empty clusters,
3. stop if the assignment did not change,
4. recompute Minkowski centers, then (weighted mode) the feature weights.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace

import numpy as np

from ._parallel import ordered_map
from .featmap import KernelSpec, MapConfig, kernel_scalar, map_dataset
from .minkcore import DEFAULT_MAX_ITER, DEFAULT_TOL, check_exponent, solve_center

__all__ = [
    "Dataset",
    "InitMethod",
    "RunConfig",
    "ClusterModel",
    "assign",
    "pairwise_pow_dist",
    "objective_value",
    "update_weights",
    "repair_empty",
    "warm_start",
    "cluster_points",
    "lloyd_kmeans",
    "exact_kernel_kmeans",
    "explicit_kmwk_means",
    "restart_seeds",
]

_ROW_BLOCK = 8192


@dataclass(frozen=True)
class Dataset:
    """``N x D`` samples with optional integer labels and row ids."""

    values: np.ndarray
    labels: np.ndarray | None = None
    ids: tuple | None = None

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 2 or v.shape[0] < 1:
            raise ValueError("dataset must be a nonempty 2-D matrix")
        if not np.all(np.isfinite(v)):
            raise ValueError("dataset contains non-finite values")
        object.__setattr__(self, "values", v)
        if self.labels is not None:
            lab = np.asarray(self.labels)
            if lab.shape != (v.shape[0],):
                raise ValueError("labels must have one entry per row")
            object.__setattr__(self, "labels", lab.astype(np.int64))
        if self.ids is not None and len(self.ids) != v.shape[0]:
            raise ValueError("ids must have one entry per row")

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def d(self) -> int:
        return self.values.shape[1]

    def require_nonnegative(self):
        if np.any(self.values < 0):
            r, c = np.argwhere(self.values < 0)[0]
            raise ValueError(f"negative feature value {self.values[r, c]} at row {r}, column {c}")


class InitMethod(str, enum.Enum):
    AUTO = "auto"
    RANDOM_POINTS = "random_points"
    WARM_START_P2 = "warm_start_p2"
    WARM_START_P1 = "warm_start_p1"
    PROVIDED = "provided"


@dataclass(frozen=True)
class RunConfig:
    k: int
    p: float = 2.0
    max_iter: int = 100
    tol: float = DEFAULT_TOL
    seed: int = 0
    init: InitMethod = InitMethod.AUTO
    restarts: int = 10
    center_max_iter: int = DEFAULT_MAX_ITER
    init_centers: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "init", InitMethod(self.init))
        object.__setattr__(self, "p", check_exponent(self.p))
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if self.init is InitMethod.PROVIDED and self.init_centers is None:
            raise ValueError("init='provided' needs init_centers")

    def resolved_init(self) -> InitMethod:
        if self.init is not InitMethod.AUTO:
            return self.init
        return InitMethod.RANDOM_POINTS if self.p == 2 else InitMethod.WARM_START_P2


@dataclass
class ClusterModel:
    centers: np.ndarray | None
    weights: np.ndarray | None
    assignments: np.ndarray
    p: float
    objective: float
    iterations: int
    converged: bool
    objective_trace: list = field(default_factory=list)
    center_iterations: int = 0
    seed: int | None = None
    members: list | None = None

    @property
    def k(self) -> int:
        if self.centers is not None:
            return self.centers.shape[0]
        return len(self.members)

    def cluster_sizes(self) -> np.ndarray:
        return np.bincount(self.assignments, minlength=self.k)


# ---------------------------------------------------------------------------
# distances, objective, weights


def _check_shapes(points, centers, weights):
    x = np.asarray(points, dtype=float)
    c = np.asarray(centers, dtype=float)
    if x.ndim != 2 or c.ndim != 2:
        raise ValueError("points and centers must be 2-D")
    if c.shape[0] == 0:
        raise ValueError("need at least one center")
    if x.shape[1] != c.shape[1]:
        raise ValueError(f"dimension mismatch: points have {x.shape[1]}, centers {c.shape[1]}")
    w = None
    if weights is not None:
        w = np.asarray(weights, dtype=float)
        if w.shape != c.shape:
            raise ValueError(f"weights shape {w.shape} does not match centers {c.shape}")
    return x, c, w


def pairwise_pow_dist(points, centers, weights=None, p=2.0) -> np.ndarray:
    """``N x K`` matrix of ``sum_l w_kl**p |x_il - m_kl|**p``."""
    x, c, w = _check_shapes(points, centers, weights)
    p = check_exponent(p)
    out = np.empty((x.shape[0], c.shape[0]))
    wp = None if w is None else w**p
    for s in range(0, x.shape[0], _ROW_BLOCK):
        blk = x[s:s + _ROW_BLOCK]
        for k in range(c.shape[0]):
            dev = np.abs(blk - c[k]) ** p
            out[s:s + _ROW_BLOCK, k] = dev.sum(axis=1) if wp is None else dev @ wp[k]
    return out


def assign(points, centers, weights=None, p=2.0) -> np.ndarray:
    """Nearest center per point; ties go to the lowest cluster index."""
    return np.argmin(pairwise_pow_dist(points, centers, weights, p), axis=1)


def objective_value(points, centers, assignments, p, weights=None) -> float:
    """``sum_i sum_l w_{k(i)l}**p |x_il - m_{k(i)l}|**p`` (``w = 1`` when unweighted)."""
    x, c, w = _check_shapes(points, centers, weights)
    a = np.asarray(assignments)
    if a.shape != (x.shape[0],):
        raise ValueError("assignments must have one entry per point")
    p = check_exponent(p)
    total = 0.0
    for k in range(c.shape[0]):
        idx = a == k
        if not idx.any():
            continue
        dev = np.abs(x[idx] - c[k]) ** p
        total += float(dev.sum() if w is None else (dev @ w[k] ** p).sum())
    return total


def _dispersion(x, assignments, centers, p):
    k = centers.shape[0]
    v = np.zeros_like(centers)
    for j in range(k):
        idx = assignments == j
        if idx.any():
            v[j] = np.sum(np.abs(x[idx] - centers[j]) ** p, axis=0)
    return v


def update_weights(points, assignments, centers, p, active=None) -> np.ndarray:
    """Per-cluster feature weights from within-cluster dispersion.

    ``V_kl = sum_{i in C_k} |x_il - m_kl|**p`` and, for ``p > 1``,
    ``w_kl = 1 / sum_u (V_kl / V_ku)**(1/(p-1))``.  For ``p <= 1`` the
    minimizer of ``sum_l w_l**p V_l`` on the simplex is a vertex: at ``p == 1``
    the weight is split evenly over the minimal-dispersion features, below 1
    it all goes to the first of them.

    ``active`` masks features that take part; the rest get weight 0.
    """
    x, c, _ = _check_shapes(points, centers, None)
    a = np.asarray(assignments)
    p = check_exponent(p)
    mask = np.ones(c.shape[1], dtype=bool) if active is None else np.asarray(active, dtype=bool)
    if not mask.any():
        mask = np.ones_like(mask)
    v = _dispersion(x, a, c, p)[:, mask]
    eps = 1e-12 * (1.0 + v.mean(axis=1, keepdims=True))
    v = np.maximum(v, eps)
    if p > 1:
        logr = -np.log(v) / (p - 1.0)
        logr -= logr.max(axis=1, keepdims=True)
        r = np.exp(logr)
        wa = r / r.sum(axis=1, keepdims=True)
    else:
        is_min = v == v.min(axis=1, keepdims=True)
        if p < 1:
            first = np.argmax(is_min, axis=1)
            is_min = np.zeros_like(is_min)
            is_min[np.arange(v.shape[0]), first] = True
        wa = is_min / is_min.sum(axis=1, keepdims=True)
    w = np.zeros(c.shape)
    w[:, mask] = wa
    return w


def repair_empty(points, assignments, centers, weights, p) -> np.ndarray:
    """Give each empty cluster the point lying farthest from its own center.

    Only points from clusters with at least two members are moved, so a repair
    never empties another cluster.
    """
    a = np.array(assignments, copy=True)
    k = centers.shape[0]
    sizes = np.bincount(a, minlength=k)
    if sizes.min() > 0:
        return a
    dist = pairwise_pow_dist(points, centers, weights, p)
    own = dist[np.arange(a.size), a]
    for j in np.flatnonzero(sizes == 0):
        movable = sizes[a] > 1
        if not movable.any():
            raise ValueError("cannot repair empty cluster: fewer points than clusters")
        cand = np.where(movable, own, -np.inf)
        i = int(np.argmax(cand))
        sizes[a[i]] -= 1
        a[i] = j
        sizes[j] = 1
        own[i] = -np.inf
    return a


# ---------------------------------------------------------------------------
# engines


def restart_seeds(seed: int, restarts: int) -> list:
    """Independent per-restart seeds derived from one master seed."""
    return [int(s.generate_state(1)[0]) for s in np.random.SeedSequence(seed).spawn(restarts)]


def _random_point_indices(n, k, rng):
    if k > n:
        raise ValueError(f"k={k} exceeds the number of points N={n}")
    return np.sort(rng.choice(n, size=k, replace=False))


def _loop(x, k, p, weighted, centers, max_iter, tol, center_max_iter, active=None):
    """Alternating minimization from given initial centers (no restarts)."""
    centers = np.array(centers, dtype=float)
    d = x.shape[1]
    if active is None:
        active = np.ones(d, dtype=bool)
    if weighted:
        weights = np.where(active, 1.0 / max(int(active.sum()), 1), 0.0)
        weights = np.tile(weights, (k, 1))
    else:
        weights = None
    prev = None
    trace = []
    solver_iters = 0
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        a = assign(x, centers, weights, p)
        a = repair_empty(x, a, centers, weights, p)
        if prev is not None and np.array_equal(a, prev):
            converged = True
            it -= 1
            break
        new_centers = np.empty_like(centers)
        for j in range(k):
            res = solve_center(x[a == j], p, init=centers[j], tol=tol, max_iter=center_max_iter)
            new_centers[j] = res.center
            solver_iters += res.iterations
        centers = new_centers
        if weighted:
            weights = update_weights(x, a, centers, p, active=active)
        trace.append(objective_value(x, centers, a, p, weights))
        prev = a
    else:
        # max_iter reached; one more assignment tells whether we were done
        a = assign(x, centers, weights, p)
        converged = np.array_equal(repair_empty(x, a, centers, weights, p), prev)
    return ClusterModel(centers=centers, weights=weights, assignments=prev, p=p,
                        objective=trace[-1], iterations=it, converged=bool(converged),
                        objective_trace=trace, center_iterations=solver_iters)


def warm_start(points, k: int, seed: int = 0, base_p: float = 2.0, max_iter: int = 100) -> np.ndarray:
    """Centers of an unweighted K-means run at ``base_p`` (2 or 1) from random points."""
    x = np.asarray(points, dtype=float)
    if base_p not in (1.0, 2.0):
        raise ValueError("warm start runs at p = 2 or p = 1")
    rng = np.random.default_rng(seed)
    init = x[_random_point_indices(x.shape[0], k, rng)]
    return _loop(x, k, base_p, False, init, max_iter, DEFAULT_TOL, DEFAULT_MAX_ITER).centers


def _initial_centers(x, cfg: RunConfig, seed):
    method = cfg.resolved_init()
    if method is InitMethod.PROVIDED:
        c = np.asarray(cfg.init_centers, dtype=float)
        if c.shape != (cfg.k, x.shape[1]):
            raise ValueError(f"init_centers must have shape {(cfg.k, x.shape[1])}, got {c.shape}")
        return c
    if method is InitMethod.RANDOM_POINTS:
        rng = np.random.default_rng(seed)
        return x[_random_point_indices(x.shape[0], cfg.k, rng)]
    base = 2.0 if method is InitMethod.WARM_START_P2 else 1.0
    return warm_start(x, cfg.k, seed=seed, base_p=base, max_iter=cfg.max_iter)


def _constant_features(x):
    return np.all(x == x[0], axis=0)


def cluster_points(points, cfg: RunConfig, weighted: bool = False) -> ClusterModel:
    """Run the Minkowski K-means loop on a ready matrix (already mapped, if at all).

    Runs ``cfg.restarts`` independent starts and keeps the lowest objective
    (first one on ties).  In weighted mode, features constant over the whole
    matrix carry no information and are kept at weight 0.
    """
    x = np.asarray(points, dtype=float)
    if x.ndim != 2:
        raise ValueError("points must be a 2-D matrix")
    if cfg.k > x.shape[0]:
        raise ValueError(f"k={cfg.k} exceeds the number of points N={x.shape[0]}")
    active = ~_constant_features(x) if weighted else None
    runs = 1 if cfg.resolved_init() is InitMethod.PROVIDED else cfg.restarts
    seeds = restart_seeds(cfg.seed, runs)

    def one(s):
        init = _initial_centers(x, cfg, s)
        model = _loop(x, cfg.k, cfg.p, weighted, init, cfg.max_iter, cfg.tol,
                      cfg.center_max_iter, active)
        model.seed = s
        return model

    models = ordered_map(one, seeds)
    best = min(range(len(models)), key=lambda i: (models[i].objective, i))
    return models[best]


def lloyd_kmeans(data, cfg: RunConfig) -> ClusterModel:
    """Classic K-means: squared Euclidean distance, mean centers."""
    if cfg.p != 2:
        raise ValueError("lloyd_kmeans runs at p = 2")
    x = data.values if isinstance(data, Dataset) else np.asarray(data, dtype=float)
    return cluster_points(x, cfg, weighted=False)


def explicit_kmwk_means(data, spec: KernelSpec | None, map_cfg: MapConfig, cfg: RunConfig,
                        weighted: bool = True) -> ClusterModel:
    """Map with the explicit kernel feature map, then (weighted) Minkowski K-means.

    ``spec=None`` clusters the input matrix as given.  With ``p=2`` and
    ``weighted=False`` this is explicit kernel K-means.
    """
    ds = data if isinstance(data, Dataset) else Dataset(np.asarray(data, dtype=float))
    if spec is None:
        x = ds.values
    else:
        ds.require_nonnegative()
        x = map_dataset(spec, map_cfg, ds).values
    return cluster_points(x, cfg, weighted=weighted)


# ---------------------------------------------------------------------------
# exact kernel K-means (kernel trick, Gram matrix)


def _gram(spec, x, y=None):
    y = x if y is None else y
    out = np.empty((x.shape[0], y.shape[0]))
    rows = max(1, (1 << 21) // max(y.size, 1))
    for s in range(0, x.shape[0], rows):
        out[s:s + rows] = kernel_scalar(spec, x[s:s + rows, None, :], y[None, :, :]).sum(axis=2)
    return out


def _kernel_dist(gram, diag, a, k):
    """``N x K`` squared feature-space distances to implicit cluster means."""
    n = gram.shape[0]
    dist = np.empty((n, k))
    for j in range(k):
        idx = np.flatnonzero(a == j)
        m = idx.size
        if m == 0:
            dist[:, j] = np.inf
            continue
        cross = gram[:, idx].sum(axis=1)
        within = gram[np.ix_(idx, idx)].sum()
        dist[:, j] = diag - 2.0 * cross / m + within / (m * m)
    return dist


def exact_kernel_kmeans(data, spec: KernelSpec, cfg: RunConfig, init_assignments=None) -> ClusterModel:
    """Kernel K-means through the kernel trick; centers stay implicit.

    The first assignment uses the ``cfg.seed``-chosen data points as centers
    (identical to ``random_points`` in the explicit engines), unless
    ``init_assignments`` is given.  The returned model has ``centers=None``
    and lists each cluster's member indices in ``members``.
    """
    if cfg.p != 2:
        raise ValueError("exact kernel K-means is defined for p = 2 only")
    ds = data if isinstance(data, Dataset) else Dataset(np.asarray(data, dtype=float))
    ds.require_nonnegative()
    x = ds.values
    k = cfg.k
    if k > ds.n:
        raise ValueError(f"k={k} exceeds the number of points N={ds.n}")
    gram = _gram(spec, x)
    diag = np.diag(gram).copy()
    runs = 1 if init_assignments is not None else cfg.restarts
    seeds = restart_seeds(cfg.seed, runs)

    def one(s):
        if init_assignments is not None:
            a = np.asarray(init_assignments, dtype=np.int64)
        else:
            if cfg.resolved_init() is not InitMethod.RANDOM_POINTS:
                raise ValueError("exact kernel K-means supports random_points init only")
            idx = _random_point_indices(ds.n, k, np.random.default_rng(s))
            # distance to a seed point c: K_ii - 2 K_ic + K_cc
            d0 = diag[:, None] - 2.0 * gram[:, idx] + diag[idx][None, :]
            a = _repair_kernel(np.argmin(d0, axis=1), d0, k)
        trace = []
        converged = False
        it = 0
        for it in range(1, cfg.max_iter + 1):
            dist = _kernel_dist(gram, diag, a, k)
            trace.append(float(dist[np.arange(ds.n), a].sum()))
            new = _repair_kernel(np.argmin(dist, axis=1), dist, k)
            if np.array_equal(new, a):
                converged = True
                break
            a = new
        else:
            dist = _kernel_dist(gram, diag, a, k)
            trace.append(float(dist[np.arange(ds.n), a].sum()))
        members = [np.flatnonzero(a == j) for j in range(k)]
        return ClusterModel(centers=None, weights=None, assignments=a, p=2.0,
                            objective=trace[-1], iterations=it, converged=converged,
                            objective_trace=trace, seed=s, members=members)

    models = ordered_map(one, seeds)
    best = min(range(len(models)), key=lambda i: (models[i].objective, i))
    return models[best]


def _repair_kernel(a, dist, k):
    a = a.copy()
    sizes = np.bincount(a, minlength=k)
    own = dist[np.arange(a.size), a].copy()
    for j in np.flatnonzero(sizes == 0):
        movable = sizes[a] > 1
        cand = np.where(movable, own, -np.inf)
        i = int(np.argmax(cand))
        sizes[a[i]] -= 1
        a[i] = j
        sizes[j] = 1
        own[i] = -np.inf
    return a


def with_seed(cfg: RunConfig, seed: int) -> RunConfig:
    return replace(cfg, seed=seed)
