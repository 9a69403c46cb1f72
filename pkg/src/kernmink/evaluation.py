"""External clustering metrics and semi-supervised choice of the exponent p."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from ._parallel import ordered_map
from .clustering import Dataset, RunConfig, cluster_points, restart_seeds
from .featmap import KernelSpec, MapConfig, map_dataset
from .minkcore import check_exponent

__all__ = [
    "contingency",
    "nmi",
    "purity",
    "MetricResult",
    "evaluate",
    "DEFAULT_P_GRID",
    "stratified_subset",
    "PSelectionResult",
    "select_p",
]

DEFAULT_P_GRID = (0.5, 0.7, 0.9) + tuple(round(1.0 + 0.1 * i, 1) for i in range(22))


def _pair(labels, assignments):
    a = np.asarray(labels)
    b = np.asarray(assignments)
    if a.ndim != 1 or a.shape != b.shape:
        raise ValueError(f"length mismatch: {a.shape} vs {b.shape}")
    if a.size == 0:
        raise ValueError("need at least one sample")
    return a, b


def contingency(labels, assignments) -> np.ndarray:
    """``K x C`` counts: rows are clusters, columns classes (in sorted id order)."""
    a, b = _pair(labels, assignments)
    _, ci = np.unique(a, return_inverse=True)
    _, ki = np.unique(b, return_inverse=True)
    table = np.zeros((ki.max() + 1, ci.max() + 1), dtype=np.int64)
    np.add.at(table, (ki, ci), 1)
    return table


def _entropy(counts, n):
    q = counts[counts > 0] / n
    return float(-np.sum(q * np.log(q)))


def _nmi_from_table(table) -> float:
    n = table.sum()
    rows = table.sum(axis=1)
    cols = table.sum(axis=0)
    h_k = _entropy(rows, n)
    h_c = _entropy(cols, n)
    if h_k == 0.0 and h_c == 0.0:
        return 1.0
    nz = table > 0
    outer = np.outer(rows, cols)[nz]
    mi = float(np.sum(table[nz] / n * np.log(table[nz] * n / outer)))
    return float(min(max(mi / ((h_k + h_c) / 2.0), 0.0), 1.0))


def nmi(labels, assignments) -> float:
    """Mutual information over the arithmetic mean of both entropies (natural log).

    Two single-block partitions count as identical (NMI 1).
    """
    return _nmi_from_table(contingency(labels, assignments))


def purity(labels, assignments) -> float:
    """Fraction of samples belonging to their cluster's majority class."""
    table = contingency(labels, assignments)
    return float(table.max(axis=1).sum() / table.sum())


@dataclass
class MetricResult:
    nmi: float
    purity: float
    contingency: np.ndarray

    def as_dict(self):
        return {"nmi": self.nmi, "purity": self.purity,
                "contingency": self.contingency.tolist()}


def evaluate(labels, assignments) -> MetricResult:
    table = contingency(labels, assignments)
    return MetricResult(nmi=_nmi_from_table(table),
                        purity=float(table.max(axis=1).sum() / table.sum()),
                        contingency=table)


def stratified_subset(labels, fraction: float, seed: int) -> np.ndarray:
    """Sorted indices of a seeded sample, ``round(fraction * n_c)`` per class (>= 1)."""
    lab = np.asarray(labels)
    if not 0 < fraction <= 1:
        raise ValueError("labeled fraction must lie in (0, 1]")
    rng = np.random.default_rng(seed)
    picked = []
    for c in np.unique(lab):
        idx = np.flatnonzero(lab == c)
        m = min(idx.size, max(1, int(round(fraction * idx.size))))
        picked.append(rng.choice(idx, size=m, replace=False))
    return np.sort(np.concatenate(picked))


@dataclass
class PSelectionResult:
    grid: list
    scores: list
    chosen_p: float
    labeled_fraction: float
    repeats: int
    subset_size: int = 0

    def as_dict(self):
        return {"grid": list(self.grid), "scores": list(self.scores),
                "chosen_p": self.chosen_p, "labeled_fraction": self.labeled_fraction,
                "repeats": self.repeats, "subset_size": self.subset_size}


def select_p(data: Dataset, spec: KernelSpec | None, map_cfg: MapConfig, base_cfg: RunConfig,
             p_grid=DEFAULT_P_GRID, labeled_fraction: float = 0.15, repeats: int = 50,
             seed: int = 0, weighted: bool = True) -> PSelectionResult:
    """Pick p by clustering the full data and scoring NMI on a labeled sample.

    Every grid value is run ``repeats`` times on the whole dataset; run ``r``
    uses the same seed for every p.  Only the seeded labeled subset (shared
    by all runs) enters the score.  Ties go to the smaller p.
    """
    if data.labels is None:
        raise ValueError("select_p needs labels")
    grid = [check_exponent(p) for p in p_grid]
    if not grid:
        raise ValueError("p grid must be nonempty")
    if repeats < 1:
        raise ValueError("repeats must be >= 1")
    sub_seed, run_seed = restart_seeds(seed, 2)
    subset = stratified_subset(data.labels, labeled_fraction, sub_seed)
    if subset.size < base_cfg.k:
        raise ValueError(f"labeled subset has {subset.size} points, fewer than k={base_cfg.k}")
    if spec is None:
        x = data.values
    else:
        data.require_nonnegative()
        x = map_dataset(spec, map_cfg, data).values
    seeds = restart_seeds(run_seed, repeats)
    truth = data.labels[subset]

    def score(job):
        p, s = job
        model = cluster_points(x, replace(base_cfg, p=p, seed=s), weighted=weighted)
        return nmi(truth, model.assignments[subset])

    jobs = [(p, s) for p in grid for s in seeds]
    flat = ordered_map(score, jobs)
    scores = [float(np.mean(flat[i * repeats:(i + 1) * repeats])) for i in range(len(grid))]
    chosen = min(range(len(grid)), key=lambda i: (-scores[i], grid[i]))
    return PSelectionResult(grid=grid, scores=scores, chosen_p=grid[chosen],
                            labeled_fraction=float(labeled_fraction), repeats=int(repeats),
                            subset_size=int(subset.size))
