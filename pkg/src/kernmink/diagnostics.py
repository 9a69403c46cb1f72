"""Distance-concentration gauges over Minkowski norms.

Norms are taken of the points as given (no centering), with the ``1/p`` root.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from .minkcore import check_exponent

__all__ = [
    "minkowski_norms",
    "relative_contrast",
    "relative_variance",
    "Probe",
    "DiagnosticsReport",
    "GENERATORS",
    "generate",
    "concentration_sweep",
]


def minkowski_norms(points, p) -> np.ndarray:
    x = np.asarray(points, dtype=float)
    if x.ndim != 2:
        raise ValueError("points must be a 2-D matrix")
    p = check_exponent(p)
    return np.sum(np.abs(x) ** p, axis=1) ** (1.0 / p)


def relative_contrast(points, p) -> float:
    """``(max_i ||x_i||_p - min_i ||x_i||_p) / D**(1/p - 1/2)``."""
    x = np.asarray(points, dtype=float)
    if x.ndim != 2 or x.shape[0] < 2:
        raise ValueError("relative contrast needs at least two points")
    norms = minkowski_norms(x, p)
    return float((norms.max() - norms.min()) / x.shape[1] ** (1.0 / p - 0.5))


def relative_variance(points, p) -> float:
    """Sample standard deviation of the norms over their mean (ddof=1)."""
    x = np.asarray(points, dtype=float)
    if x.ndim != 2 or x.shape[0] < 2:
        raise ValueError("relative variance needs at least two points")
    norms = minkowski_norms(x, p)
    mean = norms.mean()
    if not mean > 0:
        raise ValueError("relative variance undefined: all points have zero norm")
    return float(norms.std(ddof=1) / mean)


GENERATORS = {
    "uniform": lambda rng, n, d: rng.uniform(0.0, 1.0, size=(n, d)),
    "gaussian": lambda rng, n, d: rng.standard_normal(size=(n, d)),
    "exponential": lambda rng, n, d: rng.exponential(1.0, size=(n, d)),
    # histogram-like: nonnegative rows summing to one
    "dirichlet": lambda rng, n, d: rng.dirichlet(np.ones(d), size=n),
}


def generate(name: str, n: int, d: int, seed: int) -> np.ndarray:
    try:
        gen = GENERATORS[name]
    except KeyError:
        raise ValueError(f"unknown generator {name!r}; choose from {sorted(GENERATORS)}") from None
    return gen(np.random.default_rng(seed), n, d)


@dataclass(frozen=True)
class Probe:
    p: float
    D: int
    relative_contrast: float
    relative_variance: float
    N: int
    seed: int
    repeats: int = 1


@dataclass
class DiagnosticsReport:
    generator: str
    probes: list = field(default_factory=list)

    def as_dict(self):
        return {"generator": self.generator, "probes": [asdict(pr) for pr in self.probes]}


def _probe_seed(seed, d, rep):
    return int(np.random.SeedSequence([seed, d, rep]).generate_state(1)[0])


def concentration_sweep(generator: str, p_grid, d_grid, n: int, seed: int,
                        repeats: int = 1) -> DiagnosticsReport:
    """One probe per ``(p, D)``; statistics averaged over ``repeats`` draws.

    The same draws are shared across all ``p`` at a given ``D``, so exponents
    are compared on identical samples.
    """
    p_grid = [check_exponent(p) for p in p_grid]
    d_grid = [int(d) for d in d_grid]
    if not p_grid or not d_grid:
        raise ValueError("p and D grids must be nonempty")
    if any(d < 1 for d in d_grid):
        raise ValueError("dimensions must be >= 1")
    if n < 2:
        raise ValueError("need N >= 2")
    if repeats < 1:
        raise ValueError("repeats must be >= 1")
    report = DiagnosticsReport(generator=generator)
    for d in d_grid:
        draws = [generate(generator, n, d, _probe_seed(seed, d, r)) for r in range(repeats)]
        for p in p_grid:
            rc = float(np.mean([relative_contrast(x, p) for x in draws]))
            rv = float(np.mean([relative_variance(x, p) for x in draws]))
            report.probes.append(Probe(p=p, D=d, relative_contrast=rc, relative_variance=rv,
                                       N=n, seed=seed, repeats=repeats))
    return report
