"""Homogeneous additive kernels and their sampled explicit feature maps.

Every kernel here is additive, ``K(x, y) = sum_l k(x_l, y_l)``, and
1-homogeneous, so the scalar kernel is fully described by its signature
``kappa(lambda) = k(exp(lambda/2), exp(-lambda/2))``.  The spectrum ``rho`` is
the inverse Fourier transform of the signature, and a finite feature map is
obtained by sampling ``rho`` at ``omega = 0, L, 2L, ..., nL``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

__all__ = [
    "KernelKind",
    "KernelSpec",
    "MapConfig",
    "default_period",
    "MappedDataset",
    "kernel_eval",
    "kernel_scalar",
    "signature",
    "spectrum",
    "spectrum_quadrature",
    "map_scalar",
    "map_values",
    "map_dataset",
    "approximation_report",
    "ApproximationStats",
]

_RHO_FLOOR = 1e-300
_LOG2 = math.log(2.0)


class KernelKind(str, enum.Enum):
    HELLINGER = "hellinger"
    CHI_SQUARE = "chi2"
    INTERSECTION = "intersection"
    JENSEN_SHANNON = "js"
    HEIN_BOUSQUET = "hein-bousquet"


@dataclass(frozen=True)
class KernelSpec:
    """Which homogeneous kernel to use.

    ``alpha`` and ``beta`` are only read for the Hein-Bousquet family; either
    may be ``math.inf`` / ``-math.inf``.
    """

    kind: KernelKind
    alpha: float | None = None
    beta: float | None = None
    gamma: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "kind", KernelKind(self.kind))
        if self.gamma < 0:
            raise ValueError(f"gamma must be >= 0, got {self.gamma}")
        if self.kind is KernelKind.HEIN_BOUSQUET:
            _check_hein_bousquet(self.alpha, self.beta)
        elif self.gamma != 1.0:
            raise ValueError(f"{self.kind.value} kernel is 1-homogeneous; gamma must be 1")

    @classmethod
    def parse(cls, text: str) -> "KernelSpec":
        """Build a spec from a CLI-style name.

        Accepts ``hellinger``, ``chi2``, ``intersection``, ``js`` and
        ``hein-bousquet:ALPHA:BETA`` (``inf`` / ``-inf`` allowed).
        """
        name, *params = text.strip().lower().split(":")
        aliases = {"chi-square": "chi2", "chisquare": "chi2", "jensen-shannon": "js",
                   "hb": "hein-bousquet", "heinbousquet": "hein-bousquet"}
        kind = KernelKind(aliases.get(name, name))
        if kind is KernelKind.HEIN_BOUSQUET:
            if len(params) != 2:
                raise ValueError("hein-bousquet needs parameters, e.g. hein-bousquet:1:1")
            return cls(kind, alpha=float(params[0]), beta=float(params[1]))
        if params:
            raise ValueError(f"kernel {name!r} takes no parameters")
        return cls(kind)

    @property
    def label(self) -> str:
        if self.kind is KernelKind.HEIN_BOUSQUET:
            return f"hein-bousquet:{self.alpha:g}:{self.beta:g}"
        return self.kind.value


def _check_hein_bousquet(alpha, beta):
    if alpha is None or beta is None:
        raise ValueError("hein-bousquet kernel requires alpha and beta")
    if not alpha >= 1:
        raise ValueError(f"alpha must lie in [1, inf], got {alpha}")
    if not (0.5 <= beta <= alpha or beta <= -1):
        raise ValueError(f"beta must lie in [1/2, alpha] or [-inf, -1], got {beta}")
    if math.isinf(alpha) and math.isinf(beta):
        raise ValueError("alpha and beta cannot both be infinite")


def default_period(n: int) -> float:
    """Sampling period used when none is given: 0.5 at ``n <= 1``, shrinking with ``n``.

    A finer period pushes the aliased copies of the signature further out,
    which only pays off once enough samples cover the spectrum.
    """
    return max(0.5 - 0.05 * max(n - 1, 0), 0.25)


@dataclass(frozen=True)
class MapConfig:
    """Spectrum sampling: ``n`` samples per side at frequency step ``period``.

    ``period=None`` picks :func:`default_period` for ``n``.
    """

    n: int = 1
    period: float | None = None

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 0:
            raise ValueError(f"n must be a nonnegative integer, got {self.n}")
        if self.period is None:
            object.__setattr__(self, "period", default_period(int(self.n)))
        if not self.period > 0:
            raise ValueError(f"period must be > 0, got {self.period}")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "period", float(self.period))

    @property
    def dim(self) -> int:
        return 2 * self.n + 1


@dataclass(frozen=True)
class MappedDataset:
    values: np.ndarray
    source_dims: int
    map_config: MapConfig
    kernel: KernelSpec


# ---------------------------------------------------------------------------
# exact kernels


def _power_mean_sum(a, b, e):
    """``(a**e + b**e) ** (1/e)`` with the limits for zeros and infinite ``e``."""
    if math.isinf(e):
        return np.maximum(a, b) if e > 0 else np.minimum(a, b)
    if e < 0:
        out = np.zeros(np.broadcast(a, b).shape)
        pos = (a > 0) & (b > 0)
        aa, bb = np.broadcast_to(a, out.shape)[pos], np.broadcast_to(b, out.shape)[pos]
        out[pos] = (aa**e + bb**e) ** (1.0 / e)
        return out
    with np.errstate(over="ignore"):
        return (a**e + b**e) ** (1.0 / e)


def _xlogy(x, y):
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(x > 0, x * np.log(np.where(x > 0, y, 1.0)), 0.0)


def _hb_sqdist(a, b, alpha, beta):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if alpha == beta:
        # pointwise limit alpha -> beta
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            aa, bb = a**beta, b**beta
            s = aa + bb
            ok = np.isfinite(s) & (s > 0)
            ra = np.where(ok, aa / np.where(ok, s, 1.0), 0.0)
            rb = np.where(ok, bb / np.where(ok, s, 1.0), 0.0)
            bracket = _xlogy(ra, 2 * ra) + _xlogy(rb, 2 * rb)
            root = np.where(ok, s, 1.0) ** (1.0 / beta)
        # for beta < 0 the power mean vanishes whenever an argument is 0
        return np.where(ok, root / _LOG2 * bracket, 0.0)
    ta = 0.0 if math.isinf(alpha) else 1.0 / alpha
    tb = 0.0 if math.isinf(beta) else 1.0 / beta
    num = 2.0**tb * _power_mean_sum(a, b, alpha) - 2.0**ta * _power_mean_sum(a, b, beta)
    # normalised to be nonnegative; agrees with the alpha -> beta limit
    return num / abs(2.0**ta - 2.0**tb)


def kernel_scalar(spec: KernelSpec, a, b) -> np.ndarray:
    """Elementwise scalar kernel ``k(a, b)`` (broadcasting, no validation)."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    kind = spec.kind
    if kind is KernelKind.HELLINGER:
        return np.sqrt(a) * np.sqrt(b)
    if kind is KernelKind.INTERSECTION:
        return np.minimum(a, b)
    if kind is KernelKind.CHI_SQUARE:
        s = a + b
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(s > 0, 2.0 * a * b / np.where(s > 0, s, 1.0), 0.0)
    if kind is KernelKind.JENSEN_SHANNON:
        s = a + b
        with np.errstate(divide="ignore", invalid="ignore"):
            out = _xlogy(a, np.where(a > 0, s / np.where(a > 0, a, 1.0), 1.0))
            out = out + _xlogy(b, np.where(b > 0, s / np.where(b > 0, b, 1.0), 1.0))
        return out / (2.0 * _LOG2)
    zero = np.zeros_like(a)
    d2 = _hb_sqdist
    al, be = spec.alpha, spec.beta
    return 0.5 * (-d2(a, b, al, be) + d2(a, zero, al, be) + d2(b, np.zeros_like(b), al, be))


def _as_nonneg_vector(x, name):
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise ValueError(f"{name} must be a vector")
    if np.any(x < 0):
        i = int(np.flatnonzero(x < 0)[0])
        raise ValueError(f"{name} has negative entry {x[i]} at index {i}")
    return x


def kernel_eval(spec: KernelSpec, x, y) -> float:
    """Exact additive kernel ``K(x, y) = sum_l k(x_l, y_l)``."""
    x = _as_nonneg_vector(x, "x")
    y = _as_nonneg_vector(y, "y")
    if x.shape != y.shape:
        raise ValueError(f"dimension mismatch: {x.shape[0]} vs {y.shape[0]}")
    return float(np.sum(kernel_scalar(spec, x, y)))


# ---------------------------------------------------------------------------
# signature and spectrum


def signature(spec: KernelSpec, lam):
    """Signature ``kappa(lambda) = k(e^{lambda/2}, e^{-lambda/2})``.

    Closed forms for the named kernels; direct evaluation for Hein-Bousquet.
    Accepts scalars or arrays.
    """
    lam_arr = np.asarray(lam, dtype=float)
    kind = spec.kind
    if kind is KernelKind.HELLINGER:
        out = np.ones_like(lam_arr)
    elif kind is KernelKind.CHI_SQUARE:
        e = np.exp(-np.abs(lam_arr) / 2.0)
        out = 2.0 * e / (1.0 + e * e)
    elif kind is KernelKind.INTERSECTION:
        out = np.exp(-np.abs(lam_arr) / 2.0)
    elif kind is KernelKind.JENSEN_SHANNON:
        # even in lambda; clipping keeps exp(t/2) finite where kappa underflows anyway
        t = np.minimum(np.abs(lam_arr), 1400.0)
        out = (np.exp(t / 2) / 2 * np.log1p(np.exp(-t))
               + np.exp(-t / 2) / 2 * (t + np.log1p(np.exp(-t)))) / _LOG2
    else:
        out = kernel_scalar(spec, np.exp(lam_arr / 2), np.exp(-lam_arr / 2))
    return float(out) if np.ndim(lam) == 0 else out


def spectrum_quadrature(spec: KernelSpec, omega: float, half_width: float = 40.0,
                        step: float = 0.01) -> float:
    """Inverse Fourier transform of the signature by the trapezoid rule.

    ``rho(omega) = 1/(2 pi) * integral kappa(lambda) cos(omega lambda) dlambda``
    over ``|lambda| <= half_width``.  The signature is even, so the sine part
    vanishes.
    """
    m = int(round(half_width / step))
    lam = np.linspace(-half_width, half_width, 2 * m + 1)
    vals = np.asarray(signature(spec, lam)) * np.cos(omega * lam)
    return float(np.trapezoid(vals, lam) / (2.0 * math.pi))


@lru_cache(maxsize=4096)
def _hb_spectrum_cached(alpha, beta, omega):
    spec = KernelSpec(KernelKind.HEIN_BOUSQUET, alpha=alpha, beta=beta)
    return max(spectrum_quadrature(spec, omega), 0.0)


def spectrum(spec: KernelSpec, omega: float) -> float:
    """Spectrum ``rho(omega)`` of the kernel signature.

    Raises
    ------
    ValueError
        For Hellinger, whose spectrum is a Dirac delta; use its closed-form map.
    """
    kind = spec.kind
    w = float(omega)
    if kind is KernelKind.HELLINGER:
        raise ValueError("hellinger has a closed-form map; no sampled spectrum")
    if kind is KernelKind.CHI_SQUARE:
        rho = 1.0 / math.cosh(min(math.pi * w, 700.0))
    elif kind is KernelKind.JENSEN_SHANNON:
        rho = 2.0 / math.log(4.0) / math.cosh(math.pi * w) / (1.0 + 4.0 * w * w)
    elif kind is KernelKind.INTERSECTION:
        rho = 2.0 / math.pi / (1.0 + 4.0 * w * w)
    else:
        # quadrature noise can dip slightly below zero
        rho = _hb_spectrum_cached(spec.alpha, spec.beta, abs(w))
    return 0.0 if rho < _RHO_FLOOR else rho


# ---------------------------------------------------------------------------
# explicit maps


def _sample_weights(spec: KernelSpec, cfg: MapConfig) -> np.ndarray:
    """Per-frequency amplitudes ``sqrt(c_j L rho(jL))`` with ``c_0 = 1, c_j = 2``."""
    L = cfg.period
    rho = np.array([spectrum(spec, j * L) for j in range(cfg.n + 1)])
    scale = np.full(cfg.n + 1, 2.0 * L)
    scale[0] = L
    return np.sqrt(scale * rho)


def map_values(spec: KernelSpec, cfg: MapConfig, values) -> np.ndarray:
    """Map an array of nonnegative scalars; output gains a trailing axis of ``2n+1``.

    Component 0 is the DC term, components ``2j-1`` / ``2j`` the cosine / sine
    at frequency ``jL``.  Zero inputs map to the zero vector.
    """
    a = np.asarray(values, dtype=float)
    if np.any(a < 0):
        idx = np.argwhere(a < 0)[0]
        raise ValueError(f"negative value {a[tuple(idx)]} at index {tuple(int(i) for i in idx)}")
    out = np.zeros(a.shape + (cfg.dim,))
    if spec.kind is KernelKind.HELLINGER:
        out[..., 0] = np.sqrt(a)
        return out
    amp = _sample_weights(spec, cfg)
    pos = a > 0
    root = np.sqrt(np.where(pos, a, 0.0) ** spec.gamma)
    out[..., 0] = root * amp[0]
    if cfg.n:
        loga = np.log(np.where(pos, a, 1.0))
        j = np.arange(1, cfg.n + 1)
        phase = loga[..., None] * (j * cfg.period)
        mag = root[..., None] * amp[1:]
        out[..., 1::2] = mag * np.cos(phase)
        out[..., 2::2] = mag * np.sin(phase)
    out[~pos] = 0.0
    return out


def map_scalar(spec: KernelSpec, cfg: MapConfig, a: float) -> np.ndarray:
    """Feature map of one nonnegative scalar, a vector of length ``2n+1``."""
    if a < 0:
        raise ValueError(f"map input must be >= 0, got {a}")
    return map_values(spec, cfg, np.array(a, dtype=float))


def _dataset_values(data):
    return np.asarray(getattr(data, "values", data), dtype=float)


def map_dataset(spec: KernelSpec, cfg: MapConfig, data) -> MappedDataset:
    """Concatenate per-feature maps row by row: ``N x D`` -> ``N x D(2n+1)``."""
    x = _dataset_values(data)
    if x.ndim != 2:
        raise ValueError("data must be a 2-D matrix")
    if np.any(x < 0):
        r, c = np.argwhere(x < 0)[0]
        raise ValueError(f"negative value {x[r, c]} at row {r}, feature {c}")
    n, d = x.shape
    mapped = map_values(spec, cfg, x).reshape(n, d * cfg.dim)
    return MappedDataset(values=mapped, source_dims=d, map_config=cfg, kernel=spec)


@dataclass(frozen=True)
class ApproximationStats:
    pairs: int
    max_abs: float
    mean_abs: float
    max_rel: float
    mean_rel: float

    def as_dict(self):
        return {"pairs": self.pairs, "max_abs": self.max_abs, "mean_abs": self.mean_abs,
                "max_rel": self.max_rel, "mean_rel": self.mean_rel}


def approximation_report(spec: KernelSpec, cfg: MapConfig, data, pairs: int,
                         seed: int = 0) -> ApproximationStats:
    """Compare ``Phi_i . Phi_j`` with the exact ``K(x_i, x_j)`` on random row pairs.

    Relative errors are taken against ``|K|``; pairs with ``K == 0`` contribute
    their absolute error instead.
    """
    x = _dataset_values(data)
    if x.ndim != 2 or x.shape[0] == 0:
        raise ValueError("approximation_report needs a nonempty dataset")
    if pairs < 1:
        raise ValueError("pairs must be >= 1")
    rng = np.random.default_rng(seed)
    i = rng.integers(0, x.shape[0], size=pairs)
    j = rng.integers(0, x.shape[0], size=pairs)
    phi = map_dataset(spec, cfg, x).values
    approx = np.einsum("ij,ij->i", phi[i], phi[j])
    exact = kernel_scalar(spec, x[i], x[j]).sum(axis=1)
    err = np.abs(approx - exact)
    denom = np.abs(exact)
    rel = np.where(denom > 0, err / np.where(denom > 0, denom, 1.0), err)
    return ApproximationStats(pairs=int(pairs), max_abs=float(err.max()),
                              mean_abs=float(err.mean()), max_rel=float(rel.max()),
                              mean_rel=float(rel.mean()))
