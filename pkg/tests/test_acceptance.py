"""Acceptance suite: eleven end-to-end criteria with their tolerances and time budgets.

Each test records a PASS/FAIL line that is printed in the pytest terminal
summary (see ``conftest.py``) and also echoed to stdout.
"""

import json
import subprocess
import sys
import textwrap
import time
from dataclasses import replace

import numpy as np
import pytest

from conftest import ACCEPTANCE_RESULTS
from kernmink.clustering import (
    Dataset,
    RunConfig,
    cluster_points,
    exact_kernel_kmeans,
    explicit_kmwk_means,
    lloyd_kmeans,
    pairwise_pow_dist,
    update_weights,
)
from kernmink.evaluation import nmi, purity, select_p
from kernmink.featmap import (
    KernelKind,
    KernelSpec,
    MapConfig,
    approximation_report,
    kernel_eval,
    kernel_scalar,
    map_dataset,
    signature,
)
from kernmink.minkcore import center_objective, minkowski_center
from kernmink.synthetic import elongated_strips, noisy_histogram_mixture

NAMED = [KernelSpec(KernelKind(k)) for k in ("hellinger", "chi2", "intersection", "js")]
HELLINGER = NAMED[0]


class Criterion:
    """Context manager that times a criterion and records PASS/FAIL."""

    def __init__(self, num, title, budget_s=None):
        self.num, self.title, self.budget_s = num, title, budget_s
        self.detail = ""

    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def elapsed(self):
        return time.perf_counter() - self.t0

    def check_budget(self):
        if self.budget_s is not None:
            assert self.elapsed() < self.budget_s, f"took {self.elapsed():.1f}s > {self.budget_s}s"

    def __exit__(self, exc_type, exc, tb):
        status = "PASS" if exc_type is None else "FAIL"
        detail = f"{self.detail}; {self.elapsed():.2f}s"
        if exc is not None:
            detail += f"; {exc_type.__name__}: {str(exc).splitlines()[0] if str(exc) else ''}"
        ACCEPTANCE_RESULTS[self.num] = (status, self.title, detail)
        print(f"[{status}] criterion {self.num}: {self.title} | {detail}")
        return False


def _naive_nmi(y, c):
    y, c = list(y), list(c)
    n = len(y)
    ys, cs = sorted(set(y)), sorted(set(c))
    table = [[sum(1 for i in range(n) if y[i] == a and c[i] == b) for b in cs] for a in ys]
    ry = [sum(row) for row in table]
    rc = [sum(table[i][j] for i in range(len(ys))) for j in range(len(cs))]

    def ent(counts):
        return -sum(v / n * np.log(v / n) for v in counts if v)

    hy, hc = ent(ry), ent(rc)
    mi = 0.0
    for i in range(len(ys)):
        for j in range(len(cs)):
            v = table[i][j]
            if v:
                mi += v / n * np.log(v * n / (ry[i] * rc[j]))
    if hy == 0 and hc == 0:
        return 1.0
    return mi / ((hy + hc) / 2)


def _naive_purity(y, c):
    y, c = list(y), list(c)
    total = 0
    for b in set(c):
        members = [y[i] for i in range(len(y)) if c[i] == b]
        total += max(members.count(a) for a in set(members))
    return total / len(y)


def test_criterion_01_signature_consistency():
    with Criterion(1, "kernel/signature consistency", budget_s=1.0) as cr:
        lam = np.random.default_rng(1).uniform(-10, 10, 1000)
        worst = 0.0
        for spec in NAMED:
            direct = kernel_scalar(spec, np.exp(lam / 2), np.exp(-lam / 2))
            worst = max(worst, float(np.max(np.abs(signature(spec, lam) - direct))))
        cr.detail = f"max |kappa - k| = {worst:.2e}"
        assert worst <= 1e-9
        cr.check_budget()


def test_criterion_02_hellinger_exact_map():
    with Criterion(2, "Hellinger explicit map is exact", budget_s=1.0) as cr:
        rng = np.random.default_rng(2)
        x = rng.dirichlet(np.ones(8), size=10_000)
        y = rng.dirichlet(np.ones(8), size=10_000)
        phi_x = map_dataset(HELLINGER, MapConfig(1), x).values
        phi_y = map_dataset(HELLINGER, MapConfig(1), y).values
        approx = np.einsum("ij,ij->i", phi_x, phi_y)
        exact = np.sqrt(x * y).sum(axis=1)
        spot = max(abs(approx[i] - kernel_eval(HELLINGER, x[i], y[i])) for i in range(0, 10_000, 97))
        worst = float(max(np.max(np.abs(approx - exact)), spot))
        cr.detail = f"max error {worst:.2e} over 10^4 pairs"
        assert worst <= 1e-12
        cr.check_budget()


# measured once with the exact-kernel oracle under the protocol in _approx_errors
PINNED_N1 = {"chi2": 0.08641732903015989, "js": 0.034402798707521,
             "intersection": 0.22777900364003398}


def _approx_errors():
    rng = np.random.default_rng(20240)
    out = {}
    for name in ("chi2", "js", "intersection"):
        x = rng.uniform(0.01, 1.0, size=(20_000, 1))
        spec = KernelSpec(KernelKind(name))
        e1 = approximation_report(spec, MapConfig(1, 0.5), x, 10_000, seed=1).mean_rel
        e3 = approximation_report(spec, MapConfig(3), x, 10_000, seed=1).mean_rel
        out[name] = (e1, e3)
    return out


def test_criterion_03_approximation_quality():
    with Criterion(3, "map approximation error pinned; n=3 beats n=1", budget_s=10.0) as cr:
        errs = _approx_errors()
        cr.detail = ", ".join(f"{k}: n1={v[0]:.4f} n3={v[1]:.4f}" for k, v in errs.items())
        for name, (e1, e3) in errs.items():
            pinned = PINNED_N1[name]
            assert 0.8 * pinned <= e1 <= 1.2 * pinned, (name, e1, pinned)
            assert e3 < e1, (name, e3, e1)
        cr.check_budget()


def _instance(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(20, 301))
    d = int(rng.integers(2, 6))
    k = int(rng.integers(2, 6))
    return rng.dirichlet(np.ones(d), size=n) + 0.01 * rng.uniform(size=(n, d)), k


def test_criterion_04_objective_monotonicity():
    with Criterion(4, "objective monotone; terminates before max_iter", budget_s=60.0) as cr:
        chi2 = KernelSpec(KernelKind.CHI_SQUARE)
        stats = {}
        bad_steps = []
        for p in (0.5, 1.0, 1.5, 2.0, 3.0):
            engines = {"mk": False, "mwk": True}
            for name, weighted in engines.items():
                done = 0
                for s in range(50):
                    x, k = _instance(s)
                    cfg = RunConfig(k=k, p=p, max_iter=200, restarts=1, seed=s)
                    m = explicit_kmwk_means(Dataset(x), chi2, MapConfig(1), cfg, weighted=weighted)
                    tr = np.asarray(m.objective_trace)
                    if np.any(np.diff(tr) > 1e-9 * np.maximum(1.0, np.abs(tr[:-1]))):
                        bad_steps.append((name, p, s))
                    done += m.converged and m.iterations < 200
                stats[(name, p)] = done
            if p == 2.0:
                for name, run in (("lloyd", lambda x, cfg: lloyd_kmeans(x, cfg)),
                                  ("exact", lambda x, cfg: exact_kernel_kmeans(Dataset(x), chi2, cfg))):
                    done = 0
                    for s in range(50):
                        x, k = _instance(s)
                        m = run(x, RunConfig(k=k, p=2.0, max_iter=200, restarts=1, seed=s))
                        tr = np.asarray(m.objective_trace)
                        if np.any(np.diff(tr) > 1e-9 * np.maximum(1.0, np.abs(tr[:-1]))):
                            bad_steps.append((name, p, s))
                        done += m.converged and m.iterations < 200
                    stats[(name, p)] = done
        worst = min(stats.values())
        cr.detail = f"{len(stats)} engine/p cells, min converged {worst}/50, nonmonotone runs {len(bad_steps)}"
        assert not bad_steps, bad_steps[:5]
        assert worst >= 45, stats
        cr.check_budget()


def test_criterion_05_center_solver_oracles():
    with Criterion(5, "center solver vs grid / median / mean", budget_s=30.0) as cr:
        rng = np.random.default_rng(5)
        grid = np.arange(0.0, 10.0 + 5e-5, 1e-4)
        worst = -np.inf
        for p in (1.3, 1.5, 3.0):
            for _ in range(100):
                col = rng.uniform(0, 10, size=int(rng.integers(1, 33)))
                vals = np.zeros(grid.size)
                for v in col:
                    vals += np.abs(grid - v) ** p
                f_grid = vals.min()
                f_ours = center_objective(col[:, None], minkowski_center(col[:, None], p), p)
                worst = max(worst, f_ours - f_grid)
                assert f_ours <= f_grid + 1e-6, (p, f_ours, f_grid)
        closed = 0.0
        for _ in range(100):
            pts = rng.uniform(0, 10, size=(int(rng.integers(1, 33)), 3))
            closed = max(closed, float(np.max(np.abs(minkowski_center(pts, 1) - np.median(pts, axis=0)))),
                         float(np.max(np.abs(minkowski_center(pts, 2) - pts.mean(axis=0)))))
        cr.detail = f"max (solver - grid) = {worst:.2e}; closed-form gap {closed:.1e}"
        assert closed <= 1e-9
        cr.check_budget()


def test_criterion_06_explicit_exact_equivalence():
    with Criterion(6, "explicit vs exact Hellinger kernel K-means", budget_s=60.0) as cr:
        same, ties, other = 0, 0, []
        for s in range(100):
            rng = np.random.default_rng(1000 + s)
            n = int(rng.integers(20, 120))
            x = rng.dirichlet(np.ones(int(rng.integers(2, 8))), size=n)
            k = int(rng.integers(2, 6))
            cfg = RunConfig(k=k, p=2.0, restarts=1, seed=s, init="random_points")
            ex = exact_kernel_kmeans(Dataset(x), HELLINGER, cfg)
            ap = explicit_kmwk_means(Dataset(x), HELLINGER, MapConfig(0), cfg, weighted=False)
            if np.array_equal(ex.assignments, ap.assignments):
                same += 1
                continue
            # a divergence counts as a tie if some point is equidistant to two centers
            phi = map_dataset(HELLINGER, MapConfig(0), x).values
            d = pairwise_pow_dist(phi, ap.centers, None, 2.0)
            srt = np.sort(d, axis=1)
            if np.any(srt[:, 1] - srt[:, 0] <= 1e-12 * (1 + srt[:, 0])):
                ties += 1
            else:
                other.append(s)
        cr.detail = f"identical {same}/100, tie divergences {ties}, other {len(other)}"
        assert same >= 95 and not other
        cr.check_budget()


def test_criterion_07_weight_update():
    with Criterion(7, "weight update examples and simplex rows") as cr:
        w1 = update_weights(np.array([[1.0, 2.0]]), np.array([0]), np.zeros((1, 2)), 2)
        w2 = update_weights(np.array([[1.0, 1.0, np.sqrt(2.0)]]), np.array([0]), np.zeros((1, 3)), 2)
        err = max(np.max(np.abs(w1 - [[0.8, 0.2]])), np.max(np.abs(w2 - [[0.4, 0.4, 0.2]])))
        rng = np.random.default_rng(7)
        row_err = 0.0
        for _ in range(500):
            n, d, k = int(rng.integers(2, 40)), int(rng.integers(1, 10)), int(rng.integers(1, 5))
            x = rng.normal(scale=rng.uniform(1e-6, 1e3), size=(n, d))
            if rng.uniform() < 0.2:
                x[:, 0] = 1.0
            a = rng.integers(0, k, n)
            c = rng.normal(size=(k, d))
            p = float(rng.choice([0.5, 1.0, 1.1, 1.5, 2.0, 3.0, 5.0]))
            w = update_weights(x, a, c, p)
            assert np.all(np.isfinite(w)) and np.all(w >= 0)
            row_err = max(row_err, float(np.max(np.abs(w.sum(axis=1) - 1.0))))
        cr.detail = f"example error {err:.1e}; max |row sum - 1| {row_err:.1e} on 500 fuzzed inputs"
        assert err <= 1e-12
        assert row_err <= 1e-12


def test_criterion_08_metrics():
    with Criterion(8, "NMI and purity vs naive implementation") as cr:
        rng = np.random.default_rng(8)
        worst = 0.0
        for _ in range(1000):
            n = int(rng.integers(1, 201))
            y = rng.integers(0, int(rng.integers(1, 8)), n)
            c = rng.integers(0, int(rng.integers(1, 8)), n)
            worst = max(worst, abs(nmi(y, c) - _naive_nmi(y, c)), abs(purity(y, c) - _naive_purity(y, c)))
        cr.detail = f"max deviation {worst:.1e} over 1000 partition pairs"
        assert worst <= 1e-12


def test_criterion_09_select_p_on_strips():
    with Criterion(9, "select_p picks p=1 on elongated strips", budget_s=120.0) as cr:
        ds = elongated_strips(60, seed=0)
        base = RunConfig(k=2, restarts=2, init="random_points")
        chosen = []
        for trial in range(20):
            res = select_p(ds, HELLINGER, MapConfig(0), base, p_grid=[1.0, 1.5, 2.0, 3.0],
                           labeled_fraction=0.15, repeats=20, seed=100 + trial, weighted=False)
            chosen.append(res.chosen_p)
        hits = sum(p == 1.0 for p in chosen)
        cr.detail = f"p=1 chosen in {hits}/20 trials"
        assert hits >= 18, chosen
        cr.check_budget()


def test_criterion_10_weighted_beats_unweighted():
    with Criterion(10, "MWK >= MK >= K on noisy histogram mixtures", budget_s=300.0) as cr:
        ds = noisy_histogram_mixture(k=5, n=1000, d_informative=15, d_noise=5, seed=10)
        spec = KernelSpec(KernelKind.CHI_SQUARE)
        mcfg = MapConfig(1)
        grid = [1.0, 1.5, 2.0, 2.5, 3.0]
        base = RunConfig(k=5, restarts=1)
        p_mk = select_p(ds, spec, mcfg, base, p_grid=grid, labeled_fraction=0.15, repeats=3,
                        seed=1, weighted=False).chosen_p
        p_mwk = select_p(ds, spec, mcfg, base, p_grid=grid, labeled_fraction=0.15, repeats=3,
                         seed=1, weighted=True).chosen_p
        x = map_dataset(spec, mcfg, ds).values
        scores = {"K": [], "MK": [], "MWK": []}
        for s in range(20):
            cfg = replace(base, seed=s)
            scores["K"].append(nmi(ds.labels, cluster_points(
                x, replace(cfg, p=2.0, init="random_points")).assignments))
            scores["MK"].append(nmi(ds.labels, cluster_points(x, replace(cfg, p=p_mk)).assignments))
            scores["MWK"].append(nmi(ds.labels, cluster_points(
                x, replace(cfg, p=p_mwk), weighted=True).assignments))
        mean = {k: float(np.mean(v)) for k, v in scores.items()}
        cr.detail = (f"mean NMI K={mean['K']:.3f} MK(p={p_mk:g})={mean['MK']:.3f} "
                     f"MWK(p={p_mwk:g})={mean['MWK']:.3f}")
        assert mean["MWK"] >= mean["MK"] >= mean["K"]
        assert mean["MWK"] - mean["MK"] >= 0.02
        cr.check_budget()


MEMORY_SCRIPT = textwrap.dedent("""
    import json, time
    import numpy as np
    from kernmink.clustering import RunConfig, explicit_kmwk_means, Dataset
    from kernmink.featmap import KernelKind, KernelSpec, MapConfig

    def status_kb(field):
        # per address space and reset by exec, unlike ru_maxrss which a child inherits
        with open("/proc/self/status") as fh:
            for line in fh:
                if line.startswith(field + ":"):
                    return int(line.split()[1])

    base = status_kb("VmRSS")
    t0 = time.perf_counter()
    x = np.random.default_rng(11).uniform(0.01, 1.0, size=(50_000, 16))
    cfg = RunConfig(k=5, p=1.5, restarts=1, seed=0, max_iter=100)
    m = explicit_kmwk_means(Dataset(x), KernelSpec(KernelKind.CHI_SQUARE), MapConfig(1), cfg,
                            weighted=True)
    peak = status_kb("VmHWM")
    print(json.dumps({"base_kb": base, "peak_kb": peak, "seconds": time.perf_counter() - t0,
                      "sizes": np.bincount(m.assignments, minlength=5).tolist(),
                      "iterations": m.iterations}))
""")


@pytest.mark.slow
@pytest.mark.skipif(not sys.platform.startswith("linux"), reason="reads /proc/self/status")
def test_criterion_11_memory_footprint():
    with Criterion(11, "N=50,000 clustering stays far below an N x N footprint", budget_s=600.0) as cr:
        out = subprocess.run([sys.executable, "-c", MEMORY_SCRIPT], capture_output=True, text=True,
                             timeout=600)
        assert out.returncode == 0, out.stderr
        rep = json.loads(out.stdout)
        mapped_bytes = 50_000 * 16 * 3 * 8
        growth = (rep["peak_kb"] - rep["base_kb"]) * 1024
        cr.detail = (f"peak growth {growth / 2**20:.1f} MiB vs mapped {mapped_bytes / 2**20:.1f} MiB "
                     f"(ratio {growth / mapped_bytes:.1f}); an N x N matrix would be "
                     f"{50_000**2 * 8 / 2**30:.1f} GiB; {rep['iterations']} iterations")
        assert growth < 20 * mapped_bytes
        assert min(rep["sizes"]) >= 1
        cr.check_budget()
