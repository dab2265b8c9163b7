"""Calibration, power and runtime harnesses."""

from __future__ import annotations

import json
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import stats

from rcit import citest, wchi2
from rcit.synth import gen_pnl_alt, gen_pnl_null, trial_rng


# fewer trials make the KS and AUPC summaries too noisy to compare conditions
MIN_TRIALS = 50


def _check_p(p_values) -> np.ndarray:
    p = np.asarray(p_values, dtype=float).ravel()
    if p.size == 0:
        raise ValueError("empty p-value list")
    if np.any((p < 0) | (p > 1)) or not np.all(np.isfinite(p)):
        raise ValueError("p-values must lie in [0, 1]")
    return p


def ks_uniformity(p_values) -> float:
    """Kolmogorov-Smirnov distance between the empirical CDF of ``p_values`` and U(0, 1)."""
    p = np.sort(_check_p(p_values))
    n = p.size
    i = np.arange(1, n + 1)
    return float(max(np.max(i / n - p), np.max(p - (i - 1) / n)))


def aupc(p_values) -> float:
    """Area under the empirical CDF of the p-values on [0, 1]; equals ``1 - mean(p)``."""
    p = np.sort(_check_p(p_values))
    # step-function integral: between consecutive jumps the CDF is i/n
    knots = np.concatenate((p, [1.0]))
    heights = np.arange(1, p.size + 1) / p.size
    return float(np.sum(heights * np.diff(knots)))


def ks_critical_value(trials: int, alpha: float = 0.01) -> float:
    """Exact one-sample KS critical value at level ``alpha``."""
    return float(stats.kstwo.ppf(1 - alpha, trials))


@dataclass
class ExperimentReport:
    design: dict
    p_values: list[float]
    ks_statistic: float
    aupc: float
    mean_runtime: float
    seed: int
    fallbacks: int = 0

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentReport":
        return cls(**d)


def dump_reports(reports: Sequence[ExperimentReport], path) -> None:
    with open(path, "w") as fh:
        json.dump([r.to_dict() for r in reports], fh, indent=2)


def load_reports(path) -> list[ExperimentReport]:
    with open(path) as fh:
        return [ExperimentReport.from_dict(d) for d in json.load(fh)]


def default_threads() -> int:
    return max(1, int(os.environ.get("RCIT_THREADS", "1")))


def _one_trial(generator: Callable, test: str, n: int, k: int, seed: int, trial: int,
               approx: str, permute_x: bool) -> tuple[float, float, bool]:
    rng = trial_rng(seed, trial)
    x, y, z = generator(n, k, rng)
    if permute_x:
        perm = rng.permutation(n)
        while np.array_equal(perm, np.arange(n)):
            perm = rng.permutation(n)
        x = x[perm]
    cfg = citest.CITestConfig(approx_method=approx, seed=int(rng.integers(2**31)))
    t0 = time.perf_counter()
    res = citest.run_test(test, x, y, z, cfg)
    return res.p_value, time.perf_counter() - t0, res.fallback_flag


def _suite(generator: Callable, kind: str, tests, sizes, k_values, trials: int, seed: int,
           approx: str, threads: int | None, permute_x: bool = False) -> list[ExperimentReport]:
    if not tests:
        raise ValueError("no tests given")
    if trials < MIN_TRIALS:
        raise ValueError(f"trials must be >= {MIN_TRIALS}")
    threads = threads or default_threads()
    reports = []
    for test in tests:
        for n in sizes:
            for k in k_values:
                # per-condition seed so that conditions are independent and reorderable
                cond_seed = int(np.random.SeedSequence([seed, int(n), int(k)]).generate_state(1)[0])
                args = [(generator, test, n, k, cond_seed, t, approx, permute_x) for t in range(trials)]
                if threads > 1:
                    with ThreadPoolExecutor(threads) as pool:
                        out = list(pool.map(lambda a: _one_trial(*a), args))
                else:
                    out = [_one_trial(*a) for a in args]
                p = [o[0] for o in out]
                reports.append(ExperimentReport(
                    design={"kind": kind, "test": test, "n": int(n), "k": int(k),
                            "trials": trials, "approx": approx},
                    p_values=p,
                    ks_statistic=ks_uniformity(p),
                    aupc=aupc(p),
                    mean_runtime=float(np.mean([o[1] for o in out])),
                    seed=seed,
                    fallbacks=int(sum(o[2] for o in out)),
                ))
    return reports


def run_calibration_suite(tests=("rcot", "rcit"), sizes=(500, 1000, 2000, 10000), k_values=(1,),
                          trials: int = 200, seed: int = 0, approx: str = "LPB",
                          threads: int | None = None) -> list[ExperimentReport]:
    """Null post non-linear models; one report per (test, n, k)."""
    return _suite(gen_pnl_null, "null", tests, sizes, k_values, trials, seed, approx, threads)


def run_power_suite(tests=("rcot", "rcit"), sizes=(500, 1000, 2000, 10000), k_values=(1,),
                    trials: int = 200, seed: int = 0, approx: str = "LPB",
                    threads: int | None = None) -> list[ExperimentReport]:
    """Alternative (hidden shared noise) models; compare reports by ``aupc``."""
    return _suite(gen_pnl_alt, "alt", tests, sizes, k_values, trials, seed, approx, threads)


def run_permutation_calibration(tests=("rcot", "rcit"), n: int = 1000, k_values=tuple(range(1, 11)),
                                trials: int = 200, seed: int = 0, approx: str = "LPB",
                                threads: int | None = None) -> list[ExperimentReport]:
    """Alternative models with the rows of X permuted, which makes them null again."""
    return _suite(gen_pnl_alt, "permuted", tests, (n,), k_values, trials, seed, approx, threads,
                  permute_x=True)


@dataclass
class RuntimeRow:
    test: str
    n: int
    k: int
    mean_seconds: float
    repeats: int
    timings: list[float] = field(default_factory=list)


def run_runtime_benchmark(tests=("rcot", "rcit"), sizes=(1000, 10000, 100000), repeats: int = 3,
                          seed: int = 0, k: int = 1) -> list[RuntimeRow]:
    """Mean wall-clock time of one test call per (test, n); a warm-up call is discarded.

    Data generation is not timed.
    """
    if repeats < 3:
        raise ValueError("repeats must be >= 3")
    rows = []
    for test in tests:
        for n in sizes:
            x, y, z = gen_pnl_null(n, k, trial_rng(seed, n))
            cfg = citest.CITestConfig(seed=seed)
            citest.run_test(test, x, y, z, cfg)
            timings = []
            for _ in range(repeats):
                t0 = time.perf_counter()
                citest.run_test(test, x, y, z, cfg)
                timings.append(time.perf_counter() - t0)
            rows.append(RuntimeRow(test, int(n), k, float(np.mean(timings)), repeats, timings))
    return rows


def null_accuracy_table(weight_sets, probs=(0.90, 0.95, 0.99), draws: int = 1_000_000,
                        seed: int = 0) -> list[dict]:
    """Compare the moment-matching approximations with Imhof at Imhof's upper quantiles.

    Each row also holds the Monte-Carlo estimate at the 0.95 quantile and its
    standard error, checking Imhof itself.
    """
    rows = []
    for idx, weights in enumerate(weight_sets):
        dist = wchi2.WeightedChiSquare.from_weights(weights)
        t0 = time.perf_counter()
        quantiles = [wchi2.imhof_quantile(dist, p) for p in probs]
        exact = [wchi2.imhof_survival(dist, q) for q in quantiles]
        errors, flags = {}, {}
        for method in ("SW", "HBE", "WOODF", "LPB"):
            approx = wchi2.approximation(dist, method)
            errors[method] = float(max(abs(float(approx.survival(q)) - e)
                                       for q, e in zip(quantiles, exact)))
            flags[method] = bool(approx.fallback)
        q_mid = quantiles[len(quantiles) // 2]
        mc = wchi2.empirical_survival_oracle(dist, q_mid, draws, trial_rng(seed, idx))
        e_mid = exact[len(exact) // 2]
        rows.append({
            "set": idx,
            "L": int(dist.positive.size),
            "weights": [float(w) for w in dist.weights],
            "quantiles": dict(zip([str(p) for p in probs], quantiles)),
            "max_abs_error": errors,
            "fallback": flags,
            "monte_carlo": {"x": q_mid, "imhof": e_mid, "estimate": mc,
                            "std_error": float(np.sqrt(e_mid * (1 - e_mid) / draws))},
            "seconds": time.perf_counter() - t0,
        })
    return rows


def random_weight_sets(num_sets: int, seed: int = 0, max_len: int = 25) -> list[np.ndarray]:
    """``num_sets`` weight vectors with length in 1..max_len and Uniform(0, 1) entries."""
    rng = np.random.default_rng(seed)
    return [rng.uniform(0.0, 1.0, int(rng.integers(1, max_len + 1))) for _ in range(num_sets)]
