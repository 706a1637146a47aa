"""Monte-Carlo variance study and timing benchmark."""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .cube import cube_method
from .estimate import VarianceReport, ht_total, simulation_variance, variance_approx, variance_estimate
from .model import PopulationFrame
from .stratified import METHODS as STRATIFIED
from .synth import GeneratorSpec, generate, regroup

METHODS = {**STRATIFIED, "cube": cube_method}


def replicate_rng(seed: int, index: int) -> np.random.Generator:
    """Generator for replicate ``index``; depends only on ``(seed, index)``."""
    return np.random.default_rng(np.random.SeedSequence([seed, index]))


def run_method(name, frame, rng, drop_order=None, tol=None):
    kwargs = {}
    if drop_order is not None:
        kwargs["drop_order"] = drop_order
    if tol is not None:
        kwargs["tol"] = tol
    return METHODS[name](frame, rng, **kwargs)


@dataclass
class SimulationResult:
    report: VarianceReport
    inclusion: np.ndarray  # empirical selection frequency per unit

    def inclusion_z(self, pi) -> np.ndarray:
        """Standardised deviation of empirical from nominal inclusion probabilities."""
        m = self.report.m
        sd = np.sqrt(pi * (1 - pi) / m)
        z = np.zeros_like(pi)
        ok = sd > 0
        z[ok] = (self.inclusion[ok] - pi[ok]) / sd[ok]
        z[~ok] = np.where(self.inclusion[~ok] == pi[~ok], 0.0, np.inf)
        return z


def simulate(frame: PopulationFrame, method: str, m: int, seed: int, drop_order=None, tol=None, variance=True):
    """Draw ``m`` samples and collect the variance comparison for each interest variable."""
    if m < 1:
        raise ValueError("m must be at least 1")
    p = frame.p
    totals = np.zeros((m, p))
    var_hat = np.zeros((m, p))
    counts = np.zeros(frame.N)
    for r in range(m):
        res = run_method(method, frame, replicate_rng(seed, r), drop_order, tol)
        counts += res.a
        for j in range(p):
            totals[r, j] = ht_total(frame.interest[:, j], frame.pi, res.a)
            if variance:
                var_hat[r, j] = variance_estimate(frame, res, j)
    Y = frame.interest.sum(axis=0)
    report = VarianceReport(
        method=method,
        m=m,
        Y=Y,
        v_sim=np.array([simulation_variance(totals[:, j], Y[j]) for j in range(p)]),
        var_hat=var_hat.mean(axis=0) if variance else np.full(p, np.nan),
        var_app=np.array([variance_approx(frame, j) for j in range(p)]) if variance else np.full(p, np.nan),
    )
    return SimulationResult(report=report, inclusion=counts / m)


def time_method(frame, method, runs, seed, drop_order=None, tol=None):
    """Wall-clock seconds of ``runs`` sampling calls, after one discarded warm-up."""
    run_method(method, frame, replicate_rng(seed, runs), drop_order, tol)
    times = np.empty(runs)
    for r in range(runs):
        rng = replicate_rng(seed, r)
        t0 = time.perf_counter()
        run_method(method, frame, rng, drop_order, tol)
        times[r] = time.perf_counter() - t0
    return times


def bench_configs(spec: GeneratorSpec, seed: int, coarse_H: int = 5, nh_fine=(2.0, 1.4)):
    """The four benchmark populations: coarse and fine strata, integer and non-integer n_h.

    One population is generated with the fine stratification; the coarse
    one merges consecutive fine strata into ``coarse_H`` groups.
    """
    base = generate(spec, seed)
    group = base.N // coarse_H
    nh_int = float(min(80, max(1, int(0.2 * group))))
    configs = []
    for nh in (nh_int, nh_int + 0.4):
        if nh < group:
            configs.append((f"H={coarse_H}", nh, regroup(base, coarse_H, nh)))
    for nh in nh_fine:
        pi = np.full(base.N, nh / spec.units_per_stratum)
        configs.append(
            (f"H={spec.H}", nh, PopulationFrame(base.unit_ids, base.strata, pi, base.aux, base.interest))
        )
    return configs


def bench(configs, methods, runs, seed, drop_order=None, tol=None):
    rows = []
    for label, nh, frame in configs:
        for method in methods:
            t = time_method(frame, method, runs, seed, drop_order, tol)
            rows.append(
                {
                    "config": label,
                    "nh": nh,
                    "method": method,
                    "runs": runs,
                    "mean_s": float(t.mean()),
                    "sd_s": float(t.std(ddof=1)) if runs > 1 else 0.0,
                }
            )
    return rows
