"""Synthetic stratified populations shaped like small-area establishment data."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import PopulationFrame


@dataclass(frozen=True)
class GeneratorSpec:
    """Layout and distributions of a synthetic population.

    Aux variables are negative-binomial counts whose mean varies by stratum
    (lognormal stratum effect), so strata are internally homogeneous.  Each
    interest variable ``y_j`` is built from ``x_j`` (cycling when ``p > q``)
    with correlation ``rho`` plus Gaussian noise.
    """

    H: int = 675
    units_per_stratum: int = 3
    q: int = 3
    p: int = 3
    nh: float = 2.0
    rho: float = 0.7
    aux_mean: float = 8.0
    aux_dispersion: float = 1.5
    stratum_effect_sd: float = 0.6

    def __post_init__(self):
        if self.H < 1 or self.units_per_stratum < 1:
            raise ValueError("H and units_per_stratum must be positive")
        if self.q < 0 or self.p < 0:
            raise ValueError("q and p must be non-negative")
        if not 0 <= self.rho <= 1:
            raise ValueError("rho must lie in [0, 1]")
        if not 0 < self.nh <= self.units_per_stratum:
            raise ValueError("nh must lie in (0, units_per_stratum]")

    @property
    def N(self) -> int:
        return self.H * self.units_per_stratum


def generate(spec: GeneratorSpec, seed) -> PopulationFrame:
    rng = np.random.default_rng(seed)
    H, m = spec.H, spec.units_per_stratum
    strata = np.repeat(np.arange(H), m)
    effect = rng.lognormal(0.0, spec.stratum_effect_sd, size=H)[strata]
    mean = spec.aux_mean * effect[:, None]
    r = spec.aux_dispersion
    aux = rng.negative_binomial(r, r / (r + mean), size=(spec.N, spec.q)).astype(float)

    interest = np.zeros((spec.N, spec.p))
    for j in range(spec.p):
        noise = rng.standard_normal(spec.N)
        if spec.q:
            x = aux[:, j % spec.q]
            mu, sd = x.mean(), x.std()
            z = (x - mu) / sd if sd > 0 else np.zeros(spec.N)
        else:
            mu, sd, z = spec.aux_mean, spec.aux_mean, np.zeros(spec.N)
        interest[:, j] = mu + sd * (spec.rho * z + np.sqrt(1 - spec.rho**2) * noise)

    width = len(str(H))
    labels = [f"h{s + 1:0{width}d}" for s in strata]
    ids = [f"u{k + 1}" for k in range(spec.N)]
    pi = np.full(spec.N, spec.nh / m)
    return PopulationFrame(unit_ids=ids, strata=labels, pi=pi, aux=aux, interest=interest)


def regroup(frame: PopulationFrame, groups: int, nh: float) -> PopulationFrame:
    """Coarser stratification: merge consecutive strata into ``groups`` blocks.

    Inclusion probabilities are reset to ``nh / N_g`` within each block.
    """
    codes = frame.strata_index
    block = codes * groups // frame.H
    sizes = np.bincount(block)
    if np.any(nh > sizes):
        raise ValueError("nh larger than a regrouped stratum")
    pi = nh / sizes[block]
    labels = [f"g{b + 1}" for b in block]
    return PopulationFrame(unit_ids=frame.unit_ids, strata=labels, pi=pi, aux=frame.aux, interest=frame.interest)
