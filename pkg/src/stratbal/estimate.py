"""Horvitz-Thompson totals and variance approximations for balanced samples."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .kernel import DEFAULT_TOL, least_squares_pinv
from .model import PopulationFrame, SampleResult


def ht_total(y, pi, a) -> float:
    """Horvitz-Thompson estimate ``sum(y_k a_k / pi_k)``."""
    y = np.asarray(y, dtype=float)
    pi = np.asarray(pi, dtype=float)
    sel = np.asarray(a) != 0
    if np.any(pi[sel] <= 0):
        raise ValueError("selected unit with zero inclusion probability")
    return float(np.sum(y[sel] / pi[sel]))


def _residual_variance(strata, A, y_over_pi, c, tol):
    """``sum c_k (y_k/pi_k - alpha' z_k)^2`` with ``z_k = (H A)_k``.

    ``alpha`` solves the c-weighted normal equations.  The stratum
    indicators are absorbed by c-weighted centring inside each stratum, so
    only the q x q Gram matrix of the centred ``A`` is pseudo-inverted; the
    residuals are the same as for the full ``(H A)`` regression.
    """
    H = int(strata.max()) + 1 if strata.size else 0
    w = np.bincount(strata, weights=c, minlength=H)
    safe = np.where(w > 0, w, 1.0)

    def centre(v):
        if v.ndim == 1:
            return v - (np.bincount(strata, weights=c * v, minlength=H) / safe)[strata]
        means = np.stack([np.bincount(strata, weights=c * v[:, j], minlength=H) for j in range(v.shape[1])], axis=1)
        return v - (means / safe[:, None])[strata]

    e = centre(y_over_pi)
    if A.shape[1]:
        Ac = centre(A)
        G = (Ac * c[:, None]).T @ Ac
        b = Ac.T @ (c * e)
        e = e - Ac @ least_squares_pinv(G, b, tol)
    return float(np.sum(c * e * e))


def variance_approx(frame: PopulationFrame, j: int, tol=DEFAULT_TOL) -> float:
    """Approximate variance of the HT total of interest variable ``j``.

    Residual variance of ``y/pi`` regressed on the rows of ``(H A)`` with
    weights ``c_k = pi_k (1 - pi_k) N / (N - (H + q))``.
    """
    N, H, q = frame.N, frame.H, frame.q
    if N <= H + q:
        raise ValueError(f"need N > H + q, got N={N}, H + q={H + q}")
    pi = frame.pi
    idx = np.flatnonzero((pi > 0) & (pi < 1))
    c = pi[idx] * (1 - pi[idx]) * N / (N - (H + q))
    y = frame.interest[idx, j]
    return _residual_variance(frame.strata_index[idx], frame.system.A[idx], y / pi[idx], c, tol)


def variance_estimate(frame: PopulationFrame, sample: SampleResult, j: int, tol=DEFAULT_TOL) -> float:
    """Sample estimate of :func:`variance_approx`.

    Same residual sum over the selected units, with
    ``c_k = (1 - pi_k) n / (n - (H + q))`` and ``n = sum(pi)``.
    """
    H, q = frame.H, frame.q
    n = float(frame.pi.sum())
    if n <= H + q:
        raise ValueError(f"need n > H + q, got n={n}, H + q={H + q}")
    pi = frame.pi
    idx = np.flatnonzero(np.asarray(sample.a) != 0)
    if np.any(pi[idx] <= 0):
        raise ValueError("selected unit with zero inclusion probability")
    c = (1 - pi[idx]) * n / (n - (H + q))
    y = frame.interest[idx, j]
    return _residual_variance(frame.strata_index[idx], frame.system.A[idx], y / pi[idx], c, tol)


def simulation_variance(totals, Y_true) -> float:
    """Mean squared deviation of replicate totals from the true total."""
    totals = np.asarray(totals, dtype=float)
    if totals.size == 0:
        raise ValueError("no replicates")
    return float(np.mean((totals - Y_true) ** 2))


@dataclass
class VarianceReport:
    """Per interest variable: ``v_sim``, mean ``var_hat`` and ``var_app``."""

    method: str
    m: int
    Y: np.ndarray
    v_sim: np.ndarray
    var_hat: np.ndarray
    var_app: np.ndarray
    extra: dict = field(default_factory=dict)

    def rows(self):
        for j in range(self.Y.size):
            yield {
                "method": self.method,
                "variable": f"y{j + 1}",
                "Y": float(self.Y[j]),
                "v_sim": float(self.v_sim[j]),
                "var_hat": float(self.var_hat[j]),
                "var_app": float(self.var_app[j]),
            }
