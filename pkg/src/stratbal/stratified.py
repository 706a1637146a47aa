"""Stratified balanced sampling.

``proposed_method`` keeps the flight phase cheap in highly stratified
populations by working, at every step, on the leading block of active units
whose constraint matrix ``(H A)`` has exactly one more row than columns.
``chauvet_method`` and ``hasler_tille_method`` are the two reference
procedures it is compared against.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cube import FlightState, fast_flight, flight_step, landing_suppression
from .kernel import DEFAULT_TOL, kernel_vector
from .model import PopulationFrame, SampleResult


@dataclass(frozen=True)
class StratifiedPlan:
    """Submatrix extent found for one step of the stratified flight."""

    q: int
    q_t: int
    H_t: int

    @property
    def shape(self):
        return self.q_t, self.q + self.H_t


def find_submatrix_extent(h_active, q):
    """Number of leading rows of ``(H A)`` giving one more row than columns.

    Iterates ``q_t <- q + H_t + 1`` where ``H_t`` counts the distinct strata
    among the first ``q_t`` labels, starting from ``q_t = q``, until the
    value stops growing.  Returns ``(q_t, H_t)``, or ``None`` if ``q_t``
    would exceed the number of labels.

    >>> find_submatrix_extent([1, 1, 2, 2, 3, 3, 3, 4, 4], 2)
    (6, 3)
    """
    h = list(h_active)
    n = len(h)
    qt = q
    while True:
        if qt > n:
            return None
        Ht = len(set(h[:qt]))
        nxt = q + Ht + 1
        if nxt <= qt:
            return qt, Ht
        qt = nxt


def _stratum_flights(frame, pi, rng, tol):
    # Flight inside each stratum on (1 A_h), which keeps the stratum total.
    system = frame.system
    order = system.order
    bounds = np.flatnonzero(np.diff(system.strata[order])) + 1
    steps = 0
    for units in np.split(order, bounds):
        if units.size <= system.q:
            continue
        units = units[(pi[units] > 0) & (pi[units] < 1)]
        if units.size > 1:
            steps += fast_flight(pi, units, system.strata, system.A, rng, tol, exhaustive=True)
    return steps


def _active(order, pi):
    return order[(pi[order] > 0) & (pi[order] < 1)]


def proposed_method(frame: PopulationFrame, rng, drop_order=None, tol=DEFAULT_TOL) -> SampleResult:
    """Stratified balanced sample with submatrix-extent flights.

    I.   flight inside each stratum;
    II.  flight over all remaining units, each step on the leading block
         sized by :func:`find_submatrix_extent`, until no block can be
         formed or its kernel is empty;
    III. landing by suppression on the full ``(H A)`` constraints.
    """
    system = frame.system
    pi = system.pi_t.copy()
    steps = _stratum_flights(frame, pi, rng, tol)
    steps += fast_flight(pi, _active(system.order, pi), system.strata, system.A, rng, tol)
    return landing_suppression(FlightState(pi, steps), system, drop_order, rng, tol)


def chauvet_method(frame: PopulationFrame, rng, drop_order=None, tol=DEFAULT_TOL) -> SampleResult:
    """Flight inside each stratum, then one flight on the whole ``(H A)``.

    The population-wide flight uses the fast cube submatrix: the first
    ``H + q + 1`` active rows with every one of the ``H + q`` columns.
    """
    system = frame.system
    pi = system.pi_t.copy()
    steps = _stratum_flights(frame, pi, rng, tol)
    Z = system.Z
    width = Z.shape[1]
    queue = _active(system.order, pi)
    while queue.size:
        rows = queue[: width + 1]
        u = kernel_vector(Z[rows], tol)
        if u is None:
            break
        pi[rows] = flight_step(pi[rows], u, rng)
        steps += 1
        queue = queue[(pi[queue] > 0) & (pi[queue] < 1)]
    return landing_suppression(FlightState(pi, steps), system, drop_order, rng, tol)


def hasler_tille_method(frame: PopulationFrame, rng, drop_order=None, tol=DEFAULT_TOL) -> SampleResult:
    """Flight inside each stratum, then flights on a growing union of strata.

    Strata are merged one at a time.  After each merge a fast flight runs
    on the union, constrained by the auxiliary columns and by one indicator
    column for every stratum of the union that still has an active unit;
    strata whose units are all resolved leave the union.
    """
    system = frame.system
    pi = system.pi_t.copy()
    steps = _stratum_flights(frame, pi, rng, tol)
    order = system.order
    strata = system.strata
    bounds = np.flatnonzero(np.diff(strata[order])) + 1
    union = np.empty(0, dtype=order.dtype)
    for units in np.split(order, bounds):
        union = np.concatenate([union, units])
        while True:
            union = union[(pi[union] > 0) & (pi[union] < 1)]
            if union.size == 0:
                break
            present = np.unique(strata[union])
            width = present.size + system.q
            rows = union[: width + 1]
            D = (strata[rows][:, None] == present[None, :]).astype(float)
            u = kernel_vector(np.hstack([D, system.A[rows]]), tol)
            if u is None:
                break
            pi[rows] = flight_step(pi[rows], u, rng)
            steps += 1
    return landing_suppression(FlightState(pi, steps), system, drop_order, rng, tol)


METHODS = {
    "proposed": proposed_method,
    "chauvet": chauvet_method,
    "hasler": hasler_tille_method,
}
