"""The cube method: flight steps, fast flight phase and landing by suppression."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from .kernel import DEFAULT_TOL, null_vector
from .model import BalanceSystem, PopulationFrame, SampleResult

SNAP_TOL = 1e-9
# Components of u this small relative to max|u| do not bound the step.
_U_EPS = 1e-12


class FlightError(RuntimeError):
    """Inconsistent state detected during a flight step."""


@dataclass
class FlightState:
    """Probability vector of a flight in progress.

    ``pi_t`` covers the whole population; entries exactly 0 or 1 are
    resolved units.
    """

    pi_t: np.ndarray
    step: int = 0

    @property
    def active(self) -> np.ndarray:
        return np.flatnonzero((self.pi_t > 0) & (self.pi_t < 1))

    @property
    def resolved(self) -> dict:
        done = np.flatnonzero((self.pi_t == 0) | (self.pi_t == 1))
        return {int(k): int(self.pi_t[k]) for k in done}


@njit(cache=True)
def _step_lengths(pi, u):
    umax = np.max(np.abs(u)) if u.size else 0.0
    l1 = np.inf
    l2 = np.inf
    for k in range(u.size):
        uk = u[k]
        if abs(uk) <= _U_EPS * umax:
            continue
        if uk > 0:
            l1 = min(l1, (1.0 - pi[k]) / uk)
            l2 = min(l2, pi[k] / uk)
        else:
            l1 = min(l1, pi[k] / -uk)
            l2 = min(l2, (1.0 - pi[k]) / -uk)
    return l1, l2


@njit(cache=True)
def _move(p, u, draw, snap):
    # In-place move of p along u; False if the step lengths are degenerate.
    l1, l2 = _step_lengths(p, u)
    if not (l1 > 0 and l2 > 0 and np.isfinite(l1) and np.isfinite(l2)):
        return False
    lam = l1 if draw < l2 / (l1 + l2) else -l2
    for i in range(p.size):
        v = p[i] + lam * u[i]
        if v < snap:
            v = 0.0
        elif v > 1.0 - snap:
            v = 1.0
        p[i] = v
    return True


def step_lengths(pi, u):
    """Largest ``l1, l2 > 0`` keeping ``pi + l1*u`` and ``pi - l2*u`` in the unit cube."""
    u = np.asarray(u, dtype=float)
    if not u.size or not np.any(u):
        raise ValueError("direction u is zero")
    return _step_lengths(np.asarray(pi, dtype=float), u)


def flight_step(pi_active, u, rng, snap=SNAP_TOL):
    """One random move of the flight phase along ``u``.

    Goes to ``pi + l1*u`` with probability ``l2/(l1+l2)`` and to
    ``pi - l2*u`` otherwise, so the expected position is ``pi``.  Entries
    within ``snap`` of 0 or 1 are set exactly.
    """
    p = np.array(pi_active, dtype=float)
    u = np.asarray(u, dtype=float)
    if not u.size or not np.any(u):
        raise ValueError("direction u is zero")
    if not _move(p, u, rng.random(), snap):
        raise FlightError(f"degenerate step lengths {_step_lengths(p, u)}")
    return p


@njit(cache=True)
def _block_t(rows, labels, X, cmark, colidx, stamp):
    # Transposed constraint block: one indicator row per distinct stratum of
    # ``rows`` (first-appearance order), then the columns of X.
    nr = rows.size
    hb = 0
    for i in range(nr):
        lab = labels[rows[i]]
        if lab >= 0 and cmark[lab] != stamp:
            cmark[lab] = stamp
            colidx[lab] = hb
            hb += 1
    q = X.shape[1]
    M = np.zeros((hb + q, nr))
    for i in range(nr):
        k = rows[i]
        lab = labels[k]
        if lab >= 0:
            M[colidx[lab], i] = 1.0
        for j in range(q):
            M[hb + j, i] = X[k, j]
    return M


@njit(cache=True)
def _flight_loop(pi, queue, labels, X, draws, tol, snap, exhaustive, n_labels):
    q = X.shape[1]
    n = queue.size
    queue = queue.copy()
    cand = np.empty(n, np.int64)
    counts = np.zeros(n_labels, np.int64)
    mark = np.full(n_labels, -1, np.int64)
    cmark = np.full(n_labels, -1, np.int64)
    colidx = np.zeros(n_labels, np.int64)
    stamp = 0
    cstamp = 0
    steps = 0
    while True:
        m = 0
        for i in range(n):
            k = queue[i]
            if pi[k] > 0.0 and pi[k] < 1.0:
                queue[m] = k
                m += 1
        n = m
        if n == 0:
            break

        # a unit alone in its constrained stratum cannot move
        for i in range(n):
            lab = labels[queue[i]]
            if lab >= 0:
                counts[lab] += 1
        nc = 0
        for i in range(n):
            k = queue[i]
            lab = labels[k]
            if lab < 0 or counts[lab] > 1:
                cand[nc] = k
                nc += 1
        for i in range(n):
            lab = labels[queue[i]]
            if lab >= 0:
                counts[lab] = 0
        if nc == 0:
            break

        # leading block with one more row than columns
        stamp += 1
        qt = q
        ht = 0
        scanned = 0
        ok = False
        while qt <= nc:
            while scanned < qt:
                lab = labels[cand[scanned]]
                if lab >= 0 and mark[lab] != stamp:
                    mark[lab] = stamp
                    ht += 1
                scanned += 1
            nxt = q + ht + 1
            if nxt <= qt:
                ok = True
                break
            qt = nxt

        found = False
        nrows = 0
        u = np.zeros(0)
        if ok:
            nrows = qt
            cstamp += 1
            u, found = null_vector(_block_t(cand[:nrows], labels, X, cmark, colidx, cstamp), tol)
            if not found and nrows < nc:
                nrows += 1
                cstamp += 1
                u, found = null_vector(_block_t(cand[:nrows], labels, X, cmark, colidx, cstamp), tol)
        if not found and exhaustive and nrows < nc:
            nrows = nc
            cstamp += 1
            u, found = null_vector(_block_t(cand[:nrows], labels, X, cmark, colidx, cstamp), tol)
        if not found:
            break

        if steps >= draws.size:
            raise RuntimeError("flight did not resolve a unit at every step")
        rows = cand[:nrows]
        p = pi[rows]
        if not _move(p, u, draws[steps], snap):
            raise RuntimeError("degenerate step lengths in flight phase")
        pi[rows] = p
        steps += 1
    return steps


def fast_flight(pi, units, labels, X, rng, tol=DEFAULT_TOL, exhaustive=False, snap=SNAP_TOL):
    """Flight phase on ``units`` under stratum and column constraints.

    ``pi`` (full population vector) is updated in place and the number of
    steps taken is returned.  Constraints are one indicator column per
    stratum code in ``labels`` (codes < 0 carry none) plus the columns of
    ``X``.  Each step works on the leading block of candidate rows that has
    one more row than columns; if its kernel is empty one more row is tried.
    A unit that is the only active one of its constrained stratum cannot
    move and is left out of the block.  With ``exhaustive`` the whole
    candidate matrix is tried once the leading block fails, so the phase
    ends only when the constraint kernel is empty.
    """
    units = np.asarray(units, dtype=np.int64)
    if units.size == 0:
        return 0
    labels = np.asarray(labels, dtype=np.int64)
    X = np.ascontiguousarray(X, dtype=float)
    draws = rng.random(units.size)
    n_labels = int(labels.max()) + 1 if labels.size else 1
    try:
        return _flight_loop(pi, units, labels, X, draws, tol, snap, exhaustive, max(n_labels, 1))
    except RuntimeError as exc:
        raise FlightError(str(exc)) from None


def flight_phase(system: BalanceSystem, rng, tol=DEFAULT_TOL) -> FlightState:
    """Fast flight phase on the balancing matrix ``A`` alone."""
    pi = system.pi_t.copy()
    labels = np.full(system.N, -1, dtype=np.int64)
    steps = fast_flight(pi, system.active, labels, system.A, rng, tol, exhaustive=True)
    return FlightState(pi_t=pi, step=steps)


def default_drop_order(system: BalanceSystem, strata=True) -> list:
    """Constraint indices of ``(Hd A)``; the last entry is relaxed first.

    Auxiliary columns are relaxed before any stratum column.
    """
    aux = list(range(system.H, system.H + system.q))
    return (list(range(system.H)) if strata else []) + aux


def landing_suppression(state: FlightState, system: BalanceSystem, drop_order=None, rng=None, tol=DEFAULT_TOL) -> SampleResult:
    """Resolve the units left after a flight by relaxing constraints.

    Constraints listed in ``drop_order`` (indices into the columns of
    ``(Hd A)``) are relaxed from the end of the list, one at a time, with a
    new flight after each relaxation.  Relaxing a constraint that no
    remaining unit touches changes nothing and is not recorded.
    """
    if rng is None:
        rng = np.random.default_rng()
    H = system.H
    retained = list(default_drop_order(system) if drop_order is None else drop_order)
    pi = state.pi_t.copy()
    order = system.order
    remaining = order[(pi[order] > 0) & (pi[order] < 1)]
    dropped = []
    n_landing = int(remaining.size)
    if remaining.size == 0:
        return SampleResult.from_indicator(system, pi, dropped)

    keep = np.zeros(H, dtype=bool)
    keep[[j for j in retained if j < H]] = True
    labels = np.where(keep[system.strata], system.strata, -1)
    aux = [j - H for j in retained if j >= H]
    X = system.A[:, aux]
    while True:
        fast_flight(pi, remaining, labels, X, rng, tol, exhaustive=True)
        remaining = remaining[(pi[remaining] > 0) & (pi[remaining] < 1)]
        if remaining.size == 0:
            break
        if not retained:
            raise FlightError("units left unresolved with no constraints")
        while retained:
            j = retained.pop()
            if j < H:
                members = remaining[system.strata[remaining] == j]
                if members.size:
                    labels[members] = -1
                    dropped.append(j)
                    break
            elif np.any(system.A[remaining, j - H] != 0):
                aux.remove(j - H)
                X = system.A[:, aux]
                dropped.append(j)
                break
    return SampleResult.from_indicator(system, pi, dropped, n_landing)


def cube_method(frame: PopulationFrame, rng, drop_order=None, tol=DEFAULT_TOL) -> SampleResult:
    """Unstratified cube method balancing on the auxiliary variables only."""
    system = frame.system
    state = flight_phase(system, rng, tol)
    if drop_order is None:
        drop_order = default_drop_order(system, strata=False)
    return landing_suppression(state, system, drop_order, rng, tol)
