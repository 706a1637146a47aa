"""Population frames, balancing systems and sample results."""

from __future__ import annotations

import csv
import re
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np


class FrameError(ValueError):
    """Invalid population frame or population file."""


def _encode_strata(labels):
    codes = np.empty(len(labels), dtype=np.int64)
    seen = {}
    for k, lab in enumerate(labels):
        codes[k] = seen.setdefault(lab, len(seen))
    return codes, list(seen)


@dataclass(frozen=True, eq=False)
class PopulationFrame:
    """Units with stratum labels, inclusion probabilities and variables.

    Stratum labels may be any hashable; ``strata_index`` holds the dense
    0-based re-index in first-appearance order.
    """

    unit_ids: Sequence
    strata: Sequence
    pi: np.ndarray
    aux: np.ndarray
    interest: np.ndarray

    def __post_init__(self):
        pi = np.asarray(self.pi, dtype=float).reshape(-1)
        n = pi.size
        aux = np.asarray(self.aux, dtype=float)
        interest = np.asarray(self.interest, dtype=float)
        if aux.size == 0:
            aux = np.zeros((n, 0))
        if interest.size == 0:
            interest = np.zeros((n, 0))
        if aux.ndim == 1:
            aux = aux[:, None]
        if interest.ndim == 1:
            interest = interest[:, None]
        if n == 0:
            raise FrameError("population is empty")
        if len(self.strata) != n or len(self.unit_ids) != n:
            raise FrameError("unit_ids, strata and pi must have the same length")
        if aux.shape[0] != n or interest.shape[0] != n:
            raise FrameError("aux and interest must have one row per unit")
        if not np.all(np.isfinite(pi)):
            raise FrameError("pi contains non-finite values")
        bad = np.flatnonzero((pi < 0) | (pi > 1))
        if bad.size:
            raise FrameError(f"pi outside [0, 1] for unit {bad[0]} (pi={pi[bad[0]]})")
        if not (np.all(np.isfinite(aux)) and np.all(np.isfinite(interest))):
            raise FrameError("aux/interest contain non-finite values")
        for arr in (pi, aux, interest):
            arr.setflags(write=False)
        object.__setattr__(self, "pi", pi)
        object.__setattr__(self, "aux", aux)
        object.__setattr__(self, "interest", interest)
        object.__setattr__(self, "unit_ids", tuple(self.unit_ids))
        object.__setattr__(self, "strata", tuple(self.strata))

    @property
    def N(self) -> int:
        return self.pi.size

    @property
    def q(self) -> int:
        return self.aux.shape[1]

    @property
    def p(self) -> int:
        return self.interest.shape[1]

    @cached_property
    def _strata_encoding(self):
        codes, labels = _encode_strata(self.strata)
        codes.setflags(write=False)
        return codes, labels

    @property
    def strata_index(self) -> np.ndarray:
        return self._strata_encoding[0]

    @property
    def stratum_labels(self) -> list:
        return self._strata_encoding[1]

    @property
    def H(self) -> int:
        return len(self.stratum_labels)

    @cached_property
    def system(self) -> BalanceSystem:
        return build_system(self)


@dataclass(frozen=True, eq=False)
class BalanceSystem:
    """Constraint matrices ``(Hd A)`` of a frame plus its starting point.

    ``A[k] = x_k / pi_k`` (zero row when ``pi_k == 0``), ``Hd`` is the
    N x H disjunctive stratum matrix, ``active`` lists units with
    ``0 < pi_k < 1`` in canonical order (stratum index, then file order).
    """

    A: np.ndarray
    Hd: np.ndarray
    strata: np.ndarray
    active: np.ndarray
    pi_t: np.ndarray
    pi: np.ndarray

    @property
    def N(self) -> int:
        return self.A.shape[0]

    @property
    def q(self) -> int:
        return self.A.shape[1]

    @property
    def H(self) -> int:
        return self.Hd.shape[1]

    @cached_property
    def Z(self) -> np.ndarray:
        """The full constraint matrix ``(Hd A)``, N x (H + q)."""
        Z = np.hstack([self.Hd, self.A])
        Z.setflags(write=False)
        return Z

    @cached_property
    def order(self) -> np.ndarray:
        """All units sorted by (stratum index, file order)."""
        order = np.argsort(self.strata, kind="stable")
        order.setflags(write=False)
        return order


def build_system(frame: PopulationFrame) -> BalanceSystem:
    pi = frame.pi
    A = np.zeros_like(frame.aux)
    pos = pi > 0
    A[pos] = frame.aux[pos] / pi[pos, None]
    strata = frame.strata_index
    Hd = np.zeros((frame.N, frame.H))
    Hd[np.arange(frame.N), strata] = 1.0
    order = np.argsort(strata, kind="stable")
    active = order[(pi[order] > 0) & (pi[order] < 1)]
    for arr in (A, Hd, active):
        arr.setflags(write=False)
    return BalanceSystem(A=A, Hd=Hd, strata=strata, active=active, pi_t=pi.copy(), pi=pi)


def balance_residual(system: BalanceSystem, a) -> np.ndarray:
    """``(Hd A).T a - (Hd A).T pi`` against the original probabilities."""
    a = np.asarray(a, dtype=float)
    diff = a - system.pi
    strata_part = np.bincount(system.strata, weights=diff, minlength=system.H)
    return np.concatenate([strata_part, system.A.T @ diff])


@dataclass
class SampleResult:
    """Final 0/1 sample and its balancing diagnostics."""

    a: np.ndarray
    balance_residual: np.ndarray
    strata_counts: np.ndarray
    dropped_constraints: list = field(default_factory=list)
    n_landing: int = 0  # units still fractional when landing started

    @classmethod
    def from_indicator(cls, system: BalanceSystem, a, dropped=(), n_landing=0):
        a = np.asarray(np.rint(a), dtype=np.int8)
        return cls(
            a=a,
            balance_residual=balance_residual(system, a),
            strata_counts=np.bincount(system.strata, weights=a, minlength=system.H).astype(np.int64),
            dropped_constraints=list(dropped),
            n_landing=n_landing,
        )

    @property
    def sample(self) -> np.ndarray:
        """Indices of selected units."""
        return np.flatnonzero(self.a)


DEFAULT_SCHEMA = {"stratum": "stratum", "pi": "pi", "id": "id"}
_AUX = re.compile(r"^x(\d+)$")
_INTEREST = re.compile(r"^y(\d+)$")


def _numbered(header, pattern):
    found = [(int(m.group(1)), name) for name in header if (m := pattern.match(name))]
    return [name for _, name in sorted(found)]


def load_population(path, schema: Mapping | None = None) -> PopulationFrame:
    """Read a population CSV.

    ``schema`` may override the column names ``stratum``, ``pi`` and ``id``
    and give explicit ``aux`` / ``interest`` column lists; by default aux
    columns are ``x1..xq`` and interest columns ``y1..yp``.  Errors name the
    offending data row (1-based, header excluded).
    """
    schema = {**DEFAULT_SCHEMA, **(schema or {})}
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header:
            raise FrameError(f"{path}: empty file")
        header = [h.strip() for h in header]
        rows = list(reader)
    rows = [r for r in rows if any(cell.strip() for cell in r)]
    if not rows:
        raise FrameError(f"{path}: no data rows")

    aux_cols = list(schema.get("aux") or _numbered(header, _AUX))
    int_cols = list(schema.get("interest") or _numbered(header, _INTEREST))
    for name in [schema["stratum"], schema["pi"], *aux_cols, *int_cols]:
        if name not in header:
            raise FrameError(f"{path}: missing column {name!r}")
    col = {name: i for i, name in enumerate(header)}
    id_col = col.get(schema["id"])

    def number(row, rownum, name):
        try:
            return float(row[col[name]])
        except (ValueError, IndexError):
            cell = row[col[name]] if col[name] < len(row) else ""
            raise FrameError(f"{path}: row {rownum}: non-numeric value {cell!r} in column {name!r}") from None

    ids, strata, pi = [], [], []
    aux = np.zeros((len(rows), len(aux_cols)))
    interest = np.zeros((len(rows), len(int_cols)))
    for i, row in enumerate(rows):
        rownum = i + 1
        if len(row) < len(header):
            raise FrameError(f"{path}: row {rownum}: expected {len(header)} fields, got {len(row)}")
        p = number(row, rownum, schema["pi"])
        if not 0 <= p <= 1:
            raise FrameError(f"{path}: row {rownum}: pi={p} outside [0, 1]")
        pi.append(p)
        strata.append(row[col[schema["stratum"]]].strip())
        ids.append(row[id_col].strip() if id_col is not None else str(rownum))
        for j, name in enumerate(aux_cols):
            aux[i, j] = number(row, rownum, name)
        for j, name in enumerate(int_cols):
            interest[i, j] = number(row, rownum, name)
    return PopulationFrame(unit_ids=ids, strata=strata, pi=np.array(pi), aux=aux, interest=interest)


def write_population(frame: PopulationFrame, path) -> None:
    header = ["id", "stratum", "pi"] + [f"x{j + 1}" for j in range(frame.q)] + [f"y{j + 1}" for j in range(frame.p)]
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for k in range(frame.N):
            w.writerow(
                [frame.unit_ids[k], frame.strata[k], repr(float(frame.pi[k]))]
                + [repr(float(v)) for v in frame.aux[k]]
                + [repr(float(v)) for v in frame.interest[k]]
            )
