"""Discretized standard Lebesgue spaces, time grids and probe sets.

A continuous space is represented by a finite list of atoms with
positive weights (midpoint-rule cells); sigma-finite spaces enter as
finite truncations.  Everything downstream is then exact linear algebra
over atoms.  All values here are immutable after construction and safe
to share between workers.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

__all__ = [
    "MeasureSpaceError",
    "OffGridError",
    "WeightedAtomSpace",
    "TimeGrid",
    "Probe",
    "ProbeSet",
    "product_space",
    "restrict",
    "discretize_interval",
    "INTEGER",
    "REAL_GRID",
]

INTEGER = "INTEGER"
REAL_GRID = "REAL_GRID"


class MeasureSpaceError(ValueError):
    """Invalid atom space or grid construction."""


class OffGridError(ValueError):
    """A requested time does not lie on the grid."""


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class WeightedAtomSpace:
    """Finite atom list with positive weights (the nu-mass of each cell)."""

    atoms: tuple
    weights: np.ndarray
    description: str = ""

    def __post_init__(self):
        object.__setattr__(self, "atoms", tuple(self.atoms))
        w = _readonly(np.asarray(self.weights, dtype=float))
        object.__setattr__(self, "weights", w)
        if w.ndim != 1 or len(self.atoms) != w.size:
            raise MeasureSpaceError("one weight per atom required")
        if w.size and not np.all(w > 0):
            raise MeasureSpaceError("all weights must be positive")
        if len(set(self.atoms)) != len(self.atoms):
            raise MeasureSpaceError("atom identifiers must be unique")

    @property
    def size(self) -> int:
        return len(self.atoms)

    @property
    def total_mass(self) -> float:
        return float(np.sum(self.weights))

    def index_of(self, atom) -> int:
        try:
            return self.atoms.index(atom)
        except ValueError:
            raise MeasureSpaceError(f"atom {atom!r} not in space") from None


@dataclass(frozen=True)
class TimeGrid:
    """Symmetric time grid t = -half_window*step ... +half_window*step.

    INTEGER mode forces step 1 and models T = Z with counting measure;
    REAL_GRID models T = R restricted to a finite lattice window.
    """

    mode: str
    half_window: int
    step: float = 1.0

    def __post_init__(self):
        if self.mode not in (INTEGER, REAL_GRID):
            raise MeasureSpaceError(f"unknown grid mode {self.mode!r}")
        if self.mode == INTEGER and self.step != 1:
            raise MeasureSpaceError("INTEGER mode forces step = 1")
        if not self.step > 0:
            raise MeasureSpaceError("step must be positive")
        if int(self.half_window) < 1 or self.half_window != int(self.half_window):
            raise MeasureSpaceError("half_window must be a positive integer")
        object.__setattr__(self, "half_window", int(self.half_window))
        object.__setattr__(self, "step", float(self.step))
        ticks = np.arange(-self.half_window, self.half_window + 1)
        object.__setattr__(self, "_times", _readonly(ticks * self.step))

    @property
    def times(self) -> np.ndarray:
        return self._times

    @property
    def n_times(self) -> int:
        return 2 * self.half_window + 1

    @property
    def time_weight(self) -> float:
        """Mass lambda(dt) of one grid point: 1 on Z, step on R."""
        return 1.0 if self.mode == INTEGER else self.step

    def index_of(self, t: float) -> int:
        rel = t / self.step
        k = int(round(rel))
        if abs(rel - k) > 1e-9 or abs(k) > self.half_window:
            raise OffGridError(f"time {t} is not on the grid")
        return k + self.half_window

    def contains(self, t: float) -> bool:
        try:
            self.index_of(t)
            return True
        except OffGridError:
            return False


@dataclass(frozen=True)
class Probe:
    """One linear combination sum_k thetas[k] * X(times[k])."""

    thetas: np.ndarray
    times: np.ndarray

    def __post_init__(self):
        th = np.asarray(self.thetas)
        th = _readonly(th.astype(complex) if np.iscomplexobj(th) else th.astype(float))
        ts = _readonly(np.asarray(self.times, dtype=float))
        object.__setattr__(self, "thetas", th)
        object.__setattr__(self, "times", ts)
        if th.ndim != 1 or th.shape != ts.shape or th.size < 1:
            raise MeasureSpaceError("probe needs equal-length thetas/times, length >= 1")


@dataclass(frozen=True)
class ProbeSet:
    entries: tuple

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple(self.entries))
        if not all(isinstance(p, Probe) for p in self.entries):
            raise MeasureSpaceError("ProbeSet entries must be Probe instances")

    def __iter__(self):
        return iter(self.entries)

    def __len__(self):
        return len(self.entries)

    def validate_on(self, grid: TimeGrid) -> None:
        for p in self.entries:
            for t in p.times:
                grid.index_of(t)


def product_space(a: WeightedAtomSpace, b: WeightedAtomSpace) -> WeightedAtomSpace:
    """Product of two atom spaces: pair atoms, multiply weights."""
    if a.size == 0 or b.size == 0:
        raise MeasureSpaceError("product of an empty space is not defined")
    atoms = tuple((x, y) for x in a.atoms for y in b.atoms)
    weights = np.outer(a.weights, b.weights).ravel()
    return WeightedAtomSpace(atoms, weights, f"({a.description})x({b.description})")


def restrict(space: WeightedAtomSpace, mask: Sequence[bool]) -> WeightedAtomSpace:
    """Keep exactly the masked atoms.  An empty result is a legal zero component."""
    m = np.asarray(mask, dtype=bool)
    if m.shape != (space.size,):
        raise MeasureSpaceError("mask length must equal the atom count")
    atoms = tuple(a for a, keep in zip(space.atoms, m) if keep)
    return WeightedAtomSpace(atoms, space.weights[m], space.description)


def discretize_interval(lower: float, upper: float, cells: int) -> WeightedAtomSpace:
    """Midpoint-rule atomization of [lower, upper) into equal cells."""
    if cells < 1 or cells != int(cells):
        raise MeasureSpaceError("cell count must be a positive integer")
    if not upper > lower:
        raise MeasureSpaceError("need lower < upper")
    cells = int(cells)
    width = (upper - lower) / cells
    mids = lower + (np.arange(cells) + 0.5) * width
    return WeightedAtomSpace(
        tuple(float(v) for v in mids),
        np.full(cells, width),
        f"[{lower},{upper}) in {cells} cells",
    )
