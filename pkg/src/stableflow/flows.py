"""Flows, cocycles and point classification on discretized spaces.

Four flow families are implemented:

* ``PermutationFlow`` -- the discrete realization of a nonsingular flow
  on an atom space: one bijection per unit time step plus the
  Radon-Nikodym weight ratio at each atom.
* ``CyclicFlowSpec`` -- the canonical cyclic form: (z, v) moves to
  (z, {v + t}_{q(z)}) on base x fiber.
* ``SpeedFlowSpec`` -- same with a per-base speed: v advances by s(z)*t.
* ``SpecialFlowSpec`` -- the flow built under a roof function r(y) over a
  base bijection V: climb vertically, jump to (Vy, 0) at the roof.

The module also verifies the group law and the cocycle law on sampled
points, evaluates the canonical cocycle formula for cyclic flows, and
canonicalizes a fixed-point-free permutation flow into cyclic form
(one representative per cycle, fiber length = cycle length).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .measure import INTEGER, REAL_GRID, TimeGrid, WeightedAtomSpace
from .modular import floor_mult, frac_mult

__all__ = [
    "FlowError",
    "FixedPointPresent",
    "NonperiodicPointPresent",
    "FIXED",
    "CYCLIC",
    "NONPERIODIC",
    "PermutationFlow",
    "CyclicFlowSpec",
    "SpeedFlowSpec",
    "SpecialFlowSpec",
    "Cocycle",
    "PointClassification",
    "LawReport",
    "cyclic_flow_apply",
    "speed_flow_apply",
    "special_flow_apply",
    "apply_flow",
    "check_flow_law",
    "check_cocycle_law",
    "cyclic_cocycle_eval",
    "classify_points",
    "canonicalize_cyclic_flow",
    "CanonicalCyclicFlow",
]

FIXED = "FIXED"
CYCLIC = "CYCLIC"
NONPERIODIC = "NONPERIODIC"


class FlowError(ValueError):
    """Malformed flow specification or point outside the flow's space."""


class FixedPointPresent(FlowError):
    """Canonicalization requires a flow without fixed points."""


class NonperiodicPointPresent(FlowError):
    """Canonicalization requires every point to be periodic."""


@dataclass(frozen=True)
class PermutationFlow:
    """Unit-time atom bijection phi_1 with per-atom weight ratios.

    ``mapping[i]`` is the index of phi_1(atom i); ``weight_ratio[i]`` is
    d(nu o phi_1)/d nu at atom i.  When the flow is realized on its own
    atom space the ratio is weight(phi_1(s)) / weight(s), which is the
    default if no ratio is given.
    """

    space: WeightedAtomSpace
    mapping: tuple
    weight_ratio: np.ndarray = None

    def __post_init__(self):
        m = tuple(int(i) for i in self.mapping)
        object.__setattr__(self, "mapping", m)
        n = self.space.size
        if sorted(m) != list(range(n)):
            raise FlowError("mapping must be a bijection on atom indices")
        if self.weight_ratio is None:
            w = self.space.weights
            ratio = w[list(m)] / w
        else:
            ratio = np.asarray(self.weight_ratio, dtype=float)
            if ratio.shape != (n,) or not np.all(ratio > 0):
                raise FlowError("weight_ratio must be positive, one per atom")
        ratio = np.array(ratio, copy=True)
        ratio.flags.writeable = False
        object.__setattr__(self, "weight_ratio", ratio)
        # orbit tables: cycles[k] lists a cycle, position[i] = (cycle id, slot)
        seen = [False] * n
        cycles = []
        pos = [None] * n
        for start in range(n):
            if seen[start]:
                continue
            orbit = []
            j = start
            while not seen[j]:
                seen[j] = True
                pos[j] = (len(cycles), len(orbit))
                orbit.append(j)
                j = m[j]
            cycles.append(tuple(orbit))
        object.__setattr__(self, "_cycles", tuple(cycles))
        object.__setattr__(self, "_pos", tuple(pos))

    def apply(self, atom_index: int, t: int) -> int:
        """phi_t at an atom, for any integer t (via orbit arithmetic)."""
        t = int(t)
        cyc_id, slot = self._pos[atom_index]
        orbit = self._cycles[cyc_id]
        return orbit[(slot + t) % len(orbit)]

    def apply_all(self, t: int) -> np.ndarray:
        """Index array of phi_t over every atom."""
        out = np.empty(self.space.size, dtype=np.int64)
        for orbit in self._cycles:
            L = len(orbit)
            arr = np.asarray(orbit)
            out[arr] = arr[(np.arange(L) + int(t)) % L]
        return out

    def ratio_along(self, atom_index: int, t: int) -> float:
        """d(nu o phi_t)/d nu at an atom: telescoped one-step ratios."""
        t = int(t)
        r = 1.0
        if t >= 0:
            j = atom_index
            for _ in range(t):
                r *= self.weight_ratio[j]
                j = self.apply(j, 1)
        else:
            j = atom_index
            for _ in range(-t):
                j = self.apply(j, -1)
                r /= self.weight_ratio[j]
        return r

    @property
    def cycles(self) -> tuple:
        return self._cycles


def _as_positive_array(values, n, name) -> np.ndarray:
    a = np.asarray(values, dtype=float)
    if a.shape != (n,):
        raise FlowError(f"{name} must provide one value per base atom")
    if not np.all(a > 0):
        raise FlowError(f"{name} must be positive")
    a = np.array(a, copy=True)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class CyclicFlowSpec:
    """Canonical cyclic flow (z, v) -> (z, {v + t}_{q(z)}) on base x fiber."""

    base: WeightedAtomSpace
    period_fn: np.ndarray
    fiber_cells: np.ndarray
    mode: str = REAL_GRID

    def __post_init__(self):
        n = self.base.size
        q = _as_positive_array(self.period_fn, n, "period_fn")
        object.__setattr__(self, "period_fn", q)
        cells = np.asarray(self.fiber_cells, dtype=np.int64)
        if cells.shape != (n,) or not np.all(cells >= 1):
            raise FlowError("fiber_cells must be positive integers, one per base atom")
        cells = np.array(cells, copy=True)
        cells.flags.writeable = False
        object.__setattr__(self, "fiber_cells", cells)
        if self.mode not in (INTEGER, REAL_GRID):
            raise FlowError(f"unknown mode {self.mode!r}")
        if self.mode == INTEGER:
            if not np.all((q == np.round(q)) & (q >= 2)):
                raise FlowError("INTEGER mode requires q(z) in {2, 3, ...}")
            if not np.all(cells == q.astype(np.int64)):
                raise FlowError("INTEGER mode fibers are the q(z) integer points")


@dataclass(frozen=True)
class SpeedFlowSpec:
    """Cyclic flow with per-base speed: (z, v) -> (z, {v + s(z) t}_{q(z)})."""

    base: WeightedAtomSpace
    speed_fn: np.ndarray
    period_fn: np.ndarray

    def __post_init__(self):
        n = self.base.size
        q = _as_positive_array(self.period_fn, n, "period_fn")
        object.__setattr__(self, "period_fn", q)
        s = np.asarray(self.speed_fn, dtype=float)
        if s.shape != (n,):
            raise FlowError("speed_fn must provide one value per base atom")
        if np.any(s == 0):
            raise FlowError("speed must be nonzero at every atom")
        s = np.array(s, copy=True)
        s.flags.writeable = False
        object.__setattr__(self, "speed_fn", s)


@dataclass(frozen=True)
class SpecialFlowSpec:
    """Flow built under a roof: climb u at unit speed, jump to (Vy, 0)."""

    base: WeightedAtomSpace
    base_map: tuple
    roof_fn: np.ndarray
    max_steps: int = 100_000

    def __post_init__(self):
        m = tuple(int(i) for i in self.base_map)
        object.__setattr__(self, "base_map", m)
        n = self.base.size
        if sorted(m) != list(range(n)):
            raise FlowError("base_map must be a bijection on base atom indices")
        r = _as_positive_array(self.roof_fn, n, "roof_fn")
        object.__setattr__(self, "roof_fn", r)
        inv = [0] * n
        for i, j in enumerate(m):
            inv[j] = i
        object.__setattr__(self, "_inverse_map", tuple(inv))


def _check_fiber_point(v, q):
    if not (0 <= v < q):
        raise FlowError(f"fiber coordinate {v} outside [0, {q})")


def cyclic_flow_apply(spec: CyclicFlowSpec, point, t):
    """Apply the canonical cyclic flow to (z_index, v)."""
    z, v = point
    q = spec.period_fn[z]
    if spec.mode == INTEGER:
        q = int(q)
        v = int(v)
    _check_fiber_point(v, q)
    return (z, frac_mult(v + t, q))


def speed_flow_apply(spec: SpeedFlowSpec, point, t):
    """Apply the speed flow to (z_index, v): v advances by s(z)*t mod q(z)."""
    z, v = point
    q = spec.period_fn[z]
    _check_fiber_point(v, q)
    return (z, frac_mult(v + spec.speed_fn[z] * t, q))


def special_flow_apply(spec: SpecialFlowSpec, point, t):
    """Apply the special flow to (y_index, u).

    Returns (V^n y, u + t - r_n(y)) for the unique n that lands the
    height inside [0, roof).  The search marches one roof at a time and
    aborts past ``spec.max_steps`` (a roof/window misconfiguration).
    """
    y, u = point
    if not (0 <= u < spec.roof_fn[y]):
        raise FlowError(f"height {u} outside [0, {spec.roof_fn[y]})")
    w = u + t
    steps = 0
    while w >= spec.roof_fn[y]:
        w -= spec.roof_fn[y]
        y = spec.base_map[y]
        steps += 1
        if steps > spec.max_steps:
            raise FlowError("special flow search bound exceeded")
    while w < 0:
        y = spec._inverse_map[y]
        w += spec.roof_fn[y]
        steps += 1
        if steps > spec.max_steps:
            raise FlowError("special flow search bound exceeded")
    return (y, w)


def apply_flow(flow, point, t):
    """Dispatch phi_t(point) over the four flow families."""
    if isinstance(flow, PermutationFlow):
        return flow.apply(point, t)
    if isinstance(flow, CyclicFlowSpec):
        return cyclic_flow_apply(flow, point, t)
    if isinstance(flow, SpeedFlowSpec):
        return speed_flow_apply(flow, point, t)
    if isinstance(flow, SpecialFlowSpec):
        return special_flow_apply(flow, point, t)
    raise FlowError(f"unsupported flow spec {type(flow).__name__}")


def _point_discrepancy(flow, p1, p2) -> float:
    if isinstance(flow, PermutationFlow):
        return 0.0 if p1 == p2 else 1.0
    (z1, v1), (z2, v2) = p1, p2
    if z1 != z2:
        return np.inf
    dv = abs(v1 - v2)
    if isinstance(flow, (CyclicFlowSpec, SpeedFlowSpec)):
        q = flow.period_fn[z1]
        dv = min(dv, q - dv)  # fiber is a circle
    return float(dv)


@dataclass(frozen=True)
class LawReport:
    """Outcome of a sampled group-law or cocycle-law verification."""

    max_discrepancy: float
    checked: int
    skipped: int
    worst: tuple

    def passed(self, tol: float = 1e-12) -> bool:
        return self.checked > 0 and self.max_discrepancy <= tol


def check_flow_law(flow, sample_times: Sequence, sample_points: Sequence) -> LawReport:
    """Verify phi_{t1+t2} = phi_{t1} o phi_{t2} over all sampled pairs."""
    worst = (None, None, None)
    max_d = 0.0
    checked = 0
    for t1 in sample_times:
        for t2 in sample_times:
            for p in sample_points:
                lhs = apply_flow(flow, p, t1 + t2)
                rhs = apply_flow(flow, apply_flow(flow, p, t2), t1)
                d = _point_discrepancy(flow, lhs, rhs)
                checked += 1
                if d > max_d:
                    max_d = d
                    worst = (t1, t2, p)
    return LawReport(max_d, checked, 0, worst)


@dataclass(frozen=True)
class Cocycle:
    """Unimodular multiplier a_t(s) tabulated on a time grid x atom space."""

    grid: TimeGrid
    values: np.ndarray  # (n_times, n_atoms)

    def __post_init__(self):
        v = np.asarray(self.values)
        v = np.array(v.astype(complex) if np.iscomplexobj(v) else v.astype(float))
        if v.ndim != 2 or v.shape[0] != self.grid.n_times:
            raise FlowError("cocycle values must be (n_times, n_atoms)")
        if not np.allclose(np.abs(v), 1.0, rtol=0, atol=1e-9):
            raise FlowError("cocycle values must be unimodular")
        unit = v[self.grid.index_of(0.0)]
        if not np.allclose(unit, 1.0, rtol=0, atol=1e-9):
            raise FlowError("cocycle must equal the group unit at t = 0")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @classmethod
    def from_callable(cls, grid: TimeGrid, n_atoms: int, fn: Callable) -> "Cocycle":
        """Tabulate fn(t, atom_index) over the grid."""
        vals = np.array([[fn(t, s) for s in range(n_atoms)] for t in grid.times])
        return cls(grid, vals)

    @classmethod
    def constant_one(cls, grid: TimeGrid, n_atoms: int) -> "Cocycle":
        return cls(grid, np.ones((grid.n_times, n_atoms)))

    @classmethod
    def from_step_multiplier(cls, flow: PermutationFlow, step_values, grid: TimeGrid) -> "Cocycle":
        """Generate the cocycle with a_1 = step_values along the flow orbit.

        a_n(s) = prod_{k=0}^{n-1} c(phi_k(s)) for n >= 0 and the inverse
        product backwards for n < 0; this satisfies the cocycle law for
        any unimodular one-step multiplier c.
        """
        if grid.mode != INTEGER:
            raise FlowError("step-multiplier cocycles require an INTEGER grid")
        c = np.asarray(step_values)
        n = flow.space.size
        if c.shape != (n,):
            raise FlowError("one step multiplier per atom required")
        vals = np.empty((grid.n_times, n), dtype=complex if np.iscomplexobj(c) else float)
        for i, t in enumerate(grid.times):
            t = int(round(t))
            for s in range(n):
                acc = 1.0
                if t >= 0:
                    j = s
                    for _ in range(t):
                        acc = acc * c[j]
                        j = flow.apply(j, 1)
                else:
                    j = s
                    for _ in range(-t):
                        j = flow.apply(j, -1)
                        acc = acc / c[j]
                vals[i, s] = acc
        return cls(grid, vals)

    def at(self, t, atom_index: int):
        return self.values[self.grid.index_of(t), atom_index]


def check_cocycle_law(cocycle, flow, sample_times: Sequence, sample_points: Sequence) -> LawReport:
    """Verify a_{t1+t2}(s) = a_{t1}(s) a_{t2}(phi_{t1}(s)) over sampled pairs.

    ``cocycle`` is either a tabulated Cocycle (pairs whose sum falls off
    the grid are skipped and counted) or a callable (t, point) -> value.
    """
    if isinstance(cocycle, Cocycle):
        def a(t, p):
            return cocycle.at(t, p)

        def defined(t):
            return cocycle.grid.contains(t)
    else:
        a = cocycle

        def defined(t):
            return True

    max_d = 0.0
    checked = 0
    skipped = 0
    worst = (None, None, None)
    for t1 in sample_times:
        for t2 in sample_times:
            if not defined(t1 + t2):
                skipped += 1
                continue
            for p in sample_points:
                lhs = a(t1 + t2, p)
                rhs = a(t1, p) * a(t2, apply_flow(flow, p, t1))
                d = abs(lhs - rhs)
                checked += 1
                if d > max_d:
                    max_d = float(d)
                    worst = (t1, t2, p)
    return LawReport(max_d, checked, skipped, worst)


def cyclic_cocycle_eval(a_tilde: Callable, a1, spec: CyclicFlowSpec, t, point):
    """Canonical cocycle of a cyclic flow.

    Evaluates a_t(z, v) = a_tilde(z, v)^(-1) * a1(z)^([v+t]_q) *
    a_tilde(z, {v+t}_q), which satisfies the cocycle law for the flow
    (z, v) -> (z, {v+t}_q) for any unimodular a_tilde, a1.
    """
    z, v = point
    q = spec.period_fn[z]
    if spec.mode == INTEGER:
        q = int(q)
        v = int(v)
    _check_fiber_point(v, q)
    n = floor_mult(v + t, q)
    v2 = frac_mult(v + t, q)
    return (1 / a_tilde(z, v)) * a1[z] ** n * a_tilde(z, v2)


@dataclass(frozen=True)
class PointClassification:
    """Per-atom labels FIXED / CYCLIC / NONPERIODIC with cycle periods."""

    labels: tuple
    periods: np.ndarray  # 0 where not cyclic

    def __post_init__(self):
        p = np.asarray(self.periods, dtype=np.int64)
        p = np.array(p, copy=True)
        p.flags.writeable = False
        object.__setattr__(self, "periods", p)
        object.__setattr__(self, "labels", tuple(self.labels))

    @property
    def fixed_mask(self) -> np.ndarray:
        return np.asarray([l == FIXED for l in self.labels])

    @property
    def cyclic_mask(self) -> np.ndarray:
        return np.asarray([l == CYCLIC for l in self.labels])

    @property
    def periodic_mask(self) -> np.ndarray:
        return self.fixed_mask | self.cyclic_mask


def classify_points(flow: PermutationFlow, max_order: int = None) -> PointClassification:
    """Label atoms as fixed, cyclic (with the smallest period) or nonperiodic.

    ``max_order`` bounds the return-time search; it defaults to the atom
    count, which is exhaustive for a true permutation.  Smaller bounds
    model window-truncated dynamics and can produce NONPERIODIC labels.
    """
    n = flow.space.size
    if max_order is None:
        max_order = n
    if max_order < 1:
        raise FlowError("max_order must be >= 1")
    labels = [None] * n
    periods = np.zeros(n, dtype=np.int64)
    for orbit in flow.cycles:
        L = len(orbit)
        if L == 1:
            labels[orbit[0]] = FIXED
        elif L <= max_order:
            for i in orbit:
                labels[i] = CYCLIC
                periods[i] = L
        else:
            for i in orbit:
                labels[i] = NONPERIODIC
    return PointClassification(tuple(labels), periods)


@dataclass(frozen=True)
class CanonicalCyclicFlow:
    """Cyclic canonical form of a permutation flow plus the isomorphism."""

    spec: CyclicFlowSpec
    orbits: tuple  # orbits[z][v] = atom index of Phi(z, v)

    def phi(self, z_index: int, v) -> int:
        orbit = self.orbits[z_index]
        return orbit[int(v) % len(orbit)]


def canonicalize_cyclic_flow(flow: PermutationFlow) -> CanonicalCyclicFlow:
    """Constructive discrete cyclic canonical form.

    Z has one representative atom per cycle (the minimum atom index, a
    deterministic choice), q(z) is the cycle length and Phi(z, v) =
    phi_v(z), so the conjugation phi_t(Phi(z, v)) = Phi(z, {v+t}_q)
    holds exactly.  Raises if the flow has fixed or nonperiodic points.
    """
    cls = classify_points(flow)
    if any(l == FIXED for l in cls.labels):
        raise FixedPointPresent("flow has fixed points; cyclic form undefined")
    if any(l == NONPERIODIC for l in cls.labels):
        raise NonperiodicPointPresent("flow has nonperiodic points")
    reps = []
    orbits = []
    for orbit in flow.cycles:
        rep = min(orbit)
        slot = orbit.index(rep)
        orbits.append(tuple(orbit[(slot + v) % len(orbit)] for v in range(len(orbit))))
        reps.append(rep)
    order = np.argsort(reps)
    reps = [reps[i] for i in order]
    orbits = tuple(orbits[i] for i in order)
    base = WeightedAtomSpace(
        tuple(flow.space.atoms[r] for r in reps),
        flow.space.weights[reps],
        "cycle representatives",
    )
    q = np.asarray([len(o) for o in orbits], dtype=float)
    spec = CyclicFlowSpec(base, q, q.astype(np.int64), mode=INTEGER)
    return CanonicalCyclicFlow(spec, orbits)
