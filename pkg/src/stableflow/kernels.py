"""Kernel families f_t(s) on a time grid x atom space.

A ``KernelGrid`` is the central object of the package: the matrix of
kernel values over (grid time, atom), together with the weighted atom
space carrying the control measure.  Builders produce the families used
throughout:

* periodic kernels  b1(z)^[v+t]_q * g(z, {v+t}_q)  on base x fiber,
  optionally with a per-base speed s(z),
* harmonizable kernels  e^{itx}  on a spectral measure,
* the trivial two-atom kernel  (1, (-1)^t),
* moving averages  k(t+u)  on a finite tap window,
* flow-generated kernels  a_t(s) (dnu o phi_t/dnu)^{1/alpha} f_0(phi_t(s)).

The module also rescales speed kernels to unit speed, rewrites a
harmonizable spectrum in cyclic form, and checks minimality of a
representation by cross-ratio separation of atom columns.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .measure import INTEGER, REAL_GRID, TimeGrid, WeightedAtomSpace, restrict
from .modular import floor_mult, frac_mult
from . import flows as _flows
from .flows import Cocycle, CyclicFlowSpec, PermutationFlow, check_cocycle_law

__all__ = [
    "REAL",
    "COMPLEX",
    "KernelError",
    "SupportViolation",
    "IncommensurableFiberError",
    "CocycleLawViolation",
    "KernelGrid",
    "PeriodicKernelSpec",
    "HarmonizableSpec",
    "MinimalityResult",
    "build_periodic_kernel",
    "build_harmonizable_kernel",
    "build_trivial_kernel",
    "build_moving_average_kernel",
    "flow_generated_kernel",
    "rescale_speed_kernel",
    "harmonizable_as_cyclic",
    "check_minimality",
]

REAL = "REAL"
COMPLEX = "COMPLEX"


class KernelError(ValueError):
    """Malformed kernel specification."""


class SupportViolation(KernelError):
    """An atom column is identically zero (violates full support)."""


class IncommensurableFiberError(KernelError):
    """A shifted fiber point does not land on a fiber sample."""


class CocycleLawViolation(KernelError):
    """Supplied cocycle fails the cocycle law on the sampled grid."""


@dataclass(frozen=True)
class KernelGrid:
    """Kernel values indexed (grid time, atom) over a weighted atom space."""

    space: WeightedAtomSpace
    grid: TimeGrid
    values: np.ndarray
    field_mode: str

    def __post_init__(self):
        if self.field_mode not in (REAL, COMPLEX):
            raise KernelError(f"unknown field mode {self.field_mode!r}")
        v = np.asarray(self.values)
        v = np.array(v, dtype=complex if self.field_mode == COMPLEX else float)
        if v.shape != (self.grid.n_times, self.space.size):
            raise KernelError("values must have shape (n_times, n_atoms)")
        if v.size and not np.all(np.isfinite(v)):
            raise KernelError("kernel values must be finite")
        if v.size and np.any(np.max(np.abs(v), axis=0) == 0.0):
            raise SupportViolation("some atom has an all-zero column")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @property
    def n_atoms(self) -> int:
        return self.space.size

    def column(self, atom_index: int) -> np.ndarray:
        return self.values[:, atom_index]

    def row(self, t) -> np.ndarray:
        return self.values[self.grid.index_of(t)]

    def restrict(self, mask) -> "KernelGrid":
        """Sub-kernel on the masked atoms (empty result is legal)."""
        m = np.asarray(mask, dtype=bool)
        sub = restrict(self.space, m)
        return KernelGrid(sub, self.grid, self.values[:, m], self.field_mode)


def _unimodular_array(b1, n) -> np.ndarray:
    b = np.asarray(b1)
    b = np.array(b.astype(complex) if np.iscomplexobj(b) else b.astype(float))
    if b.shape != (n,):
        raise KernelError("b1 must provide one value per base atom")
    if not np.allclose(np.abs(b), 1.0, rtol=0, atol=1e-12):
        raise KernelError("b1 must be unimodular")
    b.flags.writeable = False
    return b


@dataclass(frozen=True)
class PeriodicKernelSpec:
    """Spec of a periodic kernel: base Z, periods q, multipliers b1, fiber map g.

    ``g(z_index, u)`` must accept a float array of fiber positions in
    [0, q(z)) and return values; use :meth:`from_samples` when g is only
    known on the fiber lattice.  ``speed`` defaults to unit speed; the
    kernel is then b1^[v + s t]_q * g({v + s t}_q) over each fiber.
    """

    base: WeightedAtomSpace
    q: np.ndarray
    b1: np.ndarray
    g: Callable
    fiber_cells: np.ndarray
    mode: str = REAL_GRID
    field_mode: str = REAL
    speed: np.ndarray = None

    def __post_init__(self):
        n = self.base.size
        q = np.asarray(self.q, dtype=float)
        if q.shape != (n,) or not np.all(q > 0):
            raise KernelError("q must be positive, one per base atom")
        cells = np.asarray(self.fiber_cells, dtype=np.int64)
        if cells.shape != (n,) or not np.all(cells >= 1):
            raise KernelError("fiber_cells must be positive integers")
        if self.speed is None:
            s = np.ones(n)
        else:
            s = np.asarray(self.speed, dtype=float)
            if s.shape != (n,) or np.any(s == 0):
                raise KernelError("speed must be nonzero, one per base atom")
        if self.mode == INTEGER:
            if not np.all((q == np.round(q)) & (q >= 2)):
                raise KernelError("INTEGER mode requires q(z) in {2, 3, ...}")
            if not np.all(cells == q.astype(np.int64)):
                raise KernelError("INTEGER fibers have exactly q(z) points")
            if not np.all(s == 1.0):
                raise KernelError("INTEGER mode supports unit speed only")
        elif self.mode != REAL_GRID:
            raise KernelError(f"unknown mode {self.mode!r}")
        if self.field_mode not in (REAL, COMPLEX):
            raise KernelError(f"unknown field mode {self.field_mode!r}")
        for name, arr in (("q", q), ("fiber_cells", cells), ("speed", s)):
            arr = np.array(arr, copy=True)
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "b1", _unimodular_array(self.b1, n))

    def fiber_positions(self, z_index: int) -> np.ndarray:
        q = self.q[z_index]
        m = int(self.fiber_cells[z_index])
        if self.mode == INTEGER:
            return np.arange(int(q), dtype=float)
        return (np.arange(m) + 0.5) * (q / m)

    def fiber_weight(self, z_index: int) -> float:
        """lambda-mass of one fiber atom: 1 on Z, cell width on R."""
        if self.mode == INTEGER:
            return 1.0
        return self.q[z_index] / int(self.fiber_cells[z_index])

    @classmethod
    def from_samples(
        cls,
        base: WeightedAtomSpace,
        q,
        b1,
        samples: Sequence[np.ndarray],
        mode: str = REAL_GRID,
        field_mode: str = REAL,
        speed=None,
    ) -> "PeriodicKernelSpec":
        """Build a spec whose g is known only on the fiber lattice.

        Evaluation at a point off the sample lattice (beyond a 1e-6 cell
        tolerance) raises IncommensurableFiberError; this is the guard
        that shifted fiber points stay on fiber atoms.
        """
        qa = np.asarray(q, dtype=float)
        tabs = [np.asarray(s) for s in samples]
        cells = np.asarray([len(t) for t in tabs], dtype=np.int64)

        def g(z_index: int, u: np.ndarray) -> np.ndarray:
            tab = tabs[z_index]
            m = len(tab)
            width = qa[z_index] / m
            if mode == INTEGER:
                idx_f = np.asarray(u, dtype=float)
            else:
                idx_f = np.asarray(u, dtype=float) / width - 0.5
            idx = np.round(idx_f).astype(np.int64)
            if np.any(np.abs(idx_f - idx) > 1e-6):
                raise IncommensurableFiberError(
                    "fiber point off the sample lattice; q incommensurate "
                    "with the fiber discretization"
                )
            return tab[np.clip(idx, 0, m - 1) % m]

        return cls(base, qa, b1, g, cells, mode=mode, field_mode=field_mode, speed=speed)


@dataclass(frozen=True)
class HarmonizableSpec:
    """Finite spectral measure on frequencies (T-hat): atoms are frequencies."""

    spectrum: WeightedAtomSpace

    @property
    def frequencies(self) -> np.ndarray:
        return np.asarray(self.spectrum.atoms, dtype=float)


def build_periodic_kernel(spec: PeriodicKernelSpec, grid: TimeGrid) -> KernelGrid:
    """Kernel f_t(z, v) = b1(z)^[v + s(z) t]_q(z) * g(z, {v + s(z) t}_q(z))."""
    if spec.mode == INTEGER and grid.mode != INTEGER:
        raise KernelError("INTEGER spec requires an INTEGER grid")
    atoms = []
    weights = []
    cols = []
    dtype = complex if spec.field_mode == COMPLEX else float
    t = grid.times
    for z in range(spec.base.size):
        qz = spec.q[z]
        vs = spec.fiber_positions(z)
        x = vs[:, None] + spec.speed[z] * t[None, :]
        n = floor_mult(x, qz)
        r = frac_mult(x, qz)
        gvals = np.asarray(spec.g(z, r.ravel()), dtype=dtype).reshape(r.shape)
        block = np.power(np.asarray(spec.b1[z], dtype=dtype), n) * gvals
        zlabel = spec.base.atoms[z]
        wz = spec.base.weights[z] * spec.fiber_weight(z)
        for j, v in enumerate(vs):
            key = int(v) if spec.mode == INTEGER else float(v)
            atoms.append((zlabel, key))
            weights.append(wz)
            cols.append(block[j])
    values = np.stack(cols, axis=1) if cols else np.zeros((grid.n_times, 0), dtype)
    space = WeightedAtomSpace(tuple(atoms), np.asarray(weights), "periodic base x fiber")
    return KernelGrid(space, grid, values, spec.field_mode)


def build_harmonizable_kernel(spec: HarmonizableSpec, grid: TimeGrid) -> KernelGrid:
    """Kernel f_t(x) = e^{itx} on the spectral atoms (complex mode only)."""
    x = spec.frequencies
    if grid.mode == INTEGER and (np.any(x < 0) or np.any(x >= 2 * np.pi)):
        raise KernelError("INTEGER mode requires frequencies in [0, 2pi)")
    values = np.exp(1j * grid.times[:, None] * x[None, :])
    return KernelGrid(spec.spectrum, grid, values, COMPLEX)


def build_trivial_kernel(grid: TimeGrid, mass1: float, mass2: float = 0.0) -> KernelGrid:
    """Trivial stationary kernel: f_t(1) = 1 and, on Z only, f_t(2) = (-1)^t."""
    if mass1 <= 0:
        raise KernelError("mass1 must be positive")
    if mass2 < 0:
        raise KernelError("mass2 must be nonnegative")
    if mass2 > 0 and grid.mode != INTEGER:
        raise KernelError("the alternating atom requires an INTEGER grid (n(t) = 0 on R)")
    if mass2 > 0:
        signs = np.where(np.round(grid.times).astype(np.int64) % 2 == 0, 1.0, -1.0)
        values = np.stack([np.ones(grid.n_times), signs], axis=1)
        space = WeightedAtomSpace((1, 2), np.asarray([mass1, mass2]), "trivial")
    else:
        values = np.ones((grid.n_times, 1))
        space = WeightedAtomSpace((1,), np.asarray([mass1]), "trivial")
    return KernelGrid(space, grid, values, REAL)


def build_moving_average_kernel(
    taps,
    base: WeightedAtomSpace,
    grid: TimeGrid,
    window_pad: int = 0,
    field_mode: str = None,
) -> KernelGrid:
    """Mixed-moving-average kernel f_t(x, u) = k(t + u) on base x tap window.

    Taps define k at lattice points u = 0, step, ..., (m-1)*step and k is
    zero outside.  ``window_pad`` widens the u-atom window by that many
    lattice points on both sides; with a pad at least as large as the
    probe-plus-shift range, stationarity on the truncated grid is exact.
    """
    k = np.asarray(taps)
    if k.ndim != 1 or k.size == 0:
        raise KernelError("taps must be a nonempty 1-d sequence")
    if np.max(np.abs(k)) == 0.0:
        raise SupportViolation("all-zero taps violate the support condition")
    if field_mode is None:
        field_mode = COMPLEX if np.iscomplexobj(k) else REAL
    dtype = complex if field_mode == COMPLEX else float
    k = k.astype(dtype)
    m = k.size
    pad = int(window_pad)
    if pad < 0:
        raise KernelError("window_pad must be nonnegative")
    step = grid.step
    ticks = np.round(grid.times / step).astype(np.int64)  # integer time indices
    u_idx = np.arange(-pad, m + pad)
    # f_t(u) = k(t + u): tap index = time tick + u tick
    tap_at = np.zeros((grid.n_times, u_idx.size), dtype=dtype)
    for col, j in enumerate(u_idx):
        src = ticks + j
        ok = (src >= 0) & (src < m)
        tap_at[ok, col] = k[src[ok]]
    atoms = []
    weights = []
    cols = []
    for xi, xlabel in enumerate(base.atoms):
        for col, j in enumerate(u_idx):
            atoms.append((xlabel, float(j * step)))
            weights.append(base.weights[xi] * grid.time_weight)
            cols.append(tap_at[:, col])
    values = np.stack(cols, axis=1)
    space = WeightedAtomSpace(tuple(atoms), np.asarray(weights), "moving average window")
    return KernelGrid(space, grid, values, field_mode)


def _fiber_atom_enumeration(spec: CyclicFlowSpec):
    """Atoms (z_index, v) of a cyclic flow's base x fiber, with weights."""
    points = []
    weights = []
    for z in range(spec.base.size):
        q = spec.period_fn[z]
        m = int(spec.fiber_cells[z])
        if spec.mode == INTEGER:
            vs = [int(v) for v in range(int(q))]
            wv = 1.0
        else:
            vs = [(j + 0.5) * (q / m) for j in range(m)]
            wv = q / m
        for v in vs:
            points.append((z, v))
            weights.append(spec.base.weights[z] * wv)
    return points, np.asarray(weights)


def flow_generated_kernel(
    f0,
    flow,
    cocycle,
    grid: TimeGrid,
    alpha: float = None,
    field_mode: str = None,
    cocycle_check_tol: float = 1e-9,
) -> KernelGrid:
    """Kernel f_t(s) = a_t(s) (d(nu o phi_t)/d nu)^{1/alpha} f_0(phi_t(s)).

    ``flow`` is a PermutationFlow (INTEGER grids) or a CyclicFlowSpec;
    cyclic flows preserve the measure, so their Radon-Nikodym factor is
    one.  For a non-measure-preserving permutation flow ``alpha`` is
    required.  The cocycle law is verified on a sampled subgrid first.
    """
    f0 = np.asarray(f0)
    if field_mode is None:
        field_mode = COMPLEX if np.iscomplexobj(f0) else REAL
    dtype = complex if field_mode == COMPLEX else float
    f0 = f0.astype(dtype)

    if isinstance(flow, PermutationFlow):
        if grid.mode != INTEGER:
            raise KernelError("permutation flows live on INTEGER grids")
        n = flow.space.size
        if f0.shape != (n,):
            raise KernelError("f0 must give one value per atom")
        if isinstance(cocycle, Cocycle):
            a = lambda t, s: cocycle.at(t, s)
        else:
            a = cocycle
        points = list(range(n))
        sample_ts = [t for t in grid.times[:: max(1, grid.n_times // 9)]]
        rep = check_cocycle_law(
            cocycle, flow, sample_ts, points[: min(n, 16)]
        )
        if rep.checked and rep.max_discrepancy > cocycle_check_tol:
            raise CocycleLawViolation(
                f"cocycle law violated: max discrepancy {rep.max_discrepancy:.3e}"
            )
        preserving = bool(np.all(flow.weight_ratio == 1.0))
        if not preserving and alpha is None:
            raise KernelError("non-measure-preserving flow requires alpha")
        values = np.empty((grid.n_times, n), dtype=dtype)
        for i, t in enumerate(grid.times):
            ti = int(round(t))
            img = flow.apply_all(ti)
            row = f0[img]
            if not preserving:
                ratios = np.asarray([flow.ratio_along(s, ti) for s in range(n)])
                row = row * ratios ** (1.0 / alpha)
            avals = np.asarray([a(t, s) for s in range(n)], dtype=dtype)
            values[i] = avals * row
        return KernelGrid(flow.space, grid, values, field_mode)

    if isinstance(flow, CyclicFlowSpec):
        points, weights = _fiber_atom_enumeration(flow)
        if f0.shape != (len(points),):
            raise KernelError("f0 must give one value per fiber atom")
        if isinstance(cocycle, Cocycle):
            a = lambda t, p: cocycle.at(t, points.index(p))
        else:
            a = cocycle
        sample_ts = [t for t in grid.times[:: max(1, grid.n_times // 9)]]
        rep = check_cocycle_law(a, flow, sample_ts, points[: min(len(points), 16)])
        if rep.checked and rep.max_discrepancy > cocycle_check_tol:
            raise CocycleLawViolation(
                f"cocycle law violated: max discrepancy {rep.max_discrepancy:.3e}"
            )
        index = {p: i for i, p in enumerate(points)}
        values = np.empty((grid.n_times, len(points)), dtype=dtype)
        for i, t in enumerate(grid.times):
            for j, p in enumerate(points):
                z, v2 = _flows.cyclic_flow_apply(flow, p, t)
                target = (z, int(v2)) if flow.mode == INTEGER else (z, v2)
                jj = index.get(target)
                if jj is None:
                    raise IncommensurableFiberError(
                        "cyclic flow image off the fiber lattice"
                    )
                values[i, j] = a(t, p) * f0[jj]
        atoms = tuple((flow.base.atoms[z], v) for z, v in points)
        space = WeightedAtomSpace(atoms, weights, "cyclic flow base x fiber")
        return KernelGrid(space, grid, values, field_mode)

    raise KernelError(f"unsupported flow type {type(flow).__name__}")


def rescale_speed_kernel(spec: PeriodicKernelSpec, alpha: float) -> PeriodicKernelSpec:
    """Rewrite a speed kernel at unit speed without changing the process law.

    Two stages: an orientation flip for negative speeds, g-hat(z, u) =
    g(z, q(z) - u) with the unimodular base inverted, then the speed
    normalization q-tilde = q/|s|, g-tilde(z, u) = |s|^{1/alpha}
    g-hat(z, |s| u).  Real-mode multipliers (+-1) are their own inverse,
    so there the base is literally unchanged.
    """
    if spec.mode != REAL_GRID:
        raise KernelError("speed rescaling applies to REAL_GRID kernels")
    if not 0 < alpha < 2:
        raise KernelError("alpha must lie in (0, 2)")
    s = spec.speed
    q = spec.q
    g_old = spec.g
    q_new = q / np.abs(s)
    b1_new = np.where(s > 0, spec.b1, np.conj(spec.b1)) if spec.field_mode == COMPLEX else spec.b1

    def g_new(z_index: int, u: np.ndarray) -> np.ndarray:
        sz = s[z_index]
        qz = q[z_index]
        pts = np.abs(sz) * np.asarray(u, dtype=float)
        if sz < 0:
            pts = frac_mult(qz - pts, qz)
        return np.abs(sz) ** (1.0 / alpha) * np.asarray(g_old(z_index, pts))

    return PeriodicKernelSpec(
        spec.base,
        q_new,
        b1_new,
        g_new,
        spec.fiber_cells,
        mode=spec.mode,
        field_mode=spec.field_mode,
        speed=None,
    )


def harmonizable_as_cyclic(
    spec: HarmonizableSpec, fiber_cells: int, mode: str = REAL_GRID
) -> PeriodicKernelSpec:
    """Cyclic-form rewrite of a harmonizable spectrum.

    Z is the spectral measure, q is 2 everywhere, b1(z) = e^{2iz} and
    g(z, u) = e^{izu}; the resulting kernel recombines to e^{iz(v+t)}
    exactly, and its scale functional is 2^{1/alpha} times the
    harmonizable one on every probe.
    """
    x = spec.frequencies
    n = x.size
    if mode == INTEGER:
        cells = np.full(n, 2, dtype=np.int64)
    else:
        if fiber_cells < 1:
            raise KernelError("fiber_cells must be positive")
        cells = np.full(n, int(fiber_cells), dtype=np.int64)

    def g(z_index: int, u: np.ndarray) -> np.ndarray:
        return np.exp(1j * x[z_index] * np.asarray(u, dtype=float))

    return PeriodicKernelSpec(
        spec.spectrum,
        np.full(n, 2.0),
        np.exp(2j * x),
        g,
        cells,
        mode=mode,
        field_mode=COMPLEX,
    )


@dataclass(frozen=True)
class MinimalityResult:
    minimal: bool
    witness: tuple = None  # non-separated atom index pair when not minimal


def check_minimality(
    kernel: KernelGrid, eps_ratio: float = 1e-9, eps_zero: float = 1e-12
) -> MinimalityResult:
    """Cross-ratio separation test for minimality on atom spaces.

    Two atoms are separated when some pair of times t, u has
    f_t(s1) f_u(s2) != f_u(s1) f_t(s2), i.e. when their columns are not
    proportional; ratios are only read where both columns exceed
    ``eps_zero`` and atom pairs with no common support are separated
    trivially.  Returns the first non-separated pair as witness.
    """
    v = kernel.values
    n = kernel.n_atoms
    mags = np.abs(v)
    col_max = mags.max(axis=0) if n else np.zeros(0)
    if np.any(col_max <= eps_zero):
        raise SupportViolation("atom column entirely below eps_zero")
    masks = mags > eps_zero
    for i in range(n):
        ui = v[:, i]
        mi = masks[:, i]
        for j in range(i + 1, n):
            mj = masks[:, j]
            common = mi & mj
            if not common.any():
                continue  # disjoint supports separate trivially
            if (mi != mj).any():
                continue  # support mismatch: columns cannot be proportional
            uj = v[:, j]
            t_star = np.argmax(np.where(common, mags[:, i], -1.0))
            lam = uj[t_star] / ui[t_star]
            resid = np.max(np.abs(uj - lam * ui))
            scale = max(col_max[j], abs(lam) * col_max[i])
            if resid <= eps_ratio * scale:
                return MinimalityResult(False, (i, j))
    return MinimalityResult(True, None)
