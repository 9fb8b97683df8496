"""Component-set detection and the four-way decomposition.

Every atom of a kernel is placed into exactly one of four component
sets, mirroring the partition of the representation space:

* DISSIPATIVE -- the time integral of |f_t|^alpha converges (mixed
  moving average part),
* FIXED_HARMONIZABLE -- f advances by a fixed multiplier every grid
  step (harmonizable / trivial part),
* CYCLIC -- f returns to a multiple of itself after some nonzero h but
  is not fixed,
* CONSERVATIVE_NONPERIODIC -- conservative with no periodicity at all.

Detection is per atom and purely kernel-based, so it applies whether or
not the representation is minimal.  The grid surrogates for the
continuum conditions are documented on each detector: a.e.-t identities
become identities at all usable grid times; the "arbitrarily small
period" membership test for the fixed set becomes "one grid step is a
period"; the infinite-horizon integral becomes a windowed tail test.
Atoms whose usable support covers less than MIN_SUPPORT_FRACTION of the
grid, or whose tail test is inconclusive, are flagged UNDECIDED and
fail the run unless an override maps them to a label.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .flows import CYCLIC as FLOW_CYCLIC
from .flows import FIXED as FLOW_FIXED
from .flows import PermutationFlow, classify_points
from .kernels import KernelGrid, MinimalityResult, SupportViolation, check_minimality
from .measure import INTEGER, ProbeSet
from .stable import AlphaSpec, StationarityReport, check_stationarity, scale_functional

__all__ = [
    "EPS_ZERO",
    "EPS_PERIOD",
    "EPS_TAIL",
    "MIN_SUPPORT_FRACTION",
    "DISSIPATIVE",
    "FIXED_HARMONIZABLE",
    "CYCLIC",
    "CONSERVATIVE_NONPERIODIC",
    "CONSERVATIVE",
    "UNDECIDED",
    "COMPONENT_LABELS",
    "DecomposeError",
    "UndecidedAtomsError",
    "InclusionViolation",
    "AdditivityError",
    "KernelNotMinimalError",
    "PeriodCertificate",
    "ClassificationResult",
    "DecompositionResult",
    "AgreementReport",
    "detect_period",
    "detect_fixed",
    "detect_dissipative",
    "classify_atoms",
    "decompose_four",
    "classify_process",
    "flow_point_agreement",
]

EPS_ZERO = 1e-12
EPS_PERIOD = 1e-9
EPS_TAIL = 1e-8
#: usable-support fraction below which ratio tests are not trusted
MIN_SUPPORT_FRACTION = 0.25
#: tail increments above this fraction of the total mass read as conservative
CONSERVATIVE_FLOOR = 1e-3

DISSIPATIVE = "DISSIPATIVE"
FIXED_HARMONIZABLE = "FIXED_HARMONIZABLE"
CYCLIC = "CYCLIC"
CONSERVATIVE_NONPERIODIC = "CONSERVATIVE_NONPERIODIC"
COMPONENT_LABELS = (DISSIPATIVE, FIXED_HARMONIZABLE, CYCLIC, CONSERVATIVE_NONPERIODIC)

CONSERVATIVE = "CONSERVATIVE"
UNDECIDED = "UNDECIDED"

#: process verdicts
PERIODIC = "PERIODIC"
HARMONIZABLE_OR_TRIVIAL = "HARMONIZABLE_OR_TRIVIAL"
MIXED = "MIXED"
NONE = "NONE"


class DecomposeError(ValueError):
    """Classification or decomposition failure."""


class UndecidedAtomsError(DecomposeError):
    """Atoms could not be classified and no override was given."""

    def __init__(self, undecided, message=None):
        self.undecided = tuple(undecided)
        super().__init__(message or f"undecided atoms: {self.undecided}")


class InclusionViolation(DecomposeError):
    """Internal inconsistency: the component-set inclusions failed."""


class AdditivityError(DecomposeError):
    """Component scale functionals do not add up to the whole."""


class KernelNotMinimalError(DecomposeError):
    """Flow/kernel agreement is only meaningful for minimal kernels."""


@dataclass(frozen=True)
class PeriodCertificate:
    """Witness (h, a) of f_{t+h}(s) = a f_t(s) across usable grid times."""

    atom: object
    h: float
    a: complex
    residual: float

    def __post_init__(self):
        if self.h == 0:
            raise DecomposeError("certificate shift h must be nonzero")
        if self.a == 0:
            raise DecomposeError("certificate multiplier a must be nonzero")


def _certify_shift(col, mags, steps, eps_zero, eps_period):
    """Try to certify one shift (in grid steps); returns (a, residual) or None.

    The identity is checked two-sidedly: every aligned position where
    either f_t or f_{t+h} is usable participates, so a zero column value
    facing a nonzero shifted value correctly defeats the candidate.
    """
    n = len(col)
    k = int(steps)
    if k > 0:
        f1 = col[: n - k]
        f2 = col[k:]
        m1 = mags[: n - k]
        m2 = mags[k:]
    else:
        f1 = col[-k:]
        f2 = col[: n + k]
        m1 = mags[-k:]
        m2 = mags[: n + k]
    usable = (m1 > eps_zero) | (m2 > eps_zero)
    if not usable.any():
        return None
    anchored = np.where(m1 > eps_zero, m1, -1.0)
    t_star = int(np.argmax(anchored))
    if anchored[t_star] <= 0:
        return None  # nothing usable to anchor the ratio
    a = f2[t_star] / f1[t_star]
    if abs(a) <= eps_zero:
        return None
    scale = max(np.max(m2[usable]), abs(a) * np.max(m1[usable]))
    resid = float(np.max(np.abs(f2[usable] - a * f1[usable])) / scale)
    if resid <= eps_period:
        return a, resid
    return None


def _column(kernel: KernelGrid, atom_index: int):
    col = kernel.column(atom_index)
    mags = np.abs(col)
    if np.max(mags) <= EPS_ZERO:
        raise SupportViolation(f"atom {atom_index} column entirely below eps_zero")
    return col, mags


def _default_search(kernel: KernelGrid):
    """All nonzero grid shifts, smallest |h| first, positive before negative."""
    hs = [t for t in kernel.grid.times if t != 0.0]
    hs.sort(key=lambda h: (abs(h), 0 if h > 0 else 1))
    return hs


def detect_period(
    kernel: KernelGrid,
    atom_index: int,
    search: Sequence[float] = None,
    eps_zero: float = EPS_ZERO,
    eps_period: float = EPS_PERIOD,
):
    """Search candidate shifts for a period certificate on one atom.

    Candidates are tried smallest |h| first (positive preferred at equal
    magnitude); the multiplier is fitted at the largest usable column
    value and then verified at every usable aligned grid time.  Returns
    the first certificate, or None.
    """
    col, mags = _column(kernel, atom_index)
    if search is None:
        search = _default_search(kernel)
    else:
        search = sorted(search, key=lambda h: (abs(h), 0 if h > 0 else 1))
    step = kernel.grid.step
    for h in search:
        k = int(round(h / step))
        if k == 0 or abs(k) >= kernel.grid.n_times:
            continue
        hit = _certify_shift(col, mags, k, eps_zero, eps_period)
        if hit is not None:
            a, resid = hit
            return PeriodCertificate(kernel.space.atoms[atom_index], float(h), a, resid)
    return None


#: cap on times per axis in the exhaustive pair cross-check
_MAX_PAIR_TIMES = 512


def detect_fixed(
    kernel: KernelGrid,
    atom_index: int,
    eps_zero: float = EPS_ZERO,
    eps_period: float = EPS_PERIOD,
) -> bool:
    """Membership test for the fixed (harmonizable / trivial) set.

    On Z the defining condition is a one-step certificate f_{t+1} =
    a f_t; on a real grid the smallest step stands in for the
    arbitrarily-small-period condition (exact for unimodular
    exponential kernels).  A positive answer is cross-checked against
    the direct product identity f_{t1+t2} f_0 = f_{t1} f_{t2} over grid
    pairs.
    """
    col, mags = _column(kernel, atom_index)
    if _certify_shift(col, mags, 1, eps_zero, eps_period) is None:
        return False
    grid = kernel.grid
    hw = grid.half_window
    idx = np.arange(grid.n_times)
    if grid.n_times > _MAX_PAIR_TIMES:
        stride = int(np.ceil(grid.n_times / _MAX_PAIR_TIMES))
        idx = idx[::stride]
    f0 = col[hw]
    i1, i2 = np.meshgrid(idx, idx, indexing="ij")
    sum_idx = i1 + i2 - hw
    ok = (sum_idx >= 0) & (sum_idx < grid.n_times)
    lhs = col[np.where(ok, sum_idx, 0)] * f0
    rhs = col[i1] * col[i2]
    scale = float(np.max(mags)) ** 2
    resid = np.max(np.abs(np.where(ok, lhs - rhs, 0.0))) / scale
    return bool(resid <= eps_period)


def detect_dissipative(
    kernel: KernelGrid,
    atom_index: int,
    alpha: AlphaSpec,
    certificate: PeriodCertificate = None,
    have_certificate: bool = None,
    eps_tail: float = EPS_TAIL,
):
    """Windowed surrogate of the dissipative/conservative dichotomy.

    A period certificate forces divergence of the time integral of
    |f_t|^alpha (the multiplier recurs forever), hence CONSERVATIVE.
    Otherwise partial alpha-masses over the quarter, half and full
    window decide: tail increments below ``eps_tail`` of the total read
    DISSIPATIVE, increments bounded away from zero read CONSERVATIVE,
    anything in between is UNDECIDED.
    """
    col, mags = _column(kernel, atom_index)
    if have_certificate is None:
        certificate = detect_period(kernel, atom_index)
        have_certificate = certificate is not None
    if have_certificate:
        return CONSERVATIVE
    grid = kernel.grid
    w = np.abs(grid.times) * 0 + grid.time_weight
    mass = mags**alpha.alpha * w
    hw = grid.half_window
    absk = np.abs(np.arange(-hw, hw + 1))
    s_quarter = float(np.sum(mass[absk <= hw // 4]))
    s_half = float(np.sum(mass[absk <= hw // 2]))
    s_full = float(np.sum(mass))
    inc1 = s_half - s_quarter
    inc2 = s_full - s_half
    denom = max(s_full, EPS_ZERO)
    r2 = inc2 / denom
    if r2 <= eps_tail and inc2 <= inc1 + eps_tail * denom:
        return DISSIPATIVE
    if r2 >= CONSERVATIVE_FLOOR:
        return CONSERVATIVE
    return UNDECIDED


@dataclass(frozen=True)
class ClassificationResult:
    """Per-atom component labels with supporting evidence."""

    labels: tuple
    certificates: dict  # atom index -> PeriodCertificate
    undecided: tuple  # atom indices
    support_fraction: np.ndarray
    dissipative_status: tuple

    def mask(self, label: str) -> np.ndarray:
        return np.asarray([l == label for l in self.labels])


def classify_atoms(
    kernel: KernelGrid,
    alpha: AlphaSpec,
    undecided_override: str = None,
) -> ClassificationResult:
    """Assign each atom to one of the four component sets.

    Priority per atom: dissipative tail verdict, then the fixed test,
    then a plain period certificate, then conservative-nonperiodic.
    Ratio-based evidence is only trusted when the atom's usable support
    covers at least MIN_SUPPORT_FRACTION of the grid; otherwise the atom
    is UNDECIDED.  Undecided atoms raise unless ``undecided_override``
    names the component that should absorb them.
    """
    if undecided_override is not None and undecided_override not in COMPONENT_LABELS:
        raise DecomposeError(f"unknown override label {undecided_override!r}")
    n = kernel.n_atoms
    labels = []
    certificates = {}
    undecided = []
    statuses = []
    support = np.zeros(n)
    for i in range(n):
        col, mags = _column(kernel, i)
        support[i] = float(np.mean(mags > EPS_ZERO))
        cert = detect_period(kernel, i)
        status = detect_dissipative(
            kernel, i, alpha, certificate=cert, have_certificate=cert is not None
        )
        statuses.append(status)
        if cert is not None:
            certificates[i] = cert
        if status == DISSIPATIVE:
            labels.append(DISSIPATIVE)
            continue
        if support[i] < MIN_SUPPORT_FRACTION:
            labels.append(UNDECIDED)
            undecided.append(i)
            continue
        if cert is not None and detect_fixed(kernel, i):
            labels.append(FIXED_HARMONIZABLE)
        elif cert is not None:
            labels.append(CYCLIC)
        elif status == CONSERVATIVE:
            labels.append(CONSERVATIVE_NONPERIODIC)
        else:
            labels.append(UNDECIDED)
            undecided.append(i)
    if undecided:
        if undecided_override is None:
            raise UndecidedAtomsError(undecided)
        labels = [undecided_override if l == UNDECIDED else l for l in labels]
        undecided = []
    return ClassificationResult(
        tuple(labels), certificates, tuple(undecided), support, tuple(statuses)
    )


@dataclass(frozen=True)
class DecompositionResult:
    """The four sub-kernels plus the scale-additivity accounting."""

    classification: ClassificationResult
    components: dict  # label -> KernelGrid (possibly empty)
    component_sigmas: dict  # label -> tuple of per-probe sigma^alpha
    whole_sigmas: tuple
    additivity_residual: float
    stationarity: dict  # label -> StationarityReport (nonempty components)


def decompose_four(
    kernel: KernelGrid,
    alpha: AlphaSpec,
    probes: ProbeSet,
    stationarity_shifts: Sequence[float] = None,
    stationarity_tol: float = 1e-6,
    additivity_tol: float = 1e-10,
    undecided_override: str = None,
    classification: ClassificationResult = None,
) -> DecompositionResult:
    """Split the kernel into the four component processes and verify.

    Verifies the label-set inclusions (fixed implies certified periodic,
    certified periodic implies conservative), exact per-probe
    additivity of sigma^alpha over the disjoint atom sets, and reports
    stationarity of each nonempty component.
    """
    if classification is None:
        classification = classify_atoms(kernel, alpha, undecided_override)
    labels = classification.labels
    for i, lab in enumerate(labels):
        if lab == FIXED_HARMONIZABLE and i not in classification.certificates:
            raise InclusionViolation(f"fixed atom {i} holds no period certificate")
        if lab == DISSIPATIVE and i in classification.certificates:
            raise InclusionViolation(f"certified-periodic atom {i} labeled dissipative")
    components = {
        lab: kernel.restrict(classification.mask(lab)) for lab in COMPONENT_LABELS
    }
    whole = tuple(scale_functional(kernel, alpha, p) for p in probes)
    sigmas = {
        lab: tuple(scale_functional(components[lab], alpha, p) for p in probes)
        for lab in COMPONENT_LABELS
    }
    residual = 0.0
    for k, total in enumerate(whole):
        parts = sum(sigmas[lab][k] for lab in COMPONENT_LABELS)
        residual = max(residual, abs(parts - total) / max(total, 1.0))
    if residual > additivity_tol:
        raise AdditivityError(
            f"additivity residual {residual:.3e} exceeds {additivity_tol:.1e}"
        )
    stationarity = {}
    if stationarity_shifts is not None:
        for lab in COMPONENT_LABELS:
            if components[lab].n_atoms:
                stationarity[lab] = check_stationarity(
                    components[lab], alpha, probes, stationarity_shifts, stationarity_tol
                )
    return DecompositionResult(
        classification, components, sigmas, whole, float(residual), stationarity
    )


def classify_process(
    kernel: KernelGrid,
    alpha: AlphaSpec,
    classification: ClassificationResult = None,
    undecided_override: str = None,
) -> str:
    """Whole-process verdict from the atom labels.

    PERIODIC when every atom is fixed or cyclic, CYCLIC /
    HARMONIZABLE_OR_TRIVIAL when one of those is exhaustive, MIXED when
    periodic and non-periodic atoms coexist, NONE when nothing is
    periodic.
    """
    if classification is None:
        classification = classify_atoms(kernel, alpha, undecided_override)
    labels = classification.labels
    if not labels:
        return NONE
    n_fixed = sum(1 for l in labels if l == FIXED_HARMONIZABLE)
    n_cyclic = sum(1 for l in labels if l == CYCLIC)
    periodic = n_fixed + n_cyclic
    if periodic == len(labels):
        if n_cyclic == len(labels):
            return CYCLIC
        if n_fixed == len(labels):
            return HARMONIZABLE_OR_TRIVIAL
        return PERIODIC
    if periodic > 0:
        return MIXED
    return NONE


@dataclass(frozen=True)
class AgreementReport:
    """Kernel-side vs flow-side point labels, atom by atom."""

    passed: bool
    mismatches: tuple  # (atom index, kernel label, flow label)
    minimality: MinimalityResult


def flow_point_agreement(
    kernel: KernelGrid,
    flow: PermutationFlow,
    alpha: AlphaSpec,
) -> AgreementReport:
    """Compare kernel component labels against flow point labels.

    Only meaningful for minimal kernels (a non-minimal representation
    may be generated by a different flow); raises otherwise.  The
    kernel-side {FIXED_HARMONIZABLE, CYCLIC} labels must match the
    flow-side {FIXED, CYCLIC} labels atom by atom.
    """
    minimality = check_minimality(kernel)
    if not minimality.minimal:
        raise KernelNotMinimalError(
            f"kernel is not minimal (witness pair {minimality.witness})"
        )
    if kernel.n_atoms != flow.space.size:
        raise DecomposeError("kernel and flow must share the atom space")
    kernel_side = classify_atoms(kernel, alpha).labels
    flow_side = classify_points(flow).labels
    translate = {FIXED_HARMONIZABLE: FLOW_FIXED, CYCLIC: FLOW_CYCLIC}
    mismatches = []
    for i, (kl, fl) in enumerate(zip(kernel_side, flow_side)):
        if translate.get(kl) != fl:
            mismatches.append((i, kl, fl))
    return AgreementReport(not mismatches, tuple(mismatches), minimality)
