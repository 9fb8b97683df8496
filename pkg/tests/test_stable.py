import numpy as np
import pytest
from scipy.special import gamma as gamma_fn, roots_jacobi

from stableflow.measure import (
    INTEGER,
    REAL_GRID,
    OffGridError,
    Probe,
    ProbeSet,
    TimeGrid,
    WeightedAtomSpace,
)
from stableflow.kernels import (
    COMPLEX,
    REAL,
    HarmonizableSpec,
    KernelGrid,
    PeriodicKernelSpec,
    build_harmonizable_kernel,
    build_moving_average_kernel,
    build_periodic_kernel,
    harmonizable_as_cyclic,
)
from stableflow.stable import (
    AlphaSpec,
    DegenerateKernelError,
    ModeMismatch,
    SimulationConfig,
    StableError,
    c0_constant,
    check_equal_in_distribution,
    check_stationarity,
    generate_probes,
    lepage_simulate,
    pathwise_period_diagnostic,
    scale_functional,
    series_constant,
)


def c0_closed_form(alpha):
    # (2pi)^{-1} * 2 sqrt(pi) Gamma((alpha+1)/2) / Gamma(alpha/2 + 1)
    return gamma_fn((alpha + 1) / 2) / (np.sqrt(np.pi) * gamma_fn(alpha / 2 + 1))


def c0_gauss_jacobi(alpha, nodes=80):
    # int_0^{pi/2} cos^a = int_0^1 (1-x^2)^{(a-1)/2} dx; mapped to [-1, 1]
    # the (1-y)^{(a-1)/2} singularity is absorbed in the Jacobi weight
    g = (alpha - 1) / 2
    y, w = roots_jacobi(nodes, g, 0.0)
    val = np.sum(w * (3 + y) ** g) * 0.5 ** (2 * g + 1)
    return 4 * val / (2 * np.pi)


def series_constant_closed_form(alpha):
    if alpha == 1.0:
        return 2 / np.pi
    return (1 - alpha) / (gamma_fn(2 - alpha) * np.cos(np.pi * alpha / 2))


def sawtooth_kernel(cells=512, hw=16, step=0.125):
    base = WeightedAtomSpace((1,), [1.0])
    spec = PeriodicKernelSpec(
        base, [1.0], [1.0], lambda z, u: np.asarray(u, float), [cells], mode=REAL_GRID
    )
    return build_periodic_kernel(spec, TimeGrid(REAL_GRID, hw, step))


# ------------------------------------------------------------------ constants


def test_c0_at_one_is_two_over_pi():
    assert abs(c0_constant(1.0) - 2 / np.pi) <= 1e-10


def test_c0_dual_quadrature_and_closed_form():
    for alpha in (0.25, 0.5, 0.75, 1.0, 1.25, 1.5, 1.75):
        q = c0_constant(alpha)
        assert abs(q - c0_gauss_jacobi(alpha)) <= 1e-10
        assert abs(q - c0_closed_form(alpha)) <= 1e-10


def test_c0_strictly_inside_unit_interval():
    for alpha in np.linspace(0.05, 1.95, 20):
        assert 0.0 < c0_constant(alpha) < 1.0


def test_c0_rejects_out_of_range():
    with pytest.raises(StableError):
        c0_constant(2.0)


def test_series_constant_matches_closed_form():
    for alpha in (0.4, 0.8, 1.0, 1.2, 1.6, 1.9):
        assert abs(series_constant(alpha) - series_constant_closed_form(alpha)) <= 1e-9


# ------------------------------------------------------------ scale functional


def test_single_unit_atom_scale_is_one():
    g = TimeGrid(INTEGER, 2)
    k = KernelGrid(WeightedAtomSpace(("s",), [1.0]), g, np.ones((5, 1)), REAL)
    for alpha in (0.5, 1.0, 1.7):
        assert scale_functional(k, AlphaSpec(alpha), Probe([1.0], [0])) == 1.0


def test_harmonizable_scale_is_c0_times_mass():
    spec = HarmonizableSpec(WeightedAtomSpace((0.3, 1.1, 4.0), [1.0, 0.5, 2.0]))
    k = build_harmonizable_kernel(spec, TimeGrid(INTEGER, 3))
    alpha = AlphaSpec(1.3, COMPLEX)
    sig = scale_functional(k, alpha, Probe([1.0 + 0j], [1]))
    assert sig == pytest.approx(c0_constant(1.3) * 3.5, rel=1e-12)


def test_sawtooth_scale_matches_integral_oracle():
    # oracle: int_0^1 v dv = 1/2, exact for the midpoint rule applied to v
    k = sawtooth_kernel()
    sig = scale_functional(k, AlphaSpec(1.0), Probe([1.0], [0.0]))
    assert sig == pytest.approx(0.5, abs=1e-12)


def test_scale_homogeneity():
    k = sawtooth_kernel(cells=64)
    alpha = AlphaSpec(0.8)
    p = Probe([0.4, -1.1], [0.0, 0.5])
    base = scale_functional(k, alpha, p)
    for c in (0.1, 2.0, 17.0):
        scaled = scale_functional(k, alpha, Probe(c * p.thetas, p.times))
        assert scaled == pytest.approx(c**0.8 * base, rel=1e-12)


def test_scale_permutation_invariance_exact():
    k = sawtooth_kernel(cells=64)
    alpha = AlphaSpec(1.4)
    p1 = Probe([0.4, -1.1, 0.3], [0.0, 0.5, -0.25])
    p2 = Probe([0.3, 0.4, -1.1], [-0.25, 0.0, 0.5])
    assert scale_functional(k, alpha, p1) == scale_functional(k, alpha, p2)


def test_scale_additivity_over_partition():
    k = sawtooth_kernel(cells=64)
    alpha = AlphaSpec(1.1)
    p = Probe([1.0, 0.2], [0.0, 1.0])
    mask = np.arange(k.n_atoms) % 3 == 0
    whole = scale_functional(k, alpha, p)
    parts = scale_functional(k.restrict(mask), alpha, p) + scale_functional(
        k.restrict(~mask), alpha, p
    )
    assert parts == pytest.approx(whole, rel=1e-12)


def test_scale_rotation_invariance_complex():
    spec = HarmonizableSpec(WeightedAtomSpace((0.3, 2.0), [1.0, 0.7]))
    k = build_harmonizable_kernel(spec, TimeGrid(INTEGER, 4))
    alpha = AlphaSpec(1.2, COMPLEX)
    p = Probe([0.3 + 0.4j, -1.0 + 0.1j], [0, 2])
    base = scale_functional(k, alpha, p)
    for gam in (0.5, 2.0, np.pi):
        rotated = Probe(np.exp(1j * gam) * p.thetas, p.times)
        assert scale_functional(k, alpha, rotated) == pytest.approx(base, rel=1e-12)


def test_scale_mode_checks():
    k = sawtooth_kernel(cells=16)
    with pytest.raises(ModeMismatch):
        scale_functional(k, AlphaSpec(1.0, COMPLEX), Probe([1.0], [0.0]))
    with pytest.raises(ModeMismatch):
        scale_functional(k, AlphaSpec(1.0), Probe([1.0 + 1.0j], [0.0]))
    with pytest.raises(OffGridError):
        scale_functional(k, AlphaSpec(1.0), Probe([1.0], [0.3]))
    empty = k.restrict(np.zeros(k.n_atoms, bool))
    assert scale_functional(empty, AlphaSpec(1.0), Probe([1.0], [0.0])) == 0.0


# --------------------------------------------------------------- stationarity


def test_sawtooth_stationary_at_integer_shifts_exactly():
    k = sawtooth_kernel(cells=128)
    probes = generate_probes(k.grid, REAL, count=8, max_abs_time=1.0)
    rep = check_stationarity(k, AlphaSpec(1.2), probes, [1.0, -1.0])
    assert rep.max_deviation == 0.0


def test_harmonizable_stationary():
    spec = HarmonizableSpec(WeightedAtomSpace((0.3, 1.9, 5.1), [1.0, 0.5, 0.25]))
    k = build_harmonizable_kernel(spec, TimeGrid(INTEGER, 8))
    probes = generate_probes(k.grid, COMPLEX, count=8, max_abs_time=4)
    rep = check_stationarity(k, AlphaSpec(0.9, COMPLEX), probes, [1, 2, -3])
    assert rep.passed and rep.max_deviation <= 1e-9


def test_nonstationary_kernel_is_reported():
    g = TimeGrid(INTEGER, 4)
    ramp = (g.times + 10.0)[:, None] * np.ones((1, 2))
    k = KernelGrid(WeightedAtomSpace(("a", "b"), [1.0, 1.0]), g, ramp, REAL)
    rep = check_stationarity(k, AlphaSpec(1.0), ProbeSet((Probe([1.0], [0]),)), [1])
    assert not rep.passed and rep.max_deviation > 0.01


# ------------------------------------------------------ equality in distribution


def test_equal_in_distribution_reflexive():
    k = sawtooth_kernel(cells=32)
    probes = generate_probes(k.grid, REAL, count=8, max_abs_time=1.0)
    rep = check_equal_in_distribution(k, k, 1.0, AlphaSpec(1.0), probes, tol=0.0)
    assert rep.passed and rep.max_deviation == 0.0


@pytest.mark.parametrize("alpha", [0.5, 1.0, 1.5])
def test_lemma_cyclic_form_of_harmonizable(alpha):
    # cyclic rewrite of a spectrum equals the harmonizable process at 2^{1/alpha}
    freqs = (0.4, 1.7, 2.9)
    spec = HarmonizableSpec(WeightedAtomSpace(freqs, [1.0, 0.25, 0.6]))
    grid = TimeGrid(INTEGER, 8)
    k_harm = build_harmonizable_kernel(spec, grid)
    k_cyc = build_periodic_kernel(harmonizable_as_cyclic(spec, 64, mode=INTEGER), grid)
    probes = generate_probes(grid, COMPLEX, count=16, max_abs_time=4)
    rep = check_equal_in_distribution(
        k_cyc, k_harm, 2.0 ** (1 / alpha), AlphaSpec(alpha, COMPLEX), probes, tol=1e-9
    )
    assert rep.passed, rep.max_deviation


def test_cosine_kernel_equals_real_part_of_harmonizable():
    # small version of the identity behind the cos kernel: tolerance set by
    # the fiber quadrature at 256 cells
    alpha = 1.0
    zs = np.asarray([0.7, -1.3])
    masses = np.asarray([1.0, 0.4])
    base = WeightedAtomSpace(tuple(zs), masses)
    spec = PeriodicKernelSpec(
        base,
        np.full(2, 2 * np.pi),
        np.ones(2),
        lambda z, u: np.cos(np.asarray(u)),
        np.full(2, 256),
        mode=REAL_GRID,
        speed=zs,
    )
    grid = TimeGrid(REAL_GRID, 16, 0.25)
    k_cos = build_periodic_kernel(spec, grid)
    k_harm = build_harmonizable_kernel(HarmonizableSpec(base), grid)
    probes = generate_probes(grid, REAL, count=16, max_abs_time=2.0)
    rep = check_equal_in_distribution(
        k_cos, k_harm, (2 * np.pi) ** (1 / alpha), AlphaSpec(alpha), probes, tol=1e-3
    )
    assert rep.passed, rep.max_deviation


def test_equal_in_distribution_negative_control():
    k = sawtooth_kernel(cells=32)
    probes = generate_probes(k.grid, REAL, count=8, max_abs_time=1.0)
    rep = check_equal_in_distribution(k, k, 2.0, AlphaSpec(1.0), probes, tol=1e-6)
    assert not rep.passed


# -------------------------------------------------------------------- probes


def test_generate_probes_deterministic_and_valid():
    grid = TimeGrid(REAL_GRID, 16, 0.125)
    a = generate_probes(grid, REAL, count=32)
    b = generate_probes(grid, REAL, count=32)
    assert len(a) == 32
    for pa, pb in zip(a, b):
        assert np.array_equal(pa.thetas, pb.thetas)
        assert np.array_equal(pa.times, pb.times)
    a.validate_on(grid)
    c = generate_probes(grid, COMPLEX, count=4, seed=1)
    assert all(np.iscomplexobj(p.thetas) for p in c)
    assert all(np.max(np.abs(p.thetas)) <= 1.0 for p in c)


# ----------------------------------------------------------------- simulation


def test_lepage_deterministic():
    k = sawtooth_kernel(cells=32, hw=8, step=0.25)
    cfg = SimulationConfig(seed=7, series_terms=500, paths=4)
    a = lepage_simulate(k, AlphaSpec(1.2), cfg)
    b = lepage_simulate(k, AlphaSpec(1.2), cfg)
    assert np.array_equal(a, b)
    c = lepage_simulate(k, AlphaSpec(1.2), SimulationConfig(8, 500, 4))
    assert not np.array_equal(a, c)


def test_lepage_sawtooth_paths_have_exact_unit_period():
    k = sawtooth_kernel(cells=64, hw=8, step=0.25)
    cfg = SimulationConfig(seed=3, series_terms=2000, paths=20)
    paths = lepage_simulate(k, AlphaSpec(1.1), cfg)
    shift = k.grid.index_of(1.0) - k.grid.index_of(0.0)
    assert np.array_equal(paths[:, shift:], paths[:, :-shift])


def test_lepage_empirical_characteristic_function():
    # scale_functional is the oracle for the simulated law of X(0)
    g = TimeGrid(INTEGER, 2)
    space = WeightedAtomSpace(("a", "b", "c"), [0.3, 0.15, 0.05])
    vals = np.tile(np.asarray([1.0, -0.7, 0.4]), (g.n_times, 1))
    k = KernelGrid(space, g, vals, REAL)
    alpha = AlphaSpec(1.2)
    sig = scale_functional(k, alpha, Probe([1.0], [0]))
    cfg = SimulationConfig(seed=123, series_terms=4000, paths=4000)
    x0 = lepage_simulate(k, alpha, cfg)[:, g.index_of(0)]
    for theta in (0.5, 1.0, 2.0):
        emp = np.mean(np.cos(theta * x0))
        se = np.std(np.cos(theta * x0)) / np.sqrt(cfg.paths)
        target = np.exp(-sig * theta**1.2)
        assert abs(emp - target) <= 3 * se


def test_lepage_degenerate_rejected():
    k = sawtooth_kernel(cells=8)
    empty = k.restrict(np.zeros(k.n_atoms, bool))
    with pytest.raises(DegenerateKernelError):
        lepage_simulate(empty, AlphaSpec(1.0), SimulationConfig(1, 10, 1))


# ----------------------------------------------------------------- diagnostics


def test_period_diagnostic_sawtooth_zero():
    k = sawtooth_kernel(cells=32, hw=8, step=0.25)
    d = pathwise_period_diagnostic(
        k, AlphaSpec(1.3), SimulationConfig(5, 1000, 10), period=1.0
    )
    assert d.max_abs_delta == 0.0


def test_period_diagnostic_constant_kernel_zero():
    g = TimeGrid(INTEGER, 4)
    k = KernelGrid(WeightedAtomSpace(("a",), [1.0]), g, np.ones((g.n_times, 1)), REAL)
    d = pathwise_period_diagnostic(k, AlphaSpec(1.0), SimulationConfig(2, 200, 5), 2)
    assert d.max_abs_delta == 0.0


def test_period_diagnostic_moving_average_positive():
    base = WeightedAtomSpace(("x",), [1.0])
    k = build_moving_average_kernel([1.0, 0.5, 0.25], base, TimeGrid(INTEGER, 6))
    d = pathwise_period_diagnostic(k, AlphaSpec(1.2), SimulationConfig(9, 500, 10), 1)
    assert d.max_abs_delta > 0.0
