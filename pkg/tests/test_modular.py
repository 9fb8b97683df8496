import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from stableflow.modular import floor_mult, frac_mult

finite_x = st.floats(min_value=-1e6, max_value=1e6, allow_nan=False)
modulus = st.floats(min_value=1e-3, max_value=1e3, allow_nan=False)


def test_examples_floor():
    assert floor_mult(7.5, 2) == 3
    assert floor_mult(-0.5, 2) == -1
    for a in (0.1, 1.0, 7.25):
        assert floor_mult(0.0, a) == 0


def test_examples_frac():
    assert frac_mult(7.5, 2) == 1.5
    assert frac_mult(-0.5, 2) == 1.5
    for k in (-3, 0, 5):
        assert frac_mult(k * 0.25, 0.25) == 0.0


def test_integer_inputs_stay_exact():
    assert floor_mult(10**15 + 1, 7) == (10**15 + 1) // 7
    assert frac_mult(10**15 + 1, 7) == (10**15 + 1) % 7
    assert isinstance(frac_mult(-5, 3), int)


def test_rejects_nonpositive_modulus():
    with pytest.raises(ValueError):
        floor_mult(1.0, 0.0)
    with pytest.raises(ValueError):
        frac_mult(1.0, -2.0)


def test_vectorized_matches_scalar():
    rng = np.random.default_rng(5)
    x = rng.uniform(-50, 50, 200)
    a = 0.75
    nv = floor_mult(x, a)
    rv = frac_mult(x, a)
    for xi, ni, ri in zip(x, nv, rv):
        assert floor_mult(float(xi), a) == ni
        assert frac_mult(float(xi), a) == ri


@given(finite_x, modulus)
@settings(max_examples=500)
def test_range_property(x, a):
    r = frac_mult(x, a)
    assert 0.0 <= r < a


@given(finite_x, modulus)
@settings(max_examples=500)
def test_floor_definition(x, a):
    n = floor_mult(x, a)
    # max{n : n*a <= x}, allowing the snap zone around lattice points
    tol = 1e-12 * a
    assert n * a <= x + tol
    assert (n + 1) * a > x - tol


@given(finite_x, modulus)
@settings(max_examples=500)
def test_reconstruction_within_ulp(x, a):
    back = a * floor_mult(x, a) + frac_mult(x, a)
    assert abs(back - x) <= max(np.spacing(abs(x)), 1e-12 * a)


@given(finite_x, modulus)
@settings(max_examples=300)
def test_shift_by_period(x, a):
    # floating-point shifts x+a round, so allow a few ulps
    slack = 4 * max(np.spacing(abs(x) + a), np.spacing(a))
    assert abs(frac_mult(x + a, a) - frac_mult(x, a)) <= slack or (
        # wrap-around at the lattice boundary
        abs(abs(frac_mult(x + a, a) - frac_mult(x, a)) - a) <= slack
    )
    assert floor_mult(x + a, a) in (floor_mult(x, a) + 1, floor_mult(x, a))


@given(
    st.floats(min_value=0, max_value=100, allow_nan=False),
    st.floats(min_value=-8, max_value=8, allow_nan=False),
    st.floats(min_value=-10, max_value=10, allow_nan=False),
    st.floats(min_value=-10, max_value=10, allow_nan=False),
    st.floats(min_value=0.5, max_value=20, allow_nan=False),
)
@settings(max_examples=400)
def test_flow_composition_identity(v, s, t1, t2, q):
    # [v + s(t1+t2)]_q = [v + s t1]_q + [{v + s t1}_q + s t2]_q
    lhs = floor_mult(v + s * (t1 + t2), q)
    rhs = floor_mult(v + s * t1, q) + floor_mult(frac_mult(v + s * t1, q) + s * t2, q)
    assert lhs == rhs


def test_snap_zone_prevents_off_by_one():
    a = 0.1
    x = 3 * a - 1e-14  # just below the lattice point, inside the snap zone
    assert floor_mult(x, a) == 3
    assert frac_mult(x, a) == 0.0
