"""Floor/fraction pair for a positive modulus.

For a > 0 the pair splits any real x as

    x = a * floor_mult(x, a) + frac_mult(x, a),   0 <= frac_mult(x, a) < a,

with ``floor_mult(x, a) = max{n integer : n*a <= x}``.  Every periodic
kernel and every cyclic-flow orbit in this package reduces to these two
functions, so they are kept exact: integer inputs never touch floating
point, and float inputs within ``SNAP_REL * a`` of a lattice point are
snapped onto it before flooring (an off-by-one period count would
corrupt the unimodular exponents downstream).
"""

from __future__ import annotations

import numpy as np

#: relative half-width of the lattice snap zone
SNAP_REL = 1e-12

__all__ = ["floor_mult", "frac_mult", "SNAP_REL"]


def _is_int(x) -> bool:
    return isinstance(x, (int, np.integer)) and not isinstance(x, bool)


def _floor_frac(x, a):
    """Shared kernel for floor_mult / frac_mult; see module docstring."""
    if _is_int(x) and _is_int(a):
        if a <= 0:
            raise ValueError("modulus a must be positive")
        n = x // a
        return int(n), int(x - n * a)

    xa = np.asarray(x, dtype=float)
    aa = np.asarray(a, dtype=float)
    if np.any(aa <= 0):
        raise ValueError("modulus a must be positive")

    n = np.floor(xa / aa)
    r = xa - n * aa
    # one correction pass fixes division-rounding off-by-one at lattice edges
    hi = r >= aa
    n = n + hi
    r = np.where(hi, r - aa, r)
    lo = r < 0
    n = n - lo
    r = np.where(lo, r + aa, r)
    # snap to the lattice: r in [0, tol] -> 0, r in [a - tol, a) -> next point
    tol = SNAP_REL * aa
    wrap = (aa - r) <= tol
    n = n + wrap
    r = np.where(wrap | (r <= tol), 0.0, r)

    if xa.ndim == 0 and aa.ndim == 0:
        return int(n), float(r)
    return np.asarray(n, dtype=np.int64), r


def floor_mult(x, a):
    """Largest integer n with n*a <= x (the bracket [x]_a).

    Accepts scalars or numpy arrays; integer inputs are handled in exact
    integer arithmetic.
    """
    return _floor_frac(x, a)[0]


def frac_mult(x, a):
    """Remainder x - a*floor_mult(x, a), always in [0, a) (the brace {x}_a)."""
    return _floor_frac(x, a)[1]
