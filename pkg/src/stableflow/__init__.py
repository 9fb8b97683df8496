"""stableflow: symmetric alpha-stable stationary processes on atom spaces.

Kernel/measure-space integral representations, flow and cocycle
machinery, component-set classification and the four-way decomposition,
with numeric verification of all distributional identities through
scale functionals and seeded LePage path simulation.
"""

from .measure import (
    INTEGER,
    REAL_GRID,
    Probe,
    ProbeSet,
    TimeGrid,
    WeightedAtomSpace,
    discretize_interval,
    product_space,
    restrict,
)
from .modular import floor_mult, frac_mult
from .flows import (
    CanonicalCyclicFlow,
    Cocycle,
    CyclicFlowSpec,
    PermutationFlow,
    SpecialFlowSpec,
    SpeedFlowSpec,
    canonicalize_cyclic_flow,
    check_cocycle_law,
    check_flow_law,
    classify_points,
    cyclic_cocycle_eval,
    cyclic_flow_apply,
    special_flow_apply,
    speed_flow_apply,
)
from .kernels import (
    COMPLEX,
    REAL,
    HarmonizableSpec,
    KernelGrid,
    PeriodicKernelSpec,
    build_harmonizable_kernel,
    build_moving_average_kernel,
    build_periodic_kernel,
    build_trivial_kernel,
    check_minimality,
    flow_generated_kernel,
    harmonizable_as_cyclic,
    rescale_speed_kernel,
)
from .stable import (
    AlphaSpec,
    SimulationConfig,
    c0_constant,
    check_equal_in_distribution,
    check_stationarity,
    generate_probes,
    lepage_simulate,
    pathwise_period_diagnostic,
    scale_functional,
    series_constant,
)
from .decompose import (
    classify_atoms,
    classify_process,
    decompose_four,
    detect_dissipative,
    detect_fixed,
    detect_period,
    flow_point_agreement,
)

__version__ = "0.1.0"
