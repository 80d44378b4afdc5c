"""Short-memory fractional-order systems: operators, solvers and stability checks."""

from fracwin.analysis import (
    ComparisonReport,
    LyapunovCandidate,
    StabilityReport,
    StructuralSpec,
    check_theorem4,
    check_theorem5,
    compare_theorem3,
    lemma5_condition,
    shift_equilibrium,
)
from fracwin.core import (
    Order,
    Trajectory,
    UniformGrid,
    Window,
    caputo_l1,
    memory_threshold,
    rl_integral,
    short_memory_l1,
)
from fracwin.errors import (
    AlignmentError,
    ConfigError,
    DomainError,
    EquilibriumError,
    FracwinError,
    GridError,
    SampleOverflowError,
)
from fracwin.scenario import ScenarioConfig, load_config, resolve, run, run_sweep
from fracwin.solver import (
    DelayLinearSystem,
    ShortMemorySystem,
    SolveConfig,
    VectorField,
    residual_check,
    solve_caputo,
    solve_caputo_delay,
    solve_short_memory,
)
from fracwin.sysdsl import ParseError, parse, parse_expr, pretty

__version__ = "0.1.0"
