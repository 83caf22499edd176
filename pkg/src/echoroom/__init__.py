"""Echo-based room geometry and trajectory reconstruction for convex 2-D rooms.

Simulates first-order echoes of a collocated source/receiver moving inside a
convex polygonal room, and recovers both the room and the measurement
locations from the (possibly noisy, possibly incomplete) echo distances.
"""

from . import errors
from .algebraic import solve_noiseless
from .ambiguity import (
    AmbiguousPair,
    CongruenceResult,
    make_collinear_family,
    make_parallelogram_family,
    rigid_congruence,
)
from .geometry import (
    RigidMotion,
    Room,
    Trajectory,
    Wall,
    apply_rigid_motion,
    gauge_normalize,
    room_from_vertices,
    room_vertices,
)
from .metrics import ErrorReport, align_and_score
from .rank import CompletionResult, RankReport, complete_matrix, rank_report
from .reconstruction import (
    GaugedUnknowns,
    Reconstruction,
    SolverDiagnostics,
    feasibility,
)
from .sim import (
    EchoMatrix,
    RirTrace,
    SimConfig,
    distance_of_toa,
    echo_matrix,
    image_source,
    render_rir,
    toa_of_distance,
    wall_distance,
)
from .stress import (
    BilinearForm,
    SolverOptions,
    StressProblem,
    restart_sampler,
    solve_auto,
    solve_stress,
    stress_cost,
    stress_gradient,
)

__version__ = "0.1.0"

__all__ = [
    "AmbiguousPair",
    "BilinearForm",
    "CompletionResult",
    "CongruenceResult",
    "EchoMatrix",
    "ErrorReport",
    "GaugedUnknowns",
    "RankReport",
    "Reconstruction",
    "RigidMotion",
    "RirTrace",
    "Room",
    "SimConfig",
    "SolverDiagnostics",
    "SolverOptions",
    "StressProblem",
    "Trajectory",
    "Wall",
    "align_and_score",
    "apply_rigid_motion",
    "complete_matrix",
    "distance_of_toa",
    "echo_matrix",
    "errors",
    "feasibility",
    "gauge_normalize",
    "image_source",
    "make_collinear_family",
    "make_parallelogram_family",
    "rank_report",
    "render_rir",
    "restart_sampler",
    "rigid_congruence",
    "room_from_vertices",
    "room_vertices",
    "solve_auto",
    "solve_noiseless",
    "solve_stress",
    "stress_cost",
    "stress_gradient",
    "toa_of_distance",
    "wall_distance",
]
