"""Nonlinear mass-spring model of soft tissue with Poisson-coupled lattice springs."""

from .elasticity import (
    CardError,
    ElasticityModel,
    ElasticityPiece,
    Material,
    adipose_model,
    arctan_model,
    build_from_points,
    load_card,
    preset,
    preset_adipose,
    preset_skin,
    read_knots_csv,
    save_card,
    skin_model,
)
from .experiment import (
    CurveComparison,
    ExperimentRecord,
    OracleError,
    TensionProtocol,
    TensionRun,
    build_load,
    compare_to_model,
    estimate_poisson,
    measure_strains,
    nominal_stress,
    run_tension,
    single_cell_oracle,
)
from .mesh import GridMesh, SpringInstance, bounding_box, boundary_nodes, build_grid
from .solver import (
    LoadCase,
    RelaxResult,
    SimulationDivergedError,
    SolverConfig,
    accumulate_forces,
    internal_forces,
    relax,
    step,
)
from .springs import (
    InconsistentGeometryError,
    SingularConfigurationError,
    SpringEval,
    SpringKind,
    compute_J,
    diag_force_scalar,
    diag_rest_length,
    edge_force_scalar,
    linear_spring_force,
    spring_force_vector,
    stretched_diag_length,
)

__version__ = "0.1.0"
