from src.models.affine_model import (
    AffineDecomposition as AffineDecomposition,
    DistortionBound as DistortionBound,
)
from src.models.geometry_model import (
    DirectedLine as DirectedLine,
    Epipole as Epipole,
    FundamentalMatrix as FundamentalMatrix,
    Similarity2 as Similarity2,
)
from src.models.irls_model import (
    EnergyRecord as EnergyRecord,
    IRLSConfig as IRLSConfig,
    SolveReport as SolveReport,
)
from src.models.matching_model import (
    FeatureSet as FeatureSet,
    FundamentalEstimate as FundamentalEstimate,
    MatchParams as MatchParams,
    MatchSet as MatchSet,
    RansacParams as RansacParams,
)
from src.models.mesh_model import (
    EpipolarTriangulation as EpipolarTriangulation,
    GridConfig as GridConfig,
    ImageRect as ImageRect,
)
from src.models.program_model import (
    ConeRows as ConeRows,
    EBDProgramSpec as EBDProgramSpec,
    LinearRows as LinearRows,
    MatchTerm as MatchTerm,
    PLMap as PLMap,
)
from src.models.run_model import RunConfig as RunConfig
from src.models.scene_model import (
    BaselineStep as BaselineStep,
    EvalReport as EvalReport,
    GroundTruth as GroundTruth,
    Patch as Patch,
    SceneSpec as SceneSpec,
)
from src.models.solver_model import (
    ConeBlocks as ConeBlocks,
    ConicProblem as ConicProblem,
    SolverResult as SolverResult,
)
