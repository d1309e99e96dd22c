"""Critical exponents of multicurve transition matrices and combinatorial moduli."""

from confdim.covers import (
    AnnulusMark,
    CoverDynamics,
    CoveringMapData,
    Disk,
    EmbeddedCover,
    GrowthBoundReport,
    PackingResult,
    ScalingReport,
    Square,
    annulus_modulus,
    cyclic_cover,
    essential_cycle_family,
    essential_cycle_oracle,
    grid_annulus,
    induced_cover,
    lattes_model,
    quasipacking_check,
    refine,
    roundness,
    verify_covering_scaling,
    verify_growth_bound,
)
from confdim.modulus import (
    BeurlingCertificate,
    CombCurve,
    Cover,
    CurveFamily,
    ModulusResult,
    SubadditivityReport,
    WeightVector,
    beurling_check,
    explicit_family,
    incidence_matrix,
    modulus,
    rho_length,
    rho_volume,
    verify_monotonicity,
    verify_subadditivity,
    weighted_modulus,
)
from confdim.multicurve import (
    CatalogReport,
    Essential,
    IrreducibleCore,
    MulticurveSpec,
    PreimageComponent,
    QResult,
    contains_irreducible,
    detect_levy_cycles,
    irreducible_core,
    lattes_spec,
    leading_eigenvalue,
    q_of_map,
    q_of_multicurve,
    restrict_spec,
    transition_matrix,
)
from confdim.schemas import (
    SCHEMA_VERSION,
    SchemaError,
    parse_catalog,
    parse_cover_family,
    parse_multicurve,
    render_csv,
    render_json,
)
from confdim.spectral import (
    ConvergenceError,
    Decomposition,
    NonNegMatrix,
    decompose,
    is_irreducible,
    leading_block,
    pf_eigenvector,
    spectral_radius,
)

__all__ = [
    "AnnulusMark",
    "BeurlingCertificate",
    "CatalogReport",
    "CombCurve",
    "ConvergenceError",
    "Cover",
    "CoverDynamics",
    "CoveringMapData",
    "CurveFamily",
    "Decomposition",
    "Disk",
    "EmbeddedCover",
    "Essential",
    "GrowthBoundReport",
    "IrreducibleCore",
    "ModulusResult",
    "MulticurveSpec",
    "NonNegMatrix",
    "PackingResult",
    "PreimageComponent",
    "QResult",
    "SCHEMA_VERSION",
    "ScalingReport",
    "SchemaError",
    "Square",
    "SubadditivityReport",
    "WeightVector",
    "annulus_modulus",
    "beurling_check",
    "contains_irreducible",
    "cyclic_cover",
    "decompose",
    "detect_levy_cycles",
    "essential_cycle_family",
    "essential_cycle_oracle",
    "explicit_family",
    "grid_annulus",
    "incidence_matrix",
    "induced_cover",
    "irreducible_core",
    "is_irreducible",
    "lattes_model",
    "lattes_spec",
    "leading_block",
    "leading_eigenvalue",
    "modulus",
    "parse_catalog",
    "parse_cover_family",
    "parse_multicurve",
    "pf_eigenvector",
    "q_of_map",
    "q_of_multicurve",
    "quasipacking_check",
    "refine",
    "render_csv",
    "render_json",
    "restrict_spec",
    "rho_length",
    "rho_volume",
    "roundness",
    "spectral_radius",
    "transition_matrix",
    "verify_covering_scaling",
    "verify_growth_bound",
    "verify_monotonicity",
    "verify_subadditivity",
    "weighted_modulus",
]

__version__ = "0.1.0"
