"""heislab: exact Heisenberg/symplectic group arithmetic, fundamental-set
reduction, lattice point counting for curve neighborhoods, weakly special
classification in fibers, and torsion-orbit index bounds."""

__version__ = "0.1.0"

from .arith import euler_phi, euler_product, omega
from .counting import (
    GrowthFit,
    QuadratureError,
    ResolutionConfig,
    ThetaRecord,
    curve_volume,
    default_resolution,
    fit_growth,
    harvest_stabilizer,
    theta_count,
)
from .curves import ParamCurve, Qi
from .domain import (
    DomainPoint,
    FundamentalSet,
    InvalidDomainElement,
    ReductionError,
    act,
    in_fundamental_set,
    reduce_point,
    reduction_residual,
    sl2_reduce,
)
from .groups import (
    GroupElement,
    HeisenbergElement,
    NotASimilitude,
    SymplecticDatum,
    element_from_json,
    element_to_json,
    in_congruence_subgroup,
    integral_order,
    is_commutative,
    p_inv,
    p_mul,
    p_pow,
    similitude,
    standard_symplectic_form,
    w_commutator,
    w_inv,
    w_mul,
)
from .lattices import Lattice, hnf, smith_diagonal, snf
from .orbit import (
    GuardError,
    LocalIndexCase,
    SpecialPointData,
    cross_check_index,
    index_lower_bound,
    local_index_bruteforce,
    orbit_bound_factor,
    order_of_special_point,
    sweep_orbit_bound,
)
from .rational import Rat, RatMat, RatVec, as_rat, height
from .special import (
    ClassificationVerdict,
    ComplexStructure,
    MonodromyData,
    TranslationStabilizer,
    WeaklySpecialCandidate,
    half_psi_integrality,
    is_weakly_special_fiber,
    smallest_subabelian,
    smallest_subtorus,
    translation_stabilizer,
)
