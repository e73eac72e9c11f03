"""Identification analysis on finite universes.

A problem is a universe of states, an observation map and an estimand
map.  The estimand is identified at an observation when exactly one
estimand value is compatible with it; otherwise the compatible values
form its identification region, computed here by brute-force enumeration
or by LP extremization over distribution polytopes.
"""

from .case_studies import (
    CausalPoint,
    DiscreteCdf,
    MissingDataPoint,
    assignment_envelope,
    causal_ate_bounds,
    finite_pop_ate_region,
    frechet_bounds,
    joint_cdf_lp,
    joint_cdf_region,
    manski_bounds,
    mixture_region,
)
from .distributions import JointModel, Observation, bounded, fixed, independent, randomized
from .dsl import ProblemSpec, parse, render
from .errors import (
    DSLSyntaxError,
    DuplicateDeclaration,
    EmptyUniverse,
    EnumerationOverflow,
    IdentError,
    Infeasible,
    InconsistentObservation,
    InvalidPoint,
    NonMonotoneCombiner,
    NotLinearizable,
    OutOfRange,
    OutOfSupport,
    SpecError,
    UncertifiedInput,
    UnknownIdentifier,
    UnreachableObservation,
)
from .regions import (
    ExplicitSet,
    Interval,
    ReducedForm,
    RefutabilityVerdict,
    compose_identifiable,
    identify_by_enumeration,
    identify_by_function,
    is_strongly_nonidentifiable,
    materialize,
    reduced_form,
    refutability,
    region_enumerate,
    region_lp,
)
from .relation import (
    BinaryRelation,
    PropertyReport,
    check_properties,
    identifiable_at,
    identifiable_everywhere,
    induce,
    preimage,
)
from .universe import (
    Assumption,
    DistributionGridUniverse,
    ExplicitUniverse,
    FinitePopulationUniverse,
    GridAxis,
    GridUniverse,
    PolytopeUniverse,
    finite_population,
    restrict,
)
from .values import Value, equality_tolerance, quantize

__version__ = "0.1.0"

__all__ = [
    "Assumption",
    "BinaryRelation",
    "CausalPoint",
    "DSLSyntaxError",
    "DiscreteCdf",
    "DistributionGridUniverse",
    "DuplicateDeclaration",
    "EmptyUniverse",
    "EnumerationOverflow",
    "ExplicitSet",
    "ExplicitUniverse",
    "FinitePopulationUniverse",
    "GridAxis",
    "GridUniverse",
    "IdentError",
    "InconsistentObservation",
    "Infeasible",
    "Interval",
    "InvalidPoint",
    "JointModel",
    "MissingDataPoint",
    "NonMonotoneCombiner",
    "NotLinearizable",
    "Observation",
    "OutOfRange",
    "OutOfSupport",
    "PolytopeUniverse",
    "ProblemSpec",
    "PropertyReport",
    "ReducedForm",
    "RefutabilityVerdict",
    "SpecError",
    "UncertifiedInput",
    "UnknownIdentifier",
    "UnreachableObservation",
    "Value",
    "assignment_envelope",
    "bounded",
    "causal_ate_bounds",
    "check_properties",
    "compose_identifiable",
    "equality_tolerance",
    "finite_pop_ate_region",
    "finite_population",
    "fixed",
    "frechet_bounds",
    "identifiable_at",
    "identifiable_everywhere",
    "identify_by_enumeration",
    "identify_by_function",
    "independent",
    "induce",
    "is_strongly_nonidentifiable",
    "joint_cdf_lp",
    "joint_cdf_region",
    "manski_bounds",
    "materialize",
    "mixture_region",
    "parse",
    "preimage",
    "quantize",
    "randomized",
    "reduced_form",
    "refutability",
    "region_enumerate",
    "region_lp",
    "render",
    "restrict",
]
