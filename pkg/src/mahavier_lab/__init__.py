"""Shift dynamics on Mahavier products of closed relations on interval unions.

Modules
-------
space_relation
    Interval-union spaces, monotone branch maps, closed relations, never-connect pairs.
mahavier_words
    Finite words of the one- and two-sided products, shifts, cylinders, impressions.
chaos_diagnostics
    Checkable certificates: transitivity, stutter-padded mixing, periodic and
    sensitivity witnesses, spine quotients.
fan_geometry
    Lelek-fan legs and endpoints, Cantor-fan quotients, SVG rendering.
"""

from .space_relation import (
    BUILTINS,
    SPINES,
    BranchMap,
    ClosedRelation,
    DomainError,
    IntervalUnion,
    NCPair,
    builtin_relation,
    is_never_connect,
    load_relation,
)
from .mahavier_words import (
    Cylinder,
    ForwardWord,
    TwoSidedWord,
    delta_density,
    forward_impression,
    forward_metric,
    shift_forward,
    shift_two_sided,
    two_sided_metric,
    validate_word,
)
from .chaos_diagnostics import (
    SPINE,
    MixingPadCertificate,
    PeriodicWitness,
    PreconditionError,
    SensitivityWitness,
    WitnessError,
    diagonal_collapse,
    diagonal_expand,
    mixing_pad,
    non_transitivity_witness,
    periodic_point_from_witness,
    periodic_witness_devaney5,
    periodic_witness_search,
    quotient_canonical,
    quotient_compatibility_check,
    sensitivity_witness,
    sensitivity_witness_robinson3,
    transitivity_certificate,
)
from .fan_geometry import (
    FanApproximation,
    LegAddress,
    cantor_quotient_embed,
    endpoint_density_probe,
    endpoint_extension,
    endpoint_sup,
    leg_point,
    lelek_approximation,
    render_fan,
    t_max,
)

__version__ = "0.1.0"
