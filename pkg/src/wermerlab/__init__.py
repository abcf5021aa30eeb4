"""Numerical laboratory for recursive squaring towers of polynomials.

Exact rational schedules with certified log-space twins, interval-certified
slice geometry (roots, component atlases, nesting), plurisubharmonic
potentials and their slice measures, gauge calculus, and a reproducible CSV
artifact pipeline. See README.md for the command-line surface.
"""

from .errors import (
    BackendUnavailable,
    BudgetExceeded,
    CertificationFailure,
    ContainsZero,
    DivergentGauge,
    DomainExit,
    EnumerationCapExceeded,
    GaugeTooWeak,
    Inconclusive,
    InvalidSchedule,
    NotOrdinary,
    RangeError,
    ScaleOverlap,
    WermerlabError,
)
from .numeric import (
    ExactComplex,
    Inclusion,
    IntervalComplex,
    PrecisionContext,
    precision_for_depth,
)
from .schedule import (
    ParameterSchedule,
    ScheduleReport,
    build_schedule,
    capacity_drift,
    choose_m,
    recheck_estimates,
    schedule_records,
    validate_schedule,
    verify_m_choice,
)
from .tower import (
    AnchorSequence,
    MembershipResult,
    Signature,
    TowerModel,
    all_signatures,
    eval_P,
    eval_dP,
    eval_u,
    eval_v,
    membership_depth,
    sigma_grid,
    signature_count,
)
from .slicer import (
    ComponentRecord,
    MassProfile,
    NestingCertificate,
    ObstructionLog,
    Raster,
    SelectionWitness,
    SliceMeasure,
    SlicePlane,
    SliceRootSet,
    mass_profile,
    nesting_certificate,
    render_escape,
    slice_components,
    slice_measure,
    slice_poly_coeffs,
    slice_roots,
    winding_probe,
)
from .gauges import GaugeFunction, modulus_from_h, tame_gauge
from .analysis import (
    ConvergenceReport,
    DimensionEstimate,
    TwoRegimeReport,
    L_potential,
    box_dimension_slice,
    circle_average_T,
    convergence_report,
    harmonic_gap_check,
    interior_sup_check,
    jensen_cross_check,
    nu_ball_mass,
    two_regime_check,
)
from .acceptance import CriterionResult, run_all, run_criterion

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
