"""Volume distance and affine normal-form measurements on convex bodies.

The volume distance of an interior point is the smallest volume a plane
through the point can cut off the body. This package computes it with
certified critical pairs (the minimizing plane passes through the centroid
of its own section), differentiates it, normalizes boundary points into
equiaffine normal form, and measures the asymptotic expansion of the
normalized section Hessian along the affine normal against the closed-form
prediction of the shape form.

Layers: exact polynomial geometry (:mod:`voldist.geometry`), spectral
section quadrature (:mod:`voldist.sections`, :mod:`voldist.quadrature`),
the distance solver (:mod:`voldist.distance`), the normalization chain
(:mod:`voldist.normal_form`), ladders and fits
(:mod:`voldist.asymptotics`), and a service layer
(:mod:`voldist.scenarios`, :mod:`voldist.service`, :mod:`voldist.cli`).
"""

__version__ = "0.1.0"

from .asymptotics import (ExpansionFit, Ladder, LadderRung, PowerFit,
                          build_ladder, fit_expansion, ladder_reach,
                          power_fit)
from .distance import (HessV, IdentityCheck, MinimizingPair, cap_volume,
                       grad_v, hess_v, hessian_identity_check,
                       minimize_direction, volume_distance)
from .errors import (ComputationFailed, ConfigInvalid, DegenerateSection,
                     DomainExceeded, InsufficientLadder, MaxIterations,
                     NoIntersection, NonpositiveDepth, NotConvex, NotInside,
                     NotOnSurface, NotPositiveDefinite, NotTransversal,
                     SingularMap, StepTooLarge, UnboundedCap,
                     UnsupportedDimension, VoldistError)
from .geometry import (AffineImage, AffineMap, Body, Ellipsoid, Jet4,
                       PlaneFrame, QuarticGraph, apply_affine,
                       body_from_dict, graph_jet4, make_frame, ray_cast,
                       surface_normal)
from .models import (CheckResult, RunResponse, ScenarioConfig)
from .normal_form import (NormalForm, ShapeForm, affine_normal,
                          blaschke_metric, conormal, normalize_at,
                          shape_form)
from .scenarios import run_scenario
from .sections import (SectionMeasures, SectionProfile, section_measures,
                       section_profile)

__all__ = [
    "__version__",
    "AffineImage", "AffineMap", "Body", "CheckResult", "ComputationFailed",
    "ConfigInvalid", "DegenerateSection", "DomainExceeded", "Ellipsoid",
    "ExpansionFit", "HessV", "IdentityCheck", "InsufficientLadder", "Jet4",
    "Ladder", "LadderRung", "MaxIterations", "MinimizingPair",
    "NoIntersection", "NonpositiveDepth", "NormalForm", "NotConvex",
    "NotInside", "NotOnSurface", "NotPositiveDefinite", "NotTransversal",
    "PlaneFrame", "PowerFit", "QuarticGraph", "RunResponse",
    "ScenarioConfig", "SectionMeasures", "SectionProfile", "ShapeForm",
    "SingularMap", "StepTooLarge", "UnboundedCap", "UnsupportedDimension",
    "VoldistError", "affine_normal", "apply_affine", "blaschke_metric",
    "body_from_dict", "build_ladder", "cap_volume",
    "conormal", "fit_expansion", "grad_v", "graph_jet4", "hess_v",
    "hessian_identity_check", "ladder_reach", "make_frame",
    "minimize_direction", "normalize_at", "power_fit", "ray_cast",
    "run_scenario", "section_measures", "section_profile", "shape_form",
    "surface_normal", "volume_distance",
]
