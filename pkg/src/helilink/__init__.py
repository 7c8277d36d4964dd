"""Numerical laboratory for asymptotic linking numbers and helicity of
exactly divergence-free flux-tube fields on R^3."""

from .fields import AABB, FieldSpec, TubeSpec, canonical_tube, make_hopf_pair
from .flow import (FlowError, StepControl, Trajectory, flow_jacobian_det,
                   integrate, integrate_batch, resample)
from .linking import (ClosedCurve, GenericityError, LinkingResult,
                      ProximityError, SingularKernelError, close_curve,
                      crossing_linking, crossing_linking_any, gauss_linking,
                      kernel, link_curves, min_distance, polyline_circle,
                      short_path_terms)

__version__ = "0.1.0"

__all__ = [
    "AABB", "FieldSpec", "TubeSpec", "canonical_tube", "make_hopf_pair",
    "FlowError", "StepControl", "Trajectory", "flow_jacobian_det",
    "integrate", "integrate_batch", "resample",
    "ClosedCurve", "GenericityError", "LinkingResult", "ProximityError",
    "SingularKernelError", "close_curve", "crossing_linking",
    "crossing_linking_any", "gauss_linking", "kernel", "link_curves",
    "min_distance", "polyline_circle", "short_path_terms",
]
