"""Phase-field two-phase flow simulator with sharp-interface diagnostics."""

from .potential import PotentialSpec, eval_W, eval_W_prime, eval_psi, optimal_profile, sigma
from .geometry import (CalibrationParams, Circle, Line, B_field, xi_field,
                       vartheta_field, signed_distance, closest_point,
                       normal_extension, curvature_extension)
from .fields import Grid, ScalarField, VectorField
from .reference import ShrinkingCircle, StaticLine, TranslatingCircle
from .solver import FieldState, NsacParams, energy, step, well_prepared_data
from .diagnostics import (EntropyParams, EntropyReport, bulk_error,
                          coercivity_suite, extract_interface,
                          interface_distance, relative_entropy)
from .harness import SweepConfig, fit_rate, parse_config, run_case, run_sweep

__version__ = "0.1.0"
