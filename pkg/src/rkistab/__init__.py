"""Internal stability analysis of explicit Runge-Kutta methods."""

from .forms import (ButcherTableau, ResidualVector, ShuOsherForm,
                    butcher_to_shu_osher, residual_butcher_from_shu_osher,
                    shu_osher_to_butcher, validate)
from .poly import Poly, taylor_exp
from .stability import (DefectCoefficients, DegreeMismatch,
                        InternalStabilitySet, SpanFailure,
                        defect_coefficients, derive_internal_stability,
                        derive_internal_stability_butcher,
                        retarget_implementation)
from .region import StabilityRegion, contains, max_abs_z, trace_region
from .amplification import (AmplificationReport, Ssp3Analysis,
                            amplification_at_zero, amplification_factor,
                            amplification_closed_form_ee_zero,
                            amplification_closed_form_em_zero,
                            ssp3_analytic, verify_bounds)
from .catalog import (MethodSpec, build, build_ee_extrapolation,
                      build_em_extrapolation, build_ssp2, build_ssp3,
                      classic_tableau, internal_stability_closed_form)

__version__ = "0.1.0"
