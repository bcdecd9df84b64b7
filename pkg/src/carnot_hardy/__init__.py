"""Horizontal vector fields, homogeneous gauges and explicit Hardy-constant
lower bounds on step-two Carnot groups."""

from .groups import (CenterError, HVector, Point, ScalarField, StepTwoGroup,
                     dilate, euler_apply, general_group, group_inverse, group_law,
                     heisenberg, heisenberg_product, horizontal_divergence,
                     horizontal_gradient, lambda_min, nonisotropic)
from .norms import (CCPolar, ConvergenceError, NormModel, balogh_tyson,
                    balogh_tyson_value, cc, cc_dt, cc_from_polar, cc_hgrad,
                    cc_invert, cc_value, koranyi, koranyi_B_value, koranyi_b,
                    koranyi_hgrad, koranyi_value, make_norm)
from .zfield import (SupResult, ZFieldSpec, g_cc, golden_section_max,
                     koranyi_profile_max, sup_z_norm, symplectic_norm, z_field_at,
                     z_profile_koranyi)
from .bounds import (BoundReport, bound_cc, bound_generic, bound_koranyi,
                     bound_koranyi_B, bound_product)

__version__ = "0.1.0"
