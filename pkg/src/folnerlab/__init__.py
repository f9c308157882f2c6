"""Følner averaging, almost-additive set maps and additive realizations on Z^d.

The compiled matrix-product kernels are used when the extension is built;
``BACKEND`` reports which implementation was selected at import.
"""
__version__ = "0.1.0"

from .kernels import BACKEND
from .lattice import (Box, InvarianceParams, Window, boundary_control_params, invariance_defect, is_invariant,
                      k_boundary, k_interior, product_set)
from .folner import (BoxTiling, CofinalScale, FolnerSequence, box_folner, folner_defect, invariance_level,
                     tempered_check, translated_box_folner, window_partition_by_tiling)
from .values import PwcFunction, ValueSpace, lattice_abs, lattice_join, lattice_meet, lp_norm
from .setmaps import (GroupAction, SetMap, asymptotic_seminorm, birkhoff_map, birkhoff_sum, equivariance_check,
                      ergodic_average, sup_seminorm)
from .additivity import (ErrorMap, RieszErrorMap, certify_almost_additive, certify_riesz_almost_additive,
                         counterexample_map, derive_error_from_realization, regularize_error_map)
from .realization import (Certificate, NoAdmissibleTile, coboundary_residual, extract_realization,
                          realization_difference_test, three_term_bound_check, verify_realization)
from .sequences import (ErrorSequence, FunctionSequence, constant_error_measure, erdos_approximant, erdos_constant,
                        lyapunov_profile, matrix_cocycle_seq, typewriter_map, weak_gibbs_seq)
from .ergodic import (NonConvergenceError, ShiftSystem, coboundary_integral_check, mean_ergodic_projection,
                      pointwise_experiment)
from .gallery import GALLERY, gallery_entry

__all__ = [
    "__version__", "BACKEND",
    "Box", "InvarianceParams", "Window", "boundary_control_params", "invariance_defect", "is_invariant",
    "k_boundary", "k_interior", "product_set",
    "BoxTiling", "CofinalScale", "FolnerSequence", "box_folner", "folner_defect", "invariance_level",
    "tempered_check", "translated_box_folner", "window_partition_by_tiling",
    "PwcFunction", "ValueSpace", "lattice_abs", "lattice_join", "lattice_meet", "lp_norm",
    "GroupAction", "SetMap", "asymptotic_seminorm", "birkhoff_map", "birkhoff_sum", "equivariance_check",
    "ergodic_average", "sup_seminorm",
    "ErrorMap", "RieszErrorMap", "certify_almost_additive", "certify_riesz_almost_additive", "counterexample_map",
    "derive_error_from_realization", "regularize_error_map",
    "Certificate", "NoAdmissibleTile", "coboundary_residual", "extract_realization", "realization_difference_test",
    "three_term_bound_check", "verify_realization",
    "ErrorSequence", "FunctionSequence", "constant_error_measure", "erdos_approximant", "erdos_constant",
    "lyapunov_profile", "matrix_cocycle_seq", "typewriter_map", "weak_gibbs_seq",
    "NonConvergenceError", "ShiftSystem", "coboundary_integral_check", "mean_ergodic_projection",
    "pointwise_experiment",
    "GALLERY", "gallery_entry",
]
