"""Eisenstein series, elliptic-curve data, and L-value evaluation."""
from .curves import CurveModel, load_curves, curve_by_label
from .series import (EisensteinG, eisenstein_G, assemble_F, identify_multiple,
                     sturm_bound, eta_product_f7)
from .lseries import (LSeries, lseries_of_curve, lvalue, lvalue_weight2_at1,
                      lprime_left_edge, detect_eps, zeta_prime_minus2,
                      dirichlet_L_chi3_at2)

__all__ = [
    "CurveModel", "load_curves", "curve_by_label",
    "EisensteinG", "eisenstein_G", "assemble_F", "identify_multiple",
    "sturm_bound", "eta_product_f7",
    "LSeries", "lseries_of_curve", "lvalue", "lvalue_weight2_at1",
    "lprime_left_edge", "detect_eps", "zeta_prime_minus2",
    "dirichlet_L_chi3_at2",
]
