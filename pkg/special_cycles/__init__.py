"""special_cycles package init"""
from . import errors, padic_core, hermitian_forms, strata, densities, lifting, display_sim, verification, reporter, utils

__all__ = [
    "errors",
    "padic_core",
    "hermitian_forms",
    "strata",
    "densities",
    "lifting",
    "display_sim",
    "verification",
    "reporter",
    "utils",
]
