"""Angular quadrature, Legendre tables and coupling coefficients."""

from ued_tomography.angular.coupling import clebsch_gordan, expansion_coefficient, product_expansion
from ued_tomography.angular.grid import AngularGrid, make_grid
from ued_tomography.angular.legendre import LegendreTable, evaluate_legendre, spherical_harmonic

__all__ = [
    "AngularGrid",
    "LegendreTable",
    "clebsch_gordan",
    "evaluate_legendre",
    "expansion_coefficient",
    "make_grid",
    "product_expansion",
    "spherical_harmonic",
]
