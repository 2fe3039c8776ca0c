"""Phase-field relaxation of the two-curve Plateau problem.

The decoupled energy couples a phase field u on a 3-D grid to a Lipschitz
homotopy sheet spanning two closed curves. The package solves for u with
the sheet fixed, descends on the sheet with u fixed, and checks the
quantitative estimates (maximum principle, decay, Hölder scaling, upper
Ahlfors regularity, lower semicontinuity of area) numerically.
"""
from . import kernels
from .coupling import EnergyReport, SurfaceMeasure, splat_measure, surface_energy, total_energy
from .errors import PlateauError
from .field import Grid, PhaseField, make_grid, sample_field, solve_phase_field
from .geometry import Ball, Box, CircleCurve, Domain, PolylineCurve, make_domain, sample_curve
from .optimizer import RunResult, alternate_minimize, descend_sheet, descend_sheet_reduced, sheet_gradient
from .params import SolverParams
from .sheet import HomotopySheet, ahlfors_ratio, init_sheet, lipschitz_estimate, sheet_area

__version__ = "0.1.0"
BACKEND = kernels.BACKEND

__all__ = [
    "BACKEND", "Ball", "Box", "CircleCurve", "Domain", "EnergyReport", "Grid", "HomotopySheet",
    "PhaseField", "PlateauError", "PolylineCurve", "RunResult", "SolverParams", "SurfaceMeasure",
    "ahlfors_ratio", "alternate_minimize", "descend_sheet", "descend_sheet_reduced", "init_sheet",
    "lipschitz_estimate", "make_domain", "make_grid", "sample_curve", "sample_field", "sheet_area",
    "sheet_gradient", "solve_phase_field", "splat_measure", "surface_energy", "total_energy",
]
