"""Varying-coefficient panel regression with interactive fixed effects."""

from .bootstrap import (BootstrapBands, BootstrapConfig, block_resample,
                        bootstrap_bands, default_block_length)
from .bspline import (Basis, SplineSpec, cubic_basis, eval_basis, eval_basis_matrix,
                      eval_function, make_basis)
from .design import DesignMatrices, build_design, build_row, coefficient_curves
from .dgp import DgpTruth, amse, gen_additive_dgp, gen_interactive_dgp
from .exceptions import *  # noqa: F401,F403
from .ife import (FactorStructure, FitOptions, IfeFit, Init, factors_given_gamma,
                  fit_ife, fit_infeasible, gamma_given_f, init_factors, loadings,
                  project_out)
from .lsdv import LsdvFit, fit_lsdv, gamma_projector_apply
from .montecarlo import McReport, McSpec, run_monte_carlo
from .panel_data import PanelData, Support, validate_panel
from .selection import (BicResult, CvResult, bic_factor_number, common_bases,
                        cv_score, select_knots, v_of_r)

__version__ = "0.1.0"
