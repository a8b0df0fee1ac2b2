"""Numerical laboratory for bi-slant Riemannian submersions from Kaehler manifolds."""

from .catalog import (BUILTINS, Scenario, builtin, dump_scenario, load_scenario, make_linear_bislant,
                      resolve, scenario_from_dict)
from .complex_structure import canonical_J, check_hermitian, check_kaehler
from .curvature import (base_curvature, fiber_curvature, verify_curvature_inequalities,
                        verify_curvature_equations, verify_sectional_relations, verify_slant_plane_curvature)
from .errors import *  # noqa: F401,F403
from .oneill import (OneillContext, hat_connection, nabla_A, nabla_T, tensor_A, tensor_T,
                     verify_fundamental_identities)
from .report import PASS, FAIL, PREMISE, CheckResult, VerificationReport
from .runner import RunConfig, RunResult, run
from .slant import (SlantAngles, SlantStructure, classify, distributions, mu_distribution, slant_angle,
                    slant_operators, split_vertical, verify_slant_algebra)
from .submersion import (LocalSubmersion, SubmersionScenario, check_pushforward_consistency,
                         check_riemannian_submersion, differential, horizontal_frame, projectors, pushforward,
                         vertical_frame)
from .tensor_engine import (DUAL, FD, ConnectionContext, ManifoldModel, christoffel, covariant_derivative,
                            lie_bracket, matrix_field, riemann, scalar_field, sectional_curvature, vector_field)
from .theorems import (geodesic_foliation_report, integrability_report, parallelism_report,
                       verify_gauss_weingarten, verify_structure_equations)

__version__ = "0.1.0"
