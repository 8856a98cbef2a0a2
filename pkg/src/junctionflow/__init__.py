"""Junction stationarity, graph-flattening transforms, complementing
condition checks, curve-network mean curvature flow, and exact
combinatorial verification."""

__version__ = "0.1.0"

from . import combinatorics, complementing, geometry, hodograph, mcf
from .geometry import (AmbientGeometry, BalanceReport, JunctionConfig,
                       balance_residual, boundary_balance_residual,
                       curvature_source, normalize, not_all_tangent,
                       unit_conormal)
from .complementing import (BoundaryMatrix, ExponentTable, LinearizedSystem,
                            Verdict, build_linearization,
                            cauchy_schwarz_terms, check_complementing,
                            decay_exponents, delta_bound,
                            determinant_bruteforce, determinant_closed_form,
                            equal_slope_system, reduced_matrix)
from .hodograph import (GraphFunction, HodographPair, TimeDependentGraph,
                        choose_C, forward_transform,
                        forward_transform_parabolic, inverse_transform,
                        verify_chain_rule)
from .mcf import (Diagnostics, NetworkState, RunResult, SolverParams,
                  SpaceTimeBump, brakke_identity_residual,
                  brakke_window_residual, junction_conditions, mcf_residual,
                  minimal_residual, rebalance, run, steady_solve, step,
                  symmetric_y_network, total_area)
from .combinatorics import (C0_LOW, Q_PI, ComboVerdict, MajorantPoly,
                            combo2_check, combo_bound_check, combo_sum,
                            majorant_leq, majorant_product,
                            vandermonde_check, verify_power_bound)
