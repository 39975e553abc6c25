"""Numerical toolkit for semiclassical scattering at the critical energy
of a non-degenerate potential-barrier maximum."""

from .potential import (BarrierSpectrum, PotentialModel, barrier_spectrum,
                        index_sets, multi_indices)
from .dynamics import PhasePoint, Trajectory, flow, variational_flow
from .scatter import (ScatteringData, action_regular, angular_density,
                      asymptotic_momentum, find_regular_trajectories,
                      incoming_initialize, maslov_index)
from .manifolds import (TrappedTrajectory, extract_expandible_coeffs,
                        find_trapped_impact, hessian_limit_check, ll_index,
                        maslov_determinant, trapped_action, trapped_trajectory)
from .series import (CouplingData, TransportSolution, TruncatedSeries,
                     apply_L, classify_case, eikonal_taylor, ghat_j_coeffs,
                     m1_coefficient, m2_coefficient, phi1_taylor, phi_jhat2,
                     psi_map, solve_transport)
from .amplitude import (AmplitudeResult, SigmaE, assemble_amplitude,
                        c_constant, gamma_factor_identity_check,
                        leading_regular_coefficient,
                        leading_singular_coefficient, sigma_E)
from .crosssec import CrossSectionResult, line_integral, total_cross_section
from .oracles import (AsymptoticCheck, QuasimodeReport, ResolventCheck,
                      asymptotic_sweep, oscillatory_integral,
                      quasimode_norms, resolvent_lower_bound_check)

__version__ = "0.1.0"
