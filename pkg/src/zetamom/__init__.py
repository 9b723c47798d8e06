"""Numerical toolkit for shifted fourth moments of the Riemann zeta function."""
from ._contour import LaurentSeries, RadiusInconsistencyError, cauchy_coeffs
from ._quad import QuadratureError, exact_sum
from .analytic import (MomentPolynomial, NearDegenerateError, a_coeffs, diag_term, h_offdiag,
                       moment_polynomial, offdiag_term, q2_eval, q2_integral, q2_values,
                       q2_windowed)
from .divisor import (CorrelationRecord, DivisorTable, correlation_record, correlation_report,
                      correlation_sum, main_term, motohashi_main_density, sieve_divisors, sigma_z)
from .empirical import (MomentReport, QuadratureSpec, ToleranceNotMetError, afe_check, afe_rhs,
                        moment_quadrature)
from .momofmom import (AveragingKernel, MoMReport, dbar, laplace_ghat2_indicator,
                       log_anomaly_constant, m22_empirical, m22_formula, odbar)
from .smoothing import (ShiftConfig, SmoothingConfig, VWeightGrid, Window, bump_profile,
                        g_window_fourier, i_weight, j_weight, kappa_phi, v_weight, window_eval,
                        window_mellin)
from .special import (EULER_GAMMA, beta_fn, chi, hardy_z, hyp2f1_neg, log_gamma, stieltjes,
                      theta, zeta, zeta_critical, zeta_derivatives)
from .spectral import (NuWeight, SpectralDataset, SpectralEntry, TestFunction, ec_integral,
                       ed_sum, nu_delta, synthetic_dataset, theta_transform, truncated_l_series,
                       xi_transform)

__version__ = "0.1.0"
