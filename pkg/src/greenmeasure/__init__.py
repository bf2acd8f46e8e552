"""Green measures of jump-generator Markov processes and Brownian motion."""
__version__ = "0.1.0"

from .errors import *  # noqa: F401,F403
from .kernels import JumpKernel, kernel_moments, parse_kernel_spec, sample_jump
from .spectral import GridSpec, RealField, SpectralField
from .functions import CompactBump, GaussianBump, ZeroFunction, parse_test_function
from .green import (
    GreenEstimate,
    bm_green,
    bm_potential,
    g_regular_fourier,
    g_regular_series,
    gauss_g0_closed,
    heat_kernel_time_integral,
    newtonian_constant,
    potential,
    resolvent_apply,
    transition_density,
)
from .montecarlo import MCConfig, PotentialEstimate, estimate_potential_bm, estimate_potential_cpp
from .audit import BoundReport, audit_an_bound, audit_exp_bound, audit_gauss_bound, audit_newtonian, zeta
