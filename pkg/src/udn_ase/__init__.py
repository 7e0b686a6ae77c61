"""Coverage probability and area spectral efficiency of dense cellular networks
with LoS/NLoS path loss and a non-zero BS-to-UE antenna height difference."""
from .analytic_engine import (AnalysisConfig, AsePoint, CoveragePoint, Tolerances,
                              area_spectral_efficiency, coverage_curve, coverage_probability)
from .antenna_pattern import AntennaSpec, downtilt_for_density, total_gain, vertical_offset
from .asymptotics import CrashDiagnostics, classify_regimes, kappa_bound, pairwise_sir
from .channel_models import (PathLossModel, build_3gpp_case1, build_3gpp_case2, build_approx_case2,
                             build_single_slope)
from .fading import RAYLEIGH, FadingDist, FadingModel, rician
from .montecarlo import SimConfig, estimate_ase, estimate_coverage, simulate_sinr

__version__ = "0.1.0"
