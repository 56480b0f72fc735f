"""Upconversion-based tomography of OAM channels with frequency-comb probes."""

from .channel import (
    KrausMatrix,
    PhaseScreen,
    default_basis,
    identity_channel,
    kolmogorov_screen,
    kraus_from_screen,
    random_unitary_channel,
    zernike_screen,
)
from .config import ConfigError, ExperimentConfig, load_config, parse_config
from .design import CombSpec, feasibility_report, grating_line_count, slm_pixel_budget
from .modes import AzimuthalMode, lg_angular_spectrum, lg_real_space, mode_inner_product
from .nonlinear import CrystalConfig, lambda_coefficient, overlap_closed_form, spuc_kernel
from .oracle import NonConvergenceError, convergence_sweep, quadrature_overlap
from .quadrature import QuadratureSpec
from .tomography import (
    MeasurementSpec,
    NoiseSpec,
    ProbeState,
    ReconstructionError,
    ReconstructionReport,
    SingularChannelError,
    apply_channel,
    design_compensation,
    generate_plan,
    choose_reference,
    reconstruct,
    simulate_adaptive_plan,
    simulate_plan,
)

__version__ = "0.1.0"
