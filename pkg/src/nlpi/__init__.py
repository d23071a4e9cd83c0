"""Eigenfunctions of black-box image operators via nonlinear power iteration."""

from .degrade import KINDS, DegradationSpec, degrade
from .diagnostics import (
    ContractionTrace,
    DecayProfiles,
    RatioMap,
    contraction_trace,
    cos_angle,
    decay_profiles,
    eigen_residual,
    monotonicity_violations,
    ratio_map,
    rayleigh_quotient,
)
from .epll import GMM, epll_denoise, extract_patches, fit_gmm_em, load_gmm, save_gmm
from .image import (
    PSNR_CAP_DB,
    as_image,
    center_and_scale,
    inner,
    l2_norm,
    mse,
    psnr,
)
from .operators import (
    OperatorDescriptor,
    apply,
    as_callable,
    complement,
    enhance,
    epll_op,
    gaussian_blur,
    gaussian_blur_op,
    gaussian_kernel,
    identity_op,
    matrix_op,
    shifted,
    tv_op,
)
from .pgmio import (
    load_binary_message,
    load_image,
    read_pgm,
    read_raw,
    write_pgm,
    write_raw,
)
from .solver import (
    EigenResult,
    IterationTrace,
    LambdaEstimate,
    SolverConfig,
    deflated_power_iteration,
    estimate_eigenvalue,
    power_iteration,
    power_iteration_zero_mean,
    project_orthogonal,
)
from .stego import StegoDecodeResult, StegoPackage, steg_decode, steg_encode
from .tv import divergence, gradient, tv_denoise

__version__ = "0.1.0"
