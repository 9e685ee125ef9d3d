"""Multi-frame super-resolution by POCS and noise-adaptive Tikhonov regularization."""

from .degradation import (
    NOISELESS,
    DegradationSpec,
    Frame,
    ObservationOperator,
    ObservationSet,
    add_awgn,
    apply,
    apply_adjoint,
    build_blur_kernel,
    build_operator,
    synthesize,
)
from .errors import ConfigError, DimensionError, InputError, MFSRError, NumericalError, ParameterError
from .imaging import Image, bilinear_sample, initial_estimate, new_image
from .metrics import QualityReport, estimate_noise_variance, mse, psnr, sigma2_from_snr
from .pocs import (
    PocsConfig,
    ReconstructionTrace,
    phi0_from_noise,
    pocs_reconstruct,
    project_amplitude,
    project_data_consistency,
    residual,
)
from .regularized import (
    LambdaModel,
    RegSolverConfig,
    adaptive_lambda,
    cost,
    cost_gradient,
    estimate_operator_norm,
    reconstruct_regularized,
)

__version__ = "0.1.0"
