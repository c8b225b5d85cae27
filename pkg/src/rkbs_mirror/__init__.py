"""Mirror descent over finite-center p-norm reproducing kernel Banach spaces."""

__version__ = "0.1.0"

from ._backend import BACKEND
from .errors import ConfigError, NumericalError
from .kernels import (
    CenterSet,
    BivariateKernel,
    GaussianKernel,
    LabRbfKernel,
    TableKernel,
    assemble_similarity,
    rank_diagnostic,
    lab_loss_and_grad,
    fit_lab_bandwidths,
    canonical_kernel_dual_coeffs,
    adjoint_kernel_eval,
    evaluate,
)
from .rkbs import (
    InverseVariant,
    conjugate_exponent,
    lp_norm,
    primal_norm,
    dual_norm,
    pairing,
    mirror_potential,
    mirror_forward,
    mirror_inverse,
    bregman_divergence,
    bregman_project_ball,
    descent_direction_check,
    parallelogram_defect,
    PrimalFunction,
    DualFunction,
    MirrorMap,
    BregmanContext,
)
from .optimizer import (
    Dataset,
    Mode,
    Schedule,
    KernelForm,
    ProjectionStyle,
    Init,
    SolverConfig,
    TraceRecord,
    StopReason,
    FitResult,
    square_loss,
    dual_gradient_canonical,
    dual_gradient_adjoint,
    mda_step,
    theorem_eta,
    lipschitz_bound,
    fit,
    fit_matrix,
)
