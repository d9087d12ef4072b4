"""Spectral toolkit for an iterative construction of low-regularity
stationary KdV solutions on the torus T=[0,1]."""

from .spectral import (TorusFunction, GridSamples, synthesize, analyze,
                       derivative, product, product_at_freqs, pointwise_map,
                       save_coeffs, load_coeffs)
from .littlewood_paley import (LPFilter, build_filter, project_shell,
                               project_mean, project_low, project_high,
                               project_nonzero)
from .norms import lp_norm, sobolev_norm, besov_norm, ck_norm
from .slabs import (SlabProfile, SlabSpec, build_profile, build_slab_physical,
                    build_slab_fourier, high_low_decay)
from .scheme import (SchemeParams, IterationState, ErrorParts, IncrementInfo,
                     base_case, amplitude, build_increment, error_update,
                     select_lambda, shell_check, iterate)
from .verify import (Certificate, ScalingReport, certify_stage, weak_residual,
                     paraproduct_partial_sums, scaling_suite, residual_norm,
                     run_lemma_suite, coverage_check)
from .cli import RunConfig, main, save_checkpoint, load_checkpoint

__version__ = "0.1.0"
