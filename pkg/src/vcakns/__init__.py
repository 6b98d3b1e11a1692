"""Exact-solution toolkit for the AKNS system with a time-dependent coefficient.

Modules: ``jet`` (truncated Taylor arithmetic), ``specfun`` (Jacobi elliptic
functions), ``families`` (solution bundles and the finite symmetry
transformation), ``reduction`` (similarity reductions), ``verify`` (residual
checks) and ``cli``.
"""
from .families import (  # noqa: F401
    DeltaProfile,
    ModelParams,
    SolutionBundle,
    case1_bundle,
    case2_bundle,
    finite_transform,
    seed_soliton,
)
from .verify import GeneratorCoeffs, Grid, full_residual, symmetry_residual  # noqa: F401

__version__ = "0.1.0"
