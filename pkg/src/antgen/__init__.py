"""Spatial point-process toolkit for antenna locations.

Tests the Poisson hypothesis on observed patterns (kernel intensity,
thinning, Ripley's K with min-max envelopes) and generates synthetic patterns
by harmonic deformation of a Delaunay triangulation with Gaussian noise.
"""

__version__ = "0.1.0"

from .core import FIXED, FREE, LabeledPattern, PointPattern, Window, count_in, has_duplicates, pairwise_distances
from .deform import DeformConfig, NoiseSpec, dirichlet_energy, generate_synthetic, harmonic_deform
from .errors import AntgenError
from .intensity import (
    IntensityField,
    KernelConfig,
    RiskCurve,
    estimate_homogeneous,
    evaluate,
    fit_field,
    harmonic_extension,
    kernel_intensity,
    loo_risk,
    select_bandwidth,
)
from .simulate import (
    derive_seed,
    homogenize,
    simulate_homogeneous,
    simulate_inhomogeneous_grid,
    simulate_inhomogeneous_reject,
    thin,
)
from .stats import CsrReport, Envelope, KFunction, csr_test, envelope, k_naive, k_ripley, k_theoretical_poisson
from .triangulate import DelaunayGraph, barycenter, neighbors, triangulate
