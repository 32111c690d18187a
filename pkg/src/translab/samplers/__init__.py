"""Stationary unit-intensity point processes on windows and tori."""

from .base import INTERVAL, TORUS, PointConfiguration, WindowSpec, make_rng, separate_ties
from .cbe import sample_cbe_points
from .lattice import sample_lattice_points
from .models import ProcessModel, check_topology, sample, sample_counts, sine_count_moments
from .poisson import sample_poisson_points, sample_uniform_points
from .renewal import InterarrivalLaw, sample_renewal_points
from .sine_dpp import DiscretizationError, sample_sine_points

__all__ = [
    "INTERVAL",
    "TORUS",
    "DiscretizationError",
    "InterarrivalLaw",
    "PointConfiguration",
    "ProcessModel",
    "WindowSpec",
    "check_topology",
    "make_rng",
    "sample",
    "sample_cbe_points",
    "sample_counts",
    "sample_lattice_points",
    "sample_poisson_points",
    "sample_renewal_points",
    "sample_sine_points",
    "sample_uniform_points",
    "separate_ties",
    "sine_count_moments",
]
