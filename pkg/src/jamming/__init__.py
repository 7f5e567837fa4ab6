"""Exploration processes on random graphs, their fluid limits, and
coupling bounds for random sequential adsorption."""

from .exploration import Trajectory, explore_graph, scaled_trajectory, simulate_er_chain
from .fluid import (OdeSettings, er_error_bound, er_fluid_closed_form, er_jamming_stats,
                    integrate_fluid, integrate_variance)
from .graphs import BoxGeometry, ErParams, build_rgg, sample_er_graph, sample_point_cloud
from .harness import RunSpec, estimate_jamming, replicate_rng, run_replications, summarize
from .rsa import integrate_bounds, run_coupled, run_rsa

__version__ = "0.1.0"
