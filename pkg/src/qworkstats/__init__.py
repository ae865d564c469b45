"""Work statistics of a driven transverse-field Ising model under two-point measurement."""

__version__ = "0.1.0"

from .lattice import Graph, EdgeColoring, color_edges, circuit_cost, heavy_hex_layout, load_graph
from .protocol import DriveParams, GateProgram, build_program
from .samples import TPMSample, TPMSamples, dump_samples, load_samples
from .sim import NoiseSpec, make_rng, parity_filter, run_tpm
from .workstats import WorkStatistics, raw_estimators, tur_bound, tur_check, tur_f, tur_h
from .sqt import build_subspace, ext_sqt_estimate, sqt_estimate, sqt_from_samples
from .analytic import LRTParams, g_env, lrt_moments, wn_moments, wn_sampler
from .oracle import exact_tpm_distribution, exact_trotter_unitary, continuum_evolution

__all__ = [
    "Graph", "EdgeColoring", "color_edges", "circuit_cost", "heavy_hex_layout", "load_graph",
    "DriveParams", "GateProgram", "build_program",
    "TPMSample", "TPMSamples", "dump_samples", "load_samples",
    "NoiseSpec", "make_rng", "parity_filter", "run_tpm",
    "WorkStatistics", "raw_estimators", "tur_bound", "tur_check", "tur_f", "tur_h",
    "build_subspace", "ext_sqt_estimate", "sqt_estimate", "sqt_from_samples",
    "LRTParams", "g_env", "lrt_moments", "wn_moments", "wn_sampler",
    "exact_tpm_distribution", "exact_trotter_unitary", "continuum_evolution",
]
