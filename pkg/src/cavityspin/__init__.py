"""Collective two-level atoms in a single-mode cavity: squeezed-state
preparation, spin steering, few-photon radiation, dissipative dynamics,
and phase statistics."""

__version__ = "0.1.0"

from . import analytic, dynamics, lindblad, observables, scenarios, spinfock
from .dynamics import BlockHamiltonian, RotationSpec, align_and_tilt, build_blocks, evolve_unitary
from .lindblad import DissipationParams, IntegratorConfig, evolve_master
from .observables import ObservableRecord, QGrid
from .scenarios import ScenarioConfig, dissipation_contours, min_phase_state, optimize_alpha, prepare_sas, radiate, tailor_pipeline
from .spinfock import SpinFockBasis, TruncationError, build_basis, coherent_field_state, css_state

__all__ = [
    "__version__",
    "analytic", "dynamics", "lindblad", "observables", "scenarios", "spinfock",
    "BlockHamiltonian", "RotationSpec", "align_and_tilt", "build_blocks",
    "evolve_unitary", "DissipationParams", "IntegratorConfig", "evolve_master",
    "ObservableRecord", "QGrid", "ScenarioConfig", "dissipation_contours",
    "min_phase_state", "optimize_alpha", "prepare_sas", "radiate",
    "tailor_pipeline", "SpinFockBasis", "TruncationError", "build_basis",
    "coherent_field_state", "css_state",
]
