"""Event-based corpuscular model of a two-phase Mach-Zehnder interferometer.

Photons are simulated one at a time as messengers carrying a unit phase
vector; each beamsplitter is an adaptive machine whose memory parameter alpha
controls how fast it forgets.  The package reproduces the full acquisition
protocol (fixed and randomly switched fast phase), the quantum-mechanical
reference predictions, fringe fitting, and the reduced chi-square
discrimination between the two models.
"""

__version__ = "0.1.0"

from .core import (DlmState, DomainError, Interferometer, Messenger,
                   bs_route, dlm_update, effective_arm_phases, mzi_traverse,
                   new_dlm, new_interferometer, phase_shift)
from .protocols import (DetectorModel, FringeRecord, PhaseProtocol,
                        SourceModel, XStream, fixed_x, random_per_n,
                        random_per_photon, run_point, run_sweep,
                        run_switch_rate_comparison,
                        simulate_prediction_curves)
from .qm import QmFringeModel, qm_fringe, qm_prob
from .analysis import (AlphaScanEntry, ChiSquareReport, FitFailedError,
                       FitResult, alpha_scan, chi2_reduced, fit_fringe,
                       phase_shift_between, simulate_reference_records,
                       subtract_darks, wrap_angle)
from .config import ConfigError, RunConfig

__all__ = [
    "__version__",
    "AlphaScanEntry", "ChiSquareReport", "ConfigError", "DetectorModel",
    "DlmState", "DomainError", "FitFailedError", "FitResult", "FringeRecord",
    "Interferometer", "Messenger", "PhaseProtocol", "QmFringeModel",
    "RunConfig", "SourceModel", "XStream",
    "alpha_scan", "bs_route", "chi2_reduced", "dlm_update",
    "effective_arm_phases", "fit_fringe", "fixed_x", "mzi_traverse",
    "new_dlm", "new_interferometer", "phase_shift", "phase_shift_between",
    "qm_fringe", "qm_prob", "random_per_n", "random_per_photon", "run_point",
    "run_sweep", "run_switch_rate_comparison", "simulate_prediction_curves",
    "simulate_reference_records", "subtract_darks", "wrap_angle",
]
