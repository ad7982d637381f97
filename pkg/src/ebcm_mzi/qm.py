"""Closed-form quantum-mechanical fringe predictions.

These are the null model for the chi-square tests and the oracle for the
long-run convergence properties of the event-based model.  All functions are
pure and safe for concurrent use.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import PHI1_MAP, DomainError
from .protocols import DetectorModel, PhaseProtocol


def qm_prob(delta_phi) -> float | np.ndarray:
    """P(port 0) for net arm difference ``delta_phi``: (1 + cos) / 2."""
    return 0.5 * (1.0 + np.cos(delta_phi))


@dataclass(frozen=True)
class QmFringeModel:
    """Fringe in detected-probability-per-trial units versus phi0.

    value(phi0) = amplitude * (1 + visibility * cos(frequency * phi0 + phase_offset))

    ``frequency`` is (1 + beta) with modulator crosstalk beta; the convention
    tag records the port-0 form for provenance in serialized output.
    """

    amplitude: float
    visibility: float
    phase_offset: float
    frequency: float = 1.0
    convention: str = "P0 = A*(1 + V*cos(f*phi0 + offset))"

    def __post_init__(self):
        if self.amplitude < 0 or not 0.0 <= self.visibility <= 1.0:
            raise DomainError("need amplitude >= 0 and visibility in [0, 1]")

    def value(self, phi0) -> np.ndarray:
        return self.amplitude * (
            1.0 + self.visibility * np.cos(self.frequency * np.asarray(phi0, float)
                                           + self.phase_offset)
        )


def _fixed_model(x: int, beta: float) -> QmFringeModel:
    f = 1.0 + beta
    return QmFringeModel(0.5, 1.0, -f * PHI1_MAP[x], frequency=f)


def _fold_detector(model: QmFringeModel, det: DetectorModel | None) -> QmFringeModel:
    """Efficiency scales the amplitude; dark counts add a flat offset, which
    keeps the A*(1 + V*cos) form with A' = eff*A + dark and V' = eff*A*V / A'."""
    if det is None:
        return model
    a = det.efficiency * model.amplitude
    a2 = a + det.dark_prob_per_gate
    v2 = a * model.visibility / a2 if a2 > 0 else 0.0
    return QmFringeModel(a2, v2, model.phase_offset, model.frequency,
                         model.convention)


def qm_fringe(phi0_grid, protocol: PhaseProtocol, beta: float = 0.0,
              source=None, det: DetectorModel | None = None):
    """QM prediction for one protocol on a phi0 grid.

    Returns (values, model): per-trial detection probabilities at each grid
    point and the closed-form parameters.  For either random protocol the
    prediction is the equal mixture of the two fixed-x fringes (in QM the
    outcome is independent of the x sequence); background photons (``source``)
    train nothing in QM and do not appear.
    """
    del source  # no observable QM consequence; accepted for interface parity
    grid = np.asarray(phi0_grid, dtype=float)
    if protocol.kind == "fixed":
        model = _fold_detector(_fixed_model(protocol.x, beta), det)
        return model.value(grid), model
    minus = _fold_detector(_fixed_model(-1, beta), det)
    plus = _fold_detector(_fixed_model(+1, beta), det)
    values = 0.5 * (minus.value(grid) + plus.value(grid))
    # closed form of the mixture: phasor average of the two fixed fringes
    f = 1.0 + beta
    half = 0.5 * f * (PHI1_MAP[+1] - PHI1_MAP[-1])
    mid = -0.5 * f * (PHI1_MAP[+1] + PHI1_MAP[-1])
    model = QmFringeModel(minus.amplitude,
                          minus.visibility * abs(math.cos(half)),
                          mid, frequency=f, convention=minus.convention)
    return values, model


def expected_counts(values: np.ndarray, trials) -> np.ndarray:
    """Scale per-trial probabilities to expected counts."""
    return np.asarray(values, float) * np.asarray(trials, float)
