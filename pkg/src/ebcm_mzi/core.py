"""Event-level dynamics: messengers, learning beamsplitters, the interferometer.

A "messenger" is one photon carrying a unit phase vector (cos psi, sin psi).
Each beamsplitter is a deterministic learning machine (DLM) holding two
port-intensity estimates x0, x1 (x0 + x1 = 1) and two stored phase registers
Y0, Y1 (unit vectors). On every traversal the machine routes the messenger
from its current state and then learns from the arrival:

    learn, arrival at port k:  x_k <- alpha*x_k + (1-alpha),
                               x_{1-k} <- alpha*x_{1-k},
                               Y_k <- incoming phase vector
    route:                     z_k = sqrt(x_k) * Y_k  (as complex numbers)
                               w0 = (z0 + i z1)/sqrt(2), w1 = (i z0 + z1)/sqrt(2)
                               P(out=0) = |w0|^2 / (|w0|^2 + |w1|^2)
                               outgoing vector = w_out / |w_out|

The memory parameter alpha sets the forgetting rate: alpha=1 never adapts the
intensities, alpha=0 forgets instantly.  Two beamsplitters joined by two
phase-shifted arms make the Mach-Zehnder interferometer; the only information
channel between them is the messengers themselves.

By default routing happens *before* the learning step (the machine responds
from what it learned so far, then absorbs the new arrival).  The opposite
order is available via ``learn_before_route`` for sensitivity studies; see the
module-level notes in ``engine``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

SQRT1_2 = math.sqrt(0.5)

#: phase applied in arm B for each value of the switch variable x
PHI1_MAP = {-1: 0.0, +1: math.pi / 2}


class DomainError(ValueError):
    """A precondition on a model parameter was violated."""


@dataclass
class Messenger:
    """One photon event: unit phase vector plus current port label."""

    phase_vector: np.ndarray
    port: int

    def __post_init__(self):
        self.phase_vector = np.asarray(self.phase_vector, dtype=float)
        if self.phase_vector.shape != (2,):
            raise DomainError("phase_vector must be a pair (cos psi, sin psi)")
        n = math.hypot(self.phase_vector[0], self.phase_vector[1])
        if abs(n - 1.0) > 1e-12:
            raise DomainError(f"phase_vector norm {n!r} is not 1 within 1e-12")
        if self.port not in (0, 1):
            raise DomainError("port must be 0 or 1")

    @property
    def psi(self) -> float:
        return math.atan2(self.phase_vector[1], self.phase_vector[0])


@dataclass
class DlmState:
    """Adaptive state of one beamsplitter.

    intensity: port-intensity estimates (x0, x1), x0 + x1 = 1
    register:  stored phase vectors, rows Y0 and Y1, each unit norm
    """

    alpha: float
    intensity: np.ndarray = field(default_factory=lambda: np.array([0.5, 0.5]))
    register: np.ndarray = field(
        default_factory=lambda: np.array([[1.0, 0.0], [1.0, 0.0]])
    )

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise DomainError(f"alpha={self.alpha!r} outside [0, 1]")
        self.intensity = np.asarray(self.intensity, dtype=float)
        self.register = np.asarray(self.register, dtype=float)
        if self.intensity.shape != (2,) or self.register.shape != (2, 2):
            raise DomainError("intensity must be (2,), register (2, 2)")
        if self.intensity.min() < 0 or abs(self.intensity.sum() - 1.0) > 1e-12:
            raise DomainError("intensities must be >= 0 and sum to 1")
        for row in self.register:
            if abs(math.hypot(row[0], row[1]) - 1.0) > 1e-12:
                raise DomainError("registers must be unit norm")

    def copy(self) -> "DlmState":
        return DlmState(self.alpha, self.intensity.copy(), self.register.copy())


def new_dlm(alpha: float) -> DlmState:
    """Fresh machine: symmetric intensities, both registers at (1, 0)."""
    return DlmState(alpha)


def dlm_update(state: DlmState, msg: Messenger) -> DlmState:
    """Learning step for one arrival; mutates and returns ``state``.

    The arrival port's intensity moves toward 1 with rate (1 - alpha), the
    other decays by alpha, so x0 + x1 = 1 is preserved exactly up to rounding.
    The arrival port's register is overwritten with the incoming vector.
    """
    k = msg.port
    a = state.alpha
    state.intensity[k] = a * state.intensity[k] + (1.0 - a)
    state.intensity[1 - k] = a * state.intensity[1 - k]
    state.register[k] = msg.phase_vector
    return state


def bs_route(state: DlmState, msg: Messenger, u: float) -> tuple[int, Messenger]:
    """Stochastic output stage: pick a port with probability |w|^2 and emit
    the normalized output vector.  ``u`` is a uniform deviate in [0, 1)."""
    x0, x1 = state.intensity
    a0, a1 = math.sqrt(x0), math.sqrt(x1)
    z0c, z0s = a0 * state.register[0, 0], a0 * state.register[0, 1]
    z1c, z1s = a1 * state.register[1, 0], a1 * state.register[1, 1]
    w0c, w0s = (z0c - z1s) * SQRT1_2, (z0s + z1c) * SQRT1_2
    w1c, w1s = (z1c - z0s) * SQRT1_2, (z1s + z0c) * SQRT1_2
    n0 = w0c * w0c + w0s * w0s
    n1 = w1c * w1c + w1s * w1s
    total = n0 + n1
    # With x0 + x1 = 1 and unit registers the mixing is unitary, so the
    # total is identically 1; a vanishing total cannot occur.
    assert total > 1e-12, "degenerate routing state"
    p0 = n0 / total
    if u < p0:
        out, wc, ws, wn = 0, w0c, w0s, math.sqrt(n0)
    else:
        out, wc, ws, wn = 1, w1c, w1s, math.sqrt(n1)
    return out, Messenger(np.array([wc / wn, ws / wn]), out)


def phase_shift(msg: Messenger, phi: float) -> Messenger:
    """Rotate the phase vector by ``phi`` radians (norm preserved)."""
    c, s = math.cos(phi), math.sin(phi)
    v = msg.phase_vector
    return Messenger(np.array([v[0] * c - v[1] * s, v[0] * s + v[1] * c]), msg.port)


def effective_arm_phases(phi0: float, phi1: float, beta: float) -> tuple[float, float]:
    """Arm phases with modulator crosstalk.

    The phi0 modulator sits in arm A and the phi1 modulator in arm B; each
    leaks -beta of its setting into the opposite arm, so the net arm
    difference is (1 + beta) * (phi0 - phi1).
    """
    if not 0.0 <= beta <= 0.2:
        raise DomainError(f"beta={beta!r} outside [0, 0.2]")
    return phi0 - beta * phi1, phi1 - beta * phi0


@dataclass
class Interferometer:
    """Two learning beamsplitters joined by two phase-controlled arms.

    bs1 output 0 feeds arm A (phase ``arm_phase_a``) and output 1 feeds arm B;
    the arms cross over into bs2 (arm A enters port 1, arm B port 0), which
    makes port 0 the bright output for zero net arm difference.
    """

    bs1: DlmState
    bs2: DlmState
    arm_phase_a: float = 0.0
    arm_phase_b: float = 0.0
    crosstalk_beta: float = 0.0
    learn_before_route: bool = False
    register_mode: str = "overwrite"

    def __post_init__(self):
        if self.bs1 is self.bs2:
            raise DomainError("bs1 and bs2 must be distinct states")
        if not 0.0 <= self.crosstalk_beta <= 0.2:
            raise DomainError("crosstalk_beta outside [0, 0.2]")
        if self.register_mode not in ("overwrite", "average"):
            raise DomainError(f"unknown register_mode {self.register_mode!r}")

    def set_phases(self, phi0: float, phi1: float):
        self.arm_phase_a, self.arm_phase_b = effective_arm_phases(
            phi0, phi1, self.crosstalk_beta
        )

    def state_array(self) -> np.ndarray:
        """Pack both machines into the (2, 6) layout used by the engine:
        [x0, x1, Y0c, Y0s, Y1c, Y1s] per beamsplitter."""
        out = np.empty((2, 6))
        for i, bs in enumerate((self.bs1, self.bs2)):
            out[i, 0:2] = bs.intensity
            out[i, 2:4] = bs.register[0]
            out[i, 4:6] = bs.register[1]
        return out

    def load_state_array(self, arr: np.ndarray):
        for i, bs in enumerate((self.bs1, self.bs2)):
            bs.intensity[:] = arr[i, 0:2]
            bs.register[0] = arr[i, 2:4]
            bs.register[1] = arr[i, 4:6]


def new_interferometer(alpha: float, beta: float = 0.0, **kwargs) -> Interferometer:
    return Interferometer(new_dlm(alpha), new_dlm(alpha), crosstalk_beta=beta, **kwargs)


def _register_average(state: DlmState, msg: Messenger):
    """Experimental averaged-register variant: exponential moving average of
    the arrival vectors, renormalized to unit length."""
    a = state.alpha
    k = msg.port
    rc = a * state.register[k, 0] + (1.0 - a) * msg.phase_vector[0]
    rs = a * state.register[k, 1] + (1.0 - a) * msg.phase_vector[1]
    n = math.hypot(rc, rs)
    if n > 1e-300:  # anti-parallel kick can cancel exactly; keep old register
        state.register[k, 0] = rc / n
        state.register[k, 1] = rs / n


def _bs_step(state: DlmState, msg: Messenger, u: float,
             learn_before: bool, register_mode: str) -> tuple[int, Messenger]:
    """One beamsplitter traversal: route and learn in the configured order."""

    def learn():
        k = msg.port
        a = state.alpha
        state.intensity[k] = a * state.intensity[k] + (1.0 - a)
        state.intensity[1 - k] = a * state.intensity[1 - k]
        if register_mode == "overwrite":
            state.register[k] = msg.phase_vector
        else:
            _register_average(state, msg)

    if learn_before:
        learn()
        return bs_route(state, msg, u)
    out, out_msg = bs_route(state, msg, u)
    learn()
    return out, out_msg


def mzi_traverse(ifo: Interferometer, input_port: int, rng) -> int:
    """Send one messenger through the interferometer; returns the output port.

    Both machines are mutated in place (this is the memory effect).  ``rng``
    supplies the two routing deviates, one per beamsplitter.
    """
    msg = Messenger(np.array([1.0, 0.0]), input_port)
    arm, msg = _bs_step(ifo.bs1, msg, rng.random(),
                        ifo.learn_before_route, ifo.register_mode)
    if arm == 0:
        msg = phase_shift(msg, ifo.arm_phase_a)
        msg.port = 1  # arm A crosses into bs2 port 1
    else:
        msg = phase_shift(msg, ifo.arm_phase_b)
        msg.port = 0
    out, _ = _bs_step(ifo.bs2, msg, rng.random(),
                      ifo.learn_before_route, ifo.register_mode)
    return out
