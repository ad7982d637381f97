"""Acquisition protocols: phase schedules, instrument models, measurement runs.

Reproduces the experimental procedure: for each value of the slow phase phi0,
ten sets are taken with the fast switch held at x=-1, ten with x=+1, then ten
with x drawn at random, and the whole block is repeated across the phi0 grid
against one persistent interferometer.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import engine, seeding
from .core import PHI1_MAP, DomainError, new_interferometer


@dataclass(frozen=True)
class PhaseProtocol:
    """How the fast switch variable x is assigned across trials.

    kind "fixed": x constant at ``x``.
    kind "random": a fresh fair draw every ``n`` trials (n=1 is per-photon
    switching; RandomPerN(1) is behaviorally identical to RandomPerPhoton).
    The switch sets the arm-B phase through the fixed map
    {-1: 0, +1: pi/2}.
    """

    kind: str
    x: int = -1
    n: int = 1

    def __post_init__(self):
        if self.kind not in ("fixed", "random"):
            raise DomainError(f"unknown protocol kind {self.kind!r}")
        if self.kind == "fixed" and self.x not in (-1, +1):
            raise DomainError("fixed protocol needs x in {-1, +1}")
        if self.kind == "random" and self.n < 1:
            raise DomainError("random protocol needs n >= 1")

    @property
    def tag(self) -> str:
        if self.kind == "fixed":
            return "x=-1" if self.x == -1 else "x=+1"
        return f"random/{self.n}"

    @staticmethod
    def from_tag(tag: str) -> "PhaseProtocol":
        if tag == "x=-1":
            return fixed_x(-1)
        if tag == "x=+1":
            return fixed_x(+1)
        if tag.startswith("random/"):
            return random_per_n(int(tag.split("/", 1)[1]))
        raise DomainError(f"unknown protocol tag {tag!r}")


def fixed_x(x: int) -> PhaseProtocol:
    return PhaseProtocol("fixed", x=x)


def random_per_photon() -> PhaseProtocol:
    return PhaseProtocol("random", n=1)


def random_per_n(n: int) -> PhaseProtocol:
    return PhaseProtocol("random", n=n)


def phi1_of(x: int) -> float:
    return PHI1_MAP[x]


class XStream:
    """Stateful x drawer for one cell; implements the draw-and-hold rule."""

    def __init__(self, protocol: PhaseProtocol, rng):
        self.protocol = protocol
        self.rng = rng
        self._held = None

    def draw(self, trial_index: int) -> int:
        p = self.protocol
        if p.kind == "fixed":
            return p.x
        if trial_index % p.n == 0 or self._held is None:
            self._held = -1 if self.rng.random() < 0.5 else +1
        return self._held


@dataclass(frozen=True)
class SourceModel:
    """Heralded single-photon source imperfections.

    Only the statistical consequences are modeled: with probability ``onf``
    a trial is preceded by one untracked background messenger that trains the
    beamsplitters but is never counted.  The switch window and dead time are
    carried as metadata; one-messenger-at-a-time execution already guarantees
    the phases are constant during a traversal.  Multi-photon emission is out
    of scope and ``g2_flag`` must stay off.
    """

    onf: float = 0.0047
    g2_flag: bool = False
    switch_window_ns: float = 4.0
    dead_time_us: float = 20.0

    def __post_init__(self):
        if not 0.0 <= self.onf <= 0.05:
            raise DomainError(f"onf={self.onf!r} outside [0, 0.05]")
        if self.g2_flag:
            raise DomainError("g2_flag must be false (multi-photon out of scope)")


@dataclass(frozen=True)
class DetectorModel:
    """Gated detector: efficiency thins real photons, dark counts add a flat
    background on the monitored port (port 0)."""

    efficiency: float = 1.0
    dark_prob_per_gate: float = 0.0
    gate_window_ns: float = 50.0

    def __post_init__(self):
        if not 0.0 < self.efficiency <= 1.0:
            raise DomainError(f"efficiency={self.efficiency!r} outside (0, 1]")
        if not 0.0 <= self.dark_prob_per_gate <= 0.1:
            raise DomainError(
                f"dark_prob_per_gate={self.dark_prob_per_gate!r} outside [0, 0.1]"
            )


@dataclass
class FringeRecord:
    """Accumulated counts at one (phi0, protocol, set) cell.

    ``context`` is None for a whole-cell record, or "x=-1"/"x=+1" for counts
    conditioned on the switch value of the detected trial.  Counts become
    floats after dark subtraction.
    """

    phi0: float
    protocol: str
    counts_port0: float
    counts_port1: float
    darks_recorded: int
    trials: int
    seed: int
    set_index: int = 0
    context: str | None = None
    dark_subtracted: bool = False
    underflow: bool = False

    def __post_init__(self):
        if min(self.counts_port0, self.counts_port1, self.trials,
               self.darks_recorded) < 0:
            raise DomainError("counts, trials and darks must be >= 0")
        if self.counts_port0 + self.counts_port1 > self.trials + self.darks_recorded:
            raise DomainError("counts exceed trials + darks")


_KERNEL_KIND = {"fixed": engine.KIND_FIXED, "random": engine.KIND_RANDOM}


@dataclass
class CellResult:
    record: FringeRecord
    by_context: tuple[FringeRecord, FringeRecord]
    n_background: int


def run_point(ifo, protocol: PhaseProtocol, phi0: float, n_photons: int,
              source: SourceModel, det: DetectorModel, rng,
              seed_id: int = 0, set_index: int = 0,
              poisson_trials: bool = False) -> CellResult:
    """One acquisition cell: ``n_photons`` heralded trials at fixed phi0.

    With ``poisson_trials`` the actual trial count is Poisson(n_photons),
    matching a fixed-duration measurement window.  Consumes one Poisson draw
    (when enabled) followed by one flat block of uniforms from ``rng``.
    """
    if n_photons < 1:
        raise DomainError("n_photons must be >= 1")
    trials = int(rng.poisson(n_photons)) if poisson_trials else n_photons
    state = ifo.state_array()
    counts, trials_ctx, darks_ctx, n_bg = engine.run_cell(
        state, trials, phi0,
        beta=ifo.crosstalk_beta,
        proto_kind=_KERNEL_KIND[protocol.kind],
        proto_n=protocol.n,
        fixed_x=protocol.x,
        phi1_minus=PHI1_MAP[-1], phi1_plus=PHI1_MAP[+1],
        onf=source.onf, efficiency=det.efficiency,
        dark_prob=det.dark_prob_per_gate,
        alpha=ifo.bs1.alpha,
        register_mode=(engine.REGISTER_OVERWRITE
                       if ifo.register_mode == "overwrite"
                       else engine.REGISTER_AVERAGE),
        learn_before=ifo.learn_before_route,
        rng=rng,
    )
    ifo.load_state_array(state)
    whole = FringeRecord(phi0, protocol.tag, int(counts[0].sum()),
                         int(counts[1].sum()), int(darks_ctx.sum()), trials,
                         seed_id, set_index)
    # dark gates fire inside a trial, so each split record carries the darks
    # recorded while its context was active
    by_ctx = tuple(
        FringeRecord(phi0, protocol.tag, int(counts[0, c]), int(counts[1, c]),
                     int(darks_ctx[c]), int(trials_ctx[c]), seed_id, set_index,
                     context=("x=-1" if c == 0 else "x=+1"))
        for c in (0, 1)
    )
    return CellResult(whole, by_ctx, n_bg)


def default_phi0_grid(count: int = 16, start: float = 0.0,
                      stop: float = 2 * math.pi) -> np.ndarray:
    if count < 1:
        raise DomainError("phi0 grid needs at least one point")
    return start + (stop - start) * np.arange(count) / count


PAPER_PROTOCOLS = (fixed_x(-1), fixed_x(+1), random_per_photon())


def run_sweep(cfg) -> list[FringeRecord]:
    """Full acquisition in the published ordering.

    Per phi0 (in grid order): all sets with x=-1, all sets with x=+1, then all
    random sets, everything against one persistent interferometer unless
    ``cfg.persistence`` is off (then every cell starts from a fresh machine
    and cells are order-independent).
    """
    grid = cfg.grid()
    protocols = [PhaseProtocol.from_tag(t) for t in cfg.protocols]
    source, det = cfg.source_model(), cfg.detector_model()
    ifo = new_interferometer(cfg.alpha, cfg.beta, **cfg.model_kwargs())
    if cfg.warmup > 0:
        state = ifo.state_array()
        engine.warm_up(state, cfg.warmup, grid[0], PHI1_MAP[-1],
                       beta=cfg.beta, alpha=cfg.alpha,
                       register_mode=engine.REGISTER_OVERWRITE
                       if cfg.register_mode == "overwrite"
                       else engine.REGISTER_AVERAGE,
                       learn_before=cfg.learn_before_route,
                       rng=seeding.substream(cfg.master_seed, seeding.NS_WARMUP))
        ifo.load_state_array(state)
    records = []
    for i, phi0 in enumerate(grid):
        for proto in protocols:
            pcode = seeding.protocol_code(proto)
            for s in range(cfg.sets_per_protocol):
                if not cfg.persistence:
                    ifo = new_interferometer(cfg.alpha, cfg.beta,
                                             **cfg.model_kwargs())
                key = (seeding.NS_SWEEP, i, pcode, s)
                rng = seeding.substream(cfg.master_seed, *key)
                sid = seeding.stream_id(cfg.master_seed, *key)
                res = run_point(ifo, proto, float(phi0), cfg.photons_per_set,
                                source, det, rng, seed_id=sid, set_index=s,
                                poisson_trials=cfg.poisson_trials)
                records.append(res.record)
    return records


@dataclass
class SwitchRateFringes:
    """Per-protocol fringes from the switching-rate comparison, whole and
    conditioned on the switch value of each detected trial."""

    protocol: str
    records: list[FringeRecord] = field(default_factory=list)
    by_context: list[FringeRecord] = field(default_factory=list)


def run_switch_rate_comparison(cfg, n_slow: int = 10):
    """Acquire the same fringe with per-photon and per-``n_slow`` switching.

    Both runs use identical per-cell substreams (the protocol is excluded
    from the spawn key), so they are common-random-number paired.  Returns
    (per_photon, per_n) as SwitchRateFringes.
    """
    grid = cfg.grid()
    source, det = cfg.source_model(), cfg.detector_model()
    out = []
    for proto in (random_per_photon(), random_per_n(n_slow)):
        ifo = new_interferometer(cfg.alpha, cfg.beta, **cfg.model_kwargs())
        fr = SwitchRateFringes(proto.tag)
        for i, phi0 in enumerate(grid):
            for s in range(cfg.sets_per_protocol):
                key = (seeding.NS_SWITCH, i, s)
                rng = seeding.substream(cfg.master_seed, *key)
                sid = seeding.stream_id(cfg.master_seed, *key)
                res = run_point(ifo, proto, float(phi0), cfg.photons_per_set,
                                source, det, rng, seed_id=sid, set_index=s,
                                poisson_trials=cfg.poisson_trials)
                fr.records.append(res.record)
                fr.by_context.extend(res.by_context)
        out.append(fr)
    return out[0], out[1]


def stationary_warmup_trials(alpha: float) -> int:
    """Burn-in long enough to damp the cold-start transient of the intensity
    estimates (>= 25 memory time constants)."""
    if alpha >= 1.0:
        return 2000
    return max(2000, int(25.0 / (1.0 - alpha)))


def simulate_prediction_curves(cfg, alpha: float, protocol: PhaseProtocol,
                               replicas: int | None = None,
                               warmup: int | None = None):
    """Monte-Carlo expectation curves of the event-based model.

    Runs ``replicas`` independent machines over the phi0 grid (one set per
    point) after burning each in to stationarity, and averages the detected
    fraction per port-0 gate.  Replica substreams exclude alpha, so curves at
    different alpha are common-random-number paired.  Replicas run in
    parallel across ``cfg.threads`` workers; the reduction is in replica
    order, so results do not depend on the thread count.  Returns a dict with
    per-trial probability curves: "all", "x=-1", "x=+1".
    """
    grid = cfg.grid()
    source, det = cfg.source_model(), cfg.detector_model()
    r = cfg.replicas if replicas is None else replicas
    if r < 1:
        raise DomainError("need at least one replica")
    w = stationary_warmup_trials(alpha) if warmup is None else warmup

    def one_replica(rep: int):
        rep_seed = seeding.seed_sequence(cfg.master_seed, seeding.NS_REPLICA, rep)
        rep_master = int(rep_seed.generate_state(1, dtype=np.uint64)[0])
        ifo = new_interferometer(alpha, cfg.beta, **cfg.model_kwargs())
        state = ifo.state_array()
        engine.warm_up(state, w, float(grid[0]), PHI1_MAP[-1], beta=cfg.beta,
                       alpha=alpha,
                       learn_before=cfg.learn_before_route,
                       rng=seeding.substream(rep_master, seeding.NS_WARMUP))
        ifo.load_state_array(state)
        sums = {"all": np.zeros(len(grid)), "x=-1": np.zeros(len(grid)),
                "x=+1": np.zeros(len(grid))}
        trials = {k: np.zeros(len(grid)) for k in sums}
        for i, phi0 in enumerate(grid):
            rng = seeding.substream(rep_master, seeding.NS_SWEEP, i,
                                    seeding.protocol_code(protocol), 0)
            res = run_point(ifo, protocol, float(phi0), cfg.photons_per_set,
                            source, det, rng,
                            poisson_trials=cfg.poisson_trials)
            sums["all"][i] += res.record.counts_port0
            trials["all"][i] += res.record.trials
            for rec in res.by_context:
                sums[rec.context][i] += rec.counts_port0
                trials[rec.context][i] += rec.trials
        return sums, trials

    n_threads = max(1, getattr(cfg, "threads", 1))
    if n_threads == 1:
        parts = [one_replica(rep) for rep in range(r)]
    else:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=n_threads) as pool:
            parts = list(pool.map(one_replica, range(r)))
    sums = {k: np.zeros(len(grid)) for k in ("all", "x=-1", "x=+1")}
    trials = {k: np.zeros(len(grid)) for k in sums}
    for part_sums, part_trials in parts:  # replica order, thread-independent
        for k in sums:
            sums[k] += part_sums[k]
            trials[k] += part_trials[k]
    return {k: sums[k] / np.maximum(trials[k], 1.0) for k in sums}
