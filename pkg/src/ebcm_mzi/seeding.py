"""Deterministic seeding: one master seed, per-cell substreams.

Every acquisition cell gets its own child of ``SeedSequence(master)`` keyed
directly by a spawn key, so streams are independent and a cell's stream does
not move when other cells are added or removed.  Spawn keys carry a namespace
so distinct operations can never collide:

    (NS_SWEEP, phi_index, protocol_code, set_index)    run_sweep cells
    (NS_SWITCH, phi_index, set_index)                  switch-rate comparison
                                                       (protocol excluded so
                                                       both protocols see the
                                                       same deviates)
    (NS_REFERENCE, context_index)                      QM reference data
    (NS_WARMUP,)                                       burn-in traversals
    (NS_REPLICA, replica_index)                        root for one prediction
                                                       replica (alpha excluded
                                                       so alpha scans share
                                                       random numbers)

The memory parameter never enters a key: runs at different alpha reuse
identical deviate streams, which makes alpha comparisons common-random-number
paired.
"""

from __future__ import annotations

import numpy as np

NS_SWEEP = 0
NS_SWITCH = 1
NS_REFERENCE = 2
NS_WARMUP = 3
NS_REPLICA = 4

# stable small codes for protocol tags in spawn keys
_KIND_CODE = {"fixed": 0, "random": 1}


def protocol_code(protocol) -> int:
    if protocol.kind == "fixed":
        return 0 if protocol.x == -1 else 1
    return 100 + protocol.n


def seed_sequence(master_seed: int, *key: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(master_seed, spawn_key=tuple(int(k) for k in key))


def substream(master_seed: int, *key: int) -> np.random.Generator:
    return np.random.default_rng(seed_sequence(master_seed, *key))


def stream_id(master_seed: int, *key: int) -> int:
    """Stable 64-bit identifier of a substream, recorded in output rows."""
    words = seed_sequence(master_seed, *key).generate_state(2, dtype=np.uint64)
    return int(words[0])
