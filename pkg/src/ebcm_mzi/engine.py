"""Bulk trial loop shared by all acquisition operations.

One interferometer is strictly sequential (trial order is meaningful), so the
hot path is a scalar loop.  It is written once in numba-compatible Python and
compiled with numba when available; the plain-Python function is the fallback
and the two are bit-identical by construction since they are the same code
consuming the same pre-drawn uniforms.

Uniform consumption contract (per trial, from one flat array, in order):

    1. switch draw         only on protocol draw events (random kind,
                           trial_index % n == 0); x = -1 if u < 0.5 else +1
    2. background gate     always; fires when u < onf
    3. background routing  2 deviates, only when the background fired
    4. heralded routing    2 deviates
    5. detection           always; counted when u < efficiency
    6. dark gate           always; adds a count on port 0 when u < dark_prob

A trial therefore consumes at most 8 deviates; callers allocate 8 * trials.
State layout per beamsplitter: [x0, x1, Y0c, Y0s, Y1c, Y1s].
"""

from __future__ import annotations

import math

import numpy as np

SQRT1_2 = math.sqrt(0.5)

# protocol kinds for the kernel
KIND_FIXED = 0
KIND_RANDOM = 1

REGISTER_OVERWRITE = 0
REGISTER_AVERAGE = 1


def init_state() -> np.ndarray:
    """Fresh (2, 6) state array for both beamsplitters."""
    state = np.zeros((2, 6))
    state[:, 0] = 0.5
    state[:, 1] = 0.5
    state[:, 2] = 1.0
    state[:, 4] = 1.0
    return state


def _traverse(state, pa, pb, u1, u2, alpha, register_mode, learn_before):
    """One messenger, port 0 in, through bs1 -> arm -> bs2; returns out port."""
    port = 0
    mc, ms = 1.0, 0.0
    out = 0
    for ibs in range(2):
        x0 = state[ibs, 0]
        x1 = state[ibs, 1]
        if learn_before:
            if port == 0:
                x0 = alpha * x0 + (1.0 - alpha)
                x1 = alpha * x1
            else:
                x1 = alpha * x1 + (1.0 - alpha)
                x0 = alpha * x0
            state[ibs, 0] = x0
            state[ibs, 1] = x1
            if register_mode == REGISTER_OVERWRITE:
                state[ibs, 2 + 2 * port] = mc
                state[ibs, 3 + 2 * port] = ms
            else:
                rc = alpha * state[ibs, 2 + 2 * port] + (1.0 - alpha) * mc
                rs = alpha * state[ibs, 3 + 2 * port] + (1.0 - alpha) * ms
                rn = math.sqrt(rc * rc + rs * rs)
                if rn > 1e-300:
                    state[ibs, 2 + 2 * port] = rc / rn
                    state[ibs, 3 + 2 * port] = rs / rn
        a0 = math.sqrt(x0)
        a1 = math.sqrt(x1)
        z0c = a0 * state[ibs, 2]
        z0s = a0 * state[ibs, 3]
        z1c = a1 * state[ibs, 4]
        z1s = a1 * state[ibs, 5]
        w0c = (z0c - z1s) * SQRT1_2
        w0s = (z0s + z1c) * SQRT1_2
        w1c = (z1c - z0s) * SQRT1_2
        w1s = (z1s + z0c) * SQRT1_2
        n0 = w0c * w0c + w0s * w0s
        n1 = w1c * w1c + w1s * w1s
        p0 = n0 / (n0 + n1)
        u = u1 if ibs == 0 else u2
        if u < p0:
            out = 0
            wn = math.sqrt(n0)
            oc, osn = w0c / wn, w0s / wn
        else:
            out = 1
            wn = math.sqrt(n1)
            oc, osn = w1c / wn, w1s / wn
        if not learn_before:
            if port == 0:
                state[ibs, 0] = alpha * state[ibs, 0] + (1.0 - alpha)
                state[ibs, 1] = alpha * state[ibs, 1]
            else:
                state[ibs, 1] = alpha * state[ibs, 1] + (1.0 - alpha)
                state[ibs, 0] = alpha * state[ibs, 0]
            if register_mode == REGISTER_OVERWRITE:
                state[ibs, 2 + 2 * port] = mc
                state[ibs, 3 + 2 * port] = ms
            else:
                rc = alpha * state[ibs, 2 + 2 * port] + (1.0 - alpha) * mc
                rs = alpha * state[ibs, 3 + 2 * port] + (1.0 - alpha) * ms
                rn = math.sqrt(rc * rc + rs * rs)
                if rn > 1e-300:
                    state[ibs, 2 + 2 * port] = rc / rn
                    state[ibs, 3 + 2 * port] = rs / rn
        mc, ms = oc, osn
        if ibs == 0:
            if out == 0:
                ph = pa  # arm A, crosses into bs2 port 1
                port = 1
            else:
                ph = pb
                port = 0
            cph = math.cos(ph)
            sph = math.sin(ph)
            mc, ms = mc * cph - ms * sph, mc * sph + ms * cph
    return out


def _run_cell(state, n_trials, phi0, beta, proto_kind, proto_n, fixed_x,
              phi1_minus, phi1_plus, onf, efficiency, dark_prob, alpha,
              register_mode, learn_before, uniforms, counts, trials_ctx,
              darks_ctx):
    """Run one acquisition cell; returns (n_background, cursor).

    counts: (2, 2) int64, [port, ctx] with ctx 0 -> x=-1, 1 -> x=+1.
    trials_ctx, darks_ctx: (2,) int64 per context.
    """
    n_bg = 0
    cur = 0
    x_val = fixed_x
    for t in range(n_trials):
        if proto_kind == KIND_RANDOM and t % proto_n == 0:
            x_val = -1 if uniforms[cur] < 0.5 else 1
            cur += 1
        phi1 = phi1_minus if x_val == -1 else phi1_plus
        pa = phi0 - beta * phi1
        pb = phi1 - beta * phi0
        u_bg = uniforms[cur]
        cur += 1
        if u_bg < onf:
            _traverse(state, pa, pb, uniforms[cur], uniforms[cur + 1],
                      alpha, register_mode, learn_before)
            cur += 2
            n_bg += 1
        out = _traverse(state, pa, pb, uniforms[cur], uniforms[cur + 1],
                        alpha, register_mode, learn_before)
        cur += 2
        ctx = 0 if x_val == -1 else 1
        trials_ctx[ctx] += 1
        u_eff = uniforms[cur]
        cur += 1
        if u_eff < efficiency:
            counts[out, ctx] += 1
        u_dark = uniforms[cur]
        cur += 1
        if u_dark < dark_prob:
            counts[0, ctx] += 1
            darks_ctx[ctx] += 1
    return n_bg, cur


# plain-Python references (always available, used for cross-validation)
traverse_py = _traverse
run_cell_py = _run_cell

try:  # pragma: no cover - exercised indirectly everywhere
    from numba import njit

    _traverse = njit(cache=True, nogil=True)(_traverse)
    run_cell_jit = njit(cache=True, nogil=True)(_run_cell)
    HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    run_cell_jit = _run_cell
    HAVE_NUMBA = False


def run_cell(state, n_trials, phi0, *, beta, proto_kind, proto_n, fixed_x,
             phi1_minus, phi1_plus, onf, efficiency, dark_prob, alpha,
             register_mode=REGISTER_OVERWRITE, learn_before=False,
             uniforms=None, rng=None, jit=True):
    """Convenience wrapper around the kernel.

    Exactly one of ``uniforms`` / ``rng`` must be given; with ``rng`` the
    uniform block is drawn as one array of 8 * n_trials deviates.
    Returns (counts, trials_ctx, darks, n_background).
    """
    if uniforms is None:
        uniforms = rng.random(8 * n_trials)
    counts = np.zeros((2, 2), dtype=np.int64)
    trials_ctx = np.zeros(2, dtype=np.int64)
    darks_ctx = np.zeros(2, dtype=np.int64)
    fn = run_cell_jit if jit else run_cell_py
    n_bg, cur = fn(
        state, n_trials, phi0, beta, proto_kind, proto_n, fixed_x,
        phi1_minus, phi1_plus, onf, efficiency, dark_prob, alpha,
        register_mode, learn_before, uniforms, counts, trials_ctx, darks_ctx,
    )
    if cur > uniforms.size:
        raise RuntimeError("uniform block exhausted (internal error)")
    return counts, trials_ctx, darks_ctx, n_bg


def warm_up(state, n_trials, phi0, phi1, *, beta, alpha,
            register_mode=REGISTER_OVERWRITE, learn_before=False, rng=None):
    """Burn in the machines with untracked traversals at fixed phases."""
    if n_trials <= 0:
        return
    run_cell(
        state, n_trials, phi0, beta=beta, proto_kind=KIND_FIXED, proto_n=1,
        fixed_x=-1 if phi1 == 0.0 else 1, phi1_minus=phi1, phi1_plus=phi1,
        onf=0.0, efficiency=0.0, dark_prob=0.0, alpha=alpha,
        register_mode=register_mode, learn_before=learn_before, rng=rng,
    )
