"""Absorbed continuous-time random walks driven by the weighted form.

The walk jumps between in-domain cells at rate w_ij / h^d, matching the
generator of the discrete quadratic form, and is killed on entering the
absorbing collar {d < absorb_eps} or when the diffusion-time horizon runs
out. A high absorbed fraction means trajectories reach the boundary;
degenerate weights starve the near-boundary rates and the fraction drops.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geomfield import DistanceField
from .forms import SparseForm

__all__ = ["WalkConfig", "WalkResult", "walk_absorption"]

_RATE_CAP = 1e8


@dataclass(frozen=True)
class WalkConfig:
    """Parameters of an absorbed-walk experiment.

    start     cell index (flat, or a grid multi-index tuple)
    horizon   diffusion-time budget T
    trials    number of independent trajectories
    seed      base seed; every (trial, step) draw comes from its own
              counter-indexed substream, so trials are independent and
              results do not depend on execution order or batching
    absorb_eps  physical collar width that counts as reaching the boundary
    """

    start: object
    horizon: float
    trials: int
    seed: int
    absorb_eps: float

    def __post_init__(self):
        if not self.horizon > 0:
            raise ValueError("horizon must be positive")
        if self.trials < 1:
            raise ValueError("need at least one trial")
        if not self.absorb_eps > 0:
            raise ValueError("absorb_eps must be positive")


@dataclass(frozen=True)
class WalkResult:
    p_hat: float
    stderr: float
    absorbed: int
    trials: int
    clamp_events: int


def _mix64(x: np.ndarray) -> np.ndarray:
    # splitmix64 finalizer: bijective avalanche on uint64 counters
    x = x.copy()
    x ^= x >> np.uint64(30)
    x *= np.uint64(0xBF58476D1CE4E5B9)
    x ^= x >> np.uint64(27)
    x *= np.uint64(0x94D049BB133111EB)
    x ^= x >> np.uint64(31)
    return x


def _u01(seed: np.uint64, counter: np.ndarray) -> np.ndarray:
    """Uniform [0,1) draw indexed purely by (seed, counter)."""
    x = _mix64(seed ^ _mix64(counter))
    return (x >> np.uint64(11)) * 2.0**-53


def _transition_table(form: SparseForm, idx: np.ndarray):
    """Dense per-cell neighbor table: indices, cumulative rates, totals."""
    m = len(idx)
    pos = -np.ones(form.n_cells, dtype=np.int64)
    pos[idx] = np.arange(m)
    ii, jj, ww = form.edges
    rate = ww / form.cell_volume
    src = np.concatenate([pos[ii], pos[jj]])
    dst = np.concatenate([pos[jj], pos[ii]])
    rr = np.concatenate([rate, rate])
    order = np.argsort(src, kind="stable")
    src, dst, rr = src[order], dst[order], rr[order]
    slot = np.arange(len(src)) - np.searchsorted(src, src)

    deg = 2 * form.dim
    nbr = np.zeros((m, deg), dtype=np.int64)
    rates = np.zeros((m, deg))
    nbr[src, slot] = dst
    rates[src, slot] = rr
    total = rates.sum(axis=1)
    return nbr, np.cumsum(rates, axis=1), total


def walk_absorption(form: SparseForm, field: DistanceField, cfg: WalkConfig) -> WalkResult:
    """Run cfg.trials absorbed walks; return the absorbed fraction.

    Each holding time is exponential with the cell's total exit rate
    (clamped at 1e8; clamp occurrences are counted), and the jump target
    is drawn proportionally to the edge rates. Trials advance in lockstep,
    but the k-th draw of trial t depends only on (seed, t, k): results are
    reproducible bit-for-bit, partial runs merge by summing hits, and
    trajectories stay coupled pathwise when only the horizon or the collar
    width changes.
    """
    grid = field.grid
    h = grid.h
    if cfg.absorb_eps < 2.0 * h:
        raise ValueError("absorb_eps must span at least two cells")
    if form.n_cells != grid.n_cells:
        raise ValueError("form and field live on different grids")

    start = cfg.start
    if not np.isscalar(start):
        start = int(np.ravel_multi_index(tuple(int(k) for k in start), grid.dims))
    else:
        start = int(start)
    mask_flat = grid.omega_mask.ravel()
    if not (0 <= start < grid.n_cells) or not mask_flat[start]:
        raise ValueError("start cell must be inside the domain")
    d_flat = field.values.ravel()
    if d_flat[start] < cfg.absorb_eps:
        raise ValueError("start cell lies inside the absorbing collar")

    idx = np.flatnonzero(mask_flat)
    nbr, cum, total = _transition_table(form, idx)
    absorbing = d_flat[idx] < cfg.absorb_eps
    pos = -np.ones(grid.n_cells, dtype=np.int64)
    pos[idx] = np.arange(len(idx))
    start_c = pos[start]

    n = cfg.trials
    seed = np.uint64(cfg.seed & 0xFFFFFFFFFFFFFFFF)
    trial_ids = np.arange(n, dtype=np.uint64) << np.uint64(41)
    where = np.full(n, start_c)
    t = np.zeros(n)
    steps = np.zeros(n, dtype=np.uint64)
    alive = np.ones(n, dtype=bool)
    absorbed = 0
    clamp_events = 0

    while alive.any():
        ia = np.flatnonzero(alive)
        ctr = trial_ids[ia] | (steps[ia] << np.uint64(1))
        u_hold = _u01(seed, ctr)
        u_pick = _u01(seed, ctr | np.uint64(1))
        steps[ia] += np.uint64(1)

        rt = total[where[ia]]
        over = rt > _RATE_CAP
        clamp_events += int(over.sum())
        rt = np.minimum(rt, _RATE_CAP)
        with np.errstate(divide="ignore"):
            dt = np.where(rt > 0, -np.log1p(-u_hold) / np.maximum(rt, 1e-300), np.inf)
        t[ia] += dt
        timed_out = t[ia] > cfg.horizon
        alive[ia[timed_out]] = False
        move = ia[~timed_out]
        if move.size == 0:
            continue
        rows = where[move]
        pick = u_pick[~timed_out] * total[rows]
        k = (cum[rows] <= pick[:, None]).sum(axis=1)
        landed = nbr[rows, np.minimum(k, nbr.shape[1] - 1)]
        where[move] = landed
        hit = absorbing[landed]
        if hit.any():
            absorbed += int(hit.sum())
            alive[move[hit]] = False

    p_hat = absorbed / n
    stderr = float(np.sqrt(p_hat * (1.0 - p_hat) / n))
    return WalkResult(float(p_hat), stderr, int(absorbed), int(n), int(clamp_events))
