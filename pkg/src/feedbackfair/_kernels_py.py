"""Pure-numpy versions of the loan-step kernels.

These must stay bit-identical to ``_kernels.pyx``: same operation order,
no transcendental functions (callers precompute those).
"""

from __future__ import annotations

import numpy as np


def assign_cells(cell_cum, capacity, u_pick, bins_per_group):
    """Map uniforms to (group, bin) cells through cumulative weights.

    A uniform ``u`` picks the first cell whose cumulative weight exceeds
    ``u * total``.  Draws landing on a full cell are moved, in applicant
    order, to the nearest cell of the same group with room left (lower bin
    first at equal distance).
    """
    cell_cum = np.asarray(cell_cum, dtype=np.float64)
    capacity = np.asarray(capacity, dtype=np.int64)
    total = cell_cum[-1]
    x = u_pick * total
    cells = np.searchsorted(cell_cum, x, side="right").astype(np.int64)
    ncell = len(cell_cum)
    over = cells >= ncell
    if over.any():
        cells[over] = _last_positive(cell_cum)
    taken = np.bincount(cells, minlength=ncell)
    if (taken > capacity).any():
        cells = _resolve_overflow(cells, capacity, bins_per_group)
    return cells


def _last_positive(cell_cum):
    prev = np.concatenate(([0.0], cell_cum[:-1]))
    return np.flatnonzero(cell_cum > prev)[-1]


def _resolve_overflow(cells, capacity, bins_per_group):
    cells = cells.copy()
    taken = np.zeros(len(capacity), dtype=np.int64)
    for i in range(len(cells)):
        c = int(cells[i])
        if taken[c] < capacity[c]:
            taken[c] += 1
            continue
        lo = (c // bins_per_group) * bins_per_group
        hi = lo + bins_per_group - 1
        for d in range(1, bins_per_group):
            if c - d >= lo and taken[c - d] < capacity[c - d]:
                c = c - d
                break
            if c + d <= hi and taken[c + d] < capacity[c + d]:
                c = c + d
                break
        else:
            raise ValueError("group has no capacity left")
        taken[c] += 1
        cells[i] = c
    return cells


def eqop_thresholds(n_cell, pos_cell, value_bin, tol):
    """Per-group bin thresholds with TPRs within ``tol`` and maximal expected value.

    Threshold ``j`` approves bins ``>= j``; ``j == nbins`` approves nobody.
    Ties resolve to the lowest ``(j_a, j_b)`` pair.
    """
    n_cell = np.asarray(n_cell, dtype=np.int64)
    pos_cell = np.asarray(pos_cell, dtype=np.int64)
    nb = n_cell.shape[1]
    gain = n_cell * value_bin                      # (2, nb)
    # suffix sums accumulated from the top bin down, with a trailing zero
    val = np.zeros((2, nb + 1))
    pos = np.zeros((2, nb + 1), dtype=np.int64)
    val[:, :nb] = np.cumsum(gain[:, ::-1], axis=1)[:, ::-1]
    pos[:, :nb] = np.cumsum(pos_cell[:, ::-1], axis=1)[:, ::-1]
    tpr = np.zeros((2, nb + 1))
    for g in range(2):
        if pos[g, 0] > 0:
            tpr[g] = pos[g] / pos[g, 0]
    ok = np.abs(tpr[0][:, None] - tpr[1][None, :]) <= tol
    total = val[0][:, None] + val[1][None, :]
    total = np.where(ok, total, -np.inf)
    flat = int(np.argmax(total))
    return divmod(flat, nb + 1)


def shift_population(hist, cells, approved_cell, repaid, z, u_round,
                     delta_repay, delta_default, delta_reject, sigma,
                     low, width):
    """Move each applicant's score and re-bin it with stochastic rounding."""
    hist = np.array(hist, dtype=np.int64, copy=True)
    ng, nb = hist.shape
    cells = np.asarray(cells, dtype=np.int64)
    approved = np.asarray(approved_cell, dtype=bool)[cells]
    base = np.where(approved, np.where(repaid, delta_repay, delta_default), delta_reject)
    delta = base + sigma * z
    bins = cells % nb
    score = (low + width * bins) + delta
    high = low + width * (nb - 1)
    score = np.minimum(np.maximum(score, low), high)
    pos = (score - low) / width
    floor = np.floor(pos)
    new_bin = floor.astype(np.int64) + (u_round < (pos - floor))
    new_bin = np.minimum(new_bin, nb - 1)
    group = cells // nb
    flat = hist.reshape(-1)
    np.subtract.at(flat, cells, 1)
    np.add.at(flat, group * nb + new_bin, 1)
    return hist
