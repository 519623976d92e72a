"""Pure-numpy working-set solver loop, the fallback twin of _solver_core.

Both lanes implement the identical update sequence: second-order pair
selection on the boxed dual, analytic two-variable step with exact landing
on the box bounds, incremental maintenance of the per-kernel margin caches,
and periodic shrinking of confidently-bounded duals (with full gradient
reconstruction before any termination decision).  Ties in the selection
scans resolve to the lowest index in both lanes.
"""

from __future__ import annotations

import numpy as np

_TAU = 1e-12  # curvature floor for degenerate pairs


def _reconstruct(kstack, beta, y, alpha, fj, f, active, m):
    """Rebuild margin caches for inactive entries from the nonzero duals."""
    shrunk = np.flatnonzero(~active)
    if shrunk.size == 0:
        return
    sv = np.flatnonzero(alpha > 0.0)
    v = alpha[sv] * y[sv]
    if m == 1:
        f[shrunk] = v @ kstack[0][np.ix_(sv, shrunk)] if sv.size else 0.0
    else:
        for l in range(m):
            fj[l][shrunk] = (v @ kstack[l][np.ix_(sv, shrunk)]
                             if sv.size else 0.0)
        f[shrunk] = beta @ fj[:, shrunk]


def run_smo(kstack, beta, y, c_bound, eps, max_iter, alpha, fj, f, kdiag,
            trace=None):
    """Run pairwise coordinate ascent until the KKT gap is <= eps.

    Mutates ``alpha`` (duals), ``fj`` (per-kernel margins K_j (alpha * y))
    and ``f`` (combined margins) in place; ``kdiag`` is the combined kernel
    diagonal for the current weights.  Returns (iterations, gap).

    ``trace``, if a list, receives the dual objective after every pair
    update (debug hook used by the monotonicity tests).
    """
    m, n, _ = kstack.shape
    pos = y > 0
    active = np.ones(n, dtype=bool)
    # shrinking keeps caches exact only on the active set, so the traced
    # objective would be stale; disable it in debug mode
    interval = min(n, 1000) if trace is None else max_iter + 1
    counter = interval
    it = 0
    while it < max_iter:
        g = np.where(active, y - f, 0.0)
        up = active & np.where(pos, alpha < c_bound, alpha > 0.0)
        low = active & np.where(pos, alpha > 0.0, alpha < c_bound)
        gup = np.where(up, g, -np.inf)
        i = int(np.argmax(gup))
        gmax = gup[i]
        glow = np.where(low, g, np.inf)
        gmin = float(glow.min())

        if not np.isfinite(gmax) or gmax - gmin <= eps:
            if active.all():
                break
            # apparent convergence on the active set: rebuild the caches for
            # the shrunk entries and re-check optimality globally
            _reconstruct(kstack, beta, y, alpha, fj, f, active, m)
            active[:] = True
            counter = interval
            continue

        row_i = kstack[0, i] if m == 1 else beta @ kstack[:, i, :]
        cand = low & (g < gmax)
        if not cand.any():
            break
        a = kdiag[i] + kdiag - 2.0 * row_i
        np.maximum(a, _TAU, out=a)
        bvec = gmax - g
        score = np.where(cand, -(bvec * bvec) / a, np.inf)
        j = int(np.argmin(score))

        yi = float(y[i])
        yj = float(y[j])
        room_i = (c_bound - alpha[i]) if yi > 0 else alpha[i]
        room_j = alpha[j] if yj > 0 else (c_bound - alpha[j])
        aij = kdiag[i] + kdiag[j] - 2.0 * row_i[j]
        if aij < _TAU:
            aij = _TAU
        lam = (gmax - g[j]) / aij
        if room_i < lam:
            lam = room_i
        if room_j < lam:
            lam = room_j
        if lam <= 0.0:
            break

        old_i = alpha[i]
        old_j = alpha[j]
        if lam == room_i:
            alpha[i] = c_bound if yi > 0 else 0.0
        else:
            alpha[i] = old_i + yi * lam
        if lam == room_j:
            alpha[j] = 0.0 if yj > 0 else c_bound
        else:
            alpha[j] = old_j - yj * lam
        ci = (alpha[i] - old_i) * yi
        cj = (alpha[j] - old_j) * yj

        row_j = kstack[0, j] if m == 1 else beta @ kstack[:, j, :]
        if m > 1:
            # caches advance on the active entries only; reconstruction
            # covers the shrunk ones before any exit
            fj[:, active] += (ci * kstack[:, i, active]
                              + cj * kstack[:, j, active])
        f[active] += ci * row_i[active] + cj * row_j[active]
        it += 1
        if trace is not None:
            trace.append(float(alpha.sum() - 0.5 * np.dot(alpha * y, f)))

        counter -= 1
        if counter == 0:
            counter = interval
            # drop bounded duals that cannot re-enter the working set
            g = np.where(active, y - f, 0.0)
            up = active & np.where(pos, alpha < c_bound, alpha > 0.0)
            low = active & np.where(pos, alpha > 0.0, alpha < c_bound)
            gmax_s = float(np.max(np.where(up, g, -np.inf)))
            gmin_s = float(np.min(np.where(low, g, np.inf)))
            at_bound = (alpha == 0.0) | (alpha == c_bound)
            only_up = up & ~low
            only_low = low & ~up
            drop = active & at_bound & ((only_up & (g < gmin_s))
                                        | (only_low & (g > gmax_s)))
            active &= ~drop

    if not active.all():
        _reconstruct(kstack, beta, y, alpha, fj, f, active, m)
    if m == 1:
        # fj duplicates f for a single kernel; rebuild it once at exit
        fj[0] = f
    g = y - f
    gup = np.where(np.where(pos, alpha < c_bound, alpha > 0.0), g, -np.inf)
    glow = np.where(np.where(pos, alpha > 0.0, alpha < c_bound), g, np.inf)
    gap = float(gup.max() - glow.min())
    return it, gap
