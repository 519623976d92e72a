# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled working-set solver loop (hot kernel of the package).

Twin of lpmkl._solver_numpy.run_smo: same update sequence, same
lowest-index tie breaking, same exact landing on the box bounds, same
shrinking schedule with full cache reconstruction before termination.
Kept to the bare iteration loop; all orchestration stays in Python.

Single-kernel solves (m == 1) read kernel rows in place and reconstruct
the per-kernel margin cache once at exit; weighted stacks assemble the
combined rows into scratch buffers.
"""

import numpy as np

from libc.math cimport INFINITY


cdef void _reconstruct(const double[:, :, ::1] kstack, const double[::1] beta,
                       const double[::1] y, const double[::1] alpha,
                       double[:, ::1] fj, double[::1] f,
                       const unsigned char[::1] active,
                       Py_ssize_t m, Py_ssize_t n) noexcept nogil:
    """Rebuild margin caches for inactive entries from the nonzero duals."""
    cdef Py_ssize_t s, t, l
    cdef double w
    if m == 1:
        for t in range(n):
            if not active[t]:
                f[t] = 0.0
        for s in range(n):
            if alpha[s] > 0.0:
                w = alpha[s] * y[s]
                for t in range(n):
                    if not active[t]:
                        f[t] = f[t] + w * kstack[0, s, t]
        return
    for l in range(m):
        for t in range(n):
            if not active[t]:
                fj[l, t] = 0.0
    for s in range(n):
        if alpha[s] > 0.0:
            w = alpha[s] * y[s]
            for l in range(m):
                for t in range(n):
                    if not active[t]:
                        fj[l, t] = fj[l, t] + w * kstack[l, s, t]
    for t in range(n):
        if not active[t]:
            f[t] = 0.0
            for l in range(m):
                f[t] = f[t] + beta[l] * fj[l, t]


def run_smo(const double[:, :, ::1] kstack, const double[::1] beta,
            const double[::1] y, double c_bound, double eps,
            long long max_iter, double[::1] alpha, double[:, ::1] fj,
            double[::1] f, const double[::1] kdiag):
    """Pairwise coordinate ascent to KKT gap <= eps; see the numpy twin."""
    cdef Py_ssize_t m = kstack.shape[0]
    cdef Py_ssize_t n = kstack.shape[1]
    cdef double[::1] buf_i = np.empty(n, dtype=np.float64)
    cdef double[::1] buf_j = np.empty(n, dtype=np.float64)
    cdef unsigned char[::1] active = np.ones(n, dtype=np.uint8)
    cdef const double* row_i
    cdef const double* row_j
    cdef long long it = 0
    cdef long long interval = n if n < 1000 else 1000
    cdef long long counter = interval
    cdef Py_ssize_t i, j, t, l
    cdef double gmax, gmin, gt, a_t, b_t, score, best, lam
    cdef double room_i, room_j, aij, old_i, old_j, ci, cj, yi, yj, gj
    cdef double tau = 1e-12
    cdef bint all_active = True
    cdef bint up_only, low_only

    with nogil:
        while it < max_iter:
            # selection value g_t = y_t - f_t; first max / first min win ties
            gmax = -INFINITY
            gmin = INFINITY
            i = -1
            for t in range(n):
                if not active[t]:
                    continue
                gt = y[t] - f[t]
                if (y[t] > 0 and alpha[t] < c_bound) or (y[t] < 0 and alpha[t] > 0.0):
                    if gt > gmax:
                        gmax = gt
                        i = t
                if (y[t] < 0 and alpha[t] < c_bound) or (y[t] > 0 and alpha[t] > 0.0):
                    if gt < gmin:
                        gmin = gt
            if i < 0 or gmax - gmin <= eps:
                if all_active:
                    break
                # apparent convergence on the active set: rebuild caches for
                # the shrunk entries and re-check optimality globally
                _reconstruct(kstack, beta, y, alpha, fj, f, active, m, n)
                for t in range(n):
                    active[t] = 1
                all_active = True
                counter = interval
                continue

            if m == 1:
                row_i = &kstack[0, i, 0]
            else:
                for t in range(n):
                    if active[t]:
                        buf_i[t] = beta[0] * kstack[0, i, t]
                for l in range(1, m):
                    for t in range(n):
                        if active[t]:
                            buf_i[t] = buf_i[t] + beta[l] * kstack[l, i, t]
                row_i = &buf_i[0]

            # second-order partner: minimize -b^2/a over violating pairs
            yi = y[i]
            j = -1
            best = INFINITY
            for t in range(n):
                if not active[t]:
                    continue
                if (y[t] < 0 and alpha[t] < c_bound) or (y[t] > 0 and alpha[t] > 0.0):
                    gt = y[t] - f[t]
                    if gt < gmax:
                        b_t = gmax - gt
                        a_t = kdiag[i] + kdiag[t] - 2.0 * row_i[t]
                        if a_t < tau:
                            a_t = tau
                        score = -(b_t * b_t) / a_t
                        if score < best:
                            best = score
                            j = t
            if j < 0:
                break

            yj = y[j]
            gj = y[j] - f[j]
            room_i = (c_bound - alpha[i]) if yi > 0 else alpha[i]
            room_j = alpha[j] if yj > 0 else (c_bound - alpha[j])
            aij = kdiag[i] + kdiag[j] - 2.0 * row_i[j]
            if aij < tau:
                aij = tau
            lam = (gmax - gj) / aij
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

            if m == 1:
                row_j = &kstack[0, j, 0]
            else:
                for t in range(n):
                    if active[t]:
                        buf_j[t] = beta[0] * kstack[0, j, t]
                for l in range(1, m):
                    for t in range(n):
                        if active[t]:
                            buf_j[t] = buf_j[t] + beta[l] * kstack[l, j, t]
                row_j = &buf_j[0]
                # caches advance on the active entries only; reconstruction
                # covers the shrunk ones before any exit
                for l in range(m):
                    for t in range(n):
                        if active[t]:
                            fj[l, t] = fj[l, t] + ci * kstack[l, i, t] + cj * kstack[l, j, t]
            for t in range(n):
                if active[t]:
                    f[t] = f[t] + ci * row_i[t] + cj * row_j[t]
            it += 1

            counter -= 1
            if counter == 0:
                counter = interval
                # drop bounded duals that cannot re-enter the working set
                gmax = -INFINITY
                gmin = INFINITY
                for t in range(n):
                    if not active[t]:
                        continue
                    gt = y[t] - f[t]
                    if (y[t] > 0 and alpha[t] < c_bound) or (y[t] < 0 and alpha[t] > 0.0):
                        if gt > gmax:
                            gmax = gt
                    if (y[t] < 0 and alpha[t] < c_bound) or (y[t] > 0 and alpha[t] > 0.0):
                        if gt < gmin:
                            gmin = gt
                for t in range(n):
                    if not active[t]:
                        continue
                    if alpha[t] != 0.0 and alpha[t] != c_bound:
                        continue
                    gt = y[t] - f[t]
                    up_only = ((y[t] > 0 and alpha[t] < c_bound)
                               or (y[t] < 0 and alpha[t] > 0.0))
                    low_only = ((y[t] < 0 and alpha[t] < c_bound)
                                or (y[t] > 0 and alpha[t] > 0.0))
                    if up_only and not low_only and gt < gmin:
                        active[t] = 0
                        all_active = False
                    elif low_only and not up_only and gt > gmax:
                        active[t] = 0
                        all_active = False

        if not all_active:
            _reconstruct(kstack, beta, y, alpha, fj, f, active, m, n)
        if m == 1:
            # fj duplicates f for a single kernel; rebuild it once at exit
            for t in range(n):
                fj[0, t] = f[t]

        # final KKT gap for the caller
        gmax = -INFINITY
        gmin = INFINITY
        for t in range(n):
            gt = y[t] - f[t]
            if (y[t] > 0 and alpha[t] < c_bound) or (y[t] < 0 and alpha[t] > 0.0):
                if gt > gmax:
                    gmax = gt
            if (y[t] < 0 and alpha[t] < c_bound) or (y[t] > 0 and alpha[t] > 0.0):
                if gt < gmin:
                    gmin = gt

    return it, gmax - gmin
