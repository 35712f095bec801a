"""Inner-loop kernels for the accelerated proximal-gradient solver.

Each kernel exists twice with identical semantics: a numba-compiled version
(parallel over rows; rows never share state, so results do not depend on the
thread schedule) and a vectorized numpy twin used when the compiled path is
disabled. `trendnets.decomp` picks one per solve via `backend.active_backend`.

One iteration, applied row by row:

    R = W - Y
    G = Y + (1/L) * Dt(D(R))          # gradient step on the smooth term
    S_new = soft_threshold(G, tau)     # tau = lambda / L
    Y_new = S_new + beta * (S_new - S_old)

with D the forward column-difference map and Dt its adjoint. The kernel also
returns per-row squared change and squared norm so the caller can evaluate
the stopping rule without another pass.
"""

from __future__ import annotations

import numpy as np

try:
    from numba import njit, prange

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    HAS_NUMBA = False


def fista_iteration_numpy(W, S, Y, beta, inv_L, tau, delta2, snorm2):
    """One solver iteration on all rows; updates S and Y in place."""
    R = W - Y
    DR = R[:, 1:] - R[:, :-1]
    G = np.empty_like(Y)
    G[:, 0] = -DR[:, 0]
    G[:, 1:-1] = DR[:, :-1] - DR[:, 1:]
    G[:, -1] = DR[:, -1]
    G *= inv_L
    G += Y
    S_new = np.sign(G) * np.maximum(np.abs(G) - tau, 0.0)
    np.einsum("ij,ij->i", S, S, out=snorm2)
    S_new -= S
    np.einsum("ij,ij->i", S_new, S_new, out=delta2)
    S_new += S  # back to the actual iterate
    Y[...] = S_new + beta * (S_new - S)
    S[...] = S_new


if HAS_NUMBA:

    @njit(parallel=True, cache=True)
    def fista_iteration_numba(W, S, Y, beta, inv_L, tau, delta2, snorm2):
        n_rows, T = W.shape
        for i in prange(n_rows):
            # carry the residual and forward difference as scalars so each
            # element of W, Y, S is read exactly once; Y[i, t] may be
            # overwritten at step t because later steps only read t+1 onward
            d_prev = 0.0
            r_cur = W[i, 0] - Y[i, 0]
            dsq = 0.0
            ssq = 0.0
            for t in range(T):
                if t < T - 1:
                    r_next = W[i, t + 1] - Y[i, t + 1]
                    d_next = r_next - r_cur
                else:
                    r_next = 0.0
                    d_next = 0.0
                if t == 0:
                    a = -d_next
                elif t == T - 1:
                    a = d_prev
                else:
                    a = d_prev - d_next
                g = Y[i, t] + inv_L * a
                ag = abs(g) - tau
                if ag > 0.0:
                    s = ag if g > 0.0 else -ag
                else:
                    s = 0.0
                s_old = S[i, t]
                diff = s - s_old
                dsq += diff * diff
                ssq += s_old * s_old
                S[i, t] = s
                Y[i, t] = s + beta * diff
                d_prev = d_next
                r_cur = r_next
            delta2[i] = dsq
            snorm2[i] = ssq


def get_iteration_kernel(backend: str):
    if backend == "numba":
        return fista_iteration_numba
    return fista_iteration_numpy
