"""Compiled inner loops.

Every run is integrated independently in a fixed summation order, so a
run's result never depends on which other runs share its batch.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def _drive(Jf, w, sig, A):
    n = Jf.shape[0]
    for i in range(n):
        acc = 0.0
        for j in range(n):
            acc += Jf[i, j] * (w[j] * sig[j])
        A[i] = acc


@njit(cache=True)
def anneal_batch(J, v0, scale, ev_step, ev_col, ev_weight, w0, trace):
    """Integrate ``R`` independent runs of the node ODE.

    The drive of node ``i`` at step ``s`` is ``scale[s] * A[i]`` with
    ``A[i] = sum_j J[i, j] * w[j] * sig[j]``; column weights ``w`` change only
    at schedule events, so ``A`` is rebuilt only after a flip or an event.
    Energies are tracked exactly in integers against the programmed ``J``.
    """
    R, n = v0.shape
    S = scale.shape[0]
    E = ev_step.shape[0]
    Jf = J.astype(np.float64)

    out_sig = np.empty((R, n), dtype=np.int64)
    out_v = np.empty((R, n), dtype=np.float64)
    out_H = np.empty(R, dtype=np.int64)
    out_H0 = np.empty(R, dtype=np.int64)
    out_flips = np.empty(R, dtype=np.int64)
    tr_len = S if trace else 0
    tr_H = np.empty((R, tr_len + 1), dtype=np.int64)
    tr_flips = np.zeros((R, tr_len), dtype=np.int32)

    sig = np.empty(n, dtype=np.int64)
    sigf = np.empty(n, dtype=np.float64)
    F = np.empty(n, dtype=np.int64)
    A = np.empty(n, dtype=np.float64)

    for r in range(R):
        v = v0[r].copy()
        w = w0.copy()
        for i in range(n):
            sig[i] = 1 if v[i] >= 0.5 else -1
            sigf[i] = sig[i]
        H2 = 0
        for i in range(n):
            acc = 0
            for j in range(n):
                acc += J[i, j] * sig[j]
            F[i] = acc
            H2 += sig[i] * acc
        H = -H2 // 2
        out_H0[r] = H
        tr_H[r, 0] = H
        _drive(Jf, w, sigf, A)

        flips = 0
        e = 0
        for s in range(S):
            c = scale[s]
            for i in range(n):
                x = v[i] + c * A[i]
                if x < 0.0:
                    x = 0.0
                elif x > 1.0:
                    x = 1.0
                v[i] = x
            nflip = 0
            for i in range(n):
                new = 1 if v[i] >= 0.5 else -1
                if new != sig[i]:
                    H += 2 * sig[i] * F[i]
                    for k in range(n):
                        F[k] -= 2 * sig[i] * J[k, i]
                    sig[i] = new
                    sigf[i] = new
                    nflip += 1
            dirty = nflip > 0
            while e < E and ev_step[e] == s + 1:
                w[ev_col[e]] = ev_weight[e]
                e += 1
                dirty = True
            if dirty:
                _drive(Jf, w, sigf, A)
            flips += nflip
            if trace:
                tr_H[r, s + 1] = H
                tr_flips[r, s] = nflip

        for i in range(n):
            out_sig[r, i] = sig[i]
            out_v[r, i] = v[i]
        out_H[r] = H
        out_flips[r] = flips
    return out_sig, out_v, out_H, out_H0, out_flips, tr_H, tr_flips


@njit(cache=True)
def tabu_kernel(J, starts, tenure, max_iterations):
    """Single-flip best-improvement Tabu search with aspiration.

    Runs one search per row of ``starts``.  Returns per-restart best energy,
    best configuration and the incumbent energy after every iteration.
    """
    R, n = starts.shape
    best_H = np.empty(R, dtype=np.int64)
    best_sig = np.empty((R, n), dtype=np.int64)
    history = np.empty((R, max_iterations), dtype=np.int64)
    F = np.empty(n, dtype=np.int64)
    tabu_until = np.empty(n, dtype=np.int64)

    for r in range(R):
        sig = starts[r].copy()
        H2 = 0
        for i in range(n):
            acc = 0
            for j in range(n):
                acc += J[i, j] * sig[j]
            F[i] = acc
            H2 += sig[i] * acc
        H = -H2 // 2
        inc = H
        inc_sig = sig.copy()
        for i in range(n):
            tabu_until[i] = 0

        for it in range(max_iterations):
            pick = -1
            pick_d = 0
            any_pick = -1
            any_d = 0
            for k in range(n):
                d = 2 * sig[k] * F[k]
                if any_pick < 0 or d < any_d:
                    any_pick = k
                    any_d = d
                allowed = tabu_until[k] <= it or H + d < inc
                if allowed and (pick < 0 or d < pick_d):
                    pick = k
                    pick_d = d
            if pick < 0:
                pick = any_pick
                pick_d = any_d
            H += pick_d
            s_old = sig[pick]
            for k in range(n):
                F[k] -= 2 * s_old * J[k, pick]
            sig[pick] = -s_old
            tabu_until[pick] = it + 1 + tenure
            if H < inc:
                inc = H
                for k in range(n):
                    inc_sig[k] = sig[k]
            history[r, it] = inc

        best_H[r] = inc
        best_sig[r] = inc_sig
    return best_H, best_sig, history


@njit(cache=True)
def brute_force_kernel(J):
    """Exact minimum over all states with spin 0 fixed to +1 (Gray-code walk).

    Fixing spin 0 loses nothing: ``H(s) == H(-s)`` and the mirror with
    ``s_0 = +1`` is always the lexicographically smaller bit pattern, where
    bit ``i`` is 1 for ``s_i = -1`` and bit 0 is most significant.
    Ties are resolved toward the smallest such pattern.
    """
    n = J.shape[0]
    sig = np.ones(n, dtype=np.int64)
    F = np.empty(n, dtype=np.int64)
    H2 = 0
    for i in range(n):
        acc = 0
        for j in range(n):
            acc += J[i, j]
        F[i] = acc
        H2 += acc
    H = -H2 // 2
    key = 0  # lexicographic key of the current pattern
    best_H = H
    best_key = key
    total = 1 << (n - 1) if n > 0 else 1
    for g in range(1, total):
        # free spins are 1..n-1; Gray code bit b toggles spin n-1-b
        b = 0
        x = g
        while (x & 1) == 0:
            x >>= 1
            b += 1
        k = n - 1 - b
        H += 2 * sig[k] * F[k]
        s_old = sig[k]
        for i in range(n):
            F[i] -= 2 * s_old * J[i, k]
        sig[k] = -s_old
        key ^= 1 << b
        if H < best_H or (H == best_H and key < best_key):
            best_H = H
            best_key = key
    best = np.ones(n, dtype=np.int64)
    for b in range(n - 1):
        if (best_key >> b) & 1:
            best[n - 1 - b] = -1
    return best_H, best, total
